//! Synthetic completely randomized experiments and the end-to-end pipeline
//! from data to realized regret.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{BeliefSystem, ExperimentDesign, NoiseModel, PriorBelief};
use crate::error::{invalid, Result};
use crate::expectation::{McEstimate, RunningMean};
use crate::regret::{RegretAccumulator, RegretBreakdown, RegretErrors};
use crate::snr::{NewsvendorSnr, SnrModel};

/// Outcomes `(y, treated)` of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSample {
    pub outcomes: Vec<(f64, bool)>,
    pub n1: usize,
    pub n0: usize,
}

/// `n1 = round(n gamma / (1 + gamma))`, `n0 = n - n1`.
pub fn group_sizes(design: &ExperimentDesign<f64>) -> Result<(usize, usize)> {
    let n1 = (design.n as f64 * design.gamma / (1.0 + design.gamma)).round() as usize;
    if n1 == 0 || n1 >= design.n {
        return Err(invalid("n", format!("{} units cannot form both groups at gamma = {}", design.n, design.gamma)));
    }
    Ok((n1, design.n - n1))
}

/// The design with `gamma` replaced by the realized `n1 / n0`.
pub fn realized_design(design: &ExperimentDesign<f64>) -> Result<ExperimentDesign<f64>> {
    let (n1, n0) = group_sizes(design)?;
    Ok(ExperimentDesign { n: design.n, gamma: n1 as f64 / n0 as f64 })
}

fn draw_sample<R: rand::Rng + ?Sized>(
    n1: usize,
    n0: usize,
    noise: &NoiseModel<f64>,
    tau: f64,
    rng: &mut R,
) -> Result<ExperimentSample> {
    let mut w: Vec<bool> = (0..n1 + n0).map(|i| i < n1).collect();
    w.shuffle(rng);
    let eps = Normal::new(0.0, noise.sigma_eps).map_err(|e| invalid("sigma_eps", e.to_string()))?;
    let outcomes = w
        .into_iter()
        .map(|treated| (noise.b + if treated { tau } else { 0.0 } + eps.sample(rng), treated))
        .collect();
    Ok(ExperimentSample { outcomes, n1, n0 })
}

/// One experiment with exactly `n1` treated units drawn uniformly.
pub fn generate(design: &ExperimentDesign<f64>, noise: &NoiseModel<f64>, tau_true: f64, seed: u64) -> Result<ExperimentSample> {
    let (n1, n0) = group_sizes(design)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_sample(n1, n0, noise, tau_true, &mut rng)
}

/// Difference of treated and control sample means.
pub fn naive_estimate(sample: &ExperimentSample) -> Result<f64> {
    let (mut s1, mut c1, mut s0, mut c0) = (0.0, 0usize, 0.0, 0usize);
    for &(y, w) in &sample.outcomes {
        if w {
            s1 += y;
            c1 += 1;
        } else {
            s0 += y;
            c0 += 1;
        }
    }
    if c1 == 0 || c0 == 0 {
        return Err(invalid("sample", "both groups must be nonempty"));
    }
    Ok(s1 / c1 as f64 - s0 / c0 as f64)
}

/// Realized regret over simulated experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    pub replications: usize,
    pub regret: RegretBreakdown<f64>,
    pub std_errors: RegretErrors,
    /// Mean and variance of `m_tilde - tau` across replications.
    pub error_mean: f64,
    pub error_variance: f64,
    /// Sample correlation of `m_tilde - tau` and `m_tilde`.
    pub error_correlation: f64,
}

/// Replications per parallel work item.
const CHUNK: usize = 4096;

#[derive(Default)]
struct Partial {
    regret: RegretAccumulator,
    error: RunningMean,
    mean: RunningMean,
    // Co-moment of (error, m_tilde) about the running means.
    co: f64,
}

impl Partial {
    fn push(&mut self, e: f64, m: f64) {
        let de = e - self.error.mean();
        self.error.push(e);
        self.mean.push(m);
        self.co += de * (m - self.mean.mean());
    }

    fn merge(&mut self, other: &Partial) {
        let (na, nb) = (self.error.count() as f64, other.error.count() as f64);
        if nb > 0.0 {
            let de = other.error.mean() - self.error.mean();
            let dm = other.mean.mean() - self.mean.mean();
            self.co += other.co + de * dm * na * nb / (na + nb);
        }
        self.regret.merge(&other.regret);
        self.error.merge(&other.error);
        self.mean.merge(&other.mean);
    }
}

/// Draws `tau` from the prior, runs the experiment, updates the belief,
/// applies the adjusted rule and records the realized regret. Replication
/// `i` uses stream `i` of a generator seeded with `seed`.
pub fn run_pipeline<M: SnrModel<f64> + ?Sized>(
    model: &M,
    prior: PriorBelief<f64>,
    design: ExperimentDesign<f64>,
    noise: NoiseModel<f64>,
    (delta_r, delta_o): (f64, f64),
    replications: usize,
    seed: u64,
) -> Result<PipelineResult> {
    if replications < 100 {
        return Err(invalid("replications", "at least 100 replications are required"));
    }
    let (n1, n0) = group_sizes(&design)?;
    let belief = BeliefSystem::new(prior, realized_design(&design)?, noise)?;
    let prior_sd = prior.v0.sqrt();
    let chunks = replications.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Partial> {
            let mut part = Partial::default();
            for i in c * CHUNK..replications.min((c + 1) * CHUNK) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let z: f64 = StandardNormal.sample(&mut rng);
                let tau = prior.m0 + prior_sd * z;
                let sample = draw_sample(n1, n0, &noise, tau, &mut rng)?;
                let m = belief.posterior_update(naive_estimate(&sample)?).m_tilde;
                part.regret.push::<f64, M>(model, tau, m, delta_r, delta_o);
                part.push(m - tau, m);
            }
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = Partial::default();
    parts.iter().for_each(|p| all.merge(p));
    let (regret, std_errors) = all.regret.finish();
    let n = all.error.count() as f64;
    let cov = all.co / (n - 1.0);
    Ok(PipelineResult {
        replications,
        regret,
        std_errors,
        error_mean: all.error.mean(),
        error_variance: all.error.variance(),
        error_correlation: cov / (all.error.variance() * all.mean.variance()).sqrt(),
    })
}

/// Simulates the newsvendor payoff difference from raw demand draws with
/// common random numbers for the treated and status-quo systems.
pub fn simulate_newsvendor_snr(model: &NewsvendorSnr<f64>, tau_hat: f64, tau: f64, draws: usize, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profit = |q: f64, x: f64| model.p * x - model.c_o * (q - x).max(0.0) - model.c_u * (x - q).max(0.0);
    let (q1, q0) = (model.order_quantity(tau_hat), model.order_quantity(0.0));
    let n = model.scale_n as f64;
    let mut acc = RunningMean::default();
    for _ in 0..draws {
        let z: f64 = StandardNormal.sample(&mut rng);
        let noise = model.sigma_eps * z;
        acc.push(n * (profit(q1, model.mu + tau + noise) - profit(q0, model.mu + noise)));
    }
    acc.finish()
}
