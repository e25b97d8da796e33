//! Optimal additive adjustments of the posterior mean.
//!
//! The rollout rule is `1{m_tilde + delta_r > 0}` and the operational plug-in
//! is `m_tilde + delta_o`. Residuals of the two first-order conditions:
//!
//! ```text
//! rollout(r, o)      = E[Pi(-r + o | tau) | m_tilde = -r]
//! operational(r, o)  = E[Pi^(1,0)(m_tilde + o | tau) 1{m_tilde > -r}]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{PatroError, Result};
use crate::expectation::{Expectations, Interval};
use crate::roots::bracketed_root;
use crate::scalar::Real;
use crate::snr::SnrModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub root_tol: f64,
    pub alt_tol: f64,
    pub max_alt_iters: usize,
    /// Defaults to `10 sqrt(v_tilde)`.
    pub bracket_halfwidth: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { root_tol: 1e-10, alt_tol: 1e-9, max_alt_iters: 100, bracket_halfwidth: None }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.root_tol > 0.0 && self.alt_tol > 0.0) {
            return Err(crate::error::invalid("solver", "tolerances must be positive"));
        }
        if self.max_alt_iters == 0 {
            return Err(crate::error::invalid("max_alt_iters", "must be positive"));
        }
        if let Some(h) = self.bracket_halfwidth {
            if !(h > 0.0) {
                return Err(crate::error::invalid("bracket_halfwidth", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Output of the alternating scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustmentPair<T> {
    pub delta_r: T,
    pub delta_o: T,
    pub iterations: usize,
    pub converged: bool,
    /// (rollout, operational) residuals at the returned pair.
    pub residuals: (T, T),
    /// Iterates `(r_k, o_k)` starting from `(0, 0)`.
    pub history: Vec<(T, T)>,
}

impl<T: Real> AdjustmentPair<T> {
    /// A pair that is not the output of the alternating scheme.
    pub fn fixed(delta_r: T, delta_o: T) -> Self {
        Self {
            delta_r,
            delta_o,
            iterations: 0,
            converged: true,
            residuals: (T::zero(), T::zero()),
            history: vec![(delta_r, delta_o)],
        }
    }

    /// `|x_{k+1} - x*| / |x_k - x*|` in the l1 norm, for iterates not yet at
    /// the fixed point.
    pub fn error_ratios(&self) -> Vec<T> {
        let dist = |&(r, o): &(T, T)| (r - self.delta_r).abs() + (o - self.delta_o).abs();
        let errors: Vec<T> = self.history.iter().map(dist).collect();
        errors
            .windows(2)
            .take_while(|w| w[0] > T::zero() && w[1] > T::zero())
            .map(|w| w[1] / w[0])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    Substitutes,
    Complements,
    Neutral,
}

impl std::fmt::Display for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Substitutes => "substitutes",
            Self::Complements => "complements",
            Self::Neutral => "neutral",
        })
    }
}

/// Compares the rollout adjustment with and without an operational one.
pub fn classify_interaction<T: Real>(single_r: T, dual_r: T) -> Interaction {
    let tie = T::lit(1e-12) * T::one().max(single_r.abs());
    if dual_r.abs() < single_r.abs() - tie {
        Interaction::Substitutes
    } else if dual_r.abs() > single_r.abs() + tie {
        Interaction::Complements
    } else {
        Interaction::Neutral
    }
}

/// Residual of the rollout condition at rollout shift `r`, operational shift `o`.
pub fn rollout_residual<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, r: T, o: T) -> Result<T> {
    let x = -r + o;
    ex.conditional(-r, |t| model.value(x, t))
}

/// Residual of the operational condition at rollout shift `r`, operational shift `o`.
pub fn operational_residual<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    r: T,
    o: T,
) -> Result<T> {
    ex.outer(Interval::above(-r), &[], |m| ex.try_conditional(m, |t| model.partial(1, 0, m + o, t)))
}

fn tolerance<T: Real, M: SnrModel<T> + ?Sized>(model: &M, cfg: &SolverConfig) -> T {
    T::lit(cfg.root_tol) * T::from_usize_lossy(model.scale_n())
}

fn half_width<T: Real>(ex: &Expectations<T>, cfg: &SolverConfig) -> T {
    cfg.bracket_halfwidth.map_or_else(|| T::lit(10.0) * ex.belief().sd_tilde(), T::lit)
}

fn xtol<T: Real>(cfg: &SolverConfig) -> T {
    T::lit(cfg.root_tol * 1e-3)
}

fn finite_or_zero<T: Real>(x: Result<T>) -> T {
    x.ok().filter(|v| v.is_finite()).unwrap_or_else(T::zero)
}

/// Solves the rollout condition in `r` for a fixed operational shift `o`.
pub fn solve_rollout<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    o: T,
    center: T,
    cfg: &SolverConfig,
) -> Result<T> {
    let what = "rollout condition";
    let root = bracketed_root(what, |r| rollout_residual(model, ex, r, o), center, half_width(ex, cfg), xtol(cfg))?;
    if root.fx.abs() > tolerance(model, cfg) {
        return Err(PatroError::RootNotConverged { what, iterations: root.evaluations });
    }
    Ok(root.x)
}

/// Single rollout adjustment (no operational shift).
pub fn solve_rollout_single<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    cfg: &SolverConfig,
) -> Result<T> {
    let center = finite_or_zero(rollout_asymptotic(model, ex));
    solve_rollout(model, ex, T::zero(), center, cfg)
}

/// `Pi^(0,2)(0|0) v_tilde / (2 Pi^(0,1)(0|0))`.
pub fn rollout_asymptotic<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>) -> Result<T> {
    let d01 = model.partial(0, 1, T::zero(), T::zero())?;
    if d01 == T::zero() {
        return Err(PatroError::Degenerate { what: "rollout approximation", reason: "Pi^(0,1)(0|0) = 0".into() });
    }
    let d02 = model.partial(0, 2, T::zero(), T::zero())?;
    Ok(d02 * ex.belief().v_tilde / (T::two() * d01))
}

/// Operational adjustment given a rollout shift. Returns 0 when the payoff
/// does not depend on the estimate.
pub fn solve_operational<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    r_shift: T,
    cfg: &SolverConfig,
) -> Result<T> {
    solve_operational_from(model, ex, r_shift, None, cfg)
}

fn solve_operational_from<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    r_shift: T,
    center: Option<T>,
    cfg: &SolverConfig,
) -> Result<T> {
    if !model.depends_on_estimate() {
        return Ok(T::zero());
    }
    let what = "operational condition";
    let center = center.unwrap_or_else(|| finite_or_zero(operational_asymptotic(model, ex, r_shift)));
    let root =
        bracketed_root(what, |o| operational_residual(model, ex, r_shift, o), center, half_width(ex, cfg), xtol(cfg))?;
    if root.fx.abs() > tolerance(model, cfg) {
        return Err(PatroError::RootNotConverged { what, iterations: root.evaluations });
    }
    Ok(root.x)
}

/// `-v_tilde E[Pi^(1,2)(tau|tau); m_tilde > -r] / (2 E[Pi^(2,0)(tau|tau); m_tilde > -r])`.
pub fn operational_asymptotic<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    r_shift: T,
) -> Result<T> {
    let truncated = |i, j| ex.outer(Interval::above(-r_shift), &[], |m| ex.try_conditional(m, |t| model.partial(i, j, t, t)));
    let den = truncated(2, 0)?;
    let num = truncated(1, 2)?;
    if den == T::zero() {
        if num == T::zero() {
            return Ok(T::zero());
        }
        return Err(PatroError::Degenerate {
            what: "operational approximation",
            reason: "expected curvature Pi^(2,0) vanishes while the cross-curvature does not".into(),
        });
    }
    Ok(-ex.belief().v_tilde * num / (T::two() * den))
}

/// Alternates the operational and rollout conditions from `(0, 0)` until
/// successive iterates move less than `alt_tol` in the l1 norm.
pub fn solve_dual<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    cfg: &SolverConfig,
) -> Result<AdjustmentPair<T>> {
    cfg.validate()?;
    let alt_tol = T::lit(cfg.alt_tol);
    let (mut r, mut o) = (T::zero(), T::zero());
    let mut history = vec![(r, o)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_alt_iters {
        iterations += 1;
        let o_next = solve_operational_from(model, ex, r, (iterations > 1).then_some(o), cfg)?;
        let center = if iterations > 1 { r } else { finite_or_zero(rollout_asymptotic(model, ex)) };
        let r_next = solve_rollout(model, ex, o_next, center, cfg)?;
        let step = (r_next - r).abs() + (o_next - o).abs();
        r = r_next;
        o = o_next;
        history.push((r, o));
        if step < alt_tol {
            converged = true;
            break;
        }
    }
    let residuals = (rollout_residual(model, ex, r, o)?, operational_residual(model, ex, r, o)?);
    let tol = tolerance(model, cfg);
    let operational_ok = !model.depends_on_estimate() || residuals.1.abs() <= tol;
    Ok(AdjustmentPair {
        delta_r: r,
        delta_o: o,
        iterations,
        converged: converged && residuals.0.abs() <= tol && operational_ok,
        residuals,
        history,
    })
}

/// Every adjustment for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustmentSummary<T> {
    pub single_r: T,
    pub single_o: T,
    pub asymptotic_r: Option<T>,
    pub asymptotic_o: Option<T>,
    pub dual: AdjustmentPair<T>,
    pub interaction: Interaction,
}

pub fn solve_all<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    ex: &Expectations<T>,
    cfg: &SolverConfig,
) -> Result<AdjustmentSummary<T>> {
    let single_r = solve_rollout_single(model, ex, cfg)?;
    let single_o = solve_operational(model, ex, T::zero(), cfg)?;
    let dual = solve_dual(model, ex, cfg)?;
    Ok(AdjustmentSummary {
        single_r,
        single_o,
        asymptotic_r: rollout_asymptotic(model, ex).ok(),
        asymptotic_o: operational_asymptotic(model, ex, T::zero()).ok(),
        interaction: classify_interaction(single_r, dual.delta_r),
        dual,
    })
}
