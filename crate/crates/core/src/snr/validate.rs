//! Numerical checks of the regularity conditions the solvers rely on.

use serde::Serialize;

use super::SnrModel;
use crate::error::Result;
use crate::expectation::{Expectations, Interval};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseStatus {
    Pass,
    Fail,
    /// Checked only at finitely many points.
    SpotChecked,
    /// Vacuous for this model.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub clause: String,
    pub title: String,
    pub status: ClauseStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub model: String,
    pub clauses: Vec<ClauseResult>,
    /// Sign of `Pi^(1,2)(tau|tau)` on the grid: -1, 0, 1, or `None` if mixed.
    pub cross_curvature_sign: Option<i8>,
    /// `Pi^(1,2)(tau|tau) / Pi^(2,0)(tau|tau)` if constant on the grid.
    pub curvature_ratio: Option<f64>,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    /// No clause failed.
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.status != ClauseStatus::Fail)
    }

    pub fn clause(&self, id: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == id)
    }
}

fn result(clause: &str, title: &str, status: ClauseStatus, detail: String) -> ClauseResult {
    ClauseResult { clause: clause.into(), title: title.into(), status, detail }
}

fn pass_or_fail(ok: bool) -> ClauseStatus {
    if ok {
        ClauseStatus::Pass
    } else {
        ClauseStatus::Fail
    }
}

/// Sign of a value relative to a tolerance.
fn sign_of(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Checks each regularity clause on `grid` and reports, never aborting.
///
/// Expected concavity is sampled at truncation points taken from the grid
/// and shifts `delta in {-v/10, 0, v/10, v/2}` with `v = v_tilde`, the
/// neighborhood in which adjustments live. The two local conditions of the
/// alternating scheme are evaluated at the unadjusted point `(0, 0)`.
pub fn validate_assumptions<T: Real, M: SnrModel<T> + ?Sized>(
    model: &M,
    expectations: &Expectations<T>,
    grid: &[T],
) -> AssumptionReport {
    let n = model.scale_n() as f64;
    let mut report = AssumptionReport {
        model: model.name().to_string(),
        clauses: Vec::new(),
        cross_curvature_sign: None,
        curvature_ratio: None,
        notes: Vec::new(),
    };
    if grid.is_empty() {
        report.notes.push("empty grid: nothing checked".into());
        return report;
    }
    let belief = expectations.belief();
    let v = belief.v_tilde;
    let estimate_matters = model.depends_on_estimate();

    report.clauses.push(clause_i(model, grid, n, estimate_matters));
    report.clauses.push(if estimate_matters {
        clause_ii(model, expectations, grid, v)
    } else {
        result("ii", "expected concavity", ClauseStatus::NotApplicable, "payoff does not depend on the estimate".into())
    });
    report.clauses.push(clause_iii(model, grid, n));
    report.clauses.push(clause_iv(model, grid));
    report.clauses.push(clause_va(model, expectations, grid));
    report.clauses.push(clause_vb(model, expectations, grid));
    let (c1, c2) = local_conditions(model, expectations);
    report.clauses.push(c1);
    report.clauses.push(c2);

    cross_curvature(model, grid, n, &mut report);
    report
}

fn clause_i<T: Real, M: SnrModel<T> + ?Sized>(model: &M, grid: &[T], n: f64, estimate_matters: bool) -> ClauseResult {
    let title = "first-order condition and curvature at truth";
    let mut worst_foc = 0.0f64;
    let mut max_curv = f64::NEG_INFINITY;
    for &t in grid {
        match (model.partial(1, 0, t, t), model.partial(2, 0, t, t)) {
            (Ok(d1), Ok(d2)) => {
                worst_foc = worst_foc.max(d1.as_f64().abs());
                max_curv = max_curv.max(d2.as_f64());
            }
            (Err(e), _) | (_, Err(e)) => return result("i", title, ClauseStatus::Fail, e.to_string()),
        }
    }
    let foc_ok = worst_foc <= 1e-8 * n;
    if !estimate_matters {
        return result(
            "i",
            title,
            pass_or_fail(foc_ok && max_curv == 0.0),
            format!("max |Pi^(1,0)(t|t)| = {worst_foc:e}; payoff flat in the estimate, curvature identically zero"),
        );
    }
    result(
        "i",
        title,
        pass_or_fail(foc_ok && max_curv < 0.0),
        format!("max |Pi^(1,0)(t|t)| = {worst_foc:e}; max Pi^(2,0)(t|t) = {max_curv:e}"),
    )
}

fn clause_ii<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, grid: &[T], v: T) -> ClauseResult {
    let title = "expected concavity";
    let k = grid.len();
    let picks: Vec<T> = if k <= 5 { grid.to_vec() } else { (0..5).map(|i| grid[i * (k - 1) / 4]).collect() };
    let shifts = [-v / T::lit(10.0), T::zero(), v / T::lit(10.0), v * T::half()];
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for &r in &picks {
        for &d in &shifts {
            let value =
                ex.outer(Interval::above(-r), &[], |m| ex.try_conditional(m, |t| model.partial(2, 0, m + d, t)));
            match value {
                Ok(x) => {
                    let x = x.as_f64();
                    worst = worst.max(x);
                    if !(x < 0.0) {
                        failures.push(format!("(r={}, delta={}) -> {x:e}", r.as_f64(), d.as_f64()));
                    }
                }
                Err(e) => failures.push(format!("(r={}, delta={}): {e}", r.as_f64(), d.as_f64())),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{} pairs sampled; max truncated E[Pi^(2,0)] = {worst:e}", picks.len() * shifts.len())
    } else {
        format!("non-negative at {}", failures.join("; "))
    };
    result("ii", title, pass_or_fail(failures.is_empty()), detail)
}

fn clause_iii<T: Real, M: SnrModel<T> + ?Sized>(model: &M, grid: &[T], n: f64) -> ClauseResult {
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<f64> = sorted.iter().map(|&t| model.oracle_value(t).as_f64()).collect();
    let tol = 1e-12 * n;
    let drops: Vec<String> = sorted
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, w)| w[1] < w[0] - tol)
        .map(|(t, _)| format!("[{}, {}]", t[0].as_f64(), t[1].as_f64()))
        .collect();
    let detail = if drops.is_empty() {
        "oracle payoff nondecreasing on the grid".to_string()
    } else {
        format!("oracle payoff decreases on {}", drops.join(", "))
    };
    result("iii", "monotone oracle payoff", pass_or_fail(drops.is_empty()), detail)
}

fn clause_iv<T: Real, M: SnrModel<T> + ?Sized>(model: &M, grid: &[T]) -> ClauseResult {
    let title = "growth of partial derivatives";
    let mut bad = None;
    'outer: for &x in grid {
        for &t in grid {
            for i in 0..=3u32 {
                for j in 0..=(3 - i) {
                    match model.partial(i, j, x, t) {
                        Ok(d) if d.is_finite() => {}
                        Ok(_) => {
                            bad = Some(format!("Pi^({i},{j}) not finite at ({}, {})", x.as_f64(), t.as_f64()));
                            break 'outer;
                        }
                        Err(e) => {
                            bad = Some(e.to_string());
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    match bad {
        Some(d) => result("iv", title, ClauseStatus::Fail, d),
        None => result(
            "iv",
            title,
            ClauseStatus::SpotChecked,
            "not machine-checkable globally; spot-checked on grid (all partials finite)".into(),
        ),
    }
}

/// `V'(m, 0) = E[Pi^(1,0)(m|tau) + Pi^(0,1)(m|tau) | m_tilde = m]`.
fn value_slope<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, m: T, shift: T) -> Result<T> {
    let x = m + shift;
    ex.try_conditional(m, |t| Ok(model.partial(1, 0, x, t)? + model.partial(0, 1, x, t)?))
}

fn clause_va<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, grid: &[T]) -> ClauseResult {
    let mut failures = Vec::new();
    let mut min_slope = f64::INFINITY;
    for &m in grid {
        match value_slope(model, ex, m, T::zero()) {
            Ok(s) => {
                let s = s.as_f64();
                min_slope = min_slope.min(s);
                if !(s > 0.0) {
                    failures.push(format!("{}", m.as_f64()));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", m.as_f64())),
        }
    }
    let detail = if failures.is_empty() {
        format!("min V'(m) on grid = {min_slope:e}")
    } else {
        format!("V'(m) <= 0 at m in {{{}}}", failures.join(", "))
    };
    result("v-a", "posterior expected payoff increasing", pass_or_fail(failures.is_empty()), detail)
}

fn clause_vb<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>, grid: &[T]) -> ClauseResult {
    let title = "posterior expected payoff boundary signs";
    let lo = grid.iter().copied().fold(T::infinity(), T::min);
    let hi = grid.iter().copied().fold(T::neg_infinity(), T::max);
    let reach = T::lit(10.0) * ex.belief().prior.v0.sqrt();
    let (m_lo, m_hi) = (lo - reach, hi + reach);
    let v = |m: T| ex.conditional(m, |t| model.value(m, t));
    match (v(m_lo), v(m_hi)) {
        (Ok(a), Ok(b)) => result(
            "v-b",
            title,
            pass_or_fail(a < T::zero() && b > T::zero()),
            format!("V({}) = {:e}, V({}) = {:e}", m_lo.as_f64(), a.as_f64(), m_hi.as_f64(), b.as_f64()),
        ),
        (Err(e), _) | (_, Err(e)) => result("v-b", title, ClauseStatus::Fail, e.to_string()),
    }
}

/// Local curvature of the operational mapping and nondegeneracy of the
/// rollout mapping at `(r, o) = (0, 0)`, normalized by the payoff scale.
pub fn local_conditions<T: Real, M: SnrModel<T> + ?Sized>(model: &M, ex: &Expectations<T>) -> (ClauseResult, ClauseResult) {
    let n = T::from_usize_lossy(model.scale_n());
    let c1_title = "local curvature of the operational mapping";
    let c1 = if !model.depends_on_estimate() {
        result("C1", c1_title, ClauseStatus::NotApplicable, "operational condition vacuous".into())
    } else {
        let mass = ex.outer(Interval::above(T::zero()), &[], |_| Ok(T::one()));
        let curv = ex.outer(Interval::above(T::zero()), &[], |m| {
            ex.try_conditional(m, |t| model.partial(2, 0, m, t))
        });
        match (mass, curv) {
            (Ok(p), Ok(c)) => {
                let kappa = -c / (p * n);
                result("C1", c1_title, pass_or_fail(kappa > T::zero()), format!("kappa_o = {:e}", kappa.as_f64()))
            }
            (Err(e), _) | (_, Err(e)) => result("C1", c1_title, ClauseStatus::Fail, e.to_string()),
        }
    };
    let c2_title = "nondegeneracy of the rollout mapping";
    let c2 = match value_slope(model, ex, T::zero(), T::zero()) {
        Ok(s) => {
            let kappa = s.abs() / n;
            result("C2", c2_title, pass_or_fail(kappa > T::zero()), format!("kappa_r = {:e}", kappa.as_f64()))
        }
        Err(e) => result("C2", c2_title, ClauseStatus::Fail, e.to_string()),
    };
    (c1, c2)
}

fn cross_curvature<T: Real, M: SnrModel<T> + ?Sized>(model: &M, grid: &[T], n: f64, report: &mut AssumptionReport) {
    let mut signs = Vec::new();
    let mut ratios = Vec::new();
    for &t in grid {
        let (Ok(d12), Ok(d20)) = (model.partial(1, 2, t, t), model.partial(2, 0, t, t)) else {
            return;
        };
        let (d12, d20) = (d12.as_f64(), d20.as_f64());
        signs.push(sign_of(d12, 1e-12 * n));
        if d20 != 0.0 {
            ratios.push(d12 / d20);
        }
    }
    let sign = signs.first().copied().filter(|s| signs.iter().all(|x| x == s));
    report.cross_curvature_sign = sign;
    if ratios.len() == grid.len() {
        let first = ratios[0];
        if ratios.iter().all(|r| (r - first).abs() <= 1e-9 * first.abs().max(1e-12)) {
            report.curvature_ratio = Some(first);
        }
    }
    let word = match sign {
        Some(1) => "positive",
        Some(-1) => "negative",
        Some(_) => "zero",
        None => "of mixed sign",
    };
    let mut note = format!("cross-curvature Pi^(1,2)(t|t) is {word} on the grid");
    if let Some(eta) = report.curvature_ratio {
        note.push_str(&format!("; ratio to Pi^(2,0)(t|t) is constant at {eta}"));
    }
    if let Some(s) = sign.filter(|&s| s != 0) {
        let dir = if s > 0 { "upward" } else { "downward" };
        note.push_str(&format!("; leading-order operational adjustment points {dir}"));
    }
    report.notes.push(note);
    if model.name() == "service" && sign == Some(1) {
        report.notes.push(
            "service: Pi^(1,2)(t|t) = +2 n C0 e^{2t} by direct differentiation and finite differences, \
             so the operational adjustment is +v_tilde/2, not negative"
                .into(),
        );
    }
}
