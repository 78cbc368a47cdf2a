//! Compressive-sensing reconstruction over a learned dictionary.
//!
//! Both the noiseless problem `min ‖s‖₁ s.t. y = ΦΠs` and the noisy one
//! `min ‖s‖₁ s.t. ‖y − ΦΠs‖₂ ≤ ξ` are solved through the penalised form
//!
//! ```text
//! min_s ½‖r − As‖₂² + μ‖s‖₁,   A = ΦΠ,  r = y − Φx̄
//! ```
//!
//! with μ found by bisection so the residual meets ξ. Each penalised problem
//! runs monotone FISTA with continuation on μ and finishes with an active-set
//! solve of the optimality conditions on the detected support.

use nalgebra::{DMatrix, DVector};

use crate::error::{DassError, Result};
use crate::field::{select, FieldBlock, Measurement, SignalModel};

/// How the penalty weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMap {
    /// Bisection on μ until the residual norm is within the budget tolerance
    /// of ξ. For ξ = 0 the weight is `1e-6·‖Aᵀr‖∞`.
    MatchBudget,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Config {
    pub xi: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub mu_map: MuMap,
    /// Relative tolerance on `|‖r − As‖ − ξ|`.
    pub budget_tolerance: f64,
}

impl Default for L1Config {
    fn default() -> Self {
        Self {
            xi: 0.0,
            max_iterations: 5000,
            tolerance: 1e-8,
            mu_map: MuMap::MatchBudget,
            budget_tolerance: 0.02,
        }
    }
}

impl L1Config {
    pub fn with_xi(xi: f64) -> Self {
        Self {
            xi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return Err(DassError::Config(format!("xi must be finite and >= 0, got {}", self.xi)));
        }
        if self.max_iterations == 0 || !(self.tolerance > 0.0) || !(self.budget_tolerance > 0.0) {
            return Err(DassError::Config("iteration limits and tolerances must be > 0".into()));
        }
        if let MuMap::Fixed(mu) = self.mu_map {
            if !(mu > 0.0) {
                return Err(DassError::Config(format!("fixed mu must be > 0, got {mu}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1Status {
    Converged,
    /// The iteration limit was reached without satisfying the optimality
    /// conditions.
    MaxIterations,
    /// The residual budget could not be met within tolerance.
    BudgetNotMet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Reconstruction {
    pub estimate: FieldBlock,
    pub coefficients: DVector<f64>,
    pub mu: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: L1Status,
}

/// Sparse-coding reconstruction `x̃ = Πs + x̄`.
pub fn l1_reconstruct(dictionary: &SignalModel, m: &Measurement, cfg: &L1Config) -> Result<L1Reconstruction> {
    cfg.validate()?;
    let n = dictionary.block_length();
    if m.pattern().block_length() != n {
        return Err(DassError::LengthMismatch {
            expected: n,
            actual: m.pattern().block_length(),
        });
    }
    let a = dictionary.basis().select_rows(m.pattern().indices());
    let mean_sel = DVector::from_vec(select(dictionary.mean().as_slice(), m.pattern())?);
    let r = DVector::from_column_slice(m.observed()) - mean_sel;
    let sol = solve_budget(&a, &r, cfg)?;
    let x = dictionary.synthesize(&sol.s);
    Ok(L1Reconstruction {
        estimate: FieldBlock::single(x.as_slice().to_vec(), 0)?,
        residual_norm: (&r - &a * &sol.s).norm(),
        coefficients: sol.s,
        mu: sol.mu,
        iterations: sol.iterations,
        status: sol.status,
    })
}

pub(crate) struct BudgetSolution {
    pub s: DVector<f64>,
    pub mu: f64,
    pub iterations: usize,
    pub status: L1Status,
}

pub(crate) fn solve_budget(a: &DMatrix<f64>, r: &DVector<f64>, cfg: &L1Config) -> Result<BudgetSolution> {
    let lipschitz = lipschitz_estimate(a);
    if !(lipschitz > 0.0) {
        return Err(DassError::InvalidArgument(
            "dictionary has no energy on the sampled rows".into(),
        ));
    }
    let k = a.ncols();
    let mu_max = (a.transpose() * r).amax();
    let r_norm = r.norm();
    let zero = || BudgetSolution {
        s: DVector::zeros(k),
        mu: mu_max,
        iterations: 0,
        status: L1Status::Converged,
    };

    match cfg.mu_map {
        MuMap::Fixed(mu) => {
            let sol = lasso(a, r, mu, &DVector::zeros(k), lipschitz, cfg, None);
            Ok(BudgetSolution {
                s: sol.s,
                mu,
                iterations: sol.iterations,
                status: sol.status,
            })
        }
        MuMap::MatchBudget => {
            if mu_max == 0.0 || cfg.xi >= r_norm {
                return Ok(zero());
            }
            if cfg.xi == 0.0 {
                let mu = 1e-6 * mu_max;
                let sol = lasso(a, r, mu, &DVector::zeros(k), lipschitz, cfg, None);
                return Ok(BudgetSolution {
                    s: sol.s,
                    mu,
                    iterations: sol.iterations,
                    status: sol.status,
                });
            }
            bisect_mu(a, r, mu_max, lipschitz, cfg)
        }
    }
}

fn bisect_mu(
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    mu_max: f64,
    lipschitz: f64,
    cfg: &L1Config,
) -> Result<BudgetSolution> {
    let xi = cfg.xi;
    let within = |res: f64| (res - xi).abs() <= cfg.budget_tolerance * xi;
    let mut iterations = 0;
    // residual grows with μ; search log μ between lo and hi
    let mut lo = 1e-10 * mu_max;
    let mut hi = mu_max;
    let mut warm = DVector::zeros(a.ncols());

    let low = lasso(a, r, lo, &warm, lipschitz, cfg, None);
    iterations += low.iterations;
    let low_res = (r - a * &low.s).norm();
    if within(low_res) || low_res > xi {
        let status = if within(low_res) { low.status } else { L1Status::BudgetNotMet };
        return Ok(BudgetSolution {
            s: low.s,
            mu: lo,
            iterations,
            status,
        });
    }
    warm.copy_from(&low.s);

    let mut best = (f64::INFINITY, low.s, lo, low.status);
    for _ in 0..80 {
        let mu = (lo * hi).sqrt();
        let sol = lasso(a, r, mu, &warm, lipschitz, cfg, None);
        iterations += sol.iterations;
        let res = (r - a * &sol.s).norm();
        let gap = (res - xi).abs();
        if gap < best.0 {
            best = (gap, sol.s.clone(), mu, sol.status);
        }
        if within(res) {
            return Ok(BudgetSolution {
                s: sol.s,
                mu,
                iterations,
                status: sol.status,
            });
        }
        if res > xi {
            hi = mu;
        } else {
            lo = mu;
            warm = sol.s;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok(BudgetSolution {
        s: best.1,
        mu: best.2,
        iterations,
        status: L1Status::BudgetNotMet,
    })
}

/// `1.01 × ‖A‖₂²` from 20 power iterations on `AᵀA`.
pub(crate) fn lipschitz_estimate(a: &DMatrix<f64>) -> f64 {
    let k = a.ncols();
    if k == 0 || a.amax() == 0.0 {
        return 0.0;
    }
    // deterministic start with no zero component
    let mut v = DVector::from_fn(k, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v.normalize_mut();
    let mut est = 0.0;
    for _ in 0..20 {
        let w = a.transpose() * (a * &v);
        est = w.norm();
        if est == 0.0 {
            return 0.0;
        }
        v = w / est;
    }
    // the power estimate approaches from below
    est * 1.01
}

fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| x.signum() * (x.abs() - t).max(0.0))
}

pub(crate) fn objective(a: &DMatrix<f64>, r: &DVector<f64>, mu: f64, s: &DVector<f64>) -> f64 {
    0.5 * (r - a * s).norm_squared() + mu * s.lp_norm(1)
}

/// Largest violation of the optimality conditions of the penalised problem,
/// relative to μ: `Aᵀ(r − As) = μ·sign(s)` on the support and
/// `|Aᵀ(r − As)| ≤ μ` elsewhere.
pub fn kkt_violation(a: &DMatrix<f64>, r: &DVector<f64>, mu: f64, s: &DVector<f64>) -> f64 {
    let c = a.transpose() * (r - a * s);
    let mut worst: f64 = 0.0;
    for i in 0..s.len() {
        let v = if s[i] != 0.0 {
            (c[i] - mu * s[i].signum()).abs()
        } else {
            (c[i].abs() - mu).max(0.0)
        };
        worst = worst.max(v);
    }
    worst / mu
}

pub(crate) struct LassoSolution {
    pub s: DVector<f64>,
    pub iterations: usize,
    pub status: L1Status,
}

const KKT_TOL: f64 = 1e-6;

pub(crate) fn lasso(
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    mu: f64,
    start: &DVector<f64>,
    lipschitz: f64,
    cfg: &L1Config,
    mut history: Option<&mut Vec<f64>>,
) -> LassoSolution {
    let mu_max = (a.transpose() * r).amax();
    let mut s = start.clone();
    let mut iterations = 0;
    let hit_limit;

    // continuation: decrease μ geometrically towards the target
    let mut stage_mu = if mu_max > mu { (0.5 * mu_max).max(mu) } else { mu };
    loop {
        let last = stage_mu <= mu;
        let stage_tol = if last { cfg.tolerance } else { cfg.tolerance.sqrt() };
        let budget = cfg.max_iterations.saturating_sub(iterations).max(1);
        let (next, used, converged) = fista(a, r, stage_mu, &s, lipschitz, stage_tol, budget, history.as_deref_mut());
        s = next;
        iterations += used;
        if last {
            hit_limit = !converged;
            break;
        }
        stage_mu = (stage_mu * 0.1).max(mu);
    }

    if let Some(polished) = polish(a, r, mu, &s) {
        if objective(a, r, mu, &polished) <= objective(a, r, mu, &s) + 1e-12 * (1.0 + objective(a, r, mu, &s)) {
            s = polished;
        }
    }
    let ok = kkt_violation(a, r, mu, &s) <= KKT_TOL;
    let status = if ok || !hit_limit {
        L1Status::Converged
    } else {
        L1Status::MaxIterations
    };
    LassoSolution { s, iterations, status }
}

/// Monotone FISTA. Returns the iterate, iterations used and whether the
/// change criterion was met.
#[allow(clippy::too_many_arguments)]
fn fista(
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    mu: f64,
    start: &DVector<f64>,
    lipschitz: f64,
    tol: f64,
    max_iterations: usize,
    mut history: Option<&mut Vec<f64>>,
) -> (DVector<f64>, usize, bool) {
    let step = 1.0 / lipschitz;
    let at = a.transpose();
    let mut x = start.clone();
    let mut fx = objective(a, r, mu, &x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    if let Some(h) = history.as_deref_mut() {
        h.push(fx);
    }
    for it in 1..=max_iterations {
        let grad = &at * (a * &y - r);
        let z = soft_threshold(&(&y - grad * step), mu * step);
        let fz = objective(a, r, mu, &z);
        let (x_next, f_next) = if fz <= fx { (z.clone(), fz) } else { (x.clone(), fx) };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + (&z - &x_next) * (t / t_next) + (&x_next - &x) * ((t - 1.0) / t_next);

        let scale = x_next.norm().max(1.0);
        let moved = (&x_next - &x).norm();
        let mapping = (&z - &y).norm();
        x = x_next;
        fx = f_next;
        t = t_next;
        if let Some(h) = history.as_deref_mut() {
            h.push(fx);
        }
        if moved <= tol * scale && mapping <= tol * scale {
            return (x, it, true);
        }
    }
    (x, max_iterations, false)
}

/// Active-set solve of the optimality conditions starting from the support
/// of `s`. Returns `None` if no consistent support is found.
fn polish(a: &DMatrix<f64>, r: &DVector<f64>, mu: f64, s: &DVector<f64>) -> Option<DVector<f64>> {
    let k = s.len();
    let peak = s.amax();
    let mut support: Vec<(usize, f64)> = (0..k)
        .filter(|&i| peak > 0.0 && s[i].abs() > 1e-9 * peak)
        .map(|i| (i, s[i].signum()))
        .collect();
    let at = a.transpose();
    for _ in 0..(2 * k + 4) {
        let mut full = DVector::zeros(k);
        if !support.is_empty() {
            let idx: Vec<usize> = support.iter().map(|&(i, _)| i).collect();
            let sub = a.select_columns(&idx);
            let gram = sub.transpose() * &sub;
            let rhs = sub.transpose() * r - DVector::from_iterator(idx.len(), support.iter().map(|&(_, sg)| mu * sg));
            let sol = gram.cholesky()?.solve(&rhs);
            let flipped: Vec<usize> = (0..idx.len())
                .filter(|&j| sol[j] * support[j].1 <= 0.0)
                .collect();
            if !flipped.is_empty() {
                let keep: Vec<(usize, f64)> = support
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| !flipped.contains(j))
                    .map(|(_, &p)| p)
                    .collect();
                support = keep;
                continue;
            }
            for (j, &i) in idx.iter().enumerate() {
                full[i] = sol[j];
            }
        }
        let c = &at * (r - a * &full);
        let mut worst: Option<(f64, usize)> = None;
        for i in 0..k {
            if full[i] == 0.0 && c[i].abs() > mu * (1.0 + 1e-9) {
                let excess = c[i].abs() - mu;
                if worst.is_none_or(|(w, _)| excess > w) {
                    worst = Some((excess, i));
                }
            }
        }
        match worst {
            None => return Some(full),
            Some((_, i)) => {
                support.push((i, c[i].signum()));
                support.sort_by_key(|&(i, _)| i);
            }
        }
    }
    None
}
