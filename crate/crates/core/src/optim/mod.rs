//! Constrained maximum-likelihood solver for null-probability weights.
//!
//! Solves
//!
//! ```text
//! max_q  sum_i 1{P_i > tau} log(q_i (1 - tau)) + 1{P_i <= tau} log(1 - q_i (1 - tau))
//! s.t.   eps <= q <= 1,  M q ∈ C,  sum_i 1{P_i > tau} / (q_i (1 - tau)) <= n
//! ```
//!
//! by linearized ADMM over the splitting `x = M q`, `y = q`. The q-step is
//! preconditioned with `(alpha/2) (q - q_t)^T (eta I - M^T M) (q - q_t)` so it
//! separates into closed-form scalar updates.

mod operator;
mod projection;

pub use operator::{operator_norm_sq, Identity, Incidence, LinearOperator};
pub use projection::{
    proj_feasible_g, proj_group_mean, proj_isotonic, proj_l1_ball, solve_cubic_branch,
    ConstraintSet, GroupConstant, L1Ball, MonotoneCone,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Penalty parameters and stopping rule for [`admm_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub step_alpha: f64,
    pub step_beta: f64,
    /// Preconditioner scale; must dominate `||M||^2`. `None` uses
    /// [`operator_norm_sq`].
    pub eta: Option<f64>,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Keep the objective value of every iterate in [`AdmmState::objective_trace`].
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            step_alpha: 1.0,
            step_beta: 1.0,
            eta: None,
            max_iter: 5000,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            record_trace: false,
        }
    }
}

impl AdmmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step_alpha > 0.0 && self.step_beta > 0.0) {
            return Err(Error::invalid("ADMM penalties must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("ADMM max_iter must be positive"));
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(Error::invalid("ADMM tolerances must be positive"));
        }
        Ok(())
    }
}

/// The censored-Bernoulli likelihood data: which p-values exceed `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodProblem {
    pub indicators: Vec<bool>,
    pub tau: f64,
    pub epsilon: f64,
}

impl LikelihoodProblem {
    pub fn new(indicators: Vec<bool>, tau: f64, epsilon: f64) -> Self {
        LikelihoodProblem {
            indicators,
            tau,
            epsilon,
        }
    }

    pub fn n(&self) -> usize {
        self.indicators.len()
    }

    pub fn n_exceed(&self) -> usize {
        self.indicators.iter().filter(|&&b| b).count()
    }

    /// True when `q = 1` is the only admissible answer.
    pub fn requires_fallback(&self) -> bool {
        self.n_exceed() as f64 > self.n() as f64 * (1.0 - self.tau)
    }

    /// Negative log-likelihood; `+inf` outside the domain.
    pub fn objective(&self, q: &[f64]) -> f64 {
        let c = 1.0 - self.tau;
        q.iter()
            .zip(&self.indicators)
            .map(|(&qi, &b)| {
                let v = if b { qi * c } else { 1.0 - qi * c };
                if v > 0.0 {
                    -v.ln()
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    }

    /// `sum_i 1{ind_i} / (q_i (1 - tau))`.
    pub fn constraint_sum(&self, q: &[f64]) -> f64 {
        q.iter()
            .zip(&self.indicators)
            .filter(|(_, &b)| b)
            .map(|(&qi, _)| 1.0 / (qi * (1.0 - self.tau)))
            .sum()
    }
}

/// Iterate of the solver plus residual diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub q: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iter: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective_trace: Vec<f64>,
}

/// Result of a converged solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    /// Final weights, after the structure polish and the feasibility repair.
    pub q: Vec<f64>,
    pub objective: f64,
    /// Whether the feasibility repair had to move the solution.
    pub repaired: bool,
    pub state: AdmmState,
}

/// Closed-form minimizer over `[eps, 1]` of
/// `-loglik_i(q) + (scale / 2) (q - w_i)^2`, coordinate by coordinate.
pub fn q_update(w: &[f64], indicators: &[bool], tau: f64, epsilon: f64, scale: f64) -> Vec<f64> {
    let c = 1.0 / (1.0 - tau);
    let four_over = 4.0 / scale;
    w.iter()
        .zip(indicators)
        .map(|(&wi, &b)| {
            let raw = if b {
                0.5 * (wi + (wi * wi + four_over).sqrt())
            } else {
                let d = wi - c;
                0.5 * ((wi + c) - (d * d + four_over).sqrt())
            };
            raw.clamp(epsilon, 1.0)
        })
        .collect()
}

fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Runs ADMM for the constrained likelihood with `Q = {q : M q ∈ C, eps <= q <= 1}`.
///
/// The caller must have excluded the fallback case
/// (`#{P_i > tau} > n (1 - tau)`), which makes the feasible set nonempty.
pub fn admm_solve(
    problem: &LikelihoodProblem,
    op: &dyn LinearOperator,
    set: &dyn ConstraintSet,
    cfg: &AdmmConfig,
) -> Result<AdmmOutcome> {
    cfg.validate()?;
    let n = problem.n();
    if op.n_cols() != n {
        return Err(Error::invalid(format!(
            "operator acts on dimension {} but the problem has {n} coordinates",
            op.n_cols()
        )));
    }
    if problem.requires_fallback() {
        return Err(Error::invalid(
            "infeasible likelihood problem: too many p-values above tau",
        ));
    }
    let norm_sq = operator_norm_sq(op);
    let eta = match cfg.eta {
        Some(eta) if eta * 1.01 < norm_sq => {
            return Err(Error::invalid(format!(
                "eta = {eta} is below ||M||^2 ≈ {:.6}",
                norm_sq / 1.01
            )))
        }
        Some(eta) => eta,
        None => norm_sq,
    };

    let (alpha, beta) = (cfg.step_alpha, cfg.step_beta);
    let scale = alpha * eta + beta;
    let m_rows = op.n_rows();

    let mut q = vec![1.0; n];
    let mut mq = vec![0.0; m_rows];
    op.apply(&q, &mut mq);
    let mut x = set.project(&mq);
    let mut y = q.clone();
    let mut u = vec![0.0; m_rows];
    let mut v = vec![0.0; n];

    let mut resid = vec![0.0; m_rows];
    let mut mt = vec![0.0; n];
    let mut mt_dx = vec![0.0; n];
    let mut trace = Vec::new();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iter = 0;

    while iter < cfg.max_iter {
        iter += 1;
        // q-step
        for ((r, &a), (&b, &c)) in resid.iter_mut().zip(&mq).zip(x.iter().zip(&u)) {
            *r = c + alpha * (a - b);
        }
        op.apply_transpose(&resid, &mut mt);
        let w: Vec<f64> = (0..n)
            .map(|i| -(mt[i] + v[i] - beta * y[i] - alpha * eta * q[i]) / scale)
            .collect();
        q = q_update(&w, &problem.indicators, problem.tau, problem.epsilon, scale);
        op.apply(&q, &mut mq);

        // x- and y-steps
        let x_in: Vec<f64> = mq.iter().zip(&u).map(|(a, b)| a + b / alpha).collect();
        let x_new = set.project(&x_in);
        let y_in: Vec<f64> = q.iter().zip(&v).map(|(a, b)| a + b / beta).collect();
        let y_new = proj_feasible_g(&y_in, &problem.indicators, problem.tau, n);

        // dual ascent
        for ((ui, &a), &b) in u.iter_mut().zip(&mq).zip(&x_new) {
            *ui += alpha * (a - b);
        }
        for ((vi, &a), &b) in v.iter_mut().zip(&q).zip(&y_new) {
            *vi += beta * (a - b);
        }

        primal = inf_norm_diff(&mq, &x_new).max(inf_norm_diff(&q, &y_new));
        let dx: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        op.apply_transpose(&dx, &mut mt_dx);
        dual = (alpha * inf_norm(&mt_dx)).max(beta * inf_norm_diff(&y_new, &y));
        x = x_new;
        y = y_new;

        if cfg.record_trace {
            trace.push(problem.objective(&q));
        }
        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            break;
        }
    }

    let state = AdmmState {
        q: q.clone(),
        x,
        y,
        u,
        v,
        iter,
        primal_residual: primal,
        dual_residual: dual,
        objective_trace: trace,
    };
    if !(primal <= cfg.tol_primal && dual <= cfg.tol_dual) {
        return Err(Error::Convergence {
            iterations: iter,
            primal_residual: primal,
            dual_residual: dual,
        });
    }

    // With M = I the structure set can be enforced exactly; its projection
    // keeps coordinates inside [eps, 1] for the sets used here.
    let mut polished = if op.is_identity() {
        set.project(&q)
            .into_iter()
            .map(|v| v.clamp(problem.epsilon, 1.0))
            .collect()
    } else {
        q
    };
    let repaired = repair_feasibility(&mut polished, problem);
    Ok(AdmmOutcome {
        objective: problem.objective(&polished),
        q: polished,
        repaired,
        state,
    })
}

/// If the censored-count constraint is violated by more than `1e-9 n`,
/// replaces `q` by `min(1, s q)` for the smallest `s >= 1` restoring it.
/// Returns whether `q` changed.
pub fn repair_feasibility(q: &mut [f64], problem: &LikelihoodProblem) -> bool {
    let n = problem.n() as f64;
    if problem.constraint_sum(q) <= n + 1e-9 * n {
        return false;
    }
    let scaled = |s: f64| -> Vec<f64> { q.iter().map(|&v| (v * s).min(1.0)).collect() };
    let min_q = q.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = 1.0;
    let mut hi = 1.0 / min_q;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if problem.constraint_sum(&scaled(mid)) <= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let fixed = scaled(hi);
    q.copy_from_slice(&fixed);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_update_examples() {
        let q = q_update(&[0.0], &[true], 0.5, 0.1, 4.0);
        assert!((q[0] - 0.5).abs() < 1e-15);
        assert_eq!(q_update(&[5.0], &[true], 0.5, 0.1, 4.0), vec![1.0]);
        assert_eq!(q_update(&[-1e9], &[false], 0.5, 0.1, 4.0), vec![0.1]);
    }

    #[test]
    fn q_update_solves_scalar_first_order_condition() {
        let (tau, eps, scale) = (0.4, 0.05, 3.0);
        let c = 1.0 - tau;
        for &w in &[-0.2, 0.1, 0.45, 0.7] {
            let q = q_update(&[w, w], &[true, false], tau, eps, scale);
            if q[0] > eps && q[0] < 1.0 {
                let g = -1.0 / q[0] + scale * (q[0] - w);
                assert!(g.abs() < 1e-12);
            }
            if q[1] > eps && q[1] < 1.0 {
                let g = c / (1.0 - q[1] * c) + scale * (q[1] - w);
                assert!(g.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_censored_converges_to_lower_bound() {
        let problem = LikelihoodProblem::new(vec![false; 5], 0.5, 0.1);
        let out = admm_solve(
            &problem,
            &Identity(5),
            &MonotoneCone,
            &AdmmConfig::default(),
        )
        .unwrap();
        for v in out.q {
            assert!((v - 0.1).abs() < 1e-7);
        }
        assert!(!out.repaired);
    }

    #[test]
    fn repair_is_noop_on_feasible_input() {
        let problem = LikelihoodProblem::new(vec![true, false, false, false], 0.5, 0.1);
        let mut q = vec![0.6, 0.2, 0.3, 0.4];
        assert!(!repair_feasibility(&mut q, &problem));
        assert_eq!(q, vec![0.6, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn repair_restores_constraint() {
        let problem = LikelihoodProblem::new(vec![true, true, false, false], 0.5, 0.1);
        let mut q = vec![0.2, 0.5, 0.3, 0.1];
        assert!(repair_feasibility(&mut q, &problem));
        assert!(problem.constraint_sum(&q) <= 4.0);
        assert!(q.iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn undersized_eta_is_rejected() {
        let g = crate::structure::Graph::chain(3).unwrap();
        let problem = LikelihoodProblem::new(vec![false; 3], 0.5, 0.1);
        let cfg = AdmmConfig {
            eta: Some(0.5),
            ..AdmmConfig::default()
        };
        let err = admm_solve(&problem, &Incidence::new(&g), &L1Ball(1.0), &cfg);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn max_iter_exhaustion_reports_residuals() {
        let problem = LikelihoodProblem::new(vec![true, false, false, false], 0.5, 0.1);
        let cfg = AdmmConfig {
            max_iter: 2,
            ..AdmmConfig::default()
        };
        match admm_solve(&problem, &Identity(4), &MonotoneCone, &cfg) {
            Err(Error::Convergence { iterations, .. }) => assert_eq!(iterations, 2),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
