//! Data-adaptive null-probability weights.
//!
//! Every estimator returns a [`WeightVector`] that satisfies the
//! censored-count constraint `sum_i 1{P_i > tau} / (q_i (1 - tau)) <= n`, or
//! is identically one when no admissible vector exists.
//!
//! Only [`ordered_step_weights`] and the all-ones fallback depend on the
//! p-values solely through the indicators `1{P_i > tau}`. The
//! likelihood-based estimators also use the count of p-values below `tau`.

use crate::error::Result;
use crate::optim::{
    admm_solve, AdmmConfig, GroupConstant, Identity, Incidence, L1Ball, LikelihoodProblem,
    MonotoneCone,
};
use crate::procedures::{validate_tau, PValues, WeightVector};
use crate::structure::{Graph, Grouping, OrderedFit, Structure, StructureSpec};

/// Slack used when checking whether per-group estimates land in `[eps, 1]`.
const GROUP_RANGE_TOL: f64 = 1e-12;

/// Fits weights for the structure in `spec`, falling back to all ones when
/// `#{P_i > tau} > n (1 - tau)`.
pub fn estimate_weights(
    p: &PValues,
    tau: f64,
    spec: &StructureSpec,
    admm_cfg: &AdmmConfig,
) -> Result<WeightVector> {
    validate_tau(tau)?;
    spec.validate_for(p.len())?;
    if fallback_required(p, tau) {
        return Ok(WeightVector::ones(p.len()));
    }
    let eps = spec.epsilon;
    match &spec.structure {
        Structure::Ordered {
            fit: OrderedFit::Step,
        } => Ok(ordered_step_weights(p, tau, eps)),
        Structure::Ordered {
            fit: OrderedFit::Mle,
        } => ordered_mle_weights(p, tau, eps, admm_cfg),
        Structure::Grouped { grouping } | Structure::SignSplit { grouping } => {
            grouped_weights(p, tau, eps, grouping, admm_cfg)
        }
        Structure::TvGraph { graph, m } => tv_l1_weights(p, tau, eps, graph, *m, admm_cfg),
        Structure::Constant => Ok(constant_weights(p, tau, eps)),
    }
}

fn fallback_required(p: &PValues, tau: f64) -> bool {
    p.count_above(tau) as f64 > p.len() as f64 * (1.0 - tau)
}

fn finish(q: Vec<f64>, p: &PValues, tau: f64) -> Result<WeightVector> {
    Ok(WeightVector::new(q)?.certify(p, tau))
}

/// Storey's null proportion clipped to `[eps, 1]`, on every index.
pub fn constant_weights(p: &PValues, tau: f64, epsilon: f64) -> WeightVector {
    if fallback_required(p, tau) {
        return WeightVector::ones(p.len());
    }
    let pi0 = p.count_above(tau) as f64 / (p.len() as f64 * (1.0 - tau));
    let q = vec![pi0.clamp(epsilon, 1.0); p.len()];
    WeightVector {
        q,
        constraint_satisfied: false,
    }
    .certify(p, tau)
}

/// Step function `(eps, .., eps, 1, .., 1)` with the longest prefix of
/// `eps` entries that keeps the constraint.
pub fn ordered_step_weights(p: &PValues, tau: f64, epsilon: f64) -> WeightVector {
    let n = p.len();
    let nf = n as f64;
    let ind = p.exceedances(tau);
    let total = ind.iter().filter(|&&b| b).count() as f64;
    let c = 1.0 - tau;
    let mut k_best = 0;
    let mut prefix = 0.0;
    for (k, &b) in ind.iter().enumerate() {
        if b {
            prefix += 1.0;
        }
        let sum = prefix / (epsilon * c) + (total - prefix) / c;
        if sum <= nf + 1e-12 * nf {
            k_best = k + 1;
        }
    }
    let q: Vec<f64> = (0..n)
        .map(|i| if i < k_best { epsilon } else { 1.0 })
        .collect();
    WeightVector {
        q,
        constraint_satisfied: false,
    }
    .certify(p, tau)
}

/// Constrained MLE over nondecreasing vectors in `[eps, 1]`.
pub fn ordered_mle_weights(
    p: &PValues,
    tau: f64,
    epsilon: f64,
    admm_cfg: &AdmmConfig,
) -> Result<WeightVector> {
    if fallback_required(p, tau) {
        return Ok(WeightVector::ones(p.len()));
    }
    let problem = LikelihoodProblem::new(p.exceedances(tau), tau, epsilon);
    let out = admm_solve(&problem, &Identity(p.len()), &MonotoneCone, admm_cfg)?;
    finish(out.q, p, tau)
}

/// Group-wise constant weights. Uses the per-group Storey estimate when every
/// group's estimate lies in `[eps, 1]`; otherwise solves the joint problem.
pub fn grouped_weights(
    p: &PValues,
    tau: f64,
    epsilon: f64,
    grouping: &Grouping,
    admm_cfg: &AdmmConfig,
) -> Result<WeightVector> {
    if fallback_required(p, tau) {
        return Ok(WeightVector::ones(p.len()));
    }
    let ind = p.exceedances(tau);
    let counts = grouping.group_sums(&ind.iter().map(|&b| f64::from(b as u8)).collect::<Vec<_>>());
    let per_group: Vec<f64> = counts
        .iter()
        .zip(grouping.sizes())
        .map(|(&c, &nk)| c / (nk as f64 * (1.0 - tau)))
        .collect();
    let in_range = per_group
        .iter()
        .all(|&v| v >= epsilon - GROUP_RANGE_TOL && v <= 1.0 + GROUP_RANGE_TOL);
    if in_range {
        let clipped: Vec<f64> = per_group.iter().map(|v| v.clamp(epsilon, 1.0)).collect();
        return finish(grouping.broadcast(&clipped), p, tau);
    }
    let problem = LikelihoodProblem::new(ind, tau, epsilon);
    let out = admm_solve(
        &problem,
        &Identity(p.len()),
        &GroupConstant(grouping),
        admm_cfg,
    )?;
    finish(out.q, p, tau)
}

/// Constrained MLE over `{q ∈ [eps, 1]^n : sum_edges |q_i - q_j| <= m}`.
pub fn tv_l1_weights(
    p: &PValues,
    tau: f64,
    epsilon: f64,
    graph: &Graph,
    m: f64,
    admm_cfg: &AdmmConfig,
) -> Result<WeightVector> {
    if fallback_required(p, tau) {
        return Ok(WeightVector::ones(p.len()));
    }
    let problem = LikelihoodProblem::new(p.exceedances(tau), tau, epsilon);
    let out = admm_solve(&problem, &Incidence::new(graph), &L1Ball(m), admm_cfg)?;
    finish(out.q, p, tau)
}

/// Splits statistics by sign and computes two-sided p-values
/// `2 (1 - F0(|x|))` under a symmetric null CDF `null_cdf`.
///
/// Group 0 holds `x >= 0` (zero goes to the positive side), group 1 holds
/// `x < 0`. When all statistics share a sign there is a single group.
pub fn sign_grouping(x: &[f64], null_cdf: impl Fn(f64) -> f64) -> Result<(Grouping, PValues)> {
    let any_pos = x.iter().any(|&v| v >= 0.0);
    let labels = x.iter().map(|&v| usize::from(v < 0.0 && any_pos)).collect();
    let p = x
        .iter()
        .map(|&v| (2.0 * (1.0 - null_cdf(v.abs()))).clamp(0.0, 1.0))
        .collect();
    Ok((Grouping::from_labels(labels)?, PValues::new(p)?))
}
