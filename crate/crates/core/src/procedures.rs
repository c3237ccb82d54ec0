//! Step-up rejection procedures: BH, Storey-BH and SABHA.
//!
//! All three share one engine. For each index `i` the procedure finds the
//! smallest `k` for which `P_i <= (alpha / q_i * k / n) ∧ tau`, then scans the
//! counts of those critical ranks to find the largest `k` with at least `k`
//! indices eligible. The critical rank is first guessed as
//! `ceil(n q_i P_i / alpha)` and then corrected against the exact floating
//! point threshold, so the scan agrees bit-for-bit with evaluating the
//! threshold inequality directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed p-values, each finite and in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PValues(Vec<f64>);

impl PValues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("p-value list is empty"));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::invalid(format!(
                "p-value {} at index {} is outside [0, 1]",
                v,
                i + 1
            )));
        }
        Ok(PValues(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `1{P_i > tau}` for every index.
    pub fn exceedances(&self, tau: f64) -> Vec<bool> {
        self.0.iter().map(|&p| p > tau).collect()
    }

    pub fn count_above(&self, tau: f64) -> usize {
        self.0.iter().filter(|&&p| p > tau).count()
    }
}

impl std::ops::Index<usize> for PValues {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Target FDR level, censoring threshold, and the floor applied to Storey's
/// null-proportion estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub alpha: f64,
    pub tau: f64,
    #[serde(default = "default_pi0_floor")]
    pub pi0_floor: f64,
}

fn default_pi0_floor() -> f64 {
    0.1
}

impl MethodConfig {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        let cfg = MethodConfig {
            alpha,
            tau,
            pi0_floor: default_pi0_floor(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_pi0_floor(mut self, floor: f64) -> Result<Self> {
        self.pi0_floor = floor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        validate_tau(self.tau)?;
        if !(self.pi0_floor > 0.0 && self.pi0_floor <= 1.0) {
            return Err(Error::invalid(format!(
                "pi0 floor must lie in (0, 1], got {}",
                self.pi0_floor
            )));
        }
        Ok(())
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tau must lie in (0, 1), got {tau}")))
    }
}

/// Estimated null probabilities `q_i ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub q: Vec<f64>,
    /// Whether the weights were checked against the censored-count
    /// constraint for the p-values they were fit on.
    pub constraint_satisfied: bool,
}

impl WeightVector {
    /// Wraps raw weights. The constraint flag starts out unset.
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = q
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0 && **v <= 1.0))
        {
            return Err(Error::invalid(format!(
                "weight {} at index {} is outside (0, 1]",
                v,
                i + 1
            )));
        }
        Ok(WeightVector {
            q,
            constraint_satisfied: false,
        })
    }

    pub fn ones(n: usize) -> Self {
        WeightVector {
            q: vec![1.0; n],
            constraint_satisfied: true,
        }
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Sets the constraint flag by checking against `p`.
    pub fn certify(mut self, p: &PValues, tau: f64) -> Self {
        self.constraint_satisfied = verify_weight_constraint(p, &self, tau);
        self
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn is_ones(&self) -> bool {
        self.q.iter().all(|&v| v == 1.0)
    }
}

/// Outcome of a rejection procedure. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionResult {
    pub k_hat: usize,
    /// Rejected indices in increasing order.
    pub rejected: Vec<usize>,
    /// Per-index threshold `(alpha / q_i * k_hat / n) ∧ tau`.
    pub thresholds: Vec<f64>,
    pub method: String,
}

impl RejectionResult {
    pub fn n_rejections(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_rejected(&self, i: usize) -> bool {
        self.rejected.binary_search(&i).is_ok()
    }
}

#[inline]
pub(crate) fn threshold(alpha: f64, q: f64, k: usize, n: usize, tau: f64) -> f64 {
    (alpha / q * (k as f64 / n as f64)).min(tau)
}

/// Shared step-up engine. `q` of `None` means all weights are one.
fn step_up(p: &[f64], alpha: f64, tau: f64, q: Option<&[f64]>, method: &str) -> RejectionResult {
    let n = p.len();
    let weight = |i: usize| q.map_or(1.0, |q| q[i]);
    let passes = |i: usize, k: usize| p[i] <= threshold(alpha, weight(i), k, n, tau);

    // critical[i] = smallest k in 1..=n with passes(i, k), or n + 1.
    let critical: Vec<usize> = (0..n)
        .map(|i| {
            if p[i] > tau {
                return n + 1;
            }
            let guess = (n as f64 * weight(i) * p[i] / alpha).ceil();
            let mut k = if guess.is_finite() {
                (guess.max(1.0) as usize).min(n + 1)
            } else {
                n + 1
            };
            while k > 1 && passes(i, k - 1) {
                k -= 1;
            }
            while k <= n && !passes(i, k) {
                k += 1;
            }
            k
        })
        .collect();

    let mut counts = vec![0usize; n + 2];
    for &k in &critical {
        counts[k] += 1;
    }
    let mut k_hat = 0;
    let mut cumulative = 0;
    for (k, &c) in counts.iter().enumerate().take(n + 1).skip(1) {
        cumulative += c;
        if cumulative >= k {
            k_hat = k;
        }
    }

    let rejected = (0..n)
        .filter(|&i| k_hat > 0 && critical[i] <= k_hat)
        .collect();
    let thresholds = (0..n)
        .map(|i| threshold(alpha, weight(i), k_hat, n, tau))
        .collect();
    RejectionResult {
        k_hat,
        rejected,
        thresholds,
        method: method.to_string(),
    }
}

/// Benjamini-Hochberg step-up at level `alpha`.
pub fn bh(p: &PValues, alpha: f64) -> Result<RejectionResult> {
    validate_alpha(alpha)?;
    Ok(step_up(p.values(), alpha, 1.0, None, "bh"))
}

/// Storey's estimate of the null proportion, `min{1, #{P_i > tau} / (n (1 - tau))}`.
pub fn storey_pi0(p: &PValues, tau: f64) -> Result<f64> {
    validate_tau(tau)?;
    let above = p.count_above(tau) as f64;
    Ok((above / (p.len() as f64 * (1.0 - tau))).min(1.0))
}

/// Storey-BH: SABHA with the constant weight `max(pi0_floor, pi0_hat)`.
/// Rejections are capped at `tau`.
pub fn storey_bh(p: &PValues, cfg: &MethodConfig) -> Result<RejectionResult> {
    cfg.validate()?;
    let pi0 = storey_pi0(p, cfg.tau)?.max(cfg.pi0_floor);
    let q = vec![pi0; p.len()];
    Ok(step_up(
        p.values(),
        cfg.alpha,
        cfg.tau,
        Some(&q),
        "storey-bh",
    ))
}

/// The structure-adaptive BH procedure with weights `q`.
pub fn sabha(p: &PValues, cfg: &MethodConfig, q: &WeightVector) -> Result<RejectionResult> {
    validate_alpha(cfg.alpha)?;
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(Error::invalid(format!(
            "tau must lie in (0, 1], got {}",
            cfg.tau
        )));
    }
    if q.len() != p.len() {
        return Err(Error::invalid(format!(
            "weight vector has length {} but there are {} p-values",
            q.len(),
            p.len()
        )));
    }
    if q.q.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::invalid("weights must lie in (0, 1]"));
    }
    Ok(step_up(p.values(), cfg.alpha, cfg.tau, Some(&q.q), "sabha"))
}

/// `sum_i 1{P_i > tau} / (q_i (1 - tau))`.
pub fn constraint_sum(p: &PValues, q: &[f64], tau: f64) -> f64 {
    p.values()
        .iter()
        .zip(q)
        .filter(|(&pi, _)| pi > tau)
        .map(|(_, &qi)| 1.0 / (qi * (1.0 - tau)))
        .sum()
}

/// True when `q` is all ones or the censored-count sum is at most `n`
/// (up to `1e-9 n`).
pub fn verify_weight_constraint(p: &PValues, q: &WeightVector, tau: f64) -> bool {
    if q.len() != p.len() {
        return false;
    }
    if q.is_ones() {
        return true;
    }
    let n = p.len() as f64;
    constraint_sum(p, &q.q, tau) <= n + 1e-9 * n
}
