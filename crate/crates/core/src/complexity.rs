//! Rademacher complexity of inverse-weight classes, analytic bounds on it,
//! and the FDR bound calculators built on top.
//!
//! For a set `A ⊂ R^n`, `Rad(A) = E[(1/n) sup_{x∈A} |<x, ξ>|]` with `ξ`
//! i.i.d. uniform signs. The weight classes here are studied through
//! `Q_inv = {(1/q_1, .., 1/q_n) : q ∈ Q}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{Graph, Grouping, Structure, StructureSpec};

/// Monte Carlo draws handled by one RNG stream. Fixed so results do not
/// depend on the number of worker threads.
const CHUNK: usize = 2048;

/// Largest graph accepted by the dense pseudoinverse.
pub const MAX_DENSE_NODES: usize = 5000;

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Whether a per-draw supremum is computed exactly or replaced by an upper
/// bound from a relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupKind {
    Exact,
    UpperBound,
}

/// Monte Carlo complexity estimate next to its analytic bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub rad_estimate: f64,
    pub rad_stderr: f64,
    pub sup_kind: SupKind,
    pub analytic_bound: f64,
    pub n: usize,
    pub spec: StructureSpec,
    pub rho_g: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

/// Runs [`rad_mc`] and [`rad_bound`] for `spec`.
pub fn complexity_report(
    spec: &StructureSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ComplexityReport> {
    let rho_g = match &spec.structure {
        Structure::TvGraph { graph, .. } => Some(incidence_rho(graph)?),
        _ => None,
    };
    let (mc, sup_kind) = rad_mc(spec, n, samples, seed)?;
    Ok(ComplexityReport {
        rad_estimate: mc.estimate,
        rad_stderr: mc.stderr,
        sup_kind,
        analytic_bound: rad_bound(spec, n, rho_g)?,
        n,
        spec: spec.clone(),
        rho_g,
        samples,
        seed,
    })
}

/// Averages `value(rng)` over `samples` draws in fixed-size chunks, each chunk
/// on its own ChaCha stream derived from `seed`.
fn mc_mean<F>(samples: usize, seed: u64, value: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let n_chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..len {
                let v = value(&mut rng);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let k = samples as f64;
    let mean = s / k;
    let var = if samples > 1 {
        ((s2 - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    McEstimate {
        estimate: mean,
        stderr: (var / k).sqrt(),
    }
}

fn rademacher_signs(rng: &mut impl RngCore, out: &mut [f64]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (j, v) in chunk.iter_mut().enumerate() {
            *v = if (bits >> j) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

/// `sup_{x ∈ Q_inv} |<x, xi>|` for monotone `q`: the maximum over the step
/// vectors `(1/eps, .., 1/eps, 1, .., 1)`, whose convex hull is `Q_inv`.
fn ordered_sup(xi: &[f64], inv_eps: f64) -> f64 {
    let total: f64 = xi.iter().sum();
    let mut prefix = 0.0;
    let mut best = total.abs();
    for &v in xi {
        prefix += v;
        best = best.max((inv_eps * prefix + (total - prefix)).abs());
    }
    best
}

/// `sup |sum_g y_g S_g|` over `y ∈ [1, 1/eps]^d`.
fn grouped_sup(xi: &[f64], grouping: &Grouping, inv_eps: f64) -> f64 {
    let sums = grouping.group_sums(xi);
    let (mut up, mut down) = (0.0, 0.0);
    for s in sums {
        if s > 0.0 {
            up += s * inv_eps;
            down -= s;
        } else {
            up += s;
            down -= s * inv_eps;
        }
    }
    up.max(down)
}

/// Monte Carlo estimate of `Rad(Q_inv)`.
///
/// The per-draw supremum is exact for ordered, grouped and constant classes.
/// For the total-variation class it is replaced by the relaxation
/// `(sqrt(n)/eps) |<u, xi>| + (m/eps^2) max_k |<(D^+)_k, xi>|` with `u` the
/// normalized constant vector, so the estimate is an upper bound.
pub fn rad_mc(
    spec: &StructureSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<(McEstimate, SupKind)> {
    if n == 0 || samples == 0 {
        return Err(Error::invalid("n and samples must be positive"));
    }
    spec.validate_for(n)?;
    let inv_eps = 1.0 / spec.epsilon;
    let nf = n as f64;
    match &spec.structure {
        Structure::Ordered { .. } => Ok((
            mc_mean(samples, seed, |rng| {
                let mut xi = vec![0.0; n];
                rademacher_signs(rng, &mut xi);
                ordered_sup(&xi, inv_eps) / nf
            }),
            SupKind::Exact,
        )),
        Structure::Constant => Ok((
            mc_mean(samples, seed, |rng| {
                let mut xi = vec![0.0; n];
                rademacher_signs(rng, &mut xi);
                xi.iter().sum::<f64>().abs() * inv_eps / nf
            }),
            SupKind::Exact,
        )),
        Structure::SignSplit { .. } => Err(sign_split_unsupported()),
        Structure::Grouped { grouping } => Ok((
            mc_mean(samples, seed, |rng| {
                let mut xi = vec![0.0; n];
                rademacher_signs(rng, &mut xi);
                grouped_sup(&xi, grouping, inv_eps) / nf
            }),
            SupKind::Exact,
        )),
        Structure::TvGraph { graph, m } => {
            let pinv = incidence_pinv(graph)?;
            let t_l2 = nf.sqrt() * inv_eps;
            let t_tv = m * inv_eps * inv_eps;
            let est = mc_mean(samples, seed, |rng| {
                let mut xi = vec![0.0; n];
                rademacher_signs(rng, &mut xi);
                let along_ones = xi.iter().sum::<f64>().abs() / nf.sqrt();
                let xi_v = DVector::from_column_slice(&xi);
                let proj = pinv.tr_mul(&xi_v);
                let max_col = proj.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                (t_l2 * along_ones + t_tv * max_col) / nf
            });
            Ok((est, SupKind::UpperBound))
        }
    }
}

/// Analytic upper bound on `Rad(Q_inv)`.
///
/// * ordered: `1 / (eps sqrt(n))`
/// * grouped with sizes `n_k`: `sum_k sqrt(n_k) / (2 eps n)` (constant is the
///   single-group case)
/// * TV-l1 graph: `1 / (eps sqrt(n)) + 2 rho_G m sqrt(log n) / (eps^2 n)`
pub fn rad_bound(spec: &StructureSpec, n: usize, rho_g: Option<f64>) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    spec.validate_for(n)?;
    let eps = spec.epsilon;
    let nf = n as f64;
    Ok(match &spec.structure {
        Structure::Ordered { .. } => 1.0 / (eps * nf.sqrt()),
        Structure::Constant => grouped_bound(&[n], eps),
        Structure::SignSplit { .. } => return Err(sign_split_unsupported()),
        Structure::Grouped { grouping } => grouped_bound(grouping.sizes(), eps),
        Structure::TvGraph { m, .. } => {
            let rho =
                rho_g.ok_or_else(|| Error::invalid("the total-variation bound needs rho_G"))?;
            tv_l1_bound(eps, *m, rho, n)
        }
    })
}

fn sign_split_unsupported() -> Error {
    Error::invalid("sign-split groups depend on the data; pass the grouping as `grouped` instead")
}

fn grouped_bound(sizes: &[usize], eps: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    sizes.iter().map(|&s| (s as f64).sqrt()).sum::<f64>() / (2.0 * eps * n as f64)
}

fn tv_second_term(m: f64, rho: f64, n: usize) -> f64 {
    let nf = n as f64;
    2.0 * rho * m * nf.ln().sqrt() / nf
}

/// Bound for the total-variation class with `m` allowed nonzero edge
/// differences: `1 / (eps sqrt(n)) + 2 rho_G m sqrt(log n) / (eps n)`.
pub fn tv_sparse_bound(eps: f64, m: f64, rho: f64, n: usize) -> f64 {
    1.0 / (eps * (n as f64).sqrt()) + tv_second_term(m, rho, n) / eps
}

/// Bound for the total-variation class with l1 budget `m`.
pub fn tv_l1_bound(eps: f64, m: f64, rho: f64, n: usize) -> f64 {
    1.0 / (eps * (n as f64).sqrt()) + tv_second_term(m, rho, n) / (eps * eps)
}

/// Dense Moore-Penrose pseudoinverse of the incidence matrix, `n x e`.
///
/// For a connected graph `D^+ = L^+ D^T` and `L^+ = (L + J/n)^{-1} - J/n`;
/// since every column of `D^T` is orthogonal to the constant vector, the
/// `J/n` correction drops out.
pub fn incidence_pinv(graph: &Graph) -> Result<DMatrix<f64>> {
    let n = graph.n_nodes();
    if n > MAX_DENSE_NODES {
        return Err(Error::invalid(format!(
            "graph has {n} nodes; dense pseudoinverse is limited to {MAX_DENSE_NODES}"
        )));
    }
    let mut a = DMatrix::from_element(n, n, 1.0 / n as f64);
    for &(i, j) in graph.edges() {
        a[(i, i)] += 1.0;
        a[(j, j)] += 1.0;
        a[(i, j)] -= 1.0;
        a[(j, i)] -= 1.0;
    }
    let inv = a
        .cholesky()
        .ok_or_else(|| Error::invalid("graph Laplacian is singular; is the graph connected?"))?
        .inverse();
    let mut pinv = DMatrix::zeros(n, graph.n_edges());
    for (k, &(i, j)) in graph.edges().iter().enumerate() {
        let col = inv.column(i) - inv.column(j);
        pinv.set_column(k, &col);
    }
    Ok(pinv)
}

/// `rho_G`: the largest column norm of the incidence pseudoinverse.
pub fn incidence_rho(graph: &Graph) -> Result<f64> {
    let pinv = incidence_pinv(graph)?;
    Ok(pinv.column_iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// FDR bound for independent p-values: `alpha (1 + rad / (1 - tau))`.
pub fn fdr_bound_independent(alpha: f64, tau: f64, rad: f64) -> f64 {
    alpha * (1.0 + rad / (1.0 - tau))
}

/// Inputs to the dependent-case FDR bound beyond `alpha`, `tau` and the
/// complexity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependentBoundParams {
    /// Condition number of the copula covariance.
    pub kappa: f64,
    /// Discovery-fraction floor.
    pub c: f64,
    pub epsilon: f64,
    /// `Pr(k_hat < c n)`.
    pub prob_small_khat: f64,
}

impl DependentBoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0) {
            return Err(Error::invalid("kappa must be >= 1"));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::invalid("c must lie in (0, 1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::invalid("epsilon must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.prob_small_khat) {
            return Err(Error::invalid("prob_small_khat must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// FDR bound for p-values from a Gaussian copula:
///
/// ```text
/// alpha [1 + sqrt(rad sqrt(log(e n^2))) (4 / (sqrt(eps) (1 - tau)) + 4 kappa^(1/4) / sqrt(alpha c))
///          + sqrt(log(n) / n) sqrt(kappa) / (alpha c sqrt(2))] + Pr(k_hat < c n)
/// ```
pub fn fdr_bound_dependent(
    alpha: f64,
    tau: f64,
    rad: f64,
    params: &DependentBoundParams,
    n: usize,
) -> Result<f64> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let nf = n as f64;
    let DependentBoundParams {
        kappa,
        c,
        epsilon,
        prob_small_khat,
    } = *params;
    let log_term = (1.0 + 2.0 * nf.ln()).sqrt();
    let middle = (rad * log_term).sqrt()
        * (4.0 / (epsilon.sqrt() * (1.0 - tau)) + 4.0 * kappa.powf(0.25) / (alpha * c).sqrt());
    let last = (nf.ln() / nf).sqrt() * kappa.sqrt() / (alpha * c * std::f64::consts::SQRT_2);
    Ok(alpha * (1.0 + middle + last) + prob_small_khat)
}

/// One coordinate of a mean-zero product distribution on `[-1, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoordDist {
    Rademacher,
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// Finite support in `[-1, 1]` with the given probabilities.
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
}

impl CoordDist {
    fn validate(&self) -> Result<()> {
        if let CoordDist::Discrete { values, probs } = self {
            if values.len() != probs.len() || values.is_empty() {
                return Err(Error::invalid(
                    "discrete distribution needs matching support and weights",
                ));
            }
            if values.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::invalid("support must lie in [-1, 1]"));
            }
            if probs.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::invalid("probabilities must be nonnegative"));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("probabilities must sum to one"));
            }
            let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
            if mean.abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "coordinate distribution has mean {mean}, expected zero"
                )));
            }
            let second: f64 = values.iter().zip(probs).map(|(v, p)| v * v * p).sum();
            if second == 0.0 {
                return Err(Error::invalid("point mass at zero is not allowed"));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            CoordDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoordDist::Uniform => rng.random_range(-1.0..=1.0),
            CoordDist::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }
}

/// Monte Carlo estimate of `E[(1/n) max_{x ∈ A} |<x, Y>|]` for `Y` drawn
/// from the product distribution `dist` and a finite set `A`.
pub fn cube_complexity_mc(
    points: &[Vec<f64>],
    dist: &[CoordDist],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let n = dist.len();
    if points.is_empty() || n == 0 || samples == 0 {
        return Err(Error::invalid(
            "need a nonempty point set, dimension and sample count",
        ));
    }
    if points.iter().any(|x| x.len() != n) {
        return Err(Error::invalid(
            "point dimension does not match the distribution",
        ));
    }
    for d in dist {
        d.validate()?;
    }
    let nf = n as f64;
    Ok(mc_mean(samples, seed, |rng| {
        let y: Vec<f64> = dist.iter().map(|d| d.sample(rng)).collect();
        points
            .iter()
            .map(|x| x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max)
            / nf
    }))
}

/// Monte Carlo Rademacher complexity of a finite set.
pub fn rad_mc_points(points: &[Vec<f64>], samples: usize, seed: u64) -> Result<McEstimate> {
    let n = points.first().map_or(0, Vec::len);
    cube_complexity_mc(points, &vec![CoordDist::Rademacher; n], samples, seed)
}
