//! Scenario generators, the trial runner and FDP / power metrics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::AdmmConfig;
use crate::procedures::{
    bh, sabha, storey_bh, MethodConfig, PValues, RejectionResult, WeightVector,
};
use crate::stats::{two_sided_z, upper_tail_z};
use crate::structure::{Graph, StructureSpec};
use crate::weights::estimate_weights;

pub const GRID_SIDE: usize = 15;
/// Squared lattice distance from a corner that still counts as signal region.
const REGION_RADIUS_SQ: usize = 36;
const REGION_SIZE: usize = 70;
pub const Q_REGION: f64 = 0.1;
pub const Q_BACKGROUND: f64 = 0.9;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Indices `r * side + c` of the two quarter-discs around the top-right and
/// bottom-left corners.
pub fn grid_region(side: usize) -> Vec<usize> {
    let last = side - 1;
    let mut out = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let top_right = r * r + (last - c) * (last - c);
            let bottom_left = (last - r) * (last - r) + c * c;
            if top_right <= REGION_RADIUS_SQ || bottom_left <= REGION_RADIUS_SQ {
                out.push(r * side + c);
            }
        }
    }
    out
}

/// The fixed 15 x 15 layout of null probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScenario {
    pub side: usize,
    pub region: Vec<usize>,
    pub q_true: Vec<f64>,
}

impl GridScenario {
    pub fn standard() -> Self {
        let side = GRID_SIDE;
        let region = grid_region(side);
        assert_eq!(
            region.len(),
            REGION_SIZE,
            "signal region has the wrong size"
        );
        let mut q_true = vec![Q_BACKGROUND; side * side];
        for &i in &region {
            q_true[i] = Q_REGION;
        }
        GridScenario {
            side,
            region,
            q_true,
        }
    }

    pub fn n(&self) -> usize {
        self.side * self.side
    }

    pub fn graph(&self) -> Graph {
        Graph::grid(self.side, self.side).expect("grid graph is valid")
    }

    /// Draws non-null indicators and two-sided z-test p-values.
    pub fn draw(&self, mu_sig: f64, rng: &mut impl Rng) -> Draw {
        let mut p = Vec::with_capacity(self.n());
        let mut nulls = Vec::new();
        for (i, &q) in self.q_true.iter().enumerate() {
            let signal = rng.random::<f64>() >= q;
            let noise: f64 = rng.sample(StandardNormal);
            let z = if signal { mu_sig + noise } else { noise };
            if !signal {
                nulls.push(i);
            }
            p.push(two_sided_z(z));
        }
        Draw {
            q_true: self.q_true.clone(),
            p: PValues::new(p).expect("two-sided p-values lie in [0, 1]"),
            nulls,
        }
    }
}

/// One realization of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub q_true: Vec<f64>,
    pub p: PValues,
    /// Indices of true nulls, increasing.
    pub nulls: Vec<usize>,
}

/// Draws the grid scenario once.
pub fn make_grid_scenario(mu_sig: f64, seed: u64) -> Result<Draw> {
    if !(mu_sig >= 0.0 && mu_sig.is_finite()) {
        return Err(Error::invalid("mu_sig must be finite and nonnegative"));
    }
    let mut rng = rng_for(seed, 0);
    Ok(GridScenario::standard().draw(mu_sig, &mut rng))
}

/// AR(1) correlation matrix `rho^|i - j|`.
pub fn ar1_covariance(n: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid(format!(
            "AR(1) coefficient {rho} does not give a positive definite matrix"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        rho.powi(i.abs_diff(j) as i32)
    }))
}

/// Ratio of extreme eigenvalues of a symmetric positive definite matrix.
pub fn condition_number(sigma: &DMatrix<f64>) -> Result<f64> {
    let eig = sigma.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(Error::invalid("matrix is not positive definite"));
    }
    Ok(max / min)
}

/// `Z ~ N(mu, Sigma)` with AR(1) correlation and one-sided p-values
/// `1 - Phi(Z_i)`.
///
/// The Cholesky factor of an AR(1) matrix is applied as the recursion
/// `z_i = rho z_{i-1} + sqrt(1 - rho^2) e_i`, so no dense matrix is formed.
pub fn make_dependent_scenario(
    n: usize,
    ar1_rho: f64,
    mu: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, PValues)> {
    if mu.len() != n || n == 0 {
        return Err(Error::invalid("mean vector must have length n > 0"));
    }
    if !(ar1_rho.abs() < 1.0) {
        return Err(Error::invalid(format!(
            "AR(1) coefficient {ar1_rho} does not give a positive definite matrix"
        )));
    }
    let mut rng = rng_for(seed, 0);
    let innov = (1.0 - ar1_rho * ar1_rho).sqrt();
    let mut prev = 0.0;
    let mut z = Vec::with_capacity(n);
    for (i, m) in mu.iter().enumerate() {
        let e: f64 = rng.sample(StandardNormal);
        prev = if i == 0 {
            e
        } else {
            ar1_rho * prev + innov * e
        };
        z.push(prev + m);
    }
    let p = PValues::new(z.iter().map(|&v| upper_tail_z(v)).collect())?;
    Ok((z, p))
}

/// `#(rejected ∩ nulls) / (1 ∨ #rejected)`. `nulls` must be sorted.
pub fn fdp_of(result: &RejectionResult, nulls: &[usize]) -> f64 {
    let false_rej = result
        .rejected
        .iter()
        .filter(|i| nulls.binary_search(i).is_ok())
        .count();
    false_rej as f64 / result.rejected.len().max(1) as f64
}

/// `#(rejected \ nulls) / (1 ∨ #non-nulls)`. `nulls` must be sorted.
pub fn power_of(result: &RejectionResult, nulls: &[usize], n: usize) -> f64 {
    let true_rej = result
        .rejected
        .iter()
        .filter(|i| nulls.binary_search(i).is_err())
        .count();
    true_rej as f64 / (n - nulls.len()).max(1) as f64
}

/// A procedure compared in the grid experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Bh,
    StoreyBh,
    /// SABHA with the true null probabilities.
    OracleSabha,
    /// SABHA with total-variation weights of budget `m` on the grid graph.
    SabhaTv {
        m: f64,
    },
}

impl Method {
    /// BH, Storey-BH, oracle SABHA and SABHA with `m ∈ {10, 15, 20}`.
    pub fn standard_set() -> Vec<Method> {
        vec![
            Method::Bh,
            Method::StoreyBh,
            Method::OracleSabha,
            Method::SabhaTv { m: 10.0 },
            Method::SabhaTv { m: 15.0 },
            Method::SabhaTv { m: 20.0 },
        ]
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Bh => f.write_str("bh"),
            Method::StoreyBh => f.write_str("storey-bh"),
            Method::OracleSabha => f.write_str("oracle-sabha"),
            Method::SabhaTv { m } => write!(f, "sabha-m{m}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bh" => Ok(Method::Bh),
            "storey" | "storey-bh" => Ok(Method::StoreyBh),
            "oracle" | "oracle-sabha" => Ok(Method::OracleSabha),
            _ => {
                let m = s
                    .strip_prefix("sabha-m")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|m| *m >= 0.0 && m.is_finite())
                    .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))?;
                Ok(Method::SabhaTv { m })
            }
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Configuration of the grid experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub mu_sig: Vec<f64>,
    pub methods: Vec<Method>,
    pub n_trials: usize,
    pub alpha: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(skip)]
    pub admm: AdmmConfig,
}

impl Experiment {
    /// The standard setup: `alpha = 0.1`, `tau = 0.5`, `eps = 0.1`,
    /// 50 trials and `mu_sig ∈ {0.5, 1.0, .., 3.5}`.
    pub fn standard(seed: u64) -> Self {
        Experiment {
            mu_sig: (1..=7).map(|k| 0.5 * k as f64).collect(),
            methods: Method::standard_set(),
            n_trials: 50,
            alpha: 0.1,
            tau: 0.5,
            epsilon: 0.1,
            seed,
            admm: AdmmConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::invalid("need at least one trial"));
        }
        if self.methods.is_empty() || self.mu_sig.is_empty() {
            return Err(Error::invalid("need at least one method and one mu_sig"));
        }
        if self.mu_sig.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(Error::invalid(
                "mu_sig values must be finite and nonnegative",
            ));
        }
        if self.mu_sig.len() > u32::MAX as usize || self.n_trials > u32::MAX as usize {
            return Err(Error::invalid("experiment too large"));
        }
        MethodConfig::new(self.alpha, self.tau)?;
        StructureSpec::constant(self.epsilon)?;
        Ok(())
    }
}

/// Outcome of one method on one draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    pub fdp: f64,
    pub power: f64,
    pub k_hat: usize,
}

/// Runs one method on one draw.
pub fn run_method(
    method: Method,
    draw: &Draw,
    graph: &Graph,
    exp: &Experiment,
) -> Result<TrialResult> {
    let cfg = MethodConfig::new(exp.alpha, exp.tau)?;
    let result = match method {
        Method::Bh => bh(&draw.p, exp.alpha)?,
        Method::StoreyBh => storey_bh(&draw.p, &cfg)?,
        Method::OracleSabha => {
            let q = WeightVector::new(draw.q_true.clone())?;
            sabha(&draw.p, &cfg, &q)?
        }
        Method::SabhaTv { m } => {
            let spec = StructureSpec::tv_graph(exp.epsilon, graph.clone(), m)?;
            let q = estimate_weights(&draw.p, exp.tau, &spec, &exp.admm)?;
            sabha(&draw.p, &cfg, &q)?
        }
    };
    Ok(TrialResult {
        method,
        fdp: fdp_of(&result, &draw.nulls),
        power: power_of(&result, &draw.nulls, draw.p.len()),
        k_hat: result.k_hat,
    })
}

/// One cell of the summary: a method at one signal strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub mu_sig: f64,
    pub mean_fdp: f64,
    pub mean_power: f64,
    pub stderr_fdp: f64,
    pub stderr_power: f64,
    /// Trials that produced a result.
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub experiment: Experiment,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, method: Method, mu_sig: f64) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.mu_sig == mu_sig)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs the grid experiment. Each `(mu_sig, trial)` pair gets its own RNG
/// stream and all methods see the same draw, so the table does not depend on
/// `workers` or on scheduling.
pub fn run_trials(exp: &Experiment, workers: Option<usize>) -> Result<SummaryTable> {
    exp.validate()?;
    match workers {
        Some(w) => {
            if w == 0 {
                return Err(Error::invalid("worker count must be positive"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
            pool.install(|| run_trials_inner(exp))
        }
        None => run_trials_inner(exp),
    }
}

fn run_trials_inner(exp: &Experiment) -> Result<SummaryTable> {
    let scenario = GridScenario::standard();
    let graph = scenario.graph();
    let jobs: Vec<(usize, usize)> = (0..exp.mu_sig.len())
        .flat_map(|a| (0..exp.n_trials).map(move |t| (a, t)))
        .collect();
    let outcomes: Vec<Vec<Result<TrialResult>>> = jobs
        .par_iter()
        .map(|&(a, t)| {
            let mut rng = rng_for(exp.seed, ((a as u64) << 32) | t as u64);
            let draw = scenario.draw(exp.mu_sig[a], &mut rng);
            exp.methods
                .iter()
                .map(|&m| run_method(m, &draw, &graph, exp))
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for (a, &mu) in exp.mu_sig.iter().enumerate() {
        let cell = &outcomes[a * exp.n_trials..(a + 1) * exp.n_trials];
        for (j, &method) in exp.methods.iter().enumerate() {
            let ok: Vec<&TrialResult> = cell.iter().filter_map(|r| r[j].as_ref().ok()).collect();
            let fdp: Vec<f64> = ok.iter().map(|r| r.fdp).collect();
            let power: Vec<f64> = ok.iter().map(|r| r.power).collect();
            let (mean_fdp, stderr_fdp) = mean_and_stderr(&fdp);
            let (mean_power, stderr_power) = mean_and_stderr(&power);
            rows.push(SummaryRow {
                method,
                mu_sig: mu,
                mean_fdp,
                mean_power,
                stderr_fdp,
                stderr_power,
                trials: ok.len(),
                failures: exp.n_trials - ok.len(),
            });
        }
    }
    Ok(SummaryTable {
        experiment: exp.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_and_mean_null_probability() {
        let s = GridScenario::standard();
        assert_eq!(s.region.len(), 70);
        let mean = s.q_true.iter().sum::<f64>() / 225.0;
        assert!((mean - 0.6511).abs() < 1e-4, "{mean}");
        // corners belong to the region, the centre does not
        assert!(s.region.contains(&14) && s.region.contains(&210));
        assert!(!s.region.contains(&112));
    }

    #[test]
    fn fdp_and_power_examples() {
        let r = |rej: Vec<usize>| RejectionResult {
            k_hat: rej.len(),
            rejected: rej,
            thresholds: vec![],
            method: "x".into(),
        };
        assert_eq!(fdp_of(&r(vec![]), &[0, 1]), 0.0);
        assert_eq!(fdp_of(&r(vec![1, 2]), &[2]), 0.5);
        let all = r(vec![0, 1]);
        assert_eq!(fdp_of(&all, &[2, 3]), 0.0);
        assert_eq!(power_of(&all, &[2, 3], 4), 1.0);
        assert_eq!(power_of(&r(vec![0]), &[0, 1], 2), 0.0);
    }

    #[test]
    fn grid_draw_is_deterministic() {
        let a = make_grid_scenario(2.0, 5).unwrap();
        let b = make_grid_scenario(2.0, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_grid_scenario(2.0, 6).unwrap());
        assert!(make_grid_scenario(-1.0, 5).is_err());
    }

    #[test]
    fn ar1_condition_number_regression() {
        let sigma = ar1_covariance(50, 0.5).unwrap();
        let kappa = condition_number(&sigma).unwrap();
        assert!((kappa - 8.929_464_404_337_157).abs() < 1e-9, "{kappa}");
        assert!(ar1_covariance(3, 1.0).is_err());
        assert!(make_dependent_scenario(3, -1.2, &[0.0; 3], 0).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::standard_set() {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("sabha".parse::<Method>().is_err());
        assert_eq!("storey".parse::<Method>().unwrap(), Method::StoreyBh);
    }

    #[test]
    fn bh_without_signal_has_zero_power() {
        let exp = Experiment {
            mu_sig: vec![0.0],
            methods: vec![Method::Bh],
            n_trials: 4,
            ..Experiment::standard(1)
        };
        let t = run_trials(&exp, Some(2)).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].trials, 4);
        assert!(t.rows[0].mean_power <= 0.05);
    }
}
