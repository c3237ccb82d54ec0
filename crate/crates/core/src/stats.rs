//! Elementary p-value computations.
//!
//! The normal tail uses `libm::erfc` (the musl/FreeBSD implementation,
//! within about one ulp), so two-sided p-values stay accurate far in the
//! tail. The t distribution goes through the regularized incomplete beta
//! function from `statrs`.

use libm::erfc;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// One-sided (right tail) p-value `1 - Phi(z)`.
pub fn upper_tail_z(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided z-test p-value `2 (1 - Phi(|z|))`.
pub fn two_sided_z(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn two_sided_t(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

/// Paired t-test on `a - b`. Returns `(t statistic, two-sided p-value)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::Degenerate(
            "paired differences have zero variance".into(),
        ));
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    Ok((t, two_sided_t(t, nf - 1.0)))
}
