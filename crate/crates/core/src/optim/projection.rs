//! Euclidean projections used by the ADMM solver.

use crate::structure::Grouping;

/// A closed convex set with a cheap Euclidean projection.
pub trait ConstraintSet: Sync {
    fn project(&self, z: &[f64]) -> Vec<f64>;
}

/// `{x : x_1 <= ... <= x_n}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MonotoneCone;

impl ConstraintSet for MonotoneCone {
    fn project(&self, z: &[f64]) -> Vec<f64> {
        proj_isotonic(z)
    }
}

/// Vectors that are constant within each group.
#[derive(Debug, Clone)]
pub struct GroupConstant<'a>(pub &'a Grouping);

impl ConstraintSet for GroupConstant<'_> {
    fn project(&self, z: &[f64]) -> Vec<f64> {
        proj_group_mean(z, self.0)
    }
}

/// `{x : ||x||_1 <= radius}`.
#[derive(Debug, Clone, Copy)]
pub struct L1Ball(pub f64);

impl ConstraintSet for L1Ball {
    fn project(&self, z: &[f64]) -> Vec<f64> {
        proj_l1_ball(z, self.0)
    }
}

/// Isotonic (nondecreasing) least-squares fit by pool adjacent violators.
pub fn proj_isotonic(z: &[f64]) -> Vec<f64> {
    // (block mean, block length)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(z.len());
    for &v in z {
        let mut mean = v;
        let mut len = 1usize;
        while let Some(&(prev_mean, prev_len)) = blocks.last() {
            if prev_mean <= mean {
                break;
            }
            blocks.pop();
            let total = prev_len + len;
            mean = (prev_mean * prev_len as f64 + mean * len as f64) / total as f64;
            len = total;
        }
        blocks.push((mean, len));
    }
    blocks
        .into_iter()
        .flat_map(|(mean, len)| std::iter::repeat_n(mean, len))
        .collect()
}

/// Replaces each coordinate with the mean of its group.
pub fn proj_group_mean(z: &[f64], grouping: &Grouping) -> Vec<f64> {
    let sums = grouping.group_sums(z);
    let means: Vec<f64> = sums
        .iter()
        .zip(grouping.sizes())
        .map(|(s, &n)| s / n as f64)
        .collect();
    grouping.broadcast(&means)
}

/// Soft-thresholds `z` onto the l1 ball of radius `m`, with the threshold
/// found exactly from the sorted magnitudes.
pub fn proj_l1_ball(z: &[f64], m: f64) -> Vec<f64> {
    let norm: f64 = z.iter().map(|v| v.abs()).sum();
    if norm <= m {
        return z.to_vec();
    }
    if m <= 0.0 {
        return vec![0.0; z.len()];
    }
    let theta = l1_threshold(z, m);
    z.iter()
        .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
        .collect()
}

/// The `theta >= 0` with `sum_i max(|z_i| - theta, 0) = m`, assuming
/// `||z||_1 > m > 0`.
pub(crate) fn l1_threshold(z: &[f64], m: f64) -> f64 {
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - m) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

/// The unique root `t > max(x, 0)` of `t^3 - x t^2 = lambda`, for `lambda > 0`.
///
/// Closed-form (Cardano or trigonometric) estimate followed by a safeguarded
/// Newton polish on `t^2 (t - x) - lambda`.
pub fn solve_cubic_branch(x: f64, lambda: f64) -> f64 {
    let lo0 = x.max(0.0);
    if lambda <= 0.0 {
        return lo0;
    }
    let mut lo = lo0;
    let mut hi = lo0 + lambda.cbrt();

    // depressed cubic s^3 + p s + q = 0 with t = s + x / 3
    let p = -x * x / 3.0;
    let half_q = -(x * x * x / 27.0 + lambda / 2.0);
    let disc = lambda * (x * x * x / 27.0 + lambda / 4.0);
    let mut t = if disc >= 0.0 {
        let a = (-half_q + disc.sqrt()).cbrt();
        let s = if a != 0.0 { a - p / (3.0 * a) } else { 0.0 };
        s + x / 3.0
    } else {
        let r = (-p / 3.0).sqrt();
        let cos_arg = (half_q / (-r * r * r)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos();
        2.0 * r * (phi / 3.0).cos() + x / 3.0
    };
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }

    let f = |t: f64| t * t * (t - x) - lambda;
    for _ in 0..100 {
        let ft = f(t);
        if ft == 0.0 {
            return t;
        }
        if ft > 0.0 {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
        let deriv = t * (3.0 * t - 2.0 * x);
        let mut next = t - ft / deriv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * t.abs().max(1.0) {
            return next;
        }
        t = next;
    }
    t
}

/// Projection onto `{y >= 0 : sum_i 1{ind_i} / (y_i (1 - tau)) <= n}`.
///
/// Coordinates without an exceedance are projected onto the nonnegative
/// half-line; the rest follow the cubic branch `y_i = t(z_i, lambda)` with
/// `lambda` found by bisection so the constraint is met with equality from
/// the feasible side.
pub fn proj_feasible_g(z: &[f64], indicators: &[bool], tau: f64, n: usize) -> Vec<f64> {
    let target = n as f64 * (1.0 - tau);
    let base: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
    let k = indicators.iter().filter(|&&b| b).count();
    if k == 0 {
        return base;
    }
    let active = |y: &[f64]| -> f64 {
        y.iter()
            .zip(indicators)
            .filter(|(_, &b)| b)
            .map(|(&v, _)| 1.0 / v)
            .sum()
    };
    let all_positive = z.iter().zip(indicators).all(|(&v, &b)| !b || v > 0.0);
    if all_positive && active(&base) <= target {
        return base;
    }

    let y_at = |lambda: f64| -> Vec<f64> {
        z.iter()
            .zip(indicators)
            .map(|(&v, &b)| {
                if b {
                    solve_cubic_branch(v, lambda)
                } else {
                    v.max(0.0)
                }
            })
            .collect()
    };
    let g = |lambda: f64| active(&y_at(lambda));

    let mut hi = 1.0;
    while g(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm > target {
            lo = mid;
        } else {
            hi = mid;
            if target - gm <= 1e-12 * target {
                break;
            }
        }
    }
    y_at(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotonic_examples() {
        assert_eq!(
            proj_isotonic(&[1.0, 2.0, 2.0, 5.0]),
            vec![1.0, 2.0, 2.0, 5.0]
        );
        assert_eq!(proj_isotonic(&[3.0, 1.0, 2.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(proj_isotonic(&[1.0, 3.0, 2.0]), vec![1.0, 2.5, 2.5]);
        assert!(proj_isotonic(&[]).is_empty());
    }

    #[test]
    fn group_mean_examples() {
        let g = Grouping::from_labels(vec![0, 0, 1]).unwrap();
        assert_eq!(proj_group_mean(&[0.0, 1.0, 5.0], &g), vec![0.5, 0.5, 5.0]);
        let singletons = Grouping::from_labels(vec![0, 1, 2]).unwrap();
        assert_eq!(
            proj_group_mean(&[0.3, 0.1, 0.2], &singletons),
            vec![0.3, 0.1, 0.2]
        );
        assert_eq!(proj_group_mean(&[0.4; 3], &g), vec![0.4; 3]);
    }

    #[test]
    fn l1_ball_examples() {
        assert_eq!(proj_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        let x = proj_l1_ball(&[3.0, 0.0], 1.0);
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1] == 0.0);
        let x = proj_l1_ball(&[2.0, 2.0], 2.0);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert_eq!(proj_l1_ball(&[1.0, -1.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn cubic_examples() {
        assert!((solve_cubic_branch(0.0, 8.0) - 2.0).abs() < 1e-12);
        assert!((solve_cubic_branch(1.0, 4.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_residual_contract() {
        // For large x with tiny lambda the residual is limited by ulp(t) t^2.
        for &x in &[-50.0, -3.0, -0.1, 0.0, 1e-9, 0.5, 2.0, 10.0] {
            for &lambda in &[1e-9, 1e-4, 0.3, 1.0, 17.0, 1e3, 1e6] {
                let t = solve_cubic_branch(x, lambda);
                assert!(t > x.max(0.0), "x={x} lambda={lambda} t={t}");
                let resid = t * t * (t - x) - lambda;
                assert!(
                    resid.abs() <= 1e-10 * lambda.max(1.0),
                    "x={x} lambda={lambda} resid={resid}"
                );
            }
        }
    }

    #[test]
    fn feasible_projection_examples() {
        let z = [1.2, 0.7];
        assert_eq!(proj_feasible_g(&z, &[true, false], 0.5, 2), z.to_vec());

        let y = proj_feasible_g(&[0.2, 0.7], &[true, false], 0.5, 2);
        assert!((y[0] - 1.0).abs() < 1e-9, "{y:?}");
        assert_eq!(y[1], 0.7);
    }

    #[test]
    fn feasible_projection_handles_nonpositive_inputs() {
        let y = proj_feasible_g(&[-0.5, -0.2, 0.3], &[true, false, true], 0.5, 3);
        assert_eq!(y[1], 0.0);
        let s = 1.0 / y[0] + 1.0 / y[2];
        assert!(s <= 1.5 && s > 1.5 * (1.0 - 1e-9), "{s}");
    }
}
