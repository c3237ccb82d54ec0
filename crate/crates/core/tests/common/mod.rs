//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's algorithms.

#![allow(dead_code)]

/// `k_hat` and rejection set straight from the definition: the largest `k`
/// with at least `k` p-values at or below `(alpha / q_i)(k / n) ∧ tau`.
pub fn brute_force_rejections(p: &[f64], q: &[f64], alpha: f64, tau: f64) -> (usize, Vec<usize>) {
    let n = p.len();
    let thr = |i: usize, k: usize| (alpha / q[i] * (k as f64 / n as f64)).min(tau);
    for k in (1..=n).rev() {
        let hits: Vec<usize> = (0..n).filter(|&i| p[i] <= thr(i, k)).collect();
        if hits.len() >= k {
            return (k, hits);
        }
    }
    (0, Vec::new())
}

pub fn brute_force_storey_q(p: &[f64], tau: f64, floor: f64) -> Vec<f64> {
    let n = p.len();
    let above = p.iter().filter(|&&v| v > tau).count() as f64;
    let pi0 = (above / (n as f64 * (1.0 - tau))).min(1.0);
    vec![pi0.max(floor).min(1.0); n]
}

/// Least-squares nondecreasing fit by trying every split into contiguous
/// blocks. Only for small `n`.
pub fn brute_force_isotonic(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let mean = z[start..end].iter().sum::<f64>() / (end - start) as f64;
                fit.extend(std::iter::repeat_n(mean, end - start));
                start = end;
            }
        }
        if fit.windows(2).any(|w| w[0] > w[1]) {
            continue;
        }
        let err: f64 = fit.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, fit));
        }
    }
    best.unwrap().1
}

/// Largest violation of the optimality conditions for `x = Proj_{||.||_1 <= m}(z)`.
pub fn l1_kkt_residual(z: &[f64], x: &[f64], m: f64) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let zl1: f64 = z.iter().map(|v| v.abs()).sum();
    if zl1 <= m {
        return x
            .iter()
            .zip(z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    }
    if x.iter().all(|&a| a == 0.0) {
        // any theta >= max |z_i| works
        return (l1 - m).abs();
    }
    let theta = x
        .iter()
        .zip(z)
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, b)| (b - a).abs())
        .fold(0.0, f64::max);
    let mut r = (l1 - m).abs();
    for (a, b) in x.iter().zip(z) {
        if *a != 0.0 {
            r = r.max((b - a - theta * a.signum()).abs());
            r = r.max(if a.signum() == b.signum() {
                0.0
            } else {
                a.abs()
            });
        } else {
            r = r.max((b.abs() - theta).max(0.0));
        }
    }
    r.max((-theta).max(0.0))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Projection onto `{y >= 0 : sum_{ind} 1 / y_i <= n (1 - tau)}` by
/// maximizing the concave dual over the multiplier with golden-section
/// search; each inner minimization of `(y - z)^2 / 2 + lambda / y` is also
/// a golden-section search.
pub fn feasible_projection_oracle(z: &[f64], ind: &[bool], tau: f64, n: usize) -> Vec<f64> {
    let c = n as f64 * (1.0 - tau);
    let y_of = |lambda: f64| -> Vec<f64> {
        z.iter()
            .zip(ind)
            .map(|(&zi, &b)| {
                if !b {
                    return zi.max(0.0);
                }
                if lambda == 0.0 {
                    return zi.max(1e-300);
                }
                let hi = zi.max(0.0) + lambda.cbrt() + 1.0;
                golden_min(|y| 0.5 * (y - zi).powi(2) + lambda / y, 1e-12, hi, 200)
            })
            .collect()
    };
    let g = |y: &[f64]| -> f64 { y.iter().zip(ind).filter(|p| *p.1).map(|p| 1.0 / p.0).sum() };
    let y0 = y_of(0.0);
    if z.iter().zip(ind).all(|(&v, &b)| !b || v > 0.0) && g(&y0) <= c {
        return y0;
    }
    let dual = |lambda: f64| -> f64 {
        let y = y_of(lambda);
        let primal: f64 = y.iter().zip(z).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
        -(primal + lambda * (g(&y) - c))
    };
    let mut hi = 1.0;
    while g(&y_of(hi)) > c {
        hi *= 2.0;
    }
    let lambda = golden_min(dual, 0.0, hi, 200);
    y_of(lambda)
}

/// Censored-Bernoulli log-likelihood: an exceedance has probability
/// `q (1 - tau)`.
pub fn log_likelihood(q: &[f64], ind: &[bool], tau: f64) -> f64 {
    q.iter()
        .zip(ind)
        .map(|(&qi, &b)| {
            let s = qi * (1.0 - tau);
            if b {
                s.ln()
            } else {
                (1.0 - s).ln()
            }
        })
        .sum()
}

pub fn constraint_value(q: &[f64], ind: &[bool], tau: f64) -> f64 {
    q.iter()
        .zip(ind)
        .filter(|p| *p.1)
        .map(|p| 1.0 / (p.0 * (1.0 - tau)))
        .sum()
}

/// Grid `eps, eps + step, .., 1` (1 always included).
pub fn level_grid(eps: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = 0;
    loop {
        let x = eps + step * k as f64;
        if x >= 1.0 - 1e-12 {
            break;
        }
        v.push(x);
        k += 1;
    }
    v.push(1.0);
    v
}

/// Local refinement of a grid maximizer: pattern search from `start` with
/// moves in `{-d, 0, d}^k`, halving `d` down to `final_step`.
pub fn refine(
    start: Vec<f64>,
    objective: &dyn Fn(&[f64]) -> f64,
    feasible: &dyn Fn(&[f64]) -> bool,
    initial_step: f64,
    final_step: f64,
) -> (Vec<f64>, f64) {
    let k = start.len();
    let mut x = start;
    let mut fx = objective(&x);
    let n_moves = 3usize.pow(k as u32);
    let mut d = initial_step;
    while d >= final_step * 0.999 {
        loop {
            let mut improved = false;
            for code in 1..n_moves {
                let mut c = code;
                let mut y = x.clone();
                for v in y.iter_mut() {
                    *v += d * ((c % 3) as f64 - 1.0);
                    c /= 3;
                }
                if feasible(&y) {
                    let fy = objective(&y);
                    if fy > fx + 1e-15 {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        d /= 2.0;
    }
    (x, fx)
}

/// Exhaustive search over nondecreasing sequences of grid levels subject to
/// `sum_i cost(i, v_i) <= budget` (costs nonnegative). Branches that cannot
/// beat the incumbent are cut using suffix maxima of the scores, so the
/// result is the exact grid maximum.
pub fn best_monotone_on_grid(
    levels: &[f64],
    n: usize,
    score: &dyn Fn(usize, f64) -> f64,
    cost: &dyn Fn(usize, f64) -> f64,
    budget: f64,
) -> Option<(Vec<f64>, f64)> {
    let nl = levels.len();
    // rest[i][l]: sum over j >= i of the best score at a level >= l
    let mut rest = vec![vec![0.0; nl + 1]; n + 1];
    for i in (0..n).rev() {
        let mut best_from = f64::NEG_INFINITY;
        for l in (0..nl).rev() {
            best_from = best_from.max(score(i, levels[l]));
            rest[i][l] = best_from + rest[i + 1][l];
        }
    }
    struct Ctx<'a> {
        levels: &'a [f64],
        n: usize,
        score: &'a dyn Fn(usize, f64) -> f64,
        cost: &'a dyn Fn(usize, f64) -> f64,
        budget: f64,
        rest: Vec<Vec<f64>>,
        cur: Vec<f64>,
        best: Option<(Vec<f64>, f64)>,
    }
    fn rec(c: &mut Ctx, i: usize, from: usize, acc: f64, used: f64) {
        if i == c.n {
            if c.best.as_ref().is_none_or(|b| acc > b.1) {
                c.best = Some((c.cur.clone(), acc));
            }
            return;
        }
        if let Some((_, b)) = &c.best {
            if acc + c.rest[i][from] <= *b {
                return;
            }
        }
        for l in from..c.levels.len() {
            let v = c.levels[l];
            let u = used + (c.cost)(i, v);
            if u > c.budget {
                continue;
            }
            c.cur.push(v);
            let s = (c.score)(i, v);
            rec(c, i + 1, l, acc + s, u);
            c.cur.pop();
        }
    }
    let mut ctx = Ctx {
        levels,
        n,
        score,
        cost,
        budget,
        rest,
        cur: Vec::new(),
        best: None,
    };
    rec(&mut ctx, 0, 0, 0.0, 0.0);
    ctx.best
}

/// One-sample Kolmogorov-Smirnov statistic against Uniform[0, 1].
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
