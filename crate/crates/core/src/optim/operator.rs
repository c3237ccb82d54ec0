use crate::structure::Graph;

/// A real matrix `M` with `n_rows x n_cols` entries, applied matrix-free.
pub trait LinearOperator: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `out = M x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = M^T y`
    fn apply_transpose(&self, y: &[f64], out: &mut [f64]);

    fn is_identity(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn n_rows(&self) -> usize {
        self.0
    }

    fn n_cols(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }

    fn is_identity(&self) -> bool {
        true
    }
}

/// Edge incidence matrix of a graph: the row for edge `(i, j)` has `+1` in
/// column `i` and `-1` in column `j`.
#[derive(Debug, Clone)]
pub struct Incidence<'a> {
    graph: &'a Graph,
}

impl<'a> Incidence<'a> {
    pub fn new(graph: &'a Graph) -> Self {
        Incidence { graph }
    }
}

impl LinearOperator for Incidence<'_> {
    fn n_rows(&self) -> usize {
        self.graph.n_edges()
    }

    fn n_cols(&self) -> usize {
        self.graph.n_nodes()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, &(i, j)) in out.iter_mut().zip(self.graph.edges()) {
            *o = x[i] - x[j];
        }
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&v, &(i, j)) in y.iter().zip(self.graph.edges()) {
            out[i] += v;
            out[j] -= v;
        }
    }
}

const POWER_ITERATIONS: usize = 200;
const SAFETY_FACTOR: f64 = 1.01;

/// Upper estimate of `||M||^2` (largest eigenvalue of `M^T M`) from power
/// iteration, inflated by 1%.
pub fn operator_norm_sq(op: &dyn LinearOperator) -> f64 {
    let n = op.n_cols();
    if n == 0 || op.n_rows() == 0 {
        return 0.0;
    }
    if op.is_identity() {
        return SAFETY_FACTOR;
    }
    // Deterministic, generic start vector (not orthogonal to any fixed
    // eigenvector of the structured matrices we use).
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    let mut mx = vec![0.0; op.n_rows()];
    let mut mtmx = vec![0.0; n];
    let mut best: f64 = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        op.apply(&x, &mut mx);
        let rayleigh = mx.iter().map(|v| v * v).sum::<f64>();
        best = best.max(rayleigh);
        op.apply_transpose(&mx, &mut mtmx);
        std::mem::swap(&mut x, &mut mtmx);
    }
    best * SAFETY_FACTOR
}
