//! Structural side information: group partitions, graphs and the structure
//! class a weight estimator works in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of `0..n` into `d` nonempty groups.
///
/// Labels are stored 0-based internally; files use 1-based group ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Grouping {
    /// Builds a grouping from 0-based labels. Every label in `0..d` must be used.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("grouping must label at least one index"));
        }
        let d = labels.iter().max().map_or(0, |&m| m + 1);
        let mut sizes = vec![0usize; d];
        for &g in &labels {
            sizes[g] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("group {} is empty", empty + 1)));
        }
        Ok(Grouping { labels, sizes })
    }

    /// A single group covering every index.
    pub fn single(n: usize) -> Result<Self> {
        Self::from_labels(vec![0; n])
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect();
        Self::from_labels(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Sums `values` within each group.
    pub fn group_sums(&self, values: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_groups()];
        for (&g, &v) in self.labels.iter().zip(values) {
            sums[g] += v;
        }
        sums
    }

    /// Expands one value per group to one value per index.
    pub fn broadcast(&self, per_group: &[f64]) -> Vec<f64> {
        self.labels.iter().map(|&g| per_group[g]).collect()
    }
}

/// A connected, simple, undirected graph on nodes `0..n_nodes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates and builds a graph. Rejects self loops, duplicate edges,
    /// out-of-range endpoints and disconnected graphs.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("graph must have at least one node"));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) references a node outside 1..={n_nodes}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self loop at node {}", i + 1)));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::invalid(format!(
                    "duplicate edge ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
        let graph = Graph { n_nodes, edges };
        if !graph.is_connected() {
            return Err(Error::invalid("graph is not connected"));
        }
        Ok(graph)
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    /// 4-neighbour lattice on a `rows x cols` grid, node index `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push((i, i + 1));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `sum over edges |x_i - x_j|`.
    pub fn total_variation(&self, x: &[f64]) -> f64 {
        self.edges.iter().map(|&(i, j)| (x[i] - x[j]).abs()).sum()
    }

    fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut visited = vec![false; self.n_nodes];
        let mut stack = vec![0];
        visited[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n_nodes
    }
}

/// How an ordered weight vector is fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderedFit {
    /// `(eps, .., eps, 1, .., 1)` with the largest admissible prefix.
    Step,
    /// Constrained maximum likelihood over nondecreasing vectors.
    Mle,
}

/// The structure class a weight vector is constrained to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Structure {
    Ordered {
        fit: OrderedFit,
    },
    Grouped {
        grouping: Grouping,
    },
    TvGraph {
        graph: Graph,
        m: f64,
    },
    Constant,
    /// Two groups formed from the signs of the test statistics.
    SignSplit {
        grouping: Grouping,
    },
}

/// A structure class together with the lower bound `epsilon` on the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub epsilon: f64,
    pub structure: Structure,
}

impl StructureSpec {
    pub fn new(epsilon: f64, structure: Structure) -> Result<Self> {
        let spec = StructureSpec { epsilon, structure };
        spec.validate_params()?;
        Ok(spec)
    }

    pub fn ordered_step(epsilon: f64) -> Result<Self> {
        Self::new(
            epsilon,
            Structure::Ordered {
                fit: OrderedFit::Step,
            },
        )
    }

    pub fn ordered_mle(epsilon: f64) -> Result<Self> {
        Self::new(
            epsilon,
            Structure::Ordered {
                fit: OrderedFit::Mle,
            },
        )
    }

    pub fn grouped(epsilon: f64, grouping: Grouping) -> Result<Self> {
        Self::new(epsilon, Structure::Grouped { grouping })
    }

    pub fn tv_graph(epsilon: f64, graph: Graph, m: f64) -> Result<Self> {
        Self::new(epsilon, Structure::TvGraph { graph, m })
    }

    pub fn constant(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, Structure::Constant)
    }

    pub fn sign_split(epsilon: f64, grouping: Grouping) -> Result<Self> {
        Self::new(epsilon, Structure::SignSplit { grouping })
    }

    fn validate_params(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if let Structure::TvGraph { m, .. } = &self.structure {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::invalid(format!(
                    "total variation budget m must be finite and >= 0, got {m}"
                )));
            }
        }
        Ok(())
    }

    /// Checks the spec against a problem of size `n`.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate_params()?;
        let covered = match &self.structure {
            Structure::Grouped { grouping } | Structure::SignSplit { grouping } => {
                Some(grouping.len())
            }
            Structure::TvGraph { graph, .. } => Some(graph.n_nodes()),
            _ => None,
        };
        match covered {
            Some(k) if k != n => Err(Error::invalid(format!(
                "structure covers {k} indices but there are {n} p-values"
            ))),
            _ => Ok(()),
        }
    }

    /// Short label used in reports and CLI output.
    pub fn label(&self) -> &'static str {
        match &self.structure {
            Structure::Ordered {
                fit: OrderedFit::Step,
            } => "ordered-step",
            Structure::Ordered {
                fit: OrderedFit::Mle,
            } => "ordered-mle",
            Structure::Grouped { .. } => "grouped",
            Structure::TvGraph { .. } => "tv-l1",
            Structure::Constant => "constant",
            Structure::SignSplit { .. } => "sign-split",
        }
    }
}
