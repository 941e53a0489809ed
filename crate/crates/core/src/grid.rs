//! Uniform time grids and the sampled paths defined on them.

use crate::error::Error;
use crate::Result;

/// Uniform discretization of `[0, t_end]` into `n_steps` intervals.
///
/// Node `k` sits at `k * t_end / n_steps`, computed directly from the node
/// index rather than by accumulating `dt`, so grid times carry no float
/// drift. The endpoints are exactly `0` and `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(Error::InvalidGrid {
                reason: format!("t_end must be positive and finite, got {t_end}"),
            });
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid {
                reason: "n_steps must be at least 1".into(),
            });
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Time of node `k`.
    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_steps);
        if k == 0 {
            0.0
        } else if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.t_end / self.n_steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |k| self.time(k))
    }
}

/// What a path's values represent. Noise kinds (`Brownian`, `Ou`, `GeneralZ`)
/// start at zero by construction; `Infected` values live in `(0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    Brownian,
    Ou,
    GeneralZ,
    Infected,
    WzSmoothed,
}

impl PathKind {
    /// Kinds whose first value must be exactly zero.
    fn starts_at_zero(self) -> bool {
        matches!(self, PathKind::Brownian | PathKind::Ou | PathKind::GeneralZ)
    }
}

/// A single process realization on a grid: one value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    kind: PathKind,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, kind: PathKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidPath {
                reason: format!(
                    "expected {} values for {} steps, got {}",
                    grid.n_nodes(),
                    grid.n_steps(),
                    values.len()
                ),
            });
        }
        if kind.starts_at_zero() && values[0] != 0.0 {
            return Err(Error::InvalidPath {
                reason: format!("{kind:?} paths must start at 0, got {}", values[0]),
            });
        }
        Ok(Self { grid, kind, values })
    }

    /// All-zero path of the given kind.
    pub fn zeros(grid: TimeGrid, kind: PathKind) -> Self {
        Self {
            grid,
            kind,
            values: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("grid has at least two nodes")
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }
}
