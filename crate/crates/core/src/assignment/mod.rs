//! Square linear assignment solvers on dense `f64` cost matrices.
//!
//! [`hungarian`] is exact. [`auction`] is Bertsekas' forward auction with
//! ε-scaling; it keeps lowering ε until the `n·ε` optimality gap is within a
//! requested relative tolerance of the cost it found.

mod auction;
mod hungarian;

pub use auction::auction;
pub use hungarian::hungarian;

/// Row-major square cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(size: usize, mut cost: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                data.push(cost(i, j));
            }
        }
        Self { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Sum of the costs selected by `row_to_col`, accumulated in row order.
    pub fn total(&self, row_to_col: &[usize]) -> f64 {
        row_to_col.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// A perfect matching of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}
