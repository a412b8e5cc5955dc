use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real symmetric Hamiltonian in the single-excitation sector.
///
/// Couplings are written through [`HamiltonianMatrix::set_coupling`], which
/// stores the value and its mirror in one step, so a matrix built through the
/// public API is symmetric bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    entries: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    /// Wraps an arbitrary square matrix without checking symmetry.
    ///
    /// Consumers that need symmetry ([`crate::spectral::eigendecompose`])
    /// check it themselves; this exists for validation hooks and tests.
    pub fn from_raw(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) {
        self.entries[(i, j)] = value;
        self.entries[(j, i)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// First `(row, col)` with `H[row][col] != H[col][row]`, if any.
    pub fn asymmetry(&self) -> Option<(usize, usize)> {
        let d = self.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                if self.entries[(i, j)].to_bits() != self.entries[(j, i)].to_bits() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry().is_none()
    }

    /// Largest absolute row sum (the induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Number of nonzero entries strictly above the diagonal.
    pub fn upper_nonzeros(&self) -> usize {
        let d = self.dim();
        (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.entries[(i, j)] != 0.0)
            .count()
    }
}
