//! Dense symmetric eigendecomposition and zero-mode (flat-band) extraction.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::SiteIndex;
use crate::matrix::HamiltonianMatrix;

/// Default cut separating zero modes from dispersive levels, in units of J.
pub const ZERO_MODE_TOL: f64 = 1e-8;

/// Amplitude above which a zero mode is considered to touch a `b` site.
pub const SUBLATTICE_TOL: f64 = 1e-8;

const MAX_SWEEPS_PER_DIM: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Component `⟨site|k⟩`.
    pub fn amplitude(&self, site: usize, k: usize) -> f64 {
        self.eigenvectors[(site, k)]
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// `max_k ‖H v_k − E_k v_k‖`.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        let hv = h.as_matrix() * &self.eigenvectors;
        (0..self.dim())
            .map(|k| (hv.column(k) - self.eigenvectors.column(k) * self.eigenvalues[k]).norm())
            .fold(0.0, f64::max)
    }

    /// `max |VᵀV − I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        let d = self.dim();
        (gram - DMatrix::<f64>::identity(d, d)).amax()
    }

    /// `V·diag(E)·Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let e = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.eigenvectors * e * self.eigenvectors.transpose()
    }
}

/// Full eigendecomposition, eigenvalues ascending.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    if let Some((row, col)) = h.asymmetry() {
        return Err(Error::NotSymmetric { row, col });
    }
    let d = h.dim();
    let max_iterations = MAX_SWEEPS_PER_DIM * d.max(1);
    let eig = SymmetricEigen::try_new(h.as_matrix().clone(), f64::EPSILON, max_iterations)
        .ok_or(Error::NoConvergence { max_iterations })?;

    let mut order: Vec<usize> = (0..d).collect();
    // stable: ties keep solver order
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// The zero-energy eigenspace of a decomposition.
///
/// Physics consumers should only read [`FlatBandSubspace::projector`]; the
/// individual basis vectors are an arbitrary orthonormal frame of a
/// degenerate space and are exposed for diagnostics and the star model.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatBandSubspace {
    indices: Vec<usize>,
    basis: DMatrix<f64>,
    projector: DMatrix<f64>,
}

impl FlatBandSubspace {
    /// Builds the subspace spanned by the orthonormal columns of `basis`.
    pub fn from_basis(indices: Vec<usize>, basis: DMatrix<f64>) -> Self {
        let projector = &basis * basis.transpose();
        Self {
            indices,
            basis,
            projector,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// `⟨i|P|j⟩`.
    pub fn element(&self, i: usize, j: usize) -> f64 {
        self.projector[(i, j)]
    }

    /// Same subspace in the frame `basis · q` for an orthogonal `q`.
    pub fn remixed(&self, q: &DMatrix<f64>) -> Self {
        Self::from_basis(self.indices.clone(), &self.basis * q)
    }

    /// `⟨v|P|v⟩` for a unit vector `v`.
    pub fn weight_of(&self, v: &DVector<f64>) -> f64 {
        (v.transpose() * &self.projector * v)[(0, 0)]
    }

    /// Largest `|⟨site|E_k⟩|` over the given sites and all basis vectors.
    pub fn max_amplitude_on(&self, sites: impl IntoIterator<Item = usize>) -> f64 {
        sites
            .into_iter()
            .map(|s| self.basis.row(s).amax())
            .fold(0.0, f64::max)
    }

    /// `max(|P² − P|, |P − Pᵀ|)` entrywise.
    pub fn idempotency_defect(&self) -> f64 {
        let p = &self.projector;
        let sq = (p * p - p).amax();
        let sym = (p - p.transpose()).amax();
        sq.max(sym)
    }
}

/// All eigenpairs with `|E| < tol`.
pub fn flat_band_subspace(dec: &SpectralDecomposition, tol: f64) -> Result<FlatBandSubspace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("zero-mode tolerance must be positive"));
    }
    let indices: Vec<usize> = (0..dec.dim())
        .filter(|&k| dec.eigenvalues[k].abs() < tol)
        .collect();
    let basis = dec.eigenvectors.select_columns(indices.iter());
    Ok(FlatBandSubspace::from_basis(indices, basis))
}

/// Flat band of a bare channel, certified against the bipartite theorem:
/// at least `N` zero modes, none of them touching a `b` site.
pub fn channel_flat_band(
    dec: &SpectralDecomposition,
    idx: &SiteIndex,
    tol: f64,
) -> Result<FlatBandSubspace> {
    if idx.has_ends() || idx.dim() != dec.dim() {
        return Err(Error::DimensionMismatch {
            expected: 3 * idx.cells(),
            found: dec.dim(),
        });
    }
    let sub = flat_band_subspace(dec, tol)?;
    let n = idx.cells();
    if sub.dimension() < n {
        let mut near: Vec<f64> = dec.eigenvalues.clone();
        near.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        near.truncate(n + 1);
        return Err(Error::BrokenDegeneracy {
            found: sub.dimension(),
            expected: n,
            near_zero: near,
        });
    }
    let leak = sub.max_amplitude_on(idx.b_sites());
    if leak > SUBLATTICE_TOL {
        return Err(Error::SublatticeLeak(leak));
    }
    Ok(sub)
}

/// Number of eigenvalues with `|E| < tol`.
pub fn zero_mode_count(dec: &SpectralDecomposition, tol: f64) -> usize {
    dec.eigenvalues.iter().filter(|e| e.abs() < tol).count()
}

/// Random `k × k` orthogonal matrix (QR of a matrix with uniform entries).
pub fn random_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}
