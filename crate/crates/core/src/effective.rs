//! Two-hub star model for weakly attached sender and receiver.
//!
//! To first order in `g`, `S` and `R` only talk to the zero modes `|E_k⟩` of
//! the channel, through `g·μ_{1,k}` and `g·μ_{N,k}` with
//! `μ_{n,k} = ⟨a_n|E_k⟩`. Squaring the star matrix shows that the hub
//! amplitudes `(x_S, x_R)` of a nonzero eigenstate are an eigenvector of the
//! Gram block `[[η₁, Λ], [Λ, η_N]]` with eigenvalue `(ε/g)²`, which gives
//! the closed form used by [`solve_effective`].

use alloc::vec::Vec;

use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::flatband::{FlatBandSummary, LAMBDA_ZERO_TOL};
use crate::lattice::{Site, SiteIndex};
use crate::matrix::HamiltonianMatrix;
use crate::spectral::{eigendecompose, FlatBandSubspace};

/// Below this `|ε̃₁² − η_N|` the closed-form hub amplitudes are replaced by
/// a numerical eigenvector.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Row of `S` in the star matrix.
pub const STAR_SENDER: usize = 0;
/// Row of `R` in the star matrix.
pub const STAR_RECEIVER: usize = 1;

/// Star Hamiltonian in the order `S, R, E_1, …, E_k`.
pub fn effective_hamiltonian(
    sub: &FlatBandSubspace,
    idx: &SiteIndex,
    g: f64,
) -> Result<HamiltonianMatrix> {
    if sub.basis().nrows() != idx.dim() {
        return Err(Error::DimensionMismatch {
            expected: idx.dim(),
            found: sub.basis().nrows(),
        });
    }
    let a1 = idx.at(Site::A(1));
    let an = idx.at(Site::A(idx.cells()));
    let modes = sub.dimension();
    let mut h = HamiltonianMatrix::zeros(modes + 2);
    for k in 0..modes {
        h.set_coupling(STAR_SENDER, k + 2, g * sub.basis()[(a1, k)]);
        h.set_coupling(STAR_RECEIVER, k + 2, g * sub.basis()[(an, k)]);
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSolution {
    /// Upper doublet energy `ε₁ ≥ ε₂ ≥ 0`.
    pub eps1: f64,
    pub eps2: f64,
    /// Hub amplitudes of `|ε₁±⟩` (times `√2`), `x_S ≥ 0`, `x_S² + x_R² = 1`.
    pub x_s: f64,
    pub x_r: f64,
    /// `δε = ε₁ − ε₂`.
    pub delta_eps: f64,
    /// `π/δε`; `+∞` when the doublets coincide.
    pub tau: f64,
    /// `2|x_S x_R|`.
    pub csr: f64,
    pub closed_form_bypassed: bool,
    pub no_transfer: bool,
}

/// Closed-form star spectrum and hub amplitudes from the projector elements.
///
/// `ε₁,₂ = g·√((A ± √(A² − 4B))/2)` with `A = η₁ + η_N`, `B = η₁η_N − Λ²`;
/// `x_R = Λ·x_S/(ε̃₁² − η_N)` with `ε̃₁ = ε₁/g`.
pub fn solve_effective(summary: &FlatBandSummary, g: f64) -> Result<EffectiveSolution> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter("g must be positive"));
    }
    let (eta1, eta_n) = (summary.eta1, summary.eta_n);
    let lambda = if summary.lambda.abs() < LAMBDA_ZERO_TOL {
        0.0
    } else {
        summary.lambda
    };

    let a = eta1 + eta_n;
    let b = (eta1 * eta_n - lambda * lambda).max(0.0);
    let diff = eta1 - eta_n;
    // √(A² − 4B) written without cancellation
    let root = libm::hypot(diff, 2.0 * lambda);
    let e1sq = 0.5 * (a + root);
    // (A − √(A² − 4B))/2 = B / e1sq
    let e2sq = if e1sq > 0.0 { b / e1sq } else { 0.0 };
    let eps1 = g * libm::sqrt(e1sq);
    let eps2 = g * libm::sqrt(e2sq).min(libm::sqrt(e1sq));

    // ε̃₁² − η_N = (diff + root)/2, rationalized when diff < 0
    let shift = if diff >= 0.0 {
        0.5 * (diff + root)
    } else {
        2.0 * lambda * lambda / (root - diff)
    };

    let (x_s, x_r, closed_form_bypassed) = if shift.abs() < SINGULAR_TOL {
        let (xs, xr) = hub_amplitudes_numeric(eta1, eta_n, lambda);
        (xs, xr, true)
    } else {
        // x_S = |u|/√(u² + Λ²), x_R = (Λ/u)·x_S, without forming 1 − Λ²/(u² + Λ²)
        let norm = libm::hypot(shift, lambda);
        (shift.abs() / norm, lambda * shift.signum() / norm, false)
    };

    let delta_eps = eps1 - eps2;
    let degenerate = delta_eps <= SINGULAR_TOL * g;
    let tau = if degenerate { f64::INFINITY } else { PI / delta_eps };
    let csr = 2.0 * (x_s * x_r).abs();
    Ok(EffectiveSolution {
        eps1,
        eps2,
        x_s,
        x_r,
        delta_eps,
        tau,
        csr,
        closed_form_bypassed,
        no_transfer: degenerate || lambda == 0.0,
    })
}

/// Hub amplitudes `(x_S, x_R)` of the upper doublet from a numerical
/// eigendecomposition of the Gram block `[[η₁, Λ], [Λ, η_N]]`.
pub fn hub_amplitudes_numeric(eta1: f64, eta_n: f64, lambda: f64) -> (f64, f64) {
    let gram = DMatrix::from_row_slice(2, 2, &[eta1, lambda, lambda, eta_n]);
    let top = HamiltonianMatrix::from_raw(gram)
        .and_then(|m| eigendecompose(&m))
        .map(|dec| (dec.amplitude(0, 1), dec.amplitude(1, 1)));
    match top {
        Ok((xs, xr)) => fix_sign(xs, xr),
        Err(_) => (1.0, 0.0),
    }
}

fn fix_sign(xs: f64, xr: f64) -> (f64, f64) {
    let norm = libm::hypot(xs, xr);
    let (xs, xr) = (xs / norm, xr / norm);
    if xs < 0.0 || (xs == 0.0 && xr < 0.0) {
        (-xs, -xr)
    } else {
        (xs, xr)
    }
}

/// Star spectrum and eigenvector diagnostics obtained by diagonalizing the
/// star matrix directly.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDiagnostics {
    pub eigenvalues: Vec<f64>,
    /// Largest eigenvalue.
    pub eps1: f64,
    /// Second largest eigenvalue.
    pub eps2: f64,
    /// `√2·(⟨S|ε₁⁺⟩, ⟨R|ε₁⁺⟩)` with the `x_S ≥ 0` convention.
    pub x_s: f64,
    pub x_r: f64,
    /// `4|⟨ε₁⁺|S⟩⟨R|ε₁⁺⟩|`.
    pub csr: f64,
    /// `|⟨S|v⟩|² + |⟨R|v⟩|²` for `ε₁⁻, ε₂⁻, ε₂⁺, ε₁⁺` (in ascending order).
    pub hub_weights: [f64; 4],
}

pub fn diagonalize_star(h: &HamiltonianMatrix) -> Result<StarDiagnostics> {
    let d = h.dim();
    if d < 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: d });
    }
    let dec = eigendecompose(h)?;
    let top = d - 1;
    let (s, r) = (STAR_SENDER, STAR_RECEIVER);
    let weight = |k: usize| dec.amplitude(s, k).powi(2) + dec.amplitude(r, k).powi(2);
    let (x_s, x_r) = fix_sign(dec.amplitude(s, top), dec.amplitude(r, top));
    Ok(StarDiagnostics {
        eps1: dec.eigenvalues()[top],
        eps2: dec.eigenvalues()[top - 1],
        x_s,
        x_r,
        csr: 4.0 * (dec.amplitude(s, top) * dec.amplitude(r, top)).abs(),
        hub_weights: [weight(0), weight(1), weight(top - 1), weight(top)],
        eigenvalues: dec.eigenvalues().to_vec(),
    })
}
