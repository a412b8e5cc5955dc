//! Projector observables at the attachment sites.
//!
//! With `P` the flat-band projector of the bare channel:
//! `η₁ = ⟨a_1|P|a_1⟩`, `η_N = ⟨a_N|P|a_N⟩`, `Λ = ⟨a_1|P|a_N⟩`,
//! `Δ = (η₁ − η_N)/Λ` and `C_SR = 2/√(4 + Δ²)`.

use crate::effective::hub_amplitudes_numeric;
use crate::lattice::{Site, SiteIndex};
use crate::spectral::FlatBandSubspace;

/// `|Λ|` below this is treated as an exact zero.
pub const LAMBDA_ZERO_TOL: f64 = 1e-12;

/// `|η₁ − η_N|` below this counts as balanced.
pub const BALANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatBandSummary {
    pub eta1: f64,
    pub eta_n: f64,
    /// Signed `Λ`, snapped to 0 below `LAMBDA_ZERO_TOL`; its sign only flips `x_R`.
    pub lambda: f64,
    /// `None` when `Λ` vanishes.
    pub delta: Option<f64>,
    pub csr: f64,
    /// `Λ = 0` and `η₁ = η_N`: the closed form is `0/0`, so `csr` came from
    /// diagonalizing the hub block instead.
    pub closed_form_bypassed: bool,
}

impl FlatBandSummary {
    /// Builds a summary from raw projector elements.
    pub fn from_elements(eta1: f64, eta_n: f64, lambda: f64) -> Self {
        if lambda.abs() >= LAMBDA_ZERO_TOL {
            let delta = (eta1 - eta_n) / lambda;
            return Self {
                eta1,
                eta_n,
                lambda,
                delta: Some(delta),
                csr: correlation_from_delta(delta),
                closed_form_bypassed: false,
            };
        }
        let balanced = (eta1 - eta_n).abs() < BALANCE_TOL;
        let csr = if balanced {
            let (xs, xr) = hub_amplitudes_numeric(eta1, eta_n, 0.0);
            2.0 * (xs * xr).abs()
        } else {
            0.0
        };
        Self {
            eta1,
            eta_n,
            lambda: 0.0,
            delta: None,
            csr,
            closed_form_bypassed: balanced,
        }
    }

    pub fn abs_lambda(&self) -> f64 {
        self.lambda.abs()
    }

    pub fn lambda_vanishes(&self) -> bool {
        self.delta.is_none()
    }
}

/// `2/√(4 + Δ²)`.
pub fn correlation_from_delta(delta: f64) -> f64 {
    2.0 / libm::sqrt(4.0 + delta * delta)
}

/// Reads `η₁`, `η_N` and `Λ` off the projector of a channel flat band.
pub fn summarize_flat_band(sub: &FlatBandSubspace, idx: &SiteIndex) -> FlatBandSummary {
    let a1 = idx.at(Site::A(1));
    let an = idx.at(Site::A(idx.cells()));
    FlatBandSummary::from_elements(sub.element(a1, a1), sub.element(an, an), sub.element(a1, an))
}
