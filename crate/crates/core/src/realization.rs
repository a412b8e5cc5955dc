//! One disorder sample end to end: couplings, channel flat band, star model
//! and (optionally) the full-Hamiltonian fidelity scan.

use core::f64::consts::PI;

use crate::dynamics::{
    full_spectrum_doublets, scan_max_fidelity, FullDoublets, ScanResult, DEFAULT_POINTS_PER_PERIOD,
};
use crate::effective::{solve_effective, EffectiveSolution};
use crate::error::Result;
use crate::flatband::{summarize_flat_band, FlatBandSummary};
use crate::lattice::{
    channel_hamiltonian, full_hamiltonian, sample_couplings, ChainSpec, CouplingSet,
    DisorderSpec, Site, SiteIndex,
};
use crate::spectral::{
    channel_flat_band, eigendecompose, FlatBandSubspace, SpectralDecomposition, ZERO_MODE_TOL,
};

/// Default scan window `20π/g`.
pub fn default_window(g: f64) -> f64 {
    20.0 * PI / g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub zero_mode_tol: f64,
    /// Fidelity scan window; `None` means `20π/g`.
    pub window: Option<f64>,
    pub points_per_period: f64,
    /// Run the full-Hamiltonian fidelity scan (the expensive part).
    pub scan_fidelity: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            zero_mode_tol: ZERO_MODE_TOL,
            window: None,
            points_per_period: DEFAULT_POINTS_PER_PERIOD,
            scan_fidelity: true,
        }
    }
}

impl RunOptions {
    pub fn window_for(&self, g: f64) -> f64 {
        self.window.unwrap_or_else(|| default_window(g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub no_transfer: bool,
    pub closed_form_bypassed: bool,
    /// The sample could not be processed (sampling or eigensolver error).
    pub numerical_failure: bool,
}

impl Flags {
    pub const NAMES: [&'static str; 3] = ["no-transfer", "closed-form-bypassed", "numerical-failure"];

    pub fn is_empty(&self) -> bool {
        !(self.no_transfer || self.closed_form_bypassed || self.numerical_failure)
    }

    pub fn iter_names(&self) -> impl Iterator<Item = &'static str> {
        [self.no_transfer, self.closed_form_bypassed, self.numerical_failure]
            .into_iter()
            .zip(Self::NAMES)
            .filter_map(|(on, name)| on.then_some(name))
    }
}

/// Per-sample observables. Quantities that were not requested or could not
/// be computed are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationRecord {
    pub seed_index: u64,
    pub width: f64,
    pub cells: usize,
    pub g: f64,
    pub eta1: f64,
    pub eta_n: f64,
    pub lambda: f64,
    pub delta: f64,
    pub csr: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta_eps: f64,
    pub tau: f64,
    pub fmax: f64,
    pub t_star: f64,
    pub flags: Flags,
    /// `2|x_S x_R|` from the closed-form star solution.
    pub csr_eff: f64,
    /// Doublet splitting read off the full spectrum (finite `g`).
    pub delta_eps_full: f64,
    /// `4|⟨S|ε₁⟩⟨ε₁|R⟩|` from the full eigenvector (finite `g`).
    pub csr_full: f64,
}

impl RealizationRecord {
    fn failed(spec: &ChainSpec, dis: &DisorderSpec, index: u64) -> Self {
        Self {
            seed_index: index,
            width: dis.width,
            cells: spec.cells,
            g: spec.g,
            eta1: f64::NAN,
            eta_n: f64::NAN,
            lambda: f64::NAN,
            delta: f64::NAN,
            csr: f64::NAN,
            eps1: f64::NAN,
            eps2: f64::NAN,
            delta_eps: f64::NAN,
            tau: f64::NAN,
            fmax: f64::NAN,
            t_star: f64::NAN,
            flags: Flags {
                numerical_failure: true,
                ..Flags::default()
            },
            csr_eff: f64::NAN,
            delta_eps_full: f64::NAN,
            csr_full: f64::NAN,
        }
    }
}

/// Everything computed for one disorder sample.
#[derive(Debug, Clone)]
pub struct Realization {
    pub spec: ChainSpec,
    pub couplings: CouplingSet,
    pub rejections: u32,
    pub channel: SpectralDecomposition,
    pub flat_band: FlatBandSubspace,
    pub summary: FlatBandSummary,
    pub solution: EffectiveSolution,
    pub full: SpectralDecomposition,
    pub doublets: Option<FullDoublets>,
}

impl Realization {
    /// Realization `index` of the master seed in `dis`.
    pub fn sample(
        spec: &ChainSpec,
        dis: &DisorderSpec,
        index: u64,
        zero_mode_tol: f64,
    ) -> Result<Self> {
        let draw = sample_couplings(spec, dis, &mut dis.stream(index))?;
        let mut r = Self::from_couplings(spec, draw.couplings, zero_mode_tol)?;
        r.rejections = draw.rejections;
        Ok(r)
    }

    pub fn from_couplings(spec: &ChainSpec, couplings: CouplingSet, zero_mode_tol: f64) -> Result<Self> {
        let idx = SiteIndex::channel(spec.cells);
        let channel = eigendecompose(&channel_hamiltonian(spec, &couplings)?)?;
        let flat_band = channel_flat_band(&channel, &idx, zero_mode_tol)?;
        let summary = summarize_flat_band(&flat_band, &idx);
        let solution = solve_effective(&summary, spec.g)?;
        let full = eigendecompose(&full_hamiltonian(spec, &couplings)?)?;
        let ends = SiteIndex::full(spec.cells);
        let doublets = full_spectrum_doublets(&full, ends.at(Site::Sender), ends.at(Site::Receiver));
        Ok(Self {
            spec: *spec,
            couplings,
            rejections: 0,
            channel,
            flat_band,
            summary,
            solution,
            full,
            doublets,
        })
    }

    /// Rows of `S` and `R` in the full basis.
    pub fn ends(&self) -> (usize, usize) {
        let idx = SiteIndex::full(self.spec.cells);
        (idx.at(Site::Sender), idx.at(Site::Receiver))
    }

    pub fn scan(&self, window: f64, points_per_period: f64) -> ScanResult {
        let (s, r) = self.ends();
        scan_max_fidelity(&self.full, s, r, window, points_per_period)
    }
}

/// Runs realization `index`; failures come back flagged rather than as errors.
pub fn run_realization(
    spec: &ChainSpec,
    dis: &DisorderSpec,
    index: u64,
    opts: &RunOptions,
) -> RealizationRecord {
    let Ok(r) = Realization::sample(spec, dis, index, opts.zero_mode_tol) else {
        return RealizationRecord::failed(spec, dis, index);
    };
    let (fmax, t_star) = if opts.scan_fidelity {
        let scan = r.scan(opts.window_for(spec.g), opts.points_per_period);
        (scan.fmax, scan.t_star)
    } else {
        (f64::NAN, f64::NAN)
    };
    let (s, sol) = (&r.summary, &r.solution);
    RealizationRecord {
        seed_index: index,
        width: dis.width,
        cells: spec.cells,
        g: spec.g,
        eta1: s.eta1,
        eta_n: s.eta_n,
        lambda: s.lambda,
        delta: s.delta.unwrap_or(f64::NAN),
        csr: s.csr,
        eps1: sol.eps1,
        eps2: sol.eps2,
        delta_eps: sol.delta_eps,
        tau: sol.tau,
        fmax,
        t_star,
        flags: Flags {
            no_transfer: sol.no_transfer,
            closed_form_bypassed: s.closed_form_bypassed || sol.closed_form_bypassed,
            numerical_failure: false,
        },
        csr_eff: sol.csr,
        delta_eps_full: r.doublets.map_or(f64::NAN, |d| d.delta_eps),
        csr_full: r.doublets.map_or(f64::NAN, |d| d.csr),
    }
}
