//! Invariant suite run on fresh random samples by `flatqst validate`.

use flatqst_core::dynamics::transition_amplitude;
use flatqst_core::effective::{diagonalize_star, effective_hamiltonian, solve_effective};
use flatqst_core::flatband::summarize_flat_band;
use flatqst_core::lattice::{
    channel_hamiltonian, full_hamiltonian, sample_couplings, ChainSpec, DisorderSpec, Site,
    SiteIndex,
};
use flatqst_core::matrix::HamiltonianMatrix;
use flatqst_core::realization::default_window;
use flatqst_core::spectral::{
    channel_flat_band, eigendecompose, random_orthogonal, zero_mode_count, SUBLATTICE_TOL,
    ZERO_MODE_TOL,
};
use rand::Rng;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SAMPLES: u64 = 100;

/// Size of the off-diagonal perturbation added by the asymmetry hook.
const INJECTED_ASYMMETRY: f64 = 1e-3;

pub const INVARIANTS: [&str; 9] = [
    "symmetry",
    "bipartite-nullity",
    "eigen-residual",
    "chiral-symmetry",
    "basis-invariance",
    "closed-form-spectrum",
    "correlation-agreement",
    "unitarity",
    "time-reversal",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Most checks compare against `tol`; correlation agreement uses `100·tol`
    /// and the sublattice leak its own fixed cut.
    pub tol: f64,
    pub samples: u64,
    /// Test hook: corrupt one off-diagonal entry of the channel matrix before
    /// the symmetry check sees it.
    pub inject_asymmetry: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            samples: DEFAULT_SAMPLES,
            inject_asymmetry: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub threshold: f64,
    /// Largest deviation seen; infinite when a sample could not be evaluated.
    pub worst: f64,
    pub failures: u64,
    pub note: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Report {
    checks: Vec<CheckResult>,
}

impl Report {
    fn new(tol: f64) -> Self {
        let checks = INVARIANTS
            .iter()
            .map(|&name| CheckResult {
                name,
                threshold: match name {
                    "symmetry" => 0.0,
                    "bipartite-nullity" => SUBLATTICE_TOL,
                    "correlation-agreement" => 100.0 * tol,
                    _ => tol,
                },
                worst: 0.0,
                failures: 0,
                note: None,
            })
            .collect();
        Self { checks }
    }

    fn check(&mut self, name: &str) -> &mut CheckResult {
        self.checks.iter_mut().find(|c| c.name == name).expect("known invariant")
    }

    fn record(&mut self, name: &str, value: f64) {
        let c = self.check(name);
        if value.is_nan() || value > c.worst {
            c.worst = if value.is_nan() { f64::INFINITY } else { value };
        }
        if !(value <= c.threshold) {
            c.failures += 1;
        }
    }

    fn fail(&mut self, names: &[&str], note: String) {
        for &n in names {
            let c = self.check(n);
            c.failures += 1;
            c.worst = f64::INFINITY;
            c.note.get_or_insert(note.clone());
        }
    }
}

const AFTER_CHANNEL: [&str; 8] = [
    "bipartite-nullity",
    "eigen-residual",
    "chiral-symmetry",
    "basis-invariance",
    "closed-form-spectrum",
    "correlation-agreement",
    "unitarity",
    "time-reversal",
];

fn asymmetry(h: &HamiltonianMatrix) -> f64 {
    let m = h.as_matrix();
    (m - m.transpose()).amax()
}

fn with_injected_asymmetry(h: &HamiltonianMatrix) -> HamiltonianMatrix {
    let mut m = h.as_matrix().clone();
    m[(0, 1)] += INJECTED_ASYMMETRY;
    HamiltonianMatrix::from_raw(m).expect("square")
}

/// Runs every invariant on samples `0..opts.samples` of `dis`. Never panics
/// on numerical trouble; failures are counted per invariant.
pub fn run_validation(spec: &ChainSpec, dis: &DisorderSpec, opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut rep = Report::new(opts.tol);
    for i in 0..opts.samples {
        validate_sample(spec, dis, i, opts, &mut rep);
    }
    rep.checks
}

fn validate_sample(spec: &ChainSpec, dis: &DisorderSpec, i: u64, opts: &ValidateOptions, rep: &mut Report) {
    let g = spec.g;
    let c = match sample_couplings(spec, dis, &mut dis.stream(i)) {
        Ok(d) => d.couplings,
        Err(e) => return rep.fail(&INVARIANTS, format!("sample {i}: {e}")),
    };
    let (h, hf) = match (channel_hamiltonian(spec, &c), full_hamiltonian(spec, &c)) {
        (Ok(h), Ok(hf)) => (h, hf),
        (Err(e), _) | (_, Err(e)) => return rep.fail(&INVARIANTS, format!("sample {i}: {e}")),
    };

    let probe = if opts.inject_asymmetry { with_injected_asymmetry(&h) } else { h.clone() };
    rep.record("symmetry", asymmetry(&probe).max(asymmetry(&hf)));

    let dec = match eigendecompose(&h) {
        Ok(d) => d,
        Err(e) => return rep.fail(&AFTER_CHANNEL, format!("sample {i}: {e}")),
    };
    let scale = h.norm_inf().max(f64::MIN_POSITIVE);
    rep.record("eigen-residual", dec.max_residual(&h) / scale);
    let e = dec.eigenvalues();
    let chiral = (0..e.len()).map(|k| (e[k] + e[e.len() - 1 - k]).abs()).fold(0.0, f64::max);
    rep.record("chiral-symmetry", chiral / scale);

    let idx = SiteIndex::channel(spec.cells);
    let downstream = &AFTER_CHANNEL[3..];
    let sub = match channel_flat_band(&dec, &idx, ZERO_MODE_TOL) {
        Ok(s) if zero_mode_count(&dec, ZERO_MODE_TOL) == spec.cells => s,
        Ok(s) => {
            rep.fail(&["bipartite-nullity"], format!("sample {i}: {} zero modes, expected {}", s.dimension(), spec.cells));
            return rep.fail(downstream, format!("sample {i}: flat band unavailable"));
        }
        Err(e) => {
            rep.fail(&["bipartite-nullity"], format!("sample {i}: {e}"));
            return rep.fail(downstream, format!("sample {i}: flat band unavailable"));
        }
    };
    rep.record("bipartite-nullity", sub.max_amplitude_on(idx.b_sites()));

    let summary = summarize_flat_band(&sub, &idx);
    let mut rng = dis.stream(u64::MAX - i);
    let mixed = sub.remixed(&random_orthogonal(sub.dimension(), &mut rng));
    let other = summarize_flat_band(&mixed, &idx);
    let star_checks = (|| -> flatqst_core::Result<()> {
        let sol = solve_effective(&summary, g)?;
        let sol_m = solve_effective(&other, g)?;
        let invariance = [
            summary.eta1 - other.eta1,
            summary.eta_n - other.eta_n,
            summary.lambda - other.lambda,
            summary.csr - other.csr,
            (sol.eps1 - sol_m.eps1) / g,
            (sol.eps2 - sol_m.eps2) / g,
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
        rep.record("basis-invariance", invariance);

        let star = diagonalize_star(&effective_hamiltonian(&sub, &idx, g)?)?;
        let ev = &star.eigenvalues;
        let d = ev.len();
        let spectrum = [
            ev[d - 1] - sol.eps1,
            ev[d - 2] - sol.eps2,
            ev[0] + sol.eps1,
            ev[1] + sol.eps2,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
            / g;
        rep.record("closed-form-spectrum", spectrum);
        let corr = (sol.csr - summary.csr).abs().max((star.csr - summary.csr).abs());
        rep.record("correlation-agreement", corr);
        Ok(())
    })();
    if let Err(e) = star_checks {
        rep.fail(&AFTER_CHANNEL[3..6], format!("sample {i}: {e}"));
    }

    let full = match eigendecompose(&hf) {
        Ok(d) => d,
        Err(e) => return rep.fail(&["unitarity", "time-reversal"], format!("sample {i}: {e}")),
    };
    let ends = SiteIndex::full(spec.cells);
    let (s, r) = (ends.at(Site::Sender), ends.at(Site::Receiver));
    for _ in 0..3 {
        let t = rng.random_range(0.0..default_window(g.max(f64::MIN_POSITIVE)));
        let norm: f64 = (0..ends.dim())
            .map(|site| transition_amplitude(&full, s, site, t).norm_sqr())
            .sum();
        rep.record("unitarity", (norm - 1.0).abs());
        let there = transition_amplitude(&full, s, r, t).norm();
        let back = transition_amplitude(&full, r, s, t).norm();
        rep.record("time-reversal", (there - back).abs());
    }
}
