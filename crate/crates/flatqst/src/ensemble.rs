//! Monte Carlo over disorder realizations.
//!
//! Realization `i` always draws from stream `i` of the master seed, and the
//! collect is ordered by `i`, so serial and parallel runs are bit-identical.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use flatqst_core::lattice::{ChainSpec, DisorderKind, DisorderSpec};
use flatqst_core::realization::{run_realization, RealizationRecord, RunOptions};
use flatqst_core::stats::{make_histogram, moments, Binning, Histogram, Moments};
use rayon::prelude::*;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// `threads == 0` uses the global rayon pool.
    Parallel { threads: usize },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { threads: 0 }
    }
}

impl Execution {
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Serial,
            Some(t) => Execution::Parallel { threads: t },
            None => Execution::default(),
        }
    }
}

/// Records `0..samples` in index order.
pub fn run_ensemble(
    spec: &ChainSpec,
    dis: &DisorderSpec,
    samples: u64,
    opts: &RunOptions,
    exec: Execution,
) -> Result<Vec<RealizationRecord>, Error> {
    if samples == 0 {
        return Err(Error::Usage("samples must be at least 1".into()));
    }
    let one = |i: u64| run_realization(spec, dis, i, opts);
    Ok(match exec {
        Execution::Serial => (0..samples).map(one).collect(),
        Execution::Parallel { threads: 0 } => (0..samples).into_par_iter().map(one).collect(),
        Execution::Parallel { threads } => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?
            .install(|| (0..samples).into_par_iter().map(one).collect()),
    })
}

/// Per-sample quantities that can be aggregated and histogrammed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observable {
    /// `δε/g`.
    DeltaEps,
    Fmax,
    Csr,
    AbsLambda,
    CsrFull,
}

impl Observable {
    pub const ALL: [Observable; 5] = [
        Observable::DeltaEps,
        Observable::Fmax,
        Observable::Csr,
        Observable::AbsLambda,
        Observable::CsrFull,
    ];

    /// Columns of the sweep table when `--observable` is not given.
    pub const SWEEP_DEFAULT: [Observable; 4] = [
        Observable::DeltaEps,
        Observable::Fmax,
        Observable::Csr,
        Observable::CsrFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::DeltaEps => "deltaEps_g",
            Observable::Fmax => "Fmax",
            Observable::Csr => "Csr",
            Observable::AbsLambda => "absLambda",
            Observable::CsrFull => "Csr_full",
        }
    }

    pub fn value(self, r: &RealizationRecord) -> f64 {
        match self {
            Observable::DeltaEps => r.delta_eps / r.g,
            Observable::Fmax => r.fmax,
            Observable::Csr => r.csr,
            Observable::AbsLambda => r.lambda.abs(),
            Observable::CsrFull => r.csr_full,
        }
    }

    /// Only `Fmax` needs the time-domain scan.
    pub fn needs_scan(self) -> bool {
        self == Observable::Fmax
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        Ok(match key.as_str() {
            "deltaeps" | "deltaepsg" | "gap" => Observable::DeltaEps,
            "fmax" | "fidelity" => Observable::Fmax,
            "csr" => Observable::Csr,
            "abslambda" | "lambda" => Observable::AbsLambda,
            "csrfull" => Observable::CsrFull,
            _ => return Err(Error::Usage(format!("unknown observable '{s}'"))),
        })
    }
}

/// Scalar columns summarized in the JSON output, by CSV name.
pub fn record_scalars(r: &RealizationRecord) -> [(&'static str, f64); 16] {
    [
        ("eta1", r.eta1),
        ("etaN", r.eta_n),
        ("Lambda", r.lambda),
        ("absLambda", r.lambda.abs()),
        ("Delta", r.delta),
        ("Csr", r.csr),
        ("eps1", r.eps1),
        ("eps2", r.eps2),
        ("deltaEps", r.delta_eps),
        ("deltaEps_g", r.delta_eps / r.g),
        ("tau", r.tau),
        ("Fmax", r.fmax),
        ("tStar", r.t_star),
        ("Csr_eff", r.csr_eff),
        ("deltaEps_full", r.delta_eps_full),
        ("Csr_full", r.csr_full),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub count: usize,
    /// Records carrying any flag.
    pub flagged: usize,
    pub failed: usize,
    /// Mean and MAD over the finite values of each scalar column.
    pub observables: BTreeMap<&'static str, Option<Moments>>,
    pub histograms: BTreeMap<&'static str, Histogram>,
}

impl EnsembleStats {
    pub fn moments(&self, name: &str) -> Option<Moments> {
        self.observables.get(name).copied().flatten()
    }
}

/// Aggregates and histograms; observables with no finite value get no
/// histogram.
pub fn summarize(
    records: &[RealizationRecord],
    histogrammed: &[Observable],
    binning: &Binning,
) -> Result<EnsembleStats, Error> {
    let mut observables = BTreeMap::new();
    if let Some(first) = records.first() {
        for (k, (name, _)) in record_scalars(first).into_iter().enumerate() {
            let m = moments(records.iter().map(|r| record_scalars(r)[k].1));
            observables.insert(name, m);
        }
    }
    let mut histograms = BTreeMap::new();
    for &obs in histogrammed {
        let values: Vec<f64> = records.iter().map(|r| obs.value(r)).collect();
        match make_histogram(&values, binning) {
            Ok(h) => {
                histograms.insert(obs.name(), h);
            }
            Err(flatqst_core::Error::EmptyHistogram) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(EnsembleStats {
        count: records.len(),
        flagged: records.iter().filter(|r| !r.flags.is_empty()).count(),
        failed: records.iter().filter(|r| r.flags.numerical_failure).count(),
        observables,
        histograms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub width: f64,
    pub stats: EnsembleStats,
}

/// One ensemble per width. Every width reuses the same master seed, so the
/// underlying uniform draws are shared across the curve.
#[allow(clippy::too_many_arguments)]
pub fn sweep_w(
    spec: &ChainSpec,
    widths: &[f64],
    kind: DisorderKind,
    seed: u64,
    samples: u64,
    opts: &RunOptions,
    histogrammed: &[Observable],
    binning: &Binning,
    exec: Execution,
) -> Result<Vec<SweepPoint>, Error> {
    if widths.is_empty() {
        return Err(Error::Usage("empty W list".into()));
    }
    widths
        .iter()
        .map(|&w| {
            let dis = DisorderSpec::new(w, kind, seed)?;
            let records = run_ensemble(spec, &dis, samples, opts, exec)?;
            Ok(SweepPoint {
                width: w,
                stats: summarize(&records, histogrammed, binning)?,
            })
        })
        .collect()
}
