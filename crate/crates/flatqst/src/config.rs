//! Run configuration: command-line flags over an optional `key = value`
//! file over built-in defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use flatqst_core::dynamics::DEFAULT_POINTS_PER_PERIOD;
use flatqst_core::lattice::DisorderKind;
use flatqst_core::realization::default_window;
use flatqst_core::stats::Binning;

use crate::ensemble::Observable;
use crate::Error;

pub const DEFAULT_J: f64 = 1.0;
/// In units of `J`.
pub const DEFAULT_G: f64 = 0.01;
pub const DEFAULT_SAMPLES: u64 = 1000;
pub const DEFAULT_CELLS: usize = 10;
pub const DEFAULT_WIDTH: f64 = 0.2;
pub const DEFAULT_SEED: u64 = 2024;

/// Flags shared by every command. Everything is optional so that a config
/// file can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Number of cells
    #[arg(long = "N", global = true)]
    pub cells: Option<usize>,
    /// Mean coupling (energy unit)
    #[arg(long = "J", global = true)]
    pub j: Option<f64>,
    /// Sender/receiver coupling, in units of J
    #[arg(long = "g", global = true)]
    pub g: Option<f64>,
    /// Disorder width; a comma-separated list for `sweep`
    #[arg(long = "W", global = true, allow_hyphen_values = true)]
    pub width: Option<String>,
    /// uniform | gaussian
    #[arg(long, global = true)]
    pub dist: Option<String>,
    /// Master seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Fidelity scan window in 1/J (default 20π/g)
    #[arg(long, global = true)]
    pub window: Option<f64>,
    /// Histogram bins: a count, or comma-separated edges
    #[arg(long, global = true)]
    pub bins: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated: deltaEps_g, Fmax, Csr, absLambda, Csr_full
    #[arg(long, global = true)]
    pub observable: Option<String>,
    /// Worker threads (1 = serial)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Realization index for `trace`
    #[arg(long, global = true)]
    pub index: Option<u64>,
    /// Time-grid points per period of the fastest mode
    #[arg(long = "points-per-period", global = true)]
    pub points_per_period: Option<f64>,
    /// `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 14] = [
    "N", "J", "g", "W", "dist", "seed", "samples", "window", "bins", "out", "observable",
    "threads", "index", "points-per-period",
];

/// Parses `key = value` lines; `#` starts a comment, a leading `--` on the
/// key is ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Usage(format!("config line {}: expected key = value", lineno + 1)));
        };
        let k = k.trim().trim_start_matches("--");
        if !KEYS.contains(&k) {
            return Err(Error::Usage(format!("config line {}: unknown key '{k}'", lineno + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, Error> {
    file.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Usage(format!("config: bad value '{v}' for {key}")))
        })
        .transpose()
}

impl Opts {
    /// Fills unset flags from a parsed config file.
    pub fn merged(self, file: &BTreeMap<String, String>) -> Result<Self, Error> {
        Ok(Self {
            cells: self.cells.or(from_file(file, "N")?),
            j: self.j.or(from_file(file, "J")?),
            g: self.g.or(from_file(file, "g")?),
            width: self.width.or(from_file(file, "W")?),
            dist: self.dist.or(from_file(file, "dist")?),
            seed: self.seed.or(from_file(file, "seed")?),
            samples: self.samples.or(from_file(file, "samples")?),
            window: self.window.or(from_file(file, "window")?),
            bins: self.bins.or(from_file(file, "bins")?),
            out: self.out.or(from_file(file, "out")?),
            observable: self.observable.or(from_file(file, "observable")?),
            threads: self.threads.or(from_file(file, "threads")?),
            index: self.index.or(from_file(file, "index")?),
            points_per_period: self.points_per_period.or(from_file(file, "points-per-period")?),
            config: self.config,
        })
    }

    /// Reads `--config` if given and merges it.
    pub fn load(self) -> Result<Self, Error> {
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
                let file = parse_config_file(&text)?;
                self.merged(&file)
            }
            None => Ok(self),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, Error> {
        let j = self.j.unwrap_or(DEFAULT_J);
        let g = self.g.unwrap_or(DEFAULT_G) * j;
        let widths = match &self.width {
            Some(s) => parse_list(s, "W")?,
            None => vec![DEFAULT_WIDTH],
        };
        let kind = match self.dist.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("uniform") => DisorderKind::Uniform,
            Some("gaussian") | Some("normal") => DisorderKind::Gaussian,
            Some(other) => return Err(Error::Usage(format!("unknown distribution '{other}'"))),
        };
        let bins = match &self.bins {
            None => Binning::Auto,
            Some(s) if !s.contains(',') => match s.trim().parse::<usize>() {
                Ok(0) | Err(_) => return Err(Error::Usage(format!("bad bin count '{s}'"))),
                Ok(k) => Binning::Count(k),
            },
            Some(s) => Binning::Edges(parse_list(s, "bins")?),
        };
        let observables = self
            .observable
            .as_deref()
            .map(|s| s.split(',').map(str::parse).collect::<Result<Vec<Observable>, _>>())
            .transpose()?;
        if matches!(self.window, Some(w) if !(w > 0.0)) {
            return Err(Error::Usage("window must be positive".into()));
        }
        if matches!(self.threads, Some(0)) {
            return Err(Error::Usage("threads must be at least 1".into()));
        }
        Ok(RunConfig {
            cells: self.cells.unwrap_or(DEFAULT_CELLS),
            j,
            g,
            widths,
            kind,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            samples: self.samples,
            window: self.window.unwrap_or_else(|| default_window(g)),
            bins,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            observables,
            threads: self.threads,
            index: self.index.unwrap_or(0),
            points_per_period: self.points_per_period.unwrap_or(DEFAULT_POINTS_PER_PERIOD),
        })
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Usage(format!("empty {what} list")));
    }
    items
        .into_iter()
        .map(|x| x.parse().map_err(|_| Error::Usage(format!("bad {what} value '{x}'"))))
        .collect()
}

/// Fully resolved parameters. `g` is absolute (already multiplied by `J`),
/// disorder widths stay relative to `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cells: usize,
    pub j: f64,
    pub g: f64,
    pub widths: Vec<f64>,
    pub kind: DisorderKind,
    pub seed: u64,
    /// `None` lets each command pick its default.
    pub samples: Option<u64>,
    pub window: f64,
    pub bins: Binning,
    pub out: PathBuf,
    pub observables: Option<Vec<Observable>>,
    pub threads: Option<usize>,
    pub index: u64,
    pub points_per_period: f64,
}

impl RunConfig {
    /// The single width of a non-sweep command.
    pub fn width(&self) -> Result<f64, Error> {
        match self.widths.as_slice() {
            [w] => Ok(*w),
            _ => Err(Error::Usage("this command takes a single W".into())),
        }
    }

    pub fn dist_name(&self) -> &'static str {
        match self.kind {
            DisorderKind::Uniform => "uniform",
            DisorderKind::Gaussian => "gaussian",
        }
    }

    pub fn bins_label(&self) -> String {
        match &self.bins {
            Binning::Auto => "auto".into(),
            Binning::Count(k) => k.to_string(),
            Binning::Edges(e) => e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        }
    }
}
