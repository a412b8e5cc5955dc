//! Ensemble aggregates: mean, mean absolute deviation, density histograms.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// Number of finite values that entered the aggregate.
    pub count: usize,
    pub mean: f64,
    /// Mean of `|x − mean|`.
    pub mad: f64,
}

/// Mean and mean absolute deviation over the finite values; `None` if there
/// are none.
pub fn moments<I: IntoIterator<Item = f64>>(values: I) -> Option<Moments> {
    let finite: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return None;
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let mad = finite.iter().map(|x| (x - mean).abs()).sum::<f64>() / n;
    Some(Moments {
        count: finite.len(),
        mean,
        mad,
    })
}

/// Fraction of the finite values strictly above `threshold`.
pub fn fraction_above(values: &[f64], threshold: f64) -> f64 {
    let finite = values.iter().filter(|x| x.is_finite());
    let total = finite.clone().count();
    if total == 0 {
        return 0.0;
    }
    finite.filter(|&&x| x > threshold).count() as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Binning {
    /// `⌈√n⌉` equal bins over the data range.
    #[default]
    Auto,
    Count(usize),
    /// Explicit ascending edges; values outside are dropped.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts / (n · width)`, so that `Σ density·width = 1`.
    pub density: Vec<f64>,
    /// Finite values that fell outside explicit edges.
    pub dropped: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, bin: usize) -> f64 {
        self.edges[bin + 1] - self.edges[bin]
    }

    pub fn integral(&self) -> f64 {
        (0..self.bins()).map(|b| self.density[b] * self.width(b)).sum()
    }

    /// Probability mass in bins lying entirely at or above `x`.
    pub fn mass_at_or_above(&self, x: f64) -> f64 {
        (0..self.bins())
            .filter(|&b| self.edges[b] >= x)
            .map(|b| self.density[b] * self.width(b))
            .sum()
    }

    /// Probability mass in bins lying entirely at or below `x`.
    pub fn mass_at_or_below(&self, x: f64) -> f64 {
        (0..self.bins())
            .filter(|&b| self.edges[b + 1] <= x)
            .map(|b| self.density[b] * self.width(b))
            .sum()
    }
}

/// Density-normalized histogram of the finite values.
pub fn make_histogram(values: &[f64], binning: &Binning) -> Result<Histogram> {
    let finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let edges = match binning {
        Binning::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidBins("edges must be strictly ascending, at least two"));
            }
            e.clone()
        }
        Binning::Auto | Binning::Count(_) => {
            let bins = match binning {
                Binning::Count(0) => return Err(Error::InvalidBins("bin count must be positive")),
                Binning::Count(k) => *k,
                _ => libm::ceil(libm::sqrt(finite.len() as f64)) as usize,
            };
            let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
            let w = (hi - lo) / bins as f64;
            let mut e: Vec<f64> = (0..bins).map(|b| lo + b as f64 * w).collect();
            e.push(hi);
            e
        }
    };

    let bins = edges.len() - 1;
    let mut counts = alloc::vec![0u64; bins];
    let mut dropped = 0;
    for &x in &finite {
        if x < edges[0] || x > edges[bins] {
            dropped += 1;
            continue;
        }
        // last bin is closed on the right
        let b = edges.partition_point(|&e| e <= x).saturating_sub(1).min(bins - 1);
        counts[b] += 1;
    }
    let kept = (finite.len() - dropped) as f64;
    if kept == 0.0 {
        return Err(Error::EmptyHistogram);
    }
    let density = (0..bins)
        .map(|b| counts[b] as f64 / (kept * (edges[b + 1] - edges[b])))
        .collect();
    Ok(Histogram {
        edges,
        counts,
        density,
        dropped,
    })
}
