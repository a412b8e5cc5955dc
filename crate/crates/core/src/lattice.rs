//! Diamond-chain geometry, off-diagonal disorder and Hamiltonian assembly.
//!
//! The channel is a row of `N` vertical trimers with legs `a`, `b`, `c`.
//! Inside cell `n` the couplings are `a_n–b_n` (`J1[n]`) and `b_n–c_n`
//! (`J2[n]`); neighbouring cells are linked through the next `b` site by
//! `a_n–b_{n+1}` (`J1p[n]`) and `c_n–b_{n+1}` (`J2p[n]`). The sender `S` and
//! receiver `R` hang off `a_1` and `a_N` with strength `g`.
//!
//! Flat basis ordering (cells are numbered from 1):
//!
//! | basis   | S | a_n        | b_n        | c_n        | R      |
//! |---------|---|------------|------------|------------|--------|
//! | channel | – | 3(n−1)     | 3(n−1)+1   | 3(n−1)+2   | –      |
//! | full    | 0 | 3(n−1)+1   | 3(n−1)+2   | 3(n−1)+3   | 3N+1   |

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, Uniform};

use crate::error::{Error, Result};
use crate::matrix::HamiltonianMatrix;

/// Geometry and energy scales of one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    /// Number of diamond cells `N`.
    pub cells: usize,
    /// Base coupling `J` (unit of energy).
    pub j: f64,
    /// Sender/receiver coupling `g`.
    pub g: f64,
}

impl ChainSpec {
    pub fn new(cells: usize, j: f64, g: f64) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidParameter("need at least 2 cells"));
        }
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidParameter("J must be positive and finite"));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter("g must be non-negative and finite"));
        }
        Ok(Self { cells, j, g })
    }

    /// `g / (J/N)` when it exceeds 0.5, i.e. when the sender and receiver are
    /// no longer weakly coupled compared to the dispersive gap.
    pub fn weak_coupling_violation(&self) -> Option<f64> {
        let ratio = self.g * self.cells as f64 / self.j;
        (ratio > 0.5).then_some(ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisorderKind {
    #[default]
    Uniform,
    /// Zero-mean normal with standard deviation `W/√12`, the variance of the
    /// uniform law of the same width.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec {
    /// Disorder width `W` in units of `J`.
    pub width: f64,
    pub kind: DisorderKind,
    /// Master seed; realization `i` draws from stream `i` of this seed.
    pub seed: u64,
}

impl DisorderSpec {
    pub fn new(width: f64, kind: DisorderKind, seed: u64) -> Result<Self> {
        if !(width.is_finite() && width >= 0.0) {
            return Err(Error::InvalidParameter("W must be non-negative and finite"));
        }
        if kind == DisorderKind::Uniform && width >= 2.0 {
            return Err(Error::DisorderTooWide(width));
        }
        Ok(Self { width, kind, seed })
    }

    /// Random stream for realization `index`.
    ///
    /// ChaCha is counter based: stream `index` of the master seed is the same
    /// sequence no matter which thread asks for it or in which order.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Exchange couplings of one disorder realization (absolute values, units of J).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    /// `a_n–b_n`, length `N`.
    pub j1: Vec<f64>,
    /// `b_n–c_n`, length `N`.
    pub j2: Vec<f64>,
    /// `a_n–b_{n+1}`, length `N−1`.
    pub j1p: Vec<f64>,
    /// `c_n–b_{n+1}`, length `N−1`.
    pub j2p: Vec<f64>,
}

impl CouplingSet {
    pub fn ordered(cells: usize, j: f64) -> Self {
        Self {
            j1: alloc::vec![j; cells],
            j2: alloc::vec![j; cells],
            j1p: alloc::vec![j; cells.saturating_sub(1)],
            j2p: alloc::vec![j; cells.saturating_sub(1)],
        }
    }

    pub fn cells(&self) -> usize {
        self.j1.len()
    }

    fn check(&self, cells: usize) -> Result<()> {
        for (len, expected) in [
            (self.j1.len(), cells),
            (self.j2.len(), cells),
            (self.j1p.len(), cells - 1),
            (self.j2p.len(), cells - 1),
        ] {
            if len != expected {
                return Err(Error::DimensionMismatch { expected, found: len });
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.j1
            .iter()
            .chain(&self.j2)
            .chain(&self.j1p)
            .chain(&self.j2p)
            .copied()
    }
}

/// A sampled coupling set plus the number of Gaussian tail draws that had to
/// be redrawn because they produced a non-positive coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingDraw {
    pub couplings: CouplingSet,
    pub rejections: u32,
}

const MAX_CONSECUTIVE_REJECTIONS: u32 = 1000;

enum Law {
    Uniform(Uniform<f64>),
    Gaussian(Normal<f64>),
}

impl Law {
    fn coupling<R: Rng + ?Sized>(&self, j: f64, rng: &mut R, rejections: &mut u32) -> Result<f64> {
        match self {
            Law::Uniform(u) => Ok(j * (1.0 + u.sample(rng))),
            Law::Gaussian(normal) => {
                for _ in 0..MAX_CONSECUTIVE_REJECTIONS {
                    let c = j * (1.0 + normal.sample(rng));
                    if c > 0.0 {
                        return Ok(c);
                    }
                    *rejections += 1;
                }
                Err(Error::TooManyRejections(MAX_CONSECUTIVE_REJECTIONS))
            }
        }
    }
}

/// Draws `J·(1+δ)` for every coupling, in the order `J1[0..N)`, `J2[0..N)`,
/// `J1p[0..N−1)`, `J2p[0..N−1)`.
pub fn sample_couplings<R: Rng + ?Sized>(
    spec: &ChainSpec,
    dis: &DisorderSpec,
    rng: &mut R,
) -> Result<CouplingDraw> {
    let n = spec.cells;
    let j = spec.j;
    let w = dis.width;
    let law = match dis.kind {
        DisorderKind::Uniform => {
            if w >= 2.0 {
                return Err(Error::DisorderTooWide(w));
            }
            Law::Uniform(
                Uniform::new_inclusive(-0.5 * w, 0.5 * w)
                    .map_err(|_| Error::InvalidParameter("bad uniform width"))?,
            )
        }
        DisorderKind::Gaussian => Law::Gaussian(
            Normal::new(0.0, w / libm::sqrt(12.0))
                .map_err(|_| Error::InvalidParameter("bad gaussian width"))?,
        ),
    };

    let mut rejections = 0u32;
    let mut family = |len: usize| -> Result<Vec<f64>> {
        (0..len)
            .map(|_| law.coupling(j, rng, &mut rejections))
            .collect()
    };
    let j1 = family(n)?;
    let j2 = family(n)?;
    let j1p = family(n - 1)?;
    let j2p = family(n - 1)?;

    Ok(CouplingDraw {
        couplings: CouplingSet { j1, j2, j1p, j2p },
        rejections,
    })
}

/// Lattice site, with cells numbered `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Sender,
    Receiver,
    A(usize),
    B(usize),
    C(usize),
}

/// Bijection between [`Site`]s and rows of a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteIndex {
    cells: usize,
    with_ends: bool,
}

impl SiteIndex {
    /// Channel-only basis of dimension `3N`.
    pub fn channel(cells: usize) -> Self {
        Self {
            cells,
            with_ends: false,
        }
    }

    /// Channel plus sender and receiver, dimension `3N+2`.
    pub fn full(cells: usize) -> Self {
        Self {
            cells,
            with_ends: true,
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn has_ends(&self) -> bool {
        self.with_ends
    }

    pub fn dim(&self) -> usize {
        3 * self.cells + if self.with_ends { 2 } else { 0 }
    }

    fn offset(&self) -> usize {
        usize::from(self.with_ends)
    }

    pub fn flat(&self, site: Site) -> Option<usize> {
        let cell = |n: usize, leg: usize| {
            (1..=self.cells)
                .contains(&n)
                .then(|| self.offset() + 3 * (n - 1) + leg)
        };
        match site {
            Site::Sender => self.with_ends.then_some(0),
            Site::Receiver => self.with_ends.then_some(3 * self.cells + 1),
            Site::A(n) => cell(n, 0),
            Site::B(n) => cell(n, 1),
            Site::C(n) => cell(n, 2),
        }
    }

    pub fn site(&self, flat: usize) -> Option<Site> {
        if flat >= self.dim() {
            return None;
        }
        if self.with_ends {
            if flat == 0 {
                return Some(Site::Sender);
            }
            if flat == 3 * self.cells + 1 {
                return Some(Site::Receiver);
            }
        }
        let k = flat - self.offset();
        let n = k / 3 + 1;
        Some(match k % 3 {
            0 => Site::A(n),
            1 => Site::B(n),
            _ => Site::C(n),
        })
    }

    /// Row of a site that is known to exist in this basis.
    pub fn at(&self, site: Site) -> usize {
        self.flat(site)
            .unwrap_or_else(|| panic!("{site:?} is not part of this basis"))
    }

    /// Rows of the `b` legs (the minority sublattice of the channel).
    pub fn b_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.cells).map(|n| self.at(Site::B(n)))
    }
}

fn fill_channel(h: &mut HamiltonianMatrix, idx: &SiteIndex, c: &CouplingSet) {
    let n = idx.cells();
    for cell in 1..=n {
        let (a, b, cc) = (
            idx.at(Site::A(cell)),
            idx.at(Site::B(cell)),
            idx.at(Site::C(cell)),
        );
        h.set_coupling(a, b, c.j1[cell - 1]);
        h.set_coupling(b, cc, c.j2[cell - 1]);
        if cell < n {
            let next_b = idx.at(Site::B(cell + 1));
            h.set_coupling(a, next_b, c.j1p[cell - 1]);
            h.set_coupling(cc, next_b, c.j2p[cell - 1]);
        }
    }
}

/// `3N×3N` hopping matrix of the bare channel.
pub fn channel_hamiltonian(spec: &ChainSpec, c: &CouplingSet) -> Result<HamiltonianMatrix> {
    c.check(spec.cells)?;
    let idx = SiteIndex::channel(spec.cells);
    let mut h = HamiltonianMatrix::zeros(idx.dim());
    fill_channel(&mut h, &idx, c);
    Ok(h)
}

/// `(3N+2)×(3N+2)` matrix: channel plus `g` on `S–a_1` and `R–a_N`.
pub fn full_hamiltonian(spec: &ChainSpec, c: &CouplingSet) -> Result<HamiltonianMatrix> {
    c.check(spec.cells)?;
    let idx = SiteIndex::full(spec.cells);
    let mut h = HamiltonianMatrix::zeros(idx.dim());
    fill_channel(&mut h, &idx, c);
    h.set_coupling(idx.at(Site::Sender), idx.at(Site::A(1)), spec.g);
    h.set_coupling(
        idx.at(Site::Receiver),
        idx.at(Site::A(spec.cells)),
        spec.g,
    );
    Ok(h)
}

/// Local eigenmodes of a single trimer, components ordered `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellModes {
    /// Compact zero mode `(J2, 0, −J1)/λ`.
    pub zero: [f64; 3],
    /// `(J1, λ, J2)/(λ√2)`, energy `+λ`.
    pub plus: [f64; 3],
    /// `(J1, −λ, J2)/(λ√2)`, energy `−λ`.
    pub minus: [f64; 3],
    /// `λ = √(J1² + J2²)`.
    pub lambda: f64,
}

pub fn cell_eigenstates(j1: f64, j2: f64) -> Result<CellModes> {
    if !(j1 > 0.0 && j2 > 0.0) {
        return Err(Error::InvalidParameter("trimer couplings must be positive"));
    }
    let lambda = libm::hypot(j1, j2);
    let s = lambda * core::f64::consts::SQRT_2;
    Ok(CellModes {
        zero: [j2 / lambda, 0.0, -j1 / lambda],
        plus: [j1 / s, lambda / s, j2 / s],
        minus: [j1 / s, -lambda / s, j2 / s],
        lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMode {
    Zero,
    Plus,
    Minus,
}

impl CellMode {
    pub const ALL: [CellMode; 3] = [CellMode::Zero, CellMode::Plus, CellMode::Minus];

    fn nu(self) -> f64 {
        match self {
            CellMode::Zero => 0.0,
            CellMode::Plus => 1.0,
            CellMode::Minus => -1.0,
        }
    }

    pub fn vector(self, modes: &CellModes) -> [f64; 3] {
        match self {
            CellMode::Zero => modes.zero,
            CellMode::Plus => modes.plus,
            CellMode::Minus => modes.minus,
        }
    }
}

/// `⟨v_to^(n+1)| H_ch |v_from^(n)⟩` for cell `n` in `1..N`.
///
/// Only `b_{n+1}` couples across cells, so the element is the `b` amplitude
/// of the target mode (`ν/√2`, zero for the compact mode) times the overlap
/// of the source mode with `(J1p, ·, J2p)`.
pub fn intercell_transition(
    c: &CouplingSet,
    n: usize,
    from: CellMode,
    to: CellMode,
) -> Result<f64> {
    let cells = c.cells();
    if n == 0 || n >= cells {
        return Err(Error::CellOutOfRange {
            index: n,
            max: cells.saturating_sub(1),
        });
    }
    let i = n - 1;
    let (j1, j2, j1p, j2p) = (c.j1[i], c.j2[i], c.j1p[i], c.j2p[i]);
    let lambda = libm::hypot(j1, j2);
    let nu = to.nu();
    Ok(match from {
        CellMode::Plus | CellMode::Minus => nu / (2.0 * lambda) * (j1 * j1p + j2 * j2p),
        CellMode::Zero => {
            nu / (core::f64::consts::SQRT_2 * lambda) * (j2 * j1p - j1 * j2p)
        }
    })
}
