//! Seeded test-function corpus.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GridFunction, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_PLACEMENT_ATTEMPTS: usize = 1_000;
const MAX_RESTARTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    /// Truncated Gaussian centred at the origin (shifted only if a shift is given).
    GaussianBump,
    /// Sum of compactly supported C² bumps at random off-grid centres.
    MultiBump,
    /// Radial profiles with a flat shelf strictly between 0 and the maximum, centred on grid points.
    Plateau,
    /// Strictly radially decreasing profile translated by whole cells.
    RadialTranslate,
    /// Union of disjoint balls, constant value on the union.
    IndicatorUnion,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 5] = [
        FunctionKind::GaussianBump,
        FunctionKind::MultiBump,
        FunctionKind::Plateau,
        FunctionKind::RadialTranslate,
        FunctionKind::IndicatorUnion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::GaussianBump => "gaussian-bump",
            FunctionKind::MultiBump => "multi-bump",
            FunctionKind::Plateau => "plateau",
            FunctionKind::RadialTranslate => "radial-translate",
            FunctionKind::IndicatorUnion => "indicator-union",
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown function kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    /// Zero cells kept between the support and the boundary layer.
    pub padding: usize,
    /// Number of bumps / plateaus / balls; `None` picks a kind-specific random count.
    pub components: Option<usize>,
    /// Whole-cell translation for `gaussian-bump`, `radial-translate` and single `plateau`;
    /// `None` draws one at random (except for `gaussian-bump`, which stays centred).
    pub shift: Option<Vec<i64>>,
    pub amplitude: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self { padding: 2, components: None, shift: None, amplitude: 1.0 }
    }
}

struct Layout {
    dim: usize,
    h: f64,
    /// Radius of the ball that must contain the support.
    avail: f64,
}

impl Layout {
    fn new<T: Scalar>(spec: &GridSpec<T>, padding: usize) -> Result<Self> {
        let min_center = (0..spec.dim()).map(|a| spec.center(a)).min().expect("dim >= 1");
        let cells = min_center as i64 - 1 - padding as i64;
        if cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid too small for padding {padding}: needs at least {} cells per axis",
                2 * (padding + 3) + 1
            )));
        }
        let h = spec.spacing().as_f64();
        Ok(Self { dim: spec.dim(), h, avail: cells as f64 * h })
    }

    fn random_point(&self, rng: &mut ChaCha8Rng, radius: f64) -> Vec<f64> {
        loop {
            let p: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-radius..=radius)).collect();
            if norm(&p) <= radius {
                return p;
            }
        }
    }

    fn random_shift(&self, rng: &mut ChaCha8Rng, radius_cells: f64) -> Vec<i64> {
        loop {
            let s: Vec<i64> = (0..self.dim)
                .map(|_| {
                    let r = radius_cells.floor() as i64;
                    rng.random_range(-r..=r)
                })
                .collect();
            if shift_len(&s) <= radius_cells {
                return s;
            }
        }
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn shift_len(s: &[i64]) -> f64 {
    (s.iter().map(|k| k * k).sum::<i64>() as f64).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Squared distance in h² units between a cell and an integer centre; exact in f64.
fn lattice_r2(offsets: &[i64], centre: &[i64]) -> i64 {
    offsets.iter().zip(centre).map(|(k, c)| (k - c) * (k - c)).sum()
}

/// Moves a squared radius (in h² units) down to the middle of two lattice shells so that no
/// cell sits exactly on the support edge.
fn off_lattice_r2(r2_cells: f64) -> f64 {
    (r2_cells.floor() - 0.5).max(0.5)
}

fn truncated_gaussian(r2: f64, sigma: f64, cutoff_r2: f64, amplitude: f64) -> f64 {
    if r2 >= cutoff_r2 {
        return 0.0;
    }
    let s2 = 2.0 * sigma * sigma;
    amplitude * ((-r2 / s2).exp() - (-cutoff_r2 / s2).exp())
}

fn plateau_profile(r: f64, radius: f64, shelf: f64, amplitude: f64) -> f64 {
    let x = r / radius;
    if x < 0.35 {
        let q = 1.0 - (x / 0.35).powi(2);
        shelf + (amplitude - shelf) * q * q
    } else if x < 0.65 {
        shelf
    } else if x < 1.0 {
        let q = 1.0 - ((x - 0.65) / 0.35).powi(2);
        shelf * q * q
    } else {
        0.0
    }
}

fn check_shift(layout: &Layout, shift: &[i64], reach: f64) -> Result<()> {
    if shift.len() != layout.dim {
        return Err(Error::InvalidParameter(format!(
            "shift has {} components for a {}-dimensional grid",
            shift.len(),
            layout.dim
        )));
    }
    if shift_len(shift) * layout.h + reach > layout.avail {
        return Err(Error::InvalidParameter(format!(
            "shift {shift:?} pushes the support into the padding/boundary layer"
        )));
    }
    Ok(())
}

fn sample<T: Scalar>(spec: &GridSpec<T>, mut f: impl FnMut(&[i64], &[f64]) -> f64) -> Result<GridFunction<T>> {
    let h = spec.spacing().as_f64();
    let values = (0..spec.len())
        .map(|c| {
            let k = spec.offsets(c);
            let x: Vec<f64> = k.iter().map(|&k| k as f64 * h).collect();
            T::of(f(&k, &x))
        })
        .collect();
    GridFunction::new(spec.clone(), values)
}

/// Builds a deterministic member of the test corpus; the same seed reproduces the same values.
pub fn generate_test_function<T: Scalar>(
    kind: FunctionKind,
    params: &GeneratorParams,
    spec: &GridSpec<T>,
    seed: u64,
) -> Result<GridFunction<T>> {
    if !(params.amplitude.is_finite() && params.amplitude > 0.0) {
        return Err(Error::InvalidParameter("amplitude must be positive".into()));
    }
    let layout = Layout::new(spec, params.padding)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = layout.h;
    let amp = params.amplitude;
    match kind {
        FunctionKind::GaussianBump => {
            let shift = params.shift.clone().unwrap_or_else(|| vec![0; layout.dim]);
            check_shift(&layout, &shift, 0.0)?;
            let reach = layout.avail - shift_len(&shift) * h;
            let cutoff = off_lattice_r2((reach / h).powi(2));
            let sigma = reach / h / 3.0;
            sample(spec, |k, _| truncated_gaussian(lattice_r2(k, &shift) as f64, sigma, cutoff, amp))
        }
        FunctionKind::RadialTranslate => {
            let radius = rng.random_range(0.4..0.8) * layout.avail / h;
            let sigma = radius / rng.random_range(2.0..3.5);
            let cutoff = off_lattice_r2(radius * radius);
            let shift = match &params.shift {
                Some(s) => s.clone(),
                None => layout.random_shift(&mut rng, (layout.avail / h - cutoff.sqrt()).max(0.0)),
            };
            check_shift(&layout, &shift, cutoff.sqrt() * h)?;
            sample(spec, |k, _| truncated_gaussian(lattice_r2(k, &shift) as f64, sigma, cutoff, amp))
        }
        FunctionKind::Plateau => {
            let count = params.components.unwrap_or(1).max(1);
            let centres = place_plateaus(&mut rng, &layout, count, amp, params.shift.as_deref())?;
            sample(spec, |k, _| {
                centres
                    .iter()
                    .map(|(c, radius, shelf, peak)| {
                        plateau_profile((lattice_r2(k, c) as f64).sqrt(), *radius, *shelf, *peak)
                    })
                    .sum()
            })
        }
        FunctionKind::MultiBump => {
            let count = params.components.unwrap_or_else(|| rng.random_range(2..=4)).max(1);
            let placed = place_balls(&mut rng, &layout, count, 0.17..0.38, |ri, rj| ri.max(rj))?;
            let bumps: Vec<(Vec<f64>, f64, f64)> =
                placed.into_iter().map(|(c, r)| (c, r, rng.random_range(0.5..1.5) * amp)).collect();
            sample(spec, |_, x| {
                bumps
                    .iter()
                    .map(|(c, r, a)| {
                        let q = 1.0 - dist(x, c).powi(2) / (r * r);
                        if q > 0.0 {
                            a * q * q * q
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
        }
        FunctionKind::IndicatorUnion => {
            let count = params.components.unwrap_or_else(|| rng.random_range(2..=3)).max(1);
            let gap = 0.08 * layout.avail;
            let balls = place_balls(&mut rng, &layout, count, 0.12..0.33, |ri, rj| ri + rj + gap)?;
            sample(spec, |_, x| {
                if balls.iter().any(|(c, r)| dist(x, c) <= *r) {
                    amp
                } else {
                    0.0
                }
            })
        }
    }
}

/// Integer centre, radius in cells, shelf height and peak.
type Plateau = (Vec<i64>, f64, f64, f64);

/// `count` disjoint plateaus.
/// A single plateau uses `shift` as its centre when one is given.
fn place_plateaus(
    rng: &mut ChaCha8Rng,
    layout: &Layout,
    count: usize,
    amp: f64,
    shift: Option<&[i64]>,
) -> Result<Vec<Plateau>> {
    let max_radius = layout.avail / layout.h / count as f64;
    'restart: for _ in 0..MAX_RESTARTS {
        let mut out: Vec<Plateau> = Vec::with_capacity(count);
        for i in 0..count {
            let radius = rng.random_range(0.6..0.95) * max_radius;
            let shelf = rng.random_range(0.3..0.6) * amp;
            let peak = if i == 0 { amp } else { rng.random_range(0.6..1.0) * amp };
            let centre = match shift {
                Some(s) if count == 1 => {
                    check_shift(layout, s, radius * layout.h)?;
                    s.to_vec()
                }
                _ => {
                    let room = layout.avail / layout.h - radius;
                    let found = (0..MAX_PLACEMENT_ATTEMPTS).map(|_| layout.random_shift(rng, room)).find(|c| {
                        out.iter().all(|(other, r, _, _)| (lattice_r2(c, other) as f64).sqrt() > radius + r + 1.0)
                    });
                    match found {
                        Some(c) => c,
                        None => continue 'restart,
                    }
                }
            };
            out.push((centre, radius, shelf, peak));
        }
        return Ok(out);
    }
    Err(Error::InvalidParameter("could not place disjoint components inside the box".into()))
}

/// Draws `count` balls with radii in `radius_range`·avail and pairwise centre distance at
/// least `min_sep(r_i, r_j)`. A configuration that runs out of room is redrawn from scratch.
fn place_balls(
    rng: &mut ChaCha8Rng,
    layout: &Layout,
    count: usize,
    radius_range: std::ops::Range<f64>,
    min_sep: impl Fn(f64, f64) -> f64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    'restart: for _ in 0..MAX_RESTARTS {
        let mut balls: Vec<(Vec<f64>, f64)> = Vec::with_capacity(count);
        for _ in 0..count {
            let radius = rng.random_range(radius_range.clone()) * layout.avail;
            let room = layout.avail - radius;
            let found = (0..MAX_PLACEMENT_ATTEMPTS)
                .map(|_| layout.random_point(rng, room))
                .find(|c| balls.iter().all(|(o, r)| dist(c, o) >= min_sep(radius, *r)));
            match found {
                Some(c) => balls.push((c, radius)),
                None => continue 'restart,
            }
        }
        return Ok(balls);
    }
    Err(Error::InvalidParameter("could not place components inside the box".into()))
}
