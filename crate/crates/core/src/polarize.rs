//! Half-spaces containing the origin, their reflections, and two-point rearrangement.
//!
//! A half-space is `H = {x : a·x <= d}` with unit normal `a` and offset `d >= 0`. Its
//! reflection is `σ(x) = x - 2(a·x - d)a`. Polarization keeps the larger of `u(x)` and
//! `u(σ(x))` on the `H` side and the smaller one on the other side.
//!
//! Reflections that map grid centres onto grid centres (or out of the box) are handled
//! as index permutations (`Exact`), which makes polarization a pure value permutation.
//! Every other reflection samples `u(σ(x))` by multilinear interpolation (`Interp`).

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::scalar::Scalar;
use crate::scheduler::{PolarizationSchedule, ScheduledHalfSpace, Strategy};

#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace<T> {
    normal: Vec<T>,
    offset: T,
}

impl<T: Scalar> HalfSpace<T> {
    /// Normalizes `normal` unless it is already unit length to within rounding; rejects a
    /// negative offset (the origin must lie in `H`).
    pub fn new(normal: Vec<T>, offset: T) -> Result<Self> {
        if normal.is_empty() || normal.iter().any(|a| !a.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidHalfSpace("normal and offset must be finite".into()));
        }
        let len = normal.iter().map(|&a| a * a).fold(T::zero(), |s, x| s + x).sqrt();
        if len == T::zero() {
            return Err(Error::InvalidHalfSpace("normal must be nonzero".into()));
        }
        if offset < T::zero() {
            return Err(Error::OriginNotContained(offset.as_f64()));
        }
        let normal = if (len - T::one()).abs() <= T::of(8.0) * T::epsilon() {
            normal
        } else {
            normal.into_iter().map(|a| a / len).collect()
        };
        Ok(Self { normal, offset })
    }

    /// `{sign·x_axis <= offset}`.
    pub fn axis(dim: usize, axis: usize, sign: i8, offset: T) -> Result<Self> {
        let mut normal = vec![T::zero(); dim];
        normal[axis] = if sign >= 0 { T::one() } else { -T::one() };
        Self::new(normal, offset)
    }

    /// `{(si·x_i + sj·x_j)/√2 <= offset}`.
    pub fn diagonal(dim: usize, i: usize, j: usize, si: i8, sj: i8, offset: T) -> Result<Self> {
        let c = T::of(FRAC_1_SQRT_2);
        let mut normal = vec![T::zero(); dim];
        normal[i] = if si >= 0 { c } else { -c };
        normal[j] = if sj >= 0 { c } else { -c };
        Self::new(normal, offset)
    }

    pub fn normal(&self) -> &[T] {
        &self.normal
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    fn signed_gap(&self, x: &[T]) -> T {
        self.normal.iter().zip(x).fold(T::zero(), |s, (&a, &xi)| s + a * xi) - self.offset
    }

    /// `a·x <= d`.
    pub fn contains(&self, x: &[T]) -> bool {
        self.signed_gap(x) <= T::zero()
    }
}

/// σ_H(x) = x − 2(a·x − d)a.
pub fn reflect<T: Scalar>(hs: &HalfSpace<T>, x: &[T]) -> Vec<T> {
    let g = hs.signed_gap(x);
    let two = T::one() + T::one();
    x.iter().zip(&hs.normal).map(|(&xi, &a)| xi - two * g * a).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolarizationMode {
    Exact,
    Interp,
}

impl PolarizationMode {
    pub fn name(self) -> &'static str {
        match self {
            PolarizationMode::Exact => "EXACT",
            PolarizationMode::Interp => "INTERP",
        }
    }
}

/// Reflections of the lattice, in cell units. `m` is the offset in half-cells (axis) or
/// in units of h/√2 (diagonal).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeReflection {
    Axis { axis: usize, sign: i64, m: i64 },
    Diagonal { i: usize, j: usize, si: i64, sj: i64, m: i64 },
}

impl LatticeReflection {
    fn image(&self, k: &[i64]) -> Vec<i64> {
        let mut out = k.to_vec();
        match *self {
            LatticeReflection::Axis { axis, sign, m } => out[axis] = sign * m - k[axis],
            LatticeReflection::Diagonal { i, j, si, sj, m } => {
                out[i] = -si * sj * k[j] + si * m;
                out[j] = -si * sj * k[i] + sj * m;
            }
        }
        out
    }

    /// Twice the signed gap a·x − d, scaled to integers: negative strictly inside H.
    fn side(&self, k: &[i64]) -> i64 {
        match *self {
            LatticeReflection::Axis { axis, sign, m } => 2 * sign * k[axis] - m,
            LatticeReflection::Diagonal { i, j, si, sj, m } => si * k[i] + sj * k[j] - m,
        }
    }
}

/// Index-level description of an exact reflection on one grid shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMap {
    shape: Vec<usize>,
    reflection: LatticeReflection,
    partner: Vec<Option<usize>>,
    pairs: Vec<(usize, usize)>,
}

impl ExactMap {
    pub fn reflection(&self) -> LatticeReflection {
        self.reflection
    }

    /// Image of each cell; `None` when the reflected centre lies outside the box.
    pub fn partner(&self) -> &[Option<usize>] {
        &self.partner
    }

    /// (cell strictly inside H, its in-box partner) pairs; each pair appears once.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompatibilityCertificate {
    Exact(ExactMap),
    Interp,
}

impl CompatibilityCertificate {
    pub fn mode(&self) -> PolarizationMode {
        match self {
            CompatibilityCertificate::Exact(_) => PolarizationMode::Exact,
            CompatibilityCertificate::Interp => PolarizationMode::Interp,
        }
    }
}

fn near_integer<T: Scalar>(x: T) -> Option<i64> {
    let r = x.round();
    let tol = T::of(64.0) * T::epsilon() * r.abs().max(T::one());
    ((x - r).abs() <= tol).then(|| r.as_f64() as i64)
}

fn lattice_reflection<T: Scalar>(hs: &HalfSpace<T>, spec: &GridSpec<T>) -> Option<LatticeReflection> {
    if hs.dim() != spec.dim() {
        return None;
    }
    let tol = T::of(64.0) * T::epsilon();
    let nonzero: Vec<usize> = (0..hs.dim()).filter(|&i| hs.normal[i].abs() > tol).collect();
    let sign = |a: T| if a > T::zero() { 1 } else { -1 };
    let h = spec.spacing();
    match *nonzero.as_slice() {
        [axis] => {
            let m = near_integer(hs.offset * T::of(2.0) / h)?;
            Some(LatticeReflection::Axis { axis, sign: sign(hs.normal[axis]), m })
        }
        [i, j] => {
            let c = T::of(FRAC_1_SQRT_2);
            let diag = |a: T| (a.abs() - c).abs() <= tol;
            if !(diag(hs.normal[i]) && diag(hs.normal[j])) || spec.shape()[i] != spec.shape()[j] {
                return None;
            }
            let m = near_integer(hs.offset * T::of(2.0).sqrt() / h)?;
            Some(LatticeReflection::Diagonal { i, j, si: sign(hs.normal[i]), sj: sign(hs.normal[j]), m })
        }
        _ => None,
    }
}

/// `Exact` iff σ_H sends every grid centre to a grid centre or outside the box. Recognized
/// families: axis normals ±e_i with d a multiple of h/2, and diagonal normals
/// (±e_i ± e_j)/√2 with d a multiple of h/√2 on axes of equal length.
pub fn is_grid_compatible<T: Scalar>(hs: &HalfSpace<T>, spec: &GridSpec<T>) -> CompatibilityCertificate {
    let Some(reflection) = lattice_reflection(hs, spec) else {
        return CompatibilityCertificate::Interp;
    };
    let mut partner = Vec::with_capacity(spec.len());
    let mut pairs = Vec::new();
    for c in 0..spec.len() {
        let k = spec.offsets(c);
        let image = spec.flat_from_offsets(&reflection.image(&k));
        partner.push(image);
        if let Some(p) = image {
            if reflection.side(&k) < 0 {
                pairs.push((c, p));
            }
        }
    }
    CompatibilityCertificate::Exact(ExactMap { shape: spec.shape().to_vec(), reflection, partner, pairs })
}

fn multilinear<T: Scalar>(u: &GridFunction<T>, y: &[T]) -> T {
    let spec = u.spec();
    let dim = spec.dim();
    let h = spec.spacing();
    let mut base = [0i64; 3];
    let mut frac = [T::zero(); 3];
    for a in 0..dim {
        let q = y[a] / h + T::of(spec.center(a) as f64);
        let f = q.floor();
        base[a] = f.as_f64() as i64;
        frac[a] = q - f;
    }
    let mut acc = T::zero();
    for corner in 0..(1usize << dim) {
        let mut w = T::one();
        let mut flat = 0usize;
        let mut inside = true;
        for a in 0..dim {
            let bit = (corner >> a) & 1;
            let i = base[a] + bit as i64;
            if i < 0 || i >= spec.shape()[a] as i64 {
                inside = false;
                break;
            }
            flat += i as usize * spec.stride(a);
            w = w * if bit == 1 { frac[a] } else { T::one() - frac[a] };
        }
        if inside && w != T::zero() {
            acc = acc + w * u.values()[flat];
        }
    }
    acc
}

/// u^H: max on the H side, min on the other side.
///
/// In `Exact` mode this permutes values within reflection pairs (cells reflected out of
/// the box pair with a zero and are left unchanged). In `Interp` mode the partner value is
/// interpolated, and the result must still vanish on the boundary layer.
pub fn polarize<T: Scalar>(
    u: &GridFunction<T>,
    hs: &HalfSpace<T>,
    cert: &CompatibilityCertificate,
) -> Result<GridFunction<T>> {
    let spec = u.spec();
    if hs.dim() != spec.dim() {
        return Err(Error::CertificateMismatch);
    }
    match cert {
        CompatibilityCertificate::Exact(map) => {
            if map.shape != spec.shape() || lattice_reflection(hs, spec) != Some(map.reflection) {
                return Err(Error::CertificateMismatch);
            }
            let src = u.values();
            let mut values = src.to_vec();
            for &(inside, outside) in &map.pairs {
                let (a, b) = (src[inside], src[outside]);
                if b > a {
                    values[inside] = b;
                    values[outside] = a;
                }
            }
            GridFunction::new(spec.clone(), values)
        }
        CompatibilityCertificate::Interp => {
            let values = (0..spec.len())
                .map(|c| {
                    let x = spec.coordinates(c);
                    let own = u.values()[c];
                    let mirrored = multilinear(u, &reflect(hs, &x));
                    if hs.contains(&x) {
                        own.max(mirrored)
                    } else {
                        own.min(mirrored)
                    }
                })
                .collect();
            GridFunction::new(spec.clone(), values)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleFamily {
    Exact,
    Mixed,
}

/// Every exact half-space of the grid, in a fixed order.
///
/// Axis half-spaces use offsets d = m·h/2 for m = 0..=2·centre, diagonal ones d = m·h/√2.
/// For m > 0 both orientations are included. For m = 0 only the orientation that agrees
/// with the tie-break of the radial order is kept (the H side holds the lexicographically
/// smaller cell of each equal-radius pair), so that the symmetrized function is a common
/// fixed point of the whole family.
pub fn exact_family<T: Scalar>(spec: &GridSpec<T>) -> Vec<HalfSpace<T>> {
    let dim = spec.dim();
    let h = spec.spacing();
    let mut out = Vec::new();
    for axis in 0..dim {
        out.push(HalfSpace::axis(dim, axis, 1, T::zero()).expect("valid axis half-space"));
        for m in 1..=2 * spec.center(axis) {
            let d = T::of(m as f64) * h / T::of(2.0);
            for sign in [1, -1] {
                out.push(HalfSpace::axis(dim, axis, sign, d).expect("valid axis half-space"));
            }
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            if spec.shape()[i] != spec.shape()[j] {
                continue;
            }
            out.push(HalfSpace::diagonal(dim, i, j, 1, -1, T::zero()).expect("valid diagonal"));
            out.push(HalfSpace::diagonal(dim, i, j, 1, 1, T::zero()).expect("valid diagonal"));
            for m in 1..=2 * spec.center(i) {
                let d = T::of(m as f64) * h * T::of(FRAC_1_SQRT_2);
                for (si, sj) in [(1, -1), (-1, 1), (1, 1), (-1, -1)] {
                    out.push(HalfSpace::diagonal(dim, i, j, si, sj, d).expect("valid diagonal"));
                }
            }
        }
    }
    out
}

fn random_interp_halfspace<T: Scalar>(spec: &GridSpec<T>, rng: &mut ChaCha8Rng) -> HalfSpace<T> {
    let extent = (0..spec.dim()).map(|a| spec.half_width(a).as_f64()).fold(f64::INFINITY, f64::min);
    loop {
        let normal: Vec<f64> = (0..spec.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let len = normal.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len < 1e-8 {
            continue;
        }
        let offset = rng.random_range(0.0..=extent);
        let hs = HalfSpace::new(normal.iter().map(|&a| T::of(a / len)).collect(), T::of(offset))
            .expect("finite normal and nonnegative offset");
        return hs;
    }
}

/// Seeded sequence of `count` half-spaces.
///
/// `Exact` draws uniformly (with replacement) from [`exact_family`]. `Mixed` draws from the
/// exact family or, with probability 1/2, a uniformly random unit normal with an offset in
/// `[0, extent]`.
pub fn generate_schedule<T: Scalar>(
    spec: &GridSpec<T>,
    count: usize,
    seed: u64,
    family: ScheduleFamily,
) -> Result<PolarizationSchedule<T>> {
    if count == 0 {
        return Err(Error::InvalidParameter("schedule needs at least one half-space".into()));
    }
    let exact = exact_family(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let halfspaces = (0..count)
        .map(|_| match family {
            ScheduleFamily::Mixed if rng.random_bool(0.5) => random_interp_halfspace(spec, &mut rng),
            _ => exact.choose(&mut rng).expect("family is nonempty").clone(),
        })
        .collect();
    PolarizationSchedule::new(spec, halfspaces, Strategy::Cyclic)
}

/// The whole exact family, each member once, in seeded random order.
pub fn shuffled_exact_family<T: Scalar>(spec: &GridSpec<T>, seed: u64) -> Result<PolarizationSchedule<T>> {
    let mut family = exact_family(spec);
    family.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    PolarizationSchedule::new(spec, family, Strategy::Cyclic)
}

/// One half-space per line: `a1 … ad d mode`.
pub fn write_schedule<T: Scalar>(schedule: &PolarizationSchedule<T>, mut out: impl Write) -> Result<()> {
    for ScheduledHalfSpace { halfspace, certificate } in schedule.entries() {
        let mut fields: Vec<String> = halfspace.normal().iter().map(|a| format!("{a:e}")).collect();
        fields.push(format!("{:e}", halfspace.offset()));
        fields.push(certificate.mode().name().to_string());
        writeln!(out, "{}", fields.join(" "))?;
    }
    Ok(())
}

/// Reads a schedule written by [`write_schedule`]. Blank lines and `#` comments are skipped;
/// the stated mode must agree with the certificate recomputed for `spec`.
pub fn read_schedule<T: Scalar>(
    reader: impl BufRead,
    spec: &GridSpec<T>,
    strategy: Strategy,
) -> Result<PolarizationSchedule<T>> {
    let mut halfspaces = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != spec.dim() + 2 {
            return Err(err(format!("expected {} fields, got {}", spec.dim() + 2, tokens.len())));
        }
        let nums = tokens[..=spec.dim()]
            .iter()
            .map(|t| t.parse::<f64>().map(T::of).map_err(|e| err(format!("`{t}`: {e}"))))
            .collect::<Result<Vec<T>>>()?;
        let hs = HalfSpace::new(nums[..spec.dim()].to_vec(), nums[spec.dim()])?;
        let stated = match tokens[spec.dim() + 1] {
            "EXACT" => PolarizationMode::Exact,
            "INTERP" => PolarizationMode::Interp,
            other => return Err(err(format!("unknown mode `{other}`"))),
        };
        let actual = is_grid_compatible(&hs, spec).mode();
        if stated != actual {
            return Err(err(format!("mode {} does not match the grid ({})", stated.name(), actual.name())));
        }
        halfspaces.push(hs);
    }
    PolarizationSchedule::new(spec, halfspaces, strategy)
}
