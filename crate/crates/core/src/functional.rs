//! Integrands j(s, t) and the discrete functionals J(u) = ∫ j(u, |∇u|) dx and
//! Σ_i ∫ |D_i u|^{p_i} dx built on forward differences.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::scalar::{CompensatedSum, Scalar};

/// Sampled surface j(s_i, t_k) with bilinear evaluation. Outside the sampled rectangle the
/// boundary cell's bilinear formula is extended linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrandTable<T> {
    s: Vec<T>,
    t: Vec<T>,
    /// Row-major in s: `values[i_s * t.len() + i_t]`.
    values: Vec<T>,
}

fn strictly_increasing<T: Scalar>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn bracket<T: Scalar>(grid: &[T], x: T) -> (usize, T) {
    let last = grid.len() - 2;
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(last);
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

impl<T: Scalar> IntegrandTable<T> {
    pub fn new(s: Vec<T>, t: Vec<T>, values: Vec<T>) -> Result<Self> {
        if s.len() < 2 || t.len() < 2 {
            return Err(Error::InvalidParameter("table needs at least 2 samples per axis".into()));
        }
        if !strictly_increasing(&s) || !strictly_increasing(&t) {
            return Err(Error::InvalidParameter("table grids must be strictly increasing".into()));
        }
        if values.len() != s.len() * t.len() {
            return Err(Error::SizeMismatch { expected: s.len() * t.len(), got: values.len() });
        }
        if s.iter().chain(&t).chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("table entries must be finite".into()));
        }
        Ok(Self { s, t, values })
    }

    pub fn from_fn(s: Vec<T>, t: Vec<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        let values = s.iter().flat_map(|&si| t.iter().map(move |&tk| (si, tk))).map(|(a, b)| f(a, b)).collect();
        Self::new(s, t, values)
    }

    pub fn evaluate(&self, s: T, t: T) -> T {
        let (i, ws) = bracket(&self.s, s);
        let (k, wt) = bracket(&self.t, t);
        let nt = self.t.len();
        let v = |a: usize, b: usize| self.values[a * nt + b];
        let one = T::one();
        (one - ws) * ((one - wt) * v(i, k) + wt * v(i, k + 1))
            + ws * ((one - wt) * v(i + 1, k) + wt * v(i + 1, k + 1))
    }

    /// `JT v1 ns=<..> nt=<..>`, then the s grid, the t grid and the values (row-major in s).
    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let header = lines.next().ok_or_else(|| perr(1, "empty table".into()))??;
        let mut tok = header.split_whitespace();
        if tok.next() != Some("JT") || tok.next() != Some("v1") {
            return Err(perr(1, "expected header starting with `JT v1`".into()));
        }
        let (mut ns, mut nt) = (None, None);
        for field in tok {
            let (k, v) = field.split_once('=').ok_or_else(|| perr(1, format!("malformed field `{field}`")))?;
            let n: usize = v.parse().map_err(|e| perr(1, format!("{k}: {e}")))?;
            match k {
                "ns" => ns = Some(n),
                "nt" => nt = Some(n),
                _ => return Err(perr(1, format!("unknown field `{k}`"))),
            }
        }
        let ns = ns.ok_or_else(|| perr(1, "missing ns".into()))?;
        let nt = nt.ok_or_else(|| perr(1, "missing nt".into()))?;
        let mut nums = Vec::new();
        for (i, line) in lines.enumerate() {
            for t in line?.split_whitespace() {
                nums.push(T::of(t.parse::<f64>().map_err(|e| perr(i + 2, format!("`{t}`: {e}")))?));
            }
        }
        if nums.len() != ns + nt + ns * nt {
            return Err(perr(1, format!("expected {} numbers, found {}", ns + nt + ns * nt, nums.len())));
        }
        let values = nums.split_off(ns + nt);
        let t = nums.split_off(ns);
        Self::new(nums, t, values)
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        let join = |xs: &[T]| xs.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "JT v1 ns={} nt={}", self.s.len(), self.t.len())?;
        writeln!(out, "{}", join(&self.s))?;
        writeln!(out, "{}", join(&self.t))?;
        for row in self.values.chunks(self.t.len()) {
            writeln!(out, "{}", join(row))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Integrand<T> {
    /// j(s, t) = t^p.
    PowerP { p: T },
    /// j(s, t) = ½(1 + s^{2α}) t^p.
    WeightedPower { alpha: T, p: T },
    Table(IntegrandTable<T>),
}

impl<T: Scalar> Integrand<T> {
    pub fn evaluate(&self, s: T, t: T) -> T {
        match self {
            Integrand::PowerP { p } => t.powf(*p),
            Integrand::WeightedPower { alpha, p } => {
                let half = T::of(0.5);
                half * (T::one() + s.powf(*alpha + *alpha)) * t.powf(*p)
            }
            Integrand::Table(table) => table.evaluate(s, t),
        }
    }

    /// ν′ with j(s, t) >= ν′ t^p, when known.
    pub fn coercivity(&self) -> Option<T> {
        match self {
            Integrand::PowerP { .. } => Some(T::one()),
            Integrand::WeightedPower { .. } => Some(T::of(0.5)),
            Integrand::Table(_) => None,
        }
    }

    /// The gradient exponent p of the built-in families.
    pub fn exponent(&self) -> Option<T> {
        match self {
            Integrand::PowerP { p } | Integrand::WeightedPower { p, .. } => Some(*p),
            Integrand::Table(_) => None,
        }
    }

    /// Family metadata: t ↦ j(s, t) is strictly convex for built-ins with p > 1. Tables are
    /// never certified.
    pub fn strictly_convex_in_t(&self) -> bool {
        self.exponent().is_some_and(|p| p > T::one())
    }

    /// Parses `power:p=<p>`, `weighted:alpha=<a>,p=<p>` or `table:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidParameter(format!("integrand `{spec}`: {m}"));
        let (family, rest) = spec.split_once(':').ok_or_else(|| bad("missing `:`".into()))?;
        if family == "table" {
            let file = std::fs::File::open(Path::new(rest))?;
            return Ok(Integrand::Table(IntegrandTable::read(std::io::BufReader::new(file))?));
        }
        let mut p = None;
        let mut alpha = None;
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("malformed `{kv}`")))?;
            let v: f64 = v.parse().map_err(|e| bad(format!("{k}: {e}")))?;
            match k {
                "p" => p = Some(v),
                "alpha" => alpha = Some(v),
                _ => return Err(bad(format!("unknown parameter `{k}`"))),
            }
        }
        let p = p.ok_or_else(|| bad("missing p".into()))?;
        if !(p.is_finite() && p >= 1.0) {
            return Err(bad("p must be >= 1".into()));
        }
        match family {
            "power" if alpha.is_none() => Ok(Integrand::PowerP { p: T::of(p) }),
            "weighted" => {
                let alpha = alpha.ok_or_else(|| bad("missing alpha".into()))?;
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(bad("alpha must be > 0".into()));
                }
                Ok(Integrand::WeightedPower { alpha: T::of(alpha), p: T::of(p) })
            }
            _ => Err(bad(format!("unknown family `{family}`"))),
        }
    }
}

/// Forward differences D_i u and the per-cell magnitude |∇u|.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField<T> {
    components: Vec<Vec<T>>,
    magnitude: Vec<T>,
}

impl<T: Scalar> GradientField<T> {
    pub fn component(&self, axis: usize) -> &[T] {
        &self.components[axis]
    }

    pub fn magnitude(&self) -> &[T] {
        &self.magnitude
    }

    pub fn max_magnitude(&self) -> T {
        self.magnitude.iter().copied().fold(T::zero(), T::max)
    }
}

/// D_i u[c] = (u[c + e_i] − u[c]) / h, zero on the last layer along axis i.
pub fn gradient<T: Scalar>(u: &GridFunction<T>) -> GradientField<T> {
    let spec = u.spec();
    let v = u.values();
    let h = spec.spacing();
    let components: Vec<Vec<T>> = (0..spec.dim())
        .map(|axis| {
            let stride = spec.stride(axis);
            let n = spec.shape()[axis];
            (0..spec.len())
                .map(|c| {
                    if (c / stride) % n == n - 1 {
                        T::zero()
                    } else {
                        (v[c + stride] - v[c]) / h
                    }
                })
                .collect()
        })
        .collect();
    let magnitude = (0..spec.len())
        .map(|c| components.iter().fold(T::zero(), |s, d| s + d[c] * d[c]).sqrt())
        .collect();
    GradientField { components, magnitude }
}

/// h^N Σ_c j(u[c], |∇u|[c]), summed in row-major order with compensation.
pub fn evaluate_functional<T: Scalar>(u: &GridFunction<T>, j: &Integrand<T>) -> Result<T> {
    let grad = gradient(u);
    functional_with_gradient(u, &grad, j)
}

pub(crate) fn functional_with_gradient<T: Scalar>(
    u: &GridFunction<T>,
    grad: &GradientField<T>,
    j: &Integrand<T>,
) -> Result<T> {
    let mut acc = CompensatedSum::default();
    for (c, (&s, &t)) in u.values().iter().zip(grad.magnitude()).enumerate() {
        let v = j.evaluate(s, t);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand {
                cell: u.spec().multi_index(c),
                s: s.as_f64(),
                t: t.as_f64(),
            });
        }
        acc.add(v);
    }
    Ok(acc.value() * u.spec().cell_volume())
}

/// Σ_i h^N Σ_c |D_i u[c]|^{p_i} for the first `exponents.len()` axes.
pub fn evaluate_anisotropic<T: Scalar>(u: &GridFunction<T>, exponents: &[T]) -> Result<T> {
    let dim = u.spec().dim();
    if exponents.is_empty() || exponents.len() > dim {
        return Err(Error::InvalidParameter(format!(
            "need between 1 and {dim} exponents, got {}",
            exponents.len()
        )));
    }
    if let Some(p) = exponents.iter().find(|&&p| !(p > T::one() && p.is_finite())) {
        return Err(Error::InvalidParameter(format!("exponent {p} must be > 1")));
    }
    let grad = gradient(u);
    let mut acc = CompensatedSum::default();
    for (axis, &p) in exponents.iter().enumerate() {
        let mut term = CompensatedSum::default();
        for &d in grad.component(axis) {
            term.add(d.abs().powf(p));
        }
        acc.add(term.value());
    }
    Ok(acc.value() * u.spec().cell_volume())
}

/// Sampled checks of continuity in s, convexity in t and monotonicity in t.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdmissibilityReport {
    pub continuous_in_s: bool,
    pub convex_in_t: bool,
    pub nondecreasing_in_t: bool,
}

impl AdmissibilityReport {
    pub fn all_pass(&self) -> bool {
        self.continuous_in_s && self.convex_in_t && self.nondecreasing_in_t
    }
}

const ADMISSIBILITY_TOL: f64 = 1e-10;
const CONTINUITY_LEVELS: u32 = 10;

/// Samples j on the given (sorted, nonempty) grids.
///
/// Convexity is midpoint convexity on every pair of t samples, monotonicity is checked on
/// every ordered pair; both allow `1e-10` slack scaled by max(1, |j|). Continuity in s
/// compares the jump of j across each s interval with the largest jump after ten dyadic
/// refinements: a jump that does not shrink below half is reported as a discontinuity.
pub fn check_admissibility<T: Scalar>(
    j: &Integrand<T>,
    s_samples: &[T],
    t_samples: &[T],
) -> AdmissibilityReport {
    let tol = |a: T, b: T| T::of(ADMISSIBILITY_TOL) * T::one().max(a.abs()).max(b.abs());
    let two = T::of(2.0);
    let mut convex = true;
    let mut monotone = true;
    for &s in s_samples {
        let row: Vec<T> = t_samples.iter().map(|&t| j.evaluate(s, t)).collect();
        for a in 0..t_samples.len() {
            for b in a + 1..t_samples.len() {
                let (ja, jb) = (row[a], row[b]);
                let mid = j.evaluate(s, (t_samples[a] + t_samples[b]) / two);
                if mid > (ja + jb) / two + tol(ja, jb) {
                    convex = false;
                }
                if t_samples[a] < t_samples[b] && ja > jb + tol(ja, jb) {
                    monotone = false;
                }
            }
        }
    }
    let mut continuous = true;
    for &t in t_samples {
        for w in s_samples.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (jl, jh) = (j.evaluate(lo, t), j.evaluate(hi, t));
            let coarse = (jh - jl).abs();
            if coarse <= tol(jl, jh) {
                continue;
            }
            let pieces = 1usize << CONTINUITY_LEVELS;
            let step = (hi - lo) / T::of(pieces as f64);
            let fine = (0..pieces)
                .map(|k| {
                    let a = lo + step * T::of(k as f64);
                    (j.evaluate(a + step, t) - j.evaluate(a, t)).abs()
                })
                .fold(T::zero(), T::max);
            if fine > coarse * T::of(0.5) {
                continuous = false;
            }
        }
    }
    AdmissibilityReport { continuous_in_s: continuous, convex_in_t: convex, nondecreasing_in_t: monotone }
}

/// `count` evenly spaced samples on [0, max] (a single 0 when max is 0).
pub fn uniform_samples<T: Scalar>(max: T, count: usize) -> Vec<T> {
    if max <= T::zero() || count < 2 {
        return vec![T::zero()];
    }
    (0..count).map(|k| max * T::of(k as f64) / T::of((count - 1) as f64)).collect()
}
