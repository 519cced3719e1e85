//! Uniform origin-centred grids and nonnegative grid functions with their distribution data.

mod generate;
mod io;

pub use generate::{generate_test_function, FunctionKind, GeneratorParams};
pub use io::{read_grid_function, write_grid_function};

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

pub const MAX_DIM: usize = 3;

/// Uniform grid with odd cell counts per axis, centred so that one cell sits at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    shape: Vec<usize>,
    spacing: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(shape: Vec<usize>, spacing: T) -> Result<Self> {
        if shape.is_empty() || shape.len() > MAX_DIM {
            return Err(Error::InvalidSpec(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                shape.len()
            )));
        }
        if let Some(n) = shape.iter().find(|&&n| n % 2 == 0 || n < 3) {
            return Err(Error::InvalidSpec(format!(
                "every axis needs an odd cell count >= 3, got {n}"
            )));
        }
        if !(spacing.is_finite() && spacing > T::zero()) {
            return Err(Error::InvalidSpec(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { shape, spacing })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the origin cell along `axis`.
    pub fn center(&self, axis: usize) -> usize {
        (self.shape[axis] - 1) / 2
    }

    /// Distance from the origin to the outermost cell centre along `axis`.
    pub fn half_width(&self, axis: usize) -> T {
        T::of(self.center(axis) as f64) * self.spacing
    }

    /// h^N.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim() as i32)
    }

    /// Row-major stride of `axis` (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Cell offsets from the origin cell, in cells.
    pub fn offsets(&self, flat: usize) -> Vec<i64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| i as i64 - self.center(axis) as i64)
            .collect()
    }

    /// Flat index of the cell at the given centred offsets, if it lies in the box.
    pub fn flat_from_offsets(&self, offsets: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (axis, &k) in offsets.iter().enumerate() {
            let i = k + self.center(axis) as i64;
            if i < 0 || i >= self.shape[axis] as i64 {
                return None;
            }
            flat = flat * self.shape[axis] + i as usize;
        }
        Some(flat)
    }

    /// Coordinates of the cell centre: (i - (n-1)/2)·h on each axis.
    pub fn coordinates(&self, flat: usize) -> Vec<T> {
        self.offsets(flat).into_iter().map(|k| T::of(k as f64) * self.spacing).collect()
    }

    /// True for cells in the outermost layer of any axis.
    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.shape)
            .any(|(&i, &n)| i == 0 || i == n - 1)
    }

    /// Exact squared distance from the origin, in units of h².
    pub fn squared_radius_cells(&self, flat: usize) -> i64 {
        self.offsets(flat).iter().map(|k| k * k).sum()
    }

    /// Same cell counts on a grid with a different spacing.
    pub fn with_spacing(&self, spacing: T) -> Result<Self> {
        Self::new(self.shape.clone(), spacing)
    }
}

/// Nonnegative function sampled at the cell centres of a [`GridSpec`], zero on the
/// outermost cell layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    /// Validates the cone and boundary invariants. `-0.0` is normalized to `+0.0`.
    pub fn new(spec: GridSpec<T>, mut values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::SizeMismatch { expected: spec.len(), got: values.len() });
        }
        for (flat, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { cell: spec.multi_index(flat) });
            }
            if *v < T::zero() {
                return Err(Error::NegativeValue { cell: spec.multi_index(flat), value: v.as_f64() });
            }
            *v = *v + T::zero();
            if *v != T::zero() && spec.is_boundary(flat) {
                return Err(Error::BoundaryLayer { cell: spec.multi_index(flat), value: v.as_f64() });
            }
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec<T>) -> Self {
        let values = vec![T::zero(); spec.len()];
        Self { spec, values }
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(spec: GridSpec<T>, mut f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let values = (0..spec.len()).map(|c| f(&spec.coordinates(c))).collect();
        Self::new(spec, values)
    }

    /// Caller guarantees the invariants (used for value permutations of a valid function).
    pub(crate) fn from_parts_unchecked(spec: GridSpec<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.values[self.spec.flat_index(idx)]
    }

    /// Translates the function by whole cells; values shifted out of the box must be zero.
    pub fn shifted(&self, shift: &[i64]) -> Result<Self> {
        if shift.len() != self.spec.dim() {
            return Err(Error::InvalidParameter(format!(
                "shift has {} components for a {}-dimensional grid",
                shift.len(),
                self.spec.dim()
            )));
        }
        let mut out = vec![T::zero(); self.values.len()];
        for (c, &v) in self.values.iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            let target: Vec<i64> =
                self.spec.offsets(c).iter().zip(shift).map(|(k, s)| k + s).collect();
            match self.spec.flat_from_offsets(&target) {
                Some(t) => out[t] = v,
                None => {
                    return Err(Error::BoundaryLayer {
                        cell: self.spec.multi_index(c),
                        value: v.as_f64(),
                    })
                }
            }
        }
        Self::new(self.spec.clone(), out)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

/// Distinct values in strictly decreasing order with their cell counts.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueMultiset<T> {
    entries: Vec<(T, usize)>,
}

impl<T: Scalar> ValueMultiset<T> {
    pub fn entries(&self) -> &[(T, usize)] {
        &self.entries
    }

    pub fn total_count(&self) -> usize {
        self.entries.iter().map(|&(_, n)| n).sum()
    }
}

pub(crate) fn descending<T: Scalar>(a: &T, b: &T) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

/// μ({u > t}) = h^N · #{c : u[c] > t}.
///
/// # Panics
/// If `t` is negative or NaN.
pub fn distribution_function<T: Scalar>(u: &GridFunction<T>, t: T) -> T {
    assert!(t >= T::zero(), "distribution_function needs t >= 0");
    let count = u.values.iter().filter(|&&v| v > t).count();
    T::of(count as f64) * u.spec.cell_volume()
}

/// Sorted fingerprint of the values; equal fingerprints mean equimeasurable functions.
pub fn value_multiset<T: Scalar>(u: &GridFunction<T>) -> ValueMultiset<T> {
    let mut sorted = u.values.clone();
    sorted.sort_by(descending);
    let mut entries: Vec<(T, usize)> = Vec::new();
    for v in sorted {
        match entries.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => entries.push((v, 1)),
        }
    }
    ValueMultiset { entries }
}

/// (h^N Σ |v|^p)^{1/p} over raw cell values.
pub fn lp_norm_values<T: Scalar>(values: impl IntoIterator<Item = T>, cell_volume: T, p: T) -> T {
    let s = compensated_sum(values.into_iter().map(|v| v.abs().powf(p)));
    (s * cell_volume).powf(p.recip())
}

/// Discrete L^p norm.
///
/// # Panics
/// If `p < 1`.
pub fn lp_norm<T: Scalar>(u: &GridFunction<T>, p: T) -> T {
    assert!(p >= T::one(), "lp_norm needs p >= 1");
    lp_norm_values(u.values.iter().copied(), u.spec.cell_volume(), p)
}

/// ‖u − v‖_p for two functions on the same grid.
///
/// # Panics
/// If the grids differ or `p < 1`.
pub fn lp_distance<T: Scalar>(u: &GridFunction<T>, v: &GridFunction<T>, p: T) -> T {
    assert!(u.same_grid(v), "lp_distance needs functions on the same grid");
    assert!(p >= T::one(), "lp_distance needs p >= 1");
    lp_norm_values(
        u.values.iter().zip(&v.values).map(|(&a, &b)| a - b),
        u.spec.cell_volume(),
        p,
    )
}
