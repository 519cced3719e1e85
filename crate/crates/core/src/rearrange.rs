//! Discrete Schwarz symmetrization.
//!
//! The symmetrized function places the cell values, sorted in decreasing order, along a
//! fixed total order of the cells: increasing distance from the origin, ties broken by
//! the row-major cell index. Distances are compared as exact integers (squared radius in
//! units of h²), so the order depends on the grid shape only.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::grid::{descending, GridFunction, GridSpec};
use crate::scalar::Scalar;

/// Cells sorted by (distance from origin, row-major index). Shared per grid shape.
#[derive(Clone, Debug)]
pub struct RadialOrder {
    cells: Arc<Vec<usize>>,
}

type OrderCache = Mutex<HashMap<Vec<usize>, Arc<Vec<usize>>>>;

fn cache() -> &'static OrderCache {
    static CACHE: OnceLock<OrderCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl RadialOrder {
    pub fn for_spec<T: Scalar>(spec: &GridSpec<T>) -> Self {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        let cells = map
            .entry(spec.shape().to_vec())
            .or_insert_with(|| {
                let mut keyed: Vec<(i64, usize)> =
                    (0..spec.len()).map(|c| (spec.squared_radius_cells(c), c)).collect();
                keyed.sort_unstable();
                Arc::new(keyed.into_iter().map(|(_, c)| c).collect())
            })
            .clone();
        Self { cells }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }
}

/// u*: the radially nonincreasing rearrangement of `u`.
///
/// Fails instead of truncating when the nonzero values would reach the boundary layer.
pub fn schwarz_symmetrize<T: Scalar>(u: &GridFunction<T>) -> Result<GridFunction<T>> {
    let spec = u.spec();
    let order = RadialOrder::for_spec(spec);
    let mut sorted = u.values().to_vec();
    sorted.sort_by(descending);
    let nonzero = sorted.iter().take_while(|&&v| v > T::zero()).count();
    if let Some(pos) = order.cells()[..nonzero].iter().position(|&c| spec.is_boundary(c)) {
        return Err(Error::SupportExceedsBox { nonzero, interior: pos });
    }
    let mut values = vec![T::zero(); spec.len()];
    for (&cell, v) in order.cells().iter().zip(sorted) {
        values[cell] = v;
    }
    Ok(GridFunction::from_parts_unchecked(spec.clone(), values))
}

/// True iff the values are nonincreasing along the radial order.
pub fn is_radially_nonincreasing<T: Scalar>(u: &GridFunction<T>) -> bool {
    let order = RadialOrder::for_spec(u.spec());
    let v = u.values();
    order.cells().windows(2).all(|w| v[w[0]] >= v[w[1]])
}

/// Maximum over cells.
pub fn esssup<T: Scalar>(u: &GridFunction<T>) -> T {
    u.values().iter().copied().fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{value_multiset, GridSpec};

    fn line(values: &[f64]) -> GridFunction<f64> {
        GridFunction::new(GridSpec::new(vec![values.len()], 1.0).unwrap(), values.to_vec()).unwrap()
    }

    /// Independent placement: pick, for each rank, the unused cell nearest the origin.
    fn brute_force_symmetrize(values: &[f64]) -> Vec<f64> {
        let n = values.len() as i64;
        let c = (n - 1) / 2;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut used = vec![false; values.len()];
        let mut out = vec![0.0; values.len()];
        for v in sorted {
            let mut best: Option<usize> = None;
            for (i, _) in used.iter().enumerate().filter(|(_, &u)| !u) {
                let d = (i as i64 - c).abs();
                if best.is_none_or(|b| d < (b as i64 - c).abs()) {
                    best = Some(i);
                }
            }
            let b = best.unwrap();
            used[b] = true;
            out[b] = v;
        }
        out
    }

    #[test]
    fn radial_order_starts_at_origin_and_is_sorted() {
        let spec = GridSpec::new(vec![5, 7], 1.0).unwrap();
        let order = RadialOrder::for_spec(&spec);
        assert_eq!(order.cells()[0], spec.flat_index(&[2, 3]));
        let r: Vec<i64> = order.cells().iter().map(|&c| spec.squared_radius_cells(c)).collect();
        assert!(r.windows(2).all(|w| w[0] <= w[1]));
        let mut seen = order.cells().to_vec();
        seen.sort_unstable();
        assert_eq!(seen, (0..spec.len()).collect::<Vec<_>>());
    }

    #[test]
    fn seven_cell_example_matches_brute_force() {
        let raw = [0.0, 3.0, 0.0, 1.0, 2.0, 0.0, 0.0];
        let us = schwarz_symmetrize(&line(&raw)).unwrap();
        assert_eq!(us.values(), brute_force_symmetrize(&raw).as_slice());
        assert_eq!(us.values(), &[0.0, 0.0, 2.0, 3.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn idempotent_and_permutation_invariant() {
        let u = line(&[0.0, 3.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        let us = schwarz_symmetrize(&u).unwrap();
        assert_eq!(schwarz_symmetrize(&us).unwrap(), us);
        let p = line(&[0.0, 1.0, 2.0, 0.0, 3.0, 0.0, 0.0]);
        assert_eq!(schwarz_symmetrize(&p).unwrap(), us);
        assert_eq!(value_multiset(&us), value_multiset(&u));
    }

    #[test]
    fn radial_monotonicity_checks() {
        assert!(is_radially_nonincreasing(&line(&[0.0; 7])));
        assert!(!is_radially_nonincreasing(&line(&[0.0, 2.0, 0.0, 0.0, 0.0, 2.0, 0.0])));
        let u = line(&[0.0, 3.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        assert!(is_radially_nonincreasing(&schwarz_symmetrize(&u).unwrap()));
    }

    #[test]
    fn esssup_examples() {
        assert_eq!(esssup(&line(&[0.0, 7.5, 1.0, 0.0, 0.0])), 7.5);
        assert_eq!(esssup(&line(&[0.0; 5])), 0.0);
    }

    #[test]
    fn oversized_support_is_an_error() {
        // On 9x9 the interior corners (±3,±3) lie farther out than the boundary cells (±4,0).
        let spec = GridSpec::new(vec![9, 9], 1.0).unwrap();
        let square: Vec<f64> =
            (0..spec.len()).map(|c| if spec.is_boundary(c) { 0.0 } else { 1.0 }).collect();
        let full = GridFunction::new(spec.clone(), square).unwrap();
        assert!(matches!(schwarz_symmetrize(&full), Err(Error::SupportExceedsBox { .. })));
        let disk: Vec<f64> =
            (0..spec.len()).map(|c| if spec.squared_radius_cells(c) <= 9 { 1.0 } else { 0.0 }).collect();
        let disk = GridFunction::new(spec, disk).unwrap();
        assert_eq!(schwarz_symmetrize(&disk).unwrap(), disk);
    }
}
