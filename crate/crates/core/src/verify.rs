//! Inequality checks comparing J(u) with J(u*), and the equality-case analysis.

use std::fmt;

use crate::error::{Error, Result};
use crate::functional::{
    check_admissibility, evaluate_anisotropic, functional_with_gradient, gradient, uniform_samples,
    AdmissibilityReport, Integrand,
};
use crate::grid::{lp_distance, lp_norm, lp_norm_values, GridFunction};
use crate::rearrange::{esssup, schwarz_symmetrize};
use crate::scalar::Scalar;

const ADMISSIBILITY_SAMPLES: usize = 33;
/// |∇u*| at or below this multiple of M/h counts as a critical cell.
pub const CRITICAL_GRADIENT_FACTOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    Holds,
    Fail,
    /// The inequality is violated but the integrand failed an admissibility check.
    HypothesisNotMet,
}

impl VerdictStatus {
    pub fn name(self) -> &'static str {
        match self {
            VerdictStatus::Holds => "HOLDS",
            VerdictStatus::Fail => "FAIL",
            VerdictStatus::HypothesisNotMet => "HYPOTHESIS_NOT_MET",
        }
    }
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityVerdict<T> {
    pub j_u: T,
    pub j_ustar: T,
    /// `j_ustar <= j_u + tolerance`.
    pub holds: bool,
    /// `j_u - j_ustar`.
    pub slack: T,
    pub admissibility: AdmissibilityReport,
    /// Absolute tolerance: `tol * (1 + |j_u|)`.
    pub tolerance: T,
    pub status: VerdictStatus,
}

impl<T: Scalar> InequalityVerdict<T> {
    fn new(j_u: T, j_ustar: T, tol: T, admissibility: AdmissibilityReport) -> Self {
        let tolerance = tol * (T::one() + j_u.abs());
        let holds = j_ustar <= j_u + tolerance;
        let status = match (holds, admissibility.all_pass()) {
            (true, _) => VerdictStatus::Holds,
            (false, true) => VerdictStatus::Fail,
            (false, false) => VerdictStatus::HypothesisNotMet,
        };
        Self { j_u, j_ustar, holds, slack: j_u - j_ustar, admissibility, tolerance, status }
    }
}

fn check_tol<T: Scalar>(tol: T) -> Result<()> {
    if tol >= T::zero() && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be finite and >= 0, got {tol}")))
    }
}

/// Compares J(u) with J(u*) and samples the admissibility of `j` on [0, M] × [0, max |∇|].
pub fn check_polya_szego<T: Scalar>(u: &GridFunction<T>, j: &Integrand<T>, tol: T) -> Result<InequalityVerdict<T>> {
    check_tol(tol)?;
    let ustar = schwarz_symmetrize(u)?;
    let (gu, gs) = (gradient(u), gradient(&ustar));
    let j_u = functional_with_gradient(u, &gu, j)?;
    let j_ustar = functional_with_gradient(&ustar, &gs, j)?;
    let t_max = gu.max_magnitude().max(gs.max_magnitude());
    let admissibility = check_admissibility(
        j,
        &uniform_samples(esssup(u), ADMISSIBILITY_SAMPLES),
        &uniform_samples(t_max, ADMISSIBILITY_SAMPLES),
    );
    Ok(InequalityVerdict::new(j_u, j_ustar, tol, admissibility))
}

/// Compares Σ_i ∫ |D_i u|^{p_i} for u and u*. Exponents above 1 are always admissible.
pub fn check_anisotropic<T: Scalar>(u: &GridFunction<T>, exponents: &[T], tol: T) -> Result<InequalityVerdict<T>> {
    check_tol(tol)?;
    let ustar = schwarz_symmetrize(u)?;
    let j_u = evaluate_anisotropic(u, exponents)?;
    let j_ustar = evaluate_anisotropic(&ustar, exponents)?;
    let admissibility = AdmissibilityReport { continuous_in_s: true, convex_in_t: true, nondecreasing_in_t: true };
    Ok(InequalityVerdict::new(j_u, j_ustar, tol, admissibility))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqualityStatus {
    /// |J(u) − J(u*)| exceeds the tolerance.
    NotEqualityCase,
    /// The critical set of u* inside 0 < u* < M has positive measure; no translation claimed.
    CriticalSetPositive,
    TranslationFound,
    /// The centroid offset did not reproduce u within tolerance.
    TranslationNotFound,
}

impl EqualityStatus {
    pub fn name(self) -> &'static str {
        match self {
            EqualityStatus::NotEqualityCase => "NOT_EQUALITY_CASE",
            EqualityStatus::CriticalSetPositive => "CRITICAL_SET_POSITIVE",
            EqualityStatus::TranslationFound => "TRANSLATION_FOUND",
            EqualityStatus::TranslationNotFound => "TRANSLATION_NOT_FOUND",
        }
    }
}

impl fmt::Display for EqualityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqualityCaseFinding<T> {
    pub status: EqualityStatus,
    pub j_u: T,
    pub j_ustar: T,
    /// ‖∇u‖_p and ‖∇u*‖_p agree within tolerance; `None` outside the equality case.
    pub norms_match: Option<bool>,
    pub critical_set_measure: T,
    /// Offset in whole cells, present only when the residual is within tolerance.
    pub translation_cells: Option<Vec<i64>>,
    /// The same offset in coordinates.
    pub translation: Option<Vec<T>>,
    /// ‖u − u*(· − x₀)‖_p for the candidate offset, when one could be tested.
    pub residual: Option<T>,
}

fn centroid_cells<T: Scalar>(u: &GridFunction<T>, level: T) -> Option<Vec<f64>> {
    let spec = u.spec();
    let mut sum = vec![0.0; spec.dim()];
    let mut count = 0usize;
    for (c, &v) in u.values().iter().enumerate() {
        if v > level {
            for (s, k) in sum.iter_mut().zip(spec.offsets(c)) {
                *s += k as f64;
            }
            count += 1;
        }
    }
    (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
}

/// Equality-case analysis for a strictly convex, coercive integrand.
///
/// `tol` is relative: quantities are compared against `tol * (1 + scale)`. The critical set
/// is always measured; a translation is sought only when its measure is at most `tol`.
pub fn analyze_equality_case<T: Scalar>(
    u: &GridFunction<T>,
    j: &Integrand<T>,
    p: T,
    tol: T,
) -> Result<EqualityCaseFinding<T>> {
    check_tol(tol)?;
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !j.strictly_convex_in_t() {
        return Err(Error::EqualityHypotheses("integrand is not certified strictly convex in t".into()));
    }
    if !j.coercivity().is_some_and(|nu| nu > T::zero()) {
        return Err(Error::EqualityHypotheses("integrand has no positive coercivity constant".into()));
    }

    let spec = u.spec();
    let ustar = schwarz_symmetrize(u)?;
    let (gu, gs) = (gradient(u), gradient(&ustar));
    let j_u = functional_with_gradient(u, &gu, j)?;
    let j_ustar = functional_with_gradient(&ustar, &gs, j)?;

    let m = esssup(u);
    let grad_eps = T::of(CRITICAL_GRADIENT_FACTOR) * m / spec.spacing();
    let critical = ustar
        .values()
        .iter()
        .zip(gs.magnitude())
        .filter(|&(&v, &g)| g <= grad_eps && v > T::zero() && v < m)
        .count();
    let critical_set_measure = T::of(critical as f64) * spec.cell_volume();

    let mut finding = EqualityCaseFinding {
        status: EqualityStatus::NotEqualityCase,
        j_u,
        j_ustar,
        norms_match: None,
        critical_set_measure,
        translation_cells: None,
        translation: None,
        residual: None,
    };
    if (j_u - j_ustar).abs() > tol * (T::one() + j_u.abs()) {
        return Ok(finding);
    }

    let vol = spec.cell_volume();
    let norm_u = lp_norm_values(gu.magnitude().iter().copied(), vol, p);
    let norm_s = lp_norm_values(gs.magnitude().iter().copied(), vol, p);
    finding.norms_match = Some((norm_u - norm_s).abs() <= tol * (T::one() + norm_u));

    if critical_set_measure > tol {
        finding.status = EqualityStatus::CriticalSetPositive;
        return Ok(finding);
    }

    let half = m * T::of(0.5);
    let shift: Vec<i64> = match (centroid_cells(u, half), centroid_cells(&ustar, half)) {
        (Some(a), Some(b)) => a.iter().zip(&b).map(|(x, y)| (x - y).round() as i64).collect(),
        _ => vec![0; spec.dim()],
    };
    finding.status = EqualityStatus::TranslationNotFound;
    // A candidate that pushes u*'s support out of the box cannot reproduce u.
    let Ok(moved) = ustar.shifted(&shift) else {
        return Ok(finding);
    };
    let residual = lp_distance(u, &moved, p);
    finding.residual = Some(residual);
    if residual <= tol * (T::one() + lp_norm(u, p)) {
        finding.status = EqualityStatus::TranslationFound;
        finding.translation = Some(shift.iter().map(|&k| T::of(k as f64) * spec.spacing()).collect());
        finding.translation_cells = Some(shift);
    }
    Ok(finding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::IntegrandTable;
    use crate::grid::GridSpec;

    fn radial(n: usize, h: f64, shift: [i64; 2]) -> GridFunction<f64> {
        let spec = GridSpec::new(vec![n, n], h).unwrap();
        let u = GridFunction::from_fn(spec, |x| {
            let r2 = (x[0] * x[0] + x[1] * x[1]) / (h * h);
            (1.0 - r2 / 16.0).max(0.0).powi(2)
        })
        .unwrap();
        u.shifted(&shift).unwrap()
    }

    fn two_bumps() -> GridFunction<f64> {
        let spec = GridSpec::new(vec![31, 31], 0.1).unwrap();
        GridFunction::from_fn(spec, |x| {
            let b = |cx: f64, cy: f64, r: f64, a: f64| {
                a * (1.0 - ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (r * r)).max(0.0).powi(3)
            };
            b(-0.6, -0.5, 0.6, 1.0) + b(0.7, 0.6, 0.5, 0.8)
        })
        .unwrap()
    }

    #[test]
    fn symmetric_input_has_zero_slack() {
        let u = radial(21, 0.2, [0, 0]);
        for j in [Integrand::PowerP { p: 2.0 }, Integrand::WeightedPower { alpha: 1.0, p: 3.0 }] {
            let v = check_polya_szego(&u, &j, 1e-9).unwrap();
            assert!(v.slack.abs() <= 1e-12, "{v:?}");
            assert_eq!(v.status, VerdictStatus::Holds);
            assert!(v.admissibility.all_pass());
        }
        assert!(check_anisotropic(&u, &[2.0, 2.0], 1e-9).unwrap().slack.abs() <= 1e-12);
    }

    #[test]
    fn two_bumps_hold_strictly_at_two_resolutions() {
        let u = two_bumps();
        let fine = {
            let spec = GridSpec::new(vec![61, 61], 0.05).unwrap();
            GridFunction::from_fn(spec, |x| {
                let b = |cx: f64, cy: f64, r: f64, a: f64| {
                    a * (1.0 - ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (r * r)).max(0.0).powi(3)
                };
                b(-0.6, -0.5, 0.6, 1.0) + b(0.7, 0.6, 0.5, 0.8)
            })
            .unwrap()
        };
        for f in [&u, &fine] {
            let v = check_polya_szego(f, &Integrand::PowerP { p: 2.0 }, 1e-9).unwrap();
            assert!(v.holds && v.slack > 0.0, "{v:?}");
            assert!(check_anisotropic(f, &[1.5, 3.0], 1e-9).unwrap().holds);
        }
    }

    #[test]
    fn decreasing_table_is_a_hypothesis_failure() {
        let u = two_bumps();
        let axis: Vec<f64> = (0..5).map(|k| k as f64 * 10.0).collect();
        let table = IntegrandTable::from_fn(axis.clone(), axis, |_, t| -t).unwrap();
        let v = check_polya_szego(&u, &Integrand::Table(table), 1e-9).unwrap();
        assert!(!v.admissibility.nondecreasing_in_t);
        assert!(!v.holds);
        assert_eq!(v.status, VerdictStatus::HypothesisNotMet);
    }

    #[test]
    fn shifted_bump_yields_its_translation() {
        let j = Integrand::PowerP { p: 2.0 };
        let centred = analyze_equality_case(&radial(21, 0.2, [0, 0]), &j, 2.0, 1e-9).unwrap();
        assert_eq!(centred.status, EqualityStatus::TranslationFound);
        assert_eq!(centred.translation_cells, Some(vec![0, 0]));
        assert_eq!(centred.residual, Some(0.0));
        assert_eq!(centred.norms_match, Some(true));

        let moved = analyze_equality_case(&radial(21, 0.2, [3, 0]), &j, 2.0, 1e-9).unwrap();
        assert_eq!(moved.status, EqualityStatus::TranslationFound);
        assert_eq!(moved.translation_cells, Some(vec![3, 0]));
        assert!(moved.residual.unwrap() <= 1e-10);
        let x0 = moved.translation.unwrap();
        assert!((x0[0] - 0.6).abs() < 1e-12 && x0[1] == 0.0);
    }

    #[test]
    fn plateau_reports_critical_set() {
        let spec = GridSpec::new(vec![21, 21], 0.1).unwrap();
        let u = GridFunction::from_fn(spec, |x: &[f64]| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r < 0.2 {
                1.0 - r
            } else if r < 0.5 {
                0.8
            } else {
                (0.8 * (0.8 - r) / 0.3).max(0.0)
            }
        })
        .unwrap();
        let f = analyze_equality_case(&u, &Integrand::PowerP { p: 2.0 }, 2.0, 1e-9).unwrap();
        assert_eq!(f.status, EqualityStatus::CriticalSetPositive);
        assert!(f.critical_set_measure > 0.0);
        assert_eq!(f.translation, None);
    }

    #[test]
    fn non_equality_and_bad_hypotheses() {
        let f = analyze_equality_case(&two_bumps(), &Integrand::PowerP { p: 2.0 }, 2.0, 1e-9).unwrap();
        assert_eq!(f.status, EqualityStatus::NotEqualityCase);
        assert_eq!(f.norms_match, None);
        let u = radial(21, 0.2, [0, 0]);
        assert!(matches!(
            analyze_equality_case(&u, &Integrand::PowerP { p: 1.0 }, 1.0, 1e-9),
            Err(Error::EqualityHypotheses(_))
        ));
    }
}
