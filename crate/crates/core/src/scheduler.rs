//! Iterated polarization: apply a schedule of half-spaces repeatedly and record how the
//! iterates approach the symmetrized function.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::functional::{functional_with_gradient, gradient, Integrand};
use crate::grid::{descending, lp_distance, lp_norm, lp_norm_values, GridFunction, GridSpec};
use crate::polarize::{is_grid_compatible, polarize, CompatibilityCertificate, HalfSpace, PolarizationMode};
use crate::rearrange::schwarz_symmetrize;
use crate::scalar::Scalar;

/// How a schedule (H_1, …, H_K) is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Step n applies H_1, …, H_min(n,K) in order.
    Triangular,
    /// Step n applies the single half-space H_{((n-1) mod K) + 1}; K steps form a sweep.
    #[default]
    Cyclic,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" => Ok(Strategy::Cyclic),
            "triangular" => Ok(Strategy::Triangular),
            _ => Err(Error::InvalidParameter(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledHalfSpace<T> {
    pub halfspace: HalfSpace<T>,
    pub certificate: CompatibilityCertificate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationSchedule<T> {
    entries: Vec<ScheduledHalfSpace<T>>,
    strategy: Strategy,
}

impl<T: Scalar> PolarizationSchedule<T> {
    /// Computes a certificate for every half-space on `spec`.
    pub fn new(spec: &GridSpec<T>, halfspaces: Vec<HalfSpace<T>>, strategy: Strategy) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one half-space".into()));
        }
        if let Some(hs) = halfspaces.iter().find(|hs| hs.dim() != spec.dim()) {
            return Err(Error::InvalidHalfSpace(format!(
                "{}-dimensional half-space on a {}-dimensional grid",
                hs.dim(),
                spec.dim()
            )));
        }
        let entries = halfspaces
            .into_iter()
            .map(|halfspace| {
                let certificate = is_grid_compatible(&halfspace, spec);
                ScheduledHalfSpace { halfspace, certificate }
            })
            .collect();
        Ok(Self { entries, strategy })
    }

    pub fn entries(&self) -> &[ScheduledHalfSpace<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    /// `Exact` when every entry is exact.
    pub fn mode(&self) -> PolarizationMode {
        if self.entries.iter().all(|e| e.certificate.mode() == PolarizationMode::Exact) {
            PolarizationMode::Exact
        } else {
            PolarizationMode::Interp
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalStatus {
    /// ‖u_n − u*‖_p < eps at the end of a sweep.
    Converged,
    MaxSteps,
    /// A full sweep changed the iterate by less than eps at every step.
    FixedPoint,
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalStatus::Converged => "CONVERGED",
            TerminalStatus::MaxSteps => "MAX_STEPS",
            TerminalStatus::FixedPoint => "FIXED_POINT",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<T> {
    pub n: usize,
    pub lp_dist_ustar: T,
    pub functional: Option<T>,
    /// ‖|∇u_n|‖_p.
    pub grad_lp: T,
    /// ‖u_n − u_{n-1}‖_p (0 for the initial record).
    pub sweep_change: T,
    /// Value multiset of u_n equals that of u_0 bit for bit.
    pub multiset_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    pub records: Vec<StepRecord<T>>,
    pub status: TerminalStatus,
    pub mode: PolarizationMode,
    pub p: T,
    pub eps: T,
}

pub const CSV_HEADER: &str = "n,lp_dist_ustar,J,grad_lp,sweep_change,multiset_ok";

impl<T: Scalar> ConvergenceReport<T> {
    pub fn last(&self) -> &StepRecord<T> {
        self.records.last().expect("report holds the initial record")
    }

    /// One row per step; numbers in shortest round-trip scientific notation.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            let j = r.functional.map_or_else(|| "nan".to_string(), |j| format!("{j:e}"));
            writeln!(
                out,
                "{},{:e},{},{:e},{:e},{}",
                r.n, r.lp_dist_ustar, j, r.grad_lp, r.sweep_change, r.multiset_ok
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IterationConfig<T> {
    pub p: T,
    pub integrand: Option<Integrand<T>>,
    pub max_steps: usize,
    /// Defaults to 1e-10·‖u_0‖_p.
    pub eps: Option<T>,
}

impl<T: Scalar> IterationConfig<T> {
    pub fn new(p: T, max_steps: usize) -> Self {
        Self { p, integrand: None, max_steps, eps: None }
    }

    pub fn with_integrand(mut self, j: Integrand<T>) -> Self {
        self.integrand = Some(j);
        self
    }

    pub fn with_eps(mut self, eps: T) -> Self {
        self.eps = Some(eps);
        self
    }
}

struct Monitor<'a, T> {
    target: GridFunction<T>,
    sorted0: Vec<T>,
    config: &'a IterationConfig<T>,
}

impl<T: Scalar> Monitor<'_, T> {
    fn record(&self, n: usize, u: &GridFunction<T>, change: T) -> Result<StepRecord<T>> {
        let p = self.config.p;
        let grad = gradient(u);
        let functional = match &self.config.integrand {
            Some(j) => Some(functional_with_gradient(u, &grad, j)?),
            None => None,
        };
        let mut sorted = u.values().to_vec();
        sorted.sort_unstable_by(descending);
        Ok(StepRecord {
            n,
            lp_dist_ustar: lp_distance(u, &self.target, p),
            functional,
            grad_lp: lp_norm_values(grad.magnitude().iter().copied(), u.spec().cell_volume(), p),
            sweep_change: change,
            multiset_ok: sorted == self.sorted0,
        })
    }
}

fn apply<T: Scalar>(u: &GridFunction<T>, entry: &ScheduledHalfSpace<T>) -> Result<GridFunction<T>> {
    polarize(u, &entry.halfspace, &entry.certificate)
}

/// Runs the polarization iteration from `u0`.
///
/// Termination is checked whenever a full sweep has been applied (every K steps for
/// `Cyclic`, every step from n = K on for `Triangular`): first `FixedPoint` if no step of
/// the sweep moved the iterate by `eps` or more, then `Converged` if ‖u_n − u*‖_p < eps.
/// Otherwise the run stops with `MaxSteps` after `max_steps` steps.
pub fn run_iteration<T: Scalar>(
    u0: &GridFunction<T>,
    schedule: &PolarizationSchedule<T>,
    config: &IterationConfig<T>,
) -> Result<(GridFunction<T>, ConvergenceReport<T>)> {
    if config.p.is_nan() || config.p < T::one() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {}", config.p)));
    }
    let eps = config
        .eps
        .unwrap_or_else(|| T::of(1e-10) * lp_norm(u0, config.p))
        .max(T::min_positive_value());
    let mut sorted0 = u0.values().to_vec();
    sorted0.sort_unstable_by(descending);
    let monitor = Monitor { target: schwarz_symmetrize(u0)?, sorted0, config };

    let k = schedule.len();
    let mut records = vec![monitor.record(0, u0, T::zero())?];
    let mut u = u0.clone();
    let mut sweep_max_change = T::zero();
    let mut status = TerminalStatus::MaxSteps;
    for n in 1..=config.max_steps {
        let next = match schedule.strategy() {
            Strategy::Cyclic => apply(&u, &schedule.entries()[(n - 1) % k])?,
            Strategy::Triangular => {
                let mut v = u.clone();
                for entry in &schedule.entries()[..n.min(k)] {
                    v = apply(&v, entry)?;
                }
                v
            }
        };
        let change = lp_distance(&next, &u, config.p);
        u = next;
        let record = monitor.record(n, &u, change)?;
        let dist = record.lp_dist_ustar;
        records.push(record);

        let sweep_done = match schedule.strategy() {
            Strategy::Cyclic => {
                sweep_max_change = sweep_max_change.max(change);
                n % k == 0
            }
            Strategy::Triangular => {
                sweep_max_change = change;
                n >= k
            }
        };
        if sweep_done {
            if sweep_max_change < eps {
                status = TerminalStatus::FixedPoint;
                break;
            }
            if dist < eps {
                status = TerminalStatus::Converged;
                break;
            }
            sweep_max_change = T::zero();
        }
    }
    let report = ConvergenceReport { records, status, mode: schedule.mode(), p: config.p, eps };
    Ok((u, report))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTolerances<T> {
    /// Allowed relative change of ‖∇u_n‖_p between consecutive records.
    pub grad_rel: T,
    /// Allowed increase of ‖u_n − u*‖_p between consecutive records.
    pub dist_slack: T,
}

impl<T: Scalar> StepTolerances<T> {
    /// Tolerances for exact runs: distance growth up to 1e-12.
    pub fn exact() -> Self {
        Self { grad_rel: T::of(0.05), dist_slack: T::of(1e-12) }
    }

    /// Tolerances for a run from a function with ‖u_0‖_p = `norm0` on `spec`. Interpolated
    /// steps may move the iterate away from u* by up to
    /// `INTERP_SLACK_FACTOR · ‖u_0‖_p · (h / L)²`, with L the smallest half-width of the box.
    pub fn for_run(mode: PolarizationMode, spec: &GridSpec<T>, norm0: T) -> Self {
        match mode {
            PolarizationMode::Exact => Self::exact(),
            PolarizationMode::Interp => {
                let half = (0..spec.dim()).map(|a| spec.half_width(a)).fold(T::infinity(), T::min);
                let ratio = spec.spacing() / half;
                Self { dist_slack: T::of(INTERP_SLACK_FACTOR) * norm0 * ratio * ratio, ..Self::exact() }
            }
        }
    }
}

/// Measured worst case on multi-bump corpora up to 129² is about 1.4 (at h/L = 1/16).
pub const INTERP_SLACK_FACTOR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub enum StepViolation {
    MultisetChanged { n: usize },
    GradientDrift { n: usize, relative: f64 },
    DistanceIncreased { n: usize, increase: f64 },
}

/// Checks one transition of a report. The multiset check applies to exact runs only.
pub fn verify_step_invariants<T: Scalar>(
    prev: &StepRecord<T>,
    next: &StepRecord<T>,
    mode: PolarizationMode,
    tol: &StepTolerances<T>,
) -> Vec<StepViolation> {
    let mut out = Vec::new();
    if mode == PolarizationMode::Exact && !next.multiset_ok {
        out.push(StepViolation::MultisetChanged { n: next.n });
    }
    let scale = prev.grad_lp.abs().max(T::min_positive_value());
    let relative = (next.grad_lp - prev.grad_lp).abs() / scale;
    if relative > tol.grad_rel {
        out.push(StepViolation::GradientDrift { n: next.n, relative: relative.as_f64() });
    }
    let increase = next.lp_dist_ustar - prev.lp_dist_ustar;
    if increase > tol.dist_slack {
        out.push(StepViolation::DistanceIncreased { n: next.n, increase: increase.as_f64() });
    }
    out
}

/// Runs [`verify_step_invariants`] over every consecutive pair of records.
pub fn verify_report<T: Scalar>(report: &ConvergenceReport<T>, tol: &StepTolerances<T>) -> Vec<StepViolation> {
    report
        .records
        .windows(2)
        .flat_map(|w| verify_step_invariants(&w[0], &w[1], report.mode, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarize::{exact_family, shuffled_exact_family};

    fn line(values: &[f64]) -> GridFunction<f64> {
        GridFunction::new(GridSpec::new(vec![values.len()], 1.0).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_input_is_a_fixed_point_after_one_sweep() {
        let u = line(&[0.0, 0.0, 2.0, 3.0, 1.0, 0.0, 0.0]);
        let schedule = shuffled_exact_family(u.spec(), 4).unwrap();
        let (out, report) = run_iteration(&u, &schedule, &IterationConfig::new(2.0, 1000)).unwrap();
        assert_eq!(report.status, TerminalStatus::FixedPoint);
        assert_eq!(report.records.len(), schedule.len() + 1);
        assert_eq!(out, u);
    }

    #[test]
    fn off_centre_mass_reaches_symmetrization() {
        let u = line(&[0.0, 1.0, 3.0, 2.0, 0.0, 0.0, 0.0]);
        let target = schwarz_symmetrize(&u).unwrap();
        for strategy in [Strategy::Cyclic, Strategy::Triangular] {
            let schedule = shuffled_exact_family(u.spec(), 1).unwrap().with_strategy(strategy);
            let (out, report) = run_iteration(&u, &schedule, &IterationConfig::new(2.0, 500)).unwrap();
            assert_eq!(out, target, "{strategy:?}");
            assert_ne!(report.status, TerminalStatus::MaxSteps);
            assert!(verify_report(&report, &StepTolerances { grad_rel: 10.0, dist_slack: 1e-12 }).is_empty());
        }
    }

    #[test]
    fn triangular_steps_apply_growing_prefixes() {
        let spec = GridSpec::new(vec![9], 1.0).unwrap();
        let u = GridFunction::new(spec.clone(), vec![0.0, 4.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0]).unwrap();
        let schedule = PolarizationSchedule::new(&spec, exact_family(&spec)[..3].to_vec(), Strategy::Triangular).unwrap();
        let (_, report) = run_iteration(&u, &schedule, &IterationConfig::new(2.0, 2)).unwrap();
        let mut manual = u.clone();
        let e = schedule.entries();
        manual = apply(&manual, &e[0]).unwrap();
        let step1 = manual.clone();
        manual = apply(&apply(&manual, &e[0]).unwrap(), &e[1]).unwrap();
        let target = schwarz_symmetrize(&u).unwrap();
        assert_eq!(report.records[1].lp_dist_ustar, lp_distance(&step1, &target, 2.0));
        assert_eq!(report.records[2].lp_dist_ustar, lp_distance(&manual, &target, 2.0));
        assert_eq!(report.status, TerminalStatus::MaxSteps);
    }

    #[test]
    fn step_checks_flag_injected_faults() {
        let good = StepRecord { n: 0, lp_dist_ustar: 1.0, functional: None, grad_lp: 2.0, sweep_change: 0.0, multiset_ok: true };
        let tol = StepTolerances::exact();
        let mut next = StepRecord { n: 1, lp_dist_ustar: 0.9, ..good.clone() };
        assert!(verify_step_invariants(&good, &next, PolarizationMode::Exact, &tol).is_empty());
        next.multiset_ok = false;
        assert_eq!(
            verify_step_invariants(&good, &next, PolarizationMode::Exact, &tol),
            vec![StepViolation::MultisetChanged { n: 1 }]
        );
        let spec = GridSpec::new(vec![33, 33], 0.25).unwrap();
        let interp_tol = StepTolerances::for_run(PolarizationMode::Interp, &spec, 1.0);
        assert_eq!(interp_tol.dist_slack, 2.0 / 256.0);
        assert!(verify_step_invariants(&good, &next, PolarizationMode::Interp, &interp_tol).is_empty());
        next.lp_dist_ustar = 1.0 + 1e-3;
        assert!(verify_step_invariants(&good, &next, PolarizationMode::Interp, &interp_tol).is_empty());
        assert_eq!(verify_step_invariants(&good, &next, PolarizationMode::Exact, &tol).len(), 2);
        next.grad_lp = 3.0;
        assert!(verify_step_invariants(&good, &next, PolarizationMode::Interp, &interp_tol)
            .contains(&StepViolation::GradientDrift { n: 1, relative: 0.5 }));
    }

    #[test]
    fn csv_layout() {
        let u = line(&[0.0, 1.0, 3.0, 2.0, 0.0, 0.0, 0.0]);
        let schedule = shuffled_exact_family(u.spec(), 2).unwrap();
        let config = IterationConfig::new(2.0, 3).with_integrand(Integrand::PowerP { p: 2.0 });
        let (_, report) = run_iteration(&u, &schedule, &config).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,"));
        assert_eq!(lines[1].split(',').count(), 6);
        assert!(lines[1].ends_with(",true"));
    }

    #[test]
    fn strategy_names() {
        assert_eq!("cyclic".parse::<Strategy>().unwrap(), Strategy::Cyclic);
        assert_eq!("triangular".parse::<Strategy>().unwrap(), Strategy::Triangular);
        assert!("random".parse::<Strategy>().is_err());
    }
}
