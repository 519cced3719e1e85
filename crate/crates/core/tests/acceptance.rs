//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//!
//! Positional arguments filter criteria by number, e.g. `cargo test --test acceptance -- 2 7`.

use std::process::ExitCode;
use std::time::Instant;

use polarsym::{
    analyze_equality_case, check_anisotropic, check_polya_szego, evaluate_functional,
    generate_schedule, generate_test_function, gradient, lp_norm, lp_norm_values, polarize,
    run_iteration, schwarz_symmetrize, shuffled_exact_family, value_multiset, verify_report,
    EqualityStatus, FunctionKind, GeneratorParams, GridFunction, GridSpec, HalfSpace, Integrand,
    IntegrandTable, IterationConfig, PolarizationMode, ScheduleFamily, StepTolerances, TerminalStatus,
    VerdictStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative tolerance of the inequality checks: J(u*) <= J(u) + TOL·(1 + |J(u)|).
const INEQUALITY_TOL: f64 = 1e-9;
const DRIFT_MAX: f64 = 0.05;
const DRIFT_REFINEMENT_RATIO: f64 = 0.6;
const CONVERGENCE_REL: f64 = 1e-3;
const CONVERGENCE_SWEEPS: usize = 200;
const MONOTONE_SLACK: f64 = 1e-12;
const ORACLE_SWEEPS: usize = 50;
const EQUALITY_RESIDUAL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn grid_2d(n: usize, h: f64) -> GridSpec<f64> {
    GridSpec::new(vec![n, n], h).unwrap()
}

fn ps_integrands() -> Vec<(&'static str, Integrand<f64>)> {
    vec![
        ("power p=1.5", Integrand::PowerP { p: 1.5 }),
        ("power p=2", Integrand::PowerP { p: 2.0 }),
        ("power p=3", Integrand::PowerP { p: 3.0 }),
        ("weighted a=1 p=2", Integrand::WeightedPower { alpha: 1.0, p: 2.0 }),
        ("weighted a=2 p=3", Integrand::WeightedPower { alpha: 2.0, p: 3.0 }),
    ]
}

/// 20 multi-bump, 20 plateau and 20 indicator-union functions on 65² with h = 1/8.
fn inequality_corpus() -> Vec<(String, GridFunction<f64>)> {
    let spec = grid_2d(65, 0.125);
    let mut out = Vec::new();
    for (k, kind) in [FunctionKind::MultiBump, FunctionKind::Plateau, FunctionKind::IndicatorUnion]
        .into_iter()
        .enumerate()
    {
        for i in 0..20u64 {
            let seed = 1000 * (k as u64 + 1) + i;
            let params = GeneratorParams {
                components: (kind == FunctionKind::Plateau).then_some(1 + (i % 2) as usize),
                ..GeneratorParams::default()
            };
            let u = generate_test_function(kind, &params, &spec, seed).unwrap();
            out.push((format!("{}#{seed}", kind.name()), u));
        }
    }
    out
}

fn sorted_values(u: &GridFunction<f64>) -> Vec<u64> {
    let mut bits: Vec<u64> = u.values().iter().map(|v| v.to_bits()).collect();
    bits.sort_unstable();
    bits
}

fn criterion_1() -> Outcome {
    let specs = [GridSpec::new(vec![101], 0.05).unwrap(), grid_2d(65, 0.125)];
    let mut checked_steps = 0usize;
    let mut failures = Vec::new();
    for i in 0..500u64 {
        let spec = &specs[(i % 2) as usize];
        let kind = FunctionKind::ALL[(i / 2) as usize % FunctionKind::ALL.len()];
        let u = generate_test_function(kind, &GeneratorParams::default(), spec, i).unwrap();
        let reference = value_multiset(&u);
        let bits = sorted_values(&u);
        if value_multiset(&schwarz_symmetrize(&u).unwrap()) != reference {
            failures.push(format!("symmetrize #{i}"));
        }
        let schedule = generate_schedule(spec, 25, i, ScheduleFamily::Exact).unwrap();
        let mut v = u.clone();
        for entry in schedule.entries() {
            v = polarize(&v, &entry.halfspace, &entry.certificate).unwrap();
            checked_steps += 1;
            if sorted_values(&v) != bits {
                failures.push(format!("polarize #{i}"));
                break;
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("500 functions, {checked_steps} exact steps, mismatches: {:?}", failures),
    )
}

fn criterion_2() -> Outcome {
    let corpus = inequality_corpus();
    let mut held = 0;
    let mut total = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (name, u) in &corpus {
        for (jn, j) in ps_integrands() {
            let v = check_polya_szego(u, &j, INEQUALITY_TOL).unwrap();
            total += 1;
            worst = worst.min(v.slack / (1.0 + v.j_u.abs()));
            if v.holds {
                held += 1;
            } else {
                failures.push(format!("{name}/{jn}"));
            }
        }
    }
    Outcome::new(
        held == total && total == 300,
        format!("{held}/{total} hold, min relative slack {worst:e}, failing {failures:?}"),
    )
}

fn criterion_3() -> Outcome {
    let corpus = inequality_corpus();
    let mut held = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for (name, u) in &corpus {
        for exps in [[2.0, 2.0], [1.5, 3.0]] {
            let v = check_anisotropic(u, &exps, INEQUALITY_TOL).unwrap();
            total += 1;
            if v.holds {
                held += 1;
            } else {
                failures.push(format!("{name}/{exps:?}"));
            }
        }
    }
    Outcome::new(held == total, format!("{held}/{total} hold, failing {failures:?}"))
}

/// A smooth two-bump function on the box [-4, 4]², sampled at spacing h, with one exact
/// half-space {x₁ ≤ d}.
struct SmoothCase {
    centre: [f64; 2],
    axes: [f64; 2],
    angle: f64,
    d: f64,
}

impl SmoothCase {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            centre: [rng.random_range(0.2..0.6), rng.random_range(-0.4..0.4)],
            axes: [rng.random_range(1.6..2.3), rng.random_range(1.0..1.5)],
            angle: rng.random_range(0.0..std::f64::consts::PI),
            d: 0.25 * rng.random_range(0..3) as f64,
        }
    }

    fn sample(&self, n: usize, h: f64) -> (GridFunction<f64>, GridFunction<f64>) {
        let bump = |x: &[f64], c: [f64; 2], a: f64, b: f64, th: f64, amp: f64| {
            let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
            let y1 = dx * th.cos() + dy * th.sin();
            let y2 = -dx * th.sin() + dy * th.cos();
            amp * (1.0 - (y1 / a).powi(2) - (y2 / b).powi(2)).max(0.0).powi(3)
        };
        let [cx, cy] = self.centre;
        let [a, b] = self.axes;
        let u = GridFunction::from_fn(grid_2d(n, h), |x| {
            bump(x, [cx, cy], a, b, self.angle, 1.0) + bump(x, [-cx - 0.3, cy + 0.4], b, a, self.angle + 1.0, 0.7)
        })
        .unwrap();
        let hs = HalfSpace::axis(2, 0, 1, self.d).unwrap();
        let cert = polarsym::is_grid_compatible(&hs, u.spec());
        assert_eq!(cert.mode(), PolarizationMode::Exact);
        let w = polarize(&u, &hs, &cert).unwrap();
        (u, w)
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn component_norm_drift(u: &GridFunction<f64>, w: &GridFunction<f64>) -> f64 {
    let (gu, gw) = (gradient(u), gradient(w));
    let vol = u.spec().cell_volume();
    (0..2)
        .map(|i| {
            let a = lp_norm_values(gw.component(i).iter().map(|v| v.abs()), vol, 2.0);
            let b = lp_norm_values(gu.component(i).iter().map(|v| v.abs()), vol, 2.0);
            relative(a, b)
        })
        .fold(0.0, f64::max)
}

/// Applies `measure` to 20 smooth cases at h = 1/8 and h = 1/16. The corpus drift is the
/// largest drift over the cases; it must stay below `DRIFT_MAX` at h and shrink by
/// `DRIFT_REFINEMENT_RATIO` at h/2. Per-case ratios are reported alongside.
fn refinement_study(measure: impl Fn(&GridFunction<f64>, &GridFunction<f64>) -> f64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut coarse_max, mut fine_max): (f64, f64) = (0.0, 0.0);
    let mut worst_case_ratio: f64 = 0.0;
    let mut above = 0;
    for _ in 0..20 {
        let sc = SmoothCase::draw(&mut rng);
        let (u, w) = sc.sample(65, 0.125);
        let coarse = measure(&u, &w);
        let (u, w) = sc.sample(129, 0.0625);
        let fine = measure(&u, &w);
        coarse_max = coarse_max.max(coarse);
        fine_max = fine_max.max(fine);
        // Cases where H barely moves u carry no signal about the refinement rate.
        if coarse > 1e-6 {
            let ratio = fine / coarse;
            worst_case_ratio = worst_case_ratio.max(ratio);
            above += usize::from(ratio > DRIFT_REFINEMENT_RATIO);
        }
    }
    let ratio = fine_max / coarse_max;
    (
        coarse_max <= DRIFT_MAX && ratio <= DRIFT_REFINEMENT_RATIO,
        format!(
            "drift {coarse_max:.3e} at h, {fine_max:.3e} at h/2, ratio {ratio:.3} \
             (per-case max {worst_case_ratio:.3}, {above} cases above {DRIFT_REFINEMENT_RATIO})"
        ),
    )
}

fn criterion_4() -> Outcome {
    let (pass, detail) = refinement_study(component_norm_drift);
    Outcome::new(pass, format!("‖D_i u‖_2 over 20 bumps: {detail}"))
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, j) in [
        ("power p=2", Integrand::PowerP { p: 2.0 }),
        ("weighted a=1 p=2", Integrand::WeightedPower { alpha: 1.0, p: 2.0 }),
    ] {
        let (ok, detail) = refinement_study(|u, w| {
            relative(evaluate_functional(w, &j).unwrap(), evaluate_functional(u, &j).unwrap())
        });
        pass &= ok;
        details.push(format!("{name}: {detail}"));
    }
    Outcome::new(pass, details.join("; "))
}

fn criterion_6() -> Outcome {
    let spec = grid_2d(65, 0.125);
    let mut pass = true;
    let mut details = Vec::new();
    for seed in 0..4u64 {
        let u0 = generate_test_function(FunctionKind::MultiBump, &GeneratorParams::default(), &spec, 600 + seed)
            .unwrap();
        let schedule = shuffled_exact_family(&spec, seed).unwrap();
        let k = schedule.len();
        let norm0 = lp_norm(&u0, 2.0);
        let config = IterationConfig::new(2.0, CONVERGENCE_SWEEPS * k).with_eps(CONVERGENCE_REL * norm0);
        let (_, report) = run_iteration(&u0, &schedule, &config).unwrap();
        let tol = StepTolerances { grad_rel: f64::INFINITY, dist_slack: MONOTONE_SLACK };
        let monotone = verify_report(&report, &tol).is_empty();
        let rel = report.last().lp_dist_ustar / norm0;
        let converged = report.status == TerminalStatus::Converged && rel <= CONVERGENCE_REL;
        pass &= monotone && converged;
        details.push(format!(
            "seed {}: {} after {} sweeps, rel dist {rel:.3e}, monotone {monotone}",
            600 + seed,
            report.status,
            (report.records.len() - 1).div_ceil(k),
        ));
    }
    Outcome::new(pass, details.join("; "))
}

/// Independent placement: values sorted in decreasing order go to cells sorted by |offset|,
/// the lower index first.
fn oracle_1d(values: &[f64]) -> Vec<f64> {
    let c = (values.len() / 2) as i64;
    let mut cells: Vec<usize> = (0..values.len()).collect();
    cells.sort_by_key(|&i| ((i as i64 - c).abs(), i));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out = vec![0.0; values.len()];
    for (cell, v) in cells.into_iter().zip(sorted) {
        out[cell] = v;
    }
    out
}

fn criterion_7() -> Outcome {
    let spec = GridSpec::new(vec![7], 1.0).unwrap();
    let family = shuffled_exact_family(&spec, 7).unwrap();
    let k = family.len();
    let mut worst_sweeps = 0;
    let mut mismatches = 0;
    let mut count = 0;
    for code in 0..4usize.pow(5) {
        let mut values = vec![0.0; 7];
        for (i, v) in values[1..6].iter_mut().enumerate() {
            *v = ((code / 4usize.pow(i as u32)) % 4) as f64;
        }
        let u0 = GridFunction::new(spec.clone(), values.clone()).unwrap();
        let target = oracle_1d(&values);
        let (u, report) = run_iteration(&u0, &family, &IterationConfig::new(2.0, ORACLE_SWEEPS * k)).unwrap();
        count += 1;
        let sweeps = (report.records.len() - 1).div_ceil(k);
        worst_sweeps = worst_sweeps.max(sweeps);
        let same = u.values().iter().zip(&target).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same || report.status == TerminalStatus::MaxSteps {
            mismatches += 1;
        }
    }
    Outcome::new(
        mismatches == 0 && count == 1024,
        format!("{count} functions, {k} half-spaces, worst {worst_sweeps} sweeps, {mismatches} mismatches"),
    )
}

fn criterion_8() -> Outcome {
    let spec = grid_2d(65, 0.125);
    let j = Integrand::PowerP { p: 2.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut recovered = 0;
    let mut worst_residual: f64 = 0.0;
    for seed in 0..20u64 {
        let shift = vec![rng.random_range(-4..=4i64), rng.random_range(-4..=4i64)];
        let params = GeneratorParams { shift: Some(shift.clone()), ..GeneratorParams::default() };
        let u = generate_test_function(FunctionKind::RadialTranslate, &params, &spec, 800 + seed).unwrap();
        let f = analyze_equality_case(&u, &j, 2.0, INEQUALITY_TOL).unwrap();
        let residual = f.residual.unwrap_or(f64::INFINITY);
        worst_residual = worst_residual.max(residual);
        if f.status == EqualityStatus::TranslationFound
            && f.translation_cells.as_deref() == Some(&shift[..])
            && residual <= EQUALITY_RESIDUAL
        {
            recovered += 1;
        }
    }
    let mut plateaus_ok = 0;
    for seed in 0..10u64 {
        let u = generate_test_function(FunctionKind::Plateau, &GeneratorParams::default(), &spec, 850 + seed)
            .unwrap();
        let f = analyze_equality_case(&u, &j, 2.0, INEQUALITY_TOL).unwrap();
        if f.critical_set_measure > 0.0 && f.translation.is_none() {
            plateaus_ok += 1;
        }
    }
    Outcome::new(
        recovered == 20 && plateaus_ok == 10,
        format!("translations recovered {recovered}/20 (max residual {worst_residual:e}), plateaus flagged {plateaus_ok}/10"),
    )
}

fn criterion_9() -> Outcome {
    let corpus = inequality_corpus();
    let axis: Vec<f64> = (0..=8).map(|k| k as f64).collect();
    let table = IntegrandTable::from_fn(axis.clone(), axis, |_, t| -t).unwrap();
    let j = Integrand::Table(table);
    let mut violated = 0;
    let mut fails = 0;
    let mut not_met = 0;
    for (_, u) in &corpus {
        let v = check_polya_szego(u, &j, INEQUALITY_TOL).unwrap();
        violated += usize::from(!v.holds);
        fails += usize::from(v.status == VerdictStatus::Fail);
        not_met += usize::from(v.status == VerdictStatus::HypothesisNotMet);
    }
    Outcome::new(
        violated > 0 && fails == 0,
        format!("{} functions: {violated} raw violations, {not_met} HYPOTHESIS_NOT_MET, {fails} FAIL", corpus.len()),
    )
}

fn csv_run(seed: u64) -> Vec<u8> {
    let spec = grid_2d(33, 0.25);
    let u0 = generate_test_function(FunctionKind::MultiBump, &GeneratorParams::default(), &spec, seed).unwrap();
    let schedule = generate_schedule(&spec, 64, seed, ScheduleFamily::Mixed).unwrap();
    let config = IterationConfig::new(2.0, 256).with_integrand(Integrand::WeightedPower { alpha: 1.0, p: 2.0 });
    let (_, report) = run_iteration(&u0, &schedule, &config).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    buf
}

fn criterion_10() -> Outcome {
    let (a, b) = (csv_run(10), csv_run(10));
    let other = csv_run(11);
    Outcome::new(
        a == b && a != other,
        format!("{} CSV bytes, identical {}, differs for another seed {}", a.len(), a == b, a != other),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "equimeasurability", criterion_1),
        (2, "Polya-Szego inequality", criterion_2),
        (3, "anisotropic inequality", criterion_3),
        (4, "gradient-norm preservation", criterion_4),
        (5, "functional invariance", criterion_5),
        (6, "convergence of iterated polarization", criterion_6),
        (7, "1D exhaustive oracle", criterion_7),
        (8, "equality case", criterion_8),
        (9, "hypothesis separation", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let filters: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filters.is_empty() && !filters.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!(
            "criterion {id:>2} {verdict} {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
