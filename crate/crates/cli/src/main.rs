use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polarsym::{
    analyze_equality_case, check_anisotropic, check_polya_szego, generate_schedule, generate_test_function,
    lp_norm, read_grid_function, read_schedule, run_iteration, schwarz_symmetrize, shuffled_exact_family,
    verify_report, write_grid_function, write_schedule, FunctionKind, GeneratorParams, GridFunctionF64,
    GridSpecF64, IntegrandF64, InequalityVerdict, IterationConfig, PolarizationScheduleF64, ScheduleFamily,
    StepTolerances, Strategy, VerdictStatus,
};

#[derive(Parser)]
#[command(name = "polarsym", version, about = "Symmetrization and polarization of grid functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded test function.
    Generate(GenerateArgs),
    /// Write the Schwarz symmetrization of a function.
    Symmetrize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterate polarizations and write a per-step CSV report.
    PolarizeRun(RunArgs),
    /// Check inequalities and the equality case.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: FunctionKind,
    /// `d,n1,...,nd,h`, e.g. `2,65,65,0.125`.
    #[arg(long, value_parser = parse_spec)]
    spec: GridSpecF64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Zero cells kept between the support and the boundary layer.
    #[arg(long, default_value_t = 2)]
    padding: usize,
    #[arg(long)]
    components: Option<usize>,
    /// Whole-cell translation, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    shift: Option<Vec<i64>>,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Exact,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Cyclic,
    Triangular,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `auto` or a schedule file (`a1 ... ad d MODE` per line).
    #[arg(long, default_value = "auto")]
    schedule: String,
    #[arg(long, value_enum, default_value_t = FamilyArg::Exact)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Cyclic)]
    strategy: StrategyArg,
    /// Seed of the automatic schedule.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Length of the automatic schedule. Without it an exact schedule is the whole exact
    /// family in seeded order, and a mixed one has as many entries.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    steps: usize,
    /// Stopping threshold; defaults to 1e-10·‖u0‖_p.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// `power:p=P`, `weighted:alpha=A,p=P` or `table:PATH`.
    #[arg(long, value_parser = parse_integrand)]
    integrand: Option<IntegrandF64>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the schedule that was used.
    #[arg(long)]
    write_schedule: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// J(u*) <= J(u). Exit code 0 holds, 2 fails, 3 hypothesis not met.
    Ps {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_integrand)]
        integrand: IntegrandF64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Sum of per-axis |D_i u|^{p_i} integrals. Exit code 0 holds, 2 fails.
    Aniso {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        exponents: Vec<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Equality-case analysis: critical set and translation.
    Equality {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_integrand)]
        integrand: IntegrandF64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn parse_kind(s: &str) -> Result<FunctionKind, String> {
    s.parse().map_err(|e: polarsym::Error| e.to_string())
}

fn parse_integrand(s: &str) -> Result<IntegrandF64, String> {
    IntegrandF64::parse(s).map_err(|e| e.to_string())
}

fn parse_spec(s: &str) -> Result<GridSpecF64, String> {
    let fields: Vec<&str> = s.split(',').map(str::trim).collect();
    let dim: usize = fields[0].parse().map_err(|e| format!("dimension `{}`: {e}", fields[0]))?;
    if fields.len() != dim + 2 {
        return Err(format!("expected d,n1..nd,h with {} fields, got {}", dim + 2, fields.len()));
    }
    let shape = fields[1..=dim]
        .iter()
        .map(|n| n.parse::<usize>().map_err(|e| format!("cell count `{n}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let h: f64 = fields[dim + 1].parse().map_err(|e| format!("spacing `{}`: {e}", fields[dim + 1]))?;
    GridSpecF64::new(shape, h).map_err(|e| e.to_string())
}

fn read_function(path: &Path) -> Result<GridFunctionF64> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_grid_function(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_function(u: &GridFunctionF64, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_grid_function(u, &mut out)?;
    out.flush()?;
    Ok(())
}

fn build_schedule(args: &RunArgs, spec: &GridSpecF64) -> Result<PolarizationScheduleF64> {
    let strategy = match args.strategy {
        StrategyArg::Cyclic => Strategy::Cyclic,
        StrategyArg::Triangular => Strategy::Triangular,
    };
    if args.schedule != "auto" {
        let path = Path::new(&args.schedule);
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return read_schedule(BufReader::new(file), spec, strategy)
            .with_context(|| format!("reading {}", path.display()));
    }
    let schedule = match (args.family, args.count) {
        (FamilyArg::Exact, None) => shuffled_exact_family(spec, args.seed)?,
        (FamilyArg::Exact, Some(k)) => generate_schedule(spec, k, args.seed, ScheduleFamily::Exact)?,
        (FamilyArg::Mixed, k) => {
            let k = k.unwrap_or_else(|| polarsym::exact_family(spec).len());
            generate_schedule(spec, k, args.seed, ScheduleFamily::Mixed)?
        }
    };
    Ok(schedule.with_strategy(strategy))
}

fn polarize_run(args: RunArgs) -> Result<ExitCode> {
    let u0 = read_function(&args.input)?;
    let schedule = build_schedule(&args, u0.spec())?;
    if let Some(path) = &args.write_schedule {
        let mut out = create(path)?;
        write_schedule(&schedule, &mut out)?;
        out.flush()?;
    }
    let mut config = IterationConfig::new(args.p, args.steps);
    config.integrand = args.integrand;
    config.eps = args.eps;
    let (u, report) = run_iteration(&u0, &schedule, &config)?;

    let mut out = create(&args.report)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    write_function(&u, &args.out)?;

    let tol = StepTolerances::for_run(report.mode, u0.spec(), lp_norm(&u0, args.p));
    let violations = verify_report(&report, &tol);
    for v in &violations {
        eprintln!("warning: {v:?}");
    }
    let last = report.last();
    println!("status={}", report.status);
    println!("mode={}", report.mode.name());
    println!("schedule_len={}", schedule.len());
    println!("steps={}", last.n);
    println!("eps={:e}", report.eps);
    println!("lp_dist_ustar={:e}", last.lp_dist_ustar);
    println!("violations={}", violations.len());
    Ok(ExitCode::SUCCESS)
}

fn print_verdict(v: &InequalityVerdict<f64>) {
    println!("status={}", v.status);
    println!("holds={}", v.holds);
    println!("J_u={:e}", v.j_u);
    println!("J_ustar={:e}", v.j_ustar);
    println!("slack={:e}", v.slack);
    println!("tolerance={:e}", v.tolerance);
    println!("continuous_in_s={}", v.admissibility.continuous_in_s);
    println!("convex_in_t={}", v.admissibility.convex_in_t);
    println!("nondecreasing_in_t={}", v.admissibility.nondecreasing_in_t);
}

fn verdict_code(v: &InequalityVerdict<f64>) -> ExitCode {
    match v.status {
        VerdictStatus::Holds => ExitCode::SUCCESS,
        VerdictStatus::Fail => ExitCode::from(2),
        VerdictStatus::HypothesisNotMet => ExitCode::from(3),
    }
}

fn verify(cmd: VerifyCommand) -> Result<ExitCode> {
    match cmd {
        VerifyCommand::Ps { input, integrand, tol } => {
            let v = check_polya_szego(&read_function(&input)?, &integrand, tol)?;
            print_verdict(&v);
            Ok(verdict_code(&v))
        }
        VerifyCommand::Aniso { input, exponents, tol } => {
            let v = check_anisotropic(&read_function(&input)?, &exponents, tol)?;
            print_verdict(&v);
            Ok(verdict_code(&v))
        }
        VerifyCommand::Equality { input, integrand, p, tol } => {
            let f = analyze_equality_case(&read_function(&input)?, &integrand, p, tol)?;
            let join = |xs: &[String]| xs.join(",");
            println!("status={}", f.status);
            println!("J_u={:e}", f.j_u);
            println!("J_ustar={:e}", f.j_ustar);
            match f.norms_match {
                Some(m) => println!("norms_match={m}"),
                None => println!("norms_match=none"),
            }
            println!("critical_set_measure={:e}", f.critical_set_measure);
            match (&f.translation_cells, &f.translation) {
                (Some(cells), Some(x0)) => {
                    println!("translation_cells={}", join(&cells.iter().map(|k| k.to_string()).collect::<Vec<_>>()));
                    println!("translation={}", join(&x0.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>()));
                }
                _ => println!("translation=none"),
            }
            match f.residual {
                Some(r) => println!("residual={r:e}"),
                None => println!("residual=none"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => {
            let params =
                GeneratorParams { padding: a.padding, components: a.components, shift: a.shift, amplitude: a.amplitude };
            let u = generate_test_function(a.kind, &params, &a.spec, a.seed)?;
            write_function(&u, &a.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Symmetrize { input, out } => {
            let u = read_function(&input)?;
            write_function(&schwarz_symmetrize(&u)?, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::PolarizeRun(args) => {
            if args.steps == 0 {
                bail!("--steps must be positive");
            }
            polarize_run(args)
        }
        Command::Verify(cmd) => verify(cmd),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1 so that 2 and 3 keep their verdict meaning.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
