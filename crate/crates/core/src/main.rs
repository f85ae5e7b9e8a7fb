use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rk2net::bench::{self, NamedTableau};
use rk2net::datagen::{self, generate, Dataset, GridSpec};
use rk2net::optimizer::{train, TrainConfig, TrainTrace, CONFIG_KEYS};
use rk2net::rationalize::{best_rational, complete_tableau, DEFAULT_MAX_DENOMINATOR};
use rk2net::rk2::{integrate, max_abs_error, Tableau2};
use rk2net::traingraph::{forward, loss_terms};
use rk2net::twobody::analytic_state;
use rk2net::{fmt_f64, Error, Rational};

const OUT_DIR_ENV: &str = "RK2NET_OUT_DIR";

const AFTER_HELP: &str = "\
Output files (floats are written with 17 significant digits):
  gen-data   <out>/inputs.csv   x,y,vx,vy,h,one
             <out>/targets.csv  x,y,vx,vy
  train      --trace-out        epoch,loss,lr,a21,b1,b2,accepted
  integrate  --out              t,x,y,vx,vy
  bench      --out              method,N,fe,max_abs_err,digits
             <out stem>_plot.csv  fe,<method>,... (accuracy digits per method)

Exit codes: 0 success, 1 runtime error, 2 usage error.
Outputs without an explicit path go to $RK2NET_OUT_DIR (default ./out).";

#[derive(Parser)]
#[command(name = "rk2net", version, about = "Train, rationalize, verify and benchmark two-stage Runge-Kutta methods for the two-body problem", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write training inputs/targets sampled from the circular orbit.
    GenData(GenDataArgs),
    /// Train a21, b1, b2 with gradient descent with momentum and adaptive learning rate.
    Train(TrainArgs),
    /// Round a21 to a small fraction and complete the tableau exactly.
    Rationalize(RationalizeArgs),
    /// Check the order and consistency conditions of a tableau exactly.
    Verify(VerifyArgs),
    /// Integrate the circular orbit with one tableau.
    Integrate(IntegrateArgs),
    /// Work-precision comparison over [0, t_end].
    Bench(BenchArgs),
    /// gen-data, train, rationalize, verify and bench in one go.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, allow_negative_numbers = true)]
    t_start: f64,
    #[arg(long, allow_negative_numbers = true)]
    t_end: f64,
    #[arg(long)]
    h: f64,
    /// Output directory [default: $RK2NET_OUT_DIR/data]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory written by gen-data [default: generate [0, 2pi] with h = pi/128]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Flat key = value file of training settings
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Override a config key, e.g. --set momentum=0.8 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Where to write the per-epoch trace CSV
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct RationalizeArgs {
    #[arg(long, allow_negative_numbers = true)]
    a21: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DENOMINATOR)]
    max_den: i64,
}

#[derive(Args)]
struct VerifyArgs {
    /// c2,a21,b1,b2 as fractions or decimals, e.g. 11/26,11/26,-2/11,13/11
    #[arg(long, allow_hyphen_values = true)]
    tableau: String,
}

#[derive(Args)]
struct IntegrateArgs {
    /// Built-in method name or c2,a21,b1,b2
    #[arg(long, allow_hyphen_values = true)]
    tableau: String,
    #[arg(long, default_value_t = 2.0 * PI)]
    t_end: f64,
    #[arg(long)]
    steps: usize,
    /// Trajectory CSV; omitted means only the error is printed
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = bench::DEFAULT_T_END)]
    t_end: f64,
    /// Comma-separated step counts [default: 4000,8000,...,128000]
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
    /// Comma-separated built-in names (new, heun, midpoint, two-thirds) or a21=<value>
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Benchmark CSV [default: $RK2NET_OUT_DIR/bench.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_DENOMINATOR)]
    max_den: i64,
    #[arg(long, default_value_t = bench::DEFAULT_T_END)]
    t_end: f64,
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownConfigKey(_) | Error::InvalidConfigValue { .. } | Error::ParseRational(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a).map(|_| ()),
        Command::Rationalize(a) => rationalize_cmd(a.a21, a.max_den).map(|_| ()),
        Command::Verify(a) => verify_cmd(&a.tableau),
        Command::Integrate(a) => integrate_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Pipeline(a) => pipeline(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn paper_dataset() -> Dataset {
    generate(GridSpec::new(0.0, 2.0 * PI, PI / 128.0).expect("valid grid"))
}

fn gen_data(a: GenDataArgs) -> CmdResult {
    let grid = GridSpec::new(a.t_start, a.t_end, a.h)?;
    let ds = generate(grid);
    let dir = a.out.unwrap_or_else(|| out_dir().join("data"));
    ds.write_csv(&dir)?;
    println!(
        "wrote {} rows (h = {}) to {} and {}",
        ds.len(),
        fmt_f64(grid.h()),
        dir.join(datagen::INPUTS_FILE).display(),
        dir.join(datagen::TARGETS_FILE).display()
    );
    Ok(())
}

fn build_config(config: Option<&Path>, overrides: &[String], seed: Option<u64>, max_epochs: Option<usize>) -> Result<TrainConfig, Failure> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| runtime(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_kv(&text)?;
    }
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?} (keys: {})", CONFIG_KEYS.join(", "))))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    if let Some(m) = max_epochs {
        cfg.max_epochs = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_training(trace: &TrainTrace, ds: &Dataset) -> Result<(), Failure> {
    let p = trace.final_params;
    let (out, _) = forward(&p, ds)?;
    let terms = loss_terms(&p, &out, ds.targets());
    let res = p.to_tableau().order_residuals();
    println!("epochs: {} ({})", trace.epochs(), trace.stop_reason);
    println!("data term: {}", fmt_f64(terms.data));
    println!("residuals: b1 + b2 - 1 = {}, a21*b2 - 1/2 = {}", fmt_f64(res.r1), fmt_f64(res.r2));
    println!(
        "final: a21 = {} b1 = {} b2 = {} loss = {}",
        fmt_f64(p.a21),
        fmt_f64(p.b1),
        fmt_f64(p.b2),
        fmt_f64(trace.final_loss)
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<TrainTrace, Failure> {
    let cfg = build_config(a.config.as_deref(), &a.overrides, a.seed, a.max_epochs)?;
    let ds = match &a.data {
        Some(dir) => Dataset::read_csv(dir)?,
        None => paper_dataset(),
    };
    let trace = train(&cfg, &ds)?;
    if let Some(path) = &a.trace_out {
        trace.write_csv_file(path)?;
    }
    report_training(&trace, &ds)?;
    Ok(trace)
}

fn rationalize_cmd(a21: f64, max_den: i64) -> Result<Tableau2<Rational>, Failure> {
    if max_den < 1 {
        return Err(usage("--max-den must be at least 1"));
    }
    let frac = best_rational(a21, max_den)?;
    println!("a21 = {frac} (|a21 - {frac}| = {:e})", (a21 - frac.to_f64()).abs());
    let t = complete_tableau(frac)?;
    println!("tableau: c2 = {}, a21 = {}, b1 = {}, b2 = {}", t.c2(), t.a21(), t.b1(), t.b2());
    Ok(t)
}

fn parse_tableau(spec: &str) -> Result<(Rational, Rational, Rational, Rational), Failure> {
    let parts: Vec<Rational> = spec
        .split(',')
        .map(|s| s.parse::<Rational>())
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [c2, a21, b1, b2] => Ok((c2, a21, b1, b2)),
        _ => Err(usage(format!("expected c2,a21,b1,b2, got {} values", parts.len()))),
    }
}

fn resolve_tableau(spec: &str) -> Result<Tableau2<Rational>, Failure> {
    if let Some(t) = bench::builtin(spec) {
        return Ok(t.tableau);
    }
    let (c2, a21, b1, b2) = parse_tableau(spec)?;
    Ok(Tableau2::from_butcher(c2, a21, b1, b2)?)
}

fn verify_cmd(spec: &str) -> CmdResult {
    let (c2, a21, b1, b2) = parse_tableau(spec)?;
    // residuals use c2 as written even when it disagrees with a21
    let res = Tableau2::new(c2, b1, b2).order_residuals();
    let consistent = c2 == a21;
    let order = if consistent { res.order() } else { 0 };
    let exact = format!("({}, {})", res.r1, res.r2);
    let residuals = if res.r1.is_zero() && res.r2.is_zero() {
        exact
    } else {
        format!("{exact} = ({}, {})", res.r1.to_f64(), res.r2.to_f64())
    };
    if consistent {
        println!("order {order}: residuals {residuals}; consistent");
        Ok(())
    } else {
        println!("order {order}: residuals {residuals}; inconsistent (c2 = {c2}, a21 = {a21})");
        Err(runtime("tableau violates c2 = a21"))
    }
}

fn integrate_cmd(a: IntegrateArgs) -> CmdResult {
    let t = resolve_tableau(&a.tableau)?.to_f64();
    let traj = integrate(&t, analytic_state(0.0), 0.0, a.t_end, a.steps)?;
    let h = a.t_end / a.steps as f64;
    if let Some(path) = &a.out {
        datagen::write_trajectory(path, 0.0, h, &traj)?;
    }
    let last = traj.last().expect("nonempty");
    println!(
        "final state: x = {} y = {} vx = {} vy = {}",
        fmt_f64(last.x),
        fmt_f64(last.y),
        fmt_f64(last.vx),
        fmt_f64(last.vy)
    );
    println!("max abs error: {}", fmt_f64(max_abs_error(&traj, 0.0, h)));
    Ok(())
}

fn resolve_method(name: &str) -> Result<NamedTableau, Failure> {
    if let Some(t) = bench::builtin(name) {
        return Ok(t);
    }
    if let Some(v) = name.strip_prefix("a21=") {
        let a21: Rational = v.parse()?;
        return Ok(NamedTableau::new(format!("a21={a21}"), complete_tableau(a21)?));
    }
    Err(usage(format!(
        "unknown method {name:?}; use new, heun, midpoint, two-thirds or a21=<value>"
    )))
}

fn plot_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
    csv.with_file_name(format!("{stem}_plot.csv"))
}

fn run_bench(methods: &[NamedTableau], t_end: f64, steps: &[usize], out: &Path) -> CmdResult {
    if steps.contains(&0) {
        return Err(usage("step counts must be at least 1"));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    let records = bench::run_benchmark(methods, t_end, steps);
    let plot = plot_path(out);
    bench::write_files(&records, out, &plot)?;
    println!("{:<14} {:>8} {:>9} {:>24} {:>8}", "method", "N", "fe", "max_abs_err", "digits");
    for r in &records {
        println!(
            "{:<14} {:>8} {:>9} {:>24} {:>8.3}",
            r.method,
            r.steps,
            r.function_evaluations,
            fmt_f64(r.max_abs_error),
            r.accuracy_digits
        );
    }
    println!("wrote {} and {}", out.display(), plot.display());
    let failed: Vec<_> = records.iter().filter(|r| r.failed()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        for r in &failed {
            eprintln!("{} N={}: {}", r.method, r.steps, r.failure.as_deref().unwrap_or(""));
        }
        Err(runtime(format!("{} benchmark cell(s) failed", failed.len())))
    }
}

fn bench_cmd(a: BenchArgs) -> CmdResult {
    let methods = if a.methods.is_empty() {
        bench::builtin_tableaus()
    } else {
        a.methods.iter().map(|m| resolve_method(m)).collect::<Result<_, _>>()?
    };
    let steps = if a.steps.is_empty() {
        bench::DEFAULT_STEP_COUNTS.to_vec()
    } else {
        a.steps
    };
    let out = a.out.unwrap_or_else(|| out_dir().join("bench.csv"));
    run_bench(&methods, a.t_end, &steps, &out)
}

fn pipeline(a: PipelineArgs) -> CmdResult {
    let dir = a.out.unwrap_or_else(out_dir);
    println!("== gen-data");
    let data_dir = dir.join("data");
    gen_data(GenDataArgs {
        t_start: 0.0,
        t_end: 2.0 * PI,
        h: PI / 128.0,
        out: Some(data_dir.clone()),
    })?;

    println!("== train");
    let trace = train_cmd(TrainArgs {
        data: Some(data_dir),
        config: a.config,
        seed: Some(a.seed),
        max_epochs: a.max_epochs,
        overrides: Vec::new(),
        trace_out: Some(dir.join("trace.csv")),
    })?;

    println!("== rationalize");
    let t = rationalize_cmd(trace.final_params.a21, a.max_den)?;

    println!("== verify");
    verify_cmd(&format!("{},{},{},{}", t.c2(), t.a21(), t.b1(), t.b2()))?;

    println!("== bench");
    let mut methods = bench::builtin_tableaus();
    let trained = NamedTableau::new(format!("trained-a21={}", t.a21()), t);
    if !methods.iter().any(|m| m.tableau == trained.tableau) {
        methods.push(trained);
    }
    let steps = if a.steps.is_empty() {
        bench::DEFAULT_STEP_COUNTS.to_vec()
    } else {
        a.steps
    };
    run_bench(&methods, a.t_end, &steps, &dir.join("bench.csv"))
}
