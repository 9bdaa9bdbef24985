use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use mbvol::constants::mrv_conditional_variance;
use mbvol::experiment::{preset_names, write_histogram_csv, write_results_csv};
use mbvol::io::{format_f64, Column};
use mbvol::rng::{repetition_seed, stream_seed, Stream};
use mbvol::simulate::write_path_csv;
use mbvol::{
    abs_moment, add_jumps, add_noise, aggregate, bias_constants, clt_constant_a, finite_sample_nu1, histogram_export,
    load_ticks, make_block_scheme, make_gamma_scheme, optimal_constants, regularize, run_experiment,
    simulate_constant_vol_path, simulate_sv_path, Analysis, ColumnSpec, Error, EstimatorKind, EstimatorOptions,
    RegularizeOptions, Result, Suite, SvModelParams, Transform,
};

#[derive(Parser)]
#[command(name = "mbvol", version, about = "Noise- and jump-robust realised volatility estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a latent path plus noisy observations and write them as CSV.
    Simulate(SimulateArgs),
    /// Estimate volatility functionals from a tick CSV.
    Estimate(EstimateArgs),
    /// Run Monte Carlo experiments from a preset or a TOML file.
    Montecarlo(MontecarloArgs),
    /// Print limit-theory constants.
    Constants(ConstantsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Sv,
    Constant,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "sv")]
    model: ModelArg,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    omega2: f64,
    /// Number of jumps added to the observations.
    #[arg(long, default_value_t = 0)]
    jumps: usize,
    /// Standard deviation of each jump.
    #[arg(long, default_value_t = 0.25)]
    h: f64,
    /// Drift (both models).
    #[arg(long, default_value_t = 0.03)]
    mu: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Log,
    Raw,
}

#[derive(Args)]
struct EstimateArgs {
    /// Tick CSV with a header row.
    input: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    c1: f64,
    #[arg(long, default_value_t = 2.0)]
    c2: f64,
    /// Use the gamma block scheme; only `mbv_raw(r,l)` is defined there.
    #[arg(long)]
    gamma: Option<f64>,
    /// mrv, mrq, mbv_robust, mtq or mbv_raw(r,l); repeatable.
    #[arg(long = "estimator", default_value = "mrv")]
    estimators: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Truncate negative estimates and interval ends at zero.
    #[arg(long)]
    floor_zero: bool,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    finite_sample_nu1: bool,
    /// Timestamp column, by name or zero-based index.
    #[arg(long, default_value = "time")]
    time_col: String,
    /// Price column, by name or zero-based index.
    #[arg(long, default_value = "price")]
    price_col: String,
    #[arg(long, value_enum, default_value = "log")]
    transform: TransformArg,
    /// Grid size; defaults to the number of ticks minus one.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct MontecarloArgs {
    /// Built-in experiment: table1, table2, table3 or figure1.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    preset: Option<String>,
    /// TOML file with [[experiment]] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.6)]
    c2: f64,
    /// Also print the finite-sample nu1 at this n.
    #[arg(long)]
    n: Option<usize>,
    /// Powers r for which mu_r is printed.
    #[arg(long = "moment", value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
    moments: Vec<f64>,
    /// Powers for the CLT constant A, comma separated.
    #[arg(long = "clt", value_delimiter = ',', default_values_t = vec![2.0])]
    clt: Vec<f64>,
    /// Noise standard deviation, for the variance-optimal tuning.
    #[arg(long)]
    omega: Option<f64>,
    /// Volatility level, for the variance-optimal tuning.
    #[arg(long)]
    sigma: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Constants(a) => constants(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed early, as in `mbvol constants | head`
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mbvol: {e}");
            ExitCode::FAILURE
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let seed = repetition_seed(a.seed, a.n, 0);
    let path_seed = stream_seed(seed, Stream::Path);
    let path = match a.model {
        ModelArg::Sv => simulate_sv_path(&SvModelParams { mu: a.mu, ..Default::default() }, a.n, path_seed)?,
        ModelArg::Constant => simulate_constant_vol_path(a.mu, a.n, path_seed)?,
    };
    let mut obs = add_noise(&path, a.omega2, stream_seed(seed, Stream::Noise))?;
    if a.jumps > 0 {
        obs = add_jumps(&obs, a.jumps, a.h, stream_seed(seed, Stream::Jumps))?;
    }
    match &a.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_path_csv(&mut w, &path, &obs)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            write_path_csv(&mut w, &path, &obs)?;
            w.flush()?;
        }
    }
    eprintln!("iv = {}, iq = {}", path.iv, path.iq);
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let columns = ColumnSpec { time: Column::from(a.time_col.as_str()), price: Column::from(a.price_col.as_str()) };
    let ticks = load_ticks(&a.input, &columns)?;
    let n = a.n.unwrap_or(ticks.len() - 1);
    let transform = match a.transform {
        TransformArg::Log => Transform::Log,
        TransformArg::Raw => Transform::Raw,
    };
    let reg = regularize(&ticks, n, RegularizeOptions { transform, ..Default::default() })?;
    if let Some(w) = &reg.warning {
        eprintln!("mbvol: warning: {w}");
    }
    let scheme = match a.gamma {
        Some(g) => make_gamma_scheme(n, a.c1, a.c2, g)?,
        None => make_block_scheme(n, a.c1, a.c2)?,
    };
    let analysis =
        Analysis::with_options(&reg.obs, scheme, EstimatorOptions { finite_sample_nu1: a.finite_sample_nu1 })?;
    let kinds = a.estimators.iter().map(|s| s.parse::<EstimatorKind>()).collect::<Result<Vec<_>>>()?;

    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "estimator,value,std_error,ci_low,ci_high,n,k,m,l,omega2_hat")?;
    let quarter = (n as f64).powf(0.25);
    for kind in kinds {
        let est = match kind {
            EstimatorKind::Mrv => Some(analysis.mrv()?),
            EstimatorKind::Mrq => Some(analysis.mrq()?),
            EstimatorKind::MbvRobust => Some(analysis.mbv_robust()?),
            EstimatorKind::Mtq => Some(analysis.mtq()?),
            EstimatorKind::MbvRaw { .. } => None,
            EstimatorKind::Standardized | EstimatorKind::StandardizedLog => {
                return Err(Error::Config(format!("`{kind}` needs the true IV and is simulation-only")));
            }
        };
        let (value, se, ci) = match (kind, est) {
            (_, Some(e)) => {
                let mut e = if e.feasible_variance.is_some() { e.with_interval(a.level)? } else { e };
                if a.floor_zero {
                    e = e.floored();
                }
                (e.value, e.feasible_variance.map(|v| v.sqrt() / quarter), e.ci)
            }
            (EstimatorKind::MbvRaw { r, l }, None) => {
                let v = if scheme.gamma > 0.0 {
                    let powers: &[f64] = if l == 0.0 { &[r] } else { &[r, l] };
                    analysis.mmv_gamma(powers)?
                } else {
                    analysis.mbv(r, l)?
                };
                (v, None, None)
            }
            _ => unreachable!(),
        };
        let cell = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        writeln!(
            out,
            "{kind},{},{},{},{},{},{},{},{},{}",
            format_f64(value),
            cell(se),
            cell(ci.map(|c| c.0)),
            cell(ci.map(|c| c.1)),
            scheme.n,
            scheme.k,
            scheme.m,
            scheme.l,
            format_f64(analysis.omega2_hat())
        )?;
    }
    out.flush()?;
    Ok(())
}

fn montecarlo(a: MontecarloArgs) -> Result<()> {
    let suite = match (&a.preset, &a.config) {
        (Some(p), _) => Suite::preset(p)?,
        (None, Some(path)) => Suite::from_toml_str(&fs::read_to_string(path)?)?,
        (None, None) => {
            let names: Vec<_> = preset_names().collect();
            return Err(Error::Config(format!("give --preset ({}) or --config", names.join(", "))));
        }
    }
    .with_overrides(a.reps, a.seed);
    fs::create_dir_all(&a.out)?;
    let mut stdout = io::stdout().lock();

    for exp in &suite.experiments {
        let records = run_experiment(exp, a.threads)?;
        let rows = aggregate(&records)?;
        let path = a.out.join(format!("{}.csv", exp.label));
        let mut w = BufWriter::new(File::create(&path)?);
        write_results_csv(&mut w, &rows)?;
        w.flush()?;
        writeln!(stdout, "{}", path.display())?;

        for kind in exp.estimators.iter().filter(|k| k.is_statistic()) {
            for &n in &exp.n_grid {
                let hist = histogram_export(&records, *kind, n)?;
                let path = a.out.join(format!("{}_{kind}_n{n}.csv", exp.label));
                let mut w = BufWriter::new(File::create(&path)?);
                write_histogram_csv(&mut w, &hist)?;
                w.flush()?;
                if hist.discarded > 0 {
                    eprintln!("mbvol: {}: {} repetitions without a defined {kind}", path.display(), hist.discarded);
                }
                writeln!(stdout, "{}", path.display())?;
            }
        }
    }
    Ok(())
}

fn constants(a: ConstantsArgs) -> Result<()> {
    let c = bias_constants(a.c1, a.c2)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "c1 = {}", a.c1)?;
    writeln!(stdout, "c2 = {}", a.c2)?;
    writeln!(stdout, "nu1 = {}", c.nu1)?;
    writeln!(stdout, "nu2 = {}", c.nu2)?;
    if let Some(n) = a.n {
        writeln!(stdout, "nu1({n}) = {}", finite_sample_nu1(n, a.c1, a.c2)?)?;
    }
    for r in &a.moments {
        writeln!(stdout, "mu({r}) = {}", abs_moment(*r)?)?;
    }
    let powers: Vec<String> = a.clt.iter().map(f64::to_string).collect();
    writeln!(stdout, "A({}) = {}", powers.join(","), clt_constant_a(&a.clt)?)?;
    match (a.omega, a.sigma) {
        (Some(omega), Some(sigma)) => {
            let opt = optimal_constants(omega, sigma)?;
            writeln!(stdout, "optimal c1 = {}", opt.c1)?;
            writeln!(stdout, "optimal c2 = {}", opt.c2)?;
            writeln!(stdout, "min variance = {}", opt.min_variance)?;
            writeln!(stdout, "variance at (c1, c2) = {}", mrv_conditional_variance(a.c1, a.c2, sigma, omega)?)?;
        }
        (None, None) => {}
        _ => return Err(Error::Config("--omega and --sigma go together".into())),
    }
    Ok(())
}
