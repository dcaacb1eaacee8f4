//! Command-line interface.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tvarma_core::breaks::{
    fit_segmented_ar, forecast_metrics, h_step_forecasts, persistence_measures, ForecastMetrics, PersistenceReport,
    SegmentationResult, THEIL_U_CONVENTION,
};
use tvarma_core::coefficients::StochasticCoeffSpec;
use tvarma_core::forecast::{predict_infinite, ForecastReport};
use tvarma_core::green::{theta_green, xi, xi_m, xi_q};
use tvarma_core::inversion::recover_errors;
use tvarma_core::mc::Estimate;
use tvarma_core::moments::{autocovariance, unconditional_mean, unconditional_variance};
use tvarma_core::path::{AnyPath, CoefficientPath, Time};
use tvarma_core::process::{simulate, SimConfig, TvArmaModel};
use tvarma_core::stochastic::{
    dsar_moments_mc, grc_autocov, grc_moments_mc, DsarMoments, GrcAutocov, GrcMomentInputs, GrcMonteCarlo,
};
use tvarma_core::tail::TruncationPolicy;

use crate::error::{CliError, Result};
use crate::io::{self, num, opt_num, Calendar, Grid, Quarter, Series};
use crate::parallel::{init_threads, Parallel};
use crate::spec::ModelSpec;
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "tvarma", version, about = "Time-varying ARMA toolkit: Green functions, moments, forecasts, breaks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Observed series: CSV with header and columns date,value.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Model spec (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Monte Carlo replications.
    #[arg(long = "mc-n", global = true, default_value_t = 10_000)]
    pub mc_n: u64,
    #[arg(long = "tail-tol", global = true, default_value_t = 1e-10)]
    pub tail_tol: f64,
    #[arg(long = "max-terms", global = true, default_value_t = 100_000)]
    pub max_terms: usize,
    /// Worker threads for Monte Carlo (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Green-function grid ξ, ξ^(m), ξ_q and ϑ for t = s..s+horizon.
    Green {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        s: String,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
    },
    /// Simulate the model; CSV columns t,date,y,eps.
    Simulate {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value = "199", allow_hyphen_values = true)]
        end: String,
        #[arg(long = "burn-in", default_value_t = 500)]
        burn_in: usize,
    },
    /// Unconditional moments: closed forms for deterministic paths, closed
    /// form and Monte Carlo for random coefficients.
    Moments {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
        #[arg(long, default_value_t = 5)]
        lags: usize,
        #[arg(long = "burn-in", default_value_t = 500)]
        burn_in: usize,
    },
    /// Forecasts from the observed series via inverted innovations.
    Forecast {
        /// Forecast origin; the last observation when absent.
        #[arg(long, allow_hyphen_values = true)]
        origin: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,4,8")]
        horizons: Vec<usize>,
        /// Evaluate h-step forecasts of every observation from this time on.
        #[arg(long = "eval-start", allow_hyphen_values = true)]
        eval_start: Option<String>,
    },
    /// Recover innovations from the observed series.
    Invert,
    /// Least-squares segmentation of an AR(p) with up to max-breaks breaks.
    FitBreaks {
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long = "max-breaks", default_value_t = 3)]
        max_breaks: usize,
        /// Minimum segment length in observations; max(p+2, ceil(T/10)) when absent.
        #[arg(long = "min-seg")]
        min_seg: Option<usize>,
    },
    /// Persistence measures per regime and the variance trajectory.
    Persistence {
        /// First trajectory time; 0 when absent.
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        /// Last trajectory time; 40 past the last break when absent.
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
    },
    /// Run the built-in oracle suite.
    Verify,
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    policy: TruncationPolicy,
}

impl Ctx<'_> {
    fn spec(&self) -> Result<ModelSpec> {
        let path = self.global.spec.as_ref().ok_or_else(|| CliError::Config("--spec is required".into()))?;
        ModelSpec::load(path)
    }

    fn series(&self, origin: Option<Quarter>) -> Result<Series> {
        let path = self.global.input.as_ref().ok_or_else(|| CliError::Config("--input is required".into()))?;
        io::read_series_file(path, origin)
    }

    fn format(&self, default: Format) -> Format {
        self.global.format.unwrap_or(default)
    }
}

/// Parses an integer index or, with a quarterly calendar, a quarter.
fn time_arg(s: &str, calendar: Calendar) -> Result<Time> {
    if let Ok(t) = s.trim().parse::<Time>() {
        return Ok(t);
    }
    match calendar {
        Calendar::Quarterly { origin } => s
            .parse::<Quarter>()
            .map(|q| q.index_from(origin))
            .map_err(|e| CliError::Config(e.to_string())),
        Calendar::Index => Err(CliError::Config(format!("{s:?} is not a time index"))),
    }
}

enum Output {
    Json(String),
    Csv(Grid),
}

fn emit<T: Serialize>(fmt: Format, value: &T, grid: impl FnOnce() -> Grid) -> Result<Output> {
    Ok(match fmt {
        Format::Json => Output::Json(io::to_json(value)?),
        Format::Csv => Output::Csv(grid()),
    })
}

/// Runs a parsed command, writing to `--out` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    if !(g.tail_tol > 0.0) || g.max_terms == 0 {
        return Err(CliError::Config("--tail-tol must be positive and --max-terms at least 1".into()));
    }
    if g.mc_n == 0 {
        return Err(CliError::Config("--mc-n must be at least 1".into()));
    }
    init_threads(g.threads);
    let ctx = Ctx { global: g, policy: TruncationPolicy { tail_tol: g.tail_tol, max_terms: g.max_terms, ..Default::default() } };
    let (out, verdict) = match &cli.command {
        Command::Green { s, horizon } => (cmd_green(&ctx, s, *horizon)?, Ok(())),
        Command::Simulate { start, end, burn_in } => (cmd_simulate(&ctx, start, end, *burn_in)?, Ok(())),
        Command::Moments { from, to, lags, burn_in } => (cmd_moments(&ctx, from, to.as_deref(), *lags, *burn_in)?, Ok(())),
        Command::Forecast { origin, horizons, eval_start } => {
            (cmd_forecast(&ctx, origin.as_deref(), horizons, eval_start.as_deref())?, Ok(()))
        }
        Command::Invert => (cmd_invert(&ctx)?, Ok(())),
        Command::FitBreaks { p, max_breaks, min_seg } => (cmd_fit_breaks(&ctx, *p, *max_breaks, *min_seg)?, Ok(())),
        Command::Persistence { from, to } => (cmd_persistence(&ctx, from.as_deref(), to.as_deref())?, Ok(())),
        Command::Verify => cmd_verify(&ctx)?,
    };
    match &g.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::io(p, e))?;
            write_output(&out, BufWriter::new(f), p)?;
        }
        None => write_output(&out, stdout, "<stdout>".as_ref())?,
    }
    verdict
}

fn write_output<W: Write>(out: &Output, mut w: W, name: &std::path::Path) -> Result<()> {
    match out {
        Output::Json(s) => writeln!(w, "{s}").and_then(|_| w.flush()).map_err(|e| CliError::io(name, e)),
        Output::Csv(g) => g.write_csv(w),
    }
}

#[derive(Serialize)]
struct GreenRow {
    t: Time,
    s: Time,
    k: Time,
    xi: f64,
    xi_m: Vec<f64>,
    xi_q: f64,
    theta: f64,
}

fn cmd_green(ctx: &Ctx, s: &str, horizon: usize) -> Result<Output> {
    let spec = ctx.spec()?;
    let path = spec.deterministic()?;
    let s = time_arg(s, spec.calendar()?)?;
    let p = path.ar_order();
    let rows = (0..=horizon as Time)
        .map(|k| {
            let t = s + k;
            Ok(GreenRow {
                t,
                s,
                k,
                xi: xi(&path, t, s)?,
                xi_m: (1..=p).map(|m| xi_m(&path, m, t, s)).collect::<tvarma_core::Result<_>>()?,
                xi_q: xi_q(&path, t, s)?,
                theta: theta_green(&path, t, s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(ctx.format(Format::Csv), &rows, || {
        let mut header: Vec<String> = ["t", "s", "k", "xi"].map(String::from).to_vec();
        header.extend((1..=p).map(|m| format!("xi_m{m}")));
        header.extend(["xi_q".into(), "theta".into()]);
        let mut g = Grid::new(header);
        for r in &rows {
            let mut row = vec![r.t.to_string(), r.s.to_string(), r.k.to_string(), num(r.xi)];
            row.extend(r.xi_m.iter().map(|&v| num(v)));
            row.extend([num(r.xi_q), num(r.theta)]);
            g.push(row);
        }
        g
    })
}

fn cmd_simulate(ctx: &Ctx, start: &str, end: &str, burn_in: usize) -> Result<Output> {
    let spec = ctx.spec()?;
    let cal = spec.calendar()?;
    let (start, end) = (time_arg(start, cal)?, time_arg(end, cal)?);
    let model = TvArmaModel::new(spec.deterministic()?, spec.noise)?;
    let run = simulate(&model, &SimConfig { start, end, burn_in }, &spec.initial, ctx.global.seed)?;
    #[derive(Serialize)]
    struct Sim<'a> {
        seed: u64,
        t: Vec<Time>,
        y: &'a [f64],
        eps: &'a [f64],
    }
    let sim = Sim { seed: run.seed, t: (run.start..=run.end).collect(), y: run.observed(), eps: run.observed_eps() };
    emit(ctx.format(Format::Csv), &sim, || io::simulation_grid(&run, cal))
}

#[derive(Serialize)]
struct DeterministicMoments {
    t: Time,
    mean: f64,
    variance: f64,
    autocovariance: Vec<f64>,
    terms_used: usize,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StochasticMoments {
    Grc {
        closed_form: Option<GrcAutocov>,
        closed_form_error: Option<String>,
        centre: f64,
        monte_carlo: GrcMonteCarlo,
    },
    DoubleStochastic(DsarMoments),
}

fn cmd_moments(ctx: &Ctx, from: &str, to: Option<&str>, lags: usize, burn_in: usize) -> Result<Output> {
    let spec = ctx.spec()?;
    let g = ctx.global;
    if let Some(st) = spec.stochastic() {
        let report = match st {
            StochasticCoeffSpec::DoubleStochastic(d) => {
                StochasticMoments::DoubleStochastic(dsar_moments_mc(d, lags.max(1), burn_in, g.mc_n, g.seed, &Parallel)?)
            }
            _ => {
                let closed = GrcMomentInputs::from_spec(st).and_then(|i| grc_autocov(&i, lags));
                let centre = closed.as_ref().map_or(0.0, |c| c.mean);
                let mc = grc_moments_mc(st, lags, burn_in, centre, g.mc_n, g.seed, &Parallel)?;
                let (closed_form, closed_form_error) = match closed {
                    Ok(c) => (Some(c), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                StochasticMoments::Grc { closed_form, closed_form_error, centre, monte_carlo: mc }
            }
        };
        return emit(ctx.format(Format::Json), &report, || stochastic_grid(&report));
    }
    let path = spec.deterministic()?;
    let cal = spec.calendar()?;
    let from = time_arg(from, cal)?;
    let to = to.map(|s| time_arg(s, cal)).transpose()?.unwrap_or(from);
    let rows = (from..=to)
        .map(|t| {
            let mean = unconditional_mean(&path, t, &ctx.policy)?;
            let var = unconditional_variance(&path, t, &ctx.policy)?;
            let autocovariance =
                (1..=lags).map(|l| autocovariance(&path, t, l, &ctx.policy).map(|m| m.value)).collect::<tvarma_core::Result<_>>()?;
            Ok(DeterministicMoments {
                t,
                mean: mean.value,
                variance: var.value,
                autocovariance,
                terms_used: var.truncation.terms_used,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(ctx.format(Format::Csv), &rows, || {
        let mut header: Vec<String> = ["t", "date", "mean", "variance"].map(String::from).to_vec();
        header.extend((1..=lags).map(|l| format!("gamma{l}")));
        let mut grid = Grid::new(header);
        for r in &rows {
            let mut row = vec![r.t.to_string(), cal.label(r.t), num(r.mean), num(r.variance)];
            row.extend(r.autocovariance.iter().map(|&v| num(v)));
            grid.push(row);
        }
        grid
    })
}

fn stochastic_grid(report: &StochasticMoments) -> Grid {
    let mut g = Grid::new(["quantity", "lag", "value", "se"]);
    let est = |g: &mut Grid, name: &str, lag: usize, e: &Estimate| {
        g.push(vec![name.into(), lag.to_string(), num(e.value), num(e.se)]);
    };
    match report {
        StochasticMoments::Grc { closed_form, monte_carlo, .. } => {
            if let Some(c) = closed_form {
                g.push(vec!["closed_mean".into(), "0".into(), num(c.mean), String::new()]);
                for (l, v) in c.gamma.iter().enumerate() {
                    g.push(vec!["closed_gamma".into(), l.to_string(), num(*v), String::new()]);
                }
            }
            est(&mut g, "mc_mean", 0, &monte_carlo.mean);
            for (l, e) in monte_carlo.autocov.iter().enumerate() {
                est(&mut g, "mc_gamma", l, e);
            }
        }
        StochasticMoments::DoubleStochastic(d) => {
            est(&mut g, "mean", 0, &d.mean);
            est(&mut g, "variance", 0, &d.variance);
            g.push(vec!["variance_by_lag".into(), "0".into(), num(d.variance_by_lag), String::new()]);
            for (j, e) in d.mean_xi.iter().enumerate() {
                est(&mut g, "mean_xi", j, e);
            }
        }
    }
    g
}

#[derive(Serialize)]
struct EvalReport {
    theil_u: &'static str,
    metrics: Vec<ForecastMetrics>,
}

#[derive(Serialize)]
struct ForecastOutput {
    origin: Time,
    origin_label: String,
    forecasts: Vec<ForecastReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<EvalReport>,
}

fn cmd_forecast(ctx: &Ctx, origin: Option<&str>, horizons: &[usize], eval_start: Option<&str>) -> Result<Output> {
    let spec = ctx.spec()?;
    let path = spec.deterministic()?;
    let series = ctx.series(spec.origin()?)?;
    let cal = series.calendar;
    let s = origin.map(|o| time_arg(o, cal)).transpose()?.unwrap_or(series.end());
    if s < series.start || s > series.end() {
        return Err(CliError::Data(format!("origin {s} is outside the observed series")));
    }
    let upto = &series.values[..=((s - series.start) as usize)];
    if horizons.contains(&0) {
        return Err(CliError::Config("horizons must be at least 1".into()));
    }
    let forecasts = horizons
        .iter()
        .map(|&h| predict_infinite(&path, s + h as Time, s, upto, series.start, &ctx.policy))
        .collect::<tvarma_core::Result<Vec<_>>>()?;
    let evaluation = eval_start.map(|e| evaluate(&path, &series, time_arg(e, cal)?, horizons)).transpose()?;
    let out = ForecastOutput { origin: s, origin_label: cal.label(s), forecasts, evaluation };
    emit(ctx.format(Format::Json), &out, || {
        let mut g = Grid::new(["t", "date", "horizon", "point", "mse", "lower95", "upper95"]);
        for f in &out.forecasts {
            g.push(vec![
                f.t.to_string(),
                cal.label(f.t),
                (f.t - f.s).to_string(),
                num(f.point),
                num(f.mse),
                num(f.point - f.interval_halfwidth),
                num(f.point + f.interval_halfwidth),
            ]);
        }
        g
    })
}

/// Pseudo out-of-sample evaluation of the finite-history predictor.
fn evaluate(path: &AnyPath, series: &Series, first: Time, horizons: &[usize]) -> Result<EvalReport> {
    if path.ma_order() > 0 {
        return Err(CliError::Config("forecast evaluation supports pure AR paths only".into()));
    }
    if first > series.end() {
        return Err(CliError::Data("evaluation start is after the last observation".into()));
    }
    let actual: Vec<f64> = (first..=series.end()).map(|t| series.get(t).expect("in range")).collect();
    let metrics = horizons
        .iter()
        .map(|&h| {
            let pred = h_step_forecasts(path, &series.values, series.start, first, series.end(), h)?;
            Ok(forecast_metrics(h, &actual, &pred)?)
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport { theil_u: THEIL_U_CONVENTION, metrics })
}

fn cmd_invert(ctx: &Ctx) -> Result<Output> {
    let spec = ctx.spec()?;
    let path = spec.deterministic()?;
    let series = ctx.series(spec.origin()?)?;
    let rec = recover_errors(&path, &series.values, series.start, &ctx.policy)?;
    emit(ctx.format(Format::Csv), &rec, || {
        let mut g = Grid::new(["t", "date", "eps_hat"]);
        for (i, v) in rec.values.iter().enumerate() {
            let t = rec.origin + i as Time;
            g.push(vec![t.to_string(), series.label(t), num(*v)]);
        }
        g
    })
}

#[derive(Serialize)]
struct BreaksOutput {
    #[serde(flatten)]
    result: SegmentationResult,
    /// Date labels of the selected model's breaks.
    break_dates: Vec<String>,
}

fn cmd_fit_breaks(ctx: &Ctx, p: usize, max_breaks: usize, min_seg: Option<usize>) -> Result<Output> {
    let origin = ctx.global.spec.as_ref().map(|_| ctx.spec()).transpose()?.map(|s| s.origin()).transpose()?.flatten();
    let series = ctx.series(origin)?;
    let result = fit_segmented_ar(&series.values, p, max_breaks, min_seg)?;
    let label = |i: usize| series.label(series.start + i as Time);
    let break_dates = result.best().breaks.iter().map(|&b| label(b)).collect();
    let out = BreaksOutput { result, break_dates };
    emit(ctx.format(Format::Json), &out, || {
        let mut g = Grid::new(["breaks", "ssr", "bic", "selected", "break_dates"]);
        for (l, f) in out.result.fits.iter().enumerate() {
            let dates: Vec<String> = f.breaks.iter().map(|&b| label(b)).collect();
            g.push(vec![
                l.to_string(),
                num(f.ssr),
                num(f.bic),
                (l == out.result.selected).to_string(),
                dates.join(" "),
            ]);
        }
        g
    })
}

#[derive(Serialize)]
struct PersistenceOutput {
    regime_spans: Vec<(String, String)>,
    #[serde(flatten)]
    report: PersistenceReport,
}

fn cmd_persistence(ctx: &Ctx, from: Option<&str>, to: Option<&str>) -> Result<Output> {
    let spec = ctx.spec()?;
    let path = spec.break_path()?;
    let cal = spec.calendar()?;
    let breaks = path.breaks();
    let from = from.map(|s| time_arg(s, cal)).transpose()?.unwrap_or(0);
    let to = to.map(|s| time_arg(s, cal)).transpose()?.unwrap_or(breaks.last().copied().unwrap_or(0).max(from) + 40);
    if to < from {
        return Err(CliError::Config("--to precedes --from".into()));
    }
    let report = persistence_measures(&path, from, to, &ctx.policy)?;
    let mut spans = Vec::new();
    let mut lo = String::from("-inf");
    for &b in breaks {
        spans.push((lo, cal.label(b)));
        lo = cal.label(b + 1);
    }
    spans.push((lo, "+inf".into()));
    let out = PersistenceOutput { regime_spans: spans, report };
    emit(ctx.format(Format::Json), &out, || {
        let mut g = Grid::new(["t", "date", "var", "p"]);
        for pt in &out.report.trajectory {
            g.push(vec![pt.t.to_string(), cal.label(pt.t), opt_num(pt.var), opt_num(pt.p)]);
        }
        g
    })
}

fn cmd_verify(ctx: &Ctx) -> Result<(Output, Result<()>)> {
    let checks = verify::run_all(ctx.global.seed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let verdict = if failed == 0 { Ok(()) } else { Err(CliError::VerifyFailed { failed }) };
    let out = emit(ctx.format(Format::Json), &checks, || {
        let mut g = Grid::new(["check", "passed", "detail"]);
        for c in &checks {
            g.push(vec![c.name.into(), c.passed.to_string(), c.detail.clone()]);
        }
        g
    })?;
    Ok((out, verdict))
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { crate::error::exit::CONFIG } else { crate::error::exit::OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => crate::error::exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
