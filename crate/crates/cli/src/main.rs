use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::NaiveDateTime;
use clap::{Args, Parser, Subcommand};

use loadcast::io::{
    ingest_load, ingest_solar, read_report_json, write_records, write_report_json,
    write_report_table, write_series_file, LOAD_COLUMN, SOLAR_COLUMN,
};
use loadcast::{
    build_forecaster, generate, run_simulation, Error, GridSpec, History, LoadSeries, RunConfig,
    SeriesView, SynthConfig,
};

#[derive(Parser)]
#[command(
    name = "loadcast",
    version,
    about = "Short-term electricity load forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rolling-origin backtest of the configured models.
    Simulate(SimulateArgs),
    /// Train one model on a load file and print a single forecast block.
    Forecast(ForecastArgs),
    /// Write a synthetic load (and solar) dataset.
    Synth(SynthArgs),
    /// Combine report.json files into one relative-RMSE table.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `load` in the config.
    #[arg(long)]
    load: Option<PathBuf>,
    #[arg(long)]
    solar: Option<PathBuf>,
    /// Overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForecastArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    solar: Option<PathBuf>,
    /// Forecast origin; defaults to the start of the day after the data.
    #[arg(long)]
    at: Option<String>,
    /// Length such as `24h` or `4h`; must stay within the origin's day.
    #[arg(long, default_value = "24h")]
    horizon: String,
    /// JSON parameter block for the model.
    #[arg(long)]
    params: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving load.csv and solar.csv.
    #[arg(long)]
    out: PathBuf,
    /// JSON generator settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    shift_probability: Option<f64>,
    #[arg(long)]
    no_solar: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if args.load.is_some() {
        cfg.load = args.load;
    }
    if args.solar.is_some() {
        cfg.solar = args.solar;
    }
    if args.out.is_some() {
        cfg.output_dir = args.out;
    }
    cfg.validate()?;
    let load_path = cfg
        .load
        .clone()
        .ok_or_else(|| Error::InvalidConfig("no load file given".into()))?;
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::InvalidConfig("no output directory given".into()))?;

    let load = ingest_load(&load_path, cfg.grid)?;
    let solar = cfg
        .solar
        .as_deref()
        .map(|p| ingest_solar(p, cfg.grid))
        .transpose()?;
    let run = run_simulation(&load, solar.as_ref(), &cfg.to_sim_config())?;

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_records(
        BufWriter::new(File::create(out.join("records.csv"))?),
        &run.records,
    )?;
    write_report_json(
        BufWriter::new(File::create(out.join("report.json"))?),
        &run.report,
    )?;
    write_report_table(
        BufWriter::new(File::create(out.join("report.csv"))?),
        std::slice::from_ref(&run.report),
    )?;
    for m in &run.report.models {
        log::info!("{}: relative RMSE {:?}", m.model, m.full.relative_rmse);
    }
    Ok(())
}

fn parse_horizon(text: &str, grid: &GridSpec) -> Result<usize, Error> {
    let hours: usize = text
        .strip_suffix('h')
        .and_then(|h| h.parse().ok())
        .filter(|&h| h > 0)
        .ok_or_else(|| {
            Error::InvalidConfig(format!("horizon `{text}` is not of the form <hours>h"))
        })?;
    Ok(hours * grid.intervals_per_hour())
}

fn parse_at(text: &str) -> Result<NaiveDateTime, Error> {
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
        .or_else(|| {
            chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
        .ok_or_else(|| Error::InvalidConfig(format!("cannot parse timestamp `{text}`")))
}

/// Global interval index of `at` in a series whose calendar is extended by one day.
fn origin_index(
    calendar: &[chrono::NaiveDate],
    grid: &GridSpec,
    at: NaiveDateTime,
) -> Result<usize, Error> {
    let k = grid.intervals_per_day();
    let d = calendar
        .iter()
        .position(|&date| date == at.date())
        .ok_or_else(|| {
            Error::InvalidData(format!(
                "{} is not a day of the training data or the day after",
                at.date()
            ))
        })?;
    let minutes = (at - at.date().and_hms_opt(0, 0, 0).unwrap()).num_minutes();
    let step = grid.interval_minutes as i64;
    if minutes % step != 0 {
        return Err(Error::InvalidConfig(format!(
            "{at} is not on the {step}-minute grid"
        )));
    }
    Ok(d * k + (minutes / step) as usize)
}

fn forecast(args: ForecastArgs) -> anyhow::Result<()> {
    let params: Option<serde_json::Value> = args
        .params
        .as_deref()
        .map(serde_json::from_str)
        .transpose()
        .map_err(|e| Error::InvalidConfig(format!("--params: {e}")))?;
    let mut model = build_forecaster(&args.model, params.as_ref(), args.seed)?;
    let grid = GridSpec::default();
    let horizon = parse_horizon(&args.horizon, &grid)?;
    let at = args.at.as_deref().map(parse_at).transpose()?;

    let load = ingest_load(&args.train, grid)?;
    let calendar = load.extended_calendar(1);
    let k = grid.intervals_per_day();
    let origin = match at {
        Some(at) => origin_index(&calendar, &grid, at)?,
        None => load.len(),
    };
    if origin > load.len() {
        bail!(Error::InsufficientHistory(format!(
            "origin {} lies after the end of the training data",
            at.map(|a| a.to_string()).unwrap_or_default()
        )));
    }
    let solar = match &args.solar {
        Some(p) => Some(solar_for(&ingest_solar(p, grid)?, &load, origin + horizon)?),
        None => None,
    };
    let history = History {
        load: SeriesView {
            grid,
            calendar: &calendar,
            values: load.values(),
        },
        solar: solar.as_deref(),
    };
    let day = origin / k;
    if day < model.min_history_days() {
        bail!(Error::InsufficientHistory(format!(
            "{} needs {} complete days before the origin, found {day}",
            args.model,
            model.min_history_days()
        )));
    }
    model.retrain(&history, day)?;
    let values = model.forecast(&history, origin, horizon)?;

    let mut w = BufWriter::new(io::stdout().lock());
    writeln!(w, "model,origin,target_ts,forecast_kw")?;
    let origin_ts = history.load.timestamp(origin).format("%Y-%m-%dT%H:%M:%S");
    for (i, v) in values.iter().enumerate() {
        let ts = history
            .load
            .timestamp(origin + i)
            .format("%Y-%m-%dT%H:%M:%S");
        writeln!(w, "{},{origin_ts},{ts},{v}", args.model)?;
    }
    w.flush()?;
    Ok(())
}

/// Solar values aligned with the load days, covering at least `until` intervals.
fn solar_for(solar: &LoadSeries, load: &LoadSeries, until: usize) -> Result<Vec<f64>, Error> {
    let n = load.num_days();
    if solar.dates().len() < n || solar.dates()[..n] != *load.dates() {
        return Err(Error::InvalidData(
            "solar days do not match the training days".into(),
        ));
    }
    if solar.len() < until {
        return Err(Error::InvalidData(
            "solar data does not cover the forecast window".into(),
        ));
    }
    Ok(solar.values().to_vec())
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => serde_json::from_str::<SynthConfig>(&fs::read_to_string(p)?)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?,
        None => SynthConfig::default(),
    };
    if let Some(d) = args.days {
        cfg.days = d;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.noise_std {
        cfg.noise_std = s;
    }
    if let Some(p) = args.shift_probability {
        cfg.shift_probability = p;
    }
    if args.no_solar {
        cfg.solar = false;
    }
    let out = generate(&cfg)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_series_file(&args.out.join("load.csv"), &out.load, LOAD_COLUMN)?;
    if let Some(solar) = &out.solar {
        write_series_file(&args.out.join("solar.csv"), solar, SOLAR_COLUMN)?;
    }
    Ok(())
}

fn report(args: ReportArgs) -> anyhow::Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| read_report_json(p).with_context(|| format!("reading {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    match &args.out {
        Some(p) => write_report_table(BufWriter::new(File::create(p)?), &reports)?,
        None => write_report_table(io::stdout().lock(), &reports)?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_usage() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Forecast(a) => forecast(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
