//! `steinchart` - calibrate, evaluate, and run count control charts.
//!
//! Subcommands: `calibrate` (fit symmetric limits to a target in-control
//! ARL), `arl` (Monte-Carlo ARL of a design under a scenario), `table`
//! (run a built-in scenario grid), `monitor` (apply a design to a recorded
//! CSV series), and `pmf` (dump a distribution).
//!
//! Exit codes: 0 ok / no alarm, 2 alarm (monitor), 1 error.

mod config;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use config::load_job;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use steinchart::bench;
use steinchart::chart::run_series;
use steinchart::runlength::{
    calibrate_limit, estimate_arl, ArlConfig, CalibrationConfig, StopRule,
};

#[derive(Parser)]
#[command(
    name = "steinchart",
    version,
    about = "Control charts for count processes: design, calibration, ARL evaluation, monitoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master RNG seed (overrides the config value).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo replications (overrides the config value).
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Run-length cap per replication (overrides the config value).
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Write the primary (machine-readable) output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate symmetric control limits to a target in-control ARL.
    Calibrate {
        /// Job config (chart with {"target_arl0": ..} limits + in_control).
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate the ARL of a design under an in-/out-of-control scenario.
    Arl {
        /// Job config (chart with concrete limits, in_control, optional
        /// out_of_control and change_point).
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a built-in scenario grid and emit its ARL table.
    Table {
        /// Scenario id, or `list` to print the available ids.
        #[arg(long)]
        scenario: String,
    },
    /// Apply a chart design to a recorded count series from CSV.
    Monitor {
        /// Input CSV with header `t,count` (`t` optional, rows 1-indexed).
        #[arg(long)]
        csv: PathBuf,
        /// Job config (chart with concrete limits + in_control).
        #[arg(long)]
        config: PathBuf,
    },
    /// Dump a distribution's PMF, CDF, and moments.
    Pmf {
        /// Model config (a bare model object or a job config; the
        /// `in_control` entry is used).
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        replications: cli.replications,
        cap: cli.cap,
        out: cli.out,
    };
    let result = match cli.command {
        Command::Calibrate { config } => cmd_calibrate(&config, &overrides),
        Command::Arl { config } => cmd_arl(&config, &overrides),
        Command::Table { scenario } => cmd_table(&scenario, &overrides),
        Command::Monitor { csv, config } => cmd_monitor(&csv, &config, &overrides),
        Command::Pmf { config } => cmd_pmf(&config, &overrides),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

struct Overrides {
    seed: Option<u64>,
    replications: Option<usize>,
    cap: Option<u64>,
    out: Option<PathBuf>,
}

impl Overrides {
    /// Writes the primary output to `--out` or stdout.
    fn emit(&self, payload: &str) -> Result<(), String> {
        match &self.out {
            Some(path) => std::fs::write(path, payload)
                .map_err(|e| format!("cannot write {}: {e}", path.display())),
            None => {
                print!("{payload}");
                std::io::stdout().flush().map_err(|e| e.to_string())
            }
        }
    }
}

fn cmd_calibrate(config_path: &Path, overrides: &Overrides) -> Result<ExitCode, String> {
    let job = load_job(config_path)?;
    let in_control_dist = job.in_control.distribution()?;
    let (template, target) = job.chart.template(&in_control_dist)?;
    let model = job.in_control.process()?;
    let mut cfg = CalibrationConfig::new(target, overrides.seed.unwrap_or(job.seed));
    cfg.replications = overrides.replications.unwrap_or(job.replications);
    cfg.cap = overrides.cap.unwrap_or(job.cap);
    let result = calibrate_limit(&template, &model, &cfg).map_err(|e| e.to_string())?;

    let center = template
        .with_half_width(result.half_width)
        .map_err(|e| e.to_string())?;
    let limits = center.limits();
    let stop = match result.stop {
        StopRule::WithinTolerance => "within-tolerance",
        StopRule::BracketResolved => "bracket-resolved",
    };
    eprintln!(
        "calibrated L = {:.6} (LCL {:.6}, UCL {:.6}) after {} ARL evaluations [{stop}]",
        result.half_width, limits.lcl, limits.ucl, result.iterations
    );
    eprintln!(
        "achieved ARL0 = {:.2} +/- {:.2} (target {target}, R = {}, censored {})",
        result.achieved.arl, result.achieved.se, cfg.replications, result.achieved.censored
    );
    let payload = format!(
        "{{\"half_width\":{:.10},\"lcl\":{:.10},\"ucl\":{:.10},\"target_arl0\":{target},\
         \"achieved_arl\":{:.6},\"se\":{:.6},\"replications\":{},\"censored\":{},\
         \"iterations\":{},\"stop\":\"{stop}\"}}\n",
        result.half_width,
        limits.lcl,
        limits.ucl,
        result.achieved.arl,
        result.achieved.se,
        result.achieved.replications,
        result.achieved.censored,
        result.iterations,
    );
    overrides.emit(&payload)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_arl(config_path: &Path, overrides: &Overrides) -> Result<ExitCode, String> {
    let job = load_job(config_path)?;
    let design = job.chart.design(&job.in_control.distribution()?)?;
    let scenario = job.scenario()?;
    let cfg = ArlConfig {
        replications: overrides.replications.unwrap_or(job.replications),
        cap: overrides.cap.unwrap_or(job.cap),
        seed: overrides.seed.unwrap_or(job.seed),
    };
    let est = estimate_arl(&design, &scenario, &cfg).map_err(|e| e.to_string())?;
    eprintln!(
        "ARL = {:.2} +/- {:.2} (R = {}, censored {}/{}, cap {}){}",
        est.arl,
        est.se,
        est.replications,
        est.censored,
        est.replications,
        est.cap,
        if est.is_lower_bound() {
            " [lower bound]"
        } else {
            ""
        }
    );
    let payload = format!(
        "{{\"arl\":{:.6},\"se\":{:.6},\"replications\":{},\"censored\":{},\"cap\":{},\
         \"lower_bound\":{}}}\n",
        est.arl,
        est.se,
        est.replications,
        est.censored,
        est.cap,
        est.is_lower_bound()
    );
    overrides.emit(&payload)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_table(scenario_id: &str, overrides: &Overrides) -> Result<ExitCode, String> {
    if scenario_id == "list" {
        let mut listing = String::new();
        for s in bench::builtin_scenarios() {
            listing.push_str(&format!("{:<16} {}\n", s.id, s.description));
        }
        overrides.emit(&listing)?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut scenario = bench::lookup_scenario(scenario_id).ok_or_else(|| {
        format!("unknown scenario '{scenario_id}' (try `steinchart table --scenario list`)")
    })?;
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    if let Some(replications) = overrides.replications {
        scenario.replications = replications;
    }
    if let Some(cap) = overrides.cap {
        scenario.cap = cap;
    }
    let rows = scenario.run().map_err(|e| e.to_string())?;
    eprint!("{}", bench::to_text(&scenario, &rows));
    overrides.emit(&bench::to_csv(&rows))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_monitor(
    csv_path: &Path,
    config_path: &Path,
    overrides: &Overrides,
) -> Result<ExitCode, String> {
    let job = load_job(config_path)?;
    let design = job.chart.design(&job.in_control.distribution()?)?;
    let counts = read_count_csv(csv_path, design.in_control().bound())?;
    if counts.is_empty() {
        return Err(format!("{}: no observations", csv_path.display()));
    }
    let series: Vec<u64> = counts.iter().map(|(_, c)| *c).collect();
    let result = run_series(&design, &series).map_err(|e| e.to_string())?;
    let limits = design.limits();
    let mut payload = String::from("t,count,z,lcl,ucl,alarm\n");
    for (point, (t, _)) in result.points.iter().zip(&counts) {
        payload.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{}\n",
            t, point.count, point.z, limits.lcl, limits.ucl, point.alarm
        ));
    }
    overrides.emit(&payload)?;
    match result.first_alarm {
        Some(t) => {
            let label = counts[(t - 1) as usize].0;
            eprintln!("first alarm at t = {label} ({} observations)", counts.len());
            Ok(ExitCode::from(2))
        }
        None => {
            eprintln!("no alarm ({} observations)", counts.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Reads `t,count` (or `count`-only) CSV rows; rows are 1-indexed when `t`
/// is absent. Bounded designs reject counts above `n` with the line number.
fn read_count_csv(path: &Path, bound: Option<u64>) -> Result<Vec<(u64, u64)>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let count_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("count"))
        .ok_or_else(|| format!("{}: header must name a `count` column", path.display()))?;
    let t_idx = headers.iter().position(|h| h.eq_ignore_ascii_case("t"));
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let raw = record
            .get(count_idx)
            .ok_or_else(|| format!("line {line}: missing count field"))?;
        let count: u64 = raw
            .parse()
            .map_err(|_| format!("line {line}: `{raw}` is not a nonnegative integer count"))?;
        if let Some(n) = bound {
            if count > n {
                return Err(format!("line {line}: count {count} exceeds n = {n}"));
            }
        }
        let t = match t_idx {
            Some(idx) => {
                let raw_t = record
                    .get(idx)
                    .ok_or_else(|| format!("line {line}: missing t field"))?;
                raw_t
                    .parse()
                    .map_err(|_| format!("line {line}: `{raw_t}` is not a valid time index"))?
            }
            None => i as u64 + 1,
        };
        rows.push((t, count));
    }
    Ok(rows)
}

fn cmd_pmf(config_path: &Path, overrides: &Overrides) -> Result<ExitCode, String> {
    // Accept either a bare model object or a full job config.
    let model = config::load_model(config_path).or_else(|model_err| {
        load_job(config_path)
            .map(|job| job.in_control)
            .map_err(|_| model_err)
    })?;
    let dist = model.distribution()?;
    let m = dist.moments();
    let index_name = match m.index_kind {
        steinchart::dist::IndexKind::Poisson => "I_P",
        steinchart::dist::IndexKind::Binomial => "I_B",
    };
    eprintln!(
        "{:?}: mean = {:.6}, variance = {:.6}, {index_name} = {:.6}",
        dist.family(),
        m.mean,
        m.variance,
        m.dispersion_index
    );
    let x_max = dist.support_truncation(1e-9);
    let mut payload = String::from("x,pmf,cdf\n");
    for x in 0..=x_max {
        payload.push_str(&format!("{x},{:.12e},{:.12e}\n", dist.pmf(x), dist.cdf(x)));
    }
    overrides.emit(&payload)?;
    Ok(ExitCode::SUCCESS)
}
