use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use capselect::experiments::config::parse_override;
use capselect::experiments::report::collect_summaries;
use capselect::experiments::run::build_truth;
use capselect::experiments::truth::{write_coeffs_csv, write_egm2008};
use capselect::experiments::{report_csv, report_series, run_series, ExperimentConfig, Scenario};
use capselect::quadrature::{check_exactness, CapGeometry, QuadratureRule};
use capselect::{Error, Result};

/// Candidate selection for potential reconstructions on a spherical cap.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a preset instead of a file.
    #[arg(long, value_parser = ["case1", "case1-small", "case2"])]
    preset: Option<String>,
    /// Override a single key, e.g. `--set eps1=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("--config and --preset are exclusive".into()))
            }
            (Some(p), None) => ExperimentConfig::from_file(p)?,
            (None, Some(s)) => ExperimentConfig::preset(s.parse::<Scenario>()?),
            (None, None) => ExperimentConfig::preset(Scenario::Case1),
        };
        let entries = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        cfg.apply(&entries)?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthFormat {
    Csv,
    Egm,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report the exactness defect of the configured cap rule.
    CheckQuadrature {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Gram degree L to test; defaults to half the required exactness.
        #[arg(long)]
        degree: Option<usize>,
        /// Also write the cap rule nodes and weights to this CSV.
        #[arg(long)]
        export_rule: Option<PathBuf>,
    },
    /// Write the reference potential coefficients.
    GenTruth {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TruthFormat,
    },
    /// Run the experiment and write CSV artifacts.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of noise realizations (seeds noise_seed, noise_seed+1, ...).
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the artifacts of earlier runs.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn execute(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::CheckQuadrature {
            cfg,
            degree,
            export_rule,
        } => {
            let cfg = cfg.load()?;
            let rule = QuadratureRule::cap(CapGeometry::new(cfg.r, cfg.rho)?, cfg.cap_exactness);
            let l = degree.unwrap_or(cfg.required_cap_exactness() / 2);
            let defect = check_exactness(&rule, l);
            println!(
                "cap rule: {} nodes ({} rings x {} longitudes), exactness {}",
                rule.len(),
                rule.n_rings(),
                rule.n_lon(),
                rule.exactness_degree()
            );
            println!("required exactness {}", cfg.required_cap_exactness());
            println!("Gram defect at L = {l}: {defect:.3e}");
            if let Some(p) = export_rule {
                rule.write_csv(BufWriter::new(File::create(p)?))?;
            }
            if cfg.cap_exactness < cfg.required_cap_exactness() {
                warn!("cap rule is below the required exactness");
            }
            Ok(())
        }
        Cmd::GenTruth { cfg, out, format } => {
            let cfg = cfg.load()?;
            let truth = build_truth(&cfg)?;
            let w = BufWriter::new(File::create(&out)?);
            match format {
                TruthFormat::Csv => write_coeffs_csv(&truth, w),
                TruthFormat::Egm => write_egm2008(&truth, w),
            }
        }
        Cmd::Run { cfg, repeat, out } => {
            let mut cfg = cfg.load()?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if repeat == 0 {
                return Err(Error::Config("--repeat must be at least 1".into()));
            }
            let runs = run_series(&cfg, repeat)?;
            if repeat == 1 {
                report_csv(&runs[0], &cfg.output_dir)?;
            } else {
                report_series(&runs, &cfg.output_dir)?;
            }
            for (i, r) in runs.iter().enumerate() {
                let rep = &r.report;
                println!(
                    "run {}: k* = {} err* = {:.4e}  k_opt = {} err_opt = {:.4e}  err_av = {:.4e}  bound {}",
                    i + 1,
                    rep.k_star + 1,
                    rep.err_star.unwrap_or(f64::NAN),
                    rep.k_opt.map_or(0, |k| k + 1),
                    rep.err_opt.unwrap_or(f64::NAN),
                    rep.err_av.unwrap_or(f64::NAN),
                    if r.theorem.holds { "holds" } else { "VIOLATED" }
                );
            }
            println!("artifacts in {}", cfg.output_dir.display());
            Ok(())
        }
        Cmd::Report { dir } => {
            let rows = collect_summaries(&dir)?;
            if rows.is_empty() {
                return Err(Error::Config(format!("no summary.csv under {}", dir.display())));
            }
            println!("{:<40} {:>12} {:>12} {:>12} {:>12} {:>5}", "run", "err_star", "err_opt", "err_max", "err_av", "bound");
            let mut better = 0;
            for (p, s) in &rows {
                let name = p.parent().map_or(p.clone(), |d| d.to_path_buf());
                println!(
                    "{:<40} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>5}",
                    name.display(),
                    s.err_star,
                    s.err_opt,
                    s.err_max,
                    s.err_av,
                    if s.bound_holds { "ok" } else { "FAIL" }
                );
                if s.err_star < s.err_av {
                    better += 1;
                }
            }
            println!("err_star < err_av in {better} of {} runs", rows.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
