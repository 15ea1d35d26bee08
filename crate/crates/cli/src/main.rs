use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vnacal_cli::commands::{
    run_cal_mtrl, run_cal_solr, run_characterize, run_check, run_correct, run_report, Outcome, DEFAULT_THRESHOLD_DB,
};
use vnacal_cli::error::{exit, CliError, Result};
use vnacal_cli::io::read_text;
use vnacal_cli::scenario::parse_scenario;
use vnacal_cli::simulate::simulate_measurements;
use vnacal_core::solvers::port_label;
use vnacal_core::standards::ThresholdQuantity;

#[derive(Parser)]
#[command(name = "vnacal", version, about = "On-wafer VNA calibration: SOLR, multiline TRL and standard characterization")]
struct Cli {
    /// Directory searched for `--config` files given by relative path.
    #[arg(long, env = "VNACAL_CONFIG_DIR", global = true)]
    config_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate raw measurements, ground truth and a session from a scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// SOLR calibration over every pair in a session.
    CalSolr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Load |S11| threshold in dB for the validity report.
        #[arg(long, allow_hyphen_values = true)]
        threshold_db: Option<f64>,
    },
    /// Multiline TRL between the session's [mtrl] ports.
    CalMtrl {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// De-embed and fit the short, open and load with mTRL terms.
    Characterize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        threshold_db: Option<f64>,
    },
    /// Apply a saved model to a raw DUT measurement.
    Correct {
        model: PathBuf,
        dut: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Model ports the DUT ports are connected to, e.g. `0,2`.
        #[arg(long, value_delimiter = ',')]
        ports: Option<Vec<usize>>,
    },
    /// Threshold report on a Touchstone file.
    Report {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_THRESHOLD_DB)]
        threshold_db: f64,
        #[arg(long, value_enum, default_value_t = Quantity::S11)]
        quantity: Quantity,
    },
    /// Reciprocity and passivity check on a Touchstone file.
    Check {
        file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ports: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    S11,
    Reciprocity,
}

fn config_path(path: &Path, dir: Option<&Path>) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() && !path.exists() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn print_written<R>(o: &Outcome<R>) {
    for p in &o.written {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<i32> {
    let dir = cli.config_dir.as_deref();
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let path = config_path(&config, dir);
            let mut scn = parse_scenario(&read_text(&path)?).map_err(|e| CliError::parse(&path, e))?;
            if let Some(s) = seed {
                scn.seed = s;
            }
            let base = path.parent().unwrap_or(Path::new(""));
            let m = simulate_measurements(&scn, base, &out)?;
            println!("simulated {} ports, {} points, seed {}: {} raw files in {}", m.ports, m.points, m.seed, m.raw.len(), out.display());
            Ok(exit::OK)
        }
        Command::CalSolr { config, out, threshold_db } => {
            let o = run_cal_solr(&config_path(&config, dir), &out, threshold_db)?;
            let r = &o.report;
            println!("SOLR: {} ports, {} pairs, {} points", r.ports, r.pairs.len(), r.points);
            for p in &r.pairs {
                println!(
                    "  pair {}-{}: delay estimate {:.3} ps, sign margin {:.3} rad, thru phase check {}, corrected-thru reciprocity {:.2e}",
                    p.labels[0],
                    p.labels[1],
                    p.delay_estimate * 1e12,
                    p.sign_margin_rad,
                    if p.thru_phase_check_passed { "passed" } else { "FAILED" },
                    p.corrected_thru_reciprocity_max
                );
            }
            println!("  k consistency residual {:.2e}", r.k_consistency_residual);
            println!("  load threshold {} dB: {}", r.load_threshold.threshold_db, r.load_threshold.summary);
            if let Some(v) = &r.validation {
                println!("  validation: corrected DUT max |dS| = {:.3e}", v.max_abs_error);
            }
            print_written(&o);
            Ok(o.exit_code)
        }
        Command::CalMtrl { config, out } => {
            let o = run_cal_mtrl(&config_path(&config, dir), &out)?;
            let r = &o.report;
            println!(
                "mTRL: ports {}-{}, {} lines, {} points, {} flagged",
                port_label(r.ports[0]),
                port_label(r.ports[1]),
                r.lines.len(),
                r.points,
                r.gamma.flagged.iter().filter(|&&f| f).count()
            );
            for (a, b) in &r.gamma.flagged_bands_hz {
                println!("  degenerate band {:.3}-{:.3} GHz", a / 1e9, b / 1e9);
            }
            if let Some(v) = &r.validation {
                println!("  validation: corrected DUT max |dS| = {:.3e}", v.max_abs_error);
            }
            print_written(&o);
            Ok(o.exit_code)
        }
        Command::Characterize { config, out, threshold_db } => {
            let o = run_characterize(&config_path(&config, dir), &out, threshold_db)?;
            let r = &o.report;
            println!("characterized standards at port {}", port_label(r.port));
            println!("  short L0..L3 = {:?} (rms residual {:.2e})", r.short.coeffs, r.short.rms_residual);
            println!("  open C0..C3 = {:?} (rms residual {:.2e})", r.open.coeffs, r.open.rms_residual);
            println!("  load threshold {} dB: {}", r.load_threshold.threshold_db, r.load_threshold.summary);
            print_written(&o);
            Ok(o.exit_code)
        }
        Command::Correct { model, dut, out, ports } => {
            let o = run_correct(&model, &dut, &out, ports)?;
            let r = &o.report;
            println!(
                "corrected {} on ports {:?}: reciprocity error max {:.2e}, passivity margin min {:.3}",
                dut.display(),
                r.ports,
                r.reciprocity_error_max,
                r.passivity_margin_min
            );
            print_written(&o);
            Ok(o.exit_code)
        }
        Command::Report { file, threshold_db, quantity } => {
            let q = match quantity {
                Quantity::S11 => ThresholdQuantity::S11Below,
                Quantity::Reciprocity => ThresholdQuantity::S21Reciprocity,
            };
            let o = run_report(&file, threshold_db, q)?;
            println!("{}: threshold {} dB: {}", file.display(), threshold_db, o.report.summary);
            Ok(o.exit_code)
        }
        Command::Check { file, ports, tol } => {
            let o = run_check(&file, ports, tol)?;
            let r = &o.report;
            println!(
                "{}: reciprocity error max {:.3e} ({}), passivity margin min {:.3e} ({})",
                file.display(),
                r.reciprocity_error_max,
                if r.reciprocal { "ok" } else { "FAIL" },
                r.passivity_margin_min,
                if r.passive { "ok" } else { "FAIL" }
            );
            Ok(o.exit_code)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
