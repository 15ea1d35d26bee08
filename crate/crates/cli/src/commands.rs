//! Subcommand bodies. Each writes its outputs and returns a report plus the
//! exit code; the binary only parses arguments and prints.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vnacal_core::error_model::{correct_multiport, MultiPortCalModel, OnePortTerms};
use vnacal_core::solvers::{
    build_fourport_cal, characterize_standards, check_thru_phase, port_label, solve_mtrl, solve_solr, PairwiseCal,
};
use vnacal_core::sparams::{db20, passivity_margin, reciprocity_error, unwrap_phase, FrequencyGrid, Network, C64};
use vnacal_core::standards::{threshold_report, ThresholdQuantity, Validity};

use crate::error::{exit, CliError, Result};
use crate::io::{read_cal, read_network, write_cal, write_json, write_network, write_text};
use crate::session::{DefinitionFiles, LoadedSession};

pub const DEFAULT_THRESHOLD_DB: f64 = -15.0;

#[derive(Debug, Clone, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Complex { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermsReport {
    pub port: usize,
    pub label: String,
    pub e00_max: f64,
    pub e11_max: f64,
    pub tracking_min: f64,
    pub tracking_max: f64,
}

impl TermsReport {
    fn new(port: usize, t: &OnePortTerms) -> Self {
        let max = |v: &[C64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let min = |v: &[C64]| v.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        TermsReport {
            port,
            label: port_label(port),
            e00_max: max(&t.e00),
            e11_max: max(&t.e11),
            tracking_min: min(&t.tracking),
            tracking_max: max(&t.tracking),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSummary {
    pub quantity: ThresholdQuantity,
    pub threshold_db: f64,
    pub valid_up_to: Validity,
    pub summary: String,
    pub value_db: Vec<f64>,
}

pub fn threshold_summary(net: &Network, threshold_db: f64, quantity: ThresholdQuantity) -> ThresholdSummary {
    let r = threshold_report(net, threshold_db, quantity);
    ThresholdSummary {
        quantity,
        threshold_db,
        valid_up_to: r.valid_up_to,
        summary: r.valid_up_to.summary(net.grid()),
        value_db: r.value_db,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ports: Vec<usize>,
    /// max over frequency and entries of |S_corrected − S_truth|.
    pub max_abs_error: f64,
}

fn validate(session: &LoadedSession, model: &MultiPortCalModel, default_ports: &[usize]) -> Result<Option<ValidationReport>> {
    let Some(v) = &session.session.validation else { return Ok(None) };
    let raw = session.network(&v.dut_raw, Some(model.grid()))?;
    let truth = session.network(&v.dut_truth, Some(model.grid()))?;
    let ports = v.ports.clone().unwrap_or_else(|| default_ports[..raw.n_ports().min(default_ports.len())].to_vec());
    let corrected = correct_multiport(&model.restrict(&ports)?, &raw)?;
    truth.ensure_compatible(&corrected)?;
    Ok(Some(ValidationReport { ports, max_abs_error: corrected.max_abs_diff(&truth) }))
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub ports: [usize; 2],
    pub labels: [String; 2],
    pub delay_estimate: f64,
    pub sign_margin_rad: f64,
    pub thru_phase_check_passed: bool,
    pub thru_phase_worst_deviation_rad: f64,
    pub corrected_thru_reciprocity_max: f64,
    pub k: Vec<Complex>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolrReport {
    pub method: &'static str,
    pub ports: usize,
    pub points: usize,
    pub terms: Vec<TermsReport>,
    pub pairs: Vec<PairReport>,
    pub k_consistency_residual: f64,
    pub shared_port_residual: f64,
    pub load_threshold: ThresholdSummary,
    pub validation: Option<ValidationReport>,
    pub freq_hz: Vec<f64>,
}

pub struct Outcome<R> {
    pub report: R,
    pub exit_code: i32,
    pub written: Vec<PathBuf>,
}

/// SOLR over every `[[pair]]`, merged into one n-port model.
pub fn run_cal_solr(config: &Path, out: &Path, threshold_db: Option<f64>) -> Result<Outcome<SolrReport>> {
    let session = LoadedSession::load(config)?;
    let threshold_db = threshold_db.or(session.session.threshold_db).unwrap_or(DEFAULT_THRESHOLD_DB);
    let grid = session.grid()?;
    let n_ports = session.session.ports.len();
    if session.session.pairs.is_empty() {
        return Err(CliError::Usage(format!("{}: no [[pair]] entries", config.display())));
    }
    let mut pairwise = Vec::new();
    let mut pairs = Vec::new();
    for (files, input) in session.solr_inputs(&grid)? {
        let [i, j] = files.ports;
        let ctx = format!("SOLR pair {}-{}", port_label(i), port_label(j));
        log::info!("{ctx}: delay estimate {:.3e} s", input.delay_estimate);
        let result = solve_solr(&input).map_err(|e| CliError::solver(&ctx, e))?;
        let corrected = correct_multiport(&result.model, &input.thru).map_err(|e| CliError::solver(&ctx, e))?;
        let check = check_thru_phase(&corrected, input.delay_estimate).map_err(|e| CliError::solver(&ctx, e))?;
        if !check.passed {
            log::warn!("{ctx}: corrected thru phase deviates {:.3} rad at {:.3e} Hz", check.worst_deviation, check.worst_freq);
        }
        pairs.push(PairReport {
            ports: files.ports,
            labels: [port_label(i), port_label(j)],
            delay_estimate: input.delay_estimate,
            sign_margin_rad: result.sign_margin,
            thru_phase_check_passed: check.passed,
            thru_phase_worst_deviation_rad: check.worst_deviation,
            corrected_thru_reciprocity_max: reciprocity_error(&corrected).into_iter().fold(0.0, f64::max),
            k: result.k.iter().copied().map(Complex::from).collect(),
        });
        pairwise.push(PairwiseCal { ports: (i, j), model: result.model });
    }
    let cal = build_fourport_cal(n_ports, &pairwise).map_err(|e| CliError::solver("merging pairs", e))?;
    let defs = session.definitions(&grid)?;
    let load_threshold = threshold_summary(&defs[2], threshold_db, ThresholdQuantity::S11Below);
    let all: Vec<usize> = (0..n_ports).collect();
    let validation = validate(&session, &cal.model, &all)?;
    let report = SolrReport {
        method: "solr",
        ports: n_ports,
        points: grid.len(),
        terms: cal.model.boxes().iter().enumerate().map(|(p, b)| TermsReport::new(p, &b.terms)).collect(),
        pairs,
        k_consistency_residual: cal.consistency_residual,
        shared_port_residual: cal.shared_port_residual,
        load_threshold,
        validation,
        freq_hz: grid.points().to_vec(),
    };
    let cal_path = out.join("solr.cal");
    let report_path = out.join("solr-report.json");
    write_cal(&cal_path, &cal.model, session.pack.z_ref)?;
    write_json(&report_path, &report)?;
    let exit_code = if report.load_threshold.valid_up_to == Validity::Nowhere { exit::CRITERION } else { exit::OK };
    Ok(Outcome { report, exit_code, written: vec![cal_path, report_path] })
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub alpha_np_per_m: Vec<f64>,
    pub beta_rad_per_m: Vec<f64>,
    pub eps_eff: Vec<f64>,
    pub residual: Vec<f64>,
    pub flagged: Vec<bool>,
    pub flagged_bands_hz: Vec<(f64, f64)>,
    pub valid_bands_hz: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MtrlReport {
    pub method: &'static str,
    pub ports: [usize; 2],
    pub points: usize,
    pub lines: Vec<f64>,
    pub terms: Vec<TermsReport>,
    pub gamma: GammaReport,
    pub reflect_gamma: Vec<Complex>,
    pub validation: Option<ValidationReport>,
    pub freq_hz: Vec<f64>,
}

/// Complement of `flagged` as (first, last) frequency runs.
pub fn valid_bands(grid: &FrequencyGrid, flagged: &[bool]) -> Vec<(f64, f64)> {
    let f = grid.points();
    let mut bands = Vec::new();
    let mut start = None;
    for i in 0..=f.len() {
        let ok = i < f.len() && !flagged[i];
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                bands.push((f[s], f[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    bands
}

const C0: f64 = 299_792_458.0;

fn solve_session_mtrl(session: &LoadedSession, grid: &FrequencyGrid) -> Result<(crate::session::MtrlFiles, vnacal_core::solvers::MtrlResult)> {
    let (files, input) = session.mtrl_input(grid)?;
    let result = solve_mtrl(&input).map_err(|e| CliError::solver("mTRL", e))?;
    for (a, b) in result.gamma.flagged_bands() {
        log::warn!("mTRL: all line pairs degenerate from {a:.4e} Hz to {b:.4e} Hz");
    }
    Ok((files, result))
}

/// Multiline TRL between the two `[mtrl]` ports.
pub fn run_cal_mtrl(config: &Path, out: &Path) -> Result<Outcome<MtrlReport>> {
    let session = LoadedSession::load(config)?;
    let grid = session.grid()?;
    let (files, result) = solve_session_mtrl(&session, &grid)?;
    let g = &result.gamma;
    let gamma = GammaReport {
        alpha_np_per_m: g.gamma.iter().map(|z| z.re).collect(),
        beta_rad_per_m: g.gamma.iter().map(|z| z.im).collect(),
        eps_eff: g.gamma.iter().zip(grid.points()).map(|(z, f)| (z.im * C0 / (2.0 * PI * f)).powi(2)).collect(),
        residual: g.residual.clone(),
        flagged: g.flagged.clone(),
        flagged_bands_hz: g.flagged_bands(),
        valid_bands_hz: valid_bands(&grid, &g.flagged),
    };
    let on_mtrl_ports = session.session.validation.as_ref().is_some_and(|v| v.ports.as_deref() == Some(&files.ports[..]));
    let validation = if on_mtrl_ports {
        let mut local = session.clone();
        if let Some(v) = &mut local.session.validation {
            v.ports = Some(vec![0, 1]);
        }
        validate(&local, &result.model, &[0, 1])?.map(|mut r| {
            r.ports = files.ports.to_vec();
            r
        })
    } else {
        None
    };
    let report = MtrlReport {
        method: "mtrl",
        ports: files.ports,
        points: grid.len(),
        lines: files.lines.iter().map(|l| l.length).collect(),
        terms: vec![TermsReport::new(files.ports[0], &result.terms_a), TermsReport::new(files.ports[1], &result.terms_b)],
        gamma,
        reflect_gamma: result.reflect_gamma.iter().copied().map(Complex::from).collect(),
        validation,
        freq_hz: grid.points().to_vec(),
    };
    let cal_path = out.join("mtrl.cal");
    let report_path = out.join("mtrl-report.json");
    write_cal(&cal_path, &result.model, session.pack.z_ref)?;
    write_json(&report_path, &report)?;
    Ok(Outcome { report, exit_code: exit::OK, written: vec![cal_path, report_path] })
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub coeffs: [f64; 4],
    pub rms_residual: f64,
    pub max_residual: f64,
    pub condition: f64,
    pub iterations: usize,
}

impl From<&vnacal_core::standards::ReflectFit> for FitReport {
    fn from(f: &vnacal_core::standards::ReflectFit) -> Self {
        FitReport {
            coeffs: f.model.coeffs,
            rms_residual: f.rms_residual,
            max_residual: f.max_residual,
            condition: f.condition,
            iterations: f.iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterizeReport {
    pub port: usize,
    pub short: FitReport,
    pub open: FitReport,
    pub load_threshold: ThresholdSummary,
}

/// Standard characterization: mTRL terms de-embed the raw short, open and
/// load of the first `[mtrl]` port. Writes the de-embedded definitions and a
/// copy of the session that uses them.
pub fn run_characterize(config: &Path, out: &Path, threshold_db: Option<f64>) -> Result<Outcome<CharacterizeReport>> {
    let session = LoadedSession::load(config)?;
    let threshold_db = threshold_db.or(session.session.threshold_db).unwrap_or(DEFAULT_THRESHOLD_DB);
    let grid = session.grid()?;
    let (files, result) = solve_session_mtrl(&session, &grid)?;
    let port = files.ports[0];
    let raw = session.raw_sol(port, &grid)?;
    let c = characterize_standards(&result.terms_a, [&raw[0], &raw[1], &raw[2]])
        .map_err(|e| CliError::solver("characterization", e))?;
    let mut written = Vec::new();
    let names = ["short", "open", "load"];
    for (name, net) in names.iter().zip(&c.definitions) {
        let path = out.join(format!("char/{name}.s1p"));
        write_network(&path, net, &[format!("{name} de-embedded with mTRL port {} terms", port_label(port))])?;
        written.push(path);
    }
    let report = CharacterizeReport {
        port,
        short: (&c.short_fit).into(),
        open: (&c.open_fit).into(),
        load_threshold: threshold_summary(&c.load_gamma, threshold_db, ThresholdQuantity::S11Below),
    };
    let report_path = out.join("characterization.json");
    write_json(&report_path, &report)?;
    written.push(report_path);

    let abs = |rel: &str| -> Result<String> {
        let p = session.file(rel);
        let p = std::path::absolute(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p.to_string_lossy().into_owned())
    };
    let mut s = session.session.clone();
    for p in &mut s.ports {
        p.short = abs(&p.short)?;
        p.open = abs(&p.open)?;
        p.load = abs(&p.load)?;
    }
    for p in &mut s.pairs {
        p.thru = abs(&p.thru)?;
    }
    if let Some(m) = &mut s.mtrl {
        m.thru = abs(&m.thru)?;
        m.reflect = [abs(&m.reflect[0])?, abs(&m.reflect[1])?];
        for l in &mut m.lines {
            l.file = abs(&l.file)?;
        }
    }
    if let Some(v) = &mut s.validation {
        v.dut_raw = abs(&v.dut_raw)?;
        v.dut_truth = abs(&v.dut_truth)?;
    }
    if s.pack != "nyu28" {
        s.pack = abs(&s.pack)?;
    }
    s.definitions = Some(DefinitionFiles { short: "char/short.s1p".into(), open: "char/open.s1p".into(), load: "char/load.s1p".into() });
    let session_path = out.join("session-characterized.toml");
    write_text(&session_path, &toml::to_string(&s).map_err(|e| CliError::Usage(e.to_string()))?)?;
    written.push(session_path);
    Ok(Outcome { report, exit_code: exit::OK, written })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionTrace {
    pub magnitude_db: Vec<f64>,
    pub phase_unwrapped_rad: Vec<f64>,
}

impl TransmissionTrace {
    fn of(values: &[C64]) -> Self {
        TransmissionTrace { magnitude_db: values.iter().map(|&z| db20(z)).collect(), phase_unwrapped_rad: unwrap_phase(values) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectReport {
    pub ports: Vec<usize>,
    /// `S21` for multi-port DUTs, `S11` for one-ports.
    pub trace: &'static str,
    pub raw: TransmissionTrace,
    pub corrected: TransmissionTrace,
    pub reciprocity_error_max: f64,
    pub passivity_margin_min: f64,
    pub freq_hz: Vec<f64>,
}

/// Applies a saved model to a raw DUT measurement.
pub fn run_correct(model_path: &Path, dut_path: &Path, out: &Path, ports: Option<Vec<usize>>) -> Result<Outcome<CorrectReport>> {
    let cal = read_cal(model_path)?;
    let raw = read_network(dut_path)?;
    let ports = ports.unwrap_or_else(|| (0..raw.n_ports()).collect());
    if ports.len() != raw.n_ports() {
        return Err(CliError::Usage(format!("--ports lists {} ports for a {}-port file", ports.len(), raw.n_ports())));
    }
    let model = cal.model.restrict(&ports).map_err(|e| CliError::Usage(e.to_string()))?;
    raw.grid().ensure_same(model.grid()).map_err(|e| CliError::parse(dut_path, e))?;
    let corrected = correct_multiport(&model, &raw).map_err(|e| CliError::solver("correction", e))?;
    let (trace, i, j) = if raw.n_ports() >= 2 { ("S21", 1, 0) } else { ("S11", 0, 0) };
    let report = CorrectReport {
        ports,
        trace,
        raw: TransmissionTrace::of(&raw.entry(i, j)),
        corrected: TransmissionTrace::of(&corrected.entry(i, j)),
        reciprocity_error_max: reciprocity_error(&corrected).into_iter().fold(0.0, f64::max),
        passivity_margin_min: passivity_margin(&corrected).into_iter().fold(f64::INFINITY, f64::min),
        freq_hz: raw.freqs().to_vec(),
    };
    let stem = dut_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dut".into());
    let n = corrected.n_ports();
    let net_path = out.join(format!("{stem}_corrected.s{n}p"));
    let report_path = out.join(format!("{stem}_correct-report.json"));
    write_network(&net_path, &corrected, &[format!("corrected with {}", model_path.display())])?;
    write_json(&report_path, &report)?;
    Ok(Outcome { report, exit_code: exit::OK, written: vec![net_path, report_path] })
}

/// Threshold criterion on a Touchstone file.
pub fn run_report(file: &Path, threshold_db: f64, quantity: ThresholdQuantity) -> Result<Outcome<ThresholdSummary>> {
    let net = read_network(file)?;
    let report = threshold_summary(&net, threshold_db, quantity);
    let exit_code = if report.valid_up_to == Validity::Nowhere { exit::CRITERION } else { exit::OK };
    Ok(Outcome { report, exit_code, written: Vec::new() })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub reciprocity_error_max: f64,
    pub passivity_margin_min: f64,
    pub reciprocal: bool,
    pub passive: bool,
}

/// Reciprocity and passivity of a Touchstone file within `tol`.
pub fn run_check(file: &Path, ports: Option<Vec<usize>>, tol: f64) -> Result<Outcome<CheckReport>> {
    let mut net = read_network(file)?;
    if let Some(p) = ports {
        net = net.subnetwork(&p).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let rec = reciprocity_error(&net).into_iter().fold(0.0, f64::max);
    let pas = passivity_margin(&net).into_iter().fold(f64::INFINITY, f64::min);
    let report = CheckReport { reciprocity_error_max: rec, passivity_margin_min: pas, reciprocal: rec <= tol, passive: pas >= -tol };
    let exit_code = if report.reciprocal && report.passive { exit::OK } else { exit::CRITERION };
    Ok(Outcome { report, exit_code, written: Vec::new() })
}
