//! Calibration session files.
//!
//! ```toml
//! pack = "nyu28"
//! threshold_db = -15.0
//!
//! [[port]]
//! index = 0
//! short = "raw/port0_short.s1p"
//! open = "raw/port0_open.s1p"
//! load = "raw/port0_load.s1p"
//!
//! [[pair]]
//! ports = [0, 1]
//! thru = "raw/thru_0_1.s2p"
//! thru_standard = "arc"      # delay estimate from the pack layout
//! # delay_estimate = 2e-12   # or explicitly, seconds
//!
//! [definitions]              # optional; pack models otherwise
//! short = "char/short.s1p"
//! open = "char/open.s1p"
//! load = "char/load.s1p"
//!
//! [mtrl]
//! ports = [0, 1]
//! thru = "raw/mtrl_thru.s2p"
//! thru_length = 0.0
//! reflect = ["raw/mtrl_reflect_p0.s1p", "raw/mtrl_reflect_p1.s1p"]
//! reflect_hint = "short"
//! [[mtrl.line]]
//! length = 250e-6
//! file = "raw/mtrl_line_250um.s2p"
//!
//! [validation]               # optional synthetic ground truth
//! dut_raw = "raw/dut.s2p"
//! dut_truth = "dut_truth.s2p"
//! ports = [0, 1]
//! ```
//!
//! Relative paths are resolved against the session file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vnacal_core::pack::StandardPack;
use vnacal_core::solvers::{MtrlInput, MtrlLine, MtrlOptions, ReflectHint, SolrInput, SolrPort};
use vnacal_core::sparams::{FrequencyGrid, Network};

use crate::error::{CliError, Result};
use crate::io::{load_pack, read_network, read_text, resolve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    #[serde(default = "default_pack")]
    pub pack: String,
    pub threshold_db: Option<f64>,
    #[serde(default, rename = "port")]
    pub ports: Vec<PortFiles>,
    #[serde(default, rename = "pair")]
    pub pairs: Vec<PairFiles>,
    pub definitions: Option<DefinitionFiles>,
    pub mtrl: Option<MtrlFiles>,
    pub validation: Option<Validation>,
}

fn default_pack() -> String {
    "nyu28".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortFiles {
    pub index: usize,
    pub short: String,
    pub open: String,
    pub load: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFiles {
    pub ports: [usize; 2],
    pub thru: String,
    pub thru_standard: Option<String>,
    pub delay_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefinitionFiles {
    pub short: String,
    pub open: String,
    pub load: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineFile {
    pub length: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtrlFiles {
    pub ports: [usize; 2],
    pub thru: String,
    #[serde(default)]
    pub thru_length: f64,
    pub reflect: [String; 2],
    #[serde(default = "default_hint")]
    pub reflect_hint: String,
    pub eps_eff_hint: Option<f64>,
    pub degenerate_tol: Option<f64>,
    #[serde(default, rename = "line")]
    pub lines: Vec<LineFile>,
}

fn default_hint() -> String {
    "short".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validation {
    pub dut_raw: String,
    pub dut_truth: String,
    /// Model ports the DUT is connected to; all ports by default.
    pub ports: Option<Vec<usize>>,
}

pub fn parse_session(text: &str) -> std::result::Result<Session, String> {
    let s: Session = toml::from_str(text).map_err(|e| e.to_string())?;
    s.validate()?;
    Ok(s)
}

impl Session {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.ports.len();
        for (i, p) in self.ports.iter().enumerate() {
            if p.index != i {
                return Err(format!("[[port]] entry {i} has index {} (ports must be listed 0, 1, ...)", p.index));
            }
        }
        for pair in &self.pairs {
            let [i, j] = pair.ports;
            if i == j || i >= n || j >= n {
                return Err(format!("pair [{i}, {j}] invalid for {n} ports"));
            }
            if pair.thru_standard.is_none() && pair.delay_estimate.is_none() {
                return Err(format!("pair [{i}, {j}] needs thru_standard or delay_estimate"));
            }
        }
        if let Some(m) = &self.mtrl {
            if m.ports[0] == m.ports[1] {
                return Err("mtrl ports must differ".into());
            }
            if m.lines.is_empty() {
                return Err("mtrl needs at least one [[mtrl.line]]".into());
            }
            hint(&m.reflect_hint)?;
        }
        if let Some(t) = self.threshold_db {
            if !t.is_finite() {
                return Err("threshold_db must be finite".into());
            }
        }
        Ok(())
    }
}

fn hint(text: &str) -> std::result::Result<ReflectHint, String> {
    match text {
        "short" => Ok(ReflectHint::ShortLike),
        "open" => Ok(ReflectHint::OpenLike),
        other => Err(format!("reflect_hint `{other}` (expected short or open)")),
    }
}

/// A parsed session with its directory and standard pack.
#[derive(Debug, Clone)]
pub struct LoadedSession {
    pub session: Session,
    pub path: PathBuf,
    pub base: PathBuf,
    pub pack: StandardPack,
}

impl LoadedSession {
    pub fn load(path: &Path) -> Result<Self> {
        let session = parse_session(&read_text(path)?).map_err(|e| CliError::parse(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let pack = load_pack(&session.pack, &base)?;
        Ok(Self { session, path: path.to_path_buf(), base, pack })
    }

    pub fn file(&self, rel: &str) -> PathBuf {
        resolve(&self.base, rel)
    }

    pub fn network(&self, rel: &str, grid: Option<&FrequencyGrid>) -> Result<Network> {
        let path = self.file(rel);
        let net = read_network(&path)?;
        if let Some(g) = grid {
            net.grid().ensure_same(g).map_err(|e| CliError::parse(&path, e))?;
        }
        Ok(net)
    }

    /// Grid of the first referenced measurement.
    pub fn grid(&self) -> Result<FrequencyGrid> {
        let s = &self.session;
        let first = s
            .ports
            .first()
            .map(|p| p.short.as_str())
            .or_else(|| s.mtrl.as_ref().map(|m| m.thru.as_str()))
            .ok_or_else(|| CliError::Usage(format!("{}: no measurements listed", self.path.display())))?;
        Ok(self.network(first, None)?.grid().clone())
    }

    /// Standard definitions for SOLR: the session's files, or the pack models.
    pub fn definitions(&self, grid: &FrequencyGrid) -> Result<[Network; 3]> {
        match &self.session.definitions {
            Some(d) => Ok([
                self.network(&d.short, Some(grid))?,
                self.network(&d.open, Some(grid))?,
                self.network(&d.load, Some(grid))?,
            ]),
            None => {
                let d = self.pack.definitions(grid).map_err(|e| CliError::parse(&self.path, e))?;
                Ok([d.short, d.open, d.load])
            }
        }
    }

    pub fn raw_sol(&self, port: usize, grid: &FrequencyGrid) -> Result<[Network; 3]> {
        let p = self
            .session
            .ports
            .get(port)
            .ok_or_else(|| CliError::Usage(format!("no [[port]] entry for port {port}")))?;
        Ok([self.network(&p.short, Some(grid))?, self.network(&p.open, Some(grid))?, self.network(&p.load, Some(grid))?])
    }

    pub fn solr_inputs(&self, grid: &FrequencyGrid) -> Result<Vec<(PairFiles, SolrInput)>> {
        let defs = self.definitions(grid)?;
        let ports: Vec<SolrPort> = (0..self.session.ports.len())
            .map(|p| Ok(SolrPort { measured: self.raw_sol(p, grid)?, definitions: defs.clone() }))
            .collect::<Result<_>>()?;
        self.session
            .pairs
            .iter()
            .map(|pair| {
                let delay_estimate = match (pair.delay_estimate, &pair.thru_standard) {
                    (Some(d), _) => d,
                    (None, Some(name)) => self.pack.thru_delay(name).map_err(|e| CliError::parse(&self.path, e))?,
                    (None, None) => unreachable!("validated"),
                };
                let input = SolrInput {
                    port_a: ports[pair.ports[0]].clone(),
                    port_b: ports[pair.ports[1]].clone(),
                    thru: self.network(&pair.thru, Some(grid))?,
                    delay_estimate,
                };
                Ok((pair.clone(), input))
            })
            .collect()
    }

    pub fn mtrl_input(&self, grid: &FrequencyGrid) -> Result<(MtrlFiles, MtrlInput)> {
        let m = self
            .session
            .mtrl
            .clone()
            .ok_or_else(|| CliError::Usage(format!("{}: no [mtrl] section", self.path.display())))?;
        let mut options = MtrlOptions { eps_eff_hint: m.eps_eff_hint, ..MtrlOptions::default() };
        if let Some(t) = m.degenerate_tol {
            options.degenerate_tol = t;
        }
        let input = MtrlInput {
            thru: self.network(&m.thru, Some(grid))?,
            thru_length: m.thru_length,
            lines: m
                .lines
                .iter()
                .map(|l| Ok(MtrlLine { length: l.length, measured: self.network(&l.file, Some(grid))? }))
                .collect::<Result<_>>()?,
            reflect: [self.network(&m.reflect[0], Some(grid))?, self.network(&m.reflect[1], Some(grid))?],
            reflect_hint: hint(&m.reflect_hint).map_err(|e| CliError::parse(&self.path, e))?,
            options,
        };
        Ok((m, input))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[[port]]
index = 0
short = "a.s1p"
open = "b.s1p"
load = "c.s1p"

[[port]]
index = 1
short = "d.s1p"
open = "e.s1p"
load = "f.s1p"

[[pair]]
ports = [0, 1]
thru = "t.s2p"
thru_standard = "arc"
"#;

    #[test]
    fn parses_basic_session() {
        let s = parse_session(BASIC).unwrap();
        assert_eq!(s.pack, "nyu28");
        assert_eq!(s.ports.len(), 2);
        assert_eq!(s.pairs[0].thru_standard.as_deref(), Some("arc"));
    }

    #[test]
    fn rejects_bad_topology() {
        assert!(parse_session(&BASIC.replace("ports = [0, 1]", "ports = [0, 2]")).is_err());
        assert!(parse_session(&BASIC.replace("thru_standard = \"arc\"", "")).is_err());
        assert!(parse_session(&BASIC.replace("index = 1", "index = 3")).is_err());
        assert!(parse_session(&format!("{BASIC}\nunknown = 1\n").replacen("[[port]]", "unknown = 1\n[[port]]", 1)).is_err());
    }

    #[test]
    fn mtrl_hint_validated() {
        let text = format!(
            "{BASIC}\n[mtrl]\nports = [0, 1]\nthru = \"t.s2p\"\nreflect = [\"r0.s1p\", \"r1.s1p\"]\nreflect_hint = \"load\"\n[[mtrl.line]]\nlength = 1e-3\nfile = \"l.s2p\"\n"
        );
        assert!(parse_session(&text).unwrap_err().contains("reflect_hint"));
        assert!(parse_session(&text.replace("\"load\"", "\"open\"")).is_ok());
    }
}
