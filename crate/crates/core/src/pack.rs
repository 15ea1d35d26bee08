//! Standard-pack files: model parameters for a set of on-chip standards.
//!
//! A pack is TOML with one table per standard, all values in SI units:
//!
//! ```toml
//! name = "nyu28-pack"
//! z_ref = 50.0
//!
//! [open]            # C(f) = c[0] + c[1] f + c[2] f^2 + c[3] f^3, farads
//! c = [5e-15, 0.0, 0.0, 0.0]
//! offset_delay = 0.0  # s, optional
//!
//! [short]           # L(f), henries
//! l = [2e-12, 0.0, 0.0, 0.0]
//!
//! [load]
//! r_dc = 50.0       # ohm
//! l_series = 10e-12 # H
//! tune_line = { delay = 0.65e-12, z0 = 60.0, loss = 0.0, eps_eff = 4.0 }
//!
//! [fixture]
//! pad_c = 20e-15    # F, shunt at the probe side
//! feed = { length = 55e-6, z0 = 50.0, eps_eff = 4.0, alpha_c = 6.0, alpha_d = 0.4 }
//!
//! [medium]          # cross-section shared by lines and thrus
//! z0 = 50.0
//! eps_eff = 4.0
//! alpha_c = 6.0     # Np/m at 1 GHz, ∝ √f
//! alpha_d = 0.4     # Np/m at 1 GHz, ∝ f
//!
//! [thru.arc]        # any number of named thrus; z0/eps_eff/alpha_* default to [medium]
//! length = 300e-6
//!
//! [mtrl]
//! thru_length = 0.0
//! lines = [250e-6, 550e-6, 1.3e-3]
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparams::{FrequencyGrid, Network};
use crate::standards::{
    eval_fixture, eval_line, eval_load, eval_reflect, FixtureModel, LineModel, LoadModel, ReflectKind,
    ReflectPoly, StandardError,
};

/// Text of the reference pack shipped with the crate.
pub const NYU28_PACK: &str = include_str!("../packs/nyu28-pack.toml");

#[derive(Debug, Error)]
pub enum PackError {
    #[error("pack parse error: {0}")]
    Parse(String),
    #[error("pack: {section}: {reason}")]
    Invalid { section: String, reason: String },
    #[error("pack has no thru named {0:?}")]
    UnknownThru(String),
    #[error(transparent)]
    Standard(#[from] StandardError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenSection {
    c: [f64; 4],
    #[serde(default)]
    offset_delay: f64,
    #[serde(default)]
    offset_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShortSection {
    l: [f64; 4],
    #[serde(default)]
    offset_delay: f64,
    #[serde(default)]
    offset_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    pub z0: f64,
    pub eps_eff: f64,
    #[serde(default)]
    pub alpha_c: f64,
    #[serde(default)]
    pub alpha_d: f64,
}

impl Medium {
    pub fn line(&self, length: f64) -> LineModel {
        LineModel { length, z0: self.z0, eps_eff: self.eps_eff, alpha_c: self.alpha_c, alpha_d: self.alpha_d }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThruSection {
    length: f64,
    z0: Option<f64>,
    eps_eff: Option<f64>,
    alpha_c: Option<f64>,
    alpha_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtrlSection {
    #[serde(default)]
    pub thru_length: f64,
    pub lines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    name: String,
    #[serde(default = "default_z_ref")]
    z_ref: f64,
    open: OpenSection,
    short: ShortSection,
    load: LoadModel,
    fixture: FixtureModel,
    medium: Medium,
    #[serde(default)]
    thru: BTreeMap<String, ThruSection>,
    mtrl: Option<MtrlSection>,
}

fn default_z_ref() -> f64 {
    50.0
}

/// Validated standard pack.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardPack {
    pub name: String,
    pub z_ref: f64,
    pub open: ReflectPoly,
    pub short: ReflectPoly,
    pub load: LoadModel,
    pub fixture: FixtureModel,
    pub medium: Medium,
    pub thrus: BTreeMap<String, LineModel>,
    pub mtrl: Option<MtrlSection>,
}

/// Evaluated one-port definitions in short, open, load order.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardDefinitions {
    pub short: Network,
    pub open: Network,
    pub load: Network,
}

impl StandardDefinitions {
    pub fn as_array(&self) -> [&Network; 3] {
        [&self.short, &self.open, &self.load]
    }
}

impl StandardPack {
    pub fn parse(text: &str) -> Result<Self, PackError> {
        let file: PackFile = toml::from_str(text).map_err(|e| PackError::Parse(e.to_string()))?;
        let invalid = |section: &str, reason: String| PackError::Invalid { section: section.into(), reason };
        if !(file.z_ref.is_finite() && file.z_ref > 0.0) {
            return Err(invalid("z_ref", format!("must be positive, got {}", file.z_ref)));
        }
        for (name, coeffs) in [("open.c", &file.open.c), ("short.l", &file.short.l)] {
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(invalid(name, "coefficients must be finite".into()));
            }
        }
        if file.open.offset_loss != 0.0 || file.short.offset_loss != 0.0 {
            return Err(invalid("open/short", "offset_loss must be 0".into()));
        }
        if !(file.load.r_dc > 0.0) {
            return Err(invalid("load", format!("r_dc must be > 0, got {}", file.load.r_dc)));
        }
        if let Some(t) = &file.load.tune_line {
            if !(t.delay >= 0.0 && t.z0 > 0.0 && t.eps_eff >= 1.0 && t.loss >= 0.0) {
                return Err(invalid("load.tune_line", format!("{t:?}")));
            }
        }
        if !(file.fixture.pad_c >= 0.0) {
            return Err(invalid("fixture", "pad_c must be >= 0".into()));
        }
        check_line("fixture.feed", &file.fixture.feed)?;
        check_line("medium", &file.medium.line(0.0))?;
        let mut thrus = BTreeMap::new();
        for (name, t) in &file.thru {
            let line = LineModel {
                length: t.length,
                z0: t.z0.unwrap_or(file.medium.z0),
                eps_eff: t.eps_eff.unwrap_or(file.medium.eps_eff),
                alpha_c: t.alpha_c.unwrap_or(file.medium.alpha_c),
                alpha_d: t.alpha_d.unwrap_or(file.medium.alpha_d),
            };
            check_line(&format!("thru.{name}"), &line)?;
            thrus.insert(name.clone(), line);
        }
        if let Some(m) = &file.mtrl {
            if m.lines.is_empty() {
                return Err(invalid("mtrl", "at least one line is required".into()));
            }
            let mut all = m.lines.clone();
            all.push(m.thru_length);
            if all.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                return Err(invalid("mtrl", "lengths must be finite and >= 0".into()));
            }
            all.sort_by(f64::total_cmp);
            if all.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid("mtrl", "line lengths must be distinct from each other and the thru".into()));
            }
        }
        Ok(Self {
            name: file.name,
            z_ref: file.z_ref,
            open: ReflectPoly {
                kind: ReflectKind::Open,
                coeffs: file.open.c,
                offset_delay: file.open.offset_delay,
                offset_loss: 0.0,
            },
            short: ReflectPoly {
                kind: ReflectKind::Short,
                coeffs: file.short.l,
                offset_delay: file.short.offset_delay,
                offset_loss: 0.0,
            },
            load: file.load,
            fixture: file.fixture,
            medium: file.medium,
            thrus,
            mtrl: file.mtrl,
        })
    }

    pub fn nyu28() -> Self {
        Self::parse(NYU28_PACK).expect("bundled pack is valid")
    }

    pub fn definitions(&self, grid: &FrequencyGrid) -> Result<StandardDefinitions, PackError> {
        Ok(StandardDefinitions {
            short: eval_reflect(&self.short, grid, self.z_ref)?,
            open: eval_reflect(&self.open, grid, self.z_ref)?,
            load: eval_load(&self.load, grid, self.z_ref)?,
        })
    }

    pub fn thru(&self, name: &str) -> Result<&LineModel, PackError> {
        self.thrus.get(name).ok_or_else(|| PackError::UnknownThru(name.into()))
    }

    pub fn eval_thru(&self, name: &str, grid: &FrequencyGrid) -> Result<Network, PackError> {
        Ok(eval_line(self.thru(name)?, grid, self.z_ref)?)
    }

    pub fn eval_fixture(&self, grid: &FrequencyGrid) -> Result<Network, PackError> {
        Ok(eval_fixture(&self.fixture, grid, self.z_ref)?)
    }

    /// One-way delay of a thru from its length and medium, seconds.
    pub fn thru_delay(&self, name: &str) -> Result<f64, PackError> {
        let t = self.thru(name)?;
        Ok(t.length * t.eps_eff.sqrt() / crate::sparams::C0)
    }
}

fn check_line(section: &str, line: &LineModel) -> Result<(), PackError> {
    if !(line.length.is_finite()
        && line.length >= 0.0
        && line.z0 > 0.0
        && line.eps_eff >= 1.0
        && line.alpha_c >= 0.0
        && line.alpha_d >= 0.0)
    {
        return Err(PackError::Invalid { section: section.into(), reason: format!("{line:?}") });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standards::{threshold_report, ThresholdQuantity, Validity};

    #[test]
    fn bundled_pack_parses() {
        let p = StandardPack::nyu28();
        assert_eq!(p.name, "nyu28-pack");
        assert_eq!(p.open.coeffs[0], 5e-15);
        assert_eq!(p.short.coeffs[0], 2e-12);
        assert_eq!(p.load.r_dc, 50.0);
        assert_eq!(p.load.l_series, 10e-12);
        assert_eq!(p.fixture.pad_c, 20e-15);
        assert_eq!(p.fixture.feed.length, 55e-6);
        assert!(p.thrus.contains_key("arc") && p.thrus.contains_key("diagonal"));
        assert_eq!(p.mtrl.as_ref().unwrap().lines, vec![250e-6, 550e-6, 1.3e-3]);
    }

    #[test]
    fn pack_load_holds_threshold_past_125ghz() {
        let p = StandardPack::nyu28();
        let grid = FrequencyGrid::linear(1e9, 170e9, 1691).unwrap();
        let defs = p.definitions(&grid).unwrap();
        let rep = threshold_report(&defs.load, -15.0, ThresholdQuantity::S11Below);
        match rep.valid_up_to {
            Validity::UpTo(f) => assert!(f > 125e9 && f < 170e9, "{f}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_name_the_line() {
        let text = NYU28_PACK.replacen("r_dc = 50.0", "r_dc = \"fifty\"", 1);
        let err = StandardPack::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        let text = NYU28_PACK.replacen("r_dc = 50.0", "r_dc = -5.0", 1);
        assert!(matches!(StandardPack::parse(&text), Err(PackError::Invalid { .. })));
        let text = NYU28_PACK.replacen("[load]", "[load]\nbogus = 1", 1);
        assert!(matches!(StandardPack::parse(&text), Err(PackError::Parse(_))));
    }

    #[test]
    fn unknown_thru() {
        assert!(matches!(StandardPack::nyu28().thru("spiral"), Err(PackError::UnknownThru(_))));
    }
}
