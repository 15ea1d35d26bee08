//! Synthetic measurement scenarios.
//!
//! ```toml
//! seed = 42
//! ports = 2
//! pack = "nyu28"            # bundled pack, or a path to a pack file
//! fixture = true            # pads + feed are part of every error box
//! noise_db = -60.0          # optional
//!
//! [grid]
//! start = 1e9
//! stop = 170e9
//! points = 201
//!
//! [boxes]
//! kind = "random"           # "random" | "identity" | "files"
//!
//! [[thru]]
//! ports = [0, 1]
//! standard = "arc"
//!
//! [dut]
//! kind = "thru"             # "thru" | "random-reciprocal" | "file"
//! standard = "diagonal"
//!
//! [mtrl]                    # optional line set between two ports
//! ports = [0, 1]
//! reflect = "short"
//! ```

use serde::{Deserialize, Serialize};
use vnacal_core::sparams::FrequencyGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default = "default_ports")]
    pub ports: usize,
    #[serde(default = "default_pack")]
    pub pack: String,
    #[serde(default = "default_true")]
    pub fixture: bool,
    pub noise_db: Option<f64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub boxes: BoxSpec,
    #[serde(default, rename = "thru")]
    pub thrus: Vec<ThruSpec>,
    #[serde(default)]
    pub dut: DutSpec,
    pub mtrl: Option<MtrlSpec>,
}

fn default_ports() -> usize {
    2
}

fn default_pack() -> String {
    "nyu28".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<FrequencyGrid, String> {
        FrequencyGrid::linear(self.start, self.stop, self.points).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBoxSpec {
    #[serde(default = "d_e_max")]
    pub e00_max: f64,
    #[serde(default = "d_e_max")]
    pub e11_max: f64,
    #[serde(default = "d_t_min")]
    pub tracking_min: f64,
    #[serde(default = "d_t_max")]
    pub tracking_max: f64,
}

fn d_e_max() -> f64 {
    0.3
}
fn d_t_min() -> f64 {
    0.5
}
fn d_t_max() -> f64 {
    1.0
}

impl Default for RandomBoxSpec {
    fn default() -> Self {
        Self { e00_max: d_e_max(), e11_max: d_e_max(), tracking_min: d_t_min(), tracking_max: d_t_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoxSpec {
    Random(RandomBoxSpec),
    Identity,
    /// One 2-port Touchstone file per port, port 1 = analyzer side.
    Files { files: Vec<String> },
}

impl Default for BoxSpec {
    fn default() -> Self {
        BoxSpec::Random(RandomBoxSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThruSpec {
    pub ports: [usize; 2],
    pub standard: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DutSpec {
    /// A pack thru between two ports.
    Thru {
        standard: String,
        #[serde(default = "first_pair")]
        ports: [usize; 2],
    },
    /// Random smooth passive reciprocal network over all ports.
    RandomReciprocal,
    /// Touchstone file; port count from the extension, measured on ports 0..n.
    File { path: String },
}

fn first_pair() -> [usize; 2] {
    [0, 1]
}

impl Default for DutSpec {
    fn default() -> Self {
        DutSpec::Thru { standard: "diagonal".into(), ports: first_pair() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtrlSpec {
    #[serde(default = "first_pair")]
    pub ports: [usize; 2],
    /// "short" or "open": which pack reflect serves as the reflect standard.
    #[serde(default = "default_reflect")]
    pub reflect: String,
    /// Defaults to the pack's line set.
    pub thru_length: Option<f64>,
    pub lines: Option<Vec<f64>>,
}

fn default_reflect() -> String {
    "short".into()
}

pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    let scn: Scenario = toml::from_str(text).map_err(|e| e.to_string())?;
    scn.validate()?;
    Ok(scn)
}

impl Scenario {
    pub fn validate(&self) -> Result<(), String> {
        if self.ports == 0 || self.ports > 16 {
            return Err(format!("ports = {} (expected 1..=16)", self.ports));
        }
        self.grid.build()?;
        if let Some(db) = self.noise_db {
            if !(db.is_finite() && db <= 0.0) {
                return Err(format!("noise_db = {db} (expected a finite value <= 0)"));
            }
        }
        let check_pair = |what: &str, [i, j]: [usize; 2]| {
            if i == j || i >= self.ports || j >= self.ports {
                Err(format!("{what} ports [{i}, {j}] invalid for {} ports", self.ports))
            } else {
                Ok(())
            }
        };
        for t in &self.thrus {
            check_pair("thru", t.ports)?;
        }
        if let DutSpec::Thru { ports, .. } = &self.dut {
            check_pair("dut", *ports)?;
        }
        if let Some(m) = &self.mtrl {
            check_pair("mtrl", m.ports)?;
            if m.reflect != "short" && m.reflect != "open" {
                return Err(format!("mtrl reflect `{}` (expected short or open)", m.reflect));
            }
        }
        match &self.boxes {
            BoxSpec::Random(r) => {
                let ok = (0.0..1.0).contains(&r.e00_max)
                    && (0.0..1.0).contains(&r.e11_max)
                    && r.tracking_min > 0.0
                    && r.tracking_min <= r.tracking_max
                    && r.tracking_max <= 1.0;
                if !ok {
                    return Err(format!("random box bounds {r:?}"));
                }
            }
            BoxSpec::Files { files } if files.len() != self.ports => {
                return Err(format!("{} box files for {} ports", files.len(), self.ports));
            }
            _ => {}
        }
        Ok(())
    }

    /// Thrus to simulate: as configured, or a chain of `arc` thrus.
    pub fn thru_list(&self) -> Vec<ThruSpec> {
        if !self.thrus.is_empty() {
            return self.thrus.clone();
        }
        (1..self.ports).map(|j| ThruSpec { ports: [j - 1, j], standard: "arc".into() }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 7\n[grid]\nstart = 1e9\nstop = 10e9\npoints = 10\n";

    #[test]
    fn defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.ports, 2);
        assert_eq!(s.pack, "nyu28");
        assert!(s.fixture);
        assert_eq!(s.boxes, BoxSpec::Random(RandomBoxSpec::default()));
        assert_eq!(s.thru_list(), vec![ThruSpec { ports: [0, 1], standard: "arc".into() }]);
        assert_eq!(s.dut, DutSpec::Thru { standard: "diagonal".into(), ports: [0, 1] });
    }

    #[test]
    fn tagged_sections() {
        let text = format!(
            "{MINIMAL}ports = 4\n[boxes]\nkind = \"identity\"\n[dut]\nkind = \"random-reciprocal\"\n[mtrl]\nports = [1, 2]\n"
        );
        let text = text.replacen("ports = 4\n", "", 1).replacen("seed = 7\n", "seed = 7\nports = 4\n", 1);
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.boxes, BoxSpec::Identity);
        assert_eq!(s.dut, DutSpec::RandomReciprocal);
        assert_eq!(s.mtrl.unwrap().ports, [1, 2]);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_scenario(&MINIMAL.replace("points = 10", "points = 0")).is_err());
        assert!(parse_scenario(&format!("{MINIMAL}noise_db = 3.0\n").replacen("[grid]", "noise_db = 3.0\n[grid]", 1)).is_err());
        assert!(parse_scenario(&format!("{MINIMAL}[[thru]]\nports = [0, 5]\nstandard = \"arc\"\n")).is_err());
        assert!(parse_scenario(&format!("{MINIMAL}bogus = 1\n")).is_err());
        let err = parse_scenario("seed = \"x\"\n").unwrap_err();
        assert!(err.contains("line 1"), "{err}");
    }
}
