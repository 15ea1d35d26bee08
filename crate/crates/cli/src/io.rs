//! File helpers with path context on every error.

use std::path::{Path, PathBuf};

use vnacal_core::calfile::{parse_cal_model, write_cal_model, CalFile};
use vnacal_core::error_model::MultiPortCalModel;
use vnacal_core::pack::StandardPack;
use vnacal_core::sparams::Network;
use vnacal_core::touchstone::{parse_touchstone, ports_from_extension, write_touchstone, DataFormat, FreqUnit, TouchstoneOptions};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `rel` against `base` unless already absolute.
pub fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn network_ports(path: &Path) -> Result<usize> {
    path.to_str()
        .and_then(ports_from_extension)
        .ok_or_else(|| CliError::Usage(format!("{}: expected a .sNp extension", path.display())))
}

pub fn read_network(path: &Path) -> Result<Network> {
    let n = network_ports(path)?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_touchstone(&bytes, n).map_err(|e| CliError::parse(path, e))
}

pub fn write_network(path: &Path, net: &Network, comments: &[String]) -> Result<()> {
    let expected = network_ports(path)?;
    if expected != net.n_ports() {
        return Err(CliError::Usage(format!("{}: {}-port data in a .s{expected}p file", path.display(), net.n_ports())));
    }
    let mut opts = TouchstoneOptions::new(FreqUnit::GHz, DataFormat::RealImag);
    opts.z_ref = net.z_ref();
    for c in comments {
        opts = opts.with_comment(c.clone());
    }
    write_text(path, &write_touchstone(net, &opts))
}

pub fn read_cal(path: &Path) -> Result<CalFile> {
    parse_cal_model(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

pub fn write_cal(path: &Path, model: &MultiPortCalModel, z_ref: f64) -> Result<()> {
    write_text(path, &write_cal_model(model, z_ref))
}

/// `"nyu28"` names the bundled pack; anything else is a pack file path.
pub fn load_pack(reference: &str, base: &Path) -> Result<StandardPack> {
    if reference == "nyu28" {
        return Ok(StandardPack::nyu28());
    }
    let path = resolve(base, reference);
    StandardPack::parse(&read_text(&path)?).map_err(|e| CliError::parse(&path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}
