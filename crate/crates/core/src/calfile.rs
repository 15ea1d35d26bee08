//! Plain-text storage for [`MultiPortCalModel`].
//!
//! ```text
//! vnacal-model 1
//! ports 2
//! points 3
//! z_ref 5.0000000000000000e1
//! [port 0]
//! <f> <e00 re> <e00 im> <e11 re> <e11 im> <trk re> <trk im> <split re> <split im>
//! ...
//! [k 0 1]
//! <f> <re> <im>
//! ```
//!
//! Values are written with 17 significant digits so a write/parse cycle is
//! bit-exact. Blank lines and lines starting with `#` are ignored.

use thiserror::Error;

use crate::error_model::{ModelError, MultiPortCalModel, OnePortTerms, PortErrorBox};
use crate::sparams::{FrequencyGrid, C64};

const MAGIC: &str = "vnacal-model";
const VERSION: u32 = 1;
/// Upper bound on declared sizes, so a hostile header cannot force huge allocations.
const MAX_PORTS: usize = 64;
const MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalFileError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing section {0}")]
    MissingSection(String),
    #[error("unexpected end of file: {0}")]
    Truncated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A calibration model together with its reference impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct CalFile {
    pub model: MultiPortCalModel,
    pub z_ref: f64,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_cal_model(model: &MultiPortCalModel, z_ref: f64) -> String {
    let grid = model.grid();
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {VERSION}\n"));
    out.push_str(&format!("ports {}\npoints {}\nz_ref {}\n", model.n_ports(), grid.len(), num(z_ref)));
    for (p, b) in model.boxes().iter().enumerate() {
        out.push_str(&format!("[port {p}]\n"));
        let t = &b.terms;
        for (k, f) in grid.points().iter().enumerate() {
            let vals = [t.e00[k], t.e11[k], t.tracking[k], b.split[k]];
            out.push_str(&num(*f));
            for v in vals {
                out.push(' ');
                out.push_str(&num(v.re));
                out.push(' ');
                out.push_str(&num(v.im));
            }
            out.push('\n');
        }
    }
    for ((i, j), vals) in model.k_pairs() {
        out.push_str(&format!("[k {i} {j}]\n"));
        for (f, v) in grid.points().iter().zip(vals) {
            out.push_str(&format!("{} {} {}\n", num(*f), num(v.re), num(v.im)));
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (n, l) in self.inner.by_ref() {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Some((n + 1, l));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), CalFileError> {
        self.next().ok_or_else(|| CalFileError::Truncated(what.to_string()))
    }
}

fn syntax(line: usize, reason: impl Into<String>) -> CalFileError {
    CalFileError::Syntax { line, reason: reason.into() }
}

fn header<'a>(line: usize, text: &'a str, key: &str) -> Result<&'a str, CalFileError> {
    match text.split_once(char::is_whitespace) {
        Some((k, v)) if k == key => Ok(v.trim()),
        _ => Err(syntax(line, format!("expected `{key} <value>`"))),
    }
}

fn parse_count(line: usize, text: &str, key: &str, max: usize) -> Result<usize, CalFileError> {
    let v: usize = header(line, text, key)?.parse().map_err(|_| syntax(line, format!("invalid {key}")))?;
    if v == 0 || v > max {
        return Err(syntax(line, format!("{key} must be in 1..={max}")));
    }
    Ok(v)
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, CalFileError> {
    let v: f64 = tok.parse().map_err(|_| syntax(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

fn parse_row(line: usize, text: &str, expected: usize) -> Result<Vec<f64>, CalFileError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != expected {
        return Err(syntax(line, format!("expected {expected} values, found {}", toks.len())));
    }
    toks.iter().map(|t| parse_f64(line, t)).collect()
}

fn section_indices(line: usize, text: &str, key: &str, count: usize) -> Result<Vec<usize>, CalFileError> {
    let inner = text
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| syntax(line, format!("expected `[{key} ...]` section")))?;
    let mut toks = inner.split_whitespace();
    if toks.next() != Some(key) {
        return Err(syntax(line, format!("expected `[{key} ...]` section")));
    }
    let idx: Vec<usize> = toks
        .map(|t| t.parse().map_err(|_| syntax(line, format!("invalid index `{t}`"))))
        .collect::<Result<_, _>>()?;
    if idx.len() != count {
        return Err(syntax(line, format!("`[{key}]` takes {count} index(es)")));
    }
    Ok(idx)
}

pub fn parse_cal_model(text: &str) -> Result<CalFile, CalFileError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (n, first) = lines.expect("magic line")?;
    let version = header(n, first, MAGIC)?;
    if version != VERSION.to_string() {
        return Err(syntax(n, format!("unsupported version `{version}`")));
    }
    let (n, l) = lines.expect("ports")?;
    let n_ports = parse_count(n, l, "ports", MAX_PORTS)?;
    let (n, l) = lines.expect("points")?;
    let n_points = parse_count(n, l, "points", MAX_POINTS)?;
    let (n, l) = lines.expect("z_ref")?;
    let z_ref = parse_f64(n, header(n, l, "z_ref")?)?;
    if z_ref <= 0.0 {
        return Err(syntax(n, "z_ref must be positive"));
    }

    let mut freqs: Option<Vec<f64>> = None;
    let mut boxes = Vec::with_capacity(n_ports);
    for p in 0..n_ports {
        let (n, l) = lines.expect(&format!("[port {p}]"))?;
        if section_indices(n, l, "port", 1)? != [p] {
            return Err(syntax(n, format!("expected `[port {p}]`")));
        }
        let mut f = Vec::with_capacity(n_points.min(4096));
        let mut cols: [Vec<C64>; 4] = Default::default();
        for _ in 0..n_points {
            let (n, l) = lines.expect(&format!("port {p} data"))?;
            let row = parse_row(n, l, 9)?;
            if let Some(fr) = &freqs {
                if fr[f.len()].to_bits() != row[0].to_bits() {
                    return Err(syntax(n, "frequency differs from port 0"));
                }
            }
            f.push(row[0]);
            for (c, col) in cols.iter_mut().enumerate() {
                col.push(C64::new(row[1 + 2 * c], row[2 + 2 * c]));
            }
        }
        if freqs.is_none() {
            freqs = Some(f);
        }
        let grid = FrequencyGrid::new(freqs.clone().expect("set above")).map_err(ModelError::from)?;
        let [e00, e11, tracking, split] = cols;
        let terms = OnePortTerms::new(grid, e00, e11, tracking)?;
        boxes.push(PortErrorBox::with_split(terms, split)?);
    }

    let freqs = freqs.expect("n_ports >= 1");
    let mut pairs = Vec::new();
    while let Some((n, l)) = lines.next() {
        let idx = section_indices(n, l, "k", 2)?;
        let mut vals = Vec::with_capacity(n_points.min(4096));
        for fk in &freqs {
            let (n, l) = lines.expect(&format!("k {} {} data", idx[0], idx[1]))?;
            let row = parse_row(n, l, 3)?;
            if fk.to_bits() != row[0].to_bits() {
                return Err(syntax(n, "frequency differs from port 0"));
            }
            vals.push(C64::new(row[1], row[2]));
        }
        pairs.push(((idx[0], idx[1]), vals));
    }
    if n_ports > 1 && pairs.is_empty() {
        return Err(CalFileError::MissingSection("[k i j]".into()));
    }
    let model = MultiPortCalModel::new(boxes, pairs)?;
    Ok(CalFile { model, z_ref })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MultiPortCalModel {
        let grid = FrequencyGrid::linear(1e9, 3e9, 3).unwrap();
        let boxes = (0..3)
            .map(|p| {
                let t = OnePortTerms::constant(
                    &grid,
                    C64::new(0.1 / 3.0, p as f64),
                    C64::new(-0.2, 0.7),
                    C64::new(0.8, std::f64::consts::PI),
                )
                .unwrap();
                PortErrorBox::reciprocal(t)
            })
            .collect();
        let k = vec![C64::new(0.3, -1.0 / 7.0); 3];
        MultiPortCalModel::new(boxes, vec![((0, 1), k.clone()), ((1, 2), k)]).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let text = write_cal_model(&m, 50.0);
        let back = parse_cal_model(&text).unwrap();
        assert_eq!(back.model, m);
        assert_eq!(back.z_ref, 50.0);
        assert_eq!(write_cal_model(&back.model, back.z_ref), text);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let text = write_cal_model(&model(), 50.0);
        let broken = text.replacen("[port 1]", "[port 7]", 1);
        assert!(matches!(parse_cal_model(&broken), Err(CalFileError::Syntax { .. })));
        let mut lines: Vec<&str> = text.lines().collect();
        lines[5] = "1e9 0 0";
        let err = parse_cal_model(&lines.join("\n")).unwrap_err();
        assert_eq!(err, CalFileError::Syntax { line: 6, reason: "expected 9 values, found 3".into() });
        assert!(matches!(parse_cal_model(""), Err(CalFileError::Truncated(_))));
        assert!(matches!(parse_cal_model("vnacal-model 2\n"), Err(CalFileError::Syntax { line: 1, .. })));
        let nan = text.replacen("e-2", "NaN", 1);
        assert!(parse_cal_model(&nan).is_err());
    }

    #[test]
    fn missing_k_section_rejected() {
        let text = write_cal_model(&model(), 50.0);
        let cut = &text[..text.find("[k").unwrap()];
        assert_eq!(parse_cal_model(cut).unwrap_err(), CalFileError::MissingSection("[k i j]".into()));
    }
}
