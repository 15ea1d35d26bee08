//! Touchstone version 1 reader and writer (`.s1p`, `.s2p`, `.s4p`, ...).
//!
//! Data layout follows the v1 rules: a 2-port record is `f S11 S21 S12 S22`,
//! every other port count is row-major `S11 S12 ... S1n S21 ...`. For n ≥ 3
//! each matrix row starts on a new line and may wrap after four value pairs.
//! Frequency scaling is done on the decimal text, so frequencies written by
//! [`write_touchstone`] read back bit-exact in any unit.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::sparams::{CMatrix, FrequencyGrid, Network, NetworkError, C64, DEFAULT_Z_REF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FreqUnit {
    /// Power of ten converting the unit to Hz.
    pub fn exponent(self) -> i32 {
        match self {
            FreqUnit::Hz => 0,
            FreqUnit::KHz => 3,
            FreqUnit::MHz => 6,
            FreqUnit::GHz => 9,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            FreqUnit::Hz => "Hz",
            FreqUnit::KHz => "kHz",
            FreqUnit::MHz => "MHz",
            FreqUnit::GHz => "GHz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    RealImag,
    MagAngle,
    DbAngle,
}

impl DataFormat {
    pub fn keyword(self) -> &'static str {
        match self {
            DataFormat::RealImag => "RI",
            DataFormat::MagAngle => "MA",
            DataFormat::DbAngle => "DB",
        }
    }
}

/// Option-line settings. Only S-parameters are supported.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneOptions {
    pub freq_unit: FreqUnit,
    pub format: DataFormat,
    pub z_ref: f64,
    /// Free-form comment lines written after the tool banner.
    pub comments: Vec<String>,
}

impl Default for TouchstoneOptions {
    fn default() -> Self {
        Self { freq_unit: FreqUnit::GHz, format: DataFormat::MagAngle, z_ref: DEFAULT_Z_REF, comments: Vec::new() }
    }
}

impl TouchstoneOptions {
    pub fn new(freq_unit: FreqUnit, format: DataFormat) -> Self {
        Self { freq_unit, format, ..Self::default() }
    }

    pub fn with_comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}: malformed option line: {reason}")]
    MalformedOptionLine { line: usize, reason: String },
    #[error("line {line}: frequency {freq} Hz does not increase")]
    NonMonotonicFrequency { line: usize, freq: f64 },
    #[error("line {line}: expected {expected} values, found {found}")]
    WrongValueCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: invalid number {token:?}")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("line {line}: Touchstone v2 keyword {keyword:?} not supported (v1 only)")]
    UnsupportedVersion { line: usize, keyword: String },
    #[error("no data records")]
    EmptyFile,
    #[error("unsupported port count {0}")]
    PortCount(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Port count implied by a `.sNp` extension.
pub fn ports_from_extension(path: &str) -> Option<usize> {
    let ext = path.rsplit('.').next()?.to_ascii_lowercase();
    let digits = ext.strip_prefix('s')?.strip_suffix('p')?;
    digits.parse().ok().filter(|&n: &usize| n > 0)
}

/// Parses a Touchstone v1 file as an `n_ports` S-parameter network.
pub fn parse_touchstone(text: &[u8], n_ports: usize) -> Result<Network, TouchstoneError> {
    // 64 ports is far beyond any v1 writer; it also bounds record allocation.
    if n_ports == 0 || n_ports > 64 {
        return Err(TouchstoneError::PortCount(n_ports));
    }
    let text = String::from_utf8_lossy(text);
    let per_record = 2 * n_ports * n_ports;
    let mut opts: Option<(FreqUnit, DataFormat, f64)> = None;
    let mut freqs: Vec<f64> = Vec::new();
    let mut mats: Vec<CMatrix> = Vec::new();
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_freq: Option<(f64, usize)> = None;
    let mut in_noise = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let keyword = content.split(']').next().unwrap_or(content).to_string() + "]";
            return Err(TouchstoneError::UnsupportedVersion { line, keyword });
        }
        if let Some(rest) = content.strip_prefix('#') {
            if opts.is_none() && freqs.is_empty() && pending_freq.is_none() {
                opts = Some(parse_option_line(rest, line)?);
            } else {
                log::warn!("line {line}: additional option line ignored");
            }
            continue;
        }
        if in_noise {
            continue;
        }
        let (unit, format, _) = *opts.get_or_insert((FreqUnit::GHz, DataFormat::MagAngle, DEFAULT_Z_REF));
        let tokens: Vec<&str> = content.split_whitespace().collect();

        let values_start = if pending_freq.is_none() {
            let freq = parse_freq(tokens[0], unit, line)?;
            if let Some(&last) = freqs.last() {
                if freq <= last {
                    if n_ports == 2 && tokens.len() == 5 {
                        log::warn!("line {line}: noise parameter section skipped");
                        in_noise = true;
                        continue;
                    }
                    return Err(TouchstoneError::NonMonotonicFrequency { line, freq });
                }
            }
            pending_freq = Some((freq, line));
            1
        } else {
            0
        };
        for tok in &tokens[values_start..] {
            pending.push(parse_number(tok, line)?);
        }
        if pending.len() > per_record {
            return Err(TouchstoneError::WrongValueCount {
                line,
                expected: per_record + 1,
                found: pending.len() + 1,
            });
        }
        // One-line records for n <= 2.
        if n_ports <= 2 && pending.len() != per_record {
            return Err(TouchstoneError::WrongValueCount {
                line,
                expected: per_record + 1,
                found: pending.len() + 1,
            });
        }
        if pending.len() == per_record {
            let (freq, _) = pending_freq.take().expect("record started");
            mats.push(decode_record(&pending, n_ports, format, line)?);
            freqs.push(freq);
            pending.clear();
        }
    }
    if let Some((_, start)) = pending_freq {
        return Err(TouchstoneError::WrongValueCount { line: start, expected: per_record + 1, found: pending.len() + 1 });
    }
    if freqs.is_empty() {
        return Err(TouchstoneError::EmptyFile);
    }
    let z_ref = opts.map(|o| o.2).unwrap_or(DEFAULT_Z_REF);
    let grid = FrequencyGrid::new(freqs)?;
    Ok(Network::new(grid, mats, z_ref)?)
}

fn parse_option_line(rest: &str, line: usize) -> Result<(FreqUnit, DataFormat, f64), TouchstoneError> {
    let bad = |reason: String| TouchstoneError::MalformedOptionLine { line, reason };
    let mut unit = FreqUnit::GHz;
    let mut format = DataFormat::MagAngle;
    let mut z_ref = DEFAULT_Z_REF;
    let mut tokens = rest.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => unit = FreqUnit::Hz,
            "KHZ" => unit = FreqUnit::KHz,
            "MHZ" => unit = FreqUnit::MHz,
            "GHZ" => unit = FreqUnit::GHz,
            "S" => {}
            "Y" | "Z" | "H" | "G" => return Err(bad(format!("parameter type {tok} not supported (S only)"))),
            "RI" => format = DataFormat::RealImag,
            "MA" => format = DataFormat::MagAngle,
            "DB" => format = DataFormat::DbAngle,
            "R" => {
                let v = tokens.next().ok_or_else(|| bad("missing value after R".into()))?;
                z_ref = v.parse::<f64>().map_err(|_| bad(format!("invalid reference impedance {v:?}")))?;
                if !(z_ref.is_finite() && z_ref > 0.0) {
                    return Err(bad(format!("reference impedance must be positive, got {v}")));
                }
            }
            other => return Err(bad(format!("unknown token {other:?}"))),
        }
    }
    Ok((unit, format, z_ref))
}

fn parse_number(tok: &str, line: usize) -> Result<f64, TouchstoneError> {
    let v: f64 = tok.parse().map_err(|_| TouchstoneError::InvalidNumber { line, token: tok.to_string() })?;
    if !v.is_finite() {
        return Err(TouchstoneError::NonFinite { line });
    }
    Ok(v)
}

fn parse_freq(tok: &str, unit: FreqUnit, line: usize) -> Result<f64, TouchstoneError> {
    let plain = parse_number(tok, line)?;
    let f = shift_decimal(tok, unit.exponent()).unwrap_or(plain * 10f64.powi(unit.exponent()));
    if !f.is_finite() {
        return Err(TouchstoneError::NonFinite { line });
    }
    Ok(f)
}

/// Multiplies a decimal literal by 10^shift by editing its exponent, so the
/// result is the correctly rounded value of the scaled decimal.
fn shift_decimal(tok: &str, shift: i32) -> Option<f64> {
    let (mantissa, exp) = match tok.find(['e', 'E']) {
        Some(pos) => (&tok[..pos], tok[pos + 1..].parse::<i32>().ok()?),
        None => (tok, 0),
    };
    format!("{mantissa}e{}", exp.checked_add(shift)?).parse().ok()
}

/// Text for `value_hz` expressed in a unit 10^unit_exp Hz, exact on re-read.
fn format_freq(value_hz: f64, unit_exp: i32) -> String {
    let sci = format!("{value_hz:e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse::<i32>().expect("integer exponent") - unit_exp;
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if neg { "-" } else { "" };
    if digits == "0" {
        return "0".into();
    }
    if !(-6..=15).contains(&exp) {
        return format!("{sign}{mantissa}e{exp}");
    }
    // Point goes after position exp+1 in the digit string.
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}

fn decode_pair(a: f64, b: f64, format: DataFormat) -> C64 {
    match format {
        DataFormat::RealImag => C64::new(a, b),
        DataFormat::MagAngle => Complex64::from_polar(a, b.to_radians()),
        DataFormat::DbAngle => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

fn decode_record(values: &[f64], n: usize, format: DataFormat, line: usize) -> Result<CMatrix, TouchstoneError> {
    let mut m = CMatrix::zeros(n, n);
    for (idx, pair) in values.chunks_exact(2).enumerate() {
        let (row, col) = (idx / n, idx % n);
        // 2-port order is S11 S21 S12 S22.
        let (row, col) = if n == 2 { (col, row) } else { (row, col) };
        let z = decode_pair(pair[0], pair[1], format);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(TouchstoneError::NonFinite { line });
        }
        m[(row, col)] = z;
    }
    Ok(m)
}

fn encode_pair(z: C64, format: DataFormat) -> (f64, f64) {
    match format {
        DataFormat::RealImag => (z.re, z.im),
        DataFormat::MagAngle => (z.norm(), z.arg().to_degrees()),
        DataFormat::DbAngle => (20.0 * z.norm().log10(), z.arg().to_degrees()),
    }
}

fn push_value(out: &mut String, v: f64) {
    // -0 would print as "-0.0…"; keep files tidy.
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(out, " {v:.15e}");
}

/// Serializes a network as Touchstone v1 text.
///
/// A zero-magnitude entry written in DB format becomes a large negative
/// finite dB value (magnitude 1e-300) so that the file stays parseable.
pub fn write_touchstone(net: &Network, opts: &TouchstoneOptions) -> String {
    let n = net.n_ports();
    let mut out = String::new();
    let _ = writeln!(out, "! written by vnacal {}", env!("CARGO_PKG_VERSION"));
    for c in &opts.comments {
        let _ = writeln!(out, "! {c}");
    }
    let _ = writeln!(out, "# {} S {} R {}", opts.freq_unit.keyword(), opts.format.keyword(), fmt_plain(opts.z_ref));
    for (k, m) in net.matrices().iter().enumerate() {
        out.push_str(&format_freq(net.freqs()[k], opts.freq_unit.exponent()));
        let entry = |row: usize, col: usize| {
            let z = m[(row, col)];
            if opts.format == DataFormat::DbAngle && z.norm() == 0.0 {
                C64::new(1e-300, 0.0)
            } else {
                z
            }
        };
        if n <= 2 {
            for idx in 0..n * n {
                let (row, col) = if n == 2 { (idx % 2, idx / 2) } else { (0, 0) };
                let (a, b) = encode_pair(entry(row, col), opts.format);
                push_value(&mut out, a);
                push_value(&mut out, b);
            }
            out.push('\n');
        } else {
            for row in 0..n {
                if row > 0 {
                    out.push(' ');
                }
                for col in 0..n {
                    if col > 0 && col % 4 == 0 {
                        out.push_str("\n ");
                    }
                    let (a, b) = encode_pair(entry(row, col), opts.format);
                    push_value(&mut out, a);
                    push_value(&mut out, b);
                }
                out.push('\n');
            }
        }
    }
    out
}

fn fmt_plain(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn one_port_ma_ghz() {
        let net = parse_touchstone(b"# GHz S MA R 50\n1 1 0\n", 1).unwrap();
        assert_eq!(net.freqs(), &[1e9]);
        assert_eq!(net.at(0)[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn one_port_db_hz() {
        let net = parse_touchstone(b"# Hz S DB R 50\n2e9 -20 90\n", 1).unwrap();
        assert_eq!(net.freqs(), &[2e9]);
        assert!((net.at(0)[(0, 0)] - c(0.0, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn two_port_column_order() {
        let net = parse_touchstone(b"# GHz S MA R 50\n1 0.1 0 0.9 -45 0.9 -45 0.2 0\n", 2).unwrap();
        let m = net.at(0);
        let s21 = Complex64::from_polar(0.9, -45f64.to_radians());
        assert!((m[(0, 0)] - c(0.1, 0.0)).norm() < 1e-15);
        assert!((m[(1, 0)] - s21).norm() < 1e-15);
        assert!((m[(0, 1)] - s21).norm() < 1e-15);
        assert!((m[(1, 1)] - c(0.2, 0.0)).norm() < 1e-15);
        // distinguishable S21 / S12 pins the ordering down
        let net = parse_touchstone(b"# GHz S RI\n1 0 0 0.5 0 0.25 0 0 0\n", 2).unwrap();
        assert_eq!(net.at(0)[(1, 0)], c(0.5, 0.0));
        assert_eq!(net.at(0)[(0, 1)], c(0.25, 0.0));
    }

    #[test]
    fn defaults_without_option_line() {
        let net = parse_touchstone(b"! no options\n2 0.5 180\n", 1).unwrap();
        assert_eq!(net.freqs(), &[2e9]);
        assert!((net.at(0)[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(net.z_ref(), 50.0);
    }

    #[test]
    fn keywords_case_insensitive_and_whitespace() {
        let net = parse_touchstone(b"#\tmhz s ri r 75\n100\t0.1   0.2 ! trailing\n", 1).unwrap();
        assert_eq!(net.freqs(), &[100e6]);
        assert_eq!(net.z_ref(), 75.0);
        assert_eq!(net.at(0)[(0, 0)], c(0.1, 0.2));
    }

    #[test]
    fn four_port_wrapped_rows() {
        let mut text = String::from("# GHz S RI R 50\n");
        for f in [1, 2] {
            text.push_str(&format!("{f}"));
            for r in 0..4 {
                if r > 0 {
                    text.push(' ');
                }
                for col in 0..4 {
                    text.push_str(&format!(" {} {}", r * 4 + col, f));
                }
                text.push('\n');
            }
        }
        let net = parse_touchstone(text.as_bytes(), 4).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.at(1)[(2, 3)], c(11.0, 2.0));
        assert_eq!(net.at(0)[(3, 0)], c(12.0, 1.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_touchstone(b"# GHz S MA\n1 0.1 0\n2 0.1\n", 1).unwrap_err();
        assert_eq!(e, TouchstoneError::WrongValueCount { line: 3, expected: 3, found: 2 });
        let e = parse_touchstone(b"# GHz S MA\n2 0.1 0\n1 0.1 0\n", 1).unwrap_err();
        assert!(matches!(e, TouchstoneError::NonMonotonicFrequency { line: 3, .. }));
        let e = parse_touchstone(b"# GHz Q MA\n", 1).unwrap_err();
        assert!(matches!(e, TouchstoneError::MalformedOptionLine { line: 1, .. }));
        let e = parse_touchstone(b"# GHz Z MA\n", 1).unwrap_err();
        assert!(matches!(e, TouchstoneError::MalformedOptionLine { line: 1, .. }));
        assert_eq!(parse_touchstone(b"! only a comment\n\n", 1).unwrap_err(), TouchstoneError::EmptyFile);
        let e = parse_touchstone(b"[Version] 2.0\n", 1).unwrap_err();
        assert!(matches!(e, TouchstoneError::UnsupportedVersion { line: 1, .. }));
        let e = parse_touchstone(b"1 nan 0\n", 1).unwrap_err();
        assert_eq!(e, TouchstoneError::NonFinite { line: 1 });
        let e = parse_touchstone(b"1 abc 0\n", 1).unwrap_err();
        assert!(matches!(e, TouchstoneError::InvalidNumber { line: 1, .. }));
        let e = parse_touchstone(b"# GHz S RI\n1 0 0 0 0\n", 4).unwrap_err();
        assert!(matches!(e, TouchstoneError::WrongValueCount { line: 2, .. }));
    }

    #[test]
    fn noise_section_is_skipped() {
        let text = b"# GHz S MA R 50\n1 0.1 0 0.9 0 0.9 0 0.1 0\n2 0.1 0 0.9 0 0.9 0 0.1 0\n1 1.5 0.3 20 0.4\n2 1.6 0.3 25 0.4\n";
        let net = parse_touchstone(text, 2).unwrap();
        assert_eq!(net.len(), 2);
    }

    #[test]
    fn frequency_text_is_exact() {
        for &f in &[1e9, 1.7e11, 12345.678, 845000000.0000001, 0.1, 3.0e-3] {
            for unit in [FreqUnit::Hz, FreqUnit::KHz, FreqUnit::MHz, FreqUnit::GHz] {
                let s = format_freq(f, unit.exponent());
                let back = shift_decimal(&s, unit.exponent()).unwrap();
                assert_eq!(back.to_bits(), f.to_bits(), "{f} as {s} in {unit:?}");
            }
        }
        assert_eq!(format_freq(1e9, 9), "1");
        assert_eq!(format_freq(1.7e11, 9), "170");
        assert_eq!(format_freq(1.5e9, 12), "0.0015");
    }

    #[test]
    fn db_write_of_point_one() {
        let g = FrequencyGrid::new(vec![1e9]).unwrap();
        let net = Network::one_port(&g, &[c(0.1, 0.0)], 50.0).unwrap();
        let text = write_touchstone(&net, &TouchstoneOptions::new(FreqUnit::GHz, DataFormat::DbAngle));
        let data = text.lines().last().unwrap();
        let db: f64 = data.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!((db + 20.0).abs() < 1e-12, "{data}");
        assert!(text.contains("# GHz S DB R 50"));
    }

    #[test]
    fn extension_port_count() {
        assert_eq!(ports_from_extension("a/b/dut.s2p"), Some(2));
        assert_eq!(ports_from_extension("X.S4P"), Some(4));
        assert_eq!(ports_from_extension("x.txt"), None);
    }
}
