//! Circuit models of on-chip calibration standards and their fixtures.
//!
//! Open and short standards use third-order polynomial capacitance or
//! inductance. The load is a series R–L behind an optional tuning line. Lines
//! are quasi-TEM with conductor loss scaling as √f and dielectric loss scaling
//! as f, both normalized at 1 GHz. A fixture is a shunt pad capacitance at the
//! probe side followed by a feed line.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparams::{
    cascade, db20, reciprocity_error, terminate, FrequencyGrid, Network, NetworkError, C0, C64,
};

/// Tolerance on |Γ| > 1 before a reflect model is declared non-physical.
pub const PASSIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StandardError {
    #[error("non-physical reflection |Γ| = {magnitude} at {freq} Hz")]
    NonPhysical { freq: f64, magnitude: f64 },
    #[error("offset loss must be 0 (got {0} ohm/s)")]
    OffsetLossUnsupported(f64),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("fit needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("|Γ| = {magnitude} at {freq} Hz outside (0.2, 1.2) fit window")]
    OutOfFitWindow { freq: f64, magnitude: f64 },
    #[error("ill-conditioned fit (condition estimate {condition:e} > {bound:e})")]
    IllConditioned { condition: f64, bound: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectKind {
    Open,
    Short,
}

/// Polynomial reflect definition: C0..C3 (F, F/Hz, F/Hz², F/Hz³) for an open,
/// L0..L3 (H, H/Hz, ...) for a short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectPoly {
    pub kind: ReflectKind,
    pub coeffs: [f64; 4],
    pub offset_delay: f64,
    pub offset_loss: f64,
}

impl ReflectPoly {
    pub fn open(coeffs: [f64; 4]) -> Self {
        Self { kind: ReflectKind::Open, coeffs, offset_delay: 0.0, offset_loss: 0.0 }
    }

    pub fn short(coeffs: [f64; 4]) -> Self {
        Self { kind: ReflectKind::Short, coeffs, offset_delay: 0.0, offset_loss: 0.0 }
    }

    /// C(f) or L(f).
    pub fn reactance_param(&self, f: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + f * (c1 + f * (c2 + f * c3))
    }

    /// Reflection without the offset rotation.
    fn bare_gamma(&self, f: f64, z_ref: f64) -> C64 {
        let w = 2.0 * PI * f;
        let x = self.reactance_param(f);
        match self.kind {
            // Γ = (1 − jωCz)/(1 + jωCz), well defined at C = 0.
            ReflectKind::Open => {
                let u = C64::new(0.0, w * x * z_ref);
                (1.0 - u) / (1.0 + u)
            }
            ReflectKind::Short => {
                let z = C64::new(0.0, w * x);
                (z - z_ref) / (z + z_ref)
            }
        }
    }

    pub fn gamma_at(&self, f: f64, z_ref: f64) -> C64 {
        self.bare_gamma(f, z_ref) * C64::from_polar(1.0, -2.0 * 2.0 * PI * f * self.offset_delay)
    }
}

/// Optional line between the probe plane and the load resistor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneLine {
    /// One-way delay, seconds.
    pub delay: f64,
    pub z0: f64,
    /// Conductor loss, Np/m at 1 GHz, scaling as √f.
    #[serde(default)]
    pub loss: f64,
    /// Converts delay to physical length for the loss term.
    #[serde(default = "default_eps_eff")]
    pub eps_eff: f64,
}

fn default_eps_eff() -> f64 {
    4.0
}

impl TuneLine {
    pub fn as_line(&self) -> LineModel {
        let length = self.delay * C0 / self.eps_eff.sqrt();
        LineModel { length, z0: self.z0, eps_eff: self.eps_eff, alpha_c: self.loss, alpha_d: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadModel {
    pub r_dc: f64,
    #[serde(default)]
    pub l_series: f64,
    #[serde(default)]
    pub tune_line: Option<TuneLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineModel {
    /// Physical length, m.
    pub length: f64,
    pub z0: f64,
    pub eps_eff: f64,
    /// Conductor loss, Np/m at 1 GHz, ∝ √f.
    #[serde(default)]
    pub alpha_c: f64,
    /// Dielectric loss, Np/m at 1 GHz, ∝ f.
    #[serde(default)]
    pub alpha_d: f64,
}

impl LineModel {
    /// Propagation constant γ = α + jβ in 1/m.
    pub fn gamma(&self, f: f64) -> C64 {
        let g = f / 1e9;
        let alpha = self.alpha_c * g.sqrt() + self.alpha_d * g;
        let beta = 2.0 * PI * f * self.eps_eff.sqrt() / C0;
        C64::new(alpha, beta)
    }

    pub fn with_length(&self, length: f64) -> Self {
        Self { length, ..self.clone() }
    }

    fn validate(&self) -> Result<(), StandardError> {
        if !(self.z0 > 0.0 && self.eps_eff >= 1.0 && self.alpha_c >= 0.0 && self.alpha_d >= 0.0)
            || !self.length.is_finite()
        {
            return Err(StandardError::InvalidParameter(format!("line {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureModel {
    /// Shunt pad capacitance at the probe side, F.
    pub pad_c: f64,
    pub feed: LineModel,
}

pub fn eval_reflect(model: &ReflectPoly, grid: &FrequencyGrid, z_ref: f64) -> Result<Network, StandardError> {
    if model.offset_loss != 0.0 {
        return Err(StandardError::OffsetLossUnsupported(model.offset_loss));
    }
    let gamma: Vec<C64> = grid.points().iter().map(|&f| model.gamma_at(f, z_ref)).collect();
    for (g, &f) in gamma.iter().zip(grid.points()) {
        if g.norm() > 1.0 + PASSIVE_SLACK {
            return Err(StandardError::NonPhysical { freq: f, magnitude: g.norm() });
        }
    }
    Ok(Network::one_port(grid, &gamma, z_ref)?)
}

pub fn eval_load(model: &LoadModel, grid: &FrequencyGrid, z_ref: f64) -> Result<Network, StandardError> {
    if !(model.r_dc > 0.0) {
        return Err(StandardError::InvalidParameter(format!("load r_dc must be > 0, got {}", model.r_dc)));
    }
    let gamma: Vec<C64> = grid
        .points()
        .iter()
        .map(|&f| {
            let z = C64::new(model.r_dc, 2.0 * PI * f * model.l_series);
            (z - z_ref) / (z + z_ref)
        })
        .collect();
    let bare = Network::one_port(grid, &gamma, z_ref)?;
    match &model.tune_line {
        None => Ok(bare),
        Some(t) => Ok(terminate(&eval_line(&t.as_line(), grid, z_ref)?, &bare)?),
    }
}

/// Lossy line of impedance `z0` seen from a `z_ref` system.
pub fn eval_line(model: &LineModel, grid: &FrequencyGrid, z_ref: f64) -> Result<Network, StandardError> {
    model.validate()?;
    let g0 = (model.z0 - z_ref) / (model.z0 + z_ref);
    Ok(Network::two_port(grid, z_ref, |_, f| {
        let p = (-model.gamma(f) * model.length).exp();
        let p2 = p * p;
        let den = 1.0 - g0 * g0 * p2;
        let s11 = g0 * (1.0 - p2) / den;
        let s21 = p * (1.0 - g0 * g0) / den;
        [[s11, s21], [s21, s11]]
    })?)
}

/// Shunt pad capacitor followed by the feed line; port 1 is the probe side.
pub fn eval_fixture(model: &FixtureModel, grid: &FrequencyGrid, z_ref: f64) -> Result<Network, StandardError> {
    let pad = shunt_capacitor(model.pad_c, grid, z_ref)?;
    Ok(cascade(&pad, &eval_line(&model.feed, grid, z_ref)?)?)
}

pub fn shunt_capacitor(c: f64, grid: &FrequencyGrid, z_ref: f64) -> Result<Network, StandardError> {
    Ok(Network::two_port(grid, z_ref, |_, f| {
        let yz = C64::new(0.0, 2.0 * PI * f * c * z_ref);
        let den = 2.0 + yz;
        let s11 = -yz / den;
        let s21 = C64::new(2.0, 0.0) / den;
        [[s11, s21], [s21, s11]]
    })?)
}

/// Outcome of [`fit_reflect_poly`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectFit {
    pub model: ReflectPoly,
    /// RMS of |Γ_model − Γ_data| over the fitted points.
    pub rms_residual: f64,
    pub max_residual: f64,
    /// Condition number of the column-scaled Jacobian.
    pub condition: f64,
    pub iterations: usize,
}

/// Column-scaled Jacobian condition numbers above this are rejected.
pub const FIT_CONDITION_BOUND: f64 = 1e10;
const FIT_MIN_POINTS: usize = 8;

/// Least-squares fit of C0..C3 (open) or L0..L3 (short) to measured Γ.
///
/// DC points carry no information and are skipped. The fit starts from a
/// linear solve on the reactance parameter recovered pointwise and refines
/// with Gauss–Newton on the complex Γ residual.
pub fn fit_reflect_poly(kind: ReflectKind, gamma: &Network) -> Result<ReflectFit, StandardError> {
    gamma.expect_ports(1)?;
    let z_ref = gamma.z_ref();
    let pts: Vec<(f64, C64)> =
        gamma.freqs().iter().copied().zip(gamma.gamma()).filter(|(f, _)| *f > 0.0).collect();
    if pts.len() < FIT_MIN_POINTS {
        return Err(StandardError::TooFewPoints { needed: FIT_MIN_POINTS, got: pts.len() });
    }
    for &(f, g) in &pts {
        let m = g.norm();
        if !(m > 0.2 && m < 1.2) {
            return Err(StandardError::OutOfFitWindow { freq: f, magnitude: m });
        }
    }
    let f_scale = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let scale = [1.0, f_scale, f_scale * f_scale, f_scale * f_scale * f_scale];
    let n = pts.len();

    // Pointwise reactance parameter, weighted by |dΓ/dx| so the linear solve
    // approximates the Γ-domain objective.
    let mut a = DMatrix::<f64>::zeros(2 * n, 4);
    let mut b = DVector::<f64>::zeros(2 * n);
    for (i, &(f, g)) in pts.iter().enumerate() {
        let w = 2.0 * PI * f;
        let x = match kind {
            ReflectKind::Open => (1.0 - g) / (C64::new(0.0, w * z_ref) * (1.0 + g)),
            ReflectKind::Short => z_ref * (1.0 + g) / (C64::new(0.0, w) * (1.0 - g)),
        };
        let model = ReflectPoly { kind, coeffs: [x.re, 0.0, 0.0, 0.0], offset_delay: 0.0, offset_loss: 0.0 };
        let weight = dgamma_dx(&model, f, z_ref).norm();
        let xn = f / f_scale;
        for k in 0..4 {
            a[(2 * i, k)] = weight * xn.powi(k as i32);
        }
        b[2 * i] = weight * x.re;
        // imaginary part of the pointwise estimate is noise; fit it to zero
        b[2 * i + 1] = 0.0;
    }
    let (mut coeffs, condition) = solve_scaled(&a, &b)?;
    for k in 0..4 {
        coeffs[k] /= scale[k];
    }

    let mut model = ReflectPoly { kind, coeffs, offset_delay: 0.0, offset_loss: 0.0 };
    let mut iterations = 0;
    let mut cond = condition;
    for _ in 0..20 {
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(2 * n, 4);
        let mut r = DVector::<f64>::zeros(2 * n);
        for (i, &(f, g)) in pts.iter().enumerate() {
            let res = g - model.gamma_at(f, z_ref);
            let d = dgamma_dx(&model, f, z_ref);
            let xn = f / f_scale;
            for k in 0..4 {
                let p = xn.powi(k as i32);
                jac[(2 * i, k)] = d.re * p;
                jac[(2 * i + 1, k)] = d.im * p;
            }
            r[2 * i] = res.re;
            r[2 * i + 1] = res.im;
        }
        let (step, c) = solve_scaled(&jac, &r)?;
        cond = c;
        let mut moved = 0.0_f64;
        for k in 0..4 {
            let delta = step[k] / scale[k];
            moved = moved.max((step[k]).abs());
            model.coeffs[k] += delta;
        }
        let size = (0..4).map(|k| (model.coeffs[k] * scale[k]).abs()).fold(0.0, f64::max);
        if moved <= 1e-15 * size.max(1e-30) || moved == 0.0 {
            break;
        }
    }

    let residuals: Vec<f64> = pts.iter().map(|&(f, g)| (g - model.gamma_at(f, z_ref)).norm()).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ReflectFit { model, rms_residual: rms, max_residual: max, condition: cond, iterations })
}

fn dgamma_dx(model: &ReflectPoly, f: f64, z_ref: f64) -> C64 {
    let w = 2.0 * PI * f;
    let x = model.reactance_param(f);
    match model.kind {
        ReflectKind::Open => {
            let u = C64::new(1.0, w * x * z_ref);
            C64::new(0.0, -2.0 * w * z_ref) / (u * u)
        }
        ReflectKind::Short => {
            let u = C64::new(z_ref, w * x);
            C64::new(0.0, 2.0 * w * z_ref) / (u * u)
        }
    }
}

/// Least squares with unit-norm column scaling; returns the solution in the
/// caller's (unscaled) columns and the condition number of the scaled matrix.
fn solve_scaled(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<([f64; 4], f64), StandardError> {
    let norms: Vec<f64> = (0..a.ncols()).map(|k| a.column(k).norm()).collect();
    let mut scaled = a.clone();
    for (k, &nk) in norms.iter().enumerate() {
        if nk > 0.0 {
            scaled.column_mut(k).scale_mut(1.0 / nk);
        }
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= FIT_CONDITION_BOUND) {
        return Err(StandardError::IllConditioned { condition, bound: FIT_CONDITION_BOUND });
    }
    let x = svd.solve(b, 0.0).map_err(|e| StandardError::InvalidParameter(e.to_string()))?;
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = if norms[k] > 0.0 { x[k] / norms[k] } else { 0.0 };
    }
    Ok((out, condition))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdQuantity {
    /// 20·log10|S11| below the threshold.
    S11Below,
    /// 20·log10(reciprocity error) below the threshold.
    S21Reciprocity,
}

/// Extent of the band where a threshold criterion holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    FullGrid,
    /// Criterion holds at every grid point up to and including this frequency.
    UpTo(f64),
    /// Fails already at the first grid point.
    Nowhere,
}

impl Validity {
    pub fn summary(&self, grid: &FrequencyGrid) -> String {
        match self {
            Validity::FullGrid => format!("cal valid over the full grid (to {} GHz)", ghz(grid.last())),
            Validity::UpTo(f) => format!("cal valid to {} GHz", ghz(*f)),
            Validity::Nowhere => "cal invalid: threshold violated at the first frequency".into(),
        }
    }
}

/// Frequency in GHz to 0.1 GHz, without a trailing `.0`.
fn ghz(f: f64) -> String {
    let s = format!("{:.1}", f / 1e9);
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub threshold_db: f64,
    pub quantity: ThresholdQuantity,
    pub valid_up_to: Validity,
    /// threshold_db − value_db per point; positive where the criterion holds.
    pub margin_db: Vec<f64>,
    pub value_db: Vec<f64>,
}

pub fn threshold_report(net: &Network, threshold_db: f64, quantity: ThresholdQuantity) -> ThresholdReport {
    let value_db: Vec<f64> = match quantity {
        ThresholdQuantity::S11Below => net.gamma().into_iter().map(db20).collect(),
        ThresholdQuantity::S21Reciprocity => {
            reciprocity_error(net).into_iter().map(|e| 20.0 * e.log10()).collect()
        }
    };
    let margin_db: Vec<f64> = value_db.iter().map(|v| threshold_db - v).collect();
    let first_fail = value_db.iter().position(|v| !(*v < threshold_db));
    let valid_up_to = match first_fail {
        None => Validity::FullGrid,
        Some(0) => Validity::Nowhere,
        Some(k) => Validity::UpTo(net.freqs()[k - 1]),
    };
    ThresholdReport { threshold_db, quantity, valid_up_to, margin_db, value_db }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(points: &[f64]) -> FrequencyGrid {
        FrequencyGrid::new(points.to_vec()).unwrap()
    }

    fn sweep() -> FrequencyGrid {
        FrequencyGrid::linear(1e9, 170e9, 60).unwrap()
    }

    #[test]
    fn validity_summary_text() {
        let grid = g(&[1e9, 125e9, 170e9]);
        assert_eq!(Validity::UpTo(125e9).summary(&grid), "cal valid to 125 GHz");
        assert_eq!(Validity::UpTo(124.62e9).summary(&grid), "cal valid to 124.6 GHz");
        assert_eq!(Validity::FullGrid.summary(&grid), "cal valid over the full grid (to 170 GHz)");
    }

    #[test]
    fn ideal_open_short() {
        let open = eval_reflect(&ReflectPoly::open([0.0; 4]), &sweep(), 50.0).unwrap();
        assert!(open.gamma().iter().all(|x| (x - C64::new(1.0, 0.0)).norm() < 1e-15));
        let short = eval_reflect(&ReflectPoly::short([0.0; 4]), &sweep(), 50.0).unwrap();
        assert!(short.gamma().iter().all(|x| (x - C64::new(-1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn open_five_femtofarad_at_100ghz() {
        // Oracle: Z = 1/(jωC) = −j318.31 Ω, Γ = (Z − 50)/(Z + 50).
        let w = 2.0 * PI * 1e11;
        let z = C64::new(0.0, -1.0 / (w * 5e-15));
        assert!((z.im + 318.31).abs() < 0.01);
        let oracle = (z - 50.0) / (z + 50.0);
        let net = eval_reflect(&ReflectPoly::open([5e-15, 0.0, 0.0, 0.0]), &g(&[1e11]), 50.0).unwrap();
        let got = net.gamma()[0];
        assert!((got - oracle).norm() < 1e-14);
        assert!((got.norm() - 1.0).abs() < 1e-14);
        assert!((got.arg().to_degrees() + 17.86).abs() < 0.01);
    }

    #[test]
    fn offset_delay_and_loss() {
        let mut m = ReflectPoly::short([0.0; 4]);
        m.offset_delay = 1e-12;
        let net = eval_reflect(&m, &g(&[1e11]), 50.0).unwrap();
        let expect = -C64::from_polar(1.0, -2.0 * 2.0 * PI * 1e11 * 1e-12);
        assert!((net.gamma()[0] - expect).norm() < 1e-14);
        m.offset_loss = 1e9;
        assert!(matches!(eval_reflect(&m, &sweep(), 50.0), Err(StandardError::OffsetLossUnsupported(_))));
    }

    #[test]
    fn negative_capacitance_is_still_lossless() {
        // Purely reactive terminations keep |Γ| = 1 whatever the sign.
        let net = eval_reflect(&ReflectPoly::open([-5e-15, 0.0, 0.0, 0.0]), &sweep(), 50.0).unwrap();
        assert!(net.gamma().iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn load_examples() {
        let matched = LoadModel { r_dc: 50.0, l_series: 0.0, tune_line: None };
        assert!(eval_load(&matched, &sweep(), 50.0).unwrap().gamma().iter().all(|x| x.norm() == 0.0));
        let hundred = LoadModel { r_dc: 100.0, l_series: 0.0, tune_line: None };
        assert!(eval_load(&hundred, &sweep(), 50.0)
            .unwrap()
            .gamma()
            .iter()
            .all(|x| (x - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-15));
        let ind = LoadModel { r_dc: 50.0, l_series: 10e-12, tune_line: None };
        let got = eval_load(&ind, &g(&[1e11]), 50.0).unwrap().gamma()[0];
        let x = 2.0 * PI * 1e11 * 10e-12;
        assert!((x - 2.0 * PI).abs() < 1e-12);
        let oracle = C64::new(0.0, x) / C64::new(100.0, x);
        assert!((got - oracle).norm() < 1e-15);
        assert!((got.norm() - 0.0627).abs() < 5e-5);
        assert!((db20(got) + 24.1).abs() < 0.05);
        assert!(eval_load(&LoadModel { r_dc: 0.0, l_series: 0.0, tune_line: None }, &sweep(), 50.0).is_err());
    }

    #[test]
    fn matched_tune_line_only_rotates() {
        let base = LoadModel { r_dc: 60.0, l_series: 0.0, tune_line: None };
        let tuned = LoadModel {
            tune_line: Some(TuneLine { delay: 1e-12, z0: 50.0, loss: 0.0, eps_eff: 4.0 }),
            ..base.clone()
        };
        let a = eval_load(&base, &sweep(), 50.0).unwrap().gamma();
        let b = eval_load(&tuned, &sweep(), 50.0).unwrap().gamma();
        for ((x, y), &f) in a.iter().zip(&b).zip(sweep().points()) {
            let rot = C64::from_polar(1.0, -2.0 * 2.0 * PI * f * 1e-12);
            assert!((x * rot - y).norm() < 1e-13);
        }
    }

    fn line(length: f64) -> LineModel {
        LineModel { length, z0: 50.0, eps_eff: 4.0, alpha_c: 0.0, alpha_d: 0.0 }
    }

    #[test]
    fn line_examples() {
        let net = eval_line(&line(300e-6), &sweep(), 50.0).unwrap();
        for (m, &f) in net.matrices().iter().zip(sweep().points()) {
            assert!(m[(0, 0)].norm() < 1e-15);
            let beta = 2.0 * PI * f * 2.0 / C0;
            assert!((m[(1, 0)] - C64::from_polar(1.0, -beta * 300e-6)).norm() < 1e-13);
        }
        let zero = eval_line(&line(0.0), &sweep(), 50.0).unwrap();
        assert!(zero.max_abs_diff(&Network::ideal_thru(&sweep(), 50.0)) < 1e-15);
        // βl = 2π·1e11·2/c0·749.5 µm ≈ π
        let half = eval_line(&line(749.5e-6), &g(&[1e11]), 50.0).unwrap();
        assert!((half.at(0)[(1, 0)] - C64::new(-1.0, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn mismatched_line_matches_abcd_oracle() {
        // Independent route: ABCD of a line, converted to S.
        let m = LineModel { length: 400e-6, z0: 35.0, eps_eff: 4.0, alpha_c: 8.0, alpha_d: 0.5 };
        let grid = sweep();
        let net = eval_line(&m, &grid, 50.0).unwrap();
        for (s, &f) in net.matrices().iter().zip(grid.points()) {
            let gl = m.gamma(f) * m.length;
            let (a, b, c, d) = (gl.cosh(), m.z0 * gl.sinh(), gl.sinh() / m.z0, gl.cosh());
            let den = a + b / 50.0 + c * 50.0 + d;
            let s11 = (a + b / 50.0 - c * 50.0 - d) / den;
            let s21 = 2.0 / den;
            assert!((s[(0, 0)] - s11).norm() < 1e-12);
            assert!((s[(1, 0)] - s21).norm() < 1e-12);
        }
    }

    #[test]
    fn fixture_examples() {
        let empty = FixtureModel { pad_c: 0.0, feed: line(0.0) };
        let grid = sweep();
        assert!(eval_fixture(&empty, &grid, 50.0).unwrap().max_abs_diff(&Network::ideal_thru(&grid, 50.0)) < 1e-15);
        let feed = LineModel { length: 55e-6, z0: 45.0, eps_eff: 4.2, alpha_c: 6.0, alpha_d: 0.4 };
        let only_feed = FixtureModel { pad_c: 0.0, feed: feed.clone() };
        assert!(
            eval_fixture(&only_feed, &grid, 50.0).unwrap().max_abs_diff(&eval_line(&feed, &grid, 50.0).unwrap())
                < 1e-15
        );
        let pad = FixtureModel { pad_c: 20e-15, feed: line(0.0) };
        let s21 = eval_fixture(&pad, &g(&[1e11]), 50.0).unwrap().at(0)[(1, 0)];
        let yz = C64::new(0.0, 2.0 * PI * 1e11 * 20e-15 * 50.0);
        assert!((yz.im - 0.6283).abs() < 1e-4);
        assert!((s21 - 2.0 / (2.0 + yz)).norm() < 1e-15);
        assert!((s21.norm() - 0.954).abs() < 5e-4);
    }

    #[test]
    fn fit_recovers_open_capacitance() {
        let grid = sweep();
        let data = eval_reflect(&ReflectPoly::open([5e-15, 0.0, 0.0, 0.0]), &grid, 50.0).unwrap();
        let fit = fit_reflect_poly(ReflectKind::Open, &data).unwrap();
        assert!((fit.model.coeffs[0] - 5e-15).abs() < 1e-18);
        let f = grid.last();
        for k in 1..4 {
            assert!((fit.model.coeffs[k] * f.powi(k as i32)).abs() < 1e-20);
        }
        assert!(fit.max_residual < 1e-12);
    }

    #[test]
    fn fit_recovers_short_inductance_slope() {
        let grid = sweep();
        let truth = ReflectPoly::short([2e-12, 0.01e-12 / 1e9, 0.0, 0.0]);
        let data = eval_reflect(&truth, &grid, 50.0).unwrap();
        let fit = fit_reflect_poly(ReflectKind::Short, &data).unwrap();
        assert!((fit.model.coeffs[0] - 2e-12).abs() < 1e-18);
        assert!((fit.model.coeffs[1] - 1e-23).abs() < 1e-27);
    }

    #[test]
    fn fit_of_ideal_open_is_zero() {
        let grid = sweep();
        let data = Network::one_port(&grid, &vec![C64::new(1.0, 0.0); grid.len()], 50.0).unwrap();
        let fit = fit_reflect_poly(ReflectKind::Open, &data).unwrap();
        for k in 0..4 {
            assert!((fit.model.coeffs[k] * grid.last().powi(k as i32)).abs() < 1e-25);
        }
    }

    #[test]
    fn fit_preconditions() {
        let few = FrequencyGrid::linear(1e9, 10e9, 5).unwrap();
        let data = eval_reflect(&ReflectPoly::open([5e-15, 0.0, 0.0, 0.0]), &few, 50.0).unwrap();
        assert!(matches!(fit_reflect_poly(ReflectKind::Open, &data), Err(StandardError::TooFewPoints { .. })));
        let grid = sweep();
        let load = Network::one_port(&grid, &vec![C64::new(0.05, 0.0); grid.len()], 50.0).unwrap();
        assert!(matches!(fit_reflect_poly(ReflectKind::Open, &load), Err(StandardError::OutOfFitWindow { .. })));
        // Eight points in a 1 ppm band: the cubic columns are collinear.
        let narrow = FrequencyGrid::linear(100e9, 100.0001e9, 8).unwrap();
        let data = eval_reflect(&ReflectPoly::open([5e-15, 0.0, 0.0, 0.0]), &narrow, 50.0).unwrap();
        assert!(matches!(fit_reflect_poly(ReflectKind::Open, &data), Err(StandardError::IllConditioned { .. })));
    }

    #[test]
    fn threshold_matched_load_full_grid() {
        let grid = sweep();
        let net = eval_load(&LoadModel { r_dc: 50.0, l_series: 0.0, tune_line: None }, &grid, 50.0).unwrap();
        let rep = threshold_report(&net, -15.0, ThresholdQuantity::S11Below);
        assert_eq!(rep.valid_up_to, Validity::FullGrid);
    }

    #[test]
    fn threshold_cut_points() {
        let grid = g(&[1e9, 2e9, 3e9, 4e9]);
        let net = Network::one_port(
            &grid,
            &[C64::new(0.01, 0.0), C64::new(0.1, 0.0), C64::new(0.5, 0.0), C64::new(0.01, 0.0)],
            50.0,
        )
        .unwrap();
        let rep = threshold_report(&net, -15.0, ThresholdQuantity::S11Below);
        assert_eq!(rep.valid_up_to, Validity::UpTo(2e9));
        assert!(rep.margin_db[2] < 0.0 && rep.margin_db[3] > 0.0);
        let bad = Network::one_port(&grid, &[C64::new(0.9, 0.0); 4], 50.0).unwrap();
        assert_eq!(threshold_report(&bad, -15.0, ThresholdQuantity::S11Below).valid_up_to, Validity::Nowhere);
        let recip = Network::ideal_thru(&grid, 50.0);
        let rep = threshold_report(&recip, -200.0, ThresholdQuantity::S21Reciprocity);
        assert_eq!(rep.valid_up_to, Validity::FullGrid);
    }
}
