//! Multiline thru-reflect-line calibration.
//!
//! Each measured standard is `T_M = T_A · T_L · T_B` where `T_L` is the
//! line's T-matrix at its effective length (line length minus thru length,
//! so the thru sits at length 0 and the reference plane at its center). A
//! matched line has `T_L = diag(e^{−γl}, e^{γl})`.
//!
//! For two standards a, b with `Δ = l_b − l_a`:
//!
//! * `P = T_b · T_a^-1 = T_A · diag(e^{−γΔ}, e^{γΔ}) · T_A^-1`, so the
//!   eigenvalues give γ and the right eigenvectors are the columns of `T_A`;
//! * `Q = T_a^-1 · T_b = T_B^-1 · diag(…) · T_B`, whose left eigenvectors are
//!   the rows of `T_B`.
//!
//! Writing the columns of `T_A` as `x11·(1, q1)` and `x22·(e00, 1)` and the
//! rows of `T_B` as `y11·(1, q2)` and `y22·(−e00', 1)`, the thru gives
//!
//! ```text
//! ν·m11 = w − e00·e00'      ν·m12 = q2·w + e00
//! ν·m21 = q1·w − e00'       ν·m22 = 1 + q1·q2·w
//! ```
//!
//! with `w = (x11/x22)(y11/y22)` and `ν = 1/(x22·y22)`, solved in the least
//! squares sense. The reflect fixes `x11/x22` and `y11/y22` up to a common
//! sign, which the reflect hint resolves.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};

use super::SolverError;
use crate::error_model::{MultiPortCalModel, OnePortTerms, PortErrorBox};
use crate::sparams::{s_to_t_point, tol, FrequencyGrid, Network, C0, C64};

pub const DEFAULT_DEGENERATE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectHint {
    OpenLike,
    ShortLike,
}

impl ReflectHint {
    fn sign(self) -> f64 {
        match self {
            ReflectHint::OpenLike => 1.0,
            ReflectHint::ShortLike => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MtrlLine {
    /// Physical length, meters.
    pub length: f64,
    pub measured: Network,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtrlOptions {
    /// A pair is degenerate when `|β·Δl − nπ|` is below this, radians.
    pub degenerate_tol: f64,
    /// Seeds the first-point branch instead of the shortest pair.
    pub eps_eff_hint: Option<f64>,
}

impl Default for MtrlOptions {
    fn default() -> Self {
        Self { degenerate_tol: DEFAULT_DEGENERATE_TOL, eps_eff_hint: None }
    }
}

#[derive(Debug, Clone)]
pub struct MtrlInput {
    pub thru: Network,
    pub thru_length: f64,
    pub lines: Vec<MtrlLine>,
    /// Raw reflect at port A and port B.
    pub reflect: [Network; 2],
    pub reflect_hint: ReflectHint,
    pub options: MtrlOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    grid: FrequencyGrid,
    /// Propagation constant, Np/m + j·rad/m.
    pub gamma: Vec<C64>,
    /// Weighted spread of the per-pair estimates, relative to |γ|.
    pub residual: Vec<f64>,
    /// True where every pair is within the degenerate tolerance.
    pub flagged: Vec<bool>,
}

impl GammaEstimate {
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Contiguous runs of flagged points as (first, last) frequency.
    pub fn flagged_bands(&self) -> Vec<(f64, f64)> {
        let f = self.grid.points();
        let mut bands = Vec::new();
        let mut start: Option<usize> = None;
        for i in 0..=f.len() {
            let on = i < f.len() && self.flagged[i];
            match (on, start) {
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
}

#[derive(Debug, Clone)]
pub struct MtrlResult {
    pub gamma: GammaEstimate,
    /// Two-port model at the thru center, index 0 = A, 1 = B.
    pub model: MultiPortCalModel,
    pub terms_a: OnePortTerms,
    pub terms_b: OnePortTerms,
    /// Reflect at the reference plane, as recovered.
    pub reflect_gamma: Vec<C64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Path {
    MultiPair,
    Classic,
}

/// Multi-pair solve with weighted γ and eigenvector combination.
pub fn solve_mtrl(input: &MtrlInput) -> Result<MtrlResult, SolverError> {
    solve(input, Path::MultiPair)
}

/// Textbook TRL on a single thru/line pair, via the eigenvector quadratics.
pub fn solve_trl_classic(input: &MtrlInput) -> Result<MtrlResult, SolverError> {
    if input.lines.len() != 1 {
        return Err(SolverError::InvalidInput(format!("classic TRL takes one line, got {}", input.lines.len())));
    }
    solve(input, Path::Classic)
}

struct Standard {
    length: f64,
    t: Vec<Matrix2<C64>>,
}

fn to_t(net: &Network) -> Result<Vec<Matrix2<C64>>, SolverError> {
    net.expect_ports(2)?;
    net.matrices()
        .iter()
        .zip(net.freqs())
        .map(|(m, &freq)| {
            s_to_t_point(&Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
                .ok_or(SolverError::LowTransmission { freq, magnitude: m[(1, 0)].norm() })
        })
        .collect()
}

fn standards(input: &MtrlInput) -> Result<Vec<Standard>, SolverError> {
    if input.lines.is_empty() {
        return Err(SolverError::InvalidInput("at least one line besides the thru is required".into()));
    }
    let grid = input.thru.grid();
    let mut out = vec![Standard { length: 0.0, t: to_t(&input.thru)? }];
    for line in &input.lines {
        line.measured.grid().ensure_same(grid)?;
        let length = line.length - input.thru_length;
        if !length.is_finite() {
            return Err(SolverError::InvalidInput(format!("line length {}", line.length)));
        }
        if out.iter().any(|s| (s.length - length).abs() < 1e-12) {
            return Err(SolverError::InvalidInput(format!("duplicate effective line length {length:e} m")));
        }
        out.push(Standard { length, t: to_t(&line.measured)? });
    }
    Ok(out)
}

fn eigenvalues(p: &Matrix2<C64>) -> (C64, C64) {
    let half_tr = (p[(0, 0)] + p[(1, 1)]) / 2.0;
    let disc = (half_tr * half_tr - p.determinant()).sqrt();
    (half_tr - disc, half_tr + disc)
}

/// Orders `(λ1, λ2)` so that λ1 ≈ e^{−γΔ}, then returns γ on the branch closest
/// to `predicted`.
fn pair_gamma(l: (C64, C64), predicted: C64, delta: f64) -> ((C64, C64), C64) {
    let e = (-predicted * delta).exp();
    let straight = (l.0 - e).norm() + (l.1 - e.inv()).norm();
    let swapped = (l.1 - e).norm() + (l.0 - e.inv()).norm();
    let (l1, l2) = if straight <= swapped { l } else { (l.1, l.0) };
    let x = (l2 / l1).ln();
    let n = ((2.0 * predicted.im * delta - x.im) / (2.0 * PI)).round();
    ((l1, l2), (x + C64::new(0.0, 2.0 * PI * n)) / (2.0 * delta))
}

/// Right eigenvector of `p` for `lambda`, from the better-conditioned row.
fn right_eigvec(p: &Matrix2<C64>, lambda: C64) -> (C64, C64) {
    let a = (p[(0, 1)], lambda - p[(0, 0)]);
    let b = (lambda - p[(1, 1)], p[(1, 0)]);
    if a.0.norm_sqr() + a.1.norm_sqr() >= b.0.norm_sqr() + b.1.norm_sqr() {
        a
    } else {
        b
    }
}

/// Left eigenvector of `q` for `lambda`.
fn left_eigvec(q: &Matrix2<C64>, lambda: C64) -> (C64, C64) {
    let a = (q[(1, 0)], lambda - q[(0, 0)]);
    let b = (lambda - q[(1, 1)], q[(0, 1)]);
    if a.0.norm_sqr() + a.1.norm_sqr() >= b.0.norm_sqr() + b.1.norm_sqr() {
        a
    } else {
        b
    }
}

/// Roots of `a·r² + b·r + c`, avoiding cancellation.
fn quadratic_roots(a: C64, b: C64, c: C64) -> Option<(C64, C64)> {
    if a.norm() < tol::SINGULAR {
        return None;
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    let q = if (b + disc).norm() >= (b - disc).norm() { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
    if q.norm() < tol::SINGULAR {
        return None;
    }
    Some((q / a, c / q))
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Box ratios `(q1, e00, q2, e00')` from one pair.
struct PairEstimate {
    gamma: C64,
    ratios: [C64; 4],
    delta: f64,
}

fn estimate_pair_eigen(ta: &Matrix2<C64>, tb: &Matrix2<C64>, predicted: C64, delta: f64) -> Option<PairEstimate> {
    let ta_inv = ta.try_inverse()?;
    let p = tb * ta_inv;
    let q = ta_inv * tb;
    let ((l1, l2), gamma) = pair_gamma(eigenvalues(&p), predicted, delta);
    let c1 = right_eigvec(&p, l1);
    let c2 = right_eigvec(&p, l2);
    let r1 = left_eigvec(&q, l1);
    let r2 = left_eigvec(&q, l2);
    let ratios = [c1.1 / c1.0, c2.0 / c2.1, r1.1 / r1.0, -r2.0 / r2.1];
    (finite(gamma) && ratios.iter().all(|&z| finite(z))).then_some(PairEstimate { gamma, ratios, delta })
}

fn estimate_pair_quadratic(ta: &Matrix2<C64>, tb: &Matrix2<C64>, predicted: C64, delta: f64) -> Option<PairEstimate> {
    let ta_inv = ta.try_inverse()?;
    let p = tb * ta_inv;
    let q = ta_inv * tb;
    // Column (1, r): p12·r² + (p11 − p22)·r − p21 = 0, eigenvalue p11 + p12·r.
    let (ra, rb) = quadratic_roots(p[(0, 1)], p[(0, 0)] - p[(1, 1)], -p[(1, 0)])?;
    let lam_r = |r: C64| p[(0, 0)] + p[(0, 1)] * r;
    // Row (1, s): q21·s² + (q11 − q22)·s − q12 = 0, eigenvalue q11 + q21·s.
    let (sa, sb) = quadratic_roots(q[(1, 0)], q[(0, 0)] - q[(1, 1)], -q[(0, 1)])?;
    let lam_s = |s: C64| q[(0, 0)] + q[(1, 0)] * s;
    let ((l1, _), gamma) = pair_gamma((lam_r(ra), lam_r(rb)), predicted, delta);
    let (q1, r_other) = if (lam_r(ra) - l1).norm() <= (lam_r(rb) - l1).norm() { (ra, rb) } else { (rb, ra) };
    let (q2, s_other) = if (lam_s(sa) - l1).norm() <= (lam_s(sb) - l1).norm() { (sa, sb) } else { (sb, sa) };
    let ratios = [q1, r_other.inv(), q2, -s_other.inv()];
    (finite(gamma) && ratios.iter().all(|&z| finite(z))).then_some(PairEstimate { gamma, ratios, delta })
}

fn seed_gamma(stds: &[Standard], k: usize, freq: f64, options: &MtrlOptions) -> Result<C64, SolverError> {
    if let Some(eps) = options.eps_eff_hint {
        if !(eps >= 1.0 && eps.is_finite()) {
            return Err(SolverError::InvalidInput(format!("eps_eff_hint {eps}")));
        }
        return Ok(C64::new(0.0, 2.0 * PI * freq * eps.sqrt() / C0));
    }
    // Shortest pair on the principal branch, assuming β·Δ < π/2 there.
    let mut best: Option<(f64, usize, usize)> = None;
    for a in 0..stds.len() {
        for b in (a + 1)..stds.len() {
            let d = (stds[b].length - stds[a].length).abs();
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, a, b));
            }
        }
    }
    let (_, a, b) = best.expect("at least two standards");
    let delta = stds[b].length - stds[a].length;
    let p = stds[b].t[k] * stds[a].t[k].try_inverse().ok_or(SolverError::SingularSystem { freq })?;
    let (l1, l2) = eigenvalues(&p);
    let mut gamma = (l2 / l1).ln() / (2.0 * delta);
    if gamma.im < 0.0 {
        gamma = -gamma;
    }
    if !finite(gamma) {
        return Err(SolverError::SingularSystem { freq });
    }
    Ok(gamma)
}

fn is_degenerate(beta: f64, delta: f64, tol: f64) -> bool {
    let x = beta * delta;
    (x - (x / PI).round() * PI).abs() < tol
}

fn solve(input: &MtrlInput, path: Path) -> Result<MtrlResult, SolverError> {
    let grid = input.thru.grid().clone();
    if grid.first() <= 0.0 {
        return Err(SolverError::InvalidInput("multiline TRL needs f > 0 at every point".into()));
    }
    for r in &input.reflect {
        r.expect_ports(1)?;
        r.grid().ensure_same(&grid)?;
    }
    let stds = standards(input)?;
    let ga = input.reflect[0].gamma();
    let gb = input.reflect[1].gamma();
    let n = grid.len();
    let lengths = stds.iter().map(|s| s.length);
    let max_delta = lengths.clone().fold(f64::MIN, f64::max) - lengths.fold(f64::MAX, f64::min);

    let mut gammas = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut flagged = Vec::with_capacity(n);
    let (mut e00a, mut e11a, mut ta) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut e00b, mut e11b, mut tb) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut nu = Vec::with_capacity(n);
    let mut reflect_gamma = Vec::with_capacity(n);
    let mut last_good: Option<(f64, C64)> = None;

    for (k, &freq) in grid.points().iter().enumerate() {
        let predicted = match last_good {
            Some((f, g)) => g * (freq / f),
            None => seed_gamma(&stds, k, freq, &input.options)?,
        };
        let mut estimates = Vec::new();
        for a in 0..stds.len() {
            for b in (a + 1)..stds.len() {
                let delta = stds[b].length - stds[a].length;
                let est = match path {
                    Path::MultiPair => estimate_pair_eigen(&stds[a].t[k], &stds[b].t[k], predicted, delta),
                    Path::Classic => estimate_pair_quadratic(&stds[a].t[k], &stds[b].t[k], predicted, delta),
                };
                if let Some(e) = est {
                    estimates.push(e);
                }
            }
        }
        if estimates.is_empty() {
            return Err(SolverError::SingularSystem { freq });
        }
        let all_degenerate = stds
            .iter()
            .enumerate()
            .flat_map(|(a, sa)| stds[a + 1..].iter().map(move |sb| sb.length - sa.length))
            .all(|d| is_degenerate(predicted.im, d, input.options.degenerate_tol));

        let mut weights: Vec<f64> = estimates.iter().map(|e| (e.gamma.im * e.delta).sin().powi(2)).collect();
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        } else {
            weights = vec![1.0 / estimates.len() as f64; estimates.len()];
        }
        let combine = |f: &dyn Fn(&PairEstimate) -> C64| -> C64 {
            estimates.iter().zip(&weights).map(|(e, &w)| f(e) * w).sum()
        };
        let gamma = combine(&|e| e.gamma);
        let spread = estimates.iter().zip(&weights).map(|(e, &w)| w * (e.gamma - gamma).norm_sqr()).sum::<f64>().sqrt();
        residual.push(spread / gamma.norm());

        let deviation = (gamma.im - predicted.im).abs() * max_delta;
        if deviation > PI / 2.0 {
            return Err(SolverError::BranchTrackingLost { freq, deviation });
        }
        if !all_degenerate {
            last_good = Some((freq, gamma));
        }
        gammas.push(gamma);
        flagged.push(all_degenerate);

        let [q1, e00, q2, e00p] = [0, 1, 2, 3].map(|i| combine(&|e| e.ratios[i]));

        let m = &stds[0].t[k];
        let a = DMatrix::from_row_slice(
            4,
            2,
            &[m[(0, 0)], -C64::new(1.0, 0.0), m[(0, 1)], -q2, m[(1, 0)], -q1, m[(1, 1)], -q1 * q2],
        );
        let rhs = DVector::from_column_slice(&[-e00 * e00p, e00, -e00p, C64::new(1.0, 0.0)]);
        let sol = a
            .svd(true, true)
            .solve(&rhs, 0.0)
            .map_err(|_| SolverError::SingularSystem { freq })?;
        let (nu_k, w) = (sol[0], sol[1]);

        let z = (ga[k] - e00) / (1.0 - q1 * ga[k]);
        let zp = (gb[k] - e00p) / (1.0 + q2 * gb[k]);
        let mut refl = (z * zp / w).sqrt();
        if refl.re * input.reflect_hint.sign() < 0.0 {
            refl = -refl;
        }
        let (ua, ub) = (z / refl, zp / refl);
        let t_a = ua * (1.0 - e00 * q1);
        let t_b = ub * (1.0 + q2 * e00p);
        if ![nu_k, w, refl, t_a, t_b].iter().all(|&x| finite(x) && x.norm() > tol::SINGULAR) {
            return Err(SolverError::SingularSystem { freq });
        }
        e00a.push(e00);
        e11a.push(-ua * q1);
        ta.push(t_a);
        e00b.push(e00p);
        e11b.push(ub * q2);
        tb.push(t_b);
        nu.push(nu_k);
        reflect_gamma.push(refl);
    }

    if flagged.iter().all(|&f| f) {
        return Err(SolverError::AllPairsDegenerate { start: grid.first(), stop: grid.last(), points: n });
    }
    if let Some((i, g)) = gammas.iter().enumerate().find(|(_, g)| g.re < -1e-6) {
        log::warn!("recovered attenuation {} Np/m at {} Hz is negative", g.re, grid.points()[i]);
    }

    let terms_a = OnePortTerms::new(grid.clone(), e00a, e11a, ta)?;
    let terms_b = OnePortTerms::new(grid.clone(), e00b, e11b, tb)?;
    let box_a = PortErrorBox::reciprocal(terms_a.clone());
    let box_b = PortErrorBox::reciprocal(terms_b.clone());
    // fwd_A · rev_B = ν  ⇒  k(A, B) = ν·s_B / (s_A·t_B)
    let k: Vec<C64> = (0..n).map(|i| nu[i] * box_b.split[i] / (box_a.split[i] * terms_b.tracking[i])).collect();
    let model = MultiPortCalModel::new(vec![box_a, box_b], vec![((0, 1), k)])?;
    Ok(MtrlResult {
        gamma: GammaEstimate { grid, gamma: gammas, residual, flagged },
        model,
        terms_a,
        terms_b,
        reflect_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::{correct_multiport, embed_multiport, embed_oneport};
    use crate::pack::StandardPack;
    use crate::standards::{eval_line, LineModel};

    fn truth(grid: &FrequencyGrid) -> MultiPortCalModel {
        let boxes: Vec<Network> = [0.3, 2.1]
            .iter()
            .map(|&s| {
                Network::two_port(grid, 50.0, |k, _| {
                    let p = s + 0.02 * k as f64;
                    let fwd = C64::from_polar(0.8, -2.0 * p);
                    [[C64::from_polar(0.1, p), fwd], [fwd, C64::from_polar(0.2, 1.0 - p)]]
                })
                .unwrap()
            })
            .collect();
        MultiPortCalModel::from_two_ports(&boxes).unwrap()
    }

    fn input(grid: &FrequencyGrid, medium: &LineModel, lines: &[f64], model: &MultiPortCalModel) -> MtrlInput {
        let raw = |len: f64| embed_multiport(model, &eval_line(&medium.with_length(len), grid, 50.0).unwrap()).unwrap();
        let short = Network::one_port(grid, &vec![C64::new(-1.0, 0.0); grid.len()], 50.0).unwrap();
        MtrlInput {
            thru: raw(0.0),
            thru_length: 0.0,
            lines: lines.iter().map(|&l| MtrlLine { length: l, measured: raw(l) }).collect(),
            reflect: [0, 1].map(|p| embed_oneport(&model.boxes()[p].terms, &short).unwrap()),
            reflect_hint: ReflectHint::ShortLike,
            options: MtrlOptions::default(),
        }
    }

    fn medium() -> LineModel {
        StandardPack::nyu28().medium.line(0.0)
    }

    #[test]
    fn gamma_and_boxes_recovered() {
        let grid = FrequencyGrid::linear(1e9, 170e9, 201).unwrap();
        let model = truth(&grid);
        let r = solve_mtrl(&input(&grid, &medium(), &[250e-6, 550e-6, 1.3e-3], &model)).unwrap();
        assert!(r.gamma.flagged.iter().all(|f| !f));
        for (g, &f) in r.gamma.gamma.iter().zip(grid.points()) {
            let want = medium().gamma(f);
            assert!((g - want).norm() / want.norm() < 1e-6, "{f}: {g} vs {want}");
        }
        assert!(r.model.boxes()[0].terms.max_rel_diff(&model.boxes()[0].terms) < 1e-9);
        assert!(r.model.boxes()[1].terms.max_rel_diff(&model.boxes()[1].terms) < 1e-9);
        assert!(r.reflect_gamma.iter().all(|g| (g + 1.0).norm() < 1e-9));
        let dut = Network::two_port(&grid, 50.0, |_, _| {
            [[C64::new(0.1, 0.2), C64::new(0.5, -0.1)], [C64::new(0.4, 0.3), C64::new(-0.2, 0.0)]]
        })
        .unwrap();
        let corrected = correct_multiport(&r.model, &embed_multiport(&model, &dut).unwrap()).unwrap();
        assert!(corrected.max_abs_diff(&dut) < 1e-9);
    }

    #[test]
    fn lossless_line_has_no_attenuation() {
        let grid = FrequencyGrid::linear(1e9, 170e9, 201).unwrap();
        let lossless = LineModel { alpha_c: 0.0, alpha_d: 0.0, ..medium() };
        let r = solve_mtrl(&input(&grid, &lossless, &[250e-6, 550e-6, 1.3e-3], &truth(&grid))).unwrap();
        assert!(r.gamma.gamma.iter().all(|g| g.re.abs() < 1e-9));
    }

    #[test]
    fn single_pair_matches_classic_trl() {
        let grid = FrequencyGrid::linear(1e9, 100e9, 60).unwrap();
        let model = truth(&grid);
        let inp = input(&grid, &medium(), &[550e-6], &model);
        let multi = solve_mtrl(&inp).unwrap();
        let classic = solve_trl_classic(&inp).unwrap();
        for (a, b) in multi.gamma.gamma.iter().zip(&classic.gamma.gamma) {
            assert!((a - b).norm() / a.norm() < 1e-10);
        }
        assert!(multi.terms_a.max_rel_diff(&classic.terms_a) < 1e-10);
        assert!(multi.terms_b.max_rel_diff(&classic.terms_b) < 1e-10);
        assert!(classic.terms_a.max_rel_diff(&model.boxes()[0].terms) < 1e-9);
    }

    #[test]
    fn degenerate_band_is_flagged() {
        let grid = FrequencyGrid::linear(1e9, 170e9, 201).unwrap();
        let r = solve_mtrl(&input(&grid, &medium(), &[1.3e-3], &truth(&grid))).unwrap();
        for (i, &f) in grid.points().iter().enumerate() {
            let want = is_degenerate(medium().gamma(f).im, 1.3e-3, DEFAULT_DEGENERATE_TOL);
            assert_eq!(r.gamma.flagged[i], want, "{f}");
        }
        assert!(!r.gamma.flagged_bands().is_empty());
    }

    #[test]
    fn invalid_inputs_rejected() {
        let grid = FrequencyGrid::linear(0.0, 10e9, 5).unwrap();
        let inp = input(&grid, &medium(), &[550e-6], &truth(&grid));
        assert!(matches!(solve_mtrl(&inp), Err(SolverError::InvalidInput(_))));
        let grid = FrequencyGrid::linear(1e9, 10e9, 5).unwrap();
        let mut inp = input(&grid, &medium(), &[550e-6, 550e-6], &truth(&grid));
        assert!(matches!(solve_mtrl(&inp), Err(SolverError::InvalidInput(_))));
        inp.lines.clear();
        assert!(matches!(solve_mtrl(&inp), Err(SolverError::InvalidInput(_))));
    }

    #[test]
    fn quadratic_roots_are_roots() {
        let (a, b, c) = (C64::new(1.0, 2.0), C64::new(-3.0, 0.5), C64::new(0.25, -1.0));
        let (r1, r2) = quadratic_roots(a, b, c).unwrap();
        for r in [r1, r2] {
            assert!((a * r * r + b * r + c).norm() < 1e-14);
        }
    }
}
