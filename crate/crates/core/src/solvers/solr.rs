//! Short-open-load-reciprocal calibration of one port pair.
//!
//! SOL fixes each port's one-port terms. The thru, corrected with provisional
//! unit-gauge boxes, is `S' = [[s11, s12/κ], [κ·s21, s22]]` for the true thru
//! `S` and `κ = k(A, B)`. Reciprocity gives `κ² = S'21 / S'12`; the sign of κ
//! flips the corrected thru's transmission phase by π and is chosen by
//! tracking that phase against `exp(−j2πf·τ)` from the lowest frequency up.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use nalgebra::Matrix2;

use super::sol::solve_one_port_sol;
use super::{SolverError, MIN_TRANSMISSION};
use crate::error_model::{MultiPortCalModel, OnePortTerms, PortErrorBox};
use crate::sparams::{s_to_t_point, t_to_s_point, tol, wrap_phase, FrequencyGrid, Network, C64};

/// Largest distance from the predicted phase at which a sign is accepted.
pub const SIGN_TOLERANCE: f64 = FRAC_PI_2 - FRAC_PI_8;

/// Raw SOL measurements and definitions for one port, in (short, open, load) order.
#[derive(Debug, Clone)]
pub struct SolrPort {
    pub measured: [Network; 3],
    pub definitions: [Network; 3],
}

#[derive(Debug, Clone)]
pub struct SolrInput {
    pub port_a: SolrPort,
    pub port_b: SolrPort,
    /// Raw thru, port 1 = A, port 2 = B.
    pub thru: Network,
    /// Coarse one-way thru delay, seconds.
    pub delay_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct SolrResult {
    /// Two-port model, index 0 = A, 1 = B.
    pub model: MultiPortCalModel,
    pub terms_a: OnePortTerms,
    pub terms_b: OnePortTerms,
    /// k(A, B) per point.
    pub k: Vec<C64>,
    /// Unwrapped phase of the corrected thru's S21.
    pub thru_phase: Vec<f64>,
    /// Smallest margin between the chosen phase's distance and [`SIGN_TOLERANCE`].
    pub sign_margin: f64,
}

pub fn solve_solr(input: &SolrInput) -> Result<SolrResult, SolverError> {
    let thru = &input.thru;
    thru.expect_ports(2)?;
    if !input.delay_estimate.is_finite() {
        return Err(SolverError::InvalidInput("delay estimate must be finite".into()));
    }
    let refs = |p: &SolrPort| -> ([Network; 3], [Network; 3]) { (p.measured.clone(), p.definitions.clone()) };
    let (ma, da) = refs(&input.port_a);
    let (mb, db) = refs(&input.port_b);
    let terms_a = solve_one_port_sol([&ma[0], &ma[1], &ma[2]], [&da[0], &da[1], &da[2]])?;
    let terms_b = solve_one_port_sol([&mb[0], &mb[1], &mb[2]], [&db[0], &db[1], &db[2]])?;
    thru.grid().ensure_same(terms_a.grid())?;

    let box_a = PortErrorBox::reciprocal(terms_a.clone());
    let box_b = PortErrorBox::reciprocal(terms_b.clone());
    let grid = thru.grid();
    let tau = input.delay_estimate;

    let mut k = Vec::with_capacity(grid.len());
    let mut thru_phase = Vec::with_capacity(grid.len());
    let mut sign_margin = f64::INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    for (i, &freq) in grid.points().iter().enumerate() {
        let m = thru.at(i);
        let magnitude = m[(1, 0)].norm().min(m[(0, 1)].norm());
        if magnitude < MIN_TRANSMISSION {
            return Err(SolverError::LowTransmission { freq, magnitude });
        }
        let sx = provisional_correction(&box_a, &box_b, i, m, freq)?;
        if sx[(0, 1)].norm() < tol::SINGULAR {
            return Err(SolverError::LowTransmission { freq, magnitude: sx[(0, 1)].norm() });
        }
        let kappa0 = (sx[(1, 0)] / sx[(0, 1)]).sqrt();
        let phase0 = (sx[(1, 0)] / kappa0).arg();
        let predicted = match prev {
            None => -2.0 * PI * freq * tau,
            Some((f_prev, p_prev)) => p_prev - 2.0 * PI * (freq - f_prev) * tau,
        };
        let d_plus = wrap_phase(phase0 - predicted);
        let d_minus = wrap_phase(phase0 + PI - predicted);
        let (kappa, dist) = if d_plus.abs() <= d_minus.abs() { (kappa0, d_plus) } else { (-kappa0, d_minus) };
        if dist.abs() > SIGN_TOLERANCE {
            return Err(SolverError::SignAmbiguous {
                freq,
                candidates: [wrap_phase(phase0), wrap_phase(phase0 + PI)],
                predicted: wrap_phase(predicted),
            });
        }
        sign_margin = sign_margin.min(SIGN_TOLERANCE - dist.abs());
        let phase = predicted + dist;
        prev = Some((freq, phase));
        thru_phase.push(phase);
        k.push(kappa);
    }

    let model = MultiPortCalModel::new(vec![box_a, box_b], vec![((0, 1), k.clone())])?;
    Ok(SolrResult { model, terms_a, terms_b, k, thru_phase, sign_margin })
}

/// `T_A^-1 · T_M · T_B^-1` with the unit-gauge boxes, back in S form.
fn provisional_correction(
    a: &PortErrorBox,
    b: &PortErrorBox,
    i: usize,
    m: &crate::sparams::CMatrix,
    freq: f64,
) -> Result<Matrix2<C64>, SolverError> {
    let side = |bx: &PortErrorBox, reversed: bool| -> Option<Matrix2<C64>> {
        let t = &bx.terms;
        let fwd = bx.split[i];
        let rev = t.tracking[i] / fwd;
        let s = if reversed {
            Matrix2::new(t.e11[i], fwd, rev, t.e00[i])
        } else {
            Matrix2::new(t.e00[i], rev, fwd, t.e11[i])
        };
        s_to_t_point(&s)?.try_inverse()
    };
    let singular = SolverError::SingularSystem { freq };
    let ta = side(a, false).ok_or(singular.clone())?;
    let tb = side(b, true).ok_or(singular.clone())?;
    let tm = s_to_t_point(&Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
        .ok_or(SolverError::LowTransmission { freq, magnitude: m[(1, 0)].norm() })?;
    t_to_s_point(&(ta * tm * tb)).ok_or(singular)
}

/// Longest delay whose phase step between adjacent points stays below π.
pub fn unambiguous_delay_limit(grid: &FrequencyGrid) -> f64 {
    let step = grid.max_step();
    if step > 0.0 {
        1.0 / (2.0 * step)
    } else {
        f64::INFINITY
    }
}

/// Outcome of [`check_thru_phase`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThruPhaseCheck {
    pub passed: bool,
    /// Largest deviation from the delay prediction, radians.
    pub worst_deviation: f64,
    pub worst_freq: f64,
}

/// Checks a corrected thru's S21 phase against `exp(−j2πf·τ)`: the first
/// point must lie within π/2 of the prediction and every step within π/2 of
/// the predicted step.
pub fn check_thru_phase(corrected_thru: &Network, delay_estimate: f64) -> Result<ThruPhaseCheck, SolverError> {
    corrected_thru.expect_ports(2)?;
    let s21 = corrected_thru.entry(1, 0);
    let f = corrected_thru.freqs();
    let mut worst = wrap_phase(s21[0].arg() + 2.0 * PI * f[0] * delay_estimate).abs();
    let mut worst_freq = f[0];
    for i in 1..f.len() {
        let step = (s21[i] / s21[i - 1]).arg();
        let d = wrap_phase(step + 2.0 * PI * (f[i] - f[i - 1]) * delay_estimate).abs();
        if d > worst {
            worst = d;
            worst_freq = f[i];
        }
    }
    Ok(ThruPhaseCheck { passed: worst <= FRAC_PI_2, worst_deviation: worst, worst_freq })
}
