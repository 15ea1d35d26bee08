//! Short-open-load one-port calibration.

use nalgebra::{Matrix3, Vector3};

use super::{SolverError, DISTINCT_GAMMA_TOL};
use crate::error_model::OnePortTerms;
use crate::sparams::{Network, C64};

/// Solves `Γm = e00 + Γ·Γm·e11 − Γ·Δ` for the three standards, then
/// `tracking = e00·e11 − Δ`.
///
/// `measured[i]` must be the raw reflection of the standard defined by
/// `definitions[i]`; the order of the three standards is free.
pub fn solve_one_port_sol(measured: [&Network; 3], definitions: [&Network; 3]) -> Result<OnePortTerms, SolverError> {
    let grid = measured[0].grid();
    for net in measured.iter().chain(definitions.iter()) {
        net.expect_ports(1)?;
        net.grid().ensure_same(grid)?;
    }
    let gm: Vec<Vec<C64>> = measured.iter().map(|n| n.gamma()).collect();
    let gd: Vec<Vec<C64>> = definitions.iter().map(|n| n.gamma()).collect();
    let n = grid.len();
    let (mut e00, mut e11, mut tracking) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, &freq) in grid.points().iter().enumerate() {
        let g = [gd[0][k], gd[1][k], gd[2][k]];
        let m = [gm[0][k], gm[1][k], gm[2][k]];
        let separation = [(g[0] - g[1]).norm(), (g[0] - g[2]).norm(), (g[1] - g[2]).norm()]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if separation <= DISTINCT_GAMMA_TOL {
            return Err(SolverError::DegenerateStandards { freq, separation });
        }
        let one = C64::new(1.0, 0.0);
        let a = Matrix3::new(
            one, g[0] * m[0], -g[0], //
            one, g[1] * m[1], -g[1], //
            one, g[2] * m[2], -g[2],
        );
        let x = a
            .lu()
            .solve(&Vector3::new(m[0], m[1], m[2]))
            .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
            .ok_or(SolverError::SingularSystem { freq })?;
        let t = x[0] * x[1] - x[2];
        if t.norm() < crate::sparams::tol::SINGULAR {
            return Err(SolverError::SingularSystem { freq });
        }
        e00.push(x[0]);
        e11.push(x[1]);
        tracking.push(t);
    }
    Ok(OnePortTerms::new(grid.clone(), e00, e11, tracking)?)
}
