//! Assembly of pairwise calibrations into one n-port model.

use std::collections::BTreeMap;

use super::SolverError;
use crate::error_model::{MultiPortCalModel, PortErrorBox};
use crate::sparams::C64;

/// Probe orientations, indexed by port number.
pub const PORT_LABELS: [&str; 4] = ["N", "E", "S", "W"];

/// Relative agreement required between a port's terms in different pairs.
pub const SHARED_PORT_TOL: f64 = 1e-6;

/// A two-port calibration between global ports `ports.0` (model index 0)
/// and `ports.1` (model index 1).
#[derive(Debug, Clone)]
pub struct PairwiseCal {
    pub ports: (usize, usize),
    pub model: MultiPortCalModel,
}

#[derive(Debug, Clone)]
pub struct FourPortCal {
    pub model: MultiPortCalModel,
    /// Worst relative disagreement of redundant pairs with the tree.
    pub consistency_residual: f64,
    /// Worst relative disagreement of shared-port terms.
    pub shared_port_residual: f64,
}

/// Label for a port number: N/E/S/W for the first four, the index otherwise.
pub fn port_label(port: usize) -> String {
    PORT_LABELS.get(port).map(|s| s.to_string()).unwrap_or_else(|| port.to_string())
}

/// Combines pairwise models. Each port keeps the box from the first pair that
/// names it; other pairs' k values are re-expressed in that box's split.
pub fn build_fourport_cal(n_ports: usize, pairs: &[PairwiseCal]) -> Result<FourPortCal, SolverError> {
    let mut boxes: BTreeMap<usize, PortErrorBox> = BTreeMap::new();
    let mut shared_residual = 0.0_f64;
    for pair in pairs {
        let (i, j) = pair.ports;
        if i == j || i >= n_ports || j >= n_ports {
            return Err(SolverError::InvalidInput(format!("pair ({i}, {j}) for {n_ports} ports")));
        }
        if pair.model.n_ports() != 2 {
            return Err(SolverError::InvalidInput(format!("pair ({i}, {j}) model is not a two-port")));
        }
        for (local, global) in [(0, i), (1, j)] {
            let b = &pair.model.boxes()[local];
            match boxes.get(&global) {
                None => {
                    boxes.insert(global, b.clone());
                }
                Some(existing) => {
                    let r = existing.terms.max_rel_diff(&b.terms);
                    if r > SHARED_PORT_TOL {
                        return Err(SolverError::InconsistentSharedPort { port: global, residual: r });
                    }
                    shared_residual = shared_residual.max(r);
                }
            }
        }
    }
    if boxes.len() != n_ports {
        return Err(SolverError::DisconnectedTree { n_ports });
    }

    // fwd_i·rev_j = t_j·(s_i/s_j)·k(i,j) is gauge free, so
    // k(i,j) = k_pair·(s_i,pair/s_j,pair)·(s_j/s_i).
    let k_pairs = pairs
        .iter()
        .map(|pair| {
            let (i, j) = pair.ports;
            let (bi, bj) = (&boxes[&i], &boxes[&j]);
            let (pi, pj) = (&pair.model.boxes()[0], &pair.model.boxes()[1]);
            let k_pair = pair.model.k_between(0, 1);
            let vals: Vec<C64> = (0..k_pair.len())
                .map(|p| k_pair[p] * (pi.split[p] / pj.split[p]) * (bj.split[p] / bi.split[p]))
                .collect();
            ((i, j), vals)
        })
        .collect();
    let model = MultiPortCalModel::new(boxes.into_values().collect(), k_pairs)?;
    Ok(FourPortCal { consistency_residual: model.consistency_residual(), model, shared_port_residual: shared_residual })
}
