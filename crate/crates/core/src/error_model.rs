//! Eight-term error model and its n-port generalization.
//!
//! Each port has an error box between the analyzer reference (box port 1) and
//! the probe tip (box port 2):
//!
//! ```text
//! S_box = [ e00  rev ]     tracking = fwd · rev
//!         [ fwd  e11 ]
//! ```
//!
//! One-port measurements only see `e00`, `e11` and `tracking`. How the
//! tracking product splits into `fwd` and `rev` only matters through the
//! transmission tracking `rev_i · fwd_j` between ports, which is what the
//! k-ratios on a spanning tree of port pairs fix.
//!
//! With per-port gauge `g_i` derived from the tree (`k(i,j) = g_i / g_j`), the
//! effective forward factor is `fwd_i = split_i · g_i` and
//! `rev_i = tracking_i / fwd_i`. The raw measurement is
//!
//! ```text
//! M = E00 + R · S · (I − E11 · S)^-1 · F
//! ```
//!
//! with diagonal `E00`, `E11`, `F = diag(fwd)` and `R = diag(rev)`. Switch
//! terms are not modelled: raw data must already be switch-corrected.

use std::collections::VecDeque;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::sparams::{
    s_to_t_point, t_to_s_point, tol, CMatrix, FrequencyGrid, Network, NetworkError, C64,
};

/// Relative agreement required between redundant k-pairs.
pub const K_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("pole of the measurement map (|1 − e11·Γ| < 1e-12) at {freq} Hz")]
    PoleHit { freq: f64 },
    #[error("singular correction at {freq} Hz (condition estimate {condition:e})")]
    SingularCorrection { freq: f64, condition: f64 },
    #[error("singular embedding (I − E11·S not invertible) at {freq} Hz")]
    SingularEmbedding { freq: f64 },
    #[error("zero reflection tracking at {freq} Hz")]
    ZeroTracking { freq: f64 },
    #[error("k-pairs do not connect all {n_ports} ports")]
    Disconnected { n_ports: usize },
    #[error("invalid k-pair ({0}, {1})")]
    InvalidPair(usize, usize),
    #[error("redundant k-pair ({i}, {j}) disagrees with the tree by {residual:e} (relative)")]
    InconsistentK { i: usize, j: usize, residual: f64 },
    #[error("model has {model} ports, network has {network}")]
    PortMismatch { model: usize, network: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Directivity, source match and reflection tracking of one port.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePortTerms {
    grid: FrequencyGrid,
    pub e00: Vec<C64>,
    pub e11: Vec<C64>,
    pub tracking: Vec<C64>,
}

impl OnePortTerms {
    pub fn new(grid: FrequencyGrid, e00: Vec<C64>, e11: Vec<C64>, tracking: Vec<C64>) -> Result<Self, ModelError> {
        let n = grid.len();
        if e00.len() != n || e11.len() != n || tracking.len() != n {
            return Err(ModelError::Length(format!("terms vs {n} grid points")));
        }
        for (t, &f) in tracking.iter().zip(grid.points()) {
            if t.norm() < tol::SINGULAR {
                return Err(ModelError::ZeroTracking { freq: f });
            }
        }
        Ok(Self { grid, e00, e11, tracking })
    }

    pub fn identity(grid: &FrequencyGrid) -> Self {
        let n = grid.len();
        Self {
            grid: grid.clone(),
            e00: vec![C64::new(0.0, 0.0); n],
            e11: vec![C64::new(0.0, 0.0); n],
            tracking: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Constant terms at every point.
    pub fn constant(grid: &FrequencyGrid, e00: C64, e11: C64, tracking: C64) -> Result<Self, ModelError> {
        let n = grid.len();
        Self::new(grid.clone(), vec![e00; n], vec![e11; n], vec![tracking; n])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest |Δ| over all three terms, relative to `1 + |x|`.
    pub fn max_rel_diff(&self, other: &OnePortTerms) -> f64 {
        let pairs = [(&self.e00, &other.e00), (&self.e11, &other.e11), (&self.tracking, &other.tracking)];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm() / (1.0 + x.norm().max(y.norm()))))
            .fold(0.0, f64::max)
    }
}

/// Square root of `values` on the principal branch at the first point and
/// continuous in phase afterwards.
pub fn continuous_sqrt(values: &[C64]) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::with_capacity(values.len());
    for v in values {
        let r = v.sqrt();
        let r = match out.last() {
            Some(prev) if (r - prev).norm() > (-r - prev).norm() => -r,
            _ => r,
        };
        out.push(r);
    }
    out
}

/// Error box of one port: the three terms plus the forward factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PortErrorBox {
    pub terms: OnePortTerms,
    /// Forward (analyzer → probe) factor before gauge; `rev = tracking / split`.
    pub split: Vec<C64>,
}

impl PortErrorBox {
    /// Reciprocal split: `fwd = rev = √tracking`, phase-continuous.
    pub fn reciprocal(terms: OnePortTerms) -> Self {
        let split = continuous_sqrt(&terms.tracking);
        Self { terms, split }
    }

    pub fn with_split(terms: OnePortTerms, split: Vec<C64>) -> Result<Self, ModelError> {
        if split.len() != terms.len() {
            return Err(ModelError::Length("split vs terms".into()));
        }
        if let Some(k) = split.iter().position(|s| s.norm() < tol::SINGULAR) {
            return Err(ModelError::ZeroTracking { freq: terms.grid.points()[k] });
        }
        Ok(Self { terms, split })
    }

    /// Reads a box from a 2-port (port 1 = analyzer, port 2 = probe tip).
    pub fn from_two_port(net: &Network) -> Result<Self, ModelError> {
        net.expect_ports(2)?;
        let terms = OnePortTerms::new(
            net.grid().clone(),
            net.entry(0, 0),
            net.entry(1, 1),
            net.matrices().iter().map(|m| m[(0, 1)] * m[(1, 0)]).collect(),
        )?;
        Self::with_split(terms, net.entry(1, 0))
    }

    pub fn to_two_port(&self, z_ref: f64) -> Result<Network, ModelError> {
        let t = &self.terms;
        Ok(Network::two_port(&t.grid, z_ref, |k, _| {
            let fwd = self.split[k];
            let rev = t.tracking[k] / fwd;
            [[t.e00[k], rev], [fwd, t.e11[k]]]
        })?)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.terms.grid()
    }
}

/// Per-port error boxes tied together by transmission-tracking ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPortCalModel {
    boxes: Vec<PortErrorBox>,
    /// In the order given, keyed `(i, j)` with `i < j`; value is
    /// `k(i,j) = g_i / g_j` per point.
    k: Vec<((usize, usize), Vec<C64>)>,
    /// Per port, per point gauge derived from the spanning tree.
    gauge: Vec<Vec<C64>>,
    tree: Vec<(usize, usize)>,
    consistency_residual: f64,
}

impl MultiPortCalModel {
    /// Builds a model from boxes and k-pairs. The spanning tree takes pairs in
    /// the order given; pairs off the tree are checked against the composed
    /// tree value.
    pub fn new(boxes: Vec<PortErrorBox>, k_pairs: Vec<((usize, usize), Vec<C64>)>) -> Result<Self, ModelError> {
        let n = boxes.len();
        if n == 0 {
            return Err(ModelError::Disconnected { n_ports: 0 });
        }
        let grid = boxes[0].grid().clone();
        for b in &boxes[1..] {
            b.grid().ensure_same(&grid)?;
        }
        let npts = grid.len();
        let mut k: Vec<((usize, usize), Vec<C64>)> = Vec::new();
        for ((i, j), vals) in k_pairs {
            if i == j || i >= n || j >= n {
                return Err(ModelError::InvalidPair(i, j));
            }
            if vals.len() != npts {
                return Err(ModelError::Length(format!("k({i},{j})")));
            }
            if let Some(p) = vals.iter().position(|v| v.norm() < tol::SINGULAR || !v.re.is_finite() || !v.im.is_finite())
            {
                return Err(ModelError::ZeroTracking { freq: grid.points()[p] });
            }
            let (key, vals) = if i < j { ((i, j), vals) } else { ((j, i), vals.iter().map(|v| v.inv()).collect()) };
            if k.iter().any(|(existing, _)| *existing == key) {
                return Err(ModelError::InvalidPair(i, j));
            }
            k.push((key, vals));
        }

        // Spanning tree from the pairs in the order given; later pairs that
        // close a cycle are redundant.
        let mut component: Vec<usize> = (0..n).collect();
        fn root(c: &mut [usize], mut x: usize) -> usize {
            while c[x] != x {
                c[x] = c[c[x]];
                x = c[x];
            }
            x
        }
        let mut tree = Vec::new();
        let mut tree_index = Vec::new();
        for (idx, &((i, j), _)) in k.iter().enumerate() {
            let (ri, rj) = (root(&mut component, i), root(&mut component, j));
            if ri != rj {
                component[ri] = rj;
                tree.push((i, j));
                tree_index.push(idx);
            }
        }

        // Gauge by BFS over tree edges from port 0; g_j = g_i / k(i,j).
        let one = C64::new(1.0, 0.0);
        let mut gauge: Vec<Option<Vec<C64>>> = vec![None; n];
        gauge[0] = Some(vec![one; npts]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(p) = queue.pop_front() {
            for (t, &(i, j)) in tree.iter().enumerate() {
                let (other, forward) = match p {
                    _ if i == p => (j, true),
                    _ if j == p => (i, false),
                    _ => continue,
                };
                if gauge[other].is_some() {
                    continue;
                }
                let gp = gauge[p].as_ref().expect("visited");
                let g = gp.iter().zip(&k[tree_index[t]].1).map(|(g, kv)| if forward { g / kv } else { g * kv }).collect();
                gauge[other] = Some(g);
                queue.push_back(other);
            }
        }
        if gauge.iter().any(Option::is_none) {
            return Err(ModelError::Disconnected { n_ports: n });
        }
        let gauge: Vec<Vec<C64>> = gauge.into_iter().map(Option::unwrap).collect();

        let mut residual = 0.0_f64;
        for ((i, j), vals) in &k {
            let (i, j) = (*i, *j);
            if tree.contains(&(i, j)) {
                continue;
            }
            for (p, v) in vals.iter().enumerate() {
                let composed = gauge[i][p] / gauge[j][p];
                let r = (v - composed).norm() / composed.norm();
                if r > K_CONSISTENCY_TOL {
                    return Err(ModelError::InconsistentK { i, j, residual: r });
                }
                residual = residual.max(r);
            }
        }
        Ok(Self { boxes, k, gauge, tree, consistency_residual: residual })
    }

    /// Every box as given, all k ≡ 1 on a chain 0-1-2-….
    pub fn from_boxes(boxes: Vec<PortErrorBox>) -> Result<Self, ModelError> {
        let npts = boxes.first().map(|b| b.grid().len()).unwrap_or(0);
        let pairs = (1..boxes.len()).map(|j| ((j - 1, j), vec![C64::new(1.0, 0.0); npts])).collect();
        Self::new(boxes, pairs)
    }

    /// Model built from physical 2-port error boxes (port 1 = analyzer side).
    pub fn from_two_ports(nets: &[Network]) -> Result<Self, ModelError> {
        Self::from_boxes(nets.iter().map(PortErrorBox::from_two_port).collect::<Result<_, _>>()?)
    }

    pub fn identity(grid: &FrequencyGrid, n_ports: usize) -> Self {
        let boxes = (0..n_ports).map(|_| PortErrorBox::reciprocal(OnePortTerms::identity(grid))).collect();
        Self::from_boxes(boxes).expect("identity model is valid")
    }

    pub fn n_ports(&self) -> usize {
        self.boxes.len()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.boxes[0].grid()
    }

    pub fn boxes(&self) -> &[PortErrorBox] {
        &self.boxes
    }

    pub fn k_pairs(&self) -> &[((usize, usize), Vec<C64>)] {
        &self.k
    }

    pub fn tree(&self) -> &[(usize, usize)] {
        &self.tree
    }

    /// Worst relative disagreement of redundant pairs with the tree (0 if none).
    pub fn consistency_residual(&self) -> f64 {
        self.consistency_residual
    }

    /// k(i, j) composed along the tree.
    pub fn k_between(&self, i: usize, j: usize) -> Vec<C64> {
        self.gauge[i].iter().zip(&self.gauge[j]).map(|(a, b)| a / b).collect()
    }

    /// Effective forward and reverse factors at point `k`.
    pub fn factors(&self, port: usize, k: usize) -> (C64, C64) {
        let b = &self.boxes[port];
        let fwd = b.split[k] * self.gauge[port][k];
        (fwd, b.terms.tracking[k] / fwd)
    }

    /// Restriction to the listed ports (in order), keeping the tree-composed k.
    pub fn restrict(&self, ports: &[usize]) -> Result<Self, ModelError> {
        let boxes = ports.iter().map(|&p| self.boxes[p].clone()).collect();
        let pairs = (1..ports.len()).map(|r| ((r - 1, r), self.k_between(ports[r - 1], ports[r]))).collect();
        Self::new(boxes, pairs)
    }

    /// Physical 2-port of port `p`'s effective box (port 1 = analyzer side).
    pub fn box_two_port(&self, p: usize, z_ref: f64) -> Result<Network, ModelError> {
        let t = &self.boxes[p].terms;
        Ok(Network::two_port(t.grid(), z_ref, |k, _| {
            let (fwd, rev) = self.factors(p, k);
            [[t.e00[k], rev], [fwd, t.e11[k]]]
        })?)
    }

    fn check_network(&self, net: &Network) -> Result<(), ModelError> {
        if net.n_ports() != self.n_ports() {
            return Err(ModelError::PortMismatch { model: self.n_ports(), network: net.n_ports() });
        }
        net.grid().ensure_same(self.grid())?;
        Ok(())
    }
}

/// Γ_m = e00 + tracking·Γ / (1 − e11·Γ).
pub fn embed_oneport(terms: &OnePortTerms, gamma: &Network) -> Result<Network, ModelError> {
    gamma.expect_ports(1)?;
    gamma.grid().ensure_same(terms.grid())?;
    let mut out = Vec::with_capacity(gamma.len());
    for (k, g) in gamma.gamma().into_iter().enumerate() {
        let den = 1.0 - terms.e11[k] * g;
        if den.norm() < tol::SINGULAR {
            return Err(ModelError::PoleHit { freq: gamma.freqs()[k] });
        }
        out.push(terms.e00[k] + terms.tracking[k] * g / den);
    }
    Ok(Network::one_port(gamma.grid(), &out, gamma.z_ref())?)
}

/// Γ = (Γ_m − e00) / (tracking + e11·(Γ_m − e00)).
pub fn correct_oneport(terms: &OnePortTerms, gamma_m: &Network) -> Result<Network, ModelError> {
    gamma_m.expect_ports(1)?;
    gamma_m.grid().ensure_same(terms.grid())?;
    let mut out = Vec::with_capacity(gamma_m.len());
    for (k, gm) in gamma_m.gamma().into_iter().enumerate() {
        let d = gm - terms.e00[k];
        let den = terms.tracking[k] + terms.e11[k] * d;
        if den.norm() < tol::SINGULAR {
            return Err(ModelError::SingularCorrection { freq: gamma_m.freqs()[k], condition: f64::INFINITY });
        }
        out.push(d / den);
    }
    Ok(Network::one_port(gamma_m.grid(), &out, gamma_m.z_ref())?)
}

fn diag_terms(model: &MultiPortCalModel, k: usize) -> (Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>) {
    let n = model.n_ports();
    let mut e00 = Vec::with_capacity(n);
    let mut e11 = Vec::with_capacity(n);
    let mut fwd = Vec::with_capacity(n);
    let mut rev = Vec::with_capacity(n);
    for p in 0..n {
        let t = &model.boxes[p].terms;
        let (f, r) = model.factors(p, k);
        e00.push(t.e00[k]);
        e11.push(t.e11[k]);
        fwd.push(f);
        rev.push(r);
    }
    (e00, e11, fwd, rev)
}

/// Raw measurement of `dut` through the model's error boxes.
pub fn embed_multiport(model: &MultiPortCalModel, dut: &Network) -> Result<Network, ModelError> {
    model.check_network(dut)?;
    let n = model.n_ports();
    let mut out = Vec::with_capacity(dut.len());
    for (k, s) in dut.matrices().iter().enumerate() {
        let (e00, e11, fwd, rev) = diag_terms(model, k);
        let mut a = CMatrix::identity(n, n);
        for r in 0..n {
            for c in 0..n {
                a[(r, c)] -= e11[r] * s[(r, c)];
            }
        }
        // X = S · (I − E11 S)^-1, via (I − E11 S)^T X^T = S^T
        let lu = a.transpose().lu();
        let xt = lu.solve(&s.transpose()).ok_or(ModelError::SingularEmbedding { freq: dut.freqs()[k] })?;
        if xt.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(ModelError::SingularEmbedding { freq: dut.freqs()[k] });
        }
        let x = xt.transpose();
        let m = CMatrix::from_fn(n, n, |r, c| {
            let base = rev[r] * x[(r, c)] * fwd[c];
            if r == c {
                base + e00[r]
            } else {
                base
            }
        });
        out.push(m);
    }
    Ok(Network::new(dut.grid().clone(), out, dut.z_ref())?)
}

/// Inverse of [`embed_multiport`]: `S = (I + X·E11)^-1 · X` with
/// `X = R^-1 (M − E00) F^-1`.
pub fn correct_multiport(model: &MultiPortCalModel, measured: &Network) -> Result<Network, ModelError> {
    model.check_network(measured)?;
    let n = model.n_ports();
    let mut out = Vec::with_capacity(measured.len());
    for (k, m) in measured.matrices().iter().enumerate() {
        let freq = measured.freqs()[k];
        let (e00, e11, fwd, rev) = diag_terms(model, k);
        let x = CMatrix::from_fn(n, n, |r, c| {
            let d = if r == c { m[(r, c)] - e00[r] } else { m[(r, c)] };
            d / (rev[r] * fwd[c])
        });
        let mut a = CMatrix::identity(n, n);
        for r in 0..n {
            for c in 0..n {
                a[(r, c)] += x[(r, c)] * e11[c];
            }
        }
        let condition = condition_estimate(&a);
        let s = a.lu().solve(&x);
        match s {
            Some(s) if condition.is_finite() && s.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => out.push(s),
            _ => return Err(ModelError::SingularCorrection { freq, condition }),
        }
    }
    Ok(Network::new(measured.grid().clone(), out, measured.z_ref())?)
}

/// σ_max / σ_min; infinite for singular input.
pub fn condition_estimate(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// 2-port de-embedding through T-matrices: `T_A^-1 · T_M · T_B^-1`.
/// Independent of [`correct_multiport`]; used as a cross-check.
pub fn deembed_two_port_t(box_a: &Network, measured: &Network, box_b_reversed: &Network) -> Result<Network, ModelError> {
    let to_t = |net: &Network, k: usize| -> Result<Matrix2<C64>, ModelError> {
        let m = net.at(k);
        s_to_t_point(&Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
            .ok_or(ModelError::Network(NetworkError::ZeroTransmission { freq: net.freqs()[k] }))
    };
    let mut out = Vec::with_capacity(measured.len());
    for k in 0..measured.len() {
        let freq = measured.freqs()[k];
        let ta = to_t(box_a, k)?.try_inverse().ok_or(ModelError::SingularCorrection { freq, condition: f64::INFINITY })?;
        let tb =
            to_t(box_b_reversed, k)?.try_inverse().ok_or(ModelError::SingularCorrection { freq, condition: f64::INFINITY })?;
        let tx = ta * to_t(measured, k)? * tb;
        let s = t_to_s_point(&tx).ok_or(ModelError::Network(NetworkError::SingularT { freq }))?;
        out.push(CMatrix::from_row_slice(2, 2, &[s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]]));
    }
    Ok(Network::new(measured.grid().clone(), out, measured.z_ref())?)
}

/// Port 2 box of a 2-port model as seen from the DUT (port 1 = probe tip).
pub fn reversed(net: &Network) -> Result<Network, NetworkError> {
    net.renumber(&[1, 0])
}
