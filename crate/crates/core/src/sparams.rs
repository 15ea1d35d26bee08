//! Frequency-indexed n-port scattering networks and the two-port cascade algebra.
//!
//! # T-parameter convention
//!
//! Every transfer matrix in this crate relates the port-1 waves to the port-2
//! waves as
//!
//! ```text
//! [b1]       [a2]
//! [a1] = T · [b2]
//! ```
//!
//! which gives
//!
//! ```text
//! T = 1/S21 · [ -det(S)  S11 ]
//!             [ -S22      1  ]
//! ```
//!
//! so that the physical cascade "A then B" (A port 2 joined to B port 1) is the
//! plain matrix product `T_A · T_B`. A matched line with `S21 = exp(-jθ)` maps to
//! `diag(exp(-jθ), exp(jθ))`. The solvers rely on this definition only.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout.
pub type C64 = Complex64;
/// Dense complex matrix, one per frequency point.
pub type CMatrix = DMatrix<C64>;

/// Reference impedance used when none is given.
pub const DEFAULT_Z_REF: f64 = 50.0;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Documented numerical tolerances.
pub mod tol {
    /// Round-trip agreement for conversions on well-conditioned data.
    pub const ROUND_TRIP: f64 = 1e-10;
    /// Agreement for exact algebraic identities.
    pub const EXACT: f64 = 1e-12;
    /// Magnitude below which a pivot or transmission is treated as zero.
    pub const SINGULAR: f64 = 1e-12;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("frequency grids differ")]
    GridMismatch,
    #[error("reference impedances differ ({0} vs {1} ohm)")]
    ZrefMismatch(f64, f64),
    #[error("expected a {expected}-port network, got {got} ports")]
    PortCount { expected: usize, got: usize },
    #[error("matrix at point {index} is {rows}x{cols}, expected {n}x{n}")]
    Dimension { index: usize, rows: usize, cols: usize, n: usize },
    #[error("non-finite S-parameter at {freq} Hz")]
    NonFinite { freq: f64 },
    #[error("invalid reference impedance {0} ohm")]
    InvalidZref(f64),
    #[error("zero transmission (S21 = 0) at {freq} Hz")]
    ZeroTransmission { freq: f64 },
    #[error("singular T-matrix (T22 = 0) at {freq} Hz")]
    SingularT { freq: f64 },
    #[error("cascade denominator vanishes at {freq} Hz")]
    SingularCascade { freq: f64 },
    #[error("port index {port} out of range for a {n}-port")]
    PortIndex { port: usize, n: usize },
}

/// Strictly increasing sweep in Hz. A single leading DC point is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, NetworkError> {
        if points.is_empty() {
            return Err(NetworkError::InvalidGrid("empty grid".into()));
        }
        for (i, &f) in points.iter().enumerate() {
            if !f.is_finite() {
                return Err(NetworkError::InvalidGrid(format!("non-finite frequency at index {i}")));
            }
            if f < 0.0 || (i > 0 && f <= 0.0) {
                return Err(NetworkError::InvalidGrid(format!(
                    "frequency {f} at index {i} must be positive (only a leading DC point may be 0)"
                )));
            }
            if i > 0 && f <= points[i - 1] {
                return Err(NetworkError::InvalidGrid(format!(
                    "frequency {f} at index {i} does not exceed {}",
                    points[i - 1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linear(start: f64, stop: f64, n: usize) -> Result<Self, NetworkError> {
        match n {
            0 => Err(NetworkError::InvalidGrid("zero points".into())),
            1 => Self::new(vec![start]),
            _ => {
                let step = (stop - start) / (n - 1) as f64;
                Self::new((0..n).map(|i| if i == n - 1 { stop } else { start + step * i as f64 }).collect())
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Bitwise equality of every frequency value.
    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn ensure_same(&self, other: &FrequencyGrid) -> Result<(), NetworkError> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(NetworkError::GridMismatch)
        }
    }

    /// Largest spacing between neighbouring points (0 for a single point).
    pub fn max_step(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// n-port S-parameters on a frequency grid, linear complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    grid: FrequencyGrid,
    n_ports: usize,
    s: Vec<CMatrix>,
    z_ref: f64,
}

impl Network {
    pub fn new(grid: FrequencyGrid, s: Vec<CMatrix>, z_ref: f64) -> Result<Self, NetworkError> {
        if !(z_ref.is_finite() && z_ref > 0.0) {
            return Err(NetworkError::InvalidZref(z_ref));
        }
        if s.len() != grid.len() {
            return Err(NetworkError::InvalidGrid(format!(
                "{} matrices for {} frequency points",
                s.len(),
                grid.len()
            )));
        }
        let n = s[0].nrows();
        if n == 0 {
            return Err(NetworkError::PortCount { expected: 1, got: 0 });
        }
        for (index, m) in s.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(NetworkError::Dimension { index, rows: m.nrows(), cols: m.ncols(), n });
            }
            if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(NetworkError::NonFinite { freq: grid.points[index] });
            }
        }
        Ok(Self { grid, n_ports: n, s, z_ref })
    }

    /// Builds a network by evaluating `f(index, freq)` at every grid point.
    pub fn from_fn<F>(grid: &FrequencyGrid, z_ref: f64, mut f: F) -> Result<Self, NetworkError>
    where
        F: FnMut(usize, f64) -> CMatrix,
    {
        let s = grid.points().iter().enumerate().map(|(k, &fr)| f(k, fr)).collect();
        Self::new(grid.clone(), s, z_ref)
    }

    pub fn one_port(grid: &FrequencyGrid, gamma: &[C64], z_ref: f64) -> Result<Self, NetworkError> {
        if gamma.len() != grid.len() {
            return Err(NetworkError::InvalidGrid(format!(
                "{} values for {} frequency points",
                gamma.len(),
                grid.len()
            )));
        }
        Self::from_fn(grid, z_ref, |k, _| CMatrix::from_element(1, 1, gamma[k]))
    }

    pub fn two_port<F>(grid: &FrequencyGrid, z_ref: f64, mut f: F) -> Result<Self, NetworkError>
    where
        F: FnMut(usize, f64) -> [[C64; 2]; 2],
    {
        Self::from_fn(grid, z_ref, |k, fr| {
            let m = f(k, fr);
            CMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
        })
    }

    pub fn ideal_thru(grid: &FrequencyGrid, z_ref: f64) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::two_port(grid, z_ref, |_, _| [[zero, one], [one, zero]]).expect("finite by construction")
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn freqs(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.s
    }

    pub fn at(&self, k: usize) -> &CMatrix {
        &self.s[k]
    }

    /// S_ij across the sweep (zero-based port indices).
    pub fn entry(&self, i: usize, j: usize) -> Vec<C64> {
        self.s.iter().map(|m| m[(i, j)]).collect()
    }

    /// S11 of a one-port (or any network) across the sweep.
    pub fn gamma(&self) -> Vec<C64> {
        self.entry(0, 0)
    }

    pub fn expect_ports(&self, n: usize) -> Result<(), NetworkError> {
        if self.n_ports == n {
            Ok(())
        } else {
            Err(NetworkError::PortCount { expected: n, got: self.n_ports })
        }
    }

    /// Grid (bitwise) and reference impedance agreement.
    pub fn ensure_compatible(&self, other: &Network) -> Result<(), NetworkError> {
        self.grid.ensure_same(&other.grid)?;
        if self.z_ref != other.z_ref {
            return Err(NetworkError::ZrefMismatch(self.z_ref, other.z_ref));
        }
        Ok(())
    }

    /// Largest entrywise |ΔS| over the sweep. Networks must share shape.
    pub fn max_abs_diff(&self, other: &Network) -> f64 {
        assert_eq!(self.n_ports, other.n_ports, "port count mismatch");
        assert_eq!(self.len(), other.len(), "grid length mismatch");
        self.s
            .iter()
            .zip(&other.s)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Applies `f` to every matrix, keeping grid and reference impedance.
    pub fn map<F>(&self, mut f: F) -> Result<Network, NetworkError>
    where
        F: FnMut(usize, &CMatrix) -> CMatrix,
    {
        let s = self.s.iter().enumerate().map(|(k, m)| f(k, m)).collect();
        Network::new(self.grid.clone(), s, self.z_ref)
    }

    /// Sub-network on the listed ports, in the listed order.
    pub fn subnetwork(&self, ports: &[usize]) -> Result<Network, NetworkError> {
        for &p in ports {
            if p >= self.n_ports {
                return Err(NetworkError::PortIndex { port: p, n: self.n_ports });
            }
        }
        let n = ports.len();
        self.map(|_, m| CMatrix::from_fn(n, n, |r, c| m[(ports[r], ports[c])]))
    }

    /// Renumbers ports: new port `r` is old port `perm[r]`.
    pub fn renumber(&self, perm: &[usize]) -> Result<Network, NetworkError> {
        if perm.len() != self.n_ports {
            return Err(NetworkError::PortCount { expected: self.n_ports, got: perm.len() });
        }
        self.subnetwork(perm)
    }
}

/// Two-port transfer matrices, see the module docs for the convention.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPortT {
    grid: FrequencyGrid,
    t: Vec<Matrix2<C64>>,
    z_ref: f64,
}

impl TwoPortT {
    pub fn new(grid: FrequencyGrid, t: Vec<Matrix2<C64>>, z_ref: f64) -> Result<Self, NetworkError> {
        if t.len() != grid.len() {
            return Err(NetworkError::InvalidGrid(format!("{} matrices for {} points", t.len(), grid.len())));
        }
        Ok(Self { grid, t, z_ref })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn matrices(&self) -> &[Matrix2<C64>] {
        &self.t
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }
}

/// S → T at one point; `None` when S21 vanishes.
pub fn s_to_t_point(s: &Matrix2<C64>) -> Option<Matrix2<C64>> {
    let s21 = s[(1, 0)];
    if s21.norm() < tol::SINGULAR {
        return None;
    }
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    Some(Matrix2::new(-det / s21, s[(0, 0)] / s21, -s[(1, 1)] / s21, C64::new(1.0, 0.0) / s21))
}

/// T → S at one point; `None` when T22 vanishes.
pub fn t_to_s_point(t: &Matrix2<C64>) -> Option<Matrix2<C64>> {
    let t22 = t[(1, 1)];
    if t22.norm() < tol::SINGULAR {
        return None;
    }
    let det = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)];
    Some(Matrix2::new(t[(0, 1)] / t22, det / t22, C64::new(1.0, 0.0) / t22, -t[(1, 0)] / t22))
}

pub(crate) fn to_matrix2(m: &CMatrix) -> Matrix2<C64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub(crate) fn from_matrix2(m: &Matrix2<C64>) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

pub fn s_to_t(net: &Network) -> Result<TwoPortT, NetworkError> {
    net.expect_ports(2)?;
    let t = net
        .matrices()
        .iter()
        .zip(net.freqs())
        .map(|(m, &freq)| s_to_t_point(&to_matrix2(m)).ok_or(NetworkError::ZeroTransmission { freq }))
        .collect::<Result<Vec<_>, _>>()?;
    TwoPortT::new(net.grid().clone(), t, net.z_ref())
}

pub fn t_to_s(t: &TwoPortT) -> Result<Network, NetworkError> {
    let s = t
        .matrices()
        .iter()
        .zip(t.grid().points())
        .map(|(m, &freq)| t_to_s_point(m).map(|s| from_matrix2(&s)).ok_or(NetworkError::SingularT { freq }))
        .collect::<Result<Vec<_>, _>>()?;
    Network::new(t.grid().clone(), s, t.z_ref())
}

/// Star-junction cascade at one point: `a` port 2 joined to `b` port 1.
pub fn cascade_point(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Option<Matrix2<C64>> {
    let denom = C64::new(1.0, 0.0) - a[(1, 1)] * b[(0, 0)];
    if denom.norm() < tol::SINGULAR {
        return None;
    }
    Some(Matrix2::new(
        a[(0, 0)] + a[(0, 1)] * b[(0, 0)] * a[(1, 0)] / denom,
        a[(0, 1)] * b[(0, 1)] / denom,
        a[(1, 0)] * b[(1, 0)] / denom,
        b[(1, 1)] + b[(1, 0)] * a[(1, 1)] * b[(0, 1)] / denom,
    ))
}

/// Cascade of two 2-ports. Works for zero-transmission inputs as well.
pub fn cascade(a: &Network, b: &Network) -> Result<Network, NetworkError> {
    a.expect_ports(2)?;
    b.expect_ports(2)?;
    a.ensure_compatible(b)?;
    let s = a
        .matrices()
        .iter()
        .zip(b.matrices())
        .zip(a.freqs())
        .map(|((ma, mb), &freq)| {
            cascade_point(&to_matrix2(ma), &to_matrix2(mb))
                .map(|m| from_matrix2(&m))
                .ok_or(NetworkError::SingularCascade { freq })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Network::new(a.grid().clone(), s, a.z_ref())
}

/// Terminates port 2 of `two_port` in the one-port `load`; returns the input reflection.
pub fn terminate(two_port: &Network, load: &Network) -> Result<Network, NetworkError> {
    load.expect_ports(1)?;
    let zero = C64::new(0.0, 0.0);
    let padded = load.map(|_, m| CMatrix::from_row_slice(2, 2, &[m[(0, 0)], zero, zero, zero]))?;
    cascade(two_port, &padded)?.subnetwork(&[0])
}

/// Per frequency, the largest |S_ij − S_ji| over port pairs. Zero for one-ports.
pub fn reciprocity_error(net: &Network) -> Vec<f64> {
    let n = net.n_ports();
    net.matrices()
        .iter()
        .map(|m| {
            let mut worst = 0.0_f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
                }
            }
            worst
        })
        .collect()
}

/// Largest singular value of a complex matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Per frequency, `1 − σ_max(S)`; non-negative means passive.
pub fn passivity_margin(net: &Network) -> Vec<f64> {
    net.matrices().iter().map(|m| 1.0 - spectral_norm(m)).collect()
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Unwrapped phase in radians.
pub fn unwrap_phase(values: &[C64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev: Option<f64> = None;
    for v in values {
        let a = v.arg();
        let u = match prev {
            None => a,
            Some(p) => p + wrap_phase(a - p),
        };
        out.push(u);
        prev = Some(u);
    }
    out
}

/// 20·log10|x|.
pub fn db20(x: C64) -> f64 {
    20.0 * x.norm().log10()
}
