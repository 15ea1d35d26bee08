//! Synthetic error boxes, DUTs and noise.
//!
//! Random quantities are smooth over the sweep: each magnitude and phase is
//! a degree-3 Bernstein polynomial in normalized frequency with random
//! control points. All draws come from a seeded ChaCha8 generator in a fixed
//! order, so a seed reproduces every value bit for bit.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vnacal_core::error_model::{embed_multiport, embed_oneport, MultiPortCalModel};
use vnacal_core::pack::StandardPack;
use vnacal_core::solvers::SolrPort;
use vnacal_core::sparams::{cascade, passivity_margin, spectral_norm, CMatrix, FrequencyGrid, Network, C64};

use crate::error::{CliError, Result};
use crate::scenario::RandomBoxSpec;

/// Per-iteration factor applied to fwd and rev until a random box is passive.
pub const PASSIVITY_SHRINK: f64 = 0.98;

pub fn bernstein3(c: &[f64; 4], x: f64) -> f64 {
    let y = 1.0 - x;
    c[0] * y * y * y + 3.0 * c[1] * x * y * y + 3.0 * c[2] * x * x * y + c[3] * x * x * x
}

fn normalized(grid: &FrequencyGrid) -> Vec<f64> {
    let (a, b) = (grid.first(), grid.last());
    grid.points().iter().map(|f| if b > a { (f - a) / (b - a) } else { 0.0 }).collect()
}

fn controls(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> [f64; 4] {
    std::array::from_fn(|_| if hi > lo { rng.random_range(lo..hi) } else { lo })
}

/// Smooth real curve with control points uniform in `[lo, hi]`.
pub fn smooth_real(rng: &mut ChaCha8Rng, grid: &FrequencyGrid, lo: f64, hi: f64) -> Vec<f64> {
    let c = controls(rng, lo, hi);
    normalized(grid).iter().map(|&x| bernstein3(&c, x)).collect()
}

/// Smooth complex curve: magnitude in `[lo, hi]`, phase controls uniform in [−π, π).
pub fn smooth_complex(rng: &mut ChaCha8Rng, grid: &FrequencyGrid, lo: f64, hi: f64) -> Vec<C64> {
    let mag = smooth_real(rng, grid, lo, hi);
    let phase = smooth_real(rng, grid, -PI, PI);
    mag.iter().zip(&phase).map(|(&m, &p)| C64::from_polar(m, p)).collect()
}

/// Random passive error box, port 1 = analyzer side.
///
/// Tracking magnitude is drawn in the configured range; the fwd/rev split gets
/// a random smooth magnitude ratio in [0.8, 1.25] and phase. fwd and rev are
/// then shrunk together by [`PASSIVITY_SHRINK`] until the box is passive, which
/// can take the tracking magnitude below `tracking_min`.
pub fn random_passive_box(rng: &mut ChaCha8Rng, grid: &FrequencyGrid, spec: &RandomBoxSpec) -> Result<Network> {
    let e00 = smooth_complex(rng, grid, 0.0, spec.e00_max);
    let e11 = smooth_complex(rng, grid, 0.0, spec.e11_max);
    let tracking = smooth_complex(rng, grid, spec.tracking_min, spec.tracking_max);
    let ratio = smooth_real(rng, grid, 0.8, 1.25);
    let split_phase = smooth_real(rng, grid, -PI, PI);
    let fwd: Vec<C64> =
        (0..grid.len()).map(|k| C64::from_polar(tracking[k].norm().sqrt() * ratio[k], split_phase[k])).collect();
    let rev: Vec<C64> = (0..grid.len()).map(|k| tracking[k] / fwd[k]).collect();
    let mut scale = 1.0;
    for _ in 0..1000 {
        let net = Network::two_port(grid, 50.0, |k, _| [[e00[k], rev[k] * scale], [fwd[k] * scale, e11[k]]])?;
        if passivity_margin(&net).iter().all(|&m| m >= 0.0) {
            return Ok(net);
        }
        scale *= PASSIVITY_SHRINK;
    }
    Err(CliError::Usage(format!("random box could not be made passive ({spec:?})")))
}

pub fn identity_box(grid: &FrequencyGrid) -> Network {
    Network::ideal_thru(grid, 50.0)
}

/// Random smooth passive reciprocal n-port, scaled so `‖S‖₂ ≤ 0.95` everywhere.
pub fn random_reciprocal_dut(rng: &mut ChaCha8Rng, grid: &FrequencyGrid, n: usize, z_ref: f64) -> Result<Network> {
    let mut entries = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in i..n {
            entries[i][j] = smooth_complex(rng, grid, 0.05, 0.9);
        }
    }
    let raw = Network::from_fn(grid, z_ref, |k, _| {
        CMatrix::from_fn(n, n, |r, c| if r <= c { entries[r][c][k] } else { entries[c][r][k] })
    })?;
    let worst = raw.matrices().iter().map(spectral_norm).fold(0.0, f64::max);
    let s = if worst > 0.95 { 0.95 / worst } else { 1.0 };
    Ok(raw.map(|_, m| m * C64::new(s, 0.0))?)
}

/// Additive complex Gaussian noise with total standard deviation `sigma` per
/// entry (`sigma/√2` on each of re and im), drawn point by point, row-major.
pub fn add_noise(rng: &mut ChaCha8Rng, net: &Network, sigma: f64) -> Result<Network> {
    let normal = Normal::new(0.0, sigma / 2f64.sqrt()).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(net.map(|_, m| {
        let n = m.nrows();
        let mut out = m.clone();
        for r in 0..n {
            for c in 0..n {
                let re = normal.sample(rng);
                let im = normal.sample(rng);
                out[(r, c)] += C64::new(re, im);
            }
        }
        out
    })?)
}

/// `10^(noise_db/20)`.
pub fn noise_sigma(noise_db: f64) -> f64 {
    10f64.powf(noise_db / 20.0)
}

/// A set of ports with known error boxes that turns standards into raw data.
#[derive(Debug, Clone)]
pub struct Bench {
    pub grid: FrequencyGrid,
    pub pack: StandardPack,
    /// Effective boxes (analyzer box cascaded with the fixture when enabled).
    pub boxes: Vec<Network>,
    /// Ground truth: split = fwd of the effective box, all k = 1.
    pub model: MultiPortCalModel,
}

impl Bench {
    pub fn new(pack: StandardPack, analyzer_boxes: Vec<Network>, fixture: bool) -> Result<Self> {
        let grid = analyzer_boxes
            .first()
            .ok_or_else(|| CliError::Usage("at least one port is required".into()))?
            .grid()
            .clone();
        let fix = if fixture { Some(pack.eval_fixture(&grid).map_err(|e| CliError::solver("fixture", e))?) } else { None };
        let boxes = analyzer_boxes
            .iter()
            .map(|b| match &fix {
                Some(f) => cascade(b, f),
                None => Ok(b.clone()),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let model = MultiPortCalModel::from_two_ports(&boxes)?;
        Ok(Self { grid, pack, boxes, model })
    }

    /// Random passive boxes for `n_ports`, drawn in port order from `rng`.
    pub fn random(
        rng: &mut ChaCha8Rng,
        grid: &FrequencyGrid,
        pack: StandardPack,
        n_ports: usize,
        spec: &RandomBoxSpec,
        fixture: bool,
    ) -> Result<Self> {
        let boxes = (0..n_ports).map(|_| random_passive_box(rng, grid, spec)).collect::<Result<Vec<_>>>()?;
        Self::new(pack, boxes, fixture)
    }

    pub fn n_ports(&self) -> usize {
        self.boxes.len()
    }

    pub fn z_ref(&self) -> f64 {
        self.pack.z_ref
    }

    pub fn measure_oneport(&self, port: usize, gamma: &Network) -> Result<Network> {
        Ok(embed_oneport(&self.model.boxes()[port].terms, gamma)?)
    }

    /// Raw measurement of `dut` with DUT port `r` on bench port `ports[r]`.
    pub fn measure(&self, ports: &[usize], dut: &Network) -> Result<Network> {
        let model = self.model.restrict(ports)?;
        Ok(embed_multiport(&model, dut)?)
    }

    /// Raw (short, open, load) of the pack standards at `port`, paired with
    /// `definitions` as the solver's standard definitions.
    pub fn solr_port(&self, port: usize, definitions: [Network; 3]) -> Result<SolrPort> {
        let defs = self.pack.definitions(&self.grid).map_err(|e| CliError::solver("pack", e))?;
        let [s, o, l] = defs.as_array();
        let measured = [self.measure_oneport(port, s)?, self.measure_oneport(port, o)?, self.measure_oneport(port, l)?];
        Ok(SolrPort { measured, definitions })
    }

    pub fn pack_definitions(&self) -> Result<[Network; 3]> {
        let d = self.pack.definitions(&self.grid).map_err(|e| CliError::solver("pack", e))?;
        Ok([d.short, d.open, d.load])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::linear(1e9, 170e9, 201).unwrap()
    }

    #[test]
    fn bernstein_endpoints_and_partition() {
        let c = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(bernstein3(&c, 0.0), 1.0);
        assert_eq!(bernstein3(&c, 1.0), 0.5);
        assert!((bernstein3(&[1.0; 4], 0.37) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_boxes_are_passive_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = RandomBoxSpec::default();
        for _ in 0..20 {
            let b = random_passive_box(&mut rng, &grid(), &spec).unwrap();
            assert!(passivity_margin(&b).iter().all(|&m| m >= 0.0));
            for m in b.matrices() {
                assert!(m[(0, 0)].norm() <= 0.3 && m[(1, 1)].norm() <= 0.3);
                assert!((m[(0, 1)] * m[(1, 0)]).norm() <= 1.0);
            }
        }
    }

    #[test]
    fn same_seed_same_boxes() {
        let spec = RandomBoxSpec::default();
        let a = random_passive_box(&mut ChaCha8Rng::seed_from_u64(42), &grid(), &spec).unwrap();
        let b = random_passive_box(&mut ChaCha8Rng::seed_from_u64(42), &grid(), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_dut_is_passive_and_reciprocal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_reciprocal_dut(&mut rng, &grid(), 4, 50.0).unwrap();
        assert!(passivity_margin(&d).iter().all(|&m| m >= 0.05 - 1e-12));
        assert!(vnacal_core::sparams::reciprocity_error(&d).iter().all(|&e| e == 0.0));
    }

    #[test]
    fn noise_has_configured_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = FrequencyGrid::linear(1e9, 10e9, 2500).unwrap();
        let zero = Network::two_port(&g, 50.0, |_, _| [[C64::new(0.0, 0.0); 2]; 2]).unwrap();
        let sigma = noise_sigma(-60.0);
        let noisy = add_noise(&mut rng, &zero, sigma).unwrap();
        let samples: Vec<C64> = noisy.matrices().iter().flat_map(|m| m.iter().copied().collect::<Vec<_>>()).collect();
        assert_eq!(samples.len(), 10_000);
        let var = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.1, "{}", var.sqrt() / sigma);
    }

    #[test]
    fn identity_bench_without_fixture_is_transparent() {
        let g = grid();
        let bench = Bench::new(StandardPack::nyu28(), vec![identity_box(&g), identity_box(&g)], false).unwrap();
        let defs = bench.pack_definitions().unwrap();
        assert!(bench.measure_oneport(1, &defs[1]).unwrap().max_abs_diff(&defs[1]) < 1e-15);
    }
}
