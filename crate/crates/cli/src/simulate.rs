//! Scenario to raw measurement files, ground truth and a ready-to-run session.
//!
//! Output layout under the output directory:
//!
//! ```text
//! raw/port{p}_{short,open,load}.s1p
//! raw/thru_{i}_{j}.s2p
//! raw/mtrl_thru.s2p, raw/mtrl_line_{n}.s2p, raw/mtrl_reflect_p{p}.s1p
//! raw/dut.sNp
//! dut_truth.sNp
//! truth.cal
//! session.toml
//! manifest.toml
//! ```
//!
//! Boxes and the random DUT draw from ChaCha8 seeded with `seed`; noise draws
//! from stream 1 of the same seed, file by file in the order above.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vnacal_core::pack::StandardPack;
use vnacal_core::sparams::Network;
use vnacal_core::standards::eval_line;

use crate::error::{CliError, Result};
use crate::harness::{add_noise, identity_box, noise_sigma, random_reciprocal_dut, Bench};
use crate::io::{load_pack, read_network, read_text, resolve, write_cal, write_network, write_text};
use crate::scenario::{BoxSpec, DutSpec, Scenario};
use crate::session::{LineFile, MtrlFiles, PairFiles, PortFiles, Session, Validation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub ports: usize,
    pub points: usize,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub fixture: bool,
    pub noise_sigma: Option<f64>,
    /// Every raw file, in noise-draw order.
    pub raw: Vec<String>,
    pub truth: Vec<String>,
}

struct Writer<'a> {
    out: &'a Path,
    noise: Option<(ChaCha8Rng, f64)>,
    raw: Vec<String>,
}

impl Writer<'_> {
    fn raw(&mut self, rel: String, net: &Network) -> Result<String> {
        let net = match &mut self.noise {
            Some((rng, sigma)) => add_noise(rng, net, *sigma)?,
            None => net.clone(),
        };
        write_network(&self.out.join(&rel), &net, &[format!("simulated raw measurement {rel}")])?;
        log::debug!("wrote {rel}");
        self.raw.push(rel.clone());
        Ok(rel)
    }
}

/// Runs a scenario. `base_dir` resolves relative paths inside the scenario.
pub fn simulate_measurements(scn: &Scenario, base_dir: &Path, out: &Path) -> Result<Manifest> {
    scn.validate().map_err(CliError::Usage)?;
    let grid = scn.grid.build().map_err(CliError::Usage)?;
    let pack = load_pack(&scn.pack, base_dir)?;
    let z_ref = pack.z_ref;
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);

    let bench = match &scn.boxes {
        BoxSpec::Random(spec) => Bench::random(&mut rng, &grid, pack.clone(), scn.ports, spec, scn.fixture)?,
        BoxSpec::Identity => Bench::new(pack.clone(), vec![identity_box(&grid); scn.ports], scn.fixture)?,
        BoxSpec::Files { files } => {
            let boxes = files
                .iter()
                .map(|f| {
                    let path = resolve(base_dir, f);
                    let net = read_network(&path)?;
                    net.expect_ports(2).map_err(|e| CliError::parse(&path, e))?;
                    net.grid().ensure_same(&grid).map_err(|e| CliError::parse(&path, e))?;
                    Ok(net)
                })
                .collect::<Result<Vec<_>>>()?;
            Bench::new(pack.clone(), boxes, scn.fixture)?
        }
    };

    let (dut, dut_ports) = match &scn.dut {
        DutSpec::Thru { standard, ports } => {
            (pack.eval_thru(standard, &grid).map_err(|e| CliError::Usage(e.to_string()))?, ports.to_vec())
        }
        DutSpec::RandomReciprocal => (random_reciprocal_dut(&mut rng, &grid, scn.ports, z_ref)?, (0..scn.ports).collect()),
        DutSpec::File { path } => {
            let path = resolve(base_dir, path);
            let net = read_network(&path)?;
            net.grid().ensure_same(&grid).map_err(|e| CliError::parse(&path, e))?;
            if net.n_ports() > scn.ports {
                return Err(CliError::Usage(format!("{}: {}-port DUT on {} ports", path.display(), net.n_ports(), scn.ports)));
            }
            let ports = (0..net.n_ports()).collect();
            (net, ports)
        }
    };

    let noise = scn.noise_db.map(|db| {
        let mut r = ChaCha8Rng::seed_from_u64(scn.seed);
        r.set_stream(1);
        (r, noise_sigma(db))
    });
    let mut w = Writer { out, noise, raw: Vec::new() };

    let defs = bench.pack_definitions()?;
    let mut port_files = Vec::new();
    for p in 0..scn.ports {
        let mut names = Vec::new();
        for (name, def) in ["short", "open", "load"].iter().zip(&defs) {
            names.push(w.raw(format!("raw/port{p}_{name}.s1p"), &bench.measure_oneport(p, def)?)?);
        }
        let [short, open, load]: [String; 3] = names.try_into().expect("three standards");
        port_files.push(PortFiles { index: p, short, open, load });
    }

    let mut pairs = Vec::new();
    for t in scn.thru_list() {
        let thru = pack.eval_thru(&t.standard, &grid).map_err(|e| CliError::Usage(e.to_string()))?;
        let [i, j] = t.ports;
        let rel = w.raw(format!("raw/thru_{i}_{j}.s2p"), &bench.measure(&t.ports, &thru)?)?;
        pairs.push(PairFiles { ports: t.ports, thru: rel, thru_standard: Some(t.standard.clone()), delay_estimate: None });
    }

    let mtrl = match &scn.mtrl {
        Some(spec) => Some(simulate_mtrl(&mut w, &bench, &pack, spec)?),
        None => None,
    };

    let n = dut.n_ports();
    let dut_raw = w.raw(format!("raw/dut.s{n}p"), &bench.measure(&dut_ports, &dut)?)?;
    let dut_truth = format!("dut_truth.s{n}p");
    write_network(&out.join(&dut_truth), &dut, &["DUT ground truth".into()])?;
    write_cal(&out.join("truth.cal"), &bench.model, z_ref)?;

    let pack_ref = if scn.pack == "nyu28" {
        scn.pack.clone()
    } else {
        write_text(&out.join("pack.toml"), &read_text(&resolve(base_dir, &scn.pack))?)?;
        "pack.toml".into()
    };
    let session = Session {
        pack: pack_ref,
        threshold_db: None,
        ports: port_files,
        pairs,
        definitions: None,
        mtrl,
        validation: Some(Validation { dut_raw, dut_truth: dut_truth.clone(), ports: Some(dut_ports) }),
    };
    write_text(&out.join("session.toml"), &toml::to_string(&session).map_err(|e| CliError::Usage(e.to_string()))?)?;

    let manifest = Manifest {
        seed: scn.seed,
        ports: scn.ports,
        points: grid.len(),
        start_hz: grid.first(),
        stop_hz: grid.last(),
        fixture: scn.fixture,
        noise_sigma: w.noise.as_ref().map(|(_, s)| *s),
        raw: w.raw,
        truth: vec![dut_truth, "truth.cal".into()],
    };
    write_text(&out.join("manifest.toml"), &toml::to_string(&manifest).map_err(|e| CliError::Usage(e.to_string()))?)?;
    Ok(manifest)
}

fn simulate_mtrl(w: &mut Writer, bench: &Bench, pack: &StandardPack, spec: &crate::scenario::MtrlSpec) -> Result<MtrlFiles> {
    let section = pack.mtrl.as_ref();
    let thru_length = spec.thru_length.or(section.map(|s| s.thru_length)).unwrap_or(0.0);
    let lengths = match (&spec.lines, section) {
        (Some(l), _) => l.clone(),
        (None, Some(s)) => s.lines.clone(),
        (None, None) => return Err(CliError::Usage("mtrl: no line lengths in the scenario or the pack".into())),
    };
    let line = |len: f64| eval_line(&pack.medium.line(len), &bench.grid, pack.z_ref).map_err(|e| CliError::Usage(e.to_string()));
    let thru = w.raw("raw/mtrl_thru.s2p".into(), &bench.measure(&spec.ports, &line(thru_length)?)?)?;
    let mut lines = Vec::new();
    for (n, &len) in lengths.iter().enumerate() {
        let file = w.raw(format!("raw/mtrl_line_{n}.s2p"), &bench.measure(&spec.ports, &line(len)?)?)?;
        lines.push(LineFile { length: len, file });
    }
    let defs = bench.pack_definitions()?;
    let reflect = if spec.reflect == "open" { &defs[1] } else { &defs[0] };
    let [a, b] = spec.ports;
    let ra = w.raw(format!("raw/mtrl_reflect_p{a}.s1p"), &bench.measure_oneport(a, reflect)?)?;
    let rb = w.raw(format!("raw/mtrl_reflect_p{b}.s1p"), &bench.measure_oneport(b, reflect)?)?;
    Ok(MtrlFiles {
        ports: spec.ports,
        thru,
        thru_length,
        reflect: [ra, rb],
        reflect_hint: spec.reflect.clone(),
        eps_eff_hint: Some(pack.medium.eps_eff),
        degenerate_tol: None,
        lines,
    })
}
