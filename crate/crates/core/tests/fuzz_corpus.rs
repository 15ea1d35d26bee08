//! Replays the checked-in fuzz seeds through the parsers.

use std::path::PathBuf;

use vnacal_core::calfile::parse_cal_model;
use vnacal_core::pack::StandardPack;
use vnacal_core::touchstone::parse_touchstone;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn touchstone_seeds() {
    for (name, data) in seeds("touchstone_parse") {
        let n_ports = 1 + (data[0] % 4) as usize;
        let result = parse_touchstone(&data[1..], n_ports);
        assert_eq!(result.is_ok(), name != "truncated", "{name}: {result:?}");
    }
}

#[test]
fn cal_model_seeds() {
    for (name, data) in seeds("cal_model_parse") {
        let text = String::from_utf8(data).unwrap();
        parse_cal_model(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn pack_seeds() {
    for (name, data) in seeds("pack_parse") {
        let pack = StandardPack::parse(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        if name == "nyu28-pack.toml" {
            assert_eq!(pack, StandardPack::nyu28());
        }
    }
}
