#![no_main]

use libfuzzer_sys::fuzz_target;
use vnacal_core::touchstone::{parse_touchstone, write_touchstone, TouchstoneOptions};

// First byte picks the port count; the rest is the file body.
fuzz_target!(|data: &[u8]| {
    let Some((&sel, body)) = data.split_first() else { return };
    let n_ports = 1 + (sel % 4) as usize;
    if let Ok(net) = parse_touchstone(body, n_ports) {
        let text = write_touchstone(&net, &TouchstoneOptions::default());
        let again = parse_touchstone(text.as_bytes(), n_ports).expect("written file must parse");
        assert_eq!(again.n_ports(), n_ports);
        assert_eq!(again.len(), net.len());
    }
});
