#![no_main]

use libfuzzer_sys::fuzz_target;
use vnacal_core::pack::StandardPack;
use vnacal_core::sparams::FrequencyGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pack) = StandardPack::parse(text) {
        let grid = FrequencyGrid::linear(1e9, 170e9, 5).expect("grid");
        let _ = pack.definitions(&grid);
        let _ = pack.eval_fixture(&grid);
    }
});
