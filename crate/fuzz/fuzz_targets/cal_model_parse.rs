#![no_main]

use libfuzzer_sys::fuzz_target;
use vnacal_core::calfile::{parse_cal_model, write_cal_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cal) = parse_cal_model(text) {
        let written = write_cal_model(&cal.model, cal.z_ref);
        let again = parse_cal_model(&written).expect("written model must parse");
        assert_eq!(written, write_cal_model(&again.model, again.z_ref));
    }
});
