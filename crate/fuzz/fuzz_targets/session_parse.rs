#![no_main]

use libfuzzer_sys::fuzz_target;
use vnacal_cli::session::parse_session;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_session(text);
    }
});
