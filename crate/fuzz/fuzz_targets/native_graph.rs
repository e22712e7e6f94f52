#![no_main]

use gbl_core::graph::{parse_native, write_native};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_native(text) {
        assert_eq!(parse_native(&write_native(&g)).unwrap(), g);
    }
});
