#![no_main]

use gbl_core::graph::{parse_split, write_split};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_split(text) {
        assert_eq!(parse_split(&write_split(&s)).unwrap(), s);
    }
});
