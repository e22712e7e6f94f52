#![no_main]

use gbl_core::model::{parse_params, write_params};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_params(text) {
        assert_eq!(parse_params(&write_params(&p)).unwrap(), p);
    }
});
