#![no_main]

use gbl_core::graph::{parse_content_cites, parse_native, write_native};
use libfuzzer_sys::fuzz_target;

// Input is `<content>\0<cites>`; a loaded graph must survive the native round trip.
fuzz_target!(|data: &[u8]| {
    let (content, cites) = match data.iter().position(|&b| b == 0) {
        Some(i) => (&data[..i], &data[i + 1..]),
        None => (data, &[][..]),
    };
    if let Ok(loaded) = parse_content_cites(content, cites) {
        let text = write_native(&loaded.graph);
        assert_eq!(parse_native(&text).unwrap(), loaded.graph);
    }
});
