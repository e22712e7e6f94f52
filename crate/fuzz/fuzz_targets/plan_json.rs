#![no_main]

use gbl_core::attack::{parse_plan_json, plan_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_plan_json(text) {
        let again = parse_plan_json(&plan_to_json(&file).unwrap()).unwrap();
        assert_eq!(again, file);
        let _ = file.to_plan();
    }
});
