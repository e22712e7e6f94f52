#![no_main]

use gbl_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        let _ = cfg.validate();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
});
