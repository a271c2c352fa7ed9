#![no_main]

use ilsim::cavity::{mode_from_geometry, CavityConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = CavityConfig::from_json(text) {
        let _ = mode_from_geometry(&cfg, 1470e-9);
        CavityConfig::from_json(&cfg.to_json()).expect("own output parses");
    }
});
