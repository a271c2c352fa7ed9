#![no_main]

use ilsim_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = RunConfig::from_json(text) {
        assert_eq!(RunConfig::from_json(&c.to_json()).expect("own output parses"), c);
    }
});
