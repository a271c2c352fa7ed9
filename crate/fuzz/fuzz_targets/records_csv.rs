#![no_main]

use ilsim::sweep::{parse_csv, to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(recs) = parse_csv(text) {
        let out = to_csv(&recs).expect("records serialize");
        assert_eq!(parse_csv(&out).expect("own output parses").len(), recs.len());
    }
});
