#![no_main]

use ilsim::sweep::{parse_jsonl, to_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(recs) = parse_jsonl(text) {
        let out = to_jsonl(&recs).expect("records serialize");
        assert_eq!(parse_jsonl(&out).expect("own output parses").len(), recs.len());
    }
});
