#![no_main]

use ilsim::cavity::PhaseShift;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = text.parse::<PhaseShift>() {
        let v = p.value();
        assert!((0.0..std::f64::consts::TAU).contains(&v));
    }
});
