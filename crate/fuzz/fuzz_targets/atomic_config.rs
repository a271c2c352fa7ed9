#![no_main]

use ilsim::atomic_data::AtomicSystem;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sys) = AtomicSystem::from_json(text) {
        let again = AtomicSystem::from_json(&sys.to_json()).expect("own output parses");
        assert_eq!(again.rates, sys.rates);
    }
});
