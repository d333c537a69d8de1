#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = rotkep::scenario::parse_scenario_json(text) {
        // an accepted scenario always builds its stack
        cfg.model().unwrap();
    }
});
