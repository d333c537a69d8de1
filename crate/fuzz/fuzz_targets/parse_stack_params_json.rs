#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = rotkep::scenario::parse_stack_params_json(text) {
        // the upper stack works with the sign-flipped Hamiltonian
        assert_eq!(m.level().abs(), m.params.c.abs());
    }
});
