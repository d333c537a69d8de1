#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(states) = rotkep::io::parse_poincare_csv(text) {
        let mut buf = Vec::new();
        rotkep::io::write_poincare_csv(&mut buf, &states).unwrap();
        let back = rotkep::io::parse_poincare_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, states);
    }
});
