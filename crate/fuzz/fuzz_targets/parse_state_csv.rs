#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(states) = rotkep::io::parse_state_csv(text) {
        // whatever parses must survive a write/parse cycle bit for bit
        let mut buf = Vec::new();
        rotkep::io::write_state_csv(&mut buf, &states).unwrap();
        let back = rotkep::io::parse_state_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.len(), states.len());
        for (a, b) in back.iter().zip(&states) {
            assert_eq!(a.to_array().map(f64::to_bits), b.to_array().map(f64::to_bits));
        }
    }
});
