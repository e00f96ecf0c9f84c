#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cert) = povmtk::json::parse_equivalence(text) else { return };
    let round = povmtk::json::parse_equivalence(&povmtk::json::equivalence_to_json(&cert)).unwrap();
    assert_eq!(round.is_equivalent(), cert.is_equivalent());
    assert_eq!(round.is_inequivalent(), cert.is_inequivalent());
});
