#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(derivative) = povmtk::json::parse_derivative(text) else { return };
    let round =
        povmtk::json::parse_derivative(&povmtk::json::derivative_to_json(&derivative)).unwrap();
    assert_eq!(round.blocks, derivative.blocks);
});
