#![no_main]

use libfuzzer_sys::fuzz_target;
use povmtk::tolerance::Tolerance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let tol = Tolerance::default();
    let Ok(combination) = povmtk::json::parse_combination(text, &tol) else { return };
    // A combination that passes its invariants must recombine.
    let recombined = povmtk::convexity::combine(&combination, &tol).unwrap();
    let _ = recombined.validate(&tol);
});
