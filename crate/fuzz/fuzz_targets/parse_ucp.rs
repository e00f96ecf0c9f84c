#![no_main]

use libfuzzer_sys::fuzz_target;
use povmtk::tolerance::Tolerance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let tol = Tolerance::default();
    let Ok(ucp) = povmtk::json::parse_ucp(text, &tol) else { return };
    // A map that parses is backed by a normalized POVM; the Choi test and
    // the homomorphism check must not panic on it.
    let _ = ucp.is_cp(&tol);
    let _ = ucp.is_homomorphism(&tol);
});
