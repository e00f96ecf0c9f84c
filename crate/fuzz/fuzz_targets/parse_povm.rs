#![no_main]

use libfuzzer_sys::fuzz_target;
use povmtk::tolerance::Tolerance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(povm) = povmtk::json::parse_povm(text) else { return };
    // Anything that parses must survive the predicates and re-serialize.
    let tol = Tolerance::default();
    let report = povm.validate(&tol);
    if report.psd_ok {
        let _ = povm.is_pvm(&tol);
        let _ = povm.support(&tol);
    }
    let round = povmtk::json::parse_povm(&povmtk::json::povm_to_json(&povm)).unwrap();
    assert_eq!(round, povm);
});
