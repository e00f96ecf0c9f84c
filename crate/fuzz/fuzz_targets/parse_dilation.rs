#![no_main]

use libfuzzer_sys::fuzz_target;
use povmtk::tolerance::Tolerance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(dilation) = povmtk::json::parse_dilation(text) else { return };
    let _ = dilation.verify(&Tolerance::default());
});
