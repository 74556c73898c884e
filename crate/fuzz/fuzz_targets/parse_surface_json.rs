#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(surf) = cmc_h2r::io::parse_surface_json(text) {
        // accepted surfaces must re-serialize and re-parse cleanly
        let json = cmc_h2r::io::surface_to_json(&surf);
        cmc_h2r::io::parse_surface_json(&json).expect("round trip of accepted surface");
    }
});
