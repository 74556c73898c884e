#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(fol) = cmc_h2r::io::parse_foliation_json(text) {
        let json = cmc_h2r::io::foliation_to_json(&fol);
        assert_eq!(cmc_h2r::io::parse_foliation_json(&json), Ok(fol));
    }
});
