#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(trace) = cmc_h2r::io::parse_trace_csv(text, 1e-3) {
        // the structural checks must digest any well-formed trace
        let _ = cmc_h2r::alexandrov::check_usc(&trace, 1e-6);
        let _ = cmc_h2r::alexandrov::check_monotone_structure(&trace, 1e-6);
        let csv = cmc_h2r::io::trace_to_csv(&trace);
        assert_eq!(cmc_h2r::io::parse_trace_csv(&csv, 1e-3).unwrap(), trace);
    }
});
