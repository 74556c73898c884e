#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(samples) = cmc_h2r::io::parse_profile_csv(text) {
        // attaching samples to parameters enforces the profile invariants;
        // it must reject or accept without panicking
        let params = cmc_h2r::delaunay::DelaunayParams::new(1.0, 0.2).unwrap();
        let _ = cmc_h2r::delaunay::DelaunayProfile::from_samples(
            params,
            cmc_h2r::geom::PointH2::new(0.0, 0.0),
            samples,
        );
    }
});
