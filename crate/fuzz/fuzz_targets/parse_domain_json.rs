#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((dom, bc)) = cmc_h2r::io::parse_domain_json(text) {
        assert_eq!(bc.values.len(), dom.boundary_nodes().len());
        // exercise the stencil machinery on small accepted masks
        if dom.nr * dom.nz <= 1024 {
            let mut u = vec![0.0; dom.nr * dom.nz];
            for (&(i, j), &v) in dom.boundary_nodes().iter().zip(&bc.values) {
                u[j * dom.nr + i] = v;
            }
            let res = cmc_h2r::killing_graph::residual(&dom, &u, 1.0);
            assert_eq!(res.len(), dom.num_unknowns());
        }
    }
});
