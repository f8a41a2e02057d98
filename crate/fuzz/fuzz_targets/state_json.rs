#![no_main]

use bellmark::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    bellmark::linalg::set_dim_cap(64);
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rho) = io::parse_state(text) {
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-9);
        }
    }
});
