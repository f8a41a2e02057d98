#![no_main]

use bellmark::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    bellmark::linalg::set_dim_cap(64);
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = io::parse_matrix(text) {
            let again = io::parse_matrix(&io::matrix_to_value(&m).to_string()).unwrap();
            assert_eq!(again.max_abs_diff(&m), 0.0);
        }
    }
});
