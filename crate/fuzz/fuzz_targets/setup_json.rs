#![no_main]

use bellmark::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    bellmark::linalg::set_dim_cap(64);
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(setup) = io::parse_setup(text) {
        // anything accepted must survive a write and re-read
        let again = io::parse_setup(&io::setup_to_value(&setup).to_string()).unwrap();
        assert_eq!(again.site_dims(), setup.site_dims());
    }
});
