#![no_main]

use bellmark::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = io::parse_partition(text) {
            let profile = p.profile();
            assert!(profile.is_realizable(p.n()));
            assert_eq!(io::parse_partition(&io::partition_to_value(&p).to_string()).unwrap(), p);
        }
    }
});
