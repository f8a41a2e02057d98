#![no_main]

use bellmark::bell::Setting;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(setting) = s.parse::<Setting>() {
            assert_eq!(setting.to_string(), s);
        }
    }
});
