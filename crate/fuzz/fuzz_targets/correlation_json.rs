#![no_main]

use bellmark::bell::{evaluate_from_correlations, CorrelatorCoefficients};
use bellmark::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(record) = io::parse_correlations(text) else {
        return;
    };
    assert_eq!(io::parse_correlations(&io::correlations_to_value(&record).to_string()).unwrap(), record);
    if record.n() <= 12 {
        let coeffs = CorrelatorCoefficients::new(record.n()).unwrap();
        let _ = evaluate_from_correlations(&coeffs, &record);
    }
});
