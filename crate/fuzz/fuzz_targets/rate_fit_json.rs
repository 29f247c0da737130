#![no_main]

use libfuzzer_sys::fuzz_target;
use prime_sphere::formats::rate_fit_from_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = rate_fit_from_json(text);
    }
});
