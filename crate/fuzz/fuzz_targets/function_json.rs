#![no_main]

use libfuzzer_sys::fuzz_target;
use prime_sphere::formats::function_from_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = function_from_json(text);
    }
});
