#![no_main]

use libfuzzer_sys::fuzz_target;
use prime_sphere::formats::parse_points_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_points_csv(text);
    }
});
