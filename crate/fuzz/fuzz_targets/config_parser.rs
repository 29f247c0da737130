#![no_main]

use libfuzzer_sys::fuzz_target;
use prime_sphere_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::from_text(text) {
        // anything accepted must survive its own rendering
        let again = RunConfig::from_text(&config.render()).expect("rendered config reparses");
        assert_eq!(config.render(), again.render());
    }
});
