#![no_main]

use kinsmooth::cli_runner::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(c) = ExperimentConfig::from_toml(src) {
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).expect("printed config parses");
        assert_eq!(back.to_toml(), text);
    }
});
