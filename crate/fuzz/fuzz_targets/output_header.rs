#![no_main]

use libfuzzer_sys::fuzz_target;
use sdpi_est_cli::parse_output;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_output(text) {
        assert!(file.config.get("command").is_some());
    }
});
