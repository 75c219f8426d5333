#![no_main]

use libfuzzer_sys::fuzz_target;
use sdpi_est_cli::{parse_config, parse_flag_pairs};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = parse_config(text) {
        // printing and reparsing must give the same map
        let again = parse_config(&config.to_string()).expect("printed config reparses");
        assert_eq!(config, again);
    }
    let args: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    let _ = parse_flag_pairs(&args);
});
