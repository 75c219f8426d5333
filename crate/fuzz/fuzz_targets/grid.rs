#![no_main]

use libfuzzer_sys::fuzz_target;
use sdpi_est_cli::parse_grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(points) = parse_grid("x", text) {
        assert!(!points.is_empty());
        assert!(points.iter().all(|v| v.is_finite()));
    }
});
