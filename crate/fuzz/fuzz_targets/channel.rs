#![no_main]

use libfuzzer_sys::fuzz_target;
use sdpi_est_cli::parse_channel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(expr) = parse_channel("channel", text) {
        let k = expr.folded().expect("parsed channels fold within the state cap");
        for row in k.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
});
