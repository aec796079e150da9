#![no_main]

use libfuzzer_sys::fuzz_target;
use sliced_igw::io::parse_directions;

fuzz_target!(|data: &[u8]| {
    if let Ok(dirs) = parse_directions(data, 0) {
        for k in 0..dirs.len() {
            let norm: f64 = dirs.direction(k).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }
});
