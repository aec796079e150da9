#![no_main]

use libfuzzer_sys::fuzz_target;
use sliced_igw::io::parse_values;
use sliced_igw::univariate::igw_1d;

fuzz_target!(|data: &[u8]| {
    if let Ok(sample) = parse_values(data) {
        let r = igw_1d(&sample, &sample.reflect());
        assert!(r.igw_squared >= 0.0);
    }
});
