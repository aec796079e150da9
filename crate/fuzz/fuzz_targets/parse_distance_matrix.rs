#![no_main]

use libfuzzer_sys::fuzz_target;
use sliced_igw::io::parse_distance_matrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = parse_distance_matrix(data) {
        let v = d.values();
        assert_eq!(d.labels().len(), v.rows());
        for i in 0..v.rows() {
            assert_eq!(v[(i, i)], 0.0);
            for j in 0..v.cols() {
                assert!(v[(i, j)] >= 0.0);
            }
        }
    }
});
