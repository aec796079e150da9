#![no_main]

use std::collections::BTreeSet;

use libfuzzer_sys::fuzz_target;
use sliced_igw::io::parse_truth;

fuzz_target!(|data: &[u8]| {
    let items: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    if let Ok(labels) = parse_truth(data, &items) {
        assert_eq!(labels.len(), items.len());
        // Class ids are dense: exactly 0..k for k distinct classes.
        let distinct: BTreeSet<usize> = labels.iter().copied().collect();
        assert_eq!(distinct.iter().next_back().map(|m| m + 1), Some(distinct.len()));
    }
});
