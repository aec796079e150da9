#![no_main]

use libfuzzer_sys::fuzz_target;
use sliced_igw::io::parse_table;

// First byte picks the label column (or none); the rest is the table.
fuzz_target!(|data: &[u8]| {
    let Some((&selector, body)) = data.split_first() else {
        return;
    };
    let label_column = (selector < 4).then_some(selector as usize);
    if let Ok(table) = parse_table(body, label_column) {
        assert!(table.values.is_finite());
        if let Some(labels) = &table.labels {
            assert_eq!(labels.len(), table.values.rows());
        }
    }
});
