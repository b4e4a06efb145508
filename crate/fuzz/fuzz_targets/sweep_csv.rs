#![no_main]

use libfuzzer_sys::fuzz_target;
use qrenewal::experiments::SweepTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = SweepTable::read_csv(data) {
        let text = table.to_csv_string().expect("accepted table serializes");
        let again = SweepTable::read_csv(text.as_bytes()).expect("serialized table parses");
        assert_eq!(again.len(), table.len());
    }
});
