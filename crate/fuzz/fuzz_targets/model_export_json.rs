#![no_main]

use libfuzzer_sys::fuzz_target;
use qrenewal::quantum::ModelExport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(export) = ModelExport::from_json(text) {
        let u = export.unitary().expect("accepted export has a unitary");
        assert!(u.unitarity_error() <= 1e-8);
        let again = ModelExport::from_json(&export.to_json().unwrap()).unwrap();
        assert_eq!(again, export);
    }
});
