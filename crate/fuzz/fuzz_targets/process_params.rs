#![no_main]

use libfuzzer_sys::fuzz_target;
use qrenewal::classical::compute_n_term;
use qrenewal::metrics::quantum_memory;
use qrenewal::quantum::QuantumModel;
use qrenewal::ProcessParams;

fuzz_target!(|input: (f64, f64, f64, f64, f64)| {
    let (gamma1, gamma2, p, dt, delta) = input;
    let Ok(params) = ProcessParams::new(gamma1, gamma2, p, dt) else {
        return;
    };
    let Ok(dp) = params.discretize() else {
        return;
    };
    let _ = compute_n_term(&dp, delta);
    if let Ok((cq, dq)) = quantum_memory(&dp) {
        assert!((0.0..=1.0).contains(&cq) && (0.0..=1.0).contains(&dq));
    }
    if let Ok(model) = QuantumModel::new(&dp) {
        let norm = model.memory_state(0).norm_sqr();
        assert!(norm.is_finite(), "memory state norm {norm} at {params:?}");
    }
});
