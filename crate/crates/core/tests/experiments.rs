use qrenewal::experiments::{
    equivalence_study, Axis, AxisScale, FamilyGrid, PrecisionGrid, SweepSpec, SweepTable,
};
use qrenewal::quantum::QuantumModel;
use qrenewal::verify::recurrence_deviation;
use qrenewal::ProcessParams;

fn small_family() -> FamilyGrid {
    FamilyGrid {
        gamma: Axis {
            min: 0.5,
            max: 50.0,
            points: 5,
            scale: AxisScale::Log,
        },
        p: Axis {
            min: 0.0,
            max: 1.0,
            points: 5,
            scale: AxisScale::Linear,
        },
    }
}

#[test]
fn sweeps_are_reproducible_and_round_trip() {
    let specs = [
        SweepSpec::precision(12.0, 1.0, 0.9, PrecisionGrid::default()),
        SweepSpec::family(small_family()),
    ];
    for spec in specs {
        let a = spec.run().unwrap();
        let b = spec.run().unwrap();
        assert_eq!(a, b);
        let text = a.to_csv_string().unwrap();
        assert_eq!(text, b.to_csv_string().unwrap());
        let parsed = SweepTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed, a);
    }
}

#[test]
fn family_sweep_marks_degenerate_lines() {
    let SweepTable::Family(rows) = SweepSpec::family(small_family()).run().unwrap() else {
        panic!("expected family rows");
    };
    assert_eq!(rows.len(), 25);
    for row in &rows {
        let edge = row.p == 0.0 || row.p == 1.0;
        assert_eq!(row.degenerate, edge, "{row:?}");
        if edge {
            assert_eq!((row.cq, row.dq), (0.0, 0.0));
        } else {
            assert!(row.cq > 0.0 && row.dq == 1.0, "{row:?}");
        }
    }
}

#[test]
fn precision_sweep_rejects_extremal_points() {
    assert!(
        SweepSpec::precision(3.0, 3.0, 0.5, PrecisionGrid::default())
            .run()
            .is_err()
    );
    assert!(
        SweepSpec::precision(3.0, 1.0, 1.0, PrecisionGrid::default())
            .run()
            .is_err()
    );
}

#[test]
fn single_channel_engines_agree() {
    let params = ProcessParams::new(12.0, 1.0, 1.0, 0.1).unwrap();
    let report = equivalence_study(&params, 1_000_000, 99).unwrap();
    assert!(report.survival_pass);
    assert!(report.tv_distance < 0.005, "TV = {}", report.tv_distance);
}

#[test]
fn near_degenerate_rates_stay_accurate() {
    for ratio in [1.0 + 1e-4, 1.0 + 1e-7, 1.0 + 1e-10] {
        let dp = ProcessParams::new(ratio, 1.0, 0.3, 0.05)
            .unwrap()
            .discretize()
            .unwrap();
        let model = QuantumModel::new(&dp).unwrap();
        assert!(model.unitary().unitarity_error() < 1e-10, "ratio {ratio}");
        assert!(model.kraus().completeness_error() < 1e-10, "ratio {ratio}");
        assert!(recurrence_deviation(&model, 200) < 1e-9, "ratio {ratio}");
    }
}
