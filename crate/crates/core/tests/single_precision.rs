//! The library instantiated at `f32`.

use gapload::coding::{build_gap_table, CodingConfig};
use gapload::scenario::{run_scenario, Variant};
use gapload::{Channel, Channel32, GapTable32, SystemConfig, SystemConfig32};

#[test]
fn f32_tracks_f64() {
    for variant in Variant::ALL {
        let c64 = SystemConfig::default().variant(variant);
        let c32 = SystemConfig32::default().variant(variant);
        let r64 = run_scenario(&c64, &Channel::reference_15_path()).unwrap();
        let r32 = run_scenario(&c32, &Channel32::reference_15_path()).unwrap();
        let rel = (r32.raw_bits as f64 - r64.raw_bits as f64).abs() / r64.raw_bits as f64;
        assert!(
            rel < 0.005,
            "{variant}: f32 {} vs f64 {}",
            r32.raw_bits,
            r64.raw_bits
        );
    }
}

#[test]
fn f32_gap_table() {
    let t32: GapTable32 = build_gap_table(&CodingConfig::<f32>::default(), true, 10).unwrap();
    let t64 = build_gap_table(&CodingConfig::<f64>::default(), true, 10).unwrap();
    for b in 1..=10 {
        let (a, c) = (t32.gap_db(b).unwrap() as f64, t64.gap_db(b).unwrap());
        assert!((a - c).abs() < 1e-3, "order {b}: {a} vs {c}");
    }
}
