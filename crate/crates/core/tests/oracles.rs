//! Library results against independent references: exact rational
//! arithmetic, brute-force enumeration and high-precision constants.

use gapload::coding::{
    build_gap_table, rate_loss_db, rs_gain_db, rs_output_ser, uncoded_gap, CodingConfig, GapTable,
    LossReference, RsCodeParams,
};
use gapload::loading::{energy_for_bits, min_energy_for_rate, LoadingInputs, Subset};
use gapload::special::{erfc, q_function};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Output SER at `p = 1/denom`, summed over the common denominator `denom^n`.
fn exact_rs_output(denom: i64, n: u32, t: u32) -> f64 {
    let mut numerator = BigInt::from(0);
    for i in (t + 1)..=n {
        numerator +=
            binomial(n - 1, i - 1) * num_traits::pow(BigInt::from(denom - 1), (n - i) as usize);
    }
    BigRational::new(numerator, num_traits::pow(BigInt::from(denom), n as usize))
        .to_f64()
        .unwrap()
}

#[test]
fn rs_output_matches_exact_rationals() {
    let rs = RsCodeParams::rs_240_224();
    for denom in [30i64, 100, 1000, 10_000, 100_000] {
        let exact = exact_rs_output(denom, 240, 8);
        let got: f64 = rs_output_ser(1.0 / denom as f64, &rs);
        assert!(
            ((got - exact) / exact).abs() < 1e-11,
            "p = 1/{denom}: {got:e} vs {exact:e}"
        );
    }
}

#[test]
fn erfc_matches_libm() {
    let mut x = -6.0f64;
    while x <= 26.0 {
        let reference = libm::erfc(x);
        let got = erfc(x);
        // erfc has relative condition number ~2x^2, which scaling by sqrt(2) exposes.
        let tol = if reference < 1e-300 {
            1e-300
        } else {
            1e-13 * (2.0 * x * x).max(1.0) * reference
        };
        assert!(
            (got - reference).abs() <= tol,
            "erfc({x}): {got:e} vs {reference:e}"
        );
        x += 0.0625;
    }
    assert!((q_function(0.0f64) - 0.5).abs() < 1e-16);
}

#[test]
fn high_precision_constants() {
    let gap: f64 = uncoded_gap(1e-7).unwrap();
    assert!((gap - 9.457_995_787_259_717).abs() < 1e-12 * gap);
    let rs_gain: f64 = rs_gain_db(&CodingConfig::default()).unwrap();
    assert!((rs_gain - 4.439_566_462_437_514).abs() < 1e-9);
    let loss: f64 = rate_loss_db(4.0, &RsCodeParams::rs_240_224(), &LossReference::Flat).unwrap();
    assert!((loss - 0.911_794_881_696_165_8).abs() < 1e-12);
}

#[test]
fn min_energy_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let lc = rng.gen_range(1..=3);
        let b_max = rng.gen_range(1..=6);
        let gains: Vec<f64> = (0..lc)
            .map(|_| 10f64.powf(rng.gen_range(-4.0..0.0)))
            .collect();
        let subset = Subset::from_gains(0, &gains).unwrap();
        let table = build_gap_table(&CodingConfig::default(), rng.gen_bool(0.5), b_max).unwrap();
        let inputs = LoadingInputs::new(table, lc, 1e6, 1.0, b_max).unwrap();
        let target = rng.gen_range(0..=(lc as u64 * b_max as u64));
        let (alloc, total) = min_energy_for_rate(&subset, &inputs, target).unwrap();
        assert_eq!(alloc.total_bits(), target);

        let levels = b_max as usize + 1;
        let mut best = f64::INFINITY;
        for code in 0..levels.pow(lc as u32) {
            let bits: Vec<u32> = (0..lc)
                .map(|i| ((code / levels.pow(i as u32)) % levels) as u32)
                .collect();
            if bits.iter().map(|&b| b as u64).sum::<u64>() == target {
                let e: f64 = energy_for_bits(&bits, &subset, &inputs)
                    .unwrap()
                    .iter()
                    .sum();
                best = best.min(e);
            }
        }
        assert!(
            (total - best).abs() <= 1e-12 * best.max(1e-300),
            "{total} vs {best}"
        );
    }
}

#[test]
fn min_energy_rejects_excess_rate() {
    let subset = Subset::from_gains(0, &[1.0, 1.0]).unwrap();
    let inputs = LoadingInputs::new(GapTable::constant(1.0, 4).unwrap(), 2, 1.0, 1.0, 4).unwrap();
    assert!(min_energy_for_rate(&subset, &inputs, 9).is_err());
}
