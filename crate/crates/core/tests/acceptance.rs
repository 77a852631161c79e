//! Exit criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p gapload --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use gapload::channel::{LengthProfile, MultipathChannelModel};
use gapload::coding::{
    build_gap_table, rs_output_ser, solve_input_ser, uncoded_gap, CodingConfig, GapTable,
    RsCodeParams,
};
use gapload::loading::{
    allocate_subset, discrete_bit_split, energy_for_bits, practical_rate,
    practical_rate_closed_form, LoadingInputs, Subset,
};
use gapload::scenario::{
    compare_variants, energy_comparison, length_sweep_with_threads, run_scenario, SystemConfig,
    Variant,
};
use gapload::to_db;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, pass: bool, detail: impl AsRef<str>) {
    println!(
        "[{}] {name}: {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(pass, "{name}: {}", detail.as_ref());
}

fn table3() -> (Vec<gapload::ScenarioResult>, Duration) {
    let start = Instant::now();
    let results = compare_variants(
        &SystemConfig::<f64>::default(),
        &MultipathChannelModel::reference_15_path(),
    )
    .unwrap();
    (results, start.elapsed())
}

fn useful(results: &[gapload::ScenarioResult], v: Variant) -> f64 {
    results.iter().find(|r| r.variant == v).unwrap().useful_bits
}

#[test]
fn gap_constant() {
    let start = Instant::now();
    let db: f64 = to_db(uncoded_gap(1e-7).unwrap());
    let pass = (db - 9.8).abs() <= 0.1 && start.elapsed() < Duration::from_millis(100);
    report(
        "gap constant",
        pass,
        format!("uncoded gap at BER 1e-7 = {db:.4} dB (9.8 ± 0.1)"),
    );
}

#[test]
fn uncoded_table3() {
    let (results, elapsed) = table3();
    let dmt = useful(&results, Variant::UncodedDmt);
    let lp = useful(&results, Variant::UncodedLpDmt);
    let dmt_err = dmt / 4636.0 - 1.0;
    let lp_err = lp / 5016.0 - 1.0;
    let pass = dmt_err.abs() <= 0.03 && lp_err.abs() <= 0.03 && elapsed < Duration::from_secs(5);
    report(
        "uncoded throughput",
        pass,
        format!(
            "DMT {dmt} ({:+.2}% vs 4636), LP-DMT {lp} ({:+.2}% vs 5016), ±3%, {elapsed:.2?}",
            100.0 * dmt_err,
            100.0 * lp_err
        ),
    );
}

#[test]
fn coded_relative_gains() {
    let (results, elapsed) = table3();
    let c_lp = useful(&results, Variant::CodedLpDmt);
    let c_dmt = useful(&results, Variant::CodedDmt);
    let u_lp = useful(&results, Variant::UncodedLpDmt);
    let vs_uncoded = 100.0 * (c_lp / u_lp - 1.0);
    let vs_dmt = 100.0 * (c_lp / c_dmt - 1.0);
    let abs_lp = c_lp / 5924.8 - 1.0;
    let abs_dmt = c_dmt / 5646.2 - 1.0;
    let pass = (vs_uncoded - 18.0).abs() <= 3.0
        && (vs_dmt - 5.0).abs() <= 3.0
        && abs_lp.abs() <= 0.06
        && abs_dmt.abs() <= 0.06
        && elapsed < Duration::from_secs(10);
    report(
        "coded relative gains",
        pass,
        format!(
            "coded LP-DMT {c_lp:.1} ({:+.2}% vs 5924.8), coded DMT {c_dmt:.1} ({:+.2}% vs 5646.2); \
             gain vs uncoded LP-DMT {vs_uncoded:.2}% (18 ± 3), vs coded DMT {vs_dmt:.2}% (5 ± 3), {elapsed:.2?}",
            100.0 * abs_lp,
            100.0 * abs_dmt
        ),
    );
}

#[test]
fn table3_ordering() {
    let (results, _) = table3();
    let values: Vec<f64> = Variant::ALL.iter().map(|&v| useful(&results, v)).collect();
    let pass = values.windows(2).all(|w| w[0] > w[1]);
    report(
        "variant ordering",
        pass,
        format!(
            "coded LP-DMT {:.1} > coded DMT {:.1} > uncoded LP-DMT {:.1} > uncoded DMT {:.1}",
            values[0], values[1], values[2], values[3]
        ),
    );
}

/// Largest total over every bit vector in `[0, b_max]^lc` that fits the budget.
fn exhaustive_best(subset: &Subset<f64>, inputs: &LoadingInputs<f64>) -> u64 {
    let lc = inputs.lc();
    let levels = inputs.b_max() as usize + 1;
    let mut best = 0;
    let mut bits = vec![0u32; lc];
    for code in 0..levels.pow(lc as u32) {
        let mut c = code;
        for b in bits.iter_mut() {
            *b = (c % levels) as u32;
            c /= levels;
        }
        let e: f64 = energy_for_bits(&bits, subset, inputs).unwrap().iter().sum();
        if e <= inputs.budget() {
            best = best.max(practical_rate(&bits));
        }
    }
    best
}

fn random_gains(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| 10f64.powf(rng.gen_range(-5.0..0.0)))
        .collect()
}

#[test]
fn oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut uncoded_mismatch = 0;
    let mut coded_worst_gap = 0i64;
    let mut coded_inexact = 0;
    for _ in 0..500 {
        let lc = rng.gen_range(1..=3);
        let b_max = rng.gen_range(1..=6);
        let gains = random_gains(&mut rng, lc);
        let es = 10f64.powf(rng.gen_range(0.0..7.0));
        let subset = Subset::from_gains(0, &gains).unwrap();

        let uncoded = GapTable::constant(uncoded_gap(1e-7).unwrap(), b_max).unwrap();
        let inputs = LoadingInputs::new(uncoded, lc, es, 1.0, b_max).unwrap();
        if allocate_subset(&subset, &inputs).total_bits() != exhaustive_best(&subset, &inputs) {
            uncoded_mismatch += 1;
        }

        let cfg = CodingConfig {
            c_factor: rng.gen_range(1.0..4.0),
            margin_db: rng.gen_range(0.0..3.0),
            ..CodingConfig::default()
        };
        let coded = build_gap_table(&cfg, true, b_max).unwrap();
        let inputs = LoadingInputs::new(coded, lc, es, 1.0, b_max).unwrap();
        let greedy = allocate_subset(&subset, &inputs).total_bits() as i64;
        let best = exhaustive_best(&subset, &inputs) as i64;
        coded_worst_gap = coded_worst_gap.max(best - greedy);
        if best != greedy {
            coded_inexact += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = uncoded_mismatch == 0 && coded_worst_gap <= 1 && elapsed < Duration::from_secs(30);
    report(
        "oracle equivalence",
        pass,
        format!(
            "500 instances: uncoded mismatches {uncoded_mismatch}; coded worst shortfall \
             {coded_worst_gap} bit ({coded_inexact} inexact), {elapsed:.2?}"
        ),
    );
}

#[test]
fn budget_and_maximality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let tables = [
        build_gap_table(&CodingConfig::default(), false, 10).unwrap(),
        build_gap_table(&CodingConfig::default(), true, 10).unwrap(),
    ];
    let mut over_budget = 0;
    let mut not_maximal = 0;
    for trial in 0..10_000 {
        let lc = rng.gen_range(1..=16);
        let gains = random_gains(&mut rng, lc);
        let es = 10f64.powf(rng.gen_range(0.0..8.0));
        let table = tables[trial % 2].clone();
        let inputs = LoadingInputs::new(table, lc, es, 1.0, 10).unwrap();
        let subset = Subset::from_gains(trial, &gains).unwrap();
        let alloc = allocate_subset(&subset, &inputs);
        if alloc.total_energy() > es * (1.0 + 1e-12) {
            over_budget += 1;
        }
        for i in 0..lc {
            if alloc.bits[i] == inputs.b_max() {
                continue;
            }
            let mut bits = alloc.bits.clone();
            bits[i] += 1;
            let e: f64 = energy_for_bits(&bits, &subset, &inputs)
                .unwrap()
                .iter()
                .sum();
            if e <= inputs.budget() {
                not_maximal += 1;
            }
        }
    }
    report(
        "budget property",
        over_budget == 0 && not_maximal == 0,
        format!("10^4 allocations: {over_budget} over budget, {not_maximal} improvable by one bit"),
    );
}

fn random_channel(rng: &mut ChaCha8Rng) -> MultipathChannelModel<f64> {
    let n_paths = rng.gen_range(1..=15);
    let paths: Vec<(f64, f64)> = (0..n_paths)
        .map(|_| (rng.gen_range(-0.2..0.2), rng.gen_range(20.0..1500.0)))
        .collect();
    let att = gapload::channel::AttenuationParams::new(
        rng.gen_range(0.5..1.0),
        rng.gen_range(0.0..1e-2),
        rng.gen_range(0.0..1e-8),
    )
    .unwrap();
    MultipathChannelModel::new(&paths, att, rng.gen_range(1e8..3e8)).unwrap()
}

#[test]
fn lc_one_equals_dmt_preset() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut differing = 0;
    for i in 0..100 {
        let channel = random_channel(&mut rng);
        let base = SystemConfig::<f64> {
            coding_enabled: i % 2 == 0,
            ..SystemConfig::default()
        };
        let preset = run_scenario(&base.dmt_preset(), &channel).unwrap();
        let lp = run_scenario(&SystemConfig { lc: 1, ..base }, &channel).unwrap();
        if preset != lp {
            differing += 1;
        }
    }
    report(
        "L_c = 1 equivalence",
        differing == 0,
        format!("100 random channels: {differing} differ from the DMT preset"),
    );
}

#[test]
fn practical_rate_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let lc = rng.gen_range(1..=64);
        let rate = rng.gen_range(0.0..(lc as f64 * 16.0));
        let split = discrete_bit_split(rate, lc);
        if practical_rate(&split.bits) != practical_rate_closed_form(rate, lc) {
            mismatches += 1;
        }
    }
    report(
        "practical-rate identity",
        mismatches == 0,
        format!("10^4 random (R_k, L_c): {mismatches} mismatches"),
    );
}

#[test]
fn rs_chain_roundtrip() {
    let rs = RsCodeParams::rs_240_224();
    let mut worst = 0.0f64;
    let points = 51;
    for i in 0..points {
        let p = 10f64.powf(-6.0 + 5.0 * i as f64 / (points - 1) as f64);
        let back = solve_input_ser(rs_output_ser(p, &rs), &rs).unwrap();
        worst = worst.max((back / p - 1.0).abs());
    }
    report(
        "RS chain roundtrip",
        rs.t() == 8 && worst <= 1e-6,
        format!("RS(240,224), {points} points on [1e-6, 1e-1]: worst relative error {worst:.2e}"),
    );
}

#[test]
fn length_sweep_monotone() {
    let cfg = SystemConfig::<f64>::default();
    let distances: Vec<f64> = (1..=50).map(|i| 20.0 * i as f64).collect();
    let rows = length_sweep_with_threads(&cfg, &LengthProfile::ALL, &distances, 1.5e8, 0).unwrap();
    let mut violations = Vec::new();
    let mut order_violations = 0;
    for profile in LengthProfile::ALL {
        for variant in Variant::ALL {
            let series: Vec<f64> = rows
                .iter()
                .filter(|r| r.profile == profile && r.variant == variant)
                .map(|r| r.useful_bits)
                .collect();
            if series.windows(2).any(|w| w[1] > w[0]) {
                violations.push(format!("{profile}/{variant}"));
            }
        }
        for d in &distances {
            let at = |v: Variant| {
                rows.iter()
                    .find(|r| r.profile == profile && r.distance_m == *d && r.variant == v)
                    .unwrap()
                    .useful_bits
            };
            if at(Variant::CodedLpDmt) < at(Variant::CodedDmt) {
                order_violations += 1;
            }
        }
    }
    let pass = violations.is_empty() && order_violations == 0;
    report(
        "length-sweep monotonicity",
        pass,
        format!(
            "5 profiles x 4 variants x {} distances: non-monotone series {:?}; \
             coded LP-DMT < coded DMT at {order_violations} points",
            distances.len(),
            violations
        ),
    );
}

#[test]
fn energy_utilization() {
    let cmp = energy_comparison(
        &SystemConfig::<f64>::default(),
        &MultipathChannelModel::reference_15_path(),
    )
    .unwrap();
    let (dmt, lp) = (cmp.utilization_dmt(), cmp.utilization_lpdmt());
    report(
        "energy utilization",
        lp > dmt,
        format!("mean utilization coded LP-DMT {lp:.4} vs coded DMT {dmt:.4}"),
    );
}
