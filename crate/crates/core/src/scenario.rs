//! End-to-end runs: channel evaluation, gap table, loading and useful
//! throughput accounting for the four system variants.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::channel::{FrequencyGrid, LengthProfile, MultipathChannelModel};
use crate::coding::{build_gap_table, CodingConfig, GapTable};
use crate::error::{Error, Result};
use crate::loading::{allocate_system, GroupingPolicy, LoadingInputs, SystemAllocation};
use crate::scalar::{from_db, to_db, Scalar};
use crate::table::fmt_float;

/// Environment variable capping sweep parallelism (`0` = one thread per core).
pub const THREADS_ENV: &str = "GAPLOAD_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    pub n_subcarriers: usize,
    /// Precoding length; 1 gives plain DMT.
    pub lc: usize,
    pub band_start_hz: T,
    pub band_stop_hz: T,
    pub spacing_hz: T,
    pub signal_psd_dbm_hz: T,
    pub noise_psd_dbm_hz: T,
    pub coding_enabled: bool,
    /// Carries the target BER used for both the uncoded and coded tables.
    pub coding: CodingConfig<T>,
    pub b_max: u32,
    pub grouping: GroupingPolicy,
}

impl<T: Scalar> Default for SystemConfig<T> {
    fn default() -> Self {
        SystemConfig {
            n_subcarriers: 1024,
            lc: 16,
            band_start_hz: T::lit(500e3),
            band_stop_hz: T::lit(20e6),
            spacing_hz: T::lit(19.043e3),
            signal_psd_dbm_hz: T::lit(-40.0),
            noise_psd_dbm_hz: T::lit(-110.0),
            coding_enabled: false,
            coding: CodingConfig::default(),
            b_max: 10,
            grouping: GroupingPolicy::Adjacent,
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if grid.last_frequency() > self.band_stop_hz {
            return Err(Error::config(
                "n_subcarriers",
                format!(
                    "last subcarrier at {} Hz lies above band_stop {} Hz",
                    grid.last_frequency(),
                    self.band_stop_hz
                ),
            ));
        }
        if self.lc == 0 || self.lc > self.n_subcarriers {
            return Err(Error::config(
                "lc",
                format!("{} must be in 1..={}", self.lc, self.n_subcarriers),
            ));
        }
        if !(self.signal_psd_dbm_hz > self.noise_psd_dbm_hz) {
            return Err(Error::config(
                "signal_psd_dbm_hz",
                "signal PSD must exceed the noise PSD",
            ));
        }
        if self.b_max == 0 {
            return Err(Error::config("b_max", "must be at least 1"));
        }
        if self.coding_enabled && self.b_max > self.coding.trellis.max_order() {
            return Err(Error::config(
                "b_max",
                format!(
                    "{} exceeds the {}-point super-constellation",
                    self.b_max, self.coding.trellis.max_constellation_points
                ),
            ));
        }
        self.coding.validate()
    }

    pub fn grid(&self) -> Result<FrequencyGrid<T>> {
        FrequencyGrid::new(self.n_subcarriers, self.band_start_hz, self.spacing_hz)
    }

    /// `E_s / N_0` from the flat signal and noise PSDs (`N_0 = 1`).
    pub fn es_over_n0(&self) -> T {
        from_db(self.signal_psd_dbm_hz - self.noise_psd_dbm_hz)
    }

    pub fn variant(&self, variant: Variant) -> Self {
        SystemConfig {
            lc: if variant.is_lpdmt() { self.lc } else { 1 },
            coding_enabled: variant.is_coded(),
            ..self.clone()
        }
    }

    /// Same configuration with `L_c = 1`.
    pub fn dmt_preset(&self) -> Self {
        SystemConfig {
            lc: 1,
            ..self.clone()
        }
    }

    pub fn gap_table(&self) -> Result<GapTable<T>> {
        build_gap_table(&self.coding, self.coding_enabled, self.b_max)
    }

    pub fn loading_inputs(&self) -> Result<LoadingInputs<T>> {
        LoadingInputs::new(
            self.gap_table()?,
            self.lc,
            self.es_over_n0(),
            T::one(),
            self.b_max,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    CodedLpDmt,
    CodedDmt,
    UncodedLpDmt,
    UncodedDmt,
}

impl Variant {
    /// In throughput order, highest first.
    pub const ALL: [Variant; 4] = [
        Variant::CodedLpDmt,
        Variant::CodedDmt,
        Variant::UncodedLpDmt,
        Variant::UncodedDmt,
    ];

    pub fn is_coded(self) -> bool {
        matches!(self, Variant::CodedLpDmt | Variant::CodedDmt)
    }

    pub fn is_lpdmt(self) -> bool {
        matches!(self, Variant::CodedLpDmt | Variant::UncodedLpDmt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::CodedLpDmt => "coded-lpdmt",
            Variant::CodedDmt => "coded-dmt",
            Variant::UncodedLpDmt => "uncoded-lpdmt",
            Variant::UncodedDmt => "uncoded-dmt",
        }
    }

    pub fn of(cfg_lc: usize, coded: bool) -> Self {
        match (cfg_lc > 1, coded) {
            (true, true) => Variant::CodedLpDmt,
            (false, true) => Variant::CodedDmt,
            (true, false) => Variant::UncodedLpDmt,
            (false, false) => Variant::UncodedDmt,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Information bits per symbol after removing the coding redundancy.
///
/// Uncoded: the raw total. Coded: the trellis redundancy is removed per
/// loaded sequence, then the RS rate `k/n` is applied.
pub fn useful_bits<T: Scalar>(system: &SystemAllocation<T>, cfg: &SystemConfig<T>) -> T {
    let raw = T::lit(system.total_bits() as f64);
    if !cfg.coding_enabled {
        return raw;
    }
    let redundancy =
        cfg.coding.trellis.redundancy_bits_per_2d * T::from_usize(system.active_sequences());
    (raw - redundancy) * cfg.coding.rs.code_rate::<T>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary<T> {
    pub total_raw_bits: u64,
    pub total_useful_bits: T,
    pub n_active_sequences: usize,
    /// Mean over subcarriers of transmitted energy over the PSD limit.
    pub energy_utilization_fraction: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult<T> {
    pub config: SystemConfig<T>,
    pub variant: Variant,
    pub grid: FrequencyGrid<T>,
    pub gap_table: GapTable<T>,
    pub allocation: SystemAllocation<T>,
    pub raw_bits: u64,
    pub useful_bits: T,
    /// Linear energy per subcarrier in units of `N_0`; the PSD limit is
    /// `config.es_over_n0()`.
    pub energy_profile: Vec<T>,
}

impl<T: Scalar> ScenarioResult<T> {
    pub fn energy_utilization(&self) -> T {
        let es = self.config.es_over_n0();
        let n = T::from_usize(self.energy_profile.len());
        self.energy_profile.iter().map(|&e| e / es).sum::<T>() / n
    }

    pub fn summary(&self) -> ScenarioSummary<T> {
        ScenarioSummary {
            total_raw_bits: self.raw_bits,
            total_useful_bits: self.useful_bits,
            n_active_sequences: self.allocation.active_sequences(),
            energy_utilization_fraction: self.energy_utilization(),
        }
    }

    /// Energy profile in dBm/Hz (PSD limit plus utilization in dB).
    pub fn energy_profile_dbm_hz(&self) -> Vec<T> {
        let es = self.config.es_over_n0();
        self.energy_profile
            .iter()
            .map(|&e| self.config.signal_psd_dbm_hz + to_db(e / es))
            .collect()
    }

    /// `variant raw=... useful=...`
    pub fn summary_line(&self) -> String {
        format!(
            "{} raw={} useful={:.1}",
            self.variant,
            self.raw_bits,
            self.useful_bits.to_f64_lossy()
        )
    }
}

/// Evaluates the channel on the configured grid and runs the allocation.
pub fn run_scenario<T: Scalar>(
    cfg: &SystemConfig<T>,
    channel: &MultipathChannelModel<T>,
) -> Result<ScenarioResult<T>> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let gains = channel.subchannel_gains(&grid);
    run_on_gains(cfg, &gains)
}

/// Runs the allocation on precomputed `|h_n|^2`.
pub fn run_on_gains<T: Scalar>(cfg: &SystemConfig<T>, gains: &[T]) -> Result<ScenarioResult<T>> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if gains.len() != grid.len() {
        return Err(Error::config(
            "gains",
            format!("{} gains for {} subcarriers", gains.len(), grid.len()),
        ));
    }
    let inputs = cfg.loading_inputs()?;
    let allocation = allocate_system(gains, &inputs, cfg.grouping)?;
    let raw_bits = allocation.total_bits();
    let useful = useful_bits(&allocation, cfg);
    let energy_profile = allocation.subcarrier_energy();
    Ok(ScenarioResult {
        config: cfg.clone(),
        variant: Variant::of(cfg.lc, cfg.coding_enabled),
        grid,
        gap_table: inputs.gap_table().clone(),
        allocation,
        raw_bits,
        useful_bits: useful,
        energy_profile,
    })
}

/// All four variants from a single channel evaluation, in [`Variant::ALL`] order.
pub fn compare_variants<T: Scalar>(
    cfg: &SystemConfig<T>,
    channel: &MultipathChannelModel<T>,
) -> Result<Vec<ScenarioResult<T>>> {
    let gains = channel.subchannel_gains(&cfg.grid()?);
    Variant::ALL
        .iter()
        .map(|&v| {
            let mut r = run_on_gains(&cfg.variant(v), &gains)?;
            r.variant = v;
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub profile: LengthProfile,
    pub distance_m: T,
    pub variant: Variant,
    pub raw_bits: u64,
    pub useful_bits: T,
}

/// Thread count from [`THREADS_ENV`]; `0` or unset means automatic.
pub fn sweep_threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::config(THREADS_ENV, format!("`{v}` is not a non-negative integer"))
        }),
        Err(_) => Ok(0),
    }
}

/// Every variant on every `(profile, distance)` pair. Rows come back
/// ordered by profile, then distance, then variant, whatever the thread
/// count.
pub fn length_sweep<T: Scalar>(
    cfg: &SystemConfig<T>,
    profiles: &[LengthProfile],
    distances_m: &[T],
    propagation_speed: T,
) -> Result<Vec<SweepRow<T>>> {
    length_sweep_with_threads(
        cfg,
        profiles,
        distances_m,
        propagation_speed,
        sweep_threads_from_env()?,
    )
}

pub fn length_sweep_with_threads<T: Scalar>(
    cfg: &SystemConfig<T>,
    profiles: &[LengthProfile],
    distances_m: &[T],
    propagation_speed: T,
    threads: usize,
) -> Result<Vec<SweepRow<T>>> {
    if distances_m.is_empty() {
        return Err(Error::config(
            "distances",
            "sweep needs at least one distance",
        ));
    }
    if profiles.is_empty() {
        return Err(Error::config(
            "profiles",
            "sweep needs at least one profile",
        ));
    }
    cfg.validate()?;
    let jobs: Vec<(LengthProfile, T)> = profiles
        .iter()
        .flat_map(|&p| distances_m.iter().map(move |&d| (p, d)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(THREADS_ENV, e.to_string()))?;
    let per_job: Vec<Vec<SweepRow<T>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(profile, distance)| {
                let channel = profile.channel(distance, propagation_speed)?;
                compare_variants(cfg, &channel)?
                    .into_iter()
                    .map(|r| {
                        Ok(SweepRow {
                            profile,
                            distance_m: distance,
                            variant: r.variant,
                            raw_bits: r.raw_bits,
                            useful_bits: r.useful_bits,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Coded DMT against coded LP-DMT on the same channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyComparison<T> {
    pub dmt: ScenarioResult<T>,
    pub lpdmt: ScenarioResult<T>,
}

impl<T: Scalar> EnergyComparison<T> {
    pub fn utilization_dmt(&self) -> T {
        self.dmt.energy_utilization()
    }
    pub fn utilization_lpdmt(&self) -> T {
        self.lpdmt.energy_utilization()
    }
}

pub fn energy_comparison<T: Scalar>(
    cfg: &SystemConfig<T>,
    channel: &MultipathChannelModel<T>,
) -> Result<EnergyComparison<T>> {
    let gains = channel.subchannel_gains(&cfg.grid()?);
    let mut dmt = run_on_gains(&cfg.variant(Variant::CodedDmt), &gains)?;
    dmt.variant = Variant::CodedDmt;
    let mut lpdmt = run_on_gains(&cfg.variant(Variant::CodedLpDmt), &gains)?;
    lpdmt.variant = Variant::CodedLpDmt;
    Ok(EnergyComparison { dmt, lpdmt })
}

/// Writes `subcarrier_index,freq_hz,energy_db_dmt,energy_db_lpdmt` (dBm/Hz).
pub fn write_energy_csv<T: Scalar, W: Write>(mut out: W, cmp: &EnergyComparison<T>) -> Result<()> {
    writeln!(
        out,
        "subcarrier_index,freq_hz,energy_db_dmt,energy_db_lpdmt"
    )?;
    let dmt = cmp.dmt.energy_profile_dbm_hz();
    let lp = cmp.lpdmt.energy_profile_dbm_hz();
    for (n, f) in cmp.dmt.grid.frequencies().enumerate() {
        writeln!(
            out,
            "{n},{},{},{}",
            fmt_float(f),
            fmt_float(dmt[n]),
            fmt_float(lp[n])
        )?;
    }
    Ok(())
}

/// Writes `profile,distance_m,variant,raw_bits,useful_bits`.
pub fn write_throughput_csv<T: Scalar, W: Write>(mut out: W, rows: &[SweepRow<T>]) -> Result<()> {
    writeln!(out, "profile,distance_m,variant,raw_bits,useful_bits")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.profile,
            fmt_float(r.distance_m),
            r.variant,
            r.raw_bits,
            fmt_float(r.useful_bits)
        )?;
    }
    Ok(())
}

/// Writes `variant,raw_bits,useful_bits,n_active_sequences,energy_utilization_fraction`.
pub fn write_summary_csv<T: Scalar, W: Write>(
    mut out: W,
    results: &[ScenarioResult<T>],
) -> Result<()> {
    writeln!(
        out,
        "variant,total_raw_bits,total_useful_bits,n_active_sequences,energy_utilization_fraction"
    )?;
    for r in results {
        let s = r.summary();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.variant,
            s.total_raw_bits,
            fmt_float(s.total_useful_bits),
            s.n_active_sequences,
            fmt_float(s.energy_utilization_fraction)
        )?;
    }
    Ok(())
}
