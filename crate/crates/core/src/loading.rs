//! Bit and energy loading for linear-precoded DMT.
//!
//! The `N` subcarriers are grouped into subsets of `L_c` carriers. Each
//! subset carries `L_c` orthogonal precoding sequences which all see the
//! same effective gain `L_c^2 / sum(1/|h_n|^2)`, so one subset is loaded
//! independently of every other one. `L_c = 1` is plain DMT.
//!
//! Per subset the allocation runs the gap-table driven loop: seed a bit
//! vector from the continuous rate, price it with the per-order gaps, then
//! add bits round-robin while the energy fits the PSD budget and remove
//! them in reverse once it does not.

use std::io::Write;

use rayon::prelude::*;

use crate::coding::GapTable;
use crate::error::{Error, Result};
use crate::scalar::{pow2_minus_one, to_db, Scalar};
use crate::table::fmt_float;

/// Relative slack on the energy budget comparison.
pub const BUDGET_REL_TOL: f64 = 1e-12;

/// A group of `L_c` subcarriers spread by one set of precoding sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset<T> {
    index: usize,
    members: Vec<usize>,
    harmonic_gain_sum: T,
}

impl<T: Scalar> Subset<T> {
    /// `members` index into `gains`. A zero gain makes the harmonic sum
    /// infinite, which simply leaves the subset unloaded.
    pub fn new(index: usize, members: Vec<usize>, gains: &[T]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::config("subset", "needs at least one subcarrier"));
        }
        let mut sorted = members.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("subset", "duplicate subcarrier index"));
        }
        let mut harmonic_gain_sum = T::zero();
        for &n in &members {
            let g = *gains.get(n).ok_or_else(|| {
                Error::config("subset", format!("subcarrier {n} outside the grid"))
            })?;
            if !(g >= T::zero()) || g.is_infinite() {
                return Err(Error::config(
                    "gains",
                    format!("subcarrier {n} has gain {g}; gains must be finite and >= 0"),
                ));
            }
            harmonic_gain_sum = harmonic_gain_sum + g.recip();
        }
        Ok(Subset {
            index,
            members,
            harmonic_gain_sum,
        })
    }

    /// Subset over all of `gains`, in order.
    pub fn from_gains(index: usize, gains: &[T]) -> Result<Self> {
        Self::new(index, (0..gains.len()).collect(), gains)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `sum_{n in S_k} 1 / |h_n|^2`.
    pub fn harmonic_gain_sum(&self) -> T {
        self.harmonic_gain_sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingInputs<T> {
    gap_table: GapTable<T>,
    lc: usize,
    es: T,
    n0: T,
    b_max: u32,
}

impl<T: Scalar> LoadingInputs<T> {
    pub fn new(gap_table: GapTable<T>, lc: usize, es: T, n0: T, b_max: u32) -> Result<Self> {
        if lc == 0 {
            return Err(Error::config("lc", "must be at least 1"));
        }
        if !(es >= T::zero() && es.is_finite()) {
            return Err(Error::config("es", format!("{es} must be finite and >= 0")));
        }
        if !(n0 > T::zero() && n0.is_finite()) {
            return Err(Error::config("n0", format!("{n0} must be positive")));
        }
        if b_max == 0 || b_max > gap_table.b_max() {
            return Err(Error::config(
                "b_max",
                format!("{b_max} must be in 1..={}", gap_table.b_max()),
            ));
        }
        Ok(LoadingInputs {
            gap_table,
            lc,
            es,
            n0,
            b_max,
        })
    }

    pub fn gap_table(&self) -> &GapTable<T> {
        &self.gap_table
    }
    pub fn lc(&self) -> usize {
        self.lc
    }
    pub fn es(&self) -> T {
        self.es
    }
    pub fn n0(&self) -> T {
        self.n0
    }
    pub fn b_max(&self) -> u32 {
        self.b_max
    }

    /// `E_s` plus the comparison slack.
    pub fn budget(&self) -> T {
        self.es * (T::one() + T::lit(BUDGET_REL_TOL))
    }

    /// Energy of one sequence at each order `0..=b_max` on `subset`.
    fn energy_ladder(&self, subset: &Subset<T>) -> Vec<T> {
        let scale = self.n0 * subset.harmonic_gain_sum / T::from_usize(self.lc * self.lc);
        std::iter::once(T::zero())
            .chain((1..=self.b_max).map(|b| {
                let gap = self
                    .gap_table
                    .gap(b)
                    .expect("b_max checked against the table");
                pow2_minus_one::<T>(b) * gap * scale
            }))
            .collect()
    }
}

/// Bits and energies of the `L_c` sequences of one subset, bits sorted
/// non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetAllocation<T> {
    pub subset_index: usize,
    pub bits: Vec<u32>,
    pub energies: Vec<T>,
}

impl<T: Scalar> SubsetAllocation<T> {
    pub fn total_bits(&self) -> u64 {
        practical_rate(&self.bits)
    }

    pub fn total_energy(&self) -> T {
        self.energies.iter().copied().sum()
    }

    /// Number of sequences carrying at least one bit.
    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b > 0).count()
    }
}

/// Continuous rate of a subset for a single gap `gap`:
/// `L_c log2(1 + (1/gap) (L_c / sum 1/|h|^2) (E_s / N_0))`.
pub fn continuous_rate<T: Scalar>(subset: &Subset<T>, inputs: &LoadingInputs<T>, gap: T) -> T {
    let lc = T::from_usize(inputs.lc);
    let snr = lc / subset.harmonic_gain_sum * inputs.es / inputs.n0 / gap;
    lc * snr.ln_1p() / T::LN_2()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSplit {
    /// `n_c` entries of `floor(R/L_c) + 1` followed by `floor(R/L_c)`.
    pub bits: Vec<u32>,
    pub n_c: usize,
}

fn split_parts<T: Scalar>(rate: T, lc: usize) -> (u32, usize) {
    if !(rate > T::zero()) {
        return (0, 0);
    }
    let lc_t = T::from_usize(lc);
    let per = rate / lc_t;
    let base = per.floor();
    let n_c = (lc_t * (T::lit(2.0).powf(per - base) - T::one())).floor();
    let base = base.to_f64_lossy().min(u32::MAX as f64 - 1.0) as u32;
    let n_c = (n_c.to_f64_lossy().max(0.0) as usize).min(lc);
    (base, n_c)
}

/// Splits a continuous subset rate into integer loads for `lc` sequences.
pub fn discrete_bit_split<T: Scalar>(rate: T, lc: usize) -> BitSplit {
    let (base, n_c) = split_parts(rate, lc);
    let bits = (0..lc)
        .map(|i| if i < n_c { base + 1 } else { base })
        .collect();
    BitSplit { bits, n_c }
}

/// Closed form of the practically achievable rate of [`discrete_bit_split`]:
/// `n_c (floor(R/L_c) + 1) + (L_c - n_c) floor(R/L_c)`.
pub fn practical_rate_closed_form<T: Scalar>(rate: T, lc: usize) -> u64 {
    let (base, n_c) = split_parts(rate, lc);
    n_c as u64 * (base as u64 + 1) + (lc - n_c) as u64 * base as u64
}

pub fn practical_rate(bits: &[u32]) -> u64 {
    bits.iter().map(|&b| b as u64).sum()
}

/// `e_i = (2^b_i - 1) (gap_{b_i} / L_c^2) N_0 sum 1/|h|^2`, zero for `b_i = 0`.
pub fn energy_for_bits<T: Scalar>(
    bits: &[u32],
    subset: &Subset<T>,
    inputs: &LoadingInputs<T>,
) -> Result<Vec<T>> {
    let scale = inputs.n0 * subset.harmonic_gain_sum / T::from_usize(inputs.lc * inputs.lc);
    bits.iter()
        .map(|&b| {
            if b == 0 {
                return Ok(T::zero());
            }
            if b > inputs.b_max {
                return Err(Error::ConstellationCap {
                    bits: b,
                    cap: inputs.b_max,
                });
            }
            Ok(pow2_minus_one::<T>(b) * inputs.gap_table.gap(b)? * scale)
        })
        .collect()
}

/// Loads one subset starting from `gap = 1`.
pub fn allocate_subset<T: Scalar>(
    subset: &Subset<T>,
    inputs: &LoadingInputs<T>,
) -> SubsetAllocation<T> {
    allocate_subset_seeded(subset, inputs, T::one())
}

/// Loads one subset, seeding the bit vector with the continuous rate at
/// `initial_gap`. The seed only changes how many add/remove steps run; the
/// sorted result is the same for every positive seed.
pub fn allocate_subset_seeded<T: Scalar>(
    subset: &Subset<T>,
    inputs: &LoadingInputs<T>,
    initial_gap: T,
) -> SubsetAllocation<T> {
    let lc = inputs.lc;
    assert_eq!(
        subset.len(),
        lc,
        "subset {} has {} carriers, loading expects L_c = {lc}",
        subset.index,
        subset.len()
    );
    let ladder = inputs.energy_ladder(subset);
    let budget = inputs.budget();
    let b_max = inputs.b_max;
    let cost = |bits: &[u32]| -> T { bits.iter().map(|&b| ladder[b as usize]).sum() };

    let seed = discrete_bit_split(continuous_rate(subset, inputs, initial_gap), lc);
    let mut bits: Vec<u32> = seed.bits.iter().map(|&b| b.min(b_max)).collect();

    // Round-robin pointer at sequence n_c + count (cyclic). Everything
    // before it in cyclic order holds one bit more than everything from it
    // onwards, so the pointed-to sequence is always the cheapest to grow.
    let mut ptr = seed.n_c % lc;
    let mut total = cost(&bits);
    while total <= budget {
        if bits[ptr] >= b_max {
            break;
        }
        bits[ptr] += 1;
        ptr = (ptr + 1) % lc;
        total = cost(&bits);
    }
    while total > budget {
        ptr = (ptr + lc - 1) % lc;
        if bits[ptr] == 0 {
            break;
        }
        bits[ptr] -= 1;
        total = cost(&bits);
    }

    bits.sort_unstable_by(|a, b| b.cmp(a));
    let energies = bits.iter().map(|&b| ladder[b as usize]).collect();
    SubsetAllocation {
        subset_index: subset.index,
        bits,
        energies,
    }
}

/// Minimum total energy to carry exactly `target_bits` on the subset, with
/// no PSD cap. Exact for arbitrary per-order gap tables (dynamic program
/// over sequences).
pub fn min_energy_for_rate<T: Scalar>(
    subset: &Subset<T>,
    inputs: &LoadingInputs<T>,
    target_bits: u64,
) -> Result<(SubsetAllocation<T>, T)> {
    let lc = inputs.lc;
    let b_max = inputs.b_max as usize;
    let max_bits = (lc * b_max) as u64;
    if target_bits > max_bits {
        return Err(Error::Infeasible {
            op: "min_energy_for_rate",
            requested: target_bits,
            max: max_bits,
        });
    }
    let target = target_bits as usize;
    let ladder = inputs.energy_ladder(subset);
    // best[s]: minimum energy placing s bits on the sequences seen so far.
    let mut best = vec![T::infinity(); target + 1];
    best[0] = T::zero();
    let mut choice = vec![vec![0u32; target + 1]; lc];
    for row in choice.iter_mut() {
        let mut next = vec![T::infinity(); target + 1];
        for (s, slot) in next.iter_mut().enumerate() {
            for b in 0..=b_max.min(s) {
                let prev = best[s - b];
                if prev.is_infinite() {
                    continue;
                }
                let e = prev + ladder[b];
                if e < *slot {
                    *slot = e;
                    row[s] = b as u32;
                }
            }
        }
        best = next;
    }
    let mut bits = Vec::with_capacity(lc);
    let mut s = target;
    for row in choice.iter().rev() {
        let b = row[s];
        bits.push(b);
        s -= b as usize;
    }
    bits.sort_unstable_by(|a, b| b.cmp(a));
    let energies: Vec<T> = bits.iter().map(|&b| ladder[b as usize]).collect();
    let total = energies.iter().copied().sum();
    Ok((
        SubsetAllocation {
            subset_index: subset.index,
            bits,
            energies,
        },
        total,
    ))
}

/// How subcarriers are grouped into subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupingPolicy {
    /// Consecutive blocks of `L_c` carriers in frequency order.
    #[default]
    Adjacent,
    /// Carriers ranked by gain, strongest first, then cut into blocks.
    SortedByGain,
}

impl GroupingPolicy {
    pub fn name(self) -> &'static str {
        match self {
            GroupingPolicy::Adjacent => "adjacent",
            GroupingPolicy::SortedByGain => "sorted-gain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adjacent" => Ok(GroupingPolicy::Adjacent),
            "sorted-gain" | "sorted" | "sorted_gain" => Ok(GroupingPolicy::SortedByGain),
            other => Err(Error::config(
                "grouping",
                format!("unknown policy `{other}` (adjacent | sorted-gain)"),
            )),
        }
    }

    /// Splits `0..gains.len()` into `floor(N / lc)` groups plus leftovers.
    pub fn group<T: Scalar>(self, gains: &[T], lc: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut order: Vec<usize> = (0..gains.len()).collect();
        if self == GroupingPolicy::SortedByGain {
            order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap().then(a.cmp(&b)));
        }
        let used = (gains.len() / lc) * lc;
        let groups = order[..used].chunks(lc).map(<[usize]>::to_vec).collect();
        let mut leftover = order[used..].to_vec();
        leftover.sort_unstable();
        (groups, leftover)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemAllocation<T> {
    pub subsets: Vec<Subset<T>>,
    /// Ordered by subset index.
    pub allocations: Vec<SubsetAllocation<T>>,
    /// Subcarriers left out when `L_c` does not divide `N`.
    pub leftover: Vec<usize>,
    pub n_subcarriers: usize,
}

impl<T: Scalar> SystemAllocation<T> {
    pub fn total_bits(&self) -> u64 {
        self.allocations
            .iter()
            .map(SubsetAllocation::total_bits)
            .sum()
    }

    pub fn active_sequences(&self) -> usize {
        self.allocations
            .iter()
            .map(SubsetAllocation::active_count)
            .sum()
    }

    /// Transmit energy on every subcarrier: each member of a subset carries
    /// the subset's total sequence energy.
    pub fn subcarrier_energy(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_subcarriers];
        for (subset, alloc) in self.subsets.iter().zip(&self.allocations) {
            let e = alloc.total_energy();
            for &n in subset.members() {
                out[n] = e;
            }
        }
        out
    }
}

/// Partitions the carriers and loads every subset independently.
pub fn allocate_system<T: Scalar>(
    gains: &[T],
    inputs: &LoadingInputs<T>,
    policy: GroupingPolicy,
) -> Result<SystemAllocation<T>> {
    let lc = inputs.lc;
    if gains.len() < lc {
        return Err(Error::config(
            "lc",
            format!(
                "L_c = {lc} exceeds the {} available subcarriers",
                gains.len()
            ),
        ));
    }
    let (groups, leftover) = policy.group(gains, lc);
    let subsets = groups
        .into_iter()
        .enumerate()
        .map(|(k, members)| Subset::new(k, members, gains))
        .collect::<Result<Vec<_>>>()?;
    let allocations = subsets
        .par_iter()
        .map(|s| allocate_subset(s, inputs))
        .collect();
    Ok(SystemAllocation {
        subsets,
        allocations,
        leftover,
        n_subcarriers: gains.len(),
    })
}

/// Writes `subset_index,sequence_index,bits,energy_linear,energy_db,gap_db_used`.
/// Unloaded sequences leave `gap_db_used` empty.
pub fn write_allocation_csv<T: Scalar, W: Write>(
    mut out: W,
    system: &SystemAllocation<T>,
    gap_table: &GapTable<T>,
) -> Result<()> {
    writeln!(
        out,
        "subset_index,sequence_index,bits,energy_linear,energy_db,gap_db_used"
    )?;
    for alloc in &system.allocations {
        for (i, (&b, &e)) in alloc.bits.iter().zip(&alloc.energies).enumerate() {
            let gap = if b == 0 {
                String::new()
            } else {
                fmt_float(gap_table.gap_db(b)?)
            };
            writeln!(
                out,
                "{},{i},{b},{},{},{gap}",
                alloc.subset_index,
                fmt_float(e),
                fmt_float(to_db(e))
            )?;
        }
    }
    Ok(())
}
