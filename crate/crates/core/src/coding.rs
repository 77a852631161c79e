//! SNR-gap tables at a fixed target BER, for uncoded QAM and for an outer
//! Reed–Solomon code concatenated with an inner 4D trellis code.
//!
//! The coded gap for order `b` is
//! `gap_0 + margin - (trellis_gain(b) + rs_gain - rate_loss(b))`, all in dB.
//! Error rates follow the constant-factor conventions `P_2D = 2 P_bit` and
//! `P_rs = c P_2D`.

use crate::error::{Error, Result};
use crate::loading::{min_energy_for_rate, LoadingInputs, Subset};
use crate::scalar::{from_db, to_db, Scalar};
use crate::special::q_inverse;

const BISECTION_CAP: usize = 200;

/// Reed–Solomon code dimensions, in symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsCodeParams {
    n: u32,
    k: u32,
    t: u32,
    symbol_bits: u32,
}

impl RsCodeParams {
    pub fn new(n: u32, k: u32, symbol_bits: u32) -> Result<Self> {
        if symbol_bits == 0 || symbol_bits > 16 {
            return Err(Error::config(
                "rs_symbol_bits",
                format!("{symbol_bits} not in 1..=16"),
            ));
        }
        if k == 0 || k > n {
            return Err(Error::config(
                "rs_k",
                format!("need 0 < k <= n, got n={n}, k={k}"),
            ));
        }
        if n > (1u32 << symbol_bits) - 1 {
            return Err(Error::config(
                "rs_n",
                format!("{n} exceeds 2^{symbol_bits} - 1"),
            ));
        }
        if !(n - k).is_multiple_of(2) {
            return Err(Error::config(
                "rs_k",
                format!("n - k = {} must be even", n - k),
            ));
        }
        Ok(RsCodeParams {
            n,
            k,
            t: (n - k) / 2,
            symbol_bits,
        })
    }

    /// The shortened RS(240,224) code over GF(2^8), `t = 8`.
    pub fn rs_240_224() -> Self {
        Self::new(240, 224, 8).expect("valid code")
    }

    /// A code with no parity, `n = k`.
    pub fn uncoded(n: u32) -> Self {
        Self::new(n, n, 8).expect("valid code")
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn t(&self) -> u32 {
        self.t
    }
    pub fn symbol_bits(&self) -> u32 {
        self.symbol_bits
    }

    /// `k / n`.
    pub fn code_rate<T: Scalar>(&self) -> T {
        T::lit(self.k as f64) / T::lit(self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisCodeParams<T> {
    pub fundamental_gain_db: T,
    /// Redundant bits per 2D symbol.
    pub redundancy_bits_per_2d: T,
    pub max_constellation_points: u32,
    /// Measured gain per order (index `b - 1`); replaces the constant gain
    /// where present.
    pub per_order_gain_db: Option<Vec<T>>,
}

impl<T: Scalar> Default for TrellisCodeParams<T> {
    /// Wei's 4D 16-state code: 4.5 dB, 0.5 bit per 2D symbol, 1024 points.
    fn default() -> Self {
        TrellisCodeParams {
            fundamental_gain_db: T::lit(4.5),
            redundancy_bits_per_2d: T::lit(0.5),
            max_constellation_points: 1024,
            per_order_gain_db: None,
        }
    }
}

impl<T: Scalar> TrellisCodeParams<T> {
    /// Largest order supported by the super-constellation.
    pub fn max_order(&self) -> u32 {
        31 - self.max_constellation_points.max(1).leading_zeros()
    }

    fn validate(&self) -> Result<()> {
        if !(self.fundamental_gain_db >= T::zero()) {
            return Err(Error::config("trellis_gain_db", "must be >= 0"));
        }
        if !(self.redundancy_bits_per_2d >= T::zero()) {
            return Err(Error::config("trellis_redundancy", "must be >= 0"));
        }
        if self.max_constellation_points < 2 {
            return Err(Error::config("max_constellation_points", "must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodingConfig<T> {
    pub rs: RsCodeParams,
    pub trellis: TrellisCodeParams<T>,
    /// Average number of precoding sequences feeding each RS symbol.
    pub c_factor: T,
    pub margin_db: T,
    /// Required BER at the output of the whole chain.
    pub target_ber: T,
}

impl<T: Scalar> Default for CodingConfig<T> {
    fn default() -> Self {
        CodingConfig {
            rs: RsCodeParams::rs_240_224(),
            trellis: TrellisCodeParams::default(),
            c_factor: T::lit(2.0),
            margin_db: T::zero(),
            target_ber: T::lit(1e-7),
        }
    }
}

impl<T: Scalar> CodingConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_ber > T::zero() && self.target_ber < T::lit(0.5)) {
            return Err(Error::config(
                "target_ber",
                format!("{} not in (0, 0.5)", self.target_ber),
            ));
        }
        if !(self.c_factor > T::zero() && self.c_factor.is_finite()) {
            return Err(Error::config("c_factor", "must be positive"));
        }
        if !self.margin_db.is_finite() {
            return Err(Error::config("margin_db", "must be finite"));
        }
        self.trellis.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    Uncoded,
    Coded,
}

/// Linear SNR gap per modulation order `1..=b_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable<T> {
    kind: GapKind,
    gaps: Vec<T>,
}

impl<T: Scalar> GapTable<T> {
    /// `gaps[b - 1]` is the gap for order `b`.
    pub fn from_linear(kind: GapKind, gaps: Vec<T>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::config("b_max", "gap table needs at least one order"));
        }
        if let Some(b) = gaps.iter().position(|g| !(*g > T::zero() && g.is_finite())) {
            return Err(Error::config(
                "gap_table",
                format!("gap for order {} is {} (must be positive)", b + 1, gaps[b]),
            ));
        }
        Ok(GapTable { kind, gaps })
    }

    /// The same gap for every order.
    pub fn constant(gap: T, b_max: u32) -> Result<Self> {
        Self::from_linear(GapKind::Uncoded, vec![gap; b_max as usize])
    }

    pub fn kind(&self) -> GapKind {
        self.kind
    }

    pub fn b_max(&self) -> u32 {
        self.gaps.len() as u32
    }

    pub fn gap(&self, bits: u32) -> Result<T> {
        if bits == 0 || bits > self.b_max() {
            return Err(Error::ConstellationCap {
                bits,
                cap: self.b_max(),
            });
        }
        Ok(self.gaps[bits as usize - 1])
    }

    pub fn gap_db(&self, bits: u32) -> Result<T> {
        self.gap(bits).map(to_db)
    }

    /// `(order, linear gap)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u32, T)> + '_ {
        self.gaps
            .iter()
            .enumerate()
            .map(|(i, g)| (i as u32 + 1, *g))
    }
}

/// `(1/3) * Q^-1(P_bit / 2)^2`, the uncoded QAM gap at a target BER.
pub fn uncoded_gap<T: Scalar>(target_ber: T) -> Result<T> {
    if !(target_ber > T::zero() && target_ber < T::lit(0.5)) {
        return Err(Error::Domain {
            op: "uncoded_gap",
            value: target_ber.to_f64_lossy(),
            domain: "(0, 0.5)",
        });
    }
    let x = q_inverse(target_ber / T::lit(2.0))?;
    Ok(x * x / T::lit(3.0))
}

/// Symbol error rate after bounded-distance RS decoding, given the symbol
/// error rate `p_s` at the decoder input:
/// `sum_{i=t+1}^{n} C(n-1, i-1) p^i (1-p)^(n-i)`, summed in the log domain.
pub fn rs_output_ser<T: Scalar>(p_s: T, rs: &RsCodeParams) -> T {
    if p_s <= T::zero() {
        return T::zero();
    }
    if p_s >= T::one() {
        return T::one();
    }
    let n = rs.n;
    let m = n - 1;
    let ln_p = p_s.ln();
    let ln_q = (-p_s).ln_1p();
    // ln C(m, j) built up from j = 0.
    let mut ln_binom = T::zero();
    for j in 1..=rs.t {
        ln_binom = ln_binom + T::lit((m - j + 1) as f64).ln() - T::lit(j as f64).ln();
    }
    let mut sum = T::zero();
    for i in rs.t + 1..=n {
        let j = i - 1;
        if j > rs.t {
            ln_binom = ln_binom + T::lit((m - j + 1) as f64).ln() - T::lit(j as f64).ln();
        }
        let ln_term = ln_binom + T::lit(i as f64) * ln_p + T::lit((n - i) as f64) * ln_q;
        sum = sum + ln_term.exp();
    }
    sum.min(T::one())
}

/// Inverts [`rs_output_ser`] by bisection on `ln p_s`.
///
/// The output rate never exceeds the input rate, so the root lies in
/// `[target, 1)`.
pub fn solve_input_ser<T: Scalar>(target: T, rs: &RsCodeParams) -> Result<T> {
    if !(target > T::zero() && target < T::one()) {
        return Err(Error::Domain {
            op: "solve_input_ser",
            value: target.to_f64_lossy(),
            domain: "(0, 1)",
        });
    }
    if rs.t == 0 {
        // With no correction the decoder output equals its input.
        return Ok(target);
    }
    let width_tol = T::lit(1e-12).max(T::lit(16.0) * T::epsilon());
    let mut lo = target;
    let mut hi = T::one();
    for _ in 0..BISECTION_CAP {
        let mid = (lo * hi).sqrt();
        if rs_output_ser(mid, rs) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - T::one() <= width_tol {
            return Ok((lo * hi).sqrt());
        }
    }
    Err(Error::NoConvergence {
        op: "solve_input_ser",
        iterations: BISECTION_CAP,
    })
}

/// Operating point of the RS stage at the configured target BER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsOperatingPoint<T> {
    /// Required RS symbol error rate at the decoder output, `2 c P_bit`.
    pub output_ser: T,
    /// Tolerable symbol error rate at the decoder input.
    pub input_ser: T,
    /// Tolerable BER at the demodulator output, `input_ser / 2c`.
    pub input_ber: T,
    pub gain_db: T,
}

pub fn rs_operating_point<T: Scalar>(cfg: &CodingConfig<T>) -> Result<RsOperatingPoint<T>> {
    cfg.validate()?;
    let two_c = T::lit(2.0) * cfg.c_factor;
    let output_ser = two_c * cfg.target_ber;
    if !(output_ser < T::one()) {
        return Err(Error::Domain {
            op: "rs_gain_db",
            value: output_ser.to_f64_lossy(),
            domain: "2 c P_bit < 1",
        });
    }
    let input_ser = solve_input_ser(output_ser, &cfg.rs)?;
    let input_ber = input_ser / two_c;
    let gap_uncoded = uncoded_gap(cfg.target_ber)?;
    let gap_rs = uncoded_gap(input_ber)?;
    Ok(RsOperatingPoint {
        output_ser,
        input_ser,
        input_ber,
        gain_db: to_db(gap_uncoded) - to_db(gap_rs),
    })
}

/// Gap reduction bought by the RS code, dB.
pub fn rs_gain_db<T: Scalar>(cfg: &CodingConfig<T>) -> Result<T> {
    rs_operating_point(cfg).map(|op| op.gain_db)
}

/// Trellis coding gain at order `bits`: the per-order override when one is
/// configured, otherwise the fundamental gain.
pub fn trellis_gain_db<T: Scalar>(trellis: &TrellisCodeParams<T>, bits: u32) -> T {
    trellis
        .per_order_gain_db
        .as_ref()
        .and_then(|table| table.get(bits.checked_sub(1)? as usize).copied())
        .unwrap_or(trellis.fundamental_gain_db)
}

/// Where the minimum-energy function `P*_tot` is evaluated for the rate loss.
#[derive(Debug, Clone)]
pub enum LossReference<'a, T> {
    /// Single flat carrier with continuous rate: `P*(r) ∝ 2^r - 1`.
    Flat,
    /// Integer-rate minimum energy on an actual subset; rates are
    /// `L_c * b` and `ceil(L_c * b * n / k)` bits.
    Subset {
        subset: &'a Subset<T>,
        inputs: &'a LoadingInputs<T>,
    },
}

/// Extra energy, in dB, needed to carry the RS-expanded rate `n b / k`
/// instead of `b`.
pub fn rate_loss_db<T: Scalar>(
    bits: T,
    rs: &RsCodeParams,
    reference: &LossReference<'_, T>,
) -> Result<T> {
    if !(bits > T::zero() && bits.is_finite()) {
        return Err(Error::Domain {
            op: "rate_loss_db",
            value: bits.to_f64_lossy(),
            domain: "b > 0",
        });
    }
    if rs.n == rs.k {
        return Ok(T::zero());
    }
    let expansion = T::lit(rs.n as f64) / T::lit(rs.k as f64);
    match reference {
        LossReference::Flat => {
            let two = T::lit(2.0);
            let expanded = two.powf(bits * expansion) - T::one();
            let plain = two.powf(bits) - T::one();
            Ok(to_db(expanded / plain))
        }
        LossReference::Subset { subset, inputs } => {
            let lc = T::from_usize(inputs.lc());
            let plain_bits = (bits * lc).round().to_f64_lossy() as u64;
            let coded_bits = (bits * lc * expansion).ceil().to_f64_lossy() as u64;
            let (_, plain) = min_energy_for_rate(subset, inputs, plain_bits)?;
            let (_, expanded) = min_energy_for_rate(subset, inputs, coded_bits)?;
            Ok(to_db(expanded / plain))
        }
    }
}

/// Net coding gain `gamma_tc + gamma_rs - gamma_loss` at order `bits`, dB.
pub fn coding_gain_db<T: Scalar>(
    cfg: &CodingConfig<T>,
    bits: u32,
    rs_gain: T,
    reference: &LossReference<'_, T>,
) -> Result<T> {
    let loss = rate_loss_db(T::lit(bits as f64), &cfg.rs, reference)?;
    Ok(trellis_gain_db(&cfg.trellis, bits) + rs_gain - loss)
}

/// Gap table for orders `1..=b_max`, with the rate loss evaluated on the
/// flat reference.
pub fn build_gap_table<T: Scalar>(
    cfg: &CodingConfig<T>,
    coded: bool,
    b_max: u32,
) -> Result<GapTable<T>> {
    build_gap_table_with_loss(cfg, coded, b_max, &LossReference::Flat)
}

pub fn build_gap_table_with_loss<T: Scalar>(
    cfg: &CodingConfig<T>,
    coded: bool,
    b_max: u32,
    reference: &LossReference<'_, T>,
) -> Result<GapTable<T>> {
    cfg.validate()?;
    if b_max == 0 {
        return Err(Error::config("b_max", "must be at least 1"));
    }
    let base_db = to_db(uncoded_gap(cfg.target_ber)?) + cfg.margin_db;
    if !coded {
        let gap = from_db(base_db);
        return GapTable::from_linear(GapKind::Uncoded, vec![gap; b_max as usize]);
    }
    let rs_gain = rs_gain_db(cfg)?;
    let gaps = (1..=b_max)
        .map(|b| {
            Ok(from_db(
                base_db - coding_gain_db(cfg, b, rs_gain, reference)?,
            ))
        })
        .collect::<Result<Vec<T>>>()?;
    GapTable::from_linear(GapKind::Coded, gaps)
}
