//! Multipath power-line channel and per-subcarrier power gains.
//!
//! The frequency response is the echo model
//!
//! ```text
//! H(f) = sum_i g_i * exp(-(a0 + a1 * f^kappa) * d_i) * exp(-j 2 pi f tau_i)
//! ```
//!
//! with path delays derived as `tau_i = d_i / v_p` unless given explicitly.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::params::{self, ParamDoc};
use crate::scalar::{to_db, Scalar};
use crate::table::fmt_float;

/// Default signal propagation speed on the cable, m/s (relative permittivity ~4).
pub const DEFAULT_PROPAGATION_SPEED: f64 = 1.5e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams<T> {
    /// Weighting factor, signed.
    pub gain: T,
    pub length_m: T,
    pub delay_s: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationParams<T> {
    /// Frequency exponent of the cable loss, in `(0, 2]`.
    pub exponent: T,
    /// Frequency-independent loss, 1/m.
    pub a0: T,
    /// Frequency-dependent loss coefficient, such that `a1 * f^kappa` is in 1/m.
    pub a1: T,
}

impl<T: Scalar> AttenuationParams<T> {
    pub fn new(exponent: T, a0: T, a1: T) -> Result<Self> {
        if !(exponent > T::zero() && exponent <= T::lit(2.0)) {
            return Err(Error::config("kappa", format!("{exponent} not in (0, 2]")));
        }
        if !(a0 >= T::zero()) {
            return Err(Error::config("a0", format!("{a0} must be >= 0")));
        }
        if !(a1 >= T::zero()) {
            return Err(Error::config("a1", format!("{a1} must be >= 0")));
        }
        Ok(AttenuationParams { exponent, a0, a1 })
    }

    /// Attenuation per metre at frequency `f`.
    #[inline]
    pub fn per_metre(&self, f: T) -> T {
        self.a0 + self.a1 * f.abs().powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannelModel<T> {
    paths: Vec<PathParams<T>>,
    attenuation: AttenuationParams<T>,
    propagation_speed: T,
}

impl<T: Scalar> MultipathChannelModel<T> {
    /// Builds a model from `(gain, length_m)` pairs, deriving every delay
    /// from the propagation speed.
    pub fn new(
        paths: &[(T, T)],
        attenuation: AttenuationParams<T>,
        propagation_speed: T,
    ) -> Result<Self> {
        if !(propagation_speed > T::zero() && propagation_speed.is_finite()) {
            return Err(Error::config(
                "propagation_speed",
                format!("{propagation_speed} must be positive and finite"),
            ));
        }
        let paths = paths
            .iter()
            .map(|&(gain, length_m)| PathParams {
                gain,
                length_m,
                delay_s: length_m / propagation_speed,
            })
            .collect();
        Self::with_paths(paths, attenuation, propagation_speed)
    }

    /// Builds a model from fully specified paths (explicit delays).
    pub fn with_paths(
        paths: Vec<PathParams<T>>,
        attenuation: AttenuationParams<T>,
        propagation_speed: T,
    ) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::config("path", "channel needs at least one path"));
        }
        for (i, p) in paths.iter().enumerate() {
            if !p.gain.is_finite() {
                return Err(Error::config(format!("path[{i}].g"), "must be finite"));
            }
            if !(p.length_m > T::zero() && p.length_m.is_finite()) {
                return Err(Error::config(
                    format!("path[{i}].d"),
                    format!("{} must be positive", p.length_m),
                ));
            }
            if !(p.delay_s >= T::zero() && p.delay_s.is_finite()) {
                return Err(Error::config(
                    format!("path[{i}].tau"),
                    format!("{} must be non-negative", p.delay_s),
                ));
            }
        }
        Ok(MultipathChannelModel {
            paths,
            attenuation,
            propagation_speed,
        })
    }

    pub fn paths(&self) -> &[PathParams<T>] {
        &self.paths
    }

    pub fn attenuation(&self) -> &AttenuationParams<T> {
        &self.attenuation
    }

    pub fn propagation_speed(&self) -> T {
        self.propagation_speed
    }

    /// `sum |g_i|`, an upper bound on `|H(f)|`.
    pub fn gain_bound(&self) -> T {
        self.paths.iter().map(|p| p.gain.abs()).sum()
    }

    /// Complex response at `f` Hz. Negative frequencies give the conjugate
    /// of the positive-frequency response.
    pub fn frequency_response(&self, f: T) -> Complex<T> {
        let loss = self.attenuation.per_metre(f);
        let two_pi_f = T::lit(2.0) * T::PI() * f;
        self.paths
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, p| {
                let amplitude = p.gain * (-loss * p.length_m).exp();
                acc + Complex::from_polar(amplitude, -two_pi_f * p.delay_s)
            })
    }

    /// `|h_n|^2` at every subcarrier of the grid.
    pub fn subchannel_gains(&self, grid: &FrequencyGrid<T>) -> Vec<T> {
        grid.frequencies()
            .map(|f| self.frequency_response(f).norm_sqr())
            .collect()
    }

    /// The 15-path, 110 m reference link (Zimmermann reference model).
    pub fn reference_15_path() -> Self {
        Self::reference_15_path_with_speed(T::lit(DEFAULT_PROPAGATION_SPEED))
            .expect("built-in parameters are valid")
    }

    pub fn reference_15_path_with_speed(propagation_speed: T) -> Result<Self> {
        let paths: Vec<(T, T)> = REFERENCE_15_PATH
            .iter()
            .map(|&(g, d)| (T::lit(g), T::lit(d)))
            .collect();
        let attenuation = AttenuationParams::new(T::one(), T::zero(), T::lit(2.5e-9))?;
        Self::new(&paths, attenuation, propagation_speed)
    }

    /// Parses the channel parameter format: `[attenuation]` with `kappa`,
    /// `a0`, `a1`, then one `[path]` block per path with `g`, `d` and an
    /// optional explicit delay `tau`. An optional top-level
    /// `propagation_speed` overrides the default.
    pub fn from_param_text(text: &str) -> Result<Self> {
        let doc = ParamDoc::parse(text)?;
        let mut speed = DEFAULT_PROPAGATION_SPEED;
        let mut attenuation = None;
        let mut paths = Vec::new();
        for section in &doc.sections {
            match section.name.as_str() {
                "" => {
                    for e in &section.entries {
                        match e.key.as_str() {
                            "propagation_speed" | "v_p" => speed = params::number(e, &e.key)?,
                            _ => return Err(unknown_key(e)),
                        }
                    }
                }
                "attenuation" => {
                    let (mut kappa, mut a0, mut a1) = (None, None, None);
                    for e in &section.entries {
                        let v = params::number(e, &e.key)?;
                        match e.key.as_str() {
                            "kappa" | "k" => kappa = Some(v),
                            "a0" => a0 = Some(v),
                            "a1" => a1 = Some(v),
                            _ => return Err(unknown_key(e)),
                        }
                    }
                    let need = |v: Option<f64>, name: &str| {
                        v.ok_or_else(|| Error::config(format!("attenuation.{name}"), "missing"))
                    };
                    attenuation = Some(AttenuationParams::new(
                        T::lit(need(kappa, "kappa")?),
                        T::lit(need(a0, "a0")?),
                        T::lit(need(a1, "a1")?),
                    )?);
                }
                "path" => {
                    let (mut g, mut d, mut tau) = (None, None, None);
                    for e in &section.entries {
                        let v = params::number(e, &e.key)?;
                        match e.key.as_str() {
                            "g" | "gain" => g = Some(v),
                            "d" | "length" => d = Some(v),
                            "tau" | "delay" => tau = Some(v),
                            _ => return Err(unknown_key(e)),
                        }
                    }
                    let at = section.line;
                    let g =
                        g.ok_or_else(|| Error::config(format!("path (line {at}).g"), "missing"))?;
                    let d =
                        d.ok_or_else(|| Error::config(format!("path (line {at}).d"), "missing"))?;
                    paths.push((g, d, tau));
                }
                other => {
                    return Err(Error::Parse {
                        line: section.line,
                        reason: format!("unknown section `[{other}]`"),
                    })
                }
            }
        }
        let attenuation =
            attenuation.ok_or_else(|| Error::config("attenuation", "section missing"))?;
        let speed = T::lit(speed);
        if !(speed > T::zero()) {
            return Err(Error::config("propagation_speed", "must be positive"));
        }
        let paths = paths
            .into_iter()
            .map(|(g, d, tau)| PathParams {
                gain: T::lit(g),
                length_m: T::lit(d),
                delay_s: tau.map(T::lit).unwrap_or(T::lit(d) / speed),
            })
            .collect();
        Self::with_paths(paths, attenuation, speed)
    }
}

fn unknown_key(e: &params::Entry) -> Error {
    Error::Parse {
        line: e.line,
        reason: format!("unknown key `{}`", e.key),
    }
}

/// `(g_i, d_i)` of the 15-path reference link.
pub const REFERENCE_15_PATH: [(f64, f64); 15] = [
    (0.029, 90.0),
    (0.043, 102.0),
    (0.103, 113.0),
    (-0.058, 143.0),
    (-0.045, 148.0),
    (-0.040, 200.0),
    (0.038, 260.0),
    (-0.038, 322.0),
    (0.071, 411.0),
    (-0.035, 490.0),
    (0.065, 567.0),
    (-0.055, 740.0),
    (0.042, 960.0),
    (-0.059, 1130.0),
    (0.049, 1250.0),
];

/// Uniformly spaced subcarrier centres `f_n = start + n * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid<T> {
    n_subcarriers: usize,
    start_hz: T,
    spacing_hz: T,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn new(n_subcarriers: usize, start_hz: T, spacing_hz: T) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::config("n_subcarriers", "must be at least 1"));
        }
        if !(spacing_hz > T::zero() && spacing_hz.is_finite()) {
            return Err(Error::config(
                "spacing",
                format!("{spacing_hz} must be positive"),
            ));
        }
        if !(start_hz >= T::zero() && start_hz.is_finite()) {
            return Err(Error::config(
                "band_start",
                format!("{start_hz} must be >= 0"),
            ));
        }
        Ok(FrequencyGrid {
            n_subcarriers,
            start_hz,
            spacing_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.n_subcarriers
    }

    pub fn is_empty(&self) -> bool {
        self.n_subcarriers == 0
    }

    pub fn start_hz(&self) -> T {
        self.start_hz
    }

    pub fn spacing_hz(&self) -> T {
        self.spacing_hz
    }

    #[inline]
    pub fn frequency(&self, n: usize) -> T {
        self.start_hz + T::from_usize(n) * self.spacing_hz
    }

    pub fn last_frequency(&self) -> T {
        self.frequency(self.n_subcarriers - 1)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n_subcarriers).map(move |n| self.frequency(n))
    }
}

/// Cable classes of the attenuation-only length profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LengthProfile {
    M100,
    M150,
    M200,
    M300,
    M380,
}

impl LengthProfile {
    pub const ALL: [LengthProfile; 5] = [
        LengthProfile::M100,
        LengthProfile::M150,
        LengthProfile::M200,
        LengthProfile::M300,
        LengthProfile::M380,
    ];

    /// `(kappa, a0 [1/m], a1)` for the class.
    pub fn coefficients(self) -> (f64, f64, f64) {
        match self {
            LengthProfile::M100 => (0.7, 9.40e-3, 4.20e-7),
            LengthProfile::M150 => (0.7, 1.09e-2, 3.36e-7),
            LengthProfile::M200 => (0.7, 9.33e-3, 3.24e-7),
            LengthProfile::M300 => (1.0, 8.40e-3, 3.00e-9),
            LengthProfile::M380 => (1.0, 6.20e-3, 4.00e-9),
        }
    }

    pub fn attenuation<T: Scalar>(self) -> AttenuationParams<T> {
        let (kappa, a0, a1) = self.coefficients();
        AttenuationParams {
            exponent: T::lit(kappa),
            a0: T::lit(a0),
            a1: T::lit(a1),
        }
    }

    pub fn nominal_length_m(self) -> f64 {
        match self {
            LengthProfile::M100 => 100.0,
            LengthProfile::M150 => 150.0,
            LengthProfile::M200 => 200.0,
            LengthProfile::M300 => 300.0,
            LengthProfile::M380 => 380.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LengthProfile::M100 => "100m",
            LengthProfile::M150 => "150m",
            LengthProfile::M200 => "200m",
            LengthProfile::M300 => "300m",
            LengthProfile::M380 => "380m",
        }
    }

    /// Single unit-gain path of length `distance_m` with this class's loss.
    pub fn channel<T: Scalar>(
        self,
        distance_m: T,
        propagation_speed: T,
    ) -> Result<MultipathChannelModel<T>> {
        MultipathChannelModel::new(
            &[(T::one(), distance_m)],
            self.attenuation(),
            propagation_speed,
        )
    }
}

impl fmt::Display for LengthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LengthProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let key = key.to_ascii_lowercase();
        LengthProfile::ALL
            .into_iter()
            .find(|p| p.name() == key || p.name().trim_end_matches('m') == key)
            .ok_or_else(|| {
                Error::config(
                    "profile",
                    format!(
                        "unknown length profile `{s}` (expected 100m, 150m, 200m, 300m or 380m)"
                    ),
                )
            })
    }
}

/// Length-profile channel by class name at the default propagation speed.
pub fn length_profile_channel<T: Scalar>(
    class_name: &str,
    distance_m: T,
) -> Result<MultipathChannelModel<T>> {
    let profile: LengthProfile = class_name.parse()?;
    profile.channel(distance_m, T::lit(DEFAULT_PROPAGATION_SPEED))
}

/// Writes `subcarrier_index,freq_hz,gain_db`.
pub fn write_gain_csv<T: Scalar, W: Write>(
    mut out: W,
    grid: &FrequencyGrid<T>,
    gains: &[T],
) -> Result<()> {
    writeln!(out, "subcarrier_index,freq_hz,gain_db")?;
    for (n, (f, g)) in grid.frequencies().zip(gains).enumerate() {
        writeln!(out, "{n},{},{}", fmt_float(f), fmt_float(to_db(*g)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_grid() -> FrequencyGrid<f64> {
        FrequencyGrid::new(1024, 500e3, 19.043e3).unwrap()
    }

    #[test]
    fn dc_response_is_sum_of_gains() {
        let model = MultipathChannelModel::<f64>::reference_15_path();
        let h = model.frequency_response(0.0);
        let sum: f64 = REFERENCE_15_PATH.iter().map(|p| p.0).sum();
        assert!((h.re - 0.110).abs() < 1e-15);
        assert_eq!(h.re, sum);
        assert_eq!(h.im, 0.0);
    }

    #[test]
    fn identity_channel() {
        let att = AttenuationParams::new(1.0, 0.0, 0.0).unwrap();
        let model = MultipathChannelModel::with_paths(
            vec![PathParams {
                gain: 1.0,
                length_m: 42.0,
                delay_s: 0.0,
            }],
            att,
            1.5e8,
        )
        .unwrap();
        for f in [0.0, 1.0, 1e6, 3.3e7] {
            assert_eq!(model.frequency_response(f), Complex::new(1.0, 0.0));
        }
        let grid = FrequencyGrid::new(8, 500e3, 19.043e3).unwrap();
        assert_eq!(model.subchannel_gains(&grid), vec![1.0; 8]);
    }

    #[test]
    fn matches_high_precision_reference() {
        // 60-digit mpmath evaluation at v_p = 1.5e8 m/s.
        let model = MultipathChannelModel::<f64>::reference_15_path();
        let cases = [
            (1e7, -0.00092008274940931142787, 0.0034835589152290592209),
            (500e3, 0.04150061213499376782, -0.16114978318285999492),
            (
                19980389.0,
                0.00040599932170848969474,
                0.000028945922117846827962,
            ),
        ];
        for (f, re, im) in cases {
            let h = model.frequency_response(f);
            let want = Complex::new(re, im);
            assert!((h - want).norm() < 1e-12 * want.norm(), "f = {f}: {h}");
        }
    }

    #[test]
    fn default_grid_has_deep_notches() {
        let grid = default_grid();
        assert!(grid.last_frequency() <= 20e6);
        let gains = MultipathChannelModel::<f64>::reference_15_path().subchannel_gains(&grid);
        assert_eq!(gains.len(), 1024);
        assert!(gains.iter().all(|&g| g > 0.0));
        let max = gains.iter().cloned().fold(f64::MIN, f64::max);
        let min = gains.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min / max < 1e-2);
    }

    #[test]
    fn profile_scalar_evaluation() {
        let model = length_profile_channel::<f64>("100m", 100.0).unwrap();
        let g = model.frequency_response(1e7).norm_sqr();
        let want = (-2.0 * (9.40e-3 + 4.20e-7 * 1e7f64.powf(0.7)) * 100.0).exp();
        assert!((g - want).abs() < 1e-15 * want);
        // mpmath: 1.9308941780090343753e-4
        assert!((g - 1.9308941780090343753e-4).abs() < 1e-13 * g);
    }

    #[test]
    fn profile_table() {
        let m = length_profile_channel::<f64>("100m", 100.0).unwrap();
        assert_eq!(m.attenuation().exponent, 0.7);
        assert_eq!(m.attenuation().a0, 9.40e-3);
        assert_eq!(m.attenuation().a1, 4.20e-7);
        assert_eq!(m.paths()[0].gain, 1.0);
        assert_eq!(m.paths()[0].delay_s, 100.0 / 1.5e8);
        let m = length_profile_channel::<f64>("380m", 380.0).unwrap();
        assert_eq!(m.attenuation().exponent, 1.0);
        assert_eq!(m.attenuation().a0, 6.20e-3);
        assert_eq!(m.attenuation().a1, 4.00e-9);
        assert!(matches!(
            length_profile_channel::<f64>("250m", 1.0),
            Err(Error::Config { .. })
        ));
        assert_eq!(
            "380 m".parse::<LengthProfile>().unwrap(),
            LengthProfile::M380
        );
    }

    #[test]
    fn vanishing_length_is_lossless() {
        for p in LengthProfile::ALL {
            let m = p.channel(1e-9f64, 1.5e8).unwrap();
            for f in [0.0, 1e6, 2e7] {
                assert!((m.frequency_response(f).norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn invalid_models() {
        let att = AttenuationParams::new(1.0, 0.0, 2.5e-9).unwrap();
        assert!(MultipathChannelModel::<f64>::new(&[], att, 1.5e8).is_err());
        assert!(MultipathChannelModel::new(&[(1.0, 0.0)], att, 1.5e8).is_err());
        assert!(MultipathChannelModel::new(&[(1.0, 10.0)], att, 0.0).is_err());
        assert!(AttenuationParams::new(2.5, 0.0, 0.0).is_err());
        assert!(AttenuationParams::new(1.0, -1.0, 0.0).is_err());
        assert!(FrequencyGrid::new(0, 0.0, 1.0).is_err());
        assert!(FrequencyGrid::new(4, 0.0, 0.0).is_err());
    }

    #[test]
    fn param_text_roundtrip_of_reference() {
        let mut text = String::from("[attenuation]\nkappa = 1\na0 = 0\na1 = 2.5e-9\n");
        for (g, d) in REFERENCE_15_PATH {
            text.push_str(&format!("[path]\ng = {g}\nd = {d}\n"));
        }
        let parsed = MultipathChannelModel::<f64>::from_param_text(&text).unwrap();
        assert_eq!(parsed, MultipathChannelModel::reference_15_path());
    }

    #[test]
    fn param_text_errors() {
        let e = MultipathChannelModel::<f64>::from_param_text("[path]\ng=1\nd=1\n").unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        let e = MultipathChannelModel::<f64>::from_param_text(
            "[attenuation]\nkappa=1\na0=0\na1=0\nspeed=3\n",
        )
        .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 5, .. }));
    }

    #[test]
    fn gain_csv_layout() {
        let grid = FrequencyGrid::new(2, 500e3, 19.043e3).unwrap();
        let mut buf = Vec::new();
        write_gain_csv(&mut buf, &grid, &[1.0, 0.1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "subcarrier_index,freq_hz,gain_db");
        assert_eq!(lines[2], "1,5.1904300000000000e5,-1.0000000000000000e1");
    }
}
