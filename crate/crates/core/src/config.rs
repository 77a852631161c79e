//! Scenario files: `[system]`, `[coding]`, `[channel]` and `[sweep]`
//! sections of `key = value` lines, plus `KEY=VALUE` overrides applied
//! after the file. Unknown sections and keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::{
    AttenuationParams, LengthProfile, MultipathChannelModel, DEFAULT_PROPAGATION_SPEED,
};
use crate::coding::RsCodeParams;
use crate::error::{Error, Result};
use crate::loading::GroupingPolicy;
use crate::params::{parse_bool, parse_quantity, ParamDoc};
use crate::scenario::SystemConfig;

/// Recognised `(section, key)` pairs. Bare override keys resolve to the
/// first entry with that key.
const KEYS: &[(&str, &str)] = &[
    ("system", "n_subcarriers"),
    ("system", "lc"),
    ("system", "band_start"),
    ("system", "band_stop"),
    ("system", "spacing"),
    ("system", "signal_psd_dbm_hz"),
    ("system", "noise_psd_dbm_hz"),
    ("system", "coding"),
    ("system", "b_max"),
    ("system", "grouping"),
    ("coding", "target_ber"),
    ("coding", "rs_n"),
    ("coding", "rs_k"),
    ("coding", "rs_symbol_bits"),
    ("coding", "c_factor"),
    ("coding", "trellis_gain_db"),
    ("coding", "trellis_gain_per_order"),
    ("coding", "trellis_redundancy"),
    ("coding", "margin_db"),
    ("coding", "max_constellation_points"),
    ("channel", "builtin"),
    ("channel", "file"),
    ("channel", "profile"),
    ("channel", "distance"),
    ("channel", "propagation_speed"),
    ("channel", "kappa"),
    ("channel", "a0"),
    ("channel", "a1"),
    ("channel", "path"),
    ("sweep", "profiles"),
    ("sweep", "distances"),
];

/// Aliases accepted in files and overrides.
fn canonical(section: &str, key: &str) -> Option<(&'static str, &'static str)> {
    let key = match key {
        "n" => "n_subcarriers",
        "signal_psd" => "signal_psd_dbm_hz",
        "noise_psd" => "noise_psd_dbm_hz",
        "n0_psd" => "noise_psd_dbm_hz",
        "k" => "kappa",
        other => other,
    };
    // `target_ber` may be written under [system] too.
    let section = if key == "target_ber" {
        "coding"
    } else {
        section
    };
    KEYS.iter()
        .find(|(s, k)| *s == section && *k == key)
        .copied()
}

fn resolve_override(key: &str) -> Result<(&'static str, &'static str)> {
    let key = key.trim().to_ascii_lowercase();
    let found = match key.split_once('.') {
        Some((section, k)) => canonical(section, k),
        None => ["system", "coding", "channel", "sweep"]
            .iter()
            .find_map(|s| canonical(s, &key)),
    };
    found.ok_or_else(|| Error::config(key.clone(), "unknown configuration key"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Built-in 15-path reference link.
    Reference15 { propagation_speed: f64 },
    /// Channel parameter file, resolved against the scenario file's directory.
    File(PathBuf),
    /// Length profile of a class at a distance.
    Profile {
        profile: LengthProfile,
        distance_m: f64,
        propagation_speed: f64,
    },
    /// Parameters written directly in `[channel]`.
    Inline {
        kappa: f64,
        a0: f64,
        a1: f64,
        paths: Vec<(f64, f64)>,
        propagation_speed: f64,
    },
}

impl ChannelSpec {
    pub fn propagation_speed(&self) -> f64 {
        match self {
            ChannelSpec::Reference15 { propagation_speed }
            | ChannelSpec::Profile {
                propagation_speed, ..
            }
            | ChannelSpec::Inline {
                propagation_speed, ..
            } => *propagation_speed,
            ChannelSpec::File(_) => DEFAULT_PROPAGATION_SPEED,
        }
    }

    pub fn build(&self) -> Result<MultipathChannelModel<f64>> {
        match self {
            ChannelSpec::Reference15 { propagation_speed } => {
                MultipathChannelModel::reference_15_path_with_speed(*propagation_speed)
            }
            ChannelSpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Io(format!("reading channel file {}: {e}", path.display()))
                })?;
                MultipathChannelModel::from_param_text(&text)
            }
            ChannelSpec::Profile {
                profile,
                distance_m,
                propagation_speed,
            } => profile.channel(*distance_m, *propagation_speed),
            ChannelSpec::Inline {
                kappa,
                a0,
                a1,
                paths,
                propagation_speed,
            } => MultipathChannelModel::new(
                paths,
                AttenuationParams::new(*kappa, *a0, *a1)?,
                *propagation_speed,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub profiles: Vec<LengthProfile>,
    pub distances_m: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            profiles: LengthProfile::ALL.to_vec(),
            distances_m: LengthProfile::ALL
                .iter()
                .map(|p| p.nominal_length_m())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub system: SystemConfig<f64>,
    pub channel: ChannelSpec,
    pub sweep: SweepSpec,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            system: SystemConfig::default(),
            channel: ChannelSpec::Reference15 {
                propagation_speed: DEFAULT_PROPAGATION_SPEED,
            },
            sweep: SweepSpec::default(),
        }
    }
}

/// Raw settings collected before cross-field validation.
#[derive(Debug, Default)]
struct Builder {
    base_dir: PathBuf,
    system: SystemConfig<f64>,
    rs_n: Option<u32>,
    rs_k: Option<u32>,
    rs_symbol_bits: Option<u32>,
    builtin: Option<String>,
    file: Option<String>,
    profile: Option<LengthProfile>,
    distance: Option<f64>,
    propagation_speed: Option<f64>,
    kappa: Option<f64>,
    a0: Option<f64>,
    a1: Option<f64>,
    paths: Vec<(f64, f64)>,
    sweep: SweepSpec,
}

fn bad(field: &str, value: &str, expected: &str) -> Error {
    Error::config(field, format!("expected {expected}, found `{value}`"))
}

fn num(field: &str, value: &str) -> Result<f64> {
    parse_quantity(value)
        .filter(|x| !x.is_nan())
        .ok_or_else(|| bad(field, value, "a number"))
}

fn int<I: std::str::FromStr>(field: &str, value: &str) -> Result<I> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(field, value, "an integer"))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl Builder {
    fn new(base_dir: &Path) -> Self {
        let defaults = ScenarioFile::default();
        Builder {
            base_dir: base_dir.to_path_buf(),
            system: defaults.system,
            sweep: defaults.sweep,
            ..Builder::default()
        }
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let field = format!("{section}.{key}");
        let f = field.as_str();
        let sys = &mut self.system;
        match (section, key) {
            ("system", "n_subcarriers") => sys.n_subcarriers = int(f, value)?,
            ("system", "lc") => sys.lc = int(f, value)?,
            ("system", "band_start") => sys.band_start_hz = num(f, value)?,
            ("system", "band_stop") => sys.band_stop_hz = num(f, value)?,
            ("system", "spacing") => sys.spacing_hz = num(f, value)?,
            ("system", "signal_psd_dbm_hz") => sys.signal_psd_dbm_hz = num(f, value)?,
            ("system", "noise_psd_dbm_hz") => sys.noise_psd_dbm_hz = num(f, value)?,
            ("system", "coding") => {
                sys.coding_enabled = parse_bool(value).ok_or_else(|| bad(f, value, "on/off"))?
            }
            ("system", "b_max") => sys.b_max = int(f, value)?,
            ("system", "grouping") => sys.grouping = GroupingPolicy::parse(value)?,
            ("coding", "target_ber") => sys.coding.target_ber = num(f, value)?,
            ("coding", "rs_n") => self.rs_n = Some(int(f, value)?),
            ("coding", "rs_k") => self.rs_k = Some(int(f, value)?),
            ("coding", "rs_symbol_bits") => self.rs_symbol_bits = Some(int(f, value)?),
            ("coding", "c_factor") => sys.coding.c_factor = num(f, value)?,
            ("coding", "trellis_gain_db") => {
                sys.coding.trellis.fundamental_gain_db = num(f, value)?
            }
            ("coding", "trellis_gain_per_order") => {
                let gains = list(value).map(|v| num(f, v)).collect::<Result<Vec<_>>>()?;
                sys.coding.trellis.per_order_gain_db = (!gains.is_empty()).then_some(gains);
            }
            ("coding", "trellis_redundancy") => {
                sys.coding.trellis.redundancy_bits_per_2d = num(f, value)?
            }
            ("coding", "margin_db") => sys.coding.margin_db = num(f, value)?,
            ("coding", "max_constellation_points") => {
                sys.coding.trellis.max_constellation_points = int(f, value)?
            }
            ("channel", "builtin") => self.builtin = Some(value.trim().to_ascii_lowercase()),
            ("channel", "file") => self.file = Some(value.trim().to_string()),
            ("channel", "profile") => self.profile = Some(value.parse()?),
            ("channel", "distance") => self.distance = Some(num(f, value)?),
            ("channel", "propagation_speed") => self.propagation_speed = Some(num(f, value)?),
            ("channel", "kappa") => self.kappa = Some(num(f, value)?),
            ("channel", "a0") => self.a0 = Some(num(f, value)?),
            ("channel", "a1") => self.a1 = Some(num(f, value)?),
            ("channel", "path") => {
                let parts: Vec<&str> = list(value).collect();
                if parts.len() != 2 {
                    return Err(bad(f, value, "`g, d`"));
                }
                self.paths.push((num(f, parts[0])?, num(f, parts[1])?));
            }
            ("sweep", "profiles") => {
                self.sweep.profiles = list(value).map(str::parse).collect::<Result<Vec<_>>>()?
            }
            ("sweep", "distances") => {
                self.sweep.distances_m =
                    list(value).map(|v| num(f, v)).collect::<Result<Vec<_>>>()?
            }
            _ => return Err(Error::config(field, "unknown configuration key")),
        }
        Ok(())
    }

    fn finish(self) -> Result<ScenarioFile> {
        let mut system = self.system;
        if self.rs_n.is_some() || self.rs_k.is_some() || self.rs_symbol_bits.is_some() {
            let cur = system.coding.rs;
            system.coding.rs = RsCodeParams::new(
                self.rs_n.unwrap_or(cur.n()),
                self.rs_k.unwrap_or(cur.k()),
                self.rs_symbol_bits.unwrap_or(cur.symbol_bits()),
            )?;
        }
        let propagation_speed = self.propagation_speed.unwrap_or(DEFAULT_PROPAGATION_SPEED);
        let inline = self.kappa.is_some()
            || self.a0.is_some()
            || self.a1.is_some()
            || !self.paths.is_empty();
        let chosen = [
            self.builtin.is_some(),
            self.file.is_some(),
            self.profile.is_some(),
            inline,
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if chosen > 1 {
            return Err(Error::config(
                "channel",
                "give exactly one of builtin, file, profile or inline parameters",
            ));
        }
        let channel = if let Some(name) = self.builtin {
            match name.as_str() {
                "table1" | "reference15" | "15-path" => {
                    ChannelSpec::Reference15 { propagation_speed }
                }
                other => {
                    return Err(Error::config(
                        "channel.builtin",
                        format!("unknown model `{other}`"),
                    ))
                }
            }
        } else if let Some(file) = self.file {
            // Absolute, so that a config echo reruns from any directory.
            let path = std::path::absolute(self.base_dir.join(&file))?;
            ChannelSpec::File(path)
        } else if let Some(profile) = self.profile {
            ChannelSpec::Profile {
                profile,
                distance_m: self.distance.unwrap_or(profile.nominal_length_m()),
                propagation_speed,
            }
        } else if inline {
            let need = |v: Option<f64>, k: &str| {
                v.ok_or_else(|| Error::config(format!("channel.{k}"), "missing"))
            };
            ChannelSpec::Inline {
                kappa: need(self.kappa, "kappa")?,
                a0: need(self.a0, "a0")?,
                a1: need(self.a1, "a1")?,
                paths: self.paths,
                propagation_speed,
            }
        } else {
            ChannelSpec::Reference15 { propagation_speed }
        };
        system.validate()?;
        Ok(ScenarioFile {
            system,
            channel,
            sweep: self.sweep,
        })
    }
}

impl ScenarioFile {
    /// Parses scenario text; relative channel file paths resolve against
    /// `base_dir`. Overrides (`key=value`, key optionally `section.key`)
    /// are applied after the file.
    pub fn parse(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let doc = ParamDoc::parse(text)?;
        let mut b = Builder::new(base_dir);
        for section in &doc.sections {
            if section.name.is_empty() {
                if let Some(e) = section.entries.first() {
                    return Err(Error::Parse {
                        line: e.line,
                        reason: format!("key `{}` outside any section", e.key),
                    });
                }
                continue;
            }
            if !["system", "coding", "channel", "sweep"].contains(&section.name.as_str()) {
                return Err(Error::Parse {
                    line: section.line,
                    reason: format!("unknown section `[{}]`", section.name),
                });
            }
            for e in &section.entries {
                let (s, k) = canonical(&section.name, &e.key).ok_or_else(|| Error::Parse {
                    line: e.line,
                    reason: format!("unknown key `{}` in [{}]", e.key, section.name),
                })?;
                b.apply(s, k, &e.value).map_err(|err| match err {
                    Error::Config { field, reason } => Error::Parse {
                        line: e.line,
                        reason: format!("{field}: {reason}"),
                    },
                    other => other,
                })?;
            }
        }
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::config(o.clone(), "override must be KEY=VALUE"))?;
            let (s, k) = resolve_override(key)?;
            b.apply(s, k, value)?;
        }
        b.finish()
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, overrides)
    }

    /// Defaults plus overrides, for runs without a config file.
    pub fn from_overrides(overrides: &[String]) -> Result<Self> {
        Self::parse("", Path::new("."), overrides)
    }

    /// Serialises the full configuration; parsing the text yields an equal
    /// `ScenarioFile`.
    pub fn to_text(&self) -> String {
        let s = &self.system;
        let c = &s.coding;
        let mut out = String::new();
        let _ = writeln!(out, "[system]");
        let _ = writeln!(out, "n_subcarriers = {}", s.n_subcarriers);
        let _ = writeln!(out, "lc = {}", s.lc);
        let _ = writeln!(out, "band_start = {:?}", s.band_start_hz);
        let _ = writeln!(out, "band_stop = {:?}", s.band_stop_hz);
        let _ = writeln!(out, "spacing = {:?}", s.spacing_hz);
        let _ = writeln!(out, "signal_psd_dbm_hz = {:?}", s.signal_psd_dbm_hz);
        let _ = writeln!(out, "noise_psd_dbm_hz = {:?}", s.noise_psd_dbm_hz);
        let _ = writeln!(
            out,
            "coding = {}",
            if s.coding_enabled { "on" } else { "off" }
        );
        let _ = writeln!(out, "b_max = {}", s.b_max);
        let _ = writeln!(out, "grouping = {}", s.grouping.name());
        let _ = writeln!(out, "\n[coding]");
        let _ = writeln!(out, "target_ber = {:?}", c.target_ber);
        let _ = writeln!(out, "rs_n = {}", c.rs.n());
        let _ = writeln!(out, "rs_k = {}", c.rs.k());
        let _ = writeln!(out, "rs_symbol_bits = {}", c.rs.symbol_bits());
        let _ = writeln!(out, "c_factor = {:?}", c.c_factor);
        let _ = writeln!(out, "trellis_gain_db = {:?}", c.trellis.fundamental_gain_db);
        if let Some(per_order) = &c.trellis.per_order_gain_db {
            let items: Vec<String> = per_order.iter().map(|g| format!("{g:?}")).collect();
            let _ = writeln!(out, "trellis_gain_per_order = {}", items.join(", "));
        }
        let _ = writeln!(
            out,
            "trellis_redundancy = {:?}",
            c.trellis.redundancy_bits_per_2d
        );
        let _ = writeln!(out, "margin_db = {:?}", c.margin_db);
        let _ = writeln!(
            out,
            "max_constellation_points = {}",
            c.trellis.max_constellation_points
        );
        let _ = writeln!(out, "\n[channel]");
        match &self.channel {
            ChannelSpec::Reference15 { propagation_speed } => {
                let _ = writeln!(out, "builtin = table1");
                let _ = writeln!(out, "propagation_speed = {propagation_speed:?}");
            }
            ChannelSpec::File(path) => {
                let _ = writeln!(out, "file = {}", path.display());
            }
            ChannelSpec::Profile {
                profile,
                distance_m,
                propagation_speed,
            } => {
                let _ = writeln!(out, "profile = {profile}");
                let _ = writeln!(out, "distance = {distance_m:?}");
                let _ = writeln!(out, "propagation_speed = {propagation_speed:?}");
            }
            ChannelSpec::Inline {
                kappa,
                a0,
                a1,
                paths,
                propagation_speed,
            } => {
                let _ = writeln!(out, "kappa = {kappa:?}\na0 = {a0:?}\na1 = {a1:?}");
                for (g, d) in paths {
                    let _ = writeln!(out, "path = {g:?}, {d:?}");
                }
                let _ = writeln!(out, "propagation_speed = {propagation_speed:?}");
            }
        }
        let _ = writeln!(out, "\n[sweep]");
        let profiles: Vec<&str> = self.sweep.profiles.iter().map(|p| p.name()).collect();
        let _ = writeln!(out, "profiles = {}", profiles.join(", "));
        let distances: Vec<String> = self
            .sweep
            .distances_m
            .iter()
            .map(|d| format!("{d:?}"))
            .collect();
        let _ = writeln!(out, "distances = {}", distances.join(", "));
        out
    }
}
