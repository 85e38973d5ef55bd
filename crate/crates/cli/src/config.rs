//! Run configuration: strict JSON ingestion and invariant checking.
//!
//! The document has a top-level `experiment` string, a `drive` object, an
//! experiment-specific object stored under the experiment name, and an
//! optional `noise` object. Unknown keys anywhere are a hard error so that
//! a typo in a physics parameter cannot silently fall back to a default.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spinsync::model::{DriveParams, Hyperfine};

#[derive(Debug)]
pub enum ConfigError {
    /// Unreadable file or JSON syntax error, with position when known.
    Parse { detail: String },
    UnknownKey { key: String, context: String },
    MissingKey { key: String, context: String },
    /// Structurally valid but violates a physics/scan invariant.
    Invariant { detail: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { detail } => write!(f, "config parse error: {detail}"),
            ConfigError::UnknownKey { key, context } => {
                write!(f, "unknown key \"{key}\" in {context}")
            }
            ConfigError::MissingKey { key, context } => {
                write!(f, "missing key \"{key}\" in {context}")
            }
            ConfigError::Invariant { detail } => write!(f, "invalid config: {detail}"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub const EXPERIMENT_KINDS: [&str; 8] = [
    "esr",
    "phase-gated-esr",
    "rabi-map",
    "sync-scan",
    "amplitude-scan",
    "rf-scan",
    "floquet",
    "lightshift",
];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HyperfineSection {
    pub splitting_mhz: f64,
    pub weights: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub rabi_frequency_mhz: f64,
    pub mw_detuning_mhz: f64,
    pub rf_frequency_mhz: f64,
    pub rf_amplitude_mhz: f64,
    pub rf_phase_rad: f64,
    pub gamma1_per_us: f64,
    pub gamma2_per_us: f64,
    pub w_eq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperfine: Option<HyperfineSection>,
}

impl DriveSection {
    pub fn to_params(&self) -> DriveParams {
        DriveParams {
            rabi_frequency: self.rabi_frequency_mhz,
            mw_detuning: self.mw_detuning_mhz,
            rf_frequency: self.rf_frequency_mhz,
            rf_amplitude: self.rf_amplitude_mhz,
            rf_phase: self.rf_phase_rad,
            gamma1: self.gamma1_per_us,
            gamma2: self.gamma2_per_us,
            w_eq: self.w_eq,
            hyperfine: self.hyperfine.as_ref().map(|h| Hyperfine {
                splitting_mhz: h.splitting_mhz,
                weights: h.weights,
            }),
        }
    }
}

fn default_linewidth() -> f64 {
    0.5
}
fn default_contrast() -> f64 {
    0.2
}
fn default_phase_bins() -> usize {
    10
}
fn default_duty() -> f64 {
    0.2
}
fn default_tau_max() -> f64 {
    20.0
}
fn default_tau_points() -> usize {
    2048
}
fn default_phase_average() -> usize {
    16
}
fn default_truncation() -> usize {
    40
}
fn default_eigentolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EsrSection {
    pub scan_start_mhz: f64,
    pub scan_stop_mhz: f64,
    pub scan_points: usize,
    /// "adiabatic" or "resolved-sideband"
    pub regime: String,
    #[serde(default = "default_linewidth")]
    pub linewidth_mhz: f64,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhaseGatedEsrSection {
    pub scan_start_mhz: f64,
    pub scan_stop_mhz: f64,
    pub scan_points: usize,
    #[serde(default = "default_linewidth")]
    pub linewidth_mhz: f64,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    #[serde(default = "default_phase_bins")]
    pub phase_bins: usize,
    #[serde(default = "default_duty")]
    pub duty: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RabiMapSection {
    pub detuning_start_mhz: f64,
    pub detuning_stop_mhz: f64,
    pub detuning_points: usize,
    pub tau_max_us: f64,
    pub tau_points: usize,
    #[serde(default = "default_phase_average")]
    pub phase_average: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyncScanSection {
    pub rabi_start_mhz: f64,
    pub rabi_stop_mhz: f64,
    pub rabi_points: usize,
    #[serde(default = "default_tau_max")]
    pub tau_max_us: f64,
    #[serde(default = "default_tau_points")]
    pub tau_points: usize,
    #[serde(default = "default_phase_average")]
    pub phase_average: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeScanSection {
    pub rf_amplitudes_mhz: Vec<f64>,
    #[serde(default = "default_tau_max")]
    pub tau_max_us: f64,
    #[serde(default = "default_tau_points")]
    pub tau_points: usize,
    #[serde(default = "default_phase_average")]
    pub phase_average: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RfScanSection {
    pub rf_start_mhz: f64,
    pub rf_stop_mhz: f64,
    pub rf_points: usize,
    #[serde(default = "default_tau_max")]
    pub tau_max_us: f64,
    #[serde(default = "default_tau_points")]
    pub tau_points: usize,
    #[serde(default = "default_phase_average")]
    pub phase_average: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FloquetSection {
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_eigentolerance")]
    pub eigentolerance_mhz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub photons_per_point: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    Esr(EsrSection),
    PhaseGatedEsr(PhaseGatedEsrSection),
    RabiMap(RabiMapSection),
    SyncScan(SyncScanSection),
    AmplitudeScan(AmplitudeScanSection),
    RfScan(RfScanSection),
    Floquet(FloquetSection),
    Lightshift(FloquetSection),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Esr(_) => "esr",
            ExperimentKind::PhaseGatedEsr(_) => "phase-gated-esr",
            ExperimentKind::RabiMap(_) => "rabi-map",
            ExperimentKind::SyncScan(_) => "sync-scan",
            ExperimentKind::AmplitudeScan(_) => "amplitude-scan",
            ExperimentKind::RfScan(_) => "rf-scan",
            ExperimentKind::Floquet(_) => "floquet",
            ExperimentKind::Lightshift(_) => "lightshift",
        }
    }

    fn section_value(&self) -> Value {
        match self {
            ExperimentKind::Esr(s) => serde_json::to_value(s),
            ExperimentKind::PhaseGatedEsr(s) => serde_json::to_value(s),
            ExperimentKind::RabiMap(s) => serde_json::to_value(s),
            ExperimentKind::SyncScan(s) => serde_json::to_value(s),
            ExperimentKind::AmplitudeScan(s) => serde_json::to_value(s),
            ExperimentKind::RfScan(s) => serde_json::to_value(s),
            ExperimentKind::Floquet(s) => serde_json::to_value(s),
            ExperimentKind::Lightshift(s) => serde_json::to_value(s),
        }
        .expect("sections serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub drive: DriveSection,
    pub noise: Option<NoiseSection>,
}

impl RunConfig {
    /// The fully resolved config (defaults filled in) as a JSON document
    /// that `load_config` accepts back unchanged.
    pub fn to_json(&self) -> Value {
        let mut root = serde_json::Map::new();
        root.insert("experiment".into(), Value::String(self.kind.name().into()));
        root.insert(
            "drive".into(),
            serde_json::to_value(&self.drive).expect("drive serializes"),
        );
        if let Some(noise) = &self.noise {
            root.insert(
                "noise".into(),
                serde_json::to_value(noise).expect("noise serializes"),
            );
        }
        root.insert(self.kind.name().into(), self.kind.section_value());
        Value::Object(root)
    }

    /// Invariant checks beyond structural parsing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |detail: String| Err(ConfigError::Invariant { detail });
        self.drive
            .to_params()
            .validate()
            .map_err(|e| ConfigError::Invariant {
                detail: e.to_string(),
            })?;
        match &self.kind {
            ExperimentKind::Esr(s) => {
                if s.scan_points < 2 || !(s.scan_stop_mhz > s.scan_start_mhz) {
                    return invalid("esr scan needs stop > start and >= 2 points".into());
                }
                if s.regime != "adiabatic" && s.regime != "resolved-sideband" {
                    return invalid(format!(
                        "esr regime must be \"adiabatic\" or \"resolved-sideband\", got \"{}\"",
                        s.regime
                    ));
                }
                if !(s.linewidth_mhz > 0.0) || !(s.contrast > 0.0 && s.contrast <= 0.4) {
                    return invalid("esr needs linewidth > 0 and contrast in (0, 0.4]".into());
                }
            }
            ExperimentKind::PhaseGatedEsr(s) => {
                if s.scan_points < 2 || !(s.scan_stop_mhz > s.scan_start_mhz) {
                    return invalid("scan needs stop > start and >= 2 points".into());
                }
                if s.phase_bins == 0 || !(s.duty > 0.0 && s.duty <= 1.0) {
                    return invalid("need phase_bins >= 1 and duty in (0, 1]".into());
                }
                if !(s.linewidth_mhz > 0.0) || !(s.contrast > 0.0 && s.contrast <= 0.4) {
                    return invalid("need linewidth > 0 and contrast in (0, 0.4]".into());
                }
            }
            ExperimentKind::RabiMap(s) => {
                if s.detuning_points == 0 || !(s.detuning_stop_mhz >= s.detuning_start_mhz) {
                    return invalid("detuning grid needs stop >= start and >= 1 point".into());
                }
                if s.tau_points < 8 || !(s.tau_max_us > 0.0) || s.phase_average == 0 {
                    return invalid("need tau_points >= 8, tau_max > 0, phase_average >= 1".into());
                }
            }
            ExperimentKind::SyncScan(s) => {
                if s.rabi_points == 0 || !(s.rabi_stop_mhz >= s.rabi_start_mhz) {
                    return invalid("rabi grid needs stop >= start and >= 1 point".into());
                }
                if s.tau_points < 8 || !(s.tau_max_us > 0.0) || s.phase_average == 0 {
                    return invalid("need tau_points >= 8, tau_max > 0, phase_average >= 1".into());
                }
                if self.drive.mw_detuning_mhz != 0.0 {
                    return invalid("sync-scan requires mw_detuning_mhz = 0".into());
                }
            }
            ExperimentKind::AmplitudeScan(s) => {
                if s.rf_amplitudes_mhz.is_empty() {
                    return invalid("rf_amplitudes_mhz must be nonempty".into());
                }
                if s.tau_points < 8 || !(s.tau_max_us > 0.0) || s.phase_average == 0 {
                    return invalid("need tau_points >= 8, tau_max > 0, phase_average >= 1".into());
                }
                if self.drive.mw_detuning_mhz != 0.0 {
                    return invalid("amplitude-scan requires mw_detuning_mhz = 0".into());
                }
            }
            ExperimentKind::RfScan(s) => {
                if s.rf_points == 0 || !(s.rf_stop_mhz >= s.rf_start_mhz) {
                    return invalid("rf grid needs stop >= start and >= 1 point".into());
                }
                if s.tau_points < 8 || !(s.tau_max_us > 0.0) || s.phase_average == 0 {
                    return invalid("need tau_points >= 8, tau_max > 0, phase_average >= 1".into());
                }
                if self.drive.mw_detuning_mhz != 0.0 {
                    return invalid("rf-scan requires mw_detuning_mhz = 0".into());
                }
            }
            ExperimentKind::Floquet(s) | ExperimentKind::Lightshift(s) => {
                if s.truncation < 1 || !(s.eigentolerance_mhz > 0.0) {
                    return invalid("need truncation >= 1 and eigentolerance > 0".into());
                }
            }
        }
        if self.noise.is_some() && !matches!(self.kind, ExperimentKind::RabiMap(_)) {
            return invalid("shot noise is only supported for rabi-map".into());
        }
        if let Some(noise) = &self.noise {
            if noise.photons_per_point == 0 {
                return invalid("photons_per_point must be >= 1".into());
            }
        }
        Ok(())
    }
}

fn classify_serde(err: serde_json::Error, context: &str) -> ConfigError {
    let msg = err.to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(key) = rest.split('`').next() {
            return ConfigError::UnknownKey {
                key: key.to_string(),
                context: context.to_string(),
            };
        }
    }
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(key) = rest.split('`').next() {
            return ConfigError::MissingKey {
                key: key.to_string(),
                context: context.to_string(),
            };
        }
    }
    ConfigError::Parse {
        detail: format!("{context}: {msg}"),
    }
}

fn section_from<T: serde::de::DeserializeOwned>(
    value: &Value,
    context: &str,
) -> Result<T, ConfigError> {
    serde_json::from_value(value.clone()).map_err(|e| classify_serde(e, context))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        detail: format!("line {}, column {}: {}", e.line(), e.column(), e),
    })?;
    let obj = root.as_object().ok_or_else(|| ConfigError::Parse {
        detail: "top level must be a JSON object".into(),
    })?;

    let experiment = obj
        .get("experiment")
        .ok_or_else(|| ConfigError::MissingKey {
            key: "experiment".into(),
            context: "top level".into(),
        })?
        .as_str()
        .ok_or_else(|| ConfigError::Parse {
            detail: "\"experiment\" must be a string".into(),
        })?
        .to_string();
    if !EXPERIMENT_KINDS.contains(&experiment.as_str()) {
        return Err(ConfigError::Invariant {
            detail: format!(
                "unknown experiment \"{experiment}\" (expected one of {})",
                EXPERIMENT_KINDS.join(", ")
            ),
        });
    }

    // exact top-level key set: experiment, drive, <kind>, optional noise
    let mut keys: Vec<&String> = obj.keys().collect();
    keys.sort();
    for key in keys {
        if key != "experiment" && key != "drive" && key != "noise" && *key != experiment {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                context: "top level".into(),
            });
        }
    }

    let drive_value = obj.get("drive").ok_or_else(|| ConfigError::MissingKey {
        key: "drive".into(),
        context: "top level".into(),
    })?;
    let drive: DriveSection = section_from(drive_value, "drive")?;

    let section = obj
        .get(&experiment)
        .ok_or_else(|| ConfigError::MissingKey {
            key: experiment.clone(),
            context: "top level".into(),
        })?;
    let kind = match experiment.as_str() {
        "esr" => ExperimentKind::Esr(section_from(section, "esr")?),
        "phase-gated-esr" => {
            ExperimentKind::PhaseGatedEsr(section_from(section, "phase-gated-esr")?)
        }
        "rabi-map" => ExperimentKind::RabiMap(section_from(section, "rabi-map")?),
        "sync-scan" => ExperimentKind::SyncScan(section_from(section, "sync-scan")?),
        "amplitude-scan" => {
            ExperimentKind::AmplitudeScan(section_from(section, "amplitude-scan")?)
        }
        "rf-scan" => ExperimentKind::RfScan(section_from(section, "rf-scan")?),
        "floquet" => ExperimentKind::Floquet(section_from(section, "floquet")?),
        "lightshift" => ExperimentKind::Lightshift(section_from(section, "lightshift")?),
        _ => unreachable!("kind list checked above"),
    };

    let noise = match obj.get("noise") {
        Some(v) => Some(section_from::<NoiseSection>(v, "noise")?),
        None => None,
    };

    Ok(RunConfig { kind, drive, noise })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse {
        detail: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra_drive: &str, experiment: &str, section: &str) -> String {
        format!(
            r#"{{
  "experiment": "{experiment}",
  "drive": {{
    "rabi_frequency_mhz": 5.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 6.0,
    "rf_amplitude_mhz": 0.0,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.0,
    "gamma2_per_us": 0.0,
    "w_eq": 1.0{extra_drive}
  }},
  "{experiment}": {section}
}}"#
        )
    }

    #[test]
    fn minimal_config_with_rf_off_parses() {
        let text = minimal(
            "",
            "sync-scan",
            r#"{"rabi_start_mhz": 4.0, "rabi_stop_mhz": 8.0, "rabi_points": 5}"#,
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.kind.name(), "sync-scan");
        assert_eq!(cfg.drive.rf_amplitude_mhz, 0.0);
        cfg.validate().unwrap();
        // defaults filled
        match cfg.kind {
            ExperimentKind::SyncScan(ref s) => {
                assert_eq!(s.tau_max_us, 20.0);
                assert_eq!(s.tau_points, 2048);
                assert_eq!(s.phase_average, 16);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn fig4f_reproduction_config() {
        let text = r#"{
  "experiment": "rf-scan",
  "drive": {
    "rabi_frequency_mhz": 5.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 5.0,
    "rf_amplitude_mhz": 2.7,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.00578,
    "gamma2_per_us": 0.3,
    "w_eq": 1.0
  },
  "rf-scan": {"rf_start_mhz": 3.0, "rf_stop_mhz": 8.0, "rf_points": 26}
}"#;
        let cfg = parse_config(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.drive.rabi_frequency_mhz, 5.0);
        assert_eq!(cfg.drive.rf_amplitude_mhz, 2.7);
    }

    #[test]
    fn unit_suffix_typo_is_unknown_key() {
        let text = r#"{
  "experiment": "floquet",
  "drive": {
    "rabi_frequency": 5.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 6.0,
    "rf_amplitude_mhz": 0.0,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.0,
    "gamma2_per_us": 0.0,
    "w_eq": 1.0
  },
  "floquet": {}
}"#;
        match parse_config(text) {
            Err(ConfigError::UnknownKey { key, .. }) => assert_eq!(key, "rabi_frequency"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn missing_drive_key_is_reported() {
        let text = r#"{
  "experiment": "floquet",
  "drive": {
    "rabi_frequency_mhz": 5.0,
    "mw_detuning_mhz": 0.0,
    "rf_frequency_mhz": 6.0,
    "rf_amplitude_mhz": 0.0,
    "rf_phase_rad": 0.0,
    "gamma1_per_us": 0.0,
    "gamma2_per_us": 0.0
  },
  "floquet": {}
}"#;
        match parse_config(text) {
            Err(ConfigError::MissingKey { key, .. }) => assert_eq!(key, "w_eq"),
            other => panic!("expected MissingKey, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_config("{\n  \"experiment\": \n}") {
            Err(ConfigError::Parse { detail }) => {
                assert!(detail.contains("line 3"), "detail: {detail}")
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn stray_top_level_key_is_rejected() {
        let text = minimal("", "floquet", "{}").replace(
            "\"floquet\": {}",
            "\"floquet\": {}, \"extra\": 1",
        );
        match parse_config(&text) {
            Err(ConfigError::UnknownKey { key, .. }) => assert_eq!(key, "extra"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_are_distinct_from_parse_errors() {
        // sync-scan off MW resonance
        let mut text = minimal(
            "",
            "sync-scan",
            r#"{"rabi_start_mhz": 4.0, "rabi_stop_mhz": 8.0, "rabi_points": 5}"#,
        );
        text = text.replace("\"mw_detuning_mhz\": 0.0", "\"mw_detuning_mhz\": 1.0");
        let cfg = parse_config(&text).unwrap();
        match cfg.validate() {
            Err(ConfigError::Invariant { .. }) => {}
            other => panic!("expected Invariant, got {other:?}"),
        }
    }

    #[test]
    fn hyperfine_weights_must_sum_to_one() {
        let text = minimal(
            ",\n    \"hyperfine\": {\"splitting_mhz\": 2.16, \"weights\": [0.5, 0.5, 0.5]}",
            "floquet",
            "{}",
        );
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Invariant { .. })
        ));
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = minimal(
            "",
            "sync-scan",
            r#"{"rabi_start_mhz": 4.0, "rabi_stop_mhz": 8.0, "rabi_points": 5}"#,
        );
        let cfg = parse_config(&text).unwrap();
        let round = parse_config(&serde_json::to_string_pretty(&cfg.to_json()).unwrap()).unwrap();
        assert_eq!(cfg, round);
    }

    #[test]
    fn noise_restricted_to_rabi_map() {
        let good = minimal(
            "",
            "rabi-map",
            r#"{"detuning_start_mhz": -1.0, "detuning_stop_mhz": 1.0, "detuning_points": 3,
                "tau_max_us": 2.0, "tau_points": 64}"#,
        )
        .replace(
            "\"drive\":",
            "\"noise\": {\"photons_per_point\": 1000},\n  \"drive\":",
        );
        let cfg = parse_config(&good).unwrap();
        cfg.validate().unwrap();

        let bad = minimal("", "floquet", "{}").replace(
            "\"drive\":",
            "\"noise\": {\"photons_per_point\": 1000},\n  \"drive\":",
        );
        let cfg = parse_config(&bad).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invariant { .. })));
    }
}
