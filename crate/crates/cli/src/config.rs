//! Scenario configuration: JSON file, dotted-path overrides, unknown-key
//! detection and collected validation.

use std::path::{Path, PathBuf};

use quadmimo::beampattern::{AngleGrid, Cut, Direction, Taper, TaperKind};
use quadmimo::echo::{PulsingScheme, QuadrantDiversity, SchemeKind, WeatherScene};
use quadmimo::experiments::ReconstructionMode;
use quadmimo::geometry::build_planar_array;
use quadmimo::profile::StepProfileSpec;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub frequency_hz: f64,
    /// Reflectivity per unit linear power.
    pub radar_constant: f64,
    pub array: ArrayConfig,
    pub taper: TaperKind,
    pub scheme: SchemeConfig,
    pub scene: WeatherScene,
    pub profile: ProfileConfig,
    pub pattern: PatternConfig,
    pub moments: MomentsConfig,
    pub reconstruct: ReconstructConfig,
    pub variance: VarianceConfig,
    pub scantime: ScanTimeConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            frequency_hz: 9.4e9,
            radar_constant: 1.0,
            array: ArrayConfig::default(),
            taper: TaperKind::Taylor { sll_db: -55.0, nbar: 6 },
            scheme: SchemeConfig::default(),
            scene: WeatherScene::default(),
            profile: ProfileConfig::default(),
            pattern: PatternConfig::default(),
            moments: MomentsConfig::default(),
            reconstruct: ReconstructConfig::default(),
            variance: VarianceConfig::default(),
            scantime: ScanTimeConfig::default(),
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub nx: usize,
    pub ny: usize,
    pub spacing_m: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            nx: 34,
            ny: 34,
            spacing_m: 0.016,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub pri_s: f64,
    pub n_pulses: usize,
    pub gates: usize,
    pub quadrant_offsets_rad: [f64; 4],
    pub leakage_db: Option<f64>,
    pub diversity: QuadrantDiversity,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            kind: SchemeKind::QuadrantMimo,
            pri_s: 1e-3,
            n_pulses: 4096,
            gates: 1,
            quadrant_offsets_rad: [0.0; 4],
            leakage_db: None,
            diversity: QuadrantDiversity::CommonVolume,
        }
    }
}

impl SchemeConfig {
    pub fn to_scheme(&self, seed: u64) -> PulsingScheme {
        PulsingScheme {
            kind: self.kind,
            pri_s: self.pri_s,
            n_pulses: self.n_pulses,
            quadrant_offsets_rad: self.quadrant_offsets_rad,
            leakage_db: self.leakage_db,
            diversity: self.diversity,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    /// CSV of `azimuth_deg,dbz`; the step profile is used when absent.
    pub path: Option<PathBuf>,
    pub step: StepProfileSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    pub cut: Cut,
    pub grid: AngleGrid,
    pub steer: Direction,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            cut: Cut::Azimuth { elevation_deg: 0.0 },
            grid: AngleGrid::default(),
            steer: Direction::BORESIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    /// IQ CSV to process instead of simulating.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    pub label: String,
    pub hpbw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub beams: Vec<BeamConfig>,
    pub step_deg: f64,
    pub mode: ReconstructionMode,
    pub pulses: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            label: "beam".into(),
            hpbw_deg: 2.0,
        }
    }
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            beams: vec![
                BeamConfig {
                    label: "2deg".into(),
                    hpbw_deg: 2.0,
                },
                BeamConfig {
                    label: "1p5deg".into(),
                    hpbw_deg: 1.5,
                },
            ],
            step_deg: 1.0,
            mode: ReconstructionMode::PatternWeighting,
            pulses: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceConfig {
    pub n_list: Vec<usize>,
    pub trials: usize,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        VarianceConfig {
            n_list: vec![16, 32, 64, 128],
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanTimeConfig {
    pub sector_deg: f64,
    pub beamwidth_deg: f64,
    pub dwell_s: f64,
    pub beams: u32,
}

impl Default for ScanTimeConfig {
    fn default() -> Self {
        ScanTimeConfig {
            sector_deg: 90.0,
            beamwidth_deg: 1.5,
            dwell_s: 1e-3,
            beams: 2,
        }
    }
}

/// A configuration as loaded: the raw user document plus the typed result.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub user: Value,
    pub config: ScenarioConfig,
}

/// Reads the file (or starts from `{"schema_version": 1}`), applies
/// overrides and deserializes. Structural problems are config errors.
pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>, out: Option<&Path>) -> Result<LoadedConfig, CliError> {
    let mut user = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            if text.trim().is_empty() {
                return Err(CliError::Config(format!("{} is empty", p.display())));
            }
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: invalid JSON: {e}", p.display())))?
        }
        None => serde_json::json!({ "schema_version": SCHEMA_VERSION }),
    };
    if !user.is_object() {
        return Err(CliError::Config("configuration must be a JSON object".into()));
    }
    for o in overrides {
        apply_override(&mut user, o)?;
    }
    if let Some(s) = seed {
        user["seed"] = Value::from(s);
    }
    if let Some(o) = out {
        user["output_dir"] = Value::from(o.to_string_lossy().into_owned());
    }
    if user.get("schema_version").is_none() {
        return Err(CliError::Config("missing required key `schema_version`".into()));
    }

    let reference = serde_json::to_value(ScenarioConfig::default()).expect("default config serializes");
    let unknown = unknown_keys(&user, &reference, "");
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown configuration key(s): {}", unknown.join(", "))));
    }
    let config: ScenarioConfig = serde_json::from_value(user.clone())
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    Ok(LoadedConfig { user, config })
}

/// `a.b.c=value`; the value is parsed as JSON and falls back to a string.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("override {spec:?} has an empty key segment")));
    }
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => {
                return Err(CliError::Config(format!(
                    "override {key:?}: `{}` is not an object",
                    parts[..i].join(".")
                )))
            }
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("loop returns on the last segment")
}

/// Tagged enums whose fields depend on the variant; serde checks these.
const TAGGED_PATHS: [&str; 2] = ["taper", "pattern.cut"];

/// Dotted paths in `user` that the reference document does not have.
/// Only objects present in both are descended into, so leaves whose
/// default is `null` accept any content.
pub fn unknown_keys(user: &Value, reference: &Value, prefix: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let (Value::Object(u), Value::Object(r)) = (user, reference) {
        let tagged = TAGGED_PATHS.contains(&prefix);
        for (k, v) in u {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match r.get(k) {
                Some(rv) => out.extend(unknown_keys(v, rv, &path)),
                None if tagged => {}
                None => out.push(path),
            }
        }
    }
    out
}

/// Leaf paths of the effective configuration that the user did not set.
pub fn defaulted_fields(user: &Value, effective: &Value) -> Vec<String> {
    fn walk(user: Option<&Value>, eff: &Value, prefix: &str, out: &mut Vec<String>) {
        match eff {
            Value::Object(m) if !m.is_empty() => {
                for (k, v) in m {
                    let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(user.and_then(|u| u.get(k)), v, &path, out);
                }
            }
            _ => {
                if user.is_none() {
                    out.push(prefix.to_string());
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(Some(user), effective, "", &mut out);
    out
}

/// Every invariant violation, without running any computation.
pub fn violations(cfg: &ScenarioConfig) -> Vec<String> {
    let mut v = Vec::new();
    let mut push = |field: &str, msg: String| v.push(format!("{field}: {msg}"));

    if !(cfg.frequency_hz > 0.0 && cfg.frequency_hz.is_finite()) {
        push("frequency_hz", format!("must be positive, got {}", cfg.frequency_hz));
    }
    if !(cfg.radar_constant > 0.0 && cfg.radar_constant.is_finite()) {
        push("radar_constant", format!("must be positive, got {}", cfg.radar_constant));
    }
    if let Err(e) = build_planar_array(cfg.array.nx, cfg.array.ny, cfg.array.spacing_m) {
        push("array", e.to_string());
    } else {
        for (axis, n) in [("nx", cfg.array.nx), ("ny", cfg.array.ny)] {
            if let Err(e) = Taper::from_kind(cfg.taper, n) {
                push("taper", format!("{e} (array.{axis} = {n})"));
            }
        }
    }
    for msg in cfg.scheme.to_scheme(cfg.seed).violations() {
        push("scheme", msg);
    }
    if cfg.scheme.gates == 0 {
        push("scheme.gates", "must be at least 1".into());
    }
    for msg in cfg.scene.violations() {
        push("scene", msg);
    }
    if cfg.profile.path.is_none() {
        let s = &cfg.profile.step;
        if !(s.half_span_deg > 0.0) || s.block_stop_deg < s.block_start_deg {
            push("profile.step", "span must be positive and block_start_deg <= block_stop_deg".into());
        }
    }
    let g = &cfg.pattern.grid;
    if !(g.step_deg > 0.0) || g.stop_deg <= g.start_deg || g.start_deg < -90.0 || g.stop_deg > 90.0 {
        push("pattern.grid", "needs -90 <= start_deg < stop_deg <= 90 and step_deg > 0".into());
    }
    if cfg.reconstruct.beams.is_empty() {
        push("reconstruct.beams", "needs at least one beam".into());
    }
    for (i, b) in cfg.reconstruct.beams.iter().enumerate() {
        if !(b.hpbw_deg > 0.0) {
            push(&format!("reconstruct.beams[{i}].hpbw_deg"), format!("must be positive, got {}", b.hpbw_deg));
        }
        if b.label.is_empty() || b.label.contains(|c: char| c == ',' || c.is_whitespace()) {
            push(&format!("reconstruct.beams[{i}].label"), "must be non-empty without commas or spaces".into());
        }
    }
    if !(cfg.reconstruct.step_deg > 0.0) {
        push("reconstruct.step_deg", "must be positive".into());
    }
    if cfg.reconstruct.pulses < 8 {
        push("reconstruct.pulses", "must be at least 8".into());
    }
    if cfg.variance.trials < 100 {
        push("variance.trials", format!("must be at least 100, got {}", cfg.variance.trials));
    }
    if cfg.variance.n_list.is_empty() || cfg.variance.n_list.contains(&0) {
        push("variance.n_list", "needs positive sample counts".into());
    }
    let s = &cfg.scantime;
    if !(s.sector_deg > 0.0 && s.beamwidth_deg > 0.0 && s.dwell_s > 0.0) || s.beams == 0 {
        push("scantime", "sector_deg, beamwidth_deg, dwell_s and beams must be positive".into());
    }
    v.extend(missing_files(cfg));
    v
}

/// Referenced input files that do not exist.
pub fn missing_files(cfg: &ScenarioConfig) -> Vec<String> {
    let mut v = Vec::new();
    for (field, path) in [("profile.path", &cfg.profile.path), ("moments.input", &cfg.moments.input)] {
        if let Some(p) = path {
            if !p.is_file() {
                v.push(format!("{field}: file {} does not exist", p.display()));
            }
        }
    }
    v
}
