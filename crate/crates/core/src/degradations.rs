//! Operator catalog, parameter schedules and application of single
//! degradations and chains.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::ops::{blur, codec, noise, photometric as ph, sensor, spatial, weather, OpContext, OpFn};
use crate::rng::{RngStream, StreamId};
use crate::taxonomy::Backend;

pub const LEVELS: usize = 5;
pub const ASSETS_ENV: &str = "IMDEG_ASSETS";
const ASSET_BACKED: &[(Backend, &str)] = &[(Backend::Hendrycks, "frost")];
pub const SHIPPED_SCHEDULE: &str = include_str!("../data/schedules.toml");

/// Static description of one operator implementation.
pub struct OperatorDef {
    pub backend: Backend,
    pub key: &'static str,
    /// Alternative spellings, e.g. the backend's own short names.
    pub aliases: &'static [&'static str],
    pub name: &'static str,
    /// 1 = core, 2 = feature-gated or asset-backed.
    pub tier: u8,
    pub stochastic: bool,
    /// Designated nonincreasing in PSNR across native levels.
    pub monotone: bool,
    /// Parameters per schedule level.
    pub arity: usize,
    pub apply: OpFn,
}

impl fmt::Debug for OperatorDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorDef")
            .field("backend", &self.backend)
            .field("key", &self.key)
            .field("tier", &self.tier)
            .finish_non_exhaustive()
    }
}

impl OperatorDef {
    pub fn available(&self) -> bool {
        self.tier == 1 || cfg!(feature = "tier2")
    }

    /// Needs files from the asset directory at apply time.
    pub fn needs_assets(&self) -> bool {
        ASSET_BACKED.contains(&(self.backend, self.key))
    }
}

macro_rules! op {
    ($b:ident, $key:literal, $name:literal, $f:path, arity $n:literal, tier $t:literal $(, $flag:ident)* $(; aliases $($a:literal),+)?) => {
        OperatorDef {
            backend: Backend::$b,
            key: $key,
            aliases: &[$($($a),+)?],
            name: $name,
            tier: $t,
            stochastic: op!(@has stochastic $($flag)*),
            monotone: op!(@has monotone $($flag)*),
            arity: $n,
            apply: $f,
        }
    };
    (@has $want:ident) => { false };
    (@has stochastic stochastic $($rest:ident)*) => { true };
    (@has monotone monotone $($rest:ident)*) => { true };
    (@has $want:ident $other:ident $($rest:ident)*) => { op!(@has $want $($rest)*) };
}

static CATALOG: &[OperatorDef] = &[
    // hendrycks
    op!(Hendrycks, "gaussian_noise", "Gaussian Noise", noise::gaussian, arity 1, tier 1, stochastic, monotone),
    op!(Hendrycks, "shot_noise", "Shot Noise", noise::shot, arity 1, tier 1, stochastic, monotone),
    op!(Hendrycks, "impulse_noise", "Impulse Noise", noise::impulse, arity 1, tier 1, stochastic, monotone),
    op!(Hendrycks, "defocus_blur", "Defocus Blur", blur::defocus, arity 2, tier 1, monotone),
    op!(Hendrycks, "glass_blur", "Glass Blur", blur::glass, arity 3, tier 2, stochastic),
    op!(Hendrycks, "motion_blur", "Motion Blur", blur::motion_trail, arity 2, tier 1, stochastic, monotone),
    op!(Hendrycks, "zoom_blur", "Zoom Blur", blur::zoom, arity 3, tier 1, monotone),
    op!(Hendrycks, "fog", "Fog", weather::fog_plasma, arity 2, tier 1, stochastic),
    op!(Hendrycks, "snow", "Snow", weather::snow, arity 7, tier 2, stochastic),
    op!(Hendrycks, "frost", "Frost", weather::frost, arity 2, tier 2, stochastic),
    op!(Hendrycks, "brightness", "Brightness", ph::brightness, arity 1, tier 1),
    op!(Hendrycks, "contrast", "Contrast", ph::contrast, arity 1, tier 1),
    op!(Hendrycks, "jpeg_compression", "JPEG", codec::jpeg, arity 1, tier 1, monotone; aliases "jpeg"),
    op!(Hendrycks, "pixelate", "Pixelate", spatial::pixelate, arity 1, tier 1, monotone),
    op!(Hendrycks, "elastic_transform", "Elastic", spatial::elastic, arity 3, tier 1, stochastic; aliases "elastic"),
    op!(Hendrycks, "speckle_noise", "Speckle Noise", noise::speckle, arity 1, tier 1, stochastic, monotone),
    op!(Hendrycks, "gaussian_blur", "Gaussian Blur", blur::gaussian, arity 1, tier 1, monotone),
    op!(Hendrycks, "spatter", "Spatter", weather::spatter, arity 6, tier 2, stochastic),
    op!(Hendrycks, "saturate", "Saturate", ph::saturate, arity 2, tier 1),
    // arniqa
    op!(Arniqa, "gaussian_blur", "Gaussian Blur", blur::gaussian, arity 1, tier 1, monotone; aliases "gaublur"),
    op!(Arniqa, "lens_blur", "Lens Blur", blur::lens, arity 1, tier 2, monotone; aliases "lensblur"),
    op!(Arniqa, "motion_blur", "Motion Blur", blur::motion_line, arity 1, tier 1, stochastic, monotone; aliases "motionblur"),
    op!(Arniqa, "white_noise", "White Noise", noise::white, arity 1, tier 1, stochastic, monotone; aliases "whitenoise"),
    op!(Arniqa, "white_noise_color_component", "White Noise in Color Component", noise::chroma, arity 1, tier 1, stochastic, monotone; aliases "whitenoisecc"),
    op!(Arniqa, "impulse_noise", "Impulse Noise", noise::impulse, arity 1, tier 1, stochastic, monotone; aliases "impulsenoise"),
    op!(Arniqa, "multiplicative_noise", "Multiplicative Noise", noise::multiplicative, arity 1, tier 1, stochastic, monotone; aliases "multnoise"),
    op!(Arniqa, "brighten", "Brighten", ph::brighten, arity 1, tier 1, monotone),
    op!(Arniqa, "darken", "Darken", ph::darken, arity 1, tier 1, monotone),
    op!(Arniqa, "mean_shift", "Mean Shift", ph::offset, arity 1, tier 1; aliases "meanshift"),
    op!(Arniqa, "color_diffusion", "Color Diffusion", ph::color_diffusion, arity 1, tier 2; aliases "colordiff", "colordiffusion"),
    op!(Arniqa, "color_shift", "Color Shift", ph::color_shift, arity 1, tier 1, stochastic; aliases "colorshift"),
    op!(Arniqa, "color_saturation_1", "Color Saturation 1", ph::saturation_hsv, arity 1, tier 1; aliases "colorsat1"),
    op!(Arniqa, "color_saturation_2", "Color Saturation 2", ph::saturation_lab, arity 1, tier 1; aliases "colorsat2"),
    op!(Arniqa, "jpeg", "JPEG", codec::jpeg, arity 1, tier 1, monotone),
    op!(Arniqa, "jpeg2000", "JPEG2000", codec::jpeg2000, arity 1, tier 2),
    op!(Arniqa, "jitter", "Jitter", spatial::jitter, arity 1, tier 1, stochastic),
    op!(Arniqa, "non_eccentricity_patch", "Non-Eccentricity Patch", spatial::non_eccentricity_patch, arity 1, tier 2, stochastic; aliases "noneccpatch"),
    op!(Arniqa, "pixelate", "Pixelate", spatial::pixelate, arity 1, tier 1, monotone),
    op!(Arniqa, "quantization", "Quantization", ph::quantize, arity 1, tier 1),
    op!(Arniqa, "color_block", "Color Block", spatial::color_block, arity 2, tier 1, stochastic; aliases "colorblock"),
    op!(Arniqa, "high_sharpen", "High Sharpen", blur::high_sharpen, arity 2, tier 1; aliases "highsharpen"),
    op!(Arniqa, "linear_contrast_change", "Linear Contrast Change", ph::linear_contrast, arity 1, tier 1; aliases "lincontrchange"),
    op!(Arniqa, "nonlinear_contrast_change", "Non-linear Contrast Change", ph::nonlinear_contrast, arity 1, tier 1; aliases "nonlincontrchange"),
    // liu
    op!(Liu, "fog", "Fog", weather::fog_scattering, arity 2, tier 1, stochastic),
    op!(Liu, "lens_obstruction", "Lens Obstruction", spatial::lens_obstruction, arity 3, tier 1, stochastic),
    op!(Liu, "focus_motor_damage", "Focus Motor Damage", blur::defocus, arity 2, tier 1, monotone),
    op!(Liu, "ccd_sensor_damage", "CCD Sensor Damage", sensor::ccd, arity 2, tier 1, stochastic),
    op!(Liu, "cmos_sensor_damage", "CMOS Sensor Damage", sensor::cmos, arity 2, tier 1, stochastic),
    op!(Liu, "insufficient_black_level", "Insufficient Black Level", ph::black_level_insufficient, arity 1, tier 1),
    op!(Liu, "excessive_black_level", "Excessive Black Level", ph::black_level_excessive, arity 1, tier 1),
    op!(Liu, "lens_shading_damage", "Lens Shading Damage", ph::lens_shading, arity 1, tier 1),
    op!(Liu, "awb_damage", "AWB Damage", ph::awb, arity 2, tier 1),
    op!(Liu, "bad_pixel_correction_damage", "Bad Pixel Correction Damage", sensor::bad_pixels, arity 2, tier 1, stochastic),
    op!(Liu, "cfa_interpolation_damage", "CFA Interpolation Damage", spatial::cfa_interpolation, arity 1, tier 2),
    op!(Liu, "gamma_correction_damage", "Gamma Correction Damage", ph::gamma, arity 1, tier 1),
    op!(Liu, "color_space_conversion_damage", "Color Space Conversion Damage", ph::color_matrix, arity 1, tier 1, stochastic),
    op!(Liu, "sensor_broken", "Sensor Broken", spatial::sensor_broken, arity 1, tier 1, stochastic),
    op!(Liu, "memory_exceptions", "Memory Exceptions", spatial::memory_exceptions, arity 1, tier 1, stochastic),
    op!(Liu, "transfer_harness_exceptions", "Transfer Harness Exceptions", spatial::transfer_harness, arity 2, tier 1, stochastic),
];

/// Every operator implementation, in registry order.
pub fn catalog() -> &'static [OperatorDef] {
    CATALOG
}

fn normalize(term: &str) -> String {
    term.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

/// Resolves a term or one of its aliases to the canonical operator key.
pub fn canonical_term(backend: Backend, term: &str) -> Option<&'static str> {
    let t = normalize(term);
    let squashed = t.replace('_', "");
    CATALOG
        .iter()
        .filter(|d| d.backend == backend)
        .find(|d| d.key == t || d.aliases.iter().any(|a| *a == t || *a == squashed))
        .map(|d| d.key)
}

pub fn find_operator(backend: Backend, term: &str) -> Result<&'static OperatorDef> {
    canonical_term(backend, term)
        .and_then(|key| CATALOG.iter().find(|d| d.backend == backend && d.key == key))
        .ok_or_else(|| Error::NotFound(format!("operator '{term}' in backend {backend}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub backend: Backend,
    pub term: String,
    pub levels: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ScheduleFile {
    version: String,
    #[serde(default, rename = "operator")]
    operators: Vec<ScheduleRecord>,
}

/// Problems found when checking a schedule against the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleIssue {
    Missing { backend: Backend, term: String },
    Duplicate { backend: Backend, term: String },
    Unknown { backend: Backend, term: String },
    LevelCount { backend: Backend, term: String, found: usize },
    Arity { backend: Backend, term: String, level: usize, expected: usize, found: usize },
    NonFinite { backend: Backend, term: String, level: usize },
}

impl fmt::Display for ScheduleIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleIssue::Missing { backend, term } => write!(f, "schedule: no record for {backend}/{term}"),
            ScheduleIssue::Duplicate { backend, term } => write!(f, "schedule: duplicate record for {backend}/{term}"),
            ScheduleIssue::Unknown { backend, term } => write!(f, "schedule: {backend}/{term} is not a known operator"),
            ScheduleIssue::LevelCount { backend, term, found } => {
                write!(f, "schedule: {backend}/{term} has {found} levels, expected {LEVELS}")
            }
            ScheduleIssue::Arity { backend, term, level, expected, found } => write!(
                f,
                "schedule: {backend}/{term} level {level} has {found} parameters, expected {expected}"
            ),
            ScheduleIssue::NonFinite { backend, term, level } => {
                write!(f, "schedule: {backend}/{term} level {level} has a non-finite parameter")
            }
        }
    }
}

/// Versioned per-operator parameter schedules.
#[derive(Debug, Clone)]
pub struct Schedule {
    version: String,
    digest: String,
    records: Vec<ScheduleRecord>,
    index: BTreeMap<(Backend, String), usize>,
}

impl Schedule {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScheduleFile = toml::from_str(text).map_err(|e| Error::Parse {
            origin: "schedule".into(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count()),
            message: e.message().to_string(),
        })?;
        let mut index = BTreeMap::new();
        for (i, r) in file.operators.iter().enumerate() {
            index.entry((r.backend, r.term.clone())).or_insert(i);
        }
        Ok(Schedule {
            version: file.version,
            digest: hex::encode(Sha256::digest(text.as_bytes())),
            records: file.operators,
            index,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The schedule compiled into the library.
    pub fn shipped() -> &'static Schedule {
        static SHIPPED: OnceLock<Schedule> = OnceLock::new();
        SHIPPED.get_or_init(|| Schedule::parse(SHIPPED_SCHEDULE).expect("shipped schedule parses"))
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// SHA-256 of the schedule text, hex encoded.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn records(&self) -> &[ScheduleRecord] {
        &self.records
    }

    pub fn levels(&self, backend: Backend, key: &str) -> Option<&[Vec<f64>]> {
        self.index
            .get(&(backend, key.to_string()))
            .map(|&i| self.records[i].levels.as_slice())
    }

    pub fn params(&self, backend: Backend, key: &str, severity: u8) -> Result<&[f64]> {
        let levels = self
            .levels(backend, key)
            .ok_or_else(|| Error::NotFound(format!("schedule for {backend}/{key}")))?;
        levels
            .get(usize::from(severity).wrapping_sub(1))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Argument(format!("{backend}/{key} has no level {severity}")))
    }

    /// Checks the schedule against `operators`.
    pub fn validate(&self, operators: &[OperatorDef]) -> Vec<ScheduleIssue> {
        let mut issues = Vec::new();
        let mut seen = HashSet::new();
        for r in &self.records {
            let (backend, term) = (r.backend, r.term.clone());
            if !seen.insert((backend, term.clone())) {
                issues.push(ScheduleIssue::Duplicate { backend, term });
                continue;
            }
            let Some(def) = operators.iter().find(|d| d.backend == backend && d.key == term) else {
                issues.push(ScheduleIssue::Unknown { backend, term });
                continue;
            };
            if r.levels.len() != LEVELS {
                issues.push(ScheduleIssue::LevelCount {
                    backend,
                    term: term.clone(),
                    found: r.levels.len(),
                });
            }
            for (i, lv) in r.levels.iter().enumerate() {
                if lv.len() != def.arity {
                    issues.push(ScheduleIssue::Arity {
                        backend,
                        term: term.clone(),
                        level: i + 1,
                        expected: def.arity,
                        found: lv.len(),
                    });
                }
                if lv.iter().any(|v| !v.is_finite()) {
                    issues.push(ScheduleIssue::NonFinite {
                        backend,
                        term: term.clone(),
                        level: i + 1,
                    });
                }
            }
        }
        for d in operators {
            if !seen.contains(&(d.backend, d.key.to_string())) {
                issues.push(ScheduleIssue::Missing {
                    backend: d.backend,
                    term: d.key.to_string(),
                });
            }
        }
        issues
    }
}

/// Public view of one operator together with its schedule.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorDescriptor {
    pub backend: Backend,
    pub key: String,
    pub name: String,
    pub tier: u8,
    pub stochastic: bool,
    pub monotone: bool,
    pub needs_assets: bool,
    pub schedule: Vec<Vec<f64>>,
}

/// Operators of `backend` enabled in this build, in registry order.
pub fn list_operators(backend: Backend) -> Vec<OperatorDescriptor> {
    list_operators_with(backend, Schedule::shipped())
}

pub fn list_operators_with(backend: Backend, schedule: &Schedule) -> Vec<OperatorDescriptor> {
    CATALOG
        .iter()
        .filter(|d| d.backend == backend && d.available())
        .map(|d| OperatorDescriptor {
            backend,
            key: d.key.to_string(),
            name: d.name.to_string(),
            tier: d.tier,
            stochastic: d.stochastic,
            monotone: d.monotone,
            needs_assets: d.needs_assets(),
            schedule: schedule.levels(backend, d.key).map(<[_]>::to_vec).unwrap_or_default(),
        })
        .collect()
}

/// One operator application at a native severity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub backend: Backend,
    pub term: String,
    pub severity: u8,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn new(backend: Backend, term: impl Into<String>, severity: u8, seed: u64) -> Result<Self> {
        let spec = DegradationSpec {
            backend,
            term: term.into(),
            severity,
            seed,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if !(1..=LEVELS as u8).contains(&self.severity) {
            return Err(Error::Argument(format!(
                "severity {} outside 1..={LEVELS}",
                self.severity
            )));
        }
        find_operator(self.backend, &self.term).map(|_| ())
    }
}

/// Ordered, non-empty list of specs applied left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<DegradationSpec>", into = "Vec<DegradationSpec>")]
pub struct ChainSpec(Vec<DegradationSpec>);

impl ChainSpec {
    pub fn new(specs: Vec<DegradationSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Argument("empty degradation chain".into()));
        }
        Ok(ChainSpec(specs))
    }

    pub fn single(spec: DegradationSpec) -> Self {
        ChainSpec(vec![spec])
    }

    pub fn specs(&self) -> &[DegradationSpec] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<DegradationSpec>> for ChainSpec {
    type Error = Error;

    fn try_from(v: Vec<DegradationSpec>) -> Result<Self> {
        ChainSpec::new(v)
    }
}

impl From<ChainSpec> for Vec<DegradationSpec> {
    fn from(c: ChainSpec) -> Self {
        c.0
    }
}

/// Applies operators using a schedule and an optional asset directory.
#[derive(Debug, Clone)]
pub struct Degrader<'s> {
    schedule: &'s Schedule,
    assets: Option<PathBuf>,
}

impl Degrader<'static> {
    /// Shipped schedule; assets from `IMDEG_ASSETS` when set.
    pub fn shipped() -> Self {
        Degrader {
            schedule: Schedule::shipped(),
            assets: std::env::var_os(ASSETS_ENV).map(PathBuf::from),
        }
    }
}

impl<'s> Degrader<'s> {
    pub fn new(schedule: &'s Schedule, assets: Option<PathBuf>) -> Self {
        Degrader { schedule, assets }
    }

    pub fn schedule(&self) -> &Schedule {
        self.schedule
    }

    pub fn assets(&self) -> Option<&Path> {
        self.assets.as_deref()
    }

    /// Applies `spec` drawing randomness from stream `id`.
    pub fn apply_with_stream(&self, img: &Image, spec: &DegradationSpec, id: StreamId) -> Result<Image> {
        if !(1..=LEVELS as u8).contains(&spec.severity) {
            return Err(Error::Argument(format!("severity {} outside 1..={LEVELS}", spec.severity)));
        }
        let def = find_operator(spec.backend, &spec.term)?;
        if !def.available() {
            return Err(Error::UnavailableFeature(format!(
                "{}/{} needs the tier2 feature",
                def.backend, def.key
            )));
        }
        let params = self.schedule.params(def.backend, def.key, spec.severity)?;
        if params.len() != def.arity {
            return Err(Error::Argument(format!(
                "{}/{} expects {} parameters, schedule has {}",
                def.backend,
                def.key,
                def.arity,
                params.len()
            )));
        }
        let mut cx = OpContext {
            rng: RngStream::new(spec.seed, id),
            assets: self.assets.as_deref(),
        };
        let out = (def.apply)(img, params, &mut cx)?;
        debug_assert!(out.same_shape(img));
        Ok(out.clamp())
    }

    /// Applies `spec` for the image named `image_id`, chain position 0.
    pub fn apply(&self, img: &Image, spec: &DegradationSpec, image_id: &str) -> Result<Image> {
        self.apply_with_stream(img, spec, StreamId::for_image(image_id, 0))
    }

    /// Left fold of the chain; slot `i` draws from stream position `i`.
    pub fn apply_chain(&self, img: &Image, chain: &ChainSpec, image_id: &str) -> Result<Image> {
        let base = StreamId::for_image(image_id, 0);
        let mut cur = img.clone();
        for (pos, spec) in chain.specs().iter().enumerate() {
            cur = self.apply_with_stream(&cur, spec, base.at_position(pos as u32))?;
        }
        Ok(cur)
    }
}

/// Applies one spec with the shipped schedule and an anonymous image id.
pub fn apply_degradation(img: &Image, spec: &DegradationSpec) -> Result<Image> {
    Degrader::shipped().apply(img, spec, "")
}

/// Applies a chain with the shipped schedule and an anonymous image id.
pub fn apply_chain(img: &Image, chain: &ChainSpec) -> Result<Image> {
    Degrader::shipped().apply_chain(img, chain, "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{validate_registry, Registry};

    fn textured() -> Image {
        Image::from_fn(48, 40, |x, y, c| {
            let v = ((x as f32 * 0.37).sin() + (y as f32 * 0.23 + c as f32).cos()) * 0.25 + 0.5;
            v.clamp(0.0, 1.0)
        })
    }

    #[test]
    fn catalog_counts() {
        let count = |b| CATALOG.iter().filter(|d| d.backend == b).count();
        assert_eq!(count(Backend::Hendrycks), 19);
        assert_eq!(count(Backend::Arniqa), 24);
        assert_eq!(count(Backend::Liu), 16);
    }

    #[test]
    fn keys_unique_per_backend() {
        let mut seen = HashSet::new();
        for d in CATALOG {
            assert!(seen.insert((d.backend, d.key)), "{}/{}", d.backend, d.key);
        }
    }

    #[test]
    fn shipped_schedule_is_clean() {
        let issues = Schedule::shipped().validate(CATALOG);
        assert!(issues.is_empty(), "{issues:?}");
        assert_eq!(Schedule::shipped().version(), "1");
        assert_eq!(Schedule::shipped().digest().len(), 64);
    }

    #[test]
    fn shipped_registry_covers_catalog() {
        let v = validate_registry(&Registry::shipped());
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn schedule_problems_are_reported() {
        let text = r#"
version = "x"
[[operator]]
backend = "hendrycks"
term = "gaussian_noise"
levels = [[0.1], [0.2], [0.3], [0.4]]
[[operator]]
backend = "hendrycks"
term = "gaussian_noise"
levels = [[0.1], [0.2], [0.3], [0.4], [0.5]]
[[operator]]
backend = "hendrycks"
term = "defocus_blur"
levels = [[1.0], [2.0, 0.5], [3.0, 0.5], [4.0, 0.5], [5.0, 0.5]]
"#;
        let s = Schedule::parse(text).unwrap();
        let ops: Vec<OperatorDef> = Vec::new();
        assert_eq!(s.validate(&ops).len(), 3); // dup + 2 unknown
        let issues = s.validate(CATALOG);
        assert!(issues.contains(&ScheduleIssue::LevelCount {
            backend: Backend::Hendrycks,
            term: "gaussian_noise".into(),
            found: 4
        }));
        assert!(issues.contains(&ScheduleIssue::Duplicate {
            backend: Backend::Hendrycks,
            term: "gaussian_noise".into()
        }));
        assert!(issues.iter().any(|i| matches!(i, ScheduleIssue::Arity { level: 1, .. })));
        assert!(issues.iter().any(|i| matches!(i, ScheduleIssue::Missing { .. })));
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(canonical_term(Backend::Arniqa, "gaublur"), Some("gaussian_blur"));
        assert_eq!(canonical_term(Backend::Arniqa, "whitenoiseCC"), Some("white_noise_color_component"));
        assert_eq!(canonical_term(Backend::Arniqa, "Gaussian-Blur"), Some("gaussian_blur"));
        assert_eq!(canonical_term(Backend::Liu, "gaublur"), None);
    }

    #[test]
    fn severity_bounds() {
        assert!(DegradationSpec::new(Backend::Hendrycks, "gaussian_noise", 0, 1).is_err());
        assert!(DegradationSpec::new(Backend::Hendrycks, "gaussian_noise", 6, 1).is_err());
        assert!(matches!(
            DegradationSpec::new(Backend::Hendrycks, "nope", 1, 1),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn every_operator_preserves_shape_and_range() {
        let img = textured();
        let d = Degrader::new(Schedule::shipped(), None);
        for def in CATALOG.iter().filter(|d| d.available()) {
            for level in 1..=5 {
                let spec = DegradationSpec::new(def.backend, def.key, level, 3).unwrap();
                match d.apply(&img, &spec, "img") {
                    Ok(out) => {
                        assert_eq!(out.dimensions(), img.dimensions(), "{}", def.key);
                        assert!(out.data().iter().all(|s| (0.0..=1.0).contains(s)), "{}", def.key);
                    }
                    Err(Error::UnavailableFeature(_)) => assert_eq!(def.key, "frost"),
                    Err(e) => panic!("{}/{}: {e}", def.backend, def.key),
                }
            }
        }
    }

    #[test]
    fn deterministic_operators_ignore_seed() {
        let img = textured();
        let d = Degrader::new(Schedule::shipped(), None);
        for def in CATALOG.iter().filter(|d| !d.stochastic && d.available()) {
            let a = d.apply(&img, &DegradationSpec::new(def.backend, def.key, 3, 1).unwrap(), "a").unwrap();
            let b = d.apply(&img, &DegradationSpec::new(def.backend, def.key, 3, 2).unwrap(), "b").unwrap();
            assert_eq!(a, b, "{}/{}", def.backend, def.key);
        }
    }

    #[test]
    fn stochastic_operators_follow_seed() {
        let img = textured();
        let d = Degrader::new(Schedule::shipped(), None);
        for def in CATALOG.iter().filter(|d| d.stochastic && d.available() && d.key != "frost") {
            let a = d.apply(&img, &DegradationSpec::new(def.backend, def.key, 5, 1).unwrap(), "a").unwrap();
            let a2 = d.apply(&img, &DegradationSpec::new(def.backend, def.key, 5, 1).unwrap(), "a").unwrap();
            let b = d.apply(&img, &DegradationSpec::new(def.backend, def.key, 5, 2).unwrap(), "a").unwrap();
            assert_eq!(a, a2, "{}/{}", def.backend, def.key);
            assert_ne!(a, b, "{}/{}", def.backend, def.key);
        }
    }

    #[test]
    fn repeated_noise_in_chain_uses_distinct_streams() {
        let img = Image::filled(16, 16, [0.5; 3]);
        let spec = DegradationSpec::new(Backend::Hendrycks, "gaussian_noise", 1, 7).unwrap();
        let once = apply_degradation(&img, &spec).unwrap();
        let twice = apply_chain(&img, &ChainSpec::new(vec![spec.clone(), spec.clone()]).unwrap()).unwrap();
        assert_ne!(once, twice);
        let single = apply_chain(&img, &ChainSpec::single(spec.clone())).unwrap();
        assert_eq!(single, once);
    }
}
