//! Cause × effect degradation taxonomy.
//!
//! Each degradation is labelled with the pipeline stage it originates from
//! ([`Cause`]) and its dominant visual manifestation ([`Effect`]). Twelve
//! (cause, effect) combinations form the canonical groups G1..G12; G12 is
//! further split into temporal/video subtypes.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degradation family a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// ImageNet-C style corruption benchmark operators.
    Hendrycks,
    /// IQA distortions of the ARNIQA / KADID-10k family.
    Arniqa,
    /// Real-camera and system-level failures.
    Liu,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Hendrycks, Backend::Arniqa, Backend::Liu];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Hendrycks => "hendrycks",
            Backend::Arniqa => "arniqa",
            Backend::Liu => "liu",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hendrycks" | "hendrycks_iclr_2019" | "imagenet-c" => Ok(Backend::Hendrycks),
            "arniqa" | "agnolucci_wacv_2024" | "kadid" => Ok(Backend::Arniqa),
            "liu" | "liu_ijcv_2024" => Ok(Backend::Liu),
            other => Err(Error::NotFound(format!("backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cause {
    /// Environment
    E,
    /// Sensor / optics
    S,
    /// ISP / renderer / codec
    R,
    /// Transfer / system
    T,
}

impl Cause {
    pub const ALL: [Cause; 4] = [Cause::E, Cause::S, Cause::R, Cause::T];

    pub fn code(self) -> &'static str {
        match self {
            Cause::E => "E",
            Cause::S => "S",
            Cause::R => "R",
            Cause::T => "T",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cause::E => "Environment",
            Cause::S => "Sensor/Optics",
            Cause::R => "ISP/Renderer/Codec",
            Cause::T => "Transfer/System",
        }
    }
}

impl FromStr for Cause {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "E" => Ok(Cause::E),
            "S" => Ok(Cause::S),
            "R" => Ok(Cause::R),
            "T" => Ok(Cause::T),
            other => Err(Error::Argument(format!("unknown cause code '{other}'"))),
        }
    }
}

/// A cause, optionally mixed with a secondary one (`S/R`). The first element
/// is dominant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CauseLabel {
    pub dominant: Cause,
    pub secondary: Option<Cause>,
}

impl CauseLabel {
    pub fn single(cause: Cause) -> Self {
        CauseLabel {
            dominant: cause,
            secondary: None,
        }
    }

    pub fn contains(&self, cause: Cause) -> bool {
        self.dominant == cause || self.secondary == Some(cause)
    }
}

impl fmt::Display for CauseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.secondary {
            Some(s) => write!(f, "{}/{}", self.dominant.code(), s.code()),
            None => f.write_str(self.dominant.code()),
        }
    }
}

impl FromStr for CauseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((a, b)) => {
                let (dominant, secondary) = (a.parse()?, b.parse()?);
                if dominant == secondary {
                    return Err(Error::Argument(format!("repeated cause in '{s}'")));
                }
                Ok(CauseLabel {
                    dominant,
                    secondary: Some(secondary),
                })
            }
            None => Ok(CauseLabel::single(s.parse()?)),
        }
    }
}

impl Serialize for CauseLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CauseLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Effect {
    /// Noise
    N,
    /// Blur
    B,
    /// Weather / medium
    WX,
    /// Compression / quantization
    CP,
    /// Color / white balance
    CL,
    /// Illumination / exposure
    IL,
    /// Geometry / spatial
    GD,
    /// Resolution / sampling
    RZ,
    /// Occlusion / obstruction
    OC,
    /// Texture / sharpness / contrast
    TX,
    /// Temporal / video
    TV,
}

impl Effect {
    pub const ALL: [Effect; 11] = [
        Effect::N,
        Effect::B,
        Effect::WX,
        Effect::CP,
        Effect::CL,
        Effect::IL,
        Effect::GD,
        Effect::RZ,
        Effect::OC,
        Effect::TX,
        Effect::TV,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Effect::N => "N",
            Effect::B => "B",
            Effect::WX => "WX",
            Effect::CP => "CP",
            Effect::CL => "CL",
            Effect::IL => "IL",
            Effect::GD => "GD",
            Effect::RZ => "RZ",
            Effect::OC => "OC",
            Effect::TX => "TX",
            Effect::TV => "TV",
        }
    }
}

impl FromStr for Effect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Effect::ALL
            .into_iter()
            .find(|e| e.code() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown effect code '{s}'")))
    }
}

/// Parses an effect column where `--` (or empty) means "no effect code".
pub fn parse_effect(s: &str) -> Result<Option<Effect>> {
    match s.trim() {
        "--" | "" | "none" => Ok(None),
        other => other.parse().map(Some),
    }
}

/// Canonical group number, 1..=12 for valid groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(pub u8);

impl GroupId {
    pub fn is_valid(self) -> bool {
        (1..=12).contains(&self.0)
    }

    pub fn group(self) -> Option<&'static CanonicalGroup> {
        GROUPS.iter().find(|g| g.id == self)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.0)
    }
}

impl FromStr for GroupId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        t.strip_prefix('G')
            .and_then(|n| n.parse::<u8>().ok())
            .map(GroupId)
            .ok_or_else(|| Error::Argument(format!("malformed group id '{t}'")))
    }
}

impl Serialize for GroupId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Primary source of a group; G12 admits any source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupCause {
    Fixed(Cause),
    Variable,
}

impl GroupCause {
    pub fn admits(self, cause: Cause) -> bool {
        match self {
            GroupCause::Fixed(c) => c == cause,
            GroupCause::Variable => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalGroup {
    pub id: GroupId,
    pub name: &'static str,
    pub primary_cause: GroupCause,
    /// `None` for G11, which has no effect code.
    pub primary_effect: Option<Effect>,
    pub description: &'static str,
}

pub static GROUPS: [CanonicalGroup; 12] = [
    CanonicalGroup {
        id: GroupId(1),
        name: "Noise",
        primary_cause: GroupCause::Fixed(Cause::S),
        primary_effect: Some(Effect::N),
        description: "Stochastic or defective sensor/ISP signals (Gaussian, shot, impulse, speckle, bad pixels).",
    },
    CanonicalGroup {
        id: GroupId(2),
        name: "Blur",
        primary_cause: GroupCause::Fixed(Cause::S),
        primary_effect: Some(Effect::B),
        description: "Per-frame focus, motion, zoom or glass-scattering blur.",
    },
    CanonicalGroup {
        id: GroupId(3),
        name: "Resolution / Sampling",
        primary_cause: GroupCause::Fixed(Cause::R),
        primary_effect: Some(Effect::RZ),
        description: "Down/upsampling, scaling, pixelation and other sampling-related resolution changes.",
    },
    CanonicalGroup {
        id: GroupId(4),
        name: "Compression / Quantization",
        primary_cause: GroupCause::Fixed(Cause::R),
        primary_effect: Some(Effect::CP),
        description: "Lossy codec artefacts and quantization (JPEG, H.264/HEVC, banding, blocking, bit loss).",
    },
    CanonicalGroup {
        id: GroupId(5),
        name: "Color / White balance",
        primary_cause: GroupCause::Fixed(Cause::R),
        primary_effect: Some(Effect::CL),
        description: "White balance, color space conversion and saturation changes.",
    },
    CanonicalGroup {
        id: GroupId(6),
        name: "Brightness / Exposure",
        primary_cause: GroupCause::Fixed(Cause::R),
        primary_effect: Some(Effect::IL),
        description: "Brightness, gamma, black-level, vignetting and low-light processing.",
    },
    CanonicalGroup {
        id: GroupId(7),
        name: "Geometry / Spatial",
        primary_cause: GroupCause::Fixed(Cause::R),
        primary_effect: Some(Effect::GD),
        description: "Per-frame geometric distortions (elastic, rotate, translate, scale, tilt, demosaicing artefacts).",
    },
    CanonicalGroup {
        id: GroupId(8),
        name: "Weather / Medium",
        primary_cause: GroupCause::Fixed(Cause::E),
        primary_effect: Some(Effect::WX),
        description: "Fog, snow, frost, spatter and other medium/weather-induced degradations.",
    },
    CanonicalGroup {
        id: GroupId(9),
        name: "Occlusion / Obstruction",
        primary_cause: GroupCause::Fixed(Cause::E),
        primary_effect: Some(Effect::OC),
        description: "Lens obstruction, dirt, droplets, or other occluding objects.",
    },
    CanonicalGroup {
        id: GroupId(10),
        name: "Sharpness / Contrast / Texture",
        primary_cause: GroupCause::Fixed(Cause::R),
        primary_effect: Some(Effect::TX),
        description: "Global or local sharpening and contrast operators, tone mapping, structure enhancement.",
    },
    CanonicalGroup {
        id: GroupId(11),
        name: "System / Transfer / Board",
        primary_cause: GroupCause::Fixed(Cause::T),
        primary_effect: None,
        description: "System- and board-level failures in the data path (sync, memory, transfer harness).",
    },
    CanonicalGroup {
        id: GroupId(12),
        name: "Temporal / Video",
        primary_cause: GroupCause::Variable,
        primary_effect: Some(Effect::TV),
        description: "Purely temporal artefacts such as flicker, jitter, wobble, ghosting, frame drops/repeats.",
    },
];

/// Group whose primary (cause, effect) matches, if any. The taxonomy is not
/// a full product, so most combinations return `None`.
pub fn group_of(cause: Cause, effect: Option<Effect>) -> Option<&'static CanonicalGroup> {
    GROUPS
        .iter()
        .find(|g| g.primary_effect == effect && g.primary_cause.admits(cause))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvSubtype {
    pub code: &'static str,
    pub default_source: &'static str,
    pub name: &'static str,
}

impl TvSubtype {
    pub fn effect(&self) -> Effect {
        Effect::TV
    }

    pub fn default_cause(&self) -> CauseLabel {
        self.default_source
            .replace(' ', "")
            .parse()
            .expect("static subtype table uses valid cause codes")
    }
}

pub static TV_SUBTYPES: [TvSubtype; 12] = [
    TvSubtype { code: "tv_flicker", default_source: "E / R", name: "Temporal flicker" },
    TvSubtype { code: "tv_awb_osc", default_source: "R", name: "AWB oscillation" },
    TvSubtype { code: "tv_rs_wobble", default_source: "S", name: "Rolling-shutter wobble" },
    TvSubtype { code: "tv_af_hunting", default_source: "S", name: "Autofocus hunting" },
    TvSubtype { code: "tv_ois_jitter", default_source: "S", name: "OIS jitter" },
    TvSubtype { code: "tv_ghosting", default_source: "R", name: "Temporal ghosting" },
    TvSubtype { code: "tv_stab_jitter", default_source: "R", name: "Stabilization jitter" },
    TvSubtype { code: "tv_vfr", default_source: "R", name: "Variable frame-rate artefacts" },
    TvSubtype { code: "tv_drop_repeat", default_source: "T", name: "Frame drop/repeat" },
    TvSubtype { code: "tv_desync", default_source: "T", name: "Timing / AV desynchronization" },
    TvSubtype { code: "tv_gop_loss", default_source: "T", name: "GOP / slice loss" },
    TvSubtype { code: "tv_seq_transforms", default_source: "R", name: "Sequential transforms" },
];

pub fn tv_subtype(code: &str) -> Option<&'static TvSubtype> {
    TV_SUBTYPES.iter().find(|t| t.code == code)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub backend: Backend,
    pub term: String,
    pub original_category: String,
    pub group: GroupId,
    pub cause: CauseLabel,
    pub effect: Option<Effect>,
    pub tv_subtype: Option<String>,
}

impl TaxonomyEntry {
    pub fn canonical_group(&self) -> Option<&'static CanonicalGroup> {
        self.group.group()
    }
}

/// Compact (cause, effect, group) label as written into manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyLabel {
    pub cause: CauseLabel,
    pub effect: Option<Effect>,
    pub group: GroupId,
}

impl From<&TaxonomyEntry> for TaxonomyLabel {
    fn from(e: &TaxonomyEntry) -> Self {
        TaxonomyLabel {
            cause: e.cause,
            effect: e.effect,
            group: e.group,
        }
    }
}

/// One problem found by [`Registry::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingEntry { backend: Backend, term: String },
    DuplicateEntry { backend: Backend, term: String, count: usize },
    UnknownGroup { backend: Backend, term: String, group: GroupId },
    MissingTvSubtype { backend: Backend, term: String },
    UnknownTvSubtype { backend: Backend, term: String, code: String },
    EffectMismatch { backend: Backend, term: String, group: GroupId, effect: Option<Effect> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fx = |e: &Option<Effect>| e.map_or("--", |e| e.code());
        match self {
            Violation::MissingEntry { backend, term } => {
                write!(f, "{backend}/{term}: operator has no taxonomy entry")
            }
            Violation::DuplicateEntry { backend, term, count } => {
                write!(f, "{backend}/{term}: {count} entries for one key")
            }
            Violation::UnknownGroup { backend, term, group } => {
                write!(f, "{backend}/{term}: unknown group {group}")
            }
            Violation::MissingTvSubtype { backend, term } => {
                write!(f, "{backend}/{term}: G12 entry without a TV subtype")
            }
            Violation::UnknownTvSubtype { backend, term, code } => {
                write!(f, "{backend}/{term}: unknown TV subtype '{code}'")
            }
            Violation::EffectMismatch { backend, term, group, effect } => {
                write!(f, "{backend}/{term}: effect {} inconsistent with group {group}", fx(effect))
            }
        }
    }
}

/// Loaded taxonomy records, keyed by (backend, term).
#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<TaxonomyEntry>,
    index: HashMap<(Backend, String), usize>,
}

/// Registry shipped with the crate.
pub const SHIPPED_REGISTRY: &str = include_str!("../data/taxonomy.csv");

impl Registry {
    pub fn shipped() -> Registry {
        Registry::parse(SHIPPED_REGISTRY, "taxonomy.csv").expect("shipped registry parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Registry> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Registry::parse(&text, &path.display().to_string())
    }

    /// Parses the line format `backend,term,original_category,group,cause,effect[,tv_subtype]`.
    /// Duplicate keys are kept so [`Registry::validate`] can report them.
    pub fn parse(text: &str, origin: &str) -> Result<Registry> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut registry = Registry::default();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                origin: origin.to_string(),
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let perr = |message: String| Error::Parse {
                origin: origin.to_string(),
                line,
                message,
            };
            if record.len() < 6 || record.len() > 7 {
                return Err(perr(format!("expected 6 or 7 fields, found {}", record.len())));
            }
            let backend: Backend = record[0].parse().map_err(|e: Error| perr(e.to_string()))?;
            let entry = TaxonomyEntry {
                backend,
                term: record[1].to_string(),
                original_category: record[2].to_string(),
                group: record[3].parse().map_err(|e: Error| perr(e.to_string()))?,
                cause: record[4].parse().map_err(|e: Error| perr(e.to_string()))?,
                effect: parse_effect(&record[5]).map_err(|e| perr(e.to_string()))?,
                tv_subtype: record.get(6).filter(|s| !s.is_empty()).map(str::to_string),
            };
            registry.push(entry);
        }
        Ok(registry)
    }

    pub fn push(&mut self, entry: TaxonomyEntry) {
        let key = (entry.backend, entry.term.clone());
        self.index.entry(key).or_insert(self.entries.len());
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[TaxonomyEntry] {
        &self.entries
    }

    /// Entry for `(backend, term)`; accepts the backend's native short names.
    pub fn lookup(&self, backend: Backend, term: &str) -> Result<&TaxonomyEntry> {
        let canonical = crate::degradations::canonical_term(backend, term).unwrap_or(term);
        self.index
            .get(&(backend, canonical.to_string()))
            .map(|&i| &self.entries[i])
            .ok_or_else(|| Error::NotFound(format!("taxonomy entry for {backend}/{term}")))
    }

    /// Checks the registry against the operator keys that must resolve.
    pub fn validate<'a>(&self, operators: impl IntoIterator<Item = (Backend, &'a str)>) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut counts: HashMap<(Backend, &str), usize> = HashMap::new();
        for e in &self.entries {
            *counts.entry((e.backend, e.term.as_str())).or_default() += 1;
        }
        for op in operators {
            if !counts.contains_key(&op) {
                violations.push(Violation::MissingEntry {
                    backend: op.0,
                    term: op.1.to_string(),
                });
            }
        }
        let mut reported = std::collections::HashSet::new();
        for e in &self.entries {
            let key = (e.backend, e.term.as_str());
            let n = counts[&key];
            if n > 1 && reported.insert(key) {
                violations.push(Violation::DuplicateEntry {
                    backend: e.backend,
                    term: e.term.clone(),
                    count: n,
                });
            }
            let Some(group) = e.group.group() else {
                violations.push(Violation::UnknownGroup {
                    backend: e.backend,
                    term: e.term.clone(),
                    group: e.group,
                });
                continue;
            };
            if group.id == GroupId(12) {
                match &e.tv_subtype {
                    None => violations.push(Violation::MissingTvSubtype {
                        backend: e.backend,
                        term: e.term.clone(),
                    }),
                    Some(code) if tv_subtype(code).is_none() => {
                        violations.push(Violation::UnknownTvSubtype {
                            backend: e.backend,
                            term: e.term.clone(),
                            code: code.clone(),
                        })
                    }
                    Some(_) => {}
                }
            } else if let Some(code) = &e.tv_subtype {
                if tv_subtype(code).is_none() {
                    violations.push(Violation::UnknownTvSubtype {
                        backend: e.backend,
                        term: e.term.clone(),
                        code: code.clone(),
                    });
                }
            }
            // G11 has no effect code, so any effect label is accepted there.
            let consistent = match group.primary_effect {
                None => true,
                Some(effect) => e.effect == Some(effect),
            };
            if !consistent {
                violations.push(Violation::EffectMismatch {
                    backend: e.backend,
                    term: e.term.clone(),
                    group: e.group,
                    effect: e.effect,
                });
            }
        }
        violations
    }
}

/// Validates `registry` against every operator the degradations module ships.
pub fn validate_registry(registry: &Registry) -> Vec<Violation> {
    let keys = crate::degradations::catalog()
        .iter()
        .map(|d| (d.backend, d.key))
        .collect::<Vec<_>>();
    registry.validate(keys)
}
