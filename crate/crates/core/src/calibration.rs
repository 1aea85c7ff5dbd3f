//! Mean degradation strength per native level, canonical metric-space levels,
//! fixed-step extrapolation and canonical-to-native mapping.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::degradations::{find_operator, ChainSpec, DegradationSpec, Degrader, LEVELS};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{strength, ExternalLookup, ExternalScores, MetricId};
use crate::rng::StreamId;
use crate::taxonomy::Backend;

/// A reference image with the id that keys its random streams.
#[derive(Debug, Clone)]
pub struct NamedImage {
    pub id: String,
    pub image: Image,
}

impl NamedImage {
    pub fn new(id: impl Into<String>, image: Image) -> Self {
        NamedImage { id: id.into(), image }
    }
}

/// SHA-256 over ids, dimensions and samples of an ordered image set.
pub fn image_set_digest(images: &[NamedImage]) -> String {
    let mut h = Sha256::new();
    for img in images {
        h.update((img.id.len() as u64).to_le_bytes());
        h.update(img.id.as_bytes());
        h.update((img.image.width() as u64).to_le_bytes());
        h.update((img.image.height() as u64).to_le_bytes());
        for s in img.image.data() {
            h.update(s.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Mean strengths at native levels 1..5 for one (backend, term, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthTable {
    pub backend: Backend,
    pub term: String,
    pub metric: MetricId,
    pub strengths: Vec<f64>,
    pub n_images: usize,
    pub image_set_digest: String,
}

impl StrengthTable {
    pub fn new(
        backend: Backend,
        term: impl Into<String>,
        metric: MetricId,
        strengths: Vec<f64>,
        n_images: usize,
        image_set_digest: impl Into<String>,
    ) -> Result<Self> {
        let t = StrengthTable {
            backend,
            term: term.into(),
            metric,
            strengths,
            n_images,
            image_set_digest: image_set_digest.into(),
        };
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<()> {
        if self.strengths.len() != LEVELS {
            return Err(Error::Argument(format!(
                "strength table needs {LEVELS} values, has {}",
                self.strengths.len()
            )));
        }
        if self.n_images == 0 {
            return Err(Error::Argument("strength table over zero images".into()));
        }
        if self.strengths.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite strength".into()));
        }
        Ok(())
    }

    /// True when every step strengthens the degradation.
    pub fn is_strictly_monotone(&self) -> bool {
        let o = self.metric.orientation();
        self.strengths.windows(2).all(|w| o.is_stronger(w[0], w[1]))
    }
}

/// Output stem for one image and chain, `<id>_<backend>_<term>_s<l>` joined
/// over chain slots (with `_c<pos>` suffixes for chains longer than one).
pub fn output_stem(image_id: &str, chain: &ChainSpec) -> String {
    let single = chain.len() == 1;
    let mut stem = image_id.to_string();
    for (pos, s) in chain.specs().iter().enumerate() {
        let key = crate::degradations::canonical_term(s.backend, &s.term).unwrap_or(&s.term);
        stem.push_str(&format!("_{}_{}_s{}", s.backend, key, s.severity));
        if !single {
            stem.push_str(&format!("_c{pos}"));
        }
    }
    stem
}

/// Per-image strengths `[image][level-1]`, in image order.
pub fn per_image_strengths(
    images: &[NamedImage],
    degrader: &Degrader<'_>,
    backend: Backend,
    term: &str,
    metric: &MetricId,
    seed: u64,
    external: Option<&ExternalScores>,
) -> Result<Vec<[f64; LEVELS]>> {
    if images.is_empty() {
        return Err(Error::Argument("no reference images".into()));
    }
    let key = find_operator(backend, term)?.key;
    images
        .par_iter()
        .map(|img| {
            let mut row = [0.0; LEVELS];
            for (l, slot) in row.iter_mut().enumerate() {
                let spec = DegradationSpec {
                    backend,
                    term: key.to_string(),
                    severity: l as u8 + 1,
                    seed,
                };
                let stem;
                let lookup = match external {
                    Some(scores) => {
                        stem = output_stem(&img.id, &ChainSpec::single(spec.clone()));
                        Some(ExternalLookup { scores, key: &stem })
                    }
                    None => None,
                };
                let deg = match metric {
                    MetricId::External(_) => img.image.clone(),
                    _ => degrader.apply_with_stream(&img.image, &spec, StreamId::for_image(&img.id, 0))?,
                };
                *slot = strength(metric, &img.image, &deg, lookup)?.value;
            }
            Ok(row)
        })
        .collect()
}

/// Mean strength per native level over `images`.
pub fn measure_strengths(
    images: &[NamedImage],
    degrader: &Degrader<'_>,
    backend: Backend,
    term: &str,
    metric: &MetricId,
    seed: u64,
    external: Option<&ExternalScores>,
) -> Result<StrengthTable> {
    let rows = per_image_strengths(images, degrader, backend, term, metric, seed, external)?;
    let n = rows.len();
    let mut sums = [0.0f64; LEVELS];
    for row in &rows {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    StrengthTable::new(
        backend,
        find_operator(backend, term)?.key,
        metric.clone(),
        sums.iter().map(|s| s / n as f64).collect(),
        n,
        image_set_digest(images),
    )
}

/// How the extrapolation step is derived from the base levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    /// `L_K - L_{K-1}`
    #[default]
    LastStep,
    /// `(L_K - L_1) / (K - 1)`
    MeanStep,
}

impl std::str::FromStr for DeltaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "last_step" | "last" => Ok(DeltaPolicy::LastStep),
            "mean_step" | "mean" => Ok(DeltaPolicy::MeanStep),
            other => Err(Error::Argument(format!("unknown delta policy '{other}'"))),
        }
    }
}

/// Canonical levels in metric space: the `base` measured levels followed by
/// any extrapolated ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalAxis {
    pub metric: MetricId,
    pub levels: Vec<f64>,
    pub base: usize,
    pub delta: f64,
    pub policy: DeltaPolicy,
}

impl CanonicalAxis {
    pub fn extrapolated(&self) -> usize {
        self.levels.len() - self.base
    }

    /// Level `k` (1-based); targets past the stored levels are extrapolated.
    pub fn target(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Argument("canonical levels start at 1".into()));
        }
        if let Some(&v) = self.levels.get(k - 1) {
            return Ok(v);
        }
        let ext = extrapolate_levels(self, k - self.base)?;
        Ok(ext.levels[k - 1])
    }
}

pub fn derive_canonical_levels(table: &StrengthTable, policy: DeltaPolicy) -> CanonicalAxis {
    let levels = table.strengths.clone();
    let k = levels.len();
    let delta = match policy {
        DeltaPolicy::LastStep => levels[k - 1] - levels[k - 2],
        DeltaPolicy::MeanStep => (levels[k - 1] - levels[0]) / (k - 1) as f64,
    };
    CanonicalAxis {
        metric: table.metric.clone(),
        levels,
        base: k,
        delta,
        policy,
    }
}

/// Appends `L_K + m * delta` for `m = 1..=m_max` to the base levels.
pub fn extrapolate_levels(axis: &CanonicalAxis, m_max: usize) -> Result<CanonicalAxis> {
    let mut out = axis.clone();
    out.levels.truncate(axis.base);
    if m_max == 0 {
        return Ok(out);
    }
    if !axis.metric.orientation().is_stronger(0.0, axis.delta) {
        return Err(Error::DegenerateAxis(format!(
            "step {} does not strengthen {}; backend coverage is insufficient to extrapolate",
            axis.delta, axis.metric
        )));
    }
    let last = axis.levels[axis.base - 1];
    out.levels
        .extend((1..=m_max).map(|m| last + m as f64 * axis.delta));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NativeMapping {
    pub level: u8,
    /// The target is stronger than anything the backend measured.
    pub saturated: bool,
}

/// Native level whose measured strength is nearest to canonical level `k`;
/// ties go to the lower level.
pub fn map_canonical_to_native(axis: &CanonicalAxis, table: &StrengthTable, k: usize) -> Result<NativeMapping> {
    if axis.metric != table.metric {
        return Err(Error::Argument(format!(
            "axis metric {} does not match table metric {}",
            axis.metric, table.metric
        )));
    }
    table.check()?;
    let target = axis.target(k)?;
    let mut best = 0;
    for (i, v) in table.strengths.iter().enumerate() {
        if (v - target).abs() < (table.strengths[best] - target).abs() {
            best = i;
        }
    }
    let o = table.metric.orientation();
    let saturated = table.strengths.iter().all(|&v| o.is_stronger(v, target));
    Ok(NativeMapping {
        level: best as u8 + 1,
        saturated,
    })
}

pub const CALIBRATION_FORMAT: u32 = 1;
pub const SSIM_DESCRIPTION: &str = "11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, valid windows, mean over RGB channels";

/// Persisted result of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub format: u32,
    pub table: StrengthTable,
    pub axis: CanonicalAxis,
    pub seed: u64,
    pub schedule_digest: String,
    pub codec: String,
    pub ssim: String,
}

impl Calibration {
    pub fn new(table: StrengthTable, axis: CanonicalAxis, seed: u64, schedule_digest: &str) -> Self {
        Calibration {
            format: CALIBRATION_FORMAT,
            table,
            axis,
            seed,
            schedule_digest: schedule_digest.to_string(),
            codec: crate::image::CODEC_VERSION.to_string(),
            ssim: SSIM_DESCRIPTION.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let c: Calibration = serde_json::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        c.table.check()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(metric: MetricId, v: [f64; 5]) -> StrengthTable {
        StrengthTable::new(Backend::Arniqa, "gaussian_blur", metric, v.to_vec(), 50, "d").unwrap()
    }

    #[test]
    fn table_invariants() {
        assert!(StrengthTable::new(Backend::Liu, "fog", MetricId::Psnr, vec![1.0; 4], 1, "").is_err());
        assert!(StrengthTable::new(Backend::Liu, "fog", MetricId::Psnr, vec![1.0; 5], 0, "").is_err());
        assert!(StrengthTable::new(Backend::Liu, "fog", MetricId::Psnr, vec![f64::NAN; 5], 1, "").is_err());
    }

    #[test]
    fn extrapolates_last_step() {
        let t = table(MetricId::OneMinusSsim, [0.000, 0.009, 0.081, 0.202, 0.393]);
        let axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        assert_eq!(axis.base, 5);
        let ext = extrapolate_levels(&axis, 2).unwrap();
        assert!((ext.levels[5] - 0.584).abs() < 1e-12);
        assert!((ext.levels[6] - 0.775).abs() < 1e-12);
        assert_eq!(extrapolate_levels(&axis, 0).unwrap(), axis);
    }

    #[test]
    fn psnr_extrapolation_goes_down() {
        let t = table(MetricId::Psnr, [30.0, 28.0, 26.0, 24.242, 21.347]);
        let axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        let ext = extrapolate_levels(&axis, 1).unwrap();
        assert!((ext.levels[5] - 18.452).abs() < 1e-12);
    }

    #[test]
    fn degenerate_steps_rejected() {
        let flat = table(MetricId::OneMinusSsim, [0.1; 5]);
        let axis = derive_canonical_levels(&flat, DeltaPolicy::LastStep);
        assert_eq!(axis.delta, 0.0);
        assert!(matches!(extrapolate_levels(&axis, 1), Err(Error::DegenerateAxis(_))));
        let wrong = table(MetricId::Psnr, [20.0, 21.0, 22.0, 23.0, 24.0]);
        let axis = derive_canonical_levels(&wrong, DeltaPolicy::LastStep);
        assert!(extrapolate_levels(&axis, 2).is_err());
    }

    #[test]
    fn mean_step_policy() {
        let t = table(MetricId::OneMinusSsim, [0.0, 0.1, 0.2, 0.3, 0.8]);
        let axis = derive_canonical_levels(&t, DeltaPolicy::MeanStep);
        assert!((axis.delta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn nearest_neighbour_mapping() {
        let t = table(MetricId::OneMinusSsim, [0.05, 0.18, 0.33, 0.41, 0.52]);
        let mut axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        axis.levels[0] = 0.20;
        assert_eq!(map_canonical_to_native(&axis, &t, 1).unwrap().level, 2);
        let self_axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        for k in 1..=5 {
            let m = map_canonical_to_native(&self_axis, &t, k).unwrap();
            assert_eq!(m.level as usize, k);
            assert!(!m.saturated);
        }
        let m = map_canonical_to_native(&self_axis, &t, 7).unwrap();
        assert_eq!(m, NativeMapping { level: 5, saturated: true });
    }

    #[test]
    fn ties_prefer_lower_level() {
        // dyadic values so the tie is exact
        let t = table(MetricId::OneMinusSsim, [0.125, 0.375, 0.5, 0.75, 0.875]);
        let mut axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        axis.levels[0] = 0.25;
        assert_eq!(map_canonical_to_native(&axis, &t, 1).unwrap().level, 1);
    }

    #[test]
    fn metric_mismatch_is_an_error() {
        let t = table(MetricId::OneMinusSsim, [0.1, 0.3, 0.5, 0.7, 0.9]);
        let p = table(MetricId::Psnr, [30.0, 25.0, 20.0, 15.0, 10.0]);
        let axis = derive_canonical_levels(&p, DeltaPolicy::LastStep);
        assert!(matches!(map_canonical_to_native(&axis, &t, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn calibration_document_round_trip() {
        let t = table(MetricId::OneMinusSsim, [0.0, 0.009, 0.081, 0.202, 0.393]);
        let axis = derive_canonical_levels(&t, DeltaPolicy::LastStep);
        let c = Calibration::new(t, axis, 42, "abc");
        let back = Calibration::from_json(&c.to_json(), "mem").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn output_stems() {
        let a = DegradationSpec::new(Backend::Arniqa, "gaublur", 3, 0).unwrap();
        let b = DegradationSpec::new(Backend::Hendrycks, "shot_noise", 1, 0).unwrap();
        assert_eq!(output_stem("x", &ChainSpec::single(a.clone())), "x_arniqa_gaussian_blur_s3");
        assert_eq!(
            output_stem("x", &ChainSpec::new(vec![a, b]).unwrap()),
            "x_arniqa_gaussian_blur_s3_c0_hendrycks_shot_noise_s1_c1"
        );
    }
}
