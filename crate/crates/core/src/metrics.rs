//! Full-reference strength measures and external score ingestion.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Value returned when the mean squared error is at or below [`PSNR_MSE_FLOOR`].
pub const PSNR_CAP: f64 = 50.0;
pub const PSNR_MSE_FLOOR: f64 = 1e-5;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

fn check_shape(a: &Image, b: &Image) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_shape(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB for unit peak, capped at [`PSNR_CAP`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m <= PSNR_MSE_FLOOR {
        PSNR_CAP
    } else {
        10.0 * (1.0 / m).log10()
    })
}

/// Normalised 1-D Gaussian window of [`SSIM_WINDOW`] taps.
pub fn ssim_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable filtering over valid positions only.
fn filter_valid(src: &[f64], w: usize, h: usize, g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = g.iter().zip(&row[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        let dst = &mut out[y * ow..(y + 1) * ow];
        for (j, &gj) in g.iter().enumerate() {
            let src = &tmp[(y + j) * ow..(y + j + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += gj * s;
            }
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize, g: &[f64]) -> f64 {
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a, w, h, g);
    let mu_b = filter_valid(b, w, h, g);
    let aa = filter_valid(&prod(|x, _| x * x), w, h, g);
    let bb = filter_valid(&prod(|_, y| y * y), w, h, g);
    let ab = filter_valid(&prod(|x, y| x * y), w, h, g);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
        sum += num / den;
    }
    sum / mu_a.len() as f64
}

/// Mean SSIM over valid 11x11 Gaussian windows, averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shape(a, b)?;
    let (w, h) = a.dimensions();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "{w}x{h} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let g = ssim_window();
    let pa = a.planes();
    let pb = b.planes();
    let mut total = 0.0;
    for c in 0..3 {
        let x: Vec<f64> = pa[c].iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = pb[c].iter().map(|&v| v as f64).collect();
        total += ssim_plane(&x, &y, w, h, &g);
    }
    Ok(total / 3.0)
}

pub fn one_minus_ssim(a: &Image, b: &Image) -> Result<f64> {
    Ok(1.0 - ssim(a, b)?)
}

/// Which direction of a metric means "more degraded".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerIsStronger,
    HigherIsStronger,
}

impl Orientation {
    /// True when moving from `from` to `to` strengthens the degradation.
    pub fn is_stronger(self, from: f64, to: f64) -> bool {
        match self {
            Orientation::LowerIsStronger => to < from,
            Orientation::HigherIsStronger => to > from,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Psnr,
    OneMinusSsim,
    External(String),
}

impl MetricId {
    pub fn orientation(&self) -> Orientation {
        match self {
            MetricId::Psnr => Orientation::LowerIsStronger,
            _ => Orientation::HigherIsStronger,
        }
    }

    /// Column label used in reports.
    pub fn label(&self) -> String {
        match self {
            MetricId::Psnr => "PSNR".into(),
            MetricId::OneMinusSsim => "1-SSIM".into(),
            MetricId::External(n) => n.to_ascii_uppercase(),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::Psnr => f.write_str("psnr"),
            MetricId::OneMinusSsim => f.write_str("1-ssim"),
            MetricId::External(n) => write!(f, "external:{n}"),
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "psnr" => Ok(MetricId::Psnr),
            "1-ssim" | "one_minus_ssim" | "1_ssim" => Ok(MetricId::OneMinusSsim),
            low => match low.strip_prefix("external:") {
                Some(name) if !name.is_empty() => Ok(MetricId::External(name.to_string())),
                _ => Err(Error::Argument(format!(
                    "unknown metric '{t}' (expected psnr, 1-ssim or external:<name>)"
                ))),
            },
        }
    }
}

impl Serialize for MetricId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Externally computed per-image scores (e.g. a learned perceptual metric).
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScores {
    pub metric: String,
    /// Free text from leading `#` lines.
    pub source: String,
    scores: BTreeMap<String, f64>,
}

impl ExternalScores {
    pub fn new(metric: impl Into<String>, source: impl Into<String>) -> Self {
        ExternalScores {
            metric: metric.into(),
            source: source.into(),
            scores: BTreeMap::new(),
        }
    }

    /// Parses `image_id,<metric>` CSV text with optional `#` comment lines.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let source = text
            .lines()
            .map(str::trim)
            .take_while(|l| l.is_empty() || l.starts_with('#'))
            .filter_map(|l| l.strip_prefix('#'))
            .map(str::trim)
            .collect::<Vec<_>>()
            .join(" ");
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let perr = |line: usize, message: String| Error::Parse {
            origin: origin.to_string(),
            line,
            message,
        };
        let header = rdr.headers().map_err(|e| perr(0, e.to_string()))?.clone();
        if header.len() != 2 || &header[0] != "image_id" || header[1].is_empty() {
            return Err(perr(1, "header must be 'image_id,<metric>'".into()));
        }
        let mut out = ExternalScores::new(&header[1], source);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| perr(0, e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(perr(line, format!("expected 2 fields, found {}", rec.len())));
            }
            let score: f64 = rec[1]
                .parse()
                .map_err(|_| perr(line, format!("score '{}' is not a number", &rec[1])))?;
            out.insert(&rec[0], score).map_err(|e| perr(line, e.to_string()))?;
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn insert(&mut self, image_id: &str, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::Argument(format!("non-finite score for '{image_id}'")));
        }
        if self.scores.insert(image_id.to_string(), score).is_some() {
            return Err(Error::Argument(format!("duplicate score for '{image_id}'")));
        }
        Ok(())
    }

    pub fn get(&self, image_id: &str) -> Result<f64> {
        self.scores
            .get(image_id)
            .copied()
            .ok_or_else(|| Error::NotFound(format!("{} score for image '{image_id}'", self.metric)))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// A strength value tagged with its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strength {
    pub value: f64,
    pub orientation: Orientation,
}

/// Where an external metric's score comes from.
#[derive(Debug, Clone, Copy)]
pub struct ExternalLookup<'a> {
    pub scores: &'a ExternalScores,
    pub key: &'a str,
}

/// Degradation strength of `degraded` relative to `reference` under `metric`.
pub fn strength(
    metric: &MetricId,
    reference: &Image,
    degraded: &Image,
    external: Option<ExternalLookup<'_>>,
) -> Result<Strength> {
    let value = match metric {
        MetricId::Psnr => psnr(reference, degraded)?,
        MetricId::OneMinusSsim => one_minus_ssim(reference, degraded)?,
        MetricId::External(name) => {
            let ext = external.ok_or_else(|| Error::NotFound(format!("score file for metric '{name}'")))?;
            if !ext.scores.metric.eq_ignore_ascii_case(name) {
                return Err(Error::Argument(format!(
                    "score file holds '{}', not '{name}'",
                    ext.scores.metric
                )));
            }
            ext.scores.get(ext.key)?
        }
    };
    Ok(Strength {
        value,
        orientation: metric.orientation(),
    })
}
