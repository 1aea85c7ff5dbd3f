//! Benchmark construction: assignment protocols, batch execution with a
//! JSON-lines manifest, and severity tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{output_stem, StrengthTable};
use crate::degradations::{ChainSpec, DegradationSpec, Degrader, OperatorDescriptor, LEVELS};
use crate::error::{Error, Result};
use crate::image::{decode_image, encode_image, load_image, FileFormat, CODEC_VERSION};
use crate::metrics::{strength, ExternalLookup, ExternalScores, MetricId, Orientation};
use crate::rng::{RngStream, StreamId};
use crate::taxonomy::{Backend, GroupId, Registry, TaxonomyLabel};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Stream position reserved for plan sampling, disjoint from chain slots.
const PLANNER_STREAM: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceImage {
    pub id: String,
    pub path: PathBuf,
}

impl SourceImage {
    pub fn new(id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        SourceImage {
            id: id.into(),
            path: path.into(),
        }
    }

    /// Uses the file stem as the id.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        SourceImage { id, path }
    }
}

/// PNG and JPEG files directly inside `dir`, sorted by file name.
pub fn discover_images(dir: impl AsRef<Path>) -> Result<Vec<SourceImage>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                    Some("png" | "jpg" | "jpeg")
                )
        })
        .collect();
    files.sort();
    Ok(files.into_iter().map(SourceImage::from_path).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperatorRef {
    pub backend: Backend,
    pub term: String,
}

impl OperatorRef {
    pub fn new(backend: Backend, term: impl Into<String>) -> Self {
        OperatorRef {
            backend,
            term: term.into(),
        }
    }
}

impl From<&OperatorDescriptor> for OperatorRef {
    fn from(d: &OperatorDescriptor) -> Self {
        OperatorRef::new(d.backend, d.key.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    RoundRobin,
    Cartesian,
    ChainFactorial,
    RandomChains,
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "round_robin" | "a" => Ok(Protocol::RoundRobin),
            "cartesian" | "b" => Ok(Protocol::Cartesian),
            "chain_factorial" | "c" => Ok(Protocol::ChainFactorial),
            "random_chains" | "d" => Ok(Protocol::RandomChains),
            other => Err(Error::Argument(format!("unknown protocol '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub source: SourceImage,
    pub chain: ChainSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub protocol: Protocol,
    pub seed: u64,
    pub assignments: Vec<Assignment>,
    pub config_digest: String,
}

fn digest_config(protocol: Protocol, seed: u64, images: &[SourceImage], extra: &impl Serialize) -> String {
    let ids: Vec<&str> = images.iter().map(|i| i.id.as_str()).collect();
    let text = serde_json::to_string(&(protocol, seed, ids, extra)).expect("plan config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn spec(op: &OperatorRef, severity: u8, seed: u64) -> DegradationSpec {
    DegradationSpec {
        backend: op.backend,
        term: op.term.clone(),
        severity,
        seed,
    }
}

fn check_levels(levels: &[u8]) -> Result<()> {
    if levels.is_empty() || levels.iter().any(|l| !(1..=LEVELS as u8).contains(l)) {
        return Err(Error::Argument(format!("levels must be a non-empty subset of 1..={LEVELS}")));
    }
    Ok(())
}

fn check_inputs(images: &[SourceImage], operators: &[OperatorRef]) -> Result<()> {
    if images.is_empty() {
        return Err(Error::Argument("no source images".into()));
    }
    if operators.is_empty() {
        return Err(Error::Argument("no operators selected".into()));
    }
    Ok(())
}

/// Protocol A: one (operator, level) per image, cycling operators in the given
/// order with levels innermost.
pub fn plan_round_robin(
    images: &[SourceImage],
    operators: &[OperatorRef],
    levels: &[u8],
    seed: u64,
) -> Result<GenerationPlan> {
    check_inputs(images, operators)?;
    check_levels(levels)?;
    let combos: Vec<(&OperatorRef, u8)> = operators
        .iter()
        .flat_map(|op| levels.iter().map(move |&l| (op, l)))
        .collect();
    let assignments = images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let (op, l) = combos[i % combos.len()];
            Assignment {
                source: img.clone(),
                chain: ChainSpec::single(spec(op, l, seed)),
            }
        })
        .collect();
    Ok(GenerationPlan {
        protocol: Protocol::RoundRobin,
        seed,
        assignments,
        config_digest: digest_config(Protocol::RoundRobin, seed, images, &(operators, levels)),
    })
}

/// Protocol B: every image × operator × level.
pub fn plan_cartesian(
    images: &[SourceImage],
    operators: &[OperatorRef],
    levels: &[u8],
    seed: u64,
) -> Result<GenerationPlan> {
    check_inputs(images, operators)?;
    check_levels(levels)?;
    let mut assignments = Vec::with_capacity(images.len() * operators.len() * levels.len());
    for img in images {
        for op in operators {
            for &l in levels {
                assignments.push(Assignment {
                    source: img.clone(),
                    chain: ChainSpec::single(spec(op, l, seed)),
                });
            }
        }
    }
    Ok(GenerationPlan {
        protocol: Protocol::Cartesian,
        seed,
        assignments,
        config_digest: digest_config(Protocol::Cartesian, seed, images, &(operators, levels)),
    })
}

/// Protocol C: per image, the full factorial over slot levels of a fixed
/// operator order (last slot varies fastest).
pub fn plan_chain_factorial(
    images: &[SourceImage],
    template: &[OperatorRef],
    levels: &[u8],
    seed: u64,
) -> Result<GenerationPlan> {
    check_inputs(images, template)?;
    check_levels(levels)?;
    let slots = template.len();
    let total = levels.len().pow(slots as u32);
    let mut assignments = Vec::with_capacity(images.len() * total);
    for img in images {
        for mut idx in 0..total {
            let mut chosen = vec![0u8; slots];
            for slot in (0..slots).rev() {
                chosen[slot] = levels[idx % levels.len()];
                idx /= levels.len();
            }
            let specs = template
                .iter()
                .zip(&chosen)
                .map(|(op, &l)| spec(op, l, seed))
                .collect();
            assignments.push(Assignment {
                source: img.clone(),
                chain: ChainSpec::new(specs)?,
            });
        }
    }
    Ok(GenerationPlan {
        protocol: Protocol::ChainFactorial,
        seed,
        assignments,
        config_digest: digest_config(Protocol::ChainFactorial, seed, images, &(template, levels)),
    })
}

/// Operators of `pool` grouped by canonical group, in group order.
pub fn group_pool(pool: &[OperatorRef], registry: &Registry) -> Result<BTreeMap<GroupId, Vec<OperatorRef>>> {
    let mut groups: BTreeMap<GroupId, Vec<OperatorRef>> = BTreeMap::new();
    for op in pool {
        let entry = registry.lookup(op.backend, &op.term)?;
        groups.entry(entry.group).or_default().push(op.clone());
    }
    Ok(groups)
}

/// Protocol D: per image, `k` operators from `k` distinct canonical groups,
/// each at a random level, order as sampled.
pub fn plan_random_chains(
    images: &[SourceImage],
    pool: &[OperatorRef],
    registry: &Registry,
    k: usize,
    seed: u64,
) -> Result<GenerationPlan> {
    check_inputs(images, pool)?;
    let groups: Vec<(GroupId, Vec<OperatorRef>)> = group_pool(pool, registry)?.into_iter().collect();
    if k == 0 || k > groups.len() {
        return Err(Error::Argument(format!(
            "chain length {k} must be between 1 and the {} groups available",
            groups.len()
        )));
    }
    let mut assignments = Vec::with_capacity(images.len());
    for img in images {
        let mut rng = RngStream::new(seed, StreamId::for_image(&img.id, PLANNER_STREAM));
        let mut order: Vec<usize> = (0..groups.len()).collect();
        for i in 0..k {
            let j = i + rng.below(order.len() - i);
            order.swap(i, j);
        }
        let specs = order[..k]
            .iter()
            .map(|&g| {
                let ops = &groups[g].1;
                let op = &ops[rng.below(ops.len())];
                let level = rng.below(LEVELS) as u8 + 1;
                spec(op, level, seed)
            })
            .collect();
        assignments.push(Assignment {
            source: img.clone(),
            chain: ChainSpec::new(specs)?,
        });
    }
    Ok(GenerationPlan {
        protocol: Protocol::RandomChains,
        seed,
        assignments,
        config_digest: digest_config(Protocol::RandomChains, seed, images, &(pool, k)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainElement {
    pub backend: Backend,
    pub term: String,
    pub severity: u8,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed,
}

/// Provenance of one generated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub schema: u32,
    pub image_id: String,
    pub source: PathBuf,
    /// Relative to the output directory.
    pub output: String,
    pub chain: Vec<ChainElement>,
    pub taxonomy: Vec<TaxonomyLabel>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub strengths: BTreeMap<String, f64>,
    pub schedule_sha256: String,
    pub codec: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_sha256: Option<String>,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn write_manifest(records: &[ManifestRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("manifest record serializes"));
        text.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                origin: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    pub out_dir: PathBuf,
    pub format: FileFormat,
    pub measure: Vec<MetricId>,
    /// Worker threads; `None` uses all available cores.
    pub jobs: Option<usize>,
    pub external: Option<ExternalScores>,
}

impl ExecuteOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        ExecuteOptions {
            out_dir: out_dir.into(),
            format: FileFormat::Png,
            measure: Vec::new(),
            jobs: None,
            external: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecutionSummary {
    pub records: Vec<ManifestRecord>,
    pub manifest_path: PathBuf,
    pub written: usize,
    pub failed: usize,
}

fn run_assignment(
    a: &Assignment,
    source: &std::result::Result<crate::image::Image, String>,
    output: &str,
    degrader: &Degrader<'_>,
    registry: &Registry,
    opts: &ExecuteOptions,
) -> ManifestRecord {
    let chain: Vec<ChainElement> = a
        .chain
        .specs()
        .iter()
        .map(|s| ChainElement {
            backend: s.backend,
            term: crate::degradations::canonical_term(s.backend, &s.term)
                .unwrap_or(&s.term)
                .to_string(),
            severity: s.severity,
            seed: s.seed,
        })
        .collect();
    let mut record = ManifestRecord {
        schema: MANIFEST_SCHEMA,
        image_id: a.source.id.clone(),
        source: a.source.path.clone(),
        output: output.to_string(),
        chain,
        taxonomy: Vec::new(),
        strengths: BTreeMap::new(),
        schedule_sha256: degrader.schedule().digest().to_string(),
        codec: CODEC_VERSION.to_string(),
        output_sha256: None,
        status: RecordStatus::Ok,
        error: None,
    };
    let result = (|| -> Result<()> {
        for s in a.chain.specs() {
            record.taxonomy.push(registry.lookup(s.backend, &s.term)?.into());
        }
        let src = source.as_ref().map_err(|e| Error::Format(e.clone()))?;
        let out = degrader.apply_chain(src, &a.chain, &a.source.id)?;
        let bytes = encode_image(&out, opts.format)?;
        let path = opts.out_dir.join(output);
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        record.output_sha256 = Some(hex::encode(Sha256::digest(&bytes)));
        if !opts.measure.is_empty() {
            let written = decode_image(&bytes)?;
            let stem = output.rsplit_once('.').map_or(output, |(s, _)| s);
            for m in &opts.measure {
                let lookup = opts.external.as_ref().map(|scores| ExternalLookup { scores, key: stem });
                let v = strength(m, src, &written, lookup)?.value;
                record.strengths.insert(m.to_string(), v);
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        record.status = RecordStatus::Failed;
        record.error = Some(e.to_string());
        record.output_sha256 = None;
        record.strengths.clear();
    }
    record
}

/// Runs every assignment, writing images and `manifest.jsonl` under
/// `opts.out_dir`. Failures are recorded and do not stop the run.
pub fn execute_plan(
    plan: &GenerationPlan,
    degrader: &Degrader<'_>,
    registry: &Registry,
    opts: &ExecuteOptions,
) -> Result<ExecutionSummary> {
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let ext = opts.format.extension();
    let outputs: Vec<String> = plan
        .assignments
        .iter()
        .map(|a| format!("{}.{ext}", output_stem(&a.source.id, &a.chain)))
        .collect();
    let mut unique = BTreeSet::new();
    for o in &outputs {
        if !unique.insert(o) {
            return Err(Error::Argument(format!("two assignments write {o}")));
        }
    }

    // Group by source so each file is decoded once.
    let mut by_source: BTreeMap<&Path, Vec<usize>> = BTreeMap::new();
    for (i, a) in plan.assignments.iter().enumerate() {
        by_source.entry(a.source.path.as_path()).or_default().push(i);
    }
    let groups: Vec<(&Path, Vec<usize>)> = by_source.into_iter().collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    let mut records: Vec<ManifestRecord> = pool.install(|| {
        groups
            .par_iter()
            .flat_map(|(path, idx)| {
                let source = load_image(path).map_err(|e| e.to_string());
                idx.par_iter()
                    .map(|&i| {
                        run_assignment(&plan.assignments[i], &source, &outputs[i], degrader, registry, opts)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    records.sort_by(|a, b| a.output.cmp(&b.output));
    let manifest_path = opts.out_dir.join(MANIFEST_FILE);
    write_manifest(&records, &manifest_path)?;
    let failed = records.iter().filter(|r| r.status == RecordStatus::Failed).count();
    Ok(ExecutionSummary {
        written: records.len() - failed,
        failed,
        records,
        manifest_path,
    })
}

/// Strengths of one operator under one metric; `None` marks a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStrengths {
    pub backend: Backend,
    pub term: String,
    pub metric: MetricId,
    pub values: [Option<f64>; LEVELS],
}

impl From<&StrengthTable> for LevelStrengths {
    fn from(t: &StrengthTable) -> Self {
        LevelStrengths {
            backend: t.backend,
            term: t.term.clone(),
            metric: t.metric.clone(),
            values: std::array::from_fn(|i| t.strengths.get(i).copied()),
        }
    }
}

/// Means per (operator, level) over successful single-operator records.
/// External metrics are looked up by output stem in `external` when given.
pub fn level_strengths_from_manifest(
    records: &[ManifestRecord],
    metrics: &[MetricId],
    external: Option<&ExternalScores>,
) -> Vec<LevelStrengths> {
    let mut acc: BTreeMap<(Backend, String, MetricId), [(f64, usize); LEVELS]> = BTreeMap::new();
    let mut order: Vec<(Backend, String)> = Vec::new();
    for r in records {
        if r.status != RecordStatus::Ok || r.chain.len() != 1 {
            continue;
        }
        let el = &r.chain[0];
        let key = (el.backend, el.term.clone());
        if !order.contains(&key) {
            order.push(key);
        }
        let stem = r.output.rsplit_once('.').map_or(r.output.as_str(), |(s, _)| s);
        for m in metrics {
            let v = match m {
                MetricId::External(name) => external
                    .filter(|s| s.metric.eq_ignore_ascii_case(name))
                    .and_then(|s| s.get(stem).ok())
                    .or_else(|| r.strengths.get(&m.to_string()).copied()),
                _ => r.strengths.get(&m.to_string()).copied(),
            };
            if let Some(v) = v {
                let slot = &mut acc.entry((el.backend, el.term.clone(), m.clone())).or_default()
                    [el.severity as usize - 1];
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    let mut out = Vec::new();
    for (backend, term) in order {
        for m in metrics {
            let sums = acc.get(&(backend, term.clone(), m.clone()));
            out.push(LevelStrengths {
                backend,
                term: term.clone(),
                metric: m.clone(),
                values: std::array::from_fn(|i| {
                    sums.and_then(|s| (s[i].1 > 0).then(|| s[i].0 / s[i].1 as f64))
                }),
            });
        }
    }
    out
}

/// Key for an operator-level score row: `<backend>_<term>_s<level>`.
pub fn level_key(backend: Backend, term: &str, level: usize) -> String {
    format!("{backend}_{term}_s{level}")
}

/// Overwrites external-metric values with operator-level scores keyed by
/// [`level_key`], when the score file has them.
pub fn merge_level_scores(rows: &mut [LevelStrengths], scores: &ExternalScores) {
    for row in rows {
        if !matches!(&row.metric, MetricId::External(n) if n.eq_ignore_ascii_case(&scores.metric)) {
            continue;
        }
        for (i, slot) in row.values.iter_mut().enumerate() {
            if let Ok(v) = scores.get(&level_key(row.backend, &row.term, i + 1)) {
                *slot = Some(v);
            }
        }
    }
}

/// True when some step between present values weakens the degradation.
pub fn is_non_monotone(values: &[Option<f64>], orientation: Orientation) -> bool {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    present
        .windows(2)
        .any(|w| w[1] != w[0] && !orientation.is_stronger(w[0], w[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub backend: Backend,
    pub term: String,
    /// One 5-tuple per report metric, in report metric order.
    pub values: Vec<[Option<f64>; LEVELS]>,
    pub non_monotone: Vec<MetricId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeverityReport {
    pub metrics: Vec<MetricId>,
    pub rows: Vec<ReportRow>,
    pub gaps: usize,
}

/// Arranges strengths into one row per operator with five columns per metric.
pub fn report_severity_table(input: &[LevelStrengths], metrics: &[MetricId]) -> SeverityReport {
    let mut rows: Vec<ReportRow> = Vec::new();
    for ls in input {
        let Some(mi) = metrics.iter().position(|m| *m == ls.metric) else {
            continue;
        };
        let idx = match rows.iter().position(|r| r.backend == ls.backend && r.term == ls.term) {
            Some(i) => i,
            None => {
                rows.push(ReportRow {
                    backend: ls.backend,
                    term: ls.term.clone(),
                    values: vec![[None; LEVELS]; metrics.len()],
                    non_monotone: Vec::new(),
                });
                rows.len() - 1
            }
        };
        rows[idx].values[mi] = ls.values;
    }
    let mut gaps = 0;
    for row in &mut rows {
        for (m, vals) in metrics.iter().zip(&row.values) {
            gaps += vals.iter().filter(|v| v.is_none()).count();
            if is_non_monotone(vals, m.orientation()) {
                row.non_monotone.push(m.clone());
            }
        }
    }
    SeverityReport {
        metrics: metrics.to_vec(),
        rows,
        gaps,
    }
}

impl SeverityReport {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["backend".to_string(), "term".to_string()];
        for m in &self.metrics {
            for l in 1..=LEVELS {
                h.push(format!("{}_s{l}", m.label()));
            }
        }
        h.push("non_monotone".into());
        h
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory csv");
        for r in &self.rows {
            let mut rec = vec![r.backend.to_string(), r.term.clone()];
            for vals in &r.values {
                rec.extend(vals.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            }
            rec.push(r.non_monotone.iter().map(MetricId::to_string).collect::<Vec<_>>().join(";"));
            w.write_record(rec).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// Fixed-width table with three decimals; `*` marks non-monotone rows.
    pub fn to_text(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut head = vec!["operator".to_string()];
        for m in &self.metrics {
            for l in 1..=LEVELS {
                head.push(format!("{} s{l}", m.label()));
            }
        }
        head.push(String::new());
        cells.push(head);
        for r in &self.rows {
            let mut row = vec![format!("{}/{}", r.backend, r.term)];
            for vals in &r.values {
                row.extend(vals.iter().map(|v| v.map_or("-".to_string(), |x| format!("{x:.3}"))));
            }
            row.push(if r.non_monotone.is_empty() {
                String::new()
            } else {
                let ms: Vec<String> = r.non_monotone.iter().map(MetricId::label).collect();
                format!("* non-monotone: {}", ms.join(", "))
            });
            cells.push(row);
        }
        let ncol = cells[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    let _ = write!(line, "{cell:<w$}", w = widths[c]);
                } else if c == ncol - 1 {
                    if !cell.is_empty() {
                        let _ = write!(line, "  {cell}");
                    }
                } else {
                    let _ = write!(line, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(n: usize) -> Vec<SourceImage> {
        (0..n).map(|i| SourceImage::new(format!("img{i:03}"), format!("/nonexistent/{i}.png"))).collect()
    }

    fn ops(n: usize) -> Vec<OperatorRef> {
        crate::degradations::list_operators(Backend::Hendrycks)
            .iter()
            .take(n)
            .map(OperatorRef::from)
            .collect()
    }

    const ALL: [u8; 5] = [1, 2, 3, 4, 5];

    #[test]
    fn round_robin_single_operator_cycles_levels() {
        let plan = plan_round_robin(&images(10), &ops(1), &ALL, 0).unwrap();
        let levels: Vec<u8> = plan.assignments.iter().map(|a| a.chain.specs()[0].severity).collect();
        assert_eq!(levels, vec![1, 2, 3, 4, 5, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn cartesian_counts() {
        assert_eq!(plan_cartesian(&images(2), &ops(3), &ALL, 0).unwrap().assignments.len(), 30);
        let one = plan_cartesian(&images(1), &ops(1), &ALL, 0).unwrap();
        let lv: Vec<u8> = one.assignments.iter().map(|a| a.chain.specs()[0].severity).collect();
        assert_eq!(lv, ALL.to_vec());
    }

    #[test]
    fn factorial_order() {
        let plan = plan_chain_factorial(&images(1), &ops(2), &ALL, 0).unwrap();
        assert_eq!(plan.assignments.len(), 25);
        let first: Vec<u8> = plan.assignments[1].chain.specs().iter().map(|s| s.severity).collect();
        assert_eq!(first, vec![1, 2]);
        let t = ops(2);
        assert_eq!(plan.assignments[0].chain.specs()[0].term, t[0].term);
    }

    #[test]
    fn random_chain_errors() {
        let reg = Registry::shipped();
        let pool = ops(19);
        assert!(plan_random_chains(&images(1), &pool, &reg, 0, 1).is_err());
        let groups = group_pool(&pool, &reg).unwrap().len();
        assert!(plan_random_chains(&images(1), &pool, &reg, groups + 1, 1).is_err());
        let plan = plan_random_chains(&images(3), &pool, &reg, groups, 1).unwrap();
        for a in &plan.assignments {
            let mut gs: Vec<GroupId> =
                a.chain.specs().iter().map(|s| reg.lookup(s.backend, &s.term).unwrap().group).collect();
            gs.sort();
            gs.dedup();
            assert_eq!(gs.len(), groups);
        }
    }

    #[test]
    fn non_monotone_flags() {
        let sat = [22.925, 20.807, 22.877, 15.516, 12.717].map(Some);
        assert!(is_non_monotone(&sat, Orientation::LowerIsStronger));
        let ok = [22.3, 19.0, 15.8, 13.1, 10.6].map(Some);
        assert!(!is_non_monotone(&ok, Orientation::LowerIsStronger));
        assert!(!is_non_monotone(&[Some(50.0); 5], Orientation::LowerIsStronger));
        assert!(is_non_monotone(&ok, Orientation::HigherIsStronger));
    }

    #[test]
    fn report_layout_and_gaps() {
        let ls = LevelStrengths {
            backend: Backend::Hendrycks,
            term: "saturate".into(),
            metric: MetricId::Psnr,
            values: [Some(22.925), Some(20.807), None, Some(15.516), Some(12.717)],
        };
        let rep = report_severity_table(&[ls], &[MetricId::Psnr, MetricId::OneMinusSsim]);
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.gaps, 6);
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 2 + 10 + 1);
        assert!(lines.next().unwrap().starts_with("hendrycks,saturate,22.925,20.807,,"));
        assert!(rep.to_text().contains("PSNR s1"));
    }
}
