use std::borrow::Cow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use imdeg_core::benchgen::{
    discover_images, level_strengths_from_manifest, merge_level_scores, read_manifest, LevelStrengths,
    MANIFEST_FILE,
};
use imdeg_core::calibration::{image_set_digest, NamedImage};
use imdeg_core::degradations::{canonical_term, catalog, find_operator, ASSETS_ENV};
use imdeg_core::image::{load_image, save_image, FileFormat};
use imdeg_core::{
    derive_canonical_levels, execute_plan, extrapolate_levels, map_canonical_to_native, measure_strengths,
    plan_cartesian, plan_chain_factorial, plan_random_chains, plan_round_robin, report_severity_table,
    validate_registry, Backend, Calibration, DegradationSpec, Degrader, DeltaPolicy, ExecuteOptions,
    ExternalScores, MetricId, OperatorRef, Protocol, Registry, Schedule, DEFAULT_SEED, LEVELS,
};

use crate::config::{pick, pick_list, FileConfig};
use crate::{ApplyArgs, CalibrateArgs, GenerateArgs, ListArgs, ReportArgs, ValidateArgs};

/// Exit 2 for usage and configuration problems, 1 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<imdeg_core::Error> for Failure {
    fn from(e: imdeg_core::Error) -> Self {
        use imdeg_core::Error as E;
        match e {
            E::Argument(_) | E::NotFound(_) | E::Parse { .. } | E::DegenerateAxis(_) | E::UnavailableFeature(_) => {
                Failure::Usage(e.into())
            }
            E::Io { .. } | E::Format(_) | E::Shape(_) => Failure::Runtime(e.into()),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("--{flag} is required")))
}

fn parse_backend(s: &str) -> Result<Backend, Failure> {
    Ok(s.parse::<Backend>()?)
}

fn parse_metric(s: &str) -> Result<MetricId, Failure> {
    Ok(s.parse::<MetricId>()?)
}

fn load_schedule(path: Option<&Path>) -> Result<Cow<'static, Schedule>, Failure> {
    match path {
        None => Ok(Cow::Borrowed(Schedule::shipped())),
        Some(p) => {
            let s = Schedule::load(p).map_err(|e| Failure::Usage(e.into()))?;
            let issues = s.validate(catalog());
            if let Some(first) = issues.first() {
                return Err(usage(format!("schedule {}: {first}", p.display())));
            }
            Ok(Cow::Owned(s))
        }
    }
}

fn assets_dir() -> Option<PathBuf> {
    std::env::var_os(ASSETS_ENV).map(PathBuf::from)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    let pool = b.build().map_err(|e| Failure::Runtime(e.into()))?;
    Ok(pool.install(f))
}

fn read_reference_images(input: &Path) -> Result<Vec<NamedImage>, Failure> {
    let sources = if input.is_dir() {
        discover_images(input)?
    } else if input.is_file() {
        vec![imdeg_core::SourceImage::from_path(input)]
    } else {
        return Err(usage(format!("input {} does not exist", input.display())));
    };
    if sources.is_empty() {
        return Err(usage(format!("no PNG or JPEG images in {}", input.display())));
    }
    sources
        .into_iter()
        .map(|s| Ok(NamedImage::new(s.id, load_image(&s.path)?)))
        .collect()
}

/// First element of a config list, for single-valued flags.
fn first<T: Clone>(v: &Option<Vec<T>>) -> Option<T> {
    v.as_ref().and_then(|v| v.first().cloned())
}

fn fmt_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

pub fn calibrate(a: CalibrateArgs, cfg: &FileConfig) -> CmdResult {
    let backend = parse_backend(&required(pick(a.backend, &first(&cfg.backend)), "backend")?)?;
    let term = required(pick(a.term, &first(&cfg.term)), "term")?;
    let def = find_operator(backend, &term)?;
    let metric = parse_metric(&pick(a.metric, &first(&cfg.metric)).unwrap_or_else(|| "psnr".into()))?;
    let seed = pick(a.seed, &cfg.seed).unwrap_or(DEFAULT_SEED);
    let m_max = pick(a.m_max, &cfg.m_max).unwrap_or(0);
    let policy: DeltaPolicy = match pick(a.delta, &cfg.delta) {
        Some(d) => d.parse()?,
        None => DeltaPolicy::LastStep,
    };
    let schedule = load_schedule(pick(a.schedule, &cfg.schedule).as_deref())?;
    let scores = pick(a.scores, &cfg.scores).map(ExternalScores::load).transpose()?;
    if matches!(metric, MetricId::External(_)) && scores.is_none() {
        return Err(usage(format!("metric {metric} needs --scores")));
    }

    let images = match (pick(a.synthetic, &cfg.synthetic), pick(a.input, &first(&cfg.input))) {
        (Some(n), None) => {
            if n == 0 {
                return Err(usage("--synthetic must be at least 1"));
            }
            let side = pick(a.size, &cfg.size).unwrap_or(224);
            imdeg_core::synth::natural_set(n, side, side, seed)
        }
        (None, Some(input)) => read_reference_images(&input)?,
        (Some(_), Some(_)) => return Err(usage("give either --input or --synthetic, not both")),
        (None, None) => return Err(usage("--input is required")),
    };

    let degrader = Degrader::new(&schedule, assets_dir());
    let jobs = pick(a.jobs, &cfg.jobs);
    let table = with_jobs(jobs, || {
        measure_strengths(&images, &degrader, backend, def.key, &metric, seed, scores.as_ref())
    })??;
    let mut axis = derive_canonical_levels(&table, policy);
    if m_max > 0 {
        match extrapolate_levels(&axis, m_max) {
            Ok(ext) => axis = ext,
            Err(e) => eprintln!("warning: {e}; storing native levels only"),
        }
    }
    let cal = Calibration::new(table, axis, seed, schedule.digest());
    let out = pick(a.out, &cfg.out).unwrap_or_else(|| {
        let m = metric.to_string().replace([':', '-'], "_");
        PathBuf::from(format!("{backend}_{}_{m}.json", def.key))
    });
    cal.save(&out)?;
    println!(
        "{backend}/{} {metric} over {} images (set {}):",
        def.key,
        cal.table.n_images,
        &image_set_digest(&images)[..12]
    );
    println!("  native   {}", fmt_values(&cal.table.strengths));
    if cal.axis.extrapolated() > 0 {
        println!("  extended {}", fmt_values(&cal.axis.levels[cal.axis.base..]));
    }
    if !cal.table.is_strictly_monotone() {
        eprintln!("warning: strengths are not strictly monotone across native levels");
    }
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn output_format(path: &Path) -> FileFormat {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => FileFormat::Jpeg(95),
        _ => FileFormat::Png,
    }
}

pub fn apply(a: ApplyArgs, cfg: &FileConfig) -> CmdResult {
    let input = required(pick(a.input, &first(&cfg.input)), "input")?;
    if !input.is_file() {
        return Err(usage(format!("input {} does not exist", input.display())));
    }
    let severity = required(pick(a.severity, &cfg.severity), "severity")?;
    let mode = pick(a.mode, &cfg.mode).unwrap_or_else(|| "native".into());
    let seed = pick(a.seed, &cfg.seed).unwrap_or(DEFAULT_SEED);
    let schedule = load_schedule(pick(a.schedule, &cfg.schedule).as_deref())?;
    let backend_flag = pick(a.backend, &first(&cfg.backend));
    let term_flag = pick(a.term, &first(&cfg.term));

    let (backend, key, native) = match mode.to_ascii_lowercase().as_str() {
        "native" => {
            let backend = parse_backend(&required(backend_flag, "backend")?)?;
            let key = find_operator(backend, &required(term_flag, "term")?)?.key;
            if !(1..=LEVELS).contains(&severity) {
                return Err(usage(format!("native severity {severity} outside 1..={LEVELS}")));
            }
            (backend, key, severity as u8)
        }
        "canonical" => {
            let path = pick(a.calibration, &cfg.calibration)
                .ok_or_else(|| usage("canonical mode needs --calibration"))?;
            let cal = Calibration::load(&path)?;
            let backend = match backend_flag {
                Some(b) => parse_backend(&b)?,
                None => cal.table.backend,
            };
            let key = find_operator(backend, term_flag.as_deref().unwrap_or(&cal.table.term))?.key;
            if backend != cal.table.backend || key != cal.table.term {
                return Err(usage(format!(
                    "calibration {} is for {}/{}, not {backend}/{key}",
                    path.display(),
                    cal.table.backend,
                    cal.table.term
                )));
            }
            let mapping = map_canonical_to_native(&cal.axis, &cal.table, severity)?;
            println!(
                "canonical level {severity} ({} {:.6}) -> native level {}",
                cal.axis.metric,
                cal.axis.target(severity)?,
                mapping.level
            );
            if mapping.saturated {
                eprintln!(
                    "warning: canonical level {severity} is stronger than every native level of {backend}/{key}; \
                     saturating at native level {}",
                    mapping.level
                );
            }
            (backend, key, mapping.level)
        }
        other => return Err(usage(format!("unknown mode '{other}' (expected native or canonical)"))),
    };

    let image_id = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let out = pick(a.out, &cfg.out)
        .unwrap_or_else(|| PathBuf::from(format!("{image_id}_{backend}_{key}_s{native}.png")));
    let spec = DegradationSpec::new(backend, key, native, seed)?;
    let img = load_image(&input)?;
    let degraded = Degrader::new(&schedule, assets_dir()).apply(&img, &spec, &image_id)?;
    save_image(&degraded, &out, output_format(&out))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

/// Resolves `term` or `backend:term` against the selected backends.
fn resolve_operator(term: &str, backends: &[Backend]) -> Result<OperatorRef, Failure> {
    if let Some((b, t)) = term.split_once(':') {
        let backend = parse_backend(b)?;
        return Ok(OperatorRef::new(backend, find_operator(backend, t)?.key));
    }
    backends
        .iter()
        .find_map(|&b| canonical_term(b, term).map(|k| OperatorRef::new(b, k)))
        .ok_or_else(|| {
            let names: Vec<String> = backends.iter().map(Backend::to_string).collect();
            usage(format!("unknown term '{term}' for backend {}", names.join(", ")))
        })
}

fn select_operators(backends: &[Backend], terms: &[String], have_assets: bool) -> Result<Vec<OperatorRef>, Failure> {
    if !terms.is_empty() {
        return terms.iter().map(|t| resolve_operator(t, backends)).collect();
    }
    let mut ops = Vec::new();
    for &b in backends {
        for d in imdeg_core::list_operators(b) {
            if d.needs_assets && !have_assets {
                eprintln!("note: skipping {b}/{} ({ASSETS_ENV} not set)", d.key);
                continue;
            }
            ops.push(OperatorRef::from(&d));
        }
    }
    Ok(ops)
}

pub fn generate(a: GenerateArgs, cfg: &FileConfig) -> CmdResult {
    let input = required(pick(a.input, &first(&cfg.input)), "input")?;
    let out = required(pick(a.out, &cfg.out), "out")?;
    let protocol: Protocol = required(pick(a.protocol, &cfg.protocol), "protocol")?.parse()?;
    let backends = pick_list(a.backend, &cfg.backend)
        .iter()
        .map(|b| parse_backend(b))
        .collect::<Result<Vec<_>, _>>()?;
    let backends = if backends.is_empty() { vec![Backend::Hendrycks] } else { backends };
    let mut levels = pick_list(a.levels, &cfg.levels);
    if levels.is_empty() {
        levels = (1..=LEVELS as u8).collect();
    }
    let seed = pick(a.seed, &cfg.seed).unwrap_or(DEFAULT_SEED);
    let metrics = pick_list(a.metric, &cfg.metric)
        .iter()
        .map(|m| parse_metric(m))
        .collect::<Result<Vec<_>, _>>()?;
    let external = pick(a.scores, &cfg.scores).map(ExternalScores::load).transpose()?;
    let schedule = load_schedule(pick(a.schedule, &cfg.schedule).as_deref())?;
    let assets = assets_dir();
    let operators = select_operators(&backends, &pick_list(a.term, &cfg.term), assets.is_some())?;

    if !input.is_dir() {
        return Err(usage(format!("input directory {} does not exist", input.display())));
    }
    let images = discover_images(&input)?;
    if images.is_empty() {
        return Err(usage(format!("no PNG or JPEG images in {}", input.display())));
    }

    let registry = Registry::shipped();
    let plan = match protocol {
        Protocol::RoundRobin => plan_round_robin(&images, &operators, &levels, seed)?,
        Protocol::Cartesian => plan_cartesian(&images, &operators, &levels, seed)?,
        Protocol::ChainFactorial => plan_chain_factorial(&images, &operators, &levels, seed)?,
        Protocol::RandomChains => {
            let k = pick(a.k, &cfg.k).unwrap_or(2);
            plan_random_chains(&images, &operators, &registry, k, seed)?
        }
    };
    let degrader = Degrader::new(&schedule, assets);
    let mut opts = ExecuteOptions::new(&out);
    opts.measure = metrics;
    opts.jobs = pick(a.jobs, &cfg.jobs);
    opts.external = external;
    let summary = execute_plan(&plan, &degrader, &registry, &opts)?;
    for r in summary.records.iter().filter(|r| r.error.is_some()) {
        eprintln!("failed: {}: {}", r.output, r.error.as_deref().unwrap_or_default());
    }
    println!(
        "{} assignments: {} written, {} failed; manifest {}",
        summary.records.len(),
        summary.written,
        summary.failed,
        summary.manifest_path.display()
    );
    Ok(if summary.failed > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

#[derive(Default)]
struct ReportInputs {
    calibrations: Vec<Calibration>,
    manifests: Vec<imdeg_core::ManifestRecord>,
}

fn collect_report_inputs(paths: &[PathBuf]) -> Result<ReportInputs, Failure> {
    let mut inputs = ReportInputs::default();
    let add_file = |p: &Path, inputs: &mut ReportInputs| -> Result<(), Failure> {
        match p.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => inputs.manifests.extend(read_manifest(p)?),
            Some("json") => inputs.calibrations.push(Calibration::load(p)?),
            _ => return Err(usage(format!("{}: expected a .jsonl manifest or .json calibration", p.display()))),
        }
        Ok(())
    };
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Failure::Usage(e.into()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|e| e == "json") || f.file_name().is_some_and(|n| n == MANIFEST_FILE)
                })
                .collect();
            files.sort();
            for f in files {
                add_file(&f, &mut inputs)?;
            }
        } else if p.is_file() {
            add_file(p, &mut inputs)?;
        } else {
            return Err(usage(format!("input {} does not exist", p.display())));
        }
    }
    Ok(inputs)
}

pub fn report(a: ReportArgs, cfg: &FileConfig) -> CmdResult {
    let paths = pick_list(a.input, &cfg.input);
    if paths.is_empty() {
        return Err(usage("--input is required"));
    }
    let inputs = collect_report_inputs(&paths)?;
    if inputs.calibrations.is_empty() && inputs.manifests.is_empty() {
        return Err(usage("no calibration files or manifest records found"));
    }
    let scores = pick(a.scores, &cfg.scores).map(ExternalScores::load).transpose()?;

    let mut metrics = pick_list(a.metric, &cfg.metric)
        .iter()
        .map(|m| parse_metric(m))
        .collect::<Result<Vec<_>, _>>()?;
    if metrics.is_empty() {
        // Column order of the reference layout: 1-SSIM, PSNR, then external.
        let mut seen: Vec<MetricId> = inputs.calibrations.iter().map(|c| c.table.metric.clone()).collect();
        for r in &inputs.manifests {
            seen.extend(r.strengths.keys().filter_map(|k| k.parse().ok()));
        }
        for m in [MetricId::OneMinusSsim, MetricId::Psnr] {
            if seen.contains(&m) {
                metrics.push(m);
            }
        }
        let mut ext: Vec<MetricId> = seen.into_iter().filter(|m| matches!(m, MetricId::External(_))).collect();
        ext.sort();
        ext.dedup();
        metrics.extend(ext);
    }
    if let Some(s) = &scores {
        let m = MetricId::External(s.metric.clone());
        if !metrics.contains(&m) {
            metrics.push(m);
        }
    }
    if metrics.is_empty() {
        return Err(usage("inputs carry no measured strengths; pass --metric"));
    }

    let mut rows: Vec<LevelStrengths> = inputs.calibrations.iter().map(|c| LevelStrengths::from(&c.table)).collect();
    rows.extend(level_strengths_from_manifest(&inputs.manifests, &metrics, scores.as_ref()));
    // Calibration rows only carry their own metric; add empty rows so
    // external scores keyed per operator level can fill them.
    if let Some(s) = &scores {
        let ext = MetricId::External(s.metric.clone());
        let ops: Vec<(Backend, String)> = rows.iter().map(|r| (r.backend, r.term.clone())).collect();
        for (b, t) in ops {
            if !rows.iter().any(|r| r.backend == b && r.term == t && r.metric == ext) {
                rows.push(LevelStrengths { backend: b, term: t, metric: ext.clone(), values: [None; LEVELS] });
            }
        }
        merge_level_scores(&mut rows, s);
    }
    let report = report_severity_table(&rows, &metrics);
    for (mi, m) in metrics.iter().enumerate() {
        if report.rows.iter().all(|r| r.values[mi].iter().all(Option::is_none)) {
            eprintln!("warning: no values for metric {m}; its columns are empty");
        }
    }
    if report.gaps > 0 {
        eprintln!("warning: {} cells have no measurement", report.gaps);
    }
    let text = report.to_text();
    print!("{text}");
    if let Some(dir) = pick(a.out, &cfg.out) {
        std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(e.into()))?;
        for (name, body) in [("severity_table.csv", report.to_csv()), ("severity_table.txt", text)] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Failure::Runtime(anyhow!("writing {}: {e}", p.display())))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn validate(a: ValidateArgs, cfg: &FileConfig) -> CmdResult {
    let registry = match pick(a.registry, &cfg.registry) {
        Some(p) => Registry::load(&p)?,
        None => Registry::shipped(),
    };
    let schedule = match pick(a.schedule, &cfg.schedule) {
        Some(p) => Schedule::load(&p)?,
        None => Schedule::shipped().clone(),
    };
    let violations = validate_registry(&registry);
    let issues = schedule.validate(catalog());
    for v in &violations {
        println!("registry: {v}");
    }
    for i in &issues {
        println!("schedule: {i}");
    }
    if violations.is_empty() && issues.is_empty() {
        println!(
            "ok: {} taxonomy entries, {} scheduled operators (schedule {})",
            registry.entries().len(),
            schedule.records().len(),
            &schedule.digest()[..12]
        );
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

pub fn list(a: ListArgs) -> CmdResult {
    let backends = match a.backend {
        Some(b) => vec![parse_backend(&b)?],
        None => Backend::ALL.to_vec(),
    };
    for b in backends {
        for d in imdeg_core::list_operators(b) {
            let mut flags = Vec::new();
            if d.tier > 1 {
                flags.push("tier2");
            }
            if d.stochastic {
                flags.push("stochastic");
            }
            if d.needs_assets {
                flags.push("assets");
            }
            println!("{b:<10} {:<28} {:<32} {}", d.key, d.name, flags.join(","));
        }
    }
    Ok(ExitCode::SUCCESS)
}
