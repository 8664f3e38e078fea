use crate::config::{config_hash, output_dir, to_toml, RunConfig, SynthRun};
use crate::error::{CliError, CliResult};
use crate::io::{self, SummaryFile};
use memimprint::evaluation::{make_fold_plan, run_cross_eval, run_protocol, EvalReport, ReportKind};
use memimprint::groundtruth::build_ground_truth;
use memimprint::metrics::{rbo, weighted_mean_rbo, RboConfig};
use memimprint::models::RankingModel;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn announce(what: &str, resolved: &str, hash: &str) {
    eprintln!("== {what} (config_hash={hash})");
    for line in resolved.lines() {
        eprintln!("   {line}");
    }
}

fn check_sentinel(report: &EvalReport) -> CliResult<()> {
    let s = report.sentinel;
    eprintln!(
        "sentinel: {} survey reads, {} event reads, {} violations",
        s.survey_accesses, s.event_accesses, s.violations
    );
    if s.violations > 0 {
        return Err(CliError::Protocol(format!("{} leakage violations recorded", s.violations)));
    }
    Ok(())
}

pub struct IngestArgs<'a> {
    pub events: &'a Path,
    pub surveys: &'a Path,
    pub schema: &'a Path,
    pub name: Option<&'a str>,
    pub out: Option<&'a Path>,
}

/// Validates and archives raw files. Returns the archive directory.
pub fn ingest(args: IngestArgs<'_>) -> CliResult<PathBuf> {
    let mut inputs = Vec::new();
    for p in [args.events, args.surveys, args.schema] {
        inputs.extend_from_slice(io::read_text(p)?.as_bytes());
        inputs.push(0);
    }
    let hash = io::sha256_hex(&inputs);
    let name = args.name.map(String::from).unwrap_or_else(|| {
        args.events
            .parent()
            .and_then(|d| d.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    announce(
        "ingest",
        &format!(
            "events = {:?}\nsurveys = {:?}\nschema = {:?}\nname = {name:?}",
            args.events, args.surveys, args.schema
        ),
        &hash,
    );
    let (dataset, rejected) = io::load_dataset(&name, args.events, args.surveys, args.schema)?;
    let out = output_dir(args.out, None, Path::new(""))?;
    io::write_archive(&out, &dataset, &hash, &rejected)?;
    println!(
        "{}: {} events, {} surveys, {} egos, {} rows rejected",
        name,
        dataset.events().len(),
        dataset.surveys().len(),
        dataset.egos().len(),
        rejected.total()
    );
    for (reason, n) in &rejected.counts {
        println!("  rejected {n:>6}  {reason}");
    }
    Ok(out)
}

/// Writes one tournament ranking per survey as JSON lines.
pub fn groundtruth(dataset_dir: &Path, out: Option<&Path>) -> CliResult<PathBuf> {
    let dataset = io::read_archive(dataset_dir)?;
    let hash = io::sha256_hex(io::read_text(&dataset_dir.join(io::SURVEYS_FILE))?.as_bytes());
    announce("groundtruth", &format!("dataset = {dataset_dir:?}"), &hash);
    let rankings = build_ground_truth(&dataset)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => output_dir(None, None, Path::new(""))
            .map(|d| d.join("ground_truth.jsonl"))
            .unwrap_or_else(|_| dataset_dir.join("ground_truth.jsonl")),
    };
    io::write_text(&path, &io::format_ground_truth(&rankings, &hash))?;
    println!("{} rankings written to {}", rankings.len(), path.display());
    Ok(path)
}

/// Generates a synthetic population plus its latent-truth sidecar.
pub fn synth(config_path: &Path, out: Option<&Path>) -> CliResult<PathBuf> {
    let loaded = SynthRun::load(config_path)?;
    announce("synth", &to_toml(&loaded.config), &loaded.hash);
    eprintln!("seed: {}", loaded.config.synth.seed);
    let dir = output_dir(out, loaded.config.output_dir.as_deref(), &loaded.base)?;
    let (dataset, truth) = memimprint::synthdata::generate(&loaded.config.synth)?;
    io::write_archive(&dir, &dataset, &loaded.hash, &Default::default())?;
    io::write_text(&dir.join(io::LATENT_FILE), &io::format_latent(&truth, &loaded.hash))?;
    println!(
        "{}: {} events, {} surveys, {} egos -> {}",
        dataset.name,
        dataset.events().len(),
        dataset.surveys().len(),
        dataset.egos().len(),
        dir.display()
    );
    Ok(dir)
}

fn print_summary(report: &EvalReport, hash: &str) {
    let summary = SummaryFile::from_report(report, hash);
    println!("{} ({:?}, p={})", summary.label, summary.kind, summary.rbo.p);
    println!("{:<10} {:>9} {:>12} {:>12}", "model", "rbo", "var(survey)", "var(fold)");
    for m in &summary.models {
        println!(
            "{:<10} {:>9.5} {:>12.6} {:>12.6}",
            m.model, m.final_score, m.survey_variance, m.fold_variance
        );
    }
}

/// Runs the staggered within-population protocol.
pub fn evaluate(config_path: &Path, out: Option<&Path>) -> CliResult<EvalReport> {
    let loaded = RunConfig::load(config_path)?;
    let cfg = &loaded.config;
    announce("evaluate", &to_toml(cfg), &loaded.hash);
    eprintln!("seeds: fold_seed={} tuner.seed={}", cfg.fold_seed, cfg.tuner.seed);
    let source = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Config("evaluate needs a [dataset] section".into()))?;
    if source.subgroups.is_some() {
        return Err(CliError::Config("subgroups are only meaningful for crosseval".into()));
    }
    let dir = output_dir(out, cfg.output_dir.as_deref(), &loaded.base)?;
    let (dataset, _) = source.population(&loaded.base)?;
    let plan = make_fold_plan(&dataset, cfg.fold_seed)?;
    eprintln!(
        "folds: {:?} egos; releases: {:?}",
        plan.folds.iter().map(|f| f.len()).collect::<Vec<_>>(),
        plan.releases.iter().map(|r| r.semester).collect::<Vec<_>>()
    );
    let specs = cfg.model_specs();
    let models: Vec<&dyn RankingModel> = specs.iter().map(|m| m as &dyn RankingModel).collect();
    let report = run_protocol(&dataset, &plan, &models, &cfg.protocol())?;
    check_sentinel(&report)?;
    io::write_report(&dir, &report, &loaded.hash)?;
    io::write_text(&dir.join("plan.json"), &(serde_json::to_string_pretty(&plan).expect("serializable") + "\n"))?;
    print_summary(&report, &loaded.hash);
    Ok(report)
}

/// Fits on one population and scores on another.
pub fn crosseval(config_path: &Path, out: Option<&Path>) -> CliResult<EvalReport> {
    let loaded = RunConfig::load(config_path)?;
    let cfg = &loaded.config;
    announce("crosseval", &to_toml(cfg), &loaded.hash);
    eprintln!("seeds: fold_seed={} tuner.seed={}", cfg.fold_seed, cfg.tuner.seed);
    let cross = cfg
        .cross
        .as_ref()
        .ok_or_else(|| CliError::Config("crosseval needs a [cross] section".into()))?;
    let dir = output_dir(out, cfg.output_dir.as_deref(), &loaded.base)?;
    let trains = cross.train.datasets(&loaded.base)?;
    let tests = cross.test.datasets(&loaded.base)?;
    eprintln!(
        "train: {:?}\ntest: {:?}",
        trains.iter().map(|d| (&d.name, d.egos().len())).collect::<Vec<_>>(),
        tests.iter().map(|d| (&d.name, d.egos().len())).collect::<Vec<_>>()
    );
    let specs = cfg.model_specs();
    let models: Vec<&dyn RankingModel> = specs.iter().map(|m| m as &dyn RankingModel).collect();
    let report = run_cross_eval(&trains, &tests, &models, &cfg.protocol())?;
    check_sentinel(&report)?;
    io::write_report(&dir, &report, &loaded.hash)?;
    print_summary(&report, &loaded.hash);
    Ok(report)
}

/// RBO between two list files.
pub fn rbo_files(a: &Path, b: &Path, config: RboConfig) -> CliResult<f64> {
    announce(
        "rbo",
        &format!("a = {a:?}\nb = {b:?}\np = {}\nvariant = {:?}", config.p, config.variant),
        &config_hash(&config),
    );
    config.validate()?;
    let la = io::parse_list(&io::read_text(a)?);
    let lb = io::parse_list(&io::read_text(b)?);
    let v = rbo(&la, &lb, &config)?;
    println!("{v}");
    Ok(v)
}

/// Loads a run's summary from its directory or summary path.
fn summary_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(io::SUMMARY_FILE)
    } else {
        p.to_path_buf()
    }
}

/// Side-by-side table of several runs, one column per run. Optionally
/// writes per-semester length-weighted RBO for plotting.
pub fn report(runs: &[PathBuf], plot: Option<&Path>) -> CliResult<String> {
    if runs.is_empty() {
        return Err(CliError::Config("report needs at least one run".into()));
    }
    let summaries: Vec<SummaryFile> = runs
        .iter()
        .map(|r| io::read_summary(&summary_path(r)))
        .collect::<CliResult<_>>()?;
    let rbo_cfg = summaries[0].rbo;
    for (s, r) in summaries.iter().zip(runs) {
        if s.rbo != rbo_cfg {
            return Err(CliError::Config(format!(
                "{} uses RBO {:?}, {} uses {:?}; refusing to merge",
                runs[0].display(),
                rbo_cfg,
                r.display(),
                s.rbo
            )));
        }
    }
    let hashes: Vec<&str> = summaries.iter().map(|s| s.config_hash.as_str()).collect();
    announce("report", &format!("runs = {runs:?}"), &io::sha256_hex(hashes.join(",").as_bytes()));

    let mut models: Vec<String> = Vec::new();
    for s in &summaries {
        for m in &s.models {
            if !models.contains(&m.model) {
                models.push(m.model.clone());
            }
        }
    }
    let heading = if summaries.iter().all(|s| s.kind == ReportKind::Cross) {
        "Training -> Testing"
    } else {
        "Dataset"
    };
    let width = summaries.iter().map(|s| s.label.len()).max().unwrap_or(0).max(24);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Average RBO (p = {}, {:?}); in parentheses: variance over surveys / across folds",
        rbo_cfg.p, rbo_cfg.variant
    );
    let _ = write!(out, "{heading:<12}");
    for s in &summaries {
        let _ = write!(out, " | {:<width$}", s.label);
    }
    out.push('\n');
    let _ = writeln!(out, "{}", "-".repeat(12 + summaries.len() * (width + 3)));
    for model in &models {
        let _ = write!(out, "{model:<12}");
        for s in &summaries {
            let cell = s
                .models
                .iter()
                .find(|m| &m.model == model)
                .map(|m| format!("{:.5} ({:.5} / {:.5})", m.final_score, m.survey_variance, m.fold_variance))
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, " | {cell:<width$}");
        }
        out.push('\n');
    }
    print!("{out}");

    if let Some(plot_path) = plot {
        let mut csv = String::from("run,model,semester,rbo,surveys\n");
        for (s, r) in summaries.iter().zip(runs) {
            let dir = summary_path(r).parent().map(Path::to_path_buf).unwrap_or_default();
            let rec_path = dir.join(io::RECORDS_FILE);
            let records = io::parse_records(&io::read_text(&rec_path)?, &rec_path.display().to_string())?;
            let mut by: BTreeMap<(&str, u32), Vec<(f64, usize)>> = BTreeMap::new();
            for c in &records {
                by.entry((c.model.as_str(), c.semester)).or_default().push((c.rbo, c.truth_len));
            }
            for ((model, sem), scores) in by {
                if let Ok(v) = weighted_mean_rbo(&scores) {
                    let _ = writeln!(csv, "{},{model},{sem},{v},{}", s.label, scores.len());
                }
            }
        }
        io::write_text(plot_path, &csv)?;
    }
    Ok(out)
}
