//! Run configuration (TOML).

use crate::error::{CliError, CliResult};
use crate::io;
use memimprint::domain::Dataset;
use memimprint::evaluation::{make_cross_subgroups, ProtocolConfig};
use memimprint::metrics::RboConfig;
use memimprint::models::{ModelKind, ModelSpec};
use memimprint::synthdata::{generate, LatentTruth, SynthConfig};
use memimprint::tuning::TunerConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Overrides the output directory of every command.
pub const OUTPUT_DIR_ENV: &str = "MEMIMPRINT_OUTPUT_DIR";

/// Where a population comes from: an archive directory or the generator,
/// optionally cut into size-matched subgroups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroups: Option<SubgroupSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgroupSpec {
    pub target_egos: usize,
    /// Two inclusive semester windows, e.g. `[[1, 4], [5, 8]]`.
    pub halves: [[u32; 2]; 2],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSpec {
    pub train: DataSource,
    pub test: DataSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub kind: ModelKind,
    /// Pinned parameters; omitted means tuned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub s_base: f64,
}

impl ModelEntry {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            kind: self.kind,
            fixed: self.params.clone(),
            seed: self.seed,
            s_base: self.s_base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub fold_seed: u64,
    #[serde(default)]
    pub rbo: RboConfig,
    pub tuner: TunerConfig,
    /// Models in report order. Empty means the standard five, with the
    /// random baseline seeded by `fold_seed`.
    #[serde(default)]
    pub models: Vec<ModelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DataSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<CrossSpec>,
}

/// A configuration file after parsing, with relative paths anchored at the
/// file's directory.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub base: PathBuf,
    pub hash: String,
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = io::read_text(path)?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Content hash of a configuration, ignoring where its output goes.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let mut value = serde_json::to_value(config).expect("serializable");
    if let Some(map) = value.as_object_mut() {
        map.remove("output_dir");
    }
    io::sha256_hex(value.to_string().as_bytes())
}

pub fn to_toml<T: Serialize>(config: &T) -> String {
    toml::to_string_pretty(config).unwrap_or_else(|e| format!("<unprintable config: {e}>"))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Loaded<RunConfig>> {
        let config: RunConfig = parse_toml(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate(&base)?;
        let hash = config_hash(&config);
        Ok(Loaded { config, base, hash })
    }

    pub fn validate(&self, base: &Path) -> CliResult<()> {
        self.rbo.validate()?;
        if self.tuner.budget == 0 {
            return Err(CliError::Config("tuner budget must be positive".into()));
        }
        for m in &self.models {
            m.spec().validate()?;
        }
        let mut names: Vec<&str> = self.models.iter().map(|m| m.kind.label()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("each model kind may appear once".into()));
        }
        if let Some(d) = &self.dataset {
            d.validate(base)?;
        }
        if let Some(c) = &self.cross {
            c.train.validate(base)?;
            c.test.validate(base)?;
        }
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            rbo: self.rbo,
            tuner: self.tuner,
        }
    }

    pub fn model_specs(&self) -> Vec<ModelSpec> {
        if self.models.is_empty() {
            ModelSpec::standard_suite(self.fold_seed)
        } else {
            self.models.iter().map(ModelEntry::spec).collect()
        }
    }
}

impl DataSource {
    pub fn validate(&self, base: &Path) -> CliResult<()> {
        match (&self.path, &self.synth) {
            (Some(p), None) => {
                let p = base.join(p);
                if !p.is_dir() {
                    return Err(CliError::Config(format!("{}: no such dataset directory", p.display())));
                }
            }
            (None, Some(s)) => s.validate()?,
            _ => {
                return Err(CliError::Config(
                    "a data source needs exactly one of `path` or `synth`".into(),
                ))
            }
        }
        if let Some(g) = &self.subgroups {
            if g.halves.iter().any(|h| h[0] == 0 || h[0] > h[1]) {
                return Err(CliError::Config(format!("bad semester halves {:?}", g.halves)));
            }
        }
        Ok(())
    }

    /// The source's single population, plus its planted truth when generated.
    pub fn population(&self, base: &Path) -> CliResult<(Dataset, Option<LatentTruth>)> {
        match (&self.path, &self.synth) {
            (Some(p), _) => Ok((io::read_archive(&base.join(p))?, None)),
            (None, Some(s)) => {
                let (d, t) = generate(s)?;
                Ok((d, Some(t)))
            }
            (None, None) => Err(CliError::Config("empty data source".into())),
        }
    }

    /// Every dataset the source yields: its population, or its subgroups.
    pub fn datasets(&self, base: &Path) -> CliResult<Vec<Dataset>> {
        let (d, _) = self.population(base)?;
        match &self.subgroups {
            None => Ok(vec![d]),
            Some(g) => Ok(make_cross_subgroups(
                &d,
                g.target_egos,
                (g.halves[0][0]..=g.halves[0][1], g.halves[1][0]..=g.halves[1][1]),
                g.seed,
            )?),
        }
    }
}

/// Output directory: flag, then environment, then config.
pub fn output_dir(flag: Option<&Path>, config: Option<&Path>, base: &Path) -> CliResult<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return Ok(PathBuf::from(p));
    }
    config
        .map(|p| base.join(p))
        .ok_or_else(|| CliError::Config(format!("no output directory (set `output_dir`, --out or {OUTPUT_DIR_ENV})")))
}

/// Configuration of the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub synth: SynthConfig,
}

impl SynthRun {
    pub fn load(path: &Path) -> CliResult<Loaded<SynthRun>> {
        let config: SynthRun = parse_toml(path)?;
        config.synth.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let hash = config_hash(&config);
        Ok(Loaded { config, base, hash })
    }
}
