//! Real-time vs pseudo out-of-sample experiment over a vintage archive.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ModelSpec, VintageFormat};
use crate::error::{Error, Result};
use crate::factors::{augment_panel, extract_pcs};
use crate::forecast::draw_forecasts;
use crate::month::Month;
use crate::panel::{build_panel, common_start, standardize, Panel};
use crate::sampler::run_chain;
use crate::score::InfoSet;
use crate::vintage::{apply_transform, parse_fred_md, parse_vintage_with_release, SeriesManifest, Vintage};

/// Stable 64-bit seed from the master seed and a cell label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let digest = Sha256::digest(format!("{master}/{label}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed of the chain for one model and holdout month. The information set is
/// deliberately left out: both sets of a month share a stream, so identical
/// panels yield identical forecasts.
pub fn cell_seed(master: u64, model_id: &str, origin: Month) -> u64 {
    derive_seed(master, &format!("{model_id}/{origin}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub model_id: String,
    pub info_set: InfoSet,
    /// Holdout (release) month.
    pub origin: Month,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel_digest: Option<String>,
    /// Manifests of the cell's outputs, relative to the store root.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub cells: Vec<CellRecord>,
}

/// Directory layout of one experiment's outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultStore {
    pub root: PathBuf,
}

impl ResultStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResultStore { root: root.into() }
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn cell_rel(model_id: &str, info_set: InfoSet, origin: Month) -> String {
        format!("cells/{model_id}/{info_set}/{origin}")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn load_config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config_path())
    }

    pub fn load_manifest(&self) -> Result<RunManifest> {
        let path = self.manifest_path();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub store: ResultStore,
    pub manifest: RunManifest,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.manifest.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }
}

/// Release months with a vintage file in `dir`, keyed to their paths.
pub fn list_vintages(dir: &Path) -> Result<BTreeMap<Month, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        if let Some(month) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<Month>().ok()) {
            out.insert(month, path);
        }
    }
    Ok(out)
}

pub fn load_vintage(path: &Path, manifest: &SeriesManifest, format: VintageFormat, release: Month) -> Result<Vintage> {
    match format {
        VintageFormat::Standard => parse_vintage_with_release(path, manifest, release),
        VintageFormat::FredMd => parse_fred_md(path, manifest, release),
    }
}

/// The final vintage named in the config, or the latest release in the archive.
pub fn load_final_vintage(cfg: &ExperimentConfig, manifest: &SeriesManifest) -> Result<Vintage> {
    let vintages = list_vintages(&cfg.data_dir)?;
    match &cfg.final_vintage {
        Some(path) => {
            let release = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<Month>().ok())
                .or_else(|| vintages.keys().next_back().copied())
                .unwrap_or(cfg.holdout_end);
            load_vintage(path, manifest, cfg.vintage_format, release)
        }
        None => {
            let (&release, path) = vintages
                .iter()
                .next_back()
                .ok_or_else(|| Error::EmptyRange(format!("no vintage files in {}", cfg.data_dir.display())))?;
            load_vintage(path, manifest, cfg.vintage_format, release)
        }
    }
}

/// Factor-source series: everything outside the base set that has at least
/// two distinct observations from `start` on.
fn usable_wide_codes(vintage: &Vintage, manifest: &SeriesManifest, base: &[String], start: Month) -> Vec<String> {
    manifest
        .codes_excluding(base)
        .into_iter()
        .filter(|code| {
            let (Some(s), Ok(tc)) = (vintage.get(code), vintage.tcode(code)) else {
                return false;
            };
            let Ok(t) = apply_transform(s, tc) else {
                return false;
            };
            let obs: Vec<f64> = t
                .values
                .iter()
                .enumerate()
                .filter(|(i, _)| t.start.plus(*i as i32) >= start)
                .filter_map(|(_, v)| *v)
                .collect();
            obs.len() >= 2 && obs.iter().any(|v| (v - obs[0]).abs() > 1e-12 * obs[0].abs().max(1.0))
        })
        .collect()
}

/// Standardized estimation panel of one model on one information set.
pub fn prepare_panel(
    vintage: &Vintage,
    manifest: &SeriesManifest,
    spec: ModelSpec,
    pca_k: usize,
    sample_start: Option<Month>,
) -> Result<Panel> {
    let base = manifest.codes_up_to(spec.size);
    let start = match sample_start {
        Some(s) => s,
        None => common_start(vintage, &base)?,
    };
    if !spec.pca || pca_k == 0 {
        return standardize(&build_panel(vintage, &base, start)?);
    }
    let wide = usable_wide_codes(vintage, manifest, &base, start);
    if wide.len() < pca_k {
        return Err(Error::Config(format!(
            "{} usable factor-source series, need at least {pca_k}",
            wide.len()
        )));
    }
    let mut all = base.clone();
    all.extend(wide.iter().cloned());
    let joint = standardize(&build_panel(vintage, &all, start)?)?;
    let base_idx: Vec<usize> = (0..base.len()).collect();
    let wide_idx: Vec<usize> = (base.len()..all.len()).collect();
    let factors = extract_pcs(&joint.select_columns(&wide_idx), pca_k)?;
    augment_panel(&joint.select_columns(&base_idx), &factors)
}

struct CellJob {
    spec: ModelSpec,
    info_set: InfoSet,
    origin: Month,
}

/// Run every (model, information set, holdout month) cell and persist the
/// chains and predictive draws under `out`. Failing cells are recorded and
/// skipped; the run itself only fails on configuration or input errors.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<RunSummary> {
    cfg.validate()?;
    let manifest = cfg.load_manifest()?;
    let lags = cfg.lags_for(&manifest);
    let focus_codes = cfg.focus_codes(&manifest);
    let final_vintage = load_final_vintage(cfg, &manifest)?;
    let archive = list_vintages(&cfg.data_dir)?;
    let holdout = cfg.holdout();

    let mut realtime: BTreeMap<Month, Vintage> = BTreeMap::new();
    if cfg.modes.contains(&InfoSet::Realtime) {
        for &tau in &holdout {
            let path = archive.get(&tau).ok_or(Error::MissingVintage(tau))?;
            realtime.insert(tau, load_vintage(path, &manifest, cfg.vintage_format, tau)?);
        }
    }

    let store = ResultStore::new(out);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cfg.save(&store.config_path())?;

    let mut jobs_list = Vec::new();
    for &origin in &holdout {
        for &spec in &cfg.models {
            for &info_set in &cfg.modes {
                jobs_list.push(CellJob { spec, info_set, origin });
            }
        }
    }

    let run_cell = |job: &CellJob| -> CellRecord {
        let model_id = job.spec.id();
        let seed = cell_seed(cfg.seed, &model_id, job.origin);
        let rel = ResultStore::cell_rel(&model_id, job.info_set, job.origin);
        let dir = store.root.join(&rel);
        let mut record = CellRecord {
            model_id: model_id.clone(),
            info_set: job.info_set,
            origin: job.origin,
            seed,
            status: CellStatus::Ok,
            error: None,
            panel_digest: None,
            files: Vec::new(),
        };
        let result = (|| -> Result<()> {
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            let pseudo;
            let vintage = match job.info_set {
                InfoSet::Realtime => &realtime[&job.origin],
                InfoSet::Pseudo => {
                    pseudo = crate::vintage::truncate_final_vintage(&final_vintage, job.origin, &lags)?;
                    &pseudo
                }
            };
            let panel = prepare_panel(vintage, &manifest, job.spec, cfg.pca_k, cfg.sample_start)?;
            record.panel_digest = Some(panel.digest());
            let focus: Vec<usize> = focus_codes
                .iter()
                .map(|c| panel.column_index(c).ok_or_else(|| Error::UnknownSeries(c.clone())))
                .collect::<Result<_>>()?;
            let mut sampler = cfg.sampler.clone();
            sampler.tvp = job.spec.tvp;
            let chain = run_chain(&panel, &sampler, seed)?;
            let fseed = derive_seed(seed, "forecast");
            let mut draws = draw_forecasts(&chain, &panel.std_info, &cfg.horizons, &focus, fseed)?;
            draws.model_id = model_id.clone();
            if cfg.save_draws {
                chain.save(&dir.join("chain"))?;
                record.files.push(format!("{rel}/chain/manifest.json"));
            }
            draws.save(&dir.join("forecast"))?;
            record.files.push(format!("{rel}/forecast/manifest.json"));
            Ok(())
        })();
        match result {
            Ok(()) => log::info!("{model_id} {} {}: done", job.info_set, job.origin),
            Err(e) => {
                log::warn!("{model_id} {} {}: {e}", job.info_set, job.origin);
                record.status = CellStatus::Failed;
                record.error = Some(e.to_string());
                record.files.clear();
            }
        }
        record
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let cells: Vec<CellRecord> = pool.install(|| jobs_list.par_iter().map(run_cell).collect());

    let run_manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        files: vec!["config.json".into()],
        cells,
    };
    let path = store.manifest_path();
    fs::write(&path, serde_json::to_string_pretty(&run_manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(RunSummary {
        store,
        manifest: run_manifest,
    })
}
