use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::month::Month;
use crate::sampler::SamplerConfig;
use crate::score::InfoSet;
use crate::vintage::{Group, LagProfile, SeriesManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Us,
    Ea,
    Synthetic,
}

/// Vintage file layout inside `data_dir`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VintageFormat {
    /// `date,<codes>` header with `YYYY-MM` stamps.
    #[default]
    Standard,
    /// Raw FRED-MD download (`sasdate`, `Transform:` row, `M/D/YYYY`).
    FredMd,
}

/// One model of the grid: size, time variation and factor augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelSpec {
    pub size: Group,
    pub tvp: bool,
    pub pca: bool,
}

impl ModelSpec {
    /// The 3 sizes × {CP, TVP} × {without, with PCs} grid.
    pub fn grid() -> Vec<ModelSpec> {
        let mut out = Vec::with_capacity(12);
        for size in [Group::Small, Group::Medium, Group::Large] {
            for tvp in [false, true] {
                for pca in [false, true] {
                    out.push(ModelSpec { size, tvp, pca });
                }
            }
        }
        out
    }

    pub fn id(&self) -> String {
        format!(
            "{}-{}{}",
            self.size,
            if self.tvp { "tvp" } else { "cp" },
            if self.pca { "-pca" } else { "" }
        )
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("model id `{s}` is not <size>-<cp|tvp>[-pca]"));
        let mut parts = s.split('-');
        let size: Group = parts.next().ok_or_else(bad)?.parse()?;
        if size == Group::Extra {
            return Err(bad());
        }
        let tvp = match parts.next() {
            Some("cp") => false,
            Some("tvp") => true,
            _ => return Err(bad()),
        };
        let pca = match parts.next() {
            None => false,
            Some("pca") => true,
            Some(_) => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(ModelSpec { size, tvp, pca })
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_models() -> Vec<ModelSpec> {
    ModelSpec::grid()
}
fn default_pca_k() -> usize {
    5
}
fn default_horizons() -> Vec<usize> {
    vec![1, 3, 12]
}
fn default_modes() -> Vec<InfoSet> {
    vec![InfoSet::Realtime, InfoSet::Pseudo]
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    /// Directory of vintage CSVs, one file per release named `YYYY-MM.csv`.
    pub data_dir: PathBuf,
    #[serde(default)]
    pub vintage_format: VintageFormat,
    /// Series manifest; defaults to the bundled list for `us`/`ea` and to
    /// `<data_dir>/manifest.csv` for synthetic data.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    /// Final vintage used for pseudo out-of-sample sets and for evaluation;
    /// defaults to the latest release in `data_dir`.
    #[serde(default)]
    pub final_vintage: Option<PathBuf>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_pca_k")]
    pub pca_k: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    pub holdout_start: Month,
    pub holdout_end: Month,
    /// Publication lags for truncating the final vintage; defaults to the manifest's.
    #[serde(default)]
    pub lag_profile: Option<LagProfile>,
    /// First estimation month; defaults to the first month all base series are observed.
    #[serde(default)]
    pub sample_start: Option<Month>,
    /// Focus variables scored individually and jointly; defaults to the small set.
    #[serde(default)]
    pub focus: Option<Vec<String>>,
    #[serde(default = "default_modes")]
    pub modes: Vec<InfoSet>,
    #[serde(default)]
    pub seed: u64,
    /// Persist each cell's posterior draw store.
    #[serde(default = "default_true")]
    pub save_draws: bool,
}

impl ExperimentConfig {
    /// A desk-scale configuration over `data_dir` with paper defaults elsewhere.
    pub fn new(dataset: Dataset, data_dir: impl Into<PathBuf>, holdout_start: Month, holdout_end: Month) -> Self {
        ExperimentConfig {
            dataset,
            data_dir: data_dir.into(),
            vintage_format: VintageFormat::Standard,
            manifest: None,
            final_vintage: None,
            models: default_models(),
            pca_k: default_pca_k(),
            sampler: SamplerConfig::default(),
            horizons: default_horizons(),
            holdout_start,
            holdout_end,
            lag_profile: None,
            sample_start: None,
            focus: None,
            modes: default_modes(),
            seed: 0,
            save_draws: true,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.holdout_end < self.holdout_start {
            return Err(Error::Config(format!(
                "holdout ends {} before it starts {}",
                self.holdout_end, self.holdout_start
            )));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be positive and non-empty".into()));
        }
        if self.models.is_empty() || self.modes.is_empty() {
            return Err(Error::Config("no models or no information sets selected".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn holdout(&self) -> Vec<Month> {
        Month::range_inclusive(self.holdout_start, self.holdout_end).collect()
    }

    pub fn load_manifest(&self) -> Result<SeriesManifest> {
        match (&self.manifest, self.dataset) {
            (Some(path), _) => SeriesManifest::load(path),
            (None, Dataset::Us) => Ok(SeriesManifest::fred_md()),
            (None, Dataset::Ea) => Ok(SeriesManifest::ea_rtd()),
            (None, Dataset::Synthetic) => SeriesManifest::load(&self.data_dir.join("manifest.csv")),
        }
    }

    pub fn lags_for(&self, manifest: &SeriesManifest) -> LagProfile {
        self.lag_profile.clone().unwrap_or_else(|| manifest.lag_profile())
    }

    pub fn focus_codes(&self, manifest: &SeriesManifest) -> Vec<String> {
        self.focus.clone().unwrap_or_else(|| manifest.codes_up_to(Group::Small))
    }
}
