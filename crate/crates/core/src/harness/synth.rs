//! Synthetic vintage archives from a known VAR with stochastic volatility.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forecast::build_companion;
use crate::month::Month;
use crate::vintage::{Group, LagProfile, ManifestEntry, Series, SeriesManifest, TransformCode, Vintage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Lag matrices `A_1..A_P`, each row-major M×M.
    pub a: Vec<Vec<Vec<f64>>>,
    pub intercept: Vec<f64>,
    /// Innovation covariance at unit volatility.
    pub omega: Vec<Vec<f64>>,
    /// Persistence and innovation sd of the log-volatility AR(1).
    pub sv_phi: f64,
    pub sv_sd: f64,
    /// Number of wide series, each a random combination of the VAR variables plus noise.
    pub n_wide: usize,
    pub wide_noise_sd: f64,
    /// Months of ground truth.
    pub n_obs: usize,
    pub start: Month,
    /// Releases to emit; the last one is the final vintage.
    pub n_vintages: usize,
    /// Revision noise on the last 12 months of every non-final vintage, in
    /// units of each series' standard deviation.
    pub revision_noise_sd: f64,
    pub lag_profile: LagProfile,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            a: vec![
                vec![vec![0.5, 0.2, 0.0], vec![0.0, 0.6, 0.0], vec![-0.2, 0.0, 0.4]],
                vec![vec![0.2, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.2]],
            ],
            intercept: vec![0.1, 0.0, -0.1],
            omega: vec![vec![1.0, 0.3, 0.0], vec![0.3, 1.0, 0.2], vec![0.0, 0.2, 1.0]],
            sv_phi: 0.95,
            sv_sd: 0.1,
            n_wide: 20,
            wide_noise_sd: 1.0,
            n_obs: 200,
            start: Month::new(1990, 1).expect("valid month"),
            n_vintages: 25,
            revision_noise_sd: 0.5,
            lag_profile: LagProfile::uniform(1),
            seed: 1,
        }
    }
}

/// Manifest groups for base variables: 3 small, 3 medium, 5 large, then extra.
fn base_group(i: usize) -> Group {
    match i {
        0..=2 => Group::Small,
        3..=5 => Group::Medium,
        6..=10 => Group::Large,
        _ => Group::Extra,
    }
}

pub fn base_code(i: usize) -> String {
    format!("Y{}", i + 1)
}

pub fn wide_code(k: usize) -> String {
    format!("W{:02}", k + 1)
}

impl SyntheticSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn m(&self) -> usize {
        self.intercept.len()
    }

    fn matrices(&self) -> Result<(Vec<DMatrix<f64>>, DVector<f64>, DMatrix<f64>)> {
        let m = self.m();
        let to_mat = |rows: &Vec<Vec<f64>>, what: &str| -> Result<DMatrix<f64>> {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(Error::Dimension(format!("{what} must be {m}×{m}")));
            }
            Ok(DMatrix::from_fn(m, m, |r, c| rows[r][c]))
        };
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(l, rows)| to_mat(rows, &format!("A_{}", l + 1)))
            .collect::<Result<Vec<_>>>()?;
        let omega = to_mat(&self.omega, "omega")?;
        Ok((a, DVector::from_column_slice(&self.intercept), omega))
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        let (a, c, _) = self.matrices()?;
        let comp = build_companion(&a, &c)?;
        Ok(comp.matrix.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn validate(&self) -> Result<()> {
        let rho = self.spectral_radius()?;
        if rho >= 1.0 {
            return Err(Error::Unstable(rho));
        }
        if self.n_vintages == 0 || self.n_obs < 24 {
            return Err(Error::Config("need at least one vintage and 24 months of truth".into()));
        }
        if !(self.sv_phi.abs() < 1.0) || self.sv_sd < 0.0 || self.revision_noise_sd < 0.0 {
            return Err(Error::Config("invalid volatility or revision noise settings".into()));
        }
        Ok(())
    }

    pub fn manifest(&self) -> SeriesManifest {
        let lag = |code: &str| self.lag_profile.lag(code);
        let mut entries: Vec<ManifestEntry> = (0..self.m())
            .map(|i| {
                let code = base_code(i);
                ManifestEntry {
                    tcode: TransformCode::Level,
                    lag_months: lag(&code),
                    group: base_group(i),
                    code,
                }
            })
            .collect();
        entries.extend((0..self.n_wide).map(|k| {
            let code = wide_code(k);
            ManifestEntry {
                tcode: TransformCode::Level,
                lag_months: lag(&code),
                group: Group::Extra,
                code,
            }
        }));
        SeriesManifest { entries }
    }

    /// Ground truth: VAR variables followed by the wide series, `n_obs` rows.
    pub fn simulate_truth(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let (a, c, omega) = self.matrices()?;
        let m = self.m();
        let p = a.len();
        let chol = omega
            .cholesky()
            .ok_or_else(|| Error::Config("omega must be positive definite".into()))?
            .l();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let burn = 100;
        let total = burn + self.n_obs;
        let mut y = DMatrix::zeros(total, m);
        let mut h = DVector::<f64>::zeros(m);
        for t in p..total {
            let mut mean = c.clone();
            for (l, al) in a.iter().enumerate() {
                mean += al * y.row(t - l - 1).transpose();
            }
            for i in 0..m {
                let xi: f64 = StandardNormal.sample(&mut rng);
                h[i] = self.sv_phi * h[i] + self.sv_sd * xi;
            }
            let z = DVector::from_fn(m, |i, _| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (h[i] / 2.0).exp() * e
            });
            let row = mean + &chol * z;
            y.row_mut(t).copy_from(&row.transpose());
        }
        let base = y.rows(burn, self.n_obs).into_owned();
        let loadings = DMatrix::from_fn(m, self.n_wide, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let noise = Normal::new(0.0, self.wide_noise_sd).map_err(|e| Error::Config(e.to_string()))?;
        let wide = &base * loadings + DMatrix::from_fn(self.n_obs, self.n_wide, |_, _| noise.sample(&mut rng));
        let mut truth = DMatrix::zeros(self.n_obs, m + self.n_wide);
        truth.view_mut((0, 0), (self.n_obs, m)).copy_from(&base);
        truth.view_mut((0, m), (self.n_obs, self.n_wide)).copy_from(&wide);
        Ok(truth)
    }
}

/// Files written by [`generate_synthetic_vintages`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticArchive {
    pub dir: PathBuf,
    pub releases: Vec<Month>,
    pub final_release: Month,
    pub manifest: SeriesManifest,
}

/// Write one vintage per release month plus `manifest.csv` and `spec.json`.
///
/// The final release carries the truth. Earlier releases end `lag` months
/// before their release date and perturb their last 12 observations with
/// independent Gaussian revision noise.
pub fn generate_synthetic_vintages(spec: &SyntheticSpec, dir: &Path) -> Result<SyntheticArchive> {
    let truth = spec.simulate_truth()?;
    let manifest = spec.manifest();
    let codes: Vec<String> = manifest.entries.iter().map(|e| e.code.clone()).collect();
    let end = spec.start.plus(spec.n_obs as i32 - 1);
    let max_lag = codes.iter().map(|c| spec.lag_profile.lag(c)).max().unwrap_or(0);
    let final_release = end.plus(max_lag as i32);
    let releases: Vec<Month> = (0..spec.n_vintages)
        .map(|k| final_release.minus((spec.n_vintages - 1 - k) as i32))
        .collect();

    let sds: Vec<f64> = (0..truth.ncols())
        .map(|j| {
            let col = truth.column(j);
            let mean = col.mean();
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0)).sqrt()
        })
        .collect();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // revision noise comes from its own stream so the truth does not depend on it
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    for &release in &releases {
        let is_final = release == final_release;
        let mut series = BTreeMap::new();
        let mut tcodes = BTreeMap::new();
        for (j, code) in codes.iter().enumerate() {
            let last = release.minus(spec.lag_profile.lag(code) as i32);
            let n = if last < spec.start {
                0
            } else {
                ((last.since(spec.start) + 1) as usize).min(spec.n_obs)
            };
            let mut values: Vec<Option<f64>> = (0..n).map(|t| Some(truth[(t, j)])).collect();
            if !is_final && spec.revision_noise_sd > 0.0 {
                let noisy_from = n.saturating_sub(12);
                for v in values.iter_mut().skip(noisy_from) {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    *v = v.map(|x| x + spec.revision_noise_sd * sds[j] * e);
                }
            }
            series.insert(code.clone(), Series::new(spec.start, values));
            tcodes.insert(code.clone(), TransformCode::Level);
        }
        let vintage = Vintage {
            release,
            series,
            tcodes,
        };
        vintage.save_csv(&dir.join(format!("{release}.csv")))?;
    }
    manifest.save(&dir.join("manifest.csv"))?;
    let spec_path = dir.join("spec.json");
    fs::write(&spec_path, serde_json::to_string_pretty(spec)?).map_err(|e| Error::io(&spec_path, e))?;
    Ok(SyntheticArchive {
        dir: dir.to_path_buf(),
        releases,
        final_release,
        manifest,
    })
}

/// SHA-256 over the sorted file names and contents of a directory tree.
pub fn directory_digest(dir: &Path) -> Result<String> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(&path, root, out)?;
            } else {
                let rel = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
                out.push((rel, path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for (rel, path) in files {
        h.update(rel.as_bytes());
        h.update([0u8]);
        h.update(fs::read(&path).map_err(|e| Error::io(&path, e))?);
    }
    Ok(hex::encode(h.finalize()))
}
