//! Iterated multi-step predictive moments in companion form and Gaussian
//! predictive draws in original units.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::draw_mvn;
use crate::month::Month;
use crate::panel::{destandardize, StandardizationInfo};
use crate::sampler::{DrawStore, RetainedDraw};

/// VAR(1) representation of a VAR(P): `Y_{t+1} = Ã Y_t + c̃ + (ε_{t+1}', 0')'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Companion {
    pub matrix: DMatrix<f64>,
    /// Intercept in the first M rows, zeros below.
    pub intercept: DVector<f64>,
    pub m: usize,
}

impl Companion {
    pub fn lags(&self) -> usize {
        self.matrix.nrows() / self.m
    }
}

pub fn build_companion(a_blocks: &[DMatrix<f64>], intercept: &DVector<f64>) -> Result<Companion> {
    let p = a_blocks.len();
    if p == 0 {
        return Err(Error::Dimension("companion form needs at least one lag".into()));
    }
    let m = intercept.len();
    if a_blocks.iter().any(|a| a.shape() != (m, m)) {
        return Err(Error::Dimension(format!("lag blocks must be {m}×{m}")));
    }
    let mut matrix = DMatrix::zeros(m * p, m * p);
    for (l, a) in a_blocks.iter().enumerate() {
        matrix.view_mut((0, l * m), (m, m)).copy_from(a);
    }
    for r in m..m * p {
        matrix[(r, r - m)] = 1.0;
    }
    let mut c = DVector::zeros(m * p);
    c.rows_mut(0, m).copy_from(intercept);
    Ok(Companion { matrix, intercept: c, m })
}

/// Gaussian predictive moments of the first M entries at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub horizon: usize,
    pub draw_id: usize,
}

impl ForecastMoments {
    pub fn subset(&self, idx: &[usize]) -> ForecastMoments {
        ForecastMoments {
            mean: DVector::from_fn(idx.len(), |r, _| self.mean[idx[r]]),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]),
            horizon: self.horizon,
            draw_id: self.draw_id,
        }
    }
}

/// Moments at every horizon in `horizons` with coefficients and covariance
/// held at their origin values. `y_stack` is `(y_T', y_{T-1}', ..., y_{T-P+1}')'`.
pub fn forecast_path(
    companion: &Companion,
    omega: &DMatrix<f64>,
    y_stack: &DVector<f64>,
    horizons: &[usize],
) -> Result<Vec<ForecastMoments>> {
    let m = companion.m;
    let n = companion.matrix.nrows();
    if y_stack.len() != n || omega.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "companion has {n} states; got stack {} and Ω {:?}",
            y_stack.len(),
            omega.shape()
        )));
    }
    let max_h = horizons.iter().copied().max().unwrap_or(0);
    if horizons.contains(&0) {
        return Err(Error::Config("forecast horizons start at 1".into()));
    }
    let mut big_omega = DMatrix::zeros(n, n);
    big_omega.view_mut((0, 0), (m, m)).copy_from(omega);
    let mut mean = y_stack.clone();
    let mut cov = DMatrix::zeros(n, n);
    let mut out = Vec::with_capacity(horizons.len());
    for h in 1..=max_h {
        mean = &companion.matrix * mean + &companion.intercept;
        cov = &companion.matrix * cov * companion.matrix.transpose() + &big_omega;
        if horizons.contains(&h) {
            if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite forecast moments at horizon {h}")));
            }
            let c = cov.view((0, 0), (m, m));
            out.push(ForecastMoments {
                mean: mean.rows(0, m).into_owned(),
                cov: (c + c.transpose()) * 0.5,
                horizon: h,
                draw_id: 0,
            });
        }
    }
    out.sort_by_key(|f| horizons.iter().position(|&h| h == f.horizon));
    Ok(out)
}

pub fn forecast_moments(
    companion: &Companion,
    omega: &DMatrix<f64>,
    y_stack: &DVector<f64>,
    h: usize,
) -> Result<ForecastMoments> {
    Ok(forecast_path(companion, omega, y_stack, &[h])?.remove(0))
}

/// Companion matrix and lag stack of one retained draw.
pub fn draw_system(draw: &RetainedDraw, lags: usize) -> Result<(Companion, DVector<f64>)> {
    let blocks: Vec<DMatrix<f64>> = (1..=lags).map(|l| draw.lag_block(l)).collect();
    let companion = build_companion(&blocks, &draw.intercept)?;
    let m = draw.intercept.len();
    let y_stack = DVector::from_fn(lags * m, |c, _| draw.y_tail[(lags - 1 - c / m, c % m)]);
    Ok((companion, y_stack))
}

/// Predictive draws in original (transformed, de-standardized) units, plus the
/// standardized moments of the focus variables for density scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    pub model_id: String,
    pub origin: Option<Month>,
    pub seed: u64,
    pub horizons: Vec<usize>,
    pub codes: Vec<String>,
    pub std_info: StandardizationInfo,
    pub focus: Vec<usize>,
    n_draws: usize,
    /// Flat S×H×M array.
    values: Vec<f64>,
    /// Flat S×H, focus-subset moments in standardized units.
    focus_moments: Vec<ForecastMoments>,
}

impl PredictiveDraws {
    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_series(&self) -> usize {
        self.codes.len()
    }

    pub fn value(&self, s: usize, h_idx: usize, j: usize) -> f64 {
        let (hn, m) = (self.horizons.len(), self.n_series());
        self.values[(s * hn + h_idx) * m + j]
    }

    pub fn moments(&self, s: usize, h_idx: usize) -> &ForecastMoments {
        &self.focus_moments[s * self.horizons.len() + h_idx]
    }

    pub fn horizon_index(&self, h: usize) -> Option<usize> {
        self.horizons.iter().position(|&x| x == h)
    }

    /// Mean over draws of series `j` at horizon index `h_idx`.
    pub fn point(&self, h_idx: usize, j: usize) -> f64 {
        (0..self.n_draws).map(|s| self.value(s, h_idx, j)).sum::<f64>() / self.n_draws as f64
    }

    /// Per-draw focus moments at one horizon, in standardized units.
    pub fn focus_moments_at(&self, h_idx: usize) -> Vec<(DVector<f64>, DMatrix<f64>)> {
        (0..self.n_draws)
            .map(|s| {
                let f = self.moments(s, h_idx);
                (f.mean.clone(), f.cov.clone())
            })
            .collect()
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.model_id.as_bytes());
        h.update(self.seed.to_le_bytes());
        for v in &self.values {
            h.update(v.to_bits().to_le_bytes());
        }
        for f in &self.focus_moments {
            for v in f.mean.iter().chain(f.cov.iter()) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut w = csv::Writer::from_path(dir.join("draws.csv"))?;
        w.write_record(["draw", "horizon", "series", "value"])?;
        for s in 0..self.n_draws {
            for (hi, h) in self.horizons.iter().enumerate() {
                for (j, code) in self.codes.iter().enumerate() {
                    w.write_record([s.to_string(), h.to_string(), code.clone(), self.value(s, hi, j).to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv::Writer::from_path(dir.join("point.csv"))?;
        w.write_record(["horizon", "series", "value"])?;
        for (hi, h) in self.horizons.iter().enumerate() {
            for (j, code) in self.codes.iter().enumerate() {
                w.write_record([h.to_string(), code.clone(), self.point(hi, j).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let f = self.focus.len();
        let mut w = csv::Writer::from_path(dir.join("moments.csv"))?;
        let mut header = vec!["draw".to_string(), "horizon".to_string()];
        header.extend((0..f).map(|i| format!("mean_{i}")));
        header.extend((0..f).flat_map(|i| (0..f).map(move |j| format!("cov_{i}_{j}"))));
        w.write_record(&header)?;
        for s in 0..self.n_draws {
            for (hi, h) in self.horizons.iter().enumerate() {
                let fm = self.moments(s, hi);
                let mut row = vec![s.to_string(), h.to_string()];
                row.extend(fm.mean.iter().map(|v| v.to_string()));
                row.extend(fm.cov.transpose().iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let manifest = ForecastManifest {
            model_id: self.model_id.clone(),
            origin: self.origin,
            seed: self.seed,
            horizons: self.horizons.clone(),
            codes: self.codes.clone(),
            std_info: self.std_info.clone(),
            focus: self.focus.clone(),
            n_draws: self.n_draws,
            files: vec!["draws.csv".into(), "point.csv".into(), "moments.csv".into()],
            digest: self.digest(),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let man: ForecastManifest = serde_json::from_str(&text)?;
        let (hn, m, f) = (man.horizons.len(), man.codes.len(), man.focus.len());
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Numerical(format!("{}: {what}: {e}", dir.display())))
        };
        let mut values = Vec::with_capacity(man.n_draws * hn * m);
        let mut r = csv::Reader::from_path(dir.join("draws.csv"))?;
        for rec in r.records() {
            values.push(parse(&rec?[3], "draws.csv")?);
        }
        let mut focus_moments = Vec::with_capacity(man.n_draws * hn);
        let mut r = csv::Reader::from_path(dir.join("moments.csv"))?;
        for rec in r.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec.iter().map(|v| parse(v, "moments.csv")).collect::<Result<_>>()?;
            focus_moments.push(ForecastMoments {
                mean: DVector::from_column_slice(&vals[2..2 + f]),
                cov: DMatrix::from_row_slice(f, f, &vals[2 + f..2 + f + f * f]),
                horizon: vals[1] as usize,
                draw_id: vals[0] as usize,
            });
        }
        if values.len() != man.n_draws * hn * m || focus_moments.len() != man.n_draws * hn {
            return Err(Error::Dimension(format!("{}: forecast files do not match manifest", dir.display())));
        }
        let out = PredictiveDraws {
            model_id: man.model_id,
            origin: man.origin,
            seed: man.seed,
            horizons: man.horizons,
            codes: man.codes,
            std_info: man.std_info,
            focus: man.focus,
            n_draws: man.n_draws,
            values,
            focus_moments,
        };
        if out.digest() != man.digest {
            return Err(Error::Numerical(format!("{}: digest mismatch", dir.display())));
        }
        Ok(out)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ForecastManifest {
    model_id: String,
    origin: Option<Month>,
    seed: u64,
    horizons: Vec<usize>,
    codes: Vec<String>,
    std_info: StandardizationInfo,
    focus: Vec<usize>,
    n_draws: usize,
    files: Vec<String>,
    digest: String,
}

/// One Gaussian predictive draw per retained posterior draw and horizon.
pub fn draw_forecasts(
    store: &DrawStore,
    std_info: &StandardizationInfo,
    horizons: &[usize],
    focus: &[usize],
    seed: u64,
) -> Result<PredictiveDraws> {
    let m = store.n_series();
    if std_info.len() != m || focus.iter().any(|&j| j >= m) {
        return Err(Error::Dimension(format!(
            "store has {m} series; standardization has {}, focus {focus:?}",
            std_info.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(store.len() * horizons.len() * m);
    let mut focus_moments = Vec::with_capacity(store.len() * horizons.len());
    for (s, draw) in store.draws.iter().enumerate() {
        let (companion, y_stack) = draw_system(draw, store.lags)?;
        for mut fm in forecast_path(&companion, &draw.omega, &y_stack, horizons)? {
            fm.draw_id = s;
            let x = draw_mvn(&fm.mean, &fm.cov, &mut rng, "predictive covariance")?;
            values.extend(destandardize(&x, std_info).iter());
            focus_moments.push(fm.subset(focus));
        }
    }
    Ok(PredictiveDraws {
        model_id: String::new(),
        origin: store.origin,
        seed,
        horizons: horizons.to_vec(),
        codes: store.codes.clone(),
        std_info: std_info.clone(),
        focus: focus.to_vec(),
        n_draws: store.len(),
        values,
        focus_moments,
    })
}
