use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::state::{ChainState, SystemMatrices};
use crate::error::{Error, Result};
use crate::month::Month;
use crate::panel::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    pub mu: f64,
    pub phi: f64,
    pub sigma_eta: f64,
}

/// What one retained sweep leaves behind for forecasting.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedDraw {
    /// M×PM terminal lag coefficients.
    pub a: DMatrix<f64>,
    pub intercept: DVector<f64>,
    /// Terminal log variances h_T.
    pub log_vol: DVector<f64>,
    /// Terminal reduced-form covariance Ω_T.
    pub omega: DMatrix<f64>,
    pub sv: Vec<SvParams>,
    /// Last P rows of the filled panel, oldest first.
    pub y_tail: DMatrix<f64>,
    /// Values at the panel's masked cells.
    pub imputed: Vec<f64>,
}

impl RetainedDraw {
    pub fn from_state(state: &ChainState, panel: &Panel, lags: usize) -> Result<Self> {
        let sys = SystemMatrices::from_betas(&state.terminal.beta, lags, &state.terminal.log_vol)?;
        let t = state.filled.nrows();
        Ok(RetainedDraw {
            a: sys.a,
            intercept: sys.intercept,
            log_vol: DVector::from_column_slice(&state.terminal.log_vol),
            omega: sys.omega,
            sv: state
                .vols
                .iter()
                .map(|v| SvParams {
                    mu: v.mu,
                    phi: v.phi,
                    sigma_eta: v.sigma_eta,
                })
                .collect(),
            y_tail: state.filled.rows(t - lags, lags).into_owned(),
            imputed: state.imputed_values(panel),
        })
    }

    /// Lag block `A_l` (1-based).
    pub fn lag_block(&self, l: usize) -> DMatrix<f64> {
        let m = self.a.nrows();
        self.a.columns((l - 1) * m, m).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    pub codes: Vec<String>,
    pub lags: usize,
    pub seed: u64,
    pub config_hash: String,
    /// Last month of the estimation grid.
    pub origin: Option<Month>,
    pub imputed_cells: Vec<(usize, usize)>,
    pub draws: Vec<RetainedDraw>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreManifest {
    codes: Vec<String>,
    lags: usize,
    seed: u64,
    config_hash: String,
    origin: Option<Month>,
    n_draws: usize,
    imputed_cells: Vec<(usize, usize)>,
    files: Vec<String>,
    digest: String,
}

const FILES: [&str; 8] = [
    "a_t.csv",
    "intercept_t.csv",
    "h_t.csv",
    "sigma_t.csv",
    "omega_t.csv",
    "sv_params.csv",
    "y_tail.csv",
    "imputed.csv",
];

impl DrawStore {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn n_series(&self) -> usize {
        self.codes.len()
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.codes {
            h.update(c.as_bytes());
            h.update([0u8]);
        }
        h.update((self.lags as u64).to_le_bytes());
        h.update(self.seed.to_le_bytes());
        h.update(self.config_hash.as_bytes());
        for d in &self.draws {
            for row in d.flat_rows() {
                for v in row {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }

    /// Write the store as one CSV per quantity (one row per draw) plus `manifest.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let m = self.n_series();
        let pm = self.lags * m;
        let headers: Vec<Vec<String>> = vec![
            (0..m).flat_map(|i| (0..pm).map(move |c| format!("a_{}_{}", i + 1, c + 1))).collect(),
            (0..m).map(|i| format!("c_{}", i + 1)).collect(),
            (0..m).map(|i| format!("h_{}", i + 1)).collect(),
            (0..m).map(|i| format!("sigma_{}", i + 1)).collect(),
            (0..m).flat_map(|i| (0..m).map(move |j| format!("omega_{}_{}", i + 1, j + 1))).collect(),
            (0..m)
                .flat_map(|i| ["mu", "phi", "sigma_eta"].map(|p| format!("{p}_{}", i + 1)))
                .collect(),
            (0..self.lags).flat_map(|l| (0..m).map(move |j| format!("y_{}_{}", l + 1, j + 1))).collect(),
            self.imputed_cells.iter().map(|(t, j)| format!("cell_{t}_{j}")).collect(),
        ];
        let mut writers = Vec::with_capacity(FILES.len());
        for (name, header) in FILES.iter().zip(&headers) {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            let mut row = vec!["draw".to_string()];
            row.extend(header.iter().cloned());
            w.write_record(&row)?;
            writers.push(w);
        }
        for (s, d) in self.draws.iter().enumerate() {
            for (w, values) in writers.iter_mut().zip(d.flat_rows()) {
                let mut row = vec![s.to_string()];
                row.extend(values.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
        for mut w in writers {
            w.flush().map_err(|e| Error::io(dir, e))?;
        }
        let manifest = StoreManifest {
            codes: self.codes.clone(),
            lags: self.lags,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            origin: self.origin,
            n_draws: self.len(),
            imputed_cells: self.imputed_cells.clone(),
            files: FILES.iter().map(|s| s.to_string()).collect(),
            digest: self.digest(),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: StoreManifest = serde_json::from_str(&text)?;
        let m = manifest.codes.len();
        let lags = manifest.lags;
        let mut tables = Vec::with_capacity(FILES.len());
        for name in FILES {
            let mut r = csv::Reader::from_path(dir.join(name))?;
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec?;
                let vals: std::result::Result<Vec<f64>, _> = rec.iter().skip(1).map(|v| v.parse::<f64>()).collect();
                rows.push(vals.map_err(|e| Error::Numerical(format!("{name}: {e}")))?);
            }
            if rows.len() != manifest.n_draws {
                return Err(Error::Dimension(format!(
                    "{name}: {} rows, manifest lists {} draws",
                    rows.len(),
                    manifest.n_draws
                )));
            }
            tables.push(rows);
        }
        let draws = (0..manifest.n_draws)
            .map(|s| {
                let sv = tables[5][s]
                    .chunks(3)
                    .map(|c| SvParams {
                        mu: c[0],
                        phi: c[1],
                        sigma_eta: c[2],
                    })
                    .collect();
                RetainedDraw {
                    a: DMatrix::from_row_slice(m, lags * m, &tables[0][s]),
                    intercept: DVector::from_column_slice(&tables[1][s]),
                    log_vol: DVector::from_column_slice(&tables[2][s]),
                    omega: DMatrix::from_row_slice(m, m, &tables[4][s]),
                    sv,
                    y_tail: DMatrix::from_row_slice(lags, m, &tables[6][s]),
                    imputed: tables[7][s].clone(),
                }
            })
            .collect();
        let store = DrawStore {
            codes: manifest.codes,
            lags,
            seed: manifest.seed,
            config_hash: manifest.config_hash,
            origin: manifest.origin,
            imputed_cells: manifest.imputed_cells,
            draws,
        };
        if store.digest() != manifest.digest {
            return Err(Error::Numerical(format!("{}: digest mismatch", dir.display())));
        }
        Ok(store)
    }
}

impl RetainedDraw {
    /// Row-major flattenings in the order of the store's files.
    fn flat_rows(&self) -> Vec<Vec<f64>> {
        let row_major = |x: &DMatrix<f64>| x.transpose().as_slice().to_vec();
        vec![
            row_major(&self.a),
            self.intercept.as_slice().to_vec(),
            self.log_vol.as_slice().to_vec(),
            self.log_vol.iter().map(|h| h.exp()).collect(),
            row_major(&self.omega),
            self.sv.iter().flat_map(|p| [p.mu, p.phi, p.sigma_eta]).collect(),
            row_major(&self.y_tail),
            self.imputed.clone(),
        ]
    }
}
