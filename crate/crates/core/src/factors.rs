//! Principal-component factors extracted from the wide standardized panel.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::panel::{Panel, StandardizationInfo};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    /// T×k component scores, each column with unit standard deviation.
    pub scores: DMatrix<f64>,
    /// N×k orthonormal loadings.
    pub loadings: DMatrix<f64>,
    /// Eigenvalues of the sample covariance, descending.
    pub explained_variance: Vec<f64>,
    /// Per row: did the wide panel observe anything that month.
    pub row_observed: Vec<bool>,
}

impl FactorSet {
    pub fn k(&self) -> usize {
        self.loadings.ncols()
    }
}

/// Top-`k` principal components of a standardized panel. Missing cells are
/// zero-filled before the eigendecomposition of the sample covariance.
pub fn extract_pcs(wide: &Panel, k: usize) -> Result<FactorSet> {
    let (t, n) = (wide.nrows(), wide.ncols());
    if t < 2 || n == 0 {
        return Err(Error::EmptyRange("wide panel is empty".into()));
    }
    if k > t.min(n) {
        return Err(Error::Config(format!("k = {k} exceeds min(T, N) = {}", t.min(n))));
    }
    let data = wide.filled_with(0.0);
    let row_observed = (0..t).map(|r| (0..n).any(|j| wide.mask[(r, j)])).collect();
    if k == 0 {
        return Ok(FactorSet {
            scores: DMatrix::zeros(t, 0),
            loadings: DMatrix::zeros(n, 0),
            explained_variance: Vec::new(),
            row_observed,
        });
    }

    let cov = data.transpose() * &data / (t as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[k - 1]];
    let scale = eig.eigenvalues[order[0]].abs().max(1e-300);
    if top <= 1e-12 * scale {
        return Err(Error::Numerical(format!("k = {k} exceeds the rank of the wide panel")));
    }

    let mut loadings = DMatrix::zeros(n, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let pivot = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
        if pivot < 0.0 {
            v.neg_mut();
        }
        loadings.set_column(c, &v);
    }
    let mut scores = &data * &loadings;
    for c in 0..k {
        let col = scores.column(c);
        let mean = col.sum() / t as f64;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t as f64 - 1.0)).sqrt();
        if sd > 0.0 {
            scores.column_mut(c).scale_mut(1.0 / sd);
        }
    }
    Ok(FactorSet {
        scores,
        loadings,
        explained_variance: order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect(),
        row_observed,
    })
}

/// Append factor columns (`PC1`, `PC2`, ...) after the base series.
pub fn augment_panel(base: &Panel, factors: &FactorSet) -> Result<Panel> {
    if factors.scores.nrows() != base.nrows() || factors.row_observed.len() != base.nrows() {
        return Err(Error::Dimension(format!(
            "factor rows {} vs panel rows {}",
            factors.scores.nrows(),
            base.nrows()
        )));
    }
    let k = factors.k();
    if k == 0 {
        return Ok(base.clone());
    }
    let (t, m) = (base.nrows(), base.ncols());
    let mut values = DMatrix::from_element(t, m + k, f64::NAN);
    let mut mask = DMatrix::from_element(t, m + k, false);
    values.view_mut((0, 0), (t, m)).copy_from(&base.values);
    mask.view_mut((0, 0), (t, m)).copy_from(&base.mask);
    for r in 0..t {
        if factors.row_observed[r] {
            for c in 0..k {
                values[(r, m + c)] = factors.scores[(r, c)];
                mask[(r, m + c)] = true;
            }
        }
    }
    let mut codes = base.codes.clone();
    codes.extend((1..=k).map(|c| format!("PC{c}")));
    let mut mean = base.std_info.mean.clone();
    let mut sd = base.std_info.sd.clone();
    mean.extend(std::iter::repeat_n(0.0, k));
    sd.extend(std::iter::repeat_n(1.0, k));
    Ok(Panel {
        values,
        mask,
        periods: base.periods.clone(),
        codes,
        std_info: StandardizationInfo { mean, sd },
    })
}
