//! Aligned, standardized T×M panels with explicit missing-value masks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::Month;
use crate::vintage::{apply_transform, Series, Vintage};

/// Pre-standardization column moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationInfo {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl StandardizationInfo {
    pub fn identity(m: usize) -> Self {
        StandardizationInfo {
            mean: vec![0.0; m],
            sd: vec![1.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> StandardizationInfo {
        StandardizationInfo {
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            sd: idx.iter().map(|&i| self.sd[i]).collect(),
        }
    }
}

/// Transformed series on a common monthly grid. Missing cells hold `NaN` in
/// `values` and `false` in `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub values: DMatrix<f64>,
    pub mask: DMatrix<bool>,
    pub periods: Vec<Month>,
    pub codes: Vec<String>,
    pub std_info: StandardizationInfo,
}

impl Panel {
    /// Build from a fully specified matrix; `NaN` cells become missing.
    pub fn from_matrix(values: DMatrix<f64>, start: Month, codes: Vec<String>) -> Result<Panel> {
        if values.ncols() != codes.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} codes",
                values.ncols(),
                codes.len()
            )));
        }
        let mask = values.map(|v| v.is_finite());
        let values = values.map(|v| if v.is_finite() { v } else { f64::NAN });
        let periods = (0..values.nrows()).map(|t| start.plus(t as i32)).collect();
        let m = codes.len();
        Ok(Panel {
            values,
            mask,
            periods,
            codes,
            std_info: StandardizationInfo::identity(m),
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn start(&self) -> Option<Month> {
        self.periods.first().copied()
    }

    pub fn end(&self) -> Option<Month> {
        self.periods.last().copied()
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|o| !**o).count()
    }

    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for t in 0..self.nrows() {
            for j in 0..self.ncols() {
                if !self.mask[(t, j)] {
                    cells.push((t, j));
                }
            }
        }
        cells
    }

    /// Values with missing cells replaced by `fill`.
    pub fn filled_with(&self, fill: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |t, j| {
            if self.mask[(t, j)] {
                self.values[(t, j)]
            } else {
                fill
            }
        })
    }

    pub fn column_index(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    /// Columns `idx` in the given order, with their standardization moments.
    pub fn select_columns(&self, idx: &[usize]) -> Panel {
        let values = DMatrix::from_fn(self.nrows(), idx.len(), |t, j| self.values[(t, idx[j])]);
        let mask = DMatrix::from_fn(self.nrows(), idx.len(), |t, j| self.mask[(t, idx[j])]);
        Panel {
            values,
            mask,
            periods: self.periods.clone(),
            codes: idx.iter().map(|&i| self.codes[i].clone()).collect(),
            std_info: self.std_info.subset(idx),
        }
    }

    /// Index of the last row with every cell observed.
    pub fn last_complete_row(&self) -> Option<usize> {
        (0..self.nrows())
            .rev()
            .find(|&t| (0..self.ncols()).all(|j| self.mask[(t, j)]))
    }

    /// Stable content digest (values bit patterns, mask, grid and codes).
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for c in &self.codes {
            h.update(c.as_bytes());
            h.update([0u8]);
        }
        for p in &self.periods {
            h.update(p.to_string().as_bytes());
        }
        for v in self.values.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        for o in self.mask.iter() {
            h.update([*o as u8]);
        }
        for (m, s) in self.std_info.mean.iter().zip(&self.std_info.sd) {
            h.update(m.to_bits().to_le_bytes());
            h.update(s.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Transform the selected series and align them on a common grid running from
/// `sample_start` through the latest observed month across the selection.
pub fn build_panel(vintage: &Vintage, series_set: &[String], sample_start: Month) -> Result<Panel> {
    if series_set.is_empty() {
        return Err(Error::EmptyRange("no series selected".into()));
    }
    let transformed: Vec<Series> = series_set
        .iter()
        .map(|code| {
            let s = vintage
                .get(code)
                .ok_or_else(|| Error::UnknownSeries(code.clone()))?;
            apply_transform(s, vintage.tcode(code)?)
        })
        .collect::<Result<_>>()?;
    let end = transformed
        .iter()
        .filter_map(Series::last_observed)
        .max()
        .ok_or_else(|| Error::EmptyRange("selected series have no observations".into()))?;
    if end < sample_start {
        return Err(Error::EmptyRange(format!(
            "sample start {sample_start} is after the last observation {end}"
        )));
    }
    for (code, s) in series_set.iter().zip(&transformed) {
        let in_window = Month::range_inclusive(sample_start, end).any(|mo| s.get(mo).is_some());
        if !in_window {
            return Err(Error::EmptyRange(format!(
                "series `{code}` has no observation between {sample_start} and {end}"
            )));
        }
    }
    let rows = (end.since(sample_start) + 1) as usize;
    let values = DMatrix::from_fn(rows, series_set.len(), |t, j| {
        transformed[j]
            .get(sample_start.plus(t as i32))
            .unwrap_or(f64::NAN)
    });
    Panel::from_matrix(values, sample_start, series_set.to_vec())
}

/// Earliest month at which every selected series is observed after transformation.
pub fn common_start(vintage: &Vintage, series_set: &[String]) -> Result<Month> {
    let mut start: Option<Month> = None;
    for code in series_set {
        let s = vintage
            .get(code)
            .ok_or_else(|| Error::UnknownSeries(code.clone()))?;
        let t = apply_transform(s, vintage.tcode(code)?)?;
        let first = t
            .first_observed()
            .ok_or_else(|| Error::EmptyRange(format!("series `{code}` is empty after transform")))?;
        start = Some(start.map_or(first, |s: Month| s.max(first)));
    }
    start.ok_or_else(|| Error::EmptyRange("no series selected".into()))
}

/// Per column, subtract the mean and divide by the sample standard deviation
/// (denominator n−1) of the observed entries.
pub fn standardize(panel: &Panel) -> Result<Panel> {
    let mut out = panel.clone();
    let mut mean = Vec::with_capacity(panel.ncols());
    let mut sd = Vec::with_capacity(panel.ncols());
    for j in 0..panel.ncols() {
        let obs: Vec<f64> = (0..panel.nrows())
            .filter(|&t| panel.mask[(t, j)])
            .map(|t| panel.values[(t, j)])
            .collect();
        if obs.len() < 2 {
            return Err(Error::TooFewObservations {
                code: panel.codes[j].clone(),
                observed: obs.len(),
            });
        }
        let n = obs.len() as f64;
        let m = obs.iter().sum::<f64>() / n;
        let var = obs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let s = var.sqrt();
        if !(s > 1e-12 * m.abs().max(1.0)) {
            return Err(Error::ZeroVariance(panel.codes[j].clone()));
        }
        for t in 0..panel.nrows() {
            if panel.mask[(t, j)] {
                out.values[(t, j)] = (panel.values[(t, j)] - m) / s;
            }
        }
        // compose with any previous standardization
        let (m0, s0) = (panel.std_info.mean[j], panel.std_info.sd[j]);
        mean.push(m0 + s0 * m);
        sd.push(s0 * s);
    }
    out.std_info = StandardizationInfo { mean, sd };
    Ok(out)
}

/// Map a standardized vector back to original units: `x ⊙ s + m`.
pub fn destandardize(x: &DVector<f64>, info: &StandardizationInfo) -> DVector<f64> {
    assert_eq!(x.len(), info.len(), "destandardize: dimension mismatch");
    DVector::from_fn(x.len(), |i, _| x[i] * info.sd[i] + info.mean[i])
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::vintage::TransformCode;

    fn m(s: &str) -> Month {
        s.parse().unwrap()
    }

    fn vintage(series: &[(&str, Series)]) -> Vintage {
        Vintage {
            release: m("2001-01"),
            series: series.iter().map(|(c, s)| (c.to_string(), s.clone())).collect(),
            tcodes: series
                .iter()
                .map(|(c, _)| (c.to_string(), TransformCode::Level))
                .collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn ragged_edge_last_row() {
        let start = m("2000-01");
        let v = vintage(&[
            ("A", Series::observed(start, &[1.0, 2.0, 3.0, 4.0])),
            ("B", Series::observed(start, &[1.0, 2.0, 3.0])),
        ]);
        let p = build_panel(&v, &["A".into(), "B".into()], start).unwrap();
        assert_eq!(p.nrows(), 4);
        let last = p.nrows() - 1;
        assert_eq!((0..2).filter(|&j| p.mask[(last, j)]).count(), 1);
        assert_eq!(p.last_complete_row(), Some(2));
    }

    #[test]
    fn single_full_series() {
        let start = m("2000-01");
        let v = vintage(&[("A", Series::observed(start, &[1.0, 2.0, 5.0]))]);
        let p = build_panel(&v, &["A".into()], start).unwrap();
        assert!(p.mask.iter().all(|o| *o));
        assert!(build_panel(&v, &["A".into()], m("2001-01")).is_err());
        assert!(build_panel(&v, &["Q".into()], start).is_err());
    }

    #[test]
    fn standardize_examples() {
        let p = Panel::from_matrix(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]), m("2000-01"), vec!["A".into()])
            .unwrap();
        let s = standardize(&p).unwrap();
        assert_eq!(s.values.as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.std_info.mean, vec![2.0]);
        assert_eq!(s.std_info.sd, vec![1.0]);

        let flat = Panel::from_matrix(DMatrix::from_element(3, 1, 5.0), m("2000-01"), vec!["F".into()]).unwrap();
        assert!(matches!(standardize(&flat), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn standardize_uses_observed_entries_only() {
        let p = Panel::from_matrix(
            DMatrix::from_column_slice(3, 1, &[1.0, f64::NAN, 3.0]),
            m("2000-01"),
            vec!["A".into()],
        )
        .unwrap();
        let s = standardize(&p).unwrap();
        // oracle: drop missing, then textbook formulas
        let obs = [1.0_f64, 3.0];
        let mean = (obs[0] + obs[1]) / 2.0;
        let sd = (((obs[0] - mean) * (obs[0] - mean) + (obs[1] - mean) * (obs[1] - mean)) / 1.0).sqrt();
        assert!((s.std_info.mean[0] - mean).abs() < 1e-15);
        assert!((s.std_info.sd[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.std_info.sd[0] - sd).abs() < 1e-15);
        assert!((s.values[(0, 0)] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(!s.mask[(1, 0)]);
        assert!((s.values[(2, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn destandardize_examples() {
        let info = StandardizationInfo { mean: vec![2.0, 3.0], sd: vec![4.0, 5.0] };
        assert_eq!(destandardize(&DVector::zeros(2), &info).as_slice(), &[2.0, 3.0]);
        assert_eq!(destandardize(&DVector::from_vec(vec![1.0, -1.0]), &info).as_slice(), &[6.0, -2.0]);
    }
}
