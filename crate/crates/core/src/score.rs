//! Point and density forecast metrics, cumulative scores, model rankings and
//! rank agreement.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky_jitter;
use crate::month::Month;
use crate::panel::StandardizationInfo;

pub fn abs_fe(realized: f64, point: f64) -> f64 {
    (realized - point).abs()
}

pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Config("RMSE of an empty holdout".into()));
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// `log(mean(exp(x)))` with a max shift.
pub fn log_mean_exp(logs: &[f64]) -> f64 {
    if logs.is_empty() {
        return f64::NAN;
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    max + (total / logs.len() as f64).ln()
}

fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * var).ln() - 0.5 * d * d / var
}

/// Log of the draw-averaged Gaussian density of `realized` under the
/// de-standardized moments `(m + s·μ, s²·σ²)`.
pub fn marginal_lpl(realized: f64, moments: &[(f64, f64)], m: f64, s: f64) -> Result<f64> {
    if moments.is_empty() {
        return Err(Error::Config("no predictive draws".into()));
    }
    let logs: Vec<f64> = moments
        .iter()
        .map(|&(mu, var)| normal_log_density(realized, m + s * mu, s * s * var))
        .collect();
    let lpl = log_mean_exp(&logs);
    if lpl.is_finite() {
        Ok(lpl)
    } else {
        Err(Error::Numerical(format!("non-finite log predictive likelihood {lpl}")))
    }
}

/// Log multivariate Gaussian density of a de-standardized draw: covariance
/// `(S_y L)(S_y L)'` with `L L' = Σ̃`.
pub fn joint_log_density(
    realized: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    std_info: &StandardizationInfo,
) -> Result<f64> {
    let f = realized.len();
    let l = cholesky_jitter(cov, "joint predictive covariance")?.l();
    let s = DVector::from_column_slice(&std_info.sd);
    let sl = DMatrix::from_diagonal(&s) * l;
    let dev = DVector::from_fn(f, |i, _| realized[i] - (std_info.mean[i] + s[i] * mean[i]));
    let u = sl
        .solve_lower_triangular(&dev)
        .ok_or_else(|| Error::Numerical("singular predictive factor".into()))?;
    let log_det: f64 = (0..f).map(|i| sl[(i, i)].abs().ln()).sum();
    Ok(-0.5 * f as f64 * (2.0 * PI).ln() - log_det - 0.5 * u.norm_squared())
}

pub fn joint_lpl(
    realized: &DVector<f64>,
    moments: &[(DVector<f64>, DMatrix<f64>)],
    std_info: &StandardizationInfo,
) -> Result<f64> {
    if moments.is_empty() {
        return Err(Error::Config("no predictive draws".into()));
    }
    if std_info.len() != realized.len() {
        return Err(Error::Dimension("focus standardization does not match realized vector".into()));
    }
    let logs = moments
        .iter()
        .map(|(mu, cov)| joint_log_density(realized, mu, cov, std_info))
        .collect::<Result<Vec<_>>>()?;
    let lpl = log_mean_exp(&logs);
    if lpl.is_finite() {
        Ok(lpl)
    } else {
        Err(Error::Numerical(format!("non-finite joint log predictive likelihood {lpl}")))
    }
}

pub fn cumulate(scores: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Higher is better (log scores).
    Descending,
    /// Lower is better (forecast errors).
    Ascending,
}

/// Rank 1 is best; ties share the average of their ranks.
pub fn rank_models(scores: &[f64], direction: Direction) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| match direction {
        Direction::Descending => -scores[i],
        Direction::Ascending => scores[i],
    };
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && key(order[end]) == key(order[start]) {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Kendall's τ-b; `None` when either vector is entirely tied.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Dimension(format!(
            "Kendall's tau needs two vectors of equal length >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let (mut s, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = (a[i] - a[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let db = (b[i] - b[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            s += da * db;
            ties_a += (da == 0) as i64;
            ties_b += (db == 0) as i64;
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - ties_a) as f64 * (n0 - ties_b) as f64).sqrt();
    Ok(if denom > 0.0 { Some(s as f64 / denom) } else { None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativeKind {
    /// `realtime − pseudo`, for log scores.
    Difference,
    /// `realtime / pseudo`, for forecast errors; `None` where pseudo is zero.
    Ratio,
}

pub fn relative_series(realtime: &[f64], pseudo: &[f64], kind: RelativeKind) -> Result<Vec<Option<f64>>> {
    if realtime.len() != pseudo.len() {
        return Err(Error::Dimension(format!(
            "relative series of lengths {} and {}",
            realtime.len(),
            pseudo.len()
        )));
    }
    Ok(realtime
        .iter()
        .zip(pseudo)
        .map(|(r, p)| match kind {
            RelativeKind::Difference => Some(r - p),
            RelativeKind::Ratio => (*p != 0.0).then(|| r / p),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoSet {
    Realtime,
    Pseudo,
}

impl InfoSet {
    pub fn as_str(self) -> &'static str {
        match self {
            InfoSet::Realtime => "realtime",
            InfoSet::Pseudo => "pseudo",
        }
    }
}

impl std::fmt::Display for InfoSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InfoSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realtime" => Ok(InfoSet::Realtime),
            "pseudo" => Ok(InfoSet::Pseudo),
            other => Err(Error::Config(format!("unknown information set `{other}`"))),
        }
    }
}

pub const JOINT: &str = "joint";

/// One scored forecast: a focus variable (with its absolute error) or the
/// joint focus triple (`fe` empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub model_id: String,
    pub info_set: InfoSet,
    pub origin: Month,
    pub horizon: usize,
    pub variable: String,
    pub fe: Option<f64>,
    pub lpl: f64,
    pub target: Month,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.model_id, a.info_set, a.origin, a.horizon, &a.variable)
                .cmp(&(&b.model_id, b.info_set, b.origin, b.horizon, &b.variable))
        });
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["model_id", "info_set", "origin", "horizon", "variable", "fe", "lpl", "target"])?;
        for r in &self.rows {
            w.write_record([
                r.model_id.clone(),
                r.info_set.to_string(),
                r.origin.to_string(),
                r.horizon.to_string(),
                r.variable.clone(),
                r.fe.map(|v| v.to_string()).unwrap_or_default(),
                r.lpl.to_string(),
                r.target.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |column: &str, message: String| Error::Parse {
                path: path.to_path_buf(),
                row: n + 2,
                column: column.into(),
                message,
            };
            let num = |i: usize, column: &str| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| bad(column, e.to_string()))
            };
            rows.push(ScoreRow {
                model_id: rec[0].to_string(),
                info_set: rec[1].parse()?,
                origin: rec[2].parse()?,
                horizon: rec[3].parse().map_err(|e: std::num::ParseIntError| bad("horizon", e.to_string()))?,
                variable: rec[4].to_string(),
                fe: if rec[5].is_empty() { None } else { Some(num(5, "fe")?) },
                lpl: num(6, "lpl")?,
                target: rec[7].parse()?,
            });
        }
        Ok(ScoreTable { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn point_metrics() {
        assert_eq!(abs_fe(2.0, 2.0), 0.0);
        assert_eq!(abs_fe(2.0, 3.5), 1.5);
        assert_eq!(abs_fe(0.0, 1.7), abs_fe(0.0, -1.7));
        assert_eq!(rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(rmse(&[3.0, 4.0]).unwrap(), 12.5f64.sqrt(), epsilon = 1e-15);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn marginal_examples() {
        let lpl = marginal_lpl(0.0, &[(0.0, 1.0 / (2.0 * PI))], 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(lpl, 0.0, epsilon = 1e-14);
        // densities 0.1 and 0.3 at the realized value
        let var_for = |d: f64| 1.0 / (2.0 * PI * d * d);
        let lpl = marginal_lpl(0.0, &[(0.0, var_for(0.1)), (0.0, var_for(0.3))], 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(lpl, 0.2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_focus_joint_equals_marginal() {
        let info = StandardizationInfo { mean: vec![1.0], sd: vec![2.0] };
        let draws = vec![
            (DVector::from_element(1, 0.2), DMatrix::from_element(1, 1, 0.8)),
            (DVector::from_element(1, -0.4), DMatrix::from_element(1, 1, 1.3)),
        ];
        let j = joint_lpl(&DVector::from_element(1, 1.7), &draws, &info).unwrap();
        let m = marginal_lpl(1.7, &[(0.2, 0.8), (-0.4, 1.3)], 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(j, m, epsilon = 1e-12);
    }

    #[test]
    fn cumulative_sums() {
        assert_eq!(cumulate(&[1.0, 1.0, 1.0]), vec![1.0, 2.0, 3.0]);
        assert!(cumulate(&[]).is_empty());
        assert_eq!(cumulate(&[-1.0, 2.0]), vec![-1.0, 1.0]);
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(rank_models(&[3.0, 1.0, 2.0], Direction::Descending), vec![1.0, 3.0, 2.0]);
        assert_eq!(rank_models(&[5.0, 5.0], Direction::Descending), vec![1.5, 1.5]);
        assert_eq!(rank_models(&[1.0, 2.0], Direction::Ascending), vec![1.0, 2.0]);
    }

    #[test]
    fn tau_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&a, &a).unwrap(), Some(1.0));
        assert_eq!(kendall_tau(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        let tau = kendall_tau(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap().unwrap();
        assert_abs_diff_eq!(tau, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(kendall_tau(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
    }

    #[test]
    fn relative_examples() {
        let s = [0.5, 1.0];
        assert_eq!(relative_series(&s, &s, RelativeKind::Difference).unwrap(), vec![Some(0.0); 2]);
        assert_eq!(relative_series(&s, &s, RelativeKind::Ratio).unwrap(), vec![Some(1.0); 2]);
        assert_eq!(relative_series(&[1.0], &[0.0], RelativeKind::Ratio).unwrap(), vec![None]);
        // a realtime level of 0.986 next to a difference of −0.202 puts pseudo at 1.188
        let d = relative_series(&[0.986], &[1.188], RelativeKind::Difference).unwrap()[0].unwrap();
        assert_abs_diff_eq!(d, -0.202, epsilon = 1e-12);
    }
}
