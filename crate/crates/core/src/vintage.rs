//! Vintage ingestion, stationarity transforms and pseudo out-of-sample truncation.
//!
//! A vintage is one dated data release: every series it contains is stored on a
//! contiguous monthly index, with unreleased or blank cells kept as explicit
//! missing values.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::Month;

/// Stationarity transform codes, following the FRED-MD numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TransformCode {
    /// (1) no transformation
    Level,
    /// (2) first difference
    Diff,
    /// (4) log level
    Log,
    /// (5) first difference of logs
    DiffLog,
    /// (6) second difference of logs
    Diff2Log,
}

impl TransformCode {
    pub fn code(self) -> u8 {
        match self {
            TransformCode::Level => 1,
            TransformCode::Diff => 2,
            TransformCode::Log => 4,
            TransformCode::DiffLog => 5,
            TransformCode::Diff2Log => 6,
        }
    }

    /// Number of leading observations consumed by differencing.
    pub fn order(self) -> usize {
        match self {
            TransformCode::Level | TransformCode::Log => 0,
            TransformCode::Diff | TransformCode::DiffLog => 1,
            TransformCode::Diff2Log => 2,
        }
    }

    fn takes_log(self) -> bool {
        matches!(
            self,
            TransformCode::Log | TransformCode::DiffLog | TransformCode::Diff2Log
        )
    }
}

impl TryFrom<u8> for TransformCode {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        match code {
            1 => Ok(TransformCode::Level),
            2 => Ok(TransformCode::Diff),
            4 => Ok(TransformCode::Log),
            5 => Ok(TransformCode::DiffLog),
            6 => Ok(TransformCode::Diff2Log),
            other => Err(Error::InvalidTransformCode(other)),
        }
    }
}

impl From<TransformCode> for u8 {
    fn from(code: TransformCode) -> u8 {
        code.code()
    }
}

impl fmt::Display for TransformCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// A month-indexed series on a contiguous range starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub start: Month,
    pub values: Vec<Option<f64>>,
}

impl Series {
    pub fn new(start: Month, values: Vec<Option<f64>>) -> Self {
        Series { start, values }
    }

    /// Fully observed series.
    pub fn observed(start: Month, values: &[f64]) -> Self {
        Series::new(start, values.iter().copied().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last month on the index (observed or not).
    pub fn end(&self) -> Option<Month> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.start.plus(self.values.len() as i32 - 1))
        }
    }

    pub fn get(&self, month: Month) -> Option<f64> {
        let offset = month.since(self.start);
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied().flatten()
    }

    pub fn first_observed(&self) -> Option<Month> {
        self.values
            .iter()
            .position(Option::is_some)
            .map(|i| self.start.plus(i as i32))
    }

    pub fn last_observed(&self) -> Option<Month> {
        self.values
            .iter()
            .rposition(Option::is_some)
            .map(|i| self.start.plus(i as i32))
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Drop every cell after `last`.
    pub fn truncated(&self, last: Month) -> Series {
        let keep = (last.since(self.start) + 1).clamp(0, self.values.len() as i32) as usize;
        Series::new(self.start, self.values[..keep].to_vec())
    }
}

/// Membership group of a series in the model-size hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Small,
    Medium,
    Large,
    Extra,
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(Group::Small),
            "medium" => Ok(Group::Medium),
            "large" => Ok(Group::Large),
            "extra" | "" => Ok(Group::Extra),
            other => Err(Error::Config(format!("unknown series group `{other}`"))),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Group::Small => "small",
            Group::Medium => "medium",
            Group::Large => "large",
            Group::Extra => "extra",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub code: String,
    pub tcode: TransformCode,
    pub lag_months: u32,
    pub group: Group,
}

/// Ordered list of series with their transform code, publication lag and group.
///
/// CSV layout: `code,tcode,lag_months,group`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeriesManifest {
    pub entries: Vec<ManifestEntry>,
}

const FRED_MD_MANIFEST: &str = include_str!("../data/fred_md_manifest.csv");
const EA_RTD_MANIFEST: &str = include_str!("../data/ea_rtd_manifest.csv");

impl SeriesManifest {
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let field = |j: usize| record.get(j).unwrap_or("");
            let code = field(0).to_string();
            if code.is_empty() {
                return Err(Error::Config(format!("manifest row {}: empty code", i + 1)));
            }
            let tcode: u8 = field(1)
                .parse()
                .map_err(|_| Error::Config(format!("manifest row {}: bad tcode", i + 1)))?;
            let lag_months: u32 = field(2)
                .parse()
                .map_err(|_| Error::Config(format!("manifest row {}: bad lag", i + 1)))?;
            entries.push(ManifestEntry {
                code,
                tcode: TransformCode::try_from(tcode)?,
                lag_months,
                group: field(3).parse()?,
            });
        }
        Ok(SeriesManifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["code", "tcode", "lag_months", "group"])?;
        for e in &self.entries {
            w.write_record([
                e.code.clone(),
                e.tcode.to_string(),
                e.lag_months.to_string(),
                e.group.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Bundled FRED-MD series list (99 series).
    pub fn fred_md() -> Self {
        Self::from_csv_str(FRED_MD_MANIFEST).expect("bundled FRED-MD manifest is valid")
    }

    /// Bundled EA-RTD series list (94 series).
    pub fn ea_rtd() -> Self {
        Self::from_csv_str(EA_RTD_MANIFEST).expect("bundled EA-RTD manifest is valid")
    }

    pub fn get(&self, code: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.code == code)
    }

    /// Codes of a model size: small ⊂ medium ⊂ large, in manifest order.
    pub fn codes_up_to(&self, size: Group) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.group != Group::Extra && e.group <= size)
            .map(|e| e.code.clone())
            .collect()
    }

    /// Every code not in `exclude`, in manifest order.
    pub fn codes_excluding(&self, exclude: &[String]) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !exclude.contains(&e.code))
            .map(|e| e.code.clone())
            .collect()
    }

    /// Per-series publication lags taken from the manifest.
    pub fn lag_profile(&self) -> LagProfile {
        LagProfile {
            default_lag: 1,
            per_series: self
                .entries
                .iter()
                .map(|e| (e.code.clone(), e.lag_months))
                .collect(),
        }
    }
}

/// Publication lag in months, per series with a fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    pub default_lag: u32,
    #[serde(default)]
    pub per_series: BTreeMap<String, u32>,
}

impl Default for LagProfile {
    fn default() -> Self {
        LagProfile::uniform(1)
    }
}

impl LagProfile {
    pub fn uniform(lag: u32) -> Self {
        LagProfile {
            default_lag: lag,
            per_series: BTreeMap::new(),
        }
    }

    pub fn lag(&self, code: &str) -> u32 {
        self.per_series.get(code).copied().unwrap_or(self.default_lag)
    }
}

/// One data release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vintage {
    pub release: Month,
    pub series: BTreeMap<String, Series>,
    pub tcodes: BTreeMap<String, TransformCode>,
}

impl Vintage {
    pub fn get(&self, code: &str) -> Option<&Series> {
        self.series.get(code)
    }

    pub fn first_month(&self) -> Option<Month> {
        self.series.values().map(|s| s.start).min()
    }

    pub fn last_observed(&self) -> Option<Month> {
        self.series.values().filter_map(Series::last_observed).max()
    }

    pub fn tcode(&self, code: &str) -> Result<TransformCode> {
        self.tcodes
            .get(code)
            .copied()
            .ok_or_else(|| Error::UnknownSeries(code.to_string()))
    }

    /// Write in the vintage CSV layout (`date,<code>...` with `YYYY-MM` rows).
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let codes: Vec<&String> = self.series.keys().collect();
        let start = self.first_month();
        let end = self.series.values().filter_map(Series::end).max();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["date".to_string()];
        header.extend(codes.iter().map(|c| c.to_string()));
        w.write_record(&header)?;
        if let (Some(start), Some(end)) = (start, end) {
            for month in Month::range_inclusive(start, end) {
                let mut row = vec![month.to_string()];
                for code in &codes {
                    row.push(
                        self.series[*code]
                            .get(month)
                            .map(|v| v.to_string())
                            .unwrap_or_default(),
                    );
                }
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Read a vintage CSV; the release month is taken from the file stem (`YYYY-MM.csv`).
pub fn parse_vintage(path: &Path, manifest: &SeriesManifest) -> Result<Vintage> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let release: Month = stem.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        column: "filename".into(),
        message: format!("file stem `{stem}` is not a release month"),
    })?;
    parse_vintage_with_release(path, manifest, release)
}

pub fn parse_vintage_with_release(
    path: &Path,
    manifest: &SeriesManifest,
    release: Month,
) -> Result<Vintage> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vintage_str(&text, path, manifest, release)
}

pub(crate) fn parse_vintage_str(
    text: &str,
    path: &Path,
    manifest: &SeriesManifest,
    release: Month,
) -> Result<Vintage> {
    let parse_err = |row: usize, column: &str, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(Error::NoDataRows(path.to_path_buf()));
    }
    let codes = &header[1..];
    for code in codes {
        if manifest.get(code).is_none() {
            return Err(Error::UnknownSeries(code.clone()));
        }
    }

    let mut rows: BTreeMap<Month, Vec<Option<f64>>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let stamp = record.get(0).unwrap_or("");
        let month: Month = stamp
            .parse()
            .map_err(|_| parse_err(row, &header[0], format!("malformed month stamp `{stamp}`")))?;
        let mut cells = Vec::with_capacity(codes.len());
        for (j, code) in codes.iter().enumerate() {
            let cell = record.get(j + 1).unwrap_or("");
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                cells.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(row, code, format!("non-numeric cell `{cell}`")))?;
                if !v.is_finite() {
                    return Err(parse_err(row, code, format!("non-finite cell `{cell}`")));
                }
                cells.push(Some(v));
            }
        }
        if rows.insert(month, cells).is_some() {
            return Err(parse_err(row, &header[0], format!("duplicate month {month}")));
        }
    }
    let (Some(&start), Some(&end)) = (rows.keys().next(), rows.keys().next_back()) else {
        return Err(Error::NoDataRows(path.to_path_buf()));
    };

    let len = (end.since(start) + 1) as usize;
    let mut series = BTreeMap::new();
    let mut tcodes = BTreeMap::new();
    for (j, code) in codes.iter().enumerate() {
        let mut values = vec![None; len];
        for (month, cells) in &rows {
            values[month.since(start) as usize] = cells[j];
        }
        series.insert(code.clone(), Series::new(start, values));
        tcodes.insert(code.clone(), manifest.get(code).expect("checked above").tcode);
    }
    Ok(Vintage {
        release,
        series,
        tcodes,
    })
}

/// Read a vintage in the layout published by FRED-MD: a `sasdate` column with
/// `M/D/YYYY` stamps, a `Transform:` row, and series outside the manifest,
/// which are ignored.
pub fn parse_fred_md(path: &Path, manifest: &SeriesManifest, release: Month) -> Result<Vintage> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let keep: Vec<usize> = (1..header.len()).filter(|&j| manifest.get(&header[j]).is_some()).collect();
    let mut csv_out = csv::Writer::from_writer(Vec::new());
    let mut out_header = vec!["date".to_string()];
    out_header.extend(keep.iter().map(|&j| header[j].clone()));
    csv_out.write_record(&out_header)?;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let stamp = record.get(0).unwrap_or("");
        if stamp.is_empty() || stamp.to_ascii_lowercase().starts_with("transform") {
            continue;
        }
        let month = us_date_month(stamp).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: i + 2,
            column: header[0].clone(),
            message: format!("malformed date `{stamp}`"),
        })?;
        let mut row = vec![month.to_string()];
        row.extend(keep.iter().map(|&j| record.get(j).unwrap_or("").to_string()));
        csv_out.write_record(&row)?;
    }
    let bytes = csv_out.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    parse_vintage_str(&String::from_utf8_lossy(&bytes), path, manifest, release)
}

fn us_date_month(stamp: &str) -> Option<Month> {
    let mut parts = stamp.split('/');
    let month: u32 = parts.next()?.parse().ok()?;
    let _day: u32 = parts.next()?.parse().ok()?;
    let year: i32 = parts.next()?.parse().ok()?;
    Month::new(year, month)
}

/// Apply a stationarity transform. Any output cell that depends on a missing
/// input is missing.
pub fn apply_transform(series: &Series, code: TransformCode) -> Result<Series> {
    let order = code.order();
    if series.len() < order + 1 {
        return Err(Error::SeriesTooShort {
            code: code.code(),
            len: series.len(),
        });
    }
    let base: Vec<Option<f64>> = if code.takes_log() {
        series
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| match *v {
                Some(x) if x <= 0.0 => Err(Error::NonPositive {
                    code: code.code(),
                    value: x,
                    month: series.start.plus(i as i32),
                }),
                Some(x) => Ok(Some(x.ln())),
                None => Ok(None),
            })
            .collect::<Result<_>>()?
    } else {
        series.values.clone()
    };
    let mut out = base;
    for _ in 0..order {
        out = difference(&out);
    }
    Ok(Series::new(series.start.plus(order as i32), out))
}

fn difference(values: &[Option<f64>]) -> Vec<Option<f64>> {
    values
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect()
}

/// Pseudo out-of-sample information set: for each series keep observations up
/// to `asof - lag`, and stamp the result as released at `asof`.
pub fn truncate_final_vintage(final_vintage: &Vintage, asof: Month, lags: &LagProfile) -> Result<Vintage> {
    match final_vintage.first_month() {
        Some(first) if asof >= first => {}
        Some(first) => {
            return Err(Error::Config(format!(
                "truncation month {asof} precedes sample start {first}"
            )))
        }
        None => return Err(Error::EmptyRange("final vintage has no series".into())),
    }
    let series = final_vintage
        .series
        .iter()
        .map(|(code, s)| {
            let last = asof.minus(lags.lag(code) as i32);
            (code.clone(), s.truncated(last))
        })
        .collect();
    Ok(Vintage {
        release: asof,
        series,
        tcodes: final_vintage.tcodes.clone(),
    })
}
