//! Scoring of stored predictive draws against the final vintage, and the
//! derived rank, rank-agreement and relative-performance series.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::experiment::{load_final_vintage, CellStatus, ResultStore};
use crate::error::{Error, Result};
use crate::forecast::PredictiveDraws;
use crate::month::Month;
use crate::score::{
    abs_fe, cumulate, joint_lpl, kendall_tau, marginal_lpl, rank_models, relative_series, rmse, Direction, InfoSet,
    RelativeKind, ScoreRow, ScoreTable, JOINT,
};
use crate::vintage::{apply_transform, Series};

/// Which score a derived series is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Cumulative log predictive likelihood, higher is better.
    Density,
    /// Cumulative absolute forecast error, lower is better.
    Point,
}

impl ScoreKind {
    fn direction(self) -> Direction {
        match self {
            ScoreKind::Density => Direction::Descending,
            ScoreKind::Point => Direction::Ascending,
        }
    }

    fn relative(self) -> RelativeKind {
        match self {
            ScoreKind::Density => RelativeKind::Difference,
            ScoreKind::Point => RelativeKind::Ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub info_set: InfoSet,
    pub horizon: usize,
    pub variable: String,
    pub kind: ScoreKind,
    pub origin: Month,
    pub model_id: String,
    pub cumulative: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRecord {
    pub horizon: usize,
    pub variable: String,
    pub kind: ScoreKind,
    pub origin: Month,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeRecord {
    pub horizon: usize,
    pub variable: String,
    pub kind: ScoreKind,
    pub origin: Month,
    pub model_id: String,
    pub realtime: f64,
    pub pseudo: f64,
    pub relative: Option<f64>,
}

/// End-of-holdout summary of one model and variable at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCell {
    pub mean_lps: f64,
    pub lps_rank: f64,
    pub rmse: Option<f64>,
    pub rmse_rank: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub scores: ScoreTable,
    pub ranks: Vec<RankRecord>,
    pub tau: Vec<TauRecord>,
    pub relative: Vec<RelativeRecord>,
    /// (info set, variable, model id, horizon) → summary.
    pub summary: BTreeMap<(InfoSet, String, String, usize), SummaryCell>,
    pub skipped_targets: usize,
}

pub const EVAL_FILES: [&str; 7] = [
    "scores.csv",
    "ranks.csv",
    "tau.csv",
    "relative.csv",
    "summary_realtime.csv",
    "summary_pseudo.csv",
    "summary_table.csv",
];

fn transformed_final(store: &ResultStore) -> Result<(super::config::ExperimentConfig, BTreeMap<String, Series>)> {
    let cfg = store.load_config()?;
    let manifest = cfg.load_manifest()?;
    let final_vintage = load_final_vintage(&cfg, &manifest)?;
    let mut out = BTreeMap::new();
    for code in cfg.focus_codes(&manifest) {
        let s = final_vintage.get(&code).ok_or_else(|| Error::UnknownSeries(code.clone()))?;
        out.insert(code.clone(), apply_transform(s, final_vintage.tcode(&code)?)?);
    }
    Ok((cfg, out))
}

/// Score rows of one cell's predictive draws.
pub fn score_cell(
    draws: &PredictiveDraws,
    info_set: InfoSet,
    vintage_month: Month,
    truth: &BTreeMap<String, Series>,
    skipped: &mut usize,
) -> Result<Vec<ScoreRow>> {
    let data_origin = draws
        .origin
        .ok_or_else(|| Error::Config(format!("{} draws have no forecast origin", draws.model_id)))?;
    let focus_info = draws.std_info.subset(&draws.focus);
    let mut rows = Vec::new();
    for (hi, &h) in draws.horizons.iter().enumerate() {
        let target = data_origin.plus(h as i32);
        let realized: Option<Vec<f64>> = draws
            .focus
            .iter()
            .map(|&j| truth.get(&draws.codes[j]).and_then(|s| s.get(target)))
            .collect();
        let Some(realized) = realized else {
            log::warn!("{} {info_set} {vintage_month} h={h}: no realized value at {target}", draws.model_id);
            *skipped += 1;
            continue;
        };
        let moments = draws.focus_moments_at(hi);
        for (fi, &j) in draws.focus.iter().enumerate() {
            let marg: Vec<(f64, f64)> = moments.iter().map(|(m, c)| (m[fi], c[(fi, fi)])).collect();
            let lpl = marginal_lpl(realized[fi], &marg, draws.std_info.mean[j], draws.std_info.sd[j])?;
            rows.push(ScoreRow {
                model_id: draws.model_id.clone(),
                info_set,
                origin: vintage_month,
                horizon: h,
                variable: draws.codes[j].clone(),
                fe: Some(abs_fe(realized[fi], draws.point(hi, j))),
                lpl,
                target,
            });
        }
        if draws.focus.len() > 1 {
            let lpl = joint_lpl(&DVector::from_vec(realized), &moments, &focus_info)?;
            rows.push(ScoreRow {
                model_id: draws.model_id.clone(),
                info_set,
                origin: vintage_month,
                horizon: h,
                variable: JOINT.to_string(),
                fe: None,
                lpl,
                target,
            });
        }
    }
    Ok(rows)
}

type Key = (usize, String);

/// Rank, τ and relative series on the months scored for every model in every
/// configured information set.
pub fn derive_series(
    scores: &ScoreTable,
    models: &[String],
    modes: &[InfoSet],
) -> Result<(Vec<RankRecord>, Vec<TauRecord>, Vec<RelativeRecord>)> {
    // (horizon, variable) → (mode, model) → origin → row
    let mut index: BTreeMap<Key, BTreeMap<(InfoSet, &str), BTreeMap<Month, &ScoreRow>>> = BTreeMap::new();
    for r in &scores.rows {
        index
            .entry((r.horizon, r.variable.clone()))
            .or_default()
            .entry((r.info_set, r.model_id.as_str()))
            .or_default()
            .insert(r.origin, r);
    }
    let (mut ranks, mut taus, mut rels) = (Vec::new(), Vec::new(), Vec::new());
    for ((h, var), by_cell) in &index {
        let mut months: Option<BTreeSet<Month>> = None;
        for mode in modes {
            for model in models {
                let have: BTreeSet<Month> = by_cell
                    .get(&(*mode, model.as_str()))
                    .map(|m| m.keys().copied().collect())
                    .unwrap_or_default();
                months = Some(match months {
                    None => have,
                    Some(prev) => prev.intersection(&have).copied().collect(),
                });
            }
        }
        let months: Vec<Month> = months.unwrap_or_default().into_iter().collect();
        if months.is_empty() {
            continue;
        }
        let kinds: &[ScoreKind] = if var == JOINT { &[ScoreKind::Density] } else { &[ScoreKind::Density, ScoreKind::Point] };
        for &kind in kinds {
            // mode → model → cumulative series over `months`
            let mut cum: BTreeMap<InfoSet, Vec<Vec<f64>>> = BTreeMap::new();
            for &mode in modes {
                let per_model: Vec<Vec<f64>> = models
                    .iter()
                    .map(|model| {
                        let rows = &by_cell[&(mode, model.as_str())];
                        let raw: Vec<f64> = months
                            .iter()
                            .map(|t| match kind {
                                ScoreKind::Density => rows[t].lpl,
                                ScoreKind::Point => rows[t].fe.unwrap_or(f64::NAN),
                            })
                            .collect();
                        cumulate(&raw)
                    })
                    .collect();
                cum.insert(mode, per_model);
            }
            let mut mode_ranks: BTreeMap<InfoSet, Vec<Vec<f64>>> = BTreeMap::new();
            for (&mode, per_model) in &cum {
                let mut by_month = Vec::with_capacity(months.len());
                for (ti, &t) in months.iter().enumerate() {
                    let at: Vec<f64> = per_model.iter().map(|s| s[ti]).collect();
                    let r = rank_models(&at, kind.direction());
                    for (mi, model) in models.iter().enumerate() {
                        ranks.push(RankRecord {
                            info_set: mode,
                            horizon: *h,
                            variable: var.clone(),
                            kind,
                            origin: t,
                            model_id: model.clone(),
                            cumulative: at[mi],
                            rank: r[mi],
                        });
                    }
                    by_month.push(r);
                }
                mode_ranks.insert(mode, by_month);
            }
            let (Some(rt), Some(ps)) = (cum.get(&InfoSet::Realtime), cum.get(&InfoSet::Pseudo)) else {
                continue;
            };
            if models.len() >= 2 {
                let (rr, pr) = (&mode_ranks[&InfoSet::Realtime], &mode_ranks[&InfoSet::Pseudo]);
                for (ti, &t) in months.iter().enumerate() {
                    taus.push(TauRecord {
                        horizon: *h,
                        variable: var.clone(),
                        kind,
                        origin: t,
                        tau: kendall_tau(&rr[ti], &pr[ti])?,
                    });
                }
            }
            for (mi, model) in models.iter().enumerate() {
                let rel = relative_series(&rt[mi], &ps[mi], kind.relative())?;
                for (ti, &t) in months.iter().enumerate() {
                    rels.push(RelativeRecord {
                        horizon: *h,
                        variable: var.clone(),
                        kind,
                        origin: t,
                        model_id: model.clone(),
                        realtime: rt[mi][ti],
                        pseudo: ps[mi][ti],
                        relative: rel[ti],
                    });
                }
            }
        }
    }
    Ok((ranks, taus, rels))
}

/// Average LPS and RMSE over the common holdout, with end-of-holdout ranks.
pub fn summarize(
    scores: &ScoreTable,
    models: &[String],
    modes: &[InfoSet],
) -> Result<BTreeMap<(InfoSet, String, String, usize), SummaryCell>> {
    let mut grouped: BTreeMap<Key, BTreeMap<(InfoSet, String), BTreeMap<Month, &ScoreRow>>> = BTreeMap::new();
    for r in &scores.rows {
        grouped
            .entry((r.horizon, r.variable.clone()))
            .or_default()
            .entry((r.info_set, r.model_id.clone()))
            .or_default()
            .insert(r.origin, r);
    }
    let mut out = BTreeMap::new();
    for ((h, var), cells) in &grouped {
        let mut common: Option<BTreeSet<Month>> = None;
        for &mode in modes {
            for model in models {
                let have: BTreeSet<Month> = cells
                    .get(&(mode, model.clone()))
                    .map(|m| m.keys().copied().collect())
                    .unwrap_or_default();
                common = Some(match common {
                    None => have,
                    Some(prev) => prev.intersection(&have).copied().collect(),
                });
            }
        }
        let common = common.unwrap_or_default();
        if common.is_empty() {
            continue;
        }
        for &mode in modes {
            let mut lps = Vec::new();
            let mut errs = Vec::new();
            for model in models {
                let rows = &cells[&(mode, model.clone())];
                let picked: Vec<&ScoreRow> = common.iter().map(|t| rows[t]).collect();
                lps.push(picked.iter().map(|r| r.lpl).sum::<f64>() / picked.len() as f64);
                let fe: Option<Vec<f64>> = picked.iter().map(|r| r.fe).collect();
                errs.push(match fe {
                    Some(fe) => Some(rmse(&fe)?),
                    None => None,
                });
            }
            let lps_rank = rank_models(&lps, Direction::Descending);
            let rmse_rank = errs
                .iter().copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| rank_models(&v, Direction::Ascending));
            for (mi, model) in models.iter().enumerate() {
                out.insert(
                    (mode, var.clone(), model.clone(), *h),
                    SummaryCell {
                        mean_lps: lps[mi],
                        lps_rank: lps_rank[mi],
                        rmse: errs[mi],
                        rmse_rank: rmse_rank.as_ref().map(|r| r[mi]),
                    },
                );
            }
        }
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_header(horizons: &[usize], lead: &[&str]) -> Vec<String> {
    let mut header: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    for h in horizons {
        header.extend([format!("lps_h{h}"), format!("lps_rank_h{h}"), format!("rmse_h{h}"), format!("rmse_rank_h{h}")]);
    }
    header
}

fn variables_of(eval: &Evaluation) -> Vec<String> {
    let mut vars: Vec<String> = Vec::new();
    for (_, v, _, _) in eval.summary.keys() {
        if !vars.contains(v) {
            vars.push(v.clone());
        }
    }
    // joint last, the rest in code order
    vars.sort_by_key(|v| (v == JOINT, v.clone()));
    vars
}

fn write_mode_summary(path: &Path, eval: &Evaluation, mode: InfoSet, models: &[String], horizons: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(summary_header(horizons, &["variable", "model_id"]))?;
    for var in variables_of(eval) {
        for model in models {
            let mut rec = vec![var.clone(), model.clone()];
            for &h in horizons {
                match eval.summary.get(&(mode, var.clone(), model.clone(), h)) {
                    Some(c) => rec.extend([
                        c.mean_lps.to_string(),
                        c.lps_rank.to_string(),
                        fmt_opt(c.rmse),
                        fmt_opt(c.rmse_rank),
                    ]),
                    None => rec.extend([String::new(), String::new(), String::new(), String::new()]),
                }
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Real-time row per model and variable, followed by a relative row holding
/// the LPS difference and RMSE ratio against pseudo, with pseudo ranks.
fn write_summary_table(path: &Path, eval: &Evaluation, models: &[String], horizons: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(summary_header(horizons, &["variable", "model_id", "row"]))?;
    let blank = || [String::new(), String::new(), String::new(), String::new()];
    for var in variables_of(eval) {
        for model in models {
            let mut real = vec![var.clone(), model.clone(), "realtime".to_string()];
            let mut rel = vec![var.clone(), model.clone(), "relative".to_string()];
            for &h in horizons {
                let rt = eval.summary.get(&(InfoSet::Realtime, var.clone(), model.clone(), h));
                let ps = eval.summary.get(&(InfoSet::Pseudo, var.clone(), model.clone(), h));
                match rt {
                    Some(c) => real.extend([
                        c.mean_lps.to_string(),
                        c.lps_rank.to_string(),
                        fmt_opt(c.rmse),
                        fmt_opt(c.rmse_rank),
                    ]),
                    None => real.extend(blank()),
                }
                match (rt, ps) {
                    (Some(r), Some(p)) => rel.extend([
                        (r.mean_lps - p.mean_lps).to_string(),
                        p.lps_rank.to_string(),
                        fmt_opt(r.rmse.zip(p.rmse).and_then(|(a, b)| (b != 0.0).then(|| a / b))),
                        fmt_opt(p.rmse_rank),
                    ]),
                    _ => rel.extend(blank()),
                }
            }
            w.write_record(&real)?;
            w.write_record(&rel)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_records<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub(crate) const RANK_HEADER: [&str; 8] = ["info_set", "horizon", "variable", "kind", "origin", "model_id", "cumulative", "rank"];
pub(crate) const TAU_HEADER: [&str; 5] = ["horizon", "variable", "kind", "origin", "tau"];
pub(crate) const RELATIVE_HEADER: [&str; 8] =
    ["horizon", "variable", "kind", "origin", "model_id", "realtime", "pseudo", "relative"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub config_hash: String,
    pub files: Vec<String>,
}

pub(crate) fn write_stage_manifest(dir: &Path, config_hash: String, files: &[&str]) -> Result<()> {
    let m = StageManifest {
        config_hash,
        files: files.iter().map(|s| s.to_string()).collect(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&m)?).map_err(|e| Error::io(&path, e))
}

/// Score every successful cell of the store and write `eval/`.
pub fn evaluate(store: &ResultStore) -> Result<Evaluation> {
    let run = store.load_manifest()?;
    let (cfg, truth) = transformed_final(store)?;
    let mut eval = Evaluation::default();
    for cell in run.cells.iter().filter(|c| c.status == CellStatus::Ok) {
        let dir = store.root.join(ResultStore::cell_rel(&cell.model_id, cell.info_set, cell.origin)).join("forecast");
        let draws = PredictiveDraws::load(&dir)?;
        eval.scores
            .rows
            .extend(score_cell(&draws, cell.info_set, cell.origin, &truth, &mut eval.skipped_targets)?);
    }
    eval.scores.sort();
    let models: Vec<String> = cfg.models.iter().map(|m| m.id()).collect();
    let (ranks, tau, relative) = derive_series(&eval.scores, &models, &cfg.modes)?;
    eval.ranks = ranks;
    eval.tau = tau;
    eval.relative = relative;
    eval.summary = summarize(&eval.scores, &models, &cfg.modes)?;

    let dir = store.eval_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    eval.scores.save_csv(&dir.join("scores.csv"))?;
    write_records(&dir.join("ranks.csv"), &RANK_HEADER, &eval.ranks)?;
    write_records(&dir.join("tau.csv"), &TAU_HEADER, &eval.tau)?;
    write_records(&dir.join("relative.csv"), &RELATIVE_HEADER, &eval.relative)?;
    write_mode_summary(&dir.join("summary_realtime.csv"), &eval, InfoSet::Realtime, &models, &cfg.horizons)?;
    write_mode_summary(&dir.join("summary_pseudo.csv"), &eval, InfoSet::Pseudo, &models, &cfg.horizons)?;
    write_summary_table(&dir.join("summary_table.csv"), &eval, &models, &cfg.horizons)?;
    write_stage_manifest(&dir, run.config_hash.clone(), &EVAL_FILES)?;
    Ok(eval)
}
