//! Figure-ready tables built from an evaluated store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::evaluate::{
    read_records, write_records, write_stage_manifest, RankRecord, RelativeRecord, ScoreKind, TauRecord, TAU_HEADER,
};
use super::experiment::ResultStore;
use crate::error::{Error, Result};
use crate::month::Month;
use crate::score::InfoSet;

pub const REPORT_FILES: [&str; 4] = ["tau_series.csv", "rank_series.csv", "relative_cumlps.csv", "summary_table.csv"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub tau: Vec<TauRecord>,
    /// (info set, horizon, variable, kind, origin) → rank per model.
    pub ranks: BTreeMap<(InfoSet, usize, String, ScoreKind, Month), Vec<Option<f64>>>,
    /// (horizon, variable, origin) → realtime − pseudo cumulative LPS per model.
    pub relative_lps: BTreeMap<(usize, String, Month), Vec<Option<f64>>>,
    pub models: Vec<String>,
}

fn model_columns(ranks: &[RankRecord], relative: &[RelativeRecord]) -> Vec<String> {
    let mut models: Vec<String> = Vec::new();
    for id in ranks.iter().map(|r| &r.model_id).chain(relative.iter().map(|r| &r.model_id)) {
        if !models.contains(id) {
            models.push(id.clone());
        }
    }
    models
}

fn write_wide<K>(
    path: &Path,
    lead: &[&str],
    models: &[String],
    rows: &BTreeMap<K, Vec<Option<f64>>>,
    key: impl Fn(&K) -> Vec<String>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    header.extend(models.iter().cloned());
    w.write_record(&header)?;
    for (k, vals) in rows {
        let mut rec = key(k);
        rec.extend(vals.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pivot the evaluation outputs into `report/`. Missing evaluation files give
/// header-only tables.
pub fn report(store: &ResultStore) -> Result<Report> {
    let eval_dir = store.eval_dir();
    let tau: Vec<TauRecord> = read_records(&eval_dir.join("tau.csv"))?;
    let ranks: Vec<RankRecord> = read_records(&eval_dir.join("ranks.csv"))?;
    let relative: Vec<RelativeRecord> = read_records(&eval_dir.join("relative.csv"))?;
    let models = model_columns(&ranks, &relative);
    let col = |id: &str| models.iter().position(|m| m == id).expect("model collected above");

    let mut out = Report {
        tau,
        models: models.clone(),
        ..Report::default()
    };
    for r in &ranks {
        let row = out
            .ranks
            .entry((r.info_set, r.horizon, r.variable.clone(), r.kind, r.origin))
            .or_insert_with(|| vec![None; models.len()]);
        row[col(&r.model_id)] = Some(r.rank);
    }
    for r in relative.iter().filter(|r| r.kind == ScoreKind::Density) {
        let row = out
            .relative_lps
            .entry((r.horizon, r.variable.clone(), r.origin))
            .or_insert_with(|| vec![None; models.len()]);
        row[col(&r.model_id)] = r.relative;
    }

    let dir = store.report_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_records(&dir.join("tau_series.csv"), &TAU_HEADER, &out.tau)?;
    write_wide(
        &dir.join("rank_series.csv"),
        &["info_set", "horizon", "variable", "kind", "origin"],
        &models,
        &out.ranks,
        |(m, h, v, k, t)| {
            let kind = match k {
                ScoreKind::Density => "density",
                ScoreKind::Point => "point",
            };
            vec![m.to_string(), h.to_string(), v.clone(), kind.to_string(), t.to_string()]
        },
    )?;
    write_wide(
        &dir.join("relative_cumlps.csv"),
        &["horizon", "variable", "origin"],
        &models,
        &out.relative_lps,
        |(h, v, t)| vec![h.to_string(), v.clone(), t.to_string()],
    )?;
    let summary_src = eval_dir.join("summary_table.csv");
    let summary_dst = dir.join("summary_table.csv");
    if summary_src.exists() {
        fs::copy(&summary_src, &summary_dst).map_err(|e| Error::io(&summary_dst, e))?;
    } else {
        fs::write(&summary_dst, "variable,model_id,row\n").map_err(|e| Error::io(&summary_dst, e))?;
    }
    let config_hash = store.load_manifest().map(|m| m.config_hash).unwrap_or_default();
    write_stage_manifest(&dir, config_hash, &REPORT_FILES)?;
    Ok(out)
}
