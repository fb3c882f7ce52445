//! Pipeline stages and their CSV outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ssi_core::gar::{self, GarModelResult, GarPanel, ModelSpec, Regressor, GAR_TAUS};
use ssi_core::moments::{self, MomentSet, CORRELATION_LABELS};
use ssi_core::signal::{self, RoundAggregate, SignalClass, SignalInput, SignalRecord, SsiSeries};
use ssi_core::stats;
use ssi_core::Quarter;

use crate::config::{AggregationMethod, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::ingest::{self, AlignedTable, Series, SpdPanel, SpdRecord};

/// Warnings collected during a run, written to `run.log`.
#[derive(Debug, Default, Clone)]
pub struct RunLog {
    lines: Vec<String>,
}

impl RunLog {
    pub fn warn(&mut self, stage: &str, msg: impl AsRef<str>) {
        self.lines
            .push(format!("level=warn stage={stage} msg={:?}", msg.as_ref()));
    }

    pub fn info(&mut self, stage: &str, msg: impl AsRef<str>) {
        self.lines
            .push(format!("level=info stage={stage} msg={:?}", msg.as_ref()));
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn warnings(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| l.starts_with("level=warn"))
            .count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = self.lines.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        let path = dir.join("run.log");
        fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Write a CSV file with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let err = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One histogram's moments.
#[derive(Debug, Clone)]
pub struct MomentRow<'a> {
    pub record: &'a SpdRecord,
    pub moments: MomentSet,
}

pub fn compute_moments<'a>(
    records: &[&'a SpdRecord],
    cfg: &RunConfig,
) -> Result<Vec<MomentRow<'a>>> {
    let mcfg = cfg.moment_config();
    let closed = ingest::prepare_all(records, cfg.tail_policy())?;
    records
        .iter()
        .zip(&closed)
        .map(|(r, d)| {
            let m = MomentSet::compute(d, &mcfg).context(|| r.key())?;
            Ok(MomentRow {
                record: r,
                moments: m,
            })
        })
        .collect()
}

pub const MOMENT_HEADER: [&str; 14] = [
    "forecaster_id",
    "round",
    "horizon",
    "variable",
    "mean",
    "median",
    "mode",
    "variance",
    "cv",
    "bowley",
    "pearson_mode_skew",
    "kelly",
    "moors_kurtosis",
    "flags",
];

pub fn moment_rows(rows: &[MomentRow<'_>]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let m = &r.moments;
            vec![
                r.record.forecaster.clone(),
                r.record.round.to_string(),
                r.record.horizon.clone(),
                r.record.variable.clone(),
                num(m.mean),
                num(m.median),
                opt(m.mode),
                num(m.variance),
                opt(m.cv),
                opt(m.bowley),
                opt(m.pearson_mode_skew),
                opt(m.kelly),
                opt(m.moors_kurtosis),
                m.flags.names().collect::<Vec<_>>().join(";"),
            ]
        })
        .collect()
}

/// Pick the variable and horizon the signal stages run on.
pub fn resolve_selection(panel: &SpdPanel, cfg: &RunConfig) -> Result<(String, String)> {
    let pick = |what: &str, chosen: &Option<String>, present: Vec<&str>| -> Result<String> {
        match chosen {
            Some(c) if present.contains(&c.as_str()) => Ok(c.clone()),
            Some(c) => Err(CliError::Config(format!(
                "{what} {c:?} not in panel (found {})",
                present.join(", ")
            ))),
            None if present.len() == 1 => Ok(present[0].to_string()),
            None => Err(CliError::Config(format!(
                "panel holds several {what}s ({}); set `{what}`",
                present.join(", ")
            ))),
        }
    };
    Ok((
        pick("variable", &cfg.variable, panel.variables())?,
        pick("horizon", &cfg.horizon, panel.horizons())?,
    ))
}

pub struct SignalOutput {
    pub records: Vec<SignalRecord>,
    pub aggregates: Vec<RoundAggregate>,
}

pub fn compute_signals(
    rows: &[MomentRow<'_>],
    cfg: &RunConfig,
    log: &mut RunLog,
) -> Result<SignalOutput> {
    let mut inputs = Vec::with_capacity(rows.len());
    for r in rows {
        match r.moments.bowley {
            Some(skew) => inputs.push(SignalInput {
                forecaster: r.record.forecaster.clone(),
                round: r.record.round,
                horizon: r.record.horizon.clone(),
                median: r.moments.median,
                skew,
            }),
            None => log.warn(
                "signal",
                format!("{}: skewness undefined, record skipped", r.record.key()),
            ),
        }
    }
    let records = signal::build_signal_records(&inputs, cfg.target);
    let aggregates = signal::aggregate_rounds(&records, cfg.aggregation())
        .context(|| "aggregating rounds".into())?;
    Ok(SignalOutput {
        records,
        aggregates,
    })
}

pub const SIGNAL_HEADER: [&str; 7] = [
    "forecaster_id",
    "round",
    "horizon",
    "variable",
    "median_dev",
    "skew",
    "class",
];

pub fn signal_rows(records: &[SignalRecord], variable: &str) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.forecaster.clone(),
                r.round.to_string(),
                r.horizon.clone(),
                variable.to_string(),
                num(r.median_dev),
                num(r.skew),
                r.class.as_str().to_string(),
            ]
        })
        .collect()
}

pub fn class_share_header() -> Vec<&'static str> {
    let mut h = vec!["round", "n"];
    h.extend(SignalClass::ALL.iter().map(|c| c.as_str()));
    h
}

pub fn class_share_rows(aggs: &[RoundAggregate]) -> Vec<Vec<String>> {
    aggs.iter()
        .map(|a| {
            let mut row = vec![a.round.to_string(), a.n.to_string()];
            row.extend(SignalClass::ALL.iter().map(|c| num(a.class_share(*c))));
            row
        })
        .collect()
}

pub fn compute_ssi(aggs: &[RoundAggregate], cfg: &RunConfig) -> Result<SsiSeries> {
    if aggs.len() < 2 {
        return Err(CliError::Core {
            context: "ssi".into(),
            source: ssi_core::Error::InsufficientData(format!(
                "{} round(s), need at least 2",
                aggs.len()
            )),
        });
    }
    signal::ssi_from_aggregates(aggs, cfg.norm_scheme()).context(|| "ssi".into())
}

pub const SSI_HEADER: [&str; 11] = [
    "round", "n", "q_bar", "q_q1", "q_q3", "a_bar", "a_q1", "a_q3", "q_norm", "a_norm", "ssi",
];

pub fn ssi_rows(s: &SsiSeries, aggs: &[RoundAggregate]) -> Vec<Vec<String>> {
    (0..s.rounds.len())
        .map(|t| {
            let a = &aggs[t];
            vec![
                s.rounds[t].to_string(),
                a.n.to_string(),
                num(s.q_bar[t]),
                num(a.q_iqr.0),
                num(a.q_iqr.1),
                num(s.a_bar[t]),
                num(a.a_iqr.0),
                num(a.a_iqr.1),
                num(s.q_norm[t]),
                num(s.a_norm[t]),
                num(s.ssi[t]),
            ]
        })
        .collect()
}

/// Cross-sectional mean or median of histogram means per round.
pub fn spf_series(rows: &[MomentRow<'_>], stat: AggregationMethod) -> Series {
    let mut by_round: BTreeMap<Quarter, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_round
            .entry(r.record.round)
            .or_default()
            .push(r.moments.mean);
    }
    by_round
        .into_iter()
        .filter_map(|(q, xs)| {
            let v = match stat {
                AggregationMethod::Mean => stats::mean(&xs),
                AggregationMethod::Median => stats::median(&xs),
            }?;
            Some((q, v))
        })
        .collect()
}

pub fn ssi_series(s: &SsiSeries) -> Series {
    s.rounds
        .iter()
        .copied()
        .zip(s.ssi.iter().copied())
        .collect()
}

/// Build the regression panel from the GDP target and whichever regressors
/// are available.
pub fn build_gar_panel(
    gdp: &Series,
    nfci: Option<&Series>,
    spf: &Series,
    ssi: &Series,
    horizon: usize,
) -> Result<(AlignedTable, GarPanel)> {
    let mut regs: Vec<(&str, &Series)> = vec![(Regressor::Gdp.as_str(), gdp)];
    if let Some(n) = nfci {
        regs.push((Regressor::Nfci.as_str(), n));
    }
    regs.push((Regressor::Spf.as_str(), spf));
    regs.push((Regressor::Ssi.as_str(), ssi));
    let table = ingest::align(gdp, &regs, horizon)?;
    let mut panel =
        GarPanel::new(table.rounds.clone(), table.target.clone()).context(|| "gar panel".into())?;
    for r in Regressor::ALL {
        if let Some(col) = table.column(r.as_str()) {
            panel = panel
                .with_column(r, col.to_vec())
                .context(|| "gar panel".into())?;
        }
    }
    Ok((table, panel))
}

pub fn aligned_header(table: &AlignedTable) -> Vec<String> {
    let mut h = vec!["round".to_string(), format!("gdp_t_plus_{}", table.horizon)];
    h.extend(table.columns.iter().map(|(n, _)| n.clone()));
    h
}

pub fn aligned_rows(table: &AlignedTable) -> Vec<Vec<String>> {
    (0..table.len())
        .map(|t| {
            let mut row = vec![table.rounds[t].to_string(), num(table.target[t])];
            row.extend(table.columns.iter().map(|(_, c)| num(c[t])));
            row
        })
        .collect()
}

/// Run every grid model the panel has regressors for, sorted by CRPS.
pub fn run_gar(panel: &GarPanel, cfg: &RunConfig, log: &mut RunLog) -> Result<Vec<GarModelResult>> {
    let available = panel.available();
    let (specs, skipped): (Vec<ModelSpec>, Vec<ModelSpec>) = gar::model_grid()
        .into_iter()
        .partition(|m| m.regressors.iter().all(|r| available.contains(r)));
    for m in &skipped {
        log.warn(
            "gar",
            format!(
                "{} ({}) skipped: regressor data missing",
                m.name, m.regressors
            ),
        );
    }
    let ecfg = cfg.eval_config();
    let mut results = specs
        .par_iter()
        .map(|s| gar::evaluate_model(panel, s, &ecfg).context(|| format!("evaluating {}", s.name)))
        .collect::<Result<Vec<_>>>()?;
    gar::sort_results(&mut results);
    for r in &results {
        let n = r.unconverged_count();
        if n > 0 {
            log.warn(
                "gar",
                format!(
                    "{}: skew-t fit above residual tolerance in {n} of {} periods",
                    r.name,
                    r.n_periods()
                ),
            );
        }
    }
    Ok(results)
}

pub const GAR_RESULT_HEADER: [&str; 6] = [
    "model",
    "regressors",
    "avg_ls",
    "avg_crps",
    "n_periods",
    "crossing_count",
];

pub fn gar_result_rows(results: &[GarModelResult]) -> Vec<Vec<String>> {
    results
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.regressors.to_string(),
                num(r.avg_log_score),
                num(r.avg_crps),
                r.n_periods().to_string(),
                r.crossing_count.to_string(),
            ]
        })
        .collect()
}

pub fn gar_param_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "model",
        "round",
        "location",
        "scale",
        "shape",
        "dof",
        "fit_residual",
        "converged",
        "crossing",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(
        GAR_TAUS
            .iter()
            .map(|t| format!("q{:02}", (t * 100.0).round() as u32)),
    );
    h.extend(
        ["realized", "log_score", "log_score_capped", "crps"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

pub fn gar_param_rows(results: &[GarModelResult]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in results {
        for p in &r.periods {
            let mut row = vec![
                r.name.clone(),
                p.round.to_string(),
                num(p.params.location),
                num(p.params.scale),
                num(p.params.shape),
                num(p.params.dof),
                num(p.fit_residual),
                p.fit_converged.to_string(),
                p.crossing.to_string(),
            ];
            row.extend(p.quantiles.iter().map(|v| num(*v)));
            row.extend([
                num(p.realized),
                num(p.log_score),
                p.log_score_capped.to_string(),
                num(p.crps),
            ]);
            rows.push(row);
        }
    }
    rows
}

/// Which stages a command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Moments,
    Signal,
    Ssi,
    Gar,
    Replicate,
}

/// Files written by a run, in write order.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: usize,
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Config(format!("`{key}` is required for this command")))
}

/// Run `stage` with `cfg`, writing outputs and `run.log` into `cfg.out_dir`.
pub fn run(stage: Stage, cfg: &RunConfig) -> Result<RunSummary> {
    let out = cfg.out_dir.clone();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut log = RunLog::default();
    let mut summary = RunSummary::default();
    let result = run_inner(stage, cfg, &out, &mut log, &mut summary);
    if let Err(e) = &result {
        log.lines
            .push(format!("level=error msg={:?}", e.to_string()));
    }
    log.write(&out)?;
    summary.warnings = log.warnings();
    result.map(|_| summary)
}

fn run_inner(
    stage: Stage,
    cfg: &RunConfig,
    out: &Path,
    log: &mut RunLog,
    summary: &mut RunSummary,
) -> Result<()> {
    let mut emit = |name: &str, header: &[&str], rows: &[Vec<String>]| -> Result<()> {
        let path = out.join(name);
        write_csv(&path, header, rows)?;
        summary.files.push(path);
        Ok(())
    };
    let panel = ingest::parse_spd_csv(required(&cfg.spd_path, "spd_path")?)?;
    log.info("ingest", format!("{} histograms", panel.len()));

    let all: Vec<&SpdRecord> = panel.records.iter().collect();
    if matches!(stage, Stage::Moments | Stage::Replicate) {
        let rows = compute_moments(&all, cfg)?;
        emit("moments.csv", &MOMENT_HEADER, &moment_rows(&rows))?;
        let sets: Vec<MomentSet> = rows.iter().map(|r| r.moments.clone()).collect();
        match moments::moment_correlations(&sets) {
            Ok(c) => {
                let rows: Vec<Vec<String>> = (0..4)
                    .map(|i| {
                        let mut row = vec![CORRELATION_LABELS[i].to_string()];
                        row.extend(c[i].iter().map(|v| num(*v)));
                        row
                    })
                    .collect();
                let mut header = vec!["moment"];
                header.extend(CORRELATION_LABELS);
                emit("moment_correlations.csv", &header, &rows)?;
            }
            Err(e) => log.warn("moments", format!("correlations not computed: {e}")),
        }
        if stage == Stage::Moments {
            return Ok(());
        }
    }

    let (variable, horizon) = resolve_selection(&panel, cfg)?;
    log.info("signal", format!("variable={variable} horizon={horizon}"));
    let selected = panel.select(&variable, &horizon);
    let rows = compute_moments(&selected, cfg)?;
    let sig = compute_signals(&rows, cfg, log)?;
    if matches!(stage, Stage::Signal | Stage::Replicate) {
        emit(
            "signals.csv",
            &SIGNAL_HEADER,
            &signal_rows(&sig.records, &variable),
        )?;
    }
    emit(
        "class_shares.csv",
        &class_share_header(),
        &class_share_rows(&sig.aggregates),
    )?;
    if stage == Stage::Signal {
        return Ok(());
    }
    let ssi = compute_ssi(&sig.aggregates, cfg)?;
    emit("ssi.csv", &SSI_HEADER, &ssi_rows(&ssi, &sig.aggregates))?;
    if stage == Stage::Ssi {
        return Ok(());
    }

    let (gdp, warnings) = ingest::load_macro_csv(
        required(&cfg.gdp_path, "gdp_path")?,
        "GDP",
        cfg.gdp_aggregation,
    )?;
    warnings.iter().for_each(|w| log.warn("ingest", w));
    let gdp = gdp.transformed(cfg.gdp_transform).to_series();
    let nfci = match &cfg.nfci_path {
        Some(p) => {
            let (s, warnings) = ingest::load_macro_csv(p, "NFCI", cfg.nfci_aggregation)?;
            warnings.iter().for_each(|w| log.warn("ingest", w));
            Some(s.to_series())
        }
        None => {
            log.warn("gar", "no nfci_path configured; NFCI models skipped");
            None
        }
    };
    let spf = spf_series(&rows, cfg.spf_statistic);
    let (table, gpanel) = build_gar_panel(
        &gdp,
        nfci.as_ref(),
        &spf,
        &ssi_series(&ssi),
        cfg.gar_horizon,
    )?;
    if table.dropped > 0 {
        log.warn(
            "align",
            format!("{} quarter(s) dropped for missing values", table.dropped),
        );
    }
    let header = aligned_header(&table);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    emit("gar_panel.csv", &header, &aligned_rows(&table))?;
    let results = run_gar(&gpanel, cfg, log)?;
    emit(
        "gar_results.csv",
        &GAR_RESULT_HEADER,
        &gar_result_rows(&results),
    )?;
    let header = gar_param_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    emit("gar_params.csv", &header, &gar_param_rows(&results))?;
    Ok(())
}
