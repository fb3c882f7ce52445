//! CSV ingestion and quarterly alignment.
//!
//! SPD files are long format, one row per bin:
//!
//! ```text
//! forecaster_id,round,horizon,variable,bin_lower,bin_upper,prob_percent
//! F01,2024-06-01,1y,inflation,,-1.0,0
//! F01,2024-06-01,1y,inflation,-1.0,-0.5,10
//! ```
//!
//! `variable` is optional. An empty `bin_lower` or `bin_upper` marks an open
//! tail. Rounds are snapped to the quarter that contains them.
//!
//! Macro files have two columns, an ISO date (or a `YYYY-Qn` label) and a
//! value.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use ssi_core::spd::{Bin, BinnedDistribution};
use ssi_core::Quarter;

use crate::error::{CliError, Context, Result};

/// Label given to records when the file has no `variable` column.
pub const DEFAULT_VARIABLE: &str = "inflation";

const SPD_COLUMNS: [&str; 6] = [
    "forecaster_id",
    "round",
    "horizon",
    "bin_lower",
    "bin_upper",
    "prob_percent",
];
const EDGE_TOL: f64 = 1e-9;

/// Quarterly series keyed by quarter.
pub type Series = BTreeMap<Quarter, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct SpdRecord {
    pub forecaster: String,
    pub round: Quarter,
    pub horizon: String,
    pub variable: String,
    /// Normalized to unit mass.
    pub dist: BinnedDistribution,
    /// Sum of the reported percentages before normalization.
    pub mass_percent: f64,
}

impl SpdRecord {
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.forecaster, self.round, self.horizon, self.variable
        )
    }
}

/// Records sorted by variable, horizon, round and forecaster.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpdPanel {
    pub records: Vec<SpdRecord>,
}

impl SpdPanel {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.records.iter().map(|r| r.variable.as_str()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn horizons(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.records.iter().map(|r| r.horizon.as_str()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn select(&self, variable: &str, horizon: &str) -> Vec<&SpdRecord> {
        self.records
            .iter()
            .filter(|r| r.variable == variable && r.horizon == horizon)
            .collect()
    }
}

/// Parse a survey round: `YYYY-MM-DD`, `YYYY-MM`, `YYYYQn` or `YYYY-Qn`.
pub fn parse_round(s: &str) -> Option<Quarter> {
    let s = s.trim();
    if let Some((y, q)) = s.split_once('Q').or_else(|| s.split_once('q')) {
        let y = y.trim_end_matches('-');
        return Quarter::new(y.parse().ok()?, q.parse().ok()?);
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Quarter::from_month(d.year(), d.month());
    }
    let (y, m) = s.split_once('-')?;
    Quarter::from_month(y.parse().ok()?, m.parse().ok()?)
}

fn parse_edge(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("bin edge {s:?} is not a finite number")),
    }
}

struct RawBin {
    lower: Option<f64>,
    upper: Option<f64>,
    prob: f64,
    line: u64,
}

pub fn parse_spd_csv(path: &Path) -> Result<SpdPanel> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_spd_reader(file, &path.display().to_string())
}

/// Parse SPD rows from any reader. `source` names the input in errors.
pub fn parse_spd_reader<R: Read>(reader: R, source: &str) -> Result<SpdPanel> {
    let schema = |line: u64, msg: String| CliError::Schema {
        path: source.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(schema(1, "empty file".into()));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = SPD_COLUMNS
        .iter()
        .copied()
        .filter(|c| col(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(schema(
            1,
            format!("missing columns: {}", missing.join(", ")),
        ));
    }
    let idx: Vec<usize> = SPD_COLUMNS.iter().map(|c| col(c).unwrap()).collect();
    let var_idx = col("variable");

    type Key = (String, Quarter, String, String);
    let mut groups: BTreeMap<Key, Vec<RawBin>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let forecaster = field(idx[0]);
        if forecaster.is_empty() {
            return Err(schema(line, "empty forecaster_id".into()));
        }
        let round = parse_round(field(idx[1]))
            .ok_or_else(|| schema(line, format!("unrecognized round {:?}", field(idx[1]))))?;
        let horizon = field(idx[2]);
        if horizon.is_empty() {
            return Err(schema(line, "empty horizon".into()));
        }
        let variable = match var_idx.map(field) {
            Some("") | None => DEFAULT_VARIABLE,
            Some(v) => v,
        };
        let lower = parse_edge(field(idx[3])).map_err(|m| schema(line, m))?;
        let upper = parse_edge(field(idx[4])).map_err(|m| schema(line, m))?;
        if lower.is_none() && upper.is_none() {
            return Err(schema(
                line,
                "bin has neither a lower nor an upper edge".into(),
            ));
        }
        if let (Some(a), Some(b)) = (lower, upper) {
            if a >= b {
                return Err(schema(
                    line,
                    format!("bin lower edge {a} is not below upper edge {b}"),
                ));
            }
        }
        let prob: f64 = field(idx[5]).parse().map_err(|_| {
            schema(
                line,
                format!("prob_percent {:?} is not a number", field(idx[5])),
            )
        })?;
        if !prob.is_finite() {
            return Err(schema(line, "prob_percent is not finite".into()));
        }
        if prob < 0.0 {
            return Err(CliError::NegativeProbability {
                path: source.to_string(),
                line,
                value: prob,
            });
        }
        groups
            .entry((
                forecaster.to_string(),
                round,
                horizon.to_string(),
                variable.to_string(),
            ))
            .or_default()
            .push(RawBin {
                lower,
                upper,
                prob,
                line,
            });
    }
    if groups.is_empty() {
        return Err(schema(1, "no data rows".into()));
    }

    let mut records = Vec::with_capacity(groups.len());
    for ((forecaster, round, horizon, variable), mut bins) in groups {
        let key = format!("{forecaster}/{round}/{horizon}/{variable}");
        bins.sort_by(|a, b| match (a.lower, b.lower) {
            (None, None) => a.line.cmp(&b.line),
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
            (Some(x), Some(y)) => x.total_cmp(&y).then(a.line.cmp(&b.line)),
        });
        let mut seen: HashMap<(Option<u64>, Option<u64>), u64> = HashMap::new();
        for b in &bins {
            if let Some(first) = seen.insert(
                (b.lower.map(f64::to_bits), b.upper.map(f64::to_bits)),
                b.line,
            ) {
                let (first, second) = (first.min(b.line), first.max(b.line));
                return Err(CliError::DuplicateBin {
                    path: source.to_string(),
                    key,
                    first,
                    second,
                });
            }
        }
        for w in bins.windows(2) {
            let joined =
                matches!((w[0].upper, w[1].lower), (Some(u), Some(l)) if (u - l).abs() <= EDGE_TOL);
            if !joined {
                return Err(CliError::NonContiguousBins {
                    path: source.to_string(),
                    key,
                    first: w[0].line.min(w[1].line),
                    second: w[0].line.max(w[1].line),
                });
            }
        }
        let mass_percent: f64 = bins.iter().map(|b| b.prob).sum();
        let probs: Vec<f64> = bins.iter().map(|b| b.prob / 100.0).collect();
        let edges: Vec<Bin> = bins
            .iter()
            .map(|b| Bin {
                lower: b.lower,
                upper: b.upper,
            })
            .collect();
        let line = bins[0].line;
        let dist = BinnedDistribution::new(edges, probs)
            .and_then(|d| d.normalize())
            .map_err(|e| schema(line, format!("{key}: {e}")))?;
        records.push(SpdRecord {
            forecaster,
            round,
            horizon,
            variable,
            dist,
            mass_percent,
        });
    }
    records.sort_by(|a, b| {
        (&a.variable, &a.horizon, a.round, &a.forecaster).cmp(&(
            &b.variable,
            &b.horizon,
            b.round,
            &b.forecaster,
        ))
    });
    Ok(SpdPanel { records })
}

fn fmt_edge(e: Option<f64>) -> String {
    e.map(|v| v.to_string()).unwrap_or_default()
}

/// Write a panel back in the long format. Probabilities are rescaled to the
/// reported percentage total.
pub fn write_spd_csv<W: Write>(panel: &SpdPanel, out: W) -> Result<()> {
    let io = |e: csv::Error| CliError::Config(format!("writing SPD rows: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "forecaster_id",
        "round",
        "horizon",
        "variable",
        "bin_lower",
        "bin_upper",
        "prob_percent",
    ])
    .map_err(io)?;
    for r in &panel.records {
        let round = format!("{}-{:02}-01", r.round.year(), r.round.start_month());
        for (b, p) in r.dist.bins().iter().zip(r.dist.probs()) {
            w.write_record([
                r.forecaster.as_str(),
                &round,
                &r.horizon,
                &r.variable,
                &fmt_edge(b.lower),
                &fmt_edge(b.upper),
                &(p * r.mass_percent).to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| CliError::Config(format!("writing SPD rows: {e}")))?;
    Ok(())
}

/// How several observations inside one quarter are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroAggregation {
    /// At most one observation per quarter.
    #[default]
    Strict,
    /// The quarter's final observation.
    Last,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Level,
    /// `100 * (x_t / x_{t-4} - 1)`.
    YoyGrowth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroSeries {
    pub name: String,
    pub quarters: Vec<Quarter>,
    pub values: Vec<f64>,
    pub transform: Transform,
}

impl MacroSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_series(&self) -> Series {
        self.quarters
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .collect()
    }

    /// Apply `t` to a level series. Quarters without a value four quarters
    /// earlier are dropped by the growth transform.
    pub fn transformed(&self, t: Transform) -> MacroSeries {
        match t {
            Transform::Level => MacroSeries {
                transform: t,
                ..self.clone()
            },
            Transform::YoyGrowth => {
                let s = self.to_series();
                let (quarters, values) = s
                    .iter()
                    .filter_map(|(q, v)| {
                        let prev = *s.get(&q.offset(-4))?;
                        (prev != 0.0).then(|| (*q, 100.0 * (v / prev - 1.0)))
                    })
                    .unzip();
                MacroSeries {
                    name: self.name.clone(),
                    quarters,
                    values,
                    transform: t,
                }
            }
        }
    }
}

/// Parse a macro date: ISO `YYYY-MM-DD` or a quarter label.
fn parse_macro_date(s: &str) -> Option<(NaiveDate, Quarter)> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some((d, Quarter::from_month(d.year(), d.month())?));
    }
    if s.contains('Q') || s.contains('q') {
        let q = parse_round(s)?;
        let d = NaiveDate::from_ymd_opt(q.year(), q.start_month(), 1)?;
        return Some((d, q));
    }
    None
}

/// Load a two-column macro series. Returns the series and any warnings.
pub fn load_macro_csv(
    path: &Path,
    name: &str,
    agg: MacroAggregation,
) -> Result<(MacroSeries, Vec<String>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_macro_reader(file, &path.display().to_string(), name, agg)
}

pub fn parse_macro_reader<R: Read>(
    reader: R,
    source: &str,
    name: &str,
    agg: MacroAggregation,
) -> Result<(MacroSeries, Vec<String>)> {
    let parse = |line: u64, msg: String| CliError::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    if headers.len() != 2 {
        return Err(parse(
            1,
            format!("expected 2 columns (date, value), found {}", headers.len()),
        ));
    }
    let mut rows: Vec<(NaiveDate, Quarter, f64, u64)> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let (date, quarter) = parse_macro_date(&row[0])
            .ok_or_else(|| parse(line, format!("bad date {:?}", &row[0])))?;
        let value: f64 = row[1]
            .parse()
            .map_err(|_| parse(line, format!("bad value {:?}", &row[1])))?;
        if !value.is_finite() {
            return Err(parse(line, "value is not finite".into()));
        }
        rows.push((date, quarter, value, line));
    }
    if rows.is_empty() {
        return Err(parse(1, "no observations".into()));
    }
    let mut warnings = Vec::new();
    if rows.windows(2).any(|w| w[1].0 < w[0].0) {
        warnings.push(format!("{source}: dates not in increasing order; sorted"));
        rows.sort_by_key(|r| (r.0, r.3));
    }
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(parse(
            w[1].3,
            format!("date {} repeats line {}", w[1].0, w[0].3),
        ));
    }

    let mut quarters: Vec<Quarter> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let q = rows[i].1;
        let j = i + rows[i..].iter().take_while(|r| r.1 == q).count();
        let group = &rows[i..j];
        let v = match agg {
            MacroAggregation::Strict if group.len() > 1 => {
                return Err(CliError::DuplicateQuarter {
                    path: source.to_string(),
                    quarter: q,
                    first: group[0].3,
                    second: group[1].3,
                });
            }
            MacroAggregation::Strict | MacroAggregation::Last => group[group.len() - 1].2,
            MacroAggregation::Mean => group.iter().map(|r| r.2).sum::<f64>() / group.len() as f64,
        };
        quarters.push(q);
        values.push(v);
        i = j;
    }
    Ok((
        MacroSeries {
            name: name.to_string(),
            quarters,
            values,
            transform: Transform::Level,
        },
        warnings,
    ))
}

/// Regression-ready table: row `t` pairs regressors at `rounds[t]` with the
/// target `horizon` quarters later.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTable {
    pub rounds: Vec<Quarter>,
    pub target: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub horizon: usize,
    /// Rows inside the common range dropped for a missing value.
    pub dropped: usize,
}

impl AlignedTable {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Inner join on quarters within the range every input covers, with the
/// target shifted back by `horizon`.
pub fn align(
    target: &Series,
    regressors: &[(&str, &Series)],
    horizon: usize,
) -> Result<AlignedTable> {
    let h = horizon as i64;
    let no_overlap = || CliError::NoOverlap { horizon };
    let (t_first, t_last) = match (target.keys().next(), target.keys().next_back()) {
        (Some(a), Some(b)) => (a.offset(-h), b.offset(-h)),
        _ => return Err(no_overlap()),
    };
    let mut lo = t_first;
    let mut hi = t_last;
    for (_, s) in regressors {
        let (Some(a), Some(b)) = (s.keys().next(), s.keys().next_back()) else {
            return Err(no_overlap());
        };
        lo = lo.max(*a);
        hi = hi.min(*b);
    }
    if lo > hi {
        return Err(no_overlap());
    }
    let mut table = AlignedTable {
        rounds: Vec::new(),
        target: Vec::new(),
        columns: regressors
            .iter()
            .map(|(n, _)| (n.to_string(), Vec::new()))
            .collect(),
        horizon,
        dropped: 0,
    };
    let mut q = lo;
    while q <= hi {
        let y = target.get(&q.offset(h));
        let xs: Option<Vec<f64>> = regressors.iter().map(|(_, s)| s.get(&q).copied()).collect();
        match (y, xs) {
            (Some(y), Some(xs)) => {
                table.rounds.push(q);
                table.target.push(*y);
                for (c, x) in table.columns.iter_mut().zip(xs) {
                    c.1.push(x);
                }
            }
            _ => table.dropped += 1,
        }
        q = q.offset(1);
    }
    if table.rounds.is_empty() {
        return Err(no_overlap());
    }
    Ok(table)
}

/// Closed distribution for every record, with the record's key in errors.
pub fn prepare_all(
    records: &[&SpdRecord],
    policy: ssi_core::spd::TailPolicy,
) -> Result<Vec<ssi_core::spd::ClosedDistribution>> {
    records
        .iter()
        .map(|r| r.dist.prepare(policy).context(|| r.key()))
        .collect()
}
