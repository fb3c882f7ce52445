use ssi_cli::error::CliError;
use ssi_cli::ingest::{self, MacroAggregation, Series};
use ssi_core::Quarter;

const HEADER: &str = "forecaster_id,round,horizon,variable,bin_lower,bin_upper,prob_percent\n";

const FIVE_BIN_ROWS: &str = "\
F1,2024-06-01,1y,inflation,-1.5,-1,10
F1,2024-06-01,1y,inflation,-1,-0.5,25
F1,2024-06-01,1y,inflation,-0.5,0,35
F1,2024-06-01,1y,inflation,0,0.5,25
F1,2024-06-01,1y,inflation,0.5,1,5
";

fn spd(body: &str) -> Result<ingest::SpdPanel, CliError> {
    ingest::parse_spd_reader(format!("{HEADER}{body}").as_bytes(), "test.csv")
}

fn q(y: i32, n: u8) -> Quarter {
    Quarter::new(y, n).unwrap()
}

#[test]
fn five_bin_rows_form_one_histogram() {
    let panel = spd(FIVE_BIN_ROWS).unwrap();
    assert_eq!(panel.len(), 1);
    let r = &panel.records[0];
    assert_eq!(r.round, q(2024, 2));
    assert_eq!(r.dist.bins().len(), 5);
    assert!((r.dist.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((r.dist.probs()[2] - 0.35).abs() < 1e-12);
}

#[test]
fn empty_input_is_a_schema_error() {
    let e = ingest::parse_spd_reader("".as_bytes(), "empty.csv").unwrap_err();
    assert!(matches!(e, CliError::Schema { .. }), "{e}");
    let e = spd("").unwrap_err();
    assert!(matches!(e, CliError::Schema { .. }), "{e}");
}

#[test]
fn missing_column_is_a_schema_error() {
    let e = ingest::parse_spd_reader(
        "forecaster_id,round,bin_lower\nF1,2024-06-01,0\n".as_bytes(),
        "x.csv",
    )
    .unwrap_err();
    assert!(matches!(e, CliError::Schema { line: 1, .. }), "{e}");
}

#[test]
fn duplicate_bin_reports_both_lines() {
    let body = "F1,2024-06-01,1y,inflation,0,1,50\nF1,2024-06-01,1y,inflation,1,2,25\nF1,2024-06-01,1y,inflation,0,1,25\n";
    match spd(body).unwrap_err() {
        CliError::DuplicateBin { first, second, .. } => assert_eq!((first, second), (2, 4)),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn negative_probability_rejected() {
    let body = "F1,2024-06-01,1y,inflation,0,1,110\nF1,2024-06-01,1y,inflation,1,2,-10\n";
    assert!(matches!(
        spd(body).unwrap_err(),
        CliError::NegativeProbability { line: 3, .. }
    ));
}

#[test]
fn gap_between_bins_rejected() {
    let body = "F1,2024-06-01,1y,inflation,0,1,50\nF1,2024-06-01,1y,inflation,1.5,2,50\n";
    assert!(matches!(
        spd(body).unwrap_err(),
        CliError::NonContiguousBins { .. }
    ));
}

#[test]
fn open_tails_and_missing_variable_column() {
    let text = "forecaster_id,round,horizon,bin_lower,bin_upper,prob_percent\n\
                F1,2024Q3,2y,,0,20\nF1,2024Q3,2y,0,1,60\nF1,2024Q3,2y,1,,20\n";
    let panel = ingest::parse_spd_reader(text.as_bytes(), "open.csv").unwrap();
    let r = &panel.records[0];
    assert_eq!(r.variable, ingest::DEFAULT_VARIABLE);
    assert_eq!(r.round, q(2024, 3));
    assert!(r.dist.bins()[0].lower.is_none() && r.dist.bins()[2].upper.is_none());
}

#[test]
fn closed_bins_survive_a_round_trip() {
    let body = format!(
        "{FIVE_BIN_ROWS}F2,2024-03-01,1y,inflation,0,1,40\nF2,2024-03-01,1y,inflation,1,2,60\n"
    );
    let panel = spd(&body).unwrap();
    let mut out = Vec::new();
    ingest::write_spd_csv(&panel, &mut out).unwrap();
    let again = ingest::parse_spd_reader(out.as_slice(), "rt.csv").unwrap();
    assert_eq!(again.len(), panel.len());
    for (a, b) in panel.records.iter().zip(&again.records) {
        assert_eq!(a.key(), b.key());
        assert_eq!(a.dist.bins(), b.dist.bins());
        for (x, y) in a.dist.probs().iter().zip(b.dist.probs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

fn macro_series(
    text: &str,
    agg: MacroAggregation,
) -> Result<(ingest::MacroSeries, Vec<String>), CliError> {
    ingest::parse_macro_reader(text.as_bytes(), "m.csv", "m", agg)
}

#[test]
fn quarterly_rows_load_one_to_one() {
    let mut text = String::from("date,value\n");
    for i in 0..8 {
        let qq = q(2020, 1).offset(i);
        text.push_str(&format!(
            "{}-{:02}-01,{}\n",
            qq.year(),
            qq.start_month(),
            i as f64 * 0.5
        ));
    }
    let (s, warnings) = macro_series(&text, MacroAggregation::Strict).unwrap();
    assert_eq!(s.len(), 8);
    assert!(warnings.is_empty());
    assert_eq!(s.values[7], 3.5);
}

#[test]
fn daily_index_keeps_last_observation() {
    let mut text = String::from("date,value\n");
    let mut day = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    let mut expected = Vec::new();
    let mut v = 0.0;
    while day.format("%Y").to_string() == "2021" {
        text.push_str(&format!("{},{v}\n", day.format("%Y-%m-%d")));
        if day.format("%m-%d").to_string() == "03-31"
            || day.format("%m-%d").to_string() == "06-30"
            || day.format("%m-%d").to_string() == "09-30"
            || day.format("%m-%d").to_string() == "12-31"
        {
            expected.push(v);
        }
        v += 1.0;
        day = day.succ_opt().unwrap();
    }
    let (s, _) = macro_series(&text, MacroAggregation::Last).unwrap();
    assert_eq!(s.values, expected);
    let (m, _) = macro_series(&text, MacroAggregation::Mean).unwrap();
    assert_eq!(m.values[0], (0.0 + 89.0) / 2.0);
}

#[test]
fn unsorted_dates_sorted_with_warning() {
    let text = "date,value\n2020-07-01,3\n2020-01-01,1\n2020-04-01,2\n";
    let (s, warnings) = macro_series(text, MacroAggregation::Strict).unwrap();
    assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
    assert_eq!(warnings.len(), 1);
}

#[test]
fn two_rows_in_one_quarter_rejected_when_strict() {
    let text = "date,value\n2020-01-01,1\n2020-02-01,2\n";
    assert!(matches!(
        macro_series(text, MacroAggregation::Strict),
        Err(CliError::DuplicateQuarter { .. })
    ));
    let bad = "date,value\n2020-01-01,x\n";
    assert!(matches!(
        macro_series(bad, MacroAggregation::Strict),
        Err(CliError::Parse { line: 2, .. })
    ));
}

fn series(start: Quarter, values: &[f64]) -> Series {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (start.offset(i as i64), *v))
        .collect()
}

#[test]
fn alignment_shifts_target() {
    let y = series(q(2010, 1), &[1.0, 2.0, 3.0, 4.0, 5.0]);
    let x = series(q(2010, 1), &[10.0, 20.0, 30.0, 40.0, 50.0]);
    let t = ingest::align(&y, &[("x", &x)], 1).unwrap();
    assert_eq!(t.len(), 4);
    assert_eq!(t.target, vec![2.0, 3.0, 4.0, 5.0]);
    assert_eq!(t.column("x").unwrap(), &[10.0, 20.0, 30.0, 40.0]);
    assert_eq!(t.dropped, 0);
}

#[test]
fn disjoint_ranges_do_not_overlap() {
    let y = series(q(2010, 1), &[1.0, 2.0, 3.0]);
    let x = series(q(2015, 1), &[1.0, 2.0, 3.0]);
    assert!(matches!(
        ingest::align(&y, &[("x", &x)], 1),
        Err(CliError::NoOverlap { horizon: 1 })
    ));
}

#[test]
fn missing_regressor_quarter_dropped_and_counted() {
    let y = series(q(2010, 1), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let mut nfci = series(q(2010, 1), &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
    nfci.remove(&q(2010, 3));
    let t = ingest::align(&y, &[("NFCI", &nfci)], 1).unwrap();
    assert_eq!(t.dropped, 1);
    assert_eq!(t.len(), 4);
    // every value comes verbatim from an input
    for (i, r) in t.rounds.iter().enumerate() {
        assert_eq!(t.column("NFCI").unwrap()[i], nfci[r]);
        assert_eq!(t.target[i], y[&r.offset(1)]);
    }
}
