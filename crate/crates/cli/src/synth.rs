//! Seeded synthetic data: an SPD panel with matching macro series, and
//! regression panels with a known quantile process.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, StudentT};
use ssi_core::gar::{GarPanel, Regressor};
use ssi_core::Quarter;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub forecasters: usize,
    pub first: Quarter,
    pub quarters: usize,
    /// Interior bin edges; the outer bins are open.
    pub edges: Vec<f64>,
    /// Draws per histogram before rounding to whole percents.
    pub draws: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            forecasters: 20,
            first: Quarter::new(2001, 1).unwrap(),
            quarters: 80,
            edges: (0..=8).map(|i| i as f64 * 0.5).collect(),
            draws: 400,
            seed: 0x5eed,
        }
    }
}

/// Paths written by [`write_dataset`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub spd: PathBuf,
    pub gdp: PathBuf,
    pub nfci: PathBuf,
    pub config: PathBuf,
}

fn fmt_edge(v: f64) -> String {
    format!("{v:.1}")
}

/// Round shares to whole percents summing to 100 (largest remainder).
pub fn round_percents(counts: &[usize]) -> Vec<u32> {
    let total: usize = counts.iter().sum();
    let exact: Vec<f64> = counts
        .iter()
        .map(|c| *c as f64 * 100.0 / total as f64)
        .collect();
    let mut out: Vec<u32> = exact.iter().map(|e| e.floor() as u32).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let missing = 100 - out.iter().sum::<u32>();
    for &i in order.iter().take(missing as usize) {
        out[i] += 1;
    }
    out
}

/// Generated series before serialization.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub spd_csv: String,
    pub gdp_csv: String,
    pub nfci_csv: String,
}

pub fn generate(cfg: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.quarters;
    let std_normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    // latent inflation level, balance of risks and financial conditions
    let mut level = vec![0.0; n];
    let mut risk = vec![0.0; n];
    let mut nfci_m = vec![0.0; 3 * n];
    let (mut l, mut r, mut f) = (2.0, 0.0, 0.0);
    for t in 0..n {
        l = 2.0 + 0.85 * (l - 2.0) + 0.25 * std_normal(&mut rng);
        r = 0.7 * r + 0.3 * std_normal(&mut rng);
        level[t] = l;
        risk[t] = r;
        for m in 0..3 {
            f = 0.9 * f + 0.25 * std_normal(&mut rng);
            nfci_m[3 * t + m] = f;
        }
    }
    let nfci_q: Vec<f64> = (0..n).map(|t| nfci_m[3 * t + 2]).collect();

    let bias: Vec<f64> = (0..cfg.forecasters)
        .map(|_| 0.3 * std_normal(&mut rng))
        .collect();
    let tilt: Vec<f64> = (0..cfg.forecasters)
        .map(|_| 0.2 * std_normal(&mut rng))
        .collect();
    let spread: Vec<f64> = (0..cfg.forecasters)
        .map(|_| rng.gen_range(0.4..0.9))
        .collect();

    let mut spd =
        String::from("forecaster_id,round,horizon,variable,bin_lower,bin_upper,prob_percent\n");
    for t in 0..n {
        let q = cfg.first.offset(t as i64);
        let round = format!("{}-{:02}-15", q.year(), q.start_month() + 1);
        for i in 0..cfg.forecasters {
            // some forecasters skip some rounds
            if rng.gen_bool(0.1) {
                continue;
            }
            let centre = level[t] + bias[i] + 0.1 * std_normal(&mut rng);
            // two-piece normal: wider on the side the risk points to
            let a = (risk[t] + tilt[i]).clamp(-0.8, 0.8);
            let (lo_sd, hi_sd) = (spread[i] * (1.0 - a / 2.0), spread[i] * (1.0 + a / 2.0));
            let mut counts = vec![0usize; cfg.edges.len() + 1];
            for _ in 0..cfg.draws {
                let z = std_normal(&mut rng).abs();
                let x = if rng.gen_bool(lo_sd / (lo_sd + hi_sd)) {
                    centre - lo_sd * z
                } else {
                    centre + hi_sd * z
                };
                let bin = cfg.edges.iter().take_while(|e| x >= **e).count();
                counts[bin] += 1;
            }
            let pct = round_percents(&counts);
            let id = format!("F{:02}", i + 1);
            for (b, p) in pct.iter().enumerate() {
                let lower = if b == 0 {
                    String::new()
                } else {
                    fmt_edge(cfg.edges[b - 1])
                };
                let upper = if b == cfg.edges.len() {
                    String::new()
                } else {
                    fmt_edge(cfg.edges[b])
                };
                writeln!(spd, "{id},{round},1y,inflation,{lower},{upper},{p}").unwrap();
            }
        }
    }

    // growth responds to last quarter's conditions and risks, fat tailed
    let shock = StudentT::new(5.0).unwrap();
    let mut gdp = String::from("date,value\n");
    for t in 0..n {
        let q = cfg.first.offset(t as i64);
        let (x_f, x_r) = if t == 0 {
            (0.0, 0.0)
        } else {
            (nfci_q[t - 1], risk[t - 1])
        };
        let scale = 1.0 + 0.8 * x_f.max(0.0);
        let g = 2.5 - 1.2 * x_f - 0.8 * x_r + scale * shock.sample(&mut rng);
        writeln!(gdp, "{}-{:02}-01,{:.4}", q.year(), q.start_month(), g).unwrap();
    }

    let mut nfci = String::from("date,value\n");
    for t in 0..n {
        let q = cfg.first.offset(t as i64);
        for m in 0..3 {
            writeln!(
                nfci,
                "{}-{:02}-01,{:.4}",
                q.year(),
                q.start_month() + m as u32,
                nfci_m[3 * t + m]
            )
            .unwrap();
        }
    }
    SynthData {
        spd_csv: spd,
        gdp_csv: gdp,
        nfci_csv: nfci,
    }
}

const CONFIG_TOML: &str = "\
spd_path = \"spd.csv\"
gdp_path = \"gdp.csv\"
nfci_path = \"nfci.csv\"
out_dir = \"out\"
target = 2.0
horizon = \"1y\"
variable = \"inflation\"
";

/// Write `spd.csv`, `gdp.csv`, `nfci.csv` and a matching `run.toml` into
/// `dir`.
pub fn write_dataset(dir: &Path, cfg: &SynthConfig) -> Result<Dataset> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let data = generate(cfg);
    let ds = Dataset {
        spd: dir.join("spd.csv"),
        gdp: dir.join("gdp.csv"),
        nfci: dir.join("nfci.csv"),
        config: dir.join("run.toml"),
    };
    for (p, text) in [
        (&ds.spd, data.spd_csv.as_str()),
        (&ds.gdp, data.gdp_csv.as_str()),
        (&ds.nfci, data.nfci_csv.as_str()),
        (&ds.config, CONFIG_TOML),
    ] {
        fs::write(p, text).map_err(|e| CliError::io(p, e))?;
    }
    Ok(ds)
}

/// Panel whose conditional quantiles are linear in one covariate:
/// `y = 1 + 2x + e` with standard normal `x` and `e`. The covariate is
/// stored in the NFCI column.
pub fn linear_quantile_panel(seed: u64, n: usize) -> GarPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| 1.0 + 2.0 * v + normal.sample(&mut rng))
        .collect();
    let rounds = (0..n)
        .map(|i| Quarter::new(2000, 1).unwrap().offset(i as i64))
        .collect();
    GarPanel::new(rounds, y)
        .and_then(|p| p.with_column(Regressor::Nfci, x))
        .expect("generated panel is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percents_sum_to_100() {
        assert_eq!(round_percents(&[1, 1, 1]), vec![34, 33, 33]);
        assert_eq!(round_percents(&[0, 400, 0]), vec![0, 100, 0]);
        assert_eq!(round_percents(&[3, 5, 392]).iter().sum::<u32>(), 100);
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = SynthConfig {
            quarters: 4,
            forecasters: 3,
            ..SynthConfig::default()
        };
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.spd_csv, b.spd_csv);
        let c = generate(&SynthConfig { seed: 1, ..cfg });
        assert_ne!(a.spd_csv, c.spd_csv);
    }
}
