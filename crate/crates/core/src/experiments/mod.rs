//! Seeded study runners.
//!
//! Every study expands its configuration into a list of independent jobs
//! (one per dimension/trial/contamination level), runs them under an
//! [`Execution`] mode and concatenates the rows in job order. Each job draws
//! from its own [`RngState::derive`] stream, so the emitted table does not
//! depend on how jobs were scheduled.

mod highdim;
mod huber;
mod outlier;
mod tsweep;

pub use highdim::run_highdim;
pub use huber::run_huber;
pub use outlier::{run_outlier2d, OutlierReport, OutlierTrial};
pub use tsweep::run_tsweep;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::format_float;
use crate::rng::RngState;

/// Default scale for data in R^dim: `1/√dim`.
pub fn recommend_scale(dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(1.0 / (dim as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Tsweep,
    Highdim,
    Outlier2d,
    Huber,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Tsweep => "tsweep",
            Study::Highdim => "highdim",
            Study::Outlier2d => "outlier2d",
            Study::Huber => "huber",
        }
    }

    pub fn all() -> [Study; 4] {
        [Study::Tsweep, Study::Highdim, Study::Outlier2d, Study::Huber]
    }
}

impl std::str::FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::all()
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown study {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveScale {
    /// `t = 1/D`.
    InvD,
    /// `t = 1/√D`.
    InvSqrtD,
}

impl AdaptiveScale {
    pub fn value(self, dim: usize) -> f64 {
        match self {
            AdaptiveScale::InvD => 1.0 / dim as f64,
            AdaptiveScale::InvSqrtD => 1.0 / (dim as f64).sqrt(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AdaptiveScale::InvD => "inv_d",
            AdaptiveScale::InvSqrtD => "inv_sqrt_d",
        }
    }
}

/// How the second distribution's mean is displaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum ShiftMode {
    /// Shift of the given Euclidean norm along the first axis.
    FixedNorm(f64),
    /// The same shift on every coordinate (norm grows like `√D`).
    PerCoordinate(f64),
}

impl ShiftMode {
    pub fn vector(self, dim: usize) -> Vec<f64> {
        match self {
            ShiftMode::FixedNorm(v) => {
                let mut s = vec![0.0; dim];
                s[0] = v;
                s
            }
            ShiftMode::PerCoordinate(c) => vec![c; dim],
        }
    }

    pub fn label(self) -> String {
        match self {
            ShiftMode::FixedNorm(v) => format!("norm={v}"),
            ShiftMode::PerCoordinate(c) => format!("coord={c}"),
        }
    }
}

/// Parameters shared by all studies; each study reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub n_per_set: usize,
    pub trials: usize,
    /// Fixed scales.
    pub scales: Vec<f64>,
    /// Scales for the normalized distance where a study reports both.
    pub normalized_scales: Vec<f64>,
    pub adaptive_scales: Vec<AdaptiveScale>,
    pub shift_mode: ShiftMode,
    /// Per-coordinate mean shifts swept by the t-sweep.
    pub mu_grid: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub radii: Vec<f64>,
    pub n_proj: usize,
    /// Size and spread of the dispersed set in the 2D outlier study.
    pub outlier_count: usize,
    pub outlier_std: f64,
    pub output_path: Option<PathBuf>,
}

impl StudyConfig {
    pub fn defaults(study: Study) -> Self {
        let base = StudyConfig {
            seed: 42,
            dims: vec![2],
            n_per_set: 100,
            trials: 1,
            scales: vec![],
            normalized_scales: vec![],
            adaptive_scales: vec![],
            shift_mode: ShiftMode::FixedNorm(2.0),
            mu_grid: vec![],
            epsilons: vec![],
            radii: vec![],
            n_proj: crate::baselines::DEFAULT_PROJECTIONS,
            outlier_count: 10,
            outlier_std: 6.0,
            output_path: None,
        };
        match study {
            Study::Tsweep => StudyConfig {
                dims: vec![100],
                scales: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
                mu_grid: vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
                ..base
            },
            Study::Highdim => StudyConfig {
                dims: vec![2, 10, 50, 100, 200],
                trials: 20,
                scales: vec![0.01, 0.1],
                adaptive_scales: vec![AdaptiveScale::InvD, AdaptiveScale::InvSqrtD],
                ..base
            },
            Study::Outlier2d => StudyConfig {
                dims: vec![2],
                scales: vec![5.0, 20.0],
                trials: 20,
                ..base
            },
            Study::Huber => StudyConfig {
                dims: vec![5],
                n_per_set: 200,
                trials: 5,
                scales: vec![0.001],
                normalized_scales: vec![0.1],
                epsilons: vec![0.01, 0.05, 0.1],
                radii: vec![10.0, 50.0, 100.0, 500.0, 1000.0],
                ..base
            },
        }
    }

    /// Defaults for `study` overlaid with the keys present in `overrides`.
    pub fn with_overrides(study: Study, overrides: &serde_json::Value) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(study))?;
        match (value.as_object_mut(), overrides.as_object()) {
            (Some(base), Some(extra)) => {
                for (k, v) in extra {
                    base.insert(k.clone(), v.clone());
                }
            }
            (_, None) => return Err(Error::invalid("study config must be a JSON object")),
            _ => unreachable!("config serializes to an object"),
        }
        let cfg: StudyConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(study: Study, path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        Self::with_overrides(study, &v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::invalid("dims must be a nonempty list of positive integers"));
        }
        if self.n_per_set == 0 || self.trials == 0 || self.n_proj == 0 {
            return Err(Error::invalid("n_per_set, trials and n_proj must be positive"));
        }
        for &t in self.scales.iter().chain(&self.normalized_scales) {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::invalid(format!("scale {t} is not positive")));
            }
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("radii must be strictly increasing"));
        }
        if self.epsilons.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(Error::invalid("contamination levels must lie in [0, 1]"));
        }
        if !(self.outlier_std > 0.0) {
            return Err(Error::invalid("outlier_std must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub study: String,
    pub method: String,
    pub dim: usize,
    pub trial: usize,
    /// `key=value` pairs joined by `;`.
    pub param: String,
    pub value: f64,
    /// Empty unless the value could not be computed (then `value` is NaN).
    pub error: String,
}

impl StudyRow {
    /// A failed computation becomes a NaN row carrying the error message.
    pub(crate) fn new(
        study: Study,
        method: &str,
        dim: usize,
        trial: usize,
        param: String,
        value: std::result::Result<f64, String>,
    ) -> Self {
        let (value, error) = match value {
            Ok(v) => (v, String::new()),
            Err(e) => (f64::NAN, e),
        };
        StudyRow {
            study: study.name().to_string(),
            method: method.to_string(),
            dim,
            trial,
            param,
            value,
            error,
        }
    }

    /// Look up `key` in the param string.
    pub fn param_value(&self, key: &str) -> Option<&str> {
        self.param
            .split(';')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub method: String,
    pub param: String,
    pub dim: usize,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// `std / mean`.
    pub cv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutput {
    pub study: Study,
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
}

pub const CSV_HEADER: [&str; 7] = ["study", "method", "dim", "trial", "param", "value", "error"];

impl StudyOutput {
    pub(crate) fn from_jobs(study: Study, config: &StudyConfig, jobs: Vec<Vec<StudyRow>>) -> Self {
        let mut rows: Vec<StudyRow> = jobs.into_iter().flatten().collect();
        // Stable: rows with equal keys keep their generation order.
        rows.sort_by(|a, b| {
            (&a.study, &a.method, a.dim, a.trial).cmp(&(&b.study, &b.method, b.dim, b.trial))
        });
        StudyOutput {
            study,
            config: config.clone(),
            rows,
        }
    }

    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a StudyRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Mean/std/CV per (method, param, dim) over successful rows.
    pub fn summary(&self) -> Vec<SummaryEntry> {
        let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            if r.error.is_empty() && r.value.is_finite() {
                groups
                    .entry((r.method.clone(), r.param.clone(), r.dim))
                    .or_default()
                    .push(r.value);
            }
        }
        groups
            .into_iter()
            .map(|((method, param, dim), vals)| {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let std = var.sqrt();
                SummaryEntry {
                    method,
                    param,
                    dim,
                    count: vals.len(),
                    mean,
                    std,
                    cv: std / mean,
                }
            })
            .collect()
    }

    pub fn summary_entry(&self, method: &str, param: &str, dim: usize) -> Option<SummaryEntry> {
        self.summary()
            .into_iter()
            .find(|e| e.method == method && e.param == param && e.dim == dim)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let map_csv = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(map_csv)?;
        for r in &self.rows {
            w.write_record([
                r.study.as_str(),
                r.method.as_str(),
                &r.dim.to_string(),
                &r.trial.to_string(),
                r.param.as_str(),
                &format_float(r.value),
                r.error.as_str(),
            ])
            .map_err(map_csv)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "study": self.study.name(),
            "seed": self.config.seed,
            "config": self.config,
            "summary": self.summary(),
        })
    }

    /// Write `<stem>.csv` and `<stem>.json` next to each other.
    pub fn write_files(&self, csv_path: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let csv_path = csv_path.as_ref().to_path_buf();
        if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
        let json_path = csv_path.with_extension("json");
        let mut text = serde_json::to_string_pretty(&self.summary_json())?;
        text.push('\n');
        std::fs::write(&json_path, text)?;
        Ok((csv_path, json_path))
    }
}

/// Runs `study` with `config`.
pub fn run_study(study: Study, config: &StudyConfig, exec: Execution) -> Result<StudyOutput> {
    config.validate()?;
    match study {
        Study::Tsweep => run_tsweep(config, exec),
        Study::Highdim => run_highdim(config, exec),
        Study::Outlier2d => run_outlier2d(config, exec).map(|r| r.output),
        Study::Huber => run_huber(config, exec),
    }
}

/// Stream for a job identified by up to three small indices.
pub(crate) fn job_rng(seed: u64, a: usize, b: usize, c: usize) -> RngState {
    RngState::derive(seed, ((a as u64) << 40) ^ ((b as u64) << 20) ^ c as u64)
}

pub(crate) fn fmt_param(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recommend_scale_values() {
        assert!((recommend_scale(784).unwrap() - 1.0 / 28.0).abs() < 1e-15);
        assert!((recommend_scale(784).unwrap() - 0.0357).abs() < 1e-4);
        assert_eq!(recommend_scale(1).unwrap(), 1.0);
        assert_eq!(recommend_scale(100).unwrap(), 0.1);
        assert!(recommend_scale(0).is_err());
    }

    #[test]
    fn study_names_round_trip() {
        for s in Study::all() {
            assert_eq!(s.name().parse::<Study>().unwrap(), s);
        }
        assert!("nope".parse::<Study>().is_err());
    }

    #[test]
    fn overrides_merge_onto_defaults() {
        let v = serde_json::json!({"seed": 7, "trials": 3});
        let c = StudyConfig::with_overrides(Study::Huber, &v).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.trials, 3);
        assert_eq!(c.dims, vec![5]);
        let bad = serde_json::json!({"trails": 3});
        assert!(StudyConfig::with_overrides(Study::Huber, &bad).is_err());
        let decreasing = serde_json::json!({"radii": [10.0, 5.0]});
        assert!(StudyConfig::with_overrides(Study::Huber, &decreasing).is_err());
    }

    #[test]
    fn shift_modes() {
        assert_eq!(ShiftMode::FixedNorm(2.0).vector(3), vec![2.0, 0.0, 0.0]);
        assert_eq!(ShiftMode::PerCoordinate(2.0).vector(2), vec![2.0, 2.0]);
    }

    #[test]
    fn csv_layout() {
        let cfg = StudyConfig::defaults(Study::Tsweep);
        let rows = vec![vec![
            StudyRow::new(Study::Tsweep, "b", 2, 0, "t=1".into(), Ok(0.5)),
            StudyRow::new(Study::Tsweep, "a", 2, 1, "t=1".into(), Err("invalid argument: x, y".into())),
        ]];
        let out = StudyOutput::from_jobs(Study::Tsweep, &cfg, rows);
        let text = out.csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "study,method,dim,trial,param,value,error");
        assert_eq!(lines[1], "tsweep,a,2,1,t=1,NaN,\"invalid argument: x, y\"");
        assert_eq!(lines[2], "tsweep,b,2,0,t=1,5.0000000000000000e-1,");
        assert!(!text.contains('\r'));
        assert_eq!(out.rows[0].param_value("t"), Some("1"));
    }
}
