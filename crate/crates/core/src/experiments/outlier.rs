use serde::{Deserialize, Serialize};

use crate::baselines::sliced_wasserstein;
use crate::distance::mag_distance;
use crate::error::Result;
use crate::exec::Execution;
use crate::points::sample_gaussian;

use super::{fmt_param, job_rng, Study, StudyConfig, StudyOutput, StudyRow};

/// Relative changes `|d(B, Y∪Y′) − d(B, Y)| / d(B, Y)` for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierTrial {
    pub trial: usize,
    /// `(t, relative change)` of the plain distance, in `config.scales` order.
    pub magnitude: Vec<(f64, f64)>,
    /// As `magnitude`, for the normalized distance.
    pub normalized: Vec<(f64, f64)>,
    pub wasserstein: f64,
}

impl OutlierTrial {
    /// Relative change of the plain distance shrinks as `t` grows, and every
    /// magnitude change is below the Wasserstein one.
    pub fn ordering_holds(&self) -> bool {
        ordered(&self.magnitude, self.wasserstein)
    }

    pub fn normalized_ordering_holds(&self) -> bool {
        ordered(&self.normalized, self.wasserstein)
    }
}

fn ordered(changes: &[(f64, f64)], wasserstein: f64) -> bool {
    let mut by_t = changes.to_vec();
    by_t.sort_by(|a, b| a.0.total_cmp(&b.0));
    by_t.windows(2).all(|w| w[1].1 < w[0].1) && by_t.iter().all(|&(_, r)| r < wasserstein)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub output: StudyOutput,
    pub trials: Vec<OutlierTrial>,
}

impl OutlierReport {
    /// Fraction of trials where [`OutlierTrial::ordering_holds`].
    pub fn ordering_fraction(&self) -> f64 {
        self.fraction(OutlierTrial::ordering_holds)
    }

    pub fn normalized_ordering_fraction(&self) -> f64 {
        self.fraction(OutlierTrial::normalized_ordering_holds)
    }

    fn fraction(&self, pred: fn(&OutlierTrial) -> bool) -> f64 {
        let ok = self.trials.iter().filter(|t| pred(t)).count();
        ok as f64 / self.trials.len() as f64
    }
}

const CLEAN_MEAN: [f64; 2] = [0.0, 0.0];
const SHIFTED_MEAN: [f64; 2] = [2.0, 2.0];

/// B ~ N(0, I) and Y ~ N([2,2], I) with `n_per_set` points each, plus a
/// dispersed set Y′ of `outlier_count` points from N([2,2], outlier_std²·I).
/// Emits the clean and contaminated distances and their relative change for
/// plain and normalized magnitude distance (each of `config.scales`) and
/// sliced Wasserstein; the
/// Wasserstein pair shares its projection directions.
pub fn run_outlier2d(config: &StudyConfig, exec: Execution) -> Result<OutlierReport> {
    config.validate()?;
    if config.dims != [2] {
        return Err(crate::Error::invalid("the outlier study is defined in two dimensions"));
    }
    let n = config.n_per_set;
    let results = exec.map_range(config.trials, |trial| -> Result<(Vec<StudyRow>, OutlierTrial)> {
        let mut rng = job_rng(config.seed, 0, 0, trial);
        let b = sample_gaussian(&mut rng, n, 2, &CLEAN_MEAN, 1.0)?;
        let y = sample_gaussian(&mut rng, n, 2, &SHIFTED_MEAN, 1.0)?;
        let extra = sample_gaussian(&mut rng, config.outlier_count, 2, &SHIFTED_MEAN, config.outlier_std)?;
        let noisy = y.concat(&extra)?;
        let mut rows = Vec::new();
        let mut push = |method: &str, param: String, clean: f64, dirty: f64| {
            let rel = relative_change(clean, dirty);
            for (set, v) in [("clean", clean), ("noisy", dirty), ("rel_change", rel)] {
                rows.push(StudyRow::new(Study::Outlier2d, method, 2, trial, format!("{param};set={set}"), Ok(v)));
            }
            rel
        };
        let mut magnitude = Vec::new();
        let mut normalized = Vec::new();
        for &t in &config.scales {
            let clean = mag_distance(&b, &y, t)?;
            let dirty = mag_distance(&b, &noisy, t)?;
            let param = format!("t={}", fmt_param(t));
            magnitude.push((t, push("mag", param.clone(), clean.distance, dirty.distance)));
            normalized.push((t, push("mag_normalized", param, clean.normalized, dirty.normalized)));
        }
        let proj = rng;
        let clean = sliced_wasserstein(&b, &y, config.n_proj, &mut { proj })?;
        let dirty = sliced_wasserstein(&b, &noisy, config.n_proj, &mut { proj })?;
        let wasserstein = push("sliced_w", format!("n_proj={}", config.n_proj), clean, dirty);
        Ok((
            rows,
            OutlierTrial {
                trial,
                magnitude,
                normalized,
                wasserstein,
            },
        ))
    });
    let mut jobs = Vec::new();
    let mut trials = Vec::new();
    for r in results {
        let (rows, trial) = r?;
        jobs.push(rows);
        trials.push(trial);
    }
    Ok(OutlierReport {
        output: StudyOutput::from_jobs(Study::Outlier2d, config, jobs),
        trials,
    })
}

fn relative_change(clean: f64, dirty: f64) -> f64 {
    if clean == dirty {
        0.0
    } else {
        (dirty - clean).abs() / clean.abs()
    }
}
