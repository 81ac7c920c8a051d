use crate::distance::mag_distance;
use crate::error::Result;
use crate::exec::Execution;
use crate::points::{sample_gaussian, sample_standard_normal};

use super::{fmt_param, job_rng, Study, StudyConfig, StudyOutput, StudyRow};

/// Plain and normalized magnitude distance between `N(0, I)` and
/// `N(μ·1, I)` samples over the μ grid and every scale in `config.scales`.
/// Within a job the same two samples are reused across scales.
pub fn run_tsweep(config: &StudyConfig, exec: Execution) -> Result<StudyOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (di, &dim) in config.dims.iter().enumerate() {
        for (mi, &mu) in config.mu_grid.iter().enumerate() {
            for trial in 0..config.trials {
                jobs.push((di, dim, mi, mu, trial));
            }
        }
    }
    let n = config.n_per_set;
    let results = exec.map(&jobs, |&(di, dim, mi, mu, trial)| -> Result<Vec<StudyRow>> {
        let mut rng = job_rng(config.seed, di, mi, trial);
        let x = sample_standard_normal(&mut rng, n, dim);
        let y = sample_gaussian(&mut rng, n, dim, &vec![mu; dim], 1.0)?;
        let mut rows = Vec::with_capacity(2 * config.scales.len());
        for &t in &config.scales {
            let param = format!("mu={};t={}", fmt_param(mu), fmt_param(t));
            let report = mag_distance(&x, &y, t).map_err(|e| e.to_string());
            let plain = report.as_ref().map(|r| r.distance).map_err(Clone::clone);
            let normalized = report.map(|r| r.normalized);
            rows.push(StudyRow::new(Study::Tsweep, "mag", dim, trial, param.clone(), plain));
            rows.push(StudyRow::new(Study::Tsweep, "mag_normalized", dim, trial, param, normalized));
        }
        Ok(rows)
    });
    let jobs = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(StudyOutput::from_jobs(Study::Tsweep, config, jobs))
}
