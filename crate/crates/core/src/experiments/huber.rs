use crate::baselines::sliced_wasserstein;
use crate::distance::mag_distance;
use crate::error::Result;
use crate::exec::Execution;
use crate::points::sample_standard_normal;

use super::{fmt_param, job_rng, Study, StudyConfig, StudyOutput, StudyRow};

/// Huber contamination: a clean `N(0, I)` sample P against a sample from
/// `(1−ε)P + εR`, where `⌈εn⌉` points are replaced by outliers at radius `r`
/// along random unit directions. The clean points, outlier directions and
/// sliced-Wasserstein projections are shared across radii, so each curve
/// isolates the effect of `r`.
///
/// Methods: `sliced_w`, `mag` (plain, at each of `config.scales`) and
/// `mag_normalized` (at each of `config.normalized_scales`).
pub fn run_huber(config: &StudyConfig, exec: Execution) -> Result<StudyOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (di, &dim) in config.dims.iter().enumerate() {
        for (ei, &eps) in config.epsilons.iter().enumerate() {
            for trial in 0..config.trials {
                jobs.push((di, dim, ei, eps, trial));
            }
        }
    }
    let n = config.n_per_set;
    let rows = exec.map(&jobs, |&(di, dim, ei, eps, trial)| -> Result<Vec<StudyRow>> {
        let mut rng = job_rng(config.seed, di, ei, trial);
        let p = sample_standard_normal(&mut rng, n, dim);
        let clean = sample_standard_normal(&mut rng, n, dim);
        let k = outlier_count(eps, n);
        let dirs: Vec<Vec<f64>> = (0..k).map(|_| rng.unit_vector(dim)).collect();
        let proj_rng = rng;
        let mut rows = Vec::new();
        for &r in &config.radii {
            let mut q = clean.clone();
            for (i, u) in dirs.iter().enumerate() {
                q.point_mut(i).iter_mut().zip(u).for_each(|(c, ui)| *c = r * ui);
            }
            let base = format!("eps={};r={}", fmt_param(eps), fmt_param(r));
            let row = |method: &str, param: String, value: Result<f64>| {
                StudyRow::new(Study::Huber, method, dim, trial, param, value.map_err(|e| e.to_string()))
            };
            let sw = sliced_wasserstein(&p, &q, config.n_proj, &mut { proj_rng });
            rows.push(row("sliced_w", format!("{base};n_proj={}", config.n_proj), sw));
            for &t in &config.scales {
                let d = mag_distance(&p, &q, t).map(|r| r.distance);
                rows.push(row("mag", format!("{base};t={}", fmt_param(t)), d));
            }
            for &t in &config.normalized_scales {
                let d = mag_distance(&p, &q, t).map(|r| r.normalized);
                rows.push(row("mag_normalized", format!("{base};t={}", fmt_param(t)), d));
            }
        }
        Ok(rows)
    });
    let jobs = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(StudyOutput::from_jobs(Study::Huber, config, jobs))
}

/// `⌈εn⌉`, guarded against `ε·n` landing a hair above an integer.
pub(crate) fn outlier_count(eps: f64, n: usize) -> usize {
    let raw = eps * n as f64;
    let k = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw.ceil() };
    (k as usize).min(n)
}
