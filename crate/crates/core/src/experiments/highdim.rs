use crate::baselines::{mmd_squared, sliced_wasserstein, KernelSpec};
use crate::distance::normalized_mag_distance;
use crate::error::Result;
use crate::exec::Execution;
use crate::points::{sample_gaussian, sample_standard_normal};

use super::{fmt_param, job_rng, Study, StudyConfig, StudyOutput, StudyRow};

/// Two Gaussians with identity covariance and a mean shift per
/// `config.shift_mode`, compared by squared MMD (`σ = 1` and `σ = 1/√D`),
/// sliced Wasserstein, and normalized magnitude distance at the fixed and
/// adaptive scales. One job per (dim, trial).
pub fn run_highdim(config: &StudyConfig, exec: Execution) -> Result<StudyOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (di, &dim) in config.dims.iter().enumerate() {
        for trial in 0..config.trials {
            jobs.push((di, dim, trial));
        }
    }
    let n = config.n_per_set;
    let rows = exec.map(&jobs, |&(di, dim, trial)| -> Result<Vec<StudyRow>> {
        let mut rng = job_rng(config.seed, di, 0, trial);
        let x = sample_standard_normal(&mut rng, n, dim);
        let y = sample_gaussian(&mut rng, n, dim, &config.shift_mode.vector(dim), 1.0)?;
        let shift = config.shift_mode.label();
        let row = |method: &str, param: String, value: Result<f64>| {
            StudyRow::new(
                Study::Highdim,
                method,
                dim,
                trial,
                format!("{param};shift={shift}"),
                value.map_err(|e| e.to_string()),
            )
        };
        let mut rows = Vec::new();
        let inv_sqrt = 1.0 / (dim as f64).sqrt();
        for (label, sigma) in [("1", 1.0), ("inv_sqrt_d", inv_sqrt)] {
            let k = KernelSpec::Gaussian { sigma };
            rows.push(row("mmd", format!("sigma={label}"), mmd_squared(&x, &y, k)));
        }
        rows.push(row(
            "sliced_w",
            format!("n_proj={}", config.n_proj),
            sliced_wasserstein(&x, &y, config.n_proj, &mut rng),
        ));
        for &t in &config.scales {
            rows.push(row(
                "mag_normalized",
                format!("t={}", fmt_param(t)),
                normalized_mag_distance(&x, &y, t),
            ));
        }
        for a in &config.adaptive_scales {
            rows.push(row(
                "mag_normalized",
                format!("t={}", a.label()),
                normalized_mag_distance(&x, &y, a.value(dim)),
            ));
        }
        Ok(rows)
    });
    let jobs = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(StudyOutput::from_jobs(Study::Highdim, config, jobs))
}
