//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any fails. An optional argument filters
//! criteria by substring.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{fd_gradient, gaussian, rel_err, rows, separated_set, sized};
use magmetric::distance::{
    bound_check, check_triangle, cross_polytope_counterexample, cross_polytope_dense, limit_probe, mag_distance,
    mag_distance_gradient, ScaleSchedule,
};
use magmetric::experiments::{run_study, Study, StudyConfig, StudyOutput};
use magmetric::maggn::{
    init_generator, loss_and_param_gradient, sample, toy_target, train, TrainConfig, TOY_EPOCHS, TOY_LAYERS,
    TOY_MEAN, TOY_SCHEDULE,
};
use magmetric::magnitude::{magnitude_gradient, magnitude_value};
use magmetric::{Execution, PointSet, RngState};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn two_point_closed_form() -> Outcome {
    let grid: Vec<f64> = (0..10).map(|k| 0.1 * 10f64.powf(k as f64 / 4.5)).collect();
    let mut worst: f64 = 0.0;
    for &t in &grid {
        for &d in &grid {
            let x = PointSet::from_scalars(&[0.0, d]).unwrap();
            let m = magnitude_value(&x, t).unwrap();
            worst = worst.max((m - 2.0 / (1.0 + (-t * d).exp())).abs());
        }
    }
    outcome(worst < 1e-12, format!("max abs error {worst:.3e} over 10x10 (t, d) grid"))
}

fn cross_polytope() -> Outcome {
    let c = cross_polytope_counterexample(500, 5.0).unwrap();
    let gap_ok = (c.gap - 7.18).abs() <= 0.05;
    let slack_ok = c.slack < 0.0;
    let mut worst: f64 = 0.0;
    for dim in [1, 2, 3, 5, 10, 20, 35, 50] {
        for t in [0.5, 1.0, 5.0] {
            let r = cross_polytope_counterexample(dim, t).unwrap();
            let d = cross_polytope_dense(dim, t).unwrap();
            worst = worst.max((r.gap - d.gap).abs()).max((r.slack - d.slack).abs());
        }
    }
    let dense_ok = worst < 1e-9;
    outcome(
        gap_ok && slack_ok && dense_ok,
        format!(
            "D=500 t=5: gap {:.5}, slack {:.4}; dense vs reduced (D<=50) max diff {worst:.2e}",
            c.gap, c.slack
        ),
    )
}

fn scale_limits() -> Outcome {
    let mut worst_small: f64 = 0.0;
    let mut worst_large: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = RngState::derive(1001, seed);
        let x = separated_set(&mut rng, 20, 5, 0.5, &[]);
        let y = separated_set(&mut rng, 20, 5, 0.5, &rows(&x));
        let p = limit_probe(&x, &y, 1e-4, 40.0).unwrap();
        worst_small = worst_small.max(p.d_small.abs());
        worst_large = worst_large.max((p.d_large - p.sym_diff as f64).abs());
    }
    outcome(
        worst_small < 1e-2 && worst_large < 1e-3,
        format!("20 seeds: max |d(1e-4)| {worst_small:.3e}, max |d(40) - |XΔY|| {worst_large:.3e}"),
    )
}

fn nonnegativity_and_symmetry() -> Outcome {
    let mut rng = RngState::new(2002);
    let mut min_d = f64::INFINITY;
    let mut asymmetric = 0;
    let mut cases = 0;
    for _ in 0..200 {
        let dim = 1 + rng.below(10);
        let x = sized(&mut rng, 1, 15, dim, 1.0);
        let y = sized(&mut rng, 1, 15, dim, 1.0);
        for t in [0.1, 1.0, 10.0] {
            let a = mag_distance(&x, &y, t).unwrap().distance;
            let b = mag_distance(&y, &x, t).unwrap().distance;
            min_d = min_d.min(a);
            if a.to_bits() != b.to_bits() {
                asymmetric += 1;
            }
            cases += 1;
        }
    }
    outcome(
        min_d >= -1e-9 && asymmetric == 0,
        format!("{cases} cases: min distance {min_d:.3e}, {asymmetric} asymmetric"),
    )
}

fn duplicate_invariance() -> Outcome {
    let mut rng = RngState::new(3003);
    let mut mismatches = 0;
    for _ in 0..50 {
        let dim = 1 + rng.below(6);
        let x = sized(&mut rng, 2, 20, dim, 1.0);
        let mut dup = x.clone();
        for _ in 0..1 + rng.below(10) {
            let i = rng.below(x.len());
            dup.push(x.point(i)).unwrap();
        }
        let mut order: Vec<usize> = (0..dup.len()).collect();
        // Shuffled duplicates still collapse onto the first occurrences' set.
        rng.shuffle(&mut order[x.len()..]);
        let dup = dup.select(&order);
        let t = rng.uniform_range(0.1, 5.0);
        if magnitude_value(&x, t).unwrap() != magnitude_value(&dup, t).unwrap() {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("50 sets with injected duplicates: {mismatches} inexact"))
}

fn triangle_on_the_line() -> Outcome {
    let mut rng = RngState::new(4004);
    let mut worst = f64::INFINITY;
    let line = |rng: &mut RngState| {
        let n = 1 + rng.below(8);
        let xs: Vec<f64> = (0..n).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
        PointSet::from_scalars(&xs).unwrap()
    };
    for _ in 0..500 {
        let (x, y, z) = (line(&mut rng), line(&mut rng), line(&mut rng));
        for t in [0.3, 1.0, 5.0] {
            worst = worst.min(check_triangle(&x, &y, &z, t).unwrap());
        }
    }
    outcome(worst >= -1e-9, format!("1500 triples: min slack {worst:.3e}"))
}

fn boundedness() -> Outcome {
    let mut rng = RngState::new(5005);
    let mut failures = 0;
    let mut not_applicable_1d = 0;
    for _ in 0..200 {
        let x = sized(&mut rng, 1, 12, 1, 2.0);
        let y = sized(&mut rng, 1, 12, 1, 2.0);
        let t = 10f64.powf(rng.uniform_range(-2.0, 2.0));
        let b = bound_check(&x, &y, t).unwrap();
        failures += !b.holds as usize;
        not_applicable_1d += !b.applicable as usize;
    }
    let mut scales = Vec::new();
    for _ in 0..100 {
        let dim = 2 + rng.below(8);
        let x = sized(&mut rng, 2, 12, dim, 1.0);
        let y = sized(&mut rng, 2, 12, dim, 1.0);
        let mut t = 0.5;
        let b = loop {
            let b = bound_check(&x, &y, t).unwrap();
            if b.applicable {
                break b;
            }
            t *= 2.0;
        };
        scales.push(t);
        failures += !b.holds as usize;
    }
    let t_max = scales.iter().cloned().fold(0.0, f64::max);
    outcome(
        failures == 0 && not_applicable_1d == 0,
        format!(
            "200 1D pairs + 100 R^D pairs (nonnegative from t <= {t_max}): {failures} violations, {not_applicable_1d} 1D weightings negative"
        ),
    )
}

fn gradients() -> Outcome {
    let mut rng = RngState::new(6006);
    let h = 1e-5;
    let (mut w_mag, mut w_plain, mut w_norm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let dim = 1 + rng.below(5);
        let t = rng.uniform_range(0.5, 2.0);
        let x = sized(&mut rng, 1, 10, dim, 1.0);
        let y = sized(&mut rng, 1, 10, dim, 1.0);
        let g = magnitude_gradient(&y, t).unwrap();
        let fd = fd_gradient(&y, h, |p| magnitude_value(p, t).unwrap());
        w_mag = w_mag.max(rel_err(g.as_slice(), fd.as_slice()));
        for normalized in [false, true] {
            let g = mag_distance_gradient(&x, &y, t, normalized).unwrap();
            let fd = fd_gradient(&y, h, |p| {
                let r = mag_distance(&x, p, t).unwrap();
                if normalized {
                    r.normalized
                } else {
                    r.distance
                }
            });
            let e = rel_err(g.as_slice(), fd.as_slice());
            if normalized {
                w_norm = w_norm.max(e);
            } else {
                w_plain = w_plain.max(e);
            }
        }
    }
    // Micro-net z ∈ R² → R¹: two weights and a bias.
    let gen = init_generator(&mut RngState::new(6007), &[2, 1]).unwrap();
    let real = gaussian(&mut RngState::new(6008), 6, 1, 1.0);
    let z = gaussian(&mut RngState::new(6009), 5, 2, 1.0);
    let schedule = ScaleSchedule::parse("0.5@1,1.5@2").unwrap();
    let loss = |p: &[f64]| {
        let mut g = gen.clone();
        g.set_params(p).unwrap();
        loss_and_param_gradient(&g, &real, &z, &schedule, 2, true, Execution::Sequential)
            .unwrap()
            .0
    };
    let p0 = gen.params();
    let (_, analytic) = loss_and_param_gradient(&gen, &real, &z, &schedule, 2, true, Execution::Sequential).unwrap();
    let fd: Vec<f64> = (0..p0.len())
        .map(|k| {
            let mut up = p0.clone();
            up[k] += h;
            let mut down = p0.clone();
            down[k] -= h;
            (loss(&up) - loss(&down)) / (2.0 * h)
        })
        .collect();
    let w_net = rel_err(&analytic, &fd);
    outcome(
        w_mag < 1e-5 && w_plain < 1e-5 && w_norm < 1e-5 && w_net < 1e-4 && p0.len() == 3,
        format!(
            "max rel err: magnitude {w_mag:.2e}, distance {w_plain:.2e}, normalized {w_norm:.2e}, generator ({} params) {w_net:.2e}",
            p0.len()
        ),
    )
}

fn mean_of(out: &StudyOutput, method: &str, param: &str, dim: usize) -> f64 {
    out.summary_entry(method, param, dim)
        .unwrap_or_else(|| panic!("no summary for {method} {param} D={dim}"))
        .mean
}

fn cv_of(out: &StudyOutput, method: &str, param: &str, dim: usize) -> f64 {
    out.summary_entry(method, param, dim)
        .unwrap_or_else(|| panic!("no summary for {method} {param} D={dim}"))
        .cv
}

fn high_dimensional_study() -> Outcome {
    let cfg = StudyConfig::defaults(Study::Highdim);
    let out = run_study(Study::Highdim, &cfg, Execution::default()).unwrap();
    let shift = cfg.shift_mode.label();
    let p = |s: &str| format!("{s};shift={shift}");
    let (lo, hi) = (cfg.dims[0], *cfg.dims.last().unwrap());

    let mmd_ratio = mean_of(&out, "mmd", &p("sigma=1"), hi) / mean_of(&out, "mmd", &p("sigma=1"), lo);
    let a = mmd_ratio < 0.1;

    let adaptive: Vec<f64> = cfg
        .dims
        .iter()
        .map(|&d| mean_of(&out, "mag_normalized", &p("t=inv_sqrt_d"), d))
        .collect();
    let spread = adaptive.iter().cloned().fold(f64::MIN, f64::max) / adaptive.iter().cloned().fold(f64::MAX, f64::min);
    let b = spread < 3.0;

    let mut worse_dims = Vec::new();
    let mut cvs = Vec::new();
    for &d in &cfg.dims {
        let m = cv_of(&out, "mag_normalized", &p("t=inv_sqrt_d"), d);
        let w = cv_of(&out, "sliced_w", &p(&format!("n_proj={}", cfg.n_proj)), d);
        cvs.push(format!("D={d}: {m:.3}/{w:.3}"));
        if m >= w {
            worse_dims.push(d);
        }
    }
    let c = worse_dims.is_empty();
    let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
    outcome(
        a && b && c,
        format!(
            "(a) {} MMD(σ=1) D={hi}/D={lo} = {mmd_ratio:.3}; (b) {} normalized t=1/√D max/min = {spread:.2} (means {:?}); (c) {} CV magnitude/Wasserstein [{}], not lower at D={worse_dims:?}",
            tag(a),
            tag(b),
            adaptive.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            tag(c),
            cvs.join(", ")
        ),
    )
}

fn huber_contamination() -> Outcome {
    let mut cfg = StudyConfig::defaults(Study::Huber);
    cfg.epsilons = vec![0.05];
    let out = run_study(Study::Huber, &cfg, Execution::default()).unwrap();
    let (r_lo, r_hi) = (cfg.radii[0], *cfg.radii.last().unwrap());
    let param = |r: f64, tail: &str| format!("eps=0.05;r={r};{tail}");
    let sw_tail = format!("n_proj={}", cfg.n_proj);
    let mag_tail = format!("t={}", cfg.scales[0]);
    let w_ratio = mean_of(&out, "sliced_w", &param(r_hi, &sw_tail), 5) / mean_of(&out, "sliced_w", &param(r_lo, &sw_tail), 5);
    let m_ratio = mean_of(&out, "mag", &param(r_hi, &mag_tail), 5) / mean_of(&out, "mag", &param(r_lo, &mag_tail), 5);
    let max_norm = out
        .rows_for("mag_normalized")
        .map(|r| r.value)
        .fold(f64::MIN, f64::max);
    let failed = out.rows.iter().filter(|r| !r.error.is_empty()).count();
    let (a, b, c) = (w_ratio > 10.0, m_ratio < 2.0, max_norm <= 1.0 + 1e-9 && failed == 0);
    let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
    outcome(
        a && b && c,
        format!(
            "{} Wasserstein r={r_hi}/r={r_lo} = {w_ratio:.1}; {} magnitude (t={}) r={r_hi}/r={r_lo} = {m_ratio:.1}; {} max normalized = {max_norm:.6}",
            tag(a),
            tag(b),
            cfg.scales[0],
            tag(c)
        ),
    )
}

fn scale_sweep() -> Outcome {
    let cfg = StudyConfig::defaults(Study::Tsweep);
    let out = run_study(Study::Tsweep, &cfg, Execution::default()).unwrap();
    let dim = cfg.dims[0];
    let mut ok = true;
    let mut notes = Vec::new();
    for &t in &cfg.scales {
        let curve: Vec<f64> = cfg
            .mu_grid
            .iter()
            .map(|&mu| mean_of(&out, "mag_normalized", &format!("mu={mu};t={t}"), dim))
            .collect();
        let inversions = curve.windows(2).filter(|w| w[1] < w[0]).count();
        let last = *curve.last().unwrap();
        ok &= inversions <= 1 && last > 0.95;
        notes.push(format!("t={t}: {inversions} inv, end {last:.4}"));
    }
    outcome(ok, notes.join("; "))
}

fn generator_toy() -> Outcome {
    let schedule = ScaleSchedule::parse(TOY_SCHEDULE).unwrap();
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..10u64 {
        let data = toy_target(&mut RngState::derive(seed, 1));
        let gen = init_generator(&mut RngState::derive(seed, 2), &TOY_LAYERS).unwrap();
        let cfg = TrainConfig::new(schedule.clone(), TOY_EPOCHS, seed);
        let (trained, log) = train(&gen, &data, &cfg).unwrap();
        let s = sample(&trained, &mut RngState::derive(seed, 3), 4096).unwrap();
        let m = s.mean();
        let off = ((m[0] - TOY_MEAN[0]).powi(2) + (m[1] - TOY_MEAN[1]).powi(2)).sqrt();
        let (first, last) = (log.initial_loss().unwrap(), log.final_loss().unwrap());
        if last <= first / 5.0 && off < 0.5 {
            good += 1;
        }
        notes.push(format!("{:.2}", last / first));
    }
    outcome(
        good >= 8,
        format!("{good}/10 seeds reach loss <= initial/5 and mean within 0.5 (final/initial: {})", notes.join(" ")),
    )
}

fn determinism() -> Outcome {
    let mut mismatched = Vec::new();
    for study in Study::all() {
        let mut cfg = StudyConfig::defaults(study);
        cfg.trials = cfg.trials.min(3);
        if study == Study::Highdim {
            cfg.dims = vec![2, 10, 50];
        }
        if study == Study::Tsweep {
            cfg.dims = vec![20];
            cfg.mu_grid = vec![0.0, 1.0, 3.0];
        }
        let run = |exec| run_study(study, &cfg, exec).unwrap().csv_string().unwrap();
        let first = run(Execution::Parallel);
        if first != run(Execution::Parallel) || first != run(Execution::Sequential) {
            mismatched.push(study.name());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("reruns (parallel, parallel, sequential) byte-identical for all studies; mismatched: {mismatched:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        ("two-point closed form", two_point_closed_form),
        ("cross-polytope counterexample", cross_polytope),
        ("small/large scale limits", scale_limits),
        ("non-negativity and symmetry", nonnegativity_and_symmetry),
        ("duplicate invariance", duplicate_invariance),
        ("triangle inequality on the line", triangle_on_the_line),
        ("boundedness", boundedness),
        ("analytic gradients", gradients),
        ("high-dimensional study", high_dimensional_study),
        ("Huber contamination study", huber_contamination),
        ("scale sweep", scale_sweep),
        ("generator toy task", generator_toy),
        ("determinism", determinism),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {name} [{:.1}s]: {}",
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.pass {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
