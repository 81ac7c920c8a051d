use std::io::Write;
use std::path::{Path, PathBuf};

use magmetric::distance::{
    bound_check, cross_polytope_counterexample, cross_polytope_dense, mag_distance, CrossPolytope, ScaleSchedule,
};
use magmetric::experiments::{run_outlier2d, run_study, ShiftMode, Study, StudyConfig, StudyOutput};
use magmetric::io::{format_float, read_points_file, write_points, write_points_file};
use magmetric::maggn::{init_generator, sample, train, Generator, TrainConfig};
use magmetric::magnitude::{magnitude_function, magnitude_neumann, NeumannEstimate, DEFAULT_SUPPORT_TOL};
use magmetric::{Error, Execution, Result, RngState};
use serde_json::{json, Value};

use crate::{
    Cli, Command, CounterexampleArgs, DistanceArgs, ExperimentArgs, MaggnAction, MagnitudeArgs, SampleArgs,
    StudyName, TrainArgs, DEFAULT_SEED,
};

/// Dense verification is capped here; beyond it the solves get slow.
const DENSE_MAX_DIM: usize = 1000;
const INIT_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;
const CHECKPOINT_FILE: &str = "generator.json";
const LOG_FILE: &str = "train_log.csv";
const SAMPLES_FILE: &str = "samples.csv";

pub fn exit_code(e: &Error) -> u8 {
    if e.is_shape() {
        4
    } else if e.is_numerical() {
        3
    } else {
        2
    }
}

/// Caps the rayon pool at `MAGMETRIC_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MAGMETRIC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("MAGMETRIC_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Magnitude(a) => cmd_magnitude(a, seed.unwrap_or(DEFAULT_SEED)),
        Command::Distance(a) => cmd_distance(a, seed.unwrap_or(DEFAULT_SEED)),
        Command::Counterexample(a) => cmd_counterexample(a, seed.unwrap_or(DEFAULT_SEED)),
        Command::Experiment(a) => cmd_experiment(a, seed),
        Command::Maggn { action } => match action {
            MaggnAction::Train(a) => cmd_train(a, seed.unwrap_or(DEFAULT_SEED)),
            MaggnAction::Sample(a) => cmd_sample(a, seed.unwrap_or(DEFAULT_SEED)),
        },
    }
}

fn f(v: f64) -> String {
    format_float(v)
}

fn print_json(command: &str, seed: u64, params: Value, results: Value) -> Result<()> {
    let doc = json!({"command": command, "seed": seed, "params": params, "results": results});
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn echo_seed(seed: u64) {
    println!("seed: {seed}");
}

fn cmd_magnitude(a: MagnitudeArgs, seed: u64) -> Result<()> {
    if !a.json {
        echo_seed(seed);
    }
    let x = read_points_file(&a.input, a.header)?;
    let results = magnitude_function(&x, &a.t)?;
    let mut first_err = None;
    let mut out = Vec::new();
    for (t, r) in results {
        let neumann = if a.neumann { Some(magnitude_neumann(&x, t)?) } else { None };
        match r {
            Ok(r) => {
                let nonneg = r.is_nonnegative(DEFAULT_SUPPORT_TOL);
                if a.json {
                    let mut v = json!({
                        "t": t,
                        "magnitude": r.magnitude,
                        "residual": r.residual,
                        "nonnegative_weighting": nonneg,
                        "condition_hint": r.condition_hint,
                    });
                    if let Some(n) = neumann {
                        v["neumann"] = neumann_json(&n, r.magnitude);
                    }
                    out.push(v);
                } else {
                    let mut line = format!(
                        "t={} magnitude={} residual={} nonnegative={}",
                        f(t),
                        f(r.magnitude),
                        f(r.residual),
                        nonneg
                    );
                    if let Some(n) = neumann {
                        line.push_str(&format!(
                            " neumann={} gap={} reliable={}",
                            f(n.value),
                            f((n.value - r.magnitude).abs()),
                            n.reliable
                        ));
                    }
                    println!("{line}");
                }
            }
            Err(e) => {
                if a.json {
                    out.push(json!({"t": t, "error": e.to_string()}));
                } else {
                    println!("t={} error=\"{e}\"", f(t));
                }
                first_err.get_or_insert(e);
            }
        }
    }
    if a.json {
        print_json(
            "magnitude",
            seed,
            json!({"input": a.input, "t": a.t, "neumann": a.neumann, "points": x.len(), "dim": x.dim()}),
            Value::Array(out),
        )?;
    }
    first_err.map_or(Ok(()), Err)
}

fn neumann_json(n: &NeumannEstimate, exact: f64) -> Value {
    json!({
        "value": n.value,
        "gap": (n.value - exact).abs(),
        "radius_proxy": n.radius_proxy,
        "reliable": n.reliable,
    })
}

fn cmd_distance(a: DistanceArgs, seed: u64) -> Result<()> {
    if !a.json {
        echo_seed(seed);
    }
    let x = read_points_file(&a.x, a.header)?;
    let y = read_points_file(&a.y, a.header)?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let mut out = Vec::new();
    for &t in &a.t {
        let r = mag_distance(&x, &y, t)?;
        let value = if a.normalized { r.normalized } else { r.distance };
        let bc = if a.bound_check { Some(bound_check(&x, &y, t)?) } else { None };
        if a.json {
            let mut v = serde_json::to_value(&r)?;
            v["value"] = json!(value);
            if let Some(b) = bc {
                v["bound_check"] = serde_json::to_value(b)?;
            }
            out.push(v);
        } else {
            let [nx, ny, nu] = r.nonneg_weightings;
            println!(
                "t={} value={} distance={} normalized={} mag_union={} mag_x={} mag_y={} union_size={} nonnegative_x={} nonnegative_y={} nonnegative_union={}",
                f(t),
                f(value),
                f(r.distance),
                f(r.normalized),
                f(r.mag_union),
                f(r.mag_x),
                f(r.mag_y),
                r.union_size,
                nx,
                ny,
                nu
            );
            if let Some(b) = bc {
                println!(
                    "bound_check t={} applicable={} holds={} distance={} bound={}",
                    f(t),
                    b.applicable,
                    b.holds,
                    f(b.distance),
                    f(b.bound)
                );
            }
        }
    }
    if a.json {
        print_json(
            "distance",
            seed,
            json!({"x": a.x, "y": a.y, "t": a.t, "normalized": a.normalized, "bound_check": a.bound_check}),
            Value::Array(out),
        )?;
    }
    Ok(())
}

fn cross_polytope_json(c: &CrossPolytope) -> Value {
    json!({
        "dim": c.dim,
        "t": c.t,
        "mag_x": c.mag_x,
        "mag_xz": c.mag_xz,
        "gap": c.gap,
        "slack": c.slack,
        "origin_weight": c.origin_weight,
    })
}

fn cmd_counterexample(a: CounterexampleArgs, seed: u64) -> Result<()> {
    if !a.json {
        echo_seed(seed);
    }
    let reduced = cross_polytope_counterexample(a.dim, a.t)?;
    let dense = if a.full_verify {
        if a.dim > DENSE_MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "--full-verify supports dim up to {DENSE_MAX_DIM}"
            )));
        }
        Some(cross_polytope_dense(a.dim, a.t)?)
    } else {
        None
    };
    let gap_diff = dense.as_ref().map(|d| (d.gap - reduced.gap).abs());
    if a.json {
        let mut results = json!({"reduced": cross_polytope_json(&reduced)});
        if let (Some(d), Some(diff)) = (&dense, gap_diff) {
            results["dense"] = cross_polytope_json(d);
            results["gap_difference"] = json!(diff);
        }
        print_json(
            "counterexample",
            seed,
            json!({"dim": a.dim, "t": a.t, "full_verify": a.full_verify}),
            results,
        )?;
    } else {
        println!(
            "dim={} t={} gap={} slack={} mag_x={} mag_xz={} origin_weight={} triangle_violated={}",
            a.dim,
            f(a.t),
            f(reduced.gap),
            f(reduced.slack),
            f(reduced.mag_x),
            f(reduced.mag_xz),
            f(reduced.origin_weight),
            reduced.slack < 0.0
        );
        if let (Some(d), Some(diff)) = (&dense, gap_diff) {
            println!(
                "dense gap={} slack={} gap_difference={}",
                f(d.gap),
                f(d.slack),
                f(diff)
            );
        }
    }
    Ok(())
}

fn study_of(s: StudyName) -> Study {
    match s {
        StudyName::Tsweep => Study::Tsweep,
        StudyName::Highdim => Study::Highdim,
        StudyName::Outlier2d => Study::Outlier2d,
        StudyName::Huber => Study::Huber,
    }
}

/// Defaults, then the config file, then inline flags, then `--seed`.
fn study_config(a: &ExperimentArgs, study: Study, seed: Option<u64>) -> Result<StudyConfig> {
    let mut cfg = match &a.config {
        Some(path) => StudyConfig::from_json_file(study, path)?,
        None => StudyConfig::defaults(study),
    };
    if let Some(v) = &a.dims {
        cfg.dims = v.clone();
    }
    if let Some(v) = a.n_per_set {
        cfg.n_per_set = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = &a.scales {
        cfg.scales = v.clone();
    }
    if let Some(v) = &a.normalized_scales {
        cfg.normalized_scales = v.clone();
    }
    if let Some(v) = &a.mu_grid {
        cfg.mu_grid = v.clone();
    }
    if let Some(v) = &a.epsilons {
        cfg.epsilons = v.clone();
    }
    if let Some(v) = &a.radii {
        cfg.radii = v.clone();
    }
    if let Some(v) = a.n_proj {
        cfg.n_proj = v;
    }
    if let Some(v) = a.shift_norm {
        cfg.shift_mode = ShiftMode::FixedNorm(v);
    }
    if let Some(v) = a.shift_per_coordinate {
        cfg.shift_mode = ShiftMode::PerCoordinate(v);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(out) = &a.out {
        cfg.output_path = Some(PathBuf::from(out));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_experiment(a: ExperimentArgs, seed: Option<u64>) -> Result<()> {
    let study = study_of(a.study);
    let cfg = study_config(&a, study, seed)?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    // Echo before any sampling happens.
    eprintln!("seed: {}", cfg.seed);
    eprintln!("config: {}", serde_json::to_string(&cfg)?);
    let output: StudyOutput = if study == Study::Outlier2d {
        let report = run_outlier2d(&cfg, exec)?;
        eprintln!(
            "ordering holds in {:.0}% of trials (plain), {:.0}% (normalized)",
            100.0 * report.ordering_fraction(),
            100.0 * report.normalized_ordering_fraction()
        );
        report.output
    } else {
        run_study(study, &cfg, exec)?
    };
    let failed = output.rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        eprintln!("warning: {failed} rows could not be computed (NaN with error message)");
    }
    match &a.out {
        Some(path) => {
            let (csv, json) = output.write_files(path)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        None => {
            let stdout = std::io::stdout();
            output.write_csv(stdout.lock())?;
        }
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, seed: u64) -> Result<()> {
    echo_seed(seed);
    let schedule = ScaleSchedule::parse(&a.schedule)?;
    let data = read_points_file(&a.data, a.header)?;
    let mut cfg = TrainConfig::new(schedule, a.epochs, seed);
    cfg.learning_rate = a.lr;
    cfg.batch_real = a.batch_real;
    cfg.batch_gen = a.batch_gen;
    cfg.normalized_loss = !a.sum_scales;
    cfg.validate()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let mut dims = vec![a.z_dim.unwrap_or(data.dim())];
    dims.extend(&a.hidden);
    dims.push(data.dim());
    let gen = init_generator(&mut RngState::derive(seed, INIT_STREAM), &dims)?;
    let (trained, log) = train(&gen, &data, &cfg)?;
    for e in &log.epochs {
        if let Some(msg) = &e.error {
            eprintln!("warning: epoch {} aborted: {msg}", e.epoch);
        }
    }
    let dir = Path::new(&a.out);
    std::fs::create_dir_all(dir)?;
    trained.save_json(dir.join(CHECKPOINT_FILE))?;
    log.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join(LOG_FILE))?))?;
    if let Some(n) = a.samples {
        let s = sample(&trained, &mut RngState::derive(seed, SAMPLE_STREAM), n)?;
        write_points_file(dir.join(SAMPLES_FILE), &s)?;
    }
    println!(
        "epochs={} initial_loss={} final_loss={} checkpoint={}",
        log.epochs.len(),
        log.initial_loss().map_or("NaN".into(), f),
        log.final_loss().map_or("NaN".into(), f),
        dir.join(CHECKPOINT_FILE).display()
    );
    Ok(())
}

fn cmd_sample(a: SampleArgs, seed: u64) -> Result<()> {
    let mut path = PathBuf::from(&a.checkpoint);
    if path.is_dir() {
        path.push(CHECKPOINT_FILE);
    }
    let gen = Generator::load_json(&path)?;
    // Samples go to stdout when --out is absent, so the seed goes to stderr.
    eprintln!("seed: {seed}");
    let s = sample(&gen, &mut RngState::derive(seed, SAMPLE_STREAM), a.n)?;
    match &a.out {
        Some(out) => write_points_file(out, &s)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_points(&mut lock, &s)?;
            lock.flush()?;
        }
    }
    Ok(())
}
