mod common;

use common::{gaussian, rel_err};
use magmetric::distance::ScaleSchedule;
use magmetric::maggn::{
    init_generator, loss_and_param_gradient, toy_target, train, TrainConfig, TOY_EPOCHS, TOY_LAYERS, TOY_SCHEDULE,
};
use magmetric::{Execution, RngState};

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let schedule = ScaleSchedule::parse("0.5@1,1.5@2,3@3").unwrap();
    for (seed, dims) in [(1u64, vec![2, 3, 2]), (2, vec![3, 4, 4, 2]), (3, vec![1, 2, 1])] {
        let gen = init_generator(&mut RngState::new(seed), &dims).unwrap();
        let data_dim = *dims.last().unwrap();
        let real = gaussian(&mut RngState::derive(seed, 1), 7, data_dim, 1.0);
        let z = gaussian(&mut RngState::derive(seed, 2), 6, dims[0], 1.0);
        for (epoch, normalized_loss) in [(1, true), (3, true), (3, false)] {
            let (_, g) =
                loss_and_param_gradient(&gen, &real, &z, &schedule, epoch, normalized_loss, Execution::Sequential)
                    .unwrap();
            let p0 = gen.params();
            let h = 1e-5;
            let loss = |p: &[f64]| {
                let mut gg = gen.clone();
                gg.set_params(p).unwrap();
                loss_and_param_gradient(&gg, &real, &z, &schedule, epoch, normalized_loss, Execution::Sequential)
                    .unwrap()
                    .0
            };
            let fd: Vec<f64> = (0..p0.len())
                .map(|k| {
                    let mut up = p0.clone();
                    up[k] += h;
                    let mut down = p0.clone();
                    down[k] -= h;
                    (loss(&up) - loss(&down)) / (2.0 * h)
                })
                .collect();
            let e = rel_err(&g, &fd);
            assert!(e < 1e-4, "dims {dims:?} epoch {epoch}: rel err {e}");
        }
    }
}

#[test]
fn parallel_and_sequential_scale_terms_agree() {
    let schedule = ScaleSchedule::parse("0.5@1,1.5@2,3@3").unwrap();
    let gen = init_generator(&mut RngState::new(4), &[2, 5, 2]).unwrap();
    let real = gaussian(&mut RngState::new(5), 20, 2, 1.0);
    let z = gaussian(&mut RngState::new(6), 20, 2, 1.0);
    let a = loss_and_param_gradient(&gen, &real, &z, &schedule, 3, true, Execution::Sequential).unwrap();
    let b = loss_and_param_gradient(&gen, &real, &z, &schedule, 3, true, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

/// Means over consecutive full 50-epoch windows inside each schedule phase should not
/// rise; a new scale joining the loss starts a new phase.
#[test]
fn toy_loss_decreases_within_phases() {
    let schedule = ScaleSchedule::parse(TOY_SCHEDULE).unwrap();
    let mut good = 0;
    for seed in 0..10u64 {
        let data = toy_target(&mut RngState::derive(seed, 1));
        let gen = init_generator(&mut RngState::derive(seed, 2), &TOY_LAYERS).unwrap();
        let cfg = TrainConfig::new(schedule.clone(), TOY_EPOCHS, seed);
        let (_, log) = train(&gen, &data, &cfg).unwrap();
        let counts: Vec<usize> = log.epochs.iter().map(|e| e.active_scales).collect();
        assert!(counts.windows(2).all(|w| w[1] >= w[0]));
        let mut ok = true;
        let mut start = 0;
        while start < log.epochs.len() {
            let phase = counts[start];
            let end = counts.iter().rposition(|&c| c == phase).unwrap() + 1;
            let means: Vec<f64> = log.epochs[start..end]
                .chunks_exact(50)
                .map(|c| c.iter().map(|e| e.loss).sum::<f64>() / 50.0)
                .collect();
            ok &= means.windows(2).all(|w| w[1] <= w[0]);
            start = end;
        }
        good += ok as usize;
    }
    assert!(good >= 8, "loss non-increasing within phases on {good}/10 seeds");
}
