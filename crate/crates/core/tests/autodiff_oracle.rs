use fisher_stefan::neural::{finite_difference_gradient, input_derivative_check, param_gradient, Mlp};
use fisher_stefan::pinn::{
    sample_collocation, CollocationCounts, ControlProblem, FreeBoundarySpec, LinearizedSpec, LossWeights, PinnObjective,
};
use fisher_stefan::ExecPolicy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_net(sizes: &[usize], seed: u64) -> Mlp {
    let mut net = Mlp::glorot(sizes, seed, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for b in &mut net.biases {
        b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    net
}

#[test]
fn input_derivatives_of_random_networks_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut worst_first, mut worst_second) = (0.0_f64, 0.0_f64);
    for seed in 0..100 {
        let net = random_net(&[2, 50, 50, 1], seed);
        let point = [rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0)];
        let c = input_derivative_check(&net, &point, 1e-6).unwrap();
        worst_first = c.first.iter().fold(worst_first, |m, &e| m.max(e));
        worst_second = worst_second.max(c.second);
    }
    assert!(worst_first <= 1e-6, "first derivatives: {worst_first:e}");
    assert!(worst_second <= 1e-5, "second derivative: {worst_second:e}");
}

fn relative_gradient_error(problem: ControlProblem, seed: u64) -> f64 {
    let (d_state, d_control) = (2, problem.control_inputs());
    let nets = vec![
        random_net(&[d_state, 50, 50, 1], seed),
        random_net(&[1, 50, 50, 1], seed + 1),
        random_net(&[d_control, 50, 50, 1], seed + 2),
    ];
    let counts = CollocationCounts { n_x: 5, n_t: 2, n_boundary: 10, n_initial: 10, n_terminal: 10 };
    let colloc = sample_collocation(problem.domain(), problem.final_time(), counts, seed, 0).unwrap();
    let obj = PinnObjective { colloc, weights: LossWeights::default(), problem, policy: ExecPolicy::Sequential };
    let (_, analytic) = param_gradient(&obj, &nets).unwrap();
    let fd = finite_difference_gradient(&obj, &nets, 1e-5).unwrap();
    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, f) in analytic.iter().zip(&fd) {
        for (x, y) in a.flat().iter().zip(f.flat()) {
            diff += (x - y) * (x - y);
            norm += y * y;
        }
    }
    (diff / norm).sqrt()
}

#[test]
fn loss_gradient_matches_differences_on_ten_points() {
    let e = relative_gradient_error(ControlProblem::Linearized(LinearizedSpec::default()), 3);
    assert!(e <= 1e-5, "linearized form: {e:e}");
    let e = relative_gradient_error(ControlProblem::FreeBoundary(FreeBoundarySpec::default()), 4);
    assert!(e <= 1e-5, "free-boundary form: {e:e}");
}
