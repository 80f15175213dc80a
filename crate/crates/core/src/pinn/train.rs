use serde::{Deserialize, Serialize};

use super::loss::{CONTROL, SCALAR, STATE};
use super::{
    assemble_loss, loss_and_gradient, sample_collocation, CollocationCounts, CollocationSet, ControlProblem,
    LossBreakdown, LossWeights,
};
use crate::exec::ExecPolicy;
use crate::neural::{AdamConfig, AdamState, Mlp};
use crate::{Error, Result};

/// Hidden layer widths shared by the three networks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShapes {
    pub hidden: Vec<usize>,
}

impl Default for NetworkShapes {
    fn default() -> Self {
        Self { hidden: vec![50, 50] }
    }
}

impl NetworkShapes {
    fn sizes(&self, inputs: usize) -> Vec<usize> {
        let mut s = vec![inputs];
        s.extend(&self.hidden);
        s.push(1);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Networks {
    pub state: Mlp,
    pub scalar: Mlp,
    pub control: Mlp,
}

impl Networks {
    /// Glorot initialisation; the three networks use streams 0, 1, 2.
    pub fn init(shapes: &NetworkShapes, problem: &ControlProblem, seed: u64) -> Result<Self> {
        Ok(Self {
            state: Mlp::glorot(&shapes.sizes(2), seed, 0)?,
            scalar: Mlp::glorot(&shapes.sizes(1), seed, 1)?,
            control: Mlp::glorot(&shapes.sizes(problem.control_inputs()), seed, 2)?,
        })
    }

    pub fn to_vec(&self) -> Vec<Mlp> {
        vec![self.state.clone(), self.scalar.clone(), self.control.clone()]
    }

    pub fn from_vec(mut nets: Vec<Mlp>) -> Result<Self> {
        if nets.len() != 3 {
            return Err(Error::Shape(format!("expected 3 networks, got {}", nets.len())));
        }
        let control = nets.pop().expect("len 3");
        let scalar = nets.pop().expect("len 3");
        let state = nets.pop().expect("len 3");
        Ok(Self { state, scalar, control })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub shapes: NetworkShapes,
    pub adam: AdamConfig,
    pub weights: LossWeights,
    pub train_counts: CollocationCounts,
    pub test_counts: CollocationCounts,
    pub policy: ExecPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20_000,
            seed: 2024,
            shapes: NetworkShapes::default(),
            adam: AdamConfig::default(),
            weights: LossWeights::default(),
            train_counts: CollocationCounts::uniform(100),
            test_counts: CollocationCounts::uniform(10),
            policy: ExecPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub nets: Networks,
    /// Loss at the start of each epoch, before that epoch's update.
    pub history: Vec<LossBreakdown>,
    pub train: LossBreakdown,
    pub test: LossBreakdown,
    pub generalization_error: f64,
    pub train_set: CollocationSet,
    pub test_set: CollocationSet,
}

/// `|total(train) - total(test)|`.
pub fn generalization_error(
    nets: &Networks,
    train_set: &CollocationSet,
    test_set: &CollocationSet,
    weights: &LossWeights,
    problem: &ControlProblem,
    policy: ExecPolicy,
) -> Result<f64> {
    let nets = nets.to_vec();
    let train = assemble_loss(&nets, train_set, weights, problem, policy)?;
    let test = assemble_loss(&nets, test_set, weights, problem, policy)?;
    Ok((train.total - test.total).abs())
}

/// Full-batch ADAM on a fixed collocation set.
///
/// Train and test points come from streams 0 and 1 of the configured seed.
/// `progress` is called after every epoch with the epoch index and the loss
/// recorded for it.
pub fn train(
    problem: &ControlProblem,
    config: &TrainConfig,
    mut progress: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainReport> {
    problem.validate()?;
    config.weights.validate()?;
    let (domain, big_t) = (problem.domain(), problem.final_time());
    let train_set = sample_collocation(domain, big_t, config.train_counts, config.seed, 0)?;
    let test_set = sample_collocation(domain, big_t, config.test_counts, config.seed, 1)?;
    let mut nets = Networks::init(&config.shapes, problem, config.seed)?.to_vec();
    let mut optimizers: Vec<AdamState> = nets.iter().map(|n| AdamState::new(n, config.adam)).collect();

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (breakdown, grads) = loss_and_gradient(&nets, &train_set, &config.weights, problem, config.policy)
            .map_err(|e| Error::NonFinite(format!("epoch {epoch}: {e}")))?;
        if !breakdown.total.is_finite() {
            return Err(Error::NonFinite(format!("loss at epoch {epoch}")));
        }
        for i in [STATE, SCALAR, CONTROL] {
            optimizers[i].step(&mut nets[i], &grads[i])?;
        }
        progress(epoch, &breakdown);
        history.push(breakdown);
    }

    let train = assemble_loss(&nets, &train_set, &config.weights, problem, config.policy)?;
    let test = assemble_loss(&nets, &test_set, &config.weights, problem, config.policy)?;
    Ok(TrainReport {
        nets: Networks::from_vec(nets)?,
        history,
        train,
        test,
        generalization_error: (train.total - test.total).abs(),
        train_set,
        test_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinn::{FreeBoundarySpec, LinearizedSpec};

    fn small(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            shapes: NetworkShapes { hidden: vec![8, 8] },
            train_counts: CollocationCounts::uniform(12),
            test_counts: CollocationCounts::uniform(5),
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let p = ControlProblem::Linearized(LinearizedSpec::default());
        let cfg = small(0);
        let r = train(&p, &cfg, |_, _| {}).unwrap();
        assert_eq!(r.nets, Networks::init(&cfg.shapes, &p, cfg.seed).unwrap());
        assert!(r.history.is_empty());
    }

    #[test]
    fn loss_decreases_on_both_forms() {
        for p in [
            ControlProblem::Linearized(LinearizedSpec::default()),
            ControlProblem::FreeBoundary(FreeBoundarySpec::default()),
        ] {
            let r = train(&p, &small(300), |_, _| {}).unwrap();
            assert_eq!(r.history.len(), 300);
            assert!(r.train.total < r.history[0].total, "{:?}", p);
            let ge =
                generalization_error(&r.nets, &r.train_set, &r.test_set, &small(0).weights, &p, ExecPolicy::Sequential)
                    .unwrap();
            assert!((ge - r.generalization_error).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_sets_have_zero_generalization_error() {
        let p = ControlProblem::Linearized(LinearizedSpec::default());
        let cfg = small(0);
        let nets = Networks::init(&cfg.shapes, &p, 1).unwrap();
        let set = sample_collocation((-1.0, 1.0), 1.0, cfg.train_counts, 1, 0).unwrap();
        assert_eq!(generalization_error(&nets, &set, &set, &cfg.weights, &p, cfg.policy).unwrap(), 0.0);
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let p = ControlProblem::FreeBoundary(FreeBoundarySpec::default());
        let mut cfg = small(5);
        cfg.train_counts = CollocationCounts::uniform(30);
        cfg.policy = ExecPolicy::Sequential;
        let a = train(&p, &cfg, |_, _| {}).unwrap();
        cfg.policy = ExecPolicy::Parallel;
        let b = train(&p, &cfg, |_, _| {}).unwrap();
        assert_eq!(a.nets, b.nets);
        assert_eq!(a.history, b.history);
    }
}
