use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sizes of the five point families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollocationCounts {
    /// Spatial draws of the interior product set.
    pub n_x: usize,
    /// Time draws of the interior product set, reused for the ODE set.
    pub n_t: usize,
    pub n_boundary: usize,
    pub n_initial: usize,
    pub n_terminal: usize,
}

impl CollocationCounts {
    pub const fn uniform(n: usize) -> Self {
        Self { n_x: n, n_t: n, n_boundary: n, n_initial: n, n_terminal: n }
    }
}

/// Random quadrature nodes for one loss evaluation.
///
/// Interior points are the product `x_draws x t_draws`, enumerated with the
/// spatial index running fastest: point `p` is `(x_draws[p % n_x],
/// t_draws[p / n_x])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub domain: (f64, f64),
    pub final_time: f64,
    pub x_draws: Vec<f64>,
    pub t_draws: Vec<f64>,
    pub boundary_t: Vec<f64>,
    pub initial_x: Vec<f64>,
    pub terminal_x: Vec<f64>,
    pub seed: u64,
}

impl CollocationSet {
    pub fn interior_len(&self) -> usize {
        self.x_draws.len() * self.t_draws.len()
    }

    /// `(x, t, time index)` of interior point `p`.
    pub fn interior_point(&self, p: usize) -> (f64, f64, usize) {
        let n_x = self.x_draws.len();
        let j = p / n_x;
        (self.x_draws[p % n_x], self.t_draws[j], j)
    }

    pub fn domain_length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }
}

/// Draws a collocation set uniformly from `domain x [0, final_time]`.
///
/// `stream` selects an independent ChaCha8 stream so that train and test
/// sets built from the same seed differ.
pub fn sample_collocation(
    domain: (f64, f64),
    final_time: f64,
    counts: CollocationCounts,
    seed: u64,
    stream: u64,
) -> Result<CollocationSet> {
    let CollocationCounts { n_x, n_t, n_boundary, n_initial, n_terminal } = counts;
    if [n_x, n_t, n_boundary, n_initial, n_terminal].contains(&0) {
        return Err(Error::Config(format!("collocation counts must be positive: {counts:?}")));
    }
    if !(domain.0 < domain.1 && final_time > 0.0) {
        return Err(Error::Config(format!("bad sampling region {domain:?} x [0, {final_time}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut draw = |lo: f64, hi: f64, n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..=hi)).collect() };
    let x_draws = draw(domain.0, domain.1, n_x);
    let t_draws = draw(0.0, final_time, n_t);
    let boundary_t = draw(0.0, final_time, n_boundary);
    let initial_x = draw(domain.0, domain.1, n_initial);
    let terminal_x = draw(domain.0, domain.1, n_terminal);
    Ok(CollocationSet { domain, final_time, x_draws, t_draws, boundary_t, initial_x, terminal_x, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_scale_count() {
        let set = sample_collocation((-1.0, 1.0), 1.0, CollocationCounts::uniform(1000), 1, 0).unwrap();
        assert_eq!(set.interior_len(), 1_000_000);
        assert_eq!(set.boundary_t.len(), 1000);
    }

    #[test]
    fn enumeration_is_space_fastest() {
        let set = sample_collocation((0.0, 1.0), 1.0, CollocationCounts::uniform(3), 1, 0).unwrap();
        assert_eq!(set.interior_point(4), (set.x_draws[1], set.t_draws[1], 1));
    }

    #[test]
    fn determinism_and_streams() {
        let c = CollocationCounts::uniform(5);
        let a = sample_collocation((-1.0, 1.0), 1.0, c, 42, 0).unwrap();
        assert_eq!(a, sample_collocation((-1.0, 1.0), 1.0, c, 42, 0).unwrap());
        assert_ne!(a.x_draws[0], sample_collocation((-1.0, 1.0), 1.0, c, 43, 0).unwrap().x_draws[0]);
        assert_ne!(a.x_draws[0], sample_collocation((-1.0, 1.0), 1.0, c, 42, 1).unwrap().x_draws[0]);
    }

    #[test]
    fn zero_count_rejected() {
        let c = CollocationCounts { n_boundary: 0, ..CollocationCounts::uniform(4) };
        assert!(sample_collocation((-1.0, 1.0), 1.0, c, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn points_inside_region(seed in any::<u64>(), t_end in 0.1..5.0f64) {
            let s = sample_collocation((-1.0, 1.0), t_end, CollocationCounts::uniform(20), seed, 0).unwrap();
            let xs = s.x_draws.iter().chain(&s.initial_x).chain(&s.terminal_x);
            prop_assert!(xs.into_iter().all(|x| (-1.0..=1.0).contains(x)));
            let ts = s.t_draws.iter().chain(&s.boundary_t);
            prop_assert!(ts.into_iter().all(|t| (0.0..=t_end).contains(t)));
        }
    }
}
