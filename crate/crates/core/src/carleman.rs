//! Auxiliary function `eta` and the Carleman weight families.
//!
//! With `phi(x) = e^{lambda (kappa + eta(x))}` and `E = e^{2 lambda kappa}`:
//!
//! ```text
//! alpha = (E - phi) / (t (T - t)),   xi   = phi / (t (T - t))
//! beta  = (E - phi) / ell(t),        zeta = phi / ell(t)
//! ell(t) = T^2 / 4 on [0, T/2),  t (T - t) on [T/2, T]
//! rho  = e^{s beta_hat} ell^{3/2},  rho0 = e^{s beta_hat / 2},
//! rho1 = rho0 ell^{3/2},            rho2 = e^{s beta_hat / 3}
//! ```
//!
//! `beta_hat(t)` and `beta_check(t)` are the max and min of `beta(., t)` over
//! a uniform scan of `[-1, 1]`. The exponentials overflow `f64` as `t -> T`,
//! so the rho family is also reported through its logarithm.
//!
//! These quantities are diagnostics; no solver consumes them.

use serde::Serialize;

use crate::{Error, Result};

pub const ETA_FLOOR: f64 = 0.1;
pub const SCAN_POINTS: usize = 2001;

/// `log(2 e^lambda - 1) / lambda`.
pub fn kappa_threshold(lambda: f64) -> f64 {
    (2.0 * lambda.exp() - 1.0).ln() / lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlemanParams {
    pub lambda: f64,
    pub s: f64,
    pub kappa: f64,
    pub omega_prime: (f64, f64),
    pub final_time: f64,
}

impl CarlemanParams {
    pub fn new(lambda: f64, s: f64, kappa: f64, omega_prime: (f64, f64), final_time: f64) -> Result<Self> {
        if !(lambda >= 1.0 && s >= 1.0 && kappa > 1.0) {
            return Err(Error::Domain(format!("need lambda >= 1, s >= 1, kappa > 1 (got {lambda}, {s}, {kappa})")));
        }
        let (a, b) = omega_prime;
        if !(-1.0 < a && a < b && b < 0.0) {
            return Err(Error::Domain(format!("omega' = ({a}, {b}) is not inside (-1, 0)")));
        }
        if !(final_time > 0.0) {
            return Err(Error::Domain(format!("final time {final_time} must be positive")));
        }
        Ok(Self { lambda, s, kappa, omega_prime, final_time })
    }

    /// `s = lambda = 2`, `kappa = max(1.01, threshold + 0.2)`.
    pub fn with_defaults(omega_prime: (f64, f64), final_time: f64) -> Result<Self> {
        let lambda = 2.0;
        Self::new(lambda, 2.0, (kappa_threshold(lambda) + 0.2).max(1.01), omega_prime, final_time)
    }

    /// Errors unless `omega'` sits strictly inside `omega`.
    pub fn check_inside(&self, omega: (f64, f64)) -> Result<()> {
        let (a, b) = self.omega_prime;
        if a > omega.0 && b < omega.1 {
            Ok(())
        } else {
            Err(Error::Domain(format!("omega' = ({a}, {b}) is not strictly inside ({}, {})", omega.0, omega.1)))
        }
    }
}

/// Smooth positive profile on `[-1, 1]` with `eta(+-1) = min eta`,
/// `max eta = 1` attained at a single interior point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EtaFunction {
    /// `c + (1 - c)(1 - m(x)^2)` with the Moebius map
    /// `m(x) = (x - x*) / (1 - x* x)`, which sends `-1, x*, 1` to `-1, 0, 1`.
    /// Its derivative vanishes only at `x*`.
    Moebius { peak: f64, floor: f64 },
    /// `c + (1 - c) B(x) / B(x*)` with `B = (1 + x)^p (1 - x)^q`. Its
    /// derivative also vanishes at both endpoints.
    Power { p: u32, q: u32, floor: f64 },
}

/// Builds the Moebius profile peaking at the centre of `omega'`.
pub fn build_eta(omega_prime: (f64, f64)) -> Result<EtaFunction> {
    let (a, b) = omega_prime;
    if !(-1.0 < a && a < b && b < 0.0) {
        return Err(Error::Construction(format!("omega' = ({a}, {b}) is not inside (-1, 0)")));
    }
    Ok(EtaFunction::Moebius { peak: 0.5 * (a + b), floor: ETA_FLOOR })
}

/// Power-family profile with `p, q in [3, 40]` whose peak `(p - q)/(p + q)`
/// is closest to the centre of `omega'` among those inside it.
pub fn build_power_eta(omega_prime: (f64, f64)) -> Result<EtaFunction> {
    let (a, b) = omega_prime;
    let centre = 0.5 * (a + b);
    let mut best: Option<(u32, u32, f64)> = None;
    for p in 3..=40u32 {
        for q in 3..=40u32 {
            let peak = (p as f64 - q as f64) / (p + q) as f64;
            if peak <= a || peak >= b {
                continue;
            }
            let dist = (peak - centre).abs();
            if best.is_none_or(|(_, _, d)| dist < d - 1e-15) {
                best = Some((p, q, dist));
            }
        }
    }
    best.map(|(p, q, _)| EtaFunction::Power { p, q, floor: ETA_FLOOR })
        .ok_or_else(|| Error::Construction(format!("no exponents place the peak inside ({a}, {b})")))
}

impl EtaFunction {
    pub fn peak(&self) -> f64 {
        match *self {
            Self::Moebius { peak, .. } => peak,
            Self::Power { p, q, .. } => (p as f64 - q as f64) / (p + q) as f64,
        }
    }

    pub fn floor(&self) -> f64 {
        match *self {
            Self::Moebius { floor, .. } | Self::Power { floor, .. } => floor,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Moebius { peak, floor } => {
                let m = (x - peak) / (1.0 - peak * x);
                floor + (1.0 - floor) * (1.0 - m * m)
            }
            Self::Power { p, q, floor } => {
                let bump = |y: f64| (1.0 + y).powi(p as i32) * (1.0 - y).powi(q as i32);
                floor + (1.0 - floor) * bump(x) / bump(self.peak())
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Moebius { peak, floor } => {
                let denom = 1.0 - peak * x;
                let m = (x - peak) / denom;
                let dm = (1.0 - peak * peak) / (denom * denom);
                -2.0 * (1.0 - floor) * m * dm
            }
            Self::Power { p, q, floor } => {
                let (pf, qf) = (p as f64, q as f64);
                let peak = self.peak();
                let scale = (1.0 + peak).powi(p as i32) * (1.0 - peak).powi(q as i32);
                let d = (1.0 + x).powi(p as i32 - 1) * (1.0 - x).powi(q as i32 - 1) * (pf * (1.0 - x) - qf * (1.0 + x));
                (1.0 - floor) * d / scale
            }
        }
    }
}

/// `T^2/4` before `T/2`, `t (T - t)` after.
pub fn ell(t: f64, final_time: f64) -> f64 {
    if t < 0.5 * final_time {
        0.25 * final_time * final_time
    } else {
        t * (final_time - t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightValues {
    pub alpha: f64,
    pub xi: f64,
    pub beta: f64,
    pub zeta: f64,
    pub ell: f64,
    pub beta_hat: f64,
    pub beta_check: f64,
    pub rho: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub ln_rho: f64,
    pub ln_rho0: f64,
    pub ln_rho1: f64,
    pub ln_rho2: f64,
}

fn scan_x(i: usize) -> f64 {
    if i == SCAN_POINTS - 1 {
        1.0
    } else {
        -1.0 + 2.0 * i as f64 / (SCAN_POINTS - 1) as f64
    }
}

/// Max and min of `E - phi(x)` over the scan grid.
fn numerator_range(params: &CarlemanParams, eta: &EtaFunction) -> (f64, f64) {
    let e_top = (2.0 * params.lambda * params.kappa).exp();
    (0..SCAN_POINTS).fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), i| {
        let v = e_top - (params.lambda * (params.kappa + eta.value(scan_x(i)))).exp();
        (hi.max(v), lo.min(v))
    })
}

/// Index on the scan grid where `beta(., t)` is largest, i.e. where `eta`
/// is smallest. It does not depend on `t` or on the weight parameters.
pub fn beta_argmax(eta: &EtaFunction) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..SCAN_POINTS {
        let v = -eta.value(scan_x(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn eval_weight_functions(params: &CarlemanParams, eta: &EtaFunction, x: f64, t: f64) -> Result<WeightValues> {
    let big_t = params.final_time;
    if !(t > 0.0 && t < big_t) {
        return Err(Error::Domain(format!("t = {t} outside (0, {big_t})")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
    }
    let phi = (params.lambda * (params.kappa + eta.value(x))).exp();
    let e_top = (2.0 * params.lambda * params.kappa).exp();
    let bubble = t * (big_t - t);
    let l = ell(t, big_t);
    let (hi, lo) = numerator_range(params, eta);
    let (beta_hat, beta_check) = (hi / l, lo / l);
    let ln_l32 = 1.5 * l.ln();
    let ln_rho = params.s * beta_hat + ln_l32;
    let ln_rho0 = 0.5 * params.s * beta_hat;
    let ln_rho1 = ln_rho0 + ln_l32;
    let ln_rho2 = params.s * beta_hat / 3.0;
    Ok(WeightValues {
        alpha: (e_top - phi) / bubble,
        xi: phi / bubble,
        beta: (e_top - phi) / l,
        zeta: phi / l,
        ell: l,
        beta_hat,
        beta_check,
        rho: ln_rho.exp(),
        rho0: ln_rho0.exp(),
        rho1: ln_rho1.exp(),
        rho2: ln_rho2.exp(),
        ln_rho,
        ln_rho0,
        ln_rho1,
        ln_rho2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaReport {
    pub threshold: f64,
    pub satisfied: bool,
    /// Minimum over the samples of `2 beta_check(t) - beta_hat(t)`.
    pub min_gap: f64,
}

pub fn check_kappa_condition(
    lambda: f64,
    kappa: f64,
    eta: &EtaFunction,
    final_time: f64,
    t_samples: &[f64],
) -> KappaReport {
    let threshold = kappa_threshold(lambda);
    let params = CarlemanParams { lambda, s: 1.0, kappa, omega_prime: (-0.5, -0.5), final_time };
    let (hi, lo) = numerator_range(&params, eta);
    let min_gap = t_samples.iter().map(|&t| (2.0 * lo - hi) / ell(t, final_time)).fold(f64::INFINITY, f64::min);
    KappaReport { threshold, satisfied: kappa > threshold, min_gap }
}
