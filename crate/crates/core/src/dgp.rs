//! Simulated dataset generators: chaotic logistic map, Mackey-Glass delay
//! equation, and a two-regime SETAR process.
//!
//! Series `i` draws from the counter stream keyed by `derive_key(seed, i)`.

use serde::{Deserialize, Serialize};

use crate::data::SeriesCollection;
use crate::error::{Result, SetarError};
use crate::rng::{derive_key, CounterRng};

const DIVERGENCE_BOUND: f64 = 1e6;
/// Noisy logistic values are clipped into `[CLIP, 1 - CLIP]`.
const CLIP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub r: f64,
    pub noise_sd: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { r: 4.0, noise_sd: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassParams {
    pub beta: f64,
    pub gamma: f64,
    pub n_exp: f64,
    pub tau: f64,
    /// Integration step; must divide `tau` and `sample_interval`.
    pub dt: f64,
    /// Time discarded before the first sample.
    pub warmup: f64,
    pub sample_interval: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self { beta: 0.2, gamma: 0.1, n_exp: 10.0, tau: 17.0, dt: 0.1, warmup: 500.0, sample_interval: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setar2Params {
    /// Intercept then lag coefficients for the regime `y[t-d] < threshold`.
    pub low: Vec<f64>,
    /// Intercept then lag coefficients for the regime `y[t-d] >= threshold`.
    pub high: Vec<f64>,
    /// Delay `d` of the threshold variable, 1-based.
    pub threshold_lag: usize,
    pub threshold: f64,
    pub noise_sd: f64,
    pub burn_in: usize,
}

impl Default for Setar2Params {
    fn default() -> Self {
        Self {
            low: vec![0.25, 0.8, -0.1],
            high: vec![0.75, -0.5, 0.0],
            threshold_lag: 1,
            threshold: 0.5,
            noise_sd: 0.05,
            burn_in: 100,
        }
    }
}

impl Setar2Params {
    pub fn order(&self) -> usize {
        self.low.len().max(self.high.len()).saturating_sub(1).max(self.threshold_lag)
    }

    fn check(&self) -> Result<()> {
        if self.low.is_empty() || self.high.is_empty() || self.threshold_lag == 0 {
            return Err(SetarError::InvalidConfig("SETAR coefficients need an intercept and a threshold lag >= 1".into()));
        }
        Ok(())
    }

    /// One noiseless step from `window` (`window[0]` is the most recent value).
    pub fn step(&self, window: &[f64]) -> f64 {
        let coefs = if window[self.threshold_lag - 1] < self.threshold { &self.low } else { &self.high };
        coefs[0] + coefs[1..].iter().zip(window).map(|(c, y)| c * y).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DgpKind {
    ChaoticLogistic(LogisticParams),
    MackeyGlass(MackeyGlassParams),
    Setar2(Setar2Params),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub kind: DgpKind,
    pub n_series: usize,
    pub length: usize,
    pub seed: u64,
}

impl DgpConfig {
    pub fn chaotic_logistic(n_series: usize, length: usize, seed: u64) -> Self {
        Self { kind: DgpKind::ChaoticLogistic(LogisticParams::default()), n_series, length, seed }
    }

    pub fn mackey_glass(n_series: usize, length: usize, seed: u64) -> Self {
        Self { kind: DgpKind::MackeyGlass(MackeyGlassParams::default()), n_series, length, seed }
    }

    pub fn setar2(n_series: usize, length: usize, seed: u64) -> Self {
        Self { kind: DgpKind::Setar2(Setar2Params::default()), n_series, length, seed }
    }
}

/// Generate the collection described by `config`.
pub fn generate(config: &DgpConfig) -> Result<SeriesCollection> {
    if config.length < 2 {
        return Err(SetarError::InvalidConfig("series length must be at least 2".into()));
    }
    let series = (0..config.n_series)
        .map(|i| {
            let mut rng = CounterRng::new(derive_key(config.seed, i as u64));
            let values = match &config.kind {
                DgpKind::ChaoticLogistic(p) => logistic_series(p, config.length, &mut rng),
                DgpKind::MackeyGlass(p) => {
                    let h0 = 0.5 + rng.next_f64();
                    mackey_glass_path(p, h0, config.length)
                }
                DgpKind::Setar2(p) => setar2_series(p, config.length, &mut rng),
            }
            .map_err(|e| match e {
                SetarError::DivergedSeries(_) => SetarError::DivergedSeries(i),
                other => other,
            })?;
            if values.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
                return Err(SetarError::DivergedSeries(i));
            }
            Ok((format!("T{}", i + 1), values))
        })
        .collect::<Result<Vec<_>>>()?;
    SeriesCollection::from_values(series)
}

pub fn gen_chaotic_logistic(n_series: usize, length: usize, seed: u64, params: LogisticParams) -> Result<SeriesCollection> {
    generate(&DgpConfig { kind: DgpKind::ChaoticLogistic(params), n_series, length, seed })
}

pub fn gen_mackey_glass(n_series: usize, length: usize, seed: u64, params: MackeyGlassParams) -> Result<SeriesCollection> {
    generate(&DgpConfig { kind: DgpKind::MackeyGlass(params), n_series, length, seed })
}

pub fn gen_setar2(n_series: usize, length: usize, seed: u64, params: Setar2Params) -> Result<SeriesCollection> {
    generate(&DgpConfig { kind: DgpKind::Setar2(params), n_series, length, seed })
}

/// Noiseless orbit `x[t+1] = r x[t] (1 - x[t])` starting at `x0`.
pub fn logistic_orbit(x0: f64, r: f64, length: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(length);
    let mut x = x0;
    for _ in 0..length {
        out.push(x);
        x = r * x * (1.0 - x);
    }
    out
}

fn logistic_series(p: &LogisticParams, length: usize, rng: &mut CounterRng) -> Result<Vec<f64>> {
    if !(p.r > 0.0 && p.r <= 4.0) {
        return Err(SetarError::InvalidConfig(format!("logistic r must lie in (0, 4], got {}", p.r)));
    }
    // Start in [0.01, 0.99) and never exactly at the 0.5 -> 1 -> 0 trap.
    let mut x = 0.01 + 0.98 * rng.next_f64();
    if x == 0.5 {
        x = 0.5 + 1e-7;
    }
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        out.push(x);
        x = p.r * x * (1.0 - x);
        if p.noise_sd > 0.0 {
            x = (x + p.noise_sd * rng.standard_normal()).clamp(CLIP, 1.0 - CLIP);
        }
    }
    Ok(out)
}

fn steps_for(span: f64, dt: f64, what: &str) -> Result<usize> {
    let k = (span / dt).round();
    if k < 1.0 || ((k * dt) - span).abs() > 1e-9 * span.max(1.0) {
        return Err(SetarError::InvalidConfig(format!("dt = {dt} must divide the {what} ({span})")));
    }
    Ok(k as usize)
}

/// Mackey-Glass path sampled every `sample_interval` after the warmup.
///
/// Classical fourth-order Runge-Kutta with constant history `h0` for
/// `t <= 0`. The delayed term at half steps comes from cubic Hermite
/// interpolation of the stored solution and its derivative.
pub fn mackey_glass_path(p: &MackeyGlassParams, h0: f64, n_samples: usize) -> Result<Vec<f64>> {
    if !(p.tau >= 1.0) || !(p.dt > 0.0) {
        return Err(SetarError::InvalidConfig("Mackey-Glass needs tau >= 1 and dt > 0".into()));
    }
    let delay = steps_for(p.tau, p.dt, "delay")? as isize;
    let every = steps_for(p.sample_interval, p.dt, "sample interval")?;
    let warmup = if p.warmup > 0.0 { steps_for(p.warmup, p.dt, "warmup")? } else { 0 };
    let total = warmup + every * n_samples.saturating_sub(1);

    let rhs = |x: f64, xd: f64| p.beta * xd / (1.0 + xd.powf(p.n_exp)) - p.gamma * x;
    let mut x = Vec::with_capacity(total + 1);
    let mut dx = Vec::with_capacity(total + 1);
    x.push(h0);
    dx.push(rhs(h0, h0));
    let hist = |x: &[f64], i: isize| if i <= 0 { h0 } else { x[i as usize] };
    // History derivative is zero for t <= 0.
    let dhist = |dx: &[f64], i: isize| if i <= 0 { 0.0 } else { dx[i as usize] };
    let dt = p.dt;

    for k in 0..total {
        let j = k as isize - delay;
        let xd0 = hist(&x, j);
        let xd2 = hist(&x, j + 1);
        let xd1 = if j < 0 {
            h0
        } else {
            0.5 * (xd0 + xd2) + dt / 8.0 * (dhist(&dx, j) - dhist(&dx, j + 1))
        };
        let xk = x[k];
        let k1 = rhs(xk, xd0);
        let k2 = rhs(xk + 0.5 * dt * k1, xd1);
        let k3 = rhs(xk + 0.5 * dt * k2, xd1);
        let k4 = rhs(xk + dt * k3, xd2);
        let next = xk + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() || next.abs() > DIVERGENCE_BOUND {
            return Err(SetarError::DivergedSeries(0));
        }
        x.push(next);
        dx.push(rhs(next, hist(&x, k as isize + 1 - delay)));
    }
    Ok((0..n_samples).map(|s| x[warmup + s * every]).collect())
}

/// Deterministic SETAR trajectory from `start` (oldest first), no noise.
pub fn setar2_trajectory(p: &Setar2Params, start: &[f64], steps: usize) -> Vec<f64> {
    let order = p.order();
    let mut path = start.to_vec();
    for _ in 0..steps {
        let window: Vec<f64> = path.iter().rev().take(order).copied().collect();
        path.push(p.step(&window));
    }
    path
}

fn setar2_series(p: &Setar2Params, length: usize, rng: &mut CounterRng) -> Result<Vec<f64>> {
    p.check()?;
    let order = p.order();
    let mut window = vec![p.threshold; order];
    let mut out = Vec::with_capacity(length);
    for t in 0..p.burn_in + length {
        let y = p.step(&window) + p.noise_sd * rng.standard_normal();
        if !y.is_finite() || y.abs() > DIVERGENCE_BOUND {
            return Err(SetarError::DivergedSeries(0));
        }
        window.rotate_right(1);
        window[0] = y;
        if t >= p.burn_in {
            out.push(y);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn logistic_hand_iteration() {
        let orbit = logistic_orbit(0.2, 4.0, 3);
        assert_abs_diff_eq!(orbit[1], 0.64, epsilon = 1e-15);
        assert_abs_diff_eq!(orbit[2], 0.9216, epsilon = 1e-15);
        assert_eq!(logistic_orbit(0.5, 4.0, 3), vec![0.5, 1.0, 0.0]);
    }

    #[test]
    fn logistic_in_unit_interval() {
        for noise_sd in [0.0, 0.05] {
            let c = gen_chaotic_logistic(20, 600, 9, LogisticParams { r: 4.0, noise_sd }).unwrap();
            assert_eq!(c.len(), 20);
            assert!(c.series().iter().flat_map(|s| &s.values).all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn mackey_glass_without_dynamics_is_constant() {
        let p = MackeyGlassParams { beta: 0.0, gamma: 0.0, ..Default::default() };
        let path = mackey_glass_path(&p, 1.0, 50).unwrap();
        assert!(path.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mackey_glass_rejects_bad_steps() {
        let p = MackeyGlassParams { dt: 0.3, ..Default::default() };
        assert!(mackey_glass_path(&p, 1.0, 10).is_err());
        let p = MackeyGlassParams { tau: 0.5, ..Default::default() };
        assert!(mackey_glass_path(&p, 1.0, 10).is_err());
    }

    #[test]
    fn setar_noiseless_matches_hand_iteration() {
        let p = Setar2Params { noise_sd: 0.0, ..Default::default() };
        let path = setar2_trajectory(&p, &[0.2, 0.9], 2);
        // y = 0.9 >= 0.5: high regime 0.75 - 0.5*0.9 + 0*0.2 = 0.3.
        assert_abs_diff_eq!(path[2], 0.3, epsilon = 1e-15);
        // y = 0.3 < 0.5: low regime 0.25 + 0.8*0.3 - 0.1*0.9 = 0.4.
        assert_abs_diff_eq!(path[3], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = generate(&DgpConfig::setar2(3, 200, 4)).unwrap();
        let b = generate(&DgpConfig::setar2(3, 200, 4)).unwrap();
        assert_eq!(a, b);
        let c = generate(&DgpConfig::setar2(3, 200, 5)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_short_rejected() {
        assert!(generate(&DgpConfig::chaotic_logistic(1, 1, 0)).is_err());
    }
}
