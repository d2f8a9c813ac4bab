//! Seeded random states for property checks.
//!
//! Levels are `h* + Σ aⱼ sin(2πjx/L) + bⱼ cos(2πjx/L)`: every mode has zero
//! mean over `[0, L]`, and `Σ|aⱼ| + |bⱼ| < 0.9·h*` keeps `h ≥ 0.1·h*`.
//! Velocities are `Σ cⱼ sin(πjx/L)`, which vanish at both walls.
//! Sample `i` of seed `s` is drawn from ChaCha stream `i` of key `s`, so any
//! sample can be regenerated on its own and batches parallelize freely.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::functionals::{clf_v, FunctionalParams};
use crate::state::{Grid, LiquidState, PhysicalParams, TankState};

/// Largest total mode amplitude as a fraction of `h*`.
pub const MAX_AMPLITUDE_FRACTION: f64 = 0.9;

/// Generator for sample `index` of `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random-state generator over a fixed grid.
#[derive(Debug, Clone, Copy)]
pub struct StateSampler {
    params: PhysicalParams,
    grid: Grid,
    modes: usize,
}

impl StateSampler {
    pub fn new(params: PhysicalParams, grid: Grid, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("modes", "need at least one mode"));
        }
        if (grid.length() - params.length()).abs() > 1e-12 * params.length() {
            return Err(invalid("grid", "grid length differs from tank length"));
        }
        Ok(StateSampler {
            params,
            grid,
            modes,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// A state with mode amplitudes scaled by a random factor in `(0, 1)`
    /// and a random tank state in `[-1, 1]²`.
    pub fn draw(&self, rng: &mut impl Rng) -> Result<(TankState, LiquidState)> {
        let scale = rng.random::<f64>();
        self.draw_scaled(rng, scale)
    }

    /// A state whose level modes have total amplitude `scale·0.9·h*`.
    pub fn draw_scaled(&self, rng: &mut impl Rng, scale: f64) -> Result<(TankState, LiquidState)> {
        let l = self.params.length();
        let hs = self.params.h_star();
        let j_max = self.modes;
        let mut a = vec![0.0; j_max];
        let mut b = vec![0.0; j_max];
        let mut c = vec![0.0; j_max];
        for j in 0..j_max {
            let decay = 1.0 / (j + 1) as f64;
            a[j] = rng.random_range(-1.0..1.0) * decay;
            b[j] = rng.random_range(-1.0..1.0) * decay;
            c[j] = rng.random_range(-1.0..1.0) * decay;
        }
        let total: f64 = a.iter().chain(&b).map(|x| x.abs()).sum();
        let level_scale = if total > 0.0 {
            // Strictly below the bound even when scale rounds to 1.
            scale.clamp(0.0, 1.0) * MAX_AMPLITUDE_FRACTION * hs * (1.0 - 1e-9) / total
        } else {
            0.0
        };
        let speed = rng.random_range(0.0..1.0) * scale * (self.params.g() * hs).sqrt();
        let c_total: f64 = c.iter().map(|x| x.abs()).sum();
        let speed_scale = if c_total > 0.0 { speed / c_total } else { 0.0 };

        let h = self.grid.sample(|x| {
            let mut s = hs;
            for j in 0..j_max {
                let k = 2.0 * PI * (j + 1) as f64 * x / l;
                s += level_scale * (a[j] * k.sin() + b[j] * k.cos());
            }
            s
        });
        let v = self.grid.sample(|x| {
            let mut s = 0.0;
            for (j, cj) in c.iter().enumerate() {
                s += speed_scale * cj * (PI * (j + 1) as f64 * x / l).sin();
            }
            s
        });
        let tank = TankState::new(
            scale * rng.random_range(-1.0..1.0),
            scale * rng.random_range(-1.0..1.0),
        )?;
        Ok((
            tank,
            LiquidState::projected(h, v, &self.params, &self.grid)?,
        ))
    }
}

/// Multiplies the deviation from equilibrium by `factor`: `h − h*`, `v`, `ξ`
/// and `w` all scale. The trapezoid mass is unchanged up to roundoff.
pub fn scale_deviation(
    tank: &TankState,
    state: &LiquidState,
    factor: f64,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<(TankState, LiquidState)> {
    let hs = params.h_star();
    let h: Vec<f64> = state.h().iter().map(|h| hs + factor * (h - hs)).collect();
    let v: Vec<f64> = state.v().iter().map(|v| factor * v).collect();
    let tank = TankState::new(factor * tank.xi, factor * tank.w)?;
    Ok((tank, LiquidState::projected(h, v, params, grid)?))
}

/// Rescales the deviation so that `V` equals `target` to relative `1e-10`.
/// Requires `0 < target ≤ V` of the given state.
pub fn scale_to_level(
    tank: &TankState,
    state: &LiquidState,
    target: f64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
    grid: &Grid,
) -> Result<(TankState, LiquidState)> {
    scale_to_value(tank, state, target, params, grid, |t, s| {
        clf_v(t, s, params, fp, grid)
    })
}

/// Rescales the deviation so that `measure` equals `target` from below to
/// relative `1e-10`, by bisection on the factor. `measure` must vanish at
/// equilibrium and grow with the factor; requires
/// `0 < target ≤ measure(tank, state)`.
pub fn scale_to_value(
    tank: &TankState,
    state: &LiquidState,
    target: f64,
    params: &PhysicalParams,
    grid: &Grid,
    measure: impl Fn(&TankState, &LiquidState) -> Result<f64>,
) -> Result<(TankState, LiquidState)> {
    let full = measure(tank, state)?;
    if !(target > 0.0 && target <= full) {
        return Err(Error::Precondition(format!(
            "target level {target} not in (0, {full}]"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = (*tank, state.clone());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (t, s) = scale_deviation(tank, state, mid, params, grid)?;
        let v = measure(&t, &s)?;
        if v <= target {
            lo = mid;
            best = (t, s);
            if target - v <= 1e-10 * target {
                break;
            }
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// `φ(x) = Σ cⱼ sin(jπx/L)` with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries {
    pub coeffs: Vec<f64>,
    pub length: f64,
}

impl SineSeries {
    pub fn random(rng: &mut impl Rng, modes: usize, length: f64) -> Self {
        let coeffs = (1..=modes)
            .map(|j| rng.random_range(-1.0..1.0) / j as f64)
            .collect();
        SineSeries { coeffs, length }
    }

    fn wavenumber(&self, j: usize) -> f64 {
        PI * (j + 1) as f64 / self.length
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (self.wavenumber(j) * x).sin())
            .sum()
    }

    /// Max of `|φ|` over `samples + 1` equispaced points.
    pub fn sup_norm(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.value(self.length * i as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `‖φ'‖₂` from orthogonality: `Σ cⱼ²(jπ/L)²·L/2`.
    pub fn d1_norm(&self) -> f64 {
        self.weighted_norm(1)
    }

    /// `‖φ''‖₂`.
    pub fn d2_norm(&self) -> f64 {
        self.weighted_norm(2)
    }

    fn weighted_norm(&self, order: i32) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * c * self.wavenumber(j).powi(2 * order))
            .sum();
        (s * self.length / 2.0).sqrt()
    }
}
