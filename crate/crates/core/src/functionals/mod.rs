//! Energy functionals `E`, `W`, the control Lyapunov functional `V`, the
//! velocity-gradient functional `U`, and the bound functions derived from
//! them.
//!
//! All integrals are trapezoid sums on the solver grid and every spatial
//! derivative uses [`crate::state::central_derivative`], so the values
//! reported here are exactly what the simulator diagnostics record.

mod bounds;
mod level;
pub mod sampling;

pub use bounds::{
    dissipation_bound, norm_lower_bound, norm_upper_bound, radius_r, theta, theta_at_level,
    LemmaConstants,
};
pub(crate) use level::{largest_level_with_floor, level_bounds_unchecked};
pub use level::{
    level_bounds, level_potential, level_potential_inv, level_potential_slope, p1, p2,
    potential_scale, INVERSE_RTOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::state::{derivative_into, trapezoid_map2, Grid, LiquidState, PhysicalParams, TankState};

/// Weights of the Lyapunov functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParams {
    /// Weight of `E` against `W` in `V`.
    pub delta: f64,
    /// Tank velocity gain.
    pub q: f64,
    /// Tank position gain.
    pub k: f64,
    /// Exponent in `U`.
    pub beta: f64,
    /// Weight of `V` inside `U`.
    pub gamma: f64,
}

impl FunctionalParams {
    pub fn new(delta: f64, q: f64, k: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, value) in [
            ("delta", delta),
            ("q", q),
            ("k", k),
            ("beta", beta),
            ("gamma", gamma),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(
                    name,
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        Ok(FunctionalParams {
            delta,
            q,
            k,
            beta,
            gamma,
        })
    }
}

/// The integrals every functional is assembled from, computed in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FluidIntegrals {
    /// `∫ h v²`
    pub kinetic: f64,
    /// `‖h − h*‖₂²`
    pub deviation: f64,
    /// `∫ h⁻¹ (h v + μ h_x)²`
    pub weighted_flux: f64,
    /// `‖v_x‖₂²`
    pub vx_sq: f64,
}

impl FluidIntegrals {
    pub fn compute(state: &LiquidState, params: &PhysicalParams, grid: &Grid) -> Result<Self> {
        grid.check_len(state.h())?;
        grid.check_len(state.v())?;
        let n = grid.n();
        let dx = grid.dx();
        let (h, v) = (state.h(), state.v());
        let mut hx = vec![0.0; n];
        let mut vx = vec![0.0; n];
        derivative_into(h, dx, &mut hx);
        derivative_into(v, dx, &mut vx);
        let hs = params.h_star();
        let mu = params.mu();
        let kinetic = trapezoid_map2(h, v, dx, |h, v| h * v * v);
        let deviation = trapezoid_map2(h, h, dx, |h, _| (h - hs) * (h - hs));
        let mut phi = vec![0.0; n];
        for i in 0..n {
            phi[i] = h[i] * v[i] + mu * hx[i];
        }
        let weighted_flux = trapezoid_map2(h, &phi, dx, |h, p| p * p / h);
        let vx_sq = trapezoid_map2(&vx, &vx, dx, |a, _| a * a);
        Ok(FluidIntegrals {
            kinetic,
            deviation,
            weighted_flux,
            vx_sq,
        })
    }

    pub fn energy_e(&self, params: &PhysicalParams) -> f64 {
        0.5 * self.kinetic + 0.5 * params.g() * self.deviation
    }

    pub fn energy_w(&self, params: &PhysicalParams) -> f64 {
        0.5 * self.weighted_flux + 0.5 * params.g() * self.deviation
    }
}

fn tank_energy(tank: &TankState, fp: &FunctionalParams) -> f64 {
    let kx = fp.k * tank.xi;
    0.5 * fp.q * kx * kx + 0.5 * fp.q * (tank.w + kx).powi(2)
}

/// Mechanical energy `E = ½∫h v² + (g/2)‖h − h*‖₂²`.
pub fn energy_e(state: &LiquidState, params: &PhysicalParams, grid: &Grid) -> Result<f64> {
    Ok(FluidIntegrals::compute(state, params, grid)?.energy_e(params))
}

/// `W = ½∫h⁻¹(h v + μ h_x)² + (g/2)‖h − h*‖₂²`.
pub fn energy_w(state: &LiquidState, params: &PhysicalParams, grid: &Grid) -> Result<f64> {
    Ok(FluidIntegrals::compute(state, params, grid)?.energy_w(params))
}

/// Control Lyapunov functional `V = δE + W + (qk²/2)ξ² + (q/2)(w + kξ)²`.
pub fn clf_v(
    tank: &TankState,
    state: &LiquidState,
    params: &PhysicalParams,
    fp: &FunctionalParams,
    grid: &Grid,
) -> Result<f64> {
    let ints = FluidIntegrals::compute(state, params, grid)?;
    Ok(v_from(&ints, tank, params, fp))
}

pub(crate) fn v_from(
    ints: &FluidIntegrals,
    tank: &TankState,
    params: &PhysicalParams,
    fp: &FunctionalParams,
) -> f64 {
    fp.delta * ints.energy_e(params) + ints.energy_w(params) + tank_energy(tank, fp)
}

pub(crate) fn u_from(v: f64, vx_sq: f64, fp: &FunctionalParams) -> f64 {
    v + (0.5 * vx_sq + fp.gamma * v) * (fp.beta * v).exp()
}

/// `U = V + (½‖v_x‖₂² + γV)·exp(βV)`.
pub fn functional_u(
    tank: &TankState,
    state: &LiquidState,
    params: &PhysicalParams,
    fp: &FunctionalParams,
    grid: &Grid,
) -> Result<f64> {
    let ints = FluidIntegrals::compute(state, params, grid)?;
    let v = v_from(&ints, tank, params, fp);
    Ok(u_from(v, ints.vx_sq, fp))
}

/// Sublevel threshold of `X_U(r)`: `r + γr·exp(βr)`.
pub fn u_level(r: f64, fp: &FunctionalParams) -> f64 {
    r + fp.gamma * r * (fp.beta * r).exp()
}

/// Sup-norm cap on the velocity implied by `U ≤ r + γr·exp(βr)`.
pub fn speed_cap(r: f64, params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    (2.0 * params.length() * u_level(r, fp) / 3.0).sqrt()
}

/// Evaluated functionals and set memberships of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub e: f64,
    pub w: f64,
    pub v: f64,
    pub u: f64,
    pub p1_of_v: f64,
    pub p2_of_v: f64,
    pub spill_radius: f64,
    pub in_xv_r: bool,
    pub in_xu_r: bool,
    pub vx_l2: f64,
}

impl LyapunovReport {
    /// Evaluates the functionals and tests membership in `X_V(r)` and `X_U(r)`.
    pub fn evaluate(
        tank: &TankState,
        state: &LiquidState,
        params: &PhysicalParams,
        fp: &FunctionalParams,
        grid: &Grid,
        r: f64,
    ) -> Result<Self> {
        let ints = FluidIntegrals::compute(state, params, grid)?;
        let v = v_from(&ints, tank, params, fp);
        let u = u_from(v, ints.vx_sq, fp);
        let (p1_of_v, p2_of_v) = level_bounds(v, params, fp)?;
        Ok(LyapunovReport {
            e: ints.energy_e(params),
            w: ints.energy_w(params),
            v,
            u,
            p1_of_v,
            p2_of_v,
            spill_radius: radius_r(params, fp),
            in_xv_r: v <= r,
            in_xu_r: u <= u_level(r, fp),
            vx_l2: ints.vx_sq.sqrt(),
        })
    }
}
