//! Semi-discrete right-hand side and the explicit RK4 step.
//!
//! Continuity is in flux form with face fluxes `((hv)_i + (hv)_{i+1})/2`
//! and zero wall fluxes; the wall nodes own half cells. With trapezoid
//! weights the flux differences telescope, so `Σ wᵢ dhᵢ/dt = 0` exactly up
//! to roundoff. Momentum is in velocity form with central differences and
//! a conservative viscous operator; wall velocities have zero derivative.

use crate::controller::{feedback_raw, Gains};
use crate::error::{Error, Result};
use crate::friction::FrictionModel;
use crate::state::{Grid, LiquidState, PhysicalParams, TankState};

/// How the control acceleration is evaluated inside a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Feedback re-evaluated at every stage.
    #[default]
    Feedback,
    /// `f ≡ 0`.
    OpenLoop,
    /// Feedback frozen at the start of each step.
    SampleAndHold,
}

/// Time derivatives of the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub dxi: f64,
    pub dw: f64,
    pub dh: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Semi-discrete vector field at control value `f`.
pub fn semidiscrete_rhs(
    tank: &TankState,
    state: &LiquidState,
    f: f64,
    friction: &FrictionModel,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<StateRate> {
    grid.check_len(state.h())?;
    if !f.is_finite() {
        return Err(Error::NonFinite { what: "control" });
    }
    let n = grid.n();
    let mut dh = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut flux = vec![0.0; n - 1];
    fluid_rhs(
        state.h(),
        state.v(),
        f,
        friction,
        params,
        grid.dx(),
        0.0,
        &mut flux,
        &mut dh,
        &mut dv,
    )?;
    Ok(StateRate {
        dxi: tank.w,
        dw: -f,
        dh,
        dv,
    })
}

/// Fluid part of the vector field. Fails if some `hᵢ ≤ h_floor`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fluid_rhs(
    h: &[f64],
    v: &[f64],
    f: f64,
    friction: &FrictionModel,
    params: &PhysicalParams,
    dx: f64,
    h_floor: f64,
    flux: &mut [f64],
    dh: &mut [f64],
    dv: &mut [f64],
) -> Result<()> {
    let n = h.len();
    if let Some((index, &value)) = h.iter().enumerate().find(|(_, &x)| !(x > h_floor)) {
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "level h" });
        }
        return Err(Error::NonPositiveLevel { index, value });
    }
    let (g, mu) = (params.g(), params.mu());
    let inv_dx = 1.0 / dx;
    let inv_2dx = 0.5 * inv_dx;
    let inv_dx2 = inv_dx * inv_dx;

    for i in 0..n - 1 {
        flux[i] = 0.5 * (h[i] * v[i] + h[i + 1] * v[i + 1]);
    }
    dh[0] = -2.0 * flux[0] * inv_dx;
    for i in 1..n - 1 {
        dh[i] = -(flux[i] - flux[i - 1]) * inv_dx;
    }
    dh[n - 1] = 2.0 * flux[n - 2] * inv_dx;

    dv[0] = 0.0;
    dv[n - 1] = 0.0;
    let frictionless = friction.is_frictionless();
    for i in 1..n - 1 {
        let (hl, hc, hr) = (h[i - 1], h[i], h[i + 1]);
        let (vl, vc, vr) = (v[i - 1], v[i], v[i + 1]);
        let advect = vc * (vr - vl) * inv_2dx;
        let pressure = g * (hr - hl) * inv_2dx;
        let visc = (0.5 * (hc + hr) * (vr - vc) - 0.5 * (hl + hc) * (vc - vl)) * inv_dx2;
        let drag = if frictionless {
            0.0
        } else {
            friction.kappa_unchecked(hc, vc) * vc
        };
        dv[i] = -advect - pressure + (mu * visc - drag) / hc + f;
    }
    Ok(())
}

/// `min(cfl_adv·dx / max(|v| + √(gh)), cfl_diff·dx²/(2μ))`.
pub fn stable_dt(
    state: &LiquidState,
    params: &PhysicalParams,
    grid: &Grid,
    cfl_adv: f64,
    cfl_diff: f64,
) -> f64 {
    stable_dt_raw(state.h(), state.v(), params, grid.dx(), cfl_adv, cfl_diff)
}

pub(crate) fn stable_dt_raw(
    h: &[f64],
    v: &[f64],
    params: &PhysicalParams,
    dx: f64,
    cfl_adv: f64,
    cfl_diff: f64,
) -> f64 {
    let g = params.g();
    let speed = h
        .iter()
        .zip(v)
        .map(|(h, v)| v.abs() + (g * h.max(0.0)).sqrt())
        .fold(0.0, f64::max);
    let diff = cfl_diff * dx * dx / (2.0 * params.mu());
    if speed > 0.0 {
        (cfl_adv * dx / speed).min(diff)
    } else {
        diff
    }
}

/// Reusable RK4 workspace for one grid size.
#[derive(Debug, Clone)]
pub struct Stepper {
    n: usize,
    flux: Vec<f64>,
    kh: [Vec<f64>; 4],
    kv: [Vec<f64>; 4],
    sh: Vec<f64>,
    sv: Vec<f64>,
    h_floor: f64,
    mode: ControlMode,
}

impl Stepper {
    pub fn new(n: usize, h_floor: f64, mode: ControlMode) -> Self {
        let z = || vec![0.0; n];
        Stepper {
            n,
            flux: vec![0.0; n.saturating_sub(1)],
            kh: [z(), z(), z(), z()],
            kv: [z(), z(), z(), z()],
            sh: z(),
            sv: z(),
            h_floor,
            mode,
        }
    }

    /// Advances `(tank, h, v)` in place by one classical RK4 step; the state
    /// is unchanged on error. Returns the control applied at the first stage.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn advance(
        &mut self,
        tank: &mut TankState,
        h: &mut [f64],
        v: &mut [f64],
        gains: &Gains,
        friction: &FrictionModel,
        params: &PhysicalParams,
        dx: f64,
        dt: f64,
    ) -> Result<f64> {
        debug_assert_eq!(h.len(), self.n);
        let mu = params.mu();
        let control = |mode: ControlMode, t: &TankState, h: &[f64], v: &[f64], held: f64| match mode
        {
            ControlMode::Feedback => feedback_raw(t, h, v, gains, mu, dx),
            ControlMode::OpenLoop => 0.0,
            ControlMode::SampleAndHold => held,
        };
        let f_hold = match self.mode {
            ControlMode::OpenLoop => 0.0,
            _ => feedback_raw(tank, h, v, gains, mu, dx),
        };
        let mut dxi = [0.0; 4];
        let mut dw = [0.0; 4];
        let coef = [0.0, 0.5, 0.5, 1.0];
        let mut f0 = 0.0;
        for s in 0..4 {
            let st = if s == 0 {
                *tank
            } else {
                let c = coef[s] * dt;
                for i in 0..self.n {
                    self.sh[i] = h[i] + c * self.kh[s - 1][i];
                    self.sv[i] = v[i] + c * self.kv[s - 1][i];
                }
                TankState {
                    xi: tank.xi + c * dxi[s - 1],
                    w: tank.w + c * dw[s - 1],
                }
            };
            let (hs, vs): (&[f64], &[f64]) = if s == 0 { (h, v) } else { (&self.sh, &self.sv) };
            let f = control(self.mode, &st, hs, vs, f_hold);
            if !f.is_finite() {
                return Err(Error::NonFinite { what: "control" });
            }
            if s == 0 {
                f0 = f;
            }
            let (kh, kv) = (&mut self.kh[s], &mut self.kv[s]);
            fluid_rhs(
                hs,
                vs,
                f,
                friction,
                params,
                dx,
                self.h_floor,
                &mut self.flux,
                kh,
                kv,
            )?;
            dxi[s] = st.w;
            dw[s] = -f;
        }
        let w6 = dt / 6.0;
        for i in 0..self.n {
            let nh =
                h[i] + w6 * (self.kh[0][i] + 2.0 * (self.kh[1][i] + self.kh[2][i]) + self.kh[3][i]);
            let nv =
                v[i] + w6 * (self.kv[0][i] + 2.0 * (self.kv[1][i] + self.kv[2][i]) + self.kv[3][i]);
            self.sh[i] = nh;
            self.sv[i] = nv;
        }
        if self.sh.iter().chain(&self.sv).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "state after step",
            });
        }
        if let Some((index, &value)) = self
            .sh
            .iter()
            .enumerate()
            .find(|(_, &x)| !(x > self.h_floor))
        {
            return Err(Error::NonPositiveLevel { index, value });
        }
        h.copy_from_slice(&self.sh);
        v.copy_from_slice(&self.sv);
        let n = self.n;
        v[0] = 0.0;
        v[n - 1] = 0.0;
        tank.xi += w6 * (dxi[0] + 2.0 * (dxi[1] + dxi[2]) + dxi[3]);
        tank.w += w6 * (dw[0] + 2.0 * (dw[1] + dw[2]) + dw[3]);
        Ok(f0)
    }
}

/// One RK4 step of the coupled system with per-stage feedback.
#[allow(clippy::too_many_arguments)]
pub fn step(
    tank: &TankState,
    state: &LiquidState,
    friction: &FrictionModel,
    gains: &Gains,
    params: &PhysicalParams,
    grid: &Grid,
    dt: f64,
    mode: ControlMode,
) -> Result<(TankState, LiquidState)> {
    grid.check_len(state.h())?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(crate::error::invalid(
            "dt",
            format!("must be finite and > 0, got {dt}"),
        ));
    }
    let mut stepper = Stepper::new(grid.n(), 0.0, mode);
    let mut t = *tank;
    let (mut h, mut v) = state.clone().into_parts();
    stepper.advance(
        &mut t,
        &mut h,
        &mut v,
        gains,
        friction,
        params,
        grid.dx(),
        dt,
    )?;
    Ok((t, LiquidState::from_parts_unchecked(h, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::trapezoid;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (PhysicalParams, Grid, Gains) {
        let p = PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap();
        let g = Grid::new(n, 1.0).unwrap();
        let gains = Gains::new(1.0, 0.05, 1.0, 1.0, 1.0, 1.0).unwrap();
        (p, g, gains)
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_the_field() {
        let (p, g, _) = setup(64);
        let eq = LiquidState::equilibrium(&p, &g);
        let fr = FrictionModel::velocity_independent(0.05, 0.1).unwrap();
        let r = semidiscrete_rhs(&TankState::at_rest(), &eq, 0.0, &fr, &p, &g).unwrap();
        assert!(r.dh.iter().chain(&r.dv).all(|&x| x == 0.0));
        assert_eq!((r.dxi, r.dw), (0.0, 0.0));
    }

    #[test]
    fn uniform_body_force() {
        let (p, g, _) = setup(64);
        let eq = LiquidState::equilibrium(&p, &g);
        let f0 = 0.37;
        let r = semidiscrete_rhs(
            &TankState::at_rest(),
            &eq,
            f0,
            &FrictionModel::Frictionless,
            &p,
            &g,
        )
        .unwrap();
        assert!(r.dh.iter().all(|&x| x == 0.0));
        assert!(r.dv[1..63].iter().all(|&x| x == f0));
        assert_eq!(r.dv[0], 0.0);
        assert_eq!(r.dw, -f0);
    }

    #[test]
    fn flux_divergence_has_zero_trapezoid_sum() {
        let (p, g, _) = setup(97);
        let h = g.sample(|x| 0.5 + 0.1 * (2.0 * PI * x).cos() + 0.03 * (6.0 * PI * x).sin());
        let v = g.sample(|x| 0.2 * (PI * x).sin() - 0.1 * (3.0 * PI * x).sin());
        let st = LiquidState::projected(h, v, &p, &g).unwrap();
        let r = semidiscrete_rhs(
            &TankState::at_rest(),
            &st,
            0.1,
            &FrictionModel::Frictionless,
            &p,
            &g,
        )
        .unwrap();
        assert!(trapezoid(&r.dh, g.dx()).abs() < 1e-14);
    }

    /// Manufactured check of the spatial operator: the residual against the
    /// exact continuum field shrinks like dx² in the interior.
    #[test]
    fn spatial_operator_is_second_order() {
        let p = PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap();
        let eps = 0.05;
        let hf = |x: f64| 0.5 + eps * (2.0 * PI * x).sin();
        let hx = |x: f64| eps * 2.0 * PI * (2.0 * PI * x).cos();
        let vf = |x: f64| 0.2 * (PI * x).sin();
        let vx = |x: f64| 0.2 * PI * (PI * x).cos();
        let vxx = |x: f64| -0.2 * PI * PI * (PI * x).sin();
        let exact_dh = |x: f64| -(hx(x) * vf(x) + hf(x) * vx(x));
        let exact_dv =
            |x: f64| -vf(x) * vx(x) - 9.81 * hx(x) + 0.1 * (hx(x) * vx(x) + hf(x) * vxx(x)) / hf(x);
        let mut errs = Vec::new();
        for &n in &[101usize, 201, 401] {
            let g = Grid::new(n, 1.0).unwrap();
            let st = LiquidState::projected(g.sample(hf), g.sample(vf), &p, &g).unwrap();
            let shift = st.h()[0] - hf(0.0);
            let r = semidiscrete_rhs(
                &TankState::at_rest(),
                &st,
                0.0,
                &FrictionModel::Frictionless,
                &p,
                &g,
            )
            .unwrap();
            let mut e: f64 = shift.abs();
            for i in 1..n - 1 {
                let x = g.x(i);
                e = e
                    .max((r.dh[i] - exact_dh(x)).abs())
                    .max((r.dv[i] - exact_dv(x)).abs());
            }
            errs.push(e);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "{errs:?}");
        }
    }

    #[test]
    fn stable_dt_formula() {
        let (p, g, _) = setup(101);
        let eq = LiquidState::equilibrium(&p, &g);
        let dx = g.dx();
        let expect = (0.5 * dx / (9.81f64 * 0.5).sqrt()).min(0.9 * dx * dx / 0.2);
        assert_eq!(stable_dt(&eq, &p, &g, 0.5, 0.9), expect);
        let p2 = PhysicalParams::new(9.81, 0.2, 1.0, 0.5, 1.0).unwrap();
        let d1 = stable_dt(&eq, &p, &g, 1.0, 1.0);
        let d2 = stable_dt(&eq, &p2, &g, 1.0, 1.0);
        assert!((d1 - 2.0 * d2).abs() < 1e-18);
    }

    #[test]
    fn single_step_preserves_mass_and_walls() {
        let (p, g, gains) = setup(129);
        let h = g.sample(|x| 0.5 + 0.05 * (PI * x).cos());
        let v = g.sample(|x| 0.1 * (2.0 * PI * x).sin());
        let st = LiquidState::projected(h, v, &p, &g).unwrap();
        let fr = FrictionModel::velocity_independent(0.05, 0.1).unwrap();
        let dt = stable_dt(&st, &p, &g, 0.5, 0.9);
        let tank = TankState::new(0.1, -0.2).unwrap();
        let (_, s2) = step(&tank, &st, &fr, &gains, &p, &g, dt, ControlMode::Feedback).unwrap();
        let rel = (trapezoid(s2.h(), g.dx()) - 0.5).abs() / 0.5;
        assert!(rel <= 1e-13, "{rel}");
        assert_eq!((s2.v()[0], s2.v()[128]), (0.0, 0.0));
    }

    #[test]
    fn positivity_failure_is_reported() {
        let (p, g, gains) = setup(33);
        let mut h = vec![0.5; 33];
        h[5] = 1e-12;
        let st = LiquidState::unvalidated(h, vec![0.0; 33], &g).unwrap();
        let mut stepper = Stepper::new(33, 1e-9, ControlMode::Feedback);
        let (mut hh, mut vv) = st.into_parts();
        let mut t = TankState::at_rest();
        let e = stepper
            .advance(
                &mut t,
                &mut hh,
                &mut vv,
                &gains,
                &FrictionModel::Frictionless,
                &p,
                g.dx(),
                1e-5,
            )
            .unwrap_err();
        assert!(matches!(e, Error::NonPositiveLevel { index: 5, .. }));
        assert_eq!(hh[5], 1e-12);
    }
}
