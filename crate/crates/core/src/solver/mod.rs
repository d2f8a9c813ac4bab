//! Method-of-lines integration of the closed-loop tank/liquid system.

mod export;
mod initial;
mod rhs;

pub use export::{write_fields, write_trajectory_csv, TRAJECTORY_HEADER};
pub use initial::{make_initial, InitialKind, InitialSpec};
pub use rhs::{semidiscrete_rhs, stable_dt, step, ControlMode, StateRate, Stepper};

use serde::{Deserialize, Serialize};

use crate::controller::{feedback_raw, Gains};
use crate::error::{invalid, Error, Result};
use crate::friction::{k_bar_of, FrictionModel};
use crate::functionals::{u_from, v_from, FluidIntegrals};
use crate::state::{
    spill_check, state_norm_x_sq, trapezoid, Grid, LiquidState, PhysicalParams, TankState,
};

/// What to do when a wall level reaches `H_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpillPolicy {
    #[default]
    Halt,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Grid nodes including both walls.
    pub n: usize,
    pub t_end: f64,
    pub cfl_adv: f64,
    pub cfl_diff: f64,
    /// Sampling interval of the recorded trajectory.
    pub output_every: f64,
    /// Levels at or below this abort the run.
    pub h_floor: f64,
    pub on_spill: SpillPolicy,
    pub control: ControlMode,
    /// Keep the field snapshots; diagnostics are always kept.
    pub keep_states: bool,
    /// Optional cap on the time step.
    pub dt_max: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 201,
            t_end: 10.0,
            cfl_adv: 0.5,
            cfl_diff: 0.9,
            output_every: 0.01,
            h_floor: 1e-9,
            on_spill: SpillPolicy::Halt,
            control: ControlMode::Feedback,
            keep_states: true,
            dt_max: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(invalid(
                "n",
                format!("need at least 16 nodes, got {}", self.n),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid(
                "t_end",
                format!("must be finite and >= 0, got {}", self.t_end),
            ));
        }
        for (name, x) in [("cfl_adv", self.cfl_adv), ("cfl_diff", self.cfl_diff)] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1], got {x}")));
            }
        }
        if !(self.output_every.is_finite() && self.output_every > 0.0) {
            return Err(invalid(
                "output_every",
                format!("must be finite and > 0, got {}", self.output_every),
            ));
        }
        if !(self.h_floor.is_finite() && self.h_floor >= 0.0) {
            return Err(invalid(
                "h_floor",
                format!("must be finite and >= 0, got {}", self.h_floor),
            ));
        }
        if let Some(d) = self.dt_max {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid(
                    "dt_max",
                    format!("must be finite and > 0, got {d}"),
                ));
            }
        }
        Ok(())
    }
}

/// Quantities recorded at each output instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub v: f64,
    pub u: f64,
    pub e: f64,
    pub w_energy: f64,
    pub mass: f64,
    pub vx_l2: f64,
    pub spill_margin: f64,
    /// Feedback law evaluated at the sample (0 in open loop).
    pub f: f64,
    pub k_bar: f64,
    pub min_level: f64,
    pub max_speed: f64,
    /// `‖(ξ, w, h − h*, v)‖_X`.
    pub norm_x: f64,
}

impl Diagnostics {
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        tank: &TankState,
        state: &LiquidState,
        gains: &Gains,
        friction: &FrictionModel,
        params: &PhysicalParams,
        grid: &Grid,
        control: ControlMode,
    ) -> Result<Self> {
        let fp = gains.functional_params()?;
        let ints = FluidIntegrals::compute(state, params, grid)?;
        let v = v_from(&ints, tank, params, &fp);
        let f = match control {
            ControlMode::OpenLoop => 0.0,
            _ => feedback_raw(tank, state.h(), state.v(), gains, params.mu(), grid.dx()),
        };
        Ok(Diagnostics {
            v,
            u: u_from(v, ints.vx_sq, &fp),
            e: ints.energy_e(params),
            w_energy: ints.energy_w(params),
            mass: trapezoid(state.h(), grid.dx()),
            vx_l2: ints.vx_sq.sqrt(),
            spill_margin: spill_check(state, params).margin,
            f,
            k_bar: k_bar_of(friction, state.h(), state.v()),
            min_level: state.min_level(),
            max_speed: state.max_speed(),
            norm_x: state_norm_x_sq(tank, state, params, grid)?.sqrt(),
        })
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    PositivityFailure { t: f64, index: usize, value: f64 },
    NonFinite { t: f64, what: String },
    Spill { t: f64, margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub tanks: Vec<TankState>,
    /// Empty unless `keep_states` was set.
    pub states: Vec<LiquidState>,
    pub diagnostics: Vec<Diagnostics>,
    pub termination: Termination,
    pub grid: Grid,
    /// Largest step taken.
    pub dt_max: f64,
    pub steps: u64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest relative deviation of the recorded mass from `m`.
    pub fn max_mass_drift(&self, params: &PhysicalParams) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| (d.mass - params.mass()).abs() / params.mass())
            .fold(0.0, f64::max)
    }
}

/// Integrates from `(tank0, state0)` to `t_end`, sampling every
/// `output_every`. Early stops are reported in [`Trajectory::termination`];
/// only invalid inputs are errors.
pub fn simulate(
    tank0: &TankState,
    state0: &LiquidState,
    gains: &Gains,
    friction: &FrictionModel,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate()?;
    gains.validate()?;
    let grid = Grid::for_params(config.n, params)?;
    grid.check_len(state0.h())?;
    let dx = grid.dx();

    let mut traj = Trajectory {
        times: Vec::new(),
        tanks: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
        termination: Termination::Completed,
        grid,
        dt_max: 0.0,
        steps: 0,
        warnings: Vec::new(),
    };
    let mut tank = *tank0;
    let (mut h, mut v) = state0.clone().into_parts();
    let mut stepper = Stepper::new(config.n, config.h_floor, config.control);
    let mut warned_interior = false;

    let record =
        |traj: &mut Trajectory, t: f64, tank: &TankState, h: &[f64], v: &[f64]| -> Result<()> {
            let st = LiquidState::from_parts_unchecked(h.to_vec(), v.to_vec());
            let d =
                Diagnostics::evaluate(tank, &st, gains, friction, params, &grid, config.control)?;
            traj.times.push(t);
            traj.tanks.push(*tank);
            traj.diagnostics.push(d);
            if config.keep_states {
                traj.states.push(st);
            }
            Ok(())
        };
    record(&mut traj, 0.0, &tank, &h, &v)?;

    let n_out = (config.t_end / config.output_every).round() as u64;
    let out_time = |j: u64| {
        if j >= n_out {
            config.t_end
        } else {
            j as f64 * config.output_every
        }
    };
    let mut t = 0.0;
    let mut next = 1u64;
    let mut target = out_time(next);
    'outer: while next <= n_out.max(if config.t_end > 0.0 { 1 } else { 0 }) {
        let mut dt = stable_dt_raw_cfg(&h, &v, params, dx, config);
        let remaining = target - t;
        let last = dt >= remaining * (1.0 - 1e-12);
        if last {
            dt = remaining;
        } else if dt > 0.5 * remaining {
            // Split the remainder evenly to avoid a sliver step.
            dt = 0.5 * remaining;
        }
        match stepper.advance(&mut tank, &mut h, &mut v, gains, friction, params, dx, dt) {
            Ok(_) => {}
            Err(Error::NonPositiveLevel { index, value }) => {
                traj.termination = Termination::PositivityFailure { t, index, value };
                break;
            }
            Err(Error::NonFinite { what }) => {
                traj.termination = Termination::NonFinite {
                    t,
                    what: what.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        }
        traj.steps += 1;
        traj.dt_max = traj.dt_max.max(dt);
        t = if last { target } else { t + dt };

        let n = h.len();
        let wall = h[0].max(h[n - 1]);
        if wall >= params.h_max() {
            match config.on_spill {
                SpillPolicy::Halt => {
                    record(&mut traj, t, &tank, &h, &v)?;
                    traj.termination = Termination::Spill {
                        t,
                        margin: params.h_max() - wall,
                    };
                    break 'outer;
                }
                SpillPolicy::Warn => traj
                    .warnings
                    .push(format!("spill at t = {t:.6}: wall level {wall}")),
            }
        }
        if last {
            if !warned_interior && h.iter().any(|&x| x >= params.h_max()) {
                warned_interior = true;
                traj.warnings
                    .push(format!("interior level above H_max at t = {t:.6}"));
            }
            record(&mut traj, t, &tank, &h, &v)?;
            next += 1;
            if next > n_out {
                break;
            }
            target = out_time(next);
        }
    }
    Ok(traj)
}

fn stable_dt_raw_cfg(
    h: &[f64],
    v: &[f64],
    params: &PhysicalParams,
    dx: f64,
    config: &SolverConfig,
) -> f64 {
    let dt = rhs::stable_dt_raw(h, v, params, dx, config.cfl_adv, config.cfl_diff);
    match config.dt_max {
        Some(cap) => dt.min(cap),
        None => dt,
    }
}
