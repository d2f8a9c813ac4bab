//! Named initial conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::state::{Grid, LiquidState, PhysicalParams, TankState};

/// Shape of the initial level and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Flat level, fluid at rest.
    #[default]
    Equilibrium,
    /// Linear level `h* + slope·(x − L/2)`, fluid at rest.
    Tilt,
    /// Standing wave: `h* + level_amp·cos(mode·πx/L)`,
    /// `v = speed_amp·sin(mode·πx/L)`.
    Sloshing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub slope: f64,
    pub mode: u32,
    pub level_amp: f64,
    pub speed_amp: f64,
    pub xi0: f64,
    pub w0: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            kind: InitialKind::Equilibrium,
            slope: 0.0,
            mode: 1,
            level_amp: 0.0,
            speed_amp: 0.0,
            xi0: 0.0,
            w0: 0.0,
        }
    }
}

/// Builds the state; the level is shifted to carry mass `m` exactly.
pub fn make_initial(
    spec: &InitialSpec,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<(TankState, LiquidState)> {
    let l = params.length();
    let hs = params.h_star();
    let tank = TankState::new(spec.xi0, spec.w0)?;
    let (h, v) = match spec.kind {
        InitialKind::Equilibrium => return Ok((tank, LiquidState::equilibrium(params, grid))),
        InitialKind::Tilt => {
            let slope = spec.slope;
            if !slope.is_finite() {
                return Err(invalid("slope", "must be finite"));
            }
            (
                grid.sample(|x| hs + slope * (x - 0.5 * l)),
                vec![0.0; grid.n()],
            )
        }
        InitialKind::Sloshing => {
            if spec.mode == 0 {
                return Err(invalid("mode", "must be >= 1"));
            }
            if !(spec.level_amp.is_finite() && spec.speed_amp.is_finite()) {
                return Err(invalid("level_amp", "amplitudes must be finite"));
            }
            let k = PI * spec.mode as f64 / l;
            (
                grid.sample(|x| hs + spec.level_amp * (k * x).cos()),
                grid.sample(|x| spec.speed_amp * (k * x).sin()),
            )
        }
    };
    Ok((tank, LiquidState::projected(h, v, params, grid)?))
}
