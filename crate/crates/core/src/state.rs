//! Grids, physical parameters and the discrete tank/liquid state.
//!
//! Everything here works on a collocated uniform grid that includes both
//! wall nodes. Integrals are trapezoid sums and spatial derivatives are
//! second-order central differences with second-order one-sided closures
//! at the walls.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default relative tolerance for the mass constraint `∫h dx = m`.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Physical constants of the tank and the liquid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPhysicalParams", into = "RawPhysicalParams")]
pub struct PhysicalParams {
    g: f64,
    mu: f64,
    length: f64,
    mass: f64,
    h_max: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysicalParams {
    #[serde(default = "default_gravity")]
    g: f64,
    mu: f64,
    length: f64,
    mass: f64,
    h_max: f64,
}

fn default_gravity() -> f64 {
    9.81
}

impl TryFrom<RawPhysicalParams> for PhysicalParams {
    type Error = Error;

    fn try_from(raw: RawPhysicalParams) -> Result<Self> {
        PhysicalParams::new(raw.g, raw.mu, raw.length, raw.mass, raw.h_max)
    }
}

impl From<PhysicalParams> for RawPhysicalParams {
    fn from(p: PhysicalParams) -> Self {
        RawPhysicalParams {
            g: p.g,
            mu: p.mu,
            length: p.length,
            mass: p.mass,
            h_max: p.h_max,
        }
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

impl PhysicalParams {
    pub fn new(g: f64, mu: f64, length: f64, mass: f64, h_max: f64) -> Result<Self> {
        require_positive("g", g)?;
        require_positive("mu", mu)?;
        require_positive("length", length)?;
        require_positive("mass", mass)?;
        require_positive("h_max", h_max)?;
        let h_star = mass / length;
        if h_star >= h_max {
            return Err(invalid(
                "h_max",
                format!(
                    "equilibrium level h* = m/L = {h_star} must lie below the wall height {h_max}"
                ),
            ));
        }
        Ok(PhysicalParams {
            g,
            mu,
            length,
            mass,
            h_max,
        })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Equilibrium level `m / L`.
    pub fn h_star(&self) -> f64 {
        self.mass / self.length
    }
}

/// Uniform grid on `[0, L]` with `n` nodes, both walls included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
}

impl Grid {
    pub const MIN_NODES: usize = 8;

    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(invalid(
                "n",
                format!("need at least {} nodes, got {n}", Self::MIN_NODES),
            ));
        }
        require_positive("length", length)?;
        Ok(Grid {
            n,
            length,
            dx: length / (n - 1) as f64,
        })
    }

    pub fn for_params(n: usize, params: &PhysicalParams) -> Result<Self> {
        Self::new(n, params.length())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.length
        } else {
            i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    pub fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() == self.n {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.n,
                found: samples.len(),
            })
        }
    }
}

/// Trapezoid rule on uniform spacing. No length validation.
pub(crate) fn trapezoid(f: &[f64], dx: f64) -> f64 {
    let n = f.len();
    let interior: f64 = f[1..n - 1].iter().sum();
    dx * (interior + 0.5 * (f[0] + f[n - 1]))
}

/// Trapezoid sum of `f(a_i, b_i)` without allocating.
pub(crate) fn trapezoid_map2(a: &[f64], b: &[f64], dx: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = a.len();
    let mut acc = 0.5 * (f(a[0], b[0]) + f(a[n - 1], b[n - 1]));
    for i in 1..n - 1 {
        acc += f(a[i], b[i]);
    }
    dx * acc
}

/// Central differences with one-sided second-order wall closures.
pub(crate) fn derivative_into(f: &[f64], dx: f64, out: &mut [f64]) {
    let n = f.len();
    let inv2 = 0.5 / dx;
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
}

/// `∫₀ᴸ f dx` by the trapezoid rule.
pub fn trapezoid_integral(f: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(f)?;
    Ok(trapezoid(f, grid.dx()))
}

/// Node-wise derivative of `f`.
pub fn central_derivative(f: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(f)?;
    let mut out = vec![0.0; f.len()];
    derivative_into(f, grid.dx(), &mut out);
    Ok(out)
}

/// Liquid level and relative velocity sampled at the grid nodes.
///
/// Construction enforces positivity, the no-slip walls and the mass
/// constraint, so every `LiquidState` lies in the admissible set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiquidState {
    h: Vec<f64>,
    v: Vec<f64>,
}

impl LiquidState {
    /// Validates `(h, v)` against the grid and the mass constraint.
    pub fn new(h: Vec<f64>, v: Vec<f64>, params: &PhysicalParams, grid: &Grid) -> Result<Self> {
        Self::with_tolerance(h, v, params, grid, MASS_TOLERANCE)
    }

    pub fn with_tolerance(
        h: Vec<f64>,
        v: Vec<f64>,
        params: &PhysicalParams,
        grid: &Grid,
        mass_rtol: f64,
    ) -> Result<Self> {
        let state = Self::unvalidated(h, v, grid)?;
        state.check_mass(params, grid, mass_rtol)?;
        Ok(state)
    }

    /// Shifts `h` so that its trapezoid mass equals `m` exactly (up to
    /// roundoff) and pins the wall velocities to zero before validating.
    pub fn projected(
        mut h: Vec<f64>,
        mut v: Vec<f64>,
        params: &PhysicalParams,
        grid: &Grid,
    ) -> Result<Self> {
        grid.check_len(&h)?;
        grid.check_len(&v)?;
        let shift = (params.mass() - trapezoid(&h, grid.dx())) / grid.length();
        h.iter_mut().for_each(|hi| *hi += shift);
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        Self::new(h, v, params, grid)
    }

    pub fn equilibrium(params: &PhysicalParams, grid: &Grid) -> Self {
        LiquidState {
            h: vec![params.h_star(); grid.n()],
            v: vec![0.0; grid.n()],
        }
    }

    /// Shape checks only (length, finiteness, positivity, walls).
    pub(crate) fn unvalidated(h: Vec<f64>, v: Vec<f64>, grid: &Grid) -> Result<Self> {
        grid.check_len(&h)?;
        grid.check_len(&v)?;
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "level h" });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "velocity v" });
        }
        if let Some((index, &value)) = h.iter().enumerate().find(|(_, &x)| x <= 0.0) {
            return Err(Error::NonPositiveLevel { index, value });
        }
        let n = v.len();
        if v[0] != 0.0 || v[n - 1] != 0.0 {
            return Err(Error::WallVelocity {
                left: v[0],
                right: v[n - 1],
            });
        }
        Ok(LiquidState { h, v })
    }

    pub(crate) fn from_parts_unchecked(h: Vec<f64>, v: Vec<f64>) -> Self {
        LiquidState { h, v }
    }

    pub fn check_mass(&self, params: &PhysicalParams, grid: &Grid, rtol: f64) -> Result<()> {
        grid.check_len(&self.h)?;
        let found = trapezoid(&self.h, grid.dx());
        let relative = (found - params.mass()).abs() / params.mass();
        if relative > rtol {
            return Err(Error::MassMismatch {
                expected: params.mass(),
                found,
                relative,
            });
        }
        Ok(())
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        trapezoid(&self.h, grid.dx())
    }

    pub fn min_level(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_level(&self) -> f64 {
        self.h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖v‖_∞` over the nodes.
    pub fn max_speed(&self) -> f64 {
        self.v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.h, self.v)
    }
}

/// Tank position error `ξ = a − a*` and tank velocity `w`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TankState {
    pub xi: f64,
    pub w: f64,
}

impl TankState {
    pub fn new(xi: f64, w: f64) -> Result<Self> {
        if !(xi.is_finite() && w.is_finite()) {
            return Err(Error::NonFinite { what: "tank state" });
        }
        Ok(TankState { xi, w })
    }

    pub fn at_rest() -> Self {
        TankState::default()
    }
}

/// The state seen from the ground: wall position, level and absolute velocity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabFrameView {
    pub a: f64,
    pub w: f64,
    pub level: Vec<f64>,
    pub velocity: Vec<f64>,
}

pub fn to_lab_frame(tank: &TankState, state: &LiquidState, a_star: f64) -> LabFrameView {
    LabFrameView {
        a: tank.xi + a_star,
        w: tank.w,
        level: state.h.clone(),
        velocity: state.v.iter().map(|v| v + tank.w).collect(),
    }
}

/// Inverse of [`to_lab_frame`]. The level is taken as is; the mass
/// constraint is checked against `params`.
pub fn from_lab_frame(
    view: &LabFrameView,
    a_star: f64,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<(TankState, LiquidState)> {
    let tank = TankState::new(view.a - a_star, view.w)?;
    let v: Vec<f64> = view.velocity.iter().map(|u| u - view.w).collect();
    let state = LiquidState::new(view.level.clone(), v, params, grid)?;
    Ok((tank, state))
}

/// `‖(ξ, w, h − h*, v)‖_X`: Euclidean in the tank variables, `H¹` in the
/// level deviation and `L²` in the velocity.
pub fn state_norm_x(
    tank: &TankState,
    state: &LiquidState,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<f64> {
    Ok(state_norm_x_sq(tank, state, params, grid)?.sqrt())
}

pub(crate) fn state_norm_x_sq(
    tank: &TankState,
    state: &LiquidState,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<f64> {
    grid.check_len(state.h())?;
    let dx = grid.dx();
    let hs = params.h_star();
    let hx = central_derivative(state.h(), grid)?;
    let dev = trapezoid_map2(state.h(), state.h(), dx, |h, _| (h - hs) * (h - hs));
    let slope = trapezoid_map2(&hx, &hx, dx, |a, _| a * a);
    let kinetic = trapezoid_map2(state.v(), state.v(), dx, |v, _| v * v);
    Ok(tank.xi * tank.xi + tank.w * tank.w + dev + slope + kinetic)
}

/// Outcome of the no-spill test at the walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpillCheck {
    /// `max(h(0), h(L)) < H_max`.
    pub ok: bool,
    /// `H_max − max(h(0), h(L))`.
    pub margin: f64,
    /// Largest interior excess over `H_max`, if any. Only a warning: the
    /// spill condition constrains the wall levels.
    pub interior_excess: Option<f64>,
}

pub fn spill_check(state: &LiquidState, params: &PhysicalParams) -> SpillCheck {
    let n = state.h.len();
    let wall = state.h[0].max(state.h[n - 1]);
    let margin = params.h_max() - wall;
    let peak = state.max_level();
    SpillCheck {
        ok: wall < params.h_max(),
        margin,
        interior_excess: (peak >= params.h_max()).then(|| peak - params.h_max()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> PhysicalParams {
        PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn params_reject_equilibrium_above_wall() {
        let err = PhysicalParams::new(9.81, 0.1, 1.0, 1.2, 1.0).unwrap_err();
        assert!(err.to_string().contains("h_max"), "{err}");
        assert!(PhysicalParams::new(9.81, 0.0, 1.0, 0.5, 1.0).is_err());
        assert!(PhysicalParams::new(f64::NAN, 0.1, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn grid_spacing_is_consistent() {
        let grid = Grid::new(101, 2.0).unwrap();
        assert_eq!(grid.dx() * 100.0, 2.0);
        assert_eq!(grid.x(100), 2.0);
        assert!(Grid::new(7, 1.0).is_err());
    }

    #[test]
    fn trapezoid_examples() {
        let p = params();
        let grid = Grid::new(101, 1.0).unwrap();
        let one = vec![1.0; 101];
        assert!((trapezoid_integral(&one, &grid).unwrap() - 1.0).abs() < 1e-15);
        let eq = vec![p.h_star(); 101];
        assert!((trapezoid_integral(&eq, &grid).unwrap() - 0.5).abs() < 1e-15);
        let x: Vec<f64> = grid.nodes().collect();
        assert!((trapezoid_integral(&x, &grid).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            trapezoid_integral(&x[..50], &grid),
            Err(Error::LengthMismatch {
                expected: 101,
                found: 50
            })
        ));
    }

    #[test]
    fn derivative_examples() {
        let grid = Grid::new(201, 1.0).unwrap();
        let c = vec![3.5; 201];
        assert!(central_derivative(&c, &grid)
            .unwrap()
            .iter()
            .all(|&d| d == 0.0));
        let x: Vec<f64> = grid.nodes().collect();
        for d in central_derivative(&x, &grid).unwrap() {
            assert!((d - 1.0).abs() < 1e-12);
        }
        // Interior truncation error of the central stencil is (dx²/6)|f'''|
        // and the one-sided closure has (dx²/3)|f'''|; here |f'''| ≤ π³.
        let s = grid.sample(|x| (PI * x).sin());
        let ds = central_derivative(&s, &grid).unwrap();
        let bound = grid.dx().powi(2) / 3.0 * PI.powi(3) * 1.01;
        for (x, d) in grid.nodes().zip(ds) {
            assert!((d - PI * (PI * x).cos()).abs() <= bound, "x = {x}");
        }
    }

    #[test]
    fn liquid_state_validation() {
        let p = params();
        let grid = Grid::new(51, 1.0).unwrap();
        let eq = LiquidState::equilibrium(&p, &grid);
        assert!(LiquidState::new(eq.h().to_vec(), eq.v().to_vec(), &p, &grid).is_ok());

        let heavy: Vec<f64> = eq.h().iter().map(|h| 1.1 * h).collect();
        assert!(matches!(
            LiquidState::new(heavy, eq.v().to_vec(), &p, &grid),
            Err(Error::MassMismatch { .. })
        ));

        let mut slip = eq.v().to_vec();
        slip[0] = 1e-3;
        assert!(matches!(
            LiquidState::new(eq.h().to_vec(), slip, &p, &grid),
            Err(Error::WallVelocity { .. })
        ));

        let mut dry = eq.h().to_vec();
        dry[10] = 0.0;
        assert!(matches!(
            LiquidState::new(dry, eq.v().to_vec(), &p, &grid),
            Err(Error::NonPositiveLevel { index: 10, .. })
        ));
    }

    #[test]
    fn projection_restores_mass_by_shifting() {
        let p = params();
        let grid = Grid::new(51, 1.0).unwrap();
        let h = grid.sample(|x| 0.52 + 0.05 * (2.0 * PI * x).sin());
        let st = LiquidState::projected(h.clone(), vec![0.1; 51], &p, &grid).unwrap();
        assert!((st.mass(&grid) - 0.5).abs() < 1e-14);
        // The zero-mean part is untouched.
        let shift = st.h()[0] - h[0];
        for (a, b) in st.h().iter().zip(&h) {
            assert!((a - b - shift).abs() < 1e-15);
        }
        assert_eq!(st.v()[0], 0.0);
        assert_eq!(st.v()[50], 0.0);
    }

    #[test]
    fn norm_examples() {
        let p = params();
        let grid = Grid::new(201, 1.0).unwrap();
        let eq = LiquidState::equilibrium(&p, &grid);
        assert_eq!(
            state_norm_x(&TankState::at_rest(), &eq, &p, &grid).unwrap(),
            0.0
        );
        let off = TankState::new(1.0, 0.0).unwrap();
        assert_eq!(state_norm_x(&off, &eq, &p, &grid).unwrap(), 1.0);
    }

    #[test]
    fn lab_frame_examples() {
        let p = params();
        let grid = Grid::new(21, 1.0).unwrap();
        let eq = LiquidState::equilibrium(&p, &grid);
        let view = to_lab_frame(&TankState::at_rest(), &eq, 3.0);
        assert_eq!(view.a, 3.0);
        assert_eq!(view.velocity, eq.v());

        let moving = TankState::new(2.0, 1.0).unwrap();
        let view = to_lab_frame(&moving, &eq, 3.0);
        assert_eq!(view.a, 5.0);
        assert!(view.velocity.iter().all(|&u| u == 1.0));
        assert_eq!(view.level, eq.h());
    }

    #[test]
    fn spill_examples() {
        let p = params();
        let grid = Grid::new(21, 1.0).unwrap();
        let eq = LiquidState::equilibrium(&p, &grid);
        let s = spill_check(&eq, &p);
        assert!(s.ok);
        assert_eq!(s.margin, 0.5);
        assert_eq!(s.interior_excess, None);

        let mut h = eq.h().to_vec();
        h[0] = 1.0;
        let st = LiquidState::unvalidated(h, eq.v().to_vec(), &grid).unwrap();
        let s = spill_check(&st, &p);
        assert!(!s.ok);
        assert_eq!(s.margin, 0.0);

        let mut h = eq.h().to_vec();
        h[10] = 1.2;
        let st = LiquidState::unvalidated(h, eq.v().to_vec(), &grid).unwrap();
        let s = spill_check(&st, &p);
        assert!(s.ok);
        assert!((s.interior_excess.unwrap() - 0.2).abs() < 1e-15);
    }
}
