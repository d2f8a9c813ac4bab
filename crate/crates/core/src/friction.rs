//! Wall-friction coefficient models `κ(h, v) ≥ 0` and the bounds on
//! `h⁻²κ` that the feasibility checks consume.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::state::{LiquidState, PhysicalParams};

/// User-supplied friction coefficient for [`FrictionModel::BoundedGeneric`].
pub type KappaFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Grid resolution per axis for the generic box maximum.
const BOX_GRID: usize = 401;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Clone)]
pub enum FrictionModel {
    /// `κ ≡ 0`.
    Frictionless,
    /// `κ = c_f·|v|`.
    ConstAbsV { cf: f64 },
    /// `κ = r₀ + r₁·h·|v|`.
    LinearLevel { r0: f64, r1: f64 },
    /// `κ = r·h^{−1/3}(b + 2h)^{4/3}·|v|`.
    ChannelWidth { r: f64, b: f64 },
    /// `κ = 3μc / (3μ + 4ch)`.
    VelocityIndependent { c: f64, mu: f64 },
    /// Any `κ` with `0 ≤ κ(h, v) ≤ bound` for all `h > 0` and all `v`.
    BoundedGeneric {
        bound: f64,
        kappa: KappaFn,
        label: String,
    },
}

impl fmt::Debug for FrictionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrictionModel::Frictionless => write!(f, "Frictionless"),
            FrictionModel::ConstAbsV { cf } => write!(f, "ConstAbsV {{ cf: {cf} }}"),
            FrictionModel::LinearLevel { r0, r1 } => {
                write!(f, "LinearLevel {{ r0: {r0}, r1: {r1} }}")
            }
            FrictionModel::ChannelWidth { r, b } => write!(f, "ChannelWidth {{ r: {r}, b: {b} }}"),
            FrictionModel::VelocityIndependent { c, mu } => {
                write!(f, "VelocityIndependent {{ c: {c}, mu: {mu} }}")
            }
            FrictionModel::BoundedGeneric { bound, label, .. } => {
                write!(f, "BoundedGeneric {{ bound: {bound}, label: {label:?} }}")
            }
        }
    }
}

fn nonneg(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {x}")))
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {x}")))
    }
}

impl FrictionModel {
    pub fn const_abs_v(cf: f64) -> Result<Self> {
        nonneg("c_f", cf)?;
        Ok(FrictionModel::ConstAbsV { cf })
    }

    pub fn linear_level(r0: f64, r1: f64) -> Result<Self> {
        nonneg("r0", r0)?;
        nonneg("r1", r1)?;
        Ok(FrictionModel::LinearLevel { r0, r1 })
    }

    pub fn channel_width(r: f64, b: f64) -> Result<Self> {
        nonneg("r", r)?;
        positive("b", b)?;
        Ok(FrictionModel::ChannelWidth { r, b })
    }

    /// `μ` is the kinematic viscosity of the liquid.
    pub fn velocity_independent(c: f64, mu: f64) -> Result<Self> {
        positive("c", c)?;
        positive("mu", mu)?;
        Ok(FrictionModel::VelocityIndependent { c, mu })
    }

    /// `kappa` must satisfy `0 ≤ κ(h, v) ≤ bound` on `(0, ∞) × ℝ`; this is
    /// the caller's promise and is not checked.
    pub fn bounded_generic(bound: f64, kappa: KappaFn, label: impl Into<String>) -> Result<Self> {
        positive("B", bound)?;
        Ok(FrictionModel::BoundedGeneric {
            bound,
            kappa,
            label: label.into(),
        })
    }

    /// `κ = B·(1 + tanh(|v|/v_scale))/2`, a velocity-dependent coefficient
    /// bounded by `B`.
    pub fn bounded_tanh(bound: f64, v_scale: f64) -> Result<Self> {
        positive("v_scale", v_scale)?;
        let kappa: KappaFn =
            Arc::new(move |_h, v: f64| bound * 0.5 * (1.0 + (v.abs() / v_scale).tanh()));
        Self::bounded_generic(bound, kappa, format!("tanh(|v|/{v_scale})"))
    }

    /// `κ ≡ B`, the constant coefficient at the bound.
    pub fn bounded_constant(bound: f64) -> Result<Self> {
        let kappa: KappaFn = Arc::new(move |_h, _v| bound);
        Self::bounded_generic(bound, kappa, "constant")
    }

    pub fn name(&self) -> &'static str {
        match self {
            FrictionModel::Frictionless => "none",
            FrictionModel::ConstAbsV { .. } => "const_abs_v",
            FrictionModel::LinearLevel { .. } => "linear_level",
            FrictionModel::ChannelWidth { .. } => "channel_width",
            FrictionModel::VelocityIndependent { .. } => "velocity_independent",
            FrictionModel::BoundedGeneric { .. } => "bounded",
        }
    }

    pub fn is_frictionless(&self) -> bool {
        matches!(self, FrictionModel::Frictionless)
    }

    /// `κ(h, v)`; fails for `h ≤ 0`.
    pub fn kappa(&self, h: f64, v: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!(
                "friction coefficient needs h > 0, got {h}"
            )));
        }
        Ok(self.kappa_unchecked(h, v))
    }

    /// `κ(h, v)` without the domain check; `h > 0` is the caller's job.
    #[inline]
    pub(crate) fn kappa_unchecked(&self, h: f64, v: f64) -> f64 {
        match self {
            FrictionModel::Frictionless => 0.0,
            FrictionModel::ConstAbsV { cf } => cf * v.abs(),
            FrictionModel::LinearLevel { r0, r1 } => r0 + r1 * h * v.abs(),
            FrictionModel::ChannelWidth { r, b } => {
                r * h.powf(-1.0 / 3.0) * (b + 2.0 * h).powf(4.0 / 3.0) * v.abs()
            }
            FrictionModel::VelocityIndependent { c, mu } => 3.0 * mu * c / (3.0 * mu + 4.0 * c * h),
            FrictionModel::BoundedGeneric { kappa, .. } => kappa(h, v),
        }
    }

    /// Velocity-independent bound `K(ω) ≥ h⁻²κ(h, v)` for `h ≥ ω`.
    ///
    /// Models whose coefficient grows without bound in `|v|` fail with
    /// [`Error::AssumptionHNotSatisfied`]; with the velocity coefficient set
    /// to zero they degenerate to velocity-independent models and pass.
    pub fn assumption_h_bound(&self, omega: f64, params: &PhysicalParams) -> Result<f64> {
        if !(omega > 0.0 && omega <= params.h_star()) {
            return Err(Error::Domain(format!(
                "level floor must lie in (0, h*] = (0, {}], got {omega}",
                params.h_star()
            )));
        }
        let w2 = omega * omega;
        match self {
            FrictionModel::Frictionless => Ok(0.0),
            FrictionModel::ConstAbsV { cf } if *cf == 0.0 => Ok(0.0),
            FrictionModel::LinearLevel { r0, r1 } if *r1 == 0.0 => Ok(r0 / w2),
            FrictionModel::ChannelWidth { r, .. } if *r == 0.0 => Ok(0.0),
            FrictionModel::ConstAbsV { .. }
            | FrictionModel::LinearLevel { .. }
            | FrictionModel::ChannelWidth { .. } => Err(Error::AssumptionHNotSatisfied(format!(
                "Assumption (H) not satisfied: {} friction grows without bound in |v|",
                self.name()
            ))),
            FrictionModel::VelocityIndependent { c, mu } => {
                Ok(3.0 * mu * c / (w2 * (3.0 * mu + 4.0 * c * omega)))
            }
            FrictionModel::BoundedGeneric { bound, .. } => Ok(bound / w2),
        }
    }

    /// `max{h⁻²κ(h, v) : ω₁ ≤ h ≤ H_max, |v| ≤ ω₂}`.
    ///
    /// Closed form for the built-in models, where `h⁻²κ` is nonincreasing in
    /// `h` and nondecreasing in `|v|`; grid search plus golden-section
    /// polish for [`FrictionModel::BoundedGeneric`].
    pub fn k_tilde(&self, omega1: f64, omega2: f64, params: &PhysicalParams) -> Result<f64> {
        if !(omega1 > 0.0 && omega1 < params.h_star()) {
            return Err(Error::Domain(format!(
                "level floor must lie in (0, h*) = (0, {}), got {omega1}",
                params.h_star()
            )));
        }
        if !(omega2.is_finite() && omega2 > 0.0) {
            return Err(Error::Domain(format!(
                "speed cap must be finite and > 0, got {omega2}"
            )));
        }
        match self {
            FrictionModel::BoundedGeneric { kappa, .. } => Ok(box_max(
                |h, v| kappa(h, v) / (h * h),
                (omega1, params.h_max()),
                (-omega2, omega2),
            )),
            _ => Ok(self.kappa_unchecked(omega1, omega2) / (omega1 * omega1)),
        }
    }

    /// `max_i h_i⁻²κ(h_i, v_i)` over the nodes.
    pub fn k_bar(&self, state: &LiquidState) -> f64 {
        k_bar_of(self, state.h(), state.v())
    }
}

pub(crate) fn k_bar_of(model: &FrictionModel, h: &[f64], v: &[f64]) -> f64 {
    if model.is_frictionless() {
        return 0.0;
    }
    h.iter()
        .zip(v)
        .map(|(&h, &v)| model.kappa_unchecked(h, v) / (h * h))
        .fold(0.0, f64::max)
}

/// Maximum of `f` over a box: coarse grid, then alternating golden-section
/// line searches in the cells around the best node.
fn box_max(f: impl Fn(f64, f64) -> f64, (h0, h1): (f64, f64), (v0, v1): (f64, f64)) -> f64 {
    let n = BOX_GRID - 1;
    let dh = (h1 - h0) / n as f64;
    let dv = (v1 - v0) / n as f64;
    let mut best = (f64::NEG_INFINITY, h0, v0);
    for i in 0..=n {
        let h = if i == n { h1 } else { h0 + i as f64 * dh };
        for j in 0..=n {
            let v = if j == n { v1 } else { v0 + j as f64 * dv };
            let y = f(h, v);
            if y > best.0 {
                best = (y, h, v);
            }
        }
    }
    let (mut y, mut h, mut v) = best;
    for _ in 0..20 {
        let (ha, hb) = ((h - dh).max(h0), (h + dh).min(h1));
        let hn = golden_max(|s| f(s, v), ha, hb);
        let (va, vb) = ((v - dv).max(v0), (v + dv).min(v1));
        let vn = golden_max(|s| f(hn, s), va, vb);
        let yn = f(hn, vn);
        if yn <= y {
            break;
        }
        let moved = (hn - h).abs() + (vn - v).abs();
        (y, h, v) = (yn, hn, vn);
        if moved <= GOLDEN_TOL {
            break;
        }
    }
    // Golden section never evaluates the endpoints; corners are common maxima.
    y.max(f(h0, v0)).max(f(h0, v1))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // Endpoints of the shrunk bracket may beat its midpoint on a boundary.
    [a, mid, b]
        .into_iter()
        .max_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap()
    }

    fn all_models() -> Vec<FrictionModel> {
        vec![
            FrictionModel::Frictionless,
            FrictionModel::const_abs_v(0.3).unwrap(),
            FrictionModel::linear_level(0.01, 0.2).unwrap(),
            FrictionModel::channel_width(0.02, 0.5).unwrap(),
            FrictionModel::velocity_independent(0.05, 0.1).unwrap(),
            FrictionModel::bounded_tanh(0.04, 0.3).unwrap(),
        ]
    }

    /// Dense grid max of `h⁻²κ`; the oracle for the closed forms.
    fn grid_max(model: &FrictionModel, h0: f64, h1: f64, vmax: f64, n: usize) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..=n {
            let h = h0 + (h1 - h0) * i as f64 / n as f64;
            for j in 0..=n {
                let v = -vmax + 2.0 * vmax * j as f64 / n as f64;
                best = best.max(model.kappa(h, v).unwrap() / (h * h));
            }
        }
        best
    }

    #[test]
    fn kappa_values() {
        assert_eq!(FrictionModel::Frictionless.kappa(0.3, 7.0).unwrap(), 0.0);
        let m = FrictionModel::const_abs_v(0.25).unwrap();
        assert_eq!(m.kappa(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(m.kappa(1.0, 2.0).unwrap(), 0.5);
        assert_eq!(m.kappa(1.0, -2.0).unwrap(), 0.5);
        let vi = FrictionModel::velocity_independent(0.05, 0.1).unwrap();
        let h = 0.4;
        assert!((vi.kappa(h, 3.0).unwrap() - 0.015 / (0.3 + 0.2 * h)).abs() < 1e-16);
        assert!((vi.kappa(1e-12, 0.0).unwrap() - 0.05).abs() < 1e-12);
        assert!(vi.kappa(0.0, 0.0).is_err());
        for model in all_models() {
            for &h in &[1e-3, 0.1, 1.0, 10.0] {
                for &v in &[-50.0, -1.0, 0.0, 0.5, 50.0] {
                    assert!(model.kappa(h, v).unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn assumption_h_bounds() {
        let p = params();
        let vi = FrictionModel::velocity_independent(0.05, 0.1).unwrap();
        let w = 0.3;
        let expect = 0.015 / (w * w * (0.3 + 0.2 * w));
        assert!((vi.assumption_h_bound(w, &p).unwrap() - expect).abs() < 1e-14);
        assert_eq!(
            FrictionModel::Frictionless
                .assumption_h_bound(0.5, &p)
                .unwrap(),
            0.0
        );
        for m in &all_models()[1..4] {
            assert!(matches!(
                m.assumption_h_bound(0.3, &p),
                Err(Error::AssumptionHNotSatisfied(_))
            ));
        }
        assert!(vi.assumption_h_bound(0.6, &p).is_err());
        assert!(vi.assumption_h_bound(0.0, &p).is_err());
        let b = FrictionModel::bounded_tanh(0.04, 0.3).unwrap();
        assert!((b.assumption_h_bound(0.2, &p).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn satisfying_models_respect_their_bound() {
        let p = params();
        for model in [
            FrictionModel::velocity_independent(0.05, 0.1).unwrap(),
            FrictionModel::bounded_tanh(0.04, 0.3).unwrap(),
            FrictionModel::linear_level(0.02, 0.0).unwrap(),
        ] {
            let mut prev = f64::INFINITY;
            for &w in &[0.05, 0.1, 0.2, 0.3, 0.5] {
                let k = model.assumption_h_bound(w, &p).unwrap();
                assert!(k <= prev);
                prev = k;
                assert!(grid_max(&model, w, p.h_max(), 10.0, 200) <= k * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn k_tilde_closed_forms_match_grid_oracle() {
        let p = params();
        let (w1, w2) = (0.3, 2.0);
        let cf = FrictionModel::const_abs_v(0.3).unwrap();
        assert!((cf.k_tilde(w1, w2, &p).unwrap() - 0.3 * w2 / (w1 * w1)).abs() < 1e-14);
        for model in all_models() {
            let k = model.k_tilde(w1, w2, &p).unwrap();
            let oracle = grid_max(&model, w1, p.h_max(), w2, 300);
            assert!(k >= oracle * (1.0 - 1e-12), "{model:?}: {k} < {oracle}");
            assert!(
                k <= oracle * (1.0 + 1e-9) + 1e-300,
                "{model:?}: {k} > {oracle}"
            );
        }
        assert!(cf.k_tilde(0.5, 1.0, &p).is_err());
        assert!(cf.k_tilde(0.3, 0.0, &p).is_err());
    }

    #[test]
    fn generic_box_max_finds_interior_peak() {
        let p = params();
        let kappa: KappaFn = Arc::new(|h: f64, v: f64| {
            let bump = (-((h - 0.7).powi(2) + (v - 0.37).powi(2)) * 40.0).exp();
            h * h * (0.1 + bump)
        });
        let m = FrictionModel::bounded_generic(10.0, kappa, "bump").unwrap();
        let k = m.k_tilde(0.2, 1.0, &p).unwrap();
        assert!((k - 1.1).abs() < 1e-12, "{k}");
    }

    #[test]
    fn k_bar_is_nodewise_max() {
        let p = params();
        let g = crate::state::Grid::new(33, 1.0).unwrap();
        let h = g.sample(|x| 0.5 + 0.1 * (2.0 * std::f64::consts::PI * x).cos());
        let v = g.sample(|x| 0.3 * (std::f64::consts::PI * x).sin());
        let st = LiquidState::projected(h, v, &p, &g).unwrap();
        for model in all_models() {
            let mut best: f64 = 0.0;
            for i in 0..33 {
                let (hi, vi) = (st.h()[i], st.v()[i]);
                best = best.max(model.kappa(hi, vi).unwrap() / (hi * hi));
            }
            assert_eq!(model.k_bar(&st), best);
            if let Ok(kt) = model.k_tilde(st.min_level(), st.max_speed(), &p) {
                assert!(model.k_bar(&st) <= kt * (1.0 + 1e-12));
            }
        }
        let eq = LiquidState::equilibrium(&p, &g);
        assert_eq!(FrictionModel::const_abs_v(1.0).unwrap().k_bar(&eq), 0.0);
    }
}
