//! Momentum feedback law and gain-feasibility certification.
//!
//! Every inequality is recorded as a [`Check`] of the form `lhs > rhs` (or
//! `lhs ≥ rhs`) with its relative slack, so a report states not only whether
//! a gain set is certified but by how much.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::friction::FrictionModel;
use crate::functionals::{
    largest_level_with_floor, level_bounds_unchecked, radius_r, speed_cap, theta_at_level, u_level,
    FunctionalParams, LemmaConstants,
};
use crate::state::{trapezoid_map2, Grid, LiquidState, PhysicalParams, TankState};

/// Controller gains and the weights of the Lyapunov functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub sigma: f64,
    pub k: f64,
    pub q: f64,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Gains {
    pub fn new(sigma: f64, k: f64, q: f64, delta: f64, beta: f64, gamma: f64) -> Result<Self> {
        let g = Gains {
            sigma,
            k,
            q,
            delta,
            beta,
            gamma,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be finite and > 0, got {}", self.sigma),
            ));
        }
        self.functional_params().map(|_| ())
    }

    pub fn functional_params(&self) -> Result<FunctionalParams> {
        FunctionalParams::new(self.delta, self.q, self.k, self.beta, self.gamma)
    }

    fn fp(&self) -> FunctionalParams {
        FunctionalParams {
            delta: self.delta,
            q: self.q,
            k: self.k,
            beta: self.beta,
            gamma: self.gamma,
        }
    }
}

/// `f = −σ((δ+1)∫h v + μ(h(L) − h(0)) − q(w + kξ))`.
pub fn feedback(
    tank: &TankState,
    state: &LiquidState,
    gains: &Gains,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<f64> {
    grid.check_len(state.h())?;
    Ok(feedback_raw(
        tank,
        state.h(),
        state.v(),
        gains,
        params.mu(),
        grid.dx(),
    ))
}

#[inline]
pub(crate) fn feedback_raw(
    tank: &TankState,
    h: &[f64],
    v: &[f64],
    gains: &Gains,
    mu: f64,
    dx: f64,
) -> f64 {
    let momentum = trapezoid_map2(h, v, dx, |h, v| h * v);
    let wall_diff = h[h.len() - 1] - h[0];
    -gains.sigma
        * ((gains.delta + 1.0) * momentum + mu * wall_diff - gains.q * (tank.w + gains.k * tank.xi))
}

/// One certified inequality `lhs > rhs` (strict) or `lhs ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(lhs − rhs)/|rhs|`, or `lhs − rhs` when `rhs = 0`.
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    pub fn strict(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::build(name.into(), lhs, rhs, lhs > rhs)
    }

    pub fn non_strict(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::build(name.into(), lhs, rhs, lhs >= rhs)
    }

    /// A hypothesis that could not be evaluated.
    pub fn failed(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NEG_INFINITY,
            pass: false,
        }
    }

    fn build(name: String, lhs: f64, rhs: f64, holds: bool) -> Self {
        let margin = if !(lhs.is_finite() && rhs.is_finite()) {
            if holds {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else if rhs != 0.0 {
            (lhs - rhs) / rhs.abs()
        } else {
            lhs - rhs
        };
        Check {
            name,
            lhs,
            rhs,
            margin,
            pass: holds && !lhs.is_nan() && !rhs.is_nan(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Friction satisfying the velocity-independent bound; certifies the
    /// sublevel set of `V`.
    Theorem1,
    /// General friction on a level/speed box; certifies the sublevel set
    /// of `U`.
    Theorem2,
    /// `κ ≡ 0`, where the friction hypothesis is void.
    Corollary1,
}

/// Rate constants of the exponential estimates under a certified gain set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRates {
    /// Rate of `V`: `dV/dt ≤ −λ_V·V`.
    pub lambda_v: f64,
    /// Rate of `U`: `dU/dt ≤ −λ_U·U`.
    pub lambda_u: f64,
    /// State-norm estimate `‖x(t)‖ ≤ M·exp(−λt)·‖x(0)‖`.
    pub m: f64,
    pub lambda: f64,
    /// Gradient estimate `‖v_x(t)‖₂ ≤ M̄·exp(−λ̄t)·(‖x(0)‖ + ‖v_x(0)‖₂)`.
    pub m_bar: f64,
    pub lambda_bar: f64,
    /// Friction bound the rates were computed with.
    pub friction_bound: f64,
}

/// Which friction bound the rates use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateBasis {
    /// `K(p₁(r))` from the velocity-independent bound.
    VelocityIndependent { k_at_floor: f64 },
    /// `K̃` on the level/speed box.
    Box { k_tilde: f64 },
}

/// Decay rates of `V` and `U` and the constants of the norm estimates.
/// Fails unless both rates are positive.
pub fn decay_rates(
    gains: &Gains,
    r: f64,
    basis: RateBasis,
    params: &PhysicalParams,
) -> Result<DecayRates> {
    let fp = gains.functional_params()?;
    let c = LemmaConstants::new(r, params, &fp, gains.sigma, None)?;
    rates_from(gains, &c, basis, params)
}

fn rates_from(
    gains: &Gains,
    c: &LemmaConstants,
    basis: RateBasis,
    params: &PhysicalParams,
) -> Result<DecayRates> {
    let (g, mu, l, hmax) = (params.g(), params.mu(), params.length(), params.h_max());
    let (d, q, k, gamma, beta) = (gains.delta, gains.q, gains.k, gains.gamma, gains.beta);
    let gain_slack = q * (q * c.theta_r - k);
    let (omega, kb) = match basis {
        RateBasis::VelocityIndependent { k_at_floor } => {
            let w = (mu * g / 4.0)
                .min(mu * d * c.phi_r / (2.0 * hmax * c.p1_r))
                .min(q * k.powi(3))
                .min(gain_slack);
            (w, k_at_floor)
        }
        RateBasis::Box { k_tilde } => {
            let w = (mu * g / 4.0)
                .min(q * k.powi(3))
                .min(gain_slack)
                .min(mu * d / 2.0);
            (w, k_tilde)
        }
    };
    let lambda_v = omega / c.lambda_r;
    let lambda_u = ((d * gamma * c.phi_r / hmax + PI * PI / (l * l)) * mu / 2.0)
        .min(c.alpha_r - 5.0 * (hmax * kb * kb + c.eps1) / (d * mu * gamma));
    if !(lambda_v > 0.0 && lambda_u > 0.0) {
        return Err(Error::Precondition(format!(
            "decay rates are not positive (lambda_V = {lambda_v:e}, lambda_U = {lambda_u:e})"
        )));
    }
    let omega_bar = 2.0 * (1.0 + gamma) * (1.0 + c.g2_r) * (beta * c.r).exp();
    Ok(DecayRates {
        lambda_v,
        lambda_u,
        m: (c.g1_r * c.g2_r).sqrt(),
        lambda: lambda_v / 2.0,
        m_bar: omega_bar.sqrt(),
        lambda_bar: lambda_u / 2.0,
        friction_bound: kb,
    })
}

/// Outcome of a certification attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub theorem: Theorem,
    pub pass: bool,
    pub r: f64,
    #[serde(rename = "R")]
    pub spill_radius: f64,
    /// Hypotheses of the theorem; `pass` is their conjunction.
    pub checks: Vec<Check>,
    /// Conditions on `β, γ` behind the gradient estimate. Reported, not
    /// gating.
    pub estimate_checks: Vec<Check>,
    pub gains: Gains,
    pub friction: String,
    pub omega: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    /// Present when the checks pass and the rates are positive.
    pub rates: Option<DecayRates>,
    pub constants: Option<LemmaConstants>,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn radius_checks(r: f64, big_r: f64, checks: &mut Vec<Check>) {
    checks.push(Check::non_strict("radius_nonnegative", r, 0.0));
    checks.push(Check::strict("radius_below_spill_radius", big_r, r));
}

/// Hypotheses of the velocity-independent-friction theorem at level floor
/// `ω` and radius `r`. With `κ ≡ 0` this is the frictionless corollary.
pub fn check_theorem1(
    gains: &Gains,
    omega: f64,
    r: f64,
    friction: &FrictionModel,
    params: &PhysicalParams,
) -> Result<FeasibilityReport> {
    gains.validate()?;
    let fp = gains.fp();
    let (g, mu) = (params.g(), params.mu());
    let big_r = radius_r(params, &fp);
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let k_omega = match friction.assumption_h_bound(omega, params) {
        Ok(k) => {
            checks.push(Check::strict(
                "friction_dominance",
                2.0 * g * (gains.delta + 1.0),
                mu * k,
            ));
            Some(k)
        }
        Err(e) => {
            checks.push(Check::failed("assumption_h"));
            notes.push(e.to_string());
            None
        }
    };
    radius_checks(r, big_r, &mut checks);
    let in_range = r >= 0.0 && r.is_finite();
    let (p1_r, _) = if in_range {
        level_bounds_unchecked(r, params, &fp)
    } else {
        (f64::NAN, f64::NAN)
    };
    checks.push(Check::non_strict("level_floor", p1_r, omega));
    let theta_r = if p1_r > 0.0 {
        theta_at_level(p1_r, gains.sigma, params, &fp)
    } else {
        f64::NAN
    };
    checks.push(Check::strict("position_gain", gains.q * theta_r, gains.k));

    let pass = checks.iter().all(|c| c.pass);
    let mut estimate_checks = Vec::new();
    let mut rates = None;
    let mut constants = None;
    if let Ok(c) = LemmaConstants::new(r, params, &fp, gains.sigma, None) {
        let hmax = params.h_max();
        let k_floor = k_omega.and_then(|_| {
            friction
                .assumption_h_bound(c.p1_r.min(params.h_star()), params)
                .ok()
        });
        if let Some(kf) = k_floor {
            let d = gains.delta;
            estimate_checks.push(Check::non_strict(
                "beta_gamma_product",
                gains.beta * gains.gamma,
                4.0 * hmax * c.eps2 / (mu * d * c.p1_r * c.p1_r * c.phi_r),
            ));
            estimate_checks.push(Check::non_strict(
                "beta_floor",
                gains.beta,
                20.0 * params.length() * hmax / (3.0 * mu * mu * d * c.phi_r),
            ));
            estimate_checks.push(Check::strict(
                "gamma_floor",
                gains.gamma,
                5.0 * (hmax * kf * kf + c.eps1) / (d * mu * c.alpha_r),
            ));
            if pass {
                match rates_from(
                    gains,
                    &c,
                    RateBasis::VelocityIndependent { k_at_floor: kf },
                    params,
                ) {
                    Ok(rt) => rates = Some(rt),
                    Err(e) => notes.push(e.to_string()),
                }
            }
        }
        constants = Some(c);
    }
    let theorem = if friction.is_frictionless() {
        Theorem::Corollary1
    } else {
        Theorem::Theorem1
    };
    Ok(FeasibilityReport {
        theorem,
        pass,
        r,
        spill_radius: big_r,
        checks,
        estimate_checks,
        gains: *gains,
        friction: friction.name().to_string(),
        omega: Some(omega),
        omega1: None,
        omega2: None,
        rates,
        constants,
        notes,
    })
}

/// Hypotheses of the general-friction theorem on the box `h ≥ ω₁`,
/// `|v| ≤ ω₂`.
pub fn check_theorem2(
    gains: &Gains,
    omega1: f64,
    omega2: f64,
    r: f64,
    friction: &FrictionModel,
    params: &PhysicalParams,
) -> Result<FeasibilityReport> {
    gains.validate()?;
    let fp = gains.fp();
    let (g, mu, l, hmax) = (params.g(), params.mu(), params.length(), params.h_max());
    let d = gains.delta;
    let big_r = radius_r(params, &fp);
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let k_tilde = match friction.k_tilde(omega1, omega2, params) {
        Ok(k) => {
            checks.push(Check::strict(
                "friction_dominance",
                2.0 * g * (d + 1.0),
                mu * k,
            ));
            Some(k)
        }
        Err(e) => {
            checks.push(Check::failed("friction_box_bound"));
            notes.push(e.to_string());
            None
        }
    };
    let theta_tilde = theta_at_level(omega1, gains.sigma, params, &fp);
    checks.push(Check::strict(
        "position_gain",
        gains.q * theta_tilde,
        gains.k,
    ));
    radius_checks(r, big_r, &mut checks);
    let p1_r = if r >= 0.0 && r.is_finite() {
        level_bounds_unchecked(r, params, &fp).0
    } else {
        f64::NAN
    };
    checks.push(Check::strict("level_floor", p1_r, omega1));
    checks.push(Check::strict(
        "speed_cap",
        omega2,
        speed_cap(r, params, &fp),
    ));

    let mut constants = None;
    let mut rates = None;
    match LemmaConstants::new(
        r.clamp(0.0, f64::MAX),
        params,
        &fp,
        gains.sigma,
        Some(omega1),
    ) {
        Ok(c) => {
            let at = c.alpha_tilde.unwrap_or(f64::NAN);
            let kt = k_tilde.unwrap_or(f64::NAN);
            let gamma_rhs = if at > 0.0 {
                5.0 * (hmax * kt * kt + c.eps1) / (d * mu * at)
            } else {
                f64::INFINITY
            };
            checks.push(Check::strict("gamma_floor", gains.gamma, gamma_rhs));
            let beta_rhs = (4.0 * c.eps2
                / ((2.0 * at + mu * d * gains.gamma * omega1) * omega1 * omega1))
                .max(20.0 * l / (3.0 * mu * mu * d * omega1));
            checks.push(Check::strict("beta_floor", gains.beta, beta_rhs));
            if checks.iter().all(|c| c.pass) {
                match rates_from(gains, &c, RateBasis::Box { k_tilde: kt }, params) {
                    Ok(rt) => rates = Some(rt),
                    Err(e) => notes.push(e.to_string()),
                }
            }
            constants = Some(c);
        }
        Err(e) => {
            checks.push(Check::failed("gamma_floor"));
            checks.push(Check::failed("beta_floor"));
            notes.push(e.to_string());
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(FeasibilityReport {
        theorem: Theorem::Theorem2,
        pass,
        r,
        spill_radius: big_r,
        checks,
        estimate_checks: Vec::new(),
        gains: *gains,
        friction: friction.name().to_string(),
        omega: None,
        omega1: Some(omega1),
        omega2: Some(omega2),
        rates,
        constants,
        notes,
    })
}

/// Certification target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case")]
pub enum Target {
    /// Level floor `ω ∈ (0, h*]`.
    Theorem1 { omega: f64 },
    /// Level floor `ω₁ ∈ (0, h*)` and speed cap `ω₂ > 0`.
    Theorem2 { omega1: f64, omega2: f64 },
}

/// Optional overrides for [`suggest_gains`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestHints {
    pub sigma: f64,
    pub q: f64,
    /// Smallest `δ` to use; raised further if friction demands it.
    pub delta: f64,
    /// Relative margin on each strict inequality.
    pub margin: f64,
    /// `k` as a fraction of its ceiling `qθ`.
    pub k_fraction: f64,
    /// Preferred radius as a fraction of the spill radius.
    pub r_fraction: f64,
}

impl Default for SuggestHints {
    fn default() -> Self {
        SuggestHints {
            sigma: 1.0,
            q: 1.0,
            delta: 1.0,
            margin: 0.25,
            k_fraction: 0.5,
            r_fraction: 0.5,
        }
    }
}

impl SuggestHints {
    fn validate(&self) -> Result<()> {
        for (name, x) in [("sigma", self.sigma), ("q", self.q), ("delta", self.delta)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {x}")));
            }
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(invalid(
                "margin",
                format!("must be finite and >= 0, got {}", self.margin),
            ));
        }
        for (name, x) in [
            ("k_fraction", self.k_fraction),
            ("r_fraction", self.r_fraction),
        ] {
            if !(x > 0.0 && x < 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1), got {x}")));
            }
        }
        Ok(())
    }
}

/// Suggested gains, radius, and the report certifying them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suggestion {
    pub gains: Gains,
    pub r: f64,
    pub report: FeasibilityReport,
}

/// Smallest admissible `δ ≥ floor` with `2g(δ+1) ≥ (1 + margin)·μK`.
fn delta_for(k_bound: f64, hints: &SuggestHints, params: &PhysicalParams) -> f64 {
    let need = (1.0 + hints.margin) * params.mu() * k_bound / (2.0 * params.g()) - 1.0;
    hints.delta.max(need)
}

/// Deterministic gains passing the requested theorem's checks with the
/// configured margins; fails with [`Error::Infeasible`] otherwise.
pub fn suggest_gains(
    target: Target,
    friction: &FrictionModel,
    params: &PhysicalParams,
    hints: &SuggestHints,
) -> Result<Suggestion> {
    hints.validate()?;
    match target {
        Target::Theorem1 { omega } => suggest_theorem1(omega, friction, params, hints),
        Target::Theorem2 { omega1, omega2 } => {
            suggest_theorem2(omega1, omega2, friction, params, hints)
        }
    }
}

fn placeholder(delta: f64, q: f64) -> FunctionalParams {
    FunctionalParams {
        delta,
        q,
        k: 1.0,
        beta: 1.0,
        gamma: 1.0,
    }
}

fn finish(report: FeasibilityReport) -> Result<Suggestion> {
    if !report.pass {
        let failed: Vec<String> = report.failed_checks().map(|c| c.name.clone()).collect();
        let mut msg = format!("checks failed: {}", failed.join(", "));
        for n in &report.notes {
            msg.push_str("; ");
            msg.push_str(n);
        }
        return Err(Error::Infeasible(msg));
    }
    Ok(Suggestion {
        gains: report.gains,
        r: report.r,
        report,
    })
}

fn suggest_theorem1(
    omega: f64,
    friction: &FrictionModel,
    params: &PhysicalParams,
    hints: &SuggestHints,
) -> Result<Suggestion> {
    let k_omega = friction
        .assumption_h_bound(omega, params)
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    let delta = delta_for(k_omega, hints, params);
    let fp0 = placeholder(delta, hints.q);
    let big_r = radius_r(params, &fp0);
    let r = largest_level_with_floor(omega, hints.r_fraction * big_r, params, &fp0)
        .ok_or_else(|| Error::Infeasible(format!("level floor {omega} exceeds h*")))?;
    let (p1_r, _) = level_bounds_unchecked(r, params, &fp0);
    let theta_r = theta_at_level(p1_r, hints.sigma, params, &fp0);
    let k = hints.k_fraction * hints.q * theta_r;
    let fp1 = FunctionalParams { k, ..fp0 };
    let c = LemmaConstants::new(r, params, &fp1, hints.sigma, None)?;
    let k_floor = friction.assumption_h_bound(c.p1_r.min(params.h_star()), params)?;
    let (mu, hmax, l) = (params.mu(), params.h_max(), params.length());
    let grow = 1.0 + hints.margin;
    let gamma = grow * 5.0 * (hmax * k_floor * k_floor + c.eps1) / (delta * mu * c.alpha_r);
    let beta = grow
        * (20.0 * l * hmax / (3.0 * mu * mu * delta * c.phi_r))
            .max(4.0 * hmax * c.eps2 / (mu * delta * c.p1_r * c.p1_r * c.phi_r) / gamma);
    let gains = Gains::new(hints.sigma, k, hints.q, delta, beta, gamma)?;
    finish(check_theorem1(&gains, omega, r, friction, params)?)
}

/// Largest `s ∈ [0, s_max]` with `pred(s)`, for `pred` true at 0 and
/// monotone (true then false).
fn largest_with(s_max: f64, pred: impl Fn(f64) -> bool) -> f64 {
    if pred(s_max) {
        return s_max;
    }
    let (mut lo, mut hi) = (0.0, s_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * s_max {
            break;
        }
    }
    lo
}

fn suggest_theorem2(
    omega1: f64,
    omega2: f64,
    friction: &FrictionModel,
    params: &PhysicalParams,
    hints: &SuggestHints,
) -> Result<Suggestion> {
    let k_tilde = friction
        .k_tilde(omega1, omega2, params)
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    let delta = delta_for(k_tilde, hints, params);
    let fp0 = placeholder(delta, hints.q);
    let theta_tilde = theta_at_level(omega1, hints.sigma, params, &fp0);
    let k = hints.k_fraction * hints.q * theta_tilde;
    let fp1 = FunctionalParams { k, ..fp0 };
    // α̃, ε₁ and ε₂ do not depend on r.
    let c = LemmaConstants::new(0.0, params, &fp1, hints.sigma, Some(omega1))?;
    let at = c.alpha_tilde.unwrap_or(f64::NAN);
    let (mu, hmax, l) = (params.mu(), params.h_max(), params.length());
    let grow = 1.0 + hints.margin;
    let gamma = grow * 5.0 * (hmax * k_tilde * k_tilde + c.eps1) / (delta * mu * at);
    let beta = grow
        * (4.0 * c.eps2 / ((2.0 * at + mu * delta * gamma * omega1) * omega1 * omega1))
            .max(20.0 * l / (3.0 * mu * mu * delta * omega1));
    let fp = FunctionalParams { beta, gamma, ..fp1 };

    let big_r = radius_r(params, &fp);
    let r_pref = hints.r_fraction * big_r;
    let cap_sq = 1.5 * omega2 * omega2 / l;
    let r_floor = largest_with(big_r, |s| level_bounds_unchecked(s, params, &fp).0 > omega1);
    let r_speed = largest_with(big_r, |s| u_level(s, &fp) < cap_sq);
    let r = r_pref.min(r_floor / grow).min(r_speed / grow);
    if !(r > 0.0) {
        return Err(Error::Infeasible(format!(
            "no positive radius satisfies the level floor {omega1} and speed cap {omega2}"
        )));
    }
    let gains = Gains::new(hints.sigma, k, hints.q, delta, beta, gamma)?;
    finish(check_theorem2(&gains, omega1, omega2, r, friction, params)?)
}
