//! Property checks of the functional inequalities and of simulated
//! trajectories.
//!
//! Sampled checks draw sample `i` from stream `i` of the seed, so results
//! are independent of the thread count. Margins are slacks of the checked
//! inequality: nonnegative means it holds.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::controller::{Check, FeasibilityReport, Theorem};
use crate::error::{Error, Result};
use crate::friction::FrictionModel;
use crate::functionals::sampling::{sample_rng, scale_to_level, SineSeries, StateSampler};
use crate::functionals::{
    clf_v, dissipation_bound, level_bounds, norm_lower_bound, norm_upper_bound, radius_r,
    speed_cap, u_level, FunctionalParams,
};
use crate::solver::Trajectory;
use crate::state::{
    central_derivative, state_norm_x, trapezoid_integral, Grid, LiquidState, PhysicalParams,
    TankState,
};

/// Fourier modes of sampled states.
pub const SAMPLE_MODES: usize = 8;
/// Points used for the sampled sup norm.
const SUP_SAMPLES: usize = 4096;
/// Slack for inequalities that are equalities on some inputs.
const ROUNDOFF: f64 = 1e-12;
/// Largest relative uptick of a Lyapunov functional counted as roundoff.
pub const UPTICK_TOLERANCE: f64 = 1e-8;
/// Fraction of a certified rate a fitted rate must reach.
pub const RATE_FACTOR: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    /// Inputs needed to re-run the check.
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationResult {
    pub name: String,
    pub samples: usize,
    /// Smallest slack over the clauses; for sampled checks, over the random
    /// samples only, since the equilibrium sample has slack exactly zero.
    pub worst_margin: f64,
    pub pass: bool,
    /// Individual inequalities, where a check has several.
    pub clauses: Vec<Check>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl VerificationResult {
    fn from_clauses(
        name: &str,
        samples: usize,
        clauses: Vec<Check>,
        parameters: serde_json::Value,
    ) -> Self {
        let worst_margin = clauses
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min);
        VerificationResult {
            name: name.to_string(),
            samples,
            worst_margin,
            pass: clauses.iter().all(|c| c.pass),
            clauses,
            notes: Vec::new(),
            provenance: Provenance {
                seed: None,
                config_hash: None,
                parameters,
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.provenance.seed = Some(seed);
        self
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.provenance.config_hash = Some(hash.into());
        self
    }

    pub fn clause(&self, name: &str) -> Option<&Check> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

/// `(big − small)/max(|big|, |small|)`, `0` when both vanish.
fn rel_slack(big: f64, small: f64) -> f64 {
    let scale = big.abs().max(small.abs());
    if scale == 0.0 {
        0.0
    } else {
        (big - small) / scale
    }
}

/// Slacks of sample 0 and the smallest slacks over samples `1..samples`,
/// NaN-propagating.
fn worst_split<const N: usize>(
    samples: usize,
    f: impl Fn(u64) -> Result<[f64; N]> + Sync,
) -> Result<([f64; N], [f64; N])> {
    let first = if samples > 0 {
        f(0)?
    } else {
        [f64::INFINITY; N]
    };
    let rest = (1..samples as u64).into_par_iter().map(&f).try_reduce(
        || [f64::INFINITY; N],
        |a, b| Ok(std::array::from_fn(|k| nan_min(a[k], b[k]))),
    )?;
    Ok((first, rest))
}

/// Overall worst slack per clause, and the worst over the random samples
/// alone; the equilibrium sample has slack exactly zero and would mask it.
fn combine<const N: usize>(split: ([f64; N], [f64; N]), samples: usize) -> ([f64; N], f64) {
    let (eq, rest) = split;
    let all = std::array::from_fn(|k| nan_min(eq[k], rest[k]));
    let reported = if samples > 1 { rest } else { eq };
    (
        all,
        reported.iter().fold(f64::INFINITY, |a, &b| nan_min(a, b)),
    )
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// A check that the worst slack is nonnegative.
fn slack_check(name: &str, worst: f64) -> Check {
    Check::non_strict(name, worst, 0.0)
}

fn sampler(params: &PhysicalParams, grid: &Grid) -> Result<StateSampler> {
    StateSampler::new(*params, *grid, SAMPLE_MODES)
}

/// Sample `i`: the equilibrium for `i = 0`, a random state otherwise.
fn state_sample(
    s: &StateSampler,
    params: &PhysicalParams,
    seed: u64,
    i: u64,
) -> Result<(TankState, LiquidState)> {
    if i == 0 {
        return Ok((
            TankState::at_rest(),
            LiquidState::equilibrium(params, s.grid()),
        ));
    }
    s.draw(&mut sample_rng(seed, i))
}

fn base_parameters(
    params: &PhysicalParams,
    fp: Option<&FunctionalParams>,
    grid: Option<&Grid>,
) -> serde_json::Value {
    serde_json::json!({
        "physical": params,
        "functional": fp.map(|f| serde_json::json!({
            "delta": f.delta, "q": f.q, "k": f.k, "beta": f.beta, "gamma": f.gamma
        })),
        "grid_n": grid.map(|g| g.n()),
    })
}

/// Nodewise level bounds `p₁(V) ≤ h ≤ p₂(V)` on random states.
pub fn verify_lemma1(
    samples: usize,
    seed: u64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
    grid: &Grid,
) -> Result<VerificationResult> {
    let s = sampler(params, grid)?;
    let split = worst_split(samples, |i| {
        let (t, st) = state_sample(&s, params, seed, i)?;
        let v = clf_v(&t, &st, params, fp, grid)?;
        let (p1, p2) = level_bounds(v, params, fp)?;
        Ok([(st.min_level() - p1).min(p2 - st.max_level())])
    })?;
    let (w, reported) = combine(split, samples);
    let clauses = vec![slack_check("level_bounds", w[0])];
    let mut r = VerificationResult::from_clauses(
        "lemma1_level_bounds",
        samples,
        clauses,
        base_parameters(params, Some(fp), Some(grid)),
    );
    r.worst_margin = reported;
    Ok(r.with_seed(seed))
}

/// Sup-norm and gradient inequalities for functions vanishing at both
/// ends, on random sine series with analytic derivative norms. Sample 0 is
/// the first eigenmode, where the gradient inequality is an equality.
pub fn verify_prop1(samples: usize, seed: u64, length: f64) -> Result<VerificationResult> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidParameter {
            name: "length",
            reason: format!("must be finite and > 0, got {length}"),
        });
    }
    let series = |i: u64| {
        if i == 0 {
            SineSeries {
                coeffs: vec![1.0],
                length,
            }
        } else {
            let mut rng = sample_rng(seed, i);
            let modes = rng.random_range(1..=SAMPLE_MODES);
            SineSeries::random(&mut rng, modes, length)
        }
    };
    let slacks = |phi: &SineSeries| {
        let d1 = phi.d1_norm();
        let d2 = phi.d2_norm();
        let sup = rel_slack((length / 3.0).sqrt() * d1, phi.sup_norm(SUP_SAMPLES));
        let grad = rel_slack(length * d2, PI * d1);
        (sup, grad)
    };
    let (sup, grad) = (0..samples as u64)
        .into_par_iter()
        .map(|i| slacks(&series(i)))
        .reduce(
            || (f64::INFINITY, f64::INFINITY),
            |a, b| (nan_min(a.0, b.0), nan_min(a.1, b.1)),
        );
    let first = series(0);
    let equality =
        (PI * first.d1_norm() - length * first.d2_norm()).abs() / (length * first.d2_norm());
    let clauses = vec![
        Check::non_strict("sup_norm_bound", sup, -ROUNDOFF),
        Check::non_strict("gradient_bound", grad, -ROUNDOFF),
        Check::non_strict("first_mode_equality", 1e-10, equality),
    ];
    let mut r = VerificationResult::from_clauses(
        "prop1_sobolev_bounds",
        samples,
        clauses,
        serde_json::json!({ "length": length }),
    );
    r.worst_margin = sup.min(grad);
    Ok(r.with_seed(seed))
}

/// Largest deviation size for the quadratic upper bound on `V`.
pub fn prop2_epsilon_limit(params: &PhysicalParams) -> f64 {
    let hs = params.h_star();
    hs.min(params.h_max() - hs) / params.length().sqrt()
}

/// Upper bound `V ≤ C·‖(ξ, w, h − h*, v)‖_X²` near equilibrium, on states
/// with `‖(0, w, h − h*, v)‖_X ≤ ε` and arbitrary `ξ ∈ [−1, 1]`.
pub fn verify_prop2(
    samples: usize,
    seed: u64,
    epsilon: f64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
    grid: &Grid,
) -> Result<VerificationResult> {
    let limit = prop2_epsilon_limit(params);
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(Error::Precondition(format!(
            "epsilon must lie in (0, {limit}), got {epsilon}"
        )));
    }
    let (g, mu, hmax, hs) = (params.g(), params.mu(), params.h_max(), params.h_star());
    let d = fp.delta;
    let c = (mu * mu / (hs - epsilon * params.length().sqrt()))
        .max((d + 1.0) * g / 2.0)
        .max((d + 2.0) * hmax / 2.0)
        .max(fp.q)
        .max(1.5 * fp.q * fp.k * fp.k);
    let s = sampler(params, grid)?;
    let split = worst_split(samples, |i| {
        let (t, st) = state_sample(&s, params, seed, i)?;
        let (t, st) = if i == 0 {
            (t, st)
        } else {
            let mut rng = sample_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i);
            let dev = state_norm_x(&TankState::new(0.0, t.w)?, &st, params, grid)?;
            let factor = epsilon * rng.random_range(0.0..1.0) / dev;
            let h: Vec<f64> = st.h().iter().map(|h| hs + factor * (h - hs)).collect();
            let v: Vec<f64> = st.v().iter().map(|v| factor * v).collect();
            let st = LiquidState::projected(h, v, params, grid)?;
            let xi = rng.random_range(-1.0..1.0);
            (TankState::new(xi, factor * t.w)?, st)
        };
        let dev = state_norm_x(&TankState::new(0.0, t.w)?, &st, params, grid)?;
        if dev > epsilon * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "sample {i} has deviation {dev} > {epsilon}"
            )));
        }
        let v = clf_v(&t, &st, params, fp, grid)?;
        let n2 = state_norm_x(&t, &st, params, grid)?.powi(2);
        Ok([rel_slack(c * n2, v)])
    })?;
    let (w, reported) = combine(split, samples);
    let mut p = base_parameters(params, Some(fp), Some(grid));
    p["epsilon"] = serde_json::json!(epsilon);
    let clauses = vec![slack_check("quadratic_upper_bound", w[0])];
    let mut r = VerificationResult::from_clauses("prop2_quadratic_bound", samples, clauses, p);
    r.worst_margin = reported;
    Ok(r.with_seed(seed))
}

/// Norm sandwich `V/G₂(V) ≤ ‖x‖_X² ≤ V·G₁(V)` and dissipation bound
/// `V/Λ(V) ≤ ‖h_x‖² + ∫h v_x² + ξ² + (w + kξ)²` on the level-bound sample
/// set rescaled to `V = u·R` with `u` uniform in `(0, 1)`.
pub fn verify_lemma34(
    samples: usize,
    seed: u64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
    grid: &Grid,
) -> Result<VerificationResult> {
    let big_r = radius_r(params, fp);
    let s = sampler(params, grid)?;
    let per_sample = |i: u64| -> Result<[f64; 3]> {
        let (t, st) = state_sample(&s, params, seed, i)?;
        let (t, st) = if i == 0 {
            (t, st)
        } else {
            let u = sample_rng(seed ^ 0x5851_f42d_4c95_7f2d, i).random_range(1e-6..1.0);
            let full = clf_v(&t, &st, params, fp, grid)?;
            if full <= u * big_r {
                (t, st)
            } else {
                scale_to_level(&t, &st, u * big_r, params, fp, grid)?
            }
        };
        let v = clf_v(&t, &st, params, fp, grid)?;
        if v >= big_r {
            return Err(Error::Precondition(format!(
                "sample {i} has V = {v} >= R = {big_r}"
            )));
        }
        let n2 = state_norm_x(&t, &st, params, grid)?.powi(2);
        let hx = central_derivative(st.h(), grid)?;
        let vx = central_derivative(st.v(), grid)?;
        let hx2 = trapezoid_integral(&hx.iter().map(|a| a * a).collect::<Vec<_>>(), grid)?;
        let hvx2 = trapezoid_integral(
            &st.h()
                .iter()
                .zip(&vx)
                .map(|(h, a)| h * a * a)
                .collect::<Vec<_>>(),
            grid,
        )?;
        let dissipation = hx2 + hvx2 + t.xi * t.xi + (t.w + fp.k * t.xi).powi(2);
        Ok([
            rel_slack(n2, v / norm_lower_bound(v, params, fp)),
            rel_slack(v * norm_upper_bound(v, params, fp), n2),
            rel_slack(dissipation, v / dissipation_bound(v, params, fp)),
        ])
    };
    let (w, reported) = combine(worst_split(samples, per_sample)?, samples);
    let clauses = vec![
        slack_check("norm_lower_sandwich", w[0]),
        slack_check("norm_upper_sandwich", w[1]),
        slack_check("dissipation_bound", w[2]),
    ];
    let mut r = VerificationResult::from_clauses(
        "lemma34_sandwich_dissipation",
        samples,
        clauses,
        base_parameters(params, Some(fp), Some(grid)),
    );
    r.worst_margin = reported;
    Ok(r.with_seed(seed))
}

/// Relative mismatch between finite-difference rates of `E` and `W` and
/// their dissipation identities along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyIdentityErrors {
    pub e: f64,
    pub w: f64,
    /// Interior samples compared.
    pub samples: usize,
}

/// Compares fourth-order central differences of `E(t)` and `W(t)` with
///
/// `dE/dt = −μ∫h v_x² + f∫h v − ∫κv²` and
/// `dW/dt = −μg‖h_x‖² + f∫(h v + μh_x) − ∫κv² − μ∫h⁻¹h_x κ v`
///
/// at each interior sample. Errors are `max|FD − rhs| / max|rhs|`.
pub fn energy_identity_errors(
    traj: &Trajectory,
    params: &PhysicalParams,
    friction: &FrictionModel,
) -> Result<EnergyIdentityErrors> {
    let n = traj.len();
    if traj.states.len() != n {
        return Err(Error::Precondition(
            "energy identities need the field snapshots".into(),
        ));
    }
    if n < 5 {
        return Err(Error::Precondition(format!(
            "need at least 5 samples, got {n}"
        )));
    }
    let dt = traj.times[1] - traj.times[0];
    for w in traj.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::Precondition("samples must be equally spaced".into()));
        }
    }
    if dt > 10.0 * traj.dt_max {
        return Err(Error::Precondition(format!(
            "sampling interval {dt} exceeds 10 solver steps of {}",
            traj.dt_max
        )));
    }
    let grid = &traj.grid;
    let (g, mu) = (params.g(), params.mu());
    let e: Vec<f64> = traj.diagnostics.iter().map(|d| d.e).collect();
    let w: Vec<f64> = traj.diagnostics.iter().map(|d| d.w_energy).collect();
    let fd =
        |a: &[f64], i: usize| (a[i - 2] - 8.0 * a[i - 1] + 8.0 * a[i + 1] - a[i + 2]) / (12.0 * dt);
    let rows: Vec<[f64; 4]> = (2..n - 2)
        .into_par_iter()
        .map(|i| -> Result<[f64; 4]> {
            let st = &traj.states[i];
            let f = traj.diagnostics[i].f;
            let (h, v) = (st.h(), st.v());
            let hx = central_derivative(h, grid)?;
            let vx = central_derivative(v, grid)?;
            let mut re = vec![0.0; h.len()];
            let mut rw = vec![0.0; h.len()];
            for j in 0..h.len() {
                let kv = friction.kappa(h[j], v[j])? * v[j];
                re[j] = -mu * h[j] * vx[j] * vx[j] + f * h[j] * v[j] - kv * v[j];
                rw[j] = -mu * g * hx[j] * hx[j] + f * (h[j] * v[j] + mu * hx[j])
                    - kv * v[j]
                    - mu * hx[j] * kv / h[j];
            }
            let re = trapezoid_integral(&re, grid)?;
            let rw = trapezoid_integral(&rw, grid)?;
            Ok([fd(&e, i), re, fd(&w, i), rw])
        })
        .collect::<Result<_>>()?;
    let rel = |lhs: usize, rhs: usize| {
        let err = rows
            .iter()
            .map(|r| (r[lhs] - r[rhs]).abs())
            .fold(0.0, f64::max);
        let scale = rows.iter().map(|r| r[rhs].abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    };
    Ok(EnergyIdentityErrors {
        e: rel(0, 1),
        w: rel(2, 3),
        samples: rows.len(),
    })
}

/// Energy identities within a relative `tolerance`.
pub fn verify_lemma2(
    traj: &Trajectory,
    params: &PhysicalParams,
    friction: &FrictionModel,
    tolerance: f64,
) -> Result<VerificationResult> {
    let err = energy_identity_errors(traj, params, friction)?;
    let clauses = vec![
        Check::non_strict("energy_e_identity", tolerance, err.e),
        Check::non_strict("energy_w_identity", tolerance, err.w),
    ];
    let p = serde_json::json!({
        "physical": params,
        "friction": format!("{friction:?}"),
        "grid_n": traj.grid.n(),
        "tolerance": tolerance,
    });
    Ok(VerificationResult::from_clauses(
        "lemma2_energy_identities",
        err.samples,
        clauses,
        p,
    ))
}

/// Accepted band of the error ratio under grid doubling for a
/// second-order scheme.
pub const CONVERGENCE_BAND: (f64, f64) = (3.5, 4.5);

/// Self-convergence of the energy identities: errors on a grid and on the
/// grid with half the spacing must shrink by a factor in
/// [`CONVERGENCE_BAND`].
pub fn verify_lemma2_convergence(
    coarse: &EnergyIdentityErrors,
    fine: &EnergyIdentityErrors,
) -> VerificationResult {
    let (lo, hi) = CONVERGENCE_BAND;
    let mut clauses = Vec::new();
    for (name, c, f) in [
        ("energy_e", coarse.e, fine.e),
        ("energy_w", coarse.w, fine.w),
    ] {
        let ratio = c / f;
        clauses.push(Check::non_strict(format!("{name}_ratio_low"), ratio, lo));
        clauses.push(Check::non_strict(format!("{name}_ratio_high"), hi, ratio));
    }
    let p = serde_json::json!({ "coarse": coarse, "fine": fine });
    VerificationResult::from_clauses(
        "lemma2_self_convergence",
        coarse.samples + fine.samples,
        clauses,
        p,
    )
}

/// Decay rate `−d ln y/dt` by least squares over the samples from `start`
/// on with `y > floor`.
pub fn fit_rate(times: &[f64], y: &[f64], start: usize, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(&y[start..])
        .take_while(|(_, &v)| v > floor)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Window floor of the rate fits, relative to the starting value.
const FIT_FLOOR: f64 = 1e-10;
/// Fraction of samples discarded as transient before fitting.
const FIT_SKIP: f64 = 0.05;

/// Decay estimates of a certified gain set along a trajectory:
/// monotone `V` (or `U` under the box certificate), sublevel membership,
/// positive spill margin, fitted rates of `V` and `‖v_x‖₂²`, and the
/// state-norm and gradient estimates. Uncertified gains yield a failed
/// result whose clauses are observations only.
pub fn verify_decay(
    traj: &Trajectory,
    report: &FeasibilityReport,
    params: &PhysicalParams,
) -> Result<VerificationResult> {
    let fp = report.gains.functional_params()?;
    let d = &traj.diagnostics;
    let n = d.len();
    if n < 2 {
        return Err(Error::Precondition(
            "decay check needs at least two samples".into(),
        ));
    }
    let r = report.r;
    let box_cert = report.theorem == Theorem::Theorem2;
    let mut clauses = Vec::new();
    let mut notes = Vec::new();

    let level = if box_cert { u_level(r, &fp) } else { r };
    let lyap: Vec<f64> = d.iter().map(|x| if box_cert { x.u } else { x.v }).collect();
    let set_name = if box_cert { "U" } else { "V" };
    clauses.push(Check::non_strict("initial_in_sublevel", level, lyap[0]));

    let floor = 1e-12 * lyap[0];
    let uptick = lyap
        .windows(2)
        .filter(|w| w[0] > floor)
        .map(|w| (w[1] - w[0]) / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    clauses.push(Check::non_strict(
        "monotone",
        UPTICK_TOLERANCE,
        uptick.max(-1.0),
    ));
    let peak = lyap.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    clauses.push(Check::non_strict("stays_in_sublevel", level, peak));
    let margin = d
        .iter()
        .map(|x| x.spill_margin)
        .fold(f64::INFINITY, f64::min);
    clauses.push(Check::strict("spill_margin_positive", margin, 0.0));
    if box_cert {
        let cap = speed_cap(r, params, &fp);
        let top = d.iter().map(|x| x.max_speed).fold(0.0, f64::max);
        clauses.push(Check::non_strict("speed_cap", cap, top));
    }
    if let Some(c) = &report.constants {
        let low = d.iter().map(|x| x.min_level).fold(f64::INFINITY, f64::min);
        clauses.push(Check::non_strict("level_floor", low, c.p1_r));
    }

    match &report.rates {
        Some(_) if d[0].v == 0.0 => {
            notes.push("trajectory starts at equilibrium; rate clauses hold trivially".into())
        }
        Some(rates) => {
            let start = ((n as f64) * FIT_SKIP).ceil() as usize;
            let v: Vec<f64> = d.iter().map(|x| x.v).collect();
            match fit_rate(&traj.times, &v, start.min(n - 1), FIT_FLOOR * v[0]) {
                Some(rate) => clauses.push(Check::non_strict(
                    "rate_v",
                    rate,
                    RATE_FACTOR * rates.lambda_v,
                )),
                None => {
                    clauses.push(Check::failed("rate_v"));
                    notes.push("too few samples above the fit floor for V".into());
                }
            }
            let vx2: Vec<f64> = d.iter().map(|x| x.vx_l2 * x.vx_l2).collect();
            let (argmax, vmax) =
                vx2.iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |a, (i, &x)| if x > a.1 { (i, x) } else { a },
                    );
            let start_g = start.max(argmax).min(n - 1);
            if vmax <= 0.0 {
                notes.push("velocity gradient vanishes identically".into());
            } else {
                match fit_rate(&traj.times, &vx2, start_g, FIT_FLOOR * vmax) {
                    Some(rate) => clauses.push(Check::non_strict(
                        "rate_vx_sq",
                        rate,
                        RATE_FACTOR * 2.0 * rates.lambda_bar,
                    )),
                    None => {
                        clauses.push(Check::failed("rate_vx_sq"));
                        notes.push(
                            "too few samples above the fit floor for the velocity gradient".into(),
                        );
                    }
                }
            }
            let x0 = d[0].norm_x;
            let g0 = d[0].vx_l2;
            let mut state_slack = f64::INFINITY;
            let mut grad_slack = f64::INFINITY;
            for (t, x) in traj.times.iter().zip(d) {
                let bound = rates.m * (-rates.lambda * t).exp() * x0;
                state_slack = nan_min(state_slack, rel_slack(bound, x.norm_x));
                let gbound = rates.m_bar * (-rates.lambda_bar * t).exp() * (x0 + g0);
                grad_slack = nan_min(grad_slack, rel_slack(gbound, x.vx_l2));
            }
            clauses.push(slack_check("state_norm_estimate", state_slack));
            clauses.push(slack_check("gradient_estimate", grad_slack));
        }
        None => notes.push("no certified rates; rate clauses skipped".into()),
    }

    let mut out = VerificationResult::from_clauses(
        "decay_estimates",
        n,
        clauses,
        serde_json::json!({
            "theorem": report.theorem,
            "r": r,
            "functional": set_name,
            "gains": report.gains,
            "grid_n": traj.grid.n(),
        }),
    );
    if !report.pass {
        out.pass = false;
        for c in &mut out.clauses {
            c.name = format!("observed_{}", c.name);
        }
        notes.push("gains are not certified; clauses are observations only".into());
    }
    if !traj.completed() {
        out.pass = false;
        notes.push(format!("run stopped early: {:?}", traj.termination));
    }
    out.notes = notes;
    Ok(out)
}
