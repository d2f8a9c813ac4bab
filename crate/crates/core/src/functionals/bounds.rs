//! Spill radius, the position-gain ceiling `θ`, and the constructive bound
//! functions used by the dissipation and norm-equivalence estimates.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::level::level_bounds_unchecked;
use crate::functionals::FunctionalParams;
use crate::state::PhysicalParams;

/// Largest value of `V` for which the level envelope stays inside
/// `(0, H_max)`.
pub fn radius_r(params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    let (g, mu, m, hmax) = (params.g(), params.mu(), params.mass(), params.h_max());
    let hs = params.h_star();
    let d = fp.delta;
    let gap = hmax - hs;
    let zeta1 = ((hmax / hs).sqrt() - 2.0 * (hs / hmax).sqrt())
        .max(3.0 * mu * d.sqrt() * gap / (4.0 * m * (1.0 + d) * (g * hs).sqrt()));
    let zeta2 =
        hs / gap * 2.0_f64.max(3.0 * mu * (d * hs).sqrt() / (4.0 * m * (1.0 + d) * g.sqrt()));
    2.0 * mu * (d * g * hs).sqrt() / 3.0 * gap * zeta1.min(zeta2)
}

/// Position-gain ceiling as a function of a guaranteed lower level bound
/// `floor`; `θ(r)` is this at `floor = p₁(r)` and `θ̃` at `floor = ω₁`.
pub fn theta_at_level(
    floor: f64,
    sigma: f64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
) -> f64 {
    let (g, mu, l, m, hmax) = (
        params.g(),
        params.mu(),
        params.length(),
        params.mass(),
        params.h_max(),
    );
    let d = fp.delta;
    let a = g * mu * d * PI * PI * floor;
    let tail = m * g * l * hmax * (d + 1.0).powi(2) + 2.0 * mu * mu * d * PI * PI * floor;
    sigma * a / (a + 2.0 * sigma * l * tail)
}

/// `θ(r)`. Fails when `p₁(r) ≤ 0`.
pub fn theta(r: f64, sigma: f64, params: &PhysicalParams, fp: &FunctionalParams) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "radius must be finite and >= 0, got {r}"
        )));
    }
    let p1 = level_bounds_unchecked(r, params, fp).0;
    if p1 <= 0.0 {
        return Err(Error::Domain(format!(
            "lower level bound p1({r}) = {p1} is not positive"
        )));
    }
    Ok(theta_at_level(p1, sigma, params, fp))
}

/// `Λ(s)`: `V ≤ Λ(V)·(‖h_x‖² + ∫h v_x² + ξ² + (w + kξ)²)`.
pub fn dissipation_bound(s: f64, params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    let (p1, p2) = level_bounds_unchecked(s.max(0.0), params, fp);
    dissipation_bound_at(p1, p2, params, fp)
}

fn dissipation_bound_at(p1: f64, p2: f64, params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    let (g, mu, l) = (params.g(), params.mu(), params.length());
    let d = fp.delta;
    let a = l * l * (d + 2.0) * p2 / (PI * PI * p1);
    let b = (d + 1.0) * g * l * l + 2.0 * mu * mu / p1;
    0.5 * a.max(b).max(fp.q * fp.k * fp.k).max(fp.q)
}

/// `G₂(s)`: `V / G₂(V) ≤ ‖(ξ, w, h − h*, v)‖_X²`.
pub fn norm_lower_bound(s: f64, params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    let p1 = level_bounds_unchecked(s.max(0.0), params, fp).0;
    let d = fp.delta;
    ((d + 2.0) * params.h_max() / 2.0)
        .max((d + 1.0) * params.g() / 2.0)
        .max(params.mu() * params.mu() / p1)
        .max(1.5 * fp.q * fp.k * fp.k)
        .max(fp.q)
}

/// `G₁(s)`: `‖(ξ, w, h − h*, v)‖_X² ≤ V·G₁(V)`.
pub fn norm_upper_bound(s: f64, params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    let p1 = level_bounds_unchecked(s.max(0.0), params, fp).0;
    let d = fp.delta;
    let mu = params.mu();
    let lo = (d * p1 / 2.0)
        .min(params.g() * (d + 1.0))
        .min(d * mu * mu / (params.h_max() * (d + 2.0)))
        .min(fp.q * fp.k * fp.k / 2.0)
        .min(fp.q / 3.0);
    2.0 / lo
}

/// Constants of the dissipation estimates, anchored at a radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub r: f64,
    pub sigma: f64,
    pub spill_radius: f64,
    pub p1_r: f64,
    pub p2_r: f64,
    pub theta_r: f64,
    pub lambda_r: f64,
    pub g1_r: f64,
    pub g2_r: f64,
    pub phi_r: f64,
    pub alpha_r: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Present when a level floor `ω₁` was supplied.
    pub omega1: Option<f64>,
    pub theta_tilde: Option<f64>,
    pub alpha_tilde: Option<f64>,
    #[serde(skip)]
    params: PhysicalParams,
    #[serde(skip)]
    fp: FunctionalParams,
}

impl LemmaConstants {
    /// Requires `r ∈ [0, R)` with `p₁(r) > 0`, and `ω₁ > 0` when given.
    pub fn new(
        r: f64,
        params: &PhysicalParams,
        fp: &FunctionalParams,
        sigma: f64,
        omega1: Option<f64>,
    ) -> Result<Self> {
        let big_r = radius_r(params, fp);
        if !(r >= 0.0 && r < big_r) {
            return Err(Error::Domain(format!(
                "radius {r} outside [0, R) with R = {big_r}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(crate::error::invalid(
                "sigma",
                format!("must be finite and > 0, got {sigma}"),
            ));
        }
        if let Some(w1) = omega1 {
            if !(w1.is_finite() && w1 > 0.0) {
                return Err(crate::error::invalid(
                    "omega1",
                    format!("must be finite and > 0, got {w1}"),
                ));
            }
        }
        let (p1_r, p2_r) = level_bounds_unchecked(r, params, fp);
        if p1_r <= 0.0 {
            return Err(Error::Domain(format!(
                "lower level bound p1({r}) = {p1_r} is not positive"
            )));
        }
        let (g, mu, l, m, hmax) = (
            params.g(),
            params.mu(),
            params.length(),
            params.mass(),
            params.h_max(),
        );
        let d = fp.delta;
        let (q, k) = (fp.q, fp.k);
        let theta_r = theta_at_level(p1_r, sigma, params, fp);
        let eps1 = (d + 1.0) * g * g * hmax / (mu * mu)
            + 3.0 * sigma * sigma * l * ((d + 1.0) * (d + 2.0) * m + d * q);
        let eps2 = 100.0 * (d + 1.0).powi(2) * big_r / (d * d * mu.powi(3));
        let (theta_tilde, alpha_tilde) = match omega1 {
            Some(w1) => {
                let tt = theta_at_level(w1, sigma, params, fp);
                let num = (mu * g)
                    .min(4.0 * q * k.powi(3))
                    .min(4.0 * q * (q * tt - k))
                    .min(mu * d);
                let den = (l * l * (d + 2.0) * hmax / (PI * PI * w1))
                    .max((d + 1.0) * g * l * l + 2.0 * mu * mu / w1)
                    .max(q * k * k)
                    .max(q);
                (Some(tt), Some(num / (2.0 * den)))
            }
            None => (None, None),
        };
        let mut out = LemmaConstants {
            r,
            sigma,
            spill_radius: big_r,
            p1_r,
            p2_r,
            theta_r,
            lambda_r: dissipation_bound_at(p1_r, p2_r, params, fp),
            g1_r: norm_upper_bound(r, params, fp),
            g2_r: norm_lower_bound(r, params, fp),
            phi_r: 0.0,
            alpha_r: 0.0,
            eps1,
            eps2,
            omega1,
            theta_tilde,
            alpha_tilde,
            params: *params,
            fp: *fp,
        };
        out.phi_r = out.phi(r);
        out.alpha_r = out.alpha(r);
        Ok(out)
    }

    pub fn lambda(&self, s: f64) -> f64 {
        dissipation_bound(s, &self.params, &self.fp)
    }

    pub fn g1(&self, s: f64) -> f64 {
        norm_upper_bound(s, &self.params, &self.fp)
    }

    pub fn g2(&self, s: f64) -> f64 {
        norm_lower_bound(s, &self.params, &self.fp)
    }

    /// `φ(s) = 2H_max·p₁(s) − p₁(r)·p₂(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        let (p1, p2) = level_bounds_unchecked(s.max(0.0), &self.params, &self.fp);
        2.0 * self.params.h_max() * p1 - self.p1_r * p2
    }

    /// `α(s)`, the rate coefficient of `V` in the `U` dissipation estimate.
    pub fn alpha(&self, s: f64) -> f64 {
        let (p1, p2) = level_bounds_unchecked(s.max(0.0), &self.params, &self.fp);
        let (g, mu, hmax) = (self.params.g(), self.params.mu(), self.params.h_max());
        let (d, q, k) = (self.fp.delta, self.fp.q, self.fp.k);
        let m = (mu * g / 4.0)
            .min(q * k.powi(3))
            .min(q * (q * self.theta_r - k))
            .min(mu * d / (4.0 * hmax) * (2.0 * hmax - self.p1_r * p2 / p1));
        m / dissipation_bound_at(p1, p2, &self.params, &self.fp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::level::{level_bounds, level_potential};

    fn fixture() -> (PhysicalParams, FunctionalParams) {
        let p = PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap();
        let fp = FunctionalParams::new(1.0, 1.0, 0.05, 1.0, 1.0).unwrap();
        (p, fp)
    }

    #[test]
    fn radius_is_positive_and_vanishes_at_the_brim() {
        let (p, fp) = fixture();
        let r = radius_r(&p, &fp);
        assert!(r > 0.0);
        let mut prev = f64::INFINITY;
        for &m in &[0.9, 0.99, 0.999, 0.99999] {
            let pp = PhysicalParams::new(9.81, 0.1, 1.0, m, 1.0).unwrap();
            let rr = radius_r(&pp, &fp);
            assert!(rr > 0.0 && rr < prev);
            prev = rr;
        }
        assert!(prev < 1e-8);
    }

    #[test]
    fn envelope_inside_walls_below_radius() {
        for &(m, hmax, delta) in &[
            (0.5, 1.0, 1.0),
            (0.3, 2.0, 0.2),
            (0.9, 1.0, 10.0),
            (1.5, 4.0, 3.0),
        ] {
            let p = PhysicalParams::new(9.81, 0.1, 1.0, m, hmax).unwrap();
            let fp = FunctionalParams::new(delta, 1.0, 0.05, 1.0, 1.0).unwrap();
            let r = radius_r(&p, &fp);
            for i in 0..10_000 {
                let s = r * i as f64 / 10_000.0;
                let (a, b) = level_bounds(s, &p, &fp).unwrap();
                assert!(a > 0.0 && b < hmax, "m={m} s={s} p1={a} p2={b}");
            }
        }
    }

    #[test]
    fn positivity_threshold_of_lower_bound() {
        let (p, fp) = fixture();
        let hs = p.h_star();
        let (mu, g, d, l) = (p.mu(), p.g(), fp.delta, p.length());
        let thr = mu * hs * (4.0 / 3.0 * (d * g * hs).sqrt()).max(mu * d / (2.0 * l * (1.0 + d)));
        for i in 0..2000 {
            let s = thr * i as f64 / 2000.0;
            assert!(level_bounds(s, &p, &fp).unwrap().0 > 0.0);
        }
    }

    #[test]
    fn theta_is_increasing_in_floor_and_decreasing_in_radius() {
        let (p, fp) = fixture();
        let r_max = radius_r(&p, &fp);
        let mut prev = f64::INFINITY;
        for i in 0..500 {
            let r = r_max * i as f64 / 500.0;
            let t = theta(r, 1.0, &p, &fp).unwrap();
            assert!(t > 0.0 && t <= prev * (1.0 + 1e-15));
            prev = t;
        }
        for i in 1..200 {
            let a = 0.5 * i as f64 / 200.0;
            let da = 1e-6;
            let slope =
                (theta_at_level(a + da, 1.0, &p, &fp) - theta_at_level(a, 1.0, &p, &fp)) / da;
            assert!(slope > 0.0);
        }
        let p1 = level_bounds(0.5 * r_max, &p, &fp).unwrap().0;
        let omega1 = 0.9 * p1;
        assert!(theta(0.5 * r_max, 1.0, &p, &fp).unwrap() > theta_at_level(omega1, 1.0, &p, &fp));
    }

    #[test]
    fn theta_at_fixture_radius() {
        let (p, fp) = fixture();
        let r = 0.5 * radius_r(&p, &fp);
        let p1 = level_bounds(r, &p, &fp).unwrap().0;
        let (g, mu, pi2) = (9.81, 0.1, PI * PI);
        let num = g * mu * pi2 * p1;
        let expect = num / (num + 2.0 * (0.5 * g * 1.0 * 4.0 + 2.0 * mu * mu * pi2 * p1));
        assert!((theta(r, 1.0, &p, &fp).unwrap() - expect).abs() < 1e-15);
        assert!(theta(-1.0, 1.0, &p, &fp).is_err());
    }

    #[test]
    fn bound_functions_nondecreasing() {
        let (p, fp) = fixture();
        let r = 0.9 * radius_r(&p, &fp);
        let c = LemmaConstants::new(r, &p, &fp, 1.0, Some(0.3)).unwrap();
        let (mut a, mut b, mut e) = (0.0, 0.0, 0.0);
        for i in 0..=1000 {
            let s = r * i as f64 / 1000.0;
            let (la, g1, g2) = (c.lambda(s), c.g1(s), c.g2(s));
            assert!(la >= a && g1 >= b && g2 >= e);
            (a, b, e) = (la, g1, g2);
        }
        assert_eq!(c.lambda(r), c.lambda_r);
        assert_eq!(c.phi(r), c.phi_r);
    }

    #[test]
    fn constants_by_hand() {
        let (p, fp) = fixture();
        let r = 0.5 * radius_r(&p, &fp);
        let c = LemmaConstants::new(r, &p, &fp, 2.0, Some(0.4)).unwrap();
        let eps1 = 2.0 * 9.81 * 9.81 / 0.01 + 3.0 * 4.0 * (2.0 * 3.0 * 0.5 + 1.0);
        assert!((c.eps1 - eps1).abs() < 1e-9 * eps1);
        let eps2 = 100.0 * 4.0 * c.spill_radius / 1e-3;
        assert!((c.eps2 - eps2).abs() < 1e-12 * eps2);
        let tt = c.theta_tilde.unwrap();
        let num = (0.981_f64)
            .min(4.0 * 0.05_f64.powi(3))
            .min(4.0 * (tt - 0.05))
            .min(0.1);
        let den = (3.0 / (PI * PI * 0.4))
            .max(2.0 * 9.81 + 0.02 / 0.4)
            .max(0.0025)
            .max(1.0);
        assert!((c.alpha_tilde.unwrap() - num / (2.0 * den)).abs() < 1e-15);
        assert!(LemmaConstants::new(c.spill_radius, &p, &fp, 1.0, None).is_err());
        assert!(LemmaConstants::new(r, &p, &fp, 1.0, None)
            .unwrap()
            .alpha_tilde
            .is_none());
    }

    #[test]
    fn level_potential_matches_envelope_branch() {
        // The lower potential branch binds for small s at the fixture.
        let (p, fp) = fixture();
        let s = 1e-4;
        let (a, _) = level_bounds(s, &p, &fp).unwrap();
        let c = 1.0 / (0.1 * 9.81_f64.sqrt());
        let direct = 0.5 - (2.0 * 0.5 * 2.0 / 1.0_f64).sqrt() / 0.1 * s.sqrt();
        if a > direct {
            assert!((level_potential(a, 0.5) + c * s).abs() < 1e-12);
        } else {
            assert_eq!(a, direct);
        }
    }
}
