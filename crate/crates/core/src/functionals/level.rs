//! The level potential `G` and the level envelope `p₁ ≤ h ≤ p₂`.

use crate::error::{Error, Result};
use crate::functionals::FunctionalParams;
use crate::state::PhysicalParams;

/// Relative tolerance of [`level_potential_inv`].
pub const INVERSE_RTOL: f64 = 1e-12;

/// `G(h) = ∫_{h*}^{h} |r − h*| / √r dr` for `h > 0`, continued linearly
/// below zero. Continuous and strictly increasing on ℝ.
///
/// For `h > 0` the closed form `⅔h√h − 2h*√h + 4/3·h*√h*` factors as
/// `⅔(√h − √h*)²(√h + 2√h*)`, which is evaluated instead to avoid
/// cancellation near `h*`.
pub fn level_potential(h: f64, h_star: f64) -> f64 {
    if h <= 0.0 {
        return h - floor_value(h_star).abs();
    }
    let s = h.sqrt();
    let s_star = h_star.sqrt();
    let mag = 2.0 / 3.0 * (s - s_star).powi(2) * (s + 2.0 * s_star);
    if h > h_star {
        mag
    } else if h < h_star {
        -mag
    } else {
        0.0
    }
}

/// `G'(h) = |h − h*| / √h` on `h > 0`, `1` below zero.
pub fn level_potential_slope(h: f64, h_star: f64) -> f64 {
    if h <= 0.0 {
        1.0
    } else {
        (h - h_star).abs() / h.sqrt()
    }
}

/// `G(0) = −(4/3)·h*^{3/2}`.
fn floor_value(h_star: f64) -> f64 {
    -4.0 / 3.0 * h_star * h_star.sqrt()
}

/// Unique `h` with `G(h) = y`.
///
/// Below `G(0)` the linear branch is inverted exactly. Otherwise the root
/// is bracketed on the correct side of `h*` and bisected until the bracket
/// stays clear of both the kink at `h*` and the singular slope at `0`;
/// safeguarded Newton steps then polish it.
pub fn level_potential_inv(y: f64, h_star: f64) -> f64 {
    let floor = floor_value(h_star);
    if y <= floor {
        return y - floor;
    }
    if y == 0.0 {
        return h_star;
    }
    let (mut lo, mut hi) = if y > 0.0 {
        let mut hi = 2.0 * h_star;
        while level_potential(hi, h_star) < y {
            hi *= 2.0;
        }
        (h_star, hi)
    } else {
        (0.0, h_star)
    };

    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let gx = level_potential(x, h_star) - y;
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= INVERSE_RTOL * 0.25 * hi {
            return 0.5 * (lo + hi);
        }
        // Newton only once the bracket excludes 0 and h*.
        let clear = lo > 0.0 && lo != h_star && hi != h_star;
        let newton = if clear {
            let slope = level_potential_slope(x, h_star);
            let cand = x - gx / slope;
            (slope > 0.0 && cand > lo && cand < hi).then_some(cand)
        } else {
            None
        };
        match newton {
            Some(cand) => {
                let step = (cand - x).abs();
                x = cand;
                if step <= INVERSE_RTOL * 0.01 * x {
                    return x;
                }
            }
            None => x = 0.5 * (lo + hi),
        }
    }
    x
}

/// `c = 1 / (μ√(δg))`.
pub fn potential_scale(params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    1.0 / (params.mu() * (fp.delta * params.g()).sqrt())
}

/// Coefficient of `√s` in the direct oscillation bound `|h − h*| ≤ C√s`.
fn oscillation_coefficient(params: &PhysicalParams, fp: &FunctionalParams) -> f64 {
    (2.0 * params.mass() * (1.0 + fp.delta) / fp.delta).sqrt() / params.mu()
}

/// Level envelope `(p₁(s), p₂(s))`: every admissible state with `V = s`
/// has `p₁(s) ≤ h(x) ≤ p₂(s)`.
pub fn level_bounds(s: f64, params: &PhysicalParams, fp: &FunctionalParams) -> Result<(f64, f64)> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "level bound argument must be finite and >= 0, got {s}"
        )));
    }
    Ok(level_bounds_unchecked(s, params, fp))
}

pub(crate) fn level_bounds_unchecked(
    s: f64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
) -> (f64, f64) {
    let hs = params.h_star();
    if s == 0.0 {
        return (hs, hs);
    }
    let c = potential_scale(params, fp);
    let spread = oscillation_coefficient(params, fp) * s.sqrt();
    let p1 = level_potential_inv(-c * s, hs).max(hs - spread);
    let p2 = level_potential_inv(c * s, hs).min(hs + spread);
    (p1, p2)
}

pub fn p1(s: f64, params: &PhysicalParams, fp: &FunctionalParams) -> Result<f64> {
    level_bounds(s, params, fp).map(|b| b.0)
}

pub fn p2(s: f64, params: &PhysicalParams, fp: &FunctionalParams) -> Result<f64> {
    level_bounds(s, params, fp).map(|b| b.1)
}

/// Largest `s ≤ s_max` with `p₁(s) ≥ floor`, found by bisection on the
/// nonincreasing `p₁`. Returns `None` when even `p₁(0) = h*` is below
/// `floor`.
pub(crate) fn largest_level_with_floor(
    floor: f64,
    s_max: f64,
    params: &PhysicalParams,
    fp: &FunctionalParams,
) -> Option<f64> {
    let p1 = |s: f64| level_bounds_unchecked(s, params, fp).0;
    if p1(0.0) < floor {
        return None;
    }
    if p1(s_max) >= floor {
        return Some(s_max);
    }
    let (mut lo, mut hi) = (0.0, s_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p1(mid) >= floor {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * s_max {
            break;
        }
    }
    Some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_values() {
        let hs: f64 = 0.5;
        assert_eq!(level_potential(hs, hs), 0.0);
        let expect = 8.0 / 3.0 * hs.powf(1.5);
        assert!((level_potential(4.0 * hs, hs) - expect).abs() < 1e-15);
        let g0 = -4.0 / 3.0 * hs.powf(1.5);
        assert!((level_potential(0.0, hs) - g0).abs() < 1e-15);
        // Both branches meet at 0; the positive branch approaches like 2h*√h.
        let h = 1e-14;
        assert!((level_potential(h, hs) - g0).abs() < 2.0 * hs * h.sqrt() * 1.01);
        assert!((level_potential(-h, hs) - g0).abs() < 1e-13);
    }

    #[test]
    fn potential_matches_unfactored_form() {
        let hs: f64 = 0.7;
        for &h in &[0.01, 0.3, 0.69, 0.71, 1.3, 5.0] {
            let sgn = if h > hs { 1.0 } else { -1.0 };
            let raw =
                sgn * (2.0 / 3.0 * h * h.sqrt() - 2.0 * hs * h.sqrt() + 4.0 / 3.0 * hs * hs.sqrt());
            assert!((level_potential(h, hs) - raw).abs() < 1e-14, "h = {h}");
        }
    }

    #[test]
    fn inverse_fixed_point_and_linear_branch() {
        let hs: f64 = 0.5;
        assert_eq!(level_potential_inv(0.0, hs), hs);
        let y = -2.0 * hs.powf(1.5);
        let expect = -2.0 / 3.0 * hs.powf(1.5);
        assert!((level_potential_inv(y, hs) - expect).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip_near_kink() {
        let hs = 0.5;
        for &h in &[0.5 + 1e-9, 0.5 - 1e-9, 0.5 + 1e-5, 1e-8, 3.0, 40.0] {
            let back = level_potential_inv(level_potential(h, hs), hs);
            assert!((back - h).abs() <= 1e-10 * h, "h = {h}, back = {back}");
        }
    }

    #[test]
    fn envelope_collapses_at_zero() {
        let p = PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap();
        let fp = FunctionalParams::new(1.0, 1.0, 0.05, 1.0, 1.0).unwrap();
        assert_eq!(level_bounds(0.0, &p, &fp).unwrap(), (0.5, 0.5));
        assert!(level_bounds(-1.0, &p, &fp).is_err());
        let (a, b) = level_bounds(1e-3, &p, &fp).unwrap();
        assert!(a < 0.5 && b > 0.5);
    }
}
