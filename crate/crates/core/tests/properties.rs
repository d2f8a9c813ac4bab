//! Invariants over randomly drawn states.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spillfree::controller::Gains;
use spillfree::friction::FrictionModel;
use spillfree::functionals::sampling::StateSampler;
use spillfree::functionals::{
    energy_e, energy_w, level_bounds, level_potential, level_potential_inv, FunctionalParams,
    LyapunovReport,
};
use spillfree::solver::{simulate, stable_dt, step, ControlMode, SolverConfig};
use spillfree::state::{Grid, LiquidState, PhysicalParams, TankState};

fn fixture() -> PhysicalParams {
    PhysicalParams::new(9.81, 0.1, 1.0, 0.5, 1.0).unwrap()
}

fn draw(seed: u64, n: usize) -> (PhysicalParams, Grid, TankState, LiquidState) {
    let p = fixture();
    let grid = Grid::for_params(n, &p).unwrap();
    let sampler = StateSampler::new(p, grid, 6).unwrap();
    let (t, s) = sampler.draw(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    (p, grid, t, s)
}

fn gains_strategy() -> impl Strategy<Value = FunctionalParams> {
    (
        0.1f64..10.0,
        0.1f64..10.0,
        0.01f64..2.0,
        0.1f64..100.0,
        0.1f64..100.0,
    )
        .prop_map(|(d, q, k, b, g)| FunctionalParams::new(d, q, k, b, g).unwrap())
}

fn friction_strategy() -> impl Strategy<Value = FrictionModel> {
    prop_oneof![
        Just(FrictionModel::Frictionless),
        (0.0f64..0.5).prop_map(|c| FrictionModel::const_abs_v(c).unwrap()),
        (0.0f64..0.5).prop_map(|c| FrictionModel::velocity_independent(c, 0.1).unwrap()),
        (0.0f64..0.5).prop_map(|b| FrictionModel::bounded_tanh(b, 0.1).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functionals_are_nonnegative(seed in any::<u64>(), fp in gains_strategy(), r in 1e-6f64..1.0) {
        let (p, grid, t, s) = draw(seed, 65);
        let rep = LyapunovReport::evaluate(&t, &s, &p, &fp, &grid, r).unwrap();
        prop_assert!(rep.e >= 0.0 && rep.w >= 0.0 && rep.v >= 0.0 && rep.u >= rep.v);
    }

    #[test]
    fn functionals_vanish_at_equilibrium(fp in gains_strategy(), n in 17usize..200) {
        let p = fixture();
        let grid = Grid::for_params(n, &p).unwrap();
        let eq = LiquidState::equilibrium(&p, &grid);
        let rep = LyapunovReport::evaluate(&TankState::at_rest(), &eq, &p, &fp, &grid, 1.0).unwrap();
        prop_assert_eq!((rep.e, rep.w, rep.v, rep.u, rep.vx_l2), (0.0, 0.0, 0.0, 0.0, 0.0));
        prop_assert_eq!(energy_e(&eq, &p, &grid).unwrap(), 0.0);
        prop_assert_eq!(energy_w(&eq, &p, &grid).unwrap(), 0.0);
    }

    #[test]
    fn velocity_gradient_is_bounded_by_u(seed in any::<u64>(), fp in gains_strategy()) {
        let (p, grid, t, s) = draw(seed, 65);
        let rep = LyapunovReport::evaluate(&t, &s, &p, &fp, &grid, 1.0).unwrap();
        prop_assert!(rep.vx_l2 * rep.vx_l2 <= 2.0 * rep.u * (1.0 + 1e-14));
    }

    #[test]
    fn u_sublevel_lies_in_v_sublevel(seed in any::<u64>(), fp in gains_strategy(), r in 1e-6f64..10.0) {
        let (p, grid, t, s) = draw(seed, 65);
        let rep = LyapunovReport::evaluate(&t, &s, &p, &fp, &grid, r).unwrap();
        prop_assert!(!rep.in_xu_r || rep.in_xv_r);
    }

    #[test]
    fn level_stays_within_bounds_of_v(seed in any::<u64>(), fp in gains_strategy()) {
        let (p, grid, t, s) = draw(seed, 129);
        let rep = LyapunovReport::evaluate(&t, &s, &p, &fp, &grid, 1.0).unwrap();
        let (lo, hi) = level_bounds(rep.v, &p, &fp).unwrap();
        let slack = 1e-3 * (hi - lo).max(1e-12);
        prop_assert!(s.min_level() >= lo - slack, "{} < {}", s.min_level(), lo);
        prop_assert!(s.max_level() <= hi + slack, "{} > {}", s.max_level(), hi);
    }

    #[test]
    fn level_potential_inverse_round_trips(h in 1e-6f64..20.0, hs in 0.05f64..5.0) {
        let y = level_potential(h, hs);
        let back = level_potential_inv(y, hs);
        prop_assert!((back - h).abs() <= 1e-9 * h.max(hs), "{h} -> {y} -> {back}");
    }

    #[test]
    fn one_step_conserves_mass(seed in any::<u64>(), fr in friction_strategy(), frac in 0.1f64..1.0) {
        let (p, grid, t, s) = draw(seed, 65);
        let gains = Gains::new(1.0, 0.05, 1.0, 1.0, 1.0, 1.0).unwrap();
        let dt = frac * stable_dt(&s, &p, &grid, 0.5, 0.9);
        let (_, s1) = step(&t, &s, &fr, &gains, &p, &grid, dt, ControlMode::Feedback).unwrap();
        prop_assert!((s1.mass(&grid) - p.mass()).abs() <= 1e-13 * p.mass());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), fr in friction_strategy()) {
        let (p, _, t, s) = draw(seed, 33);
        let gains = Gains::new(1.0, 0.05, 1.0, 1.0, 1.0, 1.0).unwrap();
        let cfg = SolverConfig { n: 33, t_end: 0.05, output_every: 0.01, ..Default::default() };
        let a = simulate(&t, &s, &gains, &fr, &p, &cfg).unwrap();
        let b = simulate(&t, &s, &gains, &fr, &p, &cfg).unwrap();
        prop_assert_eq!(a.times, b.times);
        prop_assert_eq!(a.tanks, b.tanks);
        prop_assert_eq!(a.states, b.states);
    }
}
