use gfou::fbm::HurstIndex;
use gfou::levy::{
    check_drift_to_infinity, draw_jumps, extend_two_sided, gfou_existence_gate, sample_levy, sample_on_grid,
    JumpComponent, JumpLaw, LevyError, LevyModel, PVariation, MAX_GRID_POINTS,
};
use gfou::mc::{ks_two_sample, median, stream, Welford};
use gfou::path::{uniform_grid, SamplePath};
use proptest::prelude::*;

fn grid(t: f64, n: usize) -> Vec<f64> {
    uniform_grid(0.0, t, n)
}

#[test]
fn pure_drift_is_linear() {
    let m = LevyModel::pure_drift(0.75);
    let p = sample_levy(&m, &[0.0, 1.0, 2.0], &mut stream(1, 0)).unwrap();
    assert_eq!(p.values(), &[0.0, 0.75, 1.5]);
}

#[test]
fn brownian_variance() {
    let m = LevyModel::brownian(0.0, 1.0);
    let times = grid(1.0, 4);
    let w: Welford = (0..100_000)
        .map(|r| {
            let p = sample_levy(&m, &times, &mut stream(2, r)).unwrap();
            p.last_value() * p.last_value()
        })
        .collect();
    assert!((w.mean - 1.0).abs() < 3.0 * w.std_err());
}

#[test]
fn symmetric_stable_median_is_zero() {
    let m = LevyModel::stable(1.5, 1.0, 1.0);
    let times = grid(1.0, 8);
    let xs: Vec<f64> = (0..20_000)
        .map(|r| sample_levy(&m, &times, &mut stream(3, r)).unwrap().last_value())
        .collect();
    // The sample median's sign count is binomial(n, 1/2) under symmetry.
    let pos = xs.iter().filter(|&&x| x > 0.0).count() as f64;
    let n = xs.len() as f64;
    assert!((pos - n / 2.0).abs() < 3.0 * (n / 4.0).sqrt());
    assert!(median(&xs).abs() < 0.05);
}

#[test]
fn stable_increments_are_self_similar() {
    // ξ over [0, 1] in 1 cell vs 16 cells: same law.
    let m = LevyModel::stable(1.3, 1.0, 0.4);
    let coarse: Vec<f64> = (0..4000)
        .map(|r| sample_levy(&m, &[0.0, 1.0], &mut stream(4, r)).unwrap().last_value())
        .collect();
    let fine_grid = grid(1.0, 16);
    let fine: Vec<f64> = (0..4000)
        .map(|r| sample_levy(&m, &fine_grid, &mut stream(5, r)).unwrap().last_value())
        .collect();
    assert!(ks_two_sample(&coarse, &fine).p_value > 0.01);
}

#[test]
fn spectrally_positive_stable_mean_matches_laplace_exponent() {
    // Checks the CMS location/scale conversion: E e^{-ξ_1} = e^{ψ(1)}.
    let m = LevyModel::stable(1.5, 0.5, 0.0);
    let target = (m.laplace_psi(1.0).unwrap()).exp();
    let w: Welford = (0..100_000)
        .map(|r| (-sample_levy(&m, &[0.0, 1.0], &mut stream(6, r)).unwrap().last_value()).exp())
        .collect();
    assert!((w.mean - target).abs() < 3.5 * w.std_err(), "{} vs {target}", w.mean);
}

#[test]
fn compound_poisson_jumps_on_grid() {
    let m = LevyModel::compound_poisson(0.1, 3.0, JumpLaw::Constant { size: 0.5 });
    let p = sample_levy(&m, &grid(2.0, 4), &mut stream(7, 0)).unwrap();
    let njumps = p.jumps().iter().filter(|&&j| j != 0.0).count();
    assert!(p.len() >= 5 + njumps - 1);
    let expected = 0.1 * 2.0 + 0.5 * njumps as f64;
    assert!((p.last_value() - expected).abs() < 1e-12);
    // E[e^{-ξ_1}] against the Laplace exponent.
    let target = m.laplace_psi(1.0).unwrap().exp();
    let w: Welford = (0..50_000)
        .map(|r| (-sample_levy(&m, &[0.0, 1.0], &mut stream(8, r)).unwrap().last_value()).exp())
        .collect();
    assert!((w.mean - target).abs() < 3.0 * w.std_err());
}

#[test]
fn jumps_must_sit_on_the_grid() {
    let m = LevyModel::compound_poisson(0.0, 1.0, JumpLaw::Constant { size: 1.0 });
    let jumps = draw_jumps(&m, 50.0, &mut stream(9, 0));
    assert!(!jumps.is_empty());
    let err = sample_on_grid(&m, &grid(50.0, 10), &jumps, &mut stream(9, 1));
    assert!(matches!(err, Err(LevyError::Grid(_))));
}

#[test]
fn grid_cap() {
    let big = grid(1.0, MAX_GRID_POINTS);
    assert!(matches!(
        sample_levy(&LevyModel::pure_drift(1.0), &big, &mut stream(0, 0)),
        Err(LevyError::TooLarge { .. })
    ));
}

#[test]
fn theta_constants_examples() {
    let (mu, sigma) = (0.8, 0.6);
    let t = LevyModel::brownian(mu, sigma).theta_constants().unwrap();
    assert!((t.theta1 - (mu - sigma * sigma / 2.0)).abs() < 1e-15);
    assert!((t.theta2 - (2.0 * mu - 2.0 * sigma * sigma)).abs() < 1e-15);
    let t = LevyModel::pure_drift(0.3).theta_constants().unwrap();
    assert_eq!((t.theta1, t.theta2), (0.3, 0.6));
    let (lam, j) = (2.0, 0.7);
    let t = LevyModel::compound_poisson(0.0, lam, JumpLaw::Constant { size: j })
        .theta_constants()
        .unwrap();
    for (k, th) in [(1.0, t.theta1), (2.0, t.theta2)] {
        assert!((th + lam * ((-k * j).exp() - 1.0)).abs() < 1e-15);
    }
    let t = LevyModel::brownian(0.5, 1.0).theta_constants().unwrap();
    assert!(!t.valid_for_stationary);
}

#[test]
fn classification_examples() {
    let cp = LevyModel::compound_poisson(0.4, 1.0, JumpLaw::Normal { mean: 0.0, sd: 1.0 });
    assert_eq!(cp.classify_p_variation(1.0), PVariation::Finite);
    assert_eq!(cp.classify_p_variation(0.5), PVariation::Infinite);
    let st = LevyModel::stable(1.5, 1.0, 1.0);
    assert_eq!(st.classify_p_variation(1.5), PVariation::Infinite);
    assert_eq!(st.classify_p_variation(1.6), PVariation::Finite);
    let bm = LevyModel::brownian(1.0, 1.0);
    assert_eq!(bm.classify_p_variation(1.99), PVariation::Infinite);
    assert_eq!(bm.classify_p_variation(2.0), PVariation::Finite);
    // Driftless subordinator-like stable with α < 1 after compensation.
    let sub = LevyModel {
        drift: 0.5 / (1.0 - 0.5),
        ..LevyModel::stable(0.5, 0.5, 0.0)
    };
    assert_eq!(sub.effective_path_drift(), 0.0);
    assert_eq!(sub.classify_p_variation(0.6), PVariation::Finite);
    assert_eq!(sub.classify_p_variation(0.5), PVariation::Infinite);
}

#[test]
fn existence_gate_examples() {
    let h7 = HurstIndex::new(0.7).unwrap();
    let h4 = HurstIndex::new(0.4).unwrap();
    let v = gfou_existence_gate(&LevyModel::brownian(1.0, 1.0), h7);
    assert!(v.ok);
    assert!((v.witness_p.unwrap() - 2.0).abs() < 1e-9);
    assert!((v.p_bound - 10.0 / 3.0).abs() < 1e-12);
    let v = gfou_existence_gate(&LevyModel::stable(1.8, 1.0, 1.0), h4);
    assert!(!v.ok, "{}", v.reason);
    let v = gfou_existence_gate(&LevyModel::stable(1.2, 1.0, 1.0), h4);
    assert!(v.ok);
    let p = v.witness_p.unwrap();
    assert!(p > 1.2 && p < 1.2 + 1e-9 && 1.0 / p + 0.4 > 1.0);
}

#[test]
fn drift_to_infinity() {
    let times = grid(10.0, 100);
    let p = sample_levy(&LevyModel::pure_drift(1.0), &times, &mut stream(0, 0)).unwrap();
    let c = check_drift_to_infinity(&p, 0.5);
    assert!(c.holds && c.t0 == Some(times[1]));
    let p = sample_levy(&LevyModel::pure_drift(-1.0), &times, &mut stream(0, 0)).unwrap();
    assert!(!check_drift_to_infinity(&p, 0.1).holds);
    let m = LevyModel::brownian(1.0, 1.0);
    let times = grid(200.0, 2000);
    let holds = (0..1000)
        .filter(|&r| check_drift_to_infinity(&sample_levy(&m, &times, &mut stream(10, r)).unwrap(), 0.5).holds)
        .count();
    assert!(holds >= 990, "{holds}");
}

#[test]
fn two_sided_extension() {
    let m = LevyModel::pure_drift(0.4);
    let times = grid(2.0, 4);
    let a = sample_levy(&m, &times, &mut stream(0, 0)).unwrap();
    let b = sample_levy(&m, &times, &mut stream(0, 1)).unwrap();
    let two = extend_two_sided(&a, &b).unwrap();
    for (t, v) in two.times().iter().zip(two.values()) {
        assert!((v - 0.4 * t).abs() < 1e-15);
    }
    assert_eq!(two.value_at(0.0), Some(0.0));
    let shifted = SamplePath::new(vec![0.5, 1.0], vec![0.0, 1.0]).unwrap();
    assert!(extend_two_sided(&a, &shifted).is_err());
}

#[test]
fn two_sided_left_limits_and_jumps() {
    let neg = SamplePath::with_jumps(vec![0.0, 1.0, 2.0], vec![0.0, 1.5, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
    let pos = SamplePath::new(vec![0.0, 1.0], vec![0.0, 0.3]).unwrap();
    let two = extend_two_sided(&pos, &neg).unwrap();
    assert_eq!(two.times(), &[-2.0, -1.0, 0.0, 1.0]);
    // ξ_{-1} = -ξ²_{1-} = -0.5, with the same +1 jump there.
    assert_eq!(two.values()[1], -0.5);
    assert_eq!(two.jumps()[1], 1.0);
    assert_eq!(two.left_limit(1), -1.5);
}

#[test]
fn two_sided_increments() {
    let m = LevyModel::compound_poisson(0.2, 1.5, JumpLaw::Uniform { low: -0.5, high: 1.0 }).with_gaussian(0.5);
    let times = grid(2.0, 8);
    let (mut left, mut right, mut later) = (Vec::new(), Vec::new(), Vec::new());
    let mut cross = Welford::default();
    for r in 0..6000u64 {
        let a = sample_levy(&m, &times, &mut stream(11, 2 * r)).unwrap();
        let b = sample_levy(&m, &times, &mut stream(11, 2 * r + 1)).unwrap();
        let two = extend_two_sided(&a, &b).unwrap();
        let at = |t: f64| two.value_at(t).unwrap();
        let (x, y) = (at(1.0) - at(0.0), at(0.0) - at(-1.0));
        left.push(at(-0.5) - at(-1.0));
        later.push(at(0.5) - at(0.0));
        right.push(x);
        cross.push(x * y);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let xm = mean(&right);
    // E[xy] - E[x]E[y] with E[x] = E[y].
    assert!((cross.mean - xm * xm).abs() < 3.0 * cross.std_err());
    assert!(ks_two_sample(&left, &later).p_value > 0.01);
}

#[test]
fn mixed_model_sampling_runs() {
    let m = LevyModel::brownian(0.1, 0.3)
        .with_jump(JumpComponent::CompoundPoisson {
            rate: 1.0,
            law: JumpLaw::Exponential { rate: 2.0 },
        })
        .with_jump(JumpComponent::Stable {
            alpha: 0.8,
            c1: 0.2,
            c2: 0.0,
        });
    let p = sample_levy(&m, &grid(5.0, 64), &mut stream(12, 0)).unwrap();
    assert!(p.values().iter().all(|v| v.is_finite()));
    assert_eq!(m.classify_p_variation(1.9), PVariation::Infinite);
    assert!(m.theta_constants().is_ok());
}

fn arb_model() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        (-2.0f64..2.0, 0.0f64..2.0).prop_map(|(mu, s)| LevyModel::brownian(mu, s)),
        (-2.0f64..2.0, 0.1f64..5.0, -0.9f64..2.0)
            .prop_map(|(mu, lam, j)| LevyModel::compound_poisson(mu, lam, JumpLaw::Constant { size: if j == 0.0 { 0.5 } else { j } })),
        (0.05f64..1.95, 0.01f64..2.0, -1.0f64..1.0).prop_map(|(a, c, d)| {
            LevyModel { drift: d, ..LevyModel::stable(if (a - 1.0).abs() < 1e-3 { 1.1 } else { a }, c, 0.0) }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn classification_is_monotone(m in arb_model(), p in 0.05f64..2.5, dp in 0.0f64..1.0) {
        if m.classify_p_variation(p) == PVariation::Finite {
            prop_assert_eq!(m.classify_p_variation(p + dp), PVariation::Finite);
        }
    }

    #[test]
    fn laplace_exponent_is_convex(m in arb_model()) {
        let (a, b, c) = (m.laplace_psi(1.0).unwrap(), m.laplace_psi(1.5).unwrap(), m.laplace_psi(2.0).unwrap());
        prop_assert!(b <= 0.5 * (a + c) + 1e-12 * (a.abs() + c.abs()).max(1.0));
        // θ2 > 0 ⇒ θ1 > 0 is enforced by the constructor.
        prop_assert!(m.theta_constants().is_ok());
    }

    #[test]
    fn disjoint_increments_uncorrelated(seed in 0u64..1000) {
        let m = LevyModel::brownian(0.3, 1.0);
        let times = grid(2.0, 2);
        let mut w = Welford::default();
        let mut means = (Welford::default(), Welford::default());
        for r in 0..2000 {
            let p = sample_levy(&m, &times, &mut stream(seed, r)).unwrap();
            let (x, y) = (p.values()[1], p.values()[2] - p.values()[1]);
            w.push(x * y);
            means.0.push(x);
            means.1.push(y);
        }
        prop_assert!((w.mean - means.0.mean * means.1.mean).abs() < 4.0 * w.std_err());
    }
}
