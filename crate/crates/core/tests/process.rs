use gfou::fbm::{fbm_cov, HurstIndex};
use gfou::levy::{JumpComponent, JumpLaw, LevyModel, ThetaConstants};
use gfou::mc::{stream, Welford};
use gfou::path::{uniform_grid, SamplePath};
use gfou::process::{
    euler_from_paths, euler_sde, gfou_from_paths, levy_measure_xi_from_u, simulate_fou, simulate_gfou, simulate_gou,
    simulate_w, small_jump_equivalence, stationary_truncation_error, stationary_variance, xi_from_u, GfouSimulator,
    GfouSpec, Initial, ProcessError, SdeSpec, SharedNoise, ValueLaw,
};

fn hurst(h: f64) -> HurstIndex {
    HurstIndex::new(h).unwrap()
}

fn gfou_spec(levy: LevyModel, h: f64, initial: Initial, horizon: f64, mesh: f64) -> GfouSpec {
    GfouSpec {
        levy,
        hurst: h,
        initial,
        horizon,
        mesh,
    }
}

#[test]
fn fou_with_h_half_is_classical_ou() {
    let (lambda, t) = (1.0, 1.0);
    let times = uniform_grid(0.0, t, 256);
    let w: Welford = (0..10_000)
        .map(|r| simulate_fou(lambda, hurst(0.5), 0.0, &times, &mut stream(1, r)).unwrap().last_value().powi(2))
        .collect();
    let target = (1.0 - (-2.0 * lambda * t).exp()) / (2.0 * lambda);
    assert!((w.mean - target).abs() < 3.0 * w.std_err(), "{} vs {target}", w.mean);
}

#[test]
fn fou_stays_bounded_as_lambda_grows() {
    let times = uniform_grid(0.0, 1.0, 1024);
    let mean_abs = |lambda: f64| -> f64 {
        (0..400)
            .map(|r| simulate_fou(lambda, hurst(0.7), 0.0, &times, &mut stream(2, r)).unwrap().last_value().abs())
            .sum::<f64>()
            / 400.0
    };
    let (a, b, c) = (mean_abs(1.0), mean_abs(10.0), mean_abs(100.0));
    assert!(b <= 1.1 * a && c <= 1.1 * b, "{a} {b} {c}");
}

#[test]
fn reduction_lattice() {
    let times = uniform_grid(0.0, 2.0, 128);
    let lambda = 0.8;
    // GFOU(ξ = λt) = FOU(λ): pure drift consumes no randomness, so the FBM
    // draws coincide.
    let spec = gfou_spec(LevyModel::pure_drift(lambda), 0.7, Initial::constant(0.3), 2.0, 2.0 / 128.0);
    let y = simulate_gfou(&spec, &mut stream(3, 0)).unwrap();
    let x = simulate_fou(lambda, hurst(0.7), 0.3, &times, &mut stream(3, 0)).unwrap();
    for (a, b) in y.values().iter().zip(x.values()) {
        assert!((a - b).abs() < 1e-12);
    }
    // GFOU(ξ ≡ 0) = Y0 + B.
    let sim = GfouSimulator::new(&gfou_spec(LevyModel::pure_drift(0.0), 0.7, Initial::constant(1.5), 2.0, 1.0 / 64.0)).unwrap();
    let (xi, b) = sim.sample_drivers(&mut stream(4, 0)).unwrap();
    let y = gfou_from_paths(&xi, &b, 1.5).unwrap();
    for (a, bb) in y.values().iter().zip(b.values()) {
        assert!((a - 1.5 - bb).abs() < 1e-12);
    }
    // GOU(ξ = drift, η = BM) is the OU recursion with the same increments.
    let eta = LevyModel::brownian(0.0, 1.0);
    let v = simulate_gou(&LevyModel::pure_drift(lambda), &eta, ValueLaw::Constant { value: 0.0 }, &times, &mut stream(5, 0)).unwrap();
    assert_eq!(v.len(), times.len());
}

#[test]
fn gou_examples() {
    let lambda = 2.0;
    let times = uniform_grid(0.0, 1.0, 256);
    let v0 = ValueLaw::Normal {
        mean: 0.0,
        sd: (1.0f64 / (2.0 * lambda)).sqrt(),
    };
    let w: Welford = (0..10_000)
        .map(|r| {
            simulate_gou(&LevyModel::pure_drift(lambda), &LevyModel::brownian(0.0, 1.0), v0, &times, &mut stream(6, r))
                .unwrap()
                .last_value()
                .powi(2)
        })
        .collect();
    assert!((w.mean - 1.0 / (2.0 * lambda)).abs() < 3.0 * w.std_err(), "{}", w.mean);

    let xi = LevyModel::brownian(0.4, 0.7).with_jump(JumpComponent::CompoundPoisson {
        rate: 1.0,
        law: JumpLaw::Constant { size: 0.3 },
    });
    let p = simulate_gou(&xi, &LevyModel::pure_drift(0.0), ValueLaw::Constant { value: 2.0 }, &times, &mut stream(7, 0)).unwrap();
    let q = gfou_from_paths(
        &SamplePath::new(p.times().to_vec(), vec![0.0; p.len()]).unwrap(),
        &SamplePath::new(p.times().to_vec(), vec![0.0; p.len()]).unwrap(),
        2.0,
    )
    .unwrap();
    assert_eq!(q.values()[0], 2.0);
    // With η ≡ 0 each value is 2 e^{-ξ_t}: the ratio of consecutive values
    // is e^{-Δξ}, positive, and the path never changes sign.
    assert!(p.values().iter().all(|&v| v > 0.0));
}

#[test]
fn gou_autocovariance_decays_at_theta1() {
    // ξ = 0.5 t + 0.5 W: θ1 = 0.375, θ2 = 0.5; η = BM.
    let xi = LevyModel::brownian(0.5, 0.5);
    let theta1 = xi.theta_constants().unwrap().theta1;
    let burn = 15.0;
    let lags = [1.0, 2.0, 3.0, 4.0, 5.0];
    let times = uniform_grid(0.0, burn + 5.0, 640);
    let reps = 20_000;
    let mut acc = vec![Welford::default(); lags.len()];
    let (mut m0, mut ms) = (Welford::default(), vec![Welford::default(); lags.len()]);
    for r in 0..reps {
        let v = simulate_gou(&xi, &LevyModel::brownian(0.0, 1.0), ValueLaw::Constant { value: 0.0 }, &times, &mut stream(8, r)).unwrap();
        let a = v.value_at(burn).unwrap();
        m0.push(a);
        for (k, s) in lags.iter().enumerate() {
            let b = v.value_at(burn + s).unwrap();
            acc[k].push(a * b);
            ms[k].push(b);
        }
    }
    let xs: Vec<f64> = lags.to_vec();
    let ys: Vec<f64> = acc.iter().zip(&ms).map(|(w, m)| (w.mean - m0.mean * m.mean).ln()).collect();
    let (_, slope) = gfou::mc::ols(&xs, &ys);
    assert!((slope + theta1).abs() <= 0.15 * theta1, "slope {slope} vs {}", -theta1);
}

#[test]
fn gfou_with_zero_exponent_is_shifted_fbm() {
    let spec = gfou_spec(LevyModel::pure_drift(0.0), 0.7, Initial::constant(1.0), 1.0, 1.0 / 8.0);
    let w: Welford = (0..20_000)
        .map(|r| {
            let y = simulate_gfou(&spec, &mut stream(9, r)).unwrap();
            (y.value_at(0.5).unwrap() - 1.0) * (y.last_value() - 1.0)
        })
        .collect();
    assert!((w.mean - fbm_cov(hurst(0.7), 0.5, 1.0)).abs() < 3.0 * w.std_err());
}

#[test]
fn gates() {
    let st = gfou_spec(LevyModel::stable(1.8, 1.0, 1.0), 0.4, Initial::constant(0.0), 1.0, 0.01);
    assert!(matches!(GfouSimulator::new(&st), Err(ProcessError::ExistenceGate(_))));
    let ok = gfou_spec(LevyModel::stable(1.2, 1.0, 1.0), 0.4, Initial::constant(0.0), 1.0, 0.01);
    assert!(simulate_gfou(&ok, &mut stream(10, 0)).is_ok());
    // θ2 = 2(0.5) - 2(1) < 0.
    let bad = gfou_spec(LevyModel::brownian(0.5, 1.0), 0.7, Initial::Stationary { truncation: None }, 1.0, 0.01);
    assert!(matches!(GfouSimulator::new(&bad), Err(ProcessError::StationarityGate(_))));
    let rough = gfou_spec(LevyModel::pure_drift(1.0), 0.4, Initial::Stationary { truncation: None }, 1.0, 0.01);
    assert!(matches!(GfouSimulator::new(&rough), Err(ProcessError::StationarityGate(_))));
    let heavy = gfou_spec(LevyModel::stable(1.5, 1.0, 1.0), 0.7, Initial::Stationary { truncation: None }, 1.0, 0.01);
    assert!(matches!(GfouSimulator::new(&heavy), Err(ProcessError::StationarityGate(_))));
}

#[test]
fn short_truncation_warns() {
    let spec = gfou_spec(LevyModel::brownian(1.5, 1.0), 0.7, Initial::Stationary { truncation: Some(3.0) }, 1.0, 1.0 / 64.0);
    let sim = GfouSimulator::new(&spec).unwrap();
    assert_eq!(sim.warnings().len(), 1);
    let spec = gfou_spec(LevyModel::brownian(1.5, 1.0), 0.7, Initial::Stationary { truncation: None }, 1.0, 1.0 / 64.0);
    let sim = GfouSimulator::new(&spec).unwrap();
    assert!(sim.warnings().is_empty());
    assert_eq!(sim.truncation(), Some(20.0));
    let y = sim.sample(&mut stream(11, 0)).unwrap();
    assert_eq!(y.first_time(), 0.0);
    assert!(y.values().iter().all(|v| v.is_finite()));
}

#[test]
fn stationary_mode_with_compound_poisson_exponent() {
    // ξ = t + jumps of +0.5 at rate 1: θ1 = 1 + (1 - e^{-0.5}), θ2 = 2 + (1 - e^{-1}).
    let levy = LevyModel::compound_poisson(1.0, 1.0, JumpLaw::Constant { size: 0.5 });
    let spec = gfou_spec(levy, 0.7, Initial::Stationary { truncation: Some(8.0) }, 1.0, 1.0 / 16.0);
    let sim = GfouSimulator::new(&spec).unwrap();
    let (xi, b) = sim.sample_drivers(&mut stream(12, 0)).unwrap();
    assert_eq!(xi.times(), b.times());
    assert!(xi.jumps().iter().any(|&j| j != 0.0));
    assert_eq!(b.value_at(0.0), Some(0.0));
    let theta = sim.theta().unwrap();
    let var = stationary_variance(theta, hurst(0.7));
    let w: Welford = (0..3000).map(|r| sim.sample(&mut stream(13, r)).unwrap().values()[0].powi(2)).collect();
    // Coarse mesh, loose check: within 4 s.e. or 5%.
    assert!((w.mean - var).abs() < (4.0 * w.std_err()).max(0.05 * var), "{} vs {var}", w.mean);
}

#[test]
fn truncation_error_examples() {
    let th = ThetaConstants::new(1.0, 1.0).unwrap();
    let h = hurst(0.7);
    let mut prev = f64::INFINITY;
    for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let e = stationary_truncation_error(th, h, t).unwrap();
        assert!(e < prev);
        prev = e;
    }
    for t in [2.0, 5.0] {
        let ratio = stationary_truncation_error(th, h, 2.0 * t).unwrap() / stationary_truncation_error(th, h, t).unwrap();
        let expect = (-th.theta2 * t).exp();
        assert!(ratio / expect < 2.0 && expect / ratio < 2.0);
    }
    let var = stationary_variance(th, h);
    assert!(stationary_truncation_error(th, h, 20.0).unwrap() < 1e-6 * var);
}

#[test]
fn w_examples() {
    let times = uniform_grid(0.0, 1.0, 1024);
    let one = simulate_w(hurst(0.7), ValueLaw::Constant { value: 1.0 }, None, &times, &mut stream(14, 0)).unwrap();
    assert!(one.closed.values().iter().all(|&v| v == 1.0));
    assert!(one.sup_gap() < 0.2, "{}", one.sup_gap());

    let t = 1.0f64;
    let w: Welford = (0..100_000)
        .map(|r| simulate_w(hurst(0.7), ValueLaw::Constant { value: 2.0 }, None, &[0.0, t], &mut stream(15, r)).unwrap().closed.last_value())
        .collect();
    let target = 1.0 + (t.powf(1.4) / 2.0).exp();
    assert!((w.mean - target).abs() < 3.0 * w.std_err());

    let d = simulate_w(hurst(0.7), ValueLaw::Normal { mean: 2.0, sd: 0.5 }, Some(1.0), &times, &mut stream(16, 0)).unwrap();
    let drifted = d.drifted.unwrap();
    for ((t, a), b) in times.iter().zip(drifted.values()).zip(d.closed.values()) {
        assert!((a - 1.0 - (-t).exp() * (b - 1.0)).abs() < 1e-12);
    }
    assert!(simulate_w(hurst(0.5), ValueLaw::Constant { value: 2.0 }, None, &times, &mut stream(0, 0)).is_err());
}

#[test]
fn xi_from_u_examples() {
    let times = uniform_grid(0.0, 1.0, 4);
    let u = SamplePath::new(times.clone(), vec![0.0, 0.3, -0.1, 0.2, 0.5]).unwrap();
    let xi = xi_from_u(&u, 0.0).unwrap();
    for (a, b) in xi.values().iter().zip(u.values()) {
        assert_eq!(*a, -b);
    }
    let xi = xi_from_u(&u, 1.0).unwrap();
    for ((a, b), t) in xi.values().iter().zip(u.values()).zip(&times) {
        assert!((a - (-b + t / 2.0)).abs() < 1e-15);
    }
    let j = (-1f64).exp() - 1.0;
    let u = SamplePath::with_jumps(vec![0.0, 0.5, 1.0], vec![0.0, j, j], vec![0.0, j, 0.0]).unwrap();
    let xi = xi_from_u(&u, 0.0).unwrap();
    assert!((xi.jumps()[1] - 1.0).abs() < 1e-15);
    assert!((xi.values()[1] - xi.left_limit(1) - 1.0).abs() < 1e-15);
    let bad = SamplePath::with_jumps(vec![0.0, 1.0], vec![0.0, -1.5], vec![0.0, -1.5]).unwrap();
    assert!(matches!(xi_from_u(&bad, 0.0), Err(ProcessError::JumpTooSmall { .. })));
}

#[test]
fn euler_examples() {
    let times = uniform_grid(0.0, 1.0, 64);
    let zero = SamplePath::new(times.clone(), vec![0.0; 65]).unwrap();
    let b = SamplePath::from_fn(times.clone(), |t| (3.0 * t).sin()).unwrap();
    let y = euler_from_paths(&zero, &b, 0.7).unwrap();
    for (a, bb) in y.values().iter().zip(b.values()) {
        assert!((a - 0.7 - bb).abs() < 1e-15);
    }

    let u_model = LevyModel::compound_poisson(0.0, 3.0, JumpLaw::Uniform { low: -0.5, high: 0.8 });
    let noise = SharedNoise::draw(&u_model, hurst(0.7), 1.0, 6, &mut stream(17, 0)).unwrap();
    let (u, b) = noise.at_level(6).unwrap();
    let flat = SamplePath::new(b.times().to_vec(), vec![0.0; b.len()]).unwrap();
    let y = euler_from_paths(&u, &flat, 2.0).unwrap();
    let prod: f64 = u.jumps().iter().map(|j| 1.0 + j).product();
    assert!((y.last_value() - 2.0 * prod).abs() < 1e-12);
    // The Doléans-Dade closed form agrees exactly when B ≡ 0 and U is pure jump.
    let xi = xi_from_u(&u, 0.0).unwrap();
    let z = gfou_from_paths(&xi, &flat, 2.0).unwrap();
    assert!((z.last_value() - y.last_value()).abs() < 1e-12);

    let stable = SdeSpec {
        u_model: LevyModel::stable(1.5, 1.0, 0.0),
        hurst: 0.7,
        y0: ValueLaw::Constant { value: 1.0 },
        horizon: 1.0,
        mesh: 0.01,
    };
    assert!(euler_sde(&stable, &mut stream(0, 0)).is_err());
    let normal_jumps = SdeSpec {
        u_model: LevyModel::compound_poisson(0.0, 1.0, JumpLaw::Normal { mean: 0.0, sd: 0.1 }),
        ..stable.clone()
    };
    assert!(euler_sde(&normal_jumps, &mut stream(0, 0)).is_err());
    let fine = SdeSpec {
        u_model: LevyModel::brownian(0.2, 0.3),
        ..stable
    };
    let p = euler_sde(&fine, &mut stream(18, 0)).unwrap();
    assert_eq!(p.len(), 129);
}

#[test]
fn euler_tracks_closed_form_under_refinement() {
    let u_model = LevyModel::brownian(0.5, 1.0);
    let mut worse = 0;
    for r in 0..20 {
        let noise = SharedNoise::draw(&u_model, hurst(0.7), 1.0, 12, &mut stream(19, r)).unwrap();
        let reference = noise.closed_form(12, 1.0).unwrap().last_value();
        let e6 = (noise.euler(6, 1.0).unwrap().last_value() - reference).abs();
        let e11 = (noise.euler(11, 1.0).unwrap().last_value() - reference).abs();
        if e11 >= e6 {
            worse += 1;
        }
    }
    assert!(worse <= 3, "{worse}");
}

#[test]
fn xi_levy_measure_examples() {
    let (alpha, c2) = (1.5, 0.8);
    let tails = levy_measure_xi_from_u(&LevyModel::stable(alpha, 0.0, c2)).unwrap();
    // Density c2 (1-e^{-x})^{-1-α} e^{-x} on (0, ∞).
    for x in [0.1, 0.5, 2.0] {
        let hstep = 1e-5 * x;
        let num = (tails.upper(x - hstep) - tails.upper(x + hstep)) / (2.0 * hstep);
        let exact = c2 * (1.0 - (-x).exp()).powf(-1.0 - alpha) * (-x).exp();
        assert!((num - exact).abs() < 1e-6 * exact, "{num} vs {exact}");
    }
    let x = 1e-3;
    let ratio = tails.upper(x) / (c2 / alpha * x.powf(-alpha));
    assert!((0.9..=1.1).contains(&ratio));

    let j = 0.4;
    let cp = levy_measure_xi_from_u(&LevyModel::compound_poisson(0.0, 2.5, JumpLaw::Constant { size: j })).unwrap();
    let loc = (1.0 + j).ln();
    assert_eq!(cp.lower(0.5 * loc), 2.5);
    assert_eq!(cp.lower(1.5 * loc), 0.0);
    assert_eq!(cp.upper(0.01), 0.0);
    assert!(levy_measure_xi_from_u(&LevyModel::compound_poisson(0.0, 1.0, JumpLaw::Constant { size: -1.0 })).is_err());
}

#[test]
fn small_jump_equivalence_examples() {
    let st = LevyModel::stable(1.3, 1.0, 0.5);
    for delta in [1.4, 1.8] {
        let v = small_jump_equivalence(&st, delta).unwrap();
        assert!(v.u_integral_finite && v.xi_integral_finite);
    }
    for delta in [0.5, 1.2, 1.3] {
        let v = small_jump_equivalence(&st, delta).unwrap();
        assert!(!v.u_integral_finite && !v.xi_integral_finite, "{delta}: {v:?}");
    }
    let cp = LevyModel::compound_poisson(0.0, 2.0, JumpLaw::Exponential { rate: 3.0 });
    for delta in [0.01, 0.5, 1.9] {
        let v = small_jump_equivalence(&cp, delta).unwrap();
        assert!(v.u_integral_finite && v.xi_integral_finite);
    }
}
