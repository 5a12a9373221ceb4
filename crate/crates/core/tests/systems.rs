use erdmd::systems::{
    integrate_ks_etdrk4, integrate_rk4, pod_reconstruct, pod_reduce, rk4_integrate, InitialField,
    KsSpec, OdeSpec,
};
use erdmd::{Error, TimeSeries};
use faer::Mat;

fn oscillator_error(dt: f64) -> f64 {
    let n = (2.0 / dt).round() as usize;
    let out = rk4_integrate(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        },
        &[1.0, 0.0],
        0.0,
        dt,
        n,
    )
    .unwrap();
    let t = n as f64 * dt;
    (out[(0, n)] - t.cos()).hypot(out[(1, n)] + t.sin())
}

#[test]
fn rk4_converges_at_fourth_order() {
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| oscillator_error(dt))
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.8..=4.2).contains(&order), "observed order {order}");
    }
}

#[test]
fn lorenz_span_has_2201_samples() {
    let ts = integrate_rk4(&OdeSpec::lorenz63(22.0)).unwrap();
    assert_eq!(ts.state_dim(), 3);
    assert_eq!(ts.len(), 2201);
    assert_eq!(
        ts.column(0).iter().copied().collect::<Vec<_>>(),
        vec![1.0, 1.0, 1.0]
    );
    let z_max = (0..ts.len())
        .map(|j| ts.data()[(2, j)])
        .fold(0.0f64, f64::max);
    assert!(z_max > 30.0 && z_max < 50.0);
}

#[test]
fn lorenz_from_the_origin_stays_there() {
    let spec = OdeSpec {
        y0: vec![0.0; 3],
        ..OdeSpec::lorenz63(5.0)
    };
    let ts = integrate_rk4(&spec).unwrap();
    assert_eq!(ts.data().norm_max(), 0.0);
}

#[test]
fn rossler_stays_on_a_bounded_attractor() {
    let ts = integrate_rk4(&OdeSpec::rossler(40.0)).unwrap();
    assert_eq!(ts.len(), 4001);
    assert!(ts.data().norm_max() < 60.0);
}

fn single_mode(spec: &KsSpec, k: usize, amp: f64) -> Vec<f64> {
    spec.grid()
        .iter()
        .map(|x| amp * (k as f64 * x).cos())
        .collect()
}

#[test]
fn linear_ks_modes_grow_at_their_rates() {
    for k in [1usize, 2, 3, 4] {
        let base = KsSpec {
            nonlinear: false,
            t_burn: 0.0,
            t_final: 1.0,
            ..KsSpec::default()
        };
        let spec = KsSpec {
            initial: InitialField::Explicit {
                values: single_mode(&base, k, 1e-3),
            },
            ..base
        };
        let field = integrate_ks_etdrk4(&spec).unwrap();
        let nu = spec.viscosity();
        let kf = k as f64;
        let omega = kf * kf - nu * kf.powi(4);
        let last = field.last_index();
        let t = field.time(last) - field.t0();
        let ratio = field.data()[(0, last)] / field.data()[(0, 0)];
        let expected = (omega * t).exp();
        assert!(
            (ratio / expected - 1.0).abs() < 1e-6,
            "k = {k}: ratio {ratio} vs {expected}"
        );
        assert!((spec.linear_rates()[k] - omega).abs() < 1e-15);
    }
}

#[test]
fn ks_default_run_is_finite_and_conserves_the_mean() {
    let spec = KsSpec::default();
    let field = integrate_ks_etdrk4(&spec).unwrap();
    assert_eq!(field.state_dim(), 128);
    assert_eq!(field.len(), 602);
    assert_eq!(field.t0(), 10.0);
    assert_eq!(field.dt(), 0.25);
    assert!(field.is_finite());
    let data = field.data();
    let mean = |j: usize| (0..128).map(|i| data[(i, j)]).sum::<f64>() / 128.0;
    let m0 = mean(0);
    for j in [100, 300, 601] {
        assert!((mean(j) - m0).abs() < 1e-10);
    }
    let amplitude = data.norm_max();
    assert!(amplitude > 0.5 && amplitude < 30.0, "amplitude {amplitude}");
}

#[test]
fn ks_zero_field_stays_zero() {
    let spec = KsSpec {
        initial: InitialField::Zero,
        t_final: 2.0,
        ..KsSpec::default()
    };
    assert_eq!(integrate_ks_etdrk4(&spec).unwrap().data().norm_max(), 0.0);
}

#[test]
fn ks_rejects_bad_grids() {
    let spec = KsSpec {
        n_grid: 100,
        ..KsSpec::default()
    };
    assert!(integrate_ks_etdrk4(&spec).is_err());
}

fn rank_two_field() -> TimeSeries {
    let data = Mat::from_fn(20, 50, |i, j| {
        let x = i as f64 / 20.0;
        let t = j as f64 / 10.0;
        1.0 + (2.0 * x).sin() * t.cos() + 0.3 * (5.0 * x).cos() * (2.0 * t).sin()
    });
    TimeSeries::new(data, 0.1, 0.0).unwrap()
}

#[test]
fn pod_captures_a_rank_two_field() {
    let field = rank_two_field();
    let (basis, coeffs) = pod_reduce(&field, 2).unwrap();
    assert!((basis.energy_fraction - 1.0).abs() < 1e-12);
    assert_eq!(coeffs.state_dim(), 2);
    let back = pod_reconstruct(&basis, &coeffs).unwrap();
    assert!((back.data() - field.data()).norm_max() < 1e-12);
    let modes = basis.modes_matrix();
    let gram = modes.transpose() * &modes;
    assert!((gram - Mat::<f64>::identity(2, 2)).norm_max() < 1e-12);
}

#[test]
fn pod_one_mode_keeps_the_dominant_energy() {
    let (basis, _) = pod_reduce(&rank_two_field(), 1).unwrap();
    let sv = &basis.singular_values;
    let expected = sv[0] * sv[0] / sv.iter().map(|s| s * s).sum::<f64>();
    assert!((basis.energy_fraction - expected).abs() < 1e-12);
    assert!(basis.energy_fraction > 0.5 && basis.energy_fraction < 1.0);
}

#[test]
fn pod_rejects_modes_beyond_the_rank() {
    assert!(matches!(
        pod_reduce(&rank_two_field(), 3),
        Err(Error::Rank {
            requested: 3,
            rank: 2
        })
    ));
}
