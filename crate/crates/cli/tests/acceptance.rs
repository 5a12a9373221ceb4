//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr (uncaptured) before asserting.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use erdmd::dmd::{
    char_poly_scale, eval_char_poly, fit, full_spectrum, reduced_inner, LagSet, LaggedModel,
    DEFAULT_REL_SVD_TOL,
};
use erdmd::info::{
    conditional_mutual_information, mutual_information, shuffle_significance, SampleCloud,
};
use erdmd::selection::{ErConfig, Phase};
use erdmd::systems::{
    integrate_ks_etdrk4, integrate_rk4, pod_reduce, InitialField, KsSpec, OdeSpec,
};
use erdmd::{Complex64, TimeSeries};
use erdmd_cli::commands::{self, RunSummary};
use erdmd_cli::config::{SpectrumConfig, SystemSpec, TimeWindow};
use erdmd_cli::io;
use erdmd_cli::{ExperimentConfig, Format};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn verdict(id: &str, pass: bool, detail: String) {
    let line = format!("{} {id}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn cloud(v: &[f64]) -> SampleCloud {
    SampleCloud::from_values(v).unwrap()
}

fn two_lag_values(n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..5).map(|j| 1.0 - 0.15 * j as f64).collect();
    while y.len() < n {
        let j = y.len() - 1;
        y.push(0.5 * y[j] + 0.3 * y[j - 4]);
    }
    y
}

fn scalar_series(values: &[f64]) -> TimeSeries {
    let cols: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    TimeSeries::from_columns(&cols, 1.0, 0.0).unwrap()
}

fn lorenz_window() -> TimeSeries {
    integrate_rk4(&OdeSpec::lorenz63(22.0))
        .unwrap()
        .window(20.0, 22.0)
        .unwrap()
}

fn run_preset(name: &str, out: &Path) -> (RunSummary, Duration) {
    let cfg = ExperimentConfig::preset(name).unwrap();
    let started = Instant::now();
    let summary = commands::pipeline(&cfg, out).unwrap();
    (summary, started.elapsed())
}

fn norm_of(summary: &RunSummary, lag: usize) -> f64 {
    summary
        .lag_norms
        .as_ref()
        .unwrap()
        .iter()
        .find(|n| n.lag == lag)
        .unwrap()
        .norm
}

fn finite_errors(summary: &RunSummary) -> bool {
    summary.reconstruction.iter().all(|r| {
        r.max_abs_reconstruction
            .iter()
            .all(|e| e.is_some_and(f64::is_finite))
    })
}

/// Roots of the monic polynomial with coefficients `c` (highest degree
/// first, leading 1 implied) by Durand–Kerner iteration.
fn durand_kerner(c: &[f64]) -> Vec<Complex64> {
    let n = c.len();
    let p = |z: Complex64| {
        c.iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &a| acc * z + a)
    };
    let radius = 1.0 + c.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    for _ in 0..20000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| {
                    acc * (roots[i] - roots[j])
                });
            let step = p(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Largest distance from a point of `a` to its greedily matched partner in `b`.
fn matching_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    a.iter().fold(0.0f64, |worst, z| {
        let j = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (b[i] - z).norm().total_cmp(&(b[j] - z).norm()))
            .unwrap();
        used[j] = true;
        worst.max((b[j] - z).norm())
    })
}

#[test]
fn c01_exact_lagged_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    io::write_series(
        &data,
        &scalar_series(&two_lag_values(501)),
        &["y".to_string()],
    )
    .unwrap();
    let cfg = ExperimentConfig {
        name: "two_lag".into(),
        system: SystemSpec::External { path: data },
        window: TimeWindow {
            t_start: 0.0,
            t_end: 500.0,
        },
        erdmd: ErConfig::with_d(20),
        baseline: false,
        forecast_steps: 0,
        spectrum: SpectrumConfig::default(),
        format: Format::Csv,
    };
    let cfg_path = dir.path().join("two_lag.json");
    io::write_json(&cfg_path, &cfg).unwrap();
    let out = dir.path().join("run");
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_erdmd"))
        .arg("fit")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    let elapsed = started.elapsed();
    assert!(status.success());
    let model = io::read_model(&out.join(commands::MODEL_FILE)).unwrap();
    let lags = model.lags().as_slice().to_vec();
    let coeff_err = if lags == [1, 5] {
        (model.matrix(0)[(0, 0)] - 0.5)
            .abs()
            .max((model.matrix(1)[(0, 0)] - 0.3).abs())
    } else {
        f64::INFINITY
    };
    verdict(
        "C1 exact lagged recovery",
        lags == [1, 5] && coeff_err < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "lags {lags:?}, coefficient error {coeff_err:.2e}, {}",
            secs(elapsed)
        ),
    );
}

fn scale_to_radius(mats: &mut [Mat<f64>], lags: &[usize], radius: f64) {
    let model = LaggedModel::new(LagSet::new(lags.to_vec()).unwrap(), mats.to_vec()).unwrap();
    let current = full_spectrum(&model).unwrap().eigenvalues[0].norm();
    let c = radius / current;
    for (m, &l) in mats.iter_mut().zip(lags) {
        *m = &*m * faer::Scale(c.powi(l as i32));
    }
}

#[test]
fn c02_multivariate_exact_recovery() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut radii = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lags = [1usize, 3];
        let mut mats: Vec<Mat<f64>> = lags
            .iter()
            .map(|_| Mat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        scale_to_radius(&mut mats, &lags, 0.98);
        let truth = LaggedModel::new(LagSet::new(lags.to_vec()).unwrap(), mats.clone()).unwrap();
        radii.push(full_spectrum(&truth).unwrap().eigenvalues[0].norm());
        let mut cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        while cols.len() < 200 {
            let next = truth.predict_one(&cols).unwrap();
            cols.push(next);
        }
        let ts = TimeSeries::from_columns(&cols, 1.0, 0.0).unwrap();
        let fitted = fit(&ts, truth.lags(), 3, DEFAULT_REL_SVD_TOL).unwrap();
        for (a, b) in mats.iter().zip(fitted.matrices()) {
            worst = worst.max((a - b).norm_l2());
        }
    }
    let elapsed = started.elapsed();
    let radius_ok = radii.iter().all(|r| (r - 0.98).abs() < 1e-9);
    verdict(
        "C2 multivariate exact recovery",
        radius_ok && worst < 1e-8 && elapsed < Duration::from_secs(5),
        format!(
            "5 random s=3 models with lags {{1,3}}, worst Frobenius error {worst:.2e}, {}",
            secs(elapsed)
        ),
    );
}

#[test]
fn c03_mi_calibration() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for rho in [0.3f64, 0.6, 0.9] {
        let exact = -0.5 * (1.0 - rho * rho).ln();
        let mut sum = 0.0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let x = normals(&mut rng, 4000);
            let e = normals(&mut rng, 4000);
            let y: Vec<f64> = x
                .iter()
                .zip(&e)
                .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
                .collect();
            sum += mutual_information(&cloud(&x), &cloud(&y), 5).unwrap();
        }
        let dev = sum / 20.0 - exact;
        worst = worst.max(dev.abs());
        parts.push(format!("rho {rho}: {:+.4}", dev));
    }
    let elapsed = started.elapsed();
    verdict(
        "C3 MI calibration",
        worst < 0.05 && elapsed < Duration::from_secs(30),
        format!(
            "mean minus closed form ({}), {}",
            parts.join(", "),
            secs(elapsed)
        ),
    );
}

#[test]
fn c04_cmi_null_on_markov_chain() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let n = 2000;
    let x = normals(&mut rng, n);
    let ez = normals(&mut rng, n);
    let ey = normals(&mut rng, n);
    let z: Vec<f64> = x.iter().zip(&ez).map(|(a, b)| 0.8 * a + 0.6 * b).collect();
    let y: Vec<f64> = z.iter().zip(&ey).map(|(a, b)| 0.8 * a + 0.6 * b).collect();
    let cmi = conditional_mutual_information(&cloud(&x), &cloud(&y), &cloud(&z), 5).unwrap();
    let mi = mutual_information(&cloud(&x), &cloud(&y), 5).unwrap();
    let elapsed = started.elapsed();
    verdict(
        "C4 CMI null",
        cmi.abs() < 0.05 && mi > 0.15 && elapsed < Duration::from_secs(30),
        format!("I(X;Y|Z) = {cmi:.4}, I(X;Y) = {mi:.4}, {}", secs(elapsed)),
    );
}

#[test]
fn c05_shuffle_false_positive_rate() {
    let started = Instant::now();
    let mut hits = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let x = normals(&mut rng, 200);
        let y = normals(&mut rng, 200);
        let z = SampleCloud::empty(200);
        let r = shuffle_significance(&cloud(&x), &cloud(&y), &z, 5, 100, 0.05, seed).unwrap();
        hits += usize::from(r.significant);
    }
    let rate = hits as f64 / 200.0;
    let elapsed = started.elapsed();
    verdict(
        "C5 shuffle false-positive rate",
        (0.01..=0.12).contains(&rate) && elapsed < Duration::from_secs(120),
        format!("{hits}/200 significant (rate {rate:.3}), {}", secs(elapsed)),
    );
}

#[test]
fn c06_lorenz_sparsity_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let (summary, elapsed) = run_preset("lorenz_d150", dir.path());
    let lags = summary.lags.clone().unwrap();
    let sparse = lags.len() <= 5 && lags.contains(&1) && lags.iter().any(|&l| l >= 130);
    let stats = |model: &str| {
        summary
            .reconstruction
            .iter()
            .find(|r| r.model == model)
            .unwrap()
            .clone()
    };
    let er_stats = stats(commands::ERDMD);
    let er_max = er_stats
        .max_abs_reconstruction
        .iter()
        .map(|e| e.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let curves = |model: &str| {
        summary
            .errors
            .iter()
            .find(|c| c.model == model)
            .unwrap()
            .clone()
    };
    let (er, hodmd) = (curves(commands::ERDMD), curves(commands::HODMD));
    let n_rec = er_stats.reconstruction_samples;
    let sample_err = |c: &erdmd_cli::commands::ErrorCurves, j: usize| {
        c.abs_error
            .iter()
            .map(|dim| dim[j].unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    };
    let better = (0..n_rec)
        .filter(|&j| sample_err(&hodmd, j) < sample_err(&er, j))
        .count();
    let frac = better as f64 / n_rec as f64;
    verdict(
        "C6 Lorenz sparsity and ordering",
        sparse && er_max <= 1.0 && frac >= 0.9 && elapsed < Duration::from_secs(300),
        format!(
            "lags {lags:?} (need <= 5 lags with one >= 130: {}), ERDMD max error {er_max:.3} (need <= 1.0), \
             HODMD better at {better}/{n_rec} samples ({:.0}%), {}",
            if sparse { "ok" } else { "no" },
            100.0 * frac,
            secs(elapsed)
        ),
    );
}

fn spectrum_checks(model: &LaggedModel) -> (f64, Option<f64>) {
    let eig = full_spectrum(model).unwrap().eigenvalues;
    let residual = eig
        .iter()
        .map(|&z| eval_char_poly(model, z).norm() / char_poly_scale(model, z))
        .fold(0.0, f64::max);
    let oracle = (model.state_dim() == 1).then(|| {
        let big_l = model.max_lag();
        let mut c = vec![0.0; big_l];
        for (lag, k) in model.lags().iter().zip(model.matrices()) {
            c[lag - 1] = -k[(0, 0)];
        }
        matching_error(&eig, &durand_kerner(&c))
    });
    (residual, oracle)
}

#[test]
fn c07_spectrum_consistency() {
    let started = Instant::now();
    let lorenz = lorenz_window();
    let lorenz_x = TimeSeries::new(
        lorenz.data().subrows(0, 1).to_owned(),
        lorenz.dt(),
        lorenz.t0(),
    )
    .unwrap();
    let synthetic = scalar_series(&two_lag_values(501));
    let cases: Vec<(&str, &TimeSeries, Vec<usize>)> = vec![
        ("two-lag {1,5}", &synthetic, vec![1, 5]),
        ("two-lag {1,2,5,9}", &synthetic, vec![1, 2, 5, 9]),
        ("lorenz x {1,7,20}", &lorenz_x, vec![1, 7, 20]),
        ("lorenz x {1,2,3,40}", &lorenz_x, vec![1, 2, 3, 40]),
        ("lorenz x {1,11,25,60}", &lorenz_x, vec![1, 11, 25, 60]),
        ("lorenz {1,11}", &lorenz, vec![1, 11]),
        ("lorenz {1,5,20}", &lorenz, vec![1, 5, 20]),
    ];
    let mut worst_res = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for (_, ts, lags) in &cases {
        let lags = LagSet::new(lags.clone()).unwrap();
        let target = lags.max().max(ts.len() / 4);
        let model = fit(ts, &lags, target, DEFAULT_REL_SVD_TOL).unwrap();
        assert!(model.state_dim() * model.max_lag() <= 60);
        let (res, oracle) = spectrum_checks(&model);
        worst_res = worst_res.max(res);
        if let Some(o) = oracle {
            worst_oracle = worst_oracle.max(o);
        }
    }
    let elapsed = started.elapsed();
    verdict(
        "C7 spectrum consistency",
        worst_res < 1e-6 && worst_oracle < 1e-8 && elapsed < Duration::from_secs(60),
        format!(
            "{} models, worst relative residual {worst_res:.2e}, worst scalar oracle distance {worst_oracle:.2e}, {}",
            cases.len(),
            secs(elapsed)
        ),
    );
}

#[test]
fn c08_reduced_spectrum_agreement() {
    let started = Instant::now();
    let ts = lorenz_window();
    let lags = LagSet::new(vec![1, 149]).unwrap();
    let model = fit(&ts, &lags, 150, DEFAULT_REL_SVD_TOL).unwrap();
    let full = full_spectrum(&model).unwrap().eigenvalues;
    let inner = reduced_inner(&model, 2).unwrap().eigenvalues;
    let band: Vec<Complex64> = full
        .iter()
        .copied()
        .filter(|z| z.norm() > 0.9 && z.norm() < 1.0)
        .collect();
    let hit = band
        .iter()
        .filter(|z| inner.iter().any(|w| (w - *z).norm() < 5e-3))
        .count();
    let frac = hit as f64 / band.len().max(1) as f64;
    let elapsed = started.elapsed();
    verdict(
        "C8 reduced spectrum agreement",
        !band.is_empty() && frac >= 0.8 && elapsed < Duration::from_secs(120),
        format!(
            "lags {{1,149}} fitted on the Lorenz window: {hit}/{} eigenvalues with |z| in (0.9,1) matched within 5e-3 ({:.1}%, need 80%), \
             |K_1| {:.3}, |K_149| {:.3}, {}",
            band.len(),
            100.0 * frac,
            model.lag_matrix_norms()[0].1,
            model.lag_matrix_norms()[1].1,
            secs(elapsed)
        ),
    );
}

#[test]
fn c09_ks_pipeline() {
    let started = Instant::now();
    let field = integrate_ks_etdrk4(&KsSpec::default()).unwrap();
    let (basis, _) = pod_reduce(&field, 12).unwrap();
    let energy = basis.energy_fraction;
    let mut worst_growth = 0.0f64;
    for k in 1..=4usize {
        let base = KsSpec {
            nonlinear: false,
            t_burn: 0.0,
            t_final: 1.0,
            ..KsSpec::default()
        };
        let values = base
            .grid()
            .iter()
            .map(|x| 1e-3 * (k as f64 * x).cos())
            .collect();
        let spec = KsSpec {
            initial: InitialField::Explicit { values },
            ..base
        };
        let f = integrate_ks_etdrk4(&spec).unwrap();
        let kf = k as f64;
        let omega = kf * kf - spec.viscosity() * kf.powi(4);
        let last = f.last_index();
        let ratio = f.data()[(0, last)] / f.data()[(0, 0)];
        let expected = (omega * (f.time(last) - f.t0())).exp();
        worst_growth = worst_growth.max((ratio / expected - 1.0).abs());
    }
    let elapsed = started.elapsed();
    verdict(
        "C9 KS pipeline",
        (energy - 0.986).abs() <= 0.010
            && worst_growth < 1e-6
            && elapsed < Duration::from_secs(300),
        format!(
            "{}x{} field, 12-mode POD energy {energy:.4} (need 0.986 +- 0.010), \
             worst linear growth relative error {worst_growth:.2e} (need < 1e-6), {}",
            field.state_dim(),
            field.len(),
            secs(elapsed)
        ),
    );
}

#[test]
fn c10_determinism() {
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["lorenz_d150", "ks_d200"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (_, first) = run_preset(name, a.path());
        let (_, second) = run_preset(name, b.path());
        let read = |d: &Path| std::fs::read(d.join(commands::SUMMARY_FILE)).unwrap();
        let same = read(a.path()) == read(b.path());
        let in_time = second < first * 2 + Duration::from_secs(1);
        pass &= same && in_time;
        lines.push(format!(
            "{name} {} ({} then {})",
            if same { "identical" } else { "differs" },
            secs(first),
            secs(second)
        ));
    }
    verdict("C10 determinism", pass, lines.join(", "));
}

fn preset_complete(name: &str) -> RunSummary {
    let dir = tempfile::tempdir().unwrap();
    let (summary, elapsed) = run_preset(name, dir.path());
    let lags = summary.lags.clone().unwrap();
    let finite = finite_errors(&summary);
    verdict(
        &format!("preset {name} completes"),
        lags.len() <= 12 && finite,
        format!(
            "lags {lags:?} ({} <= 12), finite reconstruction error: {finite}, {}",
            lags.len(),
            secs(elapsed)
        ),
    );
    summary
}

#[test]
fn preset_lorenz_d100() {
    preset_complete("lorenz_d100");
}

#[test]
fn preset_ks_d200() {
    preset_complete("ks_d200");
}

#[test]
fn preset_rossler_d1000() {
    let summary = preset_complete("rossler_d1000");
    let lags = summary.lags.clone().unwrap();
    let top = *lags.last().unwrap();
    let ratio = norm_of(&summary, 1) / norm_of(&summary, top);
    let trace = summary.trace.as_ref().unwrap();
    let builds = trace
        .events
        .iter()
        .filter(|e| e.phase == Phase::Build && e.accepted)
        .count();
    let cap = summary.config.erdmd.max_lag_count;
    let capped = cap.is_some_and(|c| builds + 1 >= c);
    verdict(
        "preset rossler_d1000 norm gap",
        ratio > 1e6,
        format!(
            "|K_1|/|K_{top}| = {ratio:.3e} (need > 1e6); build accepted {builds} lags{}",
            if capped {
                ", stopped at max_lag_count"
            } else {
                ""
            }
        ),
    );
}
