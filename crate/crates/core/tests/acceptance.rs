//! End-to-end acceptance suite. Runs each criterion in turn, prints one
//! PASS/FAIL line per criterion and exits non-zero if any failed.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oscloc::dynamics::{
    evolve_symbol, im_pairing, pq_commutator_matrix, pq_commutator_sup, time_grid,
    weyl_commutator_norm, Entry, WeylSymbol,
};
use oscloc::experiment::{
    fit_exponential_decay_jackknife, run_experiment, write_table_csv, DecayFit, Execution,
    ModelConfig, ObservableKind, ObservableSpec, PairPolicy,
};
use oscloc::green::{green_function, green_spectral, SpectralParameterZ};
use oscloc::model::{assemble_h, Boundary, Lattice, ModelParams};
use oscloc::spectral::{correlator_q, diagonalize, symplectic_form, symplectic_matrix, SpectralData};
use oscloc::states::{
    gs_pq_correlations, gs_weyl_expectation, pq_correlations, pq_correlations_sup,
    thermal_pq_correlations, weighted_re_pairing, weighted_re_pairing_expanded, weyl_correlation,
    weyl_expectation, ThermalSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random masses, springs and couplings. With `gapped`, `k_x >= 4 m_x + 1/2`
/// so that every eigenvalue of `h` is at least 1.
fn random_model(rng: &mut ChaCha8Rng, dim: usize, half_width: usize, gapped: bool) -> (ModelParams, SpectralData) {
    let lat = Arc::new(Lattice::new(dim, half_width, Boundary::Open).unwrap());
    let n = lat.num_sites();
    let mass: Vec<f64> = (0..n).map(|_| rng.random_range(0.25..2.0)).collect();
    let spring: Vec<f64> = mass
        .iter()
        .map(|m| {
            if gapped {
                4.0 * m + rng.random_range(0.5..5.0)
            } else {
                rng.random_range(0.1..8.0)
            }
        })
        .collect();
    let coupling: Vec<f64> = (0..lat.edges().len()).map(|_| rng.random_range(0.0..2.0)).collect();
    let p = ModelParams::new(lat, mass, spring, coupling).unwrap();
    let s = diagonalize(&assemble_h(&p)).unwrap();
    (p, s)
}

fn random_small(rng: &mut ChaCha8Rng, gapped: bool) -> (ModelParams, SpectralData) {
    if rng.random_bool(0.5) {
        let hw = rng.random_range(0..=15);
        random_model(rng, 1, hw, gapped)
    } else {
        let hw = rng.random_range(1..=3);
        random_model(rng, 2, hw, gapped)
    }
}

fn random_symbol(rng: &mut ChaCha8Rng, n: usize) -> WeylSymbol {
    WeylSymbol::new(
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    )
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn spectral_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut orth, mut recon, mut bound_violations) = (0.0_f64, 0.0_f64, 0);
    for i in 0..200 {
        let (p, s) = if i % 2 == 0 {
            let hw = rng.random_range(0..=60);
            random_model(&mut rng, 1, hw, false)
        } else {
            let hw = rng.random_range(1..=12);
            random_model(&mut rng, 2, hw, false)
        };
        let h = assemble_h(&p);
        let o = s.vectors();
        let n = s.dim();
        orth = orth.max(max_abs(&(o.transpose() * o - DMatrix::identity(n, n))));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(s.eigenvalues()));
        recon = recon.max(max_abs(&(o * d * o.transpose() - &h)) / s.norm());
        if s.norm() > p.bounds().h_norm_bound(p.lattice().dim()) {
            bound_violations += 1;
        }
    }
    check(
        orth <= 1e-10 && recon <= 1e-8 && bound_violations == 0,
        format!("max|O^T O - I| = {orth:.1e}, max|O g^2 O^T - h|/|h| = {recon:.1e}, norm-bound violations = {bound_violations}"),
    )
}

fn canonical_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut ccr, mut symp) = (0.0_f64, 0.0_f64);
    let j = Matrix2::new(0.0, 1.0, -1.0, 0.0);
    for _ in 0..100 {
        let (p, s) = random_small(&mut rng, false);
        let n = s.dim();
        for x in 0..n {
            for y in 0..n {
                let want = if x == y { j } else { Matrix2::zeros() };
                let a = pq_commutator_matrix(&s, &p, x, y, 0.0);
                ccr = ccr.max((a - want).abs().max());
            }
        }
        let sm = symplectic_matrix(&s, &p);
        let jj = symplectic_form(n);
        symp = symp.max(max_abs(&(&sm * &jj * sm.transpose() - &jj)));
    }
    check(
        ccr <= 1e-12 && symp <= 1e-10,
        format!("max|A(0) - delta J| = {ccr:.1e}, max|S J S^T - J| = {symp:.1e}"),
    )
}

fn single_mode_oracles() -> Outcome {
    let lat = Arc::new(Lattice::new(1, 0, Boundary::Open).unwrap());
    let p = ModelParams::uniform(lat, 0.5, 2.0, 1.0).unwrap();
    let s = diagonalize(&assemble_h(&p)).unwrap();
    let gs = gs_pq_correlations(&s, &p, 0, 0, 0.0);
    let mut err = 0.0_f64;
    err = err.max((gs[(0, 0)] - Complex64::new(0.5, 0.0)).norm());
    err = err.max((gs[(1, 1)] - Complex64::new(0.5, 0.0)).norm());
    err = err.max((gs[(0, 1)] - Complex64::new(0.0, 0.5)).norm());
    for beta in [0.3, 1.0, 4.0] {
        let th = thermal_pq_correlations(&s, &p, 0, 0, 0.0, beta).unwrap();
        err = err.max((th[(0, 0)].re - 0.5 / beta.tanh()).abs() + th[(0, 0)].im.abs());
    }
    let w = gs_weyl_expectation(&s, &p, &WeylSymbol::delta(1, 0, Complex64::new(2.0, 0.0)));
    err = err.max((w - (-1.0f64).exp()).abs());
    check(err <= 1e-12, format!("max deviation from oscillator values = {err:.1e}"))
}

/// `<q_x q_y>`, `<q_x p_y>`, `<p_x q_y>`, `<p_x p_y>` on a constant-parameter
/// ring from plane waves: with `N` sites, `h` has eigenvalues
/// `w_j = (k/2 + 2 lambda (1 - cos(2 pi j / N))) / (2m)` on `e^{2 pi i j x / N}`.
fn ring_oracle(n: usize, m: f64, k: f64, lambda: f64, state: ThermalSpec, sep: usize) -> Matrix2<Complex64> {
    let (mut qq, mut pp) = (0.0, 0.0);
    for j in 0..n {
        let q = 2.0 * PI * j as f64 / n as f64;
        let w = (0.5 * k + 2.0 * lambda * (1.0 - q.cos())) / (2.0 * m);
        let g = w.sqrt();
        let a = match state {
            ThermalSpec::Ground => 1.0,
            ThermalSpec::Beta(b) => 1.0 / (b * g).tanh(),
        };
        let phase = (q * sep as f64).cos() / n as f64;
        // (1/2) mu^{1/2} h^{-1/2} coth mu^{1/2} and (1/2) mu^{-1/2} h^{1/2} coth mu^{-1/2}
        qq += 0.5 / (2.0 * m) * phase * a / g;
        pp += 0.5 * (2.0 * m) * phase * a * g;
    }
    let d = if sep == 0 { 0.5 } else { 0.0 };
    Matrix2::new(
        Complex64::new(qq, 0.0),
        Complex64::new(0.0, d),
        Complex64::new(0.0, -d),
        Complex64::new(pp, 0.0),
    )
}

fn translation_invariant_oracle() -> Outcome {
    let half_width = 64;
    let (m, k, lambda) = (0.7, 1.3, 1.0);
    let lat = Arc::new(Lattice::new(1, half_width, Boundary::Periodic).unwrap());
    let n = lat.num_sites();
    let p = ModelParams::uniform(lat.clone(), m, k, lambda).unwrap();
    let s = diagonalize(&assemble_h(&p)).unwrap();
    let mut err = 0.0_f64;
    for state in [ThermalSpec::Ground, ThermalSpec::Beta(0.5), ThermalSpec::Beta(2.0)] {
        for x in 0..n {
            for y in 0..n {
                let got = pq_correlations(&s, &p, x, y, 0.0, state);
                let sep = (x as i64 - y as i64).rem_euclid(n as i64) as usize;
                let want = ring_oracle(n, m, k, lambda, state, sep);
                for (a, b) in got.iter().zip(want.iter()) {
                    err = err.max((a - b).norm());
                }
            }
        }
    }
    check(err <= 1e-8, format!("{n}-site ring, max deviation from plane-wave sums = {err:.1e}"))
}

fn two_route_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut green = 0.0_f64;
    for _ in 0..50 {
        let (p, s) = random_small(&mut rng, false);
        let h = assemble_h(&p);
        let n = s.dim();
        let z = SpectralParameterZ::new(rng.random_range(0.0..s.norm()), rng.random_range(0.05..1.0));
        for _ in 0..5 {
            let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
            let a = green_function(&h, x, y, z).unwrap();
            let b = green_spectral(&s, x, y, z).unwrap();
            green = green.max((a - b).norm());
        }
    }
    let mut pairing = 0.0_f64;
    let mut thermal = 0.0_f64;
    for _ in 0..100 {
        let (p, s) = random_small(&mut rng, false);
        let n = s.dim();
        let (f, g) = (random_symbol(&mut rng, n), random_symbol(&mut rng, n));
        let t = rng.random_range(-10.0..10.0);
        let direct = evolve_symbol(&s, &p, &f, t).inner(&g).im;
        pairing = pairing.max((im_pairing(&s, &p, &f, &g, t) - direct).abs());
        let state = ThermalSpec::Beta(rng.random_range(0.2..5.0));
        let a = weighted_re_pairing(&s, &p, &f, &g, t, state);
        let b = weighted_re_pairing_expanded(&s, &p, &f, &g, t, state);
        thermal = thermal.max((a - b).abs());
    }
    check(
        green <= 1e-9 && pairing <= 1e-10 && thermal <= 1e-10,
        format!("green LU vs spectral {green:.1e}, im pairing vs evolved symbol {pairing:.1e}, thermal mode sum vs expansion {thermal:.1e}"),
    )
}

fn dominance_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut weyl_excess = f64::NEG_INFINITY;
    for _ in 0..200 {
        let (p, s) = random_small(&mut rng, false);
        let n = s.dim();
        let scale = rng.random_range(0.1..3.0);
        let f = WeylSymbol::new(random_symbol(&mut rng, n).values().iter().map(|c| c * scale).collect());
        let g = random_symbol(&mut rng, n);
        let t = rng.random_range(-20.0..20.0);
        let theta = im_pairing(&s, &p, &f, &g, t);
        weyl_excess = weyl_excess.max(weyl_commutator_norm(&s, &p, &f, &g, t) - theta.abs().min(2.0));
    }
    let grid = time_grid(100.0, 10_000);
    let mut grid_excess = f64::NEG_INFINITY;
    for _ in 0..5 {
        let (p, s) = random_small(&mut rng, false);
        let n = s.dim();
        for _ in 0..3 {
            let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
            let sup = pq_commutator_sup(&s, &p, x, y);
            for &t in &grid {
                let a = pq_commutator_matrix(&s, &p, x, y, t);
                grid_excess = grid_excess.max((a.abs() - sup).max());
            }
        }
    }
    let mut q_excess = f64::NEG_INFINITY;
    let (_, s) = random_small(&mut rng, false);
    let n = s.dim();
    for _ in 0..100 {
        let alpha = rng.random_range(-1.0..1.0);
        let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
        let (freq, phase) = (rng.random_range(0.0..20.0), rng.random_range(0.0..2.0 * PI));
        let amp = rng.random_range(0.0..=1.0);
        let u = move |e: f64| Complex64::from_polar(amp, freq * e + phase);
        let v = s.matel(|e| e.powf(alpha) * u(e), x, y).unwrap().norm();
        q_excess = q_excess.max(v - correlator_q(&s, alpha, x, y, None));
    }
    check(
        weyl_excess <= 1e-12 && grid_excess <= 1e-12 && q_excess <= 1e-12,
        format!("max excess: weyl norm over min(2,|theta|) {weyl_excess:.1e}, grid over sup {grid_excess:.1e}, |u|<=1 over Q {q_excess:.1e}"),
    )
}

fn localization_table(width: f64, realizations: u64) -> oscloc::Result<DecayFit> {
    let model = ModelConfig {
        dim: 1,
        half_width: 101,
        boundary: Boundary::Open,
        mass: 0.5,
        coupling: 1.0,
        k_low: 0.0,
        width,
    };
    let obs = ObservableSpec::new(ObservableKind::Correlator { alpha: -0.5, window: None }, 0.5)?;
    let exec = Execution {
        realizations,
        seed: 2024,
        workers: 0,
        ..Execution::default()
    };
    let table = run_experiment(&model, &obs, &exec)?;
    fit_exponential_decay_jackknife(&table, 5, 40)
}

fn fmt_fit(f: &DecayFit) -> String {
    format!("mu' = {:.4} +- {:.4}, R^2 = {:.4}", f.mu_prime, f.mu_stderr, f.r_squared)
}

fn one_dimensional_localization() -> Outcome {
    match localization_table(8.0, 500) {
        Ok(f) => check(f.mu_prime > 0.0 && f.r_squared >= 0.9, format!("W = 8: {}", fmt_fit(&f))),
        Err(e) => check(false, format!("error: {e}")),
    }
}

fn disorder_monotonicity() -> Outcome {
    let mut fits = Vec::new();
    for w in [2.0, 8.0, 32.0] {
        match localization_table(w, 500) {
            Ok(f) => fits.push((w, f)),
            Err(e) => return check(false, format!("W = {w}: error: {e}")),
        }
    }
    let ok = fits.windows(2).all(|p| {
        let (a, b) = (&p[0].1, &p[1].1);
        b.mu_prime >= a.mu_prime - 2.0 * (a.mu_stderr.powi(2) + b.mu_stderr.powi(2)).sqrt()
    });
    let detail = fits
        .iter()
        .map(|(w, f)| format!("W = {w}: {}", fmt_fit(f)))
        .collect::<Vec<_>>()
        .join("; ");
    check(ok, detail)
}

fn low_temperature_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let hot = ThermalSpec::Beta(20.0);
    let mut err = 0.0_f64;
    let mut gmin = f64::INFINITY;
    for _ in 0..30 {
        let (p, s) = random_small(&mut rng, true);
        gmin = gmin.min(s.gammas()[0]);
        let n = s.dim();
        for _ in 0..5 {
            let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
            let t = rng.random_range(-5.0..5.0);
            let a = pq_correlations(&s, &p, x, y, t, hot);
            let b = pq_correlations(&s, &p, x, y, t, ThermalSpec::Ground);
            err = err.max((a - b).iter().fold(0.0, |m, c| m.max(c.norm())));
            let a = pq_correlations_sup(&s, &p, x, y, hot);
            let b = pq_correlations_sup(&s, &p, x, y, ThermalSpec::Ground);
            err = err.max((a - b).abs().max());
            let (f, g) = (random_symbol(&mut rng, n), random_symbol(&mut rng, n));
            let a = weyl_expectation(&s, &p, &f, hot);
            let b = weyl_expectation(&s, &p, &f, ThermalSpec::Ground);
            err = err.max((a - b).abs());
            let a = weyl_correlation(&s, &p, &f, &g, t, hot);
            let b = weyl_correlation(&s, &p, &f, &g, t, ThermalSpec::Ground);
            err = err.max((a - b).norm());
        }
    }
    check(
        gmin >= 1.0 && err <= 1e-8,
        format!("min gamma = {gmin:.3}, max |beta=20 - ground| = {err:.1e}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            ModelConfig {
                dim: 1,
                half_width: 30,
                ..ModelConfig::default()
            },
            ObservableKind::Correlator { alpha: -0.5, window: None },
            PairPolicy::Axis,
        ),
        (
            ModelConfig {
                dim: 2,
                half_width: 3,
                width: 32.0,
                ..ModelConfig::default()
            },
            ObservableKind::ThermalPqSup { entry: Entry::Qp, beta: 1.5 },
            PairPolicy::All,
        ),
        (
            ModelConfig {
                dim: 2,
                half_width: 4,
                ..ModelConfig::default()
            },
            ObservableKind::GreenMoment { s: 0.4, z: SpectralParameterZ::new(2.0, 0.01) },
            PairPolicy::Axis,
        ),
    ];
    let mut mismatches = 0;
    for (i, (model, kind, pairs)) in cases.iter().enumerate() {
        let mut reference: Option<Vec<u8>> = None;
        for workers in [1, 2, 8, 0] {
            let exec = Execution {
                realizations: 60,
                seed: 77,
                workers,
                pairs: *pairs,
                ..Execution::default()
            };
            let t = run_experiment(model, &ObservableSpec::new(*kind, 0.5).unwrap(), &exec).unwrap();
            let path = dir.path().join(format!("case{i}_w{workers}.csv"));
            write_table_csv(&path, &t.rows).unwrap();
            let bytes = std::fs::read(&path).unwrap();
            match &reference {
                None => reference = Some(bytes),
                Some(r) if *r != bytes => mismatches += 1,
                Some(_) => {}
            }
        }
    }
    check(
        mismatches == 0,
        format!("{} observables x worker counts {{1, 2, 8, all}}: {mismatches} CSV mismatches", cases.len()),
    )
}

fn main() {
    // Accept and ignore libtest arguments such as `--nocapture`.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 10] = [
        ("spectral correctness", spectral_correctness, Some(Duration::from_secs(30))),
        ("canonical normalization", canonical_normalization, None),
        ("single-mode oracles", single_mode_oracles, None),
        ("translation-invariant oracle", translation_invariant_oracle, Some(Duration::from_secs(10))),
        ("two-route consistency", two_route_consistency, None),
        ("dominance invariants", dominance_invariants, None),
        ("1D localization", one_dimensional_localization, Some(Duration::from_secs(300))),
        ("disorder monotonicity", disorder_monotonicity, Some(Duration::from_secs(900))),
        ("low-temperature limit", low_temperature_limit, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > *b {
                out.pass = false;
                out.detail += &format!("; exceeded time budget of {} s", b.as_secs());
            }
        }
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<30} {} ({:.2} s) {}",
            i + 1,
            name,
            if out.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
