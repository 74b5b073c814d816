mod common;

use ehrenfest::classical::{ManifoldCurve, PhasePoint};
use ehrenfest::dilation::{ehrenfest_time, gaussian_dilation_evolve, EhrenfestKind};
use ehrenfest::error::Error;
use ehrenfest::measurement::{
    born_sample, collapse, collapse_with, husimi, region_masses, sample_mean_std, tube_mass,
    uniform_axis, write_samples_csv, BornSampler, CollapseWindow, RNG_ALGORITHM,
};
use ehrenfest::experiments::doublewell_separatrix;
use ehrenfest::wavepacket::{coherent_state, make_grid, overlap, GaussianState, Grid, WaveFunction};
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const N: usize = 100_000;

fn gaussian_states(hbar: f64) -> Vec<GaussianState<f64>> {
    let g0 = GaussianState::coherent(0.0, 0.0, hbar);
    vec![
        g0,
        gaussian_dilation_evolve(&g0, ehrenfest_time(hbar, EhrenfestKind::Half).unwrap()),
        gaussian_dilation_evolve(&g0, ehrenfest_time(hbar, EhrenfestKind::Full).unwrap()),
    ]
}

fn on_grid(g: &GaussianState<f64>, grid: &Grid<f64>) -> WaveFunction<f64> {
    let mut psi = g.sample(grid);
    psi.normalize().unwrap();
    psi
}

#[test]
fn ks_distance_against_exact_distributions() {
    let grid = Grid::<f64>::standard();
    let bound = 1.63 / (N as f64).sqrt();
    for state in gaussian_states(0.01) {
        let psi = on_grid(&state, &grid);
        let sampler = BornSampler::new(&psi).unwrap();
        let exact = common::gaussian_position_cdf(&state);
        for seed in [1, 2, 3] {
            let xs: Vec<f64> = sampler.sample(N, seed).iter().map(|r| r.x).collect();
            let d_grid = common::ks_distance(&xs, |x| sampler.cdf(x));
            let d_exact = common::ks_distance(&xs, &exact);
            assert!(d_grid <= bound, "grid KS {d_grid} > {bound}");
            assert!(d_exact <= bound, "continuum KS {d_exact} > {bound}");
        }
    }
}

#[test]
fn sampler_cdf_matches_continuum() {
    let grid = Grid::<f64>::standard();
    for state in gaussian_states(0.01) {
        let sampler = BornSampler::new(&on_grid(&state, &grid)).unwrap();
        let exact = common::gaussian_position_cdf(&state);
        let sigma = state.position_variance().sqrt();
        for k in -40..=40 {
            let x = k as f64 * sigma / 10.0;
            // Within-cell linearization costs O(dx² ρ') ≈ 4e-4 at ℏ = 0.01.
            assert!((sampler.cdf(x) - exact(x)).abs() <= 1e-3, "x = {x}");
        }
    }
}

/// Chi-square of counts binned to the nearest grid point against the
/// point weights `|ψᵢ|² dx`; bins expecting fewer than 20 are pooled.
fn chi_square_passes(psi: &WaveFunction<f64>, seed: u64) -> (f64, f64) {
    let grid = psi.grid();
    let rho = psi.density();
    let mut counts = vec![0usize; grid.n()];
    for r in born_sample(psi, N, seed).unwrap() {
        let i = ((r.x - grid.x_min()) / grid.dx()).round() as usize % grid.n();
        counts[i] += 1;
    }
    let total: f64 = rho.iter().sum();
    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut pooled_e, mut pooled_o) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(&rho) {
        let e = N as f64 * p / total;
        if e >= 20.0 {
            chi2 += (*c as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_e += e;
            pooled_o += *c as f64;
        }
    }
    if pooled_e >= 20.0 {
        chi2 += (pooled_o - pooled_e).powi(2) / pooled_e;
        bins += 1;
    }
    let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-3);
    (chi2, critical)
}

#[test]
fn chi_square_goodness_of_fit() {
    let wide = make_grid(2048, 32.0_f64).unwrap();
    let cat = {
        let a = coherent_state(&wide, -2.0, 0.0, 0.5).unwrap();
        let b = coherent_state(&wide, 1.5, 1.0, 0.5).unwrap();
        let amps = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| x + Complex64::new(0.3, 0.6) * y)
            .collect();
        let mut psi = WaveFunction::from_amplitudes(wide, amps, 0.5).unwrap();
        psi.normalize().unwrap();
        psi
    };
    let states = [
        coherent_state(&wide, 0.0, 0.0, 1.0).unwrap(),
        coherent_state(&Grid::standard(), 0.3, 0.0, 0.01).unwrap(),
        cat,
    ];
    for (k, psi) in states.iter().enumerate() {
        let (chi2, critical) = chi_square_passes(psi, 40 + k as u64);
        assert!(chi2 <= critical, "state {k}: chi2 {chi2} > {critical}");
    }
}

#[test]
fn sample_statistics() {
    let grid = make_grid(2048, 32.0_f64).unwrap();
    let psi = coherent_state(&grid, 0.0, 0.0, 1.0).unwrap();
    let s = born_sample(&psi, N, 5).unwrap();
    let sigma = 0.5_f64.sqrt();
    let (mean, std) = sample_mean_std(&s);
    assert!(mean.abs() <= 3.0 * sigma / (N as f64).sqrt());
    assert!((std - sigma).abs() <= 0.01 * sigma);
    for r in &s {
        assert_eq!(r.bin, ((r.x - grid.x_min()) / grid.dx()).floor() as usize);
        assert!(r.bin < grid.n());
        assert_eq!(r.seed, 5);
        assert_eq!(r.rng, RNG_ALGORITHM);
    }
}

#[test]
fn same_seed_same_bytes() {
    let grid = Grid::<f64>::standard();
    for state in gaussian_states(0.01) {
        let psi = on_grid(&state, &grid);
        let render = |seed| {
            let mut buf = Vec::new();
            write_samples_csv(&born_sample(&psi, 1000, seed).unwrap(), &mut buf).unwrap();
            buf
        };
        assert_eq!(render(9), render(9));
        assert_ne!(render(9), render(10));
        assert!(String::from_utf8(render(9)).unwrap().starts_with("idx,x,bin\n"));
    }
}

#[test]
fn sampler_rejects_bad_input() {
    let grid = make_grid(256, 16.0_f64).unwrap();
    let psi = coherent_state(&grid, 0.0, 0.0, 1.0).unwrap();
    assert!(born_sample(&psi, 0, 1).is_err());
    let off = psi.scaled(Complex64::new(2.0, 0.0));
    assert!(matches!(born_sample(&off, 10, 1), Err(Error::NotNormalized { .. })));
}

#[test]
fn collapse_then_resample() {
    let grid = Grid::<f64>::standard();
    let hbar = 0.01;
    let spread = on_grid(&gaussian_states(hbar)[2], &grid);
    let width = 4.0 * grid.dx();
    for seed in [1, 2, 3] {
        let x_star = born_sample(&spread, 1, seed).unwrap()[0].x;
        let after = collapse(&spread, x_star, width).unwrap();
        assert!((after.norm() - 1.0).abs() <= 1e-12);
        let again = born_sample(&after, 10_000, seed + 100).unwrap();
        let inside = again.iter().filter(|r| (r.x - x_star).abs() <= 3.0 * width).count();
        assert!(inside as f64 >= 0.99 * 10_000.0, "{inside}");
    }
}

#[test]
fn collapse_of_concentrated_state_is_gentle() {
    let grid = make_grid(2048, 32.0_f64).unwrap();
    let psi = coherent_state(&grid, 1.0, 0.0, 0.1).unwrap();
    let after = collapse(&psi, 1.0, 5.0).unwrap();
    assert!(overlap(&psi, &after).unwrap().norm() >= 0.999);
}

#[test]
fn collapse_errors() {
    let grid = make_grid(2048, 32.0_f64).unwrap();
    let psi = coherent_state(&grid, -5.0, 0.0, 0.1).unwrap();
    assert!(matches!(collapse(&psi, 0.0, grid.dx()), Err(Error::InvalidParameter(_))));
    assert!(matches!(collapse(&psi, 12.0, 0.05), Err(Error::ZeroMass { .. })));
}

#[test]
fn interval_window_is_idempotent_gaussian_is_not() {
    let grid = Grid::<f64>::standard();
    let spread = on_grid(&gaussian_states(0.01)[2], &grid);
    let w = 4.0 * grid.dx();
    let once = collapse_with(&spread, 1.0, w, CollapseWindow::Interval).unwrap();
    let twice = collapse_with(&once, 1.0, w, CollapseWindow::Interval).unwrap();
    assert!(once.l2_distance(&twice).unwrap() <= 1e-6);
    // A second Gaussian window narrows the state again.
    let once = collapse(&spread, 1.0, w).unwrap();
    let twice = collapse(&once, 1.0, w).unwrap();
    assert!(once.l2_distance(&twice).unwrap() > 0.1);
}

#[test]
fn husimi_of_coherent_state() {
    let grid = make_grid(2048, 32.0_f64).unwrap();
    for (q0, p0, hbar) in [(0.0, 0.0, 0.1), (1.2, -0.7, 0.05), (-0.5, 0.4, 0.2)] {
        let psi = coherent_state(&grid, q0, p0, hbar).unwrap();
        let w = 6.0 * hbar.sqrt();
        let qa = uniform_axis(q0 - w, q0 + w, 121);
        let pa = uniform_axis(p0 - w, p0 + w, 121);
        let h = husimi(&psi, &qa, &pa).unwrap();
        assert!(h.values.iter().all(|v| *v >= 0.0));
        assert!((h.total_mass() - 1.0).abs() <= 1e-3, "{}", h.total_mass());
        let peak = h.argmax();
        assert!((peak.q - q0).abs() <= h.dq() && (peak.p - p0).abs() <= h.dp());
        let (sq, sp) = h.spread_about_peak();
        assert!(sq >= hbar / 2.0 * (1.0 - 1e-2) && sp >= hbar / 2.0 * (1.0 - 1e-2));
        // The Husimi density of a coherent state has variance ℏ per axis.
        assert!((sq - hbar).abs() <= 0.02 * hbar, "{sq}");
        assert!((sp - hbar).abs() <= 0.02 * hbar, "{sp}");
    }
}

#[test]
fn husimi_csv_and_mismatch() {
    let grid = make_grid(256, 16.0_f64).unwrap();
    let psi = coherent_state(&grid, 0.0, 0.0, 1.0).unwrap();
    let h = husimi(&psi, &uniform_axis(-1.0, 1.0, 3), &uniform_axis(-1.0, 1.0, 4)).unwrap();
    let mut buf = Vec::new();
    h.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("q,p,value\n"));
    assert_eq!(text.lines().count(), 1 + 12);
    assert!(husimi(&psi, &[0.0], &[0.0, 1.0]).is_err());
    assert!(husimi(&psi, &[0.0, 1.0, 3.0], &[0.0, 1.0]).is_err());
}

#[test]
fn delocalized_husimi_lies_on_position_axis() {
    let hbar = 0.01;
    let grid = Grid::<f64>::standard();
    let psi = on_grid(&gaussian_states(hbar)[2], &grid);
    let h = husimi(&psi, &uniform_axis(-40.0, 40.0, 321), &uniform_axis(-0.5, 0.5, 81)).unwrap();
    assert!((h.total_mass() - 1.0).abs() <= 1e-3);
    let axis = ManifoldCurve {
        branch: ehrenfest::classical::Branch::Plus,
        base: PhasePoint::origin(),
        points: vec![PhasePoint::new(-40.0, 0.0), PhasePoint::new(40.0, 0.0)],
        arclength: vec![0.0, 80.0],
        times: vec![0.0, 0.0],
    };
    let near = tube_mass(&h, &[&axis], 3.0 * hbar.sqrt()).unwrap();
    assert!(near >= 0.99, "{near}");
    let (sq, sp) = h.spread_about_peak();
    assert!(sq > 1000.0 * sp);
}

#[test]
fn tube_mass_examples() {
    let hbar = 0.01;
    let grid = Grid::<f64>::standard();
    let psi = coherent_state(&grid, 0.0, 0.0, hbar).unwrap();
    let (qa, pa) = ehrenfest::experiments::doublewell_axes(hbar);
    let h = husimi(&psi, &qa, &pa).unwrap();
    let (plus, minus) = doublewell_separatrix().unwrap();
    assert!((tube_mass(&h, &[&plus, &minus], 100.0).unwrap() - 1.0).abs() <= 1e-12);
    let far = ManifoldCurve {
        points: plus.points.iter().map(|x| PhasePoint::new(x.q + 10.0, x.p)).collect(),
        ..plus.clone()
    };
    assert!(tube_mass(&h, &[&far], 3.0 * hbar.sqrt()).unwrap() <= 1e-6);
    let empty = ManifoldCurve { points: vec![], arclength: vec![], times: vec![], ..plus.clone() };
    assert_eq!(tube_mass(&h, &[&empty], 0.1), Err(Error::EmptyCurve));
    let r = region_masses(&h, &plus, &minus, &PhasePoint::origin(), 0.3, 0.3).unwrap();
    assert!(r.plus < r.fixed_point && r.minus < r.fixed_point);
    assert!((r.tubes - (r.plus + r.minus)).abs() <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tube_mass_monotone_in_delta(d1 in 0.01..1.0_f64, extra in 0.0..1.0_f64, q0 in -0.8..0.8_f64) {
        let hbar = 0.05;
        let grid = make_grid(2048, 32.0_f64).unwrap();
        let psi = coherent_state(&grid, q0, 0.2, hbar).unwrap();
        let h = husimi(&psi, &uniform_axis(-1.8, 1.8, 73), &uniform_axis(-1.0, 1.0, 41)).unwrap();
        let (plus, minus) = doublewell_separatrix().unwrap();
        let m1 = tube_mass(&h, &[&plus, &minus], d1).unwrap();
        let m2 = tube_mass(&h, &[&plus, &minus], d1 + extra).unwrap();
        prop_assert!(m2 >= m1);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m1));
    }

    #[test]
    fn collapse_normalizes(x_star in -3.0..3.0_f64, wmul in 2.0..50.0_f64) {
        let grid = make_grid(2048, 32.0_f64).unwrap();
        let psi = coherent_state(&grid, 0.0, 0.5, 1.0).unwrap();
        let after = collapse(&psi, x_star, wmul * grid.dx()).unwrap();
        prop_assert!((after.norm() - 1.0).abs() <= 1e-12);
    }
}
