//! Independent reference formulas and statistics shared by the test targets.
#![allow(dead_code)]

use ehrenfest::wavepacket::{GaussianState, Grid, WaveFunction};
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

/// Closed-form free evolution of a Gaussian under `Ĥ = p̂²`.
///
/// `1/a(t) = 1/a + 2it`, the centre moves with velocity `2 p0`, and the
/// amplitude picks up `(1 + 2iat)^{-1/2}` and the phase `p0² t / ℏ`.
pub fn free_gaussian(g: &GaussianState<f64>, t: f64) -> impl Fn(f64) -> Complex64 {
    let a = g.a;
    let hbar = g.hbar;
    let spread = Complex64::new(1.0, 0.0) + Complex64::new(0.0, 2.0 * t) * a;
    let at = a / spread;
    let pref = (a.re / (std::f64::consts::PI * hbar)).powf(0.25) / spread.sqrt();
    let qt = g.q0 + 2.0 * g.p0 * t;
    let (p0, phase) = (g.p0, g.phase);
    move |x| {
        let d = x - qt;
        let arg = Complex64::new(0.0, phase + p0 * d / hbar + p0 * p0 * t / hbar) - at * d * d / (2.0 * hbar);
        pref * arg.exp()
    }
}

/// Samples `f` on the grid without normalizing.
pub fn sample_fn(grid: &Grid<f64>, hbar: f64, f: impl Fn(f64) -> Complex64) -> WaveFunction<f64> {
    let amps = grid.points().into_iter().map(f).collect();
    WaveFunction::from_amplitudes(*grid, amps, hbar).unwrap()
}

/// Composite Simpson rule on `[lo, hi]` with `2m` panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Position and momentum spreads of a Gaussian by direct quadrature of the
/// density and of `|ψ'|²` (the momentum variance is `ℏ²∫|ψ'|² − ⟨p⟩²`).
pub fn gaussian_quadrature_moments(g: &GaussianState<f64>) -> (f64, f64, f64, f64) {
    let sigma = (g.hbar / (2.0 * g.a.re)).sqrt();
    let (lo, hi) = (g.q0 - 14.0 * sigma, g.q0 + 14.0 * sigma);
    let m = 20_000;
    let rho = |x: f64| g.eval(x).norm_sqr();
    let mass = simpson(rho, lo, hi, m);
    let mean_q = simpson(|x| x * rho(x), lo, hi, m) / mass;
    let var_q = simpson(|x| (x - mean_q).powi(2) * rho(x), lo, hi, m) / mass;
    // ψ' = (i p0/ℏ − a (x − q0)/ℏ) ψ
    let dpsi = |x: f64| {
        let c = Complex64::new(0.0, g.p0 / g.hbar) - g.a * (x - g.q0) / g.hbar;
        c * g.eval(x)
    };
    let mean_p = simpson(
        |x| (g.eval(x).conj() * dpsi(x) * Complex64::new(0.0, -g.hbar)).re,
        lo,
        hi,
        m,
    ) / mass;
    let p2 = g.hbar * g.hbar * simpson(|x| dpsi(x).norm_sqr(), lo, hi, m) / mass;
    (mean_q, var_q.sqrt(), mean_p, (p2 - mean_p * mean_p).sqrt())
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `xs`
/// and `cdf`.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Distribution function of `|ψ|²` for a Gaussian state.
pub fn gaussian_position_cdf(g: &GaussianState<f64>) -> impl Fn(f64) -> f64 {
    let sigma = (g.hbar / (2.0 * g.a.re)).sqrt();
    let normal = Normal::new(g.q0, sigma).unwrap();
    move |x| normal.cdf(x)
}
