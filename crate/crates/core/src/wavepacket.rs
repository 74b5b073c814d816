//! Position-grid wave functions, coherent states and their diagnostics.
//!
//! A [`WaveFunction`] stores complex amplitudes `ψ(x_i)` on a uniform periodic
//! grid `x_i = -L/2 + i·dx`. Norms and expectation values are grid
//! quadratures (`Σ … dx`), which are spectrally accurate for the smooth,
//! well-contained states used throughout the crate.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{half, two, Real, C};
use crate::spectral::Spectral;

/// Largest tolerated `|‖ψ‖ − 1|` for diagnostics that assume a normalized state.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Uniform periodic grid centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<S> {
    n: usize,
    length: S,
}

impl<S: Real> Grid<S> {
    /// Builds a grid of `n` points over `[-L/2, L/2)`.
    ///
    /// `n` must be a power of two no smaller than 8 and `L` strictly positive.
    pub fn new(n: usize, length: S) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count {n} must be a power of two >= 8"
            )));
        }
        if !(length > S::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "length {length} must be finite and > 0"
            )));
        }
        Ok(Self { n, length })
    }

    /// Grid used by the experiments when none is specified: `n = 16384`, `L = 128`.
    pub fn standard() -> Self {
        Self {
            n: 16384,
            length: S::lit(128.0),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> S {
        self.length
    }

    pub fn dx(&self) -> S {
        self.length / S::from_count(self.n)
    }

    pub fn x_min(&self) -> S {
        -half::<S>() * self.length
    }

    #[inline]
    pub fn x(&self, i: usize) -> S {
        self.x_min() + S::from_count(i) * self.dx()
    }

    pub fn points(&self) -> Vec<S> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Wavenumbers in FFT order, `k ∈ [-π/dx, π/dx)`.
    pub fn wavenumbers(&self) -> Vec<S> {
        let dk = two::<S>() * S::PI() / self.length;
        let n = self.n;
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    S::from_count(j) * dk
                } else {
                    -(S::from_count(n - j) * dk)
                }
            })
            .collect()
    }

    /// Index of the cell `[x_i, x_i + dx)` containing `x`, if inside the grid.
    pub fn cell_of(&self, x: S) -> Option<usize> {
        let r = ((x - self.x_min()) / self.dx()).floor();
        if r < S::zero() {
            return None;
        }
        let i = r.to_usize()?;
        (i < self.n).then_some(i)
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid<S: Real>(n: usize, length: S) -> Result<Grid<S>> {
    Grid::new(n, length)
}

/// A pure state sampled on a grid, together with the value of ℏ it evolves under.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<S> {
    grid: Grid<S>,
    amps: Vec<C<S>>,
    hbar: S,
}

impl<S: Real> WaveFunction<S> {
    /// Wraps raw amplitudes without renormalizing them.
    pub fn from_amplitudes(grid: Grid<S>, amps: Vec<C<S>>, hbar: S) -> Result<Self> {
        if amps.len() != grid.n() {
            return Err(Error::GridMismatch);
        }
        check_hbar_positive(hbar)?;
        Ok(Self { grid, amps, hbar })
    }

    /// Samples `f` on the grid and renormalizes the result.
    pub fn from_fn(grid: Grid<S>, hbar: S, f: impl Fn(S) -> C<S>) -> Result<Self> {
        check_hbar_positive(hbar)?;
        let amps = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        let mut psi = Self { grid, amps, hbar };
        psi.normalize()?;
        Ok(psi)
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C<S>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C<S>> {
        self.amps
    }

    pub fn hbar(&self) -> S {
        self.hbar
    }

    /// `Σ |ψ_i|² dx`.
    pub fn norm_sqr(&self) -> S {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<S>() * self.grid.dx()
    }

    pub fn norm(&self) -> S {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Fails with `ZeroMass` for a vanishing state.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > S::zero()) || !n2.is_finite() {
            return Err(Error::ZeroMass {
                norm_sqr: n2.as_f64(),
            });
        }
        let s = S::one() / n2.sqrt();
        for z in self.amps.iter_mut() {
            *z = *z * s;
        }
        Ok(())
    }

    /// Position probability density `|ψ_i|²` (position units⁻¹).
    pub fn density(&self) -> Vec<S> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `ψ ↦ c·ψ` (used mostly for phase manipulations in tests and checks).
    pub fn scaled(&self, c: C<S>) -> Self {
        Self {
            grid: self.grid,
            amps: self.amps.iter().map(|z| *z * c).collect(),
            hbar: self.hbar,
        }
    }

    /// `‖self − other‖₂` on the common grid.
    pub fn l2_distance(&self, other: &Self) -> Result<S> {
        self.check_compatible(other)?;
        let s: S = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum();
        Ok((s * self.grid.dx()).sqrt())
    }

    /// `min_φ ‖self − e^{iφ} other‖₂`, i.e. the distance between rays.
    pub fn l2_distance_up_to_phase(&self, other: &Self) -> Result<S> {
        let ov = overlap(other, self)?;
        let d2 = self.norm_sqr() + other.norm_sqr() - two::<S>() * ov.norm();
        Ok(Float::max(d2, S::zero()).sqrt())
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.hbar != other.hbar {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        let deviation = Float::abs(self.norm() - S::one()).as_f64();
        if deviation > NORM_TOLERANCE || deviation.is_nan() {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(())
    }

    /// Writes the `x,re,im` CSV dump with 17 significant digits per float.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,re,im")?;
        for (i, z) in self.amps.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.grid.x(i), z.re, z.im)?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`.
    pub fn dump(&self, dir: &Path, stem: &str, t: S, model: &str) -> Result<()> {
        let csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(csv))?;
        let meta = DumpMeta {
            n: self.grid.n(),
            #[allow(non_snake_case)]
            L: self.grid.length().as_f64(),
            hbar: self.hbar.as_f64(),
            t: t.as_f64(),
            model: model.to_string(),
        };
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.meta.json")), json + "\n")?;
        Ok(())
    }
}

/// Companion metadata of a wave-function CSV dump.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub n: usize,
    pub L: f64,
    pub hbar: f64,
    pub t: f64,
    pub model: String,
}

fn check_hbar_positive<S: Real>(hbar: S) -> Result<()> {
    if !(hbar > S::zero()) || !hbar.is_finite() {
        return Err(Error::InvalidHbar(hbar.as_f64()));
    }
    Ok(())
}

/// Closed-form squeezed Gaussian
/// `ψ(x) = (Re a/(πℏ))^{1/4} e^{iφ} e^{i p0 (x−q0)/ℏ} e^{−a (x−q0)²/(2ℏ)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState<S> {
    pub q0: S,
    pub p0: S,
    pub a: C<S>,
    pub phase: S,
    pub hbar: S,
}

impl<S: Real> GaussianState<S> {
    /// Minimal-uncertainty coherent state centered at `(q0, p0)` (`a = 1`).
    pub fn coherent(q0: S, p0: S, hbar: S) -> Self {
        Self {
            q0,
            p0,
            a: Complex::new(S::one(), S::zero()),
            phase: S::zero(),
            hbar,
        }
    }

    pub fn eval(&self, x: S) -> C<S> {
        let h = self.hbar;
        let pref = (self.a.re / (S::PI() * h)).powf(S::lit(0.25));
        let d = x - self.q0;
        let gauss = -(self.a * (d * d)) / (two::<S>() * h);
        let phase = Complex::new(S::zero(), self.phase + self.p0 * d / h);
        (gauss + phase).exp() * pref
    }

    /// Raw samples on the grid, not renormalized.
    pub fn sample(&self, grid: &Grid<S>) -> WaveFunction<S> {
        WaveFunction {
            grid: *grid,
            amps: (0..grid.n()).map(|i| self.eval(grid.x(i))).collect(),
            hbar: self.hbar,
        }
    }

    pub fn position_variance(&self) -> S {
        self.hbar / (two::<S>() * self.a.re)
    }

    pub fn momentum_variance(&self) -> S {
        self.hbar * self.a.norm_sqr() / (two::<S>() * self.a.re)
    }

    /// Exact moments of the analytic state.
    pub fn moments(&self) -> Moments<S> {
        Moments::new(
            self.q0,
            self.p0,
            self.position_variance().sqrt(),
            self.momentum_variance().sqrt(),
        )
    }
}

/// Requirements a grid must meet to host a coherent state of width `√(ℏ/2)`
/// centered at `q0`: 4 points per width and 8 widths of padding.
pub fn check_coherent_resolution<S: Real>(grid: &Grid<S>, q0: S, hbar: S) -> Result<()> {
    check_hbar_positive(hbar)?;
    let width = (hbar / two::<S>()).sqrt();
    let max_dx = width / S::lit(4.0);
    if grid.dx() > max_dx {
        return Err(Error::GridTooCoarse {
            dx: grid.dx().as_f64(),
            max_dx: max_dx.as_f64(),
        });
    }
    let required = Float::abs(q0) + S::lit(8.0) * width;
    let half_length = half::<S>() * grid.length();
    if half_length < required {
        return Err(Error::GridTooSmall {
            half_length: half_length.as_f64(),
            required: required.as_f64(),
        });
    }
    Ok(())
}

/// Normalized coherent state `a = 1` centered at `(q0, p0)`.
pub fn coherent_state<S: Real>(grid: &Grid<S>, q0: S, p0: S, hbar: S) -> Result<WaveFunction<S>> {
    check_coherent_resolution(grid, q0, hbar)?;
    let mut psi = GaussianState::coherent(q0, p0, hbar).sample(grid);
    psi.normalize()?;
    Ok(psi)
}

/// Means and standard deviations of position and momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments<S> {
    pub mean_q: S,
    pub mean_p: S,
    pub dq: S,
    pub dp: S,
    pub product: S,
}

impl<S: Real> Moments<S> {
    pub fn new(mean_q: S, mean_p: S, dq: S, dp: S) -> Self {
        Self {
            mean_q,
            mean_p,
            dq,
            dp,
            product: dq * dp,
        }
    }
}

/// Position moments by quadrature, momentum moments from the discrete Fourier
/// density with `p = ℏk`.
pub fn moments<S: Real>(psi: &WaveFunction<S>) -> Result<Moments<S>> {
    psi.check_normalized()?;
    let mut spectral = Spectral::new(psi.grid());
    moments_with(psi, &mut spectral)
}

pub(crate) fn moments_with<S: Real>(
    psi: &WaveFunction<S>,
    spectral: &mut Spectral<S>,
) -> Result<Moments<S>> {
    psi.check_normalized()?;
    let grid = psi.grid();
    let rho = psi.density();
    let total: S = rho.iter().copied().sum();
    let (mean_q, var_q) = weighted_mean_var(rho.iter().enumerate().map(|(i, &w)| (grid.x(i), w)), total);

    let weights = spectral.momentum_weights(psi.amplitudes());
    let hbar = psi.hbar();
    let (mean_p, var_p) = weighted_mean_var(
        spectral
            .wavenumbers()
            .iter()
            .zip(&weights)
            .map(|(&k, &w)| (hbar * k, w)),
        S::one(),
    );
    Ok(Moments::new(mean_q, mean_p, var_q.sqrt(), var_p.sqrt()))
}

fn weighted_mean_var<S: Real, I>(pairs: I, total: S) -> (S, S)
where
    I: Iterator<Item = (S, S)> + Clone,
{
    let mean = pairs.clone().map(|(v, w)| v * w).sum::<S>() / total;
    let var = pairs
        .map(|(v, w)| {
            let d = v - mean;
            d * d * w
        })
        .sum::<S>()
        / total;
    (mean, Float::max(var, S::zero()))
}

/// Differential entropy `−∫ρ ln ρ dx` of the position density. Can be negative.
pub fn position_entropy<S: Real>(psi: &WaveFunction<S>) -> Result<S> {
    psi.check_normalized()?;
    let dx = psi.grid().dx();
    let s: S = psi
        .amplitudes()
        .iter()
        .map(|z| {
            let rho = z.norm_sqr();
            if rho > S::zero() {
                -rho * rho.ln()
            } else {
                S::zero()
            }
        })
        .sum();
    Ok(s * dx)
}

/// `⟨ψ₁|ψ₂⟩ = Σ conj(ψ₁) ψ₂ dx`.
pub fn overlap<S: Real>(psi1: &WaveFunction<S>, psi2: &WaveFunction<S>) -> Result<C<S>> {
    psi1.check_compatible(psi2)?;
    let s: C<S> = psi1
        .amplitudes()
        .iter()
        .zip(psi2.amplitudes())
        .fold(Complex::new(S::zero(), S::zero()), |acc, (a, b)| {
            acc + a.conj() * *b
        });
    Ok(s * psi1.grid().dx())
}
