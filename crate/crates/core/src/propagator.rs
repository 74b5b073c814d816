//! Strang split-step Fourier propagation for `Ĥ = p̂² + V(q̂)`.
//!
//! The kinetic term is `p̂²` without the usual `½`, so the quantum dynamics
//! matches the classical Hamiltonian `h(q, p) = p² + V(q)` used in
//! [`crate::classical`]. One step of length `h` is
//! `e^{-iVh/2ℏ} · F⁻¹ e^{-iℏk²h} F · e^{-iVh/2ℏ}`; consecutive half potential
//! kicks are fused.

use num_complex::Complex;
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{half, Real, C};
use crate::spectral::Spectral;
use crate::wavepacket::{moments_with, position_entropy, Grid, Moments, WaveFunction};

/// Momentum density in the outer band, relative to its peak, above which a
/// run is declared aliased.
pub const ALIASING_THRESHOLD: f64 = 1e-8;

/// Polynomial potentials of degree at most four, `V(q) = Σ cₖ qᵏ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec<S> {
    Zero,
    /// `V(q) = q²`.
    Harmonic,
    /// `V(q) = q²(q² − 1)`.
    DoubleWell,
    /// Coefficients `c₀..c₄`.
    Polynomial([S; 5]),
}

impl<S: Real> PotentialSpec<S> {
    pub fn coefficients(&self) -> [S; 5] {
        let (z, o) = (S::zero(), S::one());
        match *self {
            PotentialSpec::Zero => [z; 5],
            PotentialSpec::Harmonic => [z, z, o, z, z],
            PotentialSpec::DoubleWell => [z, z, -o, z, o],
            PotentialSpec::Polynomial(c) => c,
        }
    }

    pub fn value(&self, q: S) -> S {
        horner(&self.coefficients(), q)
    }

    /// `V′(q)`.
    pub fn derivative(&self, q: S) -> S {
        horner(&derivative_coefficients(&self.coefficients()), q)
    }

    /// `V″(q)`.
    pub fn second_derivative(&self, q: S) -> S {
        let d1 = derivative_coefficients(&self.coefficients());
        horner(&derivative_coefficients(&d1), q)
    }
}

/// `V(q)` for the given potential.
pub fn potential_value<S: Real>(spec: &PotentialSpec<S>, q: S) -> S {
    spec.value(q)
}

pub(crate) fn horner<S: Real>(c: &[S], x: S) -> S {
    c.iter().rev().fold(S::zero(), |acc, &ck| acc * x + ck)
}

pub(crate) fn derivative_coefficients<S: Real>(c: &[S]) -> Vec<S> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| ck * S::from_count(k))
        .collect()
}

/// Time step used when none is given: `1e-3` for `ℏ ≥ 1e-2`, `1e-3·√ℏ` below.
pub fn default_time_step<S: Real>(hbar: S) -> S {
    let base = S::lit(1e-3);
    if hbar >= S::lit(1e-2) {
        base
    } else {
        base * hbar.sqrt()
    }
}

/// Reusable split-step propagator bound to one grid, ℏ, potential and step.
pub struct SplitStep<S: Real> {
    grid: Grid<S>,
    hbar: S,
    dt: S,
    potential: Vec<S>,
    spectral: Spectral<S>,
}

impl<S: Real> SplitStep<S> {
    pub fn new(grid: Grid<S>, hbar: S, spec: &PotentialSpec<S>, dt: S) -> Result<Self> {
        if !(dt > S::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {dt} must be > 0")));
        }
        if !(hbar > S::zero()) {
            return Err(Error::InvalidHbar(hbar.as_f64()));
        }
        Ok(Self {
            potential: grid.points().into_iter().map(|x| spec.value(x)).collect(),
            spectral: Spectral::new(&grid),
            grid,
            hbar,
            dt,
        })
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    /// Evolves by signed time `t`: `⌊|t|/dt⌋` full steps and one fractional step.
    pub fn evolve(&mut self, psi: &WaveFunction<S>, t: S) -> Result<WaveFunction<S>> {
        self.check_state(psi)?;
        let mut amps = psi.amplitudes().to_vec();
        self.evolve_in_place(&mut amps, t);
        let out = WaveFunction::from_amplitudes(self.grid, amps, self.hbar)?;
        self.check_aliasing(&out)?;
        Ok(out)
    }

    pub(crate) fn evolve_in_place(&mut self, amps: &mut [C<S>], t: S) {
        let span = Float::abs(t);
        if span == S::zero() {
            return;
        }
        let sign = if t < S::zero() { -S::one() } else { S::one() };
        let ratio = span / self.dt;
        let mut full = ratio.floor().to_usize().unwrap_or(0);
        let mut rest = span - S::from_count(full) * self.dt;
        // A remainder at rounding level is folded into the full steps.
        if rest <= self.dt * S::lit(1e-9) {
            rest = S::zero();
        } else if self.dt - rest <= self.dt * S::lit(1e-9) {
            full += 1;
            rest = S::zero();
        }
        if full > 0 {
            self.steps(amps, full, sign * self.dt);
        }
        if rest > S::zero() {
            self.steps(amps, 1, sign * rest);
        }
    }

    /// `count` Strang steps of signed length `h` with fused potential kicks.
    fn steps(&mut self, amps: &mut [C<S>], count: usize, h: S) {
        let hbar = self.hbar;
        let kick = |v: S, frac: S| -> C<S> {
            Complex::from_polar(S::one(), -(v * h * frac) / hbar)
        };
        let half_kick: Vec<C<S>> = self.potential.iter().map(|&v| kick(v, half())).collect();
        let full_kick: Vec<C<S>> = self.potential.iter().map(|&v| kick(v, S::one())).collect();
        let drift: Vec<C<S>> = self
            .spectral
            .wavenumbers()
            .iter()
            .map(|&k| Complex::from_polar(S::one(), -(hbar * k * k * h)))
            .collect();

        mul_assign(amps, &half_kick);
        for step in 0..count {
            self.spectral.forward(amps);
            mul_assign(amps, &drift);
            self.spectral.inverse(amps);
            if step + 1 < count {
                mul_assign(amps, &full_kick);
            }
        }
        mul_assign(amps, &half_kick);
    }

    fn check_state(&self, psi: &WaveFunction<S>) -> Result<()> {
        if *psi.grid() != self.grid || psi.hbar() != self.hbar {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Fails when the momentum density near `±π/dx` is not negligible.
    pub fn check_aliasing(&mut self, psi: &WaveFunction<S>) -> Result<()> {
        let ratio = momentum_edge_ratio(&mut self.spectral, psi);
        if ratio > ALIASING_THRESHOLD {
            return Err(Error::UnstableParameters { ratio });
        }
        Ok(())
    }

    /// `⟨Ĥ⟩ = Σ ℏ²k² w_k + Σ V|ψ|² dx`.
    pub fn energy(&mut self, psi: &WaveFunction<S>) -> S {
        let weights = self.spectral.momentum_weights(psi.amplitudes());
        let kinetic: S = self
            .spectral
            .wavenumbers()
            .iter()
            .zip(&weights)
            .map(|(&k, &w)| self.hbar * self.hbar * k * k * w)
            .sum();
        let potential: S = psi
            .amplitudes()
            .iter()
            .zip(&self.potential)
            .map(|(z, &v)| z.norm_sqr() * v)
            .sum::<S>()
            * self.grid.dx();
        kinetic + potential
    }

    pub fn moments(&mut self, psi: &WaveFunction<S>) -> Result<Moments<S>> {
        moments_with(psi, &mut self.spectral)
    }
}

fn mul_assign<S: Real>(amps: &mut [C<S>], factors: &[C<S>]) {
    for (z, f) in amps.iter_mut().zip(factors) {
        *z = *z * *f;
    }
}

/// Peak momentum weight in the outer 2% of the wavenumber band divided by the
/// overall peak.
pub(crate) fn momentum_edge_ratio<S: Real>(spectral: &mut Spectral<S>, psi: &WaveFunction<S>) -> f64 {
    let weights = spectral.momentum_weights(psi.amplitudes());
    let n = weights.len();
    let band = (n / 100).max(2);
    let peak = weights.iter().copied().fold(S::zero(), Float::max);
    if peak <= S::zero() {
        return 0.0;
    }
    // FFT order puts |k| = k_max at index n/2.
    let centre = n / 2;
    let edge = (centre - band..centre + band)
        .map(|j| weights[j])
        .fold(S::zero(), Float::max);
    (edge / peak).as_f64()
}

/// Evolves `psi0` under `p̂² + V` for signed time `t` with step `dt`.
pub fn split_step_evolve<S: Real>(
    psi0: &WaveFunction<S>,
    spec: &PotentialSpec<S>,
    t: S,
    dt: S,
) -> Result<WaveFunction<S>> {
    let mut prop = SplitStep::new(*psi0.grid(), psi0.hbar(), spec, dt)?;
    prop.evolve(psi0, t)
}

/// Diagnostics of one snapshot of an evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Snapshot<S> {
    pub t: S,
    pub moments: Moments<S>,
    pub entropy: S,
}

/// Single pass over ascending `times` (all ≥ 0), collecting moments and
/// entropy at each requested time.
pub fn evolve_observed<S: Real>(
    psi0: &WaveFunction<S>,
    spec: &PotentialSpec<S>,
    times: &[S],
    dt: S,
) -> Result<Vec<Snapshot<S>>> {
    let mut out = Vec::with_capacity(times.len());
    evolve_with_snapshots(psi0, spec, times, dt, |t, psi, prop| {
        out.push(Snapshot {
            t,
            moments: prop.moments(psi)?,
            entropy: position_entropy(psi)?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Drives a single evolution through ascending `times`, handing each
/// snapshot state to `visit`.
pub fn evolve_with_snapshots<S: Real, F>(
    psi0: &WaveFunction<S>,
    spec: &PotentialSpec<S>,
    times: &[S],
    dt: S,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(S, &WaveFunction<S>, &mut SplitStep<S>) -> Result<()>,
{
    check_schedule(times)?;
    let mut prop = SplitStep::new(*psi0.grid(), psi0.hbar(), spec, dt)?;
    let mut psi = psi0.clone();
    let mut now = S::zero();
    for &t in times {
        if t > now {
            psi = prop.evolve(&psi, t - now)?;
            now = t;
        }
        visit(t, &psi, &mut prop)?;
    }
    Ok(())
}

fn check_schedule<S: Real>(times: &[S]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time schedule".into()));
    }
    if times[0] < S::zero() {
        return Err(Error::InvalidParameter("snapshot times must be >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("snapshot times must be ascending".into()));
    }
    Ok(())
}
