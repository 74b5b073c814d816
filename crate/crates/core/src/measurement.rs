//! Position measurement and phase-space localization.
//!
//! * Born-rule sampling of position outcomes from `|ψ|²`.
//! * Post-measurement collapse at finite resolution.
//! * Husimi densities `|⟨q, p|ψ⟩|²` and the mass they put near invariant
//!   curves.

use std::io::Write;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{ManifoldCurve, PhasePoint};
use crate::error::{Error, Result};
use crate::scalar::{half, two, Real, C};
use crate::wavepacket::WaveFunction;

/// Identifier of the generator behind [`born_sample`]: ChaCha with 8 rounds,
/// seeded through `SeedableRng::seed_from_u64` (rand_chacha 0.3).
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// One position outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementRecord<S> {
    pub x: S,
    /// Cell index `⌊(x − x_min)/dx⌋`.
    pub bin: usize,
    pub seed: u64,
    pub rng: &'static str,
}

/// Piecewise-constant position density built from a wave function.
///
/// Cell `i` is `[x_i, x_i + dx)` and carries weight `(ρ_i + ρ_{i+1}) dx / 2`
/// (periodic wrap), i.e. the trapezoid rule, which keeps the sampled
/// distribution centred where the grid quadrature puts it.
#[derive(Debug, Clone)]
pub struct BornSampler<S> {
    x_min: S,
    dx: S,
    weights: Vec<S>,
    cumulative: Vec<S>,
}

impl<S: Real> BornSampler<S> {
    pub fn new(psi: &WaveFunction<S>) -> Result<Self> {
        psi.check_normalized()?;
        let grid = psi.grid();
        let rho = psi.density();
        let n = rho.len();
        let dx = grid.dx();
        let weights: Vec<S> = (0..n)
            .map(|i| half::<S>() * (rho[i] + rho[(i + 1) % n]) * dx)
            .collect();
        let mut acc = S::zero();
        let cumulative = weights
            .iter()
            .map(|&w| {
                acc = acc + w;
                acc
            })
            .collect();
        Ok(Self {
            x_min: grid.x_min(),
            dx,
            weights,
            cumulative,
        })
    }

    fn total(&self) -> S {
        *self.cumulative.last().unwrap()
    }

    /// Probability of cell `i`.
    pub fn cell_probability(&self, i: usize) -> S {
        self.weights[i] / self.total()
    }

    /// Exact distribution function of the piecewise-constant density.
    pub fn cdf(&self, x: S) -> S {
        let u = (x - self.x_min) / self.dx;
        if u <= S::zero() {
            return S::zero();
        }
        let i = u.floor().to_usize().unwrap_or(usize::MAX);
        if i >= self.weights.len() {
            return S::one();
        }
        let before = if i == 0 { S::zero() } else { self.cumulative[i - 1] };
        (before + (u - S::from_count(i)) * self.weights[i]) / self.total()
    }

    /// Inverse-CDF draws; the stream is fully determined by `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<MeasurementRecord<S>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = self.total();
        (0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                let target = S::lit(u) * total;
                let bin = self
                    .cumulative
                    .partition_point(|&c| c <= target)
                    .min(self.weights.len() - 1);
                let before = if bin == 0 { S::zero() } else { self.cumulative[bin - 1] };
                let frac = if self.weights[bin] > S::zero() {
                    Float::min((target - before) / self.weights[bin], S::one() - S::epsilon())
                } else {
                    S::zero()
                };
                let frac = Float::max(frac, S::zero());
                let mut x = self.x_min + (S::from_count(bin) + frac) * self.dx;
                // Rounding can push a draw at a cell edge into the neighbour.
                let cell = ((x - self.x_min) / self.dx).floor().to_usize();
                if cell != Some(bin) {
                    x = self.x_min + (S::from_count(bin) + half::<S>()) * self.dx;
                }
                MeasurementRecord {
                    x,
                    bin,
                    seed,
                    rng: RNG_ALGORITHM,
                }
            })
            .collect()
    }
}

/// `count` i.i.d. position outcomes with density `|ψ|²`.
pub fn born_sample<S: Real>(
    psi: &WaveFunction<S>,
    count: usize,
    seed: u64,
) -> Result<Vec<MeasurementRecord<S>>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    Ok(BornSampler::new(psi)?.sample(count, seed))
}

/// `idx,x,bin` CSV.
pub fn write_samples_csv<S: Real, W: Write>(
    samples: &[MeasurementRecord<S>],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "idx,x,bin")?;
    for (i, r) in samples.iter().enumerate() {
        writeln!(w, "{},{:.16e},{}", i, r.x, r.bin)?;
    }
    Ok(())
}

/// Sample mean and standard deviation of the outcomes.
pub fn sample_mean_std<S: Real>(samples: &[MeasurementRecord<S>]) -> (S, S) {
    let n = S::from_count(samples.len());
    let mean = samples.iter().map(|r| r.x).sum::<S>() / n;
    let var = samples
        .iter()
        .map(|r| (r.x - mean) * (r.x - mean))
        .sum::<S>()
        / n;
    (mean, var.sqrt())
}

/// Shape of the measurement window used by [`collapse_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollapseWindow {
    /// Multiply by `exp(−(x − x*)²/(4w²))`: the post-measurement density is
    /// the prior density times a Gaussian of standard deviation `w`.
    #[default]
    Gaussian,
    /// Spectral projector of position onto `[x* − w, x* + w]`.
    Interval,
}

/// Finite-resolution position collapse with the default Gaussian window.
pub fn collapse<S: Real>(psi: &WaveFunction<S>, x_star: S, width: S) -> Result<WaveFunction<S>> {
    collapse_with(psi, x_star, width, CollapseWindow::Gaussian)
}

/// Multiplies `ψ` by the window centred at `x_star` and renormalizes.
pub fn collapse_with<S: Real>(
    psi: &WaveFunction<S>,
    x_star: S,
    width: S,
    window: CollapseWindow,
) -> Result<WaveFunction<S>> {
    let grid = *psi.grid();
    if !(width >= two::<S>() * grid.dx()) {
        return Err(Error::InvalidParameter(format!(
            "collapse width {width} must be at least 2·dx = {}",
            two::<S>() * grid.dx()
        )));
    }
    let four_w2 = S::lit(4.0) * width * width;
    let amps: Vec<C<S>> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let d = grid.x(i) - x_star;
            let f = match window {
                CollapseWindow::Gaussian => (-(d * d) / four_w2).exp(),
                CollapseWindow::Interval => {
                    if Float::abs(d) <= width {
                        S::one()
                    } else {
                        S::zero()
                    }
                }
            };
            *z * f
        })
        .collect();
    let mut out = WaveFunction::from_amplitudes(grid, amps, psi.hbar())?;
    let norm_sqr = out.norm_sqr();
    if norm_sqr.as_f64() < 1e-12 {
        return Err(Error::ZeroMass {
            norm_sqr: norm_sqr.as_f64(),
        });
    }
    out.normalize()?;
    Ok(out)
}

/// Husimi density on a rectangular phase-space lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid<S> {
    pub q_axis: Vec<S>,
    pub p_axis: Vec<S>,
    /// Row-major: `values[iq * p_axis.len() + ip]`.
    pub values: Vec<S>,
    pub hbar: S,
}

impl<S: Real> HusimiGrid<S> {
    pub fn dq(&self) -> S {
        self.q_axis[1] - self.q_axis[0]
    }

    pub fn dp(&self) -> S {
        self.p_axis[1] - self.p_axis[0]
    }

    pub fn value(&self, iq: usize, ip: usize) -> S {
        self.values[iq * self.p_axis.len() + ip]
    }

    /// `Σ values · dq dp / (2πℏ)`; close to 1 when the axes cover the state.
    pub fn total_mass(&self) -> S {
        let cell = self.dq() * self.dp() / (two::<S>() * S::PI() * self.hbar);
        self.values.iter().copied().sum::<S>() * cell
    }

    /// Cell centres with their values.
    pub fn cells(&self) -> impl Iterator<Item = (PhasePoint<S>, S)> + '_ {
        let np = self.p_axis.len();
        self.values.iter().enumerate().map(move |(k, &v)| {
            (PhasePoint::new(self.q_axis[k / np], self.p_axis[k % np]), v)
        })
    }

    pub fn argmax(&self) -> PhasePoint<S> {
        self.cells()
            .fold((PhasePoint::origin(), S::neg_infinity()), |best, (x, v)| {
                if v > best.1 {
                    (x, v)
                } else {
                    best
                }
            })
            .0
    }

    /// Second moments of the normalized density about its maximum, per axis.
    pub fn spread_about_peak(&self) -> (S, S) {
        let peak = self.argmax();
        let total: S = self.values.iter().copied().sum();
        let (sq, sp) = self.cells().fold((S::zero(), S::zero()), |(sq, sp), (x, v)| {
            let (dq, dp) = (x.q - peak.q, x.p - peak.p);
            (sq + dq * dq * v, sp + dp * dp * v)
        });
        (sq / total, sp / total)
    }

    /// `q,p,value` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "q,p,value")?;
        for (x, v) in self.cells() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", x.q, x.p, v)?;
        }
        Ok(())
    }
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn uniform_axis<S: Real>(lo: S, hi: S, n: usize) -> Vec<S> {
    let n = n.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * S::from_count(i) / S::from_count(n - 1))
        .collect()
}

fn check_axis<S: Real>(axis: &[S], name: &str) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidParameter(format!("{name} axis needs >= 2 points")));
    }
    let step = axis[1] - axis[0];
    if !(step > S::zero()) {
        return Err(Error::InvalidParameter(format!("{name} axis must ascend")));
    }
    let tol = step * S::lit(1e-6);
    if axis.windows(2).any(|w| Float::abs(w[1] - w[0] - step) > tol) {
        return Err(Error::InvalidParameter(format!("{name} axis must be uniform")));
    }
    Ok(())
}

/// `values(q, p) = |⟨coherent(q, p, ℏ)|ψ⟩|²` over the lattice `q_axis × p_axis`.
///
/// Overlaps are grid quadratures restricted to `|x − q| ≤ 9√ℏ`, beyond which
/// the coherent envelope is below `e^{-40}`.
pub fn husimi<S: Real>(psi: &WaveFunction<S>, q_axis: &[S], p_axis: &[S]) -> Result<HusimiGrid<S>> {
    check_axis(q_axis, "q")?;
    check_axis(p_axis, "p")?;
    let grid = psi.grid();
    let hbar = psi.hbar();
    let amps = psi.amplitudes();
    let dx = grid.dx();
    let reach = S::lit(9.0) * hbar.sqrt();
    let norm = (S::PI() * hbar).powf(S::lit(-0.25));

    let rows: Vec<Vec<S>> = q_axis
        .par_iter()
        .map(|&q| {
            let lo = grid.cell_of(q - reach).unwrap_or(0);
            let hi = grid
                .cell_of(q + reach)
                .map(|i| i + 1)
                .unwrap_or(grid.n())
                .min(grid.n());
            // Envelope-weighted amplitudes and offsets for this q.
            let local: Vec<(S, C<S>)> = if q + reach < grid.x_min() || lo >= hi {
                Vec::new()
            } else {
                (lo..hi)
                    .map(|i| {
                        let d = grid.x(i) - q;
                        let env = norm * (-(d * d) / (two::<S>() * hbar)).exp();
                        (d, amps[i] * env)
                    })
                    .collect()
            };
            p_axis
                .iter()
                .map(|&p| {
                    let s = local.iter().fold(C::new(S::zero(), S::zero()), |acc, &(d, z)| {
                        acc + z * C::from_polar(S::one(), -(p * d) / hbar)
                    });
                    (s * dx).norm_sqr()
                })
                .collect()
        })
        .collect();

    Ok(HusimiGrid {
        q_axis: q_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values: rows.into_iter().flatten().collect(),
        hbar,
    })
}

fn min_distance<S: Real>(curves: &[&ManifoldCurve<S>], x: &PhasePoint<S>) -> S {
    curves
        .iter()
        .map(|c| c.distance_to(x))
        .fold(S::infinity(), Float::min)
}

/// Fraction of the Husimi mass within phase-space distance `delta` of the
/// union of `curves`.
pub fn tube_mass<S: Real>(h: &HusimiGrid<S>, curves: &[&ManifoldCurve<S>], delta: S) -> Result<S> {
    if curves.iter().all(|c| c.points.is_empty()) {
        return Err(Error::EmptyCurve);
    }
    if !(delta > S::zero()) {
        return Err(Error::InvalidParameter(format!("tube width {delta} must be > 0")));
    }
    let total: S = h.values.iter().copied().sum();
    let inside: S = h
        .cells()
        .filter(|(x, _)| min_distance(curves, x) <= delta)
        .map(|(_, v)| v)
        .sum();
    Ok(inside / total)
}

/// Husimi mass fractions of a disc around a fixed point and of the tubes
/// around its two branches, with the disc taking precedence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionMasses<S> {
    pub plus: S,
    pub minus: S,
    pub fixed_point: S,
    /// `plus + minus`: tube mass away from the fixed point.
    pub tubes: S,
}

/// Partitions the normalized Husimi mass: cells within `disc_radius` of `base`
/// go to the fixed point; remaining cells within `delta` of exactly one
/// branch go to it; cells near both are split by the sign of `q`.
pub fn region_masses<S: Real>(
    h: &HusimiGrid<S>,
    plus: &ManifoldCurve<S>,
    minus: &ManifoldCurve<S>,
    base: &PhasePoint<S>,
    delta: S,
    disc_radius: S,
) -> Result<RegionMasses<S>> {
    if plus.points.is_empty() || minus.points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let total: S = h.values.iter().copied().sum();
    let (mut mp, mut mm, mut mf) = (S::zero(), S::zero(), S::zero());
    for (x, v) in h.cells() {
        if x.distance(base) <= disc_radius {
            mf = mf + v;
            continue;
        }
        let near_plus = plus.distance_to(&x) <= delta;
        let near_minus = minus.distance_to(&x) <= delta;
        match (near_plus, near_minus) {
            (true, false) => mp = mp + v,
            (false, true) => mm = mm + v,
            (true, true) => {
                if x.q > base.q {
                    mp = mp + v
                } else if x.q < base.q {
                    mm = mm + v
                } else {
                    mp = mp + half::<S>() * v;
                    mm = mm + half::<S>() * v;
                }
            }
            (false, false) => {}
        }
    }
    Ok(RegionMasses {
        plus: mp / total,
        minus: mm / total,
        fixed_point: mf / total,
        tubes: (mp + mm) / total,
    })
}
