//! Classical flow `Φᵗ` of the one-degree-of-freedom models and the objects
//! built on it: fixed points, sensitivity to initial conditions, invariant
//! manifolds and ergodic time averages.

mod manifold;
mod sensitivity;

pub use manifold::{
    manifold_covariance_check, stable_manifold, unstable_manifold,
    unstable_manifold_with, Branch, ManifoldCurve, ManifoldOptions,
};
pub use sensitivity::{
    lyapunov_exponents, monodromy, separation_growth_rate, separation_series, sensitivity_time,
    Sensitivity,
};

use std::io::Write;

use num_complex::Complex;
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::{derivative_coefficients, horner, PotentialSpec};
use crate::scalar::{half, two, Real, C};

/// Coordinates beyond this magnitude abort a flow.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Real parts below this magnitude count as zero when classifying.
pub const ELLIPTIC_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhasePoint<S> {
    pub q: S,
    pub p: S,
}

impl<S: Real> PhasePoint<S> {
    pub fn new(q: S, p: S) -> Self {
        Self { q, p }
    }

    pub fn origin() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn distance(&self, other: &Self) -> S {
        (self.q - other.q).hypot(self.p - other.p)
    }

    pub fn offset(&self, dir: [S; 2], scale: S) -> Self {
        Self::new(self.q + scale * dir[0], self.p + scale * dir[1])
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}

/// The classical systems the crate can flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalModel<S> {
    /// `h = q·p`, the symbol of the dilation generator; `Φᵗ(q, p) = (eᵗq, e^{-t}p)`.
    DilationSymbol,
    /// `h = p² + V(q)`, so `q̇ = 2p`, `ṗ = −V′(q)`.
    Potential(PotentialSpec<S>),
}

pub type Jacobian<S> = [[S; 2]; 2];

impl<S: Real> ClassicalModel<S> {
    pub fn hamiltonian(&self, x: &PhasePoint<S>) -> S {
        match self {
            ClassicalModel::DilationSymbol => x.q * x.p,
            ClassicalModel::Potential(v) => x.p * x.p + v.value(x.q),
        }
    }

    /// `(q̇, ṗ)`.
    pub fn vector_field(&self, x: &PhasePoint<S>) -> [S; 2] {
        match self {
            ClassicalModel::DilationSymbol => [x.q, -x.p],
            ClassicalModel::Potential(v) => [two::<S>() * x.p, -v.derivative(x.q)],
        }
    }

    /// Linearization of the vector field at `x`.
    pub fn jacobian(&self, x: &PhasePoint<S>) -> Jacobian<S> {
        let (z, o) = (S::zero(), S::one());
        match self {
            ClassicalModel::DilationSymbol => [[o, z], [z, -o]],
            ClassicalModel::Potential(v) => [[z, two::<S>()], [-v.second_derivative(x.q), z]],
        }
    }

    /// One step of signed length `h`: the exact map for the dilation symbol,
    /// kick–drift–kick leapfrog otherwise.
    pub fn step(&self, x: &PhasePoint<S>, h: S) -> PhasePoint<S> {
        match self {
            ClassicalModel::DilationSymbol => PhasePoint::new(x.q * h.exp(), x.p * (-h).exp()),
            ClassicalModel::Potential(v) => {
                let half_h = half::<S>() * h;
                let p_mid = x.p - half_h * v.derivative(x.q);
                let q = x.q + two::<S>() * h * p_mid;
                let p = p_mid - half_h * v.derivative(q);
                PhasePoint::new(q, p)
            }
        }
    }

    /// Advances by signed `t` using steps of at most `dt`; the last step is
    /// shortened so that the end time is exact.
    pub fn advance(&self, x: &PhasePoint<S>, t: S, dt: S) -> Result<PhasePoint<S>> {
        let mut cur = *x;
        for h in step_schedule(t, dt) {
            cur = self.step(&cur, h);
            guard(&cur, t)?;
        }
        Ok(cur)
    }
}

/// Signed step lengths covering `[0, t]`: full steps of `dt` and one remainder.
pub(crate) fn step_schedule<S: Real>(t: S, dt: S) -> impl Iterator<Item = S> {
    let span = Float::abs(t);
    let sign = if t < S::zero() { -S::one() } else { S::one() };
    let (full, rest) = if dt > S::zero() && span > S::zero() {
        let mut full = (span / dt).floor().to_usize().unwrap_or(0);
        let mut rest = span - S::from_count(full) * dt;
        if rest <= dt * S::lit(1e-9) {
            rest = S::zero();
        } else if dt - rest <= dt * S::lit(1e-9) {
            full += 1;
            rest = S::zero();
        }
        (full, rest)
    } else {
        (0, span)
    };
    std::iter::repeat_n(sign * dt, full).chain((rest > S::zero()).then_some(sign * rest))
}

fn guard<S: Real>(x: &PhasePoint<S>, t: S) -> Result<()> {
    let lim = S::lit(BLOWUP_LIMIT);
    if !x.is_finite() || Float::abs(x.q) > lim || Float::abs(x.p) > lim {
        return Err(Error::FlowBlowup { t: t.as_f64() });
    }
    Ok(())
}

/// `h(x)` for the given model.
pub fn hamiltonian_value<S: Real>(model: &ClassicalModel<S>, x: &PhasePoint<S>) -> S {
    model.hamiltonian(x)
}

/// Time series of a classical orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<S>,
    pub points: Vec<PhasePoint<S>>,
}

impl<S: Real> Trajectory<S> {
    pub fn last(&self) -> &PhasePoint<S> {
        self.points.last().expect("trajectory holds the initial point")
    }

    pub fn max_energy_drift(&self, model: &ClassicalModel<S>) -> S {
        let h0 = model.hamiltonian(&self.points[0]);
        self.points
            .iter()
            .map(|x| Float::abs(model.hamiltonian(x) - h0))
            .fold(S::zero(), Float::max)
    }

    /// `t,q,p,h` CSV.
    pub fn write_csv<W: Write>(&self, model: &ClassicalModel<S>, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,q,p,h")?;
        for (t, x) in self.times.iter().zip(&self.points) {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                x.q,
                x.p,
                model.hamiltonian(x)
            )?;
        }
        Ok(())
    }
}

/// Orbit of `x0` up to signed time `t`, sampled every `dt` plus the exact
/// endpoint. The potential models need `dt > 0`; the dilation symbol accepts
/// `dt ≤ 0` and then returns only the two endpoints.
pub fn classical_flow<S: Real>(
    model: &ClassicalModel<S>,
    x0: &PhasePoint<S>,
    t: S,
    dt: S,
) -> Result<Trajectory<S>> {
    if matches!(model, ClassicalModel::Potential(_)) && !(dt > S::zero()) {
        return Err(Error::InvalidParameter(format!("time step {dt} must be > 0")));
    }
    let mut times = vec![S::zero()];
    let mut points = vec![*x0];
    let mut now = S::zero();
    let mut cur = *x0;
    for h in step_schedule(t, dt) {
        cur = model.step(&cur, h);
        now = now + h;
        guard(&cur, now)?;
        times.push(now);
        points.push(cur);
    }
    if let Some(last) = times.last_mut() {
        // Remove accumulated rounding from the endpoint label.
        if points.len() > 1 {
            *last = t;
        }
    }
    Ok(Trajectory { times, points })
}

/// Stability type of a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPointKind<S> {
    /// Real eigenvalues `±exponent`.
    Hyperbolic { exponent: S },
    /// Imaginary eigenvalues `±i·frequency`.
    Elliptic { frequency: S },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint<S> {
    pub point: PhasePoint<S>,
    pub kind: FixedPointKind<S>,
    pub eigenvalues: [C<S>; 2],
}

/// Eigenvalues of a 2×2 real matrix.
pub fn eigenvalues<S: Real>(j: &Jacobian<S>) -> [C<S>; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let mean = half::<S>() * tr;
    let disc = mean * mean - det;
    if disc >= S::zero() {
        let r = disc.sqrt();
        [Complex::new(mean + r, S::zero()), Complex::new(mean - r, S::zero())]
    } else {
        let r = (-disc).sqrt();
        [Complex::new(mean, r), Complex::new(mean, -r)]
    }
}

/// Unit eigenvector of `j` for the real eigenvalue `lambda`, oriented towards
/// positive `q` (positive `p` when the `q` component vanishes).
pub fn eigenvector<S: Real>(j: &Jacobian<S>, lambda: S) -> [S; 2] {
    let a = [j[0][1], lambda - j[0][0]];
    let b = [lambda - j[1][1], j[1][0]];
    let na = a[0].hypot(a[1]);
    let nb = b[0].hypot(b[1]);
    let (v, n) = if na >= nb { (a, na) } else { (b, nb) };
    let mut v = if n > S::zero() {
        [v[0] / n, v[1] / n]
    } else {
        [S::one(), S::zero()]
    };
    let tiny = S::lit(1e-14);
    if v[0] < -tiny || (Float::abs(v[0]) <= tiny && v[1] < S::zero()) {
        v = [-v[0], -v[1]];
    }
    v
}

pub fn classify<S: Real>(j: &Jacobian<S>) -> (FixedPointKind<S>, [C<S>; 2]) {
    let ev = eigenvalues(j);
    let re = Float::max(Float::abs(ev[0].re), Float::abs(ev[1].re));
    let kind = if re.as_f64() < ELLIPTIC_THRESHOLD {
        FixedPointKind::Elliptic {
            frequency: Float::abs(ev[0].im),
        }
    } else {
        FixedPointKind::Hyperbolic {
            exponent: Float::max(ev[0].re, ev[1].re),
        }
    };
    (kind, ev)
}

/// Equilibria `(q*, 0)` with `V′(q*) = 0`, classified through the Jacobian.
///
/// The dilation symbol has the single hyperbolic point at the origin. A
/// constant potential has a continuum of equilibria and is rejected.
pub fn fixed_points<S: Real>(model: &ClassicalModel<S>) -> Result<Vec<FixedPoint<S>>> {
    let roots = match model {
        ClassicalModel::DilationSymbol => vec![S::zero()],
        ClassicalModel::Potential(v) => {
            let dv = derivative_coefficients(&v.coefficients());
            if dv.iter().all(|c| *c == S::zero()) {
                return Err(Error::UnsupportedModel(
                    "constant potential: every point with p = 0 is fixed".into(),
                ));
            }
            real_roots(&dv)
        }
    };
    Ok(roots
        .into_iter()
        .map(|q| {
            let point = PhasePoint::new(q, S::zero());
            let (kind, eigenvalues) = classify(&model.jacobian(&point));
            FixedPoint {
                point,
                kind,
                eigenvalues,
            }
        })
        .collect())
}

/// Plain-text table of fixed points.
pub fn fixed_point_table<S: Real>(points: &[FixedPoint<S>]) -> String {
    let mut out = format!(
        "{:>24} {:>24} {:>12} {:>24}\n",
        "q", "p", "type", "exponent/frequency"
    );
    for fp in points {
        let (name, value) = match fp.kind {
            FixedPointKind::Hyperbolic { exponent } => ("hyperbolic", exponent),
            FixedPointKind::Elliptic { frequency } => ("elliptic", frequency),
        };
        out.push_str(&format!(
            "{:>24.16e} {:>24.16e} {:>12} {:>24.16e}\n",
            fp.point.q, fp.point.p, name, value
        ));
    }
    out
}

/// Sorted real roots of `Σ cₖ xᵏ`. Roots are bracketed between consecutive
/// critical points (found recursively) and refined by bisection.
pub fn real_roots<S: Real>(coeffs: &[S]) -> Vec<S> {
    let mut c: Vec<S> = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == S::zero() {
        c.pop();
    }
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => return vec![-c[0] / c[1]],
        _ => {}
    }
    let lead = *c.last().unwrap();
    let bound = S::one()
        + c[..c.len() - 1]
            .iter()
            .map(|&ck| Float::abs(ck / lead))
            .fold(S::zero(), Float::max);
    let mut marks = vec![-bound];
    marks.extend(real_roots(&derivative_coefficients(&c)));
    marks.push(bound);

    let f = |x: S| horner(&c, x);
    let scale = c.iter().map(|&ck| Float::abs(ck)).fold(S::zero(), Float::max);
    let tol = scale * S::epsilon() * S::lit(16.0);
    let mut roots: Vec<S> = Vec::new();
    for w in marks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if Float::abs(flo) <= tol {
            roots.push(lo);
            continue;
        }
        if Float::abs(fhi) <= tol || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = half::<S>() * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm == S::zero() {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(half::<S>() * (lo + hi));
    }
    if Float::abs(f(bound)) <= tol {
        roots.push(bound);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| Float::abs(*a - *b) <= S::lit(1e-12) * (S::one() + Float::abs(*b)));
    roots
}

/// Symmetric trapezoidal time average `(1/2T) ∫_{-T}^{T} f(Φᵗ x0) dt`.
pub fn time_average<S: Real, F>(
    model: &ClassicalModel<S>,
    f: F,
    x0: &PhasePoint<S>,
    horizon: S,
    dt: S,
) -> Result<S>
where
    F: Fn(&PhasePoint<S>) -> S,
{
    if !(horizon > S::zero()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be > 0")));
    }
    let forward = classical_flow(model, x0, horizon, dt)?;
    let backward = classical_flow(model, x0, -horizon, dt)?;
    let integral = |tr: &Trajectory<S>| -> S {
        tr.times
            .windows(2)
            .zip(tr.points.windows(2))
            .map(|(t, x)| Float::abs(t[1] - t[0]) * half::<S>() * (f(&x[0]) + f(&x[1])))
            .sum()
    };
    Ok((integral(&forward) + integral(&backward)) / (two::<S>() * horizon))
}
