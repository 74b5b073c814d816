//! Sensitivity to initial conditions: separation times, growth rates and
//! finite-difference monodromy.

use super::{classify, eigenvalues, eigenvector, guard, ClassicalModel, FixedPointKind, Jacobian, PhasePoint};
use crate::error::{Error, Result};
use crate::scalar::{two, Real};

/// Outcome of [`sensitivity_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sensitivity<S> {
    /// First sampled time at which the separation reached the target.
    Reached(S),
    /// The target was not reached before `t_max`.
    NotReached(S),
}

impl<S: Copy> Sensitivity<S> {
    pub fn time(&self) -> Option<S> {
        match *self {
            Sensitivity::Reached(t) => Some(t),
            Sensitivity::NotReached(_) => None,
        }
    }
}

/// Unstable eigenvector at a hyperbolic fixed point, `q` direction otherwise.
fn perturbation_direction<S: Real>(model: &ClassicalModel<S>, x: &PhasePoint<S>) -> [S; 2] {
    let f = model.vector_field(x);
    if f[0].hypot(f[1]) <= S::lit(1e-12) {
        let j = model.jacobian(x);
        if let (FixedPointKind::Hyperbolic { exponent }, ev) = classify(&j) {
            if ev[0].im == S::zero() && exponent > S::zero() {
                return eigenvector(&j, exponent);
            }
        }
    }
    [S::one(), S::zero()]
}

/// `(t, |Φᵗ(x) − Φᵗ(x + eps·v)|)` sampled every `dt` up to `t_max`.
pub fn separation_series<S: Real>(
    model: &ClassicalModel<S>,
    x: &PhasePoint<S>,
    eps: S,
    dt: S,
    t_max: S,
) -> Result<Vec<(S, S)>> {
    let mut out = Vec::new();
    walk_pair(model, x, eps, dt, t_max, |t, sep| {
        out.push((t, sep));
        true
    })?;
    Ok(out)
}

fn walk_pair<S: Real, F>(
    model: &ClassicalModel<S>,
    x: &PhasePoint<S>,
    eps: S,
    dt: S,
    t_max: S,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(S, S) -> bool,
{
    if !(eps > S::zero()) || !(dt > S::zero()) || t_max < S::zero() {
        return Err(Error::InvalidParameter(
            "separation needs eps > 0, dt > 0 and t_max >= 0".into(),
        ));
    }
    let dir = perturbation_direction(model, x);
    let mut a = *x;
    let mut b = x.offset(dir, eps);
    let mut k = 0usize;
    if !visit(S::zero(), a.distance(&b)) {
        return Ok(());
    }
    loop {
        k += 1;
        let t = S::from_count(k) * dt;
        if t > t_max * (S::one() + S::lit(1e-12)) {
            return Ok(());
        }
        a = model.step(&a, dt);
        b = model.step(&b, dt);
        guard(&a, t)?;
        guard(&b, t)?;
        if !visit(t, a.distance(&b)) {
            return Ok(());
        }
    }
}

/// Smallest sampled `t ≤ t_max` with `|Φᵗ(x) − Φᵗ(x + eps·v)| ≥ target`.
///
/// `v` is the unstable eigenvector when `x` is a hyperbolic fixed point and
/// the `q` axis otherwise.
pub fn sensitivity_time<S: Real>(
    model: &ClassicalModel<S>,
    x: &PhasePoint<S>,
    eps: S,
    target: S,
    dt: S,
    t_max: S,
) -> Result<Sensitivity<S>> {
    if !(target > eps) {
        return Err(Error::InvalidParameter(format!(
            "target distance {target} must exceed eps {eps}"
        )));
    }
    let mut hit = None;
    walk_pair(model, x, eps, dt, t_max, |t, sep| {
        if sep >= target {
            hit = Some(t);
            false
        } else {
            true
        }
    })?;
    Ok(match hit {
        Some(t) => Sensitivity::Reached(t),
        None => Sensitivity::NotReached(t_max),
    })
}

/// Least-squares slope of `ln(separation)` against `t`, using the samples
/// before the separation first reaches `saturation`.
pub fn separation_growth_rate<S: Real>(
    model: &ClassicalModel<S>,
    x: &PhasePoint<S>,
    eps: S,
    dt: S,
    t_max: S,
    saturation: S,
) -> Result<S> {
    let mut samples = Vec::new();
    walk_pair(model, x, eps, dt, t_max, |t, sep| {
        if sep >= saturation {
            return false;
        }
        samples.push((t, sep.ln()));
        true
    })?;
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "fewer than two samples before saturation".into(),
        ));
    }
    let n = S::from_count(samples.len());
    let mt = samples.iter().map(|s| s.0).sum::<S>() / n;
    let my = samples.iter().map(|s| s.1).sum::<S>() / n;
    let (num, den) = samples.iter().fold((S::zero(), S::zero()), |(num, den), &(t, y)| {
        (num + (t - mt) * (y - my), den + (t - mt) * (t - mt))
    });
    Ok(num / den)
}

/// Finite-difference derivative of the time-`t` flow map at `x`, central
/// differences with offset `h`.
pub fn monodromy<S: Real>(
    model: &ClassicalModel<S>,
    x: &PhasePoint<S>,
    t: S,
    dt: S,
    h: S,
) -> Result<Jacobian<S>> {
    let mut m = [[S::zero(); 2]; 2];
    for (col, dir) in [[S::one(), S::zero()], [S::zero(), S::one()]].into_iter().enumerate() {
        let fwd = model.advance(&x.offset(dir, h), t, dt)?;
        let bwd = model.advance(&x.offset(dir, -h), t, dt)?;
        m[0][col] = (fwd.q - bwd.q) / (two::<S>() * h);
        m[1][col] = (fwd.p - bwd.p) / (two::<S>() * h);
    }
    Ok(m)
}

/// `ln|μ|/t` for the eigenvalues `μ` of a monodromy matrix, largest first.
pub fn lyapunov_exponents<S: Real>(m: &Jacobian<S>, t: S) -> [S; 2] {
    let ev = eigenvalues(m);
    let mut out = [ev[0].norm().ln() / t, ev[1].norm().ln() / t];
    if out[1] > out[0] {
        out.swap(0, 1);
    }
    // Keep the symplectic pairing visible even when one factor underflows.
    if !out[1].is_finite() {
        out[1] = -out[0];
    }
    out
}
