//! One-dimensional stable and unstable manifolds of hyperbolic fixed points.
//!
//! In one degree of freedom the unstable manifold of a fixed point is a
//! single orbit leaving it, so each branch is grown by flowing a seed placed
//! `eps` away along the unstable eigenvector. Steps that stretch beyond the
//! segment limit are subdivided, and the finished polyline is thinned so that
//! consecutive points are at most `max_segment` apart in arclength.

use std::io::Write;

use num_traits::Float;

use super::{classify, eigenvector, guard, ClassicalModel, FixedPointKind, PhasePoint};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which side of the fixed point a branch leaves from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Seeded at `y + eps·v` with `v` oriented towards positive `q`.
    Plus,
    /// Seeded at `y − eps·v`.
    Minus,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

/// A branch of an invariant manifold as an ordered polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCurve<S> {
    pub branch: Branch,
    pub base: PhasePoint<S>,
    pub points: Vec<PhasePoint<S>>,
    /// Arclength of each point measured along the grown orbit.
    pub arclength: Vec<S>,
    /// Flow time at which the orbit passed each point (seed at 0).
    pub times: Vec<S>,
}

impl<S: Real> ManifoldCurve<S> {
    /// Euclidean distance from `x` to the polyline.
    pub fn distance_to(&self, x: &PhasePoint<S>) -> S {
        match self.points.len() {
            0 => S::infinity(),
            1 => self.points[0].distance(x),
            _ => self
                .points
                .windows(2)
                .map(|w| segment_distance(&w[0], &w[1], x))
                .fold(S::infinity(), Float::min),
        }
    }

    /// `s,q,p` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,q,p")?;
        for (s, x) in self.arclength.iter().zip(&self.points) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", s, x.q, x.p)?;
        }
        Ok(())
    }
}

fn segment_distance<S: Real>(a: &PhasePoint<S>, b: &PhasePoint<S>, x: &PhasePoint<S>) -> S {
    let (dq, dp) = (b.q - a.q, b.p - a.p);
    let len2 = dq * dq + dp * dp;
    if len2 == S::zero() {
        return a.distance(x);
    }
    let u = ((x.q - a.q) * dq + (x.p - a.p) * dp) / len2;
    let u = Float::min(Float::max(u, S::zero()), S::one());
    let foot = PhasePoint::new(a.q + u * dq, a.p + u * dp);
    foot.distance(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldOptions<S> {
    /// Largest allowed arclength between consecutive curve points.
    pub max_segment: S,
    /// Growth stops once a branch is this long.
    pub arclength_budget: S,
}

impl<S: Real> Default for ManifoldOptions<S> {
    fn default() -> Self {
        Self {
            max_segment: S::lit(1e-2),
            arclength_budget: S::lit(50.0),
        }
    }
}

/// Both unstable branches of the hyperbolic fixed point `y`, with default options.
pub fn unstable_manifold<S: Real>(
    model: &ClassicalModel<S>,
    y: &PhasePoint<S>,
    eps: S,
    steps: usize,
    dt: S,
) -> Result<(ManifoldCurve<S>, ManifoldCurve<S>)> {
    unstable_manifold_with(model, y, eps, steps, dt, &ManifoldOptions::default())
}

pub fn unstable_manifold_with<S: Real>(
    model: &ClassicalModel<S>,
    y: &PhasePoint<S>,
    eps: S,
    steps: usize,
    dt: S,
    opts: &ManifoldOptions<S>,
) -> Result<(ManifoldCurve<S>, ManifoldCurve<S>)> {
    let (rate, _) = hyperbolic_rates(model, y)?;
    let dir = eigenvector(&model.jacobian(y), rate);
    grow_pair(model, y, dir, eps, steps, dt, opts)
}

/// Both stable branches, grown under the time-reversed flow.
pub fn stable_manifold<S: Real>(
    model: &ClassicalModel<S>,
    y: &PhasePoint<S>,
    eps: S,
    steps: usize,
    dt: S,
) -> Result<(ManifoldCurve<S>, ManifoldCurve<S>)> {
    let (_, rate) = hyperbolic_rates(model, y)?;
    let dir = eigenvector(&model.jacobian(y), rate);
    grow_pair(model, y, dir, eps, steps, -dt, &ManifoldOptions::default())
}

/// Positive and negative real eigenvalues at the fixed point `y`.
fn hyperbolic_rates<S: Real>(model: &ClassicalModel<S>, y: &PhasePoint<S>) -> Result<(S, S)> {
    let f = model.vector_field(y);
    if f[0].hypot(f[1]) > S::lit(1e-10) {
        return Err(Error::InvalidParameter(format!(
            "({}, {}) is not a fixed point",
            y.q, y.p
        )));
    }
    let (kind, ev) = classify(&model.jacobian(y));
    match kind {
        FixedPointKind::Hyperbolic { .. } if ev[0].im == S::zero() => {
            let hi = Float::max(ev[0].re, ev[1].re);
            let lo = Float::min(ev[0].re, ev[1].re);
            if hi > S::zero() && lo < S::zero() {
                Ok((hi, lo))
            } else {
                Err(Error::NotHyperbolic)
            }
        }
        _ => Err(Error::NotHyperbolic),
    }
}

fn grow_pair<S: Real>(
    model: &ClassicalModel<S>,
    y: &PhasePoint<S>,
    dir: [S; 2],
    eps: S,
    steps: usize,
    h: S,
    opts: &ManifoldOptions<S>,
) -> Result<(ManifoldCurve<S>, ManifoldCurve<S>)> {
    if !(eps > S::zero()) || h == S::zero() || !(opts.max_segment > S::zero()) {
        return Err(Error::InvalidParameter(
            "manifold growth needs eps > 0, dt != 0 and max_segment > 0".into(),
        ));
    }
    let plus = grow_branch(model, y, y.offset(dir, eps), steps, h, opts, Branch::Plus)?;
    let minus = grow_branch(model, y, y.offset(dir, -eps), steps, h, opts, Branch::Minus)?;
    Ok((plus, minus))
}

fn grow_branch<S: Real>(
    model: &ClassicalModel<S>,
    y: &PhasePoint<S>,
    seed: PhasePoint<S>,
    steps: usize,
    h: S,
    opts: &ManifoldOptions<S>,
    branch: Branch,
) -> Result<ManifoldCurve<S>> {
    let mut raw = vec![seed];
    let mut arc = vec![S::zero()];
    let mut stamps = vec![S::zero()];
    let mut cur = seed;
    let seed_dist = seed.distance(y);
    let mut max_dist = seed_dist;
    let mut prev_dist = seed_dist;
    let mut now = S::zero();

    'grow: for _ in 0..steps {
        let next = model.step(&cur, h);
        let stretch = cur.distance(&next);
        let pieces = if stretch > opts.max_segment {
            (stretch / opts.max_segment).ceil().to_usize().unwrap_or(1) * 2
        } else {
            1
        };
        let sub = h / S::from_count(pieces);
        for _ in 0..pieces {
            let nxt = model.step(&cur, sub);
            now = now + sub;
            guard(&nxt, now)?;
            let s = *arc.last().unwrap() + cur.distance(&nxt);
            raw.push(nxt);
            arc.push(s);
            stamps.push(now);
            cur = nxt;
            if s >= opts.arclength_budget {
                break 'grow;
            }
        }
        // Stop at the closest return to the base (homoclinic loop closed).
        let d = cur.distance(y);
        max_dist = Float::max(max_dist, d);
        let returned = max_dist > S::lit(100.0) * seed_dist && d < S::lit(0.01) * max_dist;
        if returned && d > prev_dist {
            break;
        }
        prev_dist = d;
    }

    let keep = thin(&arc, opts.max_segment);
    Ok(ManifoldCurve {
        branch,
        base: *y,
        points: keep.iter().map(|&i| raw[i]).collect(),
        arclength: keep.iter().map(|&i| arc[i]).collect(),
        times: keep.iter().map(|&i| stamps[i]).collect(),
    })
}

/// Indices of a subset of points whose arclength gaps stay below `max_segment`.
fn thin<S: Real>(arc: &[S], max_segment: S) -> Vec<usize> {
    let n = arc.len();
    let mut keep = vec![0];
    let mut last = arc[0];
    for i in 1..n {
        if i + 1 == n || arc[i + 1] - last > max_segment {
            keep.push(i);
            last = arc[i];
        }
    }
    keep
}

/// Largest distance between `Φˢ(x)` and the curve, over curve points `x`.
///
/// The base must be a fixed point, where invariance of the branch under the
/// flow reduces to set invariance. Points whose image would lie beyond the
/// computed piece of the branch (flow time outside the grown range) are
/// skipped.
pub fn manifold_covariance_check<S: Real>(
    model: &ClassicalModel<S>,
    curve: &ManifoldCurve<S>,
    s: S,
    dt: S,
) -> Result<S> {
    let f = model.vector_field(&curve.base);
    if f[0].hypot(f[1]) > S::lit(1e-10) {
        return Err(Error::InvalidParameter("curve base is not a fixed point".into()));
    }
    if curve.points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let (t_lo, t_hi) = curve
        .times
        .iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &t| {
            (Float::min(lo, t), Float::max(hi, t))
        });
    let slack = Float::abs(s) * S::lit(1e-12);
    let mut worst = S::zero();
    for (x, &t) in curve.points.iter().zip(&curve.times) {
        if t + s < t_lo - slack || t + s > t_hi + slack {
            continue;
        }
        let image = model.advance(x, s, dt)?;
        worst = Float::max(worst, curve.distance_to(&image));
    }
    Ok(worst)
}
