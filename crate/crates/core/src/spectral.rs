//! FFT plumbing for the periodic position grid.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::scalar::{Real, C};
use crate::wavepacket::Grid;

/// Forward/inverse transforms plus the wavenumber table of a grid.
///
/// Each evolution owns its own `Spectral`; the scratch buffer makes it `!Sync`
/// in spirit, so it is never shared between workers.
pub struct Spectral<S: Real> {
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
    wavenumbers: Vec<S>,
    scratch: Vec<C<S>>,
}

impl<S: Real> Spectral<S> {
    pub fn new(grid: &Grid<S>) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            wavenumbers: grid.wavenumbers(),
            scratch: vec![C::new(S::zero(), S::zero()); scratch_len],
        }
    }

    /// Wavenumbers in FFT order: `k_j = 2πj/L` for `j < n/2`, `2π(j-n)/L` above.
    pub fn wavenumbers(&self) -> &[S] {
        &self.wavenumbers
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&mut self, buf: &mut [C<S>]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform in place, including the `1/n` factor.
    pub fn inverse(&mut self, buf: &mut [C<S>]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = S::one() / S::from_count(buf.len());
        for z in buf.iter_mut() {
            *z = *z * scale;
        }
    }

    /// Momentum-space probability weights `|ψ̂(k_j)|² / Σ|ψ̂|²`, FFT order.
    pub fn momentum_weights(&mut self, amps: &[C<S>]) -> Vec<S> {
        let mut buf = amps.to_vec();
        self.forward(&mut buf);
        let mut w: Vec<S> = buf.iter().map(|z| z.norm_sqr()).collect();
        let total: S = w.iter().copied().sum();
        if total > S::zero() {
            for v in w.iter_mut() {
                *v = *v / total;
            }
        }
        w
    }
}
