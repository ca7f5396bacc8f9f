//! Sizing of the sampled sketch from `(epsilon, delta)` and a memory budget.
//!
//! With `d = ceil(ln(2/delta))` rows and `w = 1 + ceil(e * ((eps + 1)/eps)^(1/d))`
//! columns per grid, the sample size `B` is the largest integer with
//!
//! ```text
//! M >= w * d * grids * (32 + B * (b(B) + 3*32 + 1)),   b(B) = ceil(log2(4 B^2.5 / delta))
//! ```
//!
//! There is no closed form because `b` depends on `B`; the cost is monotone in
//! `B`, so integer bisection finds the maximum exactly.

use core::f64::consts::E;

use crate::error::Error;
use crate::hashing::MAX_FINGERPRINT_BITS;

/// Bits charged per cell for its counter.
pub const COUNTER_BITS: u64 = 32;
/// Bits charged per sample entry on top of the fingerprint: three tree links
/// plus a colour bit.
pub const ENTRY_OVERHEAD_BITS: u64 = 3 * 32 + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Budget the sample size was solved for, in bits.
    pub memory_bits: u64,
    /// Number of `w x d` grids the budget is shared by (one per attribute,
    /// or one per dyadic level for range-enabled attributes).
    pub grid_count: usize,
    pub width: usize,
    pub depth: usize,
    /// Maximum sample size `B` per cell.
    pub sample_size: usize,
    /// Fingerprint width `b`.
    pub fingerprint_bits: u32,
    /// Sampling error share, equal to `epsilon`.
    pub epsilon1: f64,
    /// Collision error share, `(epsilon / (1 + epsilon))^(1/d)`.
    pub epsilon2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub seed: u64,
}

fn check_epsilon_delta(epsilon: f64, delta: f64) -> Result<(), Error> {
    let open_unit = |x: f64| x > 0.0 && x < 1.0;
    if !open_unit(epsilon) || !open_unit(delta) {
        return Err(Error::InvalidEpsilonDelta { epsilon, delta });
    }
    if epsilon >= 0.25 {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    Ok(())
}

/// `d = ceil(ln(2/delta))`.
pub fn depth_for(delta: f64) -> usize {
    (libm::ceil(libm::log(2.0 / delta)) as usize).max(1)
}

/// `w = 1 + ceil(e * ((eps + 1)/eps)^(1/d))`.
pub fn width_for(epsilon: f64, depth: usize) -> usize {
    1 + libm::ceil(E * libm::pow((epsilon + 1.0) / epsilon, 1.0 / depth as f64)) as usize
}

/// `b = ceil(log2(4 B^2.5 / delta))`, clamped to `1..=63`.
pub fn fingerprint_bits(sample_size: usize, delta: f64) -> u32 {
    let b = libm::ceil(2.0 + 2.5 * libm::log2(sample_size as f64) - libm::log2(delta));
    (b.max(1.0) as u32).min(MAX_FINGERPRINT_BITS)
}

/// Memory charged for a sketch with the given shape, in bits.
pub fn required_bits(
    width: usize,
    depth: usize,
    grid_count: usize,
    sample_size: usize,
    fingerprint_bits: u32,
) -> u128 {
    let per_cell = COUNTER_BITS as u128
        + sample_size as u128 * (fingerprint_bits as u64 + ENTRY_OVERHEAD_BITS) as u128;
    width as u128 * depth as u128 * grid_count as u128 * per_cell
}

/// Parameters for a sketch over `attribute_count` equality-only attributes.
pub fn configure(
    epsilon: f64,
    delta: f64,
    memory_bits: u64,
    attribute_count: usize,
) -> Result<SketchParams, Error> {
    configure_grids(epsilon, delta, memory_bits, attribute_count)
}

/// Like [`configure`], but the budget is shared by `grid_count` grids.
pub fn configure_grids(
    epsilon: f64,
    delta: f64,
    memory_bits: u64,
    grid_count: usize,
) -> Result<SketchParams, Error> {
    check_epsilon_delta(epsilon, delta)?;
    if grid_count == 0 {
        return Err(Error::InvalidParameter("at least one grid is required"));
    }
    let depth = depth_for(delta);
    let width = width_for(epsilon, depth);
    let cost = |b: usize| required_bits(width, depth, grid_count, b, fingerprint_bits(b, delta));
    let budget = memory_bits as u128;
    if cost(1) > budget {
        return Err(Error::BudgetTooSmall {
            memory_bits,
            required_bits: cost(1).min(u64::MAX as u128) as u64,
        });
    }
    // cost(lo) <= budget < cost(hi)
    let mut lo = 1usize;
    let mut hi =
        (budget / (width * depth * grid_count) as u128 + 1).min(usize::MAX as u128) as usize;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if cost(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SketchParams::assemble(
        epsilon,
        delta,
        memory_bits,
        grid_count,
        width,
        depth,
        lo,
    ))
}

impl SketchParams {
    /// Parameters with an explicit sample size instead of a memory budget.
    /// `memory_bits` is set to the cost of that shape.
    pub fn with_sample_size(
        epsilon: f64,
        delta: f64,
        sample_size: usize,
        grid_count: usize,
    ) -> Result<Self, Error> {
        check_epsilon_delta(epsilon, delta)?;
        if sample_size == 0 || grid_count == 0 {
            return Err(Error::InvalidParameter(
                "sample size and grid count must be positive",
            ));
        }
        let depth = depth_for(delta);
        let width = width_for(epsilon, depth);
        let bits = required_bits(
            width,
            depth,
            grid_count,
            sample_size,
            fingerprint_bits(sample_size, delta),
        );
        Ok(SketchParams::assemble(
            epsilon,
            delta,
            bits.min(u64::MAX as u128) as u64,
            grid_count,
            width,
            depth,
            sample_size,
        ))
    }

    fn assemble(
        epsilon: f64,
        delta: f64,
        memory_bits: u64,
        grid_count: usize,
        width: usize,
        depth: usize,
        sample_size: usize,
    ) -> Self {
        SketchParams {
            epsilon,
            delta,
            memory_bits,
            grid_count,
            width,
            depth,
            sample_size,
            fingerprint_bits: fingerprint_bits(sample_size, delta),
            epsilon1: epsilon,
            epsilon2: libm::pow(epsilon / (1.0 + epsilon), 1.0 / depth as f64),
            delta1: delta / 2.0,
            delta2: delta / 2.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Cost of this shape under the budget formula, in bits.
    pub fn required_bits(&self) -> u128 {
        required_bits(
            self.width,
            self.depth,
            self.grid_count,
            self.sample_size,
            self.fingerprint_bits,
        )
    }

    pub(crate) fn validate(&self) -> Result<(), Error> {
        if self.width == 0 || self.depth == 0 || self.sample_size == 0 || self.grid_count == 0 {
            return Err(Error::InvalidParameter(
                "width, depth, sample size and grid count must be positive",
            ));
        }
        if self.fingerprint_bits == 0 || self.fingerprint_bits > MAX_FINGERPRINT_BITS {
            return Err(Error::InvalidFingerprintBits(self.fingerprint_bits));
        }
        if !(self.epsilon > 0.0 && self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidEpsilonDelta {
                epsilon: self.epsilon,
                delta: self.delta,
            });
        }
        Ok(())
    }
}
