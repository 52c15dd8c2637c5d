//! Variance-uncertainty bands and the sublinear generator built on them.
//!
//! The uncertainty set is an interval of variances `[sigma_min_sq,
//! sigma_max_sq]`. The generator evaluates
//!
//! ```text
//! G(a) = 1/2 * sup { gamma * a : gamma in band } = 1/2 * (sigma_max_sq * a+  -  sigma_min_sq * a-)
//! ```
//!
//! which is monotone and sublinear in `a`. A band with `sigma_min_sq == 0` is
//! degenerate: the lower variance of the driving process vanishes, and the
//! change-of-measure pipeline has to go through the epsilon-perturbation
//! `G_eps(a) = G(a) + eps^2 * a / 2`.

use crate::error::{Error, Result};
use crate::scalar::{half, Real};

/// Interval of variances `[sigma_min_sq, sigma_max_sq]`.
///
/// Both endpoints are variances (length²/time), not standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolatilityBand<T> {
    sigma_min_sq: T,
    sigma_max_sq: T,
}

impl<T: Real> VolatilityBand<T> {
    /// Builds a band, requiring `0 <= sigma_min_sq <= sigma_max_sq` and
    /// `sigma_max_sq > 0`. The totally null band `[0, 0]` is only reachable
    /// through [`VolatilityBand::totally_degenerate`].
    pub fn new(sigma_min_sq: T, sigma_max_sq: T) -> Result<Self> {
        if !(sigma_min_sq >= T::zero()) || !(sigma_max_sq >= sigma_min_sq) {
            return Err(Error::invalid(format!(
                "variance band requires 0 <= min <= max, got [{sigma_min_sq}, {sigma_max_sq}]"
            )));
        }
        if !(sigma_max_sq > T::zero()) {
            return Err(Error::invalid(
                "variance band [0, 0] must be constructed with totally_degenerate()".to_string(),
            ));
        }
        Ok(Self {
            sigma_min_sq,
            sigma_max_sq,
        })
    }

    /// The band `[0, 0]`: the driving process is identically zero. Exists so
    /// the `B = 0` sanity checks can be expressed, but never by accident.
    pub fn totally_degenerate() -> Self {
        Self {
            sigma_min_sq: T::zero(),
            sigma_max_sq: T::zero(),
        }
    }

    pub fn sigma_min_sq(&self) -> T {
        self.sigma_min_sq
    }

    pub fn sigma_max_sq(&self) -> T {
        self.sigma_max_sq
    }

    /// `sigma_levels` variances equally spaced across the band, endpoints
    /// included. A singleton band repeats its single variance.
    pub fn variance_grid(&self, sigma_levels: usize) -> Vec<T> {
        let span = self.sigma_max_sq - self.sigma_min_sq;
        (0..sigma_levels)
            .map(|i| {
                if sigma_levels == 1 {
                    self.sigma_max_sq
                } else {
                    let frac = real_frac::<T>(i, sigma_levels - 1);
                    self.sigma_min_sq + span * frac
                }
            })
            .collect()
    }
}

fn real_frac<T: Real>(num: usize, den: usize) -> T {
    T::from_usize(num).unwrap() / T::from_usize(den).unwrap()
}

/// The sublinear generator `G` over a variance band, with the (currently
/// 1-d only) state dimension carried for the interfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator<T> {
    band: VolatilityBand<T>,
    dimension: usize,
}

impl<T: Real> Generator<T> {
    pub fn new(band: VolatilityBand<T>) -> Self {
        Self { band, dimension: 1 }
    }

    pub fn with_dimension(band: VolatilityBand<T>, dimension: usize) -> Self {
        Self { band, dimension }
    }

    pub fn band(&self) -> &VolatilityBand<T> {
        &self.band
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Evaluates `G(a) = 1/2 (sigma_max_sq * max(a, 0) - sigma_min_sq * max(-a, 0))`.
    pub fn g_eval(&self, a: T) -> Result<T> {
        if self.dimension != 1 {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        let pos = a.max(T::zero());
        let neg = (-a).max(T::zero());
        Ok(half::<T>() * (self.band.sigma_max_sq * pos - self.band.sigma_min_sq * neg))
    }

    /// Whether the lower variance is strictly positive, together with that
    /// lower variance (zero in the degenerate case).
    pub fn is_nondegenerate(&self) -> (bool, T) {
        if self.band.sigma_min_sq > T::zero() {
            (true, self.band.sigma_min_sq)
        } else {
            (false, T::zero())
        }
    }

    /// The perturbed generator `G_eps(a) = G(a) + eps^2 a / 2`, realized by
    /// shifting both band endpoints up by `eps^2`. Non-degenerate for every
    /// `eps > 0`, even when `self` is degenerate.
    pub fn perturb(&self, eps: T) -> Result<Self> {
        if !(eps >= T::zero()) {
            return Err(Error::invalid(format!(
                "perturbation eps must be >= 0, got {eps}"
            )));
        }
        let eps_sq = eps * eps;
        Ok(Self {
            band: VolatilityBand {
                sigma_min_sq: self.band.sigma_min_sq + eps_sq,
                sigma_max_sq: self.band.sigma_max_sq + eps_sq,
            },
            dimension: self.dimension,
        })
    }
}
