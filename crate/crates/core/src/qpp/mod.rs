//! Quasiparticle-picture entropy predictions.
//!
//! The closed forms below are the piecewise-linear curves obtained by
//! integrating the propagated delta-line fronts of [`fronts`]; the two are
//! cross-checked against each other in the tests.

use crate::lattice::Boundary;
use crate::{Error, Result};

pub mod fronts;

pub use fronts::{
    initial_fronts, integrate_fronts, integrate_fronts_set, propagate_fronts, DeltaLine, FrontSet,
    InitialKind, Orientation,
};

/// Entropy density at saturation, front speed and geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QppParams {
    /// Entropy per site at saturation (nats).
    pub sigma: f64,
    /// Front speed in sites per unit time; 2 for quenches to `H0`.
    pub v: f64,
    /// System size.
    pub n: f64,
    pub boundary: Boundary,
}

impl QppParams {
    pub fn new(sigma: f64, v: f64, n: f64, boundary: Boundary) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "v must be finite and > 0, got {v}"
            )));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "system size must be positive, got {n}"
            )));
        }
        Ok(QppParams {
            sigma,
            v,
            n,
            boundary,
        })
    }
}

/// Short-range initial state: linear growth until `vt = ℓ`, then
/// saturation at `σℓ`. Valid before the periodic revival at `vt = N − ℓ`.
pub fn qpp_short_range_entropy(ell: f64, t: f64, p: &QppParams) -> f64 {
    p.sigma * (p.v * t).min(ell)
}

/// Lateral block `[0, a)` of the rainbow state quenched with open
/// boundaries. Blocks with `a > N/2` behave like `N − a`.
pub fn rainbow_lateral_entropy(a: f64, t: f64, p: &QppParams) -> Result<f64> {
    let n = p.n;
    if !(0.0..=n).contains(&a) {
        return Err(Error::InvalidArgument(format!(
            "block size {a} outside [0, {n}]"
        )));
    }
    let a = if a > n / 2.0 { n - a } else { a };
    let vt = p.v * t;
    Ok(if vt < n - 2.0 * a {
        p.sigma * a
    } else if vt < n {
        0.5 * p.sigma * (n - vt)
    } else {
        0.0
    })
}

/// Central block `[a, N − a)` of the rainbow state.
///
/// For `a <= N/4` the block grows as `σvt` (both of its ends gain links),
/// holds `2σa` and decays as `σ(N − vt)`. For `a > N/4` it follows the
/// block `[N/2 − a, N/2 + a)`.
pub fn rainbow_central_entropy(a: f64, t: f64, p: &QppParams) -> Result<f64> {
    let n = p.n;
    if !(0.0..=n / 2.0).contains(&a) {
        return Err(Error::InvalidArgument(format!(
            "central offset {a} outside [0, {}]",
            n / 2.0
        )));
    }
    let a = if a > n / 4.0 { n / 2.0 - a } else { a };
    let vt = p.v * t;
    Ok(p.sigma * vt.min(2.0 * a).min(n - vt).max(0.0))
}

/// Contiguous block of the bridge state on a periodic chain, valid before
/// the revival at `vt = N/2`. Blocks longer than `N/2` are mapped to their
/// complement.
pub fn bridge_entropy(ell: f64, t: f64, p: &QppParams) -> f64 {
    let n = p.n;
    let ell = if ell > n / 2.0 { n - ell } else { ell };
    let vt = p.v * t;
    p.sigma * ell.min(n / 2.0 - vt).max(0.0)
}
