//! Small fitting helpers used to compare measured entropies against the
//! quasiparticle predictions.

use crate::lattice::Boundary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

fn check_xy(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < min {
        return Err(Error::InvalidArgument(format!(
            "need at least {min} points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    Ok(())
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    check_xy(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Least-squares slope of `y ≈ slope·x`.
pub fn slope_through_origin(x: &[f64], y: &[f64]) -> Result<f64> {
    check_xy(x, y, 1)?;
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values are zero".into()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx)
}

/// Continuous two-piece linear fit
/// `y ≈ intercept + slope_before·t + (slope_after − slope_before)·max(0, t − breakpoint)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeFit {
    pub breakpoint: f64,
    pub intercept: f64,
    pub slope_before: f64,
    pub slope_after: f64,
    pub sse: f64,
}

impl HingeFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.intercept
            + self.slope_before * t
            + (self.slope_after - self.slope_before) * (t - self.breakpoint).max(0.0)
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let v = nalgebra::Vector3::from_column_slice(&b);
    m.lu().solve(&v).map(|s| [s[0], s[1], s[2]])
}

fn hinge_at(t: &[f64], y: &[f64], tau: f64) -> Option<HingeFit> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let row = [1.0, ti, (ti - tau).max(0.0)];
        for i in 0..3 {
            atb[i] += row[i] * yi;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let c = solve3(ata, atb)?;
    let fit = HingeFit {
        breakpoint: tau,
        intercept: c[0],
        slope_before: c[1],
        slope_after: c[1] + c[2],
        sse: 0.0,
    };
    let sse = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| (fit.eval(ti) - yi).powi(2))
        .sum();
    Some(HingeFit { sse, ..fit })
}

/// Best continuous hinge, with the breakpoint restricted to the interior of
/// the sampled range so that each piece has at least two samples.
pub fn hinge_fit(t: &[f64], y: &[f64]) -> Result<HingeFit> {
    check_xy(t, y, 4)?;
    let mut ts: Vec<f64> = t.to_vec();
    ts.sort_by(f64::total_cmp);
    let (lo, hi) = (ts[1], ts[ts.len() - 2]);
    if hi <= lo {
        return Err(Error::InvalidArgument("sample times too clustered".into()));
    }
    let steps = 2000;
    let h = (hi - lo) / steps as f64;
    let mut best: Option<HingeFit> = None;
    for k in 0..=steps {
        if let Some(f) = hinge_at(t, y, lo + h * k as f64) {
            if best.is_none_or(|b| f.sse < b.sse) {
                best = Some(f);
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidArgument("hinge fit is singular".into()))?;
    // golden-section refinement around the grid minimum
    let (mut a, mut b) = ((best.breakpoint - h).max(lo), (best.breakpoint + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        let fc = hinge_at(t, y, c).map_or(f64::INFINITY, |f| f.sse);
        let fd = hinge_at(t, y, d).map_or(f64::INFINITY, |f| f.sse);
        if fc < fd {
            b = d;
        } else {
            a = c;
        }
    }
    if let Some(f) = hinge_at(t, y, 0.5 * (a + b)) {
        if f.sse <= best.sse {
            best = f;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub prefactor: f64,
    pub exponent: f64,
    /// r² of the log-log regression.
    pub r2: f64,
}

/// `y ≈ prefactor · x^exponent`, fitted in log-log space. All samples must
/// be positive.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLaw> {
    check_xy(x, y, 2)?;
    if x.iter().chain(y).any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument(
            "power-law fit needs positive samples".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    Ok(PowerLaw {
        prefactor: f.intercept.exp(),
        exponent: f.slope,
        r2: f.r2,
    })
}

/// Chord length entering the ground-state entropy of an interval of `ell`
/// sites in a critical chain of `n` sites.
pub fn chord_length(ell: f64, n: usize, boundary: Boundary) -> f64 {
    use std::f64::consts::PI;
    match boundary {
        Boundary::Periodic => n as f64 / PI * (PI * ell / n as f64).sin(),
        Boundary::Open => {
            let m = (n + 1) as f64;
            2.0 * m / PI * (PI * ell / m).sin()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralChargeFit {
    pub central_charge: f64,
    pub constant: f64,
    pub r2: f64,
}

/// Fits `S(ℓ) = (c/κ)·ln chord(ℓ) + const` with `κ = 3` for a periodic
/// chain (two entangling points) and `κ = 6` for a block touching an open
/// end.
pub fn central_charge_fit(
    ells: &[f64],
    entropies: &[f64],
    n: usize,
    boundary: Boundary,
) -> Result<CentralChargeFit> {
    let x: Vec<f64> = ells
        .iter()
        .map(|&l| chord_length(l, n, boundary).ln())
        .collect();
    let f = linear_fit(&x, entropies)?;
    let kappa = match boundary {
        Boundary::Periodic => 3.0,
        Boundary::Open => 6.0,
    };
    Ok(CentralChargeFit {
        central_charge: kappa * f.slope,
        constant: f.intercept,
        r2: f.r2,
    })
}
