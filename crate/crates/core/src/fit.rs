//! Ordinary least-squares fits of power laws.

use num_traits::Float;

use crate::error::{Error, Result};

/// `log y ≈ intercept + slope·log x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl PowerFit {
    /// Decay exponent `−slope`.
    pub fn exponent(&self) -> f64 {
        -self.slope
    }
}

/// Fits `y = C xᵖ` by least squares in log-log coordinates. Needs at least
/// two points with distinct positive `x` and positive `y`.
pub fn power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 2 {
        return Err(Error::invalid("points", "need at least two points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::invalid("points", "coordinates must be positive"));
    }
    let n = points.len() as f64;
    let lx: f64 = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let ly: f64 = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x.ln() - lx, y.ln() - ly);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::invalid("points", "x values must not all coincide"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerFit { slope, intercept: ly - slope * lx, r2 })
}
