//! Percentiles, Pearson correlation and two-dimensional PCA.
//!
//! All percentiles in the crate use linear interpolation between closest
//! ranks with inclusive endpoints: for sorted samples `x[0..n]` the `p`-th
//! percentile sits at fractional rank `p/100 · (n − 1)`.

use nalgebra::Vector2;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// `p`-th percentile (0–100) of signed samples.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    let mut sorted = samples.to_vec();
    sort_samples(&mut sorted)?;
    percentile_sorted(&sorted, p)
}

/// Several percentiles with a single sort.
pub fn percentiles(samples: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
    let mut sorted = samples.to_vec();
    sort_samples(&mut sorted)?;
    ps.iter().map(|&p| percentile_sorted(&sorted, p)).collect()
}

fn sort_samples(samples: &mut [f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::domain("percentile of an empty sample set"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("percentile of samples containing NaN"));
    }
    samples.sort_by(f64::total_cmp);
    Ok(())
}

/// Percentile of already sorted samples.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::domain("percentile of an empty sample set"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::domain(format!("percentile {p} outside [0, 100]")));
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    })
}

/// First and third quartile.
pub fn quartiles(samples: &[f64]) -> Result<(f64, f64)> {
    let q = percentiles(samples, &[25.0, 75.0])?;
    Ok((q[0], q[1]))
}

pub fn median(samples: &[f64]) -> Result<f64> {
    percentile(samples, 50.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    /// Two-sided p-value from Student's t with `n − 2` degrees of freedom;
    /// NaN when `n < 3`.
    pub p_value: f64,
    pub n: usize,
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "pearson needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::domain("pearson needs at least two samples"));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::domain("pearson undefined for zero variance"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let p_value = if n < 3 {
        f64::NAN
    } else if r.abs() == 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(Pearson { r, p_value, n })
}

/// Principal components of two-column data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pca2 {
    /// Unit vectors, descending eigenvalue; first nonzero entry positive.
    pub components: [Vector2<f64>; 2],
    /// Sample-covariance eigenvalues, descending.
    pub eigenvalues: [f64; 2],
    /// Eigenvalues over their sum.
    pub explained: [f64; 2],
}

impl Pca2 {
    /// Orientation of the first component as a line angle in [0°, 180°).
    pub fn first_angle_deg(&self) -> f64 {
        let c = self.components[0];
        c.y.atan2(c.x).to_degrees().rem_euclid(180.0)
    }
}

pub fn pca2(samples: &[[f64; 2]]) -> Result<Pca2> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::domain("pca2 needs at least two samples"));
    }
    let mean = samples
        .iter()
        .fold([0.0, 0.0], |acc, s| [acc[0] + s[0], acc[1] + s[1]])
        .map(|v| v / n as f64);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in samples {
        let (dx, dy) = (s[0] - mean[0], s[1] - mean[1]);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let denom = (n - 1) as f64;
    let (a, b, c) = (sxx / denom, sxy / denom, syy / denom);
    let trace = a + c;
    if !(trace > 0.0) {
        return Err(Error::domain("pca2 of data with zero covariance"));
    }
    let half_gap = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let l1 = trace / 2.0 + half_gap;
    let l2 = (trace / 2.0 - half_gap).max(0.0);

    let first = if b != 0.0 {
        Vector2::new(l1 - c, b).normalize()
    } else if a >= c {
        Vector2::new(1.0, 0.0)
    } else {
        Vector2::new(0.0, 1.0)
    };
    let second = Vector2::new(-first.y, first.x);
    let components = [fix_sign(first), fix_sign(second)];
    let total = l1 + l2;
    Ok(Pca2 {
        components,
        eigenvalues: [l1, l2],
        explained: [l1 / total, l2 / total],
    })
}

fn fix_sign(v: Vector2<f64>) -> Vector2<f64> {
    let lead = if v.x != 0.0 { v.x } else { v.y };
    if lead < 0.0 {
        -v
    } else {
        v
    }
}
