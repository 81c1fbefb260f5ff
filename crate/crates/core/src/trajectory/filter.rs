use num_complex::Complex64;

use super::JointTrajectory;
use crate::{Error, Result};

/// Digital Butterworth low-pass, designed by bilinear transform with
/// pre-warping. Coefficients are normalized so `a[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl ButterworthLowpass {
    pub fn design(order: usize, cutoff_hz: f64, sample_rate: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain("filter order must be at least 1"));
        }
        let nyquist = sample_rate / 2.0;
        if !(cutoff_hz > 0.0) || cutoff_hz >= nyquist {
            return Err(Error::domain(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, Nyquist = {nyquist} Hz)"
            )));
        }
        let fs2 = 2.0 * sample_rate;
        let warped = fs2 * (std::f64::consts::PI * cutoff_hz / sample_rate).tan();
        let n = order as f64;
        let poles: Vec<Complex64> = (1..=order)
            .map(|k| {
                let theta = std::f64::consts::PI * (2.0 * k as f64 + n - 1.0) / (2.0 * n);
                let s = Complex64::from_polar(warped, theta);
                (fs2 + s) / (fs2 - s)
            })
            .collect();
        let a: Vec<f64> = poly_from_roots(&poles).iter().map(|c| c.re).collect();
        let zeros = vec![Complex64::new(-1.0, 0.0); order];
        let mut b: Vec<f64> = poly_from_roots(&zeros).iter().map(|c| c.re).collect();
        let gain = a.iter().sum::<f64>() / b.iter().sum::<f64>();
        b.iter_mut().for_each(|v| *v *= gain);
        Ok(ButterworthLowpass { b, a })
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// Squared magnitude of the digital response at `freq_hz`.
    pub fn squared_magnitude(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate;
        let eval = |c: &[f64]| {
            c.iter()
                .enumerate()
                .map(|(k, v)| Complex64::from_polar(*v, -(k as f64) * w))
                .sum::<Complex64>()
        };
        (eval(&self.b) / eval(&self.a)).norm_sqr()
    }

    /// Group delay at DC, samples.
    fn dc_delay(&self) -> f64 {
        let moment = |c: &[f64]| c.iter().enumerate().map(|(k, v)| k as f64 * v).sum::<f64>() / c.iter().sum::<f64>();
        moment(&self.b) - moment(&self.a)
    }

    /// Transposed direct-form II state for a filter that has been fed the
    /// ramp `x0 + slope·m` (m < 0) forever; exact steady state for constant
    /// and linear inputs.
    fn ramp_state(&self, x0: f64, slope: f64) -> Vec<f64> {
        let n = self.order();
        let delay = self.dc_delay();
        let x = |m: f64| x0 + slope * m;
        let y = |m: f64| x0 + slope * (m - delay);
        (0..n)
            .map(|i| {
                (i + 1..=n)
                    .map(|k| {
                        let m = i as f64 - k as f64;
                        self.b[k] * x(m) - self.a[k] * y(m)
                    })
                    .sum()
            })
            .collect()
    }

    fn run(&self, x: &[f64], mut z: Vec<f64>) -> Vec<f64> {
        let n = self.order();
        let mut y = Vec::with_capacity(x.len());
        for &xi in x {
            let yi = self.b[0] * xi + z[0];
            for i in 0..n {
                let next = if i + 1 < n { z[i + 1] } else { 0.0 };
                z[i] = self.b[i + 1] * xi - self.a[i + 1] * yi + next;
            }
            y.push(yi);
        }
        y
    }

    fn run_from_start(&self, x: &[f64]) -> Vec<f64> {
        let slope = if x.len() > 1 { x[1] - x[0] } else { 0.0 };
        let z = self.ramp_state(x[0], slope);
        self.run(x, z)
    }

    /// Forward–backward (zero-phase) filtering. The signal is extended at
    /// both ends by odd reflection over `3 × order` samples, and each pass
    /// starts from the steady state of the local ramp.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * self.order()).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|k| 2.0 * x[0] - x[k]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|k| 2.0 * x[n - 1] - x[n - 1 - k]));

        let mut fwd = self.run_from_start(&ext);
        fwd.reverse();
        let mut back = self.run_from_start(&fwd);
        back.reverse();
        back[pad..pad + n].to_vec()
    }
}

fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, v) in c.iter().enumerate() {
            next[k] += v;
            next[k + 1] -= v * r;
        }
        c = next;
    }
    c
}

/// Zero-phase Butterworth low-pass of every joint column.
pub fn lowpass_filter(traj: &JointTrajectory, order: usize, cutoff_hz: f64) -> Result<JointTrajectory> {
    if traj.n_frames() < 2 {
        return Err(Error::domain("filtering needs at least two frames"));
    }
    let fs = 1.0 / traj.dt();
    let filter = ButterworthLowpass::design(order, cutoff_hz, fs)?;
    let mut angles = traj.angles().clone();
    for c in 0..angles.ncols() {
        let col: Vec<f64> = angles.column(c).iter().copied().collect();
        angles.column_mut(c).copy_from_slice(&filter.filtfilt(&col));
    }
    traj.with_angles(traj.time().to_vec(), angles)
}
