//! Natural cubic spline on a uniform grid.

#[derive(Debug, Clone)]
pub(crate) struct UniformSpline {
    t0: f64,
    h: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(t0: f64, h: f64, y: &[f64]) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives:
            // m[i-1] + 4 m[i] + m[i+1] = 6/h² (y[i+1] − 2y[i] + y[i-1])
            let k = n - 2;
            let mut diag = vec![4.0; k];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 / (h * h) * (y[i + 1] - 2.0 * y[i] + y[i - 1]))
                .collect();
            for i in 1..k {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        UniformSpline {
            t0,
            h,
            y: y.to_vec(),
            m,
        }
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = ((t - self.t0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n.saturating_sub(2));
        (i, s - i as f64)
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.y.len() == 1 {
            return self.y[0];
        }
        let (i, u) = self.locate(t);
        if u == 0.0 {
            return self.y[i];
        }
        if u == 1.0 {
            return self.y[i + 1];
        }
        let h = self.h;
        let a = 1.0 - u;
        a * self.y[i]
            + u * self.y[i + 1]
            + h * h / 6.0 * ((a * a * a - a) * self.m[i] + (u * u * u - u) * self.m[i + 1])
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if self.y.len() == 1 {
            return 0.0;
        }
        let (i, u) = self.locate(t);
        let h = self.h;
        let a = 1.0 - u;
        (self.y[i + 1] - self.y[i]) / h
            + h / 6.0 * ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * u * u - 1.0) * self.m[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_lines() {
        let y: Vec<f64> = (0..11).map(|i| 3.0 * i as f64 * 0.1 - 1.0).collect();
        let s = UniformSpline::new(0.0, 0.1, &y);
        for (i, v) in y.iter().enumerate() {
            assert!((s.value(i as f64 * 0.1) - v).abs() < 1e-14);
        }
        assert!((s.value(0.537) - (3.0 * 0.537 - 1.0)).abs() < 1e-12);
        assert!((s.derivative(0.537) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_function_accuracy() {
        let h = 0.01;
        let y: Vec<f64> = (0..301).map(|i| (i as f64 * h).sin()).collect();
        let s = UniformSpline::new(0.0, h, &y);
        for k in 0..100 {
            let t = 0.5 + k as f64 * 0.0173;
            assert!((s.value(t) - t.sin()).abs() < 1e-8);
            assert!((s.derivative(t) - t.cos()).abs() < 1e-5);
        }
    }
}
