//! Interpolating cubic splines with natural or periodic end conditions.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Natural spline: zero second derivative at both ends.
    pub fn natural(t: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(t, y, 2)?;
        let n = t.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut sub = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                let i = r + 1;
                let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
                sub[r] = h0;
                diag[r] = 2.0 * (h0 + h1);
                sup[r] = h1;
                rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
            m[1..n - 1].copy_from_slice(&inner);
        }
        Ok(Self {
            t: t.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    /// Periodic spline over `[t0, tN]`; `y[0]` and `y[N]` must agree.
    pub fn periodic(t: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(t, y, 4)?;
        let n = t.len();
        let scale = y.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if (y[0] - y[n - 1]).abs() > 1e-9 * scale {
            return Err(Error::Trajectory(format!(
                "periodic spline endpoints differ: {} vs {}",
                y[0],
                y[n - 1]
            )));
        }
        // Unknowns m[0..n-1]; m[n-1] = m[0].
        let k = n - 1;
        let h = |i: usize| t[i + 1] - t[i];
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            let h0 = if i == 0 { h(k - 1) } else { h(i - 1) };
            let h1 = h(i);
            let y_prev = if i == 0 { y[k - 1] } else { y[i - 1] };
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y_prev) / h0);
        }
        let inner = solve_cyclic(&sub, &diag, &sup, &rhs);
        let mut m = inner;
        m.push(m[0]);
        let mut y = y.to_vec();
        y[n - 1] = y[0];
        Ok(Self {
            t: t.to_vec(),
            y,
            m,
        })
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().expect("at least two knots")
    }

    /// Value, first and second derivative at `x` (extrapolates past the ends).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.t.len();
        let i = match self.t.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let (a, b) = (t1 - x, x - t0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let c0 = self.y[i] / h - m0 * h / 6.0;
        let c1 = self.y[i + 1] / h - m1 * h / 6.0;
        let v = m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) + c0 * a + c1 * b;
        let d = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1;
        let dd = (m0 * a + m1 * b) / h;
        (v, d, dd)
    }
}

fn check_knots(t: &[f64], y: &[f64], min: usize) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::Dimension {
            context: "spline knots",
            expected: t.len(),
            actual: y.len(),
        });
    }
    if t.len() < min {
        return Err(Error::Trajectory(format!(
            "need at least {min} samples, got {}",
            t.len()
        )));
    }
    if let Some(w) = t.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Trajectory(format!(
            "timestamps not strictly increasing at sample {} ({} -> {})",
            w + 1,
            t[w],
            t[w + 1]
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Trajectory("non-finite sample value".into()));
    }
    Ok(())
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let w = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / w;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / w;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve (corner entries `sub[0]` and `sup[n-1]`) by the
/// Sherman–Morrison correction.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}
