use serde::{Deserialize, Serialize};

fn g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn g1(t: f64) -> f64 {
    if t > 0.0 {
        g(t) / (t * t)
    } else {
        0.0
    }
}

fn g2(t: f64) -> f64 {
    if t > 0.0 {
        g(t) * (1.0 / t.powi(4) - 2.0 / t.powi(3))
    } else {
        0.0
    }
}

/// Smooth step `s(t) = g(t)/(g(t)+g(1−t))`, `g(t) = e^{−1/t}`, with its first
/// two derivatives. `s = 0` for `t ≤ 0`, `s = 1` for `t ≥ 1`.
fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = (g(t), g1(t), g2(t));
    let (b, b1, b2) = (g(1.0 - t), -g1(1.0 - t), g2(1.0 - t));
    let d = a + b;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    let s1 = num / (d * d);
    let s2 = num1 / (d * d) - 2.0 * num * (a1 + b1) / (d * d * d);
    (a / d, s1, s2)
}

/// Radial cutoff `φ(r) = 1 − s(r − 1)`: 1 on `[0, 1]`, 0 from 2 on, smooth
/// and nonincreasing in between. Scaled copies are `φ_q(X) = φ(‖X‖/q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub scales: Vec<f64>,
}

impl CutoffFamily {
    pub fn new(scales: Vec<f64>) -> Self {
        Self { scales }
    }

    /// `(φ(r), φ′(r), φ″(r))`.
    pub fn profile(r: f64) -> (f64, f64, f64) {
        let (s, s1, s2) = smooth_step(r - 1.0);
        (1.0 - s, -s1, -s2)
    }

    /// `φ_q` at a point.
    pub fn value(q: f64, point: &[f64]) -> f64 {
        let r = point.iter().map(|c| c * c).sum::<f64>().sqrt();
        Self::profile(r / q).0
    }

    /// Gradient and per-axis second derivatives `∂_d²φ_q` at a point.
    pub fn derivatives(q: f64, point: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r = point.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (_, d1, d2) = Self::profile(r / q);
        if d1 == 0.0 && d2 == 0.0 {
            return (vec![0.0; point.len()], vec![0.0; point.len()]);
        }
        let grad = point.iter().map(|x| d1 * x / (r * q)).collect();
        let second = point
            .iter()
            .map(|x| d2 * x * x / (r * r * q * q) + d1 / q * (1.0 / r - x * x / (r * r * r)))
            .collect();
        (grad, second)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        for r in [0.0, 0.5, 1.0] {
            assert_eq!(CutoffFamily::profile(r), (1.0, 0.0, 0.0));
        }
        for r in [2.0, 2.5, 10.0] {
            assert_eq!(CutoffFamily::profile(r), (0.0, -0.0, -0.0));
        }
    }

    #[test]
    fn monotone_between() {
        let mut prev = 1.0;
        for i in 1..200 {
            let v = CutoffFamily::profile(1.0 + i as f64 / 200.0).0;
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = 1e-5;
        for i in 1..40 {
            let r = 1.0 + i as f64 / 40.0;
            let (_, d1, d2) = CutoffFamily::profile(r);
            let fd1 = (CutoffFamily::profile(r + e).0 - CutoffFamily::profile(r - e).0) / (2.0 * e);
            let fd2 = (CutoffFamily::profile(r + e).1 - CutoffFamily::profile(r - e).1) / (2.0 * e);
            assert!((d1 - fd1).abs() < 1e-6, "r={r}");
            assert!((d2 - fd2).abs() < 1e-4, "r={r}");
        }
    }

    #[test]
    fn scaled_derivatives_shrink_with_q() {
        let peak = |q: f64| {
            (0..400)
                .map(|i| CutoffFamily::derivatives(q, &[q + q * i as f64 / 400.0, 0.0]).0[0].abs())
                .fold(0.0, f64::max)
        };
        assert!((peak(2.0) / peak(4.0) - 2.0).abs() < 0.05);
    }

    #[test]
    fn multi_axis_second_derivatives_sum_to_radial_laplacian() {
        let (q, p) = (2.0, [2.1, 1.3]);
        let e = 1e-4;
        let mut lap = 0.0;
        for d in 0..2 {
            let mut a = p;
            let mut b = p;
            a[d] += e;
            b[d] -= e;
            lap += (CutoffFamily::value(q, &a) - 2.0 * CutoffFamily::value(q, &p)
                + CutoffFamily::value(q, &b))
                / (e * e);
        }
        let second: f64 = CutoffFamily::derivatives(q, &p).1.iter().sum();
        assert!((lap - second).abs() < 1e-5);
    }
}
