//! Truncated Taylor series in one variable.
//!
//! A jet of order `n` stores the coefficients `a_0..=a_n` of
//! `f(s0 + h) = sum a_k h^k + O(h^(n+1))`. Arithmetic truncates to the
//! lower order of the operands; differentiation drops one order.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Jet(c)
    }

    /// The independent variable at `s0`.
    pub fn variable(s0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = s0;
        if order > 0 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// First derivative at the expansion point.
    pub fn slope(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(f64::NAN)
    }

    pub fn derivative(&self) -> Jet {
        if self.0.len() == 1 {
            return Jet(vec![0.0]);
        }
        Jet(self.0.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect())
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet(self.0.iter().map(|a| k * a).collect())
    }

    pub fn add_const(&self, k: f64) -> Jet {
        let mut c = self.0.clone();
        c[0] += k;
        Jet(c)
    }

    pub fn div(&self, rhs: &Jet) -> Jet {
        let n = self.0.len().min(rhs.0.len());
        let (a, b) = (&self.0, &rhs.0);
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut acc = a[k];
            for j in 1..=k {
                acc -= b[j] * q[k - j];
            }
            q[k] = acc / b[0];
        }
        Jet(q)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let n = self.0.len().min(rhs.0.len());
        Jet((0..n).map(|k| self.0[k] + rhs.0[k]).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let n = self.0.len().min(rhs.0.len());
        Jet((0..n).map(|k| self.0[k] - rhs.0[k]).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.0.len().min(rhs.0.len());
        let mut c = vec![0.0; n];
        for (i, ci) in c.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.0[j] * rhs.0[i - j];
            }
            *ci = acc;
        }
        Jet(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_series() {
        // 1/(1 + s) at s = 1: coefficients (-1)^k / 2^(k+1)
        let s = Jet::variable(1.0, 6);
        let one = Jet::constant(1.0, 6);
        let r = one.div(&s.add_const(1.0));
        for (k, a) in r.0.iter().enumerate() {
            let want = (-1f64).powi(k as i32) / 2f64.powi(k as i32 + 1);
            assert!((a - want).abs() < 1e-15);
        }
    }

    #[test]
    fn product_and_derivative() {
        let s = Jet::variable(2.0, 4);
        let cube = &(&s * &s) * &s;
        assert_eq!(cube.0, vec![8.0, 12.0, 6.0, 1.0, 0.0]);
        assert_eq!(cube.derivative().0, vec![12.0, 12.0, 3.0, 0.0]);
        assert_eq!(cube.slope(), 12.0);
    }
}
