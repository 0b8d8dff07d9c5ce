use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Power series truncated at order D (coefficients c_0..=c_D).
#[derive(Debug, Clone, PartialEq)]
pub struct Series<S> {
    c: Vec<S>,
}

impl<S: Scalar> Series<S> {
    pub fn zero(order: usize) -> Self {
        Series { c: vec![S::zero(); order + 1] }
    }

    pub fn from_coeffs(mut c: Vec<S>, order: usize) -> Self {
        c.resize(order + 1, S::zero());
        Series { c }
    }

    pub fn constant(x: S, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = x;
        s
    }

    /// The series z.
    pub fn var(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.c[1] = S::one();
        }
        s
    }

    /// Polynomial with the given low-order coefficients.
    pub fn poly(coeffs: &[i64], order: usize) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&x| S::from_i64(x)).collect(), order)
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.c
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.c
    }

    pub fn coeff(&self, k: usize) -> S {
        self.c.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.c.iter().take(order + 1).cloned().collect(), order)
    }

    pub fn scale(&self, x: &S) -> Self {
        Series { c: self.c.iter().map(|a| a.clone() * x.clone()).collect() }
    }

    pub fn mul_trunc(&self, other: &Self) -> Self {
        let d = self.order().min(other.order());
        let mut c = vec![S::zero(); d + 1];
        for (i, a) in self.c.iter().enumerate().take(d + 1) {
            if *a == S::zero() {
                continue;
            }
            for (j, b) in other.c.iter().enumerate().take(d + 1 - i) {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Series { c }
    }

    /// Multiplicative inverse; needs an invertible constant term.
    pub fn inverse(&self) -> Result<Self> {
        let a0 = self.c[0].clone();
        if a0 == S::zero() {
            return Err(Error::Domain("series with zero constant term is not invertible".into()));
        }
        let d = self.order();
        let mut r = vec![S::zero(); d + 1];
        r[0] = S::one() / a0.clone();
        for n in 1..=d {
            let mut acc = S::zero();
            for k in 1..=n {
                acc = acc + self.c[k].clone() * r[n - k].clone();
            }
            r[n] = -(acc / a0.clone());
        }
        Ok(Series { c: r })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul_trunc(&other.inverse()?))
    }

    /// Square root with c_0 a square in S, positive branch.
    pub fn sqrt(&self) -> Result<Self> {
        let r0 = self.c[0]
            .sqrt_checked()
            .filter(|r| *r != S::zero())
            .ok_or_else(|| Error::Domain("constant term has no nonzero square root".into()))?;
        let d = self.order();
        let two_r0 = r0.clone() + r0.clone();
        let mut r = vec![S::zero(); d + 1];
        r[0] = r0;
        for n in 1..=d {
            let mut acc = self.c[n].clone();
            for k in 1..n {
                acc = acc - r[k].clone() * r[n - k].clone();
            }
            r[n] = acc / two_r0.clone();
        }
        Ok(Series { c: r })
    }

    /// Divides by z^k, failing unless the low coefficients vanish. Order drops by k.
    pub fn shift_down(&self, k: usize) -> Result<Self> {
        if self.c.iter().take(k).any(|x| *x != S::zero()) {
            return Err(Error::Internal(format!("series not divisible by z^{k}")));
        }
        Ok(Series { c: self.c[k..].to_vec() })
    }

    /// self(inner(z)) truncated at the common order. Polynomial substitution of the
    /// truncated outer series (Paterson–Stockmeyer); `inner` may have a nonzero constant term.
    pub fn compose(&self, inner: &Self) -> Self {
        let d = self.order().min(inner.order());
        let inner = inner.truncate(d);
        let n = self.c.len();
        let m = ((n as f64).sqrt().ceil() as usize).max(1);
        let mut pows = Vec::with_capacity(m + 1);
        pows.push(Series::constant(S::one(), d));
        for i in 1..=m {
            let next = pows[i - 1].mul_trunc(&inner);
            pows.push(next);
        }
        let blocks = n.div_ceil(m);
        let mut acc = Series::zero(d);
        for j in (0..blocks).rev() {
            acc = acc.mul_trunc(&pows[m]);
            for i in 0..m {
                let k = j * m + i;
                if k >= n || self.c[k] == S::zero() {
                    continue;
                }
                for (t, p) in pows[i].c.iter().enumerate() {
                    acc.c[t] = acc.c[t].clone() + self.c[k].clone() * p.clone();
                }
            }
        }
        acc
    }

    /// Formal derivative; the top coefficient becomes 0.
    pub fn derivative(&self) -> Self {
        let d = self.order();
        let mut c = vec![S::zero(); d + 1];
        for k in 1..=d {
            c[k - 1] = self.c[k].clone() * S::from_i64(k as i64);
        }
        Series { c }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, a| acc * x + a.to_f64())
    }

    pub fn to_f64(&self) -> Series<f64> {
        Series { c: self.c.iter().map(|a| a.to_f64()).collect() }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Series<T> {
        Series { c: self.c.iter().map(f).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.c
            .iter()
            .zip(&other.c)
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }
}

impl<S: Scalar> Add for &Series<S> {
    type Output = Series<S>;
    fn add(self, o: &Series<S>) -> Series<S> {
        let d = self.order().min(o.order());
        Series { c: (0..=d).map(|i| self.c[i].clone() + o.c[i].clone()).collect() }
    }
}

impl<S: Scalar> Sub for &Series<S> {
    type Output = Series<S>;
    fn sub(self, o: &Series<S>) -> Series<S> {
        let d = self.order().min(o.order());
        Series { c: (0..=d).map(|i| self.c[i].clone() - o.c[i].clone()).collect() }
    }
}

impl<S: Scalar> Mul for &Series<S> {
    type Output = Series<S>;
    fn mul(self, o: &Series<S>) -> Series<S> {
        self.mul_trunc(o)
    }
}

impl<S: Scalar> Neg for &Series<S> {
    type Output = Series<S>;
    fn neg(self) -> Series<S> {
        Series { c: self.c.iter().map(|a| -a.clone()).collect() }
    }
}

/// Bivariate series c[i][j] for z-degree i ≤ Dz, u-degree j ≤ Du.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries<S> {
    dz: usize,
    du: usize,
    c: Vec<S>,
}

impl<S: Scalar> BivariateSeries<S> {
    pub fn zero(dz: usize, du: usize) -> Self {
        BivariateSeries { dz, du, c: vec![S::zero(); (dz + 1) * (du + 1)] }
    }

    pub fn constant(x: S, dz: usize, du: usize) -> Self {
        let mut s = Self::zero(dz, du);
        s.c[0] = x;
        s
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dz, self.du)
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        if i > self.dz || j > self.du {
            return S::zero();
        }
        self.c[i * (self.du + 1) + j].clone()
    }

    pub fn set(&mut self, i: usize, j: usize, x: S) {
        let du = self.du;
        self.c[i * (du + 1) + j] = x;
    }

    fn add_at(&mut self, i: usize, j: usize, x: S) {
        let du = self.du;
        let cell = &mut self.c[i * (du + 1) + j];
        *cell = cell.clone() + x;
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for i in 0..=self.dz {
            for j in 0..=self.du {
                r.add_at(i, j, o.get(i, j));
            }
        }
        r
    }

    pub fn scale(&self, x: &S) -> Self {
        BivariateSeries { dz: self.dz, du: self.du, c: self.c.iter().map(|a| a.clone() * x.clone()).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero(self.dz, self.du);
        for i in 0..=self.dz {
            for j in 0..=self.du {
                let a = self.get(i, j);
                if a == S::zero() {
                    continue;
                }
                for k in 0..=self.dz - i {
                    for l in 0..=self.du - j {
                        let b = o.get(k, l);
                        if b != S::zero() {
                            r.add_at(i + k, j + l, a.clone() * b);
                        }
                    }
                }
            }
        }
        r
    }

    /// Multiplies by u^k (dropping what falls past Du).
    pub fn shift_u(&self, k: usize) -> Self {
        let mut r = Self::zero(self.dz, self.du);
        for i in 0..=self.dz {
            for j in 0..=self.du.saturating_sub(k) {
                if j + k <= self.du {
                    r.set(i, j + k, self.get(i, j));
                }
            }
        }
        r
    }

    /// Multiplies by z^k.
    pub fn shift_z(&self, k: usize) -> Self {
        let mut r = Self::zero(self.dz, self.du);
        for i in 0..=self.dz.saturating_sub(k) {
            if i + k <= self.dz {
                for j in 0..=self.du {
                    r.set(i + k, j, self.get(i, j));
                }
            }
        }
        r
    }

    /// self(inner(z,u), u). Finite whenever the z-degree of each u^j coefficient of `self`
    /// is at most j, which holds for edge-tracking generating functions.
    pub fn compose_z(&self, inner: &Self) -> Self {
        let mut acc = Self::zero(self.dz, self.du);
        let mut pow = Self::constant(S::one(), self.dz, self.du);
        for i in 0..=self.dz {
            for j in 0..=self.du {
                let a = self.get(i, j);
                if a != S::zero() {
                    acc = acc.add(&pow.shift_u(j).scale(&a));
                }
            }
            pow = pow.mul(inner);
        }
        acc
    }

    /// Coefficients of u^j as a z-series.
    pub fn u_slice(&self, j: usize) -> Series<S> {
        Series::from_coeffs((0..=self.dz).map(|i| self.get(i, j)).collect(), self.dz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, Rational};

    type R = Series<Rational>;

    #[test]
    fn inverse_and_sqrt() {
        let one_minus_z = R::poly(&[1, -1], 6);
        let inv = one_minus_z.inverse().unwrap();
        assert!(inv.coeffs().iter().all(|c| *c == rat(1, 1)));
        let sq = R::poly(&[4, 4, 1], 6).sqrt().unwrap();
        assert_eq!(sq, R::poly(&[2, 1], 6));
        assert!(R::poly(&[2, 1], 4).sqrt().is_err());
    }

    #[test]
    fn compose_matches_horner() {
        let a = R::poly(&[1, 2, 0, 3, 1, 1, 2], 6);
        let b = R::poly(&[1, 1, 1], 6);
        let mut horner = R::zero(6);
        for c in a.coeffs().iter().rev() {
            horner = &horner.mul_trunc(&b) + &R::constant(c.clone(), 6);
        }
        assert_eq!(a.compose(&b), horner);
    }

    #[test]
    fn float_series_agree() {
        let a = Series::<f64>::poly(&[3, -1], 10);
        let s = a.sqrt().unwrap();
        let back = s.mul_trunc(&s);
        assert!(back.max_abs_diff(&a) < 1e-14);
        let f = Series::<f32>::poly(&[1, 1], 5).inverse().unwrap();
        assert!((f.coeff(5) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn bivariate_basics() {
        let mut b = BivariateSeries::<Rational>::zero(2, 2);
        b.set(0, 0, rat(1, 2));
        b.set(1, 1, rat(1, 2));
        let sq = b.mul(&b);
        assert_eq!(sq.get(1, 1), rat(1, 2));
        assert_eq!(sq.get(2, 2), rat(1, 4));
        let c = b.compose_z(&b);
        // 1/2 + (1/2) u (1/2 + (1/2) z u)
        assert_eq!(c.get(0, 1), rat(1, 4));
        assert_eq!(c.get(1, 2), rat(1, 4));
    }
}
