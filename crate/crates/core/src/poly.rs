//! Dense univariate polynomials, binary forms and the Sylvester-matrix
//! machinery (resultants and Bezout cofactors) used by the morphism code.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense polynomial, coefficients ordered from the constant term up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

pub type IntPoly = Poly<BigInt>;
pub type RatPoly = Poly<BigRational>;

impl<T> Poly<T>
where
    T: Clone + Zero + One + PartialEq,
{
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c * z^k`.
    pub fn monomial(c: T, k: usize) -> Self {
        let mut v = vec![T::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn scale(&self, c: &T) -> Self
    where
        T: Mul<Output = T>,
    {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn eval(&self, z: &T) -> T
    where
        T: Mul<Output = T> + Add<Output = T>,
    {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * z.clone() + c.clone())
    }

    /// `self(other(z))` by Horner's scheme.
    pub fn compose(&self, other: &Self) -> Self
    where
        T: Mul<Output = T> + Add<Output = T> + Sub<Output = T> + Neg<Output = T>,
    {
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * other) + &Self::constant(c.clone())
        })
    }
}

impl<T> Add for &Poly<T>
where
    T: Clone + Zero + One + PartialEq + Add<Output = T>,
{
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T> Sub for &Poly<T>
where
    T: Clone + Zero + One + PartialEq + Sub<Output = T>,
{
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T> Mul for &Poly<T>
where
    T: Clone + Zero + One + PartialEq + Add<Output = T> + Mul<Output = T>,
{
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }
}

impl<T> Neg for &Poly<T>
where
    T: Clone + Zero + One + PartialEq + Neg<Output = T>,
{
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl RatPoly {
    pub fn from_int(p: &IntPoly) -> Self {
        Poly::new(p.coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    /// Euclidean division over the rationals.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let lead = divisor.leading();
        let mut rem = self.clone();
        let mut quot = vec![BigRational::zero(); self.coeffs.len().saturating_sub(dd)];
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let c = rem.leading() / &lead;
            quot[rd - dd] = c.clone();
            rem = &rem - &(&Poly::monomial(c, rd - dd) * divisor);
        }
        (Poly::new(quot), rem)
    }

    /// Monic gcd over the rationals.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.leading();
        Poly::new(a.coeffs.iter().map(|c| c / &lead).collect())
    }

    /// Clears denominators: returns `(m, p)` with `m * self = p`, `p` integral.
    pub fn clear_denominators(&self) -> (BigInt, IntPoly) {
        let m = self.coeffs.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let p = Poly::new(
            self.coeffs
                .iter()
                .map(|c| c.numer() * (&m / c.denom()))
                .collect(),
        );
        (m, p)
    }
}

impl IntPoly {
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }
}

/// A binary form of degree `d` in `(X, W)`; `coeffs[i]` multiplies `X^i W^(d-i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryForm {
    degree: usize,
    coeffs: Vec<BigInt>,
}

impl BinaryForm {
    pub fn new(degree: usize, mut coeffs: Vec<BigInt>) -> Self {
        assert!(coeffs.len() <= degree + 1, "too many coefficients for degree {degree}");
        coeffs.resize(degree + 1, BigInt::zero());
        BinaryForm { degree, coeffs }
    }

    /// Homogenizes `p(z)` to degree `degree >= deg p`.
    pub fn homogenize(p: &IntPoly, degree: usize) -> Self {
        assert!(p.degree().map_or(true, |d| d <= degree));
        Self::new(degree, p.coeffs().to_vec())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Sum of absolute values of the coefficients.
    pub fn l1_norm(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn eval(&self, x: &BigInt, w: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        let mut wpow = BigInt::one();
        // Horner in X with W-powers accumulated from the top coefficient down.
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c * &wpow;
            wpow *= w;
        }
        acc
    }

    /// Evaluation modulo `m` (result in `[0, m)`); operands may be unreduced.
    pub fn eval_mod(&self, x: &BigInt, w: &BigInt, m: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        let mut wpow = BigInt::one();
        for c in self.coeffs.iter().rev() {
            acc = (acc * x + c * &wpow).mod_floor(m);
            wpow = (wpow * w).mod_floor(m);
        }
        acc
    }

    pub fn scale_down(&self, g: &BigInt) -> Self {
        BinaryForm {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c / g).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![BigInt::zero(); self.degree + other.degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        BinaryForm::new(self.degree + other.degree, out)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        BinaryForm::new(
            self.degree,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        )
    }

    /// `X^k` or `W^k` as a form.
    pub fn pure_power(k: usize, in_x: bool) -> Self {
        let mut v = vec![BigInt::zero(); k + 1];
        v[if in_x { k } else { 0 }] = BigInt::one();
        BinaryForm::new(k, v)
    }

    /// Largest `i` with a nonzero coefficient (the degree in `X`).
    pub fn x_degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

}

/// Sylvester matrix of two forms of common degree `d`, acting on the
/// coefficient vector `(a_0..a_{d-1}, b_0..b_{d-1})` of `A F + B G`.
fn sylvester(f: &BinaryForm, g: &BinaryForm) -> Vec<Vec<BigInt>> {
    let d = f.degree();
    assert_eq!(d, g.degree());
    let n = 2 * d;
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for j in 0..d {
        for (k, c) in f.coeffs().iter().enumerate() {
            m[k + j][j] = c.clone();
        }
        for (k, c) in g.coeffs().iter().enumerate() {
            m[k + j][d + j] = c.clone();
        }
    }
    m
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Resultant of two binary forms of common degree (up to sign).
pub fn resultant(f: &BinaryForm, g: &BinaryForm) -> BigInt {
    if f.degree() == 0 {
        return BigInt::one();
    }
    bareiss_determinant(sylvester(f, g))
}

/// Integral Bezout cofactors: forms `A, B` of degree `d - 1` and a positive
/// integer `r` with `A F + B G = r * T` for the given target `T` of degree `2d - 1`.
pub struct Cofactors {
    pub a: BinaryForm,
    pub b: BinaryForm,
    pub scale: BigInt,
}

/// Solves `A F + B G = target` over the rationals and clears denominators.
/// Returns `None` when the Sylvester matrix is singular.
pub fn bezout_cofactors(f: &BinaryForm, g: &BinaryForm, target: &BinaryForm) -> Option<Cofactors> {
    let d = f.degree();
    let n = 2 * d;
    assert_eq!(target.degree() + 1, n);
    let mut m: Vec<Vec<BigRational>> = sylvester(f, g)
        .into_iter()
        .zip(target.coeffs())
        .map(|(row, t)| {
            row.into_iter()
                .map(BigRational::from_integer)
                .chain(std::iter::once(BigRational::from_integer(t.clone())))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=n {
                    let v = &m[col][c] * &factor;
                    m[r][c] = &m[r][c] - v;
                }
            }
        }
    }
    let sol: Vec<BigRational> = m.into_iter().map(|row| row[n].clone()).collect();
    let scale = sol.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let ints: Vec<BigInt> = sol.iter().map(|c| c.numer() * (&scale / c.denom())).collect();
    Some(Cofactors {
        a: BinaryForm::new(d - 1, ints[..d].to_vec()),
        b: BinaryForm::new(d - 1, ints[d..].to_vec()),
        scale,
    })
}

/// Exact degree of the rational map `(F : G)` after removing the common factor,
/// i.e. `d - deg gcd(F, G)` for binary forms of degree `d`.
pub fn reduced_degree(f: &BinaryForm, g: &BinaryForm) -> usize {
    let d = f.degree();
    // W^k divides a form iff its top k coefficients vanish.
    let w_common = [f, g]
        .iter()
        .map(|h| d - h.x_degree().unwrap_or(0))
        .min()
        .unwrap_or(0);
    let fa = RatPoly::from_int(&Poly::new(f.coeffs().to_vec()));
    let ga = RatPoly::from_int(&Poly::new(g.coeffs().to_vec()));
    let affine = fa.gcd(&ga).degree().unwrap_or(0);
    d - w_common - affine
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ip(c: &[i64]) -> IntPoly {
        Poly::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    fn form(d: usize, c: &[i64]) -> BinaryForm {
        BinaryForm::new(d, c.iter().map(|&x| BigInt::from(x)).collect())
    }

    #[test]
    fn arithmetic_and_composition() {
        let t2 = ip(&[-2, 0, 1]);
        let t4 = t2.compose(&t2);
        assert_eq!(t4, ip(&[2, 0, -4, 0, 1]));
        assert_eq!(t2.eval(&BigInt::from(3)), BigInt::from(7));
        assert_eq!((&t2 - &t2).degree(), None);
    }

    #[test]
    fn form_evaluation() {
        // X^2 - 2 W^2 at (3 : 1) and (1 : 0)
        let f = form(2, &[-2, 0, 1]);
        assert_eq!(f.eval(&3.into(), &1.into()), BigInt::from(7));
        assert_eq!(f.eval(&1.into(), &0.into()), BigInt::from(1));
        assert_eq!(f.eval(&3.into(), &2.into()), BigInt::from(1));
        assert_eq!(f.eval_mod(&3.into(), &2.into(), &BigInt::from(5)), BigInt::from(1));
    }

    #[test]
    fn resultant_detects_common_roots() {
        // (X - W)(X + W) and (X - W) W share the root (1:1)
        let f = form(2, &[-1, 0, 1]);
        let g = form(2, &[-1, 1, 0]);
        assert!(resultant(&f, &g).is_zero());
        let t2 = form(2, &[-2, 0, 1]);
        let w2 = form(2, &[1, 0, 0]);
        assert_eq!(resultant(&t2, &w2).abs(), BigInt::one());
    }

    #[test]
    fn bareiss_matches_small_determinants() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3), BigInt::from(2)],
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)],
        ];
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(bareiss_determinant(m), BigInt::zero());
        let m = vec![
            vec![BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(0)],
        ];
        assert_eq!(bareiss_determinant(m), BigInt::from(-1));
    }

    #[test]
    fn cofactors_satisfy_identity() {
        let f = form(2, &[-2, 0, 1]);
        let g = form(2, &[1, 0, 0]);
        for in_x in [true, false] {
            let target = BinaryForm::pure_power(3, in_x);
            let c = bezout_cofactors(&f, &g, &target).unwrap();
            let lhs = c.a.mul(&f).add(&c.b.mul(&g));
            let rhs = BinaryForm::new(3, target.coeffs().iter().map(|t| t * &c.scale).collect());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn reduced_degree_strips_common_factors() {
        // (X^2 - W^2 : X W - W^2) = (X + W : W) after cancelling X - W
        let f = form(2, &[-1, 0, 1]);
        let g = form(2, &[-1, 1, 0]);
        assert_eq!(reduced_degree(&f, &g), 1);
        assert_eq!(reduced_degree(&form(2, &[-2, 0, 1]), &form(2, &[1, 0, 0])), 2);
        // (X W : W^2) = (X : W)
        assert_eq!(reduced_degree(&form(2, &[0, 1, 0]), &form(2, &[1, 0, 0])), 1);
    }

    #[test]
    fn rational_gcd() {
        let a = RatPoly::from_int(&ip(&[-1, 0, 1]));
        let b = RatPoly::from_int(&ip(&[-1, 1]));
        assert_eq!(a.gcd(&b), b);
    }
}
