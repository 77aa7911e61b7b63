//! Lattès maps: the action of `[N]` on `x`-coordinates of `y^2 = x^3 + a x + b`,
//! computed from division polynomials with `y^2` eliminated.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, parse_rational, ExactRational};
use crate::error::{Error, Result};
use crate::poly::{BinaryForm, Poly, RatPoly};

use super::morphism::P1Morphism;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassCurve {
    a: ExactRational,
    b: ExactRational,
}

impl WeierstrassCurve {
    pub fn new(a: ExactRational, b: ExactRational) -> Result<Self> {
        let c = WeierstrassCurve { a, b };
        if c.discriminant_core().is_zero() {
            return Err(Error::InvalidCurve);
        }
        Ok(c)
    }

    pub fn from_i64(a: i64, b: i64) -> Result<Self> {
        Self::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()))
    }

    pub fn a(&self) -> &ExactRational {
        &self.a
    }

    pub fn b(&self) -> &ExactRational {
        &self.b
    }

    /// `4a^3 + 27b^2`.
    pub fn discriminant_core(&self) -> ExactRational {
        let four = BigRational::from_integer(4.into());
        let tw7 = BigRational::from_integer(27.into());
        four * &self.a * &self.a * &self.a + tw7 * &self.b * &self.b
    }

    /// `x^3 + a x + b`.
    pub fn rhs(&self) -> RatPoly {
        Poly::new(vec![
            self.b.clone(),
            self.a.clone(),
            BigRational::zero(),
            BigRational::one(),
        ])
    }
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    a: String,
    b: String,
}

impl Serialize for WeierstrassCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CurveRepr {
            a: format_rational(&self.a),
            b: format_rational(&self.b),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeierstrassCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CurveRepr::deserialize(d)?;
        let a = parse_rational(&r.a).map_err(D::Error::custom)?;
        let b = parse_rational(&r.b).map_err(D::Error::custom)?;
        WeierstrassCurve::new(a, b).map_err(D::Error::custom)
    }
}

/// `poly(x) * y^y_exp`, with `y^2` standing for `x^3 + a x + b`.
#[derive(Clone, Debug)]
struct Psi {
    poly: RatPoly,
    y_exp: i32,
}

struct PsiRing<'a> {
    rhs: &'a RatPoly,
}

impl PsiRing<'_> {
    fn mul(&self, p: &Psi, q: &Psi) -> Psi {
        Psi {
            poly: &p.poly * &q.poly,
            y_exp: p.y_exp + q.y_exp,
        }
    }

    fn lift(&self, p: &Psi, target_exp: i32) -> RatPoly {
        debug_assert!(p.y_exp >= target_exp && (p.y_exp - target_exp) % 2 == 0);
        let mut poly = p.poly.clone();
        for _ in 0..(p.y_exp - target_exp) / 2 {
            poly = &poly * self.rhs;
        }
        poly
    }

    fn sub(&self, p: &Psi, q: &Psi) -> Psi {
        let e = p.y_exp.min(q.y_exp);
        Psi {
            poly: &self.lift(p, e) - &self.lift(q, e),
            y_exp: e,
        }
    }

    fn div_2y(&self, p: &Psi) -> Psi {
        let half = BigRational::new(1.into(), 2.into());
        Psi {
            poly: p.poly.scale(&half),
            y_exp: p.y_exp - 1,
        }
    }

    /// Reduces the `y` exponent to 0 or 1.
    fn reduce(&self, p: Psi) -> Psi {
        assert!(p.y_exp >= 0, "negative y exponent in division polynomial");
        let e = p.y_exp % 2;
        Psi {
            poly: self.lift(&p, e),
            y_exp: e,
        }
    }

    fn pow(&self, p: &Psi, k: u32) -> Psi {
        (1..k).fold(p.clone(), |acc, _| self.mul(&acc, p))
    }
}

/// Division polynomials `psi_0 .. psi_n` (each reduced to `poly * y^{0|1}`).
fn division_polynomials(curve: &WeierstrassCurve, n: usize) -> Vec<Psi> {
    let rhs = curve.rhs();
    let ring = PsiRing { rhs: &rhs };
    let (a, b) = (curve.a.clone(), curve.b.clone());
    let r = |k: i64| BigRational::from_integer(k.into());
    let mut psi: Vec<Psi> = vec![
        Psi { poly: Poly::zero(), y_exp: 0 },
        Psi { poly: Poly::constant(r(1)), y_exp: 0 },
        Psi { poly: Poly::constant(r(2)), y_exp: 1 },
        Psi {
            poly: Poly::new(vec![
                -(&a * &a),
                r(12) * &b,
                r(6) * &a,
                r(0),
                r(3),
            ]),
            y_exp: 0,
        },
        Psi {
            poly: Poly::new(vec![
                -(r(8) * &b * &b) - &a * &a * &a,
                -(r(4) * &a * &b),
                -(r(5) * &a * &a),
                r(20) * &b,
                r(5) * &a,
                r(0),
                r(1),
            ])
            .scale(&r(4)),
            y_exp: 1,
        },
    ];
    for k in psi.len()..=n {
        let m = k / 2;
        let next = if k % 2 == 1 {
            let lhs = ring.mul(&psi[m + 2], &ring.pow(&psi[m], 3));
            let rhs = ring.mul(&psi[m - 1], &ring.pow(&psi[m + 1], 3));
            ring.sub(&lhs, &rhs)
        } else {
            let t1 = ring.mul(&psi[m + 2], &ring.pow(&psi[m - 1], 2));
            let t2 = ring.mul(&psi[m - 2], &ring.pow(&psi[m + 1], 2));
            ring.mul(&ring.div_2y(&psi[m]), &ring.sub(&t1, &t2))
        };
        psi.push(ring.reduce(next));
    }
    psi.truncate(n + 1);
    psi
}

/// The map `f_N` on `P^1 = E / {±1}` with `x([N] P) = f_N(x(P))`, i.e.
/// `x - psi_{N-1} psi_{N+1} / psi_N^2`, homogenized to degree `N^2`.
pub fn division_poly_multiple(curve: &WeierstrassCurve, n: u64) -> Result<P1Morphism> {
    if n == 0 {
        return Err(Error::Precondition("[0] does not induce a map on P^1".into()));
    }
    if n == 1 {
        return Ok(P1Morphism::identity());
    }
    let n = n as usize;
    let rhs = curve.rhs();
    let ring = PsiRing { rhs: &rhs };
    let psi = division_polynomials(curve, n + 1);
    let den = ring.reduce(ring.mul(&psi[n], &psi[n])).poly;
    let prod = ring.reduce(ring.mul(&psi[n - 1], &psi[n + 1])).poly;
    let x = Poly::monomial(BigRational::one(), 1);
    let num = &(&x * &den) - &prod;
    let d = n * n;
    // Coprime for nonsingular curves, so the degrees are exactly N^2 and N^2 - 1.
    if num.degree() != Some(d) || den.degree() != Some(d - 1) {
        return Err(Error::NotAMorphism);
    }
    let lcm = num
        .coeffs()
        .iter()
        .chain(den.coeffs())
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let to_int = |p: &RatPoly| -> Vec<BigInt> {
        p.coeffs().iter().map(|c| c.numer() * (&lcm / c.denom())).collect()
    };
    P1Morphism::new_unchecked(BinaryForm::new(d, to_int(&num)), BinaryForm::new(d, to_int(&den)))
}

/// A curve with a cache of the Lattès maps built so far.
pub struct LattesMaps {
    curve: WeierstrassCurve,
    cache: Mutex<BTreeMap<u64, Arc<P1Morphism>>>,
}

impl LattesMaps {
    pub fn new(curve: WeierstrassCurve) -> Self {
        LattesMaps {
            curve,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn curve(&self) -> &WeierstrassCurve {
        &self.curve
    }

    pub fn map(&self, n: u64) -> Result<Arc<P1Morphism>> {
        if let Some(m) = self.cache.lock().expect("lattes cache poisoned").get(&n) {
            return Ok(m.clone());
        }
        let m = Arc::new(division_poly_multiple(&self.curve, n)?);
        self.cache
            .lock()
            .expect("lattes cache poisoned")
            .entry(n)
            .or_insert_with(|| m.clone());
        Ok(m)
    }
}

impl Clone for LattesMaps {
    fn clone(&self) -> Self {
        LattesMaps {
            curve: self.curve.clone(),
            cache: Mutex::new(self.cache.lock().expect("lattes cache poisoned").clone()),
        }
    }
}

impl std::fmt::Debug for LattesMaps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LattesMaps").field("curve", &self.curve).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ProjectivePoint;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn singular_curve_is_rejected() {
        // 4(-3)^3 + 27(2)^2 = 0
        assert_eq!(WeierstrassCurve::from_i64(-3, 2), Err(Error::InvalidCurve));
    }

    #[test]
    fn doubling_matches_closed_form() {
        let e = WeierstrassCurve::from_i64(-1, 0).unwrap();
        let f2 = division_poly_multiple(&e, 2).unwrap();
        let p = ProjectivePoint::from_i64s(&[2, 1]).unwrap();
        assert_eq!(f2.eval(&p).unwrap(), ProjectivePoint::from_i64s(&[25, 24]).unwrap());
        // generic curve, compare against (x^4 - 2a x^2 - 8b x + a^2) / (4(x^3 + a x + b))
        let e = WeierstrassCurve::new(q(2, 3), q(-5, 7)).unwrap();
        let f2 = division_poly_multiple(&e, 2).unwrap();
        let x = q(3, 5);
        let (a, b) = (e.a().clone(), e.b().clone());
        let num = &x * &x * &x * &x - q(2, 1) * &a * &x * &x - q(8, 1) * &b * &x + &a * &a;
        let den = q(4, 1) * (&x * &x * &x + &a * &x + &b);
        let expect = crate::arith::normalize(&[num / den, q(1, 1)]).unwrap();
        let got = f2.eval(&ProjectivePoint::from_i64s(&[3, 5]).unwrap()).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn two_torsion_maps_to_infinity() {
        let e = WeierstrassCurve::from_i64(-1, 0).unwrap();
        let f2 = division_poly_multiple(&e, 2).unwrap();
        for x in [-1, 0, 1] {
            let p = ProjectivePoint::from_i64s(&[x, 1]).unwrap();
            assert_eq!(f2.eval(&p).unwrap(), ProjectivePoint::from_i64s(&[1, 0]).unwrap());
        }
        let inf = ProjectivePoint::from_i64s(&[1, 0]).unwrap();
        assert_eq!(f2.eval(&inf).unwrap(), inf);
    }

    #[test]
    fn degrees_are_n_squared() {
        let e = WeierstrassCurve::from_i64(-1, 0).unwrap();
        for n in 2..=5u64 {
            let m = division_poly_multiple(&e, n).unwrap();
            assert_eq!(m.degree() as u64, n * n);
            assert_eq!(m.algebraic_degree() as u64, n * n);
        }
        let f2 = division_poly_multiple(&e, 2).unwrap();
        assert!(!f2.resultant().is_zero());
        assert!(!division_poly_multiple(&e, 3).unwrap().resultant().is_zero());
    }

    #[test]
    fn composition_law_at_three() {
        let e = WeierstrassCurve::from_i64(-1, 0).unwrap();
        let lm = LattesMaps::new(e);
        let p = ProjectivePoint::from_i64s(&[3, 1]).unwrap();
        let f2 = lm.map(2).unwrap();
        let f3 = lm.map(3).unwrap();
        let f6 = lm.map(6).unwrap();
        let a = f2.eval(&f3.eval(&p).unwrap()).unwrap();
        let b = f3.eval(&f2.eval(&p).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, f6.eval(&p).unwrap());
    }
}
