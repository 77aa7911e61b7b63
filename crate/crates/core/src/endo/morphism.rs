use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::ProjectivePoint;
use crate::error::{Error, Result};
use crate::poly::{reduced_degree, resultant, BinaryForm};

/// An endomorphism `(X : W) -> (F(X, W) : G(X, W))` of the projective line
/// given by integer binary forms of a common degree without common zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct P1Morphism {
    f: BinaryForm,
    g: BinaryForm,
}

impl P1Morphism {
    /// Checks the resultant and divides out the common content.
    pub fn new(f: BinaryForm, g: BinaryForm) -> Result<Self> {
        let m = Self::new_unchecked(f, g)?;
        if m.resultant().is_zero() {
            return Err(Error::NotAMorphism);
        }
        Ok(m)
    }

    /// Like [`P1Morphism::new`] without the resultant computation, for maps whose
    /// resultant is known not to vanish (Lattès maps of nonsingular curves).
    pub(crate) fn new_unchecked(f: BinaryForm, g: BinaryForm) -> Result<Self> {
        if f.degree() != g.degree() {
            return Err(Error::InvalidSystem(format!(
                "forms of different degrees {} and {}",
                f.degree(),
                g.degree()
            )));
        }
        if f.degree() == 0 {
            return Err(Error::InvalidSystem("constant map".into()));
        }
        let content = f
            .coeffs()
            .iter()
            .chain(g.coeffs())
            .fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if content.is_zero() {
            return Err(Error::NotAMorphism);
        }
        let (f, g) = if content.is_one() {
            (f, g)
        } else {
            (f.scale_down(&content), g.scale_down(&content))
        };
        Ok(P1Morphism { f, g })
    }

    pub fn identity() -> Self {
        P1Morphism {
            f: BinaryForm::pure_power(1, true),
            g: BinaryForm::pure_power(1, false),
        }
    }

    /// `(X^d : W^d)`.
    pub fn monomial(d: usize) -> Self {
        P1Morphism {
            f: BinaryForm::pure_power(d, true),
            g: BinaryForm::pure_power(d, false),
        }
    }

    pub fn f(&self) -> &BinaryForm {
        &self.f
    }

    pub fn g(&self) -> &BinaryForm {
        &self.g
    }

    pub fn degree(&self) -> usize {
        self.f.degree()
    }

    pub fn resultant(&self) -> BigInt {
        resultant(&self.f, &self.g)
    }

    /// Degree of the map after cancelling any common factor of the forms.
    pub fn algebraic_degree(&self) -> usize {
        reduced_degree(&self.f, &self.g)
    }

    /// Unreduced image `(F(x, w), G(x, w))`.
    pub fn eval_raw(&self, x: &BigInt, w: &BigInt) -> (BigInt, BigInt) {
        (self.f.eval(x, w), self.g.eval(x, w))
    }

    pub fn eval(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        let [x, w] = p1_coords(p)?;
        let (u, v) = self.eval_raw(x, w);
        ProjectivePoint::from_integers(vec![u, v])
    }

    /// `self ∘ inner`, as forms of degree `deg(self) * deg(inner)`.
    pub fn compose(&self, inner: &P1Morphism) -> Result<P1Morphism> {
        let subst = |form: &BinaryForm| {
            let d = form.degree();
            let e = inner.degree();
            let mut fpows = vec![BinaryForm::new(0, vec![BigInt::one()])];
            let mut gpows = vec![BinaryForm::new(0, vec![BigInt::one()])];
            for k in 1..=d {
                fpows.push(fpows[k - 1].mul(&inner.f));
                gpows.push(gpows[k - 1].mul(&inner.g));
            }
            let mut acc = BinaryForm::new(d * e, vec![]);
            for (i, c) in form.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let term = fpows[i].mul(&gpows[d - i]);
                let scaled = BinaryForm::new(d * e, term.coeffs().iter().map(|t| t * c).collect());
                acc = acc.add(&scaled);
            }
            acc
        };
        P1Morphism::new_unchecked(subst(&self.f), subst(&self.g))
    }
}

pub(crate) fn p1_coords(p: &ProjectivePoint) -> Result<&[BigInt; 2]> {
    p.coords().try_into().map_err(|_| Error::Dimension {
        expected: 1,
        found: p.dimension(),
    })
}

#[derive(Serialize, Deserialize)]
struct FormsRepr {
    f: Vec<String>,
    g: Vec<String>,
}

impl Serialize for P1Morphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FormsRepr {
            f: self.f.coeffs().iter().map(|c| c.to_string()).collect(),
            g: self.g.coeffs().iter().map(|c| c.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for P1Morphism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = FormsRepr::deserialize(d)?;
        let parse = |v: &[String]| {
            v.iter()
                .map(|s| s.trim().parse::<BigInt>().map_err(D::Error::custom))
                .collect::<std::result::Result<Vec<_>, _>>()
        };
        let (f, g) = (parse(&repr.f)?, parse(&repr.g)?);
        if f.len() != g.len() || f.len() < 2 {
            return Err(D::Error::custom("forms need equal length >= 2 (coefficients of X^i W^(d-i))"));
        }
        let d = f.len() - 1;
        P1Morphism::new(BinaryForm::new(d, f), BinaryForm::new(d, g)).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(d: usize, c: &[i64]) -> BinaryForm {
        BinaryForm::new(d, c.iter().map(|&x| BigInt::from(x)).collect())
    }

    #[test]
    fn rejects_common_zero() {
        let f = form(2, &[-1, 0, 1]);
        let g = form(2, &[-1, 1, 0]);
        assert_eq!(P1Morphism::new(f, g), Err(Error::NotAMorphism));
    }

    #[test]
    fn content_is_removed() {
        let m = P1Morphism::new(form(2, &[-4, 0, 2]), form(2, &[2, 0, 0])).unwrap();
        assert_eq!(m.f(), &form(2, &[-2, 0, 1]));
    }

    #[test]
    fn compose_matches_pointwise() {
        let t2 = P1Morphism::new(form(2, &[-2, 0, 1]), form(2, &[1, 0, 0])).unwrap();
        let t4 = t2.compose(&t2).unwrap();
        assert_eq!(t4.f(), &form(4, &[2, 0, -4, 0, 1]));
        let p = ProjectivePoint::from_i64s(&[5, 2]).unwrap();
        assert_eq!(t4.eval(&p).unwrap(), t2.eval(&t2.eval(&p).unwrap()).unwrap());
    }

    #[test]
    fn json_forms() {
        let m: P1Morphism = serde_json::from_str(r#"{"f":["-2","0","1"],"g":["1","0","0"]}"#).unwrap();
        assert_eq!(m.degree(), 2);
        assert!(serde_json::from_str::<P1Morphism>(r#"{"f":["0","1"],"g":["0","2"]}"#).is_err());
    }
}
