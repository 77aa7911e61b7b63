//! Exact rationals, primitive projective points and multi-indices.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Elements of the base field. `BigRational` keeps `gcd(num, den) = 1` and `den >= 1`.
pub type ExactRational = BigRational;

/// Parses `"p"` or `"p/q"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))
    };
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(s)?)),
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
    }
}

pub fn format_rational(q: &ExactRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A rational point of projective space, stored as its primitive integer
/// representative with the first nonzero coordinate positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePoint {
    coords: Vec<BigInt>,
}

impl ProjectivePoint {
    /// Normalizes an integer vector; fails on the zero vector.
    pub fn from_integers(mut coords: Vec<BigInt>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidPoint(format!(
                "need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        let g = coords.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        if g.is_zero() {
            return Err(Error::InvalidPoint("all coordinates are zero".into()));
        }
        let negate = coords.iter().find(|c| !c.is_zero()).map(|c| c.sign()) == Some(Sign::Minus);
        let g = if negate { -g } else { g };
        if !g.is_one() {
            for c in coords.iter_mut() {
                *c = &*c / &g;
            }
        }
        Ok(ProjectivePoint { coords })
    }

    pub fn from_i64s(coords: &[i64]) -> Result<Self> {
        Self::from_integers(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// Wraps a vector already known to be primitive and sign-normalized.
    pub(crate) fn from_normalized_unchecked(coords: Vec<BigInt>) -> Self {
        debug_assert!(Self::from_integers(coords.clone()).map(|p| p.coords == coords) == Ok(true));
        ProjectivePoint { coords }
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    /// Projective dimension `n` of the ambient `P^n`.
    pub fn dimension(&self) -> usize {
        self.coords.len() - 1
    }

    /// Largest absolute value among the coordinates (the multiplicative naive height).
    pub fn max_abs(&self) -> BigInt {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or_default()
    }

    /// True when every coordinate lies in {0, 1, -1}.
    pub fn is_unit_pattern(&self) -> bool {
        self.coords.iter().all(|c| c.abs() <= BigInt::one())
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ":")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Clears denominators and divides by the content.
pub fn normalize(coords: &[ExactRational]) -> Result<ProjectivePoint> {
    let lcm = coords
        .iter()
        .fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let ints = coords
        .iter()
        .map(|q| q.numer() * (&lcm / q.denom()))
        .collect();
    ProjectivePoint::from_integers(ints)
}

impl Serialize for ProjectivePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.coords.iter().map(|c| c.to_string()))
    }
}

impl<'de> Deserialize<'de> for ProjectivePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        let coords = raw
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => parse_rational(s),
                serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => parse_rational(&n.to_string()),
                other => Err(Error::Parse(format!("not a coordinate: {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map_err(de::Error::custom)?;
        normalize(&coords).map_err(de::Error::custom)
    }
}

/// A point of a product of projective spaces, one normalized factor per space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductPoint {
    factors: Vec<ProjectivePoint>,
}

impl ProductPoint {
    pub fn new(factors: Vec<ProjectivePoint>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidPoint("product point with no factors".into()));
        }
        Ok(ProductPoint { factors })
    }

    pub fn factors(&self) -> &[ProjectivePoint] {
        &self.factors
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }
}

impl fmt::Display for ProductPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Either a point of a single projective space or of a product.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Projective(ProjectivePoint),
    Product(ProductPoint),
}

impl Point {
    pub fn as_projective(&self) -> Option<&ProjectivePoint> {
        match self {
            Point::Projective(p) => Some(p),
            Point::Product(_) => None,
        }
    }

    pub fn as_product(&self) -> Option<&ProductPoint> {
        match self {
            Point::Product(p) => Some(p),
            Point::Projective(_) => None,
        }
    }

    /// Factors of the point, a single one for projective points.
    pub fn factor_slice(&self) -> &[ProjectivePoint] {
        match self {
            Point::Projective(p) => std::slice::from_ref(p),
            Point::Product(p) => p.factors(),
        }
    }
}

impl From<ProjectivePoint> for Point {
    fn from(p: ProjectivePoint) -> Self {
        Point::Projective(p)
    }
}

impl From<ProductPoint> for Point {
    fn from(p: ProductPoint) -> Self {
        Point::Product(p)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Projective(p) => p.fmt(f),
            Point::Product(p) => p.fmt(f),
        }
    }
}

impl std::str::FromStr for ProjectivePoint {
    type Err = Error;

    /// Parses `(x_0:...:x_n)`; parentheses are optional and coordinates may be rationals.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(t);
        let coords = t.split(':').map(parse_rational).collect::<Result<Vec<_>>>()?;
        normalize(&coords)
    }
}

impl std::str::FromStr for Point {
    type Err = Error;

    /// Parses `(1:2)` or a product `(1:0)x(1:-1)`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('x').collect();
        if parts.len() == 1 {
            return Ok(Point::Projective(parts[0].parse()?));
        }
        let factors = parts.iter().map(|p| p.parse()).collect::<Result<Vec<ProjectivePoint>>>()?;
        Ok(Point::Product(ProductPoint::new(factors)?))
    }
}

/// A vector of positive integers with componentwise order, sum and product.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct MultiIndex {
    entries: Vec<u64>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Precondition("multi-index must have at least one entry".into()));
        }
        if entries.iter().any(|&e| e == 0) {
            return Err(Error::Precondition(format!(
                "multi-index entries must be >= 1: {entries:?}"
            )));
        }
        Ok(MultiIndex { entries })
    }

    pub fn splat(value: u64, arity: usize) -> Result<Self> {
        Self::new(vec![value; arity])
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn arity(&self) -> usize {
        self.entries.len()
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::Dimension {
                expected: self.arity(),
                found: other.arity(),
            });
        }
        Ok(())
    }

    /// Componentwise `<=`.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.check_arity(other)?;
        Ok(self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        Ok(MultiIndex {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        Ok(MultiIndex {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn min_entry(&self) -> u64 {
        *self.entries.iter().min().expect("nonempty")
    }

    /// True iff every entry is prime.
    pub fn is_prime_index(&self) -> bool {
        self.entries.iter().all(|&e| is_prime(e))
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MultiIndex::new(Vec::<u64>::deserialize(d)?).map_err(de::Error::custom)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// An exact rational rendered as decimal strings, as used in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPair {
    pub numerator: String,
    pub denominator: String,
}

impl From<&ExactRational> for RationalPair {
    fn from(q: &ExactRational) -> Self {
        RationalPair {
            numerator: q.numer().to_string(),
            denominator: q.denom().to_string(),
        }
    }
}

impl RationalPair {
    pub fn to_rational(&self) -> Result<ExactRational> {
        parse_rational(&format!("{}/{}", self.numerator, self.denominator))
    }
}

/// Serde adapter for rationals written as `"p/q"` strings (plain JSON integers
/// are accepted on input).
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &ExactRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExactRational, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(t) => parse_rational(&t).map_err(de::Error::custom),
            serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => {
                parse_rational(&n.to_string()).map_err(de::Error::custom)
            }
            other => Err(de::Error::custom(format!("expected a rational, got {other}"))),
        }
    }
}

/// Serde adapter writing a rational as `{numerator, denominator}` strings.
pub mod rational_pair {
    use super::*;

    pub fn serialize<S: Serializer>(q: &ExactRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalPair::from(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExactRational, D::Error> {
        RationalPair::deserialize(d)?.to_rational().map_err(de::Error::custom)
    }
}

/// Serde adapter writing a big natural number as a decimal string.
pub mod biguint_str {
    use num_bigint::BigUint;

    use super::*;

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}
