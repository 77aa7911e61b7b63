//! Systems of commuting endomorphisms `{f_N}` with a multiplicative or
//! additive index law and a closed-form degree law.

mod chebyshev;
mod descriptor;
mod lattes;
mod morphism;

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use serde::{Deserialize, Serialize, Serializer};

use crate::arith::{MultiIndex, Point, ProductPoint, ProjectivePoint};
use crate::error::{Error, Result};

pub use chebyshev::{chebyshev_morphism, chebyshev_poly};
pub use descriptor::{BaseSpec, SystemDescriptor};
pub use lattes::{division_poly_multiple, LattesMaps, WeierstrassCurve};
pub use morphism::P1Morphism;

use chebyshev::chebyshev_eval_raw;
use morphism::p1_coords;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexLaw {
    Multiplicative,
    Additive,
}

impl IndexLaw {
    pub fn combine(self, a: u64, b: u64) -> u64 {
        match self {
            IndexLaw::Multiplicative => a * b,
            IndexLaw::Additive => a + b,
        }
    }
}

/// `N` for single systems, `I` for products.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemIndex {
    Scalar(u64),
    Multi(MultiIndex),
}

impl SystemIndex {
    pub fn multi(entries: Vec<u64>) -> Result<Self> {
        Ok(SystemIndex::Multi(MultiIndex::new(entries)?))
    }
}

impl fmt::Display for SystemIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemIndex::Scalar(n) => write!(f, "{n}"),
            SystemIndex::Multi(m) => m.fmt(f),
        }
    }
}

/// `d_N`, or the per-factor vector for product systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Degree {
    Scalar(BigUint),
    Vector(Vec<BigUint>),
}

impl Degree {
    /// Smallest entry (the value itself for scalars).
    pub fn min_entry(&self) -> &BigUint {
        match self {
            Degree::Scalar(d) => d,
            Degree::Vector(v) => v.iter().min().expect("nonempty degree vector"),
        }
    }

    pub fn entries(&self) -> &[BigUint] {
        match self {
            Degree::Scalar(d) => std::slice::from_ref(d),
            Degree::Vector(v) => v,
        }
    }
}

impl Serialize for Degree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Degree::Scalar(d) => s.serialize_str(&d.to_string()),
            Degree::Vector(v) => s.collect_seq(v.iter().map(|d| d.to_string())),
        }
    }
}

impl<'de> Deserialize<'de> for Degree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Scalar(String),
            Vector(Vec<String>),
        }
        let parse = |t: &str| t.parse::<BigUint>().map_err(serde::de::Error::custom);
        Ok(match Repr::deserialize(d)? {
            Repr::Scalar(t) => Degree::Scalar(parse(&t)?),
            Repr::Vector(v) => Degree::Vector(v.iter().map(|t| parse(t)).collect::<std::result::Result<_, _>>()?),
        })
    }
}

/// The ambient space: `P^n` or a product of projective spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Projective(usize),
    Product(Vec<usize>),
}

impl Space {
    /// Projective dimensions of the factors.
    pub fn factor_dims(&self) -> Vec<usize> {
        match self {
            Space::Projective(n) => vec![*n],
            Space::Product(v) => v.clone(),
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        let dims = self.factor_dims();
        let factors = p.factor_slice();
        match (self, p) {
            (Space::Projective(_), Point::Product(_)) | (Space::Product(_), Point::Projective(_)) => {
                return Err(Error::Dimension {
                    expected: dims.len(),
                    found: factors.len(),
                });
            }
            _ => {}
        }
        if dims.len() != factors.len() {
            return Err(Error::Dimension {
                expected: dims.len(),
                found: factors.len(),
            });
        }
        for (d, f) in dims.iter().zip(factors) {
            if f.dimension() != *d {
                return Err(Error::Dimension {
                    expected: *d,
                    found: f.dimension(),
                });
            }
        }
        Ok(())
    }
}

/// The morphism a single system is iterated with: either a power map on `P^n`
/// or a general endomorphism of `P^1`.
#[derive(Clone, Debug)]
pub enum BaseMap {
    Power { dim: usize, degree: u64 },
    P1(Arc<P1Morphism>),
}

impl BaseMap {
    pub fn degree(&self) -> u64 {
        match self {
            BaseMap::Power { degree, .. } => *degree,
            BaseMap::P1(m) => m.degree() as u64,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseMap::Power { dim, .. } => *dim,
            BaseMap::P1(_) => 1,
        }
    }

    pub fn eval(&self, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        match self {
            BaseMap::Power { dim, degree } => power_eval(*dim, *degree, p),
            BaseMap::P1(m) => m.eval(p),
        }
    }

    /// `self` composed with itself `n` times (`n >= 1`).
    fn iterate(&self, n: u64) -> Result<BaseMap> {
        match self {
            BaseMap::Power { dim, degree } => {
                let degree = u32::try_from(n)
                    .ok()
                    .and_then(|n| degree.checked_pow(n))
                    .ok_or_else(|| Error::Unsupported(format!("iterate degree {degree}^{n} overflows")))?;
                Ok(BaseMap::Power { dim: *dim, degree })
            }
            BaseMap::P1(m) => {
                let mut acc = (**m).clone();
                for _ in 1..n {
                    acc = m.compose(&acc)?;
                }
                Ok(BaseMap::P1(Arc::new(acc)))
            }
        }
    }
}

/// Raises every coordinate to the `n`-th power. The result stays primitive;
/// only the sign may need fixing.
fn power_eval(dim: usize, n: u64, p: &ProjectivePoint) -> Result<ProjectivePoint> {
    if p.dimension() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: p.dimension(),
        });
    }
    let e = u32::try_from(n).map_err(|_| Error::Unsupported(format!("exponent {n} too large")))?;
    let mut coords: Vec<BigInt> = p.coords().iter().map(|c| c.pow(e)).collect();
    if coords.iter().find(|c| c.sign() != num_bigint::Sign::NoSign).is_some_and(|c| c.is_negative()) {
        for c in coords.iter_mut() {
            *c = -&*c;
        }
    }
    Ok(ProjectivePoint::from_normalized_unchecked(coords))
}

#[derive(Clone, Debug)]
enum Kind {
    Power { dim: usize },
    Chebyshev,
    Lattes(LattesMaps),
    Iteration { base: BaseMap, spec: BaseSpec },
    Product(Vec<EndoSystem>),
}

/// An indexed family of commuting endomorphisms with its index and degree laws.
#[derive(Clone, Debug)]
pub struct EndoSystem {
    kind: Kind,
    start: SystemIndex,
}

/// `f_N(x_0 : ... : x_n) = (x_0^N : ... : x_n^N)` on `P^n`, `d_N = N`.
pub fn power_system(n: usize) -> Result<EndoSystem> {
    if n == 0 {
        return Err(Error::InvalidSystem("power system needs n >= 1".into()));
    }
    Ok(EndoSystem {
        kind: Kind::Power { dim: n },
        start: SystemIndex::Scalar(2),
    })
}

/// `f_N = T_N` on `P^1`, `d_N = N`.
pub fn chebyshev_system() -> EndoSystem {
    EndoSystem {
        kind: Kind::Chebyshev,
        start: SystemIndex::Scalar(2),
    }
}

/// Lattès maps induced by `[N]`, `d_N = N^2`.
pub fn lattes_system(curve: WeierstrassCurve) -> EndoSystem {
    EndoSystem {
        kind: Kind::Lattes(LattesMaps::new(curve)),
        start: SystemIndex::Scalar(2),
    }
}

/// `f_N = f^N` (additive), `d_N = d(f)^N`.
pub fn iteration_system(spec: BaseSpec) -> Result<EndoSystem> {
    let base = spec.build()?;
    if base.degree() < 2 {
        return Err(Error::InvalidSystem(format!(
            "iteration needs d(f) >= 2, got {}",
            base.degree()
        )));
    }
    Ok(EndoSystem {
        kind: Kind::Iteration { base, spec },
        start: SystemIndex::Scalar(1),
    })
}

/// `f_I = f_{1, I(1)} x ... x f_{n, I(n)}` on the product of the factor spaces.
pub fn product_system(factors: Vec<EndoSystem>) -> Result<EndoSystem> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidSystem("product of zero systems".into()))?;
    let law = first.index_law();
    let mut starts = Vec::with_capacity(factors.len());
    for f in &factors {
        if f.is_product() {
            return Err(Error::InvalidSystem("nested product systems are not supported".into()));
        }
        if f.index_law() != law {
            return Err(Error::InvalidSystem("factor systems mix index laws".into()));
        }
        match f.start {
            SystemIndex::Scalar(s) => starts.push(s),
            SystemIndex::Multi(_) => unreachable!("non-product systems have scalar starts"),
        }
    }
    Ok(EndoSystem {
        kind: Kind::Product(factors),
        start: SystemIndex::Multi(MultiIndex::new(starts)?),
    })
}

impl EndoSystem {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Power { .. } => "power",
            Kind::Chebyshev => "chebyshev",
            Kind::Lattes(_) => "lattes",
            Kind::Iteration { .. } => "iteration",
            Kind::Product(_) => "product",
        }
    }

    pub fn index_law(&self) -> IndexLaw {
        match &self.kind {
            Kind::Power { .. } | Kind::Chebyshev | Kind::Lattes(_) => IndexLaw::Multiplicative,
            Kind::Iteration { .. } => IndexLaw::Additive,
            Kind::Product(f) => f[0].index_law(),
        }
    }

    pub fn start_index(&self) -> &SystemIndex {
        &self.start
    }

    /// Start index of a single (non-product) system.
    pub fn scalar_start(&self) -> Result<u64> {
        match self.start {
            SystemIndex::Scalar(s) => Ok(s),
            SystemIndex::Multi(_) => Err(Error::Unsupported("product system has a multi-index start".into())),
        }
    }

    /// Raises the start index; it may not go below the built-in one.
    pub fn with_start(mut self, start: SystemIndex) -> Result<Self> {
        let ok = match (&self.start, &start) {
            (SystemIndex::Scalar(a), SystemIndex::Scalar(b)) => b >= a,
            (SystemIndex::Multi(a), SystemIndex::Multi(b)) => a.leq(b)?,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidSystem(format!(
                "start index {start} is below the minimum {}",
                self.start
            )));
        }
        if let (Kind::Product(factors), SystemIndex::Multi(m)) = (&mut self.kind, &start) {
            for (f, &s) in factors.iter_mut().zip(m.entries()) {
                f.start = SystemIndex::Scalar(s);
            }
        }
        self.start = start;
        Ok(self)
    }

    pub fn is_product(&self) -> bool {
        matches!(self.kind, Kind::Product(_))
    }

    pub fn factors(&self) -> &[EndoSystem] {
        match &self.kind {
            Kind::Product(f) => f,
            _ => std::slice::from_ref(self),
        }
    }

    pub fn space(&self) -> Space {
        match &self.kind {
            Kind::Power { dim } => Space::Projective(*dim),
            Kind::Chebyshev | Kind::Lattes(_) => Space::Projective(1),
            Kind::Iteration { base, .. } => Space::Projective(base.dim()),
            Kind::Product(f) => Space::Product(f.iter().map(|s| s.space().factor_dims()[0]).collect()),
        }
    }

    /// True when every member is a coordinatewise power map, so that the
    /// canonical height equals the naive height.
    pub fn is_power_type(&self) -> bool {
        match &self.kind {
            Kind::Power { .. } => true,
            Kind::Iteration { base, .. } => matches!(base, BaseMap::Power { .. }),
            Kind::Product(f) => f.iter().all(|s| s.is_power_type()),
            _ => false,
        }
    }

    pub fn curve(&self) -> Option<&WeierstrassCurve> {
        match &self.kind {
            Kind::Lattes(l) => Some(l.curve()),
            _ => None,
        }
    }

    fn check_index(&self, index: &SystemIndex) -> Result<()> {
        match (&self.kind, index) {
            (Kind::Product(f), SystemIndex::Multi(m)) => {
                if m.arity() != f.len() {
                    return Err(Error::Dimension {
                        expected: f.len(),
                        found: m.arity(),
                    });
                }
                Ok(())
            }
            (Kind::Product(f), SystemIndex::Scalar(_)) => Err(Error::Dimension {
                expected: f.len(),
                found: 1,
            }),
            (_, SystemIndex::Multi(m)) => Err(Error::Dimension {
                expected: 1,
                found: m.arity(),
            }),
            (_, SystemIndex::Scalar(0)) => Err(Error::Precondition("index must be >= 1".into())),
            _ => Ok(()),
        }
    }

    /// `d_N` of a single system.
    pub fn scalar_degree(&self, n: u64) -> Result<BigUint> {
        match &self.kind {
            Kind::Power { .. } | Kind::Chebyshev => Ok(BigUint::from(n)),
            Kind::Lattes(_) => Ok(BigUint::from(n) * BigUint::from(n)),
            Kind::Iteration { base, .. } => {
                let e = u32::try_from(n).map_err(|_| Error::Unsupported(format!("index {n} too large")))?;
                Ok(BigUint::from(base.degree()).pow(e))
            }
            Kind::Product(_) => Err(Error::Unsupported("use degree() with a multi-index".into())),
        }
    }

    pub fn degree(&self, index: &SystemIndex) -> Result<Degree> {
        self.check_index(index)?;
        match (&self.kind, index) {
            (Kind::Product(f), SystemIndex::Multi(m)) => Ok(Degree::Vector(
                f.iter()
                    .zip(m.entries())
                    .map(|(s, &i)| s.scalar_degree(i))
                    .collect::<Result<_>>()?,
            )),
            (_, SystemIndex::Scalar(n)) => Ok(Degree::Scalar(self.scalar_degree(*n)?)),
            _ => unreachable!("checked above"),
        }
    }

    /// `N ∘ N'`: `N N'` or `N + N'` according to the index law.
    pub fn combine(&self, a: &SystemIndex, b: &SystemIndex) -> Result<SystemIndex> {
        self.check_index(a)?;
        self.check_index(b)?;
        let law = self.index_law();
        match (a, b) {
            (SystemIndex::Scalar(x), SystemIndex::Scalar(y)) => Ok(SystemIndex::Scalar(law.combine(*x, *y))),
            (SystemIndex::Multi(x), SystemIndex::Multi(y)) => Ok(SystemIndex::Multi(match law {
                IndexLaw::Multiplicative => x.mul(y)?,
                IndexLaw::Additive => x.add(y)?,
            })),
            _ => unreachable!("checked above"),
        }
    }

    /// The member `f_n` of a single system as an iterable map.
    pub fn member(&self, n: u64) -> Result<BaseMap> {
        if n == 0 {
            return Err(Error::Precondition("index must be >= 1".into()));
        }
        match &self.kind {
            Kind::Power { dim } => Ok(BaseMap::Power { dim: *dim, degree: n }),
            Kind::Chebyshev => Ok(BaseMap::P1(Arc::new(chebyshev_morphism(
                u32::try_from(n).map_err(|_| Error::Unsupported(format!("index {n} too large")))?,
            )?))),
            Kind::Lattes(l) => Ok(BaseMap::P1(l.map(n)?)),
            Kind::Iteration { base, .. } => base.iterate(n),
            Kind::Product(_) => Err(Error::Unsupported("product systems have no single member map".into())),
        }
    }

    /// `f_n(p)` for a single system.
    pub fn eval_scalar(&self, n: u64, p: &ProjectivePoint) -> Result<ProjectivePoint> {
        if n == 0 {
            return Err(Error::Precondition("index must be >= 1".into()));
        }
        match &self.kind {
            Kind::Power { dim } => power_eval(*dim, n, p),
            Kind::Chebyshev => {
                let [x, w] = p1_coords(p)?;
                let (u, v) = chebyshev_eval_raw(n, x, w);
                ProjectivePoint::from_integers(vec![u, v])
            }
            Kind::Lattes(l) => {
                p1_coords(p)?;
                l.map(n)?.eval(p)
            }
            Kind::Iteration { base, .. } => {
                let mut cur = p.clone();
                for _ in 0..n {
                    cur = base.eval(&cur)?;
                }
                Ok(cur)
            }
            Kind::Product(_) => Err(Error::Unsupported("product systems need a multi-index".into())),
        }
    }

    /// `f_I(p)`.
    pub fn eval(&self, index: &SystemIndex, p: &Point) -> Result<Point> {
        self.check_index(index)?;
        self.space().check_point(p)?;
        match (&self.kind, index, p) {
            (Kind::Product(f), SystemIndex::Multi(m), Point::Product(pp)) => {
                let factors = f
                    .iter()
                    .zip(m.entries())
                    .zip(pp.factors())
                    .map(|((s, &i), x)| s.eval_scalar(i, x))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Point::Product(ProductPoint::new(factors)?))
            }
            (_, SystemIndex::Scalar(n), Point::Projective(x)) => Ok(Point::Projective(self.eval_scalar(*n, x)?)),
            _ => unreachable!("checked above"),
        }
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::from_system(self)
    }
}

/// One failed identity found by [`verify_index_law`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexLawViolation {
    pub first: SystemIndex,
    pub second: SystemIndex,
    pub point: Point,
    pub identity: &'static str,
    pub left: Point,
    pub right: Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexLawReport {
    pub index_law: IndexLaw,
    pub checks: usize,
    pub violations: Vec<IndexLawViolation>,
}

impl IndexLawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `f_N ∘ f_N' = f_N' ∘ f_N = f_{N∘N'}` at every sampled point for
/// every ordered pair of sampled indices.
pub fn verify_index_law(system: &EndoSystem, indices: &[SystemIndex], points: &[Point]) -> Result<IndexLawReport> {
    let mut report = IndexLawReport {
        index_law: system.index_law(),
        checks: 0,
        violations: Vec::new(),
    };
    for (i, a) in indices.iter().enumerate() {
        for b in &indices[i..] {
            let ab = system.combine(a, b)?;
            for p in points {
                let fa_fb = system.eval(a, &system.eval(b, p)?)?;
                let fb_fa = system.eval(b, &system.eval(a, p)?)?;
                let direct = system.eval(&ab, p)?;
                report.checks += 1;
                let mut record = |identity, left: &Point, right: &Point| {
                    report.violations.push(IndexLawViolation {
                        first: a.clone(),
                        second: b.clone(),
                        point: p.clone(),
                        identity,
                        left: left.clone(),
                        right: right.clone(),
                    })
                };
                if fa_fb != fb_fa {
                    record("commutation", &fa_fb, &fb_fa);
                }
                if fa_fb != direct {
                    record("composition", &fa_fb, &direct);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[i64]) -> ProjectivePoint {
        ProjectivePoint::from_i64s(c).unwrap()
    }

    fn prod(a: &[i64], b: &[i64]) -> Point {
        Point::Product(ProductPoint::new(vec![pt(a), pt(b)]).unwrap())
    }

    #[test]
    fn power_system_examples() {
        let s = power_system(2).unwrap();
        assert_eq!(s.eval_scalar(2, &pt(&[1, 2, 3])).unwrap(), pt(&[1, 4, 9]));
        let s1 = power_system(1).unwrap();
        let lhs = s1.eval_scalar(2, &s1.eval_scalar(3, &pt(&[1, 2])).unwrap()).unwrap();
        assert_eq!(lhs, pt(&[1, 64]));
        assert_eq!(lhs, s1.eval_scalar(6, &pt(&[1, 2])).unwrap());
        assert_eq!(s1.eval_scalar(5, &pt(&[0, 1])).unwrap(), pt(&[0, 1]));
        assert_eq!(s1.eval_scalar(3, &pt(&[1, -2])).unwrap(), pt(&[1, -8]));
        assert_eq!(s1.eval_scalar(3, &pt(&[-1, 2])).unwrap(), pt(&[1, -8]));
        assert!(matches!(s.eval_scalar(2, &pt(&[1, 2])), Err(Error::Dimension { .. })));
    }

    #[test]
    fn chebyshev_system_examples() {
        let s = chebyshev_system();
        assert_eq!(s.eval_scalar(2, &pt(&[3, 1])).unwrap(), pt(&[7, 1]));
        assert_eq!(s.eval_scalar(2, &pt(&[1, 0])).unwrap(), pt(&[1, 0]));
        let z = pt(&[5, 2]);
        let a = s.eval_scalar(3, &s.eval_scalar(2, &z).unwrap()).unwrap();
        assert_eq!(a, s.eval_scalar(6, &z).unwrap());
    }

    #[test]
    fn lattes_degree_law() {
        let s = lattes_system(WeierstrassCurve::from_i64(-1, 0).unwrap());
        assert_eq!(s.scalar_degree(2).unwrap(), BigUint::from(4u32));
        assert_eq!(s.scalar_degree(3).unwrap(), BigUint::from(9u32));
        match s.member(2).unwrap() {
            BaseMap::P1(m) => assert_eq!(m.algebraic_degree(), 4),
            _ => panic!("lattes member must be a P^1 morphism"),
        }
    }

    #[test]
    fn iteration_of_t2() {
        let s = iteration_system(BaseSpec::Chebyshev { degree: 2 }).unwrap();
        assert_eq!(s.index_law(), IndexLaw::Additive);
        let z = pt(&[3, 1]);
        let t8 = chebyshev_system().eval_scalar(8, &z).unwrap();
        assert_eq!(s.eval_scalar(3, &z).unwrap(), t8);
        assert_eq!(s.scalar_degree(3).unwrap(), BigUint::from(8u32));
        let a = s.eval_scalar(1, &s.eval_scalar(2, &z).unwrap()).unwrap();
        assert_eq!(a, s.eval_scalar(3, &z).unwrap());
        match s.member(3).unwrap() {
            BaseMap::P1(m) => assert_eq!(m.eval(&z).unwrap(), t8),
            _ => panic!(),
        }
        assert!(matches!(
            iteration_system(BaseSpec::Power { n: 1, degree: 1 }),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn product_examples() {
        let s = product_system(vec![power_system(1).unwrap(), power_system(1).unwrap()]).unwrap();
        let i = SystemIndex::multi(vec![2, 3]).unwrap();
        assert_eq!(s.eval(&i, &prod(&[1, 2], &[1, 2])).unwrap(), prod(&[1, 4], &[1, 8]));
        assert_eq!(
            s.degree(&i).unwrap(),
            Degree::Vector(vec![BigUint::from(2u32), BigUint::from(3u32)])
        );
        let i = SystemIndex::multi(vec![2, 2]).unwrap();
        let j = SystemIndex::multi(vec![3, 5]).unwrap();
        let x = prod(&[3, -2], &[5, 7]);
        let lhs = s.eval(&i, &s.eval(&j, &x).unwrap()).unwrap();
        assert_eq!(lhs, s.eval(&s.combine(&i, &j).unwrap(), &x).unwrap());
        let z = prod(&[1, 1], &[1, -1]);
        for e in [vec![2, 3], vec![5, 4], vec![7, 7]] {
            let img = s.eval(&SystemIndex::multi(e).unwrap(), &z).unwrap();
            assert!(img.factor_slice().iter().all(|f| f.is_unit_pattern()));
        }
    }

    #[test]
    fn product_rejects_mixed_laws() {
        let add = iteration_system(BaseSpec::Chebyshev { degree: 2 }).unwrap();
        assert!(matches!(
            product_system(vec![chebyshev_system(), add]),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn index_law_reports() {
        let pts: Vec<Point> = [[1, 2, 3], [2, -1, 5], [0, 3, -4]]
            .iter()
            .map(|c| pt(c).into())
            .collect();
        let idx: Vec<_> = [2, 3, 4].into_iter().map(SystemIndex::Scalar).collect();
        let r = verify_index_law(&power_system(2).unwrap(), &idx, &pts).unwrap();
        assert!(r.passed());
        assert_eq!(r.checks, 6 * 3);
        let r = verify_index_law(
            &chebyshev_system(),
            &[SystemIndex::Scalar(2), SystemIndex::Scalar(3)],
            &[pt(&[5, 2]).into(), pt(&[-1, 3]).into()],
        )
        .unwrap();
        assert!(r.passed());
        let lattes = lattes_system(WeierstrassCurve::from_i64(-1, 0).unwrap());
        let r = verify_index_law(
            &lattes,
            &[SystemIndex::Scalar(2), SystemIndex::Scalar(3)],
            &[pt(&[3, 1]).into(), pt(&[-2, 5]).into()],
        )
        .unwrap();
        assert!(r.passed());
    }

    #[test]
    fn start_index_cannot_drop() {
        assert!(chebyshev_system().with_start(SystemIndex::Scalar(1)).is_err());
        let s = chebyshev_system().with_start(SystemIndex::Scalar(3)).unwrap();
        assert_eq!(s.scalar_start().unwrap(), 3);
    }
}
