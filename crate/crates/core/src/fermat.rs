//! Rational points on `Y_N = f_N^{-1}(Y)` for a hypersurface `Y`, checks of
//! Fermat's property within a search bound, and the key-lemma threshold
//! certificate.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{rational_str, ExactRational, MultiIndex, Point};
use crate::endo::{Degree, EndoSystem, IndexLaw, Space, SystemDescriptor, SystemIndex};
use crate::error::{Error, Result};
use crate::heights::{
    naive_height, CanonicalHeightResult, HeightEngine, HeightZeroCertificate, MinPositiveHeight, Verdict,
};
use crate::interval::ln_biguint;
use crate::search::search_points;

const SEARCH_CHUNK: usize = 1 << 14;
const MAX_THRESHOLD_STEPS: u64 = 100_000;
/// Largest `A^d` (in bits) evaluated exactly in threshold comparisons.
const EXACT_POWER_BITS: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    #[serde(with = "rational_str")]
    pub coefficient: ExactRational,
}

#[derive(Serialize, Deserialize)]
struct HypersurfaceRepr {
    monomials: Vec<Monomial>,
    #[serde(default)]
    factors: Option<Vec<usize>>,
}

/// A (multi)homogeneous form. `factors[i]` is the number of variables of the
/// `i`-th projective factor; variables are listed factor by factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HypersurfaceRepr", into = "HypersurfaceRepr")]
pub struct Hypersurface {
    monomials: Vec<Monomial>,
    factors: Vec<usize>,
    degrees: Vec<u32>,
    /// Coefficients scaled to integers, aligned with `monomials`.
    integral: Vec<BigInt>,
}

impl TryFrom<HypersurfaceRepr> for Hypersurface {
    type Error = Error;

    fn try_from(r: HypersurfaceRepr) -> Result<Self> {
        let factors = match r.factors {
            Some(f) => f,
            None => vec![r.monomials.first().map_or(0, |m| m.exponents.len())],
        };
        Hypersurface::new(r.monomials, factors)
    }
}

impl From<Hypersurface> for HypersurfaceRepr {
    fn from(h: Hypersurface) -> Self {
        HypersurfaceRepr {
            monomials: h.monomials,
            factors: Some(h.factors),
        }
    }
}

impl Hypersurface {
    pub fn new(monomials: Vec<Monomial>, factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&k| k < 2) {
            return Err(Error::InvalidSystem(
                "every factor needs at least two variables".into(),
            ));
        }
        let nvars: usize = factors.iter().sum();
        let mut merged: BTreeMap<Vec<u32>, ExactRational> = BTreeMap::new();
        for m in monomials {
            if m.exponents.len() != nvars {
                return Err(Error::Dimension {
                    expected: nvars,
                    found: m.exponents.len(),
                });
            }
            *merged.entry(m.exponents).or_insert_with(BigRational::zero) += m.coefficient;
        }
        let monomials: Vec<Monomial> = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(exponents, coefficient)| Monomial { exponents, coefficient })
            .collect();
        if monomials.is_empty() {
            return Err(Error::InvalidSystem("the zero form defines no hypersurface".into()));
        }
        let degrees_of = |m: &Monomial| -> Vec<u32> {
            let mut out = Vec::with_capacity(factors.len());
            let mut pos = 0;
            for &k in &factors {
                out.push(m.exponents[pos..pos + k].iter().sum());
                pos += k;
            }
            out
        };
        let degrees = degrees_of(&monomials[0]);
        if monomials.iter().any(|m| degrees_of(m) != degrees) {
            return Err(Error::InvalidSystem("form is not multihomogeneous".into()));
        }
        let lcm = monomials
            .iter()
            .fold(BigInt::one(), |l, m| l.lcm(m.coefficient.denom()));
        let integral = monomials
            .iter()
            .map(|m| (&m.coefficient * BigRational::from_integer(lcm.clone())).to_integer())
            .collect();
        Ok(Hypersurface {
            monomials,
            factors,
            degrees,
            integral,
        })
    }

    fn from_terms(terms: &[(&[u32], i64)], factors: Vec<usize>) -> Result<Self> {
        let monomials = terms
            .iter()
            .map(|(e, c)| Monomial {
                exponents: e.to_vec(),
                coefficient: BigRational::from_integer(BigInt::from(*c)),
            })
            .collect();
        Hypersurface::new(monomials, factors)
    }

    /// `X_0 + X_1 - X_2` on `P^2`; its pullbacks under power maps are the Fermat curves.
    pub fn fermat_line() -> Self {
        Self::from_terms(&[(&[1, 0, 0], 1), (&[0, 1, 0], 1), (&[0, 0, 1], -1)], vec![3])
            .expect("valid form")
    }

    /// `(X_0 X_1) Pi (Y_0 Y_1)^T = alpha X_0Y_0 + beta X_1Y_1 + gamma X_0Y_1 + delta X_1Y_0`
    /// on `P^1 x P^1`.
    pub fn bilinear(alpha: i64, beta: i64, gamma: i64, delta: i64) -> Result<Self> {
        Self::from_terms(
            &[
                (&[1, 0, 1, 0], alpha),
                (&[0, 1, 0, 1], beta),
                (&[1, 0, 0, 1], gamma),
                (&[0, 1, 1, 0], delta),
            ],
            vec![2, 2],
        )
    }

    /// The fiber `X - value W` over `value` in `P^1`.
    pub fn fiber(value: ExactRational) -> Result<Self> {
        Hypersurface::new(
            vec![
                Monomial {
                    exponents: vec![1, 0],
                    coefficient: BigRational::one(),
                },
                Monomial {
                    exponents: vec![0, 1],
                    coefficient: -value,
                },
            ],
            vec![2],
        )
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn check_space(&self, space: &Space) -> Result<()> {
        let dims: Vec<usize> = space.factor_dims().iter().map(|d| d + 1).collect();
        if dims != self.factors {
            return Err(Error::Dimension {
                expected: self.factors.iter().sum(),
                found: dims.iter().sum(),
            });
        }
        Ok(())
    }

    /// Exact evaluation of the form at the primitive representative.
    pub fn eval(&self, p: &Point) -> Result<BigInt> {
        let parts = p.factor_slice();
        if parts.len() != self.factors.len()
            || parts.iter().zip(&self.factors).any(|(x, &k)| x.coords().len() != k)
        {
            return Err(Error::Dimension {
                expected: self.factors.iter().sum(),
                found: parts.iter().map(|x| x.coords().len()).sum(),
            });
        }
        let vars: Vec<&BigInt> = parts.iter().flat_map(|x| x.coords()).collect();
        let mut total = BigInt::zero();
        for (m, c) in self.monomials.iter().zip(&self.integral) {
            let mut term = c.clone();
            for (v, &e) in vars.iter().zip(&m.exponents) {
                if e > 0 {
                    term *= v.pow(e);
                    if term.is_zero() {
                        break;
                    }
                }
            }
            total += term;
        }
        Ok(total)
    }

    pub fn contains(&self, p: &Point) -> Result<bool> {
        Ok(self.eval(p)?.is_zero())
    }
}

/// `point ∈ Y_N`, by evaluating the form at `f_N(point)`.
pub fn member_yn(system: &EndoSystem, index: &SystemIndex, y: &Hypersurface, point: &Point) -> Result<bool> {
    y.contains(&system.eval(index, point)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermatHit {
    pub point: Point,
    pub verdict: Verdict,
    pub naive_height: f64,
    /// Present for positive-height hits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<HeightZeroCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FermatVerdict {
    FermatHoldsWithinBound,
    Counterexample { point: Point },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermatReport {
    pub system: SystemDescriptor,
    pub index: SystemIndex,
    pub bound: u64,
    pub points_searched: u64,
    pub points_found: Vec<FermatHit>,
    pub verdict: FermatVerdict,
}

impl FermatReport {
    pub fn holds(&self) -> bool {
        self.verdict == FermatVerdict::FermatHoldsWithinBound
    }

    pub fn counterexamples(&self) -> impl Iterator<Item = &FermatHit> {
        self.points_found.iter().filter(|h| h.verdict == Verdict::Positive)
    }

    /// Re-verifies every hit's membership and every counterexample certificate.
    pub fn verify(&self, system: &EndoSystem, y: &Hypersurface) -> Result<bool> {
        for hit in &self.points_found {
            if !member_yn(system, &self.index, y, &hit.point)? {
                return Ok(false);
            }
            if hit.verdict == Verdict::Positive {
                match &hit.certificate {
                    Some(c) if c.verdict == Verdict::Positive && c.recheck(system)? => {}
                    _ => return Ok(false),
                }
            }
        }
        Ok(true)
    }
}

/// Searches `Y_N` up to height `H` and classifies each hit.
pub fn check_fermat_property(
    system: &EndoSystem,
    index: &SystemIndex,
    y: &Hypersurface,
    h: u64,
) -> Result<FermatReport> {
    if h == 0 {
        return Err(Error::BoundTooSmall(0));
    }
    let space = system.space();
    y.check_space(&space)?;
    system.degree(index)?;
    let engine = HeightEngine::new(system)?;
    let mut points = search_points(&space, h);
    let mut searched = 0u64;
    let mut hits: Vec<Point> = Vec::new();
    loop {
        let chunk: Vec<Point> = points.by_ref().take(SEARCH_CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        searched += chunk.len() as u64;
        let found = chunk
            .into_par_iter()
            .map(|p| Ok(member_yn(system, index, y, &p)?.then_some(p)))
            .collect::<Result<Vec<_>>>()?;
        hits.extend(found.into_iter().flatten());
    }
    let classified = hits
        .into_par_iter()
        .map(|p| {
            let cert = engine.is_height_zero(&p)?;
            Ok(FermatHit {
                naive_height: naive_height(&p),
                verdict: cert.verdict,
                certificate: (cert.verdict == Verdict::Positive).then_some(cert),
                point: p,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = match classified.iter().find(|h| h.verdict == Verdict::Positive) {
        Some(hit) => FermatVerdict::Counterexample {
            point: hit.point.clone(),
        },
        None => FermatVerdict::FermatHoldsWithinBound,
    };
    Ok(FermatReport {
        system: system.descriptor(),
        index: index.clone(),
        bound: h,
        points_searched: searched,
        points_found: classified,
        verdict,
    })
}

/// A logarithmic quantity `[lower, upper]`; `exp` is set when it is exactly
/// the log of that integer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBound {
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp: Option<String>,
}

impl LogBound {
    pub fn exact_log(n: &BigUint) -> Self {
        let l = ln_biguint(n);
        let (lower, upper) = if n.is_one() { (0.0, 0.0) } else { (l.lo, l.hi) };
        LogBound {
            lower,
            upper,
            exp: Some(n.to_string()),
        }
    }

    pub fn from_height(r: &CanonicalHeightResult) -> Self {
        match &r.exact {
            Some(n) => Self::exact_log(n),
            None => LogBound {
                lower: r.lower().max(0.0),
                upper: r.upper(),
                exp: None,
            },
        }
    }

    pub fn from_min_height(a: &MinPositiveHeight) -> Self {
        match &a.exact {
            Some(n) => Self::exact_log(n),
            None => LogBound {
                lower: a.value,
                upper: a.upper,
                exp: None,
            },
        }
    }

    fn exp_value(&self) -> Option<BigUint> {
        self.exp.as_ref().and_then(|s| s.parse().ok())
    }

    fn is_zero(&self) -> bool {
        self.upper <= 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdComparison {
    pub m: u64,
    pub degrees: Vec<String>,
    pub holds: bool,
    /// `exact-integer` or `outward-rounded`.
    pub method: String,
    pub detail: Vec<String>,
}

fn compare_one(d: &BigUint, a: &LogBound, max: &LogBound) -> (bool, bool, String) {
    if max.is_zero() {
        return (true, true, format!("{d} * a > 0 = max h_F"));
    }
    if let (Some(ea), Some(eb)) = (a.exp_value(), max.exp_value()) {
        let bits = d.to_u64_digits().first().copied().unwrap_or(0).saturating_mul(ea.bits());
        if d.bits() <= 32 && bits <= EXACT_POWER_BITS {
            let e = d.to_u64_digits().first().copied().unwrap_or(0) as u32;
            let lhs = ea.pow(e);
            let holds = lhs > eb;
            let op = if holds { ">" } else if lhs == eb { "=" } else { "<" };
            return (holds, true, format!("{ea}^{d} {op} {eb}"));
        }
    }
    let df = d.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
    let df = if d.bits() > 53 { df.next_down() } else { df };
    let lhs = (df * a.lower).next_down();
    let holds = lhs > max.upper;
    (
        holds,
        false,
        format!("{d} * {:e} >= {lhs:e} {} {:e}", a.lower, if holds { ">" } else { "<=" }, max.upper),
    )
}

/// Minimal `m >= start` with `degrees(m)[i] * a[i] > max` for every `i`.
pub fn threshold_index<D>(start: u64, degrees: D, a: &[LogBound], max: &LogBound) -> Result<(u64, Vec<ThresholdComparison>)>
where
    D: Fn(u64) -> Result<Vec<BigUint>>,
{
    if a.is_empty() || a.iter().any(|x| !(x.lower > 0.0)) {
        return Err(Error::InvalidCertificate("a_lower must be positive".into()));
    }
    let mut transcript = Vec::new();
    for m in start..start.saturating_add(MAX_THRESHOLD_STEPS) {
        let ds = degrees(m)?;
        if ds.len() != a.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                found: ds.len(),
            });
        }
        let mut holds = true;
        let mut exact = true;
        let mut detail = Vec::with_capacity(ds.len());
        for (d, ai) in ds.iter().zip(a) {
            let (h, e, text) = compare_one(d, ai, max);
            holds &= h;
            exact &= e;
            detail.push(text);
        }
        transcript.push(ThresholdComparison {
            m,
            degrees: ds.iter().map(|d| d.to_string()).collect(),
            holds,
            method: if exact { "exact-integer" } else { "outward-rounded" }.into(),
            detail,
        });
        if holds {
            return Ok((m, transcript));
        }
    }
    Err(Error::Unsupported(format!(
        "no threshold index within {MAX_THRESHOLD_STEPS} steps of {start}"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPoint {
    pub point: Point,
    pub height: LogBound,
}

/// `d_{m0} a(h_F) > max_S h_F`, so for `m >= m0` any rational `x` with
/// `f_m(x) ∈ S` has `h_F(x) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyLemmaCertificate {
    pub s: Vec<CertifiedPoint>,
    pub max_height: LogBound,
    /// One entry per factor.
    pub a_lower: Vec<LogBound>,
    pub m0: SystemIndex,
    pub degree_at_m0: Degree,
    pub transcript: Vec<ThresholdComparison>,
    pub consequence: String,
}

impl KeyLemmaCertificate {
    /// The transcript must end at `m0` with the only passing comparison.
    pub fn is_consistent(&self) -> bool {
        let Some((last, earlier)) = self.transcript.split_last() else {
            return false;
        };
        let m0 = match &self.m0 {
            SystemIndex::Scalar(m) => *m,
            SystemIndex::Multi(mi) => mi.entries()[0],
        };
        last.holds && last.m == m0 && earlier.iter().all(|c| !c.holds)
    }
}

fn max_bound(bounds: &[LogBound]) -> LogBound {
    let exact: Option<Vec<BigUint>> = bounds.iter().map(|b| b.exp_value()).collect();
    if let Some(vals) = exact {
        let top = vals.into_iter().max().unwrap_or_else(BigUint::one);
        return LogBound::exact_log(&top);
    }
    let upper = bounds.iter().map(|b| b.upper).fold(0.0, f64::max);
    let lower = bounds.iter().map(|b| b.lower).fold(0.0, f64::max);
    LogBound { lower, upper, exp: None }
}

/// How `d_m` is computed when searching for `m0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeLaw {
    /// The system's own degrees.
    System,
    /// `d_m = m` in every factor.
    Linear,
    /// `d_m = m^2` in every factor, as for abelian varieties.
    Square,
}

/// Minimal `m0` along the system's indices (the diagonal `(m, ..., m)` for
/// products) with `d_{m0} a > max_S h_F`.
pub fn certify_threshold(
    system: &EndoSystem,
    s: &[Point],
    a: &MinPositiveHeight,
    tolerance: f64,
) -> Result<KeyLemmaCertificate> {
    certify_threshold_with_law(system, s, a, tolerance, DegreeLaw::System)
}

pub fn certify_threshold_with_law(
    system: &EndoSystem,
    s: &[Point],
    a: &MinPositiveHeight,
    tolerance: f64,
    law: DegreeLaw,
) -> Result<KeyLemmaCertificate> {
    if s.is_empty() {
        return Err(Error::InvalidCertificate("S is empty".into()));
    }
    let a_lower: Vec<LogBound> = a.per_factor().into_iter().map(LogBound::from_min_height).collect();
    let factors = system.factors();
    if a_lower.len() != factors.len() {
        return Err(Error::Dimension {
            expected: factors.len(),
            found: a_lower.len(),
        });
    }
    if a_lower.iter().any(|x| !(x.lower > 0.0)) {
        return Err(Error::InvalidCertificate("a_lower must be positive".into()));
    }
    let engine = HeightEngine::new(system)?;
    let certified = s
        .par_iter()
        .map(|p| {
            Ok(CertifiedPoint {
                point: p.clone(),
                height: LogBound::from_height(&engine.canonical_height(p, tolerance)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_height = max_bound(&certified.iter().map(|c| c.height.clone()).collect::<Vec<_>>());
    let degrees = |m: u64| -> Result<Vec<BigUint>> {
        factors
            .iter()
            .map(|f| match law {
                DegreeLaw::System => f.scalar_degree(m),
                DegreeLaw::Linear => Ok(BigUint::from(m)),
                DegreeLaw::Square => Ok(BigUint::from(m) * BigUint::from(m)),
            })
            .collect()
    };
    let start = match system.start_index() {
        SystemIndex::Multi(m) => m.entries().iter().copied().max().unwrap_or(1),
        SystemIndex::Scalar(s) => *s,
    };
    let (m0, transcript) = threshold_index(start, degrees, &a_lower, &max_height)?;
    let (index, degree_at_m0) = if system.is_product() {
        (SystemIndex::Multi(MultiIndex::splat(m0, factors.len())?), Degree::Vector(degrees(m0)?))
    } else {
        (SystemIndex::Scalar(m0), Degree::Scalar(degrees(m0)?.remove(0)))
    };
    let consequence = match system.index_law() {
        IndexLaw::Multiplicative => {
            "for every index m >= m0 and rational x with f_m(x) in S, h_F(x) = 0; \
             with S = Y_p(Q) this gives Fermat's property of Y_{mp}"
        }
        IndexLaw::Additive => {
            "for every index m >= m0 and rational x with f_m(x) in S, h_F(x) = 0; \
             with S = Y_N1(Q) this gives Fermat's property of Y_{m+N1}"
        }
    };
    Ok(KeyLemmaCertificate {
        s: certified,
        max_height,
        a_lower,
        degree_at_m0,
        m0: index,
        transcript,
        consequence: consequence.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCheck {
    pub m: u64,
    pub index: SystemIndex,
    pub hits: usize,
    pub all_height_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCheck {
    pub bound: u64,
    pub samples: Vec<SampleCheck>,
    /// Indices with a positive-height hit: evidence that `S` was incomplete.
    pub violations: Vec<SystemIndex>,
}

impl EmpiricalCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Searches `Y_{m ∘ base}` for each sampled `m >= m0` (`m p` or `m + N_1`,
/// diagonal for products) and confirms every hit has height zero.
pub fn verify_certificate_empirically(
    certificate: &KeyLemmaCertificate,
    system: &EndoSystem,
    y: &Hypersurface,
    base: &SystemIndex,
    h: u64,
    samples: &[u64],
) -> Result<EmpiricalCheck> {
    let m0 = match &certificate.m0 {
        SystemIndex::Scalar(m) => *m,
        SystemIndex::Multi(mi) => mi.entries()[0],
    };
    let mut out = Vec::new();
    let mut violations = Vec::new();
    for &m in samples.iter().filter(|&&m| m >= m0) {
        let mi = if system.is_product() {
            SystemIndex::Multi(MultiIndex::splat(m, system.factors().len())?)
        } else {
            SystemIndex::Scalar(m)
        };
        let index = system.combine(&mi, base)?;
        let report = check_fermat_property(system, &index, y, h)?;
        let ok = report.holds();
        if !ok {
            violations.push(index.clone());
        }
        out.push(SampleCheck {
            m,
            index,
            hits: report.points_found.len(),
            all_height_zero: ok,
        });
    }
    Ok(EmpiricalCheck {
        bound: h,
        samples: out,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{parse_rational, ProductPoint, ProjectivePoint};
    use crate::endo::{iteration_system, power_system, product_system, BaseSpec};
    use crate::heights::min_positive_height;

    fn pt(c: &[i64]) -> Point {
        ProjectivePoint::from_i64s(c).unwrap().into()
    }

    fn pp(a: &[i64], b: &[i64]) -> Point {
        Point::Product(
            ProductPoint::new(vec![
                ProjectivePoint::from_i64s(a).unwrap(),
                ProjectivePoint::from_i64s(b).unwrap(),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn membership_examples() {
        let s = power_system(2).unwrap();
        let y = Hypersurface::fermat_line();
        assert!(member_yn(&s, &SystemIndex::Scalar(3), &y, &pt(&[1, -1, 0])).unwrap());
        assert!(member_yn(&s, &SystemIndex::Scalar(2), &y, &pt(&[3, 4, 5])).unwrap());
        assert!(!member_yn(&s, &SystemIndex::Scalar(4), &y, &pt(&[1, 2, 2])).unwrap());
    }

    #[test]
    fn hypersurface_json_and_validation() {
        let y: Hypersurface = serde_json::from_str(
            r#"{"monomials":[{"exponents":[1,0,0],"coefficient":"1"},{"exponents":[0,1,0],"coefficient":1},
                {"exponents":[0,0,1],"coefficient":"-1"}],"factors":[3]}"#,
        )
        .unwrap();
        assert_eq!(y, Hypersurface::fermat_line());
        let back: Hypersurface = serde_json::from_str(&serde_json::to_string(&y).unwrap()).unwrap();
        assert_eq!(back, y);
        let bad = r#"{"monomials":[{"exponents":[2,0],"coefficient":"1"},{"exponents":[0,1],"coefficient":"1"}]}"#;
        assert!(serde_json::from_str::<Hypersurface>(bad).is_err());
        let zero = r#"{"monomials":[{"exponents":[1,0],"coefficient":"1"},{"exponents":[1,0],"coefficient":"-1"}]}"#;
        assert!(serde_json::from_str::<Hypersurface>(zero).is_err());
        let half = Hypersurface::fiber(parse_rational("1/2").unwrap()).unwrap();
        assert!(half.contains(&pt(&[1, 2])).unwrap());
    }

    #[test]
    fn pythagorean_counterexample() {
        let s = power_system(2).unwrap();
        let y = Hypersurface::fermat_line();
        let r = check_fermat_property(&s, &SystemIndex::Scalar(2), &y, 5).unwrap();
        assert_eq!(
            r.verdict,
            FermatVerdict::Counterexample { point: pt(&[3, 4, 5]) }
        );
        assert!(r.verify(&s, &y).unwrap());
        let r = check_fermat_property(&s, &SystemIndex::Scalar(3), &y, 20).unwrap();
        assert!(r.holds());
        assert!(r
            .points_found
            .iter()
            .all(|h| h.point.factor_slice()[0].coords().iter().any(|c| c.is_zero())));
    }

    #[test]
    fn bilinear_surface_contains_height_zero_point() {
        let y = Hypersurface::bilinear(1, 1, 1, -2).unwrap();
        assert!(y.contains(&pp(&[1, 0], &[1, -1])).unwrap());
        let s = product_system(vec![power_system(1).unwrap(), power_system(1).unwrap()]).unwrap();
        let idx = SystemIndex::multi(vec![2, 2]).unwrap();
        let r = check_fermat_property(&s, &idx, &y, 10).unwrap();
        assert!(!member_yn(&s, &idx, &y, &pp(&[1, 0], &[1, -1])).unwrap());
        let one = SystemIndex::multi(vec![1, 1]).unwrap();
        assert!(member_yn(&s, &one, &y, &pp(&[1, 0], &[1, -1])).unwrap());
        assert!(r.verify(&s, &y).unwrap());
    }

    #[test]
    fn key_lemma_thresholds() {
        let a = [LogBound::exact_log(&BigUint::from(2u32))];
        let max = LogBound::exact_log(&BigUint::from(5u32));
        let (m0, t) = threshold_index(2, |m| Ok(vec![BigUint::from(m)]), &a, &max).unwrap();
        assert_eq!(m0, 3);
        assert_eq!(t[0].detail[0], "2^2 < 5");
        assert_eq!(t[1].detail[0], "2^3 > 5");
        let (m0, t) = threshold_index(2, |m| Ok(vec![BigUint::from(m * m)]), &a, &max).unwrap();
        assert_eq!(m0, 2);
        assert_eq!(t[0].detail[0], "2^4 > 5");
        let zero = LogBound::exact_log(&BigUint::one());
        assert_eq!(threshold_index(2, |m| Ok(vec![BigUint::from(m)]), &a, &zero).unwrap().0, 2);
        let bad = [LogBound { lower: 0.0, upper: 0.0, exp: None }];
        assert!(matches!(
            threshold_index(2, |m| Ok(vec![BigUint::from(m)]), &bad, &max),
            Err(Error::InvalidCertificate(_))
        ));
    }

    #[test]
    fn certificate_from_fermat_hits() {
        let s = power_system(2).unwrap();
        let y = Hypersurface::fermat_line();
        let report = check_fermat_property(&s, &SystemIndex::Scalar(2), &y, 5).unwrap();
        let pts: Vec<Point> = report.points_found.iter().map(|h| h.point.clone()).collect();
        let a = min_positive_height(&s, 2, 1e-9).unwrap();
        let cert = certify_threshold(&s, &pts, &a, 1e-9).unwrap();
        assert_eq!(cert.m0, SystemIndex::Scalar(3));
        assert_eq!(cert.max_height.exp.as_deref(), Some("5"));
        assert!(cert.is_consistent());
        assert!(matches!(certify_threshold(&s, &[], &a, 1e-9), Err(Error::InvalidCertificate(_))));
        let sq = certify_threshold_with_law(&s, &pts, &a, 1e-9, DegreeLaw::Square).unwrap();
        assert_eq!(sq.m0, SystemIndex::Scalar(2));
        assert_eq!(sq.degree_at_m0, Degree::Scalar(BigUint::from(4u32)));
    }

    #[test]
    fn fermat_line_cubed_certificate_holds_empirically() {
        let s = power_system(2).unwrap();
        let y = Hypersurface::fermat_line();
        let report = check_fermat_property(&s, &SystemIndex::Scalar(3), &y, 20).unwrap();
        let pts: Vec<Point> = report.points_found.iter().map(|h| h.point.clone()).collect();
        let a = min_positive_height(&s, 2, 1e-9).unwrap();
        let cert = certify_threshold(&s, &pts, &a, 1e-9).unwrap();
        assert_eq!(cert.m0, SystemIndex::Scalar(2));
        let check = verify_certificate_empirically(&cert, &s, &y, &SystemIndex::Scalar(3), 20, &[3]).unwrap();
        assert!(check.passed());
        assert_eq!(check.samples[0].index, SystemIndex::Scalar(9));
    }

    #[test]
    fn additive_pullbacks_agree() {
        let s = iteration_system(BaseSpec::Chebyshev { degree: 2 }).unwrap();
        let y = Hypersurface::fiber(BigRational::from_integer(BigInt::from(7))).unwrap();
        for x in -12i64..=12 {
            for w in 1..=5 {
                let Ok(p) = ProjectivePoint::from_i64s(&[x, w]) else { continue };
                let p: Point = p.into();
                let fp = s.eval(&SystemIndex::Scalar(2), &p).unwrap();
                assert_eq!(
                    member_yn(&s, &SystemIndex::Scalar(3), &y, &p).unwrap(),
                    member_yn(&s, &SystemIndex::Scalar(1), &y, &fp).unwrap()
                );
            }
        }
        // 3 = T_2(±sqrt 5) has no rational preimage, but T_2(3) = 7
        assert!(member_yn(&s, &SystemIndex::Scalar(1), &y, &pt(&[3, 1])).unwrap());
    }
}
