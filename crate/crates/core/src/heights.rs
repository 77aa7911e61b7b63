//! Naive and canonical heights, the height-zero decision procedure and the
//! minimum positive canonical height over a search region.
//!
//! For a `P^1` map `f = (F : G)` of degree `d` and a primitive lift `x_j` of the
//! `j`-th orbit point,
//!
//! ```text
//! h(x_{j+1}) = d h(x_j) + eta(x_j) - log g_j,
//! eta(v)     = log max(|F(v)|, |G(v)|) - d log max|v|,
//! g_j        = gcd(F(x_j), G(x_j)),
//! ```
//!
//! so `h_F(x) = h(x) + sum_j (eta(x_j) - log g_j) / d^(j+1)`. Every `g_j`
//! divides the Bezout scale `r` of the cofactor identities
//! `A F + B G = r X^(2d-1)`, `A' F + B' G = r W^(2d-1)`, so it is computed
//! exactly from residues modulo a power of `r`; `eta` depends only on the real
//! point and is enclosed with interval arithmetic. Each summand lies in
//! `[-C, C]` with `C = log max(||F||_1, ||G||_1, ||A||_1 + ||B||_1, ...)`,
//! which bounds the tail after `k` steps by `C / (d^k (d - 1))`. The value
//! equals `h(f^k(x)) / d^k` up to that tail without ever forming `f^k(x)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{Point, ProductPoint, ProjectivePoint};
use crate::endo::{BaseMap, EndoSystem, P1Morphism, SystemIndex};
use crate::error::{Error, Result};
use crate::interval::{ln_biguint, DyadicInterval, Interval};
use crate::poly::{bezout_cofactors, BinaryForm};
use crate::search::{search_order_key, search_points};

/// Iteration cap for the orbit decision procedure.
const MAX_ORBIT_STEPS: usize = 100_000;
/// Iteration cap for canonical height refinement.
const MAX_HEIGHT_STEPS: u32 = 600;
/// Fixed-point bits for the floating orbit in the height series.
const INITIAL_ORBIT_PRECISION: u32 = 256;
const MAX_ORBIT_PRECISION: u32 = 1 << 16;

/// `log max |coords|` of the primitive representative, summed over factors.
pub fn naive_height(p: &Point) -> f64 {
    naive_height_interval(p).mid()
}

pub fn naive_height_interval(p: &Point) -> Interval {
    p.factor_slice()
        .iter()
        .map(|f| ln_biguint(f.max_abs().magnitude()))
        .fold(Interval::zero(), Interval::add)
}

fn max_abs_u(p: &ProjectivePoint) -> BigUint {
    p.max_abs().magnitude().clone()
}

/// Explicit constant `C` with `|h(f(y)) - d h(y)| <= C` for every rational `y`,
/// together with the data certifying it. `C = log exp_bound` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightDifferenceBound {
    /// `C`, rounded up.
    pub c: f64,
    pub exp_bound: BigUint,
    pub degree: u64,
    /// `max(||F||_1, ||G||_1)`: the upper direction.
    pub upper_norm: BigUint,
    /// `max(||A||_1 + ||B||_1, ||A'||_1 + ||B'||_1)`: the lower direction.
    pub lower_norm: BigUint,
    /// Common right-hand scale `r` of the two cofactor identities.
    pub scale: BigUint,
    pub resultant: BigInt,
    /// `[A, B, A', B']`; absent for coordinatewise power maps.
    pub cofactors: Option<[BinaryForm; 4]>,
}

#[derive(Serialize)]
struct BoundRepr<'a> {
    c: f64,
    exp_bound: String,
    degree: u64,
    upper_norm: String,
    lower_norm: String,
    scale: String,
    resultant: String,
    cofactors: Option<Vec<Vec<String>>>,
    #[serde(skip)]
    _p: std::marker::PhantomData<&'a ()>,
}

impl Serialize for HeightDifferenceBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BoundRepr {
            c: self.c,
            exp_bound: self.exp_bound.to_string(),
            degree: self.degree,
            upper_norm: self.upper_norm.to_string(),
            lower_norm: self.lower_norm.to_string(),
            scale: self.scale.to_string(),
            resultant: self.resultant.to_string(),
            cofactors: self.cofactors.as_ref().map(|cs| {
                cs.iter()
                    .map(|f| f.coeffs().iter().map(|c| c.to_string()).collect())
                    .collect()
            }),
            _p: std::marker::PhantomData,
        }
        .serialize(s)
    }
}

impl HeightDifferenceBound {
    /// The bound for a coordinatewise power map: `C = 0`.
    pub fn exact_power(degree: u64) -> Self {
        HeightDifferenceBound {
            c: 0.0,
            exp_bound: BigUint::one(),
            degree,
            upper_norm: BigUint::one(),
            lower_norm: BigUint::one(),
            scale: BigUint::one(),
            resultant: BigInt::one(),
            cofactors: None,
        }
    }

    pub fn for_base(map: &BaseMap) -> Result<Self> {
        match map {
            BaseMap::Power { degree, .. } => Ok(Self::exact_power(*degree)),
            BaseMap::P1(m) => height_difference_bound(m),
        }
    }

    /// `C / (d - 1)`: every height-zero point has naive height at most this.
    pub fn decision_threshold(&self) -> Interval {
        if self.exp_bound.is_one() {
            return Interval::exact(0.0);
        }
        let c = ln_biguint(&self.exp_bound);
        c.div(Interval::exact((self.degree - 1) as f64))
    }

    /// Exact test of `(d - 1) h(y) > C`, i.e. `H(y)^(d-1) > exp_bound`.
    pub fn exceeds_threshold(&self, y: &ProjectivePoint) -> bool {
        let h = max_abs_u(y);
        h.pow((self.degree - 1) as u32) > self.exp_bound
    }

    /// Exact test of `|h(f(y)) - d h(y)| <= C` on multiplicative heights.
    pub fn holds_at(&self, y: &ProjectivePoint, image: &ProjectivePoint) -> bool {
        let hy = max_abs_u(y).pow(self.degree as u32);
        let hf = max_abs_u(image);
        hf <= &self.exp_bound * &hy && hy <= &self.exp_bound * &hf
    }

    /// Re-derives the certificate against `map`: the cofactor identities and
    /// both norms must reproduce exactly.
    pub fn recheck(&self, map: &P1Morphism) -> bool {
        let Some([a1, b1, a2, b2]) = &self.cofactors else {
            return map == &P1Morphism::monomial(map.degree()) && self.exp_bound.is_one();
        };
        let d = map.degree();
        let scale = BigInt::from(self.scale.clone());
        let target = |in_x: bool| {
            let t = BinaryForm::pure_power(2 * d - 1, in_x);
            BinaryForm::new(2 * d - 1, t.coeffs().iter().map(|c| c * &scale).collect())
        };
        let id1 = a1.mul(map.f()).add(&b1.mul(map.g())) == target(true);
        let id2 = a2.mul(map.f()).add(&b2.mul(map.g())) == target(false);
        let upper = map.f().l1_norm().max(map.g().l1_norm());
        let lower = (a1.l1_norm() + b1.l1_norm()).max(a2.l1_norm() + b2.l1_norm());
        id1 && id2
            && upper.magnitude() == &self.upper_norm
            && lower.magnitude() == &self.lower_norm
            && self.exp_bound == (&self.upper_norm).max(&self.lower_norm).clone()
            && !self.resultant.is_zero()
    }

    /// Range of `eta - log g` over all primitive points: `(r/g) H^d <= lower * max(|F|,|G|)/g`
    /// and `g | r` give `-log lower <= eta - log g <= log upper`.
    fn eta_range(&self) -> Interval {
        let lo = ln_biguint(&self.lower_norm).neg().lo;
        let hi = ln_biguint(&self.upper_norm).hi;
        Interval::new(lo.min(hi), hi)
    }
}

/// Builds `C` from coefficient norms (upper direction) and Sylvester-matrix
/// cofactors of `X^(2d-1)` and `W^(2d-1)` (lower direction).
pub fn height_difference_bound(map: &P1Morphism) -> Result<HeightDifferenceBound> {
    let resultant = map.resultant();
    if resultant.is_zero() {
        return Err(Error::NotAMorphism);
    }
    let d = map.degree();
    let (f, g) = (map.f(), map.g());
    let c1 = bezout_cofactors(f, g, &BinaryForm::pure_power(2 * d - 1, true)).ok_or(Error::NotAMorphism)?;
    let c2 = bezout_cofactors(f, g, &BinaryForm::pure_power(2 * d - 1, false)).ok_or(Error::NotAMorphism)?;
    let scale = c1.scale.lcm(&c2.scale);
    let lift = |form: &BinaryForm, s: &BigInt| {
        let k = &scale / s;
        BinaryForm::new(form.degree(), form.coeffs().iter().map(|c| c * &k).collect())
    };
    let cof = [lift(&c1.a, &c1.scale), lift(&c1.b, &c1.scale), lift(&c2.a, &c2.scale), lift(&c2.b, &c2.scale)];
    let upper = f.l1_norm().max(g.l1_norm());
    let lower = (cof[0].l1_norm() + cof[1].l1_norm()).max(cof[2].l1_norm() + cof[3].l1_norm());
    let upper_norm = upper.magnitude().clone();
    let lower_norm = lower.magnitude().clone();
    let exp_bound = (&upper_norm).max(&lower_norm).clone();
    Ok(HeightDifferenceBound {
        c: if exp_bound.is_one() { 0.0 } else { ln_biguint(&exp_bound).hi },
        exp_bound,
        degree: d as u64,
        upper_norm,
        lower_norm,
        scale: scale.magnitude().clone(),
        resultant,
        cofactors: Some(cof),
    })
}

/// A canonical height enclosed in `[value - error_radius, value + error_radius]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalHeightResult {
    pub value: f64,
    pub error_radius: f64,
    pub iterations: u32,
    /// `exp(h_F)` when the height is the log of a known integer.
    #[serde(skip)]
    pub exact: Option<BigUint>,
}

impl CanonicalHeightResult {
    fn exact_log(n: BigUint) -> Self {
        let l = ln_biguint(&n);
        CanonicalHeightResult {
            value: l.mid(),
            error_radius: if n.is_one() { 0.0 } else { l.radius() },
            iterations: 0,
            exact: Some(n),
        }
    }

    fn zero(iterations: u32) -> Self {
        CanonicalHeightResult {
            value: 0.0,
            error_radius: 0.0,
            iterations,
            exact: Some(BigUint::one()),
        }
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.error_radius).next_down()
    }

    pub fn upper(&self) -> f64 {
        (self.value + self.error_radius).next_up()
    }

    pub fn enclosure(&self) -> Interval {
        Interval::new(self.lower(), self.upper())
    }

    fn sum(parts: &[CanonicalHeightResult]) -> Self {
        let exact = parts
            .iter()
            .map(|p| p.exact.clone())
            .try_fold(BigUint::one(), |acc, e| e.map(|e| acc * e));
        if let Some(n) = exact {
            let mut r = Self::exact_log(n);
            r.iterations = parts.iter().map(|p| p.iterations).max().unwrap_or(0);
            return r;
        }
        let total = parts.iter().fold(Interval::zero(), |acc, p| acc.add(p.enclosure()));
        CanonicalHeightResult {
            value: total.mid(),
            error_radius: total.radius(),
            iterations: parts.iter().map(|p| p.iterations).max().unwrap_or(0),
            exact: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Zero,
    Positive,
}

/// Outcome of the orbit procedure, with the data needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "witness", rename_all = "snake_case")]
pub enum Witness {
    /// `orbit[i+1] = f(orbit[i])` and `f(orbit.last()) = orbit[cycle_start]`.
    Cycle {
        map_index: u64,
        orbit: Vec<ProjectivePoint>,
        cycle_start: usize,
    },
    /// The last orbit point satisfies `H^(d-1) > exp_bound`.
    Escape {
        map_index: u64,
        orbit: Vec<ProjectivePoint>,
        degree: u64,
        exp_bound: String,
    },
    Product { factors: Vec<HeightZeroCertificate> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightZeroCertificate {
    pub verdict: Verdict,
    #[serde(flatten)]
    pub witness: Witness,
}

impl HeightZeroCertificate {
    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }

    /// Replays the witness against `system` by exact evaluation.
    pub fn recheck(&self, system: &EndoSystem) -> Result<bool> {
        match &self.witness {
            Witness::Product { factors } => {
                if !system.is_product() || factors.len() != system.factors().len() {
                    return Ok(false);
                }
                let all_zero = factors.iter().all(|f| f.is_zero());
                if (self.verdict == Verdict::Zero) != all_zero {
                    return Ok(false);
                }
                for (c, s) in factors.iter().zip(system.factors()) {
                    if !c.recheck(s)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Witness::Cycle { map_index, orbit, cycle_start } => {
                if self.verdict != Verdict::Zero || orbit.is_empty() || *cycle_start >= orbit.len() {
                    return Ok(false);
                }
                let map = system.member(*map_index)?;
                for w in orbit.windows(2) {
                    if map.eval(&w[0])? != w[1] {
                        return Ok(false);
                    }
                }
                Ok(map.eval(orbit.last().expect("nonempty"))? == orbit[*cycle_start])
            }
            Witness::Escape { map_index, orbit, .. } => {
                if self.verdict != Verdict::Positive || orbit.is_empty() {
                    return Ok(false);
                }
                let map = system.member(*map_index)?;
                let bound = HeightDifferenceBound::for_base(&map)?;
                for w in orbit.windows(2) {
                    if map.eval(&w[0])? != w[1] {
                        return Ok(false);
                    }
                }
                Ok(bound.exceeds_threshold(orbit.last().expect("nonempty")))
            }
        }
    }
}

/// Iteration data for one factor: the member map and its height bound.
#[derive(Clone, Debug)]
struct FactorDynamics {
    map_index: u64,
    map: BaseMap,
    bound: HeightDifferenceBound,
}

impl FactorDynamics {
    fn new(system: &EndoSystem, index: u64) -> Result<Self> {
        let map = system.member(index)?;
        if map.degree() < 2 {
            return Err(Error::Unsupported(format!(
                "member f_{index} has degree {} < 2",
                map.degree()
            )));
        }
        let bound = HeightDifferenceBound::for_base(&map)?;
        Ok(FactorDynamics { map_index: index, map, bound })
    }

    fn decide(&self, p: &ProjectivePoint) -> Result<HeightZeroCertificate> {
        let mut orbit = vec![p.clone()];
        let mut seen: HashMap<ProjectivePoint, usize> = HashMap::new();
        seen.insert(p.clone(), 0);
        loop {
            let y = orbit.last().expect("nonempty");
            if self.bound.exceeds_threshold(y) {
                return Ok(HeightZeroCertificate {
                    verdict: Verdict::Positive,
                    witness: Witness::Escape {
                        map_index: self.map_index,
                        degree: self.bound.degree,
                        exp_bound: self.bound.exp_bound.to_string(),
                        orbit,
                    },
                });
            }
            let next = self.map.eval(y)?;
            if let Some(&start) = seen.get(&next) {
                return Ok(HeightZeroCertificate {
                    verdict: Verdict::Zero,
                    witness: Witness::Cycle {
                        map_index: self.map_index,
                        orbit,
                        cycle_start: start,
                    },
                });
            }
            if orbit.len() >= MAX_ORBIT_STEPS {
                return Err(Error::Unsupported(format!(
                    "orbit of {p} did not settle within {MAX_ORBIT_STEPS} steps"
                )));
            }
            seen.insert(next.clone(), orbit.len());
            orbit.push(next);
        }
    }

    fn canonical_height(&self, p: &ProjectivePoint, tol: f64) -> Result<CanonicalHeightResult> {
        match &self.map {
            BaseMap::Power { .. } => Ok(CanonicalHeightResult::exact_log(max_abs_u(p))),
            BaseMap::P1(m) => {
                let cert = self.decide(p)?;
                if cert.is_zero() {
                    let steps = match &cert.witness {
                        Witness::Cycle { orbit, .. } => orbit.len() as u32,
                        _ => 0,
                    };
                    return Ok(CanonicalHeightResult::zero(steps));
                }
                p1_canonical_height(m, &self.bound, p, tol)
            }
        }
    }
}

#[derive(Clone)]
enum Chart {
    /// The point `(1 : t)`.
    X(DyadicInterval),
    /// The point `(t : 1)`.
    W(DyadicInterval),
}

impl Chart {
    fn from_exact(x: &BigInt, w: &BigInt, prec: u32) -> Chart {
        if x.magnitude() >= w.magnitude() {
            Chart::X(DyadicInterval::ratio(w, x, prec))
        } else {
            Chart::W(DyadicInterval::ratio(x, w, prec))
        }
    }

    fn coords(&self) -> (DyadicInterval, DyadicInterval) {
        match self {
            Chart::X(t) => (DyadicInterval::exact_int(&BigInt::one(), t.prec), t.clone()),
            Chart::W(t) => (t.clone(), DyadicInterval::exact_int(&BigInt::one(), t.prec)),
        }
    }
}

/// `sum_i c_i x^i w^(d-i)` by Horner in `x`.
fn eval_form_dyadic(form: &[BigInt], x: &DyadicInterval, w: &DyadicInterval) -> DyadicInterval {
    let prec = x.prec;
    let mut acc = DyadicInterval::exact_int(&BigInt::zero(), prec);
    let mut wpow = DyadicInterval::exact_int(&BigInt::one(), prec);
    for c in form.iter().rev() {
        acc = acc.mul(x).add(&wpow.scale_int(c));
        wpow = wpow.mul(w);
    }
    acc
}

/// Encloses the telescoping sum after `k` steps, tracking the orbit in
/// `prec`-bit fixed point; returns (enclosure, tail).
fn telescoping_enclosure(
    map: &P1Morphism,
    bound: &HeightDifferenceBound,
    p: &ProjectivePoint,
    k: u32,
    prec: u32,
) -> (Interval, f64) {
    let d = map.degree() as u64;
    let global = bound.eta_range();
    let scale = BigInt::from(bound.scale.clone());
    let track_gcd = !scale.is_one();
    let [x0, w0] = [&p.coords()[0], &p.coords()[1]];
    let mut modulus = if track_gcd { scale.pow(k + 1) } else { BigInt::one() };
    let (mut a, mut b) = (x0.mod_floor(&modulus), w0.mod_floor(&modulus));
    let mut chart = Some(Chart::from_exact(x0, w0, prec));
    let mut sum = Interval::zero();
    let mut dpow = Interval::exact(1.0);
    for _ in 0..k {
        dpow = dpow.scale(d as f64);
        let ln_g = if track_gcd {
            let fr = map.f().eval_mod(&a, &b, &modulus);
            let gr = map.g().eval_mod(&a, &b, &modulus);
            let g = fr.gcd(&gr).gcd(&scale);
            a = &fr / &g;
            b = &gr / &g;
            modulus = &modulus / &g;
            ln_biguint(g.magnitude())
        } else {
            Interval::zero()
        };
        let eta = match chart.take() {
            Some(c) => {
                let (x, w) = c.coords();
                let fv = eval_form_dyadic(map.f().coeffs(), &x, &w);
                let gv = eval_form_dyadic(map.g().coeffs(), &x, &w);
                let size = fv.to_interval().abs().max(gv.to_interval().abs());
                let norm = x.to_interval().abs().max(w.to_interval().abs());
                let eta = if size.lo > 0.0 && size.is_finite() && norm.lo > 0.0 {
                    size.ln().sub(norm.ln().scale(d as f64))
                } else {
                    global
                };
                let f_ok = !fv.contains_zero();
                let g_ok = !gv.contains_zero();
                chart = if f_ok && (!g_ok || fv.abs().lo >= gv.abs().lo) {
                    Some(Chart::X(gv.div(&fv)))
                } else if g_ok {
                    Some(Chart::W(fv.div(&gv)))
                } else {
                    None
                };
                if let Some(Chart::X(t) | Chart::W(t)) = &chart {
                    if !(t.width().hi <= 1.0) {
                        chart = None;
                    }
                }
                eta
            }
            None => global,
        };
        let term = eta.sub(ln_g).intersect(global);
        sum = sum.add(term.div(dpow));
    }
    let c = bound.c;
    let tail = if c == 0.0 {
        0.0
    } else {
        (c / (dpow.lo * (d - 1) as f64)).next_up()
    };
    (sum, tail)
}

fn p1_canonical_height(
    map: &P1Morphism,
    bound: &HeightDifferenceBound,
    p: &ProjectivePoint,
    tol: f64,
) -> Result<CanonicalHeightResult> {
    let d = map.degree() as f64;
    let c = bound.c;
    let mut k: u32 = 0;
    if c > 0.0 {
        while c / ((d - 1.0) * d.powi(k as i32)) > tol / 4.0 {
            k += 1;
        }
    }
    let h0 = ln_biguint(&max_abs_u(p));
    let mut prec = INITIAL_ORBIT_PRECISION;
    loop {
        let (sum, tail) = telescoping_enclosure(map, bound, p, k, prec);
        let total = h0.add(sum);
        let (mut value, mut radius) = (total.mid(), (total.radius() + tail).next_up());
        // h_F >= 0
        if value < 0.0 {
            let hi = (value + radius).next_up().max(0.0);
            value = hi / 2.0;
            radius = (hi / 2.0).next_up();
        }
        if radius <= tol {
            return Ok(CanonicalHeightResult {
                value,
                error_radius: radius,
                iterations: k,
                exact: None,
            });
        }
        if k >= MAX_HEIGHT_STEPS {
            return Err(Error::Unsupported(format!(
                "canonical height of {p} not resolved to {tol:e} within {k} steps (radius {radius:e})"
            )));
        }
        k = (k + 16).min(MAX_HEIGHT_STEPS);
        prec = (prec * 2).min(MAX_ORBIT_PRECISION);
    }
}

/// Canonical height machinery for one system, iterating a fixed member per
/// factor (the start index unless chosen otherwise).
#[derive(Clone, Debug)]
pub struct HeightEngine {
    factors: Vec<FactorDynamics>,
    product: bool,
}

impl HeightEngine {
    pub fn new(system: &EndoSystem) -> Result<Self> {
        let start = system.start_index().clone();
        Self::with_member(system, &start)
    }

    /// Iterates `f_index` instead of the smallest member.
    pub fn with_member(system: &EndoSystem, index: &SystemIndex) -> Result<Self> {
        let indices: Vec<u64> = match index {
            SystemIndex::Scalar(n) if !system.is_product() => vec![*n],
            SystemIndex::Multi(m) if system.is_product() && m.arity() == system.factors().len() => {
                m.entries().to_vec()
            }
            _ => {
                return Err(Error::Dimension {
                    expected: system.factors().len(),
                    found: match index {
                        SystemIndex::Scalar(_) => 1,
                        SystemIndex::Multi(m) => m.arity(),
                    },
                })
            }
        };
        let factors = system
            .factors()
            .iter()
            .zip(indices)
            .map(|(s, i)| FactorDynamics::new(s, i))
            .collect::<Result<_>>()?;
        Ok(HeightEngine {
            factors,
            product: system.is_product(),
        })
    }

    pub fn bounds(&self) -> Vec<&HeightDifferenceBound> {
        self.factors.iter().map(|f| &f.bound).collect()
    }

    fn split<'a>(&self, p: &'a Point) -> Result<&'a [ProjectivePoint]> {
        let parts = p.factor_slice();
        if self.product != matches!(p, Point::Product(_)) || parts.len() != self.factors.len() {
            return Err(Error::Dimension {
                expected: self.factors.len(),
                found: parts.len(),
            });
        }
        for (f, x) in self.factors.iter().zip(parts) {
            if f.map.dim() != x.dimension() {
                return Err(Error::Dimension {
                    expected: f.map.dim(),
                    found: x.dimension(),
                });
            }
        }
        Ok(parts)
    }

    pub fn canonical_height(&self, p: &Point, tol: f64) -> Result<CanonicalHeightResult> {
        if !(tol > 0.0) {
            return Err(Error::InvalidTolerance);
        }
        let parts = self.split(p)?;
        let n = parts.len() as f64;
        let results = self
            .factors
            .iter()
            .zip(parts)
            .map(|(f, x)| f.canonical_height(x, tol / n))
            .collect::<Result<Vec<_>>>()?;
        if results.len() == 1 {
            return Ok(results.into_iter().next().expect("one factor"));
        }
        Ok(CanonicalHeightResult::sum(&results))
    }

    pub fn is_height_zero(&self, p: &Point) -> Result<HeightZeroCertificate> {
        let parts = self.split(p)?;
        let certs = self
            .factors
            .iter()
            .zip(parts)
            .map(|(f, x)| f.decide(x))
            .collect::<Result<Vec<_>>>()?;
        if !self.product {
            return Ok(certs.into_iter().next().expect("one factor"));
        }
        let verdict = if certs.iter().all(|c| c.is_zero()) {
            Verdict::Zero
        } else {
            Verdict::Positive
        };
        Ok(HeightZeroCertificate {
            verdict,
            witness: Witness::Product { factors: certs },
        })
    }
}

/// `h_F(point)` within `tolerance`, iterating the smallest member of the system.
pub fn canonical_height(system: &EndoSystem, point: &Point, tolerance: f64) -> Result<CanonicalHeightResult> {
    HeightEngine::new(system)?.canonical_height(point, tolerance)
}

/// Decides `h_F(point) = 0` with a replayable witness.
pub fn is_height_zero(system: &EndoSystem, point: &Point) -> Result<HeightZeroCertificate> {
    HeightEngine::new(system)?.is_height_zero(point)
}

/// A rigorous lower bound for the smallest positive canonical height found
/// among points with coordinates in `[-H, H]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinPositiveHeight {
    /// `a_lower`.
    pub value: f64,
    /// Upper bound of `h_F` at the attaining point.
    pub upper: f64,
    pub region_bound: u64,
    pub attaining_point: Point,
    /// No rational point outside the region has smaller positive height.
    pub certified_global: bool,
    /// `C / (d - 1)`, rounded up (for products, the largest over factors).
    pub decision_threshold: f64,
    /// `exp(a)` when `a` is the log of a known integer.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_biguint_str")]
    pub exact: Option<BigUint>,
    /// Per-factor minima of a product system.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<MinPositiveHeight>,
}

impl MinPositiveHeight {
    pub fn lower_interval(&self) -> Interval {
        match &self.exact {
            Some(n) => ln_biguint(n),
            None => Interval::new(self.value, self.value),
        }
    }

    /// Per-factor minima, or `self` for a single system.
    pub fn per_factor(&self) -> Vec<&MinPositiveHeight> {
        if self.factors.is_empty() {
            vec![self]
        } else {
            self.factors.iter().collect()
        }
    }
}

mod opt_biguint_str {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(n) => s.serialize_str(&n.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        use serde::de::Error;
        Option::<String>::deserialize(d)?
            .map(|s| s.parse::<BigUint>().map_err(D::Error::custom))
            .transpose()
    }
}

struct Candidate {
    height: CanonicalHeightResult,
    point: ProjectivePoint,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    let ord = match (&a.height.exact, &b.height.exact) {
        (Some(x), Some(y)) => x.cmp(y),
        _ => a.height.lower().total_cmp(&b.height.lower()),
    };
    let ord = ord.then_with(|| {
        search_order_key(&a.point.clone().into()).cmp(&search_order_key(&b.point.clone().into()))
    });
    if ord.is_le() {
        a
    } else {
        b
    }
}

fn single_min_height(system: &EndoSystem, h: u64, tol: f64) -> Result<MinPositiveHeight> {
    let engine = HeightEngine::new(system)?;
    let factor = &engine.factors[0];
    let points: Vec<ProjectivePoint> = search_points(&system.space(), h)
        .map(|p| match p {
            Point::Projective(x) => x,
            Point::Product(_) => unreachable!("single system"),
        })
        .collect();
    let candidates = points
        .par_iter()
        .map(|x| -> Result<Option<Candidate>> {
            if factor.decide(x)?.is_zero() {
                return Ok(None);
            }
            Ok(Some(Candidate {
                height: factor.canonical_height(x, tol)?,
                point: x.clone(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = candidates
        .into_iter()
        .flatten()
        .reduce(better)
        .ok_or(Error::BoundTooSmall(h))?;
    let threshold = factor.bound.decision_threshold();
    let ln_h = ln_biguint(&BigUint::from(h));
    let certified = match &best.height.exact {
        Some(n) if factor.bound.exp_bound.is_one() => n <= &BigUint::from(h),
        _ => best.height.lower() <= ln_h.lo - threshold.hi,
    };
    Ok(MinPositiveHeight {
        value: best.height.lower().max(0.0),
        upper: best.height.upper(),
        region_bound: h,
        attaining_point: Point::Projective(best.point),
        certified_global: certified,
        decision_threshold: threshold.hi,
        exact: best.height.exact.clone(),
        factors: Vec::new(),
    })
}

/// `a(h_F)` estimated over the box `[-H, H]`, with a certification flag.
/// Product systems are handled factorwise: the minimum positive height of a
/// product is the smallest factor minimum.
pub fn min_positive_height(system: &EndoSystem, h: u64, tol: f64) -> Result<MinPositiveHeight> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance);
    }
    if h == 0 {
        return Err(Error::BoundTooSmall(0));
    }
    if !system.is_product() {
        return single_min_height(system, h, tol);
    }
    let factors = system
        .factors()
        .iter()
        .map(|s| single_min_height(s, h, tol))
        .collect::<Result<Vec<_>>>()?;
    let (best_i, best) = factors
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| match (&a.exact, &b.exact) {
            (Some(x), Some(y)) => x.cmp(y),
            _ => a.value.total_cmp(&b.value),
        })
        .expect("nonempty product");
    let mut attaining = Vec::with_capacity(factors.len());
    for (i, s) in system.factors().iter().enumerate() {
        if i == best_i {
            attaining.push(best.attaining_point.as_projective().expect("factor point").clone());
            continue;
        }
        let engine = HeightEngine::new(s)?;
        let zero = search_points(&s.space(), h)
            .find_map(|p| match engine.is_height_zero(&p) {
                Ok(c) if c.is_zero() => Some(Ok(p)),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            })
            .transpose()?
            .ok_or_else(|| Error::Unsupported("factor has no height-zero point in the region".into()))?;
        attaining.push(zero.as_projective().expect("factor point").clone());
    }
    Ok(MinPositiveHeight {
        value: best.value,
        upper: best.upper,
        region_bound: h,
        attaining_point: Point::Product(ProductPoint::new(attaining)?),
        certified_global: factors.iter().all(|f| f.certified_global),
        decision_threshold: factors.iter().map(|f| f.decision_threshold).fold(0.0, f64::max),
        exact: best.exact.clone(),
        factors,
    })
}

/// Shared handle used by the search-heavy modules.
pub type SharedEngine = Arc<HeightEngine>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{chebyshev_morphism, chebyshev_system, lattes_system, power_system, product_system, WeierstrassCurve};

    fn pt(c: &[i64]) -> Point {
        ProjectivePoint::from_i64s(c).unwrap().into()
    }

    #[test]
    fn naive_heights() {
        assert!((naive_height(&pt(&[1, 2, 3])) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(naive_height(&pt(&[0, 1])), 0.0);
        let p = Point::Product(
            ProductPoint::new(vec![
                ProjectivePoint::from_i64s(&[1, 2]).unwrap(),
                ProjectivePoint::from_i64s(&[1, 3]).unwrap(),
            ])
            .unwrap(),
        );
        assert!((naive_height(&p) - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn power_map_bound_is_zero() {
        let b = height_difference_bound(&P1Morphism::monomial(5)).unwrap();
        assert_eq!(b.c, 0.0);
        assert!(b.exp_bound.is_one());
        assert!(b.recheck(&P1Morphism::monomial(5)));
    }

    #[test]
    fn chebyshev_bound_rechecks() {
        let t2 = chebyshev_morphism(2).unwrap();
        let b = height_difference_bound(&t2).unwrap();
        assert!(b.c > 0.0);
        assert_eq!(b.exp_bound, BigUint::from(3u32));
        assert!(b.recheck(&t2));
        for x in -20i64..20 {
            for w in 1i64..15 {
                if let Ok(y) = ProjectivePoint::from_i64s(&[x, w]) {
                    assert!(b.holds_at(&y, &t2.eval(&y).unwrap()), "{y}");
                }
            }
        }
    }

    #[test]
    fn power_heights_are_exact() {
        let s = power_system(1).unwrap();
        let r = canonical_height(&s, &pt(&[1, 2]), 1e-9).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.exact, Some(BigUint::from(2u32)));
        assert!(r.error_radius < 1e-15);
    }

    #[test]
    fn chebyshev_heights() {
        let s = chebyshev_system();
        let r = canonical_height(&s, &pt(&[2, 1]), 1e-8).unwrap();
        assert_eq!(r.value, 0.0);
        // T_N(z + 1/z) = z^N + z^-N: h_F(3) = log((3 + sqrt 5)/2)
        let r = canonical_height(&s, &pt(&[3, 1]), 1e-10).unwrap();
        let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((r.value - expect).abs() <= r.error_radius + 1e-15, "{r:?} vs {expect}");
        assert!(r.error_radius <= 1e-10);
        // 1/2 = z + 1/z has z on the unit circle; the height is purely 2-adic: log 2
        let r = canonical_height(&s, &pt(&[1, 2]), 1e-10).unwrap();
        assert!((r.value - 2f64.ln()).abs() <= r.error_radius + 1e-15, "{r:?}");
    }

    #[test]
    fn functional_equation_chebyshev() {
        let s = chebyshev_system();
        let x = canonical_height(&s, &pt(&[3, 1]), 1e-9).unwrap();
        let fx = canonical_height(&s, &pt(&[7, 1]), 1e-9).unwrap();
        assert!((fx.value - 2.0 * x.value).abs() <= fx.error_radius + 2.0 * x.error_radius);
    }

    #[test]
    fn height_zero_examples() {
        let s = power_system(3).unwrap();
        let c = is_height_zero(&s, &pt(&[2, -2, 0, 2])).unwrap();
        assert!(c.is_zero());
        assert!(c.recheck(&s).unwrap());
        let s = chebyshev_system();
        let c = is_height_zero(&s, &pt(&[0, 1])).unwrap();
        match &c.witness {
            Witness::Cycle { orbit, cycle_start, .. } => {
                assert_eq!(orbit.len(), 3);
                assert_eq!(orbit[1], ProjectivePoint::from_i64s(&[-2, 1]).unwrap());
                assert_eq!(orbit[2], ProjectivePoint::from_i64s(&[2, 1]).unwrap());
                assert_eq!(*cycle_start, 2);
            }
            w => panic!("expected a cycle, got {w:?}"),
        }
        assert!(c.recheck(&s).unwrap());
        let c = is_height_zero(&s, &pt(&[3, 1])).unwrap();
        assert_eq!(c.verdict, Verdict::Positive);
        assert!(c.recheck(&s).unwrap());
    }

    #[test]
    fn lattes_bound_and_heights() {
        let s = lattes_system(WeierstrassCurve::from_i64(-1, 0).unwrap());
        let engine = HeightEngine::new(&s).unwrap();
        let b = engine.bounds()[0].clone();
        match s.member(2).unwrap() {
            BaseMap::P1(m) => assert!(b.recheck(&m)),
            _ => panic!(),
        }
        // 2-torsion and infinity are height zero
        for c in [[0, 1], [1, 1], [1, -1], [1, 0]] {
            assert!(engine.is_height_zero(&pt(&c)).unwrap().is_zero());
        }
        let x = engine.canonical_height(&pt(&[2, 1]), 1e-8).unwrap();
        let fx = engine.canonical_height(&pt(&[25, 24]), 1e-8).unwrap();
        assert!(x.value > 0.0);
        assert!((fx.value - 4.0 * x.value).abs() <= fx.error_radius + 4.0 * x.error_radius);
    }

    #[test]
    fn min_height_power() {
        let r = min_positive_height(&power_system(1).unwrap(), 3, 1e-9).unwrap();
        assert_eq!(r.attaining_point.to_string(), "(1:2)");
        assert_eq!(r.exact, Some(BigUint::from(2u32)));
        assert!(r.certified_global);
        let r = min_positive_height(&power_system(2).unwrap(), 2, 1e-9).unwrap();
        assert_eq!(r.exact, Some(BigUint::from(2u32)));
        assert!(r.certified_global);
        let prod = product_system(vec![power_system(1).unwrap(), power_system(1).unwrap()]).unwrap();
        let r = min_positive_height(&prod, 2, 1e-9).unwrap();
        assert_eq!(r.exact, Some(BigUint::from(2u32)));
        assert_eq!(r.factors.len(), 2);
        assert!(matches!(
            min_positive_height(&power_system(1).unwrap(), 1, 1e-9),
            Err(Error::BoundTooSmall(1))
        ));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert_eq!(
            canonical_height(&chebyshev_system(), &pt(&[3, 1]), 0.0),
            Err(Error::InvalidTolerance)
        );
    }
}

