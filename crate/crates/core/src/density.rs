//! Natural density of index sets: prime selection, the coprime sieve, the
//! assembled threshold `M_0`, the complement bound over a box, and density
//! scans of Fermat's property over single indices and multi-indices.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{biguint_str, rational_pair, ExactRational, MultiIndex, Point};
use crate::endo::{EndoSystem, SystemIndex};
use crate::error::{Error, Result};
use crate::fermat::{check_fermat_property, Hypersurface};

/// Largest prime `choose_primes` will consider by default.
pub const DEFAULT_PRIME_CEILING: u64 = 10_000_000;
const SEGMENT: u64 = 1 << 18;

fn rational(n: u64, d: u64) -> ExactRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        q
    } else {
        q + 1u32
    }
}

/// Consecutive primes `p_1 < ... < p_l`, all `>= p0`, with
/// `(1 - 1/p_1) ... (1 - 1/p_l) <= epsilon / (4n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimeSelection {
    #[serde(with = "rational_pair")]
    pub epsilon: ExactRational,
    pub arity: usize,
    pub floor: u64,
    pub primes: Vec<u64>,
    #[serde(with = "biguint_str")]
    pub e: BigUint,
    /// `prod (1 - 1/p_j)`.
    #[serde(with = "rational_pair")]
    pub product: ExactRational,
    /// `epsilon / (4n)`.
    #[serde(with = "rational_pair")]
    pub target: ExactRational,
}

impl PrimeSelection {
    /// The defining inequality, checked exactly.
    pub fn satisfied(&self) -> bool {
        self.product <= self.target
    }

    /// Dropping the last prime breaks the inequality.
    pub fn is_minimal(&self) -> bool {
        match self.primes.split_last() {
            None => false,
            Some((_, rest)) => rest.is_empty() || !prefix_satisfies(rest, &self.target),
        }
    }
}

/// Primes in `[from, ceiling]`, generated by a segmented sieve.
struct PrimeStream {
    base: Vec<u64>,
    lo: u64,
    ceiling: u64,
    buffer: std::vec::IntoIter<u64>,
}

impl PrimeStream {
    fn new(from: u64, ceiling: u64) -> Self {
        let root = (ceiling as f64).sqrt() as u64 + 1;
        let mut mark = vec![true; root as usize + 1];
        let mut base = Vec::new();
        for i in 2..=root as usize {
            if mark[i] {
                base.push(i as u64);
                for j in (i * i..=root as usize).step_by(i) {
                    mark[j] = false;
                }
            }
        }
        PrimeStream {
            base,
            lo: from.max(2),
            ceiling,
            buffer: Vec::new().into_iter(),
        }
    }

    fn refill(&mut self) -> bool {
        if self.lo > self.ceiling {
            return false;
        }
        let hi = (self.lo + SEGMENT).min(self.ceiling + 1);
        let mut mark = vec![true; (hi - self.lo) as usize];
        for &p in &self.base {
            if p * p >= hi {
                break;
            }
            let start = (p * p).max(self.lo.div_ceil(p) * p);
            for j in (start..hi).step_by(p as usize) {
                mark[(j - self.lo) as usize] = false;
            }
        }
        let found: Vec<u64> = (self.lo..hi).filter(|&n| mark[(n - self.lo) as usize]).collect();
        self.lo = hi;
        self.buffer = found.into_iter();
        true
    }
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if let Some(p) = self.buffer.next() {
                return Some(p);
            }
            if !self.refill() {
                return None;
            }
        }
    }
}

fn product_tree<I: Fn(u64) -> u64 + Sync>(values: &[u64], f: &I) -> BigUint {
    match values.len() {
        0 => BigUint::one(),
        1 => BigUint::from(f(values[0])),
        n if n < 64 => values.iter().fold(BigUint::one(), |acc, &v| acc * f(v)),
        n => {
            let (a, b) = values.split_at(n / 2);
            let (x, y) = rayon::join(|| product_tree(a, f), || product_tree(b, f));
            x * y
        }
    }
}

fn prefix_satisfies(primes: &[u64], target: &ExactRational) -> bool {
    let num = product_tree(primes, &|p| p - 1);
    let den = product_tree(primes, &|p| p);
    let (tn, td) = (target.numer().magnitude(), target.denom().magnitude());
    num * td <= tn * den
}

/// [`choose_primes_with_ceiling`] with [`DEFAULT_PRIME_CEILING`].
pub fn choose_primes(epsilon: &ExactRational, n: usize, p0: u64) -> Result<PrimeSelection> {
    choose_primes_with_ceiling(epsilon, n, p0, DEFAULT_PRIME_CEILING)
}

/// Greedy selection of consecutive primes from `p0`. A running floating sum of
/// `log(1 - 1/p)` screens candidates; the final list is confirmed and
/// trimmed to minimal length with exact integer products. Fails with
/// [`Error::PrimeBudgetExceeded`] if no prefix below `ceiling` suffices.
pub fn choose_primes_with_ceiling(epsilon: &ExactRational, n: usize, p0: u64, ceiling: u64) -> Result<PrimeSelection> {
    if !(epsilon > &BigRational::zero() && epsilon <= &BigRational::one()) {
        return Err(Error::Precondition("epsilon must lie in (0, 1]".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("arity must be >= 1".into()));
    }
    if p0 < 2 {
        return Err(Error::Precondition("p0 must be >= 2".into()));
    }
    let target = epsilon / BigRational::from_integer(BigInt::from(4 * n as u64));
    let ln_target = target.numer().to_f64().unwrap_or(f64::MAX).ln() - target.denom().to_f64().unwrap_or(f64::MAX).ln();
    let mut primes: Vec<u64> = Vec::new();
    let mut log_sum = 0.0f64;
    let mut stream = PrimeStream::new(p0, ceiling);
    let mut verified = false;
    for p in stream.by_ref() {
        primes.push(p);
        log_sum += (-1.0 / p as f64).ln_1p();
        if log_sum <= ln_target + 1e-9 && prefix_satisfies(&primes, &target) {
            verified = true;
            break;
        }
    }
    if !verified {
        return Err(Error::PrimeBudgetExceeded { ceiling });
    }
    while primes.len() > 1 && prefix_satisfies(&primes[..primes.len() - 1], &target) {
        primes.pop();
    }
    let num = product_tree(&primes, &|p| p - 1);
    let e = product_tree(&primes, &|p| p);
    let product = BigRational::new(BigInt::from(num), BigInt::from(e.clone()));
    Ok(PrimeSelection {
        epsilon: epsilon.clone(),
        arity: n,
        floor: p0,
        primes,
        e,
        product,
        target,
    })
}

fn squarefree_factor(mut e: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= e {
        if e % p == 0 {
            e /= p;
            if e % p == 0 {
                return Err(Error::Precondition(format!("{p}^2 divides e; e must be squarefree")));
            }
            out.push(p);
        }
        p += 1;
    }
    if e > 1 {
        out.push(e);
    }
    Ok(out)
}

/// `#{1 <= i <= m : gcd(i, e) = 1}` for squarefree `e`.
pub fn coprime_count(m: u64, e: u64) -> Result<u64> {
    if e == 0 {
        return Err(Error::Precondition("e must be >= 1".into()));
    }
    Ok(coprime_count_primes(m, &squarefree_factor(e)?))
}

/// Inclusion-exclusion over the distinct primes dividing `e`; divisors
/// exceeding `m` contribute nothing and are pruned.
pub fn coprime_count_primes(m: u64, primes: &[u64]) -> u64 {
    fn walk(m: u64, primes: &[u64], d: u64, sign: i128, acc: &mut i128) {
        for (k, &p) in primes.iter().enumerate() {
            let Some(nd) = d.checked_mul(p) else { continue };
            if nd > m {
                continue;
            }
            *acc -= sign * (m / nd) as i128;
            walk(m, &primes[k + 1..], nd, -sign, acc);
        }
    }
    let mut sorted = primes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut acc = m as i128;
    walk(m, &sorted, 1, 1, &mut acc);
    acc as u64
}

/// `prod (1 - 1/p_j) (m + e)`.
pub fn coprime_count_bound(m: u64, selection: &PrimeSelection) -> ExactRational {
    &selection.product * BigRational::from_integer(BigInt::from(BigUint::from(m) + &selection.e))
}

/// A set `Σ` of multi-indices together with witnesses `Q -> M_Q` such that
/// `Q M ∈ Σ` for all `M >= M_Q`.
pub trait SigmaOracle: Sync {
    fn arity(&self) -> usize;
    fn contains(&self, index: &MultiIndex) -> bool;
    fn witness(&self, q: &MultiIndex) -> Option<MultiIndex>;
}

/// `Σ = {I : gcd(I(i), modulus) != 1 for every i}`; witnesses `M_Q = 1` exist
/// exactly for `Q` whose entries divide `modulus`.
#[derive(Clone, Debug)]
pub struct GcdPatternOracle {
    pub modulus: u64,
    pub arity: usize,
}

impl SigmaOracle for GcdPatternOracle {
    fn arity(&self) -> usize {
        self.arity
    }

    fn contains(&self, index: &MultiIndex) -> bool {
        index.entries().iter().all(|&i| i.gcd(&self.modulus) != 1)
    }

    fn witness(&self, q: &MultiIndex) -> Option<MultiIndex> {
        if q.arity() == self.arity && q.entries().iter().all(|&p| self.modulus % p == 0) {
            MultiIndex::splat(1, self.arity).ok()
        } else {
            None
        }
    }
}

/// `Σ = ∪_Q {Q M : M >= M_Q}` for an explicit finite witness table.
#[derive(Clone, Debug)]
pub struct WitnessTableOracle {
    arity: usize,
    table: BTreeMap<Vec<u64>, MultiIndex>,
}

impl WitnessTableOracle {
    pub fn new(arity: usize, entries: Vec<(MultiIndex, MultiIndex)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (q, m) in entries {
            if q.arity() != arity || m.arity() != arity {
                return Err(Error::Dimension {
                    expected: arity,
                    found: q.arity().max(m.arity()),
                });
            }
            table.insert(q.entries().to_vec(), m);
        }
        Ok(WitnessTableOracle { arity, table })
    }
}

impl SigmaOracle for WitnessTableOracle {
    fn arity(&self) -> usize {
        self.arity
    }

    fn contains(&self, index: &MultiIndex) -> bool {
        self.table.iter().any(|(q, m)| {
            q.iter()
                .zip(index.entries())
                .zip(m.entries())
                .all(|((&q, &i), &mq)| i % q == 0 && i / q >= mq)
        })
    }

    fn witness(&self, q: &MultiIndex) -> Option<MultiIndex> {
        self.table.get(q.entries()).cloned()
    }
}

/// Witnesses for every prime `Q` with `min Q >= p0`:
/// `M_Q(i) = shift + (Q(i) mod modulus)`, and `Σ` is the union they generate.
#[derive(Clone, Debug)]
pub struct ShiftedWitnessOracle {
    pub arity: usize,
    pub p0: u64,
    pub shift: u64,
    pub modulus: u64,
}

impl ShiftedWitnessOracle {
    fn admissible(&self, q: u64, i: u64) -> bool {
        q >= self.p0 && i % q == 0 && i / q >= self.shift + q % self.modulus.max(1)
    }
}

impl SigmaOracle for ShiftedWitnessOracle {
    fn arity(&self) -> usize {
        self.arity
    }

    fn contains(&self, index: &MultiIndex) -> bool {
        // M_Q is coordinatewise, so each entry needs its own admissible prime
        index.arity() == self.arity
            && index.entries().iter().all(|&i| {
                let mut n = i;
                let mut p = 2u64;
                while p * p <= n {
                    if n % p == 0 {
                        if self.admissible(p, i) {
                            return true;
                        }
                        while n % p == 0 {
                            n /= p;
                        }
                    }
                    p += 1;
                }
                n > 1 && self.admissible(n, i)
            })
    }

    fn witness(&self, q: &MultiIndex) -> Option<MultiIndex> {
        if q.arity() != self.arity || !q.is_prime_index() || q.min_entry() < self.p0 {
            return None;
        }
        MultiIndex::new(q.entries().iter().map(|&p| self.shift + p % self.modulus.max(1)).collect()).ok()
    }
}

/// `M_0 = sum over Q ∈ {p_1, ..., p_l}^n of Q M_Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct M0Witness {
    pub m0: MultiIndex,
    pub terms: usize,
}

fn for_each_tuple(primes: &[u64], n: usize, mut f: impl FnMut(&[u64]) -> Result<()>) -> Result<()> {
    let mut digits = vec![0usize; n];
    let mut q = vec![primes[0]; n];
    loop {
        f(&q)?;
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < primes.len() {
                q[pos] = primes[digits[pos]];
                break;
            }
            digits[pos] = 0;
            q[pos] = primes[0];
        }
    }
}

pub fn assemble_m0(oracle: &dyn SigmaOracle, selection: &PrimeSelection) -> Result<M0Witness> {
    let n = oracle.arity();
    if n != selection.arity {
        return Err(Error::Dimension {
            expected: selection.arity,
            found: n,
        });
    }
    let overflow = || Error::Unsupported("M_0 exceeds 64-bit entries".into());
    let mut sum = vec![0u64; n];
    let mut terms = 0usize;
    for_each_tuple(&selection.primes, n, |q| {
        let qi = MultiIndex::new(q.to_vec())?;
        let mq = oracle
            .witness(&qi)
            .ok_or_else(|| Error::IncompleteOracle(format!("no witness M_Q for Q = {qi}")))?;
        for ((s, &p), &m) in sum.iter_mut().zip(q).zip(mq.entries()) {
            *s = s.checked_add(p.checked_mul(m).ok_or_else(overflow)?).ok_or_else(overflow)?;
        }
        terms += 1;
        Ok(())
    })?;
    Ok(M0Witness {
        m0: MultiIndex::new(sum)?,
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    pub trials: usize,
    pub failures: Vec<MultiIndex>,
}

impl InclusionCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random `I >= M_0` whose entries each share a prime with `e` must lie in `Σ`.
pub fn check_inclusion<R: Rng>(
    oracle: &dyn SigmaOracle,
    selection: &PrimeSelection,
    m0: &M0Witness,
    trials: usize,
    rng: &mut R,
) -> Result<InclusionCheck> {
    let mut failures = Vec::new();
    for _ in 0..trials {
        let entries: Vec<u64> = m0
            .m0
            .entries()
            .iter()
            .map(|&a| {
                let p = selection.primes[rng.gen_range(0..selection.primes.len())];
                let k = a.div_ceil(p) + rng.gen_range(0..1000);
                p * k
            })
            .collect();
        let index = MultiIndex::new(entries)?;
        if !oracle.contains(&index) {
            failures.push(index);
        }
    }
    Ok(InclusionCheck { trials, failures })
}

/// `sum (a_i - 1)/m_i + prod(1 - 1/p_j) sum (m_i + e)/m_i`, the bound on the
/// complement density in the box `[1, m]`.
pub fn complement_bound(box_: &[BigUint], m0: &MultiIndex, selection: &PrimeSelection) -> Result<ExactRational> {
    if box_.len() != m0.arity() {
        return Err(Error::Dimension {
            expected: m0.arity(),
            found: box_.len(),
        });
    }
    let mut first = BigRational::zero();
    let mut second = BigRational::zero();
    for (m, &a) in box_.iter().zip(m0.entries()) {
        if m < &BigUint::from(a) {
            return Err(Error::Precondition(format!("box entry {m} is below M_0 entry {a}")));
        }
        let mi = BigInt::from(m.clone());
        first += BigRational::new(BigInt::from(a - 1), mi.clone());
        second += BigRational::new(BigInt::from(m + &selection.e), mi);
    }
    Ok(first + &selection.product * second)
}

/// `b_i` minimal with `(a_i - 1)/b_i <= epsilon/(2n)` and `e/b_i <= epsilon`.
pub fn thresholds(m0: &MultiIndex, selection: &PrimeSelection) -> Vec<BigUint> {
    let eps = &selection.epsilon;
    let (en, ed) = (eps.numer().magnitude().clone(), eps.denom().magnitude().clone());
    let n = BigUint::from(selection.arity as u64);
    m0.entries()
        .iter()
        .map(|&a| {
            let first = ceil_div(&(BigUint::from(a - 1) * 2u32 * &n * &ed), &en);
            let second = ceil_div(&(&selection.e * &ed), &en);
            first.max(second).max(BigUint::one())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBoundCheck {
    #[serde(with = "rational_pair")]
    pub epsilon: ExactRational,
    pub m0: MultiIndex,
    pub thresholds: Vec<String>,
    pub box_: Vec<String>,
    #[serde(with = "rational_pair")]
    pub bound: ExactRational,
    pub holds: bool,
}

/// Evaluates the complement bound at `m_i = max(a_i, b_i)` and compares it
/// with `epsilon` exactly.
pub fn verify_threshold_bound(m0: &MultiIndex, selection: &PrimeSelection) -> Result<ThresholdBoundCheck> {
    let b = thresholds(m0, selection);
    let box_: Vec<BigUint> = b
        .iter()
        .zip(m0.entries())
        .map(|(bi, &a)| bi.clone().max(BigUint::from(a)))
        .collect();
    let bound = complement_bound(&box_, m0, selection)?;
    Ok(ThresholdBoundCheck {
        epsilon: selection.epsilon.clone(),
        m0: m0.clone(),
        thresholds: b.iter().map(|x| x.to_string()).collect(),
        box_: box_.iter().map(|x| x.to_string()).collect(),
        holds: bound <= selection.epsilon,
        bound,
    })
}

/// Per-index evidence in a Fermat density scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEvidence {
    pub index: SystemIndex,
    /// `I >= I_0`, so the index enters the density numerator.
    pub counted: bool,
    pub holds: bool,
    pub hits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub label: String,
    #[serde(rename = "box")]
    pub box_: Vec<u64>,
    pub volume: u64,
    pub member_count: u64,
    pub complement_count: u64,
    #[serde(with = "rational_pair")]
    pub density: ExactRational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<MultiIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_pair")]
    pub complement_bound: Option<ExactRational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complement_within_bound: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<PrimeSelection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indices: Vec<IndexEvidence>,
}

mod opt_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::arith::{ExactRational, RationalPair};

    pub fn serialize<S: Serializer>(v: &Option<ExactRational>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(RationalPair::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ExactRational>, D::Error> {
        use serde::de::Error;
        Option::<RationalPair>::deserialize(d)?
            .map(|p| p.to_rational().map_err(D::Error::custom))
            .transpose()
    }
}

fn box_indices(lower: &[u64], upper: &[u64]) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return out;
    }
    let mut cur = lower.to_vec();
    loop {
        out.push(cur.clone());
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] <= upper[pos] {
                break;
            }
            cur[pos] = lower[pos];
        }
    }
}

fn volume(box_: &[u64]) -> Result<u64> {
    box_.iter()
        .try_fold(1u64, |v, &m| v.checked_mul(m))
        .ok_or_else(|| Error::Unsupported("box volume exceeds 64 bits".into()))
}

/// Exact membership counts of `Σ` in the box `[1, m]`. With a prime selection,
/// `M_0` and the complement bound are attached and compared with the count.
pub fn empirical_density(
    oracle: &dyn SigmaOracle,
    box_: &[u64],
    selection: Option<&PrimeSelection>,
) -> Result<DensityReport> {
    if box_.len() != oracle.arity() || box_.contains(&0) {
        return Err(Error::Dimension {
            expected: oracle.arity(),
            found: box_.len(),
        });
    }
    let vol = volume(box_)?;
    let ones = vec![1u64; box_.len()];
    let members: u64 = box_indices(&ones, box_)
        .into_par_iter()
        .map(|i| u64::from(oracle.contains(&MultiIndex::new(i).expect("positive entries"))))
        .sum();
    let complement = vol - members;
    let mut report = DensityReport {
        label: "exact count over the box".into(),
        box_: box_.to_vec(),
        volume: vol,
        member_count: members,
        complement_count: complement,
        density: rational(members, vol),
        bound: None,
        m0: None,
        thresholds: None,
        complement_bound: None,
        complement_within_bound: None,
        selection: None,
        indices: Vec::new(),
    };
    if let Some(sel) = selection {
        let m0 = assemble_m0(oracle, sel)?;
        report.thresholds = Some(thresholds(&m0.m0, sel).iter().map(|b| b.to_string()).collect());
        if box_.iter().zip(m0.m0.entries()).all(|(m, a)| m >= a) {
            let big: Vec<BigUint> = box_.iter().map(|&m| BigUint::from(m)).collect();
            let bound = complement_bound(&big, &m0.m0, sel)?;
            report.complement_within_bound = Some(rational(complement, vol) <= bound);
            report.complement_bound = Some(bound);
        }
        report.m0 = Some(m0.m0);
        report.selection = Some(sel.clone());
    }
    Ok(report)
}

/// Runs a Fermat check at every index `lower <= I <= box` and reports the
/// density of indices `I >= I_0` whose `Y_I` has Fermat's property within `H`,
/// relative to the full box volume.
pub fn fermat_density_scan(
    system: &EndoSystem,
    y: &Hypersurface,
    box_: &[u64],
    lower: Option<&[u64]>,
    h: u64,
    epsilon: Option<&ExactRational>,
) -> Result<DensityReport> {
    let arity = system.factors().len();
    if box_.len() != arity || box_.contains(&0) {
        return Err(Error::Dimension {
            expected: arity,
            found: box_.len(),
        });
    }
    let ones = vec![1u64; arity];
    let lower = lower.unwrap_or(&ones);
    if lower.len() != arity || lower.contains(&0) {
        return Err(Error::Dimension {
            expected: arity,
            found: lower.len(),
        });
    }
    let start: Vec<u64> = match system.start_index() {
        SystemIndex::Scalar(s) => vec![*s],
        SystemIndex::Multi(m) => m.entries().to_vec(),
    };
    let to_index = |v: &[u64]| -> Result<SystemIndex> {
        if system.is_product() {
            Ok(SystemIndex::Multi(MultiIndex::new(v.to_vec())?))
        } else {
            Ok(SystemIndex::Scalar(v[0]))
        }
    };
    let evidence = box_indices(lower, box_)
        .into_par_iter()
        .map(|v| {
            let index = to_index(&v)?;
            let report = check_fermat_property(system, &index, y, h)?;
            Ok(IndexEvidence {
                counted: v.iter().zip(&start).all(|(i, s)| i >= s),
                holds: report.holds(),
                hits: report.points_found.len(),
                counterexample: match report.verdict {
                    crate::fermat::FermatVerdict::Counterexample { point } => Some(point),
                    _ => None,
                },
                index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let vol = volume(box_)?;
    let members = evidence.iter().filter(|e| e.counted && e.holds).count() as u64;
    let selection = epsilon.map(|eps| choose_primes(eps, arity, 2)).transpose()?;
    Ok(DensityReport {
        label: "desk-scale evidence: each verdict is qualified by the search bound".into(),
        box_: box_.to_vec(),
        volume: vol,
        member_count: members,
        complement_count: vol - members,
        density: rational(members, vol),
        bound: Some(h),
        m0: None,
        thresholds: None,
        complement_bound: None,
        complement_within_bound: None,
        selection,
        indices: evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::parse_rational;
    use rand::SeedableRng;

    fn q(s: &str) -> ExactRational {
        parse_rational(s).unwrap()
    }

    fn primes_between(from: u64, to: u64) -> Vec<u64> {
        (from..=to).filter(|&n| crate::arith::is_prime(n)).collect()
    }

    fn mi(v: &[u64]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn prime_stream_matches_trial_division() {
        let s: Vec<u64> = PrimeStream::new(2, 100_000).collect();
        assert_eq!(s, primes_between(2, 100_000));
        let s: Vec<u64> = PrimeStream::new(999_000, 1_000_000).collect();
        assert_eq!(s, primes_between(999_000, 1_000_000));
    }

    #[test]
    fn choose_primes_examples() {
        let s = choose_primes(&q("1"), 1, 2).unwrap();
        assert_eq!(s.primes, [2, 3, 5, 7]);
        assert_eq!(s.product, q("8/35"));
        assert_eq!(s.e, BigUint::from(210u32));
        assert!(s.satisfied() && s.is_minimal());
        let s = choose_primes(&q("1"), 2, 2).unwrap();
        assert!(s.primes.len() > 6);
        assert!(s.satisfied() && s.is_minimal());
        let s = choose_primes(&q("1"), 1, 11).unwrap();
        assert_eq!(s.primes[0], 11);
        assert!(s.satisfied() && s.is_minimal());
        assert!(choose_primes(&q("0"), 1, 2).is_err());
        assert!(choose_primes(&q("3/2"), 1, 2).is_err());
        assert_eq!(
            choose_primes_with_ceiling(&q("1/10"), 1, 2, 100_000),
            Err(Error::PrimeBudgetExceeded { ceiling: 100_000 })
        );
    }

    #[test]
    fn coprime_counts() {
        assert_eq!(coprime_count(10, 6).unwrap(), 3);
        assert_eq!(coprime_count(10, 1).unwrap(), 10);
        assert_eq!(coprime_count(6, 30).unwrap(), 1);
        assert_eq!(coprime_count(100, 30).unwrap(), 26);
        assert!(coprime_count(10, 12).is_err());
        for m in 1..300u64 {
            for e in [1u64, 2, 6, 30, 210, 2310, 11 * 13] {
                let brute = (1..=m).filter(|i| i.gcd(&e) == 1).count() as u64;
                assert_eq!(coprime_count(m, e).unwrap(), brute);
            }
        }
    }

    #[test]
    fn coprime_bounds() {
        let sel = |primes: &[u64]| {
            let e = primes.iter().product::<u64>();
            PrimeSelection {
                epsilon: q("1"),
                arity: 1,
                floor: 2,
                primes: primes.to_vec(),
                e: BigUint::from(e),
                product: primes.iter().fold(BigRational::one(), |acc, &p| acc * rational(p - 1, p)),
                target: q("1/4"),
            }
        };
        assert_eq!(coprime_count_bound(10, &sel(&[2, 3])), q("16/3"));
        assert_eq!(coprime_count_bound(1, &sel(&[2])), q("3/2"));
        assert_eq!(coprime_count_bound(100, &sel(&[2, 3, 5])), q("104/3"));
    }

    #[test]
    fn m0_examples() {
        let sel = |primes: &[u64], n: usize| PrimeSelection {
            epsilon: q("1"),
            arity: n,
            floor: 2,
            primes: primes.to_vec(),
            e: BigUint::from(primes.iter().product::<u64>()),
            product: primes.iter().fold(BigRational::one(), |acc, &p| acc * rational(p - 1, p)),
            target: q("1/4"),
        };
        let o = WitnessTableOracle::new(1, vec![(mi(&[2]), mi(&[4])), (mi(&[3]), mi(&[5]))]).unwrap();
        assert_eq!(assemble_m0(&o, &sel(&[2, 3], 1)).unwrap().m0, mi(&[23]));
        let o = WitnessTableOracle::new(1, vec![(mi(&[2]), mi(&[1]))]).unwrap();
        assert_eq!(assemble_m0(&o, &sel(&[2], 1)).unwrap().m0, mi(&[2]));
        let o = GcdPatternOracle { modulus: 6, arity: 2 };
        let w = assemble_m0(&o, &sel(&[2, 3], 2)).unwrap();
        assert_eq!(w.m0, mi(&[10, 10]));
        assert_eq!(w.terms, 4);
        assert!(matches!(assemble_m0(&o, &sel(&[2, 5], 2)), Err(Error::IncompleteOracle(_))));
    }

    #[test]
    fn complement_bound_examples() {
        let s = choose_primes(&q("1"), 1, 2).unwrap();
        let b = complement_bound(&[BigUint::from(10_000u32)], &mi(&[1]), &s).unwrap();
        assert_eq!(b, q("8/35") * q("10210/10000"));
        let small = complement_bound(&[BigUint::from(1_000u32)], &mi(&[1]), &s).unwrap();
        assert!(small > b && b > q("8/35"));
        let s2 = PrimeSelection {
            epsilon: q("1"),
            arity: 2,
            floor: 2,
            primes: vec![2, 3],
            e: BigUint::from(6u32),
            product: q("1/3"),
            target: q("1/8"),
        };
        let b = complement_bound(&[BigUint::from(100u32), BigUint::from(100u32)], &mi(&[2, 2]), &s2).unwrap();
        assert_eq!(b, q("1/50") + q("53/75"));
        assert!(complement_bound(&[BigUint::from(1u32), BigUint::from(100u32)], &mi(&[2, 2]), &s2).is_err());
    }

    #[test]
    fn threshold_bound_holds_for_feasible_epsilons() {
        for (eps, n) in [("1", 1), ("1/2", 1), ("1", 2), ("1/2", 2)] {
            let s = choose_primes(&q(eps), n, 2).unwrap();
            let o = ShiftedWitnessOracle { arity: n, p0: 2, shift: 3, modulus: 5 };
            let m0 = assemble_m0(&o, &s).unwrap();
            let check = verify_threshold_bound(&m0.m0, &s).unwrap();
            assert!(check.holds, "eps = {eps}, n = {n}");
        }
    }

    #[test]
    fn synthetic_densities() {
        let o = GcdPatternOracle { modulus: 6, arity: 1 };
        let r = empirical_density(&o, &[100], None).unwrap();
        let brute = (1..=100u64).filter(|i| i.gcd(&6) != 1).count() as u64;
        assert_eq!(r.member_count, brute);
        assert_eq!(r.density, q("67/100"));
        assert_eq!(r.complement_count, coprime_count(100, 6).unwrap());
        let o = ShiftedWitnessOracle { arity: 1, p0: 2, shift: 1, modulus: 3 };
        let s = choose_primes(&q("1"), 1, 2).unwrap();
        let mut last = BigRational::zero();
        for m in [200u64, 400, 800, 1600, 3200] {
            let r = empirical_density(&o, &[m], Some(&s)).unwrap();
            assert_eq!(r.complement_within_bound, Some(true));
            assert!(r.density >= last);
            last = r.density;
        }
    }

    #[test]
    fn inclusion_spot_checks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2] {
            let s = choose_primes(&q("1"), n, 2).unwrap();
            let o = ShiftedWitnessOracle { arity: n, p0: 2, shift: 2, modulus: 7 };
            let m0 = assemble_m0(&o, &s).unwrap();
            let r = check_inclusion(&o, &s, &m0, 2000, &mut rng).unwrap();
            assert!(r.passed(), "{:?}", r.failures.first());
        }
    }
}
