//! Closed intervals of binary64 numbers with outward rounding after every
//! operation, enough to bound logarithms and short polynomial evaluations.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// An exactly representable value.
    pub fn exact(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// A value known up to one rounding.
    pub fn around(x: f64) -> Self {
        Interval { lo: down(x), hi: up(x) }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    /// Upper bound on the distance from [`Interval::mid`] to any member.
    pub fn radius(&self) -> f64 {
        let m = self.mid();
        up((self.hi - m).max(m - self.lo))
    }

    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn add(self, o: Self) -> Self {
        Interval::new(down(self.lo + o.lo), up(self.hi + o.hi))
    }

    pub fn sub(self, o: Self) -> Self {
        Interval::new(down(self.lo - o.hi), up(self.hi - o.lo))
    }

    pub fn neg(self) -> Self {
        Interval::new(-self.hi, -self.lo)
    }

    pub fn mul(self, o: Self) -> Self {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(down(lo), up(hi))
    }

    /// Division by an interval that excludes zero.
    pub fn div(self, o: Self) -> Self {
        assert!(!o.contains_zero(), "division by an interval containing zero");
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(down(lo), up(hi))
    }

    pub fn abs(self) -> Self {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval::new(0.0, self.hi.max(-self.lo))
        }
    }

    pub fn max(self, o: Self) -> Self {
        Interval::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    /// Natural logarithm of a positive interval; libm `ln` is trusted to 1 ulp.
    pub fn ln(self) -> Self {
        assert!(self.lo > 0.0, "logarithm of a non-positive interval");
        Interval::new(down(down(self.lo.ln())), up(up(self.hi.ln())))
    }

    /// `self ∩ o`, or `o` if rounding made them disjoint.
    pub fn intersect(self, o: Self) -> Self {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        if lo <= hi {
            Interval::new(lo, hi)
        } else {
            o
        }
    }

    pub fn hull(self, o: Self) -> Self {
        Interval::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    pub fn scale(self, k: f64) -> Self {
        self.mul(Interval::exact(k))
    }
}

fn ln2() -> Interval {
    Interval::around(std::f64::consts::LN_2)
}

/// Enclosure of a nonnegative big integer.
pub fn biguint_interval(n: &BigUint) -> Interval {
    let bits = n.bits();
    if bits <= 53 {
        return Interval::exact(n.to_f64().expect("small integer"));
    }
    match n.to_f64() {
        Some(x) if x.is_finite() => Interval::around(x),
        _ => Interval::new(f64::MAX, f64::INFINITY),
    }
}

/// Enclosure of `ln n` for `n >= 1`, valid for integers of any size.
pub fn ln_biguint(n: &BigUint) -> Interval {
    assert!(n.bits() > 0, "ln(0)");
    let bits = n.bits();
    if bits <= 900 {
        return biguint_interval(n).ln();
    }
    let shift = bits - 64;
    let top: BigUint = n >> shift;
    let m = top.to_f64().expect("64-bit value");
    // n lies in [top, top + 1] * 2^shift
    let mantissa = Interval::new(down(m), up(m + 1.0)).ln();
    mantissa.add(ln2().scale(shift as f64))
}

/// Interval with endpoints `lo / 2^prec` and `hi / 2^prec`, rounded outward
/// only on multiplication and division.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicInterval {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u32,
}

fn pow2(p: u32) -> BigInt {
    BigInt::from(1u8) << p
}

/// Outward enclosure of `m / 2^p` in binary64.
fn scaled_bounds(m: &BigInt, p: u32) -> Interval {
    if m.is_zero() {
        return Interval::zero();
    }
    let bits = m.bits();
    let shift = bits.saturating_sub(53);
    let e = shift as i64 - p as i64;
    if e < -960 {
        let tiny = 2f64.powi(-900);
        return if m.is_negative() { Interval::new(-tiny, 0.0) } else { Interval::new(0.0, tiny) };
    }
    if e > 960 {
        return if m.is_negative() {
            Interval::new(f64::NEG_INFINITY, -f64::MAX)
        } else {
            Interval::new(f64::MAX, f64::INFINITY)
        };
    }
    let d = pow2(shift as u32);
    let (fl, ce) = (m.div_floor(&d), m.div_ceil(&d));
    let f = |x: &BigInt| x.to_f64().expect("53-bit value") * 2f64.powi(e as i32);
    Interval::new(down(f(&fl)), up(f(&ce)))
}

impl DyadicInterval {
    pub fn exact_int(n: &BigInt, prec: u32) -> Self {
        let v = n << prec;
        DyadicInterval { lo: v.clone(), hi: v, prec }
    }

    /// Encloses `num / den`.
    pub fn ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let n = num << prec;
        DyadicInterval { lo: n.div_floor(den), hi: n.div_ceil(den), prec }
    }

    pub fn add(&self, o: &Self) -> Self {
        DyadicInterval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi, prec: self.prec }
    }

    pub fn scale_int(&self, k: &BigInt) -> Self {
        let (a, b) = (&self.lo * k, &self.hi * k);
        if k.sign() == Sign::Minus {
            DyadicInterval { lo: b, hi: a, prec: self.prec }
        } else {
            DyadicInterval { lo: a, hi: b, prec: self.prec }
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let d = pow2(self.prec);
        let lo = c.iter().min().expect("four products").div_floor(&d);
        let hi = c.iter().max().expect("four products").div_ceil(&d);
        DyadicInterval { lo, hi, prec: self.prec }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Division by an interval that excludes zero.
    pub fn div(&self, o: &Self) -> Self {
        assert!(!o.contains_zero(), "division by an interval containing zero");
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for a in [&self.lo, &self.hi] {
            for b in [&o.lo, &o.hi] {
                let n = a << self.prec;
                let (fl, ce) = (n.div_floor(b), n.div_ceil(b));
                lo = Some(lo.map_or(fl.clone(), |l| l.min(fl)));
                hi = Some(hi.map_or(ce.clone(), |h| h.max(ce)));
            }
        }
        DyadicInterval { lo: lo.expect("nonempty"), hi: hi.expect("nonempty"), prec: self.prec }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            DyadicInterval { lo: -&self.hi, hi: -&self.lo, prec: self.prec }
        } else {
            DyadicInterval { lo: BigInt::zero(), hi: (-&self.lo).max(self.hi.clone()), prec: self.prec }
        }
    }

    /// `lo` of `|self|` dominates `hi` of `|o|`.
    pub fn abs_dominates(&self, o: &Self) -> bool {
        self.abs().lo >= o.abs().hi
    }

    pub fn to_interval(&self) -> Interval {
        let l = scaled_bounds(&self.lo, self.prec);
        let h = scaled_bounds(&self.hi, self.prec);
        Interval::new(l.lo, h.hi)
    }

    /// Width as a fraction of `2^prec`, i.e. `hi - lo` in units of one.
    pub fn width(&self) -> Interval {
        scaled_bounds(&(&self.hi - &self.lo), self.prec)
    }
}
