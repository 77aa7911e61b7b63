//! Chebyshev polynomials `T_N(z + 1/z) = z^N + z^-N`, normalized with `T_0 = 2`.

use num_bigint::BigInt;

use crate::error::Result;
use crate::poly::{BinaryForm, IntPoly, Poly};

use super::morphism::P1Morphism;

/// `T_N` from `T_0 = 2`, `T_1 = z`, `T_N = z T_{N-1} - T_{N-2}`.
pub fn chebyshev_poly(n: u32) -> IntPoly {
    let z = Poly::monomial(BigInt::from(1), 1);
    let mut prev = Poly::constant(BigInt::from(2));
    if n == 0 {
        return prev;
    }
    let mut cur = z.clone();
    for _ in 1..n {
        let next = &(&z * &cur) - &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// The homogenization `(W^N T_N(X/W) : W^N)` for `N >= 1`.
pub fn chebyshev_morphism(n: u32) -> Result<P1Morphism> {
    assert!(n >= 1, "T_0 is constant");
    let d = n as usize;
    let f = BinaryForm::homogenize(&chebyshev_poly(n), d);
    P1Morphism::new_unchecked(f, BinaryForm::pure_power(d, false))
}

/// Evaluates `(W^N T_N(X/W), W^N)` through the three-term recurrence
/// `t_k = X t_{k-1} - W^2 t_{k-2}`, without building `T_N`.
pub(crate) fn chebyshev_eval_raw(n: u64, x: &BigInt, w: &BigInt) -> (BigInt, BigInt) {
    let w2 = w * w;
    let mut prev = BigInt::from(2);
    let mut cur = x.clone();
    if n == 0 {
        return (prev, BigInt::from(1));
    }
    for _ in 1..n {
        let next = x * &cur - &w2 * &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    (cur, w.pow(n as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn ip(c: &[i64]) -> IntPoly {
        Poly::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    #[test]
    fn small_chebyshev_polynomials() {
        assert_eq!(chebyshev_poly(0), ip(&[2]));
        assert_eq!(chebyshev_poly(1), ip(&[0, 1]));
        assert_eq!(chebyshev_poly(2), ip(&[-2, 0, 1]));
        assert_eq!(chebyshev_poly(3), ip(&[0, -3, 0, 1]));
        let t4 = chebyshev_poly(4);
        assert_eq!(t4, ip(&[2, 0, -4, 0, 1]));
        assert_eq!(t4, chebyshev_poly(2).compose(&chebyshev_poly(2)));
    }

    #[test]
    fn degrees_are_exact() {
        for n in 1..20 {
            assert_eq!(chebyshev_poly(n).degree(), Some(n as usize));
        }
    }

    #[test]
    fn commuting_compositions() {
        for (m, n) in [(2u32, 3u32), (3, 5), (4, 2)] {
            let a = chebyshev_poly(m).compose(&chebyshev_poly(n));
            let b = chebyshev_poly(n).compose(&chebyshev_poly(m));
            assert_eq!(a, b);
            assert_eq!(a, chebyshev_poly(m * n));
        }
    }

    #[test]
    fn recurrence_matches_forms() {
        for n in 1..9u32 {
            let m = chebyshev_morphism(n).unwrap();
            for (x, w) in [(3i64, 1i64), (5, 2), (-7, 3), (1, 0), (0, 1)] {
                let (x, w) = (BigInt::from(x), BigInt::from(w));
                assert_eq!(chebyshev_eval_raw(n as u64, &x, &w), m.eval_raw(&x, &w));
            }
        }
    }

    #[test]
    fn morphisms_have_nonzero_resultant_and_full_degree() {
        for n in 1..7u32 {
            let m = chebyshev_morphism(n).unwrap();
            assert!(!m.resultant().is_zero());
            assert_eq!(m.algebraic_degree(), n as usize);
        }
    }
}
