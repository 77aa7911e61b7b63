//! Enumeration of rational points of bounded naive height.
//!
//! Coordinates run through `0, 1, -1, 2, -2, ..., H, -H` and vectors are
//! visited lexicographically in that order, keeping only primitive vectors
//! whose first nonzero coordinate is positive. Product spaces enumerate the
//! factors lexicographically (first factor slowest).

use num_bigint::BigInt;
use num_integer::Integer;

use crate::arith::{Point, ProductPoint, ProjectivePoint};
use crate::endo::Space;

/// The coordinate value at position `k` of `0, 1, -1, 2, -2, ...`.
fn coordinate_at(k: u64) -> i64 {
    if k == 0 {
        0
    } else if k % 2 == 1 {
        k.div_ceil(2) as i64
    } else {
        -((k / 2) as i64)
    }
}

/// Rank of a value in the coordinate order; used as the tie-break key.
fn coordinate_rank(c: &BigInt) -> (BigInt, bool) {
    (c.magnitude().clone().into(), c.sign() == num_bigint::Sign::Minus)
}

/// Orders points as the search visits them.
pub fn search_order_key(p: &Point) -> Vec<(BigInt, bool)> {
    p.factor_slice()
        .iter()
        .flat_map(|f| f.coords().iter().map(coordinate_rank))
        .collect()
}

/// All primitive, sign-normalized points of `P^n` with coordinates in `[-H, H]`.
pub fn projective_points(n: usize, h: u64) -> impl Iterator<Item = ProjectivePoint> {
    let width = 2 * h + 1;
    let len = n + 1;
    let mut digits = vec![0u64; len];
    let mut done = false;
    std::iter::from_fn(move || {
        while !done {
            let coords: Vec<i64> = digits.iter().map(|&k| coordinate_at(k)).collect();
            // advance odometer, last coordinate fastest
            let mut pos = len;
            loop {
                if pos == 0 {
                    done = true;
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < width {
                    break;
                }
                digits[pos] = 0;
            }
            let first = coords.iter().find(|&&c| c != 0);
            match first {
                Some(&c) if c > 0 => {}
                _ => continue,
            }
            let g = coords.iter().fold(0i64, |g, &c| g.gcd(&c));
            if g != 1 {
                continue;
            }
            return Some(ProjectivePoint::from_normalized_unchecked(
                coords.into_iter().map(BigInt::from).collect(),
            ));
        }
        None
    })
}

/// Points of `space` with every coordinate in `[-H, H]`, each class exactly once.
pub fn search_points(space: &Space, h: u64) -> Box<dyn Iterator<Item = Point> + Send> {
    match space {
        Space::Projective(n) => Box::new(projective_points(*n, h).map(Point::Projective)),
        Space::Product(dims) => {
            let lists: Vec<Vec<ProjectivePoint>> =
                dims.iter().map(|&d| projective_points(d, h).collect()).collect();
            let total: usize = lists.iter().map(|l| l.len()).product();
            Box::new((0..total).map(move |mut k| {
                let mut factors = vec![None; lists.len()];
                for (i, l) in lists.iter().enumerate().rev() {
                    factors[i] = Some(l[k % l.len()].clone());
                    k /= l.len();
                }
                Point::Product(
                    ProductPoint::new(factors.into_iter().map(Option::unwrap).collect())
                        .expect("nonempty product"),
                )
            }))
        }
    }
}
