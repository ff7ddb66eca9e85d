//! Small exact rationals with overflow checks.
//!
//! Local sums over a few hundred weights stay far inside `i128`; every
//! operation is still checked and panics rather than wrapping.

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Zero};

use crate::weight::LogWeight;

pub type Q = Ratio<i128>;

pub fn add(a: &Q, b: &Q) -> Q {
    a.checked_add(b).expect("exact sum overflowed i128")
}

pub fn sub(a: &Q, b: &Q) -> Q {
    a.checked_sub(b).expect("exact difference overflowed i128")
}

pub fn mul(a: &Q, b: &Q) -> Q {
    a.checked_mul(b).expect("exact product overflowed i128")
}

pub fn sum<'a>(xs: impl IntoIterator<Item = &'a Q>) -> Q {
    xs.into_iter().fold(Q::zero(), |acc, x| add(&acc, x))
}

/// Exact value of a rational weight; `None` for irrational or oversized ones.
pub fn of_weight(w: &LogWeight) -> Option<Q> {
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for &(p, e) in w.doubled() {
        if e % 2 != 0 {
            return None;
        }
        let f = (p as i128).checked_pow((e.unsigned_abs() / 2) as u32)?;
        if e > 0 {
            num = num.checked_mul(f)?;
        } else {
            den = den.checked_mul(f)?;
        }
    }
    Some(Q::new(num, den))
}

pub fn one() -> Q {
    Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_convert_exactly() {
        assert_eq!(of_weight(&LogWeight::from_ratio(9, 4)), Some(Q::new(9, 4)));
        assert_eq!(of_weight(&LogWeight::from_doubled([(2, 1)])), None);
        assert_eq!(of_weight(&LogWeight::from_doubled([(2, 400)])), None);
        assert_eq!(sum(&[Q::new(1, 2), Q::new(1, 3)]), Q::new(5, 6));
    }
}
