//! Exact relative weights.
//!
//! A [`LogWeight`] is a positive real of the form `prod p^(e/2)` over primes
//! `p`, stored as the doubled exponents `e`. Structural vertex weights always
//! have even exponents; odd exponents only appear after taking square roots
//! for the biased walk.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest doubled exponent magnitude accepted by [`LogWeight::to_f64`].
pub const FLOAT_EXPONENT_LIMIT: i64 = 900;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LogWeight {
    // sorted by prime, no zero exponents
    terms: SmallVec<[(u32, i32); 3]>,
}

fn factor(mut n: u64) -> Vec<(u32, i32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p as u32, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n as u32, 1));
    }
    out
}

impl LogWeight {
    pub fn one() -> Self {
        LogWeight::default()
    }

    /// The weight `num / den`. Both must be positive.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(num > 0 && den > 0, "weights are positive");
        let mut w = LogWeight::one();
        for (p, e) in factor(num) {
            w.add_term(p, 2 * e);
        }
        for (p, e) in factor(den) {
            w.add_term(p, -2 * e);
        }
        w
    }

    /// Builds a weight directly from `(prime, doubled exponent)` pairs.
    pub fn from_doubled(pairs: impl IntoIterator<Item = (u32, i32)>) -> Self {
        let mut w = LogWeight::one();
        for (p, e) in pairs {
            w.add_term(p, e);
        }
        w
    }

    fn add_term(&mut self, p: u32, e: i32) {
        if e == 0 {
            return;
        }
        match self.terms.binary_search_by_key(&p, |t| t.0) {
            Ok(i) => {
                self.terms[i].1 += e;
                if self.terms[i].1 == 0 {
                    self.terms.remove(i);
                }
            }
            Err(i) => self.terms.insert(i, (p, e)),
        }
    }

    pub fn is_one(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(prime, doubled exponent)` pairs in increasing prime order.
    pub fn doubled(&self) -> &[(u32, i32)] {
        &self.terms
    }

    pub fn doubled_exponent(&self, p: u32) -> i32 {
        self.terms
            .binary_search_by_key(&p, |t| t.0)
            .map(|i| self.terms[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &LogWeight) -> LogWeight {
        let mut out = self.clone();
        for &(p, e) in &other.terms {
            out.add_term(p, e);
        }
        out
    }

    pub fn div(&self, other: &LogWeight) -> LogWeight {
        self.mul(&other.inv())
    }

    pub fn inv(&self) -> LogWeight {
        LogWeight {
            terms: self.terms.iter().map(|&(p, e)| (p, -e)).collect(),
        }
    }

    pub fn pow(&self, k: i32) -> LogWeight {
        if k == 0 {
            return LogWeight::one();
        }
        LogWeight {
            terms: self.terms.iter().map(|&(p, e)| (p, e * k)).collect(),
        }
    }

    /// Square root, if it stays representable (every doubled exponent even).
    pub fn sqrt(&self) -> Option<LogWeight> {
        if self.terms.iter().any(|&(_, e)| e % 2 != 0) {
            return None;
        }
        Some(LogWeight {
            terms: self.terms.iter().map(|&(p, e)| (p, e / 2)).collect(),
        })
    }

    /// True when the value is rational.
    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|&(_, e)| e % 2 == 0)
    }

    /// Integer exponent vector `(prime, exponent)`, available for rational weights.
    pub fn exponents(&self) -> Option<Vec<(u32, i32)>> {
        if !self.is_rational() {
            return None;
        }
        Some(self.terms.iter().map(|&(p, e)| (p, e / 2)).collect())
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        if !self.is_rational() {
            return None;
        }
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for &(p, e) in &self.terms {
            let f: BigUint = Pow::pow(BigUint::from(p), (e.unsigned_abs() / 2) as u32);
            if e > 0 {
                num *= f;
            } else {
                den *= f;
            }
        }
        Some(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact `(numerator, denominator)` of the square of the value.
    fn squared_parts(&self) -> (BigUint, BigUint) {
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for &(p, e) in &self.terms {
            let f: BigUint = Pow::pow(BigUint::from(p), e.unsigned_abs());
            if e > 0 {
                num *= f;
            } else {
                den *= f;
            }
        }
        (num, den)
    }

    pub fn ln(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(p, e)| e as f64 * 0.5 * (p as f64).ln())
            .sum()
    }

    /// Float value; refused for exponents beyond [`FLOAT_EXPONENT_LIMIT`].
    pub fn to_f64(&self) -> Result<f64> {
        if let Some(&(_, e)) = self
            .terms
            .iter()
            .find(|&&(_, e)| (e as i64).abs() > FLOAT_EXPONENT_LIMIT)
        {
            return Err(Error::FloatRange(e as i64));
        }
        Ok(self.ln().exp())
    }

    /// Exact comparison of the represented values.
    pub fn cmp_value(&self, other: &LogWeight) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let d = self.div(other);
        let l = d.ln();
        if l > 1e-9 {
            return Ordering::Greater;
        }
        if l < -1e-9 {
            return Ordering::Less;
        }
        let (n, m) = d.squared_parts();
        n.cmp(&m)
    }

    pub fn max_abs_doubled(&self) -> i32 {
        self.terms.iter().map(|t| t.1.abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "1");
        }
        for (i, &(p, e)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if e % 2 == 0 {
                write!(f, "{p}^{}", e / 2)?;
            } else {
                write!(f, "{p}^({e}/2)")?;
            }
        }
        Ok(())
    }
}

/// Wrapper ordering weights by value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ByValue(pub LogWeight);

impl PartialOrd for ByValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ByValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_value(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    #[test]
    fn ratio_round_trip() {
        let w = LogWeight::from_ratio(9, 4);
        assert_eq!(w.to_rational().unwrap(), BigRational::new(9.into(), 4.into()));
        assert_eq!(w.doubled(), &[(2, -4), (3, 4)]);
        assert_eq!(w.to_string(), "2^-2*3^2");
        assert!(LogWeight::from_ratio(6, 6).is_one());
    }

    #[test]
    fn sqrt_of_two_is_irrational() {
        let w = LogWeight::from_ratio(2, 1);
        let h = w.sqrt().unwrap();
        assert_eq!(h, LogWeight::from_doubled([(2, 1)]));
        assert!(h.sqrt().is_none());
        assert!(!h.is_rational());
        assert!((h.to_f64().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.mul(&h), w);
        assert_eq!(LogWeight::from_ratio(4, 9).sqrt().unwrap(), LogWeight::from_ratio(2, 3));
    }

    #[test]
    fn float_conversion_refused_for_huge_exponents() {
        let w = LogWeight::from_doubled([(2, 902)]);
        assert_eq!(w.to_f64(), Err(Error::FloatRange(902)));
        assert!(LogWeight::from_doubled([(2, 900)]).to_f64().is_ok());
        assert!(w.ln() > 0.0);
    }

    #[test]
    fn exact_comparison_breaks_float_ties() {
        // 2^a * 3^-b close to 1 for a = 84, b = 53
        let a = LogWeight::from_doubled([(2, 168), (3, -106)]);
        let b = LogWeight::one();
        let exact = BigUint::from(2u32).pow(84u32).cmp(&BigUint::from(3u32).pow(53u32));
        assert_eq!(a.cmp_value(&b), exact);
        assert_eq!(b.cmp_value(&a), exact.reverse());
    }

    proptest! {
        #[test]
        fn float_value_matches_rational(n in 1u64..5000, d in 1u64..5000) {
            let w = LogWeight::from_ratio(n, d);
            let f = w.to_f64().unwrap();
            let q = w.to_rational().unwrap().to_f64().unwrap();
            prop_assert!((f - q).abs() <= 1e-12 * q.max(1.0));
        }

        #[test]
        fn comparison_agrees_with_rationals(a in 1u64..2000, b in 1u64..2000, c in 1u64..2000, d in 1u64..2000) {
            let x = LogWeight::from_ratio(a, b);
            let y = LogWeight::from_ratio(c, d);
            let exact = (BigUint::from(a) * BigUint::from(d)).cmp(&(BigUint::from(c) * BigUint::from(b)));
            prop_assert_eq!(x.cmp_value(&y), exact);
        }

        #[test]
        fn float_conversion_is_monotone(e in -400i32..400, f in -400i32..400) {
            let x = LogWeight::from_doubled([(3, e)]).to_f64().unwrap();
            let y = LogWeight::from_doubled([(3, f)]).to_f64().unwrap();
            prop_assert_eq!(e.cmp(&f), x.partial_cmp(&y).unwrap());
        }

        #[test]
        fn group_laws(a in 1u64..500, b in 1u64..500, k in -5i32..5) {
            let x = LogWeight::from_ratio(a, b);
            prop_assert!(x.mul(&x.inv()).is_one());
            prop_assert_eq!(x.pow(2).sqrt().unwrap(), x.clone());
            prop_assert_eq!(x.pow(k).pow(-1), x.pow(-k));
        }
    }
}
