//! Exact arithmetic helpers: rational parsing and numbers of the form `a + b·√q`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_u(num: usize, den: usize) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"-0.05"`, `"1/2"` or `"2.5e-3"` into an exact rational.
pub fn parse_fraction(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(invalid("empty number"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_fraction(num)?;
        let den = parse_fraction(den)?;
        if den.is_zero() {
            return Err(invalid(format!("zero denominator in {text:?}")));
        }
        return Ok(num / den);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| invalid(format!("bad exponent in {text:?}")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(invalid(format!("not a number: {text:?}")));
    }
    let all: String = format!("{whole}{frac}");
    let numer: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| invalid(format!("not a number: {text:?}")))?
    };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// A real number `rational + coeff·√radicand` with rational parts, `radicand ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub rational: Rational,
    pub coeff: Rational,
    pub radicand: Rational,
}

impl Surd {
    pub fn new(rational: Rational, coeff: Rational, radicand: Rational) -> Self {
        assert!(!radicand.is_negative(), "negative radicand");
        Surd { rational, coeff, radicand }
    }

    pub fn from_rational(r: Rational) -> Self {
        Surd::new(r, Rational::zero(), Rational::zero())
    }

    fn irrational_sign(&self) -> i32 {
        if self.radicand.is_zero() {
            0
        } else {
            sign_of(&self.coeff)
        }
    }

    /// Exact sign: -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.rational);
        let sb = self.irrational_sign();
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        let a2 = &self.rational * &self.rational;
        let b2q = &self.coeff * &self.coeff * &self.radicand;
        match a2.cmp(&b2q) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    pub fn scale(&self, factor: &Rational) -> Surd {
        Surd::new(
            &self.rational * factor,
            &self.coeff * factor,
            self.radicand.clone(),
        )
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.rational) + to_f64(&self.coeff) * to_f64(&self.radicand).sqrt()
    }

    /// Exact comparison, including surds over different radicands.
    pub fn cmp_exact(&self, other: &Surd) -> Ordering {
        let a = &self.rational - &other.rational;
        let s = if self.irrational_sign() == 0
            || other.irrational_sign() == 0
            || self.radicand == other.radicand
        {
            let (coeff, radicand) = if self.irrational_sign() == 0 {
                (-other.coeff.clone(), other.radicand.clone())
            } else if other.irrational_sign() == 0 {
                (self.coeff.clone(), self.radicand.clone())
            } else {
                (&self.coeff - &other.coeff, self.radicand.clone())
            };
            Surd::new(a, coeff, radicand).signum()
        } else {
            sign_of_two(
                &a,
                &self.coeff,
                &self.radicand,
                &(-other.coeff.clone()),
                &other.radicand,
            )
        };
        s.cmp(&0)
    }

    pub fn min_exact<'a>(&'a self, other: &'a Surd) -> &'a Surd {
        if other.cmp_exact(self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irrational_sign() == 0 {
            write!(f, "{}", self.rational)
        } else {
            write!(f, "{} + ({})*sqrt({})", self.rational, self.coeff, self.radicand)
        }
    }
}

fn sign_of(r: &Rational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// Sign of `a + b√p + c√q`.
fn sign_of_two(a: &Rational, b: &Rational, p: &Rational, c: &Rational, q: &Rational) -> i32 {
    let u = Surd::new(a.clone(), b.clone(), p.clone());
    let su = u.signum();
    let sv = if q.is_zero() { 0 } else { sign_of(c) };
    if su == 0 {
        return sv;
    }
    if sv == 0 || su == sv {
        return su;
    }
    // |u| vs |v| via u² - v² = (a² + b²p - c²q) + 2ab√p
    let diff = Surd::new(
        a * a + b * b * p - c * c * q,
        int(2) * a * b,
        p.clone(),
    );
    match diff.signum() {
        1 => su,
        -1 => sv,
        _ => 0,
    }
}

pub fn one() -> Rational {
    Rational::one()
}


/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::{parse_fraction, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_fraction(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for optional rationals.
pub mod serde_rational_opt {
    use super::{parse_fraction, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&v.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| parse_fraction(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}
