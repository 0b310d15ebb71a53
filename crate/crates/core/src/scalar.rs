//! Numeric abstraction for share values.
//!
//! All reasoning is generic over [`Share`]. Floating point types are the
//! everyday choice; the rational types make threshold decisions (`> 0.5`)
//! exact, which matters on boundary cases such as a 0.2 + 0.2 + 0.1 holding.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio, Rational64};
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// A share fraction. Implemented for `f32`, `f64`, [`Rational64`] and
/// [`BigRational`].
pub trait Share:
    Num + Clone + Debug + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Parse a decimal (`"0.31"`) or, for rational types, a fraction (`"31/100"`).
    fn parse_share(text: &str) -> Option<Self>;

    /// Text form that parses back to the identical value.
    fn format_share(&self) -> String;

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::zero)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Share for f64 {
    fn parse_share(text: &str) -> Option<Self> {
        text.trim().parse().ok()
    }

    fn format_share(&self) -> String {
        // Display for f64 is the shortest text that round-trips.
        format!("{self}")
    }
}

impl Share for f32 {
    fn parse_share(text: &str) -> Option<Self> {
        text.trim().parse().ok()
    }

    fn format_share(&self) -> String {
        format!("{self}")
    }
}

/// Splits `"12.345"` into numerator `12345` and the power of ten `3`.
fn decimal_parts(text: &str) -> Option<(BigInt, u32)> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value: BigInt = digits.parse().ok()?;
    if negative {
        value = -value;
    }
    Some((value, frac_part.len() as u32))
}

fn parse_big_rational(text: &str) -> Option<BigRational> {
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (numer, scale) = decimal_parts(text)?;
    Some(BigRational::new(numer, BigInt::from(10u32).pow(scale)))
}

/// Exact decimal text when the denominator has only factors 2 and 5,
/// `n/d` otherwise.
fn format_big_rational(value: &BigRational) -> String {
    let mut den = value.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let scale = twos.max(fives);
    let scaled = value * BigRational::from_integer(BigInt::from(10u32).pow(scale));
    let digits = scaled.to_integer();
    if scale == 0 {
        return digits.to_string();
    }
    let negative = digits.is_negative();
    let mut text = digits.abs().to_string();
    while text.len() <= scale as usize {
        text.insert(0, '0');
    }
    let split = text.len() - scale as usize;
    let formatted = format!("{}.{}", &text[..split], &text[split..]);
    if negative {
        format!("-{formatted}")
    } else {
        formatted
    }
}

impl Share for BigRational {
    fn parse_share(text: &str) -> Option<Self> {
        parse_big_rational(text)
    }

    fn format_share(&self) -> String {
        format_big_rational(self)
    }

    fn from_f64_lossy(value: f64) -> Self {
        // Decimal text of the shortest round-trip form, e.g. 0.51 -> 51/100.
        parse_big_rational(&format!("{value}")).unwrap_or_else(Self::zero)
    }
}

impl Share for Rational64 {
    fn parse_share(text: &str) -> Option<Self> {
        let big = parse_big_rational(text)?;
        Some(Ratio::new(big.numer().to_i64()?, big.denom().to_i64()?))
    }

    fn format_share(&self) -> String {
        format_big_rational(&BigRational::new(
            BigInt::from(*self.numer()),
            BigInt::from(*self.denom()),
        ))
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::parse_share(&format!("{value}")).unwrap_or_else(Self::zero)
    }
}

/// Rounds to `digits` significant decimal digits.
pub fn round_significant(value: f64, digits: usize) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    format!("{:.*e}", digits.saturating_sub(1), value)
        .parse()
        .unwrap_or(value)
}

/// Serde helpers that write any [`Share`] as a JSON number.
pub(crate) mod serde_share {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::{round_significant, Share};

    pub fn serialize<S: Share, Ser: Serializer>(value: &S, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        ser.serialize_f64(value.to_f64_lossy())
    }

    pub fn deserialize<'de, S: Share, D: Deserializer<'de>>(de: D) -> Result<S, D::Error> {
        let raw = f64::deserialize(de)?;
        Ok(S::from_f64_lossy(raw))
    }

    pub fn serialize_map<S: Share, Ser: Serializer>(
        map: &BTreeMap<String, S>,
        ser: Ser,
    ) -> Result<Ser::Ok, Ser::Error> {
        ser.collect_map(map.iter().map(|(k, v)| (k, v.to_f64_lossy())))
    }

    /// Values rounded to 12 significant digits.
    pub fn serialize_map_12<S: Share, Ser: Serializer>(
        map: &BTreeMap<String, S>,
        ser: Ser,
    ) -> Result<Ser::Ok, Ser::Error> {
        ser.collect_map(
            map.iter()
                .map(|(k, v)| (k, round_significant(v.to_f64_lossy(), 12))),
        )
    }
}
