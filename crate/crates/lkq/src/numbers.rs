//! Exact reading of numbers: `"p/q"`, integers and decimal literals (with an
//! optional exponent) all become rationals without rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: BigInt = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(BigRational::new(p, q));
    }
    parse_decimal(t).ok_or_else(|| format!("not a number: {s:?}"))
}

fn parse_decimal(t: &str) -> Option<BigRational> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, shift.unsigned_abs() as usize);
    let v = if shift >= 0 { BigRational::from_integer(digits * pow) } else { BigRational::new(digits, pow) };
    Some(if neg { -v } else { v })
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Comma-separated list of rationals.
pub fn parse_list(s: &str) -> Result<Vec<BigRational>, String> {
    s.split(',').map(parse_rational).collect()
}
