//! Exact rational numbers for durations and timestamps.

use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = num_rational::Ratio<i64>;

/// Parse `23`, `2.5`, `-0.125` or `7/3` exactly.
pub fn parse_number(text: &str) -> Option<Rational> {
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.parse().ok()?;
        let d: i64 = d.parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// Render exactly: integers plainly, terminating fractions as decimals, anything
/// else as `n/d`.
pub fn format_number(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut d = *r.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scale = 10i64.pow(places);
    let scaled = (r * Rational::from_integer(scale)).to_integer();
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = scaled.abs();
    let int = abs / scale;
    let frac = abs % scale;
    format!("{sign}{int}.{frac:0width$}", width = places as usize)
}

/// Round to two fractional digits for report rendering.
pub fn round2(r: &Rational) -> f64 {
    let scaled = r * Rational::from_integer(100);
    let rounded = scaled.round();
    (rounded / Rational::from_integer(100)).to_f64().unwrap_or(f64::NAN)
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_number("2.5"), Some(Rational::new(5, 2)));
        assert_eq!(parse_number("23"), Some(Rational::from_integer(23)));
        assert_eq!(parse_number("0.1").unwrap() * Rational::from_integer(3), Rational::new(3, 10));
        assert_eq!(parse_number("7/3"), Some(Rational::new(7, 3)));
        assert_eq!(parse_number("abc"), None);
        assert_eq!(parse_number("1.2.3"), None);
    }

    #[test]
    fn format_roundtrip() {
        for s in ["23", "2.5", "0.125", "-1.75", "7/3"] {
            let r = parse_number(s).unwrap();
            assert_eq!(format_number(&r), s);
        }
    }

    #[test]
    fn two_digit_rounding() {
        assert_eq!(round2(&Rational::new(163, 100)), 1.63);
        assert_eq!(round2(&Rational::new(2, 3)), 0.67);
    }
}
