//! Canonical float formatting for trace and config emitters.
//!
//! Traces must be byte-identical across platforms for identical inputs,
//! so every float is printed the same way: 12 significant digits,
//! trailing zeros stripped, scientific notation outside [1e-4, 1e12).
//! This mirrors C's `%.12g`, and the output is always a valid JSON
//! number.

/// Formats `x` like printf's `%.12g`. Panics on non-finite input;
/// callers gate those out before serialization.
pub(crate) fn g12(x: f64) -> String {
    assert!(x.is_finite(), "cannot canonically format {x}");
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // 11 fractional digits in scientific form = 12 significant digits,
    // correctly rounded by the standard formatter.
    let sci = format!("{:.11e}", x);
    let (mant, exp_str) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp_str.parse().expect("exponent");
    let sign = if mant.starts_with('-') { "-" } else { "" };
    let digits_full: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits_full.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    if !(-4..12).contains(&exp) {
        let head = &digits[..1];
        let tail = &digits[1..];
        let m = if tail.is_empty() {
            head.to_string()
        } else {
            format!("{head}.{tail}")
        };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{m}e{esign}{:02}", exp.abs())
    } else if exp >= 0 {
        let point = exp as usize + 1;
        if digits.len() > point {
            format!("{sign}{}.{}", &digits[..point], &digits[point..])
        } else {
            format!("{sign}{}{}", digits, "0".repeat(point - digits.len()))
        }
    } else {
        format!("{sign}0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    }
}

#[cfg(test)]
mod tests {
    use super::g12;

    #[test]
    fn matches_printf_g_conventions() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(-0.0), "-0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(0.5), "0.5");
        assert_eq!(g12(-0.25), "-0.25");
        assert_eq!(g12(100.0), "100");
        assert_eq!(g12(123456.789), "123456.789");
        assert_eq!(g12(1e-4), "0.0001");
        assert_eq!(g12(1e-5), "1e-05");
        assert_eq!(g12(1e11), "100000000000");
        assert_eq!(g12(1e12), "1e+12");
        assert_eq!(g12(-2.5e-13), "-2.5e-13");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(2.0f64.sqrt()), "1.41421356237");
    }

    #[test]
    fn twelve_digit_round_trip_is_tight() {
        // 12 significant digits keep |x - parse(g12(x))| within 1 ulp at
        // the 12th digit, plenty below every tolerance used in traces.
        for &x in &[std::f64::consts::PI, 6.02214076e23, 1.602176634e-19, -9.80665] {
            let back: f64 = g12(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x} -> {} -> {back}", g12(x));
        }
    }
}
