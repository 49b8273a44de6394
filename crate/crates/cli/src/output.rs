//! Deterministic text rendering: CSV with 6-significant-digit floats.

/// Format with `digits` significant digits, `%g`-style: positional notation
/// for exponents in `[-4, digits)`, scientific otherwise, trailing zeros
/// stripped. Locale-independent by construction.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("{:e} always carries an exponent");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");
    if exponent < -4 || exponent >= digits as i32 {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    }
}

/// One CSV line from already-rendered fields.
pub fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}
