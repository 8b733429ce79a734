//! Deterministic CSV emission.

/// C-style `%.17g`: 17 significant digits, trailing zeros removed.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Cell of a numeric table; `None` prints as an empty field.
pub fn cell(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_default()
}

/// Header plus rows, comma separated, LF terminated.
pub fn write_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.write_record(r).expect("in-memory csv write");
    }
    let bytes = w.into_inner().expect("in-memory csv flush");
    String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8")
}

/// Two-column `x,<name>` table for external plotting.
pub fn curve_csv(name: &str, xs: &[f64], ys: &[Option<f64>]) -> String {
    let rows: Vec<Vec<String>> = xs.iter().zip(ys).map(|(&x, &y)| vec![fmt_g17(x), cell(y)]).collect();
    write_csv(&["x", name], &rows)
}
