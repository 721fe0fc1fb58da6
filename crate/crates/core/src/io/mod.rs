//! Reading and writing series, factor tables and ladder renderings.

mod csv;
mod dot;
mod ims;
mod json;
mod svg;

pub use self::csv::{read_csv, write_csv};
pub use self::dot::render_dot;
pub use self::ims::{read_ims_file, read_ims_str, write_ims, IMS_SAMPLE_INTERVAL};
pub use self::json::{
    factors_from_json, factors_to_json, read_factors_document, read_factors_json, write_bare_factors_json,
    write_factors_json, FactorsDocument,
};
pub use self::svg::{render_svg, RenderStyle};

use crate::error::{Error, Result};

/// Six significant digits, trailing zeros dropped, `-0` printed as `0`.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v == 0.0 {
            "0".into()
        } else {
            format!("{v}")
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..=15).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// [`format_sig`] with an explicit `+` on positive values.
pub fn format_signed(v: f64) -> String {
    let s = format_sig(v);
    if v > 0.0 {
        format!("+{s}")
    } else {
        s
    }
}

fn parse_number(token: &str, line: usize, content: &str) -> Result<f64> {
    match token.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::NonFinite(format!("line {line}: {}", token.trim()))),
        Err(_) => Err(Error::MalformedLine {
            line,
            content: content.to_string(),
        }),
    }
}
