//! Locale-independent number formatting and the key-value text format used
//! for result files.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), so a value read
//! back is bit-identical to the one written. Complex numbers are written as
//! `re+imj`.

use std::fmt::Write as _;

use num_complex::Complex64;

/// 17-significant-digit scientific notation; `-0` is written as `0`.
pub fn real(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.16e}", 0.0f64);
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

pub fn complex(z: Complex64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    let sign = if im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", real(z.re), sign, real(im.abs()))
}

/// Parses `a`, `bj`, `a+bj`, `a-bj` (also `i` as imaginary unit suffix).
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('j').or_else(|| s.strip_suffix('i')) else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let parse_im = |t: &str| -> Option<f64> {
        match t {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => t.parse().ok(),
        }
    };
    match split {
        Some(k) => {
            let re: f64 = body[..k].parse().ok()?;
            let im = parse_im(&body[k..])?;
            Some(Complex64::new(re, im))
        }
        None => Some(Complex64::new(0.0, parse_im(body)?)),
    }
}

/// Builder for the `key = value` / `[section]` text format.
#[derive(Debug, Default, Clone)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.out, "[{name}]");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {}", value.as_ref());
        self
    }

    pub fn real(&mut self, key: &str, x: f64) -> &mut Self {
        self.kv(key, real(x))
    }

    pub fn complex(&mut self, key: &str, z: Complex64) -> &mut Self {
        self.kv(key, complex(z))
    }

    pub fn finish(&self) -> String {
        self.out.clone()
    }
}

/// One `key = value` entry with the section it appeared under (empty for the
/// top level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvEntry {
    pub section: String,
    pub key: String,
    pub value: String,
}

pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>, String> {
    let mut section = String::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        entries.push(KvEntry {
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats() {
        assert_eq!(real(-0.0), "0.0000000000000000e0");
        assert_eq!(real(1.0), "1.0000000000000000e0");
        assert_eq!(
            complex(Complex64::new(0.5, -0.25)),
            "5.0000000000000000e-1-2.5000000000000000e-1j"
        );
        assert_eq!(
            complex(Complex64::new(1.0, -0.0)),
            "1.0000000000000000e0+0.0000000000000000e0j"
        );
    }

    #[test]
    fn parses_common_spellings() {
        let c = Complex64::new;
        assert_eq!(parse_complex("1"), Some(c(1.0, 0.0)));
        assert_eq!(parse_complex("2j"), Some(c(0.0, 2.0)));
        assert_eq!(parse_complex("-j"), Some(c(0.0, -1.0)));
        assert_eq!(parse_complex("0+1j"), Some(c(0.0, 1.0)));
        assert_eq!(parse_complex("1e-3-2.5e+2j"), Some(c(1e-3, -250.0)));
        assert_eq!(parse_complex(" 3 - 4i "), Some(c(3.0, -4.0)));
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex(""), None);
    }

    #[test]
    fn kv_roundtrip() {
        let mut w = KvWriter::new();
        w.comment("hello")
            .kv("a", "1")
            .section("s.0")
            .complex("z", Complex64::new(1.0, 2.0));
        let entries = parse_kv(&w.finish()).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].section, "s.0");
        assert_eq!(
            parse_complex(&entries[1].value),
            Some(Complex64::new(1.0, 2.0))
        );
    }

    proptest! {
        #[test]
        fn complex_text_is_lossless(re in -1e300f64..1e300, im in -1e300f64..1e300) {
            let z = Complex64::new(re, im);
            prop_assert_eq!(parse_complex(&complex(z)), Some(z));
        }
    }
}
