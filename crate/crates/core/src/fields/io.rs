//! Plain-text field format.
//!
//! ```text
//! N h count
//! ξ_1 … ξ_N re(c) im(c)      (one line per entry)
//! ```
//!
//! Every number is written in scientific notation with 17 significant
//! digits, which round-trips `f64` exactly.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::BandLimitedField;
use crate::error::{Error, Result};

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

pub fn write_field(f: &BandLimitedField) -> String {
    let mut out = String::new();
    write!(out, "{} ", f.dim()).unwrap();
    num(&mut out, f.spacing());
    writeln!(out, " {}", f.len()).unwrap();
    for k in 0..f.len() {
        for v in f.freq(k) {
            num(&mut out, *v);
            out.push(' ');
        }
        num(&mut out, f.amp(k).re);
        out.push(' ');
        num(&mut out, f.amp(k).im);
        out.push('\n');
    }
    out
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|e| Error::Parse { line, reason: format!("`{tok}`: {e}") })
}

pub fn read_field(text: &str) -> Result<BandLimitedField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, reason: "missing header".into() })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(Error::Parse { line: hline + 1, reason: "header must be `N h count`".into() });
    }
    let dim: usize = toks[0]
        .parse()
        .map_err(|_| Error::Parse { line: hline + 1, reason: format!("bad dimension `{}`", toks[0]) })?;
    let spacing = parse_f64(toks[1], hline + 1)?;
    let count: usize = toks[2]
        .parse()
        .map_err(|_| Error::Parse { line: hline + 1, reason: format!("bad count `{}`", toks[2]) })?;
    let mut freqs = Vec::with_capacity(dim * count);
    let mut amps = Vec::with_capacity(count);
    for (i, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != dim + 2 {
            return Err(Error::Parse { line: i + 1, reason: format!("expected {} columns", dim + 2) });
        }
        for t in &toks[..dim] {
            freqs.push(parse_f64(t, i + 1)?);
        }
        amps.push(Complex64::new(parse_f64(toks[dim], i + 1)?, parse_f64(toks[dim + 1], i + 1)?));
    }
    if amps.len() != count {
        return Err(Error::Parse {
            line: hline + 1,
            reason: format!("header announces {count} entries, found {}", amps.len()),
        });
    }
    BandLimitedField::from_parts(dim, spacing, freqs, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_annulus_field;
    use proptest::prelude::*;

    #[test]
    fn header_and_line_layout() {
        let f = BandLimitedField::plane_wave(&[1.0, -2.0], Complex64::new(0.5, 0.25)).unwrap();
        let text = write_field(&f);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "2 1.0000000000000000e0 1");
        assert_eq!(
            lines.next().unwrap(),
            "1.0000000000000000e0 -2.0000000000000000e0 5.0000000000000000e-1 2.5000000000000000e-1"
        );
    }

    #[test]
    fn count_mismatch_is_rejected() {
        assert!(matches!(read_field("2 1.0 2\n0 0 1 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(read_field("2 1.0 1\n0 0 1\n"), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn round_trip(seed in 0u64..1000, count in 1usize..40) {
            let f = random_annulus_field(8.0, count, seed).unwrap();
            let g = read_field(&write_field(&f)).unwrap();
            prop_assert_eq!(f.amplitudes(), g.amplitudes());
            prop_assert!(f.freqs().zip(g.freqs()).all(|(a, b)| a == b));
        }
    }
}
