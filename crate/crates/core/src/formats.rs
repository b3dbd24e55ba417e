//! Text formats for states, observables and channels.
//!
//! `.state` and `.herm`:
//!
//! ```text
//! dim 2
//! 0 0 5.0000000000000000e-1 0.0000000000000000e0
//! 0 1 ...
//! ```
//!
//! one `i j re im` line per entry, row-major and zero-based. `.chan` starts
//! with `din dout k`, followed by `k` blocks each headed `kraus t` and
//! holding the `dout·din` entries of Kraus operator `t` in the same form.
//! Blank lines and lines starting with `#` are ignored. Numbers are written
//! with 17 significant digits, so a write-read cycle is exact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::states::{DensityMatrix, HermitianMatrix};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next meaningful line as (1-based number, tokens).
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            self.last = i + 1;
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next()
            .ok_or_else(|| perr(self.last + 1, format!("unexpected end of input, expected {what}")))
    }
}

fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| perr(line, format!("expected a nonnegative integer, got {tok:?}")))
}

fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| perr(line, format!("expected a number, got {tok:?}")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("non-finite value {tok}")));
    }
    Ok(v)
}

/// Read `rows·cols` entry lines into a matrix.
fn read_entries(lines: &mut Lines<'_>, rows: usize, cols: usize) -> Result<CMat> {
    let mut m = CMat::zeros(rows, cols);
    let mut seen = vec![false; rows * cols];
    for _ in 0..rows * cols {
        let (ln, t) = lines.expect("a matrix entry")?;
        if t.len() != 4 {
            return Err(perr(ln, format!("expected `i j re im`, got {} fields", t.len())));
        }
        let i = parse_usize(ln, t[0])?;
        let j = parse_usize(ln, t[1])?;
        if i >= rows || j >= cols {
            return Err(perr(ln, format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        if std::mem::replace(&mut seen[i * cols + j], true) {
            return Err(perr(ln, format!("entry ({i}, {j}) given twice")));
        }
        m[(i, j)] = c(parse_f64(ln, t[2])?, parse_f64(ln, t[3])?);
    }
    Ok(m)
}

fn write_entries(out: &mut String, m: &CMat) {
    use std::fmt::Write as _;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            writeln!(out, "{i} {j} {:.16e} {:.16e}", z.re, z.im).expect("writing to a String");
        }
    }
}

fn read_square(text: &str) -> Result<CMat> {
    let mut lines = Lines::new(text);
    let (ln, t) = lines.expect("`dim d`")?;
    if t.len() != 2 || t[0] != "dim" {
        return Err(perr(ln, "expected `dim d`"));
    }
    let d = parse_usize(ln, t[1])?;
    if d == 0 {
        return Err(perr(ln, "dimension must be positive"));
    }
    let m = read_entries(&mut lines, d, d)?;
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing content"));
    }
    Ok(m)
}

fn write_square(m: &CMat) -> String {
    let mut s = format!("dim {}\n", m.nrows());
    write_entries(&mut s, m);
    s
}

pub fn parse_state(text: &str) -> Result<DensityMatrix> {
    DensityMatrix::new(read_square(text)?)
}

pub fn format_state(rho: &DensityMatrix) -> String {
    write_square(rho.matrix())
}

pub fn parse_hermitian(text: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(read_square(text)?)
}

pub fn format_hermitian(h: &HermitianMatrix) -> String {
    write_square(h.matrix())
}

pub fn parse_channel(text: &str) -> Result<KrausChannel> {
    let mut lines = Lines::new(text);
    let (ln, t) = lines.expect("`din dout k`")?;
    if t.len() != 3 {
        return Err(perr(ln, "expected `din dout k`"));
    }
    let din = parse_usize(ln, t[0])?;
    let dout = parse_usize(ln, t[1])?;
    let k = parse_usize(ln, t[2])?;
    if din == 0 || dout == 0 || k == 0 {
        return Err(perr(ln, "dimensions and Kraus count must be positive"));
    }
    let mut kraus = Vec::with_capacity(k);
    for want in 0..k {
        let (ln, t) = lines.expect("`kraus t`")?;
        if t.len() != 2 || t[0] != "kraus" {
            return Err(perr(ln, "expected `kraus t`"));
        }
        let idx = parse_usize(ln, t[1])?;
        if idx != want {
            return Err(perr(ln, format!("expected kraus {want}, got {idx}")));
        }
        kraus.push(read_entries(&mut lines, dout, din)?);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing content"));
    }
    KrausChannel::new(kraus, din, dout)
}

pub fn format_channel(phi: &KrausChannel) -> String {
    let mut s = format!("{} {} {}\n", phi.dim_in(), phi.dim_out(), phi.num_kraus());
    for (t, k) in phi.kraus().iter().enumerate() {
        s.push_str(&format!("kraus {t}\n"));
        write_entries(&mut s, k);
    }
    s
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    parse_state(&fs::read_to_string(path)?)
}

pub fn read_hermitian(path: &Path) -> Result<HermitianMatrix> {
    parse_hermitian(&fs::read_to_string(path)?)
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    parse_channel(&fs::read_to_string(path)?)
}

/// Write via a temporary file in the target directory and rename it into
/// place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_state};

    #[test]
    fn state_round_trip_is_exact() {
        let rho = random_state(3, 2, 4).unwrap();
        let text = format_state(&rho);
        let back = parse_state(&text).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
        assert_eq!(format_state(&back), text);
    }

    #[test]
    fn channel_round_trip_is_exact() {
        let ch = random_channel(2, 3, 2, 1).unwrap();
        let back = parse_channel(&format_channel(&ch)).unwrap();
        assert_eq!(back.kraus(), ch.kraus());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# qubit\ndim 1\n\n0 0 1 0\n";
        assert_eq!(parse_state(text).unwrap().dim(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "dim 2\n0 0 1 0\n0 1 0 0\n1 0 0 0\n1 1 x 0\n";
        match parse_state(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        match parse_state("dim 2\n0 0 1 0\n0 0 0 0\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("twice"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_state("dim 1\n0 0 1 0\nextra\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_state("dim 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_channel("1 1 1\nkraus 1\n0 0 1 0\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn semantic_validation_applies() {
        assert!(matches!(parse_state("dim 1\n0 0 2 0\n"), Err(Error::InvalidTrace(_))));
        assert!(parse_hermitian("dim 1\n0 0 2 0\n").is_ok());
        assert!(matches!(
            parse_channel("1 1 1\nkraus 0\n0 0 0.5 0\n"),
            Err(Error::TracePreservation(_))
        ));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.state");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
