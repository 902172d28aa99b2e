use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};

const BANNER: &str = "%%MatrixMarket matrix coordinate real general";

/// Writes `a` in Matrix Market coordinate format with 1-based indices.
pub fn write_mtx<W: Write>(a: &CsrMatrix, mut out: W) -> Result<()> {
    let mut s = String::with_capacity(32 * a.nnz() + 64);
    writeln!(s, "{BANNER}").expect("string write");
    writeln!(s, "{} {} {}", a.rows(), a.cols(), a.nnz()).expect("string write");
    for (i, j, v) in a.triplets() {
        writeln!(s, "{} {} {:e}", i + 1, j + 1, v).expect("string write");
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_mtx_file(a: &CsrMatrix, path: &Path) -> Result<()> {
    write_mtx(a, std::fs::File::create(path)?)
}

/// Reads a real or integer coordinate matrix; `symmetric` storage is expanded.
pub fn read_mtx<R: Read>(input: R) -> Result<CsrMatrix> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market stream".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse(format!("bad banner: {header}")));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::Unsupported(format!("{} storage", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::Unsupported(format!("{} field", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Unsupported(format!("{other} symmetry"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut next = |what: &str| {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing {what} in line '{t}'")))
        };
        match size {
            None => {
                let r = parse_usize(next("rows")?)?;
                let c = parse_usize(next("cols")?)?;
                let nnz = parse_usize(next("nnz")?)?;
                size = Some((r, c, nnz));
                trip.reserve(nnz);
            }
            Some((r, c, _)) => {
                let i = parse_usize(next("row")?)?;
                let j = parse_usize(next("col")?)?;
                let v: f64 = next("value")?
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad value in '{t}': {e}")))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(Error::Parse(format!("index ({i}, {j}) outside {r}x{c}")));
                }
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = if symmetric {
        trip.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        trip.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(r, c, &trip)
}

pub fn read_mtx_file(path: &Path) -> Result<CsrMatrix> {
    read_mtx(std::fs::File::open(path)?)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|e| Error::Parse(format!("bad integer '{s}': {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let a = CsrMatrix::from_triplets(3, 4, &[(0, 1, 0.1), (2, 3, -1.0 / 3.0), (1, 0, 1e-300)]).unwrap();
        let mut buf = Vec::new();
        write_mtx(&a, &mut buf).unwrap();
        assert_eq!(read_mtx(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 -1\n";
        let a = read_mtx(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(matches!(read_mtx("".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(
            read_mtx("%%MatrixMarket matrix array real general\n".as_bytes()),
            Err(Error::Unsupported(_))
        ));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n";
        assert!(matches!(read_mtx(short.as_bytes()), Err(Error::Parse(_))));
        let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n";
        assert!(matches!(read_mtx(oob.as_bytes()), Err(Error::Parse(_))));
    }
}
