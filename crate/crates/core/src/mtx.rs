//! Matrix Market coordinate files and plain-text vectors.
//!
//! Reading accepts `real`, `integer` and `pattern` fields with `general` or
//! `symmetric` symmetry. Writing always produces `coordinate real general`
//! with 1-based indices and shortest round-trip float formatting.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SparsityPattern};

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a Matrix Market coordinate matrix.
pub fn read_matrix<R: Read>(reader: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut entries_read = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| parse_err(lineno, format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| parse_err(lineno, format!("bad {what}: {e}")))
        };
        match size {
            None => {
                let m = next_usize("row count")?;
                let n = next_usize("column count")?;
                let nnz = next_usize("entry count")?;
                size = Some((m, n, nnz));
                triplets.reserve(nnz);
            }
            Some((m, n, _)) => {
                let i = next_usize("row index")?;
                let j = next_usize("column index")?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) out of range")));
                }
                let v = match field {
                    Field::Pattern => 1.0,
                    Field::Real => parts
                        .next()
                        .ok_or_else(|| parse_err(lineno, "missing value"))?
                        .parse::<f64>()
                        .map_err(|e| parse_err(lineno, format!("bad value: {e}")))?,
                };
                entries_read += 1;
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    if entries_read != nnz {
        return Err(parse_err(0, format!("header declares {nnz} entries, found {entries_read}")));
    }
    SparseMatrix::from_triplets(m, n, triplets)
}

/// Writes `m` as `coordinate real general`.
pub fn write_matrix<W: Write>(m: &SparseMatrix, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.iter() {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    read_matrix(File::open(path)?)
}

pub fn write_matrix_file(m: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(m, File::create(path)?)
}

/// Reads a sparsity pattern: every stored nonzero is a position. Files with
/// the `pattern` field are the usual choice.
pub fn read_pattern_file(path: impl AsRef<Path>) -> Result<SparsityPattern> {
    let m = read_matrix_file(path)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(SparsityPattern::from_support(&m))
}

/// Reads one value per line; blank lines and lines starting with `%` or `#`
/// are skipped.
pub fn read_vector<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|e| parse_err(idx + 1, format!("bad value '{t}': {e}")))?,
        );
    }
    Ok(values)
}

pub fn write_vector<W: Write>(values: &[f64], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for v in values {
        writeln!(w, "{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_vector(File::open(path)?)
}

pub fn write_vector_file(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_vector(values, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_general_real() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 3\n1 1 0.5\n1 2 0.5\n2 2 1\n";
        let m = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.to_dense(), vec![vec![0.5, 0.5], vec![0.0, 1.0]]);
    }

    #[test]
    fn reads_symmetric_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 3\n1 1\n2 1\n3 3\n";
        let m = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_matrix("".as_bytes()).is_err());
        assert!(read_matrix("%%MatrixMarket matrix array real general\n1 1\n1\n".as_bytes()).is_err());
        let out_of_range = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            read_matrix(out_of_range.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix(short.as_bytes()).is_err());
    }

    #[test]
    fn vector_format() {
        let v = read_vector("# pi\n0.25\n\n0.75\n".as_bytes()).unwrap();
        assert_eq!(v, vec![0.25, 0.75]);
        assert!(read_vector("0.1\nabc\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn write_read_round_trip(t in proptest::collection::vec((0usize..6, 0usize..6, -1e3f64..1e3), 0..20)) {
            let m = SparseMatrix::from_triplets(6, 6, t).unwrap();
            let mut buf = Vec::new();
            write_matrix(&m, &mut buf).unwrap();
            prop_assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
        }
    }
}
