//! Matrix Market coordinate files (`real`/`integer`, `general`/`symmetric`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Reads a coordinate Matrix Market file. Symmetric files are expanded to
/// full storage and duplicate entries are summed.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad header `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format `{}`", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field `{}`", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut entries = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((nrows, ncols, nnz)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(lineno, "expected `nrows ncols nnz`".into()));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("invalid size `{s}`")))
            };
            let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            if symmetry == Symmetry::Symmetric && dims.0 != dims.1 {
                return Err(parse_err(lineno, "symmetric matrix must be square".into()));
            }
            triplets.reserve(
                dims.2
                    * if symmetry == Symmetry::Symmetric {
                        2
                    } else {
                        1
                    },
            );
            size = Some(dims);
            continue;
        };
        if fields.len() != 3 {
            return Err(parse_err(lineno, "expected `row col value`".into()));
        }
        let index = |s: &str, bound: usize| -> Result<usize> {
            let i = s
                .parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("invalid index `{s}`")))?;
            if i == 0 || i > bound {
                return Err(parse_err(lineno, format!("index {i} outside 1..={bound}")));
            }
            Ok(i - 1)
        };
        let r = index(fields[0], nrows)?;
        let c = index(fields[1], ncols)?;
        let v = fields[2]
            .parse::<f64>()
            .map_err(|_| parse_err(lineno, format!("non-numeric value `{}`", fields[2])))?;
        entries += 1;
        if entries > nnz {
            return Err(parse_err(
                lineno,
                format!("more than the declared {nnz} entries"),
            ));
        }
        triplets.push((r, c, v));
        if symmetry == Symmetry::Symmetric && r != c {
            triplets.push((c, r, v));
        }
    }
    let (nrows, ncols, _) = size.ok_or_else(|| parse_err(1, "missing size line".into()))?;
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

/// Writes `a` as a `coordinate real general` file with round-trip exact values.
pub fn write_matrix_market(a: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::fs;

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = Vec::new();
        for _ in 0..30 {
            t.push((
                rng.gen_range(0..10),
                rng.gen_range(0..10),
                rng.gen_range(-5.0..5.0),
            ));
        }
        let a = CsrMatrix::from_triplets(10, 10, &t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix_market(&a, &path).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap(), a);
    }

    #[test]
    fn symmetric_lower_triangle_expands() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.mtx");
        fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real symmetric\n% tridiag\n3 3 5\n1 1 2\n2 1 -1\n2 2 2\n3 2 -1\n3 3 2\n",
        )
        .unwrap();
        let a = read_matrix_market(&path).unwrap();
        assert_eq!(a.nnz(), 7);
        assert_eq!(
            a.to_dense(),
            vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]
        );
    }

    #[test]
    fn zero_index_is_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mtx");
        fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n",
        )
        .unwrap();
        match read_matrix_market(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("%%MatrixMarket matrix array real general\n1 1\n1\n", 1),
            (
                "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n",
                3,
            ),
            (
                "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
                3,
            ),
            ("not a header\n", 1),
        ];
        for (k, (text, want_line)) in cases.iter().enumerate() {
            let path = dir.path().join(format!("m{k}.mtx"));
            fs::write(&path, text).unwrap();
            match read_matrix_market(&path) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, *want_line, "case {k}"),
                other => panic!("case {k}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.mtx");
        fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.5\n1 1 2.0\n2 2 1\n",
        )
        .unwrap();
        let a = read_matrix_market(&path).unwrap();
        assert_eq!(a.get(0, 0), 3.5);
    }
}
