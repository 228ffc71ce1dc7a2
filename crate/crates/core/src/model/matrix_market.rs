//! Matrix Market text format, dense side only.
//!
//! Reads `coordinate` and `array` layouts with `real` or `integer` fields and
//! `general`, `symmetric` or `skew-symmetric` storage. Symmetric storage is
//! expanded to the full matrix. Writes `array real general`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text)
}

pub fn parse_matrix_market(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(hline, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match fields[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::Unsupported(format!("layout '{other}'"))),
    };
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(Error::Unsupported(format!("field '{other}'"))),
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(Error::Unsupported(format!("symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (sline, size) = body.next().ok_or_else(|| parse_err(hline + 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(sline, format!("bad size token '{t}'"))))
        .collect::<Result<_>>()?;
    let expected_dims = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_err(sline, format!("size line needs {expected_dims} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} matrix cannot use symmetric storage"
        )));
    }

    let mut a = DMatrix::zeros(rows, cols);
    let mut last_line = sline;
    let parse_value = |line: usize, t: &str| -> Result<f64> {
        t.parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{t}'")))
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            for _ in 0..nnz {
                let (line, text) = body
                    .next()
                    .ok_or_else(|| parse_err(last_line + 1, format!("expected {nnz} entries, file truncated")))?;
                last_line = line;
                let toks: Vec<&str> = text.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(line, "coordinate entry needs 'row col value'"));
                }
                let i: usize = toks[0].parse().map_err(|_| parse_err(line, "bad row index"))?;
                let j: usize = toks[1].parse().map_err(|_| parse_err(line, "bad column index"))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::Dimension(format!(
                        "line {line}: entry ({i}, {j}) outside {rows}x{cols}"
                    )));
                }
                let v = parse_value(line, toks[2])?;
                let (i, j) = (i - 1, j - 1);
                a[(i, j)] += v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric if i != j => a[(j, i)] += v,
                    Symmetry::Skew if i != j => a[(j, i)] -= v,
                    _ => {}
                }
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists the lower triangle only
            let positions: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => j,
                        Symmetry::Skew => j + 1,
                    };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut values = Vec::with_capacity(positions.len());
            while values.len() < positions.len() {
                let (line, text) = body.next().ok_or_else(|| {
                    parse_err(
                        last_line + 1,
                        format!("expected {} values, file truncated", positions.len()),
                    )
                })?;
                last_line = line;
                for t in text.split_whitespace() {
                    values.push(parse_value(line, t)?);
                }
            }
            if values.len() != positions.len() {
                return Err(Error::Dimension(format!(
                    "header implies {} values, found {}",
                    positions.len(),
                    values.len()
                )));
            }
            for (&(i, j), v) in positions.iter().zip(values) {
                a[(i, j)] = v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => a[(j, i)] = v,
                    Symmetry::Skew => a[(j, i)] = -v,
                }
            }
        }
    }

    if let Some((line, _)) = body.next() {
        return Err(Error::Dimension(format!("line {line}: more data than the header declares")));
    }
    Ok(a)
}

/// Render as `array real general`, every entry in shortest round-trip form.
pub fn write_matrix_market(a: &DMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let _ = writeln!(out, "{:e}", a[(i, j)]);
        }
    }
    out
}

pub fn save_matrix(path: impl AsRef<Path>, a: &DMatrix<f64>) -> Result<()> {
    fs::write(path, write_matrix_market(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};

    #[test]
    fn coordinate_symmetric_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 4.0\n2 1 -1.5\n2 2 3.0\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a, dmatrix![4.0, -1.5; -1.5, 3.0]);
    }

    #[test]
    fn array_general_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a, dmatrix![1.0, 3.0, 5.0; 2.0, 4.0, 6.0]);
    }

    #[test]
    fn array_symmetric_lower_triangle() {
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        assert_eq!(parse_matrix_market(text).unwrap(), dmatrix![1.0, 2.0; 2.0, 3.0]);
    }

    #[test]
    fn save_load_is_bit_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-8..8)));
        let back = parse_matrix_market(&write_matrix_market(&a)).unwrap();
        for (x, y) in a.iter().zip(back.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn truncated_coordinate_is_parse_error() {
        let text = "%%MatrixMarket matrix coordinate real general\n3 3 4\n1 1 1.0\n2 2 1.0\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn truncated_array_is_parse_error() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn out_of_range_entry_is_dimension_error() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Dimension(_))));
    }

    #[test]
    fn complex_field_unsupported() {
        let text = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_matrix_market("hello\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_matrix_market(""), Err(Error::Parse { .. })));
    }
}
