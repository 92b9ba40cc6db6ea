use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linop::DenseMatrix;

/// Reads a matrix file: a `rows cols` header line followed by `rows` lines of `cols`
/// whitespace-separated numbers. Blank lines are skipped.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DenseMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols] = dims.as_slice() else {
        return Err(err(hline, format!("header must be `rows cols`, got `{header}`")));
    };
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| err(hline, format!("invalid dimension `{s}`")))
    };
    let (rows, cols) = (parse_dim(rows)?, parse_dim(cols)?);

    let mut entries = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lineno, line) in lines {
        if seen == rows {
            return Err(err(lineno, format!("more than {rows} rows")));
        }
        let before = entries.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(lineno, format!("row {}: not a number: `{tok}`", seen + 1)))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("row {}: non-finite value `{tok}`", seen + 1)));
            }
            entries.push(v);
        }
        let got = entries.len() - before;
        if got != cols {
            return Err(err(lineno, format!("row {} has {got} columns, expected {cols}", seen + 1)));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(err(text.lines().count(), format!("expected {rows} rows, found {seen}")));
    }
    DenseMatrix::from_row_major(rows, cols, &entries)
}

/// Writes every entry with 17 significant digits so that reading it back is exact.
pub fn format_matrix(a: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{:.16e}", a.get(i, j)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix(a: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_matrix(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awkward_values_roundtrip_exactly() {
        let vals = [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0];
        let a = DenseMatrix::from_row_major(2, 3, &vals).unwrap();
        let back = parse_matrix(&format_matrix(&a), Path::new("m.txt")).unwrap();
        for (x, y) in a.to_row_major().iter().zip(back.to_row_major()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn short_row_names_the_row() {
        let e = parse_matrix("2 3\n1 2 3\n4 5\n", Path::new("m.txt")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("m.txt:3"), "{msg}");
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn malformed_inputs() {
        let p = Path::new("x");
        assert!(parse_matrix("", p).is_err());
        assert!(parse_matrix("2\n1 2\n", p).is_err());
        assert!(parse_matrix("1 2\n1 abc\n", p).unwrap_err().to_string().contains("abc"));
        assert!(parse_matrix("1 1\n1\n2\n", p).is_err());
        assert!(parse_matrix("2 1\n1\n", p).is_err());
        assert!(parse_matrix("1 1\nNaN\n", p).is_err());
    }
}
