//! Numeric CSV tables and float formatting.

use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a numeric table with a header row.
pub fn write_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parse a numeric CSV whose header must equal `header`.
pub fn read_table(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found != header {
        return Err(Error::Parse(format!("expected header {header:?}, found {found:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|cell| cell.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{cell}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 5e-324, f64::MAX, 0.0, 20.000000000000004];
        for v in vals {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        let text = write_table(&["a", "b"], vec![vec![0.1, 0.2], vec![1.0 / 3.0, 7.0]]);
        let rows = read_table(&text, &["a", "b"]).unwrap();
        assert_eq!(rows, vec![vec![0.1, 0.2], vec![1.0 / 3.0, 7.0]]);
        assert!(read_table(&text, &["a", "c"]).is_err());
    }
}
