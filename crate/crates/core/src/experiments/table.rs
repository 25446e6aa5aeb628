use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A CSV table with optional `#` comment lines above the header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip decimal; `nan`, `inf`, `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Fails unless the table holds exactly `expected` rows.
    pub fn check_rows(&self, expected: usize) -> Result<()> {
        if self.rows.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.rows.len(),
            });
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            if r.len() != self.header.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.header.len(),
                    found: r.len(),
                });
            }
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(file)
    }

    /// Reads a table written by [`Table::write`].
    pub fn read<R: std::io::BufRead>(input: R) -> Result<Self> {
        let mut comments = Vec::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            match line.strip_prefix("# ") {
                Some(c) if body.is_empty() => comments.push(c.to_string()),
                _ => {
                    body.push_str(&line);
                    body.push('\n');
                }
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table {
            comments,
            header,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_formatting() {
        let mut t = Table::new(&["x", "y"]).comment("note");
        t.push(vec![fmt_f64(0.1), fmt_f64(f64::NEG_INFINITY)]);
        t.push(vec![fmt_opt(None), "a,b".into()]);
        let bytes = t.to_bytes().unwrap();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "# note\nx,y\n0.1,-inf\n,\"a,b\"\n"
        );
        assert_eq!(Table::read(bytes.as_slice()).unwrap(), t);
        assert!(t.check_rows(2).is_ok() && t.check_rows(3).is_err());
    }
}
