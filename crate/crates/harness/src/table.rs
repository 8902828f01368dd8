use crate::RunError;

/// A named CSV table. Floats are stored in Rust's shortest round-trip form so that a
/// table re-read from disk carries exactly the computed values.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Self, RunError> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers().map_err(|e| RunError::Config(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            rows.push(rec.map_err(|e| RunError::Config(e.to_string()))?.iter().map(String::from).collect());
        }
        Ok(Self { name: name.into(), header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// A numeric column; unparsable cells become NaN.
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(c) => self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Table::new("t", &["x", "note"]);
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::NAN] {
            t.push(vec![fmt_f64(x), "has \"quotes\", commas".into()]);
        }
        let back = Table::from_csv("t", &t.to_csv()).unwrap();
        assert_eq!(back, t);
        let xs = back.values("x");
        assert_eq!(xs[1], 1.0 / 3.0);
        assert!(xs[3].is_nan());
    }
}
