//! Plain-text tables serialized as CSV.

/// Shortest round-trip decimal form; `1.0` prints as `1`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn fixed(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_print_without_fraction() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(fixed(0.68393972058572, 7), "0.6839397");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn fields_with_commas_are_quoted() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x, y".into(), "1".into()]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "a,b\n\"x, y\",1\n");
    }
}
