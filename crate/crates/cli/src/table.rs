use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    /// Shortest round-trip scientific notation; always a dot decimal separator.
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<const K: usize>(name: String, columns: [&str; K]) -> Self {
        Self {
            name,
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: String) {
        self.comments.push(line);
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header.iter().chain(&self.comments) {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("t".into(), ["x", "note", "y"]);
        t.comment("columns: x, note, y".into());
        t.push(vec![Cell::Num(0.1), Cell::Text("a,b".into()), Cell::Empty]);
        t.push(vec![
            Cell::Num(223.0),
            Cell::Text("ok".into()),
            Cell::Num(-1e-300),
        ]);
        assert_eq!(
            t.to_csv(&["digest abc".into()]),
            "# digest abc\n# columns: x, note, y\nx,note,y\n1e-1,\"a,b\",\n2.23e2,ok,-1e-300\n"
        );
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX] {
            let s = Cell::Num(x).render();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    proptest! {
        #[test]
        fn any_finite_number_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let s = Cell::Num(x).render();
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let json: Cell = serde_json::from_str(&serde_json::to_string(&Cell::Num(x)).unwrap()).unwrap();
            prop_assert_eq!(json, Cell::Num(x));
        }

        #[test]
        fn quoted_text_round_trips(s in "[a-z,\"]{0,12}") {
            let mut t = Table::new("t".into(), ["a", "b"]);
            t.push(vec![Cell::Text(s.clone()), Cell::Num(1.0)]);
            let csv = t.to_csv(&[]);
            let field = csv.lines().nth(1).unwrap().strip_suffix(",1e0").unwrap();
            let parsed = match field.strip_prefix('"').and_then(|f| f.strip_suffix('"')) {
                Some(inner) => inner.replace("\"\"", "\""),
                None => field.to_string(),
            };
            prop_assert_eq!(parsed, s);
        }
    }
}
