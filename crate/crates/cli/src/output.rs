//! CSV tables and rounding.

use std::fmt::Write as _;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // Display gives the shortest string that round-trips
            Cell::Num(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Cell::Num(v) => v.is_finite(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: vec![] }
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Round to `digits` significant digits.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    round_dec(v, digits - 1 - mag)
}

/// Round to `places` decimal places (negative places round to tens, hundreds, ...).
pub fn round_dec(v: f64, places: i32) -> f64 {
    if !v.is_finite() || places > 300 {
        return v;
    }
    let text = if places >= 0 {
        format!("{:.*}", places as usize, v)
    } else {
        let f = 10f64.powi(-places);
        return (v / f).round() * f;
    };
    text.parse().unwrap_or(v)
}

/// Digits justified by a relative tolerance: ceil(-log10 tol) + 1, capped at 17.
pub fn digits_for(tol: f64) -> i32 {
    ((-tol.log10()).ceil() as i32 + 1).clamp(1, 17)
}
