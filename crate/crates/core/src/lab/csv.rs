//! Minimal CSV emission. Floats are written with 17 significant digits so
//! every value round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// An in-memory CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    body: String,
}

/// One CSV cell.
pub enum Cell<'a> {
    F(f64),
    U(u64),
    S(&'a str),
    B(bool),
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), body: String::new() }
    }

    pub fn header(&self) -> &[&'static str] {
        &self.header
    }

    pub fn push(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.header.len(), "row width must match header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            match c {
                Cell::F(v) => self.body.push_str(&fmt_f64(*v)),
                Cell::U(v) => write!(self.body, "{v}").unwrap(),
                Cell::S(s) => self.body.push_str(s),
                Cell::B(b) => self.body.push_str(if *b { "true" } else { "false" }),
            }
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        out.push_str(&self.body);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}
