//! Fixed-dialect CSV emission: comma separator, `.` decimal point, lowercase
//! snake_case headers, LF line endings. Floats print in shortest
//! round-trip form so identical runs produce identical bytes.

use std::fmt::Write as _;

pub struct CsvTable {
    buf: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(headers: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&headers.join(","));
        buf.push('\n');
        CsvTable {
            buf,
            columns: headers.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch");
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match cell {
                Cell::Str(s) => self.buf.push_str(s),
                Cell::U64(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                Cell::F64(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                Cell::Bool(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                Cell::Empty => {}
            }
        }
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub enum Cell {
    Str(&'static str),
    U64(u64),
    F64(f64),
    Bool(bool),
    Empty,
}
