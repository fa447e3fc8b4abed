//! Sparse matrices over F_p and the SMS text format.
//!
//! Layout: a header line `R C M`, one `i j v` line per nonzero with 1-based
//! coordinates sorted by `(i, j)`, and a terminating `0 0 0` line.

use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Entries are `(row, col, value)`, 0-based, sorted, values in `1..p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseModMatrix {
    pub rows: usize,
    pub cols: usize,
    pub p: u32,
    pub entries: Vec<(u32, u32, u32)>,
}

impl SparseModMatrix {
    pub fn new(rows: usize, cols: usize, p: u32) -> SparseModMatrix {
        SparseModMatrix { rows, cols, p, entries: Vec::new() }
    }

    /// Adds `v` (any integer) at `(r, c)`; call `normalize` afterwards.
    pub fn push(&mut self, r: usize, c: usize, v: i64) {
        let v = v.rem_euclid(self.p as i64) as u32;
        self.entries.push((r as u32, c as u32, v));
    }

    /// Sort, merge duplicates mod p and drop zeros.
    pub fn normalize(&mut self) {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let p = self.p as u64;
        let mut out: Vec<(u32, u32, u32)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match out.last_mut() {
                Some(l) if l.0 == r && l.1 == c => l.2 = ((l.2 as u64 + v as u64) % p) as u32,
                _ => out.push((r, c, v)),
            }
        }
        out.retain(|e| e.2 != 0);
        self.entries = out;
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn transpose(&self) -> SparseModMatrix {
        let mut t = SparseModMatrix {
            rows: self.cols,
            cols: self.rows,
            p: self.p,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        };
        t.entries.sort_unstable_by_key(|e| (e.0, e.1));
        t
    }

    /// Row-wise `(cols, vals)` lists.
    pub fn row_lists(&self) -> Vec<Vec<(u32, u32)>> {
        let mut rows = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            rows[r as usize].push((c, v));
        }
        rows
    }

    pub fn write_sms<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{} {} M", self.rows, self.cols)?;
        for &(r, c, v) in &self.entries {
            writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
        }
        writeln!(w, "0 0 0")
    }

    pub fn to_sms_string(&self) -> String {
        let mut b = Vec::new();
        self.write_sms(&mut b).expect("write to memory");
        String::from_utf8(b).expect("ascii")
    }

    /// Parses SMS text, reducing values mod `p` (negative values allowed).
    pub fn read_sms<R: BufRead>(r: R, p: u32) -> Result<SparseModMatrix, SmsError> {
        let err = |line: usize, msg: &str| SmsError::Parse { line, msg: msg.to_string() };
        let mut lines = r.lines().enumerate();
        let (rows, cols) = loop {
            let Some((i, l)) = lines.next() else {
                return Err(err(1, "missing header"));
            };
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 || f[2] != "M" {
                return Err(err(i + 1, "header must be `rows cols M`"));
            }
            let rows = f[0].parse::<usize>().map_err(|_| err(i + 1, "bad row count"))?;
            let cols = f[1].parse::<usize>().map_err(|_| err(i + 1, "bad column count"))?;
            break (rows, cols);
        };
        let mut m = SparseModMatrix::new(rows, cols, p);
        for (i, l) in lines {
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(i + 1, "expected `i j v`"));
            }
            let a = f[0].parse::<usize>().map_err(|_| err(i + 1, "bad row index"))?;
            let b = f[1].parse::<usize>().map_err(|_| err(i + 1, "bad column index"))?;
            let v = f[2].parse::<i64>().map_err(|_| err(i + 1, "bad value"))?;
            if a == 0 && b == 0 && v == 0 {
                m.normalize();
                return Ok(m);
            }
            if a == 0 || b == 0 || a > rows || b > cols {
                return Err(err(i + 1, "index out of range"));
            }
            m.push(a - 1, b - 1, v);
        }
        Err(err(0, "missing `0 0 0` terminator"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = SparseModMatrix::new(3, 2, 5);
        m.push(2, 1, -1);
        m.push(0, 0, 3);
        m.push(0, 0, 2);
        m.push(1, 1, 7);
        m.normalize();
        assert_eq!(m.entries, vec![(1, 1, 2), (2, 1, 4)]);
        let s = m.to_sms_string();
        assert_eq!(s, "3 2 M\n2 2 2\n3 2 4\n0 0 0\n");
        let back = SparseModMatrix::read_sms(s.as_bytes(), 5).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors() {
        let e = SparseModMatrix::read_sms("2 2 M\n1 3 1\n0 0 0\n".as_bytes(), 2).unwrap_err();
        assert!(e.to_string().starts_with("line 2"));
        assert!(SparseModMatrix::read_sms("2 2\n".as_bytes(), 2).is_err());
        assert!(SparseModMatrix::read_sms("2 2 M\n1 1 1\n".as_bytes(), 2).is_err());
        let z = SparseModMatrix::read_sms("4 5 M\n0 0 0\n".as_bytes(), 2).unwrap();
        assert_eq!((z.rows, z.cols, z.nnz()), (4, 5, 0));
    }
}
