//! The alist text format for sparse parity-check matrices.
//!
//! Layout, entries space-separated and 1-indexed:
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: check indices per column, zero-padded to max_col_degree>
//! <m lines: variable indices per row, zero-padded to max_row_degree>
//! ```
//!
//! The parser accepts both zero-padded and unpadded adjacency lines.

use crate::error::{Error, Result};

struct Cursor<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| Error::AlistParse(format!("missing {what}")))?;
        self.pos += 1;
        tok.parse::<usize>()
            .map_err(|e| Error::AlistParse(format!("bad {what}: {e}")))
    }

    fn skip_zero_padding(&mut self, count: usize) {
        for _ in 0..count {
            if self.tokens.get(self.pos) == Some(&"0") {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Reads one adjacency block: `degree` nonzero entries per line, then
    /// optional zero padding up to `max_degree`.
    fn read_block(
        &mut self,
        degrees: &[usize],
        max_degree: usize,
        what: &str,
    ) -> Result<Vec<Vec<u32>>> {
        let mut out = Vec::with_capacity(degrees.len());
        for (idx, &deg) in degrees.iter().enumerate() {
            let mut entries = Vec::with_capacity(deg);
            for _ in 0..deg {
                let v = self.next_usize(&format!("{what} {idx} entry"))?;
                if v == 0 {
                    return Err(Error::AlistParse(format!(
                        "{what} {idx}: zero before {deg} entries"
                    )));
                }
                entries.push(v as u32);
            }
            self.skip_zero_padding(max_degree - deg);
            out.push(entries);
        }
        Ok(out)
    }
}

/// Parses alist text into check-to-variable adjacency and the column count.
pub fn parse(text: &str) -> Result<(Vec<Vec<u32>>, usize)> {
    let mut cur = Cursor {
        tokens: text.split_ascii_whitespace().collect(),
        pos: 0,
    };

    let n = cur.next_usize("n")?;
    let m = cur.next_usize("m")?;
    let max_col = cur.next_usize("max column degree")?;
    let max_row = cur.next_usize("max row degree")?;
    let col_deg: Vec<usize> = (0..n)
        .map(|i| cur.next_usize(&format!("column degree {i}")))
        .collect::<Result<_>>()?;
    let row_deg: Vec<usize> = (0..m)
        .map(|i| cur.next_usize(&format!("row degree {i}")))
        .collect::<Result<_>>()?;
    if col_deg.iter().any(|&d| d > max_col) || row_deg.iter().any(|&d| d > max_row) {
        return Err(Error::AlistParse("degree exceeds declared maximum".into()));
    }

    // Column block is redundant with the row block; parse to advance.
    let _cols = cur.read_block(&col_deg, max_col, "column")?;
    let rows = cur.read_block(&row_deg, max_row, "row")?;

    let mut row_adj: Vec<Vec<u32>> = Vec::with_capacity(m);
    for (c, entries) in rows.into_iter().enumerate() {
        let mut row = Vec::with_capacity(entries.len());
        for v in entries {
            if v as usize > n {
                return Err(Error::AlistParse(format!(
                    "row {c}: variable {v} out of range 1..={n}"
                )));
            }
            row.push(v - 1);
        }
        row_adj.push(row);
    }
    Ok((row_adj, n))
}

/// Writes adjacency in alist form, zero-padding ragged lines to the
/// maximum degree.
pub fn write(row_adj: &[Vec<u32>], col_adj: &[Vec<u32>], n: usize) -> String {
    let m = row_adj.len();
    let max_col = col_adj.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = row_adj.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("{n} {m}\n{max_col} {max_row}\n"));
    let degree_line = |degrees: Vec<usize>| {
        degrees
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    out.push_str(&degree_line(col_adj.iter().map(Vec::len).collect()));
    out.push('\n');
    out.push_str(&degree_line(row_adj.iter().map(Vec::len).collect()));
    out.push('\n');
    let adj_line = |entries: &[u32], width: usize| {
        let mut parts: Vec<String> = entries.iter().map(|&e| (e + 1).to_string()).collect();
        parts.resize(width, "0".to_string());
        parts.join(" ")
    };
    for col in col_adj {
        out.push_str(&adj_line(col, max_col));
        out.push('\n');
    }
    for row in row_adj {
        out.push_str(&adj_line(row, max_row));
        out.push('\n');
    }
    out
}
