//! Sparse binary parity-check matrix with edge indexing and alist I/O.

use std::fmt::Write as _;

use super::LdpcError;

/// `m x n` parity-check matrix. Edges are numbered row by row, columns
/// ascending within a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    m: usize,
    n: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    row_start: Vec<usize>,
    edge_col: Vec<u32>,
    edge_row: Vec<u32>,
    /// Edge ids of each column, ascending by row.
    col_edges: Vec<Vec<u32>>,
}

impl ParityCheckMatrix {
    /// Builds from per-row column lists. Rows must have equal weight,
    /// positions must be in range and unique.
    pub fn from_rows(n: usize, rows: Vec<Vec<u32>>) -> Result<Self, LdpcError> {
        let m = rows.len();
        if m == 0 || n == 0 {
            return Err(LdpcError::Matrix("empty matrix".into()));
        }
        if m >= n {
            return Err(LdpcError::Matrix(format!("need m < n, got {m} x {n}")));
        }
        let mut rows = rows;
        let w = rows[0].len();
        let mut cols = vec![Vec::new(); n];
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable();
            if r.len() != w {
                return Err(LdpcError::Matrix(format!("row {i} has weight {}, expected {w}", r.len())));
            }
            if r.windows(2).any(|p| p[0] == p[1]) {
                return Err(LdpcError::Matrix(format!("row {i} has a duplicate position")));
            }
            for &c in r.iter() {
                if c as usize >= n {
                    return Err(LdpcError::Matrix(format!("row {i}: column {c} out of range")));
                }
                cols[c as usize].push(i as u32);
            }
        }
        let mut row_start = Vec::with_capacity(m + 1);
        let (mut edge_col, mut edge_row) = (Vec::new(), Vec::new());
        let mut col_edges = vec![Vec::new(); n];
        for (i, r) in rows.iter().enumerate() {
            row_start.push(edge_col.len());
            for &c in r {
                col_edges[c as usize].push(edge_col.len() as u32);
                edge_col.push(c);
                edge_row.push(i as u32);
            }
        }
        row_start.push(edge_col.len());
        Ok(ParityCheckMatrix { m, n, rows, cols, row_start, edge_col, edge_row, col_edges })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> usize {
        self.edge_col.len()
    }

    pub fn row_weight(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    /// Rows containing column `j`.
    pub fn col(&self, j: usize) -> &[u32] {
        &self.cols[j]
    }

    pub fn column_weights(&self) -> Vec<usize> {
        self.cols.iter().map(Vec::len).collect()
    }

    pub fn row_edges(&self, i: usize) -> std::ops::Range<usize> {
        self.row_start[i]..self.row_start[i + 1]
    }

    pub fn col_edges(&self, j: usize) -> &[u32] {
        &self.col_edges[j]
    }

    pub fn edge_col(&self, e: usize) -> usize {
        self.edge_col[e] as usize
    }

    pub fn edge_row(&self, e: usize) -> usize {
        self.edge_row[e] as usize
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    /// `H x mod 2`.
    pub fn syndrome(&self, x: &[u8]) -> Result<Vec<u8>, LdpcError> {
        if x.len() != self.n {
            return Err(LdpcError::Dimension { expected: self.n, got: x.len() });
        }
        Ok(self.rows.iter().map(|r| r.iter().fold(0u8, |acc, &c| acc ^ (x[c as usize] & 1))).collect())
    }

    /// Number of length-4 cycles.
    pub fn four_cycles(&self) -> u64 {
        let mut pair_counts = std::collections::HashMap::<(u32, u32), u32>::new();
        for c in &self.cols {
            for a in 0..c.len() {
                for b in a + 1..c.len() {
                    *pair_counts.entry((c[a], c[b])).or_default() += 1;
                }
            }
        }
        pair_counts.values().map(|&k| (k as u64) * (k as u64 - 1) / 2).sum()
    }

    /// alist text: dimensions, maximum weights, weight lists, then 1-based
    /// column and row lists zero-padded to the maximum weight.
    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_weight();
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(s, "{} {}", self.n, self.m).unwrap();
        writeln!(s, "{max_col} {max_row}").unwrap();
        writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len))).unwrap();
        writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len))).unwrap();
        for c in &self.cols {
            let mut v: Vec<usize> = c.iter().map(|&r| r as usize + 1).collect();
            v.resize(max_col, 0);
            writeln!(s, "{}", join(&mut v.into_iter())).unwrap();
        }
        for r in &self.rows {
            writeln!(s, "{}", join(&mut r.iter().map(|&c| c as usize + 1))).unwrap();
        }
        s
    }

    pub fn from_alist(text: &str) -> Result<Self, LdpcError> {
        let bad = |msg: &str| LdpcError::Alist(msg.to_string());
        let mut nums = text.split_whitespace().map(|t| t.parse::<usize>().map_err(|_| bad(&format!("not a number: {t:?}"))));
        let mut next = || nums.next().unwrap_or_else(|| Err(bad("unexpected end of file")));
        let (n, m) = (next()?, next()?);
        let (max_col, max_row) = (next()?, next()?);
        let col_w: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_, _>>()?;
        let row_w: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_, _>>()?;
        let mut col_lists = Vec::with_capacity(n);
        for &w in &col_w {
            let entries: Vec<usize> = (0..max_col).map(|_| next()).collect::<Result<_, _>>()?;
            if entries.iter().filter(|&&x| x != 0).count() != w {
                return Err(bad("column list disagrees with column weight"));
            }
            col_lists.push(entries.into_iter().filter(|&x| x != 0).collect::<Vec<_>>());
        }
        let mut rows = Vec::with_capacity(m);
        for &w in &row_w {
            let entries: Vec<usize> = (0..max_row).map(|_| next()).collect::<Result<_, _>>()?;
            let r: Vec<u32> = entries.iter().filter(|&&x| x != 0).map(|&x| x as u32 - 1).collect();
            if r.len() != w {
                return Err(bad("row list disagrees with row weight"));
            }
            if r.iter().any(|&c| c as usize >= n) {
                return Err(bad("column index out of range"));
            }
            rows.push(r);
        }
        let h = Self::from_rows(n, rows)?;
        for (j, list) in col_lists.iter().enumerate() {
            let mut rs: Vec<u32> = list.iter().map(|&r| r as u32 - 1).collect();
            rs.sort_unstable();
            if rs != h.cols[j] {
                return Err(bad("column and row lists disagree"));
            }
        }
        Ok(h)
    }
}
