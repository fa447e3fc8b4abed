//! Exact rank over F_p of large sparse matrices: Markowitz-style sparse
//! elimination that hands the remainder to a packed dense eliminator once it
//! fills in. Also a dense reference rank and a reusable F_2 solver.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::sms::SparseModMatrix;

pub const DEFAULT_DENSE_THRESHOLD: f64 = 0.03;
pub const DEFAULT_MEM_BUDGET: usize = 3 << 30;
pub const MEM_BUDGET_ENV: &str = "CHEVLINK_MEM_BUDGET";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankError {
    #[error("dense phase needs {needed} bytes, over the budget of {budget}")]
    Budget { needed: usize, budget: usize },
    #[error("{0} is not a supported prime")]
    BadPrime(u32),
    #[error("matrix is {0}x{1}, over the reference limit of 5000")]
    TooLarge(usize, usize),
}

#[derive(Clone, Debug)]
pub struct RankOptions {
    /// Remaining-submatrix density that triggers the dense phase.
    pub dense_threshold: f64,
    /// Bytes allowed for sparse storage and the dense phase.
    pub mem_budget: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions { dense_threshold: DEFAULT_DENSE_THRESHOLD, mem_budget: mem_budget_from_env() }
    }
}

/// Budget from `CHEVLINK_MEM_BUDGET` (bytes, with optional K/M/G suffix).
pub fn mem_budget_from_env() -> usize {
    std::env::var(MEM_BUDGET_ENV).ok().and_then(|s| parse_bytes(&s)).unwrap_or(DEFAULT_MEM_BUDGET)
}

pub fn parse_bytes(s: &str) -> Option<usize> {
    let s = s.trim();
    let (num, mul) = match s.chars().last()? {
        'k' | 'K' => (&s[..s.len() - 1], 1usize << 10),
        'm' | 'M' => (&s[..s.len() - 1], 1 << 20),
        'g' | 'G' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    num.trim().parse::<usize>().ok().map(|n| n * mul)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub enum Phase {
    Sparse,
    Dense,
}

/// Snapshot passed to progress callbacks.
#[derive(Clone, Debug, Serialize)]
pub struct Progress {
    pub phase: Phase,
    pub rank: usize,
    pub active_rows: usize,
    pub active_cols: usize,
    pub nnz: usize,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct RankStats {
    pub sparse_pivots: usize,
    pub dense_rows: usize,
    pub dense_cols: usize,
    pub dense_rank: usize,
    pub max_nnz: usize,
    pub switch_density: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RankResult {
    pub rank: usize,
    pub stats: RankStats,
}

pub fn rank_mod_p(m: &SparseModMatrix, opts: &RankOptions) -> Result<RankResult, RankError> {
    rank_mod_p_with(m, opts, &mut |_| {})
}

/// Sparse elimination state.
struct Elim {
    p: u32,
    inv: Vec<u32>,
    rows: Vec<Vec<(u32, u32)>>,
    row_active: Vec<bool>,
    col_active: Vec<bool>,
    col_count: Vec<u32>,
    col_rows: Vec<Vec<u32>>,
    queue: BinaryHeap<Reverse<(u32, u32)>>,
    nnz: usize,
    active_rows: usize,
    active_cols: usize,
}

impl Elim {
    fn new(m: &SparseModMatrix) -> Elim {
        let p = m.p;
        let inv = (0..p).map(|a| if a == 0 { 0 } else { pow_mod(a, p - 2, p) }).collect();
        let rows = m.row_lists();
        let mut col_count = vec![0u32; m.cols];
        let mut col_rows = vec![Vec::new(); m.cols];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                col_count[c as usize] += 1;
                col_rows[c as usize].push(r as u32);
            }
        }
        let queue = rows.iter().enumerate().map(|(r, row)| Reverse((row.len() as u32, r as u32))).collect();
        let nnz = m.nnz();
        Elim {
            p,
            inv,
            row_active: vec![true; m.rows],
            col_active: vec![true; m.cols],
            col_count,
            col_rows,
            queue,
            nnz,
            active_rows: m.rows,
            active_cols: m.cols,
            rows,
        }
    }

    fn density(&self) -> f64 {
        if self.active_rows == 0 || self.active_cols == 0 {
            return 0.0;
        }
        self.nnz as f64 / (self.active_rows as f64 * self.active_cols as f64)
    }

    /// Next row with the fewest nonzeros (lowest index on ties).
    fn pop_row(&mut self) -> Option<usize> {
        while let Some(Reverse((l, r))) = self.queue.pop() {
            let r = r as usize;
            if !self.row_active[r] || self.rows[r].len() != l as usize {
                continue;
            }
            if l == 0 {
                self.row_active[r] = false;
                self.active_rows -= 1;
                continue;
            }
            return Some(r);
        }
        None
    }

    fn push_row(&mut self, r: usize) {
        self.queue.push(Reverse((self.rows[r].len() as u32, r as u32)));
    }

    /// `target -= f * pivot` with `f` chosen to clear column `c`.
    fn eliminate(&mut self, target: usize, pivot: &[(u32, u32)], c: u32, pinv: u32) {
        let p = self.p as u64;
        let row = std::mem::take(&mut self.rows[target]);
        let tv = match row.binary_search_by_key(&c, |e| e.0) {
            Ok(i) => row[i].1,
            Err(_) => {
                self.rows[target] = row;
                return;
            }
        };
        let f = (tv as u64 * pinv as u64 % p) as u32;
        let mut out = Vec::with_capacity(row.len() + pivot.len());
        let (mut i, mut j) = (0, 0);
        while i < row.len() || j < pivot.len() {
            let a = row.get(i).map_or(u32::MAX, |e| e.0);
            let b = pivot.get(j).map_or(u32::MAX, |e| e.0);
            if a < b {
                out.push(row[i]);
                i += 1;
            } else if b < a {
                let v = ((p - (f as u64 * pivot[j].1 as u64 % p)) % p) as u32;
                self.col_count[b as usize] += 1;
                self.col_rows[b as usize].push(target as u32);
                self.nnz += 1;
                out.push((b, v));
                j += 1;
            } else {
                let v = ((row[i].1 as u64 + p - f as u64 * pivot[j].1 as u64 % p) % p) as u32;
                if v == 0 {
                    self.col_count[a as usize] -= 1;
                    self.nnz -= 1;
                } else {
                    out.push((a, v));
                }
                i += 1;
                j += 1;
            }
        }
        self.rows[target] = out;
        self.push_row(target);
    }

    /// Removes the pivot row and column after elimination.
    fn retire(&mut self, r: usize, c: usize) {
        self.row_active[r] = false;
        self.active_rows -= 1;
        let row = std::mem::take(&mut self.rows[r]);
        for &(cc, _) in &row {
            self.col_count[cc as usize] -= 1;
            self.nnz -= 1;
        }
        self.col_active[c] = false;
        self.active_cols -= 1;
        self.col_rows[c] = Vec::new();
    }

    fn sparse_bytes(&self) -> usize {
        self.nnz * 12
    }
}

fn pow_mod(a: u32, mut e: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

fn check_prime(p: u32) -> Result<(), RankError> {
    if p < 2 || p > 251 || !crate::gf::is_prime(p as u64) {
        return Err(RankError::BadPrime(p));
    }
    Ok(())
}

/// Hybrid rank with a progress callback (called every few thousand pivots).
pub fn rank_mod_p_with(
    m: &SparseModMatrix,
    opts: &RankOptions,
    progress: &mut dyn FnMut(&Progress),
) -> Result<RankResult, RankError> {
    check_prime(m.p)?;
    let mut e = Elim::new(m);
    let mut stats = RankStats { max_nnz: e.nnz, ..Default::default() };
    let mut rank = 0;
    let mut since_check = 0usize;
    loop {
        since_check += 1;
        if since_check >= 64 {
            since_check = 0;
            let d = e.density();
            if d > opts.dense_threshold && e.active_rows > 0 {
                let need = dense_bytes(m.p, e.active_rows.min(e.active_cols), e.active_cols);
                if need <= opts.mem_budget {
                    stats.switch_density = Some(d);
                    break;
                }
            }
            if e.sparse_bytes() > opts.mem_budget {
                let need = dense_bytes(m.p, e.active_rows.min(e.active_cols), e.active_cols);
                return Err(RankError::Budget { needed: need, budget: opts.mem_budget });
            }
            if stats.sparse_pivots % 4096 == 0 {
                progress(&Progress {
                    phase: Phase::Sparse,
                    rank,
                    active_rows: e.active_rows,
                    active_cols: e.active_cols,
                    nnz: e.nnz,
                });
            }
        }
        let Some(r) = e.pop_row() else { break };
        // pivot column: fewest active entries, lowest index on ties
        let (c, pv) = e.rows[r]
            .iter()
            .min_by_key(|&&(c, _)| (e.col_count[c as usize], c))
            .copied()
            .expect("nonempty row");
        let pivot = e.rows[r].clone();
        let pinv = e.inv[pv as usize];
        let targets = std::mem::take(&mut e.col_rows[c as usize]);
        for &t in &targets {
            let t = t as usize;
            if t != r && e.row_active[t] {
                e.eliminate(t, &pivot, c, pinv);
            }
        }
        e.retire(r, c as usize);
        rank += 1;
        stats.sparse_pivots += 1;
        stats.max_nnz = stats.max_nnz.max(e.nnz);
    }
    if e.active_rows > 0 && e.nnz > 0 {
        let cols: Vec<usize> = (0..m.cols).filter(|&c| e.col_active[c] && e.col_count[c] > 0).collect();
        let mut cmap = vec![u32::MAX; m.cols];
        for (i, &c) in cols.iter().enumerate() {
            cmap[c] = i as u32;
        }
        let rows: Vec<usize> = (0..m.rows).filter(|&r| e.row_active[r] && !e.rows[r].is_empty()).collect();
        stats.dense_rows = rows.len();
        stats.dense_cols = cols.len();
        let need = dense_bytes(m.p, rows.len().min(cols.len()), cols.len());
        if need > opts.mem_budget {
            return Err(RankError::Budget { needed: need, budget: opts.mem_budget });
        }
        progress(&Progress { phase: Phase::Dense, rank, active_rows: rows.len(), active_cols: cols.len(), nnz: e.nnz });
        let it = rows.iter().map(|&r| {
            let row = std::mem::take(&mut e.rows[r]);
            row.into_iter().map(|(c, v)| (cmap[c as usize], v)).collect::<Vec<_>>()
        });
        let dr = if m.p == 2 { dense_rank_f2(cols.len(), it) } else { dense_rank_fp(m.p, cols.len(), it) };
        stats.dense_rank = dr;
        rank += dr;
    }
    Ok(RankResult { rank, stats })
}

fn dense_bytes(p: u32, basis_rows: usize, cols: usize) -> usize {
    if p == 2 {
        basis_rows * cols.div_ceil(64) * 8
    } else {
        basis_rows * cols
    }
}

/// Streaming packed basis over F_2, indexed by leading column.
fn dense_rank_f2(cols: usize, rows: impl Iterator<Item = Vec<(u32, u32)>>) -> usize {
    let words = cols.div_ceil(64);
    let mut basis: Vec<u64> = Vec::new();
    let mut lead = vec![u32::MAX; cols];
    let mut v = vec![0u64; words];
    for row in rows {
        v.iter_mut().for_each(|x| *x = 0);
        for (c, _) in row {
            v[c as usize / 64] |= 1 << (c % 64);
        }
        let mut w = 0;
        while w < words {
            if v[w] == 0 {
                w += 1;
                continue;
            }
            let c = w * 64 + v[w].trailing_zeros() as usize;
            let b = lead[c];
            if b == u32::MAX {
                lead[c] = (basis.len() / words) as u32;
                basis.extend_from_slice(&v);
                break;
            }
            let bv = &basis[b as usize * words..(b as usize + 1) * words];
            for k in w..words {
                v[k] ^= bv[k];
            }
        }
    }
    basis.len() / words
}

/// Streaming byte-per-entry basis over odd F_p with normalized leading entries.
fn dense_rank_fp(p: u32, cols: usize, rows: impl Iterator<Item = Vec<(u32, u32)>>) -> usize {
    let pp = p as usize;
    // sub[f][x] = -f*x mod p
    let mut sub = vec![0u8; pp * pp];
    for f in 0..pp {
        for x in 0..pp {
            sub[f * pp + x] = ((pp - f * x % pp) % pp) as u8;
        }
    }
    let inv: Vec<u32> = (0..p).map(|a| if a == 0 { 0 } else { pow_mod(a, p - 2, p) }).collect();
    let mut basis: Vec<u8> = Vec::new();
    let mut lead = vec![u32::MAX; cols];
    let mut v = vec![0u8; cols];
    for row in rows {
        v.iter_mut().for_each(|x| *x = 0);
        for (c, x) in row {
            v[c as usize] = x as u8;
        }
        let mut c = 0;
        while c < cols {
            let f = v[c] as usize;
            if f == 0 {
                c += 1;
                continue;
            }
            let b = lead[c];
            if b == u32::MAX {
                let s = inv[f] as usize;
                for x in v[c..].iter_mut() {
                    *x = (*x as usize * s % pp) as u8;
                }
                lead[c] = (basis.len() / cols) as u32;
                basis.extend_from_slice(&v);
                break;
            }
            let bv = &basis[b as usize * cols..(b as usize + 1) * cols];
            let tab = &sub[f * pp..(f + 1) * pp];
            for k in c..cols {
                let y = bv[k];
                if y != 0 {
                    let s = v[k] as usize + tab[y as usize] as usize;
                    v[k] = if s >= pp { (s - pp) as u8 } else { s as u8 };
                }
            }
            c += 1;
        }
    }
    if cols == 0 {
        0
    } else {
        basis.len() / cols
    }
}

/// Plain Gaussian elimination; dimensions at most 5000.
pub fn rank_reference_dense(m: &SparseModMatrix) -> Result<usize, RankError> {
    check_prime(m.p)?;
    if m.rows > 5000 || m.cols > 5000 {
        return Err(RankError::TooLarge(m.rows, m.cols));
    }
    let p = m.p as u64;
    let mut a = vec![vec![0u64; m.cols]; m.rows];
    for &(r, c, v) in &m.entries {
        a[r as usize][c as usize] = v as u64;
    }
    let mut rank = 0;
    for c in 0..m.cols {
        let Some(piv) = (rank..m.rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, piv);
        let inv = pow_mod(a[rank][c] as u32, m.p - 2, m.p) as u64;
        for r in rank + 1..m.rows {
            if a[r][c] != 0 {
                let f = a[r][c] * inv % p;
                for j in c..m.cols {
                    a[r][j] = (a[r][j] + p - f * a[rank][j] % p) % p;
                }
            }
        }
        rank += 1;
    }
    Ok(rank)
}

/// Row space of a 0/1 matrix over F_2 with every basis vector tracking the
/// set of input rows it combines; answers `x^T A = b` queries.
pub struct F2Solver {
    cols: usize,
    words: usize,
    rwords: usize,
    basis: Vec<u64>,
    combos: Vec<u64>,
    lead: Vec<u32>,
}

impl F2Solver {
    /// `rows[i]` lists the columns of row `i` that are 1 (repeats cancel).
    pub fn new(rows: &[Vec<u32>], cols: usize, mem_budget: usize) -> Result<F2Solver, RankError> {
        let words = cols.div_ceil(64);
        let rwords = rows.len().div_ceil(64);
        let need = rows.len().min(cols) * (words + rwords) * 8;
        if need > mem_budget {
            return Err(RankError::Budget { needed: need, budget: mem_budget });
        }
        let mut s = F2Solver { cols, words, rwords, basis: Vec::new(), combos: Vec::new(), lead: Vec::new() };
        let mut v = vec![0u64; words];
        let mut comb = vec![0u64; rwords];
        for (i, row) in rows.iter().enumerate() {
            v.iter_mut().for_each(|x| *x = 0);
            comb.iter_mut().for_each(|x| *x = 0);
            for &c in row {
                v[c as usize / 64] ^= 1 << (c % 64);
            }
            comb[i / 64] |= 1 << (i % 64);
            if let Some(c) = s.reduce(&mut v, &mut comb) {
                s.lead.push(c as u32);
                s.basis.extend_from_slice(&v);
                s.combos.extend_from_slice(&comb);
            }
        }
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.lead.len()
    }

    /// Reduces `v` by the basis in insertion order; returns the first
    /// remaining column, if any.
    fn reduce(&self, v: &mut [u64], comb: &mut [u64]) -> Option<usize> {
        for (b, &c) in self.lead.iter().enumerate() {
            let c = c as usize;
            if v[c / 64] >> (c % 64) & 1 == 1 {
                let bv = &self.basis[b * self.words..(b + 1) * self.words];
                for (x, y) in v.iter_mut().zip(bv) {
                    *x ^= y;
                }
                let bc = &self.combos[b * self.rwords..(b + 1) * self.rwords];
                for (x, y) in comb.iter_mut().zip(bc) {
                    *x ^= y;
                }
            }
        }
        v.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Rows whose sum is `target` (a column support), or `None`.
    pub fn solve(&self, target: &[u32]) -> Option<Vec<u32>> {
        let mut v = vec![0u64; self.words];
        for &c in target {
            assert!((c as usize) < self.cols, "column out of range");
            v[c as usize / 64] ^= 1 << (c % 64);
        }
        let mut comb = vec![0u64; self.rwords];
        if self.reduce(&mut v, &mut comb).is_some() {
            return None;
        }
        let mut out = Vec::new();
        for (w, &x) in comb.iter().enumerate() {
            let mut x = x;
            while x != 0 {
                out.push((w * 64 + x.trailing_zeros() as usize) as u32);
                x &= x - 1;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(rows: usize, cols: usize, p: u32, dens: f64, seed: u64) -> SparseModMatrix {
        let mut rng = crate::rng(seed);
        let mut m = SparseModMatrix::new(rows, cols, p);
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen_bool(dens) {
                    m.push(r, c, rng.gen_range(1..p) as i64);
                }
            }
        }
        m.normalize();
        m
    }

    #[test]
    fn trivial_ranks() {
        let z = SparseModMatrix::new(7, 9, 2);
        assert_eq!(rank_mod_p(&z, &RankOptions::default()).unwrap().rank, 0);
        let mut id = SparseModMatrix::new(1000, 1000, 2);
        for i in 0..1000 {
            id.push(i, i, 1);
        }
        id.normalize();
        assert_eq!(rank_mod_p(&id, &RankOptions::default()).unwrap().rank, 1000);
    }

    #[test]
    fn matches_reference_small() {
        for seed in 0..60 {
            for p in [2, 3, 5] {
                let m = random(30, 45, p, 0.08, seed);
                let r = rank_reference_dense(&m).unwrap();
                assert_eq!(rank_mod_p(&m, &RankOptions::default()).unwrap().rank, r);
                assert_eq!(rank_reference_dense(&m.transpose()).unwrap(), r);
            }
        }
    }

    #[test]
    fn thresholds_agree() {
        let m = random(400, 300, 2, 0.01, 9);
        let want = rank_reference_dense(&m).unwrap();
        for t in [0.01, 0.05, 0.2, 2.0] {
            let o = RankOptions { dense_threshold: t, mem_budget: 1 << 30 };
            assert_eq!(rank_mod_p(&m, &o).unwrap().rank, want);
        }
    }

    #[test]
    fn budget_error() {
        let m = random(300, 300, 2, 0.2, 1);
        let o = RankOptions { dense_threshold: 0.0, mem_budget: 10 };
        assert!(matches!(rank_mod_p(&m, &o), Err(RankError::Budget { .. })));
    }

    #[test]
    fn solver() {
        let rows = vec![vec![0, 1], vec![1, 2], vec![3]];
        let s = F2Solver::new(&rows, 4, 1 << 20).unwrap();
        assert_eq!(s.rank(), 3);
        assert_eq!(s.solve(&[0, 2]), Some(vec![0, 1]));
        assert_eq!(s.solve(&[0]), None);
        assert_eq!(s.solve(&[]), Some(vec![]));
    }

    #[test]
    fn env_budget_parse() {
        assert_eq!(parse_bytes("2G"), Some(2 << 30));
        assert_eq!(parse_bytes("512"), Some(512));
        assert_eq!(parse_bytes("x"), None);
    }
}
