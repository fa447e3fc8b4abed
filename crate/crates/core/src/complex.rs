//! Two-dimensional coset complexes of the link groups: vertices are cosets of
//! the three colored subgroups, triangles are group elements.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::f2rank::{rank_mod_p, RankError, RankOptions, RankStats};
use crate::gf::{Field, FieldError};
use crate::roots::{Color, Config};
pub use crate::sms::SparseModMatrix;
use crate::unipotent::{
    cosets, unipotent_group_with, Cosets, Entries, Generators, GroupError, MatrixGroup, Side, DEFAULT_BUDGET,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("complex is disconnected; the rank criterion does not apply")]
    Disconnected,
    #[error("{what}: enumerated {got}, formula gives {want}")]
    Count { what: &'static str, got: usize, want: usize },
    #[error("vertex {0} out of range")]
    NoVertex(usize),
}

/// Coset complex CC(G; K_RED, K_GREEN, K_BLUE).
///
/// Vertex ids: RED cosets, then GREEN, then BLUE, each block in order of first
/// appearance. Triangle `g` is `(red, green, blue)` of group element `g`.
/// Edges are sorted pairs `(u, v)`, `u < v`, in lexicographic order.
#[derive(Clone, Debug)]
pub struct CosetComplex {
    pub config: Config,
    pub q: u64,
    pub side: Side,
    pub group: MatrixGroup,
    pub subgroups: [MatrixGroup; 3],
    pub cosets: [Cosets; 3],
    pub offsets: [usize; 4],
    pub triangles: Vec<[u32; 3]>,
    pub edges: Vec<(u32, u32)>,
    /// Edge ids of each triangle: `[rg, rb, gb]`.
    pub tri_edges: Vec<[u32; 3]>,
}

/// `(V, E, T)` from the configuration's span sizes.
pub fn formula_counts(config: Config, q: u64) -> (u128, u128, u128) {
    let sys = config.system();
    let e = crate::roots::positive_span_roots(&sys, &config.base()).unwrap().len() as u32;
    let q = q as u128;
    let t = q.pow(e);
    let mut v = 0;
    for c in Color::ALL {
        let ec = crate::roots::positive_span_roots(&sys, &config.color_base(c)).unwrap().len() as u32;
        v += q.pow(e - ec);
    }
    // pairwise intersections are single root groups
    (v, 3 * q.pow(e - 1), t)
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub budget: usize,
    /// Keep generator words for group elements.
    pub witnesses: bool,
    pub generators: Generators,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { budget: DEFAULT_BUDGET, witnesses: false, generators: Generators::Span }
    }
}

pub fn build_link_complex(config: Config, q: u64) -> Result<CosetComplex, ComplexError> {
    build_link_complex_with(config, q, &BuildOptions::default())
}

/// Builds the complex; with `Generators::Span` the counts are checked against
/// the triangle and edge formulas.
pub fn build_link_complex_with(config: Config, q: u64, opts: &BuildOptions) -> Result<CosetComplex, ComplexError> {
    let f = field_of_order(q)?;
    let sys = config.system();
    let budget = opts.budget;
    let gens = opts.generators;
    let group = unipotent_group_with(&f, &sys, &config.base(), &Entries::Field, budget, opts.witnesses, gens)?;
    if !group.is_enumerated() {
        return Err(GroupError::Overflow { predicted: group.predicted.unwrap_or(0), budget }.into());
    }
    let sub = |c: Color| unipotent_group_with(&f, &sys, &config.color_base(c), &Entries::Field, budget, false, gens);
    let subgroups = [sub(Color::Red)?, sub(Color::Green)?, sub(Color::Blue)?];
    let cs = [
        cosets(&group, &subgroups[0], Side::Left)?,
        cosets(&group, &subgroups[1], Side::Left)?,
        cosets(&group, &subgroups[2], Side::Left)?,
    ];
    let mut offsets = [0usize; 4];
    for i in 0..3 {
        offsets[i + 1] = offsets[i] + cs[i].count();
    }
    let triangles: Vec<[u32; 3]> = (0..group.len())
        .map(|g| {
            [
                cs[0].of[g] + offsets[0] as u32,
                cs[1].of[g] + offsets[1] as u32,
                cs[2].of[g] + offsets[2] as u32,
            ]
        })
        .collect();
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(3 * triangles.len());
    for t in &triangles {
        edges.push((t[0], t[1]));
        edges.push((t[0], t[2]));
        edges.push((t[1], t[2]));
    }
    edges.sort_unstable();
    edges.dedup();
    let eid = |u: u32, v: u32| edges.binary_search(&(u, v)).unwrap() as u32;
    let tri_edges = triangles.iter().map(|t| [eid(t[0], t[1]), eid(t[0], t[2]), eid(t[1], t[2])]).collect();
    let cx = CosetComplex {
        config,
        q,
        side: Side::Left,
        group,
        subgroups,
        cosets: cs,
        offsets,
        triangles,
        edges,
        tri_edges,
    };
    if gens == Generators::Base {
        return Ok(cx);
    }
    let (_, e, t) = formula_counts(config, q);
    if cx.triangles.len() as u128 != t {
        return Err(ComplexError::Count { what: "triangles", got: cx.triangles.len(), want: t as usize });
    }
    if cx.edges.len() as u128 != e {
        return Err(ComplexError::Count { what: "edges", got: cx.edges.len(), want: e as usize });
    }
    Ok(cx)
}

/// F_q for a prime power `q`.
pub fn field_of_order(q: u64) -> Result<Arc<Field>, FieldError> {
    for p in 2..=q {
        if q % p == 0 {
            let mut k = 0;
            let mut r = q;
            while r % p == 0 {
                r /= p;
                k += 1;
            }
            if r != 1 {
                return Err(FieldError::NotPrime(q));
            }
            return Field::new(p, k);
        }
    }
    Err(FieldError::NotPrime(q))
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Counts {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub per_color: [usize; 3],
}

impl CosetComplex {
    pub fn counts(&self) -> Counts {
        Counts {
            vertices: self.num_vertices(),
            edges: self.edges.len(),
            triangles: self.triangles.len(),
            per_color: [self.cosets[0].count(), self.cosets[1].count(), self.cosets[2].count()],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets[3]
    }

    pub fn color_of(&self, v: usize) -> Color {
        Color::ALL[(0..3).find(|&i| v < self.offsets[i + 1]).expect("vertex in range")]
    }

    pub fn edge_id(&self, u: u32, v: u32) -> Option<u32> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&key).ok().map(|i| i as u32)
    }

    /// Vertex id of the coset `gK_c` for group element index `g`.
    pub fn vertex_of(&self, g: usize, c: Color) -> u32 {
        self.triangles[g][c.idx()]
    }

    /// Boundary matrix triangles x edges over F_p. Over F_2 every entry is 1;
    /// over odd p the triangle `[r, g, b]` is oriented, with boundary
    /// `[g,b] - [r,b] + [r,g]`.
    pub fn boundary2(&self, p: u32) -> SparseModMatrix {
        let mut m = SparseModMatrix::new(self.triangles.len(), self.edges.len(), p);
        for (t, e) in self.tri_edges.iter().enumerate() {
            m.push(t, e[0] as usize, 1);
            m.push(t, e[1] as usize, -1);
            m.push(t, e[2] as usize, 1);
        }
        m.normalize();
        m
    }

    /// Boundary matrix edges x vertices: edge `(u, v)` maps to `v - u`.
    pub fn boundary1(&self, p: u32) -> SparseModMatrix {
        let mut m = SparseModMatrix::new(self.edges.len(), self.num_vertices(), p);
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            m.push(i, u as usize, -1);
            m.push(i, v as usize, 1);
        }
        m.normalize();
        m
    }

    pub fn incidence_matrices(&self, p: u32) -> (SparseModMatrix, SparseModMatrix) {
        (self.boundary2(p), self.boundary1(p))
    }

    /// CSR adjacency of the 1-skeleton.
    pub fn adjacency(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.num_vertices();
        let mut deg = vec![0usize; n + 1];
        for &(u, v) in &self.edges {
            deg[u as usize + 1] += 1;
            deg[v as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut adj = vec![0u32; 2 * self.edges.len()];
        for &(u, v) in &self.edges {
            adj[fill[u as usize]] = v;
            fill[u as usize] += 1;
            adj[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        (deg, adj)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let (off, _) = self.adjacency();
        off.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        n == 0 || bfs(&self.adjacency(), 0).iter().all(|&d| d != u32::MAX)
    }

    /// Exact diameter. The group acts transitively on each color class by
    /// left translation, so one BFS per color gives every eccentricity.
    pub fn diameter(&self) -> Option<u32> {
        let adj = self.adjacency();
        let mut best = 0;
        for c in 0..3 {
            if self.offsets[c] == self.offsets[c + 1] {
                continue;
            }
            let d = bfs(&adj, self.offsets[c]);
            if d.iter().any(|&x| x == u32::MAX) {
                return None;
            }
            best = best.max(*d.iter().max().unwrap());
        }
        Some(best)
    }

    /// Diameter by BFS from every vertex (small complexes).
    pub fn diameter_all_pairs(&self) -> Option<u32> {
        let adj = self.adjacency();
        let mut best = 0;
        for v in 0..self.num_vertices() {
            let d = bfs(&adj, v);
            if d.iter().any(|&x| x == u32::MAX) {
                return None;
            }
            best = best.max(*d.iter().max().unwrap());
        }
        Some(best)
    }

    /// Link of a vertex: its neighbours and the edges between them that span
    /// a triangle with it.
    pub fn vertex_link(&self, v: usize) -> Result<VertexLink, ComplexError> {
        if v >= self.num_vertices() {
            return Err(ComplexError::NoVertex(v));
        }
        let c = self.color_of(v).idx();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for t in &self.triangles {
            if t[c] as usize == v {
                let o: Vec<u32> = (0..3).filter(|&i| i != c).map(|i| t[i]).collect();
                edges.push((o[0], o[1]));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut verts: Vec<u32> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        verts.sort_unstable();
        verts.dedup();
        let idx = |x: u32| verts.binary_search(&x).unwrap();
        let n = verts.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
            parent[ra] = rb;
        }
        let roots = (0..n).filter(|&i| find(&mut parent, i) == i).count();
        let others: Vec<usize> = (0..3).filter(|&i| i != c).collect();
        let side_counts = [
            verts.iter().filter(|&&x| self.color_of(x as usize).idx() == others[0]).count(),
            verts.iter().filter(|&&x| self.color_of(x as usize).idx() == others[1]).count(),
        ];
        let h = self.subgroups[c].len();
        let predicted = [
            h / intersection_size(&self.subgroups[c], &self.subgroups[others[0]]),
            h / intersection_size(&self.subgroups[c], &self.subgroups[others[1]]),
        ];
        Ok(VertexLink {
            vertex: v,
            color: Color::ALL[c],
            vertices: verts,
            edges,
            side_counts,
            predicted,
            connected: roots <= 1,
        })
    }

    /// Rank of the triangle boundary over F_p and the H_1 verdict.
    pub fn check_h1_vanishing(&self, p: u32, opts: &RankOptions) -> Result<H1Report, ComplexError> {
        if !self.is_connected() {
            return Err(ComplexError::Disconnected);
        }
        let d2 = self.boundary2(p);
        let r = rank_mod_p(&d2, opts)?;
        let (v, e) = (self.num_vertices(), self.edges.len());
        let needed = e - (v - 1);
        Ok(H1Report {
            p,
            vertices: v,
            edges: e,
            triangles: self.triangles.len(),
            rank_d2: r.rank,
            rank_d1: v - 1,
            needed,
            b1: needed - r.rank,
            vanishes: r.rank == needed,
            stats: r.stats,
        })
    }
}

fn intersection_size(a: &MatrixGroup, b: &MatrixGroup) -> usize {
    (0..a.len()).filter(|&i| b.index_of_bytes(a.bytes(i)).is_some()).count()
}

fn bfs(adj: &(Vec<usize>, Vec<u32>), s: usize) -> Vec<u32> {
    let (off, nb) = adj;
    let n = off.len() - 1;
    let mut d = vec![u32::MAX; n];
    let mut q = VecDeque::new();
    d[s] = 0;
    q.push_back(s);
    while let Some(u) = q.pop_front() {
        for &w in &nb[off[u]..off[u + 1]] {
            if d[w as usize] == u32::MAX {
                d[w as usize] = d[u] + 1;
                q.push_back(w as usize);
            }
        }
    }
    d
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexLink {
    pub vertex: usize,
    pub color: Color,
    pub vertices: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
    /// Link vertices of each of the two other colors.
    pub side_counts: [usize; 2],
    /// `|K_c| / |K_c ∩ K_other|` for the two other colors.
    pub predicted: [usize; 2],
    pub connected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct H1Report {
    pub p: u32,
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub rank_d2: usize,
    pub rank_d1: usize,
    pub needed: usize,
    pub b1: usize,
    pub vanishes: bool,
    pub stats: RankStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2rank::rank_reference_dense;

    #[test]
    fn a3_q2_counts() {
        let cx = build_link_complex(Config::A3, 2).unwrap();
        let c = cx.counts();
        assert_eq!((c.vertices, c.edges, c.triangles), (32, 96, 64));
        assert_eq!(formula_counts(Config::A3, 2), (32, 96, 64));
    }

    #[test]
    fn boundary_of_boundary() {
        for p in [2u32, 3, 5] {
            let cx = build_link_complex(Config::B3Small, 2).unwrap();
            let (d2, d1) = cx.incidence_matrices(p);
            let r1 = d1.row_lists();
            for row in d2.row_lists() {
                let mut acc = vec![0u64; cx.num_vertices()];
                for (e, a) in row {
                    for &(v, b) in &r1[e as usize] {
                        acc[v as usize] = (acc[v as usize] + a as u64 * b as u64) % p as u64;
                    }
                }
                assert!(acc.iter().all(|&x| x == 0));
            }
        }
    }

    #[test]
    fn small_q2_rank_and_links() {
        let cx = build_link_complex(Config::B3Small, 2).unwrap();
        let c = cx.counts();
        assert_eq!((c.vertices, c.edges, c.triangles), (56, 192, 128));
        let h = cx.check_h1_vanishing(2, &RankOptions::default()).unwrap();
        assert_eq!(h.rank_d2, 120);
        assert_eq!(rank_reference_dense(&cx.boundary1(2)).unwrap(), 55);
        assert!(!h.vanishes);
        for v in [0, cx.offsets[1], cx.offsets[2]] {
            let l = cx.vertex_link(v).unwrap();
            assert_eq!(l.side_counts, l.predicted);
        }
        assert_eq!(cx.diameter(), cx.diameter_all_pairs());
    }

    #[test]
    fn base_generated_q2() {
        let opts = BuildOptions { generators: Generators::Base, ..Default::default() };
        let cx = build_link_complex_with(Config::B3Small, 2, &opts).unwrap();
        assert_eq!(cx.triangles.len(), 16);
        let r = crate::f2rank::rank_mod_p(&cx.boundary2(2), &RankOptions::default()).unwrap();
        assert_eq!(r.rank, 15);
        let cx3 = build_link_complex_with(Config::B3Small, 3, &opts).unwrap();
        assert_eq!(cx3.triangles.len(), 2187);
    }

    #[test]
    fn prime_power_fields() {
        assert_eq!(field_of_order(9).unwrap().size(), 9);
        assert!(field_of_order(6).is_err());
    }
}
