//! Colored words, closed walks and F_2 fillings in a coset complex and its
//! multicomplex (self-loops and degenerate triangles allowed).
//!
//! Elements are indices into `CosetComplex::group`. A degenerate triangle is a
//! sorted vertex multiset with a repeat; a plain triangle is the id of the
//! group element spanning it.

use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chevalley::{Mat, Realization};
use crate::complex::{build_link_complex, ComplexError, CosetComplex};
use crate::f2rank::{mem_budget_from_env, F2Solver, RankError};
use crate::roots::{Color, Config};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("letter {0} is not in its colored subgroup")]
    NotInSubgroup(usize),
    #[error("letters {0} and {1} are adjacent with the same color in a plain word")]
    RepeatedColor(usize, usize),
    #[error("word does not multiply to the identity")]
    NonTrivial,
    #[error("vertices {0} and {1} are not adjacent")]
    MissingEdge(u32, u32),
    #[error("{0}")]
    Precondition(String),
    #[error("step {step}: {msg}")]
    Derivation { step: usize, msg: String },
    #[error("q = {0} is even, so 1/2 does not exist")]
    EvenOrder(u64),
    #[error("no filling structure found")]
    NotFound,
}

/// Word in the free product of the colored subgroups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColoredWord {
    /// `(element, color)` with the element in the subgroup of that color.
    pub letters: Vec<(usize, Color)>,
    /// Multicomplex mode: cyclically adjacent letters may share a color.
    pub multi: bool,
}

impl ColoredWord {
    pub fn new(letters: Vec<(usize, Color)>, multi: bool) -> ColoredWord {
        ColoredWord { letters, multi }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn elements(&self) -> Vec<usize> {
        self.letters.iter().map(|l| l.0).collect()
    }

    /// Letters `k..` followed by `..k`.
    pub fn rotate(&self, k: usize) -> ColoredWord {
        let n = self.len();
        let k = if n == 0 { 0 } else { k % n };
        let mut letters = self.letters[k..].to_vec();
        letters.extend_from_slice(&self.letters[..k]);
        ColoredWord { letters, multi: self.multi }
    }

    pub fn slice(&self, a: usize, b: usize) -> ColoredWord {
        ColoredWord { letters: self.letters[a..b].to_vec(), multi: true }
    }

    /// Concatenation, always in multicomplex mode.
    pub fn concat(&self, o: &ColoredWord) -> ColoredWord {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&o.letters);
        ColoredWord { letters, multi: true }
    }

    pub fn as_multi(&self) -> ColoredWord {
        ColoredWord { letters: self.letters.clone(), multi: true }
    }
}

/// F_2 1-chain as a set of sorted vertex pairs; `(v, v)` is a self-loop.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OneChain {
    pub edges: BTreeSet<(u32, u32)>,
}

impl OneChain {
    pub fn toggle(&mut self, u: u32, v: u32) {
        let k = if u <= v { (u, v) } else { (v, u) };
        if !self.edges.remove(&k) {
            self.edges.insert(k);
        }
    }

    pub fn add(&mut self, o: &OneChain) {
        for &(u, v) in &o.edges {
            self.toggle(u, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges.iter().any(|e| e.0 == e.1)
    }
}

/// F_2 2-chain: plain triangle ids plus degenerate vertex multisets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TwoChain {
    pub triangles: BTreeSet<u32>,
    pub degenerate: BTreeSet<[u32; 3]>,
}

impl TwoChain {
    pub fn size(&self) -> usize {
        self.triangles.len() + self.degenerate.len()
    }

    pub fn toggle_triangle(&mut self, t: u32) {
        if !self.triangles.remove(&t) {
            self.triangles.insert(t);
        }
    }

    pub fn toggle_degenerate(&mut self, mut f: [u32; 3]) {
        f.sort_unstable();
        if !self.degenerate.remove(&f) {
            self.degenerate.insert(f);
        }
    }

    pub fn add(&mut self, o: &TwoChain) {
        for &t in &o.triangles {
            self.toggle_triangle(t);
        }
        for &f in &o.degenerate {
            self.toggle_degenerate(f);
        }
    }

    /// Drops degenerate triangles, leaving a chain of the plain complex.
    pub fn project(&self) -> TwoChain {
        TwoChain { triangles: self.triangles.clone(), degenerate: BTreeSet::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Walk {
    pub vertices: Vec<u32>,
    pub chain: OneChain,
}

/// Relator with a coloring and a filling of its loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertifiedRelator {
    pub word: ColoredWord,
    pub fill: TwoChain,
}

/// One substitution, applied forwards starting from the word `1`.
///
/// The current word is inverted if `invert`, rotated left by `shift`, then
/// read as `p u q` with `|p| = p_len`, `|u| = u_len`; `u` is replaced by the
/// elements `v`. Some rotation of the relator or its inverse must equal
/// `u v^-1` letter by letter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivationStep {
    pub invert: bool,
    pub shift: usize,
    pub p_len: usize,
    pub u_len: usize,
    pub v: Vec<usize>,
    pub relator: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivationFilling {
    pub fill: TwoChain,
    /// Size before degenerate triangles are dropped.
    pub multi_size: usize,
    pub steps: usize,
    pub ell: usize,
    pub t: usize,
    /// `(t + 4 ell + 2) steps + 1`
    pub bound: usize,
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeRadius {
    pub apex: u32,
    pub edges: usize,
    /// `None` when some cone loop has no filling.
    pub radius: Option<usize>,
    pub unsat_edges: usize,
    /// `1 / (3 R)` when the radius is finite and positive.
    pub expansion_lower_bound: Option<f64>,
    /// BFS tree: parent vertex, `u32::MAX` at the apex.
    pub parent: Vec<u32>,
    pub fill_sizes: Vec<Option<u32>>,
}

/// Word and filling operations over a fixed complex.
pub struct Chains<'a> {
    pub cx: &'a CosetComplex,
    id: usize,
    edge_off: Vec<usize>,
    edge_tris: Vec<u32>,
    solver: OnceLock<Result<F2Solver, RankError>>,
}

impl<'a> Chains<'a> {
    pub fn new(cx: &'a CosetComplex) -> Result<Chains<'a>, ChainError> {
        let id = cx
            .group
            .index_of(&Mat::identity(cx.group.n))
            .ok_or_else(|| ChainError::Precondition("group is not enumerated".into()))?;
        let mut edge_off = vec![0usize; cx.edges.len() + 1];
        for te in &cx.tri_edges {
            for &e in te {
                edge_off[e as usize + 1] += 1;
            }
        }
        for i in 0..cx.edges.len() {
            edge_off[i + 1] += edge_off[i];
        }
        let mut fill = edge_off.clone();
        let mut edge_tris = vec![0u32; edge_off[cx.edges.len()]];
        for (t, te) in cx.tri_edges.iter().enumerate() {
            for &e in te {
                edge_tris[fill[e as usize]] = t as u32;
                fill[e as usize] += 1;
            }
        }
        Ok(Chains { cx, id, edge_off, edge_tris, solver: OnceLock::new() })
    }

    pub fn identity(&self) -> usize {
        self.id
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.cx.group.mul_index(a, b)
    }

    pub fn inv(&self, a: usize) -> usize {
        let f = &self.cx.group.field;
        let m = self.cx.group.element(a).inverse(f).expect("invertible");
        self.cx.group.index_of(&m).expect("closed under inverses")
    }

    pub fn phi(&self, w: &ColoredWord) -> usize {
        w.letters.iter().fold(self.id, |acc, &(x, _)| self.mul(acc, x))
    }

    pub fn member(&self, x: usize, c: Color) -> bool {
        self.cx.vertex_of(x, c) == self.cx.vertex_of(self.id, c)
    }

    /// `(x_{n-1}^-1, c_{n-1}) ... (x_0^-1, c_0)`.
    pub fn inverse(&self, w: &ColoredWord) -> ColoredWord {
        let letters = w.letters.iter().rev().map(|&(x, c)| (self.inv(x), c)).collect();
        ColoredWord { letters, multi: w.multi }
    }

    /// The walk `1 H_0 -> x_0 H_1 -> x_0 x_1 H_2 -> ...` and its edge chain.
    pub fn word_to_loop(&self, w: &ColoredWord) -> Result<Walk, ChainError> {
        let n = w.len();
        for (i, &(x, c)) in w.letters.iter().enumerate() {
            if !self.member(x, c) {
                return Err(ChainError::NotInSubgroup(i));
            }
        }
        if !w.multi {
            for i in 0..n {
                let j = (i + 1) % n;
                if w.letters[i].1 == w.letters[j].1 {
                    return Err(ChainError::RepeatedColor(i, j));
                }
            }
        }
        let mut pre = self.id;
        let mut vertices = Vec::with_capacity(n);
        for &(x, c) in &w.letters {
            vertices.push(self.cx.vertex_of(pre, c));
            pre = self.mul(pre, x);
        }
        if pre != self.id {
            return Err(ChainError::NonTrivial);
        }
        let mut chain = OneChain::default();
        for i in 0..n {
            let (u, v) = (vertices[i], vertices[(i + 1) % n]);
            if u != v && self.cx.edge_id(u, v).is_none() {
                return Err(ChainError::MissingEdge(u, v));
            }
            chain.toggle(u, v);
        }
        Ok(Walk { vertices, chain })
    }

    /// Colored word whose loop is a translate of the closed walk `walk`,
    /// together with that translating element.
    pub fn loop_to_word(&self, walk: &[u32]) -> Result<(ColoredWord, usize), ChainError> {
        let r = walk.len();
        let mut wit = Vec::with_capacity(r);
        for i in 0..r {
            let (u, v) = (walk[i], walk[(i + 1) % r]);
            let e = self.cx.edge_id(u, v).filter(|_| u != v).ok_or(ChainError::MissingEdge(u, v))?;
            wit.push(self.edge_tris[self.edge_off[e as usize]] as usize);
        }
        let mut letters = Vec::with_capacity(r);
        for i in 0..r {
            let prev = wit[(i + r - 1) % r];
            letters.push((self.mul(self.inv(prev), wit[i]), self.cx.color_of(walk[i] as usize)));
        }
        let g = if r == 0 { self.id } else { wit[r - 1] };
        Ok((ColoredWord { letters, multi: false }, g))
    }

    pub fn boundary(&self, s: &TwoChain) -> OneChain {
        let mut b = OneChain::default();
        for &t in &s.triangles {
            let [r, g, bl] = self.cx.triangles[t as usize];
            b.toggle(r, g);
            b.toggle(r, bl);
            b.toggle(g, bl);
        }
        for &[a, m, c] in &s.degenerate {
            b.toggle(a, m);
            b.toggle(a, c);
            b.toggle(m, c);
        }
        b
    }

    pub fn translate_vertex(&self, y: usize, v: u32) -> u32 {
        let c = self.cx.color_of(v as usize);
        let local = v as usize - self.cx.offsets[c.idx()];
        let rep = self.cx.cosets[c.idx()].reps[local] as usize;
        self.cx.vertex_of(self.mul(y, rep), c)
    }

    pub fn translate_one(&self, b: &OneChain, y: usize) -> OneChain {
        let mut out = OneChain::default();
        for &(u, v) in &b.edges {
            out.toggle(self.translate_vertex(y, u), self.translate_vertex(y, v));
        }
        out
    }

    pub fn translate(&self, s: &TwoChain, y: usize) -> TwoChain {
        if y == self.id {
            return s.clone();
        }
        let mut out = TwoChain::default();
        for &t in &s.triangles {
            out.toggle_triangle(self.mul(y, t as usize) as u32);
        }
        for f in &s.degenerate {
            out.toggle_degenerate(f.map(|v| self.translate_vertex(y, v)));
        }
        out
    }

    /// Plain triangle on three distinct vertices, if any.
    pub fn triangle_of(&self, u: u32, v: u32, w: u32) -> Option<u32> {
        let e = self.cx.edge_id(u, v)? as usize;
        let cw = self.cx.color_of(w as usize).idx();
        self.edge_tris[self.edge_off[e]..self.edge_off[e + 1]]
            .iter()
            .copied()
            .find(|&t| self.cx.triangles[t as usize][cw] == w)
    }

    fn solver(&self) -> Result<&F2Solver, ChainError> {
        let s = self.solver.get_or_init(|| {
            let rows: Vec<Vec<u32>> = self.cx.tri_edges.iter().map(|t| t.to_vec()).collect();
            F2Solver::new(&rows, self.cx.edges.len(), mem_budget_from_env())
        });
        s.as_ref().map_err(|e| ChainError::Rank(e.clone()))
    }

    /// Some 2-chain with boundary `b`, or `None`. Self-loops are filled by
    /// `{v, v, v}`; the rest by one F_2 solve, without any minimality claim.
    pub fn solve_filling(&self, b: &OneChain) -> Result<Option<TwoChain>, ChainError> {
        let mut out = TwoChain::default();
        let mut target = Vec::new();
        for &(u, v) in &b.edges {
            if u == v {
                out.toggle_degenerate([u, u, u]);
            } else {
                match self.cx.edge_id(u, v) {
                    Some(e) => target.push(e),
                    None => return Ok(None),
                }
            }
        }
        if target.is_empty() {
            return Ok(Some(out));
        }
        let Some(rows) = self.solver()?.solve(&target) else {
            return Ok(None);
        };
        out.triangles.extend(rows);
        Ok(Some(out))
    }

    fn is_face(&self, f: [u32; 3]) -> bool {
        let [a, b, c] = f;
        match (a == b, b == c) {
            (true, true) => true,
            (true, false) => self.cx.edge_id(b, c).is_some(),
            (false, true) => self.cx.edge_id(a, b).is_some(),
            _ => self.triangle_of(a, b, c).is_some(),
        }
    }

    fn face_chain(&self, f: [u32; 3]) -> TwoChain {
        let mut s = TwoChain::default();
        if f[0] != f[1] && f[1] != f[2] {
            s.toggle_triangle(self.triangle_of(f[0], f[1], f[2]).expect("face"));
        } else {
            s.toggle_degenerate(f);
        }
        s
    }

    /// At most two faces on the vertices of `res` with boundary `res`.
    fn close_small(&self, res: &OneChain) -> Option<TwoChain> {
        if res.is_zero() {
            return Some(TwoChain::default());
        }
        let vs: Vec<u32> = res.edges.iter().flat_map(|&(u, v)| [u, v]).collect::<BTreeSet<_>>().into_iter().collect();
        if vs.len() > 6 {
            return None;
        }
        let mut faces = Vec::new();
        for i in 0..vs.len() {
            for j in i..vs.len() {
                for k in j..vs.len() {
                    let f = [vs[i], vs[j], vs[k]];
                    if self.is_face(f) {
                        faces.push(self.face_chain(f));
                    }
                }
            }
        }
        let bds: Vec<OneChain> = faces.iter().map(|f| self.boundary(f)).collect();
        if let Some(i) = bds.iter().position(|b| b == res) {
            return Some(faces[i].clone());
        }
        for i in 0..faces.len() {
            for j in i + 1..faces.len() {
                let mut b = bds[i].clone();
                b.add(&bds[j]);
                if &b == res {
                    let mut s = faces[i].clone();
                    s.add(&faces[j]);
                    return Some(s);
                }
            }
        }
        None
    }

    fn check_fill(&self, fill: &TwoChain, w: &ColoredWord, what: &str) -> Result<Walk, ChainError> {
        let l = self.word_to_loop(w)?;
        if self.boundary(fill) != l.chain {
            return Err(ChainError::Precondition(format!("{what} does not bound its loop")));
        }
        Ok(l)
    }

    /// From fillings of `x y` and `y z^-1`, a filling of `x z` with at most
    /// two extra triangles. `fill_yz` fills the untranslated loop of `y z^-1`.
    pub fn stitch(
        &self,
        fill_xy: &TwoChain,
        fill_yz: &TwoChain,
        x: &ColoredWord,
        y: &ColoredWord,
        z: &ColoredWord,
    ) -> Result<TwoChain, ChainError> {
        self.check_fill(fill_xy, &x.concat(y), "first filling")?;
        self.check_fill(fill_yz, &y.concat(&self.inverse(z)), "second filling")?;
        let xz = self.word_to_loop(&x.concat(z))?;
        let mut s = fill_xy.clone();
        s.add(&self.translate(fill_yz, self.phi(x)));
        let mut res = self.boundary(&s);
        res.add(&xz.chain);
        let extra = self.close_small(&res).ok_or_else(|| ChainError::Precondition("stitch residual is not two faces".into()))?;
        s.add(&extra);
        Ok(s)
    }

    /// Filling of the recolored word `w2` from a filling of `w`, adding at
    /// most two triangles per changed color.
    pub fn recolor_filling(&self, w: &ColoredWord, w2: &ColoredWord, fill: &TwoChain) -> Result<TwoChain, ChainError> {
        if w.elements() != w2.elements() {
            return Err(ChainError::Precondition("recoloring changes the elements".into()));
        }
        for (i, &(x, c)) in w2.letters.iter().enumerate() {
            if !self.member(x, c) {
                return Err(ChainError::NotInSubgroup(i));
            }
        }
        self.check_fill(fill, &w.as_multi(), "filling")?;
        let n = w.len();
        let mut cur = w.as_multi();
        let mut f = fill.clone();
        for i in 0..n {
            let (x, b) = w2.letters[i];
            let a = cur.letters[i].1;
            if a == b {
                continue;
            }
            let pre = self.phi(&cur.slice(0, i + 1));
            let rot = cur.rotate(i + 1);
            let xs = rot.slice(0, n - 1);
            let g = self.stitch(
                &self.translate(&f, self.inv(pre)),
                &TwoChain::default(),
                &xs,
                &ColoredWord::new(vec![(x, a)], true),
                &ColoredWord::new(vec![(x, b)], true),
            )?;
            f = self.translate(&g, pre);
            cur.letters[i].1 = b;
        }
        Ok(f)
    }

    /// Replays a derivation of `target` from the word `1` into a filling of
    /// its loop. Degenerate triangles are dropped for plain-mode targets.
    pub fn derivation_to_filling(
        &self,
        steps: &[DerivationStep],
        relators: &[CertifiedRelator],
        target: &ColoredWord,
    ) -> Result<DerivationFilling, ChainError> {
        let derr = |step: usize, msg: &str| ChainError::Derivation { step, msg: msg.to_string() };
        for (i, r) in relators.iter().enumerate() {
            self.check_fill(&r.fill, &r.word.as_multi(), &format!("relator {i} filling"))?;
        }
        let c0 = target.letters.first().map_or(Color::Red, |l| l.1);
        let h = self.cx.vertex_of(self.id, c0);
        let mut cur = ColoredWord::new(vec![(self.id, c0)], true);
        let mut fill = TwoChain::default();
        fill.toggle_degenerate([h, h, h]);
        let (mut ell, mut t) = (0usize, 0usize);
        for (k, st) in steps.iter().enumerate() {
            if st.invert {
                cur = self.inverse(&cur);
            }
            if !cur.is_empty() && st.shift % cur.len() != 0 {
                let s = st.shift % cur.len();
                let pre = self.phi(&cur.slice(0, s));
                cur = cur.rotate(s);
                fill = self.translate(&fill, self.inv(pre));
            }
            let n = cur.len();
            if st.p_len + st.u_len > n {
                return Err(derr(k, "p u does not fit in the current word"));
            }
            let (pl, ul) = (st.p_len, st.u_len);
            let rel = relators.get(st.relator).ok_or_else(|| derr(k, "unknown relator"))?;
            ell = ell.max(rel.word.len());
            t = t.max(rel.fill.size());
            let mut want = cur.slice(pl, pl + ul).elements();
            want.extend(st.v.iter().rev().map(|&x| self.inv(x)));
            let (rw, rf) = self
                .orient_relator(rel, &want)
                .ok_or_else(|| derr(k, "relator is not equivalent to u v^-1"))?;
            let mut rhat = rw.clone();
            for i in 0..ul {
                rhat.letters[i].1 = cur.letters[pl + i].1;
            }
            let rfill = self.recolor_filling(&rw, &rhat, &rf)?;
            let u = rhat.slice(0, ul);
            let vhat = self.inverse(&rhat.slice(ul, rhat.len()));
            let p = cur.slice(0, pl);
            let q = cur.slice(pl + ul, n);
            let pu = self.phi(&cur.slice(0, pl + ul));
            let qp = q.concat(&p);
            let g = self.stitch(&self.translate(&fill, self.inv(pu)), &rfill, &qp, &u, &vhat)?;
            fill = self.translate(&g, self.inv(self.phi(&q)));
            cur = p.concat(&vhat).concat(&q);
        }
        if cur.elements() != target.elements() {
            return Err(derr(steps.len(), "derived word differs from the target"));
        }
        let mut fill = self.recolor_filling(&cur, &target.as_multi(), &fill)?;
        let multi_size = fill.size();
        let bound = (t + 4 * ell + 2) * steps.len() + 1;
        if !target.multi {
            fill = fill.project();
            self.check_fill(&fill, target, "projected filling")?;
        }
        Ok(DerivationFilling { fill, multi_size, steps: steps.len(), ell, t, bound, within_bound: multi_size <= bound })
    }

    /// Rotation of the relator or its inverse with elements `want`, with the
    /// correspondingly moved filling.
    fn orient_relator(&self, rel: &CertifiedRelator, want: &[usize]) -> Option<(ColoredWord, TwoChain)> {
        let n = rel.word.len();
        if n != want.len() {
            return None;
        }
        for w in [rel.word.as_multi(), self.inverse(&rel.word.as_multi())] {
            for s in 0..n.max(1) {
                let r = w.rotate(s);
                if r.elements() == want {
                    let pre = self.phi(&w.slice(0, s));
                    return Some((r, self.translate(&rel.fill, self.inv(pre))));
                }
            }
        }
        None
    }

    /// BFS cone loops from `apex`, each filled by one solve.
    pub fn cone_radius_bound(&self, apex: u32) -> Result<ConeRadius, ChainError> {
        let solver = self.solver()?;
        cone_radius_with(self.cx.num_vertices(), &self.cx.edges, solver, apex)
    }
}

/// Cone radius of a raw complex given by edges and per-triangle edge ids.
pub fn cone_radius_raw(n: usize, edges: &[(u32, u32)], tri_edges: &[[u32; 3]], apex: u32) -> Result<ConeRadius, ChainError> {
    let rows: Vec<Vec<u32>> = tri_edges.iter().map(|t| t.to_vec()).collect();
    let solver = F2Solver::new(&rows, edges.len(), mem_budget_from_env())?;
    cone_radius_with(n, edges, &solver, apex)
}

fn cone_radius_with(n: usize, edges: &[(u32, u32)], solver: &F2Solver, apex: u32) -> Result<ConeRadius, ChainError> {
    if apex as usize >= n {
        return Err(ChainError::Precondition(format!("apex {apex} out of range")));
    }
    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        adj[u as usize].push((v, e as u32));
        adj[v as usize].push((u, e as u32));
    }
    const NONE: u32 = u32::MAX;
    let mut parent = vec![NONE; n];
    let mut pedge = vec![NONE; n];
    let mut seen = vec![false; n];
    seen[apex as usize] = true;
    let mut queue = VecDeque::from([apex]);
    while let Some(u) = queue.pop_front() {
        for &(v, e) in &adj[u as usize] {
            if !seen[v as usize] {
                seen[v as usize] = true;
                parent[v as usize] = u;
                pedge[v as usize] = e;
                queue.push_back(v);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(ChainError::Precondition("complex is disconnected".into()));
    }
    let path = |mut v: u32, out: &mut Vec<u32>| {
        while parent[v as usize] != NONE {
            out.push(pedge[v as usize]);
            v = parent[v as usize];
        }
    };
    let fill_sizes: Vec<Option<u32>> = edges
        .par_iter()
        .enumerate()
        .map(|(e, &(u, v))| {
            let mut ids = vec![e as u32];
            path(u, &mut ids);
            path(v, &mut ids);
            ids.sort_unstable();
            let mut target: Vec<u32> = Vec::with_capacity(ids.len());
            for id in ids {
                if target.last() == Some(&id) {
                    target.pop();
                } else {
                    target.push(id);
                }
            }
            if target.is_empty() {
                return Some(0);
            }
            solver.solve(&target).map(|r| r.len() as u32)
        })
        .collect();
    let unsat_edges = fill_sizes.iter().filter(|s| s.is_none()).count();
    let radius = if unsat_edges > 0 { None } else { Some(fill_sizes.iter().map(|s| s.unwrap() as usize).max().unwrap_or(0)) };
    let expansion_lower_bound = radius.filter(|&r| r > 0).map(|r| 1.0 / (3.0 * r as f64));
    Ok(ConeRadius { apex, edges: edges.len(), radius, unsat_edges, expansion_lower_bound, parent, fill_sizes })
}

/// Sizes and bounds from one randomized stitch, recoloring and derivation.
#[derive(Clone, Debug, Serialize)]
pub struct BoundTrial {
    pub seed: u64,
    /// `(size, bound)` pairs.
    pub stitch: (usize, usize),
    pub recolor: (usize, usize),
    pub derivation: (usize, usize),
    pub steps: usize,
    pub pass: bool,
}

impl Chains<'_> {
    /// Uniform element of the subgroup of color `c`.
    pub fn random_member<R: Rng>(&self, c: Color, rng: &mut R) -> usize {
        let h = &self.cx.subgroups[c.idx()];
        let m = h.element(rng.gen_range(0..h.len()));
        self.cx.group.index_of(&m).expect("subgroup element")
    }

    /// Colors whose subgroup contains `x`.
    pub fn colors_of(&self, x: usize) -> Vec<Color> {
        Color::ALL.into_iter().filter(|&c| self.member(x, c)).collect()
    }

    fn random_word<R: Rng>(&self, len: usize, rng: &mut R) -> ColoredWord {
        let letters = (0..len)
            .map(|_| {
                let c = Color::ALL[rng.gen_range(0..3)];
                (self.random_member(c, rng), c)
            })
            .collect();
        ColoredWord::new(letters, true)
    }

    fn random_recoloring<R: Rng>(&self, w: &ColoredWord, rng: &mut R) -> ColoredWord {
        let letters = w
            .letters
            .iter()
            .map(|&(x, _)| {
                let cs = self.colors_of(x);
                (x, cs[rng.gen_range(0..cs.len())])
            })
            .collect();
        ColoredWord::new(letters, true)
    }

    /// Commuting root elements `(s, t)` with `s` RED and `t` BLUE, random
    /// nonzero entries, in random order.
    fn commuting_pairs<R: Rng>(&self, rng: &mut R) -> Vec<(usize, usize)> {
        let cfg = self.cx.config;
        let f = &self.cx.group.field;
        let real = Realization::of(&cfg.system());
        let mut elems = Vec::new();
        for r in cfg.positive_roots() {
            let t = f.from_index(rng.gen_range(1..f.size()));
            let m = real.matrix(f, &r, t).expect("root of the system");
            elems.push(self.cx.group.index_of(&m).expect("root element"));
        }
        let mut out = Vec::new();
        for &s in &elems {
            for &t in &elems {
                if s != t && self.member(s, Color::Red) && self.member(t, Color::Blue) && self.mul(s, t) == self.mul(t, s) {
                    out.push((s, t));
                }
            }
        }
        for i in (1..out.len()).rev() {
            out.swap(i, rng.gen_range(0..=i));
        }
        out
    }

    fn fill_word(&self, w: &ColoredWord) -> Result<TwoChain, ChainError> {
        let l = self.word_to_loop(w)?;
        self.solve_filling(&l.chain)?.ok_or_else(|| ChainError::Precondition("loop has no filling".into()))
    }

    /// Random instances of the stitch, recoloring and derivation bounds, each
    /// output also checked against a direct boundary computation. Needs a
    /// complex whose loops all have fillings.
    pub fn random_bound_trial(&self, seed: u64) -> Result<BoundTrial, ChainError> {
        let mut rng = crate::rng(seed);
        let rng = &mut rng;

        // stitch: x = y'^-1, z = y'' with y', y'' recolorings of y, or on odd
        // seeds y = s t, z = t s for commuting s, t
        let pairs = self.commuting_pairs(rng);
        let (x, y, z) = match pairs.first() {
            Some(&(s, t)) if seed % 2 == 1 => {
                let y = ColoredWord::new(vec![(s, Color::Red), (t, Color::Blue)], true);
                let z = ColoredWord::new(vec![(t, Color::Blue), (s, Color::Red)], true);
                (self.inverse(&self.random_recoloring(&y, rng)), y, z)
            }
            _ => {
                let y = self.random_word(rng.gen_range(1..4), rng);
                (self.inverse(&self.random_recoloring(&y, rng)), self.random_recoloring(&y, rng), y)
            }
        };
        let (fxy, fyz) = (self.fill_word(&x.concat(&y))?, self.fill_word(&y.concat(&self.inverse(&z)))?);
        let st = self.stitch(&fxy, &fyz, &x, &y, &z)?;
        let st_ok = self.boundary(&st) == self.word_to_loop(&x.concat(&z))?.chain;
        let stitch = (st.size(), fxy.size() + fyz.size() + 2);

        // recoloring of a trivial word a a'^-1
        let a = self.random_word(rng.gen_range(1..4), rng);
        let w = a.concat(&self.inverse(&self.random_recoloring(&a, rng)));
        let fw = self.fill_word(&w)?;
        let w2 = self.random_recoloring(&w, rng);
        let rc = self.recolor_filling(&w, &w2, &fw)?;
        let rc_ok = self.boundary(&rc) == self.word_to_loop(&w2)?.chain;
        let recolor = (rc.size(), fw.size() + 2 * w.len());

        // derivation from 1 by random relator insertions and substitutions
        let mut rels = Vec::new();
        for _ in 0..3 {
            let c = Color::ALL[rng.gen_range(0..3)];
            let s = self.random_member(c, rng);
            let word = ColoredWord::new(vec![(s, c), (self.inv(s), c), (self.id, c)], true);
            rels.push(CertifiedRelator { fill: self.fill_word(&word)?, word });
        }
        for _ in 0..3 {
            let b = self.random_word(rng.gen_range(1..3), rng);
            let word = b.concat(&self.inverse(&self.random_recoloring(&b, rng)));
            rels.push(CertifiedRelator { fill: self.fill_word(&word)?, word });
        }
        for &(s, t) in pairs.iter().take(2) {
            let word =
                ColoredWord::new(vec![(s, Color::Red), (t, Color::Blue), (self.inv(s), Color::Red), (self.inv(t), Color::Blue)], true);
            rels.push(CertifiedRelator { fill: self.fill_word(&word)?, word });
        }
        let nsteps = rng.gen_range(1..5);
        let mut cur = vec![self.id];
        let mut steps = Vec::new();
        for _ in 0..nsteps {
            let ri = rng.gen_range(0..rels.len());
            let mut r = rels[ri].word.elements();
            if rng.gen_bool(0.5) {
                r = r.iter().rev().map(|&e| self.inv(e)).collect();
            }
            let rot = rng.gen_range(0..r.len());
            r.rotate_left(rot);
            let shift = rng.gen_range(0..cur.len().max(1));
            let mut c2 = cur.clone();
            c2.rotate_left(shift);
            // substitute when some prefix of r occurs in the word, else insert
            let mut pick = None;
            for k in (1..r.len()).rev() {
                if let Some(pos) = c2.windows(k).position(|win| win == &r[..k]) {
                    pick = Some((pos, k));
                    break;
                }
            }
            let (p_len, u_len) = match pick {
                Some(pk) if rng.gen_bool(0.7) => pk,
                _ => (rng.gen_range(0..=c2.len()), 0),
            };
            let v: Vec<usize> = r[u_len..].iter().rev().map(|&e| self.inv(e)).collect();
            let mut next = c2[..p_len].to_vec();
            next.extend_from_slice(&v);
            next.extend_from_slice(&c2[p_len + u_len..]);
            steps.push(DerivationStep { invert: false, shift, p_len, u_len, v, relator: ri });
            cur = next;
        }
        let target = self.random_recoloring(&ColoredWord::new(cur.iter().map(|&e| (e, Color::Red)).collect(), true), rng);
        let d = self.derivation_to_filling(&steps, &rels, &target)?;
        let d_ok = self.boundary(&d.fill) == self.word_to_loop(&target)?.chain;
        let derivation = (d.fill.size(), d.bound);

        let pass = st_ok && rc_ok && d_ok && stitch.0 <= stitch.1 && recolor.0 <= recolor.1 && d.within_bound;
        Ok(BoundTrial { seed, stitch, recolor, derivation, steps: steps.len(), pass })
    }
}

/// Result of the explicit 20-triangle filling of the A3 commutator loop.
#[derive(Clone, Debug, Serialize)]
pub struct NamedFilling {
    pub q: u64,
    /// `H_a, H_g, x_{a+b}(1) H_a, x_{b+g}(1) H_g` as vertex ids.
    pub outer: [u32; 4],
    /// Inner square, `inner[i]` joined to `outer[i]`.
    pub inner: [u32; 4],
    /// GREEN apexes of the inner square and the four side squares.
    pub apexes: [u32; 5],
    pub triangles: Vec<u32>,
    pub boundary_matches: bool,
    /// Vertex ids of the four inner cosets as listed with the figure.
    pub listed_inner: [u32; 4],
    /// Whether the listed inner cosets carry a filling of this shape.
    pub listed_inner_valid: bool,
    pub pass: bool,
}

/// Fills the loop of `[x_{a+b}(1), x_{b+g}(1)]` in the A3 link with 20
/// triangles: an inner square joined to the outer 4-cycle, all five squares
/// coned off at GREEN vertices. The inner square and apexes are found by
/// ordered search.
pub fn verify_named_filling_a3(q: u64) -> Result<NamedFilling, ChainError> {
    if q % 2 == 0 {
        return Err(ChainError::EvenOrder(q));
    }
    let config = Config::A3;
    let cx = build_link_complex(config, q)?;
    let ch = Chains::new(&cx)?;
    let f = cx.group.field.clone();
    let real = Realization::of(&config.system());
    let half = f.inv(f.from_i64(2)).expect("odd characteristic");
    let el = |w: &[(&str, u64)]| -> usize {
        let mut m = Mat::identity(real.dim());
        for &(r, t) in w {
            let root = config.parse_root(r).expect("root name");
            m = m.mul(&f, &real.matrix(&f, &root, t).expect("root in system"));
        }
        cx.group.index_of(&m).expect("element of the link group")
    };
    let one = f.one();
    let two = f.from_i64(2);
    let (xab, xbg) = (el(&[("a+b", one)]), el(&[("b+g", one)]));
    let word = ColoredWord::new(
        vec![(xab, Color::Red), (xbg, Color::Blue), (ch.inv(xab), Color::Red), (ch.inv(xbg), Color::Blue)],
        false,
    );
    let lp = ch.word_to_loop(&word)?;
    let wv = &lp.vertices;
    let outer = [wv[3], wv[0], wv[1], wv[2]];

    let listed_inner = [
        cx.vertex_of(el(&[("b", one), ("g", two)]), Color::Red),
        cx.vertex_of(el(&[("b", one), ("a", one)]), Color::Blue),
        cx.vertex_of(el(&[("a+b", one), ("b", two), ("g", one)]), Color::Red),
        cx.vertex_of(el(&[("b+g", one), ("b", half), ("g", two)]), Color::Red),
    ];
    let listed_inner_valid = square_apexes(&ch, &outer, &listed_inner).is_some();

    let (off, adj) = cx.adjacency();
    let cand = |v: u32| -> Vec<u32> {
        adj[off[v as usize]..off[v as usize + 1]]
            .iter()
            .copied()
            .filter(|&w| cx.color_of(w as usize) != Color::Green)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    let cands: Vec<Vec<u32>> = outer.iter().map(|&v| cand(v)).collect();
    let mut found = None;
    'search: for &a in &cands[0] {
        for &b in &cands[1] {
            if cx.edge_id(a, b).is_none() {
                continue;
            }
            for &c in &cands[2] {
                if cx.edge_id(b, c).is_none() {
                    continue;
                }
                for &d in &cands[3] {
                    if cx.edge_id(c, d).is_none() || cx.edge_id(d, a).is_none() {
                        continue;
                    }
                    if let Some(ap) = square_apexes(&ch, &outer, &[a, b, c, d]) {
                        found = Some(([a, b, c, d], ap));
                        break 'search;
                    }
                }
            }
        }
    }
    let (inner, apexes) = found.ok_or(ChainError::NotFound)?;
    let mut fill = TwoChain::default();
    for (sq, &z) in squares(&outer, &inner).iter().zip(&apexes) {
        for i in 0..4 {
            fill.toggle_triangle(ch.triangle_of(z, sq[i], sq[(i + 1) % 4]).expect("apex triangle"));
        }
    }
    let boundary_matches = ch.boundary(&fill) == lp.chain;
    let triangles: Vec<u32> = fill.triangles.iter().copied().collect();
    let pass = boundary_matches && triangles.len() == 20;
    Ok(NamedFilling { q, outer, inner, apexes, triangles, boundary_matches, listed_inner, listed_inner_valid, pass })
}

fn squares(outer: &[u32; 4], inner: &[u32; 4]) -> [[u32; 4]; 5] {
    let mut s = [*inner; 5];
    for i in 0..4 {
        let j = (i + 1) % 4;
        s[i + 1] = [outer[i], outer[j], inner[j], inner[i]];
    }
    s
}

/// GREEN apexes coning off all five squares, if every one has one.
fn square_apexes(ch: &Chains, outer: &[u32; 4], inner: &[u32; 4]) -> Option<[u32; 5]> {
    let cx = ch.cx;
    for i in 0..4 {
        cx.edge_id(outer[i], inner[i])?;
        cx.edge_id(inner[i], inner[(i + 1) % 4])?;
    }
    let (off, adj) = cx.adjacency();
    let mut out = [0u32; 5];
    for (k, sq) in squares(outer, inner).iter().enumerate() {
        let mut greens: Vec<u32> = adj[off[sq[0] as usize]..off[sq[0] as usize + 1]]
            .iter()
            .copied()
            .filter(|&z| cx.color_of(z as usize) == Color::Green)
            .collect();
        greens.sort_unstable();
        greens.dedup();
        out[k] = greens
            .into_iter()
            .find(|&z| (0..4).all(|i| ch.triangle_of(z, sq[i], sq[(i + 1) % 4]).is_some()))?;
    }
    Some(out)
}
