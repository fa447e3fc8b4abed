//! Matrix groups enumerated by BFS, unipotent subgroups U_I, cosets with
//! canonical representatives, and normal-form checks.

use std::collections::VecDeque;
use std::hash::BuildHasher;
use std::sync::Arc;

use hashbrown::hash_map::DefaultHashBuilder;
use hashbrown::HashTable;
use serde::Serialize;
use thiserror::Error;

use crate::chevalley::{Gen, Mat, Realization};
use crate::gf::{Fe, Field, PolySubset};
use crate::roots::{height, independent, positive_span_roots, Root, RootSystem};

pub const DEFAULT_BUDGET: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group has {predicted} elements, over the budget of {budget}")]
    Overflow { predicted: u128, budget: usize },
    #[error("base roots are linearly dependent")]
    Dependent,
    #[error("subgroup generator {0} is not in the ambient group")]
    NotSubgroup(usize),
    #[error("group is not enumerated")]
    NotEnumerated,
    #[error("{0}")]
    Root(String),
}

/// Flat byte arena with a hash index; element `i` is `data[i*w..(i+1)*w]`.
#[derive(Clone)]
struct Store {
    w: usize,
    data: Vec<u8>,
    table: HashTable<u32>,
    hasher: DefaultHashBuilder,
}

impl Store {
    fn new(w: usize) -> Store {
        Store { w, data: Vec::new(), table: HashTable::new(), hasher: DefaultHashBuilder::default() }
    }

    fn len(&self) -> usize {
        self.data.len() / self.w
    }

    fn get(&self, i: usize) -> &[u8] {
        &self.data[i * self.w..(i + 1) * self.w]
    }

    fn find(&self, b: &[u8]) -> Option<usize> {
        let h = self.hasher.hash_one(b);
        self.table.find(h, |&i| self.get(i as usize) == b).map(|&i| i as usize)
    }

    /// Index of `b`, and whether it was newly inserted.
    fn insert(&mut self, b: &[u8]) -> (usize, bool) {
        let h = self.hasher.hash_one(b);
        if let Some(&i) = self.table.find(h, |&i| &self.data[i as usize * self.w..(i as usize + 1) * self.w] == b) {
            return (i as usize, false);
        }
        let i = self.len();
        self.data.extend_from_slice(b);
        let (w, data, hasher) = (self.w, &self.data, &self.hasher);
        self.table.insert_unique(h, i as u32, |&j| hasher.hash_one(&data[j as usize * w..(j as usize + 1) * w]));
        (i, true)
    }
}

/// A finite matrix group. Elements, when enumerated, are indexed in BFS order
/// from the identity.
#[derive(Clone)]
pub struct MatrixGroup {
    pub field: Arc<Field>,
    pub n: usize,
    pub generators: Vec<Gen>,
    /// Size predicted by the structure formula, when known.
    pub predicted: Option<u128>,
    store: Option<Store>,
    /// `(parent, generator)`: element = generators[g] * parent.
    witness: Option<Vec<(u32, u32)>>,
}

impl std::fmt::Debug for MatrixGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatrixGroup(n={}, gens={}, size={:?})", self.n, self.generators.len(), self.store.as_ref().map(|s| s.len()))
    }
}

impl MatrixGroup {
    pub fn is_enumerated(&self) -> bool {
        self.store.is_some()
    }

    pub fn len(&self) -> usize {
        self.store.as_ref().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self, i: usize) -> &[u8] {
        self.store.as_ref().expect("enumerated group").get(i)
    }

    pub fn element(&self, i: usize) -> Mat {
        Mat::from_bytes(&self.field, self.n, self.bytes(i))
    }

    pub fn serialize(&self, m: &Mat) -> Vec<u8> {
        let mut b = Vec::with_capacity(self.n * self.n * self.field.k() as usize);
        m.write_bytes(&self.field, &mut b);
        b
    }

    pub fn index_of(&self, m: &Mat) -> Option<usize> {
        self.store.as_ref()?.find(&self.serialize(m))
    }

    pub fn index_of_bytes(&self, b: &[u8]) -> Option<usize> {
        self.store.as_ref()?.find(b)
    }

    pub fn contains(&self, m: &Mat) -> bool {
        self.index_of(m).is_some()
    }

    /// Generator indices `w` with element `i` = gens[w0] * gens[w1] * ... .
    pub fn word(&self, mut i: usize) -> Option<Vec<usize>> {
        let wit = self.witness.as_ref()?;
        let mut w = Vec::new();
        while i != 0 {
            let (p, g) = wit[i];
            w.push(g as usize);
            i = p as usize;
        }
        Some(w)
    }

    /// Index of the product of elements `i` and `j`.
    pub fn mul_index(&self, i: usize, j: usize) -> usize {
        let m = self.element(i).mul(&self.field, &self.element(j));
        self.index_of(&m).expect("closed under multiplication")
    }
}

/// BFS closure under left multiplication by the generators.
pub fn generate_group(
    field: &Arc<Field>,
    n: usize,
    generators: Vec<Gen>,
    budget: usize,
    witnesses: bool,
) -> Result<MatrixGroup, GroupError> {
    let w = n * n * field.k() as usize;
    let mut store = Store::new(w);
    let mut wit = witnesses.then(Vec::new);
    let mut buf = Vec::with_capacity(w);
    Mat::identity(n).write_bytes(field, &mut buf);
    store.insert(&buf);
    if let Some(v) = wit.as_mut() {
        v.push((0, 0));
    }
    let mut head = 0;
    while head < store.len() {
        let cur = Mat::from_bytes(field, n, store.get(head));
        for (gi, g) in generators.iter().enumerate() {
            let mut m = cur.clone();
            g.left_apply(field, &mut m);
            buf.clear();
            m.write_bytes(field, &mut buf);
            let (_, fresh) = store.insert(&buf);
            if fresh {
                if store.len() > budget {
                    return Err(GroupError::Overflow { predicted: store.len() as u128, budget });
                }
                if let Some(v) = wit.as_mut() {
                    v.push((head as u32, gi as u32));
                }
            }
        }
        head += 1;
    }
    Ok(MatrixGroup { field: field.clone(), n, generators, predicted: None, store: Some(store), witness: wit })
}

/// Entry set of the generators of U_I.
#[derive(Clone, Debug)]
pub enum Entries {
    /// The whole field.
    Field,
    /// `F_q[x]_{<= ht}` inside the given extension of F_q, `ht` the root height.
    Graded,
}

/// F_p-basis of the entry set for a root of height `ht`.
pub fn entry_basis(field: &Field, entries: &Entries, ht: u32) -> Vec<Fe> {
    match entries {
        Entries::Field => {
            let k = field.k() as usize;
            (0..k)
                .map(|l| {
                    let mut c = vec![0; k];
                    c[l] = 1;
                    field.from_coeffs(&c)
                })
                .collect()
        }
        Entries::Graded => {
            let base = field.base().expect("graded field is an extension");
            let bk = base.k() as usize;
            let mut out = Vec::new();
            for i in 0..=ht as usize {
                for l in 0..bk {
                    let mut c = vec![0; bk];
                    c[l] = 1;
                    let mut bc = vec![0; i + 1];
                    bc[i] = base.from_coeffs(&c);
                    out.push(field.from_base_coeffs(&bc));
                }
            }
            out
        }
    }
}

/// Predicted size of U_I: q^{|I+|}, or q^{sum (ht+1)} for graded entries.
pub fn predicted_size(field: &Field, sys: &RootSystem, base: &[Root], entries: &Entries) -> Result<u128, GroupError> {
    let span = positive_span_roots(sys, base).map_err(|e| GroupError::Root(e.to_string()))?;
    let q = match entries {
        Entries::Field => field.size() as u128,
        Entries::Graded => field.base().expect("graded field is an extension").size() as u128,
    };
    let mut e = 0u32;
    for r in &span {
        e += match entries {
            Entries::Field => 1,
            Entries::Graded => height(r, base).map_err(|e| GroupError::Root(e.to_string()))? + 1,
        };
    }
    Ok(q.saturating_pow(e))
}

/// Which root elements generate U_I.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Generators {
    /// x_z(t) for every z in the positive span I+.
    #[default]
    Span,
    /// x_z(t) for z in I only. Same group in odd characteristic; a proper
    /// subgroup for B-type over F_2, where the factor 2 in the short-root
    /// commutators vanishes.
    Base,
}

/// U_I(entries), generated by root elements with entries from an F_p-basis of
/// the entry set. Left unenumerated when the predicted size is over budget.
pub fn unipotent_group(
    field: &Arc<Field>,
    sys: &RootSystem,
    base: &[Root],
    entries: &Entries,
    budget: usize,
    witnesses: bool,
) -> Result<MatrixGroup, GroupError> {
    unipotent_group_with(field, sys, base, entries, budget, witnesses, Generators::Span)
}

pub fn unipotent_group_with(
    field: &Arc<Field>,
    sys: &RootSystem,
    base: &[Root],
    entries: &Entries,
    budget: usize,
    witnesses: bool,
    generators: Generators,
) -> Result<MatrixGroup, GroupError> {
    if !independent(base) {
        return Err(GroupError::Dependent);
    }
    let real = Realization::of(sys);
    let span = positive_span_roots(sys, base).map_err(|e| GroupError::Root(e.to_string()))?;
    let roots: &[Root] = match generators {
        Generators::Span => &span,
        Generators::Base => base,
    };
    let mut gens = Vec::new();
    for r in roots {
        let ht = height(r, base).map_err(|e| GroupError::Root(e.to_string()))?;
        for &t in &entry_basis(field, entries, ht) {
            gens.push(real.gen(field, r, t).map_err(|e| GroupError::Root(e.to_string()))?);
        }
    }
    let predicted = predicted_size(field, sys, base, entries)?;
    if predicted > budget as u128 {
        return Ok(MatrixGroup {
            field: field.clone(),
            n: real.dim(),
            generators: gens,
            predicted: Some(predicted),
            store: None,
            witness: None,
        });
    }
    let mut g = generate_group(field, real.dim(), gens, budget, witnesses)?;
    g.predicted = Some(predicted);
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `xH`
    Left,
    /// `Hx`
    Right,
}

/// Partition of an enumerated group into cosets of a subgroup.
#[derive(Clone, Debug)]
pub struct Cosets {
    pub side: Side,
    /// Coset id of every element of G, ids in order of first appearance.
    pub of: Vec<u32>,
    /// Index in G of each coset's representative (minimal serialization).
    pub reps: Vec<u32>,
}

impl Cosets {
    pub fn count(&self) -> usize {
        self.reps.len()
    }
}

pub fn cosets(g: &MatrixGroup, h: &MatrixGroup, side: Side) -> Result<Cosets, GroupError> {
    let store = g.store.as_ref().ok_or(GroupError::NotEnumerated)?;
    let f = &g.field;
    for (i, gen) in h.generators.iter().enumerate() {
        if !g.contains(&gen.to_mat(f)) {
            return Err(GroupError::NotSubgroup(i));
        }
    }
    const NONE: u32 = u32::MAX;
    let mut of = vec![NONE; store.len()];
    let mut reps = Vec::new();
    let mut queue = VecDeque::new();
    let mut buf = Vec::with_capacity(store.w);
    for start in 0..store.len() {
        if of[start] != NONE {
            continue;
        }
        let id = reps.len() as u32;
        let mut rep = start;
        of[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            if store.get(i) < store.get(rep) {
                rep = i;
            }
            let cur = Mat::from_bytes(f, g.n, store.get(i));
            for gen in &h.generators {
                let mut m = cur.clone();
                match side {
                    Side::Left => gen.right_apply(f, &mut m),
                    Side::Right => gen.left_apply(f, &mut m),
                }
                buf.clear();
                m.write_bytes(f, &mut buf);
                let j = store.find(&buf).ok_or(GroupError::NotSubgroup(0))?;
                if of[j] == NONE {
                    of[j] = id;
                    queue.push_back(j);
                }
            }
        }
        reps.push(rep as u32);
    }
    Ok(Cosets { side, of, reps })
}

/// Normal-form factors `t_z` with `m = prod x_z(t_z)` over `order` (height
/// order), read off witness entries; `None` if `m` is not such a product.
pub fn decompose(f: &Field, real: &Realization, order: &[Root], m: &Mat) -> Option<Vec<Fe>> {
    let mut cur = m.clone();
    let mut out = Vec::with_capacity(order.len());
    for r in order {
        let (i, j, c) = real.witness(f, r);
        let t = f.div(cur.get(i, j), c).ok()?;
        real.gen(f, r, f.neg(t)).ok()?.left_apply(f, &mut cur);
        out.push(t);
    }
    cur.is_identity().then_some(out)
}

/// Ordered product of `x_z(t_z)`.
pub fn normal_product(f: &Field, real: &Realization, order: &[Root], ts: &[Fe]) -> Mat {
    let mut m = Mat::identity(real.dim());
    for (r, &t) in order.iter().zip(ts) {
        real.gen(f, r, t).unwrap().right_apply(f, &mut m);
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormReport {
    pub tuples: u64,
    pub group_size: usize,
    pub distinct: u64,
    pub decompose_ok: bool,
    pub pass: bool,
}

/// The map from entry tuples over `order` to ordered products is a bijection
/// onto the enumerated group. Tuples range over the field, or over
/// `F_q[x]_{<= ht}` when `graded_heights` is given.
pub fn verify_normal_form(
    g: &MatrixGroup,
    real: &Realization,
    order: &[Root],
    graded_heights: Option<&[u32]>,
) -> Result<NormalFormReport, GroupError> {
    let store = g.store.as_ref().ok_or(GroupError::NotEnumerated)?;
    let f = &g.field;
    let ranges: Vec<Vec<Fe>> = match graded_heights {
        None => order.iter().map(|_| f.elements().collect()).collect(),
        Some(hs) => hs.iter().map(|&h| PolySubset::new(f.clone(), h).elements().collect()).collect(),
    };
    let total: u64 = ranges.iter().map(|r| r.len() as u64).product();
    let mut seen = vec![false; store.len()];
    let mut distinct = 0u64;
    let mut decompose_ok = true;
    let mut idx = vec![0usize; order.len()];
    let mut buf = Vec::with_capacity(store.w);
    let mut ok = true;
    for _ in 0..total {
        let ts: Vec<Fe> = idx.iter().zip(&ranges).map(|(&i, r)| r[i]).collect();
        let m = normal_product(f, real, order, &ts);
        buf.clear();
        m.write_bytes(f, &mut buf);
        match store.find(&buf) {
            Some(j) if !seen[j] => {
                seen[j] = true;
                distinct += 1;
            }
            _ => ok = false,
        }
        if decompose(f, real, order, &m).as_deref() != Some(&ts[..]) {
            decompose_ok = false;
        }
        for (d, r) in idx.iter_mut().zip(&ranges) {
            *d += 1;
            if *d < r.len() {
                break;
            }
            *d = 0;
        }
    }
    let pass = ok && decompose_ok && distinct as usize == store.len();
    Ok(NormalFormReport { tuples: total, group_size: store.len(), distinct, decompose_ok, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::{Color, Config};

    fn base_group(c: Config, q: u64) -> MatrixGroup {
        let f = Field::new(q, 1).unwrap();
        unipotent_group(&f, &c.system(), &c.base(), &Entries::Field, DEFAULT_BUDGET, false).unwrap()
    }

    #[test]
    fn trivial_group() {
        let f = Field::new(3, 1).unwrap();
        let real = Realization::of(&Config::A3.system());
        let g = generate_group(&f, 4, vec![real.gen(&f, &Config::A3.root("a"), 0).unwrap()], 10, false).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn sizes() {
        assert_eq!(base_group(Config::A3, 2).len(), 64);
        assert_eq!(base_group(Config::B3Large, 2).len(), 512);
        assert_eq!(base_group(Config::B3Small, 3).len(), 2187);
        let f = Field::new(3, 1).unwrap();
        let sys = Config::A3.system();
        let ab = [Config::A3.root("a"), Config::A3.root("b")];
        let g = unipotent_group(&f, &sys, &ab, &Entries::Field, 100, false).unwrap();
        assert_eq!(g.len(), 27);
    }

    #[test]
    fn overflow() {
        let f = Field::new(3, 1).unwrap();
        let sys = Config::A3.system();
        let real = Realization::of(&sys);
        let gens = Config::A3.base().iter().map(|r| real.gen(&f, r, 1).unwrap()).collect();
        assert!(matches!(generate_group(&f, 4, gens, 100, false), Err(GroupError::Overflow { .. })));
        let g = unipotent_group(&f, &sys, &Config::A3.base(), &Entries::Field, 100, false).unwrap();
        assert!(!g.is_enumerated());
        assert_eq!(g.predicted, Some(729));
    }

    #[test]
    fn witness_words() {
        let g = {
            let f = Field::new(3, 1).unwrap();
            let c = Config::B3Small;
            unipotent_group(&f, &c.system(), &c.base(), &Entries::Field, DEFAULT_BUDGET, true).unwrap()
        };
        for i in [0, 1, 17, 2186] {
            let w = g.word(i).unwrap();
            let mut m = Mat::identity(g.n);
            for &gi in &w {
                g.generators[gi].right_apply(&g.field, &mut m);
            }
            assert_eq!(g.index_of(&m), Some(i));
        }
    }

    #[test]
    fn coset_counts_and_lookup() {
        let f = Field::new(2, 1).unwrap();
        let c = Config::B3Large;
        let sys = c.system();
        let g = base_group(c, 2);
        let mut total = 0;
        for col in Color::ALL {
            let h = unipotent_group(&f, &sys, &c.color_base(col), &Entries::Field, DEFAULT_BUDGET, false).unwrap();
            let cs = cosets(&g, &h, Side::Left).unwrap();
            assert_eq!(cs.count() * h.len(), g.len());
            total += cs.count();
            for i in (0..g.len()).step_by(37) {
                for j in (0..g.len()).step_by(41) {
                    let xi = g.element(i).inverse(&f).unwrap();
                    let same = h.contains(&xi.mul(&f, &g.element(j)));
                    assert_eq!(same, cs.of[i] == cs.of[j]);
                }
            }
            let rc = cosets(&g, &h, Side::Right).unwrap();
            assert_eq!(rc.count(), cs.count());
        }
        assert_eq!(total, 224);
    }

    #[test]
    fn not_a_subgroup() {
        let f = Field::new(3, 1).unwrap();
        let sys = Config::A3.system();
        let small = unipotent_group(&f, &sys, &[Config::A3.root("a")], &Entries::Field, 100, false).unwrap();
        let other = unipotent_group(&f, &sys, &[Config::A3.root("g")], &Entries::Field, 100, false).unwrap();
        assert_eq!(cosets(&small, &other, Side::Left).unwrap_err(), GroupError::NotSubgroup(0));
    }

    #[test]
    fn normal_form_a3_f3() {
        let g = base_group(Config::A3, 3);
        let real = Realization::of(&Config::A3.system());
        let r = verify_normal_form(&g, &real, &Config::A3.positive_roots(), None).unwrap();
        assert!(r.pass);
        assert_eq!((r.tuples, r.group_size), (729, 729));
    }

    #[test]
    fn graded_a3_f2() {
        let c = Config::A3;
        let f2 = Field::new(2, 1).unwrap();
        let gf = Field::extension(&f2, 4).unwrap();
        let sys = c.system();
        let g = unipotent_group(&gf, &sys, &c.base(), &Entries::Graded, DEFAULT_BUDGET, false).unwrap();
        assert_eq!(g.len(), 1 << 16);
        assert_eq!(g.predicted, Some(1 << 16));
        let order = c.positive_roots();
        let hs: Vec<u32> = order.iter().map(|r| c.height(r).unwrap()).collect();
        let rep = verify_normal_form(&g, &Realization::of(&sys), &order, Some(&hs)).unwrap();
        assert!(rep.pass);
    }
}
