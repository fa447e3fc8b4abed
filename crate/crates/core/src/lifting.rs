//! Lifting homomorphisms `U_I(F_p) -> U_I(F[x]_{<=1})`, pure-degree symbols,
//! degree coverage, and matrix verification of graded relation catalogs.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chevalley::{Letter, Mat, Realization};
use crate::gf::{nth_irreducible, Fe, Field, FieldError};
use crate::roots::{expansion, Config, Root};
use crate::unipotent::decompose;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("root {0} is not in the positive span of the base")]
    NotInSpan(String),
    #[error("entry {0} is not in the base field")]
    NotBaseEntry(Fe),
    #[error("degree {deg} out of range for root {root} of height {ht}")]
    Degree { root: String, deg: i64, ht: u32 },
    #[error("catalog line {line}: {msg}")]
    Catalog { line: usize, msg: String },
}

fn span_coeffs(config: Config, r: &Root) -> Result<Vec<i32>, LiftError> {
    match expansion(r, &config.base()) {
        Some(c) if c.iter().all(|&x| x >= 0) && c.iter().any(|&x| x > 0) => Ok(c),
        _ => Err(LiftError::NotInSpan(config.show(r))),
    }
}

/// A lift: base field `F_p`, extension `F_{p^k}`, graded host `F_{p^k}[x]/(m)`
/// and one linear form `t1 x + t0` per base root, stored `[t0, t1]`.
#[derive(Clone, Debug)]
pub struct LiftSpec {
    pub config: Config,
    pub base: Arc<Field>,
    pub ext: Arc<Field>,
    pub graded: Arc<Field>,
    pub t: Vec<[Fe; 2]>,
}

impl LiftSpec {
    pub fn new(config: Config, p: u64, k: u32, t: Vec<[Fe; 2]>) -> Result<LiftSpec, LiftError> {
        let base = Field::prime(p)?;
        let ext = Field::new(p, k)?;
        let graded = Field::extension(&ext, config.graded_degree())?;
        assert_eq!(t.len(), 3, "one linear form per base root");
        Ok(LiftSpec { config, base, ext, graded, t })
    }

    /// Random forms; `homogeneous` makes each form a single monomial.
    pub fn random<R: Rng>(config: Config, p: u64, k: u32, homogeneous: bool, rng: &mut R) -> Result<LiftSpec, LiftError> {
        let ext = Field::new(p, k)?;
        let q = ext.size();
        let t = (0..3)
            .map(|_| {
                if homogeneous {
                    let c = ext.from_index(rng.gen_range(1..q));
                    if rng.gen_bool(0.5) {
                        [0, c]
                    } else {
                        [c, 0]
                    }
                } else {
                    [ext.from_index(rng.gen_range(0..q)), ext.from_index(rng.gen_range(0..q))]
                }
            })
            .collect();
        LiftSpec::new(config, p, k, t)
    }

    /// Each form is a nonzero monomial.
    pub fn is_homogeneous(&self) -> bool {
        self.t.iter().all(|&[a, b]| (a == 0) != (b == 0))
    }

    fn form(&self, z: usize) -> Fe {
        self.graded.from_base_coeffs(&self.t[z])
    }

    /// Image entry `u * prod (t1 x + t0)^c` of `x_r(u)`.
    pub fn image_entry(&self, r: &Root, u: Fe) -> Result<Fe, LiftError> {
        let c = span_coeffs(self.config, r)?;
        let g = &self.graded;
        let mut e = u;
        for (z, &cz) in c.iter().enumerate() {
            e = g.mul(e, g.pow(self.form(z), cz as u64));
        }
        Ok(e)
    }

    /// The image of `x_r(u)` as its multinomial product of pure-degree symbols.
    pub fn image_symbols(&self, r: &Root, u: Fe) -> Result<Vec<PureDegreeSymbol>, LiftError> {
        let e = self.image_entry(r, u)?;
        Ok(self
            .graded
            .base_coeffs(e)
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0)
            .map(|(i, c)| PureDegreeSymbol { root: r.clone(), t: c, deg: i as u32 })
            .collect())
    }

    fn realization(&self) -> Realization {
        Realization::of(&self.config.system())
    }
}

/// `<root, t, deg>`, i.e. `x_root(t x^deg)` in the graded group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PureDegreeSymbol {
    pub root: Root,
    pub t: Fe,
    pub deg: u32,
}

impl PureDegreeSymbol {
    pub fn entry(&self, graded: &Field) -> Fe {
        graded.mul(self.t, graded.pow(graded.x(), self.deg as u64))
    }

    pub fn eval(&self, config: Config, graded: &Field) -> Result<Mat, LiftError> {
        let ht = config.height(&self.root).map_err(|_| LiftError::NotInSpan(config.show(&self.root)))?;
        if self.deg > ht {
            return Err(LiftError::Degree { root: config.show(&self.root), deg: self.deg as i64, ht });
        }
        let real = Realization::of(&config.system());
        Ok(real.matrix(graded, &self.root, self.entry(graded)).expect("positive root"))
    }
}

/// Product of the images of the letters of `word`.
pub fn lift_element(spec: &LiftSpec, word: &[Letter]) -> Result<Mat, LiftError> {
    let real = spec.realization();
    lift_with(spec, &real, word)
}

fn lift_with(spec: &LiftSpec, real: &Realization, word: &[Letter]) -> Result<Mat, LiftError> {
    let mut m = Mat::identity(real.dim());
    for l in word {
        if l.t >= spec.base.p() {
            return Err(LiftError::NotBaseEntry(l.t));
        }
        let e = spec.image_entry(&l.root, l.t)?;
        real.gen(&spec.graded, &l.root, e).expect("positive root").right_apply(&spec.graded, &mut m);
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LiftMode {
    /// Every pair of single letters `x_r(s), x_z(u)`.
    ExhaustivePairs,
    /// Random words of length 1..=5.
    Sampled { n: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub config: Config,
    pub p: u64,
    pub k: u32,
    pub homogeneous: bool,
    pub mode: LiftMode,
    pub pairs: usize,
    pub linearity: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

fn show_word(config: Config, w: &[Letter]) -> String {
    w.iter().map(|l| format!("x_{}({})", config.show(&l.root), l.t)).collect::<Vec<_>>().join(" ")
}

/// Checks `f(NF(ab)) = f(a) f(b)` where `NF` is the normal form of the base
/// product, plus linearity of every image root map.
pub fn verify_lift_homomorphism(spec: &LiftSpec, mode: LiftMode) -> LiftReport {
    let config = spec.config;
    let real = spec.realization();
    let order = config.positive_roots();
    let fp = &spec.base;
    let g = &spec.graded;
    let p = fp.p();
    let mut report = LiftReport {
        config,
        p,
        k: spec.ext.k(),
        homogeneous: spec.is_homogeneous(),
        mode,
        pairs: 0,
        linearity: true,
        pass: true,
        counterexample: None,
    };

    for r in &order {
        for s in 0..p {
            for u in 0..p {
                let a = lift_with(spec, &real, &[Letter { root: r.clone(), t: s }, Letter { root: r.clone(), t: u }]);
                let b = lift_with(spec, &real, &[Letter { root: r.clone(), t: fp.add(s, u) }]);
                if a.unwrap() != b.unwrap() {
                    report.linearity = false;
                    report.pass = false;
                    report.counterexample.get_or_insert_with(|| format!("linearity x_{}({s}) x_{}({u})", config.show(r), config.show(r)));
                }
            }
        }
    }

    let pairs: Vec<(Vec<Letter>, Vec<Letter>)> = match mode {
        LiftMode::ExhaustivePairs => {
            let letters: Vec<Letter> =
                order.iter().flat_map(|r| (0..p).map(move |t| Letter { root: r.clone(), t })).collect();
            letters.iter().flat_map(|a| letters.iter().map(move |b| (vec![a.clone()], vec![b.clone()]))).collect()
        }
        LiftMode::Sampled { n, seed } => {
            let mut rng = crate::rng(seed);
            let word = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Letter> {
                let len = rng.gen_range(1..=5);
                (0..len).map(|_| Letter { root: order[rng.gen_range(0..order.len())].clone(), t: rng.gen_range(0..p) }).collect()
            };
            (0..n).map(|_| (word(&mut rng), word(&mut rng))).collect()
        }
    };
    report.pairs = pairs.len();
    let bad = pairs.iter().find(|(a, b)| {
        let mut ab = a.clone();
        ab.extend(b.iter().cloned());
        let prod = crate::chevalley::eval_word(fp, &real, &ab);
        let ts = decompose(fp, &real, &order, &prod).expect("base product lies in U_I");
        let nf: Vec<Letter> = order.iter().zip(ts).map(|(r, t)| Letter { root: r.clone(), t }).collect();
        let lhs = lift_with(spec, &real, &nf).unwrap();
        let rhs = lift_with(spec, &real, a).unwrap().mul(g, &lift_with(spec, &real, b).unwrap());
        lhs != rhs
    });
    if let Some((a, b)) = bad {
        report.pass = false;
        report.counterexample.get_or_insert_with(|| format!("a = {}, b = {}", show_word(config, a), show_word(config, b)));
    }
    report
}

/// Reachable `(deg z, deg e)` pairs over all homogeneous lifts, i.e. over
/// degree choices `b in {0,1}^3` for the base roots.
pub fn degree_coverage(config: Config, z: &Root, e: &Root) -> Result<BTreeSet<(u32, u32)>, LiftError> {
    let cz = span_coeffs(config, z)?;
    let ce = span_coeffs(config, e)?;
    let deg = |c: &[i32], b: u32| -> u32 { c.iter().enumerate().map(|(i, &ci)| ci as u32 * ((b >> i) & 1)).sum() };
    Ok((0..8u32).map(|b| (deg(&cz, b), deg(&ce, b))).collect())
}

// ---------------------------------------------------------------------------
// Relation catalog

/// Polynomial coefficient: sum of `num/den * prod var^exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(Vec<Mono>);

#[derive(Clone, Debug, PartialEq, Eq)]
struct Mono {
    num: i64,
    den: i64,
    vars: Vec<(usize, u32)>,
}

/// Linear degree expression: `const + sum c_i d_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lin(Vec<(i64, Option<usize>)>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    One,
    Sym { root: Root, coef: Poly, deg: Lin },
    Prod(Vec<Expr>),
    Comm(Box<Expr>, Box<Expr>),
}

/// One equation `lhs = rhs` with its quantifiers.
#[derive(Clone, Debug)]
pub struct Relation {
    pub id: String,
    pub config: Config,
    pub line: usize,
    /// Coefficient variables (range over the field), then choice variables.
    pub vars: Vec<String>,
    pub choices: Vec<Vec<i64>>,
    pub degs: Vec<(String, u32, u32)>,
    pub lhs: Expr,
    pub rhs: Expr,
}

pub const CATALOG: &str = include_str!("../data/relations.txt");

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }
    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }
    fn int(&mut self) -> Option<i64> {
        self.ws();
        let st = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[st..self.i]).ok()?.parse().ok()
    }
    fn ident(&mut self) -> Option<String> {
        self.ws();
        let st = self.i;
        if self.i < self.s.len() && self.s[self.i].is_ascii_alphabetic() {
            self.i += 1;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            return Some(String::from_utf8_lossy(&self.s[st..self.i]).into_owned());
        }
        None
    }
    /// Text up to the next top-level `,` or `>`.
    fn field(&mut self) -> &str {
        let st = self.i;
        while self.i < self.s.len() && self.s[self.i] != b',' && self.s[self.i] != b'>' {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[st..self.i]).unwrap_or("")
    }
}

fn parse_poly(s: &str, vars: &[String]) -> Result<Poly, String> {
    let mut c = Cursor { s: s.as_bytes(), i: 0 };
    let mut out = Vec::new();
    let mut first = true;
    while c.peek().is_some() {
        let mut sign = 1;
        if c.eat(b'-') {
            sign = -1;
        } else if !c.eat(b'+') && !first {
            return Err(format!("expected `+` or `-` in `{s}`"));
        }
        first = false;
        let num = match c.peek() {
            Some(d) if d.is_ascii_digit() => c.int().ok_or("bad integer")?,
            _ => 1,
        };
        let mut m = Mono { num: sign * num, den: 1, vars: Vec::new() };
        loop {
            c.eat(b'*');
            match c.peek() {
                Some(b'/') => {
                    c.i += 1;
                    m.den *= c.int().ok_or_else(|| format!("bad denominator in `{s}`"))?;
                }
                Some(ch) if ch.is_ascii_alphabetic() => {
                    let name = c.ident().unwrap();
                    let v = vars.iter().position(|x| *x == name).ok_or_else(|| format!("unknown variable `{name}`"))?;
                    let e = if c.eat(b'^') { c.int().ok_or("bad exponent")? as u32 } else { 1 };
                    m.vars.push((v, e));
                }
                _ => break,
            }
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err("empty coefficient".into());
    }
    Ok(Poly(out))
}

fn parse_lin(s: &str, degs: &[(String, u32, u32)]) -> Result<Lin, String> {
    let mut c = Cursor { s: s.as_bytes(), i: 0 };
    let mut out = Vec::new();
    let mut first = true;
    while c.peek().is_some() {
        let mut sign = 1;
        if c.eat(b'-') {
            sign = -1;
        } else if !c.eat(b'+') && !first {
            return Err(format!("expected `+` or `-` in `{s}`"));
        }
        first = false;
        let k = match c.peek() {
            Some(d) if d.is_ascii_digit() => c.int().ok_or("bad integer")?,
            _ => 1,
        };
        let var = match c.ident() {
            Some(name) => Some(degs.iter().position(|d| d.0 == name).ok_or_else(|| format!("unknown degree `{name}`"))?),
            None => None,
        };
        out.push((sign * k, var));
    }
    if out.is_empty() {
        return Err("empty degree".into());
    }
    Ok(Lin(out))
}

struct ExprParser<'a> {
    c: Cursor<'a>,
    config: Config,
    vars: &'a [String],
    degs: &'a [(String, u32, u32)],
}

impl ExprParser<'_> {
    fn product(&mut self) -> Result<Expr, String> {
        let mut fs = Vec::new();
        loop {
            match self.c.peek() {
                Some(b'<') => {
                    self.c.i += 1;
                    let root = self.c.field().to_string();
                    let root = self.config.parse_root(root.trim()).map_err(|e| e.to_string())?;
                    span_coeffs(self.config, &root).map_err(|e| e.to_string())?;
                    if !self.c.eat(b',') {
                        return Err("expected `,` after root".into());
                    }
                    let coef = parse_poly(self.c.field(), self.vars)?;
                    if !self.c.eat(b',') {
                        return Err("expected `,` after coefficient".into());
                    }
                    let deg = parse_lin(self.c.field(), self.degs)?;
                    if !self.c.eat(b'>') {
                        return Err("expected `>`".into());
                    }
                    fs.push(Expr::Sym { root, coef, deg });
                }
                Some(b'[') => {
                    self.c.i += 1;
                    let a = self.product()?;
                    if !self.c.eat(b',') {
                        return Err("expected `,` in commutator".into());
                    }
                    let b = self.product()?;
                    if !self.c.eat(b']') {
                        return Err("expected `]`".into());
                    }
                    fs.push(Expr::Comm(Box::new(a), Box::new(b)));
                }
                Some(b'1') => {
                    self.c.i += 1;
                    fs.push(Expr::One);
                }
                _ => break,
            }
        }
        match fs.len() {
            0 => Err("empty expression".into()),
            1 => Ok(fs.pop().unwrap()),
            _ => Ok(Expr::Prod(fs)),
        }
    }
}

fn parse_expr(s: &str, config: Config, vars: &[String], degs: &[(String, u32, u32)]) -> Result<Expr, String> {
    let mut p = ExprParser { c: Cursor { s: s.as_bytes(), i: 0 }, config, vars, degs };
    let e = p.product()?;
    if p.c.peek().is_some() {
        return Err(format!("trailing input at byte {}", p.c.i));
    }
    Ok(e)
}

/// Parses the line-oriented catalog format (see `data/relations.txt`).
pub fn parse_catalog(text: &str) -> Result<Vec<Relation>, LiftError> {
    let mut out = Vec::new();
    let mut config: Option<Config> = None;
    let mut cur: Option<(Relation, Option<String>, Option<String>)> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |msg: String| LiftError::Catalog { line, msg };
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (key, rest) = l.split_once(char::is_whitespace).map(|(a, b)| (a, b.trim())).unwrap_or((l, ""));
        match key {
            "config" => config = Some(Config::parse(rest).map_err(|e| err(e.to_string()))?),
            "relation" => {
                if cur.is_some() {
                    return Err(err("missing `end`".into()));
                }
                let config = config.ok_or_else(|| err("`config` must precede relations".into()))?;
                if rest.is_empty() {
                    return Err(err("missing relation id".into()));
                }
                let rel = Relation {
                    id: rest.to_string(),
                    config,
                    line,
                    vars: Vec::new(),
                    choices: Vec::new(),
                    degs: Vec::new(),
                    lhs: Expr::One,
                    rhs: Expr::One,
                };
                cur = Some((rel, None, None));
            }
            "coef" | "choice" | "deg" | "lhs" | "rhs" => {
                let (rel, lhs, rhs) = cur.as_mut().ok_or_else(|| err(format!("`{key}` outside a relation")))?;
                match key {
                    "coef" => {
                        if !rel.choices.is_empty() {
                            return Err(err("`coef` must precede `choice`".into()));
                        }
                        rel.vars.extend(rest.split_whitespace().map(String::from));
                    }
                    "choice" => {
                        let mut it = rest.split_whitespace();
                        let name = it.next().ok_or_else(|| err("missing choice name".into()))?;
                        let vals: Result<Vec<i64>, _> = it.map(str::parse).collect();
                        let vals = vals.map_err(|_| err("bad choice value".into()))?;
                        if vals.is_empty() {
                            return Err(err("empty choice".into()));
                        }
                        rel.vars.push(name.to_string());
                        rel.choices.push(vals);
                    }
                    "deg" => {
                        let mut it = rest.split_whitespace();
                        let name = it.next().ok_or_else(|| err("missing degree name".into()))?;
                        let range = it.next().ok_or_else(|| err("missing degree range".into()))?;
                        let (a, b) = range.split_once("..").ok_or_else(|| err("range must be `lo..hi`".into()))?;
                        let a: u32 = a.parse().map_err(|_| err("bad range".into()))?;
                        let b: u32 = b.parse().map_err(|_| err("bad range".into()))?;
                        if a > b {
                            return Err(err("empty range".into()));
                        }
                        rel.degs.push((name.to_string(), a, b));
                    }
                    "lhs" => *lhs = Some(rest.to_string()),
                    _ => *rhs = Some(rest.to_string()),
                }
            }
            "end" => {
                let (mut rel, lhs, rhs) = cur.take().ok_or_else(|| err("`end` without relation".into()))?;
                let lhs = lhs.ok_or_else(|| err("missing lhs".into()))?;
                let rhs = rhs.ok_or_else(|| err("missing rhs".into()))?;
                rel.lhs = parse_expr(&lhs, rel.config, &rel.vars, &rel.degs).map_err(err)?;
                rel.rhs = parse_expr(&rhs, rel.config, &rel.vars, &rel.degs).map_err(err)?;
                check_degrees(&rel).map_err(|e| err(e.to_string()))?;
                out.push(rel);
            }
            _ => return Err(err(format!("unknown keyword `{key}`"))),
        }
    }
    if cur.is_some() {
        return Err(LiftError::Catalog { line: text.lines().count(), msg: "missing `end`".into() });
    }
    Ok(out)
}

fn eval_lin(l: &Lin, d: &[u32]) -> i64 {
    l.0.iter().map(|&(k, v)| k * v.map_or(1, |v| d[v] as i64)).sum()
}

fn degree_assignments(rel: &Relation) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &(_, a, b) in &rel.degs {
        out = out.into_iter().flat_map(|v| (a..=b).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out
}

fn check_degrees(rel: &Relation) -> Result<(), LiftError> {
    fn walk(e: &Expr, config: Config, d: &[u32]) -> Result<(), LiftError> {
        match e {
            Expr::One => Ok(()),
            Expr::Sym { root, deg, .. } => {
                let ht = config.height(root).expect("checked at parse");
                let k = eval_lin(deg, d);
                if k < 0 || k > ht as i64 {
                    return Err(LiftError::Degree { root: config.show(root), deg: k, ht });
                }
                Ok(())
            }
            Expr::Prod(v) => v.iter().try_for_each(|x| walk(x, config, d)),
            Expr::Comm(a, b) => walk(a, config, d).and_then(|_| walk(b, config, d)),
        }
    }
    for d in degree_assignments(rel) {
        walk(&rel.lhs, rel.config, &d)?;
        walk(&rel.rhs, rel.config, &d)?;
    }
    Ok(())
}

/// Graded host for catalog checks: `F_q[x]/(m)` with a sign twist
/// `x_r(t) -> x_r(eps_r t)` over `I+`.
#[derive(Clone, Debug)]
pub struct GradedContext {
    pub config: Config,
    pub field: Arc<Field>,
    pub graded: Arc<Field>,
    pub twist: Vec<i8>,
    order: Vec<Root>,
    real: Realization,
    xpow: Vec<Fe>,
}

impl GradedContext {
    pub fn new(config: Config, field: Arc<Field>) -> Result<GradedContext, LiftError> {
        let graded = Field::extension(&field, config.graded_degree())?;
        Ok(GradedContext::with_graded(config, field, graded))
    }

    /// Same host degree, but the `n`-th irreducible modulus.
    pub fn with_modulus_index(config: Config, field: Arc<Field>, n: usize) -> Result<GradedContext, LiftError> {
        let m = config.graded_degree();
        let modulus = nth_irreducible(&field, m, n).ok_or(FieldError::NoModulus(m))?;
        let graded = Field::with_modulus(&field, modulus)?;
        Ok(GradedContext::with_graded(config, field, graded))
    }

    fn with_graded(config: Config, field: Arc<Field>, graded: Arc<Field>) -> GradedContext {
        let order = config.positive_roots();
        let xpow = (0..=3).map(|i| graded.pow(graded.x(), i)).collect();
        GradedContext {
            config,
            twist: vec![1; order.len()],
            order,
            real: Realization::of(&config.system()),
            xpow,
            field,
            graded,
        }
    }

    pub fn with_twist(mut self, twist: Vec<i8>) -> GradedContext {
        assert_eq!(twist.len(), self.order.len());
        self.twist = twist;
        self
    }

    pub fn order(&self) -> &[Root] {
        &self.order
    }

    pub fn twist_display(&self) -> Vec<(String, i8)> {
        self.order.iter().zip(&self.twist).map(|(r, &s)| (self.config.show(r), s)).collect()
    }

    fn eval_poly(&self, p: &Poly, vals: &[Fe]) -> Result<Fe, FieldError> {
        let f = &self.field;
        let mut acc = 0;
        for m in &p.0 {
            let mut t = f.mul(f.from_i64(m.num), f.inv(f.from_i64(m.den))?);
            for &(v, e) in &m.vars {
                t = f.mul(t, f.pow(vals[v], e as u64));
            }
            acc = f.add(acc, t);
        }
        Ok(acc)
    }

    fn apply(&self, e: &Expr, vals: &[Fe], d: &[u32], inv: bool, m: &mut Mat) -> Result<(), LiftError> {
        let g = &self.graded;
        match e {
            Expr::One => {}
            Expr::Sym { root, coef, deg } => {
                let pos = self.order.iter().position(|r| r == root).expect("root in I+");
                let mut c = self.eval_poly(coef, vals)?;
                if self.twist[pos] < 0 {
                    c = g.neg(c);
                }
                if inv {
                    c = g.neg(c);
                }
                let k = eval_lin(deg, d) as usize;
                let entry = g.mul(c, self.xpow[k]);
                self.real.gen(g, root, entry).expect("positive root").right_apply(g, m);
            }
            Expr::Prod(v) => {
                if inv {
                    for x in v.iter().rev() {
                        self.apply(x, vals, d, true, m)?;
                    }
                } else {
                    for x in v {
                        self.apply(x, vals, d, false, m)?;
                    }
                }
            }
            Expr::Comm(a, b) => {
                // [a,b]^-1 = [b,a]
                let (a, b) = if inv { (b, a) } else { (a, b) };
                self.apply(a, vals, d, false, m)?;
                self.apply(b, vals, d, false, m)?;
                self.apply(a, vals, d, true, m)?;
                self.apply(b, vals, d, true, m)?;
            }
        }
        Ok(())
    }

    /// Evaluates `lhs * rhs^-1` and tests for the identity.
    fn holds(&self, rel: &Relation, vals: &[Fe], d: &[u32]) -> Result<bool, LiftError> {
        let mut m = Mat::identity(self.real.dim());
        self.apply(&rel.lhs, vals, d, false, &mut m)?;
        self.apply(&rel.rhs, vals, d, true, &mut m)?;
        Ok(m.is_identity())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SweepOptions {
    pub exhaustive_limit: u64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { exhaustive_limit: 1_000_000, samples: 10_000, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationCheck {
    pub id: String,
    pub assignments: u64,
    pub cases: u64,
    pub exhaustive: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

fn radices(rel: &Relation, q: u64) -> Vec<u64> {
    let nc = rel.vars.len() - rel.choices.len();
    let mut r: Vec<u64> = vec![q; nc];
    r.extend(rel.choices.iter().map(|c| c.len() as u64));
    r.extend(rel.degs.iter().map(|&(_, a, b)| (b - a + 1) as u64));
    r
}

/// Number of quantifier assignments, saturating.
pub fn assignment_count(rel: &Relation, q: u64) -> u64 {
    radices(rel, q).iter().fold(1u64, |a, &r| a.saturating_mul(r))
}

fn assignment(rel: &Relation, ctx: &GradedContext, digits: &[u64]) -> (Vec<Fe>, Vec<u32>) {
    let nc = rel.vars.len() - rel.choices.len();
    let f = &ctx.field;
    let mut vals: Vec<Fe> = digits[..nc].iter().map(|&d| f.from_index(d)).collect();
    for (i, c) in rel.choices.iter().enumerate() {
        vals.push(f.from_i64(c[digits[nc + i] as usize]));
    }
    let degs = rel.degs.iter().enumerate().map(|(i, &(_, a, _))| a + digits[rel.vars.len() + i] as u32).collect();
    (vals, degs)
}

fn show_assignment(rel: &Relation, ctx: &GradedContext, vals: &[Fe], d: &[u32]) -> String {
    let mut parts: Vec<String> = rel.vars.iter().zip(vals).map(|(n, &v)| format!("{n}={}", ctx.field.show(v))).collect();
    parts.extend(rel.degs.iter().zip(d).map(|((n, ..), k)| format!("{n}={k}")));
    parts.join(" ")
}

/// Checks `lhs = rhs` over every assignment when there are at most
/// `exhaustive_limit` of them, else over `samples` seeded random ones.
pub fn verify_graded_relation(rel: &Relation, ctx: &GradedContext, opts: &SweepOptions) -> Result<RelationCheck, LiftError> {
    if rel.config != ctx.config {
        return Err(LiftError::Catalog { line: rel.line, msg: format!("relation is for {}", rel.config.name()) });
    }
    let rad = radices(rel, ctx.field.size());
    let total = assignment_count(rel, ctx.field.size());
    let exhaustive = total <= opts.exhaustive_limit;
    let cases = if exhaustive { total } else { opts.samples as u64 };
    let digits = |n: u64| -> Vec<u64> {
        if exhaustive {
            let mut n = n;
            rad.iter()
                .map(|&r| {
                    let d = n % r;
                    n /= r;
                    d
                })
                .collect()
        } else {
            let mut rng = crate::rng(opts.seed ^ n.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            rad.iter().map(|&r| rng.gen_range(0..r)).collect()
        }
    };
    let fail = (0..cases).into_par_iter().find_first(|&n| {
        let (vals, d) = assignment(rel, ctx, &digits(n));
        !ctx.holds(rel, &vals, &d).unwrap_or(false)
    });
    let counterexample = match fail {
        Some(n) => {
            let (vals, d) = assignment(rel, ctx, &digits(n));
            ctx.holds(rel, &vals, &d)?;
            Some(show_assignment(rel, ctx, &vals, &d))
        }
        None => None,
    };
    Ok(RelationCheck {
        id: rel.id.clone(),
        assignments: total,
        cases,
        exhaustive,
        pass: counterexample.is_none(),
        counterexample,
    })
}

/// First sign twist (in binary order over `I+`) under which every relation
/// holds on a few seeded samples; `None` if there is none.
pub fn find_twist(config: Config, field: &Arc<Field>, rels: &[Relation], seed: u64) -> Result<Option<Vec<i8>>, LiftError> {
    let base = GradedContext::new(config, field.clone())?;
    let n = base.order.len();
    let quick = SweepOptions { exhaustive_limit: 0, samples: 24, seed };
    for mask in 0u32..(1 << n) {
        let tw: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let ctx = base.clone().with_twist(tw.clone());
        let mut ok = true;
        for r in rels.iter().filter(|r| r.config == config) {
            if !verify_graded_relation(r, &ctx, &quick)?.pass {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(tw));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogReport {
    pub config: Config,
    pub field: String,
    pub graded: String,
    pub twist: Vec<(String, i8)>,
    pub options: SweepOptions,
    pub checks: Vec<RelationCheck>,
    pub pass: bool,
}

/// Verifies every catalog relation of `config` under the given twist.
pub fn verify_catalog(
    rels: &[Relation],
    ctx: &GradedContext,
    opts: &SweepOptions,
) -> Result<CatalogReport, LiftError> {
    let mut checks = Vec::new();
    for r in rels.iter().filter(|r| r.config == ctx.config) {
        checks.push(verify_graded_relation(r, ctx, opts)?);
    }
    Ok(CatalogReport {
        config: ctx.config,
        field: ctx.field.descriptor(),
        graded: ctx.graded.descriptor(),
        twist: ctx.twist_display(),
        options: *opts,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(c: Config, s: &str) -> Root {
        c.parse_root(s).unwrap()
    }

    #[test]
    fn empty_word_lifts_to_identity() {
        let spec = LiftSpec::random(Config::A3, 3, 1, false, &mut crate::rng(1)).unwrap();
        assert!(lift_element(&spec, &[]).unwrap().is_identity());
    }

    #[test]
    fn homogeneous_image_is_one_symbol() {
        let c = Config::B3Large;
        let spec = LiftSpec::new(c, 5, 2, vec![[0, 2], [3, 0], [0, 4]]).unwrap();
        assert!(spec.is_homogeneous());
        let eta = r(c, "a+b+2p");
        let syms = spec.image_symbols(&eta, 1).unwrap();
        assert_eq!(syms.len(), 1);
        let e = &spec.ext;
        let want = e.mul(e.mul(2, 3), e.mul(4, 4));
        assert_eq!(syms[0], PureDegreeSymbol { root: eta.clone(), t: want, deg: 3 });
        let m = lift_element(&spec, &[Letter { root: eta, t: 1 }]).unwrap();
        assert_eq!(m, syms[0].eval(c, &spec.graded).unwrap());
    }

    #[test]
    fn nonhomogeneous_image_is_multinomial_product() {
        let c = Config::B3Small;
        let spec = LiftSpec::random(c, 5, 2, false, &mut crate::rng(7)).unwrap();
        for root in c.positive_roots() {
            let m = lift_element(&spec, &[Letter { root: root.clone(), t: 3 }]).unwrap();
            let mut prod = Mat::identity(m.n);
            for s in spec.image_symbols(&root, 3).unwrap() {
                prod = prod.mul(&spec.graded, &s.eval(c, &spec.graded).unwrap());
            }
            assert_eq!(m, prod);
        }
    }

    #[test]
    fn lift_rejects_outside_span() {
        let c = Config::A3;
        let spec = LiftSpec::random(c, 3, 1, false, &mut crate::rng(2)).unwrap();
        let bad = r(c, "d");
        assert!(matches!(lift_element(&spec, &[Letter { root: bad, t: 1 }]), Err(LiftError::NotInSpan(_))));
    }

    #[test]
    fn homomorphism_exhaustive_pairs_a3() {
        let spec = LiftSpec::random(Config::A3, 3, 1, true, &mut crate::rng(3)).unwrap();
        let rep = verify_lift_homomorphism(&spec, LiftMode::ExhaustivePairs);
        assert!(rep.pass, "{:?}", rep.counterexample);
        assert_eq!(rep.pairs, 18 * 18);
    }

    #[test]
    fn homomorphism_sampled() {
        let spec = LiftSpec::random(Config::A3, 3, 1, true, &mut crate::rng(4)).unwrap();
        assert!(verify_lift_homomorphism(&spec, LiftMode::Sampled { n: 500, seed: 1 }).pass);
        let spec = LiftSpec::random(Config::B3Large, 5, 2, false, &mut crate::rng(5)).unwrap();
        assert!(verify_lift_homomorphism(&spec, LiftMode::Sampled { n: 200, seed: 2 }).pass);
    }

    #[test]
    fn broken_lift_is_caught() {
        // scaling a single non-base root breaks the homomorphism
        let c = Config::A3;
        let spec = LiftSpec::new(c, 5, 1, vec![[1, 0], [1, 0], [1, 0]]).unwrap();
        let real = spec.realization();
        let fp = &spec.base;
        let a = vec![Letter { root: r(c, "a"), t: 1 }];
        let b = vec![Letter { root: r(c, "b"), t: 1 }];
        let ab = [a.clone(), b.clone()].concat();
        let prod = crate::chevalley::eval_word(fp, &real, &ab);
        let order = c.positive_roots();
        let mut ts = decompose(fp, &real, &order, &prod).unwrap();
        let k = order.iter().position(|x| *x == r(c, "a+b")).unwrap();
        ts[k] = fp.mul(ts[k], 2);
        let nf: Vec<Letter> = order.iter().zip(ts).map(|(r, t)| Letter { root: r.clone(), t }).collect();
        assert_ne!(lift_element(&spec, &nf).unwrap(), lift_element(&spec, &ab).unwrap());
    }

    #[test]
    fn degree_coverage_cases() {
        let c = Config::B3Large;
        let s = degree_coverage(c, &r(c, "a"), &r(c, "b+2p")).unwrap();
        assert_eq!(s.len(), 8);
        let s = degree_coverage(c, &r(c, "a+b"), &r(c, "b+p")).unwrap();
        assert_eq!(s.len(), 7);
        assert!(!s.contains(&(0, 2)) && !s.contains(&(2, 0)));
        let s = degree_coverage(c, &r(c, "a"), &r(c, "a")).unwrap();
        assert_eq!(s, [(0, 0), (1, 1)].into_iter().collect());
    }

    #[test]
    fn catalog_parses() {
        let rels = parse_catalog(CATALOG).unwrap();
        for c in Config::ALL {
            assert!(rels.iter().filter(|r| r.config == c).count() >= 10, "{c:?}");
        }
        let mut ids: Vec<&str> = rels.iter().map(|r| r.id.as_str()).collect();
        ids.sort();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n, "duplicate ids");
    }

    #[test]
    fn catalog_errors_carry_lines() {
        let bad = "config a3\nrelation x\ncoef t\nlhs <a,t,i>\nrhs 1\nend\n";
        match parse_catalog(bad) {
            Err(LiftError::Catalog { line: 6, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad = "config a3\nrelation x\ncoef t\ndeg i 0..2\nlhs <a,t,i>\nrhs 1\nend\n";
        assert!(parse_catalog(bad).is_err(), "degree above height");
        assert!(parse_catalog("relation x\n").is_err());
        assert!(parse_catalog("config a3\nrelation x\nfoo\n").is_err());
    }

    #[test]
    fn identity_relation_holds() {
        let text = "config b3-large\nrelation id\ndeg i 0..3\nlhs <b+2p,0,i>\nrhs 1\nend\n";
        let rels = parse_catalog(text).unwrap();
        let ctx = GradedContext::new(Config::B3Large, Field::prime(5).unwrap()).unwrap();
        let chk = verify_graded_relation(&rels[0], &ctx, &SweepOptions::default()).unwrap();
        assert!(chk.pass && chk.exhaustive && chk.cases == 4);
    }

    #[test]
    fn false_relation_fails() {
        let text = "config a3\nrelation wrong\ncoef t u\ndeg i 0..1\ndeg j 0..1\nlhs [<a,t,i>,<b,u,j>]\nrhs 1\nend\n";
        let rels = parse_catalog(text).unwrap();
        let ctx = GradedContext::new(Config::A3, Field::prime(5).unwrap()).unwrap();
        let chk = verify_graded_relation(&rels[0], &ctx, &SweepOptions::default()).unwrap();
        assert!(!chk.pass && chk.counterexample.is_some());
    }
}
