//! Root systems A_n and B_n, the three link configurations, spans and heights.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RootError {
    #[error("unsupported root system {0}")]
    Unsupported(String),
    #[error("roots are linearly dependent")]
    Dependent,
    #[error("root {0} is not a nonnegative combination of the base")]
    NotInSpan(String),
    #[error("cannot parse root `{0}`")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Kind {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Root(pub Vec<i32>);

impl Root {
    pub fn add(&self, o: &Root) -> Root {
        Root(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: i32) -> Root {
        Root(self.0.iter().map(|a| a * c).collect())
    }

    pub fn neg(&self) -> Root {
        self.scale(-1)
    }

    pub fn norm2(&self) -> i32 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct RootSystem {
    pub kind: Kind,
    pub rank: usize,
    pub roots: Vec<Root>,
}

fn unit(len: usize, i: usize, c: i32) -> Vec<i32> {
    let mut v = vec![0; len];
    v[i] = c;
    v
}

/// All roots of `A_n` (vectors of length n+1) or `B_n` (length n).
pub fn enumerate_roots(kind: Kind, n: usize) -> Result<RootSystem, RootError> {
    let mut roots = Vec::new();
    match kind {
        Kind::A => {
            if n < 1 {
                return Err(RootError::Unsupported(format!("A{n}")));
            }
            for i in 0..=n {
                for j in 0..=n {
                    if i != j {
                        let mut v = vec![0; n + 1];
                        v[i] = 1;
                        v[j] = -1;
                        roots.push(Root(v));
                    }
                }
            }
        }
        Kind::B => {
            if n < 2 {
                return Err(RootError::Unsupported(format!("B{n}")));
            }
            for i in 0..n {
                for a in [1, -1] {
                    roots.push(Root(unit(n, i, a)));
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    for a in [1, -1] {
                        for b in [1, -1] {
                            let mut v = vec![0; n];
                            v[i] = a;
                            v[j] = b;
                            roots.push(Root(v));
                        }
                    }
                }
            }
        }
    }
    Ok(RootSystem { kind, rank: n, roots })
}

impl RootSystem {
    pub fn contains(&self, r: &Root) -> bool {
        self.roots.contains(r)
    }

    pub fn is_short(&self, r: &Root) -> bool {
        self.kind == Kind::B && r.norm2() == 1
    }

    /// Coordinate vector length.
    pub fn dim(&self) -> usize {
        match self.kind {
            Kind::A => self.rank + 1,
            Kind::B => self.rank,
        }
    }
}

/// Rank of an integer matrix given as rows, by fraction-free elimination.
fn int_rank(rows: &[Vec<i32>]) -> usize {
    let mut m: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let (a, b) = (m[rank][c], m[r][c]);
                for j in 0..cols {
                    m[r][j] = m[r][j] * a - m[rank][j] * b;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn independent(p: &[Root]) -> bool {
    let rows: Vec<Vec<i32>> = p.iter().map(|r| r.0.clone()).collect();
    int_rank(&rows) == p.len()
}

const COEFF_BOUND: i32 = 3;

/// Nonnegative coefficients of `r` over `p`, searched up to the coefficient bound.
pub fn expansion(r: &Root, p: &[Root]) -> Option<Vec<i32>> {
    let n = p.len();
    let total = (COEFF_BOUND + 1).pow(n as u32);
    for code in 0..total {
        let mut c = vec![0; n];
        let mut x = code;
        for ci in c.iter_mut() {
            *ci = x % (COEFF_BOUND + 1);
            x /= COEFF_BOUND + 1;
        }
        let mut v = vec![0; r.0.len()];
        for (ci, pi) in c.iter().zip(p) {
            for (vj, pj) in v.iter_mut().zip(&pi.0) {
                *vj += ci * pj;
            }
        }
        if v == r.0 {
            debug_assert!(c.iter().all(|&x| x < COEFF_BOUND), "coefficient bound reached");
            return Some(c);
        }
    }
    None
}

/// Roots that are nonnegative integer combinations of the independent set `p`.
pub fn positive_span_roots(sys: &RootSystem, p: &[Root]) -> Result<Vec<Root>, RootError> {
    if !independent(p) {
        return Err(RootError::Dependent);
    }
    Ok(sys
        .roots
        .iter()
        .filter(|r| expansion(r, p).is_some())
        .cloned()
        .collect())
}

pub fn height(r: &Root, p: &[Root]) -> Result<u32, RootError> {
    expansion(r, p)
        .map(|c| c.iter().sum::<i32>() as u32)
        .ok_or_else(|| RootError::NotInSpan(r.to_string()))
}

/// `(a, b, a*z + b*e)` for all a, b >= 1 giving a root, lowest `a + b` first.
pub fn pair_span(sys: &RootSystem, z: &Root, e: &Root) -> Vec<(i32, i32, Root)> {
    let mut out = Vec::new();
    for a in 1..=COEFF_BOUND {
        for b in 1..=COEFF_BOUND {
            let r = z.scale(a).add(&e.scale(b));
            if sys.contains(&r) {
                out.push((a, b, r));
            }
        }
    }
    out.sort_by(|x, y| (x.0 + x.1, &x.2).cmp(&(y.0 + y.1, &y.2)));
    out
}

/// Vertex colors of a link complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Color {
    Red,
    Green,
    Blue,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Red, Color::Green, Color::Blue];

    pub fn idx(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
        }
    }
}

/// The three link configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Config {
    A3,
    B3Small,
    B3Large,
}

impl Config {
    pub const ALL: [Config; 3] = [Config::A3, Config::B3Small, Config::B3Large];

    pub fn name(self) -> &'static str {
        match self {
            Config::A3 => "a3",
            Config::B3Small => "b3-small",
            Config::B3Large => "b3-large",
        }
    }

    pub fn parse(s: &str) -> Result<Config, RootError> {
        match s.to_ascii_lowercase().as_str() {
            "a3" | "a3-link" => Ok(Config::A3),
            "b3-small" | "b3small" | "b3-sm" => Ok(Config::B3Small),
            "b3-large" | "b3large" | "b3-lg" => Ok(Config::B3Large),
            _ => Err(RootError::Unsupported(s.to_string())),
        }
    }

    pub fn system(self) -> RootSystem {
        match self {
            Config::A3 => enumerate_roots(Kind::A, 3).unwrap(),
            _ => enumerate_roots(Kind::B, 3).unwrap(),
        }
    }

    /// Named simple roots of the ambient system (four for each, the last being
    /// minus the sum of the other three).
    pub fn named(self) -> [(&'static str, Root); 4] {
        match self {
            Config::A3 => [
                ("a", Root(vec![1, -1, 0, 0])),
                ("b", Root(vec![0, 1, -1, 0])),
                ("g", Root(vec![0, 0, 1, -1])),
                ("d", Root(vec![-1, 0, 0, 1])),
            ],
            _ => [
                ("a", Root(vec![1, -1, 0])),
                ("b", Root(vec![0, 1, -1])),
                ("p", Root(vec![0, 0, 1])),
                ("w", Root(vec![-1, 0, 0])),
            ],
        }
    }

    pub fn root(self, name: &str) -> Root {
        self.named()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, r)| r)
            .unwrap_or_else(|| panic!("unknown root name {name}"))
    }

    /// Names of the base I of the link, in order.
    pub fn base_names(self) -> [&'static str; 3] {
        match self {
            Config::A3 => ["a", "b", "g"],
            Config::B3Small => ["b", "p", "w"],
            Config::B3Large => ["a", "b", "p"],
        }
    }

    pub fn base(self) -> Vec<Root> {
        self.base_names().iter().map(|n| self.root(n)).collect()
    }

    /// Indices into `base()` of the pair generating each colored subgroup.
    pub fn color_pair(self, c: Color) -> [usize; 2] {
        match c {
            Color::Red => [0, 1],
            Color::Green => [0, 2],
            Color::Blue => [1, 2],
        }
    }

    pub fn color_base(self, c: Color) -> Vec<Root> {
        let b = self.base();
        self.color_pair(c).iter().map(|&i| b[i].clone()).collect()
    }

    /// I+ in the global order: height, then coordinates.
    pub fn positive_roots(self) -> Vec<Root> {
        let sys = self.system();
        let base = self.base();
        let mut rs = positive_span_roots(&sys, &base).unwrap();
        rs.sort_by_key(|r| (height(r, &base).unwrap(), r.clone()));
        rs
    }

    pub fn height(self, r: &Root) -> Result<u32, RootError> {
        height(r, &self.base())
    }

    /// Extension degree hosting the graded entries.
    pub fn graded_degree(self) -> u32 {
        match self {
            Config::A3 => 4,
            _ => 6,
        }
    }

    /// Render as a combination of named base roots, e.g. `a+2b+2p`.
    pub fn show(self, r: &Root) -> String {
        let base = self.base();
        let names = self.base_names();
        let c = match expansion(r, &base) {
            Some(c) => c,
            None => match expansion(&r.neg(), &base) {
                Some(c) => return format!("-({})", render(&c, &names)),
                None => return r.to_string(),
            },
        };
        render(&c, &names)
    }

    /// Parse `a+2b+2p` style names (signed terms allowed, e.g. `-a-b`).
    pub fn parse_root(self, s: &str) -> Result<Root, RootError> {
        let err = || RootError::Parse(s.to_string());
        let dim = self.system().dim();
        let mut acc = Root(vec![0; dim]);
        let t = s.replace(' ', "");
        if t.is_empty() {
            return Err(err());
        }
        let mut i = 0;
        let bytes = t.as_bytes();
        while i < bytes.len() {
            let mut sign = 1;
            if bytes[i] == b'+' || bytes[i] == b'-' {
                if bytes[i] == b'-' {
                    sign = -1;
                }
                i += 1;
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let coef: i32 = if start == i { 1 } else { t[start..i].parse().map_err(|_| err())? };
            if i >= bytes.len() {
                return Err(err());
            }
            let name = &t[i..i + 1];
            i += 1;
            let r = self
                .named()
                .into_iter()
                .find(|(n, _)| *n == name)
                .map(|(_, r)| r)
                .ok_or_else(err)?;
            acc = acc.add(&r.scale(sign * coef));
        }
        if !self.system().contains(&acc) {
            return Err(err());
        }
        Ok(acc)
    }
}

fn render(c: &[i32], names: &[&str]) -> String {
    let mut parts = Vec::new();
    for (ci, n) in c.iter().zip(names) {
        match ci {
            0 => {}
            1 => parts.push(n.to_string()),
            _ => parts.push(format!("{ci}{n}")),
        }
    }
    parts.join("+")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(enumerate_roots(Kind::A, 3).unwrap().roots.len(), 12);
        assert_eq!(enumerate_roots(Kind::B, 3).unwrap().roots.len(), 18);
        let a1 = enumerate_roots(Kind::A, 1).unwrap();
        assert_eq!(a1.roots, vec![Root(vec![1, -1]), Root(vec![-1, 1])]);
        for n in 1..6 {
            assert_eq!(enumerate_roots(Kind::A, n).unwrap().roots.len(), n * (n + 1));
        }
        for n in 2..6 {
            assert_eq!(enumerate_roots(Kind::B, n).unwrap().roots.len(), 2 * n * n);
        }
        assert!(enumerate_roots(Kind::B, 1).is_err());
    }

    #[test]
    fn negation_closed_and_lengths() {
        for sys in [enumerate_roots(Kind::A, 4).unwrap(), enumerate_roots(Kind::B, 4).unwrap()] {
            for r in &sys.roots {
                assert!(sys.contains(&r.neg()));
                assert!(r.norm2() == 1 || r.norm2() == 2);
            }
        }
    }

    #[test]
    fn spans_and_heights() {
        let c = Config::B3Large;
        let sys = c.system();
        assert_eq!(positive_span_roots(&sys, &c.base()).unwrap().len(), 9);
        let (b, p, a) = (c.root("b"), c.root("p"), c.root("a"));
        let blue = positive_span_roots(&sys, &[b.clone(), p.clone()]).unwrap();
        assert_eq!(blue.len(), 4);
        let green = positive_span_roots(&sys, &[a.clone(), p.clone()]).unwrap();
        assert_eq!(green.len(), 2);
        assert_eq!(c.height(&a).unwrap(), 1);
        let top = c.parse_root("a+2b+2p").unwrap();
        assert_eq!(c.height(&top).unwrap(), 5);
        let a3 = Config::A3;
        assert_eq!(a3.height(&a3.parse_root("a+b+g").unwrap()).unwrap(), 3);
        assert_eq!(positive_span_roots(&sys, &[a.clone(), a.clone()]), Err(RootError::Dependent));
        assert!(c.height(&c.root("w")).is_err());
    }

    #[test]
    fn pair_spans() {
        let a3 = Config::A3;
        let ps = pair_span(&a3.system(), &a3.root("a"), &a3.root("b"));
        assert_eq!(ps, vec![(1, 1, a3.parse_root("a+b").unwrap())]);
        let b3 = Config::B3Large;
        let ps = pair_span(&b3.system(), &b3.root("b"), &b3.root("p"));
        assert_eq!(
            ps,
            vec![(1, 1, b3.parse_root("b+p").unwrap()), (1, 2, b3.parse_root("b+2p").unwrap())]
        );
        assert!(pair_span(&b3.system(), &b3.root("a"), &b3.root("p")).is_empty());
    }

    #[test]
    fn pair_span_sizes_exhaustive() {
        for n in 1..=4 {
            let sys = enumerate_roots(Kind::A, n).unwrap();
            for z in &sys.roots {
                for e in &sys.roots {
                    if independent(&[z.clone(), e.clone()]) {
                        assert!(pair_span(&sys, z, e).len() <= 1);
                    }
                }
            }
        }
        let sys = enumerate_roots(Kind::B, 3).unwrap();
        for z in &sys.roots {
            for e in &sys.roots {
                if !independent(&[z.clone(), e.clone()]) {
                    continue;
                }
                let ps = pair_span(&sys, z, e);
                assert!(ps.len() <= 2);
                if ps.len() == 2 {
                    assert!(z.norm2() != e.norm2());
                }
                let span = positive_span_roots(&sys, &[z.clone(), e.clone()]).unwrap();
                for (_, _, r) in &ps {
                    assert!(span.contains(r));
                }
            }
        }
    }

    #[test]
    fn configurations() {
        let sizes = |c: Config| -> Vec<usize> {
            Color::ALL
                .iter()
                .map(|&col| positive_span_roots(&c.system(), &c.color_base(col)).unwrap().len())
                .collect()
        };
        assert_eq!(sizes(Config::A3), vec![3, 2, 3]);
        assert_eq!(sizes(Config::B3Small), vec![4, 2, 3]);
        assert_eq!(sizes(Config::B3Large), vec![3, 2, 4]);
        assert_eq!(Config::A3.positive_roots().len(), 6);
        assert_eq!(Config::B3Small.positive_roots().len(), 7);
        let names: Vec<String> =
            Config::B3Large.positive_roots().iter().map(|r| Config::B3Large.show(r)).collect();
        assert_eq!(names.len(), 9);
        assert_eq!(names.last().unwrap(), "a+2b+2p");
        for c in Config::ALL {
            let rs = c.positive_roots();
            for w in rs.windows(2) {
                assert!(c.height(&w[0]).unwrap() <= c.height(&w[1]).unwrap());
            }
        }
    }
}
