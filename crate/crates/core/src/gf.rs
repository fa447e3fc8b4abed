//! Finite fields F_p, F_{p^k} and towers F_q[x]/(f).
//!
//! Elements are plain `u64` words. Each F_p coefficient occupies one lane of
//! `bits(p - 1) + 1` bits, lowest degree in the lowest lane, so a prime-field
//! element, its embedding in an extension and its enumeration index for
//! `k = 1` all coincide.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A field element in lane-packed form. Only meaningful together with its [`Field`].
pub type Fe = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field with {0} F_p coefficients does not fit a 64-bit word")]
    TooLarge(u32),
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("no irreducible polynomial of degree {0} found")]
    NoModulus(u32),
}

const TABLE_LIMIT: u64 = 1 << 16;

struct Tables {
    // chunked lane-word -> enumeration index
    chunk_shift: Vec<u32>,
    chunk_mask: Vec<u64>,
    chunk_index: Vec<Vec<u32>>,
    log: Vec<u32>,
    exp: Vec<Fe>,
}

/// Field descriptor. Immutable; share it through `Arc` or references.
pub struct Field {
    p: u64,
    k: u32,
    q: u64,
    m: u32,
    base: Option<Arc<Field>>,
    modulus: Vec<Fe>,
    w: u32,
    base_bits: u32,
    base_mask: u64,
    lanes_mask: u64,
    hi: u64,
    addc: u64,
    pl: u64,
    tables: Option<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({})", self.descriptor())
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn bits(x: u64) -> u32 {
    64 - x.leading_zeros()
}

fn spread(lane: u64, w: u32, lanes: u32) -> u64 {
    let mut r = 0;
    for i in 0..lanes {
        r |= lane << (i * w);
    }
    r
}

impl Field {
    /// The prime field F_p.
    pub fn prime(p: u64) -> Result<Arc<Field>, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let w = if p == 2 { 1 } else { bits(p - 1) + 1 };
        let mut f = Field::skeleton(p, 1, p, 1, None, vec![0, 1], w);
        f.build_tables();
        Ok(Arc::new(f))
    }

    /// F_{p^k} with the lexicographically smallest monic irreducible modulus.
    pub fn new(p: u64, k: u32) -> Result<Arc<Field>, FieldError> {
        if k == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let fp = Field::prime(p)?;
        if k == 1 {
            return Ok(fp);
        }
        Field::extension(&fp, k)
    }

    /// `base[x]/(f)` where `f` is the smallest monic irreducible of degree `m` over `base`.
    pub fn extension(base: &Arc<Field>, m: u32) -> Result<Arc<Field>, FieldError> {
        if m == 0 {
            return Err(FieldError::ZeroDegree);
        }
        if m == 1 {
            return Ok(base.clone());
        }
        let modulus = smallest_irreducible(base, m).ok_or(FieldError::NoModulus(m))?;
        Field::with_modulus(base, modulus)
    }

    /// `base[x]/(f)` for an explicit monic `f` (coefficients low to high, leading 1 included).
    pub fn with_modulus(base: &Arc<Field>, modulus: Vec<Fe>) -> Result<Arc<Field>, FieldError> {
        let m = (modulus.len() - 1) as u32;
        if m == 0 {
            return Err(FieldError::ZeroDegree);
        }
        if !is_irreducible(base, &modulus) {
            return Err(FieldError::NoModulus(m));
        }
        let k = base.k * m;
        if k * base.w > 64 {
            return Err(FieldError::TooLarge(k));
        }
        let q = base
            .q
            .checked_pow(m)
            .ok_or(FieldError::TooLarge(k))?;
        let mut f = Field::skeleton(base.p, k, q, m, Some(base.clone()), modulus, base.w);
        f.build_tables();
        Ok(Arc::new(f))
    }

    fn skeleton(
        p: u64,
        k: u32,
        q: u64,
        m: u32,
        base: Option<Arc<Field>>,
        modulus: Vec<Fe>,
        w: u32,
    ) -> Field {
        let base_bits = (k / m) * w;
        let lanes_bits = k * w;
        let lanes_mask = if lanes_bits == 64 { u64::MAX } else { (1u64 << lanes_bits) - 1 };
        let base_mask = if base_bits == 64 { u64::MAX } else { (1u64 << base_bits) - 1 };
        let (hi, addc, pl) = if p == 2 {
            (0, 0, 0)
        } else {
            (
                spread(1 << (w - 1), w, k),
                spread((1 << (w - 1)) - p, w, k),
                spread(p, w, k),
            )
        };
        Field {
            p,
            k,
            q,
            m,
            base,
            modulus,
            w,
            base_bits,
            base_mask,
            lanes_mask,
            hi,
            addc,
            pl,
            tables: None,
        }
    }

    fn build_tables(&mut self) {
        if self.q > TABLE_LIMIT {
            return;
        }
        let q = self.q as usize;
        // chunk tables: at most 4 lanes of 4 bits per chunk keeps them small
        let per = (12 / self.w).max(1);
        let mut chunk_shift = Vec::new();
        let mut chunk_mask = Vec::new();
        let mut chunk_index = Vec::new();
        let mut lane = 0;
        while lane < self.k {
            let n = per.min(self.k - lane);
            let shift = lane * self.w;
            let mask = (1u64 << (n * self.w)) - 1;
            let mut tab = vec![0u32; 1 << (n * self.w)];
            for (word, slot) in tab.iter_mut().enumerate() {
                let mut idx = 0u64;
                let mut mult = self.p.pow(lane);
                for l in 0..n {
                    let d = ((word as u64) >> (l * self.w)) & ((1 << self.w) - 1);
                    idx += d.min(self.p - 1) * mult;
                    mult *= self.p;
                }
                *slot = idx as u32;
            }
            chunk_shift.push(shift);
            chunk_mask.push(mask);
            chunk_index.push(tab);
            lane += n;
        }
        // find a primitive element by brute force with slow multiplication
        let mut log = vec![u32::MAX; q];
        let mut exp = vec![0; 2 * (q - 1)];
        let mut tables = Tables { chunk_shift, chunk_mask, chunk_index, log: Vec::new(), exp: Vec::new() };
        'gen: for gi in 1..q as u64 {
            let g = self.from_index(gi);
            for v in log.iter_mut() {
                *v = u32::MAX;
            }
            let mut cur = self.one();
            for e in 0..q - 1 {
                let ci = index_with(&tables, cur) as usize;
                if log[ci] != u32::MAX {
                    continue 'gen;
                }
                log[ci] = e as u32;
                exp[e] = cur;
                exp[e + q - 1] = cur;
                cur = self.mul_slow(cur, g);
            }
            tables.log = log;
            tables.exp = exp;
            self.tables = Some(tables);
            return;
        }
        // q == 2 .. q == p small cases always find a generator; unreachable otherwise
        unreachable!("no primitive element");
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Absolute degree over F_p.
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of elements.
    pub fn size(&self) -> u64 {
        self.q
    }

    /// Degree over the immediate base field (equal to `k` unless this is a tower).
    pub fn degree_over_base(&self) -> u32 {
        self.m
    }

    pub fn base(&self) -> Option<&Arc<Field>> {
        self.base.as_ref()
    }

    /// Modulus over the immediate base field, low to high, leading 1 included.
    pub fn modulus(&self) -> &[Fe] {
        &self.modulus
    }

    /// Text descriptor `p^k/c0,c1,...` (base-field enumeration indices for towers).
    pub fn descriptor(&self) -> String {
        let (b, bq) = match &self.base {
            Some(b) => (Some(b), b.q),
            None => (None, self.p),
        };
        let coeffs: Vec<String> = self
            .modulus
            .iter()
            .map(|&c| match b {
                Some(b) => b.index(c).to_string(),
                None => c.to_string(),
            })
            .collect();
        format!("{}^{}/{}", bq, self.m, coeffs.join(","))
    }

    pub fn zero(&self) -> Fe {
        0
    }

    pub fn one(&self) -> Fe {
        1
    }

    /// The class of x, i.e. the adjoined root of the modulus.
    pub fn x(&self) -> Fe {
        if self.m == 1 {
            // k = 1: x is a root of the modulus x - 0
            return 0;
        }
        1u64 << self.base_bits
    }

    pub fn from_i64(&self, n: i64) -> Fe {
        n.rem_euclid(self.p as i64) as u64
    }

    pub fn is_zero(&self, a: Fe) -> bool {
        a == 0
    }

    /// Enumeration index: coefficient digits base p, lowest degree least significant.
    pub fn index(&self, a: Fe) -> u64 {
        if self.k == 1 {
            return a;
        }
        if let Some(t) = &self.tables {
            return index_with(t, a);
        }
        let mut idx = 0;
        let mut mult = 1;
        let lm = (1u64 << self.w) - 1;
        for l in 0..self.k {
            idx += ((a >> (l * self.w)) & lm) * mult;
            mult *= self.p;
        }
        idx
    }

    pub fn from_index(&self, mut n: u64) -> Fe {
        let mut r = 0;
        for l in 0..self.k {
            r |= (n % self.p) << (l * self.w);
            n /= self.p;
        }
        r
    }

    /// All elements in enumeration order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.q).map(move |i| self.from_index(i))
    }

    /// F_p coefficients, lowest first (tower lanes flattened).
    pub fn coeffs(&self, a: Fe) -> Vec<u64> {
        let lm = (1u64 << self.w) - 1;
        (0..self.k).map(|l| (a >> (l * self.w)) & lm).collect()
    }

    pub fn from_coeffs(&self, c: &[u64]) -> Fe {
        let mut r = 0;
        for (l, &d) in c.iter().enumerate().take(self.k as usize) {
            r |= (d % self.p) << (l as u32 * self.w);
        }
        r
    }

    /// Coefficients over the immediate base field, lowest first.
    pub fn base_coeffs(&self, a: Fe) -> Vec<Fe> {
        (0..self.m).map(|i| (a >> (i * self.base_bits)) & self.base_mask).collect()
    }

    pub fn from_base_coeffs(&self, c: &[Fe]) -> Fe {
        let mut r = 0;
        for (i, &d) in c.iter().enumerate().take(self.m as usize) {
            r |= d << (i as u32 * self.base_bits);
        }
        r
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.p == 2 {
            return a ^ b;
        }
        let s = a + b;
        let t = s + self.addc;
        let ge = (t & self.hi) >> (self.w - 1);
        s - ge * self.p
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if self.p == 2 {
            return a;
        }
        let r = self.pl - a;
        let t = r + self.addc;
        let ge = (t & self.hi) >> (self.w - 1);
        (r - ge * self.p) & self.lanes_mask
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.k == 1 {
            return (a * b) % self.p;
        }
        match &self.tables {
            Some(t) => {
                let la = t.log[index_with(t, a) as usize] as usize;
                let lb = t.log[index_with(t, b) as usize] as usize;
                t.exp[la + lb]
            }
            None => self.mul_slow(a, b),
        }
    }

    /// Schoolbook multiplication over the base field.
    fn mul_slow(&self, a: Fe, b: Fe) -> Fe {
        if self.m == 1 {
            return (a * b) % self.p;
        }
        let m = self.m as usize;
        let mut prod = [0u64; 64];
        let ac = self.base_coeffs(a);
        let bc = self.base_coeffs(b);
        let base = self.base.as_ref().expect("extension has a base");
        for i in 0..m {
            if ac[i] == 0 {
                continue;
            }
            for j in 0..m {
                if bc[j] == 0 {
                    continue;
                }
                prod[i + j] = base.add(prod[i + j], base.mul(ac[i], bc[j]));
            }
        }
        for d in (m..2 * m - 1).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for j in 0..m {
                let mj = self.modulus[j];
                if mj != 0 {
                    prod[d - m + j] = base.sub(prod[d - m + j], base.mul(c, mj));
                }
            }
        }
        self.from_base_coeffs(&prod[..m])
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut r = self.one();
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        if let Some(t) = &self.tables {
            let la = t.log[index_with(t, a) as usize] as u64;
            return Ok(t.exp[((self.q - 1 - la) % (self.q - 1)) as usize]);
        }
        Ok(self.pow(a, self.q - 2))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// One byte per F_p coefficient, lowest first. Requires p < 256.
    pub fn write_bytes(&self, a: Fe, out: &mut Vec<u8>) {
        if self.k == 1 {
            out.push(a as u8);
            return;
        }
        let lm = (1u64 << self.w) - 1;
        for l in 0..self.k {
            out.push(((a >> (l * self.w)) & lm) as u8);
        }
    }

    pub fn read_bytes(&self, b: &[u8]) -> Fe {
        let mut r = 0;
        for (l, &d) in b.iter().enumerate().take(self.k as usize) {
            r |= (d as u64) << (l as u32 * self.w);
        }
        r
    }

    pub fn is_square(&self, a: Fe) -> bool {
        if a == 0 || self.p == 2 {
            return true;
        }
        self.pow(a, (self.q - 1) / 2) == self.one()
    }

    /// Smallest square root in enumeration order, if any.
    pub fn sqrt(&self, a: Fe) -> Option<Fe> {
        self.elements().find(|&s| self.mul(s, s) == a)
    }

    /// `(r, s)` with `r^2 + s^2 = t`, `r` smallest in enumeration order and `s`
    /// the smallest root for that `r`.
    pub fn sum_of_two_squares(&self, t: Fe) -> (Fe, Fe) {
        let mut root = std::collections::HashMap::new();
        if self.q <= 1 << 20 {
            for s in self.elements() {
                root.entry(self.mul(s, s)).or_insert(s);
            }
            for r in self.elements() {
                let rest = self.sub(t, self.mul(r, r));
                if let Some(&s) = root.get(&rest) {
                    return (r, s);
                }
            }
        } else {
            for r in self.elements() {
                let rest = self.sub(t, self.mul(r, r));
                if self.is_square(rest) {
                    if let Some(s) = self.sqrt(rest) {
                        return (r, s);
                    }
                }
            }
        }
        unreachable!("every finite field element is a sum of two squares")
    }

    /// Render as a polynomial in x with F_p coefficients (base indices for towers).
    pub fn show(&self, a: Fe) -> String {
        if self.m == 1 {
            return self.index(a).to_string();
        }
        let base = self.base.as_ref().unwrap();
        let mut parts = Vec::new();
        for (i, c) in self.base_coeffs(a).into_iter().enumerate() {
            if c == 0 {
                continue;
            }
            let cs = base.show(c);
            let cs = if cs.contains('x') { format!("({cs})") } else { cs };
            parts.push(match i {
                0 => cs,
                1 if c == 1 => "x".into(),
                1 => format!("{cs}x"),
                _ if c == 1 => format!("x^{i}"),
                _ => format!("{cs}x^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

fn index_with(t: &Tables, a: Fe) -> u64 {
    let mut idx = 0u64;
    for c in 0..t.chunk_index.len() {
        let word = (a >> t.chunk_shift[c]) & t.chunk_mask[c];
        idx += t.chunk_index[c][word as usize] as u64;
    }
    idx
}

/// Remainder of `a` modulo monic `b` over `f` (coefficient vectors low to high).
pub fn poly_rem(f: &Field, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if c != 0 {
            for (j, &bj) in b.iter().enumerate() {
                r[shift + j] = f.sub(r[shift + j], f.mul(c, bj));
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

fn monic_polys(f: &Field, deg: u32) -> impl Iterator<Item = Vec<Fe>> + '_ {
    let count = f.size().pow(deg);
    // c_0 is the most significant digit so iteration is lexicographic low-to-high
    (0..count).map(move |mut n| {
        let mut c = vec![0; deg as usize + 1];
        for i in (0..deg as usize).rev() {
            c[i] = f.from_index(n % f.size());
            n /= f.size();
        }
        c[deg as usize] = f.one();
        c
    })
}

/// Exhaustive trial division by all monic polynomials of degree <= deg/2.
pub fn is_irreducible(f: &Field, poly: &[Fe]) -> bool {
    let deg = poly.len() as u32 - 1;
    if deg == 0 {
        return false;
    }
    if deg == 1 {
        return true;
    }
    for d in 1..=deg / 2 {
        for g in monic_polys(f, d) {
            if poly_rem(f, poly, &g).is_empty() {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(f: &Field, m: u32) -> Option<Vec<Fe>> {
    nth_irreducible(f, m, 0)
}

/// The `n`-th monic irreducible of degree `m` over `f` in enumeration order.
pub fn nth_irreducible(f: &Field, m: u32, n: usize) -> Option<Vec<Fe>> {
    monic_polys(f, m).filter(|c| is_irreducible(f, c)).nth(n)
}

/// `F_q[x]_{<= h}` inside an extension field: polynomials in its generator `x`
/// with coefficients in the immediate base field.
#[derive(Clone, Debug)]
pub struct PolySubset {
    pub ambient: Arc<Field>,
    pub h: u32,
}

impl PolySubset {
    pub fn new(ambient: Arc<Field>, h: u32) -> PolySubset {
        assert!(h < ambient.degree_over_base(), "degree bound must be below the extension degree");
        PolySubset { ambient, h }
    }

    pub fn len(&self) -> u64 {
        self.base_size().pow(self.h + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn base_size(&self) -> u64 {
        self.ambient.base().map(|b| b.size()).unwrap_or(self.ambient.p())
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        let bq = self.base_size();
        let base = self.ambient.base().cloned();
        (0..self.len()).map(move |mut n| {
            let mut c = Vec::with_capacity(self.h as usize + 1);
            for _ in 0..=self.h {
                let d = n % bq;
                n /= bq;
                c.push(match &base {
                    Some(b) => b.from_index(d),
                    None => d,
                });
            }
            self.ambient.from_base_coeffs(&c)
        })
    }

    pub fn contains(&self, a: Fe) -> bool {
        self.ambient.base_coeffs(a).iter().skip(self.h as usize + 1).all(|&c| c == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // naive oracle: polynomials over F_p as plain coefficient vectors
    fn naive_mul(p: u64, modulus: &[u64], a: &[u64], b: &[u64]) -> Vec<u64> {
        let k = modulus.len() - 1;
        let mut prod = vec![0u64; 2 * k];
        for i in 0..k {
            for j in 0..k {
                prod[i + j] = (prod[i + j] + a[i] * b[j]) % p;
            }
        }
        for d in (k..2 * k - 1).rev() {
            let c = prod[d];
            for j in 0..=k {
                prod[d - k + j] = (prod[d - k + j] + p * p - c * modulus[j] % p) % p;
            }
        }
        prod.truncate(k);
        prod
    }

    #[test]
    fn prime_basics() {
        let f = Field::new(5, 1).unwrap();
        assert_eq!(f.size(), 5);
        assert_eq!(f.add(3, 4), 2);
        assert_eq!(f.inv(2).unwrap(), 3);
        assert_eq!(f.neg(0), 0);
        assert_eq!(f.neg(1), 4);
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.inv(0), Err(FieldError::ZeroInverse));
        assert_eq!(Field::new(6, 1).unwrap_err(), FieldError::NotPrime(6));
        assert_eq!(Field::new(2, 1).unwrap().size(), 2);
    }

    #[test]
    fn f25_modulus_is_smallest() {
        let f = Field::new(5, 2).unwrap();
        // exhaustive scan: a quadratic is irreducible iff it has no root
        let mut first = None;
        'scan: for c0 in 0..5u64 {
            for c1 in 0..5u64 {
                if (0..5u64).all(|x| (x * x + c1 * x + c0) % 5 != 0) {
                    first = Some(vec![c0, c1, 1]);
                    break 'scan;
                }
            }
        }
        assert_eq!(f.modulus().to_vec(), first.unwrap());
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.descriptor(), "5^2/1,1,1");
    }

    #[test]
    fn mul_matches_long_division() {
        for (p, k) in [(2, 3), (3, 2), (5, 2), (2, 6), (3, 4), (7, 2), (5, 3)] {
            let f = Field::new(p, k).unwrap();
            let modulus: Vec<u64> = f.modulus().to_vec();
            for a in f.elements() {
                for b in f.elements().step_by(3) {
                    let want = naive_mul(p, &modulus, &f.coeffs(a), &f.coeffs(b));
                    assert_eq!(f.coeffs(f.mul(a, b)), want);
                }
            }
        }
    }

    #[test]
    fn x_squared_in_f25() {
        let f = Field::new(5, 2).unwrap();
        let x = f.x();
        // x^2 = -x - 1 = 4x + 4
        assert_eq!(f.coeffs(f.mul(x, x)), vec![4, 4]);
    }

    #[test]
    fn field_axioms_exhaustive() {
        for (p, k) in [(2, 1), (3, 1), (5, 1), (7, 1), (2, 2), (2, 3), (3, 2), (5, 2), (3, 3), (5, 3), (11, 1), (2, 6)] {
            let f = Field::new(p, k).unwrap();
            assert!(f.size() <= 125 || f.size() == 64);
            let els: Vec<Fe> = f.elements().collect();
            for &a in &els {
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for &b in &els {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                }
            }
            let sample: Vec<Fe> = els.iter().copied().step_by(1 + els.len() / 20).collect();
            for &a in &sample {
                for &b in &sample {
                    for &c in &sample {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn moduli_are_irreducible_by_trial_factorisation() {
        for (p, k) in [(2, 2), (2, 5), (3, 3), (5, 2), (5, 6), (7, 3)] {
            let f = Field::new(p, k).unwrap();
            let fp = Field::prime(p).unwrap();
            let poly = f.modulus().to_vec();
            // independent check: no root and no monic factor of degree <= k/2
            for d in 1..=k / 2 {
                let mut g = vec![0u64; d as usize + 1];
                g[d as usize] = 1;
                let total = p.pow(d);
                for n in 0..total {
                    let mut m = n;
                    for c in g.iter_mut().take(d as usize) {
                        *c = m % p;
                        m /= p;
                    }
                    assert!(!poly_rem(&fp, &poly, &g).is_empty(), "{p}^{k} modulus divisible by {g:?}");
                }
            }
        }
    }

    #[test]
    fn two_squares_total() {
        for (p, k) in [(2, 1), (3, 1), (5, 1), (7, 1), (11, 1), (3, 2), (2, 3), (5, 2), (7, 2), (11, 2)] {
            let f = Field::new(p, k).unwrap();
            for t in f.elements() {
                let (r, s) = f.sum_of_two_squares(t);
                assert_eq!(f.add(f.mul(r, r), f.mul(s, s)), t);
            }
        }
        let f5 = Field::new(5, 1).unwrap();
        assert_eq!(f5.sum_of_two_squares(0), (0, 0));
        // squares in F5 are {0,1,4}: r=0,1 fail, r=2 leaves 4 = 2^2
        assert_eq!(f5.sum_of_two_squares(3), (2, 2));
        let f7 = Field::new(7, 1).unwrap();
        let (r, s) = f7.sum_of_two_squares(3);
        assert_eq!((r * r + s * s) % 7, 3);
        assert_eq!((r, s), (1, 3));
    }

    #[test]
    fn enumeration_is_bijective() {
        for (p, k) in [(3, 1), (2, 4), (5, 2), (3, 3)] {
            let f = Field::new(p, k).unwrap();
            let els: Vec<Fe> = f.elements().collect();
            let mut seen = std::collections::HashSet::new();
            for (i, &e) in els.iter().enumerate() {
                assert_eq!(f.index(e), i as u64);
                assert!(seen.insert(e));
            }
        }
        let f3 = Field::new(3, 1).unwrap();
        assert_eq!(f3.elements().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn poly_subsets() {
        let f3 = Field::new(3, 1).unwrap();
        let g = Field::extension(&f3, 4).unwrap();
        let s = PolySubset::new(g.clone(), 1);
        assert_eq!(s.elements().count(), 9);
        let f5 = Field::new(5, 1).unwrap();
        let g = Field::extension(&f5, 6).unwrap();
        let all = PolySubset::new(g.clone(), 5);
        assert_eq!(all.len(), 15625);
        let set: std::collections::HashSet<Fe> = all.elements().collect();
        assert_eq!(set.len(), 15625);
        let s2 = PolySubset::new(g.clone(), 2);
        for a in s2.elements() {
            for b in s2.elements().step_by(7) {
                assert!(s2.contains(g.add(a, b)));
            }
        }
    }

    #[test]
    fn tower_over_f25() {
        let f25 = Field::new(5, 2).unwrap();
        let t = Field::extension(&f25, 6).unwrap();
        assert_eq!(t.size(), 5u64.pow(12));
        assert_eq!(t.k(), 12);
        let x = t.x();
        let a = t.add(x, f25.x());
        let b = t.inv(a).unwrap();
        assert_eq!(t.mul(a, b), 1);
        // base field embeds as the constant lane
        let y = f25.x();
        assert_eq!(t.mul(y, y), f25.mul(y, y));
        // Frobenius over F_25 fixes the base and is additive
        let q = 25u64;
        assert_eq!(t.pow(y, q), y);
        let s = t.add(x, 3);
        assert_eq!(t.pow(s, q), t.add(t.pow(x, q), 3));
    }
}
