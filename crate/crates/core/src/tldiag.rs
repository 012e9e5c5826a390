//! Temperley–Lieb diagrams with circle value −2: crossingless matchings and
//! their finite linear combinations over ℚ or a prime field.

use std::fmt;

use rustc_hash::FxHashMap;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactnum::{check_prime, pval, reduce_mod_p, FpScalar, NumError, PValuation, Rational};

/// Largest number of boundary points a matching may have.
pub const MAX_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TlError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("cannot compose: left factor has source {left_source}, right factor has target {right_target}")]
    BoundaryMismatch { left_source: u32, right_target: u32 },
    #[error("coefficient rings differ: {0} vs {1}")]
    RingMismatch(String, String),
    #[error("through-degree of the zero morphism is undefined")]
    ZeroMorphism,
    #[error("{m}+{n} boundary points cannot be perfectly matched")]
    Parity { m: u32, n: u32 },
    #[error("too many boundary points ({0})")]
    TooManyPoints(usize),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("partial trace of {k} strands on a {m}-strand endomorphism")]
    TraceTooWide { k: u32, m: u32 },
    #[error("bad morphism JSON: {0}")]
    Json(String),
}

/// A crossingless matching from `m` bottom points to `n` top points.
///
/// Points are numbered bottom `0..m` then top `m..m+n`, both left to right.
/// The key is the Dyck word of the matching read in circular order
/// (bottom left to right, then top right to left), with a set bit for each
/// point whose partner comes later.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    m: u32,
    n: u32,
    key: u64,
}

type Partners = [u8; MAX_POINTS];

#[inline]
fn circ(m: usize, n: usize, i: usize) -> usize {
    if i < m {
        i
    } else {
        2 * m + n - 1 - i
    }
}

fn encode(m: usize, n: usize, partner: &[u8]) -> u64 {
    let mut key = 0u64;
    for i in 0..m + n {
        let c = circ(m, n, i);
        if c < circ(m, n, partner[i] as usize) {
            key |= 1 << c;
        }
    }
    key
}

fn decode(m: usize, n: usize, key: u64, out: &mut [u8]) {
    let mut stack = [0u8; MAX_POINTS];
    let mut top = 0;
    for c in 0..m + n {
        if key >> c & 1 == 1 {
            stack[top] = c as u8;
            top += 1;
        } else {
            top -= 1;
            let a = circ(m, n, stack[top] as usize);
            let b = circ(m, n, c);
            out[a] = b as u8;
            out[b] = a as u8;
        }
    }
}

fn check_points(m: u32, n: u32) -> Result<(), TlError> {
    if (m + n) as usize > MAX_POINTS {
        return Err(TlError::TooManyPoints((m + n) as usize));
    }
    if (m + n) % 2 == 1 {
        return Err(TlError::Parity { m, n });
    }
    Ok(())
}

impl Matching {
    pub fn source(&self) -> u32 {
        self.m
    }

    pub fn target(&self) -> u32 {
        self.n
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub(crate) fn from_key(m: u32, n: u32, key: u64) -> Self {
        Matching { m, n, key }
    }

    pub fn identity(n: u32) -> Self {
        let mut p = [0u8; MAX_POINTS];
        for i in 0..n as usize {
            p[i] = (n as usize + i) as u8;
            p[n as usize + i] = i as u8;
        }
        Matching::from_partner_slice(n, n, &p).expect("identity is planar")
    }

    /// The single cap `2 → 0`.
    pub fn cap() -> Self {
        Matching::from_pairs(2, 0, &[(1, 2)]).unwrap()
    }

    /// The single cup `0 → 2`.
    pub fn cup() -> Self {
        Matching::from_pairs(0, 2, &[(1, 2)]).unwrap()
    }

    /// Builds from a partner table indexed by point (bottom first).
    pub fn from_partner_slice(m: u32, n: u32, partner: &[u8]) -> Result<Self, TlError> {
        check_points(m, n)?;
        let total = (m + n) as usize;
        for i in 0..total {
            let j = partner[i] as usize;
            if j >= total || j == i || partner[j] as usize != i {
                return Err(TlError::InvalidMatching(format!("point {i} is not properly paired")));
            }
        }
        let key = encode(m as usize, n as usize, partner);
        let mut back = [0u8; MAX_POINTS];
        decode(m as usize, n as usize, key, &mut back);
        if back[..total] != partner[..total] {
            return Err(TlError::InvalidMatching("pairs cross".into()));
        }
        Ok(Matching { m, n, key })
    }

    /// Builds from 1-based pairs: bottom `1..=m`, top `m+1..=m+n`.
    pub fn from_pairs(m: u32, n: u32, pairs: &[(usize, usize)]) -> Result<Self, TlError> {
        check_points(m, n)?;
        let total = (m + n) as usize;
        let mut p = [u8::MAX; MAX_POINTS];
        for &(a, b) in pairs {
            if a == 0 || b == 0 || a > total || b > total || a == b {
                return Err(TlError::InvalidMatching(format!("pair ({a},{b}) out of range")));
            }
            if p[a - 1] != u8::MAX || p[b - 1] != u8::MAX {
                return Err(TlError::InvalidMatching(format!("point reused in ({a},{b})")));
            }
            p[a - 1] = (b - 1) as u8;
            p[b - 1] = (a - 1) as u8;
        }
        if p[..total].contains(&u8::MAX) {
            return Err(TlError::InvalidMatching("unpaired point".into()));
        }
        Matching::from_partner_slice(m, n, &p)
    }

    pub(crate) fn partners(&self) -> Partners {
        let mut p = [0u8; MAX_POINTS];
        decode(self.m as usize, self.n as usize, self.key, &mut p);
        p
    }

    /// Partner of each point, bottom points first.
    pub fn partner_table(&self) -> Vec<usize> {
        let p = self.partners();
        p[..(self.m + self.n) as usize].iter().map(|&x| x as usize).collect()
    }

    /// Sorted 1-based pairs `(min, max)`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let p = self.partners();
        (0..(self.m + self.n) as usize)
            .filter(|&i| i < p[i] as usize)
            .map(|i| (i + 1, p[i] as usize + 1))
            .collect()
    }

    pub fn through_degree(&self) -> u32 {
        let p = self.partners();
        (0..self.m as usize).filter(|&i| p[i] as u32 >= self.m).count() as u32
    }

    pub fn reflect(&self) -> Matching {
        let (m, n) = (self.m as usize, self.n as usize);
        let p = self.partners();
        let phi = |i: usize| if i < m { n + i } else { i - m };
        let mut q = [0u8; MAX_POINTS];
        for i in 0..m + n {
            q[phi(i)] = phi(p[i] as usize) as u8;
        }
        Matching { m: self.n, n: self.m, key: encode(n, m, &q) }
    }

    pub fn tensor(&self, other: &Matching) -> Result<Matching, TlError> {
        let (m1, n1, m2, n2) = (self.m as usize, self.n as usize, other.m as usize, other.n as usize);
        let (m, n) = (m1 + m2, n1 + n2);
        check_points(m as u32, n as u32)?;
        let (pa, pb) = (self.partners(), other.partners());
        let fa = |i: usize| if i < m1 { i } else { m + i - m1 };
        let fb = |j: usize| if j < m2 { m1 + j } else { m + n1 + j - m2 };
        let mut q = [0u8; MAX_POINTS];
        for i in 0..m1 + n1 {
            q[fa(i)] = fa(pa[i] as usize) as u8;
        }
        for j in 0..m2 + n2 {
            q[fb(j)] = fb(pb[j] as usize) as u8;
        }
        Ok(Matching { m: m as u32, n: n as u32, key: encode(m, n, &q) })
    }

    /// `self ∘ g` with the number of closed loops formed.
    pub fn compose(&self, g: &Matching) -> Result<(Matching, u32), TlError> {
        if self.m != g.n {
            return Err(TlError::BoundaryMismatch { left_source: self.m, right_target: g.n });
        }
        let (key, loops) = compose_partners(&self.partners(), &g.partners(), g.m as usize, g.n as usize, self.n as usize);
        Ok((Matching { m: g.m, n: self.n, key }, loops))
    }
}

impl fmt::Debug for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matching({}→{}, {:?})", self.m, self.n, self.pairs())
    }
}

/// Stacks `g: m → n` below `f: n → k`; returns the key of the result and the loop count.
pub(crate) fn compose_partners(pf: &[u8], pg: &[u8], m: usize, n: usize, k: usize) -> (u64, u32) {
    let mut res = [u8::MAX; MAX_POINTS];
    let mut seen: u64 = 0;
    for e in 0..m + k {
        if res[e] != u8::MAX {
            continue;
        }
        let end;
        if e < m {
            let mut q = pg[e] as usize;
            loop {
                if q < m {
                    end = q;
                    break;
                }
                let t = q - m;
                seen |= 1 << t;
                let r = pf[t] as usize;
                if r >= n {
                    end = m + r - n;
                    break;
                }
                seen |= 1 << r;
                q = pg[m + r] as usize;
            }
        } else {
            let mut r = pf[n + e - m] as usize;
            loop {
                if r >= n {
                    end = m + r - n;
                    break;
                }
                seen |= 1 << r;
                let q = pg[m + r] as usize;
                if q < m {
                    end = q;
                    break;
                }
                let t = q - m;
                seen |= 1 << t;
                r = pf[t] as usize;
            }
        }
        res[e] = end as u8;
        res[end] = e as u8;
    }
    let mut loops = 0;
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    while seen != all {
        let start = (!seen & all).trailing_zeros() as usize;
        let mut t = start;
        loop {
            seen |= 1 << t;
            let r = pf[t] as usize;
            seen |= 1 << r;
            t = pg[m + r] as usize - m;
            if t == start {
                break;
            }
        }
        loops += 1;
    }
    (encode(m, k, &res), loops)
}

/// Every crossingless matching `m → n`, in key order.
pub fn enumerate_matchings(m: u32, n: u32) -> Vec<Matching> {
    if (m + n) % 2 == 1 || (m + n) as usize > MAX_POINTS {
        return Vec::new();
    }
    let total = m + n;
    let mut out = Vec::new();
    fn rec(pos: u32, open: u32, total: u32, key: u64, out: &mut Vec<u64>) {
        if pos == total {
            out.push(key);
            return;
        }
        let remaining = total - pos;
        if open < remaining {
            rec(pos + 1, open + 1, total, key | 1 << pos, out);
        }
        if open > 0 {
            rec(pos + 1, open - 1, total, key, out);
        }
    }
    let mut keys = Vec::new();
    rec(0, 0, total, 0, &mut keys);
    keys.sort_unstable();
    for key in keys {
        out.push(Matching { m, n, key });
    }
    out
}

/// Coefficient ring of a morphism.
pub trait Ring: Clone + fmt::Debug + PartialEq + Send + Sync {
    type Elem: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn from_i64(&self, n: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn tag(&self) -> String;
    fn format(&self, a: &Self::Elem) -> String;
    fn parse(&self, s: &str) -> Result<Self::Elem, TlError>;

    fn one(&self) -> Self::Elem {
        self.from_i64(1)
    }

    fn add_assign(&self, a: &mut Self::Elem, b: &Self::Elem) {
        *a = self.add(a, b);
    }

    /// `(−2)^k`, the value of `k` closed loops.
    fn loop_factor(&self, k: u32) -> Self::Elem {
        self.from_i64((-2i64).pow(k))
    }
}

/// The rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Rationals;

impl Ring for Rationals {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn from_i64(&self, n: i64) -> Rational {
        Rational::from_int(n)
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn tag(&self) -> String {
        "Q".into()
    }
    fn format(&self, a: &Rational) -> String {
        a.to_string()
    }
    fn parse(&self, s: &str) -> Result<Rational, TlError> {
        Ok(s.parse()?)
    }
    fn add_assign(&self, a: &mut Rational, b: &Rational) {
        *a += b;
    }
}

/// The prime field with `p` elements; elements are residues in `0..p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, TlError> {
        check_prime(p)?;
        if p > u32::MAX as u64 {
            return Err(TlError::Num(NumError::NotPrime(p)));
        }
        Ok(PrimeField { p })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn scalar(&self, a: u32) -> FpScalar {
        FpScalar::new_unchecked(a as i64, self.p)
    }

    pub fn elem(&self, s: FpScalar) -> u32 {
        assert_eq!(s.prime(), self.p, "scalar from a different field");
        s.residue() as u32
    }
}

impl Ring for PrimeField {
    type Elem = u32;

    fn zero(&self) -> u32 {
        0
    }
    fn from_i64(&self, n: i64) -> u32 {
        n.rem_euclid(self.p as i64) as u32
    }
    fn add(&self, a: &u32, b: &u32) -> u32 {
        ((*a as u64 + *b as u64) % self.p) as u32
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        ((*a as u64 * *b as u64) % self.p) as u32
    }
    fn neg(&self, a: &u32) -> u32 {
        ((self.p - *a as u64) % self.p) as u32
    }
    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }
    fn tag(&self) -> String {
        format!("F{}", self.p)
    }
    fn format(&self, a: &u32) -> String {
        a.to_string()
    }
    fn parse(&self, s: &str) -> Result<u32, TlError> {
        let n: i64 = s.trim().parse().map_err(|_| TlError::Json(format!("bad residue {s:?}")))?;
        Ok(self.from_i64(n))
    }
}

/// A finite linear combination of matchings `source → target`.
#[derive(Clone, Debug)]
pub struct Morphism<R: Ring> {
    source: u32,
    target: u32,
    ring: R,
    terms: FxHashMap<u64, R::Elem>,
}

pub type QMorphism = Morphism<Rationals>;
pub type FpMorphism = Morphism<PrimeField>;

impl<R: Ring> PartialEq for Morphism<R> {
    fn eq(&self, o: &Self) -> bool {
        self.source == o.source && self.target == o.target && self.ring == o.ring && self.terms == o.terms
    }
}

impl<R: Ring> Morphism<R> {
    pub fn zero(ring: R, source: u32, target: u32) -> Self {
        Morphism { source, target, ring, terms: FxHashMap::default() }
    }

    pub fn from_matching(ring: R, d: Matching) -> Self {
        let mut f = Morphism::zero(ring, d.m, d.n);
        let one = f.ring.one();
        f.terms.insert(d.key, one);
        f
    }

    pub fn identity(ring: R, n: u32) -> Self {
        Morphism::from_matching(ring, Matching::identity(n))
    }

    pub fn source(&self) -> u32 {
        self.source
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `d` (zero when absent).
    pub fn coeff(&self, d: &Matching) -> R::Elem {
        if d.m != self.source || d.n != self.target {
            return self.ring.zero();
        }
        self.terms.get(&d.key).cloned().unwrap_or_else(|| self.ring.zero())
    }

    /// Terms in key order.
    pub fn terms(&self) -> Vec<(Matching, &R::Elem)> {
        let mut v: Vec<(Matching, &R::Elem)> = self
            .terms
            .iter()
            .map(|(&key, c)| (Matching { m: self.source, n: self.target, key }, c))
            .collect();
        v.sort_by_key(|(d, _)| d.key);
        v
    }

    pub fn add_term(&mut self, d: Matching, c: &R::Elem) {
        assert!(d.m == self.source && d.n == self.target, "matching shape differs from morphism shape");
        self.add_key(d.key, c);
    }

    pub(crate) fn add_key(&mut self, key: u64, c: &R::Elem) {
        if self.ring.is_zero(c) {
            return;
        }
        match self.terms.entry(key) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                self.ring.add_assign(e.get_mut(), c);
                if self.ring.is_zero(e.get()) {
                    e.remove();
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
        }
    }

    fn check_same(&self, o: &Self) -> Result<(), TlError> {
        if self.ring != o.ring {
            return Err(TlError::RingMismatch(self.ring.tag(), o.ring.tag()));
        }
        if self.source != o.source || self.target != o.target {
            return Err(TlError::BoundaryMismatch { left_source: self.source, right_target: o.source });
        }
        Ok(())
    }

    /// `self += c·o`.
    pub fn add_scaled(&mut self, o: &Self, c: &R::Elem) -> Result<(), TlError> {
        self.check_same(o)?;
        if self.ring.is_zero(c) {
            return Ok(());
        }
        for (&k, v) in &o.terms {
            let t = self.ring.mul(v, c);
            self.add_key(k, &t);
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self, TlError> {
        let mut out = self.clone();
        out.add_scaled(o, &self.ring.one())?;
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self, TlError> {
        let mut out = self.clone();
        out.add_scaled(o, &self.ring.from_i64(-1))?;
        Ok(out)
    }

    pub fn scale(&self, c: &R::Elem) -> Self {
        let mut out = Morphism::zero(self.ring.clone(), self.source, self.target);
        if self.ring.is_zero(c) {
            return out;
        }
        for (&k, v) in &self.terms {
            out.add_key(k, &self.ring.mul(v, c));
        }
        out
    }

    pub fn through_degree(&self) -> Result<u32, TlError> {
        self.terms
            .keys()
            .map(|&k| Matching::from_key(self.source, self.target, k).through_degree())
            .max()
            .ok_or(TlError::ZeroMorphism)
    }

    fn decoded(&self) -> Vec<(Partners, &R::Elem)> {
        self.terms
            .iter()
            .map(|(&k, c)| {
                let mut p = [0u8; MAX_POINTS];
                decode(self.source as usize, self.target as usize, k, &mut p);
                (p, c)
            })
            .collect()
    }

    /// `self ∘ g`: `g` below, `self` on top.
    pub fn compose(&self, g: &Self) -> Result<Self, TlError> {
        if self.ring != g.ring {
            return Err(TlError::RingMismatch(self.ring.tag(), g.ring.tag()));
        }
        if self.source != g.target {
            return Err(TlError::BoundaryMismatch { left_source: self.source, right_target: g.target });
        }
        let (m, n, k) = (g.source as usize, g.target as usize, self.target as usize);
        let fs = self.decoded();
        let gs = g.decoded();
        let mut out = Morphism::zero(self.ring.clone(), g.source, self.target);
        let mut loop_cache: Vec<R::Elem> = Vec::new();
        for (pg, cg) in &gs {
            for (pf, cf) in &fs {
                let (key, loops) = compose_partners(pf, pg, m, n, k);
                while loop_cache.len() <= loops as usize {
                    loop_cache.push(self.ring.loop_factor(loop_cache.len() as u32));
                }
                let c = self.ring.mul(&self.ring.mul(cf, cg), &loop_cache[loops as usize]);
                out.add_key(key, &c);
            }
        }
        Ok(out)
    }

    /// `(id_offset ⊗ y ⊗ id) ∘ self`, acting on the top strands `offset..offset+k`.
    ///
    /// With `kills_cups` set, `y` is assumed to vanish when precomposed with any
    /// cup, so terms of `self` with a cup inside the window are skipped.
    pub fn apply_on_top(&self, offset: u32, y: &Self, kills_cups: bool) -> Result<Self, TlError> {
        if self.ring != y.ring {
            return Err(TlError::RingMismatch(self.ring.tag(), y.ring.tag()));
        }
        let k = y.source;
        if y.target != k || offset + k > self.target {
            return Err(TlError::BoundaryMismatch { left_source: offset + k, right_target: self.target });
        }
        let (m, n) = (self.source as usize, self.target as usize);
        let (off, k) = (offset as usize, k as usize);
        // pad y to id ⊗ y ⊗ id on n strands
        let padded: Vec<(Partners, &R::Elem)> = y
            .decoded()
            .into_iter()
            .map(|(py, c)| {
                let mut q = [0u8; MAX_POINTS];
                for i in 0..n {
                    if i < off || i >= off + k {
                        q[i] = (n + i) as u8;
                        q[n + i] = i as u8;
                    }
                }
                let map = |j: usize| if j < k { off + j } else { n + off + j - k };
                for j in 0..2 * k {
                    q[map(j)] = map(py[j] as usize) as u8;
                }
                (q, c)
            })
            .collect();
        let mut out = Morphism::zero(self.ring.clone(), self.source, self.target);
        let mut loop_cache: Vec<R::Elem> = Vec::new();
        for (key, cx) in &self.terms {
            let mut px = [0u8; MAX_POINTS];
            decode(m, n, *key, &mut px);
            if kills_cups {
                let cup_inside = (off..off + k).any(|t| {
                    let q = px[m + t] as usize;
                    q >= m + off && q < m + off + k
                });
                if cup_inside {
                    continue;
                }
            }
            for (py, cy) in &padded {
                let (key, loops) = compose_partners(py, &px, m, n, n);
                while loop_cache.len() <= loops as usize {
                    loop_cache.push(self.ring.loop_factor(loop_cache.len() as u32));
                }
                let c = self.ring.mul(&self.ring.mul(cx, cy), &loop_cache[loops as usize]);
                out.add_key(key, &c);
            }
        }
        Ok(out)
    }

    /// `d ∘ self` for a single diagram `d`.
    pub fn then_diagram(&self, d: &Matching) -> Result<Self, TlError> {
        if d.m != self.target {
            return Err(TlError::BoundaryMismatch { left_source: d.m, right_target: self.target });
        }
        let pd = d.partners();
        let (m, n, k) = (self.source as usize, self.target as usize, d.n as usize);
        let mut out = Morphism::zero(self.ring.clone(), self.source, d.n);
        for (key, c) in &self.terms {
            let mut px = [0u8; MAX_POINTS];
            decode(m, n, *key, &mut px);
            let (nk, loops) = compose_partners(&pd, &px, m, n, k);
            let c = if loops == 0 { c.clone() } else { self.ring.mul(c, &self.ring.loop_factor(loops)) };
            out.add_key(nk, &c);
        }
        Ok(out)
    }

    /// `self ∘ d` for a single diagram `d`.
    pub fn after_diagram(&self, d: &Matching) -> Result<Self, TlError> {
        Ok(self.reflect().then_diagram(&d.reflect())?.reflect())
    }

    pub fn tensor(&self, g: &Self) -> Result<Self, TlError> {
        if self.ring != g.ring {
            return Err(TlError::RingMismatch(self.ring.tag(), g.ring.tag()));
        }
        let mut out = Morphism::zero(self.ring.clone(), self.source + g.source, self.target + g.target);
        for (ka, ca) in &self.terms {
            let a = Matching::from_key(self.source, self.target, *ka);
            for (kb, cb) in &g.terms {
                let b = Matching::from_key(g.source, g.target, *kb);
                out.add_key(a.tensor(&b)?.key, &self.ring.mul(ca, cb));
            }
        }
        Ok(out)
    }

    pub fn reflect(&self) -> Self {
        let mut out = Morphism::zero(self.ring.clone(), self.target, self.source);
        for (&k, c) in &self.terms {
            out.terms.insert(Matching::from_key(self.source, self.target, k).reflect().key, c.clone());
        }
        out
    }

    /// Closes the `k` leftmost strands of an endomorphism.
    pub fn partial_trace(&self, k: u32) -> Result<Self, TlError> {
        let m = self.source;
        if self.target != m || k > m {
            return Err(TlError::TraceTooWide { k, m });
        }
        // (cap bundle ⊗ id) ∘ (id_k ⊗ F) ∘ (cup bundle ⊗ id), with nested caps joining strand i with 2k-1-i
        let r = m - k;
        let mut cup = [0u8; MAX_POINTS];
        let n_mid = (2 * k + r) as usize;
        let src = r as usize;
        for i in 0..k as usize {
            cup[src + i] = (src + 2 * k as usize - 1 - i) as u8;
            cup[src + 2 * k as usize - 1 - i] = (src + i) as u8;
        }
        for i in 0..r as usize {
            cup[i] = (src + 2 * k as usize + i) as u8;
            cup[src + 2 * k as usize + i] = i as u8;
        }
        let cups = Matching::from_partner_slice(r, n_mid as u32, &cup)?;
        let widened = Morphism::identity(self.ring.clone(), k).tensor(self)?;
        let lower = Morphism::from_matching(self.ring.clone(), cups);
        let mid = widened.compose(&lower)?;
        mid.then_diagram(&cups.reflect())
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms()
            .into_iter()
            .map(|(d, c)| {
                let pairs: Vec<[usize; 2]> = d.pairs().into_iter().map(|(a, b)| [a, b]).collect();
                json!({"pairs": pairs, "coeff": self.ring.format(c)})
            })
            .collect();
        json!({"m": self.source, "n": self.target, "ring": self.ring.tag(), "terms": terms})
    }

    pub fn from_json_in(ring: R, v: &Value) -> Result<Self, TlError> {
        let bad = |s: &str| TlError::Json(s.to_string());
        let m = v["m"].as_u64().ok_or_else(|| bad("missing m"))? as u32;
        let n = v["n"].as_u64().ok_or_else(|| bad("missing n"))? as u32;
        let tag = v["ring"].as_str().ok_or_else(|| bad("missing ring"))?;
        if tag != ring.tag() {
            return Err(TlError::RingMismatch(tag.into(), ring.tag()));
        }
        let mut out = Morphism::zero(ring, m, n);
        for t in v["terms"].as_array().ok_or_else(|| bad("missing terms"))? {
            let pairs: Vec<(usize, usize)> = t["pairs"]
                .as_array()
                .ok_or_else(|| bad("missing pairs"))?
                .iter()
                .map(|p| {
                    let a = p[0].as_u64().ok_or_else(|| bad("bad pair"))? as usize;
                    let b = p[1].as_u64().ok_or_else(|| bad("bad pair"))? as usize;
                    Ok((a, b))
                })
                .collect::<Result<_, TlError>>()?;
            let d = Matching::from_pairs(m, n, &pairs)?;
            let c = out.ring.parse(t["coeff"].as_str().ok_or_else(|| bad("missing coeff"))?)?;
            out.add_key(d.key, &c);
        }
        Ok(out)
    }
}

impl QMorphism {
    /// Minimal p-adic valuation of the coefficients.
    pub fn ord(&self, p: u64) -> Result<PValuation, TlError> {
        check_prime(p)?;
        let mut best = PValuation::Infinite;
        for c in self.terms.values() {
            best = best.min(pval(c, p)?);
        }
        Ok(best)
    }

    pub fn specialize(&self, field: PrimeField) -> Result<FpMorphism, TlError> {
        let mut out = Morphism::zero(field, self.source, self.target);
        for (&k, c) in &self.terms {
            let r = reduce_mod_p(c, field.prime())?;
            out.add_key(k, &(r.residue() as u32));
        }
        Ok(out)
    }
}

impl FpMorphism {
    /// Lifts residues to integers in `0..p`.
    pub fn lift(&self) -> QMorphism {
        let mut out = Morphism::zero(Rationals, self.source, self.target);
        for (&k, &c) in &self.terms {
            out.terms.insert(k, Rational::from_int(c as i64));
        }
        out
    }

    pub fn coeff_scalar(&self, d: &Matching) -> FpScalar {
        self.ring.scalar(self.coeff(d))
    }
}

/// A morphism over either coefficient ring, for loading serialized data.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyMorphism {
    Q(QMorphism),
    Fp(FpMorphism),
}

impl AnyMorphism {
    pub fn from_json(v: &Value) -> Result<Self, TlError> {
        let tag = v["ring"].as_str().ok_or_else(|| TlError::Json("missing ring".into()))?;
        if tag == "Q" {
            return Ok(AnyMorphism::Q(QMorphism::from_json_in(Rationals, v)?));
        }
        let p: u64 = tag
            .strip_prefix('F')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| TlError::Json(format!("unknown ring {tag:?}")))?;
        Ok(AnyMorphism::Fp(FpMorphism::from_json_in(PrimeField::new(p)?, v)?))
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyMorphism::Q(f) => f.to_json(),
            AnyMorphism::Fp(f) => f.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(d: Matching) -> QMorphism {
        QMorphism::from_matching(Rationals, d)
    }

    fn e2() -> Matching {
        Matching::from_pairs(2, 2, &[(1, 2), (3, 4)]).unwrap()
    }

    fn catalan(k: u64) -> u64 {
        (0..k).fold(1u64, |c, i| c * 2 * (2 * i + 1) / (i + 2))
    }

    #[test]
    fn matching_counts() {
        assert_eq!(enumerate_matchings(3, 3).len(), 5);
        assert_eq!(enumerate_matchings(2, 0).len(), 1);
        assert_eq!(enumerate_matchings(1, 2).len(), 0);
        for total in (0..=16u32).step_by(2) {
            for m in 0..=total {
                assert_eq!(enumerate_matchings(m, total - m).len() as u64, catalan(total as u64 / 2));
            }
        }
    }

    #[test]
    fn brute_force_matchings_agree() {
        // all perfect matchings on up to 10 circular points, filtered for crossings
        fn all_pairings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
            if points.is_empty() {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for j in 1..points.len() {
                let rest: Vec<usize> = points[1..].iter().copied().filter(|&x| x != points[j]).collect();
                for mut r in all_pairings(&rest) {
                    r.push((points[0], points[j]));
                    out.push(r);
                }
            }
            out
        }
        for total in (0..=10usize).step_by(2) {
            for m in 0..=total {
                let n = total - m;
                let circ_of = |i: usize| if i < m { i } else { 2 * m + n - 1 - i };
                let pts: Vec<usize> = (0..total).collect();
                let planar = all_pairings(&pts)
                    .into_iter()
                    .filter(|ps| {
                        ps.iter().all(|&(a, b)| {
                            ps.iter().all(|&(c, d)| {
                                let (a, b) = (circ_of(a).min(circ_of(b)), circ_of(a).max(circ_of(b)));
                                let (c, d) = (circ_of(c).min(circ_of(d)), circ_of(c).max(circ_of(d)));
                                !(a < c && c < b && b < d)
                            })
                        })
                    })
                    .count();
                assert_eq!(planar, enumerate_matchings(m as u32, n as u32).len());
            }
        }
    }

    #[test]
    fn crossing_rejected() {
        assert_eq!(Matching::from_pairs(2, 2, &[(1, 3), (2, 4)]).unwrap(), Matching::identity(2));
        assert!(matches!(Matching::from_pairs(2, 2, &[(1, 4), (2, 3)]), Err(TlError::InvalidMatching(_))));
    }

    #[test]
    fn circle_is_minus_two() {
        let c = q(Matching::cap()).compose(&q(Matching::cup())).unwrap();
        assert_eq!(c.source(), 0);
        assert_eq!(c.coeff(&Matching::identity(0)), Rational::from_int(-2));
        let e = q(e2());
        assert_eq!(e.compose(&e).unwrap(), e.scale(&Rational::from_int(-2)));
        let id = QMorphism::identity(Rationals, 2);
        assert_eq!(id.compose(&e).unwrap(), e);
    }

    #[test]
    fn zigzag_straightens() {
        let cup_id = Matching::cup().tensor(&Matching::identity(1)).unwrap();
        let id_cap = Matching::identity(1).tensor(&Matching::cap()).unwrap();
        let (d, loops) = id_cap.compose(&cup_id).unwrap();
        assert_eq!((d, loops), (Matching::identity(1), 0));
    }

    #[test]
    fn tensor_and_reflect() {
        assert_eq!(Matching::identity(1).tensor(&Matching::identity(1)).unwrap(), Matching::identity(2));
        let t = Matching::cap().tensor(&Matching::cup()).unwrap();
        assert_eq!((t.source(), t.target(), t.through_degree()), (2, 2, 0));
        assert_eq!(Matching::cap().reflect(), Matching::cup());
        assert_eq!(e2().through_degree(), 0);
        assert_eq!(QMorphism::identity(Rationals, 5).through_degree().unwrap(), 5);
        assert_eq!(QMorphism::zero(Rationals, 1, 1).through_degree(), Err(TlError::ZeroMorphism));
    }

    #[test]
    fn apply_on_top_matches_tensor_compose() {
        let all = enumerate_matchings(3, 5);
        let ys = enumerate_matchings(2, 2);
        for x in &all {
            for y in &ys {
                let lhs = q(*x).apply_on_top(1, &q(*y), false).unwrap();
                let pad = q(Matching::identity(1)).tensor(&q(*y)).unwrap().tensor(&q(Matching::identity(2))).unwrap();
                assert_eq!(lhs, pad.compose(&q(*x)).unwrap());
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let f = q(e2()).scale(&Rational::new(-1, 2));
        let j = f.to_json();
        assert_eq!(j.to_string(), r#"{"m":2,"n":2,"ring":"Q","terms":[{"coeff":"-1/2","pairs":[[1,2],[3,4]]}]}"#);
        assert_eq!(AnyMorphism::from_json(&j).unwrap(), AnyMorphism::Q(f.clone()));
        let g = f.scale(&Rational::from_int(-2)).specialize(PrimeField::new(3).unwrap()).unwrap();
        assert_eq!(AnyMorphism::from_json(&g.to_json()).unwrap(), AnyMorphism::Fp(g));
    }

    #[test]
    fn ord_and_specialize() {
        let f = q(e2()).scale(&Rational::new(1, 2)).add(&QMorphism::identity(Rationals, 2)).unwrap();
        assert_eq!(f.ord(2).unwrap(), PValuation::Finite(-1));
        assert!(f.specialize(PrimeField::new(2).unwrap()).is_err());
        let s = f.specialize(PrimeField::new(3).unwrap()).unwrap();
        assert_eq!(s.coeff(&e2()), 2);
    }

    fn arb_morphism(m: u32, n: u32) -> impl Strategy<Value = QMorphism> {
        let basis = enumerate_matchings(m, n);
        let len = basis.len();
        proptest::collection::vec((0..len, -3i64..4), 1..4).prop_map(move |ts| {
            let mut f = QMorphism::zero(Rationals, m, n);
            for (i, c) in ts {
                f.add_term(basis[i], &Rational::from_int(c));
            }
            f
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn associative_and_degree_bounded(f in arb_morphism(4, 6), g in arb_morphism(6, 4), h in arb_morphism(2, 6)) {
            let left = f.compose(&g).unwrap().compose(&h).unwrap();
            let right = f.compose(&g.compose(&h).unwrap()).unwrap();
            prop_assert_eq!(&left, &right);
            let fg = f.compose(&g).unwrap();
            if !fg.is_zero() {
                prop_assert!(fg.through_degree().unwrap() <= f.through_degree().unwrap().min(g.through_degree().unwrap()));
            }
        }

        #[test]
        fn reflection_is_contravariant(f in arb_morphism(4, 2), g in arb_morphism(2, 4)) {
            prop_assert_eq!(f.compose(&g).unwrap().reflect(), g.reflect().compose(&f.reflect()).unwrap());
            prop_assert_eq!(f.reflect().reflect(), f);
        }

        #[test]
        fn interchange_law(f in arb_morphism(2, 2), g in arb_morphism(2, 2)) {
            let id1 = QMorphism::identity(Rationals, 2);
            let a = id1.tensor(&g).unwrap().compose(&f.tensor(&id1).unwrap()).unwrap();
            let b = f.tensor(&id1).unwrap().compose(&id1.tensor(&g).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
