//! Digit combinatorics of p-adic expansions: ancestry, supports, admissible
//! digit sets and the reflections they define, blocks and the monoid action.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::exactnum::{check_prime, NumError};

/// Admissibility condition that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    D1,
    D2,
    U1,
    U2,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::D1 => "d1",
            Condition::D2 => "d2",
            Condition::U1 => "u1",
            Condition::U2 => "u2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("vertices are indexed by v >= 1, got 0")]
    ZeroVertex,
    #[error("{set} is not admissible for v={v} (p={p}): condition {cond} fails at position {pos}")]
    Inadmissible { v: u64, p: u64, set: DigitSet, cond: Condition, pos: u32 },
    #[error("empty digit set")]
    EmptySet,
    #[error("{0} is not an eve")]
    NotEve(u64),
    #[error("digit {digit} out of range for p={p}")]
    BadDigit { digit: u64, p: u64 },
    #[error("value overflow")]
    Overflow,
}

/// Finite set of digit positions, stored as a bit mask (positions < 64).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct DigitSet(u64);

impl DigitSet {
    pub const EMPTY: DigitSet = DigitSet(0);

    pub fn from_bits(bits: u64) -> Self {
        DigitSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn single(i: u32) -> Self {
        DigitSet(1 << i)
    }

    /// The stretch `{lo, lo+1, ..., hi}`.
    pub fn range(lo: u32, hi: u32) -> Self {
        assert!(lo <= hi && hi < 64);
        let width = hi - lo + 1;
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        DigitSet(mask << lo)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, i: u32) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    pub fn contains_i64(self, i: i64) -> bool {
        (0..64).contains(&i) && self.contains(i as u32)
    }

    pub fn insert(&mut self, i: u32) {
        self.0 |= 1 << i;
    }

    pub fn min(self) -> Option<u32> {
        (self.0 != 0).then(|| self.0.trailing_zeros())
    }

    pub fn max(self) -> Option<u32> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros())
    }

    pub fn union(self, o: DigitSet) -> DigitSet {
        DigitSet(self.0 | o.0)
    }

    pub fn intersect(self, o: DigitSet) -> DigitSet {
        DigitSet(self.0 & o.0)
    }

    pub fn minus(self, o: DigitSet) -> DigitSet {
        DigitSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: DigitSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: DigitSet) -> bool {
        self.0 & o.0 == 0
    }

    /// Positions in increasing order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros();
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn is_stretch(self) -> bool {
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) => self.len() == hi - lo + 1,
            _ => false,
        }
    }

    /// Maximal runs of consecutive positions, increasing.
    pub fn stretches(self) -> Vec<DigitSet> {
        let mut out = Vec::new();
        let mut rest = self.0;
        while rest != 0 {
            let lo = rest.trailing_zeros();
            let run = (!(rest >> lo)).trailing_zeros();
            let piece = DigitSet::range(lo, lo + run - 1);
            out.push(piece);
            rest &= !piece.0;
        }
        out
    }

    /// Strict order of stretches: every element of `self` exceeds every element of `o`.
    pub fn gt(self, o: DigitSet) -> bool {
        match (self.min(), o.max()) {
            (Some(a), Some(b)) => a > b,
            _ => false,
        }
    }

    /// `self >= o`: both the minimum and the maximum are at least those of `o`.
    pub fn ge(self, o: DigitSet) -> bool {
        match (self.min(), self.max(), o.min(), o.max()) {
            (Some(a), Some(b), Some(c), Some(d)) => a >= c && b >= d,
            _ => false,
        }
    }

    pub fn from_positions<I: IntoIterator<Item = u32>>(it: I) -> Self {
        let mut s = DigitSet::EMPTY;
        for i in it {
            s.insert(i);
        }
        s
    }

    /// Positions in decreasing order, the usual way to write a stretch.
    pub fn to_vec_desc(self) -> Vec<u32> {
        let mut v: Vec<u32> = self.iter().collect();
        v.reverse();
        v
    }
}

impl fmt::Display for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_vec_desc().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for DigitSet {
    type Err = String;

    /// Parses `{2,1}`, `2,1` or `{}`.
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().trim_start_matches('{').trim_end_matches('}').trim();
        let mut set = DigitSet::EMPTY;
        if t.is_empty() {
            return Ok(set);
        }
        for part in t.split(',') {
            let i: u32 = part.trim().parse().map_err(|_| format!("bad digit position {part:?}"))?;
            if i >= 64 {
                return Err(format!("digit position {i} too large"));
            }
            set.insert(i);
        }
        Ok(set)
    }
}

impl Serialize for DigitSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_vec_desc().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Direction {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceClass {
    Distant,
    Adjacent,
    Overlapping,
}

pub fn stretch_distance(a: DigitSet, b: DigitSet) -> Result<(u32, DistanceClass), PadicError> {
    if a.is_empty() || b.is_empty() {
        return Err(PadicError::EmptySet);
    }
    let d = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| x.abs_diff(y)))
        .min()
        .unwrap();
    let class = match d {
        0 => DistanceClass::Overlapping,
        1 => DistanceClass::Adjacent,
        _ => DistanceClass::Distant,
    };
    Ok((d, class))
}

/// Signed digit expansion `b_0, b_1, ...` (least significant first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedExpansion(pub Vec<i64>);

impl SignedExpansion {
    /// Builds from digits written most significant first.
    pub fn from_msd(digits: &[i64]) -> Self {
        SignedExpansion(digits.iter().rev().copied().collect())
    }
}

pub fn signed_value(e: &SignedExpansion, p: u64) -> i64 {
    e.0.iter().rev().fold(0i64, |acc, &b| acc * p as i64 + b)
}

/// Value of `n` with the digits at positions in `s` negated.
pub fn negate_digits(n: i64, p: u64, s: DigitSet) -> i64 {
    assert!(n >= 0);
    let mut out = n;
    let mut pow = 1i64;
    let mut rest = n;
    let mut i = 0;
    while rest > 0 {
        let d = rest % p as i64;
        if s.contains(i) {
            out -= 2 * d * pow;
        }
        rest /= p as i64;
        pow *= p as i64;
        i += 1;
    }
    out
}

/// Digits of `v` least significant first.
pub fn digits_of(mut v: u64, p: u64) -> Vec<u64> {
    let mut d = Vec::new();
    while v > 0 {
        d.push(v % p);
        v /= p;
    }
    d
}

/// A positive integer together with its base-p digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicContext {
    v: u64,
    p: u64,
    digits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ancestry {
    pub is_eve: bool,
    pub mother: Option<u64>,
    pub ancestors: Vec<u64>,
    pub generation: usize,
    pub eve: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextJson {
    pub v: u64,
    pub p: u64,
    pub digits: Vec<u64>,
    pub support: Vec<u64>,
    pub fsupport: Vec<u64>,
    pub generation: usize,
}

impl PadicContext {
    pub fn new(v: u64, p: u64) -> Result<Self, PadicError> {
        check_prime(p)?;
        if v == 0 {
            return Err(PadicError::ZeroVertex);
        }
        Ok(PadicContext { v, p, digits: digits_of(v, p) })
    }

    pub fn v(&self) -> u64 {
        self.v
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Digits `a_0, ..., a_j`.
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Digits `a_j, ..., a_0`.
    pub fn digits_msd(&self) -> Vec<u64> {
        self.digits.iter().rev().copied().collect()
    }

    /// Digit `a_i`, zero beyond the leading position.
    pub fn digit(&self, i: u32) -> u64 {
        self.digits.get(i as usize).copied().unwrap_or(0)
    }

    /// Position `j` of the leading digit.
    pub fn lead(&self) -> u32 {
        self.digits.len() as u32 - 1
    }

    fn pow(&self, i: u32) -> u64 {
        self.p.pow(i)
    }

    fn nonzero_positions(&self) -> Vec<u32> {
        (0..self.digits.len() as u32).filter(|&i| self.digit(i) != 0).collect()
    }

    pub fn is_eve(&self) -> bool {
        self.nonzero_positions().len() == 1
    }

    pub fn mother(&self) -> Option<u64> {
        if self.is_eve() {
            return None;
        }
        let i = self.nonzero_positions()[0];
        Some(self.v - self.digit(i) * self.pow(i))
    }

    pub fn ancestry(&self) -> Ancestry {
        let mut ancestors = Vec::new();
        let mut cur = self.clone();
        while let Some(m) = cur.mother() {
            ancestors.push(m);
            cur = PadicContext::new(m, self.p).expect("mother is positive");
        }
        Ancestry {
            is_eve: ancestors.is_empty(),
            mother: ancestors.first().copied(),
            generation: ancestors.len(),
            eve: ancestors.last().copied().unwrap_or(self.v),
            ancestors,
        }
    }

    pub fn generation(&self) -> usize {
        self.nonzero_positions().len() - 1
    }

    pub fn eve(&self) -> u64 {
        let j = self.lead();
        self.digit(j) * self.pow(j)
    }

    /// The ancestor (or `v` itself) obtained by clearing every digit at positions `<= s`.
    pub fn fancest(&self, s: i64) -> u64 {
        if s < 0 {
            return self.v;
        }
        if s as u32 >= self.lead() {
            // cannot clear the leading digit: the oldest ancestor is the eve
            return self.eve();
        }
        let m = self.pow(s as u32 + 1);
        self.v - self.v % m
    }

    /// All values `<a_j, ±a_{j-1}, ..., ±a_0>`.
    pub fn support(&self) -> BTreeSet<u64> {
        let free: Vec<u32> = self.nonzero_positions().into_iter().filter(|&i| i < self.lead()).collect();
        let mut out = BTreeSet::new();
        for mask in 0u64..(1 << free.len()) {
            let s = DigitSet::from_positions(
                free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i),
            );
            out.insert(negate_digits(self.v as i64, self.p, s) as u64);
        }
        out
    }

    pub fn fsupport(&self) -> BTreeSet<u64> {
        self.nonzero_positions()
            .into_iter()
            .filter(|&i| i < self.lead())
            .map(|i| self.v - 2 * self.digit(i) * self.pow(i))
            .collect()
    }

    fn fail(&self, set: DigitSet, cond: Condition, pos: u32) -> PadicError {
        PadicError::Inadmissible { v: self.v, p: self.p, set, cond, pos }
    }

    pub fn check_down_admissible(&self, s: DigitSet) -> Result<(), PadicError> {
        for run in s.stretches() {
            let lo = run.min().unwrap();
            if self.digit(lo) == 0 {
                return Err(self.fail(s, Condition::D1, lo));
            }
        }
        for i in s.iter() {
            if self.digit(i + 1) == 0 && !s.contains(i + 1) {
                return Err(self.fail(s, Condition::D2, i));
            }
        }
        Ok(())
    }

    pub fn check_up_admissible(&self, s: DigitSet) -> Result<(), PadicError> {
        for run in s.stretches() {
            let lo = run.min().unwrap();
            if self.digit(lo) == 0 {
                return Err(self.fail(s, Condition::U1, lo));
            }
        }
        for i in s.iter() {
            if self.digit(i + 1) == self.p - 1 && !s.contains(i + 1) {
                return Err(self.fail(s, Condition::U2, i));
            }
        }
        Ok(())
    }

    pub fn is_down_admissible(&self, s: DigitSet) -> bool {
        self.check_down_admissible(s).is_ok()
    }

    pub fn is_up_admissible(&self, s: DigitSet) -> bool {
        self.check_up_admissible(s).is_ok()
    }

    pub fn check_admissible(&self, s: DigitSet, dir: Direction) -> Result<(), PadicError> {
        match dir {
            Direction::Down => self.check_down_admissible(s),
            Direction::Up => self.check_up_admissible(s),
        }
    }

    /// `v[S]`.
    pub fn reflect_down(&self, s: DigitSet) -> Result<u64, PadicError> {
        self.check_down_admissible(s)?;
        Ok(negate_digits(self.v as i64, self.p, s) as u64)
    }

    /// `v(S)`.
    pub fn reflect_up(&self, s: DigitSet) -> Result<u64, PadicError> {
        self.check_up_admissible(s)?;
        let top = self.lead().max(s.max().unwrap_or(0) + 1);
        let mut value: i128 = 0;
        for k in (0..=top).rev() {
            let a = self.digit(k) as i128;
            let d = if s.contains(k) {
                -a
            } else if k > 0 && s.contains(k - 1) {
                a + 2
            } else {
                a
            };
            value = value * self.p as i128 + d;
        }
        u64::try_from(value).map_err(|_| PadicError::Overflow)
    }

    pub fn reflect(&self, s: DigitSet, dir: Direction) -> Result<u64, PadicError> {
        match dir {
            Direction::Down => self.reflect_down(s),
            Direction::Up => self.reflect_up(s),
        }
    }

    /// Finest partition of an admissible set into admissible stretches,
    /// largest stretch first.
    pub fn minimal_partition(&self, s: DigitSet, dir: Direction) -> Result<Vec<DigitSet>, PadicError> {
        self.check_admissible(s, dir)?;
        let mut parts = Vec::new();
        for run in s.stretches() {
            let (lo, hi) = (run.min().unwrap(), run.max().unwrap());
            let mut start = lo;
            for k in lo..hi {
                let next = self.digit(k + 1);
                let can_cut = next != 0 && (dir == Direction::Down || next != self.p - 1);
                if can_cut {
                    parts.push(DigitSet::range(start, k));
                    start = k + 1;
                }
            }
            parts.push(DigitSet::range(start, hi));
        }
        parts.reverse();
        Ok(parts)
    }

    /// All minimal down-admissible stretches, increasing.
    pub fn minimal_down_stretches(&self) -> Vec<DigitSet> {
        let nz = self.nonzero_positions();
        nz.windows(2).map(|w| DigitSet::range(w[0], w[1] - 1)).collect()
    }

    /// All minimal up-admissible stretches, increasing.
    pub fn minimal_up_stretches(&self) -> Vec<DigitSet> {
        let mut out = Vec::new();
        for s in self.nonzero_positions() {
            let mut t = s;
            while self.digit(t + 1) == self.p - 1 {
                t += 1;
            }
            out.push(DigitSet::range(s, t));
        }
        out
    }

    /// Every down-admissible set, in increasing bit order.
    pub fn down_admissible_sets(&self) -> Vec<DigitSet> {
        let mins = self.minimal_down_stretches();
        let mut out: Vec<DigitSet> = (0u64..(1 << mins.len()))
            .map(|mask| {
                mins.iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .fold(DigitSet::EMPTY, |acc, (_, s)| acc.union(*s))
            })
            .collect();
        out.sort();
        out
    }

    /// Smallest down-admissible set containing `s`.
    pub fn hull(&self, s: DigitSet) -> Option<DigitSet> {
        let mut t = s;
        loop {
            let mut grown = t;
            for i in t.iter() {
                if self.digit(i + 1) == 0 {
                    if i + 1 >= self.lead() {
                        return None;
                    }
                    grown.insert(i + 1);
                }
            }
            for run in t.stretches() {
                let mut lo = run.min().unwrap();
                while self.digit(lo) == 0 {
                    if lo == 0 {
                        return None;
                    }
                    lo -= 1;
                    grown.insert(lo);
                }
            }
            if grown == t {
                break;
            }
            t = grown;
        }
        debug_assert!(self.is_down_admissible(t));
        Some(t)
    }

    pub fn to_json(&self) -> ContextJson {
        ContextJson {
            v: self.v,
            p: self.p,
            digits: self.digits_msd(),
            support: self.support().into_iter().collect(),
            fsupport: self.fsupport().into_iter().collect(),
            generation: self.generation(),
        }
    }
}

pub fn expand(v: u64, p: u64) -> Result<PadicContext, PadicError> {
    PadicContext::new(v, p)
}

/// The set `X(v)` by its recursive definition, with `X(n) = {}` for `n <= 0`.
pub fn x_set(v: i64, p: u64) -> BTreeSet<i64> {
    let mut memo = BTreeMap::new();
    x_set_memo(v, p as i64, &mut memo)
}

fn x_set_memo(v: i64, p: i64, memo: &mut BTreeMap<i64, BTreeSet<i64>>) -> BTreeSet<i64> {
    if v <= 0 {
        return BTreeSet::new();
    }
    if v < p {
        return BTreeSet::from([0]);
    }
    if let Some(x) = memo.get(&v) {
        return x.clone();
    }
    let a0 = v % p;
    let mut out: BTreeSet<i64> = x_set_memo((v - a0) / p, p, memo).into_iter().map(|x| p * x).collect();
    if a0 != p - 1 {
        for x in x_set_memo((v - a0 - p) / p, p, memo) {
            out.insert(a0 + 1 + p * x);
        }
    }
    memo.insert(v, out.clone());
    out
}

/// `[b_k, ..., b_0] ⊙ v`: append the word's digits below those of `v`.
pub fn monoid_act(word: &[u64], v: u64, p: u64) -> Result<u64, PadicError> {
    check_prime(p)?;
    let mut out = v;
    for &b in word {
        if b >= p {
            return Err(PadicError::BadDigit { digit: b, p });
        }
        out = out.checked_mul(p).and_then(|x| x.checked_add(b)).ok_or(PadicError::Overflow)?;
    }
    Ok(out)
}

/// The eve `e` whose block contains vertex `v - 1`.
pub fn block_of(v: u64, p: u64) -> Result<u64, PadicError> {
    let mut ctx = PadicContext::new(v, p)?;
    loop {
        // reflecting through every minimal stretch at once is still admissible
        let all = ctx.minimal_down_stretches().into_iter().fold(DigitSet::EMPTY, DigitSet::union);
        if all.is_empty() {
            return Ok(ctx.v());
        }
        ctx = PadicContext::new(ctx.reflect_down(all)?, p)?;
    }
}

/// Vertex labels `v - 1 <= bound` in the block of the eve `e`.
pub fn enumerate_block(e: u64, p: u64, bound: u64) -> Result<Vec<u64>, PadicError> {
    let ctx = PadicContext::new(e, p)?;
    if !ctx.is_eve() {
        return Err(PadicError::NotEve(e));
    }
    let mut out = Vec::new();
    for v in 1..=bound + 1 {
        if block_of(v, p)? == e {
            out.push(v - 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(v: u64, p: u64) -> PadicContext {
        PadicContext::new(v, p).unwrap()
    }

    fn set(xs: &[u32]) -> DigitSet {
        DigitSet::from_positions(xs.iter().copied())
    }

    fn from_msd(d: &[u64], p: u64) -> u64 {
        d.iter().fold(0, |acc, &x| acc * p + x)
    }

    #[test]
    fn expansions() {
        assert_eq!(ctx(23, 3).digits_msd(), vec![2, 1, 2]);
        assert_eq!(ctx(1, 5).digits_msd(), vec![1]);
        assert_eq!(ctx(9, 3).digits_msd(), vec![1, 0, 0]);
        assert_eq!(expand(0, 3), Err(PadicError::ZeroVertex));
        assert!(matches!(expand(5, 6), Err(PadicError::Num(NumError::NotPrime(6)))));
    }

    #[test]
    fn signed_values() {
        assert_eq!(signed_value(&SignedExpansion::from_msd(&[2, -1, -2]), 3), 13);
        assert_eq!(signed_value(&SignedExpansion::from_msd(&[1, -2]), 3), 1);
        assert_eq!(signed_value(&SignedExpansion::from_msd(&[0]), 3), 0);
    }

    #[test]
    fn ancestry_of_23() {
        let a = ctx(23, 3).ancestry();
        assert_eq!(a.mother, Some(21));
        assert_eq!(a.ancestors, vec![21, 18]);
        assert_eq!(a.generation, 2);
        assert_eq!(a.eve, 18);
        assert!(ctx(18, 3).ancestry().is_eve);
        assert_eq!(ctx(18, 3).generation(), 0);
        let b = ctx(5, 3).ancestry();
        assert_eq!((b.mother, b.generation), (Some(3), 1));
    }

    #[test]
    fn fancest_examples() {
        let v = from_msd(&[1, 2, 6, 4, 0, 6, 6], 7);
        assert_eq!(ctx(v, 7).fancest(3), from_msd(&[1, 2, 6, 0, 0, 0, 0], 7));
        assert_eq!(ctx(v, 7).fancest(-1), v);
        assert_eq!(ctx(23, 3).fancest(0), 21);
    }

    #[test]
    fn supports() {
        assert_eq!(ctx(23, 3).support(), BTreeSet::from([23, 19, 17, 13]));
        assert_eq!(ctx(23, 3).fsupport(), BTreeSet::from([19, 17]));
        assert_eq!(ctx(18, 3).support(), BTreeSet::from([18]));
        assert!(ctx(18, 3).fsupport().is_empty());
        assert_eq!(ctx(17, 3).support(), BTreeSet::from([17, 13, 5, 1]));
    }

    #[test]
    fn admissibility_examples() {
        let v = ctx(from_msd(&[4, 5, 0, 2, 0, 6, 1], 7), 7);
        let s = set(&[5, 4, 3, 0]);
        let s2 = set(&[5, 4, 3, 1, 0]);
        assert!(v.is_down_admissible(s) && !v.is_up_admissible(s));
        assert!(v.is_up_admissible(s2) && !v.is_down_admissible(s2));
        assert!(v.is_down_admissible(DigitSet::EMPTY) && v.is_up_admissible(DigitSet::EMPTY));
        let ten = ctx(10, 3);
        assert!(matches!(
            ten.check_down_admissible(set(&[0])),
            Err(PadicError::Inadmissible { cond: Condition::D2, .. })
        ));
        assert_eq!(v.hull(s2), Some(set(&[5, 4, 3, 2, 1, 0])));
        assert_eq!(v.reflect_down(s).unwrap() as i64, signed_value(&SignedExpansion::from_msd(&[4, -5, 0, -2, 0, 6, -1]), 7));
        assert_eq!(v.reflect_up(s2).unwrap() as i64, signed_value(&SignedExpansion::from_msd(&[6, -5, 0, -2, 2, -6, -1]), 7));
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(ctx(23, 3).reflect_down(set(&[1, 0])).unwrap(), 13);
        assert_eq!(ctx(13, 3).reflect_up(set(&[1, 0])).unwrap(), 23);
        assert_eq!(ctx(23, 3).reflect_down(DigitSet::EMPTY).unwrap(), 23);
        assert_eq!(ctx(23, 3).reflect_up(DigitSet::EMPTY).unwrap(), 23);
        assert_eq!(ctx(37, 3).reflect_down(set(&[2])).unwrap(), 19);
        assert_eq!(ctx(19, 3).reflect_down(set(&[1, 0])).unwrap(), 17);
        assert_eq!(ctx(17, 3).reflect_up(set(&[1])).unwrap(), 23);
        assert_eq!(ctx(37, 3).reflect_down(set(&[1, 0])).unwrap(), 35);
        assert_eq!(ctx(35, 3).reflect_down(set(&[2, 1])).unwrap(), 23);
        assert!(ctx(10, 3).reflect_down(set(&[0])).is_err());
    }

    #[test]
    fn partitions_and_hulls() {
        let v = ctx(from_msd(&[4, 5, 0, 2, 0, 6, 1], 7), 7);
        assert_eq!(
            v.minimal_partition(set(&[5, 4, 3, 0]), Direction::Down).unwrap(),
            vec![set(&[5]), set(&[4, 3]), set(&[0])]
        );
        assert_eq!(ctx(13, 3).minimal_partition(set(&[1, 0]), Direction::Down).unwrap(), vec![set(&[1]), set(&[0])]);
        assert_eq!(ctx(13, 3).minimal_partition(set(&[1]), Direction::Down).unwrap(), vec![set(&[1])]);
        assert_eq!(ctx(11, 3).hull(set(&[0])), Some(set(&[1, 0])));
        assert_eq!(ctx(23, 3).hull(set(&[1, 0])), Some(set(&[1, 0])));
    }

    #[test]
    fn distances() {
        assert_eq!(stretch_distance(set(&[0]), set(&[3, 2])).unwrap(), (2, DistanceClass::Distant));
        assert_eq!(stretch_distance(set(&[0]), set(&[1])).unwrap().1, DistanceClass::Adjacent);
        assert_eq!(stretch_distance(set(&[1, 0]), set(&[2, 1])).unwrap().1, DistanceClass::Overlapping);
        assert_eq!(stretch_distance(DigitSet::EMPTY, set(&[1])), Err(PadicError::EmptySet));
    }

    #[test]
    fn x_set_examples() {
        assert_eq!(x_set(2, 3), BTreeSet::from([0]));
        assert_eq!(x_set(7, 3), BTreeSet::from([0, 2]));
        assert_eq!(x_set(3, 3), BTreeSet::from([0]));
        assert_eq!(x_set(5, 5), BTreeSet::from([0]));
        assert_eq!(x_set(23, 3), BTreeSet::from([0, 6]));
    }

    #[test]
    fn monoid_and_blocks() {
        assert_eq!(monoid_act(&[1], 7, 3).unwrap(), 22);
        assert_eq!(monoid_act(&[0, 0], 7, 3).unwrap(), 63);
        assert_eq!(monoid_act(&[], 7, 3).unwrap(), 7);
        assert_eq!(enumerate_block(1, 3, 23).unwrap(), vec![0, 4, 6, 10, 12, 16, 18, 22]);
        assert_eq!(enumerate_block(9, 3, 8).unwrap(), vec![8]);
        assert_eq!(block_of(23, 3).unwrap(), 1);
        assert_eq!(enumerate_block(4, 3, 10), Err(PadicError::NotEve(4)));
    }

    #[test]
    fn digit_set_parsing() {
        assert_eq!("{2,1}".parse::<DigitSet>().unwrap(), set(&[2, 1]));
        assert_eq!("{}".parse::<DigitSet>().unwrap(), DigitSet::EMPTY);
        assert_eq!(set(&[5, 4, 3, 0]).to_string(), "{5,4,3,0}");
        assert_eq!(set(&[5, 4, 3, 0]).stretches(), vec![set(&[0]), set(&[5, 4, 3])]);
    }

    #[test]
    fn json_form() {
        let j = serde_json::to_string(&ctx(23, 3).to_json()).unwrap();
        assert_eq!(j, r#"{"v":23,"p":3,"digits":[2,1,2],"support":[13,17,19,23],"fsupport":[17,19],"generation":2}"#);
    }
}
