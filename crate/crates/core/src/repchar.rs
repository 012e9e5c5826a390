//! Characters of tilting, Weyl and simple modules, Weyl-module
//! decompositions and thick tensor-ideal levels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::exactnum::{check_prime, NumError};
use crate::padic::{block_of, digits_of, x_set, PadicContext, PadicError};

#[derive(Debug, Error)]
pub enum CharError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("weight {0} must be at least 1")]
    ZeroWeight(u64),
    #[error("subtracting L({label}) from Δ({w}) left a negative multiplicity")]
    Inconsistent { w: u64, label: u64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Weight multiplicities, stored densely over `-bound..=bound`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Character {
    bound: i64,
    mults: Vec<u64>,
}

impl Character {
    pub fn zero() -> Self {
        Character { bound: 0, mults: vec![0] }
    }

    fn with_bound(bound: i64) -> Self {
        Character { bound, mults: vec![0; (2 * bound + 1) as usize] }
    }

    fn grow(&mut self, bound: i64) {
        if bound <= self.bound {
            return;
        }
        let mut out = Character::with_bound(bound);
        for (w, m) in self.iter() {
            out.mults[(w + bound) as usize] = m;
        }
        *self = out;
    }

    pub fn mult(&self, weight: i64) -> u64 {
        if weight.abs() > self.bound {
            0
        } else {
            self.mults[(weight + self.bound) as usize]
        }
    }

    /// Nonzero `(weight, multiplicity)` pairs by increasing weight.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.mults.iter().enumerate().filter(|(_, &m)| m > 0).map(|(i, &m)| (i as i64 - self.bound, m))
    }

    pub fn dim(&self) -> u64 {
        self.mults.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.mults.iter().all(|&m| m == 0)
    }

    pub fn highest_weight(&self) -> Option<i64> {
        self.iter().last().map(|(w, _)| w)
    }

    pub fn is_symmetric(&self) -> bool {
        self.mults.iter().eq(self.mults.iter().rev())
    }

    pub fn add_scaled(&mut self, o: &Character, c: u64) {
        self.grow(o.bound);
        for (w, m) in o.iter() {
            self.mults[(w + self.bound) as usize] += c * m;
        }
    }

    /// `self − c·o`, or `None` if some multiplicity would become negative.
    pub fn checked_sub_scaled(&self, o: &Character, c: u64) -> Option<Character> {
        let mut out = self.clone();
        for (w, m) in o.iter() {
            if w.abs() > out.bound {
                return None;
            }
            let slot = &mut out.mults[(w + out.bound) as usize];
            *slot = slot.checked_sub(c * m)?;
        }
        Some(out)
    }

    /// Character of the tensor product.
    pub fn tensor(&self, o: &Character) -> Character {
        let mut out = Character::with_bound(self.bound + o.bound);
        for (a, m) in self.iter() {
            for (b, n) in o.iter() {
                out.mults[(a + b + out.bound) as usize] += m * n;
            }
        }
        out
    }

    /// Scales every weight by `q`.
    pub fn twist(&self, q: i64) -> Character {
        let mut out = Character::with_bound(self.bound * q);
        for (w, m) in self.iter() {
            out.mults[(w * q + out.bound) as usize] = m;
        }
        out
    }
}

impl fmt::Debug for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl Serialize for Character {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<i64, u64> = self.iter().collect();
        m.serialize(s)
    }
}

/// Weyl character with highest weight `w − 1`.
pub fn weyl_character(w: u64) -> Result<Character, CharError> {
    if w == 0 {
        return Err(CharError::ZeroWeight(w));
    }
    let top = w as i64 - 1;
    let mut out = Character::with_bound(top);
    for k in (-top..=top).step_by(2) {
        out.mults[(k + top) as usize] = 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TiltingCharacter {
    /// Labels `w − 1` of the dual Weyl factors, decreasing.
    pub labels: Vec<u64>,
    pub character: Character,
}

/// Character of `T(v − 1)` as the sum of Weyl characters over the support.
pub fn tilting_character(v: u64, p: u64) -> Result<TiltingCharacter, CharError> {
    let supp = PadicContext::new(v, p)?.support();
    let mut character = Character::zero();
    for &w in &supp {
        character.add_scaled(&weyl_character(w)?, 1);
    }
    Ok(TiltingCharacter { labels: supp.iter().rev().map(|w| w - 1).collect(), character })
}

/// Character of the simple module with highest weight `n`, as the tensor
/// product of twisted restricted simples over the digits of `n`.
pub fn simple_character(n: u64, p: u64) -> Result<Character, CharError> {
    check_prime(p)?;
    let mut out = weyl_character(1)?;
    let mut q = 1i64;
    for a in digits_of(n, p) {
        out = out.tensor(&weyl_character(a + 1)?.twist(q));
        q *= p as i64;
    }
    Ok(out)
}

/// Composition multiplicities `[Δ(w−1) : L(n)]` keyed by `n`, by greedy
/// subtraction of simple characters from the top weight down.
pub fn decompose_weyl(w: u64, p: u64) -> Result<BTreeMap<u64, u64>, CharError> {
    let mut rest = weyl_character(w)?;
    let mut out = BTreeMap::new();
    while let Some(top) = rest.highest_weight() {
        let c = rest.mult(top);
        let n = top as u64;
        rest = rest
            .checked_sub_scaled(&simple_character(n, p)?, c)
            .ok_or(CharError::Inconsistent { w, label: n })?;
        out.insert(n, c);
    }
    Ok(out)
}

/// `{w − 2x : x ∈ X(w)}` restricted to positive values.
pub fn delta_labels_via_x(w: u64, p: u64) -> BTreeSet<u64> {
    x_set(w as i64, p)
        .into_iter()
        .map(|x| w as i64 - 2 * x)
        .filter(|&u| u > 0)
        .map(|u| u as u64)
        .collect()
}

/// Largest `k` with `v ≥ p^k`.
pub fn ideal_level(v: u64, p: u64) -> Result<u32, CharError> {
    check_prime(p)?;
    if v == 0 {
        return Err(CharError::ZeroWeight(v));
    }
    let mut k = 0;
    let mut q = p;
    while q <= v {
        k += 1;
        q = match q.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    Ok(k)
}

/// Values `v ≤ bound` whose tilting module lies in the ideal of level `k`.
pub fn ideal_members(p: u64, k: u32, bound: u64) -> Result<Vec<u64>, CharError> {
    let mut out = Vec::new();
    for v in 1..=bound {
        if ideal_level(v, p)? >= k {
            out.push(v);
        }
    }
    Ok(out)
}

/// `dim T(v − 1)`, the sum over the support.
pub fn tilting_dim(v: u64, p: u64) -> Result<u64, CharError> {
    Ok(PadicContext::new(v, p)?.support().iter().sum())
}

/// p-adic valuation of a positive integer.
pub fn ord_p(mut n: u64, p: u64) -> u32 {
    let mut k = 0;
    while n > 0 && n.is_multiple_of(p) {
        n /= p;
        k += 1;
    }
    k
}

/// One row of the character table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub label: u64,
    pub support: Vec<u64>,
    pub tilting_labels: Vec<u64>,
    pub delta_factors: Vec<u64>,
    pub dim_tilting: u64,
    pub ideal_level: u32,
    pub block: u64,
}

pub fn table_row(v: u64, p: u64) -> Result<TableRow, CharError> {
    let ctx = PadicContext::new(v, p)?;
    let t = tilting_character(v, p)?;
    let delta: Vec<u64> = decompose_weyl(v, p)?.into_iter().rev().flat_map(|(n, c)| std::iter::repeat_n(n, c as usize)).collect();
    Ok(TableRow {
        label: v - 1,
        support: ctx.support().into_iter().rev().collect(),
        tilting_labels: t.labels,
        delta_factors: delta,
        dim_tilting: t.character.dim(),
        ideal_level: ideal_level(v, p)?,
        block: block_of(v, p)? - 1,
    })
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Writes the table for vertex labels `0..vmax` as CSV.
pub fn write_csv<W: Write>(out: W, p: u64, vmax: u64) -> Result<(), CharError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "support", "tilting_nabla_labels", "delta_factors", "dim_tilting", "ideal_level"])?;
    for v in 1..=vmax {
        let r = table_row(v, p)?;
        w.write_record([
            r.label.to_string(),
            join(&r.support),
            join(&r.tilting_labels),
            join(&r.delta_factors),
            r.dim_tilting.to_string(),
            r.ideal_level.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(c: &Character) -> Vec<i64> {
        c.iter().map(|(w, _)| w).collect()
    }

    #[test]
    fn weyl_examples() {
        assert_eq!(weights(&weyl_character(1).unwrap()), vec![0]);
        assert_eq!(weights(&weyl_character(3).unwrap()), vec![-2, 0, 2]);
        for w in 1..30 {
            let c = weyl_character(w).unwrap();
            assert_eq!(c.dim(), w);
            assert!(c.is_symmetric());
        }
        assert!(weyl_character(0).is_err());
    }

    #[test]
    fn tilting_examples() {
        let t = tilting_character(23, 3).unwrap();
        assert_eq!(t.labels, vec![22, 18, 16, 12]);
        assert_eq!(t.character.dim(), 72);
        assert_eq!(tilting_character(9, 3).unwrap().labels, vec![8]);
    }

    #[test]
    fn simple_examples() {
        for p in [2u64, 3, 5] {
            for n in 0..p {
                assert_eq!(simple_character(n, p).unwrap(), weyl_character(n + 1).unwrap());
            }
        }
        assert_eq!(simple_character(22, 3).unwrap().dim(), 12);
        assert_eq!(weights(&simple_character(18, 3).unwrap()), vec![-18, 0, 18]);
    }

    #[test]
    fn decomposition_examples() {
        assert_eq!(decompose_weyl(23, 3).unwrap(), BTreeMap::from([(22, 1), (18, 1), (12, 1), (10, 1)]));
        assert_eq!(decompose_weyl(7, 3).unwrap(), BTreeMap::from([(6, 1), (4, 1)]));
        for w in 1..=3 {
            assert_eq!(decompose_weyl(w, 3).unwrap(), BTreeMap::from([(w - 1, 1)]));
        }
    }

    #[test]
    fn x_labels() {
        assert_eq!(delta_labels_via_x(2, 3), BTreeSet::from([2]));
        assert_eq!(delta_labels_via_x(7, 3), BTreeSet::from([7, 3]));
        assert_eq!(delta_labels_via_x(23, 3), BTreeSet::from([23, 11]));
    }

    #[test]
    fn ideal_examples() {
        assert_eq!(ideal_level(2, 3).unwrap(), 0);
        assert_eq!(ideal_level(23, 3).unwrap(), 2);
        assert_eq!(ord_p(tilting_dim(23, 3).unwrap(), 3), 2);
        let negligible: Vec<u64> =
            (1..=200).filter(|&v| tilting_dim(v, 3).unwrap().is_multiple_of(3)).collect();
        assert_eq!(negligible, ideal_members(3, 1, 200).unwrap());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, 3, 23).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(last, "22,23;19;17;13,22;18;16;12,22;18;12;10,72,2");
        assert_eq!(text.lines().count(), 24);
    }
}
