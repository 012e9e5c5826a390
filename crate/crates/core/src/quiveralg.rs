//! The zigzag-like algebra as a path algebra with relations: generators,
//! the scalar functions, the rewriting engine, hom-space bases and the quiver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactnum::{check_prime, FpScalar, NumError};
use crate::padic::{block_of, DigitSet, Direction, PadicContext, PadicError};
use crate::projectors::{self, PMorphismLabel, ProjError};
use crate::tldiag::{FpMorphism, Matching, PrimeField};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Proj(#[from] ProjError),
    #[error("letter {letter} is not admissible at vertex {vertex}")]
    NotComposable { letter: String, vertex: u64 },
    #[error("rewriting ran out of fuel after {steps} steps; stuck at {stuck}")]
    FuelExhausted { steps: u64, stuck: String },
    #[error("no relation applies to the pair {pair} at vertex {vertex}")]
    Stuck { pair: String, vertex: u64 },
    #[error("relation at vertex {vertex} produced the undefined word {word}")]
    Undefined { word: String, vertex: u64 },
    #[error("cannot parse word: {0}")]
    Parse(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
}

/// A generator symbol without its base vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub dir: Direction,
    pub set: DigitSet,
}

impl Letter {
    pub fn down(set: DigitSet) -> Self {
        Letter { dir: Direction::Down, set }
    }

    pub fn up(set: DigitSet) -> Self {
        Letter { dir: Direction::Up, set }
    }

    pub fn reflect(self) -> Self {
        let dir = match self.dir {
            Direction::Down => Direction::Up,
            Direction::Up => Direction::Down,
        };
        Letter { dir, set: self.set }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.dir == Direction::Down { 'D' } else { 'U' };
        write!(f, "{c}{}", self.set)
    }
}

/// A generator `D_S` or `U_S` at the vertex `source − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    pub direction: Direction,
    pub source: u64,
    pub set: DigitSet,
}

impl Generator {
    pub fn letter(&self) -> Letter {
        Letter { dir: self.direction, set: self.set }
    }

    pub fn target(&self, p: u64) -> Result<u64, QuiverError> {
        Ok(PadicContext::new(self.source, p)?.reflect(self.set, self.direction)?)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.letter(), self.source - 1)
    }
}

/// All generators starting at the vertex `v − 1`.
pub fn generators_at(v: u64, p: u64) -> Result<Vec<Generator>, QuiverError> {
    let c = PadicContext::new(v, p)?;
    let downs = c.minimal_down_stretches().into_iter().map(|set| Generator { direction: Direction::Down, source: v, set });
    let ups = c.minimal_up_stretches().into_iter().map(|set| Generator { direction: Direction::Up, source: v, set });
    Ok(downs.chain(ups).collect())
}

fn step(u: u64, l: Letter, p: u64) -> Result<u64, QuiverError> {
    Ok(PadicContext::new(u, p)?.reflect(l.set, l.dir)?)
}

/// Expands a possibly composite symbol at `u` into minimal generators, in
/// application order. `None` if the set is not admissible there.
///
/// Downs peel off the minimal stretch holding the largest remaining position,
/// ups the one holding the smallest, each taken at the vertex reached so far.
fn expand_symbol(u: u64, l: Letter, p: u64) -> Result<Option<(Vec<Letter>, u64)>, QuiverError> {
    let start = PadicContext::new(u, p)?;
    let Ok(end) = start.reflect(l.set, l.dir) else {
        return Ok(None);
    };
    let mut out = Vec::new();
    let mut rest = l.set;
    let mut at = u;
    while !rest.is_empty() {
        let c = PadicContext::new(at, p)?;
        let (candidates, anchor) = match l.dir {
            Direction::Down => (c.minimal_down_stretches(), rest.max().unwrap()),
            Direction::Up => (c.minimal_up_stretches(), rest.min().unwrap()),
        };
        let Some(piece) = candidates.into_iter().find(|s| s.contains(anchor) && s.is_subset(rest)) else {
            return Ok(None);
        };
        out.push(Letter { dir: l.dir, set: piece });
        at = c.reflect(piece, l.dir)?;
        rest = rest.minus(piece);
    }
    Ok((at == end).then_some((out, at)))
}

/// Places a sequence of possibly composite symbols starting at `u`.
fn place(u: u64, symbols: &[Letter], p: u64) -> Result<Option<(Vec<Letter>, u64)>, QuiverError> {
    let mut out = Vec::new();
    let mut at = u;
    for &s in symbols {
        match expand_symbol(at, s, p)? {
            Some((ls, next)) => {
                out.extend(ls);
                at = next;
            }
            None => return Ok(None),
        }
    }
    Ok(Some((out, at)))
}

fn display_order(letters: &[Letter]) -> String {
    letters.iter().rev().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

/// A composable word of minimal generators, stored in application order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuiverWord {
    p: u64,
    source: u64,
    letters: Vec<Letter>,
}

impl QuiverWord {
    /// Builds a word from symbols in application order (first acts first).
    /// Composite symbols are expanded into minimal generators.
    pub fn new(p: u64, source: u64, symbols: &[Letter]) -> Result<Self, QuiverError> {
        check_prime(p)?;
        PadicContext::new(source, p)?;
        let mut letters = Vec::new();
        let mut at = source;
        for &s in symbols {
            let (ls, next) = expand_symbol(at, s, p)?
                .ok_or_else(|| QuiverError::NotComposable { letter: s.to_string(), vertex: at - 1 })?;
            letters.extend(ls);
            at = next;
        }
        Ok(QuiverWord { p, source, letters })
    }

    pub fn identity(p: u64, source: u64) -> Result<Self, QuiverError> {
        Self::new(p, source, &[])
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn source(&self) -> u64 {
        self.source
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The vertices visited, starting with the source.
    pub fn vertices(&self) -> Vec<u64> {
        vertices(self.source, &self.letters, self.p).expect("word is composable")
    }

    pub fn target(&self) -> u64 {
        *self.vertices().last().unwrap()
    }

    pub fn generators(&self) -> Vec<Generator> {
        self.letters
            .iter()
            .zip(self.vertices())
            .map(|(l, source)| Generator { direction: l.dir, source, set: l.set })
            .collect()
    }

    /// The reflected word, read from the old target back to the old source.
    pub fn reflect(&self) -> Self {
        let letters = self.letters.iter().rev().map(|l| l.reflect()).collect();
        QuiverWord { p: self.p, source: self.target(), letters }
    }

    /// Appends a word starting where this one ends.
    pub fn then(&self, other: &QuiverWord) -> Result<Self, QuiverError> {
        if other.source != self.target() || other.p != self.p {
            return Err(QuiverError::NotComposable { letter: other.to_string(), vertex: self.target() - 1 });
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(QuiverWord { p: self.p, source: self.source, letters })
    }

    /// Parses `D{1,0} U{0} @ 10` at prime `p`; the rightmost symbol acts first.
    pub fn parse(s: &str, p: u64) -> Result<Self, QuiverError> {
        let (body, anchor) = s.split_once('@').ok_or_else(|| QuiverError::Parse("missing '@ vertex'".into()))?;
        let vertex: u64 = anchor
            .trim()
            .parse()
            .map_err(|_| QuiverError::Parse(format!("bad vertex {:?}", anchor.trim())))?;
        let mut symbols = Vec::new();
        let mut rest = body.trim();
        while !rest.is_empty() {
            let dir = match rest.chars().next().unwrap() {
                'D' => Direction::Down,
                'U' => Direction::Up,
                c => return Err(QuiverError::Parse(format!("unexpected {c:?}"))),
            };
            let close = rest.find('}').ok_or_else(|| QuiverError::Parse("unclosed '{'".into()))?;
            let inner = rest[1..=close].trim();
            if !inner.starts_with('{') {
                return Err(QuiverError::Parse(format!("expected '{{' after {dir:?}")));
            }
            let set = DigitSet::from_str(inner).map_err(QuiverError::Parse)?;
            if set.is_empty() {
                return Err(QuiverError::Parse("empty digit set".into()));
            }
            symbols.push(Letter { dir, set });
            rest = rest[close + 1..].trim_start();
        }
        symbols.reverse();
        Self::new(p, vertex + 1, &symbols)
    }
}

impl fmt::Display for QuiverWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = display_order(&self.letters);
        if body.is_empty() {
            write!(f, "@ {}", self.source - 1)
        } else {
            write!(f, "{body} @ {}", self.source - 1)
        }
    }
}

fn vertices(source: u64, letters: &[Letter], p: u64) -> Result<Vec<u64>, QuiverError> {
    let mut out = Vec::with_capacity(letters.len() + 1);
    let mut at = source;
    out.push(at);
    for &l in letters {
        at = step(at, l, p)?;
        out.push(at);
    }
    Ok(out)
}

fn f_of(a: u64, p: u64) -> FpScalar {
    let a = a % p;
    if a == 0 || a == p - 1 {
        return FpScalar::zero(p);
    }
    let sign = if a.is_multiple_of(2) { 2 } else { -2 };
    FpScalar::new_unchecked(sign, p).checked_div(FpScalar::new_unchecked(a as i64, p)).unwrap()
}

fn g_of(a: u64, p: u64) -> FpScalar {
    let a = a % p;
    if a == 0 {
        return FpScalar::new_unchecked(-2, p);
    }
    -FpScalar::new_unchecked(a as i64 + 1, p).checked_div(FpScalar::new_unchecked(a as i64, p)).unwrap()
}

fn digit_above(v: u64, s: DigitSet, p: u64) -> Result<u64, QuiverError> {
    let top = s.max().ok_or(PadicError::EmptySet)?;
    Ok(PadicContext::new(v, p)?.digit(top + 1))
}

/// `f(a_{max(S)+1})` for the digits of `v`.
pub fn scalar_f(v: u64, s: DigitSet, p: u64) -> Result<FpScalar, QuiverError> {
    Ok(f_of(digit_above(v, s, p)?, p))
}

/// `g(a_{max(S)+1})` for the digits of `v`.
pub fn scalar_g(v: u64, s: DigitSet, p: u64) -> Result<FpScalar, QuiverError> {
    Ok(g_of(digit_above(v, s, p)?, p))
}

/// `g(a_{max(S)+1} − 1)` for the digits of `v`.
pub fn scalar_h(v: u64, s: DigitSet, p: u64) -> Result<FpScalar, QuiverError> {
    let a = digit_above(v, s, p)?;
    Ok(g_of(a + p - 1, p))
}

/// The scalar functions on residues.
pub fn f_value(a: u64, p: u64) -> FpScalar {
    f_of(a, p)
}

pub fn g_value(a: u64, p: u64) -> FpScalar {
    g_of(a, p)
}

/// A normal-form path `U…U D…D` from `source − 1` to `target − 1`.
///
/// `downs` and `ups` are in application order: downs strictly decreasing,
/// ups strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisElement {
    pub source: u64,
    pub target: u64,
    pub downs: Vec<DigitSet>,
    pub ups: Vec<DigitSet>,
}

impl BasisElement {
    pub fn letters(&self) -> Vec<Letter> {
        self.downs.iter().map(|&s| Letter::down(s)).chain(self.ups.iter().map(|&s| Letter::up(s))).collect()
    }

    pub fn word(&self, p: u64) -> QuiverWord {
        QuiverWord { p, source: self.source, letters: self.letters() }
    }

    pub fn down_set(&self) -> DigitSet {
        self.downs.iter().fold(DigitSet::EMPTY, |a, &s| a.union(s))
    }

    pub fn up_set(&self) -> DigitSet {
        self.ups.iter().fold(DigitSet::EMPTY, |a, &s| a.union(s))
    }

    /// The matching p-morphism label.
    pub fn label(&self) -> PMorphismLabel {
        PMorphismLabel { v: self.source, w: self.target, up: self.up_set(), down: self.down_set() }
    }

    pub fn from_label(label: &PMorphismLabel, p: u64) -> Result<Self, QuiverError> {
        let c = PadicContext::new(label.v, p)?;
        let mid = c.reflect_down(label.down)?;
        let (downs, at) = expand_symbol(label.v, Letter::down(label.down), p)?
            .ok_or_else(|| QuiverError::NotComposable { letter: Letter::down(label.down).to_string(), vertex: label.v - 1 })?;
        debug_assert_eq!(at, mid);
        let (ups, end) = expand_symbol(mid, Letter::up(label.up), p)?
            .ok_or_else(|| QuiverError::NotComposable { letter: Letter::up(label.up).to_string(), vertex: mid - 1 })?;
        debug_assert_eq!(end, label.w);
        Ok(BasisElement {
            source: label.v,
            target: label.w,
            downs: downs.into_iter().map(|l| l.set).collect(),
            ups: ups.into_iter().map(|l| l.set).collect(),
        })
    }

    pub fn reflect(&self) -> Self {
        BasisElement {
            source: self.target,
            target: self.source,
            downs: self.ups.iter().rev().copied().collect(),
            ups: self.downs.iter().rev().copied().collect(),
        }
    }

    fn sets_json(sets: &[DigitSet]) -> Value {
        Value::Array(sets.iter().rev().map(|s| json!(s.to_vec_desc())).collect())
    }
}

impl fmt::Display for BasisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = display_order(&self.letters());
        if body.is_empty() {
            write!(f, "1_{}", self.source - 1)
        } else {
            write!(f, "{body}")
        }
    }
}

/// A linear combination of basis elements sharing source and target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm {
    pub p: u64,
    pub source: u64,
    pub target: u64,
    pub terms: BTreeMap<BasisElement, FpScalar>,
}

impl NormalForm {
    pub fn zero(p: u64, source: u64, target: u64) -> Self {
        NormalForm { p, source, target, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, b: &BasisElement) -> FpScalar {
        self.terms.get(b).copied().unwrap_or(FpScalar::zero(self.p))
    }

    pub fn add_term(&mut self, b: BasisElement, c: FpScalar) {
        let e = self.terms.entry(b).or_insert(FpScalar::zero(self.p));
        *e = *e + c;
        if e.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn reflect(&self) -> Self {
        NormalForm {
            p: self.p,
            source: self.target,
            target: self.source,
            terms: self.terms.iter().map(|(b, &c)| (b.reflect(), c)).collect(),
        }
    }

    /// Coefficients keyed by p-morphism label.
    pub fn by_label(&self) -> BTreeMap<PMorphismLabel, FpScalar> {
        self.terms.iter().map(|(b, &c)| (b.label(), c)).collect()
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(b, c)| {
                json!({
                    "ups": BasisElement::sets_json(&b.ups),
                    "downs": BasisElement::sets_json(&b.downs),
                    "coeff": c.to_string(),
                })
            })
            .collect();
        json!({ "source": self.source - 1, "target": self.target - 1, "terms": terms })
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(b, c)| format!("{c}·{b}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Settings for the rewriting engine.
#[derive(Debug, Clone, Copy)]
pub struct RewriteOptions {
    /// Maximum number of relation applications.
    pub fuel: u64,
    /// When set, reduction sites and worklist order are chosen at random.
    pub seed: Option<u64>,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions { fuel: DEFAULT_FUEL, seed: None }
    }
}

fn out_of_order(a: Letter, b: Letter) -> bool {
    match (a.dir, b.dir) {
        (Direction::Down, Direction::Down) => !a.set.gt(b.set),
        (Direction::Up, Direction::Up) => !b.set.gt(a.set),
        (Direction::Up, Direction::Down) => true,
        (Direction::Down, Direction::Up) => false,
    }
}

type Rhs = Vec<(FpScalar, Vec<Letter>)>;

fn distance(a: DigitSet, b: DigitSet) -> u32 {
    crate::padic::stretch_distance(a, b).map(|(d, _)| d).unwrap_or(u32::MAX)
}

fn single_overlap(a: DigitSet, b: DigitSet) -> Option<u32> {
    let i = a.intersect(b);
    (i.len() == 1).then(|| i.min().unwrap())
}

/// Right-hand side for the out-of-order pair `b ∘ a` at `u` (a acts first),
/// in raw symbols that may be composite.
fn relation_rhs(u: u64, a: Letter, b: Letter, p: u64) -> Result<Option<Rhs>, QuiverError> {
    use Direction::{Down, Up};
    let one = FpScalar::one(p);
    let (s, t) = (a.set, b.set);
    let rhs = match (a.dir, b.dir) {
        (Down, Down) => {
            if t.is_subset(s) {
                vec![]
            } else if distance(s, t) > 1 {
                vec![(one, vec![b, a])]
            } else if distance(s, t) == 1 && t.gt(s) {
                vec![(scalar_h(u, s, p)?, vec![Letter::down(t), Letter::up(s)])]
            } else if let (true, Some(x)) = (t.ge(s), single_overlap(s, t)) {
                let x = DigitSet::single(x);
                vec![(one, vec![Letter::down(t.minus(x)), Letter::down(s), Letter::up(x)])]
            } else {
                return Ok(None);
            }
        }
        (Up, Up) => {
            if s.is_subset(t) {
                vec![]
            } else if distance(s, t) > 1 {
                vec![(one, vec![b, a])]
            } else if distance(s, t) == 1 && s.gt(t) {
                let end = step(step(u, a, p)?, b, p)?;
                vec![(scalar_h(end, t, p)?, vec![Letter::down(t), Letter::up(s)])]
            } else if let (true, Some(x)) = (s.ge(t), single_overlap(s, t)) {
                let x = DigitSet::single(x);
                vec![(one, vec![Letter::down(x), Letter::up(t), Letter::up(s.minus(x))])]
            } else {
                return Ok(None);
            }
        }
        (Up, Down) => {
            if s == t {
                let c = PadicContext::new(u, p)?;
                match c.hull(s) {
                    None => vec![],
                    Some(h) => {
                        let mut out = vec![(scalar_g(u, s, p)?, vec![Letter::down(h), Letter::up(h)])];
                        let above = c.minimal_down_stretches().into_iter().find(|x: &DigitSet| DigitSet::gt(*x, h));
                        if let Some(tt) = above {
                            out.push((
                                scalar_f(u, s, p)?,
                                vec![Letter::down(tt), Letter::down(h), Letter::up(h), Letter::up(tt)],
                            ));
                        }
                        out
                    }
                }
            } else if distance(s, t) > 1 {
                vec![(one, vec![b, a])]
            } else if distance(s, t) == 1 {
                if t.gt(s) {
                    vec![(one, vec![Letter::down(s.union(t))])]
                } else {
                    vec![(one, vec![Letter::up(s.union(t))])]
                }
            } else {
                return Ok(None);
            }
        }
        (Down, Up) => return Ok(None),
    };
    Ok(Some(rhs.into_iter().filter(|(c, _)| !c.is_zero()).collect()))
}

/// Rewrites `word` into the normal-form basis with default options.
pub fn rewrite(word: &QuiverWord) -> Result<NormalForm, QuiverError> {
    rewrite_with(word, RewriteOptions::default())
}

pub fn rewrite_with(word: &QuiverWord, opts: RewriteOptions) -> Result<NormalForm, QuiverError> {
    let one = FpScalar::one(word.p);
    rewrite_sum(word.p, word.source, word.target(), vec![(one, word.letters.clone())], opts)
}

/// Rewrites a linear combination of composable words with common endpoints.
pub fn rewrite_sum(
    p: u64,
    source: u64,
    target: u64,
    words: Vec<(FpScalar, Vec<Letter>)>,
    opts: RewriteOptions,
) -> Result<NormalForm, QuiverError> {
    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let mut pending: BTreeMap<Vec<Letter>, FpScalar> = BTreeMap::new();
    for (c, w) in words {
        accumulate(&mut pending, w, c);
    }
    let mut out = NormalForm::zero(p, source, target);
    let mut steps = 0u64;
    while !pending.is_empty() {
        let w = match rng.as_mut() {
            Some(r) => {
                let k = r.gen_range(0..pending.len());
                pending.keys().nth(k).unwrap().clone()
            }
            None => pending.keys().next().unwrap().clone(),
        };
        let c = pending.remove(&w).unwrap();
        if c.is_zero() {
            continue;
        }
        let verts = vertices(source, &w, p)?;
        if *verts.last().unwrap() != target {
            return Err(QuiverError::NotComposable { letter: display_order(&w), vertex: source - 1 });
        }
        let sites: Vec<usize> = (0..w.len().saturating_sub(1)).filter(|&i| out_of_order(w[i], w[i + 1])).collect();
        if sites.is_empty() {
            out.add_term(basis_from_normal_word(source, target, &w), c);
            continue;
        }
        steps += 1;
        if steps > opts.fuel {
            return Err(QuiverError::FuelExhausted { steps: opts.fuel, stuck: display_order(&w) });
        }
        let i = match rng.as_mut() {
            Some(r) => sites[r.gen_range(0..sites.len())],
            None => sites[0],
        };
        let u = verts[i];
        let rhs = relation_rhs(u, w[i], w[i + 1], p)?.ok_or_else(|| QuiverError::Stuck {
            pair: format!("{} {}", w[i + 1], w[i]),
            vertex: u - 1,
        })?;
        for (k, symbols) in rhs {
            let (mid, end) = place(u, &symbols, p)?.ok_or_else(|| QuiverError::Undefined {
                word: display_order(&symbols),
                vertex: u - 1,
            })?;
            if end != verts[i + 2] {
                return Err(QuiverError::Undefined { word: display_order(&symbols), vertex: u - 1 });
            }
            let mut nw = w[..i].to_vec();
            nw.extend(mid);
            nw.extend_from_slice(&w[i + 2..]);
            accumulate(&mut pending, nw, c * k);
        }
    }
    Ok(out)
}

fn accumulate(map: &mut BTreeMap<Vec<Letter>, FpScalar>, w: Vec<Letter>, c: FpScalar) {
    let p = c.prime();
    let e = map.entry(w).or_insert(FpScalar::zero(p));
    *e = *e + c;
}

fn basis_from_normal_word(source: u64, target: u64, w: &[Letter]) -> BasisElement {
    let split = w.iter().position(|l| l.dir == Direction::Up).unwrap_or(w.len());
    BasisElement {
        source,
        target,
        downs: w[..split].iter().map(|l| l.set).collect(),
        ups: w[split..].iter().map(|l| l.set).collect(),
    }
}

/// Every normal-form path out of `v − 1` ending at a vertex `≤ wmax − 1`,
/// grouped by target.
pub fn basis_from(v: u64, p: u64, wmax: u64) -> Result<BTreeMap<u64, Vec<BasisElement>>, QuiverError> {
    let mut out: BTreeMap<u64, Vec<BasisElement>> = BTreeMap::new();
    let mut downs = Vec::new();
    walk_downs(v, p, wmax, v, None, &mut downs, &mut out)?;
    for list in out.values_mut() {
        list.sort();
    }
    Ok(out)
}

fn walk_downs(
    v: u64,
    p: u64,
    wmax: u64,
    at: u64,
    last: Option<DigitSet>,
    chain: &mut Vec<DigitSet>,
    out: &mut BTreeMap<u64, Vec<BasisElement>>,
) -> Result<(), QuiverError> {
    let mut ups = Vec::new();
    walk_ups(v, p, wmax, at, None, chain, &mut ups, out)?;
    let c = PadicContext::new(at, p)?;
    for s in c.minimal_down_stretches() {
        if last.is_none_or(|l| l.gt(s)) {
            chain.push(s);
            walk_downs(v, p, wmax, c.reflect_down(s)?, Some(s), chain, out)?;
            chain.pop();
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn walk_ups(
    v: u64,
    p: u64,
    wmax: u64,
    at: u64,
    last: Option<DigitSet>,
    downs: &[DigitSet],
    chain: &mut Vec<DigitSet>,
    out: &mut BTreeMap<u64, Vec<BasisElement>>,
) -> Result<(), QuiverError> {
    if at > wmax {
        return Ok(());
    }
    out.entry(at).or_default().push(BasisElement {
        source: v,
        target: at,
        downs: downs.to_vec(),
        ups: chain.clone(),
    });
    let c = PadicContext::new(at, p)?;
    for s in c.minimal_up_stretches() {
        if last.is_none_or(|l| s.gt(l)) {
            chain.push(s);
            walk_ups(v, p, wmax, c.reflect_up(s)?, Some(s), downs, chain, out)?;
            chain.pop();
        }
    }
    Ok(())
}

/// The normal-form basis of paths from `v − 1` to `w − 1`.
pub fn hom_basis(v: u64, w: u64, p: u64) -> Result<Vec<BasisElement>, QuiverError> {
    Ok(basis_from(v, p, w)?.remove(&w).unwrap_or_default())
}

/// The endomorphism algebra of `v − 1` as a truncated polynomial algebra.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EndPresentation {
    pub vertex: u64,
    /// One square-zero generator per minimal down-admissible stretch.
    pub generators: Vec<DigitSet>,
    pub dimension: u64,
}

impl fmt::Display for EndPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generators.is_empty() {
            return write!(f, "F");
        }
        let gens: Vec<String> = self.generators.iter().rev().map(|s| format!("L{s}")).collect();
        let sq: Vec<String> = self.generators.iter().rev().map(|s| format!("L{s}^2")).collect();
        write!(f, "F[{}]/<{}>", gens.join(", "), sq.join(", "))
    }
}

pub fn end_presentation(v: u64, p: u64) -> Result<EndPresentation, QuiverError> {
    let c = PadicContext::new(v, p)?;
    let generators = c.minimal_down_stretches();
    let dimension = 1u64 << generators.len();
    Ok(EndPresentation { vertex: v - 1, generators, dimension })
}

/// The loop `U_S D_S` at `v − 1` for a down-admissible `S`.
pub fn ploop(v: u64, s: DigitSet, p: u64) -> Result<QuiverWord, QuiverError> {
    QuiverWord::new(p, v, &[Letter::down(s), Letter::up(s)])
}

/// Relation families of the presentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RelationId {
    Idempotent,
    Containment,
    FarCommutativity,
    Adjacency,
    Overlap,
    Zigzag,
    OverlapHull,
}

impl RelationId {
    pub const ALL: [RelationId; 7] = [
        RelationId::Idempotent,
        RelationId::Containment,
        RelationId::FarCommutativity,
        RelationId::Adjacency,
        RelationId::Overlap,
        RelationId::Zigzag,
        RelationId::OverlapHull,
    ];
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationId::Idempotent => "1",
            RelationId::Containment => "2",
            RelationId::FarCommutativity => "3",
            RelationId::Adjacency => "4",
            RelationId::Overlap => "5",
            RelationId::Zigzag => "6",
            RelationId::OverlapHull => "overlap-hull",
        };
        f.write_str(s)
    }
}

impl FromStr for RelationId {
    type Err = QuiverError;

    fn from_str(s: &str) -> Result<Self, QuiverError> {
        Ok(match s.trim() {
            "1" | "idempotent" => RelationId::Idempotent,
            "2" | "containment" => RelationId::Containment,
            "3" | "far" | "far-commutativity" => RelationId::FarCommutativity,
            "4" | "adjacency" => RelationId::Adjacency,
            "5" | "overlap" => RelationId::Overlap,
            "6" | "zigzag" => RelationId::Zigzag,
            "overlap-hull" => RelationId::OverlapHull,
            other => return Err(QuiverError::UnknownRelation(other.to_string())),
        })
    }
}

/// One instantiated relation `lhs = Σ c·rhs`.
#[derive(Debug, Clone)]
pub struct RelationInstance {
    pub relation: RelationId,
    pub lhs: QuiverWord,
    pub rhs: Vec<(FpScalar, QuiverWord)>,
}

impl fmt::Display for RelationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rhs: Vec<String> = self.rhs.iter().map(|(c, w)| format!("{c}·({w})")).collect();
        let rhs = if rhs.is_empty() { "0".to_string() } else { rhs.join(" + ") };
        write!(f, "({}) {} = {}", self.relation, self.lhs, rhs)
    }
}

/// All composable two-letter words at `v − 1` built from generators.
fn generator_pairs(v: u64, p: u64) -> Result<Vec<(Generator, Generator)>, QuiverError> {
    let mut out = Vec::new();
    for a in generators_at(v, p)? {
        for b in generators_at(a.target(p)?, p)? {
            out.push((a, b));
        }
    }
    Ok(out)
}

fn instance(
    relation: RelationId,
    p: u64,
    v: u64,
    lhs: &[Letter],
    rhs: Vec<(FpScalar, Vec<Letter>)>,
) -> Result<Option<RelationInstance>, QuiverError> {
    let lhs = QuiverWord::new(p, v, lhs)?;
    let mut out = Vec::new();
    for (c, w) in rhs {
        match QuiverWord::new(p, v, &w) {
            Ok(w) if w.target() == lhs.target() => out.push((c, w)),
            _ => return Ok(None),
        }
    }
    Ok(Some(RelationInstance { relation, lhs, rhs: out }))
}

/// Every instance of a relation family whose generators start at `v − 1`.
pub fn relation_instances(v: u64, p: u64, id: RelationId) -> Result<Vec<RelationInstance>, QuiverError> {
    use Direction::{Down, Up};
    let one = FpScalar::one(p);
    let mut out = Vec::new();
    if id == RelationId::Idempotent {
        for g in generators_at(v, p)? {
            let l = [g.letter()];
            out.extend(instance(id, p, v, &l, vec![(one, l.to_vec())])?);
        }
        return Ok(out);
    }
    if id == RelationId::OverlapHull {
        let c = PadicContext::new(v, p)?;
        for s in c.minimal_down_stretches() {
            let below = PadicContext::new(c.reflect_down(s)?, p)?;
            if below.is_down_admissible(s) {
                continue;
            }
            let Some(h) = below.hull(s) else { continue };
            if !c.is_down_admissible(h) {
                continue;
            }
            let lhs = [Letter::down(s), Letter::down(h)];
            let Some(inst) = instance(id, p, v, &lhs, vec![(one, vec![Letter::down(h), Letter::up(s)])])? else {
                continue;
            };
            let reflected = RelationInstance {
                relation: id,
                lhs: inst.lhs.reflect(),
                rhs: inst.rhs.iter().map(|(c, w)| (*c, w.reflect())).collect(),
            };
            out.push(inst);
            out.push(reflected);
        }
        return Ok(out);
    }
    for (a, b) in generator_pairs(v, p)? {
        let (s, t) = (a.set, b.set);
        let d = distance(s, t);
        let family = match (a.direction, b.direction) {
            (Down, Down) if t.is_subset(s) => RelationId::Containment,
            (Up, Up) if s.is_subset(t) => RelationId::Containment,
            (Down, Up) | (Up, Down) if d > 1 => RelationId::FarCommutativity,
            (Down, Down) | (Up, Up) if d > 1 => RelationId::FarCommutativity,
            (Down, Down) if d == 1 && t.gt(s) => RelationId::Adjacency,
            (Up, Up) if d == 1 && s.gt(t) => RelationId::Adjacency,
            (Up, Down) if d == 1 => RelationId::Adjacency,
            (Down, Down) if t.ge(s) && single_overlap(s, t).is_some() => RelationId::Overlap,
            (Up, Up) if s.ge(t) && single_overlap(s, t).is_some() => RelationId::Overlap,
            (Up, Down) if s == t => RelationId::Zigzag,
            _ => continue,
        };
        if family != id {
            continue;
        }
        let (la, lb) = (a.letter(), b.letter());
        if id == RelationId::FarCommutativity && a.direction == Down && b.direction == Up {
            // stated in the reverse direction by the relation; only include it
            // when the other side is a generator pair too
            let rhs = vec![(one, vec![lb, la])];
            out.extend(instance(id, p, v, &[la, lb], rhs)?);
            continue;
        }
        let Some(rhs) = relation_rhs(v, la, lb, p)? else { continue };
        out.extend(instance(id, p, v, &[la, lb], rhs)?);
    }
    Ok(out)
}

/// Image of a generator word as a morphism between p-Jones–Wenzl projectors.
pub fn evaluate_word(word: &QuiverWord) -> Result<FpMorphism, QuiverError> {
    let p = word.p;
    let mut x: FpMorphism = (*projectors::pjw(word.source, p)?).clone();
    for g in word.generators() {
        let t = g.target(p)?;
        let d = generator_diagram(&g, p)?;
        x = projectors::pjw_after(t, p, &x.then_diagram(&d).map_err(ProjError::from)?)?;
    }
    Ok(x)
}

fn generator_diagram(g: &Generator, p: u64) -> Result<Matching, QuiverError> {
    Ok(match g.direction {
        Direction::Down => projectors::cap_bundle(g.source, g.set, p)?,
        Direction::Up => projectors::cap_bundle(g.target(p)?, g.set, p)?.reflect(),
    })
}

/// Coefficients of the diagrammatic image of `word` in the p-morphism basis.
pub fn evaluate_in_basis(word: &QuiverWord) -> Result<BTreeMap<PMorphismLabel, FpScalar>, QuiverError> {
    let f = evaluate_word(word)?;
    let field = PrimeField::new(word.p).map_err(ProjError::from)?;
    Ok(projectors::expand_sandwiched(f, word.source, word.target(), word.p, field)?)
}

/// Arrow of the quiver between vertex labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Arrow {
    pub from: u64,
    pub to: u64,
    pub direction: Direction,
    pub set: DigitSet,
}

/// The quiver restricted to vertex labels `0..vmax`.
#[derive(Debug, Clone, Serialize)]
pub struct QuiverGraph {
    pub p: u64,
    pub vmax: u64,
    pub arrows: Vec<Arrow>,
    /// Vertex labels grouped by the eve label of their block.
    pub blocks: BTreeMap<u64, Vec<u64>>,
}

pub fn quiver_graph(p: u64, vmax: u64) -> Result<QuiverGraph, QuiverError> {
    check_prime(p)?;
    let mut arrows = Vec::new();
    let mut blocks: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for v in 1..=vmax {
        blocks.entry(block_of(v, p)? - 1).or_default().push(v - 1);
        for g in generators_at(v, p)? {
            let t = g.target(p)?;
            if t <= vmax {
                arrows.push(Arrow { from: v - 1, to: t - 1, direction: g.direction, set: g.set });
            }
        }
    }
    arrows.sort();
    Ok(QuiverGraph { p, vmax, arrows, blocks })
}

impl QuiverGraph {
    pub fn vertices(&self) -> impl Iterator<Item = u64> {
        0..self.vmax
    }

    pub fn down_arrows_from(&self, label: u64) -> Vec<&Arrow> {
        self.arrows.iter().filter(|a| a.from == label && a.direction == Direction::Down).collect()
    }

    /// Connected components of the underlying undirected graph.
    pub fn components(&self) -> Vec<BTreeSet<u64>> {
        let n = self.vmax as usize;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for a in &self.arrows {
            let (x, y) = (find(&mut parent, a.from as usize), find(&mut parent, a.to as usize));
            parent[x] = y;
        }
        let mut comps: BTreeMap<usize, BTreeSet<u64>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            comps.entry(r).or_default().insert(i as u64);
        }
        let mut out: Vec<BTreeSet<u64>> = comps.into_values().collect();
        out.sort();
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = format!("digraph quiver_p{} {{\n  rankdir=LR;\n", self.p);
        for (eve, members) in &self.blocks {
            s.push_str(&format!("  subgraph cluster_{eve} {{\n    label=\"block of {eve}\";\n"));
            for m in members {
                s.push_str(&format!("    v{m} [label=\"{m}\"];\n"));
            }
            s.push_str("  }\n");
        }
        for a in &self.arrows {
            let style = if a.direction == Direction::Down { "solid" } else { "dashed" };
            s.push_str(&format!("  v{} -> v{} [label=\"{}\", style={style}];\n", a.from, a.to, a.set));
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[u32]) -> DigitSet {
        DigitSet::from_positions(xs.iter().copied())
    }

    fn fp(n: i64, p: u64) -> FpScalar {
        FpScalar::new(n, p).unwrap()
    }

    #[test]
    fn scalar_function_identities() {
        for p in [3u64, 5, 7, 11] {
            assert!(f_value(p - 1, p).is_zero());
            assert!(g_value(p - 1, p).is_zero());
            for a in 1..=p - 2 {
                assert_eq!(g_value(a, p) * g_value(p - a - 1, p), FpScalar::one(p));
            }
        }
        assert_eq!(g_value(1, 3), fp(1, 3));
        assert_eq!(g_value(0, 5), fp(-2, 5));
        assert_eq!(f_value(1, 5), fp(-2, 5));
        assert_eq!(f_value(2, 5), fp(1, 5));
    }

    #[test]
    fn generators_examples() {
        let gens = generators_at(13, 3).unwrap();
        let got: Vec<(Direction, DigitSet, u64)> =
            gens.iter().map(|g| (g.direction, g.set, g.target(3).unwrap() - 1)).collect();
        assert!(got.contains(&(Direction::Down, set(&[0]), 10)));
        assert!(got.contains(&(Direction::Down, set(&[1]), 6)));
        assert!(got.contains(&(Direction::Up, set(&[0]), 16)));
        assert!(got.contains(&(Direction::Up, set(&[1]), 24)));
        let nine: Vec<_> = generators_at(9, 3).unwrap();
        assert_eq!(nine.len(), 1);
        assert_eq!((nine[0].direction, nine[0].set, nine[0].target(3).unwrap() - 1), (Direction::Up, set(&[2]), 44));
        assert!(generators_at(1, 3).unwrap().iter().all(|g| g.direction == Direction::Up));
    }

    #[test]
    fn word_parse_and_display() {
        let w = QuiverWord::parse("D{0} U{0} @ 10", 3).unwrap();
        assert_eq!(w.letters(), &[Letter::up(set(&[0])), Letter::down(set(&[0]))]);
        assert_eq!(w.to_string(), "D{0} U{0} @ 10");
        assert!(QuiverWord::parse("D{0} @ 4", 3).is_ok());
        assert!(matches!(QuiverWord::parse("D{1} @ 4", 3), Err(QuiverError::NotComposable { .. })));
        assert!(matches!(QuiverWord::parse("X{1} @ 4", 3), Err(QuiverError::Parse(_))));
        assert!(matches!(QuiverWord::parse("D{1}", 3), Err(QuiverError::Parse(_))));
        // composite symbols expand into minimal generators
        let c = QuiverWord::parse("D{2,1,0} @ 36", 3).unwrap();
        assert_eq!(c.letters(), &[Letter::down(set(&[2])), Letter::down(set(&[1, 0]))]);
    }

    #[test]
    fn rewrite_examples() {
        let normal = QuiverWord::parse("U{0} D{0} @ 6", 3).unwrap();
        let nf = rewrite(&normal).unwrap();
        assert_eq!(nf.terms.len(), 1);
        assert_eq!(nf.terms.values().next(), Some(&fp(1, 3)));

        let zz = rewrite(&QuiverWord::parse("D{0} U{0} @ 10", 3).unwrap()).unwrap();
        let expect = QuiverWord::parse("U{1,0} D{1,0} @ 10", 3).unwrap();
        assert_eq!(zz.terms.len(), 1);
        let (b, c) = zz.terms.iter().next().unwrap();
        assert_eq!(b.letters(), expect.letters());
        assert_eq!(*c, fp(1, 3));

        assert!(rewrite(&QuiverWord::parse("D{0} D{0} D{1} @ 12", 3).unwrap()).unwrap().is_zero());

        let adj = rewrite(&QuiverWord::parse("D{1} D{0} @ 16", 3).unwrap()).unwrap();
        let (b, c) = adj.terms.iter().next().unwrap();
        assert_eq!(b.to_string(), "U{0} D{1}");
        assert_eq!((b.source - 1, b.target - 1, *c), (16, 6, fp(1, 3)));

        let ov = rewrite(&QuiverWord::parse("D{2,1} D{1,0} @ 36", 3).unwrap()).unwrap();
        assert_eq!((ov.source - 1, ov.target - 1), (36, 22));
        let (b, c) = ov.terms.iter().next().unwrap();
        assert_eq!(b.to_string(), "U{1} D{1,0} D{2}");
        assert_eq!(*c, fp(1, 3));
    }

    #[test]
    fn hom_basis_examples() {
        let b = hom_basis(13, 17, 3).unwrap();
        let names: Vec<String> = b.iter().map(|e| e.to_string()).collect();
        assert_eq!(names.len(), 2);
        assert!(names.contains(&"U{0}".to_string()));
        assert!(names.contains(&"U{1} D{0} D{1}".to_string()));
        let end = hom_basis(23, 23, 3).unwrap();
        assert_eq!(end.len(), 4);
        assert!(end.iter().any(|e| e.downs.is_empty() && e.ups.is_empty()));
        assert!(hom_basis(23, 21, 3).unwrap().is_empty());
    }

    #[test]
    fn end_presentation_examples() {
        assert_eq!(end_presentation(9, 3).unwrap().dimension, 1);
        let e = end_presentation(23, 3).unwrap();
        assert_eq!(e.generators, vec![set(&[0]), set(&[1])]);
        assert_eq!(e.dimension, 4);
        assert_eq!(end_presentation(13, 3).unwrap().generators, vec![set(&[0]), set(&[1])]);
    }

    #[test]
    fn relation_instance_examples() {
        let z: Vec<_> = relation_instances(5, 3, RelationId::Zigzag)
            .unwrap()
            .into_iter()
            .filter(|i| i.lhs.letters()[0].set == set(&[0]))
            .collect();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].rhs.len(), 1);
        assert_eq!(z[0].rhs[0].0, g_value(1, 3));
        assert_eq!(z[0].rhs[0].1.to_string(), "U{0} D{0} @ 4");
        let o = relation_instances(37, 3, RelationId::Overlap).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o[0].lhs.to_string(), "D{2,1} D{1,0} @ 36");
        for e in [1u64, 2, 3, 6, 9, 18] {
            let c = relation_instances(e, 3, RelationId::Containment).unwrap();
            assert!(c.iter().all(|i| i.lhs.letters()[0].dir == Direction::Up));
        }
    }

    #[test]
    fn quiver_examples() {
        let q = quiver_graph(3, 53).unwrap();
        let mut t: Vec<u64> = q.down_arrows_from(22).iter().map(|a| a.to).collect();
        t.sort();
        assert_eq!(t, vec![16, 18]);
        assert!(q.down_arrows_from(8).is_empty());
        let comp = q.components().into_iter().find(|c| c.contains(&0)).unwrap();
        let low: Vec<u64> = comp.into_iter().filter(|&x| x <= 23).collect();
        assert_eq!(low, vec![0, 4, 6, 10, 12, 16, 18, 22]);
        let dot = q.to_dot();
        assert!(dot.contains("v22 -> v18"));
        assert!(dot.contains("style=dashed"));
    }

    #[test]
    fn normal_form_json() {
        let nf = rewrite(&QuiverWord::parse("U{0} @ 12", 3).unwrap()).unwrap();
        assert_eq!(
            nf.to_json().to_string(),
            r#"{"source":12,"target":16,"terms":[{"coeff":"1","downs":[],"ups":[[0]]}]}"#
        );
    }

    #[test]
    fn basis_words_are_p_morphisms() {
        for (v, w) in [(7u64, 11u64), (11, 11), (7, 7), (5, 7), (12, 12)] {
            for b in hom_basis(v, w, 3).unwrap() {
                let got = evaluate_in_basis(&b.word(3)).unwrap();
                let expect = BTreeMap::from([(b.label(), FpScalar::one(3))]);
                assert_eq!(got, expect, "{b}");
            }
        }
    }
}
