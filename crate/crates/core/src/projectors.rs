//! Jones–Wenzl and p-Jones–Wenzl projectors, cap and cup bundles, trapezes,
//! standard loops, p-morphisms and the expansion of morphisms between
//! p-Jones–Wenzl projectors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::exactnum::{FpScalar, NumError, PValuation, Rational};
use crate::padic::{negate_digits, DigitSet, PadicContext, PadicError};
use crate::tldiag::{FpMorphism, Matching, PrimeField, QMorphism, Rationals, TlError, MAX_POINTS};

/// Default refusal threshold for strand counts.
pub const DEFAULT_MAX_STRANDS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Tl(#[from] TlError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("{strands} strands exceeds the configured limit of {limit}")]
    TooManyStrands { strands: u64, limit: u32 },
    #[error("rational p-JW projector for v={v}, p={p} has negative valuation {ord}")]
    NotPAdmissible { v: u64, p: u64, ord: i64 },
    #[error("label mismatch: w[S]={up} but v[S']={down}")]
    LabelMismatch { up: u64, down: u64 },
    #[error("morphism has shape {found:?}, expected {expected:?}")]
    Shape { found: (u32, u32), expected: (u32, u32) },
    #[error("expansion left a nonzero residue with {terms} terms")]
    ExpansionResidue { terms: usize },
    #[error("a cap configuration may not contain cups")]
    NotCapOnly,
}

/// Which projector a cached morphism holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ProjectorKind {
    Jw,
    PjwRational,
    PjwModular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProjectorKey {
    pub kind: ProjectorKind,
    /// For `Jw` this is the strand count plus one, so that all kinds index by `v`.
    pub v: u64,
    pub p: Option<u64>,
}

impl fmt::Display for ProjectorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ProjectorKind::Jw => "jw",
            ProjectorKind::PjwRational => "pqjw",
            ProjectorKind::PjwModular => "pjw",
        };
        match self.p {
            Some(p) => write!(f, "{kind}-p{p}-v{}", self.v),
            None => write!(f, "{kind}-Q-v{}", self.v),
        }
    }
}

/// Persistent storage for computed projectors.
pub trait ProjectorStore: Send + Sync {
    fn load_q(&self, key: &ProjectorKey) -> Option<QMorphism>;
    fn load_fp(&self, key: &ProjectorKey) -> Option<FpMorphism>;
    fn store_q(&self, key: &ProjectorKey, f: &QMorphism);
    fn store_fp(&self, key: &ProjectorKey, f: &FpMorphism);
}

struct Registry {
    max_strands: RwLock<u32>,
    jw: Mutex<HashMap<u32, Arc<QMorphism>>>,
    pq: Mutex<HashMap<(u64, u64), Arc<QMorphism>>>,
    pf: Mutex<HashMap<(u64, u64), Arc<FpMorphism>>>,
    store: RwLock<Option<Arc<dyn ProjectorStore>>>,
}

fn registry() -> &'static Registry {
    static R: OnceLock<Registry> = OnceLock::new();
    R.get_or_init(|| Registry {
        max_strands: RwLock::new(DEFAULT_MAX_STRANDS),
        jw: Mutex::new(HashMap::new()),
        pq: Mutex::new(HashMap::new()),
        pf: Mutex::new(HashMap::new()),
        store: RwLock::new(None),
    })
}

pub fn set_max_strands(n: u32) {
    *registry().max_strands.write().unwrap() = n.min(MAX_POINTS as u32 / 2);
}

pub fn max_strands() -> u32 {
    *registry().max_strands.read().unwrap()
}

/// Installs (or removes) the persistent store consulted by the projector memo.
pub fn set_store(store: Option<Arc<dyn ProjectorStore>>) {
    *registry().store.write().unwrap() = store;
}

fn store() -> Option<Arc<dyn ProjectorStore>> {
    registry().store.read().unwrap().clone()
}

fn check_strands(n: u64) -> Result<(), ProjError> {
    let limit = max_strands();
    if n > limit as u64 {
        return Err(ProjError::TooManyStrands { strands: n, limit });
    }
    Ok(())
}

/// The Jones–Wenzl projector on `n` strands.
pub fn jw(n: u32) -> Result<Arc<QMorphism>, ProjError> {
    check_strands(n as u64)?;
    Ok(jw_unchecked(n))
}

fn jw_unchecked(n: u32) -> Arc<QMorphism> {
    if let Some(f) = registry().jw.lock().unwrap().get(&n) {
        return f.clone();
    }
    let key = ProjectorKey { kind: ProjectorKind::Jw, v: n as u64 + 1, p: None };
    let st = store();
    let built = st.as_ref().and_then(|s| s.load_q(&key)).filter(|f| f.source() == n && f.target() == n);
    let f = match built {
        Some(f) => f,
        None => {
            let f = build_jw(n);
            if let Some(s) = &st {
                s.store_q(&key, &f);
            }
            f
        }
    };
    let f = Arc::new(f);
    registry().jw.lock().unwrap().entry(n).or_insert_with(|| f.clone()).clone()
}

// JW_n = (1⊗JW_{n-1}) + (n-1)/n · (1⊗JW_{n-1}) e_1 (1⊗JW_{n-1})
fn build_jw(n: u32) -> QMorphism {
    if n <= 1 {
        return QMorphism::identity(Rationals, n);
    }
    let prev = jw_unchecked(n - 1);
    let wide = QMorphism::identity(Rationals, 1).tensor(&prev).expect("widths fit");
    let cap_cup = e_first(n);
    let a = wide.then_diagram(&cap_cup).expect("shapes agree");
    let b = a.apply_on_top(1, &prev, true).expect("shapes agree");
    let mut out = wide;
    out.add_scaled(&b, &Rational::new(n as i64 - 1, n as i64)).expect("shapes agree");
    out
}

/// `e_1` on `n` strands: a cap on strands 1,2 below a cup on strands 1,2.
fn e_first(n: u32) -> Matching {
    let mut p = [0u8; MAX_POINTS];
    let n = n as usize;
    p[0] = 1;
    p[1] = 0;
    p[n] = (n + 1) as u8;
    p[n + 1] = n as u8;
    for i in 2..n {
        p[i] = (n + i) as u8;
        p[n + i] = i as u8;
    }
    Matching::from_partner_slice(n as u32, n as u32, &p).expect("e_1 is planar")
}

/// One step of a factorized morphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    /// `id_offset ⊗ JW_size ⊗ id` on the current top strands.
    Jw { offset: u32, size: u32 },
    /// A single diagram.
    Diagram(Matching),
}

impl Factor {
    fn reflect(&self) -> Factor {
        match self {
            Factor::Jw { .. } => self.clone(),
            Factor::Diagram(d) => Factor::Diagram(d.reflect()),
        }
    }

    fn shift(&self, a: u32) -> Factor {
        match self {
            Factor::Jw { offset, size } => Factor::Jw { offset: offset + a, size: *size },
            Factor::Diagram(d) => Factor::Diagram(Matching::identity(a).tensor(d).expect("widths fit")),
        }
    }
}

/// A scalar times a composite of factors, applied first to last.
#[derive(Clone, Debug)]
pub struct Chain {
    pub coeff: Rational,
    pub factors: Vec<Factor>,
}

fn reflect_factors(f: &[Factor]) -> Vec<Factor> {
    f.iter().rev().map(Factor::reflect).collect()
}

fn apply_factors(x: &QMorphism, factors: &[Factor]) -> Result<QMorphism, ProjError> {
    let mut cur = x.clone();
    for f in factors {
        if cur.is_zero() {
            if let Factor::Diagram(d) = f {
                cur = QMorphism::zero(Rationals, cur.source(), d.target());
            }
            continue;
        }
        cur = match f {
            Factor::Jw { size, .. } if *size <= 1 => cur,
            Factor::Jw { offset, size } => cur.apply_on_top(*offset, &jw_unchecked(*size), true)?,
            Factor::Diagram(d) => cur.then_diagram(d)?,
        };
    }
    Ok(cur)
}

/// A linear combination of chains acting on `width` strands.
#[derive(Clone, Debug)]
pub struct ChainSum {
    pub width: u32,
    pub chains: Vec<Chain>,
}

impl ChainSum {
    /// `self ∘ x`.
    pub fn apply(&self, x: &QMorphism) -> Result<QMorphism, ProjError> {
        if x.target() != self.width {
            return Err(ProjError::Shape { found: (x.source(), x.target()), expected: (x.source(), self.width) });
        }
        let mut out: Option<QMorphism> = None;
        for c in &self.chains {
            let y = apply_factors(x, &c.factors)?;
            match &mut out {
                Some(o) => o.add_scaled(&y, &c.coeff)?,
                None => out = Some(y.scale(&c.coeff)),
            }
        }
        Ok(out.unwrap_or_else(|| QMorphism::zero(Rationals, x.source(), self.width)))
    }

    /// `x ∘ self`.
    pub fn apply_right(&self, x: &QMorphism) -> Result<QMorphism, ProjError> {
        Ok(self.reflect().apply(&x.reflect())?.reflect())
    }

    /// `id_a ⊗ self`.
    pub fn shifted(&self, a: u32) -> ChainSum {
        ChainSum {
            width: self.width + a,
            chains: self
                .chains
                .iter()
                .map(|c| Chain { coeff: c.coeff.clone(), factors: c.factors.iter().map(|f| f.shift(a)).collect() })
                .collect(),
        }
    }

    pub fn reflect(&self) -> ChainSum {
        ChainSum {
            width: self.width,
            chains: self
                .chains
                .iter()
                .map(|c| Chain { coeff: c.coeff.clone(), factors: reflect_factors(&c.factors) })
                .collect(),
        }
    }

    /// `self ∘ x` for `x` over 𝔽_p, computed through an integral lift.
    pub fn apply_fp(&self, x: &FpMorphism) -> Result<FpMorphism, ProjError> {
        let field = *x.ring();
        let y = self.apply(&x.lift())?;
        Ok(y.specialize(field)?)
    }

    /// `x ∘ self` for `x` over 𝔽_p.
    pub fn apply_fp_right(&self, x: &FpMorphism) -> Result<FpMorphism, ProjError> {
        let field = *x.ring();
        let y = self.apply_right(&x.lift())?;
        Ok(y.specialize(field)?)
    }

    pub fn to_morphism(&self) -> Result<QMorphism, ProjError> {
        self.apply(&QMorphism::identity(Rationals, self.width))
    }
}

fn ctx(v: u64, p: u64) -> Result<PadicContext, ProjError> {
    Ok(PadicContext::new(v, p)?)
}

/// The cap diagram `d_i` at `v`, or `None` when the digit is zero.
fn cap_step(u: u64, p: u64, i: u32) -> Option<(Matching, u64, u32, u32)> {
    let pi = p.pow(i);
    let a = (u / pi) % p;
    if a == 0 {
        return None;
    }
    let c = (a * pi) as usize;
    let x = (u % pi) as usize;
    let total = (u - 1) as usize;
    let w = total - x - 2 * c;
    let target = x + w;
    let mut q = [0u8; MAX_POINTS];
    for t in 0..x {
        q[t] = (total + t) as u8;
        q[total + t] = t as u8;
    }
    for j in 0..c {
        q[x + j] = (x + 2 * c - 1 - j) as u8;
        q[x + 2 * c - 1 - j] = (x + j) as u8;
    }
    for t in 0..w {
        q[x + 2 * c + t] = (total + x + t) as u8;
        q[total + x + t] = (x + 2 * c + t) as u8;
    }
    let d = Matching::from_partner_slice(total as u32, target as u32, &q).expect("cap bundle is planar");
    Some((d, u - 2 * c as u64, (x + c) as u32, (c + w) as u32))
}

/// Trapeze factors for `S` at `v` without the closing JW, and `v[S]`.
fn down_factors(v: u64, p: u64, s: DigitSet) -> Result<(Vec<Factor>, u64), ProjError> {
    let c = ctx(v, p)?;
    c.check_down_admissible(s)?;
    let mut u = v;
    let mut out = Vec::new();
    for i in s.to_vec_desc() {
        if let Some((d, next, offset, size)) = cap_step(u, p, i) {
            out.push(Factor::Jw { offset, size });
            out.push(Factor::Diagram(d));
            u = next;
        }
    }
    Ok((out, u))
}

/// `d_S` at `v`: `(v−1) → (v[S]−1)`.
pub fn cap_bundle(v: u64, s: DigitSet, p: u64) -> Result<Matching, ProjError> {
    let c = ctx(v, p)?;
    c.check_down_admissible(s)?;
    check_strands(v - 1)?;
    let mut d = Matching::identity((v - 1) as u32);
    let mut u = v;
    for i in s.to_vec_desc() {
        if let Some((step, next, _, _)) = cap_step(u, p, i) {
            d = step.compose(&d)?.0;
            u = next;
        }
    }
    Ok(d)
}

/// `u_S` at `v` for `S` up-admissible: `(v−1) → (v(S)−1)`.
pub fn cup_bundle(v: u64, s: DigitSet, p: u64) -> Result<Matching, ProjError> {
    let up = ctx(v, p)?.reflect_up(s)?;
    Ok(cap_bundle(up, s, p)?.reflect())
}

/// The trapeze `(v−1) → (v[S]−1)` for down-admissible `S`.
pub fn trapeze_down(v: u64, s: DigitSet, p: u64) -> Result<QMorphism, ProjError> {
    trapeze_down_chain(v, s, p)?.to_morphism()
}

/// The down trapeze in factored form.
pub fn trapeze_down_chain(v: u64, s: DigitSet, p: u64) -> Result<ChainSum, ProjError> {
    check_strands(v - 1)?;
    let (mut f, vs) = down_factors(v, p, s)?;
    f.push(Factor::Jw { offset: 0, size: (vs - 1) as u32 });
    Ok(ChainSum { width: (v - 1) as u32, chains: vec![Chain { coeff: Rational::one(), factors: f }] })
}

/// The trapeze `(v−1) → (v(S)−1)` for up-admissible `S`.
pub fn trapeze_up(v: u64, s: DigitSet, p: u64) -> Result<QMorphism, ProjError> {
    let up = ctx(v, p)?.reflect_up(s)?;
    Ok(trapeze_down(up, s, p)?.reflect())
}

fn loop_factors(v: u64, p: u64, s: DigitSet) -> Result<Vec<Factor>, ProjError> {
    let (down, vs) = down_factors(v, p, s)?;
    let mut f = down.clone();
    f.push(Factor::Jw { offset: 0, size: (vs - 1) as u32 });
    f.extend(reflect_factors(&down));
    Ok(f)
}

/// The standard loop for down-admissible `S` at `v`.
pub fn standard_loop(v: u64, s: DigitSet, p: u64) -> Result<QMorphism, ProjError> {
    check_strands(v - 1)?;
    let f = loop_factors(v, p, s)?;
    ChainSum { width: (v - 1) as u32, chains: vec![Chain { coeff: Rational::one(), factors: f }] }.to_morphism()
}

/// The scalar attached to a down-admissible set in the closed projector formula.
pub fn lambda_scalar(v: u64, s: DigitSet, p: u64) -> Result<Rational, ProjError> {
    let c = ctx(v, p)?;
    c.check_down_admissible(s)?;
    let mut out = Rational::one();
    for i in s.iter() {
        let a = c.digit(i) * p.pow(i);
        let num = negate_digits(c.fancest(i as i64 - 1) as i64, p, s);
        let den = negate_digits(c.fancest(i as i64) as i64, p, s);
        let mut f = Rational::new(num, den);
        if a % 2 == 1 {
            f = -f;
        }
        out = &out * &f;
    }
    Ok(out)
}

/// The closed-form rational p-JW projector as a sum of loop chains.
pub fn pqjw_chains(v: u64, p: u64) -> Result<ChainSum, ProjError> {
    check_strands(v - 1)?;
    let c = ctx(v, p)?;
    let mut chains = Vec::new();
    for s in c.down_admissible_sets() {
        chains.push(Chain { coeff: lambda_scalar(v, s, p)?, factors: loop_factors(v, p, s)? });
    }
    Ok(ChainSum { width: (v - 1) as u32, chains })
}

/// The mother-recursion form of the rational p-JW projector as chains.
pub fn pqjw_recursive_chains(v: u64, p: u64) -> Result<ChainSum, ProjError> {
    check_strands(v - 1)?;
    let c = ctx(v, p)?;
    let width = (v - 1) as u32;
    let Some(m) = c.mother() else {
        return Ok(ChainSum {
            width,
            chains: vec![Chain { coeff: Rational::one(), factors: vec![Factor::Jw { offset: 0, size: width }] }],
        });
    };
    let a = (v - m) as u32;
    let mc = ctx(m, p)?;
    let mut chains = Vec::new();
    for s in mc.down_admissible_sets() {
        let lam = lambda_scalar(m, s, p)?;
        let (down, ms) = down_factors(m, p, s)?;
        let down: Vec<Factor> = down.iter().map(|f| f.shift(a)).collect();
        let up = reflect_factors(&down);
        let inner = Factor::Jw { offset: a, size: (ms - 1) as u32 };
        let vs = ms + a as u64;
        let mut first = down.clone();
        first.extend([inner.clone(), Factor::Jw { offset: 0, size: (vs - 1) as u32 }, inner.clone()]);
        first.extend(up.clone());
        chains.push(Chain { coeff: lam.clone(), factors: first });

        let r = (vs - 1) as u32 - 2 * a;
        let caps = nested_caps(a, r);
        let mut second = down;
        second.extend([
            inner.clone(),
            Factor::Diagram(caps),
            Factor::Jw { offset: 0, size: r },
            Factor::Diagram(caps.reflect()),
            inner,
        ]);
        second.extend(up);
        let mut coeff = &lam * &Rational::new(vs as i64 - 2 * a as i64, ms as i64);
        if a % 2 == 1 {
            coeff = -coeff;
        }
        chains.push(Chain { coeff, factors: second });
    }
    Ok(ChainSum { width, chains })
}

/// `a` nested caps joining strands `i` and `2a−1−i`, beside `r` through strands.
fn nested_caps(a: u32, r: u32) -> Matching {
    let (a, r) = (a as usize, r as usize);
    let total = 2 * a + r;
    let mut q = [0u8; MAX_POINTS];
    for i in 0..a {
        q[i] = (2 * a - 1 - i) as u8;
        q[2 * a - 1 - i] = i as u8;
    }
    for t in 0..r {
        q[2 * a + t] = (total + t) as u8;
        q[total + t] = (2 * a + t) as u8;
    }
    Matching::from_partner_slice(total as u32, r as u32, &q).expect("nested caps are planar")
}

/// The rational p-JW projector from its closed formula, memoized.
pub fn pqjw_closed(v: u64, p: u64) -> Result<Arc<QMorphism>, ProjError> {
    check_strands(v - 1)?;
    if let Some(f) = registry().pq.lock().unwrap().get(&(v, p)) {
        return Ok(f.clone());
    }
    let key = ProjectorKey { kind: ProjectorKind::PjwRational, v, p: Some(p) };
    let st = store();
    let f = match st.as_ref().and_then(|s| s.load_q(&key)) {
        Some(f) if f.source() as u64 == v - 1 => f,
        _ => {
            let f = pqjw_chains(v, p)?.to_morphism()?;
            if let Some(s) = &st {
                s.store_q(&key, &f);
            }
            f
        }
    };
    let f = Arc::new(f);
    Ok(registry().pq.lock().unwrap().entry((v, p)).or_insert_with(|| f.clone()).clone())
}

/// The rational p-JW projector from the mother recursion (not memoized).
pub fn pqjw_recursive(v: u64, p: u64) -> Result<QMorphism, ProjError> {
    pqjw_recursive_chains(v, p)?.to_morphism()
}

/// The p-JW projector over 𝔽_p, memoized.
pub fn pjw(v: u64, p: u64) -> Result<Arc<FpMorphism>, ProjError> {
    check_strands(v - 1)?;
    if let Some(f) = registry().pf.lock().unwrap().get(&(v, p)) {
        return Ok(f.clone());
    }
    let key = ProjectorKey { kind: ProjectorKind::PjwModular, v, p: Some(p) };
    let st = store();
    let f = match st.as_ref().and_then(|s| s.load_fp(&key)) {
        Some(f) if f.source() as u64 == v - 1 && f.ring().prime() == p => f,
        _ => {
            let q = pqjw_closed(v, p)?;
            let ord = q.ord(p)?;
            if let PValuation::Finite(o) = ord {
                if o < 0 {
                    return Err(ProjError::NotPAdmissible { v, p, ord: o });
                }
            }
            let f = q.specialize(PrimeField::new(p)?)?;
            if let Some(s) = &st {
                s.store_fp(&key, &f);
            }
            f
        }
    };
    let f = Arc::new(f);
    Ok(registry().pf.lock().unwrap().entry((v, p)).or_insert_with(|| f.clone()).clone())
}

/// `pjw(v) ∘ x` computed through the chain form, without building `pjw(v)`.
pub fn pjw_after(v: u64, p: u64, x: &FpMorphism) -> Result<FpMorphism, ProjError> {
    pqjw_chains(v, p)?.apply_fp(x)
}

/// `x ∘ pjw(v)` computed through the chain form.
pub fn pjw_before(v: u64, p: u64, x: &FpMorphism) -> Result<FpMorphism, ProjError> {
    pqjw_chains(v, p)?.apply_fp_right(x)
}

/// Partial trace of `pjw(v)` over the bundle of its first nonzero digit.
pub fn trace_first_digit(v: u64, p: u64) -> Result<FpMorphism, ProjError> {
    let c = ctx(v, p)?;
    let s = c.digits().iter().position(|&d| d != 0).expect("v > 0") as u32;
    let k = (c.digit(s) * p.pow(s)) as u32;
    Ok(pjw(v, p)?.partial_trace(k)?)
}

/// A p-morphism label: `S` down-admissible for `w`, `S′` down-admissible for `v`, `w[S] = v[S′]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PMorphismLabel {
    pub v: u64,
    pub w: u64,
    /// Cups, a down-admissible set for `w`.
    pub up: DigitSet,
    /// Caps, a down-admissible set for `v`.
    pub down: DigitSet,
}

impl PMorphismLabel {
    pub fn new(v: u64, w: u64, up: DigitSet, down: DigitSet, p: u64) -> Result<Self, ProjError> {
        let a = ctx(w, p)?.reflect_down(up)?;
        let b = ctx(v, p)?.reflect_down(down)?;
        if a != b {
            return Err(ProjError::LabelMismatch { up: a, down: b });
        }
        Ok(PMorphismLabel { v, w, up, down })
    }

    /// The value `w[S] = v[S′]` of the through object.
    pub fn middle(&self, p: u64) -> u64 {
        ctx(self.v, p).and_then(|c| Ok(c.reflect_down(self.down)?)).expect("label is valid")
    }

    /// The single diagram `u_S d_{S′}`.
    pub fn diagram(&self, p: u64) -> Result<Matching, ProjError> {
        let d = cap_bundle(self.v, self.down, p)?;
        let u = cap_bundle(self.w, self.up, p)?.reflect();
        Ok(u.compose(&d)?.0)
    }
}

impl fmt::Display for PMorphismLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}→{} up{} down{}", self.v - 1, self.w - 1, self.up, self.down)
    }
}

/// All p-morphism labels from `v−1` to `w−1`, by decreasing through-degree.
pub fn p_morphism_labels(v: u64, w: u64, p: u64) -> Result<Vec<PMorphismLabel>, ProjError> {
    let (cv, cw) = (ctx(v, p)?, ctx(w, p)?);
    let mut by_value: BTreeMap<u64, DigitSet> = BTreeMap::new();
    for s in cv.down_admissible_sets() {
        by_value.insert(cv.reflect_down(s)?, s);
    }
    let mut out = Vec::new();
    for s in cw.down_admissible_sets() {
        let x = cw.reflect_down(s)?;
        if let Some(&sp) = by_value.get(&x) {
            out.push((x, PMorphismLabel { v, w, up: s, down: sp }));
        }
    }
    out.sort_by(|a, b| b.0.cmp(&a.0));
    Ok(out.into_iter().map(|(_, l)| l).collect())
}

/// `pjw(w) ∘ u_S ∘ d_{S′} ∘ pjw(v)` over 𝔽_p.
pub fn p_morphism(label: &PMorphismLabel, p: u64) -> Result<FpMorphism, ProjError> {
    let d = label.diagram(p)?;
    let x = pjw(label.v, p)?.then_diagram(&d)?;
    pjw_after(label.w, p, &x)
}

/// `pqjw(w) ∘ u_S ∘ d_{S′} ∘ pqjw(v)` over ℚ.
pub fn p_morphism_q(label: &PMorphismLabel, p: u64) -> Result<QMorphism, ProjError> {
    let d = label.diagram(p)?;
    let x = pqjw_closed(label.v, p)?.then_diagram(&d)?;
    pqjw_chains(label.w, p)?.apply(&x)
}

/// Coefficients of `f` in the p-morphism basis from `v−1` to `w−1`.
///
/// `f` is first sandwiched between the two projectors.
pub fn expand_in_p_morphisms(
    f: &FpMorphism,
    v: u64,
    w: u64,
    p: u64,
) -> Result<BTreeMap<PMorphismLabel, FpScalar>, ProjError> {
    let expected = ((v - 1) as u32, (w - 1) as u32);
    if (f.source(), f.target()) != expected {
        return Err(ProjError::Shape { found: (f.source(), f.target()), expected });
    }
    let field = *f.ring();
    let sandwiched = pjw_after(w, p, &pjw_before(v, p, f)?)?;
    expand_sandwiched(sandwiched, v, w, p, field)
}

/// As [`expand_in_p_morphisms`] for a morphism already of the form `pjw(w) ∘ g ∘ pjw(v)`.
pub fn expand_sandwiched(
    mut rest: FpMorphism,
    v: u64,
    w: u64,
    p: u64,
    field: PrimeField,
) -> Result<BTreeMap<PMorphismLabel, FpScalar>, ProjError> {
    let mut out = BTreeMap::new();
    for label in p_morphism_labels(v, w, p)? {
        let d = label.diagram(p)?;
        let c = rest.coeff(&d);
        if c == 0 {
            continue;
        }
        let basis = p_morphism(&label, p)?;
        let lead = basis.coeff(&d);
        let scale = field.scalar(c).checked_div(field.scalar(lead))?;
        rest.add_scaled(&basis, &field.elem(-scale))?;
        out.insert(label, scale);
    }
    if !rest.is_zero() {
        return Err(ProjError::ExpansionResidue { terms: rest.len() });
    }
    Ok(out)
}

/// Whether every cap of a cap-only configuration on `v−1` strands is
/// centred just right of `v − a` strands for an ancestor `a` of `v`.
pub fn is_ancestor_centered(config: &Matching, v: u64, p: u64) -> Result<bool, ProjError> {
    let c = ctx(v, p)?;
    let m = config.source() as usize;
    let partners = config.partner_table();
    if (m..partners.len()).any(|t| partners[t] >= m) {
        return Err(ProjError::NotCapOnly);
    }
    // doubled centres: (i + j) for 1-based cap ends i, j
    let centres: Vec<u64> = c.ancestry().ancestors.iter().map(|a| 2 * (v - a) + 1).collect();
    Ok((0..m).filter(|&i| partners[i] < m && i < partners[i]).all(|i| centres.contains(&((i + partners[i] + 2) as u64))))
}

/// Every cap-only configuration with `n` bottom strands.
pub fn cap_configurations(n: u32) -> Vec<Matching> {
    (0..=n)
        .rev()
        .step_by(2)
        .flat_map(|t| crate::tldiag::enumerate_matchings(n, t))
        .filter(|d| d.through_degree() == d.target())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::pval;

    fn set(xs: &[u32]) -> DigitSet {
        DigitSet::from_positions(xs.iter().copied())
    }

    fn from_msd(d: &[u64], p: u64) -> u64 {
        d.iter().fold(0, |acc, &x| acc * p + x)
    }

    fn e(n: u32) -> QMorphism {
        QMorphism::from_matching(Rationals, e_first(n))
    }

    #[test]
    fn jw_small() {
        assert_eq!(*jw(1).unwrap(), QMorphism::identity(Rationals, 1));
        let mut expect = QMorphism::identity(Rationals, 2);
        expect.add_scaled(&e(2), &Rational::new(1, 2)).unwrap();
        assert_eq!(*jw(2).unwrap(), expect);
        assert_eq!(jw(3).unwrap().len(), 5);
    }

    #[test]
    fn jw_idempotent_and_cap_killed() {
        for n in 1..=7 {
            let j = jw(n).unwrap();
            assert_eq!(j.compose(&j).unwrap(), *j, "n={n}");
            assert_eq!(j.through_degree().unwrap(), n);
        }
        for n in 2..=10u32 {
            let j = jw(n).unwrap();
            for i in 0..n - 1 {
                let cap = Matching::identity(i).tensor(&Matching::cap()).unwrap().tensor(&Matching::identity(n - 2 - i)).unwrap();
                assert!(j.then_diagram(&cap).unwrap().is_zero(), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn jw_trace() {
        let t = jw(2).unwrap().partial_trace(1).unwrap();
        assert_eq!(t, QMorphism::identity(Rationals, 1).scale(&Rational::new(-3, 2)));
    }

    #[test]
    fn lambda_examples() {
        let v = from_msd(&[1, 2, 6, 4, 0, 6, 6], 7);
        let l = lambda_scalar(v, set(&[5, 3, 2, 1, 0]), 7).unwrap();
        assert_eq!(l, Rational::new(485105, 689087));
        assert_eq!(pval(&l, 7).unwrap(), PValuation::Finite(-5));
        assert_eq!(lambda_scalar(v, DigitSet::EMPTY, 7).unwrap(), Rational::one());
        assert_eq!(lambda_scalar(5, set(&[0]), 3).unwrap(), Rational::new(1, 3));
    }

    #[test]
    fn cap_bundle_layout() {
        // v = <1,1,2>_3 = 14: d_0 has two nested caps at the far left
        let d = cap_bundle(14, set(&[0]), 3).unwrap();
        assert_eq!((d.source(), d.target()), (13, 9));
        let pairs = d.pairs();
        assert!(pairs.contains(&(1, 4)) && pairs.contains(&(2, 3)));
        assert_eq!(cap_bundle(9, DigitSet::EMPTY, 3).unwrap(), Matching::identity(8));
        assert_eq!(cup_bundle(13, set(&[0]), 3).unwrap(), cap_bundle(17, set(&[0]), 3).unwrap().reflect());
    }

    #[test]
    fn eve_projector_is_jw() {
        assert_eq!(*pqjw_closed(9, 3).unwrap(), *jw(8).unwrap());
        assert_eq!(pqjw_recursive(9, 3).unwrap(), *jw(8).unwrap());
    }

    #[test]
    fn closed_equals_recursive_small() {
        for (v, p) in [(5, 3), (4, 3), (7, 3), (3, 2), (5, 2), (6, 2), (7, 2), (8, 5)] {
            assert_eq!(*pqjw_closed(v, p).unwrap(), pqjw_recursive(v, p).unwrap(), "v={v} p={p}");
        }
    }

    #[test]
    fn pjw_idempotent_small() {
        for (v, p) in [(5, 3), (7, 3), (4, 2), (6, 2), (7, 2)] {
            let f = pjw(v, p).unwrap();
            assert_eq!(f.compose(&f).unwrap(), *f, "v={v} p={p}");
            assert_eq!(pjw_after(v, p, &f).unwrap(), *f);
        }
    }

    #[test]
    fn anccent_examples() {
        let left = Matching::from_pairs(12, 6, &[(1, 2), (3, 6), (4, 5), (7, 13), (8, 14), (9, 15), (10, 16), (11, 17), (12, 18)]).unwrap();
        assert!(is_ancestor_centered(&left, 13, 3).unwrap());
        let right = Matching::from_pairs(12, 6, &[(1, 2), (4, 7), (5, 6), (3, 13), (8, 14), (9, 15), (10, 16), (11, 17), (12, 18)]).unwrap();
        assert!(!is_ancestor_centered(&right, 13, 3).unwrap());
        assert!(is_ancestor_centered(&Matching::identity(12), 13, 3).unwrap());
        assert_eq!(is_ancestor_centered(&Matching::cup(), 1, 3), Err(ProjError::NotCapOnly));
    }

    #[test]
    fn labels_for_13_17() {
        let labels = p_morphism_labels(13, 17, 3).unwrap();
        let got: Vec<(DigitSet, DigitSet)> = labels.iter().map(|l| (l.up, l.down)).collect();
        assert_eq!(got, vec![(set(&[0]), DigitSet::EMPTY), (set(&[1]), set(&[1, 0]))]);
    }

    #[test]
    fn expansion_of_basis_elements() {
        for (v, w, p) in [(5, 7, 3), (7, 7, 3), (6, 6, 2), (5, 7, 2)] {
            for l in p_morphism_labels(v, w, p).unwrap() {
                let f = p_morphism(&l, p).unwrap();
                let ex = expand_sandwiched(f, v, w, p, PrimeField::new(p).unwrap()).unwrap();
                assert_eq!(ex.len(), 1);
                assert_eq!(ex[&l], FpScalar::one(p));
            }
        }
    }

    #[test]
    fn strand_limit() {
        assert!(matches!(jw(40), Err(ProjError::TooManyStrands { .. })));
    }
}
