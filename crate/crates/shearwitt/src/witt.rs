//! p-typical Witt vectors over finite algebras.
//!
//! Two arithmetic engines are available:
//!
//! * **ghost lift** (default when the ring has an integer lift): components are
//!   lifted to the integer ring, ghost components are computed modulo
//!   `p^(k+n-1)`, combined, and turned back into Witt components by exact
//!   division. This is exact and works for lengths far beyond what the
//!   universal polynomials allow.
//! * **universal polynomials**: the classical sum, product, negation and
//!   Frobenius polynomials over `Z`, memoized per prime in a [`WittPolyCache`].
//!
//! Truncated Witt vectors are dense ([`WittVec`]); Witt vectors with finitely
//! many nonzero nilpotent components are sparse ([`HatWittVec`]).

use crate::ring_base::{make_zmod, Coords, FpkAlgebra, ModTable, RingError};
use crate::zmod_linalg::Zpk;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

/// Environment variable naming a directory for cached universal polynomials.
pub const POLY_CACHE_ENV: &str = "SHEARWITT_POLY_CACHE";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WittError {
    #[error("operands live over different rings")]
    RingMismatch,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("Frobenius of a length-1 vector needs an F_p-algebra")]
    TooShort,
    #[error("universal polynomials for p={p} are capped at length {cap}, requested {n}")]
    LengthCap { p: u64, n: usize, cap: usize },
    #[error("no engine for length {0}: modulus overflows 62 bits")]
    Precision(usize),
    #[error("element is not in the image of V (component 0 is nonzero)")]
    NotInVImage,
    #[error("entry at index {0} is not nilpotent")]
    NotNilpotent(usize),
    #[error("support {support} exceeds the available length {len}")]
    SupportOverflow { support: usize, len: usize },
    #[error("constant check failed: {0}")]
    ConstantCheck(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

// ---------------------------------------------------------------------------
// universal polynomials

/// Sparse polynomial over `Z`. Variable `2i` is `x_i`, `2i+1` is `y_i`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntPoly {
    pub terms: BTreeMap<Vec<u32>, BigInt>,
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly::default()
    }

    pub fn constant(c: BigInt) -> Self {
        let mut p = IntPoly::zero();
        if !c.is_zero() {
            p.terms.insert(vec![], c);
        }
        p
    }

    pub fn var(v: usize) -> Self {
        let mut e = vec![0; v + 1];
        e[v] = 1;
        let mut p = IntPoly::zero();
        p.terms.insert(e, BigInt::one());
        p
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(trim(e)) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &IntPoly) -> IntPoly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &IntPoly) -> IntPoly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), -c.clone());
        }
        r
    }

    pub fn scale(&self, c: &BigInt) -> IntPoly {
        let mut r = IntPoly::zero();
        for (e, v) in &self.terms {
            r.add_term(e.clone(), v * c);
        }
        r
    }

    pub fn mul(&self, o: &IntPoly) -> IntPoly {
        let mut acc: HashMap<Vec<u32>, BigInt> = HashMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let n = e1.len().max(e2.len());
                let e: Vec<u32> = (0..n)
                    .map(|i| e1.get(i).copied().unwrap_or(0) + e2.get(i).copied().unwrap_or(0))
                    .collect();
                *acc.entry(e).or_insert_with(BigInt::zero) += c1 * c2;
            }
        }
        IntPoly {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> IntPoly {
        let mut r = IntPoly::constant(BigInt::one());
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    /// Exact division; panics if some coefficient is not divisible.
    pub fn div_exact(&self, d: &BigInt) -> IntPoly {
        IntPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let (q, r) = c.div_rem(d);
                    assert!(r.is_zero(), "inexact division in universal polynomial");
                    (e.clone(), q)
                })
                .collect(),
        }
    }

    /// Evaluate over `Z`.
    pub fn eval_int(&self, vals: &[BigInt]) -> BigInt {
        let mut s = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= num_traits::pow(vals[v].clone(), k as usize);
                }
            }
            s += t;
        }
        s
    }

    /// Evaluate in a finite algebra.
    pub fn eval(&self, ring: &FpkAlgebra, vals: &[&[u64]]) -> Coords {
        let q = BigInt::from(ring.q());
        let mut powers: HashMap<(usize, u32), Coords> = HashMap::new();
        let mut acc = ring.zero();
        for (e, c) in &self.terms {
            let cm = c.mod_floor(&q).to_u64().expect("reduced coefficient");
            if cm == 0 {
                continue;
            }
            let mut t = ring.from_int(cm as i64);
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pw = powers
                    .entry((v, k))
                    .or_insert_with(|| ring.pow(vals[v], k as u128))
                    .clone();
                t = ring.mul(&t, &pw);
                if ring.is_zero(&t) {
                    break;
                }
            }
            acc = ring.add(&acc, &t);
        }
        acc
    }
}

fn ghost_poly(p: u64, m: usize, var: impl Fn(usize) -> usize) -> IntPoly {
    let mut w = IntPoly::zero();
    for i in 0..=m {
        let t = IntPoly::var(var(i))
            .pow(p.pow((m - i) as u32))
            .scale(&BigInt::from(p).pow(i as u32));
        w = w.add(&t);
    }
    w
}

/// Memoized universal Witt polynomials for one prime.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WittPolyCache {
    pub p: u64,
    pub sum: Vec<IntPoly>,
    pub prod: Vec<IntPoly>,
    pub neg: Vec<IntPoly>,
    /// `frob[n]` is component `n` of `F(x)`, a polynomial in `x_0..x_{n+1}`.
    pub frob: Vec<IntPoly>,
}

/// Default length caps for the universal polynomials.
pub fn default_length_cap(p: u64) -> usize {
    match p {
        2 => 8,
        3 => 6,
        _ => 4,
    }
}

fn cap_overrides() -> &'static Mutex<HashMap<u64, usize>> {
    static CAPS: OnceLock<Mutex<HashMap<u64, usize>>> = OnceLock::new();
    CAPS.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Override the universal-polynomial length cap for `p`.
pub fn set_length_cap(p: u64, cap: usize) {
    cap_overrides().lock().expect("cap lock").insert(p, cap);
}

pub fn length_cap(p: u64) -> usize {
    cap_overrides()
        .lock()
        .expect("cap lock")
        .get(&p)
        .copied()
        .unwrap_or_else(|| default_length_cap(p))
}

impl WittPolyCache {
    fn new(p: u64) -> Self {
        WittPolyCache {
            p,
            ..Default::default()
        }
    }

    fn len(&self) -> usize {
        self.sum.len()
    }

    /// Extend sum, product and negation polynomials to length `n`, and the
    /// Frobenius polynomials to `n - 1` components.
    fn extend_to(&mut self, n: usize) {
        let p = self.p;
        let bp = BigInt::from(p);
        let xv = |i: usize| 2 * i;
        let yv = |i: usize| 2 * i + 1;
        while self.sum.len() < n {
            let m = self.sum.len();
            let wx = ghost_poly(p, m, xv);
            let wy = ghost_poly(p, m, yv);
            let pm = bp.pow(m as u32);
            let recurse = |prev: &[IntPoly], target: IntPoly| -> IntPoly {
                let mut t = target;
                for (i, s) in prev.iter().enumerate() {
                    let term = s.pow(p.pow((m - i) as u32)).scale(&bp.pow(i as u32));
                    t = t.sub(&term);
                }
                t.div_exact(&pm)
            };
            let s = recurse(&self.sum, wx.add(&wy));
            let pr = recurse(&self.prod, wx.mul(&wy));
            let ng = recurse(&self.neg, IntPoly::zero().sub(&wx));
            self.sum.push(s);
            self.prod.push(pr);
            self.neg.push(ng);
        }
        while self.frob.len() + 1 < n {
            let m = self.frob.len();
            let target = ghost_poly(p, m + 1, xv);
            let mut t = target;
            for (i, f) in self.frob.iter().enumerate() {
                let term = f.pow(p.pow((m - i) as u32)).scale(&bp.pow(i as u32));
                t = t.sub(&term);
            }
            self.frob.push(t.div_exact(&bp.pow(m as u32)));
        }
    }

    fn cache_file(p: u64) -> Option<PathBuf> {
        std::env::var_os(POLY_CACHE_ENV).map(|d| PathBuf::from(d).join(format!("witt_polys_p{p}.json")))
    }

    /// Shared cache for `p`, extended to length `n` (within the cap).
    pub fn get(p: u64, n: usize) -> Result<Arc<WittPolyCache>, WittError> {
        let cap = length_cap(p);
        if n > cap {
            return Err(WittError::LengthCap { p, n, cap });
        }
        static REG: OnceLock<Mutex<HashMap<u64, Arc<WittPolyCache>>>> = OnceLock::new();
        let reg = REG.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = reg.lock().expect("poly cache lock");
        if let Some(c) = guard.get(&p) {
            if c.len() >= n {
                return Ok(c.clone());
            }
        }
        let mut c = guard
            .get(&p)
            .map(|c| (**c).clone())
            .or_else(|| {
                let f = Self::cache_file(p)?;
                let s = std::fs::read_to_string(f).ok()?;
                serde_json::from_str::<WittPolyCache>(&s).ok().filter(|c| c.p == p)
            })
            .unwrap_or_else(|| WittPolyCache::new(p));
        if c.len() < n {
            c.extend_to(n);
            if let Some(f) = Self::cache_file(p) {
                if let Ok(s) = serde_json::to_string(&c) {
                    let _ = std::fs::write(f, s);
                }
            }
        }
        let c = Arc::new(c);
        guard.insert(p, c.clone());
        Ok(c)
    }
}

// ---------------------------------------------------------------------------
// ghost engine

fn ghost_components(t: &ModTable, p: u64, x: &[Coords], len: usize) -> Vec<Coords> {
    // pw[i] = x_i^(p^(m-i)) for the current m
    let mut pw: Vec<Coords> = Vec::with_capacity(len);
    let mut out = Vec::with_capacity(len);
    for m in 0..len {
        for v in pw.iter_mut() {
            *v = t.pow(v, p as u128);
        }
        pw.push(x[m].clone());
        let mut w = vec![0u64; t.rank];
        let mut pi: u128 = 1;
        for v in pw.iter() {
            if pi == 0 {
                break;
            }
            w = t.add(&w, &t.scale(pi as u64, v));
            pi = pi * p as u128 % t.q as u128;
        }
        out.push(w);
    }
    out
}

fn unghost(t: &ModTable, p: u64, w: &[Coords], out_q: u64) -> Vec<Coords> {
    let len = w.len();
    let mut z: Vec<Coords> = Vec::with_capacity(len);
    let mut pw: Vec<Coords> = Vec::with_capacity(len);
    for wm in w.iter() {
        for v in pw.iter_mut() {
            *v = t.pow(v, p as u128);
        }
        let mut r = wm.clone();
        let mut pi: u64 = 1;
        for v in pw.iter() {
            r = t.sub(&r, &t.scale(pi, v));
            pi *= p;
        }
        let pm = pi;
        let zm: Coords = r
            .iter()
            .map(|&c| {
                debug_assert!(c % pm == 0, "ghost vector not integral");
                c / pm
            })
            .collect();
        pw.push(zm.clone());
        z.push(zm);
    }
    z.into_iter()
        .map(|v| v.into_iter().map(|c| c % out_q).collect())
        .collect()
}

#[derive(Debug, Clone)]
enum Engine {
    Ghost(Arc<ModTable>),
    Universal(Arc<WittPolyCache>),
}

/// Which arithmetic engine to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EngineKind {
    GhostLift,
    Universal,
}

/// Arithmetic in `W_m(R)` for all `m <= n`.
#[derive(Debug, Clone)]
pub struct WittRing {
    ring: Arc<FpkAlgebra>,
    n: usize,
    engine: Engine,
}

impl WittRing {
    /// Pick the ghost engine when the ring has an integer lift.
    pub fn new(ring: &Arc<FpkAlgebra>, n: usize) -> Result<Self, WittError> {
        if ring.lift().is_some() {
            Self::with_engine(ring, n, EngineKind::GhostLift)
        } else {
            Self::with_engine(ring, n, EngineKind::Universal)
        }
    }

    pub fn with_engine(ring: &Arc<FpkAlgebra>, n: usize, kind: EngineKind) -> Result<Self, WittError> {
        let n = n.max(1);
        let engine = match kind {
            EngineKind::GhostLift => {
                // one extra digit so that Frobenius from length n+1 fits too
                let m = ring.k() + n as u32;
                let t = ring.lifted_table(m).ok_or(WittError::Precision(n))?;
                Engine::Ghost(t)
            }
            EngineKind::Universal => Engine::Universal(WittPolyCache::get(ring.p(), n + 1)?),
        };
        Ok(WittRing {
            ring: ring.clone(),
            n,
            engine,
        })
    }

    pub fn ring(&self) -> &Arc<FpkAlgebra> {
        &self.ring
    }
    pub fn p(&self) -> u64 {
        self.ring.p()
    }
    pub fn max_len(&self) -> usize {
        self.n
    }
    pub fn engine_kind(&self) -> EngineKind {
        match self.engine {
            Engine::Ghost(_) => EngineKind::GhostLift,
            Engine::Universal(_) => EngineKind::Universal,
        }
    }

    fn ghost_table(&self, len: usize) -> Option<&ModTable> {
        match &self.engine {
            Engine::Ghost(t) => {
                debug_assert!(len <= self.n + 1);
                Some(t)
            }
            Engine::Universal(_) => None,
        }
    }

    pub fn zero(&self, len: usize) -> Vec<Coords> {
        vec![self.ring.zero(); len]
    }

    pub fn one(&self, len: usize) -> Vec<Coords> {
        self.teich(&self.ring.one(), len)
    }

    pub fn teich(&self, a: &[u64], len: usize) -> Vec<Coords> {
        let mut v = self.zero(len);
        if len > 0 {
            v[0] = a.to_vec();
        }
        v
    }

    /// The image of an integer.
    pub fn from_int(&self, c: i128, len: usize) -> Vec<Coords> {
        let digits = int_witt(self.p(), self.ring.k(), len, c);
        digits
            .into_iter()
            .map(|d| self.ring.scale(d, &self.ring.one()))
            .collect()
    }

    fn binop(&self, x: &[Coords], y: &[Coords], op: u8) -> Vec<Coords> {
        assert_eq!(x.len(), y.len(), "Witt length mismatch");
        let len = x.len();
        if len == 0 {
            return vec![];
        }
        match &self.engine {
            Engine::Ghost(t) => {
                let gx = ghost_components(t, self.p(), x, len);
                let gy = ghost_components(t, self.p(), y, len);
                let g: Vec<Coords> = gx
                    .iter()
                    .zip(&gy)
                    .map(|(a, b)| if op == 0 { t.add(a, b) } else { t.mul(a, b) })
                    .collect();
                unghost(t, self.p(), &g, self.ring.q())
            }
            Engine::Universal(c) => {
                let polys = if op == 0 { &c.sum } else { &c.prod };
                let mut vals: Vec<&[u64]> = Vec::with_capacity(2 * len);
                for i in 0..len {
                    vals.push(&x[i]);
                    vals.push(&y[i]);
                }
                (0..len).map(|m| polys[m].eval(&self.ring, &vals[..2 * (m + 1)])).collect()
            }
        }
    }

    pub fn add(&self, x: &[Coords], y: &[Coords]) -> Vec<Coords> {
        self.binop(x, y, 0)
    }

    pub fn mul(&self, x: &[Coords], y: &[Coords]) -> Vec<Coords> {
        self.binop(x, y, 1)
    }

    pub fn neg(&self, x: &[Coords]) -> Vec<Coords> {
        let len = x.len();
        match &self.engine {
            Engine::Ghost(t) => {
                let g: Vec<Coords> = ghost_components(t, self.p(), x, len)
                    .iter()
                    .map(|a| t.neg(a))
                    .collect();
                unghost(t, self.p(), &g, self.ring.q())
            }
            Engine::Universal(c) => {
                let mut vals: Vec<&[u64]> = Vec::with_capacity(2 * len);
                let z = self.ring.zero();
                for xi in x.iter() {
                    vals.push(xi);
                    vals.push(&z);
                }
                (0..len).map(|m| c.neg[m].eval(&self.ring, &vals[..2 * (m + 1)])).collect()
            }
        }
    }

    pub fn sub(&self, x: &[Coords], y: &[Coords]) -> Vec<Coords> {
        self.add(x, &self.neg(y))
    }

    /// Multiply by an integer.
    pub fn scale_int(&self, c: i128, x: &[Coords]) -> Vec<Coords> {
        self.mul(&self.from_int(c, x.len()), x)
    }

    pub fn pow(&self, x: &[Coords], mut e: u64) -> Vec<Coords> {
        let mut r = self.one(x.len());
        let mut b = x.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        r
    }

    /// Frobenius `W_{m+1}(R) → W_m(R)` by ghost shift or universal polynomials.
    pub fn frobenius_drop(&self, x: &[Coords]) -> Vec<Coords> {
        let len = x.len();
        assert!(len >= 1);
        let out = len - 1;
        if out == 0 {
            return vec![];
        }
        match &self.engine {
            Engine::Ghost(t) => {
                let g = ghost_components(t, self.p(), x, len);
                unghost(t, self.p(), &g[1..], self.ring.q())
            }
            Engine::Universal(c) => {
                let z = self.ring.zero();
                let mut vals: Vec<&[u64]> = Vec::with_capacity(2 * len);
                for xi in x.iter() {
                    vals.push(xi);
                    vals.push(&z);
                }
                (0..out).map(|m| c.frob[m].eval(&self.ring, &vals[..2 * (m + 2)])).collect()
            }
        }
    }

    /// Frobenius keeping the length; needs an `F_p`-algebra.
    pub fn frobenius(&self, x: &[Coords]) -> Result<Vec<Coords>, WittError> {
        if self.ring.is_fp_algebra() {
            Ok(x.iter().map(|a| self.ring.pow(a, self.p() as u128)).collect())
        } else if x.len() >= 2 {
            Ok(self.frobenius_drop(x))
        } else {
            Err(WittError::TooShort)
        }
    }

    /// Truncated Verschiebung.
    pub fn verschiebung(&self, x: &[Coords]) -> Vec<Coords> {
        let mut v = Vec::with_capacity(x.len());
        if !x.is_empty() {
            v.push(self.ring.zero());
            v.extend_from_slice(&x[..x.len() - 1]);
        }
        v
    }

    /// `u_0` mapped into `W_len(R)`.
    pub fn u0(&self, len: usize) -> Vec<Coords> {
        if self.p() != 2 {
            return self.one(len);
        }
        let digits = u0_digits(self.ring.k(), len);
        digits
            .iter()
            .map(|comp| self.ring.scale(*comp, &self.ring.one()))
            .collect()
    }

    /// Modified Verschiebung `Ṽ(x) = V(u_0·x)`.
    pub fn vtilde(&self, x: &[Coords]) -> Vec<Coords> {
        let u = self.u0(x.len());
        self.verschiebung(&self.mul(&u, x))
    }

    /// `p̃ = p - [p^2]` for `p = 2`, `p` otherwise.
    pub fn ptilde(&self, len: usize) -> Vec<Coords> {
        if self.p() == 2 {
            let four = self.ring.from_int(4);
            self.sub(&self.from_int(2, len), &self.teich(&four, len))
        } else {
            self.from_int(self.p() as i128, len)
        }
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<Coords> {
        (0..len).map(|_| self.ring.random(rng)).collect()
    }

    /// Ghost components in the integer lift modulo `p^m`.
    pub fn ghost_mod(&self, x: &[Coords], m: u32) -> Option<Vec<Coords>> {
        let t = self.ring.lifted_table(m)?;
        Some(ghost_components(&t, self.p(), x, x.len()))
    }

    pub fn is_ghost_engine(&self, len: usize) -> bool {
        self.ghost_table(len).is_some()
    }
}

/// Witt components (as residues mod `p^k`) of the integer `c` in `W_len(Z/p^k)`.
pub fn int_witt(p: u64, k: u32, len: usize, c: i128) -> Vec<u64> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32, usize, i128), Vec<u64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("lock").get(&(p, k, len, c)) {
        return v.clone();
    }
    let z = make_zmod(p, k).expect("Z/p^k");
    let m = k + len as u32;
    let t = z.lifted_table(m).expect("Z/p^k lift");
    let cm = t.q as i128;
    let cr = c.rem_euclid(cm) as u64;
    let g: Vec<Coords> = (0..len).map(|_| vec![cr]).collect();
    let v: Vec<u64> = unghost(&t, p, &g, z.q()).into_iter().map(|d| d[0]).collect();
    cache.lock().expect("lock").insert((p, k, len, c), v.clone());
    v
}

/// Components of `u_0` in `W_len(Z/2^k)`: `V(u_0) = 2 - [2]`.
pub fn u0_digits(k: u32, len: usize) -> Vec<u64> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, usize), Vec<u64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("lock").get(&(k, len)) {
        return v.clone();
    }
    let v = u0_digits_uncached(k, len);
    cache.lock().expect("lock").insert((k, len), v.clone());
    v
}

fn u0_digits_uncached(k: u32, len: usize) -> Vec<u64> {
    let z = make_zmod(2, k).expect("Z/2^k");
    let w = WittRing::new(&z, len + 1).expect("ghost engine");
    let two = w.from_int(2, len + 1);
    let t2 = w.teich(&[2 % z.q()], len + 1);
    let d = w.sub(&two, &t2);
    debug_assert!(d[0][0] == 0);
    d[1..].iter().map(|c| c[0]).collect()
}

/// The constants attached to the modified Verschiebung, over `Z/p^k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WittConstants {
    pub p: u64,
    pub n: usize,
    pub k: u32,
    pub u0: Vec<u64>,
    pub alpha: Vec<u64>,
    pub ptilde: Vec<u64>,
}

fn alpha_at(z: &Arc<FpkAlgebra>, len: usize) -> Result<Vec<Coords>, WittError> {
    // α = Π F^m(u0); F^m(u0) at length len needs u0 at length len + m
    let base = WittRing::new(z, len)?;
    let mut acc = base.one(len);
    for m in 0.. {
        let w = WittRing::new(z, len + m + 1)?;
        let mut f = w.u0(len + m);
        for _ in 0..m {
            f = w.frobenius_drop(&f);
        }
        if m > 0 && f == base.one(len) {
            return Ok(acc);
        }
        acc = base.mul(&acc, &f);
    }
    unreachable!()
}

/// Compute and verify `u_0`, `α` and `p̃` in `W_n(Z/p^k)`.
pub fn compute_u0_alpha_ptilde(p: u64, n: usize, k: u32) -> Result<WittConstants, WittError> {
    if n < 1 {
        return Err(WittError::ConstantCheck("precision must be at least 1".into()));
    }
    let z = make_zmod(p, k)?;
    let w = WittRing::new(&z, n + 2)?;
    let digits = |v: &[Coords]| v.iter().map(|c| c[0]).collect::<Vec<u64>>();
    let u0 = w.u0(n);
    // V(u0) = p - [p] at p = 2; u0 = 1 otherwise
    if p == 2 {
        let lhs = w.verschiebung(&w.u0(n + 1));
        let rhs = w.sub(&w.from_int(p as i128, n + 1), &w.teich(&[p % z.q()], n + 1));
        if lhs != rhs {
            return Err(WittError::ConstantCheck("V(u0) != p - [p]".into()));
        }
    } else if u0 != w.one(n) {
        return Err(WittError::ConstantCheck("u0 != 1".into()));
    }
    let ptilde = w.ptilde(n);
    let f_vt = w.frobenius_drop(&w.vtilde(&w.one(n + 1)));
    if f_vt != ptilde {
        return Err(WittError::ConstantCheck("F(Ṽ(1)) != p̃".into()));
    }
    let alpha = alpha_at(&z, n)?;
    let alpha1 = alpha_at(&z, n + 1)?;
    if w.mul(&u0, &w.frobenius_drop(&alpha1)) != alpha {
        return Err(WittError::ConstantCheck("alpha != u0 * F(alpha)".into()));
    }
    Ok(WittConstants {
        p,
        n,
        k,
        u0: digits(&u0),
        alpha: digits(&alpha),
        ptilde: digits(&ptilde),
    })
}

// ---------------------------------------------------------------------------
// divided powers

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, b| a * b)
}

fn vp_big(p: u64, x: &BigInt) -> u32 {
    let bp = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    while !y.is_zero() && (&y % &bp).is_zero() {
        y /= &bp;
        v += 1;
    }
    v
}

/// The integer `num/den` as a residue modulo `p^prec`, where `den` may carry
/// powers of `p` as long as the quotient is `p`-integral.
fn p_integral_ratio(p: u64, num: &BigInt, den: &BigInt, prec: u32) -> i128 {
    let vn = vp_big(p, num);
    let vd = vp_big(p, den);
    assert!(vn >= vd, "ratio is not p-integral");
    let bp = BigInt::from(p);
    let nu = num / bp.pow(vn);
    let du = den / bp.pow(vd);
    let z = Zpk::new(p, prec);
    let q = BigInt::from(z.q);
    let nr = nu.mod_floor(&q).to_u64().unwrap();
    let dr = du.mod_floor(&q).to_u64().unwrap();
    let inv = z.inv(dr).expect("unit");
    let pv = z.pow(p, (vn - vd) as u64);
    z.mul(z.mul(nr, inv), pv) as i128
}

/// V-preimage of an element of `V W_n(R)`.
pub fn v_preimage(w: &WittRing, x: &[Coords]) -> Result<Vec<Coords>, WittError> {
    if x.is_empty() {
        return Ok(vec![]);
    }
    if !w.ring().is_zero(&x[0]) {
        return Err(WittError::NotInVImage);
    }
    let mut y: Vec<Coords> = x[1..].to_vec();
    y.push(w.ring().zero());
    Ok(y)
}

/// `γ_m(V(y))` as a V-preimage, assembled from iterated `γ_p` and unit
/// factorial corrections. Requires `u_0 = 1` on the ring or uses `V`.
pub fn divided_gamma_pre(w: &WittRing, m: u64, y: &[Coords]) -> Vec<Coords> {
    let len = y.len();
    let p = w.p();
    if m == 0 {
        return w.one(len); // not a V-preimage; callers special-case γ_0 = 1
    }
    let prec = w.ring().k() + len as u32 + 1;
    // γ_p(V z) = V(c_p z^p)
    let cp = p_integral_ratio(p, &BigInt::from(p).pow(p as u32 - 2), &factorial(p - 1), prec);
    let gamma_p = |z: &[Coords]| w.scale_int(cp, &w.pow(z, p));
    // digits of m in base p
    let mut digits = Vec::new();
    let mut mm = m;
    while mm > 0 {
        digits.push(mm % p);
        mm /= p;
    }
    let mut pre = w.one(len);
    let mut factors = 0u32;
    let mut zj: Vec<Coords> = y.to_vec();
    let mut unit_num = BigInt::one();
    for (j, &a) in digits.iter().enumerate() {
        if j > 0 {
            // γ_{p^j} = [(p^{j-1})!^p p! / (p^j)!] γ_p ∘ γ_{p^{j-1}}
            let pj1 = p.pow(j as u32 - 1);
            let num = factorial(pj1).pow(p as u32) * factorial(p);
            let den = factorial(pj1 * p);
            let c = p_integral_ratio(p, &num, &den, prec);
            zj = w.scale_int(c, &gamma_p(&zj));
        }
        for _ in 0..a {
            pre = w.mul(&pre, &zj);
            factors += 1;
        }
        unit_num *= factorial(p.pow(j as u32)).pow(a as u32);
    }
    // V(a)·V(b) = V(p·a·b)
    let pf = p_integral_ratio(p, &(unit_num * BigInt::from(p).pow(factors - 1)), &factorial(m), prec);
    w.scale_int(pf, &pre)
}

/// `γ_m(x)` for `x` in `V W_n(R)`.
pub fn divided_gamma(w: &WittRing, m: u64, x: &[Coords]) -> Result<Vec<Coords>, WittError> {
    if m == 0 {
        return Ok(w.one(x.len()));
    }
    let y = v_preimage(w, x)?;
    Ok(w.verschiebung(&divided_gamma_pre(w, m, &y)))
}

// ---------------------------------------------------------------------------
// sampled law checks

/// Outcome of a sampled identity check over one ring.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawReport {
    pub check: String,
    pub ring: String,
    pub len: usize,
    pub samples: usize,
    pub failures: usize,
    pub counterexamples: Vec<String>,
}

impl LawReport {
    fn new(check: &str, w: &WittRing, len: usize) -> Self {
        LawReport {
            check: check.into(),
            ring: w.ring().name().to_string(),
            len,
            ..Default::default()
        }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures += 1;
            if self.counterexamples.len() < 8 {
                self.counterexamples.push(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn v_ext(w: &WittRing, x: &[Coords]) -> Vec<Coords> {
    let mut v = vec![w.ring().zero()];
    v.extend_from_slice(x);
    v
}

/// Ring axioms on `W_len(R)`, and `FV = p`, `x·V(y) = V(F(x)y)`, `F[a] = [a^p]`
/// through `W_{len+1}(R) → W_len(R)`. Needs `len + 1 <= w.max_len()`.
pub fn check_witt_laws<G: Rng + ?Sized>(w: &WittRing, len: usize, samples: usize, rng: &mut G) -> LawReport {
    let mut rep = LawReport::new("witt-laws", w, len);
    let r = w.ring();
    let l1 = len + 1;
    let p = w.p() as i128;
    for _ in 0..samples {
        rep.samples += 1;
        let (x, y, z) = (w.random(rng, len), w.random(rng, len), w.random(rng, len));
        let show = |tag: &str| format!("{tag} at x={x:?} y={y:?}");
        rep.expect(w.add(&w.add(&x, &y), &z) == w.add(&x, &w.add(&y, &z)), || show("additive associativity"));
        rep.expect(w.mul(&w.mul(&x, &y), &z) == w.mul(&x, &w.mul(&y, &z)), || show("multiplicative associativity"));
        rep.expect(w.add(&x, &y) == w.add(&y, &x), || show("additive commutativity"));
        rep.expect(w.mul(&x, &y) == w.mul(&y, &x), || show("multiplicative commutativity"));
        rep.expect(
            w.mul(&x, &w.add(&y, &z)) == w.add(&w.mul(&x, &y), &w.mul(&x, &z)),
            || show("distributivity"),
        );
        rep.expect(w.add(&x, &w.zero(len)) == x, || show("zero"));
        rep.expect(w.mul(&x, &w.one(len)) == x, || show("one"));
        rep.expect(w.add(&x, &w.neg(&x)) == w.zero(len), || show("negation"));
        // F, V through one extra component
        let a = w.random(rng, l1);
        let b = w.random(rng, len);
        rep.expect(w.frobenius_drop(&v_ext(w, &b)) == w.scale_int(p, &b), || format!("FV = p at {b:?}"));
        let lhs = w.mul(&a, &v_ext(w, &b));
        let rhs = v_ext(w, &w.mul(&w.frobenius_drop(&a), &b));
        rep.expect(lhs == rhs, || format!("x·V(y) = V(F(x)y) at x={a:?} y={b:?}"));
        let c = r.random(rng);
        rep.expect(
            w.frobenius_drop(&w.teich(&c, l1)) == w.teich(&r.pow(&c, w.p() as u128), len),
            || format!("F[a] = [a^p] at a={}", r.format(&c)),
        );
    }
    rep
}

/// `x·Ṽ(y) = Ṽ(F(x)y)`, `FṼ = p̃` and `ṼF = V(u_0)` on samples, with `Ṽ`
/// lengthening by one component. Needs `len + 1 <= w.max_len()`.
pub fn check_vtilde_identities<G: Rng + ?Sized>(w: &WittRing, len: usize, samples: usize, rng: &mut G) -> LawReport {
    let mut rep = LawReport::new("vtilde-identities", w, len);
    let l1 = len + 1;
    let vt = |x: &[Coords]| v_ext(w, &w.mul(&w.u0(x.len()), x));
    let ptilde = w.ptilde(len);
    let vu0 = v_ext(w, &w.u0(len));
    for _ in 0..samples {
        rep.samples += 1;
        let a = w.random(rng, l1);
        let b = w.random(rng, len);
        rep.expect(
            w.mul(&a, &vt(&b)) == vt(&w.mul(&w.frobenius_drop(&a), &b)),
            || format!("x·Ṽ(y) = Ṽ(F(x)y) at x={a:?} y={b:?}"),
        );
        rep.expect(w.frobenius_drop(&vt(&b)) == w.mul(&ptilde, &b), || format!("FṼ = p̃ at {b:?}"));
        rep.expect(vt(&w.frobenius_drop(&a)) == w.mul(&vu0, &a), || format!("ṼF = V(u0) at {a:?}"));
    }
    rep
}

fn binom_ratio(num: u64, dens: &[u64]) -> i128 {
    let f = factorial(num);
    let d = dens.iter().fold(BigInt::one(), |a, &b| a * factorial(b));
    let (q, r) = f.div_rem(&d);
    debug_assert!(r.is_zero());
    // the coefficients used here stay far below i128
    q.to_i128().expect("small multinomial")
}

/// The divided power formula `(p-1)!·γ_p(V(x)) = p^{p-2}·V(x^p)` and the pd
/// axioms for `γ_m`, `m <= max_m`, on `V W_{len-1}(R) ⊂ W_len(R)`.
pub fn check_divided_powers<G: Rng + ?Sized>(
    w: &WittRing,
    len: usize,
    max_m: u64,
    samples: usize,
    rng: &mut G,
) -> LawReport {
    let mut rep = LawReport::new("divided-powers", w, len);
    let p = w.p();
    let in_ideal = |x: &[Coords]| w.ring().is_zero(&x[0]);
    let g = |m: u64, x: &[Coords]| divided_gamma(w, m, x);
    let pm = |x: &[Coords], e: u64| w.pow(x, e);
    for _ in 0..samples {
        rep.samples += 1;
        let x = w.verschiebung(&w.random(rng, len));
        let y = w.verschiebung(&w.random(rng, len));
        let a = w.random(rng, len);
        let (Ok(gx), Ok(gy), Ok(gax), Ok(gsum)) = (
            (0..=max_m).map(|m| g(m, &x)).collect::<Result<Vec<_>, _>>(),
            (0..=max_m).map(|m| g(m, &y)).collect::<Result<Vec<_>, _>>(),
            (0..=max_m).map(|m| g(m, &w.mul(&a, &x))).collect::<Result<Vec<_>, _>>(),
            (0..=max_m).map(|m| g(m, &w.add(&x, &y))).collect::<Result<Vec<_>, _>>(),
        ) else {
            rep.expect(false, || "γ_m undefined on V-image".into());
            continue;
        };
        // the defining formula
        let pre = v_preimage(w, &x).expect("V-image");
        let lhs = w.scale_int(binom_ratio(p - 1, &[]), &gx[p as usize]);
        let rhs = w.scale_int((p as i128).pow(p as u32 - 2), &w.verschiebung(&pm(&pre, p)));
        rep.expect(lhs == rhs, || format!("(p-1)!γ_p(V(x)) = p^(p-2)V(x^p) at x={x:?}"));
        rep.expect(gx[0] == w.one(len) && gx[1] == x, || format!("γ_0, γ_1 at {x:?}"));
        for m in 1..=max_m as usize {
            rep.expect(in_ideal(&gx[m]), || format!("γ_{m}(x) outside the ideal at {x:?}"));
            let expand = (0..=m).fold(w.zero(len), |acc, i| w.add(&acc, &w.mul(&gx[i], &gy[m - i])));
            rep.expect(gsum[m] == expand, || format!("γ_{m}(x+y) at x={x:?} y={y:?}"));
            rep.expect(
                gax[m] == w.mul(&pm(&a, m as u64), &gx[m]),
                || format!("γ_{m}(ax) at a={a:?} x={x:?}"),
            );
            for j in 1..=max_m as usize - m.min(max_m as usize) {
                let c = binom_ratio((m + j) as u64, &[m as u64, j as u64]);
                rep.expect(
                    w.mul(&gx[m], &gx[j]) == w.scale_int(c, &gx[m + j]),
                    || format!("γ_{m}γ_{j} at {x:?}"),
                );
            }
            for j in 1..=max_m as usize {
                if m * j > max_m as usize {
                    break;
                }
                let Ok(gg) = g(m as u64, &gx[j]) else {
                    rep.expect(false, || format!("γ_{j}(x) outside V-image at {x:?}"));
                    continue;
                };
                let c = binom_ratio((m * j) as u64, &[&[m as u64][..], &vec![j as u64; m]].concat());
                rep.expect(gg == w.scale_int(c, &gx[m * j]), || format!("γ_{m}∘γ_{j} at {x:?}"));
            }
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// dense vectors with ring handle

/// A truncated Witt vector.
#[derive(Clone)]
pub struct WittVec {
    pub ring: Arc<FpkAlgebra>,
    pub comps: Vec<Coords>,
}

impl PartialEq for WittVec {
    fn eq(&self, o: &Self) -> bool {
        (Arc::ptr_eq(&self.ring, &o.ring) || *self.ring == *o.ring) && self.comps == o.comps
    }
}

impl Eq for WittVec {}

impl fmt::Debug for WittVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for WittVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.comps.iter().map(|c| self.ring.format(c)).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl WittVec {
    pub fn new(ring: &Arc<FpkAlgebra>, comps: Vec<Coords>) -> Result<Self, WittError> {
        if comps.is_empty() {
            return Err(WittError::LengthMismatch(0, 1));
        }
        for c in &comps {
            ring.check(c)?;
        }
        Ok(WittVec {
            ring: ring.clone(),
            comps,
        })
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    fn arith(&self) -> Result<WittRing, WittError> {
        WittRing::new(&self.ring, self.len())
    }

    fn compatible(&self, o: &WittVec) -> Result<(), WittError> {
        if !(Arc::ptr_eq(&self.ring, &o.ring) || *self.ring == *o.ring) {
            return Err(WittError::RingMismatch);
        }
        if self.len() != o.len() {
            return Err(WittError::LengthMismatch(self.len(), o.len()));
        }
        Ok(())
    }

    fn wrap(&self, comps: Vec<Coords>) -> WittVec {
        WittVec {
            ring: self.ring.clone(),
            comps,
        }
    }

    pub fn zero(ring: &Arc<FpkAlgebra>, n: usize) -> WittVec {
        WittVec {
            ring: ring.clone(),
            comps: vec![ring.zero(); n],
        }
    }

    pub fn teich(ring: &Arc<FpkAlgebra>, a: &[u64], n: usize) -> WittVec {
        let mut v = Self::zero(ring, n);
        v.comps[0] = a.to_vec();
        v
    }

    pub fn from_int(ring: &Arc<FpkAlgebra>, c: i128, n: usize) -> Result<WittVec, WittError> {
        let w = WittRing::new(ring, n)?;
        Ok(WittVec {
            ring: ring.clone(),
            comps: w.from_int(c, n),
        })
    }

    pub fn add(&self, o: &WittVec) -> Result<WittVec, WittError> {
        self.compatible(o)?;
        Ok(self.wrap(self.arith()?.add(&self.comps, &o.comps)))
    }

    pub fn sub(&self, o: &WittVec) -> Result<WittVec, WittError> {
        self.compatible(o)?;
        Ok(self.wrap(self.arith()?.sub(&self.comps, &o.comps)))
    }

    pub fn mul(&self, o: &WittVec) -> Result<WittVec, WittError> {
        self.compatible(o)?;
        Ok(self.wrap(self.arith()?.mul(&self.comps, &o.comps)))
    }

    pub fn neg(&self) -> Result<WittVec, WittError> {
        Ok(self.wrap(self.arith()?.neg(&self.comps)))
    }

    /// `F`: same length over `F_p`-algebras, one shorter otherwise.
    pub fn frobenius(&self) -> Result<WittVec, WittError> {
        Ok(self.wrap(self.arith()?.frobenius(&self.comps)?))
    }

    pub fn verschiebung(&self) -> WittVec {
        let mut c = vec![self.ring.zero()];
        c.extend_from_slice(&self.comps[..self.len() - 1]);
        self.wrap(c)
    }

    pub fn vtilde(&self) -> Result<WittVec, WittError> {
        Ok(self.wrap(self.arith()?.vtilde(&self.comps)))
    }

    pub fn truncate(&self, n: usize) -> WittVec {
        self.wrap(self.comps[..n.min(self.len())].to_vec())
    }
}

// ---------------------------------------------------------------------------
// sparse vectors with nilpotent entries

/// Least `c` with `p^c >= e`, where `e` is the nilpotency index of `Nil(R)`.
pub fn support_slack(ring: &Arc<FpkAlgebra>) -> usize {
    let e = ring.nilpotency_index() as u128;
    let mut c = 0;
    while (ring.p() as u128).pow(c as u32) < e {
        c += 1;
    }
    c
}

/// A Witt vector with finitely many nonzero components, all nilpotent.
#[derive(Clone)]
pub struct HatWittVec {
    pub ring: Arc<FpkAlgebra>,
    pub entries: BTreeMap<usize, Coords>,
}

impl PartialEq for HatWittVec {
    fn eq(&self, o: &Self) -> bool {
        (Arc::ptr_eq(&self.ring, &o.ring) || *self.ring == *o.ring) && self.entries == o.entries
    }
}

impl Eq for HatWittVec {}

impl fmt::Debug for HatWittVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(i, c)| format!("{i}: {}", self.ring.format(c)))
            .collect();
        write!(f, "Ŵ{{{}}}", parts.join(", "))
    }
}

impl HatWittVec {
    pub fn zero(ring: &Arc<FpkAlgebra>) -> Self {
        HatWittVec {
            ring: ring.clone(),
            entries: BTreeMap::new(),
        }
    }

    pub fn new(ring: &Arc<FpkAlgebra>, entries: BTreeMap<usize, Coords>) -> Result<Self, WittError> {
        let mut clean = BTreeMap::new();
        for (i, c) in entries {
            ring.check(&c)?;
            if ring.is_zero(&c) {
                continue;
            }
            if !ring.is_nilpotent(&c) {
                return Err(WittError::NotNilpotent(i));
            }
            clean.insert(i, c);
        }
        Ok(HatWittVec {
            ring: ring.clone(),
            entries: clean,
        })
    }

    /// Read a dense vector; all entries must be nilpotent.
    pub fn from_dense(ring: &Arc<FpkAlgebra>, comps: &[Coords]) -> Result<Self, WittError> {
        Self::new(ring, comps.iter().cloned().enumerate().collect())
    }

    pub fn teich(ring: &Arc<FpkAlgebra>, a: &[u64]) -> Result<Self, WittError> {
        Self::new(ring, [(0usize, a.to_vec())].into_iter().collect())
    }

    /// One past the largest nonzero index.
    pub fn support_end(&self) -> usize {
        self.entries.keys().next_back().map_or(0, |&i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense form at an explicit length, refusing to drop nonzero entries.
    pub fn to_dense(&self, len: usize) -> Result<Vec<Coords>, WittError> {
        if self.support_end() > len {
            return Err(WittError::SupportOverflow {
                support: self.support_end(),
                len,
            });
        }
        let mut v = vec![self.ring.zero(); len];
        for (&i, c) in &self.entries {
            v[i] = c.clone();
        }
        Ok(v)
    }

    fn working_len(&self, other_end: usize) -> usize {
        self.support_end().max(other_end) + support_slack(&self.ring).max(1)
    }

    fn finish(&self, dense: Vec<Coords>) -> Result<HatWittVec, WittError> {
        HatWittVec::from_dense(&self.ring, &dense)
    }

    pub fn add(&self, o: &HatWittVec) -> Result<HatWittVec, WittError> {
        let len = self.working_len(o.support_end());
        let w = WittRing::new(&self.ring, len)?;
        self.finish(w.add(&self.to_dense(len)?, &o.to_dense(len)?))
    }

    pub fn neg(&self) -> Result<HatWittVec, WittError> {
        let len = self.working_len(0);
        let w = WittRing::new(&self.ring, len)?;
        self.finish(w.neg(&self.to_dense(len)?))
    }

    pub fn sub(&self, o: &HatWittVec) -> Result<HatWittVec, WittError> {
        self.add(&o.neg()?)
    }

    pub fn mul(&self, o: &HatWittVec) -> Result<HatWittVec, WittError> {
        let len = self.working_len(o.support_end());
        let w = WittRing::new(&self.ring, len)?;
        self.finish(w.mul(&self.to_dense(len)?, &o.to_dense(len)?))
    }

    /// Product with a dense Witt vector, which must be long enough to cover
    /// the working length; returns the product and that length.
    pub fn scalar_mul(&self, x: &WittVec) -> Result<(HatWittVec, usize), WittError> {
        let len = self.working_len(0);
        if x.len() < len {
            return Err(WittError::LengthMismatch(x.len(), len));
        }
        let w = WittRing::new(&self.ring, len)?;
        let r = self.finish(w.mul(&self.to_dense(len)?, &x.comps[..len]))?;
        Ok((r, len))
    }

    pub fn frobenius(&self) -> Result<HatWittVec, WittError> {
        let len = self.working_len(0);
        let w = WittRing::new(&self.ring, len + 1)?;
        let f = if self.ring.is_fp_algebra() {
            w.frobenius(&self.to_dense(len)?)?
        } else {
            w.frobenius_drop(&self.to_dense(len + 1)?)
        };
        self.finish(f)
    }

    pub fn verschiebung(&self) -> HatWittVec {
        HatWittVec {
            ring: self.ring.clone(),
            entries: self.entries.iter().map(|(&i, c)| (i + 1, c.clone())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_base::std_rings::*;
    use crate::ring_base::make_zmod;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn teichmueller_sums() {
        // [1]+[1] over Z at p=2 is (2,-1); reduce mod 8
        let z8 = make_zmod(2, 3).unwrap();
        let w = WittRing::new(&z8, 2).unwrap();
        let one = w.one(2);
        assert_eq!(w.add(&one, &one), vec![vec![2], vec![7]]);
        // p=3 over F_3: (2, -2 mod 3 = 1)
        let f3 = f3();
        let w = WittRing::new(&f3, 2).unwrap();
        let one = w.one(2);
        assert_eq!(w.add(&one, &one), vec![vec![2], vec![1]]);
    }

    #[test]
    fn engines_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ring in [f4(), truncated(&f2(), 2), make_zmod(3, 2).unwrap()] {
            let g = WittRing::with_engine(&ring, 3, EngineKind::GhostLift).unwrap();
            let u = WittRing::with_engine(&ring, 3, EngineKind::Universal).unwrap();
            for _ in 0..10 {
                let x = g.random(&mut rng, 3);
                let y = g.random(&mut rng, 3);
                assert_eq!(g.add(&x, &y), u.add(&x, &y));
                assert_eq!(g.mul(&x, &y), u.mul(&x, &y));
                assert_eq!(g.neg(&x), u.neg(&x));
                assert_eq!(g.frobenius_drop(&x), u.frobenius_drop(&x));
            }
        }
    }

    #[test]
    fn fp_frobenius_shortcut_matches_polynomials() {
        let f4 = f4();
        let w = WittRing::new(&f4, 3).unwrap();
        let a = f4.basis(1);
        let x = vec![a.clone(), a.clone(), a.clone()];
        let short = w.frobenius(&x).unwrap();
        assert_eq!(short[0], f4.mul(&a, &a));
        assert_eq!(&short[..2], &w.frobenius_drop(&x)[..]);
    }

    #[test]
    fn p3_constants_are_trivial() {
        let c = compute_u0_alpha_ptilde(3, 4, 2).unwrap();
        assert_eq!(c.u0, vec![1, 0, 0, 0]);
        assert_eq!(c.alpha, vec![1, 0, 0, 0]);
        let z = make_zmod(3, 2).unwrap();
        let w = WittRing::new(&z, 4).unwrap();
        let three: Vec<u64> = w.from_int(3, 4).iter().map(|c| c[0]).collect();
        assert_eq!(c.ptilde, three);
    }

    #[test]
    fn p2_constants_verify() {
        let c = compute_u0_alpha_ptilde(2, 4, 5).unwrap();
        assert_eq!(c.u0.len(), 4);
        assert_eq!(c.u0[0] % 2, 1);
    }

    #[test]
    fn u0_is_one_over_f2() {
        let w = WittRing::new(&truncated(&f2(), 2), 5).unwrap();
        assert_eq!(w.u0(5), w.one(5));
    }

    #[test]
    fn gamma_one_is_identity() {
        let r = truncated(&f3(), 2);
        let w = WittRing::new(&r, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = w.random(&mut rng, 3);
        let x = w.verschiebung(&y);
        assert_eq!(divided_gamma(&w, 1, &x).unwrap(), x);
        assert!(divided_gamma(&w, 2, &w.one(3)).is_err());
    }

    #[test]
    fn sampled_laws_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ring in [f4(), truncated(&f2(), 2), make_zmod(2, 3).unwrap(), make_zmod(3, 2).unwrap()] {
            let w = WittRing::new(&ring, 4).unwrap();
            let rep = check_witt_laws(&w, 3, 20, &mut rng);
            assert!(rep.passed(), "{rep:?}");
            let rep = check_vtilde_identities(&w, 3, 20, &mut rng);
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn divided_powers_on_v_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for ring in [truncated(&f2(), 2), f4(), truncated(&f3(), 2), make_zmod(3, 2).unwrap()] {
            let w = WittRing::new(&ring, 4).unwrap();
            let rep = check_divided_powers(&w, 4, 6, 10, &mut rng);
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn hat_shift_and_support() {
        let r = truncated(&f2(), 3);
        let t = HatWittVec::teich(&r, &r.basis(1)).unwrap();
        assert_eq!(t.verschiebung().support_end(), 2);
        let s = t.add(&t).unwrap();
        // [t]+[t] = (0, t^2) in characteristic 2
        assert_eq!(s.entries.get(&1), Some(&r.basis(2)));
        assert!(HatWittVec::teich(&r, &r.one()).is_err());
    }
}
