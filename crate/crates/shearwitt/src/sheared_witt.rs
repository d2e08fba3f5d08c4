//! Sheared Witt vectors of Artinian local `F_p`-algebras.
//!
//! For `R` local Artinian with residue field `k` and maximal ideal `m`, the
//! ring section `s: k → R` splits `ˢW(R) = W(k) ⊕ Ŵ(m)` inside `W(R)`. An
//! element is stored as a pair `(λ, η)` meaning `W(s)(λ) + η`.
//!
//! Precision: `λ` is kept in `W_N(k)`, so it is known modulo
//! `p^N W(k) = V^N W(k)`. Since `p = VF` on `W(R)` and `F` raises components to
//! the `p`-th power, `p^N` kills `Ŵ(m)` as soon as `p^N` reaches the
//! nilpotency index of `m`. Under that condition a pair `(λ, η)` represents an
//! element of `ˢW(R)/p^N` exactly, and any extension of `λ` by zero digits
//! gives the same products.

use crate::ring_base::{Coords, FpkAlgebra, RingError, RingHom, RingIdeal, make_quotient};
use crate::witt::{HatWittVec, WittError, WittRing};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShearedError {
    #[error("unsupported ring: {0}")]
    Unsupported(String),
    #[error("precision N={n} too small: p^N must reach the nilpotency index {index}")]
    Precision { n: usize, index: usize },
    #[error("not representably sheared at this bound: support {support} exceeds B={bound}")]
    SupportOverflow { support: usize, bound: usize },
    #[error("embedding length {len} exceeds precision {max}")]
    EmbedLength { len: usize, max: usize },
    #[error(transparent)]
    Witt(#[from] WittError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// `ˢW(R)` at precision `N` with support bound `B` for the nilpotent part.
#[derive(Debug, Clone)]
pub struct ShearedRing {
    ring: Arc<FpkAlgebra>,
    field: Arc<FpkAlgebra>,
    projection: RingHom,
    section: RingHom,
    nil: RingIdeal,
    n: usize,
    bound: usize,
    slack: usize,
    /// Dense working length for the nilpotent part.
    work: usize,
    wr: WittRing,
    wk: WittRing,
}

/// An element `W(s)(λ) + η` of `ˢW(R)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShearedWitt {
    /// Witt components over the residue field, length `N`.
    pub lambda: Vec<Coords>,
    /// Nilpotent part, finitely supported.
    pub eta: HatWittVec,
}

impl ShearedRing {
    /// Accepts finite fields and Artinian local `F_p`-algebras.
    pub fn new(ring: &Arc<FpkAlgebra>, n: usize, bound: usize) -> Result<Self, ShearedError> {
        if !ring.is_fp_algebra() {
            return Err(ShearedError::Unsupported(format!(
                "{} is not an F_p-algebra",
                ring.name()
            )));
        }
        if n == 0 || bound < n {
            return Err(ShearedError::Unsupported(format!("need 1 <= N <= B, got N={n}, B={bound}")));
        }
        let rs = ring
            .residue_section()
            .map_err(|e| ShearedError::Unsupported(format!("{}: {e}", ring.name())))?;
        let index = ring.nilpotency_index();
        if (ring.p() as u128).pow(n as u32) < index as u128 {
            return Err(ShearedError::Precision { n, index });
        }
        let slack = crate::witt::support_slack(ring).max(1);
        let work = bound + slack;
        let wr = WittRing::new(ring, work)?;
        let wk = WittRing::new(&rs.field, n + 1)?;
        Ok(ShearedRing {
            ring: ring.clone(),
            field: rs.field,
            projection: rs.projection,
            section: rs.section,
            nil: rs.nilradical,
            n,
            bound,
            slack,
            work,
            wr,
            wk,
        })
    }

    pub fn ring(&self) -> &Arc<FpkAlgebra> {
        &self.ring
    }
    pub fn field(&self) -> &Arc<FpkAlgebra> {
        &self.field
    }
    pub fn section(&self) -> &RingHom {
        &self.section
    }
    pub fn projection(&self) -> &RingHom {
        &self.projection
    }
    pub fn nilradical(&self) -> &RingIdeal {
        &self.nil
    }
    pub fn precision(&self) -> usize {
        self.n
    }
    pub fn bound(&self) -> usize {
        self.bound
    }
    pub fn p(&self) -> u64 {
        self.ring.p()
    }
    pub fn is_perfect(&self) -> bool {
        self.nil.is_zero()
    }
    pub fn witt_r(&self) -> &WittRing {
        &self.wr
    }
    pub fn witt_k(&self) -> &WittRing {
        &self.wk
    }
    /// Extra support a single operation may create.
    pub fn growth(&self) -> usize {
        self.slack - 1
    }

    pub fn zero(&self) -> ShearedWitt {
        ShearedWitt {
            lambda: self.wk.zero(self.n),
            eta: HatWittVec::zero(&self.ring),
        }
    }

    pub fn one(&self) -> ShearedWitt {
        self.from_int(1)
    }

    pub fn from_int(&self, c: i128) -> ShearedWitt {
        ShearedWitt {
            lambda: self.wk.from_int(c, self.n),
            eta: HatWittVec::zero(&self.ring),
        }
    }

    /// Teichmüller lift of an element of `R`: `[a] = [s(ā)] + ([a] - [s(ā)])`.
    pub fn teich(&self, a: &[u64]) -> Result<ShearedWitt, ShearedError> {
        let dense = self.wr.teich(a, self.n.max(1));
        self.split(&dense)
    }

    fn check_eta(&self, eta: &HatWittVec) -> Result<(), ShearedError> {
        if eta.support_end() > self.bound {
            return Err(ShearedError::SupportOverflow {
                support: eta.support_end(),
                bound: self.bound,
            });
        }
        Ok(())
    }

    pub fn make(&self, lambda: Vec<Coords>, eta: HatWittVec) -> Result<ShearedWitt, ShearedError> {
        if lambda.len() != self.n {
            return Err(WittError::LengthMismatch(lambda.len(), self.n).into());
        }
        for l in &lambda {
            self.field.check(l)?;
        }
        for c in eta.entries.values() {
            if !self.nil.contains(c) {
                return Err(WittError::NotNilpotent(0).into());
            }
        }
        self.check_eta(&eta)?;
        Ok(ShearedWitt { lambda, eta })
    }

    /// `W(s)(λ)` as a dense vector, padded with zero digits.
    fn section_dense(&self, lambda: &[Coords], len: usize) -> Vec<Coords> {
        (0..len)
            .map(|i| match lambda.get(i) {
                Some(c) => self.section.apply(c),
                None => self.ring.zero(),
            })
            .collect()
    }

    fn dense_eta(&self, eta: &HatWittVec) -> Vec<Coords> {
        eta.to_dense(self.work).expect("eta within bound")
    }

    fn sparse_eta(&self, dense: &[Coords]) -> Result<HatWittVec, ShearedError> {
        let mut entries = BTreeMap::new();
        for (i, c) in dense.iter().enumerate() {
            if !self.ring.is_zero(c) {
                entries.insert(i, c.clone());
            }
        }
        let eta = HatWittVec {
            ring: self.ring.clone(),
            entries,
        };
        self.check_eta(&eta)?;
        Ok(eta)
    }

    /// `W(s)(λ) + η` at the full working length, `λ` padded with zeros.
    pub fn to_dense(&self, x: &ShearedWitt) -> Vec<Coords> {
        let s = self.section_dense(&x.lambda, self.work);
        self.wr.add(&s, &self.dense_eta(&x.eta))
    }

    /// Working length of the dense representation.
    pub fn work_len(&self) -> usize {
        self.work
    }

    /// `W(s)(λ) + η` in `W_L(R)`, `L <= N`.
    pub fn embed(&self, x: &ShearedWitt, len: usize) -> Result<Vec<Coords>, ShearedError> {
        if len > self.n {
            return Err(ShearedError::EmbedLength { len, max: self.n });
        }
        let s = self.section_dense(&x.lambda, len);
        let e: Vec<Coords> = (0..len)
            .map(|i| x.eta.entries.get(&i).cloned().unwrap_or_else(|| self.ring.zero()))
            .collect();
        Ok(self.wr.add(&s, &e))
    }

    /// Decompose a Witt vector of length `>= N`: `λ` is its image in
    /// `W(k)`, `η` the rest, which must be supported below `B`.
    pub fn split(&self, w: &[Coords]) -> Result<ShearedWitt, ShearedError> {
        let len = w.len();
        let lambda: Vec<Coords> = (0..self.n)
            .map(|i| match w.get(i) {
                Some(c) => self.projection.apply(c),
                None => self.field.zero(),
            })
            .collect();
        let s = self.section_dense(&lambda, len);
        let eta = self.wr.sub(w, &s);
        debug_assert!(eta.iter().all(|c| self.nil.contains(c)));
        Ok(ShearedWitt {
            lambda,
            eta: self.sparse_eta(&eta)?,
        })
    }

    pub fn add(&self, x: &ShearedWitt, y: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        let lambda = self.wk.add(&x.lambda, &y.lambda);
        let eta = self.wr.add(&self.dense_eta(&x.eta), &self.dense_eta(&y.eta));
        Ok(ShearedWitt {
            lambda,
            eta: self.sparse_eta(&eta)?,
        })
    }

    pub fn neg(&self, x: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        Ok(ShearedWitt {
            lambda: self.wk.neg(&x.lambda),
            eta: self.sparse_eta(&self.wr.neg(&self.dense_eta(&x.eta)))?,
        })
    }

    pub fn sub(&self, x: &ShearedWitt, y: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        self.add(x, &self.neg(y)?)
    }

    /// `(s(λ)+η)(s(μ)+θ) = s(λμ) + (s(λ)θ + s(μ)η + ηθ)`.
    pub fn mul(&self, x: &ShearedWitt, y: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        let lambda = self.wk.mul(&x.lambda, &y.lambda);
        if x.eta.is_zero() && y.eta.is_zero() {
            return Ok(ShearedWitt {
                lambda,
                eta: HatWittVec::zero(&self.ring),
            });
        }
        let sx = self.section_dense(&x.lambda, self.work);
        let sy = self.section_dense(&y.lambda, self.work);
        let ex = self.dense_eta(&x.eta);
        let ey = self.dense_eta(&y.eta);
        let mut acc = self.wr.zero(self.work);
        if !y.eta.is_zero() {
            acc = self.wr.add(&acc, &self.wr.mul(&sx, &ey));
        }
        if !x.eta.is_zero() {
            acc = self.wr.add(&acc, &self.wr.mul(&sy, &ex));
        }
        if !x.eta.is_zero() && !y.eta.is_zero() {
            acc = self.wr.add(&acc, &self.wr.mul(&ex, &ey));
        }
        Ok(ShearedWitt {
            lambda,
            eta: self.sparse_eta(&acc)?,
        })
    }

    /// Multiply by an integer.
    pub fn scale_int(&self, c: i128, x: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        self.mul(&self.from_int(c), x)
    }

    /// Componentwise `p`-th power on both parts.
    pub fn frobenius(&self, x: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        let p = self.p() as u128;
        let lambda = x.lambda.iter().map(|c| self.field.pow(c, p)).collect();
        let entries = x
            .eta
            .entries
            .iter()
            .map(|(&i, c)| (i, self.ring.pow(c, p)))
            .filter(|(_, c)| !self.ring.is_zero(c))
            .collect();
        Ok(ShearedWitt {
            lambda,
            eta: HatWittVec {
                ring: self.ring.clone(),
                entries,
            },
        })
    }

    /// Verschiebung; `u_0` maps to 1 over `F_p`-algebras so `Ṽ = V`.
    pub fn verschiebung(&self, x: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        let lambda = self.wk.verschiebung(&x.lambda);
        let eta = x.eta.verschiebung();
        self.check_eta(&eta)?;
        Ok(ShearedWitt { lambda, eta })
    }

    pub fn vtilde(&self, x: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        self.verschiebung(x)
    }

    /// `p̃ = p - [p^2]`, equal to `p` in characteristic `p`.
    pub fn ptilde(&self) -> ShearedWitt {
        ShearedWitt {
            lambda: self.wk.ptilde(self.n),
            eta: HatWittVec::zero(&self.ring),
        }
    }

    /// First component of the embedding, `ˢW(R) → R`.
    pub fn project(&self, x: &ShearedWitt) -> Coords {
        let s = self.section.apply(&x.lambda[0]);
        let e = x.eta.entries.get(&0).cloned().unwrap_or_else(|| self.ring.zero());
        self.ring.add(&s, &e)
    }

    /// Random element with nilpotent part supported below `support`.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R, support: usize) -> ShearedWitt {
        let lambda = self.wk.random(rng, self.n);
        let mut entries = BTreeMap::new();
        if !self.nil.is_zero() {
            for i in 0..support.min(self.bound) {
                let c = self.nil.random(rng);
                if !self.ring.is_zero(&c) {
                    entries.insert(i, c);
                }
            }
        }
        ShearedWitt {
            lambda,
            eta: HatWittVec {
                ring: self.ring.clone(),
                entries,
            },
        }
    }

    /// Equality modulo `p^m ˢW(R)` (`m <= N`): compares `λ` up to `m` digits
    /// and the whole nilpotent part when `p^m` kills `Ŵ(m)`.
    pub fn eq_mod(&self, x: &ShearedWitt, y: &ShearedWitt, m: usize) -> bool {
        x.lambda[..m] == y.lambda[..m] && x.eta == y.eta
    }
}

// ---------------------------------------------------------------------------
// pointwise exactness checks

/// Outcome of a sampled verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub ring: String,
    pub params: BTreeMap<String, String>,
    pub samples: usize,
    pub witnesses: usize,
    pub failures: usize,
    pub counterexamples: Vec<String>,
}

impl CheckReport {
    fn new(check: &str, ring: &str) -> Self {
        CheckReport {
            check: check.into(),
            ring: ring.into(),
            params: BTreeMap::new(),
            samples: 0,
            witnesses: 0,
            failures: 0,
            counterexamples: vec![],
        }
    }

    fn fail(&mut self, msg: String) {
        self.failures += 1;
        if self.counterexamples.len() < 5 {
            self.counterexamples.push(msg);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// The map `ˢW(R) → ˢW(R/I)` induced by a quotient.
pub struct QuotientMap {
    pub src: ShearedRing,
    pub dst: ShearedRing,
    proj: RingHom,
    lift: crate::ring_base::Projection,
    /// Residue field isomorphism `k → k'` and its inverse.
    field_fwd: RingHom,
    field_back: RingHom,
}

impl QuotientMap {
    pub fn new(src: ShearedRing, ideal: &RingIdeal) -> Result<Self, ShearedError> {
        let (q, proj) = make_quotient(src.ring(), ideal)?;
        let dst = ShearedRing::new(&q, src.precision(), src.bound())?;
        let k = src.field();
        let fwd_images: Vec<Coords> = (0..k.rank())
            .map(|i| {
                let s = src.section().apply(&k.basis(i));
                dst.projection().apply(&proj.hom.apply(&s))
            })
            .collect();
        let field_fwd = RingHom::new(k.clone(), dst.field().clone(), fwd_images)?;
        let kk = dst.field();
        let back_images: Vec<Coords> = (0..kk.rank())
            .map(|i| {
                let s = dst.section().apply(&kk.basis(i));
                src.projection().apply(&proj.lift(&s))
            })
            .collect();
        let field_back = RingHom::new(kk.clone(), k.clone(), back_images)?;
        Ok(QuotientMap {
            src,
            dst,
            proj: proj.hom.clone(),
            lift: proj,
            field_fwd,
            field_back,
        })
    }

    pub fn apply(&self, x: &ShearedWitt) -> Result<ShearedWitt, ShearedError> {
        let lambda = x.lambda.iter().map(|c| self.field_fwd.apply(c)).collect();
        let entries: BTreeMap<usize, Coords> = x
            .eta
            .entries
            .iter()
            .map(|(&i, c)| (i, self.proj.apply(c)))
            .filter(|(_, c)| !self.dst.ring().is_zero(c))
            .collect();
        Ok(ShearedWitt {
            lambda,
            eta: HatWittVec {
                ring: self.dst.ring().clone(),
                entries,
            },
        })
    }

    /// A preimage built componentwise.
    pub fn lift(&self, y: &ShearedWitt) -> ShearedWitt {
        let lambda = y.lambda.iter().map(|c| self.field_back.apply(c)).collect();
        let entries = y
            .eta
            .entries
            .iter()
            .map(|(&i, c)| (i, self.lift.lift(c)))
            .collect();
        ShearedWitt {
            lambda,
            eta: HatWittVec {
                ring: self.src.ring().clone(),
                entries,
            },
        }
    }

    /// Membership in `Ŵ(I)`.
    pub fn in_hat_ideal(&self, x: &ShearedWitt, ideal: &RingIdeal) -> bool {
        x.lambda.iter().all(|c| self.src.field().is_zero(c))
            && x.eta.entries.values().all(|c| ideal.contains(c))
    }
}

/// `0 → Ŵ(I) → ˢW(R) → ˢW(R/I)` with surjectivity on the right, sampled.
pub fn check_kernel_sequence<G: Rng + ?Sized>(
    sr: &ShearedRing,
    ideal: &RingIdeal,
    samples: usize,
    rng: &mut G,
) -> Result<CheckReport, ShearedError> {
    let qm = QuotientMap::new(sr.clone(), ideal)?;
    let mut rep = CheckReport::new("kernel-sequence", sr.ring().name());
    rep.params.insert("N".into(), sr.precision().to_string());
    rep.params.insert("B".into(), sr.bound().to_string());
    rep.params.insert("ideal_log_size".into(), ideal.log_size().to_string());
    let support = sr.bound() - sr.growth();
    for _ in 0..samples {
        rep.samples += 1;
        // Ŵ(I) is killed
        let mut entries = BTreeMap::new();
        for i in 0..support {
            let c = ideal.random(rng);
            if !sr.ring().is_zero(&c) {
                entries.insert(i, c);
            }
        }
        let k = ShearedWitt {
            lambda: sr.witt_k().zero(sr.precision()),
            eta: HatWittVec {
                ring: sr.ring().clone(),
                entries,
            },
        };
        if qm.apply(&k)? != qm.dst.zero() {
            rep.fail(format!("Ŵ(I) element {:?} not killed", k.eta));
        }
        // every kernel element lies in Ŵ(I)
        let x = sr.random(rng, support);
        let fx = qm.apply(&x)?;
        let back = qm.lift(&fx);
        let diff = sr.sub(&x, &back)?;
        if qm.apply(&diff)? != qm.dst.zero() {
            rep.fail("constructive lift is not a preimage".into());
        } else if !qm.in_hat_ideal(&diff, ideal) {
            rep.fail(format!("kernel element outside Ŵ(I): {:?}", diff.eta));
        }
        // surjectivity with a returned witness
        let y = qm.dst.random(rng, support);
        let l = qm.lift(&y);
        if qm.apply(&l)? == y {
            rep.witnesses += 1;
        } else {
            rep.fail("target element without lift".into());
        }
    }
    Ok(rep)
}

/// `0 → ˢW →Ṽ^n ˢW → W_n → 0` on `R`-points, sampled.
pub fn check_vn_wn_sequence<G: Rng + ?Sized>(
    sr: &ShearedRing,
    n: usize,
    samples: usize,
    rng: &mut G,
) -> Result<CheckReport, ShearedError> {
    let big_n = sr.precision();
    if n == 0 || n > big_n {
        return Err(ShearedError::EmbedLength { len: n, max: big_n });
    }
    let mut rep = CheckReport::new("vn-wn-sequence", sr.ring().name());
    rep.params.insert("N".into(), big_n.to_string());
    rep.params.insert("B".into(), sr.bound().to_string());
    rep.params.insert("n".into(), n.to_string());
    let ring = sr.ring();
    let support = sr.bound() - n;
    let vn = |x: &ShearedWitt| -> Result<ShearedWitt, ShearedError> {
        let mut y = x.clone();
        for _ in 0..n {
            y = sr.vtilde(&y)?;
        }
        Ok(y)
    };
    for _ in 0..samples {
        rep.samples += 1;
        // injectivity of Ṽ^n modulo p^(N-n)
        let x = sr.random(rng, support);
        let y = sr.random(rng, support);
        if !sr.eq_mod(&x, &y, big_n - n) && vn(&x)? == vn(&y)? {
            rep.fail("Ṽ^n not injective".into());
        }
        // composite is zero
        if sr.embed(&vn(&x)?, n)? != sr.witt_r().zero(n) {
            rep.fail("Ṽ^n(x) does not vanish in W_n".into());
        }
        // surjectivity onto W_n(R)
        let w: Vec<Coords> = (0..n).map(|_| ring.random(rng)).collect();
        let lifted = sr.split(&w)?;
        if sr.embed(&lifted, n)? == w {
            rep.witnesses += 1;
        } else {
            rep.fail("W_n element without lift".into());
        }
        // kernel equals the image of Ṽ^n
        let z = sr.random(rng, support);
        let back = sr.split(&sr.embed(&z, n)?)?;
        let k = sr.sub(&z, &back)?;
        if sr.embed(&k, n)? != sr.witt_r().zero(n) {
            rep.fail("difference with lift not in the kernel".into());
            continue;
        }
        let pre_l: Vec<Coords> = (0..big_n)
            .map(|i| k.lambda.get(i + n).cloned().unwrap_or_else(|| sr.field().zero()))
            .collect();
        let pre_e: BTreeMap<usize, Coords> = k
            .eta
            .entries
            .iter()
            .filter(|(&i, _)| i >= n)
            .map(|(&i, c)| (i - n, c.clone()))
            .collect();
        let low_ok = k.lambda[..n].iter().all(|c| sr.field().is_zero(c))
            && k.eta.entries.keys().all(|&i| i >= n);
        let pre = ShearedWitt {
            lambda: pre_l,
            eta: HatWittVec {
                ring: ring.clone(),
                entries: pre_e,
            },
        };
        if !low_ok || vn(&pre)? != k {
            rep.fail("kernel element outside the image of Ṽ^n".into());
        }
    }
    Ok(rep)
}

/// `{x : F(x) = x}` in `ˢW(R)/p^N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FInvariants {
    pub ring: String,
    pub n: usize,
    pub bound: usize,
    /// `log_p` of the number of fixed points.
    pub log_count: u32,
    /// Additive order of `1` as `log_p`.
    pub log_order_of_one: u32,
    pub cyclic: bool,
}

/// Count `F`-fixed points. `F` acts digitwise on both parts, so the count is
/// the product of the per-digit fixed-point counts, each found by exhausting
/// `k` or `m`.
pub fn f_invariants(sr: &ShearedRing) -> Result<FInvariants, ShearedError> {
    let p = sr.p() as u128;
    let k = sr.field();
    let fixed_k = k.elements().filter(|a| k.pow(a, p) == *a).count() as u64;
    let fixed_m = sr
        .nilradical()
        .elements()
        .iter()
        .filter(|a| sr.ring().pow(a, p) == **a)
        .count() as u64;
    let mut total: u128 = 1;
    for _ in 0..sr.precision() {
        total *= fixed_k as u128;
    }
    for _ in 0..sr.bound() {
        total *= fixed_m as u128;
    }
    let mut log = 0;
    while total > 1 {
        if total % p != 0 {
            return Err(ShearedError::Unsupported("fixed-point count is not a p-power".into()));
        }
        total /= p;
        log += 1;
    }
    // additive order of 1 in W_N(k)
    let one = sr.one();
    let mut acc = one.clone();
    let mut ord = 0;
    loop {
        // acc = p^ord · 1 when the loop body starts
        if acc == sr.zero() {
            break;
        }
        acc = sr.scale_int(sr.p() as i128, &acc)?;
        ord += 1;
        if ord > 64 {
            break;
        }
    }
    Ok(FInvariants {
        ring: sr.ring().name().into(),
        n: sr.precision(),
        bound: sr.bound(),
        log_count: log,
        log_order_of_one: ord,
        cyclic: ord == log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_base::std_rings::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embed_and_split_examples() {
        let r = truncated(&f2(), 2);
        let sr = ShearedRing::new(&r, 4, 12).unwrap();
        assert_eq!(sr.embed(&sr.one(), 4).unwrap(), sr.witt_r().one(4));
        let t = sr.teich(&r.basis(1)).unwrap();
        assert!(t.lambda.iter().all(|c| c == &vec![0]));
        assert_eq!(t.eta.entries.get(&0), Some(&r.basis(1)));
        let v1 = sr.witt_r().verschiebung(&sr.witt_r().one(4));
        let s = sr.split(&v1).unwrap();
        assert_eq!(s.lambda, vec![vec![0], vec![1], vec![0], vec![0]]);
        assert!(s.eta.is_zero());
    }

    #[test]
    fn round_trip() {
        let r = truncated(&f4(), 2);
        let sr = ShearedRing::new(&r, 4, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = sr.random(&mut rng, 4);
            assert_eq!(sr.split(&sr.embed(&x, 4).unwrap()).unwrap(), x);
        }
    }

    #[test]
    fn precision_guard() {
        let r = truncated(&f2(), 3);
        assert!(matches!(ShearedRing::new(&r, 1, 8), Err(ShearedError::Precision { .. })));
        assert!(ShearedRing::new(&crate::ring_base::make_zmod(2, 2).unwrap(), 2, 4).is_err());
    }

    #[test]
    fn f_vtilde_is_ptilde() {
        let r = truncated(&f3(), 2);
        let sr = ShearedRing::new(&r, 3, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = sr.random(&mut rng, 5);
            let lhs = sr.frobenius(&sr.vtilde(&x).unwrap()).unwrap();
            let rhs = sr.mul(&sr.ptilde(), &x).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn f_invariants_of_grid_ring() {
        let sr = ShearedRing::new(&truncated(&f2(), 2), 3, 8).unwrap();
        let fi = f_invariants(&sr).unwrap();
        assert_eq!(fi.log_count, 3);
        assert!(fi.cyclic);
    }

    #[test]
    fn embedding_is_multiplicative() {
        let r = f2_xy();
        let sr = ShearedRing::new(&r, 3, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = sr.random(&mut rng, 4);
            let y = sr.random(&mut rng, 4);
            let xy = sr.mul(&x, &y).unwrap();
            let dense = sr.witt_r().mul(&sr.embed(&x, 3).unwrap(), &sr.embed(&y, 3).unwrap());
            assert_eq!(sr.embed(&xy, 3).unwrap(), dense);
            let s = sr.add(&x, &y).unwrap();
            let dense = sr.witt_r().add(&sr.embed(&x, 3).unwrap(), &sr.embed(&y, 3).unwrap());
            assert_eq!(sr.embed(&s, 3).unwrap(), dense);
        }
    }

    #[test]
    fn sequences_on_truncated_ring() {
        let r = truncated(&f2(), 3);
        let sr = ShearedRing::new(&r, 2, 10).unwrap();
        let ideal = RingIdeal::generated(&r, vec![r.basis(2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = check_kernel_sequence(&sr, &ideal, 10, &mut rng).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.witnesses, 10);
        let rep = check_vn_wn_sequence(&sr, 2, 10, &mut rng).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
