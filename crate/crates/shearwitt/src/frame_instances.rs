//! Concrete frames: truncated Witt, sheared Witt, and their relative
//! versions over pd thickenings, with the homomorphisms between them.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::frames::{
    FiniteFrame, Frame, FrameError, FrameHom, FrameResult, FrameSection, HodgeHom, LeveledIdeal,
};
use crate::ring_base::{make_quotient, Coords, FpkAlgebra, Projection, RingHom, RingIdeal};
use crate::sheared_witt::{QuotientMap, ShearedRing, ShearedWitt};
use crate::witt::{compute_u0_alpha_ptilde, HatWittVec, WittConstants, WittRing};
use crate::zmod_linalg::{howell_contains, howell_form};

/// Degree-one carrier `F_*A_0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FStar<T>(pub T);

/// Degree-one carrier `F_*A_0 ⊕ 𝔞` of a relative frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelFil<T> {
    pub y: T,
    pub a: Coords,
}

/// Inverse in `W_n(R)`: Teichmüller of the inverse of `x_0`, corrected by a
/// geometric series in `V W_n(R)`.
pub fn witt_inverse(w: &WittRing, x: &[Coords]) -> Option<Vec<Coords>> {
    let len = x.len();
    let i0 = w.ring().inverse(&x[0])?;
    let y0 = w.teich(&i0, len);
    let z = w.sub(&w.one(len), &w.mul(x, &y0));
    let zero = w.zero(len);
    let mut acc = w.one(len);
    let mut pw = z.clone();
    let mut steps = 0;
    while pw != zero {
        acc = w.add(&acc, &pw);
        pw = w.mul(&pw, &z);
        steps += 1;
        if steps > 1 << 12 {
            return None;
        }
    }
    Some(w.mul(&y0, &acc))
}

/// `F_p`-span of the `p`-th powers of `gens` (Frobenius is additive).
fn frobenius_span(r: &FpkAlgebra, gens: &[Coords]) -> Vec<Coords> {
    let rows: Vec<Coords> = gens.iter().map(|g| r.pow(g, r.p() as u128)).collect();
    howell_form(&rows, r.rank(), &r.zpk())
}

fn require_fp(r: &FpkAlgebra) -> FrameResult<()> {
    if r.is_fp_algebra() {
        Ok(())
    } else {
        Err(FrameError::Unsupported(format!(
            "{} has characteristic p^{}; Witt frames need an F_p-algebra",
            r.name(),
            r.k()
        )))
    }
}

fn coords_json(v: &[Coords]) -> Value {
    json!(v)
}

fn coords_from_json(r: &FpkAlgebra, v: &Value, len: usize) -> FrameResult<Vec<Coords>> {
    let out: Vec<Coords> =
        serde_json::from_value(v.clone()).map_err(|e| FrameError::Decode(e.to_string()))?;
    if out.len() != len {
        return Err(FrameError::Decode(format!("expected {len} components, got {}", out.len())));
    }
    for c in &out {
        r.check(c)?;
    }
    Ok(out)
}

fn coord_from_json(r: &FpkAlgebra, v: &Value) -> FrameResult<Coords> {
    let c: Coords = serde_json::from_value(v.clone()).map_err(|e| FrameError::Decode(e.to_string()))?;
    r.check(&c)?;
    Ok(c)
}

// ---------------------------------------------------------------------------
// Witt frames

/// How a Witt frame was requested; the data agree over `F_p`-algebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WittKind {
    /// `W_n(R)`.
    Truncated,
    /// The image of `W(R)` at precision `n`.
    Precision,
}

/// `A_0 = W_n(R)`, `A_1 = F_*W_n(R)`, `τ = V`, `σ_0 = F`, `σ_1 = id`, `d = p`.
#[derive(Debug)]
pub struct WittFrame {
    ring: Arc<FpkAlgebra>,
    n: usize,
    kind: WittKind,
    wr: WittRing,
    pth: Vec<Coords>,
}

impl WittFrame {
    pub fn truncated(r: &Arc<FpkAlgebra>, n: usize) -> FrameResult<Arc<Self>> {
        Self::build(r, n, WittKind::Truncated)
    }

    pub fn precision(r: &Arc<FpkAlgebra>, n: usize) -> FrameResult<Arc<Self>> {
        Self::build(r, n, WittKind::Precision)
    }

    fn build(r: &Arc<FpkAlgebra>, n: usize, kind: WittKind) -> FrameResult<Arc<Self>> {
        require_fp(r)?;
        if n == 0 {
            return Err(FrameError::Unsupported("length must be positive".into()));
        }
        let basis: Vec<Coords> = (0..r.rank()).map(|i| r.basis(i)).collect();
        Ok(Arc::new(WittFrame {
            ring: r.clone(),
            n,
            kind,
            wr: WittRing::new(r, n)?,
            pth: frobenius_span(r, &basis),
        }))
    }

    pub fn length(&self) -> usize {
        self.n
    }
    pub fn kind(&self) -> WittKind {
        self.kind
    }
    pub fn witt(&self) -> &WittRing {
        &self.wr
    }
}

impl Frame for WittFrame {
    type A0 = Vec<Coords>;
    type A1 = FStar<Vec<Coords>>;

    fn id(&self) -> String {
        match self.kind {
            WittKind::Truncated => format!("witt-n({},{})", self.ring.name(), self.n),
            WittKind::Precision => format!("witt-prec({},{})", self.ring.name(), self.n),
        }
    }
    fn p(&self) -> u64 {
        self.ring.p()
    }
    fn base_ring(&self) -> &Arc<FpkAlgebra> {
        &self.ring
    }
    fn to_base(&self, x: &Vec<Coords>) -> Coords {
        x[0].clone()
    }
    fn zero0(&self) -> Vec<Coords> {
        self.wr.zero(self.n)
    }
    fn one0(&self) -> Vec<Coords> {
        self.wr.one(self.n)
    }
    fn from_int0(&self, c: i128) -> Vec<Coords> {
        self.wr.from_int(c, self.n)
    }
    fn add0(&self, x: &Vec<Coords>, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(self.wr.add(x, y))
    }
    fn neg0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(self.wr.neg(x))
    }
    fn sub0(&self, x: &Vec<Coords>, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(self.wr.sub(x, y))
    }
    fn mul0(&self, x: &Vec<Coords>, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(self.wr.mul(x, y))
    }
    fn is_zero0(&self, x: &Vec<Coords>) -> bool {
        x.iter().all(|c| self.ring.is_zero(c))
    }
    fn approx_inv0(&self, x: &Vec<Coords>) -> Option<Vec<Coords>> {
        let i0 = self.ring.inverse(&x[0])?;
        Some(self.wr.teich(&i0, self.n))
    }
    fn inv0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        witt_inverse(&self.wr, x).ok_or(FrameError::NotUnit)
    }
    /// `pW_n(R) = {(0, y_0^p, …, y_{n-2}^p)}`.
    fn divisible_by_p0(&self, x: &Vec<Coords>) -> bool {
        let z = self.ring.zpk();
        self.ring.is_zero(&x[0]) && x[1..].iter().all(|c| howell_contains(&self.pth, c, &z))
    }
    fn zero1(&self) -> FStar<Vec<Coords>> {
        FStar(self.zero0())
    }
    fn add1(&self, x: &FStar<Vec<Coords>>, y: &FStar<Vec<Coords>>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(self.wr.add(&x.0, &y.0)))
    }
    fn neg1(&self, x: &FStar<Vec<Coords>>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(self.wr.neg(&x.0)))
    }
    fn act(&self, x: &Vec<Coords>, y: &FStar<Vec<Coords>>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(self.wr.mul(&self.wr.frobenius(x)?, &y.0)))
    }
    fn tau(&self, y: &FStar<Vec<Coords>>) -> FrameResult<Vec<Coords>> {
        Ok(self.wr.verschiebung(&y.0))
    }
    fn sigma0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(self.wr.frobenius(x)?)
    }
    fn sigma1(&self, y: &FStar<Vec<Coords>>) -> FrameResult<Vec<Coords>> {
        Ok(y.0.clone())
    }
    fn d(&self) -> Vec<Coords> {
        self.from_int0(self.p() as i128)
    }
    fn random0(&self, rng: &mut dyn RngCore) -> Vec<Coords> {
        self.wr.random(rng, self.n)
    }
    fn random1(&self, rng: &mut dyn RngCore) -> FStar<Vec<Coords>> {
        FStar(self.wr.random(rng, self.n))
    }
    fn to_json0(&self, x: &Vec<Coords>) -> Value {
        coords_json(x)
    }
    fn from_json0(&self, v: &Value) -> FrameResult<Vec<Coords>> {
        coords_from_json(&self.ring, v, self.n)
    }
    fn to_json1(&self, y: &FStar<Vec<Coords>>) -> Value {
        coords_json(&y.0)
    }
    fn from_json1(&self, v: &Value) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(coords_from_json(&self.ring, v, self.n)?))
    }
}

impl WittFrame {
    fn radix(&self) -> Option<u64> {
        self.ring.size()
    }

    fn encode(&self, x: &[Coords]) -> u64 {
        let q = self.radix().expect("finite ring");
        x.iter().rev().fold(0, |acc, c| acc * q + self.ring.index_of(c))
    }

    fn decode(&self, mut c: u64) -> Vec<Coords> {
        let q = self.radix().expect("finite ring");
        (0..self.n)
            .map(|_| {
                let d = c % q;
                c /= q;
                self.ring.element(d)
            })
            .collect()
    }
}

impl FiniteFrame for WittFrame {
    fn size0(&self) -> Option<u64> {
        self.radix()?.checked_pow(self.n as u32)
    }
    fn size1(&self) -> Option<u64> {
        self.size0()
    }
    fn encode0(&self, x: &Vec<Coords>) -> u64 {
        self.encode(x)
    }
    fn decode0(&self, c: u64) -> Vec<Coords> {
        self.decode(c)
    }
    fn encode1(&self, y: &FStar<Vec<Coords>>) -> u64 {
        self.encode(&y.0)
    }
    fn decode1(&self, c: u64) -> FStar<Vec<Coords>> {
        FStar(self.decode(c))
    }
}

/// `W_n(R) → W_m(R)` for `m <= n`, strict.
pub struct WittTruncation {
    src: Arc<WittFrame>,
    dst: Arc<WittFrame>,
}

impl WittTruncation {
    pub fn new(src: &Arc<WittFrame>, m: usize) -> FrameResult<Self> {
        if m > src.n {
            return Err(FrameError::BadHom(format!("cannot extend length {} to {m}", src.n)));
        }
        Ok(WittTruncation {
            src: src.clone(),
            dst: WittFrame::build(&src.ring, m, src.kind)?,
        })
    }
}

impl FrameHom for WittTruncation {
    type Src = WittFrame;
    type Dst = WittFrame;
    fn src(&self) -> &Arc<WittFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<WittFrame> {
        &self.dst
    }
    fn g0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(x[..self.dst.n].to_vec())
    }
    fn g1(&self, y: &FStar<Vec<Coords>>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(y.0[..self.dst.n].to_vec()))
    }
    fn unit(&self) -> Vec<Coords> {
        self.dst.one0()
    }
}

/// `W_n(R) → W_n(S)` induced by a ring homomorphism, strict.
pub struct WittRingChange {
    src: Arc<WittFrame>,
    dst: Arc<WittFrame>,
    hom: RingHom,
}

impl WittRingChange {
    pub fn new(src: &Arc<WittFrame>, hom: RingHom) -> FrameResult<Self> {
        if *hom.src != *src.ring {
            return Err(FrameError::BadHom("ring homomorphism has the wrong source".into()));
        }
        Ok(WittRingChange {
            src: src.clone(),
            dst: WittFrame::build(&hom.dst, src.n, src.kind)?,
            hom,
        })
    }
}

impl FrameHom for WittRingChange {
    type Src = WittFrame;
    type Dst = WittFrame;
    fn src(&self) -> &Arc<WittFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<WittFrame> {
        &self.dst
    }
    fn g0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(x.iter().map(|c| self.hom.apply(c)).collect())
    }
    fn g1(&self, y: &FStar<Vec<Coords>>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(self.g0(&y.0)?))
    }
    fn unit(&self) -> Vec<Coords> {
        self.dst.one0()
    }
}

// ---------------------------------------------------------------------------
// sheared frame

/// `A_0 = ˢW(R)`, `A_1 = F_*ˢW(R)`, `τ = Ṽ`, `σ_0 = F`, `σ_1 = id`, `d = p̃`.
#[derive(Debug)]
pub struct ShearedFrame {
    sr: ShearedRing,
    pth_nil: Vec<Coords>,
    sample_support: usize,
}

impl ShearedFrame {
    pub fn new(r: &Arc<FpkAlgebra>, n: usize, bound: usize) -> FrameResult<Arc<Self>> {
        Ok(Self::from_ring(ShearedRing::new(r, n, bound)?))
    }

    pub fn from_ring(sr: ShearedRing) -> Arc<Self> {
        let pth_nil = frobenius_span(sr.ring(), &sr.nilradical().basis);
        let sample_support = ((sr.bound() - sr.growth()) / 3).max(1);
        Arc::new(ShearedFrame {
            sr,
            pth_nil,
            sample_support,
        })
    }

    pub fn sheared(&self) -> &ShearedRing {
        &self.sr
    }

    /// Support used by the random samplers, small enough that a few
    /// products stay inside the bound.
    pub fn sample_support(&self) -> usize {
        self.sample_support
    }

    fn json(&self, x: &ShearedWitt) -> Value {
        let eta: BTreeMap<String, &Coords> = x.eta.entries.iter().map(|(i, c)| (i.to_string(), c)).collect();
        json!({ "lambda": x.lambda, "eta": eta })
    }

    fn parse(&self, v: &Value) -> FrameResult<ShearedWitt> {
        let lambda = coords_from_json(self.sr.field(), &v["lambda"], self.sr.precision())?;
        let raw: BTreeMap<String, Coords> = match v.get("eta") {
            None | Some(Value::Null) => BTreeMap::new(),
            Some(e) => serde_json::from_value(e.clone()).map_err(|e| FrameError::Decode(e.to_string()))?,
        };
        let mut entries = BTreeMap::new();
        for (k, c) in raw {
            let i: usize = k.parse().map_err(|_| FrameError::Decode(format!("bad index {k}")))?;
            self.sr.ring().check(&c)?;
            if !self.sr.ring().is_zero(&c) {
                entries.insert(i, c);
            }
        }
        let eta = HatWittVec {
            ring: self.sr.ring().clone(),
            entries,
        };
        Ok(self.sr.make(lambda, eta)?)
    }
}

impl Frame for ShearedFrame {
    type A0 = ShearedWitt;
    type A1 = FStar<ShearedWitt>;

    fn id(&self) -> String {
        format!(
            "sheared({},{},{})",
            self.sr.ring().name(),
            self.sr.precision(),
            self.sr.bound()
        )
    }
    fn p(&self) -> u64 {
        self.sr.p()
    }
    fn base_ring(&self) -> &Arc<FpkAlgebra> {
        self.sr.ring()
    }
    fn to_base(&self, x: &ShearedWitt) -> Coords {
        self.sr.project(x)
    }
    fn zero0(&self) -> ShearedWitt {
        self.sr.zero()
    }
    fn one0(&self) -> ShearedWitt {
        self.sr.one()
    }
    fn from_int0(&self, c: i128) -> ShearedWitt {
        self.sr.from_int(c)
    }
    fn add0(&self, x: &ShearedWitt, y: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(self.sr.add(x, y)?)
    }
    fn neg0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(self.sr.neg(x)?)
    }
    fn mul0(&self, x: &ShearedWitt, y: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(self.sr.mul(x, y)?)
    }
    fn is_zero0(&self, x: &ShearedWitt) -> bool {
        x.eta.is_zero() && x.lambda.iter().all(|c| self.sr.field().is_zero(c))
    }
    fn approx_inv0(&self, x: &ShearedWitt) -> Option<ShearedWitt> {
        let lambda = witt_inverse(self.sr.witt_k(), &x.lambda)?;
        Some(ShearedWitt {
            lambda,
            eta: HatWittVec::zero(self.sr.ring()),
        })
    }
    /// `p(s(μ) + θ) = s(pμ) + VF(θ)`; the residue field is perfect.
    fn divisible_by_p0(&self, x: &ShearedWitt) -> bool {
        let z = self.sr.ring().zpk();
        self.sr.field().is_zero(&x.lambda[0])
            && !x.eta.entries.contains_key(&0)
            && x.eta.entries.values().all(|c| howell_contains(&self.pth_nil, c, &z))
    }
    fn zero1(&self) -> FStar<ShearedWitt> {
        FStar(self.sr.zero())
    }
    fn add1(&self, x: &FStar<ShearedWitt>, y: &FStar<ShearedWitt>) -> FrameResult<FStar<ShearedWitt>> {
        Ok(FStar(self.sr.add(&x.0, &y.0)?))
    }
    fn neg1(&self, x: &FStar<ShearedWitt>) -> FrameResult<FStar<ShearedWitt>> {
        Ok(FStar(self.sr.neg(&x.0)?))
    }
    fn act(&self, x: &ShearedWitt, y: &FStar<ShearedWitt>) -> FrameResult<FStar<ShearedWitt>> {
        Ok(FStar(self.sr.mul(&self.sr.frobenius(x)?, &y.0)?))
    }
    fn tau(&self, y: &FStar<ShearedWitt>) -> FrameResult<ShearedWitt> {
        Ok(self.sr.vtilde(&y.0)?)
    }
    fn sigma0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(self.sr.frobenius(x)?)
    }
    fn sigma1(&self, y: &FStar<ShearedWitt>) -> FrameResult<ShearedWitt> {
        Ok(y.0.clone())
    }
    fn d(&self) -> ShearedWitt {
        self.sr.ptilde()
    }
    fn random0(&self, rng: &mut dyn RngCore) -> ShearedWitt {
        self.sr.random(rng, self.sample_support)
    }
    fn random1(&self, rng: &mut dyn RngCore) -> FStar<ShearedWitt> {
        FStar(self.sr.random(rng, self.sample_support))
    }
    fn to_json0(&self, x: &ShearedWitt) -> Value {
        self.json(x)
    }
    fn from_json0(&self, v: &Value) -> FrameResult<ShearedWitt> {
        self.parse(v)
    }
    fn to_json1(&self, y: &FStar<ShearedWitt>) -> Value {
        self.json(&y.0)
    }
    fn from_json1(&self, v: &Value) -> FrameResult<FStar<ShearedWitt>> {
        Ok(FStar(self.parse(v)?))
    }
}

/// The homomorphism `(c, u_0)` from the sheared frame to the Witt frame at
/// the same precision, with the constants `u_0`, `α` over `Z/p^K`.
pub struct ShearedToWitt {
    src: Arc<ShearedFrame>,
    dst: Arc<WittFrame>,
    pub constants: WittConstants,
}

/// `(c, u_0)` for a sheared frame; `K = N + 2` for the constants.
pub fn frame_hom_c(src: &Arc<ShearedFrame>) -> FrameResult<ShearedToWitt> {
    let n = src.sr.precision();
    let dst = WittFrame::precision(src.sr.ring(), n)?;
    let constants = compute_u0_alpha_ptilde(src.p(), n, n as u32 + 2)?;
    Ok(ShearedToWitt {
        src: src.clone(),
        dst,
        constants,
    })
}

/// `p̃ = u_0·p` in `W_n(Z/p^k)`.
pub fn check_c_relation(p: u64, n: usize, k: u32) -> FrameResult<bool> {
    let z = crate::ring_base::make_zmod(p, k)?;
    let w = WittRing::new(&z, n + 2)?;
    let lhs = w.ptilde(n);
    let rhs = w.mul(&w.u0(n), &w.from_int(p as i128, n));
    Ok(lhs == rhs)
}

impl FrameHom for ShearedToWitt {
    type Src = ShearedFrame;
    type Dst = WittFrame;
    fn src(&self) -> &Arc<ShearedFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<WittFrame> {
        &self.dst
    }
    fn g0(&self, x: &ShearedWitt) -> FrameResult<Vec<Coords>> {
        Ok(self.src.sr.embed(x, self.dst.n)?)
    }
    fn g1(&self, y: &FStar<ShearedWitt>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(self.g0(&y.0)?))
    }
    /// `u_0` maps to 1 in an `F_p`-algebra.
    fn unit(&self) -> Vec<Coords> {
        self.dst.one0()
    }
}

/// `ˢW(R) → ˢW(S)` induced by a ring homomorphism, computed on the dense
/// representative and split again over `S`. Same precision and bound.
pub struct ShearedRingChange {
    src: Arc<ShearedFrame>,
    dst: Arc<ShearedFrame>,
    hom: RingHom,
}

impl ShearedRingChange {
    pub fn new(src: &Arc<ShearedFrame>, hom: RingHom) -> FrameResult<Self> {
        if *hom.src != **src.sr.ring() {
            return Err(FrameError::BadHom("ring homomorphism has the wrong source".into()));
        }
        let dst = ShearedFrame::new(&hom.dst, src.sr.precision(), src.sr.bound())?;
        Ok(ShearedRingChange {
            src: src.clone(),
            dst,
            hom,
        })
    }
}

impl FrameHom for ShearedRingChange {
    type Src = ShearedFrame;
    type Dst = ShearedFrame;
    fn src(&self) -> &Arc<ShearedFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<ShearedFrame> {
        &self.dst
    }
    fn g0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        let dense = self.src.sr.to_dense(x);
        let len = self.dst.sr.work_len();
        let w: Vec<Coords> = (0..len)
            .map(|i| match dense.get(i) {
                Some(c) => self.hom.apply(c),
                None => self.hom.dst.zero(),
            })
            .collect();
        Ok(self.dst.sr.split(&w)?)
    }
    fn g1(&self, y: &FStar<ShearedWitt>) -> FrameResult<FStar<ShearedWitt>> {
        Ok(FStar(self.g0(&y.0)?))
    }
    fn unit(&self) -> ShearedWitt {
        self.dst.one0()
    }
}

// ---------------------------------------------------------------------------
// divided powers

/// User-supplied divided powers: `gammas[j][m-2] = γ_m(spanning[j])` for
/// `2 <= m <= max_m`; `γ_m = 0` beyond `max_m`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdTables {
    pub spanning: Vec<Coords>,
    pub gammas: Vec<Vec<Coords>>,
}

/// Outcome of the exhaustive pd axiom check.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdReport {
    pub elements: usize,
    pub exhaustive: bool,
    pub failures: Vec<String>,
}

/// A nilpotent ideal with divided powers, tabulated on all its elements.
#[derive(Debug)]
pub struct PdIdeal {
    ring: Arc<FpkAlgebra>,
    ideal: RingIdeal,
    nil_exponent: usize,
    max_m: u64,
    gamma: HashMap<Coords, Vec<Coords>>,
    compatible: bool,
}

const PD_ELEMENT_CAP: usize = 1 << 14;

impl PdIdeal {
    /// `γ_m = 0` for `m >= 2`; valid exactly when `𝔞² = 0` and `p𝔞 = 0`.
    pub fn trivial(ideal: &RingIdeal) -> FrameResult<Self> {
        Self::with_tables(ideal, &PdTables::default())
    }

    pub fn with_tables(ideal: &RingIdeal, t: &PdTables) -> FrameResult<Self> {
        let r = ideal.ring.clone();
        require_fp(&r)?;
        let mut e = 1;
        while !ideal.power(e).is_zero() {
            e += 1;
            if e > 64 {
                return Err(FrameError::Pd("ideal is not nilpotent".into()));
            }
        }
        if t.spanning.len() != t.gammas.len() {
            return Err(FrameError::Pd("one gamma row per spanning element".into()));
        }
        let max_m = 1 + t.gammas.iter().map(|g| g.len()).max().unwrap_or(0) as u64;
        let mut gens: Vec<(Coords, Vec<Coords>)> = Vec::new();
        for (s, g) in t.spanning.iter().zip(&t.gammas) {
            if !ideal.contains(s) {
                return Err(FrameError::Pd(format!("{} is not in the ideal", r.format(s))));
            }
            let mut v = vec![r.one(), s.clone()];
            for m in 2..=max_m {
                v.push(g.get(m as usize - 2).cloned().unwrap_or_else(|| r.zero()));
            }
            gens.push((s.clone(), v));
        }
        if t.spanning.is_empty() {
            for b in &ideal.basis {
                let mut v = vec![r.one(), b.clone()];
                v.resize(max_m as usize + 1, r.zero());
                gens.push((b.clone(), v));
            }
        }
        let size = ideal.elements().len();
        if size > PD_ELEMENT_CAP {
            return Err(FrameError::Pd(format!("ideal has {size} elements, cap {PD_ELEMENT_CAP}")));
        }
        // breadth-first closure under x ↦ x + r·s with γ_m(rs) = r^m γ_m(s)
        let scalars: Vec<Coords> = match r.size() {
            Some(sz) if sz <= 1 << 12 => r.elements().collect(),
            _ => return Err(FrameError::Pd("ring too large for pd tabulation".into())),
        };
        let mut gamma: HashMap<Coords, Vec<Coords>> = HashMap::new();
        let mut zero_row = vec![r.one()];
        zero_row.resize(max_m as usize + 1, r.zero());
        gamma.insert(r.zero(), zero_row);
        let mut queue = VecDeque::from([r.zero()]);
        let mut conflicts = Vec::new();
        while let Some(x) = queue.pop_front() {
            let gx = gamma[&x].clone();
            for (s, gs) in &gens {
                for c in &scalars {
                    let cs = r.mul(c, s);
                    let mut gcs = vec![r.one()];
                    let mut cm = r.one();
                    for g in gs.iter().skip(1) {
                        cm = r.mul(&cm, c);
                        gcs.push(r.mul(&cm, g));
                    }
                    let y = r.add(&x, &cs);
                    let gy: Vec<Coords> = (0..=max_m as usize)
                        .map(|m| {
                            (0..=m).fold(r.zero(), |acc, i| r.add(&acc, &r.mul(&gx[i], &gcs[m - i])))
                        })
                        .collect();
                    match gamma.get(&y) {
                        Some(old) if *old != gy => {
                            if conflicts.len() < 4 {
                                conflicts.push(r.format(&y));
                            }
                        }
                        Some(_) => {}
                        None => {
                            gamma.insert(y.clone(), gy);
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        if !conflicts.is_empty() {
            return Err(FrameError::Pd(format!("inconsistent divided powers at {}", conflicts.join(", "))));
        }
        if gamma.len() != size {
            return Err(FrameError::Pd(format!(
                "spanning set reaches {} of {size} elements",
                gamma.len()
            )));
        }
        let pd = PdIdeal {
            ring: r,
            ideal: ideal.clone(),
            nil_exponent: e,
            max_m,
            gamma,
            compatible: true,
        };
        let rep = pd.check_axioms();
        if !rep.failures.is_empty() {
            return Err(FrameError::Pd(rep.failures.join("; ")));
        }
        Ok(pd)
    }

    pub fn ring(&self) -> &Arc<FpkAlgebra> {
        &self.ring
    }
    pub fn ideal(&self) -> &RingIdeal {
        &self.ideal
    }
    /// Least `e` with `𝔞^e = 0`.
    pub fn nil_exponent(&self) -> usize {
        self.nil_exponent
    }
    pub fn max_m(&self) -> u64 {
        self.max_m
    }
    /// Compatibility with the divided powers of `p`, automatic in characteristic `p`.
    pub fn compatible_with_p(&self) -> bool {
        self.compatible
    }
    pub fn contains(&self, x: &[u64]) -> bool {
        self.ideal.contains(x)
    }

    pub fn gamma(&self, m: u64, x: &[u64]) -> FrameResult<Coords> {
        if m > self.max_m {
            return Ok(self.ring.zero());
        }
        self.gamma
            .get(x)
            .map(|v| v[m as usize].clone())
            .ok_or_else(|| FrameError::OutsideIdeal(self.ring.format(x)))
    }

    /// The pd axioms, exhaustively over the tabulated ideal.
    pub fn check_axioms(&self) -> PdReport {
        let r = &self.ring;
        let mm = self.max_m;
        let elems: Vec<&Coords> = self.gamma.keys().collect();
        let scalars: Vec<Coords> = r.elements().collect();
        let q = BigInt::from(r.q());
        let red = |b: BigInt| b.mod_floor(&q).to_u64().unwrap();
        let fact = |n: u64| (1..=n).fold(BigInt::one(), |a, b| a * b);
        let mut fails = Vec::new();
        let mut fail = |s: String| {
            if fails.len() < 8 {
                fails.push(s);
            }
        };
        let pair_budget = 1usize << 18;
        let exhaustive = elems.len() * elems.len() <= pair_budget && elems.len() * scalars.len() <= pair_budget;
        for x in &elems {
            let g = &self.gamma[*x];
            if g[0] != r.one() || g[1] != **x {
                fail(format!("γ_0/γ_1 at {}", r.format(x)));
            }
            for m in 1..=mm {
                if !self.ideal.contains(&g[m as usize]) {
                    fail(format!("γ_{m}({}) outside the ideal", r.format(x)));
                }
            }
            for m in 1..=mm {
                for n in 1..=mm {
                    let lhs = r.mul(&g[m as usize], &g[n as usize]);
                    let c = red(fact(m + n) / (fact(m) * fact(n)));
                    let gmn = if m + n <= mm { g[(m + n) as usize].clone() } else { r.zero() };
                    if lhs != r.scale(c, &gmn) {
                        fail(format!("γ_{m}γ_{n} at {}", r.format(x)));
                    }
                    // γ_m(γ_n(x)) = (mn)!/(m!(n!)^m) γ_{mn}(x)
                    let inner = &g[n as usize];
                    let lhs = self.gamma(m, inner).unwrap_or_else(|_| r.zero());
                    let c = red(fact(m * n) / (fact(m) * fact(n).pow(m as u32)));
                    let gmn = if m * n <= mm { g[(m * n) as usize].clone() } else { r.zero() };
                    if lhs != r.scale(c, &gmn) {
                        fail(format!("γ_{m}∘γ_{n} at {}", r.format(x)));
                    }
                }
            }
            if exhaustive {
                for y in &elems {
                    let h = &self.gamma[*y];
                    let s = r.add(x, y);
                    for m in 1..=mm as usize {
                        let rhs = (0..=m).fold(r.zero(), |acc, i| r.add(&acc, &r.mul(&g[i], &h[m - i])));
                        if self.gamma(m as u64, &s).ok() != Some(rhs) {
                            fail(format!("additivity at {} + {}", r.format(x), r.format(y)));
                        }
                    }
                }
                for a in &scalars {
                    let ax = r.mul(a, x);
                    let mut am = r.one();
                    for m in 1..=mm {
                        am = r.mul(&am, a);
                        if self.gamma(m, &ax).ok() != Some(r.mul(&am, &g[m as usize])) {
                            fail(format!("γ_{m}(r·x) at {}", r.format(&ax)));
                        }
                    }
                }
            }
        }
        PdReport {
            elements: elems.len(),
            exhaustive,
            failures: fails,
        }
    }
}

/// The divided Witt coordinates `ŵ'_n(x) = Σ_{i<=n} c_{n-i}·γ_{p^{n-i}}(x_i)`
/// with `c_j = (p^j)!/p^j`; terms with `p^j > max_m` vanish and are not stored.
#[derive(Debug, Clone)]
pub struct DividedWittCoords {
    p: u64,
    coeffs: Vec<BigInt>,
    reduced: Vec<u64>,
}

impl DividedWittCoords {
    pub fn new(pd: &PdIdeal) -> Self {
        let p = pd.ring.p();
        let mut coeffs = Vec::new();
        let mut pj: u64 = 1;
        while pj <= pd.max_m {
            let f = (1..=pj).fold(BigInt::one(), |a, b| a * b);
            let (c, rem) = f.div_rem(&BigInt::from(pj));
            debug_assert!(rem.is_zero());
            coeffs.push(c);
            pj *= p;
        }
        let q = BigInt::from(pd.ring.q());
        let reduced = coeffs.iter().map(|c| c.mod_floor(&q).to_u64().unwrap()).collect();
        DividedWittCoords { p, coeffs, reduced }
    }

    /// `c_j` for `j` below the cut-off.
    pub fn coefficient(&self, j: usize) -> Option<&BigInt> {
        self.coeffs.get(j)
    }

    /// How far `ŵ'` can reach past the Witt support.
    pub fn reach(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Each stored `c_j` is an integer and `c_0 = 1`.
    pub fn check(&self) -> bool {
        let mut pj = BigInt::one();
        for c in &self.coeffs {
            let f = (1..=pj.to_u64().unwrap()).fold(BigInt::one(), |a, b| a * b);
            if &pj * c != f {
                return false;
            }
            pj *= self.p;
        }
        self.coeffs.first().is_some_and(|c| c.is_one())
    }

    pub fn to_log(&self, pd: &PdIdeal, x: &[Coords]) -> FrameResult<Vec<Coords>> {
        let r = &pd.ring;
        let mut out = Vec::with_capacity(x.len());
        for n in 0..x.len() {
            let mut acc = x[n].clone();
            let mut pj = self.p;
            for j in 1..self.reduced.len().min(n + 1) {
                let g = pd.gamma(pj, &x[n - j])?;
                acc = r.add(&acc, &r.scale(self.reduced[j], &g));
                pj *= self.p;
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn from_log(&self, pd: &PdIdeal, w: &[Coords]) -> FrameResult<Vec<Coords>> {
        let r = &pd.ring;
        let mut x: Vec<Coords> = Vec::with_capacity(w.len());
        for n in 0..w.len() {
            let mut acc = w[n].clone();
            let mut pj = self.p;
            for j in 1..self.reduced.len().min(n + 1) {
                let g = pd.gamma(pj, &x[n - j])?;
                acc = r.sub(&acc, &r.scale(self.reduced[j], &g));
                pj *= self.p;
            }
            if !pd.contains(&acc) {
                return Err(FrameError::OutsideIdeal(r.format(&acc)));
            }
            x.push(acc);
        }
        Ok(x)
    }
}

// ---------------------------------------------------------------------------
// relative frames

/// Shared data of the relative frames: the thickening `R' → R = R'/𝔞`.
#[derive(Debug)]
pub struct Thickening {
    pub pd: PdIdeal,
    pub coords: DividedWittCoords,
    pub base: Arc<FpkAlgebra>,
    pub projection: Projection,
}

impl Thickening {
    pub fn new(pd: PdIdeal) -> FrameResult<Self> {
        let (base, projection) = make_quotient(&pd.ring, &pd.ideal)?;
        let coords = DividedWittCoords::new(&pd);
        Ok(Thickening {
            pd,
            coords,
            base,
            projection,
        })
    }

    /// `i(a)` as a dense Witt vector of length `len`: `ŵ'(i(a)) = (a, 0, 0, …)`.
    pub fn i_dense(&self, a: &[u64], len: usize) -> FrameResult<Vec<Coords>> {
        let r = &self.pd.ring;
        let mut w = vec![r.zero(); len];
        w[0] = a.to_vec();
        let x = self.coords.from_log(&self.pd, &w)?;
        if self.coords.to_log(&self.pd, &x)? != w {
            return Err(FrameError::Pd("ŵ' inversion left a residual".into()));
        }
        Ok(x)
    }

    fn label(&self) -> String {
        let r = &self.pd.ring;
        let gens: Vec<String> = self.pd.ideal.generators.iter().map(|g| r.format(g)).collect();
        format!("({})", gens.join(","))
    }
}

/// `A_0 = ˢW(R')`, `A_1 = F_*ˢW(R') ⊕ 𝔞`, `τ = Ṽ ⊕ i`, `σ_1 = id ⊕ 0`.
#[derive(Debug)]
pub struct RelShearedFrame {
    inner: Arc<ShearedFrame>,
    th: Thickening,
}

impl RelShearedFrame {
    pub fn new(pd: PdIdeal, n: usize, bound: usize) -> FrameResult<Arc<Self>> {
        let inner = ShearedFrame::new(&pd.ring, n, bound)?;
        Ok(Arc::new(RelShearedFrame {
            inner,
            th: Thickening::new(pd)?,
        }))
    }

    pub fn absolute(&self) -> &Arc<ShearedFrame> {
        &self.inner
    }
    pub fn thickening(&self) -> &Thickening {
        &self.th
    }
    fn sr(&self) -> &ShearedRing {
        &self.inner.sr
    }

    fn hat_len(&self) -> usize {
        self.sr().bound() + self.th.coords.reach() + 1
    }

    fn sparse(&self, dense: &[Coords]) -> FrameResult<ShearedWitt> {
        let r = self.sr().ring();
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, c)| !r.is_zero(c))
            .map(|(i, c)| (i, c.clone()))
            .collect();
        let eta = HatWittVec {
            ring: r.clone(),
            entries,
        };
        Ok(self.sr().make(self.sr().zero().lambda, eta)?)
    }

    /// `i(a) ∈ Ŵ(𝔞) ⊆ ˢW(R')`.
    pub fn i_map(&self, a: &[u64]) -> FrameResult<ShearedWitt> {
        if !self.th.pd.contains(a) {
            return Err(FrameError::OutsideIdeal(self.sr().ring().format(a)));
        }
        let dense = self.th.i_dense(a, self.hat_len())?;
        self.sparse(&dense)
    }

    /// `ŵ'` of an element of `Ŵ(𝔞)`.
    pub fn log_coords(&self, x: &ShearedWitt) -> FrameResult<Vec<Coords>> {
        if !self.in_hat_ideal(x) {
            return Err(FrameError::OutsideIdeal("not in Ŵ(𝔞)".into()));
        }
        let dense = x.eta.to_dense(self.hat_len())?;
        self.th.coords.to_log(&self.th.pd, &dense)
    }

    pub fn from_log_coords(&self, w: &[Coords]) -> FrameResult<ShearedWitt> {
        let mut w = w.to_vec();
        w.resize(self.hat_len(), self.sr().ring().zero());
        let dense = self.th.coords.from_log(&self.th.pd, &w)?;
        self.sparse(&dense)
    }

    pub fn in_hat_ideal(&self, x: &ShearedWitt) -> bool {
        x.lambda.iter().all(|c| self.sr().field().is_zero(c))
            && x.eta.entries.values().all(|c| self.th.pd.contains(c))
    }

    /// `x = Ṽ(y) + i(a)` for `x` in the kernel of `ˢW(R') → R`.
    pub fn decompose_kernel(&self, x: &ShearedWitt) -> FrameResult<RelFil<ShearedWitt>> {
        let a = self.sr().project(x);
        if !self.th.pd.contains(&a) {
            return Err(FrameError::OutsideIdeal("not in the kernel to R".into()));
        }
        let rest = self.sr().sub(x, &self.i_map(&a)?)?;
        if !self.sr().field().is_zero(&rest.lambda[0]) || rest.eta.entries.contains_key(&0) {
            return Err(FrameError::Pd("remainder not in the image of Ṽ".into()));
        }
        let mut lambda = rest.lambda[1..].to_vec();
        lambda.push(self.sr().field().zero());
        let eta = HatWittVec {
            ring: self.sr().ring().clone(),
            entries: rest.eta.entries.iter().map(|(&i, c)| (i - 1, c.clone())).collect(),
        };
        Ok(RelFil {
            y: self.sr().make(lambda, eta)?,
            a,
        })
    }
}

impl Frame for RelShearedFrame {
    type A0 = ShearedWitt;
    type A1 = RelFil<ShearedWitt>;

    fn id(&self) -> String {
        format!(
            "rel-sheared({},{},{},{})",
            self.sr().ring().name(),
            self.th.label(),
            self.sr().precision(),
            self.sr().bound()
        )
    }
    fn p(&self) -> u64 {
        self.inner.p()
    }
    fn base_ring(&self) -> &Arc<FpkAlgebra> {
        &self.th.base
    }
    fn to_base(&self, x: &ShearedWitt) -> Coords {
        self.th.projection.hom.apply(&self.sr().project(x))
    }
    fn zero0(&self) -> ShearedWitt {
        self.inner.zero0()
    }
    fn one0(&self) -> ShearedWitt {
        self.inner.one0()
    }
    fn from_int0(&self, c: i128) -> ShearedWitt {
        self.inner.from_int0(c)
    }
    fn add0(&self, x: &ShearedWitt, y: &ShearedWitt) -> FrameResult<ShearedWitt> {
        self.inner.add0(x, y)
    }
    fn neg0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        self.inner.neg0(x)
    }
    fn mul0(&self, x: &ShearedWitt, y: &ShearedWitt) -> FrameResult<ShearedWitt> {
        self.inner.mul0(x, y)
    }
    fn is_zero0(&self, x: &ShearedWitt) -> bool {
        self.inner.is_zero0(x)
    }
    fn approx_inv0(&self, x: &ShearedWitt) -> Option<ShearedWitt> {
        self.inner.approx_inv0(x)
    }
    fn divisible_by_p0(&self, x: &ShearedWitt) -> bool {
        self.inner.divisible_by_p0(x)
    }
    fn zero1(&self) -> RelFil<ShearedWitt> {
        RelFil {
            y: self.inner.zero0(),
            a: self.sr().ring().zero(),
        }
    }
    fn add1(&self, x: &RelFil<ShearedWitt>, y: &RelFil<ShearedWitt>) -> FrameResult<RelFil<ShearedWitt>> {
        Ok(RelFil {
            y: self.inner.add0(&x.y, &y.y)?,
            a: self.sr().ring().add(&x.a, &y.a),
        })
    }
    fn neg1(&self, x: &RelFil<ShearedWitt>) -> FrameResult<RelFil<ShearedWitt>> {
        Ok(RelFil {
            y: self.inner.neg0(&x.y)?,
            a: self.sr().ring().neg(&x.a),
        })
    }
    /// `x·(y, a) = (F(x)y, w_0(x)a)`.
    fn act(&self, x: &ShearedWitt, y: &RelFil<ShearedWitt>) -> FrameResult<RelFil<ShearedWitt>> {
        let r = self.sr().ring();
        Ok(RelFil {
            y: self.sr().mul(&self.sr().frobenius(x)?, &y.y)?,
            a: r.mul(&self.sr().project(x), &y.a),
        })
    }
    fn tau(&self, y: &RelFil<ShearedWitt>) -> FrameResult<ShearedWitt> {
        let v = self.sr().vtilde(&y.y)?;
        if self.sr().ring().is_zero(&y.a) {
            return Ok(v);
        }
        Ok(self.sr().add(&v, &self.i_map(&y.a)?)?)
    }
    fn sigma0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        self.inner.sigma0(x)
    }
    fn sigma1(&self, y: &RelFil<ShearedWitt>) -> FrameResult<ShearedWitt> {
        Ok(y.y.clone())
    }
    fn d(&self) -> ShearedWitt {
        self.inner.d()
    }
    fn random0(&self, rng: &mut dyn RngCore) -> ShearedWitt {
        self.inner.random0(rng)
    }
    fn random1(&self, rng: &mut dyn RngCore) -> RelFil<ShearedWitt> {
        RelFil {
            y: self.inner.random0(rng),
            a: self.th.pd.ideal.random(rng),
        }
    }
    fn to_json0(&self, x: &ShearedWitt) -> Value {
        self.inner.to_json0(x)
    }
    fn from_json0(&self, v: &Value) -> FrameResult<ShearedWitt> {
        self.inner.from_json0(v)
    }
    fn to_json1(&self, y: &RelFil<ShearedWitt>) -> Value {
        json!({ "y": self.inner.to_json0(&y.y), "a": y.a })
    }
    fn from_json1(&self, v: &Value) -> FrameResult<RelFil<ShearedWitt>> {
        let a = coord_from_json(self.sr().ring(), &v["a"])?;
        if !self.th.pd.contains(&a) {
            return Err(FrameError::OutsideIdeal(self.sr().ring().format(&a)));
        }
        Ok(RelFil {
            y: self.inner.from_json0(&v["y"])?,
            a,
        })
    }
}

/// `K = Ŵ(𝔞)` inside the relative sheared frame; `σ̇` is the left shift in
/// `ŵ'`-coordinates.
pub struct RelShearedIdeal {
    frame: Arc<RelShearedFrame>,
}

impl RelShearedIdeal {
    pub fn new(frame: &Arc<RelShearedFrame>) -> Self {
        RelShearedIdeal { frame: frame.clone() }
    }
}

impl LeveledIdeal for RelShearedIdeal {
    type F = RelShearedFrame;
    fn frame(&self) -> &Arc<RelShearedFrame> {
        &self.frame
    }
    fn contains(&self, x: &ShearedWitt) -> bool {
        self.frame.in_hat_ideal(x)
    }
    fn tau_inv(&self, x: &ShearedWitt) -> FrameResult<RelFil<ShearedWitt>> {
        let w = self.frame.log_coords(x)?;
        let a = w[0].clone();
        let y = self.frame.from_log_coords(&w[1..])?;
        Ok(RelFil { y, a })
    }
    fn nu(&self) -> usize {
        self.frame.hat_len()
    }
    fn random_member(&self, rng: &mut dyn RngCore) -> ShearedWitt {
        let f = &self.frame;
        let sr = f.sr();
        let mut entries = BTreeMap::new();
        for i in 0..f.inner.sample_support {
            let c = f.th.pd.ideal.random(rng);
            if !sr.ring().is_zero(&c) {
                entries.insert(i, c);
            }
        }
        ShearedWitt {
            lambda: sr.zero().lambda,
            eta: HatWittVec {
                ring: sr.ring().clone(),
                entries,
            },
        }
    }
}

/// The strict surjection `ˢW(R'/R) → ˢW(R)`, quotient by the leveled ideal.
pub struct RelToAbsolute {
    src: Arc<RelShearedFrame>,
    dst: Arc<ShearedFrame>,
    qm: QuotientMap,
}

impl RelToAbsolute {
    pub fn new(src: &Arc<RelShearedFrame>) -> FrameResult<Self> {
        let qm = QuotientMap::new(src.sr().clone(), &src.th.pd.ideal)?;
        let dst = ShearedFrame::from_ring(qm.dst.clone());
        Ok(RelToAbsolute {
            src: src.clone(),
            dst,
            qm,
        })
    }
}

impl FrameHom for RelToAbsolute {
    type Src = RelShearedFrame;
    type Dst = ShearedFrame;
    fn src(&self) -> &Arc<RelShearedFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<ShearedFrame> {
        &self.dst
    }
    fn g0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(self.qm.apply(x)?)
    }
    fn g1(&self, y: &RelFil<ShearedWitt>) -> FrameResult<FStar<ShearedWitt>> {
        Ok(FStar(self.qm.apply(&y.y)?))
    }
    fn unit(&self) -> ShearedWitt {
        self.dst.one0()
    }
}

impl FrameSection for RelToAbsolute {
    fn lift0(&self, y: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(self.qm.lift(y))
    }
    fn lift1(&self, y: &FStar<ShearedWitt>) -> FrameResult<RelFil<ShearedWitt>> {
        Ok(RelFil {
            y: self.qm.lift(&y.0),
            a: self.src.sr().ring().zero(),
        })
    }
}

/// `ˢW(R') → ˢW(R'/R)`: identity in degree 0, `y ↦ (y, 0)` in degree 1.
pub struct AbsoluteToRel {
    src: Arc<ShearedFrame>,
    dst: Arc<RelShearedFrame>,
}

impl AbsoluteToRel {
    pub fn new(dst: &Arc<RelShearedFrame>) -> Self {
        AbsoluteToRel {
            src: dst.inner.clone(),
            dst: dst.clone(),
        }
    }
}

impl FrameHom for AbsoluteToRel {
    type Src = ShearedFrame;
    type Dst = RelShearedFrame;
    fn src(&self) -> &Arc<ShearedFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<RelShearedFrame> {
        &self.dst
    }
    fn g0(&self, x: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(x.clone())
    }
    fn g1(&self, y: &FStar<ShearedWitt>) -> FrameResult<RelFil<ShearedWitt>> {
        Ok(RelFil {
            y: y.0.clone(),
            a: self.src.sr.ring().zero(),
        })
    }
    fn unit(&self) -> ShearedWitt {
        self.src.one0()
    }
}

impl HodgeHom for AbsoluteToRel {
    fn g0_inv(&self, y: &ShearedWitt) -> FrameResult<ShearedWitt> {
        Ok(y.clone())
    }
    fn lift_ring(&self) -> &Arc<FpkAlgebra> {
        self.src.sr.ring()
    }
    fn filtration_preimage(&self, x: &Coords) -> FrameResult<Option<RelFil<ShearedWitt>>> {
        if !self.dst.th.pd.contains(x) {
            return Ok(None);
        }
        Ok(Some(RelFil {
            y: self.src.zero0(),
            a: x.clone(),
        }))
    }
}

/// `A_0 = W_n(R')`, `A_1 = F_*W_n(R') ⊕ 𝔞`, `τ = V ⊕ i`, `σ_1 = id ⊕ 0`.
#[derive(Debug)]
pub struct RelWittFrame {
    inner: Arc<WittFrame>,
    th: Thickening,
}

impl RelWittFrame {
    pub fn new(pd: PdIdeal, n: usize) -> FrameResult<Arc<Self>> {
        let inner = WittFrame::truncated(&pd.ring, n)?;
        Ok(Arc::new(RelWittFrame {
            inner,
            th: Thickening::new(pd)?,
        }))
    }

    pub fn absolute(&self) -> &Arc<WittFrame> {
        &self.inner
    }
    pub fn thickening(&self) -> &Thickening {
        &self.th
    }

    pub fn i_map(&self, a: &[u64]) -> FrameResult<Vec<Coords>> {
        if !self.th.pd.contains(a) {
            return Err(FrameError::OutsideIdeal(self.inner.ring.format(a)));
        }
        self.th.i_dense(a, self.inner.n)
    }

    pub fn in_witt_ideal(&self, x: &[Coords]) -> bool {
        x.iter().all(|c| self.th.pd.contains(c))
    }
}

impl Frame for RelWittFrame {
    type A0 = Vec<Coords>;
    type A1 = RelFil<Vec<Coords>>;

    fn id(&self) -> String {
        format!(
            "rel-witt({},{},{})",
            self.inner.ring.name(),
            self.th.label(),
            self.inner.n
        )
    }
    fn p(&self) -> u64 {
        self.inner.p()
    }
    fn base_ring(&self) -> &Arc<FpkAlgebra> {
        &self.th.base
    }
    fn to_base(&self, x: &Vec<Coords>) -> Coords {
        self.th.projection.hom.apply(&x[0])
    }
    fn zero0(&self) -> Vec<Coords> {
        self.inner.zero0()
    }
    fn one0(&self) -> Vec<Coords> {
        self.inner.one0()
    }
    fn from_int0(&self, c: i128) -> Vec<Coords> {
        self.inner.from_int0(c)
    }
    fn add0(&self, x: &Vec<Coords>, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        self.inner.add0(x, y)
    }
    fn neg0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        self.inner.neg0(x)
    }
    fn sub0(&self, x: &Vec<Coords>, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        self.inner.sub0(x, y)
    }
    fn mul0(&self, x: &Vec<Coords>, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        self.inner.mul0(x, y)
    }
    fn is_zero0(&self, x: &Vec<Coords>) -> bool {
        self.inner.is_zero0(x)
    }
    fn approx_inv0(&self, x: &Vec<Coords>) -> Option<Vec<Coords>> {
        self.inner.approx_inv0(x)
    }
    fn inv0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        self.inner.inv0(x)
    }
    fn divisible_by_p0(&self, x: &Vec<Coords>) -> bool {
        self.inner.divisible_by_p0(x)
    }
    fn zero1(&self) -> RelFil<Vec<Coords>> {
        RelFil {
            y: self.inner.zero0(),
            a: self.inner.ring.zero(),
        }
    }
    fn add1(&self, x: &RelFil<Vec<Coords>>, y: &RelFil<Vec<Coords>>) -> FrameResult<RelFil<Vec<Coords>>> {
        Ok(RelFil {
            y: self.inner.add0(&x.y, &y.y)?,
            a: self.inner.ring.add(&x.a, &y.a),
        })
    }
    fn neg1(&self, x: &RelFil<Vec<Coords>>) -> FrameResult<RelFil<Vec<Coords>>> {
        Ok(RelFil {
            y: self.inner.neg0(&x.y)?,
            a: self.inner.ring.neg(&x.a),
        })
    }
    fn act(&self, x: &Vec<Coords>, y: &RelFil<Vec<Coords>>) -> FrameResult<RelFil<Vec<Coords>>> {
        let w = &self.inner.wr;
        Ok(RelFil {
            y: w.mul(&w.frobenius(x)?, &y.y),
            a: self.inner.ring.mul(&x[0], &y.a),
        })
    }
    fn tau(&self, y: &RelFil<Vec<Coords>>) -> FrameResult<Vec<Coords>> {
        let v = self.inner.wr.verschiebung(&y.y);
        Ok(self.inner.wr.add(&v, &self.i_map(&y.a)?))
    }
    fn sigma0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        self.inner.sigma0(x)
    }
    fn sigma1(&self, y: &RelFil<Vec<Coords>>) -> FrameResult<Vec<Coords>> {
        Ok(y.y.clone())
    }
    fn d(&self) -> Vec<Coords> {
        self.inner.d()
    }
    fn random0(&self, rng: &mut dyn RngCore) -> Vec<Coords> {
        self.inner.random0(rng)
    }
    fn random1(&self, rng: &mut dyn RngCore) -> RelFil<Vec<Coords>> {
        RelFil {
            y: self.inner.random0(rng),
            a: self.th.pd.ideal.random(rng),
        }
    }
    fn to_json0(&self, x: &Vec<Coords>) -> Value {
        coords_json(x)
    }
    fn from_json0(&self, v: &Value) -> FrameResult<Vec<Coords>> {
        self.inner.from_json0(v)
    }
    fn to_json1(&self, y: &RelFil<Vec<Coords>>) -> Value {
        json!({ "y": y.y, "a": y.a })
    }
    fn from_json1(&self, v: &Value) -> FrameResult<RelFil<Vec<Coords>>> {
        let a = coord_from_json(&self.inner.ring, &v["a"])?;
        if !self.th.pd.contains(&a) {
            return Err(FrameError::OutsideIdeal(self.inner.ring.format(&a)));
        }
        Ok(RelFil {
            y: self.inner.from_json0(&v["y"])?,
            a,
        })
    }
}

/// `K = W_n(𝔞)`; `τ_K^{-1}` drops the top `ŵ'`-coordinate of the shifted part.
pub struct RelWittIdeal {
    frame: Arc<RelWittFrame>,
}

impl RelWittIdeal {
    pub fn new(frame: &Arc<RelWittFrame>) -> Self {
        RelWittIdeal { frame: frame.clone() }
    }
}

impl LeveledIdeal for RelWittIdeal {
    type F = RelWittFrame;
    fn frame(&self) -> &Arc<RelWittFrame> {
        &self.frame
    }
    fn contains(&self, x: &Vec<Coords>) -> bool {
        self.frame.in_witt_ideal(x)
    }
    fn tau_inv(&self, x: &Vec<Coords>) -> FrameResult<RelFil<Vec<Coords>>> {
        let th = &self.frame.th;
        if !self.contains(x) {
            return Err(FrameError::OutsideIdeal("not in W(𝔞)".into()));
        }
        let w = th.coords.to_log(&th.pd, x)?;
        let mut rest = w[1..].to_vec();
        rest.push(th.pd.ring.zero());
        Ok(RelFil {
            y: th.coords.from_log(&th.pd, &rest)?,
            a: w[0].clone(),
        })
    }
    fn nu(&self) -> usize {
        self.frame.inner.n
    }
    fn random_member(&self, rng: &mut dyn RngCore) -> Vec<Coords> {
        (0..self.frame.inner.n).map(|_| self.frame.th.pd.ideal.random(rng)).collect()
    }
}

/// `W_n(R') → W_n(R)`, componentwise reduction, with a componentwise section.
pub struct RelWittToAbsolute {
    src: Arc<RelWittFrame>,
    dst: Arc<WittFrame>,
}

impl RelWittToAbsolute {
    pub fn new(src: &Arc<RelWittFrame>) -> FrameResult<Self> {
        Ok(RelWittToAbsolute {
            src: src.clone(),
            dst: WittFrame::truncated(&src.th.base, src.inner.n)?,
        })
    }
}

impl FrameHom for RelWittToAbsolute {
    type Src = RelWittFrame;
    type Dst = WittFrame;
    fn src(&self) -> &Arc<RelWittFrame> {
        &self.src
    }
    fn dst(&self) -> &Arc<WittFrame> {
        &self.dst
    }
    fn g0(&self, x: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(x.iter().map(|c| self.src.th.projection.hom.apply(c)).collect())
    }
    fn g1(&self, y: &RelFil<Vec<Coords>>) -> FrameResult<FStar<Vec<Coords>>> {
        Ok(FStar(self.g0(&y.y)?))
    }
    fn unit(&self) -> Vec<Coords> {
        self.dst.one0()
    }
}

impl FrameSection for RelWittToAbsolute {
    fn lift0(&self, y: &Vec<Coords>) -> FrameResult<Vec<Coords>> {
        Ok(y.iter().map(|c| self.src.th.projection.lift(c)).collect())
    }
    fn lift1(&self, y: &FStar<Vec<Coords>>) -> FrameResult<RelFil<Vec<Coords>>> {
        Ok(RelFil {
            y: self.lift0(&y.0)?,
            a: self.src.inner.ring.zero(),
        })
    }
}

/// Random element of `R` used by tests that need ring-level samples.
pub fn random_ring_element(r: &FpkAlgebra, rng: &mut dyn RngCore) -> Coords {
    (0..r.rank()).map(|_| rng.gen_range(0..r.q())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{
        base_change, check_frame_axioms, check_frame_hom, check_leveled, hodge_lift, is_morphism, lift_morphism,
        lifted_filtration, mat_inverse, random_invertible_morphism, transport, Mat, Window, WindowMorphism,
    };
    use crate::ring_base::extend_nilpotent;
    use crate::ring_base::std_rings::{f2, f3, f4, truncated};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn dual_numbers() -> (Arc<FpkAlgebra>, RingIdeal) {
        let r = truncated(&f2(), 2);
        let eps = RingIdeal::generated(&r, vec![r.basis(1)]);
        (r, eps)
    }

    /// `F_2⟨x⟩/(γ_{>=4})`: `γ_2(x) = y`, `γ_3(x) = xy`.
    fn divided_power_algebra() -> (Arc<FpkAlgebra>, PdIdeal) {
        let r = extend_nilpotent(&extend_nilpotent(&f2(), 2, "x").unwrap(), 2, "y").unwrap();
        let (x, y) = (r.basis(1), r.basis(2));
        let xy = r.mul(&x, &y);
        assert!(!r.is_zero(&xy));
        let ideal = RingIdeal::generated(&r, vec![x.clone(), y.clone()]);
        let t = PdTables {
            spanning: vec![x.clone(), y.clone(), xy.clone()],
            gammas: vec![vec![y, xy, r.zero()], vec![r.zero(); 3], vec![r.zero(); 3]],
        };
        let pd = PdIdeal::with_tables(&ideal, &t).unwrap();
        (r, pd)
    }

    #[test]
    fn witt_frame_basics() {
        let mut g = rng();
        let f = WittFrame::truncated(&f2(), 2).unwrap();
        assert_eq!(f.size0(), Some(4));
        let f1 = WittFrame::truncated(&f3(), 1).unwrap();
        for _ in 0..20 {
            assert!(f1.is_zero0(&f1.tau(&f1.random1(&mut g)).unwrap()));
        }
        for r in [f2(), f4(), truncated(&f2(), 3), truncated(&f3(), 2)] {
            let f = WittFrame::truncated(&r, 3).unwrap();
            let rep = check_frame_axioms(f.as_ref(), 100, &mut g).unwrap();
            assert!(rep.passed(), "{rep:?}");
        }
        assert!(WittFrame::truncated(&crate::ring_base::make_zmod(2, 2).unwrap(), 2).is_err());
        for c in 0..f.size0().unwrap() {
            assert_eq!(f.encode0(&f.decode0(c)), c);
        }
    }

    #[test]
    fn sheared_frame_axioms_and_comparison() {
        let mut g = rng();
        for r in [truncated(&f2(), 2), truncated(&f2(), 3), truncated(&f3(), 2)] {
            let f = ShearedFrame::new(&r, 3, 10).unwrap();
            let rep = check_frame_axioms(f.as_ref(), 100, &mut g).unwrap();
            assert!(rep.passed(), "{rep:?}");
            let c = frame_hom_c(&f).unwrap();
            assert!(check_frame_hom(&c, 50, &mut g).unwrap().passed());
            let unit = Window::unit(&f);
            let bc = base_change(&unit, &c).unwrap();
            assert_eq!(bc.psi, Window::unit(c.dst()).psi);
        }
        // perfect base: the comparison is a bijection
        let f = ShearedFrame::new(&f4(), 3, 3).unwrap();
        let c = frame_hom_c(&f).unwrap();
        for _ in 0..50 {
            let x = f.random0(&mut g);
            assert_eq!(f.sheared().split(&c.g0(&x).unwrap()).unwrap(), x);
        }
        assert!(check_c_relation(2, 4, 6).unwrap());
        assert!(check_c_relation(3, 3, 5).unwrap());
        let c3 = frame_hom_c(&ShearedFrame::new(&f3(), 2, 2).unwrap()).unwrap();
        assert!(c3.constants.u0.iter().enumerate().all(|(i, &d)| d == (i == 0) as u64));
        assert_eq!(c3.constants.u0, c3.constants.alpha);
    }

    #[test]
    fn sheared_base_ring_is_r() {
        let r = truncated(&f2(), 3);
        let f = ShearedFrame::new(&r, 2, 8).unwrap();
        let mut g = rng();
        for _ in 0..50 {
            let y = f.random1(&mut g);
            assert!(r.is_zero(&f.to_base(&f.tau(&y).unwrap())));
        }
        for x in r.elements() {
            assert_eq!(f.to_base(&f.sheared().teich(&x).unwrap()), x);
        }
    }

    #[test]
    fn pd_tables() {
        let (r, eps) = dual_numbers();
        let pd = PdIdeal::trivial(&eps).unwrap();
        assert_eq!(pd.nil_exponent(), 2);
        assert!(pd.check_axioms().failures.is_empty());
        let (_, pd2) = divided_power_algebra();
        let rep = pd2.check_axioms();
        assert!(rep.exhaustive && rep.failures.is_empty(), "{rep:?}");
        // trivial divided powers need a square-zero ideal
        let t3 = truncated(&f2(), 3);
        assert!(PdIdeal::trivial(&RingIdeal::generated(&t3, vec![t3.basis(1)])).is_err());
        // γ_2(ε) = ε violates γ_1γ_1 = 2γ_2
        let bad = PdTables {
            spanning: vec![r.basis(1)],
            gammas: vec![vec![r.basis(1)]],
        };
        assert!(PdIdeal::with_tables(&eps, &bad).is_err());
    }

    fn check_log_coords(pd: &PdIdeal, len: usize) {
        let r = pd.ring().clone();
        let w = WittRing::new(&r, len).unwrap();
        let dwc = DividedWittCoords::new(pd);
        assert!(dwc.check());
        let mut g = rng();
        let sample = |g: &mut ChaCha8Rng| -> Vec<Coords> { (0..len).map(|_| pd.ideal().random(g)).collect() };
        for _ in 0..60 {
            let (x, y) = (sample(&mut g), sample(&mut g));
            let lx = dwc.to_log(pd, &x).unwrap();
            let ly = dwc.to_log(pd, &y).unwrap();
            let lxy = dwc.to_log(pd, &w.add(&x, &y)).unwrap();
            let sum: Vec<Coords> = lx.iter().zip(&ly).map(|(a, b)| r.add(a, b)).collect();
            assert_eq!(lxy, sum);
            assert_eq!(dwc.from_log(pd, &lx).unwrap(), x);
            // W(R')-linearity through the ghost components w_n(t) = t_0^{p^n}
            let t = w.random(&mut g, len);
            let ltx = dwc.to_log(pd, &w.mul(&t, &x)).unwrap();
            for n in 0..len {
                let wn = r.pow(&t[0], (r.p() as u128).pow(n as u32));
                assert_eq!(ltx[n], r.mul(&wn, &lx[n]));
            }
        }
    }

    #[test]
    fn divided_witt_coordinates() {
        let (_, eps) = dual_numbers();
        check_log_coords(&PdIdeal::trivial(&eps).unwrap(), 6);
        let (_, pd2) = divided_power_algebra();
        check_log_coords(&pd2, 6);
    }

    #[test]
    fn relative_sheared_frame() {
        let mut g = rng();
        let (r, eps) = dual_numbers();
        let f = RelShearedFrame::new(PdIdeal::trivial(&eps).unwrap(), 2, 8).unwrap();
        let a = r.basis(1);
        let ia = f.i_map(&a).unwrap();
        let mut expect = vec![a.clone()];
        expect.resize(f.hat_len(), r.zero());
        assert_eq!(f.log_coords(&ia).unwrap(), expect);
        let rep = check_frame_axioms(f.as_ref(), 100, &mut g).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(f.base_ring().rank() == 1);
        // kernel of ˢW(R') → R is ṼˢW(R') ⊕ i(𝔞)
        for _ in 0..50 {
            let t = f.random1(&mut g);
            let x = f.tau(&t).unwrap();
            assert!(f.base_ring().is_zero(&f.to_base(&x)));
            let d = f.decompose_kernel(&x).unwrap();
            assert_eq!(f.tau(&d).unwrap(), x);
        }
        let k = RelShearedIdeal::new(&f);
        assert_eq!(check_leveled(&k, 50, &mut g).unwrap(), 0);
        let q = RelToAbsolute::new(&f).unwrap();
        assert!(check_frame_hom(&q, 50, &mut g).unwrap().passed());
        for _ in 0..20 {
            let y = q.dst().random0(&mut g);
            assert_eq!(q.g0(&q.lift0(&y).unwrap()).unwrap(), y);
        }
        let h = AbsoluteToRel::new(&f);
        assert!(check_frame_hom(&h, 50, &mut g).unwrap().passed());
    }

    #[test]
    fn relative_sheared_with_divided_powers() {
        let mut g = rng();
        let (_, pd) = divided_power_algebra();
        let f = RelShearedFrame::new(pd, 2, 10).unwrap();
        let rep = check_frame_axioms(f.as_ref(), 100, &mut g).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(check_leveled(&RelShearedIdeal::new(&f), 50, &mut g).unwrap(), 0);
    }

    #[test]
    fn relative_witt_frame() {
        let mut g = rng();
        let (r, eps) = dual_numbers();
        let f = RelWittFrame::new(PdIdeal::trivial(&eps).unwrap(), 3).unwrap();
        let rep = check_frame_axioms(f.as_ref(), 100, &mut g).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let only_a = RelFil {
            y: f.zero0(),
            a: r.basis(1),
        };
        assert!(f.is_zero0(&f.sigma1(&only_a).unwrap()));
        let k = RelWittIdeal::new(&f);
        assert_eq!(check_leveled(&k, 50, &mut g).unwrap(), 0);
        // σ̇ is the left shift in ŵ'-coordinates
        let th = f.thickening();
        for _ in 0..30 {
            let x = k.random_member(&mut g);
            let w = th.coords.to_log(&th.pd, &x).unwrap();
            let s = th.coords.to_log(&th.pd, &k.sigma_dot(&x).unwrap()).unwrap();
            let mut shifted = w[1..].to_vec();
            shifted.push(r.zero());
            assert_eq!(s, shifted);
        }
        let q = RelWittToAbsolute::new(&f).unwrap();
        assert!(check_frame_hom(&q, 50, &mut g).unwrap().passed());
    }

    /// A random isomorphism `M̄ → M̄'` over `ˢW(R)` and independent lifts.
    fn deformation_case(
        q: &RelToAbsolute,
        r0: usize,
        r1: usize,
        g: &mut ChaCha8Rng,
    ) -> (Window<RelShearedFrame>, Window<RelShearedFrame>, WindowMorphism<ShearedFrame>) {
        let fb = q.dst().clone();
        let f = q.src().clone();
        let base = loop {
            let psi = Mat::from_fn(r0 + r1, r0 + r1, |_, _| fb.random0(g));
            if let Ok(w) = Window::new(&fb, r0, r1, psi) {
                break w;
            }
        };
        let fbar = random_invertible_morphism(fb.as_ref(), r0, r1, g).unwrap();
        let target = transport(&base, &fbar).unwrap();
        let k = RelShearedIdeal::new(&f);
        let lift = |w: &Window<ShearedFrame>, g: &mut ChaCha8Rng| {
            let psi = Mat::try_from_fn(w.psi.rows, w.psi.cols, |i, j| {
                f.add0(&q.lift0(w.psi.get(i, j))?, &k.random_member(g))
            })
            .unwrap();
            Window::new(&f, r0, r1, psi).unwrap()
        };
        (lift(&base, g), lift(&target, g), fbar)
    }

    #[test]
    fn deformation_lifts_are_unique() {
        let mut g = rng();
        let (_, eps) = dual_numbers();
        let f = RelShearedFrame::new(PdIdeal::trivial(&eps).unwrap(), 2, 8).unwrap();
        let q = RelToAbsolute::new(&f).unwrap();
        let k = RelShearedIdeal::new(&f);
        for _ in 0..5 {
            let (m, m2, fbar) = deformation_case(&q, 1, 1, &mut g);
            let l1 = lift_morphism(&k, &q, &m, &m2, &fbar, None).unwrap();
            assert!(is_morphism(&m, &m2, &l1.morphism).unwrap().holds);
            assert_eq!(l1.iterations, k.nu());
            let z0 = Mat::from_fn(2, 2, |_, _| k.random_member(&mut g));
            let l2 = lift_morphism(&k, &q, &m, &m2, &fbar, Some(&z0)).unwrap();
            assert_eq!(l1.morphism, l2.morphism);
            assert_eq!(base_change_blocks(&q, &l1.morphism), fbar);
        }
        // the identity lifts to the identity
        let (m, _, _) = deformation_case(&q, 1, 1, &mut g);
        let mbar = base_change(&m, &q).unwrap();
        let id = WindowMorphism::identity(&mbar);
        let l = lift_morphism(&k, &q, &m, &m, &id, None).unwrap();
        assert_eq!(l.morphism, WindowMorphism::identity(&m));
    }

    fn base_change_blocks(q: &RelToAbsolute, f: &WindowMorphism<RelShearedFrame>) -> WindowMorphism<ShearedFrame> {
        crate::frames::base_change_morphism(f, q).unwrap()
    }

    #[test]
    fn hodge_lifts_enumerated() {
        let (r, eps) = dual_numbers();
        let f = RelShearedFrame::new(PdIdeal::trivial(&eps).unwrap(), 2, 8).unwrap();
        let h = AbsoluteToRel::new(&f);
        let mut g = rng();
        let n = transport(
            &Window::from_int(&f, 1, 1, &[vec![0, 1], vec![1, 0]]).unwrap(),
            &random_invertible_morphism(f.as_ref(), 1, 1, &mut g).unwrap(),
        )
        .unwrap();
        let mut seen = 0;
        for x in r.elements() {
            match hodge_lift(&h, &n, &[vec![x.clone()]]) {
                Ok((ma, iso)) => {
                    seen += 1;
                    assert!(ma.check_inverse().unwrap());
                    assert_eq!(ma.dimension(), n.dimension());
                    let bc = base_change(&ma, &h).unwrap();
                    assert!(is_morphism(&bc, &n, &iso).unwrap().holds);
                    assert!(mat_inverse(f.as_ref(), &iso.x_matrix(f.as_ref()).unwrap()).is_ok());
                    let l = lifted_filtration(&h, &iso).unwrap();
                    assert_eq!(l.rows_vec(), vec![vec![x.clone()], vec![r.one()]]);
                }
                Err(FrameError::NotSummandLift(_)) => assert!(!eps.contains(&x)),
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(seen, 2);
    }
}
