//! Points of the complexes attached to windows, evaluated on finite test
//! rings by full enumeration.
//!
//! * `C_n(M)(S)`: the complex `Γ` of a window over `W_n(R)` after base
//!   change to `W_n(S)`.
//! * `Z_n(M)(S)`: `Γ` with coefficients in `Ŵ(S)[F^n]`, shifted by one. The
//!   carriers are infinite; they are cut off at a support bound `L` and the
//!   bound is raised until the invariants repeat.
//! * `ˢC_n(M)(S)`: the cone of `p^n` on `Γ` over `ˢW(S)`. Its `H^0` sits in
//!   `0 → T → H^0 → K → 0` with `T` the cokernel of `γ` on `p^n`-torsion and
//!   `K = {z ∈ M_1/p^n : γ(z) ∈ p^n M_0}`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::frame_instances::{
    frame_hom_c, FStar, ShearedFrame, ShearedRingChange, WittFrame, WittRingChange, WittTruncation,
};
use crate::frames::{
    base_change, gamma_apply, mat_inverse, CarrierGroup, FiniteFrame, Frame, FrameError, FrameHom, FrameResult,
    GammaComplex, Mat, Window,
};
use crate::ring_base::{Coords, FpkAlgebra, RingHom};
use crate::sheared_witt::{check_vn_wn_sequence, CheckReport, ShearedRing, ShearedWitt};
use crate::witt::{HatWittVec, WittRing};
use crate::zmod_linalg::{
    complex_homology, subgroup_type, subquotient_type, AbGroupMap, AbGroupType, FiniteGroup, PresentedGroup,
};

/// Default enumeration budget for a single carrier.
pub const DEFAULT_BUDGET: u64 = 1 << 20;

// ---------------------------------------------------------------------------
// test rings and reports

/// A finite `F_p`-algebra `S` with its structure map `R → S`.
#[derive(Debug, Clone)]
pub struct TestRing {
    pub name: String,
    pub ring: Arc<FpkAlgebra>,
    pub structure: RingHom,
    pub budget: u64,
}

impl TestRing {
    /// Re-validates the structure map, since `RingHom` fields are public.
    pub fn new(structure: RingHom, budget: u64) -> FrameResult<Self> {
        let structure = RingHom::new(structure.src.clone(), structure.dst.clone(), structure.images.clone())?;
        if !structure.dst.is_fp_algebra() {
            return Err(FrameError::Unsupported(format!("{} is not an F_p-algebra", structure.dst.name())));
        }
        Ok(TestRing {
            name: structure.dst.name().to_string(),
            ring: structure.dst.clone(),
            structure,
            budget,
        })
    }

    /// `S` as an algebra over its prime field `R = F_p`.
    pub fn over_prime_field(base: &Arc<FpkAlgebra>, s: &Arc<FpkAlgebra>, budget: u64) -> FrameResult<Self> {
        if base.rank() != 1 || base.k() != 1 {
            return Err(FrameError::Unsupported(format!("{} is not a prime field", base.name())));
        }
        Self::new(RingHom::new(base.clone(), s.clone(), vec![s.one()])?, budget)
    }

    pub fn p(&self) -> u64 {
        self.ring.p()
    }

    pub fn is_reduced(&self) -> bool {
        self.ring.nilradical().is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexKind {
    /// `C_n`.
    C,
    /// `C'_n`, the bottom row of the duality diagram.
    CPrime,
    /// `Z_n`.
    Z,
    /// `ˢC_n`.
    SheafC,
}

/// Invariants at one truncation level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub precision: Option<usize>,
    pub support: Option<usize>,
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointReport {
    pub complex: ComplexKind,
    pub window: String,
    pub test_ring: String,
    pub n: usize,
    pub precision: Option<usize>,
    pub support: Option<usize>,
    pub h_minus1: Option<AbGroupType>,
    pub h0: Option<AbGroupType>,
    /// `log_p |H^0|`, known even when the group structure is not.
    pub h0_log_order: u32,
    pub h1: Option<AbGroupType>,
    pub trace: Vec<TraceEntry>,
    /// The last two trace entries agree.
    pub stable: bool,
    pub notes: Vec<String>,
    pub wall_ms: u64,
}

impl PointReport {
    fn new(complex: ComplexKind, window: String, s: &TestRing, n: usize) -> Self {
        PointReport {
            complex,
            window,
            test_ring: s.name.clone(),
            n,
            precision: None,
            support: None,
            h_minus1: None,
            h0: None,
            h0_log_order: 0,
            h1: None,
            trace: vec![],
            stable: true,
            notes: vec![],
            wall_ms: 0,
        }
    }

    /// The report without timing, for regression comparisons.
    pub fn without_timing(&self) -> PointReport {
        PointReport {
            wall_ms: 0,
            ..self.clone()
        }
    }
}

/// Short content hash of a window's JSON form.
pub fn window_id<F: Frame>(m: &Window<F>) -> String {
    let j = serde_json::to_string(&m.to_json()).expect("window json");
    let d = Sha256::digest(j.as_bytes());
    hex::encode(&d[..8])
}

fn fmt_type(t: &Option<AbGroupType>) -> String {
    t.as_ref().map_or("?".into(), |t| t.to_string())
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// Least `c` with `p^c >= ν`, the support growth of sums in `Ŵ` when the
/// nilradical has index `ν`.
fn carry_reach(p: u64, nu: usize) -> usize {
    let mut c = 0;
    while (p as u128).pow(c as u32) < nu as u128 {
        c += 1;
    }
    c
}

// ---------------------------------------------------------------------------
// finite groups used as carriers

/// The subgroup of `Ŵ(J)` generated by `V^i[a]`, `i < L`, `a ∈ J`, stored as
/// dense vectors of a fixed length with a margin that must stay zero.
pub struct HatGroup<'a> {
    wr: &'a WittRing,
    len: usize,
    elems: Vec<Vec<Coords>>,
    index: HashMap<Vec<Coords>, u64>,
}

impl<'a> HatGroup<'a> {
    pub fn generate(wr: &'a WittRing, ideal: &[Coords], support: usize, len: usize, cap: u64) -> FrameResult<Self> {
        let r = wr.ring().clone();
        if support + 1 > len || len > wr.max_len() {
            return Err(FrameError::Shape(format!("support {support} does not fit in length {len}")));
        }
        let zero = wr.zero(len);
        let mut gens = Vec::new();
        for i in 0..support {
            for a in ideal.iter().filter(|a| !r.is_zero(a)) {
                let mut v = zero.clone();
                v[i] = a.clone();
                gens.push(v);
            }
        }
        let mut g = HatGroup {
            wr,
            len,
            elems: vec![zero.clone()],
            index: HashMap::from([(zero, 0)]),
        };
        let mut next = 0;
        while next < g.elems.len() {
            let x = g.elems[next].clone();
            next += 1;
            for h in &gens {
                let y = wr.add(&x, h);
                if !r.is_zero(&y[len - 1]) {
                    return Err(FrameError::TooLarge(format!("support margin exhausted at length {len}")));
                }
                if !g.index.contains_key(&y) {
                    if g.elems.len() as u64 >= cap {
                        return Err(FrameError::TooLarge(format!("Ŵ carrier exceeds cap {cap}")));
                    }
                    g.index.insert(y.clone(), g.elems.len() as u64);
                    g.elems.push(y);
                }
            }
        }
        Ok(g)
    }

    pub fn dense_len(&self) -> usize {
        self.len
    }
    pub fn element(&self, c: u64) -> &Vec<Coords> {
        &self.elems[c as usize]
    }
    pub fn code(&self, x: &[Coords]) -> Option<u64> {
        self.index.get(x).copied()
    }
}

impl FiniteGroup for HatGroup<'_> {
    fn order(&self) -> u64 {
        self.elems.len() as u64
    }
    fn zero(&self) -> u64 {
        0
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = self.wr.add(&self.elems[a as usize], &self.elems[b as usize]);
        self.index[&s]
    }
    fn neg(&self, a: u64) -> u64 {
        self.index[&self.wr.neg(&self.elems[a as usize])]
    }
}

/// Direct product of enumerated groups, mixed radix with the first factor
/// least significant.
pub struct ProductGroup<'a> {
    factors: Vec<&'a dyn FiniteGroup>,
    order: u64,
}

impl<'a> ProductGroup<'a> {
    pub fn new(factors: Vec<&'a dyn FiniteGroup>, cap: u64) -> FrameResult<Self> {
        let mut order: u64 = 1;
        for f in &factors {
            order = order
                .checked_mul(f.order())
                .filter(|&o| o <= cap)
                .ok_or_else(|| FrameError::TooLarge(format!("carrier exceeds cap {cap}")))?;
        }
        Ok(ProductGroup { factors, order })
    }

    pub fn radices(&self) -> Vec<u64> {
        self.factors.iter().map(|f| f.order()).collect()
    }

    pub fn split(&self, mut c: u64) -> Vec<u64> {
        self.factors
            .iter()
            .map(|f| {
                let d = c % f.order();
                c /= f.order();
                d
            })
            .collect()
    }

    pub fn join(&self, d: &[u64]) -> u64 {
        let mut c = 0;
        for (i, f) in self.factors.iter().enumerate().rev() {
            c = c * f.order() + d[i];
        }
        c
    }
}

impl FiniteGroup for ProductGroup<'_> {
    fn order(&self) -> u64 {
        self.order
    }
    fn zero(&self) -> u64 {
        let z: Vec<u64> = self.factors.iter().map(|f| f.zero()).collect();
        self.join(&z)
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        let (x, y) = (self.split(a), self.split(b));
        let s: Vec<u64> = self.factors.iter().enumerate().map(|(i, f)| f.add(x[i], y[i])).collect();
        self.join(&s)
    }
    fn neg(&self, a: u64) -> u64 {
        let x = self.split(a);
        let s: Vec<u64> = self.factors.iter().enumerate().map(|(i, f)| f.neg(x[i])).collect();
        self.join(&s)
    }
}

/// Kernel on `small^h` and `small^h / (γ(big^h) ∩ small^h)` for a map `γ`
/// on `Ŵ`-valued coordinates. `γ` returns `None` when an image leaves the
/// dense window.
fn hat_homology(
    p: u64,
    small: &HatGroup,
    big: &HatGroup,
    h: usize,
    budget: u64,
    gamma: &dyn Fn(&[Vec<Coords>]) -> FrameResult<Vec<Vec<Coords>>>,
) -> FrameResult<(AbGroupType, AbGroupType)> {
    let ps = ProductGroup::new(vec![small as &dyn FiniteGroup; h], budget)?;
    let pb = ProductGroup::new(vec![big as &dyn FiniteGroup; h], budget)?;
    let wr = small.wr;
    let zero = small.element(0).clone();
    let add = |a: &Vec<Vec<Coords>>, b: &Vec<Vec<Coords>>| -> FrameResult<Vec<Vec<Coords>>> {
        Ok(a.iter().zip(b).map(|(x, y)| wr.add(x, y)).collect())
    };
    let slot_of = |g: &HatGroup, j: usize, d: u64| -> FrameResult<Vec<Vec<Coords>>> {
        let mut x = vec![zero.clone(); h];
        x[j] = g.element(d).clone();
        gamma(&x)
    };
    let mut kernel = Vec::new();
    odometer(&ps.radices(), |j, d| slot_of(small, j, d), vec![zero.clone(); h], add, |c, y| {
        if y.iter().all(|v| *v == zero) {
            kernel.push(c);
        }
        Ok(())
    })?;
    let mut image = vec![false; ps.order() as usize];
    odometer(&pb.radices(), |j, d| slot_of(big, j, d), vec![zero.clone(); h], add, |_, y| {
        let codes: Option<Vec<u64>> = y.iter().map(|v| small.code(v)).collect();
        if let Some(codes) = codes {
            image[ps.join(&codes) as usize] = true;
        }
        Ok(())
    })?;
    let ker = subgroup_type(p, &ps, &kernel)?;
    let coker = subquotient_type(p, &ps, None, &image)?;
    Ok((ker, coker))
}

/// Visit every code of a mixed-radix product (first digit least
/// significant) with the sum of the per-digit values of an additive map,
/// keeping suffix sums so each step costs about one addition.
fn odometer<T: Clone>(
    radices: &[u64],
    slot: impl Fn(usize, u64) -> FrameResult<T>,
    zero: T,
    add: impl Fn(&T, &T) -> FrameResult<T>,
    mut visit: impl FnMut(u64, &T) -> FrameResult<()>,
) -> FrameResult<()> {
    let k = radices.len();
    let tables: Vec<Vec<T>> = radices
        .iter()
        .enumerate()
        .map(|(j, &r)| (0..r).map(|d| slot(j, d)).collect::<FrameResult<_>>())
        .collect::<FrameResult<_>>()?;
    let mut digits = vec![0u64; k];
    let mut suffix = vec![zero; k + 1];
    for j in (0..k).rev() {
        suffix[j] = add(&tables[j][0], &suffix[j + 1])?;
    }
    let mut code = 0u64;
    loop {
        visit(code, &suffix[0])?;
        code += 1;
        let mut j = 0;
        loop {
            if j == k {
                return Ok(());
            }
            digits[j] += 1;
            if digits[j] < radices[j] {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
        for i in (0..=j).rev() {
            suffix[i] = add(&tables[i][digits[i] as usize], &suffix[i + 1])?;
        }
    }
}

/// Raise the level until two consecutive signatures agree.
fn stabilize<T>(
    levels: &[(usize, usize)],
    mut step: impl FnMut(usize, usize) -> FrameResult<(String, T)>,
) -> FrameResult<(Vec<TraceEntry>, Option<(usize, usize, T)>)> {
    let mut trace: Vec<TraceEntry> = Vec::new();
    for &(prec, supp) in levels {
        let (sig, val) = match step(prec, supp) {
            Ok(x) => x,
            // a later level that exceeds the budget ends the search
            Err(e @ (FrameError::TooLarge(_) | FrameError::Linalg(_))) if !trace.is_empty() => {
                trace.push(TraceEntry {
                    precision: Some(prec),
                    support: Some(supp),
                    signature: format!("error: {e}"),
                });
                return Ok((trace, None));
            }
            Err(e) => return Err(e),
        };
        let repeat = trace.last().is_some_and(|t| t.signature == sig);
        trace.push(TraceEntry {
            precision: Some(prec),
            support: Some(supp),
            signature: sig,
        });
        if repeat {
            return Ok((trace, Some((prec, supp, val))));
        }
    }
    Ok((trace, None))
}

// ---------------------------------------------------------------------------
// C_n

fn base_change_witt(m: &Window<WittFrame>, s: &TestRing) -> FrameResult<Window<WittFrame>> {
    let rc = WittRingChange::new(&m.frame, s.structure.clone())?;
    base_change(m, &rc)
}

/// `C_n(M)(S)` for a window over `W_n(R)`. Pointwise `H^1` is reported as
/// data: only its syntomic sheafification vanishes.
pub fn eval_cn(m: &Window<WittFrame>, s: &TestRing) -> FrameResult<PointReport> {
    let t = Instant::now();
    let ms = base_change_witt(m, s)?;
    let gc = GammaComplex::new(&ms, s.budget)?;
    let h = gc.homology(s.budget)?;
    let mut rep = PointReport::new(ComplexKind::C, window_id(m), s, m.frame.length());
    if !h.euler_holds() {
        rep.notes.push("Euler characteristic identity fails".into());
    }
    rep.h0_log_order = h.h0.log_order();
    rep.trace.push(TraceEntry {
        precision: None,
        support: None,
        signature: format!("H0={} H1={}", h.h0, h.h1),
    });
    rep.h0 = Some(h.h0);
    rep.h1 = Some(h.h1);
    rep.wall_ms = elapsed_ms(t);
    Ok(rep)
}

/// `H^0(Γ(M_S))` against the window morphisms `A(1) → M_S`, exhaustively.
pub fn ext_cross_check(m: &Window<WittFrame>, s: &TestRing) -> FrameResult<bool> {
    let ms = base_change_witt(m, s)?;
    let gc = GammaComplex::new(&ms, s.budget)?;
    Ok(gc.kernel()? == gc.twist_morphisms()?)
}

/// Sampled check that `S → S'` commutes with `γ`.
pub fn functoriality_check(
    m: &Window<WittFrame>,
    s: &TestRing,
    g: &RingHom,
    samples: usize,
    seed: u64,
) -> FrameResult<usize> {
    if *g.src != *s.ring {
        return Err(FrameError::BadHom("map does not start at the test ring".into()));
    }
    let ms = base_change_witt(m, s)?;
    let rc = WittRingChange::new(&ms.frame, g.clone())?;
    let mt = base_change(&ms, &rc)?;
    let f = ms.frame.as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..samples {
        let b: Vec<FStar<Vec<Coords>>> = (0..ms.r0).map(|_| f.random1(&mut rng)).collect();
        let e: Vec<Vec<Coords>> = (0..ms.r1).map(|_| f.random0(&mut rng)).collect();
        let lhs: Vec<Vec<Coords>> = gamma_apply(&ms, &b, &e)?
            .iter()
            .map(|x| rc.g0(x))
            .collect::<FrameResult<_>>()?;
        let gb: Vec<_> = b.iter().map(|y| rc.g1(y)).collect::<FrameResult<_>>()?;
        let ge: Vec<_> = e.iter().map(|x| rc.g0(x)).collect::<FrameResult<_>>()?;
        if lhs != gamma_apply(&mt, &gb, &ge)? {
            failures += 1;
        }
    }
    Ok(failures)
}

// ---------------------------------------------------------------------------
// Z_n

/// `{a ∈ Nil(S) : a^{p^n} = 0}`, the digits of `Ŵ(S)[F^n]`.
fn frobenius_torsion(s: &Arc<FpkAlgebra>, n: usize) -> Vec<Coords> {
    let e = (s.p() as u128).pow(n as u32);
    s.nilradical()
        .elements()
        .into_iter()
        .filter(|a| s.is_zero(&s.pow(a, e)))
        .collect()
}

/// Levels `(support, support)` starting at `start`, `count` of them.
pub fn support_levels(start: usize, count: usize) -> Vec<(usize, usize)> {
    (start..start + count).map(|l| (l, l)).collect()
}

/// `Z_n(M)(S) = Γ(M ⊗ Ŵ(S)[F^n])[1]`: `H^{-1} = ker γ`, `H^0 = coker γ`,
/// computed at support bounds `supports` until they repeat.
pub fn eval_zn(m: &Window<WittFrame>, s: &TestRing, supports: &[usize]) -> FrameResult<PointReport> {
    let t = Instant::now();
    let n = m.frame.length();
    let p = s.p();
    let ms = base_change_witt(m, s)?;
    let h = m.height();
    let ideal = frobenius_torsion(&s.ring, n);
    let c = carry_reach(p, s.ring.nilpotency_index());
    let levels: Vec<(usize, usize)> = supports.iter().map(|&l| (n, l)).collect();
    let (trace, found) = stabilize(&levels, |_, l| {
        let big_l = l + n;
        let dense = big_l + n + 2 * c + 2;
        let wr = WittRing::new(&s.ring, dense)?;
        let small = HatGroup::generate(&wr, &ideal, l, dense, s.budget)?;
        let big = HatGroup::generate(&wr, &ideal, big_l, dense, s.budget)?;
        let psi: Vec<Vec<Vec<Coords>>> = (0..h)
            .map(|i| (0..h).map(|j| pad(&s.ring, ms.psi.get(i, j), dense)).collect())
            .collect();
        let gamma = |x: &[Vec<Coords>]| -> FrameResult<Vec<Vec<Coords>>> {
            let mut u = Vec::with_capacity(h);
            let mut tt = Vec::with_capacity(h);
            for (i, xi) in x.iter().enumerate() {
                if i < ms.r0 {
                    u.push(xi.clone());
                    tt.push(shift(&wr, xi)?);
                } else {
                    u.push(xi.iter().map(|a| s.ring.pow(a, p as u128)).collect());
                    tt.push(xi.clone());
                }
            }
            (0..h)
                .map(|i| {
                    let mut acc = wr.zero(dense);
                    for j in 0..h {
                        acc = wr.add(&acc, &wr.mul(&psi[i][j], &u[j]));
                    }
                    let out = wr.sub(&acc, &tt[i]);
                    if !s.ring.is_zero(&out[dense - 1]) {
                        return Err(FrameError::TooLarge("image leaves the dense window".into()));
                    }
                    Ok(out)
                })
                .collect()
        };
        let (ker, coker) = hat_homology(p, &small, &big, h, s.budget, &gamma)?;
        Ok((format!("H-1={ker} H0={coker}"), (ker, coker)))
    })?;
    let mut rep = PointReport::new(ComplexKind::Z, window_id(m), s, n);
    rep.trace = trace;
    match found {
        Some((_, l, (ker, coker))) => {
            rep.support = Some(l);
            rep.h0_log_order = coker.log_order();
            if !ker.is_trivial() {
                rep.notes.push(format!("H^-1 = {ker} is nonzero"));
            }
            rep.h_minus1 = Some(ker);
            rep.h0 = Some(coker);
        }
        None => {
            rep.stable = false;
            rep.notes.push("no stabilization within the support range".into());
        }
    }
    rep.wall_ms = elapsed_ms(t);
    Ok(rep)
}

fn pad(r: &FpkAlgebra, x: &[Coords], len: usize) -> Vec<Coords> {
    (0..len).map(|i| x.get(i).cloned().unwrap_or_else(|| r.zero())).collect()
}

/// `V` on a dense vector whose top digit is zero.
fn shift(wr: &WittRing, x: &[Coords]) -> FrameResult<Vec<Coords>> {
    let r = wr.ring();
    if !r.is_zero(&x[x.len() - 1]) {
        return Err(FrameError::TooLarge("V leaves the dense window".into()));
    }
    let mut y = Vec::with_capacity(x.len());
    y.push(r.zero());
    y.extend_from_slice(&x[..x.len() - 1]);
    Ok(y)
}

// ---------------------------------------------------------------------------
// ˢC_n

/// The same window over a sheared frame with another precision or bound:
/// `λ` is truncated or padded with zero digits, `η` is kept.
pub fn reprecise(m: &Window<ShearedFrame>, target: &Arc<ShearedFrame>) -> FrameResult<Window<ShearedFrame>> {
    let sr = target.sheared();
    let n = sr.precision();
    let psi = m.psi.try_map(|x| {
        let lambda = pad(sr.field(), &x.lambda, n);
        let eta = HatWittVec {
            ring: sr.ring().clone(),
            entries: x.eta.entries.clone(),
        };
        sr.make(lambda, eta).map_err(FrameError::from)
    })?;
    Window::new(target, m.r0, m.r1, psi)
}

/// Precision/support levels `(N_0 + i, n + 1 + i)` for `i < count`, where
/// `N_0 >= n` is the least precision the sheared ring of `S` accepts.
pub fn default_levels(s: &TestRing, n: usize, count: usize) -> Vec<(usize, usize)> {
    let start = n.max(carry_reach(s.p(), s.ring.nilpotency_index())).max(1);
    (0..count).map(|i| (start + i, n + 1 + i)).collect()
}

/// Membership in `p^n ˢW(S)`: `λ ∈ V^n W(k)` and `η ∈ V^n F^n Ŵ(m)`.
struct PnTest {
    n: usize,
    powers: HashSet<Coords>,
}

impl PnTest {
    fn new(s: &Arc<FpkAlgebra>, n: usize) -> Self {
        let e = (s.p() as u128).pow(n as u32);
        let powers = s.nilradical().elements().iter().map(|a| s.pow(a, e)).collect();
        PnTest { n, powers }
    }

    fn eta_ok(&self, eta: &HatWittVec) -> bool {
        eta.entries.iter().all(|(&i, c)| i >= self.n && self.powers.contains(c))
    }

    fn holds(&self, k: &FpkAlgebra, x: &ShearedWitt) -> bool {
        x.lambda[..self.n].iter().all(|c| k.is_zero(c)) && self.eta_ok(&x.eta)
    }
}

#[derive(Debug, Clone)]
struct SheafLevel {
    torsion: AbGroupType,
    quotient: AbGroupType,
    h1: Option<AbGroupType>,
}

/// `ˢC_n(M)(S)` for a window over `ˢW(R)` and a local test ring `S`, at
/// each `(precision, support)` level until the invariants repeat.
pub fn eval_scn(
    m: &Window<ShearedFrame>,
    s: &TestRing,
    n: usize,
    levels: &[(usize, usize)],
) -> FrameResult<PointReport> {
    let t = Instant::now();
    let p = s.p();
    let base = m.frame.sheared().ring().clone();
    let c = carry_reach(p, s.ring.nilpotency_index());
    let (trace, found) = stabilize(levels, |prec, supp| {
        if prec < n {
            return Err(FrameError::Unsupported(format!("precision {prec} below n = {n}")));
        }
        let bound = (supp + n + 2 * c + 2).max(prec);
        let fr = ShearedFrame::new(&base, prec, bound)?;
        let mr = reprecise(m, &fr)?;
        let hom = ShearedRingChange::new(&fr, s.structure.clone())?;
        let ms = base_change(&mr, &hom)?;
        let lv = if s.is_reduced() {
            field_level(&ms, s, n)?
        } else {
            sheaf_level(&ms, s, n, supp, c)?
        };
        let sig = format!(
            "T={} K={} H1={}",
            lv.torsion,
            lv.quotient,
            lv.h1.as_ref().map_or("?".into(), |t| t.to_string())
        );
        Ok((sig, lv))
    })?;
    let mut rep = PointReport::new(ComplexKind::SheafC, window_id(m), s, n);
    rep.trace = trace;
    match found {
        Some((prec, supp, lv)) => {
            rep.precision = Some(prec);
            rep.support = Some(supp);
            rep.h0_log_order = lv.torsion.log_order() + lv.quotient.log_order();
            rep.h0 = if lv.torsion.is_trivial() {
                Some(lv.quotient.clone())
            } else if lv.quotient.is_trivial() {
                Some(lv.torsion.clone())
            } else {
                rep.notes.push(format!(
                    "H^0 is an extension of {} by {}; group structure not determined",
                    lv.quotient, lv.torsion
                ));
                None
            };
            rep.h1 = lv.h1;
        }
        None => {
            rep.stable = false;
            rep.notes.push("no stabilization within the given levels".into());
        }
    }
    rep.wall_ms = elapsed_ms(t);
    Ok(rep)
}

/// Over a perfect field `ˢW = W`, `T = 0` and `W_n(k)` is free over `Z/p^n`
/// on the Teichmüller lifts of an `F_p`-basis of `k`. The coordinate table
/// is built by enumeration and checked to be a bijection; `γ` is then an
/// integer matrix and both cohomology groups are enumerated on the
/// presented carrier.
fn field_level(ms: &Window<ShearedFrame>, s: &TestRing, n: usize) -> FrameResult<SheafLevel> {
    let f = ms.frame.as_ref();
    let sr = f.sheared();
    let k = sr.field().clone();
    let p = s.p();
    let h = ms.height();
    let prec = sr.precision();
    let m = k.rank();
    let wk = sr.witt_k();
    let pn = p.pow(n as u32);
    let size = pn
        .checked_pow(m as u32)
        .filter(|&q| q <= s.budget)
        .ok_or_else(|| FrameError::TooLarge(format!("W_{n}({}) exceeds cap {}", k.name(), s.budget)))?;
    let basis: Vec<Vec<Coords>> = (0..m).map(|j| wk.teich(&k.basis(j), n)).collect();
    let coeffs = PresentedGroup::new(AbGroupType::from_exponents(p, vec![n as u32; m]));
    let mut table: HashMap<Vec<Coords>, u64> = HashMap::with_capacity(size as usize);
    odometer(
        &vec![pn; m],
        |j, c| Ok(wk.scale_int(c as i128, &basis[j])),
        wk.zero(n),
        |a, b| Ok(wk.add(a, b)),
        |code, w| {
            table.insert(w.clone(), code);
            Ok(())
        },
    )?;
    if table.len() as u64 != size {
        return Err(FrameError::Unsupported(format!("Teichmüller basis of {} is not a basis", k.name())));
    }
    let coords = |w: &[Coords]| -> Vec<u64> { coeffs.digits(table[w]) };
    // columns of γ: one per (slot, basis vector)
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(h * m);
    for i in 0..h {
        for b in &basis {
            let mut z = vec![sr.zero(); h];
            z[i] = sr.make(pad(&k, b, prec), HatWittVec::zero(&s.ring))?;
            let bz: Vec<FStar<ShearedWitt>> = z[..ms.r0].iter().cloned().map(FStar).collect();
            let g = gamma_apply(ms, &bz, &z[ms.r0..])?;
            cols.push(g.iter().flat_map(|y| coords(&y.lambda[..n])).collect());
        }
    }
    let g = PresentedGroup::new(AbGroupType::from_exponents(p, vec![n as u32; m * h]));
    let map = AbGroupMap::new(&g, &g, |x| {
        let d = g.digits(x);
        let mut y = vec![0u64; m * h];
        for (c, col) in d.iter().zip(&cols) {
            for (yi, a) in y.iter_mut().zip(col) {
                *yi = (*yi + c * a) % pn;
            }
        }
        g.code(&y)
    });
    let hom = complex_homology(p, &map, s.budget)?;
    Ok(SheafLevel {
        torsion: AbGroupType::trivial(p),
        quotient: hom.h0,
        h1: Some(hom.h1),
    })
}

fn sheaf_level(ms: &Window<ShearedFrame>, s: &TestRing, n: usize, supp: usize, c: usize) -> FrameResult<SheafLevel> {
    let f = ms.frame.as_ref();
    let sr = f.sheared();
    let k = sr.field().clone();
    let p = s.p();
    let h = ms.height();
    let prec = sr.precision();
    let test = PnTest::new(&s.ring, n);
    let dense = supp + 2 * c + 2;
    let wr = WittRing::new(&s.ring, dense)?;
    let to_eta = |v: &[Coords]| -> HatWittVec {
        let entries: BTreeMap<usize, Coords> = v
            .iter()
            .enumerate()
            .filter(|(_, a)| !s.ring.is_zero(a))
            .map(|(i, a)| (i, a.clone()))
            .collect();
        HatWittVec {
            ring: s.ring.clone(),
            entries,
        }
    };
    let gamma_of = |xs: &[ShearedWitt]| -> FrameResult<Vec<ShearedWitt>> {
        let b: Vec<FStar<ShearedWitt>> = xs[..ms.r0].iter().cloned().map(FStar).collect();
        gamma_apply(ms, &b, &xs[ms.r0..])
    };

    // T: cokernel of γ on the p^n-torsion Ŵ(m)[F^n]
    let torsion = if s.is_reduced() {
        AbGroupType::trivial(p)
    } else {
        let ideal = frobenius_torsion(&s.ring, n);
        let big_l = supp + n;
        let tdense = big_l + n + 2 * c + 2;
        let twr = WittRing::new(&s.ring, tdense)?;
        let small = HatGroup::generate(&twr, &ideal, supp, tdense, s.budget)?;
        let big = HatGroup::generate(&twr, &ideal, big_l, tdense, s.budget)?;
        let zero_l = sr.witt_k().zero(prec);
        let gamma = |x: &[Vec<Coords>]| -> FrameResult<Vec<Vec<Coords>>> {
            let xs: Vec<ShearedWitt> = x
                .iter()
                .map(|v| ShearedWitt {
                    lambda: zero_l.clone(),
                    eta: to_eta(v),
                })
                .collect();
            gamma_of(&xs)?
                .into_iter()
                .map(|y| {
                    if y.lambda.iter().any(|a| !k.is_zero(a)) {
                        return Err(FrameError::Unsupported("torsion maps outside Ŵ".into()));
                    }
                    let d = y.eta.to_dense(tdense)?;
                    if !s.ring.is_zero(&d[tdense - 1]) {
                        return Err(FrameError::TooLarge("image leaves the dense window".into()));
                    }
                    Ok(d)
                })
                .collect()
        };
        hat_homology(p, &small, &big, h, s.budget, &gamma)?.1
    };

    // K: {z ∈ M_1/p^n : γ(z) ∈ p^n M_0}
    let wk = WittFrame::truncated(&k, n)?;
    let wk_group = CarrierGroup::new(wk.as_ref(), vec![false], s.budget)?;
    let hat = HatGroup::generate(&wr, &s.ring.nilradical().elements(), supp, dense, s.budget)?;
    let mut factors: Vec<&dyn FiniteGroup> = Vec::with_capacity(2 * h);
    for _ in 0..h {
        factors.push(&wk_group);
        factors.push(&hat);
    }
    let prod = ProductGroup::new(factors, s.budget)?;
    // γ on one coordinate slot of W_n(k)^h ⊕ G_L^h, everything else zero
    let slot = |j: usize, d: u64| -> FrameResult<Vec<ShearedWitt>> {
        let mut z = vec![sr.zero(); h];
        z[j / 2] = if j % 2 == 0 {
            sr.make(pad(&k, &wk.decode0(d), prec), HatWittVec::zero(&s.ring))?
        } else {
            sr.make(sr.witt_k().zero(prec), to_eta(hat.element(d)))?
        };
        gamma_of(&z)
    };
    let add = |a: &Vec<ShearedWitt>, b: &Vec<ShearedWitt>| -> FrameResult<Vec<ShearedWitt>> {
        a.iter().zip(b).map(|(x, y)| Ok(sr.add(x, y)?)).collect()
    };
    let hat_in_pn: Vec<bool> = (0..hat.order()).map(|d| test.eta_ok(&to_eta(hat.element(d)))).collect();
    let wk_zero = wk_group.zero();
    let order = prod.order() as usize;
    let mut members = vec![false; order];
    let mut sub = vec![false; order];
    // H^1 = M_0 / (p^n M_0 + γ M_1), computed for perfect S only
    let tgt = CarrierGroup::new(wk.as_ref(), vec![false; h], s.budget)?;
    let mut image = if s.is_reduced() { vec![false; tgt.order() as usize] } else { vec![] };
    odometer(&prod.radices(), slot, vec![sr.zero(); h], add, |code, g| {
        members[code as usize] = g.iter().all(|y| test.holds(&k, y));
        let d = prod.split(code);
        sub[code as usize] = (0..h).all(|i| d[2 * i] == wk_zero && hat_in_pn[d[2 * i + 1] as usize]);
        if !image.is_empty() {
            let digits: Vec<u64> = g.iter().map(|y| wk.encode0(&y.lambda[..n].to_vec())).collect();
            image[tgt.join(&digits) as usize] = true;
        }
        Ok(())
    })?;
    if sub.iter().zip(&members).any(|(&s, &m)| s && !m) {
        return Err(FrameError::Unsupported("p^n M_1 not inside the cycle set; raise the precision".into()));
    }
    let quotient = subquotient_type(p, &prod, Some(&members), &sub)?;
    let h1 = if image.is_empty() {
        None
    } else {
        Some(subquotient_type(p, &tgt, None, &image)?)
    };
    Ok(SheafLevel {
        torsion,
        quotient,
        h1,
    })
}

// ---------------------------------------------------------------------------
// the exact triangle Z_n → ˢC_n → C_n

/// Exhaustive check of `0 → ˢW →V^n ˢW → W_n(S) → 0` on the finite model
/// `{W(s)(λ) + η : λ ∈ W_N(k), supp η < L}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberReport {
    pub model_size: u64,
    pub target_size: u64,
    pub expected_fiber: u64,
    pub fibers_checked: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub window: String,
    pub test_ring: String,
    pub n: usize,
    pub precision: usize,
    pub support: usize,
    pub scalar_sequence: CheckReport,
    pub fibers: Option<FiberReport>,
    pub chain_samples: usize,
    pub chain_failures: usize,
    /// `(log |H^0(ˢC_n)|, log |H^0(C_n)|)`, compared when `S` is reduced.
    pub reduced_orders: Option<(u32, u32)>,
    pub notes: Vec<String>,
}

impl TriangleReport {
    pub fn passed(&self) -> bool {
        self.scalar_sequence.passed()
            && self.fibers.as_ref().is_none_or(|f| f.failures == 0)
            && self.chain_failures == 0
            && self.reduced_orders.is_none_or(|(a, b)| a == b)
    }
}

/// The truncation `M_n` of a sheared window: `ˢW(R) → W_N(R) → W_n(R)`.
pub fn truncate_sheared(m: &Window<ShearedFrame>, n: usize) -> FrameResult<Window<WittFrame>> {
    let c = frame_hom_c(&m.frame)?;
    let mw = base_change(m, &c)?;
    let tr = WittTruncation::new(&mw.frame, n)?;
    base_change(&mw, &tr)
}

/// Termwise short exactness of `Z_n(M) → ˢC_n(M) → C_n(M_n)` on `S`-points
/// and commutation of the chain maps with the differentials.
pub fn exact_triangle_check(
    m: &Window<ShearedFrame>,
    s: &TestRing,
    n: usize,
    precision: usize,
    support: usize,
    samples: usize,
    seed: u64,
) -> FrameResult<TriangleReport> {
    let p = s.p();
    let c = carry_reach(p, s.ring.nilpotency_index());
    let base = m.frame.sheared().ring().clone();
    let bound = (support + n + 2 * c + 2).max(precision);
    let fr = ShearedFrame::new(&base, precision, bound)?;
    let mr = reprecise(m, &fr)?;
    let hom = ShearedRingChange::new(&fr, s.structure.clone())?;
    let ms = base_change(&mr, &hom)?;
    let f = ms.frame.as_ref();
    let sr = f.sheared();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scalar = check_vn_wn_sequence(sr, n, samples, &mut rng)?;
    let mut notes = Vec::new();

    let fibers = fiber_check(sr, n, support.min(precision), s.budget)?;
    if fibers.is_none() {
        notes.push("finite model above budget; fibers not enumerated".into());
    }

    // chain maps, compared in W_N(S)
    let mn = truncate_sheared(&mr, n)?;
    let mn = base_change_witt(&mn, s)?;
    let vn = |x: &ShearedWitt| -> FrameResult<ShearedWitt> {
        let mut y = x.clone();
        for _ in 0..n {
            y = sr.vtilde(&y)?;
        }
        Ok(y)
    };
    let fpow = |x: &ShearedWitt| -> FrameResult<ShearedWitt> {
        let mut y = x.clone();
        for _ in 0..n {
            y = sr.frobenius(&y)?;
        }
        Ok(y)
    };
    let pn = sr.from_int((p as i128).pow(n as u32));
    let eq = |x: &ShearedWitt, y: &ShearedWitt| -> FrameResult<bool> {
        Ok(sr.embed(x, precision)? == sr.embed(y, precision)?)
    };
    let twisted = Window::new(&ms.frame, ms.r0, ms.r1, ms.psi.try_map(|x| fpow(x))?)?;
    let supp = f.sample_support().min(support);
    let mut failures = 0;
    let h = ms.height();
    for _ in 0..samples {
        let xs: Vec<ShearedWitt> = (0..h).map(|_| sr.random(&mut rng, supp)).collect();
        let ys: Vec<ShearedWitt> = (0..h).map(|_| sr.random(&mut rng, supp)).collect();
        let b: Vec<FStar<ShearedWitt>> = xs[..ms.r0].iter().cloned().map(FStar).collect();
        // degree -1: p^n x = V^n F^n x
        for x in &xs {
            if !eq(&sr.mul(&pn, x)?, &vn(&fpow(x)?)?)? {
                failures += 1;
            }
        }
        // degree 0: p^n y + γ(V^n z) = V^n(F^n y + γ_{F^n}(z))
        let vb: Vec<FStar<ShearedWitt>> = b.iter().map(|y| Ok(FStar(vn(&y.0)?))).collect::<FrameResult<_>>()?;
        let ve: Vec<ShearedWitt> = xs[ms.r0..].iter().map(vn).collect::<FrameResult<_>>()?;
        let lhs = gamma_apply(&ms, &vb, &ve)?;
        let rhs = gamma_apply(&twisted, &b, &xs[ms.r0..])?;
        for i in 0..h {
            let l = sr.add(&sr.mul(&pn, &ys[i])?, &lhs[i])?;
            let r = vn(&sr.add(&fpow(&ys[i])?, &rhs[i])?)?;
            if !eq(&l, &r)? {
                failures += 1;
            }
        }
        // ˢC_n → C_n: the projection of p^n y + γ(z) is γ of the projection
        let g = gamma_apply(&ms, &b, &xs[ms.r0..])?;
        let pb: Vec<FStar<Vec<Coords>>> = b.iter().map(|y| Ok(FStar(sr.embed(&y.0, n)?))).collect::<FrameResult<_>>()?;
        let pe: Vec<Vec<Coords>> = xs[ms.r0..].iter().map(|x| sr.embed(x, n)).collect::<Result<_, _>>()?;
        let gn = gamma_apply(&mn, &pb, &pe)?;
        for i in 0..h {
            let l = sr.embed(&sr.add(&sr.mul(&pn, &ys[i])?, &g[i])?, n)?;
            if l != gn[i] {
                failures += 1;
            }
        }
    }

    let reduced_orders = if s.is_reduced() {
        let sc = eval_scn(m, s, n, &[(precision, support), (precision + 1, support + 1)])?;
        let cn = eval_cn(&truncate_sheared(&mr, n)?, s)?;
        Some((sc.h0_log_order, cn.h0_log_order))
    } else {
        None
    };
    Ok(TriangleReport {
        window: window_id(m),
        test_ring: s.name.clone(),
        n,
        precision,
        support,
        scalar_sequence: scalar,
        fibers,
        chain_samples: samples,
        chain_failures: failures,
        reduced_orders,
        notes,
    })
}

/// Fibers of `x ↦ x mod V^n` on the finite model have the size of the
/// model one level down, and the zero fiber is `V^n` of that model.
fn fiber_check(
    sr: &ShearedRing,
    n: usize,
    support: usize,
    budget: u64,
) -> FrameResult<Option<FiberReport>> {
    let prec = sr.precision();
    if support < n {
        return Err(FrameError::Unsupported(format!("support {support} below n = {n}")));
    }
    let k = sr.field();
    let ring = sr.ring();
    let nil = sr.nilradical().elements();
    let (kq, mq) = (k.size().unwrap_or(u64::MAX), nil.len() as u64);
    let model = kq
        .checked_pow(prec as u32)
        .and_then(|a| mq.checked_pow(support as u32).and_then(|b| a.checked_mul(b)));
    let Some(model) = model.filter(|&m| m <= budget) else {
        return Ok(None);
    };
    let wn = WittFrame::truncated(ring, n)?;
    let target = wn.size0().ok_or_else(|| FrameError::TooLarge("W_n(S)".into()))?;
    let expected = kq.pow((prec - n) as u32) * mq.pow((support - n) as u32);
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut failures = 0;
    for code in 0..model {
        let mut c = code;
        let lambda: Vec<Coords> = (0..prec)
            .map(|_| {
                let d = c % kq;
                c /= kq;
                k.element(d)
            })
            .collect();
        let mut entries = BTreeMap::new();
        for i in 0..support {
            let d = (c % mq) as usize;
            c /= mq;
            if !ring.is_zero(&nil[d]) {
                entries.insert(i, nil[d].clone());
            }
        }
        let x = ShearedWitt {
            lambda,
            eta: HatWittVec {
                ring: ring.clone(),
                entries,
            },
        };
        let img = sr.embed(&x, n)?;
        let key = wn.encode0(&img);
        *counts.entry(key).or_insert(0) += 1;
        if img.iter().all(|a| ring.is_zero(a)) {
            // the zero fiber is V^n of the smaller model
            let low = x.lambda[..n].iter().all(|a| k.is_zero(a)) && x.eta.entries.keys().all(|&i| i >= n);
            if !low {
                failures += 1;
            }
        }
    }
    if counts.len() as u64 != target {
        failures += target - counts.len() as u64;
    }
    failures += counts.values().filter(|&&v| v != expected).count() as u64;
    Ok(Some(FiberReport {
        model_size: model,
        target_size: target,
        expected_fiber: expected,
        fibers_checked: counts.len() as u64,
        failures,
    }))
}

// ---------------------------------------------------------------------------
// the duality diagram C_n → C'_n

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityReport {
    pub window: String,
    pub test_ring: String,
    pub n: usize,
    pub exhaustive_size: u64,
    pub square_failures: u64,
    /// On vertical kernels the `V ⊕ id` map is zero and `Ψ(id ⊕ F)` bijective.
    pub kernel_claims: bool,
    /// On vertical cokernels `(V ⊕ id)Ψ^{-1}` is zero and `id ⊕ F` bijective.
    pub cokernel_claims: bool,
    pub h0_c: AbGroupType,
    pub h0_c_prime: AbGroupType,
    pub h1_c: AbGroupType,
    pub h1_c_prime: AbGroupType,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.square_failures == 0
            && self.kernel_claims
            && self.cokernel_claims
            && self.h0_c == self.h0_c_prime
            && self.h1_c == self.h1_c_prime
    }
}

/// Both squares relating `C_n(M)` and `C'_n(M)` on `S`-points, with the
/// kernel and cokernel behaviour of the vertical maps, all exhaustively.
pub fn duality_diagram_check(m: &Window<WittFrame>, s: &TestRing) -> FrameResult<DualityReport> {
    let ms = base_change_witt(m, s)?;
    let f = ms.frame.as_ref();
    let wr = f.witt();
    let n = f.length();
    let h = ms.height();
    let r0 = ms.r0;
    let g = CarrierGroup::new(f, vec![false; h], s.budget)?;
    let size = g.order();
    let psi = &ms.psi;
    let psi_inv = mat_inverse(f, psi)?;
    let decode = |c: u64| -> Vec<Vec<Coords>> { g.split(c).iter().map(|&d| f.decode0(d)).collect() };
    let encode = |x: &[Vec<Coords>]| -> u64 {
        let d: Vec<u64> = x.iter().map(|a| f.encode0(a)).collect();
        g.join(&d)
    };
    let apply = |a: &Mat<Vec<Coords>>, x: &[Vec<Coords>]| -> Vec<Vec<Coords>> {
        (0..h)
            .map(|i| {
                let mut acc = wr.zero(n);
                for j in 0..h {
                    acc = wr.add(&acc, &wr.mul(a.get(i, j), &x[j]));
                }
                acc
            })
            .collect()
    };
    let v_id = |x: &[Vec<Coords>]| -> FrameResult<Vec<Vec<Coords>>> {
        x.iter()
            .enumerate()
            .map(|(i, a)| if i < r0 { f.tau(&FStar(a.clone())) } else { Ok(a.clone()) })
            .collect()
    };
    let id_f = |x: &[Vec<Coords>]| -> FrameResult<Vec<Vec<Coords>>> {
        x.iter()
            .enumerate()
            .map(|(i, a)| if i < r0 { Ok(a.clone()) } else { f.sigma0(a) })
            .collect()
    };
    let mut top = [vec![0u64; size as usize], vec![0u64; size as usize]];
    let mut bottom = [vec![0u64; size as usize], vec![0u64; size as usize]];
    let mut left = vec![0u64; size as usize];
    let mut right = vec![0u64; size as usize];
    for c in 0..size {
        let x = decode(c);
        let vx = v_id(&x)?;
        let fx = id_f(&x)?;
        let i = c as usize;
        top[0][i] = encode(&vx);
        top[1][i] = encode(&apply(psi, &fx));
        left[i] = top[0][i];
        let r = encode(&v_id(&apply(&psi_inv, &x))?);
        right[i] = r;
        bottom[0][i] = r;
        bottom[1][i] = encode(&fx);
    }
    let mut square_failures = 0;
    for c in 0..size as usize {
        for k in 0..2 {
            if right[top[k][c] as usize] != bottom[k][left[c] as usize] {
                square_failures += 1;
            }
        }
    }
    let zero = g.zero();
    let ker_l: Vec<bool> = left.iter().map(|&y| y == zero).collect();
    let ker_r: Vec<bool> = right.iter().map(|&y| y == zero).collect();
    let mut im_l = vec![false; size as usize];
    let mut im_r = vec![false; size as usize];
    for c in 0..size as usize {
        im_l[left[c] as usize] = true;
        im_r[right[c] as usize] = true;
    }
    // kernels
    let n_ker_l = ker_l.iter().filter(|&&b| b).count();
    let n_ker_r = ker_r.iter().filter(|&&b| b).count();
    let mut zero_ok = true;
    let mut images = HashSet::new();
    for c in 0..size as usize {
        if ker_l[c] {
            zero_ok &= top[0][c] == zero;
            let y = top[1][c];
            zero_ok &= ker_r[y as usize];
            images.insert(y);
        }
    }
    let kernel_claims = zero_ok && images.len() == n_ker_l && n_ker_l == n_ker_r;
    // cokernels
    let n_im_l = im_l.iter().filter(|&&b| b).count() as u64;
    let n_im_r = im_r.iter().filter(|&&b| b).count() as u64;
    let mut coker_ok = size / n_im_l == size / n_im_r;
    for c in 0..size as usize {
        coker_ok &= im_r[bottom[0][c] as usize];
        coker_ok &= im_r[bottom[1][c] as usize] == im_l[c];
    }
    let p = s.p();
    let gamma_top = AbGroupMap::new(&g, &g, |c| g.sub(top[1][c as usize], top[0][c as usize]));
    let gamma_bot = AbGroupMap::new(&g, &g, |c| g.sub(bottom[1][c as usize], bottom[0][c as usize]));
    let hc = complex_homology(p, &gamma_top, s.budget)?;
    let hcp = complex_homology(p, &gamma_bot, s.budget)?;
    Ok(DualityReport {
        window: window_id(m),
        test_ring: s.name.clone(),
        n,
        exhaustive_size: size,
        square_failures,
        kernel_claims,
        cokernel_claims: coker_ok,
        h0_c: hc.h0,
        h0_c_prime: hcp.h0,
        h1_c: hc.h1,
        h1_c_prime: hcp.h1,
    })
}

// ---------------------------------------------------------------------------
// point-count tables

/// Closed-form `log_p |H^0|` as a function of `(p, n)`.
pub type LogOracle = fn(u64, usize) -> u32;

pub struct TableWindow {
    pub name: String,
    pub window: Window<ShearedFrame>,
    pub oracle: Option<LogOracle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCell {
    pub window: String,
    pub test_ring: String,
    pub n: usize,
    pub levels: Vec<(usize, usize)>,
    pub budget: u64,
    pub log_order: Option<u32>,
    pub h0: Option<String>,
    pub oracle: Option<u32>,
    pub deviation: bool,
    pub stable: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointTable {
    pub cells: Vec<TableCell>,
}

impl PointTable {
    pub fn deviations(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.deviation || c.error.is_some() || !c.stable)
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("window,ring,n,levels,budget,log_order,h0,oracle,deviation,stable,error\n");
        for c in &self.cells {
            let levels: Vec<String> = c.levels.iter().map(|(a, b)| format!("{a}:{b}")).collect();
            let opt = |x: Option<u32>| x.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.window,
                c.test_ring,
                c.n,
                levels.join(" "),
                c.budget,
                opt(c.log_order),
                c.h0.clone().unwrap_or_default(),
                opt(c.oracle),
                c.deviation,
                c.stable,
                c.error.clone().unwrap_or_default().replace(',', ";")
            ));
        }
        out
    }
}

/// `|H^0(ˢC_n)|` for every window, ring and `n`. Per-cell failures are
/// recorded in the cell. Precisions and supports of the default levels are
/// multiplied by `scale`. Cells run on up to `threads` worker threads; the
/// output order does not depend on scheduling.
pub fn point_count_table(
    windows: &[TableWindow],
    rings: &[TestRing],
    ns: &[usize],
    extra_levels: usize,
    scale: usize,
    threads: usize,
) -> PointTable {
    let jobs: Vec<(&TableWindow, &TestRing, usize)> = windows
        .iter()
        .flat_map(|w| rings.iter().flat_map(move |s| ns.iter().map(move |&n| (w, s, n))))
        .collect();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<TableCell>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(w, s, n)) = jobs.get(i) else { break };
                let cell = table_cell(w, s, n, extra_levels, scale);
                *slots[i].lock().expect("table slot") = Some(cell);
            });
        }
    });
    let cells = slots
        .into_iter()
        .map(|m| m.into_inner().expect("table slot").expect("every cell is filled"))
        .collect();
    PointTable { cells }
}

fn table_cell(w: &TableWindow, s: &TestRing, n: usize, extra_levels: usize, scale: usize) -> TableCell {
    let scale = scale.max(1);
    let levels: Vec<(usize, usize)> = default_levels(s, n, extra_levels.max(2))
        .into_iter()
        .map(|(a, b)| (a * scale, b * scale))
        .collect();
    let mut cell = TableCell {
        window: w.name.clone(),
        test_ring: s.name.clone(),
        n,
        levels: levels.clone(),
        budget: s.budget,
        log_order: None,
        h0: None,
        oracle: w.oracle.map(|o| o(s.p(), n)),
        deviation: false,
        stable: false,
        error: None,
    };
    match eval_scn(&w.window, s, n, &levels) {
        Ok(rep) => {
            cell.stable = rep.stable;
            if rep.stable {
                cell.log_order = Some(rep.h0_log_order);
                cell.h0 = Some(fmt_type(&rep.h0));
            }
            cell.deviation = matches!((cell.oracle, cell.log_order), (Some(a), Some(b)) if a != b);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Worker count for tables: the machine's parallelism.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Closed forms for the standard windows over perfect fields.
pub mod oracles {
    /// `μ_{p^n}(F_q)` is trivial.
    pub fn unit(_p: u64, _n: usize) -> u32 {
        0
    }
    /// `Z/p^n`.
    pub fn twist(_p: u64, n: usize) -> u32 {
        n as u32
    }
    /// Unit plus twist.
    pub fn ordinary(p: u64, n: usize) -> u32 {
        unit(p, n) + twist(p, n)
    }
    /// No étale part.
    pub fn supersingular(_p: u64, _n: usize) -> u32 {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_base::std_rings::{f2, f3, f4, fp, truncated};

    fn ring(base: &Arc<FpkAlgebra>, s: &Arc<FpkAlgebra>) -> TestRing {
        TestRing::over_prime_field(base, s, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn cn_unit_and_twist() {
        for p in [2, 3] {
            let r = fp(p);
            let w = WittFrame::truncated(&r, 1).unwrap();
            let s = ring(&r, &r);
            let u = eval_cn(&Window::unit(&w), &s).unwrap();
            assert!(u.h0.unwrap().is_trivial());
            let t = eval_cn(&Window::twist(&w), &s).unwrap();
            assert_eq!(t.h0.unwrap(), AbGroupType::cyclic(p, 1));
            assert!(u.notes.is_empty() && t.notes.is_empty());
        }
    }

    #[test]
    fn zn_unit_counts_roots_of_unity() {
        let r = f2();
        let s = ring(&r, &truncated(&r, 2));
        let w = WittFrame::truncated(&r, 1).unwrap();
        let rep = eval_zn(&Window::unit(&w), &s, &[1, 2, 3, 4]).unwrap();
        assert!(rep.stable, "{rep:?}");
        assert!(rep.h_minus1.unwrap().is_trivial());
        assert_eq!(rep.h0_log_order, 1);
        // reduced rings give zero groups
        let rep = eval_zn(&Window::unit(&w), &ring(&r, &f4()), &[1, 2, 3]).unwrap();
        assert!(rep.stable && rep.h0_log_order == 0);
    }

    #[test]
    fn scn_standard_windows_over_fields() {
        let r = f2();
        let fr = ShearedFrame::new(&r, 3, 6).unwrap();
        let s = ring(&r, &f4());
        for n in [1, 2] {
            let lv = default_levels(&s, n, 2);
            let u = eval_scn(&Window::unit(&fr), &s, n, &lv).unwrap();
            assert!(u.stable && u.h0_log_order == 0, "{u:?}");
            let t = eval_scn(&Window::twist(&fr), &s, n, &lv).unwrap();
            assert_eq!(t.h0, Some(AbGroupType::cyclic(2, n as u32)));
            let ss = Window::from_int(&fr, 1, 1, &[vec![0, 1], vec![1, 0]]).unwrap();
            assert_eq!(eval_scn(&ss, &s, n, &lv).unwrap().h0_log_order, 0);
        }
    }

    #[test]
    fn field_path_matches_enumeration() {
        let r = f2();
        let s = ring(&r, &f4());
        for n in [1, 2] {
            let fr = ShearedFrame::new(&r, n + 1, n + 4).unwrap();
            let hom = ShearedRingChange::new(&fr, s.structure.clone()).unwrap();
            for psi in [vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![1, 0]], vec![vec![1, 1], vec![0, 1]]] {
                let m = base_change(&Window::from_int(&fr, 1, 1, &psi).unwrap(), &hom).unwrap();
                let a = field_level(&m, &s, n).unwrap();
                let b = sheaf_level(&m, &s, n, 1, 0).unwrap();
                assert_eq!((a.torsion, a.quotient, a.h1), (b.torsion, b.quotient, b.h1));
            }
        }
    }

    #[test]
    fn scn_unit_over_dual_numbers() {
        // T = μ_2(F_2[t]/t^2), K = 0
        let r = f2();
        let fr = ShearedFrame::new(&r, 2, 6).unwrap();
        let s = ring(&r, &truncated(&r, 2));
        let rep = eval_scn(&Window::unit(&fr), &s, 1, &[(1, 2), (2, 3), (3, 4)]).unwrap();
        assert!(rep.stable, "{rep:?}");
        assert_eq!(rep.h0, Some(AbGroupType::cyclic(2, 1)));
    }

    #[test]
    fn triangle_and_duality() {
        let r = f2();
        let fr = ShearedFrame::new(&r, 3, 6).unwrap();
        let ord = Window::from_int(&fr, 1, 1, &[vec![1, 0], vec![0, 1]]).unwrap();
        let s = ring(&r, &truncated(&r, 2));
        let rep = exact_triangle_check(&ord, &s, 1, 3, 3, 20, 1).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let rep = exact_triangle_check(&ord, &ring(&r, &f4()), 1, 3, 3, 20, 1).unwrap();
        assert!(rep.passed() && rep.reduced_orders.is_some(), "{rep:?}");

        let w = WittFrame::truncated(&r, 2).unwrap();
        let m = Window::from_int(&w, 1, 1, &[vec![1, 1], vec![0, 1]]).unwrap();
        let d = duality_diagram_check(&m, &ring(&r, &f4())).unwrap();
        assert!(d.passed(), "{d:?}");
    }

    #[test]
    fn functoriality_and_ext() {
        let r = f3();
        let w = WittFrame::truncated(&r, 1).unwrap();
        let m = Window::from_int(&w, 1, 1, &[vec![0, 1], vec![1, 0]]).unwrap();
        let s = ring(&r, &r);
        assert!(ext_cross_check(&m, &s).unwrap());
        let g = RingHom::new(r.clone(), truncated(&r, 2), vec![truncated(&r, 2).one()]).unwrap();
        assert_eq!(functoriality_check(&m, &s, &g, 20, 3).unwrap(), 0);
    }
}
