//! Finite commutative `Z/p^k`-algebras presented by structure constants.
//!
//! An [`FpkAlgebra`] is a free `Z/p^k`-module with basis `e_0, …, e_{r-1}` and
//! a multiplication table `e_i·e_j = Σ c_{ijl} e_l`. Elements are plain
//! coordinate vectors (`Vec<u64>` with entries in `0..p^k`); the algebra
//! handle does all arithmetic.
//!
//! Most algebras also carry an *integer lift*: integer structure constants
//! forming an associative commutative unital ring that is free over `Z` and
//! reduces to the algebra mod `p^k`. The Witt engine uses it to compute with
//! ghost components.

use crate::zmod_linalg::{
    howell_contains, howell_form, kernel_mod, local_smith, mat_inverse_mod, mat_vec_mod,
    solve_mod, Zpk,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};
use thiserror::Error;

pub type Coords = Vec<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid exponent k={0}")]
    BadExponent(u32),
    #[error("malformed structure constants: {0}")]
    Malformed(String),
    #[error("structure constants are not commutative at ({0},{1})")]
    NotCommutative(usize, usize),
    #[error("structure constants are not associative at ({0},{1},{2})")]
    NotAssociative(usize, usize, usize),
    #[error("unit law fails on basis element {0}")]
    UnitLaw(usize),
    #[error("polynomial does not define a field: {0}")]
    NotAField(String),
    #[error("generating set does not span an ideal: {0}")]
    NotIdeal(String),
    #[error("quotient module is not free over a single Z/p^j: {0}")]
    QuotientNotFree(String),
    #[error("not an F_p-algebra (k = {0})")]
    NotFpAlgebra(u32),
    #[error("ring is not local: {0}")]
    NotLocal(String),
    #[error("ring homomorphism check failed: {0}")]
    BadHom(String),
    #[error("coordinate vector has length {got}, ring rank is {rank}")]
    Length { got: usize, rank: usize },
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

/// Multiplication table reduced modulo a fixed `q = p^m`.
#[derive(Debug, Clone)]
pub struct ModTable {
    pub q: u64,
    pub rank: usize,
    sparse: Vec<Vec<(usize, u64)>>,
    pub one: Coords,
}

impl ModTable {
    fn from_ints(q: u64, rank: usize, table: &[Vec<Vec<i64>>], one: &[i64]) -> Self {
        let red = |x: i64| (x as i128).rem_euclid(q as i128) as u64;
        let mut sparse = Vec::with_capacity(rank * rank);
        for row in table.iter() {
            for cell in row.iter() {
                sparse.push(
                    cell.iter()
                        .enumerate()
                        .map(|(l, &c)| (l, red(c)))
                        .filter(|&(_, c)| c != 0)
                        .collect(),
                );
            }
        }
        ModTable {
            q,
            rank,
            sparse,
            one: one.iter().map(|&x| red(x)).collect(),
        }
    }

    #[inline]
    pub fn add(&self, a: &[u64], b: &[u64]) -> Coords {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| ((x as u128 + y as u128) % self.q as u128) as u64)
            .collect()
    }

    #[inline]
    pub fn sub(&self, a: &[u64], b: &[u64]) -> Coords {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| if x >= y { x - y } else { self.q - (y - x) })
            .collect()
    }

    pub fn neg(&self, a: &[u64]) -> Coords {
        a.iter()
            .map(|&x| if x == 0 { 0 } else { self.q - x })
            .collect()
    }

    pub fn scale(&self, c: u64, a: &[u64]) -> Coords {
        let c = c % self.q;
        a.iter()
            .map(|&x| ((x as u128 * c as u128) % self.q as u128) as u64)
            .collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Coords {
        let r = self.rank;
        let q = self.q as u128;
        let mut acc = vec![0u128; r];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let ab = (ai as u128 * bj as u128) % q;
                for &(l, c) in &self.sparse[i * r + j] {
                    acc[l] = (acc[l] + ab * c as u128) % q;
                }
            }
        }
        acc.into_iter().map(|x| x as u64).collect()
    }

    pub fn pow(&self, a: &[u64], mut e: u128) -> Coords {
        let mut result = self.one.clone();
        let mut base = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    pub fn is_zero(a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }
}

/// Integer structure constants of a lift to a ring free over `Z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntLift {
    pub table: Vec<Vec<Vec<i64>>>,
    pub one: Vec<i64>,
}

impl IntLift {
    fn is_valid(&self, rank: usize) -> bool {
        let mul = |a: &[i128], b: &[i128]| -> Option<Vec<i128>> {
            let mut out = vec![0i128; rank];
            for i in 0..rank {
                for j in 0..rank {
                    let ab = a[i].checked_mul(b[j])?;
                    if ab == 0 {
                        continue;
                    }
                    for (l, o) in out.iter_mut().enumerate() {
                        *o = o.checked_add(ab.checked_mul(self.table[i][j][l] as i128)?)?;
                    }
                }
            }
            Some(out)
        };
        let basis = |i: usize| {
            let mut v = vec![0i128; rank];
            v[i] = 1;
            v
        };
        let one: Vec<i128> = self.one.iter().map(|&x| x as i128).collect();
        for i in 0..rank {
            if mul(&one, &basis(i)) != Some(basis(i)) {
                return false;
            }
            for j in 0..rank {
                if self.table[i][j] != self.table[j][i] {
                    return false;
                }
                for l in 0..rank {
                    let lhs = mul(&basis(i), &basis(j)).and_then(|x| mul(&x, &basis(l)));
                    let rhs = mul(&basis(j), &basis(l)).and_then(|x| mul(&basis(i), &x));
                    if lhs.is_none() || lhs != rhs {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// JSON form of an algebra.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub p: u64,
    pub k: u32,
    pub rank: usize,
    pub labels: Vec<String>,
    /// `struct_consts[i][j]` is the coordinate vector of `e_i·e_j`.
    pub struct_consts: Vec<Vec<Vec<u64>>>,
    pub one_coords: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A finite commutative `Z/p^k`-algebra.
pub struct FpkAlgebra {
    name: String,
    p: u64,
    k: u32,
    labels: Vec<String>,
    consts: Vec<Vec<Coords>>,
    base: ModTable,
    lift: Option<IntLift>,
    lifted: RwLock<HashMap<u32, Arc<ModTable>>>,
    nil_basis: OnceLock<Vec<Coords>>,
    nil_index: OnceLock<usize>,
}

impl fmt::Debug for FpkAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FpkAlgebra")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("k", &self.k)
            .field("rank", &self.rank())
            .finish()
    }
}

impl PartialEq for FpkAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.k == other.k
            && self.consts == other.consts
            && self.base.one == other.base.one
    }
}

impl Eq for FpkAlgebra {}

impl FpkAlgebra {
    /// Build and validate an algebra. The integer lift is detected from the
    /// representative table when possible.
    pub fn new(
        name: impl Into<String>,
        p: u64,
        k: u32,
        labels: Vec<String>,
        consts: Vec<Vec<Coords>>,
        one: Coords,
    ) -> Result<Arc<Self>, RingError> {
        let rank = labels.len();
        let reps: Vec<Vec<Vec<i64>>> = consts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.iter().map(|&x| x as i64).collect())
                    .collect()
            })
            .collect();
        let lift = IntLift {
            table: reps,
            one: one.iter().map(|&x| x as i64).collect(),
        };
        let shape_ok = consts.len() == rank
            && consts
                .iter()
                .all(|r| r.len() == rank && r.iter().all(|c| c.len() == rank))
            && one.len() == rank;
        let lift = if shape_ok && lift.is_valid(rank) {
            Some(lift)
        } else {
            None
        };
        Self::build(name.into(), p, k, labels, consts, one, lift)
    }

    /// Build with an explicitly supplied integer lift, which is validated.
    pub fn with_lift(
        name: impl Into<String>,
        p: u64,
        k: u32,
        labels: Vec<String>,
        lift: IntLift,
    ) -> Result<Arc<Self>, RingError> {
        let rank = labels.len();
        if !lift.is_valid(rank) {
            return Err(RingError::Malformed("integer lift is not a ring".into()));
        }
        if !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        if k == 0 || (p as f64).powi(k as i32) > 2f64.powi(62) {
            return Err(RingError::BadExponent(k));
        }
        let q = p.pow(k);
        let t = ModTable::from_ints(q, rank, &lift.table, &lift.one);
        let consts: Vec<Vec<Coords>> = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| {
                        let mut c = vec![0; rank];
                        for &(l, v) in &t.sparse[i * rank + j] {
                            c[l] = v;
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        Self::build(name.into(), p, k, labels, consts, t.one.clone(), Some(lift))
    }

    fn build(
        name: String,
        p: u64,
        k: u32,
        labels: Vec<String>,
        consts: Vec<Vec<Coords>>,
        one: Coords,
        lift: Option<IntLift>,
    ) -> Result<Arc<Self>, RingError> {
        if !is_prime(p) {
            return Err(RingError::NotPrime(p));
        }
        if k == 0 || (p as f64).powi(k as i32) > 2f64.powi(62) {
            return Err(RingError::BadExponent(k));
        }
        let rank = labels.len();
        if rank == 0 {
            return Err(RingError::Malformed("rank must be positive".into()));
        }
        let q = p.pow(k);
        if consts.len() != rank
            || consts
                .iter()
                .any(|r| r.len() != rank || r.iter().any(|c| c.len() != rank))
        {
            return Err(RingError::Malformed(format!(
                "struct_consts must be {rank}x{rank} coordinate vectors of length {rank}"
            )));
        }
        if one.len() != rank {
            return Err(RingError::Length {
                got: one.len(),
                rank,
            });
        }
        if consts.iter().flatten().flatten().chain(&one).any(|&x| x >= q) {
            return Err(RingError::Malformed(format!("coordinates must lie in 0..{q}")));
        }
        let int_table: Vec<Vec<Vec<i64>>> = consts
            .iter()
            .map(|r| r.iter().map(|c| c.iter().map(|&x| x as i64).collect()).collect())
            .collect();
        let one_i: Vec<i64> = one.iter().map(|&x| x as i64).collect();
        let base = ModTable::from_ints(q, rank, &int_table, &one_i);
        let alg = FpkAlgebra {
            name,
            p,
            k,
            labels,
            consts,
            base,
            lift,
            lifted: RwLock::new(HashMap::new()),
            nil_basis: OnceLock::new(),
            nil_index: OnceLock::new(),
        };
        alg.validate()?;
        Ok(Arc::new(alg))
    }

    fn validate(&self) -> Result<(), RingError> {
        let r = self.rank();
        for i in 0..r {
            if self.mul(&self.base.one, &self.basis(i)) != self.basis(i) {
                return Err(RingError::UnitLaw(i));
            }
            for j in 0..r {
                if self.consts[i][j] != self.consts[j][i] {
                    return Err(RingError::NotCommutative(i, j));
                }
            }
        }
        for i in 0..r {
            for j in 0..r {
                let eij = &self.consts[i][j];
                for l in 0..r {
                    let lhs = self.mul(eij, &self.basis(l));
                    let rhs = self.mul(&self.basis(i), &self.consts[j][l]);
                    if lhs != rhs {
                        return Err(RingError::NotAssociative(i, j, l));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn q(&self) -> u64 {
        self.base.q
    }
    pub fn zpk(&self) -> Zpk {
        Zpk::new(self.p, self.k)
    }
    pub fn rank(&self) -> usize {
        self.labels.len()
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn struct_consts(&self) -> &[Vec<Coords>] {
        &self.consts
    }
    pub fn lift(&self) -> Option<&IntLift> {
        self.lift.as_ref()
    }
    pub fn is_fp_algebra(&self) -> bool {
        self.k == 1
    }

    /// Number of elements, if it fits in a `u64`.
    pub fn size(&self) -> Option<u64> {
        self.q().checked_pow(self.rank() as u32)
    }

    /// Multiplication table modulo `p^m` from the integer lift.
    pub fn lifted_table(&self, m: u32) -> Option<Arc<ModTable>> {
        let lift = self.lift.as_ref()?;
        if let Some(t) = self.lifted.read().expect("lock").get(&m) {
            return Some(t.clone());
        }
        let q = self.p.checked_pow(m)?;
        if q > 1 << 62 {
            return None;
        }
        let t = Arc::new(ModTable::from_ints(q, self.rank(), &lift.table, &lift.one));
        self.lifted.write().expect("lock").insert(m, t.clone());
        Some(t)
    }

    pub fn table(&self) -> &ModTable {
        &self.base
    }

    pub fn zero(&self) -> Coords {
        vec![0; self.rank()]
    }
    pub fn one(&self) -> Coords {
        self.base.one.clone()
    }
    pub fn basis(&self, i: usize) -> Coords {
        let mut v = self.zero();
        v[i] = 1 % self.q();
        v
    }
    pub fn from_int(&self, c: i64) -> Coords {
        let c = (c as i128).rem_euclid(self.q() as i128) as u64;
        self.scale(c, &self.base.one)
    }
    pub fn check(&self, x: &[u64]) -> Result<(), RingError> {
        if x.len() != self.rank() {
            return Err(RingError::Length {
                got: x.len(),
                rank: self.rank(),
            });
        }
        Ok(())
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Coords {
        self.base.add(a, b)
    }
    pub fn sub(&self, a: &[u64], b: &[u64]) -> Coords {
        self.base.sub(a, b)
    }
    pub fn neg(&self, a: &[u64]) -> Coords {
        self.base.neg(a)
    }
    pub fn scale(&self, c: u64, a: &[u64]) -> Coords {
        self.base.scale(c, a)
    }
    pub fn mul(&self, a: &[u64], b: &[u64]) -> Coords {
        self.base.mul(a, b)
    }
    pub fn pow(&self, a: &[u64], e: u128) -> Coords {
        self.base.pow(a, e)
    }
    pub fn is_zero(&self, a: &[u64]) -> bool {
        ModTable::is_zero(a)
    }

    /// Safe nilpotency test `x^(p^k·rank) = 0`.
    pub fn is_nilpotent(&self, a: &[u64]) -> bool {
        let e = (self.q() as u128) * self.rank() as u128;
        self.is_zero(&self.pow(a, e))
    }

    /// Matrix of `y ↦ x·y`, column `j` holding `x·e_j`.
    pub fn mult_matrix(&self, x: &[u64]) -> Vec<Vec<u64>> {
        let r = self.rank();
        let cols: Vec<Coords> = (0..r).map(|j| self.mul(x, &self.basis(j))).collect();
        (0..r).map(|l| (0..r).map(|j| cols[j][l]).collect()).collect()
    }

    pub fn inverse(&self, x: &[u64]) -> Option<Coords> {
        let m = self.mult_matrix(x);
        let y = solve_mod(&m, self.rank(), &self.base.one, &self.zpk()).ok()?;
        (self.mul(x, &y) == self.base.one).then_some(y)
    }

    pub fn is_unit(&self, x: &[u64]) -> bool {
        self.inverse(x).is_some()
    }

    /// Element with mixed-radix code `idx` in `0..size()`.
    pub fn element(&self, mut idx: u64) -> Coords {
        let q = self.q();
        (0..self.rank())
            .map(|_| {
                let d = idx % q;
                idx /= q;
                d
            })
            .collect()
    }

    pub fn index_of(&self, x: &[u64]) -> u64 {
        x.iter().rev().fold(0u64, |acc, &d| acc * self.q() + d)
    }

    pub fn elements(&self) -> impl Iterator<Item = Coords> + '_ {
        let n = self.size().expect("ring too large to enumerate");
        (0..n).map(move |i| self.element(i))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Coords {
        (0..self.rank()).map(|_| rng.gen_range(0..self.q())).collect()
    }

    pub fn format(&self, x: &[u64]) -> String {
        let terms: Vec<String> = x
            .iter()
            .zip(&self.labels)
            .filter(|(&c, _)| c != 0)
            .map(|(&c, l)| {
                if l == "1" {
                    c.to_string()
                } else if c == 1 {
                    l.clone()
                } else {
                    format!("{c}*{l}")
                }
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }

    pub fn to_json(&self) -> AlgebraJson {
        AlgebraJson {
            p: self.p,
            k: self.k,
            rank: self.rank(),
            labels: self.labels.clone(),
            struct_consts: self.consts.clone(),
            one_coords: self.base.one.clone(),
            name: Some(self.name.clone()),
        }
    }

    pub fn from_json(j: &AlgebraJson) -> Result<Arc<Self>, RingError> {
        if j.labels.len() != j.rank {
            return Err(RingError::Malformed(format!(
                "rank {} but {} labels",
                j.rank,
                j.labels.len()
            )));
        }
        Self::new(
            j.name.clone().unwrap_or_else(|| "ring".into()),
            j.p,
            j.k,
            j.labels.clone(),
            j.struct_consts.clone(),
            j.one_coords.clone(),
        )
    }

    /// The Frobenius `x ↦ x^p` of an `F_p`-algebra.
    pub fn frobenius_endo(self: &Arc<Self>) -> Result<RingHom, RingError> {
        if self.k != 1 {
            return Err(RingError::NotFpAlgebra(self.k));
        }
        let images = (0..self.rank())
            .map(|i| self.pow(&self.basis(i), self.p as u128))
            .collect();
        RingHom::new(self.clone(), self.clone(), images)
    }

    /// The ideal of nilpotent elements.
    pub fn nilradical(self: &Arc<Self>) -> RingIdeal {
        let basis = self.nil_basis.get_or_init(|| self.compute_nilradical().basis).clone();
        RingIdeal {
            ring: self.clone(),
            generators: basis.clone(),
            basis,
        }
    }

    fn compute_nilradical(self: &Arc<Self>) -> RingIdeal {
        let r = self.rank();
        let fp = Zpk::new(self.p, 1);
        let mut j = 0u32;
        while (self.p as u128).pow(j) < r as u128 {
            j += 1;
        }
        let e = (self.p as u128).pow(j);
        // x ↦ x^(p^j) is additive mod p, so its kernel on R/pR is linear
        let cols: Vec<Coords> = (0..r)
            .map(|i| {
                self.pow(&self.basis(i), e)
                    .iter()
                    .map(|&c| c % self.p)
                    .collect()
            })
            .collect();
        let mat: Vec<Vec<u64>> = (0..r).map(|l| (0..r).map(|i| cols[i][l]).collect()).collect();
        let mut gens: Vec<Coords> = kernel_mod(&mat, r, &fp);
        if self.k > 1 {
            for i in 0..r {
                gens.push(self.scale(self.p, &self.basis(i)));
            }
        }
        let ideal = RingIdeal::generated(self, gens);
        debug_assert!(ideal.basis.iter().all(|b| self.is_nilpotent(b)));
        ideal
    }

    /// Dimension over `F_p` of `{x : x^p = x}` in the reduced quotient, i.e.
    /// the number of factor fields of `R/Nil(R)`.
    fn reduced_field_count(self: &Arc<Self>) -> Result<usize, RingError> {
        let nil = self.nilradical();
        let (red, _) = make_quotient(self, &nil)?;
        if red.k != 1 {
            return Err(RingError::NotLocal("reduced quotient has k > 1".into()));
        }
        let r = red.rank();
        let fp = Zpk::new(red.p, 1);
        let mat: Vec<Vec<u64>> = {
            let cols: Vec<Coords> = (0..r)
                .map(|i| red.sub(&red.pow(&red.basis(i), red.p as u128), &red.basis(i)))
                .collect();
            (0..r).map(|l| (0..r).map(|i| cols[i][l]).collect()).collect()
        };
        let s = local_smith(&mat, r, &fp);
        Ok(r - s.vals.len())
    }

    pub fn is_local(self: &Arc<Self>) -> bool {
        matches!(self.reduced_field_count(), Ok(1))
    }

    /// Residue field and the unique ring section `k → R` of an Artinian local
    /// `F_p`-algebra.
    pub fn residue_section(self: &Arc<Self>) -> Result<ResidueSection, RingError> {
        if self.k != 1 {
            return Err(RingError::NotFpAlgebra(self.k));
        }
        if !self.is_local() {
            return Err(RingError::NotLocal(self.name.clone()));
        }
        let nil = self.nilradical();
        let (field, proj) = make_quotient(self, &nil)?;
        let d = field.rank() as u32;
        let pd = (self.p as u128).pow(d);
        let mut images = Vec::with_capacity(field.rank());
        for lift in proj.basis_lifts.iter() {
            let mut x = lift.clone();
            loop {
                let y = self.pow(&x, pd);
                if y == x {
                    break;
                }
                x = y;
            }
            images.push(x);
        }
        let section = RingHom::new(field.clone(), self.clone(), images)?;
        for i in 0..field.rank() {
            if proj.hom.apply(&section.apply(&field.basis(i))) != field.basis(i) {
                return Err(RingError::BadHom("projection after section is not the identity".into()));
            }
        }
        Ok(ResidueSection {
            field,
            projection: proj.hom,
            section,
            nilradical: nil,
        })
    }

    /// Least `e` with `Nil(R)^e = 0`.
    pub fn nilpotency_index(self: &Arc<Self>) -> usize {
        *self.nil_index.get_or_init(|| self.compute_nilpotency_index())
    }

    fn compute_nilpotency_index(self: &Arc<Self>) -> usize {
        let nil = self.nilradical();
        let mut e = 1;
        let mut pw = nil.clone();
        while !pw.is_zero() {
            pw = pw.product(&nil);
            e += 1;
        }
        e
    }
}

/// A ring homomorphism tabulated on the source basis.
#[derive(Debug, Clone)]
pub struct RingHom {
    pub src: Arc<FpkAlgebra>,
    pub dst: Arc<FpkAlgebra>,
    pub images: Vec<Coords>,
}

impl RingHom {
    /// Validate unit, multiplicativity on basis pairs and `Z/p^k`-linearity.
    pub fn new(src: Arc<FpkAlgebra>, dst: Arc<FpkAlgebra>, images: Vec<Coords>) -> Result<Self, RingError> {
        if images.len() != src.rank() || images.iter().any(|x| x.len() != dst.rank()) {
            return Err(RingError::BadHom("image shape".into()));
        }
        if src.p != dst.p || dst.k > src.k {
            return Err(RingError::BadHom("incompatible characteristics".into()));
        }
        let h = RingHom { src, dst, images };
        if h.apply(&h.src.one()) != h.dst.one() {
            return Err(RingError::BadHom("unit not preserved".into()));
        }
        for i in 0..h.src.rank() {
            for j in i..h.src.rank() {
                let lhs = h.apply(&h.src.struct_consts()[i][j]);
                let rhs = h.dst.mul(&h.images[i], &h.images[j]);
                if lhs != rhs {
                    return Err(RingError::BadHom(format!("not multiplicative on ({i},{j})")));
                }
            }
        }
        Ok(h)
    }

    pub fn apply(&self, x: &[u64]) -> Coords {
        let dq = self.dst.q();
        let mut acc = vec![0u128; self.dst.rank()];
        for (i, &c) in x.iter().enumerate() {
            let c = c % dq;
            if c == 0 {
                continue;
            }
            for (a, &v) in acc.iter_mut().zip(&self.images[i]) {
                *a = (*a + c as u128 * v as u128) % dq as u128;
            }
        }
        acc.into_iter().map(|x| x as u64).collect()
    }

    pub fn compose(&self, after: &RingHom) -> Result<RingHom, RingError> {
        let images = self.images.iter().map(|x| after.apply(x)).collect();
        RingHom::new(self.src.clone(), after.dst.clone(), images)
    }

    pub fn identity(r: &Arc<FpkAlgebra>) -> RingHom {
        RingHom {
            src: r.clone(),
            dst: r.clone(),
            images: (0..r.rank()).map(|i| r.basis(i)).collect(),
        }
    }
}

/// An ideal with a Howell-reduced `Z/p^k`-basis.
#[derive(Debug, Clone)]
pub struct RingIdeal {
    pub ring: Arc<FpkAlgebra>,
    pub generators: Vec<Coords>,
    pub basis: Vec<Coords>,
}

impl RingIdeal {
    /// The ideal generated by `gens`.
    pub fn generated(ring: &Arc<FpkAlgebra>, gens: Vec<Coords>) -> RingIdeal {
        let mut rows = Vec::new();
        for g in &gens {
            for i in 0..ring.rank() {
                rows.push(ring.mul(g, &ring.basis(i)));
            }
        }
        let basis = howell_form(&rows, ring.rank(), &ring.zpk());
        RingIdeal {
            ring: ring.clone(),
            generators: gens,
            basis,
        }
    }

    /// Interpret `vectors` as a module basis and check ideal closure.
    pub fn from_module(ring: &Arc<FpkAlgebra>, vectors: Vec<Coords>) -> Result<RingIdeal, RingError> {
        let z = ring.zpk();
        let basis = howell_form(&vectors, ring.rank(), &z);
        for b in &basis {
            for i in 0..ring.rank() {
                let y = ring.mul(b, &ring.basis(i));
                if !howell_contains(&basis, &y, &z) {
                    return Err(RingError::NotIdeal(format!(
                        "{} * {} leaves the span",
                        ring.format(b),
                        ring.labels()[i]
                    )));
                }
            }
        }
        Ok(RingIdeal {
            ring: ring.clone(),
            generators: vectors,
            basis,
        })
    }

    pub fn zero(ring: &Arc<FpkAlgebra>) -> RingIdeal {
        RingIdeal {
            ring: ring.clone(),
            generators: vec![],
            basis: vec![],
        }
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        howell_contains(&self.basis, x, &self.ring.zpk())
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn product(&self, other: &RingIdeal) -> RingIdeal {
        let mut gens = Vec::new();
        for a in &self.basis {
            for b in &other.basis {
                gens.push(self.ring.mul(a, b));
            }
        }
        RingIdeal::generated(&self.ring, gens)
    }

    /// `I^w` with `I^0 = R`.
    pub fn power(&self, w: usize) -> RingIdeal {
        let mut acc = RingIdeal::generated(&self.ring, vec![self.ring.one()]);
        for _ in 0..w {
            acc = acc.product(self);
        }
        acc
    }

    /// `log_p` of the number of elements.
    pub fn log_size(&self) -> u32 {
        let z = self.ring.zpk();
        self.basis
            .iter()
            .map(|b| {
                let v = b.iter().find(|&&c| c != 0).map_or(z.k, |&c| z.val(c));
                z.k - v
            })
            .sum()
    }

    pub fn elements(&self) -> Vec<Coords> {
        let z = self.ring.zpk();
        let mut out = vec![self.ring.zero()];
        for b in &self.basis {
            let v = b.iter().find(|&&c| c != 0).map_or(z.k, |&c| z.val(c));
            let ord = z.p.pow(z.k - v);
            let mut next = Vec::with_capacity(out.len() * ord as usize);
            for x in &out {
                for m in 0..ord {
                    next.push(self.ring.add(x, &self.ring.scale(m, b)));
                }
            }
            out = next;
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Coords {
        let mut x = self.ring.zero();
        for b in &self.basis {
            let c = rng.gen_range(0..self.ring.q());
            x = self.ring.add(&x, &self.ring.scale(c, b));
        }
        x
    }
}

/// Quotient map with chosen basis lifts.
#[derive(Debug, Clone)]
pub struct Projection {
    pub hom: RingHom,
    /// Preimages in the source of the quotient basis elements.
    pub basis_lifts: Vec<Coords>,
}

impl Projection {
    /// A fixed preimage of `y`.
    pub fn lift(&self, y: &[u64]) -> Coords {
        let r = &self.hom.src;
        let mut x = r.zero();
        for (c, l) in y.iter().zip(&self.basis_lifts) {
            x = r.add(&x, &r.scale(*c, l));
        }
        x
    }
}

/// Quotient algebra `R/I` with its projection.
pub fn make_quotient(r: &Arc<FpkAlgebra>, ideal: &RingIdeal) -> Result<(Arc<FpkAlgebra>, Projection), RingError> {
    let z = r.zpk();
    let rank = r.rank();
    // the input must really be an ideal
    let ideal = RingIdeal::from_module(r, ideal.basis.clone())?;
    let h = &ideal.basis;
    let pivots: Vec<usize> = h
        .iter()
        .map(|row| row.iter().position(|&c| c != 0).expect("nonzero Howell row"))
        .collect();
    let (k2, lifts, project): (u32, Vec<Coords>, Box<dyn Fn(&[u64]) -> Coords>) =
        if h.iter().zip(&pivots).all(|(row, &c)| row[c] == 1) {
            // unit pivots: keep the standard basis vectors off the pivot columns
            let kept: Vec<usize> = (0..rank).filter(|i| !pivots.contains(i)).collect();
            if kept.is_empty() {
                return Err(RingError::QuotientNotFree("quotient is the zero ring".into()));
            }
            let lifts = kept.iter().map(|&i| r.basis(i)).collect();
            let rows = h.clone();
            let piv = pivots.clone();
            let project = move |x: &[u64]| -> Coords {
                let mut y = x.to_vec();
                for (row, &c) in rows.iter().zip(&piv) {
                    let f = y[c];
                    if f != 0 {
                        for j in 0..y.len() {
                            y[j] = z.sub(y[j], z.mul(f, row[j]));
                        }
                    }
                }
                kept.iter().map(|&i| y[i]).collect()
            };
            (r.k, lifts, Box::new(project))
        } else {
            let s = local_smith(h, rank, &z);
            let mut exps = vec![r.k; rank];
            for (i, &v) in s.vals.iter().enumerate() {
                exps[i] = v;
            }
            let kept: Vec<usize> = (0..rank).filter(|&i| exps[i] > 0).collect();
            if kept.is_empty() {
                return Err(RingError::QuotientNotFree("quotient is the zero ring".into()));
            }
            let k2 = exps[kept[0]];
            if kept.iter().any(|&i| exps[i] != k2) {
                let e: Vec<u32> = kept.iter().map(|&i| exps[i]).collect();
                return Err(RingError::QuotientNotFree(format!("module exponents {e:?}")));
            }
            let q2 = r.p.pow(k2);
            let vinv = mat_inverse_mod(&s.v, &z).expect("smith witness is invertible");
            let lifts = kept.iter().map(|&i| vinv[i].clone()).collect();
            let vt: Vec<Vec<u64>> = (0..rank).map(|c| (0..rank).map(|rr| s.v[rr][c]).collect()).collect();
            let project = move |x: &[u64]| -> Coords {
                let xv = mat_vec_mod(&vt, x, &z);
                kept.iter().map(|&i| xv[i] % q2).collect()
            };
            (k2, lifts, Box::new(project))
        };
    let n = lifts.len();
    let consts: Vec<Vec<Coords>> = (0..n)
        .map(|a| (0..n).map(|b| project(&r.mul(&lifts[a], &lifts[b]))).collect())
        .collect();
    let one = project(&r.one());
    let labels: Vec<String> = lifts
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let nz: Vec<usize> = (0..rank).filter(|&j| l[j] != 0).collect();
            if nz.len() == 1 && l[nz[0]] == 1 {
                r.labels()[nz[0]].clone()
            } else {
                format!("b{i}")
            }
        })
        .collect();
    let q = FpkAlgebra::new(format!("{}/I", r.name()), r.p, k2, labels, consts, one)?;
    let images: Vec<Coords> = (0..rank).map(|i| project(&r.basis(i))).collect();
    let hom = RingHom::new(r.clone(), q.clone(), images)?;
    Ok((
        q,
        Projection {
            hom,
            basis_lifts: lifts,
        },
    ))
}

/// `Z/p^k`.
pub fn make_zmod(p: u64, k: u32) -> Result<Arc<FpkAlgebra>, RingError> {
    let name = if k == 1 {
        format!("F{p}")
    } else {
        format!("Z/{p}^{k}")
    };
    FpkAlgebra::with_lift(
        name,
        p,
        k,
        vec!["1".into()],
        IntLift {
            table: vec![vec![vec![1]]],
            one: vec![1],
        },
    )
}

/// Integer table of `Z[a]/(f)` for a monic `f` given low to high.
fn monic_quotient_lift(f: &[i64]) -> Option<IntLift> {
    let d = f.len() - 1;
    // powers a^0 .. a^(2d-2) in the basis 1, a, …, a^(d-1)
    let mut pows: Vec<Vec<i128>> = Vec::new();
    let mut cur = vec![0i128; d];
    cur[0] = 1;
    for _ in 0..(2 * d - 1) {
        pows.push(cur.clone());
        let mut next = vec![0i128; d];
        let top = cur[d - 1];
        for i in (1..d).rev() {
            next[i] = cur[i - 1];
        }
        for (i, n) in next.iter_mut().enumerate() {
            *n = n.checked_sub(top.checked_mul(f[i] as i128)?)?;
        }
        cur = next;
    }
    let table = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| pows[i + j].iter().map(|&x| i64::try_from(x).ok()).collect::<Option<Vec<i64>>>())
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()?;
    let mut one = vec![0; d];
    one[0] = 1;
    Some(IntLift { table, one })
}

/// `F_{p^d} = F_p[a]/(f)` for a monic irreducible `f` (coefficients low to
/// high, the leading 1 included).
pub fn make_field(p: u64, poly: &[u64], var: &str) -> Result<Arc<FpkAlgebra>, RingError> {
    make_galois(p, 1, poly, var)
}

/// `(Z/p^k)[a]/(f)`; for `k = 1` the polynomial must be irreducible mod `p`.
pub fn make_galois(p: u64, k: u32, poly: &[u64], var: &str) -> Result<Arc<FpkAlgebra>, RingError> {
    if !is_prime(p) {
        return Err(RingError::NotPrime(p));
    }
    if poly.len() < 2 || poly[poly.len() - 1] != 1 {
        return Err(RingError::NotAField("polynomial must be monic of degree >= 1".into()));
    }
    let d = poly.len() - 1;
    let f: Vec<i64> = poly.iter().map(|&c| c as i64).collect();
    let lift = monic_quotient_lift(&f).ok_or_else(|| RingError::Malformed("lift overflow".into()))?;
    let labels: Vec<String> = (0..d)
        .map(|i| match i {
            0 => "1".to_string(),
            1 => var.to_string(),
            _ => format!("{var}^{i}"),
        })
        .collect();
    let name = if k == 1 {
        format!("F{}", p.pow(d as u32))
    } else {
        format!("GR({p}^{k},{d})")
    };
    if k > 1 {
        // a Galois ring exactly when the reduction mod p is a field
        make_galois(p, 1, &poly.iter().map(|c| c % p).collect::<Vec<_>>(), var)?;
    }
    let r = FpkAlgebra::with_lift(name, p, k, labels, lift)?;
    if d > 1 && k == 1 {
        let nil = r.nilradical();
        if !nil.is_zero() || r.reduced_field_count()? != 1 {
            return Err(RingError::NotAField(format!("{poly:?} is reducible mod {p}")));
        }
    }
    Ok(r)
}

/// `R[x]/(x^m)` with basis `e_i·x^j` ordered by `j` then `i`.
pub fn extend_nilpotent(r: &Arc<FpkAlgebra>, m: usize, var: &str) -> Result<Arc<FpkAlgebra>, RingError> {
    if m == 0 {
        return Err(RingError::Malformed("truncation degree must be positive".into()));
    }
    let rr = r.rank();
    let n = rr * m;
    let idx = |i: usize, j: usize| j * rr + i;
    let mut labels = Vec::with_capacity(n);
    for j in 0..m {
        for i in 0..rr {
            let xl = match j {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{j}"),
            };
            let base = &r.labels()[i];
            labels.push(match (base.as_str(), xl.is_empty()) {
                (_, true) => base.clone(),
                ("1", false) => xl,
                (_, false) => format!("{base}*{xl}"),
            });
        }
    }
    let name = format!("{}[{var}]/({var}^{m})", r.name());
    let build_table = |cell: &dyn Fn(usize, usize) -> Vec<i64>| -> Vec<Vec<Vec<i64>>> {
        let mut t = vec![vec![vec![0i64; n]; n]; n];
        for j1 in 0..m {
            for j2 in 0..m {
                if j1 + j2 >= m {
                    continue;
                }
                for i1 in 0..rr {
                    for i2 in 0..rr {
                        let c = cell(i1, i2);
                        for (l, &v) in c.iter().enumerate() {
                            t[idx(i1, j1)][idx(i2, j2)][idx(l, j1 + j2)] = v;
                        }
                    }
                }
            }
        }
        t
    };
    let one_of = |o: &[i64]| -> Vec<i64> {
        let mut v = vec![0; n];
        v[..rr].copy_from_slice(o);
        v
    };
    if let Some(lift) = r.lift() {
        let t = build_table(&|a, b| lift.table[a][b].clone());
        return FpkAlgebra::with_lift(
            name,
            r.p(),
            r.k(),
            labels,
            IntLift {
                table: t,
                one: one_of(&lift.one),
            },
        );
    }
    let t = build_table(&|a, b| r.struct_consts()[a][b].iter().map(|&x| x as i64).collect());
    let consts = t
        .iter()
        .map(|row| row.iter().map(|c| c.iter().map(|&x| x as u64).collect()).collect())
        .collect();
    let one: Vec<u64> = one_of(&r.one().iter().map(|&x| x as i64).collect::<Vec<_>>())
        .iter()
        .map(|&x| x as u64)
        .collect();
    FpkAlgebra::new(name, r.p(), r.k(), labels, consts, one)
}

/// Residue field data of an Artinian local `F_p`-algebra.
#[derive(Debug, Clone)]
pub struct ResidueSection {
    pub field: Arc<FpkAlgebra>,
    pub projection: RingHom,
    pub section: RingHom,
    pub nilradical: RingIdeal,
}

/// An element bundled with its ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingElement {
    pub ring: Arc<FpkAlgebra>,
    pub coords: Coords,
}

impl RingElement {
    pub fn new(ring: &Arc<FpkAlgebra>, coords: Coords) -> Result<Self, RingError> {
        ring.check(&coords)?;
        let q = ring.q();
        Ok(RingElement {
            ring: ring.clone(),
            coords: coords.into_iter().map(|c| c % q).collect(),
        })
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ring.format(&self.coords))
    }
}

/// Named algebras used across tests, the corpus and the CLI.
pub mod std_rings {
    use super::*;

    pub fn f2() -> Arc<FpkAlgebra> {
        make_zmod(2, 1).unwrap()
    }
    pub fn f3() -> Arc<FpkAlgebra> {
        make_zmod(3, 1).unwrap()
    }
    pub fn fp(p: u64) -> Arc<FpkAlgebra> {
        make_zmod(p, 1).unwrap()
    }
    /// `F_4 = F_2[a]/(a^2+a+1)`.
    pub fn f4() -> Arc<FpkAlgebra> {
        make_field(2, &[1, 1, 1], "a").unwrap()
    }
    /// `F_8 = F_2[a]/(a^3+a+1)`.
    pub fn f8() -> Arc<FpkAlgebra> {
        make_field(2, &[1, 1, 0, 1], "a").unwrap()
    }
    /// `F_9 = F_3[a]/(a^2+1)`.
    pub fn f9() -> Arc<FpkAlgebra> {
        make_field(3, &[1, 0, 1], "a").unwrap()
    }
    /// `F_27 = F_3[a]/(a^3+2a+1)`.
    pub fn f27() -> Arc<FpkAlgebra> {
        make_field(3, &[1, 2, 0, 1], "a").unwrap()
    }
    /// `F_{p^m}` for the small towers used by the point-count corpus.
    pub fn fq(p: u64, m: u32) -> Arc<FpkAlgebra> {
        match (p, m) {
            (_, 1) => fp(p),
            (2, 2) => f4(),
            (2, 3) => f8(),
            (3, 2) => f9(),
            (3, 3) => f27(),
            (5, 2) => make_field(5, &[2, 0, 1], "a").unwrap(),
            _ => panic!("no stored field F_{p}^{m}"),
        }
    }
    pub fn truncated(base: &Arc<FpkAlgebra>, m: usize) -> Arc<FpkAlgebra> {
        extend_nilpotent(base, m, "t").unwrap()
    }
    /// `F_2[x,y]/(x^2, y^2, xy)`.
    pub fn f2_xy() -> Arc<FpkAlgebra> {
        let r = extend_nilpotent(&extend_nilpotent(&f2(), 2, "x").unwrap(), 2, "y").unwrap();
        let xy = r.mul(&r.basis(1), &r.basis(2));
        let (q, _) = make_quotient(&r, &RingIdeal::generated(&r, vec![xy])).unwrap();
        q
    }
}

#[cfg(test)]
mod tests {
    use super::std_rings::*;
    use super::*;

    #[test]
    fn zmod_constructions() {
        let z8 = make_zmod(2, 3).unwrap();
        assert_eq!(z8.rank(), 1);
        assert_eq!(z8.q(), 8);
        assert!(matches!(make_zmod(4, 1), Err(RingError::NotPrime(4))));
    }

    #[test]
    fn nilradical_examples() {
        let z4 = make_zmod(2, 2).unwrap();
        let n = z4.nilradical();
        let oracle: Vec<Coords> = z4.elements().filter(|x| z4.is_nilpotent(x)).collect();
        assert_eq!(oracle, vec![vec![0], vec![2]]);
        assert_eq!(n.elements().len(), 2);
        assert!(n.contains(&[2]) && !n.contains(&[1]));
        assert!(f4().nilradical().is_zero());
        let t3 = truncated(&f2(), 3);
        let n = t3.nilradical();
        for x in t3.elements() {
            assert_eq!(n.contains(&x), t3.is_nilpotent(&x));
        }
        assert_eq!(n.log_size(), 2);
    }

    #[test]
    fn quotient_examples() {
        let t3 = truncated(&f2(), 3);
        let (q, pr) = make_quotient(&t3, &RingIdeal::generated(&t3, vec![t3.basis(2)])).unwrap();
        assert_eq!(q.rank(), 2);
        let t = q.basis(1);
        assert!(q.is_zero(&q.mul(&t, &t)));
        assert!(pr.hom.apply(&t3.basis(2)).iter().all(|&c| c == 0));
        let z4 = make_zmod(2, 2).unwrap();
        let (f, _) = make_quotient(&z4, &RingIdeal::generated(&z4, vec![vec![2]])).unwrap();
        assert_eq!((f.k(), f.rank()), (1, 1));
        assert_eq!(f2_xy().rank(), 3);
    }

    #[test]
    fn frobenius_examples() {
        let f4 = f4();
        let fr = f4.frobenius_endo().unwrap();
        assert_eq!(fr.images[1], vec![1, 1]);
        let t3 = truncated(&f2(), 3);
        assert_eq!(t3.frobenius_endo().unwrap().images[1], t3.basis(2));
        let f3 = f3();
        assert_eq!(f3.frobenius_endo().unwrap().images[0], vec![1]);
        assert!(make_zmod(2, 2).unwrap().frobenius_endo().is_err());
    }

    #[test]
    fn residue_sections() {
        let r = truncated(&f4(), 2);
        let rs = r.residue_section().unwrap();
        assert_eq!(rs.field.rank(), 2);
        let a = rs.section.apply(&rs.field.basis(1));
        assert_eq!(r.pow(&a, 4), a);
        for x in rs.field.elements() {
            for y in rs.field.elements() {
                let s = |v: &[u64]| rs.section.apply(v);
                assert_eq!(r.mul(&s(&x), &s(&y)), s(&rs.field.mul(&x, &y)));
            }
            assert_eq!(rs.projection.apply(&rs.section.apply(&x)), x);
        }
        assert!(make_zmod(2, 2).unwrap().residue_section().is_err());
        let split = make_field(2, &[1, 0, 1], "a");
        assert!(split.is_err());
    }

    #[test]
    fn json_round_trip_keeps_lift() {
        let r = truncated(&f9(), 2);
        let j = r.to_json();
        let r2 = FpkAlgebra::from_json(&j).unwrap();
        assert!(r2.lift().is_some());
        assert_eq!(*r, *r2);
    }

    #[test]
    fn bad_tables_rejected() {
        // e1*e1 = e0 + e1 with unit e0 is fine; break commutativity
        let c = vec![
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![1, 0], vec![1, 1]],
        ];
        assert!(matches!(
            FpkAlgebra::new("x", 2, 1, vec!["1".into(), "e".into()], c, vec![1, 0]),
            Err(RingError::NotCommutative(..))
        ));
    }
}
