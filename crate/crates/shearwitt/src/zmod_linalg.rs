//! Linear algebra over the integers and over `Z/p^k`, and homology of
//! two-term complexes of finite abelian p-groups given by enumeration.
//!
//! Matrices over `Z/p^k` are dense `Vec<Vec<u64>>` with entries reduced to
//! `0..p^k`. Since `Z/p^k` is local, every nonzero entry is a unit times a
//! power of `p`, and pivoting on the entry of least valuation never needs
//! gcd steps.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Default enumeration cap for homology computations.
pub const DEFAULT_SIZE_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("enumeration refused: source has {source_size} elements, target has {target_size}, cap is {cap}")]
    SizeCap {
        source_size: u64,
        target_size: u64,
        cap: u64,
    },
    #[error("not a finite abelian p-group: {0}")]
    NotPGroup(String),
    #[error("composite maps do not form a complex: {0}")]
    NotComplex(String),
    #[error("linear system has no solution")]
    Unsolvable,
}

/// Arithmetic in `Z/p^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Zpk {
    pub p: u64,
    pub k: u32,
    pub q: u64,
}

impl Zpk {
    pub fn new(p: u64, k: u32) -> Self {
        let q = p.checked_pow(k).expect("p^k overflows u64");
        Zpk { p, k, q }
    }

    #[inline]
    pub fn reduce(&self, x: u128) -> u64 {
        (x % self.q as u128) as u64
    }

    #[inline]
    pub fn reduce_i(&self, x: i128) -> u64 {
        x.rem_euclid(self.q as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        self.reduce(s)
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.q - (b - a)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    /// p-adic valuation of a residue, `k` for zero.
    pub fn val(&self, a: u64) -> u32 {
        if a == 0 {
            return self.k;
        }
        let mut v = 0;
        let mut x = a;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    /// Inverse of a unit.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let (g, x, _) = ext_gcd(a as i128, self.q as i128);
        if g != 1 {
            return None;
        }
        Some(self.reduce_i(x))
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Integer matrix with arbitrary-precision entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn new(entries: Vec<Vec<BigInt>>) -> Self {
        let rows = entries.len();
        let cols = entries.first().map_or(0, |r| r.len());
        assert!(entries.iter().all(|r| r.len() == cols), "ragged matrix");
        IntMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![vec![BigInt::zero(); n]; n];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = BigInt::one();
        }
        IntMatrix {
            rows: n,
            cols: n,
            entries: e,
        }
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = vec![vec![BigInt::zero(); other.cols]; self.rows];
        for i in 0..self.rows {
            for l in 0..self.cols {
                if self.entries[i][l].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[i][j] += &self.entries[i][l] * &other.entries[l][j];
                }
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: other.cols,
            entries: out,
        }
    }
}

/// Smith normal form `U·M·V = diag(d_1, …, d_r, 0, …)` with `d_i | d_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    /// Nonzero invariant factors, positive, in divisibility order.
    pub diag: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    /// Recompute `U·M·V` and compare with the diagonal.
    pub fn verify(&self, m: &IntMatrix) -> bool {
        let d = self.u.mul(m).mul(&self.v);
        for i in 0..d.rows {
            for j in 0..d.cols {
                let want = if i == j && i < self.diag.len() {
                    self.diag[i].clone()
                } else {
                    BigInt::zero()
                };
                if d.entries[i][j] != want {
                    return false;
                }
            }
        }
        self.diag.windows(2).all(|w| (&w[1] % &w[0]).is_zero())
    }
}

/// Smith normal form over the integers with unimodular witnesses.
pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (r, c) = (m.rows, m.cols);
    let mut a = m.entries.clone();
    let mut u = IntMatrix::identity(r).entries;
    let mut v = IntMatrix::identity(c).entries;
    let mut t = 0;
    while t < r.min(c) {
        // smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                if !a[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        u.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        for row in v.iter_mut() {
            row.swap(t, bj);
        }
        let mut clean = true;
        for i in t + 1..r {
            if a[i][t].is_zero() {
                continue;
            }
            let q = a[i][t].div_floor(&a[t][t]);
            for j in 0..c {
                let s = &q * &a[t][j];
                a[i][j] -= s;
            }
            for j in 0..r {
                let s = &q * &u[t][j];
                u[i][j] -= s;
            }
            if !a[i][t].is_zero() {
                clean = false;
            }
        }
        for j in t + 1..c {
            if a[t][j].is_zero() {
                continue;
            }
            let q = a[t][j].div_floor(&a[t][t]);
            for i in 0..r {
                let s = &q * &a[i][t];
                a[i][j] -= s;
            }
            for i in 0..c {
                let s = &q * &v[i][t];
                v[i][j] -= s;
            }
            if !a[t][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // pivot must divide the whole trailing block
        let mut bad_row = None;
        'scan: for i in t + 1..r {
            for j in t + 1..c {
                if !(&a[i][j] % &a[t][t]).is_zero() {
                    bad_row = Some(i);
                    break 'scan;
                }
            }
        }
        if let Some(i) = bad_row {
            for j in 0..c {
                let s = a[i][j].clone();
                a[t][j] += s;
            }
            for j in 0..r {
                let s = u[i][j].clone();
                u[t][j] += s;
            }
            continue;
        }
        if a[t][t].is_negative() {
            for j in 0..c {
                a[t][j] = -a[t][j].clone();
            }
            for j in 0..r {
                u[t][j] = -u[t][j].clone();
            }
        }
        t += 1;
    }
    let diag = (0..r.min(c))
        .map(|i| a[i][i].clone())
        .take_while(|d| !d.is_zero())
        .collect();
    SmithForm {
        diag,
        u: IntMatrix::new(u),
        v: IntMatrix {
            rows: c,
            cols: c,
            entries: v,
        },
    }
}

/// Smith form over the local ring `Z/p^k`: `U·A·V = D` with `D` diagonal and
/// its entries `p^{v_1}, p^{v_2}, …` nondecreasing in valuation.
#[derive(Debug, Clone)]
pub struct LocalSmith {
    pub u: Vec<Vec<u64>>,
    pub v: Vec<Vec<u64>>,
    /// Valuations of the nonzero diagonal entries.
    pub vals: Vec<u32>,
    pub rows: usize,
    pub cols: usize,
}

fn identity_mod(n: usize, z: &Zpk) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1 % z.q;
    }
    m
}

pub fn local_smith(a: &[Vec<u64>], cols: usize, z: &Zpk) -> LocalSmith {
    let rows = a.len();
    let mut a: Vec<Vec<u64>> = a.to_vec();
    let mut u = identity_mod(rows, z);
    let mut v = identity_mod(cols, z);
    let mut vals = Vec::new();
    for t in 0..rows.min(cols) {
        let mut best: Option<(usize, usize, u32)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, &x) in row.iter().enumerate().skip(t) {
                if x != 0 {
                    let vv = z.val(x);
                    if best.map_or(true, |b| vv < b.2) {
                        best = Some((i, j, vv));
                    }
                }
            }
        }
        let Some((bi, bj, vv)) = best else { break };
        a.swap(t, bi);
        u.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        for row in v.iter_mut() {
            row.swap(t, bj);
        }
        let pv = z.p.pow(vv);
        let unit = a[t][t] / pv;
        let ui = z.inv(unit).expect("unit part is invertible");
        for x in a[t].iter_mut() {
            *x = z.mul(*x, ui);
        }
        for x in u[t].iter_mut() {
            *x = z.mul(*x, ui);
        }
        for i in t + 1..rows {
            if a[i][t] == 0 {
                continue;
            }
            let f = a[i][t] / pv;
            for j in 0..cols {
                let s = z.mul(f, a[t][j]);
                a[i][j] = z.sub(a[i][j], s);
            }
            for j in 0..rows {
                let s = z.mul(f, u[t][j]);
                u[i][j] = z.sub(u[i][j], s);
            }
        }
        for j in t + 1..cols {
            if a[t][j] == 0 {
                continue;
            }
            let f = a[t][j] / pv;
            for row in a.iter_mut() {
                let s = z.mul(f, row[t]);
                row[j] = z.sub(row[j], s);
            }
            for row in v.iter_mut() {
                let s = z.mul(f, row[t]);
                row[j] = z.sub(row[j], s);
            }
        }
        vals.push(vv);
    }
    LocalSmith {
        u,
        v,
        vals,
        rows,
        cols,
    }
}

pub fn mat_mul_mod(a: &[Vec<u64>], b: &[Vec<u64>], z: &Zpk) -> Vec<Vec<u64>> {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    let mut s: u128 = 0;
                    for (l, &x) in row.iter().enumerate() {
                        s += x as u128 * b[l][j] as u128;
                        if s > u64::MAX as u128 {
                            s %= z.q as u128;
                        }
                    }
                    z.reduce(s)
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec_mod(a: &[Vec<u64>], x: &[u64], z: &Zpk) -> Vec<u64> {
    a.iter()
        .map(|row| {
            let mut s: u128 = 0;
            for (l, &c) in row.iter().enumerate() {
                s += c as u128 * x[l] as u128;
                if s > u64::MAX as u128 {
                    s %= z.q as u128;
                }
            }
            z.reduce(s)
        })
        .collect()
}

/// Inverse of a square matrix over `Z/p^k`, if it exists.
pub fn mat_inverse_mod(a: &[Vec<u64>], z: &Zpk) -> Option<Vec<Vec<u64>>> {
    let n = a.len();
    let mut m: Vec<Vec<u64>> = a.to_vec();
    let mut inv = identity_mod(n, z);
    for c in 0..n {
        let r = (c..n).find(|&r| m[r][c] % z.p != 0)?;
        m.swap(c, r);
        inv.swap(c, r);
        let u = z.inv(m[c][c])?;
        for j in 0..n {
            m[c][j] = z.mul(m[c][j], u);
            inv[c][j] = z.mul(inv[c][j], u);
        }
        for r in 0..n {
            if r != c && m[r][c] != 0 {
                let f = m[r][c];
                for j in 0..n {
                    let s = z.mul(f, m[c][j]);
                    m[r][j] = z.sub(m[r][j], s);
                    let s = z.mul(f, inv[c][j]);
                    inv[r][j] = z.sub(inv[r][j], s);
                }
            }
        }
    }
    Some(inv)
}

/// One solution `y` of `A·y = b` over `Z/p^k`.
pub fn solve_mod(a: &[Vec<u64>], cols: usize, b: &[u64], z: &Zpk) -> Result<Vec<u64>, LinalgError> {
    let s = local_smith(a, cols, z);
    let ub = mat_vec_mod(&s.u, b, z);
    let mut w = vec![0u64; cols];
    for (i, &c) in ub.iter().enumerate() {
        if i < s.vals.len() {
            let pv = z.p.pow(s.vals[i]);
            if c % pv != 0 {
                return Err(LinalgError::Unsolvable);
            }
            w[i] = c / pv;
        } else if c != 0 {
            return Err(LinalgError::Unsolvable);
        }
    }
    Ok(mat_vec_mod(&s.v, &w, z))
}

/// Generators of the right kernel `{y : A·y = 0}`.
pub fn kernel_mod(a: &[Vec<u64>], cols: usize, z: &Zpk) -> Vec<Vec<u64>> {
    let s = local_smith(a, cols, z);
    let mut gens = Vec::new();
    for i in 0..cols {
        let mut w = vec![0u64; cols];
        if i < s.vals.len() {
            if s.vals[i] == 0 {
                continue;
            }
            w[i] = z.p.pow(z.k - s.vals[i]) % z.q;
        } else {
            w[i] = 1 % z.q;
        }
        let col = mat_vec_mod(&s.v, &w, z);
        if col.iter().any(|&x| x != 0) {
            gens.push(col);
        }
    }
    gens
}

/// Howell form of the row span of `rows` over `Z/p^k`.
///
/// Rows are sorted by pivot column, each pivot is a power of `p`, entries
/// above a pivot are reduced below it, and the span of the rows whose first
/// `j` entries vanish is spanned by the returned rows with pivot column
/// `>= j`. Two matrices have the same Howell form iff their row spans agree.
pub fn howell_form(rows: &[Vec<u64>], cols: usize, z: &Zpk) -> Vec<Vec<u64>> {
    let mut work: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x % z.q).collect::<Vec<u64>>())
        .filter(|r: &Vec<u64>| r.iter().any(|&x| x != 0))
        .collect();
    let mut out: Vec<(usize, u32, Vec<u64>)> = Vec::new();
    for col in 0..cols {
        let mut best: Option<(usize, u32)> = None;
        for (i, r) in work.iter().enumerate() {
            if r[col] != 0 {
                let vv = z.val(r[col]);
                if best.map_or(true, |b| vv < b.1) {
                    best = Some((i, vv));
                }
            }
        }
        let Some((bi, vv)) = best else { continue };
        let mut piv = work.swap_remove(bi);
        let pv = z.p.pow(vv);
        let ui = z.inv(piv[col] / pv).expect("unit");
        for x in piv.iter_mut() {
            *x = z.mul(*x, ui);
        }
        for r in work.iter_mut() {
            if r[col] != 0 {
                let f = r[col] / pv;
                for j in col..cols {
                    let s = z.mul(f, piv[j]);
                    r[j] = z.sub(r[j], s);
                }
            }
        }
        if vv > 0 {
            let m = z.p.pow(z.k - vv);
            let extra: Vec<u64> = piv.iter().map(|&x| z.mul(x, m)).collect();
            if extra.iter().any(|&x| x != 0) {
                work.push(extra);
            }
        }
        work.retain(|r| r.iter().any(|&x| x != 0));
        out.push((col, vv, piv));
    }
    for i in 0..out.len() {
        let (col, vv, piv) = (out[i].0, out[i].1, out[i].2.clone());
        let pv = z.p.pow(vv);
        for r in out.iter_mut().take(i) {
            let f = r.2[col] / pv;
            if f != 0 {
                for j in col..cols {
                    let s = z.mul(f, piv[j]);
                    r.2[j] = z.sub(r.2[j], s);
                }
            }
        }
    }
    out.into_iter().map(|t| t.2).collect()
}

/// Membership of a vector in the row span of a Howell-form matrix.
pub fn howell_contains(h: &[Vec<u64>], x: &[u64], z: &Zpk) -> bool {
    let mut r: Vec<u64> = x.iter().map(|&c| c % z.q).collect();
    for row in h {
        let col = row.iter().position(|&c| c != 0).expect("zero row in Howell form");
        if r[col] == 0 {
            continue;
        }
        if r[col] % row[col] != 0 {
            return false;
        }
        let f = r[col] / row[col];
        for j in col..r.len() {
            let s = z.mul(f, row[j]);
            r[j] = z.sub(r[j], s);
        }
    }
    r.iter().all(|&c| c == 0)
}

/// Isomorphism type of a finite abelian p-group: invariant factors
/// `p^{e_1} | … | p^{e_t}` stored as nondecreasing exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbGroupType {
    pub p: u64,
    pub exponents: Vec<u32>,
}

impl AbGroupType {
    pub fn trivial(p: u64) -> Self {
        AbGroupType {
            p,
            exponents: vec![],
        }
    }

    pub fn cyclic(p: u64, e: u32) -> Self {
        if e == 0 {
            return Self::trivial(p);
        }
        AbGroupType {
            p,
            exponents: vec![e],
        }
    }

    pub fn from_exponents(p: u64, mut e: Vec<u32>) -> Self {
        e.retain(|&x| x > 0);
        e.sort_unstable();
        AbGroupType { p, exponents: e }
    }

    pub fn log_order(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.log_order())
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn direct_sum(&self, other: &AbGroupType) -> AbGroupType {
        let mut e = self.exponents.clone();
        e.extend_from_slice(&other.exponents);
        Self::from_exponents(self.p, e)
    }

    /// Classify from `torsion_logs[j] = log_p |G[p^j]|`, `j = 0, 1, …`,
    /// ending once the whole group is reached.
    pub fn from_torsion_logs(p: u64, torsion_logs: &[u32]) -> Result<Self, LinalgError> {
        let mut ge = Vec::new();
        for j in 1..torsion_logs.len() {
            if torsion_logs[j] < torsion_logs[j - 1] {
                return Err(LinalgError::NotPGroup("torsion counts decrease".into()));
            }
            ge.push(torsion_logs[j] - torsion_logs[j - 1]);
        }
        let mut e = Vec::new();
        for j in 0..ge.len() {
            let next = ge.get(j + 1).copied().unwrap_or(0);
            if next > ge[j] {
                return Err(LinalgError::NotPGroup("torsion layers increase".into()));
            }
            for _ in 0..(ge[j] - next) {
                e.push(j as u32 + 1);
            }
        }
        Ok(Self::from_exponents(p, e))
    }
}

impl fmt::Display for AbGroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .exponents
            .iter()
            .map(|e| format!("Z/{}^{}", self.p, e))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn exact_log(p: u64, n: u64) -> Option<u32> {
    let mut x = n;
    let mut e = 0;
    while x > 1 {
        if x % p != 0 {
            return None;
        }
        x /= p;
        e += 1;
    }
    if x == 1 {
        Some(e)
    } else {
        None
    }
}

/// A finite abelian group whose elements are coded as `0..order()`.
pub trait FiniteGroup {
    fn order(&self) -> u64;
    fn zero(&self) -> u64;
    fn add(&self, a: u64, b: u64) -> u64;
    fn neg(&self, a: u64) -> u64;

    fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    fn times(&self, mut n: u64, x: u64) -> u64 {
        let mut acc = self.zero();
        let mut base = x;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            n >>= 1;
        }
        acc
    }
}

/// The presented group `⊕ Z/p^{e_i}` with mixed-radix codes.
#[derive(Debug, Clone)]
pub struct PresentedGroup {
    pub ty: AbGroupType,
    radices: Vec<u64>,
}

impl PresentedGroup {
    pub fn new(ty: AbGroupType) -> Self {
        let radices = ty.exponents.iter().map(|&e| ty.p.pow(e)).collect();
        PresentedGroup { ty, radices }
    }

    pub fn digits(&self, mut a: u64) -> Vec<u64> {
        self.radices
            .iter()
            .map(|&r| {
                let d = a % r;
                a /= r;
                d
            })
            .collect()
    }

    pub fn code(&self, d: &[u64]) -> u64 {
        let mut c = 0;
        for (i, &r) in self.radices.iter().enumerate().rev() {
            c = c * r + d[i];
        }
        c
    }
}

impl FiniteGroup for PresentedGroup {
    fn order(&self) -> u64 {
        self.radices.iter().product()
    }
    fn zero(&self) -> u64 {
        0
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        let (x, y) = (self.digits(a), self.digits(b));
        let s: Vec<u64> = x
            .iter()
            .zip(&y)
            .zip(&self.radices)
            .map(|((a, b), r)| (a + b) % r)
            .collect();
        self.code(&s)
    }
    fn neg(&self, a: u64) -> u64 {
        let x = self.digits(a);
        let s: Vec<u64> = x
            .iter()
            .zip(&self.radices)
            .map(|(a, r)| (r - a) % r)
            .collect();
        self.code(&s)
    }
}

/// An additive map between enumerated groups.
pub struct AbGroupMap<'a> {
    pub source: &'a dyn FiniteGroup,
    pub target: &'a dyn FiniteGroup,
    pub map: Box<dyn Fn(u64) -> u64 + 'a>,
}

/// Result of an additivity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdditivityCert {
    pub exhaustive: bool,
    pub pairs_checked: u64,
    pub failures: u64,
}

impl<'a> AbGroupMap<'a> {
    pub fn new(
        source: &'a dyn FiniteGroup,
        target: &'a dyn FiniteGroup,
        map: impl Fn(u64) -> u64 + 'a,
    ) -> Self {
        AbGroupMap {
            source,
            target,
            map: Box::new(map),
        }
    }

    pub fn apply(&self, x: u64) -> u64 {
        (self.map)(x)
    }

    /// Exhaustive when `|source|^2 <= pair_cap`, otherwise `samples`
    /// pseudo-random pairs from a fixed linear congruential walk.
    pub fn check_additive(&self, pair_cap: u64, samples: u64) -> AdditivityCert {
        let n = self.source.order();
        let mut failures = 0;
        let mut checked = 0;
        let mut check = |x: u64, y: u64| {
            let lhs = self.apply(self.source.add(x, y));
            let rhs = self.target.add(self.apply(x), self.apply(y));
            checked += 1;
            if lhs != rhs {
                failures += 1;
            }
        };
        if n.saturating_mul(n) <= pair_cap {
            for x in 0..n {
                for y in 0..n {
                    check(x, y);
                }
            }
            AdditivityCert {
                exhaustive: true,
                pairs_checked: checked,
                failures,
            }
        } else {
            let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
            for _ in 0..samples {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let x = (s >> 11) % n;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let y = (s >> 11) % n;
                check(x, y);
            }
            AdditivityCert {
                exhaustive: false,
                pairs_checked: checked,
                failures,
            }
        }
    }
}

/// Homology of a two-term complex `source → target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Homology {
    pub h0: AbGroupType,
    pub h1: AbGroupType,
    pub source_log: u32,
    pub target_log: u32,
}

impl Homology {
    /// `|H0|·|target| = |H1|·|source|`.
    pub fn euler_holds(&self) -> bool {
        self.h0.log_order() + self.target_log == self.h1.log_order() + self.source_log
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Greedy generating set of the subgroup whose members are flagged.
fn greedy_generators(g: &dyn FiniteGroup, member: &[bool]) -> Vec<u64> {
    let n = g.order() as usize;
    let mut span = vec![false; n];
    let z = g.zero() as usize;
    span[z] = true;
    let mut elems = vec![g.zero()];
    let mut gens = Vec::new();
    for h in 0..n {
        if !member[h] || span[h] {
            continue;
        }
        gens.push(h as u64);
        let mut layer = Vec::new();
        let mut m = h as u64;
        while m != g.zero() && !span[m as usize] {
            for &s in &elems {
                let t = g.add(s, m);
                if !span[t as usize] {
                    span[t as usize] = true;
                    layer.push(t);
                }
            }
            m = g.add(m, h as u64);
        }
        elems.extend(layer);
    }
    gens
}

/// Order statistics of flagged elements: `log_p` of the number of elements
/// killed by `p^j`, for `j = 0, 1, …`.
fn classify_members(p: u64, g: &dyn FiniteGroup, members: &[u64]) -> Result<AbGroupType, LinalgError> {
    let mut hist: Vec<u64> = Vec::new();
    for &x in members {
        let mut j = 0usize;
        let mut y = x;
        while y != g.zero() {
            y = g.times(p, y);
            j += 1;
            if j > 64 {
                return Err(LinalgError::NotPGroup("element of non-p-power order".into()));
            }
        }
        if hist.len() <= j {
            hist.resize(j + 1, 0);
        }
        hist[j] += 1;
    }
    logs_from_hist(p, &hist)
}

fn logs_from_hist(p: u64, hist: &[u64]) -> Result<AbGroupType, LinalgError> {
    let mut logs = Vec::new();
    let mut acc = 0;
    for &h in hist {
        acc += h;
        logs.push(exact_log(p, acc).ok_or_else(|| {
            LinalgError::NotPGroup(format!("{acc} elements of bounded order is not a power of {p}"))
        })?);
    }
    AbGroupType::from_torsion_logs(p, &logs)
}

/// Quotient `ambient / span(sub_gens)` classified by coset orders, with
/// cosets built by union-find. `ambient` flags a subgroup of `g`.
fn quotient_type(
    p: u64,
    g: &dyn FiniteGroup,
    ambient: Option<&[bool]>,
    sub_gens: &[u64],
) -> Result<AbGroupType, LinalgError> {
    let n = g.order() as usize;
    let mut uf = UnionFind::new(n);
    for y in 0..n {
        if ambient.map_or(true, |a| a[y]) {
            for &h in sub_gens {
                uf.union(y as u32, g.add(y as u64, h) as u32);
            }
        }
    }
    let zero_root = uf.find(g.zero() as u32);
    let mut hist: Vec<u64> = Vec::new();
    for y in 0..n {
        if !ambient.map_or(true, |a| a[y]) {
            continue;
        }
        if uf.find(y as u32) != y as u32 {
            continue;
        }
        let mut j = 0usize;
        let mut t = y as u64;
        while uf.find(t as u32) != zero_root {
            t = g.times(p, t);
            j += 1;
            if j > 64 {
                return Err(LinalgError::NotPGroup("coset of non-p-power order".into()));
            }
        }
        if hist.len() <= j {
            hist.resize(j + 1, 0);
        }
        hist[j] += 1;
    }
    logs_from_hist(p, &hist)
}

/// Kernel and cokernel of an additive map by full enumeration.
pub fn complex_homology(p: u64, f: &AbGroupMap, cap: u64) -> Result<Homology, LinalgError> {
    let (ns, nt) = (f.source.order(), f.target.order());
    if ns > cap || nt > cap {
        return Err(LinalgError::SizeCap {
            source_size: ns,
            target_size: nt,
            cap,
        });
    }
    let source_log = exact_log(p, ns).ok_or_else(|| LinalgError::NotPGroup("source order".into()))?;
    let target_log = exact_log(p, nt).ok_or_else(|| LinalgError::NotPGroup("target order".into()))?;
    let mut kernel = Vec::new();
    let mut image = vec![false; nt as usize];
    for x in 0..ns {
        let y = f.apply(x);
        if y == f.target.zero() {
            kernel.push(x);
        }
        image[y as usize] = true;
    }
    let h0 = classify_members(p, f.source, &kernel)?;
    let gens = greedy_generators(f.target, &image);
    let h1 = quotient_type(p, f.target, None, &gens)?;
    Ok(Homology {
        h0,
        h1,
        source_log,
        target_log,
    })
}

/// Homology in the middle of `X →f Y →g Z`.
pub fn middle_homology(
    p: u64,
    f: &AbGroupMap,
    g: &AbGroupMap,
    cap: u64,
) -> Result<AbGroupType, LinalgError> {
    let (nx, ny) = (f.source.order(), g.source.order());
    if nx > cap || ny > cap {
        return Err(LinalgError::SizeCap {
            source_size: nx,
            target_size: ny,
            cap,
        });
    }
    let mut ker = vec![false; ny as usize];
    for y in 0..ny {
        ker[y as usize] = g.apply(y) == g.target.zero();
    }
    let mut image = vec![false; ny as usize];
    for x in 0..nx {
        let y = f.apply(x);
        if !ker[y as usize] {
            return Err(LinalgError::NotComplex(format!("g(f({x})) != 0")));
        }
        image[y as usize] = true;
    }
    let gens = greedy_generators(g.source, &image);
    quotient_type(p, g.source, Some(&ker), &gens)
}

/// Type of the subgroup formed by `members` (which must be closed).
pub fn subgroup_type(p: u64, g: &dyn FiniteGroup, members: &[u64]) -> Result<AbGroupType, LinalgError> {
    classify_members(p, g, members)
}

/// `ambient / (subgroup generated by the flagged elements)`; `ambient`
/// defaults to the whole group.
pub fn subquotient_type(
    p: u64,
    g: &dyn FiniteGroup,
    ambient: Option<&[bool]>,
    sub: &[bool],
) -> Result<AbGroupType, LinalgError> {
    let gens = greedy_generators(g, sub);
    quotient_type(p, g, ambient, &gens)
}

/// Classify an entire enumerated group.
pub fn classify_group(p: u64, g: &dyn FiniteGroup) -> Result<AbGroupType, LinalgError> {
    let all: Vec<u64> = (0..g.order()).collect();
    classify_members(p, g, &all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn smith_examples() {
        let id = IntMatrix::from_i64(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(smith_normal_form(&id).diag, vec![bi(1), bi(1)]);
        let m = IntMatrix::from_i64(&[vec![2, 4], vec![6, 8]]);
        let s = smith_normal_form(&m);
        assert_eq!(s.diag, vec![bi(2), bi(4)]);
        assert!(s.verify(&m));
        let z = IntMatrix::from_i64(&[vec![0, 0], vec![0, 0]]);
        assert!(smith_normal_form(&z).diag.is_empty());
    }

    #[test]
    fn howell_examples() {
        let z4 = Zpk::new(2, 2);
        assert_eq!(howell_form(&[vec![2]], 1, &z4), vec![vec![2]]);
        assert_eq!(
            howell_form(&[vec![1, 2], vec![0, 2]], 2, &z4),
            vec![vec![1, 0], vec![0, 2]]
        );
        let z9 = Zpk::new(3, 2);
        assert_eq!(howell_form(&[vec![3]], 1, &z9), vec![vec![3]]);
    }

    #[test]
    fn howell_property_row() {
        // span of (2,1) over Z/4 contains 2·(2,1) = (0,2)
        let z4 = Zpk::new(2, 2);
        let h = howell_form(&[vec![2, 1]], 2, &z4);
        assert_eq!(h, vec![vec![2, 1], vec![0, 2]]);
    }

    #[test]
    fn homology_examples() {
        for p in [2u64, 3, 5] {
            let g = PresentedGroup::new(AbGroupType::cyclic(p, 1));
            let zero = AbGroupMap::new(&g, &g, |_| 0);
            let h = complex_homology(p, &zero, DEFAULT_SIZE_CAP).unwrap();
            assert_eq!(h.h0, AbGroupType::cyclic(p, 1));
            assert_eq!(h.h1, AbGroupType::cyclic(p, 1));
            let id = AbGroupMap::new(&g, &g, |x| x);
            let h = complex_homology(p, &id, DEFAULT_SIZE_CAP).unwrap();
            assert!(h.h0.is_trivial() && h.h1.is_trivial());
            let g2 = PresentedGroup::new(AbGroupType::cyclic(p, 2));
            let mp = AbGroupMap::new(&g2, &g2, |x| (x * p) % (p * p));
            let h = complex_homology(p, &mp, DEFAULT_SIZE_CAP).unwrap();
            assert_eq!(h.h0, AbGroupType::cyclic(p, 1));
            assert_eq!(h.h1, AbGroupType::cyclic(p, 1));
            assert!(h.euler_holds());
        }
    }

    #[test]
    fn size_cap_is_structured() {
        let g = PresentedGroup::new(AbGroupType::cyclic(2, 5));
        let m = AbGroupMap::new(&g, &g, |x| x);
        match complex_homology(2, &m, 16) {
            Err(LinalgError::SizeCap { source_size, cap, .. }) => {
                assert_eq!(source_size, 32);
                assert_eq!(cap, 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_and_kernel() {
        let z = Zpk::new(2, 3);
        let a = vec![vec![2, 4], vec![0, 4]];
        let y = solve_mod(&a, 2, &[6, 4], &z).unwrap();
        assert_eq!(mat_vec_mod(&a, &y, &z), vec![6, 4]);
        assert!(solve_mod(&a, 2, &[1, 0], &z).is_err());
        for g in kernel_mod(&a, 2, &z) {
            assert!(mat_vec_mod(&a, &g, &z).iter().all(|&x| x == 0));
        }
    }
}
