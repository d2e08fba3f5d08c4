//! Frames, windows in normal representation, and their morphisms.
//!
//! Conventions used throughout:
//!
//! * matrices act on column vectors, rows index the target basis;
//! * the first `r0` basis vectors of a window span `L_0`, the last `r1` span `L_1`;
//! * a morphism `(r0, r1, Ψ) → (r0', r1', Ψ')` has blocks
//!   `a: r0'×r0` over `A_0`, `b: r0'×r1` over `A_1`, `c: r1'×r0` and `e: r1'×r1` over `A_0`;
//! * it is a morphism when `X·Ψ = Ψ'·Y` with
//!   `X = [[a, τ(b)], [c, e]]` and `Y = [[σ_0(a), σ_1(b)], [d·σ_0(c), σ_0(e)]]`.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ring_base::{Coords, FpkAlgebra, RingError};
use crate::sheared_witt::ShearedError;
use crate::witt::WittError;
use crate::zmod_linalg::{AbGroupMap, FiniteGroup, Homology, LinalgError};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not invertible")]
    Singular,
    #[error("element is not a unit")]
    NotUnit,
    #[error("not a morphism of windows")]
    NotMorphism,
    #[error("frame homomorphism check failed: {0}")]
    BadHom(String),
    #[error("not a direct summand lift of the Hodge filtration: {0}")]
    NotSummandLift(String),
    #[error("element outside the leveled ideal: {0}")]
    OutsideIdeal(String),
    #[error("iteration did not stabilise after {0} steps")]
    NoConvergence(usize),
    #[error("pd structure invalid: {0}")]
    Pd(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad encoding: {0}")]
    Decode(String),
    #[error("carrier too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Witt(#[from] WittError),
    #[error(transparent)]
    Sheared(#[from] ShearedError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type FrameResult<T> = Result<T, FrameError>;

/// Coefficient interface of a frame `(A_0, A_1, τ, σ_0, σ_1, d)`.
pub trait Frame {
    type A0: Clone + PartialEq + fmt::Debug;
    type A1: Clone + PartialEq + fmt::Debug;

    /// Stable identifier, also used in the JSON window format.
    fn id(&self) -> String;
    fn p(&self) -> u64;
    /// The base ring `A_0/τA_1`.
    fn base_ring(&self) -> &Arc<FpkAlgebra>;
    /// Projection `A_0 → A_0/τA_1`.
    fn to_base(&self, x: &Self::A0) -> Coords;

    fn zero0(&self) -> Self::A0;
    fn one0(&self) -> Self::A0;
    fn from_int0(&self, c: i128) -> Self::A0;
    fn add0(&self, x: &Self::A0, y: &Self::A0) -> FrameResult<Self::A0>;
    fn neg0(&self, x: &Self::A0) -> FrameResult<Self::A0>;
    fn mul0(&self, x: &Self::A0, y: &Self::A0) -> FrameResult<Self::A0>;
    fn sub0(&self, x: &Self::A0, y: &Self::A0) -> FrameResult<Self::A0> {
        self.add0(x, &self.neg0(y)?)
    }
    fn is_zero0(&self, x: &Self::A0) -> bool {
        *x == self.zero0()
    }
    /// An inverse modulo a nilpotent ideal, `None` for non-units.
    fn approx_inv0(&self, x: &Self::A0) -> Option<Self::A0>;
    /// Whether `x ∈ p·A_0`.
    fn divisible_by_p0(&self, x: &Self::A0) -> bool;

    fn zero1(&self) -> Self::A1;
    fn add1(&self, x: &Self::A1, y: &Self::A1) -> FrameResult<Self::A1>;
    fn neg1(&self, x: &Self::A1) -> FrameResult<Self::A1>;
    fn sub1(&self, x: &Self::A1, y: &Self::A1) -> FrameResult<Self::A1> {
        self.add1(x, &self.neg1(y)?)
    }
    /// Module structure `A_0 × A_1 → A_1`.
    fn act(&self, x: &Self::A0, y: &Self::A1) -> FrameResult<Self::A1>;

    fn tau(&self, y: &Self::A1) -> FrameResult<Self::A0>;
    fn sigma0(&self, x: &Self::A0) -> FrameResult<Self::A0>;
    fn sigma1(&self, y: &Self::A1) -> FrameResult<Self::A0>;
    fn d(&self) -> Self::A0;

    fn random0(&self, rng: &mut dyn RngCore) -> Self::A0;
    fn random1(&self, rng: &mut dyn RngCore) -> Self::A1;

    fn to_json0(&self, x: &Self::A0) -> Value;
    fn from_json0(&self, v: &Value) -> FrameResult<Self::A0>;
    fn to_json1(&self, y: &Self::A1) -> Value;
    fn from_json1(&self, v: &Value) -> FrameResult<Self::A1>;

    /// Exact inverse: approximate inverse corrected by a geometric series.
    fn inv0(&self, x: &Self::A0) -> FrameResult<Self::A0> {
        let y0 = self.approx_inv0(x).ok_or(FrameError::NotUnit)?;
        let z = self.sub0(&self.one0(), &self.mul0(x, &y0)?)?;
        let mut acc = self.one0();
        let mut pw = z.clone();
        let mut steps = 0;
        while !self.is_zero0(&pw) {
            acc = self.add0(&acc, &pw)?;
            pw = self.mul0(&pw, &z)?;
            steps += 1;
            if steps > 1 << 14 {
                return Err(FrameError::NotUnit);
            }
        }
        self.mul0(&y0, &acc)
    }
}

/// Elements of a finite frame coded as integers `0..size`.
pub trait FiniteFrame: Frame {
    fn size0(&self) -> Option<u64>;
    fn size1(&self) -> Option<u64>;
    fn encode0(&self, x: &Self::A0) -> u64;
    fn decode0(&self, c: u64) -> Self::A0;
    fn encode1(&self, y: &Self::A1) -> u64;
    fn decode1(&self, c: u64) -> Self::A1;
}

/// Result of a sampled axiom check.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub frame: String,
    pub samples: usize,
    pub tau_sigma_failures: usize,
    pub frobenius_failures: usize,
    pub linearity_failures: usize,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.tau_sigma_failures == 0 && self.frobenius_failures == 0 && self.linearity_failures == 0
    }
}

/// `σ_0τ = d·σ_1`, `σ_0 ≡ x^p mod p`, `τ` linear and `σ_1` `σ_0`-linear.
pub fn check_frame_axioms<F: Frame>(f: &F, samples: usize, rng: &mut dyn RngCore) -> FrameResult<AxiomReport> {
    let mut rep = AxiomReport {
        frame: f.id(),
        samples,
        ..Default::default()
    };
    let d = f.d();
    for _ in 0..samples {
        let y = f.random1(rng);
        let x = f.random0(rng);
        let lhs = f.sigma0(&f.tau(&y)?)?;
        let rhs = f.mul0(&d, &f.sigma1(&y)?)?;
        if lhs != rhs {
            rep.tau_sigma_failures += 1;
        }
        let mut xp = f.one0();
        for _ in 0..f.p() {
            xp = f.mul0(&xp, &x)?;
        }
        if !f.divisible_by_p0(&f.sub0(&f.sigma0(&x)?, &xp)?) {
            rep.frobenius_failures += 1;
        }
        let xy = f.act(&x, &y)?;
        let tau_ok = f.tau(&xy)? == f.mul0(&x, &f.tau(&y)?)?;
        let sig_ok = f.sigma1(&xy)? == f.mul0(&f.sigma0(&x)?, &f.sigma1(&y)?)?;
        if !(tau_ok && sig_ok) {
            rep.linearity_failures += 1;
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// matrices

/// Row-major matrix with explicit shape, so empty blocks keep their size.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}

impl<T: Clone> Mat<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn try_from_fn<E>(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<T, E>,
    ) -> Result<Self, E> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j)?);
            }
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> FrameResult<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            if r.len() != cols {
                return Err(FrameError::Shape(format!("row of length {} in {n}x{cols}", r.len())));
            }
            data.extend(r);
        }
        Ok(Mat { rows: n, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn map<U: Clone>(&self, mut f: impl FnMut(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    pub fn try_map<U: Clone, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<Mat<U>, E> {
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect::<Result<_, _>>()?,
        })
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn from_blocks(tl: &Self, tr: &Self, bl: &Self, br: &Self) -> FrameResult<Self> {
        if tl.rows != tr.rows || bl.rows != br.rows || tl.cols != bl.cols || tr.cols != br.cols {
            return Err(FrameError::Shape("incompatible blocks".into()));
        }
        let (r, c) = (tl.rows, tl.cols);
        Ok(Mat::from_fn(r + bl.rows, c + tr.cols, |i, j| match (i < r, j < c) {
            (true, true) => tl.get(i, j).clone(),
            (true, false) => tr.get(i, j - c).clone(),
            (false, true) => bl.get(i - r, j).clone(),
            (false, false) => br.get(i - r, j - c).clone(),
        }))
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn rows_vec(&self) -> Vec<Vec<T>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }
}

pub fn mat_zero<F: Frame>(f: &F, rows: usize, cols: usize) -> Mat<F::A0> {
    Mat::from_fn(rows, cols, |_, _| f.zero0())
}

pub fn mat_zero1<F: Frame>(f: &F, rows: usize, cols: usize) -> Mat<F::A1> {
    Mat::from_fn(rows, cols, |_, _| f.zero1())
}

pub fn mat_identity<F: Frame>(f: &F, n: usize) -> Mat<F::A0> {
    Mat::from_fn(n, n, |i, j| if i == j { f.one0() } else { f.zero0() })
}

pub fn mat_from_int<F: Frame>(f: &F, m: &[Vec<i64>]) -> FrameResult<Mat<F::A0>> {
    let cols = m.first().map_or(0, |r| r.len());
    let rows = m
        .iter()
        .map(|r| r.iter().map(|&c| f.from_int0(c as i128)).collect())
        .collect();
    Mat::from_rows(rows, cols)
}

pub fn mat_add<F: Frame>(f: &F, a: &Mat<F::A0>, b: &Mat<F::A0>) -> FrameResult<Mat<F::A0>> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(FrameError::Shape(format!("{}x{} + {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    Mat::try_from_fn(a.rows, a.cols, |i, j| f.add0(a.get(i, j), b.get(i, j)))
}

pub fn mat_sub<F: Frame>(f: &F, a: &Mat<F::A0>, b: &Mat<F::A0>) -> FrameResult<Mat<F::A0>> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(FrameError::Shape(format!("{}x{} - {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    Mat::try_from_fn(a.rows, a.cols, |i, j| f.sub0(a.get(i, j), b.get(i, j)))
}

pub fn mat_add1<F: Frame>(f: &F, a: &Mat<F::A1>, b: &Mat<F::A1>) -> FrameResult<Mat<F::A1>> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(FrameError::Shape(format!("{}x{} + {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    Mat::try_from_fn(a.rows, a.cols, |i, j| f.add1(a.get(i, j), b.get(i, j)))
}

pub fn mat_neg<F: Frame>(f: &F, a: &Mat<F::A0>) -> FrameResult<Mat<F::A0>> {
    a.try_map(|x| f.neg0(x))
}

pub fn mat_mul<F: Frame>(f: &F, a: &Mat<F::A0>, b: &Mat<F::A0>) -> FrameResult<Mat<F::A0>> {
    if a.cols != b.rows {
        return Err(FrameError::Shape(format!("{}x{} * {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    Mat::try_from_fn(a.rows, b.cols, |i, j| {
        let mut acc = f.zero0();
        for k in 0..a.cols {
            let (x, y) = (a.get(i, k), b.get(k, j));
            if f.is_zero0(x) || f.is_zero0(y) {
                continue;
            }
            acc = f.add0(&acc, &f.mul0(x, y)?)?;
        }
        Ok(acc)
    })
}

/// `A_0`-matrix times `A_1`-matrix, via the module action.
pub fn mat_act<F: Frame>(f: &F, a: &Mat<F::A0>, b: &Mat<F::A1>) -> FrameResult<Mat<F::A1>> {
    if a.cols != b.rows {
        return Err(FrameError::Shape(format!("{}x{} . {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    Mat::try_from_fn(a.rows, b.cols, |i, j| {
        let mut acc = f.zero1();
        for k in 0..a.cols {
            if f.is_zero0(a.get(i, k)) {
                continue;
            }
            acc = f.add1(&acc, &f.act(a.get(i, k), b.get(k, j))?)?;
        }
        Ok(acc)
    })
}

/// `A_1`-matrix times `A_0`-matrix on the right.
pub fn mat_act_right<F: Frame>(f: &F, b: &Mat<F::A1>, e: &Mat<F::A0>) -> FrameResult<Mat<F::A1>> {
    if b.cols != e.rows {
        return Err(FrameError::Shape(format!("{}x{} . {}x{}", b.rows, b.cols, e.rows, e.cols)));
    }
    Mat::try_from_fn(b.rows, e.cols, |i, j| {
        let mut acc = f.zero1();
        for k in 0..b.cols {
            if f.is_zero0(e.get(k, j)) {
                continue;
            }
            acc = f.add1(&acc, &f.act(e.get(k, j), b.get(i, k))?)?;
        }
        Ok(acc)
    })
}

pub fn mat_is_zero<F: Frame>(f: &F, a: &Mat<F::A0>) -> bool {
    a.data.iter().all(|x| f.is_zero0(x))
}

/// Gauss-Jordan elimination with unit pivots; exact over local frames.
pub fn mat_inverse<F: Frame>(f: &F, m: &Mat<F::A0>) -> FrameResult<Mat<F::A0>> {
    if m.rows != m.cols {
        return Err(FrameError::Shape(format!("inverse of {}x{}", m.rows, m.cols)));
    }
    let n = m.rows;
    let mut a = m.rows_vec();
    let mut inv = mat_identity(f, n).rows_vec();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| f.approx_inv0(&a[r][col]).is_some())
            .ok_or(FrameError::Singular)?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let s = f.inv0(&a[col][col])?;
        for j in 0..n {
            a[col][j] = f.mul0(&s, &a[col][j])?;
            inv[col][j] = f.mul0(&s, &inv[col][j])?;
        }
        for r in 0..n {
            if r == col || f.is_zero0(&a[r][col]) {
                continue;
            }
            let t = a[r][col].clone();
            for j in 0..n {
                let u = f.mul0(&t, &a[col][j])?;
                a[r][j] = f.sub0(&a[r][j], &u)?;
                let v = f.mul0(&t, &inv[col][j])?;
                inv[r][j] = f.sub0(&inv[r][j], &v)?;
            }
        }
    }
    Mat::from_rows(inv, n)
}

// ---------------------------------------------------------------------------
// windows

/// A window `(L_0, L_1, Ψ)` in normal representation.
pub struct Window<F: Frame> {
    pub frame: Arc<F>,
    pub r0: usize,
    pub r1: usize,
    pub psi: Mat<F::A0>,
    pub psi_inv: Mat<F::A0>,
}

impl<F: Frame> Clone for Window<F> {
    fn clone(&self) -> Self {
        Window {
            frame: self.frame.clone(),
            r0: self.r0,
            r1: self.r1,
            psi: self.psi.clone(),
            psi_inv: self.psi_inv.clone(),
        }
    }
}

impl<F: Frame> fmt::Debug for Window<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Window")
            .field("frame", &self.frame.id())
            .field("r0", &self.r0)
            .field("r1", &self.r1)
            .field("psi", &self.psi)
            .finish()
    }
}

/// Serialized window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowJson {
    pub frame_id: String,
    pub r0: usize,
    pub r1: usize,
    pub psi: Vec<Vec<Value>>,
}

impl<F: Frame> Window<F> {
    pub fn new(frame: &Arc<F>, r0: usize, r1: usize, psi: Mat<F::A0>) -> FrameResult<Self> {
        let h = r0 + r1;
        if psi.rows != h || psi.cols != h {
            return Err(FrameError::Shape(format!("Psi is {}x{}, height {h}", psi.rows, psi.cols)));
        }
        let psi_inv = mat_inverse(frame.as_ref(), &psi)?;
        Ok(Window {
            frame: frame.clone(),
            r0,
            r1,
            psi,
            psi_inv,
        })
    }

    pub fn from_int(frame: &Arc<F>, r0: usize, r1: usize, psi: &[Vec<i64>]) -> FrameResult<Self> {
        if psi.len() != r0 + r1 {
            return Err(FrameError::Shape(format!("{} rows for height {}", psi.len(), r0 + r1)));
        }
        let m = if psi.is_empty() {
            Mat::from_fn(0, 0, |_, _| frame.zero0())
        } else {
            mat_from_int(frame.as_ref(), psi)?
        };
        Window::new(frame, r0, r1, m)
    }

    /// `A` itself: `r0 = 1`, `r1 = 0`, `Ψ = (1)`.
    pub fn unit(frame: &Arc<F>) -> Self {
        Window::from_int(frame, 1, 0, &[vec![1]]).expect("unit window")
    }

    /// The twist `A(1)`: `r0 = 0`, `r1 = 1`, `Ψ = (1)`.
    pub fn twist(frame: &Arc<F>) -> Self {
        Window::from_int(frame, 0, 1, &[vec![1]]).expect("twist window")
    }

    pub fn height(&self) -> usize {
        self.r0 + self.r1
    }

    pub fn dimension(&self) -> usize {
        self.r0
    }

    pub fn check_inverse(&self) -> FrameResult<bool> {
        let f = self.frame.as_ref();
        let id = mat_identity(f, self.height());
        Ok(mat_mul(f, &self.psi, &self.psi_inv)? == id && mat_mul(f, &self.psi_inv, &self.psi)? == id)
    }

    pub fn to_json(&self) -> WindowJson {
        let f = self.frame.as_ref();
        WindowJson {
            frame_id: f.id(),
            r0: self.r0,
            r1: self.r1,
            psi: self.psi.map(|x| f.to_json0(x)).rows_vec(),
        }
    }

    pub fn from_json(frame: &Arc<F>, j: &WindowJson) -> FrameResult<Self> {
        if j.frame_id != frame.id() {
            return Err(FrameError::Decode(format!("window over {}, expected {}", j.frame_id, frame.id())));
        }
        let h = j.r0 + j.r1;
        let rows = j
            .psi
            .iter()
            .map(|r| r.iter().map(|v| frame.from_json0(v)).collect::<FrameResult<Vec<_>>>())
            .collect::<FrameResult<Vec<_>>>()?;
        if rows.len() != h {
            return Err(FrameError::Shape(format!("{} rows for height {h}", rows.len())));
        }
        Window::new(frame, j.r0, j.r1, Mat::from_rows(rows, h)?)
    }
}

/// A morphism of windows given by its four blocks.
pub struct WindowMorphism<F: Frame> {
    pub a: Mat<F::A0>,
    pub b: Mat<F::A1>,
    pub c: Mat<F::A0>,
    pub e: Mat<F::A0>,
}

impl<F: Frame> Clone for WindowMorphism<F> {
    fn clone(&self) -> Self {
        WindowMorphism {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            e: self.e.clone(),
        }
    }
}

impl<F: Frame> PartialEq for WindowMorphism<F> {
    fn eq(&self, o: &Self) -> bool {
        self.a == o.a && self.b == o.b && self.c == o.c && self.e == o.e
    }
}

impl<F: Frame> fmt::Debug for WindowMorphism<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WindowMorphism")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("e", &self.e)
            .finish()
    }
}

impl<F: Frame> WindowMorphism<F> {
    pub fn zero(f: &F, src: &Window<F>, dst: &Window<F>) -> Self {
        WindowMorphism {
            a: mat_zero(f, dst.r0, src.r0),
            b: mat_zero1(f, dst.r0, src.r1),
            c: mat_zero(f, dst.r1, src.r0),
            e: mat_zero(f, dst.r1, src.r1),
        }
    }

    pub fn identity(m: &Window<F>) -> Self {
        let f = m.frame.as_ref();
        WindowMorphism {
            a: mat_identity(f, m.r0),
            b: mat_zero1(f, m.r0, m.r1),
            c: mat_zero(f, m.r1, m.r0),
            e: mat_identity(f, m.r1),
        }
    }

    fn check_shape(&self, src: &Window<F>, dst: &Window<F>) -> FrameResult<()> {
        let ok = (self.a.rows, self.a.cols) == (dst.r0, src.r0)
            && (self.b.rows, self.b.cols) == (dst.r0, src.r1)
            && (self.c.rows, self.c.cols) == (dst.r1, src.r0)
            && (self.e.rows, self.e.cols) == (dst.r1, src.r1);
        if ok {
            Ok(())
        } else {
            Err(FrameError::Shape(format!(
                "blocks a{}x{} b{}x{} c{}x{} e{}x{} for ({},{}) -> ({},{})",
                self.a.rows,
                self.a.cols,
                self.b.rows,
                self.b.cols,
                self.c.rows,
                self.c.cols,
                self.e.rows,
                self.e.cols,
                src.r0,
                src.r1,
                dst.r0,
                dst.r1
            )))
        }
    }

    /// `X = [[a, τ(b)], [c, e]]`.
    pub fn x_matrix(&self, f: &F) -> FrameResult<Mat<F::A0>> {
        let tb = self.b.try_map(|y| f.tau(y))?;
        Mat::from_blocks(&self.a, &tb, &self.c, &self.e)
    }

    /// `Y = [[σ_0(a), σ_1(b)], [d·σ_0(c), σ_0(e)]]`.
    pub fn y_matrix(&self, f: &F) -> FrameResult<Mat<F::A0>> {
        let d = f.d();
        let sa = self.a.try_map(|x| f.sigma0(x))?;
        let sb = self.b.try_map(|y| f.sigma1(y))?;
        let sc = self.c.try_map(|x| f.mul0(&d, &f.sigma0(x)?))?;
        let se = self.e.try_map(|x| f.sigma0(x))?;
        Mat::from_blocks(&sa, &sb, &sc, &se)
    }

    pub fn add(&self, f: &F, o: &Self) -> FrameResult<Self> {
        Ok(WindowMorphism {
            a: mat_add(f, &self.a, &o.a)?,
            b: mat_add1(f, &self.b, &o.b)?,
            c: mat_add(f, &self.c, &o.c)?,
            e: mat_add(f, &self.e, &o.e)?,
        })
    }
}

/// Outcome of [`is_morphism`]; `residual = XΨ - Ψ'Y`.
pub struct MorphismCheck<F: Frame> {
    pub holds: bool,
    pub residual: Mat<F::A0>,
}

pub fn is_morphism<F: Frame>(
    src: &Window<F>,
    dst: &Window<F>,
    m: &WindowMorphism<F>,
) -> FrameResult<MorphismCheck<F>> {
    m.check_shape(src, dst)?;
    let f = src.frame.as_ref();
    let lhs = mat_mul(f, &m.x_matrix(f)?, &src.psi)?;
    let rhs = mat_mul(f, &dst.psi, &m.y_matrix(f)?)?;
    let residual = mat_sub(f, &lhs, &rhs)?;
    Ok(MorphismCheck {
        holds: mat_is_zero(f, &residual),
        residual,
    })
}

/// `g ∘ f`; the block formulas are those of `X(g)·X(f)`.
pub fn compose<F: Frame>(f: &F, g: &WindowMorphism<F>, h: &WindowMorphism<F>) -> FrameResult<WindowMorphism<F>> {
    let tb_g = g.b.try_map(|y| f.tau(y))?;
    let a = mat_add(f, &mat_mul(f, &g.a, &h.a)?, &mat_mul(f, &tb_g, &h.c)?)?;
    let b = mat_add1(f, &mat_act(f, &g.a, &h.b)?, &mat_act_right(f, &g.b, &h.e)?)?;
    let c = mat_add(f, &mat_mul(f, &g.c, &h.a)?, &mat_mul(f, &g.e, &h.c)?)?;
    let tb_h = h.b.try_map(|y| f.tau(y))?;
    let e = mat_add(f, &mat_mul(f, &g.c, &tb_h)?, &mat_mul(f, &g.e, &h.e)?)?;
    Ok(WindowMorphism { a, b, c, e })
}

/// `Ψ' = X(f)·Ψ·Y(f)^{-1}`, the window that makes `f` a morphism `M → M'`.
pub fn transport<F: Frame>(m: &Window<F>, f: &WindowMorphism<F>) -> FrameResult<Window<F>> {
    f.check_shape(m, m)?;
    let fr = m.frame.as_ref();
    let y_inv = mat_inverse(fr, &f.y_matrix(fr)?)?;
    let psi = mat_mul(fr, &mat_mul(fr, &f.x_matrix(fr)?, &m.psi)?, &y_inv)?;
    Window::new(&m.frame, m.r0, m.r1, psi)
}

/// Random endomorphism data of shape `(r0, r1) → (r0, r1)` with `a`, `e`
/// invertible, so that `X` and `Y` are invertible.
pub fn random_invertible_morphism<F: Frame>(
    f: &F,
    r0: usize,
    r1: usize,
    rng: &mut dyn RngCore,
) -> FrameResult<WindowMorphism<F>> {
    let invertible = |n: usize, rng: &mut dyn RngCore| -> FrameResult<Mat<F::A0>> {
        for _ in 0..256 {
            let m = Mat::from_fn(n, n, |_, _| f.random0(rng));
            if mat_inverse(f, &m).is_ok() {
                return Ok(m);
            }
        }
        Err(FrameError::Singular)
    };
    let a = invertible(r0, rng)?;
    let e = invertible(r1, rng)?;
    Ok(WindowMorphism {
        a,
        b: Mat::from_fn(r0, r1, |_, _| f.random1(rng)),
        c: Mat::from_fn(r1, r0, |_, _| f.random0(rng)),
        e,
    })
}

/// Dual window: `r0' = r1`, `r1' = r0`, `Ψ^t = [[Q11, Q10], [Q01, Q00]]`
/// with `Q = (Ψ^{-1})ᵀ` split along `(r0, r1)`.
pub fn dual_window<F: Frame>(m: &Window<F>) -> FrameResult<Window<F>> {
    let (r0, r1, h) = (m.r0, m.r1, m.height());
    let q = m.psi_inv.transpose();
    let q00 = q.block(0, r0, 0, r0);
    let q01 = q.block(0, r0, r0, h);
    let q10 = q.block(r0, h, 0, r0);
    let q11 = q.block(r0, h, r0, h);
    let psi = Mat::from_blocks(&q11, &q10, &q01, &q00)?;
    let pi = m.psi.transpose();
    let p00 = pi.block(0, r0, 0, r0);
    let p01 = pi.block(0, r0, r0, h);
    let p10 = pi.block(r0, h, 0, r0);
    let p11 = pi.block(r0, h, r0, h);
    let psi_inv = Mat::from_blocks(&p11, &p10, &p01, &p00)?;
    Ok(Window {
        frame: m.frame.clone(),
        r0: r1,
        r1: r0,
        psi,
        psi_inv,
    })
}

// ---------------------------------------------------------------------------
// frame homomorphisms and base change

/// A frame homomorphism `(g, u)`: `g_0(d_A) = u·d_B`, `g_0σ_0 = σ_0g_0`,
/// `u·g_0σ_1 = σ_1g_1`, `g_0τ = τg_1`.
pub trait FrameHom {
    type Src: Frame;
    type Dst: Frame;
    fn src(&self) -> &Arc<Self::Src>;
    fn dst(&self) -> &Arc<Self::Dst>;
    fn g0(&self, x: &<Self::Src as Frame>::A0) -> FrameResult<<Self::Dst as Frame>::A0>;
    fn g1(&self, y: &<Self::Src as Frame>::A1) -> FrameResult<<Self::Dst as Frame>::A1>;
    fn unit(&self) -> <Self::Dst as Frame>::A0;
}

/// A set-theoretic section of a surjective frame homomorphism.
pub trait FrameSection: FrameHom {
    fn lift0(&self, y: &<Self::Dst as Frame>::A0) -> FrameResult<<Self::Src as Frame>::A0>;
    fn lift1(&self, y: &<Self::Dst as Frame>::A1) -> FrameResult<<Self::Src as Frame>::A1>;
}

/// Count of sampled relation failures for a frame homomorphism.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomReport {
    pub samples: usize,
    pub d_relation: bool,
    pub ring_failures: usize,
    pub sigma0_failures: usize,
    pub sigma1_failures: usize,
    pub tau_failures: usize,
}

impl HomReport {
    pub fn passed(&self) -> bool {
        self.d_relation
            && self.ring_failures == 0
            && self.sigma0_failures == 0
            && self.sigma1_failures == 0
            && self.tau_failures == 0
    }
}

pub fn check_frame_hom<H: FrameHom>(h: &H, samples: usize, rng: &mut dyn RngCore) -> FrameResult<HomReport> {
    let (a, b) = (h.src().as_ref(), h.dst().as_ref());
    let u = h.unit();
    let mut rep = HomReport {
        samples,
        d_relation: h.g0(&a.d())? == b.mul0(&u, &b.d())?,
        ..Default::default()
    };
    for _ in 0..samples {
        let x = a.random0(rng);
        let x2 = a.random0(rng);
        let y = a.random1(rng);
        let gx = h.g0(&x)?;
        let gx2 = h.g0(&x2)?;
        if h.g0(&a.add0(&x, &x2)?)? != b.add0(&gx, &gx2)? || h.g0(&a.mul0(&x, &x2)?)? != b.mul0(&gx, &gx2)? {
            rep.ring_failures += 1;
        }
        if h.g0(&a.sigma0(&x)?)? != b.sigma0(&gx)? {
            rep.sigma0_failures += 1;
        }
        let gy = h.g1(&y)?;
        if b.mul0(&u, &h.g0(&a.sigma1(&y)?)?)? != b.sigma1(&gy)? {
            rep.sigma1_failures += 1;
        }
        if h.g0(&a.tau(&y)?)? != b.tau(&gy)? {
            rep.tau_failures += 1;
        }
    }
    Ok(rep)
}

/// `Ψ' = g_0(Ψ)·diag(1, …, 1, u, …, u)`.
pub fn base_change<H: FrameHom>(m: &Window<H::Src>, h: &H) -> FrameResult<Window<H::Dst>> {
    let b = h.dst().as_ref();
    let g = m.psi.try_map(|x| h.g0(x))?;
    let u = h.unit();
    let r0 = m.r0;
    let psi = Mat::try_from_fn(g.rows, g.cols, |i, j| {
        if j < r0 {
            Ok(g.get(i, j).clone())
        } else {
            b.mul0(g.get(i, j), &u)
        }
    })?;
    Window::new(h.dst(), m.r0, m.r1, psi)
}

/// Base change of a morphism: blocks mapped by `g_0` and `g_1`.
pub fn base_change_morphism<H: FrameHom>(
    f: &WindowMorphism<H::Src>,
    h: &H,
) -> FrameResult<WindowMorphism<H::Dst>> {
    Ok(WindowMorphism {
        a: f.a.try_map(|x| h.g0(x))?,
        b: f.b.try_map(|y| h.g1(y))?,
        c: f.c.try_map(|x| h.g0(x))?,
        e: f.e.try_map(|x| h.g0(x))?,
    })
}

/// The identity homomorphism of a frame.
pub struct IdentityHom<F: Frame>(pub Arc<F>);

impl<F: Frame> FrameHom for IdentityHom<F> {
    type Src = F;
    type Dst = F;
    fn src(&self) -> &Arc<F> {
        &self.0
    }
    fn dst(&self) -> &Arc<F> {
        &self.0
    }
    fn g0(&self, x: &F::A0) -> FrameResult<F::A0> {
        Ok(x.clone())
    }
    fn g1(&self, y: &F::A1) -> FrameResult<F::A1> {
        Ok(y.clone())
    }
    fn unit(&self) -> F::A0 {
        self.0.one0()
    }
}

// ---------------------------------------------------------------------------
// deformations

/// An ideal `K ⊆ A_0` with `τ` bijective onto it from `K_1 = τ^{-1}(K)`.
pub trait LeveledIdeal {
    type F: Frame;
    fn frame(&self) -> &Arc<Self::F>;
    fn contains(&self, x: &<Self::F as Frame>::A0) -> bool;
    /// `τ_K^{-1}: K → K_1`.
    fn tau_inv(&self, x: &<Self::F as Frame>::A0) -> FrameResult<<Self::F as Frame>::A1>;
    /// Certified bound with `σ̇^ν = 0`.
    fn nu(&self) -> usize;
    fn random_member(&self, rng: &mut dyn RngCore) -> <Self::F as Frame>::A0;
    /// `σ̇ = σ_1 ∘ τ_K^{-1}`.
    fn sigma_dot(&self, x: &<Self::F as Frame>::A0) -> FrameResult<<Self::F as Frame>::A0> {
        let f = self.frame();
        f.sigma1(&self.tau_inv(x)?)
    }
}

/// `σ̇^ν = 0` and `τ(τ^{-1}(x)) = x` on samples; returns failures.
pub fn check_leveled<K: LeveledIdeal>(k: &K, samples: usize, rng: &mut dyn RngCore) -> FrameResult<usize> {
    let f = k.frame().as_ref();
    let mut bad = 0;
    for _ in 0..samples {
        let x = k.random_member(rng);
        if f.tau(&k.tau_inv(&x)?)? != x {
            bad += 1;
            continue;
        }
        let mut y = x;
        for _ in 0..k.nu() {
            y = k.sigma_dot(&y)?;
        }
        if !f.is_zero0(&y) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Outcome of [`lift_morphism`].
pub struct LiftResult<F: Frame> {
    pub morphism: WindowMorphism<F>,
    pub iterations: usize,
}

/// `σ̇_G(Z) = [[d·σ̇Z_00, σ̇Z_01], [d²·σ̇Z_10, d·σ̇Z_11]]` for `Z` with entries in `K`.
fn sigma_dot_g<K: LeveledIdeal>(k: &K, z: &Mat<<K::F as Frame>::A0>, r0: usize, r0s: usize) -> FrameResult<Mat<<K::F as Frame>::A0>> {
    let f = k.frame().as_ref();
    let d = f.d();
    let d2 = f.mul0(&d, &d)?;
    Mat::try_from_fn(z.rows, z.cols, |i, j| {
        let s = k.sigma_dot(z.get(i, j))?;
        match (i < r0, j < r0s) {
            (true, true) => f.mul0(&d, &s),
            (true, false) => Ok(s),
            (false, true) => f.mul0(&d2, &s),
            (false, false) => f.mul0(&d, &s),
        }
    })
}

/// Lift a morphism `f̄: M̄ → M̄'` over `A/K` to the unique morphism `M → M'` over `A`.
///
/// Solves `Z = (R + Ψ'σ̇_G(Z))Ψ^{-1}` for the correction `Z = X(h)` with
/// `R = Ψ'Y(f_0) - X(f_0)Ψ`, iterating exactly `ν` times from `start`
/// (zero when `None`), then checks the fixed point.
pub fn lift_morphism<K, H>(
    k: &K,
    quotient: &H,
    src: &Window<K::F>,
    dst: &Window<K::F>,
    fbar: &WindowMorphism<H::Dst>,
    start: Option<&Mat<<K::F as Frame>::A0>>,
) -> FrameResult<LiftResult<K::F>>
where
    K: LeveledIdeal,
    H: FrameSection<Src = K::F>,
{
    let f = k.frame().as_ref();
    let f0 = WindowMorphism::<K::F> {
        a: fbar.a.try_map(|x| quotient.lift0(x))?,
        b: fbar.b.try_map(|y| quotient.lift1(y))?,
        c: fbar.c.try_map(|x| quotient.lift0(x))?,
        e: fbar.e.try_map(|x| quotient.lift0(x))?,
    };
    f0.check_shape(src, dst)?;
    let r = mat_sub(
        f,
        &mat_mul(f, &dst.psi, &f0.y_matrix(f)?)?,
        &mat_mul(f, &f0.x_matrix(f)?, &src.psi)?,
    )?;
    if let Some(bad) = r.data.iter().find(|x| !k.contains(x)) {
        return Err(FrameError::OutsideIdeal(format!("{bad:?}: f̄ is not a morphism mod K")));
    }
    let (h_rows, h_cols) = (dst.height(), src.height());
    let mut z = match start {
        Some(z0) => {
            if (z0.rows, z0.cols) != (h_rows, h_cols) {
                return Err(FrameError::Shape("initial correction".into()));
            }
            if z0.data.iter().any(|x| !k.contains(x)) {
                return Err(FrameError::OutsideIdeal("initial correction".into()));
            }
            z0.clone()
        }
        None => mat_zero(f, h_rows, h_cols),
    };
    let step = |z: &Mat<<K::F as Frame>::A0>| -> FrameResult<Mat<<K::F as Frame>::A0>> {
        let t = mat_mul(f, &dst.psi, &sigma_dot_g(k, z, dst.r0, src.r0)?)?;
        mat_mul(f, &mat_add(f, &r, &t)?, &src.psi_inv)
    };
    let nu = k.nu();
    for _ in 0..nu {
        z = step(&z)?;
    }
    if step(&z)? != z {
        return Err(FrameError::NoConvergence(nu));
    }
    let (r0s, r0t) = (src.r0, dst.r0);
    let hs = src.height();
    let ht = dst.height();
    let h = WindowMorphism::<K::F> {
        a: z.block(0, r0t, 0, r0s),
        b: z.block(0, r0t, r0s, hs).try_map(|x| k.tau_inv(x))?,
        c: z.block(r0t, ht, 0, r0s),
        e: z.block(r0t, ht, r0s, hs),
    };
    let morphism = f0.add(f, &h)?;
    if !is_morphism(src, dst, &morphism)?.holds {
        return Err(FrameError::NotMorphism);
    }
    Ok(LiftResult {
        morphism,
        iterations: nu,
    })
}

/// Any lift of `Ψ̄` is a window over `A`; this uses the section entrywise.
pub fn deformation_lift<H: FrameSection>(
    mbar: &Window<H::Dst>,
    quotient: &H,
) -> FrameResult<Window<H::Src>> {
    let psi = mbar.psi.try_map(|x| quotient.lift0(x))?;
    Window::new(quotient.src(), mbar.r0, mbar.r1, psi)
}

// ---------------------------------------------------------------------------
// Hodge filtration lifts

/// A frame homomorphism `A → B` with `A_0 → B_0` bijective.
pub trait HodgeHom: FrameHom {
    fn g0_inv(&self, y: &<Self::Dst as Frame>::A0) -> FrameResult<<Self::Src as Frame>::A0>;
    /// The ring `A_0/τA_1` in which lifts of the Hodge filtration live.
    fn lift_ring(&self) -> &Arc<FpkAlgebra>;
    /// `β ∈ B_1` whose `τ` reduces to `x` in `A_0/τA_1`, for `x` in the
    /// kernel of `A_0/τA_1 → B_0/τB_1`; `None` outside that kernel.
    fn filtration_preimage(&self, x: &Coords) -> FrameResult<Option<<Self::Dst as Frame>::A1>>;
}

/// Window over `A` from a window `N` over `B` and a lift `L` of its Hodge
/// filtration, given as the column span of `[[x], [1]]` with `x` an `r0×r1`
/// matrix over `A_0/τA_1`. Returns the window and the isomorphism from its
/// base change back to `N`.
#[allow(clippy::type_complexity)]
pub fn hodge_lift<H: HodgeHom>(
    h: &H,
    n: &Window<H::Dst>,
    x: &[Vec<Coords>],
) -> FrameResult<(Window<H::Src>, WindowMorphism<H::Dst>)> {
    let b = h.dst().as_ref();
    let (r0, r1) = (n.r0, n.r1);
    if x.len() != r0 || x.iter().any(|r| r.len() != r1) {
        return Err(FrameError::Shape(format!("lift matrix must be {r0}x{r1}")));
    }
    let mut beta = Vec::with_capacity(r0);
    for row in x {
        let mut out = Vec::with_capacity(r1);
        for v in row {
            match h.filtration_preimage(v)? {
                Some(y) => out.push(y),
                None => {
                    return Err(FrameError::NotSummandLift(format!(
                        "{} does not reduce to zero",
                        h.lift_ring().format(v)
                    )))
                }
            }
        }
        beta.push(out);
    }
    let beta = Mat::from_rows(beta, r1)?;
    let iso = WindowMorphism::<H::Dst> {
        a: mat_identity(b, r0),
        b: beta,
        c: mat_zero(b, r1, r0),
        e: mat_identity(b, r1),
    };
    // X(iso)·Ψ_A' = Ψ_N·Y(iso), so Ψ_A' = X^{-1}Ψ_N Y.
    let xm = iso.x_matrix(b)?;
    let xi = mat_inverse(b, &xm)?;
    let psi_b = mat_mul(b, &mat_mul(b, &xi, &n.psi)?, &iso.y_matrix(b)?)?;
    let u = h.unit();
    let u_inv = b.inv0(&u)?;
    let psi_b = Mat::try_from_fn(psi_b.rows, psi_b.cols, |i, j| {
        if j < r0 {
            Ok(psi_b.get(i, j).clone())
        } else {
            b.mul0(psi_b.get(i, j), &u_inv)
        }
    })?;
    let psi_a = psi_b.try_map(|y| h.g0_inv(y))?;
    let ma = Window::new(h.src(), r0, r1, psi_a)?;
    Ok((ma, iso))
}

/// The lifted filtration: columns `r0..h` of `X(iso)` reduced to `A_0/τA_1`.
pub fn lifted_filtration<H: HodgeHom>(h: &H, iso: &WindowMorphism<H::Dst>) -> FrameResult<Mat<Coords>> {
    let a = h.src().as_ref();
    let x = iso.x_matrix(h.dst().as_ref())?;
    let r0 = iso.a.cols;
    x.block(0, x.rows, r0, x.cols)
        .try_map(|y| Ok(a.to_base(&h.g0_inv(y)?)))
}

// ---------------------------------------------------------------------------
// the complex Γ(M) on finite frames

/// `A_1^{r0} ⊕ A_0^{r1}` or `A_0^h` coded in mixed radix.
pub struct CarrierGroup<'a, F: FiniteFrame> {
    frame: &'a F,
    /// `true` for coordinates in `A_1`.
    kinds: Vec<bool>,
    s0: u64,
    s1: u64,
    order: u64,
}

impl<'a, F: FiniteFrame> CarrierGroup<'a, F> {
    pub fn new(frame: &'a F, kinds: Vec<bool>, cap: u64) -> FrameResult<Self> {
        let s0 = frame.size0().ok_or_else(|| FrameError::TooLarge("A_0 is infinite".into()))?;
        let s1 = frame.size1().ok_or_else(|| FrameError::TooLarge("A_1 is infinite".into()))?;
        let mut order: u64 = 1;
        for &k in &kinds {
            order = order
                .checked_mul(if k { s1 } else { s0 })
                .filter(|&o| o <= cap)
                .ok_or_else(|| FrameError::TooLarge(format!("carrier exceeds cap {cap}")))?;
        }
        Ok(CarrierGroup {
            frame,
            kinds,
            s0,
            s1,
            order,
        })
    }

    fn radix(&self, i: usize) -> u64 {
        if self.kinds[i] {
            self.s1
        } else {
            self.s0
        }
    }

    pub fn split(&self, mut c: u64) -> Vec<u64> {
        (0..self.kinds.len())
            .map(|i| {
                let r = self.radix(i);
                let d = c % r;
                c /= r;
                d
            })
            .collect()
    }

    pub fn join(&self, digits: &[u64]) -> u64 {
        let mut c = 0;
        for i in (0..self.kinds.len()).rev() {
            c = c * self.radix(i) + digits[i];
        }
        c
    }

    fn combine(&self, a: u64, b: u64, neg_b: bool) -> u64 {
        let f = self.frame;
        let (x, y) = (self.split(a), self.split(b));
        let out: Vec<u64> = (0..self.kinds.len())
            .map(|i| {
                if self.kinds[i] {
                    let (u, mut v) = (f.decode1(x[i]), f.decode1(y[i]));
                    if neg_b {
                        v = f.neg1(&v).expect("neg in A_1");
                    }
                    f.encode1(&f.add1(&u, &v).expect("add in A_1"))
                } else {
                    let (u, mut v) = (f.decode0(x[i]), f.decode0(y[i]));
                    if neg_b {
                        v = f.neg0(&v).expect("neg in A_0");
                    }
                    f.encode0(&f.add0(&u, &v).expect("add in A_0"))
                }
            })
            .collect();
        self.join(&out)
    }
}

impl<F: FiniteFrame> FiniteGroup for CarrierGroup<'_, F> {
    fn order(&self) -> u64 {
        self.order
    }
    fn zero(&self) -> u64 {
        let f = self.frame;
        let digits: Vec<u64> = self
            .kinds
            .iter()
            .map(|&k| if k { f.encode1(&f.zero1()) } else { f.encode0(&f.zero0()) })
            .collect();
        self.join(&digits)
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        self.combine(a, b, false)
    }
    fn neg(&self, a: u64) -> u64 {
        self.combine(self.zero(), a, true)
    }
}

/// `γ(b, e) = Ψ·(σ_1 b, σ_0 e) - (τ b, e)` on explicit coordinates.
pub fn gamma_apply<F: Frame>(m: &Window<F>, b: &[F::A1], e: &[F::A0]) -> FrameResult<Vec<F::A0>> {
    let f = m.frame.as_ref();
    if b.len() != m.r0 || e.len() != m.r1 {
        return Err(FrameError::Shape(format!(
            "expected {}+{} coordinates, got {}+{}",
            m.r0,
            m.r1,
            b.len(),
            e.len()
        )));
    }
    let mut v = Vec::with_capacity(m.height());
    let mut t = Vec::with_capacity(m.height());
    for y in b {
        v.push(f.sigma1(y)?);
        t.push(f.tau(y)?);
    }
    for x in e {
        v.push(f.sigma0(x)?);
        t.push(x.clone());
    }
    let vm = Mat::from_fn(v.len(), 1, |i, _| v[i].clone());
    let pv = mat_mul(f, &m.psi, &vm)?;
    (0..m.height()).map(|i| f.sub0(pv.get(i, 0), &t[i])).collect()
}

/// The two-term complex `Γ(M): A_1^{r0} ⊕ A_0^{r1} → A_0^h`,
/// `γ(b, e) = Ψ·(σ_1 b, σ_0 e) - (τ b, e)`.
pub struct GammaComplex<'a, F: FiniteFrame> {
    pub window: &'a Window<F>,
    pub degree1: CarrierGroup<'a, F>,
    pub degree0: CarrierGroup<'a, F>,
}

impl<'a, F: FiniteFrame> GammaComplex<'a, F> {
    pub fn new(m: &'a Window<F>, cap: u64) -> FrameResult<Self> {
        let f = m.frame.as_ref();
        let kinds1 = (0..m.height()).map(|i| i < m.r0).collect();
        Ok(GammaComplex {
            window: m,
            degree1: CarrierGroup::new(f, kinds1, cap)?,
            degree0: CarrierGroup::new(f, vec![false; m.height()], cap)?,
        })
    }

    /// Decoded `(b, e)`.
    #[allow(clippy::type_complexity)]
    pub fn decode1(&self, c: u64) -> (Vec<F::A1>, Vec<F::A0>) {
        let f = self.window.frame.as_ref();
        let d = self.degree1.split(c);
        let r0 = self.window.r0;
        (
            d[..r0].iter().map(|&x| f.decode1(x)).collect(),
            d[r0..].iter().map(|&x| f.decode0(x)).collect(),
        )
    }

    pub fn gamma(&self, c: u64) -> FrameResult<u64> {
        let m = self.window;
        let f = m.frame.as_ref();
        let (b, e) = self.decode1(c);
        let out: Vec<u64> = gamma_apply(m, &b, &e)?.iter().map(|x| f.encode0(x)).collect();
        Ok(self.degree0.join(&out))
    }

    pub fn map(&self) -> AbGroupMap<'_> {
        AbGroupMap::new(&self.degree1, &self.degree0, move |c| {
            self.gamma(c).expect("gamma on a finite frame")
        })
    }

    pub fn homology(&self, cap: u64) -> FrameResult<Homology> {
        let p = self.window.frame.p();
        Ok(crate::zmod_linalg::complex_homology(p, &self.map(), cap)?)
    }

    /// Codes of `ker γ`, by enumeration.
    pub fn kernel(&self) -> FrameResult<Vec<u64>> {
        let z = self.degree0.zero();
        let mut out = Vec::new();
        for c in 0..self.degree1.order() {
            if self.gamma(c)? == z {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Codes of `(b, e)` that define window morphisms `A(1) → M`, tested
    /// directly with [`is_morphism`].
    pub fn twist_morphisms(&self) -> FrameResult<Vec<u64>> {
        let m = self.window;
        let f = m.frame.as_ref();
        let tw = Window::twist(&m.frame);
        let mut out = Vec::new();
        for c in 0..self.degree1.order() {
            let (b, e) = self.decode1(c);
            let g = WindowMorphism::<F> {
                a: mat_zero(f, m.r0, 0),
                b: Mat::from_fn(m.r0, 1, |i, _| b[i].clone()),
                c: mat_zero(f, m.r1, 0),
                e: Mat::from_fn(m.r1, 1, |i, _| e[i].clone()),
            };
            if is_morphism(&tw, m, &g)?.holds {
                out.push(c);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_instances::{WittFrame, WittTruncation};
    use crate::ring_base::std_rings::{f2, f4, truncated};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn identity_and_non_morphism() {
        let f = WittFrame::truncated(&f4(), 2).unwrap();
        let mut g = rng();
        let m = Window::from_int(&f, 1, 1, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert!(m.check_inverse().unwrap());
        let id = WindowMorphism::identity(&m);
        assert!(is_morphism(&m, &m, &id).unwrap().holds);
        let mut bad = id.clone();
        bad.c.set(0, 0, f.random0(&mut g));
        while f.is_zero0(bad.c.get(0, 0)) {
            bad.c.set(0, 0, f.random0(&mut g));
        }
        let chk = is_morphism(&m, &m, &bad).unwrap();
        assert!(!chk.holds);
        assert!(!mat_is_zero(f.as_ref(), &chk.residual));
    }

    #[test]
    fn composition_of_transported_morphisms() {
        let f = WittFrame::truncated(&truncated(&f2(), 2), 3).unwrap();
        let mut g = rng();
        let m0 = Window::from_int(&f, 1, 1, &[vec![1, 1], vec![0, 1]]).unwrap();
        let a = random_invertible_morphism(f.as_ref(), 1, 1, &mut g).unwrap();
        let m1 = transport(&m0, &a).unwrap();
        let b = random_invertible_morphism(f.as_ref(), 1, 1, &mut g).unwrap();
        let m2 = transport(&m1, &b).unwrap();
        let c = random_invertible_morphism(f.as_ref(), 1, 1, &mut g).unwrap();
        let m3 = transport(&m2, &c).unwrap();
        assert!(is_morphism(&m0, &m1, &a).unwrap().holds);
        let ba = compose(f.as_ref(), &b, &a).unwrap();
        assert!(is_morphism(&m0, &m2, &ba).unwrap().holds);
        let left = compose(f.as_ref(), &c, &ba).unwrap();
        let right = compose(f.as_ref(), &compose(f.as_ref(), &c, &b).unwrap(), &a).unwrap();
        assert_eq!(left, right);
        assert!(is_morphism(&m0, &m3, &left).unwrap().holds);
    }

    #[test]
    fn shape_errors() {
        let f = WittFrame::truncated(&f2(), 1).unwrap();
        let m = Window::unit(&f);
        let n = Window::from_int(&f, 1, 1, &[vec![1, 0], vec![0, 1]]).unwrap();
        let id = WindowMorphism::identity(&m);
        assert!(matches!(is_morphism(&m, &n, &id), Err(FrameError::Shape(_))));
        assert!(Window::from_int(&f, 1, 1, &[vec![1, 0], vec![1, 0]]).is_err());
    }

    #[test]
    fn duality() {
        let f = WittFrame::truncated(&f4(), 2).unwrap();
        let unit = Window::unit(&f);
        let d = dual_window(&unit).unwrap();
        let tw = Window::twist(&f);
        assert_eq!((d.r0, d.r1), (0, 1));
        assert_eq!(d.psi, tw.psi);
        let mut g = rng();
        let m = transport(
            &Window::from_int(&f, 2, 1, &[vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]).unwrap(),
            &random_invertible_morphism(f.as_ref(), 2, 1, &mut g).unwrap(),
        )
        .unwrap();
        let md = dual_window(&m).unwrap();
        assert!(md.check_inverse().unwrap());
        assert_eq!((md.height(), md.dimension()), (3, 1));
        let mdd = dual_window(&md).unwrap();
        assert_eq!(mdd.psi, m.psi);
        assert_eq!((mdd.r0, mdd.r1), (m.r0, m.r1));
    }

    #[test]
    fn base_change_truncates() {
        let f = WittFrame::truncated(&f2(), 3).unwrap();
        let mut g = rng();
        let m = transport(
            &Window::from_int(&f, 1, 1, &[vec![0, 1], vec![1, 0]]).unwrap(),
            &random_invertible_morphism(f.as_ref(), 1, 1, &mut g).unwrap(),
        )
        .unwrap();
        let id = IdentityHom(f.clone());
        assert_eq!(base_change(&m, &id).unwrap().psi, m.psi);
        let t = WittTruncation::new(&f, 2).unwrap();
        assert!(check_frame_hom(&t, 50, &mut g).unwrap().passed());
        let mt = base_change(&m, &t).unwrap();
        assert_eq!(mt.psi, m.psi.map(|x| x[..2].to_vec()));
        // functoriality through an intermediate truncation
        let t1 = WittTruncation::new(&f, 2).unwrap();
        let t2 = WittTruncation::new(t1.dst(), 1).unwrap();
        let direct = WittTruncation::new(&f, 1).unwrap();
        assert_eq!(
            base_change(&base_change(&m, &t1).unwrap(), &t2).unwrap().psi,
            base_change(&m, &direct).unwrap().psi
        );
    }

    #[test]
    fn gamma_unit_and_twist() {
        let f = WittFrame::truncated(&f4(), 1).unwrap();
        let unit = Window::unit(&f);
        let gc = GammaComplex::new(&unit, 1 << 20).unwrap();
        // γ(x) = x - τx = x on W_1
        for c in 0..gc.degree1.order() {
            assert_eq!(gc.gamma(c).unwrap(), c);
        }
        let tw = Window::twist(&f);
        let gt = GammaComplex::new(&tw, 1 << 20).unwrap();
        let h = gt.homology(1 << 20).unwrap();
        // x ↦ x^2 - x on F_4 has kernel F_2
        assert_eq!(h.h0.order(), 2u64.into());
        assert!(gt.map().check_additive(1 << 20, 0).failures == 0);
        let zero = Window::from_int(&f, 0, 0, &[]).unwrap();
        let gz = GammaComplex::new(&zero, 16).unwrap();
        assert_eq!((gz.degree1.order(), gz.degree0.order()), (1, 1));
    }

    #[test]
    fn ext_cross_check() {
        let f = WittFrame::truncated(&f2(), 2).unwrap();
        let m = Window::from_int(&f, 1, 1, &[vec![0, 1], vec![1, 0]]).unwrap();
        let gc = GammaComplex::new(&m, 1 << 20).unwrap();
        assert_eq!(gc.kernel().unwrap(), gc.twist_morphisms().unwrap());
    }
}
