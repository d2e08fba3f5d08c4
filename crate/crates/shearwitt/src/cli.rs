//! Corpus of named rings and windows, the verification suites and their
//! JSON reports, and window import/export. The `shearwitt` binary is a thin
//! layer over this module.
//!
//! Reports contain no timing data, so two runs with the same [`SuiteConfig`]
//! serialize to the same bytes.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::frame_instances::{
    check_c_relation, frame_hom_c, DividedWittCoords, PdIdeal, RelShearedFrame, RelShearedIdeal, RelToAbsolute,
    RelWittFrame, RelWittIdeal, RelWittToAbsolute, ShearedFrame, ShearedRingChange, WittFrame, WittRingChange,
    WittTruncation,
};
use crate::frames::{
    check_frame_axioms, check_frame_hom, check_leveled, dual_window, is_morphism, lift_morphism,
    base_change, random_invertible_morphism, transport, Frame, FrameError, FrameHom, FrameSection, LeveledIdeal, Mat,
    Window, WindowJson, WindowMorphism,
};
use crate::point_functors::{
    duality_diagram_check, exact_triangle_check, ext_cross_check, oracles, point_count_table, LogOracle,
    TableWindow, TestRing, DEFAULT_BUDGET,
};
use crate::ring_base::std_rings::{f2_xy, fp};
use crate::ring_base::{extend_nilpotent, is_prime, make_field, make_galois, make_zmod, FpkAlgebra, RingError, RingHom};
use crate::sheared_witt::{check_kernel_sequence, check_vn_wn_sequence, f_invariants, ShearedError, ShearedRing};
use crate::witt::{
    check_divided_powers, check_vtilde_identities, check_witt_laws, compute_u0_alpha_ptilde, WittError, WittRing,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown ring {0:?}")]
    UnknownRing(String),
    #[error("unknown window {0:?}")]
    UnknownWindow(String),
    #[error("unknown suite {0:?}; known: {known}", known = SUITES.join(", "))]
    UnknownSuite(String),
    #[error("unknown frame id {0:?}")]
    UnknownFrame(String),
    #[error("config out of range: {0}")]
    Config(String),
    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("Ψ is not invertible: det Ψ = {0} is not a unit")]
    NotInvertible(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Sheared(#[from] ShearedError),
    #[error(transparent)]
    Witt(#[from] WittError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

fn schema(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------------
// rings

/// Defining polynomials of the stored finite fields, low degree first.
fn field_poly(p: u64, m: u32) -> Option<&'static [u64]> {
    Some(match (p, m) {
        (2, 2) => &[1, 1, 1],
        (2, 3) => &[1, 1, 0, 1],
        (2, 4) => &[1, 1, 0, 0, 1],
        (3, 2) => &[1, 0, 1],
        (3, 3) => &[1, 2, 0, 1],
        (5, 2) => &[2, 0, 1],
        (7, 2) => &[1, 0, 1],
        _ => return None,
    })
}

fn prime_power(q: u64) -> Option<(u64, u32)> {
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut m = 0;
    let mut r = q;
    while r % p == 0 {
        r /= p;
        m += 1;
    }
    (r == 1 && is_prime(p)).then_some((p, m))
}

/// Parse a ring name. Accepted forms, composable from the right:
///
/// * `F{q}` for a prime `q` or a stored field, `Z/{p}^{k}`, `GR({p}^{k},{d})`
/// * `F2[x,y]/(x^2,xy,y^2)`
/// * `{R}[t]/(t^{j})` (also `[t]/t^{j}`), and `{R}[eps]` for `R[ε]/ε²`
///
/// The names printed by the library for these rings parse back to them.
pub fn parse_ring(name: &str) -> CliResult<Arc<FpkAlgebra>> {
    let bad = || CliError::UnknownRing(name.to_string());
    let s = name.trim();
    if s == "F2[x,y]/(x^2,xy,y^2)" || s == "F2[x]/(x^2)[y]/(y^2)/I" {
        return Ok(f2_xy());
    }
    if let Some(base) = s.strip_suffix("[eps]") {
        return Ok(extend_nilpotent(&parse_ring(base)?, 2, "e")?);
    }
    // `{R}[v]/(v^j)` or `{R}[v]/v^j`
    if let Some(open) = s.rfind('[') {
        let tail = &s[open..];
        if let Some((var, rest)) = tail[1..].split_once(']') {
            let rest = rest.strip_prefix('/').ok_or_else(bad)?;
            let rest = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
            let j = rest
                .strip_prefix(var)
                .and_then(|r| r.strip_prefix('^'))
                .and_then(|e| e.parse::<usize>().ok())
                .filter(|&j| (2..=8).contains(&j))
                .ok_or_else(bad)?;
            if var.is_empty() || !var.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(bad());
            }
            return Ok(extend_nilpotent(&parse_ring(&s[..open])?, j, var)?);
        }
        return Err(bad());
    }
    if let Some(q) = s.strip_prefix('F') {
        let (p, m) = q.parse::<u64>().ok().and_then(prime_power).ok_or_else(bad)?;
        if m == 1 {
            return Ok(fp(p));
        }
        return Ok(make_field(p, field_poly(p, m).ok_or_else(bad)?, "a")?);
    }
    if let Some(z) = s.strip_prefix("Z/") {
        let (p, k) = match z.split_once('^') {
            Some((p, k)) => (p.parse().ok(), k.parse().ok()),
            None => z.parse::<u64>().ok().and_then(prime_power).map_or((None, None), |(p, k)| (Some(p), Some(k))),
        };
        let (p, k) = p.zip(k).filter(|&(p, k)| is_prime(p) && (1..=8).contains(&k)).ok_or_else(bad)?;
        return Ok(make_zmod(p, k)?);
    }
    if let Some(g) = s.strip_prefix("GR(").and_then(|g| g.strip_suffix(')')) {
        let (q, d) = g.split_once(',').ok_or_else(bad)?;
        let (p, k) = match q.split_once('^') {
            Some((p, k)) => (p.parse().ok(), k.parse().ok()),
            None => q.parse::<u64>().ok().and_then(prime_power).map_or((None, None), |(p, k)| (Some(p), Some(k))),
        };
        let (p, k): (u64, u32) = p.zip(k).ok_or_else(bad)?;
        let d: u32 = d.parse().map_err(|_| bad())?;
        return Ok(make_galois(p, k, field_poly(p, d).ok_or_else(bad)?, "a")?);
    }
    Err(bad())
}

/// A named ring in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingFamily {
    pub name: String,
    pub members: Vec<String>,
}

// ---------------------------------------------------------------------------
// windows

/// A window given by an integer structure matrix, instantiated over any frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub name: String,
    pub r0: usize,
    pub r1: usize,
    pub psi: Vec<Vec<i64>>,
    /// Name of the closed-form `log_p |H^0|` over finite fields.
    pub oracle: Option<String>,
}

impl WindowSpec {
    pub fn over<F: Frame>(&self, frame: &Arc<F>) -> CliResult<Window<F>> {
        Ok(Window::from_int(frame, self.r0, self.r1, &self.psi)?)
    }

    pub fn oracle_fn(&self) -> Option<LogOracle> {
        self.oracle.as_deref().and_then(oracle_by_name)
    }
}

pub fn oracle_by_name(name: &str) -> Option<LogOracle> {
    Some(match name {
        "unit" => oracles::unit,
        "twist" => oracles::twist,
        "ordinary" => oracles::ordinary,
        "supersingular" => oracles::supersingular,
        _ => return None,
    })
}

fn spec(name: &str, r0: usize, r1: usize, psi: Vec<Vec<i64>>) -> WindowSpec {
    WindowSpec {
        name: name.into(),
        r0,
        r1,
        psi,
        oracle: Some(name.into()),
    }
}

/// The corpus: named rings, the ring grid used by the exactness suites,
/// ring families, and the standard windows with their oracles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub rings: Vec<String>,
    pub grid: Vec<String>,
    pub families: Vec<RingFamily>,
    pub windows: Vec<WindowSpec>,
}

impl Corpus {
    pub fn standard() -> Self {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let family = |name: &str, v: &[&str]| RingFamily {
            name: name.into(),
            members: names(v),
        };
        Corpus {
            rings: names(&[
                "F2",
                "F4",
                "F8",
                "F2[t]/(t^2)",
                "F2[t]/(t^3)",
                "Z/2^2",
                "Z/2^3",
                "GR(2^2,2)",
                "F3",
                "F9",
                "F27",
                "F3[t]/(t^2)",
                "Z/3^2",
                "F4[t]/(t^2)",
                "F9[t]/(t^2)",
                "F2[x,y]/(x^2,xy,y^2)",
            ]),
            grid: names(&[
                "F2[t]/(t^2)",
                "F2[t]/(t^3)",
                "F4[t]/(t^2)",
                "F3[t]/(t^2)",
                "F2[x,y]/(x^2,xy,y^2)",
                "F9[t]/(t^2)",
            ]),
            families: vec![
                family("F2-tower", &["F2", "F4", "F8"]),
                family("F3-tower", &["F3", "F9", "F27"]),
                family("F2-truncated", &["F2[t]/(t^2)", "F2[t]/(t^3)", "F2[t]/(t^4)"]),
                family("F3-truncated", &["F3[t]/(t^2)", "F3[t]/(t^3)"]),
                family("eps-extensions", &["F2[eps]", "F4[eps]", "F3[eps]", "F9[eps]"]),
            ],
            windows: vec![
                spec("unit", 1, 0, vec![vec![1]]),
                spec("twist", 0, 1, vec![vec![1]]),
                spec("ordinary", 1, 1, vec![vec![1, 0], vec![0, 1]]),
                spec("supersingular", 1, 1, vec![vec![0, 1], vec![1, 0]]),
            ],
        }
    }

    pub fn window(&self, name: &str) -> CliResult<&WindowSpec> {
        self.windows
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| CliError::UnknownWindow(name.to_string()))
    }

    /// sha256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("corpus serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Every ring parses and every window is a window over `W_1(F_p)` and
    /// over `ˢW(F_p)`, for `p ∈ {2, 3}`.
    pub fn validate(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let all = self
            .rings
            .iter()
            .chain(&self.grid)
            .chain(self.families.iter().flat_map(|f| &f.members));
        for r in all {
            if let Err(e) = parse_ring(r) {
                bad.push(format!("{r}: {e}"));
            }
        }
        for p in [2, 3] {
            let r = fp(p);
            for w in &self.windows {
                let ok = WittFrame::truncated(&r, 1)
                    .map_err(CliError::from)
                    .and_then(|f| w.over(&f).map(|_| ()))
                    .and_then(|_| ShearedFrame::new(&r, 2, 4).map_err(CliError::from))
                    .and_then(|f| w.over(&f).map(|_| ()));
                if let Err(e) = ok {
                    bad.push(format!("{} over F{p}: {e}", w.name));
                }
                if w.oracle.is_some() && w.oracle_fn().is_none() {
                    bad.push(format!("{}: unknown oracle", w.name));
                }
            }
        }
        bad
    }
}

// ---------------------------------------------------------------------------
// suites

pub const SUITES: &[&str] = &[
    "witt-laws",
    "sheared-exactness",
    "frame-axioms",
    "duality",
    "deformation",
    "points-corpus",
];

/// Parameters of a verification run, embedded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Precision `N` of sheared Witt rings.
    pub precision: usize,
    /// Support bound `B` of sheared Witt rings.
    pub bound: usize,
    /// Samples per sampled identity.
    pub samples: usize,
    /// Random cases per grid point of the deformation suite.
    pub cases: usize,
    /// Enumeration budget per carrier.
    pub budget: u64,
    pub primes: Vec<u64>,
    pub ns: Vec<usize>,
    /// Largest `m` with `F_{p^m}` in the point-count corpus.
    pub max_degree: u32,
    /// Stabilization levels for sheaf points.
    pub levels: usize,
    /// Multiplier on precisions and support bounds of the point evaluations.
    pub level_scale: usize,
    /// Worker threads; not part of the report since it cannot change results.
    #[serde(skip, default = "default_threads")]
    pub threads: usize,
}

fn default_threads() -> usize {
    crate::point_functors::default_threads()
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 7,
            precision: 4,
            bound: 12,
            samples: 100,
            cases: 20,
            budget: DEFAULT_BUDGET,
            primes: vec![2, 3],
            ns: vec![1, 2],
            max_degree: 3,
            levels: 2,
            level_scale: 1,
            threads: default_threads(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> CliResult<()> {
        let err = |m: String| Err(CliError::Config(m));
        if !(2..=6).contains(&self.precision) {
            return err(format!("precision {} not in 2..=6", self.precision));
        }
        if self.bound <= self.precision + 1 || self.bound > 24 {
            return err(format!("bound {} not in {}..=24", self.bound, self.precision + 2));
        }
        if self.samples == 0 || self.samples > 100_000 {
            return err(format!("samples {} not in 1..=100000", self.samples));
        }
        if self.cases == 0 || self.cases > 1000 {
            return err(format!("cases {} not in 1..=1000", self.cases));
        }
        if !(1 << 8..=1 << 26).contains(&self.budget) {
            return err(format!("budget {} not in 2^8..=2^26", self.budget));
        }
        if self.primes.is_empty() || self.primes.iter().any(|p| ![2, 3].contains(p)) {
            return err(format!("primes {:?} must be a nonempty subset of {{2, 3}}", self.primes));
        }
        if self.ns.is_empty() || self.ns.iter().any(|n| !(1..=3).contains(n)) {
            return err(format!("n values {:?} must lie in 1..=3", self.ns));
        }
        if !(1..=3).contains(&self.max_degree) {
            return err(format!("max degree {} not in 1..=3", self.max_degree));
        }
        if !(2..=6).contains(&self.levels) || !(1..=4).contains(&self.level_scale) {
            return err("levels must lie in 2..=6 and level scale in 1..=4".into());
        }
        Ok(())
    }

    fn rng(&self, label: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(label.as_bytes());
        let d = h.finalize();
        ChaCha8Rng::from_seed(d.into())
    }

    fn has_prime(&self, p: u64) -> bool {
        self.primes.contains(&p)
    }
}

/// One verified statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub check: String,
    pub subject: String,
    pub passed: bool,
    /// Results that must not move when precisions and supports grow.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub invariants: Value,
    /// Diagnostics; may depend on the evaluation levels.
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: usize,
    pub failures: usize,
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.into(),
            checks: 0,
            failures: 0,
            lines: Vec::new(),
        }
    }

    fn push(&mut self, check: &str, subject: impl Into<String>, passed: bool, detail: Value) {
        self.push_with(check, subject, passed, Value::Null, detail);
    }

    fn push_with(&mut self, check: &str, subject: impl Into<String>, passed: bool, invariants: Value, detail: Value) {
        self.checks += 1;
        if !passed {
            self.failures += 1;
        }
        self.lines.push(CheckLine {
            check: check.into(),
            subject: subject.into(),
            passed,
            invariants,
            detail,
        });
    }

    /// Record an error as a failed check.
    fn record<T>(&mut self, check: &str, subject: &str, r: CliResult<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(check, subject, false, json!({ "error": e.to_string() }));
                None
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// The full report of a `verify` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: SuiteConfig,
    pub corpus_hash: String,
    pub suites: Vec<SuiteReport>,
    pub failures: usize,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The report without configuration and diagnostics: verdicts and the
    /// level-independent results of every check.
    pub fn invariants(&self) -> Value {
        let suites: Vec<Value> = self
            .suites
            .iter()
            .map(|s| {
                let lines: Vec<Value> = s
                    .lines
                    .iter()
                    .map(|l| json!({ "check": l.check, "subject": l.subject, "passed": l.passed, "invariants": l.invariants }))
                    .collect();
                json!({ "suite": s.suite, "checks": s.checks, "failures": s.failures, "lines": lines })
            })
            .collect();
        json!({ "corpus_hash": self.corpus_hash, "suites": suites, "failures": self.failures })
    }

    /// Exit status: 0 iff there were no failures.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.passed())
    }
}

/// Run a suite by name, or every suite for `all`.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> CliResult<RunReport> {
    cfg.validate()?;
    let names: Vec<&str> = if name == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&name) {
        vec![name]
    } else {
        return Err(CliError::UnknownSuite(name.to_string()));
    };
    let corpus = Corpus::standard();
    let suites: Vec<SuiteReport> = names.iter().map(|n| run_one(n, cfg, &corpus)).collect();
    let failures = suites.iter().map(|s| s.failures).sum();
    Ok(RunReport {
        tool: "shearwitt".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        corpus_hash: corpus.hash(),
        suites,
        failures,
    })
}

fn run_one(name: &str, cfg: &SuiteConfig, corpus: &Corpus) -> SuiteReport {
    match name {
        "witt-laws" => witt_laws_suite(cfg),
        "sheared-exactness" => sheared_exactness_suite(cfg, corpus),
        "frame-axioms" => frame_axioms_suite(cfg, corpus),
        "duality" => duality_suite(cfg, corpus),
        "deformation" => deformation_suite(cfg, corpus),
        "points-corpus" => points_corpus_suite(cfg, corpus),
        _ => unreachable!("suite names are checked by run_suite"),
    }
}

fn ring_prime(name: &str) -> Option<u64> {
    parse_ring(name).ok().map(|r| r.p())
}

/// Ring axioms and the `F`/`V` identities over the law rings; the constants
/// `u_0`, `α`, `p̃` and the `Ṽ` identities; divided powers on `V`-images.
pub fn witt_laws_suite(cfg: &SuiteConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("witt-laws");
    let law_rings = [
        "F2",
        "F4",
        "F8",
        "F2[t]/(t^2)",
        "F2[t]/(t^3)",
        "Z/2^2",
        "Z/2^3",
        "GR(2^2,2)",
        "F3",
        "F9",
        "F3[t]/(t^2)",
        "Z/3^2",
    ];
    for name in law_rings.iter().filter(|n| ring_prime(n).is_some_and(|p| cfg.has_prime(p))) {
        let Some(w) = rep.record("witt-laws", name, witt_ring(name, 4)) else { continue };
        let mut rng = cfg.rng(&format!("witt-laws/{name}"));
        for len in 1..=3 {
            let r = check_witt_laws(&w, len, cfg.samples, &mut rng);
            rep.push("witt-laws", format!("W_{len}({name})"), r.passed(), serde_json::to_value(&r).unwrap());
        }
    }
    if cfg.has_prime(2) {
        let n = cfg.precision.max(4);
        let k = n as u32 + 1;
        let c = compute_u0_alpha_ptilde(2, n, k);
        rep.push(
            "constants",
            format!("W_{n}(Z/2^{k})"),
            c.is_ok(),
            c.as_ref().map_or_else(|e| json!({ "error": e.to_string() }), |c| serde_json::to_value(c).unwrap()),
        );
        if let Some(w) = rep.record("constants", "Z/2^k", make_zmod(2, k).map_err(Into::into).and_then(|z| {
            Ok(WittRing::new(&z, n + 1)?)
        })) {
            let ext = |x: Vec<Vec<u64>>| {
                let mut v = vec![vec![0u64]];
                v.extend(x);
                v
            };
            let v_u0 = ext(w.u0(n - 1));
            let two_minus_t2 = w.sub(&w.from_int(2, n), &w.teich(&[2], n));
            rep.push("constants", format!("V(u0) = 2-[2] in W_{n}"), v_u0 == two_minus_t2, json!({}));
            let f_vt1 = w.frobenius_drop(&ext(w.u0(n)));
            let two_minus_t4 = w.sub(&w.from_int(2, n), &w.teich(&[4], n));
            rep.push("constants", format!("p̃ = F(Ṽ(1)) = 2-[4] in W_{n}"), f_vt1 == two_minus_t4, json!({}));
        }
        for name in ["Z/2^3", "Z/2^4", "F2[t]/(t^2)", "F4", "GR(2^2,2)"] {
            let Some(w) = rep.record("vtilde", name, witt_ring(name, 5)) else { continue };
            let mut rng = cfg.rng(&format!("vtilde/{name}"));
            let r = check_vtilde_identities(&w, 4, cfg.samples, &mut rng);
            rep.push("vtilde", format!("W_4({name})"), r.passed(), serde_json::to_value(&r).unwrap());
        }
    }
    if cfg.has_prime(3) {
        let c = compute_u0_alpha_ptilde(3, cfg.precision.max(4), 2);
        let ok = c.as_ref().is_ok_and(|c| {
            let one: Vec<u64> = (0..c.n).map(|i| u64::from(i == 0)).collect();
            c.u0 == one && c.alpha == one
        });
        rep.push(
            "constants",
            "u0 = α = 1 at p = 3",
            ok,
            c.map_or_else(|e| json!({ "error": e.to_string() }), |c| serde_json::to_value(c).unwrap()),
        );
        for name in ["Z/3^2", "F9", "F3[t]/(t^2)"] {
            let Some(w) = rep.record("vtilde", name, witt_ring(name, 5)) else { continue };
            let mut rng = cfg.rng(&format!("vtilde/{name}"));
            let r = check_vtilde_identities(&w, 4, cfg.samples, &mut rng);
            rep.push("vtilde", format!("W_4({name})"), r.passed(), serde_json::to_value(&r).unwrap());
        }
    }
    let pd_rings = ["F2", "F4", "F2[t]/(t^2)", "F2[t]/(t^3)", "F3", "F9", "F3[t]/(t^2)", "Z/3^2"];
    for name in pd_rings.iter().filter(|n| ring_prime(n).is_some_and(|p| cfg.has_prime(p))) {
        let Some(w) = rep.record("divided-powers", name, witt_ring(name, 4)) else { continue };
        let mut rng = cfg.rng(&format!("divided-powers/{name}"));
        let r = check_divided_powers(&w, 4, 2 * w.p(), cfg.samples, &mut rng);
        rep.push("divided-powers", format!("VW_3({name})"), r.passed(), serde_json::to_value(&r).unwrap());
    }
    rep
}

fn witt_ring(name: &str, len: usize) -> CliResult<WittRing> {
    Ok(WittRing::new(&parse_ring(name)?, len)?)
}

/// Kernel and `Ṽ^n` sequences on the grid, and the `F`-invariant count.
pub fn sheared_exactness_suite(cfg: &SuiteConfig, corpus: &Corpus) -> SuiteReport {
    let mut rep = SuiteReport::new("sheared-exactness");
    for name in corpus.grid.iter().filter(|n| ring_prime(n).is_some_and(|p| cfg.has_prime(p))) {
        let sr = parse_ring(name).and_then(|r| Ok(ShearedRing::new(&r, cfg.precision, cfg.bound)?));
        let Some(sr) = rep.record("kernel-sequence", name, sr) else { continue };
        let mut rng = cfg.rng(&format!("kernel/{name}"));
        let r = check_kernel_sequence(&sr, sr.nilradical(), cfg.samples, &mut rng).map_err(CliError::from);
        if let Some(r) = rep.record("kernel-sequence", name, r) {
            rep.push("kernel-sequence", name.as_str(), r.passed(), serde_json::to_value(&r).unwrap());
        }
        for n in 1..=2.min(cfg.precision) {
            let mut rng = cfg.rng(&format!("vn-wn/{name}/{n}"));
            let r = check_vn_wn_sequence(&sr, n, cfg.samples, &mut rng).map_err(CliError::from);
            if let Some(r) = rep.record("vn-wn-sequence", name, r) {
                rep.push("vn-wn-sequence", format!("{name}, n={n}"), r.passed(), serde_json::to_value(&r).unwrap());
            }
        }
        for big_n in 2..=4 {
            let fi = parse_ring(name)
                .and_then(|r| Ok(ShearedRing::new(&r, big_n, big_n + 6)?))
                .and_then(|sr| Ok(f_invariants(&sr)?));
            if let Some(fi) = rep.record("f-invariants", name, fi) {
                let ok = fi.log_count == big_n as u32 && fi.cyclic;
                rep.push("f-invariants", format!("{name}, N={big_n}"), ok, serde_json::to_value(&fi).unwrap());
            }
        }
    }
    rep
}

/// Frame axioms, frame homomorphisms, divided-power tables and leveled ideals.
pub fn frame_axioms_suite(cfg: &SuiteConfig, corpus: &Corpus) -> SuiteReport {
    let mut rep = SuiteReport::new("frame-axioms");
    let samples = cfg.samples;
    let axioms = |rep: &mut SuiteReport, subject: String, r: Result<crate::frames::AxiomReport, FrameError>| {
        if let Some(a) = rep.record("frame-axioms", &subject, r.map_err(CliError::from)) {
            rep.push("frame-axioms", subject, a.passed(), serde_json::to_value(&a).unwrap());
        }
    };
    let hom = |rep: &mut SuiteReport, subject: String, r: Result<crate::frames::HomReport, FrameError>| {
        if let Some(h) = rep.record("frame-hom", &subject, r.map_err(CliError::from)) {
            rep.push("frame-hom", subject, h.passed(), serde_json::to_value(&h).unwrap());
        }
    };
    let witt_rings = ["F2", "F4", "F2[t]/(t^2)", "F2[t]/(t^3)", "F3", "F9", "F3[t]/(t^2)"];
    for name in witt_rings.iter().filter(|n| ring_prime(n).is_some_and(|p| cfg.has_prime(p))) {
        let Some(r) = rep.record("frame-axioms", name, parse_ring(name)) else { continue };
        let mut g = cfg.rng(&format!("witt-frame/{name}"));
        for (kind, f) in [("W_3", WittFrame::truncated(&r, 3)), ("W_prec3", WittFrame::precision(&r, 3))] {
            match f {
                Ok(f) => {
                    axioms(&mut rep, format!("{kind}({name})"), check_frame_axioms(f.as_ref(), samples, &mut g));
                    if kind == "W_3" {
                        let t = WittTruncation::new(&f, 2);
                        let r = t.and_then(|t| check_frame_hom(&t, samples / 2 + 1, &mut g));
                        hom(&mut rep, format!("W_3({name}) → W_2({name})"), r);
                    }
                }
                Err(e) => {
                    rep.push("frame-axioms", format!("{kind}({name})"), false, json!({ "error": e.to_string() }));
                }
            }
        }
    }
    for name in corpus.grid.iter().filter(|n| ring_prime(n).is_some_and(|p| cfg.has_prime(p))) {
        let Some(r) = rep.record("frame-axioms", name, parse_ring(name)) else { continue };
        let mut g = cfg.rng(&format!("sheared-frame/{name}"));
        match ShearedFrame::new(&r, 3, 10) {
            Ok(f) => {
                axioms(&mut rep, format!("sW({name})"), check_frame_axioms(f.as_ref(), samples, &mut g));
                let c = frame_hom_c(&f).and_then(|c| check_frame_hom(&c, samples / 2 + 1, &mut g));
                hom(&mut rep, format!("sW({name}) → W({name})"), c);
                let red = ShearedRingChange::new(&f, f.sheared().projection().clone())
                    .and_then(|h| check_frame_hom(&h, samples / 2 + 1, &mut g));
                hom(&mut rep, format!("sW({name}) → sW({name}_red)"), red);
            }
            Err(e) => rep.push("frame-axioms", format!("sW({name})"), false, json!({ "error": e.to_string() })),
        }
        // relative frames over R' → R'/𝔞 with 𝔞 the last power of the maximal ideal
        let Some(pd) = rep.record("pd-ideal", name, socle_pd(&r)) else { continue };
        let pr = pd.check_axioms();
        rep.push("pd-ideal", name.as_str(), pr.failures.is_empty(), serde_json::to_value(&pr).unwrap());
        rep.push("divided-witt-coords", name.as_str(), DividedWittCoords::new(&pd).check(), json!({}));
        match RelShearedFrame::new(pd, 2, 8) {
            Ok(f) => {
                axioms(&mut rep, format!("sW({name}/𝔞)"), check_frame_axioms(f.as_ref(), samples, &mut g));
                let q = RelToAbsolute::new(&f).and_then(|q| check_frame_hom(&q, samples / 2 + 1, &mut g));
                hom(&mut rep, format!("sW({name}/𝔞) → sW"), q);
                let k = RelShearedIdeal::new(&f);
                let bad = check_leveled(&k, samples / 2 + 1, &mut g).map_err(CliError::from);
                if let Some(bad) = rep.record("leveled", name, bad) {
                    rep.push("leveled", format!("sW({name}/𝔞)"), bad == 0, json!({ "failures": bad, "nu": k.nu() }));
                }
            }
            Err(e) => rep.push("frame-axioms", format!("sW({name}/𝔞)"), false, json!({ "error": e.to_string() })),
        }
        if let Some(pd) = rep.record("pd-ideal", name, socle_pd(&r)) {
            match RelWittFrame::new(pd, 3) {
                Ok(f) => {
                    axioms(&mut rep, format!("W_3({name}/𝔞)"), check_frame_axioms(f.as_ref(), samples, &mut g));
                    let q = RelWittToAbsolute::new(&f).and_then(|q| check_frame_hom(&q, samples / 2 + 1, &mut g));
                    hom(&mut rep, format!("W_3({name}/𝔞) → W_3"), q);
                    let bad = check_leveled(&RelWittIdeal::new(&f), samples / 2 + 1, &mut g).map_err(CliError::from);
                    if let Some(bad) = rep.record("leveled", name, bad) {
                        rep.push("leveled", format!("W_3({name}/𝔞)"), bad == 0, json!({ "failures": bad }));
                    }
                }
                Err(e) => {
                    rep.push("frame-axioms", format!("W_3({name}/𝔞)"), false, json!({ "error": e.to_string() }))
                }
            }
        }
    }
    for (p, n, k) in [(2, 4, 6), (3, 3, 5)] {
        if cfg.has_prime(p) {
            let r = check_c_relation(p, n, k).map_err(CliError::from);
            if let Some(ok) = rep.record("c-relation", "", r) {
                rep.push("c-relation", format!("p={p}, n={n}, Z/{p}^{k}"), ok, json!({}));
            }
        }
    }
    rep
}

/// Trivial divided powers on `𝔪^{e-1}`, the last nonzero power of the
/// maximal ideal; it squares to zero.
pub fn socle_pd(r: &Arc<FpkAlgebra>) -> CliResult<PdIdeal> {
    let m = r.nilradical();
    let mut e = 1;
    while !m.power(e + 1).is_zero() {
        e += 1;
    }
    Ok(PdIdeal::trivial(&m.power(e))?)
}

/// Duality involution, `dual(unit) = twist`, the `Ext` cross-check and the
/// two-square duality diagram.
pub fn duality_suite(cfg: &SuiteConfig, corpus: &Corpus) -> SuiteReport {
    let mut rep = SuiteReport::new("duality");
    for &p in &cfg.primes {
        let r = fp(p);
        let mut g = cfg.rng(&format!("duality/{p}"));
        for n in [1, 2] {
            let Some(f) = rep.record("involution", "W_n", WittFrame::truncated(&r, n).map_err(Into::into)) else {
                continue;
            };
            involutions(&mut rep, &f, corpus, &format!("W_{n}(F{p})"), &mut g);
        }
        if let Some(f) = rep.record("involution", "sW", ShearedFrame::new(&r, 3, 6).map_err(Into::into)) {
            involutions(&mut rep, &f, corpus, &format!("sW_3(F{p})"), &mut g);
        }
        // H^0(Γ(M))(S) against Hom(A(1), M_S), for carriers of at most 2^10 elements
        for n in [1, 2] {
            let Ok(f) = WittFrame::truncated(&r, n) else { continue };
            for s_name in [format!("F{p}"), format!("F{}", p * p), format!("F{p}[t]/(t^2)")] {
                let Ok(s) = test_ring(&r, &s_name, cfg.budget) else { continue };
                for w in &corpus.windows {
                    let size = (s.ring.size().unwrap_or(u64::MAX) as f64).powi((n * (w.r0 + w.r1)) as i32);
                    if size > 1024.0 {
                        continue;
                    }
                    let subject = format!("{} over W_{n}(F{p}), S={s_name}", w.name);
                    let ok = w.over(&f).and_then(|m| Ok(ext_cross_check(&m, &s)?));
                    if let Some(ok) = rep.record("ext-cross-check", &subject, ok) {
                        rep.push("ext-cross-check", subject, ok, json!({ "carrier_size": size as u64 }));
                    }
                }
            }
        }
    }
    if cfg.has_prime(2) {
        let r = fp(2);
        for &n in &cfg.ns {
            let Ok(f) = WittFrame::truncated(&r, n) else { continue };
            for s_name in ["F2", "F4", "F2[t]/(t^2)"] {
                let Some(s) = rep.record("duality-diagram", s_name, test_ring(&r, s_name, cfg.budget)) else {
                    continue;
                };
                for w in &corpus.windows {
                    let subject = format!("{} over W_{n}(F2), S={s_name}", w.name);
                    let d = w.over(&f).and_then(|m| Ok(duality_diagram_check(&m, &s)?));
                    if let Some(d) = rep.record("duality-diagram", &subject, d) {
                        rep.push("duality-diagram", subject, d.passed(), serde_json::to_value(&d).unwrap());
                    }
                }
            }
        }
    }
    rep
}

fn involutions<F: Frame>(
    rep: &mut SuiteReport,
    f: &Arc<F>,
    corpus: &Corpus,
    frame: &str,
    g: &mut ChaCha8Rng,
) {
    let same = |a: &Window<F>, b: &Window<F>| a.r0 == b.r0 && a.r1 == b.r1 && a.psi == b.psi;
    let dd = |m: &Window<F>| dual_window(m).and_then(|d| dual_window(&d));
    for w in &corpus.windows {
        let r = w.over(f).and_then(|m| Ok((dd(&m)?, m)));
        if let Some((d, m)) = rep.record("involution", &w.name, r) {
            rep.push("involution", format!("{} over {frame}", w.name), same(&d, &m), json!({}));
        }
    }
    let unit = Window::unit(f);
    let ok = dual_window(&unit).is_ok_and(|d| same(&d, &Window::twist(f)));
    rep.push("dual-unit-is-twist", frame, ok, json!({}));
    let mut failures = 0;
    let cases = 20;
    for i in 0..cases {
        let (r0, r1) = (1 + i % 2, 1);
        let m = loop {
            let psi = Mat::from_fn(r0 + r1, r0 + r1, |_, _| f.random0(g));
            if let Ok(m) = Window::new(f, r0, r1, psi) {
                break m;
            }
        };
        if !dd(&m).is_ok_and(|d| same(&d, &m)) {
            failures += 1;
        }
    }
    rep.push("involution", format!("random windows over {frame}"), failures == 0, json!({ "cases": cases, "failures": failures }));
}

/// `S` over its prime field, named as in the corpus.
pub fn test_ring(base: &Arc<FpkAlgebra>, name: &str, budget: u64) -> CliResult<TestRing> {
    let s = parse_ring(name)?;
    let mut t = TestRing::over_prime_field(base, &s, budget)?;
    t.name = name.to_string();
    Ok(t)
}

/// Morphism lifting along `R' → R'/𝔞` on the grid: iteration count `ν`,
/// exactness, and uniqueness under a perturbed start.
pub fn deformation_suite(cfg: &SuiteConfig, corpus: &Corpus) -> SuiteReport {
    let mut rep = SuiteReport::new("deformation");
    for name in corpus.grid.iter().filter(|n| ring_prime(n).is_some_and(|p| cfg.has_prime(p))) {
        let f = parse_ring(name)
            .and_then(|r| socle_pd(&r))
            .and_then(|pd| Ok(RelShearedFrame::new(pd, 2, 8)?));
        let Some(f) = rep.record("deformation", name, f) else { continue };
        let Some(q) = rep.record("deformation", name, RelToAbsolute::new(&f).map_err(Into::into)) else {
            continue;
        };
        let k = RelShearedIdeal::new(&f);
        for (r0, r1) in [(1, 1), (2, 1)] {
            let mut g = cfg.rng(&format!("deformation/{name}/{r0}{r1}"));
            let (mut exact, mut in_nu, mut unique, mut errors) = (0, 0, 0, Vec::new());
            for _ in 0..cfg.cases {
                match deformation_case(&f, &q, &k, r0, r1, &mut g) {
                    Ok((e, i, u)) => {
                        exact += usize::from(e);
                        in_nu += usize::from(i);
                        unique += usize::from(u);
                    }
                    Err(e) => errors.push(e.to_string()),
                }
            }
            let c = cfg.cases;
            rep.push(
                "deformation",
                format!("{name}, (r0, r1) = ({r0}, {r1})"),
                exact == c && in_nu == c && unique == c,
                json!({ "cases": c, "nu": k.nu(), "exact": exact, "iterations_nu": in_nu, "unique": unique,
                        "errors": errors }),
            );
        }
    }
    rep
}

/// A random isomorphism between two windows over `ˢW(R'/𝔞)`, lifted to
/// independently chosen lifts of the windows, twice.
fn deformation_case(
    f: &Arc<RelShearedFrame>,
    q: &RelToAbsolute,
    k: &RelShearedIdeal,
    r0: usize,
    r1: usize,
    g: &mut ChaCha8Rng,
) -> CliResult<(bool, bool, bool)> {
    let fb = q.dst().clone();
    let h = r0 + r1;
    let base = loop {
        let psi = Mat::from_fn(h, h, |_, _| fb.random0(g));
        if let Ok(w) = Window::new(&fb, r0, r1, psi) {
            break w;
        }
    };
    let fbar = random_invertible_morphism(fb.as_ref(), r0, r1, g)?;
    let target = transport(&base, &fbar)?;
    let mut lift = |w: &Window<ShearedFrame>| -> CliResult<Window<RelShearedFrame>> {
        let psi = Mat::try_from_fn(h, h, |i, j| f.add0(&q.lift0(w.psi.get(i, j))?, &k.random_member(g)))?;
        Ok(Window::new(f, r0, r1, psi)?)
    };
    let m = lift(&base)?;
    let m2 = lift(&target)?;
    let l1 = lift_morphism(k, q, &m, &m2, &fbar, None)?;
    let exact = is_morphism(&m, &m2, &l1.morphism)?.holds;
    let z0 = Mat::from_fn(h, h, |_, _| k.random_member(g));
    let l2 = lift_morphism(k, q, &m, &m2, &fbar, Some(&z0))?;
    Ok((exact, l1.iterations == k.nu(), l1.morphism == l2.morphism))
}

/// Point counts of `ˢC_n` over finite fields against the oracles, and the
/// exact triangle over nilpotent test rings.
pub fn points_corpus_suite(cfg: &SuiteConfig, corpus: &Corpus) -> SuiteReport {
    let mut rep = SuiteReport::new("points-corpus");
    let max_n = cfg.ns.iter().copied().max().unwrap_or(1);
    let scale = cfg.level_scale;
    for &p in &cfg.primes {
        let r = fp(p);
        let frame = ShearedFrame::new(&r, scale * (max_n + 2), scale * (max_n + 5)).map_err(CliError::from);
        let Some(frame) = rep.record("point-table", &format!("F{p}"), frame) else { continue };
        let windows: Vec<TableWindow> = corpus
            .windows
            .iter()
            .filter_map(|w| {
                let window = w.over(&frame).ok()?;
                Some(TableWindow {
                    name: w.name.clone(),
                    window,
                    oracle: w.oracle_fn(),
                })
            })
            .collect();
        let rings: Vec<TestRing> = (1..=cfg.max_degree)
            .filter_map(|m| {
                let name = if m == 1 { format!("F{p}") } else { format!("F{}", p.pow(m)) };
                test_ring(&r, &name, cfg.budget).ok()
            })
            .collect();
        let table = point_count_table(&windows, &rings, &cfg.ns, cfg.levels, scale, cfg.threads);
        for c in &table.cells {
            let ok = c.stable && c.error.is_none() && !c.deviation && c.oracle.is_some();
            let subject = format!("{} over {}, n={}", c.window, c.test_ring, c.n);
            let inv = json!({
                "log_order": c.log_order, "h0": c.h0, "oracle": c.oracle,
                "stable": c.stable, "deviation": c.deviation, "error": c.error,
            });
            rep.push_with("point-count", subject, ok, inv, serde_json::to_value(c).unwrap());
        }
        // exact triangle on nilpotent test rings
        let nil = match p {
            2 => vec!["F2[t]/(t^2)", "F2[t]/(t^3)", "F2[x,y]/(x^2,xy,y^2)"],
            _ => vec!["F3[t]/(t^2)", "F9[t]/(t^2)", "F3[t]/(t^3)"],
        };
        for &n in &cfg.ns {
            let prec = scale * (n + 2);
            let tf = ShearedFrame::new(&r, prec, prec + 4).map_err(CliError::from);
            let Some(tf) = rep.record("triangle", &format!("F{p}"), tf) else { continue };
            for s_name in &nil {
                let Some(s) = rep.record("triangle", s_name, test_ring(&r, s_name, cfg.budget)) else { continue };
                for w in &corpus.windows {
                    let subject = format!("{} over {s_name}, n={n}", w.name);
                    let seed = cfg.seed ^ (n as u64) << 32;
                    let t = w
                        .over(&tf)
                        .and_then(|m| Ok(exact_triangle_check(&m, &s, n, prec, prec + 1, cfg.samples / 5 + 1, seed)?));
                    if let Some(t) = rep.record("triangle", &subject, t) {
                        let inv = json!({ "reduced_orders": t.reduced_orders });
                        rep.push_with("triangle", subject, t.passed(), inv, serde_json::to_value(&t).unwrap());
                    }
                }
            }
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// window files

/// A window over one of the frames that can be named by id.
#[derive(Debug, Clone)]
pub enum AnyWindow {
    Witt(Window<WittFrame>),
    Sheared(Window<ShearedFrame>),
}

impl AnyWindow {
    pub fn to_json(&self) -> WindowJson {
        match self {
            AnyWindow::Witt(w) => w.to_json(),
            AnyWindow::Sheared(w) => w.to_json(),
        }
    }

    pub fn dual(&self) -> CliResult<AnyWindow> {
        Ok(match self {
            AnyWindow::Witt(w) => AnyWindow::Witt(dual_window(w)?),
            AnyWindow::Sheared(w) => AnyWindow::Sheared(dual_window(w)?),
        })
    }

    pub fn frame_id(&self) -> String {
        self.to_json().frame_id
    }
}

/// A frame named by id: `witt-n(R,n)`, `witt-prec(R,n)` or `sheared(R,N,B)`.
#[derive(Clone)]
pub enum AnyFrame {
    Witt(Arc<WittFrame>),
    Sheared(Arc<ShearedFrame>),
}

fn split_args(id: &str, head: &str, count: usize) -> Option<Vec<String>> {
    let inner = id.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')?;
    // the ring name may itself contain commas, so split from the right
    let mut parts: Vec<String> = inner.rsplitn(count, ',').map(|s| s.trim().to_string()).collect();
    parts.reverse();
    (parts.len() == count).then_some(parts)
}

pub fn parse_frame(id: &str) -> CliResult<AnyFrame> {
    let unknown = || CliError::UnknownFrame(id.to_string());
    let num = |s: &str| s.parse::<usize>().map_err(|_| unknown());
    if let Some(a) = split_args(id, "witt-n", 2) {
        return Ok(AnyFrame::Witt(WittFrame::truncated(&parse_ring(&a[0])?, num(&a[1])?)?));
    }
    if let Some(a) = split_args(id, "witt-prec", 2) {
        return Ok(AnyFrame::Witt(WittFrame::precision(&parse_ring(&a[0])?, num(&a[1])?)?));
    }
    if let Some(a) = split_args(id, "sheared", 3) {
        return Ok(AnyFrame::Sheared(ShearedFrame::new(&parse_ring(&a[0])?, num(&a[1])?, num(&a[2])?)?));
    }
    Err(unknown())
}

impl AnyFrame {
    pub fn window(&self, w: &WindowSpec) -> CliResult<AnyWindow> {
        Ok(match self {
            AnyFrame::Witt(f) => AnyWindow::Witt(w.over(f)?),
            AnyFrame::Sheared(f) => AnyWindow::Sheared(w.over(f)?),
        })
    }
}

/// Structural validation of a window file, reporting field paths.
fn check_window_shape(v: &Value) -> CliResult<WindowJson> {
    let obj = v.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    for key in obj.keys() {
        if !["frame_id", "r0", "r1", "psi"].contains(&key.as_str()) {
            return Err(schema(&format!("$.{key}"), "unknown field"));
        }
    }
    let frame_id = obj
        .get("frame_id")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("$.frame_id", "expected a string"))?;
    let rank = |k: &str| {
        obj.get(k)
            .and_then(Value::as_u64)
            .ok_or_else(|| schema(&format!("$.{k}"), "expected a non-negative integer"))
    };
    let (r0, r1) = (rank("r0")? as usize, rank("r1")? as usize);
    let h = r0 + r1;
    let rows = obj
        .get("psi")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("$.psi", "expected an array of rows"))?;
    if rows.len() != h {
        return Err(schema("$.psi", format!("expected {h} rows, found {}", rows.len())));
    }
    let mut psi = Vec::with_capacity(h);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| schema(&format!("$.psi[{i}]"), "expected an array"))?;
        if row.len() != h {
            return Err(schema(&format!("$.psi[{i}]"), format!("expected {h} entries, found {}", row.len())));
        }
        psi.push(row.clone());
    }
    Ok(WindowJson {
        frame_id: frame_id.to_string(),
        r0,
        r1,
        psi,
    })
}

/// Determinant by cofactor expansion along the first row.
fn det<F: Frame>(f: &F, m: &[Vec<F::A0>]) -> Result<F::A0, FrameError> {
    let n = m.len();
    if n == 0 {
        return Ok(f.one0());
    }
    let mut acc = f.zero0();
    for j in 0..n {
        let minor: Vec<Vec<F::A0>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let t = f.mul0(&m[0][j], &det(f, &minor)?)?;
        acc = if j % 2 == 0 { f.add0(&acc, &t)? } else { f.sub0(&acc, &t)? };
    }
    Ok(acc)
}

fn decode_window<F: Frame>(f: &Arc<F>, j: &WindowJson) -> CliResult<Window<F>> {
    let mut rows = Vec::with_capacity(j.psi.len());
    for (i, row) in j.psi.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (c, v) in row.iter().enumerate() {
            out.push(f.from_json0(v).map_err(|e| schema(&format!("$.psi[{i}][{c}]"), e.to_string()))?);
        }
        rows.push(out);
    }
    let h = j.r0 + j.r1;
    let m = if h == 0 { Mat::from_fn(0, 0, |_, _| f.zero0()) } else { Mat::from_rows(rows.clone(), h)? };
    match Window::new(f, j.r0, j.r1, m) {
        Ok(w) => Ok(w),
        Err(FrameError::Singular | FrameError::NotUnit) => {
            let d = if h <= 6 { f.to_json0(&det(f.as_ref(), &rows)?).to_string() } else { "?".into() };
            Err(CliError::NotInvertible(d))
        }
        Err(e) => Err(e.into()),
    }
}

/// Parse and validate a window file.
pub fn import_window(text: &str) -> CliResult<AnyWindow> {
    let v: Value = serde_json::from_str(text)?;
    let j = check_window_shape(&v)?;
    match parse_frame(&j.frame_id) {
        Ok(AnyFrame::Witt(f)) => Ok(AnyWindow::Witt(decode_window(&f, &j)?)),
        Ok(AnyFrame::Sheared(f)) => Ok(AnyWindow::Sheared(decode_window(&f, &j)?)),
        Err(CliError::UnknownFrame(_) | CliError::UnknownRing(_)) => Err(schema(
            "$.frame_id",
            format!("unknown frame id {:?}", j.frame_id),
        )),
        Err(e) => Err(e),
    }
}

/// Canonical window file: pretty JSON with a trailing newline. Importing and
/// re-exporting a canonical file reproduces it byte for byte.
pub fn export_window(w: &AnyWindow) -> String {
    let mut s = serde_json::to_string_pretty(&w.to_json()).expect("window serializes");
    s.push('\n');
    s
}

/// Morphism file: the four blocks `a: L_0 → L_0'`, `b: L_0 → L_1'` (in the
/// filtration), `c: L_1 → L_0'`, `e: L_1 → L_1'` as nested JSON rows.
pub fn morphism_to_json<F: Frame>(f: &F, m: &WindowMorphism<F>) -> Value {
    json!({
        "a": m.a.map(|x| f.to_json0(x)).rows_vec(),
        "b": m.b.map(|y| f.to_json1(y)).rows_vec(),
        "c": m.c.map(|x| f.to_json0(x)).rows_vec(),
        "e": m.e.map(|x| f.to_json0(x)).rows_vec(),
    })
}

pub fn morphism_from_json<F: Frame>(
    f: &F,
    src: &Window<F>,
    dst: &Window<F>,
    v: &Value,
) -> CliResult<WindowMorphism<F>> {
    fn block<T: Clone>(
        v: &Value,
        key: &str,
        rows: usize,
        cols: usize,
        mut dec: impl FnMut(&Value) -> Result<T, FrameError>,
        zero: T,
    ) -> CliResult<Mat<T>> {
        let arr = v
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| schema(&format!("$.{key}"), "expected an array of rows"))?;
        if arr.len() != rows {
            return Err(schema(&format!("$.{key}"), format!("expected {rows} rows, found {}", arr.len())));
        }
        if rows == 0 || cols == 0 {
            return Ok(Mat::from_fn(rows, cols, |_, _| zero.clone()));
        }
        let mut out = Vec::with_capacity(rows);
        for (i, row) in arr.iter().enumerate() {
            let row = row
                .as_array()
                .filter(|r| r.len() == cols)
                .ok_or_else(|| schema(&format!("$.{key}[{i}]"), format!("expected {cols} entries")))?;
            let mut r = Vec::with_capacity(cols);
            for (j, x) in row.iter().enumerate() {
                r.push(dec(x).map_err(|e| schema(&format!("$.{key}[{i}][{j}]"), e.to_string()))?);
            }
            out.push(r);
        }
        Ok(Mat::from_rows(out, cols)?)
    }
    Ok(WindowMorphism {
        a: block(v, "a", dst.r0, src.r0, |x| f.from_json0(x), f.zero0())?,
        b: block(v, "b", dst.r1, src.r0, |x| f.from_json1(x), f.zero1())?,
        c: block(v, "c", dst.r0, src.r1, |x| f.from_json0(x), f.zero0())?,
        e: block(v, "e", dst.r1, src.r1, |x| f.from_json0(x), f.zero0())?,
    })
}

/// Whether `v` is a morphism `src → dst`, with the residual `Ψ'Y - XΨ`.
pub fn check_morphism_json(src: &AnyWindow, dst: &AnyWindow, v: &Value) -> CliResult<Value> {
    fn go<F: Frame>(s: &Window<F>, d: &Window<F>, v: &Value) -> CliResult<Value> {
        let f = s.frame.as_ref();
        let m = morphism_from_json(f, s, d, v)?;
        let c = is_morphism(s, d, &m)?;
        Ok(json!({ "holds": c.holds, "residual": c.residual.map(|x| f.to_json0(x)).rows_vec() }))
    }
    match (src, dst) {
        (AnyWindow::Witt(s), AnyWindow::Witt(d)) if s.frame.id() == d.frame.id() => go(s, d, v),
        (AnyWindow::Sheared(s), AnyWindow::Sheared(d)) if s.frame.id() == d.frame.id() => go(s, d, v),
        _ => Err(CliError::Config("source and target windows live over different frames".into())),
    }
}

/// A random invertible morphism out of `m` and the window it transports `m` to.
pub fn random_transport(m: &AnyWindow, seed: u64) -> CliResult<(AnyWindow, Value)> {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    Ok(match m {
        AnyWindow::Witt(w) => {
            let f = random_invertible_morphism(w.frame.as_ref(), w.r0, w.r1, &mut g)?;
            (AnyWindow::Witt(transport(w, &f)?), morphism_to_json(w.frame.as_ref(), &f))
        }
        AnyWindow::Sheared(w) => {
            let f = random_invertible_morphism(w.frame.as_ref(), w.r0, w.r1, &mut g)?;
            (AnyWindow::Sheared(transport(w, &f)?), morphism_to_json(w.frame.as_ref(), &f))
        }
    })
}

/// Base change along `R → S` for a window over a frame on the prime field
/// `R`, or truncation `W_n → W_m` when `truncate` is given.
pub fn base_change_window(m: &AnyWindow, to_ring: Option<&str>, truncate: Option<usize>) -> CliResult<AnyWindow> {
    let hom_to = |base: &Arc<FpkAlgebra>, name: &str| -> CliResult<RingHom> {
        let s = parse_ring(name)?;
        if base.rank() != 1 || base.k() != 1 {
            return Err(CliError::Config(format!("base change needs a prime-field base, not {}", base.name())));
        }
        Ok(RingHom::new(base.clone(), s.clone(), vec![s.one()])?)
    };
    Ok(match (m, to_ring, truncate) {
        (AnyWindow::Witt(w), None, Some(k)) => AnyWindow::Witt(base_change(w, &WittTruncation::new(&w.frame, k)?)?),
        (AnyWindow::Witt(w), Some(s), None) => {
            let h = WittRingChange::new(&w.frame, hom_to(w.frame.base_ring(), s)?)?;
            AnyWindow::Witt(base_change(w, &h)?)
        }
        (AnyWindow::Sheared(w), Some(s), None) => {
            let h = ShearedRingChange::new(&w.frame, hom_to(w.frame.base_ring(), s)?)?;
            AnyWindow::Sheared(base_change(w, &h)?)
        }
        (AnyWindow::Sheared(w), None, None) => AnyWindow::Witt(base_change(w, &frame_hom_c(&w.frame)?)?),
        _ => return Err(CliError::Config("give either a target ring or a truncation length".into())),
    })
}

/// One deformation case on `ring`: lift a random isomorphism of windows over
/// `ˢW(R/𝔞)` to given lifts over `ˢW(R)`, from two starting points.
pub fn deformation_demo(ring: &str, r0: usize, r1: usize, seed: u64) -> CliResult<Value> {
    let r = parse_ring(ring)?;
    let f = RelShearedFrame::new(socle_pd(&r)?, 2, 8)?;
    let q = RelToAbsolute::new(&f)?;
    let k = RelShearedIdeal::new(&f);
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let (exact, in_nu, unique) = deformation_case(&f, &q, &k, r0, r1, &mut g)?;
    Ok(json!({
        "frame": f.id(),
        "nu": k.nu(),
        "lift_is_morphism": exact,
        "iterations_equal_nu": in_nu,
        "unique": unique,
    }))
}

/// Named ring summary for the `ring` subcommand.
pub fn ring_info(name: &str) -> CliResult<Value> {
    let r = parse_ring(name)?;
    let nil = r.nilradical();
    Ok(json!({
        "name": name,
        "library_name": r.name(),
        "p": r.p(),
        "char_exponent": r.k(),
        "rank": r.rank(),
        "size": r.size(),
        "fp_algebra": r.is_fp_algebra(),
        "nilradical_log_size": nil.log_size(),
        "reduced": nil.is_zero(),
    }))
}

/// Window summary for the `display` subcommand.
pub fn window_info(w: &AnyWindow) -> Value {
    let j = w.to_json();
    json!({
        "frame_id": j.frame_id,
        "height": j.r0 + j.r1,
        "dimension": j.r0,
        "window_id": match w {
            AnyWindow::Witt(m) => crate::point_functors::window_id(m),
            AnyWindow::Sheared(m) => crate::point_functors::window_id(m),
        },
        "window": j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_names_round_trip() {
        for name in Corpus::standard().rings {
            let r = parse_ring(&name).unwrap();
            assert_eq!(parse_ring(r.name()).unwrap().name(), r.name(), "{name}");
        }
        assert!(parse_ring("F6").is_err());
        assert!(parse_ring("F16[t]/(t^1)").is_err());
        assert!(parse_ring("Q").is_err());
        assert_eq!(parse_ring("F3[t]/t^3").unwrap().size(), Some(27));
        assert_eq!(parse_ring("F4[eps]").unwrap().size(), Some(16));
    }

    #[test]
    fn corpus_is_valid() {
        let c = Corpus::standard();
        assert_eq!(c.validate(), Vec::<String>::new());
        assert_eq!(c.hash(), Corpus::standard().hash());
        assert_eq!(c.grid.len(), 6);
    }

    #[test]
    fn frame_ids_parse() {
        for id in ["witt-n(F2,2)", "witt-prec(F2[t]/(t^2),3)", "sheared(GR(2^2,2),3,6)", "sheared(F2,3,6)"] {
            match parse_frame(id) {
                Ok(AnyFrame::Witt(f)) => assert_eq!(f.id(), id),
                Ok(AnyFrame::Sheared(f)) => assert_eq!(f.id(), id),
                Err(e) => assert!(id.starts_with("sheared(GR"), "{id}: {e}"),
            }
        }
        assert!(matches!(parse_frame("crystal(F2,1)"), Err(CliError::UnknownFrame(_))));
    }

    #[test]
    fn window_files() {
        let c = Corpus::standard();
        let f = parse_frame("witt-n(F2,2)").unwrap();
        for w in &c.windows {
            let text = export_window(&f.window(w).unwrap());
            assert_eq!(export_window(&import_window(&text).unwrap()), text);
        }
        let singular = r#"{"frame_id":"witt-n(F2,2)","r0":1,"r1":1,"psi":[[[[1],[0]],[[1],[0]]],[[[1],[0]],[[1],[0]]]]}"#;
        assert!(matches!(import_window(singular), Err(CliError::NotInvertible(_))));
        let unknown = r#"{"frame_id":"lubin-tate(F2)","r0":1,"r1":0,"psi":[[1]]}"#;
        match import_window(unknown) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "$.frame_id"),
            other => panic!("{other:?}"),
        }
        let short = r#"{"frame_id":"witt-n(F2,2)","r0":1,"r1":1,"psi":[[1,0]]}"#;
        match import_window(short) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "$.psi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_guards() {
        let mut c = SuiteConfig::default();
        assert!(c.validate().is_ok());
        c.primes = vec![5];
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        assert!(matches!(run_suite("nope", &SuiteConfig::default()), Err(CliError::UnknownSuite(_))));
    }
}
