//! Acceptance criteria 1 to 11, run in sequence with one line per criterion.
//!
//! Each criterion asserts its runtime bound. The process exits nonzero if
//! any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use shearwitt::cli::{deformation_suite, parse_ring, run_suite, test_ring, Corpus, SuiteConfig};
use shearwitt::frame_instances::{ShearedFrame, WittFrame};
use shearwitt::frames::{dual_window, Frame, Mat, Window};
use shearwitt::point_functors::{
    duality_diagram_check, exact_triangle_check, ext_cross_check, oracles, point_count_table, TableWindow, TestRing,
};
use shearwitt::ring_base::std_rings::fp;
use shearwitt::sheared_witt::{check_kernel_sequence, check_vn_wn_sequence, f_invariants, ShearedRing};
use shearwitt::witt::{check_divided_powers, check_vtilde_identities, check_witt_laws, compute_u0_alpha_ptilde, WittRing};

const SAMPLES: usize = 100;
const BUDGET: u64 = 1 << 20;

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome { ok, detail: detail.into() }
    }
}

fn rng(label: &str) -> ChaCha8Rng {
    let seed = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed)
}

fn witt(name: &str, len: usize) -> WittRing {
    WittRing::new(&parse_ring(name).expect(name), len).expect(name)
}

fn grid() -> Vec<String> {
    Corpus::standard().grid
}

// ---------------------------------------------------------------------------

fn witt_laws() -> Outcome {
    let rings = [
        "F2", "F4", "F8", "F2[t]/(t^2)", "F2[t]/(t^3)", "Z/2^2", "Z/2^3", "GR(2^2,2)", "F3", "F9", "F3[t]/(t^2)",
        "Z/3^2",
    ];
    let mut bad = Vec::new();
    let mut primes = BTreeSet::new();
    let mut samples = 0;
    for name in rings {
        let w = witt(name, 5);
        primes.insert(w.p());
        let mut g = rng(name);
        for len in 1..=4 {
            let r = check_witt_laws(&w, len, SAMPLES, &mut g);
            samples += r.samples;
            if !r.passed() || r.samples < SAMPLES {
                bad.push(format!("W_{len}({name}): {:?}", r.counterexamples.first()));
            }
        }
    }
    let ok = bad.is_empty() && rings.len() >= 10 && primes.len() == 2;
    Outcome::new(ok, format!("{} rings, lengths 1..=4, {samples} samples, failures {bad:?}", rings.len()))
}

fn constants() -> Outcome {
    let mut bad = Vec::new();
    let n = 4;
    if let Err(e) = compute_u0_alpha_ptilde(2, n, 5) {
        bad.push(format!("p=2 constants: {e}"));
    }
    let w = witt("Z/2^5", n + 1);
    let ext = |x: Vec<Vec<u64>>| [vec![vec![0u64]], x].concat();
    if ext(w.u0(n - 1)) != w.sub(&w.from_int(2, n), &w.teich(&[2], n)) {
        bad.push("V(u0) != 2-[2]".into());
    }
    if w.frobenius_drop(&ext(w.u0(n))) != w.sub(&w.from_int(2, n), &w.teich(&[4], n)) {
        bad.push("p~ != 2-[4]".into());
    }
    if w.ptilde(n) != w.sub(&w.from_int(2, n), &w.teich(&[4], n)) {
        bad.push("stored p~ != 2-[4]".into());
    }
    match compute_u0_alpha_ptilde(3, n, 2) {
        Ok(c) => {
            let one: Vec<u64> = (0..c.n).map(|i| u64::from(i == 0)).collect();
            if c.u0 != one || c.alpha != one {
                bad.push(format!("p=3: u0={:?} alpha={:?}", c.u0, c.alpha));
            }
        }
        Err(e) => bad.push(format!("p=3 constants: {e}")),
    }
    for name in ["Z/2^3", "Z/2^4", "F2[t]/(t^2)", "F4", "GR(2^2,2)", "Z/3^2", "F9", "F3[t]/(t^2)"] {
        let w = witt(name, 5);
        let r = check_vtilde_identities(&w, 4, SAMPLES, &mut rng(name));
        if !r.passed() || r.samples < SAMPLES {
            bad.push(format!("{name}: {:?}", r.counterexamples.first()));
        }
    }
    Outcome::new(bad.is_empty(), format!("precision {n}, 8 rings for the Ṽ identities, failures {bad:?}"))
}

fn divided_powers() -> Outcome {
    let rings = ["F2", "F4", "F2[t]/(t^2)", "F2[t]/(t^3)", "F3", "F9", "F3[t]/(t^2)", "Z/3^2"];
    let mut bad = Vec::new();
    for name in rings {
        let w = witt(name, 4);
        let r = check_divided_powers(&w, 4, 2 * w.p(), SAMPLES, &mut rng(name));
        if !r.passed() || r.samples < SAMPLES {
            bad.push(format!("{name}: {:?}", r.counterexamples.first()));
        }
    }
    Outcome::new(bad.is_empty(), format!("{} rings, γ_m for m ≤ 2p, failures {bad:?}", rings.len()))
}

fn sheared_exactness() -> Outcome {
    let mut bad = Vec::new();
    let mut least = usize::MAX;
    let rings = grid();
    for name in &rings {
        let sr = ShearedRing::new(&parse_ring(name).unwrap(), 4, 12).expect(name);
        let mut g = rng(name);
        let mut reps = vec![check_kernel_sequence(&sr, sr.nilradical(), SAMPLES, &mut g).expect(name)];
        for n in 1..=2 {
            reps.push(check_vn_wn_sequence(&sr, n, SAMPLES, &mut g).expect(name));
        }
        for r in reps {
            least = least.min(r.witnesses);
            if r.failures > 0 || r.witnesses < 50 {
                bad.push(format!("{} over {name}: {} failures, {} witnesses", r.check, r.failures, r.witnesses));
            }
        }
    }
    let ok = bad.is_empty() && rings.len() >= 6;
    Outcome::new(ok, format!("{} rings, N=4, B=12, least witness count {least}, failures {bad:?}", rings.len()))
}

fn f_invariant_count() -> Outcome {
    let mut bad = Vec::new();
    for name in grid() {
        let r = parse_ring(&name).unwrap();
        for big_n in 2..=4 {
            let sr = ShearedRing::new(&r, big_n, big_n + 6).unwrap();
            let fi = f_invariants(&sr).expect(&name);
            if fi.log_count != big_n as u32 || !fi.cyclic {
                bad.push(format!("{name}, N={big_n}: {fi:?}"));
            }
        }
    }
    Outcome::new(bad.is_empty(), format!("grid × N ∈ {{2,3,4}}, failures {bad:?}"))
}

fn same<F: Frame>(a: &Window<F>, b: &Window<F>) -> bool {
    a.r0 == b.r0 && a.r1 == b.r1 && a.psi == b.psi
}

fn involution_failures<F: Frame>(f: &Arc<F>, corpus: &Corpus, g: &mut ChaCha8Rng) -> Vec<String> {
    let dd = |m: &Window<F>| dual_window(m).and_then(|d| dual_window(&d));
    let mut bad = Vec::new();
    for w in &corpus.windows {
        let m = w.over(f).unwrap();
        if !dd(&m).is_ok_and(|d| same(&d, &m)) {
            bad.push(format!("{} over {}", w.name, f.id()));
        }
    }
    if !dual_window(&Window::unit(f)).is_ok_and(|d| same(&d, &Window::twist(f))) {
        bad.push(format!("dual(unit) over {}", f.id()));
    }
    for i in 0..20 {
        let (r0, r1) = (1 + i % 2, 1);
        let m = loop {
            let psi = Mat::from_fn(r0 + r1, r0 + r1, |_, _| f.random0(g));
            if let Ok(m) = Window::new(f, r0, r1, psi) {
                break m;
            }
        };
        if !dd(&m).is_ok_and(|d| same(&d, &m)) {
            bad.push(format!("random window {i} over {}", f.id()));
        }
    }
    bad
}

fn window_core() -> Outcome {
    let corpus = Corpus::standard();
    let mut bad = Vec::new();
    let mut ext_checks = 0;
    for p in [2, 3] {
        let r = fp(p);
        let mut g = rng(&format!("window-core/{p}"));
        for n in [1, 2] {
            bad.extend(involution_failures(&WittFrame::truncated(&r, n).unwrap(), &corpus, &mut g));
        }
        bad.extend(involution_failures(&ShearedFrame::new(&r, 3, 6).unwrap(), &corpus, &mut g));
        for n in [1, 2] {
            let f = WittFrame::truncated(&r, n).unwrap();
            for s_name in [format!("F{p}"), format!("F{}", p * p), format!("F{p}[t]/(t^2)")] {
                let s = test_ring(&r, &s_name, BUDGET).unwrap();
                let size = s.ring.size().unwrap();
                for w in &corpus.windows {
                    if size.checked_pow((n * (w.r0 + w.r1)) as u32).map_or(true, |c| c > 1 << 10) {
                        continue;
                    }
                    ext_checks += 1;
                    let m = w.over(&f).unwrap();
                    if !ext_cross_check(&m, &s).unwrap_or(false) {
                        bad.push(format!("Ext: {} over W_{n}(F{p}), S={s_name}", w.name));
                    }
                }
            }
        }
    }
    let ok = bad.is_empty() && ext_checks > 0;
    Outcome::new(ok, format!("involutions, dual(unit)=twist, {ext_checks} Ext cross-checks, failures {bad:?}"))
}

fn deformation() -> Outcome {
    let cfg = SuiteConfig::default();
    let corpus = Corpus::standard();
    let rep = deformation_suite(&cfg, &corpus);
    let mut bad = Vec::new();
    let mut points = BTreeSet::new();
    for l in &rep.lines {
        let cases = l.detail.get("cases").and_then(Value::as_u64).unwrap_or(0);
        points.insert(l.subject.split(',').next().unwrap_or("").to_string());
        if !l.passed || cases < 20 {
            bad.push(format!("{}: {}", l.subject, l.detail));
        }
    }
    let ok = bad.is_empty() && points.len() == corpus.grid.len();
    Outcome::new(ok, format!("{} grid rings, {} (r0, r1) cells, 20 cases each, failures {bad:?}", points.len(), rep.lines.len()))
}

// ---------------------------------------------------------------------------
// brute-force oracle over the Galois ring W_n(F_q) = (Z/p^n)[x]/(f)

/// Monic lifts of the defining polynomials of `F_{p^m}`, low coefficients first.
fn field_poly(p: u64, m: usize) -> Vec<u64> {
    match (p, m) {
        (_, 1) => vec![0],
        (2, 2) => vec![1, 1],
        (2, 3) => vec![1, 1, 0],
        (3, 2) => vec![1, 0],
        (3, 3) => vec![1, 2, 0],
        _ => unreachable!(),
    }
}

struct GaloisRing {
    p: u64,
    q: u64,
    m: usize,
    f: Vec<u64>,
}

impl GaloisRing {
    fn size(&self) -> usize {
        self.q.pow(self.m as u32) as usize
    }

    fn elem(&self, mut i: usize) -> Vec<u64> {
        (0..self.m)
            .map(|_| {
                let d = i as u64 % self.q;
                i /= self.q as usize;
                d
            })
            .collect()
    }

    fn index(&self, x: &[u64]) -> usize {
        x.iter().rev().fold(0, |acc, &d| acc * self.q as usize + d as usize)
    }

    fn add(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        x.iter().zip(y).map(|(a, b)| (a + b) % self.q).collect()
    }

    fn scale(&self, c: i64, x: &[u64]) -> Vec<u64> {
        let c = c.rem_euclid(self.q as i64) as u64;
        x.iter().map(|a| a * c % self.q).collect()
    }

    fn mul(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let m = self.m;
        let mut prod = vec![0u64; 2 * m];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % self.q;
            }
        }
        // x^m = -(f_0 + f_1 x + ...)
        for d in (m..2 * m).rev() {
            let c = prod[d];
            prod[d] = 0;
            for (i, fi) in self.f.iter().enumerate() {
                prod[d - m + i] = (prod[d - m + i] + self.q * self.q - c * fi % self.q) % self.q;
            }
        }
        prod.truncate(m);
        prod
    }

    fn pow(&self, x: &[u64], e: u64) -> Vec<u64> {
        let mut one = vec![0; self.m];
        one[0] = 1;
        (0..e).fold(one, |acc, _| self.mul(&acc, x))
    }

    /// Table of the Frobenius automorphism: the root of `f` lifting `x^p`
    /// is found by search.
    fn frobenius(&self) -> Vec<usize> {
        if self.m == 1 {
            return (0..self.size()).collect();
        }
        let mut gen = vec![0; self.m];
        gen[1] = 1;
        let target: Vec<u64> = self.pow(&gen, self.p).iter().map(|c| c % self.p).collect();
        let eval_f = |b: &[u64]| {
            let mut acc = self.pow(b, self.m as u64);
            for (i, &fi) in self.f.iter().enumerate() {
                acc = self.add(&acc, &self.scale(fi as i64, &self.pow(b, i as u64)));
            }
            acc
        };
        let roots: Vec<Vec<u64>> = (0..self.size())
            .map(|i| self.elem(i))
            .filter(|b| b.iter().map(|c| c % self.p).eq(target.iter().copied()))
            .filter(|b| eval_f(b).iter().all(|&c| c == 0))
            .collect();
        assert_eq!(roots.len(), 1, "Frobenius root is unique");
        let beta = &roots[0];
        (0..self.size())
            .map(|i| {
                let x = self.elem(i);
                let y = x.iter().enumerate().fold(vec![0; self.m], |acc, (j, &c)| {
                    self.add(&acc, &self.scale(c as i64, &self.pow(beta, j as u64)))
                });
                self.index(&y)
            })
            .collect()
    }
}

/// `log_p` of the number of `(a, b) ∈ W_n(F_q)^{r0} × W_n(F_q)^{r1}` with
/// `(V a, b) = Ψ (a, σ b)`, where `V = p σ^{-1}`.
fn brute_force_log_count(p: u64, m: usize, n: usize, r0: usize, r1: usize, psi: &[Vec<i64>]) -> u32 {
    let gr = GaloisRing { p, q: p.pow(n as u32), m, f: field_poly(p, m).iter().map(|&c| c % p.pow(n as u32)).collect() };
    let size = gr.size();
    let sigma = gr.frobenius();
    let mut sigma_inv = vec![0; size];
    for (i, &j) in sigma.iter().enumerate() {
        sigma_inv[j] = i;
    }
    let elems: Vec<Vec<u64>> = (0..size).map(|i| gr.elem(i)).collect();
    let v: Vec<usize> = (0..size).map(|i| gr.index(&gr.scale(p as i64, &elems[sigma_inv[i]]))).collect();
    let h = r0 + r1;
    let total = size.pow(h as u32);
    let mut count = 0u64;
    for code in 0..total {
        let u: Vec<usize> = (0..h).map(|i| code / size.pow(i as u32) % size).collect();
        let lhs: Vec<usize> = (0..h).map(|i| if i < r0 { v[u[i]] } else { u[i] }).collect();
        let twisted: Vec<usize> = (0..h).map(|j| if j < r0 { u[j] } else { sigma[u[j]] }).collect();
        let solves = (0..h).all(|i| {
            let rhs = (0..h).fold(vec![0; m], |acc, j| gr.add(&acc, &gr.scale(psi[i][j], &elems[twisted[j]])));
            gr.index(&rhs) == lhs[i]
        });
        count += u64::from(solves);
    }
    let mut log = 0;
    let mut c = count;
    while c > 1 {
        assert_eq!(c % p, 0, "solution count {count} is not a power of {p}");
        c /= p;
        log += 1;
    }
    log
}

fn point_counts() -> Outcome {
    let corpus = Corpus::standard();
    let mut bad = Vec::new();
    let mut cells = 0;
    for p in [2u64, 3] {
        let r = fp(p);
        let frame = ShearedFrame::new(&r, 4, 7).unwrap();
        let windows: Vec<TableWindow> = corpus
            .windows
            .iter()
            .map(|w| TableWindow { name: w.name.clone(), window: w.over(&frame).unwrap(), oracle: w.oracle_fn() })
            .collect();
        let names: Vec<(usize, String)> =
            (1..=3).map(|m| (m, if m == 1 { format!("F{p}") } else { format!("F{}", p.pow(m as u32)) })).collect();
        let rings: Vec<TestRing> = names.iter().map(|(_, s)| test_ring(&r, s, BUDGET).unwrap()).collect();
        let table = point_count_table(&windows, &rings, &[1, 2], 2, 1, shearwitt::point_functors::default_threads());
        for c in &table.cells {
            cells += 1;
            let m = names.iter().find(|(_, s)| *s == c.test_ring).unwrap().0;
            let w = corpus.window(&c.window).unwrap();
            let brute = brute_force_log_count(p, m, c.n, w.r0, w.r1, &w.psi);
            let closed = match c.window.as_str() {
                "unit" => oracles::unit(p, c.n),
                "twist" => oracles::twist(p, c.n),
                "ordinary" => oracles::ordinary(p, c.n),
                _ => oracles::supersingular(p, c.n),
            };
            if c.log_order != Some(brute) || closed != brute || !c.stable {
                bad.push(format!("{} over {}, n={}: table {:?}, brute force {brute}, closed form {closed}",
                    c.window, c.test_ring, c.n, c.log_order));
            }
        }
    }
    Outcome::new(bad.is_empty() && cells == 48, format!("{cells} cells against the Galois-ring count, failures {bad:?}"))
}

fn triangle() -> Outcome {
    let corpus = Corpus::standard();
    let mut bad = Vec::new();
    let mut cases = 0;
    for (p, nil) in [
        (2, ["F2[t]/(t^2)", "F2[t]/(t^3)", "F2[x,y]/(x^2,xy,y^2)"]),
        (3, ["F3[t]/(t^2)", "F9[t]/(t^2)", "F3[t]/(t^3)"]),
    ] {
        let r = fp(p);
        for n in [1, 2] {
            let prec = n + 2;
            let f = ShearedFrame::new(&r, prec, prec + 4).unwrap();
            for s_name in nil {
                let s = test_ring(&r, s_name, BUDGET).unwrap();
                for w in &corpus.windows {
                    cases += 1;
                    let t = exact_triangle_check(&w.over(&f).unwrap(), &s, n, prec, prec + 1, 21, 7 + n as u64);
                    match t {
                        Ok(t) if t.passed() => {}
                        Ok(t) => bad.push(format!("{} over {s_name}, n={n}: {}", w.name, serde_json::to_string(&t).unwrap())),
                        Err(e) => bad.push(format!("{} over {s_name}, n={n}: {e}", w.name)),
                    }
                }
            }
        }
    }
    Outcome::new(bad.is_empty(), format!("{cases} (window, ring, n) cases, failures {bad:?}"))
}

fn duality_diagram() -> Outcome {
    let corpus = Corpus::standard();
    let r = fp(2);
    let mut bad = Vec::new();
    let mut cases = 0;
    for n in [1, 2] {
        let f = WittFrame::truncated(&r, n).unwrap();
        for s_name in ["F2", "F4", "F2[t]/(t^2)"] {
            let s = test_ring(&r, s_name, BUDGET).unwrap();
            for w in &corpus.windows {
                cases += 1;
                match duality_diagram_check(&w.over(&f).unwrap(), &s) {
                    Ok(d) if d.passed() => {}
                    Ok(d) => bad.push(format!("{} over {s_name}, n={n}: {}", w.name, serde_json::to_string(&d).unwrap())),
                    Err(e) => bad.push(format!("{} over {s_name}, n={n}: {e}", w.name)),
                }
            }
        }
    }
    Outcome::new(bad.is_empty(), format!("{cases} cases, failures {bad:?}"))
}

fn stabilization() -> Outcome {
    let base = SuiteConfig::default();
    let doubled = SuiteConfig { level_scale: 2, levels: 2 * base.levels, ..base.clone() };
    let a = run_suite("points-corpus", &base).unwrap();
    let b = run_suite("points-corpus", &doubled).unwrap();
    let ja = serde_json::to_string_pretty(&a.invariants()).unwrap();
    let jb = serde_json::to_string_pretty(&b.invariants()).unwrap();
    let ok = a.passed() && b.passed() && ja == jb;
    Outcome::new(
        ok,
        format!("points-corpus at scale 1 and 2: {} checks, {} and {} failures, identical={}", a.suites[0].checks,
            a.failures, b.failures, ja == jb),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome, u64); 11] = [
        (1, "Witt laws", witt_laws, 30),
        (2, "modified Verschiebung constants", constants, 10),
        (3, "divided powers", divided_powers, 30),
        (4, "sheared exactness", sheared_exactness, 120),
        (5, "F-invariant count", f_invariant_count, 60),
        (6, "window core", window_core, 60),
        (7, "deformation lifting", deformation, 120),
        (8, "point-count corpus", point_counts, 300),
        (9, "exact triangle", triangle, 180),
        (10, "duality diagram", duality_diagram, 120),
        (11, "stabilization regression", stabilization, 600),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run, bound) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        let dt = t.elapsed();
        let in_time = dt < Duration::from_secs(bound);
        let ok = out.ok && in_time;
        failed += usize::from(!ok);
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1} s, bound {bound} s]",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            dt.as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
