use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use shearwitt::cli::{
    base_change_window, check_morphism_json, deformation_demo, export_window, import_window, parse_frame, parse_ring,
    random_transport, ring_info, run_suite, test_ring, window_info, AnyFrame, AnyWindow, Corpus, SuiteConfig,
    SUITES,
};
use shearwitt::frame_instances::{ShearedFrame, WittFrame};
use shearwitt::frames::{check_frame_axioms, Window};
use shearwitt::point_functors::{
    default_levels, duality_diagram_check, eval_cn, eval_scn, eval_zn, exact_triangle_check, point_count_table,
    TableWindow, TestRing, DEFAULT_BUDGET,
};
use shearwitt::ring_base::std_rings::fp;
use shearwitt::ring_base::FpkAlgebra;
use shearwitt::sheared_witt::{check_kernel_sequence, check_vn_wn_sequence, f_invariants, ShearedRing};
use shearwitt::witt::{compute_u0_alpha_ptilde, WittRing, POLY_CACHE_ENV};

#[derive(Parser)]
#[command(name = "shearwitt", version, about = "Witt vectors, sheared Witt frames, windows and their point counts")]
struct Cli {
    /// Directory for cached universal Witt polynomials (sets the cache env var).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Describe a ring given by name.
    Ring { name: String },
    /// Witt vector arithmetic.
    #[command(subcommand)]
    Witt(WittCmd),
    /// Sheared Witt vectors.
    #[command(subcommand)]
    Sheared(ShearedCmd),
    /// Frames by id.
    #[command(subcommand)]
    Frame(FrameCmd),
    /// Windows (displays): create, dualize, base change, morphisms, lifts.
    #[command(subcommand)]
    Display(DisplayCmd),
    /// Points of the complexes attached to windows.
    #[command(subcommand)]
    Points(PointsCmd),
    /// Run a verification suite and write its JSON report.
    Verify(VerifyArgs),
    /// Inspect the built-in corpus.
    #[command(subcommand)]
    Corpus(CorpusCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum WittOp {
    Add,
    Sub,
    Mul,
    Neg,
    Frobenius,
    Verschiebung,
    Vtilde,
}

#[derive(Subcommand)]
enum WittCmd {
    /// Apply an operation to Witt vectors given as JSON lists of coordinates.
    Eval {
        #[arg(long)]
        ring: String,
        #[arg(long, value_enum)]
        op: WittOp,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: Option<String>,
    },
    /// Teichmüller lift of a ring element (JSON coordinates).
    Teich {
        #[arg(long)]
        ring: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        len: usize,
    },
    /// The constants `u0`, `alpha`, `p~` in `W_n(Z/p^k)`.
    Constants {
        #[arg(short)]
        p: u64,
        #[arg(short)]
        n: usize,
        #[arg(short)]
        k: u32,
    },
}

#[derive(Subcommand)]
enum ShearedCmd {
    /// Count `F`-fixed points in `sW(R)/p^N`.
    FInvariants {
        #[arg(long)]
        ring: String,
        #[arg(short = 'N', long, default_value_t = 3)]
        precision: usize,
        #[arg(short = 'B', long, default_value_t = 9)]
        bound: usize,
    },
    /// Sampled kernel and `V~^n` sequences.
    Exactness {
        #[arg(long)]
        ring: String,
        #[arg(short = 'N', long, default_value_t = 4)]
        precision: usize,
        #[arg(short = 'B', long, default_value_t = 12)]
        bound: usize,
        #[arg(short, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum FrameCmd {
    /// Sampled frame axioms.
    Axioms {
        id: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum DisplayCmd {
    /// Write a corpus window over a frame.
    New {
        #[arg(long)]
        frame: String,
        #[arg(long)]
        window: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Validate a window file and print its summary.
    Show { file: PathBuf },
    /// Dual window.
    Dual {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Base change to a ring over the prime field, truncation, or the comparison to Witt.
    Basechange {
        file: PathBuf,
        #[arg(long)]
        ring: Option<String>,
        #[arg(long)]
        truncate: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a morphism file between two windows.
    CheckMorphism {
        src: PathBuf,
        dst: PathBuf,
        morphism: PathBuf,
    },
    /// A random isomorphism out of a window and its target.
    Transport {
        file: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Lift a random isomorphism along `R -> R/a` (deformation).
    Lift {
        #[arg(long)]
        ring: String,
        #[arg(long, default_value_t = 1)]
        r0: usize,
        #[arg(long, default_value_t = 1)]
        r1: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Complex {
    #[value(name = "C")]
    C,
    #[value(name = "Z")]
    Z,
    #[value(name = "SC")]
    Sc,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct PointArgs {
    /// Corpus window name or window file.
    #[arg(long)]
    window: String,
    /// Test ring `S`.
    #[arg(long)]
    ring: String,
    #[arg(short, default_value_t = 1)]
    n: usize,
    #[arg(short, default_value_t = 2)]
    p: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Starting precision of the sheaf levels.
    #[arg(long)]
    precision: Option<usize>,
    /// Starting support bound.
    #[arg(long)]
    support: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum PointsCmd {
    /// Cohomology of one complex on `S`-points.
    Eval {
        #[command(flatten)]
        a: PointArgs,
        #[arg(long, value_enum, default_value = "SC")]
        complex: Complex,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// `|H^0(sC_n)|` for corpus windows over several rings.
    Table {
        #[arg(short, default_value_t = 2)]
        p: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        rings: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        windows: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Termwise exactness of the triangle `Z_n -> sC_n -> C_n`.
    Triangle {
        #[command(flatten)]
        a: PointArgs,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// The duality diagram comparing `C_n` and `C'_n`.
    Duality {
        #[command(flatten)]
        a: PointArgs,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or `all`.
    suite: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(short = 'N', long, default_value_t = 4)]
    precision: usize,
    #[arg(short = 'B', long, default_value_t = 12)]
    bound: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    cases: usize,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(short, value_delimiter = ',', default_value = "2,3")]
    p: Vec<u64>,
    #[arg(short, value_delimiter = ',', default_value = "1,2")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    max_degree: u32,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 1)]
    level_scale: usize,
    #[arg(long)]
    threads: Option<usize>,
    /// Emit only verdicts and level-independent results.
    #[arg(long)]
    invariants: bool,
    /// Report file; defaults to stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Print the corpus as JSON.
    Show,
    /// Print the corpus hash.
    Hash,
    /// Load every entry and report problems.
    Check,
    /// List suite names.
    Suites,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(dir) = &cli.cache_dir {
        std::env::set_var(POLY_CACHE_ENV, dir);
    }
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Write to stdout; a closed pipe is not an error.
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            say(text);
            Ok(())
        }
    }
}

fn print_json(v: &Value) {
    say(&format!("{}\n", serde_json::to_string_pretty(v).expect("json")));
}

fn read_window(path: &PathBuf) -> Result<AnyWindow> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    import_window(&text).with_context(|| format!("loading {}", path.display()))
}

fn parse_coords(s: &str) -> Result<Vec<Vec<u64>>> {
    serde_json::from_str(s).context("expected a JSON list of coordinate lists")
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Ring { name } => print_json(&ring_info(&name)?),
        Cmd::Witt(c) => witt(c)?,
        Cmd::Sheared(c) => return sheared(c),
        Cmd::Frame(FrameCmd::Axioms { id, samples, seed }) => {
            use rand::SeedableRng;
            let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rep = match parse_frame(&id)? {
                AnyFrame::Witt(f) => check_frame_axioms(f.as_ref(), samples, &mut g)?,
                AnyFrame::Sheared(f) => check_frame_axioms(f.as_ref(), samples, &mut g)?,
            };
            print_json(&serde_json::to_value(&rep)?);
            return Ok(u8::from(!rep.passed()));
        }
        Cmd::Display(c) => return display(c),
        Cmd::Points(c) => return points(c),
        Cmd::Verify(a) => {
            let mut cfg = SuiteConfig {
                seed: a.seed,
                precision: a.precision,
                bound: a.bound,
                samples: a.samples,
                cases: a.cases,
                budget: a.budget,
                primes: a.p,
                ns: a.n,
                max_degree: a.max_degree,
                levels: a.levels,
                level_scale: a.level_scale,
                ..SuiteConfig::default()
            };
            if let Some(t) = a.threads {
                cfg.threads = t.max(1);
            }
            let rep = run_suite(&a.suite, &cfg)?;
            let text = if a.invariants {
                format!("{}\n", serde_json::to_string_pretty(&rep.invariants())?)
            } else {
                rep.to_json()
            };
            emit(&text, a.out.as_ref())?;
            for s in &rep.suites {
                eprintln!("{}: {} checks, {} failures", s.suite, s.checks, s.failures);
                for l in s.lines.iter().filter(|l| !l.passed) {
                    eprintln!("  FAIL {} [{}]", l.check, l.subject);
                }
            }
            return Ok(rep.exit_code() as u8);
        }
        Cmd::Corpus(c) => {
            let corpus = Corpus::standard();
            match c {
                CorpusCmd::Show => print_json(&serde_json::to_value(&corpus)?),
                CorpusCmd::Hash => say(&format!("{}\n", corpus.hash())),
                CorpusCmd::Check => {
                    let bad = corpus.validate();
                    for b in &bad {
                        eprintln!("{b}");
                    }
                    print_json(&json!({ "hash": corpus.hash(), "problems": bad }));
                    return Ok(u8::from(!bad.is_empty()));
                }
                CorpusCmd::Suites => say(&format!("{}\n", SUITES.join("\n"))),
            }
        }
    }
    Ok(0)
}

fn witt(c: WittCmd) -> Result<()> {
    match c {
        WittCmd::Eval { ring, op, x, y } => {
            let r = parse_ring(&ring)?;
            let x = parse_coords(&x)?;
            let y = y.as_deref().map(parse_coords).transpose()?;
            let len = x.len();
            if let Some(y) = &y {
                if y.len() != len {
                    bail!("x has {len} components, y has {}", y.len());
                }
            }
            for c in x.iter().chain(y.iter().flatten()) {
                r.check(c)?;
            }
            let w = WittRing::new(&r, len + 1)?;
            let need_y = || y.clone().context("this operation takes --y");
            let out = match op {
                WittOp::Add => w.add(&x, &need_y()?),
                WittOp::Sub => w.sub(&x, &need_y()?),
                WittOp::Mul => w.mul(&x, &need_y()?),
                WittOp::Neg => w.neg(&x),
                WittOp::Frobenius => w.frobenius_drop(&x),
                WittOp::Verschiebung => w.verschiebung(&x),
                WittOp::Vtilde => w.vtilde(&x),
            };
            print_json(&json!(out));
        }
        WittCmd::Teich { ring, a, len } => {
            let r = parse_ring(&ring)?;
            let a: Vec<u64> = serde_json::from_str(&a).context("expected a JSON coordinate list")?;
            r.check(&a)?;
            let w = WittRing::new(&r, len)?;
            print_json(&json!(w.teich(&a, len)));
        }
        WittCmd::Constants { p, n, k } => print_json(&serde_json::to_value(compute_u0_alpha_ptilde(p, n, k)?)?),
    }
    Ok(())
}

fn sheared(c: ShearedCmd) -> Result<u8> {
    use rand::SeedableRng;
    match c {
        ShearedCmd::FInvariants { ring, precision, bound } => {
            let sr = ShearedRing::new(&parse_ring(&ring)?, precision, bound)?;
            print_json(&serde_json::to_value(f_invariants(&sr)?)?);
        }
        ShearedCmd::Exactness { ring, precision, bound, n, samples, seed } => {
            let sr = ShearedRing::new(&parse_ring(&ring)?, precision, bound)?;
            let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let k = check_kernel_sequence(&sr, sr.nilradical(), samples, &mut g)?;
            let v = check_vn_wn_sequence(&sr, n, samples, &mut g)?;
            let ok = k.passed() && v.passed();
            print_json(&json!({ "kernel_sequence": k, "vn_wn_sequence": v }));
            return Ok(u8::from(!ok));
        }
    }
    Ok(0)
}

fn display(c: DisplayCmd) -> Result<u8> {
    match c {
        DisplayCmd::New { frame, window, out } => {
            let spec = Corpus::standard().window(&window)?.clone();
            let w = parse_frame(&frame)?.window(&spec)?;
            emit(&export_window(&w), out.as_ref())?;
        }
        DisplayCmd::Show { file } => print_json(&window_info(&read_window(&file)?)),
        DisplayCmd::Dual { file, out } => emit(&export_window(&read_window(&file)?.dual()?), out.as_ref())?,
        DisplayCmd::Basechange { file, ring, truncate, out } => {
            let w = base_change_window(&read_window(&file)?, ring.as_deref(), truncate)?;
            emit(&export_window(&w), out.as_ref())?;
        }
        DisplayCmd::CheckMorphism { src, dst, morphism } => {
            let v: Value = serde_json::from_str(&fs::read_to_string(&morphism)?)?;
            let r = check_morphism_json(&read_window(&src)?, &read_window(&dst)?, &v)?;
            let holds = r["holds"].as_bool() == Some(true);
            print_json(&r);
            return Ok(u8::from(!holds));
        }
        DisplayCmd::Transport { file, seed } => {
            let (t, f) = random_transport(&read_window(&file)?, seed)?;
            print_json(&json!({ "target": t.to_json(), "morphism": f }));
        }
        DisplayCmd::Lift { ring, r0, r1, seed } => {
            let r = deformation_demo(&ring, r0, r1, seed)?;
            let ok = ["lift_is_morphism", "iterations_equal_nu", "unique"]
                .iter()
                .all(|k| r[k].as_bool() == Some(true));
            print_json(&r);
            return Ok(u8::from(!ok));
        }
    }
    Ok(0)
}

/// A corpus window by name, or a window file, over the frame chosen by `make`.
fn window_over<F>(name: &str, frame: &Arc<F>, pick: impl Fn(AnyWindow) -> Option<Window<F>>) -> Result<Window<F>>
where
    F: shearwitt::frames::Frame,
{
    if let Ok(spec) = Corpus::standard().window(name) {
        return Ok(spec.over(frame)?);
    }
    let w = read_window(&PathBuf::from(name))?;
    let fid = w.frame_id();
    let m = pick(w).with_context(|| format!("window file is over {fid}, which does not fit this complex"))?;
    if m.frame.id() != frame.id() {
        bail!("window file is over {}, expected {}", m.frame.id(), frame.id());
    }
    Ok(m)
}

fn witt_window(a: &PointArgs, r: &Arc<FpkAlgebra>) -> Result<Window<WittFrame>> {
    let f = WittFrame::truncated(r, a.n)?;
    window_over(&a.window, &f, |w| match w {
        AnyWindow::Witt(m) => Some(m),
        AnyWindow::Sheared(_) => None,
    })
}

fn sheared_levels(a: &PointArgs, s: &TestRing, count: usize) -> Vec<(usize, usize)> {
    let mut lv = default_levels(s, a.n, count);
    if let Some(p0) = a.precision {
        lv.iter_mut().enumerate().for_each(|(i, l)| l.0 = p0.max(l.0 - i) + i);
    }
    if let Some(s0) = a.support {
        lv.iter_mut().enumerate().for_each(|(i, l)| l.1 = s0 + i);
    }
    lv
}

fn sheared_window(a: &PointArgs, r: &Arc<FpkAlgebra>, prec: usize, bound: usize) -> Result<Window<ShearedFrame>> {
    let f = ShearedFrame::new(r, prec, bound)?;
    window_over(&a.window, &f, |w| match w {
        AnyWindow::Sheared(m) => Some(m),
        AnyWindow::Witt(_) => None,
    })
}

fn points(c: PointsCmd) -> Result<u8> {
    match c {
        PointsCmd::Eval { a, complex, levels } => {
            let r = fp(a.p);
            let s = test_ring(&r, &a.ring, a.budget)?;
            let rep = match complex {
                Complex::C => eval_cn(&witt_window(&a, &r)?, &s)?,
                Complex::Z => {
                    let start = a.support.unwrap_or(a.n + 1);
                    let supports: Vec<usize> = (start..start + levels.max(2)).collect();
                    eval_zn(&witt_window(&a, &r)?, &s, &supports)?
                }
                Complex::Sc => {
                    let lv = sheared_levels(&a, &s, levels.max(2));
                    let top = lv.last().map_or(a.n + 1, |l| l.0);
                    let m = sheared_window(&a, &r, top, top + 4)?;
                    eval_scn(&m, &s, a.n, &lv)?
                }
            };
            print_json(&serde_json::to_value(&rep)?);
            return Ok(u8::from(!rep.stable));
        }
        PointsCmd::Table { p, ns, rings, windows, budget, levels, format } => {
            let r = fp(p);
            let corpus = Corpus::standard();
            let max_n = ns.iter().copied().max().unwrap_or(1);
            let frame = ShearedFrame::new(&r, max_n + 2, max_n + 5)?;
            let names: Vec<String> = if windows.is_empty() {
                corpus.windows.iter().map(|w| w.name.clone()).collect()
            } else {
                windows
            };
            let mut tw = Vec::new();
            for n in &names {
                let spec = corpus.window(n)?;
                tw.push(TableWindow {
                    name: spec.name.clone(),
                    window: spec.over(&frame)?,
                    oracle: spec.oracle_fn(),
                });
            }
            let ring_names = if rings.is_empty() {
                vec![format!("F{p}"), format!("F{}", p * p)]
            } else {
                rings
            };
            let rs = ring_names
                .iter()
                .map(|n| test_ring(&r, n, budget))
                .collect::<Result<Vec<_>, _>>()?;
            let table = point_count_table(&tw, &rs, &ns, levels, 1, shearwitt::point_functors::default_threads());
            match format {
                Format::Csv => say(&table.to_csv()),
                Format::Json => print_json(&json!({
                    "p": p, "ns": ns, "budget": budget, "levels": levels,
                    "cells": table.cells, "deviations": table.deviations(),
                })),
            }
            let bad = table.deviations() > 0 || table.cells.iter().any(|c| c.error.is_some());
            return Ok(u8::from(bad));
        }
        PointsCmd::Triangle { a, samples } => {
            let r = fp(a.p);
            let s = test_ring(&r, &a.ring, a.budget)?;
            let prec = a.precision.unwrap_or(a.n + 2);
            let supp = a.support.unwrap_or(prec + 1);
            let m = sheared_window(&a, &r, prec, prec + 4)?;
            let rep = exact_triangle_check(&m, &s, a.n, prec, supp, samples, a.seed)?;
            print_json(&serde_json::to_value(&rep)?);
            return Ok(u8::from(!rep.passed()));
        }
        PointsCmd::Duality { a } => {
            let r = fp(a.p);
            let s = test_ring(&r, &a.ring, a.budget)?;
            let rep = duality_diagram_check(&witt_window(&a, &r)?, &s)?;
            print_json(&serde_json::to_value(&rep)?);
            return Ok(u8::from(!rep.passed()));
        }
    }
}
