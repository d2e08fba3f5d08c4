//! Algebraic invariants as properties over seeded random inputs.

use std::sync::Arc;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shearwitt::cli::{export_window, import_window, parse_ring, AnyWindow};
use shearwitt::frame_instances::{ShearedFrame, WittFrame};
use shearwitt::frames::{dual_window, is_morphism, random_invertible_morphism, transport, Frame, Mat, Window};
use shearwitt::ring_base::FpkAlgebra;
use shearwitt::sheared_witt::ShearedRing;
use shearwitt::witt::WittRing;
use shearwitt::zmod_linalg::{
    complex_homology, smith_normal_form, AbGroupMap, AbGroupType, FiniteGroup, IntMatrix, PresentedGroup,
};

const RINGS: &[&str] =
    &["F2", "F4", "F9", "F2[t]/(t^3)", "F3[t]/(t^2)", "Z/2^3", "Z/3^2", "GR(2^2,2)", "F2[x,y]/(x^2,xy,y^2)"];

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn ring(i: usize) -> Arc<FpkAlgebra> {
    parse_ring(RINGS[i % RINGS.len()]).unwrap()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn ring_axioms(i in 0..RINGS.len(), seed: u64) {
        let r = ring(i);
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (r.random(&mut g), r.random(&mut g), r.random(&mut g));
        prop_assert_eq!(r.mul(&a, &r.add(&b, &c)), r.add(&r.mul(&a, &b), &r.mul(&a, &c)));
        prop_assert_eq!(r.mul(&r.mul(&a, &b), &c), r.mul(&a, &r.mul(&b, &c)));
        prop_assert_eq!(r.mul(&a, &b), r.mul(&b, &a));
        prop_assert_eq!(r.add(&a, &r.neg(&a)), r.zero());
        prop_assert_eq!(r.element(r.index_of(&a)), a);
    }

    #[test]
    fn smith_form_is_witnessed(rows in 1usize..4, cols in 1usize..4, entries in prop::collection::vec(-20i64..20, 16)) {
        let m: Vec<Vec<i64>> = (0..rows).map(|i| entries[i * 4..i * 4 + cols].to_vec()).collect();
        let m = IntMatrix::from_i64(&m);
        let s = smith_normal_form(&m);
        prop_assert!(s.verify(&m));
        prop_assert!(s.diag.iter().all(|d| *d > BigInt::from(0)));
    }

    #[test]
    fn homology_orders_balance(p in prop::sample::select(vec![2u64, 3]), e1 in 1u32..3, e2 in 1u32..3, a in 0u64..9, b in 0u64..9, c in 0u64..9, d in 0u64..9) {
        let g = PresentedGroup::new(AbGroupType::from_exponents(p, vec![e1, e2]));
        // exponents are stored sorted
        let (q1, q2) = (p.pow(e1.min(e2)), p.pow(e1.max(e2)));
        // a well-defined endomorphism of Z/q1 ⊕ Z/q2
        let b = if q1 > q2 { b * (q1 / q2) } else { b };
        let c = if q2 > q1 { c * (q2 / q1) } else { c };
        let f = AbGroupMap::new(&g, &g, |x| {
            let v = g.digits(x);
            g.code(&[(a * v[0] + b * v[1]) % q1, (c * v[0] + d * v[1]) % q2])
        });
        prop_assert!(f.check_additive(1 << 12, 0).failures == 0);
        let h = complex_homology(p, &f, 1 << 16).unwrap();
        prop_assert!(h.euler_holds());
        let kernel = (0..g.order()).filter(|&x| f.apply(x) == 0).count() as u128;
        prop_assert_eq!(h.h0.order(), kernel);
    }

    #[test]
    fn witt_frobenius_and_verschiebung(i in 0..RINGS.len(), len in 1usize..4, seed: u64) {
        let w = WittRing::new(&ring(i), len + 1).unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (w.random(&mut g, len + 1), w.random(&mut g, len + 1));
        let p = w.p() as i128;
        // F is a ring endomorphism
        prop_assert_eq!(w.frobenius_drop(&w.add(&x, &y)), w.add(&w.frobenius_drop(&x), &w.frobenius_drop(&y)));
        prop_assert_eq!(w.frobenius_drop(&w.mul(&x, &y)), w.mul(&w.frobenius_drop(&x), &w.frobenius_drop(&y)));
        // FV = p
        prop_assert_eq!(w.frobenius_drop(&w.verschiebung(&x)), w.scale_int(p, &x[..len]));
        // [a][b] = [ab]
        let (a, b) = (w.ring().random(&mut g), w.ring().random(&mut g));
        prop_assert_eq!(w.mul(&w.teich(&a, len), &w.teich(&b, len)), w.teich(&w.ring().mul(&a, &b), len));
    }

    #[test]
    fn sheared_ring_axioms(i in 0usize..4, seed: u64) {
        let name = ["F2[t]/(t^2)", "F2[t]/(t^3)", "F3[t]/(t^2)", "F4[t]/(t^2)"][i];
        let sr = ShearedRing::new(&parse_ring(name).unwrap(), 3, 10).unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (sr.random(&mut g, 3), sr.random(&mut g, 3), sr.random(&mut g, 3));
        let lhs = sr.mul(&x, &sr.add(&y, &z).unwrap());
        let rhs = sr.mul(&x, &y).and_then(|a| sr.add(&a, &sr.mul(&x, &z)?));
        if let (Ok(l), Ok(r)) = (lhs, rhs) {
            prop_assert_eq!(l, r);
        }
        prop_assert_eq!(sr.mul(&x, &y).ok(), sr.mul(&y, &x).ok());
        prop_assert_eq!(sr.sub(&x, &x).unwrap(), sr.zero());
        let fx = sr.frobenius(&sr.add(&x, &y).unwrap());
        let fsum = sr.frobenius(&x).and_then(|a| sr.add(&a, &sr.frobenius(&y)?));
        if let (Ok(a), Ok(b)) = (fx, fsum) {
            prop_assert_eq!(a, b);
        }
    }
}

fn random_window<F: Frame>(f: &Arc<F>, r0: usize, r1: usize, g: &mut ChaCha8Rng) -> Window<F> {
    loop {
        let psi = Mat::from_fn(r0 + r1, r0 + r1, |_, _| f.random0(g));
        if let Ok(m) = Window::new(f, r0, r1, psi) {
            return m;
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn duality_is_an_involution(p in prop::sample::select(vec![2u64, 3]), n in 1usize..3, r0 in 0usize..3, r1 in 0usize..3, seed: u64) {
        prop_assume!(r0 + r1 > 0);
        let f = WittFrame::truncated(&shearwitt::ring_base::std_rings::fp(p), n).unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let m = random_window(&f, r0, r1, &mut g);
        let d = dual_window(&m).unwrap();
        prop_assert_eq!((d.r0, d.r1), (r1, r0));
        let dd = dual_window(&d).unwrap();
        prop_assert!(dd.psi == m.psi);
    }

    #[test]
    fn transport_gives_a_morphism(r0 in 1usize..3, r1 in 0usize..2, seed: u64) {
        let f = ShearedFrame::new(&shearwitt::ring_base::std_rings::fp(2), 2, 5).unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let m = random_window(&f, r0, r1, &mut g);
        let phi = random_invertible_morphism(f.as_ref(), r0, r1, &mut g).unwrap();
        let t = transport(&m, &phi).unwrap();
        prop_assert!(is_morphism(&m, &t, &phi).unwrap().holds);
    }

    #[test]
    fn window_files_round_trip(n in 1usize..3, r0 in 0usize..2, r1 in 1usize..3, seed: u64) {
        let f = WittFrame::truncated(&parse_ring("F4").unwrap(), n).unwrap();
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let w = AnyWindow::Witt(random_window(&f, r0, r1, &mut g));
        let text = export_window(&w);
        prop_assert_eq!(export_window(&import_window(&text).unwrap()), text);
    }
}
