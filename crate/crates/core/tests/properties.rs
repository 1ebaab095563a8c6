use chess_billiard::arithmetic::{continued_fraction, convergents, DEFAULT_RATIONAL_TOL};
use chess_billiard::geometry::Vec2;
use chess_billiard::*;
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

fn domains() -> Vec<Domain> {
    [
        DomainSpec::UnitSquare,
        DomainSpec::TiltedSquare { angle: 0.1 },
        DomainSpec::Trapezoid { bottom_width: 1.0, top_width: 0.6, height: 1.0 },
        DomainSpec::RoundedSquare { corner_radius: 0.1 },
        DomainSpec::Polygon { vertices: vec![[0.0, 0.0], [1.3, 0.2], [1.0, 0.9], [0.2, 1.1]] },
    ]
    .iter()
    .map(|s| Domain::from_spec(s).unwrap())
    .collect()
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn ccw_order(a: f64, b: f64, c: f64) -> bool {
    (b - a).rem_euclid(1.0) < (c - a).rem_euclid(1.0)
}

fn hermitian(k: usize, vals: &[(f64, f64)]) -> FourierField {
    let mut f = FourierField::zeros(k);
    let mut it = vals.iter().cycle();
    for (k1, k2, _) in FourierField::zeros(k).iter() {
        if (k1, k2) < (0, 0) {
            continue;
        }
        let &(re, im) = it.next().unwrap();
        let c = if (k1, k2) == (0, 0) { Complex64::new(re, 0.0) } else { Complex64::new(re, im) };
        f.set(k1, k2, c);
        f.set(-k1, -k2, c.conj());
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn boundary_parameter_round_trip(d in 0usize..5, s in 0.0f64..1.0) {
        let dom = &domains()[d];
        let p = dom.boundary_point(s);
        let back = dom.locate(p.x, p.y).unwrap();
        prop_assert!(circular_gap(back.s, s) < 1e-9);
        prop_assert!(back.distance(&p) < 1e-9);
    }

    #[test]
    fn chord_is_an_involution(d in 0usize..5, s in 0.0f64..1.0, lambda in 0.05f64..0.95, pos in any::<bool>()) {
        let dom = &domains()[d];
        let params = ChessParams::new(lambda).unwrap();
        let sign = if pos { ChordSign::Positive } else { ChordSign::Negative };
        let p = dom.boundary_point(s);
        let Ok(q) = half_step(dom, &params, &p, sign) else { return Ok(()) };
        let Ok(back) = half_step(dom, &params, &q, sign) else { return Ok(()) };
        prop_assert!(back.distance(&p) < 1e-9, "{:?} -> {:?} -> {:?}", p, q, back);
    }

    #[test]
    fn chord_stays_inside(d in 0usize..5, s in 0.0f64..1.0, lambda in 0.05f64..0.95) {
        let dom = &domains()[d];
        let params = ChessParams::new(lambda).unwrap();
        let p = dom.boundary_point(s);
        let Ok(q) = half_step(dom, &params, &p, ChordSign::Positive) else { return Ok(()) };
        for i in 1..=10 {
            let t = i as f64 / 11.0;
            let m: Vec2 = p.xy() * (1.0 - t) + q.xy() * t;
            prop_assert!(dom.interior_margin(m) >= -1e-12);
        }
    }

    #[test]
    fn map_preserves_cyclic_order(
        d in 0usize..5,
        s in prop::array::uniform3(0.0f64..1.0),
        lambda in 0.05f64..0.95,
    ) {
        let dom = &domains()[d];
        let params = ChessParams::new(lambda).unwrap();
        prop_assume!(circular_gap(s[0], s[1]) > 1e-6 && circular_gap(s[1], s[2]) > 1e-6 && circular_gap(s[0], s[2]) > 1e-6);
        let images: Result<Vec<_>, _> =
            s.iter().map(|&x| step(dom, &params, &dom.boundary_point(x))).collect();
        let Ok(images) = images else { return Ok(()) };
        prop_assert_eq!(
            ccw_order(s[0], s[1], s[2]),
            ccw_order(images[0].s, images[1].s, images[2].s)
        );
    }

    #[test]
    fn lift_is_monotone(d in 0usize..5, s in 0.0f64..1.0, lambda in 0.05f64..0.95) {
        let dom = &domains()[d];
        let params = ChessParams::new(lambda).unwrap();
        let o = match orbit(dom, &params, dom.boundary_point(s), 50) {
            Ok(o) => o,
            Err(BilliardError::Step { partial, .. }) => *partial,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for (w, p) in o.lift.windows(2).zip(&o.points[1..]) {
            prop_assert!(w[1] > w[0] && w[1] - w[0] < 1.0);
            prop_assert!(circular_gap(w[1], p.s) < 1e-9);
        }
    }

    #[test]
    fn rotation_inverse_round_trip(r in 1e-6f64..(1.0 - 1e-6)) {
        let lambda = lambda_for_rotation(r).unwrap();
        prop_assert!((r_square_exact(lambda).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn convergents_are_best_approximations(x in 0.0f64..1.0) {
        let cf = continued_fraction(x, 40, DEFAULT_RATIONAL_TOL);
        for c in convergents(&cf).into_iter().filter(|c| c.q <= 200) {
            let err = (x - c.value()).abs();
            for q in 1..c.q {
                let p = (x * q as f64).round();
                prop_assert!((x - p / q as f64).abs() >= err - 1e-15, "{}/{} beaten by q = {}", c.p, c.q, q);
            }
        }
    }

    #[test]
    fn convergents_alternate(x in 0.0f64..1.0) {
        let cf = continued_fraction(x, 40, DEFAULT_RATIONAL_TOL);
        let cs = convergents(&cf);
        for (k, w) in cs.windows(2).enumerate() {
            let det = w[1].p as i128 * w[0].q as i128 - w[0].p as i128 * w[1].q as i128;
            prop_assert_eq!(det.abs(), 1);
            let c = &w[1];
            // skip convergents that already equal x to rounding
            if (x - c.value()).abs() > 1e-13 {
                let above = c.value() > x;
                prop_assert_eq!(above, k % 2 == 0, "convergent {} = {}/{}", k + 1, c.p, c.q);
            }
        }
    }

    #[test]
    fn analyze_inverts_synthesize(k in 1usize..12, vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)) {
        let f = hermitian(k, &vals);
        let n = 2 * k + 2;
        let back = analyze(&synthesize(&f, n), k).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn synthesize_inverts_analyze_on_band_limited_grids(k in 1usize..6, vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20)) {
        let g: Array2<f64> = synthesize(&hermitian(k, &vals), 32);
        let again = synthesize(&analyze(&g, k).unwrap(), 32);
        let diff = (&again - &g).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn solution_of_real_forcing_is_real(
        k in 1usize..8,
        vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
        t in 0.0f64..20.0,
        ic in any::<bool>(),
    ) {
        let mut f = hermitian(k, &vals);
        f.set(0, 0, Complex64::new(0.0, 0.0));
        let lambda = lambda_for_rotation((5f64.sqrt() - 1.0) / 2.0).unwrap();
        let mode = if ic { SolverMode::IcCorrected } else { SolverMode::Forced };
        let cfg = SolverConfig::new(lambda, mode).unwrap();
        let u = solve(&f, &cfg, &[t]).unwrap();
        prop_assert!(u[0].is_hermitian(1e-12));
    }

    #[test]
    fn box_count_refines_monotonically(
        pts in prop::collection::vec(0.0f64..1.0, 0..200),
        m in 1i32..10,
        up in 0i32..4,
    ) {
        // nested tilings: every coarse tile is a union of fine tiles
        let fine = 2f64.powi(-m);
        let coarse = fine * 2f64.powi(up);
        prop_assert!(box_count(&pts, coarse) <= box_count(&pts, fine));
    }
}

#[test]
fn sweep_and_analysis_are_deterministic() {
    let dom = Domain::from_spec(&DomainSpec::TiltedSquare { angle: 0.1 }).unwrap();
    let a = sweep(&dom, 60, 2000, 0.1).unwrap();
    let b = sweep(&dom, 60, 2000, 0.1).unwrap();
    assert_eq!(a, b);
    let eps = chess_billiard::fractal::default_epsilons();
    let pa = detect_plateaus(&a, 1e-3, 3, 50).unwrap();
    let sa = staircase_dimension(&a, &pa.plateaus, &eps).unwrap();
    let sb = staircase_dimension(&b, &detect_plateaus(&b, 1e-3, 3, 50).unwrap().plateaus, &eps).unwrap();
    assert_eq!(
        serde_json::to_string(&sa).unwrap(),
        serde_json::to_string(&sb).unwrap()
    );
}
