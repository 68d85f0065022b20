use approx::assert_relative_eq;
use conic_finsler::berwald::expm2;
use conic_finsler::flow::norm_at;
use conic_finsler::harness::{sample_seeds, write_profile_csv, RunConfig, PROFILE_HEADER};
use conic_finsler::numdiff::linspace;
use conic_finsler::*;
use proptest::prelude::*;

fn seed() -> impl Strategy<Value = SeedM> {
    (0.2f64..2.0, 0.1f64..1.5, any::<bool>(), -1.0f64..1.0, -2.0f64..2.0).prop_filter_map(
        "outside the seed set",
        |(a0, a1, neg, a2, a3)| {
            let s = SeedM::new(a0, if neg { -a1 } else { a1 }, a2, a3).ok()?;
            (s.margin() >= 0.05).then_some(s)
        },
    )
}

// A strongly convex jet at a general angle.
fn jet() -> impl Strategy<Value = NormJet> {
    (-3.0f64..3.0, 0.2f64..2.0, -1.5f64..1.5, -1.0f64..1.0, -2.0f64..2.0).prop_filter_map(
        "not strongly convex",
        |(t, f, df, d2f, d3f)| {
            let j = NormJet::new(t, f, df, d2f, d3f).ok()?;
            (convexity_margin(&j).ok()? > 0.05).then_some(j)
        },
    )
}

fn close(a: Vec2G, b: Vec2G, tol: f64) -> bool {
    (a - b).max_abs() <= tol * (1.0 + a.max_abs().max(b.max_abs()))
}

proptest! {
    #[test]
    fn kappa_is_scale_invariant(j in jet(), k in 0.05f64..20.0) {
        let kappa = landsberg_first_integral(&j).unwrap();
        assert_relative_eq!(landsberg_first_integral(&j.scaled(k)).unwrap(), kappa, max_relative = 1e-12, epsilon = 1e-12);
    }

    #[test]
    fn cfc_lambda_scales_with_root_k(j in jet(), k in 0.05f64..20.0) {
        let Ok(l) = cfc_lambda(&j) else { return Ok(()) };
        assert_relative_eq!(cfc_lambda(&j.scaled(k)).unwrap(), k.sqrt() * l, max_relative = 1e-12);
    }

    #[test]
    fn eta_is_quadratic_and_scale_free(j in jet(), r in 0.1f64..3.0, k in 0.1f64..10.0, eps in -1.0f64..1.0) {
        let alg = LieAlgebra2D::new(eps, 1.0).unwrap();
        let eta = spray_eta(&alg, &j, r).unwrap();
        prop_assert!(close(spray_eta(&alg, &j, k * r).unwrap(), eta * (k * k), 1e-12));
        prop_assert!(close(spray_eta(&alg, &j.scaled(k), r).unwrap(), eta, 1e-12));
    }

    #[test]
    fn eta_is_g_orthogonal_to_y(j in jet(), r in 0.1f64..3.0, eps1 in -1.0f64..1.0, eps2 in -1.0f64..1.0) {
        prop_assume!(eps1.abs() + eps2.abs() > 0.05);
        let alg = LieAlgebra2D::new(eps1, eps2).unwrap();
        let y = Vec2G::from_polar(r, j.t);
        let eta = spray_eta(&alg, &j, r).unwrap();
        let g = gram_in_basis(&j, r).unwrap();
        let scale = g.apply(y, y).sqrt() * g.apply(eta, eta).sqrt();
        prop_assert!(g.apply(eta, y).abs() <= 1e-12 * (1.0 + scale));
        // g_y(y, [u, y]) = g_y(η, u) is the defining identity of η.
        for u in [Vec2G::new(1.0, 0.0), Vec2G::new(0.0, 1.0), Vec2G::new(0.3, -0.7)] {
            let lhs = g.apply(y, alg.bracket(u, y));
            let rhs = g.apply(eta, u);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + scale), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn cartan_vanishes_along_y(j in jet(), r in 0.1f64..3.0) {
        let y = Vec2G::from_polar(r, j.t);
        prop_assert!(cartan_cubic(&j, r, y).unwrap().abs() <= 1e-12 * (1.0 + r.powi(3)));
    }

    #[test]
    fn gram_positive_exactly_when_margin_positive(
        t in -3.0f64..3.0, f in 0.2f64..2.0, df in -2.0f64..2.0, d2f in -3.0f64..1.0, r in 0.1f64..3.0,
    ) {
        let j = NormJet::new(t, f, df, d2f, 0.0).unwrap();
        let m = convexity_margin(&j).unwrap();
        prop_assume!(m.abs() > 1e-6);
        match gram_in_basis(&j, r) {
            Ok(g) => {
                prop_assert!(m > 0.0);
                prop_assert!(g.eigenvalues().0 > 0.0);
                // g(∂r, ∂r) = 2f, g(X, X) = r² m/(2f), and the frame has determinant r.
                assert_relative_eq!(g.det(), m, max_relative = 1e-9);
            }
            Err(_) => prop_assert!(m < 0.0),
        }
    }

    #[test]
    fn seed_matrix_is_admissible(s in seed()) {
        let m = seed_to_matrix(&s).unwrap();
        prop_assert_eq!(m.c(), 1.0);
        prop_assert!(m.a() != 0.0);
        prop_assert!(m.det() > 0.0);
        // The matrix sees only the normalized seed.
        let k = 3.7;
        let scaled = SeedM::new(k * s.a0, k * s.a1, k * s.a2, k * s.a3).unwrap();
        let m2 = seed_to_matrix(&scaled).unwrap();
        for (x, y) in m.as_array().into_iter().zip(m2.as_array()) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn seed_parse_round_trips(s in seed()) {
        let text = format!("{},{},{},{}", s.a0, s.a1, s.a2, s.a3);
        prop_assert_eq!(SeedM::parse(&text).unwrap(), s);
        let spaced = format!(" {}, {} ,{},{} ", s.a0, s.a1, s.a2, s.a3);
        prop_assert_eq!(SeedM::parse(&spaced).unwrap(), s);
    }

    #[test]
    fn expm_inverts(m in prop::array::uniform4(-2.0f64..2.0), theta in -2.0f64..2.0) {
        let a = [[m[0], m[1]], [m[2], m[3]]];
        let (p, q) = (expm2(a, theta), expm2(a, -theta));
        for (i, row) in p.iter().enumerate() {
            let prod = [row[0] * q[0][0] + row[1] * q[1][0], row[0] * q[0][1] + row[1] * q[1][1]];
            for (j, v) in prod.into_iter().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - id).abs() <= 1e-9, "{v} at ({i},{j})");
            }
        }
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        assert_relative_eq!(det, ((m[0] + m[3]) * theta).exp(), max_relative = 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn landsberg_profiles_conserve_kappa(s in seed()) {
        let solved = solve_landsberg(&s, (-0.1, 0.1), 1e-10).unwrap();
        let kappa = landsberg_first_integral(&s.jet()).unwrap();
        let (lo, hi) = solved.curve.domain();
        for t in linspace(lo, hi, 21) {
            let k = landsberg_first_integral(&solved.curve.jet_at(t).unwrap()).unwrap();
            prop_assert!((k - kappa).abs() <= 1e-8 * (1.0 + kappa.abs()), "t = {t}: {k} vs {kappa}");
        }
    }

    #[test]
    fn norm_is_positively_homogeneous(s in seed(), t in -0.1f64..0.1, r in 0.1f64..3.0, k in 0.1f64..10.0) {
        let curve = solve_landsberg(&s, (-0.1, 0.1), 1e-10).unwrap().curve;
        prop_assume!(curve.contains(t));
        let y = Vec2G::from_polar(r, t);
        assert_relative_eq!(norm_at(&curve, y * k).unwrap(), k * norm_at(&curve, y).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn profile_csv_rows_are_convex(s in seed(), c in -1.0f64..1.0) {
        let curve = solve_cfc(&s, c, (-0.1, 0.1), 1e-10).unwrap().curve;
        let mut buf = Vec::new();
        write_profile_csv(&curve, 41, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        prop_assert_eq!(lines.next(), Some(PROFILE_HEADER));
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        prop_assert_eq!(rows.len(), 41);
        for row in rows {
            let [t, f, df, d2f, _, m] = row[..] else { panic!("row width {}", row.len()) };
            prop_assert!(f > 0.0 && m > 0.0, "t = {t}");
            assert_relative_eq!(m, 2.0 * f * d2f - df * df + 4.0 * f * f, max_relative = 1e-12);
        }
    }

    #[test]
    fn seed_sampling_is_deterministic(rng in any::<u64>(), n in 0usize..30) {
        let cfg = RunConfig { rng_seed: rng, n_cases: n, ..RunConfig::default() };
        let a = sample_seeds(&cfg).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(&a, &sample_seeds(&cfg).unwrap());
        for s in &a {
            prop_assert!(s.margin() >= cfg.seed_box.margin);
        }
    }
}
