//! Property-based invariants checked against the oracles in `common`.

mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use sepdecomp::crossnorm::{decomposition_cost, project_coefficients, DiagonalScaling};
use sepdecomp::decomp::{theorem1_decompose, theorem2_decompose, IsometryMatrix, SeparableDecomposition};
use sepdecomp::feasibility::{separable_feasible, StateSpace};
use sepdecomp::lhv::{build_lhv, lhv_probability};
use sepdecomp::linalg::matrix::kron as lib_kron;
use sepdecomp::linalg::random::{ginibre, rng};
use sepdecomp::linalg::state::{random_density, realign_operator, BipartiteState, Povm};
use sepdecomp::nnls::nnls;
use sepdecomp::schmidt::{operator_schmidt, reconstruct as schmidt_reconstruct, DEFAULT_RANK_CUTOFF};
use sepdecomp::decomp::bell_phase_point;
use sepdecomp::Tolerances;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)])
}

fn unit_vector() -> impl Strategy<Value = [f64; 3]> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, p): (f64, f64)| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realignment_matches_oracle_and_preserves_norm(seed in any::<u64>(), (da, db) in dims()) {
        let m = ginibre(da * db, da * db, &mut rng(seed));
        let r = realign_operator(&m, da, db).unwrap();
        let oracle = realign(&to_na(&m), da, db);
        prop_assert!(frob(&(to_na(&r) - oracle)) == 0.0);
        prop_assert!((r.norm() - m.norm()).abs() <= 1e-12 * m.norm());
    }

    #[test]
    fn kron_is_associative_and_matches_oracle(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (a, b, c) = (ginibre(2, 2, &mut g), ginibre(3, 2, &mut g), ginibre(2, 3, &mut g));
        let left = lib_kron(&a, &lib_kron(&b, &c));
        let right = lib_kron(&lib_kron(&a, &b), &c);
        prop_assert!(left.distance(&right) <= 1e-12);
        prop_assert!(frob(&(to_na(&left) - kron(&to_na(&a), &kron(&to_na(&b), &to_na(&c))))) <= 1e-12);
    }

    #[test]
    fn schmidt_form_reconstructs_and_matches_oracle_spectrum(seed in any::<u64>(), (da, db) in dims()) {
        let state = random_density(seed, da, db);
        let os = operator_schmidt(&state, DEFAULT_RANK_CUTOFF).unwrap();
        let oracle = schmidt_values(&to_na(state.rho()), da, db);
        prop_assert_eq!(os.rank(), oracle.len());
        for (s, o) in os.s.iter().zip(&oracle) {
            prop_assert!((s - o).abs() <= 1e-10);
        }
        prop_assert!(os.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(gram_residual(&os.x, 1.0) <= 1e-10 && gram_residual(&os.y, 1.0) <= 1e-10);
        let back = to_na(&schmidt_reconstruct(&os));
        prop_assert!(frob(&(back - to_na(state.rho()))) <= 1e-10);
    }

    #[test]
    fn theorem1_attains_the_cross_norm(
        seed in any::<u64>(),
        (da, db) in dims(),
        extra in 0usize..3,
        logs in prop::collection::vec(-1.5f64..1.5, 16),
        scale in 0.2f64..5.0,
    ) {
        let state = random_density(seed, da, db);
        let os = operator_schmidt(&state, DEFAULT_RANK_CUTOFF).unwrap();
        let d = os.rank();
        let r = DiagonalScaling::new(logs[..d].iter().map(|x| x.exp()).collect()).unwrap();
        let n = d + extra;
        let u = IsometryMatrix::haar(d, n, seed ^ 0x5a5a).unwrap();
        let p = vec![1.0 / n as f64; n];
        let c: Vec<f64> = (0..n).map(|k| scale * (1.0 + k as f64)).collect();
        let dec = theorem1_decompose(&os, &r, &u, &p, &c).unwrap();
        let cost = decomposition_cost(&dec, &r).unwrap();
        prop_assert!((cost - os.lambda_total).abs() <= 1e-9);
        let recon = reconstruct(&dec.p, &dec.a, &dec.b);
        prop_assert!(frob(&(recon - to_na(state.rho()))) <= 1e-10);
    }

    #[test]
    fn product_decompositions_never_beat_the_cross_norm(seed in any::<u64>(), terms in 1usize..6) {
        // Random separable state from explicit PSD product terms.
        let mut g = rng(seed);
        let psd = |d: usize, g: &mut _| {
            let m = ginibre(d, d, g);
            let x = &m * &m.adjoint();
            let t = x.trace().re;
            x.scale_re(1.0 / t)
        };
        let a: Vec<_> = (0..terms).map(|_| psd(2, &mut g)).collect();
        let b: Vec<_> = (0..terms).map(|_| psd(2, &mut g)).collect();
        let p = vec![1.0 / terms as f64; terms];
        let dec = SeparableDecomposition::new(2, 2, p, a, b).unwrap();
        let state = BipartiteState::new(2, 2, dec.reconstruct()).unwrap();
        let os = operator_schmidt(&state, DEFAULT_RANK_CUTOFF).unwrap();
        let dec = project_coefficients(&dec, &os, &Tolerances::default()).unwrap();
        for r in [DiagonalScaling::identity(os.rank()), DiagonalScaling::sqrt_s(&os).unwrap()] {
            prop_assert!(decomposition_cost(&dec, &r).unwrap() >= os.lambda_total - 1e-9);
        }
        // Separable states satisfy the realignment bound.
        prop_assert!(os.lambda_total <= 1.0 + 1e-9);
    }

    #[test]
    fn diagonal_scaling_round_trips(entries in prop::collection::vec(0.01f64..100.0, 1..9), seed in any::<u64>()) {
        let r = DiagonalScaling::new(entries.clone()).unwrap();
        let v = ginibre(entries.len(), 1, &mut rng(seed)).column(0);
        let back = r.apply_inverse(&r.apply(&v).unwrap()).unwrap();
        prop_assert!(vnorm(&back.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-12 * vnorm(&v));
        for (x, y) in r.inverse().inverse().entries().iter().zip(r.entries()) {
            prop_assert!((x - y).abs() <= 1e-14 * y);
        }
    }

    #[test]
    fn theorem2_spaces_are_feasible(seed in any::<u64>()) {
        let state = random_density(seed, 2, 2);
        let os = operator_schmidt(&state, DEFAULT_RANK_CUTOFF).unwrap();
        let u = IsometryMatrix::haar(os.rank(), os.rank(), seed.rotate_left(7)).unwrap();
        let dec = theorem2_decompose(&os, &DiagonalScaling::identity(os.rank()), &u, 1.0).unwrap();
        let (va, vb) = StateSpace::pair_from_decomposition(&dec);
        let res = separable_feasible(&state, &va, &vb, &Tolerances::default()).unwrap();
        prop_assert!(res.feasible, "residual {}", res.residual);
        prop_assert!(res.weights.iter().flatten().all(|&q| q >= 0.0));
    }

    #[test]
    fn nnls_solutions_are_nonnegative_and_stationary(seed in any::<u64>(), m in 2usize..10, n in 1usize..10) {
        let mut g = rng(seed);
        let a = DMatrix::from_fn(m, n, |_, _| ginibre(1, 1, &mut g)[(0, 0)].re);
        let b: Vec<f64> = (0..m).map(|_| ginibre(1, 1, &mut g)[(0, 0)].re).collect();
        let s = nnls(&a, &b, 10_000).unwrap();
        let x = nalgebra::DVector::from_vec(s.x.clone());
        let w = a.tr_mul(&(nalgebra::DVector::from_vec(b.clone()) - &a * &x));
        for j in 0..n {
            prop_assert!(x[j] >= 0.0);
            prop_assert!(w[j] <= 1e-9);
            if x[j] > 0.0 {
                prop_assert!(w[j].abs() <= 1e-9);
            }
        }
        prop_assert!((s.residual - (nalgebra::DVector::from_vec(b) - &a * &x).norm()).abs() <= 1e-12);
    }

    #[test]
    fn lhv_models_are_normalised_and_match_born(na in unit_vector(), nb in unit_vector()) {
        let (pa, pb) = (Povm::qubit_projective(na), Povm::qubit_projective(nb));
        let rho = bell_rho();
        if let Ok(model) = build_lhv(&bell_phase_point(), &pa, &pb, &Tolerances::default()) {
            let mut total = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    let q = lhv_probability(&model, k, l).unwrap();
                    prop_assert!(q >= 0.0);
                    let born = (&rho * kron(&to_na(&pa.effects[k]), &to_na(&pb.effects[l]))).trace().re;
                    prop_assert!((q - born).abs() <= 1e-10);
                    total += q;
                }
            }
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), (da, db) in dims()) {
        let state = random_density(seed, da, db);
        let text = serde_json::to_string(&state).unwrap();
        prop_assert_eq!(&serde_json::from_str::<BipartiteState>(&text).unwrap(), &state);
        let os = operator_schmidt(&state, DEFAULT_RANK_CUTOFF).unwrap();
        let u = IsometryMatrix::haar(os.rank(), os.rank(), seed).unwrap();
        let dec = theorem2_decompose(&os, &DiagonalScaling::identity(os.rank()), &u, 1.0).unwrap();
        let text = serde_json::to_string(&dec).unwrap();
        prop_assert_eq!(&serde_json::from_str::<SeparableDecomposition>(&text).unwrap(), &dec);
    }
}
