use std::collections::BTreeMap;

use bospec::analytic::{
    counting_function, dilate_spectrum, enumerate_spectrum, enumerate_spectrum_exact,
    hermite_function, Cutoff,
};
use bospec::discretization::{assemble_hamiltonian, build_grid, GridOperator};
use bospec::eigensolver::{cluster_multiplicities, lowest_eigenpairs};
use bospec::potential::{
    confinement_profile, parse_potential, quadratic_potential, Axis, BinOp, Expr, Func, Potential,
    Var,
};
use bospec::probe::form_inequality_check;
use num_rational::Rational64;
use proptest::prelude::*;

fn arb_expr(n: usize, p: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..50.0).prop_map(Expr::Num),
        (1..=n).prop_map(|index| Expr::Var(Var {
            axis: Axis::X,
            index
        })),
        (1..=p.max(1)).prop_map(move |index| if p == 0 {
            Expr::Num(index as f64)
        } else {
            Expr::Var(Var {
                axis: Axis::Y,
                index,
            })
        }),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), -4i32..=6).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
            (prop_oneof![Just(Func::Abs), Just(Func::Exp)], inner)
                .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn arb_matrix(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    // Mᵀ M + I is symmetric positive definite
    proptest::collection::vec(-1.5f64..1.5, dim * dim).prop_map(move |m| {
        (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        (0..dim)
                            .map(|r| m[r * dim + i] * m[r * dim + j])
                            .sum::<f64>()
                            + if i == j { 1.0 } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    })
}

/// `Σ a_ij x_i x_j` spelled out term by term.
fn expanded(a: &[Vec<f64>], b: &[Vec<f64>]) -> String {
    let mut terms = Vec::new();
    for (axis, m) in [('x', a), ('y', b)] {
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                terms.push(format!("({v:e}) * {axis}{} * {axis}{}", i + 1, j + 1));
            }
        }
    }
    terms.join(" + ")
}

fn small_operator(pot: &Potential, n: usize, p: usize, h: f64) -> GridOperator {
    let dims = n + p;
    let points: Vec<usize> = (0..dims).map(|d| [13, 11, 9][d % 3]).collect();
    let grid = build_grid(n, p, &vec![4.0; dims], &points).unwrap();
    assemble_hamiltonian(&grid, pot, h).unwrap()
}

fn seeded_vector(len: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Levels of `Σ (2nᵢ+1) wᵢ ≤ e_max` by nested loops over every multi-index.
fn brute_force(w: &[Rational64], e_max: Rational64) -> Vec<(Rational64, usize)> {
    let mut counts: BTreeMap<Rational64, usize> = BTreeMap::new();
    fn walk(
        w: &[Rational64],
        acc: Rational64,
        e_max: Rational64,
        counts: &mut BTreeMap<Rational64, usize>,
    ) {
        let Some((first, rest)) = w.split_first() else {
            *counts.entry(acc).or_default() += 1;
            return;
        };
        let mut k = 0i64;
        loop {
            let e = acc + *first * Rational64::from_integer(2 * k + 1);
            let floor: Rational64 = rest.iter().copied().sum();
            if e + floor > e_max {
                break;
            }
            walk(rest, e, e_max, counts);
            k += 1;
        }
    }
    walk(w, Rational64::from_integer(0), e_max, &mut counts);
    counts.into_iter().collect()
}

fn arb_rational() -> impl Strategy<Value = Rational64> {
    (1i64..=12, 1i64..=4).prop_map(|(a, b)| Rational64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn printed_expressions_reparse_to_the_same_tree(e in arb_expr(2, 1)) {
        let text = e.to_string();
        let back = parse_potential(&text, 2, 1).unwrap();
        prop_assert_eq!(back.ast, e, "{}", text);
    }

    #[test]
    fn quadratic_matches_expanded_polynomial(
        (a, b, point) in (1usize..=3, 0usize..=2).prop_flat_map(|(n, p)| {
            (arb_matrix(n), arb_matrix(p), proptest::collection::vec(-5.0f64..5.0, n + p))
        })
    ) {
        let n = a.len();
        let p = b.len();
        let quad = quadratic_potential(&a, &b).unwrap().eval(&point).unwrap();
        let expr = parse_potential(&expanded(&a, &b), n, p).unwrap().eval(&point).unwrap();
        prop_assert!((quad - expr).abs() <= 1e-12 * quad.abs().max(1.0), "{quad} vs {expr}");
    }

    #[test]
    fn more_samples_never_raise_the_infimum(seed in 0u64..1000, extra in 1usize..200) {
        let pot = parse_potential("x1^2 + 3*y1^2 + abs(x1*y1)", 1, 1).map(|e| Potential::expression(e, true)).unwrap();
        let radii = [1.0, 2.0, 3.5];
        let few = confinement_profile(&pot, &radii, &[5.0, 5.0], 50, seed).unwrap();
        let many = confinement_profile(&pot, &radii, &[5.0, 5.0], 50 + extra, seed).unwrap();
        for (f, m) in few.inf_estimates.iter().zip(&many.inf_estimates) {
            prop_assert!(m <= f);
        }
    }

    #[test]
    fn sampled_exterior_infimum_respects_the_quadratic_bound(a in arb_matrix(2), seed in 0u64..100) {
        let pot = quadratic_potential(&a, &[]).unwrap();
        let lmin = pot.as_quadratic().unwrap().min_eigenvalue();
        let radii = [1.0, 2.0, 4.0];
        let profile = confinement_profile(&pot, &radii, &[6.0, 6.0], 200, seed).unwrap();
        for (q, inf) in radii.iter().zip(&profile.inf_estimates) {
            prop_assert!(*inf >= lmin * q * q * (1.0 - 1e-12));
        }
    }

    #[test]
    fn assembled_operator_is_symmetric(a in arb_matrix(1), b in arb_matrix(1), h in 0.05f64..1.0, seed in 0u64..1000) {
        let op = small_operator(&quadratic_potential(&a, &b).unwrap(), 1, 1, h);
        let u = seeded_vector(op.dim(), seed);
        let v = seeded_vector(op.dim(), seed + 1);
        let hu = op.apply(&u).unwrap();
        let hv = op.apply(&v).unwrap();
        let scale = (dot(&u, &u) * dot(&v, &v)).sqrt() * op.one_norm();
        prop_assert!((dot(&hu, &v) - dot(&u, &hv)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn form_splits_into_kinetic_and_potential_parts(a in arb_matrix(2), h in 0.05f64..1.0, seed in 0u64..1000) {
        let op = small_operator(&quadratic_potential(&a, &[]).unwrap(), 2, 0, h);
        let u = seeded_vector(op.dim(), seed);
        let full = op.quadratic_form(&u).unwrap();
        let parts = op.kinetic_form(&u).unwrap() + op.potential_form(&u).unwrap();
        prop_assert!(full >= 0.0);
        prop_assert!((full - parts).abs() <= 1e-10 * full.abs().max(1e-300));
    }

    #[test]
    fn form_chain_has_no_violations(a in arb_matrix(1), b in arb_matrix(1), seed in 0u64..1000) {
        let op = small_operator(&quadratic_potential(&a, &b).unwrap(), 1, 1, 0.3);
        let report = form_inequality_check(&op, 20, seed).unwrap();
        prop_assert_eq!(report.violations, 0);
    }

    #[test]
    fn enumeration_matches_nested_loops(w in proptest::collection::vec(arb_rational(), 1..=3), e_max in 1i64..=50) {
        let e_max = Rational64::from_integer(e_max);
        let floor: Rational64 = w.iter().copied().sum();
        prop_assume!(floor <= e_max);
        let expected = brute_force(&w, e_max);
        let spec = enumerate_spectrum_exact(&w, 1.0, Cutoff::MaxEnergy(*e_max.numer() as f64)).unwrap();
        let got: Vec<(f64, usize)> = spec.levels.iter().map(|l| (l.energy, l.multiplicity)).collect();
        let want: Vec<(f64, usize)> = expected.iter().map(|(e, m)| (*e.numer() as f64 / *e.denom() as f64, *m)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn scaling_commutes_with_enumeration(w in proptest::collection::vec(0.5f64..4.0, 1..=3), lambda in 0.1f64..10.0) {
        let direct = enumerate_spectrum(&w, lambda, Cutoff::Count(12)).unwrap();
        let dilated = dilate_spectrum(&enumerate_spectrum(&w, 1.0, Cutoff::Count(12)).unwrap(), lambda).unwrap();
        prop_assert_eq!(direct.levels.len(), dilated.levels.len());
        for (a, b) in direct.levels.iter().zip(&dilated.levels) {
            prop_assert_eq!(a.multiplicity, b.multiplicity);
            prop_assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy);
        }
    }

    #[test]
    fn counting_function_is_a_right_continuous_staircase(w in proptest::collection::vec(0.5f64..4.0, 1..=3)) {
        let spec = enumerate_spectrum(&w, 1.0, Cutoff::MaxEnergy(30.0)).unwrap();
        let mut below = 0;
        for level in &spec.levels {
            prop_assert_eq!(counting_function(&spec, level.energy * (1.0 - 1e-12)).unwrap(), below);
            below += level.multiplicity;
            prop_assert_eq!(counting_function(&spec, level.energy).unwrap(), below);
        }
    }

    #[test]
    fn hermite_parity(p in 0usize..40, x in -15.0f64..15.0) {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((hermite_function(p, -x) - sign * hermite_function(p, x)).abs() <= 1e-12);
    }

    #[test]
    fn clusters_respect_their_gap(mut eigs in proptest::collection::vec(0.0f64..20.0, 1..30), gap in 1e-4f64..1.0) {
        eigs.sort_by(f64::total_cmp);
        let clusters = cluster_multiplicities(&eigs, gap);
        prop_assert_eq!(clusters.iter().map(|c| c.multiplicity).sum::<usize>(), eigs.len());
        for c in &clusters {
            prop_assert!(c.multiplicity >= 1);
            prop_assert!(c.spread <= gap * (c.multiplicity - 1) as f64 + 1e-12);
        }
        for w in clusters.windows(2) {
            prop_assert!(w[1].energy > w[0].energy);
        }
    }
}

#[test]
fn growing_k_keeps_converged_values() {
    let grid = build_grid(1, 0, &[8.0], &[299]).unwrap();
    let op = assemble_hamiltonian(&grid, &Potential::radial_square(1, 0), 1.0).unwrap();
    let three = lowest_eigenpairs(&op, 3, 1e-10, 50_000, 0).unwrap();
    let six = lowest_eigenpairs(&op, 6, 1e-10, 50_000, 0).unwrap();
    for (a, b) in three.eigenvalues.iter().zip(&six.eigenvalues) {
        assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }
}
