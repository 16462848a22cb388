use std::sync::Arc;

use pucci_core::geometry::{rasterize, DomainSpec, GraphSign, GridMask, Piece, Point};
use pucci_core::dini::Modulus;
use pucci_core::pucci::EllipticityPair;
use pucci_core::solver::{solve_dirichlet, DirichletProblem, OperatorTag, SolutionField, SolveOptions, StencilSet};
use proptest::prelude::*;

const H: f64 = 1.0 / 16.0;
const TOL: f64 = 1e-10;

fn mask(domain: &DomainSpec) -> Arc<GridMask> {
    Arc::new(rasterize(domain, H, &StencilSet::new(3).unwrap()).unwrap())
}

fn solve(
    mask: &Arc<GridMask>,
    op: OperatorTag,
    ell: EllipticityPair,
    g: &(dyn Fn(Point, Piece) -> f64 + Sync),
    f: &(dyn Fn(Point) -> f64 + Sync),
) -> SolutionField {
    let problem = DirichletProblem {
        mask: mask.clone(),
        operator: op,
        ell,
        source: f,
        boundary: g,
        source_description: String::new(),
    };
    solve_dirichlet(
        &problem,
        &SolveOptions {
            tol: TOL,
            ..SolveOptions::default()
        },
    )
    .unwrap()
}

fn operator() -> impl Strategy<Value = OperatorTag> {
    prop_oneof![Just(OperatorTag::PucciPlus), Just(OperatorTag::PucciMinus)]
}

fn domain() -> impl Strategy<Value = DomainSpec> {
    prop_oneof![
        Just(DomainSpec::half_ball(1.0)),
        Just(DomainSpec::graph(GraphSign::ExteriorMinus, Modulus::power(0.5, 1.0), 1.0)),
        Just(DomainSpec::graph(GraphSign::InteriorPlus, Modulus::log_inverse(1.0, 1.0), 1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ordered_data_give_ordered_solutions(
        domain in domain(),
        op in operator(),
        big in 1.0f64..6.0,
        a in prop::array::uniform3(-1.0f64..1.0),
        lift in 0.0f64..0.5,
        drop in 0.0f64..1.0,
    ) {
        let m = mask(&domain);
        let ell = EllipticityPair::new(1.0, big).unwrap();
        let g1 = move |p: Point, _: Piece| a[0] + a[1] * (3.0 * p[0]).sin() + a[2] * p[1];
        let g2 = move |p: Point, piece: Piece| g1(p, piece) + lift;
        let f1 = move |p: Point| a[1] * p[0];
        let f2 = move |p: Point| f1(p) - drop;
        let u1 = solve(&m, op, ell, &g1, &f1);
        let u2 = solve(&m, op, ell, &g2, &f2);
        for &i in m.interior() {
            prop_assert!(u1.values[i as usize] <= u2.values[i as usize] + 1e-9);
        }
    }

    #[test]
    fn constants_shift_solutions(
        op in operator(),
        c in -2.0f64..2.0,
        a in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let m = mask(&DomainSpec::half_ball(1.0));
        let ell = EllipticityPair::new(1.0, 3.0).unwrap();
        let g = move |p: Point, _: Piece| a[0] * p[0] * p[0] + a[1] * p[1];
        let gc = move |p: Point, piece: Piece| g(p, piece) + c;
        let u = solve(&m, op, ell, &g, &|_| 0.0);
        let v = solve(&m, op, ell, &gc, &|_| 0.0);
        for &i in m.interior() {
            prop_assert!((v.values[i as usize] - u.values[i as usize] - c).abs() <= 1e-8);
        }
    }

    #[test]
    fn reflection_symmetry(domain in domain(), op in operator(), b in -1.0f64..1.0) {
        let m = mask(&domain);
        let ell = EllipticityPair::new(1.0, 2.0).unwrap();
        let g = move |p: Point, _: Piece| (2.0 * p[0]).cos() + b * p[1];
        let u = solve(&m, op, ell, &g, &|p| p[0] * p[0]);
        let n = m.half_width();
        for j in -n..=n {
            for i in 1..=n {
                match (u.value_at(i, j), u.value_at(-i, j)) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-8, "({i},{j}): {x} vs {y}"),
                    (None, None) => {}
                    other => prop_assert!(false, "asymmetric mask at ({i},{j}): {other:?}"),
                }
            }
        }
    }
}

#[test]
fn wider_stencils_agree_on_aligned_problems() {
    // x₂-only data: every frame sees the same one-dimensional problem.
    let domain = DomainSpec::half_ball(1.0);
    let ell = EllipticityPair::new(1.0, 2.0).unwrap();
    let g = |p: Point, _: Piece| p[1];
    let fields: Vec<SolutionField> = (1..=3)
        .map(|w| {
            let m = Arc::new(rasterize(&domain, H, &StencilSet::new(w).unwrap()).unwrap());
            solve(&m, OperatorTag::PucciPlus, ell, &g, &|_| 0.0)
        })
        .collect();
    for f in &fields {
        for &i in f.mask.interior() {
            let p = f.mask.point(i as usize);
            assert!((f.values[i as usize] - p[1]).abs() <= 1e-8);
        }
    }
}
