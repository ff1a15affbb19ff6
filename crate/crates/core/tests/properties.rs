use std::sync::Arc;

use proptest::prelude::*;

use stwave::fem::FeSpace;
use stwave::mesh::Mesh;

/// Refines `steps` times, marking the elements picked by `picks` (taken modulo the count).
fn refined(picks: &[Vec<usize>]) -> Mesh {
    let mut mesh = Mesh::uniform(2).unwrap();
    for pick in picks {
        let n = mesh.n_elements();
        let marked: Vec<usize> = pick.iter().map(|i| i % n).collect();
        mesh = mesh.refine_marked(&marked).unwrap();
    }
    mesh
}

fn picks() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..10_000, 1..6), 0..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_keeps_the_mesh_valid(steps in picks()) {
        let mesh = refined(&steps);
        prop_assert!(mesh.check_invariants().is_ok());
        prop_assert!((mesh.total_area() - 1.0).abs() <= 1e-12);
        let initial = Mesh::uniform(2).unwrap().min_angle();
        prop_assert!(mesh.min_angle() >= 0.5 * initial - 1e-12);
        // every interior edge separates exactly two elements
        for e in 0..mesh.n_edges() {
            let [a, b] = mesh.edge_elements(e);
            prop_assert!(a.is_some());
            prop_assert_eq!(b.is_none(), mesh.edge_tag(e).is_some());
        }
        // the dump format round-trips
        let back = Mesh::from_dump(&mesh.to_dump()).unwrap();
        prop_assert_eq!(back.to_dump(), mesh.to_dump());
    }

    #[test]
    fn refinement_is_deterministic_and_monotone(steps in picks(), extra in prop::collection::vec(0usize..10_000, 1..4)) {
        let mesh = refined(&steps);
        let marked: Vec<usize> = extra.iter().map(|i| i % mesh.n_elements()).collect();
        let a = mesh.refine_marked(&marked).unwrap();
        let b = mesh.refine_marked(&marked).unwrap();
        prop_assert_eq!(a.to_dump(), b.to_dump());
        prop_assert!(a.n_elements() > mesh.n_elements());
        prop_assert!(a.vertices()[..mesh.n_vertices()] == *mesh.vertices());
    }

    #[test]
    fn spaces_reproduce_polynomials(
        steps in picks(),
        p in 1usize..=3,
        coeffs in prop::collection::vec(-2.0f64..2.0, 10),
        points in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 20),
    ) {
        let mesh = Arc::new(refined(&steps));
        let space = FeSpace::new(mesh, p, false).unwrap();
        // full polynomial of total degree p in (t, x)
        let monomials: Vec<(i32, i32)> = (0..=p as i32).flat_map(|d| (0..=d).map(move |i| (d - i, i))).collect();
        let f = |t: f64, x: f64| monomials.iter().zip(&coeffs).map(|(&(a, b), c)| c * t.powi(a) * x.powi(b)).sum::<f64>();
        let df = |t: f64, x: f64| {
            monomials.iter().zip(&coeffs).fold([0.0, 0.0], |g, (&(a, b), c)| {
                let dt = if a > 0 { c * a as f64 * t.powi(a - 1) * x.powi(b) } else { 0.0 };
                let dx = if b > 0 { c * b as f64 * t.powi(a) * x.powi(b - 1) } else { 0.0 };
                [g[0] + dt, g[1] + dx]
            })
        };
        let u = space.interpolate(f);
        for (t, x) in points {
            let (val, grad) = space.eval_field(&u, [t, x]).unwrap();
            prop_assert!((val - f(t, x)).abs() <= 1e-10, "value at ({}, {})", t, x);
            let g = df(t, x);
            prop_assert!((grad[0] - g[0]).abs() <= 1e-8 && (grad[1] - g[1]).abs() <= 1e-8);
        }
    }
}
