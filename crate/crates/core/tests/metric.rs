use csbp::metric::*;
use csbp::tree_core::random::*;
use csbp::tree_core::*;
use csbp::RandomStream;
use proptest::prelude::*;
use rand::Rng;

fn pair(n: usize, max_vertices: usize, r: &mut RandomStream) -> (PointedTree, PointedTree) {
    (
        random_tree(n, max_vertices, r),
        random_tree(n, max_vertices, r),
    )
}

#[test]
fn exact_distance_lies_between_bounds_on_tiny_trees() {
    let delta = 1e-3;
    let mut r = RandomStream::new(21);
    for _ in 0..100 {
        let n = r.random_range(1..=2);
        let (a, b) = pair(n, 4, &mut r);
        let (a, b) = (scale_lengths(&a, 1e-3), scale_lengths(&b, 1e-3));
        let bounds = gh_bounds(&a, &b).unwrap();
        assert!(bounds.lower <= bounds.upper + 1e-15);
        let (ra, rb) = (refine(&a, delta), refine(&b, delta));
        let pinned: Vec<_> = ra
            .pointed()
            .iter()
            .copied()
            .zip(rb.pointed().iter().copied())
            .collect();
        let g = gh_finite(&distance_table(&ra), &distance_table(&rb), &pinned);
        assert!(
            g >= bounds.lower - delta && g <= bounds.upper + delta,
            "{g} {bounds:?}"
        );
        let exact = gh_exact_small(&a, &b, delta).unwrap();
        assert!(exact.lower >= bounds.lower - 1e-15 && exact.upper <= bounds.upper + 1e-15);
        assert!(exact.width() <= 2.0 * delta + 1e-15);
    }
}

#[test]
fn span_is_four_lipschitz() {
    let mut r = RandomStream::new(22);
    for _ in 0..1000 {
        let (a, b) = pair(r.random_range(1..=4), 15, &mut r);
        assert!(gh_lower(&a.span(), &b.span()).unwrap() <= 4.0 * gh_upper(&a, &b).unwrap() + 1e-12);
    }
}

#[test]
fn truncation_is_continuous() {
    let mut r = RandomStream::new(23);
    for _ in 0..1000 {
        let (a, b) = pair(r.random_range(1..=4), 15, &mut r);
        let t = r.random::<f64>() * 3.0;
        let s = r.random::<f64>();
        let lhs = gh_lower(&a.truncate(t), &b.truncate(t + s)).unwrap();
        assert!(lhs <= 4.0 * gh_upper(&a, &b).unwrap() + s + 1e-12);
    }
}

#[test]
fn grafting_is_subadditive() {
    let mut r = RandomStream::new(24);
    for _ in 0..1000 {
        let n = r.random_range(1..=3);
        let (a, a2) = pair(n, 12, &mut r);
        let (b, b2) = pair(r.random_range(0..=2), 8, &mut r);
        let i = r.random_range(0..=n);
        let lhs = gh_lower(
            &a.graft_vertex(i, &b).unwrap(),
            &a2.graft_vertex(i, &b2).unwrap(),
        )
        .unwrap();
        let rhs = gh_upper(&a, &a2).unwrap() + gh_upper(&b, &b2).unwrap();
        assert!(lhs <= rhs + 1e-12, "{lhs} {rhs}");
    }
}

#[test]
fn lgh_is_bounded_by_gh() {
    let mut r = RandomStream::new(25);
    for _ in 0..50 {
        let (a, b) = pair(r.random_range(1..=3), 10, &mut r);
        let d = lgh_numeric(&a, &b, 64).unwrap();
        assert!(d.lower <= d.upper + 1e-12 && d.upper <= 1.0 + 1e-12);
        assert!(d.lower <= (4.0 * gh_upper(&a, &b).unwrap()).min(1.0) + 1e-12);
        assert_eq!(lgh_numeric(&a, &a, 64).unwrap().upper, 0.0);
    }
}

#[test]
fn upper_bound_vanishes_only_on_equivalent_trees() {
    let mut r = RandomStream::new(26);
    for _ in 0..200 {
        let a = random_tree(r.random_range(1..=3), 15, &mut r);
        assert_eq!(
            gh_upper(&a, &perturb_lengths(&a, 1e-14, &mut r)).unwrap(),
            0.0
        );
        let b = perturb_lengths(&a, 0.1, &mut r);
        let u = gh_upper(&a, &b).unwrap();
        assert!(
            u > 0.0 && u <= a.max_height().max(b.max_height()) + 1e-12,
            "{u}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lower_bound_is_a_pseudometric(seed in any::<u64>(), n in 1usize..4) {
        let mut r = RandomStream::new(seed);
        let (a, b, c) = (random_tree(n, 12, &mut r), random_tree(n, 12, &mut r), random_tree(n, 12, &mut r));
        let ab = gh_lower(&a, &b).unwrap();
        prop_assert_eq!(gh_lower(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, gh_lower(&b, &a).unwrap());
        prop_assert!(ab <= gh_lower(&a, &c).unwrap() + gh_lower(&c, &b).unwrap() + 1e-12);
        prop_assert!(ab <= gh_upper(&a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn upper_bound_is_symmetric(seed in any::<u64>(), n in 1usize..4) {
        let mut r = RandomStream::new(seed);
        let (a, b) = (random_tree(n, 12, &mut r), random_tree(n, 12, &mut r));
        prop_assert!((gh_upper(&a, &b).unwrap() - gh_upper(&b, &a).unwrap()).abs() < 1e-12);
    }
}
