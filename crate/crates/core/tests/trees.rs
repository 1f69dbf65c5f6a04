use csbp::tree_core::random::*;
use csbp::tree_core::*;
use csbp::RandomStream;
use rand::Rng;

#[test]
fn graft_split_identity_random() {
    let mut r = RandomStream::new(1);
    for _ in 0..300 {
        let n = r.random_range(1..=5);
        let t = random_root_non_branching(n, 40, &mut r);
        if t.pointed().iter().all(|&v| v == 0) {
            // the whole tree is the bush at the root, which graft drops
            continue;
        }
        let split = split_n(&t);
        let back = graft_n(&code_l(&t).unwrap(), &split.spine_components()).unwrap();
        assert!(equivalent(&back, &t), "{}\n{}", to_text(&t), to_text(&back));
    }
}

#[test]
fn split_preserves_total_length() {
    let mut r = RandomStream::new(7);
    for _ in 0..200 {
        let t = random_tree(r.random_range(1..=4), 40, &mut r);
        let s = split_n(&t);
        let sum: f64 = s.components.iter().map(|c| c.total_length()).sum();
        assert!((sum - t.total_length()).abs() < 1e-9);
    }
}

#[test]
fn code_round_trips_random() {
    let mut r = RandomStream::new(2);
    for _ in 0..300 {
        let n = r.random_range(1..=5);
        let t = random_tree(n, 40, &mut r);
        let code = code_l(&t).unwrap();
        let d = code_d(&code);
        assert!(d.max_abs_diff(&t.pointed_distances()) < 1e-12);
        assert!(four_point_check(&d).holds);
        let again = matrix_l(&d).unwrap();
        assert!(again.max_abs_diff(&code) < 1e-9, "{code:?} {again:?}");
        let rebuilt = from_code(&code).unwrap();
        assert!(equivalent(&rebuilt, &t.span()));
    }
}

#[test]
fn measure_round_trips_random() {
    let mut r = RandomStream::new(3);
    for _ in 0..300 {
        let k = r.random_range(0..6);
        let atoms = random_atoms(k, 3.0, 8, &mut r);
        let s = tree_from_measure(&atoms, 3.0).unwrap();
        let back = measure_from_tree(&s);
        assert_eq!(back.len(), atoms.len());
        let mut sorted = atoms.clone();
        sorted.sort_by(|a, b| a.height.total_cmp(&b.height));
        let mut used = vec![false; back.len()];
        for a in &sorted {
            let hit = (0..back.len()).find(|&j| {
                !used[j]
                    && (back[j].height - a.height).abs() < 1e-12
                    && equivalent(&back[j].tree, &a.tree)
            });
            used[hit.expect("atom recovered")] = true;
        }
        let s2 = tree_from_measure(&back, 3.0).unwrap();
        assert!(equivalent(&s2.tree, &s.tree));
    }
}

#[test]
fn text_round_trip_random() {
    let mut r = RandomStream::new(4);
    for _ in 0..200 {
        let t = random_tree(r.random_range(0..=4), 30, &mut r);
        let back = from_text(&to_text(&t)).unwrap();
        assert!(equivalent(&back, &t));
        assert_eq!(to_text(&back), to_text(&t));
    }
}

#[test]
fn canonical_is_invariant_under_perturbation_below_tolerance() {
    let mut r = RandomStream::new(5);
    for _ in 0..100 {
        let t = random_tree(3, 20, &mut r);
        assert!(equivalent(&perturb_lengths(&t, 1e-13, &mut r), &t));
        assert!(!equivalent(&perturb_lengths(&t, 1e-3, &mut r), &t) || t.vertex_count() == 1);
    }
}

#[test]
fn truncations_of_marked_trees() {
    let mut r = RandomStream::new(6);
    for _ in 0..100 {
        let atoms = random_atoms(4, 2.0, 6, &mut r);
        let s = tree_from_measure(&atoms, 2.0).unwrap();
        let level = r.random::<f64>() * 2.0;
        let plus = truncate2_plus(&s.tree, level).unwrap();
        let minus = truncate2_minus(&s.tree, level).unwrap();
        let expect_minus: f64 = level
            + atoms
                .iter()
                .filter(|a| a.height < level)
                .map(|a| a.tree.total_length())
                .sum::<f64>();
        assert!((minus.total_length() - expect_minus).abs() < 1e-9);
        assert!(plus.total_length() >= minus.total_length());
        let tilde = truncate2_plus_tilde(&s, level).unwrap();
        assert!((tilde.height(tilde.pointed()[1]) - level).abs() < 1e-12);
    }
}
