mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use skew_siep::construct::{verify_construction, Tolerances};
use skew_siep::eig::skew_eigenvalues;
use skew_siep::fuzz::{random_pattern_matrix, random_skew, random_spectrum, random_tree};
use skew_siep::graph::{find_spanning_neb_tree, matching_number, maximum_matching, Graph};
use skew_siep::jacobian::{jacobian_columns, trace_map};
use skew_siep::poly::residues;
use skew_siep::{construct, is_neb, verify_duarte, SkewMatrix, Tree};

/// Bitmask adjacency.
fn masks(g: &Graph) -> Vec<u32> {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect()
}

fn component(adj: &[u32], alive: u32, start: usize) -> u32 {
    let mut seen = 1u32 << start;
    loop {
        let grow = (0..adj.len())
            .filter(|&v| seen >> v & 1 == 1)
            .fold(seen, |m, v| m | (adj[v] & alive));
        if grow == seen {
            return seen;
        }
        seen = grow;
    }
}

/// Direct transcription of the recursive definition on vertex sets.
fn neb_oracle(adj: &[u32], alive: u32, w: usize) -> bool {
    let n = alive.count_ones();
    let mut rest = alive & !(1 << w);
    let mut comps = Vec::new();
    while rest != 0 {
        let s = rest.trailing_zeros() as usize;
        let c = component(adj, alive & !(1 << w), s);
        comps.push(c);
        rest &= !c;
    }
    let odd = comps.iter().filter(|c| c.count_ones() % 2 == 1).count();
    if odd != usize::from(n.is_multiple_of(2)) {
        return false;
    }
    comps.iter().all(|&c| {
        let root = (adj[w] & c).trailing_zeros() as usize;
        neb_oracle(adj, c, root)
    })
}

fn brute_matching(adj: &[u32], alive: u32) -> usize {
    if alive == 0 {
        return 0;
    }
    let v = alive.trailing_zeros() as usize;
    let without = alive & !(1 << v);
    let mut best = brute_matching(adj, without);
    let mut nbrs = adj[v] & without;
    while nbrs != 0 {
        let u = nbrs.trailing_zeros() as usize;
        nbrs &= nbrs - 1;
        best = best.max(1 + brute_matching(adj, without & !(1 << u)));
    }
    best
}

fn tree_strategy(max_n: usize) -> impl Strategy<Value = Tree> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(0..n, n.saturating_sub(2)).prop_map(move |code| {
            if n <= 2 {
                Tree::path(n)
            } else {
                Tree::from_prufer(n, &code).unwrap()
            }
        })
    })
}

fn connected_graph_strategy() -> impl Strategy<Value = Graph> {
    (tree_strategy(7), any::<u64>()).prop_map(|(t, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extra: Vec<(usize, usize)> = t
            .graph()
            .non_edges()
            .into_iter()
            .filter(|_| rng.gen_bool(0.25))
            .take(5)
            .collect();
        t.graph().with_edges(&extra).unwrap()
    })
}

fn all_spanning_trees(g: &Graph) -> Vec<Tree> {
    let edges = g.edges();
    let m = edges.len();
    let k = g.n() - 1;
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        if let Ok(t) = Tree::new(g.n(), &chosen) {
            out.push(t);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn neb_matches_definition_and_matchings(t in tree_strategy(11)) {
        let adj = masks(t.graph());
        let all = (1u32 << t.n()) - 1;
        for v in 0..t.n() {
            let verdict = is_neb(&t, v).unwrap().verdict;
            prop_assert_eq!(verdict, neb_oracle(&adj, all, v));
            // NEB at v iff T (n even) or T - v (n odd) has a perfect matching.
            let pm = if t.n() % 2 == 0 {
                brute_matching(&adj, all) == t.n() / 2
            } else {
                brute_matching(&adj, all & !(1 << v)) == t.n() / 2
            };
            prop_assert_eq!(verdict, pm);
            if verdict {
                prop_assert_eq!(matching_number(t.graph()), t.n() / 2);
            }
        }
    }

    #[test]
    fn matching_number_matches_brute_force(g in connected_graph_strategy()) {
        let adj = masks(&g);
        let m = maximum_matching(&g);
        prop_assert_eq!(m.len(), brute_matching(&adj, (1u32 << g.n()) - 1));
        prop_assert_eq!(matching_number(&g), m.len());
        let mut used = vec![false; g.n()];
        for &(a, b) in &m {
            prop_assert!(g.has_edge(a, b));
            prop_assert!(!used[a] && !used[b]);
            used[a] = true;
            used[b] = true;
        }
    }

    #[test]
    fn spanning_search_matches_enumeration(g in connected_graph_strategy()) {
        let exists = all_spanning_trees(&g).iter().any(|t| {
            let adj = masks(t.graph());
            (0..t.n()).any(|v| neb_oracle(&adj, (1u32 << t.n()) - 1, v))
        });
        let found = find_spanning_neb_tree(&g).unwrap();
        prop_assert_eq!(found.is_some(), exists);
        if let Some((t, v)) = found {
            prop_assert!(t.edges().iter().all(|&(a, b)| g.has_edge(a, b)));
            prop_assert!(is_neb(&t, v).unwrap().verdict);
        }
    }

    #[test]
    fn eigenvalues_match_symmetric_oracle(seed in any::<u64>(), n in 1usize..13) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_skew(&mut rng, n);
        let s = skew_eigenvalues(&a).unwrap();
        let d = a.to_dense();
        let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)]);
        // -A^2 is symmetric positive semidefinite with eigenvalues b^2.
        let mut oracle: Vec<f64> = (-(&m * &m)).symmetric_eigen().eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
        oracle.sort_by(f64::total_cmp);
        let mut ours: Vec<f64> = s.imag_parts.iter().map(|b| b.abs()).collect();
        ours.sort_by(f64::total_cmp);
        let scale = s.max_abs().max(1.0);
        for (x, y) in ours.iter().zip(&oracle) {
            // sqrt amplifies errors near zero
            prop_assert!((x - y).abs() <= 1e-7 * scale, "{} vs {}", x, y);
        }
        prop_assert!(s.symmetry_defect() <= 1e-12 * scale);
    }

    #[test]
    fn constructed_matrices_verify_and_survive_sign_flips(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, v) = loop {
            let t = random_tree(&mut rng, n);
            let v = rng.gen_range(0..n);
            if is_neb(&t, v).unwrap().verdict {
                break (t, v);
            }
        };
        let spec = random_spectrum(&mut rng, n);
        let r = construct(&t, v, &spec).unwrap();
        prop_assert!(r.matrix.check_pattern(t.graph()).is_ok());
        prop_assert!(t.edges().iter().all(|&(i, j)| r.matrix.get(i, j) > 0.0));
        let s = verify_construction(&r, &t, v, &spec, &Tolerances::default()).unwrap();
        prop_assert!(s.passed, "{:?}", s);
        let mut flipped = r.matrix.clone();
        for k in 0..n {
            if rng.gen_bool(0.5) {
                flipped.flip_sign(k);
            }
        }
        let tol = 1e-8 * spec.scale();
        prop_assert!(skew_eigenvalues(&flipped).unwrap().deviation(&spec.lambdas) <= tol);
        prop_assert!(skew_eigenvalues(&flipped.delete(v)).unwrap().deviation(&spec.mus) <= tol);
        // Sum of squared weights at v equals the residue total.
        let ysum: f64 = t.neighbors(v).iter().map(|&u| r.matrix.get(v, u).powi(2)).sum();
        let lam2: f64 = spec.lambdas.iter().map(|x| x * x).sum();
        let mu2: f64 = spec.mus.iter().map(|x| x * x).sum();
        let res = residues(&spec);
        prop_assert!((ysum - (lam2 - mu2) / 2.0).abs() <= 1e-9 * lam2.max(1.0));
        prop_assert!((res.total() - ysum).abs() <= 1e-9 * lam2.max(1.0));
    }

    #[test]
    fn trace_map_equals_power_sums(seed in any::<u64>(), n in 1usize..10, v_pick in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_skew(&mut rng, n);
        let v = v_pick % n;
        let f = trace_map(&a, v).unwrap();
        let power = |s: &[f64], r: usize| -> f64 {
            let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * s.iter().map(|b| b.powi(2 * r as i32)).sum::<f64>() / (4.0 * r as f64)
        };
        let outer = skew_eigenvalues(&a).unwrap().imag_parts;
        let inner = skew_eigenvalues(&a.delete(v)).unwrap().imag_parts;
        let mut expected: Vec<f64> = (1..=n / 2).map(|r| power(&outer, r)).collect();
        expected.extend((1..=(n - 1) / 2).map(|r| power(&inner, r)));
        prop_assert_eq!(f.len(), n.saturating_sub(1));
        for (x, y) in f.iter().zip(&expected) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn derivative_lemma_on_supergraphs(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_skew(&mut rng, n);
        let v = rng.gen_range(0..n);
        let cols: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let j = jacobian_columns(&a, v, &cols).unwrap();
        let h = 1e-6;
        for (c, &(p, q)) in cols.iter().enumerate() {
            let mut plus = a.clone();
            plus.set(p, q, a.get(p, q) + h);
            let mut minus = a.clone();
            minus.set(p, q, a.get(p, q) - h);
            let fp = trace_map(&plus, v).unwrap();
            let fm = trace_map(&minus, v).unwrap();
            for r in 0..fp.len() {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                prop_assert!((fd - j[r][c]).abs() <= 1e-6, "row {} col {}: {} vs {}", r, c, fd, j[r][c]);
                if (p == v || q == v) && r >= n / 2 {
                    prop_assert_eq!(j[r][c], 0.0);
                }
            }
        }
    }

    #[test]
    fn residues_positive_and_palindromic(seed in any::<u64>(), n in 2usize..13) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spectrum(&mut rng, n);
        let r = residues(&spec);
        let big = r.c.iter().fold(0.0f64, |m, c| m.max(*c));
        prop_assert!(r.c.iter().all(|&c| c > 0.0));
        prop_assert!(r.palindromy_defect() <= 1e-9 * big);
    }
}

#[test]
fn non_neb_fixtures_fail_duarte() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in non_neb_examples() {
        for _ in 0..100 {
            let a: SkewMatrix = random_pattern_matrix(&mut rng, &f.tree);
            assert!(!verify_duarte(&a, &f.tree, f.v, 1e-8).unwrap().holds, "{}", f.name);
        }
    }
}

#[test]
fn neb_fixtures_admit_constructions() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for f in neb_examples() {
        let spec = random_spectrum(&mut rng, f.tree.n());
        let r = construct(&f.tree, f.v, &spec).unwrap();
        let s = verify_construction(&r, &f.tree, f.v, &spec, &Tolerances::default()).unwrap();
        assert!(s.passed, "{}: {:?}", f.name, s);
    }
}
