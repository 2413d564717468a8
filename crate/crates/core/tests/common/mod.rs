#![allow(dead_code)]

use skew_siep::{SkewMatrix, SpectrumSpec, Tree};

/// A tree from 1-based edges.
pub fn tree(n: usize, edges: &[(usize, usize)]) -> Tree {
    let e: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    Tree::new(n, &e).unwrap()
}

pub struct Fixture {
    pub name: &'static str,
    pub tree: Tree,
    /// 0-based marked vertex.
    pub v: usize,
    /// 0-based, where the figure marks a second vertex.
    pub w: Option<usize>,
}

fn fixture(name: &'static str, n: usize, edges: &[(usize, usize)], v: usize, w: Option<usize>) -> Fixture {
    Fixture {
        name,
        tree: tree(n, edges),
        v: v - 1,
        w: w.map(|x| x - 1),
    }
}

/// Trees that are NEB at the marked vertex.
pub fn neb_examples() -> Vec<Fixture> {
    vec![
        fixture("P", 2, &[(1, 2)], 1, None),
        fixture("Q", 3, &[(1, 2), (2, 3)], 1, None),
        fixture("T", 6, &[(1, 2), (1, 3), (1, 4), (2, 5), (3, 6)], 1, None),
        fixture("S", 8, &[(1, 2), (1, 3), (1, 4), (2, 5), (5, 8), (3, 6), (4, 7)], 1, None),
    ]
}

/// Trees that are not NEB at the marked vertex.
pub fn non_neb_examples() -> Vec<Fixture> {
    vec![
        fixture("K", 3, &[(1, 2), (1, 3)], 1, None),
        fixture("L", 4, &[(1, 2), (1, 3), (1, 4)], 1, None),
        fixture("F", 4, &[(1, 2), (2, 3), (2, 4)], 1, Some(2)),
        fixture("G", 7, &[(1, 2), (1, 3), (1, 4), (2, 5), (5, 7), (4, 6)], 1, None),
        fixture(
            "H",
            10,
            &[(1, 2), (2, 5), (5, 8), (1, 3), (3, 6), (6, 9), (6, 10), (1, 4), (4, 7)],
            1,
            Some(3),
        ),
    ]
}

/// The six-vertex tree whose branches at 6 have sizes 2, 2 and 1.
pub fn branching_example() -> Tree {
    tree(6, &[(6, 2), (2, 4), (6, 3), (6, 5), (3, 1)])
}

pub fn p4_spec() -> SpectrumSpec {
    SpectrumSpec::new(vec![-2.0, -1.0, 1.0, 2.0], vec![-1.5, 0.0, 1.5])
}

pub const P4_GOLDEN: [f64; 3] = [1.206045, 0.8918826, 1.658312];
pub const C4_GOLDEN: [f64; 3] = [1.257633, 0.8175322, 1.655294];

/// The 5x5 example with weights 8, 4, 2 on the path 1-2-3-4 and 1 on {2, 5}.
pub fn duarte_example() -> (SkewMatrix, Tree) {
    let t = tree(5, &[(1, 2), (2, 3), (3, 4), (2, 5)]);
    let a = SkewMatrix::from_edge_weights(5, &[(0, 1), (1, 2), (2, 3), (1, 4)], &[8.0, 4.0, 2.0, 1.0]);
    (a, t)
}
