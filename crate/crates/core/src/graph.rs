//! Trees, graphs and the combinatorics the construction relies on: branch
//! decomposition at a vertex, the nearly-even-branching (NEB) test, matching
//! numbers and spanning NEB tree search.
//!
//! Vertices are 0-based here. File formats and the CLI use 1-based labels.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, normalizing every edge to `(min, max)` and sorting the
    /// edge list. Loops, repeated edges and out-of-range labels are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidVertex { vertex: a.max(b), n });
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("loop at vertex {}", a + 1)));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "repeated edge {{{}, {}}}",
                w[0].0 + 1,
                w[0].1 + 1
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &normalized {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges: normalized,
            adj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.adj[a].binary_search(&b).is_ok()
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::InvalidVertex { vertex: v, n: self.n })
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Returns the union of this graph with extra edges.
    pub fn with_edges(&self, extra: &[(usize, usize)]) -> Result<Self> {
        let mut all = self.edges.clone();
        all.extend_from_slice(extra);
        Self::new(self.n, &all)
    }

    /// Pairs `(i, j)`, `i < j`, that are not edges.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() == self.n - 1 && self.is_connected()
    }
}

/// A tree on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    graph: Graph,
}

impl Tree {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("a tree needs at least one vertex".into()));
        }
        let graph = Graph::new(n, edges)?;
        if graph.edges.len() != n - 1 {
            return Err(Error::InvalidGraph(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                graph.edges.len()
            )));
        }
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("edge set is not connected".into()));
        }
        Ok(Self { graph })
    }

    pub fn from_graph(graph: Graph) -> Result<Self> {
        Self::new(graph.n, &graph.edges)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges).expect("path is a tree")
    }

    /// Star with center 0.
    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::new(n, &edges).expect("star is a tree")
    }

    /// Decodes a Prüfer sequence of length `n - 2` (labels `< n`).
    pub fn from_prufer(n: usize, code: &[usize]) -> Result<Self> {
        if n < 2 {
            return Self::new(n.max(1), &[]);
        }
        if code.len() != n - 2 {
            return Err(Error::InvalidGraph(format!(
                "Prüfer code for {n} vertices must have length {}",
                n - 2
            )));
        }
        let mut degree = vec![1usize; n];
        for &c in code {
            if c >= n {
                return Err(Error::InvalidVertex { vertex: c, n });
            }
            degree[c] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &c in code {
            let leaf = (0..n).find(|&i| degree[i] == 1).expect("a leaf always exists");
            edges.push((leaf, c));
            degree[leaf] -= 1;
            degree[c] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
        edges.push((rest[0], rest[1]));
        Self::new(n, &edges)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.graph.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.graph.neighbors(v)
    }

    /// One branch per neighbor `v` of `w`: the component of `T - w` that
    /// contains `v`, relabeled to `0..k` in increasing original-label order.
    /// Branches are returned in increasing neighbor order.
    pub fn branches(&self, w: usize) -> Result<Vec<Branch>> {
        self.graph.check_vertex(w)?;
        let n = self.n();
        let mut out = Vec::with_capacity(self.graph.degree(w));
        let mut seen = vec![false; n];
        seen[w] = true;
        for &root in self.neighbors(w) {
            let mut members = vec![root];
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &x in self.neighbors(u) {
                    if !seen[x] {
                        seen[x] = true;
                        members.push(x);
                        queue.push_back(x);
                    }
                }
            }
            members.sort_unstable();
            out.push(Branch::induced(self, root, members));
        }
        Ok(out)
    }

    /// Subtree induced on `members` (which must induce a connected subgraph).
    pub fn induced(&self, members: &[usize]) -> Result<(Tree, Vec<usize>)> {
        let mut labels = members.to_vec();
        labels.sort_unstable();
        let local = |x: usize| labels.binary_search(&x).ok();
        let edges: Vec<_> = self
            .edges()
            .iter()
            .filter_map(|&(a, b)| Some((local(a)?, local(b)?)))
            .collect();
        Ok((Tree::new(labels.len(), &edges)?, labels))
    }

    /// Parent array of the tree rooted at `root` (`None` for the root) and
    /// a BFS order starting at `root`.
    pub fn rooted(&self, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let n = self.n();
        let mut parent = vec![None; n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &x in self.neighbors(u) {
                if !seen[x] {
                    seen[x] = true;
                    parent[x] = Some(u);
                    queue.push_back(x);
                }
            }
        }
        (parent, order)
    }

    /// Maps every vertex `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Tree> {
        let edges: Vec<_> = self.edges().iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Tree::new(self.n(), &edges)
    }
}

/// The component of `T - w` containing the neighbor `root`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    /// Neighbor of the deleted vertex, as a label of the parent tree.
    pub root: usize,
    /// The branch relabeled to `0..labels.len()`.
    pub tree: Tree,
    /// Local label to parent-tree label.
    pub labels: Vec<usize>,
}

impl Branch {
    fn induced(parent: &Tree, root: usize, members: Vec<usize>) -> Self {
        let (tree, labels) = parent.induced(&members).expect("components are trees");
        Self { root, tree, labels }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Local label of `root`.
    pub fn local_root(&self) -> usize {
        self.labels.binary_search(&self.root).expect("root belongs to its branch")
    }
}

/// Outcome of the NEB test at `vertex`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NebCertificate {
    pub vertex: usize,
    pub verdict: bool,
    pub witness: Option<NebWitness>,
}

/// Where the recursive NEB test broke down.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NebWitness {
    /// Labels from the queried vertex down to the vertex whose deletion has
    /// the wrong number of odd components. `chain[k+1]` is a neighbor of
    /// `chain[k]`, and each step enters the branch rooted at that neighbor.
    pub chain: Vec<usize>,
    /// Order of the subtree rooted at the failing vertex.
    pub order: usize,
    pub odd_components: usize,
    pub expected_odd: usize,
}

impl NebWitness {
    /// The branch root, next to the queried vertex, whose branch is not NEB.
    /// `None` when the parity condition fails at the queried vertex itself.
    pub fn failing_branch(&self) -> Option<usize> {
        self.chain.get(1).copied()
    }

    pub fn failing_vertex(&self) -> usize {
        *self.chain.last().expect("chain is never empty")
    }
}

/// Recursive NEB test at `w`.
pub fn is_neb(t: &Tree, w: usize) -> Result<NebCertificate> {
    t.graph.check_vertex(w)?;
    let labels: Vec<usize> = (0..t.n()).collect();
    let witness = neb_witness(t, w, &labels);
    Ok(NebCertificate {
        vertex: w,
        verdict: witness.is_none(),
        witness,
    })
}

fn neb_witness(t: &Tree, w: usize, labels: &[usize]) -> Option<NebWitness> {
    let n = t.n();
    if n == 1 {
        return None;
    }
    let branches = t.branches(w).expect("vertex checked by caller");
    let odd = branches.iter().filter(|b| b.size() % 2 == 1).count();
    let expected = usize::from(n.is_multiple_of(2));
    if odd != expected {
        return Some(NebWitness {
            chain: vec![labels[w]],
            order: n,
            odd_components: odd,
            expected_odd: expected,
        });
    }
    for b in &branches {
        let sub_labels: Vec<usize> = b.labels.iter().map(|&l| labels[l]).collect();
        if let Some(mut wit) = neb_witness(&b.tree, b.local_root(), &sub_labels) {
            wit.chain.insert(0, labels[w]);
            return Some(wit);
        }
    }
    None
}

/// Size of a maximum matching. Trees use leaf pruning; other graphs use
/// Edmonds' blossom algorithm.
pub fn matching_number(g: &Graph) -> usize {
    if g.is_tree() {
        tree_matching_number(g)
    } else {
        maximum_matching(g).len()
    }
}

fn tree_matching_number(g: &Graph) -> usize {
    let tree = Tree { graph: g.clone() };
    let (parent, order) = tree.rooted(0);
    let mut matched = vec![false; g.n];
    let mut size = 0;
    for &u in order.iter().rev() {
        if let Some(p) = parent[u] {
            if !matched[u] && !matched[p] {
                matched[u] = true;
                matched[p] = true;
                size += 1;
            }
        }
    }
    size
}

/// A maximum matching as a list of edges `(i, j)`, `i < j`.
pub fn maximum_matching(g: &Graph) -> Vec<(usize, usize)> {
    let mate = Blossom::new(g).run();
    let mut out: Vec<_> = mate
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.filter(|&j| i < j).map(|j| (i, j)))
        .collect();
    out.sort_unstable();
    out
}

struct Blossom<'a> {
    g: &'a Graph,
    mate: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
}

impl<'a> Blossom<'a> {
    fn new(g: &'a Graph) -> Self {
        let n = g.n;
        Self {
            g,
            mate: vec![None; n],
            parent: vec![None; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
        }
    }

    fn run(mut self) -> Vec<Option<usize>> {
        // Greedy warm start keeps the augmenting searches short.
        for &(a, b) in self.g.edges() {
            if self.mate[a].is_none() && self.mate[b].is_none() {
                self.mate[a] = Some(b);
                self.mate[b] = Some(a);
            }
        }
        for root in 0..self.g.n {
            if self.mate[root].is_some() {
                continue;
            }
            let mut v = self.find_path(root);
            while let Some(x) = v {
                let pv = self.parent[x].expect("augmenting path is linked");
                let next = self.mate[pv];
                self.mate[x] = Some(pv);
                self.mate[pv] = Some(x);
                v = next;
            }
        }
        self.mate
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.g.n];
        loop {
            a = self.base[a];
            seen[a] = true;
            match self.mate[a] {
                None => break,
                Some(m) => a = self.parent[m].expect("matched vertex on a tree path"),
            }
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            let m = self.mate[b].expect("walk stays on the alternating tree");
            b = self.parent[m].expect("matched vertex on a tree path");
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            let m = self.mate[v].expect("blossom vertices are matched");
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[m]] = true;
            self.parent[v] = Some(child);
            child = m;
            v = self.parent[m].expect("blossom path is linked");
        }
    }

    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.g.n;
        self.used.fill(false);
        self.parent.fill(None);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for idx in 0..self.g.adj[v].len() {
                let to = self.g.adj[v][idx];
                if self.base[v] == self.base[to] || self.mate[v] == Some(to) {
                    continue;
                }
                let odd_cycle = to == root
                    || self.mate[to].is_some_and(|m| self.parent[m].is_some());
                if odd_cycle {
                    let cur = self.lca(v, to);
                    self.in_blossom.fill(false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to].is_none() {
                    self.parent[to] = Some(v);
                    match self.mate[to] {
                        None => return Some(to),
                        Some(m) => {
                            self.used[m] = true;
                            queue.push_back(m);
                        }
                    }
                }
            }
        }
        None
    }
}

/// A spanning tree of `g` together with a vertex at which it is NEB.
///
/// A tree is NEB at `v` exactly when it has a perfect matching (even order)
/// or `T - v` has one (odd order), so the search reduces to a maximum
/// matching of `g` extended to a spanning tree. For even order the returned
/// vertex is the highest-labeled leaf.
pub fn find_spanning_neb_tree(g: &Graph) -> Result<Option<(Tree, usize)>> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidGraph("empty graph".into()));
    }
    if !g.is_connected() {
        return Err(Error::InvalidGraph("graph is not connected".into()));
    }
    let matching = maximum_matching(g);
    if matching.len() < n / 2 {
        return Ok(None);
    }
    let mut dsu = Dsu::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for &(a, b) in matching.iter().chain(g.edges()) {
        if dsu.union(a, b) {
            edges.push((a, b));
        }
    }
    let tree = Tree::new(n, &edges)?;
    let vertex = if n % 2 == 1 {
        let mut covered = vec![false; n];
        for &(a, b) in &matching {
            covered[a] = true;
            covered[b] = true;
        }
        covered.iter().position(|c| !c).expect("odd order leaves one vertex exposed")
    } else {
        (0..n)
            .rev()
            .find(|&u| tree.graph.degree(u) <= 1)
            .expect("every tree has a leaf")
    };
    debug_assert!(is_neb(&tree, vertex).map(|c| c.verdict).unwrap_or(false));
    Ok(Some((tree, vertex)))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
