//! Undirected simple graphs, the 2k-neighbour ring lattice and its
//! small-world extension with random shortcuts.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Undirected simple graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self { adjacency: vec![Vec::new(); n], edge_count: 0 }
    }

    /// Builds a graph from unordered pairs. Rejects self-loops, duplicates
    /// and out-of-range indices.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidParams(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidParams(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidParams(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self::from_sorted_pairs(n, set))
    }

    fn from_sorted_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (i, j) in pairs {
            adjacency[i].push(j);
            adjacency[j].push(i);
            edge_count += 1;
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { adjacency, edge_count }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_sorted_pairs(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbours of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i).is_some_and(|n| n.binary_search(&j).is_ok())
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, n)| n.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Node `i` relabelled to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count() {
            return Err(Error::Dimension { expected: self.node_count(), got: perm.len() });
        }
        Self::from_edges(self.node_count(), self.edges().map(|(i, j)| (perm[i], perm[j])))
    }
}

/// Parameters of the add-shortcut small-world model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallWorldParams {
    pub node_count: usize,
    /// Each node links to its `2 * half_degree` nearest ring neighbours.
    pub half_degree: usize,
    /// Expected shortcuts per node; shortcut probability is `rate / N`.
    pub shortcut_rate: f64,
    pub seed: u64,
}

impl SmallWorldParams {
    pub fn new(node_count: usize, half_degree: usize, shortcut_rate: f64, seed: u64) -> Self {
        Self { node_count, half_degree, shortcut_rate, seed }
    }

    pub fn shortcut_probability(&self) -> f64 {
        self.shortcut_rate / self.node_count as f64
    }

    pub fn validate(&self) -> Result<()> {
        check_ring(self.node_count, self.half_degree)?;
        if !(self.shortcut_rate >= 0.0) || !self.shortcut_rate.is_finite() {
            return Err(Error::InvalidParams(format!("shortcut rate must be >= 0, got {}", self.shortcut_rate)));
        }
        if self.shortcut_probability() > 1.0 {
            return Err(Error::InvalidParams(format!(
                "shortcut probability r/N = {} exceeds 1",
                self.shortcut_probability()
            )));
        }
        Ok(())
    }
}

fn check_ring(n: usize, k: usize) -> Result<()> {
    if k == 0 || n <= 2 * k {
        return Err(Error::InvalidParams(format!("ring lattice needs N > 2k >= 2, got N = {n}, k = {k}")));
    }
    Ok(())
}

fn ring_distance(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// Ring of `n` nodes, each joined to the `k` nearest nodes on either side.
pub fn ring_lattice(n: usize, k: usize) -> Result<Graph> {
    check_ring(n, k)?;
    let pairs = (0..n).flat_map(|i| (1..=k).map(move |m| (i, (i + m) % n)));
    Ok(Graph::from_sorted_pairs(n, pairs.map(|(i, j)| (i.min(j), i.max(j)))))
}

/// Ring lattice plus an independent Bernoulli(r/N) shortcut on every pair
/// not already joined by the ring.
///
/// Pairs are visited by geometric skipping over the row-major index of
/// `{(i, j) : i < j}`, so the cost is proportional to the number of
/// shortcuts drawn rather than `N^2`.
pub fn generate_small_world(params: &SmallWorldParams) -> Result<Graph> {
    params.validate()?;
    let n = params.node_count;
    let k = params.half_degree;
    let p = params.shortcut_probability();

    let mut pairs: BTreeSet<(usize, usize)> =
        (0..n).flat_map(|i| (1..=k).map(move |m| (i, (i + m) % n))).map(|(i, j)| (i.min(j), i.max(j))).collect();

    if p > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let total = n * (n - 1) / 2;
        let log_q = (1.0 - p).ln();
        // (row, col) is the pair at flat index `index`; start at (0, 1)
        let (mut row, mut col, mut index) = (0usize, 1usize, 0usize);
        let mut step = draw_skip(&mut rng, p, log_q);
        loop {
            index = match index.checked_add(step) {
                Some(v) if v < total => v,
                _ => break,
            };
            let mut remaining = step;
            while remaining > 0 {
                let left_in_row = n - 1 - col;
                if remaining <= left_in_row {
                    col += remaining;
                    remaining = 0;
                } else {
                    remaining -= left_in_row + 1;
                    row += 1;
                    col = row + 1;
                }
            }
            if ring_distance(row, col, n) > k {
                pairs.insert((row, col));
            }
            step = draw_skip(&mut rng, p, log_q).saturating_add(1);
        }
    }
    Ok(Graph::from_sorted_pairs(n, pairs))
}

/// Number of failures before the next Bernoulli(p) success.
fn draw_skip(rng: &mut ChaCha8Rng, p: f64, log_q: f64) -> usize {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let skip = (u.ln() / log_q).floor();
    if skip >= usize::MAX as f64 {
        usize::MAX
    } else {
        skip as usize
    }
}

pub fn degree_sequence(g: &Graph) -> Vec<usize> {
    (0..g.node_count()).map(|i| g.degree(i)).collect()
}

/// Exact triangle count: sorted-list intersection over every edge, each
/// triangle seen once per edge.
pub fn count_triangles(g: &Graph) -> u64 {
    let mut total = 0u64;
    for (i, j) in g.edges() {
        let (a, b) = (g.neighbors(i), g.neighbors(j));
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    total += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
    }
    total / 3
}

/// Dense combinatorial Laplacian `D - A`.
pub fn laplacian(g: &Graph) -> Matrix {
    let n = g.node_count();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            l[(i, j)] = -1.0;
        }
    }
    l
}

/// Number of connected components (union-find).
pub fn connected_components(g: &Graph) -> usize {
    let n = g.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for (i, j) in g.edges() {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            components -= 1;
        }
    }
    components
}

/// Serializes `g` in edge-list text form: node count, then one `i j` line
/// per edge with `i < j`.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = String::with_capacity(16 * (g.edge_count() + 1));
    let _ = writeln!(out, "{}", g.node_count());
    for (i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    w.write_all(format_edge_list(g).as_bytes())?;
    Ok(())
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_edge_list(g))?;
    Ok(())
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let file = std::fs::File::open(path)?;
    read_edge_list(std::io::BufReader::new(file))
}

/// Parses the edge-list format. Blank lines and lines starting with `#`
/// are skipped; errors carry the 1-based line number.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut node_count: Option<usize> = None;
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut fields = text.split_whitespace();
        let Some(n) = node_count else {
            let n: usize = text.parse().map_err(|_| err(format!("expected node count, found {text:?}")))?;
            if n == 0 {
                return Err(err("node count must be positive".into()));
            }
            node_count = Some(n);
            continue;
        };
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(format!("expected two node indices, found {text:?}")));
        };
        let i: usize = a.parse().map_err(|_| err(format!("bad node index {a:?}")))?;
        let j: usize = b.parse().map_err(|_| err(format!("bad node index {b:?}")))?;
        if i == j {
            return Err(err(format!("self-loop at node {i}")));
        }
        if i >= n || j >= n {
            return Err(err(format!("node index out of range 0..{n}: ({i}, {j})")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(err(format!("duplicate edge ({i}, {j})")));
        }
    }
    let n = node_count.ok_or(Error::Parse { line: 0, msg: "missing node count header".into() })?;
    Ok(Graph::from_sorted_pairs(n, seen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_triangles(g: &Graph) -> u64 {
        let n = g.node_count();
        let mut t = 0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c) {
                        t += 1;
                    }
                }
            }
        }
        t
    }

    fn trace_a_cubed(g: &Graph) -> f64 {
        let mut a = laplacian(g);
        for v in a.as_mut_slice() {
            *v = if *v == -1.0 { 1.0 } else { 0.0 };
        }
        a.matmul(&a).matmul(&a).trace()
    }

    #[test]
    fn six_cycle() {
        let g = ring_lattice(6, 1).unwrap();
        assert_eq!(degree_sequence(&g), vec![2; 6]);
        assert_eq!(count_triangles(&g), 0);
        assert_eq!(g.edge_count(), 6);
        let l = laplacian(&g);
        for i in 0..6 {
            assert_eq!(l[(i, i)], 2.0);
            assert_eq!(l[(i, (i + 1) % 6)], -1.0);
            assert_eq!(l[(i, (i + 5) % 6)], -1.0);
            assert_eq!(l[(i, (i + 3) % 6)], 0.0);
        }
    }

    #[test]
    fn ring_adjacency_is_exact() {
        let (n, k) = (20, 3);
        let g = ring_lattice(n, k).unwrap();
        for i in 0..n {
            let mut want: Vec<usize> = (1..=k).flat_map(|m| [(i + m) % n, (i + n - m) % n]).collect();
            want.sort_unstable();
            assert_eq!(g.neighbors(i), want.as_slice());
        }
    }

    #[test]
    fn ring_rejects_small_n() {
        assert!(ring_lattice(6, 3).is_err());
        assert!(ring_lattice(5, 0).is_err());
    }

    #[test]
    fn complete_graph_triangles() {
        assert_eq!(count_triangles(&Graph::complete(4)), 4);
        assert_eq!(count_triangles(&Graph::complete(7)), 35);
    }

    #[test]
    fn ring_triangles_match_enumeration() {
        for n in [10, 50] {
            for k in 1..=3 {
                let g = ring_lattice(n, k).unwrap();
                let brute = brute_triangles(&g);
                assert_eq!(brute, (n * k * (k - 1) / 2) as u64, "n={n} k={k}");
                assert_eq!(count_triangles(&g), brute);
            }
        }
        let g = ring_lattice(512, 3).unwrap();
        assert_eq!(count_triangles(&g), 1536);
        assert!(degree_sequence(&g).iter().all(|&d| d == 6));
    }

    #[test]
    fn single_edge_laplacian() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(laplacian(&g), Matrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]));
    }

    #[test]
    fn zero_rate_is_plain_ring() {
        let g = generate_small_world(&SmallWorldParams::new(512, 3, 0.0, 99)).unwrap();
        assert_eq!(g, ring_lattice(512, 3).unwrap());
    }

    #[test]
    fn rate_above_n_rejected() {
        assert!(generate_small_world(&SmallWorldParams::new(20, 2, 21.0, 1)).is_err());
        assert!(generate_small_world(&SmallWorldParams::new(20, 2, -1.0, 1)).is_err());
    }

    #[test]
    fn full_probability_gives_complete_graph() {
        let g = generate_small_world(&SmallWorldParams::new(12, 2, 12.0, 3)).unwrap();
        assert_eq!(g, Graph::complete(12));
    }

    #[test]
    fn mean_degree_near_expectation() {
        let g = generate_small_world(&SmallWorldParams::new(512, 3, 4.0, 7)).unwrap();
        let degrees = degree_sequence(&g);
        let mean = degrees.iter().sum::<usize>() as f64 / 512.0;
        assert!((mean - 10.0).abs() <= 1.0, "mean degree {mean}");
        assert_eq!(degrees.iter().sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn edge_list_format_and_round_trip() {
        let g = ring_lattice(6, 1).unwrap();
        let text = format_edge_list(&g);
        assert_eq!(text, "6\n0 1\n0 5\n1 2\n2 3\n3 4\n4 5\n");
        let spec_form = "6\n0 1\n1 2\n2 3\n3 4\n4 5\n0 5\n";
        assert_eq!(read_edge_list(spec_form.as_bytes()).unwrap(), g);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let sw = generate_small_world(&SmallWorldParams::new(64, 2, 3.0, 11)).unwrap();
        save_edge_list(&sw, &path).unwrap();
        assert_eq!(load_edge_list(&path).unwrap(), sw);
    }

    #[test]
    fn edge_list_comments_and_blank_lines() {
        let g = read_edge_list("# header\n3\n\n0 1\n# c\n1 2\n".as_bytes()).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn edge_list_errors_name_the_line() {
        let cases = [
            ("3\n0 0\n", 2, "self-loop"),
            ("3\n0 1\n1 3\n", 3, "out of range"),
            ("3\n0 1\n1 0\n", 3, "duplicate"),
            ("x\n", 1, "node count"),
            ("3\n0 1 2\n", 2, "two node indices"),
        ];
        for (text, line, needle) in cases {
            match read_edge_list(text.as_bytes()) {
                Err(Error::Parse { line: l, msg }) => {
                    assert_eq!(l, line, "{text:?}");
                    assert!(msg.contains(needle), "{msg}");
                }
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn components_counted() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(connected_components(&g), 3);
        assert_eq!(connected_components(&ring_lattice(9, 2).unwrap()), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn small_world_invariants(n in 7usize..64, k in 1usize..4, rate in 0.0f64..6.0, seed in any::<u64>()) {
            prop_assume!(n > 2 * k);
            let params = SmallWorldParams::new(n, k, rate.min(n as f64), seed);
            let g = generate_small_world(&params).unwrap();
            let again = generate_small_world(&params).unwrap();
            prop_assert_eq!(&g, &again);
            let ring = ring_lattice(n, k).unwrap();
            for (i, j) in ring.edges() {
                prop_assert!(g.has_edge(i, j));
            }
            let degrees = degree_sequence(&g);
            prop_assert!(degrees.iter().all(|&d| d >= 2 * k));
            prop_assert_eq!(degrees.iter().sum::<usize>(), 2 * g.edge_count());
            for i in 0..n {
                prop_assert!(!g.has_edge(i, i));
                prop_assert!(g.neighbors(i).windows(2).all(|w| w[0] < w[1]));
            }
            prop_assert_eq!(count_triangles(&g) as f64, trace_a_cubed(&g) / 6.0);
            prop_assert_eq!(count_triangles(&g), brute_triangles(&g));
        }

        #[test]
        fn edge_list_round_trip(n in 7usize..40, rate in 0.0f64..5.0, seed in any::<u64>()) {
            let g = generate_small_world(&SmallWorldParams::new(n, 2, rate, seed)).unwrap();
            let back = read_edge_list(format_edge_list(&g).as_bytes()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
