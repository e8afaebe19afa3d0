//! Undirected simple graphs with 1-based vertices, the two graph
//! transformations used by the hardness reductions (pairwise gadget
//! insertion and triangle decoration), coloring machinery with a brute-force
//! 3-coloring oracle, and the fit predicate for matrices against graphs.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::linalg::CMat;
use crate::scalar::Real;

/// Default vertex cap for the exhaustive 3-coloring oracle.
pub const ORACLE_3COL_DEFAULT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge ({u},{v}) invalid for a graph on {n} vertices")]
    InvalidEdge { u: usize, v: usize, n: usize },
    #[error("coloring covers {got} vertices, graph has {expected}")]
    ColoringNotTotal { expected: usize, got: usize },
    #[error("coloring is not a valid 3-coloring of the graph")]
    InvalidColoring,
    #[error("graph has {n} vertices, oracle limit is {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("matrix side {got} does not match vertex count {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// One of the three colors, ordered `r < g < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    R,
    G,
    B,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::R, Color::G, Color::B];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::R => "r",
            Color::G => "g",
            Color::B => "b",
        }
    }

    pub fn from_label(s: &str) -> Option<Color> {
        match s {
            "r" => Some(Color::R),
            "g" => Some(Color::G),
            "b" => Some(Color::B),
            _ => None,
        }
    }

    /// The third color, given two (possibly equal) colors.
    fn remaining(a: Color, b: Color) -> Option<Color> {
        Color::ALL.into_iter().find(|&c| c != a && c != b)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Total color assignment on vertices `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    assignment: Vec<Color>,
}

impl Coloring {
    pub fn new(assignment: Vec<Color>) -> Self {
        Coloring { assignment }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Color of vertex `v` (1-based).
    pub fn color(&self, v: usize) -> Color {
        self.assignment[v - 1]
    }

    pub fn colors(&self) -> &[Color] {
        &self.assignment
    }
}

/// Undirected simple graph; vertices are `1..=n`, edges stored as sorted pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, rejecting loops and out-of-range endpoints.
    /// Duplicate edges (in either orientation) collapse.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v || u == 0 || v == 0 || u > n || v > n {
                return Err(GraphError::InvalidEdge { u, v, n });
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Graph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = BTreeSet::new();
        for u in 1..=n {
            for v in (u + 1)..=n {
                edges.insert((u, v));
            }
        }
        Graph { n, edges }
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycles need at least 3 vertices");
        let mut edges = BTreeSet::new();
        for u in 1..n {
            edges.insert((u, u + 1));
        }
        edges.insert((1, n));
        Graph { n, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Edges in sorted order, each as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    fn neighbors_below(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(u, v) in &self.edges {
            adj[v].push(u);
        }
        adj
    }
}

/// Parses the line-oriented graph format: header `p edge <n> <m>`, then
/// edge lines `e <u> <v>` with 1-based endpoints; `c` lines are comments.
pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "p" => {
                if n.is_some() {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "duplicate problem header".into(),
                    });
                }
                if fields.len() != 4 || fields[1] != "edge" {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "malformed header, expected `p edge <n> <m>`".into(),
                    });
                }
                let vertices = fields[2].parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("invalid vertex count `{}`", fields[2]),
                })?;
                fields[3].parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("invalid edge count `{}`", fields[3]),
                })?;
                n = Some(vertices);
            }
            "e" => {
                let n = n.ok_or(GraphError::Parse {
                    line: line_no,
                    msg: "edge before `p edge` header".into(),
                })?;
                if fields.len() != 3 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "malformed edge line, expected `e <u> <v>`".into(),
                    });
                }
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|_| GraphError::Parse {
                        line: line_no,
                        msg: format!("invalid endpoint `{s}`"),
                    })
                };
                let u = parse(fields[1])?;
                let v = parse(fields[2])?;
                if u == 0 || v == 0 || u > n || v > n {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("endpoint out of range in edge ({u},{v}), n = {n}"),
                    });
                }
                if u == v {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("self-loop at vertex {u}"),
                    });
                }
                edges.push((u, v));
            }
            other => {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("unknown line type `{other}`"),
                });
            }
        }
    }
    let n = n.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing `p edge` header".into(),
    })?;
    Graph::new(n, edges)
}

/// Renders a graph back into the line-oriented format.
pub fn format_graph(g: &Graph) -> String {
    let mut out = format!("p edge {} {}\n", g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("e {u} {v}\n"));
    }
    out
}

/// Fresh vertex indices of one inserted gadget for the pair `{i, j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairGadget {
    pub i: usize,
    pub j: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

/// Deterministic labeling of all gadget vertices added by [`insert_gadgets`]:
/// pairs ordered lexicographically, fresh labels appended after `n` in
/// blocks of four (`a`, `b`, `c`, `d`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetLabels {
    pub original_n: usize,
    pub pairs: Vec<PairGadget>,
}

impl GadgetLabels {
    fn generate(n: usize) -> Self {
        let mut pairs = Vec::new();
        let mut next = n + 1;
        for i in 1..=n {
            for j in (i + 1)..=n {
                pairs.push(PairGadget {
                    i,
                    j,
                    a: next,
                    b: next + 1,
                    c: next + 2,
                    d: next + 3,
                });
                next += 4;
            }
        }
        GadgetLabels {
            original_n: n,
            pairs,
        }
    }
}

/// The nine gadget edges for a pair `{i, j}` with fresh vertices `a..d`.
fn gadget_edges(p: &PairGadget) -> [(usize, usize); 9] {
    [
        (p.i, p.a),
        (p.i, p.b),
        (p.i, p.d),
        (p.a, p.b),
        (p.a, p.j),
        (p.b, p.c),
        (p.c, p.d),
        (p.c, p.j),
        (p.d, p.j),
    ]
}

/// The standalone 6-vertex, 9-edge gadget graph with vertex order
/// `(i, a, b, c, d, j) = 1..6`.
pub fn gadget_graph() -> Graph {
    let p = PairGadget {
        i: 1,
        a: 2,
        b: 3,
        c: 4,
        d: 5,
        j: 6,
    };
    Graph::new(6, gadget_edges(&p)).expect("static gadget edges are valid")
}

/// Inserts one gadget per unordered vertex pair (edge or not). The result
/// keeps all original vertices and edges and gains `2n(n-1)` vertices and
/// `9n(n-1)/2` edges.
pub fn insert_gadgets(g: &Graph) -> (Graph, GadgetLabels) {
    let n = g.vertex_count();
    let labels = GadgetLabels::generate(n);
    let total = n + 4 * labels.pairs.len();
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    for pair in &labels.pairs {
        edges.extend_from_slice(&gadget_edges(pair));
    }
    let gprime = Graph::new(total, edges).expect("gadget construction stays in range");
    (gprime, labels)
}

/// Global index of slot `z` of vertex `y` in a triangle decoration (1-based).
pub fn slot_index(y: usize, z: usize) -> usize {
    3 * (y - 1) + z
}

/// Inverse of [`slot_index`].
pub fn slot_of_index(x: usize) -> (usize, usize) {
    ((x - 1) / 3 + 1, (x - 1) % 3 + 1)
}

/// Attaches a fresh triangle to every vertex. Vertex `y` becomes slot 1 of
/// its triangle; the two new vertices are slots 2 and 3, so the decorated
/// graph indexes vertex `(y, z)` as `3(y-1)+z`.
pub fn triangle_decorate(g: &Graph) -> Graph {
    let n = g.vertex_count();
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .map(|(u, v)| (slot_index(u, 1), slot_index(v, 1)))
        .collect();
    for y in 1..=n {
        edges.push((slot_index(y, 1), slot_index(y, 2)));
        edges.push((slot_index(y, 1), slot_index(y, 3)));
        edges.push((slot_index(y, 2), slot_index(y, 3)));
    }
    Graph::new(3 * n, edges).expect("decoration stays in range")
}

/// True iff every edge has differently colored endpoints.
pub fn check_coloring(g: &Graph, c: &Coloring) -> Result<bool, GraphError> {
    if c.len() != g.vertex_count() {
        return Err(GraphError::ColoringNotTotal {
            expected: g.vertex_count(),
            got: c.len(),
        });
    }
    Ok(g.edges().all(|(u, v)| c.color(u) != c.color(v)))
}

/// Exhaustive 3-coloring oracle with the default vertex cap.
pub fn brute_force_3col(g: &Graph) -> Result<Option<Coloring>, GraphError> {
    brute_force_3col_limited(g, ORACLE_3COL_DEFAULT_LIMIT)
}

/// Exhaustive 3-coloring oracle with an explicit vertex cap. Returns the
/// lexicographically first valid coloring under color order `r < g < b` and
/// vertex order `1..=n`, or `None` if the graph is not 3-colorable.
pub fn brute_force_3col_limited(g: &Graph, limit: usize) -> Result<Option<Coloring>, GraphError> {
    let n = g.vertex_count();
    if n > limit {
        return Err(GraphError::TooLarge { n, limit });
    }
    let adj = g.neighbors_below();
    let mut assignment: Vec<Color> = Vec::with_capacity(n);

    fn assign(v: usize, n: usize, adj: &[Vec<usize>], partial: &mut Vec<Color>) -> bool {
        if v > n {
            return true;
        }
        'colors: for color in Color::ALL {
            for &u in &adj[v] {
                if partial[u - 1] == color {
                    continue 'colors;
                }
            }
            partial.push(color);
            if assign(v + 1, n, adj, partial) {
                return true;
            }
            partial.pop();
        }
        false
    }

    if assign(1, n, &adj, &mut assignment) {
        Ok(Some(Coloring::new(assignment)))
    } else {
        Ok(None)
    }
}

/// The fit predicate: `|m_jj - 1| <= tol` on every vertex and `|m_uv| <= tol`
/// in both orientations of every edge. Off-edge off-diagonal entries are
/// unconstrained.
pub fn fits<T: Real>(m: &CMat<T>, g: &Graph, tol: T) -> Result<bool, GraphError> {
    if m.dim() != g.vertex_count() {
        return Err(GraphError::SizeMismatch {
            expected: g.vertex_count(),
            got: m.dim(),
        });
    }
    for v in 0..g.vertex_count() {
        let diag = m[(v, v)];
        let dev = ((diag.re - T::one()).powi(2) + diag.im.powi(2)).sqrt();
        if dev > tol {
            return Ok(false);
        }
    }
    for (u, v) in g.edges() {
        if m[(u - 1, v - 1)].norm() > tol || m[(v - 1, u - 1)].norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Extends a valid coloring of `g` to a valid coloring of the gadget graph,
/// using the two gadget coloring patterns: pairs with distinct endpoint
/// colors get `c(c_ij) = c(i)`, `c(b_ij) = c(j)`, `a_ij` and `d_ij` the
/// remaining color; equal-colored pairs give `a_ij, c_ij` the smaller and
/// `b_ij, d_ij` the larger of the two free colors.
pub fn extend_coloring_to_gadgets(
    g: &Graph,
    c: &Coloring,
    labels: &GadgetLabels,
) -> Result<Coloring, GraphError> {
    if !check_coloring(g, c)? {
        return Err(GraphError::InvalidColoring);
    }
    let total = g.vertex_count() + 4 * labels.pairs.len();
    let mut assignment = vec![Color::R; total];
    assignment[..g.vertex_count()].copy_from_slice(c.colors());
    for pair in &labels.pairs {
        let ci = c.color(pair.i);
        let cj = c.color(pair.j);
        if ci != cj {
            let third = Color::remaining(ci, cj).expect("two distinct colors leave one");
            assignment[pair.c - 1] = ci;
            assignment[pair.b - 1] = cj;
            assignment[pair.a - 1] = third;
            assignment[pair.d - 1] = third;
        } else {
            let mut free: Vec<Color> = Color::ALL.into_iter().filter(|&x| x != ci).collect();
            free.sort();
            assignment[pair.a - 1] = free[0];
            assignment[pair.c - 1] = free[0];
            assignment[pair.b - 1] = free[1];
            assignment[pair.d - 1] = free[1];
        }
    }
    Ok(Coloring::new(assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Graph {
        let mut edges = Vec::new();
        for u in 1..=n {
            for v in (u + 1)..=n {
                if rng.gen_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(n, edges).unwrap()
    }

    #[test]
    fn parse_triangle() {
        let g = parse_graph("p edge 3 3\ne 1 2\ne 2 3\ne 1 3\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g, Graph::complete(3));
    }

    #[test]
    fn parse_isolated_vertices_and_comments() {
        let g = parse_graph("c two lonely vertices\np edge 2 0\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn parse_rejects_out_of_range_endpoint() {
        let err = parse_graph("p edge 2 1\ne 1 3\n").unwrap_err();
        match err {
            GraphError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_self_loop_and_bad_header() {
        assert!(matches!(
            parse_graph("p edge 2 1\ne 1 1\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("p vertex 2 1\n"),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = parse_graph("p edge 2 3\ne 1 2\ne 2 1\ne 1 2\n").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn format_roundtrip() {
        let g = Graph::cycle(5);
        assert_eq!(parse_graph(&format_graph(&g)).unwrap(), g);
    }

    #[test]
    fn gadget_counts_small() {
        let (gp, labels) = insert_gadgets(&Graph::complete(2));
        assert_eq!(gp.vertex_count(), 6);
        assert_eq!(gp.edge_count(), 10);
        assert_eq!(labels.pairs.len(), 1);

        let (gp, _) = insert_gadgets(&Graph::empty(3));
        assert_eq!(gp.vertex_count(), 15);
        assert_eq!(gp.edge_count(), 27);

        let (gp, labels) = insert_gadgets(&Graph::empty(1));
        assert_eq!(gp.vertex_count(), 1);
        assert_eq!(gp.edge_count(), 0);
        assert!(labels.pairs.is_empty());
    }

    #[test]
    fn gadget_counts_match_formulas() {
        for n in 0..=8 {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let g = random_graph(n, &mut rng);
            let (gp, _) = insert_gadgets(&g);
            assert_eq!(gp.vertex_count(), n + 2 * n * n.saturating_sub(1));
            assert_eq!(gp.edge_count(), g.edge_count() + 9 * n * n.saturating_sub(1) / 2);
        }
    }

    #[test]
    fn gadgets_preserve_original_edges() {
        let g = Graph::new(3, [(1, 2)]).unwrap();
        let (gp, labels) = insert_gadgets(&g);
        assert!(gp.has_edge(1, 2));
        assert!(!gp.has_edge(1, 3));
        for pair in &labels.pairs {
            // No {i, j} edge comes from the gadget itself.
            let had = g.has_edge(pair.i, pair.j);
            assert_eq!(gp.has_edge(pair.i, pair.j), had);
        }
    }

    #[test]
    fn decoration_counts() {
        let d = triangle_decorate(&Graph::complete(2));
        assert_eq!(d.vertex_count(), 6);
        assert_eq!(d.edge_count(), 7);

        let d = triangle_decorate(&Graph::empty(1));
        assert_eq!(d, Graph::complete(3));

        let d = triangle_decorate(&Graph::empty(4));
        assert_eq!(d.vertex_count(), 12);
        assert_eq!(d.edge_count(), 12);
        assert!(d.has_edge(slot_index(2, 1), slot_index(2, 2)));
        assert!(!d.has_edge(slot_index(1, 1), slot_index(2, 1)));
    }

    #[test]
    fn slot_indexing_roundtrip() {
        for y in 1..=7 {
            for z in 1..=3 {
                assert_eq!(slot_of_index(slot_index(y, z)), (y, z));
            }
        }
    }

    #[test]
    fn check_coloring_examples() {
        let k3 = Graph::complete(3);
        let ok = Coloring::new(vec![Color::R, Color::G, Color::B]);
        let bad = Coloring::new(vec![Color::R, Color::R, Color::B]);
        assert!(check_coloring(&k3, &ok).unwrap());
        assert!(!check_coloring(&k3, &bad).unwrap());
        let edgeless = Graph::empty(3);
        let mono = Coloring::new(vec![Color::R; 3]);
        assert!(check_coloring(&edgeless, &mono).unwrap());
        assert!(matches!(
            check_coloring(&k3, &Coloring::new(vec![Color::R])),
            Err(GraphError::ColoringNotTotal { .. })
        ));
    }

    #[test]
    fn oracle_first_coloring_is_lexicographic() {
        let found = brute_force_3col(&Graph::complete(3)).unwrap().unwrap();
        assert_eq!(found.colors(), &[Color::R, Color::G, Color::B]);
    }

    #[test]
    fn oracle_rejects_k4_and_caps_size() {
        assert!(brute_force_3col(&Graph::complete(4)).unwrap().is_none());
        assert!(matches!(
            brute_force_3col(&Graph::empty(21)),
            Err(GraphError::TooLarge { .. })
        ));
    }

    #[test]
    fn oracle_colors_c5() {
        let g = Graph::cycle(5);
        let c = brute_force_3col(&g).unwrap().expect("C5 is 3-colorable");
        assert!(check_coloring(&g, &c).unwrap());
    }

    /// All labeled graphs on exactly `n` vertices.
    fn all_graphs(n: usize) -> Vec<Graph> {
        let pairs: Vec<(usize, usize)> = (1..=n)
            .flat_map(|u| ((u + 1)..=n).map(move |v| (u, v)))
            .collect();
        (0..(1u32 << pairs.len()))
            .map(|mask| {
                let edges = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &e)| e);
                Graph::new(n, edges).unwrap()
            })
            .collect()
    }

    #[test]
    fn gadget_insertion_preserves_3_colorability() {
        // Exhaustive up to 4 vertices, sampled at 5.
        for n in 1..=4 {
            for g in all_graphs(n) {
                let (gp, _) = insert_gadgets(&g);
                let orig = brute_force_3col(&g).unwrap().is_some();
                let prime = brute_force_3col_limited(&gp, gp.vertex_count())
                    .unwrap()
                    .is_some();
                assert_eq!(orig, prime, "gadget equivalence failed for {g:?}");
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        for _ in 0..10 {
            let g = random_graph(5, &mut rng);
            let (gp, _) = insert_gadgets(&g);
            let orig = brute_force_3col(&g).unwrap().is_some();
            let prime = brute_force_3col_limited(&gp, gp.vertex_count())
                .unwrap()
                .is_some();
            assert_eq!(orig, prime, "gadget equivalence failed for {g:?}");
        }
    }

    #[test]
    fn decoration_preserves_3_colorability() {
        for n in 1..=5 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + n as u64);
            for _ in 0..8 {
                let g = random_graph(n, &mut rng);
                let d = triangle_decorate(&g);
                let orig = brute_force_3col(&g).unwrap().is_some();
                let deco = brute_force_3col_limited(&d, d.vertex_count())
                    .unwrap()
                    .is_some();
                assert_eq!(orig, deco);
            }
        }
    }

    #[test]
    fn extension_is_valid_on_gadget_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(300);
        let mut checked = 0;
        while checked < 100 {
            let n = rng.gen_range(1..=5);
            let g = random_graph(n, &mut rng);
            let Some(c) = brute_force_3col(&g).unwrap() else {
                continue;
            };
            let (gp, labels) = insert_gadgets(&g);
            let ext = extend_coloring_to_gadgets(&g, &c, &labels).unwrap();
            assert!(check_coloring(&gp, &ext).unwrap());
            checked += 1;
        }
    }

    #[test]
    fn extension_follows_fixed_patterns() {
        // K2 colored (r, g): c gets r, b gets g, a and d get blue.
        let g = Graph::complete(2);
        let (gp, labels) = insert_gadgets(&g);
        let c = Coloring::new(vec![Color::R, Color::G]);
        let ext = extend_coloring_to_gadgets(&g, &c, &labels).unwrap();
        let p = labels.pairs[0];
        assert_eq!(ext.color(p.c), Color::R);
        assert_eq!(ext.color(p.b), Color::G);
        assert_eq!(ext.color(p.a), Color::B);
        assert_eq!(ext.color(p.d), Color::B);
        assert!(check_coloring(&gp, &ext).unwrap());

        // Two isolated vertices colored (r, r): a = c = g, b = d = b.
        let g = Graph::empty(2);
        let (gp, labels) = insert_gadgets(&g);
        let c = Coloring::new(vec![Color::R, Color::R]);
        let ext = extend_coloring_to_gadgets(&g, &c, &labels).unwrap();
        let p = labels.pairs[0];
        assert_eq!(ext.color(p.a), Color::G);
        assert_eq!(ext.color(p.c), Color::G);
        assert_eq!(ext.color(p.b), Color::B);
        assert_eq!(ext.color(p.d), Color::B);
        assert!(check_coloring(&gp, &ext).unwrap());
    }

    #[test]
    fn extension_rejects_invalid_input() {
        let g = Graph::complete(2);
        let (_, labels) = insert_gadgets(&g);
        let bad = Coloring::new(vec![Color::R, Color::R]);
        assert!(matches!(
            extend_coloring_to_gadgets(&g, &bad, &labels),
            Err(GraphError::InvalidColoring)
        ));
    }

    #[test]
    fn fits_basic_cases() {
        let id3 = CMat::<f64>::identity(3);
        assert!(fits(&id3, &Graph::empty(3), 0.0).unwrap());
        assert!(fits(&id3, &Graph::complete(3), 0.0).unwrap());
        let ones = CMat::from_fn(2, |_, _| num_complex::Complex::new(1.0, 0.0));
        assert!(!fits(&ones, &Graph::complete(2), 0.0).unwrap());
        assert!(matches!(
            fits(&id3, &Graph::empty(4), 0.0),
            Err(GraphError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn fits_agrees_with_direct_scan_on_01_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(400);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let g = random_graph(n, &mut rng);
            let m = CMat::<f64>::from_fn(n, |i, j| {
                if i == j || rng.gen_bool(0.5) {
                    num_complex::Complex::new(if rng.gen_bool(0.8) { 1.0 } else { 0.0 }, 0.0)
                } else {
                    num_complex::Complex::new(0.0, 0.0)
                }
            });
            let direct = (0..n).all(|v| m[(v, v)].re == 1.0)
                && g.edges()
                    .all(|(u, v)| m[(u - 1, v - 1)].re == 0.0 && m[(v - 1, u - 1)].re == 0.0);
            assert_eq!(fits(&m, &g, 0.0).unwrap(), direct);
        }
    }

    #[test]
    fn gadget_graph_shape() {
        let h = gadget_graph();
        assert_eq!(h.vertex_count(), 6);
        assert_eq!(h.edge_count(), 9);
        // Non-edges that the rigidity families may fill: {i,j}, {a,c}, {b,d},
        // {i,c}, {a,d}, {b,j}.
        for (u, v) in [(1, 6), (2, 4), (3, 5), (1, 4), (2, 5), (3, 6)] {
            assert!(!h.has_edge(u, v));
        }
    }
}
