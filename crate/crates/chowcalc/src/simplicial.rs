//! Ordered graphs, their d-fold products seen through the poset description,
//! standard-cube embeddings, the simplex test and the edgewise subdivision.
//!
//! An [`OrderedGraph`] is a finite simple graph whose vertex list carries the
//! total order (list position). Its d-fold product has vertex set
//! `V(Γ)^d` ordered coordinatewise; the simplices of the product are exactly
//! the chains that fit inside a single standard cube, which is what
//! [`is_simplex`] tests and what the [`cube_embeddings`] covering makes
//! explicit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the product dimension d. Cube vertices are bitmasks and the
/// 2^d vertex sets of cubes must enumerate cheaply.
pub const MAX_DIM: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("duplicate vertex label {0:?}")]
    DuplicateVertexLabel(String),
    #[error("edge ({0}, {1}) mentions an unknown vertex index (graph has {2} vertices)")]
    UnknownVertexIndex(u32, u32, usize),
    #[error("loop edge ({0}, {0}) is not allowed")]
    LoopEdge(u32),
    #[error("edge ({0}, {1}) is not ascending in the declared vertex order")]
    DescendingEdge(u32, u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("subdivision factor must be at least 1")]
    ZeroSubdivision,
    #[error("dimension {0} exceeds the supported maximum {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("cube vertex 0b{0:b} has bits above width {1}")]
    VertexWidth(u32, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("graph file: {0}")]
    Format(String),
}

/// A finite simple graph with a total order on its vertices.
///
/// The order is the position in the vertex list; every edge is stored
/// ascending in that order. Loops and multiple edges are rejected so that
/// simplices of products are identified with their vertex sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedGraph {
    vertices: Vec<String>,
    edges: Vec<(u32, u32)>,
}

impl OrderedGraph {
    /// Validates raw vertex/edge data. Edges must already be ascending: the
    /// input declares the intended total order explicitly, nothing is
    /// reordered silently.
    pub fn new(vertices: Vec<String>, edges: Vec<(u32, u32)>) -> Result<Self, SimplicialError> {
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].contains(v) {
                return Err(SimplicialError::DuplicateVertexLabel(v.clone()));
            }
        }
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a as usize >= n || b as usize >= n {
                return Err(SimplicialError::UnknownVertexIndex(a, b, n));
            }
            if a == b {
                return Err(SimplicialError::LoopEdge(a));
            }
            if a > b {
                return Err(SimplicialError::DescendingEdge(a, b));
            }
            if edges[..k].contains(&(a, b)) {
                return Err(SimplicialError::DuplicateEdge(a, b));
            }
        }
        Ok(Self { vertices, edges })
    }

    /// The standard 1-simplex graph `I`: two vertices `0 < 1`, one edge.
    pub fn interval() -> Self {
        Self::new(vec!["0".into(), "1".into()], vec![(0, 1)]).expect("interval is valid")
    }

    /// Path with `n` edges on `n + 1` vertices labeled `v0..vn`.
    pub fn path(n: usize) -> Self {
        let vertices = (0..=n).map(|i| format!("v{i}")).collect();
        let edges = (0..n).map(|i| (i as u32, i as u32 + 1)).collect();
        Self::new(vertices, edges).expect("path is valid")
    }

    /// Cycle graph on `n >= 3` vertices with edges (0,1), …, (n-2,n-1), (0,n-1).
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let vertices = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges: Vec<(u32, u32)> = (0..n - 1).map(|i| (i as u32, i as u32 + 1)).collect();
        edges.push((0, n as u32 - 1));
        Self::new(vertices, edges).expect("cycle is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> (u32, u32) {
        self.edges[idx]
    }

    /// True iff `{a, b}` is an edge (in either order).
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.edges.contains(&(lo, hi))
    }

    /// Parses the graph file format: a JSON document with the two keys
    /// `vertices` (ordered list of string labels) and `edges` (list of
    /// ascending 2-element index lists).
    pub fn from_json_str(s: &str) -> Result<Self, SimplicialError> {
        #[derive(Deserialize)]
        struct Raw {
            vertices: Vec<String>,
            edges: Vec<(u32, u32)>,
        }
        let raw: Raw =
            serde_json::from_str(s).map_err(|e| SimplicialError::Format(e.to_string()))?;
        Self::new(raw.vertices, raw.edges)
    }

    /// Canonical serialization of the graph file format. Writing, parsing and
    /// writing again reproduces the bytes exactly.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph serializes");
        s.push('\n');
        s
    }
}

/// Vertex of the standard cube `I^d`: an element of `F_2^d` packed as a
/// bitmask with coordinate `i` (1-based) at bit `i - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeVertex(u32);

impl std::ops::Add for CubeVertex {
    type Output = Self;

    /// Bitwise sum in `F_2^d`.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, other: Self) -> Self {
        Self(self.0 ^ other.0)
    }
}

impl CubeVertex {
    pub fn new(bits: u32, d: usize) -> Result<Self, SimplicialError> {
        if d > MAX_DIM {
            return Err(SimplicialError::DimensionTooLarge(d));
        }
        if d < 32 && bits >> d != 0 {
            return Err(SimplicialError::VertexWidth(bits, d));
        }
        Ok(Self(bits))
    }

    pub const fn zero() -> Self {
        Self(0)
    }

    pub fn ones(d: usize) -> Self {
        Self(mask(d))
    }

    /// The standard basis vector `e_i`, 1-based.
    pub fn unit(i: usize) -> Self {
        Self(1 << (i - 1))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn coord(self, i: usize) -> u32 {
        (self.0 >> (i - 1)) & 1
    }

    pub fn popcount(self) -> u32 {
        self.0.count_ones()
    }

    /// Coordinatewise partial order of the cube.
    pub fn le(self, other: Self) -> bool {
        self.0 & other.0 == self.0
    }

    pub fn comparable(self, other: Self) -> bool {
        self.le(other) || other.le(self)
    }

    /// `⟨v, w⟩` over `F_2`.
    pub fn dot(self, other: Self) -> u32 {
        (self.0 & other.0).count_ones() & 1
    }

    /// Translation by the all-ones vector.
    pub fn complement(self, d: usize) -> Self {
        Self(!self.0 & mask(d))
    }

    /// Parses the paper's concatenated-digit notation: `"101"` is the vector
    /// `(1, 0, 1)`, first coordinate first.
    pub fn parse_bits(s: &str) -> Result<(Self, usize), SimplicialError> {
        let d = s.len();
        if d == 0 || d > MAX_DIM {
            return Err(SimplicialError::Format(format!(
                "bitstring {s:?} must have between 1 and {MAX_DIM} digits"
            )));
        }
        let mut bits = 0u32;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => {
                    return Err(SimplicialError::Format(format!(
                        "bitstring {s:?} contains a character other than 0/1"
                    )))
                }
            }
        }
        Ok((Self(bits), d))
    }

    /// Renders as a concatenated-digit string of width `d`.
    pub fn render(self, d: usize) -> String {
        (1..=d)
            .map(|i| if self.coord(i) == 1 { '1' } else { '0' })
            .collect()
    }
}

fn mask(d: usize) -> u32 {
    if d >= 32 {
        u32::MAX
    } else {
        (1u32 << d) - 1
    }
}

/// Vertex of `Γ^d`: a length-d tuple of vertex indices of the graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductVertex(pub Vec<u32>);

impl ProductVertex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coord(&self, i: usize) -> u32 {
        self.0[i - 1]
    }

    /// Coordinatewise order induced from the graph's total vertex order.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn comparable(&self, other: &Self) -> bool {
        self.le(other) || other.le(self)
    }

    /// Parses the comma-separated index tuple notation, e.g. `"0,2,1"`.
    pub fn parse(s: &str) -> Result<Self, SimplicialError> {
        let coords = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| SimplicialError::Format(format!("bad vertex tuple {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if coords.is_empty() {
            return Err(SimplicialError::Format(format!("bad vertex tuple {s:?}")));
        }
        Ok(Self(coords))
    }

    pub fn render(&self) -> String {
        self.0
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// A d-tuple of edges of the graph defining the injection `i_γ: I^d → Γ^d`;
/// edge `i` supplies the i-th cube axis (low endpoint ↔ bit 0, high ↔ bit 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeEmbedding {
    edges: Vec<u32>,
}

impl CubeEmbedding {
    pub fn new(edges: Vec<u32>, g: &OrderedGraph) -> Result<Self, SimplicialError> {
        if edges.len() > MAX_DIM {
            return Err(SimplicialError::DimensionTooLarge(edges.len()));
        }
        for &e in &edges {
            if e as usize >= g.edge_count() {
                return Err(SimplicialError::Format(format!(
                    "edge index {e} out of range (graph has {} edges)",
                    g.edge_count()
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_indices(&self) -> &[u32] {
        &self.edges
    }
}

/// All `|E(g)|^d` standard-cube embeddings of `Γ^d`, lexicographically
/// ordered on the edge-index tuple (first axis most significant).
pub fn cube_embeddings(g: &OrderedGraph, d: usize) -> CubeEmbeddings<'_> {
    assert!(d >= 1, "dimension must be at least 1");
    assert!(d <= MAX_DIM, "dimension exceeds MAX_DIM");
    CubeEmbeddings {
        graph: g,
        next: Some(vec![0; d]),
    }
}

pub struct CubeEmbeddings<'a> {
    graph: &'a OrderedGraph,
    next: Option<Vec<u32>>,
}

impl Iterator for CubeEmbeddings<'_> {
    type Item = CubeEmbedding;

    fn next(&mut self) -> Option<CubeEmbedding> {
        let ne = self.graph.edge_count() as u32;
        if ne == 0 {
            self.next = None;
        }
        let current = self.next.take()?;
        // odometer with the last axis fastest
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                self.next = None;
                break;
            }
            i -= 1;
            if succ[i] + 1 < ne {
                succ[i] += 1;
                for x in &mut succ[i + 1..] {
                    *x = 0;
                }
                self.next = Some(succ);
                break;
            }
        }
        Some(CubeEmbedding { edges: current })
    }
}

/// Image of the cube vertex `v` under the embedding `γ`: coordinate `i` is
/// the low endpoint of edge `γ_i` when bit `i` of `v` is 0, else the high
/// endpoint.
pub fn embed_vertex(
    gamma: &CubeEmbedding,
    v: CubeVertex,
    g: &OrderedGraph,
) -> Result<ProductVertex, SimplicialError> {
    let d = gamma.dim();
    if d < 32 && v.bits() >> d != 0 {
        return Err(SimplicialError::DimensionMismatch {
            expected: d,
            got: 32 - v.bits().leading_zeros() as usize,
        });
    }
    let coords = gamma
        .edges
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let (lo, hi) = g.edge(e as usize);
            if v.coord(i + 1) == 0 {
                lo
            } else {
                hi
            }
        })
        .collect();
    Ok(ProductVertex(coords))
}

/// Preimage of a product vertex under `i_γ`, if it lies in the cube image.
pub fn unembed_vertex(
    gamma: &CubeEmbedding,
    p: &ProductVertex,
    g: &OrderedGraph,
) -> Option<CubeVertex> {
    if p.dim() != gamma.dim() {
        return None;
    }
    let mut bits = 0u32;
    for (i, &e) in gamma.edges.iter().enumerate() {
        let (lo, hi) = g.edge(e as usize);
        let c = p.0[i];
        if c == lo {
            // bit stays 0
        } else if c == hi {
            bits |= 1 << i;
        } else {
            return None;
        }
    }
    Some(CubeVertex(bits))
}

/// Tests whether a set of product vertices is the vertex set of a simplex of
/// `Γ^d`: per coordinate the projections span at most one edge, and the set
/// is totally ordered in the coordinatewise order.
pub fn is_simplex(g: &OrderedGraph, d: usize, s: &[ProductVertex]) -> bool {
    debug_assert!(s.iter().all(|p| p.dim() == d));
    for i in 1..=d {
        let mut vals: Vec<u32> = s.iter().map(|p| p.coord(i)).collect();
        vals.sort_unstable();
        vals.dedup();
        match vals.len() {
            0 | 1 => {}
            2 => {
                if !g.has_edge(vals[0], vals[1]) {
                    return false;
                }
            }
            _ => return false,
        }
    }
    for (k, a) in s.iter().enumerate() {
        for b in &s[k + 1..] {
            if !a.comparable(b) {
                return false;
            }
        }
    }
    true
}

/// Edgewise n-fold subdivision: every edge `(u, v)` becomes a path of `n`
/// edges through `n − 1` interior vertices. The new total order is the
/// lexicographic order on the n-tuple encoding: an original vertex `w`
/// encodes as `(w, …, w)` and the j-th interior point of `u < v` as
/// `(u, …, u, v, …, v)` with `j` trailing copies of `v`.
pub fn subdivide(g: &OrderedGraph, n: usize) -> Result<OrderedGraph, SimplicialError> {
    if n == 0 {
        return Err(SimplicialError::ZeroSubdivision);
    }
    if n == 1 {
        return Ok(g.clone());
    }
    // (tuple key, label); originals keep their labels, interior points of
    // edge (u, v) are labeled "u.j.v" with j = 1..n-1 trailing copies of v.
    let mut keyed: Vec<(Vec<u32>, String)> = Vec::new();
    for (w, label) in g.labels().iter().enumerate() {
        keyed.push((vec![w as u32; n], label.clone()));
    }
    for &(u, v) in g.edges() {
        for j in 1..n {
            let mut key = vec![u; n - j];
            key.extend(std::iter::repeat_n(v, j));
            let label = format!(
                "{}.{}.{}",
                g.labels()[u as usize],
                j,
                g.labels()[v as usize]
            );
            keyed.push((key, label));
        }
    }
    keyed.sort();
    let index_of = |key: &[u32]| -> u32 {
        keyed
            .binary_search_by(|(k, _)| k.as_slice().cmp(key))
            .expect("subdivision key present") as u32
    };
    let vertices: Vec<String> = keyed.iter().map(|(_, l)| l.clone()).collect();
    let mut edges = Vec::with_capacity(n * g.edge_count());
    for &(u, v) in g.edges() {
        // path u = p_0, p_1, …, p_n = v in tuple encoding; lexicographically
        // ascending along the path, so each pair is ascending in the new order
        let mut prev = index_of(&vec![u; n]);
        for j in 1..=n {
            let next = if j == n {
                index_of(&vec![v; n])
            } else {
                let mut key = vec![u; n - j];
                key.extend(std::iter::repeat_n(v, j));
                index_of(&key)
            };
            edges.push((prev.min(next), prev.max(next)));
            prev = next;
        }
    }
    OrderedGraph::new(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_minimal_graphs() {
        let i = OrderedGraph::new(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
        assert_eq!(i.vertex_count(), 2);
        assert_eq!(i.edge_count(), 1);

        let single = OrderedGraph::new(vec!["a".into()], vec![]).unwrap();
        assert_eq!(single.vertex_count(), 1);
        assert_eq!(single.edge_count(), 0);
    }

    #[test]
    fn validate_rejections() {
        let dup = OrderedGraph::new(vec!["a".into(), "b".into()], vec![(0, 1), (0, 1)]);
        assert_eq!(dup.unwrap_err(), SimplicialError::DuplicateEdge(0, 1));

        let lp = OrderedGraph::new(vec!["a".into(), "b".into()], vec![(1, 1)]);
        assert_eq!(lp.unwrap_err(), SimplicialError::LoopEdge(1));

        let desc = OrderedGraph::new(vec!["a".into(), "b".into()], vec![(1, 0)]);
        assert_eq!(desc.unwrap_err(), SimplicialError::DescendingEdge(1, 0));

        let unk = OrderedGraph::new(vec!["a".into(), "b".into()], vec![(0, 2)]);
        assert!(matches!(
            unk.unwrap_err(),
            SimplicialError::UnknownVertexIndex(0, 2, 2)
        ));

        let dupv = OrderedGraph::new(vec!["a".into(), "a".into()], vec![]);
        assert!(matches!(
            dupv.unwrap_err(),
            SimplicialError::DuplicateVertexLabel(_)
        ));
    }

    #[test]
    fn subdivide_identity_and_counts() {
        let i = OrderedGraph::interval();
        assert_eq!(subdivide(&i, 1).unwrap(), i);
        assert_eq!(
            subdivide(&i, 0).unwrap_err(),
            SimplicialError::ZeroSubdivision
        );

        let p = subdivide(&i, 2).unwrap();
        assert_eq!(p.vertex_count(), 3);
        assert_eq!(p.edge_count(), 2);

        let c3 = OrderedGraph::cycle(3);
        let s = subdivide(&c3, 3).unwrap();
        assert_eq!(s.vertex_count(), 9);
        assert_eq!(s.edge_count(), 9);
    }

    #[test]
    fn subdivide_order_matches_bruteforce_lex_sort() {
        // triangle, n = 3: build tuple encodings by hand and lex-sort
        let c3 = OrderedGraph::cycle(3);
        let s = subdivide(&c3, 3).unwrap();
        let mut keys: Vec<(Vec<u32>, String)> = vec![
            (vec![0, 0, 0], "v0".into()),
            (vec![1, 1, 1], "v1".into()),
            (vec![2, 2, 2], "v2".into()),
        ];
        for &(u, v) in c3.edges() {
            for j in 1..3u32 {
                let mut k = vec![u; (3 - j) as usize];
                k.extend(std::iter::repeat_n(v, j as usize));
                keys.push((k, format!("v{u}.{j}.v{v}")));
            }
        }
        keys.sort();
        let expected: Vec<String> = keys.into_iter().map(|(_, l)| l).collect();
        assert_eq!(s.labels(), expected.as_slice());
    }

    #[test]
    fn cube_embedding_counts_and_order() {
        let i = OrderedGraph::interval();
        assert_eq!(cube_embeddings(&i, 2).count(), 1);

        let c3 = OrderedGraph::cycle(3);
        assert_eq!(cube_embeddings(&c3, 2).count(), 9);

        let p2 = OrderedGraph::path(2);
        assert_eq!(cube_embeddings(&p2, 3).count(), 8);

        let order: Vec<Vec<u32>> = cube_embeddings(&p2, 2)
            .map(|g| g.edge_indices().to_vec())
            .collect();
        assert_eq!(order, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn embed_vertex_definition() {
        let i = OrderedGraph::interval();
        let g1 = CubeEmbedding::new(vec![0], &i).unwrap();
        assert_eq!(
            embed_vertex(&g1, CubeVertex::new(0, 1).unwrap(), &i).unwrap(),
            ProductVertex(vec![0])
        );
        assert_eq!(
            embed_vertex(&g1, CubeVertex::new(1, 1).unwrap(), &i).unwrap(),
            ProductVertex(vec![1])
        );

        let c3 = OrderedGraph::cycle(3);
        // edges of C3: e0 = (0,1), e1 = (1,2)
        let g2 = CubeEmbedding::new(vec![0, 1], &c3).unwrap();
        let (v10, _) = CubeVertex::parse_bits("10").unwrap();
        assert_eq!(
            embed_vertex(&g2, v10, &c3).unwrap(),
            ProductVertex(vec![1, 1])
        );

        let gii = CubeEmbedding::new(vec![0, 0], &i).unwrap();
        let (v11, _) = CubeVertex::parse_bits("11").unwrap();
        assert_eq!(
            embed_vertex(&gii, v11, &i).unwrap(),
            ProductVertex(vec![1, 1])
        );

        // dimension mismatch
        let too_wide = CubeVertex::new(0b10, 2).unwrap();
        assert!(embed_vertex(&g1, too_wide, &i).is_err());
    }

    #[test]
    fn simplex_examples() {
        let i = OrderedGraph::interval();
        let s1 = [ProductVertex(vec![0, 0]), ProductVertex(vec![1, 1])];
        assert!(is_simplex(&i, 2, &s1));

        let s2 = [ProductVertex(vec![1, 0]), ProductVertex(vec![0, 1])];
        assert!(!is_simplex(&i, 2, &s2));

        let c3 = OrderedGraph::cycle(3);
        let s3 = [ProductVertex(vec![0]), ProductVertex(vec![2])];
        assert_eq!(is_simplex(&c3, 1, &s3), c3.has_edge(0, 2));
    }

    #[test]
    fn bitstring_roundtrip_and_layout() {
        let (v, d) = CubeVertex::parse_bits("101").unwrap();
        assert_eq!(d, 3);
        assert_eq!(v.coord(1), 1);
        assert_eq!(v.coord(2), 0);
        assert_eq!(v.coord(3), 1);
        assert_eq!(v.render(3), "101");
        assert!(CubeVertex::parse_bits("10x").is_err());
    }

    #[test]
    fn graph_json_roundtrip() {
        let c3 = OrderedGraph::cycle(3);
        let s = c3.to_json_string();
        let back = OrderedGraph::from_json_str(&s).unwrap();
        assert_eq!(back, c3);
        assert_eq!(back.to_json_string(), s);
    }
}
