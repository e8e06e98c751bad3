//! Sparse exact arithmetic in `Z(Γ^d) ⊗ Q`, the three relation families of
//! `Rat(Γ^d)`, pullbacks along graph morphisms and cube embeddings, the
//! moving-lemma normalization and the local degree map.
//!
//! The ring is the polynomial ring on the vertices of the product, graded by
//! total degree. `Rat` is generated by
//!
//! 1. products over non-simplex vertex sets,
//! 2. `(Σ_{C'} C') · C_v` for every vertex `v`,
//! 3. `C_v C_{v'} · Σ_{pr_i(C') = pr_i(v')} C'` whenever `pr_i(v) ≠ pr_i(v')`.
//!
//! Normalization rewrites any cycle over the standard cube into a sum of
//! proper monomials (pairwise distinct factors, chain support); the degree of
//! a cycle of total degree `d + 1` is the coefficient sum over maximal
//! chains, each of which counts 1.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::Rng;
use thiserror::Error;

use crate::simplicial::{
    cube_embeddings, is_simplex, unembed_vertex, CubeEmbedding, CubeVertex, OrderedGraph,
    ProductVertex, MAX_DIM,
};
use crate::Rational;

/// Refuse to enumerate graded pieces with more monomials than this.
pub const DEFAULT_BASIS_BOUND: u128 = 200_000;

/// Largest dimension the linear-algebra oracle will attempt.
pub const ORACLE_MAX_DIM: usize = 3;

#[derive(Debug, Error)]
pub enum ChowError {
    #[error("ambient mismatch between cycles")]
    AmbientMismatch,
    #[error("degree mismatch on add: {0} vs {1}")]
    DegreeMismatch(u32, u32),
    #[error("cycle has degree {got}, expected {expected}")]
    WrongDegree { expected: u32, got: u32 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("mixed-degree cycle: monomials of degree {0} and {1}")]
    MixedDegree(u32, u32),
    #[error("graded piece has {0} monomials, more than the bound {1}")]
    BasisTooLarge(u128, u128),
    #[error("oracle supports d <= {ORACLE_MAX_DIM}, got {0}")]
    OracleDimension(usize),
    #[error("rewriting exceeded the step cap of {0}")]
    StepCapExceeded(u64),
    #[error("relation system is inconsistent: the degree map would be ill-defined")]
    InconsistentRelations,
    #[error("degree is underdetermined on the cycle's support")]
    Underdetermined,
    #[error("degree {0} is not an integer")]
    NonIntegerDegree(String),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
}

/// An ambient product space whose vertices generate the polynomial ring.
pub trait Ambient: Clone + PartialEq + fmt::Debug {
    type Vertex: Clone + Eq + Ord + std::hash::Hash + fmt::Debug;

    fn dim(&self) -> usize;
    /// All vertices, in a fixed deterministic order.
    fn vertices(&self) -> Vec<Self::Vertex>;
    /// Projection to the i-th factor (1-based), as a vertex index.
    fn projection(&self, v: &Self::Vertex, axis: usize) -> u32;
    /// Whether a sorted, deduplicated vertex set spans a simplex.
    fn set_is_simplex(&self, support: &[Self::Vertex]) -> bool;
}

/// The standard cube `I^d`; vertices are `F_2^d`, simplices are chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cube {
    d: usize,
}

impl Cube {
    pub fn new(d: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "cube dimension out of range");
        Self { d }
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

impl Ambient for Cube {
    type Vertex = CubeVertex;

    fn dim(&self) -> usize {
        self.d
    }

    fn vertices(&self) -> Vec<CubeVertex> {
        (0..1u32 << self.d)
            .map(|b| CubeVertex::new(b, self.d).expect("in range"))
            .collect()
    }

    fn projection(&self, v: &CubeVertex, axis: usize) -> u32 {
        v.coord(axis)
    }

    fn set_is_simplex(&self, support: &[CubeVertex]) -> bool {
        // sorted by bitmask; a chain is exactly consecutive comparability
        support.windows(2).all(|w| w[0].le(w[1]))
    }
}

/// The product `Γ^d` of an ordered graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product {
    graph: OrderedGraph,
    d: usize,
}

impl Product {
    pub fn new(graph: OrderedGraph, d: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&d), "product dimension out of range");
        Self { graph, d }
    }

    pub fn graph(&self) -> &OrderedGraph {
        &self.graph
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

impl Ambient for Product {
    type Vertex = ProductVertex;

    fn dim(&self) -> usize {
        self.d
    }

    fn vertices(&self) -> Vec<ProductVertex> {
        let n = self.graph.vertex_count() as u32;
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.d];
        loop {
            out.push(ProductVertex(cur.clone()));
            let mut i = self.d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] + 1 < n {
                    cur[i] += 1;
                    for x in &mut cur[i + 1..] {
                        *x = 0;
                    }
                    break;
                }
            }
        }
    }

    fn projection(&self, v: &ProductVertex, axis: usize) -> u32 {
        v.coord(axis)
    }

    fn set_is_simplex(&self, support: &[ProductVertex]) -> bool {
        is_simplex(&self.graph, self.d, support)
    }
}

/// A monomial: a multiset of vertices with positive multiplicities, kept
/// sorted by the vertex key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial<V: Ord> {
    factors: Vec<(V, u32)>,
}

impl<V: Ord + Clone> Monomial<V> {
    /// The empty monomial of degree 0.
    pub fn unit() -> Self {
        Self {
            factors: Vec::new(),
        }
    }

    pub fn vertex(v: V) -> Self {
        Self {
            factors: vec![(v, 1)],
        }
    }

    pub fn from_factors<I: IntoIterator<Item = (V, u32)>>(factors: I) -> Self {
        let mut map: BTreeMap<V, u32> = BTreeMap::new();
        for (v, m) in factors {
            if m > 0 {
                *map.entry(v).or_insert(0) += m;
            }
        }
        Self {
            factors: map.into_iter().collect(),
        }
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|&(_, m)| m).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = &V> {
        self.factors.iter().map(|(v, _)| v)
    }

    /// All factors pairwise distinct.
    pub fn is_proper(&self) -> bool {
        self.factors.iter().all(|&(_, m)| m == 1)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_factors(
            self.factors
                .iter()
                .cloned()
                .chain(other.factors.iter().cloned()),
        )
    }

    /// Removes one copy of the factor at position `at` and adds one copy of `w`.
    fn replace_one(&self, at: usize, w: &V) -> Self {
        let mut factors = self.factors.clone();
        factors[at].1 -= 1;
        Self::from_factors(factors.into_iter().chain(std::iter::once((w.clone(), 1))))
    }
}

fn monomial_is_simplex<A: Ambient>(ambient: &A, m: &Monomial<A::Vertex>) -> bool {
    let support: Vec<A::Vertex> = m.support().cloned().collect();
    ambient.set_is_simplex(&support)
}

/// A homogeneous cycle: a sparse exact-rational linear combination of
/// monomials of one common total degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle<A: Ambient> {
    ambient: A,
    degree: u32,
    terms: BTreeMap<Monomial<A::Vertex>, Rational>,
}

impl<A: Ambient> Cycle<A> {
    pub fn zero(ambient: A, degree: u32) -> Self {
        Self {
            ambient,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// The ring unit: the empty monomial with coefficient 1.
    pub fn one(ambient: A) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::unit(), Rational::one());
        Self {
            ambient,
            degree: 0,
            terms,
        }
    }

    /// The generator `C_v`.
    pub fn vertex(ambient: A, v: A::Vertex) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::vertex(v), Rational::one());
        Self {
            ambient,
            degree: 1,
            terms,
        }
    }

    pub fn from_monomial(ambient: A, m: Monomial<A::Vertex>, coeff: Rational) -> Self {
        let degree = m.degree();
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(m, coeff);
        }
        Self {
            ambient,
            degree,
            terms,
        }
    }

    /// Builds a homogeneous cycle, rejecting mixed degrees.
    pub fn from_terms<I: IntoIterator<Item = (Monomial<A::Vertex>, Rational)>>(
        ambient: A,
        terms: I,
    ) -> Result<Self, ChowError> {
        let mut degree: Option<u32> = None;
        let mut map: BTreeMap<Monomial<A::Vertex>, Rational> = BTreeMap::new();
        for (m, c) in terms {
            match degree {
                None => degree = Some(m.degree()),
                Some(k) if k != m.degree() => {
                    return Err(ChowError::MixedDegree(k, m.degree()));
                }
                _ => {}
            }
            let entry = map.entry(m).or_insert_with(Rational::zero);
            *entry += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self {
            ambient,
            degree: degree.unwrap_or(0),
            terms: map,
        })
    }

    pub fn ambient(&self) -> &A {
        &self.ambient
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<A::Vertex>, &Rational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial<A::Vertex>) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self, ChowError> {
        if self.ambient != other.ambient {
            return Err(ChowError::AmbientMismatch);
        }
        if self.degree != other.degree {
            return Err(ChowError::DegreeMismatch(self.degree, other.degree));
        }
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Ok(Self {
            ambient: self.ambient.clone(),
            degree: self.degree,
            terms,
        })
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero(self.ambient.clone(), self.degree);
        }
        Self {
            ambient: self.ambient.clone(),
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ChowError> {
        self.add(&other.neg())
    }

    /// Graded-ring product. Monomials whose support is not a simplex lie in
    /// `Rat` by relation family (1) and are dropped eagerly.
    pub fn mul(&self, other: &Self) -> Result<Self, ChowError> {
        if self.ambient != other.ambient {
            return Err(ChowError::AmbientMismatch);
        }
        let mut terms: BTreeMap<Monomial<A::Vertex>, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                if !monomial_is_simplex(&self.ambient, &m) {
                    continue;
                }
                let entry = terms.entry(m).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Self {
            ambient: self.ambient.clone(),
            degree: self.degree + other.degree,
            terms,
        })
    }
}

impl fmt::Display for Cycle<Cube> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let d = self.ambient.d();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if !c.is_one() {
                write!(f, "{c} ")?;
            }
            if m.factors().is_empty() {
                write!(f, "1")?;
            }
            for (k, (v, mult)) in m.factors().iter().enumerate() {
                if k > 0 {
                    write!(f, "·")?;
                }
                write!(f, "C_{}", v.render(d))?;
                if *mult > 1 {
                    write!(f, "^{mult}")?;
                }
            }
        }
        Ok(())
    }
}

/// Number of degree-k multisets over n vertices, saturating.
fn multiset_count(n: usize, k: u32) -> u128 {
    // C(n + k - 1, k)
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc.saturating_mul(n as u128 + k as u128 - 1 - i);
        acc /= i + 1;
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

/// All monomials of the given total degree, in lexicographic order on the
/// ambient's vertex order.
pub fn monomials_of_degree<A: Ambient>(ambient: &A, degree: u32) -> Vec<Monomial<A::Vertex>> {
    let verts = ambient.vertices();
    let mut out = Vec::new();
    let mut stack: Vec<(A::Vertex, u32)> = Vec::new();
    fn rec<V: Ord + Clone>(
        verts: &[V],
        from: usize,
        remaining: u32,
        stack: &mut Vec<(V, u32)>,
        out: &mut Vec<Monomial<V>>,
    ) {
        if remaining == 0 {
            out.push(Monomial::from_factors(stack.iter().cloned()));
            return;
        }
        for i in from..verts.len() {
            for mult in (1..=remaining).rev() {
                stack.push((verts[i].clone(), mult));
                rec(verts, i + 1, remaining - mult, stack, out);
                stack.pop();
            }
        }
    }
    rec(&verts, 0, degree, &mut stack, &mut out);
    out.sort();
    out
}

/// Spanning set of `Rat(Γ^d)` intersected with the degree-k graded piece:
/// every generator of the three relation families multiplied by every
/// monomial of complementary degree. Intended for oracles and property tests
/// at small scale; refuses combinatorially large pieces.
pub fn relation_generators<A: Ambient>(
    ambient: &A,
    k: u32,
    basis_bound: u128,
) -> Result<Vec<Cycle<A>>, ChowError> {
    let verts = ambient.vertices();
    let count = multiset_count(verts.len(), k);
    if count > basis_bound {
        return Err(ChowError::BasisTooLarge(count, basis_bound));
    }
    let mut gens: Vec<Cycle<A>> = Vec::new();

    // family (1): non-simplex pairs; pairs span the family together with the
    // other generators
    if k >= 2 {
        let fillers = monomials_of_degree(ambient, k - 2);
        for (i, a) in verts.iter().enumerate() {
            for b in &verts[i + 1..] {
                let pair = [a.clone(), b.clone()];
                let mut sorted = pair.to_vec();
                sorted.sort();
                if ambient.set_is_simplex(&sorted) {
                    continue;
                }
                let base = Monomial::from_factors([(a.clone(), 1), (b.clone(), 1)]);
                for filler in &fillers {
                    gens.push(Cycle::from_monomial(
                        ambient.clone(),
                        base.mul(filler),
                        Rational::one(),
                    ));
                }
            }
        }
    }

    // family (2): (Σ_{C'} C') · C_v
    if k >= 2 {
        let fillers = monomials_of_degree(ambient, k - 2);
        for v in &verts {
            for filler in &fillers {
                let base = Monomial::vertex(v.clone()).mul(filler);
                let cycle = Cycle::from_terms(
                    ambient.clone(),
                    verts
                        .iter()
                        .map(|w| (base.mul(&Monomial::vertex(w.clone())), Rational::one())),
                )?;
                gens.push(cycle);
            }
        }
    }

    // family (3): C_v C_v' Σ_{pr_i(C') = pr_i(v')} C' whenever pr_i(v) ≠ pr_i(v')
    if k >= 3 {
        let fillers = monomials_of_degree(ambient, k - 3);
        for v in &verts {
            for v2 in &verts {
                for axis in 1..=ambient.dim() {
                    if ambient.projection(v, axis) == ambient.projection(v2, axis) {
                        continue;
                    }
                    let pair = Monomial::from_factors([(v.clone(), 1), (v2.clone(), 1)]);
                    for filler in &fillers {
                        let base = pair.mul(filler);
                        let cycle = Cycle::from_terms(
                            ambient.clone(),
                            verts
                                .iter()
                                .filter(|w| {
                                    ambient.projection(w, axis) == ambient.projection(v2, axis)
                                })
                                .map(|w| (base.mul(&Monomial::vertex(w.clone())), Rational::one())),
                        )?;
                        gens.push(cycle);
                    }
                }
            }
        }
    }

    Ok(gens)
}

/// A morphism of ordered graphs, determined by its vertex images. Every edge
/// must map to an edge ascending in the target order or collapse to a vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMorphism {
    source: OrderedGraph,
    target: OrderedGraph,
    vertex_map: Vec<u32>,
}

impl GraphMorphism {
    pub fn new(
        source: OrderedGraph,
        target: OrderedGraph,
        vertex_map: Vec<u32>,
    ) -> Result<Self, ChowError> {
        if vertex_map.len() != source.vertex_count() {
            return Err(ChowError::InvalidMorphism(format!(
                "vertex map has {} entries for {} vertices",
                vertex_map.len(),
                source.vertex_count()
            )));
        }
        for &img in &vertex_map {
            if img as usize >= target.vertex_count() {
                return Err(ChowError::InvalidMorphism(format!(
                    "image index {img} out of range"
                )));
            }
        }
        for &(a, b) in source.edges() {
            let (fa, fb) = (vertex_map[a as usize], vertex_map[b as usize]);
            if fa == fb {
                continue; // collapsed
            }
            if fa > fb || !target.has_edge(fa, fb) {
                return Err(ChowError::InvalidMorphism(format!(
                    "edge ({a}, {b}) maps to ({fa}, {fb}), which is not an ascending edge"
                )));
            }
        }
        Ok(Self {
            source,
            target,
            vertex_map,
        })
    }

    pub fn identity(g: &OrderedGraph) -> Self {
        Self {
            source: g.clone(),
            target: g.clone(),
            vertex_map: (0..g.vertex_count() as u32).collect(),
        }
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, ChowError> {
        if inner.target != outer.source {
            return Err(ChowError::InvalidMorphism(
                "composition domains do not match".into(),
            ));
        }
        Ok(Self {
            source: inner.source.clone(),
            target: outer.target.clone(),
            vertex_map: inner
                .vertex_map
                .iter()
                .map(|&v| outer.vertex_map[v as usize])
                .collect(),
        })
    }

    pub fn source(&self) -> &OrderedGraph {
        &self.source
    }

    pub fn target(&self) -> &OrderedGraph {
        &self.target
    }

    pub fn apply(&self, v: u32) -> u32 {
        self.vertex_map[v as usize]
    }

    pub fn preimages(&self, v: u32) -> Vec<u32> {
        self.vertex_map
            .iter()
            .enumerate()
            .filter(|&(_, &img)| img == v)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// Pullback along a d-tuple of graph morphisms `Γ' → Γ`: the ring
/// homomorphism sending a vertex to the sum of its preimages.
pub fn pullback_morphisms(
    fs: &[GraphMorphism],
    a: &Cycle<Product>,
) -> Result<Cycle<Product>, ChowError> {
    let d = a.ambient().dim();
    if fs.len() != d {
        return Err(ChowError::DimensionMismatch(fs.len(), d));
    }
    let source = fs[0].source().clone();
    let target = fs[0].target().clone();
    for f in fs {
        if f.source() != &source || f.target() != &target {
            return Err(ChowError::InvalidMorphism(
                "morphism tuple must share source and target".into(),
            ));
        }
    }
    if a.ambient().graph() != &target {
        return Err(ChowError::AmbientMismatch);
    }
    let source_ambient = Product::new(source, d);

    // preimage of one product vertex: cartesian product of per-axis preimages
    let vertex_preimage = |p: &ProductVertex| -> Cycle<Product> {
        let per_axis: Vec<Vec<u32>> = (0..d).map(|i| fs[i].preimages(p.0[i])).collect();
        let mut tuples: Vec<Vec<u32>> = vec![Vec::new()];
        for axis in &per_axis {
            let mut next = Vec::new();
            for t in &tuples {
                for &q in axis {
                    let mut t2 = t.clone();
                    t2.push(q);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        Cycle::from_terms(
            source_ambient.clone(),
            tuples
                .into_iter()
                .map(|t| (Monomial::vertex(ProductVertex(t)), Rational::one())),
        )
        .expect("degree-1 terms")
    };

    let mut acc = Cycle::zero(source_ambient.clone(), a.degree());
    for (m, c) in a.terms() {
        let mut prod = Cycle::one(source_ambient.clone());
        for (p, mult) in m.factors() {
            let pre = vertex_preimage(p);
            for _ in 0..*mult {
                prod = prod.mul(&pre)?;
            }
        }
        acc = acc.add(&prod.scale(c))?;
    }
    Ok(acc)
}

/// Pullback along a standard-cube embedding `i_γ`: a vertex restricts to its
/// unique preimage in the cube, or to 0 when it lies outside the image.
pub fn pullback_cube(gamma: &CubeEmbedding, a: &Cycle<Product>) -> Result<Cycle<Cube>, ChowError> {
    let d = a.ambient().dim();
    if gamma.dim() != d {
        return Err(ChowError::DimensionMismatch(gamma.dim(), d));
    }
    let g = a.ambient().graph();
    let cube = Cube::new(d);
    let mut terms: Vec<(Monomial<CubeVertex>, Rational)> = Vec::new();
    'outer: for (m, c) in a.terms() {
        let mut factors = Vec::with_capacity(m.factors().len());
        for (p, mult) in m.factors() {
            match unembed_vertex(gamma, p, g) {
                Some(w) => factors.push((w, *mult)),
                None => continue 'outer,
            }
        }
        let pulled = Monomial::from_factors(factors);
        if monomial_is_simplex(&cube, &pulled) {
            terms.push((pulled, c.clone()));
        }
    }
    let mut out = Cycle::from_terms(cube, terms)?;
    out.degree = a.degree();
    Ok(out)
}

/// Tie-break policy for the rewriting steps of the moving lemma.
#[allow(clippy::large_enum_variant)]
pub enum TieBreak {
    /// Smallest repeated factor, successor co-factor when one exists,
    /// lowest eligible coordinate. Under this policy the rewrite relation is
    /// a DAG and results are reproducible.
    Deterministic,
    /// Random eligible coordinate and random choice between successor and
    /// predecessor co-factor. Terminates almost surely; the step cap guards
    /// the tail.
    Random(StdRng),
}

pub struct NormalizeOptions {
    pub tie_break: TieBreak,
    pub step_cap: u64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            tie_break: TieBreak::Deterministic,
            step_cap: 1_000_000,
        }
    }
}

/// One moving-lemma step on an improper chain monomial: returns children
/// `m_1, …, m_r` with `m ≡ −(m_1 + … + m_r) mod Rat(I^d)`, non-simplex
/// children already pruned.
///
/// The step instantiates relation family (3) — or family (2) for pure powers
/// — at the smallest repeated factor, with the explicit minus sign the
/// relation forces.
fn rewrite_improper(
    m: &Monomial<CubeVertex>,
    d: usize,
    tie_break: &mut TieBreak,
) -> Vec<Monomial<CubeVertex>> {
    let factors = m.factors();
    let l = factors.len();
    let j = factors
        .iter()
        .position(|&(_, mult)| mult >= 2)
        .expect("monomial must be improper");
    let vj = factors[j].0;

    let mut children = Vec::new();
    let mut push_child = |w: CubeVertex| {
        let child = m.replace_one(j, &w);
        let support: Vec<CubeVertex> = child.support().cloned().collect();
        if support.windows(2).all(|p| p[0].le(p[1])) {
            children.push(child);
        }
    };

    if l == 1 {
        // pure power: (Σ_w C_w) C_v = 0, so C_v^a = −Σ_{w ≠ v} C_w C_v^{a-1}
        for bits in 0..1u32 << d {
            let w = CubeVertex::new(bits, d).expect("in range");
            if w != vj {
                push_child(w);
            }
        }
        return children;
    }

    // co-factor choice: successor keeps the rewrite relation a DAG; the
    // random policy may also pick the predecessor where one exists
    let use_successor = match tie_break {
        TieBreak::Deterministic => j + 1 < l,
        TieBreak::Random(rng) => {
            let succ = j + 1 < l;
            let pred = j > 0;
            if succ && pred {
                rng.gen_bool(0.5)
            } else {
                succ
            }
        }
    };

    let (eligible, wanted_bit): (u32, u32) = if use_successor {
        let vn = factors[j + 1].0;
        (vn.bits() & !vj.bits(), 0)
    } else {
        let vn = factors[j - 1].0;
        (vj.bits() & !vn.bits(), 1)
    };
    debug_assert!(eligible != 0, "strict chain neighbours differ somewhere");
    let axis_bit = match tie_break {
        TieBreak::Deterministic => eligible & eligible.wrapping_neg(),
        TieBreak::Random(rng) => {
            let idx = rng.gen_range(0..eligible.count_ones());
            let mut e = eligible;
            for _ in 0..idx {
                e &= e - 1;
            }
            e & e.wrapping_neg()
        }
    };

    for bits in 0..1u32 << d {
        let w = CubeVertex::new(bits, d).expect("in range");
        let bit = u32::from(bits & axis_bit != 0);
        if bit == wanted_bit && w != vj {
            push_child(w);
        }
    }
    children
}

/// Rewrites a cycle over `I^d` into a congruent sum of proper chain
/// monomials. The representative depends on tie-break choices; only its
/// class modulo `Rat(I^d)` is contractual.
pub fn normalize_cube(a: &Cycle<Cube>) -> Result<Cycle<Cube>, ChowError> {
    normalize_cube_with(a, &mut NormalizeOptions::default())
}

pub fn normalize_cube_with(
    a: &Cycle<Cube>,
    opts: &mut NormalizeOptions,
) -> Result<Cycle<Cube>, ChowError> {
    let d = a.ambient().d();
    let mut terms: BTreeMap<Monomial<CubeVertex>, Rational> = BTreeMap::new();
    let mut pending: BTreeSet<Monomial<CubeVertex>> = BTreeSet::new();
    for (m, c) in a.terms() {
        if !monomial_is_simplex(a.ambient(), m) {
            continue; // relation family (1)
        }
        terms.insert(m.clone(), c.clone());
        if !m.is_proper() {
            pending.insert(m.clone());
        }
    }

    let mut steps = 0u64;
    while let Some(m) = pending.pop_first() {
        let Some(coeff) = terms.remove(&m) else {
            continue; // cancelled in the meantime
        };
        steps += 1;
        if steps > opts.step_cap {
            return Err(ChowError::StepCapExceeded(opts.step_cap));
        }
        for child in rewrite_improper(&m, d, &mut opts.tie_break) {
            let entry = terms.entry(child.clone()).or_insert_with(Rational::zero);
            *entry -= &coeff;
            if entry.is_zero() {
                terms.remove(&child);
            } else if !child.is_proper() {
                pending.insert(child);
            }
        }
    }

    let mut out = Cycle::zero(a.ambient().clone(), a.degree());
    out.terms = terms;
    Ok(out)
}

fn is_maximal_chain(m: &Monomial<CubeVertex>, d: usize) -> bool {
    m.is_proper()
        && m.factors().len() == d + 1
        && m.factors().first().map(|&(v, _)| v) == Some(CubeVertex::zero())
        && m.factors().last().map(|&(v, _)| v) == Some(CubeVertex::ones(d))
        && m.factors().windows(2).all(|w| w[0].0.le(w[1].0))
}

/// Local degree on `I^d` for cycles of total degree `d + 1`: normalize, then
/// sum the coefficients of the maximal-chain monomials, each of which has
/// degree 1.
pub fn degree_cube(a: &Cycle<Cube>) -> Result<Rational, ChowError> {
    degree_cube_with(a, &mut NormalizeOptions::default())
}

pub fn degree_cube_with(
    a: &Cycle<Cube>,
    opts: &mut NormalizeOptions,
) -> Result<Rational, ChowError> {
    let d = a.ambient().d();
    if a.degree() != d as u32 + 1 {
        return Err(ChowError::WrongDegree {
            expected: d as u32 + 1,
            got: a.degree(),
        });
    }
    let normalized = normalize_cube_with(a, opts)?;
    let mut sum = Rational::zero();
    for (m, c) in normalized.terms() {
        if is_maximal_chain(m, d) {
            sum += c;
        }
    }
    Ok(sum)
}

/// Memoized monomial degrees over `I^d` under the deterministic rewrite
/// policy, shared across many degree computations.
pub struct DegreeMemo {
    d: usize,
    map: HashMap<Monomial<CubeVertex>, Rational>,
}

impl DegreeMemo {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            map: HashMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Degree of a single monomial of total degree `d + 1`.
    pub fn monomial_degree(&mut self, m: &Monomial<CubeVertex>) -> Rational {
        if let Some(v) = self.map.get(m) {
            return v.clone();
        }
        let support: Vec<CubeVertex> = m.support().cloned().collect();
        let value = if !support.windows(2).all(|p| p[0].le(p[1])) {
            Rational::zero()
        } else if m.is_proper() {
            // proper chain of d + 1 distinct vertices is a maximal chain
            if is_maximal_chain(m, self.d) {
                Rational::one()
            } else {
                Rational::zero()
            }
        } else {
            let children = rewrite_improper(m, self.d, &mut TieBreak::Deterministic);
            let mut sum = Rational::zero();
            for child in children {
                sum += self.monomial_degree(&child);
            }
            -sum
        };
        self.map.insert(m.clone(), value.clone());
        value
    }
}

/// Local degree via the shared memo; equal to [`degree_cube`] by linearity.
pub fn degree_cube_memo(a: &Cycle<Cube>, memo: &mut DegreeMemo) -> Result<Rational, ChowError> {
    let d = a.ambient().d();
    if d != memo.d {
        return Err(ChowError::DimensionMismatch(d, memo.d));
    }
    if a.degree() != d as u32 + 1 {
        return Err(ChowError::WrongDegree {
            expected: d as u32 + 1,
            got: a.degree(),
        });
    }
    let mut sum = Rational::zero();
    for (m, c) in a.terms() {
        sum += c * memo.monomial_degree(m);
    }
    Ok(sum)
}

/// Local degree on `Γ^d`: the sum of cube degrees over the covering by
/// standard cubes, `ldeg = Σ_γ ldeg ∘ i_γ^*`.
pub fn degree_product(a: &Cycle<Product>) -> Result<Rational, ChowError> {
    let d = a.ambient().dim();
    if a.degree() != d as u32 + 1 {
        return Err(ChowError::WrongDegree {
            expected: d as u32 + 1,
            got: a.degree(),
        });
    }
    let g = a.ambient().graph().clone();
    let mut memo = DegreeMemo::new(d);
    let mut sum = Rational::zero();
    for gamma in cube_embeddings(&g, d) {
        let restricted = pullback_cube(&gamma, a)?;
        sum += degree_cube_memo(&restricted, &mut memo)?;
    }
    Ok(sum)
}

/// Independent linear-algebra oracle for the local degree on `I^d`.
///
/// It spans the degree-(d+1) piece of `Rat(I^d)` from the raw relation
/// families, pins the functional to 1 on maximal chains, and evaluates by
/// exact Gaussian elimination. It shares no code with the rewriting path.
#[derive(Debug)]
pub struct OracleSolver {
    d: usize,
    index: HashMap<Monomial<CubeVertex>, usize>,
    /// pivot column → (row entries at columns ≥ pivot, right-hand side)
    pivots: BTreeMap<usize, (BTreeMap<usize, Rational>, Rational)>,
}

impl OracleSolver {
    pub fn new(d: usize) -> Result<Self, ChowError> {
        if d > ORACLE_MAX_DIM {
            return Err(ChowError::OracleDimension(d));
        }
        let cube = Cube::new(d);
        let k = d as u32 + 1;
        let basis = monomials_of_degree(&cube, k);
        let index: HashMap<Monomial<CubeVertex>, usize> = basis
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();

        let mut solver = Self {
            d,
            index,
            pivots: BTreeMap::new(),
        };

        for gen in relation_generators(&cube, k, DEFAULT_BASIS_BOUND)? {
            let row: BTreeMap<usize, Rational> = gen
                .terms()
                .map(|(m, c)| (solver.index[m], c.clone()))
                .collect();
            solver.insert_row(row, Rational::zero())?;
        }
        for m in &basis {
            if is_maximal_chain(m, d) {
                let mut row = BTreeMap::new();
                row.insert(solver.index[m], Rational::one());
                solver.insert_row(row, Rational::one())?;
            }
        }
        Ok(solver)
    }

    fn reduce(
        &self,
        row: &mut BTreeMap<usize, Rational>,
        rhs: &mut Rational,
        value: Option<&mut Rational>,
    ) {
        // eliminating the smallest column strictly increases it, so this
        // terminates within one pass over the basis
        let mut value = value;
        while let Some((&col, _)) = row.iter().next() {
            let Some((prow, prhs)) = self.pivots.get(&col) else {
                break;
            };
            let factor = row.remove(&col).expect("present");
            for (c, pc) in prow {
                if *c == col {
                    continue;
                }
                let entry = row.entry(*c).or_insert_with(Rational::zero);
                *entry -= &factor * pc;
                if entry.is_zero() {
                    row.remove(c);
                }
            }
            *rhs -= &factor * prhs;
            if let Some(v) = value.as_deref_mut() {
                *v += &factor * prhs;
            }
        }
    }

    fn insert_row(
        &mut self,
        mut row: BTreeMap<usize, Rational>,
        mut rhs: Rational,
    ) -> Result<(), ChowError> {
        self.reduce(&mut row, &mut rhs, None);
        match row.iter().next() {
            None => {
                if rhs.is_zero() {
                    Ok(())
                } else {
                    Err(ChowError::InconsistentRelations)
                }
            }
            Some((&col, lead)) => {
                let lead = lead.clone();
                let normalized: BTreeMap<usize, Rational> =
                    row.iter().map(|(c, v)| (*c, v / &lead)).collect();
                let rhs = rhs / lead;
                self.pivots.insert(col, (normalized, rhs));
                Ok(())
            }
        }
    }

    /// Evaluates the degree functional on a cycle of total degree d + 1.
    pub fn eval(&self, a: &Cycle<Cube>) -> Result<Rational, ChowError> {
        if a.ambient().d() != self.d {
            return Err(ChowError::DimensionMismatch(a.ambient().d(), self.d));
        }
        if a.degree() != self.d as u32 + 1 {
            return Err(ChowError::WrongDegree {
                expected: self.d as u32 + 1,
                got: a.degree(),
            });
        }
        let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
        for (m, c) in a.terms() {
            let col = *self.index.get(m).ok_or(ChowError::AmbientMismatch)?;
            row.insert(col, c.clone());
        }
        let mut rhs = Rational::zero();
        let mut value = Rational::zero();
        self.reduce(&mut row, &mut rhs, Some(&mut value));
        if row.is_empty() {
            Ok(value)
        } else {
            Err(ChowError::Underdetermined)
        }
    }
}

/// One-shot oracle evaluation; builds the solver, solves and evaluates.
pub fn oracle_degree(a: &Cycle<Cube>) -> Result<Rational, ChowError> {
    OracleSolver::new(a.ambient().d())?.eval(a)
}

/// Converts an exact rational that must be an integer, failing loudly
/// otherwise.
pub fn expect_integer(q: &Rational) -> Result<num_bigint::BigInt, ChowError> {
    if q.denom().is_one() || q.numer().is_zero() {
        Ok(q.numer().clone())
    } else {
        Err(ChowError::NonIntegerDegree(q.to_string()))
    }
}

/// Same, narrowed to `i64`; all degrees at supported sizes fit comfortably.
pub fn expect_i64(q: &Rational) -> Result<i64, ChowError> {
    let big = expect_integer(q)?;
    i64::try_from(&big).map_err(|_| ChowError::NonIntegerDegree(q.to_string()))
}
