//! Exact local intersection numbers in combinatorial Chow rings of
//! d-fold products of ordered graphs.
//!
//! The ring `C(Γ^d)` is the polynomial ring on the vertices of the product
//! `Γ^d`, graded by total degree, modulo three families of relations
//! (non-simplex products, total-fibre sums, projection relations). This crate
//! provides:
//!
//! * [`simplicial`] — ordered graphs, their products viewed as posets,
//!   standard-cube embeddings and the edgewise subdivision;
//! * [`chow`] — sparse exact-rational cycle arithmetic, the relation
//!   families, pullbacks, moving-lemma normalization and the local degree;
//! * [`fourier`] — the character-sum basis `F_v` of the degree-1 piece over
//!   the standard cube, symmetry actions and orbit canonicalization;
//! * [`vanishing`] — set partitions, the `α(P, v)` statistic and the
//!   exhaustive vanishing-condition sweep with a persistent degree cache;
//! * [`cli`] — the `chowcalc` command-line front end.
//!
//! All coefficients are exact rationals; degrees that land in `Z` are
//! asserted to do so, never rounded.

pub mod chow;
pub mod cli;
pub mod fourier;
pub mod simplicial;
pub mod vanishing;

/// Exact rational scalar used for all cycle coefficients.
pub type Rational = num_rational::BigRational;

pub use chow::{
    degree_cube, degree_product, normalize_cube, oracle_degree, pullback_cube, pullback_morphisms,
    relation_generators, ChowError, Cube, Cycle, DegreeMemo, GraphMorphism, Monomial, Product,
};
pub use fourier::{
    c_to_f, canonical_tuple, degree_f, f_to_c, orbit_size, psi_cycle, psi_fourier, sigma_cycle,
    sigma_fourier, FourierCycle, TupleOrbitKey,
};
pub use simplicial::{
    cube_embeddings, embed_vertex, is_simplex, subdivide, CubeEmbedding, CubeVertex, OrderedGraph,
    ProductVertex, SimplicialError, MAX_DIM,
};
pub use vanishing::{
    check_vanishing, partitions, DegreeCache, Partition, SweepOptions, VanishingError,
    VanishingReport,
};
