//! The character-sum basis `F_v = Σ_w (−1)^{⟨v,w⟩} C_w` of the degree-1
//! piece of `C(I^d) ⊗ Q`, the transforms between bases, the symmetry actions
//! `ψ` and `S_d`, orbit canonicalization of vertex tuples and the local
//! degree in the F basis.
//!
//! Vectors are ordered first by popcount, then with a 1 winning against a 0
//! at the first differing coordinate:
//! `000 ≺ 100 ≺ 010 ≺ 001 ≺ 110 ≺ 101 ≺ 011 ≺ 111`.
//! Tuples are ordered lexicographically in that vector order, and the
//! canonical representative of a tuple is the minimum over the
//! `S_{n} × S_d` action (permute tuple slots, permute coordinates).

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use num_traits::{One, Zero};

use crate::chow::{degree_cube_memo, expect_i64, ChowError, Cube, Cycle, DegreeMemo, Monomial};
use crate::simplicial::CubeVertex;
use crate::Rational;

/// A degree-1 element of `C(I^d)_Q` written in the F basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourierCycle {
    d: usize,
    terms: BTreeMap<CubeVertex, Rational>,
}

impl FourierCycle {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    /// The basis vector `F_v` itself.
    pub fn basis(d: usize, v: CubeVertex) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(v, Rational::one());
        Self { d, terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (CubeVertex, Rational)>>(d: usize, terms: I) -> Self {
        let mut map: BTreeMap<CubeVertex, Rational> = BTreeMap::new();
        for (v, c) in terms {
            let entry = map.entry(v).or_insert_with(Rational::zero);
            *entry += c;
        }
        map.retain(|_, c| !c.is_zero());
        Self { d, terms: map }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CubeVertex, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, v: CubeVertex) -> Rational {
        self.terms.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Expands an F-basis element into the C basis: `F_v = Σ_w (−1)^{⟨v,w⟩} C_w`.
pub fn f_to_c(x: &FourierCycle) -> Cycle<Cube> {
    let d = x.d;
    let ambient = Cube::new(d);
    let mut terms: Vec<(Monomial<CubeVertex>, Rational)> = Vec::new();
    for (v, c) in x.terms() {
        for bits in 0..1u32 << d {
            let w = CubeVertex::new(bits, d).expect("in range");
            let sign = if v.dot(w) == 1 {
                -Rational::one()
            } else {
                Rational::one()
            };
            terms.push((Monomial::vertex(w), c * sign));
        }
    }
    if terms.is_empty() {
        return Cycle::zero(ambient, 1);
    }
    Cycle::from_terms(ambient, terms).expect("degree-1 terms")
}

/// Inverse transform on degree-1 cycles: `C_v = 2^{-d} Σ_w (−1)^{⟨v,w⟩} F_w`.
pub fn c_to_f(a: &Cycle<Cube>) -> Result<FourierCycle, ChowError> {
    if a.degree() != 1 {
        return Err(ChowError::WrongDegree {
            expected: 1,
            got: a.degree(),
        });
    }
    let d = a.ambient().d();
    let scale = Rational::new(1.into(), num_bigint::BigInt::from(1u64 << d));
    let mut terms: Vec<(CubeVertex, Rational)> = Vec::new();
    for (m, c) in a.terms() {
        let v = m.factors()[0].0;
        for bits in 0..1u32 << d {
            let w = CubeVertex::new(bits, d).expect("in range");
            let sign = if v.dot(w) == 1 {
                -Rational::one()
            } else {
                Rational::one()
            };
            terms.push((w, c * sign * &scale));
        }
    }
    Ok(FourierCycle::from_terms(d, terms))
}

/// Local degree of `F_{v_0} ⋯ F_{v_d}`, expanded one factor at a time into
/// the C basis with eager non-simplex pruning. The result is asserted to be
/// an integer.
pub fn degree_f(d: usize, tuple: &[CubeVertex]) -> Result<i64, ChowError> {
    let mut memo = DegreeMemo::new(d);
    degree_f_with(d, tuple, &mut memo)
}

/// Same as [`degree_f`] with a caller-owned monomial-degree memo, for sweeps
/// that evaluate many tuples over the same cube.
pub fn degree_f_with(
    d: usize,
    tuple: &[CubeVertex],
    memo: &mut DegreeMemo,
) -> Result<i64, ChowError> {
    if tuple.len() != d + 1 {
        return Err(ChowError::DimensionMismatch(tuple.len(), d + 1));
    }
    let mut acc = f_to_c(&FourierCycle::basis(d, tuple[0]));
    for &v in &tuple[1..] {
        acc = acc.mul(&f_to_c(&FourierCycle::basis(d, v)))?;
    }
    let q = degree_cube_memo(&acc, memo)?;
    expect_i64(&q)
}

/// The involution `ψ: C_v ↦ C_{v + (1,…,1)}`, a graded ring automorphism.
pub fn psi_cycle(a: &Cycle<Cube>) -> Cycle<Cube> {
    let d = a.ambient().d();
    Cycle::from_terms(
        a.ambient().clone(),
        a.terms().map(|(m, c)| {
            (
                Monomial::from_factors(m.factors().iter().map(|&(v, k)| (v.complement(d), k))),
                c.clone(),
            )
        }),
    )
    .expect("degree preserved")
}

/// `ψ` in the F basis: `F_v ↦ (−1)^{⟨v,(1,…,1)⟩} F_v`.
pub fn psi_fourier(x: &FourierCycle) -> FourierCycle {
    FourierCycle::from_terms(
        x.d,
        x.terms().map(|(v, c)| {
            let sign = if v.popcount() % 2 == 1 {
                -Rational::one()
            } else {
                Rational::one()
            };
            (*v, c * sign)
        }),
    )
}

/// Applies a coordinate permutation to a cube vertex: bit `perm[i]` of the
/// result is bit `i` of `v` (coordinate `i + 1` moves to slot `perm[i] + 1`).
pub fn permute_vertex(v: CubeVertex, perm: &[usize]) -> CubeVertex {
    let mut bits = 0u32;
    for (i, &target) in perm.iter().enumerate() {
        if v.bits() >> i & 1 == 1 {
            bits |= 1 << target;
        }
    }
    CubeVertex::new(bits, perm.len()).expect("permutation preserves width")
}

fn assert_permutation(d: usize, perm: &[usize]) {
    assert_eq!(perm.len(), d, "permutation must have length d");
    let mut seen = vec![false; d];
    for &p in perm {
        assert!(p < d && !seen[p], "not a permutation of 0..d");
        seen[p] = true;
    }
}

/// The `S_d` action on the C basis: `C_v ↦ C_{v^σ}`.
pub fn sigma_cycle(perm: &[usize], a: &Cycle<Cube>) -> Cycle<Cube> {
    assert_permutation(a.ambient().d(), perm);
    Cycle::from_terms(
        a.ambient().clone(),
        a.terms().map(|(m, c)| {
            (
                Monomial::from_factors(
                    m.factors()
                        .iter()
                        .map(|&(v, k)| (permute_vertex(v, perm), k)),
                ),
                c.clone(),
            )
        }),
    )
    .expect("degree preserved")
}

/// The `S_d` action in the F basis: `F_v ↦ F_{v^σ}`.
pub fn sigma_fourier(perm: &[usize], x: &FourierCycle) -> FourierCycle {
    assert_permutation(x.d, perm);
    FourierCycle::from_terms(
        x.d,
        x.terms()
            .map(|(v, c)| (permute_vertex(*v, perm), c.clone())),
    )
}

/// Sort key realizing the vector order: popcount first, then a 1 beats a 0
/// at the first differing coordinate.
pub fn vector_key(d: usize, v: CubeVertex) -> (u32, u32) {
    let mut mirror = 0u32;
    for i in 0..d {
        if v.bits() >> i & 1 == 0 {
            mirror |= 1 << (d - 1 - i);
        }
    }
    (v.popcount(), mirror)
}

/// Compares two equal-length tuples lexicographically in the vector order.
pub fn cmp_tuples(d: usize, a: &[CubeVertex], b: &[CubeVertex]) -> std::cmp::Ordering {
    let ka = a.iter().map(|&v| vector_key(d, v));
    let kb = b.iter().map(|&v| vector_key(d, v));
    ka.cmp(kb)
}

/// Canonical representative of a tuple orbit: the minimum of all
/// `S_n × S_d` images, tuples compared lexicographically in the vector order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleOrbitKey {
    d: usize,
    tuple: Vec<CubeVertex>,
}

impl TupleOrbitKey {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn tuple(&self) -> &[CubeVertex] {
        &self.tuple
    }

    pub fn render(&self) -> String {
        self.tuple
            .iter()
            .map(|v| v.render(self.d))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl PartialOrd for TupleOrbitKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TupleOrbitKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        cmp_tuples(self.d, &self.tuple, &other.tuple).then_with(|| self.tuple.cmp(&other.tuple))
    }
}

/// Explicit minimum over the full `S_n × S_d` orbit of the tuple.
pub fn canonical_tuple(d: usize, tuple: &[CubeVertex]) -> TupleOrbitKey {
    let mut best: Option<Vec<CubeVertex>> = None;
    for perm in (0..d).permutations(d) {
        let mut mapped: Vec<CubeVertex> = tuple.iter().map(|&v| permute_vertex(v, &perm)).collect();
        mapped.sort_by_key(|&v| vector_key(d, v));
        let better = match &best {
            None => true,
            Some(b) => cmp_tuples(d, &mapped, b) == std::cmp::Ordering::Less,
        };
        if better {
            best = Some(mapped);
        }
    }
    TupleOrbitKey {
        d,
        tuple: best.unwrap_or_default(),
    }
}

/// Number of distinct tuples in the `S_n × S_d` orbit.
pub fn orbit_size(d: usize, tuple: &[CubeVertex]) -> usize {
    let mut seen: HashSet<Vec<CubeVertex>> = HashSet::new();
    for perm in (0..d).permutations(d) {
        let mapped: Vec<CubeVertex> = tuple.iter().map(|&v| permute_vertex(v, &perm)).collect();
        for arrangement in (0..mapped.len()).permutations(mapped.len()) {
            seen.insert(arrangement.iter().map(|&i| mapped[i]).collect());
        }
    }
    seen.len()
}

/// All canonical representatives of length-`len` tuples over `F_2^d`, in
/// ascending tuple order. These index the orbits of the `S_len × S_d`
/// action.
pub fn canonical_tuples(d: usize, len: usize) -> Vec<Vec<CubeVertex>> {
    let mut verts: Vec<CubeVertex> = (0..1u32 << d)
        .map(|b| CubeVertex::new(b, d).expect("in range"))
        .collect();
    verts.sort_by_key(|&v| vector_key(d, v));

    let mut out = Vec::new();
    let mut idx = vec![0usize; len];
    loop {
        let tuple: Vec<CubeVertex> = idx.iter().map(|&i| verts[i]).collect();
        if canonical_tuple(d, &tuple).tuple() == tuple.as_slice() {
            out.push(tuple);
        }
        // next non-decreasing index sequence
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] + 1 < verts.len() {
                let v = idx[i] + 1;
                for x in &mut idx[i..] {
                    *x = v;
                }
                break;
            }
        }
    }
}

/// Degrees of all orbit representatives of `(d+1)`-tuples: the full
/// intersection-number table of `C(I^d)_Q` up to symmetry.
pub fn orbit_table(d: usize) -> Result<Vec<(Vec<CubeVertex>, i64)>, ChowError> {
    let mut memo = DegreeMemo::new(d);
    canonical_tuples(d, d + 1)
        .into_iter()
        .map(|t| {
            let deg = degree_f_with(d, &t, &mut memo)?;
            Ok((t, deg))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(s: &str) -> CubeVertex {
        CubeVertex::parse_bits(s).unwrap().0
    }

    fn cvs(ss: &[&str]) -> Vec<CubeVertex> {
        ss.iter().map(|s| cv(s)).collect()
    }

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn f_to_c_small_cases() {
        let f0 = f_to_c(&FourierCycle::basis(1, cv("0")));
        assert_eq!(f0.coeff(&Monomial::vertex(cv("0"))), q(1));
        assert_eq!(f0.coeff(&Monomial::vertex(cv("1"))), q(1));

        let f1 = f_to_c(&FourierCycle::basis(1, cv("1")));
        assert_eq!(f1.coeff(&Monomial::vertex(cv("0"))), q(1));
        assert_eq!(f1.coeff(&Monomial::vertex(cv("1"))), q(-1));
    }

    #[test]
    fn transforms_are_mutually_inverse() {
        for d in 1..=4usize {
            for bits in 0..1u32 << d {
                let v = CubeVertex::new(bits, d).unwrap();
                let f = FourierCycle::basis(d, v);
                assert_eq!(c_to_f(&f_to_c(&f)).unwrap(), f);
                let c = Cycle::vertex(Cube::new(d), v);
                assert_eq!(f_to_c(&c_to_f(&c).unwrap()), c);
            }
        }
    }

    #[test]
    fn degree_f_paper_values() {
        assert_eq!(degree_f(2, &cvs(&["10", "01", "11"])).unwrap(), 16);
        assert_eq!(degree_f(2, &cvs(&["11", "11", "11"])).unwrap(), -32);
        assert_eq!(
            degree_f(3, &cvs(&["111", "111", "111", "111"])).unwrap(),
            512
        );
        // any tuple containing 0…0 dies: F_0 F_v = 0
        assert_eq!(degree_f(2, &cvs(&["00", "11", "11"])).unwrap(), 0);
        // (e_1, …, e_d, v): (−4)^d iff v = 1…1
        for d in 1..=3usize {
            let mut units: Vec<CubeVertex> = (1..=d).map(CubeVertex::unit).collect();
            units.push(CubeVertex::ones(d));
            assert_eq!(degree_f(d, &units).unwrap(), (-4i64).pow(d as u32));
        }
    }

    #[test]
    fn degree_f_rejects_bad_arity() {
        assert!(matches!(
            degree_f(2, &cvs(&["10", "01"])).unwrap_err(),
            ChowError::DimensionMismatch(2, 3)
        ));
    }

    #[test]
    fn psi_examples() {
        let c00 = Cycle::vertex(Cube::new(2), cv("00"));
        let c11 = Cycle::vertex(Cube::new(2), cv("11"));
        assert_eq!(psi_cycle(&c00), c11);
        assert_eq!(psi_cycle(&psi_cycle(&c00)), c00);

        let f11 = FourierCycle::basis(2, cv("11"));
        assert_eq!(psi_fourier(&f11), f11);
        let f10 = FourierCycle::basis(2, cv("10"));
        assert_eq!(psi_fourier(&f10).coeff(cv("10")), q(-1));
    }

    #[test]
    fn sigma_examples() {
        let c10 = Cycle::vertex(Cube::new(2), cv("10"));
        assert_eq!(sigma_cycle(&[0, 1], &c10), c10);
        let c01 = Cycle::vertex(Cube::new(2), cv("01"));
        assert_eq!(sigma_cycle(&[1, 0], &c10), c01);

        // 3-cycle (123): coordinate 1 → 2, 2 → 3, 3 → 1
        let f100 = FourierCycle::basis(3, cv("100"));
        let f010 = FourierCycle::basis(3, cv("010"));
        assert_eq!(sigma_fourier(&[1, 2, 0], &f100), f010);
    }

    #[test]
    fn vector_order_matches_paper() {
        let order = ["000", "100", "010", "001", "110", "101", "011", "111"];
        let keys: Vec<(u32, u32)> = order.iter().map(|s| vector_key(3, cv(s))).collect();
        for w in keys.windows(2) {
            assert!(w[0] < w[1], "vector order violated");
        }
    }

    #[test]
    fn canonical_tuple_examples() {
        let t = canonical_tuple(3, &cvs(&["111", "100", "010", "001"]));
        assert_eq!(t.tuple(), cvs(&["100", "010", "001", "111"]).as_slice());

        // idempotence
        let again = canonical_tuple(3, t.tuple());
        assert_eq!(again, t);

        let t2 = canonical_tuple(3, &cvs(&["010", "100", "101", "011"]));
        assert_eq!(t2.tuple(), cvs(&["100", "010", "101", "011"]).as_slice());
    }

    #[test]
    fn orbit_size_small() {
        // (11,11,11) is fixed by everything
        assert_eq!(orbit_size(2, &cvs(&["11", "11", "11"])), 1);
        // {10,01,11}: 3! arrangements, coordinate swap stabilizes the set
        assert_eq!(orbit_size(2, &cvs(&["10", "01", "11"])), 6);
    }

    #[test]
    fn canonical_tuples_counts() {
        // d = 2: every multiset of size 3 over 4 vertices, filtered to
        // τ-minimal representatives
        let reps = canonical_tuples(2, 3);
        assert!(reps
            .iter()
            .all(|t| { canonical_tuple(2, t).tuple() == t.as_slice() }));
        // ascending order
        for w in reps.windows(2) {
            assert_eq!(cmp_tuples(2, &w[0], &w[1]), std::cmp::Ordering::Less);
        }
        // covers all 64 tuples through their orbits
        let covered: usize = reps.iter().map(|t| orbit_size(2, t)).sum();
        assert_eq!(covered, 64);
    }
}
