//! Set partitions, the statistic `α(P, v)`, and the exhaustive verification
//! of the vanishing condition: whenever some partition `P` of the coordinate
//! set satisfies `Σ_i α(P, v_i) < d + |P|`, the degree of `F_{v_0} ⋯ F_{v_d}`
//! must vanish.
//!
//! The sweep runs over orbit-canonical tuples only. This is sound because the
//! degree is invariant under the `S_{d+1} × S_d` action and `α` is
//! equivariant under simultaneous coordinate permutation of the partition and
//! the vectors, so the hypothesis "some partition triggers" is constant on
//! orbits.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::Rng;
use thiserror::Error;

use crate::chow::DegreeMemo;
use crate::fourier::{canonical_tuple, canonical_tuples, degree_f_with, TupleOrbitKey};
use crate::simplicial::CubeVertex;

/// Sweep cap; beyond this the orbit enumeration itself becomes the problem.
pub const MAX_VANISHING_DIM: usize = 6;

#[derive(Debug, Error)]
pub enum VanishingError {
    #[error("dimension {0} is outside 1..={MAX_VANISHING_DIM}")]
    DimensionOutOfRange(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("cache file: {0}")]
    CacheFormat(String),
    #[error("cache header declares d={0}, expected d={1}")]
    CacheDimension(usize, usize),
    #[error("cache spot-check failed for [{0}]: stored {1}, recomputed {2}")]
    SpotCheckFailed(String, i64, i64),
    #[error("cache disagreement for [{0}]: {1} vs {2}")]
    CacheDisagreement(String, i64, i64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Chow(#[from] crate::chow::ChowError),
}

/// A set partition of `{1, …, d}` in canonical form: elements sorted within
/// blocks, blocks sorted by smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    d: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(d: usize, blocks: Vec<Vec<usize>>) -> Result<Self, VanishingError> {
        let mut seen = vec![false; d + 1];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(VanishingError::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &x in block.iter() {
                if x == 0 || x > d {
                    return Err(VanishingError::InvalidPartition(format!(
                        "element {x} outside 1..={d}"
                    )));
                }
                if seen[x] {
                    return Err(VanishingError::InvalidPartition(format!(
                        "element {x} appears twice"
                    )));
                }
                seen[x] = true;
            }
        }
        if seen[1..=d].iter().any(|s| !s) {
            return Err(VanishingError::InvalidPartition(format!(
                "blocks do not cover 1..={d}"
            )));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { d, blocks })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Image under a coordinate permutation: element `i + 1` moves to
    /// `perm[i] + 1`, matching the vertex action.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&x| perm[x - 1] + 1).collect())
            .collect();
        Self::new(self.d, blocks).expect("permutation preserves validity")
    }

    pub fn render(&self) -> String {
        let inner = self
            .blocks
            .iter()
            .map(|b| {
                format!(
                    "{{{}}}",
                    b.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect::<Vec<_>>()
            .join(",");
        format!("{{{inner}}}")
    }
}

/// All `Bell(d)` partitions of `{1, …, d}`, enumerated through restricted
/// growth strings in lexicographic order.
pub fn partitions(d: usize) -> Result<Vec<Partition>, VanishingError> {
    if d == 0 || d > MAX_VANISHING_DIM {
        return Err(VanishingError::DimensionOutOfRange(d));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; d];
    loop {
        let block_count = rgs.iter().max().copied().unwrap_or(0) + 1;
        let mut blocks = vec![Vec::new(); block_count];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        out.push(Partition::new(d, blocks).expect("rgs yields a partition"));

        // next restricted growth string: rgs[i] may rise to max(prefix) + 1
        let mut i = d;
        loop {
            if i <= 1 {
                return Ok(out);
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().max().copied().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for x in &mut rgs[i + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

/// `α(P, v)`: the number of blocks containing at least one coordinate where
/// `v` is 1.
pub fn alpha(p: &Partition, v: CubeVertex) -> usize {
    p.blocks
        .iter()
        .filter(|b| b.iter().any(|&j| v.coord(j) == 1))
        .count()
}

/// Persistent map from canonical tuples to their integer degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeCache {
    d: usize,
    entries: BTreeMap<TupleOrbitKey, i64>,
}

impl DegreeCache {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            entries: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &TupleOrbitKey) -> Option<i64> {
        self.entries.get(key).copied()
    }

    /// Inserts, rejecting any disagreement with an existing entry.
    pub fn insert(&mut self, key: TupleOrbitKey, value: i64) -> Result<(), VanishingError> {
        if let Some(&old) = self.entries.get(&key) {
            if old != value {
                return Err(VanishingError::CacheDisagreement(key.render(), old, value));
            }
            return Ok(());
        }
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&TupleOrbitKey, &i64)> {
        self.entries.iter()
    }

    /// Writes the versioned line-oriented format: a header
    /// `chowcache v1 d=<d>`, then one `<bitstring tuple>\t<degree>` record
    /// per canonical tuple, sorted. The write goes through a sibling temp
    /// file and a rename, so a killed run never leaves a truncated cache.
    pub fn store(&self, path: &Path) -> Result<(), VanishingError> {
        let mut out = format!("chowcache v1 d={}\n", self.d);
        for (key, value) in &self.entries {
            out.push_str(&key.render());
            out.push('\t');
            out.push_str(&value.to_string());
            out.push('\n');
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        std::fs::write(&tmp, out)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads the cache, validating the dimension and spot-checking up to
    /// `spot_checks` random entries against recomputation.
    pub fn load(
        path: &Path,
        expected_d: usize,
        spot_checks: usize,
    ) -> Result<Self, VanishingError> {
        let text = std::fs::read_to_string(path)?;
        let mut cache = Self::new(expected_d);
        let mut lines = text.lines();
        let Some(header) = lines.next().filter(|l| !l.trim().is_empty()) else {
            return Ok(cache); // empty file: empty cache
        };
        let d = header
            .strip_prefix("chowcache v1 d=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| {
                VanishingError::CacheFormat(format!("unrecognized header {header:?}"))
            })?;
        if d != expected_d {
            return Err(VanishingError::CacheDimension(d, expected_d));
        }
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (tuple_part, value_part) = line.split_once('\t').ok_or_else(|| {
                VanishingError::CacheFormat(format!("line {}: missing tab", lineno + 2))
            })?;
            let mut tuple = Vec::new();
            for token in tuple_part.split_whitespace() {
                let (v, width) = CubeVertex::parse_bits(token)
                    .map_err(|e| VanishingError::CacheFormat(e.to_string()))?;
                if width != d {
                    return Err(VanishingError::CacheFormat(format!(
                        "line {}: vector {token:?} has width {width}, expected {d}",
                        lineno + 2
                    )));
                }
                tuple.push(v);
            }
            if tuple.len() != d + 1 {
                return Err(VanishingError::CacheFormat(format!(
                    "line {}: {} vectors, expected {}",
                    lineno + 2,
                    tuple.len(),
                    d + 1
                )));
            }
            let value: i64 = value_part.trim().parse().map_err(|_| {
                VanishingError::CacheFormat(format!("line {}: bad degree", lineno + 2))
            })?;
            let key = canonical_tuple(d, &tuple);
            if key.tuple() != tuple.as_slice() {
                return Err(VanishingError::CacheFormat(format!(
                    "line {}: tuple is not orbit-canonical",
                    lineno + 2
                )));
            }
            cache.insert(key, value)?;
        }

        if !cache.is_empty() && spot_checks > 0 {
            let keys: Vec<TupleOrbitKey> = cache.entries.keys().cloned().collect();
            let mut rng = rand::thread_rng();
            let mut memo = DegreeMemo::new(expected_d);
            for _ in 0..spot_checks.min(keys.len()) {
                let key = &keys[rng.gen_range(0..keys.len())];
                let stored = cache.entries[key];
                let recomputed = degree_f_with(expected_d, key.tuple(), &mut memo)?;
                if stored != recomputed {
                    return Err(VanishingError::SpotCheckFailed(
                        key.render(),
                        stored,
                        recomputed,
                    ));
                }
            }
        }
        Ok(cache)
    }
}

/// Persists the growing cache during a sweep.
pub type CheckpointFn = Box<dyn Fn(&DegreeCache)>;

/// Parallelism hints for [`check_vanishing`].
pub struct SweepOptions {
    /// Worker threads; 0 and 1 both mean single-threaded.
    pub jobs: usize,
    /// Called with (tuples done, tuples total) as the sweep progresses.
    pub progress: Option<Box<dyn Fn(usize, usize) + Send + Sync>>,
    /// Called with the growing cache every `checkpoint_every` merged degrees,
    /// so long runs can persist partial results and resume after a kill.
    pub checkpoint: Option<CheckpointFn>,
    pub checkpoint_every: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            progress: None,
            checkpoint: None,
            checkpoint_every: 500,
        }
    }
}

/// Outcome of a vanishing sweep. The condition is verified exactly when
/// `counterexamples` is empty.
#[derive(Debug)]
pub struct VanishingReport {
    pub d: usize,
    pub partitions_checked: usize,
    pub tuples_checked: usize,
    pub counterexamples: Vec<(Partition, Vec<CubeVertex>, i64)>,
    pub elapsed: Duration,
}

impl VanishingReport {
    pub fn verified(&self) -> bool {
        self.counterexamples.is_empty()
    }

    /// Human-readable block followed by one machine-greppable record line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "vanishing condition for d={}: {}\n",
            self.d,
            if self.verified() {
                "VERIFIED"
            } else {
                "VIOLATED"
            }
        ));
        out.push_str(&format!(
            "  partitions checked: {}\n",
            self.partitions_checked
        ));
        out.push_str(&format!(
            "  orbit-canonical tuples checked: {}\n",
            self.tuples_checked
        ));
        out.push_str(&format!("  elapsed: {:.3}s\n", self.elapsed.as_secs_f64()));
        for (p, tuple, deg) in &self.counterexamples {
            let d = self.d;
            let rendered: Vec<String> = tuple.iter().map(|v| v.render(d)).collect();
            out.push_str(&format!(
                "  counterexample: P={} tuple=[{}] degree={}\n",
                p.render(),
                rendered.join(" "),
                deg
            ));
        }
        out.push_str(&format!(
            "result d={} partitions={} tuples={} counterexamples={} verified={}\n",
            self.d,
            self.partitions_checked,
            self.tuples_checked,
            self.counterexamples.len(),
            self.verified()
        ));
        out
    }
}

/// Whether some partition triggers the vanishing hypothesis for the tuple;
/// returns the first triggering partition.
fn triggering_partition<'a>(
    parts: &'a [Partition],
    tuple: &[CubeVertex],
    d: usize,
) -> Option<&'a Partition> {
    parts.iter().find(|p| {
        let total: usize = tuple.iter().map(|&v| alpha(p, v)).sum();
        total < d + p.block_count()
    })
}

/// Exhaustively verifies the vanishing condition for dimension `d`, sweeping
/// every orbit-canonical tuple whose hypothesis is triggered by some
/// partition; degrees are read through `cache`, computing and storing on
/// miss.
pub fn check_vanishing(
    d: usize,
    cache: &mut DegreeCache,
    opts: &SweepOptions,
) -> Result<VanishingReport, VanishingError> {
    if d == 0 || d > MAX_VANISHING_DIM {
        return Err(VanishingError::DimensionOutOfRange(d));
    }
    let start = Instant::now();
    let parts = partitions(d)?;
    let tuples = canonical_tuples(d, d + 1);

    // degrees are expensive, partitions are cheap: compute each degree at
    // most once, only for tuples some partition triggers
    let triggered: Vec<&Vec<CubeVertex>> = tuples
        .iter()
        .filter(|t| triggering_partition(&parts, t, d).is_some())
        .collect();

    let missing: Vec<&Vec<CubeVertex>> = triggered
        .iter()
        .copied()
        .filter(|t| cache.get(&canonical_tuple(d, t)).is_none())
        .collect();

    let jobs = opts.jobs.max(1).min(missing.len().max(1));
    let total = missing.len();
    let mut merged = 0usize;
    let mut merge = |cache: &mut DegreeCache, idx: usize, deg: i64| -> Result<(), VanishingError> {
        cache.insert(canonical_tuple(d, missing[idx]), deg)?;
        merged += 1;
        if let Some(cb) = &opts.progress {
            cb(merged, total);
        }
        if let Some(cb) = &opts.checkpoint {
            if merged.is_multiple_of(opts.checkpoint_every.max(1)) || merged == total {
                cb(cache);
            }
        }
        Ok(())
    };

    if jobs <= 1 {
        let mut memo = DegreeMemo::new(d);
        for (i, t) in missing.iter().enumerate() {
            let deg = degree_f_with(d, t, &mut memo)?;
            merge(cache, i, deg)?;
        }
    } else {
        // workers keep private memos and stream results to the merging
        // thread, which asserts agreement on insert and checkpoints
        let cursor = AtomicUsize::new(0);
        std::thread::scope(|scope| -> Result<(), VanishingError> {
            let (tx, rx) = std::sync::mpsc::channel::<(usize, Result<i64, crate::ChowError>)>();
            let mut handles = Vec::new();
            for _ in 0..jobs {
                let missing = &missing;
                let cursor = &cursor;
                let tx = tx.clone();
                handles.push(scope.spawn(move || {
                    let mut memo = DegreeMemo::new(d);
                    loop {
                        let i = cursor.fetch_add(1, Ordering::Relaxed);
                        if i >= missing.len() {
                            return;
                        }
                        let result = degree_f_with(d, missing[i], &mut memo);
                        let failed = result.is_err();
                        if tx.send((i, result)).is_err() || failed {
                            return;
                        }
                    }
                }));
            }
            drop(tx);
            let mut first_error: Option<VanishingError> = None;
            while let Ok((i, result)) = rx.recv() {
                match result {
                    Ok(deg) => merge(cache, i, deg)?,
                    Err(e) => {
                        first_error.get_or_insert(e.into());
                    }
                }
            }
            for h in handles {
                h.join().expect("sweep worker panicked");
            }
            match first_error {
                Some(e) => Err(e),
                None => Ok(()),
            }
        })?;
    }

    let mut counterexamples = Vec::new();
    for t in &triggered {
        let deg = cache
            .get(&canonical_tuple(d, t))
            .expect("degree just computed");
        if deg != 0 {
            let p = triggering_partition(&parts, t, d).expect("triggered");
            counterexamples.push((p.clone(), (*t).clone(), deg));
        }
    }

    Ok(VanishingReport {
        d,
        partitions_checked: parts.len(),
        tuples_checked: tuples.len(),
        counterexamples,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(s: &str) -> CubeVertex {
        CubeVertex::parse_bits(s).unwrap().0
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(partitions(1).unwrap().len(), 1);
        assert_eq!(partitions(2).unwrap().len(), 2);
        assert_eq!(partitions(3).unwrap().len(), 5);
        assert_eq!(partitions(4).unwrap().len(), 15);
        assert_eq!(partitions(5).unwrap().len(), 52);
        assert!(partitions(0).is_err());
        assert!(partitions(MAX_VANISHING_DIM + 1).is_err());
    }

    #[test]
    fn partition_canonical_form_and_validation() {
        let p = Partition::new(3, vec![vec![3], vec![2, 1]]).unwrap();
        assert_eq!(p.blocks(), &[vec![1, 2], vec![3]]);
        assert!(Partition::new(3, vec![vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![1, 2], vec![2, 3]]).is_err());
        assert!(Partition::new(3, vec![vec![1, 2, 3], vec![]]).is_err());
        assert!(Partition::new(2, vec![vec![1, 2, 3]]).is_err());
    }

    #[test]
    fn alpha_examples() {
        let p = Partition::new(2, vec![vec![1], vec![2]]).unwrap();
        assert_eq!(alpha(&p, cv("11")), 2);

        let p = Partition::new(2, vec![vec![1, 2]]).unwrap();
        assert_eq!(alpha(&p, cv("10")), 1);

        let p = Partition::new(3, vec![vec![1, 2], vec![3]]).unwrap();
        assert_eq!(alpha(&p, cv("101")), 2);
    }

    #[test]
    fn alpha_extremes_and_equivariance() {
        for parts in partitions(3).unwrap() {
            assert_eq!(alpha(&parts, cv("000")), 0);
            assert_eq!(alpha(&parts, cv("111")), parts.block_count());
        }
        // equivariance under simultaneous permutation
        use itertools::Itertools;
        for p in partitions(3).unwrap() {
            for perm in (0..3usize).permutations(3) {
                for bits in 0..8u32 {
                    let v = CubeVertex::new(bits, 3).unwrap();
                    let vp = crate::fourier::permute_vertex(v, &perm);
                    assert_eq!(alpha(&p, v), alpha(&p.permuted(&perm), vp));
                }
            }
        }
    }

    #[test]
    fn vanishing_small_dimensions() {
        for d in 1..=3usize {
            let mut cache = DegreeCache::new(d);
            let report = check_vanishing(d, &mut cache, &SweepOptions::default()).unwrap();
            assert!(report.verified(), "d={d} must verify");
            assert_eq!(report.partitions_checked, partitions(d).unwrap().len());
        }
    }

    #[test]
    fn parallel_sweep_matches_serial() {
        let mut serial = DegreeCache::new(3);
        let r1 = check_vanishing(3, &mut serial, &SweepOptions::default()).unwrap();
        let mut parallel = DegreeCache::new(3);
        let opts = SweepOptions {
            jobs: 4,
            ..SweepOptions::default()
        };
        let r2 = check_vanishing(3, &mut parallel, &opts).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(r1.tuples_checked, r2.tuples_checked);
    }

    #[test]
    fn cache_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");

        let mut cache = DegreeCache::new(2);
        check_vanishing(2, &mut cache, &SweepOptions::default()).unwrap();
        assert!(!cache.is_empty());
        cache.store(&path).unwrap();
        let loaded = DegreeCache::load(&path, 2, 3).unwrap();
        assert_eq!(loaded, cache);
        // bit-exact round trip
        let bytes1 = std::fs::read(&path).unwrap();
        loaded.store(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes1);

        // wrong dimension
        assert!(matches!(
            DegreeCache::load(&path, 3, 0).unwrap_err(),
            VanishingError::CacheDimension(2, 3)
        ));

        // empty file is an empty cache
        let empty = dir.path().join("empty.txt");
        std::fs::write(&empty, "").unwrap();
        assert!(DegreeCache::load(&empty, 2, 3).unwrap().is_empty());

        // corruption is caught by the spot check
        let text = std::fs::read_to_string(&path).unwrap();
        let corrupted: String = text
            .lines()
            .map(|l| {
                if let Some((t, _)) = l.split_once('\t') {
                    format!("{t}\t99\n")
                } else {
                    format!("{l}\n")
                }
            })
            .collect();
        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, corrupted).unwrap();
        assert!(matches!(
            DegreeCache::load(&bad, 2, 5).unwrap_err(),
            VanishingError::SpotCheckFailed(..)
        ));
    }

    #[test]
    fn checkpoint_fires_and_resume_skips_cached_work() {
        use std::cell::RefCell;
        use std::rc::Rc;
        let calls = Rc::new(RefCell::new(0usize));
        let seen = calls.clone();
        let mut cache = DegreeCache::new(3);
        let opts = SweepOptions {
            jobs: 1,
            checkpoint: Some(Box::new(move |_c| {
                *seen.borrow_mut() += 1;
            })),
            checkpoint_every: 10,
            ..SweepOptions::default()
        };
        let r = check_vanishing(3, &mut cache, &opts).unwrap();
        assert!(r.verified());
        assert!(*calls.borrow() >= 1);

        // a second sweep over the warm cache recomputes nothing and agrees
        let snapshot = cache.clone();
        let r2 = check_vanishing(3, &mut cache, &SweepOptions::default()).unwrap();
        assert!(r2.verified());
        assert_eq!(cache, snapshot);
    }

    #[test]
    fn trivial_partition_case_reduces_to_f0() {
        // {{1,…,d}}: hypothesis means some v_i = 0…0, and F_0 kills products
        let d = 2;
        let p = Partition::new(d, vec![vec![1, 2]]).unwrap();
        for bits in 0..4u32 {
            for bits2 in 0..4u32 {
                let tuple = vec![
                    CubeVertex::zero(),
                    CubeVertex::new(bits, d).unwrap(),
                    CubeVertex::new(bits2, d).unwrap(),
                ];
                let total: usize = tuple.iter().map(|&v| alpha(&p, v)).sum();
                assert!(total < d + p.block_count());
                assert_eq!(crate::fourier::degree_f(d, &tuple).unwrap(), 0);
            }
        }
    }
}
