//! Couplings: connected 3-uniform hypergraphs over the `M` variables that
//! select which 3D marginals are observed.
//!
//! Variables are 0-based in the API and 1-based in every text format (JSON
//! files, partition strings, CSV), matching the usual mathematical notation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

pub type Triplet = [usize; 3];

/// Wholesale resampling budget for the random and balanced generators.
pub const MAX_RESAMPLES: u64 = 10_000;

/// A validated coupling: `M ≥ 4`, distinct strictly increasing triplets in
/// lexicographic order, every variable covered, hypergraph connected.
///
/// The canonical triplet order fixes the row-block order of every Jacobian.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coupling {
    m: usize,
    triplets: Vec<Triplet>,
}

impl Coupling {
    /// Canonicalizes (sorts each triplet and the list) and validates.
    pub fn new(m: usize, triplets: impl IntoIterator<Item = Triplet>) -> Result<Self> {
        if m < 4 {
            return Err(Error::invalid(format!("a coupling needs M >= 4 variables, got {m}")));
        }
        let mut ts = Vec::new();
        for mut t in triplets {
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] {
                return Err(Error::invalid(format!("triplet {:?} repeats a variable", one_based(&t))));
            }
            if t[2] >= m {
                return Err(Error::invalid(format!("triplet {:?} out of range for M={m}", one_based(&t))));
            }
            ts.push(t);
        }
        ts.sort_unstable();
        if ts.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate triplet in coupling"));
        }
        if ts.is_empty() {
            return Err(Error::invalid("coupling has no triplets"));
        }
        let degrees = degrees(m, &ts);
        if let Some(v) = degrees.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("variable {} appears in no triplet", v + 1)));
        }
        if !is_connected(m, &ts) {
            return Err(Error::invalid("coupling hypergraph is not connected"));
        }
        Ok(Self { m, triplets: ts })
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    pub fn num_triplets(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn is_full(&self) -> bool {
        self.triplets.len() == binomial(self.m, 3)
    }

    pub fn degrees(&self) -> Vec<usize> {
        degrees(self.m, &self.triplets)
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        IncidenceMatrix::new(self.m, &self.triplets)
    }

    pub fn stats(&self) -> CouplingStats {
        stats(self)
    }

    /// Stable content hash, used to identify couplings in scan output.
    pub fn content_hash(&self) -> u64 {
        seed::hash_words(
            std::iter::once(self.m as u64)
                .chain(self.triplets.iter().flat_map(|t| t.iter().map(|&v| v as u64))),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CouplingFile::from(self)).expect("coupling serializes")
    }

    /// Parses and re-validates a coupling file. Triplets must be 1-based and
    /// strictly ascending.
    pub fn from_json(s: &str) -> Result<Self> {
        let file: CouplingFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// On-disk form: `{"M": int, "triplets": [[j,k,l], ...]}` with 1-based,
/// ascending triplets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub triplets: Vec<Triplet>,
}

impl From<&Coupling> for CouplingFile {
    fn from(c: &Coupling) -> Self {
        Self {
            m: c.m,
            triplets: c.triplets.iter().map(one_based).collect(),
        }
    }
}

impl TryFrom<CouplingFile> for Coupling {
    type Error = Error;

    fn try_from(file: CouplingFile) -> Result<Self> {
        let mut ts = Vec::with_capacity(file.triplets.len());
        for t in &file.triplets {
            if t[0] == 0 || !(t[0] < t[1] && t[1] < t[2]) {
                return Err(Error::invalid(format!(
                    "triplet {t:?} must be 1-based and strictly ascending"
                )));
            }
            ts.push([t[0] - 1, t[1] - 1, t[2] - 1]);
        }
        Coupling::new(file.m, ts)
    }
}

impl Serialize for Coupling {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CouplingFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coupling {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = CouplingFile::deserialize(d)?;
        Coupling::try_from(file).map_err(serde::de::Error::custom)
    }
}

fn one_based(t: &Triplet) -> Triplet {
    [t[0] + 1, t[1] + 1, t[2] + 1]
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn degrees(m: usize, triplets: &[Triplet]) -> Vec<usize> {
    let mut d = vec![0; m];
    for t in triplets {
        for &v in t {
            d[v] += 1;
        }
    }
    d
}

/// Incidence matrix `V ∈ {0,1}^{T×M}`: row `t` has ones at the three
/// variables of triplet `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: Vec<Vec<u8>>,
}

impl IncidenceMatrix {
    fn new(m: usize, triplets: &[Triplet]) -> Self {
        let rows = triplets
            .iter()
            .map(|t| {
                let mut row = vec![0u8; m];
                for &v in t {
                    row[v] = 1;
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn get(&self, t: usize, m: usize) -> u8 {
        self.rows[t][m]
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let m = self.rows.first().map_or(0, Vec::len);
        (0..m).map(|j| self.rows.iter().map(|r| r[j] as usize).sum()).collect()
    }

    /// `VᵀV`.
    pub fn gram(&self) -> Vec<Vec<usize>> {
        let m = self.rows.first().map_or(0, Vec::len);
        let mut g = vec![vec![0usize; m]; m];
        for row in &self.rows {
            for a in 0..m {
                if row[a] == 0 {
                    continue;
                }
                for b in 0..m {
                    g[a][b] += (row[a] * row[b]) as usize;
                }
            }
        }
        g
    }

    /// Number of co-occurring variable pairs, `½(‖VᵀV‖₀ − M)`.
    pub fn pair_count(&self) -> usize {
        let g = self.gram();
        let nnz: usize = g.iter().flatten().filter(|&&x| x != 0).count();
        (nnz - g.len()) / 2
    }
}

/// Degree patterns that provably cap the recoverable rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectClass {
    None,
    /// A degree-1 variable whose triplet holds no other degree-1 variable.
    SingleDeg1,
    /// Two degree-1 variables sharing their unique triplet.
    DoubleDeg1Shared,
}

impl DefectClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectClass::None => "none",
            DefectClass::SingleDeg1 => "single_deg1",
            DefectClass::DoubleDeg1Shared => "double_deg1_shared",
        }
    }
}

impl fmt::Display for DefectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingStats {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "d")]
    pub degrees: Vec<usize>,
    #[serde(rename = "P")]
    pub pairs: usize,
    pub defect_class: DefectClass,
    pub connected: bool,
}

impl CouplingStats {
    pub fn degree_spread(&self) -> usize {
        let max = self.degrees.iter().max().copied().unwrap_or(0);
        let min = self.degrees.iter().min().copied().unwrap_or(0);
        max - min
    }
}

pub fn stats(c: &Coupling) -> CouplingStats {
    let v = c.incidence();
    let degrees = v.column_sums();
    let pairs = v.pair_count();
    CouplingStats {
        t: c.num_triplets(),
        defect_class: defect_class(c, &degrees),
        degrees,
        pairs,
        connected: is_connected(c.m, &c.triplets),
    }
}

fn defect_class(c: &Coupling, degrees: &[usize]) -> DefectClass {
    let mut single = false;
    for t in c.triplets() {
        let ones = t.iter().filter(|&&v| degrees[v] == 1).count();
        match ones {
            0 => {}
            1 => single = true,
            // Three degree-1 variables in one triplet would be a separate
            // component, which a valid coupling excludes.
            _ => return DefectClass::DoubleDeg1Shared,
        }
    }
    if single {
        DefectClass::SingleDeg1
    } else {
        DefectClass::None
    }
}

/// Whether the variables touched by `triplets` plus all `M` variables form a
/// single component under shared-triplet adjacency.
pub fn is_connected(m: usize, triplets: &[Triplet]) -> bool {
    if m == 0 {
        return true;
    }
    let mut uf = UnionFind::new(m);
    for t in triplets {
        uf.union(t[0], t[1]);
        uf.union(t[1], t[2]);
    }
    let root = uf.find(0);
    (1..m).all(|v| uf.find(v) == root)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// All `C(M,3)` triplets in lexicographic order.
pub fn all_triplets(m: usize) -> Vec<Triplet> {
    let mut out = Vec::with_capacity(binomial(m, 3));
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                out.push([a, b, c]);
            }
        }
    }
    out
}

pub fn make_full(m: usize) -> Result<Coupling> {
    if m < 4 {
        return Err(Error::invalid(format!("full coupling needs M >= 4, got {m}")));
    }
    Coupling::new(m, all_triplets(m))
}

fn check_triplet_count(m: usize, t: usize) -> Result<()> {
    if m < 4 {
        return Err(Error::invalid(format!("coupling needs M >= 4, got {m}")));
    }
    let lo = m.div_ceil(3);
    let hi = binomial(m, 3);
    if t < lo || t > hi {
        return Err(Error::invalid(format!("T={t} outside [{lo}, {hi}] for M={m}")));
    }
    Ok(())
}

/// `T` distinct triplets drawn uniformly without replacement, resampled
/// wholesale until the result covers every variable and is connected.
pub fn make_random(m: usize, t: usize, seed: u64) -> Result<Coupling> {
    check_triplet_count(m, t)?;
    let pool = all_triplets(m);
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = seed::rng(seed::mix(seed, attempt));
        let picked: Vec<Triplet> = index::sample(&mut rng, pool.len(), t)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        if degrees(m, &picked).iter().all(|&d| d > 0) && is_connected(m, &picked) {
            return Coupling::new(m, picked);
        }
    }
    Err(Error::ResourceExhausted(format!(
        "no valid random coupling with M={m}, T={t} after {MAX_RESAMPLES} draws"
    )))
}

/// Coupling whose degree sequence is as flat as possible.
///
/// Triplets are added greedily: each step takes an unused triplet minimizing
/// the resulting maximum degree, then the current degree sum of its members,
/// with ties broken uniformly at random. A disconnected result is repaired by
/// degree-preserving swaps between components.
pub fn make_balanced(m: usize, t: usize, seed: u64) -> Result<Coupling> {
    check_triplet_count(m, t)?;
    let pool = all_triplets(m);
    let target = usize::from(!(3 * t).is_multiple_of(m));
    let mut best: Option<(usize, Vec<Triplet>)> = None;
    let mut valid = 0u64;
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = seed::rng(seed::mix(seed ^ 0xBA1A_4CED, attempt));
        let mut picked = greedy_balanced(m, t, &pool, &mut rng);
        let deg = degrees(m, &picked);
        if deg.contains(&0) || !repair_connectivity(m, &mut picked, &mut rng) {
            continue;
        }
        let spread = deg.iter().max().unwrap() - deg.iter().min().unwrap();
        if spread <= target {
            return Coupling::new(m, picked);
        }
        if best.as_ref().is_none_or(|(s, _)| spread < *s) {
            best = Some((spread, picked));
        }
        valid += 1;
        if valid >= BALANCED_SPREAD_ATTEMPTS {
            break;
        }
    }
    match best {
        Some((_, picked)) => Coupling::new(m, picked),
        None => Err(Error::ResourceExhausted(format!(
            "no valid balanced coupling with M={m}, T={t} after {MAX_RESAMPLES} attempts"
        ))),
    }
}

/// Valid greedy draws tried before settling for the flattest one found when
/// a degree spread of at most one is not reached.
const BALANCED_SPREAD_ATTEMPTS: u64 = 200;

fn greedy_balanced(m: usize, t: usize, pool: &[Triplet], rng: &mut impl Rng) -> Vec<Triplet> {
    let mut deg = vec![0usize; m];
    let mut used = vec![false; pool.len()];
    let mut picked = Vec::with_capacity(t);
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..t {
        let cur_max = deg.iter().copied().max().unwrap_or(0);
        let mut best_key = (usize::MAX, usize::MAX);
        best.clear();
        for (k, tr) in pool.iter().enumerate() {
            if used[k] {
                continue;
            }
            let new_max = tr.iter().map(|&v| deg[v] + 1).max().unwrap().max(cur_max);
            let key = (new_max, tr.iter().map(|&v| deg[v]).sum());
            if key < best_key {
                best_key = key;
                best.clear();
            }
            if key == best_key {
                best.push(k);
            }
        }
        let k = best[rng.random_range(0..best.len())];
        used[k] = true;
        for &v in &pool[k] {
            deg[v] += 1;
        }
        picked.push(pool[k]);
    }
    picked
}

/// Merges components by swapping one member between a triplet of each:
/// `{a,b,c}, {d,e,f} → {a,b,f}, {d,e,c}`. Degrees are unchanged and both
/// components become linked. Returns false if no admissible swap exists.
fn repair_connectivity(m: usize, picked: &mut [Triplet], rng: &mut impl Rng) -> bool {
    loop {
        if is_connected(m, picked) {
            return true;
        }
        let mut uf = UnionFind::new(m);
        for tr in picked.iter() {
            uf.union(tr[0], tr[1]);
            uf.union(tr[1], tr[2]);
        }
        let comp: Vec<usize> = picked.iter().map(|tr| uf.find(tr[0])).collect();
        let root0 = comp[rng.random_range(0..comp.len())];
        let present: BTreeSet<Triplet> = picked.iter().copied().collect();

        let mut options = Vec::new();
        for (x, tx) in picked.iter().enumerate() {
            if comp[x] != root0 {
                continue;
            }
            for (y, ty) in picked.iter().enumerate() {
                if comp[y] == root0 {
                    continue;
                }
                for i in 0..3 {
                    for j in 0..3 {
                        let mut nx = *tx;
                        let mut ny = *ty;
                        std::mem::swap(&mut nx[i], &mut ny[j]);
                        nx.sort_unstable();
                        ny.sort_unstable();
                        if !present.contains(&nx) && !present.contains(&ny) {
                            options.push((x, y, nx, ny));
                        }
                    }
                }
            }
        }
        if options.is_empty() {
            return false;
        }
        let (x, y, nx, ny) = options[rng.random_range(0..options.len())];
        picked[x] = nx;
        picked[y] = ny;
    }
}

/// Three disjoint variable sets whose union is `{0..M}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    sets: [Vec<usize>; 3],
}

impl Partition {
    pub fn new(sets: [Vec<usize>; 3]) -> Result<Self> {
        let mut sets = sets;
        for s in sets.iter_mut() {
            if s.is_empty() {
                return Err(Error::invalid("partition sets must be non-empty"));
            }
            s.sort_unstable();
        }
        let m: usize = sets.iter().map(Vec::len).sum();
        let mut seen = vec![false; m];
        for &v in sets.iter().flatten() {
            if v >= m || seen[v] {
                return Err(Error::invalid(format!(
                    "partition sets must be disjoint and cover 1..={m}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { sets })
    }

    pub fn num_vars(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn sets(&self) -> &[Vec<usize>; 3] {
        &self.sets
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.sets[0].len(), self.sets[1].len(), self.sets[2].len()]
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.num_vars() > 9;
        let groups: Vec<String> = self
            .sets
            .iter()
            .map(|s| {
                let items: Vec<String> = s.iter().map(|v| (v + 1).to_string()).collect();
                items.join(if wide { "," } else { "" })
            })
            .collect();
        f.write_str(&groups.join("/"))
    }
}

/// Parses `"1/23/45"` (single-digit variables) or `"1/2,3/4,5"`; 1-based.
impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let groups: Vec<&str> = s.split('/').collect();
        if groups.len() != 3 {
            return Err(Error::invalid(format!("partition '{s}' must have three '/'-separated groups")));
        }
        let comma = s.contains(',');
        let mut sets: [Vec<usize>; 3] = Default::default();
        for (set, g) in sets.iter_mut().zip(groups) {
            let items: Vec<String> = if comma {
                g.split(',').map(|x| x.trim().to_string()).collect()
            } else {
                g.trim().chars().map(|c| c.to_string()).collect()
            };
            for it in items {
                let v: usize = it
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad variable '{it}' in partition '{s}'")))?;
                if v == 0 {
                    return Err(Error::invalid("partition variables are 1-based"));
                }
                set.push(v - 1);
            }
        }
        Partition::new(sets)
    }
}

/// `𝒯 = 𝓜₁ × 𝓜₂ × 𝓜₃`.
pub fn make_cartesian(p: &Partition) -> Result<Coupling> {
    let [a, b, c] = p.sets();
    let mut ts = Vec::with_capacity(a.len() * b.len() * c.len());
    for &j in a {
        for &k in b {
            for &l in c {
                ts.push([j, k, l]);
            }
        }
    }
    Coupling::new(p.num_vars(), ts)
}

/// Every triplet over variables `2..=M` plus `{1, M−1, M}`: variable 1 has
/// degree 1 and every other variable has degree > 1.
pub fn make_single_deg1(m: usize) -> Result<Coupling> {
    if m < 4 {
        return Err(Error::invalid(format!("single degree-1 coupling needs M >= 4, got {m}")));
    }
    let rest = all_triplets(m - 1).into_iter().map(|t| t.map(|v| v + 1));
    Coupling::new(m, rest.chain([[0, m - 2, m - 1]]))
}

/// Every triplet over variables `3..=M` plus `{1, 2, M}`: variables 1 and 2
/// have degree 1 and share their triplet.
pub fn make_double_deg1(m: usize) -> Result<Coupling> {
    if m < 5 {
        return Err(Error::invalid(format!("double degree-1 coupling needs M >= 5, got {m}")));
    }
    let rest = all_triplets(m - 2).into_iter().map(|t| t.map(|v| v + 2));
    Coupling::new(m, rest.chain([[0, 1, m - 1]]))
}

/// The most balanced three-way split, variables assigned in ascending order:
/// sizes `(q,q,q)`, `(q+1,q,q)` or `(q+1,q+1,q)` for `M = 3q + ε`.
pub fn even_partition(m: usize) -> Result<Partition> {
    if m < 4 {
        return Err(Error::invalid(format!("even partition needs M >= 4, got {m}")));
    }
    let q = m / 3;
    let sizes = match m % 3 {
        0 => [q, q, q],
        1 => [q + 1, q, q],
        _ => [q + 1, q + 1, q],
    };
    let mut next = 0;
    let sets = sizes.map(|n| {
        let s: Vec<usize> = (next..next + n).collect();
        next += n;
        s
    });
    Partition::new(sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1(a: usize, b: usize, c: usize) -> Triplet {
        [a - 1, b - 1, c - 1]
    }

    #[test]
    fn full_couplings() {
        let c = make_full(4).unwrap();
        assert_eq!(c.triplets(), &[t1(1, 2, 3), t1(1, 2, 4), t1(1, 3, 4), t1(2, 3, 4)]);
        assert_eq!(make_full(5).unwrap().num_triplets(), 10);
        let s = make_full(8).unwrap().stats();
        assert_eq!((s.t, s.pairs), (56, 28));
        assert!(s.degrees.iter().all(|&d| d == 21));
        assert_eq!(s.defect_class, DefectClass::None);
        assert!(matches!(make_full(3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn extremal_defective_couplings() {
        let c = make_single_deg1(5).unwrap();
        assert_eq!(c.num_triplets(), 5);
        assert!(c.triplets().contains(&t1(1, 4, 5)));
        assert_eq!(c.stats().defect_class, DefectClass::SingleDeg1);
        assert_eq!(c.degrees()[0], 1);
        let c = make_double_deg1(6).unwrap();
        assert_eq!(c.num_triplets(), 5);
        assert!(c.triplets().contains(&t1(1, 2, 6)));
        assert_eq!(c.stats().defect_class, DefectClass::DoubleDeg1Shared);
        assert!(make_double_deg1(4).is_err());
    }

    #[test]
    fn full_pair_count_is_binomial() {
        for m in 4..=12 {
            assert_eq!(make_full(m).unwrap().stats().pairs, binomial(m, 2));
        }
    }

    #[test]
    fn random_coupling_small_and_deterministic() {
        assert_eq!(make_random(4, 4, 99).unwrap(), make_full(4).unwrap());
        assert_eq!(make_random(8, 10, 1).unwrap(), make_random(8, 10, 1).unwrap());
        assert!(make_random(8, 2, 1).is_err());
        assert!(make_random(8, 57, 1).is_err());
    }

    #[test]
    fn balanced_examples() {
        let s = make_balanced(8, 8, 0).unwrap().stats();
        assert!(s.degrees.iter().all(|&d| d == 3), "{:?}", s.degrees);
        let s = make_balanced(6, 4, 0).unwrap().stats();
        assert_eq!(s.degrees, vec![2; 6]);
        let c = make_balanced(4, 4, 0).unwrap();
        assert_eq!(c, make_full(4).unwrap());
        assert_eq!(c.degrees(), vec![3; 4]);
    }

    #[test]
    fn cartesian_examples() {
        let p: Partition = "1/23/45".parse().unwrap();
        let c = make_cartesian(&p).unwrap();
        assert_eq!(c.triplets(), &[t1(1, 2, 4), t1(1, 2, 5), t1(1, 3, 4), t1(1, 3, 5)]);

        let m = 7;
        let p = Partition::new([vec![0], vec![1], (2..m).collect()]).unwrap();
        let c = make_cartesian(&p).unwrap();
        assert_eq!(c.num_triplets(), m - 2);
        assert!(c.triplets().iter().all(|t| t[0] == 0 && t[1] == 1));

        let c = make_cartesian(&even_partition(9).unwrap()).unwrap();
        let s = c.stats();
        assert_eq!((s.t, s.pairs), (27, 27));
        assert!(s.degrees.iter().all(|&d| d == 9));
    }

    #[test]
    fn partition_errors() {
        assert!("1/12/45".parse::<Partition>().is_err());
        assert!("1/23/5".parse::<Partition>().is_err());
        assert!("1/23".parse::<Partition>().is_err());
        assert!(Partition::new([vec![], vec![0], vec![1, 2]]).is_err());
        let p: Partition = "1,2/3,4/5,6,7,8,9,10".parse().unwrap();
        assert_eq!(p.sizes(), [2, 2, 6]);
        assert_eq!(p.to_string(), "1,2/3,4/5,6,7,8,9,10");
        assert_eq!("1/23/45".parse::<Partition>().unwrap().to_string(), "1/23/45");
    }

    #[test]
    fn even_partition_sizes() {
        assert_eq!(even_partition(9).unwrap().sets(), &[vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]]);
        assert_eq!(even_partition(10).unwrap().sizes(), [4, 3, 3]);
        assert_eq!(even_partition(11).unwrap().sizes(), [4, 4, 3]);
        assert_eq!(even_partition(4).unwrap().sizes(), [2, 1, 1]);
    }

    #[test]
    fn defect_classes() {
        // All triplets of {2..7} plus {1,6,7}.
        let mut ts: Vec<Triplet> = all_triplets(6).into_iter().map(|t| t.map(|v| v + 1)).collect();
        ts.push(t1(1, 6, 7));
        assert_eq!(Coupling::new(7, ts).unwrap().stats().defect_class, DefectClass::SingleDeg1);

        // All triplets of {3..6} plus {1,2,6}.
        let mut ts: Vec<Triplet> = all_triplets(4).into_iter().map(|t| t.map(|v| v + 2)).collect();
        ts.push(t1(1, 2, 6));
        assert_eq!(Coupling::new(6, ts).unwrap().stats().defect_class, DefectClass::DoubleDeg1Shared);
    }

    #[test]
    fn connectivity() {
        assert!(!is_connected(6, &[t1(1, 2, 3), t1(4, 5, 6)]));
        assert!(is_connected(6, &[t1(1, 2, 3), t1(3, 4, 5), t1(4, 5, 6)]));
        for m in 4..9 {
            assert!(is_connected(m, make_full(m).unwrap().triplets()));
        }
        assert!(Coupling::new(6, [t1(1, 2, 3), t1(4, 5, 6)]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = make_cartesian(&"1/23/45".parse().unwrap()).unwrap();
        let js = c.to_json();
        assert_eq!(js, r#"{"M":5,"triplets":[[1,2,4],[1,2,5],[1,3,4],[1,3,5]]}"#);
        assert_eq!(Coupling::from_json(&js).unwrap(), c);
        assert!(Coupling::from_json(r#"{"M":5,"triplets":[[2,1,4],[1,3,5]]}"#).is_err());
        assert!(Coupling::from_json(r#"{"M":5,"triplets":[[0,1,4]]}"#).is_err());
        assert!(Coupling::from_json(r#"{"M":6,"triplets":[[1,2,3],[4,5,6]]}"#).is_err());
    }

    #[test]
    fn incidence_structure() {
        let c = make_random(8, 10, 3).unwrap();
        let v = c.incidence();
        assert!(v.rows().iter().all(|r| r.iter().map(|&x| x as usize).sum::<usize>() == 3));
        assert_eq!(v.column_sums(), c.degrees());
    }
}
