//! Closed-form rank bounds and the merged per-configuration report.
//!
//! Necessary bounds cap the recoverable rank from above; sufficient
//! identifiability bounds guarantee uniqueness below them. Since
//! identifiability implies recoverability, every sufficient value in a report
//! must sit at or below every necessary value.

use nalgebra::DMatrix;
use num::integer::Roots;
use serde::{Deserialize, Serialize};

use crate::cartesian;
use crate::coupling::{even_partition, make_cartesian, Coupling, Partition};
use crate::recoverability::{self, defect_bound, necessary_bound, DEFAULT_REL_TOL};
use crate::{Error, Result};

/// Exhaustive Kruskal rank is limited to this many columns unless capped.
pub const KRUSKAL_MAX_COLS: usize = 12;

/// Largest `k` such that every `k` columns of `a` are linearly independent,
/// searching no further than `cap`.
pub fn kruskal_rank(a: &DMatrix<f64>, cap: Option<usize>) -> Result<usize> {
    let n = a.ncols();
    if cap.is_none() && n > KRUSKAL_MAX_COLS {
        return Err(Error::ResourceExhausted(format!(
            "exhaustive Kruskal rank limited to {KRUSKAL_MAX_COLS} columns without a cap, got {n}"
        )));
    }
    let limit = cap.unwrap_or(n).min(n).min(a.nrows());
    for k in 1..=limit {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let sub = a.select_columns(&idx);
            if recoverability::numerical_rank(&sub, DEFAULT_REL_TOL)?.rank < k {
                return Ok(k - 1);
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    Ok(limit)
}

/// Advances `idx` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(pos) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
        return false;
    };
    idx[pos] += 1;
    for p in pos + 1..k {
        idx[p] = idx[p - 1] + 1;
    }
    true
}

/// `2R + (N−1) ≤ Σ κₙ` for Kruskal ranks `κ` of an order-`N` CPD.
pub fn kruskal_condition(kappas: &[usize], r: usize) -> Result<bool> {
    if kappas.len() < 3 {
        return Err(Error::invalid("Kruskal condition needs order >= 3"));
    }
    Ok(2 * r + kappas.len() - 1 <= kappas.iter().sum())
}

/// Kruskal condition with generic `κₙ = min(Iₙ, R)`.
pub fn generic_kruskal_condition(sizes: &[usize], r: usize) -> Result<bool> {
    let kappas: Vec<usize> = sizes.iter().map(|&s| s.min(r)).collect();
    kruskal_condition(&kappas, r)
}

/// Order-3 generic Kruskal condition.
pub fn kruskal_bound_order3(sizes: [usize; 3], r: usize) -> bool {
    generic_kruskal_condition(&sizes, r).expect("order 3")
}

/// Largest `R` meeting the generic Kruskal condition, `None` if no `R ≥ 1`
/// does.
pub fn generic_kruskal_max_rank(sizes: &[usize]) -> Result<Option<usize>> {
    // Beyond R = Σ Iₙ the left side outgrows the right.
    let top = sizes.iter().sum::<usize>();
    let mut best = None;
    for r in 1..=top {
        if generic_kruskal_condition(sizes, r)? {
            best = Some(r);
        }
    }
    Ok(best)
}

/// `⌊I₁I₂I₃/(I₁+I₂+I₃−2)⌋ − I₁` with sizes sorted so `I₁` is largest;
/// `None` unless the smallest size exceeds 2.
pub fn bocci_bound(a: usize, b: usize, c: usize) -> Option<i64> {
    let mut s = [a, b, c];
    s.sort_unstable_by(|x, y| y.cmp(x));
    if s[2] <= 2 {
        return None;
    }
    let [i1, i2, i3] = s.map(|x| x as i64);
    Some(i1 * i2 * i3 / (i1 + i2 + i3 - 2) - i1)
}

/// `I(M−2)` when `M ≤ I`, else `(⌊√(MI−1)/I⌋·I − 1)²`.
pub fn kargas_t1_bound(m: usize, i: usize) -> usize {
    if m <= i {
        i * (m - 2)
    } else {
        let f = (m * i - 1).sqrt() / i * i - 1;
        f * f
    }
}

/// `4^(α−1)` for the largest `α` with `2^α ≤ ⌊M/3⌋·I`.
pub fn kargas_t2_bound(m: usize, i: usize) -> Option<usize> {
    let x = m / 3 * i;
    if x < 2 {
        return None;
    }
    let alpha = x.ilog2();
    Some(4usize.pow(alpha - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Necessary,
    SufficientIdentifiability,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub kind: BoundKind,
    pub value: Option<usize>,
    /// The formula came out at or below zero and was clamped.
    pub vacuous: bool,
    pub reason: Option<String>,
    pub source: String,
}

impl BoundEntry {
    fn new(name: &str, kind: BoundKind, value: usize, source: &str) -> Self {
        Self {
            name: name.into(),
            kind,
            value: Some(value),
            vacuous: false,
            reason: None,
            source: source.into(),
        }
    }

    fn absent(name: &str, kind: BoundKind, reason: impl Into<String>, source: &str) -> Self {
        Self {
            name: name.into(),
            kind,
            value: None,
            vacuous: false,
            reason: Some(reason.into()),
            source: source.into(),
        }
    }

    fn clamped(name: &str, kind: BoundKind, raw: i64, source: &str) -> Self {
        let mut e = Self::new(name, kind, raw.max(0) as usize, source);
        if raw <= 0 {
            e.vacuous = true;
            e.reason = Some(format!("formula gives {raw}"));
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub coupling: String,
    pub entries: Vec<BoundEntry>,
    /// Sufficient values exceeding a necessary value; empty when consistent.
    pub violations: Vec<String>,
}

/// Entry names in CSV column order.
pub const CSV_COLUMNS: [&str; 10] = [
    "necessary",
    "defect",
    "kargas_t1",
    "kargas_t2",
    "even_partition",
    "cartesian_even",
    "kruskal_even",
    "cartesian",
    "kruskal_reduced",
    "empirical_rmax",
];

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Option<usize> {
        self.get(name).and_then(|e| e.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["M", "I", "T", "coupling"];
        cols.extend(CSV_COLUMNS);
        cols.join(",")
    }

    /// Absent entries are empty cells.
    pub fn csv_row(&self) -> String {
        let mut cells = vec![
            self.m.to_string(),
            self.i.to_string(),
            self.t.to_string(),
            if self.coupling.contains(',') {
                format!("\"{}\"", self.coupling)
            } else {
                self.coupling.clone()
            },
        ];
        cells.extend(CSV_COLUMNS.iter().map(|n| self.value(n).map(|v| v.to_string()).unwrap_or_default()));
        cells.join(",")
    }

    fn check_ordering(&mut self) {
        let necessary: Vec<&BoundEntry> = self
            .entries
            .iter()
            .filter(|e| e.kind == BoundKind::Necessary && e.value.is_some())
            .collect();
        let mut violations = Vec::new();
        for s in self.entries.iter().filter(|e| e.kind == BoundKind::SufficientIdentifiability) {
            let Some(sv) = s.value else { continue };
            for n in &necessary {
                let nv = n.value.expect("filtered");
                if sv > nv {
                    violations.push(format!("{} = {sv} exceeds {} = {nv}", s.name, n.name));
                }
            }
        }
        self.violations = violations;
    }
}

fn push_reduced(entries: &mut Vec<BoundEntry>, p: &Partition, i: usize, cart: &str, kru: &str) -> Result<()> {
    let sizes = cartesian::reduced_sizes(p, i);
    let kind = BoundKind::SufficientIdentifiability;
    entries.push(match cartesian::cartesian_ident_bound(p, i) {
        Some(v) => BoundEntry::clamped(cart, kind, v, "generic order-3 uniqueness at reduced sizes"),
        None => BoundEntry::absent(
            cart,
            kind,
            format!("reduced sizes {sizes:?} include one <= 2"),
            "generic order-3 uniqueness at reduced sizes",
        ),
    });
    entries.push(match generic_kruskal_max_rank(&sizes)? {
        Some(v) => BoundEntry::new(kru, kind, v, "generic Kruskal condition at reduced sizes"),
        None => BoundEntry::absent(kru, kind, "no rank satisfies the condition", "generic Kruskal condition at reduced sizes"),
    });
    Ok(())
}

/// Every bound that applies to `coupling` with `I` bins. Pass `partition`
/// when the coupling is Cartesian; it must generate exactly `coupling`.
pub fn report(
    coupling: &Coupling,
    i: usize,
    partition: Option<&Partition>,
    empirical_rmax: Option<usize>,
) -> Result<BoundReport> {
    if i < 2 {
        return Err(Error::invalid("bounds need I >= 2"));
    }
    let m = coupling.num_vars();
    if let Some(p) = partition {
        if make_cartesian(p)? != *coupling {
            return Err(Error::invalid(format!("coupling is not the Cartesian product of partition {p}")));
        }
    }
    let full = coupling.is_full();
    let descriptor = match (full, partition) {
        (true, _) => "full".to_string(),
        (false, Some(p)) => format!("cartesian {p}"),
        (false, None) => format!("custom {:016x}", coupling.content_hash()),
    };

    use BoundKind::*;
    let mut entries = vec![BoundEntry::new(
        "necessary",
        Necessary,
        necessary_bound(coupling, i),
        "parameter count against observed degrees of freedom",
    )];
    if let Some(d) = defect_bound(&coupling.stats(), i) {
        entries.push(BoundEntry::new("defect", Necessary, d, "degree-1 variables"));
    }
    if full {
        entries.push(BoundEntry::new(
            "kargas_t1",
            SufficientIdentifiability,
            kargas_t1_bound(m, i),
            "Kargas et al., theorem 1",
        ));
        entries.push(match kargas_t2_bound(m, i) {
            Some(v) => BoundEntry::new("kargas_t2", SufficientIdentifiability, v, "Kargas et al., theorem 2"),
            None => BoundEntry::absent("kargas_t2", SufficientIdentifiability, "floor(M/3)*I < 2", "Kargas et al., theorem 2"),
        });
        let x = (m / 3 * (i - 1)) as i64;
        entries.push(BoundEntry::clamped(
            "even_partition",
            SufficientIdentifiability,
            x * x / 3 - x,
            "Cartesian sub-coupling of the even partition, closed form",
        ));
        let even = even_partition(m)?;
        push_reduced(&mut entries, &even, i, "cartesian_even", "kruskal_even")?;
    }
    if let Some(p) = partition {
        push_reduced(&mut entries, p, i, "cartesian", "kruskal_reduced")?;
    }
    if let Some(r) = empirical_rmax {
        entries.push(BoundEntry::new("empirical_rmax", Empirical, r, "Jacobian rank search"));
    }
    let mut rep = BoundReport {
        m,
        i,
        t: coupling.num_triplets(),
        coupling: descriptor,
        entries,
        violations: Vec::new(),
    };
    rep.check_ordering();
    Ok(rep)
}
