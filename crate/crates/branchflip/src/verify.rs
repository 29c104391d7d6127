//! Claim runner over a corpus of instances.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::{enumerate_branchings, Branching};
use crate::builders::{self, random_branching};
use crate::complex::SurfaceClass;
use crate::transit::{
    self, bounded_bflip_census, complete_transit, connect_by_inversions, inversion_graph, strategy_b_connect, TransitError, TransitReport,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub orientable: bool,
    pub genus_or_crosscaps: u32,
    pub n: usize,
}

impl SurfaceSpec {
    pub fn class(&self) -> SurfaceClass {
        if self.orientable {
            SurfaceClass::orientable(self.genus_or_crosscaps, self.n)
        } else {
            SurfaceClass::nonorientable(self.genus_or_crosscaps, self.n)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    /// Sampled pairs per pairwise claim.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Runs the census claim with this node budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census_budget: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_pairs() -> usize {
    4
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub entries: Vec<CorpusEntry>,
}

impl CorpusSpec {
    /// The built-in desk corpus.
    pub fn desk() -> Self {
        let mut entries: Vec<CorpusEntry> = builders::NAMED_BUILDS
            .iter()
            .map(|n| CorpusEntry { build: Some(n.to_string()), surface: None, pairs: 4, census_budget: None, seed: 0 })
            .collect();
        if let Some(p) = entries.iter_mut().find(|e| e.build.as_deref() == Some("projective2")) {
            p.census_budget = Some(100_000);
        }
        let surfaces = [(true, 2, 1), (false, 3, 1), (false, 4, 1), (true, 1, 3), (false, 1, 4)];
        for (orientable, genus_or_crosscaps, n) in surfaces {
            entries.push(CorpusEntry {
                build: None,
                surface: Some(SurfaceSpec { orientable, genus_or_crosscaps, n }),
                pairs: 4,
                census_budget: None,
                seed: 0,
            });
        }
        CorpusSpec { entries }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// Finite check.
    Verified,
    /// Budget-bounded.
    Evidence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub claim: String,
    pub instance: String,
    pub kind: RowKind,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<TransitReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn verified_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.kind == RowKind::Verified && !r.passed).count()
    }
}

fn instance(entry: &CorpusEntry) -> Result<(String, Branching), String> {
    if let Some(name) = &entry.build {
        return builders::named(name).map(|(_, b)| (name.clone(), b)).map_err(|e| e.to_string());
    }
    let s = entry.surface.as_ref().ok_or("entry needs `build` or `surface`")?.class();
    let d = builders::distinguished(s).map_err(|e| e.to_string())?;
    if d.cap_connection.is_some() {
        let b = builders::trapped_free_variant(&d).map_err(|e| e.to_string())?;
        return Ok((format!("{}_star", builders::slug(&s)), b));
    }
    Ok((builders::slug(&s), d.reference))
}

fn sample_pairs(b: &Branching, count: usize, seed: u64) -> Vec<(Branching, Branching)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = b.triangulation();
    (0..count).map(|_| (random_branching(t, &mut rng), random_branching(t, &mut rng))).collect()
}

fn pairwise<F>(claim: &str, name: &str, pairs: &[(Branching, Branching)], run: F) -> Row
where
    F: Fn(&Branching, &Branching) -> Result<TransitReport, TransitError>,
{
    let mut certificates = Vec::new();
    let mut failures = Vec::new();
    for (i, (x, y)) in pairs.iter().enumerate() {
        match run(x, y) {
            Ok(r) if r.verify(x, y) => certificates.push(r),
            Ok(_) => failures.push(format!("pair {i}: replay mismatch")),
            Err(e) => failures.push(format!("pair {i}: {e}")),
        }
    }
    Row {
        claim: claim.into(),
        instance: name.into(),
        kind: RowKind::Verified,
        passed: failures.is_empty(),
        detail: if failures.is_empty() { format!("{} pairs connected", pairs.len()) } else { failures.join("; ") },
        certificates,
    }
}

/// Largest branching count for which the full inversion graph is built.
const GRAPH_LIMIT: usize = 20_000;

fn rows_for(entry: &CorpusEntry) -> Vec<Row> {
    let (name, b) = match instance(entry) {
        Ok(x) => x,
        Err(e) => {
            return vec![Row {
                claim: "build".into(),
                instance: format!("{entry:?}"),
                kind: RowKind::Verified,
                passed: false,
                detail: e,
                certificates: Vec::new(),
            }]
        }
    };
    let t = b.triangulation();
    let class = t.classify();
    let mut rows = Vec::new();
    let pairs = sample_pairs(&b, entry.pairs, entry.seed);

    rows.push(pairwise("complete transit", &name, &pairs, complete_transit));

    if !t.has_trapped() {
        let sym = transit::needs_symmetrization(&class);
        let all = enumerate_branchings(t);
        if all.len() <= GRAPH_LIMIT {
            let g = inversion_graph(t);
            let comps = transit::components(&g, sym);
            rows.push(Row {
                claim: if sym { "inversive up to total inversion" } else { "inversive" }.into(),
                instance: name.clone(),
                kind: RowKind::Verified,
                passed: comps.len() == 1,
                detail: format!("{} branchings, {} components", all.len(), comps.len()),
                certificates: Vec::new(),
            });
        } else {
            rows.push(pairwise("inversive", &name, &pairs, |x, y| connect_by_inversions(x, y, sym)));
        }
        if class.orientable {
            rows.push(pairwise("paired delta reduction", &name, &pairs, strategy_b_connect));
        }
    }

    if let Some(budget) = entry.census_budget {
        rows.push(census_row(&name, &b, budget));
    }
    rows
}

/// Seeds whose disoriented set is exactly the inner edges stay apart, seeds
/// related through total inversion of the partner meet.
fn census_row(name: &str, b: &Branching, budget: usize) -> Row {
    let t = b.triangulation();
    // edges at a vertex of valence two
    let inner: Vec<_> = t
        .edges()
        .filter(|&e| {
            let (x, y) = t.edge_endpoints(e);
            t.corners_at(x).len() == 2 || t.corners_at(y).len() == 2
        })
        .collect();
    let all = enumerate_branchings(t);
    let mut apart = 0;
    let mut joined = 0;
    let mut notes = Vec::new();
    for x in &all {
        for y in &all {
            let d: Vec<_> = x.delta(y).expect("same owner").iter().collect();
            if d.len() != 2 || !d.iter().all(|e| inner.contains(e)) || x.orientation() > y.orientation() {
                continue;
            }
            let split = bounded_bflip_census(&[x.clone(), y.clone()], budget, t.triangle_count());
            let merged = bounded_bflip_census(&[x.clone(), y.total_inversion()], budget, t.triangle_count());
            let components = |r: Result<transit::CensusSummary, TransitError>| match r {
                Ok(s) => Some(s.components.len()),
                Err(TransitError::BudgetExhausted(s)) => Some(s.components.len()),
                Err(_) => None,
            };
            if components(split) == Some(2) {
                apart += 1;
            } else {
                notes.push("pair with inner disoriented set connected".to_string());
            }
            if components(merged) == Some(1) {
                joined += 1;
            } else {
                notes.push("pair through total inversion not connected".to_string());
            }
        }
    }
    Row {
        claim: "two ideal classes".into(),
        instance: name.into(),
        kind: RowKind::Evidence,
        passed: notes.is_empty() && apart > 0,
        detail: format!("{apart} pairs apart within {budget} states, {joined} pairs joined; {}", notes.join("; ")),
        certificates: Vec::new(),
    }
}

pub fn verify_theorems(spec: &CorpusSpec) -> Report {
    let rows = spec.entries.par_iter().map(rows_for).collect::<Vec<_>>().concat();
    Report { rows }
}

/// Picks `count` distinct items deterministically.
pub fn sample<T: Clone>(items: &[T], count: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = items.to_vec();
    v.shuffle(&mut rng);
    v.truncate(count);
    v
}
