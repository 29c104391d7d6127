//! Connectivity algorithms: inversion graphs, trapped-edge removal, the
//! paired delta-reduction connector, complete transit through stellar
//! refinement, and a bounded flip census.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::track_13;
use crate::branching::{acyclic, enumerate_branchings, Branching, BranchingError};
use crate::complex::{EdgeId, Slot, SurfaceClass, Triangulation};
use crate::moves::{self, to_hex, FlipChoice, Move, MoveError, State};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TransitError {
    #[error("triangulation has {0} trapped edges")]
    TrappedEdgesPresent(usize),
    #[error("target not reachable; {reachable} branchings reachable")]
    NotConnected { reachable: usize },
    #[error("branchings live on different triangulations")]
    DifferentOwner,
    #[error("surface is not orientable")]
    NotOrientable,
    #[error("iteration guard exceeded: {reason}\n{dump}")]
    IterationGuardExceeded { reason: String, dump: String },
    #[error("trapped edge removal did not reduce the loop count at edge {0}")]
    TrappedRemovalStalled(EdgeId),
    #[error("census budget exhausted after {} states ({} in frontier)", .0.explored, .0.frontier)]
    BudgetExhausted(Box<CensusSummary>),
    #[error("log does not replay to the claimed endpoint")]
    ReplayMismatch,
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error(transparent)]
    Branching(#[from] BranchingError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "move")]
    pub mv: Move,
    pub lemma_tag: String,
    pub delta_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitReport {
    pub success: bool,
    /// The log ends at the total inversion of the target.
    #[serde(default)]
    pub symmetrized: bool,
    pub steps: Vec<Step>,
    pub endpoint_key: String,
    #[serde(skip)]
    pub endpoint: Option<Branching>,
}

impl TransitReport {
    pub fn moves(&self) -> Vec<Move> {
        self.steps.iter().map(|s| s.mv).collect()
    }

    /// Replays the log from `source` and compares with `target` (or its
    /// total inversion) by canonical key with fixed labels.
    pub fn verify(&self, source: &Branching, target: &Branching) -> bool {
        let Ok(end) = moves::replay(&State::Branched(source.clone()), &self.moves()) else {
            return false;
        };
        let goal = if self.symmetrized { target.total_inversion() } else { target.clone() };
        let key = end.key();
        key == to_hex(&goal.key(true)) && key == self.endpoint_key
    }
}

fn key_hex(b: &Branching) -> String {
    to_hex(&b.key(true))
}

fn finish(source: &Branching, target: &Branching, steps: Vec<Step>, end: Branching, symmetrized: bool) -> Result<TransitReport, TransitError> {
    let report = TransitReport { success: true, symmetrized, steps, endpoint_key: key_hex(&end), endpoint: Some(end) };
    if report.verify(source, target) {
        Ok(report)
    } else {
        Err(TransitError::ReplayMismatch)
    }
}

fn same_owner(b: &Branching, c: &Branching) -> Result<(), TransitError> {
    if b.same_owner(c) {
        Ok(())
    } else {
        Err(TransitError::DifferentOwner)
    }
}

/// Non-orientable surfaces with zero or odd Euler characteristic, where
/// inversions connect branchings only up to total inversion.
pub fn needs_symmetrization(s: &SurfaceClass) -> bool {
    !s.orientable && (s.euler == 0 || s.euler % 2 != 0)
}

/// Inversion graph over all branchings of a triangulation.
#[derive(Clone, Debug)]
pub struct InversionGraph {
    pub nodes: Vec<Branching>,
    pub keys: Vec<String>,
    /// `(i, j, edge)` with `i < j`.
    pub edges: Vec<(usize, usize, EdgeId)>,
}

fn invertible_edges(b: &Branching) -> Vec<EdgeId> {
    let t = b.triangulation();
    b.ambiguous_edges().into_iter().filter(|&e| !t.is_trapped(e)).collect()
}

pub fn inversion_graph(t: &Arc<Triangulation>) -> InversionGraph {
    let nodes = enumerate_branchings(t);
    let index: HashMap<&[bool], usize> = nodes.iter().enumerate().map(|(i, b)| (b.orientation(), i)).collect();
    let mut edges = Vec::new();
    for (i, b) in nodes.iter().enumerate() {
        for e in invertible_edges(b) {
            let c = b.invert_edge(e).expect("ambiguous edge");
            let j = index[c.orientation()];
            if i < j {
                edges.push((i, j, e));
            }
        }
    }
    let keys = nodes.iter().map(key_hex).collect();
    InversionGraph { nodes, keys, edges }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    fn classes(&mut self) -> Vec<Vec<usize>> {
        let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.0.len() {
            let r = self.find(i);
            m.entry(r).or_default().push(i);
        }
        m.into_values().collect()
    }
}

/// Connected components; symmetrized mode identifies each branching with
/// its total inversion.
pub fn components(g: &InversionGraph, symmetrized: bool) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(g.nodes.len());
    for &(i, j, _) in &g.edges {
        uf.union(i, j);
    }
    if symmetrized {
        let index: HashMap<&[bool], usize> = g.nodes.iter().enumerate().map(|(i, b)| (b.orientation(), i)).collect();
        for (i, b) in g.nodes.iter().enumerate() {
            let inv: Vec<bool> = b.orientation().iter().map(|f| !f).collect();
            uf.union(i, index[inv.as_slice()]);
        }
    }
    uf.classes()
}

/// Shortest inversion path from `b` to `target`, if any, plus the number of
/// reachable branchings.
fn inversion_bfs(b: &Branching, target: &[bool]) -> (Option<Vec<EdgeId>>, usize) {
    let mut parent: HashMap<Vec<bool>, Option<(Vec<bool>, EdgeId)>> = HashMap::new();
    parent.insert(b.orientation().to_vec(), None);
    let mut queue = VecDeque::from([b.clone()]);
    while let Some(cur) = queue.pop_front() {
        if cur.orientation() == target {
            let mut path = Vec::new();
            let mut at = target.to_vec();
            while let Some(Some((prev, e))) = parent.get(&at) {
                path.push(*e);
                at = prev.clone();
            }
            path.reverse();
            return (Some(path), parent.len());
        }
        for e in invertible_edges(&cur) {
            let next = cur.invert_edge(e).expect("ambiguous edge");
            if !parent.contains_key(next.orientation()) {
                parent.insert(next.orientation().to_vec(), Some((cur.orientation().to_vec(), e)));
                queue.push_back(next);
            }
        }
    }
    (None, parent.len())
}

/// Connects by inversions of untrapped ambiguous edges, retrying against
/// the total inversion of the target when `allow_symmetrized` is set.
pub fn connect_by_inversions(b: &Branching, target: &Branching, allow_symmetrized: bool) -> Result<TransitReport, TransitError> {
    same_owner(b, target)?;
    let trapped = b.triangulation().trapped_edges().len();
    if trapped > 0 {
        return Err(TransitError::TrappedEdgesPresent(trapped));
    }
    let mut attempts = vec![(target.clone(), false)];
    if allow_symmetrized {
        attempts.push((target.total_inversion(), true));
    }
    let mut reachable = 0;
    for (goal, symmetrized) in attempts {
        let (path, seen) = inversion_bfs(b, goal.orientation());
        reachable = seen;
        let Some(path) = path else { continue };
        let mut cur = b.clone();
        let mut steps = Vec::new();
        for e in path {
            cur = cur.invert_edge(e)?;
            let delta = cur.delta(&goal)?.len();
            steps.push(Step { mv: Move::Invert { edge: e }, lemma_tag: "ambiguous inversion".into(), delta_size: delta });
        }
        return finish(b, target, steps, cur, symmetrized);
    }
    Err(TransitError::NotConnected { reachable })
}

/// Edge whose flip detaches the loop of the least trapped edge.
fn loop_attachment(t: &Triangulation) -> Option<(EdgeId, EdgeId)> {
    let e = *t.trapped_edges().first()?;
    let [a, b] = t.edge_slots(e);
    let k = 3 - a.side - b.side;
    Some((e, t.edge_of(Slot::new(a.tri, k))))
}

fn first_choice(b: &Branching, e: EdgeId) -> Result<FlipChoice, TransitError> {
    FlipChoice::BOTH
        .into_iter()
        .find(|&c| moves::flip(b, e, c).is_ok())
        .ok_or(TransitError::Move(MoveError::InvalidChoice))
}

/// Flips the edge attaching each dual loop until no trapped edge is left.
pub fn remove_trapped(b: &Branching) -> Result<TransitReport, TransitError> {
    let mut cur = b.clone();
    let mut steps = Vec::new();
    while let Some((loop_edge, e)) = loop_attachment(cur.triangulation()) {
        let before = cur.triangulation().trapped_edges().len();
        if cur.triangulation().is_trapped(e) {
            return Err(TransitError::TrappedRemovalStalled(loop_edge));
        }
        let choice = first_choice(&cur, e)?;
        let out = moves::flip(&cur, e, choice)?;
        let after = out.branching.triangulation().trapped_edges().len();
        if after >= before {
            return Err(TransitError::TrappedRemovalStalled(e));
        }
        cur = out.branching;
        steps.push(Step { mv: Move::Flip { edge: e, choice }, lemma_tag: "trapped removal".into(), delta_size: after });
    }
    let report = TransitReport { success: true, symmetrized: false, endpoint_key: key_hex(&cur), steps, endpoint: Some(cur) };
    Ok(report)
}

/// Refines every triangle with an inward-pointing 1->3 move, inverts the
/// disoriented edges, and undoes the refinement.
pub fn complete_transit(b: &Branching, target: &Branching) -> Result<TransitReport, TransitError> {
    same_owner(b, target)?;
    let delta = b.delta(target)?;
    if delta.is_empty() {
        return finish(b, target, Vec::new(), b.clone(), false);
    }
    let f = b.triangulation().triangle_count();
    let mut state = State::Branched(b.clone());
    let mut steps = Vec::new();
    let mut undo = Vec::new();
    for t in 0..f {
        let m = Move::Stellar13 { triangle: t, choice: [true; 3] };
        let (next, inv) = moves::apply(&state, &m)?;
        state = next;
        undo.push(inv);
        steps.push(Step { mv: m, lemma_tag: "inward refinement".into(), delta_size: delta.len() });
    }
    let refined = state.branching().expect("branched").clone();
    debug_assert_eq!(refined.triangulation().vertex_count(), b.triangulation().vertex_count() + f);
    let mut left = delta.len();
    let mut cur = refined;
    for e in delta.iter() {
        let s = b.triangulation().edge_slots(e)[0];
        let ne = cur.triangulation().edge_of(track_13(s, s.tri, f + 2 * s.tri));
        if !cur.is_ambiguous(ne) || cur.triangulation().is_trapped(ne) {
            return Err(TransitError::Branching(BranchingError::NotAmbiguous(ne)));
        }
        cur = cur.invert_edge(ne)?;
        left -= 1;
        steps.push(Step { mv: Move::Invert { edge: ne }, lemma_tag: "ambiguous inversion".into(), delta_size: left });
    }
    let mut state = State::Branched(cur);
    for m in undo.into_iter().rev() {
        state = moves::apply(&state, &m)?.0;
        steps.push(Step { mv: m, lemma_tag: "refinement removal".into(), delta_size: 0 });
    }
    let end = state.branching().expect("branched").clone();
    finish(b, target, steps, end, false)
}

/// One recorded move on either side of a paired run.
struct SideMove {
    mv: Move,
    edge_map: Option<Vec<Option<EdgeId>>>,
    new_edge: Option<EdgeId>,
}

/// Two branchings on identical triangulation arrays, moved in lockstep.
#[derive(Clone)]
struct Pair {
    b: Branching,
    c: Branching,
}

impl Pair {
    fn delta(&self) -> usize {
        self.b.delta(&self.c).expect("same arrays").len()
    }

    fn disoriented(&self) -> Vec<EdgeId> {
        self.b.delta(&self.c).expect("same arrays").iter().collect()
    }
}

/// A paired move: what happens on each side.
#[derive(Clone)]
enum PairedMove {
    /// Same edge flipped in both with the given enhancements.
    Flip { edge: EdgeId, choices: [FlipChoice; 2] },
    /// Invert on one side (0 = source, 1 = target).
    InvertOne { edge: EdgeId, side: usize },
    InvertBoth { edge: EdgeId },
}

fn ambiguous_in_triangle(b: &Branching, s: Slot) -> bool {
    let mut d = b.triangle_dirs(s.tri);
    d[s.side as usize] = !d[s.side as usize];
    acyclic(d)
}

struct StrategyB {
    pair: Pair,
    source_log: Vec<(SideMove, String, usize)>,
    target_log: Vec<(SideMove, String, usize)>,
}

impl StrategyB {
    fn apply(&mut self, m: &PairedMove, tag: &str) -> Result<(), TransitError> {
        let next = paired_result(&self.pair, m)?.expect("move was checked");
        match *m {
            PairedMove::Flip { edge, choices } => {
                let oa = moves::flip(&self.pair.b, edge, choices[0])?;
                let ob = moves::flip(&self.pair.c, edge, choices[1])?;
                let d = next.delta();
                self.source_log.push((
                    SideMove { mv: Move::Flip { edge, choice: choices[0] }, edge_map: Some(oa.edge_map), new_edge: Some(oa.new_edge) },
                    tag.into(),
                    d,
                ));
                self.target_log.push((
                    SideMove { mv: Move::Flip { edge, choice: choices[1] }, edge_map: Some(ob.edge_map), new_edge: Some(ob.new_edge) },
                    tag.into(),
                    d,
                ));
            }
            PairedMove::InvertOne { edge, side } => {
                let entry = (SideMove { mv: Move::Invert { edge }, edge_map: None, new_edge: None }, tag.to_string(), next.delta());
                if side == 0 {
                    self.source_log.push(entry);
                } else {
                    self.target_log.push(entry);
                }
            }
            PairedMove::InvertBoth { edge } => {
                let d = next.delta();
                for log in [&mut self.source_log, &mut self.target_log] {
                    log.push((SideMove { mv: Move::Invert { edge }, edge_map: None, new_edge: None }, tag.to_string(), d));
                }
            }
        }
        self.pair = next;
        Ok(())
    }
}

/// The pair after `m`, or `None` when `m` is illegal.
fn paired_result(p: &Pair, m: &PairedMove) -> Result<Option<Pair>, TransitError> {
    Ok(match *m {
        PairedMove::Flip { edge, choices } => {
            let a = moves::flip(&p.b, edge, choices[0]);
            let b = moves::flip(&p.c, edge, choices[1]);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let c = b.branching.rehome(Arc::clone(a.branching.triangulation()))?;
                    Some(Pair { b: a.branching, c })
                }
                (Err(MoveError::InvalidChoice), _) | (_, Err(MoveError::InvalidChoice)) => None,
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            }
        }
        PairedMove::InvertOne { edge, side } => {
            let (x, y) = if side == 0 { (&p.b, &p.c) } else { (&p.c, &p.b) };
            if !x.is_ambiguous(edge) || x.triangulation().is_trapped(edge) {
                return Ok(None);
            }
            let x = x.invert_edge(edge)?;
            let y = y.clone();
            Some(if side == 0 { Pair { b: x, c: y } } else { Pair { b: y, c: x } })
        }
        PairedMove::InvertBoth { edge } => {
            let ok = |x: &Branching| x.is_ambiguous(edge) && !x.triangulation().is_trapped(edge);
            if !ok(&p.b) || !ok(&p.c) {
                return Ok(None);
            }
            Some(Pair { b: p.b.invert_edge(edge)?, c: p.c.invert_edge(edge)? })
        }
    })
}

fn flip_pairs() -> [[FlipChoice; 2]; 4] {
    let [x, y] = FlipChoice::BOTH;
    [[x, x], [x, y], [y, x], [y, y]]
}

/// Inversion of a disoriented edge that is ambiguous on one side.
fn ambiguous_inversion(p: &Pair) -> Option<PairedMove> {
    for e in p.disoriented() {
        for side in 0..2 {
            let x = if side == 0 { &p.b } else { &p.c };
            if x.is_ambiguous(e) && !x.triangulation().is_trapped(e) {
                return Some(PairedMove::InvertOne { edge: e, side });
            }
        }
    }
    None
}

/// Which of the two delta-reduction cases a disoriented edge falls in.
fn flip_case(p: &Pair, e: EdgeId) -> u8 {
    let slots = p.b.triangulation().edge_slots(e);
    let case_one = slots.iter().any(|&s| !ambiguous_in_triangle(&p.b, s) && !ambiguous_in_triangle(&p.c, s));
    if case_one {
        1
    } else {
        2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Disoriented {
    /// Ambiguous on at least one side; inverting it reduces the set.
    Ambiguous,
    OneGood,
    OneBad,
    TwoGood,
    TwoBad,
}

/// Case analysis of a disoriented edge `e` of two branchings on the same
/// trapped-free triangulation.
pub fn classify_disoriented(b: &Branching, c: &Branching, e: EdgeId) -> Result<Disoriented, TransitError> {
    same_owner(b, c)?;
    let p = Pair { b: b.clone(), c: c.rehome(Arc::clone(b.triangulation()))? };
    if !p.disoriented().contains(&e) {
        return Err(TransitError::Branching(BranchingError::EdgeOutOfRange(e)));
    }
    if b.is_ambiguous(e) || c.is_ambiguous(e) {
        return Ok(Disoriented::Ambiguous);
    }
    let t = b.triangulation();
    let slots = t.edge_slots(e);
    let firm = slots.iter().position(|&s| !ambiguous_in_triangle(b, s) && !ambiguous_in_triangle(c, s));
    if let Some(j) = firm {
        let other = slots[1 - j];
        let delta = p.disoriented();
        let k = (1..3).filter(|d| delta.contains(&t.edge_of(Slot::new(other.tri, (other.side + d) % 3)))).count();
        return Ok(if k == 2 && ambiguous_in_triangle(b, other) { Disoriented::OneBad } else { Disoriented::OneGood });
    }
    let d0 = p.delta();
    for choices in flip_pairs() {
        if let Some(next) = paired_result(&p, &PairedMove::Flip { edge: e, choices })? {
            if next.delta() < d0 && !next.b.triangulation().has_trapped() {
                return Ok(Disoriented::TwoGood);
            }
        }
    }
    Ok(Disoriented::TwoBad)
}

/// Best delta-reducing paired flip at the least disoriented edge admitting one.
fn good_flip(p: &Pair) -> Result<Option<(PairedMove, String)>, TransitError> {
    let d0 = p.delta();
    for e in p.disoriented() {
        let mut best: Option<(usize, bool, PairedMove)> = None;
        for choices in flip_pairs() {
            let m = PairedMove::Flip { edge: e, choices };
            let Some(next) = paired_result(p, &m)? else { continue };
            if next.b.triangulation().has_trapped() {
                continue;
            }
            let d = next.delta();
            if d >= d0 {
                continue;
            }
            let new_edge = next.b.triangulation().edge_of(new_edge_slot(p, e));
            let amb = next.b.is_ambiguous(new_edge) || next.c.is_ambiguous(new_edge);
            let better = match &best {
                None => true,
                Some((bd, bamb, _)) => d < *bd || (d == *bd && amb && !bamb),
            };
            if better {
                best = Some((d, amb, m));
            }
        }
        if let Some((_, _, m)) = best {
            let tag = if flip_case(p, e) == 1 { "(1)good" } else { "(2)good" };
            return Ok(Some((m, tag.to_string())));
        }
    }
    Ok(None)
}

/// Slot holding the new diagonal after flipping `e`.
fn new_edge_slot(p: &Pair, e: EdgeId) -> Slot {
    Slot::new(p.b.triangulation().edge_slots(e)[0].tri, 1)
}

fn reducing_move(p: &Pair) -> Result<Option<(PairedMove, String)>, TransitError> {
    if let Some(m) = ambiguous_inversion(p) {
        let tag = if p.delta() == 1 { "final inversion" } else { "ambiguous inversion" };
        return Ok(Some((m, tag.to_string())));
    }
    good_flip(p)
}

/// Delta-preserving paired flips that keep the triangulation trapped-free.
fn sliding_flips(p: &Pair) -> Result<Vec<PairedMove>, TransitError> {
    let d0 = p.delta();
    let mut out = Vec::new();
    let t = p.b.triangulation();
    for e in t.edges() {
        if t.is_trapped(e) {
            continue;
        }
        for choices in flip_pairs() {
            let m = PairedMove::Flip { edge: e, choices };
            let Some(next) = paired_result(p, &m)? else { continue };
            if !next.b.triangulation().has_trapped() && next.delta() == d0 {
                out.push(m);
            }
        }
    }
    Ok(out)
}

fn common_inversions(p: &Pair) -> Vec<PairedMove> {
    let delta = p.disoriented();
    p.b.triangulation()
        .edges()
        .filter(|e| !delta.contains(e))
        .map(|edge| PairedMove::InvertBoth { edge })
        .filter(|m| matches!(paired_result(p, m), Ok(Some(_))))
        .collect()
}

fn pair_key(p: &Pair) -> (String, String) {
    (key_hex(&p.b), key_hex(&p.c))
}

/// Bounded breadth-first search for a short sequence of delta-preserving
/// moves after which a reducing move exists.
fn local_search(p: &Pair, with_flips: bool, depth: usize, budget: usize) -> Result<Option<Vec<(PairedMove, String)>>, TransitError> {
    let mut seen = HashSet::from([pair_key(p)]);
    let mut layer: Vec<(Pair, Vec<(PairedMove, String)>)> = vec![(p.clone(), Vec::new())];
    for _ in 0..depth {
        let mut next_layer = Vec::new();
        for (q, path) in &layer {
            let mut options: Vec<(PairedMove, &str)> = common_inversions(q).into_iter().map(|m| (m, "star inversion")).collect();
            if with_flips {
                options.extend(sliding_flips(q)?.into_iter().map(|m| (m, "terminal move")));
            }
            for (m, tag) in options {
                let Some(r) = paired_result(q, &m)? else { continue };
                if !seen.insert(pair_key(&r)) {
                    continue;
                }
                let mut path = path.clone();
                path.push((m, tag.to_string()));
                if reducing_move(&r)?.is_some() {
                    return Ok(Some(path));
                }
                if seen.len() > budget {
                    return Ok(None);
                }
                next_layer.push((r, path));
            }
        }
        layer = next_layer;
    }
    Ok(None)
}

fn dump(p: &Pair) -> String {
    let t = p.b.triangulation();
    serde_json::json!({
        "gluings": t.gluings().iter().map(|g| [g.a.tri, g.a.side as usize, g.b.tri, g.b.side as usize, g.reversed as usize]).collect::<Vec<_>>(),
        "source": p.b.orientation(),
        "target": p.c.orientation(),
        "delta": p.disoriented().iter().map(|e| e.0).collect::<Vec<_>>(),
    })
    .to_string()
}

/// Replays the target-side history backwards from `current`, which has the
/// same arrays as the last target-side state.
fn retrace(current: Branching, target_states: &[Branching], log: &[(SideMove, String, usize)]) -> Result<(Vec<Step>, Branching), TransitError> {
    let mut cur = current;
    let mut phi: Vec<EdgeId> = cur.triangulation().edges().collect();
    let mut steps = Vec::new();
    for j in (0..log.len()).rev() {
        let (side, tag, delta) = &log[j];
        let before = &target_states[j];
        let tag = format!("{tag} (target side)");
        match side.mv {
            Move::Invert { edge } => {
                let e = phi[edge.0];
                cur = cur.invert_edge(e)?;
                steps.push(Step { mv: Move::Invert { edge: e }, lemma_tag: tag, delta_size: *delta });
            }
            Move::Flip { edge, .. } => {
                let n = phi[side.new_edge.expect("flip").0];
                let want = key_hex(before);
                let mut found = None;
                for c in FlipChoice::BOTH {
                    if let Ok(o) = moves::flip(&cur, n, c) {
                        if key_hex(&o.branching) == want {
                            found = Some((c, o));
                            break;
                        }
                    }
                }
                let (c, o) = found.ok_or(TransitError::ReplayMismatch)?;
                let map = side.edge_map.as_ref().expect("flip");
                phi = before
                    .triangulation()
                    .edges()
                    .map(|x| if x == edge { o.new_edge } else { o.edge_map[phi[map[x.0].expect("persistent").0].0].expect("persistent") })
                    .collect();
                cur = o.branching;
                steps.push(Step { mv: Move::Flip { edge: n, choice: c }, lemma_tag: tag, delta_size: *delta });
            }
            _ => unreachable!("paired runs use flips and inversions"),
        }
    }
    Ok((steps, cur))
}

/// Paired delta reduction on an orientable surface.
pub fn strategy_b_connect(b: &Branching, target: &Branching) -> Result<TransitReport, TransitError> {
    same_owner(b, target)?;
    if !b.triangulation().is_orientable() {
        return Err(TransitError::NotOrientable);
    }
    let e_count = b.triangulation().edge_count();
    let guard = 50 * e_count * (b.delta(target)?.len() + 1);
    let mut run = StrategyB { pair: Pair { b: b.clone(), c: target.clone() }, source_log: Vec::new(), target_log: Vec::new() };
    let mut target_states = Vec::new();
    let record = |run: &mut StrategyB, m: &PairedMove, tag: &str, states: &mut Vec<Branching>| -> Result<(), TransitError> {
        let touches_target = !matches!(m, PairedMove::InvertOne { side: 0, .. });
        if touches_target {
            states.push(run.pair.c.clone());
        }
        run.apply(m, tag)
    };
    // no trapped edges
    while let Some((_, e)) = loop_attachment(run.pair.b.triangulation()) {
        let m = PairedMove::Flip { edge: e, choices: [first_choice(&run.pair.b, e)?, first_choice(&run.pair.c, e)?] };
        record(&mut run, &m, "trapped removal", &mut target_states)?;
    }
    let mut iterations = 0;
    while run.pair.delta() > 0 {
        iterations += 1;
        if iterations > guard {
            return Err(TransitError::IterationGuardExceeded { reason: format!("guard {guard}"), dump: dump(&run.pair) });
        }
        if let Some((m, tag)) = reducing_move(&run.pair)? {
            record(&mut run, &m, &tag, &mut target_states)?;
            continue;
        }
        let path = match local_search(&run.pair, false, 3, 4000)? {
            Some(p) => Some(p),
            None => local_search(&run.pair, true, 2, 4000)?,
        };
        let Some(path) = path else {
            return Err(TransitError::IterationGuardExceeded { reason: "no reducing sequence found".into(), dump: dump(&run.pair) });
        };
        for (m, tag) in path {
            record(&mut run, &m, &tag, &mut target_states)?;
        }
    }
    let mut steps: Vec<Step> = run
        .source_log
        .iter()
        .map(|(s, tag, d)| Step { mv: s.mv, lemma_tag: tag.clone(), delta_size: *d })
        .collect();
    let (back, end) = retrace(run.pair.b.clone(), &target_states, &run.target_log)?;
    steps.extend(back);
    finish(b, target, steps, end, false)
}

/// Tags whose steps must strictly decrease the disoriented set.
pub const REDUCING_TAGS: [&str; 4] = ["(1)good", "(2)good", "ambiguous inversion", "final inversion"];

/// Explored part of the flip graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub explored: usize,
    pub frontier: usize,
    pub seed_keys: Vec<String>,
    /// Seeds grouped by discovered connectivity.
    pub components: Vec<Vec<usize>>,
}

/// Breadth-first exploration of all legal branched flips from the seeds,
/// keyed by canonical key with fixed labels.
pub fn bounded_bflip_census(seeds: &[Branching], node_budget: usize, triangle_budget: usize) -> Result<CensusSummary, TransitError> {
    bounded_bflip_census_with(seeds, node_budget, triangle_budget, true)
}

/// Census keyed with or without fixed vertex labels.
pub fn bounded_bflip_census_with(
    seeds: &[Branching],
    node_budget: usize,
    triangle_budget: usize,
    fix_labels: bool,
) -> Result<CensusSummary, TransitError> {
    let seed_keys: Vec<Vec<u8>> = seeds.iter().map(|b| b.key(fix_labels)).collect();
    let mut uf = UnionFind::new(seeds.len());
    let mut owner: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut frontier: Vec<(Branching, usize)> = Vec::new();
    for (i, (b, k)) in seeds.iter().zip(&seed_keys).enumerate() {
        match owner.get(k) {
            Some(&j) => uf.union(i, j),
            None => {
                owner.insert(k.clone(), i);
                if b.triangulation().triangle_count() <= triangle_budget {
                    frontier.push((b.clone(), i));
                }
            }
        }
    }
    let summary = |owner: &HashMap<Vec<u8>, usize>, frontier: usize, uf: &mut UnionFind| CensusSummary {
        explored: owner.len(),
        frontier,
        seed_keys: seed_keys.iter().map(|k| to_hex(k)).collect(),
        components: uf.classes(),
    };
    if node_budget == 0 || owner.len() > node_budget {
        return Err(TransitError::BudgetExhausted(Box::new(summary(&owner, frontier.len(), &mut uf))));
    }
    while !frontier.is_empty() {
        let expanded: Vec<Vec<(Vec<u8>, Branching, usize)>> = frontier
            .par_iter()
            .map(|(b, label)| {
                moves::all_bflips(b)
                    .into_iter()
                    .filter_map(|(e, c)| moves::flip(b, e, c).ok())
                    .map(|o| (o.branching.key(fix_labels), o.branching, *label))
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for (k, nb, label) in expanded.into_iter().flatten() {
            match owner.get(&k) {
                Some(&other) => uf.union(label, other),
                None => {
                    owner.insert(k, label);
                    next.push((nb, label));
                    if owner.len() >= node_budget {
                        return Err(TransitError::BudgetExhausted(Box::new(summary(&owner, next.len(), &mut uf))));
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(summary(&owner, 0, &mut uf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;

    #[test]
    fn sphere_graph_is_connected() {
        let (t, _) = builders::sphere3();
        let g = inversion_graph(&t);
        assert_eq!(g.nodes.len(), 6);
        assert_eq!(components(&g, false).len(), 1);
    }

    #[test]
    fn klein_bigons_need_symmetrization() {
        let (t, _) = builders::klein_bigons();
        let g = inversion_graph(&t);
        assert_eq!(components(&g, false).len(), 2);
        assert_eq!(components(&g, true).len(), 1);
    }

    #[test]
    fn self_connection_is_empty() {
        let (_, b) = builders::torus1();
        assert!(connect_by_inversions(&b, &b, false).unwrap().steps.is_empty());
        assert!(strategy_b_connect(&b, &b).unwrap().steps.is_empty());
        assert!(complete_transit(&b, &b).unwrap().steps.is_empty());
    }

    #[test]
    fn complete_transit_on_projective_plane() {
        let (t, _) = builders::projective2();
        let all = enumerate_branchings(&t);
        for x in &all {
            for y in &all {
                let r = complete_transit(x, y).unwrap();
                let end = r.endpoint.as_ref().unwrap();
                assert_eq!(end, y);
            }
        }
    }

    #[test]
    fn census_budget_zero() {
        let (_, b) = builders::sphere3();
        assert!(matches!(bounded_bflip_census(&[b], 0, 10), Err(TransitError::BudgetExhausted(_))));
    }

    #[test]
    fn census_connects_sphere() {
        let (t, _) = builders::sphere3();
        let seeds = enumerate_branchings(&t);
        let s = bounded_bflip_census(&seeds, 100_000, 10).unwrap();
        assert_eq!(s.components.len(), 1);
    }
}
