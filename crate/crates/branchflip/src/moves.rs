//! The move calculus: flips, inversions, bubbles and stellar moves.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branching::{Branching, BranchingError};
use crate::complex::{ComplexError, EdgeId, Slot, Triangulation, Vertex};
use crate::surgery::{Patch, Rebuilt};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MoveError {
    #[error("edge {0} is trapped")]
    TrappedEdge(EdgeId),
    #[error("edge {0} does not exist")]
    EdgeOutOfRange(EdgeId),
    #[error("triangle {0} does not exist")]
    TriangleOutOfRange(usize),
    #[error("vertex {0:?} is not the center of a nutshell")]
    NotANutshell(Vertex),
    #[error("vertex {0:?} is not the center of a triangular star")]
    NotAStar(Vertex),
    #[error("nutshell at {0:?} is bad")]
    BadNutshell(Vertex),
    #[error("star at {0:?} is bad")]
    BadStar(Vertex),
    #[error("choice does not give a branching")]
    InvalidChoice,
    #[error("move needs a branched state")]
    NeedsBranching,
    #[error("naked flips apply to naked states only")]
    NakedOnly,
    #[error(transparent)]
    Branching(#[from] BranchingError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Which apex receives the head of the new diagonal. The first triangle
/// is the one holding the flipped edge's representative slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipChoice {
    TowardFirst,
    TowardSecond,
}

impl FlipChoice {
    pub const BOTH: [FlipChoice; 2] = [FlipChoice::TowardFirst, FlipChoice::TowardSecond];
}

/// Orientations of the two new inner edges of a bubble, relative to the
/// tail and head of the edge being doubled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BubbleChoice {
    pub tail_to_new: bool,
    pub head_to_new: bool,
}

impl BubbleChoice {
    /// The three legal choices.
    pub const LEGAL: [BubbleChoice; 3] = [
        BubbleChoice { tail_to_new: true, head_to_new: true },
        BubbleChoice { tail_to_new: false, head_to_new: false },
        BubbleChoice { tail_to_new: true, head_to_new: false },
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Move {
    NakedFlip { edge: EdgeId },
    Flip { edge: EdgeId, choice: FlipChoice },
    Invert { edge: EdgeId },
    BubblePlus { edge: EdgeId, choice: BubbleChoice },
    BubbleMinus { vertex: Vertex },
    /// `choice[k]`: the spoke at corner `k` points to the new vertex.
    Stellar13 { triangle: usize, choice: [bool; 3] },
    Stellar31 { vertex: Vertex },
}

/// Five-way classification of a branched flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipClass {
    /// The flip and its inverse are forced.
    NonAmbiguous,
    /// The flip is forced, its inverse is not.
    ForcedAmbiguous,
    /// The inverse is forced, the flip is not.
    InverseForcedAmbiguous,
    /// Neither is forced.
    Bump,
}

impl FlipClass {
    pub fn forced(self) -> bool {
        matches!(self, FlipClass::NonAmbiguous | FlipClass::ForcedAmbiguous)
    }

    pub fn sliding(self) -> bool {
        self != FlipClass::Bump
    }

    fn from_forcing(forward: bool, inverse: bool) -> Self {
        match (forward, inverse) {
            (true, true) => FlipClass::NonAmbiguous,
            (true, false) => FlipClass::ForcedAmbiguous,
            (false, true) => FlipClass::InverseForcedAmbiguous,
            (false, false) => FlipClass::Bump,
        }
    }
}

/// A naked or branched triangulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum State {
    Naked(Arc<Triangulation>),
    Branched(Branching),
}

impl State {
    pub fn triangulation(&self) -> &Arc<Triangulation> {
        match self {
            State::Naked(t) => t,
            State::Branched(b) => b.triangulation(),
        }
    }

    pub fn branching(&self) -> Option<&Branching> {
        match self {
            State::Naked(_) => None,
            State::Branched(b) => Some(b),
        }
    }

    /// Hex key with fixed vertex labels.
    pub fn key(&self) -> String {
        let bytes = match self {
            State::Naked(t) => t.canonical_key(true),
            State::Branched(b) => b.key(true),
        };
        to_hex(&bytes)
    }
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A replayable move sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveLog {
    pub initial_key: String,
    pub moves: Vec<Move>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("initial state does not match the log key")]
    KeyMismatch,
    #[error("step {step}: {source}")]
    Step { step: usize, source: MoveError },
}

impl MoveLog {
    pub fn new(initial: &State) -> Self {
        MoveLog { initial_key: initial.key(), moves: Vec::new() }
    }

    pub fn replay(&self, initial: &State) -> Result<State, ReplayError> {
        if !self.initial_key.is_empty() && self.initial_key != initial.key() {
            return Err(ReplayError::KeyMismatch);
        }
        replay(initial, &self.moves)
    }
}

pub fn replay(initial: &State, moves: &[Move]) -> Result<State, ReplayError> {
    let mut s = initial.clone();
    for (step, m) in moves.iter().enumerate() {
        s = apply(&s, m).map_err(|source| ReplayError::Step { step, source })?.0;
    }
    Ok(s)
}

/// Applies `m`, returning the new state and the inverse move.
pub fn apply(state: &State, m: &Move) -> Result<(State, Move), MoveError> {
    match (state, *m) {
        (State::Naked(t), Move::NakedFlip { edge }) => {
            let out = flip_naked_with_map(t, edge)?;
            Ok((State::Naked(Arc::new(out.tri)), Move::NakedFlip { edge: out.new_edge }))
        }
        (State::Branched(_), Move::NakedFlip { .. }) => Err(MoveError::NakedOnly),
        (State::Naked(_), Move::Flip { .. } | Move::Invert { .. }) => Err(MoveError::NeedsBranching),
        (State::Branched(b), Move::Flip { edge, choice }) => {
            let out = flip(b, edge, choice)?;
            let back = out.inverse_choice;
            Ok((State::Branched(out.branching), Move::Flip { edge: out.new_edge, choice: back }))
        }
        (State::Branched(b), Move::Invert { edge }) => {
            check_edge(b.triangulation(), edge)?;
            Ok((State::Branched(b.invert_edge(edge)?), Move::Invert { edge }))
        }
        (_, Move::BubblePlus { edge, choice }) => {
            let (next, w) = bubble_plus_state(state, edge, choice)?;
            Ok((next, Move::BubbleMinus { vertex: w }))
        }
        (_, Move::BubbleMinus { vertex }) => bubble_minus_state(state, vertex),
        (_, Move::Stellar13 { triangle, choice }) => {
            let (next, w) = stellar_13_state(state, triangle, choice)?;
            Ok((next, Move::Stellar31 { vertex: w }))
        }
        (_, Move::Stellar31 { vertex }) => stellar_31_state(state, vertex),
    }
}

fn check_edge(t: &Triangulation, e: EdgeId) -> Result<(), MoveError> {
    if e.0 >= t.edge_count() {
        Err(MoveError::EdgeOutOfRange(e))
    } else {
        Ok(())
    }
}

fn fresh_label(t: &Triangulation) -> Vertex {
    Vertex(t.max_label().0 + 1)
}

/// Corner bookkeeping of the quadrilateral around an edge `(t,i)/(u,j)`:
/// `p` is corner `i` of `t`, `a`/`b` its corners `i+1`/`i+2`, `q` the apex
/// of `u`; `ja`/`jb` are the corners of `u` glued to `a`/`b`.
struct Quad {
    t: usize,
    i: u8,
    u: usize,
    j: u8,
    ja: u8,
    jb: u8,
}

impl Quad {
    fn new(tri: &Triangulation, e: EdgeId) -> Result<Self, MoveError> {
        check_edge(tri, e)?;
        if tri.is_trapped(e) {
            return Err(MoveError::TrappedEdge(e));
        }
        let [s, r] = tri.edge_slots(e);
        let (_, ja) = tri.glued_corner(s, s.start());
        let (_, jb) = tri.glued_corner(s, s.end());
        Ok(Quad { t: s.tri, i: s.side, u: r.tri, j: r.side, ja, jb })
    }

    fn patch(&self, tri: &Triangulation, head_first: bool) -> Patch {
        let (t, u, i) = (self.t, self.u, self.i);
        let c = |tt: usize, k: u8| tri.corner(tt, k % 3);
        let (p, a, b, q) = (c(t, i), c(t, i + 1), c(t, i + 2), c(u, self.j));
        let mut patch = Patch::compacting(tri, &[]);
        patch.corners[t] = [p, a, q];
        patch.corners[u] = [q, b, p];
        // p-a keeps its order in slot 2 of t', b-p goes to slot 0 of u'
        patch.map(Slot::new(t, (i + 2) % 3), Slot::new(t, 2), false);
        patch.map(Slot::new(t, (i + 1) % 3), Slot::new(u, 0), false);
        // q-a lands in slot 0 of t' (a -> q), q-b in slot 2 of u' (q -> b)
        let qa = Slot::new(u, self.jb);
        patch.map(qa, Slot::new(t, 0), qa.start() != self.ja);
        let qb = Slot::new(u, self.ja);
        patch.map(qb, Slot::new(u, 2), qb.start() != self.j);
        patch.unmap(Slot::new(t, i));
        patch.unmap(Slot::new(u, self.j));
        patch.dropped.push(tri.edge_of(Slot::new(t, i)));
        // slot 1 of t' runs q -> p, slot 1 of u' runs p -> q
        patch.extra.push((Slot::new(t, 1), Slot::new(u, 1), true, head_first));
        patch
    }
}

pub struct NakedFlip {
    pub tri: Triangulation,
    pub edge_map: Vec<Option<EdgeId>>,
    pub new_edge: EdgeId,
}

pub fn flip_naked(t: &Triangulation, e: EdgeId) -> Result<Triangulation, MoveError> {
    Ok(flip_naked_with_map(t, e)?.tri)
}

pub fn flip_naked_with_map(t: &Triangulation, e: EdgeId) -> Result<NakedFlip, MoveError> {
    let quad = Quad::new(t, e)?;
    let Rebuilt { tri, edge_map, .. } = quad.patch(t, true).apply(t, None)?;
    let new_edge = tri.edge_of(Slot::new(quad.t, 1));
    Ok(NakedFlip { tri, edge_map, new_edge })
}

/// A branched flip together with edge bookkeeping.
pub struct FlipOutcome {
    pub branching: Branching,
    pub edge_map: Vec<Option<EdgeId>>,
    pub new_edge: EdgeId,
    /// Choice that flips the new edge back to the old orientation.
    pub inverse_choice: FlipChoice,
}

pub fn flip(b: &Branching, e: EdgeId, choice: FlipChoice) -> Result<FlipOutcome, MoveError> {
    let t = b.triangulation();
    let quad = Quad::new(t, e)?;
    let head_first = choice == FlipChoice::TowardFirst;
    let Rebuilt { tri, forward, edge_map } = quad.patch(t, head_first).apply(t, Some(b.orientation()))?;
    let new_edge = tri.edge_of(Slot::new(quad.t, 1));
    let branching = Branching::new(Arc::new(tri), forward.expect("branched rebuild")).map_err(|err| match err {
        BranchingError::Cyclic { .. } => MoveError::InvalidChoice,
        other => other.into(),
    })?;
    // the inverse's first apex is the old corner `a`; old edge ran a -> b when forward
    let inverse_choice = if b.is_forward(e) { FlipChoice::TowardSecond } else { FlipChoice::TowardFirst };
    Ok(FlipOutcome { branching, edge_map, new_edge, inverse_choice })
}

/// Every enhancement of the naked flip at `e`; always one or two.
pub fn enumerate_bflips(b: &Branching, e: EdgeId) -> Result<Vec<(FlipChoice, Branching)>, MoveError> {
    let mut out = Vec::new();
    for c in FlipChoice::BOTH {
        match flip(b, e, c) {
            Ok(o) => out.push((c, o.branching)),
            Err(MoveError::InvalidChoice) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(out)
}

pub fn classify_bflip(b: &Branching, e: EdgeId, choice: FlipChoice) -> Result<FlipClass, MoveError> {
    let forward_forced = enumerate_bflips(b, e)?.len() == 1;
    let out = flip(b, e, choice)?;
    let inverse_forced = enumerate_bflips(&out.branching, out.new_edge)?.len() == 1;
    Ok(FlipClass::from_forcing(forward_forced, inverse_forced))
}

/// Two flips whose composite inverts the untrapped ambiguous edge `e`.
pub fn two_flip_inversion(b: &Branching, e: EdgeId) -> Result<[Move; 2], MoveError> {
    let target = b.invert_edge(e)?.key(true);
    for c1 in FlipChoice::BOTH {
        let Ok(first) = flip(b, e, c1) else { continue };
        for c2 in FlipChoice::BOTH {
            let Ok(second) = flip(&first.branching, first.new_edge, c2) else { continue };
            if second.branching.key(true) == target {
                return Ok([Move::Flip { edge: e, choice: c1 }, Move::Flip { edge: first.new_edge, choice: c2 }]);
            }
        }
    }
    Err(MoveError::InvalidChoice)
}

fn rebuild_state(state: &State, patch: &Patch) -> Result<State, MoveError> {
    let t = state.triangulation();
    match state {
        State::Naked(_) => Ok(State::Naked(Arc::new(patch.apply(t, None)?.tri))),
        State::Branched(b) => {
            let Rebuilt { tri, forward, .. } = patch.apply(t, Some(b.orientation()))?;
            Ok(State::Branched(Branching::new(Arc::new(tri), forward.expect("branched rebuild"))?))
        }
    }
}

fn bubble_plus_state(state: &State, e: EdgeId, choice: BubbleChoice) -> Result<(State, Vertex), MoveError> {
    let t = state.triangulation();
    check_edge(t, e)?;
    let f = t.triangle_count();
    let [s1, s2] = t.edge_slots(e);
    let r = t.partner(s1).1;
    let w = fresh_label(t);
    let x = t.corner(s1.tri, s1.start());
    let y = t.corner(s1.tri, s1.end());
    let (d1, d2, x_to_w, y_to_w) = match state {
        State::Naked(_) => (false, false, false, false),
        State::Branched(b) => {
            if choice.head_to_new && !choice.tail_to_new {
                return Err(MoveError::InvalidChoice);
            }
            let fw = b.is_forward(e);
            let (xw, yw) = if fw {
                (choice.tail_to_new, choice.head_to_new)
            } else {
                (choice.head_to_new, choice.tail_to_new)
            };
            (b.slot_forward(s1), b.slot_forward(s2), xw, yw)
        }
    };
    let mut patch = Patch::compacting(t, &[]);
    patch.corners.push([w, x, y]);
    patch.corners.push([w, y, x]);
    patch.dropped.push(e);
    let (n1, n2) = (f, f + 1);
    patch.extra.push((s1, Slot::new(n1, 0), false, d1));
    patch.extra.push((s2, Slot::new(n2, 0), !r, d2));
    patch.extra.push((Slot::new(n1, 2), Slot::new(n2, 1), true, !x_to_w));
    patch.extra.push((Slot::new(n1, 1), Slot::new(n2, 2), true, y_to_w));
    Ok((rebuild_state(state, &patch)?, w))
}

pub fn bubble_plus(b: &Branching, e: EdgeId, choice: BubbleChoice) -> Result<Branching, MoveError> {
    let (s, _) = bubble_plus_state(&State::Branched(b.clone()), e, choice)?;
    Ok(s.branching().expect("branched").clone())
}

/// Whether the nutshell's two outer edges are coherently oriented.
pub fn nutshell_is_good(b: &Branching, w: Vertex) -> Result<bool, MoveError> {
    let t = b.triangulation();
    let n = t.nutshell_at(w).ok_or(MoveError::NotANutshell(w))?;
    let (p1, p2, rev) = nutshell_merge(t, n.triangles, w);
    Ok(b.slot_forward(p2) == b.slot_forward(p1) ^ rev)
}

/// The outer partners of a nutshell and the bit gluing them directly.
fn nutshell_merge(t: &Triangulation, tris: [usize; 2], w: Vertex) -> (Slot, Slot, bool) {
    let k = |tt: usize| (0..3u8).find(|&c| t.corner(tt, c) == w).expect("center corner");
    let (t1, t2) = (tris[0], tris[1]);
    let (k1, k2) = (k(t1), k(t2));
    let o1 = Slot::new(t1, k1);
    let o2 = Slot::new(t2, k2);
    let p1 = t.partner(o1).0;
    let p2 = t.partner(o2).0;
    let (_, c1) = t.glued_corner(p1, p1.start());
    let spoke = Slot::new(t1, 3 - k1 - c1);
    let (tt, c2) = t.glued_corner(spoke, c1);
    debug_assert_eq!(tt, t2);
    let (_, d) = t.glued_corner(o2, c2);
    (p1, p2, d != p2.start())
}

fn bubble_minus_state(state: &State, w: Vertex) -> Result<(State, Move), MoveError> {
    let t = state.triangulation();
    let n = t.nutshell_at(w).ok_or(MoveError::NotANutshell(w))?;
    let (p1, p2, rev) = nutshell_merge(t, n.triangles, w);
    let [t1, t2] = n.triangles;
    let mut dir = false;
    let mut inverse_choice = BubbleChoice { tail_to_new: false, head_to_new: false };
    if let State::Branched(b) = state {
        if b.slot_forward(p2) != b.slot_forward(p1) ^ rev {
            return Err(MoveError::BadNutshell(w));
        }
        dir = b.slot_forward(p1);
        let k1 = (0..3u8).find(|&c| t.corner(t1, c) == w).expect("center corner");
        let o1 = Slot::new(t1, k1);
        let (tail, head) = if b.slot_forward(o1) { (o1.start(), o1.end()) } else { (o1.end(), o1.start()) };
        // spoke joining a corner c to the center is the slot opposite the third corner
        let to_center = |c: u8| {
            let s = Slot::new(t1, 3 - k1 - c);
            (s.start() == c) == b.slot_forward(s)
        };
        inverse_choice = BubbleChoice { tail_to_new: to_center(tail), head_to_new: to_center(head) };
    }
    let mut patch = Patch::compacting(t, &[t1, t2]);
    for tt in [t1, t2] {
        for k in 0..3u8 {
            let e = t.edge_of(Slot::new(tt, k));
            if !patch.dropped.contains(&e) {
                patch.dropped.push(e);
            }
        }
    }
    let np1 = patch.slot_map[p1.tri][p1.side as usize].expect("outer slot survives").0;
    let np2 = patch.slot_map[p2.tri][p2.side as usize].expect("outer slot survives").0;
    patch.extra.push((np1, np2, rev, dir));
    let next = rebuild_state(state, &patch)?;
    let merged = next.triangulation().edge_of(np1);
    Ok((next, Move::BubblePlus { edge: merged, choice: inverse_choice }))
}

pub fn bubble_minus(b: &Branching, w: Vertex) -> Result<Branching, MoveError> {
    let (s, _) = bubble_minus_state(&State::Branched(b.clone()), w)?;
    Ok(s.branching().expect("branched").clone())
}

fn stellar_13_state(state: &State, tr: usize, inward: [bool; 3]) -> Result<(State, Vertex), MoveError> {
    let t = state.triangulation();
    if tr >= t.triangle_count() {
        return Err(MoveError::TriangleOutOfRange(tr));
    }
    let f = t.triangle_count();
    let w = fresh_label(t);
    let [c0, c1, c2] = t.corners(tr);
    let mut patch = Patch::compacting(t, &[]);
    patch.corners[tr] = [w, c1, c2];
    patch.corners.push([c0, w, c2]);
    patch.corners.push([c0, c1, w]);
    patch.map(Slot::new(tr, 1), Slot::new(f, 1), false);
    patch.map(Slot::new(tr, 2), Slot::new(f + 1, 2), false);
    let naked = matches!(state, State::Naked(_));
    let d = |x: bool| x && !naked;
    patch.extra.push((Slot::new(f, 2), Slot::new(f + 1, 1), true, d(inward[0])));
    patch.extra.push((Slot::new(tr, 2), Slot::new(f + 1, 0), true, d(!inward[1])));
    patch.extra.push((Slot::new(tr, 1), Slot::new(f, 0), true, d(inward[2])));
    let next = rebuild_state(state, &patch).map_err(|err| match err {
        MoveError::Branching(BranchingError::Cyclic { .. }) => MoveError::InvalidChoice,
        other => other,
    })?;
    Ok((next, w))
}

pub fn stellar_13(b: &Branching, tr: usize, inward: [bool; 3]) -> Result<Branching, MoveError> {
    let (s, _) = stellar_13_state(&State::Branched(b.clone()), tr, inward)?;
    Ok(s.branching().expect("branched").clone())
}

/// Star layout: keeper triangle `K` with the center at corner `k`, and the
/// neighbours across its spokes `k+1` and `k+2`.
struct StarFrame {
    kt: usize,
    k: u8,
    bt: usize,
    kb: u8,
    cb: u8,
    ct: usize,
    kc: u8,
    cc: u8,
}

impl StarFrame {
    fn new(t: &Triangulation, w: Vertex) -> Result<Self, MoveError> {
        let star = t.star_at(w).ok_or(MoveError::NotAStar(w))?;
        let kt = *star.triangles.iter().min().expect("three");
        let center = |tt: usize| (0..3u8).find(|&c| t.corner(tt, c) == w).expect("center corner");
        let k = center(kt);
        let s1 = Slot::new(kt, (k + 1) % 3);
        let (bt, cb) = t.glued_corner(s1, (k + 2) % 3);
        let s2 = Slot::new(kt, (k + 2) % 3);
        let (ct, cc) = t.glued_corner(s2, (k + 1) % 3);
        Ok(StarFrame { kt, k, bt, kb: center(bt), cb, ct, kc: center(ct), cc })
    }

    fn patch(&self, t: &Triangulation) -> Patch {
        let k = self.k;
        let x = t.corner(self.bt, 3 - self.kb - self.cb);
        let mut patch = Patch::compacting(t, &[self.bt, self.ct]);
        let nk = patch.new_index(self.kt).expect("keeper survives");
        patch.corners[nk][k as usize] = x;
        for s in [Slot::new(self.kt, (k + 1) % 3), Slot::new(self.kt, (k + 2) % 3)] {
            patch.dropped.push(t.edge_of(s));
            patch.unmap(s);
        }
        let bc = Slot::new(self.bt, self.cb);
        patch.dropped.push(t.edge_of(bc));
        let ob = Slot::new(self.bt, self.kb);
        patch.map(ob, Slot::new(nk, (k + 1) % 3), ob.start() != self.cb);
        let oc = Slot::new(self.ct, self.kc);
        patch.map(oc, Slot::new(nk, (k + 2) % 3), oc.end() != self.cc);
        patch
    }
}

fn stellar_31_state(state: &State, w: Vertex) -> Result<(State, Move), MoveError> {
    let t = state.triangulation();
    let fr = StarFrame::new(t, w)?;
    let patch = fr.patch(t);
    let mut inward = [false; 3];
    if let State::Branched(b) = state {
        let k = fr.k;
        inward[((k + 2) % 3) as usize] = b.slot_forward(Slot::new(fr.kt, (k + 1) % 3));
        inward[((k + 1) % 3) as usize] = !b.slot_forward(Slot::new(fr.kt, (k + 2) % 3));
        let xb = 3 - fr.kb - fr.cb;
        let s = Slot::new(fr.bt, fr.cb);
        inward[k as usize] = (s.start() == xb) == b.slot_forward(s);
    }
    let next = rebuild_state(state, &patch).map_err(|err| match err {
        MoveError::Branching(BranchingError::Cyclic { .. }) => MoveError::BadStar(w),
        other => other,
    })?;
    let nk = patch.new_index(fr.kt).expect("keeper survives");
    Ok((next, Move::Stellar13 { triangle: nk, choice: inward }))
}

pub fn stellar_31(b: &Branching, w: Vertex) -> Result<Branching, MoveError> {
    let (s, _) = stellar_31_state(&State::Branched(b.clone()), w)?;
    Ok(s.branching().expect("branched").clone())
}

/// Whether the star's outer edges avoid an oriented cycle.
pub fn star_is_good(b: &Branching, w: Vertex) -> Result<bool, MoveError> {
    match stellar_31(b, w) {
        Ok(_) => Ok(true),
        Err(MoveError::BadStar(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Every legal (edge, choice) pair at untrapped edges.
pub fn all_bflips(b: &Branching) -> Vec<(EdgeId, FlipChoice)> {
    let t = b.triangulation();
    let mut out = Vec::new();
    for e in t.edges() {
        if t.is_trapped(e) {
            continue;
        }
        for c in FlipChoice::BOTH {
            if flip(b, e, c).is_ok() {
                out.push((e, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::enumerate_branchings;
    use crate::complex::Gluing;

    fn sphere3() -> Arc<Triangulation> {
        let g: Vec<_> = (0..3).map(|i| Gluing::new((0, i), (1, i), false)).collect();
        Arc::new(Triangulation::build(2, &g).unwrap())
    }

    #[test]
    fn naked_flip_involution() {
        let t = sphere3();
        for e in t.edges() {
            let out = flip_naked_with_map(&t, e).unwrap();
            assert_eq!(out.tri.euler(), 2);
            let back = flip_naked(&out.tri, out.new_edge).unwrap();
            assert_eq!(back.canonical_key(true), t.canonical_key(true));
        }
    }

    #[test]
    fn every_flip_has_one_or_two_enhancements() {
        for b in enumerate_branchings(&sphere3()) {
            for e in b.triangulation().edges() {
                let n = enumerate_bflips(&b, e).unwrap().len();
                assert!(n == 1 || n == 2);
            }
        }
    }

    #[test]
    fn flip_and_inverse_restore() {
        for b in enumerate_branchings(&sphere3()) {
            for e in b.triangulation().edges() {
                for (c, _) in enumerate_bflips(&b, e).unwrap() {
                    let s = State::Branched(b.clone());
                    let (s1, inv) = apply(&s, &Move::Flip { edge: e, choice: c }).unwrap();
                    let (s2, _) = apply(&s1, &inv).unwrap();
                    assert_eq!(s2.key(), s.key());
                }
            }
        }
    }

    #[test]
    fn bubble_round_trip() {
        let b = Branching::from_label_order(sphere3()).unwrap();
        for e in b.triangulation().edges() {
            for c in BubbleChoice::LEGAL {
                let s = State::Branched(b.clone());
                let (s1, inv) = apply(&s, &Move::BubblePlus { edge: e, choice: c }).unwrap();
                let t1 = s1.triangulation();
                assert_eq!(t1.vertex_count(), 4);
                assert!(t1.nutshell_at(t1.max_label()).is_some());
                assert_eq!(t1.nutshells().len(), 2);
                let (s2, again) = apply(&s1, &inv).unwrap();
                assert_eq!(s2, s);
                let (s3, _) = apply(&s2, &again).unwrap();
                assert_eq!(s3.key(), s1.key());
            }
        }
    }

    #[test]
    fn illegal_bubble_choice() {
        let b = Branching::from_label_order(sphere3()).unwrap();
        let c = BubbleChoice { tail_to_new: false, head_to_new: true };
        assert_eq!(bubble_plus(&b, EdgeId(0), c), Err(MoveError::InvalidChoice));
    }

    #[test]
    fn stellar_round_trip() {
        let b = Branching::from_label_order(sphere3()).unwrap();
        for tr in 0..2 {
            let s = State::Branched(b.clone());
            let (s1, inv) = apply(&s, &Move::Stellar13 { triangle: tr, choice: [true; 3] }).unwrap();
            let w = s1.triangulation().max_label();
            assert!(s1.branching().unwrap().is_pit(w));
            assert_eq!(s1.triangulation().stars().len(), 4);
            let (s2, again) = apply(&s1, &inv).unwrap();
            assert_eq!(s2, s);
            let (s3, _) = apply(&s2, &again).unwrap();
            assert_eq!(s3.key(), s1.key());
        }
    }

    #[test]
    fn every_star_is_decided() {
        let (t, _) = crate::builders::tetrahedron();
        for b in enumerate_branchings(&t) {
            for s in t.stars() {
                let good = star_is_good(&b, s.center).unwrap();
                assert!(good || b.is_pit(s.center) || b.is_source(s.center));
            }
        }
    }

    #[test]
    fn nutshell_flip_traps() {
        let b = Branching::from_label_order(sphere3()).unwrap();
        let c = BubbleChoice::LEGAL[0];
        let nb = bubble_plus(&b, EdgeId(0), c).unwrap();
        let t = nb.triangulation();
        let n = t.nutshells()[0];
        let spoke = (0..3u8)
            .map(|k| Slot::new(n.triangles[0], k))
            .find(|s| t.partner(*s).0.tri == n.triangles[1])
            .unwrap();
        let flipped = flip_naked(t, t.edge_of(spoke)).unwrap();
        assert_eq!(flipped.trapped_edges().len(), 1);
    }
}
