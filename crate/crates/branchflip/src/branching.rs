//! Branchings: edge orientations that are acyclic on every triangle.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::complex::{EdgeId, Slot, Triangulation, Vertex};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BranchingError {
    #[error("expected {expected} edge orientations, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("triangle {tri} is an oriented cycle")]
    Cyclic { tri: usize },
    #[error("edge {0} is not ambiguous")]
    NotAmbiguous(EdgeId),
    #[error("edge {0} does not exist")]
    EdgeOutOfRange(EdgeId),
    #[error("branchings live on different triangulations")]
    DifferentOwner,
    #[error("the surface is not orientable")]
    NotOrientable,
}

/// Edge orientations on a fixed triangulation.
///
/// `forward[e]` is true when `e` points along the fixed order of its
/// representative slot.
#[derive(Clone, Debug)]
pub struct Branching {
    tri: Arc<Triangulation>,
    forward: Vec<bool>,
}

impl PartialEq for Branching {
    fn eq(&self, other: &Self) -> bool {
        self.forward == other.forward && (Arc::ptr_eq(&self.tri, &other.tri) || *self.tri == *other.tri)
    }
}

impl Eq for Branching {}

/// Edges where two branchings disagree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeltaSet(pub BTreeSet<EdgeId>);

impl DeltaSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.0.contains(&e)
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.0.iter().copied()
    }
}

/// Whether three slot directions make a valid (acyclic) triangle.
pub(crate) fn acyclic(d: [bool; 3]) -> bool {
    !(d[0] == d[1] && d[1] == d[2])
}

fn slot_forward_in(tri: &Triangulation, forward: &[bool], s: Slot) -> bool {
    let e = tri.edge_of(s);
    let [rep, _] = tri.edge_slots(e);
    if s == rep {
        forward[e.0]
    } else {
        forward[e.0] ^ tri.partner(s).1
    }
}

fn triangle_dirs(tri: &Triangulation, forward: &[bool], t: usize) -> [bool; 3] {
    [0, 1, 2].map(|k| slot_forward_in(tri, forward, Slot::new(t, k)))
}

/// True iff no triangle boundary is an oriented cycle.
pub fn is_branching(tri: &Triangulation, forward: &[bool]) -> bool {
    forward.len() == tri.edge_count() && (0..tri.triangle_count()).all(|t| acyclic(triangle_dirs(tri, forward, t)))
}

/// Every branching of `tri`, in lexicographic order of orientation vectors.
pub fn enumerate_branchings(tri: &Arc<Triangulation>) -> Vec<Branching> {
    let e_count = tri.edge_count();
    let mut check_at: Vec<Vec<usize>> = vec![Vec::new(); e_count];
    for t in 0..tri.triangle_count() {
        let last = (0..3).map(|k| tri.edge_of(Slot::new(t, k)).0).max().expect("three sides");
        check_at[last].push(t);
    }
    let mut out = Vec::new();
    let mut forward = vec![false; e_count];
    fn go(
        i: usize,
        tri: &Arc<Triangulation>,
        check_at: &[Vec<usize>],
        forward: &mut Vec<bool>,
        out: &mut Vec<Branching>,
    ) {
        if i == forward.len() {
            out.push(Branching { tri: Arc::clone(tri), forward: forward.clone() });
            return;
        }
        for value in [false, true] {
            forward[i] = value;
            if check_at[i].iter().all(|&t| acyclic(triangle_dirs(tri, forward, t))) {
                go(i + 1, tri, check_at, forward, out);
            }
        }
    }
    go(0, tri, &check_at, &mut forward, &mut out);
    out
}

impl Branching {
    pub fn new(tri: Arc<Triangulation>, forward: Vec<bool>) -> Result<Self, BranchingError> {
        if forward.len() != tri.edge_count() {
            return Err(BranchingError::WrongLength { expected: tri.edge_count(), got: forward.len() });
        }
        for t in 0..tri.triangle_count() {
            if !acyclic(triangle_dirs(&tri, &forward, t)) {
                return Err(BranchingError::Cyclic { tri: t });
            }
        }
        Ok(Branching { tri, forward })
    }

    /// Branching induced by the order of vertex labels; fails when some
    /// triangle has two corners on the same vertex.
    pub fn from_label_order(tri: Arc<Triangulation>) -> Result<Self, BranchingError> {
        let forward = tri
            .edges()
            .map(|e| {
                let (a, b) = tri.edge_endpoints(e);
                a < b
            })
            .collect();
        Self::new(tri, forward)
    }

    pub fn triangulation(&self) -> &Arc<Triangulation> {
        &self.tri
    }

    pub fn orientation(&self) -> &[bool] {
        &self.forward
    }

    pub fn is_forward(&self, e: EdgeId) -> bool {
        self.forward[e.0]
    }

    /// Whether the edge through `s` points along `s`'s fixed order.
    pub fn slot_forward(&self, s: Slot) -> bool {
        slot_forward_in(&self.tri, &self.forward, s)
    }

    pub fn triangle_dirs(&self, t: usize) -> [bool; 3] {
        triangle_dirs(&self.tri, &self.forward, t)
    }

    pub fn slot_dirs(&self) -> Vec<[bool; 3]> {
        (0..self.tri.triangle_count()).map(|t| self.triangle_dirs(t)).collect()
    }

    /// (tail, head) of `e`.
    pub fn endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        let (a, b) = self.tri.edge_endpoints(e);
        if self.forward[e.0] {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Corners (v0, v1, v2) of triangle `t` in branching order.
    pub fn local_order(&self, t: usize) -> [u8; 3] {
        let d = self.triangle_dirs(t);
        let mut order = [0u8; 3];
        for c in 0..3u8 {
            let indeg = usize::from(d[((c + 1) % 3) as usize]) + usize::from(!d[((c + 2) % 3) as usize]);
            order[indeg] = c;
        }
        order
    }

    pub fn one_labelled_corner(&self, t: usize) -> u8 {
        self.local_order(t)[1]
    }

    /// Number of 1-labelled corners at each vertex.
    pub fn one_corner_counts(&self) -> BTreeMap<Vertex, u32> {
        let mut m: BTreeMap<Vertex, u32> = self.tri.vertices().iter().map(|&v| (v, 0)).collect();
        for t in 0..self.tri.triangle_count() {
            *m.get_mut(&self.tri.corner(t, self.one_labelled_corner(t))).expect("label") += 1;
        }
        m
    }

    pub fn d_values(&self) -> BTreeMap<Vertex, u32> {
        self.one_corner_counts().into_iter().map(|(v, c)| (v, c / 2)).collect()
    }

    pub fn d_b(&self, v: Vertex) -> u32 {
        self.d_values().get(&v).copied().unwrap_or(0)
    }

    pub fn i_b(&self, v: Vertex) -> i64 {
        1 - self.d_b(v) as i64
    }

    /// Every corner at `v` is the local maximum.
    pub fn is_pit(&self, v: Vertex) -> bool {
        self.tri.corners_at(v).into_iter().all(|(t, k)| self.local_order(t)[2] == k)
    }

    /// Every corner at `v` is the local minimum.
    pub fn is_source(&self, v: Vertex) -> bool {
        self.tri.corners_at(v).into_iter().all(|(t, k)| self.local_order(t)[0] == k)
    }

    pub fn total_inversion(&self) -> Branching {
        Branching { tri: Arc::clone(&self.tri), forward: self.forward.iter().map(|f| !f).collect() }
    }

    pub fn is_ambiguous(&self, e: EdgeId) -> bool {
        let mut flipped = self.forward.clone();
        flipped[e.0] = !flipped[e.0];
        self.tri
            .edge_slots(e)
            .iter()
            .all(|s| acyclic(triangle_dirs(&self.tri, &flipped, s.tri)))
    }

    pub fn ambiguous_edges(&self) -> Vec<EdgeId> {
        self.tri.edges().filter(|&e| self.is_ambiguous(e)).collect()
    }

    pub fn invert_edge(&self, e: EdgeId) -> Result<Branching, BranchingError> {
        if e.0 >= self.forward.len() {
            return Err(BranchingError::EdgeOutOfRange(e));
        }
        if !self.is_ambiguous(e) {
            return Err(BranchingError::NotAmbiguous(e));
        }
        let mut forward = self.forward.clone();
        forward[e.0] = !forward[e.0];
        Ok(Branching { tri: Arc::clone(&self.tri), forward })
    }

    pub fn same_owner(&self, other: &Branching) -> bool {
        Arc::ptr_eq(&self.tri, &other.tri) || *self.tri == *other.tri
    }

    pub fn delta(&self, other: &Branching) -> Result<DeltaSet, BranchingError> {
        if !self.same_owner(other) {
            return Err(BranchingError::DifferentOwner);
        }
        Ok(DeltaSet(
            self.tri.edges().filter(|e| self.forward[e.0] != other.forward[e.0]).collect(),
        ))
    }

    /// Isomorphism-invariant key of the branched triangulation.
    pub fn key(&self, fix_vertex_labels: bool) -> Vec<u8> {
        self.tri.canonical_bytes(Some(&self.slot_dirs()), fix_vertex_labels)
    }

    /// Same orientations carried over to an equal triangulation value.
    pub fn rehome(&self, tri: Arc<Triangulation>) -> Result<Branching, BranchingError> {
        if *tri != *self.tri {
            return Err(BranchingError::DifferentOwner);
        }
        Ok(Branching { tri, forward: self.forward.clone() })
    }

    fn reference_orientation(&self) -> Result<Vec<i8>, BranchingError> {
        self.tri.orientation().ok_or(BranchingError::NotOrientable)
    }

    /// +1 where the local order agrees with the given orientation.
    pub fn triangle_signs_with(&self, orientation: &[i8]) -> Vec<i8> {
        (0..self.tri.triangle_count())
            .map(|t| {
                let o = self.local_order(t);
                let even = (o[1] + 3 - o[0]) % 3 == 1;
                if even {
                    orientation[t]
                } else {
                    -orientation[t]
                }
            })
            .collect()
    }

    /// Signs against the orientation making triangle 0 positive.
    pub fn triangle_signs(&self) -> Result<Vec<i8>, BranchingError> {
        Ok(self.triangle_signs_with(&self.reference_orientation()?))
    }

    pub fn epsilon_pm(&self) -> Result<(usize, usize), BranchingError> {
        let s = self.triangle_signs()?;
        let plus = s.iter().filter(|&&x| x > 0).count();
        Ok((plus, s.len() - plus))
    }

    pub fn s_plus_minus(&self) -> Result<(Vec<usize>, Vec<usize>), BranchingError> {
        let s = self.triangle_signs()?;
        Ok((0..s.len()).partition(|&t| s[t] > 0))
    }

    /// Boundary of the union of triangles with sign `sign`, as coefficients
    /// relative to each edge's branching orientation.
    pub fn boundary_chain_with(&self, orientation: &[i8], sign: i8) -> Vec<i64> {
        let signs = self.triangle_signs_with(orientation);
        let mut chain = vec![0i64; self.tri.edge_count()];
        for t in 0..self.tri.triangle_count() {
            if signs[t] != sign {
                continue;
            }
            for k in 0..3 {
                let s = Slot::new(t, k);
                let along = (orientation[t] > 0) == self.slot_forward(s);
                chain[self.tri.edge_of(s).0] += if along { 1 } else { -1 };
            }
        }
        chain
    }

    pub fn boundary_of_s_plus(&self) -> Result<Vec<i64>, BranchingError> {
        Ok(self.boundary_chain_with(&self.reference_orientation()?, 1))
    }

    pub fn boundary_of_s_minus(&self) -> Result<Vec<i64>, BranchingError> {
        Ok(self.boundary_chain_with(&self.reference_orientation()?, -1))
    }
}
