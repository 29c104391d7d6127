//! Loose ideal triangulations of closed surfaces stored as gluing data.
//!
//! Every triangle has three slots. Slot `i` is the side opposite corner `i`
//! and carries the fixed corner order `(i+1) -> (i+2)`. A gluing pairs two
//! slots and records whether the identification reverses that order.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A side of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub tri: usize,
    pub side: u8,
}

impl Slot {
    pub const fn new(tri: usize, side: u8) -> Self {
        Slot { tri, side }
    }

    /// Corner where the slot's fixed order starts.
    pub fn start(self) -> u8 {
        (self.side + 1) % 3
    }

    /// Corner where the slot's fixed order ends.
    pub fn end(self) -> u8 {
        (self.side + 2) % 3
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.tri, self.side)
    }
}

/// Persistent vertex label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub u32);

/// Edge index: edges are numbered by their smaller slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// One matched pair of slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub a: Slot,
    pub b: Slot,
    pub reversed: bool,
}

impl Gluing {
    pub fn new(a: (usize, u8), b: (usize, u8), reversed: bool) -> Self {
        Gluing { a: Slot::new(a.0, a.1), b: Slot::new(b.0, b.1), reversed }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ComplexError {
    #[error("triangle count {0} is not a positive even number")]
    Degenerate(usize),
    #[error("slot {0} does not exist")]
    SlotOutOfRange(Slot),
    #[error("slot {0} is glued to itself")]
    SlotSelfMatch(Slot),
    #[error("slot {slot} is matched {count} times")]
    NonPerfectMatching { slot: Slot, count: usize },
    #[error("triangle {0} is not reachable from triangle 0")]
    Disconnected(usize),
    #[error("vertex labels disagree with corner orbits at triangle {tri} corner {corner}")]
    InconsistentLabels { tri: usize, corner: u8 },
    #[error("expected {expected} label triples, got {got}")]
    LabelCount { expected: usize, got: usize },
}

/// Topological type of the underlying surface together with `n = |V|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SurfaceClass {
    pub orientable: bool,
    pub genus_or_crosscaps: u32,
    pub euler: i64,
    pub n_vertices: usize,
}

impl SurfaceClass {
    pub fn orientable(genus: u32, n: usize) -> Self {
        SurfaceClass { orientable: true, genus_or_crosscaps: genus, euler: 2 - 2 * genus as i64, n_vertices: n }
    }

    pub fn nonorientable(crosscaps: u32, n: usize) -> Self {
        assert!(crosscaps > 0, "a non-orientable surface has at least one crosscap");
        SurfaceClass { orientable: false, genus_or_crosscaps: crosscaps, euler: 2 - crosscaps as i64, n_vertices: n }
    }

    /// Same surface with a different number of marked points.
    pub fn with_vertices(self, n: usize) -> Self {
        SurfaceClass { n_vertices: n, ..self }
    }

    pub fn same_surface(&self, other: &SurfaceClass) -> bool {
        self.orientable == other.orientable && self.genus_or_crosscaps == other.genus_or_crosscaps
    }
}

impl fmt::Display for SurfaceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.orientable { "genus" } else { "crosscaps" };
        write!(f, "{} {} (chi {}, n {})", kind, self.genus_or_crosscaps, self.euler, self.n_vertices)
    }
}

/// Two triangles sharing two edges around a valence-2 vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nutshell {
    pub triangles: [usize; 2],
    pub center: Vertex,
}

/// Three triangles around a valence-3 vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Star {
    pub triangles: [usize; 3],
    pub center: Vertex,
}

/// A validated closed triangulated surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    partner: Vec<[(Slot, bool); 3]>,
    corners: Vec<[Vertex; 3]>,
    edges: Vec<[Slot; 2]>,
    slot_edge: Vec<[EdgeId; 3]>,
    vertices: Vec<Vertex>,
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
}

impl Triangulation {
    /// Validates a gluing list and assigns vertex labels `0..n` in order of
    /// first corner appearance.
    pub fn build(triangle_count: usize, gluings: &[Gluing]) -> Result<Self, ComplexError> {
        let partner = Self::matching(triangle_count, gluings)?;
        let orbits = corner_orbits(&partner);
        let mut names: BTreeMap<usize, u32> = BTreeMap::new();
        let corners = (0..triangle_count)
            .map(|t| {
                let mut c = [Vertex(0); 3];
                for k in 0..3 {
                    let next = names.len() as u32;
                    c[k] = Vertex(*names.entry(orbits[3 * t + k]).or_insert(next));
                }
                c
            })
            .collect();
        Self::from_parts(partner, corners)
    }

    /// Like [`Triangulation::build`] but with caller-supplied labels, which
    /// must be constant on corner orbits and distinct between orbits.
    pub fn build_labelled(
        triangle_count: usize,
        gluings: &[Gluing],
        labels: Vec<[Vertex; 3]>,
    ) -> Result<Self, ComplexError> {
        if labels.len() != triangle_count {
            return Err(ComplexError::LabelCount { expected: triangle_count, got: labels.len() });
        }
        let partner = Self::matching(triangle_count, gluings)?;
        Self::from_parts(partner, labels)
    }

    fn matching(triangle_count: usize, gluings: &[Gluing]) -> Result<Vec<[(Slot, bool); 3]>, ComplexError> {
        if triangle_count == 0 || triangle_count % 2 == 1 {
            return Err(ComplexError::Degenerate(triangle_count));
        }
        let mut seen: Vec<[Option<(Slot, bool)>; 3]> = vec![[None; 3]; triangle_count];
        let mut count = vec![[0usize; 3]; triangle_count];
        for g in gluings {
            for s in [g.a, g.b] {
                if s.tri >= triangle_count || s.side > 2 {
                    return Err(ComplexError::SlotOutOfRange(s));
                }
            }
            if g.a == g.b {
                return Err(ComplexError::SlotSelfMatch(g.a));
            }
            count[g.a.tri][g.a.side as usize] += 1;
            count[g.b.tri][g.b.side as usize] += 1;
            seen[g.a.tri][g.a.side as usize] = Some((g.b, g.reversed));
            seen[g.b.tri][g.b.side as usize] = Some((g.a, g.reversed));
        }
        let mut partner = Vec::with_capacity(triangle_count);
        for (t, row) in seen.iter().enumerate() {
            let mut out = [(Slot::new(0, 0), false); 3];
            for k in 0..3 {
                if count[t][k] != 1 {
                    return Err(ComplexError::NonPerfectMatching {
                        slot: Slot::new(t, k as u8),
                        count: count[t][k],
                    });
                }
                out[k] = row[k].expect("counted once");
            }
            partner.push(out);
        }
        Ok(partner)
    }

    /// Assembles from a full partner table, validating matching symmetry,
    /// connectivity and label consistency.
    pub(crate) fn from_parts(
        partner: Vec<[(Slot, bool); 3]>,
        corners: Vec<[Vertex; 3]>,
    ) -> Result<Self, ComplexError> {
        let f = partner.len();
        if f == 0 || f % 2 == 1 {
            return Err(ComplexError::Degenerate(f));
        }
        if corners.len() != f {
            return Err(ComplexError::LabelCount { expected: f, got: corners.len() });
        }
        for t in 0..f {
            for k in 0..3u8 {
                let here = Slot::new(t, k);
                let (p, rev) = partner[t][k as usize];
                if p.tri >= f || p.side > 2 {
                    return Err(ComplexError::SlotOutOfRange(p));
                }
                if p == here {
                    return Err(ComplexError::SlotSelfMatch(here));
                }
                let (back, rev2) = partner[p.tri][p.side as usize];
                if back != here || rev != rev2 {
                    return Err(ComplexError::NonPerfectMatching { slot: here, count: 2 });
                }
            }
        }
        let mut seen = vec![false; f];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(t) = queue.pop_front() {
            for (p, _) in partner[t] {
                if !seen[p.tri] {
                    seen[p.tri] = true;
                    queue.push_back(p.tri);
                }
            }
        }
        if let Some(t) = seen.iter().position(|s| !s) {
            return Err(ComplexError::Disconnected(t));
        }
        let orbits = corner_orbits(&partner);
        let mut label_of_orbit: BTreeMap<usize, Vertex> = BTreeMap::new();
        let mut orbit_of_label: BTreeMap<Vertex, usize> = BTreeMap::new();
        for t in 0..f {
            for k in 0..3 {
                let o = orbits[3 * t + k];
                let l = corners[t][k];
                let a = *label_of_orbit.entry(o).or_insert(l);
                let b = *orbit_of_label.entry(l).or_insert(o);
                if a != l || b != o {
                    return Err(ComplexError::InconsistentLabels { tri: t, corner: k as u8 });
                }
            }
        }
        let mut edges = Vec::with_capacity(3 * f / 2);
        let mut slot_edge = vec![[EdgeId(usize::MAX); 3]; f];
        for t in 0..f {
            for k in 0..3u8 {
                let s = Slot::new(t, k);
                let p = partner[t][k as usize].0;
                if s < p {
                    let id = EdgeId(edges.len());
                    edges.push([s, p]);
                    slot_edge[t][k as usize] = id;
                    slot_edge[p.tri][p.side as usize] = id;
                }
            }
        }
        let vertices = orbit_of_label.keys().copied().collect();
        Ok(Triangulation { partner, corners, edges, slot_edge, vertices })
    }

    pub fn triangle_count(&self) -> usize {
        self.partner.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn euler(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
    }

    /// Sorted vertex labels.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn max_label(&self) -> Vertex {
        *self.vertices.last().expect("nonempty")
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn partner(&self, s: Slot) -> (Slot, bool) {
        self.partner[s.tri][s.side as usize]
    }

    pub fn corners(&self, t: usize) -> [Vertex; 3] {
        self.corners[t]
    }

    pub fn corner(&self, t: usize, k: u8) -> Vertex {
        self.corners[t][k as usize]
    }

    pub fn edge_of(&self, s: Slot) -> EdgeId {
        self.slot_edge[s.tri][s.side as usize]
    }

    /// The two slots of `e`, representative (smaller) first.
    pub fn edge_slots(&self, e: EdgeId) -> [Slot; 2] {
        self.edges[e.0]
    }

    pub fn is_reversed(&self, e: EdgeId) -> bool {
        self.partner(self.edges[e.0][0]).1
    }

    /// Endpoints of `e` in the representative slot's order.
    pub fn edge_endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        let s = self.edges[e.0][0];
        (self.corner(s.tri, s.start()), self.corner(s.tri, s.end()))
    }

    /// The gluing list, one entry per edge in id order.
    pub fn gluings(&self) -> Vec<Gluing> {
        self.edges
            .iter()
            .map(|&[a, b]| Gluing { a, b, reversed: self.partner(a).1 })
            .collect()
    }

    /// Corner of the partner triangle identified with corner `c` of `s`'s
    /// triangle, where `c` is an endpoint of `s`.
    pub fn glued_corner(&self, s: Slot, c: u8) -> (usize, u8) {
        let (p, rev) = self.partner(s);
        let at_start = if c == s.start() {
            true
        } else {
            debug_assert_eq!(c, s.end(), "corner {c} is not an endpoint of {s}");
            false
        };
        let to_start = at_start != rev;
        (p.tri, if to_start { p.start() } else { p.end() })
    }

    /// All corners carrying label `v`.
    pub fn corners_at(&self, v: Vertex) -> Vec<(usize, u8)> {
        let mut out = Vec::new();
        for (t, c) in self.corners.iter().enumerate() {
            for k in 0..3u8 {
                if c[k as usize] == v {
                    out.push((t, k));
                }
            }
        }
        out
    }

    /// Coherent orientation signs with triangle 0 positive, if one exists.
    pub fn orientation(&self) -> Option<Vec<i8>> {
        let f = self.triangle_count();
        let mut sign = vec![0i8; f];
        sign[0] = 1;
        let mut queue = VecDeque::from([0usize]);
        while let Some(t) = queue.pop_front() {
            for (p, rev) in self.partner[t] {
                let want = if rev { sign[t] } else { -sign[t] };
                if sign[p.tri] == 0 {
                    sign[p.tri] = want;
                    queue.push_back(p.tri);
                } else if sign[p.tri] != want {
                    return None;
                }
            }
        }
        Some(sign)
    }

    pub fn is_orientable(&self) -> bool {
        self.orientation().is_some()
    }

    pub fn classify(&self) -> SurfaceClass {
        let chi = self.euler();
        let n = self.vertex_count();
        if self.is_orientable() {
            SurfaceClass::orientable(((2 - chi) / 2) as u32, n)
        } else {
            SurfaceClass::nonorientable((2 - chi) as u32, n)
        }
    }

    pub fn is_trapped(&self, e: EdgeId) -> bool {
        let [a, b] = self.edges[e.0];
        a.tri == b.tri
    }

    pub fn trapped_edges(&self) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.is_trapped(e)).collect()
    }

    pub fn has_trapped(&self) -> bool {
        self.edges.iter().any(|[a, b]| a.tri == b.tri)
    }

    pub fn nutshells(&self) -> Vec<Nutshell> {
        let mut out = Vec::new();
        for &v in &self.vertices {
            let cs = self.corners_at(v);
            if cs.len() != 2 || cs[0].0 == cs[1].0 {
                continue;
            }
            let (t1, k1) = cs[0];
            let (t2, k2) = cs[1];
            let outer = self.partner(Slot::new(t1, k1)).0;
            if outer == Slot::new(t2, k2) {
                continue;
            }
            out.push(Nutshell { triangles: [t1, t2], center: v });
        }
        out
    }

    pub fn nutshell_at(&self, v: Vertex) -> Option<Nutshell> {
        self.nutshells().into_iter().find(|n| n.center == v)
    }

    pub fn stars(&self) -> Vec<Star> {
        let mut out = Vec::new();
        for &v in &self.vertices {
            let cs = self.corners_at(v);
            if cs.len() != 3 {
                continue;
            }
            let tris = [cs[0].0, cs[1].0, cs[2].0];
            if tris[0] == tris[1] || tris[1] == tris[2] || tris[0] == tris[2] {
                continue;
            }
            out.push(Star { triangles: tris, center: v });
        }
        out
    }

    pub fn star_at(&self, v: Vertex) -> Option<Star> {
        self.stars().into_iter().find(|s| s.center == v)
    }

    /// Isomorphism-invariant byte key.
    pub fn canonical_key(&self, fix_vertex_labels: bool) -> Vec<u8> {
        self.canonical_bytes(None, fix_vertex_labels)
    }

    /// Key over all starting flags; `dirs` adds per-slot orientation bits.
    pub(crate) fn canonical_bytes(&self, dirs: Option<&[[bool; 3]]>, fix_labels: bool) -> Vec<u8> {
        const PERMS: [[u8; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
        let mut best: Option<Vec<u32>> = None;
        for t in 0..self.triangle_count() {
            for perm in PERMS {
                let code = self.encode_from(t, perm, dirs, fix_labels);
                if best.as_ref().is_none_or(|b| code < *b) {
                    best = Some(code);
                }
            }
        }
        let code = best.expect("nonempty");
        let mut bytes = Vec::with_capacity(4 * code.len() + 6);
        bytes.extend_from_slice(&(self.triangle_count() as u32).to_le_bytes());
        bytes.push(u8::from(fix_labels));
        bytes.push(u8::from(dirs.is_some()));
        for x in code {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        bytes
    }

    fn encode_from(&self, start: usize, perm0: [u8; 3], dirs: Option<&[[bool; 3]]>, fix_labels: bool) -> Vec<u32> {
        let f = self.triangle_count();
        let mut new_index = vec![usize::MAX; f];
        let mut perm = vec![[0u8; 3]; f];
        let mut order = Vec::with_capacity(f);
        new_index[start] = 0;
        perm[start] = perm0;
        order.push(start);
        let mut relabel: BTreeMap<Vertex, u32> = BTreeMap::new();
        let mut code = Vec::with_capacity(f * 15);
        let mut head = 0;
        while head < order.len() {
            let t = order[head];
            head += 1;
            let pt = perm[t];
            for c in 0..3u8 {
                let old = Slot::new(t, pt[c as usize]);
                let (p, rev) = self.partner(old);
                if new_index[p.tri] == usize::MAX {
                    new_index[p.tri] = order.len();
                    order.push(p.tri);
                    let (_, at_c1) = self.glued_corner(old, pt[((c + 1) % 3) as usize]);
                    let (_, at_c2) = self.glued_corner(old, pt[((c + 2) % 3) as usize]);
                    perm[p.tri] = [p.side, at_c2, at_c1];
                }
                let pp = perm[p.tri];
                let p_new_side = pp.iter().position(|&x| x == p.side).expect("perm") as u8;
                let flip_here = pt[((c + 1) % 3) as usize] != old.start();
                let flip_there = pp[((p_new_side + 1) % 3) as usize] != p.start();
                code.push(new_index[p.tri] as u32);
                code.push(p_new_side as u32);
                code.push(u32::from(rev ^ flip_here ^ flip_there));
                let label = self.corners[t][pt[c as usize] as usize];
                code.push(if fix_labels {
                    label.0
                } else {
                    let next = relabel.len() as u32;
                    *relabel.entry(label).or_insert(next)
                });
                if let Some(d) = dirs {
                    code.push(u32::from(d[t][old.side as usize] ^ flip_here));
                }
            }
        }
        code
    }
}

fn corner_orbits(partner: &[[(Slot, bool); 3]]) -> Vec<usize> {
    let f = partner.len();
    let mut uf = UnionFind::new(3 * f);
    for t in 0..f {
        for k in 0..3u8 {
            let s = Slot::new(t, k);
            let (p, rev) = partner[t][k as usize];
            let (ps, pe) = if rev { (p.end(), p.start()) } else { (p.start(), p.end()) };
            uf.union(3 * t + s.start() as usize, 3 * p.tri + ps as usize);
            uf.union(3 * t + s.end() as usize, 3 * p.tri + pe as usize);
        }
    }
    (0..3 * f).map(|i| uf.find(i)).collect()
}
