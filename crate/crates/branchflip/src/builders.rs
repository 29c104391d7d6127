//! Distinguished triangulations, bricks, chain assemblies and random
//! instances.
//!
//! Polygons are written as words: a lowercase letter is a side traversed
//! along its label, an uppercase letter against it. A polygon with `m`
//! sides is fanned from its first corner into `m - 2` triangles.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::branching::{acyclic, enumerate_branchings, Branching, BranchingError};
use crate::complex::{ComplexError, EdgeId, Gluing, Slot, SurfaceClass, Triangulation};
use crate::moves::{self, BubbleChoice, MoveError};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("no chain build for {0}")]
    UnsupportedSurface(SurfaceClass),
    #[error("{surface} needs at least {min} vertices")]
    BadVertexCount { surface: SurfaceClass, min: usize },
    #[error("unknown build `{0}`")]
    UnknownBuild(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error(transparent)]
    Branching(#[from] BranchingError),
}

/// Fan triangulation of a list of polygon words. Letters seen once are
/// left open and returned with their slot.
#[derive(Clone, Debug)]
pub struct PolygonComplex {
    pub triangle_count: usize,
    pub gluings: Vec<Gluing>,
    pub open: Vec<(char, Slot)>,
    /// First triangle of each word.
    pub offsets: Vec<usize>,
}

pub fn polygons(words: &[&str]) -> PolygonComplex {
    let mut occurrences: BTreeMap<char, Vec<(Slot, bool)>> = BTreeMap::new();
    let mut gluings = Vec::new();
    let mut offsets = Vec::new();
    let mut off = 0;
    for w in words {
        let letters: Vec<char> = w.chars().collect();
        let m = letters.len();
        assert!(m >= 3, "polygon `{w}` needs three sides");
        offsets.push(off);
        for (k, &ch) in letters.iter().enumerate() {
            let slot = match k {
                0 => Slot::new(off, 2),
                k if k == m - 1 => Slot::new(off + m - 3, 1),
                k => Slot::new(off + k - 1, 0),
            };
            occurrences.entry(ch.to_ascii_lowercase()).or_default().push((slot, ch.is_ascii_uppercase()));
        }
        for i in 0..m - 3 {
            gluings.push(Gluing { a: Slot::new(off + i, 1), b: Slot::new(off + i + 1, 2), reversed: true });
        }
        off += m - 2;
    }
    let mut open = Vec::new();
    for (ch, occ) in occurrences {
        match occ.as_slice() {
            [(a, ia), (b, ib)] => gluings.push(Gluing { a: *a, b: *b, reversed: ia != ib }),
            [(a, _)] => open.push((ch, *a)),
            _ => panic!("letter `{ch}` used more than twice"),
        }
    }
    PolygonComplex { triangle_count: off, gluings, open, offsets }
}

fn closed(words: &[&str]) -> Arc<Triangulation> {
    let p = polygons(words);
    assert!(p.open.is_empty());
    Arc::new(Triangulation::build(p.triangle_count, &p.gluings).expect("builder table is valid"))
}

fn first_branching(t: &Arc<Triangulation>) -> Branching {
    enumerate_branchings(t).into_iter().next().expect("every triangulation can be branched")
}

/// Two copies of a triangle glued along their boundary.
pub fn sphere3() -> (Arc<Triangulation>, Branching) {
    let g: Vec<_> = (0..3).map(|i| Gluing::new((0, i), (1, i), false)).collect();
    let t = Arc::new(Triangulation::build(2, &g).expect("valid"));
    let b = Branching::from_label_order(Arc::clone(&t)).expect("three distinct corners");
    (t, b)
}

/// Square with opposite sides identified; the diagonal is slot 1 of triangle 0.
pub fn torus1() -> (Arc<Triangulation>, Branching) {
    let t = closed(&["abAB"]);
    let b = first_branching(&t);
    (t, b)
}

/// Square `a b a b^-1`.
pub fn klein_quad() -> (Arc<Triangulation>, Branching) {
    let t = closed(&["abaB"]);
    let b = first_branching(&t);
    (t, b)
}

/// Two truncated bigons `a a c` and `b b c^-1` glued along `c`.
pub fn klein_bigons() -> (Arc<Triangulation>, Branching) {
    let t = closed(&["aac", "bbC"]);
    let b = first_branching(&t);
    (t, b)
}

/// Bigon with identified sides, triangulated with one inner vertex: a
/// nutshell whose two outer sides are glued crosswise.
pub fn projective2() -> (Arc<Triangulation>, Branching) {
    let g = vec![
        Gluing::new((0, 0), (1, 0), false),
        Gluing::new((0, 2), (1, 1), true),
        Gluing::new((0, 1), (1, 2), true),
    ];
    let t = Arc::new(Triangulation::build(2, &g).expect("valid"));
    let b = first_branching(&t);
    (t, b)
}

/// Boundary of a tetrahedron.
pub fn tetrahedron() -> (Arc<Triangulation>, Branching) {
    let d = distinguished(SurfaceClass::orientable(0, 4)).expect("sphere with four vertices");
    (d.tri, d.reference)
}

/// Builds addressable by name.
pub fn named(name: &str) -> Result<(Arc<Triangulation>, Branching), BuildError> {
    match name {
        "sphere3" => Ok(sphere3()),
        "torus1" => Ok(torus1()),
        "klein_quad" => Ok(klein_quad()),
        "klein_bigons" => Ok(klein_bigons()),
        "projective2" => Ok(projective2()),
        "tetrahedron" => Ok(tetrahedron()),
        other => Err(BuildError::UnknownBuild(other.to_string())),
    }
}

pub const NAMED_BUILDS: [&str; 6] = ["sphere3", "torus1", "klein_quad", "klein_bigons", "projective2", "tetrahedron"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BrickKind {
    Torus1p,
    Torus2p,
    Klein1p,
    Proj1p,
}

impl BrickKind {
    /// Template word; `c` is the left connection side, `d` the right one.
    pub fn word(self) -> &'static str {
        match self {
            BrickKind::Torus1p => "abABc",
            // twice-truncated square: its two open sides become loops once capped
            BrickKind::Torus2p => "acbAdB",
            BrickKind::Klein1p => "abaBc",
            // truncated bigon
            BrickKind::Proj1p => "aac",
        }
    }
}

/// A surface-with-boundary fragment whose open sides become connection
/// edges.
#[derive(Clone, Debug)]
pub struct Brick {
    pub kind: BrickKind,
    pub triangle_count: usize,
    pub gluings: Vec<Gluing>,
    pub connections: Vec<Slot>,
}

/// Per-slot directions of a branched brick.
pub type SlotDirs = Vec<[bool; 3]>;

impl Brick {
    pub fn new(kind: BrickKind) -> Self {
        let p = polygons(&[kind.word()]);
        let connections = p.open.iter().map(|&(_, s)| s).collect();
        Brick { kind, triangle_count: p.triangle_count, gluings: p.gluings, connections }
    }

    fn dirs_from(&self, bits: u32) -> SlotDirs {
        let mut d = vec![[false; 3]; self.triangle_count];
        for (i, g) in self.gluings.iter().enumerate() {
            let v = bits >> i & 1 == 1;
            d[g.a.tri][g.a.side as usize] = v;
            d[g.b.tri][g.b.side as usize] = v ^ g.reversed;
        }
        for (j, s) in self.connections.iter().enumerate() {
            d[s.tri][s.side as usize] = bits >> (self.gluings.len() + j) & 1 == 1;
        }
        d
    }

    /// All branchings of the brick.
    pub fn branchings(&self) -> Vec<SlotDirs> {
        let vars = self.gluings.len() + self.connections.len();
        (0..1u32 << vars)
            .map(|bits| self.dirs_from(bits))
            .filter(|d| d.iter().all(|&t| acyclic(t)))
            .collect()
    }

    pub fn connection_ambiguous(&self, d: &SlotDirs, s: Slot) -> bool {
        let mut t = d[s.tri];
        t[s.side as usize] = !t[s.side as usize];
        acyclic(t)
    }

    /// First branching in which every connection edge is ambiguous; for the
    /// bigon cap, whose connection is never ambiguous, the first one.
    pub fn reference(&self) -> SlotDirs {
        self.reference_with(&[])
    }

    fn reference_with(&self, fixed: &[(Slot, bool)]) -> SlotDirs {
        let need_ambiguous = self.kind != BrickKind::Proj1p;
        self.branchings()
            .into_iter()
            .find(|d| {
                fixed.iter().all(|&(s, v)| d[s.tri][s.side as usize] == v)
                    && (!need_ambiguous || self.connections.iter().all(|&s| self.connection_ambiguous(d, s)))
            })
            .expect("brick admits the requested reference branching")
    }
}

/// A chain assembly with its reference branching.
#[derive(Clone, Debug)]
pub struct Chain {
    pub tri: Arc<Triangulation>,
    pub reference: Branching,
    /// Connection edges from left to right.
    pub connections: Vec<EdgeId>,
    /// Connection slot inside the first (one-pierced torus) brick.
    pub first_slot: Slot,
    /// Connection edge of a bigon cap, if any.
    pub cap_connection: Option<EdgeId>,
}

fn chain_kinds(orientable: bool, k: u32) -> Option<Vec<BrickKind>> {
    let mut kinds = vec![BrickKind::Torus1p];
    if orientable {
        if k < 2 {
            return None;
        }
        kinds.extend(std::iter::repeat_n(BrickKind::Torus2p, k as usize - 2));
        kinds.push(BrickKind::Torus1p);
    } else {
        if k < 3 {
            return None;
        }
        let (middle, cap) = if k % 2 == 1 {
            ((k - 1) / 2 - 1, BrickKind::Proj1p)
        } else {
            ((k - 2) / 2 - 1, BrickKind::Klein1p)
        };
        kinds.extend(std::iter::repeat_n(BrickKind::Torus2p, middle as usize));
        kinds.push(cap);
    }
    Some(kinds)
}

/// Bricks glued in a row; only surfaces with negative Euler
/// characteristic are supported.
pub fn chain_surface(orientable: bool, genus_or_crosscaps: u32) -> Result<Chain, BuildError> {
    let unsupported = || {
        let s = if orientable {
            SurfaceClass::orientable(genus_or_crosscaps, 1)
        } else {
            SurfaceClass::nonorientable(genus_or_crosscaps.max(1), 1)
        };
        BuildError::UnsupportedSurface(s)
    };
    let kinds = chain_kinds(orientable, genus_or_crosscaps).ok_or_else(unsupported)?;
    let mut pool = ('e'..='z').filter(|c| *c != 'c' && *c != 'd');
    let mut words = Vec::new();
    let mut joints: Vec<char> = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let mut map: BTreeMap<char, char> = BTreeMap::new();
        let last = i + 1 == kinds.len();
        let mut word = String::new();
        for ch in kind.word().chars() {
            let lower = ch.to_ascii_lowercase();
            let (target, invert) = match (lower, i) {
                // left connection of every brick after the first, glued reversed
                ('c', i) if i > 0 => (joints[i - 1], true),
                ('c', 0) | ('d', _) => {
                    let j = *map.entry(lower).or_insert_with(|| pool.next().expect("letters"));
                    if !last || lower == 'd' {
                        joints.push(j);
                    }
                    (j, false)
                }
                _ => (*map.entry(lower).or_insert_with(|| pool.next().expect("letters")), false),
            };
            let flip = ch.is_ascii_uppercase() ^ invert;
            word.push(if flip { target.to_ascii_uppercase() } else { target });
        }
        words.push(word);
    }
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    let p = polygons(&refs);
    assert!(p.open.is_empty(), "chain is closed");
    let tri = Arc::new(Triangulation::build(p.triangle_count, &p.gluings)?);

    // connection slots in each brick: (left, right) in global numbering
    let joint_slot = |brick: usize, side: char| -> Slot {
        let b = Brick::new(kinds[brick]);
        let local = polygons(&[kinds[brick].word()]);
        let pos = local.open.iter().position(|&(c, _)| c == side).expect("connection letter");
        let s = b.connections[pos];
        Slot::new(s.tri + p.offsets[brick], s.side)
    };
    let mut dirs = vec![[false; 3]; tri.triangle_count()];
    let mut carry: Option<bool> = None;
    let mut connections = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let brick = Brick::new(*kind);
        let local = polygons(&[kind.word()]);
        let left_pos = local.open.iter().position(|&(c, _)| c == 'c');
        let mut fixed = Vec::new();
        if let (Some(d), Some(pos)) = (carry, left_pos.filter(|_| i > 0)) {
            fixed.push((brick.connections[pos], d));
        }
        let d = brick.reference_with(&fixed);
        for (t, row) in d.iter().enumerate() {
            dirs[t + p.offsets[i]] = *row;
        }
        let right = if i == 0 { Some('c') } else if *kind == BrickKind::Torus2p { Some('d') } else { None };
        if let Some(side) = right {
            let s = joint_slot(i, side);
            connections.push(tri.edge_of(s));
            // reversed gluing: the neighbour sees the opposite slot direction
            carry = Some(!dirs[s.tri][s.side as usize]);
        }
    }
    let forward = tri
        .edges()
        .map(|e| {
            let s = tri.edge_slots(e)[0];
            dirs[s.tri][s.side as usize]
        })
        .collect();
    let reference = Branching::new(Arc::clone(&tri), forward)?;
    let first_slot = joint_slot(0, 'c');
    let cap_connection = (kinds.last() == Some(&BrickKind::Proj1p)).then(|| *connections.last().expect("joint"));
    Ok(Chain { tri, reference, connections, first_slot, cap_connection })
}

/// A distinguished triangulation with its reference branching.
#[derive(Clone, Debug)]
pub struct Distinguished {
    pub tri: Arc<Triangulation>,
    pub reference: Branching,
    /// Connection edge of a bigon cap (odd crosscap chains), if any.
    pub cap_connection: Option<EdgeId>,
}

/// Least `n` with `chi - n < 0`.
pub fn min_vertices(s: &SurfaceClass) -> usize {
    if s.euler >= 0 {
        s.euler as usize + 1
    } else {
        1
    }
}

/// Where slot `s` lands after a 1->3 move on triangle `tr` of an
/// `f`-triangle complex.
pub(crate) fn track_13(s: Slot, tr: usize, f: usize) -> Slot {
    if s.tri != tr {
        return s;
    }
    match s.side {
        0 => s,
        1 => Slot::new(f, 1),
        _ => Slot::new(f + 1, 2),
    }
}

/// Repeated 1->3 moves on the triangle holding `slot`, each new vertex a
/// source.
fn refine(mut b: Branching, mut slot: Slot, times: usize, mut cap: Option<Slot>) -> Result<(Branching, Option<Slot>), BuildError> {
    for _ in 0..times {
        let f = b.triangulation().triangle_count();
        let tr = slot.tri;
        b = moves::stellar_13(&b, tr, [false; 3])?;
        slot = track_13(slot, tr, f);
        cap = cap.map(|c| track_13(c, tr, f));
    }
    Ok((b, cap))
}

pub fn distinguished(s: SurfaceClass) -> Result<Distinguished, BuildError> {
    let n = s.n_vertices;
    let min = min_vertices(&s);
    if n < min {
        return Err(BuildError::BadVertexCount { surface: s, min });
    }
    let extra = n - min;
    let done = |b: Branching, cap: Option<Slot>| {
        let cap_connection = cap.map(|c| b.triangulation().edge_of(c));
        Distinguished { tri: Arc::clone(b.triangulation()), reference: b, cap_connection }
    };
    match (s.orientable, s.genus_or_crosscaps) {
        (true, 0) => {
            let (_, b) = sphere3();
            let (b, _) = refine(b, Slot::new(0, 0), extra, None)?;
            Ok(done(b, None))
        }
        (true, 1) => {
            let (_, b) = torus1();
            let (b, _) = refine(b, Slot::new(0, 1), extra, None)?;
            Ok(done(b, None))
        }
        (false, 2) => {
            let (_, b) = klein_quad();
            let (b, _) = refine(b, Slot::new(0, 1), extra, None)?;
            Ok(done(b, None))
        }
        (false, 1) => {
            let (t, b) = projective2();
            if extra == 0 {
                return Ok(done(b, None));
            }
            let spoke = t.edges().find(|&e| {
                let [x, y] = t.edge_slots(e);
                x.tri != y.tri && t.partner(x).1
            });
            let spoke = spoke.expect("nutshell has inner edges");
            let f = t.triangle_count();
            let source = BubbleChoice { tail_to_new: false, head_to_new: false };
            let b = moves::bubble_plus(&b, spoke, source)?;
            let (b, _) = refine(b, Slot::new(f, 2), extra - 1, None)?;
            Ok(done(b, None))
        }
        (orientable, k) => {
            let chain = chain_surface(orientable, k)?;
            let cap = chain.cap_connection.map(|e| chain.tri.edge_slots(e)[0]);
            let (b, cap) = refine(chain.reference, chain.first_slot, extra, cap)?;
            Ok(done(b, cap))
        }
    }
}

/// Flips the bigon cap's connection edge, removing the cap's trapped edge.
pub fn trapped_free_variant(d: &Distinguished) -> Result<Branching, BuildError> {
    match d.cap_connection {
        None => Ok(d.reference.clone()),
        Some(e) => {
            let (_, b) = moves::enumerate_bflips(&d.reference, e)?.into_iter().next().expect("one or two");
            Ok(b)
        }
    }
}

/// Short name such as `genus2_n1` or `crosscaps3_n1`.
pub fn slug(s: &SurfaceClass) -> String {
    match (s.orientable, s.genus_or_crosscaps) {
        (true, 0) => format!("sphere_n{}", s.n_vertices),
        (true, g) => format!("genus{g}_n{}", s.n_vertices),
        (false, k) => format!("crosscaps{k}_n{}", s.n_vertices),
    }
}

/// Named instances used by the claim runner and the tests.
pub fn corpus() -> Vec<(String, Branching)> {
    let mut out: Vec<(String, Branching)> = Vec::new();
    for name in NAMED_BUILDS {
        out.push((name.to_string(), named(name).expect("named build").1));
    }
    let families = [
        SurfaceClass::orientable(0, 5),
        SurfaceClass::orientable(1, 2),
        SurfaceClass::orientable(1, 3),
        SurfaceClass::nonorientable(1, 3),
        SurfaceClass::nonorientable(1, 4),
        SurfaceClass::nonorientable(2, 2),
        SurfaceClass::orientable(2, 1),
        SurfaceClass::orientable(2, 2),
        SurfaceClass::orientable(3, 1),
        SurfaceClass::nonorientable(3, 1),
        SurfaceClass::nonorientable(4, 1),
        SurfaceClass::nonorientable(5, 1),
    ];
    for s in families {
        let d = distinguished(s).expect("supported family");
        if d.cap_connection.is_some() {
            out.push((format!("{}_star", slug(&s)), trapped_free_variant(&d).expect("cap flip")));
        }
        out.push((slug(&s), d.reference));
    }
    out
}

/// A branching found by randomized backtracking.
pub fn random_branching<R: Rng>(tri: &Arc<Triangulation>, rng: &mut R) -> Branching {
    let e_count = tri.edge_count();
    let mut order: Vec<usize> = (0..e_count).collect();
    order.shuffle(rng);
    let mut position = vec![0; e_count];
    for (i, &e) in order.iter().enumerate() {
        position[e] = i;
    }
    let mut check_at: Vec<Vec<usize>> = vec![Vec::new(); e_count];
    for t in 0..tri.triangle_count() {
        let last = (0..3).map(|k| position[tri.edge_of(Slot::new(t, k)).0]).max().expect("three");
        check_at[last].push(t);
    }
    let values: Vec<[bool; 2]> = (0..e_count).map(|_| if rng.gen() { [true, false] } else { [false, true] }).collect();
    let mut forward = vec![false; e_count];
    fn go(
        i: usize,
        tri: &Triangulation,
        order: &[usize],
        values: &[[bool; 2]],
        check_at: &[Vec<usize>],
        forward: &mut Vec<bool>,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        for v in values[i] {
            forward[order[i]] = v;
            let ok = check_at[i].iter().all(|&t| {
                let d = [0, 1, 2].map(|k| {
                    let s = Slot::new(t, k);
                    let e = tri.edge_of(s);
                    forward[e.0] ^ (tri.edge_slots(e)[1] == s && tri.partner(s).1)
                });
                acyclic(d)
            });
            if ok && go(i + 1, tri, order, values, check_at, forward) {
                return true;
            }
        }
        false
    }
    assert!(go(0, tri, &order, &values, &check_at, &mut forward), "every triangulation can be branched");
    Branching::new(Arc::clone(tri), forward).expect("search returns a branching")
}

/// Distinguished instance mutated by a seeded walk of legal branched flips.
pub fn random_instance(seed: u64, surface: SurfaceClass, walk_length: usize) -> Result<Branching, BuildError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_walk(&distinguished(surface)?.reference, walk_length, &mut rng)
}

/// Walk of uniformly chosen legal branched flips.
pub fn random_walk<R: Rng>(start: &Branching, steps: usize, rng: &mut R) -> Result<Branching, BuildError> {
    let mut b = start.clone();
    for _ in 0..steps {
        let options = moves::all_bflips(&b);
        let Some(&(e, c)) = options.choose(rng) else { break };
        b = moves::flip(&b, e, c)?.branching;
    }
    Ok(b)
}
