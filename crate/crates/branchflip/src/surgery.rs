//! Local rebuilds shared by all moves.

use crate::complex::{ComplexError, EdgeId, Slot, Triangulation, Vertex};

/// New triangle list plus how old slots map into it.
pub(crate) struct Patch {
    pub corners: Vec<[Vertex; 3]>,
    /// Old slot -> (new slot, whether the fixed order flips).
    pub slot_map: Vec<[Option<(Slot, bool)>; 3]>,
    /// Fresh gluings (a, b, reversed) with the direction along `a`.
    pub extra: Vec<(Slot, Slot, bool, bool)>,
    /// Old edges that are not carried over.
    pub dropped: Vec<EdgeId>,
}

pub(crate) struct Rebuilt {
    pub tri: Triangulation,
    pub forward: Option<Vec<bool>>,
    /// Old edge -> new edge for carried-over edges.
    pub edge_map: Vec<Option<EdgeId>>,
}

impl Patch {
    /// Identity on every triangle except `removed`, which are deleted with
    /// the survivors shifted down; `corners` starts as the survivors' labels.
    pub fn compacting(old: &Triangulation, removed: &[usize]) -> Self {
        let mut slot_map = vec![[None; 3]; old.triangle_count()];
        let mut corners = Vec::new();
        for t in 0..old.triangle_count() {
            if removed.contains(&t) {
                continue;
            }
            let nt = corners.len();
            for k in 0..3u8 {
                slot_map[t][k as usize] = Some((Slot::new(nt, k), false));
            }
            corners.push(old.corners(t));
        }
        Patch { corners, slot_map, extra: Vec::new(), dropped: Vec::new() }
    }

    pub fn map(&mut self, old: Slot, new: Slot, flip: bool) {
        self.slot_map[old.tri][old.side as usize] = Some((new, flip));
    }

    pub fn unmap(&mut self, old: Slot) {
        self.slot_map[old.tri][old.side as usize] = None;
    }

    pub fn new_index(&self, old_tri: usize) -> Option<usize> {
        self.slot_map[old_tri].iter().flatten().next().map(|(s, _)| s.tri)
    }

    pub fn apply(&self, old: &Triangulation, old_forward: Option<&[bool]>) -> Result<Rebuilt, ComplexError> {
        let f = self.corners.len();
        let blank = (Slot::new(usize::MAX, 0), false);
        let mut partner = vec![[blank; 3]; f];
        let mut dirs = vec![[None::<bool>; 3]; f];
        let mut set = |s: Slot, p: Slot, rev: bool, d: Option<bool>, partner: &mut Vec<[(Slot, bool); 3]>| {
            assert_eq!(partner[s.tri][s.side as usize].0.tri, usize::MAX, "slot {s} glued twice");
            partner[s.tri][s.side as usize] = (p, rev);
            dirs[s.tri][s.side as usize] = d;
        };
        for &(a, b, rev, d) in &self.extra {
            set(a, b, rev, Some(d), &mut partner);
            set(b, a, rev, Some(d ^ rev), &mut partner);
        }
        let old_dir = |s: Slot| -> Option<bool> {
            old_forward.map(|fw| {
                let e = old.edge_of(s);
                if old.edge_slots(e)[0] == s {
                    fw[e.0]
                } else {
                    fw[e.0] ^ old.partner(s).1
                }
            })
        };
        for e in old.edges() {
            if self.dropped.contains(&e) {
                continue;
            }
            let [a, b] = old.edge_slots(e);
            let (na, fa) = self.slot_map[a.tri][a.side as usize].expect("carried slot is mapped");
            let (nb, fb) = self.slot_map[b.tri][b.side as usize].expect("carried slot is mapped");
            let rev = old.partner(a).1 ^ fa ^ fb;
            set(na, nb, rev, old_dir(a).map(|d| d ^ fa), &mut partner);
            set(nb, na, rev, old_dir(b).map(|d| d ^ fb), &mut partner);
        }
        let tri = Triangulation::from_parts(partner, self.corners.clone())?;
        let forward = old_forward.map(|_| {
            tri.edges()
                .map(|e| {
                    let [a, b] = tri.edge_slots(e);
                    let da = dirs[a.tri][a.side as usize].expect("direction known");
                    let db = dirs[b.tri][b.side as usize].expect("direction known");
                    debug_assert_eq!(db, da ^ tri.partner(a).1);
                    da
                })
                .collect()
        });
        let edge_map = old
            .edges()
            .map(|e| {
                if self.dropped.contains(&e) {
                    return None;
                }
                let a = old.edge_slots(e)[0];
                self.slot_map[a.tri][a.side as usize].map(|(s, _)| tri.edge_of(s))
            })
            .collect();
        Ok(Rebuilt { tri, forward, edge_map })
    }
}
