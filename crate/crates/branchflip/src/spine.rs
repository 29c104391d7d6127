//! Dual train track of a branched triangulation and its switching cycles.
//!
//! Switches are triangles, branches are edges. The large branch at a
//! switch is dual to the edge joining the local minimum and maximum.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branching::Branching;
use crate::complex::{EdgeId, Slot, Vertex};
use crate::linalg::{self, q, Q};
use crate::moves::{self, FlipChoice, MoveError};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SpineError {
    #[error("weights violate the switching condition at switch {0}")]
    NotACycle(usize),
    #[error("expected {expected} weights, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("transported weights fail the switching condition at switch {0}")]
    InconsistentTransport(usize),
    #[error(transparent)]
    Move(#[from] MoveError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Switch {
    pub large: EdgeId,
    pub small: [EdgeId; 2],
    /// Slot of the triangle dual to the large branch.
    pub large_slot: u8,
    /// Branching directions of the three sides.
    pub transverse: [bool; 3],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTrack {
    pub branch_count: usize,
    pub switches: Vec<Switch>,
}

impl TrainTrack {
    pub fn switch_count(&self) -> usize {
        self.switches.len()
    }

    /// Switches carrying a one-switch loop.
    pub fn loops(&self) -> Vec<usize> {
        self.switches
            .iter()
            .enumerate()
            .filter(|(_, s)| s.large == s.small[0] || s.large == s.small[1] || s.small[0] == s.small[1])
            .map(|(i, _)| i)
            .collect()
    }

    /// One row per switch: `z(large) - z(small_1) - z(small_2)`.
    pub fn switching_matrix(&self) -> Vec<Vec<Q>> {
        self.switches
            .iter()
            .map(|s| {
                let mut row = vec![q(0); self.branch_count];
                row[s.large.0] += q(1);
                for e in s.small {
                    row[e.0] -= q(1);
                }
                row
            })
            .collect()
    }

    pub fn check(&self, z: &SwitchingCycle) -> Result<(), SpineError> {
        if z.weights.len() != self.branch_count {
            return Err(SpineError::WrongLength { expected: self.branch_count, got: z.weights.len() });
        }
        let r = linalg::mat_vec(&self.switching_matrix(), &z.weights);
        match r.iter().position(|x| !x.is_zero()) {
            Some(i) => Err(SpineError::NotACycle(i)),
            None => Ok(()),
        }
    }
}

pub fn dual_spine(b: &Branching) -> TrainTrack {
    let t = b.triangulation();
    let switches = (0..t.triangle_count())
        .map(|tr| {
            let k = b.one_labelled_corner(tr);
            let e = |s: u8| t.edge_of(Slot::new(tr, s % 3));
            Switch { large: e(k), small: [e(k + 1), e(k + 2)], large_slot: k, transverse: b.triangle_dirs(tr) }
        })
        .collect();
    TrainTrack { branch_count: t.edge_count(), switches }
}

/// Exact per-branch weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchingCycle {
    pub weights: Vec<Q>,
}

impl SwitchingCycle {
    /// Weights as `"p/q"` strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.weights.iter().map(|w| format!("{}/{}", w.numer(), w.denom())).collect()
    }

    pub fn from_strings(s: &[String]) -> Option<Self> {
        s.iter().map(|x| x.parse::<Q>().ok()).collect::<Option<Vec<_>>>().map(|weights| SwitchingCycle { weights })
    }
}

impl fmt::Display for SwitchingCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_strings().join(", "))
    }
}

pub fn cycle_space_basis(track: &TrainTrack) -> Vec<SwitchingCycle> {
    linalg::kernel(&track.switching_matrix(), track.branch_count)
        .into_iter()
        .map(|weights| SwitchingCycle { weights })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConePosition {
    Interior,
    Boundary,
    Outside,
}

pub fn in_cone(track: &TrainTrack, z: &SwitchingCycle) -> Result<ConePosition, SpineError> {
    track.check(z)?;
    Ok(if z.weights.iter().all(Signed::is_positive) {
        ConePosition::Interior
    } else if z.weights.iter().all(|w| !w.is_negative()) {
        ConePosition::Boundary
    } else {
        ConePosition::Outside
    })
}

/// A cycle with every weight at least one, if the switching system has one.
pub fn positive_cycle_exists(track: &TrainTrack) -> Option<SwitchingCycle> {
    let basis = cycle_space_basis(track);
    if basis.is_empty() {
        return None;
    }
    // z = sum y_i basis_i, constraint z(e) >= 1
    let rows: Vec<Vec<Q>> = (0..track.branch_count).map(|e| basis.iter().map(|v| v.weights[e].clone()).collect()).collect();
    let rhs = vec![q(1); track.branch_count];
    let y = linalg::feasible_point(&rows, &rhs, basis.len())?;
    let weights = linalg::mat_vec(&rows, &y);
    debug_assert!(weights.iter().all(|w| *w >= q(1)));
    Some(SwitchingCycle { weights })
}

/// Carries `z` across the flip at `e`: persistent branches keep their
/// weights, the new diagonal is fixed by one new switch and checked at the
/// other.
pub fn transport_cycle(b: &Branching, e: EdgeId, choice: FlipChoice, z: &SwitchingCycle) -> Result<(Branching, SwitchingCycle), SpineError> {
    let track = dual_spine(b);
    track.check(z)?;
    let out = moves::flip(b, e, choice)?;
    let new_track = dual_spine(&out.branching);
    let mut weights = vec![q(0); new_track.branch_count];
    for (old, new) in out.edge_map.iter().enumerate() {
        if let Some(n) = new {
            weights[n.0] = z.weights[old].clone();
        }
    }
    let matrix = new_track.switching_matrix();
    let d = out.new_edge.0;
    let solver = (0..matrix.len()).find(|&r| !matrix[r][d].is_zero()).expect("new diagonal meets a switch");
    let rest: Q = matrix[solver].iter().zip(&weights).enumerate().filter(|(k, _)| *k != d).map(|(_, (a, w))| a * w).sum();
    weights[d] = -rest / &matrix[solver][d];
    let cycle = SwitchingCycle { weights };
    let r = linalg::mat_vec(&matrix, &cycle.weights);
    if let Some(bad) = r.iter().position(|x| !x.is_zero()) {
        return Err(SpineError::InconsistentTransport(bad));
    }
    Ok((out.branching, cycle))
}

/// A corner in the link of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCorner {
    pub tri: usize,
    pub corner: u8,
    pub one_labelled: bool,
}

/// Corners around `v` in cyclic order.
pub fn vertex_link(b: &Branching, v: Vertex) -> Vec<LinkCorner> {
    let t = b.triangulation();
    let Some(&(t0, k0)) = t.corners_at(v).first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let (mut tr, mut k) = (t0, k0);
    // leave through the side running from corner k to k + 1
    let mut exit = (k + 2) % 3;
    loop {
        out.push(LinkCorner { tri: tr, corner: k, one_labelled: b.one_labelled_corner(tr) == k });
        let s = Slot::new(tr, exit);
        let (u, m) = t.glued_corner(s, k);
        let entered = t.partner(s).0.side;
        // the other side of u at corner m
        let next_exit = [(m + 1) % 3, (m + 2) % 3].into_iter().find(|&x| x != entered).expect("two sides");
        tr = u;
        k = m;
        exit = next_exit;
        if tr == t0 && k == k0 {
            break;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Black,
    White,
}

/// Arc of a link between consecutive 1-labelled corners (positions in the
/// link sequence).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkArc {
    pub from: usize,
    pub to: usize,
    pub color: Color,
}

pub fn bicolor_link(b: &Branching, v: Vertex) -> Vec<LinkArc> {
    let link = vertex_link(b, v);
    let marks: Vec<usize> = link.iter().enumerate().filter(|(_, c)| c.one_labelled).map(|(i, _)| i).collect();
    (0..marks.len())
        .map(|i| LinkArc {
            from: marks[i],
            to: marks[(i + 1) % marks.len()],
            color: if i % 2 == 0 { Color::Black } else { Color::White },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;

    #[test]
    fn theta_graph() {
        let (_, b) = builders::sphere3();
        let tt = dual_spine(&b);
        assert_eq!((tt.switch_count(), tt.branch_count), (2, 3));
        assert!(tt.loops().is_empty());
        assert_eq!(cycle_space_basis(&tt).len(), 2);
    }

    #[test]
    fn torus_dimension_two() {
        for b in crate::branching::enumerate_branchings(&builders::torus1().0) {
            assert_eq!(cycle_space_basis(&dual_spine(&b)).len(), 2);
        }
    }

    #[test]
    fn loops_match_trapped_edges() {
        let (t, b) = builders::klein_bigons();
        assert_eq!(dual_spine(&b).loops().len(), t.trapped_edges().len());
    }

    #[test]
    fn cone_positions() {
        let (_, b) = builders::sphere3();
        let tt = dual_spine(&b);
        let zero = SwitchingCycle { weights: vec![q(0); 3] };
        assert_eq!(in_cone(&tt, &zero).unwrap(), ConePosition::Boundary);
        let w = positive_cycle_exists(&tt).unwrap();
        assert_eq!(in_cone(&tt, &w).unwrap(), ConePosition::Interior);
        let bad = SwitchingCycle { weights: vec![q(1), q(0), q(0)] };
        assert!(matches!(in_cone(&tt, &bad), Err(SpineError::NotACycle(_))));
    }

    #[test]
    fn link_counts() {
        let (_, b) = builders::tetrahedron();
        for &v in b.triangulation().vertices() {
            let link = vertex_link(&b, v);
            assert_eq!(link.len(), 3);
            let ones = link.iter().filter(|c| c.one_labelled).count() as u32;
            assert_eq!(ones, 2 * b.d_b(v));
            assert_eq!(bicolor_link(&b, v).len() as u32, 2 * b.d_b(v));
        }
    }

    #[test]
    fn strings_round_trip() {
        let z = SwitchingCycle { weights: vec![q(3) / q(4), q(-2)] };
        assert_eq!(z.to_strings(), ["3/4", "-2/1"]);
        assert_eq!(SwitchingCycle::from_strings(&z.to_strings()).unwrap(), z);
    }
}
