//! JSON documents, cycle serialization and Graphviz export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branching::Branching;
use crate::complex::{Gluing, Slot, Triangulation, Vertex};
use crate::moves::{MoveLog, State};
use crate::spine::SwitchingCycle;
use crate::transit::InversionGraph;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn at(path: impl Into<String>, message: impl ToString) -> Self {
        SchemaError { path: path.into(), message: message.to_string() }
    }
}

/// One gluing: `[triangle, side]` pairs and the reversal bit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingDoc {
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangulationDoc {
    pub triangle_count: usize,
    pub gluings: Vec<GluingDoc>,
    pub labels: Vec<[u32; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub format_version: u32,
    pub triangulation: TriangulationDoc,
    /// Edge orientations by edge id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<MoveLog>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Document {
    pub fn from_triangulation(t: &Triangulation) -> Self {
        let gluings = t
            .gluings()
            .into_iter()
            .map(|g| GluingDoc { a: [g.a.tri, g.a.side as usize], b: [g.b.tri, g.b.side as usize], reversed: g.reversed })
            .collect();
        let labels = (0..t.triangle_count()).map(|i| t.corners(i).map(|v| v.0)).collect();
        Document {
            format_version: FORMAT_VERSION,
            triangulation: TriangulationDoc { triangle_count: t.triangle_count(), gluings, labels },
            branching: None,
            log: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_branching(b: &Branching) -> Self {
        let mut d = Self::from_triangulation(b.triangulation());
        d.branching = Some(b.orientation().to_vec());
        d
    }

    pub fn from_state(s: &State) -> Self {
        match s {
            State::Naked(t) => Self::from_triangulation(t),
            State::Branched(b) => Self::from_branching(b),
        }
    }

    pub fn with_log(mut self, log: MoveLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn with_meta(mut self, key: &str, value: serde_json::Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SchemaError::at(if path == "." { "$".to_string() } else { format!("$.{path}") }, e.into_inner())
        })?;
        if doc.format_version != FORMAT_VERSION {
            return Err(SchemaError::at("$.format_version", format!("unsupported version {}", doc.format_version)));
        }
        doc.triangulation()?;
        if doc.branching.is_some() {
            doc.branching_value()?;
        }
        Ok(doc)
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn triangulation(&self) -> Result<Arc<Triangulation>, SchemaError> {
        let td = &self.triangulation;
        let mut gluings = Vec::with_capacity(td.gluings.len());
        for (i, g) in td.gluings.iter().enumerate() {
            for (name, s) in [("a", g.a), ("b", g.b)] {
                if s[1] > 2 {
                    return Err(SchemaError::at(format!("$.triangulation.gluings[{i}].{name}[1]"), "side must be 0, 1 or 2"));
                }
            }
            gluings.push(Gluing { a: Slot::new(g.a[0], g.a[1] as u8), b: Slot::new(g.b[0], g.b[1] as u8), reversed: g.reversed });
        }
        let labels = td.labels.iter().map(|l| l.map(Vertex)).collect();
        Triangulation::build_labelled(td.triangle_count, &gluings, labels)
            .map(Arc::new)
            .map_err(|e| SchemaError::at("$.triangulation", e))
    }

    fn branching_value(&self) -> Result<Option<Branching>, SchemaError> {
        let Some(fw) = &self.branching else { return Ok(None) };
        let t = self.triangulation()?;
        Branching::new(t, fw.clone()).map(Some).map_err(|e| SchemaError::at("$.branching", e))
    }

    pub fn branching(&self) -> Result<Branching, SchemaError> {
        self.branching_value()?.ok_or_else(|| SchemaError::at("$.branching", "missing"))
    }

    pub fn state(&self) -> Result<State, SchemaError> {
        Ok(match self.branching_value()? {
            Some(b) => State::Branched(b),
            None => State::Naked(self.triangulation()?),
        })
    }
}

/// Cycles as arrays of `"p/q"` strings indexed by branch id.
pub fn cycles_json(cycles: &[SwitchingCycle]) -> serde_json::Value {
    serde_json::Value::Array(cycles.iter().map(|c| serde_json::json!(c.to_strings())).collect())
}

/// Undirected graph with string node labels, for Graphviz output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DotGraph {
    pub name: String,
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize, String)>,
}

impl DotGraph {
    /// Nodes are ordered by canonical key, ties by enumeration order.
    pub fn from_inversion(g: &InversionGraph) -> Self {
        let mut order: Vec<usize> = (0..g.nodes.len()).collect();
        order.sort_by(|&a, &b| g.keys[a].cmp(&g.keys[b]).then(a.cmp(&b)));
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let nodes = order
            .iter()
            .map(|&i| g.nodes[i].orientation().iter().map(|&f| if f { '1' } else { '0' }).collect())
            .collect();
        let mut edges: Vec<(usize, usize, String)> = g
            .edges
            .iter()
            .map(|&(i, j, e)| {
                let (a, b) = (rank[i].min(rank[j]), rank[i].max(rank[j]));
                (a, b, format!("e{}", e.0))
            })
            .collect();
        edges.sort();
        DotGraph { name: "inversions".into(), nodes, edges }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let name = if self.name.is_empty() { "g" } else { &self.name };
        writeln!(s, "graph {name} {{").expect("string write");
        for (i, n) in self.nodes.iter().enumerate() {
            writeln!(s, "  n{i} [label=\"{n}\"];").expect("string write");
        }
        for (a, b, l) in &self.edges {
            writeln!(s, "  n{a} -- n{b} [label=\"{l}\"];").expect("string write");
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;
    use crate::moves::{Move, MoveLog};
    use crate::transit::inversion_graph;

    #[test]
    fn sphere_round_trip() {
        let (_, b) = builders::sphere3();
        let text = Document::from_branching(&b).emit();
        let back = Document::parse(&text).unwrap();
        assert_eq!(back.branching().unwrap(), b);
        assert_eq!(back.emit(), text);
    }

    #[test]
    fn log_round_trip() {
        let (_, b) = builders::torus1();
        let s = State::Branched(b);
        let mut log = MoveLog::new(&s);
        log.moves.push(Move::Invert { edge: crate::EdgeId(0) });
        let doc = Document::from_state(&s).with_log(log.clone());
        let back = Document::parse(&doc.emit()).unwrap();
        assert_eq!(back.log, Some(log));
    }

    #[test]
    fn corrupt_gluing_has_path() {
        let (t, _) = builders::sphere3();
        let mut doc = Document::from_triangulation(&t);
        doc.triangulation.gluings[1].a = [0, 7];
        let err = Document::parse(&doc.emit()).unwrap_err();
        assert_eq!(err.path, "$.triangulation.gluings[1].a[1]");
        let bad = doc.emit().replace("\"reversed\": false", "\"reversed\": 3");
        assert!(Document::parse(&bad).unwrap_err().path.starts_with("$.triangulation.gluings"));
    }

    #[test]
    fn dot_export() {
        let (t, _) = builders::sphere3();
        let d = DotGraph::from_inversion(&inversion_graph(&t)).to_dot();
        assert_eq!(d.matches("[label=\"").count() - d.matches(" -- ").count(), 6);
        assert_eq!(DotGraph::default().to_dot(), "graph g {\n}\n");
    }
}
