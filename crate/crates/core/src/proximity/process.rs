//! Process graphs with effect annotations, and their effect scenarios.
//!
//! Activities carry signed literals (`+p`, `-p`). Walking a path, each
//! literal overrides an earlier literal on the same atom. Each decision
//! branch yields its own scenarios; the branches of a fork run to their
//! matching join and their effects are united, an atom asserted with both
//! polarities by different branches being an error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::jaccard;
use crate::model::{Model, Value};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Start,
    End,
    Activity,
    Decision,
    Merge,
    Fork,
    Join,
}

impl NodeKind {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "start" => NodeKind::Start,
            "end" => NodeKind::End,
            "activity" => NodeKind::Activity,
            "decision" => NodeKind::Decision,
            "merge" => NodeKind::Merge,
            "fork" => NodeKind::Fork,
            "join" => NodeKind::Join,
            _ => return None,
        })
    }
}

/// An atom with a polarity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedLiteral {
    pub atom: String,
    pub positive: bool,
}

impl SignedLiteral {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (positive, atom) = match s.as_bytes().first()? {
            b'+' => (true, &s[1..]),
            b'-' => (false, &s[1..]),
            _ => return None,
        };
        let atom = atom.trim();
        if atom.is_empty() || !atom.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return None;
        }
        Some(SignedLiteral {
            atom: atom.to_owned(),
            positive,
        })
    }

    pub fn pos(atom: &str) -> Self {
        SignedLiteral {
            atom: atom.to_owned(),
            positive: true,
        }
    }

    pub fn neg(atom: &str) -> Self {
        SignedLiteral {
            atom: atom.to_owned(),
            positive: false,
        }
    }
}

impl fmt::Display for SignedLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.positive { '+' } else { '-' };
        write!(f, "{sign}{}", self.atom)
    }
}

impl Serialize for SignedLiteral {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignedLiteral {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SignedLiteral::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("bad effect literal `{s}`")))
    }
}

/// The literals holding at an end node.
pub type EffectScenario = BTreeSet<SignedLiteral>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessNode {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<SignedLiteral>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("invalid process graph: {0}")]
    Invalid(String),
    #[error("process graph has a cycle through `{0}`")]
    Cycle(String),
    #[error("branches of fork `{fork}` disagree on atom `{atom}`")]
    Conflict { fork: String, atom: String },
    #[error("{0}")]
    Json(String),
}

/// A process graph. Validation happens on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessGraph {
    nodes: BTreeMap<String, ProcessNode>,
    /// Node ids in input order, for serialization.
    order: Vec<String>,
    edges: Vec<(String, String)>,
    succ: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr<N> {
    nodes: Vec<N>,
    edges: Vec<(String, String)>,
}

impl Serialize for ProcessGraph {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        GraphRepr {
            nodes: self.order.iter().map(|id| &self.nodes[id]).collect(),
            edges: self.edges.clone(),
        }
        .serialize(s)
    }
}

impl ProcessGraph {
    pub fn new(
        nodes: Vec<ProcessNode>,
        edges: Vec<(String, String)>,
    ) -> Result<Self, ProcessError> {
        let invalid = |m: String| Err(ProcessError::Invalid(m));
        let mut map = BTreeMap::new();
        let order: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
        for n in nodes {
            if map.contains_key(&n.id) {
                return invalid(format!("duplicate node `{}`", n.id));
            }
            if !n.effects.is_empty() && n.kind != NodeKind::Activity {
                return invalid(format!("only activities carry effects (`{}`)", n.id));
            }
            map.insert(n.id.clone(), n);
        }
        let mut succ: BTreeMap<String, Vec<String>> =
            map.keys().map(|k| (k.clone(), Vec::new())).collect();
        let mut indeg: BTreeMap<&str, usize> = map.keys().map(|k| (k.as_str(), 0)).collect();
        for (a, b) in &edges {
            if !map.contains_key(a) || !map.contains_key(b) {
                return invalid(format!("edge ({a}, {b}) names an unknown node"));
            }
            succ.get_mut(a).unwrap().push(b.clone());
            *indeg.get_mut(b.as_str()).unwrap() += 1;
        }
        let starts: Vec<&ProcessNode> =
            map.values().filter(|n| n.kind == NodeKind::Start).collect();
        if starts.len() != 1 {
            return invalid(format!(
                "expected exactly one start node, found {}",
                starts.len()
            ));
        }
        if !map.values().any(|n| n.kind == NodeKind::End) {
            return invalid("no end node".into());
        }
        for n in map.values() {
            let out = succ[&n.id].len();
            let inn = indeg[n.id.as_str()];
            let ok = match n.kind {
                NodeKind::Start => inn == 0 && out == 1,
                NodeKind::End => out == 0,
                NodeKind::Activity | NodeKind::Merge | NodeKind::Join => out == 1,
                NodeKind::Decision | NodeKind::Fork => out >= 2,
            };
            if !ok {
                return invalid(format!(
                    "{:?} node `{}` has {inn} incoming and {out} outgoing edges",
                    n.kind, n.id
                ));
            }
        }
        let g = ProcessGraph {
            nodes: map,
            order,
            edges,
            succ,
        };
        g.check_acyclic()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self, ProcessError> {
        let repr: GraphRepr<ProcessNode> = serde_json::from_str(text)
            .map_err(|e| ProcessError::Json(format!("{}:{}: {e}", e.line(), e.column())))?;
        ProcessGraph::new(repr.nodes, repr.edges)
    }

    /// Reads the graph a model encodes through entities of class
    /// `ProcessNode` (string attributes `kind` and `effects`, reference
    /// `next`). `effects` holds literals separated by commas or spaces.
    /// `None` when the model has no such entities.
    pub fn from_model(model: &Model) -> Option<Result<Self, ProcessError>> {
        let entities: Vec<_> = model.instances_of("ProcessNode").collect();
        if entities.is_empty() {
            return None;
        }
        let build = || {
            let mut nodes = Vec::new();
            let mut edges = Vec::new();
            for e in &entities {
                let kind = match e.attr("kind") {
                    Some(Value::Str(k)) => NodeKind::from_name(k).ok_or_else(|| {
                        ProcessError::Invalid(format!("`{}`: bad kind `{k}`", e.id))
                    })?,
                    _ => return Err(ProcessError::Invalid(format!("`{}` has no kind", e.id))),
                };
                let effects = match e.attr("effects") {
                    Some(Value::Str(s)) => s
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            SignedLiteral::parse(t).ok_or_else(|| {
                                ProcessError::Invalid(format!("`{}`: bad effect `{t}`", e.id))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    _ => Vec::new(),
                };
                nodes.push(ProcessNode {
                    id: e.id.0.clone(),
                    kind,
                    effects,
                });
                for t in e.links("next") {
                    edges.push((e.id.0.clone(), t.0.clone()));
                }
            }
            ProcessGraph::new(nodes, edges)
        };
        Some(build())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ProcessNode> {
        self.order.iter().map(|id| &self.nodes[id])
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    fn check_acyclic(&self) -> Result<(), ProcessError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit<'a>(
            g: &'a ProcessGraph,
            n: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
        ) -> Result<(), ProcessError> {
            match marks.get(n) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Open) => return Err(ProcessError::Cycle(n.to_owned())),
                None => {}
            }
            marks.insert(n, Mark::Open);
            for s in &g.succ[n] {
                visit(g, s, marks)?;
            }
            marks.insert(n, Mark::Done);
            Ok(())
        }
        let mut marks = BTreeMap::new();
        for id in self.nodes.keys() {
            visit(self, id, &mut marks)?;
        }
        Ok(())
    }

    fn start(&self) -> &str {
        self.nodes
            .values()
            .find(|n| n.kind == NodeKind::Start)
            .map(|n| n.id.as_str())
            .expect("validated graph has a start node")
    }
}

/// Atom → polarity after overrides.
type EffectState = BTreeMap<String, bool>;

enum Outcome {
    Ended(EffectState),
    AtJoin(String, EffectState),
}

fn apply_effects(state: &mut EffectState, effects: &[SignedLiteral]) {
    for l in effects {
        state.insert(l.atom.clone(), l.positive);
    }
}

/// All outcomes of walking from `node` with accumulated `state`.
fn walk(
    g: &ProcessGraph,
    node: &str,
    mut state: EffectState,
) -> Result<Vec<Outcome>, ProcessError> {
    let n = &g.nodes[node];
    let succ = &g.succ[node];
    match n.kind {
        NodeKind::End => Ok(vec![Outcome::Ended(state)]),
        NodeKind::Join => Ok(vec![Outcome::AtJoin(node.to_owned(), state)]),
        NodeKind::Start | NodeKind::Merge => walk(g, &succ[0], state),
        NodeKind::Activity => {
            apply_effects(&mut state, &n.effects);
            walk(g, &succ[0], state)
        }
        NodeKind::Decision => {
            let mut out = Vec::new();
            for s in succ {
                out.extend(walk(g, s, state.clone())?);
            }
            Ok(out)
        }
        NodeKind::Fork => {
            // Each branch runs from an empty delta to the matching join.
            let mut join: Option<String> = None;
            let mut branches: Vec<Vec<EffectState>> = Vec::new();
            for s in succ {
                let mut deltas = Vec::new();
                for o in walk(g, s, EffectState::new())? {
                    match o {
                        Outcome::AtJoin(j, d) => {
                            if join.get_or_insert_with(|| j.clone()) != &j {
                                return Err(ProcessError::Invalid(format!(
                                    "branches of fork `{node}` reach different joins"
                                )));
                            }
                            deltas.push(d);
                        }
                        Outcome::Ended(_) => {
                            return Err(ProcessError::Invalid(format!(
                                "a branch of fork `{node}` ends before joining"
                            )))
                        }
                    }
                }
                branches.push(deltas);
            }
            let join = join.expect("fork has at least two branches");
            let mut combos: Vec<EffectState> = vec![EffectState::new()];
            for deltas in &branches {
                let mut next = Vec::new();
                for acc in &combos {
                    for d in deltas {
                        let mut merged = acc.clone();
                        for (atom, pol) in d {
                            if merged.get(atom).is_some_and(|p| p != pol) {
                                return Err(ProcessError::Conflict {
                                    fork: node.to_owned(),
                                    atom: atom.clone(),
                                });
                            }
                            merged.insert(atom.clone(), *pol);
                        }
                        next.push(merged);
                    }
                }
                combos = next;
            }
            let after = &g.succ[&join][0];
            let mut out = Vec::new();
            for delta in combos {
                let mut s = state.clone();
                s.extend(delta);
                out.extend(walk(g, after, s)?);
            }
            Ok(out)
        }
    }
}

/// Every distinct set of literals that can hold at an end node.
pub fn effect_scenarios(g: &ProcessGraph) -> Result<BTreeSet<EffectScenario>, ProcessError> {
    let mut out = BTreeSet::new();
    for o in walk(g, g.start(), EffectState::new())? {
        match o {
            Outcome::Ended(state) => {
                out.insert(
                    state
                        .into_iter()
                        .map(|(atom, positive)| SignedLiteral { atom, positive })
                        .collect(),
                );
            }
            Outcome::AtJoin(j, _) => {
                return Err(ProcessError::Invalid(format!(
                    "join `{j}` has no matching fork"
                )))
            }
        }
    }
    Ok(out)
}

fn directed<S: Scalar>(from: &BTreeSet<EffectScenario>, to: &BTreeSet<EffectScenario>) -> S {
    let best: Vec<S> = from
        .iter()
        .map(|x| {
            to.iter()
                .map(|y| jaccard::<S, _>(x, y))
                .reduce(|a, b| if b > a { b } else { a })
                .unwrap_or_else(S::zero)
        })
        .collect();
    crate::scalar::sum(best) / S::from_count(from.len())
}

/// Mean best-match Jaccard similarity, averaged over both directions.
pub fn semantic_proximity<S: Scalar>(
    a: &BTreeSet<EffectScenario>,
    b: &BTreeSet<EffectScenario>,
) -> S {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => S::one(),
        (true, false) | (false, true) => S::zero(),
        _ => (directed::<S>(a, b) + directed::<S>(b, a)) / S::from_count(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn node(id: &str, kind: NodeKind, effects: &[&str]) -> ProcessNode {
        ProcessNode {
            id: id.into(),
            kind,
            effects: effects
                .iter()
                .map(|e| SignedLiteral::parse(e).unwrap())
                .collect(),
        }
    }

    fn edges(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn scen(lits: &[&str]) -> EffectScenario {
        lits.iter()
            .map(|l| SignedLiteral::parse(l).unwrap())
            .collect()
    }

    #[test]
    fn linear_chain_accumulates() {
        let g = ProcessGraph::new(
            vec![
                node("s", NodeKind::Start, &[]),
                node("a", NodeKind::Activity, &["+p"]),
                node("b", NodeKind::Activity, &["+q"]),
                node("e", NodeKind::End, &[]),
            ],
            edges(&[("s", "a"), ("a", "b"), ("b", "e")]),
        )
        .unwrap();
        assert_eq!(effect_scenarios(&g).unwrap(), [scen(&["+p", "+q"])].into());
    }

    #[test]
    fn later_literal_overrides() {
        let g = ProcessGraph::new(
            vec![
                node("s", NodeKind::Start, &[]),
                node("a", NodeKind::Activity, &["+p"]),
                node("b", NodeKind::Activity, &["-p"]),
                node("e", NodeKind::End, &[]),
            ],
            edges(&[("s", "a"), ("a", "b"), ("b", "e")]),
        )
        .unwrap();
        assert_eq!(effect_scenarios(&g).unwrap(), [scen(&["-p"])].into());
    }

    #[test]
    fn decision_splits_scenarios() {
        let g = ProcessGraph::new(
            vec![
                node("s", NodeKind::Start, &[]),
                node("a", NodeKind::Activity, &["+p"]),
                node("d", NodeKind::Decision, &[]),
                node("b", NodeKind::Activity, &["+q"]),
                node("c", NodeKind::Activity, &["+r"]),
                node("m", NodeKind::Merge, &[]),
                node("e", NodeKind::End, &[]),
            ],
            edges(&[
                ("s", "a"),
                ("a", "d"),
                ("d", "b"),
                ("d", "c"),
                ("b", "m"),
                ("c", "m"),
                ("m", "e"),
            ]),
        )
        .unwrap();
        assert_eq!(
            effect_scenarios(&g).unwrap(),
            [scen(&["+p", "+q"]), scen(&["+p", "+r"])].into()
        );
    }

    #[test]
    fn fork_unites_and_reports_conflicts() {
        let build = |second: &str| {
            ProcessGraph::new(
                vec![
                    node("s", NodeKind::Start, &[]),
                    node("f", NodeKind::Fork, &[]),
                    node("a", NodeKind::Activity, &["+p"]),
                    node("b", NodeKind::Activity, &[second]),
                    node("j", NodeKind::Join, &[]),
                    node("e", NodeKind::End, &[]),
                ],
                edges(&[
                    ("s", "f"),
                    ("f", "a"),
                    ("f", "b"),
                    ("a", "j"),
                    ("b", "j"),
                    ("j", "e"),
                ]),
            )
            .unwrap()
        };
        assert_eq!(
            effect_scenarios(&build("+q")).unwrap(),
            [scen(&["+p", "+q"])].into()
        );
        assert!(matches!(
            effect_scenarios(&build("-p")),
            Err(ProcessError::Conflict { .. })
        ));
    }

    #[test]
    fn cycles_and_bad_shapes_are_rejected() {
        let cyc = ProcessGraph::new(
            vec![
                node("s", NodeKind::Start, &[]),
                node("m", NodeKind::Merge, &[]),
                node("d", NodeKind::Decision, &[]),
                node("e", NodeKind::End, &[]),
            ],
            edges(&[("s", "m"), ("m", "d"), ("d", "m"), ("d", "e")]),
        );
        assert!(matches!(cyc, Err(ProcessError::Cycle(_))));
        let two_starts = ProcessGraph::new(
            vec![
                node("s", NodeKind::Start, &[]),
                node("t", NodeKind::Start, &[]),
                node("e", NodeKind::End, &[]),
            ],
            edges(&[("s", "e"), ("t", "e")]),
        );
        assert!(matches!(two_starts, Err(ProcessError::Invalid(_))));
    }

    #[test]
    fn semantic_proximity_values() {
        let a: BTreeSet<EffectScenario> = [scen(&["+p", "+q"])].into();
        let b: BTreeSet<EffectScenario> = [scen(&["+p", "+r"])].into();
        assert_eq!(semantic_proximity::<Rational>(&a, &b), Rational::new(1, 3));
        assert_eq!(
            semantic_proximity::<Rational>(&a, &a),
            Rational::from_integer(1)
        );
        let none = BTreeSet::new();
        assert_eq!(
            semantic_proximity::<Rational>(&a, &none),
            Rational::from_integer(0)
        );
        assert_eq!(
            semantic_proximity::<Rational>(&none, &none),
            Rational::from_integer(1)
        );
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"nodes":[{"id":"s","type":"start"},{"id":"a","type":"activity","effects":["+p","-q"]},{"id":"e","type":"end"}],"edges":[["s","a"],["a","e"]]}"#;
        let g = ProcessGraph::from_json(text).unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), text);
    }
}
