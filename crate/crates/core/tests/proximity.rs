use std::collections::BTreeSet;

use changeprop::fixtures::F1;
use changeprop::harness::{random_instance, RandomParams};
use changeprop::model::{apply_script, ChangeAction, Model};
use changeprop::proximity::{
    effect_scenarios, semantic_proximity, structural_proximity, NodeKind, ProcessGraph,
    ProcessNode, SignedLiteral, StructuralProximity,
};
use changeprop::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

/// Facts of a model file, read straight from its JSON.
fn raw_facts(text: &str) -> BTreeSet<String> {
    let doc: Json = serde_json::from_str(text).unwrap();
    let mut out = BTreeSet::new();
    for e in doc["entities"].as_array().unwrap() {
        let id = e["id"].as_str().unwrap();
        out.insert(format!("node {id} {}", e["class"]));
        if let Some(attrs) = e["attrs"].as_object() {
            for (k, v) in attrs {
                out.insert(format!("attr {id} {k} {v}"));
            }
        }
        if let Some(links) = e["links"].as_object() {
            for (r, ts) in links {
                for t in ts.as_array().unwrap() {
                    out.insert(format!("link {id} {r} {t}"));
                }
            }
        }
    }
    out
}

#[test]
fn f1_rename_pair_shares_seven_of_nine_facts() {
    let f = F1.load();
    let (renamed, _) = apply_script(
        &f.model,
        &[ChangeAction::set_attr("op1", "name", "debit")],
        &f.metamodel,
    )
    .unwrap();

    let before = raw_facts(F1.model);
    let after = raw_facts(&F1.model.replace(
        r#""id": "op1", "class": "Operation", "attrs": { "name": "withdraw" }"#,
        r#""id": "op1", "class": "Operation", "attrs": { "name": "debit" }"#,
    ));
    assert_eq!(before.len(), 8);
    assert_ne!(before, after);
    let inter = before.intersection(&after).count() as i64;
    let union = before.union(&after).count() as i64;
    let expected = Rational::new(inter, union);
    assert_eq!(expected, Rational::new(7, 9));

    let sim: StructuralProximity = structural_proximity(&f.model, &renamed).unwrap();
    assert_eq!(sim.combined, expected);
    assert_eq!(sim.node, Rational::from_integer(1));
    assert_eq!(sim.link, Rational::from_integer(1));
    assert_eq!(sim.attr, Rational::new(2, 4));
    assert_eq!(sim.inclusion_ab, Rational::new(7, 8));
}

fn fields(s: &StructuralProximity) -> [Rational; 6] {
    [
        s.node,
        s.attr,
        s.link,
        s.combined,
        s.inclusion_ab,
        s.inclusion_ba,
    ]
}

fn random_pair(seed: u64) -> (Model, Model) {
    let inst = random_instance(seed, RandomParams::default());
    let (post, _) = apply_script(&inst.model, &inst.primary, &inst.metamodel).unwrap();
    (inst.model, post)
}

#[test]
fn similarity_is_reflexive_symmetric_and_bounded() {
    let one = Rational::from_integer(1);
    let zero = Rational::from_integer(0);
    for seed in 0..100 {
        let (a, b) = random_pair(seed);
        let aa: StructuralProximity = structural_proximity(&a, &a).unwrap();
        assert!(fields(&aa).iter().all(|v| *v == one), "seed {seed}");
        let ab: StructuralProximity = structural_proximity(&a, &b).unwrap();
        let ba: StructuralProximity = structural_proximity(&b, &a).unwrap();
        assert_eq!(ab.node, ba.node, "seed {seed}");
        assert_eq!(ab.attr, ba.attr, "seed {seed}");
        assert_eq!(ab.link, ba.link, "seed {seed}");
        assert_eq!(ab.combined, ba.combined, "seed {seed}");
        assert_eq!(ab.inclusion_ab, ba.inclusion_ba, "seed {seed}");
        assert!(
            fields(&ab).iter().all(|v| *v >= zero && *v <= one),
            "seed {seed}"
        );
    }
}

fn node(id: String, kind: NodeKind, effects: Vec<SignedLiteral>) -> ProcessNode {
    ProcessNode { id, kind, effects }
}

/// Decisions in series, each branch an activity asserting its own atom.
fn decision_chain(factors: &[usize]) -> ProcessGraph {
    let mut nodes = vec![node("s".into(), NodeKind::Start, vec![])];
    let mut edges = Vec::new();
    let mut prev = "s".to_string();
    for (i, &b) in factors.iter().enumerate() {
        let d = format!("d{i}");
        let m = format!("m{i}");
        nodes.push(node(d.clone(), NodeKind::Decision, vec![]));
        nodes.push(node(m.clone(), NodeKind::Merge, vec![]));
        edges.push((prev, d.clone()));
        for j in 0..b {
            let a = format!("a{i}_{j}");
            nodes.push(node(
                a.clone(),
                NodeKind::Activity,
                vec![SignedLiteral::pos(&format!("p{i}_{j}"))],
            ));
            edges.push((d.clone(), a.clone()));
            edges.push((a, m.clone()));
        }
        prev = m;
    }
    nodes.push(node("e".into(), NodeKind::End, vec![]));
    edges.push((prev, "e".into()));
    ProcessGraph::new(nodes, edges).unwrap()
}

#[test]
fn scenario_count_is_product_of_branch_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let d = rng.gen_range(0..=3);
        let factors: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=4)).collect();
        let scenarios = effect_scenarios(&decision_chain(&factors)).unwrap();
        assert_eq!(
            scenarios.len(),
            factors.iter().product::<usize>(),
            "{factors:?}"
        );
        assert!(scenarios.iter().all(|s| s.len() == d));
    }
}

#[test]
fn semantic_similarity_of_single_scenarios() {
    let scen = |atoms: &[&str]| -> BTreeSet<SignedLiteral> {
        atoms.iter().map(|a| SignedLiteral::pos(a)).collect()
    };
    let a = BTreeSet::from([scen(&["p", "q"])]);
    let b = BTreeSet::from([scen(&["p", "r"])]);
    assert_eq!(semantic_proximity::<Rational>(&a, &b), Rational::new(1, 3));
    assert_eq!(
        semantic_proximity::<Rational>(&a, &a),
        Rational::from_integer(1)
    );
    assert!((semantic_proximity::<f64>(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
}
