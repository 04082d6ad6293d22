//! Seeded random instances: metamodel, constraints, consistent base model
//! and primary change script.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::reference;
use crate::dsl::{parse_constraint_file, pretty_print, Constraint};
use crate::model::{
    apply_action, script_to_json, AttrType, Binding, ChangeAction, ClassDef, Entity, EntityId,
    Metamodel, Model, ReferenceDef, Upper, Value,
};
use crate::search::{propagate, SearchConfig, Strategy};
use crate::Rational;

/// Size bounds for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomParams {
    /// 1..=5
    pub max_classes: usize,
    /// 1..=12
    pub max_entities: usize,
    /// 1..=8
    pub max_constraints: usize,
    /// Exact length of the primary script, 1..=4.
    pub mutations: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_classes: 3,
            max_entities: 6,
            max_constraints: 4,
            mutations: 2,
        }
    }
}

impl RandomParams {
    fn check(&self) {
        assert!(
            (1..=5).contains(&self.max_classes),
            "max_classes must be in 1..=5"
        );
        assert!(
            (1..=12).contains(&self.max_entities),
            "max_entities must be in 1..=12"
        );
        assert!(
            (1..=8).contains(&self.max_constraints),
            "max_constraints must be in 1..=8"
        );
        assert!(
            (1..=4).contains(&self.mutations),
            "mutations must be in 1..=4"
        );
    }
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub seed: u64,
    pub params: RandomParams,
    pub metamodel: Metamodel,
    pub constraints: Vec<Constraint>,
    pub model: Model,
    pub primary: Vec<ChangeAction>,
}

const NAMES: [&str; 4] = ["a", "b", "c", "d"];
const CLASS_NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

fn gen_metamodel(rng: &mut ChaCha8Rng, p: &RandomParams) -> Metamodel {
    let n = rng.gen_range(1..=p.max_classes);
    let names: Vec<&str> = CLASS_NAMES[..n].to_vec();
    let mut classes = Vec::new();
    let mut refs_left = 3;
    for name in &names {
        let mut attributes = BTreeMap::from([("name".to_owned(), AttrType::String)]);
        if rng.gen_bool(0.4) {
            attributes.insert("level".into(), AttrType::Int);
        }
        if rng.gen_bool(0.25) {
            attributes.insert("active".into(), AttrType::Bool);
        }
        let mut references = BTreeMap::new();
        if refs_left > 0 && rng.gen_bool(0.7) {
            refs_left -= 1;
            let target = *names.choose(rng).unwrap();
            let (lower, upper) = *[
                (0, Upper::Bounded(1)),
                (0, Upper::Unbounded),
                (1, Upper::Bounded(1)),
                (0, Upper::Bounded(2)),
                (0, Upper::Unbounded),
            ]
            .choose(rng)
            .unwrap();
            references.insert(
                format!("to{target}"),
                ReferenceDef {
                    target: target.to_owned(),
                    lower,
                    upper,
                },
            );
        }
        classes.push(ClassDef {
            name: (*name).to_owned(),
            attributes,
            references,
        });
    }
    Metamodel::new("random", classes).expect("generated metamodel is valid")
}

/// One invariant body for `class`, or `None` if the template does not fit.
fn gen_invariant(rng: &mut ChaCha8Rng, mm: &Metamodel, class: &ClassDef) -> Option<String> {
    let pick = rng.gen_range(0..10);
    let reference = class.references.iter().next();
    let lit = NAMES.choose(rng).unwrap();
    match pick {
        0 => Some("self.name <> ''".into()),
        1 => class
            .attributes
            .contains_key("level")
            .then(|| format!("self.level <= {}", rng.gen_range(1..=3))),
        2 => class
            .attributes
            .contains_key("active")
            .then(|| format!("self.active implies self.name = '{lit}'")),
        3 => class
            .attributes
            .contains_key("level")
            .then(|| format!("self.name = '{lit}' implies self.level >= 1")),
        _ => {
            let (r, def) = reference?;
            let single = def.is_single();
            let target = mm.class(&def.target)?;
            let body = match (pick, single) {
                (4, true) => format!("self.{r}.name = self.name"),
                (5, true) => format!("self.{r}->notEmpty() implies self.{r}.name <> '{lit}'"),
                (6, true) => format!("self.{r}->isEmpty() or self.{r}.name = self.name"),
                (4, false) => format!("self.{r}->exists(x | x.name = self.name)"),
                (5, false) => format!("self.{r}->forAll(x | x.name <> '{lit}')"),
                (6, false) => format!("self.{r}->size() <= 1"),
                (7, _) => format!("self.{r}->notEmpty()"),
                (8, true) => format!("self.{r}->isEmpty() implies self.name = '{lit}'"),
                (8, false) => format!("self.{r}.name->includes(self.name) or self.name = '{lit}'"),
                (9, _) if target.attributes.contains_key("level") => {
                    format!("self.{r}->forAll(x | x.level >= 1)")
                }
                _ => return None,
            };
            Some(body)
        }
    }
}

fn gen_constraints(rng: &mut ChaCha8Rng, mm: &Metamodel, p: &RandomParams) -> Vec<Constraint> {
    let want = rng.gen_range(1..=p.max_constraints);
    let mut blocks = Vec::new();
    let mut attempts = 0;
    while blocks.len() < want && attempts < 40 {
        attempts += 1;
        let class = mm.classes.choose(rng).unwrap();
        if let Some(body) = gen_invariant(rng, mm, class) {
            blocks.push(format!(
                "context {} inv c{}: {body}",
                class.name,
                blocks.len() + 1
            ));
        }
    }
    parse_constraint_file(&blocks.join("\n"), mm).expect("generated constraints check")
}

fn random_value(rng: &mut ChaCha8Rng, ty: AttrType) -> Value {
    match ty {
        AttrType::String => Value::Str((*NAMES.choose(rng).unwrap()).to_owned()),
        AttrType::Int => Value::Int(rng.gen_range(0..=3)),
        AttrType::Bool => Value::Bool(rng.gen_bool(0.5)),
    }
}

fn gen_model(rng: &mut ChaCha8Rng, mm: &Metamodel, p: &RandomParams) -> Model {
    let n = rng.gen_range(1..=p.max_entities);
    let mut entities: Vec<Entity> = (0..n)
        .map(|i| {
            let class = mm.classes.choose(rng).unwrap();
            Entity {
                id: EntityId(format!("e{i}")),
                class: class.name.clone(),
                attrs: class
                    .attributes
                    .iter()
                    .map(|(a, ty)| (a.clone(), random_value(rng, *ty)))
                    .collect(),
                links: BTreeMap::new(),
            }
        })
        .collect();
    let ids: Vec<(EntityId, String)> = entities
        .iter()
        .map(|e| (e.id.clone(), e.class.clone()))
        .collect();
    for e in &mut entities {
        let class = mm.class(&e.class).unwrap();
        for (r, def) in &class.references {
            let mut targets: Vec<EntityId> = ids
                .iter()
                .filter(|(_, c)| *c == def.target)
                .map(|(id, _)| id.clone())
                .collect();
            targets.shuffle(rng);
            let cap = match def.upper {
                Upper::Bounded(u) => u as usize,
                Upper::Unbounded => 2,
            };
            let k = rng.gen_range(0..=cap.min(2)).min(targets.len());
            targets.truncate(k);
            e.links.insert(r.clone(), targets);
        }
    }
    Model::from_entities(mm, entities).expect("generated model conforms")
}

/// Repairs `model` with a shallow search; `None` if that fails or grows
/// the model beyond the entity bound.
fn make_consistent(
    model: Model,
    cs: &[Constraint],
    mm: &Metamodel,
    p: &RandomParams,
) -> Option<Model> {
    if reference::consistent(&model, cs, mm) {
        return Some(model);
    }
    let cfg: SearchConfig<Rational> = SearchConfig::default()
        .with_strategy(Strategy::Ucs)
        .with_max_depth(2);
    let res = propagate(&model, &[], cs, mm, &cfg).ok()?;
    let fixed = res.result_models.into_iter().next()?;
    if fixed.len() > p.max_entities || !reference::consistent(&fixed, cs, mm) {
        return None;
    }
    // Forget creation history: the result is a fresh base model.
    Model::from_entities(mm, fixed.entities().cloned()).ok()
}

/// A random action that applies to `model` and changes it.
fn random_action(
    rng: &mut ChaCha8Rng,
    model: &Model,
    mm: &Metamodel,
    placeholder: &str,
) -> Option<ChangeAction> {
    let entities: Vec<&Entity> = model.entities().collect();
    let roll = rng.gen_range(0..100);
    let action = if entities.is_empty() || roll < 6 {
        let class = mm.classes.choose(rng)?;
        ChangeAction::create(class.name.clone(), placeholder)
    } else {
        let e = *entities.choose(rng)?;
        let class = mm.class(&e.class)?;
        if roll < 55 {
            let (attr, ty) = class
                .attributes
                .iter()
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()?;
            ChangeAction::SetAttr {
                entity: e.id.clone(),
                attribute: attr.clone(),
                value: random_value(rng, *ty),
            }
        } else if roll < 95 {
            let (r, def) = class
                .references
                .iter()
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()?;
            let linked = e.links(r);
            if rng.gen_bool(0.5) && !linked.is_empty() {
                let t = linked.choose(rng)?;
                ChangeAction::remove_link(e.id.0.clone(), r.clone(), t.0.clone())
            } else {
                let t = model
                    .instances_of(&def.target)
                    .collect::<Vec<_>>()
                    .choose(rng)
                    .copied()?;
                ChangeAction::add_link(e.id.0.clone(), r.clone(), t.id.0.clone())
            }
        } else {
            ChangeAction::Delete {
                entity: e.id.clone(),
            }
        }
    };
    let next = apply_action(model, &action, &mut Binding::new(), mm).ok()?;
    (next.facts() != model.facts()).then_some(action)
}

/// Script of exactly `count` effective actions; created entities are
/// referred to by placeholder in later actions.
fn gen_primary(
    rng: &mut ChaCha8Rng,
    model: &Model,
    mm: &Metamodel,
    count: usize,
) -> Vec<ChangeAction> {
    let mut script = Vec::new();
    let mut current = model.clone();
    let mut binding = Binding::new();
    let mut placeholders: BTreeMap<EntityId, EntityId> = BTreeMap::new();
    while script.len() < count {
        let ph = format!("$p{}", script.len() + 1);
        let Some(action) = random_action(rng, &current, mm, &ph) else {
            continue;
        };
        current = apply_action(&current, &action, &mut binding, mm).expect("checked above");
        if let ChangeAction::Create { id, .. } = &action {
            placeholders.insert(binding[id].clone(), id.clone());
        }
        script
            .push(action.map_ids(|id| placeholders.get(id).cloned().unwrap_or_else(|| id.clone())));
    }
    script
}

/// Deterministic in `seed`. The base model is consistent and well-formed;
/// the primary script has exactly `params.mutations` actions and, when the
/// generator manages it within a few tries, leaves the model inconsistent.
pub fn random_instance(seed: u64, params: RandomParams) -> RandomInstance {
    params.check();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let metamodel = gen_metamodel(&mut rng, &params);
        let constraints = gen_constraints(&mut rng, &metamodel, &params);
        let mut base = None;
        for _ in 0..8 {
            let m = gen_model(&mut rng, &metamodel, &params);
            if let Some(m) = make_consistent(m, &constraints, &metamodel, &params) {
                base = Some(m);
                break;
            }
        }
        let Some(model) = base else {
            continue;
        };
        let mut primary = Vec::new();
        for _ in 0..12 {
            primary = gen_primary(&mut rng, &model, &metamodel, params.mutations);
            let post = crate::model::apply_script(&model, &primary, &metamodel)
                .expect("generated script applies")
                .0;
            if !reference::consistent(&post, &constraints, &metamodel) {
                break;
            }
        }
        return RandomInstance {
            seed,
            params,
            metamodel,
            constraints,
            model,
            primary,
        };
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    params: &'a RandomParams,
    metamodel: &'a str,
    model: &'a str,
    constraints: &'a str,
    changes: &'a str,
}

impl RandomInstance {
    pub fn constraint_text(&self) -> String {
        pretty_print(&self.constraints)
    }

    /// Writes the instance as standard input files plus `manifest.json`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metamodel.json"), self.metamodel.to_json())?;
        fs::write(dir.join("model.json"), self.model.to_json())?;
        fs::write(dir.join("constraints.ocl"), self.constraint_text())?;
        fs::write(dir.join("changes.json"), script_to_json(&self.primary))?;
        let manifest = Manifest {
            seed: self.seed,
            params: &self.params,
            metamodel: "metamodel.json",
            model: "model.json",
            constraints: "constraints.ocl",
            changes: "changes.json",
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), text + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::apply_script;

    #[test]
    fn generated_instances_respect_bounds() {
        let p = RandomParams::default();
        for seed in 0..300 {
            let inst = random_instance(seed, p);
            assert!(inst.metamodel.classes.len() <= p.max_classes);
            assert!((1..=p.max_constraints).contains(&inst.constraints.len()));
            assert!(inst.model.len() <= p.max_entities);
            assert_eq!(inst.primary.len(), p.mutations);
            assert!(reference::consistent(
                &inst.model,
                &inst.constraints,
                &inst.metamodel
            ));
            assert!(apply_script(&inst.model, &inst.primary, &inst.metamodel).is_ok());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_instance(7, RandomParams::default());
        let b = random_instance(7, RandomParams::default());
        assert_eq!(a.model, b.model);
        assert_eq!(a.primary, b.primary);
        assert_eq!(a.constraint_text(), b.constraint_text());
    }
}
