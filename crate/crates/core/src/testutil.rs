//! Seeded model and action generators shared by unit and property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures;
use crate::model::{
    apply_action, Binding, ChangeAction, Entity, EntityId, Metamodel, Model, Value,
};

pub const NAMES: [&str; 4] = ["withdraw", "debit", "deposit", ""];

pub fn interaction() -> Metamodel {
    Metamodel::from_json(fixtures::INTERACTION_METAMODEL).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max` entities of the interaction metamodel with random names and
/// links (multiplicities not enforced).
pub fn random_model(rng: &mut ChaCha8Rng, mm: &Metamodel, max: usize) -> Model {
    let n = rng.gen_range(0..=max);
    let mut entities: Vec<Entity> = (0..n)
        .map(|i| {
            let class = mm.classes.choose(rng).unwrap();
            Entity {
                id: EntityId(format!("x{i}")),
                class: class.name.clone(),
                attrs: [(
                    "name".to_owned(),
                    Value::Str(NAMES.choose(rng).unwrap().to_string()),
                )]
                .into(),
                links: Default::default(),
            }
        })
        .collect();
    let all: Vec<(EntityId, String)> = entities
        .iter()
        .map(|e| (e.id.clone(), e.class.clone()))
        .collect();
    for e in &mut entities {
        let class = mm.class(&e.class).unwrap();
        for (r, def) in &class.references {
            let targets: Vec<EntityId> = all
                .iter()
                .filter(|(_, c)| *c == def.target)
                .filter(|_| rng.gen_bool(0.5))
                .map(|(id, _)| id.clone())
                .collect();
            e.links.insert(r.clone(), targets);
        }
    }
    Model::from_entities(mm, entities).unwrap()
}

/// A random action that applies to `model`.
pub fn random_action(rng: &mut ChaCha8Rng, model: &Model, mm: &Metamodel) -> ChangeAction {
    loop {
        let ents: Vec<&Entity> = model.entities().collect();
        let pick = rng.gen_range(0..5);
        let action = if ents.is_empty() || pick == 0 {
            ChangeAction::create(mm.classes.choose(rng).unwrap().name.clone(), "$r")
        } else {
            let e = *ents.choose(rng).unwrap();
            match pick {
                1 => ChangeAction::Delete {
                    entity: e.id.clone(),
                },
                2 => ChangeAction::set_attr(e.id.as_str(), "name", *NAMES.choose(rng).unwrap()),
                _ => {
                    let class = mm.class(&e.class).unwrap();
                    let Some((r, def)) = class
                        .references
                        .iter()
                        .collect::<Vec<_>>()
                        .choose(rng)
                        .copied()
                    else {
                        continue;
                    };
                    let linked = e.links(r);
                    if pick == 3 && !linked.is_empty() {
                        let t = linked.choose(rng).unwrap();
                        ChangeAction::remove_link(e.id.as_str(), r.as_str(), t.as_str())
                    } else {
                        let ts: Vec<&Entity> = model.instances_of(&def.target).collect();
                        let Some(t) = ts.choose(rng) else { continue };
                        ChangeAction::add_link(e.id.as_str(), r.as_str(), t.id.as_str())
                    }
                }
            }
        };
        if apply_action(model, &action, &mut Binding::new(), mm).is_ok() {
            return action;
        }
    }
}
