//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use changeprop::dsl::{violations_of, ScopeCache};
use changeprop::fixtures::{FixtureFiles, F1, F2, UNSOLVABLE};
use changeprop::harness::{
    all_actions, check_postulates, exhaustive_oracle, exhaustive_oracle_bounded, permuted_primary,
    random_instance, reference, RandomInstance, RandomParams, RunInputs, Status, ValueUniverse,
    ORACLE_SUCCESSOR_BUDGET,
};
use changeprop::model::{apply_action, apply_script, script_to_json, Binding, ChangeAction, Model};
use changeprop::proximity::{
    effect_scenarios, semantic_proximity, structural_proximity, NodeKind, ProcessGraph,
    ProcessNode, SignedLiteral, StructuralProximity,
};
use changeprop::report::{Metric, RunReport};
use changeprop::search::{
    heuristic_estimate, propagate, HeuristicMode, ProtectedSlots, SearchState, Strategy,
};
use changeprop::{ExactConfig, ExactCosts, Rational};

const SEEDS: std::ops::Range<u64> = 0..200;
const DEPTH: usize = 4;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn depth_cfg(strategy: Strategy) -> ExactConfig {
    ExactConfig::default()
        .with_strategy(strategy)
        .with_max_depth(DEPTH)
}

fn instances() -> Vec<RandomInstance> {
    SEEDS
        .map(|s| random_instance(s, RandomParams::default()))
        .collect()
}

fn oracle_cost(f: &FixtureFiles, depth: usize) -> Option<Rational> {
    let f = f.load();
    let (protected, post) =
        ProtectedSlots::from_primary(&f.model, &f.changes, &f.metamodel).unwrap();
    exhaustive_oracle(
        &post,
        &protected,
        &f.constraints,
        &f.metamodel,
        &ExactCosts::default(),
        depth,
    )
}

fn criterion_1() -> Outcome {
    let f = F1.load();
    let start = Instant::now();
    let res = propagate(
        &f.model,
        &f.changes,
        &f.constraints,
        &f.metamodel,
        &ExactConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let plan = &res.plans[0];
    ensure(
        plan.actions == [ChangeAction::set_attr("op1", "name", "debit")],
        || format!("plan {:?}", plan.actions),
    )?;
    ensure(plan.total_cost == int(1), || {
        format!("cost {}", plan.total_cost)
    })?;
    let oracle = oracle_cost(&F1, 3);
    ensure(oracle == Some(int(1)), || format!("oracle {oracle:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "plan [{}], cost 1, oracle 1, {elapsed:?}",
        plan.actions[0]
    ))
}

fn criterion_2() -> Outcome {
    let f = F2.load();
    let res = propagate(
        &f.model,
        &f.changes,
        &f.constraints,
        &f.metamodel,
        &ExactConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let plan = &res.plans[0];
    let expected = [
        ChangeAction::create("Operation", "$n1"),
        ChangeAction::set_attr("$n1", "name", "debit"),
        ChangeAction::add_link("a1", "ops", "$n1"),
    ];
    ensure(plan.actions == expected, || {
        format!("plan {:?}", plan.actions)
    })?;
    ensure(plan.total_cost == int(3), || {
        format!("cost {}", plan.total_cost)
    })?;
    let oracle = oracle_cost(&F2, 3);
    ensure(oracle == Some(int(3)), || format!("oracle {oracle:?}"))?;
    let steps: Vec<String> = plan.actions.iter().map(ToString::to_string).collect();
    Ok(format!("plan [{}], cost 3, oracle 3", steps.join(", ")))
}

fn criterion_3(insts: &[RandomInstance]) -> Outcome {
    let start = Instant::now();
    let (mut planned, mut verified, mut unverified) = (0, 0, 0);
    for inst in insts {
        let cfg = depth_cfg(Strategy::Astar);
        let out = propagate(
            &inst.model,
            &inst.primary,
            &inst.constraints,
            &inst.metamodel,
            &cfg,
        );
        let inputs = RunInputs {
            original: &inst.model,
            primary: &inst.primary,
            cs: &inst.constraints,
            mm: &inst.metamodel,
            cfg: &cfg,
        };
        let report = check_postulates(inputs, &out, DEPTH);
        for (name, c) in report.checks().into_iter().take(4) {
            ensure(c.status != Status::Fail, || {
                format!("seed {}: {name} fails: {}", inst.seed, c.evidence)
            })?;
        }
        if out.is_ok() {
            planned += 1;
            for (name, c) in report.checks().into_iter().take(3) {
                ensure(c.passed(), || {
                    format!("seed {}: {name} is {}: {}", inst.seed, c.status, c.evidence)
                })?;
            }
        }
        match report.p6.status {
            Status::Unverified => unverified += 1,
            Status::Pass => verified += 1,
            s => {
                return Err(format!(
                    "seed {}: P6 {s}: {}",
                    inst.seed, report.p6.evidence
                ))
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} instances ({planned} with plans): P1-P4 never fail, P6 passes on {verified}/{verified} verifiable ({unverified} unverified), {elapsed:?}",
        insts.len()
    ))
}

fn criterion_4(insts: &[RandomInstance]) -> Outcome {
    let mut compared = 0;
    let mut witnesses = 0;
    let mut steps = 0;
    let mut exact = 0;
    for inst in insts {
        let run = |s| {
            propagate(
                &inst.model,
                &inst.primary,
                &inst.constraints,
                &inst.metamodel,
                &depth_cfg(s),
            )
            .ok()
            .map(|r| r.plans[0].total_cost)
        };
        let astar = run(Strategy::Astar);
        let ucs = run(Strategy::Ucs);
        ensure(astar == ucs, || {
            format!("seed {}: astar {astar:?}, ucs {ucs:?}", inst.seed)
        })?;
        compared += 1;

        let (protected, post) =
            ProtectedSlots::from_primary(&inst.model, &inst.primary, &inst.metamodel)
                .map_err(|e| e.to_string())?;
        let costs = ExactCosts::default();
        let oracle = exhaustive_oracle_bounded(
            &post,
            &protected,
            &inst.constraints,
            &inst.metamodel,
            &costs,
            DEPTH,
            ORACLE_SUCCESSOR_BUDGET,
        );
        if oracle.complete {
            ensure(astar == oracle.min_cost, || {
                format!(
                    "seed {}: astar {astar:?}, oracle {:?}",
                    inst.seed, oracle.min_cost
                )
            })?;
            exact += 1;
        }
        let Some(total) = oracle.min_cost else {
            continue;
        };
        witnesses += 1;
        let mut state = post;
        let mut spent = int(0);
        for a in &oracle.witness {
            let s =
                SearchState::<Rational>::initial(state.clone(), &inst.constraints, &inst.metamodel);
            let h = heuristic_estimate(&s, &costs, HeuristicMode::Admissible);
            ensure(h <= total - spent, || {
                format!("seed {}: h = {h} > remaining {}", inst.seed, total - spent)
            })?;
            steps += 1;
            spent += costs.cost(a).unwrap();
            // Witness ids are concrete; a replayed creation picks the same fresh id.
            let step = match a {
                ChangeAction::Create { class, .. } => ChangeAction::create(class.as_str(), "$w"),
                other => other.clone(),
            };
            state = apply_script(&state, &[step], &inst.metamodel)
                .map_err(|e| e.to_string())?
                .0;
        }
        ensure(spent == total, || {
            format!("seed {}: witness cost", inst.seed)
        })?;
    }
    Ok(format!(
        "A* = UCS on {compared} instances, = oracle on {exact}; h <= remaining cost at {steps} states on {witnesses} oracle witnesses"
    ))
}

fn report_json(inst: &RandomInstance, primary: &[ChangeAction], cfg: &ExactConfig) -> String {
    let out = propagate(
        &inst.model,
        primary,
        &inst.constraints,
        &inst.metamodel,
        cfg,
    );
    RunReport::build(&inst.model, &out, cfg, Metric::Structural, 0, None).to_json()
}

fn run_cli(dir: &Path, changes: &str, out: &Path) -> Result<(i32, String), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_changeprop"))
        .arg("--metamodel")
        .arg(dir.join("metamodel.json"))
        .arg("--constraints")
        .arg(dir.join("constraints.ocl"))
        .arg("--model")
        .arg(dir.join("model.json"))
        .arg("--changes")
        .arg(dir.join(changes))
        .arg("--max-depth")
        .arg(DEPTH.to_string())
        .arg("--out")
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    let report = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    Ok((status.code().unwrap_or(-1), report))
}

fn criterion_5(insts: &[RandomInstance]) -> Outcome {
    let cfg = depth_cfg(Strategy::Astar);
    let tmp = std::env::temp_dir().join(format!("changeprop-acceptance-{}", std::process::id()));
    let mut permuted = 0;
    let mut via_cli = 0;
    for inst in insts {
        let Some(swapped) = permuted_primary(&inst.model, &inst.primary, &inst.metamodel) else {
            continue;
        };
        permuted += 1;
        let a = report_json(inst, &inst.primary, &cfg);
        let b = report_json(inst, &swapped, &cfg);
        ensure(a == b, || format!("seed {}: reports differ", inst.seed))?;
        if via_cli < 10 {
            let dir = tmp.join(inst.seed.to_string());
            inst.write_to(&dir).map_err(|e| e.to_string())?;
            std::fs::write(dir.join("swapped.json"), script_to_json(&swapped))
                .map_err(|e| e.to_string())?;
            let (ca, ra) = run_cli(&dir, "changes.json", &dir.join("out-a"))?;
            let (cb, rb) = run_cli(&dir, "swapped.json", &dir.join("out-b"))?;
            ensure(ca == cb && ra == rb, || {
                format!("seed {}: CLI reports differ", inst.seed)
            })?;
            via_cli += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&tmp);
    ensure(permuted >= 20, || {
        format!("only {permuted} permutable scripts")
    })?;
    Ok(format!(
        "{permuted} permuted scripts give byte-identical reports ({via_cli} also through the CLI)"
    ))
}

fn criterion_6() -> Outcome {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let mut trials = 0;
    let mut evaluated = 0usize;
    let mut full = 0usize;
    let mut seed = 10_000u64;
    while trials < 500 {
        seed += 1;
        let inst = random_instance(seed, RandomParams::default());
        let cs = &inst.constraints;
        let (model, _) =
            apply_script(&inst.model, &inst.primary, &inst.metamodel).map_err(|e| e.to_string())?;
        let universe = ValueUniverse::for_instance(&model, cs, 1);
        let actions = all_actions(
            &model,
            &inst.metamodel,
            &universe,
            &ProtectedSlots::default(),
        );
        let Some(a) = actions.choose(&mut rng) else {
            continue;
        };
        let mut binding = Binding::new();
        let Ok(next) = apply_action(&model, a, &mut binding, &inst.metamodel) else {
            continue;
        };
        let cache = ScopeCache::build(&model, cs);
        let (fresh, n) = cache.refresh(&next, cs, &a.dirty_entities(&binding));
        let incremental = fresh.violations(cs);
        ensure(incremental == violations_of(&next, cs), || {
            format!("seed {seed}: incremental differs from full after {a}")
        })?;
        let expected: BTreeSet<(String, String)> = reference::failing(&next, cs)
            .into_iter()
            .map(|(c, e)| (c, e.0))
            .collect();
        let got: BTreeSet<(String, String)> = incremental
            .iter()
            .map(|v| (v.constraint.clone(), v.entity.0.clone()))
            .collect();
        ensure(got == expected, || {
            format!("seed {seed}: differs from the reference evaluator after {a}")
        })?;
        evaluated += n;
        full += ScopeCache::build(&next, cs).len();
        trials += 1;
    }
    Ok(format!(
        "{trials} trials agree; {evaluated} of {full} evaluations re-run"
    ))
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

fn decision_chain(factors: &[usize]) -> ProcessGraph {
    let node = |id: String, kind, effects| ProcessNode { id, kind, effects };
    let mut nodes = vec![node("s".into(), NodeKind::Start, vec![])];
    let mut edges = Vec::new();
    let mut prev = "s".to_string();
    for (i, &b) in factors.iter().enumerate() {
        let (d, m) = (format!("d{i}"), format!("m{i}"));
        nodes.push(node(d.clone(), NodeKind::Decision, vec![]));
        nodes.push(node(m.clone(), NodeKind::Merge, vec![]));
        edges.push((prev, d.clone()));
        for j in 0..b {
            let a = format!("a{i}_{j}");
            let lit = SignedLiteral::pos(&format!("p{i}_{j}"));
            nodes.push(node(a.clone(), NodeKind::Activity, vec![lit]));
            edges.push((d.clone(), a.clone()));
            edges.push((a, m.clone()));
        }
        prev = m;
    }
    nodes.push(node("e".into(), NodeKind::End, vec![]));
    edges.push((prev, "e".into()));
    ProcessGraph::new(nodes, edges).unwrap()
}

fn criterion_7(insts: &[RandomInstance]) -> Outcome {
    let f = F1.load();
    let (renamed, _) = apply_script(
        &f.model,
        &[ChangeAction::set_attr("op1", "name", "debit")],
        &f.metamodel,
    )
    .map_err(|e| e.to_string())?;
    let sim: StructuralProximity =
        structural_proximity(&f.model, &renamed).map_err(|e| e.to_string())?;
    // 8 facts each, the two op1 name facts differ: 7 shared out of 9.
    ensure(sim.combined == Rational::new(7, 9), || {
        format!("F1 pair {}", sim.combined)
    })?;

    let pairs: Vec<(&Model, Model)> = insts
        .iter()
        .take(100)
        .map(|i| {
            (
                &i.model,
                apply_script(&i.model, &i.primary, &i.metamodel).unwrap().0,
            )
        })
        .collect();
    for (a, b) in &pairs {
        let aa: StructuralProximity = structural_proximity(a, a).map_err(|e| e.to_string())?;
        ensure(fields(&aa).iter().all(|v| *v == int(1)), || {
            "sim(x,x) != 1".into()
        })?;
        let ab: StructuralProximity = structural_proximity(a, b).map_err(|e| e.to_string())?;
        let ba: StructuralProximity = structural_proximity(b, a).map_err(|e| e.to_string())?;
        ensure(
            ab.combined == ba.combined
                && ab.node == ba.node
                && ab.attr == ba.attr
                && ab.link == ba.link
                && ab.inclusion_ab == ba.inclusion_ba,
            || "asymmetric similarity".into(),
        )?;
    }

    let mut dags = 0;
    for d in 0..=3usize {
        for code in 0..3usize.pow(d as u32) {
            let factors: Vec<usize> = (0..d)
                .map(|i| 2 + code / 3usize.pow(i as u32) % 3)
                .collect();
            let n = effect_scenarios(&decision_chain(&factors))
                .map_err(|e| e.to_string())?
                .len();
            ensure(n == factors.iter().product::<usize>(), || {
                format!("{factors:?}: {n} scenarios")
            })?;
            dags += 1;
        }
    }

    let scen = |atoms: &[&str]| -> BTreeSet<SignedLiteral> {
        atoms.iter().map(|a| SignedLiteral::pos(a)).collect()
    };
    let sem: Rational = semantic_proximity(
        &BTreeSet::from([scen(&["p", "q"])]),
        &BTreeSet::from([scen(&["p", "r"])]),
    );
    ensure(sem == Rational::new(1, 3), || format!("semantic {sem}"))?;
    Ok(format!(
        "F1 pair 7/9; reflexive and symmetric on {} pairs; scenario products on {dags} DAGs; semantic 1/3",
        pairs.len()
    ))
}

fn criterion_8(insts: &[RandomInstance]) -> Outcome {
    let mut slowest = Duration::ZERO;
    let mut runs = 0;
    for inst in insts.iter().filter(|i| i.model.len() == 6).take(25) {
        let start = Instant::now();
        let _ = propagate(
            &inst.model,
            &inst.primary,
            &inst.constraints,
            &inst.metamodel,
            &depth_cfg(Strategy::Exhaustive),
        );
        let t = start.elapsed();
        ensure(t < Duration::from_secs(5), || {
            format!("seed {}: {t:?}", inst.seed)
        })?;
        slowest = slowest.max(t);
        runs += 1;
    }
    ensure(runs > 0, || "no size-6 instance".into())?;

    let tmp = std::env::temp_dir().join(format!("changeprop-unsolvable-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).map_err(|e| e.to_string())?;
    for (name, text) in [
        ("metamodel.json", UNSOLVABLE.metamodel),
        ("model.json", UNSOLVABLE.model),
        ("constraints.ocl", UNSOLVABLE.constraints),
        ("changes.json", UNSOLVABLE.changes),
    ] {
        std::fs::write(tmp.join(name), text).map_err(|e| e.to_string())?;
    }
    let (code, report) = run_cli(&tmp, "changes.json", &tmp.join("out"))?;
    let _ = std::fs::remove_dir_all(&tmp);
    ensure(code == 2, || format!("unsolvable fixture exits {code}"))?;
    ensure(report.contains("no_plan_within_bound"), || {
        "report status".into()
    })?;
    Ok(format!(
        "exhaustive depth {DEPTH} on {runs} size-6 instances, slowest {slowest:?}; unsolvable fixture exits 2"
    ))
}

fn main() {
    let insts = instances();
    let criteria: [(&str, &dyn Fn() -> Outcome); 8] = [
        ("F1 naming mismatch", &criterion_1),
        ("F2 side effect", &criterion_2),
        ("postulates on random instances", &|| criterion_3(&insts)),
        ("A*/UCS agreement and admissibility", &|| {
            criterion_4(&insts)
        }),
        ("permutation determinism", &|| criterion_5(&insts)),
        ("incremental re-evaluation", &criterion_6),
        ("proximity", &|| criterion_7(&insts)),
        ("exhaustive timing and unsolvable exit", &|| {
            criterion_8(&insts)
        }),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
