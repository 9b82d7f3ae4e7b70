//! Acceptance criteria, one `[acceptance]` line per criterion.

mod common;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sprite::check::{generate, globals, CheckOptions};
use sprite::cli::{run_check, run_horn, suite_files, vc_horn_file, RunConfig, Status};
use sprite::horn::{
    flatten, initial_assignment, parse_horn, parse_qualifiers, print_horn, seed_qualifiers, solve, Assignment,
    FlatCstr, HornProblem, SolveResult,
};
use sprite::logic::{BinOp, NameGen, Pred, Sort, Span, SymbolTable};
use sprite::smt::{SolverConfig, SolverSession};
use sprite::syntax::{frontend, PRELUDE};
use sprite::types::{embed, fresh, sub, wf, wfp, BaseTy, Env, Metric, Type};

const ACCEPT_BUDGET: Duration = Duration::from_secs(120);
const RANDOM_BUDGET: Duration = Duration::from_secs(300);
const RANDOM_INSTANCES: usize = 200;
const RANDOM_SEED: u64 = 0x5eed_2024;
const PROPERTY_CASES: u32 = 1000;

fn session() -> SolverSession {
    SolverSession::new(SolverConfig::default()).expect("z3 available")
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn corpus_run(dir: &str, termination: bool) -> Vec<(String, Status, Vec<(usize, usize)>)> {
    let cfg = RunConfig {
        inputs: suite_files(&manifest_path(dir)).expect("corpus dir"),
        check: CheckOptions {
            termination,
            reflection: true,
        },
        jobs: jobs(),
        ..RunConfig::default()
    };
    run_check(&cfg)
        .into_iter()
        .map(|(r, _)| {
            let name = std::path::Path::new(&r.file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let spans = r.diagnostics.iter().map(|d| (d.line, d.col)).collect();
            (name, r.status, spans)
        })
        .collect()
}

#[test]
fn c1_accept_corpus() {
    let start = Instant::now();
    let mut results = corpus_run("tests/corpus/accept", true);
    results.extend(corpus_run("tests/corpus/accept_noterm", false));
    let elapsed = start.elapsed();
    let bad: Vec<_> = results.iter().filter(|(_, s, _)| *s != Status::Safe).map(|(n, ..)| n.clone()).collect();
    let ok = bad.is_empty() && elapsed < ACCEPT_BUDGET && results.len() >= 14;
    report(
        "C1",
        "accept corpus is SAFE within budget",
        ok,
        &format!("{}/{} safe in {:.1?}, budget {:?}, failing {bad:?}", results.len() - bad.len(), results.len(), elapsed, ACCEPT_BUDGET),
    );
    assert!(ok);
}

#[test]
fn c2_reject_corpus() {
    let expected: BTreeMap<&str, (usize, usize)> = BTreeMap::from([
        ("sum_proof_missing_base", (16, 3)),
        ("sum_proof_skipped_step", (14, 3)),
        ("unsound_instantiation", (7, 3)),
        ("bad_list", (5, 24)),
        ("bad_pair", (7, 24)),
        ("ack_swapped_metric", (6, 19)),
        ("sum_int_diverges", (6, 9)),
    ]);
    let results = corpus_run("tests/corpus/reject", true);
    let mut wrong = Vec::new();
    for (name, status, spans) in &results {
        let want = expected.get(name.as_str());
        if *status != Status::Unsafe || want.is_none() || spans.first() != want {
            wrong.push(format!("{name}: {status:?} at {spans:?}, want {want:?}"));
        }
    }
    let ok = wrong.is_empty() && results.len() == expected.len();
    report(
        "C2",
        "reject corpus is UNSAFE at the expected spans",
        ok,
        &format!("{}/{} as expected {wrong:?}", results.len() - wrong.len(), expected.len()),
    );
    assert!(ok);
}

fn horn_sat(rel: &str) -> bool {
    run_horn(&read(rel), &[], &RunConfig::default()).expect("well-formed horn file").sat
}

fn vc_of(src: &str, opts: CheckOptions) -> sprite::check::Vc {
    let prog = frontend(PRELUDE, src).expect("front end");
    generate(&prog, &opts).expect("constraint generation")
}

#[test]
fn c3_vc_fidelity() {
    let mut s = session();
    let mut notes = Vec::new();

    let unguarded_invalid = !horn_sat("tests/data/array_index.horn");
    let guarded_valid = horn_sat("tests/data/array_index_guarded.horn");
    notes.push(format!("unguarded index invalid {unguarded_invalid}, guarded index valid {guarded_valid}"));

    let inc = "type nat = int[v|0 <= v]\n\
               val inc: x:nat => int[v|x < v]\n\
               let inc = (x) => {\n  let one = 1;\n  add(x, one)\n};\n";
    let vc = vc_of(inc, CheckOptions::default());
    let expected = parse_horn(&read("tests/data/inc.horn")).expect("inc clause");
    let (b1, p1) = normal_form(&vc.cstr, &inline_all);
    let (b2, p2) = normal_form(&expected.cstr, &inline_all);
    let inc_eq = vc.kvars.is_empty() && equivalent(&mut s, &vc.table, &union_binders(&b1, &b2), &p1, &p2);
    notes.push(format!("inc VC equivalent to the expected clause {inc_eq}"));

    let vc = vc_of(&read("tests/corpus/accept/abs_main.re"), CheckOptions::default());
    let reference = parse_horn(&read("tests/data/abs_main.horn")).expect("abs_main.horn");
    let gen = flatten(&vc.cstr);
    let expected = flatten(&reference.cstr);
    let heads = |cs: &[FlatCstr]| cs.iter().map(|c| c.head.is_kapp()).collect::<Vec<_>>();
    let mut shape = gen.len() == 3 && vc.kvars.len() == 1 && heads(&gen) == heads(&expected);
    if shape {
        // Clause-wise agreement under each candidate solution.
        let gk = vc.kvars.keys().next().expect("one kvar").clone();
        for body in ["x <= v", "0 < v", "0 <= v"] {
            let p = sprite::syntax::parse_pred(body).expect("pred");
            let sg = Assignment { map: BTreeMap::from([(gk.clone(), vec![p.clone()])]) };
            let sp = Assignment { map: BTreeMap::from([("k".to_string(), vec![p])]) };
            let kvars_p: BTreeMap<_, _> = reference.kvars.iter().map(|k| (k.name.clone(), k.clone())).collect();
            for (g, q) in gen.iter().zip(&expected) {
                let g = applied(g, &sg, &vc.kvars);
                let q = applied(q, &sp, &kvars_p);
                let (bg, pg) = inline_clause(&g, &inline_all);
                let (bq, pq) = inline_clause(&q, &inline_all);
                shape &= equivalent(&mut s, &vc.table, &union_binders(&bg, &bq), &pg, &pq);
            }
        }
    }
    notes.push(format!("abs+main yields the three expected clauses {shape}"));

    let ok = unguarded_invalid && guarded_valid && inc_eq && shape;
    report("C3", "VC fidelity", ok, &notes.join("; "));
    assert!(ok);
}

fn applied(c: &FlatCstr, sigma: &Assignment, kvars: &BTreeMap<String, sprite::logic::KVarDecl>) -> FlatCstr {
    FlatCstr {
        binders: c
            .binders
            .iter()
            .map(|(x, s, p)| (x.clone(), s.clone(), sigma.apply_pred(p, kvars)))
            .collect(),
        head: sigma.apply_pred(&c.head, kvars),
        ..c.clone()
    }
}

#[test]
fn c4_abs_main_solution_and_verdicts() {
    let file = parse_horn(&read("tests/data/abs_main.horn")).expect("abs_main.horn");
    let seeds = parse_qualifiers(&read("tests/data/seed.quals")).expect("seeds");
    let kvars: BTreeMap<_, _> = file.kvars.iter().map(|k| (k.name.clone(), k.clone())).collect();
    let prob = HornProblem {
        kvars: &kvars,
        table: &file.funs,
    };
    let mut s = session();
    let clauses = flatten(&file.cstr);
    let mut notes = Vec::new();

    let solved = match solve(&seeds, &file.cstr, &prob, &mut s, 1) {
        SolveResult::Sat(sigma) => {
            let all = clauses.iter().all(|c| clause_valid(&mut s, &file.funs, &sigma, &kvars, c));
            notes.push(format!("sigma = {}", Pred::conj(sigma.get("k").iter().cloned())));
            all
        }
        SolveResult::Unsat { .. } => false,
    };

    let golden: [(&str, [bool; 3]); 3] = [
        ("x <= v", [true, true, false]),
        ("0 < v", [false, true, true]),
        ("0 <= v", [true, true, true]),
    ];
    let mut verdicts_ok = true;
    for (body, want) in golden {
        let p = sprite::syntax::parse_pred(body).expect("pred");
        let sigma = Assignment { map: BTreeMap::from([("k".to_string(), vec![p])]) };
        let got: Vec<bool> = clauses.iter().map(|c| clause_valid(&mut s, &file.funs, &sigma, &kvars, c)).collect();
        verdicts_ok &= got == want;
        notes.push(format!("{body}: {got:?}"));
    }
    let ok = solved && verdicts_ok;
    report("C4", "abs+main solution and per-clause verdicts", ok, &notes.join("; "));
    assert!(ok);
}

#[test]
fn c5_random_fixpoint_matches_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
    let mut s = session();
    let table = SymbolTable::new();
    let mut mismatches = Vec::new();
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..RANDOM_INSTANCES {
        let inst = Instance::random(&mut rng);
        let expect = oracle(&inst);
        let want = oracle_sets(&inst, &expect);
        let kvars = inst.kvars();
        let prob = HornProblem {
            kvars: &kvars,
            table: &table,
        };
        let quals = inst.qualifiers();
        let init = initial_assignment(&quals, &prob, 1);
        let init_ok = kvars
            .keys()
            .all(|k| init.get(k).iter().cloned().collect::<BTreeSet<_>>() == inst.instance_preds().into_iter().collect());
        let (got_sat, sigma) = match solve(&quals, &inst.cstr(), &prob, &mut s, 1) {
            SolveResult::Sat(sigma) => (true, sigma),
            SolveResult::Unsat { assignment, .. } => (false, assignment),
        };
        let got: BTreeMap<String, BTreeSet<Pred>> = kvars
            .keys()
            .map(|k| (k.clone(), sigma.get(k).iter().cloned().collect()))
            .collect();
        if expect.sat { sat += 1 } else { unsat += 1 }
        if !init_ok || got_sat != expect.sat || got != want {
            mismatches.push(format!("instance {i}: {inst:?}"));
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < RANDOM_BUDGET;
    report(
        "C5",
        "random Horn instances agree with brute-force enumeration",
        ok,
        &format!(
            "{} instances ({sat} sat, {unsat} unsat), {} mismatches, {:.1?}, budget {:?}",
            RANDOM_INSTANCES,
            mismatches.len(),
            elapsed,
            RANDOM_BUDGET
        ),
    );
    for m in mismatches.iter().take(3) {
        eprintln!("{m}");
    }
    assert!(ok);
}

fn metric_sub(clause: &FlatCstr) -> bool {
    let mut found = false;
    clause.head.visit(&mut |p| {
        if let Pred::Bin(BinOp::Sub, a, b) = p {
            found |= **a == Pred::var("j") && **b == Pred::var("i");
        }
    });
    found
}

#[test]
fn c6_termination() {
    let mut s = session();
    let mut notes = Vec::new();

    let src = read("tests/corpus/accept/termination.re");
    let vc = vc_of(&src, CheckOptions::default());
    let erased = erase_kvars(&vc.cstr);
    let candidates: Vec<FlatCstr> = flatten(&erased).into_iter().filter(metric_sub).collect();
    let target = parse_horn(
        "(forall ((i Int) true)
           (forall ((j Int) true)
             (forall ((g Bool) (< i j))
               (forall ((i1 Int) (= i1 (+ i 1)))
                 (forall ((j1 Int) (= j1 j))
                   (head (and (<= 0 (- j1 i1)) (< (- j1 i1) (- j i)))))))))",
    )
    .expect("target");
    let target = &flatten(&target.cstr)[0];
    let range_ok = candidates.len() == 1 && {
        let (bg, pg) = inline_clause(&candidates[0], &inline_all);
        let (bt, pt) = inline_clause(target, &inline_all);
        // Guard binders differ in name only; identify them.
        let pt = pt.subst("g", &Pred::var(guard_name(&candidates[0]))).expect("rename");
        let bt: Vec<_> = bt.into_iter().filter(|(x, _)| x != "g").collect();
        equivalent(&mut s, &vc.table, &union_binders(&bg, &bt), &pg, &pt)
    };
    notes.push(format!("range clause matches {range_ok} ({} candidates)", candidates.len()));

    let v = |x: &str| Pred::var(x);
    let single = wfp(
        &Metric(vec![Pred::sub(v("j"), v("i"))]),
        &Metric(vec![Pred::sub(v("j'"), v("i'"))]),
    )
    .expect("wfp")
    .to_string();
    let lex = wfp(&Metric(vec![v("m"), v("n")]), &Metric(vec![v("m'"), v("n'")]))
        .expect("wfp")
        .to_string();
    let wfp_ok = single == "0 <= j' - i' && j' - i' < j - i"
        && lex == "0 <= m' && (m' < m || m' = m && 0 <= n' && n' < n)";
    notes.push(format!("single metric `{single}`, lexicographic `{lex}`"));

    let ok = range_ok && wfp_ok;
    report("C6", "termination VC and wfp", ok, &notes.join("; "));
    assert!(ok);
}

fn guard_name(c: &FlatCstr) -> String {
    c.binders
        .iter()
        .find(|(x, s, _)| *s == Sort::Bool && x.starts_with("$g"))
        .map(|(x, ..)| x.clone())
        .unwrap_or_else(|| "g".into())
}

#[test]
fn c7_reflection() {
    let mut s = session();
    let mut notes = Vec::new();

    let src = "val sum : n:int => int / n\n\
               def sum = (n) => {\n  if (n == 0) { 0 } else { n + sum(n - 1) }\n}\n";
    let prog = frontend(PRELUDE, src).expect("front end");
    let g = globals(&prog, &CheckOptions::default()).expect("globals");
    let body = prog
        .decls
        .iter()
        .find(|d| d.name == "sum")
        .and_then(|d| d.body.as_ref())
        .and_then(|b| b.as_lambda())
        .map(|(_, b)| b.clone())
        .expect("sum body");
    let n = || Pred::var("n");
    let want = Pred::ite(
        Pred::eq(n(), Pred::Int(0)),
        Pred::Int(0),
        Pred::add(n(), Pred::uapp("sum", vec![Pred::sub(n(), Pred::Int(1))])),
    );
    let got = embed(&body, &g).expect("embed");
    let embed_ok = got == want;
    notes.push(format!("embed(sum) = {got}"));

    let src = "val add : x:int => y:int => int / 0\n\
               def add = (x, y) => { x + y }\n\n\
               val nine : int[v|v = 9]\n\
               let nine = add(4, 5)\n";
    let vc = vc_of(src, CheckOptions::default());
    let clauses = flatten(&vc.cstr);
    let add_ok = clauses.len() == 1 && {
        let c = &clauses[0];
        let (_, p) = inline_clause(c, &inline_temps);
        let Pred::Bin(BinOp::Imp, hyp, head) = &p else {
            unreachable!("inline_clause returns an implication")
        };
        let has_sum = hyp
            .conjuncts()
            .contains(&Pred::eq(Pred::var("v"), Pred::add(Pred::Int(4), Pred::Int(5))));
        let has_goal = **head == Pred::eq(Pred::var("v"), Pred::Int(9));
        notes.push(format!("add 4 5 clause: {p}"));
        let valid = clause_valid(&mut s, &vc.table, &Assignment::default(), &vc.kvars, c);
        has_sum && has_goal && valid
    };
    let ok = embed_ok && add_ok;
    report("C7", "reflection embedding and add 4 5", ok, &notes.join("; "));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Properties

fn run_property<S: Strategy>(runner: &mut TestRunner, s: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner.run(&s, f).map_err(|e| e.to_string())
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn base(p: Pred) -> Type {
    Type::base(BaseTy::Int, "v", p)
}

#[test]
fn c8_properties() {
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();

    results.push((
        "substitution identities",
        run_property(
            &mut runner(),
            (arb_pred(&["x", "y", "z"], false, true), arb_term(&["y", "z"], false)),
            |(p, e)| {
                prop_assert_eq!(p.subst("x", &Pred::var("x")).unwrap(), p.clone());
                prop_assert_eq!(p.subst("w", &e).unwrap(), p.clone());
                prop_assert!(!p.subst("x", &e).unwrap().free_vars().contains("x"));
                prop_assert_eq!(p.rename1("x", "w").rename1("w", "x"), p.clone());
                let both = p.subst("x", &e).unwrap().subst("y", &Pred::Int(1)).unwrap();
                let e1 = e.subst("y", &Pred::Int(1)).unwrap();
                let m = BTreeMap::from([("x".to_string(), e1), ("y".to_string(), Pred::Int(1))]);
                prop_assert_eq!(both, p.subst_many(&m).unwrap());
                Ok(())
            },
        ),
    ));

    let solver = RefCell::new(session());
    let env = Env::empty().bind("y", Type::int());
    results.push((
        "sub-reflexivity is valid",
        run_property(
            &mut runner(),
            (
                arb_pred(&["v", "y"], false, true),
                arb_pred(&["v", "a", "y"], false, true),
                any::<bool>(),
            ),
            |(p, q, function)| {
                let t = if function {
                    Type::fun("a", base(p), base(q))
                } else {
                    base(p)
                };
                let c = sub(&env, &t, &t, Span::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
                let mut s = solver.borrow_mut();
                for mut fc in flatten(&c) {
                    fc.binders.insert(0, ("y".into(), Sort::Int, Pred::tt()));
                    prop_assert!(
                        clause_valid(&mut s, &SymbolTable::new(), &Assignment::default(), &BTreeMap::new(), &fc),
                        "invalid clause {}",
                        fc
                    );
                }
                Ok(())
            },
        ),
    ));

    let shape = (prop::collection::vec(any::<bool>(), 3), arb_pred(&["v", "y"], false, false), 0..3usize);
    results.push((
        "fresh and apply preserve well-formedness",
        run_property(&mut runner(), shape, |(holes, p, arity)| {
            let slot = |i: usize, p: &Pred| if holes[i] { Type::hole(BaseTy::Int) } else { base(p.clone()) };
            let mut t = slot(arity, &p);
            for i in (0..arity).rev() {
                t = Type::fun(format!("a{i}"), slot(i, &p), t);
            }
            let mut gen = NameGen::new();
            let mut out = Vec::new();
            let ft = fresh(&env, &t, &mut gen, &mut out);
            prop_assert!(!ft.has_holes());
            prop_assert_eq!(out.len(), holes[..=arity].iter().filter(|h| **h).count());
            prop_assert!(wf(&env, &ft).is_ok(), "fresh type ill-formed: {}", ft);
            let kvars: BTreeMap<_, _> = out.iter().map(|k| (k.name.clone(), k.clone())).collect();
            let table = SymbolTable::new();
            let prob = HornProblem {
                kvars: &kvars,
                table: &table,
            };
            let sigma = initial_assignment(&seed_qualifiers(), &prob, 1);
            let at = ft.map_preds(&mut |q| sigma.apply_pred(q, &kvars));
            let mut kapps = false;
            at.visit_refines(&mut |r| kapps |= !r.pred().kvars().is_empty());
            prop_assert!(!kapps);
            prop_assert!(wf(&env, &at).is_ok(), "applied type ill-formed: {}", at);
            Ok(())
        }),
    ));

    results.push((
        "constraint generation is deterministic",
        run_property(&mut runner(), arb_program(), |src| {
            let prog = frontend(PRELUDE, &src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
            let a = generate(&prog, &CheckOptions::default());
            let b = generate(&frontend(PRELUDE, &src).unwrap(), &CheckOptions::default());
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a.cstr, &b.cstr);
                    prop_assert_eq!(&a.kvars, &b.kvars);
                    prop_assert_eq!(print_horn(&vc_horn_file(&a, &[])), print_horn(&vc_horn_file(&b, &[])));
                }
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                _ => prop_assert!(false, "one run failed"),
            }
            Ok(())
        }),
    ));

    results.push((
        "emit-horn round trip",
        run_property(&mut runner(), arb_program(), |src| {
            let prog = frontend(PRELUDE, &src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
            let Ok(vc) = generate(&prog, &CheckOptions::default()) else {
                return Ok(());
            };
            let file = vc_horn_file(&vc, &[]);
            let text = print_horn(&file);
            let back = parse_horn(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            // Spans are not part of the text format.
            prop_assert_eq!(back.cstr.to_string(), file.cstr.to_string());
            prop_assert_eq!(&back.kvars, &file.kvars);
            prop_assert_eq!(&back.quals, &file.quals);
            prop_assert_eq!(print_horn(&back), text);
            Ok(())
        }),
    ));

    let mut ok = true;
    for (name, r) in &results {
        let pass = r.is_ok();
        ok &= pass;
        let detail = match r {
            Ok(()) => format!("{PROPERTY_CASES} cases"),
            Err(e) => e.clone(),
        };
        report("C8", name, pass, &detail);
    }
    assert!(ok);
}
