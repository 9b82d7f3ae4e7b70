//! Helpers shared by the acceptance suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sprite::horn::{flatten, Assignment, FlatCstr, Qualifier};
use sprite::logic::{BinOp, Cstr, KVarDecl, Pred, Sort, Span, SymbolTable};
use sprite::smt::SolverSession;

pub fn manifest_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(manifest_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Print one acceptance line past the test harness's output capture.
pub fn report(id: &str, what: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] {id} {tag} {what} ({detail})");
}

// ---------------------------------------------------------------------------
// Clause normalisation

fn definition(x: &str, q: &Pred) -> Option<Pred> {
    let Pred::Bin(BinOp::Eq | BinOp::Iff, a, b) = q else {
        return None;
    };
    let is_x = |p: &Pred| matches!(p, Pred::Var(y) if y == x);
    if is_x(a) && !b.free_vars().contains(x) {
        Some((**b).clone())
    } else if is_x(b) && !a.free_vars().contains(x) {
        Some((**a).clone())
    } else {
        None
    }
}

/// Eliminate binders selected by `inline` whose hypothesis defines them by an
/// equation, returning the remaining binders and `hyps ⇒ head`.
pub fn inline_clause(c: &FlatCstr, inline: &dyn Fn(&str) -> bool) -> (Vec<(String, Sort)>, Pred) {
    let mut su: BTreeMap<String, Pred> = BTreeMap::new();
    let mut kept = Vec::new();
    let mut hyps = Vec::new();
    for (x, s, p) in &c.binders {
        let p = p.subst_many(&su).expect("kvar-free clause");
        let mut def = None;
        let mut rest = Vec::new();
        for q in p.conjuncts() {
            if def.is_none() && inline(x) {
                if let Some(e) = definition(x, &q) {
                    def = Some(e);
                    continue;
                }
            }
            rest.push(q);
        }
        match def {
            Some(e) => {
                for q in rest {
                    hyps.push(q.subst(x, &e).expect("kvar-free clause"));
                }
                su.insert(x.clone(), e);
            }
            None => {
                kept.push((x.clone(), s.clone()));
                hyps.extend(rest);
            }
        }
    }
    let head = c.head.subst_many(&su).expect("kvar-free clause");
    (kept, Pred::imp(Pred::conj(hyps), head))
}

pub fn inline_all(_: &str) -> bool {
    true
}

pub fn inline_temps(x: &str) -> bool {
    x.starts_with('$')
}

/// A kvar-free constraint as one formula over the union of its remaining binders.
pub fn normal_form(c: &Cstr, inline: &dyn Fn(&str) -> bool) -> (Vec<(String, Sort)>, Pred) {
    let mut binders: BTreeMap<String, Sort> = BTreeMap::new();
    let mut parts = Vec::new();
    for fc in flatten(c) {
        let (bs, p) = inline_clause(&fc, inline);
        binders.extend(bs);
        parts.push(p);
    }
    (binders.into_iter().collect(), Pred::conj(parts))
}

/// Is `p ⇔ q` valid with every listed binder universally quantified?
pub fn equivalent(
    session: &mut SolverSession,
    table: &SymbolTable,
    binders: &[(String, Sort)],
    p: &Pred,
    q: &Pred,
) -> bool {
    let bs: Vec<(String, Sort, Pred)> = binders.iter().map(|(x, s)| (x.clone(), s.clone(), Pred::tt())).collect();
    session.check_valid(table, &bs, &Pred::iff(p.clone(), q.clone())).is_valid()
}

pub fn union_binders(a: &[(String, Sort)], b: &[(String, Sort)]) -> Vec<(String, Sort)> {
    let mut m: BTreeMap<String, Sort> = a.iter().cloned().collect();
    m.extend(b.iter().cloned());
    m.into_iter().collect()
}

/// Replace every Horn application by `true`.
pub fn erase_kvars(c: &Cstr) -> Cstr {
    Assignment::default().apply(c, &BTreeMap::new())
}

pub fn clause_valid(
    session: &mut SolverSession,
    table: &SymbolTable,
    sigma: &Assignment,
    kvars: &BTreeMap<String, KVarDecl>,
    c: &FlatCstr,
) -> bool {
    let binders: Vec<_> = c
        .binders
        .iter()
        .map(|(x, s, p)| (x.clone(), s.clone(), sigma.apply_pred(p, kvars)))
        .collect();
    let goal = sigma.apply_pred(&c.head, kvars);
    session.check_valid(table, &binders, &goal).is_valid()
}

// ---------------------------------------------------------------------------
// Random Horn instances

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cmp {
    Le,
    Lt,
    Eq,
}

/// `a·v + b·x + c ⋈ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lin {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub op: Cmp,
}

fn smt_int(n: i64) -> String {
    if n < 0 {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

impl Lin {
    pub fn random(rng: &mut ChaCha8Rng, p_binary: f64) -> Lin {
        let binary = rng.gen_bool(p_binary);
        let mut a = 0;
        while a == 0 {
            a = rng.gen_range(-3..=3);
        }
        let mut b = 0;
        while binary && b == 0 {
            b = rng.gen_range(-3..=3);
        }
        let op = [Cmp::Le, Cmp::Lt, Cmp::Eq][rng.gen_range(0..3)];
        Lin {
            a,
            b,
            c: rng.gen_range(-3..=3),
            op,
        }
    }

    pub fn swap(self) -> Lin {
        Lin {
            a: self.b,
            b: self.a,
            ..self
        }
    }

    pub fn pred(&self, v: &str, x: &str) -> Pred {
        let mut terms = Vec::new();
        for (k, name) in [(self.a, v), (self.b, x)] {
            match k {
                0 => {}
                1 => terms.push(Pred::var(name)),
                k => terms.push(Pred::mul(Pred::Int(k), Pred::var(name))),
            }
        }
        if self.c != 0 || terms.is_empty() {
            terms.push(Pred::Int(self.c));
        }
        let lhs = terms.into_iter().reduce(Pred::add).expect("non-empty");
        let op = match self.op {
            Cmp::Le => BinOp::Le,
            Cmp::Lt => BinOp::Lt,
            Cmp::Eq => BinOp::Eq,
        };
        Pred::bin(op, lhs, Pred::Int(0))
    }

    pub fn smt(&self) -> String {
        let op = match self.op {
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Eq => "=",
        };
        format!(
            "({op} (+ (* {} v) (* {} x) {}) 0)",
            smt_int(self.a),
            smt_int(self.b),
            smt_int(self.c)
        )
    }
}

#[derive(Clone, Debug)]
pub enum Head {
    K(usize),
    Atom(Lin),
}

/// `∀x v. [κ_i(v,x) | κ_i(x,v)] ∧ guard ⇒ head`.
#[derive(Clone, Debug)]
pub struct Clause {
    pub hyp_k: Option<(usize, bool)>,
    pub guard: Option<Lin>,
    pub head: Head,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub nk: usize,
    /// Qualifier bodies over `v` and `z`; `b = 0` means unary.
    pub quals: Vec<Lin>,
    pub clauses: Vec<Clause>,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng) -> Instance {
        let nk = rng.gen_range(1..=3);
        let nq = rng.gen_range(1..=4);
        let mut quals: Vec<Lin> = Vec::new();
        while quals.len() < nq {
            let q = Lin::random(rng, 0.5);
            if !quals.contains(&q) {
                quals.push(q);
            }
        }
        let nc = rng.gen_range(1..=5);
        let clauses = (0..nc)
            .map(|_| Clause {
                hyp_k: rng
                    .gen_bool(0.6)
                    .then(|| (rng.gen_range(0..nk), rng.gen_bool(0.3))),
                guard: rng.gen_bool(0.5).then(|| Lin::random(rng, 0.7)),
                head: if rng.gen_bool(0.6) {
                    Head::K(rng.gen_range(0..nk))
                } else {
                    Head::Atom(Lin::random(rng, 0.7))
                },
            })
            .collect();
        Instance { nk, quals, clauses }
    }

    pub fn kvar_name(i: usize) -> String {
        format!("k{i}")
    }

    pub fn kvars(&self) -> BTreeMap<String, KVarDecl> {
        (0..self.nk)
            .map(|i| {
                let name = Self::kvar_name(i);
                let decl = KVarDecl {
                    name: name.clone(),
                    params: vec![("v".into(), Sort::Int), ("x".into(), Sort::Int)],
                };
                (name, decl)
            })
            .collect()
    }

    pub fn qualifiers(&self) -> Vec<Qualifier> {
        self.quals
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let mut params = vec![("v".to_string(), Sort::Int)];
                if q.b != 0 {
                    params.push(("z".to_string(), Sort::Int));
                }
                Qualifier {
                    name: format!("q{i}"),
                    params,
                    body: q.pred("v", "z"),
                }
            })
            .collect()
    }

    pub fn cstr(&self) -> Cstr {
        let kapp = |k: usize, args: [&str; 2]| {
            Pred::KApp(Self::kvar_name(k), args.iter().map(|a| a.to_string()).collect())
        };
        Cstr::conj(
            self.clauses
                .iter()
                .map(|c| {
                    let mut hyp = Vec::new();
                    if let Some((k, swapped)) = c.hyp_k {
                        hyp.push(kapp(k, if swapped { ["x", "v"] } else { ["v", "x"] }));
                    }
                    if let Some(g) = c.guard {
                        hyp.push(g.pred("v", "x"));
                    }
                    let head = match &c.head {
                        Head::K(k) => kapp(*k, ["v", "x"]),
                        Head::Atom(l) => l.pred("v", "x"),
                    };
                    Cstr::all(
                        "x",
                        Sort::Int,
                        Pred::tt(),
                        Cstr::all("v", Sort::Int, Pred::conj(hyp), Cstr::head(head, Span::default())),
                    )
                })
                .collect(),
        )
    }

    /// Instances of the qualifiers at a Horn variable, in qualifier order.
    pub fn instance_preds(&self) -> Vec<Pred> {
        self.quals.iter().map(|q| q.pred("v", "x")).collect()
    }
}

/// Verdict and strongest solution found by exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub sat: bool,
    /// Bitmask of kept instances per Horn variable.
    pub masks: Vec<u32>,
}

/// Run a batch of `hyp ∧ ¬goal` satisfiability checks in a separate z3
/// process; `true` means the implication is valid.
fn z3_batch(queries: &[(String, String)]) -> Vec<bool> {
    let mut script = String::from("(set-option :print-success false)\n(declare-const v Int)\n(declare-const x Int)\n");
    for (hyp, goal) in queries {
        script.push_str(&format!("(push 1)\n(assert {hyp})\n(assert (not {goal}))\n(check-sat)\n(pop 1)\n"));
    }
    let mut child = Command::new("z3")
        .arg("-in")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("z3 on PATH");
    child
        .stdin
        .take()
        .expect("stdin")
        .write_all(script.as_bytes())
        .expect("write z3 script");
    let mut out = String::new();
    child.stdout.take().expect("stdout").read_to_string(&mut out).expect("read z3");
    child.wait().expect("z3 exit");
    let answers: Vec<bool> = out
        .lines()
        .map(|l| match l.trim() {
            "unsat" => true,
            "sat" => false,
            other => panic!("unexpected z3 answer {other:?}"),
        })
        .collect();
    assert_eq!(answers.len(), queries.len());
    answers
}

fn hyp_smt(inst: &Instance, c: &Clause, subset: u32) -> String {
    let mut parts = vec!["true".to_string()];
    if let Some((_, swapped)) = c.hyp_k {
        for (i, q) in inst.quals.iter().enumerate() {
            if subset & (1 << i) != 0 {
                parts.push(if swapped { q.swap().smt() } else { q.smt() });
            }
        }
    }
    if let Some(g) = c.guard {
        parts.push(g.smt());
    }
    format!("(and {})", parts.join(" "))
}

/// Enumerate every assignment of qualifier subsets; the solutions of the
/// κ-headed clauses are closed under union, so their union is the strongest.
pub fn oracle(inst: &Instance) -> OracleResult {
    let n = inst.quals.len();
    let full: u32 = (1 << n) - 1;

    // valid[(clause, hyp subset, goal)], goal = instance index or usize::MAX for a concrete head
    let mut keys = Vec::new();
    let mut queries = Vec::new();
    for (ci, c) in inst.clauses.iter().enumerate() {
        let subsets: Vec<u32> = if c.hyp_k.is_some() { (0..=full).collect() } else { vec![0] };
        for s in subsets {
            let hyp = hyp_smt(inst, c, s);
            match &c.head {
                Head::K(_) => {
                    for (qi, q) in inst.quals.iter().enumerate() {
                        keys.push((ci, s, qi));
                        queries.push((hyp.clone(), q.smt()));
                    }
                }
                Head::Atom(l) => {
                    keys.push((ci, s, usize::MAX));
                    queries.push((hyp.clone(), l.smt()));
                }
            }
        }
    }
    let valid: BTreeMap<(usize, u32, usize), bool> = keys.into_iter().zip(z3_batch(&queries)).collect();

    let hyp_mask = |c: &Clause, masks: &[u32]| c.hyp_k.map_or(0, |(k, _)| masks[k]);
    let total = 1usize << (n * inst.nk);
    let mut best = vec![0u32; inst.nk];
    for code in 0..total {
        let masks: Vec<u32> = (0..inst.nk).map(|k| ((code >> (k * n)) as u32) & full).collect();
        let solves = inst.clauses.iter().enumerate().all(|(ci, c)| match &c.head {
            Head::K(k) => {
                let s = hyp_mask(c, &masks);
                (0..n).all(|qi| masks[*k] & (1 << qi) == 0 || valid[&(ci, s, qi)])
            }
            Head::Atom(_) => true,
        });
        if solves {
            for (b, m) in best.iter_mut().zip(&masks) {
                *b |= m;
            }
        }
    }
    let sat = inst.clauses.iter().enumerate().all(|(ci, c)| match &c.head {
        Head::K(_) => true,
        Head::Atom(_) => valid[&(ci, hyp_mask(c, &best), usize::MAX)],
    });
    OracleResult { sat, masks: best }
}

/// The oracle's solution as a set of predicates per Horn variable.
pub fn oracle_sets(inst: &Instance, r: &OracleResult) -> BTreeMap<String, BTreeSet<Pred>> {
    let preds = inst.instance_preds();
    (0..inst.nk)
        .map(|k| {
            let set = preds
                .iter()
                .enumerate()
                .filter(|(i, _)| r.masks[k] & (1 << i) != 0)
                .map(|(_, p)| p.clone())
                .collect();
            (Instance::kvar_name(k), set)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Proptest strategies

pub fn arb_term(vars: &'static [&'static str], nonneg: bool) -> impl Strategy<Value = Pred> {
    let lo = if nonneg { 0 } else { -3 };
    let leaf = prop_oneof![
        (lo..=3i64).prop_map(Pred::Int),
        prop::sample::select(vars).prop_map(Pred::var),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pred::add(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Pred::sub(a, b)),
        ]
    })
}

/// Predicates built from comparisons, `&&`, `||` and `!`, plus `==>` when
/// `implications` is set.
pub fn arb_pred(vars: &'static [&'static str], nonneg: bool, implications: bool) -> BoxedStrategy<Pred> {
    let atom = (
        arb_term(vars, nonneg),
        arb_term(vars, nonneg),
        prop::sample::select(vec![BinOp::Eq, BinOp::Lt, BinOp::Le]),
    )
        .prop_map(|(a, b, op)| Pred::bin(op, a, b));
    let leaf = prop_oneof![4 => atom, 1 => any::<bool>().prop_map(Pred::Bool)];
    leaf.prop_recursive(3, 16, 2, move |inner| {
        let ops = if implications {
            vec![BinOp::And, BinOp::Or, BinOp::Imp]
        } else {
            vec![BinOp::And, BinOp::Or]
        };
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(ops)).prop_map(|(a, b, op)| Pred::bin(op, a, b)),
            inner.prop_map(Pred::not),
        ]
    })
    .boxed()
}

/// Surface expressions over `x` and `y`.
pub fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0..=5i64).prop_map(|n| n.to_string()),
        Just("x".to_string()),
        Just("y".to_string()),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, t, e)| format!("if ({a} < {b}) {{ {t} }} else {{ {e} }}")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("{{ let t = {a}; ({b} + t) }}")),
        ]
    })
}

/// A one-function program whose result refinement is random.
pub fn arb_program() -> impl Strategy<Value = String> {
    (arb_pred(&["v", "x", "y"], true, false), arb_expr()).prop_map(|(p, e)| {
        format!("val f : x:int => y:int => int[v|{p}]\nlet f = (x, y) => {{\n  {e}\n}};\n")
    })
}
