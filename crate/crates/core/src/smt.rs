//! SMT-LIB2 serialization and a long-lived solver subprocess.
//!
//! Each validity query is wrapped in `(push 1)` / `(pop 1)` so one process
//! serves every query of a checking job. A query is valid when the solver
//! answers `unsat` for the hypotheses conjoined with the negated goal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use log::{debug, warn};
use thiserror::Error;

use crate::logic::{BinOp, Name, Pred, Sort, SymbolTable};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("sort `{0}` cannot be used for a solver variable")]
    UnsupportedSort(Sort),
    #[error("datatype or constructor `{0}` declared twice")]
    DuplicateTycon(Name),
    #[error("Horn application `{0}` reached the solver")]
    KAppInQuery(Name),
    #[error("could not start solver `{cmd}`: {source}")]
    Spawn {
        cmd: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver i/o: {0}")]
    Io(String),
}

/// Outcome of a validity query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidityResult {
    Valid,
    Invalid(Option<String>),
    Unknown(String),
}

impl ValidityResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidityResult::Valid)
    }
}

/// An algebraic datatype as seen by the solver: constructors with field sorts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdtDecl {
    pub name: Name,
    pub ctors: Vec<(Name, Vec<Sort>)>,
}

/// Logic-level name of the tester for constructor `c`.
pub fn tester_name(c: &str) -> Name {
    format!("is-{c}")
}

/// Logic-level name of the `i`-th (1-based) selector of constructor `c`.
pub fn selector_name(c: &str, i: usize) -> Name {
    format!("{c}.{i}")
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub command: Vec<String>,
    pub timeout_ms: u64,
    pub emit_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: vec!["z3".into(), "-in".into()],
            timeout_ms: 10_000,
            emit_dir: None,
        }
    }
}

impl SolverConfig {
    /// Parse a whitespace-separated command line such as `z3 -in`.
    pub fn with_command(mut self, cmd: &str) -> Self {
        self.command = cmd.split_whitespace().map(str::to_string).collect();
        self
    }
}

fn quote(s: &str) -> String {
    format!("|{s}|")
}

fn smt_sort(s: &Sort) -> Result<String, SmtError> {
    match s {
        Sort::Int => Ok("Int".into()),
        Sort::Bool => Ok("Bool".into()),
        Sort::Data(n) => Ok(quote(n)),
        // Type variables share the integer order.
        Sort::Var(_) => Ok("Int".into()),
        Sort::Func(..) => Err(SmtError::UnsupportedSort(s.clone())),
    }
}

fn smt_pred(p: &Pred, adts: &AdtIndex, out: &mut String) -> Result<(), SmtError> {
    match p {
        Pred::Var(x) => out.push_str(&quote(x)),
        Pred::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Pred::Int(n) if *n < 0 => {
            let _ = write!(out, "(- {})", n.unsigned_abs());
        }
        Pred::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Pred::Bin(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Eq | BinOp::Iff => "=",
                BinOp::Ne => "distinct",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::And => "and",
                BinOp::Or => "or",
                BinOp::Imp => "=>",
            };
            let _ = write!(out, "({sym} ");
            smt_pred(a, adts, out)?;
            out.push(' ');
            smt_pred(b, adts, out)?;
            out.push(')');
        }
        Pred::Not(a) => {
            out.push_str("(not ");
            smt_pred(a, adts, out)?;
            out.push(')');
        }
        Pred::Ite(c, a, b) => {
            out.push_str("(ite ");
            smt_pred(c, adts, out)?;
            out.push(' ');
            smt_pred(a, adts, out)?;
            out.push(' ');
            smt_pred(b, adts, out)?;
            out.push(')');
        }
        Pred::UApp(f, args) => {
            let head = match adts.testers.get(f) {
                Some(c) => format!("(_ is {})", quote(c)),
                None => quote(f),
            };
            if args.is_empty() {
                out.push_str(&head);
            } else {
                let _ = write!(out, "({head}");
                for a in args {
                    out.push(' ');
                    smt_pred(a, adts, out)?;
                }
                out.push(')');
            }
        }
        Pred::KApp(k, _) => return Err(SmtError::KAppInQuery(k.clone())),
    }
    Ok(())
}

/// Names that datatype declarations define implicitly.
#[derive(Default, Clone, Debug)]
struct AdtIndex {
    sorts: BTreeSet<Name>,
    builtins: BTreeSet<Name>,
    testers: BTreeMap<Name, Name>,
}

impl AdtIndex {
    fn new(adts: &[AdtDecl]) -> Self {
        let mut ix = AdtIndex::default();
        for d in adts {
            ix.sorts.insert(d.name.clone());
            for (c, fields) in &d.ctors {
                ix.builtins.insert(c.clone());
                ix.testers.insert(tester_name(c), c.clone());
                for i in 1..=fields.len() {
                    ix.builtins.insert(selector_name(c, i));
                }
            }
        }
        ix
    }
}

fn datatype_script(adts: &[AdtDecl]) -> Result<String, SmtError> {
    if adts.is_empty() {
        return Ok(String::new());
    }
    let mut s = String::from("(declare-datatypes (");
    for d in adts {
        let _ = write!(s, "({} 0)", quote(&d.name));
    }
    s.push_str(") (");
    for d in adts {
        s.push('(');
        for (c, fields) in &d.ctors {
            let _ = write!(s, "({}", quote(c));
            for (i, f) in fields.iter().enumerate() {
                let _ = write!(s, " ({} {})", quote(&selector_name(c, i + 1)), smt_sort(f)?);
            }
            s.push(')');
        }
        s.push(')');
    }
    s.push_str("))\n");
    Ok(s)
}

fn collect_data_sorts(s: &Sort, out: &mut BTreeSet<Name>) {
    match s {
        Sort::Data(n) => {
            out.insert(n.clone());
        }
        Sort::Func(args, res) => {
            args.iter().for_each(|a| collect_data_sorts(a, out));
            collect_data_sorts(res, out);
        }
        _ => {}
    }
}

/// Declarations, assertions and the negated goal; no `check-sat`.
fn query_body(
    table: &SymbolTable,
    adts: &AdtIndex,
    binders: &[(Name, Sort, Pred)],
    goals: &[&Pred],
    with_sorts: bool,
) -> Result<(String, Vec<String>), SmtError> {
    let bound: BTreeSet<&str> = binders.iter().map(|(x, _, _)| x.as_str()).collect();
    let mut used = BTreeSet::new();
    let mut visit = |p: &Pred| {
        p.visit(&mut |q| match q {
            Pred::UApp(f, _) => {
                used.insert(f.clone());
            }
            Pred::Var(x) if !bound.contains(x.as_str()) => {
                used.insert(x.clone());
            }
            _ => {}
        })
    };
    binders.iter().for_each(|(_, _, h)| visit(h));
    goals.iter().for_each(|g| visit(g));

    let mut data = BTreeSet::new();
    for (_, s, _) in binders {
        collect_data_sorts(s, &mut data);
    }
    let mut funs = Vec::new();
    for f in &used {
        if adts.builtins.contains(f) || adts.testers.contains_key(f) {
            continue;
        }
        // Unknown free names are left to the solver to report.
        if let Some(s) = table.get(f) {
            collect_data_sorts(s, &mut data);
            funs.push((f.clone(), s.clone()));
        }
    }

    let mut s = String::new();
    if with_sorts {
        for d in &data {
            if !adts.sorts.contains(d) {
                let _ = writeln!(s, "(declare-sort {} 0)", quote(d));
            }
        }
    }
    for (f, sort) in &funs {
        let Sort::Func(args, res) = sort else {
            unreachable!("symbol tables store function sorts")
        };
        let args: Vec<String> = args.iter().map(smt_sort).collect::<Result<_, _>>()?;
        let _ = writeln!(
            s,
            "(declare-fun {} ({}) {})",
            quote(f),
            args.join(" "),
            smt_sort(res)?
        );
    }
    for (x, sort, _) in binders {
        let _ = writeln!(s, "(declare-fun {} () {})", quote(x), smt_sort(sort)?);
    }
    for (_, _, h) in binders {
        if h.is_true() {
            continue;
        }
        let mut a = String::from("(assert ");
        smt_pred(h, adts, &mut a)?;
        a.push_str(")\n");
        s.push_str(&a);
    }
    let mut negs = Vec::new();
    for g in goals {
        let mut a = String::from("(assert (not ");
        smt_pred(g, adts, &mut a)?;
        a.push_str("))\n");
        negs.push(a);
    }
    Ok((s, negs))
}

fn data_sorts_of_query(
    table: &SymbolTable,
    binders: &[(Name, Sort, Pred)],
    goal: &Pred,
) -> BTreeSet<Name> {
    let mut data = BTreeSet::new();
    for (_, s, _) in binders {
        collect_data_sorts(s, &mut data);
    }
    let mut syms = goal.symbols();
    for (_, _, h) in binders {
        syms.extend(h.symbols());
    }
    for f in syms {
        if let Some(s) = table.get(&f) {
            collect_data_sorts(s, &mut data);
        }
    }
    data
}

/// Standalone script: sort declarations, symbol and binder declarations,
/// one assertion per hypothesis, the negated goal and `(check-sat)`.
pub fn serialize_query(
    table: &SymbolTable,
    binders: &[(Name, Sort, Pred)],
    goal: &Pred,
) -> Result<String, SmtError> {
    serialize_query_with(table, &[], binders, goal)
}

/// As [`serialize_query`], with datatype declarations.
pub fn serialize_query_with(
    table: &SymbolTable,
    adts: &[AdtDecl],
    binders: &[(Name, Sort, Pred)],
    goal: &Pred,
) -> Result<String, SmtError> {
    let ix = AdtIndex::new(adts);
    let mut s = String::new();
    // Sorts mentioned by datatype fields but not themselves datatypes.
    let mut extra = BTreeSet::new();
    for d in adts {
        for (_, fs) in &d.ctors {
            fs.iter().for_each(|f| collect_data_sorts(f, &mut extra));
        }
    }
    extra.extend(data_sorts_of_query(table, binders, goal));
    for d in &extra {
        if !ix.sorts.contains(d) {
            let _ = writeln!(s, "(declare-sort {} 0)", quote(d));
        }
    }
    s.push_str(&datatype_script(adts)?);
    let (body, negs) = query_body(table, &ix, binders, &[goal], false)?;
    s.push_str(&body);
    s.push_str(&negs[0]);
    s.push_str("(check-sat)\n");
    Ok(s)
}

static SESSION_IDS: AtomicUsize = AtomicUsize::new(0);

/// A solver child process speaking SMT-LIB2 over stdin/stdout.
pub struct SolverSession {
    config: SolverConfig,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    adts: Vec<AdtDecl>,
    index: AdtIndex,
    declared_sorts: BTreeSet<Name>,
    queries: usize,
    id: usize,
}

impl SolverSession {
    pub fn new(config: SolverConfig) -> Result<Self, SmtError> {
        let (child, stdin, lines) = spawn(&config)?;
        let mut s = SolverSession {
            config,
            child,
            stdin,
            lines,
            adts: Vec::new(),
            index: AdtIndex::default(),
            declared_sorts: BTreeSet::new(),
            queries: 0,
            id: SESSION_IDS.fetch_add(1, Ordering::Relaxed),
        };
        s.preamble()?;
        Ok(s)
    }

    fn preamble(&mut self) -> Result<(), SmtError> {
        let t = self.config.timeout_ms;
        self.send(&format!(
            "(set-option :print-success false)\n(set-option :produce-models true)\n(set-option :timeout {t})\n"
        ))
    }

    fn restart(&mut self) -> Result<(), SmtError> {
        let _ = self.child.kill();
        let _ = self.child.wait();
        let (child, stdin, lines) = spawn(&self.config)?;
        self.child = child;
        self.stdin = stdin;
        self.lines = lines;
        self.preamble()?;
        let sorts = std::mem::take(&mut self.declared_sorts);
        let adts = std::mem::take(&mut self.adts);
        self.index = AdtIndex::default();
        for d in &sorts {
            self.send(&format!("(declare-sort {} 0)\n", quote(d)))?;
        }
        self.declared_sorts = sorts;
        if !adts.is_empty() {
            self.declare_datatypes(&adts)?;
        }
        Ok(())
    }

    pub fn query_count(&self) -> usize {
        self.queries
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn send(&mut self, s: &str) -> Result<(), SmtError> {
        self.stdin
            .write_all(s.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SmtError::Io(e.to_string()))
    }

    /// Declare datatypes once for the rest of the session.
    pub fn declare_datatypes(&mut self, decls: &[AdtDecl]) -> Result<(), SmtError> {
        if decls.is_empty() {
            return Ok(());
        }
        let mut seen: BTreeSet<Name> = self.index.sorts.clone();
        seen.extend(self.index.builtins.iter().cloned());
        for d in decls {
            if !seen.insert(d.name.clone()) {
                return Err(SmtError::DuplicateTycon(d.name.clone()));
            }
            for (c, _) in &d.ctors {
                if !seen.insert(c.clone()) {
                    return Err(SmtError::DuplicateTycon(c.clone()));
                }
            }
        }
        let mut extra = BTreeSet::new();
        for d in decls {
            for (_, fs) in &d.ctors {
                fs.iter().for_each(|f| collect_data_sorts(f, &mut extra));
            }
        }
        let names: BTreeSet<Name> = decls.iter().map(|d| d.name.clone()).collect();
        for e in extra {
            if !names.contains(&e) && !self.index.sorts.contains(&e) {
                self.declare_sort(&e)?;
            }
        }
        let script = datatype_script(decls)?;
        self.send(&script)?;
        self.adts.extend(decls.iter().cloned());
        self.index = AdtIndex::new(&self.adts);
        Ok(())
    }

    pub fn adts(&self) -> &[AdtDecl] {
        &self.adts
    }

    fn declare_sort(&mut self, d: &str) -> Result<(), SmtError> {
        if self.declared_sorts.insert(d.to_string()) {
            self.send(&format!("(declare-sort {} 0)\n", quote(d)))?;
        }
        Ok(())
    }

    fn emit(&self, table: &SymbolTable, binders: &[(Name, Sort, Pred)], goal: &Pred) {
        let Some(dir) = &self.config.emit_dir else {
            return;
        };
        match serialize_query_with(table, &self.adts, binders, goal) {
            Ok(script) => {
                let path = dir.join(format!("s{:03}_q{:05}.smt2", self.id, self.queries));
                if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, script)) {
                    warn!("could not write {}: {e}", path.display());
                }
            }
            Err(e) => warn!("could not serialize query: {e}"),
        }
    }

    /// Is `∧ hyps ⇒ goal` valid?
    pub fn check_valid(
        &mut self,
        table: &SymbolTable,
        binders: &[(Name, Sort, Pred)],
        goal: &Pred,
    ) -> ValidityResult {
        self.check_valid_many(table, binders, std::slice::from_ref(goal))
            .pop()
            .unwrap_or_else(|| ValidityResult::Unknown("no result".into()))
    }

    /// Check several goals under one shared set of hypotheses.
    pub fn check_valid_many(
        &mut self,
        table: &SymbolTable,
        binders: &[(Name, Sort, Pred)],
        goals: &[Pred],
    ) -> Vec<ValidityResult> {
        match self.try_check_many(table, binders, goals) {
            Ok(rs) => rs,
            Err(e) => {
                warn!("solver failure: {e}");
                if let Err(e2) = self.restart() {
                    warn!("solver restart failed: {e2}");
                }
                goals
                    .iter()
                    .map(|_| ValidityResult::Unknown(e.to_string()))
                    .collect()
            }
        }
    }

    fn try_check_many(
        &mut self,
        table: &SymbolTable,
        binders: &[(Name, Sort, Pred)],
        goals: &[Pred],
    ) -> Result<Vec<ValidityResult>, SmtError> {
        for g in goals {
            self.emit(table, binders, g);
            self.queries += 1;
        }
        let goal_refs: Vec<&Pred> = goals.iter().collect();
        let index = self.index.clone();
        for d in data_sorts_of_query(table, binders, &Pred::conj(goals.iter().cloned())) {
            if !index.sorts.contains(&d) {
                self.declare_sort(&d)?;
            }
        }
        let (body, negs) = query_body(table, &index, binders, &goal_refs, false)?;
        self.send(&format!("(push 1)\n{body}"))?;
        let mut out = Vec::with_capacity(goals.len());
        for neg in negs {
            self.send(&format!("(push 1)\n{neg}(check-sat)\n"))?;
            let r = self.read_answer()?;
            out.push(r);
            self.send("(pop 1)\n")?;
        }
        self.send("(pop 1)\n")?;
        Ok(out)
    }

    fn recv_line(&mut self) -> Result<String, SmtError> {
        let wait = Duration::from_millis(self.config.timeout_ms + 5_000);
        match self.lines.recv_timeout(wait) {
            Ok(l) => Ok(l),
            Err(RecvTimeoutError::Timeout) => Err(SmtError::Io("solver timed out".into())),
            Err(RecvTimeoutError::Disconnected) => Err(SmtError::Io("solver exited".into())),
        }
    }

    fn read_sexp(&mut self) -> Result<String, SmtError> {
        let mut text = String::new();
        let mut depth = 0i64;
        loop {
            let line = self.recv_line()?;
            for ch in line.chars() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
            }
            text.push_str(&line);
            text.push('\n');
            if depth <= 0 && !text.trim().is_empty() {
                return Ok(text.trim_end().to_string());
            }
        }
    }

    fn read_answer(&mut self) -> Result<ValidityResult, SmtError> {
        let mut errors = Vec::new();
        loop {
            let line = self.recv_line()?;
            let t = line.trim();
            match t {
                "unsat" => {
                    return Ok(if errors.is_empty() {
                        ValidityResult::Valid
                    } else {
                        ValidityResult::Unknown(errors.join("; "))
                    })
                }
                "sat" => {
                    self.send("(get-model)\n")?;
                    let model = self.read_sexp()?;
                    return Ok(if errors.is_empty() {
                        ValidityResult::Invalid(Some(model))
                    } else {
                        ValidityResult::Unknown(errors.join("; "))
                    });
                }
                "unknown" | "timeout" => {
                    self.send("(get-info :reason-unknown)\n")?;
                    let reason = self.read_sexp()?;
                    return Ok(ValidityResult::Unknown(reason));
                }
                "" => continue,
                _ if t.starts_with("(error") => {
                    debug!("solver error: {t}");
                    errors.push(t.to_string());
                }
                _ => debug!("ignoring solver output: {t}"),
            }
        }
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        let _ = self.send("(exit)\n");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn spawn(config: &SolverConfig) -> Result<(Child, ChildStdin, Receiver<String>), SmtError> {
    let (prog, args) = config.command.split_first().ok_or_else(|| SmtError::Spawn {
        cmd: String::new(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty solver command"),
    })?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SmtError::Spawn {
            cmd: config.command.join(" "),
            source,
        })?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            match line {
                Ok(l) => {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    });
    Ok((child, stdin, rx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    #[test]
    fn serialization_is_deterministic_and_complete() {
        let binders = vec![
            ("x".to_string(), Sort::Int, Pred::le(Pred::Int(0), v("x"))),
            (
                "v".to_string(),
                Sort::Int,
                Pred::eq(v("v"), Pred::add(v("x"), Pred::Int(1))),
            ),
        ];
        let goal = Pred::le(Pred::Int(0), v("v"));
        let a = serialize_query(&SymbolTable::new(), &binders, &goal).unwrap();
        let b = serialize_query(&SymbolTable::new(), &binders, &goal).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("(declare-fun |x| () Int)"));
        assert!(a.contains("(assert (not (<= 0 |v|)))"));
        assert!(a.ends_with("(check-sat)\n"));
    }

    #[test]
    fn datatypes_get_testers_and_selectors() {
        let list = AdtDecl {
            name: "list".into(),
            ctors: vec![
                ("Nil".into(), vec![]),
                (
                    "Cons".into(),
                    vec![Sort::Var("a".into()), Sort::Data("list".into())],
                ),
            ],
        };
        let s = datatype_script(&[list]).unwrap();
        assert_eq!(
            s,
            "(declare-datatypes ((|list| 0)) (((|Nil|)(|Cons| (|Cons.1| Int) (|Cons.2| |list|)))))\n"
        );
        assert!(datatype_script(&[]).unwrap().is_empty());
    }

    #[test]
    fn kapp_is_rejected() {
        let goal = Pred::KApp("k".into(), vec!["x".into()]);
        assert!(matches!(
            serialize_query(&SymbolTable::new(), &[], &goal),
            Err(SmtError::KAppInQuery(_))
        ));
    }

    #[test]
    fn function_sorted_binder_is_unsupported() {
        let binders = vec![(
            "f".to_string(),
            Sort::func(vec![Sort::Int], Sort::Int),
            Pred::tt(),
        )];
        assert!(matches!(
            serialize_query(&SymbolTable::new(), &binders, &Pred::tt()),
            Err(SmtError::UnsupportedSort(_))
        ));
    }

    #[test]
    fn live_session_answers_valid_invalid_and_datatype_queries() {
        let mut sess = SolverSession::new(SolverConfig::default()).unwrap();
        let binders = vec![("x".to_string(), Sort::Int, Pred::le(Pred::Int(0), v("x")))];
        let good = Pred::le(Pred::Int(0), Pred::add(v("x"), Pred::Int(1)));
        let bad = Pred::lt(Pred::Int(0), v("x"));
        let t = SymbolTable::new();
        assert_eq!(sess.check_valid(&t, &binders, &good), ValidityResult::Valid);
        assert!(matches!(sess.check_valid(&t, &binders, &bad), ValidityResult::Invalid(Some(_))));
        let rs = sess.check_valid_many(&t, &binders, &[good.clone(), bad, good]);
        assert_eq!(rs.iter().filter(|r| r.is_valid()).count(), 2);

        sess.declare_datatypes(&[AdtDecl {
            name: "lst".into(),
            ctors: vec![("N".into(), vec![]), ("C".into(), vec![Sort::Int, Sort::Data("lst".into())])],
        }])
        .unwrap();
        let ys = vec![(
            "y".to_string(),
            Sort::Data("lst".into()),
            Pred::uapp(tester_name("C"), vec![v("y")]),
        )];
        let goal = Pred::not(Pred::uapp(tester_name("N"), vec![v("y")]));
        assert_eq!(sess.check_valid(&t, &ys, &goal), ValidityResult::Valid);
        assert!(matches!(
            sess.declare_datatypes(&[AdtDecl { name: "lst".into(), ctors: vec![] }]),
            Err(SmtError::DuplicateTycon(_))
        ));
        assert_eq!(sess.query_count(), 6);
    }
}
