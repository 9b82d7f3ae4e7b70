//! The driver: file checking, diagnostics, the corpus runner and artifact
//! emission. `main.rs` only parses arguments and calls into here.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::check::{generate, CheckOptions, Vc};
use crate::horn::{flatten, parse_horn, parse_qualifiers, print_horn, solve, HornFile, HornProblem, Qualifier, SolveResult};
use crate::logic::{check_bool, Pred, Span};
use crate::smt::{SolverConfig, SolverSession, ValidityResult};
use crate::syntax::{frontend, PRELUDE};

/// Default cap on the number of non-value qualifier parameters.
pub const DEFAULT_MAX_QUAL_PARAMS: usize = 1;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub check: CheckOptions,
    pub solver: SolverConfig,
    pub qual_files: Vec<PathBuf>,
    pub max_qual_params: usize,
    pub emit_horn: Option<PathBuf>,
    pub prelude: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            check: CheckOptions::default(),
            solver: SolverConfig::default(),
            qual_files: Vec::new(),
            max_qual_params: DEFAULT_MAX_QUAL_PARAMS,
            emit_horn: None,
            prelude: None,
            jobs: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub end_line: usize,
    pub end_col: usize,
    #[serde(skip)]
    pub span: Span,
    pub message: String,
    /// Id of the failing flat clause, for refinement errors.
    pub clause: Option<usize>,
    pub model: Option<String>,
    /// The failing clause, pretty-printed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Safe,
    Unsafe,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Safe => 0,
            Status::Unsafe => 1,
            Status::Error => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FileReport {
    pub file: String,
    pub status: Status,
    pub diagnostics: Vec<Diagnostic>,
    pub millis: u128,
    pub kvars: usize,
    pub queries: usize,
}

/// 1-based line and column of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, col)
}

fn diagnostic(file: &str, src: &str, span: Span, message: String) -> Diagnostic {
    let (line, col) = line_col(src, span.start);
    let (end_line, end_col) = line_col(src, span.end);
    Diagnostic {
        severity: Severity::Error,
        file: file.to_string(),
        line,
        col,
        end_line,
        end_col,
        span,
        message,
        clause: None,
        model: None,
        detail: None,
    }
}

/// Render a diagnostic with the offending source line underneath.
pub fn render(d: &Diagnostic, src: &str) -> String {
    let mut out = format!("{}:{}:{}: error: {}\n", d.file, d.line, d.col, d.message);
    if let Some(text) = src.lines().nth(d.line.saturating_sub(1)) {
        let width = if d.end_line == d.line {
            d.end_col.saturating_sub(d.col).max(1)
        } else {
            text.len().saturating_sub(d.col - 1).max(1)
        };
        let _ = writeln!(out, "  {text}");
        let _ = writeln!(out, "  {}{}", " ".repeat(d.col - 1), "^".repeat(width));
    }
    if let Some(c) = &d.detail {
        let _ = writeln!(out, "  failing clause {}: {c}", d.clause.unwrap_or(0));
    }
    if let Some(m) = &d.model {
        let _ = writeln!(out, "  counter-model: {}", m.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    out
}

fn load_quals(cfg: &RunConfig) -> Result<Vec<Qualifier>, String> {
    let mut out = Vec::new();
    for p in &cfg.qual_files {
        let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        out.extend(parse_qualifiers(&text).map_err(|e| format!("{}: {e}", p.display()))?);
    }
    Ok(out)
}

fn prelude_text(cfg: &RunConfig) -> Result<String, String> {
    match &cfg.prelude {
        Some(p) => fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(PRELUDE.to_string()),
    }
}

/// The Horn file for a generated verification condition.
pub fn vc_horn_file(vc: &Vc, extra_quals: &[Qualifier]) -> HornFile {
    let mut quals = vc.quals.clone();
    quals.extend(extra_quals.iter().cloned());
    HornFile {
        datas: vc.adts.clone(),
        kvars: vc.kvars.values().cloned().collect(),
        funs: vc.table.clone(),
        quals,
        cstr: vc.cstr.clone(),
    }
}

fn emit_path(cfg: &RunConfig, file: &str) -> Option<PathBuf> {
    let target = cfg.emit_horn.as_ref()?;
    if cfg.inputs.len() <= 1 && !target.is_dir() {
        return Some(target.clone());
    }
    let stem = Path::new(file).file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    Some(target.join(format!("{stem}.horn")))
}

/// Run the whole pipeline on one source text.
pub fn check_source(file: &str, src: &str, cfg: &RunConfig) -> FileReport {
    let start = Instant::now();
    let mut report = FileReport {
        file: file.to_string(),
        status: Status::Safe,
        diagnostics: Vec::new(),
        millis: 0,
        kvars: 0,
        queries: 0,
    };
    let fail = |report: &mut FileReport, status, d| {
        report.status = status;
        report.diagnostics.push(d);
    };

    let prelude = match prelude_text(cfg) {
        Ok(p) => p,
        Err(msg) => {
            fail(&mut report, Status::Error, diagnostic(file, src, Span::default(), msg));
            return report;
        }
    };
    let prog = match frontend(&prelude, src) {
        Ok(p) => p,
        Err(e) => {
            let span = e.span().unwrap_or_default();
            fail(&mut report, Status::Unsafe, diagnostic(file, src, span, e.to_string()));
            return report;
        }
    };
    let vc = match generate(&prog, &cfg.check) {
        Ok(vc) => vc,
        Err(e) => {
            fail(&mut report, Status::Unsafe, diagnostic(file, src, e.span(), e.to_string()));
            return report;
        }
    };
    report.kvars = vc.kvars.len();
    let extra = match load_quals(cfg) {
        Ok(q) => q,
        Err(msg) => {
            fail(&mut report, Status::Error, diagnostic(file, src, Span::default(), msg));
            return report;
        }
    };
    if let Some(path) = emit_path(cfg, file) {
        if let Err(e) = fs::write(&path, print_horn(&vc_horn_file(&vc, &extra))) {
            fail(
                &mut report,
                Status::Error,
                diagnostic(file, src, Span::default(), format!("{}: {e}", path.display())),
            );
            return report;
        }
        info!("wrote {}", path.display());
    }
    let mut quals = vc.quals.clone();
    quals.extend(extra);

    let mut session = match SolverSession::new(cfg.solver.clone()) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut report, Status::Error, diagnostic(file, src, Span::default(), e.to_string()));
            return report;
        }
    };
    if let Err(e) = session.declare_datatypes(&vc.adts) {
        fail(&mut report, Status::Error, diagnostic(file, src, Span::default(), e.to_string()));
        return report;
    }
    let prob = HornProblem {
        kvars: &vc.kvars,
        table: &vc.table,
    };
    let result = solve(&quals, &vc.cstr, &prob, &mut session, cfg.max_qual_params);
    report.queries = session.query_count();
    match result {
        SolveResult::Sat(sigma) => debug!("{file}: solution\n{sigma}"),
        SolveResult::Unsat { clause, result, .. } => {
            let (message, model) = match result {
                ValidityResult::Invalid(m) => (format!("refinement type error: cannot prove `{}`", clause.head), m),
                ValidityResult::Unknown(why) => (
                    format!("refinement type error: solver could not decide `{}` ({why})", clause.head),
                    None,
                ),
                ValidityResult::Valid => unreachable!("failing clauses are not valid"),
            };
            let mut d = diagnostic(file, src, clause.span, message);
            d.clause = Some(clause.id);
            d.model = model;
            d.detail = Some(clause.to_string());
            fail(&mut report, Status::Unsafe, d);
        }
    }
    report.millis = start.elapsed().as_millis();
    report
}

/// Check a file from disk.
pub fn check_file(path: &Path, cfg: &RunConfig) -> (FileReport, String) {
    let file = path.display().to_string();
    match fs::read_to_string(path) {
        Ok(src) => (check_source(&file, &src, cfg), src),
        Err(e) => {
            let d = diagnostic(&file, "", Span::default(), format!("cannot read file: {e}"));
            (
                FileReport {
                    file,
                    status: Status::Error,
                    diagnostics: vec![d],
                    millis: 0,
                    kvars: 0,
                    queries: 0,
                },
                String::new(),
            )
        }
    }
}

/// Check every input, in parallel up to `cfg.jobs`; reports keep input order.
pub fn run_check(cfg: &RunConfig) -> Vec<(FileReport, String)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| cfg.inputs.par_iter().map(|p| check_file(p, cfg)).collect())
}

/// Overall exit status: the worst status of any file.
pub fn exit_code(reports: &[FileReport]) -> i32 {
    reports.iter().map(|r| r.status.exit_code()).max().unwrap_or(0)
}

/// `.re` files directly inside `dir`, sorted by name.
pub fn suite_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "re"))
        .collect();
    out.sort();
    Ok(out)
}

/// Outcome of a standalone Horn problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HornReport {
    pub sat: bool,
    /// Qualifier conjunction per Horn variable, when satisfiable.
    pub assignment: Vec<(String, String)>,
    pub failing_clause: Option<String>,
    pub clause_id: Option<usize>,
}

impl HornReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.sat {
            out.push_str("SAT\n");
            for (k, p) in &self.assignment {
                let _ = writeln!(out, "{k} := {p}");
            }
        } else {
            out.push_str("UNSAT\n");
            if let (Some(id), Some(c)) = (self.clause_id, &self.failing_clause) {
                let _ = writeln!(out, "clause {id}: {c}");
            }
        }
        out
    }
}

/// Solve a textual Horn problem with the file's qualifiers plus `extra`.
pub fn run_horn(text: &str, extra: &[Qualifier], cfg: &RunConfig) -> Result<HornReport, String> {
    let file = parse_horn(text).map_err(|e| e.to_string())?;
    for c in flatten(&file.cstr) {
        let mut env = BTreeMap::new();
        for (x, sort, p) in &c.binders {
            env.insert(x.clone(), sort.clone());
            check_bool(&file.funs, &env, p).map_err(|e| format!("clause {}: {e}", c.id))?;
        }
        check_bool(&file.funs, &env, &c.head).map_err(|e| format!("clause {}: {e}", c.id))?;
    }
    let mut quals = file.quals.clone();
    quals.extend(extra.iter().cloned());
    let kvars = file.kvars.iter().map(|k| (k.name.clone(), k.clone())).collect();
    let mut session = SolverSession::new(cfg.solver.clone()).map_err(|e| e.to_string())?;
    session.declare_datatypes(&file.datas).map_err(|e| e.to_string())?;
    let prob = HornProblem {
        kvars: &kvars,
        table: &file.funs,
    };
    Ok(match solve(&quals, &file.cstr, &prob, &mut session, cfg.max_qual_params) {
        SolveResult::Sat(sigma) => HornReport {
            sat: true,
            assignment: kvars
                .keys()
                .map(|k| {
                    let p = Pred::conj(sigma.get(k).iter().cloned());
                    (k.clone(), p.to_string())
                })
                .collect(),
            failing_clause: None,
            clause_id: None,
        },
        SolveResult::Unsat { clause, .. } => HornReport {
            sat: false,
            assignment: Vec::new(),
            failing_clause: Some(clause.to_string()),
            clause_id: Some(clause.id),
        },
    })
}

/// Read qualifier files for `horn`.
pub fn read_qualifier_files(paths: &[PathBuf]) -> Result<Vec<Qualifier>, String> {
    load_quals(&RunConfig {
        qual_files: paths.to_vec(),
        ..RunConfig::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_is_one_based() {
        let src = "ab\ncde\n";
        assert_eq!(line_col(src, 0), (1, 1));
        assert_eq!(line_col(src, 4), (2, 2));
        assert_eq!(line_col(src, 100), (3, 1));
    }

    #[test]
    fn exit_code_is_worst_status() {
        let r = |status| FileReport {
            file: String::new(),
            status,
            diagnostics: vec![],
            millis: 0,
            kvars: 0,
            queries: 0,
        };
        assert_eq!(exit_code(&[]), 0);
        assert_eq!(exit_code(&[r(Status::Safe), r(Status::Unsafe)]), 1);
        assert_eq!(exit_code(&[r(Status::Error), r(Status::Unsafe)]), 2);
    }

    #[test]
    fn syntax_errors_reject_with_a_span() {
        let r = check_source("t.re", "let x = (", &RunConfig::default());
        assert_eq!(r.status, Status::Unsafe);
        assert_eq!(r.diagnostics[0].line, 1);
    }
}
