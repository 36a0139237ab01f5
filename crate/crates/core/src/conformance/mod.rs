//! The conformance harness: translate every corpus program to every
//! registered target, re-read what can be re-read, and compare interpreter
//! results between the original and the re-imported module.

mod oracle;
mod report;

pub use oracle::{pure_functions, sample_inputs, values_agree, SAMPLE_POINTS, SAMPLE_SEED, TOLERANCE};
pub use report::{color_enabled, list_targets_text, render_table, to_jsonl};

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::backend::{cuda_kernel_signatures, CodegenError, Feature, Generator, OutputUnit, Registry, TargetLanguage};
use crate::frontend::parse_source;
use crate::import::{glsl_stage_for, import_cuda, import_glsl, GlslUnit};
use crate::ir::{visit_block_exprs, ExprKind, ShaderModule, Stage, StmtKind, TypeExpr};
use crate::semantics::check_module;

/// A fragment shader that samples a texture; run against every target to
/// fill the textures row of the feature matrix.
pub const TEXTURE_PROBE: &str = "shader TextureProbe {
    uniform sampler2D albedo;

    fragment {
        vec4 main(vec2 uv) {
            return texture(albedo, uv);
        }
    }
}
";

/// How cells are scheduled. Without the `parallel` feature both run sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// One corpus file after parsing and checking.
#[derive(Debug, Clone)]
pub struct CorpusProgram {
    pub name: String,
    pub path: PathBuf,
    pub features: BTreeSet<Feature>,
    pub pure_functions: Vec<String>,
    /// The module as parsed, before typechecking.
    pub parsed: Option<ShaderModule>,
    /// The typechecked module, when parsing and checking succeeded.
    pub typed: Option<ShaderModule>,
    pub diagnostics: Vec<String>,
}

impl CorpusProgram {
    pub fn from_source(name: &str, path: &Path, source: &str) -> Self {
        let file = path.display().to_string();
        let mut program = CorpusProgram {
            name: name.to_string(),
            path: path.to_path_buf(),
            features: BTreeSet::new(),
            pure_functions: Vec::new(),
            parsed: None,
            typed: None,
            diagnostics: Vec::new(),
        };
        let parsed = match parse_source(source, &file) {
            Ok(m) => m,
            Err(e) => {
                program.diagnostics.push(e.to_diagnostic().to_string());
                return program;
            }
        };
        let mut typed = parsed.clone();
        let diags = check_module(&mut typed);
        program.diagnostics = diags.iter().map(ToString::to_string).collect();
        program.parsed = Some(parsed);
        if program.diagnostics.is_empty() {
            program.features = program_features(&typed);
            program.pure_functions = pure_functions(&typed);
            program.typed = Some(typed);
        }
        program
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let source = std::fs::read_to_string(path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self::from_source(&name, path, &source))
    }
}

/// Reads every `.cgl` file of `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> io::Result<Vec<CorpusProgram>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "cgl") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| CorpusProgram::load(p)).collect()
}

/// Feature rows a module exercises.
pub fn program_features(module: &ShaderModule) -> BTreeSet<Feature> {
    let mut features = BTreeSet::from([Feature::BasicSyntax]);
    let mut types: Vec<&TypeExpr> = Vec::new();
    types.extend(module.globals.iter().map(|g| &g.ty));
    types.extend(module.structs.iter().flat_map(|s| s.members.iter().map(|m| &m.ty)));
    for f in &module.functions {
        types.extend(f.params.iter().map(|p| &p.ty));
        types.push(&f.return_type);
        match f.stage {
            Some(Stage::Compute) => {
                features.insert(Feature::ComputeKernels);
            }
            Some(_) => {
                features.insert(Feature::Shaders);
            }
            None => {
                features.insert(Feature::Functions);
            }
        }
        for s in &f.body {
            s.visit_stmts(&mut |s| match &s.kind {
                StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::For { .. } => {
                    features.insert(Feature::ControlFlow);
                }
                StmtKind::VarDecl { ty, .. } if ty.is_array() => {
                    features.insert(Feature::Arrays);
                }
                _ => {}
            });
        }
        visit_block_exprs(&f.body, &mut |e| match &e.kind {
            ExprKind::Ternary { .. } => {
                features.insert(Feature::ControlFlow);
            }
            ExprKind::Index { .. } => {
                features.insert(Feature::Arrays);
            }
            ExprKind::Call { callee, .. } if callee == "texture" => {
                features.insert(Feature::Textures);
            }
            _ => {}
        });
    }
    if !module.structs.is_empty() {
        features.insert(Feature::Structures);
    }
    for t in types {
        if t.is_array() {
            features.insert(Feature::Arrays);
        }
        if t.innermost() == &TypeExpr::Sampler2D {
            features.insert(Feature::Textures);
        }
    }
    features
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pass,
    /// The generator rejected a construct it documents as unsupported.
    Unsupported,
    Fail,
}

impl CellStatus {
    pub fn label(self) -> &'static str {
        match self {
            CellStatus::Pass => "PASS",
            CellStatus::Unsupported => "UNSUPPORTED",
            CellStatus::Fail => "FAIL",
        }
    }
}

/// Interpreter comparison between a module and its re-import.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub functions: usize,
    pub samples: usize,
    pub max_rel_error: f64,
}

/// One program × target cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub program: String,
    pub target: String,
    pub status: CellStatus,
    pub checks: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureStatus {
    Pass,
    /// Handled by a documented fallback, or documented as unsupported.
    Degraded(String),
    Fail(String),
    NotExercised,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRow {
    pub feature: Feature,
    pub cells: Vec<FeatureStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformanceReport {
    pub programs: Vec<String>,
    pub targets: Vec<TargetLanguage>,
    /// Sorted by program, then target in registry order.
    pub cells: Vec<CellReport>,
    pub features: Vec<FeatureRow>,
}

impl ConformanceReport {
    pub fn cell(&self, program: &str, target: &TargetLanguage) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.program == program && c.target == target.name())
    }

    pub fn passed(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Pass).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.cells.len()
    }

    pub fn feature(&self, feature: Feature, target: &TargetLanguage) -> Option<&FeatureStatus> {
        let col = self.targets.iter().position(|t| t == target)?;
        self.features.iter().find(|r| r.feature == feature).map(|r| &r.cells[col])
    }
}

/// Runs the whole corpus in `dir` against every generator of `registry`.
pub fn run_conformance(dir: &Path, registry: &Registry, execution: Execution) -> io::Result<ConformanceReport> {
    let programs = load_corpus(dir)?;
    Ok(run_programs(&programs, registry, execution))
}

pub fn run_programs(programs: &[CorpusProgram], registry: &Registry, execution: Execution) -> ConformanceReport {
    let generators: Vec<&dyn Generator> = registry.iter().collect();
    let jobs: Vec<(&CorpusProgram, &dyn Generator)> =
        programs.iter().flat_map(|p| generators.iter().map(move |g| (p, *g))).collect();
    let cells = run_jobs(&jobs, execution);
    let probe = CorpusProgram::from_source("TextureProbe", Path::new("<texture probe>"), TEXTURE_PROBE);
    let probe_jobs: Vec<_> = generators.iter().map(|g| (&probe, *g)).collect();
    let probe_cells = run_jobs(&probe_jobs, execution);
    let targets = registry.targets();
    let features = feature_matrix(programs, &generators, &cells, &probe_cells);
    ConformanceReport { programs: programs.iter().map(|p| p.name.clone()).collect(), targets, cells, features }
}

fn run_jobs(jobs: &[(&CorpusProgram, &dyn Generator)], execution: Execution) -> Vec<CellReport> {
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return jobs.par_iter().map(|(p, g)| check_cell(p, *g)).collect();
    }
    let _ = execution;
    jobs.iter().map(|(p, g)| check_cell(p, *g)).collect()
}

fn feature_matrix(
    programs: &[CorpusProgram],
    generators: &[&dyn Generator],
    cells: &[CellReport],
    probe: &[CellReport],
) -> Vec<FeatureRow> {
    Feature::ALL
        .iter()
        .map(|&feature| {
            let row = generators
                .iter()
                .enumerate()
                .map(|(col, g)| {
                    let mut exercised: Vec<&CellReport> = programs
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.features.contains(&feature))
                        .map(|(i, _)| &cells[i * generators.len() + col])
                        .collect();
                    if feature == Feature::Textures {
                        exercised.push(&probe[col]);
                    }
                    if let Some(d) = g.degradations().into_iter().find(|d| d.feature == feature) {
                        return FeatureStatus::Degraded(d.note);
                    }
                    if exercised.is_empty() {
                        return FeatureStatus::NotExercised;
                    }
                    match exercised.iter().find(|c| c.status != CellStatus::Pass) {
                        None => FeatureStatus::Pass,
                        Some(c) => FeatureStatus::Fail(format!("{}: {}", c.program, c.messages.join("; "))),
                    }
                })
                .collect();
            FeatureRow { feature, cells: row }
        })
        .collect()
}

struct Cell {
    report: CellReport,
}

impl Cell {
    fn check(&mut self, name: &str, ok: bool, why: impl FnOnce() -> String) {
        if ok {
            self.report.checks.push(name.to_string());
        } else {
            self.fail(format!("{name}: {}", why()));
        }
    }

    fn fail(&mut self, message: String) {
        self.report.status = CellStatus::Fail;
        self.report.messages.push(message);
    }
}

/// Translates one program for one generator and runs the target's checks.
pub fn check_cell(program: &CorpusProgram, generator: &dyn Generator) -> CellReport {
    let target = generator.target();
    let mut cell = Cell {
        report: CellReport {
            program: program.name.clone(),
            target: target.name().to_string(),
            status: CellStatus::Pass,
            checks: Vec::new(),
            oracle: None,
            messages: Vec::new(),
        },
    };
    let (Some(parsed), Some(typed)) = (&program.parsed, &program.typed) else {
        cell.fail(format!("frontend: {}", program.diagnostics.join("; ")));
        return cell.report;
    };
    let units = match generator.generate(typed) {
        Ok(units) => units,
        Err(e @ CodegenError::UnsupportedConstruct { .. }) => {
            cell.report.status = CellStatus::Unsupported;
            cell.report.messages.push(e.to_string());
            return cell.report;
        }
        Err(e) => {
            cell.fail(format!("generate: {e}"));
            return cell.report;
        }
    };
    cell.report.checks.push("generate".into());
    cell.check("output", !units.is_empty() && units.iter().all(|u| balanced(&u.text)), || {
        "empty or unbalanced output".into()
    });
    match target {
        TargetLanguage::CrossGL => check_crossgl(&mut cell, parsed, &units),
        TargetLanguage::Glsl => check_glsl(&mut cell, program, typed, &units),
        TargetLanguage::Cuda => check_cuda(&mut cell, typed, &units),
        _ => {}
    }
    cell.report
}

fn check_crossgl(cell: &mut Cell, parsed: &ShaderModule, units: &[OutputUnit]) {
    match parse_source(&units[0].text, &units[0].suggested_filename) {
        Ok(back) => cell.check("round trip", crate::ir::ast_equal(parsed, &back), || {
            "reparsed module differs from the original".into()
        }),
        Err(e) => cell.fail(format!("reparse: {e}")),
    }
}

fn check_glsl(cell: &mut Cell, program: &CorpusProgram, typed: &ShaderModule, units: &[OutputUnit]) {
    let glsl: Vec<GlslUnit> = units
        .iter()
        .map(|u| GlslUnit {
            stage: glsl_stage_for(&u.suggested_filename),
            source: &u.text,
            file: &u.suggested_filename,
        })
        .collect();
    let mut imported = match import_glsl(&typed.name, &glsl) {
        Ok(i) => i,
        Err(e) => return cell.fail(format!("import: {e}")),
    };
    let diags = check_module(&mut imported.module);
    let diags: Vec<String> = imported.warnings.iter().chain(&diags).map(ToString::to_string).collect();
    if !diags.is_empty() {
        return cell.fail(format!("reimport: {}", diags.join("; ")));
    }
    cell.report.checks.push("reimport".into());
    match oracle::compare(typed, &imported.module, &program.pure_functions) {
        Ok(result) => {
            cell.report.checks.push("oracle".into());
            cell.report.oracle = Some(result);
        }
        Err(msg) => cell.fail(format!("oracle: {msg}")),
    }
}

fn check_cuda(cell: &mut Cell, typed: &ShaderModule, units: &[OutputUnit]) {
    let unit = &units[0];
    let imported = match import_cuda(&typed.name, &unit.text, &unit.suggested_filename) {
        Ok(i) => i,
        Err(e) => return cell.fail(format!("import: {e}")),
    };
    let got: Vec<(String, usize)> = imported
        .module
        .kernels()
        .map(|f| (if f.name == "main" { "compute_main".to_string() } else { f.name.clone() }, f.params.len()))
        .collect();
    let want = cuda_kernel_signatures(typed);
    cell.check("kernel signatures", got == want, || format!("expected {want:?}, found {got:?}"));
}

/// Whether (), [] and {} nest properly outside comments and strings.
fn balanced(text: &str) -> bool {
    let mut stack = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '/' if chars.peek() == Some(&'/') => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = ' ';
                for c in chars.by_ref() {
                    if prev == '*' && c == '/' {
                        break;
                    }
                    prev = c;
                }
            }
            '"' => {
                let mut escaped = false;
                for c in chars.by_ref() {
                    match c {
                        '\\' if !escaped => escaped = true,
                        '"' if !escaped => break,
                        _ => escaped = false,
                    }
                }
            }
            '(' | '[' | '{' => stack.push(c),
            ')' | ']' | '}' => {
                let open = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if stack.pop() != Some(open) {
                    return false;
                }
            }
            _ => {}
        }
    }
    stack.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_ignores_comments_and_strings() {
        assert!(balanced("f(a[1]) { /* ) */ } // ]\n\"(\""));
        assert!(!balanced("f(a[1)]"));
        assert!(!balanced("{"));
    }

    #[test]
    fn probe_exercises_textures() {
        let p = CorpusProgram::from_source("TextureProbe", Path::new("probe.cgl"), TEXTURE_PROBE);
        assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
        assert!(p.features.contains(&Feature::Textures));
        assert!(p.features.contains(&Feature::Shaders));
    }
}
