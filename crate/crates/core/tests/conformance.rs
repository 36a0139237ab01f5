mod common;

use crosstl::backend::{Feature, Registry, TargetLanguage};
use crosstl::conformance::*;

fn copy_corpus_into(dir: &std::path::Path) {
    for path in common::corpus_files() {
        std::fs::copy(&path, dir.join(path.file_name().unwrap())).unwrap();
    }
}

#[test]
fn texture_program_is_unsupported_only_in_rust() {
    let dir = tempfile::tempdir().unwrap();
    copy_corpus_into(dir.path());
    std::fs::write(dir.path().join("texture_probe.cgl"), TEXTURE_PROBE).unwrap();
    let report = run_conformance(dir.path(), &Registry::with_builtins(), Execution::Sequential).unwrap();
    let not_passing: Vec<(&str, &str, CellStatus)> = report
        .cells
        .iter()
        .filter(|c| c.status != CellStatus::Pass)
        .map(|c| (c.program.as_str(), c.target.as_str(), c.status))
        .collect();
    assert_eq!(not_passing, [("texture_probe", "rust", CellStatus::Unsupported)]);
    assert!(matches!(report.feature(Feature::Textures, &TargetLanguage::RustSrc), Some(FeatureStatus::Degraded(_))));
    assert_eq!(report.feature(Feature::Textures, &TargetLanguage::Glsl), Some(&FeatureStatus::Pass));
}

#[test]
fn empty_directory_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("README.txt"), "not a shader").unwrap();
    let report = run_conformance(dir.path(), &Registry::with_builtins(), Execution::Parallel).unwrap();
    assert!(report.programs.is_empty() && report.cells.is_empty());
    assert!(report.all_passed());
    assert_eq!(render_table(&report, false), "no corpus programs found\n");
    assert_eq!(to_jsonl(&report), "");
}

#[test]
fn missing_directory_is_an_io_error() {
    assert!(run_conformance("/nonexistent/corpus".as_ref(), &Registry::with_builtins(), Execution::Sequential).is_err());
}

#[test]
fn parallel_matches_sequential() {
    let registry = Registry::with_builtins();
    let seq = run_conformance(&common::corpus_dir(), &registry, Execution::Sequential).unwrap();
    let par = run_conformance(&common::corpus_dir(), &registry, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert_eq!(to_jsonl(&seq), to_jsonl(&par));
    assert_eq!(render_table(&seq, false), render_table(&par, false));
}

#[test]
fn jsonl_has_one_record_per_cell_in_order() {
    let report = run_conformance(&common::corpus_dir(), &Registry::with_builtins(), Execution::Parallel).unwrap();
    assert_eq!(report.cells.len(), report.programs.len() * report.targets.len());
    let lines: Vec<serde_json::Value> = to_jsonl(&report).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), report.cells.len());
    let mut expected = Vec::new();
    for p in &report.programs {
        for t in &report.targets {
            expected.push((p.clone(), t.name().to_string()));
        }
    }
    let got: Vec<(String, String)> = lines
        .iter()
        .map(|v| (v["program"].as_str().unwrap().to_string(), v["target"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(got, expected);
    assert!(lines.iter().all(|v| v["status"] == "pass"));
}

#[test]
fn broken_program_fails_every_cell() {
    let program =
        CorpusProgram::from_source("broken", "broken.cgl".as_ref(), "shader B { float f() { return true; } }");
    let report = run_programs(&[program], &Registry::with_builtins(), Execution::Sequential);
    assert_eq!(report.cells.len(), 6);
    assert!(report.cells.iter().all(|c| c.status == CellStatus::Fail && !c.messages.is_empty()));
    let table = render_table(&report, false);
    assert!(table.contains("0/6 cells passed"), "{table}");
}

#[test]
fn glsl_cells_carry_oracle_results() {
    let report = run_conformance(&common::corpus_dir(), &Registry::with_builtins(), Execution::Sequential).unwrap();
    let oracle = report.cell("complex_pbr", &TargetLanguage::Glsl).and_then(|c| c.oracle.as_ref()).unwrap();
    assert!(oracle.functions > 0);
    assert_eq!(oracle.samples, oracle.functions * SAMPLE_POINTS);
    assert!(oracle.max_rel_error <= TOLERANCE);
}
