use std::path::{Path, PathBuf};
use std::process::Command;

use crosstl::backend::{CodegenError, Generator, OutputUnit, Registry, TargetLanguage};
use crosstl::ir::{dump_module, ShaderModule, TypeExpr};
use crosstl_cli::{run, Io, EXIT_DIAGNOSTICS, EXIT_OK, EXIT_USAGE};

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn run_with(registry: &Registry, args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("crosstl").chain(args.iter().copied());
    let code = run(argv, registry, &mut Io { out: &mut out, err: &mut err });
    Outcome { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn cli(args: &[&str]) -> Outcome {
    run_with(&Registry::with_builtins(), args)
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn corpus(name: &str) -> String {
    corpus_dir().join(name).display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Mock;

impl Generator for Mock {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::custom("testlang", ".test")
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        Ok(ty.to_string())
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        Ok(vec![OutputUnit {
            suggested_filename: format!("{}.test", module.name),
            target: self.target(),
            text: dump_module(module),
        }])
    }
}

#[test]
fn translate_to_metal() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["translate", &corpus("simple_shader.cgl"), "-t", "metal", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let path = dir.path().join("simple_shader.metal");
    assert!(r.out.contains("wrote"), "{}", r.out);
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("#include <metal_stdlib>"), "{text}");
}

#[test]
fn unknown_target_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["translate", &corpus("simple_shader.cgl"), "-t", "spirv", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("unknown target 'spirv'"), "{}", r.err);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn glsl_writes_one_file_per_stage_or_one_combined_file() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["translate", &corpus("simple_shader.cgl"), "-t", "glsl", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(dir.path().join("simple_shader.vert").exists());
    assert!(dir.path().join("simple_shader.frag").exists());

    let combined = tempfile::tempdir().unwrap();
    let r = cli(&[
        "translate",
        &corpus("simple_shader.cgl"),
        "-t",
        "glsl",
        "--emit-mode",
        "combined",
        "-o",
        s(combined.path()),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let text = std::fs::read_to_string(combined.path().join("simple_shader.glsl")).unwrap();
    assert_eq!(text.matches("#version").count(), 2);

    let r = cli(&[
        "translate",
        &corpus("simple_shader.cgl"),
        "-t",
        "hlsl",
        "--emit-mode",
        "combined",
        "-o",
        s(combined.path()),
    ]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn glsl_output_translates_back_to_crossgl() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["translate", &corpus("simple_shader.cgl"), "-t", "glsl", "-o", s(dir.path())]).code, EXIT_OK);
    let back = tempfile::tempdir().unwrap();
    let vert = dir.path().join("simple_shader.vert");
    let frag = dir.path().join("simple_shader.frag");
    let r = cli(&["translate", s(&vert), s(&frag), "-t", "crossgl", "-o", s(back.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let text = std::fs::read_to_string(back.path().join("simple_shader.cgl")).unwrap();
    assert!(text.contains("vertex {") && text.contains("fragment {"), "{text}");
}

#[test]
fn bad_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let hlsl = dir.path().join("x.hlsl");
    std::fs::write(&hlsl, "float4 main() : SV_Target { return 0; }").unwrap();
    assert_eq!(cli(&["translate", s(&hlsl), "-t", "glsl", "-o", s(dir.path())]).code, EXIT_USAGE);
    let txt = dir.path().join("x.txt");
    std::fs::write(&txt, "").unwrap();
    assert_eq!(cli(&["translate", s(&txt), "-t", "glsl", "-o", s(dir.path())]).code, EXIT_USAGE);
    let missing = dir.path().join("missing.cgl");
    assert_eq!(cli(&["translate", s(&missing), "-t", "glsl", "-o", s(dir.path())]).code, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_USAGE);
}

#[test]
fn type_errors_exit_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cgl");
    std::fs::write(&bad, "shader Bad {\n    float f() {\n        return true;\n    }\n}\n").unwrap();
    let r = cli(&["translate", s(&bad), "-t", "hlsl", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_DIAGNOSTICS);
    assert!(r.err.contains("bad.cgl:3"), "{}", r.err);
    assert!(!dir.path().join("bad.hlsl").exists());
}

#[test]
fn strict_turns_warnings_into_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cu = dir.path().join("k.cu");
    std::fs::write(
        &cu,
        "__global__ void k(float* a) { a[threadIdx.x] = 1.0f; }\nint main() { k<<<1, 1>>>(0); return 0; }\n",
    )
    .unwrap();
    let r = cli(&["translate", s(&cu), "-t", "crossgl", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.err.contains("warning"), "{}", r.err);
    let r = cli(&["translate", s(&cu), "-t", "crossgl", "--strict", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_DIAGNOSTICS);
}

#[test]
fn list_targets_follows_the_registry() {
    let r = cli(&["list-targets"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.out.lines().count(), 6);
    assert!(r.out.lines().next().unwrap().starts_with("crossgl"));
    assert_eq!(cli(&["--list-targets"]).out, r.out);

    let mut registry = Registry::with_builtins();
    registry.register_backend(Mock).unwrap();
    let r = run_with(&registry, &["list-targets"]);
    assert_eq!(r.out.lines().count(), 7);
    assert!(r.out.lines().last().unwrap().starts_with("testlang"));

    let dir = tempfile::tempdir().unwrap();
    let r = run_with(&registry, &["translate", &corpus("array_test.cgl"), "-t", "testlang", "-o", s(dir.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(dir.path().join("array_test.test").exists());
}

#[test]
fn eval_prints_results() {
    let r = cli(&[
        "eval",
        &corpus("complex_pbr.cgl"),
        "distributionGGX",
        "vec3(0.0, 0.0, 1.0)",
        "vec3(0.0, 0.0, 1.0)",
        "0.5",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let value: f64 = r.out.trim().parse().unwrap();
    assert!((value - 5.0929582).abs() < 1e-6, "{value}");

    assert_eq!(cli(&["eval", &corpus("complex_pbr.cgl"), "distributionGGX", "1.0"]).code, EXIT_USAGE);
    assert_eq!(cli(&["eval", &corpus("complex_pbr.cgl"), "noSuchFunction"]).code, EXIT_USAGE);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("div.cgl");
    std::fs::write(&file, "shader D { int div(int a, int b) { return a / b; } }").unwrap();
    let r = cli(&["eval", s(&file), "div", "-7", "2"]);
    assert_eq!((r.code, r.out.trim()), (EXIT_OK, "-3"));
    let r = cli(&["eval", s(&file), "div", "1", "0"]);
    assert_eq!(r.code, EXIT_DIAGNOSTICS);
    assert!(r.err.contains("division by zero"), "{}", r.err);
}

#[test]
fn conformance_on_an_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("out.jsonl");
    let r = cli(&["conformance", s(dir.path()), "--jsonl", s(&jsonl)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("no corpus programs found"));
    assert_eq!(std::fs::read_to_string(&jsonl).unwrap(), "");
    assert_eq!(cli(&["conformance", "/nonexistent/corpus"]).code, EXIT_USAGE);
}

#[test]
fn conformance_on_the_corpus_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let first = cli(&["conformance", s(&corpus_dir()), "--jsonl", s(&a)]);
    let second = cli(&["conformance", s(&corpus_dir()), "--jsonl", s(&b), "--sequential"]);
    assert_eq!(first.code, EXIT_OK, "{}", first.out);
    assert!(first.out.contains("36/36 cells passed"), "{}", first.out);
    assert_eq!(first.out, second.out);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn translation_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        for target in ["crossgl", "glsl", "hlsl", "metal", "cuda", "rust"] {
            let r = cli(&["translate", &corpus("matrix_compute.cgl"), "-t", target, "-o", s(dir.path())]);
            assert_eq!(r.code, EXIT_OK, "{target}: {}", r.err);
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for name in names {
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn binary_lists_targets() {
    let out = Command::new(env!("CARGO_BIN_EXE_crosstl")).arg("list-targets").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 6);
}
