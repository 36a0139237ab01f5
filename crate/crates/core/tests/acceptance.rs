//! Acceptance criteria, one line each. Run with `cargo test --test acceptance`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crosstl::backend::{
    generate, map_type, CodegenError, CudaGenerator, Feature, Generator, OutputUnit, Registry, TargetLanguage,
};
use crosstl::conformance::{
    list_targets_text, load_corpus, run_conformance, sample_inputs, values_agree, CellStatus, Execution, FeatureStatus,
    TOLERANCE,
};
use crosstl::frontend::parse_source;
use crosstl::import::{import_sources, SourceLanguage};
use crosstl::interp::{eval_function, Value};
use crosstl::ir::{ast_equal, dump_module, ShaderModule, TypeExpr};
use crosstl::semantics::check_module;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn load(name: &str) -> (ShaderModule, ShaderModule) {
    let path = corpus_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = parse_source(&text, &path.display().to_string()).unwrap();
    let mut typed = parsed.clone();
    let diags = check_module(&mut typed);
    assert!(diags.is_empty(), "{diags:?}");
    (parsed, typed)
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn translation_matrix() -> Outcome {
    let start = Instant::now();
    let report =
        run_conformance(&corpus_dir(), &Registry::with_builtins(), Execution::Parallel).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(report.programs.len() == 6 && report.targets.len() == 6, || {
        format!("matrix is {}x{}", report.programs.len(), report.targets.len())
    })?;
    let failing: Vec<String> = report
        .cells
        .iter()
        .filter(|c| c.status != CellStatus::Pass)
        .map(|c| format!("{}/{}: {:?}", c.program, c.target, c.messages))
        .collect();
    ensure(failing.is_empty(), || failing.join("; "))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("{}/{} cells in {:.0?}", report.passed(), report.cells.len(), elapsed))
}

fn crossgl_round_trip() -> Outcome {
    let programs = load_corpus(&corpus_dir()).map_err(|e| e.to_string())?;
    let mut same = 0;
    for p in &programs {
        let typed = p.typed.as_ref().ok_or_else(|| format!("{}: {:?}", p.name, p.diagnostics))?;
        let units = generate(typed, &TargetLanguage::CrossGL).map_err(|e| e.to_string())?;
        let back = parse_source(&units[0].text, "roundtrip.cgl").map_err(|e| format!("{}: {e}", p.name))?;
        ensure(ast_equal(p.parsed.as_ref().unwrap(), &back), || format!("{} differs after round trip", p.name))?;
        same += 1;
    }
    ensure(same == 6, || format!("{same} programs"))?;
    Ok(format!("{same}/{} ast_equal", programs.len()))
}

fn glsl_semantic_preservation() -> Outcome {
    let programs = load_corpus(&corpus_dir()).map_err(|e| e.to_string())?;
    let (mut functions, mut worst) = (0, 0.0f64);
    for p in &programs {
        let typed = p.typed.as_ref().unwrap();
        let units = generate(typed, &TargetLanguage::Glsl).map_err(|e| e.to_string())?;
        let files: Vec<(String, String)> = units.into_iter().map(|u| (u.suggested_filename, u.text)).collect();
        let mut back = import_sources(&typed.name, SourceLanguage::Glsl, &files).map_err(|e| e.to_string())?;
        let diags = check_module(&mut back.module);
        ensure(diags.is_empty() && back.warnings.is_empty(), || format!("{}: {diags:?}", p.name))?;
        for name in &p.pure_functions {
            let f = typed.find_function(name).unwrap();
            let params: Vec<TypeExpr> = f.params.iter().map(|p| p.ty.clone()).collect();
            for args in sample_inputs(&params) {
                let a = eval_function(typed, name, &args);
                let b = eval_function(&back.module, name, &args);
                match values_agree(&a, &b) {
                    Some(e) if e <= TOLERANCE => worst = worst.max(e),
                    _ => return Err(format!("{name}: {a:?} vs {b:?}")),
                }
            }
            functions += 1;
        }
    }
    ensure(functions >= 10, || format!("only {functions} pure functions"))?;
    Ok(format!("{functions} functions x 32 points, max relative error {worst:e}"))
}

fn oracle_spot_values() -> Outcome {
    let (_, pbr) = load("complex_pbr.cgl");
    let z = Value::vec(&[0.0, 0.0, 1.0]);
    let ggx = eval_function(&pbr, "distributionGGX", &[z.clone(), z.clone(), Value::Float(0.5)]);
    let smith = eval_function(&pbr, "geometrySmith", &[z.clone(), z.clone(), z, Value::Float(0.5)]);

    // a = 0.25, a2 = 0.0625, NdotH = 1, so denom = a2 and the result is a2 / (pi * a2^2).
    let a2: f64 = 0.0625;
    let expected_ggx = a2 / (std::f64::consts::PI * a2 * a2);
    // k = (0.5 + 1)^2 / 8; each Schlick term is 1 / (1 - k + k).
    let k: f64 = 1.5 * 1.5 / 8.0;
    let expected_smith = (1.0 / (1.0 - k + k)) * (1.0 / (1.0 - k + k));

    let (Ok(Value::Float(g)), Ok(Value::Float(s))) = (&ggx, &smith) else {
        return Err(format!("{ggx:?}, {smith:?}"));
    };
    ensure((g - 5.09296).abs() <= 1e-4 && (g - expected_ggx).abs() <= 1e-9, || format!("distributionGGX = {g}"))?;
    ensure((s - 1.0).abs() <= 1e-9 && (s - expected_smith).abs() <= 1e-9, || format!("geometrySmith = {s}"))?;
    Ok(format!("distributionGGX = {g:.6}, geometrySmith = {s}"))
}

fn feature_coverage() -> Outcome {
    let report =
        run_conformance(&corpus_dir(), &Registry::with_builtins(), Execution::Sequential).map_err(|e| e.to_string())?;
    let mut degraded = Vec::new();
    for row in &report.features {
        for (t, status) in report.targets.iter().zip(&row.cells) {
            match status {
                FeatureStatus::Pass => {}
                FeatureStatus::Degraded(note) => degraded.push((t.clone(), row.feature, note.clone())),
                other => return Err(format!("{} / {}: {other:?}", t, row.feature.label())),
            }
        }
    }
    let expected = vec![
        (TargetLanguage::Cuda, Feature::Shaders, "graphics stages emitted as __device__ helpers".to_string()),
        (TargetLanguage::RustSrc, Feature::Textures, "texture sampling is not supported".to_string()),
    ];
    degraded.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    ensure(degraded == expected, || format!("degradations {degraded:?}"))?;
    ensure(report.features.len() == Feature::ALL.len(), || "missing feature rows".into())?;
    Ok(format!("{} rows x {} targets, 2 documented degradations", report.features.len(), report.targets.len()))
}

/// Prints the IR dump. Handles every program, so it should pass everywhere.
struct MockGenerator;

impl Generator for MockGenerator {
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

fn extensibility() -> Outcome {
    let mut registry = Registry::with_builtins();
    let before = list_targets_text(&registry).lines().count();
    registry.register_backend(MockGenerator).map_err(|e| e.to_string())?;
    let listing = list_targets_text(&registry);
    let after = listing.lines().count();
    ensure(before == 6 && after == 7 && listing.contains("testlang"), || listing.clone())?;
    let report = run_conformance(&corpus_dir(), &registry, Execution::Parallel).map_err(|e| e.to_string())?;
    let mock = TargetLanguage::custom("testlang", ".test");
    let column: Vec<_> = report.programs.iter().map(|p| report.cell(p, &mock).map(|c| c.status)).collect();
    ensure(column.iter().all(|s| *s == Some(CellStatus::Pass)), || format!("mock column {column:?}"))?;
    ensure(report.all_passed(), || "built-in columns regressed".into())?;
    Ok(format!("{after} targets listed, mock column {}/{}", column.len(), report.programs.len()))
}

fn words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        let ident = c.is_ascii_alphanumeric() || c == '_';
        match (ident, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(&text[s..i]);
                start = None;
            }
            _ => {}
        }
        if !ident && !c.is_whitespace() {
            out.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

fn cuda_surface() -> Outcome {
    let (_, module) = load("matrix_compute.cgl");
    let text = CudaGenerator.generate(&module).map_err(|e| e.to_string())?.remove(0).text;
    let body = text.split("#endif // CROSSGL_RUNTIME_H").nth(1).ok_or("runtime guard missing")?;
    let tokens = words(body);
    let kernels: Vec<&str> =
        module.kernels().map(|f| if f.name == "main" { "compute_main" } else { f.name.as_str() }).collect();
    let globals: Vec<&str> =
        tokens.windows(4).filter(|w| w[0] == "__global__" && w[1] == "void" && w[3] == "(").map(|w| w[2]).collect();
    ensure(tokens.iter().filter(|t| **t == "__global__").count() == kernels.len(), || format!("{globals:?}"))?;
    ensure(globals == kernels, || format!("kernels {globals:?}, expected {kernels:?}"))?;
    let helpers: Vec<&str> = module.functions.iter().filter(|f| f.stage.is_none()).map(|f| f.name.as_str()).collect();
    for h in &helpers {
        let declared = tokens.windows(4).any(|w| w[0] == "__device__" && w[2] == *h && w[3] == "(");
        ensure(declared, || format!("helper {h} is not __device__"))?;
        let global = tokens.windows(4).any(|w| w[0] == "__global__" && w[2] == *h);
        ensure(!global, || format!("helper {h} is __global__"))?;
    }
    Ok(format!("{} __global__ kernels, {} __device__ helpers", kernels.len(), helpers.len()))
}

fn type_mapping() -> Outcome {
    let types = [
        TypeExpr::INT,
        TypeExpr::FLOAT,
        TypeExpr::BOOL,
        TypeExpr::vec(2),
        TypeExpr::vec(3),
        TypeExpr::vec(4),
        TypeExpr::mat(2),
        TypeExpr::mat(3),
        TypeExpr::mat(4),
        TypeExpr::Sampler2D,
    ];
    let golden: [(TargetLanguage, [Option<&str>; 10]); 6] = [
        (
            TargetLanguage::CrossGL,
            [
                Some("int"),
                Some("float"),
                Some("bool"),
                Some("vec2"),
                Some("vec3"),
                Some("vec4"),
                Some("mat2"),
                Some("mat3"),
                Some("mat4"),
                Some("sampler2D"),
            ],
        ),
        (
            TargetLanguage::Glsl,
            [
                Some("int"),
                Some("float"),
                Some("bool"),
                Some("vec2"),
                Some("vec3"),
                Some("vec4"),
                Some("mat2"),
                Some("mat3"),
                Some("mat4"),
                Some("sampler2D"),
            ],
        ),
        (
            TargetLanguage::Hlsl,
            [
                Some("int"),
                Some("float"),
                Some("bool"),
                Some("float2"),
                Some("float3"),
                Some("float4"),
                Some("float2x2"),
                Some("float3x3"),
                Some("float4x4"),
                Some("Texture2D"),
            ],
        ),
        (
            TargetLanguage::Metal,
            [
                Some("int"),
                Some("float"),
                Some("bool"),
                Some("float2"),
                Some("float3"),
                Some("float4"),
                Some("float2x2"),
                Some("float3x3"),
                Some("float4x4"),
                Some("texture2d<float>"),
            ],
        ),
        (
            TargetLanguage::Cuda,
            [
                Some("int"),
                Some("float"),
                Some("bool"),
                Some("float2"),
                Some("float3"),
                Some("float4"),
                Some("float2x2"),
                Some("float3x3"),
                Some("float4x4"),
                Some("cudaTextureObject_t"),
            ],
        ),
        (
            TargetLanguage::RustSrc,
            [
                Some("i32"),
                Some("f32"),
                Some("bool"),
                Some("Vec2"),
                Some("Vec3"),
                Some("Vec4"),
                Some("Mat2"),
                Some("Mat3"),
                Some("Mat4"),
                None,
            ],
        ),
    ];
    let mut checked = 0;
    for (target, row) in &golden {
        for (ty, want) in types.iter().zip(row) {
            let got = map_type(ty, target);
            match (want, &got) {
                (Some(w), Ok(g)) if w == g => {}
                (None, Err(CodegenError::UnsupportedType { ty: t, target: tt })) if t == ty && tt == target => {}
                _ => return Err(format!("{ty} in {target}: expected {want:?}, got {got:?}")),
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} mappings, UnsupportedType only for sampler2D in Rust"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 translation matrix", translation_matrix),
        ("2 CrossGL round trip", crossgl_round_trip),
        ("3 GLSL semantic preservation", glsl_semantic_preservation),
        ("4 oracle spot values", oracle_spot_values),
        ("5 feature coverage", feature_coverage),
        ("6 backend extensibility", extensibility),
        ("7 CUDA kernel surface", cuda_surface),
        ("8 type mapping table", type_mapping),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{}/8 acceptance criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
