mod common;

use crosstl::backend::{generate, TargetLanguage};
use crosstl::frontend::parse_source;
use crosstl::import::*;
use crosstl::ir::*;
use crosstl::semantics::check_module;

const PASSTHROUGH_VERT: &str = "#version 450
layout(location = 0) in vec3 position;
void main() {
    gl_Position = vec4(position, 1.0);
}
";

const KERNELS_CU: &str = "__device__ float sq(float x) { return x * x; }
__global__ void add(float* a, float* b, float* out) {
    int i = threadIdx.x + blockIdx.x * blockDim.x;
    out[i] = a[i] + sq(b[i]);
}
int main() { add<<<1, 64>>>(0, 0, 0); return 0; }
";

#[test]
fn detects_languages_by_extension() {
    use DetectedLanguage::*;
    assert_eq!(detect_language("a.cgl").unwrap(), Source(SourceLanguage::CrossGL));
    assert_eq!(detect_language("dir/a.VERT").unwrap(), Source(SourceLanguage::Glsl));
    assert_eq!(detect_language("a.frag").unwrap(), Source(SourceLanguage::Glsl));
    assert_eq!(detect_language("a.comp").unwrap(), Source(SourceLanguage::Glsl));
    assert_eq!(detect_language("a.glsl").unwrap(), Source(SourceLanguage::Glsl));
    assert_eq!(detect_language("k.cu").unwrap(), Source(SourceLanguage::Cuda));
    assert_eq!(detect_language("s.hlsl").unwrap(), Target(TargetLanguage::Hlsl));
    assert_eq!(detect_language("s.metal").unwrap(), Target(TargetLanguage::Metal));
    assert_eq!(detect_language("s.rs").unwrap(), Target(TargetLanguage::RustSrc));
    assert!(matches!(detect_language("notes.txt"), Err(ImportError::UnknownExtension(_))));
    assert!(detect_language("Makefile").is_err());
    assert_eq!(glsl_stage_for("x.frag"), Some(Stage::Fragment));
    assert_eq!(glsl_stage_for("x.glsl"), None);
    assert_eq!(module_name_for("out/Simple.vert"), "Simple");
}

#[test]
fn passthrough_vertex_shader() {
    let unit = GlslUnit { stage: Some(Stage::Vertex), source: PASSTHROUGH_VERT, file: "p.vert" };
    let imported = import_glsl("Pass", &[unit]).unwrap();
    assert!(imported.warnings.is_empty());
    let expected = parse_source(
        "shader Pass {
            struct VertexInput { vec3 position; }
            struct VertexOutput { vec4 position; }
            vertex {
                VertexOutput main(VertexInput input) {
                    VertexOutput output;
                    output.position = vec4(input.position, 1.0);
                    return output;
                }
            }
        }",
        "expected.cgl",
    )
    .unwrap();
    assert!(ast_equal(&imported.module, &expected), "{}", dump_module(&imported.module));
}

#[test]
fn geometry_shaders_are_unsupported() {
    let src = "#version 450\nlayout(triangles) in;\nvoid main() { }\n";
    let err = import_glsl("G", &[GlslUnit { stage: None, source: src, file: "g.glsl" }]).unwrap_err();
    let ImportError::UnsupportedConstruct { location, construct } = &err else { panic!("{err:?}") };
    assert_eq!(location.line, 2);
    assert!(construct.contains("triangles"));
    assert!(err.to_diagnostic().is_error());
}

#[test]
fn cuda_kernels_and_device_helpers() {
    let imported = import_cuda("K", KERNELS_CU, "k.cu").unwrap();
    let m = &imported.module;
    let sq = m.find_function("sq").unwrap();
    assert_eq!(sq.stage, None);
    let add = m.find_function("add").unwrap();
    assert_eq!(add.stage, Some(Stage::Compute));
    assert_eq!(add.params.len(), 3);
    assert!(add.params.iter().all(|p| matches!(p.ty, TypeExpr::Array(_, None))));

    let mut checked = m.clone();
    assert!(check_module(&mut checked).is_empty());
}

#[test]
fn host_code_is_skipped_with_warnings() {
    let imported = import_cuda("K", KERNELS_CU, "k.cu").unwrap();
    let messages: Vec<&str> = imported.warnings.iter().map(|d| d.message.as_str()).collect();
    assert!(messages.contains(&"kernel launch in host code skipped"), "{messages:?}");
    assert!(messages.contains(&"host function 'main' skipped"), "{messages:?}");
    assert!(imported.warnings.iter().all(|d| !d.is_error()));
    assert!(imported.module.find_function("main").is_none());
}

#[test]
fn shared_memory_is_unsupported() {
    let src = "__shared__ float tile[64];\n__global__ void k(float* a) { a[0] = 1.0f; }\n";
    assert!(matches!(import_cuda("S", src, "s.cu"), Err(ImportError::UnsupportedConstruct { .. })));
}

#[test]
fn glsl_output_imports_back_equal() {
    for path in common::corpus_files() {
        let original = common::typed_file(&path);
        let units = generate(&original, &TargetLanguage::Glsl).unwrap();
        let files: Vec<(String, String)> =
            units.iter().map(|u| (u.suggested_filename.clone(), u.text.clone())).collect();
        let mut back = import_sources(&original.name, SourceLanguage::Glsl, &files).unwrap().module;
        assert!(check_module(&mut back).is_empty(), "{}", path.display());
        assert_eq!(back.name, original.name);
        for f in original.functions.iter().filter(|f| f.stage.is_some()) {
            assert!(back.functions.iter().any(|b| b.stage == f.stage), "{} lost a {:?} entry", path.display(), f.stage);
        }
    }
}

#[test]
fn cuda_output_imports_back() {
    for path in common::corpus_files() {
        let original = common::typed_file(&path);
        if original.kernels().next().is_none() {
            continue;
        }
        let text = &generate(&original, &TargetLanguage::Cuda).unwrap()[0].text;
        let mut back = import_cuda(&original.name, text, "k.cu").unwrap().module;
        assert!(check_module(&mut back).is_empty(), "{}", path.display());
        assert_eq!(back.kernels().count(), original.kernels().count());
    }
}

#[test]
fn crossgl_files_merge() {
    let files = vec![
        ("a.cgl".to_string(), "shader M { float f(float x) { return x; } }".to_string()),
        ("b.cgl".to_string(), "shader M { float g(float x) { return f(x); } }".to_string()),
    ];
    let m = import_sources("M", SourceLanguage::CrossGL, &files).unwrap().module;
    assert_eq!(m.functions.len(), 2);

    let conflicting = vec![
        ("a.cgl".to_string(), "shader M { uniform float u; }".to_string()),
        ("b.cgl".to_string(), "shader M { uniform int u; }".to_string()),
    ];
    assert!(matches!(import_sources("M", SourceLanguage::CrossGL, &conflicting), Err(ImportError::Conflict { .. })));
}
