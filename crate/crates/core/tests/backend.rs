mod common;

use std::process::Command;

use crosstl::backend::*;
use crosstl::frontend::parse_source;
use crosstl::ir::*;

const ADD: &str = "shader Adder { compute { void add(float a[], float b[], float out[]) { \
    int i = local_id(0) + group_id(0) * group_size(0); out[i] = a[i] + b[i]; } } }";

#[test]
fn registry_holds_the_six_builtins_in_order() {
    let r = Registry::with_builtins();
    assert_eq!(r.len(), 6);
    let names: Vec<String> = r.targets().iter().map(|t| t.name().to_string()).collect();
    assert_eq!(names, ["crossgl", "glsl", "hlsl", "metal", "cuda", "rust"]);
    assert!(r.find("HLSL").is_some());
    assert!(r.find("directx").is_some());
    assert!(r.find("spirv").is_none());
}

#[test]
fn registering_a_builtin_twice_is_rejected() {
    let mut r = Registry::with_builtins();
    let err = r.register_backend(MetalGenerator).unwrap_err();
    assert_eq!(err, CodegenError::DuplicateBackend(TargetLanguage::Metal));
    assert_eq!(r.len(), 6);

    let mut empty = Registry::empty();
    let handle = empty.register_backend(CudaGenerator).unwrap();
    assert_eq!(handle, BackendHandle { index: 0, target: TargetLanguage::Cuda });
}

#[test]
fn cuda_kernels_are_global() {
    let m = common::typed(ADD);
    let units = generate(&m, &TargetLanguage::Cuda).unwrap();
    assert_eq!(units.len(), 1);
    assert_eq!(units[0].suggested_filename, "Adder.cu");
    assert!(units[0].text.contains("__global__ void add("), "{}", units[0].text);
    assert_eq!(cuda_kernel_signatures(&m), [("add".to_string(), 3)]);
}

#[test]
fn empty_module_generates_for_every_target() {
    let m = common::typed("shader Empty { }");
    for t in TargetLanguage::BUILTIN {
        let units = generate(&m, &t).unwrap_or_else(|e| panic!("{t}: {e}"));
        assert!(!units.is_empty(), "{t}");
    }
}

#[test]
fn glsl_writes_one_unit_per_stage() {
    let m = common::typed(common::IMAGE_PROCESSOR);
    let units = generate(&m, &TargetLanguage::Glsl).unwrap();
    let names: Vec<&str> = units.iter().map(|u| u.suggested_filename.as_str()).collect();
    assert_eq!(names, ["ImageProcessor.vert", "ImageProcessor.frag"]);
    assert!(units.iter().all(|u| u.text.starts_with("#version")));
    assert!(units[0].text.contains("gl_Position"));
}

#[test]
fn output_is_deterministic() {
    for path in common::corpus_files() {
        let m = common::typed_file(&path);
        for t in TargetLanguage::BUILTIN {
            let a = generate(&m, &t);
            let b = generate(&m.clone(), &t);
            assert_eq!(a, b, "{} {t}", path.display());
        }
    }
}

#[test]
fn extension_table() {
    let table = [
        (TargetLanguage::CrossGL, ".cgl"),
        (TargetLanguage::Hlsl, ".hlsl"),
        (TargetLanguage::Metal, ".metal"),
        (TargetLanguage::Cuda, ".cu"),
        (TargetLanguage::RustSrc, ".rs"),
    ];
    for (t, ext) in table {
        assert_eq!(t.extension(None), ext);
        assert_eq!(t.extension(Some(Stage::Vertex)), ext);
    }
    assert_eq!(TargetLanguage::Glsl.extension(Some(Stage::Vertex)), ".vert");
    assert_eq!(TargetLanguage::Glsl.extension(Some(Stage::Fragment)), ".frag");
    assert_eq!(TargetLanguage::Glsl.extension(Some(Stage::Compute)), ".comp");
    assert_eq!(TargetLanguage::custom("x", ".xx").extension(None), ".xx");
}

#[test]
fn samplers_have_no_rust_spelling() {
    assert!(matches!(
        map_type(&TypeExpr::Sampler2D, &TargetLanguage::RustSrc),
        Err(CodegenError::UnsupportedType { .. })
    ));
    assert_eq!(map_type(&TypeExpr::vec(3), &TargetLanguage::RustSrc).unwrap(), "Vec3");
    assert_eq!(map_type(&TypeExpr::mat(4), &TargetLanguage::Hlsl).unwrap(), "float4x4");
    assert_eq!(map_type(&TypeExpr::Sampler2D, &TargetLanguage::Metal).unwrap(), "texture2d<float>");
}

#[test]
fn untyped_modules_are_checked_before_generation() {
    let m = parse_source("shader Bad { float f() { return true; } }", "b.cgl").unwrap();
    assert!(matches!(generate(&m, &TargetLanguage::Glsl), Err(CodegenError::InvalidModule(_))));
}

#[test]
fn rust_output_compiles() {
    if Command::new("rustc").arg("--version").output().is_err() {
        eprintln!("rustc not found, skipping");
        return;
    }
    let dir = std::env::temp_dir().join(format!("crosstl-rustc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for path in common::corpus_files() {
        let m = common::typed_file(&path);
        let unit = &generate(&m, &TargetLanguage::RustSrc).unwrap()[0];
        let src = dir.join(&unit.suggested_filename);
        std::fs::write(&src, &unit.text).unwrap();
        let out = Command::new("rustc")
            .args(["--edition", "2021", "--crate-type", "lib", "-A", "warnings", "--out-dir"])
            .arg(&dir)
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}:\n{}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
    let _ = std::fs::remove_dir_all(&dir);
}
