#![allow(dead_code)]

use std::path::{Path, PathBuf};

use crosstl::frontend::parse_source;
use crosstl::ir::ShaderModule;
use crosstl::semantics::check_module;

pub const IMAGE_PROCESSOR: &str = "shader ImageProcessor {
    struct VertexInput {
        vec3 position;
        vec2 texCoord;
    }

    struct VertexOutput {
        vec2 uv;
        vec4 position;
    }

    vertex {
        VertexOutput main(VertexInput input) {
            VertexOutput output;
            output.uv = input.texCoord;
            output.position = vec4(input.position, 1.0);
            return output;
        }
    }

    fragment {
        vec4 main(vec2 uv) {
            return vec4(uv.x, uv.y, 0.5, 1.0);
        }
    }
}
";

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cgl"))
        .collect();
    files.sort();
    files
}

/// Parses and checks `source`, panicking on any diagnostic.
pub fn typed(source: &str) -> ShaderModule {
    let mut m = parse_source(source, "test.cgl").unwrap_or_else(|e| panic!("{e}"));
    let diags = check_module(&mut m);
    assert!(diags.is_empty(), "{diags:?}");
    m
}

pub fn typed_file(path: &Path) -> ShaderModule {
    let text = std::fs::read_to_string(path).unwrap();
    let mut m = parse_source(&text, &path.display().to_string()).unwrap();
    let diags = check_module(&mut m);
    assert!(diags.is_empty(), "{}: {diags:?}", path.display());
    m
}

pub fn corpus(name: &str) -> ShaderModule {
    typed_file(&corpus_dir().join(name).with_extension("cgl"))
}
