//! Importers that read GLSL and CUDA back into CrossGL IR, plus file-type detection.

mod cuda;
mod glsl;

pub use cuda::import_cuda;
pub use glsl::{import_glsl, GlslUnit};

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::backend::TargetLanguage;
use crate::frontend::{FrontendError, LexError, ParseError};
use crate::ir::{Diagnostic, FunctionDecl, ShaderModule, SourceLocation, Stage};

/// Languages with an importer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceLanguage {
    CrossGL,
    Glsl,
    Cuda,
}

impl fmt::Display for SourceLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceLanguage::CrossGL => "CrossGL",
            SourceLanguage::Glsl => "GLSL",
            SourceLanguage::Cuda => "CUDA",
        })
    }
}

/// What a file extension says about a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectedLanguage {
    /// Readable by an importer (or the CrossGL frontend).
    Source(SourceLanguage),
    /// Only ever produced as output.
    Target(TargetLanguage),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImportError {
    #[error("{0}: unknown file extension")]
    UnknownExtension(String),
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{location}: error: {construct} is not supported by the importer")]
    UnsupportedConstruct { location: SourceLocation, construct: String },
    #[error("{location}: error: conflicting declarations of {name}")]
    Conflict { location: SourceLocation, name: String },
}

impl From<FrontendError> for ImportError {
    fn from(e: FrontendError) -> Self {
        match e {
            FrontendError::Lex(e) => ImportError::Lex(e),
            FrontendError::Parse(e) => ImportError::Parse(e),
        }
    }
}

impl ImportError {
    pub(crate) fn unsupported(location: &SourceLocation, construct: impl Into<String>) -> Self {
        ImportError::UnsupportedConstruct { location: location.clone(), construct: construct.into() }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let location = match self {
            ImportError::UnknownExtension(file) => SourceLocation::new(file.as_str(), 0, 0),
            ImportError::Lex(e) => e.location.clone(),
            ImportError::Parse(e) => e.location.clone(),
            ImportError::UnsupportedConstruct { location, .. } | ImportError::Conflict { location, .. } => {
                location.clone()
            }
        };
        let message = match self {
            ImportError::UnsupportedConstruct { construct, .. } => {
                format!("{construct} is not supported by the importer")
            }
            ImportError::Conflict { name, .. } => format!("conflicting declarations of {name}"),
            ImportError::Parse(e) => format!("expected {}, found {}", e.expected, e.found),
            ImportError::Lex(e) => e.message.clone(),
            ImportError::UnknownExtension(_) => "unknown file extension".to_string(),
        };
        Diagnostic::error(location, message)
    }
}

/// An imported module together with the warnings raised along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Imported {
    pub module: ShaderModule,
    pub warnings: Vec<Diagnostic>,
}

fn extension(filename: &str) -> Option<String> {
    Path::new(filename).extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase())
}

pub fn detect_language(filename: &str) -> Result<DetectedLanguage, ImportError> {
    let ext = extension(filename).ok_or_else(|| ImportError::UnknownExtension(filename.to_string()))?;
    Ok(match ext.as_str() {
        "cgl" => DetectedLanguage::Source(SourceLanguage::CrossGL),
        "glsl" | "vert" | "frag" | "comp" => DetectedLanguage::Source(SourceLanguage::Glsl),
        "cu" => DetectedLanguage::Source(SourceLanguage::Cuda),
        "hlsl" => DetectedLanguage::Target(TargetLanguage::Hlsl),
        "metal" => DetectedLanguage::Target(TargetLanguage::Metal),
        "rs" => DetectedLanguage::Target(TargetLanguage::RustSrc),
        _ => return Err(ImportError::UnknownExtension(filename.to_string())),
    })
}

/// Pipeline stage implied by a GLSL file extension; `.glsl` has none.
pub fn glsl_stage_for(filename: &str) -> Option<Stage> {
    match extension(filename)?.as_str() {
        "vert" => Some(Stage::Vertex),
        "frag" => Some(Stage::Fragment),
        "comp" => Some(Stage::Compute),
        _ => None,
    }
}

/// Module name taken from a path: `out/Simple.vert` gives `Simple`.
pub fn module_name_for(filename: &str) -> String {
    Path::new(filename).file_stem().and_then(|s| s.to_str()).unwrap_or("Imported").to_string()
}

/// Appends `items` to `into`, keeping the first of each key and rejecting
/// same-keyed items that differ.
fn merge_named<T>(
    into: &mut Vec<T>,
    items: Vec<T>,
    key: impl Fn(&T) -> String,
    same: impl Fn(&T, &T) -> bool,
    location: impl Fn(&T) -> SourceLocation,
) -> Result<(), ImportError> {
    for item in items {
        match into.iter().find(|x| key(x) == key(&item)) {
            Some(existing) if same(existing, &item) => {}
            Some(_) => return Err(ImportError::Conflict { location: location(&item), name: key(&item) }),
            None => into.push(item),
        }
    }
    Ok(())
}

fn merge_modules(into: &mut ShaderModule, other: ShaderModule) -> Result<(), ImportError> {
    merge_named(
        &mut into.structs,
        other.structs,
        |s| s.name.clone(),
        |a, b| a.members == b.members,
        |s| s.location.clone(),
    )?;
    merge_named(
        &mut into.globals,
        other.globals,
        |g| g.name.clone(),
        |a, b| a.ty == b.ty && a.qualifier == b.qualifier,
        |g| g.location.clone(),
    )?;
    merge_named(
        &mut into.functions,
        other.functions,
        |f: &FunctionDecl| match f.stage {
            Some(stage) => format!("{stage} {}", f.name),
            None => f.name.clone(),
        },
        crate::ir::function_equal,
        |f| f.location.clone(),
    )
}

/// Reads source files of one language into a single module. `files` holds
/// (file name, text) pairs; GLSL stages come from the file extensions.
pub fn import_sources(
    name: &str,
    language: SourceLanguage,
    files: &[(String, String)],
) -> Result<Imported, ImportError> {
    match language {
        SourceLanguage::Glsl => {
            let units: Vec<GlslUnit> =
                files.iter().map(|(file, text)| GlslUnit { stage: glsl_stage_for(file), source: text, file }).collect();
            import_glsl(name, &units)
        }
        SourceLanguage::CrossGL | SourceLanguage::Cuda => {
            let mut merged: Option<Imported> = None;
            for (file, text) in files {
                let next = match language {
                    SourceLanguage::Cuda => import_cuda(name, text, file)?,
                    _ => Imported { module: crate::frontend::parse_source(text, file)?, warnings: Vec::new() },
                };
                match &mut merged {
                    None => merged = Some(next),
                    Some(m) => {
                        merge_modules(&mut m.module, next.module)?;
                        m.warnings.extend(next.warnings);
                    }
                }
            }
            Ok(merged.unwrap_or_else(|| Imported { module: ShaderModule::new(name), warnings: Vec::new() }))
        }
    }
}
