//! Target code generation: one generator per target language, collected in a
//! [`Registry`] that the CLI and the conformance harness enumerate.

mod common;
mod crossgl;
pub(crate) mod cuda;
pub(crate) mod glsl;
mod hlsl;
mod metal;
mod rust;

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ir::{has_errors, visit_block_exprs, ShaderModule, SourceLocation, Stage, TypeExpr};
use crate::semantics::typecheck_module;

pub use crossgl::{print_crossgl, CrossGlGenerator};
pub use cuda::{cuda_kernel_signatures, CudaGenerator};
pub use glsl::GlslGenerator;
pub use hlsl::HlslGenerator;
pub use metal::MetalGenerator;
pub use rust::RustGenerator;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetLanguage {
    CrossGL,
    Glsl,
    Hlsl,
    Metal,
    Cuda,
    RustSrc,
    /// A target registered at startup by an embedding application.
    Custom {
        name: String,
        extension: String,
    },
}

impl TargetLanguage {
    pub const BUILTIN: [TargetLanguage; 6] = [
        TargetLanguage::CrossGL,
        TargetLanguage::Glsl,
        TargetLanguage::Hlsl,
        TargetLanguage::Metal,
        TargetLanguage::Cuda,
        TargetLanguage::RustSrc,
    ];

    pub fn custom(name: impl Into<String>, extension: impl Into<String>) -> Self {
        TargetLanguage::Custom { name: name.into(), extension: extension.into() }
    }

    /// Lowercase name used on the command line.
    pub fn name(&self) -> &str {
        match self {
            TargetLanguage::CrossGL => "crossgl",
            TargetLanguage::Glsl => "glsl",
            TargetLanguage::Hlsl => "hlsl",
            TargetLanguage::Metal => "metal",
            TargetLanguage::Cuda => "cuda",
            TargetLanguage::RustSrc => "rust",
            TargetLanguage::Custom { name, .. } => name,
        }
    }

    pub fn display_name(&self) -> &str {
        match self {
            TargetLanguage::CrossGL => "CrossGL",
            TargetLanguage::Glsl => "GLSL",
            TargetLanguage::Hlsl => "HLSL",
            TargetLanguage::Metal => "Metal",
            TargetLanguage::Cuda => "CUDA",
            TargetLanguage::RustSrc => "Rust",
            TargetLanguage::Custom { name, .. } => name,
        }
    }

    /// Parses a built-in target name (case-insensitive).
    pub fn from_name(name: &str) -> Option<TargetLanguage> {
        let lower = name.to_ascii_lowercase();
        Some(match lower.as_str() {
            "crossgl" | "cgl" => TargetLanguage::CrossGL,
            "glsl" | "opengl" => TargetLanguage::Glsl,
            "hlsl" | "directx" => TargetLanguage::Hlsl,
            "metal" => TargetLanguage::Metal,
            "cuda" => TargetLanguage::Cuda,
            "rust" | "rs" => TargetLanguage::RustSrc,
            _ => return None,
        })
    }

    /// File extension (with dot). GLSL picks one per stage.
    pub fn extension(&self, stage: Option<Stage>) -> &str {
        match self {
            TargetLanguage::CrossGL => ".cgl",
            TargetLanguage::Glsl => match stage {
                Some(Stage::Vertex) => ".vert",
                Some(Stage::Fragment) => ".frag",
                Some(Stage::Compute) => ".comp",
                None => ".glsl",
            },
            TargetLanguage::Hlsl => ".hlsl",
            TargetLanguage::Metal => ".metal",
            TargetLanguage::Cuda => ".cu",
            TargetLanguage::RustSrc => ".rs",
            TargetLanguage::Custom { extension, .. } => extension,
        }
    }
}

impl fmt::Display for TargetLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// One generated file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputUnit {
    pub suggested_filename: String,
    pub target: TargetLanguage,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error("type {ty} cannot be expressed in {target}")]
    UnsupportedType { ty: TypeExpr, target: TargetLanguage },
    #[error("{location}: {construct} is not supported in {target}: {reason}")]
    UnsupportedConstruct { location: SourceLocation, construct: String, target: TargetLanguage, reason: String },
    #[error("a backend for {0} is already registered")]
    DuplicateBackend(TargetLanguage),
    #[error("unknown target {0}")]
    UnknownTarget(String),
    #[error("module does not typecheck: {0}")]
    InvalidModule(String),
}

impl CodegenError {
    pub(crate) fn construct(
        location: &SourceLocation,
        construct: impl Into<String>,
        target: TargetLanguage,
        reason: impl Into<String>,
    ) -> Self {
        CodegenError::UnsupportedConstruct {
            location: location.clone(),
            construct: construct.into(),
            target,
            reason: reason.into(),
        }
    }
}

/// Rows of the feature coverage matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    BasicSyntax,
    ControlFlow,
    Functions,
    Arrays,
    Structures,
    Shaders,
    ComputeKernels,
    Textures,
}

impl Feature {
    pub const ALL: [Feature; 8] = [
        Feature::BasicSyntax,
        Feature::ControlFlow,
        Feature::Functions,
        Feature::Arrays,
        Feature::Structures,
        Feature::Shaders,
        Feature::ComputeKernels,
        Feature::Textures,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Feature::BasicSyntax => "basic syntax",
            Feature::ControlFlow => "control flow",
            Feature::Functions => "functions",
            Feature::Arrays => "arrays",
            Feature::Structures => "structures",
            Feature::Shaders => "shaders",
            Feature::ComputeKernels => "compute kernels",
            Feature::Textures => "textures",
        }
    }
}

/// A feature a generator handles by a documented fallback or not at all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degradation {
    pub feature: Feature,
    pub note: String,
}

pub trait Generator: Send + Sync {
    fn target(&self) -> TargetLanguage;

    /// Spelling of `ty` in the target language.
    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError>;

    /// Generates the output files for a typechecked module.
    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError>;

    fn degradations(&self) -> Vec<Degradation> {
        Vec::new()
    }
}

/// Returned by [`Registry::register_backend`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendHandle {
    pub index: usize,
    pub target: TargetLanguage,
}

/// Ordered table of generators. Build it at startup, then share it read-only.
#[derive(Clone, Default)]
pub struct Registry {
    generators: Vec<Arc<dyn Generator>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.targets()).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The six built-in generators.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        for t in TargetLanguage::BUILTIN {
            let g = builtin_generator(&t).expect("built-in target");
            r.generators.push(Arc::from(g));
        }
        r
    }

    pub fn register_backend(&mut self, generator: impl Generator + 'static) -> Result<BackendHandle, CodegenError> {
        let target = generator.target();
        if self.get(&target).is_some() || self.find(target.name()).is_some() {
            return Err(CodegenError::DuplicateBackend(target));
        }
        self.generators.push(Arc::new(generator));
        Ok(BackendHandle { index: self.generators.len() - 1, target })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn targets(&self) -> Vec<TargetLanguage> {
        self.generators.iter().map(|g| g.target()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Generator> {
        self.generators.iter().map(|g| g.as_ref())
    }

    pub fn get(&self, target: &TargetLanguage) -> Option<&dyn Generator> {
        self.iter().find(|g| &g.target() == target)
    }

    /// Looks a generator up by its command-line name.
    pub fn find(&self, name: &str) -> Option<&dyn Generator> {
        let lower = name.to_ascii_lowercase();
        self.iter().find(|g| g.target().name().eq_ignore_ascii_case(&lower)).or_else(|| {
            let t = TargetLanguage::from_name(&lower)?;
            self.get(&t)
        })
    }

    pub fn generate(&self, module: &ShaderModule, target: &TargetLanguage) -> Result<Vec<OutputUnit>, CodegenError> {
        let g = self.get(target).ok_or_else(|| CodegenError::UnknownTarget(target.name().to_string()))?;
        g.generate(module)
    }
}

pub fn builtin_generator(target: &TargetLanguage) -> Option<Box<dyn Generator>> {
    Some(match target {
        TargetLanguage::CrossGL => Box::new(CrossGlGenerator),
        TargetLanguage::Glsl => Box::new(GlslGenerator),
        TargetLanguage::Hlsl => Box::new(HlslGenerator),
        TargetLanguage::Metal => Box::new(MetalGenerator),
        TargetLanguage::Cuda => Box::new(CudaGenerator),
        TargetLanguage::RustSrc => Box::new(RustGenerator),
        TargetLanguage::Custom { .. } => return None,
    })
}

/// Generates `module` for a built-in target.
pub fn generate(module: &ShaderModule, target: &TargetLanguage) -> Result<Vec<OutputUnit>, CodegenError> {
    builtin_generator(target).ok_or_else(|| CodegenError::UnknownTarget(target.name().to_string()))?.generate(module)
}

/// Spelling of `ty` in a built-in target.
pub fn map_type(ty: &TypeExpr, target: &TargetLanguage) -> Result<String, CodegenError> {
    builtin_generator(target).ok_or_else(|| CodegenError::UnknownTarget(target.name().to_string()))?.map_type(ty)
}

/// Returns the module itself when every expression already carries a type,
/// otherwise a typechecked copy.
pub(crate) fn typed(module: &ShaderModule) -> Result<Cow<'_, ShaderModule>, CodegenError> {
    let mut complete = true;
    let mut check = |e: &crate::ir::Expr| complete &= e.ty.is_some();
    for f in &module.functions {
        visit_block_exprs(&f.body, &mut check);
    }
    for g in &module.globals {
        if let Some(init) = &g.init {
            init.visit(&mut check);
        }
    }
    if complete {
        return Ok(Cow::Borrowed(module));
    }
    let mut copy = module.clone();
    let diags = typecheck_module(&mut copy);
    if has_errors(&diags) {
        let text: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(CodegenError::InvalidModule(text.join("; ")));
    }
    Ok(Cow::Owned(copy))
}
