//! Name resolution, typechecking and control-flow legality.

pub mod builtins;
mod check;
mod scope;
mod types;

pub use builtins::{is_compute_intrinsic, lookup_builtin, Builtin, Shape, BUILTINS, COMPUTE_INTRINSICS};
pub use check::typecheck_module;
pub use scope::{SymbolKind, SymbolTable};
pub use types::{
    check_constructor, check_struct_constructor, is_swizzle_name, resolve_swizzle, swizzle_index, unify_types,
    TypeError,
};

use crate::ir::{has_errors, sort_diagnostics, validate_program, Diagnostic, ShaderModule};

/// Structural validation followed, when that is clean, by typechecking.
pub fn check_module(module: &mut ShaderModule) -> Vec<Diagnostic> {
    let mut diags = validate_program(module);
    if !has_errors(&diags) {
        diags.extend(typecheck_module(module));
    }
    sort_diagnostics(&mut diags);
    diags
}
