use std::collections::{BTreeMap, BTreeSet};

use super::common::*;
use super::glsl::clip_position_member;
use super::{typed, CodegenError, Generator, OutputUnit, TargetLanguage};
use crate::ir::*;

/// Metal Shading Language. Every stage lands in one unit.
///
/// Metal has no mutable program-scope variables, so module globals are
/// bound as entry parameters (uniforms, buffers, textures) or entry locals
/// (plain globals) and passed down to the helpers that use them.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetalGenerator;

const RESERVED: &[&str] = &[
    "kernel",
    "vertex",
    "fragment",
    "device",
    "constant",
    "threadgroup",
    "thread",
    "texture",
    "sampler",
    "half",
    "uint",
    "ushort",
    "uchar",
    "char",
    "short",
    "long",
    "ulong",
    "size_t",
    "ptrdiff_t",
    "metal",
    "using",
    "namespace",
    "template",
    "typename",
    "class",
    "private",
    "public",
    "protected",
    "static",
    "extern",
    "inline",
    "virtual",
    "operator",
    "new",
    "delete",
    "this",
    "auto",
    "register",
    "volatile",
    "union",
    "enum",
    "typedef",
    "goto",
    "switch",
    "case",
    "default",
    "do",
    "sizeof",
    "const",
    "main",
    "array",
    "packed_float2",
    "packed_float3",
    "packed_float4",
    "discard_fragment",
    "vertex_main",
    "fragment_main",
    "compute_main",
    "stage_in",
    "FragmentStageIn",
    "crossgl_sampler",
    "crossgl_local_id",
    "crossgl_group_id",
    "crossgl_group_size",
    "crossgl_equal",
];

#[derive(Default)]
struct Flavor {
    /// Extra trailing arguments for calls to helpers that use globals.
    extra_args: BTreeMap<String, Vec<String>>,
    user_functions: BTreeSet<String>,
}

fn is_vector(t: &TypeExpr) -> bool {
    matches!(t, TypeExpr::Vector(..))
}

fn splat(target: &TypeExpr, arg: &Expr, printed: &P, fl: &Flavor) -> P {
    if is_vector(target) && ty(arg).is_numeric_scalar() {
        let name = fl.type_name(target).unwrap_or_default();
        call_text(&name, std::slice::from_ref(printed))
    } else {
        printed.clone()
    }
}

impl CFlavor for Flavor {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Metal
    }

    fn ident(&self, name: &str) -> String {
        sanitize(name, RESERVED)
    }

    fn type_name(&self, t: &TypeExpr) -> CResult<String> {
        Ok(match t {
            TypeExpr::Scalar(k) => k.name().to_string(),
            TypeExpr::Vector(_, n) => format!("float{n}"),
            TypeExpr::Matrix(r, c) => format!("float{r}x{c}"),
            TypeExpr::Sampler2D => "texture2d<float>".to_string(),
            TypeExpr::Named(n) => self.ident(n),
            TypeExpr::Array(inner, Some(n)) => format!("array<{}, {n}>", self.type_name(inner)?),
            TypeExpr::Array(inner, None) => format!("device {}*", self.type_name(inner)?),
        })
    }

    fn declare(&self, t: &TypeExpr, name: &str) -> CResult<String> {
        Ok(format!("{} {}", self.type_name(t)?, self.ident(name)))
    }

    fn float_lit(&self, v: f64) -> String {
        format!("{}f", format_float(v))
    }

    fn binary(&self, op: BinaryOp, l: &Expr, _r: &Expr, ls: P, rs: P) -> P {
        match (op, ty(l)) {
            (BinaryOp::Eq, TypeExpr::Vector(..)) => call_text("all", &[infix(op, &ls, &rs)]),
            (BinaryOp::Ne, TypeExpr::Vector(..)) => call_text("any", &[infix(op, &ls, &rs)]),
            (BinaryOp::Eq, TypeExpr::Matrix(..)) => call_text("crossgl_equal", &[ls, rs]),
            (BinaryOp::Ne, TypeExpr::Matrix(..)) => unary(UnaryOp::Not, &call_text("crossgl_equal", &[ls, rs])),
            _ => infix(op, &ls, &rs),
        }
    }

    fn construct(&self, t: &TypeExpr, _args: &[Expr], printed: Vec<P>) -> CResult<P> {
        let name = match t {
            TypeExpr::Named(n) => format!("make_{}", self.ident(n)),
            other => self.type_name(other)?,
        };
        Ok(call_text(&name, &printed))
    }

    fn call(&self, callee: &str, args: &[Expr], mut printed: Vec<P>, _loc: &SourceLocation) -> CResult<P> {
        let builtin = !self.user_functions.contains(callee);
        Ok(match callee {
            "texture" if builtin => {
                P::new(format!("{}.sample(crossgl_sampler, {})", printed[0].postfix(), printed[1].text), PREC_POSTFIX)
            }
            "mix" | "clamp" if builtin => {
                let target = ty(&args[0]);
                let p: Vec<P> = (0..3).map(|i| splat(target, &args[i], &printed[i], self)).collect();
                call_text(callee, &p)
            }
            _ => {
                if let Some(extra) = self.extra_args.get(callee) {
                    printed.extend(extra.iter().map(|n| P::atom(self.ident(n))));
                }
                call_text(&self.ident(callee), &printed)
            }
        })
    }

    fn intrinsic(&self, name: &str, axis: usize) -> P {
        let var = match name {
            "local_id" => "crossgl_local_id",
            "group_id" => "crossgl_group_id",
            _ => "crossgl_group_size",
        };
        P::atom(format!("int({var}.{})", ['x', 'y', 'z'][axis.min(2)]))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    VertexIn,
    Varying,
    FragmentOut,
}

fn member_attributes(module: &ShaderModule) -> BTreeMap<String, Vec<Option<String>>> {
    let mut roles: Vec<(String, Role)> = Vec::new();
    let mut assign = |t: &TypeExpr, role| {
        if let TypeExpr::Named(n) = t {
            if !roles.iter().any(|(r, _)| r == n) {
                roles.push((n.clone(), role));
            }
        }
    };
    if let Some(v) = module.entry_point(Stage::Vertex) {
        if let Some(p) = v.params.first() {
            assign(&p.ty, Role::VertexIn);
        }
        assign(&v.return_type, Role::Varying);
    }
    if let Some(f) = module.entry_point(Stage::Fragment) {
        if let Some(p) = f.params.first() {
            assign(&p.ty, Role::Varying);
        }
        assign(&f.return_type, Role::FragmentOut);
    }
    roles
        .into_iter()
        .filter_map(|(record, role)| {
            let s = module.find_struct(&record)?;
            let clip = clip_position_member(module, &record);
            let attrs = s
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| match role {
                    Role::VertexIn => Some(format!("attribute({i})")),
                    Role::FragmentOut => Some(format!("color({i})")),
                    Role::Varying if clip.as_deref() == Some(m.name.as_str()) => Some("position".to_string()),
                    Role::Varying => None,
                })
                .collect();
            Some((record, attrs))
        })
        .collect()
}

fn uses_matrix_equality(module: &ShaderModule) -> Vec<u8> {
    let mut dims = Vec::new();
    for f in &module.functions {
        visit_block_exprs(&f.body, &mut |e| {
            if let ExprKind::Binary { op: BinaryOp::Eq | BinaryOp::Ne, lhs, .. } = &e.kind {
                if let TypeExpr::Matrix(n, _) = ty(lhs) {
                    if !dims.contains(n) {
                        dims.push(*n);
                    }
                }
            }
        });
    }
    dims.sort_unstable();
    dims
}

/// How one global reaches the functions that use it.
enum Binding {
    /// Program-scope constant, never passed.
    Constant,
    Buffer(u32),
    Texture(u32),
    /// Entry-local variable passed by `thread` reference.
    Local,
}

struct Globals {
    bindings: Vec<Binding>,
}

impl Globals {
    fn new(module: &ShaderModule, first_buffer: u32) -> Self {
        let (mut buffer, mut texture) = (first_buffer, 0);
        let bindings = module
            .globals
            .iter()
            .map(|g| match g.qualifier {
                GlobalQualifier::Const => Binding::Constant,
                GlobalQualifier::Uniform if g.ty == TypeExpr::Sampler2D => {
                    texture += 1;
                    Binding::Texture(texture - 1)
                }
                GlobalQualifier::Uniform => {
                    buffer += 1;
                    Binding::Buffer(buffer - 1)
                }
                GlobalQualifier::Plain if g.ty.array_dims().first() == Some(&None) => {
                    buffer += 1;
                    Binding::Buffer(buffer - 1)
                }
                GlobalQualifier::Plain => Binding::Local,
            })
            .collect();
        Globals { bindings }
    }

    fn binding(&self, module: &ShaderModule, g: &GlobalVar) -> &Binding {
        let i = module.globals.iter().position(|x| std::ptr::eq(x, g)).expect("module global");
        &self.bindings[i]
    }
}

/// Helper parameter through which a global is passed, if any.
fn helper_param(fl: &Flavor, g: &GlobalVar, b: &Binding) -> CResult<Option<String>> {
    let name = fl.ident(&g.name);
    Ok(match b {
        Binding::Constant => None,
        Binding::Texture(_) => Some(format!("texture2d<float> {name}")),
        Binding::Buffer(_) if g.ty.is_array() => Some(format!("{} {name}", fl.type_name(&g.ty)?)),
        Binding::Buffer(_) => Some(format!("constant {}& {name}", fl.type_name(&g.ty)?)),
        Binding::Local => Some(format!("thread {}& {name}", fl.type_name(&g.ty)?)),
    })
}

fn check_global(g: &GlobalVar) -> CResult<()> {
    let dims = g.ty.array_dims();
    if dims.len() > 1 && dims[0].is_none() || (g.ty.is_array() && g.ty.innermost() == &TypeExpr::Sampler2D) {
        return Err(CodegenError::construct(
            &g.location,
            format!("global {} of type {}", g.name, g.ty),
            TargetLanguage::Metal,
            "buffers hold one dimension of plain data",
        ));
    }
    Ok(())
}

fn emit(module: &ShaderModule) -> CResult<String> {
    let analysis = Analysis::new(module);
    let mut fl =
        Flavor { user_functions: module.functions.iter().map(|f| f.name.clone()).collect(), ..Flavor::default() };
    for f in module.functions.iter().filter(|f| f.stage.is_none()) {
        let globals = analysis.globals_used(f);
        let names: Vec<String> =
            globals.iter().filter(|g| g.qualifier != GlobalQualifier::Const).map(|g| g.name.clone()).collect();
        if !names.is_empty() {
            fl.extra_args.insert(f.name.clone(), names);
        }
    }
    for g in &module.globals {
        check_global(g)?;
    }

    let mut w = CWriter::new(&fl);
    w.line(format!("// {}, generated by crosstl", module.name));
    w.blank();
    w.line("#include <metal_stdlib>");
    w.line("using namespace metal;");

    let attrs = member_attributes(module);
    for s in structs_in_dependency_order(module) {
        w.blank();
        w.open(format!("struct {}", fl.ident(&s.name)));
        for (i, m) in s.members.iter().enumerate() {
            let decl = fl.declare(&m.ty, &m.name)?;
            match attrs.get(&s.name).and_then(|a| a[i].as_ref()) {
                Some(a) => w.line(format!("{decl} [[{a}]];")),
                None => w.line(format!("{decl};")),
            }
        }
        w.close(";");
    }

    let consts: Vec<&GlobalVar> = module.globals.iter().filter(|g| g.qualifier == GlobalQualifier::Const).collect();
    let needs_sampler = module.globals.iter().any(|g| g.ty == TypeExpr::Sampler2D) || uses_texture(module).is_some();
    if !consts.is_empty() || needs_sampler {
        w.blank();
    }
    for g in consts {
        let decl = fl.declare(&g.ty, &g.name)?;
        match &g.init {
            Some(e) => {
                let init = w.expr(e)?.text;
                w.line(format!("constant {decl} = {init};"));
            }
            None => w.line(format!("constant {decl} = {{}};")),
        }
    }
    if needs_sampler {
        w.line("constexpr sampler crossgl_sampler(filter::linear);");
    }

    for n in uses_matrix_equality(module) {
        let t = format!("float{n}x{n}");
        let cols: Vec<String> = (0..n).map(|i| format!("all(a[{i}] == b[{i}])")).collect();
        w.blank();
        w.open(format!("bool crossgl_equal({t} a, {t} b)"));
        w.line(format!("return {};", cols.join(" && ")));
        w.close("");
    }

    for name in constructed_structs(module) {
        let Some(s) = module.find_struct(&name) else { continue };
        let n = fl.ident(&s.name);
        let params =
            s.members.iter().map(|m| fl.declare(&m.ty, &format!("{}_", m.name))).collect::<CResult<Vec<_>>>()?;
        w.blank();
        w.open(format!("{n} make_{n}({})", params.join(", ")));
        w.line(format!("{n} value;"));
        for m in &s.members {
            w.line(format!("value.{} = {}_;", fl.ident(&m.name), m.name));
        }
        w.line("return value;");
        w.close("");
    }

    let first_buffer = module.kernels().map(|k| k.params.len() as u32).max().unwrap_or(0);
    let globals = Globals::new(module, first_buffer);

    let helpers: Vec<&FunctionDecl> = module.functions.iter().filter(|f| f.stage.is_none()).collect();
    if !helpers.is_empty() {
        let mut headers = Vec::new();
        for f in &helpers {
            if let Some(p) = f.params.iter().find(|p| p.ty.array_dims().contains(&None)) {
                return Err(CodegenError::construct(
                    &f.location,
                    format!("unsized array parameter {}", p.name),
                    TargetLanguage::Metal,
                    "only compute kernels may take unsized arrays",
                ));
            }
            let mut params = f.params.iter().map(|p| fl.declare(&p.ty, &p.name)).collect::<CResult<Vec<_>>>()?;
            for g in analysis.globals_used(f) {
                if let Some(p) = helper_param(&fl, g, globals.binding(module, g))? {
                    params.push(p);
                }
            }
            headers.push(format!("{} {}({})", fl.type_name(&f.return_type)?, fl.ident(&f.name), params.join(", ")));
        }
        w.blank();
        w.prototypes(&headers);
        for (f, h) in helpers.iter().zip(&headers) {
            w.function(h, &[], &f.body)?;
            w.blank();
        }
    }

    for f in module.functions.iter().filter(|f| f.stage.is_some()) {
        let stage = f.stage.expect("stage");
        let mut params = Vec::new();
        let mut prologue = Vec::new();
        match stage {
            Stage::Vertex | Stage::Fragment => {
                if let Some(p) = f.params.first() {
                    match &p.ty {
                        TypeExpr::Named(_) => params.push(format!("{} [[stage_in]]", fl.declare(&p.ty, &p.name)?)),
                        other => {
                            w.blank();
                            w.open("struct FragmentStageIn");
                            w.line(format!("{};", fl.declare(other, &p.name)?));
                            w.close(";");
                            params.push("FragmentStageIn stage_in [[stage_in]]".to_string());
                            prologue.push(format!("{} = stage_in.{};", fl.declare(other, &p.name)?, fl.ident(&p.name)));
                        }
                    }
                }
            }
            Stage::Compute => {
                let written = assigned_roots(&f.body);
                for (i, p) in f.params.iter().enumerate() {
                    let name = fl.ident(&p.name);
                    if p.ty.is_array() {
                        if p.ty.array_dims().len() > 1 {
                            return Err(CodegenError::construct(
                                &f.location,
                                format!("multi-dimensional kernel parameter {}", p.name),
                                TargetLanguage::Metal,
                                "buffers hold one dimension of plain data",
                            ));
                        }
                        let elem = fl.type_name(p.ty.innermost())?;
                        params.push(format!("device {elem}* {name} [[buffer({i})]]"));
                    } else if written.contains(&p.name) {
                        let t = fl.type_name(&p.ty)?;
                        params.push(format!("constant {t}& {name}_in [[buffer({i})]]"));
                        prologue.push(format!("{t} {name} = {name}_in;"));
                    } else {
                        params.push(format!("constant {}& {name} [[buffer({i})]]", fl.type_name(&p.ty)?));
                    }
                }
            }
        }
        for g in analysis.globals_used(f) {
            let name = fl.ident(&g.name);
            match globals.binding(module, g) {
                Binding::Constant => {}
                Binding::Texture(i) => params.push(format!("texture2d<float> {name} [[texture({i})]]")),
                Binding::Buffer(i) if g.ty.is_array() => {
                    params.push(format!("{} {name} [[buffer({i})]]", fl.type_name(&g.ty)?))
                }
                Binding::Buffer(i) => params.push(format!("constant {}& {name} [[buffer({i})]]", fl.type_name(&g.ty)?)),
                Binding::Local => {
                    let decl = fl.declare(&g.ty, &g.name)?;
                    let init = match &g.init {
                        Some(e) => w.expr(e)?.text,
                        None => "{}".to_string(),
                    };
                    prologue.push(format!("{decl} = {init};"));
                }
            }
        }
        let (qualifier, name) = match stage {
            Stage::Vertex => ("vertex", "vertex_main".to_string()),
            Stage::Fragment => ("fragment", "fragment_main".to_string()),
            Stage::Compute if f.name == "main" => ("kernel", "compute_main".to_string()),
            Stage::Compute => ("kernel", fl.ident(&f.name)),
        };
        if stage == Stage::Compute {
            params.push("uint3 crossgl_local_id [[thread_position_in_threadgroup]]".to_string());
            params.push("uint3 crossgl_group_id [[threadgroup_position_in_grid]]".to_string());
            params.push("uint3 crossgl_group_size [[threads_per_threadgroup]]".to_string());
        }
        w.blank();
        let header = format!("{qualifier} {} {name}({})", fl.type_name(&f.return_type)?, params.join(", "));
        w.function(&header, &prologue, &f.body)?;
    }
    let mut out = w.out;
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}

impl Generator for MetalGenerator {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Metal
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        Flavor::default().type_name(ty)
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        let module = typed(module)?;
        Ok(vec![OutputUnit {
            suggested_filename: format!("{}{}", module.name, TargetLanguage::Metal.extension(None)),
            target: TargetLanguage::Metal,
            text: emit(&module)?,
        }])
    }
}
