use std::cell::Cell;
use std::collections::BTreeMap;

use super::common::*;
use super::glsl::clip_position_member;
use super::{typed, CodegenError, Generator, OutputUnit, TargetLanguage};
use crate::ir::*;

/// HLSL (Shader Model 5): a single unit holding every stage.
///
/// CrossGL matrices are column-major with `m[i]` selecting a column. They
/// are emitted transposed, so that HLSL's row indexing and row-wise
/// constructors see the same numbers, and products are rewritten through
/// `mul` with swapped operands.
#[derive(Debug, Clone, Copy, Default)]
pub struct HlslGenerator;

const RESERVED: &[&str] = &[
    "in",
    "out",
    "inout",
    "static",
    "register",
    "packoffset",
    "cbuffer",
    "tbuffer",
    "Texture2D",
    "SamplerState",
    "sampler",
    "texture",
    "matrix",
    "vector",
    "string",
    "half",
    "double",
    "uint",
    "dword",
    "row_major",
    "column_major",
    "linear",
    "centroid",
    "nointerpolation",
    "noperspective",
    "sample",
    "groupshared",
    "shared",
    "volatile",
    "precise",
    "inline",
    "extern",
    "typedef",
    "technique",
    "pass",
    "compile",
    "discard",
    "do",
    "switch",
    "case",
    "default",
    "line",
    "point",
    "triangle",
    "lineadj",
    "triangleadj",
    "snorm",
    "unorm",
    "export",
    "namespace",
    "sizeof",
    "class",
    "interface",
    "VSMain",
    "PSMain",
    "CSMain",
    "Globals",
    "KernelParams",
    "crossgl_sampler",
    "crossgl_local_id",
    "crossgl_group_id",
];

struct Flavor {
    group_size: Cell<[u32; 3]>,
    user_functions: Vec<String>,
}

fn flavor() -> Flavor {
    Flavor { group_size: Cell::new([64, 1, 1]), user_functions: Vec::new() }
}

fn is_matrix(t: &TypeExpr) -> bool {
    matches!(t, TypeExpr::Matrix(..))
}

fn is_vector(t: &TypeExpr) -> bool {
    matches!(t, TypeExpr::Vector(..))
}

impl CFlavor for Flavor {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Hlsl
    }

    fn ident(&self, name: &str) -> String {
        sanitize(name, RESERVED)
    }

    fn type_name(&self, t: &TypeExpr) -> CResult<String> {
        Ok(match t {
            TypeExpr::Scalar(k) => k.name().to_string(),
            TypeExpr::Vector(_, n) => format!("float{n}"),
            TypeExpr::Matrix(r, c) => format!("float{r}x{c}"),
            TypeExpr::Sampler2D => "Texture2D".to_string(),
            TypeExpr::Named(n) => self.ident(n),
            TypeExpr::Array(..) => {
                let dims: String =
                    t.array_dims().iter().map(|d| d.map_or("[]".to_string(), |n| format!("[{n}]"))).collect();
                format!("{}{dims}", self.type_name(t.innermost())?)
            }
        })
    }

    fn binary(&self, op: BinaryOp, l: &Expr, r: &Expr, ls: P, rs: P) -> P {
        let (lt, rt) = (ty(l), ty(r));
        match op {
            BinaryOp::Mul if is_matrix(lt) && (is_matrix(rt) || is_vector(rt)) => call_text("mul", &[rs, ls]),
            BinaryOp::Mul if is_vector(lt) && is_matrix(rt) => call_text("mul", &[rs, ls]),
            BinaryOp::Eq if is_vector(lt) || is_matrix(lt) => call_text("all", &[infix(op, &ls, &rs)]),
            BinaryOp::Ne if is_vector(lt) || is_matrix(lt) => call_text("any", &[infix(op, &ls, &rs)]),
            _ => infix(op, &ls, &rs),
        }
    }

    fn construct(&self, t: &TypeExpr, args: &[Expr], printed: Vec<P>) -> CResult<P> {
        if let (TypeExpr::Vector(..), [a]) = (t, args) {
            if ty(a).is_numeric_scalar() {
                let cast = format!("({}){}", self.type_name(t)?, printed[0].at(PREC_UNARY));
                return Ok(P::new(cast, PREC_UNARY));
            }
        }
        let name = match t {
            TypeExpr::Named(n) => format!("make_{}", self.ident(n)),
            other => self.type_name(other)?,
        };
        Ok(call_text(&name, &printed))
    }

    fn call(&self, callee: &str, _args: &[Expr], printed: Vec<P>, _loc: &SourceLocation) -> CResult<P> {
        if self.user_functions.iter().any(|f| f == callee) {
            return Ok(call_text(&self.ident(callee), &printed));
        }
        Ok(match callee {
            "mix" => call_text("lerp", &printed),
            "texture" => {
                let rest = [printed[1].clone()];
                P::new(format!("{}.Sample(crossgl_sampler, {})", printed[0].postfix(), rest[0].text), PREC_POSTFIX)
            }
            _ => call_text(&self.ident(callee), &printed),
        })
    }

    fn intrinsic(&self, name: &str, axis: usize) -> P {
        let axis = axis.min(2);
        match name {
            "local_id" => P::atom(format!("int(crossgl_local_id.{})", ['x', 'y', 'z'][axis])),
            "group_id" => P::atom(format!("int(crossgl_group_id.{})", ['x', 'y', 'z'][axis])),
            _ => P::atom(self.group_size.get()[axis].to_string()),
        }
    }

    fn split_compound(&self, target: &TypeExpr, value: &TypeExpr, op: BinaryOp) -> bool {
        op == BinaryOp::Mul && (is_matrix(target) || is_matrix(value))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    VertexIn,
    Varying,
    FragmentOut,
}

fn semantics(module: &ShaderModule) -> BTreeMap<String, Vec<String>> {
    let mut roles: Vec<(String, Role)> = Vec::new();
    let mut assign = |t: &TypeExpr, role| {
        if let TypeExpr::Named(n) = t {
            if !roles.iter().any(|(r, _)| r == n) {
                roles.push((n.clone(), role));
            }
        }
    };
    if let Some(v) = module.entry_point(Stage::Vertex) {
        assign(&v.return_type, Role::Varying);
        if let Some(p) = v.params.first() {
            assign(&p.ty, Role::VertexIn);
        }
    }
    if let Some(f) = module.entry_point(Stage::Fragment) {
        if let Some(p) = f.params.first() {
            assign(&p.ty, Role::Varying);
        }
        assign(&f.return_type, Role::FragmentOut);
    }
    let varying_names = vertex_output_names(module);
    let clip = match module.entry_point(Stage::Vertex).map(|v| &v.return_type) {
        Some(TypeExpr::Named(r)) => clip_position_member(module, r),
        _ => None,
    };
    roles
        .into_iter()
        .filter_map(|(record, role)| {
            let s = module.find_struct(&record)?;
            let sems = s
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| match role {
                    Role::VertexIn => format!("TEXCOORD{i}"),
                    Role::FragmentOut => format!("SV_Target{i}"),
                    Role::Varying if clip.as_deref() == Some(m.name.as_str()) => "SV_Position".to_string(),
                    Role::Varying => {
                        format!("TEXCOORD{}", varying_names.iter().position(|n| *n == m.name).unwrap_or(i))
                    }
                })
                .collect();
            Some((record, sems))
        })
        .collect()
}

fn vertex_output_names(module: &ShaderModule) -> Vec<String> {
    match module.entry_point(Stage::Vertex).map(|v| &v.return_type) {
        Some(TypeExpr::Named(r)) => {
            module.find_struct(r).map(|s| s.members.iter().map(|m| m.name.clone()).collect()).unwrap_or_default()
        }
        _ => Vec::new(),
    }
}

fn header(fl: &Flavor, f: &FunctionDecl, name: &str) -> CResult<String> {
    let params = f.params.iter().map(|p| fl.declare(&p.ty, &p.name)).collect::<CResult<Vec<_>>>()?;
    Ok(format!("{} {name}({})", fl.type_name(&f.return_type)?, params.join(", ")))
}

fn emit(module: &ShaderModule) -> CResult<String> {
    let mut fl = flavor();
    fl.user_functions = module.functions.iter().map(|f| f.name.clone()).collect();
    let t = TargetLanguage::Hlsl;
    let mut w = CWriter::new(&fl);
    w.line(format!("// {}, generated by crosstl", module.name));

    let sems = semantics(module);
    for s in structs_in_dependency_order(module) {
        w.blank();
        w.open(format!("struct {}", fl.ident(&s.name)));
        for (i, m) in s.members.iter().enumerate() {
            let decl = fl.declare(&m.ty, &m.name)?;
            match sems.get(&s.name) {
                Some(sem) => w.line(format!("{decl} : {};", sem[i])),
                None => w.line(format!("{decl};")),
            }
        }
        w.close(";");
    }

    let uniforms: Vec<&GlobalVar> = module
        .globals
        .iter()
        .filter(|g| g.qualifier == GlobalQualifier::Uniform && g.ty.innermost() != &TypeExpr::Sampler2D)
        .collect();
    if !uniforms.is_empty() {
        w.blank();
        w.open("cbuffer Globals : register(b0)");
        for g in uniforms {
            w.line(format!("{};", fl.declare(&g.ty, &g.name)?));
        }
        w.close("");
    }
    let mut texture_reg = 0;
    let mut uav_reg = 0;
    let mut resources = Vec::new();
    for g in &module.globals {
        let decl = fl.declare(&g.ty, &g.name)?;
        match g.qualifier {
            GlobalQualifier::Uniform if g.ty.innermost() == &TypeExpr::Sampler2D => {
                if g.ty.is_array() {
                    return Err(CodegenError::construct(&g.location, "array of samplers", t, "not supported"));
                }
                resources.push(format!("Texture2D {} : register(t{texture_reg});", fl.ident(&g.name)));
                texture_reg += 1;
            }
            GlobalQualifier::Uniform => {}
            GlobalQualifier::Const => {
                let init = match &g.init {
                    Some(e) => format!(" = {}", w.expr(e)?.text),
                    None => String::new(),
                };
                resources.push(format!("static const {decl}{init};"));
            }
            GlobalQualifier::Plain if g.ty.array_dims().first() == Some(&None) => {
                resources.push(structured_buffer(&fl, &g.ty, &g.name, uav_reg, &g.location)?);
                uav_reg += 1;
            }
            GlobalQualifier::Plain => {
                let init = match &g.init {
                    Some(e) => format!(" = {}", w.expr(e)?.text),
                    None => String::new(),
                };
                resources.push(format!("static {decl}{init};"));
            }
        }
    }
    if texture_reg > 0 || super::common::uses_texture(module).is_some() {
        resources.push("SamplerState crossgl_sampler : register(s0);".to_string());
    }

    // Kernel parameters become shared resources.
    let mut kernel_buffers: Vec<(String, TypeExpr)> = Vec::new();
    let mut kernel_constants: Vec<(String, TypeExpr)> = Vec::new();
    for k in module.kernels() {
        for p in &k.params {
            let list = if p.ty.is_array() { &mut kernel_buffers } else { &mut kernel_constants };
            match list.iter().find(|(n, _)| *n == p.name) {
                Some((_, existing)) if *existing != p.ty => {
                    return Err(CodegenError::construct(
                        &k.location,
                        format!("kernel parameter {}", p.name),
                        t,
                        "kernels share parameter names with different types",
                    ))
                }
                Some(_) => {}
                None => list.push((p.name.clone(), p.ty.clone())),
            }
        }
    }
    for (name, ty) in &kernel_buffers {
        let loc = module.kernels().next().map(|k| k.location.clone()).unwrap_or_else(SourceLocation::synthetic);
        resources.push(structured_buffer(&fl, ty, name, uav_reg, &loc)?);
        uav_reg += 1;
    }
    if !resources.is_empty() {
        w.blank();
        for r in resources {
            w.line(r);
        }
    }
    if !kernel_constants.is_empty() {
        w.blank();
        w.open("cbuffer KernelParams : register(b1)");
        for (name, ty) in &kernel_constants {
            w.line(format!("{};", fl.declare(ty, name)?));
        }
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

    let helpers: Vec<&FunctionDecl> = module.functions.iter().filter(|f| f.stage.is_none()).collect();
    if !helpers.is_empty() {
        w.blank();
        let headers = helpers.iter().map(|f| header(&fl, f, &fl.ident(&f.name))).collect::<CResult<Vec<_>>>()?;
        w.prototypes(&headers);
        for (f, h) in helpers.iter().zip(&headers) {
            w.function(h, &[], &f.body)?;
            w.blank();
        }
    }

    let varying_names = vertex_output_names(module);
    for f in module.functions.iter().filter(|f| f.stage.is_some()) {
        w.blank();
        match f.stage.expect("stage") {
            Stage::Vertex => w.function(&header(&fl, f, "VSMain")?, &[], &f.body)?,
            Stage::Fragment => {
                let params = f
                    .params
                    .iter()
                    .map(|p| {
                        let decl = fl.declare(&p.ty, &p.name)?;
                        Ok(match &p.ty {
                            TypeExpr::Named(_) => decl,
                            _ => {
                                let idx = varying_names.iter().position(|n| *n == p.name).unwrap_or(0);
                                format!("{decl} : TEXCOORD{idx}")
                            }
                        })
                    })
                    .collect::<CResult<Vec<_>>>()?;
                let ret = fl.type_name(&f.return_type)?;
                let sv = if matches!(f.return_type, TypeExpr::Named(_)) { "" } else { " : SV_Target" };
                w.function(&format!("{ret} PSMain({}){sv}", params.join(", ")), &[], &f.body)?;
            }
            Stage::Compute => {
                let [x, y, z] = f.workgroup_size();
                fl.group_size.set([x, y, z]);
                let name = if f.name == "main" { "CSMain".to_string() } else { fl.ident(&f.name) };
                w.line(format!("[numthreads({x}, {y}, {z})]"));
                let h = format!(
                    "void {name}(uint3 crossgl_local_id : SV_GroupThreadID, uint3 crossgl_group_id : SV_GroupID)"
                );
                w.function(&h, &[], &f.body)?;
            }
        }
    }
    let mut out = w.out;
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}

fn structured_buffer(fl: &Flavor, t: &TypeExpr, name: &str, reg: u32, loc: &SourceLocation) -> CResult<String> {
    let TypeExpr::Array(elem, _) = t else { unreachable!("array type") };
    if elem.is_array() {
        return Err(CodegenError::construct(
            loc,
            format!("multi-dimensional buffer {name}"),
            TargetLanguage::Hlsl,
            "structured buffers hold one dimension",
        ));
    }
    Ok(format!("RWStructuredBuffer<{}> {} : register(u{reg});", fl.type_name(elem)?, fl.ident(name)))
}

impl Generator for HlslGenerator {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Hlsl
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        flavor().type_name(ty)
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        let module = typed(module)?;
        Ok(vec![OutputUnit {
            suggested_filename: format!("{}{}", module.name, TargetLanguage::Hlsl.extension(None)),
            target: TargetLanguage::Hlsl,
            text: emit(&module)?,
        }])
    }
}
