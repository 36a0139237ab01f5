use super::common::*;
use super::{typed, CodegenError, Generator, OutputUnit, TargetLanguage};
use crate::ir::*;

/// GLSL 4.50: one unit per graphics stage and one per compute kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlslGenerator;

pub(crate) const RESERVED: &[&str] = &[
    "input",
    "output",
    "in",
    "out",
    "inout",
    "attribute",
    "varying",
    "layout",
    "centroid",
    "flat",
    "smooth",
    "noperspective",
    "patch",
    "sample",
    "buffer",
    "shared",
    "coherent",
    "volatile",
    "restrict",
    "readonly",
    "writeonly",
    "subroutine",
    "invariant",
    "precise",
    "highp",
    "mediump",
    "lowp",
    "precision",
    "discard",
    "do",
    "switch",
    "case",
    "default",
    "uint",
    "double",
    "ivec2",
    "ivec3",
    "ivec4",
    "uvec2",
    "uvec3",
    "uvec4",
    "bvec2",
    "bvec3",
    "bvec4",
    "dvec2",
    "dvec3",
    "dvec4",
    "common",
    "partition",
    "active",
    "asm",
    "class",
    "union",
    "enum",
    "typedef",
    "template",
    "this",
    "resource",
    "goto",
    "inline",
    "noinline",
    "public",
    "static",
    "extern",
    "external",
    "interface",
    "long",
    "short",
    "half",
    "fixed",
    "unsigned",
    "superp",
    "filter",
    "sizeof",
    "cast",
    "namespace",
    "using",
    "main",
    "frag_color",
    "stage_in",
    "stage_out",
    "vertex_main",
    "fragment_main",
];

pub(crate) const VERTEX_ENTRY: &str = "vertex_main";
pub(crate) const FRAGMENT_ENTRY: &str = "fragment_main";

struct Flavor;

impl CFlavor for Flavor {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Glsl
    }

    fn ident(&self, name: &str) -> String {
        if name.starts_with("gl_") || name.contains("__") {
            return format!("u_{}", name.replace("__", "_u_"));
        }
        sanitize(name, RESERVED)
    }

    fn type_name(&self, t: &TypeExpr) -> CResult<String> {
        Ok(match t {
            TypeExpr::Named(n) => self.ident(n),
            TypeExpr::Array(..) => {
                let dims: String =
                    t.array_dims().iter().map(|d| d.map_or("[]".to_string(), |n| format!("[{n}]"))).collect();
                format!("{}{dims}", self.type_name(t.innermost())?)
            }
            other => other.to_string(),
        })
    }

    fn construct(&self, ty: &TypeExpr, _args: &[Expr], printed: Vec<P>) -> CResult<P> {
        Ok(call_text(&self.type_name(ty)?, &printed))
    }

    fn call(&self, callee: &str, _args: &[Expr], printed: Vec<P>, _loc: &SourceLocation) -> CResult<P> {
        Ok(call_text(&self.ident(callee), &printed))
    }

    fn intrinsic(&self, name: &str, axis: usize) -> P {
        let builtin = match name {
            "local_id" => "gl_LocalInvocationID",
            "group_id" => "gl_WorkGroupID",
            _ => "gl_WorkGroupSize",
        };
        P::atom(format!("int({builtin}.{})", ['x', 'y', 'z'][axis.min(2)]))
    }
}

/// Interface slots occupied by one stage input or output.
fn slots(t: &TypeExpr) -> u32 {
    match t {
        TypeExpr::Matrix(n, _) => *n as u32,
        _ => 1,
    }
}

fn check_io_type(t: &TypeExpr, what: &str, loc: &SourceLocation) -> CResult<()> {
    match t {
        TypeExpr::Scalar(ScalarKind::Int | ScalarKind::Float) | TypeExpr::Vector(..) | TypeExpr::Matrix(..) => Ok(()),
        other => Err(CodegenError::construct(
            loc,
            format!("stage {what} of type {other}"),
            TargetLanguage::Glsl,
            "stage inputs and outputs must be numeric scalars, vectors or matrices",
        )),
    }
}

/// `(name, type, location)` for each member of a stage record.
fn record_layout(module: &ShaderModule, record: &str) -> Vec<(String, TypeExpr, u32)> {
    let mut loc = 0;
    module
        .find_struct(record)
        .map(|s| {
            s.members
                .iter()
                .map(|m| {
                    let l = loc;
                    loc += slots(&m.ty);
                    (m.name.clone(), m.ty.clone(), l)
                })
                .collect()
        })
        .unwrap_or_default()
}

/// The vec4 member written to the clip-position output.
pub(crate) fn clip_position_member(module: &ShaderModule, record: &str) -> Option<String> {
    let s = module.find_struct(record)?;
    s.members
        .iter()
        .find(|m| (m.name == "position" || m.name == "clipPosition") && m.ty == TypeExpr::vec(4))
        .map(|m| m.name.clone())
}

fn interp(t: &TypeExpr) -> &'static str {
    if *t == TypeExpr::INT {
        "flat "
    } else {
        ""
    }
}

struct Unit<'a, 'm> {
    analysis: &'a Analysis<'m>,
    w: CWriter<'a>,
}

impl<'a, 'm> Unit<'a, 'm> {
    fn new(analysis: &'a Analysis<'m>, title: &str) -> Self {
        let mut w = CWriter::new(&Flavor);
        w.line("#version 450");
        w.blank();
        w.line(format!("// {title}, generated by crosstl"));
        Unit { analysis, w }
    }

    fn structs(&mut self) -> CResult<()> {
        for s in structs_in_dependency_order(self.analysis.module) {
            self.w.blank();
            self.w.open(format!("struct {}", Flavor.ident(&s.name)));
            for m in &s.members {
                self.w.line(format!("{};", Flavor.declare(&m.ty, &m.name)?));
            }
            self.w.close(";");
        }
        Ok(())
    }

    /// Declares `globals`; plain arrays become storage buffers numbered from `binding`.
    fn globals(&mut self, globals: &[&GlobalVar], mut binding: u32) -> CResult<u32> {
        if globals.is_empty() {
            return Ok(binding);
        }
        self.w.blank();
        for g in globals {
            let decl = Flavor.declare(&g.ty, &g.name)?;
            let line = match (g.qualifier, &g.init) {
                (GlobalQualifier::Uniform, _) => format!("uniform {decl};"),
                (GlobalQualifier::Const, Some(e)) => format!("const {decl} = {};", self.w.expr(e)?.text),
                (GlobalQualifier::Plain, _) if g.ty.is_array() => {
                    binding += 1;
                    buffer_block(&decl, &g.name, binding - 1)
                }
                (_, Some(e)) => format!("{decl} = {};", self.w.expr(e)?.text),
                (_, None) => format!("{decl};"),
            };
            self.w.line(line);
        }
        Ok(binding)
    }

    fn helpers(&mut self, helpers: &[&FunctionDecl]) -> CResult<()> {
        let headers = helpers.iter().map(|f| header(f, &Flavor.ident(&f.name))).collect::<CResult<Vec<_>>>()?;
        if !helpers.is_empty() {
            self.w.blank();
        }
        self.w.prototypes(&headers);
        for (f, h) in helpers.iter().zip(&headers) {
            self.w.function(h, &[], &f.body)?;
            self.w.blank();
        }
        Ok(())
    }
}

fn buffer_block(decl: &str, name: &str, binding: u32) -> String {
    format!("layout(std430, binding = {binding}) buffer {}_buffer {{ {decl}; }};", Flavor.ident(name))
}

fn header(f: &FunctionDecl, name: &str) -> CResult<String> {
    if let Some(p) = f.params.iter().find(|p| p.ty.array_dims().contains(&None)) {
        return Err(CodegenError::construct(
            &f.location,
            format!("unsized array parameter {}", p.name),
            TargetLanguage::Glsl,
            "only compute kernels may take unsized arrays",
        ));
    }
    let params = f.params.iter().map(|p| Flavor.declare(&p.ty, &p.name)).collect::<CResult<Vec<_>>>()?;
    Ok(format!("{} {name}({})", Flavor.type_name(&f.return_type)?, params.join(", ")))
}

fn finish(unit: Unit) -> String {
    let mut out = unit.w.out;
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

/// `orphans` are helpers no entry point calls; the first unit carries them.
fn graphics_unit(analysis: &Analysis, entry: &FunctionDecl, orphans: &[&FunctionDecl]) -> CResult<String> {
    let module = analysis.module;
    let stage = entry.stage.expect("stage entry");
    let functions = analysis.reachable(&[&[entry], orphans].concat());
    let helpers: Vec<&FunctionDecl> = functions.iter().copied().filter(|f| f.stage.is_none()).collect();
    let mut u = Unit::new(analysis, &format!("{} {} stage", module.name, stage.keyword()));
    u.structs()?;
    let globals = analysis.globals_used_by_all(&functions);
    u.globals(&globals, 0)?;

    let vertex_out: Vec<(String, TypeExpr, u32)> = match module.entry_point(Stage::Vertex).map(|v| &v.return_type) {
        Some(TypeExpr::Named(r)) => record_layout(module, r),
        _ => Vec::new(),
    };
    let varying_location =
        |name: &str, fallback: u32| vertex_out.iter().find(|(n, ..)| n == name).map_or(fallback, |(_, _, l)| *l);

    let mut io = Vec::new();
    let mut wrapper = Vec::new();
    let entry_name = if stage == Stage::Vertex { VERTEX_ENTRY } else { FRAGMENT_ENTRY };
    let mut call_args = String::new();
    if let Some(param) = entry.params.first() {
        match &param.ty {
            TypeExpr::Named(record) => {
                let record_ty = Flavor.ident(record);
                wrapper.push(format!("{record_ty} stage_in;"));
                for (m, t, l) in record_layout(module, record) {
                    check_io_type(&t, "input", &entry.location)?;
                    let (prefix, l) = if stage == Stage::Vertex { ("in_", l) } else { ("v_", varying_location(&m, l)) };
                    let var = format!("{prefix}{m}");
                    io.push(format!("layout(location = {l}) {}in {} {var};", interp(&t), Flavor.type_name(&t)?));
                    wrapper.push(format!("stage_in.{} = {var};", Flavor.ident(&m)));
                }
                call_args = "stage_in".to_string();
            }
            t => {
                check_io_type(t, "input", &entry.location)?;
                let (prefix, l) =
                    if stage == Stage::Vertex { ("in_", 0) } else { ("v_", varying_location(&param.name, 0)) };
                let var = format!("{prefix}{}", param.name);
                io.push(format!("layout(location = {l}) {}in {} {var};", interp(t), Flavor.type_name(t)?));
                call_args = var;
            }
        }
    }
    match (&entry.return_type, stage) {
        (TypeExpr::Named(record), _) => {
            wrapper.push(format!("{} stage_out = {entry_name}({call_args});", Flavor.ident(record)));
            let prefix = if stage == Stage::Vertex { "v_" } else { "out_" };
            for (m, t, l) in record_layout(module, record) {
                check_io_type(&t, "output", &entry.location)?;
                let var = format!("{prefix}{m}");
                let flat = if stage == Stage::Vertex { interp(&t) } else { "" };
                io.push(format!("layout(location = {l}) {flat}out {} {var};", Flavor.type_name(&t)?));
                wrapper.push(format!("{var} = stage_out.{};", Flavor.ident(&m)));
            }
            if stage == Stage::Vertex {
                if let Some(m) = clip_position_member(module, record) {
                    wrapper.push(format!("gl_Position = stage_out.{};", Flavor.ident(&m)));
                }
            }
        }
        (t, Stage::Fragment) => {
            io.push(format!("layout(location = 0) out {} frag_color;", Flavor.type_name(t)?));
            wrapper.push(format!("frag_color = {entry_name}({call_args});"));
        }
        (t, _) => {
            return Err(CodegenError::construct(
                &entry.location,
                format!("vertex entry returning {t}"),
                TargetLanguage::Glsl,
                "vertex entries must return a record",
            ))
        }
    }
    u.w.blank();
    for l in io {
        u.w.line(l);
    }
    u.helpers(&helpers)?;
    u.w.blank();
    u.w.function(&header(entry, entry_name)?, &[], &entry.body)?;
    u.w.blank();
    u.w.open("void main()");
    for l in wrapper {
        u.w.line(l);
    }
    u.w.close("");
    Ok(finish(u))
}

fn compute_unit(analysis: &Analysis, kernel: &FunctionDecl, orphans: &[&FunctionDecl]) -> CResult<String> {
    let module = analysis.module;
    let functions = analysis.reachable(&[&[kernel], orphans].concat());
    let helpers: Vec<&FunctionDecl> = functions.iter().copied().filter(|f| f.stage.is_none()).collect();
    let mut u = Unit::new(analysis, &format!("{} compute kernel {}", module.name, kernel.name));
    if kernel.name != "main" {
        u.w.line(format!("#pragma kernel {}", kernel.name));
    }
    let [x, y, z] = kernel.workgroup_size();
    u.w.blank();
    u.w.line(format!("layout(local_size_x = {x}, local_size_y = {y}, local_size_z = {z}) in;"));
    u.structs()?;
    u.w.blank();
    let mut binding = 0;
    for p in &kernel.params {
        let decl = Flavor.declare(&p.ty, &p.name)?;
        if p.ty.is_array() {
            u.w.line(buffer_block(&decl, &p.name, binding));
            binding += 1;
        } else {
            u.w.line(format!("uniform {decl};"));
        }
    }
    let globals = analysis.globals_used_by_all(&functions);
    u.globals(&globals, binding)?;
    u.helpers(&helpers)?;
    u.w.blank();
    u.w.function("void main()", &[], &kernel.body)?;
    Ok(finish(u))
}

fn library_unit(analysis: &Analysis) -> CResult<String> {
    let module = analysis.module;
    let mut u = Unit::new(analysis, &module.name);
    u.structs()?;
    let globals: Vec<&GlobalVar> = module.globals.iter().collect();
    u.globals(&globals, 0)?;
    let helpers: Vec<&FunctionDecl> = module.functions.iter().collect();
    u.helpers(&helpers)?;
    Ok(finish(u))
}

impl Generator for GlslGenerator {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Glsl
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        Flavor.type_name(ty)
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        let module = typed(module)?;
        let analysis = Analysis::new(&module);
        let t = TargetLanguage::Glsl;
        let entries: Vec<&FunctionDecl> = module.functions.iter().filter(|f| f.stage.is_some()).collect();
        let reached = analysis.reachable(&entries);
        let orphans: Vec<&FunctionDecl> = module
            .functions
            .iter()
            .filter(|f| f.stage.is_none() && !reached.iter().any(|r| r.name == f.name))
            .collect();
        let mut units = Vec::new();
        for stage in [Stage::Vertex, Stage::Fragment] {
            if let Some(entry) = module.entry_point(stage) {
                units.push(OutputUnit {
                    suggested_filename: format!("{}{}", module.name, t.extension(Some(stage))),
                    target: t.clone(),
                    text: graphics_unit(&analysis, entry, if units.is_empty() { &orphans } else { &[] })?,
                });
            }
        }
        for kernel in module.kernels() {
            let stem =
                if kernel.name == "main" { module.name.clone() } else { format!("{}_{}", module.name, kernel.name) };
            units.push(OutputUnit {
                suggested_filename: format!("{stem}{}", t.extension(Some(Stage::Compute))),
                target: t.clone(),
                text: compute_unit(&analysis, kernel, if units.is_empty() { &orphans } else { &[] })?,
            });
        }
        if units.is_empty() {
            units.push(OutputUnit {
                suggested_filename: format!("{}{}", module.name, t.extension(None)),
                target: t,
                text: library_unit(&analysis)?,
            });
        }
        Ok(units)
    }
}
