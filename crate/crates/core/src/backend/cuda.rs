use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use super::common::*;
use super::{typed, CodegenError, Degradation, Feature, Generator, OutputUnit, TargetLanguage};
use crate::ir::*;

/// CUDA C++. Compute-stage functions become `__global__` kernels and every
/// other function, graphics entries included, a `__device__` function.
///
/// Each unit opens with a self-contained runtime block (vector operators,
/// matrix records, `cgl_` builtins) guarded by `CROSSGL_RUNTIME_H`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CudaGenerator;

pub(crate) const RESERVED: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "class",
    "const",
    "constexpr",
    "default",
    "delete",
    "do",
    "double",
    "enum",
    "explicit",
    "extern",
    "friend",
    "goto",
    "inline",
    "long",
    "namespace",
    "new",
    "operator",
    "private",
    "protected",
    "public",
    "register",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "try",
    "catch",
    "typedef",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "volatile",
    "wchar_t",
    "uint",
    "half",
    "threadIdx",
    "blockIdx",
    "blockDim",
    "gridDim",
    "warpSize",
    "float2",
    "float3",
    "float4",
    "int2",
    "int3",
    "int4",
    "dim3",
    "texture",
    "surface",
    "main",
    "vertex_main",
    "fragment_main",
    "compute_main",
    "min",
    "max",
    "abs",
    "sqrt",
    "pow",
    "floor",
    "sin",
    "cos",
];

pub(crate) const RUNTIME_GUARD: &str = "CROSSGL_RUNTIME_H";

#[derive(Default)]
struct Flavor {
    extra_args: BTreeMap<String, Vec<String>>,
    user_functions: BTreeSet<String>,
}

impl CFlavor for Flavor {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Cuda
    }

    fn ident(&self, name: &str) -> String {
        if name.starts_with("cgl_") || name.starts_with("make_") || name.starts_with("__") {
            return format!("u_{name}");
        }
        sanitize(name, RESERVED)
    }

    fn type_name(&self, t: &TypeExpr) -> CResult<String> {
        Ok(match t {
            TypeExpr::Scalar(k) => k.name().to_string(),
            TypeExpr::Vector(_, n) => format!("float{n}"),
            TypeExpr::Matrix(r, c) => format!("float{r}x{c}"),
            TypeExpr::Sampler2D => "cudaTextureObject_t".to_string(),
            TypeExpr::Named(n) => self.ident(n),
            TypeExpr::Array(..) => {
                let dims: String =
                    t.array_dims().iter().map(|d| d.map_or("[]".to_string(), |n| format!("[{n}]"))).collect();
                format!("{}{dims}", self.type_name(t.innermost())?)
            }
        })
    }

    fn float_lit(&self, v: f64) -> String {
        format!("{}f", format_float(v))
    }

    fn construct(&self, t: &TypeExpr, _args: &[Expr], printed: Vec<P>) -> CResult<P> {
        Ok(match t {
            TypeExpr::Scalar(_) => P::new(format!("({})({})", self.type_name(t)?, printed[0].text), PREC_UNARY),
            TypeExpr::Named(n) => call_text(&format!("make_{}", self.ident(n)), &printed),
            other => call_text(&format!("make_{}", self.type_name(other)?), &printed),
        })
    }

    fn call(&self, callee: &str, _args: &[Expr], mut printed: Vec<P>, _loc: &SourceLocation) -> CResult<P> {
        if !self.user_functions.contains(callee) && crate::semantics::lookup_builtin(callee).is_some() {
            return Ok(call_text(&format!("cgl_{callee}"), &printed));
        }
        if let Some(extra) = self.extra_args.get(callee) {
            printed.extend(extra.iter().map(|n| P::atom(self.ident(n))));
        }
        Ok(call_text(&self.ident(callee), &printed))
    }

    fn swizzle(&self, _base: &Expr, bs: P, components: &str) -> P {
        if components.len() == 1 {
            return P::new(format!("{}.{components}", bs.postfix()), PREC_POSTFIX);
        }
        let idx: Vec<String> = swizzle_indices(components).iter().map(ToString::to_string).collect();
        P::atom(format!("cgl_swizzle{}<{}>({})", components.len(), idx.join(", "), bs.text))
    }

    fn swizzle_store(&self, base: &P, components: &str, value: &P) -> Option<String> {
        let idx: Vec<String> = swizzle_indices(components).iter().map(ToString::to_string).collect();
        Some(format!("cgl_set_swizzle{}<{}>({}, {})", components.len(), idx.join(", "), base.text, value.text))
    }

    fn intrinsic(&self, name: &str, axis: usize) -> P {
        let builtin = match name {
            "local_id" => "threadIdx",
            "group_id" => "blockIdx",
            _ => "blockDim",
        };
        P::new(format!("(int){builtin}.{}", ['x', 'y', 'z'][axis.min(2)]), PREC_UNARY)
    }

    fn split_compound(&self, target: &TypeExpr, _value: &TypeExpr, _op: BinaryOp) -> bool {
        matches!(target, TypeExpr::Matrix(..))
    }

    fn check_stmt(&self, s: &Stmt) -> CResult<()> {
        let reject = |what: &str| {
            Err(CodegenError::construct(&s.location, what, TargetLanguage::Cuda, "C arrays cannot be copied as values"))
        };
        match &s.kind {
            StmtKind::VarDecl { ty, init: Some(_), .. } if ty.is_array() => reject("array initializer"),
            StmtKind::Assign { target, .. } if ty(target).is_array() => reject("whole-array assignment"),
            _ => Ok(()),
        }
    }
}

const COMPONENTS: [&str; 4] = ["x", "y", "z", "w"];

fn vector_ops(out: &mut String) {
    for n in 2..=4usize {
        let t = format!("float{n}");
        let c = &COMPONENTS[..n];
        let build = |f: &dyn Fn(&str) -> String| -> String {
            let parts: Vec<String> = c.iter().map(|x| f(x)).collect();
            format!("make_{t}({})", parts.join(", "))
        };
        for op in ["+", "-", "*", "/"] {
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t} operator{op}({t} a, {t} b) {{ return {}; }}",
                build(&|x| format!("a.{x} {op} b.{x}"))
            );
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t} operator{op}({t} a, float s) {{ return {}; }}",
                build(&|x| format!("a.{x} {op} s"))
            );
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t} operator{op}(float s, {t} a) {{ return {}; }}",
                build(&|x| format!("s {op} a.{x}"))
            );
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t}& operator{op}=({t}& a, {t} b) {{ a = a {op} b; return a; }}"
            );
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t}& operator{op}=({t}& a, float s) {{ a = a {op} s; return a; }}"
            );
        }
        let _ = writeln!(
            out,
            "__host__ __device__ inline {t} operator-({t} a) {{ return {}; }}",
            build(&|x| format!("-a.{x}"))
        );
        let eq: Vec<String> = c.iter().map(|x| format!("a.{x} == b.{x}")).collect();
        let _ =
            writeln!(out, "__host__ __device__ inline bool operator==({t} a, {t} b) {{ return {}; }}", eq.join(" && "));
        let _ = writeln!(out, "__host__ __device__ inline bool operator!=({t} a, {t} b) {{ return !(a == b); }}");
        out.push('\n');
    }
}

/// Ways to split `n` components into runs of 1..=4, excluding all-scalar.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n.min(4) {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn vector_constructors(out: &mut String) {
    for n in 2..=4usize {
        let t = format!("float{n}");
        let params: Vec<String> = (0..n).map(|_| "s".to_string()).collect();
        let _ = writeln!(
            out,
            "__host__ __device__ inline {t} make_{t}(float s) {{ return make_{t}({}); }}",
            params.join(", ")
        );
        for parts in compositions(n) {
            if parts.iter().all(|&p| p == 1) {
                continue;
            }
            let names = ["a", "b", "c", "d"];
            let mut decl = Vec::new();
            let mut comps = Vec::new();
            for (i, &p) in parts.iter().enumerate() {
                if p == 1 {
                    decl.push(format!("float {}", names[i]));
                    comps.push(names[i].to_string());
                } else {
                    decl.push(format!("float{p} {}", names[i]));
                    comps.extend(COMPONENTS[..p].iter().map(|x| format!("{}.{x}", names[i])));
                }
            }
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t} make_{t}({}) {{ return make_{t}({}); }}",
                decl.join(", "),
                comps.join(", ")
            );
        }
        out.push('\n');
    }
}

fn builtins(out: &mut String) {
    let scalar = [
        ("dot", "float a, float b", "float", "a * b"),
        ("length", "float a", "float", "fabsf(a)"),
        ("normalize", "float a", "float", "a / fabsf(a)"),
        ("max", "float a, float b", "float", "fmaxf(a, b)"),
        ("min", "float a, float b", "float", "fminf(a, b)"),
        ("pow", "float a, float b", "float", "powf(a, b)"),
        ("sqrt", "float a", "float", "sqrtf(a)"),
        ("abs", "float a", "float", "fabsf(a)"),
        ("floor", "float a", "float", "floorf(a)"),
        ("sin", "float a", "float", "sinf(a)"),
        ("cos", "float a", "float", "cosf(a)"),
        ("mix", "float a, float b, float t", "float", "a * (1.0f - t) + b * t"),
        ("clamp", "float a, float lo, float hi", "float", "fminf(fmaxf(a, lo), hi)"),
    ];
    for (name, params, ret, body) in scalar {
        let _ = writeln!(out, "__host__ __device__ inline {ret} cgl_{name}({params}) {{ return {body}; }}");
    }
    out.push('\n');
    for n in 2..=4usize {
        let t = format!("float{n}");
        let c = &COMPONENTS[..n];
        let map = |f: &dyn Fn(&str) -> String| -> String {
            let parts: Vec<String> = c.iter().map(|x| f(x)).collect();
            format!("make_{t}({})", parts.join(", "))
        };
        let sum: Vec<String> = c.iter().map(|x| format!("a.{x} * b.{x}")).collect();
        let _ =
            writeln!(out, "__host__ __device__ inline float cgl_dot({t} a, {t} b) {{ return {}; }}", sum.join(" + "));
        let _ = writeln!(out, "__host__ __device__ inline float cgl_length({t} a) {{ return sqrtf(cgl_dot(a, a)); }}");
        let _ = writeln!(out, "__host__ __device__ inline {t} cgl_normalize({t} a) {{ return a / cgl_length(a); }}");
        for (name, f) in [("max", "fmaxf"), ("min", "fminf"), ("pow", "powf")] {
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t} cgl_{name}({t} a, {t} b) {{ return {}; }}",
                map(&|x| format!("{f}(a.{x}, b.{x})"))
            );
        }
        for (name, f) in [("sqrt", "sqrtf"), ("abs", "fabsf"), ("floor", "floorf"), ("sin", "sinf"), ("cos", "cosf")] {
            let _ = writeln!(
                out,
                "__host__ __device__ inline {t} cgl_{name}({t} a) {{ return {}; }}",
                map(&|x| format!("{f}(a.{x})"))
            );
        }
        let _ = writeln!(
            out,
            "__host__ __device__ inline {t} cgl_mix({t} a, {t} b, float t) {{ return a * (1.0f - t) + b * t; }}"
        );
        let _ = writeln!(
            out,
            "__host__ __device__ inline {t} cgl_clamp({t} a, float lo, float hi) {{ return {}; }}",
            map(&|x| format!("fminf(fmaxf(a.{x}, lo), hi)"))
        );
        out.push('\n');
    }
    out.push_str(
        "__host__ __device__ inline float3 cgl_cross(float3 a, float3 b) { return make_float3(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x); }\n",
    );
    out.push_str(
        "__device__ inline float4 cgl_texture(cudaTextureObject_t t, float2 uv) { return tex2D<float4>(t, uv.x, uv.y); }\n\n",
    );
}

fn matrices(out: &mut String) {
    for n in 2..=4usize {
        let v = format!("float{n}");
        let m = format!("float{n}x{n}");
        let _ = writeln!(out, "struct {m} {{");
        let _ = writeln!(out, "    {v} cols[{n}];");
        let _ = writeln!(out, "    __host__ __device__ {v}& operator[](int i) {{ return cols[i]; }}");
        let _ = writeln!(out, "    __host__ __device__ const {v}& operator[](int i) const {{ return cols[i]; }}");
        let _ = writeln!(out, "}};");
        let params: Vec<String> = (0..n).map(|i| format!("{v} c{i}")).collect();
        let sets: String = (0..n).map(|i| format!(" m.cols[{i}] = c{i};")).collect();
        let _ = writeln!(
            out,
            "__host__ __device__ inline {m} make_{m}({}) {{ {m} m;{sets} return m; }}",
            params.join(", ")
        );
        let mv: Vec<String> = (0..n).map(|i| format!("m.cols[{i}] * v.{}", COMPONENTS[i])).collect();
        let _ =
            writeln!(out, "__host__ __device__ inline {v} operator*({m} m, {v} v) {{ return {}; }}", mv.join(" + "));
        let vm: Vec<String> = (0..n).map(|i| format!("cgl_dot(v, m.cols[{i}])")).collect();
        let _ = writeln!(
            out,
            "__host__ __device__ inline {v} operator*({v} v, {m} m) {{ return make_{v}({}); }}",
            vm.join(", ")
        );
        let mm: Vec<String> = (0..n).map(|i| format!("a * b.cols[{i}]")).collect();
        let _ = writeln!(
            out,
            "__host__ __device__ inline {m} operator*({m} a, {m} b) {{ return make_{m}({}); }}",
            mm.join(", ")
        );
        let eq: Vec<String> = (0..n).map(|i| format!("a.cols[{i}] == b.cols[{i}]")).collect();
        let _ =
            writeln!(out, "__host__ __device__ inline bool operator==({m} a, {m} b) {{ return {}; }}", eq.join(" && "));
        let _ = writeln!(out, "__host__ __device__ inline bool operator!=({m} a, {m} b) {{ return !(a == b); }}");
        out.push('\n');
    }
}

fn swizzles(out: &mut String) {
    out.push_str(
        "template <typename V> __host__ __device__ inline float cgl_get(const V& v, int i) { return (&v.x)[i]; }\n",
    );
    out.push_str(
        "template <typename V> __host__ __device__ inline void cgl_put(V& v, int i, float s) { (&v.x)[i] = s; }\n",
    );
    for n in 2..=4usize {
        let letters = &["A", "B", "C", "D"][..n];
        let tparams: Vec<String> = letters.iter().map(|l| format!("int {l}")).collect();
        let gets: Vec<String> = letters.iter().map(|l| format!("cgl_get(v, {l})")).collect();
        let puts: String = letters.iter().zip(COMPONENTS).map(|(l, c)| format!(" cgl_put(v, {l}, s.{c});")).collect();
        let _ = writeln!(
            out,
            "template <{}, typename V> __host__ __device__ inline float{n} cgl_swizzle{n}(V v) {{ return make_float{n}({}); }}",
            tparams.join(", "),
            gets.join(", ")
        );
        let _ = writeln!(
            out,
            "template <{}, typename V> __host__ __device__ inline void cgl_set_swizzle{n}(V& v, float{n} s) {{{puts} }}",
            tparams.join(", ")
        );
    }
}

/// The runtime block every CUDA unit starts with.
pub(crate) fn runtime() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        let mut out = String::new();
        let _ = writeln!(out, "#ifndef {RUNTIME_GUARD}");
        let _ = writeln!(out, "#define {RUNTIME_GUARD}");
        out.push_str("#include <cuda_runtime.h>\n#include <math.h>\n\n");
        vector_ops(&mut out);
        vector_constructors(&mut out);
        builtins(&mut out);
        matrices(&mut out);
        swizzles(&mut out);
        let _ = writeln!(out, "#endif // {RUNTIME_GUARD}");
        out
    })
}

/// Globals handed to functions as parameters rather than declared at file scope.
fn is_passed(g: &GlobalVar) -> bool {
    match g.qualifier {
        GlobalQualifier::Uniform => true,
        GlobalQualifier::Plain => g.ty.array_dims().first() == Some(&None),
        GlobalQualifier::Const => false,
    }
}

fn kernel_name(f: &FunctionDecl) -> String {
    entry_name(&Flavor::default(), f)
}

fn entry_name(fl: &Flavor, f: &FunctionDecl) -> String {
    match f.stage {
        Some(Stage::Vertex) if f.name == "main" => "vertex_main".to_string(),
        Some(Stage::Fragment) if f.name == "main" => "fragment_main".to_string(),
        Some(Stage::Compute) if f.name == "main" => "compute_main".to_string(),
        _ => fl.ident(&f.name),
    }
}

fn param_decl(fl: &Flavor, t: &TypeExpr, name: &str) -> CResult<String> {
    match t.array_dims().first() {
        Some(None) => {
            if t.array_dims().len() > 1 {
                return Err(CodegenError::construct(
                    &SourceLocation::synthetic(),
                    format!("multi-dimensional array {name}"),
                    TargetLanguage::Cuda,
                    "only the outer dimension of a buffer may be unsized",
                ));
            }
            Ok(format!("{}* {}", fl.type_name(t.innermost())?, fl.ident(name)))
        }
        _ => fl.declare(t, name),
    }
}

fn header(fl: &Flavor, analysis: &Analysis, f: &FunctionDecl) -> CResult<String> {
    if f.return_type.is_array() {
        return Err(CodegenError::construct(
            &f.location,
            format!("array return type of {}", f.name),
            TargetLanguage::Cuda,
            "C functions cannot return arrays",
        ));
    }
    let mut params = Vec::new();
    for p in &f.params {
        let decl = if f.is_kernel() && p.ty.is_array() {
            if p.ty.array_dims().len() > 1 {
                return Err(CodegenError::construct(
                    &f.location,
                    format!("multi-dimensional kernel parameter {}", p.name),
                    TargetLanguage::Cuda,
                    "kernel buffers hold one dimension",
                ));
            }
            format!("{}* {}", fl.type_name(p.ty.innermost())?, fl.ident(&p.name))
        } else {
            param_decl(fl, &p.ty, &p.name).map_err(|_| {
                CodegenError::construct(
                    &f.location,
                    format!("parameter {}", p.name),
                    TargetLanguage::Cuda,
                    "only the outer dimension of a buffer may be unsized",
                )
            })?
        };
        params.push(decl);
    }
    for g in analysis.globals_used(f).into_iter().filter(|g| is_passed(g)) {
        params.push(param_decl(fl, &g.ty, &g.name).map_err(|_| {
            CodegenError::construct(
                &g.location,
                format!("global {}", g.name),
                TargetLanguage::Cuda,
                "only the outer dimension of a buffer may be unsized",
            )
        })?);
    }
    let qualifier = if f.is_kernel() { "__global__" } else { "__device__" };
    Ok(format!("{qualifier} {} {}({})", fl.type_name(&f.return_type)?, entry_name(fl, f), params.join(", ")))
}

fn emit(module: &ShaderModule) -> CResult<String> {
    let analysis = Analysis::new(module);
    let mut fl = Flavor {
        extra_args: BTreeMap::new(),
        user_functions: module.functions.iter().map(|f| f.name.clone()).collect(),
    };
    for f in module.functions.iter().filter(|f| f.stage.is_none()) {
        let passed: Vec<String> =
            analysis.globals_used(f).into_iter().filter(|g| is_passed(g)).map(|g| g.name.clone()).collect();
        if !passed.is_empty() {
            fl.extra_args.insert(f.name.clone(), passed);
        }
    }

    let mut w = CWriter::new(&fl);
    w.line(format!("// {}, generated by crosstl", module.name));
    w.blank();
    w.out.push_str(runtime());

    for s in structs_in_dependency_order(module) {
        w.blank();
        w.open(format!("struct {}", fl.ident(&s.name)));
        for m in &s.members {
            w.line(format!("{};", fl.declare(&m.ty, &m.name)?));
        }
        w.close(";");
    }
    for name in constructed_structs(module) {
        let Some(s) = module.find_struct(&name) else { continue };
        let n = fl.ident(&s.name);
        let params =
            s.members.iter().map(|m| fl.declare(&m.ty, &format!("{}_", m.name))).collect::<CResult<Vec<_>>>()?;
        w.blank();
        w.open(format!("__host__ __device__ inline {n} make_{n}({})", params.join(", ")));
        w.line(format!("{n} value;"));
        for m in &s.members {
            if m.ty.is_array() {
                return Err(CodegenError::construct(
                    &s.location,
                    format!("constructor of {}", s.name),
                    TargetLanguage::Cuda,
                    "C arrays cannot be copied as values",
                ));
            }
            w.line(format!("value.{} = {}_;", fl.ident(&m.name), m.name));
        }
        w.line("return value;");
        w.close("");
    }

    let file_scope: Vec<&GlobalVar> = module.globals.iter().filter(|g| !is_passed(g)).collect();
    if !file_scope.is_empty() {
        w.blank();
    }
    for g in file_scope {
        let qualifier = if g.qualifier == GlobalQualifier::Const { "__constant__" } else { "__device__" };
        let decl = fl.declare(&g.ty, &g.name)?;
        match &g.init {
            Some(e) => {
                let init = w.expr(e)?.text;
                w.line(format!("{qualifier} {decl} = {init};"));
            }
            None => w.line(format!("{qualifier} {decl};")),
        }
    }

    let device: Vec<&FunctionDecl> = module.functions.iter().filter(|f| !f.is_kernel()).collect();
    let headers = device.iter().map(|f| header(&fl, &analysis, f)).collect::<CResult<Vec<_>>>()?;
    if !device.is_empty() {
        w.blank();
        w.prototypes(&headers);
        for (f, h) in device.iter().zip(&headers) {
            w.function(h, &[], &f.body)?;
            w.blank();
        }
    }
    for k in module.kernels() {
        let [x, y, z] = k.workgroup_size();
        w.blank();
        w.line(format!("// launch with blockDim = dim3({x}, {y}, {z})"));
        w.function(&header(&fl, &analysis, k)?, &[], &k.body)?;
    }
    let mut out = w.out;
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}

/// `(emitted name, parameter count)` of every kernel, counting the module
/// globals appended to its parameter list.
pub fn cuda_kernel_signatures(module: &ShaderModule) -> Vec<(String, usize)> {
    let analysis = Analysis::new(module);
    module
        .kernels()
        .map(|k| {
            let appended = analysis.globals_used(k).into_iter().filter(|g| is_passed(g)).count();
            (kernel_name(k), k.params.len() + appended)
        })
        .collect()
}

impl Generator for CudaGenerator {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::Cuda
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        Flavor { extra_args: BTreeMap::new(), user_functions: BTreeSet::new() }.type_name(ty)
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        let module = typed(module)?;
        Ok(vec![OutputUnit {
            suggested_filename: format!("{}{}", module.name, TargetLanguage::Cuda.extension(None)),
            target: TargetLanguage::Cuda,
            text: emit(&module)?,
        }])
    }

    fn degradations(&self) -> Vec<Degradation> {
        vec![Degradation { feature: Feature::Shaders, note: "graphics stages emitted as __device__ helpers".into() }]
    }
}
