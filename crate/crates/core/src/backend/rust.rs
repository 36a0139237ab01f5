use std::collections::{BTreeSet, HashSet};

use super::common::{
    format_float, is_builtin_call, structs_in_dependency_order, swizzle_indices, ty, uses_texture, Analysis, CResult,
    P, PREC_POSTFIX, PREC_UNARY,
};
use super::{typed, CodegenError, Degradation, Feature, Generator, OutputUnit, TargetLanguage};
use crate::ir::*;

/// Standalone Rust source: every unit compiles as a library crate on its own.
///
/// Module globals other than constants live in a `Globals` record that
/// functions needing them take as their first parameter. Kernels also take
/// a `ComputeCtx` with the thread position.
#[derive(Debug, Clone, Copy, Default)]
pub struct RustGenerator;

const RESERVED: &[&str] = &[
    "as",
    "async",
    "await",
    "box",
    "break",
    "const",
    "continue",
    "crate",
    "dyn",
    "else",
    "enum",
    "extern",
    "false",
    "fn",
    "for",
    "if",
    "impl",
    "in",
    "let",
    "loop",
    "match",
    "mod",
    "move",
    "mut",
    "pub",
    "ref",
    "return",
    "self",
    "Self",
    "static",
    "struct",
    "super",
    "trait",
    "true",
    "type",
    "unsafe",
    "use",
    "where",
    "while",
    "abstract",
    "become",
    "do",
    "final",
    "macro",
    "override",
    "priv",
    "try",
    "typeof",
    "unsized",
    "virtual",
    "yield",
    "union",
    "g",
    "ctx",
    "Vec2",
    "Vec3",
    "Vec4",
    "Mat2",
    "Mat3",
    "Mat4",
    "Globals",
    "ComputeCtx",
    "Components",
    "Gen",
    "Swizzle",
    "gather",
    "swizzle2",
    "swizzle3",
    "swizzle4",
    "set_swizzle2",
    "set_swizzle3",
    "set_swizzle4",
    "dot",
    "cross",
    "normalize",
    "length",
    "max",
    "min",
    "pow",
    "sqrt",
    "mix",
    "clamp",
    "abs",
    "floor",
    "sin",
    "cos",
    "texture",
    "vertex_main",
    "fragment_main",
    "compute_main",
    "Vec",
    "Option",
    "Some",
    "None",
    "Ok",
    "Err",
    "Result",
    "String",
    "Box",
    "Default",
    "Copy",
    "Clone",
    "Debug",
    "PartialEq",
    "value",
];

const PRELUDE: &str = r#"#![allow(unused, non_snake_case, non_camel_case_types, non_upper_case_globals, unused_parens, while_true, unreachable_code, dead_code, clippy::all)]

use std::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

pub trait Gen: Copy {
    fn map(self, f: impl Fn(f32) -> f32) -> Self;
    fn zip(self, o: Self, f: impl Fn(f32, f32) -> f32) -> Self;
    fn sum(self) -> f32;
}

impl Gen for f32 {
    fn map(self, f: impl Fn(f32) -> f32) -> Self { f(self) }
    fn zip(self, o: Self, f: impl Fn(f32, f32) -> f32) -> Self { f(self, o) }
    fn sum(self) -> f32 { self }
}

pub trait Swizzle {
    fn get(&self, i: usize) -> f32;
    fn set(&mut self, i: usize, v: f32);
}

pub trait Components {
    fn push_to(&self, out: &mut Vec<f32>);
}

impl Components for f32 {
    fn push_to(&self, out: &mut Vec<f32>) { out.push(*self); }
}

impl Components for i32 {
    fn push_to(&self, out: &mut Vec<f32>) { out.push(*self as f32); }
}

pub fn gather(parts: &[&dyn Components], n: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(n);
    for p in parts {
        p.push_to(&mut out);
    }
    if out.len() == 1 {
        out.resize(n, out[0]);
    }
    out
}

macro_rules! vec_op {
    ($V:ident, $Tr:ident, $f:ident, $op:tt, $($c:ident),+) => {
        impl $Tr for $V { type Output = $V; fn $f(self, o: $V) -> $V { $V { $($c: self.$c $op o.$c),+ } } }
        impl $Tr<f32> for $V { type Output = $V; fn $f(self, s: f32) -> $V { $V { $($c: self.$c $op s),+ } } }
        impl $Tr<$V> for f32 { type Output = $V; fn $f(self, o: $V) -> $V { $V { $($c: self $op o.$c),+ } } }
    };
}

macro_rules! vec_type {
    ($V:ident, $n:literal, $($c:ident : $i:literal),+) => {
        #[derive(Clone, Copy, Debug, Default, PartialEq)]
        pub struct $V { $(pub $c: f32),+ }

        impl $V {
            pub const fn new($($c: f32),+) -> Self { $V { $($c),+ } }
            pub const fn splat(s: f32) -> Self { $V { $($c: s),+ } }
            pub fn gather(parts: &[&dyn Components]) -> Self {
                let c = gather(parts, $n);
                $V { $($c: c[$i]),+ }
            }
        }

        vec_op!($V, Add, add, +, $($c),+);
        vec_op!($V, Sub, sub, -, $($c),+);
        vec_op!($V, Mul, mul, *, $($c),+);
        vec_op!($V, Div, div, /, $($c),+);

        impl Neg for $V { type Output = $V; fn neg(self) -> $V { $V { $($c: -self.$c),+ } } }

        impl Gen for $V {
            fn map(self, f: impl Fn(f32) -> f32) -> Self { $V { $($c: f(self.$c)),+ } }
            fn zip(self, o: Self, f: impl Fn(f32, f32) -> f32) -> Self { $V { $($c: f(self.$c, o.$c)),+ } }
            fn sum(self) -> f32 { 0.0 $(+ self.$c)+ }
        }

        impl Swizzle for $V {
            fn get(&self, i: usize) -> f32 { match i { $($i => self.$c,)+ _ => panic!("swizzle index {i}") } }
            fn set(&mut self, i: usize, v: f32) { match i { $($i => self.$c = v,)+ _ => panic!("swizzle index {i}") } }
        }

        impl Components for $V {
            fn push_to(&self, out: &mut Vec<f32>) { $(out.push(self.$c);)+ }
        }
    };
}

vec_type!(Vec2, 2, x: 0, y: 1);
vec_type!(Vec3, 3, x: 0, y: 1, z: 2);
vec_type!(Vec4, 4, x: 0, y: 1, z: 2, w: 3);

macro_rules! mat_type {
    ($M:ident, $V:ident, $n:literal) => {
        /// Column-major; `m[i]` is column `i`.
        #[derive(Clone, Copy, Debug, Default, PartialEq)]
        pub struct $M { pub cols: [$V; $n] }

        impl $M {
            pub const fn new(cols: [$V; $n]) -> Self { $M { cols } }
        }

        impl Index<usize> for $M { type Output = $V; fn index(&self, i: usize) -> &$V { &self.cols[i] } }
        impl IndexMut<usize> for $M { fn index_mut(&mut self, i: usize) -> &mut $V { &mut self.cols[i] } }

        impl Mul<$V> for $M {
            type Output = $V;
            fn mul(self, v: $V) -> $V {
                let mut r = $V::default();
                for i in 0..$n { r = r + self.cols[i] * v.get(i); }
                r
            }
        }

        impl Mul<$M> for $V {
            type Output = $V;
            fn mul(self, m: $M) -> $V {
                let mut r = self;
                for i in 0..$n { r.set(i, dot(self, m.cols[i])); }
                r
            }
        }

        impl Mul for $M {
            type Output = $M;
            fn mul(self, o: $M) -> $M {
                let mut r = o;
                for i in 0..$n { r.cols[i] = self * o.cols[i]; }
                r
            }
        }
    };
}

mat_type!(Mat2, Vec2, 2);
mat_type!(Mat3, Vec3, 3);
mat_type!(Mat4, Vec4, 4);

pub fn swizzle2(v: &impl Swizzle, i: [usize; 2]) -> Vec2 { Vec2::new(v.get(i[0]), v.get(i[1])) }
pub fn swizzle3(v: &impl Swizzle, i: [usize; 3]) -> Vec3 { Vec3::new(v.get(i[0]), v.get(i[1]), v.get(i[2])) }
pub fn swizzle4(v: &impl Swizzle, i: [usize; 4]) -> Vec4 { Vec4::new(v.get(i[0]), v.get(i[1]), v.get(i[2]), v.get(i[3])) }
pub fn set_swizzle2(v: &mut impl Swizzle, i: [usize; 2], s: Vec2) { v.set(i[0], s.x); v.set(i[1], s.y); }
pub fn set_swizzle3(v: &mut impl Swizzle, i: [usize; 3], s: Vec3) { v.set(i[0], s.x); v.set(i[1], s.y); v.set(i[2], s.z); }
pub fn set_swizzle4(v: &mut impl Swizzle, i: [usize; 4], s: Vec4) { v.set(i[0], s.x); v.set(i[1], s.y); v.set(i[2], s.z); v.set(i[3], s.w); }

pub fn dot<T: Gen>(a: T, b: T) -> f32 { a.zip(b, |x, y| x * y).sum() }
pub fn length<T: Gen>(a: T) -> f32 { dot(a, a).sqrt() }
pub fn normalize<T: Gen>(a: T) -> T { let l = length(a); a.map(|x| x / l) }
pub fn cross(a: Vec3, b: Vec3) -> Vec3 { Vec3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x) }
pub fn max<T: Gen>(a: T, b: T) -> T { a.zip(b, |x, y| if x > y { x } else { y }) }
pub fn min<T: Gen>(a: T, b: T) -> T { a.zip(b, |x, y| if x < y { x } else { y }) }
pub fn pow<T: Gen>(a: T, b: T) -> T { a.zip(b, f32::powf) }
pub fn sqrt<T: Gen>(a: T) -> T { a.map(f32::sqrt) }
pub fn abs<T: Gen>(a: T) -> T { a.map(f32::abs) }
pub fn floor<T: Gen>(a: T) -> T { a.map(f32::floor) }
pub fn sin<T: Gen>(a: T) -> T { a.map(f32::sin) }
pub fn cos<T: Gen>(a: T) -> T { a.map(f32::cos) }
pub fn mix<T: Gen>(a: T, b: T, t: f32) -> T { a.zip(b, |x, y| x * (1.0 - t) + y * t) }
pub fn clamp<T: Gen>(a: T, lo: f32, hi: f32) -> T { a.map(|x| { let x = if x < lo { lo } else { x }; if x > hi { hi } else { x } }) }

/// Thread position handed to every kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComputeCtx {
    pub local_id: [i32; 3],
    pub group_id: [i32; 3],
    pub group_size: [i32; 3],
}
"#;

fn ident(name: &str) -> String {
    if name.starts_with("__") {
        return format!("u{name}");
    }
    if RESERVED.contains(&name) {
        format!("{name}_")
    } else {
        name.to_string()
    }
}

fn rust_type(t: &TypeExpr) -> CResult<String> {
    Ok(match t {
        TypeExpr::Scalar(ScalarKind::Int) => "i32".into(),
        TypeExpr::Scalar(ScalarKind::Float) => "f32".into(),
        TypeExpr::Scalar(ScalarKind::Bool) => "bool".into(),
        TypeExpr::Scalar(ScalarKind::Void) => "()".into(),
        TypeExpr::Vector(_, n) => format!("Vec{n}"),
        TypeExpr::Matrix(n, _) => format!("Mat{n}"),
        TypeExpr::Named(n) => ident(n),
        TypeExpr::Array(inner, Some(n)) => format!("[{}; {n}]", rust_type(inner)?),
        TypeExpr::Array(inner, None) => format!("Vec<{}>", rust_type(inner)?),
        TypeExpr::Sampler2D => {
            return Err(CodegenError::UnsupportedType { ty: t.clone(), target: TargetLanguage::RustSrc })
        }
    })
}

fn default_value(t: &TypeExpr) -> CResult<String> {
    Ok(match t {
        TypeExpr::Array(inner, Some(n)) => format!("std::array::from_fn::<_, {n}, _>(|_| {})", default_value(inner)?),
        TypeExpr::Array(_, None) => "Vec::new()".into(),
        _ => "Default::default()".into(),
    })
}

fn cast(p: &P, to: &str) -> P {
    P::atom(format!("({} as {to})", p.at(PREC_UNARY)))
}

fn binary_prec(op: BinaryOp) -> u8 {
    op.precedence()
}

fn unsupported(loc: &SourceLocation, what: impl Into<String>, reason: &str) -> CodegenError {
    CodegenError::construct(loc, what, TargetLanguage::RustSrc, reason)
}

#[derive(Clone, Copy)]
enum Loop {
    While(u32),
    For(u32),
}

struct Emitter<'m> {
    module: &'m ShaderModule,
    /// Callable functions taking `g: &mut Globals`.
    takes_globals: BTreeSet<String>,
    mutable_globals: BTreeSet<String>,
    out: String,
    indent: usize,
    scopes: Vec<HashSet<String>>,
    loops: Vec<Loop>,
    labels: u32,
}

impl<'m> Emitter<'m> {
    fn line(&mut self, s: impl AsRef<str>) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s.as_ref());
        self.out.push('\n');
    }

    fn blank(&mut self) {
        if !self.out.ends_with("\n\n") {
            self.out.push('\n');
        }
    }

    fn is_local(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name))
    }

    fn declare_local(&mut self, name: &str) {
        self.scopes.last_mut().expect("scope").insert(name.to_string());
    }

    fn expr(&self, e: &Expr) -> CResult<P> {
        Ok(match &e.kind {
            ExprKind::IntLit(v) if *v > i32::MAX as i64 => P::atom("i32::MIN"),
            ExprKind::IntLit(v) => P::atom(v.to_string()),
            ExprKind::FloatLit(v) => {
                let t = format!("{}f32", format_float(*v));
                if t.starts_with('-') {
                    P::new(t, PREC_UNARY)
                } else {
                    P::atom(t)
                }
            }
            ExprKind::BoolLit(b) => P::atom(b.to_string()),
            ExprKind::Var(n) => {
                if !self.is_local(n) && self.mutable_globals.contains(n) {
                    P::new(format!("g.{}", ident(n)), PREC_POSTFIX)
                } else {
                    P::atom(ident(n))
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, ty(e))?,
            ExprKind::Unary { op: UnaryOp::Neg, operand } if *ty(operand) == TypeExpr::INT => {
                P::atom(format!("i32::wrapping_neg({})", self.expr(operand)?.text))
            }
            ExprKind::Unary { op, operand } => {
                let inner = self.expr(operand)?.at(PREC_UNARY);
                let inner = if inner.starts_with('-') || inner.starts_with('!') { format!("({inner})") } else { inner };
                P::new(format!("{}{inner}", op.symbol()), PREC_UNARY)
            }
            ExprKind::Call { callee, args } => self.call(callee, args, &e.location)?,
            ExprKind::Construct { ty: t, args } => self.construct(t, args, &e.location)?,
            ExprKind::MemberOrSwizzle { base, name } | ExprKind::Member { base, member: name } => {
                P::new(format!("{}.{}", self.expr(base)?.postfix(), ident(name)), PREC_POSTFIX)
            }
            ExprKind::Swizzle { base, components } => {
                let bs = self.expr(base)?;
                if components.len() == 1 {
                    P::new(format!("{}.{components}", bs.postfix()), PREC_POSTFIX)
                } else {
                    let idx: Vec<String> = swizzle_indices(components).iter().map(ToString::to_string).collect();
                    P::atom(format!("swizzle{}(&{}, [{}])", components.len(), bs.postfix(), idx.join(", ")))
                }
            }
            ExprKind::Index { base, index } => {
                let bs = self.expr(base)?;
                let is = self.expr(index)?;
                P::new(format!("{}[{} as usize]", bs.postfix(), is.at(PREC_POSTFIX)), PREC_POSTFIX)
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                let result = ty(e);
                let branch = |x: &Expr| -> CResult<String> {
                    let p = self.expr(x)?;
                    Ok(if *result == TypeExpr::FLOAT && *ty(x) == TypeExpr::INT {
                        cast(&p, "f32").text
                    } else {
                        p.text
                    })
                };
                P::atom(format!(
                    "(if {} {{ {} }} else {{ {} }})",
                    self.expr(cond)?.text,
                    branch(then)?,
                    branch(otherwise)?
                ))
            }
        })
    }

    /// `e` converted to f32 when it is an int used where a float is expected.
    fn promoted(&self, e: &Expr, want_float: bool) -> CResult<P> {
        let p = self.expr(e)?;
        Ok(if want_float && *ty(e) == TypeExpr::INT { cast(&p, "f32") } else { p })
    }

    fn binary(&self, op: BinaryOp, lhs: &Expr, rhs: &Expr, result: &TypeExpr) -> CResult<P> {
        let (lt, rt) = (ty(lhs), ty(rhs));
        let int_arith = op.is_arithmetic() && *lt == TypeExpr::INT && *rt == TypeExpr::INT;
        if int_arith {
            let f = match op {
                BinaryOp::Add => "wrapping_add",
                BinaryOp::Sub => "wrapping_sub",
                BinaryOp::Mul => "wrapping_mul",
                BinaryOp::Div => "wrapping_div",
                _ => "wrapping_rem",
            };
            return Ok(P::atom(format!("i32::{f}({}, {})", self.expr(lhs)?.text, self.expr(rhs)?.text)));
        }
        let want_float = if op.is_comparison() {
            *lt == TypeExpr::FLOAT || *rt == TypeExpr::FLOAT
        } else {
            result != &TypeExpr::INT && result != &TypeExpr::BOOL
        };
        let ls = self.promoted(lhs, want_float)?;
        let rs = self.promoted(rhs, want_float)?;
        let prec = binary_prec(op);
        let left_min = if op.is_comparison() { prec + 1 } else { prec };
        Ok(P::new(format!("{} {} {}", ls.at(left_min), op.symbol(), rs.at(prec + 1)), prec))
    }

    fn args_with_globals(&self, callee: &str, printed: Vec<String>) -> P {
        let name = ident(callee);
        if !self.takes_globals.contains(callee) {
            return P::atom(format!("{name}({})", printed.join(", ")));
        }
        if printed.is_empty() {
            return P::atom(format!("{name}(g)"));
        }
        let lets: String = printed.iter().enumerate().map(|(i, a)| format!("let __a{i} = {a}; ")).collect();
        let names: Vec<String> = (0..printed.len()).map(|i| format!("__a{i}")).collect();
        P::atom(format!("{{ {lets}{name}(g, {}) }}", names.join(", ")))
    }

    fn call(&self, callee: &str, args: &[Expr], loc: &SourceLocation) -> CResult<P> {
        if crate::semantics::is_compute_intrinsic(callee) {
            let axis = match args.first().map(|a| &a.kind) {
                Some(ExprKind::IntLit(a)) => (*a).clamp(0, 2),
                _ => 0,
            };
            return Ok(P::new(format!("ctx.{callee}[{axis}]"), PREC_POSTFIX));
        }
        if callee == "texture" && is_builtin_call(self.module, callee) {
            return Err(unsupported(loc, "texture sampling", "the Rust target has no texture support"));
        }
        let printed = args.iter().map(|a| Ok(self.expr(a)?.text)).collect::<CResult<Vec<_>>>()?;
        if is_builtin_call(self.module, callee) {
            return Ok(P::atom(format!("{callee}({})", printed.join(", "))));
        }
        Ok(self.args_with_globals(callee, printed))
    }

    fn construct(&self, t: &TypeExpr, args: &[Expr], loc: &SourceLocation) -> CResult<P> {
        match t {
            TypeExpr::Scalar(ScalarKind::Float) => self.promoted(&args[0], true),
            TypeExpr::Scalar(ScalarKind::Int) => {
                let p = self.expr(&args[0])?;
                Ok(if *ty(&args[0]) == TypeExpr::INT { p } else { cast(&p, "i32") })
            }
            TypeExpr::Scalar(_) => self.expr(&args[0]),
            TypeExpr::Vector(_, n) => {
                let name = format!("Vec{n}");
                let scalars = args.iter().all(|a| a.ty.as_ref().is_some_and(TypeExpr::is_numeric_scalar));
                if scalars && args.len() == 1 {
                    return Ok(P::atom(format!("{name}::splat({})", self.promoted(&args[0], true)?.text)));
                }
                if scalars && args.len() == *n as usize {
                    let parts = args.iter().map(|a| Ok(self.promoted(a, true)?.text)).collect::<CResult<Vec<_>>>()?;
                    return Ok(P::atom(format!("{name}::new({})", parts.join(", "))));
                }
                let parts = args
                    .iter()
                    .map(|a| Ok(format!("&{}", self.expr(a)?.at(PREC_UNARY))))
                    .collect::<CResult<Vec<_>>>()?;
                Ok(P::atom(format!("{name}::gather(&[{}])", parts.join(", "))))
            }
            TypeExpr::Matrix(n, _) => {
                let parts = args.iter().map(|a| Ok(self.expr(a)?.text)).collect::<CResult<Vec<_>>>()?;
                Ok(P::atom(format!("Mat{n}::new([{}])", parts.join(", "))))
            }
            TypeExpr::Named(n) => {
                let decl = self
                    .module
                    .find_struct(n)
                    .ok_or_else(|| unsupported(loc, format!("constructor {n}"), "unknown record"))?;
                let fields = decl
                    .members
                    .iter()
                    .zip(args)
                    .map(|(m, a)| {
                        Ok(format!("{}: {}", ident(&m.name), self.promoted(a, m.ty == TypeExpr::FLOAT)?.text))
                    })
                    .collect::<CResult<Vec<_>>>()?;
                Ok(P::atom(format!("{} {{ {} }}", ident(n), fields.join(", "))))
            }
            other => Err(unsupported(loc, format!("constructor {other}"), "type has no constructor")),
        }
    }

    fn block(&mut self, body: &[Stmt]) -> CResult<()> {
        self.scopes.push(HashSet::new());
        for s in body {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn open(&mut self, header: impl AsRef<str>) {
        self.line(format!("{} {{", header.as_ref()));
        self.indent += 1;
    }

    fn close(&mut self) {
        self.indent -= 1;
        self.line("}");
    }

    /// Declarations, assignments and expressions as a single statement line.
    fn simple(&mut self, s: &Stmt) -> CResult<String> {
        Ok(match &s.kind {
            StmtKind::VarDecl { name, ty: t, init } => {
                let value = match init {
                    Some(e) => self.expr(e)?.text,
                    None => default_value(t)?,
                };
                self.declare_local(name);
                format!("let mut {}: {} = {value};", ident(name), rust_type(t)?)
            }
            StmtKind::Assign { target, op, value } => self.assign(target, *op, value)?,
            StmtKind::Expr(e) => format!("{};", self.expr(e)?.text),
            _ => {
                return Err(unsupported(
                    &s.location,
                    "statement",
                    "only declarations, assignments and expressions may appear in a for header",
                ))
            }
        })
    }

    fn assign(&mut self, target: &Expr, op: AssignOp, value: &Expr) -> CResult<String> {
        let rhs = match op.binary() {
            Some(b) => {
                let mut e = Expr::binary(b, target.clone(), value.clone(), value.location.clone());
                e.ty = target.ty.clone();
                self.expr(&e)?
            }
            None => self.expr(value)?,
        };
        if let ExprKind::Swizzle { base, components } = &target.kind {
            if components.len() > 1 {
                let bs = self.expr(base)?;
                let idx: Vec<String> = swizzle_indices(components).iter().map(ToString::to_string).collect();
                return Ok(format!(
                    "{{ let value = {}; set_swizzle{}(&mut {}, [{}], value); }}",
                    rhs.text,
                    components.len(),
                    bs.postfix(),
                    idx.join(", ")
                ));
            }
        }
        Ok(format!("{} = {};", self.expr(target)?.text, rhs.text))
    }

    fn stmt(&mut self, s: &Stmt) -> CResult<()> {
        match &s.kind {
            StmtKind::If { cond, then, otherwise } => {
                let mut header = format!("if {}", self.expr(cond)?.text);
                let (mut then, mut otherwise) = (then, otherwise.as_ref());
                loop {
                    self.open(&header);
                    self.block(then)?;
                    self.indent -= 1;
                    match otherwise.map(Vec::as_slice) {
                        None => {
                            self.line("}");
                            break;
                        }
                        Some([Stmt { kind: StmtKind::If { cond, then: t2, otherwise: o2 }, .. }]) => {
                            header = format!("}} else if {}", self.expr(cond)?.text);
                            then = t2;
                            otherwise = o2.as_ref();
                        }
                        Some(o) => {
                            self.open("} else");
                            self.block(o)?;
                            self.close();
                            break;
                        }
                    }
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.labels += 1;
                let n = self.labels;
                self.open("");
                self.scopes.push(HashSet::new());
                if let Some(i) = init {
                    let l = self.simple(i)?;
                    self.line(l);
                }
                let c = match cond {
                    Some(c) => self.expr(c)?.text,
                    None => "true".to_string(),
                };
                self.open(format!("'l{n}: while {c}"));
                self.open(format!("'c{n}:"));
                self.loops.push(Loop::For(n));
                self.block(body)?;
                self.loops.pop();
                self.close();
                if let Some(st) = step {
                    let l = self.simple(st)?;
                    self.line(l);
                }
                self.close();
                self.scopes.pop();
                self.close();
            }
            StmtKind::While { cond, body } => {
                self.labels += 1;
                let n = self.labels;
                self.open(format!("'l{n}: while {}", self.expr(cond)?.text));
                self.loops.push(Loop::While(n));
                self.block(body)?;
                self.loops.pop();
                self.close();
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => {
                let t = self.expr(e)?.text;
                self.line(format!("return {t};"));
            }
            StmtKind::Break => match self.loops.last() {
                Some(Loop::While(n) | Loop::For(n)) => {
                    let n = *n;
                    self.line(format!("break 'l{n};"));
                }
                None => return Err(unsupported(&s.location, "break", "outside a loop")),
            },
            StmtKind::Continue => match self.loops.last() {
                Some(Loop::While(n)) => {
                    let n = *n;
                    self.line(format!("continue 'l{n};"));
                }
                Some(Loop::For(n)) => {
                    let n = *n;
                    self.line(format!("break 'c{n};"));
                }
                None => return Err(unsupported(&s.location, "continue", "outside a loop")),
            },
            StmtKind::Block(b) => {
                self.open("");
                self.block(b)?;
                self.close();
            }
            _ => {
                let l = self.simple(s)?;
                self.line(l);
            }
        }
        Ok(())
    }

    fn function(&mut self, f: &FunctionDecl, name: &str) -> CResult<()> {
        let mut params = Vec::new();
        let globals_used = self.function_takes_globals(f);
        if globals_used {
            params.push("g: &mut Globals".to_string());
        }
        if f.is_kernel() {
            params.push("ctx: &ComputeCtx".to_string());
        }
        for p in &f.params {
            if p.ty.is_array() && f.is_kernel() {
                if p.ty.array_dims().len() > 1 {
                    return Err(unsupported(
                        &f.location,
                        format!("multi-dimensional kernel parameter {}", p.name),
                        "kernel buffers hold one dimension",
                    ));
                }
                params.push(format!("{}: &mut [{}]", ident(&p.name), rust_type(p.ty.innermost())?));
            } else if p.ty.array_dims().contains(&None) {
                return Err(unsupported(
                    &f.location,
                    format!("unsized array parameter {}", p.name),
                    "only compute kernels may take unsized arrays",
                ));
            } else {
                params.push(format!("mut {}: {}", ident(&p.name), rust_type(&p.ty)?));
            }
        }
        let ret = if f.return_type.is_void() { String::new() } else { format!(" -> {}", rust_type(&f.return_type)?) };
        self.open(format!("pub fn {name}({}){ret}", params.join(", ")));
        self.scopes = vec![f.params.iter().map(|p| p.name.clone()).collect()];
        self.loops.clear();
        self.labels = 0;
        self.block(&f.body)?;
        self.close();
        Ok(())
    }

    fn function_takes_globals(&self, f: &FunctionDecl) -> bool {
        match f.stage {
            None => self.takes_globals.contains(&f.name),
            Some(_) => {
                let analysis = Analysis::new(self.module);
                analysis.globals_used(f).iter().any(|g| self.mutable_globals.contains(&g.name))
            }
        }
    }
}

fn emit(module: &ShaderModule) -> CResult<String> {
    if let Some(loc) = uses_texture(module) {
        return Err(unsupported(&loc, "texture sampling", "the Rust target has no texture support"));
    }
    if let Some(g) = module.globals.iter().find(|g| g.ty.innermost() == &TypeExpr::Sampler2D) {
        return Err(CodegenError::UnsupportedType { ty: g.ty.clone(), target: TargetLanguage::RustSrc });
    }
    let analysis = Analysis::new(module);
    let mutable_globals: BTreeSet<String> =
        module.globals.iter().filter(|g| g.qualifier != GlobalQualifier::Const).map(|g| g.name.clone()).collect();
    let takes_globals = module
        .functions
        .iter()
        .filter(|f| f.stage.is_none())
        .filter(|f| analysis.globals_used(f).iter().any(|g| mutable_globals.contains(&g.name)))
        .map(|f| f.name.clone())
        .collect();
    let mut e = Emitter {
        module,
        takes_globals,
        mutable_globals,
        out: String::new(),
        indent: 0,
        scopes: vec![HashSet::new()],
        loops: Vec::new(),
        labels: 0,
    };
    e.line(format!("// {}, generated by crosstl", module.name));
    e.blank();
    e.out.push_str(PRELUDE);

    for s in structs_in_dependency_order(module) {
        e.blank();
        let name = ident(&s.name);
        e.line("#[derive(Clone, Copy, Debug, PartialEq)]");
        e.open(format!("pub struct {name}"));
        for m in &s.members {
            if m.ty.array_dims().contains(&None) {
                return Err(unsupported(
                    &s.location,
                    format!("unsized member {}", m.name),
                    "records need a fixed size",
                ));
            }
            e.line(format!("pub {}: {},", ident(&m.name), rust_type(&m.ty)?));
        }
        e.close();
        e.blank();
        e.open(format!("impl Default for {name}"));
        e.open("fn default() -> Self");
        e.open(&name);
        for m in &s.members {
            e.line(format!("{}: {},", ident(&m.name), default_value(&m.ty)?));
        }
        e.close();
        e.close();
        e.close();
    }

    let consts: Vec<&GlobalVar> = module.globals.iter().filter(|g| g.qualifier == GlobalQualifier::Const).collect();
    if !consts.is_empty() {
        e.blank();
    }
    for g in consts {
        let value = match &g.init {
            Some(init) => e.expr(init)?.text,
            None => default_value(&g.ty)?,
        };
        e.line(format!("pub const {}: {} = {value};", ident(&g.name), rust_type(&g.ty)?));
    }

    let fields: Vec<&GlobalVar> = module.globals.iter().filter(|g| g.qualifier != GlobalQualifier::Const).collect();
    if !fields.is_empty() {
        e.blank();
        e.line("/// Module-level variables and uniforms.");
        e.line("#[derive(Clone, Debug, PartialEq)]");
        e.open("pub struct Globals");
        for g in &fields {
            e.line(format!("pub {}: {},", ident(&g.name), rust_type(&g.ty)?));
        }
        e.close();
        e.blank();
        e.open("impl Default for Globals");
        e.open("fn default() -> Self");
        e.open("Globals");
        for g in &fields {
            let value = match &g.init {
                Some(init) => e.expr(init)?.text,
                None => default_value(&g.ty)?,
            };
            e.line(format!("{}: {value},", ident(&g.name)));
        }
        e.close();
        e.close();
        e.close();
    }

    for f in &module.functions {
        let name = match f.stage {
            Some(Stage::Vertex) if f.name == "main" => "vertex_main".to_string(),
            Some(Stage::Fragment) if f.name == "main" => "fragment_main".to_string(),
            Some(Stage::Compute) if f.name == "main" => "compute_main".to_string(),
            _ => ident(&f.name),
        };
        e.blank();
        e.function(f, &name)?;
    }
    let mut out = e.out;
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}

impl Generator for RustGenerator {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::RustSrc
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        rust_type(ty)
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        let module = typed(module)?;
        Ok(vec![OutputUnit {
            suggested_filename: format!("{}{}", module.name, TargetLanguage::RustSrc.extension(None)),
            target: TargetLanguage::RustSrc,
            text: emit(&module)?,
        }])
    }

    fn degradations(&self) -> Vec<Degradation> {
        vec![Degradation { feature: Feature::Textures, note: "texture sampling is not supported".into() }]
    }
}
