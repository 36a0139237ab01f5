//! The CrossGL intermediate representation.
//!
//! Every frontend produces a [`ShaderModule`] and every backend consumes one.
//! Expressions carry an optional resolved type which the semantics pass fills
//! in; everything else is plain data.

mod dump;
mod equal;
mod validate;

pub use dump::dump_module;
pub use equal::{ast_equal, function_equal};
pub use validate::validate_program;

use std::fmt;
use std::sync::Arc;

/// Scalar element kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarKind {
    Int,
    Float,
    Bool,
    Void,
}

impl ScalarKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::Int => "int",
            ScalarKind::Float => "float",
            ScalarKind::Bool => "bool",
            ScalarKind::Void => "void",
        }
    }
}

/// The unified type language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Scalar(ScalarKind),
    /// Float vectors only; `dim` is 2, 3 or 4.
    Vector(ScalarKind, u8),
    /// Square matrices; rows == cols in 2..=4.
    Matrix(u8, u8),
    /// `None` size means an unsized (runtime-length) array.
    Array(Box<TypeExpr>, Option<u32>),
    Named(String),
    Sampler2D,
}

impl TypeExpr {
    pub const INT: TypeExpr = TypeExpr::Scalar(ScalarKind::Int);
    pub const FLOAT: TypeExpr = TypeExpr::Scalar(ScalarKind::Float);
    pub const BOOL: TypeExpr = TypeExpr::Scalar(ScalarKind::Bool);
    pub const VOID: TypeExpr = TypeExpr::Scalar(ScalarKind::Void);

    pub fn vec(dim: u8) -> TypeExpr {
        TypeExpr::Vector(ScalarKind::Float, dim)
    }

    pub fn mat(dim: u8) -> TypeExpr {
        TypeExpr::Matrix(dim, dim)
    }

    pub fn array(element: TypeExpr, size: Option<u32>) -> TypeExpr {
        TypeExpr::Array(Box::new(element), size)
    }

    pub fn named(name: impl Into<String>) -> TypeExpr {
        TypeExpr::Named(name.into())
    }

    pub fn is_void(&self) -> bool {
        matches!(self, TypeExpr::Scalar(ScalarKind::Void))
    }

    pub fn is_numeric_scalar(&self) -> bool {
        matches!(self, TypeExpr::Scalar(ScalarKind::Int | ScalarKind::Float))
    }

    pub fn is_array(&self) -> bool {
        matches!(self, TypeExpr::Array(..))
    }

    /// Number of float components for scalars and vectors.
    pub fn component_count(&self) -> Option<usize> {
        match self {
            TypeExpr::Scalar(ScalarKind::Int | ScalarKind::Float) => Some(1),
            TypeExpr::Vector(_, n) => Some(*n as usize),
            _ => None,
        }
    }

    /// Innermost element type of a (possibly nested) array.
    pub fn innermost(&self) -> &TypeExpr {
        match self {
            TypeExpr::Array(inner, _) => inner.innermost(),
            t => t,
        }
    }

    /// Array dimensions outermost first.
    pub fn array_dims(&self) -> Vec<Option<u32>> {
        let mut dims = Vec::new();
        let mut t = self;
        while let TypeExpr::Array(inner, size) = t {
            dims.push(*size);
            t = inner;
        }
        dims
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Scalar(k) => f.write_str(k.name()),
            TypeExpr::Vector(_, n) => write!(f, "vec{n}"),
            TypeExpr::Matrix(r, _) => write!(f, "mat{r}"),
            TypeExpr::Array(inner, Some(n)) => write!(f, "{inner}[{n}]"),
            TypeExpr::Array(inner, None) => write!(f, "{inner}[]"),
            TypeExpr::Named(n) => f.write_str(n),
            TypeExpr::Sampler2D => f.write_str("sampler2D"),
        }
    }
}

/// Position of a token or node in its source file (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceLocation {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
}

impl SourceLocation {
    pub fn new(file: impl Into<Arc<str>>, line: u32, column: u32) -> Self {
        Self { file: file.into(), line: line.max(1), column: column.max(1) }
    }

    /// A placeholder location for synthesized nodes.
    pub fn synthetic() -> Self {
        Self::new("<generated>", 1, 1)
    }

    fn sort_key(&self) -> (&str, u32, u32) {
        (&self.file, self.line, self.column)
    }
}

impl PartialOrd for SourceLocation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SourceLocation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrArg {
    Int(i64),
    Str(String),
}

/// An opaque `@name(args)` annotation. Backends pick out the ones they know.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub args: Vec<AttrArg>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, args: Vec<AttrArg>) -> Self {
        Self { name: name.into(), args }
    }

    pub fn int_args(&self) -> Vec<i64> {
        self.args
            .iter()
            .filter_map(|a| match a {
                AttrArg::Int(v) => Some(*v),
                AttrArg::Str(_) => None,
            })
            .collect()
    }
}

pub fn find_attribute<'a>(attrs: &'a [Attribute], name: &str) -> Option<&'a Attribute> {
    attrs.iter().find(|a| a.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructMember {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDecl {
    pub name: String,
    pub members: Vec<StructMember>,
    pub attributes: Vec<Attribute>,
    pub location: SourceLocation,
}

impl StructDecl {
    pub fn member(&self, name: &str) -> Option<(usize, &StructMember)> {
        self.members.iter().enumerate().find(|(_, m)| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Vertex,
    Fragment,
    Compute,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Vertex, Stage::Fragment, Stage::Compute];

    pub fn keyword(self) -> &'static str {
        match self {
            Stage::Vertex => "vertex",
            Stage::Fragment => "fragment",
            Stage::Compute => "compute",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub attributes: Vec<Attribute>,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: TypeExpr) -> Self {
        Self { name: name.into(), ty, attributes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: TypeExpr,
    pub body: Vec<Stmt>,
    pub stage: Option<Stage>,
    pub attributes: Vec<Attribute>,
    pub location: SourceLocation,
}

impl FunctionDecl {
    /// A stage-tagged function named `main`.
    pub fn is_entry_point(&self) -> bool {
        self.stage.is_some() && self.name == "main"
    }

    /// Compute-stage functions are kernels regardless of their name.
    pub fn is_kernel(&self) -> bool {
        self.stage == Some(Stage::Compute)
    }

    /// Workgroup size from `@workgroup_size(x, y, z)`, defaulting to (64, 1, 1).
    pub fn workgroup_size(&self) -> [u32; 3] {
        let mut size = [64, 1, 1];
        if let Some(attr) = find_attribute(&self.attributes, "workgroup_size") {
            size = [1, 1, 1];
            for (slot, v) in size.iter_mut().zip(attr.int_args()) {
                *slot = v.clamp(1, u32::MAX as i64) as u32;
            }
        }
        size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlobalQualifier {
    Uniform,
    Const,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalVar {
    pub name: String,
    pub ty: TypeExpr,
    pub qualifier: GlobalQualifier,
    pub init: Option<Expr>,
    pub location: SourceLocation,
}

/// The root IR value.
#[derive(Debug, Clone, PartialEq)]
pub struct ShaderModule {
    pub name: String,
    pub structs: Vec<StructDecl>,
    pub globals: Vec<GlobalVar>,
    pub functions: Vec<FunctionDecl>,
}

impl ShaderModule {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), structs: Vec::new(), globals: Vec::new(), functions: Vec::new() }
    }

    pub fn find_struct(&self, name: &str) -> Option<&StructDecl> {
        self.structs.iter().find(|s| s.name == name)
    }

    pub fn find_function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn find_global(&self, name: &str) -> Option<&GlobalVar> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn entry_point(&self, stage: Stage) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.stage == Some(stage) && f.name == "main")
    }

    pub fn has_stage(&self, stage: Stage) -> bool {
        self.functions.iter().any(|f| f.stage == Some(stage))
    }

    pub fn kernels(&self) -> impl Iterator<Item = &FunctionDecl> {
        self.functions.iter().filter(|f| f.is_kernel())
    }

    /// The identity transformation; no target-agnostic optimizations are applied.
    pub fn optimize(self) -> ShaderModule {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinaryOp> {
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Rem,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "&&" => BinaryOp::And,
            "||" => BinaryOp::Or,
            _ => return None,
        })
    }

    /// Binding strength, higher binds tighter. Shared by every C-family target.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 2,
            BinaryOp::And => 3,
            BinaryOp::Eq | BinaryOp::Ne => 4,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 5,
            BinaryOp::Add | BinaryOp::Sub => 6,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 7,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<AssignOp> {
        Some(match s {
            "=" => AssignOp::Assign,
            "+=" => AssignOp::Add,
            "-=" => AssignOp::Sub,
            "*=" => AssignOp::Mul,
            "/=" => AssignOp::Div,
            _ => return None,
        })
    }

    /// The arithmetic operator a compound assignment applies.
    pub fn binary(self) -> Option<BinaryOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::Add => Some(BinaryOp::Add),
            AssignOp::Sub => Some(BinaryOp::Sub),
            AssignOp::Mul => Some(BinaryOp::Mul),
            AssignOp::Div => Some(BinaryOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    IntLit(i64),
    FloatLit(f64),
    BoolLit(bool),
    Var(String),
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    Construct {
        ty: TypeExpr,
        args: Vec<Expr>,
    },
    /// `.name` before semantics has decided between a record member and a swizzle.
    MemberOrSwizzle {
        base: Box<Expr>,
        name: String,
    },
    Member {
        base: Box<Expr>,
        member: String,
    },
    Swizzle {
        base: Box<Expr>,
        components: String,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub location: SourceLocation,
    /// Filled in by the typechecker.
    pub ty: Option<TypeExpr>,
}

impl Expr {
    pub fn new(kind: ExprKind, location: SourceLocation) -> Self {
        Self { kind, location, ty: None }
    }

    pub fn int(v: i64, loc: SourceLocation) -> Self {
        Self::new(ExprKind::IntLit(v), loc)
    }

    pub fn float(v: f64, loc: SourceLocation) -> Self {
        Self::new(ExprKind::FloatLit(v), loc)
    }

    pub fn var(name: impl Into<String>, loc: SourceLocation) -> Self {
        Self::new(ExprKind::Var(name.into()), loc)
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr, loc: SourceLocation) -> Self {
        Self::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc)
    }

    pub fn call(callee: impl Into<String>, args: Vec<Expr>, loc: SourceLocation) -> Self {
        Self::new(ExprKind::Call { callee: callee.into(), args }, loc)
    }

    pub fn construct(ty: TypeExpr, args: Vec<Expr>, loc: SourceLocation) -> Self {
        Self::new(ExprKind::Construct { ty, args }, loc)
    }

    pub fn field(base: Expr, name: impl Into<String>, loc: SourceLocation) -> Self {
        Self::new(ExprKind::MemberOrSwizzle { base: Box::new(base), name: name.into() }, loc)
    }

    pub fn index(base: Expr, index: Expr, loc: SourceLocation) -> Self {
        Self::new(ExprKind::Index { base: Box::new(base), index: Box::new(index) }, loc)
    }

    /// Root variable of an lvalue-shaped access chain.
    pub fn root_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(n) => Some(n),
            ExprKind::Member { base, .. }
            | ExprKind::Swizzle { base, .. }
            | ExprKind::MemberOrSwizzle { base, .. }
            | ExprKind::Index { base, .. } => base.root_var(),
            _ => None,
        }
    }

    /// Name of the field for any of the three field-access node kinds.
    pub fn field_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Member { member, .. } => Some(member),
            ExprKind::Swizzle { components, .. } => Some(components),
            ExprKind::MemberOrSwizzle { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e.kind, ExprKind::Call { .. }) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::IntLit(_) | ExprKind::FloatLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => {}
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            ExprKind::Unary { operand, .. } => operand.visit(f),
            ExprKind::Call { args, .. } | ExprKind::Construct { args, .. } => {
                for a in args {
                    a.visit(f);
                }
            }
            ExprKind::MemberOrSwizzle { base, .. } | ExprKind::Member { base, .. } | ExprKind::Swizzle { base, .. } => {
                base.visit(f)
            }
            ExprKind::Index { base, index } => {
                base.visit(f);
                index.visit(f);
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                cond.visit(f);
                then.visit(f);
                otherwise.visit(f);
            }
        }
    }

    /// Post-order mutable traversal: children are rewritten before their parent.
    pub fn rewrite(&mut self, f: &mut impl FnMut(&mut Expr)) {
        match &mut self.kind {
            ExprKind::IntLit(_) | ExprKind::FloatLit(_) | ExprKind::BoolLit(_) | ExprKind::Var(_) => {}
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.rewrite(f);
                rhs.rewrite(f);
            }
            ExprKind::Unary { operand, .. } => operand.rewrite(f),
            ExprKind::Call { args, .. } | ExprKind::Construct { args, .. } => {
                for a in args {
                    a.rewrite(f);
                }
            }
            ExprKind::MemberOrSwizzle { base, .. } | ExprKind::Member { base, .. } | ExprKind::Swizzle { base, .. } => {
                base.rewrite(f)
            }
            ExprKind::Index { base, index } => {
                base.rewrite(f);
                index.rewrite(f);
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                cond.rewrite(f);
                then.rewrite(f);
                otherwise.rewrite(f);
            }
        }
        f(self);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    VarDecl { name: String, ty: TypeExpr, init: Option<Expr> },
    Assign { target: Expr, op: AssignOp, value: Expr },
    If { cond: Expr, then: Vec<Stmt>, otherwise: Option<Vec<Stmt>> },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Box<Stmt>>, body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Break,
    Continue,
    Expr(Expr),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub location: SourceLocation,
}

impl Stmt {
    pub fn new(kind: StmtKind, location: SourceLocation) -> Self {
        Self { kind, location }
    }

    /// Visits every expression in this statement and its children.
    pub fn visit_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match &self.kind {
            StmtKind::VarDecl { init, .. } => {
                if let Some(e) = init {
                    e.visit(f);
                }
            }
            StmtKind::Assign { target, value, .. } => {
                target.visit(f);
                value.visit(f);
            }
            StmtKind::If { cond, then, otherwise } => {
                cond.visit(f);
                visit_block_exprs(then, f);
                if let Some(o) = otherwise {
                    visit_block_exprs(o, f);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(s) = init {
                    s.visit_exprs(f);
                }
                if let Some(c) = cond {
                    c.visit(f);
                }
                if let Some(s) = step {
                    s.visit_exprs(f);
                }
                visit_block_exprs(body, f);
            }
            StmtKind::While { cond, body } => {
                cond.visit(f);
                visit_block_exprs(body, f);
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.visit(f);
                }
            }
            StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Expr(e) => e.visit(f),
            StmtKind::Block(b) => visit_block_exprs(b, f),
        }
    }

    /// Visits this statement and all nested statements, pre-order.
    pub fn visit_stmts<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If { then, otherwise, .. } => {
                then.iter().for_each(|s| s.visit_stmts(f));
                if let Some(o) = otherwise {
                    o.iter().for_each(|s| s.visit_stmts(f));
                }
            }
            StmtKind::For { init, step, body, .. } => {
                if let Some(s) = init {
                    s.visit_stmts(f);
                }
                if let Some(s) = step {
                    s.visit_stmts(f);
                }
                body.iter().for_each(|s| s.visit_stmts(f));
            }
            StmtKind::While { body, .. } | StmtKind::Block(body) => body.iter().for_each(|s| s.visit_stmts(f)),
            _ => {}
        }
    }
}

impl Stmt {
    /// Rewrites every expression in this statement and its children.
    pub fn rewrite_exprs(&mut self, f: &mut impl FnMut(&mut Expr)) {
        self.rewrite_stmts(&mut |s| match &mut s.kind {
            StmtKind::Assign { target, value, .. } => {
                target.rewrite(f);
                value.rewrite(f);
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => cond.rewrite(f),
            StmtKind::VarDecl { init: Some(e), .. }
            | StmtKind::For { cond: Some(e), .. }
            | StmtKind::Return(Some(e))
            | StmtKind::Expr(e) => e.rewrite(f),
            _ => {}
        });
    }

    /// Post-order mutable traversal over this statement and all nested ones.
    pub fn rewrite_stmts(&mut self, f: &mut impl FnMut(&mut Stmt)) {
        match &mut self.kind {
            StmtKind::If { then, otherwise, .. } => {
                then.iter_mut().for_each(|s| s.rewrite_stmts(f));
                if let Some(o) = otherwise {
                    o.iter_mut().for_each(|s| s.rewrite_stmts(f));
                }
            }
            StmtKind::For { init, step, body, .. } => {
                if let Some(s) = init {
                    s.rewrite_stmts(f);
                }
                if let Some(s) = step {
                    s.rewrite_stmts(f);
                }
                body.iter_mut().for_each(|s| s.rewrite_stmts(f));
            }
            StmtKind::While { body, .. } | StmtKind::Block(body) => body.iter_mut().for_each(|s| s.rewrite_stmts(f)),
            _ => {}
        }
        f(self);
    }
}

pub fn visit_block_exprs<'a>(block: &'a [Stmt], f: &mut impl FnMut(&'a Expr)) {
    for s in block {
        s.visit_exprs(f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A located message; printed as `file:line:col: severity: message`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: SourceLocation,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: SourceLocation, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, location, message: message.into() }
    }

    pub fn warning(location: SourceLocation, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, location, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.location, self.severity, self.message)
    }
}

/// Stable ordering used everywhere diagnostics are reported.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.location.cmp(&b.location));
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
