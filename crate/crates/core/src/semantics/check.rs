use std::collections::HashMap;

use super::builtins::{is_compute_intrinsic, lookup_builtin};
use super::scope::{SymbolKind, SymbolTable};
use super::types::*;
use crate::ir::*;

struct FnSig {
    params: Vec<TypeExpr>,
    ret: TypeExpr,
    stage: Option<Stage>,
}

/// Typechecks every function body and global initializer, annotating each
/// expression with its type. Field accesses are specialized into member
/// accesses or swizzles and calls naming a struct become struct
/// constructors. Failures are reported as diagnostics, sorted by location.
pub fn typecheck_module(module: &mut ShaderModule) -> Vec<Diagnostic> {
    let structs: HashMap<String, StructDecl> = module.structs.iter().map(|s| (s.name.clone(), s.clone())).collect();
    let sigs: HashMap<String, FnSig> = module
        .functions
        .iter()
        .map(|f| {
            let sig = FnSig {
                params: f.params.iter().map(|p| p.ty.clone()).collect(),
                ret: f.return_type.clone(),
                stage: f.stage,
            };
            (f.name.clone(), sig)
        })
        .collect();
    let mut globals = SymbolTable::new();
    let mut qualifiers = HashMap::new();
    for g in &module.globals {
        globals.insert(g.name.clone(), (g.ty.clone(), SymbolKind::Global));
        qualifiers.insert(g.name.clone(), g.qualifier);
    }
    let mut cx = Checker {
        structs: &structs,
        sigs: &sigs,
        qualifiers: &qualifiers,
        scopes: globals,
        diags: Vec::new(),
        current: None,
        loop_depth: 0,
    };

    for g in &mut module.globals {
        if let Some(init) = &mut g.init {
            if let Some(t) = cx.expr(init) {
                if t != g.ty {
                    cx.error(&init.location, format!("cannot assign {t} to {}", g.ty));
                }
            }
        }
        if g.ty.innermost() == &TypeExpr::Sampler2D && g.qualifier != GlobalQualifier::Uniform {
            cx.error(&g.location, format!("sampler2D global {} must be a uniform", g.name));
        }
    }
    for f in &mut module.functions {
        cx.function(f);
    }
    let mut diags = cx.diags;
    sort_diagnostics(&mut diags);
    diags
}

struct Checker<'a> {
    structs: &'a HashMap<String, StructDecl>,
    sigs: &'a HashMap<String, FnSig>,
    qualifiers: &'a HashMap<String, GlobalQualifier>,
    scopes: SymbolTable<(TypeExpr, SymbolKind)>,
    diags: Vec<Diagnostic>,
    current: Option<(String, TypeExpr, Option<Stage>)>,
    loop_depth: usize,
}

fn block_returns(stmts: &[Stmt]) -> bool {
    stmts.iter().any(stmt_returns)
}

fn stmt_returns(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If { then, otherwise: Some(o), .. } => block_returns(then) && block_returns(o),
        StmtKind::Block(b) => block_returns(b),
        _ => false,
    }
}

impl Checker<'_> {
    fn error(&mut self, loc: &SourceLocation, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(loc.clone(), msg));
    }

    fn function(&mut self, f: &mut FunctionDecl) {
        self.check_entry_signature(f);
        self.current = Some((f.name.clone(), f.return_type.clone(), f.stage));
        self.loop_depth = 0;
        self.scopes.push();
        for p in &f.params {
            self.scopes.insert(p.name.clone(), (p.ty.clone(), SymbolKind::Param));
        }
        self.block_in_place(&mut f.body);
        self.scopes.pop();
        if !f.return_type.is_void() && !block_returns(&f.body) {
            let loc = f.location.clone();
            self.error(&loc, format!("not every path through {} returns a value", f.name));
        }
        self.current = None;
    }

    fn check_entry_signature(&mut self, f: &FunctionDecl) {
        let loc = &f.location;
        match f.stage {
            Some(Stage::Vertex) => {
                if f.params.len() > 1 || f.params.iter().any(|p| !matches!(p.ty, TypeExpr::Named(_))) {
                    self.error(loc, "vertex entry takes at most one record parameter");
                }
                if !matches!(f.return_type, TypeExpr::Named(_)) {
                    self.error(loc, "vertex entry must return a record");
                }
            }
            Some(Stage::Fragment) => {
                if f.params.len() > 1
                    || f.params.iter().any(|p| !matches!(p.ty, TypeExpr::Named(_) | TypeExpr::Vector(..)))
                {
                    self.error(loc, "fragment entry takes at most one record or vector parameter");
                }
                if !matches!(f.return_type, TypeExpr::Named(_)) && f.return_type != TypeExpr::vec(4) {
                    self.error(loc, "fragment entry must return vec4 or a record");
                }
            }
            Some(Stage::Compute) => {
                if !f.return_type.is_void() {
                    self.error(loc, format!("compute function {} must return void", f.name));
                }
                for p in &f.params {
                    let ok = matches!(p.ty.innermost(), TypeExpr::Scalar(_) | TypeExpr::Vector(..))
                        || (p.ty.is_array() && matches!(p.ty.innermost(), TypeExpr::Named(_)));
                    if !ok {
                        self.error(loc, format!("compute parameter {} must be a scalar, vector or array", p.name));
                    }
                }
            }
            None => {}
        }
    }

    /// Checks statements in the current scope.
    fn block_in_place(&mut self, stmts: &mut [Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn scoped_block(&mut self, stmts: &mut [Stmt]) {
        self.scopes.push();
        self.block_in_place(stmts);
        self.scopes.pop();
    }

    fn expect_bool(&mut self, e: &mut Expr, what: &str) {
        if let Some(t) = self.expr(e) {
            if t != TypeExpr::BOOL {
                self.error(&e.location, format!("{what} must be bool, found {t}"));
            }
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let loc = s.location.clone();
        match &mut s.kind {
            StmtKind::VarDecl { name, ty, init } => {
                if ty.innermost() == &TypeExpr::Sampler2D {
                    self.error(&loc, format!("local variable {name} cannot have sampler type"));
                }
                if let Some(e) = init {
                    if let Some(t) = self.expr(e) {
                        if t != *ty {
                            self.error(&e.location, format!("cannot assign {t} to {ty}"));
                        }
                    }
                }
                if !self.scopes.insert(name.clone(), (ty.clone(), SymbolKind::Local)) {
                    self.error(&loc, format!("{name} is already declared in this scope"));
                }
            }
            StmtKind::Assign { target, op, value } => {
                let vt = self.expr(value);
                let tt = self.lvalue(target);
                if let (Some(tt), Some(vt)) = (tt, vt) {
                    match op.binary() {
                        None => {
                            if tt != vt {
                                self.error(&value.location, format!("cannot assign {vt} to {tt}"));
                            }
                        }
                        Some(bop) => match unify_types(&tt, &vt, bop) {
                            Ok(r) if r == tt => {}
                            Ok(r) => self.error(&loc, format!("{tt} {} {vt} yields {r}, not {tt}", op.symbol())),
                            Err(e) => self.error(&loc, e.to_string()),
                        },
                    }
                }
            }
            StmtKind::If { cond, then, otherwise } => {
                self.expect_bool(cond, "if condition");
                self.scoped_block(then);
                if let Some(o) = otherwise {
                    self.scoped_block(o);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push();
                if let Some(i) = init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.expect_bool(c, "for condition");
                }
                if let Some(st) = step {
                    self.stmt(st);
                }
                self.loop_depth += 1;
                self.scoped_block(body);
                self.loop_depth -= 1;
                self.scopes.pop();
            }
            StmtKind::While { cond, body } => {
                self.expect_bool(cond, "while condition");
                self.loop_depth += 1;
                self.scoped_block(body);
                self.loop_depth -= 1;
            }
            StmtKind::Return(value) => {
                let ret = self.current.as_ref().map(|c| c.1.clone()).unwrap_or(TypeExpr::VOID);
                match value {
                    None if !ret.is_void() => self.error(&loc, "missing return value"),
                    None => {}
                    Some(e) => {
                        if let Some(t) = self.expr(e) {
                            if ret.is_void() {
                                self.error(&e.location, "void function cannot return a value");
                            } else if t != ret {
                                self.error(&e.location, format!("cannot return {t} from function returning {ret}"));
                            }
                        }
                    }
                }
            }
            StmtKind::Break | StmtKind::Continue => {
                if self.loop_depth == 0 {
                    let what = if matches!(s.kind, StmtKind::Break) { "break" } else { "continue" };
                    self.error(&loc, format!("{what} outside of a loop"));
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::Block(b) => self.scoped_block(b),
        }
    }

    /// Typechecks an assignment target and checks it is writable.
    fn lvalue(&mut self, target: &mut Expr) -> Option<TypeExpr> {
        let t = self.expr(target)?;
        let mut ok = true;
        let mut e: &Expr = target;
        loop {
            match &e.kind {
                ExprKind::Var(name) => {
                    if let Some((_, SymbolKind::Global)) = self.scopes.lookup(name) {
                        if self.scopes.is_module_level(name) {
                            match self.qualifiers.get(name) {
                                Some(GlobalQualifier::Uniform) => {
                                    let loc = target.location.clone();
                                    self.error(&loc, format!("cannot assign to uniform {name}"));
                                    return None;
                                }
                                Some(GlobalQualifier::Const) => {
                                    let loc = target.location.clone();
                                    self.error(&loc, format!("cannot assign to const {name}"));
                                    return None;
                                }
                                _ => {}
                            }
                        }
                    }
                    break;
                }
                ExprKind::Member { base, .. } | ExprKind::Index { base, .. } => e = base,
                ExprKind::Swizzle { base, components } => {
                    let bt = base.ty.clone().unwrap_or(TypeExpr::VOID);
                    if let Err(err) = resolve_swizzle(&bt, components, true) {
                        let loc = target.location.clone();
                        self.error(&loc, err.to_string());
                        return None;
                    }
                    e = base;
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            let loc = target.location.clone();
            self.error(&loc, "assignment target must be a variable, member, swizzle or index chain");
            return None;
        }
        Some(t)
    }

    fn expr(&mut self, e: &mut Expr) -> Option<TypeExpr> {
        let t = self.expr_inner(e);
        e.ty = t.clone();
        t
    }

    fn exprs(&mut self, args: &mut [Expr]) -> Option<Vec<TypeExpr>> {
        let mut out = Vec::new();
        let mut ok = true;
        for a in args {
            match self.expr(a) {
                Some(t) => out.push(t),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn expr_inner(&mut self, e: &mut Expr) -> Option<TypeExpr> {
        let loc = e.location.clone();
        // Calls naming a struct are struct constructors.
        if let ExprKind::Call { callee, args } = &mut e.kind {
            if self.structs.contains_key(callee.as_str()) && !self.sigs.contains_key(callee.as_str()) {
                let ty = TypeExpr::Named(callee.clone());
                let args = std::mem::take(args);
                e.kind = ExprKind::Construct { ty, args };
            }
        }
        let mut prechecked = None;
        if let ExprKind::MemberOrSwizzle { base, name } = &mut e.kind {
            let bt = self.expr(base)?;
            prechecked = Some(bt.clone());
            let base = std::mem::replace(base, Box::new(Expr::int(0, loc.clone())));
            let name = std::mem::take(name);
            e.kind = match bt {
                TypeExpr::Vector(..) => ExprKind::Swizzle { base, components: name },
                _ => ExprKind::Member { base, member: name },
            };
        }
        match &mut e.kind {
            ExprKind::IntLit(v) => {
                if *v > i32::MAX as i64 + 1 {
                    self.error(&loc, format!("integer literal {v} does not fit in 32 bits"));
                }
                Some(TypeExpr::INT)
            }
            ExprKind::FloatLit(_) => Some(TypeExpr::FLOAT),
            ExprKind::BoolLit(_) => Some(TypeExpr::BOOL),
            ExprKind::Var(name) => match self.scopes.lookup(name) {
                Some((t, _)) => Some(t.clone()),
                None => {
                    let msg = if self.sigs.contains_key(name.as_str()) {
                        format!("function {name} used as a value")
                    } else {
                        format!("undeclared identifier {name}")
                    };
                    self.error(&loc, msg);
                    None
                }
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, r) = (self.expr(lhs), self.expr(rhs));
                let (l, r) = (l?, r?);
                match unify_types(&l, &r, *op) {
                    Ok(t) => Some(t),
                    Err(err) => {
                        self.error(&loc, err.to_string());
                        None
                    }
                }
            }
            ExprKind::Unary { op, operand } => {
                let t = self.expr(operand)?;
                let ok = match op {
                    UnaryOp::Neg => t.is_numeric_scalar() || matches!(t, TypeExpr::Vector(..) | TypeExpr::Matrix(..)),
                    UnaryOp::Not => t == TypeExpr::BOOL,
                };
                if ok {
                    Some(t)
                } else {
                    self.error(&loc, format!("operator {} cannot be applied to {t}", op.symbol()));
                    None
                }
            }
            ExprKind::Call { callee, args } => {
                let callee = callee.clone();
                self.call(&callee, args, &loc)
            }
            ExprKind::Construct { ty, args } => {
                let ty = ty.clone();
                let arg_types = self.exprs(args)?;
                let result = match &ty {
                    TypeExpr::Named(n) => match self.structs.get(n.as_str()) {
                        Some(decl) => check_struct_constructor(decl, &arg_types),
                        None => {
                            self.error(&loc, format!("unresolved type {n}"));
                            return None;
                        }
                    },
                    _ => check_constructor(&ty, &arg_types),
                };
                match result {
                    Ok(t) => Some(t),
                    Err(err) => {
                        self.error(&loc, err.to_string());
                        None
                    }
                }
            }
            ExprKind::Member { base, member } => {
                let bt = match prechecked {
                    Some(t) => t,
                    None => self.expr(base)?,
                };
                match &bt {
                    TypeExpr::Named(n) => {
                        let found =
                            self.structs.get(n.as_str()).and_then(|s| s.member(member)).map(|(_, m)| m.ty.clone());
                        if found.is_none() {
                            self.error(&loc, format!("struct {n} has no member {member}"));
                        }
                        found
                    }
                    other => {
                        self.error(&loc, format!("{other} has no member {member}"));
                        None
                    }
                }
            }
            ExprKind::Swizzle { base, components } => {
                let bt = match prechecked {
                    Some(t) => t,
                    None => self.expr(base)?,
                };
                match resolve_swizzle(&bt, components, false) {
                    Ok(t) => Some(t),
                    Err(err) => {
                        self.error(&loc, err.to_string());
                        None
                    }
                }
            }
            ExprKind::MemberOrSwizzle { .. } => unreachable!("specialized above"),
            ExprKind::Index { base, index } => {
                let (bt, it) = (self.expr(base), self.expr(index));
                let (bt, it) = (bt?, it?);
                if it != TypeExpr::INT {
                    self.error(&loc, format!("index must be int, found {it}"));
                    return None;
                }
                match bt {
                    TypeExpr::Array(inner, _) => Some(*inner),
                    TypeExpr::Matrix(n, _) => Some(TypeExpr::vec(n)),
                    TypeExpr::Vector(..) => {
                        self.error(&loc, "vectors cannot be indexed; use a swizzle");
                        None
                    }
                    other => {
                        self.error(&loc, format!("{other} cannot be indexed"));
                        None
                    }
                }
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                self.expect_bool(cond, "ternary condition");
                let (a, b) = (self.expr(then), self.expr(otherwise));
                let (a, b) = (a?, b?);
                if a == b {
                    Some(a)
                } else if a.is_numeric_scalar() && b.is_numeric_scalar() {
                    Some(TypeExpr::FLOAT)
                } else {
                    self.error(&loc, format!("ternary branches differ: {a} and {b}"));
                    None
                }
            }
        }
    }

    fn call(&mut self, callee: &str, args: &mut [Expr], loc: &SourceLocation) -> Option<TypeExpr> {
        if is_compute_intrinsic(callee) {
            let stage = self.current.as_ref().and_then(|c| c.2);
            if stage != Some(Stage::Compute) {
                self.error(loc, format!("{callee} is only available in compute-stage functions"));
            }
            let axis_ok = matches!(args, [a] if matches!(a.kind, ExprKind::IntLit(0..=2)));
            self.exprs(args)?;
            if !axis_ok {
                self.error(loc, format!("{callee} takes one literal axis 0, 1 or 2"));
                return None;
            }
            return Some(TypeExpr::INT);
        }
        let arg_types = self.exprs(args)?;
        if let Some(sig) = self.sigs.get(callee) {
            if let Some(stage) = sig.stage {
                self.error(loc, format!("cannot call {stage}-stage function {callee}"));
                return None;
            }
            if sig.params != arg_types {
                let want: Vec<String> = sig.params.iter().map(ToString::to_string).collect();
                let got: Vec<String> = arg_types.iter().map(ToString::to_string).collect();
                self.error(loc, format!("{callee} expects ({}), found ({})", want.join(", "), got.join(", ")));
                return None;
            }
            return Some(sig.ret.clone());
        }
        if let Some(b) = lookup_builtin(callee) {
            return match b.resolve(&arg_types) {
                Ok(t) => Some(t),
                Err(msg) => {
                    self.error(loc, msg);
                    None
                }
            };
        }
        self.error(loc, format!("undeclared function {callee}"));
        None
    }
}
