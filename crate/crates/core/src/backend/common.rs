use std::collections::{BTreeSet, HashSet};

use super::{CodegenError, TargetLanguage};
use crate::ir::*;
use crate::semantics::{lookup_builtin, swizzle_index};

pub(crate) type CResult<T> = Result<T, CodegenError>;

pub(crate) const PREC_TERNARY: u8 = 1;
pub(crate) const PREC_UNARY: u8 = 8;
pub(crate) const PREC_POSTFIX: u8 = 9;
pub(crate) const PREC_ATOM: u8 = 10;

/// Printed expression text with the precedence of its outermost operator.
#[derive(Debug, Clone)]
pub(crate) struct P {
    pub text: String,
    pub prec: u8,
}

impl P {
    pub fn atom(text: impl Into<String>) -> P {
        P { text: text.into(), prec: PREC_ATOM }
    }

    pub fn new(text: impl Into<String>, prec: u8) -> P {
        P { text: text.into(), prec }
    }

    /// Text parenthesized unless its precedence is at least `min`.
    pub fn at(&self, min: u8) -> String {
        if self.prec >= min {
            self.text.clone()
        } else {
            format!("({})", self.text)
        }
    }

    pub fn postfix(&self) -> String {
        self.at(PREC_POSTFIX)
    }
}

pub(crate) fn infix(op: BinaryOp, l: &P, r: &P) -> P {
    let prec = op.precedence();
    P::new(format!("{} {} {}", l.at(prec), op.symbol(), r.at(prec + 1)), prec)
}

pub(crate) fn unary(op: UnaryOp, operand: &P) -> P {
    let inner = operand.at(PREC_UNARY);
    let inner = if inner.starts_with('-') || inner.starts_with('!') { format!("({inner})") } else { inner };
    P::new(format!("{}{}", op.symbol(), inner), PREC_UNARY)
}

pub(crate) fn call_text(name: &str, args: &[P]) -> P {
    let args: Vec<&str> = args.iter().map(|a| a.text.as_str()).collect();
    P::atom(format!("{name}({})", args.join(", ")))
}

/// Shortest round-trip decimal with a forced decimal point.
pub(crate) fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return "0.0".to_string();
    }
    let s = format!("{v:?}");
    match s.find('e') {
        Some(i) if !s[..i].contains('.') => format!("{}.0{}", &s[..i], &s[i..]),
        _ => s,
    }
}

pub(crate) fn ty(e: &Expr) -> &TypeExpr {
    e.ty.as_ref().unwrap_or(&TypeExpr::VOID)
}

pub(crate) fn swizzle_indices(components: &str) -> Vec<usize> {
    components.chars().map(|c| swizzle_index(c).unwrap_or(0)).collect()
}

pub(crate) fn sanitize(name: &str, reserved: &[&str]) -> String {
    if reserved.contains(&name) {
        format!("{name}_")
    } else {
        name.to_string()
    }
}

/// Structs ordered so that every struct follows the structs it contains.
pub(crate) fn structs_in_dependency_order(module: &ShaderModule) -> Vec<&StructDecl> {
    let mut done: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    fn visit<'m>(s: &'m StructDecl, m: &'m ShaderModule, done: &mut HashSet<&'m str>, out: &mut Vec<&'m StructDecl>) {
        if !done.insert(&s.name) {
            return;
        }
        for member in &s.members {
            if let TypeExpr::Named(n) = member.ty.innermost() {
                if let Some(dep) = m.find_struct(n) {
                    visit(dep, m, done, out);
                }
            }
        }
        out.push(s);
    }
    for s in &module.structs {
        visit(s, module, &mut done, &mut out);
    }
    out
}

/// Names referenced by `f` that are not bound by its parameters or locals
/// at the point of use.
pub(crate) fn free_vars(f: &FunctionDecl) -> BTreeSet<String> {
    struct Walk {
        scopes: Vec<HashSet<String>>,
        free: BTreeSet<String>,
    }
    impl Walk {
        fn expr(&mut self, e: &Expr) {
            e.visit(&mut |x| {
                if let ExprKind::Var(n) = &x.kind {
                    if !self.scopes.iter().any(|s| s.contains(n)) {
                        self.free.insert(n.clone());
                    }
                }
            });
        }
        fn block(&mut self, b: &[Stmt]) {
            self.scopes.push(HashSet::new());
            for s in b {
                self.stmt(s);
            }
            self.scopes.pop();
        }
        fn stmt(&mut self, s: &Stmt) {
            match &s.kind {
                StmtKind::VarDecl { name, init, .. } => {
                    if let Some(e) = init {
                        self.expr(e);
                    }
                    self.scopes.last_mut().expect("scope").insert(name.clone());
                }
                StmtKind::Assign { target, value, .. } => {
                    self.expr(value);
                    self.expr(target);
                }
                StmtKind::If { cond, then, otherwise } => {
                    self.expr(cond);
                    self.block(then);
                    if let Some(o) = otherwise {
                        self.block(o);
                    }
                }
                StmtKind::For { init, cond, step, body } => {
                    self.scopes.push(HashSet::new());
                    if let Some(i) = init {
                        self.stmt(i);
                    }
                    if let Some(c) = cond {
                        self.expr(c);
                    }
                    if let Some(st) = step {
                        self.stmt(st);
                    }
                    self.block(body);
                    self.scopes.pop();
                }
                StmtKind::While { cond, body } => {
                    self.expr(cond);
                    self.block(body);
                }
                StmtKind::Return(Some(e)) | StmtKind::Expr(e) => self.expr(e),
                StmtKind::Block(b) => self.block(b),
                StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue => {}
            }
        }
    }
    let mut w = Walk { scopes: vec![f.params.iter().map(|p| p.name.clone()).collect()], free: BTreeSet::new() };
    w.block(&f.body);
    w.free
}

/// User functions called directly by `f`.
pub(crate) fn callees(module: &ShaderModule, f: &FunctionDecl) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    visit_block_exprs(&f.body, &mut |e| {
        if let ExprKind::Call { callee, .. } = &e.kind {
            if module.find_function(callee).is_some() {
                out.insert(callee.clone());
            }
        }
    });
    out
}

/// Call-graph facts shared by the generators. Functions are identified by
/// position because every stage entry is named `main`.
pub(crate) struct Analysis<'m> {
    pub module: &'m ShaderModule,
    /// Globals each function reads or writes, directly or through calls,
    /// in declaration order.
    uses: Vec<Vec<&'m GlobalVar>>,
    calls: Vec<Vec<usize>>,
}

/// Index of the callable (non-stage) function named `name`.
fn callable_index(module: &ShaderModule, name: &str) -> Option<usize> {
    module.functions.iter().position(|f| f.name == name && f.stage.is_none())
}

impl<'m> Analysis<'m> {
    pub fn new(module: &'m ShaderModule) -> Self {
        let global_names: Vec<&str> = module.globals.iter().map(|g| g.name.as_str()).collect();
        let mut sets: Vec<BTreeSet<String>> = module
            .functions
            .iter()
            .map(|f| free_vars(f).into_iter().filter(|n| global_names.contains(&n.as_str())).collect())
            .collect();
        let calls: Vec<Vec<usize>> = module
            .functions
            .iter()
            .map(|f| callees(module, f).iter().filter_map(|c| callable_index(module, c)).collect())
            .collect();
        loop {
            let mut changed = false;
            for i in 0..sets.len() {
                let add: Vec<String> = calls[i].iter().flat_map(|&c| sets[c].iter().cloned()).collect();
                for a in add {
                    changed |= sets[i].insert(a);
                }
            }
            if !changed {
                break;
            }
        }
        let uses = sets.iter().map(|set| module.globals.iter().filter(|g| set.contains(&g.name)).collect()).collect();
        Analysis { module, uses, calls }
    }

    fn index_of(&self, f: &FunctionDecl) -> Option<usize> {
        self.module.functions.iter().position(|g| std::ptr::eq(g, f))
    }

    pub fn globals_used(&self, f: &FunctionDecl) -> Vec<&'m GlobalVar> {
        self.index_of(f).map(|i| self.uses[i].clone()).unwrap_or_default()
    }

    /// `roots` plus every function they reach, in module order.
    pub fn reachable(&self, roots: &[&FunctionDecl]) -> Vec<&'m FunctionDecl> {
        let mut seen = vec![false; self.module.functions.len()];
        let mut stack: Vec<usize> = roots.iter().filter_map(|f| self.index_of(f)).collect();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            stack.extend(self.calls[i].iter().copied());
        }
        self.module.functions.iter().enumerate().filter(|(i, _)| seen[*i]).map(|(_, f)| f).collect()
    }

    /// Globals used by any of `functions`, in declaration order.
    pub fn globals_used_by_all(&self, functions: &[&FunctionDecl]) -> Vec<&'m GlobalVar> {
        let mut names = BTreeSet::new();
        for f in functions {
            names.extend(self.globals_used(f).into_iter().map(|g| g.name.as_str()));
        }
        self.module.globals.iter().filter(|g| names.contains(g.name.as_str())).collect()
    }
}

/// Structs built with constructor syntax somewhere in the module, in first-use order.
pub(crate) fn constructed_structs(module: &ShaderModule) -> Vec<String> {
    let mut names = Vec::new();
    let mut note = |e: &Expr| {
        if let ExprKind::Construct { ty: TypeExpr::Named(n), .. } = &e.kind {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    };
    for g in &module.globals {
        if let Some(e) = &g.init {
            e.visit(&mut note);
        }
    }
    for f in &module.functions {
        visit_block_exprs(&f.body, &mut note);
    }
    names
}

/// Variables written by assignments anywhere in `body`.
pub(crate) fn assigned_roots(body: &[Stmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in body {
        s.visit_stmts(&mut |st| {
            if let StmtKind::Assign { target, .. } = &st.kind {
                if let Some(r) = target.root_var() {
                    out.insert(r.to_string());
                }
            }
        });
    }
    out
}

pub(crate) fn is_builtin_call(module: &ShaderModule, callee: &str) -> bool {
    module.find_function(callee).is_none() && lookup_builtin(callee).is_some()
}

pub(crate) fn uses_texture(module: &ShaderModule) -> Option<SourceLocation> {
    let mut found = None;
    for f in &module.functions {
        visit_block_exprs(&f.body, &mut |e| {
            if let ExprKind::Call { callee, .. } = &e.kind {
                if callee == "texture" && found.is_none() && is_builtin_call(module, callee) {
                    found = Some(e.location.clone());
                }
            }
        });
    }
    found
}

/// Hooks that specialize [`CWriter`] for one C-family target.
pub(crate) trait CFlavor {
    fn target(&self) -> TargetLanguage;

    fn ident(&self, name: &str) -> String;

    /// Spelling of a non-array type.
    fn type_name(&self, t: &TypeExpr) -> CResult<String>;

    /// `T name` with array dimensions in declarator position.
    fn declare(&self, t: &TypeExpr, name: &str) -> CResult<String> {
        let dims: String = t
            .array_dims()
            .iter()
            .map(|d| match d {
                Some(n) => format!("[{n}]"),
                None => "[]".to_string(),
            })
            .collect();
        Ok(format!("{} {}{}", self.type_name(t.innermost())?, self.ident(name), dims))
    }

    fn float_lit(&self, v: f64) -> String {
        format_float(v)
    }

    fn var(&self, name: &str) -> P {
        P::atom(self.ident(name))
    }

    fn binary(&self, op: BinaryOp, _l: &Expr, _r: &Expr, ls: P, rs: P) -> P {
        infix(op, &ls, &rs)
    }

    fn construct(&self, ty: &TypeExpr, args: &[Expr], printed: Vec<P>) -> CResult<P>;

    /// Calls to builtins and user functions.
    fn call(&self, callee: &str, args: &[Expr], printed: Vec<P>, location: &SourceLocation) -> CResult<P>;

    fn swizzle(&self, _base: &Expr, bs: P, components: &str) -> P {
        P::new(format!("{}.{components}", bs.postfix()), PREC_POSTFIX)
    }

    fn intrinsic(&self, name: &str, axis: usize) -> P;

    /// Statement storing `value` into a multi-component swizzle when the
    /// target cannot assign to swizzles directly.
    fn swizzle_store(&self, _base: &P, _components: &str, _value: &P) -> Option<String> {
        None
    }

    /// Whether `target op= value` must be spelled `target = target op value`.
    fn split_compound(&self, _target: &TypeExpr, _value: &TypeExpr, _op: BinaryOp) -> bool {
        false
    }

    /// Rejects statements the target cannot express.
    fn check_stmt(&self, _s: &Stmt) -> CResult<()> {
        Ok(())
    }
}

/// Indented text output with C-family statement and expression printing.
pub(crate) struct CWriter<'a> {
    pub flavor: &'a dyn CFlavor,
    pub out: String,
    indent: usize,
}

impl<'a> CWriter<'a> {
    pub fn new(flavor: &'a dyn CFlavor) -> Self {
        CWriter { flavor, out: String::new(), indent: 0 }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        let s = s.as_ref();
        if s.is_empty() {
            self.out.push('\n');
            return;
        }
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    pub fn blank(&mut self) {
        if !self.out.is_empty() && !self.out.ends_with("\n\n") {
            self.out.push('\n');
        }
    }

    pub fn open(&mut self, header: impl AsRef<str>) {
        self.line(format!("{} {{", header.as_ref()));
        self.indent += 1;
    }

    pub fn close(&mut self, suffix: &str) {
        self.indent -= 1;
        self.line(format!("}}{suffix}"));
    }

    pub fn stmts(&mut self, body: &[Stmt]) -> CResult<()> {
        for s in body {
            self.stmt(s)?;
        }
        Ok(())
    }

    /// Emits `header { body }`.
    pub fn function(&mut self, header: &str, prologue: &[String], body: &[Stmt]) -> CResult<()> {
        self.open(header);
        for l in prologue {
            self.line(l);
        }
        self.stmts(body)?;
        self.close("");
        Ok(())
    }

    /// Like `open` but leaves the closing brace to the caller so that
    /// `} else {` can share its line.
    fn control_block(&mut self, header: String, body: &[Stmt]) -> CResult<()> {
        self.open(header);
        self.stmts(body)?;
        self.indent -= 1;
        Ok(())
    }

    pub fn stmt(&mut self, s: &Stmt) -> CResult<()> {
        self.flavor.check_stmt(s)?;
        match &s.kind {
            StmtKind::If { cond, then, otherwise } => {
                let mut header = format!("if ({})", self.expr(cond)?.text);
                let mut then = then;
                let mut otherwise = otherwise.as_ref();
                loop {
                    self.control_block(header, then)?;
                    match otherwise {
                        None => {
                            self.line("}");
                            break;
                        }
                        Some(o) => match o.as_slice() {
                            [Stmt { kind: StmtKind::If { cond, then: t2, otherwise: o2 }, .. }] => {
                                header = format!("}} else if ({})", self.expr(cond)?.text);
                                then = t2;
                                otherwise = o2.as_ref();
                            }
                            _ => {
                                self.control_block("} else".to_string(), o)?;
                                self.line("}");
                                break;
                            }
                        },
                    }
                }
            }
            StmtKind::For { init, cond, step, body } => {
                let init = match init {
                    Some(i) => self.simple(i)?,
                    None => String::new(),
                };
                let cond = match cond {
                    Some(c) => format!(" {}", self.expr(c)?.text),
                    None => String::new(),
                };
                let step = match step {
                    Some(st) => format!(" {}", self.simple(st)?),
                    None => String::new(),
                };
                self.open(format!("for ({init};{cond};{step})"));
                self.stmts(body)?;
                self.close("");
            }
            StmtKind::While { cond, body } => {
                self.open(format!("while ({})", self.expr(cond)?.text));
                self.stmts(body)?;
                self.close("");
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => {
                let t = self.expr(e)?.text;
                self.line(format!("return {t};"));
            }
            StmtKind::Break => self.line("break;"),
            StmtKind::Continue => self.line("continue;"),
            StmtKind::Block(b) => {
                self.open("");
                self.stmts(b)?;
                self.close("");
            }
            _ => {
                let t = self.simple(s)?;
                self.line(format!("{t};"));
            }
        }
        Ok(())
    }

    /// Declarations, assignments and expression statements without `;`.
    pub fn simple(&mut self, s: &Stmt) -> CResult<String> {
        self.flavor.check_stmt(s)?;
        match &s.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let decl = self.flavor.declare(ty, name)?;
                Ok(match init {
                    Some(e) => format!("{decl} = {}", self.expr(e)?.text),
                    None => decl,
                })
            }
            StmtKind::Assign { target, op, value } => self.assign(target, *op, value),
            StmtKind::Expr(e) => Ok(self.expr(e)?.text),
            _ => Err(CodegenError::construct(
                &s.location,
                "statement",
                self.flavor.target(),
                "only declarations, assignments and expressions may appear in a for header",
            )),
        }
    }

    fn assign(&mut self, target: &Expr, op: AssignOp, value: &Expr) -> CResult<String> {
        let tt = ty(target).clone();
        let vt = ty(value).clone();
        let combined = |op: BinaryOp| {
            let mut e = Expr::binary(op, target.clone(), value.clone(), value.location.clone());
            e.ty = Some(tt.clone());
            e
        };
        if let ExprKind::Swizzle { base, components } = &target.kind {
            if components.len() > 1 {
                let bs = self.expr(base)?;
                let rhs = match op.binary() {
                    Some(b) => self.expr(&combined(b))?,
                    None => self.expr(value)?,
                };
                if let Some(stmt) = self.flavor.swizzle_store(&bs, components, &rhs) {
                    return Ok(stmt);
                }
            }
        }
        if let Some(b) = op.binary() {
            if self.flavor.split_compound(&tt, &vt, b) {
                let ts = self.expr(target)?.text;
                let rhs = self.expr(&combined(b))?.text;
                return Ok(format!("{ts} = {rhs}"));
            }
            if (b == BinaryOp::Add || b == BinaryOp::Sub) && value.kind == ExprKind::IntLit(1) && tt == TypeExpr::INT {
                let ts = self.expr(target)?.text;
                return Ok(format!("{ts}{}", if b == BinaryOp::Add { "++" } else { "--" }));
            }
        }
        let ts = self.expr(target)?.text;
        let vs = self.expr(value)?.text;
        Ok(format!("{ts} {} {vs}", op.symbol()))
    }

    pub fn expr(&self, e: &Expr) -> CResult<P> {
        let f = self.flavor;
        Ok(match &e.kind {
            ExprKind::IntLit(v) => P::atom(v.to_string()),
            ExprKind::FloatLit(v) => {
                let t = f.float_lit(*v);
                if t.starts_with('-') {
                    P::new(t, PREC_UNARY)
                } else {
                    P::atom(t)
                }
            }
            ExprKind::BoolLit(b) => P::atom(b.to_string()),
            ExprKind::Var(n) => f.var(n),
            ExprKind::Binary { op, lhs, rhs } => {
                let ls = self.expr(lhs)?;
                let rs = self.expr(rhs)?;
                f.binary(*op, lhs, rhs, ls, rs)
            }
            ExprKind::Unary { op, operand } => unary(*op, &self.expr(operand)?),
            ExprKind::Call { callee, args } => {
                if crate::semantics::is_compute_intrinsic(callee) {
                    let axis = match args.first().map(|a| &a.kind) {
                        Some(ExprKind::IntLit(a)) => *a as usize,
                        _ => 0,
                    };
                    return Ok(f.intrinsic(callee, axis));
                }
                let printed = args.iter().map(|a| self.expr(a)).collect::<CResult<Vec<_>>>()?;
                f.call(callee, args, printed, &e.location)?
            }
            ExprKind::Construct { ty, args } => {
                let printed = args.iter().map(|a| self.expr(a)).collect::<CResult<Vec<_>>>()?;
                f.construct(ty, args, printed)?
            }
            ExprKind::MemberOrSwizzle { base, name } | ExprKind::Member { base, member: name } => {
                let bs = self.expr(base)?;
                P::new(format!("{}.{}", bs.postfix(), f.ident(name)), PREC_POSTFIX)
            }
            ExprKind::Swizzle { base, components } => {
                let bs = self.expr(base)?;
                f.swizzle(base, bs, components)
            }
            ExprKind::Index { base, index } => {
                let bs = self.expr(base)?;
                let is = self.expr(index)?;
                P::new(format!("{}[{}]", bs.postfix(), is.text), PREC_POSTFIX)
            }
            ExprKind::Ternary { cond, then, otherwise } => {
                let c = self.expr(cond)?;
                let t = self.expr(then)?;
                let o = self.expr(otherwise)?;
                P::new(
                    format!("{} ? {} : {}", c.at(PREC_TERNARY + 1), t.at(PREC_TERNARY + 1), o.at(PREC_TERNARY)),
                    PREC_TERNARY,
                )
            }
        })
    }

    /// Forward declarations for `functions`.
    pub fn prototypes(&mut self, headers: &[String]) {
        if headers.is_empty() {
            return;
        }
        for h in headers {
            self.line(format!("{h};"));
        }
        self.blank();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_a_decimal_point() {
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(1e-7), "1.0e-7");
        assert_eq!(format_float(2.5e20), "2.5e20");
        assert_eq!(format_float(1.23456), "1.23456");
    }
}
