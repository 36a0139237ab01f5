use std::fmt::Write;

use super::*;

/// Line-oriented debug dump, one node per line, indented two spaces per depth.
/// Meant for test goldens and debugging; the format is not a stable contract.
pub fn dump_module(module: &ShaderModule) -> String {
    let mut d = Dumper { out: String::new() };
    d.line(0, format!("Module {}", module.name));
    for s in &module.structs {
        d.line(1, format!("Struct {}{}", s.name, attrs(&s.attributes)));
        for m in &s.members {
            d.line(2, format!("Member {}: {}", m.name, m.ty));
        }
    }
    for g in &module.globals {
        d.line(1, format!("Global {:?} {}: {}", g.qualifier, g.name, g.ty));
        if let Some(init) = &g.init {
            d.expr(2, init);
        }
    }
    for f in &module.functions {
        let stage = f.stage.map(|s| format!(" [{s}]")).unwrap_or_default();
        d.line(1, format!("Function {} -> {}{}{}", f.name, f.return_type, stage, attrs(&f.attributes)));
        for p in &f.params {
            d.line(2, format!("Param {}: {}{}", p.name, p.ty, attrs(&p.attributes)));
        }
        for s in &f.body {
            d.stmt(2, s);
        }
    }
    d.out
}

fn attrs(list: &[Attribute]) -> String {
    list.iter()
        .map(|a| {
            let args: Vec<String> = a
                .args
                .iter()
                .map(|x| match x {
                    AttrArg::Int(v) => v.to_string(),
                    AttrArg::Str(s) => format!("{s:?}"),
                })
                .collect();
            format!(" @{}({})", a.name, args.join(", "))
        })
        .collect()
}

struct Dumper {
    out: String,
}

impl Dumper {
    fn line(&mut self, depth: usize, text: String) {
        let _ = writeln!(self.out, "{:width$}{}", "", text, width = depth * 2);
    }

    fn block(&mut self, depth: usize, label: &str, body: &[Stmt]) {
        self.line(depth, label.to_string());
        for s in body {
            self.stmt(depth + 1, s);
        }
    }

    fn stmt(&mut self, depth: usize, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl { name, ty, init } => {
                self.line(depth, format!("VarDecl {name}: {ty}"));
                if let Some(e) = init {
                    self.expr(depth + 1, e);
                }
            }
            StmtKind::Assign { target, op, value } => {
                self.line(depth, format!("Assign {}", op.symbol()));
                self.expr(depth + 1, target);
                self.expr(depth + 1, value);
            }
            StmtKind::If { cond, then, otherwise } => {
                self.line(depth, "If".into());
                self.expr(depth + 1, cond);
                self.block(depth + 1, "Then", then);
                if let Some(o) = otherwise {
                    self.block(depth + 1, "Else", o);
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.line(depth, "For".into());
                if let Some(i) = init {
                    self.stmt(depth + 1, i);
                }
                if let Some(c) = cond {
                    self.expr(depth + 1, c);
                }
                if let Some(st) = step {
                    self.stmt(depth + 1, st);
                }
                self.block(depth + 1, "Body", body);
            }
            StmtKind::While { cond, body } => {
                self.line(depth, "While".into());
                self.expr(depth + 1, cond);
                self.block(depth + 1, "Body", body);
            }
            StmtKind::Return(e) => {
                self.line(depth, "Return".into());
                if let Some(e) = e {
                    self.expr(depth + 1, e);
                }
            }
            StmtKind::Break => self.line(depth, "Break".into()),
            StmtKind::Continue => self.line(depth, "Continue".into()),
            StmtKind::Expr(e) => {
                self.line(depth, "ExprStmt".into());
                self.expr(depth + 1, e);
            }
            StmtKind::Block(b) => self.block(depth, "Block", b),
        }
    }

    fn expr(&mut self, depth: usize, e: &Expr) {
        let ty = e.ty.as_ref().map(|t| format!(" : {t}")).unwrap_or_default();
        let (label, children): (String, Vec<&Expr>) = match &e.kind {
            ExprKind::IntLit(v) => (format!("Int {v}"), vec![]),
            ExprKind::FloatLit(v) => (format!("Float {v:?}"), vec![]),
            ExprKind::BoolLit(v) => (format!("Bool {v}"), vec![]),
            ExprKind::Var(n) => (format!("Var {n}"), vec![]),
            ExprKind::Binary { op, lhs, rhs } => (format!("Binary {}", op.symbol()), vec![lhs, rhs]),
            ExprKind::Unary { op, operand } => (format!("Unary {}", op.symbol()), vec![operand]),
            ExprKind::Call { callee, args } => (format!("Call {callee}"), args.iter().collect()),
            ExprKind::Construct { ty, args } => (format!("Construct {ty}"), args.iter().collect()),
            ExprKind::MemberOrSwizzle { base, name } => (format!("Field .{name}"), vec![base]),
            ExprKind::Member { base, member } => (format!("Member .{member}"), vec![base]),
            ExprKind::Swizzle { base, components } => (format!("Swizzle .{components}"), vec![base]),
            ExprKind::Index { base, index } => ("Index".into(), vec![base, index]),
            ExprKind::Ternary { cond, then, otherwise } => ("Ternary".into(), vec![cond, then, otherwise]),
        };
        self.line(depth, format!("{label}{ty}"));
        for c in children {
            self.expr(depth + 1, c);
        }
    }
}
