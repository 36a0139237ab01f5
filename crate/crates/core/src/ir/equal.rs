use super::*;

/// Structural equality that ignores source locations, type annotations and
/// single-statement block nesting. The three field-access node kinds compare
/// equal when base and field name match, since only the typechecker tells
/// them apart. For the same reason a call naming a struct equals the
/// matching struct constructor.
pub fn ast_equal(a: &ShaderModule, b: &ShaderModule) -> bool {
    a.name == b.name
        && a.structs.len() == b.structs.len()
        && a.structs.iter().zip(&b.structs).all(|(x, y)| struct_eq(x, y))
        && a.globals.len() == b.globals.len()
        && a.globals.iter().zip(&b.globals).all(|(x, y)| global_eq(x, y))
        && a.functions.len() == b.functions.len()
        && a.functions.iter().zip(&b.functions).all(|(x, y)| function_equal(x, y))
}

fn struct_eq(a: &StructDecl, b: &StructDecl) -> bool {
    a.name == b.name && a.members == b.members && a.attributes == b.attributes
}

fn global_eq(a: &GlobalVar, b: &GlobalVar) -> bool {
    a.name == b.name
        && a.ty == b.ty
        && a.qualifier == b.qualifier
        && match (&a.init, &b.init) {
            (None, None) => true,
            (Some(x), Some(y)) => expr_eq(x, y),
            _ => false,
        }
}

pub fn function_equal(a: &FunctionDecl, b: &FunctionDecl) -> bool {
    a.name == b.name
        && a.params == b.params
        && a.return_type == b.return_type
        && a.stage == b.stage
        && a.attributes == b.attributes
        && block_eq(&a.body, &b.body)
}

fn unwrap_block(mut s: &Stmt) -> &Stmt {
    while let StmtKind::Block(inner) = &s.kind {
        if inner.len() != 1 {
            break;
        }
        s = &inner[0];
    }
    s
}

fn block_eq(a: &[Stmt], b: &[Stmt]) -> bool {
    // A block holding exactly one block is that inner block.
    let a = flatten_singleton(a);
    let b = flatten_singleton(b);
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| stmt_eq(x, y))
}

fn flatten_singleton(mut list: &[Stmt]) -> &[Stmt] {
    while list.len() == 1 {
        match &list[0].kind {
            StmtKind::Block(inner) => list = inner,
            _ => break,
        }
    }
    list
}

fn opt_stmt_eq(a: &Option<Box<Stmt>>, b: &Option<Box<Stmt>>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => stmt_eq(x, y),
        _ => false,
    }
}

fn opt_expr_eq(a: &Option<Expr>, b: &Option<Expr>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => expr_eq(x, y),
        _ => false,
    }
}

fn stmt_eq(a: &Stmt, b: &Stmt) -> bool {
    let a = unwrap_block(a);
    let b = unwrap_block(b);
    use StmtKind::*;
    match (&a.kind, &b.kind) {
        (VarDecl { name: n1, ty: t1, init: i1 }, VarDecl { name: n2, ty: t2, init: i2 }) => {
            n1 == n2 && t1 == t2 && opt_expr_eq(i1, i2)
        }
        (Assign { target: t1, op: o1, value: v1 }, Assign { target: t2, op: o2, value: v2 }) => {
            o1 == o2 && expr_eq(t1, t2) && expr_eq(v1, v2)
        }
        (If { cond: c1, then: t1, otherwise: e1 }, If { cond: c2, then: t2, otherwise: e2 }) => {
            expr_eq(c1, c2)
                && block_eq(t1, t2)
                && match (e1, e2) {
                    (None, None) => true,
                    (Some(x), Some(y)) => block_eq(x, y),
                    _ => false,
                }
        }
        (For { init: i1, cond: c1, step: s1, body: b1 }, For { init: i2, cond: c2, step: s2, body: b2 }) => {
            opt_stmt_eq(i1, i2) && opt_expr_eq(c1, c2) && opt_stmt_eq(s1, s2) && block_eq(b1, b2)
        }
        (While { cond: c1, body: b1 }, While { cond: c2, body: b2 }) => expr_eq(c1, c2) && block_eq(b1, b2),
        (Return(x), Return(y)) => opt_expr_eq(x, y),
        (Break, Break) | (Continue, Continue) => true,
        (Expr(x), Expr(y)) => expr_eq(x, y),
        (Block(x), Block(y)) => block_eq(x, y),
        _ => false,
    }
}

fn field_parts(e: &Expr) -> Option<(&Expr, &str)> {
    match &e.kind {
        ExprKind::Member { base, member: name }
        | ExprKind::Swizzle { base, components: name }
        | ExprKind::MemberOrSwizzle { base, name } => Some((base, name)),
        _ => None,
    }
}

fn exprs_eq(a: &[Expr], b: &[Expr]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| expr_eq(x, y))
}

fn expr_eq(a: &Expr, b: &Expr) -> bool {
    use ExprKind::*;
    if let (Some((ba, fa)), Some((bb, fb))) = (field_parts(a), field_parts(b)) {
        return fa == fb && expr_eq(ba, bb);
    }
    match (&a.kind, &b.kind) {
        (IntLit(x), IntLit(y)) => x == y,
        (FloatLit(x), FloatLit(y)) => x.to_bits() == y.to_bits(),
        (BoolLit(x), BoolLit(y)) => x == y,
        (Var(x), Var(y)) => x == y,
        (Binary { op: o1, lhs: l1, rhs: r1 }, Binary { op: o2, lhs: l2, rhs: r2 }) => {
            o1 == o2 && expr_eq(l1, l2) && expr_eq(r1, r2)
        }
        (Unary { op: o1, operand: x }, Unary { op: o2, operand: y }) => o1 == o2 && expr_eq(x, y),
        (Call { callee: c1, args: a1 }, Call { callee: c2, args: a2 }) => c1 == c2 && exprs_eq(a1, a2),
        (Construct { ty: t1, args: a1 }, Construct { ty: t2, args: a2 }) => t1 == t2 && exprs_eq(a1, a2),
        (Call { callee, args: a1 }, Construct { ty: TypeExpr::Named(n), args: a2 })
        | (Construct { ty: TypeExpr::Named(n), args: a2 }, Call { callee, args: a1 }) => {
            callee == n && exprs_eq(a1, a2)
        }
        (Index { base: b1, index: i1 }, Index { base: b2, index: i2 }) => expr_eq(b1, b2) && expr_eq(i1, i2),
        (Ternary { cond: c1, then: t1, otherwise: o1 }, Ternary { cond: c2, then: t2, otherwise: o2 }) => {
            expr_eq(c1, c2) && expr_eq(t1, t2) && expr_eq(o1, o2)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(line: u32) -> SourceLocation {
        SourceLocation::new("t", line, 1)
    }

    fn module_with_literal(v: f64, line: u32) -> ShaderModule {
        let mut m = ShaderModule::new("M");
        m.functions.push(FunctionDecl {
            name: "f".into(),
            params: vec![],
            return_type: TypeExpr::FLOAT,
            body: vec![Stmt::new(StmtKind::Return(Some(Expr::float(v, loc(line)))), loc(line))],
            stage: None,
            attributes: vec![],
            location: loc(line),
        });
        m
    }

    #[test]
    fn locations_are_ignored() {
        assert!(ast_equal(&module_with_literal(1.0, 3), &module_with_literal(1.0, 40)));
    }

    #[test]
    fn literals_differ() {
        assert!(!ast_equal(&module_with_literal(1.0, 3), &module_with_literal(2.0, 3)));
    }

    #[test]
    fn singleton_block_equals_its_statement() {
        let a = module_with_literal(1.0, 1);
        let mut b = a.clone();
        let body = std::mem::take(&mut b.functions[0].body);
        b.functions[0].body = vec![Stmt::new(StmtKind::Block(body), loc(1))];
        assert!(ast_equal(&a, &b));
        assert!(ast_equal(&b, &a));
    }

    #[test]
    fn member_and_unresolved_field_compare_equal() {
        let base = Expr::var("v", loc(1));
        let x = Expr::new(ExprKind::Swizzle { base: Box::new(base.clone()), components: "xy".into() }, loc(1));
        let y = Expr::field(base, "xy", loc(2));
        assert!(expr_eq(&x, &y));
    }
}
