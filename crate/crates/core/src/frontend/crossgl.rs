use super::lexer::TokenKind;
use super::parser::{CrossGlDialect, PResult, Parser};
use super::Token;
use crate::ir::*;

/// Parses a CrossGL token stream into a module. Stage blocks are lowered to
/// stage-tagged functions; uniforms declared inside them become module
/// globals, with identical redeclarations merged.
pub fn parse_module(tokens: &[Token]) -> PResult<ShaderModule> {
    let dialect = CrossGlDialect;
    let mut p = Parser::new(tokens, &dialect);
    p.expect("shader")?;
    let name = p.expect_ident()?;
    let mut module = ShaderModule::new(name);
    p.expect("{")?;
    while !p.check("}") {
        if p.at_eof() {
            return p.error("'}'");
        }
        parse_item(&mut p, &mut module, None)?;
    }
    p.expect("}")?;
    if !p.at_eof() {
        return p.error("end of input");
    }
    Ok(module)
}

fn stage_keyword(p: &Parser) -> Option<Stage> {
    let t = p.peek();
    if t.kind != TokenKind::Keyword || !p.check_at(1, "{") {
        return None;
    }
    Stage::ALL.into_iter().find(|s| s.keyword() == t.text)
}

fn parse_item(p: &mut Parser, module: &mut ShaderModule, stage: Option<Stage>) -> PResult<()> {
    if stage.is_none() {
        if let Some(st) = stage_keyword(p) {
            p.advance();
            p.expect("{")?;
            while !p.check("}") {
                if p.at_eof() {
                    return p.error("'}'");
                }
                parse_item(p, module, Some(st))?;
            }
            p.expect("}")?;
            return Ok(());
        }
    }
    let loc = p.loc();
    let attributes = p.parse_attributes()?;
    if p.check("struct") {
        if stage.is_some() {
            return p.error("function or uniform inside stage block");
        }
        p.advance();
        let name = p.expect_ident()?;
        p.expect("{")?;
        let mut members = Vec::new();
        while !p.check("}") {
            let base = p.parse_type()?;
            let mname = p.expect_ident()?;
            let ty = p.parse_array_suffix(base)?;
            p.expect(";")?;
            members.push(StructMember { name: mname, ty });
        }
        p.expect("}")?;
        p.eat(";");
        module.structs.push(StructDecl { name, members, attributes, location: loc });
        return Ok(());
    }
    let qualifier = if p.eat("uniform") {
        Some(GlobalQualifier::Uniform)
    } else if p.eat("const") {
        Some(GlobalQualifier::Const)
    } else {
        None
    };
    let base = p.parse_type()?;
    let name = p.expect_ident()?;
    if qualifier.is_none() && p.check("(") {
        let function = parse_function_rest(p, name, base, stage, attributes, loc)?;
        module.functions.push(function);
        return Ok(());
    }
    if !attributes.is_empty() {
        return Err(super::ParseError {
            location: loc,
            expected: "function or struct after attribute".into(),
            found: "global variable".into(),
        });
    }
    let ty = p.parse_array_suffix(base)?;
    let init = if p.eat("=") { Some(p.parse_expr()?) } else { None };
    p.expect(";")?;
    let global = GlobalVar { name, ty, qualifier: qualifier.unwrap_or(GlobalQualifier::Plain), init, location: loc };
    let duplicate = module.globals.iter().any(|g| {
        g.name == global.name
            && g.ty == global.ty
            && g.qualifier == global.qualifier
            && g.init.is_none()
            && global.init.is_none()
    });
    if !duplicate {
        module.globals.push(global);
    }
    Ok(())
}

fn parse_function_rest(
    p: &mut Parser,
    name: String,
    return_type: TypeExpr,
    stage: Option<Stage>,
    attributes: Vec<Attribute>,
    location: SourceLocation,
) -> PResult<FunctionDecl> {
    p.expect("(")?;
    let mut params = Vec::new();
    if !p.check(")") {
        loop {
            let attrs = p.parse_attributes()?;
            let base = p.parse_type()?;
            let pname = p.expect_ident()?;
            let ty = p.parse_array_suffix(base)?;
            params.push(Param { name: pname, ty, attributes: attrs });
            if !p.eat(",") {
                break;
            }
        }
    }
    p.expect(")")?;
    let body = p.parse_block()?;
    Ok(FunctionDecl { name, params, return_type, body, stage, attributes, location })
}

#[cfg(test)]
mod tests {
    use super::super::{parse_source, tokenize};
    use super::*;

    #[test]
    fn empty_module() {
        let m = parse_module(&tokenize("shader S { }", "t").unwrap()).unwrap();
        assert_eq!(m.name, "S");
        assert!(m.structs.is_empty() && m.functions.is_empty());
    }

    #[test]
    fn unterminated_struct_reports_missing_brace_at_eof() {
        let e = parse_module(&tokenize("shader S { struct T { float x; }", "t").unwrap()).unwrap_err();
        assert_eq!(e.expected, "'}'");
        assert_eq!(e.found, "end of input");
    }

    #[test]
    fn precedence() {
        let m = parse_source("shader S { float f(float a, float b, float c) { return a + b * c; } }", "t").unwrap();
        let StmtKind::Return(Some(e)) = &m.functions[0].body[0].kind else { panic!() };
        let ExprKind::Binary { op: BinaryOp::Add, rhs, .. } = &e.kind else { panic!("{e:?}") };
        assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::Mul, .. }));
    }

    #[test]
    fn unary_binds_looser_than_member_access() {
        let m = parse_source("shader S { float f(vec2 a) { return -a.x; } }", "t").unwrap();
        let StmtKind::Return(Some(e)) = &m.functions[0].body[0].kind else { panic!() };
        let ExprKind::Unary { op: UnaryOp::Neg, operand } = &e.kind else { panic!("{e:?}") };
        assert!(matches!(operand.kind, ExprKind::MemberOrSwizzle { .. }));
    }

    #[test]
    fn stage_uniforms_merge_and_attributes_attach() {
        let src = "shader S {
            vertex { uniform float t; }
            fragment { uniform float t; }
            compute { @workgroup_size(8, 4, 1) void main() { } }
        }";
        let m = parse_source(src, "t").unwrap();
        assert_eq!(m.globals.len(), 1);
        assert_eq!(m.functions[0].stage, Some(Stage::Compute));
        assert_eq!(m.functions[0].workgroup_size(), [8, 4, 1]);
    }

    #[test]
    fn increments_lower_to_compound_assignment() {
        let m = parse_source("shader S { void f() { int i = 0; i++; --i; } }", "t").unwrap();
        let body = &m.functions[0].body;
        assert!(
            matches!(&body[1].kind, StmtKind::Assign { op: AssignOp::Add, value, .. } if value.kind == ExprKind::IntLit(1))
        );
        assert!(matches!(&body[2].kind, StmtKind::Assign { op: AssignOp::Sub, .. }));
    }
}
