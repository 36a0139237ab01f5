mod common;

use crosstl::backend::print_crossgl;
use crosstl::frontend::{parse_module, parse_source, tokenize, FrontendError, TokenKind};
use crosstl::ir::*;
use proptest::prelude::*;

fn kinds(src: &str) -> Vec<(TokenKind, String)> {
    tokenize(src, "t.cgl").unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
}

#[test]
fn tokenizes_shader_header() {
    use TokenKind::*;
    assert_eq!(
        kinds("shader ImageProcessor {"),
        vec![
            (Keyword, "shader".into()),
            (Identifier, "ImageProcessor".into()),
            (Punct, "{".into()),
            (Eof, String::new())
        ]
    );
}

#[test]
fn tokenizes_literals_and_arrays() {
    use TokenKind::*;
    assert_eq!(kinds("1.0"), vec![(FloatLit, "1.0".into()), (Eof, String::new())]);
    let toks = kinds("float values[1024];");
    assert_eq!(toks.len(), 7);
    assert_eq!(
        &toks[..6],
        &[
            (Keyword, "float".into()),
            (Identifier, "values".into()),
            (Punct, "[".into()),
            (IntLit, "1024".into()),
            (Punct, "]".into()),
            (Punct, ";".into()),
        ]
    );
}

#[test]
fn comments_are_skipped_and_locations_point_at_tokens() {
    let toks = tokenize("// line\n  /* block\n */ x", "t.cgl").unwrap();
    assert_eq!(toks[0].text, "x");
    assert_eq!((toks[0].location.line, toks[0].location.column), (3, 5));
}

#[test]
fn lex_errors() {
    let e = tokenize("shader S { $ }", "t.cgl").unwrap_err();
    assert_eq!((e.location.line, e.location.column), (1, 12));
    assert!(tokenize("/* never closed", "t.cgl").is_err());
}

#[test]
fn empty_module() {
    let m = parse_source("shader S { }", "t.cgl").unwrap();
    assert_eq!(m.name, "S");
    assert!(m.structs.is_empty() && m.functions.is_empty() && m.globals.is_empty());
}

#[test]
fn image_processor_structure() {
    let m = parse_source(common::IMAGE_PROCESSOR, "t.cgl").unwrap();
    let names: Vec<&str> = m.structs.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["VertexInput", "VertexOutput"]);
    assert!(m.entry_point(Stage::Vertex).is_some());
    assert!(m.entry_point(Stage::Fragment).is_some());

    let body = &m.entry_point(Stage::Vertex).unwrap().body;
    let n = body.len();
    let StmtKind::Assign { value, .. } = &body[n - 2].kind else { panic!("{:?}", body[n - 2]) };
    let ExprKind::Construct { ty, args } = &value.kind else { panic!("{value:?}") };
    assert_eq!(ty, &TypeExpr::vec(4));
    assert!(matches!(&args[0].kind, ExprKind::MemberOrSwizzle { name, .. } if name == "position"));
    assert!(matches!(args[1].kind, ExprKind::FloatLit(v) if v == 1.0));
    assert!(matches!(body[n - 1].kind, StmtKind::Return(Some(_))));
}

#[test]
fn missing_brace_fails_at_eof() {
    let Err(FrontendError::Parse(e)) = parse_source("shader S { struct T { float x; }", "t.cgl") else {
        panic!("expected a parse error")
    };
    assert!(e.expected.contains('}'), "{e}");
    assert_eq!(e.found, "end of input");
}

fn return_expr(src: &str) -> Expr {
    let m =
        parse_source(&format!("shader S {{ float f(float a, float b, float c, vec2 v) {{ return {src}; }} }}"), "t")
            .unwrap();
    let StmtKind::Return(Some(e)) = &m.functions[0].body[0].kind else { unreachable!() };
    e.clone()
}

#[test]
fn precedence() {
    let e = return_expr("a + b * c");
    let ExprKind::Binary { op: BinaryOp::Add, rhs, .. } = &e.kind else { panic!("{e:?}") };
    assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::Mul, .. }));

    let e = return_expr("-v.x");
    let ExprKind::Unary { op: UnaryOp::Neg, operand } = &e.kind else { panic!("{e:?}") };
    assert!(matches!(operand.kind, ExprKind::MemberOrSwizzle { .. }));

    let e = return_expr("a < b || b < c && c == a ? a : b");
    let ExprKind::Ternary { cond, .. } = &e.kind else { panic!("{e:?}") };
    let ExprKind::Binary { op: BinaryOp::Or, rhs, .. } = &cond.kind else { panic!("{cond:?}") };
    assert!(matches!(rhs.kind, ExprKind::Binary { op: BinaryOp::And, .. }));
}

#[test]
fn stage_blocks_become_tagged_functions() {
    let m = parse_source(
        "shader S { vertex { uniform float t; } compute { @workgroup_size(8, 8, 1) void main(float a[]) { } } }",
        "t.cgl",
    )
    .unwrap();
    assert_eq!(m.globals[0].qualifier, GlobalQualifier::Uniform);
    assert_eq!(m.functions[0].stage, Some(Stage::Compute));
    assert_eq!(m.functions[0].attributes[0].int_args(), [8, 8, 1]);
}

#[test]
fn corpus_round_trips_through_printer() {
    for path in common::corpus_files() {
        let m = parse_source(&std::fs::read_to_string(&path).unwrap(), "a.cgl").unwrap();
        let printed = print_crossgl(&m).unwrap();
        let back = parse_module(&tokenize(&printed, "b.cgl").unwrap()).unwrap();
        assert!(ast_equal(&m, &back), "{}", path.display());
        assert_eq!(print_crossgl(&back).unwrap(), printed);
    }
}

#[test]
fn lexer_is_idempotent_on_its_own_output() {
    for path in common::corpus_files() {
        let toks = tokenize(&std::fs::read_to_string(&path).unwrap(), "a").unwrap();
        let joined = toks.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        let again = tokenize(&joined, "b").unwrap();
        let a: Vec<_> = toks.iter().map(|t| (t.kind, &t.text)).collect();
        let b: Vec<_> = again.iter().map(|t| (t.kind, &t.text)).collect();
        assert_eq!(a, b);
    }
}

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0i64..100).prop_map(|i| i.to_string()),
        (0.0f64..100.0).prop_map(|f| format!("{f:?}")),
        Just("x".to_string()),
        Just("y".to_string()),
    ]
}

fn float_expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
            (inner.clone(), inner.clone(), inner).prop_map(|(c, a, b)| format!("({c} < 1.0 ? {a} : {b})")),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_reparse_equal(body in float_expr()) {
        let src = format!("shader P {{ float f(float x, float y) {{ return {body}; }} }}");
        let m = parse_source(&src, "p.cgl").unwrap();
        let back = parse_source(&print_crossgl(&m).unwrap(), "q.cgl").unwrap();
        prop_assert!(ast_equal(&m, &back));
    }
}
