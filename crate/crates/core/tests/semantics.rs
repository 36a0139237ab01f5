mod common;

use crosstl::frontend::parse_source;
use crosstl::ir::*;
use crosstl::semantics::*;

fn diags(src: &str) -> Vec<Diagnostic> {
    let mut m = parse_source(src, "t.cgl").unwrap();
    check_module(&mut m)
}

fn errors(src: &str) -> Vec<String> {
    diags(src).into_iter().filter(|d| d.is_error()).map(|d| d.message).collect()
}

#[test]
fn unify_examples() {
    let f = TypeExpr::FLOAT;
    let i = TypeExpr::INT;
    assert_eq!(unify_types(&f, &f, BinaryOp::Add), Ok(f.clone()));
    assert_eq!(unify_types(&i, &f, BinaryOp::Mul), Ok(f.clone()));
    assert_eq!(unify_types(&i, &i, BinaryOp::Div), Ok(i.clone()));
    assert_eq!(unify_types(&TypeExpr::vec(3), &f, BinaryOp::Mul), Ok(TypeExpr::vec(3)));
    assert_eq!(unify_types(&f, &TypeExpr::vec(2), BinaryOp::Sub), Ok(TypeExpr::vec(2)));
    assert_eq!(unify_types(&TypeExpr::mat(3), &TypeExpr::vec(3), BinaryOp::Mul), Ok(TypeExpr::vec(3)));
    assert_eq!(unify_types(&f, &i, BinaryOp::Lt), Ok(TypeExpr::BOOL));
    assert_eq!(unify_types(&TypeExpr::BOOL, &TypeExpr::BOOL, BinaryOp::And), Ok(TypeExpr::BOOL));

    let err = unify_types(&TypeExpr::vec(3), &TypeExpr::vec(4), BinaryOp::Add).unwrap_err();
    assert_eq!(err.to_string(), "no rule for vec3 + vec4");
    assert!(unify_types(&TypeExpr::mat(4), &TypeExpr::vec(3), BinaryOp::Mul).is_err());
    assert!(unify_types(&TypeExpr::mat(2), &TypeExpr::mat(2), BinaryOp::Add).is_err());
    assert!(unify_types(&f, &f, BinaryOp::Rem).is_err());
    assert!(unify_types(&TypeExpr::vec(2), &TypeExpr::vec(2), BinaryOp::Lt).is_err());
}

#[test]
fn swizzles() {
    let v3 = TypeExpr::vec(3);
    assert_eq!(resolve_swizzle(&v3, "x", false), Ok(TypeExpr::FLOAT));
    assert_eq!(resolve_swizzle(&v3, "zyx", false), Ok(v3.clone()));
    assert_eq!(resolve_swizzle(&v3, "xxxx", false), Ok(TypeExpr::vec(4)));
    assert!(resolve_swizzle(&v3, "xx", true).unwrap_err().to_string().contains("repeated"));
    assert!(resolve_swizzle(&v3, "w", false).unwrap_err().to_string().contains("exceeds vec3"));
    assert!(resolve_swizzle(&v3, "xyzxy", false).is_err());
    assert!(resolve_swizzle(&TypeExpr::FLOAT, "x", false).is_err());
}

#[test]
fn constructors() {
    let f = TypeExpr::FLOAT;
    let v2 = TypeExpr::vec(2);
    let v4 = TypeExpr::vec(4);
    assert_eq!(check_constructor(&v4, &[TypeExpr::vec(3), f.clone()]), Ok(v4.clone()));
    assert_eq!(check_constructor(&v4, &[v2.clone(), v2.clone()]), Ok(v4.clone()));
    assert_eq!(check_constructor(&v4, std::slice::from_ref(&f)), Ok(v4.clone()));
    assert!(check_constructor(&v4, &[v2.clone(), f.clone()]).unwrap_err().to_string().contains("3 components into 4"));
    assert_eq!(check_constructor(&TypeExpr::mat(2), &[v2.clone(), v2.clone()]), Ok(TypeExpr::mat(2)));
    assert!(check_constructor(&TypeExpr::mat(2), &[v2]).is_err());
    assert_eq!(check_constructor(&f, &[TypeExpr::INT]), Ok(f.clone()));
    assert!(check_constructor(&TypeExpr::Sampler2D, &[]).is_err());
}

#[test]
fn image_processor_checks_and_annotates() {
    let mut m = parse_source(common::IMAGE_PROCESSOR, "t.cgl").unwrap();
    assert!(check_module(&mut m).is_empty());
    let mut all_typed = true;
    for f in &m.functions {
        visit_block_exprs(&f.body, &mut |e| all_typed &= e.ty.is_some());
    }
    assert!(all_typed);
}

#[test]
fn typecheck_errors() {
    assert_eq!(errors("shader S { void f() { float x = vec3(1.0, 2.0, 3.0); } }"), ["cannot assign vec3 to float"]);
    assert_eq!(errors("shader S { float f() { return; } }"), ["missing return value"]);
    assert_eq!(errors("shader S { void f() { return 1.0; } }"), ["void function cannot return a value"]);
    assert_eq!(errors("shader S { float f() { return y; } }"), ["undeclared identifier y"]);
    assert_eq!(errors("shader S { void f() { break; } }").len(), 1);
    assert_eq!(errors("shader S { float f(float a) { if (a > 0.0) { return a; } } }").len(), 1);
    assert_eq!(
        errors("shader S { void f(vec3 v) { v.xx = vec2(1.0, 2.0); } }").len(),
        1,
        "repeated swizzle components are not assignable"
    );
    assert_eq!(errors("shader S { uniform float u; void f() { u = 1.0; } }"), ["cannot assign to uniform u"]);
}

#[test]
fn compute_intrinsics_are_stage_restricted() {
    let e = errors("shader S { int f() { return local_id(0); } }");
    assert_eq!(e.len(), 1, "{e:?}");
    assert!(e[0].contains("compute"));
    assert!(errors("shader S { compute { void main(float a[]) { a[local_id(0)] = 1.0; } } }").is_empty());
}

#[test]
fn builtins_reject_perturbed_signatures() {
    for b in BUILTINS {
        let (params, result) = b.example_signature();
        assert_eq!(b.resolve(&params), Ok(result), "{}", b.name);
        let mut more = params.clone();
        more.push(TypeExpr::FLOAT);
        assert!(b.resolve(&more).is_err(), "{} accepted an extra argument", b.name);
        let mut wrong = params.clone();
        wrong[0] = TypeExpr::BOOL;
        assert!(b.resolve(&wrong).is_err(), "{} accepted bool", b.name);
    }
    assert!(lookup_builtin("texture").is_some());
    assert!(lookup_builtin("fract").is_none());
}

#[test]
fn checking_reaches_a_fixpoint() {
    for path in common::corpus_files() {
        let mut m = parse_source(&std::fs::read_to_string(&path).unwrap(), "x.cgl").unwrap();
        let first = check_module(&mut m);
        let snapshot = m.clone();
        let second = check_module(&mut m);
        assert_eq!(first, second, "{}", path.display());
        assert_eq!(m, snapshot);
    }
}

#[test]
fn validation_errors_skip_typechecking() {
    let d = diags("shader S { struct A { Foo f; } void g() { float x = true; } }");
    assert_eq!(d.len(), 1, "{d:?}");
    assert!(d[0].message.contains("unresolved type Foo"));
}
