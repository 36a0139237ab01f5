mod common;

use crosstl::frontend::parse_source;
use crosstl::ir::*;

fn parse(src: &str) -> ShaderModule {
    parse_source(src, "t.cgl").unwrap()
}

#[test]
fn unresolved_struct_is_reported() {
    let m = parse("shader S { struct A { Foo f; } }");
    let d = validate_program(&m);
    assert_eq!(d.len(), 1, "{d:?}");
    assert!(d[0].message.contains("unresolved type Foo"));
    assert!(d[0].is_error());
}

#[test]
fn self_referencing_struct_is_recursive() {
    let m = parse("shader S { struct Node { float v; Node next; } }");
    let d = validate_program(&m);
    assert_eq!(d.len(), 1, "{d:?}");
    assert!(d[0].message.contains("recursive struct"));
}

#[test]
fn image_processor_is_valid() {
    assert!(validate_program(&parse(common::IMAGE_PROCESSOR)).is_empty());
}

#[test]
fn validation_catches_invariant_violations() {
    let cases = [
        ("shader S { struct A { float x; int x; } }", "x"),
        ("shader S { struct A { void v; } }", "void"),
        ("shader S { void f(float a, float a) { } }", "a"),
        ("shader S { void f() { float a[0]; } }", "size"),
        ("shader S { uniform float u; uniform int u; }", "duplicate"),
    ];
    for (src, needle) in cases {
        let d = validate_program(&parse(src));
        assert!(!d.is_empty() && d.iter().any(|d| d.message.contains(needle)), "{src}: {d:?}");
    }
}

#[test]
fn stage_entries_may_share_the_name_main() {
    let m = parse(common::IMAGE_PROCESSOR);
    assert_eq!(m.functions.iter().filter(|f| f.name == "main").count(), 2);
    assert!(validate_program(&m).is_empty());
    let clash = parse("shader S { uniform float f; float f(float a) { return a; } }");
    assert!(validate_program(&clash).iter().any(|d| d.message.contains("duplicate top-level name f")));
}

#[test]
fn diagnostics_are_sorted_and_deterministic() {
    let m = parse("shader S { struct B { Bar b; } struct A { Foo f; } }");
    let d = validate_program(&m);
    assert_eq!(d, validate_program(&m));
    assert!(d.windows(2).all(|w| w[0].location <= w[1].location));
    assert_eq!(d.len(), 2);
}

#[test]
fn ast_equal_examples() {
    let a = parse(common::IMAGE_PROCESSOR);
    assert!(ast_equal(&a, &a));

    let shifted = parse(&format!("\n\n\n{}", common::IMAGE_PROCESSOR.replace("    ", "  ")));
    assert_ne!(a, shifted);
    assert!(ast_equal(&a, &shifted));

    let changed = parse(&common::IMAGE_PROCESSOR.replace("0.5, 1.0", "0.5, 2.0"));
    assert!(!ast_equal(&a, &changed));
}

#[test]
fn single_statement_blocks_compare_equal() {
    let a = parse("shader S { float f(float x) { if (x > 0.0) { return x; } return 0.0; } }");
    let b = parse("shader S { float f(float x) { if (x > 0.0) { { return x; } } return 0.0; } }");
    assert!(ast_equal(&a, &b));
}

#[test]
fn ast_equal_is_symmetric_and_transitive_on_corpus() {
    let modules: Vec<ShaderModule> = common::corpus_files()
        .iter()
        .map(|p| parse_source(&std::fs::read_to_string(p).unwrap(), "x.cgl").unwrap())
        .collect();
    for a in &modules {
        for b in &modules {
            assert_eq!(ast_equal(a, b), ast_equal(b, a));
            for c in &modules {
                if ast_equal(a, b) && ast_equal(b, c) {
                    assert!(ast_equal(a, c));
                }
            }
        }
    }
}

#[test]
fn every_node_has_a_positive_location() {
    for path in common::corpus_files() {
        let m = parse_source(&std::fs::read_to_string(&path).unwrap(), "x.cgl").unwrap();
        for f in &m.functions {
            assert!(f.location.line >= 1 && f.location.column >= 1);
            visit_block_exprs(&f.body, &mut |e| assert!(e.location.line >= 1 && e.location.column >= 1));
            for s in &f.body {
                s.visit_stmts(&mut |s| assert!(s.location.line >= 1 && s.location.column >= 1));
            }
        }
    }
}

#[test]
fn dump_indents_by_depth() {
    let dump = dump_module(&parse("shader S { struct A { float x; } }"));
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines[0], "Module S");
    assert!(lines[1].starts_with("  Struct A"));
    assert!(lines[2].starts_with("    Member x: float"));
}

#[test]
fn workgroup_size_defaults_and_attribute() {
    let m =
        parse("shader S { compute { @workgroup_size(16, 16, 1) void main(float a[]) { } void other(float b[]) { } } }");
    assert_eq!(m.functions[0].workgroup_size(), [16, 16, 1]);
    assert_eq!(m.functions[1].workgroup_size(), [64, 1, 1]);
    assert!(m.functions.iter().all(FunctionDecl::is_kernel));
}
