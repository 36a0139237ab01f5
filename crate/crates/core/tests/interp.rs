mod common;

use crosstl::frontend::{tokenize, CrossGlDialect, Parser};
use crosstl::interp::*;
use crosstl::ir::*;
use proptest::prelude::*;

fn expr(text: &str) -> Expr {
    let tokens = tokenize(text, "e").unwrap();
    Parser::new(&tokens, &CrossGlDialect).parse_expr().unwrap()
}

fn empty() -> ShaderModule {
    common::typed("shader E { }")
}

fn eval(text: &str) -> Result<Value, RuntimeError> {
    eval_expression(&empty(), &Env::new(), &expr(text))
}

fn floats(v: &Value) -> Vec<f64> {
    match v {
        Value::Float(x) => vec![*x],
        Value::Vector(c) => c.clone(),
        other => panic!("{other:?}"),
    }
}

#[test]
fn expression_examples() {
    let mut env = Env::new();
    env.bind("uv", Value::vec(&[0.25, 0.75]));
    let v = eval_expression(&empty(), &env, &expr("vec4(uv.x, uv.y, 0.5, 1.0)")).unwrap();
    assert_eq!(v, Value::vec(&[0.25, 0.75, 0.5, 1.0]));
    assert_eq!(eval_expression(&empty(), &env, &expr("uv.yx")).unwrap(), Value::vec(&[0.75, 0.25]));

    assert_eq!(eval("1 + 2").unwrap(), Value::Int(3));
    assert_eq!(eval("7 / 2").unwrap(), Value::Int(3));
    assert_eq!(eval("-7 / 2").unwrap(), Value::Int(-3));
    assert_eq!(eval("1 + 0.5").unwrap(), Value::Float(1.5));
    assert_eq!(eval("2147483647 + 1").unwrap(), Value::Int(i32::MIN));
    assert_eq!(eval("1 / 0"), Err(RuntimeError::DivisionByZero));
    assert_eq!(eval("5 % 0"), Err(RuntimeError::DivisionByZero));
    assert_eq!(eval("dot(vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0))").unwrap(), Value::Float(0.0));
    assert_eq!(eval("cross(vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0))").unwrap(), Value::vec(&[0.0, 0.0, 1.0]));
    assert_eq!(eval("1.0 < 2.0 ? 3 : 4").unwrap(), Value::Int(3));
}

#[test]
fn matrices_are_column_major() {
    let m = "mat2(vec2(1.0, 2.0), vec2(3.0, 4.0))";
    assert_eq!(eval(&format!("{m} * vec2(1.0, 0.0)")).unwrap(), Value::vec(&[1.0, 2.0]));
    assert_eq!(eval(&format!("vec2(1.0, 0.0) * {m}")).unwrap(), Value::vec(&[1.0, 3.0]));
}

#[test]
fn runtime_errors() {
    let m = common::typed(
        "shader R {
            float idx(float a[4], int i) { return a[i]; }
            int forever(int n) { return forever(n + 1); }
            int spin() { int i = 0; while (true) { i = i + 1; } return i; }
            compute { void k(float a[]) { a[local_id(0)] = 1.0; } }
        }",
    );
    let arr = Value::Array(vec![Value::Float(0.0); 4]);
    assert_eq!(
        eval_function(&m, "idx", &[arr.clone(), Value::Int(4)]),
        Err(RuntimeError::IndexOutOfBounds { index: 4, len: 4 })
    );
    assert_eq!(
        eval_function(&m, "idx", &[arr.clone(), Value::Int(-1)]),
        Err(RuntimeError::IndexOutOfBounds { index: -1, len: 4 })
    );
    assert_eq!(eval_function(&m, "forever", &[Value::Int(0)]), Err(RuntimeError::CallDepthExceeded(MAX_CALL_DEPTH)));
    assert_eq!(eval_function(&m, "spin", &[]), Err(RuntimeError::StepBudgetExceeded(STEP_BUDGET)));
    assert!(matches!(eval_function(&m, "nope", &[]), Err(RuntimeError::UnknownFunction(_))));
    assert!(matches!(
        eval_function(&m, "idx", std::slice::from_ref(&arr)),
        Err(RuntimeError::ArgumentCount { expected: 2, found: 1, .. })
    ));
    assert!(matches!(
        eval_function(&m, "idx", &[Value::Int(1), Value::Int(1)]),
        Err(RuntimeError::ArgumentType { .. })
    ));
    assert!(matches!(eval("zz + 1.0"), Err(RuntimeError::UnboundVariable(_))));
    assert!(matches!(
        Interpreter::new(&m).call("k", std::slice::from_ref(&arr)),
        Err(RuntimeError::ComputeContextRequired(_))
    ));

    let mut args = [arr];
    let ids = ComputeIds { local_id: [2, 0, 0], group_id: [0; 3], group_size: [4, 1, 1] };
    Interpreter::new(&m).with_compute(ids).call_mut("k", &mut args).unwrap();
    assert_eq!(args[0], Value::Array(vec![Value::Float(0.0), Value::Float(0.0), Value::Float(1.0), Value::Float(0.0)]));
}

#[test]
fn corpus_functions_are_deterministic() {
    let m = common::corpus("complex_pbr");
    let args = [Value::vec(&[0.0, 0.0, 1.0]), Value::vec(&[0.0, 0.0, 1.0]), Value::Float(0.5)];
    let a = eval_function(&m, "distributionGGX", &args).unwrap();
    let b = eval_function(&m, "distributionGGX", &args).unwrap();
    assert_eq!(a, b);
    let Value::Float(x) = a else { panic!("{a:?}") };
    assert!((x - 1.0 / (std::f64::consts::PI * 0.0625)).abs() < 1e-5, "{x}");
}

#[test]
fn parse_value_reads_arguments() {
    let m = empty();
    assert_eq!(parse_value("vec2(1.0, -2.0)", &TypeExpr::vec(2), &m), Ok(Value::vec(&[1.0, -2.0])));
    assert_eq!(parse_value("3", &TypeExpr::FLOAT, &m), Ok(Value::Float(3.0)));
    assert_eq!(
        parse_value("[1, 2]", &TypeExpr::Array(Box::new(TypeExpr::INT), None), &m),
        Ok(Value::Array(vec![Value::Int(1), Value::Int(2)]))
    );
    assert!(parse_value("[1, 2]", &TypeExpr::Array(Box::new(TypeExpr::INT), Some(3)), &m).is_err());
    assert!(parse_value("vec3(1.0, 2.0, 3.0)", &TypeExpr::vec(2), &m).is_err());
    assert!(parse_value("1.0 2.0", &TypeExpr::FLOAT, &m).is_err());
}

fn component() -> impl Strategy<Value = f64> {
    (-100i32..100).prop_map(|i| f64::from(i) / 8.0)
}

proptest! {
    #[test]
    fn normalize_has_unit_length(x in component(), y in component(), z in component()) {
        prop_assume!(x != 0.0 || y != 0.0 || z != 0.0);
        let v = eval(&format!("length(normalize(vec3({x:?}, {y:?}, {z:?})))")).unwrap();
        prop_assert!((floats(&v)[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mix_hits_its_endpoints(a in component(), b in component()) {
        prop_assert_eq!(floats(&eval(&format!("mix({a:?}, {b:?}, 0.0)")).unwrap()), vec![a]);
        prop_assert_eq!(floats(&eval(&format!("mix({a:?}, {b:?}, 1.0)")).unwrap()), vec![b]);
    }

    #[test]
    fn clamp_stays_in_range(x in component(), lo in component(), span in 0i32..40) {
        let hi = lo + f64::from(span) / 4.0;
        let v = floats(&eval(&format!("clamp(vec2({x:?}, {x:?}), {lo:?}, {hi:?})")).unwrap());
        prop_assert!(v.iter().all(|c| *c >= lo && *c <= hi));
    }
}
