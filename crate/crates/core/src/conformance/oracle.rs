use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::OracleResult;
use crate::interp::{eval_function, RuntimeError, Value};
use crate::ir::{visit_block_exprs, ExprKind, GlobalQualifier, ScalarKind, ShaderModule, TypeExpr};
use crate::semantics::is_compute_intrinsic;

pub const SAMPLE_POINTS: usize = 32;
pub const SAMPLE_SEED: u64 = 0x00C2_055C;
pub const TOLERANCE: f64 = 1e-6;

fn samplable(ty: &TypeExpr) -> bool {
    match ty {
        TypeExpr::Scalar(k) => *k != ScalarKind::Void,
        TypeExpr::Vector(..) | TypeExpr::Matrix(..) => true,
        TypeExpr::Array(inner, Some(_)) => samplable(inner),
        _ => false,
    }
}

/// Helper functions whose result depends only on their arguments: no stage,
/// value-typed parameters and result, and no reads of uniforms, mutable
/// globals, thread ids or textures, directly or through callees.
pub fn pure_functions(module: &ShaderModule) -> Vec<String> {
    module
        .functions
        .iter()
        .filter(|f| {
            f.stage.is_none()
                && samplable(&f.return_type)
                && f.params.iter().all(|p| samplable(&p.ty))
                && reads_only_constants(module, &f.name, &mut BTreeSet::new())
        })
        .map(|f| f.name.clone())
        .collect()
}

fn reads_only_constants(module: &ShaderModule, name: &str, seen: &mut BTreeSet<String>) -> bool {
    if !seen.insert(name.to_string()) {
        return true;
    }
    let Some(f) = module.find_function(name) else { return true };
    let locals: BTreeSet<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
    let mut callees = Vec::new();
    let mut pure = true;
    visit_block_exprs(&f.body, &mut |e| match &e.kind {
        ExprKind::Var(v) if !locals.contains(v.as_str()) => {
            if module.find_global(v).is_some_and(|g| g.qualifier != GlobalQualifier::Const) {
                pure = false;
            }
        }
        ExprKind::Call { callee, .. } => {
            if is_compute_intrinsic(callee) || callee == "texture" {
                pure = false;
            }
            callees.push(callee.clone());
        }
        _ => {}
    });
    pure && callees.iter().all(|c| reads_only_constants(module, c, seen))
}

fn sample(ty: &TypeExpr, rng: &mut ChaCha8Rng) -> Value {
    let float = |rng: &mut ChaCha8Rng| rng.gen_range(-1.5..=1.5);
    match ty {
        TypeExpr::Scalar(ScalarKind::Int) => Value::Int(rng.gen_range(0..=7)),
        TypeExpr::Scalar(ScalarKind::Bool) => Value::Bool(rng.gen_bool(0.5)),
        TypeExpr::Vector(_, n) => Value::Vector((0..*n).map(|_| float(rng)).collect()),
        TypeExpr::Matrix(c, r) => Value::Matrix((0..*c).map(|_| (0..*r).map(|_| float(rng)).collect()).collect()),
        TypeExpr::Array(inner, Some(n)) => Value::Array((0..*n).map(|_| sample(inner, rng)).collect()),
        _ => Value::Float(float(rng)),
    }
}

/// The standard sample: `SAMPLE_POINTS` argument lists drawn from a fixed
/// seed. Floats lie in [-1.5, 1.5] and ints in [0, 7].
pub fn sample_inputs(params: &[TypeExpr]) -> Vec<Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    (0..SAMPLE_POINTS).map(|_| params.iter().map(|t| sample(t, &mut rng)).collect()).collect()
}

fn rel_error(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn value_error(a: &Value, b: &Value) -> Option<f64> {
    let worst = |xs: &[f64], ys: &[f64]| {
        (xs.len() == ys.len()).then(|| xs.iter().zip(ys).map(|(x, y)| rel_error(*x, *y)).fold(0.0, f64::max))
    };
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => (x == y).then_some(0.0),
        (Value::Bool(x), Value::Bool(y)) => (x == y).then_some(0.0),
        (Value::Float(x), Value::Float(y)) => Some(rel_error(*x, *y)),
        (Value::Vector(x), Value::Vector(y)) => worst(x, y),
        (Value::Matrix(x), Value::Matrix(y)) if x.len() == y.len() => {
            x.iter().zip(y).map(|(c, d)| worst(c, d)).try_fold(0.0, |m, e| Some(f64::max(m, e?)))
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).map(|(c, d)| value_error(c, d)).try_fold(0.0, |m, e| Some(f64::max(m, e?)))
        }
        (Value::Record { name: n, fields: x }, Value::Record { name: m, fields: y })
            if n == m && x.len() == y.len() =>
        {
            x.iter()
                .zip(y)
                .map(|((f, c), (g, d))| if f == g { value_error(c, d) } else { None })
                .try_fold(0.0, |acc, e| Some(f64::max(acc, e?)))
        }
        (Value::Sampler, Value::Sampler) => Some(0.0),
        _ => None,
    }
}

/// Relative error between two results, or `None` when they disagree:
/// different shapes, different errors, or an error on one side only.
pub fn values_agree(a: &Result<Value, RuntimeError>, b: &Result<Value, RuntimeError>) -> Option<f64> {
    match (a, b) {
        (Ok(x), Ok(y)) => value_error(x, y),
        (Err(x), Err(y)) => (x == y).then_some(0.0),
        _ => None,
    }
}

/// Evaluates every function of `names` on the standard sample in both modules.
pub(crate) fn compare(original: &ShaderModule, other: &ShaderModule, names: &[String]) -> Result<OracleResult, String> {
    let mut result = OracleResult { functions: 0, samples: 0, max_rel_error: 0.0 };
    for name in names {
        let f = original.find_function(name).ok_or_else(|| format!("no function {name}"))?;
        if other.find_function(name).is_none() {
            return Err(format!("{name} is missing after import"));
        }
        let params: Vec<TypeExpr> = f.params.iter().map(|p| p.ty.clone()).collect();
        for args in sample_inputs(&params) {
            let a = eval_function(original, name, &args);
            let b = eval_function(other, name, &args);
            match values_agree(&a, &b) {
                Some(e) if e <= TOLERANCE => result.max_rel_error = result.max_rel_error.max(e),
                _ => return Err(format!("{name}({}) gave {a:?} and {b:?}", list(&args))),
            }
            result.samples += 1;
        }
        result.functions += 1;
    }
    Ok(result)
}

fn list(args: &[Value]) -> String {
    args.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_is_deterministic_and_in_range() {
        let params = [TypeExpr::FLOAT, TypeExpr::INT, TypeExpr::vec(3)];
        let a = sample_inputs(&params);
        assert_eq!(a, sample_inputs(&params));
        assert_eq!(a.len(), SAMPLE_POINTS);
        for args in &a {
            assert!(matches!(args[0], Value::Float(x) if (-1.5..=1.5).contains(&x)));
            assert!(matches!(args[1], Value::Int(i) if (0..=7).contains(&i)));
            assert!(matches!(&args[2], Value::Vector(v) if v.len() == 3));
        }
    }

    #[test]
    fn agreement_rules() {
        let ok = |v| Ok::<_, RuntimeError>(v);
        assert_eq!(values_agree(&ok(Value::Float(f64::NAN)), &ok(Value::Float(f64::NAN))), Some(0.0));
        assert!(values_agree(&ok(Value::Float(1.0)), &ok(Value::Float(1.0 + 1e-9))).unwrap() < TOLERANCE);
        assert!(values_agree(&ok(Value::Float(1.0)), &ok(Value::Float(1.1))).unwrap() > TOLERANCE);
        assert_eq!(values_agree(&ok(Value::Int(1)), &ok(Value::Float(1.0))), None);
        assert_eq!(values_agree(&Err(RuntimeError::DivisionByZero), &Err(RuntimeError::DivisionByZero)), Some(0.0));
        assert_eq!(values_agree(&Err(RuntimeError::DivisionByZero), &ok(Value::Int(0))), None);
    }
}
