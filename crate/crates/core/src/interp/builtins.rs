use super::{RuntimeError, Value};

fn floats(v: &Value) -> Result<Vec<f64>, RuntimeError> {
    match v {
        Value::Int(i) => Ok(vec![*i as f64]),
        Value::Float(f) => Ok(vec![*f]),
        Value::Vector(c) => Ok(c.clone()),
        other => Err(RuntimeError::Shape(format!("expected float or vector, found {}", other.kind()))),
    }
}

/// Rebuilds a value of the same shape as `like` from components.
fn shaped(like: &Value, c: Vec<f64>) -> Value {
    match like {
        Value::Vector(_) => Value::Vector(c),
        _ => Value::Float(c[0]),
    }
}

fn map(v: &Value, f: impl Fn(f64) -> f64) -> Result<Value, RuntimeError> {
    Ok(shaped(v, floats(v)?.into_iter().map(f).collect()))
}

fn zip(a: &Value, b: &Value, f: impl Fn(f64, f64) -> f64) -> Result<Value, RuntimeError> {
    let (x, y) = (floats(a)?, floats(b)?);
    let n = x.len().max(y.len());
    let at = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    let like = if x.len() >= y.len() { a } else { b };
    Ok(shaped(like, (0..n).map(|i| f(at(&x, i), at(&y, i))).collect()))
}

fn dot(a: &Value, b: &Value) -> Result<f64, RuntimeError> {
    Ok(floats(a)?.iter().zip(floats(b)?).map(|(x, y)| x * y).sum())
}

/// Procedural checkerboard standing in for every texture.
pub(crate) fn checkerboard(uv: &[f64]) -> Value {
    let c = ((uv[0] * 8.0).floor() + (uv[1] * 8.0).floor()).rem_euclid(2.0);
    Value::Vector(vec![c, c, c, 1.0])
}

pub(crate) fn call(name: &str, args: &[Value]) -> Result<Value, RuntimeError> {
    let arg =
        |i: usize| args.get(i).ok_or_else(|| RuntimeError::Shape(format!("{name} is missing argument {}", i + 1)));
    match name {
        "dot" => Ok(Value::Float(dot(arg(0)?, arg(1)?)?)),
        "length" => Ok(Value::Float(dot(arg(0)?, arg(0)?)?.sqrt())),
        "normalize" => {
            let v = arg(0)?;
            let len = dot(v, v)?.sqrt();
            map(v, |x| x / len)
        }
        "cross" => {
            let (a, b) = (floats(arg(0)?)?, floats(arg(1)?)?);
            if a.len() != 3 || b.len() != 3 {
                return Err(RuntimeError::Shape("cross expects two vec3 values".into()));
            }
            Ok(Value::Vector(vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]))
        }
        "max" => zip(arg(0)?, arg(1)?, f64::max),
        "min" => zip(arg(0)?, arg(1)?, f64::min),
        "pow" => zip(arg(0)?, arg(1)?, f64::powf),
        "sqrt" => map(arg(0)?, f64::sqrt),
        "abs" => map(arg(0)?, f64::abs),
        "floor" => map(arg(0)?, f64::floor),
        "sin" => map(arg(0)?, f64::sin),
        "cos" => map(arg(0)?, f64::cos),
        "mix" => {
            let t = arg(2)?.as_f64().ok_or_else(|| RuntimeError::Shape("mix weight must be a scalar".into()))?;
            zip(arg(0)?, arg(1)?, |a, b| {
                if t == 0.0 {
                    a
                } else if t == 1.0 {
                    b
                } else {
                    a * (1.0 - t) + b * t
                }
            })
        }
        "clamp" => {
            let lo = floats(arg(1)?)?[0];
            let hi = floats(arg(2)?)?[0];
            map(arg(0)?, |x| x.max(lo).min(hi))
        }
        "texture" => {
            let uv = floats(arg(1)?)?;
            if uv.len() != 2 {
                return Err(RuntimeError::Shape("texture coordinates must be vec2".into()));
            }
            Ok(checkerboard(&uv))
        }
        _ => Err(RuntimeError::UnknownFunction(name.to_string())),
    }
}
