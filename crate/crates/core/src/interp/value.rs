use std::fmt;

use crate::ir::{ScalarKind, ShaderModule, TypeExpr};

/// A runtime value. Matrices are stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i32),
    Float(f64),
    Bool(bool),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Array(Vec<Value>),
    Record {
        name: String,
        fields: Vec<(String, Value)>,
    },
    /// Stands in for any bound texture; sampling returns a checkerboard.
    Sampler,
}

impl Value {
    pub fn vec(components: &[f64]) -> Value {
        Value::Vector(components.to_vec())
    }

    /// The all-zero value of `ty`. `None` for unknown records and unsized arrays.
    pub fn zero(ty: &TypeExpr, module: &ShaderModule) -> Option<Value> {
        Some(match ty {
            TypeExpr::Scalar(ScalarKind::Int) => Value::Int(0),
            TypeExpr::Scalar(ScalarKind::Float) => Value::Float(0.0),
            TypeExpr::Scalar(ScalarKind::Bool) => Value::Bool(false),
            TypeExpr::Scalar(ScalarKind::Void) => return None,
            TypeExpr::Vector(_, n) => Value::Vector(vec![0.0; *n as usize]),
            TypeExpr::Matrix(c, r) => Value::Matrix(vec![vec![0.0; *r as usize]; *c as usize]),
            TypeExpr::Array(inner, Some(n)) => {
                let z = Value::zero(inner, module)?;
                Value::Array(vec![z; *n as usize])
            }
            TypeExpr::Array(_, None) => Value::Array(Vec::new()),
            TypeExpr::Named(name) => {
                let s = module.find_struct(name)?;
                let fields = s
                    .members
                    .iter()
                    .map(|m| Some((m.name.clone(), Value::zero(&m.ty, module)?)))
                    .collect::<Option<_>>()?;
                Value::Record { name: name.clone(), fields }
            }
            TypeExpr::Sampler2D => Value::Sampler,
        })
    }

    /// Whether the value has the shape of `ty`.
    pub fn conforms(&self, ty: &TypeExpr, module: &ShaderModule) -> bool {
        match (self, ty) {
            (Value::Int(_), TypeExpr::Scalar(ScalarKind::Int)) => true,
            (Value::Float(_), TypeExpr::Scalar(ScalarKind::Float)) => true,
            (Value::Bool(_), TypeExpr::Scalar(ScalarKind::Bool)) => true,
            (Value::Vector(v), TypeExpr::Vector(_, n)) => v.len() == *n as usize,
            (Value::Matrix(cols), TypeExpr::Matrix(c, r)) => {
                cols.len() == *c as usize && cols.iter().all(|col| col.len() == *r as usize)
            }
            (Value::Array(items), TypeExpr::Array(inner, size)) => {
                size.is_none_or(|n| items.len() == n as usize) && items.iter().all(|i| i.conforms(inner, module))
            }
            (Value::Record { name, fields }, TypeExpr::Named(n)) => {
                name == n
                    && module.find_struct(n).is_some_and(|s| {
                        s.members.len() == fields.len()
                            && s.members.iter().zip(fields).all(|(m, (f, v))| m.name == *f && v.conforms(&m.ty, module))
                    })
            }
            (Value::Sampler, TypeExpr::Sampler2D) => true,
            _ => false,
        }
    }

    /// Converts to `ty` where CrossGL allows it implicitly (int to float).
    pub fn coerce(self, ty: &TypeExpr) -> Value {
        match (self, ty) {
            (Value::Int(i), TypeExpr::Scalar(ScalarKind::Float)) => Value::Float(i as f64),
            (v, _) => v,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Short name of the value's shape, for error messages.
    pub fn kind(&self) -> String {
        match self {
            Value::Int(_) => "int".into(),
            Value::Float(_) => "float".into(),
            Value::Bool(_) => "bool".into(),
            Value::Vector(v) => format!("vec{}", v.len()),
            Value::Matrix(m) => format!("mat{}", m.len()),
            Value::Array(a) => format!("array of {}", a.len()),
            Value::Record { name, .. } => name.clone(),
            Value::Sampler => "sampler2D".into(),
        }
    }
}

/// Shortest round-trip digits, always with a decimal point.
pub(crate) fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:?}");
    match s.find('e') {
        Some(i) if !s[..i].contains('.') => format!("{}.0{}", &s[..i], &s[i..]),
        _ => s,
    }
}

fn list(f: &mut fmt::Formatter<'_>, items: &[f64]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(&format_float(*x))?;
    }
    Ok(())
}

/// Prints values in CrossGL constructor syntax.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Vector(v) => {
                write!(f, "vec{}(", v.len())?;
                list(f, v)?;
                f.write_str(")")
            }
            Value::Matrix(cols) => {
                write!(f, "mat{}(", cols.len())?;
                for (i, c) in cols.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "vec{}(", c.len())?;
                    list(f, c)?;
                    f.write_str(")")?;
                }
                f.write_str(")")
            }
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Record { name, fields } => {
                write!(f, "{name} {{ ")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {v}")?;
                }
                f.write_str(" }")
            }
            Value::Sampler => f.write_str("sampler2D"),
        }
    }
}
