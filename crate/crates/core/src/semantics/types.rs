use thiserror::Error;

use crate::ir::{BinaryOp, ScalarKind, StructDecl, TypeExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("no rule for {left} {op} {right}", op = .op.symbol())]
    NoRule { op: BinaryOp, left: TypeExpr, right: TypeExpr },
    #[error("invalid swizzle .{components} on {base}: {reason}")]
    Swizzle { base: TypeExpr, components: String, reason: String },
    #[error("invalid constructor {ty}({args}): {reason}")]
    Constructor { ty: TypeExpr, args: String, reason: String },
}

fn is_num(t: &TypeExpr) -> bool {
    t.is_numeric_scalar()
}

/// Result type of `left op right`.
///
/// int and float mix to float in arithmetic; vectors combine componentwise
/// with vectors of the same size or broadcast scalars; `*` also covers
/// mat*mat, mat*vec and vec*mat (row-vector convention for the latter).
/// Comparisons need identical operand types after int to float promotion.
pub fn unify_types(left: &TypeExpr, right: &TypeExpr, op: BinaryOp) -> Result<TypeExpr, TypeError> {
    use TypeExpr::*;
    let no_rule = || TypeError::NoRule { op, left: left.clone(), right: right.clone() };
    let promoted = |a: &TypeExpr, b: &TypeExpr| -> Option<TypeExpr> {
        match (a, b) {
            _ if a == b => Some(a.clone()),
            (Scalar(ScalarKind::Int), Scalar(ScalarKind::Float))
            | (Scalar(ScalarKind::Float), Scalar(ScalarKind::Int)) => Some(TypeExpr::FLOAT),
            _ => None,
        }
    };
    match op {
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => match (left, right) {
            (a, b) if is_num(a) && is_num(b) => promoted(a, b).ok_or_else(no_rule),
            (Vector(_, n), Vector(_, m)) if n == m => Ok(left.clone()),
            (Vector(..), s) if is_num(s) => Ok(left.clone()),
            (s, Vector(..)) if is_num(s) => Ok(right.clone()),
            (Matrix(n, _), Matrix(m, _)) if op == BinaryOp::Mul && n == m => Ok(left.clone()),
            (Matrix(n, _), Vector(_, m)) if op == BinaryOp::Mul && n == m => Ok(right.clone()),
            (Vector(_, n), Matrix(m, _)) if op == BinaryOp::Mul && n == m => Ok(left.clone()),
            _ => Err(no_rule()),
        },
        BinaryOp::Rem => match (left, right) {
            (Scalar(ScalarKind::Int), Scalar(ScalarKind::Int)) => Ok(TypeExpr::INT),
            _ => Err(no_rule()),
        },
        BinaryOp::Eq | BinaryOp::Ne => {
            let comparable =
                |t: &TypeExpr| matches!(t, Scalar(k) if *k != ScalarKind::Void) || matches!(t, Vector(..) | Matrix(..));
            match promoted(left, right) {
                Some(t) if comparable(&t) => Ok(TypeExpr::BOOL),
                _ => Err(no_rule()),
            }
        }
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
            if is_num(left) && is_num(right) {
                Ok(TypeExpr::BOOL)
            } else {
                Err(no_rule())
            }
        }
        BinaryOp::And | BinaryOp::Or => {
            if *left == TypeExpr::BOOL && *right == TypeExpr::BOOL {
                Ok(TypeExpr::BOOL)
            } else {
                Err(no_rule())
            }
        }
    }
}

pub fn swizzle_index(c: char) -> Option<usize> {
    match c {
        'x' => Some(0),
        'y' => Some(1),
        'z' => Some(2),
        'w' => Some(3),
        _ => None,
    }
}

pub fn is_swizzle_name(name: &str) -> bool {
    (1..=4).contains(&name.len()) && name.chars().all(|c| swizzle_index(c).is_some())
}

/// Result type of `base.components`; `write` additionally requires distinct components.
pub fn resolve_swizzle(base: &TypeExpr, components: &str, write: bool) -> Result<TypeExpr, TypeError> {
    let err = |reason: String| TypeError::Swizzle { base: base.clone(), components: components.into(), reason };
    let TypeExpr::Vector(_, dim) = base else {
        return Err(err("base is not a vector".into()));
    };
    if !(1..=4).contains(&components.len()) {
        return Err(err("swizzles select 1 to 4 components".into()));
    }
    let mut seen = [false; 4];
    for c in components.chars() {
        let Some(i) = swizzle_index(c) else {
            return Err(err(format!("'{c}' is not one of x, y, z, w")));
        };
        if i >= *dim as usize {
            return Err(err(format!("component '{c}' exceeds vec{dim}")));
        }
        if write && seen[i] {
            return Err(err(format!("component '{c}' repeated in assignment target")));
        }
        seen[i] = true;
    }
    Ok(match components.len() {
        1 => TypeExpr::FLOAT,
        n => TypeExpr::vec(n as u8),
    })
}

fn join(args: &[TypeExpr]) -> String {
    args.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Result type of a scalar, vector or matrix constructor call.
///
/// Vector constructors flatten their arguments' components (or splat a
/// single scalar); matrix constructors take one column vector per column.
pub fn check_constructor(ty: &TypeExpr, args: &[TypeExpr]) -> Result<TypeExpr, TypeError> {
    let err = |reason: String| TypeError::Constructor { ty: ty.clone(), args: join(args), reason };
    match ty {
        TypeExpr::Scalar(ScalarKind::Int | ScalarKind::Float) => match args {
            [a] if a.is_numeric_scalar() => Ok(ty.clone()),
            [_] => Err(err("scalar conversions take one int or float".into())),
            _ => Err(err(format!("expected 1 argument, found {}", args.len()))),
        },
        TypeExpr::Scalar(ScalarKind::Bool) => match args {
            [a] if *a == TypeExpr::BOOL => Ok(ty.clone()),
            _ => Err(err("bool takes one bool argument".into())),
        },
        TypeExpr::Vector(_, n) => {
            if let [a] = args {
                if a.is_numeric_scalar() {
                    return Ok(ty.clone());
                }
            }
            let mut total = 0;
            for a in args {
                match a.component_count() {
                    Some(c) => total += c,
                    None => return Err(err(format!("{a} cannot supply vector components"))),
                }
            }
            if total == *n as usize {
                Ok(ty.clone())
            } else {
                Err(err(format!("{total} components into {n}")))
            }
        }
        TypeExpr::Matrix(n, _) => {
            if args.len() != *n as usize {
                return Err(err(format!("expected {n} column vectors, found {} arguments", args.len())));
            }
            if args.iter().all(|a| *a == TypeExpr::vec(*n)) {
                Ok(ty.clone())
            } else {
                Err(err(format!("columns must be vec{n}")))
            }
        }
        _ => Err(err("type has no constructor".into())),
    }
}

/// Struct constructors take one argument per member, in order.
pub fn check_struct_constructor(decl: &StructDecl, args: &[TypeExpr]) -> Result<TypeExpr, TypeError> {
    let ty = TypeExpr::Named(decl.name.clone());
    let err = |reason: String| TypeError::Constructor { ty: ty.clone(), args: join(args), reason };
    if args.len() != decl.members.len() {
        return Err(err(format!("expected {} arguments, found {}", decl.members.len(), args.len())));
    }
    for (m, a) in decl.members.iter().zip(args) {
        let ok = m.ty == *a || (m.ty == TypeExpr::FLOAT && *a == TypeExpr::INT);
        if !ok {
            return Err(err(format!("member {} expects {}, found {a}", m.name, m.ty)));
        }
    }
    Ok(ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unify_examples() {
        let f = TypeExpr::FLOAT;
        assert_eq!(unify_types(&f, &f, BinaryOp::Add), Ok(f.clone()));
        assert_eq!(unify_types(&TypeExpr::vec(3), &f, BinaryOp::Mul), Ok(TypeExpr::vec(3)));
        assert_eq!(unify_types(&TypeExpr::mat(4), &TypeExpr::mat(4), BinaryOp::Mul), Ok(TypeExpr::mat(4)));
        assert_eq!(unify_types(&TypeExpr::mat(4), &TypeExpr::vec(4), BinaryOp::Mul), Ok(TypeExpr::vec(4)));
        assert_eq!(unify_types(&TypeExpr::vec(4), &TypeExpr::mat(4), BinaryOp::Mul), Ok(TypeExpr::vec(4)));
        assert!(matches!(unify_types(&TypeExpr::BOOL, &f, BinaryOp::Add), Err(TypeError::NoRule { .. })));
        assert_eq!(unify_types(&TypeExpr::INT, &f, BinaryOp::Sub), Ok(f.clone()));
        assert!(unify_types(&f, &f, BinaryOp::Rem).is_err());
        assert!(unify_types(&TypeExpr::mat(3), &TypeExpr::mat(3), BinaryOp::Add).is_err());
        assert_eq!(unify_types(&TypeExpr::INT, &f, BinaryOp::Lt), Ok(TypeExpr::BOOL));
        assert!(unify_types(&TypeExpr::vec(2), &TypeExpr::vec(3), BinaryOp::Eq).is_err());
    }

    #[test]
    fn swizzle_examples() {
        assert_eq!(resolve_swizzle(&TypeExpr::vec(4), "xyz", false), Ok(TypeExpr::vec(3)));
        assert_eq!(resolve_swizzle(&TypeExpr::vec(2), "x", false), Ok(TypeExpr::FLOAT));
        assert!(resolve_swizzle(&TypeExpr::vec(2), "z", false).is_err());
        assert_eq!(resolve_swizzle(&TypeExpr::vec(3), "xx", false), Ok(TypeExpr::vec(2)));
        assert!(resolve_swizzle(&TypeExpr::vec(3), "xx", true).is_err());
    }

    #[test]
    fn constructor_examples() {
        let v = |n| TypeExpr::vec(n);
        assert_eq!(check_constructor(&v(4), &[v(3), TypeExpr::FLOAT]), Ok(v(4)));
        assert_eq!(check_constructor(&v(3), &[TypeExpr::FLOAT]), Ok(v(3)));
        assert!(check_constructor(&v(4), &[v(2), v(3)]).is_err());
        assert_eq!(check_constructor(&TypeExpr::mat(2), &[v(2), v(2)]), Ok(TypeExpr::mat(2)));
        assert!(check_constructor(&TypeExpr::mat(2), &[v(3), v(3)]).is_err());
        assert_eq!(check_constructor(&TypeExpr::INT, &[TypeExpr::FLOAT]), Ok(TypeExpr::INT));
    }

    fn arb_type() -> impl Strategy<Value = TypeExpr> {
        prop_oneof![
            Just(TypeExpr::INT),
            Just(TypeExpr::FLOAT),
            Just(TypeExpr::BOOL),
            (2u8..=4).prop_map(TypeExpr::vec),
            (2u8..=4).prop_map(TypeExpr::mat),
            Just(TypeExpr::Sampler2D),
        ]
    }

    proptest! {
        #[test]
        fn commutative_operators_are_symmetric(a in arb_type(), b in arb_type()) {
            for op in [BinaryOp::Add, BinaryOp::Mul, BinaryOp::Eq, BinaryOp::Ne, BinaryOp::And, BinaryOp::Or] {
                let mat_vec = matches!((&a, &b), (TypeExpr::Matrix(..), TypeExpr::Vector(..)) | (TypeExpr::Vector(..), TypeExpr::Matrix(..)));
                if op == BinaryOp::Mul && mat_vec {
                    // Distinct rules, both defined.
                    prop_assert_eq!(unify_types(&a, &b, op).is_ok(), unify_types(&b, &a, op).is_ok());
                    continue;
                }
                prop_assert_eq!(unify_types(&a, &b, op).ok(), unify_types(&b, &a, op).ok());
            }
        }

        #[test]
        fn vector_constructor_counts(n in 2u8..=4, parts in proptest::collection::vec(1u8..=4, 1..5)) {
            let args: Vec<TypeExpr> = parts.iter().map(|&k| if k == 1 { TypeExpr::FLOAT } else { TypeExpr::vec(k) }).collect();
            let total: u32 = parts.iter().map(|&k| k as u32).sum();
            let ok = check_constructor(&TypeExpr::vec(n), &args).is_ok();
            let splat = parts == [1];
            prop_assert_eq!(ok, splat || total == n as u32);
        }
    }
}
