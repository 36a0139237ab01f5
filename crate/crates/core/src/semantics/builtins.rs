//! The builtin function table shared by the typechecker, the interpreter and
//! every backend.

use crate::ir::TypeExpr;

/// Parameter or result shape in a builtin signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// float, vec2, vec3 or vec4; all `Gen` slots in one call must agree.
    Gen,
    Float,
    Vec2,
    Vec3,
    Vec4,
    Sampler,
}

impl Shape {
    fn concrete(self) -> Option<TypeExpr> {
        Some(match self {
            Shape::Gen => return None,
            Shape::Float => TypeExpr::FLOAT,
            Shape::Vec2 => TypeExpr::vec(2),
            Shape::Vec3 => TypeExpr::vec(3),
            Shape::Vec4 => TypeExpr::vec(4),
            Shape::Sampler => TypeExpr::Sampler2D,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub params: &'static [Shape],
    pub result: Shape,
}

use Shape::*;

pub const BUILTINS: &[Builtin] = &[
    Builtin { name: "dot", params: &[Gen, Gen], result: Float },
    Builtin { name: "cross", params: &[Vec3, Vec3], result: Vec3 },
    Builtin { name: "normalize", params: &[Gen], result: Gen },
    Builtin { name: "length", params: &[Gen], result: Float },
    Builtin { name: "max", params: &[Gen, Gen], result: Gen },
    Builtin { name: "min", params: &[Gen, Gen], result: Gen },
    Builtin { name: "pow", params: &[Gen, Gen], result: Gen },
    Builtin { name: "sqrt", params: &[Gen], result: Gen },
    Builtin { name: "mix", params: &[Gen, Gen, Float], result: Gen },
    Builtin { name: "clamp", params: &[Gen, Float, Float], result: Gen },
    Builtin { name: "abs", params: &[Gen], result: Gen },
    Builtin { name: "floor", params: &[Gen], result: Gen },
    Builtin { name: "sin", params: &[Gen], result: Gen },
    Builtin { name: "cos", params: &[Gen], result: Gen },
    Builtin { name: "texture", params: &[Sampler, Vec2], result: Vec4 },
];

pub fn lookup_builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

fn is_gen(t: &TypeExpr) -> bool {
    matches!(t, TypeExpr::Vector(_, 2..=4)) || *t == TypeExpr::FLOAT
}

impl Builtin {
    /// Result type for the given argument types, or a reason they do not fit.
    pub fn resolve(&self, args: &[TypeExpr]) -> Result<TypeExpr, String> {
        if args.len() != self.params.len() {
            return Err(format!("{} expects {} arguments, found {}", self.name, self.params.len(), args.len()));
        }
        let mut gen: Option<&TypeExpr> = None;
        for (i, (shape, arg)) in self.params.iter().zip(args).enumerate() {
            match shape.concrete() {
                Some(t) if t == *arg => {}
                Some(t) => return Err(format!("argument {} of {} must be {t}, found {arg}", i + 1, self.name)),
                None => {
                    if !is_gen(arg) {
                        return Err(format!(
                            "argument {} of {} must be float or a float vector, found {arg}",
                            i + 1,
                            self.name
                        ));
                    }
                    match gen {
                        Some(g) if g != arg => {
                            return Err(format!("arguments of {} must share one type, found {g} and {arg}", self.name))
                        }
                        _ => gen = Some(arg),
                    }
                }
            }
        }
        Ok(match self.result.concrete() {
            Some(t) => t,
            None => gen.cloned().unwrap_or(TypeExpr::FLOAT),
        })
    }

    /// One concrete instantiation (generic slots become vec3).
    pub fn example_signature(&self) -> (Vec<TypeExpr>, TypeExpr) {
        let inst = |s: Shape| s.concrete().unwrap_or(TypeExpr::vec(3));
        (self.params.iter().map(|&s| inst(s)).collect(), inst(self.result))
    }
}

/// Thread-position intrinsics available inside compute-stage functions.
/// Each takes a literal axis 0..=2 and returns int.
pub const COMPUTE_INTRINSICS: &[&str] = &["local_id", "group_id", "group_size"];

pub fn is_compute_intrinsic(name: &str) -> bool {
    COMPUTE_INTRINSICS.contains(&name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve() {
        let dot = lookup_builtin("dot").unwrap();
        assert_eq!(dot.resolve(&[TypeExpr::vec(3), TypeExpr::vec(3)]), Ok(TypeExpr::FLOAT));
        assert!(dot.resolve(&[TypeExpr::vec(3), TypeExpr::vec(2)]).is_err());
        let mix = lookup_builtin("mix").unwrap();
        assert_eq!(mix.resolve(&[TypeExpr::vec(3), TypeExpr::vec(3), TypeExpr::FLOAT]), Ok(TypeExpr::vec(3)));
        assert!(lookup_builtin("max").unwrap().resolve(&[TypeExpr::FLOAT, TypeExpr::INT]).is_err());
        let tex = lookup_builtin("texture").unwrap();
        assert_eq!(tex.resolve(&[TypeExpr::Sampler2D, TypeExpr::vec(2)]), Ok(TypeExpr::vec(4)));
    }
}
