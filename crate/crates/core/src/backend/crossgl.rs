use super::common::*;
use super::{CodegenError, Generator, OutputUnit, TargetLanguage};
use crate::ir::*;

/// Prints modules back to CrossGL source.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossGlGenerator;

struct Flavor;

pub(crate) fn crossgl_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Array(..) => {
            let dims: String =
                t.array_dims().iter().map(|d| d.map_or("[]".to_string(), |n| format!("[{n}]"))).collect();
            format!("{}{dims}", t.innermost())
        }
        other => other.to_string(),
    }
}

impl CFlavor for Flavor {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::CrossGL
    }

    fn ident(&self, name: &str) -> String {
        name.to_string()
    }

    fn type_name(&self, t: &TypeExpr) -> CResult<String> {
        Ok(t.to_string())
    }

    fn construct(&self, ty: &TypeExpr, _args: &[Expr], printed: Vec<P>) -> CResult<P> {
        Ok(call_text(&ty.to_string(), &printed))
    }

    fn call(&self, callee: &str, _args: &[Expr], printed: Vec<P>, _loc: &SourceLocation) -> CResult<P> {
        Ok(call_text(callee, &printed))
    }

    fn intrinsic(&self, name: &str, axis: usize) -> P {
        P::atom(format!("{name}({axis})"))
    }
}

fn attr_arg(a: &AttrArg) -> String {
    match a {
        AttrArg::Int(v) => v.to_string(),
        AttrArg::Str(s) => {
            let ident = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if ident {
                s.clone()
            } else {
                format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
            }
        }
    }
}

fn attributes(attrs: &[Attribute]) -> Vec<String> {
    attrs
        .iter()
        .map(|a| {
            if a.args.is_empty() {
                format!("@{}", a.name)
            } else {
                let args: Vec<String> = a.args.iter().map(attr_arg).collect();
                format!("@{}({})", a.name, args.join(", "))
            }
        })
        .collect()
}

fn function_header(f: &FunctionDecl) -> CResult<String> {
    let params = f
        .params
        .iter()
        .map(|p| {
            let mut s: String = attributes(&p.attributes).into_iter().map(|a| a + " ").collect();
            s.push_str(&Flavor.declare(&p.ty, &p.name)?);
            Ok(s)
        })
        .collect::<CResult<Vec<_>>>()?;
    Ok(format!("{} {}({})", f.return_type, f.name, params.join(", ")))
}

/// CrossGL source for `module`. Re-parsing the text yields a module equal
/// to the input under [`ast_equal`].
pub fn print_crossgl(module: &ShaderModule) -> Result<String, CodegenError> {
    let mut w = CWriter::new(&Flavor);
    w.open(format!("shader {}", module.name));
    for s in &module.structs {
        for a in attributes(&s.attributes) {
            w.line(a);
        }
        w.open(format!("struct {}", s.name));
        for m in &s.members {
            w.line(format!("{};", Flavor.declare(&m.ty, &m.name)?));
        }
        w.close("");
        w.blank();
    }
    for g in &module.globals {
        let qualifier = match g.qualifier {
            GlobalQualifier::Uniform => "uniform ",
            GlobalQualifier::Const => "const ",
            GlobalQualifier::Plain => "",
        };
        let decl = Flavor.declare(&g.ty, &g.name)?;
        match &g.init {
            Some(e) => {
                let init = w.expr(e)?.text;
                w.line(format!("{qualifier}{decl} = {init};"));
            }
            None => w.line(format!("{qualifier}{decl};")),
        }
    }
    if !module.globals.is_empty() {
        w.blank();
    }
    for f in &module.functions {
        if let Some(stage) = f.stage {
            w.open(stage.keyword());
        }
        for a in attributes(&f.attributes) {
            w.line(a);
        }
        w.function(&function_header(f)?, &[], &f.body)?;
        if f.stage.is_some() {
            w.close("");
        }
        w.blank();
    }
    while w.out.ends_with("\n\n") {
        w.out.pop();
    }
    w.close("");
    Ok(w.out)
}

impl Generator for CrossGlGenerator {
    fn target(&self) -> TargetLanguage {
        TargetLanguage::CrossGL
    }

    fn map_type(&self, ty: &TypeExpr) -> Result<String, CodegenError> {
        Ok(crossgl_type(ty))
    }

    fn generate(&self, module: &ShaderModule) -> Result<Vec<OutputUnit>, CodegenError> {
        Ok(vec![OutputUnit {
            suggested_filename: format!("{}{}", module.name, TargetLanguage::CrossGL.extension(None)),
            target: TargetLanguage::CrossGL,
            text: print_crossgl(module)?,
        }])
    }
}
