use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use super::*;

/// Structural checks over a module: name resolution of named types,
/// uniqueness, type well-formedness and struct recursion. Expression typing is
/// left to the semantics pass.
pub fn validate_program(module: &ShaderModule) -> Vec<Diagnostic> {
    let mut v = Validator { module, diags: Vec::new() };
    v.run();
    let mut diags = v.diags;
    sort_diagnostics(&mut diags);
    diags
}

struct Validator<'a> {
    module: &'a ShaderModule,
    diags: Vec<Diagnostic>,
}

#[derive(Clone, Copy, PartialEq)]
enum Site {
    Member,
    Param { kernel: bool },
    Return,
    Global(GlobalQualifier),
    Local,
    Constructor,
}

impl Validator<'_> {
    fn error(&mut self, loc: &SourceLocation, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(loc.clone(), msg));
    }

    fn run(&mut self) {
        let m = self.module;
        // Each stage has its own namespace for functions, so stage entries may share a name.
        let mut seen: HashMap<(Option<Stage>, &str), &SourceLocation> = HashMap::new();
        let names = m
            .structs
            .iter()
            .map(|s| (None, s.name.as_str(), &s.location))
            .chain(m.globals.iter().map(|g| (None, g.name.as_str(), &g.location)))
            .chain(m.functions.iter().map(|f| (f.stage, f.name.as_str(), &f.location)));
        for (stage, name, loc) in names {
            let clash = match stage {
                Some(_) => seen.get(&(stage, name)).or_else(|| seen.get(&(None, name))).copied(),
                None => seen.iter().find(|((_, n), _)| *n == name).map(|(_, l)| *l),
            };
            if let Some(first) = clash {
                let msg = format!("duplicate top-level name {name} (first declared at {first})");
                self.error(loc, msg);
            } else {
                seen.insert((stage, name), loc);
            }
        }

        for s in &m.structs {
            self.check_struct(s);
        }
        self.check_recursion();

        for g in &m.globals {
            self.check_type(&g.ty, Site::Global(g.qualifier), &g.location);
            match (g.qualifier, &g.init) {
                (GlobalQualifier::Const, None) => {
                    self.error(&g.location, format!("const global {} requires an initializer", g.name))
                }
                (GlobalQualifier::Uniform, Some(_)) => {
                    self.error(&g.location, format!("uniform {} cannot have an initializer", g.name))
                }
                _ => {}
            }
            if let Some(init) = &g.init {
                self.check_expr_types(init);
            }
        }

        let mut entries: HashMap<Stage, &SourceLocation> = HashMap::new();
        for f in &m.functions {
            self.check_function(f);
            if f.is_entry_point() {
                let stage = f.stage.expect("entry points are staged");
                if let Entry::Vacant(e) = entries.entry(stage) {
                    e.insert(&f.location);
                } else {
                    self.error(&f.location, format!("more than one {stage} entry point"));
                }
            }
        }
    }

    fn check_struct(&mut self, s: &StructDecl) {
        let mut names = HashSet::new();
        for member in &s.members {
            if !names.insert(member.name.as_str()) {
                self.error(&s.location, format!("duplicate member {} in struct {}", member.name, s.name));
            }
            if member.ty.is_void() {
                self.error(&s.location, format!("member {} of struct {} has type void", member.name, s.name));
            }
            self.check_type(&member.ty, Site::Member, &s.location);
        }
    }

    fn check_recursion(&mut self) {
        // Depth-first search over the struct containment graph.
        let graph: HashMap<&str, Vec<&str>> = self
            .module
            .structs
            .iter()
            .map(|s| {
                let deps = s
                    .members
                    .iter()
                    .filter_map(|m| match m.ty.innermost() {
                        TypeExpr::Named(n) => Some(n.as_str()),
                        _ => None,
                    })
                    .collect();
                (s.name.as_str(), deps)
            })
            .collect();
        for s in &self.module.structs {
            let mut stack = vec![s.name.as_str()];
            let mut visited = HashSet::new();
            let mut recursive = false;
            while let Some(n) = stack.pop() {
                for &dep in graph.get(n).map(Vec::as_slice).unwrap_or(&[]) {
                    if dep == s.name {
                        recursive = true;
                    } else if visited.insert(dep) {
                        stack.push(dep);
                    }
                }
            }
            if recursive {
                self.error(&s.location, format!("recursive struct {}", s.name));
            }
        }
    }

    fn check_function(&mut self, f: &FunctionDecl) {
        if matches!(f.stage, Some(Stage::Vertex | Stage::Fragment)) && f.name != "main" {
            self.error(
                &f.location,
                format!("{} stage function must be named main, found {}", f.stage.unwrap(), f.name),
            );
        }
        let mut names = HashSet::new();
        for p in &f.params {
            if !names.insert(p.name.as_str()) {
                self.error(&f.location, format!("duplicate parameter {} in function {}", p.name, f.name));
            }
            if p.ty.is_void() {
                self.error(&f.location, format!("parameter {} of function {} has type void", p.name, f.name));
            }
            self.check_type(&p.ty, Site::Param { kernel: f.is_kernel() }, &f.location);
        }
        self.check_type(&f.return_type, Site::Return, &f.location);
        for s in &f.body {
            s.visit_stmts(&mut |st| {
                if let StmtKind::VarDecl { name, ty, .. } = &st.kind {
                    if ty.is_void() {
                        self.diags
                            .push(Diagnostic::error(st.location.clone(), format!("variable {name} has type void")));
                    }
                    self.check_type(ty, Site::Local, &st.location);
                }
            });
            let mut exprs = Vec::new();
            s.visit_exprs(&mut |e| exprs.push(e));
            for e in exprs {
                if let ExprKind::Construct { ty, .. } = &e.kind {
                    self.check_type(ty, Site::Constructor, &e.location);
                }
            }
        }
    }

    fn check_expr_types(&mut self, e: &Expr) {
        let mut exprs = Vec::new();
        e.visit(&mut |x| exprs.push(x));
        for x in exprs {
            if let ExprKind::Construct { ty, .. } = &x.kind {
                self.check_type(ty, Site::Constructor, &x.location);
            }
        }
    }

    fn check_type(&mut self, ty: &TypeExpr, site: Site, loc: &SourceLocation) {
        self.check_type_inner(ty, site, loc, true);
    }

    fn check_type_inner(&mut self, ty: &TypeExpr, site: Site, loc: &SourceLocation, outermost: bool) {
        match ty {
            TypeExpr::Scalar(_) | TypeExpr::Sampler2D => {}
            TypeExpr::Vector(kind, dim) => {
                if !(2..=4).contains(dim) {
                    self.error(loc, format!("vector dimension {dim} out of range 2..4"));
                }
                if *kind != ScalarKind::Float {
                    self.error(loc, format!("only float vectors are supported, found {} elements", kind.name()));
                }
            }
            TypeExpr::Matrix(r, c) => {
                if r != c || !(2..=4).contains(r) {
                    self.error(loc, format!("only square matrices mat2..mat4 are supported, found {r}x{c}"));
                }
            }
            TypeExpr::Array(inner, size) => {
                match size {
                    Some(0) => self.error(loc, "array size must be at least 1"),
                    None => {
                        let allowed = outermost
                            && matches!(site, Site::Param { kernel: true } | Site::Global(GlobalQualifier::Plain));
                        if !allowed {
                            self.error(loc, "unsized arrays are only allowed as kernel parameters or plain globals");
                        }
                    }
                    Some(_) => {}
                }
                if inner.is_void() {
                    self.error(loc, "array of void");
                }
                self.check_type_inner(inner, site, loc, false);
            }
            TypeExpr::Named(name) => {
                if self.module.find_struct(name).is_none() {
                    self.error(loc, format!("unresolved type {name}"));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(line: u32) -> SourceLocation {
        SourceLocation::new("t.cgl", line, 1)
    }

    fn strukt(name: &str, members: Vec<(&str, TypeExpr)>, line: u32) -> StructDecl {
        StructDecl {
            name: name.into(),
            members: members.into_iter().map(|(n, ty)| StructMember { name: n.into(), ty }).collect(),
            attributes: vec![],
            location: loc(line),
        }
    }

    #[test]
    fn unresolved_named_type() {
        let mut m = ShaderModule::new("M");
        m.structs.push(strukt("A", vec![("f", TypeExpr::named("Foo"))], 2));
        let d = validate_program(&m);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("unresolved type Foo"), "{d:?}");
    }

    #[test]
    fn self_referential_struct() {
        let mut m = ShaderModule::new("M");
        m.structs.push(strukt("Node", vec![("next", TypeExpr::named("Node"))], 2));
        let d = validate_program(&m);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("recursive struct"), "{d:?}");
    }

    #[test]
    fn indirect_recursion_through_array() {
        let mut m = ShaderModule::new("M");
        m.structs.push(strukt("A", vec![("b", TypeExpr::array(TypeExpr::named("B"), Some(2)))], 2));
        m.structs.push(strukt("B", vec![("a", TypeExpr::named("A"))], 3));
        let d = validate_program(&m);
        assert_eq!(d.iter().filter(|d| d.message.contains("recursive struct")).count(), 2);
    }

    #[test]
    fn zero_sized_array_and_bad_matrix() {
        let mut m = ShaderModule::new("M");
        m.structs.push(strukt(
            "S",
            vec![("a", TypeExpr::array(TypeExpr::FLOAT, Some(0))), ("m", TypeExpr::Matrix(2, 3))],
            2,
        ));
        let d = validate_program(&m);
        assert_eq!(d.len(), 2, "{d:?}");
    }

    #[test]
    fn duplicate_names_are_reported_in_location_order() {
        let mut m = ShaderModule::new("M");
        m.structs.push(strukt("S", vec![("x", TypeExpr::FLOAT), ("x", TypeExpr::FLOAT)], 5));
        m.globals.push(GlobalVar {
            name: "S".into(),
            ty: TypeExpr::FLOAT,
            qualifier: GlobalQualifier::Uniform,
            init: None,
            location: loc(2),
        });
        let d = validate_program(&m);
        assert_eq!(d.len(), 2);
        assert!(d[0].location.line <= d[1].location.line);
        assert_eq!(d, validate_program(&m));
    }
}
