use super::{merge_modules, ImportError, Imported};
use crate::backend::glsl::{FRAGMENT_ENTRY, RESERVED, VERTEX_ENTRY};
use crate::frontend::parser::crossgl_builtin_type;
use crate::frontend::{tokenize_with, Dialect, LexRules, Parser, TokenKind};
use crate::ir::*;

/// One GLSL compilation unit. `stage` is `None` for a library of helpers.
#[derive(Debug, Clone, Copy)]
pub struct GlslUnit<'a> {
    pub stage: Option<Stage>,
    pub source: &'a str,
    pub file: &'a str,
}

const KEYWORDS: &[&str] = &[
    "struct",
    "uniform",
    "const",
    "in",
    "out",
    "inout",
    "layout",
    "buffer",
    "shared",
    "flat",
    "smooth",
    "noperspective",
    "precision",
    "highp",
    "mediump",
    "lowp",
    "if",
    "else",
    "for",
    "while",
    "do",
    "switch",
    "return",
    "break",
    "continue",
    "discard",
    "true",
    "false",
    "void",
    "int",
    "float",
    "bool",
    "vec2",
    "vec3",
    "vec4",
    "mat2",
    "mat3",
    "mat4",
    "sampler2D",
];

const GEOMETRY_LAYOUT: &[&str] = &[
    "points",
    "lines",
    "lines_adjacency",
    "triangles",
    "triangles_adjacency",
    "line_strip",
    "triangle_strip",
    "max_vertices",
    "invocations",
    "vertices",
];

const WRAPPER_NAMES: &[&str] = &["main", "frag_color", "stage_in", "stage_out", "vertex_main", "fragment_main"];

struct GlslDialect;

impl Dialect for GlslDialect {
    fn builtin_type(&self, name: &str) -> Option<TypeExpr> {
        crossgl_builtin_type(name)
    }
}

struct Io {
    name: String,
    ty: TypeExpr,
}

struct UnitDecls {
    module: ShaderModule,
    ins: Vec<Io>,
    outs: Vec<Io>,
    kernel_name: Option<String>,
    local_size: Option<[u32; 3]>,
}

fn parse_layout(p: &mut Parser) -> Result<Vec<(String, Option<i64>)>, ImportError> {
    p.expect("(")?;
    let mut items = Vec::new();
    loop {
        let t = p.advance();
        if !matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword) {
            return Err(p.error::<()>("layout qualifier").unwrap_err().into());
        }
        let value = if p.eat("=") { Some(p.expect_int()?) } else { None };
        items.push((t.text.clone(), value));
        if !p.eat(",") {
            break;
        }
    }
    p.expect(")")?;
    Ok(items)
}

fn parse_unit(unit: &GlslUnit) -> Result<UnitDecls, ImportError> {
    let rules = LexRules { keywords: KEYWORDS, relaxed_floats: true, directives: true, launch_brackets: false };
    let tokens = tokenize_with(unit.source, unit.file, &rules)?;
    let mut p = Parser::new(&tokens, &GlslDialect);
    let mut d = UnitDecls {
        module: ShaderModule::new(""),
        ins: Vec::new(),
        outs: Vec::new(),
        kernel_name: None,
        local_size: None,
    };
    while !p.at_eof() {
        let loc = p.loc();
        let t = p.peek();
        if t.kind == TokenKind::Directive {
            let words: Vec<&str> = t.text.trim_start_matches('#').split_whitespace().collect();
            match words.as_slice() {
                ["version", ..] | ["extension", ..] => {}
                ["pragma", "kernel", name] => d.kernel_name = Some(name.to_string()),
                ["pragma", ..] => {}
                _ => return Err(ImportError::unsupported(&loc, format!("preprocessor directive '{}'", t.text))),
            }
            p.advance();
            continue;
        }
        if p.eat("precision") {
            while !p.eat(";") {
                if p.at_eof() {
                    return Err(p.error::<()>("';'").unwrap_err().into());
                }
                p.advance();
            }
            continue;
        }
        if p.eat("struct") {
            let name = p.expect_ident()?;
            let members = parse_members(&mut p)?;
            p.expect(";")?;
            d.module.structs.push(StructDecl { name, members, attributes: Vec::new(), location: loc });
            continue;
        }
        let layout = if p.eat("layout") { parse_layout(&mut p)? } else { Vec::new() };
        if let Some((q, _)) = layout.iter().find(|(q, _)| GEOMETRY_LAYOUT.contains(&q.as_str())) {
            return Err(ImportError::unsupported(&loc, format!("geometry or tessellation layout '{q}'")));
        }
        while p.eat("flat")
            || p.eat("smooth")
            || p.eat("noperspective")
            || p.eat("highp")
            || p.eat("mediump")
            || p.eat("lowp")
        {}
        if p.check("in") || p.check("out") {
            let is_in = p.advance().text == "in";
            if is_in && p.eat(";") {
                let get = |k: &str| {
                    layout.iter().find(|(q, _)| q == k).and_then(|(_, v)| *v).unwrap_or(1).clamp(1, u32::MAX as i64)
                        as u32
                };
                d.local_size = Some([get("local_size_x"), get("local_size_y"), get("local_size_z")]);
                continue;
            }
            if p.check_at(1, "{") {
                return Err(ImportError::unsupported(&loc, "interface block"));
            }
            let base = p.parse_type()?;
            let name = p.expect_ident()?;
            let ty = p.parse_array_suffix(base)?;
            p.expect(";")?;
            let io = Io { name, ty };
            if is_in {
                d.ins.push(io);
            } else {
                d.outs.push(io);
            }
            continue;
        }
        if p.eat("buffer") {
            p.expect_ident()?;
            let members = parse_members(&mut p)?;
            if !p.check(";") {
                return Err(ImportError::unsupported(&loc, "named buffer block instance"));
            }
            p.expect(";")?;
            for m in members {
                d.module.globals.push(GlobalVar {
                    name: m.name,
                    ty: m.ty,
                    qualifier: GlobalQualifier::Plain,
                    init: None,
                    location: loc.clone(),
                });
            }
            continue;
        }
        if p.check("shared") {
            return Err(ImportError::unsupported(&loc, "shared memory"));
        }
        let qualifier = if p.eat("uniform") {
            if p.check_at(1, "{") {
                return Err(ImportError::unsupported(&loc, "uniform block"));
            }
            Some(GlobalQualifier::Uniform)
        } else if p.eat("const") {
            Some(GlobalQualifier::Const)
        } else {
            None
        };
        let return_type = p.parse_type()?;
        let name = p.expect_ident()?;
        if qualifier.is_none() && p.check("(") {
            let params = parse_params(&mut p)?;
            if p.eat(";") {
                continue;
            }
            let body = p.parse_block()?;
            d.module.functions.push(FunctionDecl {
                name,
                params,
                return_type,
                body,
                stage: None,
                attributes: Vec::new(),
                location: loc,
            });
            continue;
        }
        let ty = p.parse_array_suffix(return_type)?;
        let init = if p.eat("=") { Some(p.parse_expr()?) } else { None };
        p.expect(";")?;
        d.module.globals.push(GlobalVar {
            name,
            ty,
            qualifier: qualifier.unwrap_or(GlobalQualifier::Plain),
            init,
            location: loc,
        });
    }
    Ok(d)
}

fn parse_members(p: &mut Parser) -> Result<Vec<StructMember>, ImportError> {
    p.expect("{")?;
    let mut members = Vec::new();
    while !p.eat("}") {
        let base = p.parse_type()?;
        let name = p.expect_ident()?;
        let ty = p.parse_array_suffix(base)?;
        p.expect(";")?;
        members.push(StructMember { name, ty });
    }
    Ok(members)
}

fn parse_params(p: &mut Parser) -> Result<Vec<Param>, ImportError> {
    p.expect("(")?;
    let mut params = Vec::new();
    if p.check("void") && p.check_at(1, ")") {
        p.advance();
    }
    while !p.eat(")") {
        let loc = p.loc();
        while p.eat("in") || p.eat("const") || p.eat("highp") || p.eat("mediump") || p.eat("lowp") {}
        if p.check("out") || p.check("inout") {
            return Err(ImportError::unsupported(&loc, "out parameter"));
        }
        let base = p.parse_type()?;
        let name = p.expect_ident()?;
        let ty = p.parse_array_suffix(base)?;
        params.push(Param::new(name, ty));
        if !p.eat(",") {
            p.expect(")")?;
            break;
        }
    }
    Ok(params)
}

fn all_bodies(module: &mut ShaderModule) -> impl Iterator<Item = &mut Stmt> {
    module.functions.iter_mut().flat_map(|f| f.body.iter_mut())
}

fn intrinsic_for(builtin: &str) -> Option<&'static str> {
    Some(match builtin {
        "gl_LocalInvocationID" => "local_id",
        "gl_WorkGroupID" => "group_id",
        "gl_WorkGroupSize" => "group_size",
        _ => return None,
    })
}

fn axis(name: &str) -> Option<i64> {
    ["x", "y", "z"].iter().position(|c| *c == name).map(|i| i as i64)
}

/// Compute builtins back to `local_id(axis)` and friends; any other `gl_`
/// name is outside the subset.
fn lower_builtins(module: &mut ShaderModule) -> Result<(), ImportError> {
    let mut error = None;
    for s in all_bodies(module) {
        s.rewrite_exprs(&mut |e| {
            let loc = e.location.clone();
            match &e.kind {
                ExprKind::MemberOrSwizzle { base, name } => {
                    let (ExprKind::Var(builtin), Some(a)) = (&base.kind, axis(name)) else { return };
                    let call = |f: &str| Expr::call(f, vec![Expr::int(a, loc.clone())], loc.clone());
                    if let Some(f) = intrinsic_for(builtin) {
                        *e = call(f);
                    } else if builtin == "gl_GlobalInvocationID" {
                        let base = Expr::binary(BinaryOp::Mul, call("group_id"), call("group_size"), loc.clone());
                        *e = Expr::binary(BinaryOp::Add, base, call("local_id"), loc.clone());
                    }
                }
                ExprKind::Construct { ty, args } if *ty == TypeExpr::INT && args.len() == 1 => {
                    if let ExprKind::Call { callee, .. } = &args[0].kind {
                        if matches!(callee.as_str(), "local_id" | "group_id" | "group_size") {
                            *e = args[0].clone();
                        }
                    } else if let ExprKind::Binary { rhs, .. } = &args[0].kind {
                        if matches!(&rhs.kind, ExprKind::Call { callee, .. } if callee == "local_id") {
                            *e = args[0].clone();
                        }
                    }
                }
                ExprKind::Call { callee, .. } if matches!(callee.as_str(), "EmitVertex" | "EndPrimitive") => {
                    error.get_or_insert_with(|| {
                        ImportError::unsupported(&loc, format!("geometry stage call '{callee}'"))
                    });
                }
                _ => {}
            }
        });
    }
    if let Some(e) = error {
        return Err(e);
    }
    for f in &module.functions {
        let mut leftover = None;
        visit_block_exprs(&f.body, &mut |e| match &e.kind {
            ExprKind::Var(n) if n.starts_with("gl_") => {
                leftover.get_or_insert_with(|| ImportError::unsupported(&e.location, format!("builtin '{n}'")));
            }
            _ => {}
        });
        if let Some(e) = leftover {
            return Err(e);
        }
    }
    Ok(())
}

fn unreserve(name: &mut String) {
    if let Some(stem) = name.strip_suffix('_') {
        if RESERVED.contains(&stem) && !WRAPPER_NAMES.contains(&stem) {
            name.truncate(stem.len());
        }
    }
}

fn unreserve_type(t: &mut TypeExpr) {
    match t {
        TypeExpr::Named(n) => unreserve(n),
        TypeExpr::Array(inner, _) => unreserve_type(inner),
        _ => {}
    }
}

/// Undoes the backend's `input` -> `input_` renaming of GLSL reserved words.
fn unreserve_module(module: &mut ShaderModule) {
    for s in &mut module.structs {
        unreserve(&mut s.name);
        for m in &mut s.members {
            unreserve(&mut m.name);
            unreserve_type(&mut m.ty);
        }
    }
    for g in &mut module.globals {
        unreserve(&mut g.name);
        unreserve_type(&mut g.ty);
    }
    for f in &mut module.functions {
        unreserve(&mut f.name);
        unreserve_type(&mut f.return_type);
        for p in &mut f.params {
            unreserve(&mut p.name);
            unreserve_type(&mut p.ty);
        }
        for s in &mut f.body {
            s.rewrite_stmts(&mut |s| {
                if let StmtKind::VarDecl { name, ty, .. } = &mut s.kind {
                    unreserve(name);
                    unreserve_type(ty);
                }
            });
            s.rewrite_exprs(&mut |e| match &mut e.kind {
                ExprKind::Var(n) | ExprKind::Call { callee: n, .. } | ExprKind::MemberOrSwizzle { name: n, .. } => {
                    unreserve(n)
                }
                ExprKind::Construct { ty, .. } => unreserve_type(ty),
                _ => {}
            });
        }
    }
}

enum Route {
    /// `name` becomes `record.member`.
    Member(&'static str),
    /// `name` becomes a plain local.
    Local,
}

/// Rewrites stage input/output variables in a hand-written `main` body and
/// makes every path return `result`.
fn reroute(body: &mut [Stmt], routes: &[(String, Route, String)], result: &Expr) {
    for s in body.iter_mut() {
        s.rewrite_exprs(&mut |e| {
            let ExprKind::Var(n) = &e.kind else { return };
            let Some((_, route, member)) = routes.iter().find(|(v, ..)| v == n) else { return };
            if let Route::Member(record) = route {
                let loc = e.location.clone();
                *e = Expr::field(Expr::var(*record, loc.clone()), member.clone(), loc);
            }
        });
        s.rewrite_stmts(&mut |s| {
            if let StmtKind::Return(value @ None) = &mut s.kind {
                *value = Some(result.clone());
            }
        });
    }
}

struct VertexOutputs {
    record: String,
    members: Vec<String>,
}

fn take_main(module: &mut ShaderModule, unit: &GlslUnit) -> Result<FunctionDecl, ImportError> {
    let i = module.functions.iter().position(|f| f.name == "main").ok_or_else(|| {
        ImportError::unsupported(&SourceLocation::new(unit.file, 1, 1), "stage unit without a main function")
    })?;
    Ok(module.functions.remove(i))
}

fn record(
    name: &str,
    members: Vec<StructMember>,
    module: &ShaderModule,
    loc: &SourceLocation,
) -> Result<StructDecl, ImportError> {
    if module.find_struct(name).is_some() {
        return Err(ImportError::Conflict { location: loc.clone(), name: name.to_string() });
    }
    Ok(StructDecl { name: name.to_string(), members, attributes: Vec::new(), location: loc.clone() })
}

fn members_of(ios: &[Io]) -> Vec<StructMember> {
    ios.iter().map(|io| StructMember { name: io.name.clone(), ty: io.ty.clone() }).collect()
}

fn uses_var(body: &[Stmt], name: &str) -> bool {
    let mut found = false;
    visit_block_exprs(body, &mut |e| {
        if matches!(&e.kind, ExprKind::Var(n) if n == name) {
            found = true;
        }
    });
    found
}

fn finish_body(body: &mut Vec<Stmt>, decl: Stmt, result: Expr, loc: &SourceLocation) {
    body.insert(0, decl);
    if !matches!(body.last().map(|s| &s.kind), Some(StmtKind::Return(_))) {
        body.push(Stmt::new(StmtKind::Return(Some(result)), loc.clone()));
    }
}

/// Builds a vertex entry from a parameterless `main` that talks through
/// `in`/`out` globals and `gl_Position`.
fn synthesize_vertex(d: &mut UnitDecls, unit: &GlslUnit) -> Result<(FunctionDecl, VertexOutputs), ImportError> {
    let mut main = take_main(&mut d.module, unit)?;
    let loc = main.location.clone();
    let mut routes: Vec<(String, Route, String)> = Vec::new();
    let mut params = Vec::new();
    if !d.ins.is_empty() {
        let s = record("VertexInput", members_of(&d.ins), &d.module, &loc)?;
        d.module.structs.push(s);
        params.push(Param::new("input", TypeExpr::named("VertexInput")));
        routes.extend(d.ins.iter().map(|io| (io.name.clone(), Route::Member("input"), io.name.clone())));
    }
    let mut outputs = members_of(&d.outs);
    routes.extend(d.outs.iter().map(|io| (io.name.clone(), Route::Member("output"), io.name.clone())));
    if uses_var(&main.body, "gl_Position") {
        if outputs.iter().any(|m| m.name == "position") {
            return Err(ImportError::Conflict { location: loc, name: "position".to_string() });
        }
        outputs.push(StructMember { name: "position".to_string(), ty: TypeExpr::vec(4) });
        routes.push(("gl_Position".to_string(), Route::Member("output"), "position".to_string()));
    }
    let names = outputs.iter().map(|m| m.name.clone()).collect();
    let s = record("VertexOutput", outputs, &d.module, &loc)?;
    d.module.structs.push(s);
    let result = Expr::var("output", loc.clone());
    reroute(&mut main.body, &routes, &result);
    let decl = Stmt::new(
        StmtKind::VarDecl { name: "output".into(), ty: TypeExpr::named("VertexOutput"), init: None },
        loc.clone(),
    );
    finish_body(&mut main.body, decl, result, &loc);
    main.params = params;
    main.return_type = TypeExpr::named("VertexOutput");
    main.stage = Some(Stage::Vertex);
    Ok((main, VertexOutputs { record: "VertexOutput".to_string(), members: names }))
}

fn synthesize_fragment(
    d: &mut UnitDecls,
    unit: &GlslUnit,
    vertex: Option<&VertexOutputs>,
) -> Result<FunctionDecl, ImportError> {
    let mut main = take_main(&mut d.module, unit)?;
    let loc = main.location.clone();
    let mut routes: Vec<(String, Route, String)> = Vec::new();
    let mut params = Vec::new();
    if !d.ins.is_empty() {
        let paired = vertex.filter(|v| d.ins.iter().all(|io| v.members.contains(&io.name)));
        let record_name = match paired {
            Some(v) => v.record.clone(),
            None => {
                let s = record("FragmentInput", members_of(&d.ins), &d.module, &loc)?;
                d.module.structs.push(s);
                "FragmentInput".to_string()
            }
        };
        params.push(Param::new("input", TypeExpr::named(record_name)));
        routes.extend(d.ins.iter().map(|io| (io.name.clone(), Route::Member("input"), io.name.clone())));
    }
    let (result, decl, return_type) = match d.outs.as_slice() {
        [] => return Err(ImportError::unsupported(&loc, "fragment stage without an output")),
        [single] => {
            routes.push((single.name.clone(), Route::Local, single.name.clone()));
            let decl = StmtKind::VarDecl { name: single.name.clone(), ty: single.ty.clone(), init: None };
            (Expr::var(single.name.clone(), loc.clone()), decl, single.ty.clone())
        }
        many => {
            let s = record("FragmentOutput", members_of(many), &d.module, &loc)?;
            d.module.structs.push(s);
            routes.extend(many.iter().map(|io| (io.name.clone(), Route::Member("output"), io.name.clone())));
            let ty = TypeExpr::named("FragmentOutput");
            let decl = StmtKind::VarDecl { name: "output".into(), ty: ty.clone(), init: None };
            (Expr::var("output", loc.clone()), decl, ty)
        }
    };
    reroute(&mut main.body, &routes, &result);
    finish_body(&mut main.body, Stmt::new(decl, loc.clone()), result, &loc);
    main.params = params;
    main.return_type = return_type;
    main.stage = Some(Stage::Fragment);
    Ok(main)
}

/// The wrapper `main` produced by this crate's GLSL backend: keep the real
/// entry, drop the wrapper.
fn unwrap_entry(d: &mut UnitDecls, stage: Stage) -> bool {
    let entry = if stage == Stage::Vertex { VERTEX_ENTRY } else { FRAGMENT_ENTRY };
    let has = |n: &str| d.module.functions.iter().any(|f| f.name == n);
    if !(has(entry) && has("main")) {
        return false;
    }
    d.module.functions.retain(|f| f.name != "main");
    let f = d.module.functions.iter_mut().find(|f| f.name == entry).expect("checked");
    f.name = "main".to_string();
    f.stage = Some(stage);
    true
}

fn stage_rank(stage: Option<Stage>) -> u8 {
    match stage {
        None => 0,
        Some(Stage::Vertex) => 1,
        Some(Stage::Fragment) => 2,
        Some(Stage::Compute) => 3,
    }
}

/// Reads GLSL compilation units back into one module.
pub fn import_glsl(name: &str, units: &[GlslUnit]) -> Result<Imported, ImportError> {
    let mut ordered: Vec<&GlslUnit> = units.iter().collect();
    ordered.sort_by_key(|u| stage_rank(u.stage));
    let mut module = ShaderModule::new(name);
    let mut vertex_outputs = None;
    for unit in ordered {
        let mut d = parse_unit(unit)?;
        let first_loc = SourceLocation::new(unit.file, 1, 1);
        match unit.stage {
            None => {
                if let Some(f) = d.module.find_function("main") {
                    return Err(ImportError::unsupported(&f.location, "entry point in a unit without a stage"));
                }
                if !d.ins.is_empty() || !d.outs.is_empty() {
                    return Err(ImportError::unsupported(&first_loc, "stage inputs in a library unit"));
                }
            }
            Some(Stage::Compute) => {
                if !d.ins.is_empty() || !d.outs.is_empty() {
                    return Err(ImportError::unsupported(&first_loc, "stage inputs in a compute unit"));
                }
                let mut kernel = take_main(&mut d.module, unit)?;
                kernel.name = d.kernel_name.clone().unwrap_or_else(|| "main".to_string());
                kernel.stage = Some(Stage::Compute);
                let size = d.local_size.unwrap_or([64, 1, 1]);
                if size != [64, 1, 1] {
                    let args = size.iter().map(|v| AttrArg::Int(*v as i64)).collect();
                    kernel.attributes.push(Attribute::new("workgroup_size", args));
                }
                d.module.functions.push(kernel);
            }
            Some(stage) => {
                if !unwrap_entry(&mut d, stage) {
                    let entry = if stage == Stage::Vertex {
                        let (entry, outputs) = synthesize_vertex(&mut d, unit)?;
                        vertex_outputs = Some(outputs);
                        entry
                    } else {
                        synthesize_fragment(&mut d, unit, vertex_outputs.as_ref())?
                    };
                    d.module.functions.push(entry);
                }
            }
        }
        lower_builtins(&mut d.module)?;
        unreserve_module(&mut d.module);
        merge_modules(&mut module, d.module)?;
    }
    Ok(Imported { module, warnings: Vec::new() })
}
