use std::collections::BTreeMap;

use super::{ImportError, Imported};
use crate::backend::cuda::{RESERVED, RUNTIME_GUARD};
use crate::frontend::parser::crossgl_builtin_type;
use crate::frontend::{tokenize_with, Dialect, LexRules, Parser, Token, TokenKind};
use crate::ir::*;
use crate::semantics::lookup_builtin;

const KEYWORDS: &[&str] = &[
    "struct",
    "if",
    "else",
    "for",
    "while",
    "do",
    "switch",
    "return",
    "break",
    "continue",
    "true",
    "false",
    "void",
    "int",
    "float",
    "bool",
    "const",
    "__global__",
    "__device__",
    "__host__",
    "__constant__",
    "__shared__",
    "__forceinline__",
    "__restrict__",
    "inline",
    "static",
    "extern",
    "template",
    "typedef",
    "unsigned",
];

const FUNCTION_QUALIFIERS: &[&str] =
    &["__global__", "__device__", "__host__", "__constant__", "__shared__", "__forceinline__", "inline", "static"];

struct CudaDialect;

impl Dialect for CudaDialect {
    fn builtin_type(&self, name: &str) -> Option<TypeExpr> {
        Some(match name {
            "float2" => TypeExpr::vec(2),
            "float3" => TypeExpr::vec(3),
            "float4" => TypeExpr::vec(4),
            "float2x2" => TypeExpr::mat(2),
            "float3x3" => TypeExpr::mat(3),
            "float4x4" => TypeExpr::mat(4),
            "cudaTextureObject_t" => TypeExpr::Sampler2D,
            "int" | "float" | "bool" | "void" => crossgl_builtin_type(name)?,
            _ => return None,
        })
    }

    fn c_casts(&self) -> bool {
        true
    }

    fn pointers(&self) -> bool {
        true
    }

    fn type_qualifiers(&self) -> &[&str] {
        &["const", "__restrict__"]
    }
}

/// Blanks out the generated runtime block, keeping line numbers intact.
fn strip_runtime(source: &str) -> String {
    let open = format!("#ifndef {RUNTIME_GUARD}");
    let close = format!("#endif // {RUNTIME_GUARD}");
    let mut out = String::with_capacity(source.len());
    let mut inside = false;
    for line in source.lines() {
        let t = line.trim();
        if t == open {
            inside = true;
        }
        if !inside {
            out.push_str(line);
        }
        if inside && t == close {
            inside = false;
        }
        out.push('\n');
    }
    out
}

/// `// launch with blockDim = dim3(x, y, z)` comments, keyed by line.
fn launch_comments(source: &str) -> BTreeMap<u32, [u32; 3]> {
    let mut found = BTreeMap::new();
    for (i, line) in source.lines().enumerate() {
        let Some(rest) = line.trim().strip_prefix("// launch with blockDim = dim3(") else { continue };
        let Some(args) = rest.strip_suffix(')') else { continue };
        let dims: Vec<u32> = args.split(',').filter_map(|a| a.trim().parse().ok()).collect();
        if let [x, y, z] = dims[..] {
            found.insert(i as u32 + 1, [x, y, z]);
        }
    }
    found
}

/// Folds `cgl_swizzle2<0, 1>` into one identifier token so the shared
/// expression grammar can read it as a plain call.
fn merge_templates(tokens: Vec<Token>) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        let templated = t.kind == TokenKind::Identifier
            && (t.text.starts_with("cgl_swizzle") || t.text.starts_with("cgl_set_swizzle"))
            && tokens.get(i + 1).is_some_and(|n| n.text == "<");
        if templated {
            let mut j = i + 2;
            let mut idx = Vec::new();
            while let Some(n) = tokens.get(j) {
                match n.kind {
                    TokenKind::IntLit => idx.push(n.text.clone()),
                    _ if n.text == "," => {}
                    _ => break,
                }
                j += 1;
            }
            if tokens.get(j).is_some_and(|n| n.text == ">") {
                let mut merged = t.clone();
                merged.text = format!("{}<{}>", t.text, idx.join(","));
                out.push(merged);
                i = j + 1;
                continue;
            }
        }
        out.push(t.clone());
        i += 1;
    }
    out
}

/// Number of tokens in the braced block starting at the current token, and
/// whether it contains a kernel launch.
fn block_extent(p: &Parser) -> Result<(usize, Vec<SourceLocation>), ImportError> {
    let mut depth = 0usize;
    let mut launches = Vec::new();
    let mut n = 0;
    loop {
        let t = p.peek_at(n);
        match t.kind {
            TokenKind::Eof => return Err(p.error::<()>("'}'").unwrap_err().into()),
            TokenKind::Operator if t.text == "<<<" => launches.push(t.location.clone()),
            _ if t.text == "{" => depth += 1,
            _ if t.text == "}" => {
                depth -= 1;
                if depth == 0 {
                    return Ok((n + 1, launches));
                }
            }
            _ => {}
        }
        n += 1;
    }
}

fn parse_params(p: &mut Parser) -> Result<Vec<Param>, ImportError> {
    p.expect("(")?;
    let mut params = Vec::new();
    if p.check("void") && p.check_at(1, ")") {
        p.advance();
    }
    while !p.eat(")") {
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

/// Reverses the backend's identifier escaping (`u_cgl_x`, `min_`).
fn unescape(name: &mut String) {
    if let Some(rest) = name.strip_prefix("u_") {
        if rest.starts_with("cgl_") || rest.starts_with("make_") || rest.starts_with("__") {
            *name = rest.to_string();
            return;
        }
    }
    if let Some(stem) = name.strip_suffix('_') {
        if RESERVED.contains(&stem) && !matches!(stem, "main" | "vertex_main" | "fragment_main" | "compute_main") {
            name.truncate(stem.len());
        }
    }
}

fn unescape_type(t: &mut TypeExpr) {
    match t {
        TypeExpr::Named(n) => unescape(n),
        TypeExpr::Array(inner, _) => unescape_type(inner),
        _ => {}
    }
}

fn swizzle_of(callee: &str, prefix: &str) -> Option<String> {
    let rest = callee.strip_prefix(prefix)?;
    let (_, idx) = rest.split_once('<')?;
    let idx = idx.strip_suffix('>')?;
    idx.split(',').map(|i| i.trim().parse::<usize>().ok().and_then(|i| "xyzw".chars().nth(i))).collect()
}

fn matrix_or_vector(name: &str) -> Option<TypeExpr> {
    let dims = name.strip_prefix("make_float")?;
    match dims.as_bytes() {
        [n @ b'2'..=b'4'] => Some(TypeExpr::vec(n - b'0')),
        [n @ b'2'..=b'4', b'x', m] if m == n => Some(TypeExpr::mat(n - b'0')),
        _ => None,
    }
}

fn thread_intrinsic(builtin: &str) -> Option<&'static str> {
    Some(match builtin {
        "threadIdx" => "local_id",
        "blockIdx" => "group_id",
        "blockDim" => "group_size",
        _ => return None,
    })
}

/// Maps runtime helpers, constructors and thread indices back to CrossGL.
fn lower_body(body: &mut [Stmt], structs: &[String]) -> Result<(), ImportError> {
    let mut error: Option<ImportError> = None;
    let mut fail = |loc: &SourceLocation, what: String| {
        error.get_or_insert_with(|| ImportError::unsupported(loc, what));
    };
    for s in body.iter_mut() {
        s.rewrite_exprs(&mut |e| {
            let loc = e.location.clone();
            match &mut e.kind {
                ExprKind::Call { callee, args } => {
                    if let Some(components) = swizzle_of(callee, "cgl_swizzle") {
                        if args.len() == 1 {
                            *e = Expr::field(args.remove(0), components, loc);
                        }
                        return;
                    }
                    if callee.starts_with("cgl_set_swizzle") {
                        return;
                    }
                    if let Some(ty) = matrix_or_vector(callee) {
                        *e = Expr::construct(ty, std::mem::take(args), loc);
                        return;
                    }
                    if let Some(s) = callee.strip_prefix("make_").filter(|s| structs.iter().any(|n| n == s)) {
                        *e = Expr::construct(TypeExpr::named(s), std::mem::take(args), loc);
                        return;
                    }
                    if let Some(b) = callee.strip_prefix("cgl_") {
                        if lookup_builtin(b).is_some() {
                            *callee = b.to_string();
                        } else {
                            fail(&loc, format!("runtime helper '{callee}'"));
                        }
                        return;
                    }
                    if callee.starts_with("tex") || callee.starts_with("surf") {
                        fail(&loc, format!("texture or surface operation '{callee}'"));
                    } else if callee.starts_with("__") || callee.starts_with("atomic") {
                        fail(&loc, format!("device intrinsic '{callee}'"));
                    } else {
                        unescape(callee);
                    }
                }
                ExprKind::MemberOrSwizzle { base, name } => {
                    if let ExprKind::Var(b) = &base.kind {
                        if let (Some(f), Some(a)) = (thread_intrinsic(b), "xyz".find(name.as_str())) {
                            if name.len() == 1 {
                                *e = Expr::call(f, vec![Expr::int(a as i64, loc.clone())], loc);
                                return;
                            }
                        }
                    }
                    unescape(name);
                }
                ExprKind::Construct { ty, args } if *ty == TypeExpr::INT && args.len() == 1 => {
                    if matches!(&args[0].kind, ExprKind::Call { callee, .. } if thread_intrinsic_name(callee)) {
                        *e = args.remove(0);
                    }
                }
                ExprKind::Var(n) if !is_thread_builtin(n) => unescape(n),
                ExprKind::Construct { ty, .. } => unescape_type(ty),
                _ => {}
            }
        });
        s.rewrite_stmts(&mut |s| match &mut s.kind {
            StmtKind::Expr(Expr { kind: ExprKind::Call { callee, args }, location, .. })
                if callee.starts_with("cgl_set_swizzle") && args.len() == 2 =>
            {
                let Some(components) = swizzle_of(callee, "cgl_set_swizzle") else { return };
                let value = args.pop().expect("two args");
                let base = args.pop().expect("two args");
                let target = Expr::field(base, components, location.clone());
                s.kind = StmtKind::Assign { target, op: AssignOp::Assign, value };
            }
            StmtKind::VarDecl { name, ty, .. } => {
                unescape(name);
                unescape_type(ty);
            }
            _ => {}
        });
    }
    if let Some(e) = error {
        return Err(e);
    }
    let mut leftover = None;
    visit_block_exprs(body, &mut |e| {
        if let ExprKind::Var(n) = &e.kind {
            if is_thread_builtin(n) {
                leftover.get_or_insert_with(|| ImportError::unsupported(&e.location, format!("builtin '{n}'")));
            }
        }
    });
    leftover.map_or(Ok(()), Err)
}

fn is_thread_builtin(name: &str) -> bool {
    matches!(name, "gridDim" | "warpSize" | "threadIdx" | "blockIdx" | "blockDim")
}

fn thread_intrinsic_name(callee: &str) -> bool {
    matches!(callee, "local_id" | "group_id" | "group_size")
}

/// Reads a CUDA translation unit. Host code is skipped with warnings.
pub fn import_cuda(name: &str, source: &str, file: &str) -> Result<Imported, ImportError> {
    let stripped = strip_runtime(source);
    let launches = launch_comments(&stripped);
    let rules = LexRules { keywords: KEYWORDS, relaxed_floats: true, directives: true, launch_brackets: true };
    let tokens = merge_templates(tokenize_with(&stripped, file, &rules)?);
    let mut p = Parser::new(&tokens, &CudaDialect);
    let mut module = ShaderModule::new(name);
    let mut warnings = Vec::new();
    while !p.at_eof() {
        let loc = p.loc();
        let t = p.peek();
        if t.kind == TokenKind::Directive {
            let word = t.text.trim_start_matches('#').split_whitespace().next().unwrap_or("");
            if !matches!(word, "include" | "pragma") {
                return Err(ImportError::unsupported(&loc, format!("preprocessor directive '{}'", t.text)));
            }
            p.advance();
            continue;
        }
        if p.check("template") || p.check("typedef") {
            return Err(ImportError::unsupported(&loc, format!("'{}' declaration", t.text)));
        }
        if p.check("struct") && p.check_at(2, "{") {
            p.advance();
            let mut sname = p.expect_ident()?;
            unescape(&mut sname);
            let mut members = parse_members(&mut p)?;
            for m in &mut members {
                unescape(&mut m.name);
                unescape_type(&mut m.ty);
            }
            p.expect(";")?;
            module.structs.push(StructDecl { name: sname, members, attributes: Vec::new(), location: loc });
            continue;
        }
        let mut qualifiers = Vec::new();
        while FUNCTION_QUALIFIERS.contains(&p.peek().text.as_str()) {
            qualifiers.push(p.advance().text.clone());
        }
        let has = |q: &str| qualifiers.iter().any(|x| x == q);
        if has("__shared__") {
            return Err(ImportError::unsupported(&loc, "shared memory"));
        }
        let mut ty = p.parse_type()?;
        let mut fname = p.expect_ident()?;
        unescape(&mut fname);
        if p.check("(") {
            let mut params = parse_params(&mut p)?;
            if p.eat(";") {
                continue;
            }
            let (extent, launch_sites) = block_extent(&p)?;
            if !has("__global__") && !has("__device__") {
                for site in launch_sites {
                    warnings.push(Diagnostic::warning(site, "kernel launch in host code skipped"));
                }
                warnings.push(Diagnostic::warning(loc, format!("host function '{fname}' skipped")));
                for _ in 0..extent {
                    p.advance();
                }
                continue;
            }
            if let Some(site) = launch_sites.first() {
                return Err(ImportError::unsupported(site, "kernel launch from device code"));
            }
            let mut body = p.parse_block()?;
            let structs: Vec<String> = module.structs.iter().map(|s| s.name.clone()).collect();
            lower_body(&mut body, &structs)?;
            for param in &mut params {
                unescape(&mut param.name);
                unescape_type(&mut param.ty);
            }
            unescape_type(&mut ty);
            let mut f = FunctionDecl {
                name: fname,
                params,
                return_type: ty,
                body,
                stage: None,
                attributes: Vec::new(),
                location: loc.clone(),
            };
            if has("__global__") {
                f.stage = Some(Stage::Compute);
                if f.name == "compute_main" {
                    f.name = "main".to_string();
                }
                let size = launches.get(&loc.line.saturating_sub(1)).copied().unwrap_or([64, 1, 1]);
                if size != [64, 1, 1] {
                    f.attributes
                        .push(Attribute::new("workgroup_size", size.iter().map(|v| AttrArg::Int(*v as i64)).collect()));
                }
            }
            module.functions.push(f);
            continue;
        }
        ty = p.parse_array_suffix(ty)?;
        let init = if p.eat("=") {
            let structs: Vec<String> = module.structs.iter().map(|s| s.name.clone()).collect();
            let mut holder = [Stmt::new(StmtKind::Return(Some(p.parse_expr()?)), loc.clone())];
            lower_body(&mut holder, &structs)?;
            let [Stmt { kind: StmtKind::Return(e), .. }] = holder else { unreachable!("built as a return") };
            e
        } else {
            None
        };
        p.expect(";")?;
        let qualifier = if has("__constant__") {
            GlobalQualifier::Const
        } else if has("__device__") {
            GlobalQualifier::Plain
        } else {
            warnings.push(Diagnostic::warning(loc, format!("host variable '{fname}' skipped")));
            continue;
        };
        unescape_type(&mut ty);
        module.globals.push(GlobalVar { name: fname, ty, qualifier, init, location: loc });
    }
    Ok(Imported { module, warnings })
}
