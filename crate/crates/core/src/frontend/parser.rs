//! Recursive-descent parsing of statements and expressions, shared by the
//! CrossGL frontend and the GLSL/CUDA importers. Top-level declarations are
//! dialect specific and live with each frontend.

use std::fmt;

use thiserror::Error;

use super::lexer::{Token, TokenKind};
use crate::ir::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub location: SourceLocation,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error: expected {}, found {}", self.location, self.expected, self.found)
    }
}

pub type PResult<T> = Result<T, ParseError>;

/// Language-specific pieces of the shared grammar.
pub trait Dialect {
    /// Built-in type spelled by `name`, if any.
    fn builtin_type(&self, name: &str) -> Option<TypeExpr>;

    /// Whether `(type) expr` casts are part of the language.
    fn c_casts(&self) -> bool {
        false
    }

    /// Whether `T* name` declares a pointer (mapped to an unsized array).
    fn pointers(&self) -> bool {
        false
    }

    /// Words skipped when they precede a type (`const` in CUDA parameters, etc.).
    fn type_qualifiers(&self) -> &[&str] {
        &[]
    }
}

pub struct CrossGlDialect;

pub fn crossgl_builtin_type(name: &str) -> Option<TypeExpr> {
    Some(match name {
        "int" => TypeExpr::INT,
        "float" => TypeExpr::FLOAT,
        "bool" => TypeExpr::BOOL,
        "void" => TypeExpr::VOID,
        "vec2" => TypeExpr::vec(2),
        "vec3" => TypeExpr::vec(3),
        "vec4" => TypeExpr::vec(4),
        "mat2" => TypeExpr::mat(2),
        "mat3" => TypeExpr::mat(3),
        "mat4" => TypeExpr::mat(4),
        "sampler2D" => TypeExpr::Sampler2D,
        _ => return None,
    })
}

impl Dialect for CrossGlDialect {
    fn builtin_type(&self, name: &str) -> Option<TypeExpr> {
        crossgl_builtin_type(name)
    }
}

pub struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    dialect: &'t dyn Dialect,
}

impl<'t> Parser<'t> {
    /// `tokens` must end with an EOF token.
    pub fn new(tokens: &'t [Token], dialect: &'t dyn Dialect) -> Self {
        assert!(tokens.last().is_some_and(|t| t.kind == TokenKind::Eof), "token stream must end in EOF");
        Self { tokens, pos: 0, dialect }
    }

    pub fn peek(&self) -> &'t Token {
        self.peek_at(0)
    }

    pub fn peek_at(&self, n: usize) -> &'t Token {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    pub fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    pub fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    pub fn loc(&self) -> SourceLocation {
        self.peek().location.clone()
    }

    /// Current token text matches `text` (any kind but literals).
    pub fn check(&self, text: &str) -> bool {
        let t = self.peek();
        t.text == text && !matches!(t.kind, TokenKind::StrLit | TokenKind::Eof)
    }

    pub fn check_at(&self, n: usize, text: &str) -> bool {
        let t = self.peek_at(n);
        t.text == text && !matches!(t.kind, TokenKind::StrLit | TokenKind::Eof)
    }

    pub fn eat(&mut self, text: &str) -> bool {
        if self.check(text) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(ParseError { location: t.location.clone(), expected: expected.into(), found: t.to_string() })
    }

    pub fn expect(&mut self, text: &str) -> PResult<&'t Token> {
        if self.check(text) {
            Ok(self.advance())
        } else {
            self.error(format!("'{text}'"))
        }
    }

    pub fn expect_ident(&mut self) -> PResult<String> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(self.advance().text.clone())
        } else {
            self.error("identifier")
        }
    }

    pub fn expect_int(&mut self) -> PResult<i64> {
        let t = self.peek();
        if t.kind == TokenKind::IntLit {
            let v = t.text.parse::<i64>().or_else(|_| self.error("integer literal in range"))?;
            self.advance();
            Ok(v)
        } else {
            self.error("integer literal")
        }
    }

    fn skip_type_qualifiers(&mut self) {
        while self.dialect.type_qualifiers().contains(&self.peek().text.as_str())
            && matches!(self.peek().kind, TokenKind::Keyword | TokenKind::Identifier)
        {
            self.advance();
        }
    }

    /// Whether the current position starts a type name (builtin or identifier).
    pub fn at_type(&self, n: usize) -> bool {
        let t = self.peek_at(n);
        match t.kind {
            TokenKind::Keyword | TokenKind::Identifier => {
                self.dialect.builtin_type(&t.text).is_some() || t.kind == TokenKind::Identifier
            }
            _ => false,
        }
    }

    fn at_builtin_type(&self, n: usize) -> bool {
        let t = self.peek_at(n);
        matches!(t.kind, TokenKind::Keyword | TokenKind::Identifier) && self.dialect.builtin_type(&t.text).is_some()
    }

    /// Base type name: a builtin type or a struct name. Pointer stars are
    /// folded into an unsized array when the dialect has pointers.
    pub fn parse_type(&mut self) -> PResult<TypeExpr> {
        self.skip_type_qualifiers();
        let t = self.peek();
        let ty = match t.kind {
            TokenKind::Keyword | TokenKind::Identifier => match self.dialect.builtin_type(&t.text) {
                Some(ty) => ty,
                None if t.kind == TokenKind::Identifier => TypeExpr::Named(t.text.clone()),
                None => return self.error("type"),
            },
            _ => return self.error("type"),
        };
        self.advance();
        if self.dialect.pointers() && self.eat("*") {
            self.skip_type_qualifiers();
            return Ok(TypeExpr::array(ty, None));
        }
        Ok(ty)
    }

    /// Array suffixes after a declarator name: `[4][2]`, `[]`.
    pub fn parse_array_suffix(&mut self, base: TypeExpr) -> PResult<TypeExpr> {
        let mut dims = Vec::new();
        while self.eat("[") {
            if self.eat("]") {
                dims.push(None);
                continue;
            }
            let n = self.expect_int()?;
            if !(0..=u32::MAX as i64).contains(&n) {
                return self.error("array size");
            }
            dims.push(Some(n as u32));
            self.expect("]")?;
        }
        // `T x[A][B]` is an A-element array of B-element arrays.
        Ok(dims.into_iter().rev().fold(base, TypeExpr::array))
    }

    pub fn parse_attributes(&mut self) -> PResult<Vec<Attribute>> {
        let mut attrs = Vec::new();
        while self.eat("@") {
            let name_tok = self.peek();
            if !matches!(name_tok.kind, TokenKind::Identifier | TokenKind::Keyword) {
                return self.error("attribute name");
            }
            self.advance();
            let mut args = Vec::new();
            if self.eat("(") {
                if !self.check(")") {
                    loop {
                        let t = self.peek();
                        let arg = match t.kind {
                            TokenKind::IntLit => AttrArg::Int(self.expect_int()?),
                            TokenKind::StrLit | TokenKind::Identifier | TokenKind::Keyword => {
                                self.advance();
                                AttrArg::Str(t.text.clone())
                            }
                            _ => return self.error("attribute argument"),
                        };
                        args.push(arg);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
            }
            attrs.push(Attribute { name: name_tok.text.clone(), args });
        }
        Ok(attrs)
    }

    /// `{ stmt* }`
    pub fn parse_block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.check("}") {
            if self.at_eof() {
                return self.error("'}'");
            }
            body.push(self.parse_stmt()?);
        }
        self.expect("}")?;
        Ok(body)
    }

    /// A braced block or a single statement.
    pub fn parse_body(&mut self) -> PResult<Vec<Stmt>> {
        if self.check("{") {
            self.parse_block()
        } else {
            Ok(vec![self.parse_stmt()?])
        }
    }

    fn at_declaration(&self) -> bool {
        let first = self.peek();
        let mut n = 0;
        while self.dialect.type_qualifiers().contains(&self.peek_at(n).text.as_str()) {
            n += 1;
        }
        let second = self.peek_at(n + 1);
        let starts_type =
            self.at_builtin_type(n) || (self.peek_at(n).kind == TokenKind::Identifier && first.kind != TokenKind::Eof);
        if !starts_type {
            return false;
        }
        second.kind == TokenKind::Identifier
            || (self.dialect.pointers()
                && second.text == "*"
                && self.peek_at(n + 2).kind == TokenKind::Identifier
                && self.at_builtin_type(n))
    }

    /// `T name[dims] (= init)?` without the trailing semicolon.
    pub fn parse_var_decl(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let base = self.parse_type()?;
        let name = self.expect_ident()?;
        let ty = self.parse_array_suffix(base)?;
        let init = if self.eat("=") { Some(self.parse_expr()?) } else { None };
        Ok(Stmt::new(StmtKind::VarDecl { name, ty, init }, loc))
    }

    pub fn parse_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        if self.check("{") {
            let body = self.parse_block()?;
            return Ok(Stmt::new(StmtKind::Block(body), loc));
        }
        if self.eat("if") {
            self.expect("(")?;
            let cond = self.parse_expr()?;
            self.expect(")")?;
            let then = self.parse_body()?;
            let otherwise = if self.eat("else") { Some(self.parse_body()?) } else { None };
            return Ok(Stmt::new(StmtKind::If { cond, then, otherwise }, loc));
        }
        if self.eat("while") {
            self.expect("(")?;
            let cond = self.parse_expr()?;
            self.expect(")")?;
            let body = self.parse_body()?;
            return Ok(Stmt::new(StmtKind::While { cond, body }, loc));
        }
        if self.eat("for") {
            self.expect("(")?;
            let init = if self.check(";") { None } else { Some(Box::new(self.parse_simple_stmt()?)) };
            self.expect(";")?;
            let cond = if self.check(";") { None } else { Some(self.parse_expr()?) };
            self.expect(";")?;
            let step = if self.check(")") { None } else { Some(Box::new(self.parse_simple_stmt()?)) };
            self.expect(")")?;
            let body = self.parse_body()?;
            return Ok(Stmt::new(StmtKind::For { init, cond, step, body }, loc));
        }
        if self.eat("return") {
            let value = if self.check(";") { None } else { Some(self.parse_expr()?) };
            self.expect(";")?;
            return Ok(Stmt::new(StmtKind::Return(value), loc));
        }
        if self.eat("break") {
            self.expect(";")?;
            return Ok(Stmt::new(StmtKind::Break, loc));
        }
        if self.eat("continue") {
            self.expect(";")?;
            return Ok(Stmt::new(StmtKind::Continue, loc));
        }
        let s = self.parse_simple_stmt()?;
        self.expect(";")?;
        Ok(s)
    }

    /// Declarations, assignments, increments and expression statements.
    pub fn parse_simple_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        if self.at_declaration() {
            return self.parse_var_decl();
        }
        if self.check("++") || self.check("--") {
            let op = if self.advance().text == "++" { AssignOp::Add } else { AssignOp::Sub };
            let target = self.parse_unary()?;
            let one = Expr::int(1, loc.clone());
            return Ok(Stmt::new(StmtKind::Assign { target, op, value: one }, loc));
        }
        let expr = self.parse_expr()?;
        if let Some(op) = AssignOp::from_symbol(&self.peek().text).filter(|_| self.peek().kind == TokenKind::Operator) {
            self.advance();
            let value = self.parse_expr()?;
            return Ok(Stmt::new(StmtKind::Assign { target: expr, op, value }, loc));
        }
        if self.check("++") || self.check("--") {
            let op = if self.advance().text == "++" { AssignOp::Add } else { AssignOp::Sub };
            let one = Expr::int(1, self.loc());
            return Ok(Stmt::new(StmtKind::Assign { target: expr, op, value: one }, loc));
        }
        Ok(Stmt::new(StmtKind::Expr(expr), loc))
    }

    pub fn parse_expr(&mut self) -> PResult<Expr> {
        let cond = self.parse_binary(BinaryOp::Or.precedence())?;
        if self.check("?") {
            let loc = cond.location.clone();
            self.advance();
            let then = self.parse_expr()?;
            self.expect(":")?;
            let otherwise = self.parse_expr()?;
            return Ok(Expr::new(
                ExprKind::Ternary { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) },
                loc,
            ));
        }
        Ok(cond)
    }

    fn peek_binary_op(&self) -> Option<BinaryOp> {
        let t = self.peek();
        if t.kind != TokenKind::Operator {
            return None;
        }
        BinaryOp::from_symbol(&t.text)
    }

    /// Precedence climbing over left-associative binary operators.
    fn parse_binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.peek_binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.parse_binary(prec + 1)?;
            let loc = lhs.location.clone();
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
        Ok(lhs)
    }

    pub fn parse_unary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let op = match self.peek().text.as_str() {
            "-" if self.peek().kind == TokenKind::Operator => Some(UnaryOp::Neg),
            "!" if self.peek().kind == TokenKind::Operator => Some(UnaryOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.parse_unary()?;
            return Ok(Expr::new(ExprKind::Unary { op, operand: Box::new(operand) }, loc));
        }
        if self.dialect.c_casts() && self.check("(") && self.at_builtin_type(1) && self.check_at(2, ")") {
            self.advance();
            let ty = self.parse_type()?;
            self.expect(")")?;
            let operand = self.parse_unary()?;
            return Ok(Expr::construct(ty, vec![operand], loc));
        }
        self.parse_postfix()
    }

    fn parse_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.check(")") {
            loop {
                args.push(self.parse_expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut e = self.parse_primary()?;
        loop {
            let loc = self.loc();
            if self.eat(".") {
                let t = self.peek();
                if !matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword) {
                    return self.error("member name");
                }
                self.advance();
                e = Expr::field(e, t.text.clone(), loc);
            } else if self.check("[") {
                self.advance();
                let index = self.parse_expr()?;
                self.expect("]")?;
                e = Expr::index(e, index, loc);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        let loc = t.location.clone();
        match t.kind {
            TokenKind::IntLit => {
                let v = self.expect_int()?;
                Ok(Expr::int(v, loc))
            }
            TokenKind::FloatLit => {
                let v: f64 = t.text.parse().or_else(|_| self.error("float literal"))?;
                self.advance();
                Ok(Expr::float(v, loc))
            }
            TokenKind::Keyword if t.text == "true" || t.text == "false" => {
                self.advance();
                Ok(Expr::new(ExprKind::BoolLit(t.text == "true"), loc))
            }
            TokenKind::Keyword | TokenKind::Identifier
                if self.dialect.builtin_type(&t.text).is_some() && self.check_at(1, "(") =>
            {
                let ty = self.dialect.builtin_type(&t.text).expect("checked");
                self.advance();
                let args = self.parse_args()?;
                Ok(Expr::construct(ty, args, loc))
            }
            TokenKind::Identifier => {
                self.advance();
                if self.check("(") {
                    let args = self.parse_args()?;
                    Ok(Expr::call(t.text.clone(), args, loc))
                } else {
                    Ok(Expr::var(t.text.clone(), loc))
                }
            }
            TokenKind::Punct if t.text == "(" => {
                self.advance();
                let e = self.parse_expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}
