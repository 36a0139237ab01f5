use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ir::SourceLocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLit,
    FloatLit,
    StrLit,
    Operator,
    Punct,
    /// A whole `#...` line; only produced when the dialect allows directives.
    Directive,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub location: SourceLocation,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Eof => f.write_str("end of input"),
            _ => write!(f, "'{}'", self.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{location}: error: {message}")]
pub struct LexError {
    pub location: SourceLocation,
    pub message: String,
}

/// Per-language lexing rules.
#[derive(Debug, Clone)]
pub struct LexRules {
    pub keywords: &'static [&'static str],
    /// Accept `1.`, `.5`, `1e3` and an `f` suffix on float literals.
    pub relaxed_floats: bool,
    /// Emit `#` lines as directive tokens instead of failing.
    pub directives: bool,
    /// Recognise `<<<` and `>>>` launch brackets.
    pub launch_brackets: bool,
}

pub const CROSSGL_KEYWORDS: &[&str] = &[
    "shader",
    "struct",
    "vertex",
    "fragment",
    "compute",
    "uniform",
    "const",
    "if",
    "else",
    "for",
    "while",
    "return",
    "break",
    "continue",
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

impl LexRules {
    pub fn crossgl() -> Self {
        Self { keywords: CROSSGL_KEYWORDS, relaxed_floats: false, directives: false, launch_brackets: false }
    }
}

const OPERATORS: &[&str] = &[
    "<<<", ">>>", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "++", "--", "->", "+", "-", "*", "/",
    "%", "<", ">", "!", "=", "?", ":", "&",
];
const PUNCT: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', '@'];

/// Tokenizes CrossGL source.
pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, LexError> {
    tokenize_with(source, file, &LexRules::crossgl())
}

pub fn tokenize_with(source: &str, file: &str, rules: &LexRules) -> Result<Vec<Token>, LexError> {
    Lexer::new(source, file, rules).run()
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
    rules: &'a LexRules,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(source: &str, file: &str, rules: &'a LexRules) -> Self {
        Self { chars: source.chars().collect(), pos: 0, line: 1, col: 1, file: file.into(), rules, out: Vec::new() }
    }

    fn loc(&self) -> SourceLocation {
        SourceLocation { file: self.file.clone(), line: self.line, column: self.col }
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, text: String, location: SourceLocation) {
        self.out.push(Token { kind, text, location });
    }

    fn error(&self, location: SourceLocation, message: impl Into<String>) -> LexError {
        LexError { location, message: message.into() }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut at_line_start = true;
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                at_line_start = true;
                self.bump();
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let start = self.loc();
            if c == '/' && self.peek(1) == Some('/') {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == '/' && self.peek(1) == Some('*') {
                self.bump();
                self.bump();
                loop {
                    match self.peek(0) {
                        None => return Err(self.error(start, "unterminated block comment")),
                        Some('*') if self.peek(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            self.bump();
                        }
                    }
                }
                continue;
            }
            if c == '#' && self.rules.directives && at_line_start {
                let mut text = String::new();
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                self.push(TokenKind::Directive, text.trim_end().to_string(), start);
                continue;
            }
            at_line_start = false;
            if c.is_ascii_alphabetic() || c == '_' {
                let mut text = String::new();
                while let Some(c) = self.peek(0) {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                let kind = if self.rules.keywords.contains(&text.as_str()) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, text, start);
                continue;
            }
            if c.is_ascii_digit()
                || (c == '.' && self.rules.relaxed_floats && self.peek(1).is_some_and(|d| d.is_ascii_digit()))
            {
                self.number(start)?;
                continue;
            }
            if c == '"' {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => return Err(self.error(start, "unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(e) => text.push(e),
                            None => return Err(self.error(start, "unterminated string literal")),
                        },
                        Some(ch) => text.push(ch),
                    }
                }
                self.push(TokenKind::StrLit, text, start);
                continue;
            }
            if PUNCT.contains(&c) {
                self.bump();
                self.push(TokenKind::Punct, c.to_string(), start);
                continue;
            }
            let op = OPERATORS.iter().find(|op| {
                if (**op == "<<<" || **op == ">>>") && !self.rules.launch_brackets {
                    return false;
                }
                op.chars().enumerate().all(|(i, oc)| self.peek(i) == Some(oc))
            });
            if let Some(op) = op {
                for _ in 0..op.len() {
                    self.bump();
                }
                self.push(TokenKind::Operator, op.to_string(), start);
                continue;
            }
            return Err(self.error(start, format!("unrecognized character '{c}'")));
        }
        let end = self.loc();
        self.push(TokenKind::Eof, String::new(), end);
        Ok(self.out)
    }

    fn digits(&mut self, text: &mut String) -> usize {
        let mut n = 0;
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
                n += 1;
            } else {
                break;
            }
        }
        n
    }

    fn number(&mut self, start: SourceLocation) -> Result<(), LexError> {
        let mut text = String::new();
        let int_digits = self.digits(&mut text);
        let mut is_float = false;
        if self.peek(0) == Some('.') {
            let frac_follows = self.peek(1).is_some_and(|c| c.is_ascii_digit());
            let ident = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
            let bare_dot = self.rules.relaxed_floats
                && int_digits > 0
                && (!ident(self.peek(1)) || (matches!(self.peek(1), Some('f' | 'F')) && !ident(self.peek(2))));
            if !frac_follows && !bare_dot && self.rules.relaxed_floats {
                // `arr[2].x`: the dot is member access.
                self.push(TokenKind::IntLit, text, start);
                return Ok(());
            }
            if frac_follows || bare_dot {
                text.push('.');
                self.bump();
                self.digits(&mut text);
                is_float = true;
            } else {
                return Err(self.error(start, format!("malformed float literal '{text}.'")));
            }
        }
        if matches!(self.peek(0), Some('e' | 'E')) && (is_float || self.rules.relaxed_floats) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                text.push('e');
                self.bump();
                if sign {
                    text.push(self.bump().expect("sign present"));
                }
                self.digits(&mut text);
                is_float = true;
            }
        }
        if self.rules.relaxed_floats && matches!(self.peek(0), Some('f' | 'F')) {
            self.bump();
            is_float = true;
        }
        if self.peek(0).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(self.error(start, format!("invalid suffix on numeric literal '{text}'")));
        }
        if is_float && !text.contains('.') {
            // `1e3` or `1f` in relaxed dialects.
            match text.find('e') {
                Some(i) => text.insert_str(i, ".0"),
                None => text.push_str(".0"),
            }
        }
        if text.starts_with('.') {
            text.insert(0, '0');
        }
        if text.ends_with('.') {
            text.push('0');
        }
        let kind = if is_float { TokenKind::FloatLit } else { TokenKind::IntLit };
        self.push(kind, text, start);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src, "t.cgl").unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn shader_header() {
        use TokenKind::*;
        assert_eq!(
            kinds("shader ImageProcessor {"),
            vec![
                (Keyword, "shader".into()),
                (Identifier, "ImageProcessor".into()),
                (Punct, "{".into()),
                (Eof, "".into())
            ]
        );
    }

    #[test]
    fn single_float() {
        assert_eq!(kinds("1.0"), vec![(TokenKind::FloatLit, "1.0".into()), (TokenKind::Eof, "".into())]);
    }

    #[test]
    fn array_declaration() {
        use TokenKind::*;
        let toks = kinds("float values[1024];");
        assert_eq!(toks.len(), 7);
        assert_eq!(
            &toks[..6],
            &[
                (Keyword, "float".into()),
                (Identifier, "values".into()),
                (Punct, "[".into()),
                (IntLit, "1024".into()),
                (Punct, "]".into()),
                (Punct, ";".into()),
            ]
        );
    }

    #[test]
    fn comments_and_locations() {
        let toks = tokenize("// hi\n  /* a\n b */ x", "f").unwrap();
        assert_eq!(toks[0].text, "x");
        assert_eq!((toks[0].location.line, toks[0].location.column), (3, 7));
    }

    #[test]
    fn errors() {
        assert!(tokenize("/* open", "f").unwrap_err().message.contains("unterminated"));
        let e = tokenize("a $ b", "f").unwrap_err();
        assert_eq!(e.location.column, 3);
        assert!(tokenize("1.", "f").is_err());
        assert!(tokenize("#version 450", "f").is_err());
    }

    #[test]
    fn exponent_and_relaxed_forms() {
        assert_eq!(kinds("1.5e-3")[0], (TokenKind::FloatLit, "1.5e-3".into()));
        let rules = LexRules { relaxed_floats: true, directives: true, launch_brackets: true, ..LexRules::crossgl() };
        let toks = tokenize_with("#version 450\n0.5f 2.f .25 3e2 k<<<1, 2>>>", "f", &rules).unwrap();
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["#version 450", "0.5", "2.0", "0.25", "3.0e2", "k", "<<<", "1", ",", "2", ">>>", ""]);
    }
}
