//! Token-level machinery shared by the Athena and Orion frontends.
//!
//! Both grammars are whitespace-separated and newline-insensitive, with `//`
//! comments to end of line. Athena additionally lexes `/.../` regex literals;
//! that mode is switched on per frontend so a leading slash in Orion input is
//! always a comment or an error.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Regex literal, pattern text without the delimiting slashes.
    Regex(String),
    Colon,
    DoubleColon,
    Comma,
    Dot,
    DotDot,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Lt,
    Gt,
    Plus,
    Minus,
    Question,
    Amp,
    Star,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Regex(r) => write!(f, "`/{r}/`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::DoubleColon => write!(f, "`::`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::DotDot => write!(f, "`..`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Question => write!(f, "`?`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

/// A token with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

pub fn tokenize(text: &str, regex_literals: bool) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut column: u32 = 1;

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            tokens.push(Token {
                tok: $tok,
                line: $l,
                column: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            '/' => {
                chars.next();
                column += 1;
                if chars.peek() == Some(&'/') {
                    // Comment to end of line.
                    for c in chars.by_ref() {
                        if c == '\n' {
                            line += 1;
                            column = 1;
                            break;
                        }
                    }
                } else if regex_literals {
                    let mut pattern = String::new();
                    let mut closed = false;
                    while let Some(c) = chars.next() {
                        column += 1;
                        match c {
                            '/' => {
                                closed = true;
                                break;
                            }
                            '\n' => break,
                            '\\' => {
                                // `\/` escapes the delimiter; every other
                                // escape is kept verbatim.
                                match chars.next() {
                                    Some('/') => {
                                        pattern.push('/');
                                        column += 1;
                                    }
                                    Some(e) => {
                                        pattern.push('\\');
                                        pattern.push(e);
                                        column += 1;
                                    }
                                    None => break,
                                }
                            }
                            c => pattern.push(c),
                        }
                    }
                    if !closed {
                        return Err(LexError {
                            line: l,
                            column: col,
                            message: "unterminated regex literal".to_string(),
                        });
                    }
                    push!(Tok::Regex(pattern), l, col);
                } else {
                    return Err(LexError {
                        line: l,
                        column: col,
                        message: "unexpected `/`".to_string(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(ident), l, col);
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                let n = digits.parse::<i64>().map_err(|_| LexError {
                    line: l,
                    column: col,
                    message: format!("integer literal `{digits}` out of range"),
                })?;
                push!(Tok::Int(n), l, col);
            }
            ':' => {
                chars.next();
                column += 1;
                if chars.peek() == Some(&':') {
                    chars.next();
                    column += 1;
                    push!(Tok::DoubleColon, l, col);
                } else {
                    push!(Tok::Colon, l, col);
                }
            }
            '.' => {
                chars.next();
                column += 1;
                if chars.peek() == Some(&'.') {
                    chars.next();
                    column += 1;
                    push!(Tok::DotDot, l, col);
                } else {
                    push!(Tok::Dot, l, col);
                }
            }
            ',' => {
                chars.next();
                column += 1;
                push!(Tok::Comma, l, col);
            }
            '{' => {
                chars.next();
                column += 1;
                push!(Tok::LBrace, l, col);
            }
            '}' => {
                chars.next();
                column += 1;
                push!(Tok::RBrace, l, col);
            }
            '(' => {
                chars.next();
                column += 1;
                push!(Tok::LParen, l, col);
            }
            ')' => {
                chars.next();
                column += 1;
                push!(Tok::RParen, l, col);
            }
            '<' => {
                chars.next();
                column += 1;
                push!(Tok::Lt, l, col);
            }
            '>' => {
                chars.next();
                column += 1;
                push!(Tok::Gt, l, col);
            }
            '+' => {
                chars.next();
                column += 1;
                push!(Tok::Plus, l, col);
            }
            '-' => {
                chars.next();
                column += 1;
                push!(Tok::Minus, l, col);
            }
            '?' => {
                chars.next();
                column += 1;
                push!(Tok::Question, l, col);
            }
            '&' => {
                chars.next();
                column += 1;
                push!(Tok::Amp, l, col);
            }
            '*' => {
                chars.next();
                column += 1;
                push!(Tok::Star, l, col);
            }
            '=' => {
                chars.next();
                column += 1;
                push!(Tok::Eq, l, col);
            }
            c => {
                return Err(LexError {
                    line: l,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    push!(Tok::Eof, line, column);
    Ok(tokens)
}

/// Cursor over a token stream with single-token lookahead helpers.
pub struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(tokens: Vec<Token>) -> Cursor {
        Cursor { tokens, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn peek_at(&self, offset: usize) -> &Token {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    pub fn next(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    /// Consumes the next token if it equals `tok`.
    pub fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.next();
            true
        } else {
            false
        }
    }

    /// True if the next token is the identifier `word`.
    pub fn at_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    pub fn eat_ident(&mut self, word: &str) -> bool {
        if self.at_ident(word) {
            self.next();
            true
        } else {
            false
        }
    }
}
