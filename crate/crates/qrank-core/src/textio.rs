//! Shared tokenizer for the quiver and rep text formats.

use thiserror::Error;

/// Parse failure with 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    Equals,
    Arrow,
    Slash,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Colon => "':'".into(),
            Tok::Semi => "';'".into(),
            Tok::Comma => "','".into(),
            Tok::Equals => "'='".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

/// Token stream over text with `#` line comments. Identifiers are
/// `[A-Za-z_][A-Za-z0-9_.~-]*`; integers are decimal with optional sign.
pub struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Lexer {
    pub fn new(text: &str) -> Result<Lexer, ParseError> {
        let mut toks = Vec::new();
        let mut line = 1usize;
        let mut col = 1usize;
        let mut chars = text.chars().peekable();
        while let Some(&c) = chars.peek() {
            let (tline, tcol) = (line, col);
            let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
                let c = chars.next().unwrap();
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                c
            };
            if c.is_whitespace() {
                bump(&mut chars);
                continue;
            }
            if c == '#' {
                while let Some(&c2) = chars.peek() {
                    bump(&mut chars);
                    if c2 == '\n' {
                        break;
                    }
                }
                continue;
            }
            let tok = match c {
                '{' => {
                    bump(&mut chars);
                    Tok::LBrace
                }
                '}' => {
                    bump(&mut chars);
                    Tok::RBrace
                }
                '[' => {
                    bump(&mut chars);
                    Tok::LBracket
                }
                ']' => {
                    bump(&mut chars);
                    Tok::RBracket
                }
                ':' => {
                    bump(&mut chars);
                    Tok::Colon
                }
                ';' => {
                    bump(&mut chars);
                    Tok::Semi
                }
                ',' => {
                    bump(&mut chars);
                    Tok::Comma
                }
                '=' => {
                    bump(&mut chars);
                    Tok::Equals
                }
                '/' => {
                    bump(&mut chars);
                    Tok::Slash
                }
                '(' => {
                    bump(&mut chars);
                    Tok::LParen
                }
                ')' => {
                    bump(&mut chars);
                    Tok::RParen
                }
                '-' => {
                    bump(&mut chars);
                    match chars.peek() {
                        Some('>') => {
                            bump(&mut chars);
                            Tok::Arrow
                        }
                        Some(d) if d.is_ascii_digit() => {
                            let mut v = String::from("-");
                            while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                                v.push(bump(&mut chars));
                            }
                            Tok::Int(v.parse().map_err(|_| ParseError {
                                line: tline,
                                col: tcol,
                                msg: format!("integer literal {v:?} out of range"),
                            })?)
                        }
                        _ => {
                            return Err(ParseError {
                                line: tline,
                                col: tcol,
                                msg: "expected '->' or a negative integer after '-'".into(),
                            })
                        }
                    }
                }
                d if d.is_ascii_digit() => {
                    let mut v = String::new();
                    while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                        v.push(bump(&mut chars));
                    }
                    // Digit-led words like `2x` are rejected; bare digits may
                    // still serve as identifiers (vertex names), decided by
                    // the parser via expect_name.
                    Tok::Int(v.parse().map_err(|_| ParseError {
                        line: tline,
                        col: tcol,
                        msg: format!("integer literal {v:?} out of range"),
                    })?)
                }
                a if a.is_ascii_alphabetic() || a == '_' => {
                    let mut v = String::new();
                    while matches!(chars.peek(), Some(x) if x.is_ascii_alphanumeric() || "_.~-".contains(*x))
                    {
                        v.push(bump(&mut chars));
                    }
                    Tok::Ident(v)
                }
                other => {
                    return Err(ParseError {
                        line: tline,
                        col: tcol,
                        msg: format!("unexpected character {other:?}"),
                    })
                }
            };
            toks.push((tok, tline, tcol));
        }
        let end = toks
            .last()
            .map(|(_, l, c)| (*l, *c + 1))
            .unwrap_or((line, col));
        toks.push((Tok::Eof, end.0, end.1));
        Ok(Lexer { toks, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    pub fn next_tok(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.next_tok();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    /// A name: an identifier, or a bare nonnegative integer used as one.
    pub fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next_tok();
                Ok(s)
            }
            Tok::Int(v) if v >= 0 => {
                self.next_tok();
                Ok(v.to_string())
            }
            other => Err(self.error(format!("expected a name, found {}", other.describe()))),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next_tok();
                Ok(())
            }
            other => Err(self.error(format!(
                "expected keyword {kw:?}, found {}",
                other.describe()
            ))),
        }
    }

    pub fn expect_int(&mut self) -> Result<i64, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next_tok();
                Ok(v)
            }
            other => Err(self.error(format!("expected an integer, found {}", other.describe()))),
        }
    }

    pub fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.error(format!(
                "expected end of input, found {}",
                self.peek().describe()
            )))
        }
    }
}
