//! Tokenizer for the Turtle-star subset used by fact and rule documents.

use super::error::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    PrefixDirective,
    /// Raw text between `<` and `>`.
    IriRef(String),
    PName { prefix: String, local: String },
    Blank(String),
    Str(String),
    Integer(String),
    Decimal(String),
    A,
    LtLt,
    GtGt,
    Semi,
    Comma,
    Dot,
    LBracket,
    RBracket,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    Lexer::new(text).run()
}

struct Lexer {
    chars: Vec<char>,
    idx: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            idx: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.idx + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.idx).copied()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn err(&self, pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(pos.line, pos.column, message)
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn run(mut self) -> Result<Vec<Spanned>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => break,
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => self.skip_line(),
                Some('/') if self.peek_at(1) == Some('/') => self.skip_line(),
                Some(_) => {
                    let pos = self.pos();
                    let tok = self.token(pos)?;
                    out.push(Spanned { tok, pos });
                }
            }
        }
        Ok(out)
    }

    fn token(&mut self, pos: Pos) -> Result<Tok, SyntaxError> {
        let c = self.peek().expect("token called at end of input");
        match c {
            '<' if self.peek_at(1) == Some('<') => {
                self.bump();
                self.bump();
                Ok(Tok::LtLt)
            }
            '>' if self.peek_at(1) == Some('>') => {
                self.bump();
                self.bump();
                Ok(Tok::GtGt)
            }
            '<' => self.iri_ref(pos),
            ';' => {
                self.bump();
                Ok(Tok::Semi)
            }
            ',' => {
                self.bump();
                Ok(Tok::Comma)
            }
            '.' if !self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => {
                self.bump();
                Ok(Tok::Dot)
            }
            '[' => {
                self.bump();
                Ok(Tok::LBracket)
            }
            ']' => {
                self.bump();
                Ok(Tok::RBracket)
            }
            '\'' | '"' => self.string(pos),
            '@' => {
                self.bump();
                let word = self.word();
                if word == "prefix" {
                    Ok(Tok::PrefixDirective)
                } else {
                    Err(self.err(pos, format!("unknown directive '@{word}'")))
                }
            }
            '_' if self.peek_at(1) == Some(':') => {
                self.bump();
                self.bump();
                let label = self.word();
                if label.is_empty() {
                    Err(self.err(pos, "empty blank node label"))
                } else {
                    Ok(Tok::Blank(label))
                }
            }
            c if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.number(pos),
            c if c.is_ascii_alphabetic() || c == ':' => self.name(pos),
            other => Err(self.err(pos, format!("unexpected character '{other}'"))),
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn iri_ref(&mut self, pos: Pos) -> Result<Tok, SyntaxError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) if c.is_whitespace() || c == '<' || c == '"' || c == '{' || c == '}' => {
                    return Err(self.err(pos, format!("illegal character '{c}' in IRI")))
                }
                Some(c) => s.push(c),
                None => return Err(self.err(pos, "unterminated IRI")),
            }
        }
        if s.is_empty() {
            return Err(self.err(pos, "empty IRI"));
        }
        Ok(Tok::IriRef(s))
    }

    fn string(&mut self, pos: Pos) -> Result<Tok, SyntaxError> {
        let quote = self.bump().unwrap();
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut s = String::new();
        loop {
            let c = self
                .bump()
                .ok_or_else(|| self.err(pos, "unterminated string literal"))?;
            match c {
                '\\' => {
                    let e = self
                        .bump()
                        .ok_or_else(|| self.err(pos, "unterminated escape"))?;
                    s.push(match e {
                        't' => '\t',
                        'n' => '\n',
                        'r' => '\r',
                        'b' => '\u{8}',
                        'f' => '\u{c}',
                        '"' => '"',
                        '\'' => '\'',
                        '\\' => '\\',
                        'u' => self.unicode_escape(pos, 4)?,
                        'U' => self.unicode_escape(pos, 8)?,
                        other => {
                            return Err(self.err(pos, format!("unknown escape '\\{other}'")))
                        }
                    });
                }
                c if c == quote && !long => break,
                c if c == quote
                    && long
                    && self.peek() == Some(quote)
                    && self.peek_at(1) == Some(quote) =>
                {
                    self.bump();
                    self.bump();
                    break;
                }
                '\n' if !long => return Err(self.err(pos, "newline in short string literal")),
                c => s.push(c),
            }
        }
        Ok(Tok::Str(s))
    }

    fn unicode_escape(&mut self, pos: Pos, len: usize) -> Result<char, SyntaxError> {
        let mut hex = String::new();
        for _ in 0..len {
            hex.push(self.bump().ok_or_else(|| self.err(pos, "short unicode escape"))?);
        }
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.err(pos, format!("bad unicode escape '{hex}'")))
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, SyntaxError> {
        let mut s = String::new();
        if let Some(sign @ ('+' | '-')) = self.peek() {
            s.push(sign);
            self.bump();
        }
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
            decimal = true;
            s.push('.');
            self.bump();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                s.push(c);
                self.bump();
            }
        }
        let digits = s.trim_start_matches(['+', '-']);
        if digits.is_empty() || digits.starts_with('.') {
            return Err(self.err(pos, format!("malformed number '{s}'")));
        }
        Ok(if decimal {
            Tok::Decimal(s)
        } else {
            Tok::Integer(s)
        })
    }

    fn name(&mut self, pos: Pos) -> Result<Tok, SyntaxError> {
        let prefix = self.word();
        if self.peek() != Some(':') {
            return if prefix == "a" {
                Ok(Tok::A)
            } else {
                Err(self.err(pos, format!("unexpected bare word '{prefix}'")))
            };
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            let continues_after_dot = c == '.'
                && self
                    .peek_at(1)
                    .is_some_and(|n| n.is_ascii_alphanumeric() || n == '_');
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' || continues_after_dot {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(Tok::PName { prefix, local })
    }
}
