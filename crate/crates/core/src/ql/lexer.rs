//! Tokenizer for CONSTRUCT/WHERE query text.

use crate::rdf::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum QTok {
    Keyword(Kw),
    Var(String),
    IriRef(String),
    PName { prefix: String, local: String },
    Blank(String),
    Str(String),
    Integer(String),
    Decimal(String),
    A,
    LtLt,
    GtGt,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Semi,
    Comma,
    At,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Plus,
    Minus,
    AndAnd,
    /// A bare identifier that is not a keyword, e.g. a builtin name.
    Ident(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kw {
    Construct,
    Where,
    Stream,
    Naf,
    Filter,
    Window,
    Sec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QSpanned {
    pub tok: QTok,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<QSpanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let at = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        let (sl, sc) = (line, col);
        let err = |msg: String| SyntaxError::new(sl, sc, msg);
        let (tok, len) = match c {
            '<' if at(1) == Some('<') => (QTok::LtLt, 2),
            '<' if at(1) == Some('=') => (QTok::Le, 2),
            '<' => match scan_iri(&chars[i + 1..]) {
                Some(content) => {
                    let n = content.chars().count() + 2;
                    (QTok::IriRef(content), n)
                }
                None => (QTok::Lt, 1),
            },
            '>' if at(1) == Some('>') => (QTok::GtGt, 2),
            '>' if at(1) == Some('=') => (QTok::Ge, 2),
            '>' => (QTok::Gt, 1),
            '=' => (QTok::Eq, 1),
            '+' => (QTok::Plus, 1),
            '-' => (QTok::Minus, 1),
            '&' if at(1) == Some('&') => (QTok::AndAnd, 2),
            '{' => (QTok::LBrace, 1),
            '}' => (QTok::RBrace, 1),
            '(' => (QTok::LParen, 1),
            ')' => (QTok::RParen, 1),
            '[' => (QTok::LBracket, 1),
            ']' => (QTok::RBracket, 1),
            ';' => (QTok::Semi, 1),
            ',' => (QTok::Comma, 1),
            '@' => (QTok::At, 1),
            '.' if !at(1).is_some_and(|d| d.is_ascii_digit()) => (QTok::Dot, 1),
            '?' | '$' => {
                let name: String = chars[i + 1..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                    .collect();
                if name.is_empty() {
                    return Err(err("empty variable name".into()));
                }
                let n = name.len() + 1;
                (QTok::Var(name), n)
            }
            '\'' | '"' => {
                let (s, n) = scan_string(&chars[i..]).map_err(err)?;
                (QTok::Str(s), n)
            }
            '_' if at(1) == Some(':') => {
                let label: String = chars[i + 2..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == '_' || **c == '-')
                    .collect();
                if label.is_empty() {
                    return Err(err("empty blank node label".into()));
                }
                let n = label.len() + 2;
                (QTok::Blank(label), n)
            }
            c if c.is_ascii_digit() || c == '.' => {
                let int: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
                let mut n = int.len();
                if chars.get(i + n) == Some(&'.')
                    && chars.get(i + n + 1).is_some_and(|d| d.is_ascii_digit())
                {
                    let frac: String = chars[i + n + 1..]
                        .iter()
                        .take_while(|c| c.is_ascii_digit())
                        .collect();
                    if int.is_empty() {
                        return Err(err(format!("malformed number '.{frac}'")));
                    }
                    n += 1 + frac.len();
                    (QTok::Decimal(format!("{int}.{frac}")), n)
                } else {
                    (QTok::Integer(int), n)
                }
            }
            c if c.is_ascii_alphabetic() || c == ':' => {
                let word: String = chars[i..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric() || **c == '_' || **c == '-')
                    .collect();
                let mut n = word.len();
                if chars.get(i + n) == Some(&':') {
                    n += 1;
                    let mut local = String::new();
                    while let Some(&c) = chars.get(i + n) {
                        let dot_inside = c == '.'
                            && chars
                                .get(i + n + 1)
                                .is_some_and(|d| d.is_ascii_alphanumeric() || *d == '_');
                        if c.is_ascii_alphanumeric() || c == '_' || c == '-' || dot_inside {
                            local.push(c);
                            n += 1;
                        } else {
                            break;
                        }
                    }
                    (QTok::PName { prefix: word, local }, n)
                } else {
                    let tok = match word.to_ascii_lowercase().as_str() {
                        "construct" => QTok::Keyword(Kw::Construct),
                        "where" => QTok::Keyword(Kw::Where),
                        "stream" => QTok::Keyword(Kw::Stream),
                        "naf" => QTok::Keyword(Kw::Naf),
                        "filter" => QTok::Keyword(Kw::Filter),
                        "window" => QTok::Keyword(Kw::Window),
                        "sec" => QTok::Keyword(Kw::Sec),
                        _ if word == "a" => QTok::A,
                        _ => QTok::Ident(word),
                    };
                    (tok, n)
                }
            }
            other => return Err(err(format!("unexpected character '{other}'"))),
        };
        out.push(QSpanned {
            tok,
            line: sl,
            column: sc,
        });
        advance!(len);
    }
    Ok(out)
}

/// An IRI reference is `<` followed by non-space characters up to `>`. A `<`
/// that starts a variable, a number or a space is a less-than operator.
fn scan_iri(rest: &[char]) -> Option<String> {
    let first = *rest.first()?;
    if first == '?' || first == '$' || first == '=' || first.is_whitespace() || first.is_ascii_digit() {
        return None;
    }
    let mut s = String::new();
    for &c in rest {
        match c {
            '>' => return (!s.is_empty()).then_some(s),
            c if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' | '(' | ')') => {
                return None
            }
            c => s.push(c),
        }
    }
    None
}

fn scan_string(chars: &[char]) -> Result<(String, usize), String> {
    let quote = chars[0];
    let mut i = 1;
    let mut s = String::new();
    while i < chars.len() {
        match chars[i] {
            '\\' => {
                let e = *chars.get(i + 1).ok_or("unterminated escape")?;
                s.push(match e {
                    't' => '\t',
                    'n' => '\n',
                    'r' => '\r',
                    '"' => '"',
                    '\'' => '\'',
                    '\\' => '\\',
                    other => return Err(format!("unknown escape '\\{other}'")),
                });
                i += 2;
            }
            c if c == quote => return Ok((s, i + 1)),
            '\n' => return Err("newline in string literal".into()),
            c => {
                s.push(c);
                i += 1;
            }
        }
    }
    Err("unterminated string literal".into())
}
