//! Recursive-descent parser for the CONSTRUCT/WHERE rule query language.
//!
//! ```text
//! query       := CONSTRUCT '{' group* '}' WHERE '{' item* '}'
//! item        := block | NAF block | FILTER filterBody | group
//! block       := STREAM iri ('@' var)? ('window' '[' number 'sec' ']')? '{' (group | FILTER filterBody)* '}'
//! filterBody  := '(' expr ')' | '{' expr '}'
//! group       := subject ('@' var)? (polist)? '.'?
//! polist      := verb object ('@' var)? (';' (verb object ('@' var)?)?)*
//! expr        := cmp ('&&' cmp)*
//! cmp         := sum (('<'|'>'|'<='|'>='|'=') sum)?
//! sum         := unary (('+'|'-') unary)*
//! unary       := '-' number | var | number | string | iri | builtin '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use super::ast::*;
use super::error::RuleError;
use super::lexer::{tokenize, Kw, QSpanned, QTok};
use crate::rdf::parser::resolve_iri_ref;
use crate::rdf::{vocab, Datatype, Iri, Literal, PrefixMap, StreamId, SyntaxError, Term};

/// Maps a position inside the query text to a position in the enclosing
/// document.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Origin {
    pub line: usize,
    pub column: usize,
}

impl Origin {
    pub(crate) fn map(self, line: usize, column: usize) -> (usize, usize) {
        if self.line == 0 {
            (line, column)
        } else if line == 1 {
            (self.line, self.column + column - 1)
        } else {
            (self.line + line - 1, column)
        }
    }
}

pub(crate) struct QueryParser<'a> {
    toks: Vec<QSpanned>,
    idx: usize,
    prefixes: &'a PrefixMap,
    tick_seconds: f64,
    origin: Origin,
}

type PResult<T> = Result<T, RuleError>;

impl<'a> QueryParser<'a> {
    pub(crate) fn new(
        text: &str,
        prefixes: &'a PrefixMap,
        tick_seconds: f64,
        origin: Origin,
    ) -> PResult<Self> {
        let toks = tokenize(text).map_err(|e| {
            let (line, column) = origin.map(e.line, e.column);
            RuleError::Syntax(SyntaxError::new(line, column, e.message))
        })?;
        Ok(QueryParser {
            toks,
            idx: 0,
            prefixes,
            tick_seconds,
            origin,
        })
    }

    fn peek(&self) -> Option<&QTok> {
        self.toks.get(self.idx).map(|t| &t.tok)
    }

    fn location(&self) -> (usize, usize) {
        let (l, c) = match self.toks.get(self.idx).or(self.toks.last()) {
            Some(t) => (t.line, t.column),
            None => (1, 1),
        };
        self.origin.map(l, c)
    }

    fn error(&self, message: impl Into<String>) -> RuleError {
        let (line, column) = self.location();
        RuleError::Syntax(SyntaxError::new(line, column, message))
    }

    fn found(&self) -> String {
        match self.peek() {
            None => "end of query".to_string(),
            Some(t) => format!("{t:?}"),
        }
    }

    fn bump(&mut self) -> Option<QTok> {
        let t = self.toks.get(self.idx).map(|t| t.tok.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn eat(&mut self, tok: &QTok) -> bool {
        if self.peek() == Some(tok) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &QTok, what: &str) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", self.found())))
        }
    }

    fn keyword(&mut self, kw: Kw) -> bool {
        self.eat(&QTok::Keyword(kw))
    }

    pub(crate) fn query(mut self) -> PResult<(Vec<TriplePattern>, BodySpec)> {
        if !self.keyword(Kw::Construct) {
            return Err(self.error(format!("expected CONSTRUCT, found {}", self.found())));
        }
        self.expect(&QTok::LBrace, "'{' after CONSTRUCT")?;
        let mut head = Vec::new();
        while self.peek() != Some(&QTok::RBrace) {
            if self.peek().is_none() {
                return Err(self.error("unterminated CONSTRUCT template"));
            }
            self.group(&mut head, true)?;
        }
        self.expect(&QTok::RBrace, "'}'")?;
        if !self.keyword(Kw::Where) {
            return Err(self.error(format!("expected WHERE, found {}", self.found())));
        }
        self.expect(&QTok::LBrace, "'{' after WHERE")?;
        let mut body = BodySpec::default();
        loop {
            match self.peek() {
                Some(QTok::RBrace) => break,
                None => return Err(self.error("unterminated WHERE clause")),
                Some(QTok::Keyword(Kw::Stream)) => {
                    let block = self.block()?;
                    body.positive.push(block);
                }
                Some(QTok::Keyword(Kw::Naf)) => {
                    self.bump();
                    if self.peek() != Some(&QTok::Keyword(Kw::Stream)) {
                        return Err(self.error(format!("expected STREAM after NAF, found {}", self.found())));
                    }
                    let block = self.block()?;
                    body.naf.push(block);
                }
                Some(QTok::Keyword(Kw::Filter)) => {
                    let f = self.filter()?;
                    body.filters.push(f);
                }
                Some(_) => self.group(&mut body.static_patterns, false)?,
            }
        }
        self.expect(&QTok::RBrace, "'}'")?;
        if let Some(t) = self.peek() {
            return Err(self.error(format!("unexpected {t:?} after WHERE clause")));
        }
        if body.positive.is_empty() && body.static_patterns.is_empty() {
            return Err(self.error("WHERE clause needs a STREAM block or a static pattern"));
        }
        Ok((head, body))
    }

    fn block(&mut self) -> PResult<StreamBlock> {
        self.bump(); // STREAM
        let stream = StreamId(self.iri()?);
        let mut timestamp = None;
        if self.eat(&QTok::At) {
            timestamp = Some(self.variable()?);
        }
        let mut window = WindowSpec::Now;
        if self.keyword(Kw::Window) {
            self.expect(&QTok::LBracket, "'[' after window")?;
            let seconds = match self.bump() {
                Some(QTok::Integer(s)) | Some(QTok::Decimal(s)) => s.parse::<f64>().unwrap_or(0.0),
                _ => return Err(self.error("expected window length")),
            };
            if !self.keyword(Kw::Sec) {
                return Err(self.error(format!("expected 'sec', found {}", self.found())));
            }
            self.expect(&QTok::RBracket, "']'")?;
            let ticks = seconds / self.tick_seconds;
            if ticks.fract().abs() > 1e-9 || ticks.round() < 1.0 {
                return Err(self.error(format!(
                    "window of {seconds} sec is not a positive whole number of ticks"
                )));
            }
            window = WindowSpec::Range(ticks.round() as u64);
        }
        self.expect(&QTok::LBrace, "'{' to open stream block")?;
        let mut block = StreamBlock {
            stream,
            window,
            timestamp,
            patterns: Vec::new(),
            filters: Vec::new(),
        };
        loop {
            match self.peek() {
                Some(QTok::RBrace) => break,
                None => return Err(self.error("unterminated stream block")),
                Some(QTok::Keyword(Kw::Filter)) => {
                    let f = self.filter()?;
                    block.filters.push(f);
                }
                Some(_) => self.group(&mut block.patterns, false)?,
            }
        }
        self.bump();
        if block.patterns.is_empty() {
            return Err(self.error("stream block has no patterns"));
        }
        Ok(block)
    }

    fn filter(&mut self) -> PResult<FilterExpr> {
        self.bump(); // FILTER
        let close = if self.eat(&QTok::LParen) {
            QTok::RParen
        } else if self.eat(&QTok::LBrace) {
            QTok::RBrace
        } else {
            return Err(self.error(format!("expected '(' or '{{' after FILTER, found {}", self.found())));
        };
        let e = self.expr()?;
        self.expect(&close, "closing FILTER delimiter")?;
        Ok(e)
    }

    fn group_terminated(&self) -> bool {
        matches!(
            self.peek(),
            None | Some(QTok::RBrace) | Some(QTok::Keyword(Kw::Filter))
        )
    }

    fn group(&mut self, out: &mut Vec<TriplePattern>, template: bool) -> PResult<()> {
        let subject = self.term(template, 0)?;
        if self.eat(&QTok::At) {
            let ts = self.variable()?;
            let quoted = match subject {
                PatternTerm::Quoted(ref q) => (**q).clone(),
                _ => return Err(self.error("'@' after a subject requires a quoted triple")),
            };
            out.push(TriplePattern::Mention {
                quoted,
                timestamp: Some(ts),
            });
            if self.eat(&QTok::Dot) || self.group_terminated() {
                return Ok(());
            }
            self.eat(&QTok::Semi);
            if self.eat(&QTok::Dot) || self.group_terminated() {
                return Ok(());
            }
        } else if self.eat(&QTok::Dot) || self.group_terminated() {
            return match subject {
                PatternTerm::Quoted(q) => {
                    out.push(TriplePattern::Mention {
                        quoted: *q,
                        timestamp: None,
                    });
                    Ok(())
                }
                _ => Err(self.error("a subject needs a predicate and object")),
            };
        }
        loop {
            let predicate = self.verb()?;
            let object = self.term(template, 0)?;
            let timestamp = if self.eat(&QTok::At) {
                Some(self.variable()?)
            } else {
                None
            };
            out.push(TriplePattern::Triple {
                subject: subject.clone(),
                predicate,
                object,
                timestamp,
            });
            if self.eat(&QTok::Semi) {
                if self.eat(&QTok::Dot) || self.group_terminated() {
                    return Ok(());
                }
                continue;
            }
            if self.eat(&QTok::Dot) || self.group_terminated() {
                return Ok(());
            }
            return Err(self.error(format!("expected '.', ';' or '}}', found {}", self.found())));
        }
    }

    fn variable(&mut self) -> PResult<Variable> {
        match self.bump() {
            Some(QTok::Var(name)) => Ok(Variable::new(name)),
            _ => {
                self.idx -= 1;
                Err(self.error(format!("expected variable, found {}", self.found())))
            }
        }
    }

    fn iri(&mut self) -> PResult<Iri> {
        match self.peek().cloned() {
            Some(QTok::IriRef(content)) => {
                self.bump();
                Ok(resolve_iri_ref(self.prefixes, &content))
            }
            Some(QTok::PName { prefix, local }) => {
                let (line, column) = self.location();
                let iri = self.prefixes.expand(&prefix, &local).ok_or_else(|| {
                    RuleError::Document(crate::rdf::ParseError::UnknownPrefix {
                        prefix: prefix.clone(),
                        line,
                        column,
                    })
                })?;
                self.bump();
                Ok(iri)
            }
            _ => Err(self.error(format!("expected IRI, found {}", self.found()))),
        }
    }

    fn verb(&mut self) -> PResult<PatternTerm> {
        match self.peek() {
            Some(QTok::A) => {
                self.bump();
                Ok(PatternTerm::Const(Term::Iri(vocab::rdf_type())))
            }
            Some(QTok::Var(_)) => Ok(PatternTerm::Var(self.variable()?)),
            _ => Ok(PatternTerm::Const(Term::Iri(self.iri()?))),
        }
    }

    fn term(&mut self, template: bool, depth: usize) -> PResult<PatternTerm> {
        match self.peek().cloned() {
            Some(QTok::LtLt) => {
                if depth >= crate::rdf::MAX_QUOTE_DEPTH {
                    return Err(self.error("quoted triple pattern nested deeper than 2 levels"));
                }
                self.bump();
                let subject = self.term(template, depth + 1)?;
                let predicate = self.verb()?;
                let object_is_iri_ref = matches!(self.peek(), Some(QTok::IriRef(_)));
                let object = self.term(template, depth + 1)?;
                // `<< ?O :enters <ssr:FoV>>`: the IRI's `>` doubles as the
                // first half of `>>`.
                if !(object_is_iri_ref && self.eat(&QTok::Gt)) {
                    self.expect(&QTok::GtGt, "'>>'")?;
                }
                Ok(PatternTerm::Quoted(Box::new(QuotedPattern {
                    subject,
                    predicate,
                    object,
                })))
            }
            Some(QTok::Var(_)) => Ok(PatternTerm::Var(self.variable()?)),
            Some(QTok::Blank(label)) => {
                if !template {
                    return Err(self.error("blank nodes are only allowed in CONSTRUCT templates"));
                }
                self.bump();
                Ok(PatternTerm::Const(Term::blank(label)))
            }
            Some(QTok::Str(s)) => {
                self.bump();
                Ok(PatternTerm::Const(Literal::string(s).into()))
            }
            Some(QTok::Integer(_)) | Some(QTok::Decimal(_)) | Some(QTok::Minus) => {
                Ok(PatternTerm::Const(self.number()?))
            }
            _ => Ok(PatternTerm::Const(Term::Iri(self.iri()?))),
        }
    }

    fn number(&mut self) -> PResult<Term> {
        let negative = self.eat(&QTok::Minus);
        let sign = if negative { "-" } else { "" };
        match self.bump() {
            Some(QTok::Integer(s)) => Ok(Literal::typed(format!("{sign}{s}"), Datatype::Integer)
                .expect("lexer yields valid integers")
                .into()),
            Some(QTok::Decimal(s)) => Ok(Literal::typed(format!("{sign}{s}"), Datatype::Decimal)
                .expect("lexer yields valid decimals")
                .into()),
            _ => {
                self.idx -= 1;
                Err(self.error(format!("expected number, found {}", self.found())))
            }
        }
    }

    fn expr(&mut self) -> PResult<FilterExpr> {
        let mut lhs = self.comparison()?;
        while self.eat(&QTok::AndAnd) {
            let rhs = self.comparison()?;
            lhs = FilterExpr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> PResult<FilterExpr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(QTok::Lt) => BinOp::Lt,
            Some(QTok::Gt) => BinOp::Gt,
            Some(QTok::Le) => BinOp::Le,
            Some(QTok::Ge) => BinOp::Ge,
            Some(QTok::Eq) => BinOp::Eq,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.sum()?;
        Ok(FilterExpr::binary(op, lhs, rhs))
    }

    fn sum(&mut self) -> PResult<FilterExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(QTok::Plus) => BinOp::Add,
                Some(QTok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = FilterExpr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<FilterExpr> {
        match self.peek().cloned() {
            Some(QTok::Minus) | Some(QTok::Integer(_)) | Some(QTok::Decimal(_)) => {
                Ok(FilterExpr::Const(self.number()?))
            }
            Some(QTok::Var(_)) => Ok(FilterExpr::Var(self.variable()?)),
            Some(QTok::Str(s)) => {
                self.bump();
                Ok(FilterExpr::Const(Literal::string(s).into()))
            }
            Some(QTok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(&QTok::RParen, "')'")?;
                Ok(e)
            }
            Some(QTok::Ident(name)) => {
                let (line, column) = self.location();
                let builtin = Builtin::from_name(&name).ok_or(RuleError::UnknownBuiltin {
                    name: name.clone(),
                    line,
                    column,
                })?;
                self.bump();
                self.expect(&QTok::LParen, "'(' after builtin name")?;
                let mut args = vec![self.expr()?];
                while self.eat(&QTok::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(&QTok::RParen, "')'")?;
                if args.len() != builtin.arity() {
                    return Err(self.error(format!(
                        "{} takes {} arguments, got {}",
                        builtin.name(),
                        builtin.arity(),
                        args.len()
                    )));
                }
                Ok(FilterExpr::Call(builtin, args))
            }
            Some(QTok::IriRef(_)) | Some(QTok::PName { .. }) => {
                Ok(FilterExpr::Const(Term::Iri(self.iri()?)))
            }
            _ => Err(self.error(format!("expected expression, found {}", self.found()))),
        }
    }
}
