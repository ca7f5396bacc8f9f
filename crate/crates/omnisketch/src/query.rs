//! Query strings.
//!
//! ```text
//! query     := predicate ( AND predicate )*
//! predicate := attr "=" value | attr IN "[" value "," value "]"
//! ```
//!
//! `AND` and `IN` are case-insensitive. `attr` is a schema name or `aN`.
//! Values of categorical attributes are dictionary strings, optionally in
//! double quotes; values never seen during ingestion match nothing.

use omnisketch_core::{AttributeValue, Predicate, PredicateKind, Query};

use crate::error::{Error, Result};
use crate::schema::{AttributeKind, Dictionaries, SchemaConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Quoted(String),
    Eq,
    Open,
    Close,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '=' | '[' | ']' | ',' => {
                chars.next();
                tokens.push(match c {
                    '=' => Token::Eq,
                    '[' => Token::Open,
                    ']' => Token::Close,
                    _ => Token::Comma,
                });
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, e)) => s.push(e),
                            None => return Err(Error::QueryParse("unterminated string".into())),
                        },
                        Some((_, ch)) => s.push(ch),
                        None => {
                            return Err(Error::QueryParse(format!(
                                "unterminated string starting at offset {start}"
                            )))
                        }
                    }
                }
                tokens.push(Token::Quoted(s));
            }
            _ => {
                let mut end = text.len();
                while let Some(&(i, ch)) = chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '=' | '[' | ']' | ',' | '"') {
                        end = i;
                        break;
                    }
                    chars.next();
                }
                tokens.push(Token::Word(text[start..end].to_string()));
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    schema: &'a SchemaConfig,
    dicts: &'a Dictionaries,
}

impl Parser<'_> {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(Error::QueryParse(format!(
                "expected {what}, found {}",
                describe(&t)
            ))),
            None => Err(Error::QueryParse(format!(
                "expected {what}, found end of query"
            ))),
        }
    }

    fn value(&mut self, attribute: usize) -> Result<AttributeValue> {
        let attr = &self.schema.attributes[attribute];
        match (self.next(), attr.kind) {
            (Some(Token::Word(w)), AttributeKind::Numeric) => w.parse().map_err(|_| {
                Error::QueryParse(format!("`{w}` is not an integer value for `{}`", attr.name))
            }),
            (Some(Token::Word(w) | Token::Quoted(w)), AttributeKind::Categorical) => {
                Ok(self.dicts.lookup(attribute, &w))
            }
            (Some(t), _) => Err(Error::QueryParse(format!(
                "expected a value for `{}`, found {}",
                attr.name,
                describe(&t)
            ))),
            (None, _) => Err(Error::QueryParse(format!(
                "expected a value for `{}`, found end of query",
                attr.name
            ))),
        }
    }

    fn predicate(&mut self) -> Result<Predicate> {
        let name = match self.next() {
            Some(Token::Word(w)) => w,
            Some(t) => {
                return Err(Error::QueryParse(format!(
                    "expected an attribute, found {}",
                    describe(&t)
                )))
            }
            None => {
                return Err(Error::QueryParse(
                    "expected an attribute, found end of query".into(),
                ))
            }
        };
        let attribute = self.schema.resolve(&name)?;
        match self.next() {
            Some(Token::Eq) => Ok(Predicate::equals(attribute, self.value(attribute)?)),
            Some(Token::Word(w)) if w.eq_ignore_ascii_case("in") => {
                self.expect(Token::Open, "`[`")?;
                let lo = self.value(attribute)?;
                self.expect(Token::Comma, "`,`")?;
                let hi = self.value(attribute)?;
                self.expect(Token::Close, "`]`")?;
                Ok(Predicate::range(attribute, lo, hi))
            }
            Some(t) => Err(Error::QueryParse(format!(
                "expected `=` or IN after `{name}`, found {}",
                describe(&t)
            ))),
            None => Err(Error::QueryParse(format!(
                "expected `=` or IN after `{name}`"
            ))),
        }
    }
}

fn describe(t: &Token) -> String {
    match t {
        Token::Word(w) => format!("`{w}`"),
        Token::Quoted(s) => format!("\"{s}\""),
        Token::Eq => "`=`".into(),
        Token::Open => "`[`".into(),
        Token::Close => "`]`".into(),
        Token::Comma => "`,`".into(),
    }
}

/// Parses a query string against `schema`. Domain checks happen when the
/// query is estimated.
pub fn parse_query(text: &str, schema: &SchemaConfig, dicts: &Dictionaries) -> Result<Query> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        schema,
        dicts,
    };
    if parser.tokens.is_empty() {
        return Err(Error::QueryParse("empty query".into()));
    }
    let mut predicates = vec![parser.predicate()?];
    while let Some(t) = parser.next() {
        match t {
            Token::Word(w) if w.eq_ignore_ascii_case("and") => predicates.push(parser.predicate()?),
            t => {
                return Err(Error::QueryParse(format!(
                    "expected AND, found {}",
                    describe(&t)
                )))
            }
        }
    }
    Ok(Query::new(predicates))
}

/// Renders `query` with schema names and dictionary strings so that
/// [`parse_query`] reads it back unchanged.
pub fn format_query(query: &Query, schema: &SchemaConfig, dicts: &Dictionaries) -> String {
    let render = |a: usize, v: AttributeValue| -> String {
        match schema.attributes[a].kind {
            AttributeKind::Numeric => v.to_string(),
            AttributeKind::Categorical => match dicts.values(a).get((v as usize).wrapping_sub(1)) {
                Some(s) => {
                    let plain = !s.is_empty()
                        && !s.eq_ignore_ascii_case("and")
                        && !s.contains(|c: char| c.is_whitespace() || "=[],\"\\".contains(c));
                    if plain {
                        s.clone()
                    } else {
                        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
                    }
                }
                None => "\"\"".to_string(),
            },
        }
    };
    query
        .predicates()
        .iter()
        .map(|p| {
            let name = &schema.attributes[p.attribute].name;
            match p.kind {
                PredicateKind::Equals(v) => format!("{name}={}", render(p.attribute, v)),
                PredicateKind::Range { lo, hi } => {
                    format!(
                        "{name} IN [{},{}]",
                        render(p.attribute, lo),
                        render(p.attribute, hi)
                    )
                }
            }
        })
        .collect::<Vec<_>>()
        .join(" AND ")
}
