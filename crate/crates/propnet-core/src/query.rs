//! Boolean keyword queries over tweet text.
//!
//! Grammar (see `docs/query-grammar.md`):
//!
//! ```text
//! expr     := and_expr ('OR' and_expr)*
//! and_expr := primary ('AND' primary)*
//! primary  := '(' expr ')' | "'" term "'"
//! ```
//!
//! `OR` binds looser than `AND`; keywords are case-insensitive. A term
//! matches when it occurs, case-folded, as a substring of the case-folded
//! tweet text. Accents are meaningful and preserved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{fold, Corpus};

/// Boolean expression tree. `And`/`Or` always have at least two children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryAst {
    Term(String),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
}

impl QueryAst {
    /// True when `text` satisfies the query.
    pub fn matches(&self, text: &str) -> bool {
        self.eval_folded(&fold(text))
    }

    fn eval_folded(&self, folded_text: &str) -> bool {
        match self {
            QueryAst::Term(t) => folded_text.contains(fold(t).as_str()),
            QueryAst::And(children) => children.iter().all(|c| c.eval_folded(folded_text)),
            QueryAst::Or(children) => children.iter().any(|c| c.eval_folded(folded_text)),
        }
    }
}

impl fmt::Display for QueryAst {
    /// Canonical printer; `parse_query(ast.to_string())` reproduces the AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_child(
            f: &mut fmt::Formatter<'_>,
            child: &QueryAst,
            parenthesize: bool,
        ) -> fmt::Result {
            if parenthesize {
                write!(f, "({child})")
            } else {
                write!(f, "{child}")
            }
        }
        match self {
            QueryAst::Term(t) => write!(f, "'{t}'"),
            QueryAst::And(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " AND ")?;
                    }
                    // Any nested operator needs parens: Or because it binds
                    // looser, And because the parser would flatten it.
                    write_child(f, c, !matches!(c, QueryAst::Term(_)))?;
                }
                Ok(())
            }
            QueryAst::Or(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " OR ")?;
                    }
                    write_child(f, c, matches!(c, QueryAst::Or(_)))?;
                }
                Ok(())
            }
        }
    }
}

/// A named story/topic defined operationally by a query.
#[derive(Debug, Clone)]
pub struct PropagandaItem {
    pub id: String,
    pub query: QueryAst,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Term,
}

struct Lexed {
    token: Token,
    /// Byte offset of the token start, for error reporting.
    offset: usize,
    /// Term text (empty for non-terms).
    text: String,
}

fn lex(source: &str) -> Result<Vec<Lexed>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '(' => {
                tokens.push(Lexed { token: Token::LParen, offset: i, text: String::new() });
                i += 1;
            }
            ')' => {
                tokens.push(Lexed { token: Token::RParen, offset: i, text: String::new() });
                i += 1;
            }
            '\'' => {
                let start = i;
                let rest = &source[i + 1..];
                match rest.find('\'') {
                    Some(end) => {
                        let term = &rest[..end];
                        if term.trim().is_empty() {
                            return Err(Error::QueryParse {
                                offset: start,
                                message: "empty term".into(),
                            });
                        }
                        tokens.push(Lexed {
                            token: Token::Term,
                            offset: start,
                            text: term.to_owned(),
                        });
                        i += end + 2;
                    }
                    None => {
                        return Err(Error::QueryParse {
                            offset: start,
                            message: "unterminated quote".into(),
                        })
                    }
                }
            }
            _ => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_whitespace() || c == '(' || c == ')' || c == '\'' {
                        break;
                    }
                    i += 1;
                }
                let word = &source[start..i];
                let token = match word.to_ascii_uppercase().as_str() {
                    "AND" => Token::And,
                    "OR" => Token::Or,
                    _ => {
                        return Err(Error::QueryParse {
                            offset: start,
                            message: format!("unexpected token {word:?} (terms must be quoted)"),
                        })
                    }
                };
                tokens.push(Lexed { token, offset: start, text: String::new() });
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Lexed>,
    pos: usize,
    source_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Lexed> {
        self.tokens.get(self.pos)
    }

    fn current_offset(&self) -> usize {
        self.peek().map_or(self.source_len, |t| t.offset)
    }

    fn expr(&mut self) -> Result<QueryAst> {
        let mut children = vec![self.and_expr()?];
        while matches!(self.peek(), Some(t) if t.token == Token::Or) {
            self.pos += 1;
            children.push(self.and_expr()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            QueryAst::Or(children)
        })
    }

    fn and_expr(&mut self) -> Result<QueryAst> {
        let mut children = vec![self.primary()?];
        while matches!(self.peek(), Some(t) if t.token == Token::And) {
            self.pos += 1;
            children.push(self.primary()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            QueryAst::And(children)
        })
    }

    fn primary(&mut self) -> Result<QueryAst> {
        let offset = self.current_offset();
        match self.peek() {
            Some(t) if t.token == Token::Term => {
                let term = t.text.clone();
                self.pos += 1;
                Ok(QueryAst::Term(term))
            }
            Some(t) if t.token == Token::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(t) if t.token == Token::RParen => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::QueryParse {
                        offset: self.current_offset(),
                        message: "unbalanced parentheses: expected ')'".into(),
                    }),
                }
            }
            _ => Err(Error::QueryParse {
                offset,
                message: "expected a quoted term or '('".into(),
            }),
        }
    }
}

/// Parse a query string. Errors carry the byte offset of the problem.
pub fn parse_query(source: &str) -> Result<QueryAst> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        source_len: source.len(),
    };
    let ast = parser.expr()?;
    if let Some(t) = parser.peek() {
        return Err(Error::QueryParse {
            offset: t.offset,
            message: "trailing tokens after expression".into(),
        });
    }
    Ok(ast)
}

/// Records whose text satisfies the item's query, input order preserved.
pub fn filter_corpus(corpus: &Corpus, item: &PropagandaItem) -> Corpus {
    Corpus {
        records: corpus
            .records
            .iter()
            .filter(|r| item.query.matches(&r.text))
            .cloned()
            .collect(),
        date_range: corpus.date_range,
    }
}

/// How the designated universe decomposes over item memberships: counts of
/// users in exactly 1, 2, ... k items, plus members of no item ("other").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipDecomposition {
    /// `exactly[m - 1]` is the number of users in exactly `m` items.
    pub exactly: Vec<usize>,
    /// Universe members in none of the items.
    pub other: usize,
    pub universe_size: usize,
}

impl MembershipDecomposition {
    /// Percentages in bucket order (exactly-1 ... exactly-k, other).
    pub fn percentages(&self) -> Vec<f64> {
        let total = self.universe_size.max(1) as f64;
        self.exactly
            .iter()
            .chain(std::iter::once(&self.other))
            .map(|&c| 100.0 * c as f64 / total)
            .collect()
    }
}

/// Disjoint counts partitioning `universe` by the number of items each
/// member belongs to. Every item set must be contained in the universe.
pub fn membership_decomposition(
    universe: &BTreeSet<String>,
    items: &BTreeMap<String, BTreeSet<String>>,
) -> Result<MembershipDecomposition> {
    for (id, set) in items {
        if let Some(outsider) = set.difference(universe).next() {
            return Err(Error::Data(format!(
                "item {id} contains user {outsider:?} outside the universe"
            )));
        }
    }
    let k = items.len();
    let mut exactly = vec![0usize; k];
    let mut other = 0usize;
    for user in universe {
        let count = items.values().filter(|set| set.contains(user)).count();
        if count == 0 {
            other += 1;
        } else {
            exactly[count - 1] += 1;
        }
    }
    Ok(MembershipDecomposition {
        exactly,
        other,
        universe_size: universe.len(),
    })
}

#[derive(Deserialize)]
struct ItemConfigEntry {
    id: String,
    query: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct ItemConfigFile {
    #[serde(alias = "item")]
    items: Vec<ItemConfigEntry>,
}

/// Load a query configuration (JSON or TOML, by extension). Each entry is
/// `{id, query, description}`; ids must be unique.
pub fn load_items(path: impl AsRef<Path>) -> Result<Vec<PropagandaItem>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: ItemConfigFile = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    };
    let mut seen = BTreeSet::new();
    let mut items = Vec::with_capacity(parsed.items.len());
    for entry in parsed.items {
        if !seen.insert(entry.id.clone()) {
            return Err(Error::Config(format!("duplicate item id {:?}", entry.id)));
        }
        let query = parse_query(&entry.query).map_err(|e| {
            Error::Config(format!("item {:?}: {e}", entry.id))
        })?;
        items.push(PropagandaItem {
            id: entry.id,
            query,
            description: entry.description,
        });
    }
    Ok(items)
}
