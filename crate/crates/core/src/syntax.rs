//! Text syntax for global types and GTIR expressions.
//!
//! ```text
//! import "other.gt"                      # types defined elsewhere
//! type Ping { loop { p->q:ping; q->p:pong } }
//! type Echo { r->s:x; s->r:x }
//! gtir connect base Ping interfaces {p} via p<->r base Echo interfaces {r}
//! ```
//!
//! A file may instead contain a single bare global type. Comments run from
//! `#` or `//` to the end of the line.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cfsm::{Message, Role};
use crate::globaltype::GlobalType;
use crate::gtir::{GtirError, GtirExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{position}: {message}")]
pub struct ParseError {
    pub position: Position,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Str(String),
    Arrow,
    BiArrow,
    Colon,
    Semi,
    Comma,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Str(s) => write!(f, "\"{s}\""),
            Token::Arrow => write!(f, "`->`"),
            Token::BiArrow => write!(f, "`<->`"),
            Token::Colon => write!(f, "`:`"),
            Token::Semi => write!(f, "`;`"),
            Token::Comma => write!(f, "`,`"),
            Token::LBrace => write!(f, "`{{`"),
            Token::RBrace => write!(f, "`}}`"),
            Token::LParen => write!(f, "`(`"),
            Token::RParen => write!(f, "`)`"),
            Token::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "choice",
    "at",
    "or",
    "loop",
    "break",
    "end",
    "type",
    "import",
    "gtir",
    "base",
    "interfaces",
    "connect",
    "via",
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(src: &str) -> Result<Vec<(Token, Position)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    let mut positions = Vec::with_capacity(chars.len() + 1);
    for &c in &chars {
        positions.push(Position { line, column });
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    positions.push(Position { line, column });
    while i < chars.len() {
        let c = chars[i];
        let position = positions[i];
        let error = |message: &str| ParseError {
            position,
            message: message.to_string(),
        };
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' || (c == '/' && next == Some('/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (token, len) = match c {
            '{' => (Token::LBrace, 1),
            '}' => (Token::RBrace, 1),
            '(' => (Token::LParen, 1),
            ')' => (Token::RParen, 1),
            ':' => (Token::Colon, 1),
            ';' => (Token::Semi, 1),
            ',' => (Token::Comma, 1),
            '-' if next == Some('>') => (Token::Arrow, 2),
            '-' => return Err(error("expected `->`")),
            '<' if next == Some('-') && chars.get(i + 2) == Some(&'>') => (Token::BiArrow, 3),
            '<' => return Err(error("expected `<->`")),
            '"' => {
                let len = chars[i + 1..]
                    .iter()
                    .position(|&c| c == '"' || c == '\n')
                    .filter(|&n| chars[i + 1 + n] == '"')
                    .ok_or_else(|| error("unterminated string"))?;
                (Token::Str(chars[i + 1..i + 1 + len].iter().collect()), len + 2)
            }
            c if is_ident_char(c) => {
                let len = chars[i..].iter().take_while(|&&c| is_ident_char(c)).count();
                (Token::Ident(chars[i..i + len].iter().collect()), len)
            }
            other => return Err(error(&format!("unexpected character {other:?}"))),
        };
        tokens.push((token, position));
        i += len;
    }
    tokens.push((Token::Eof, positions[chars.len()]));
    Ok(tokens)
}

/// A GTIR expression as written, with type names not yet resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GtirSyntax {
    Base {
        name: String,
        interfaces: BTreeSet<Role>,
        position: Position,
    },
    Connect {
        left: Box<GtirSyntax>,
        h: Role,
        right: Box<GtirSyntax>,
        k: Role,
        interfaces: Option<BTreeSet<Role>>,
        position: Position,
    },
}

/// One parsed file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub imports: Vec<(String, Position)>,
    pub types: BTreeMap<String, GlobalType>,
    pub gtir: Option<GtirSyntax>,
    /// A file consisting of a bare global type.
    pub main: Option<GlobalType>,
}

struct Parser {
    tokens: Vec<(Token, Position)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].0
    }

    fn position(&self) -> Position {
        self.tokens[self.at].1
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].0.clone();
        if t != Token::Eof {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.position(),
            message: message.into(),
        })
    }

    fn expect(&mut self, token: Token) -> Result<(), ParseError> {
        if *self.peek() == token {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected {token}, found {}", self.peek()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Token::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            other => self.error(format!("expected {what}, found {other}")),
        }
    }

    fn role(&mut self) -> Result<Role, ParseError> {
        self.name("a role name").map(Role::new)
    }

    fn seq(&mut self) -> Result<GlobalType, ParseError> {
        let mut items = vec![self.term()?];
        while *self.peek() == Token::Semi {
            self.advance();
            if matches!(self.peek(), Token::RBrace | Token::Eof) || self.is_keyword("or") {
                break;
            }
            items.push(self.term()?);
        }
        Ok(if items.len() == 1 {
            items.pop().expect("one item")
        } else {
            GlobalType::Seq(items)
        })
    }

    fn block(&mut self) -> Result<GlobalType, ParseError> {
        self.expect(Token::LBrace)?;
        if *self.peek() == Token::RBrace {
            self.advance();
            return Ok(GlobalType::Seq(Vec::new()));
        }
        let body = self.seq()?;
        self.expect(Token::RBrace)?;
        Ok(body)
    }

    fn term(&mut self) -> Result<GlobalType, ParseError> {
        let start = self.position();
        match self.peek().clone() {
            Token::LBrace => self.block(),
            Token::Ident(kw) if kw == "break" => {
                self.advance();
                Ok(GlobalType::Break)
            }
            Token::Ident(kw) if kw == "end" => {
                self.advance();
                Ok(GlobalType::End)
            }
            Token::Ident(kw) if kw == "loop" => {
                self.advance();
                Ok(GlobalType::Loop(Box::new(self.block()?)))
            }
            Token::Ident(kw) if kw == "choice" => {
                self.advance();
                self.keyword("at")?;
                let decider = self.role()?;
                self.expect(Token::LBrace)?;
                let mut branches = vec![self.seq()?];
                while self.is_keyword("or") {
                    self.advance();
                    branches.push(self.seq()?);
                }
                self.expect(Token::RBrace)?;
                Ok(GlobalType::Choice { decider, branches })
            }
            _ => {
                let sender = self.role()?;
                self.expect(Token::Arrow)?;
                let receiver = self.role()?;
                self.expect(Token::Colon)?;
                let message = Message::new(self.name("a message name")?);
                if sender == receiver {
                    return Err(ParseError {
                        position: start,
                        message: format!("role {sender} cannot send to itself"),
                    });
                }
                Ok(GlobalType::Interaction {
                    sender,
                    receiver,
                    message,
                })
            }
        }
    }

    fn role_set(&mut self) -> Result<BTreeSet<Role>, ParseError> {
        self.expect(Token::LBrace)?;
        let mut roles = BTreeSet::new();
        while *self.peek() != Token::RBrace {
            let position = self.position();
            if !roles.insert(self.role()?) {
                return Err(ParseError {
                    position,
                    message: "role listed twice".into(),
                });
            }
            if *self.peek() != Token::Comma {
                break;
            }
            self.advance();
        }
        self.expect(Token::RBrace)?;
        Ok(roles)
    }

    fn gtir(&mut self) -> Result<GtirSyntax, ParseError> {
        let position = self.position();
        if *self.peek() == Token::LParen {
            self.advance();
            let inner = self.gtir()?;
            self.expect(Token::RParen)?;
            return Ok(inner);
        }
        if self.is_keyword("base") {
            self.advance();
            let name = self.name("a type name")?;
            self.keyword("interfaces")?;
            let interfaces = self.role_set()?;
            return Ok(GtirSyntax::Base {
                name,
                interfaces,
                position,
            });
        }
        self.keyword("connect")?;
        let left = self.gtir()?;
        self.keyword("via")?;
        let h = self.role()?;
        self.expect(Token::BiArrow)?;
        let k = self.role()?;
        let right = self.gtir()?;
        let interfaces = if self.is_keyword("interfaces") {
            self.advance();
            Some(self.role_set()?)
        } else {
            None
        };
        Ok(GtirSyntax::Connect {
            left: Box::new(left),
            h,
            right: Box::new(right),
            k,
            interfaces,
            position,
        })
    }

    fn document(&mut self) -> Result<Document, ParseError> {
        let mut doc = Document::default();
        let is_item = |p: &Self| ["import", "type", "gtir"].iter().any(|kw| p.is_keyword(kw));
        if !is_item(self) && *self.peek() != Token::Eof {
            doc.main = Some(self.seq()?);
            return match self.peek() {
                Token::Eof => Ok(doc),
                other => self.error(format!("expected `;` or end of input, found {other}")),
            };
        }
        while *self.peek() != Token::Eof {
            let position = self.position();
            match self.advance() {
                Token::Ident(kw) if kw == "import" => match self.advance() {
                    Token::Str(path) => doc.imports.push((path, position)),
                    _ => {
                        self.at -= 1;
                        return self.error("expected a quoted file name");
                    }
                },
                Token::Ident(kw) if kw == "type" => {
                    let name_position = self.position();
                    let name = self.name("a type name")?;
                    let body = self.block()?;
                    if doc.types.insert(name.clone(), body).is_some() {
                        return Err(ParseError {
                            position: name_position,
                            message: format!("type {name} defined twice"),
                        });
                    }
                }
                Token::Ident(kw) if kw == "gtir" => {
                    if doc.gtir.is_some() {
                        return Err(ParseError {
                            position,
                            message: "only one gtir expression per file".into(),
                        });
                    }
                    doc.gtir = Some(self.gtir()?);
                }
                other => {
                    return Err(ParseError {
                        position,
                        message: format!("expected `import`, `type` or `gtir`, found {other}"),
                    })
                }
            }
        }
        Ok(doc)
    }
}

pub fn parse_document(src: &str) -> Result<Document, ParseError> {
    Parser {
        tokens: lex(src)?,
        at: 0,
    }
    .document()
}

/// Parses a global type. A document defining exactly one named type is
/// accepted too.
pub fn parse_global_type(src: &str) -> Result<GlobalType, ParseError> {
    let doc = parse_document(src)?;
    match doc {
        Document { main: Some(g), .. } => Ok(g),
        Document {
            ref imports,
            ref types,
            gtir: None,
            ..
        } if imports.is_empty() && types.len() == 1 => Ok(doc.types.into_values().next().expect("one type")),
        _ => Err(ParseError {
            position: Position { line: 1, column: 1 },
            message: "expected a single global type".into(),
        }),
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}:{error}", .file.display())]
    Parse { file: PathBuf, error: ParseError },
    #[error("cannot read {}: {source}", .file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("type {name} is defined in both {} and {}", .first.display(), .second.display())]
    DuplicateType {
        name: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("{}:{position}: unknown type {name}", .file.display())]
    UnknownType {
        file: PathBuf,
        position: Position,
        name: String,
    },
    #[error("{}:{position}: {error}", .file.display())]
    Gtir {
        file: PathBuf,
        position: Position,
        error: GtirError,
    },
    #[error("{}:{position}: declared interfaces {{{}}} differ from the computed {{{}}}", .file.display(), join(.declared), join(.computed))]
    InterfaceMismatch {
        file: PathBuf,
        position: Position,
        declared: BTreeSet<Role>,
        computed: BTreeSet<Role>,
    },
}

impl LoadError {
    /// Parse errors are malformed input; the rest concern the content.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, LoadError::Parse { .. } | LoadError::Io { .. })
    }
}

fn join(roles: &BTreeSet<Role>) -> String {
    roles.iter().map(Role::as_str).collect::<Vec<_>>().join(", ")
}

/// A file together with everything it imports.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub types: BTreeMap<String, GlobalType>,
    pub gtir: Option<GtirExpr>,
    pub main: Option<GlobalType>,
}

impl Program {
    /// The single global type the program is about: its bare type or its
    /// only named type.
    pub fn sole_type(&self) -> Option<&GlobalType> {
        match (&self.main, self.types.len()) {
            (Some(g), _) => Some(g),
            (None, 1) => self.types.values().next(),
            _ => None,
        }
    }
}

/// Loads `file`, resolving imports relative to the importing file through
/// `read`.
pub fn load_with(file: &Path, read: &mut dyn FnMut(&Path) -> io::Result<String>) -> Result<Program, LoadError> {
    let mut defined_in: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut program = Program::default();
    let mut visited = HashSet::new();
    let root = load_rec(file, read, &mut visited, &mut defined_in, &mut program)?;
    program.main = root.main;
    if let Some(syntax) = &root.gtir {
        program.gtir = Some(resolve(syntax, &program.types, file)?);
    }
    Ok(program)
}

pub fn load(file: &Path) -> Result<Program, LoadError> {
    load_with(file, &mut |p| std::fs::read_to_string(p))
}

fn load_rec(
    file: &Path,
    read: &mut dyn FnMut(&Path) -> io::Result<String>,
    visited: &mut HashSet<PathBuf>,
    defined_in: &mut BTreeMap<String, PathBuf>,
    program: &mut Program,
) -> Result<Document, LoadError> {
    visited.insert(file.to_path_buf());
    let src = read(file).map_err(|source| LoadError::Io {
        file: file.to_path_buf(),
        source,
    })?;
    let doc = parse_document(&src).map_err(|error| LoadError::Parse {
        file: file.to_path_buf(),
        error,
    })?;
    for (import, _) in &doc.imports {
        let path = file.parent().unwrap_or(Path::new("")).join(import);
        if !visited.contains(&path) {
            load_rec(&path, read, visited, defined_in, program)?;
        }
    }
    for (name, g) in &doc.types {
        if let Some(first) = defined_in.insert(name.clone(), file.to_path_buf()) {
            return Err(LoadError::DuplicateType {
                name: name.clone(),
                first,
                second: file.to_path_buf(),
            });
        }
        program.types.insert(name.clone(), g.clone());
    }
    Ok(doc)
}

fn resolve(syntax: &GtirSyntax, types: &BTreeMap<String, GlobalType>, file: &Path) -> Result<GtirExpr, LoadError> {
    let gtir_error = |position: Position| {
        move |error| LoadError::Gtir {
            file: file.to_path_buf(),
            position,
            error,
        }
    };
    match syntax {
        GtirSyntax::Base {
            name,
            interfaces,
            position,
        } => {
            let g = types.get(name).ok_or_else(|| LoadError::UnknownType {
                file: file.to_path_buf(),
                position: *position,
                name: name.clone(),
            })?;
            GtirExpr::base(name, g.clone(), interfaces.clone()).map_err(gtir_error(*position))
        }
        GtirSyntax::Connect {
            left,
            h,
            right,
            k,
            interfaces,
            position,
        } => {
            let left = resolve(left, types, file)?;
            let right = resolve(right, types, file)?;
            let expr = GtirExpr::connect(left, h.clone(), right, k.clone()).map_err(gtir_error(*position))?;
            if let Some(declared) = interfaces {
                let computed = expr.interfaces();
                if *declared != computed {
                    return Err(LoadError::InterfaceMismatch {
                        file: file.to_path_buf(),
                        position: *position,
                        declared: declared.clone(),
                        computed,
                    });
                }
            }
            Ok(expr)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn err(src: &str) -> ParseError {
        parse_document(src).unwrap_err()
    }

    #[test]
    fn interactions_and_sequences() {
        assert_eq!(
            parse_global_type("p->q:a").unwrap(),
            GlobalType::interaction("p", "q", "a")
        );
        assert_eq!(
            parse_global_type("p->q:a; q->p:b;").unwrap(),
            GlobalType::seq([
                GlobalType::interaction("p", "q", "a"),
                GlobalType::interaction("q", "p", "b")
            ])
        );
        assert_eq!(parse_global_type("end").unwrap(), GlobalType::End);
        assert_eq!(parse_global_type("{ }").unwrap(), GlobalType::Seq(vec![]));
    }

    #[test]
    fn choice_and_loop() {
        let g = parse_global_type("loop { choice at p { p->q:a; break or p->q:b } }").unwrap();
        let expected = GlobalType::repeat(GlobalType::choice(
            "p",
            [
                GlobalType::seq([GlobalType::interaction("p", "q", "a"), GlobalType::Break]),
                GlobalType::interaction("p", "q", "b"),
            ],
        ));
        assert_eq!(g, expected);
    }

    #[test]
    fn errors_carry_positions() {
        let e = err("p->q:a;\n  q->:b");
        assert_eq!(e.position, Position { line: 2, column: 6 });
        assert!(e.message.contains("role name"), "{e}");
        let e = err("p->q:a;\n  q->p:b\n  r->p:c");
        assert_eq!(e.position, Position { line: 3, column: 3 });
        assert_eq!(err("p - q").position, Position { line: 1, column: 3 });
        assert_eq!(err("p->p:a").position, Position { line: 1, column: 1 });
        assert_eq!(err("choice at p { p->q:a ").position.column, 22);
        assert!(err("p->q:loop").message.contains("message"));
    }

    #[test]
    fn comments_are_skipped() {
        let g = parse_global_type("# intro\np->q:a // trailing\n; q->p:b").unwrap();
        assert_eq!(g.roles().len(), 2);
    }

    #[test]
    fn fixture_types_parse() {
        let doc = parse_document(fixtures::FORWARDER_GT).unwrap();
        let g = &doc.types["Forwarder"];
        let roles: Vec<String> = g.roles().iter().map(ToString::to_string).collect();
        assert_eq!(roles, ["C", "H", "I", "J", "M", "T"]);
        g.validate().unwrap();
        parse_document(fixtures::ALTERNATOR_GT).unwrap().types["Alternator"]
            .validate()
            .unwrap();
    }

    #[test]
    fn gtir_expressions() {
        let doc = parse_document(fixtures::WORKING_GTIR).unwrap();
        assert_eq!(doc.imports.len(), 2);
        let Some(GtirSyntax::Connect { h, k, interfaces, .. }) = doc.gtir else {
            panic!("expected a connect expression");
        };
        assert_eq!((h.as_str(), k.as_str()), ("J", "K"));
        assert_eq!(interfaces, None);
        let nested = parse_document("gtir connect (connect base A interfaces {x} via x<->y base B interfaces {y, z}) via z<->w base C interfaces {w} interfaces {}").unwrap();
        assert!(matches!(nested.gtir, Some(GtirSyntax::Connect { interfaces: Some(ref i), .. }) if i.is_empty()));
    }

    fn in_memory(files: &[(&str, &str)]) -> impl FnMut(&Path) -> io::Result<String> {
        let files: BTreeMap<PathBuf, String> = files.iter().map(|(p, s)| (PathBuf::from(p), s.to_string())).collect();
        move |p| {
            files
                .get(p)
                .cloned()
                .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, "missing"))
        }
    }

    #[test]
    fn imports_resolve_relative_to_importer() {
        let mut read = in_memory(&[
            ("dir/main.gtir", fixtures::WORKING_GTIR),
            ("dir/forwarder.gt", fixtures::FORWARDER_GT),
            ("dir/alternator.gt", fixtures::ALTERNATOR_GT),
        ]);
        let program = load_with(Path::new("dir/main.gtir"), &mut read).unwrap();
        assert_eq!(program.types.len(), 2);
        assert!(program
            .gtir
            .unwrap()
            .interfaces()
            .iter()
            .map(Role::as_str)
            .eq(["H", "I"]));
    }

    #[test]
    fn load_errors() {
        let mut read = in_memory(&[
            ("a.gt", "type T { p->q:a }"),
            ("b.gt", "import \"a.gt\"\ntype T { end }"),
        ]);
        assert!(matches!(
            load_with(Path::new("b.gt"), &mut read),
            Err(LoadError::DuplicateType { .. })
        ));
        let mut read = in_memory(&[("c.gtir", "gtir base Missing interfaces {}")]);
        assert!(matches!(
            load_with(Path::new("c.gtir"), &mut read),
            Err(LoadError::UnknownType { .. })
        ));
        let mut read = in_memory(&[(
            "d.gtir",
            "type A { x->a:m }\ntype B { y->b:m }\ngtir connect base A interfaces {x} via x<->y base B interfaces {y} interfaces {a}",
        )]);
        assert!(matches!(
            load_with(Path::new("d.gtir"), &mut read),
            Err(LoadError::InterfaceMismatch { .. })
        ));
        let mut read = in_memory(&[("e.gt", "import \"nowhere.gt\"")]);
        let e = load_with(Path::new("e.gt"), &mut read).unwrap_err();
        assert!(e.is_parse_error());
    }
}
