use std::fmt;

use thiserror::Error;

use crate::store::Sign;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubjectRef {
    Agent(String),
    Group(String),
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectRef {
    Item(String),
    Collection(String),
    All,
}

/// Options shared by the entity-creating directives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Creation {
    pub type_name: Option<String>,
    pub creator: Option<String>,
    pub nodefault: bool,
    pub actor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectiveKind {
    Type {
        name: String,
        extends: Vec<String>,
        item_abilities: Vec<String>,
        global_abilities: Vec<String>,
    },
    Agent {
        id: String,
        opts: Creation,
    },
    Collection {
        id: String,
        opts: Creation,
    },
    /// `opts.type_name` is always set for items.
    Item {
        id: String,
        opts: Creation,
    },
    Member {
        collection: String,
        member: String,
        enabled: Option<bool>,
        actor: Option<String>,
    },
    Permit {
        subject: SubjectRef,
        object: ObjectRef,
        ability: String,
        sign: Sign,
        actor: Option<String>,
    },
    PermitGlobal {
        subject: SubjectRef,
        ability: String,
        sign: Sign,
        actor: Option<String>,
    },
    Check {
        agent: String,
        item: String,
        ability: String,
    },
    Filter {
        agent: String,
        ability: String,
    },
    Explain {
        agent: String,
        item: String,
        ability: String,
    },
    Lint {
        agent: String,
        item: String,
        ability: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub line: usize,
    pub kind: DirectiveKind,
}

impl fmt::Display for SubjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubjectRef::Agent(a) => write!(f, "agent:{a}"),
            SubjectRef::Group(g) => write!(f, "group:{g}"),
            SubjectRef::All => f.write_str("all"),
        }
    }
}

impl fmt::Display for ObjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectRef::Item(i) => write!(f, "item:{i}"),
            ObjectRef::Collection(c) => write!(f, "collection:{c}"),
            ObjectRef::All => f.write_str("all"),
        }
    }
}

fn write_actor(f: &mut fmt::Formatter<'_>, actor: &Option<String>) -> fmt::Result {
    match actor {
        Some(a) => write!(f, " as={a}"),
        None => Ok(()),
    }
}

impl fmt::Display for Creation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = &self.type_name {
            write!(f, " type={t}")?;
        }
        if let Some(c) = &self.creator {
            write!(f, " creator={c}")?;
        }
        if self.nodefault {
            f.write_str(" nodefault")?;
        }
        write_actor(f, &self.actor)
    }
}

/// Canonical form: parsing it yields the same directive kind.
impl fmt::Display for DirectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectiveKind::Type {
                name,
                extends,
                item_abilities,
                global_abilities,
            } => {
                write!(f, "type {name}")?;
                if !extends.is_empty() {
                    write!(f, " extends {}", extends.join(","))?;
                }
                if !item_abilities.is_empty() {
                    write!(f, " item_abilities=\"{}\"", item_abilities.join(";"))?;
                }
                if !global_abilities.is_empty() {
                    write!(f, " global_abilities=\"{}\"", global_abilities.join(";"))?;
                }
                Ok(())
            }
            DirectiveKind::Agent { id, opts } => write!(f, "agent {id}{opts}"),
            DirectiveKind::Collection { id, opts } => write!(f, "collection {id}{opts}"),
            DirectiveKind::Item { id, opts } => write!(f, "item {id}{opts}"),
            DirectiveKind::Member {
                collection,
                member,
                enabled,
                actor,
            } => {
                write!(f, "member {collection} {member}")?;
                if let Some(e) = enabled {
                    write!(f, " enabled={e}")?;
                }
                write_actor(f, actor)
            }
            DirectiveKind::Permit {
                subject,
                object,
                ability,
                sign,
                actor,
            } => {
                write!(f, "permit {subject} {object} \"{ability}\" {sign}")?;
                write_actor(f, actor)
            }
            DirectiveKind::PermitGlobal {
                subject,
                ability,
                sign,
                actor,
            } => {
                write!(f, "permit-global {subject} \"{ability}\" {sign}")?;
                write_actor(f, actor)
            }
            DirectiveKind::Check { agent, item, ability } => write!(f, "check {agent} {item} \"{ability}\""),
            DirectiveKind::Filter { agent, ability } => write!(f, "filter {agent} \"{ability}\""),
            DirectiveKind::Explain { agent, item, ability } => write!(f, "explain {agent} {item} \"{ability}\""),
            DirectiveKind::Lint { agent, item, ability } => write!(f, "lint {agent} {item} \"{ability}\""),
        }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Quoted(String),
    Pair(String, String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn tokenize(line_no: usize, line: &str) -> Result<Vec<Token>, ParseError> {
    let err = |column: usize, message: String| ParseError {
        line: line_no,
        column,
        message,
    };
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    // Reads a quoted string whose opening quote is at `start`.
    let quoted = |start: usize| -> Result<(String, usize), ParseError> {
        let mut j = start + 1;
        while j < chars.len() && chars[j] != '"' {
            j += 1;
        }
        if j == chars.len() {
            return Err(err(start + 1, "unterminated string".into()));
        }
        Ok((chars[start + 1..j].iter().collect(), j + 1))
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let (s, next) = quoted(i)?;
            tokens.push(Token {
                tok: Tok::Quoted(s),
                column: i + 1,
            });
            i = next;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '"' && chars[i] != '#' {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.split_once('=') {
                Some((k, "")) if i < chars.len() && chars[i] == '"' => {
                    let (s, next) = quoted(i)?;
                    i = next;
                    Tok::Pair(k.to_string(), s)
                }
                Some((k, v)) => Tok::Pair(k.to_string(), v.to_string()),
                None => Tok::Word(word),
            };
            if i < chars.len() && chars[i] == '"' {
                return Err(err(i + 1, "unexpected quote".into()));
            }
            tokens.push(Token { tok, column: start + 1 });
        }
    }
    Ok(tokens)
}

struct Cursor {
    line: usize,
    tokens: Vec<Token>,
    pos: usize,
    /// Column just past the end of the line, for "missing argument" errors.
    end: usize,
}

impl Cursor {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<Token, ParseError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(self.end, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Word(w) if is_ident(&w) => Ok(w),
            _ => Err(self.err(t.column, format!("expected {what}"))),
        }
    }

    fn ability(&mut self) -> Result<String, ParseError> {
        let t = self.next("quoted ability")?;
        match t.tok {
            Tok::Quoted(s) if valid_ability(&s) => Ok(s),
            Tok::Quoted(_) => Err(self.err(t.column, "malformed ability")),
            _ => Err(self.err(t.column, "expected quoted ability")),
        }
    }

    fn sign(&mut self) -> Result<Sign, ParseError> {
        let t = self.next("allow or deny")?;
        match &t.tok {
            Tok::Word(w) if w == "allow" => Ok(Sign::Allow),
            Tok::Word(w) if w == "deny" => Ok(Sign::Deny),
            _ => Err(self.err(t.column, "expected allow or deny")),
        }
    }

    fn subject(&mut self) -> Result<SubjectRef, ParseError> {
        let t = self.next("subject")?;
        let bad = || self.err(t.column, "malformed subject, expected agent:ID, group:ID or all");
        let Tok::Word(w) = &t.tok else { return Err(bad()) };
        match w.split_once(':') {
            None if w == "all" => Ok(SubjectRef::All),
            Some(("agent", id)) if is_ident(id) => Ok(SubjectRef::Agent(id.to_string())),
            Some(("group", id)) if is_ident(id) => Ok(SubjectRef::Group(id.to_string())),
            _ => Err(bad()),
        }
    }

    fn object(&mut self) -> Result<ObjectRef, ParseError> {
        let t = self.next("object")?;
        let bad = || self.err(t.column, "malformed object, expected item:ID, collection:ID or all");
        let Tok::Word(w) = &t.tok else { return Err(bad()) };
        match w.split_once(':') {
            None if w == "all" => Ok(ObjectRef::All),
            Some(("item", id)) if is_ident(id) => Ok(ObjectRef::Item(id.to_string())),
            Some(("collection", id)) if is_ident(id) => Ok(ObjectRef::Collection(id.to_string())),
            _ => Err(bad()),
        }
    }

    /// Consumes the remaining tokens as options. `flags` are bare words,
    /// `keys` are `key=value` pairs; each may appear once.
    fn options(&mut self, flags: &[&str], keys: &[&str]) -> Result<Vec<(String, String, usize)>, ParseError> {
        let mut seen: Vec<(String, String, usize)> = Vec::new();
        while self.pos < self.tokens.len() {
            let t = self.tokens[self.pos].clone();
            self.pos += 1;
            let (key, value) = match t.tok {
                Tok::Word(w) if flags.contains(&w.as_str()) => (w, String::new()),
                Tok::Pair(k, v) if keys.contains(&k.as_str()) => (k, v),
                Tok::Pair(k, _) => return Err(self.err(t.column, format!("unknown option `{k}`"))),
                _ => return Err(self.err(t.column, "unexpected argument")),
            };
            if seen.iter().any(|(k, _, _)| *k == key) {
                return Err(self.err(t.column, format!("duplicate option `{key}`")));
            }
            seen.push((key, value, t.column));
        }
        Ok(seen)
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.err(t.column, "unexpected argument")),
            None => Ok(()),
        }
    }
}

fn valid_ability(s: &str) -> bool {
    !s.is_empty() && s.trim() == s && !s.chars().any(|c| c.is_control() || c == '"')
}

fn ability_list(s: &str) -> Option<Vec<String>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(';')
        .map(|a| Some(a.trim().to_string()).filter(|a| valid_ability(a)))
        .collect()
}

fn option_ident(cur: &Cursor, value: &str, column: usize) -> Result<String, ParseError> {
    if is_ident(value) {
        Ok(value.to_string())
    } else {
        Err(cur.err(column, format!("malformed identifier `{value}`")))
    }
}

fn creation(cur: &mut Cursor, type_required: bool) -> Result<Creation, ParseError> {
    let mut opts = Creation::default();
    for (key, value, column) in cur.options(&["nodefault"], &["type", "creator", "as"])? {
        match key.as_str() {
            "type" => opts.type_name = Some(option_ident(cur, &value, column)?),
            "creator" => opts.creator = Some(option_ident(cur, &value, column)?),
            "as" => opts.actor = Some(option_ident(cur, &value, column)?),
            _ => opts.nodefault = true,
        }
    }
    if type_required && opts.type_name.is_none() {
        return Err(cur.err(cur.end, "item requires type=TYPE"));
    }
    Ok(opts)
}

fn actor_only(cur: &mut Cursor) -> Result<Option<String>, ParseError> {
    match cur.options(&[], &["as"])?.pop() {
        Some((_, value, column)) => Ok(Some(option_ident(cur, &value, column)?)),
        None => Ok(None),
    }
}

fn parse_type(cur: &mut Cursor) -> Result<DirectiveKind, ParseError> {
    let name = cur.ident("type name")?;
    let mut extends = Vec::new();
    if let Some(Token { tok: Tok::Word(w), .. }) = cur.tokens.get(cur.pos) {
        if w == "extends" {
            cur.pos += 1;
            let t = cur.next("parent list")?;
            let Tok::Word(list) = t.tok else {
                return Err(cur.err(t.column, "expected parent list"));
            };
            extends = list.split(',').map(str::to_string).collect();
            if !extends.iter().all(|p| is_ident(p)) {
                return Err(cur.err(t.column, "malformed parent list"));
            }
        }
    }
    let mut item_abilities = Vec::new();
    let mut global_abilities = Vec::new();
    for (key, value, column) in cur.options(&[], &["item_abilities", "global_abilities"])? {
        let list = ability_list(&value).ok_or_else(|| cur.err(column, "malformed ability list"))?;
        if key == "item_abilities" {
            item_abilities = list;
        } else {
            global_abilities = list;
        }
    }
    Ok(DirectiveKind::Type {
        name,
        extends,
        item_abilities,
        global_abilities,
    })
}

fn parse_line(line_no: usize, line: &str) -> Result<Option<DirectiveKind>, ParseError> {
    let tokens = tokenize(line_no, line)?;
    let Some(first) = tokens.first().cloned() else {
        return Ok(None);
    };
    let mut cur = Cursor {
        line: line_no,
        tokens,
        pos: 1,
        end: line.chars().count() + 1,
    };
    let Tok::Word(keyword) = first.tok else {
        return Err(cur.err(first.column, "expected a directive keyword"));
    };
    let kind = match keyword.as_str() {
        "type" => parse_type(&mut cur)?,
        "agent" => DirectiveKind::Agent {
            id: cur.ident("agent id")?,
            opts: creation(&mut cur, false)?,
        },
        "collection" => DirectiveKind::Collection {
            id: cur.ident("collection id")?,
            opts: creation(&mut cur, false)?,
        },
        "item" => DirectiveKind::Item {
            id: cur.ident("item id")?,
            opts: creation(&mut cur, true)?,
        },
        "member" => {
            let collection = cur.ident("collection id")?;
            let member = cur.ident("member id")?;
            let mut enabled = None;
            let mut actor = None;
            for (key, value, column) in cur.options(&[], &["enabled", "as"])? {
                if key == "as" {
                    actor = Some(option_ident(&cur, &value, column)?);
                } else {
                    enabled = Some(match value.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => return Err(cur.err(column, "enabled must be true or false")),
                    });
                }
            }
            DirectiveKind::Member {
                collection,
                member,
                enabled,
                actor,
            }
        }
        "permit" => DirectiveKind::Permit {
            subject: cur.subject()?,
            object: cur.object()?,
            ability: cur.ability()?,
            sign: cur.sign()?,
            actor: actor_only(&mut cur)?,
        },
        "permit-global" => DirectiveKind::PermitGlobal {
            subject: cur.subject()?,
            ability: cur.ability()?,
            sign: cur.sign()?,
            actor: actor_only(&mut cur)?,
        },
        "check" => DirectiveKind::Check {
            agent: cur.ident("agent id")?,
            item: cur.ident("item id")?,
            ability: cur.ability()?,
        },
        "filter" => DirectiveKind::Filter {
            agent: cur.ident("agent id")?,
            ability: cur.ability()?,
        },
        "explain" => DirectiveKind::Explain {
            agent: cur.ident("agent id")?,
            item: cur.ident("item id")?,
            ability: cur.ability()?,
        },
        "lint" => DirectiveKind::Lint {
            agent: cur.ident("agent id")?,
            item: cur.ident("item id")?,
            ability: cur.ability()?,
        },
        other => return Err(cur.err(first.column, format!("unknown directive `{other}`"))),
    };
    cur.finish()?;
    Ok(Some(kind))
}

/// Parses a scenario file. Blank lines and `#` comments are skipped; line
/// numbers are 1-based.
pub fn parse_scenario(text: &str) -> Result<Vec<Directive>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(kind) = parse_line(i + 1, line)? {
            out.push(Directive { line: i + 1, kind });
        }
    }
    Ok(out)
}
