//! Text syntax: L formulas, SLls formulas, loopless programs and annotated
//! program files.
//!
//! L syntax, loosest binding first:
//!
//! ```text
//! formula  := f2 ("->" formula)?
//! f2       := f3 ("||" f3)*
//! f3       := f4 ("&&" f4)*
//! f4       := term ("<=" | "==") term | "!" f4 | "func" "(" term ")"
//!           | "@" name | "true" | "false" | "(" formula ")"
//! term     := t2 ("|" t2)*          union
//! t2       := t3 ("&" t3)*          intersection
//! t3       := t4 ("\" t4)*          difference
//! t4       := t5 ("x" t5)?          product
//! t5       := "!" t5 | "ex" t6 "." t5 | t6
//! t6       := t7 ("^-")*
//! t7       := name | "o:" name | "top" | "bot" | "(o:a, o:b)" | "(" term ")"
//! ```
//!
//! Whether a term denotes a concept or a role is inferred from the declared
//! symbols and the operators used.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::dl::{Concept, LFormula, Role};
use crate::memstruct::{SymbolKind, VocabError, Vocabulary};
use crate::prog::{assign_labels, desugar, BoolExpr, Command, Edge, Expr, Location, ProgramGraph, ProgramOptions};
use crate::sl::{Chunk, PureAtom, SLFormula, SlExpr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("`{name}` is a {found}, expected a {expected}")]
    Sort { name: String, found: &'static str, expected: &'static str },
    #[error("unknown named formula `@{0}`")]
    UnknownFormula(String),
    #[error("duplicate location `{0}`")]
    DuplicateLocation(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("edge mentions unknown location `{0}`")]
    UnknownLocation(String),
    #[error("expected exactly one init location, found {0}")]
    InitCount(usize),
    #[error("init location `{0}` has an incoming edge")]
    InitHasIncoming(String),
    #[error("location `{0}` lacks a `{1}` annotation")]
    MissingAnnotation(String, &'static str),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    "|->", "||", "&&", "->", "<=", "==", "!=", ":=", "^-", "|", "&", "\\", "!", "(", ")", "[", "]", "{", "}", ",", ";",
    ".", "=", "*", "~", "@", ":",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let bump = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    'outer: while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump(c, &mut line, &mut col);
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l, cl) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: l, col: cl });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
                col += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse().map_err(|_| ParseError::Syntax { line: l, col: cl, msg: format!("bad number `{s}`") })?;
            out.push(Token { tok: Tok::Num(n), line: l, col: cl });
            continue;
        }
        for sym in SYMBOLS {
            let n = sym.chars().count();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(sym.chars()) {
                out.push(Token { tok: Tok::Sym(sym), line: l, col: cl });
                i += n;
                col += n;
                continue 'outer;
            }
        }
        return Err(ParseError::Syntax { line: l, col: cl, msg: format!("unexpected character `{c}`") });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Untyped concept/role term, sorted after parsing.
#[derive(Debug, Clone)]
enum Term {
    Name(String),
    Nominal(String),
    Top,
    Bot,
    Pair(String, String),
    Or(Box<Term>, Box<Term>),
    And(Box<Term>, Box<Term>),
    Diff(Box<Term>, Box<Term>),
    Product(Box<Term>, Box<Term>),
    Not(Box<Term>),
    Exists(Box<Term>, Box<Term>),
    Inverse(Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sort {
    Concept,
    Role,
}

/// Resolves names while sorting terms. `strict` rejects undeclared names.
struct Resolver<'a> {
    vocab: Option<&'a Vocabulary>,
    strict: bool,
    formulas: Option<&'a BTreeMap<String, LFormula>>,
}

impl Resolver<'_> {
    fn kind(&self, name: &str) -> Result<Option<SymbolKind>, ParseError> {
        let k = self.vocab.and_then(|v| v.kind(name));
        if k.is_none() && self.strict {
            return Err(ParseError::Undeclared(name.to_string()));
        }
        Ok(k)
    }

    fn sort_of(&self, t: &Term) -> Result<Option<Sort>, ParseError> {
        Ok(match t {
            Term::Name(n) => match self.kind(n)? {
                Some(SymbolKind::Concept) => Some(Sort::Concept),
                Some(SymbolKind::Role) => Some(Sort::Role),
                Some(SymbolKind::Constant) => {
                    return Err(ParseError::Sort { name: n.clone(), found: "constant", expected: "concept or role" })
                }
                None => None,
            },
            Term::Nominal(_) | Term::Top | Term::Bot | Term::Not(_) | Term::Exists(..) => Some(Sort::Concept),
            Term::Pair(..) | Term::Diff(..) | Term::Product(..) | Term::Inverse(_) => Some(Sort::Role),
            Term::Or(a, b) | Term::And(a, b) => match self.sort_of(a)? {
                Some(s) => Some(s),
                None => self.sort_of(b)?,
            },
        })
    }

    fn constant(&self, n: &str) -> Result<(), ParseError> {
        match self.kind(n)? {
            Some(SymbolKind::Constant) | None => Ok(()),
            Some(SymbolKind::Concept) => {
                Err(ParseError::Sort { name: n.into(), found: "concept", expected: "constant" })
            }
            Some(SymbolKind::Role) => Err(ParseError::Sort { name: n.into(), found: "role", expected: "constant" }),
        }
    }

    fn concept(&self, t: &Term) -> Result<Concept, ParseError> {
        let wrong = |what: &str| ParseError::Sort { name: what.to_string(), found: "role", expected: "concept" };
        Ok(match t {
            Term::Name(n) => match self.kind(n)? {
                Some(SymbolKind::Concept) | None => Concept::atom(n),
                Some(SymbolKind::Role) => return Err(wrong(n)),
                Some(SymbolKind::Constant) => {
                    return Err(ParseError::Sort { name: n.clone(), found: "constant", expected: "concept" })
                }
            },
            Term::Nominal(n) => {
                self.constant(n)?;
                Concept::nominal(n)
            }
            Term::Top => Concept::Top,
            Term::Bot => Concept::Bottom,
            Term::Or(a, b) => Concept::or(self.concept(a)?, self.concept(b)?),
            Term::And(a, b) => Concept::and(self.concept(a)?, self.concept(b)?),
            Term::Not(a) => Concept::not(self.concept(a)?),
            Term::Exists(r, c) => Concept::exists(self.role(r)?, self.concept(c)?),
            Term::Pair(..) => return Err(wrong("pair")),
            Term::Diff(..) => return Err(wrong("difference")),
            Term::Product(..) => return Err(wrong("product")),
            Term::Inverse(..) => return Err(wrong("inverse")),
        })
    }

    fn role(&self, t: &Term) -> Result<Role, ParseError> {
        let wrong = |what: &str| ParseError::Sort { name: what.to_string(), found: "concept", expected: "role" };
        Ok(match t {
            Term::Name(n) => match self.kind(n)? {
                Some(SymbolKind::Role) | None => Role::atom(n),
                Some(SymbolKind::Concept) => return Err(wrong(n)),
                Some(SymbolKind::Constant) => {
                    return Err(ParseError::Sort { name: n.clone(), found: "constant", expected: "role" })
                }
            },
            Term::Pair(a, b) => {
                self.constant(a)?;
                self.constant(b)?;
                Role::pair(a, b)
            }
            Term::Or(a, b) => Role::union(self.role(a)?, self.role(b)?),
            Term::And(a, b) => Role::intersect(self.role(a)?, self.role(b)?),
            Term::Diff(a, b) => Role::diff(self.role(a)?, self.role(b)?),
            Term::Product(a, b) => Role::product(self.concept(a)?, self.concept(b)?),
            Term::Inverse(a) => Role::inverse(self.role(a)?),
            Term::Nominal(n) => return Err(wrong(n)),
            Term::Top => return Err(wrong("top")),
            Term::Bot => return Err(wrong("bot")),
            Term::Not(_) => return Err(wrong("negation")),
            Term::Exists(..) => return Err(wrong("existential")),
        })
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(ParseError::Syntax { line: t.line, col: t.col, msg: format!("{}, found {found}", msg.into()) })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.err("expected a name"),
        }
    }

    fn number(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.err("expected a number"),
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err("expected end of input")
        }
    }

    // Terms.

    fn term(&mut self) -> PResult<Term> {
        let mut t = self.term2()?;
        while self.eat_sym("|") {
            t = Term::Or(Box::new(t), Box::new(self.term2()?));
        }
        Ok(t)
    }

    fn term2(&mut self) -> PResult<Term> {
        let mut t = self.term3()?;
        while self.eat_sym("&") {
            t = Term::And(Box::new(t), Box::new(self.term3()?));
        }
        Ok(t)
    }

    fn term3(&mut self) -> PResult<Term> {
        let mut t = self.term4()?;
        while self.eat_sym("\\") {
            t = Term::Diff(Box::new(t), Box::new(self.term4()?));
        }
        Ok(t)
    }

    fn term4(&mut self) -> PResult<Term> {
        let t = self.term5()?;
        if self.eat_kw("x") {
            return Ok(Term::Product(Box::new(t), Box::new(self.term5()?)));
        }
        Ok(t)
    }

    fn term5(&mut self) -> PResult<Term> {
        if self.eat_sym("!") {
            return Ok(Term::Not(Box::new(self.term5()?)));
        }
        if self.eat_kw("ex") {
            let r = self.term6()?;
            self.expect_sym(".")?;
            let c = self.term5()?;
            return Ok(Term::Exists(Box::new(r), Box::new(c)));
        }
        self.term6()
    }

    fn term6(&mut self) -> PResult<Term> {
        let mut t = self.term7()?;
        while self.eat_sym("^-") {
            t = Term::Inverse(Box::new(t));
        }
        Ok(t)
    }

    fn nominal_name(&mut self) -> PResult<String> {
        self.expect_kw("o")?;
        self.expect_sym(":")?;
        self.ident()
    }

    fn term7(&mut self) -> PResult<Term> {
        if self.is_kw("o") && matches!(self.peek_at(1), Tok::Sym(":")) {
            return Ok(Term::Nominal(self.nominal_name()?));
        }
        if self.eat_sym("(") {
            let inner = self.term()?;
            if let Term::Nominal(a) = &inner {
                if self.eat_sym(",") {
                    let b = self.nominal_name()?;
                    self.expect_sym(")")?;
                    return Ok(Term::Pair(a.clone(), b));
                }
            }
            self.expect_sym(")")?;
            return Ok(inner);
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "top" => {
                self.advance();
                Ok(Term::Top)
            }
            Tok::Ident(s) if s == "bot" => {
                self.advance();
                Ok(Term::Bot)
            }
            Tok::Ident(s) if !is_term_keyword(&s) => {
                self.advance();
                Ok(Term::Name(s))
            }
            _ => self.err("expected a concept or role"),
        }
    }

    // Formulas.

    fn formula(&mut self, res: &Resolver) -> PResult<LFormula> {
        let a = self.formula2(res)?;
        if self.eat_sym("->") {
            return Ok(LFormula::implies(a, self.formula(res)?));
        }
        Ok(a)
    }

    fn formula2(&mut self, res: &Resolver) -> PResult<LFormula> {
        let mut a = self.formula3(res)?;
        while self.eat_sym("||") {
            a = LFormula::or(a, self.formula3(res)?);
        }
        Ok(a)
    }

    fn formula3(&mut self, res: &Resolver) -> PResult<LFormula> {
        let mut a = self.formula4(res)?;
        while self.eat_sym("&&") {
            a = LFormula::and(a, self.formula4(res)?);
        }
        Ok(a)
    }

    fn formula4(&mut self, res: &Resolver) -> PResult<LFormula> {
        if self.eat_kw("func") {
            self.expect_sym("(")?;
            let t = self.term()?;
            self.expect_sym(")")?;
            return Ok(LFormula::func(res.role(&t)?));
        }
        if self.eat_sym("@") {
            let name = self.ident()?;
            return res.formulas.and_then(|fs| fs.get(&name)).cloned().ok_or(ParseError::UnknownFormula(name));
        }
        if self.eat_kw("true") {
            return Ok(LFormula::truth());
        }
        if self.eat_kw("false") {
            return Ok(LFormula::not(LFormula::truth()));
        }
        let start = self.pos;
        match self.atomic_formula(res) {
            Ok(f) => Ok(f),
            Err(e @ ParseError::Syntax { .. }) => {
                let committed = self.pos;
                self.pos = start;
                if self.eat_sym("!") {
                    return Ok(LFormula::not(self.formula4(res)?));
                }
                if self.eat_sym("(") {
                    let f = self.formula(res)?;
                    self.expect_sym(")")?;
                    return Ok(f);
                }
                self.pos = committed;
                Err(e)
            }
            Err(e) => Err(e),
        }
    }

    fn atomic_formula(&mut self, res: &Resolver) -> PResult<LFormula> {
        let lhs = self.term()?;
        let equiv = if self.eat_sym("<=") {
            false
        } else if self.eat_sym("==") {
            true
        } else {
            return self.err("expected `<=` or `==`");
        };
        let rhs = self.term()?;
        let sort = match res.sort_of(&lhs)? {
            Some(s) => s,
            None => res.sort_of(&rhs)?.unwrap_or(Sort::Concept),
        };
        Ok(match (sort, equiv) {
            (Sort::Concept, false) => LFormula::incl(res.concept(&lhs)?, res.concept(&rhs)?),
            (Sort::Concept, true) => LFormula::equiv(res.concept(&lhs)?, res.concept(&rhs)?),
            (Sort::Role, false) => LFormula::role_incl(res.role(&lhs)?, res.role(&rhs)?),
            (Sort::Role, true) => LFormula::role_equiv(res.role(&lhs)?, res.role(&rhs)?),
        })
    }

    // Separation logic.

    fn sl_expr(&mut self) -> PResult<SlExpr> {
        Ok(SlExpr::var(&self.ident()?))
    }

    fn pure_atom(&mut self) -> PResult<PureAtom> {
        if self.eat_kw("true") {
            return Ok(PureAtom::True);
        }
        let a = self.sl_expr()?;
        if self.eat_sym("=") {
            Ok(PureAtom::Eq(a, self.sl_expr()?))
        } else if self.eat_sym("!=") {
            Ok(PureAtom::Neq(a, self.sl_expr()?))
        } else {
            self.err("expected `=` or `!=`")
        }
    }

    fn pure_part(&mut self) -> PResult<Vec<PureAtom>> {
        let mut out = vec![self.pure_atom()?];
        while self.eat_sym("&") {
            out.push(self.pure_atom()?);
        }
        self.expect_sym("|")?;
        Ok(out)
    }

    fn chunk(&mut self) -> PResult<Chunk> {
        if self.is_kw("ls") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.advance();
            self.advance();
            let a = self.sl_expr()?;
            self.expect_sym(",")?;
            let b = self.sl_expr()?;
            self.expect_sym(")")?;
            return Ok(Chunk::Ls(a, b));
        }
        let var = self.ident()?;
        self.expect_sym("|->")?;
        self.expect_sym("[")?;
        let mut fields = Vec::new();
        if !self.is_sym("]") {
            loop {
                let f = self.ident()?;
                self.expect_sym(":")?;
                fields.push((f, self.sl_expr()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        Ok(Chunk::PointsTo { var, fields })
    }

    fn sl_formula(&mut self) -> PResult<SLFormula> {
        let start = self.pos;
        let pure = match self.pure_part() {
            Ok(p) => p,
            Err(_) => {
                self.pos = start;
                Vec::new()
            }
        };
        if self.eat_kw("emp") {
            return Ok(SLFormula::new(pure, Vec::new()));
        }
        let mut chunks = vec![self.chunk()?];
        while self.eat_sym("*") {
            chunks.push(self.chunk()?);
        }
        Ok(SLFormula::new(pure, chunks))
    }

    // Programs.

    fn expr(&mut self) -> PResult<Expr> {
        let v = self.ident()?;
        if v == "null" {
            return Ok(Expr::Null);
        }
        if is_program_keyword(&v) {
            self.pos -= 1;
            return self.err("expected an expression");
        }
        if self.eat_sym(".") {
            return Ok(Expr::Field(v, self.ident()?));
        }
        Ok(Expr::Var(v))
    }

    fn bool_expr(&mut self) -> PResult<BoolExpr> {
        let mut a = self.bool2()?;
        while self.eat_kw("or") {
            a = BoolExpr::or(a, self.bool2()?);
        }
        Ok(a)
    }

    fn bool2(&mut self) -> PResult<BoolExpr> {
        let mut a = self.bool3()?;
        while self.eat_kw("and") {
            a = BoolExpr::and(a, self.bool3()?);
        }
        Ok(a)
    }

    fn bool3(&mut self) -> PResult<BoolExpr> {
        if self.eat_sym("~") {
            return Ok(BoolExpr::not(self.bool3()?));
        }
        if self.eat_sym("(") {
            let b = self.bool_expr()?;
            self.expect_sym(")")?;
            return Ok(b);
        }
        if self.eat_kw("true") {
            return Ok(BoolExpr::True);
        }
        if self.eat_kw("false") {
            return Ok(BoolExpr::False);
        }
        let a = self.expr()?;
        if self.eat_sym("=") {
            Ok(BoolExpr::eq(a, self.expr()?))
        } else if self.eat_sym("!=") {
            Ok(BoolExpr::not(BoolExpr::eq(a, self.expr()?)))
        } else {
            self.err("expected `=` or `!=`")
        }
    }

    fn block(&mut self) -> PResult<Command> {
        self.expect_sym("{")?;
        let c = self.commands(|p| p.is_sym("}"))?;
        self.expect_sym("}")?;
        Ok(c)
    }

    fn commands(&mut self, stop: impl Fn(&Self) -> bool) -> PResult<Command> {
        let mut out = Vec::new();
        while !stop(self) {
            out.push(self.command()?);
        }
        Ok(match out.len() {
            0 => Command::Skip,
            1 => out.pop().unwrap(),
            _ => Command::Seq(out),
        })
    }

    fn command(&mut self) -> PResult<Command> {
        if self.eat_kw("skip") {
            self.expect_sym(";")?;
            return Ok(Command::Skip);
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let b = self.bool_expr()?;
            self.expect_sym(")")?;
            let t = self.block()?;
            if self.eat_kw("else") {
                let e = self.block()?;
                return Ok(Command::if_else(b, t, e));
            }
            return Ok(Command::IfThen(b, Box::new(t)));
        }
        if self.eat_kw("assume") {
            self.expect_sym("(")?;
            let b = self.bool_expr()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Command::Assume(b));
        }
        if self.eat_kw("dispose") {
            self.expect_sym("(")?;
            let v = self.ident()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            return Ok(Command::Dispose(v));
        }
        let v = self.ident()?;
        if is_program_keyword(&v) || v == "null" {
            self.pos -= 1;
            return self.err("expected a command");
        }
        let cmd = if self.eat_sym(".") {
            let f = self.ident()?;
            self.expect_sym(":=")?;
            Command::field_assign(&v, &f, self.expr()?)
        } else {
            self.expect_sym(":=")?;
            if self.eat_kw("new") {
                Command::new_cell(&v)
            } else {
                Command::assign(&v, self.expr()?)
            }
        };
        self.expect_sym(";")?;
        Ok(cmd)
    }
}

fn is_term_keyword(s: &str) -> bool {
    matches!(s, "x" | "ex" | "func" | "true" | "false")
}

fn is_program_keyword(s: &str) -> bool {
    matches!(s, "if" | "else" | "skip" | "assume" | "dispose" | "new" | "and" | "or" | "true" | "false")
}

fn loose<'a>(vocab: Option<&'a Vocabulary>) -> Resolver<'a> {
    Resolver { vocab, strict: false, formulas: None }
}

/// Parses an L formula. Names are sorted using `vocab` when given; unknown
/// names default to concepts unless an operator forces a role.
pub fn parse_formula(text: &str, vocab: Option<&Vocabulary>) -> Result<LFormula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula(&loose(vocab))?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_concept(text: &str, vocab: Option<&Vocabulary>) -> Result<Concept, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_eof()?;
    loose(vocab).concept(&t)
}

pub fn parse_role(text: &str, vocab: Option<&Vocabulary>) -> Result<Role, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_eof()?;
    loose(vocab).role(&t)
}

pub fn parse_sl(text: &str) -> Result<SLFormula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.sl_formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses a sequence of commands in surface syntax, without desugaring.
pub fn parse_command(text: &str) -> Result<Command, ParseError> {
    let mut p = Parser::new(text)?;
    let c = p.commands(|p| p.at_eof())?;
    p.expect_eof()?;
    Ok(c)
}

/// Top-level declarations of an annotated program file, in source order.
#[derive(Debug, Clone, Default)]
struct Header {
    fields: Vec<String>,
    vars: Vec<String>,
    concepts: Vec<String>,
    roles: Vec<String>,
    ghosts: Vec<String>,
    options: ProgramOptions,
}

struct RawLocation {
    name: String,
    init: bool,
    shp: Option<SLFormula>,
    def: Option<LFormula>,
    cnt: Option<LFormula>,
}

fn name_list(p: &mut Parser) -> PResult<Vec<String>> {
    let mut out = vec![p.ident()?];
    while p.eat_sym(",") {
        out.push(p.ident()?);
    }
    p.expect_sym(";")?;
    Ok(out)
}

/// Parses an annotated program file into a resolved graph: vocabulary built,
/// ghost twins and partition concepts added, edge code desugared and labelled.
pub fn parse_program(text: &str) -> Result<ProgramGraph, ParseError> {
    let mut p = Parser::new(text)?;
    let mut h = Header::default();
    loop {
        if p.eat_kw("fields") {
            h.fields.extend(name_list(&mut p)?);
        } else if p.eat_kw("vars") {
            h.vars.extend(name_list(&mut p)?);
        } else if p.eat_kw("concepts") {
            h.concepts.extend(name_list(&mut p)?);
        } else if p.eat_kw("roles") {
            h.roles.extend(name_list(&mut p)?);
        } else if p.eat_kw("ghost") {
            h.ghosts.extend(name_list(&mut p)?);
        } else if p.eat_kw("option") {
            let key = p.ident()?;
            p.expect_sym("=")?;
            let n = p.number()? as usize;
            p.expect_sym(";")?;
            match key.as_str() {
                "bound" => h.options.bound = n,
                "reserve" => h.options.reserve = n,
                _ => return p.err(format!("unknown option `{key}`")),
            }
        } else {
            break;
        }
    }

    let mut vocab = Vocabulary::new();
    for f in &h.fields {
        vocab.add_field(f)?;
    }
    for v in &h.vars {
        if v == crate::wp::ABO || v.starts_with("tmp_") {
            return Err(ParseError::Reserved(v.clone()));
        }
        vocab.add_var(v)?;
    }
    for c in &h.concepts {
        vocab.add_concept(c)?;
    }
    for r in &h.roles {
        vocab.add_role(r)?;
    }
    for g in &h.ghosts {
        vocab.add_ghost(g)?;
    }

    // Formulas and locations refer to partition concepts, so the shapes are
    // read first in a pass that only collects chunk counts.
    let body_start = p.pos;
    let mut max_chunks = 0;
    while !p.at_eof() {
        if p.eat_kw("loc") {
            p.ident()?;
            p.eat_kw("init");
            p.expect_sym("{")?;
            while !p.is_sym("}") && !p.at_eof() {
                if p.is_kw("shp") && matches!(p.peek_at(1), Tok::Sym(":")) {
                    p.advance();
                    p.advance();
                    let s = p.sl_formula()?;
                    max_chunks = max_chunks.max(s.chunks().len());
                } else {
                    p.advance();
                }
            }
        }
        p.advance();
    }
    p.pos = body_start;
    let partitions: Vec<String> = (1..=max_chunks).map(|i| format!("P{i}")).collect();
    for name in &partitions {
        if vocab.kind(name).is_some() {
            return Err(ParseError::Reserved(name.clone()));
        }
        vocab.add_concept(name)?;
    }

    let mut formulas: Vec<(String, LFormula)> = Vec::new();
    let mut named: BTreeMap<String, LFormula> = BTreeMap::new();
    let mut raw_locs: Vec<RawLocation> = Vec::new();
    let mut raw_edges: Vec<(String, String, Command)> = Vec::new();
    while !p.at_eof() {
        if p.eat_kw("formula") {
            let name = p.ident()?;
            p.expect_sym("=")?;
            let f = p.formula(&Resolver { vocab: Some(&vocab), strict: true, formulas: Some(&named) })?;
            p.expect_sym(";")?;
            named.insert(name.clone(), f.clone());
            formulas.push((name, f));
        } else if p.eat_kw("loc") {
            let name = p.ident()?;
            let init = p.eat_kw("init");
            p.expect_sym("{")?;
            let mut loc = RawLocation { name, init, shp: None, def: None, cnt: None };
            while !p.eat_sym("}") {
                let key = p.ident()?;
                p.expect_sym(":")?;
                match key.as_str() {
                    "shp" => loc.shp = Some(p.sl_formula()?),
                    "def" | "cnt" => {
                        let f = p.formula(&Resolver { vocab: Some(&vocab), strict: true, formulas: Some(&named) });
                        if key == "def" {
                            loc.def = Some(f?);
                        } else {
                            loc.cnt = Some(f?);
                        }
                    }
                    _ => {
                        p.pos -= 2;
                        return p.err("expected `shp`, `def` or `cnt`");
                    }
                }
                p.expect_sym(";")?;
            }
            raw_locs.push(loc);
        } else if p.eat_kw("edge") {
            let from = p.ident()?;
            p.expect_sym("->")?;
            let to = p.ident()?;
            let code = p.block()?;
            raw_edges.push((from, to, code));
        } else {
            return p.err("expected `formula`, `loc` or `edge`");
        }
    }

    build_graph(vocab, h, partitions, formulas, raw_locs, raw_edges)
}

fn check_sl_vars(s: &SLFormula, vocab: &Vocabulary) -> Result<(), ParseError> {
    for v in s.vars() {
        if !vocab.is_var(&v) {
            return Err(ParseError::Undeclared(v));
        }
    }
    for c in s.chunks() {
        if let Chunk::PointsTo { fields, .. } = c {
            for (f, _) in fields {
                if !vocab.is_field(f) {
                    return Err(ParseError::Undeclared(f.clone()));
                }
            }
        }
    }
    Ok(())
}

fn check_command(c: &Command, vocab: &Vocabulary) -> Result<(), ParseError> {
    for v in c.vars() {
        if !vocab.is_var(&v) {
            return Err(ParseError::Undeclared(v));
        }
    }
    match c.fields().into_iter().find(|f| !vocab.is_field(f)) {
        Some(f) => Err(ParseError::Undeclared(f)),
        None => Ok(()),
    }
}

fn build_graph(
    vocab: Vocabulary,
    h: Header,
    partitions: Vec<String>,
    formulas: Vec<(String, LFormula)>,
    raw_locs: Vec<RawLocation>,
    raw_edges: Vec<(String, String, Command)>,
) -> Result<ProgramGraph, ParseError> {
    let mut locations = Vec::new();
    let mut names = BTreeSet::new();
    let inits: Vec<&RawLocation> = raw_locs.iter().filter(|l| l.init).collect();
    // A file without locations is a formula library.
    if inits.len() != 1 && !(raw_locs.is_empty() && raw_edges.is_empty()) {
        return Err(ParseError::InitCount(inits.len()));
    }
    let init = inits.first().map(|l| l.name.clone()).unwrap_or_default();
    for l in raw_locs {
        if !names.insert(l.name.clone()) {
            return Err(ParseError::DuplicateLocation(l.name));
        }
        let shp = l.shp.ok_or_else(|| ParseError::MissingAnnotation(l.name.clone(), "shp"))?;
        check_sl_vars(&shp, &vocab)?;
        let cnt = l.cnt.ok_or_else(|| ParseError::MissingAnnotation(l.name.clone(), "cnt"))?;
        locations.push(Location { name: l.name, shp, def: l.def.unwrap_or_else(LFormula::truth), cnt });
    }
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    let mut taken: BTreeSet<String> = vocab.constants.clone();
    taken.extend(vocab.unary.iter().cloned());
    taken.extend(vocab.binary.iter().cloned());
    for (from, to, source) in raw_edges {
        for l in [&from, &to] {
            if !names.contains(l) {
                return Err(ParseError::UnknownLocation(l.clone()));
            }
        }
        if to == init {
            return Err(ParseError::InitHasIncoming(init));
        }
        if !seen.insert((from.clone(), to.clone())) {
            return Err(ParseError::DuplicateEdge(from, to));
        }
        check_command(&source, &vocab)?;
        let code = assign_labels(&desugar(&source), "y_", &mut taken);
        edges.push(Edge { from, to, source, code });
    }
    Ok(ProgramGraph {
        vocab,
        declared_fields: h.fields,
        declared_vars: h.vars,
        declared_concepts: h.concepts,
        declared_roles: h.roles,
        ghosts: h.ghosts,
        partitions,
        formulas,
        locations,
        init,
        edges,
        options: h.options,
    })
}

/// Prints a graph back in the annotated file format. Named formulas are printed
/// as declarations; annotations are printed expanded.
pub fn print_program(g: &ProgramGraph) -> String {
    let mut out = String::new();
    let list = |out: &mut String, kw: &str, xs: &[String]| {
        if !xs.is_empty() {
            let _ = writeln!(out, "{kw} {};", xs.join(", "));
        }
    };
    list(&mut out, "fields", &g.declared_fields);
    list(&mut out, "vars", &g.declared_vars);
    list(&mut out, "concepts", &g.declared_concepts);
    list(&mut out, "roles", &g.declared_roles);
    list(&mut out, "ghost", &g.ghosts);
    let _ = writeln!(out, "option bound = {};", g.options.bound);
    let _ = writeln!(out, "option reserve = {};", g.options.reserve);
    for (name, f) in &g.formulas {
        let _ = writeln!(out, "\nformula {name} =\n  {f};");
    }
    for l in &g.locations {
        let init = if l.name == g.init { " init" } else { "" };
        let _ = writeln!(out, "\nloc {}{init} {{", l.name);
        let _ = writeln!(out, "  shp: {};", l.shp);
        if l.def != LFormula::truth() {
            let _ = writeln!(out, "  def: {};", l.def);
        }
        let _ = writeln!(out, "  cnt: {};", l.cnt);
        let _ = writeln!(out, "}}");
    }
    for e in &g.edges {
        let _ = writeln!(out, "\nedge {} -> {} {{", e.from, e.to);
        let _ = write!(out, "{:1}", e.source);
        let _ = writeln!(out, "}}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memstruct::Vocabulary;

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field("wrkFor").unwrap();
        v.add_field("next").unwrap();
        v.add_var("e").unwrap();
        v.add_concept("ELst").unwrap();
        v
    }

    #[test]
    fn formula_round_trips() {
        let v = vocab();
        for text in [
            "ELst <= Alloc",
            "ELst == ex wrkFor . top",
            "!(ELst <= Alloc)",
            "!ELst <= Alloc",
            "func(wrkFor)",
            "wrkFor \\ (o:e x top) | (o:e, o:null) <= next",
            "ELst <= Alloc && (Alloc <= ELst || o:e <= ELst) -> top <= top",
            "ex wrkFor^- . o:e == o:null",
            "ELst & !(o:null | o:T) <= ex (wrkFor & next) . ELst",
        ] {
            let f = parse_formula(text, Some(&v)).unwrap();
            let printed = f.to_string();
            let again = parse_formula(&printed, Some(&v)).unwrap();
            assert_eq!(f, again, "{text} printed as {printed}");
        }
    }

    #[test]
    fn sorts_are_inferred() {
        let f = parse_formula("r <= s \\ t", None).unwrap();
        assert!(matches!(f, LFormula::RoleIncl(..)));
        let g = parse_formula("A <= B", None).unwrap();
        assert!(matches!(g, LFormula::ConceptIncl(..)));
        assert!(matches!(parse_formula("o:e <= wrkFor", Some(&vocab())), Err(ParseError::Sort { .. })));
    }

    #[test]
    fn negation_of_inclusion_is_distinguished() {
        let a = parse_formula("!(A <= B)", None).unwrap();
        assert!(matches!(a, LFormula::Not(_)));
        let b = parse_formula("!A <= B", None).unwrap();
        assert!(matches!(b, LFormula::ConceptIncl(Concept::Not(_), _)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_formula("A <=\n  <= B", None).unwrap_err();
        assert_eq!(e, ParseError::Syntax { line: 2, col: 3, msg: "expected a concept or role, found `<=`".into() });
    }

    #[test]
    fn sl_round_trips() {
        for text in [
            "emp",
            "ls(a, null)",
            "ls(a, b) * ls(b, null)",
            "a |-> [next: b]",
            "true | ls(eHd, e) * ls(e, null) * ls(pHd, null)",
            "proj = pHd & a != null | ls(eHd, null)",
        ] {
            let f = parse_sl(text).unwrap();
            assert_eq!(parse_sl(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn commands_parse() {
        let c = parse_command("if (e.wrkFor = null) { e.wrkFor := proj; } e := e.next;").unwrap();
        assert_eq!(
            c,
            Command::Seq(vec![
                Command::IfThen(
                    BoolExpr::eq(Expr::field("e", "wrkFor"), Expr::Null),
                    Box::new(Command::field_assign("e", "wrkFor", Expr::var("proj")))
                ),
                Command::assign("e", Expr::field("e", "next")),
            ])
        );
        assert_eq!(parse_command("").unwrap(), Command::Skip);
        let printed = c.to_string();
        assert_eq!(parse_command(&printed).unwrap(), c);
        assert!(parse_command("x := new").is_err());
    }

    const SMALL: &str = "
        fields next;
        vars x;
        concepts C;
        loc a init { shp: ls(x, null); cnt: C <= P1; }
        loc b { shp: emp; cnt: true; }
        edge a -> b { }
    ";

    #[test]
    fn small_program() {
        let g = parse_program(SMALL).unwrap();
        assert_eq!(g.partitions, vec!["P1"]);
        assert_eq!(g.edges[0].code, Command::Skip);
        let again = parse_program(&print_program(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn edge_into_init_rejected() {
        let text = format!("{SMALL} edge b -> a {{ skip; }}");
        assert_eq!(parse_program(&text).unwrap_err(), ParseError::InitHasIncoming("a".into()));
    }

    #[test]
    fn undeclared_names_rejected() {
        let text = SMALL.replace("C <= P1", "D <= P1");
        assert_eq!(parse_program(&text).unwrap_err(), ParseError::Undeclared("D".into()));
    }
}
