//! CADSPEC: the line-oriented text format for CADs and set families.
//!
//! ```text
//! # comment
//! cad C dim=2 class=0
//! level1: -1, 1
//! cell 1: u=0
//! cell 2: u=1; xi2=0
//! cell 3: u=2; xi2=-sqrt(1 - x1*x1); xi4=sqrt(1 - x1*x1)
//! cell 4: u=1; xi2=0
//! cell 5: u=0
//! set disk: x1*x1 + x2*x2 <= 1
//! ```
//!
//! Every cell of a level below the dimension needs an explicit `u=` count;
//! child counts are always the odd number 2u+1. The printer is canonical:
//! parse → print → parse is the identity on documents.

use super::{CadNode, ConcreteCad, Index, RegClass};
use crate::algebra::{eval, Expr, ExtVal, Rat, Rel, SaPredicate};
use num::BigInt;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("cad `{cad}`: {msg}")]
    BadCad { cad: String, msg: String },
}

#[derive(Clone, Debug, Default)]
pub struct CadDocument {
    pub cads: Vec<(String, ConcreteCad)>,
    pub sets: Vec<(String, SaPredicate)>,
}

impl CadDocument {
    pub fn cad(&self, name: &str) -> Option<&ConcreteCad> {
        self.cads.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn set(&self, name: &str) -> Option<&SaPredicate> {
        self.sets.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }
}

// ---------------------------------------------------------------- tokens

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(&'static str),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, ParseError> {
    let err = |msg: String| ParseError::Syntax { line, msg };
    let mut out = vec![];
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Int(s.parse().unwrap()));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym2 = ["->", "<=", ">=", "!="].iter().find(|s| two.starts_with(**s));
        if let Some(s) = sym2 {
            out.push(Tok::Sym(s));
            i += 2;
            continue;
        }
        let sym1 = match c {
            '+' => "+",
            '-' => "-",
            '*' => "*",
            '/' => "/",
            '(' => "(",
            ')' => ")",
            '{' => "{",
            '}' => "}",
            ';' => ";",
            ',' => ",",
            '<' => "<",
            '>' => ">",
            '=' => "=",
            '&' => "&",
            '|' => "|",
            '!' => "!",
            '.' => ".",
            _ => return Err(err(format!("unexpected character `{}`", c))),
        };
        out.push(Tok::Sym(sym1));
        i += 1;
    }
    Ok(out)
}

struct Tokens {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Tokens {
    fn new(text: &str, line: usize) -> Result<Tokens, ParseError> {
        Ok(Tokens { toks: tokenize(text, line)?, pos: 0, line })
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Sym(t)) if *t == s => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.err(format!("expected `{}`, found {:?}", s, other))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

// ------------------------------------------------------------ expressions

fn parse_expr_sum(t: &mut Tokens) -> Result<Expr, ParseError> {
    let mut acc = parse_expr_term(t)?;
    loop {
        match t.peek() {
            Some(Tok::Sym("+")) => {
                t.pos += 1;
                acc = acc.add(parse_expr_term(t)?);
            }
            Some(Tok::Sym("-")) => {
                t.pos += 1;
                acc = acc.sub(parse_expr_term(t)?);
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_expr_term(t: &mut Tokens) -> Result<Expr, ParseError> {
    let mut acc = parse_expr_factor(t)?;
    loop {
        match t.peek() {
            Some(Tok::Sym("*")) => {
                t.pos += 1;
                acc = fold_mul(acc, parse_expr_factor(t)?);
            }
            Some(Tok::Sym("/")) => {
                t.pos += 1;
                acc = fold_div(acc, parse_expr_factor(t)?);
            }
            _ => return Ok(acc),
        }
    }
}

fn fold_mul(a: Expr, b: Expr) -> Expr {
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x * y);
    }
    a.mul(b)
}

fn fold_div(a: Expr, b: Expr) -> Expr {
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        if !num::Zero::is_zero(y) {
            return Expr::Const(x / y);
        }
    }
    a.div(b)
}

fn parse_expr_factor(t: &mut Tokens) -> Result<Expr, ParseError> {
    match t.peek() {
        Some(Tok::Sym("-")) => {
            t.pos += 1;
            let inner = parse_expr_factor(t)?;
            Ok(match inner {
                Expr::Const(r) => Expr::Const(-r),
                Expr::PosInf => Expr::NegInf,
                e => Expr::int(0).sub(e),
            })
        }
        Some(Tok::Sym("+")) => {
            t.pos += 1;
            parse_expr_factor(t)
        }
        _ => parse_expr_atom(t),
    }
}

fn parse_expr_atom(t: &mut Tokens) -> Result<Expr, ParseError> {
    match t.next() {
        Some(Tok::Int(n)) => Ok(Expr::Const(Rat::from_integer(n))),
        Some(Tok::Ident(name)) => match name.as_str() {
            "sqrt" => {
                t.expect_sym("(")?;
                let inner = parse_expr_sum(t)?;
                t.expect_sym(")")?;
                Ok(inner.sqrt())
            }
            "sign" => {
                t.expect_sym("(")?;
                let inner = parse_expr_sum(t)?;
                t.expect_sym(")")?;
                Ok(Expr::Sign(Box::new(inner)))
            }
            "piecewise" => {
                t.expect_sym("{")?;
                let mut branches = vec![];
                loop {
                    if matches!(t.peek(), Some(Tok::Ident(w)) if w == "else") {
                        t.pos += 1;
                        t.expect_sym("->")?;
                        let default = parse_expr_sum(t)?;
                        t.expect_sym("}")?;
                        return Ok(Expr::Piecewise { branches, default: Box::new(default) });
                    }
                    let guard = parse_pred_or(t)?;
                    t.expect_sym("->")?;
                    let body = parse_expr_sum(t)?;
                    branches.push((guard, body));
                    t.expect_sym(";")?;
                }
            }
            "inf" => Ok(Expr::PosInf),
            _ => {
                if let Some(axis) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                    if axis >= 1 {
                        return Ok(Expr::Var(axis));
                    }
                }
                Err(t.err(format!("unknown identifier `{}` in expression", name)))
            }
        },
        Some(Tok::Sym("(")) => {
            let inner = parse_expr_sum(t)?;
            t.expect_sym(")")?;
            Ok(inner)
        }
        other => Err(t.err(format!("expected expression, found {:?}", other))),
    }
}

// ------------------------------------------------------------- predicates

fn parse_pred_or(t: &mut Tokens) -> Result<SaPredicate, ParseError> {
    let mut acc = parse_pred_and(t)?;
    while matches!(t.peek(), Some(Tok::Sym("|"))) {
        t.pos += 1;
        acc = acc.or(parse_pred_and(t)?);
    }
    Ok(acc)
}

fn parse_pred_and(t: &mut Tokens) -> Result<SaPredicate, ParseError> {
    let mut acc = parse_pred_unit(t)?;
    while matches!(t.peek(), Some(Tok::Sym("&"))) {
        t.pos += 1;
        acc = acc.and(parse_pred_unit(t)?);
    }
    Ok(acc)
}

fn parse_rel(t: &mut Tokens) -> Option<Rel> {
    let rel = match t.peek() {
        Some(Tok::Sym("<=")) => Rel::Le,
        Some(Tok::Sym(">=")) => Rel::Ge,
        Some(Tok::Sym("!=")) => Rel::Ne,
        Some(Tok::Sym("<")) => Rel::Lt,
        Some(Tok::Sym(">")) => Rel::Gt,
        Some(Tok::Sym("=")) => Rel::Eq,
        _ => return None,
    };
    t.pos += 1;
    Some(rel)
}

fn parse_pred_unit(t: &mut Tokens) -> Result<SaPredicate, ParseError> {
    match t.peek() {
        Some(Tok::Sym("!")) => {
            t.pos += 1;
            let inner = parse_pred_unit(t)?;
            Ok(SaPredicate::Not(Box::new(inner)))
        }
        Some(Tok::Ident(w)) if w == "true" => {
            t.pos += 1;
            Ok(SaPredicate::True)
        }
        Some(Tok::Ident(w)) if w == "false" => {
            t.pos += 1;
            Ok(SaPredicate::False)
        }
        _ => {
            // an atom `expr REL expr`, or a parenthesized predicate; try the
            // atom first and backtrack if no relation follows
            let save = t.pos;
            if let Ok(lhs) = parse_expr_sum(t) {
                if let Some(rel) = parse_rel(t) {
                    let rhs = parse_expr_sum(t)?;
                    return Ok(SaPredicate::atom(lhs, rel, rhs));
                }
            }
            t.pos = save;
            t.expect_sym("(")?;
            let inner = parse_pred_or(t)?;
            t.expect_sym(")")?;
            Ok(inner)
        }
    }
}

// --------------------------------------------------------- public parsers

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut t = Tokens::new(text, 0)?;
    let e = parse_expr_sum(&mut t)?;
    if !t.at_end() {
        return Err(t.err("trailing tokens after expression"));
    }
    Ok(e)
}

pub fn parse_pred(text: &str) -> Result<SaPredicate, ParseError> {
    let mut t = Tokens::new(text, 0)?;
    let p = parse_pred_or(&mut t)?;
    if !t.at_end() {
        return Err(t.err("trailing tokens after predicate"));
    }
    Ok(p)
}

/// A closed expression evaluating to an exact value.
pub fn parse_extval(text: &str) -> Result<ExtVal, ParseError> {
    let e = parse_expr(text)?;
    let v = eval(&e, &[]).map_err(|err| ParseError::Syntax {
        line: 0,
        msg: format!("not a closed exact value: {}", err),
    })?;
    if v.is_indeterminate() {
        return Err(ParseError::Syntax { line: 0, msg: "value is indeterminate".into() });
    }
    Ok(v)
}

// ---------------------------------------------------------- document form

/// Splits on `;` at brace depth zero (piecewise bodies contain `;`).
fn split_fields(text: &str) -> Vec<String> {
    let mut out = vec![];
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '{' => {
                depth += 1;
                cur.push(c);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ';' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur = String::new();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

#[derive(Default)]
struct CadDraft {
    name: String,
    dim: usize,
    class: Option<RegClass>,
    level1: Option<Vec<ExtVal>>,
    cells: BTreeMap<Index, (usize, Vec<Expr>)>,
}

fn parse_class(text: &str) -> Option<RegClass> {
    match text {
        "inf" => Some(RegClass::Infinity),
        "omega" => Some(RegClass::Omega),
        t => t.parse::<u32>().ok().map(RegClass::Finite),
    }
}

fn flush_draft(draft: CadDraft, doc: &mut CadDocument) -> Result<(), ParseError> {
    let bad = |msg: String| ParseError::BadCad { cad: draft.name.clone(), msg };
    let level1 = draft.level1.clone().ok_or_else(|| bad("missing level1 line".into()))?;
    let mut used = 0usize;

    fn build(
        draft: &CadDraft,
        index: &Index,
        level: usize,
        used: &mut usize,
    ) -> Result<CadNode, ParseError> {
        let bad = |msg: String| ParseError::BadCad { cad: draft.name.clone(), msg };
        if level == draft.dim {
            if draft.cells.contains_key(index) {
                return Err(bad(format!("cell {} is at leaf level and must not be declared", index)));
            }
            return Ok(CadNode::leaf());
        }
        let (u, xis) = draft
            .cells
            .get(index)
            .ok_or_else(|| bad(format!("missing cell block for {}", index)))?;
        *used += 1;
        for (i, e) in xis.iter().enumerate() {
            if e.max_axis() > level {
                return Err(bad(format!(
                    "section xi{} of cell {} references axis {} beyond level {}",
                    2 * (i + 1),
                    index,
                    e.max_axis(),
                    level
                )));
            }
            if e.sqrt_depth() > 2 {
                return Err(bad(format!("section xi{} of cell {} nests sqrt deeper than 2", 2 * (i + 1), index)));
            }
        }
        let mut children = vec![];
        for j in 1..=2 * u + 1 {
            children.push(build(draft, &index.child(j), level + 1, used)?);
        }
        Ok(CadNode { sections: xis.clone(), children })
    }

    let mut top = vec![];
    for j in 1..=2 * level1.len() + 1 {
        top.push(build(&draft, &Index(vec![j]), 1, &mut used)?);
    }
    if used != draft.cells.len() {
        return Err(bad(format!(
            "{} cell blocks are unreachable from the declared structure",
            draft.cells.len() - used
        )));
    }
    let cad = ConcreteCad {
        dim: draft.dim,
        class: draft.class.ok_or_else(|| bad("missing class".into()))?,
        level1,
        top,
    };
    doc.cads.push((draft.name, cad));
    Ok(())
}

pub fn parse_document(text: &str) -> Result<CadDocument, ParseError> {
    let mut doc = CadDocument::default();
    let mut draft: Option<CadDraft> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |msg: String| ParseError::Syntax { line, msg };

        if let Some(rest) = content.strip_prefix("cad ") {
            if let Some(d) = draft.take() {
                flush_draft(d, &mut doc)?;
            }
            let mut parts = rest.split_whitespace();
            let name = parts.next().ok_or_else(|| syntax("cad needs a name".into()))?.to_string();
            let mut dim = None;
            let mut class = None;
            for p in parts {
                if let Some(v) = p.strip_prefix("dim=") {
                    dim = v.parse::<usize>().ok().filter(|&d| d >= 1);
                } else if let Some(v) = p.strip_prefix("class=") {
                    class = parse_class(v);
                } else {
                    return Err(syntax(format!("unknown cad attribute `{}`", p)));
                }
            }
            draft = Some(CadDraft {
                name,
                dim: dim.ok_or_else(|| syntax("cad needs dim=<n> with n ≥ 1".into()))?,
                class: Some(class.ok_or_else(|| syntax("cad needs class=<r>".into()))?),
                level1: None,
                cells: BTreeMap::new(),
            });
            continue;
        }

        if let Some(rest) = content.strip_prefix("level1:") {
            let d = draft.as_mut().ok_or_else(|| syntax("level1 outside a cad block".into()))?;
            if d.level1.is_some() {
                return Err(syntax("duplicate level1 line".into()));
            }
            let mut values = vec![];
            let rest = rest.trim();
            if !rest.is_empty() {
                for part in rest.split(',') {
                    values.push(parse_extval(part.trim()).map_err(|e| syntax(e.to_string()))?);
                }
            }
            d.level1 = Some(values);
            continue;
        }

        if let Some(rest) = content.strip_prefix("cell ") {
            let d = draft.as_mut().ok_or_else(|| syntax("cell outside a cad block".into()))?;
            let (index_text, fields_text) =
                rest.split_once(':').ok_or_else(|| syntax("cell line needs `:`".into()))?;
            let index = Index::parse(index_text.trim())
                .ok_or_else(|| syntax(format!("bad cell index `{}`", index_text.trim())))?;
            if index.level() >= d.dim {
                return Err(syntax(format!(
                    "cell {} is at level {} but dim is {}; only levels below the dimension take blocks",
                    index,
                    index.level(),
                    d.dim
                )));
            }
            let fields = split_fields(fields_text);
            let mut u: Option<usize> = None;
            let mut xis: Vec<(usize, Expr)> = vec![];
            for f in &fields {
                let (key, value) =
                    f.split_once('=').ok_or_else(|| syntax(format!("bad field `{}`", f)))?;
                let key = key.trim();
                let value = value.trim();
                if key == "u" {
                    u = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| syntax(format!("bad u count `{}`", value)))?,
                    );
                } else if let Some(num) = key.strip_prefix("xi") {
                    let k: usize =
                        num.parse().map_err(|_| syntax(format!("bad section key `{}`", key)))?;
                    if k % 2 != 0 || k == 0 {
                        return Err(syntax(format!("section key `{}` must be even", key)));
                    }
                    let mut toks = Tokens::new(value, line)?;
                    let e = parse_expr_sum(&mut toks)?;
                    if !toks.at_end() {
                        return Err(syntax(format!("trailing tokens in `{}`", f)));
                    }
                    xis.push((k / 2, e));
                } else {
                    return Err(syntax(format!("unknown field `{}`", key)));
                }
            }
            let u = u.ok_or_else(|| syntax("cell block needs an explicit u count".into()))?;
            xis.sort_by_key(|(k, _)| *k);
            let keys: Vec<usize> = xis.iter().map(|(k, _)| *k).collect();
            if keys != (1..=u).collect::<Vec<_>>() {
                return Err(syntax(format!(
                    "cell {} declares u={} but sections xi2..xi{} do not match",
                    index,
                    u,
                    2 * u
                )));
            }
            let exprs = xis.into_iter().map(|(_, e)| e).collect();
            if d.cells.insert(index.clone(), (u, exprs)).is_some() {
                return Err(syntax(format!("duplicate cell block for {}", index)));
            }
            continue;
        }

        if let Some(rest) = content.strip_prefix("set ") {
            let (name, pred_text) =
                rest.split_once(':').ok_or_else(|| syntax("set line needs `:`".into()))?;
            let mut toks = Tokens::new(pred_text.trim(), line)?;
            let pred = parse_pred_or(&mut toks)?;
            if !toks.at_end() {
                return Err(syntax("trailing tokens after predicate".into()));
            }
            doc.sets.push((name.trim().to_string(), pred));
            continue;
        }

        return Err(syntax(format!("unrecognized line `{}`", content)));
    }

    if let Some(d) = draft.take() {
        flush_draft(d, &mut doc)?;
    }
    Ok(doc)
}

// ---------------------------------------------------------------- printer

fn extval_text(v: &ExtVal) -> String {
    Expr::from_extval(v).map(|e| e.to_string()).unwrap_or_else(|| "indeterminate".into())
}

pub fn print_cad(name: &str, cad: &ConcreteCad, out: &mut String) {
    let _ = writeln!(out, "cad {} dim={} class={}", name, cad.dim, cad.class);
    let values: Vec<String> = cad.level1.iter().map(extval_text).collect();
    if values.is_empty() {
        let _ = writeln!(out, "level1:");
    } else {
        let _ = writeln!(out, "level1: {}", values.join(", "));
    }
    for level in 1..cad.dim {
        for index in cad.cells_at_level(level) {
            let node = cad.node(&index).unwrap();
            let mut line = format!("cell {}: u={}", index, node.u());
            for (i, e) in node.sections.iter().enumerate() {
                let _ = write!(line, "; xi{}={}", 2 * (i + 1), e);
            }
            let _ = writeln!(out, "{}", line);
        }
    }
}

pub fn print_document(doc: &CadDocument) -> String {
    let mut out = String::new();
    for (i, (name, cad)) in doc.cads.iter().enumerate() {
        if i > 0 {
            let _ = writeln!(out);
        }
        print_cad(name, cad, &mut out);
    }
    if !doc.sets.is_empty() && !doc.cads.is_empty() {
        let _ = writeln!(out);
    }
    for (name, pred) in &doc.sets {
        let _ = writeln!(out, "set {}: {}", name, pred);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::test_cads::disk_coarse;
    use super::*;

    const DISK_DOC: &str = "\
# adapted to the closed unit disk
cad C dim=2 class=0
level1: -1, 1
cell 1: u=0
cell 2: u=1; xi2=0
cell 3: u=2; xi2=-sqrt(1 - x1*x1); xi4=sqrt(1 - x1*x1)
cell 4: u=1; xi2=0
cell 5: u=0

set disk: x1*x1 + x2*x2 <= 1
";

    #[test]
    fn parses_the_disk_document() {
        let doc = parse_document(DISK_DOC).unwrap();
        assert_eq!(doc.cads.len(), 1);
        assert_eq!(doc.sets.len(), 1);
        let cad = doc.cad("C").unwrap();
        assert_eq!(cad.leaf_count(), 13);
        assert_eq!(*cad, disk_coarse());
    }

    #[test]
    fn round_trip_is_identity_on_documents() {
        let doc = parse_document(DISK_DOC).unwrap();
        let printed = print_document(&doc);
        let reparsed = parse_document(&printed).unwrap();
        assert_eq!(print_document(&reparsed), printed);
        assert_eq!(reparsed.cads, doc.cads);
        assert_eq!(reparsed.sets, doc.sets);
    }

    #[test]
    fn piecewise_sections_round_trip() {
        let text = "\
cad C dim=3 class=0
level1:
cell 1: u=1; xi2=0
cell 1.1: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 1.2: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
cell 1.3: u=1; xi2=piecewise{x1 > 0 & x2 > 0 -> -x1/2; else -> 0}
";
        let doc = parse_document(text).unwrap();
        let cad = doc.cad("C").unwrap();
        assert_eq!(cad.dim, 3);
        assert_eq!(cad.leaf_count(), 9);
        let printed = print_document(&doc);
        let again = parse_document(&printed).unwrap();
        assert_eq!(again.cads, doc.cads);
        assert_eq!(print_document(&again), printed);
    }

    #[test]
    fn missing_cell_rejected() {
        let text = "\
cad C dim=2 class=0
level1: 0
cell 1: u=0
cell 3: u=0
";
        let err = parse_document(text).unwrap_err();
        assert!(err.to_string().contains("missing cell block for 2"), "{}", err);
    }

    #[test]
    fn explicit_u_required() {
        let text = "\
cad C dim=2 class=0
level1:
cell 1: xi2=0
";
        assert!(parse_document(text).is_err());
    }

    #[test]
    fn radical_level1_values() {
        let text = "\
cad C dim=1 class=0
level1: -sqrt(2), 1/2, sqrt(2)
";
        let doc = parse_document(text).unwrap();
        let cad = doc.cad("C").unwrap();
        assert_eq!(cad.level1.len(), 3);
        let printed = print_document(&doc);
        let again = parse_document(&printed).unwrap();
        assert_eq!(again.cads, doc.cads);
    }

    #[test]
    fn expression_parser_round_trips() {
        for text in [
            "x1*x1 + x2*x2 - 1",
            "-x1/2",
            "1 - 1/(2*(x1*x1 - 1))",
            "-sign(x2)*sqrt((x1 + sqrt(x1*x1 + x2*x2))/2)",
            "piecewise{x2 != 0 -> 0; else -> -x1}",
        ] {
            let e = parse_expr(text).unwrap();
            let printed = e.to_string();
            let again = parse_expr(&printed).unwrap();
            assert_eq!(again, e, "through `{}` vs `{}`", text, printed);
        }
    }

    #[test]
    fn predicate_parser_round_trips() {
        for text in [
            "x1 <= 0 | x2 <= 0",
            "(x1 <= 0 | x2 <= 0) & x3 = 0 | x1 > 0 & x2 > 0 & x3 = -x1/2",
            "!(x1 = 0 & x2 = 0) & x2 >= 0",
            "true",
        ] {
            let p = parse_pred(text).unwrap();
            let printed = p.to_string();
            let again = parse_pred(&printed).unwrap();
            assert_eq!(again, p, "through `{}` vs `{}`", text, printed);
        }
    }
}
