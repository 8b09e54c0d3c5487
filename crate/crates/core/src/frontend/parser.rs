// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for `.tla` sources.
//!
//! ```text
//! program  := item*
//! item     := "program" IDENT ";" | decl | ("requires" | "ensures") assertion ";" | stmt
//! decl     := ("int" | "counter") IDENT ("[" expr "]")? ("," IDENT ("[" expr "]")?)* ";"
//! stmt     := "skip" ";" | "assume" "(" bexpr ")" ";" | "if" "(" bexpr ")" stmt ("else" stmt)?
//!           | "for" "(" simple ";" bexpr ";" simple ")" ("trips" "(" expr ")")? stmt
//!           | "{" stmt* "}" | simple ";"
//! simple   := IDENT ("=" | ":=") expr | IDENT "[" expr "]" ("=" | ":=") expr
//!           | IDENT ("++" | "--") | IDENT ("+=" | "-=") expr
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{ArrayDecl, BinOp, BoolExpr, Expr, Loop, Program, QuantAssertion, RelOp, Stmt};
use super::desugar::{desugar_general_loop, CountingLoop};
use super::lexer::{lex, Tok, Token};
use super::validate::validate;
use super::{FrontendError, Pos};

#[derive(Clone, Copy, PartialEq, Eq)]
enum UseKind {
    Scalar,
    Array,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    name: Option<String>,
    scalars: Vec<String>,
    counters: BTreeSet<String>,
    arrays: Vec<ArrayDecl>,
    declared: BTreeMap<String, (Pos, UseKind)>,
    uses: Vec<(String, Pos, UseKind)>,
    assigns: Vec<(String, Pos)>,
    idents: BTreeSet<String>,
    loop_positions: Vec<(String, Pos)>,
    exit_assignments: Vec<(String, Stmt)>,
    bound: Vec<String>,
    pre: Vec<QuantAssertion>,
    post: Vec<QuantAssertion>,
}

type PResult<T> = Result<T, FrontendError>;

/// Parse and validate a program. `name` labels the benchmark when the source
/// has no `program` header.
pub fn parse(source: &str) -> PResult<Program> {
    parse_named(source, "program")
}

pub fn parse_named(source: &str, default_name: &str) -> PResult<Program> {
    let toks = lex(source)?;
    let idents = toks
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut p = Parser {
        toks,
        at: 0,
        name: None,
        scalars: Vec::new(),
        counters: BTreeSet::new(),
        arrays: Vec::new(),
        declared: BTreeMap::new(),
        uses: Vec::new(),
        assigns: Vec::new(),
        idents,
        loop_positions: Vec::new(),
        exit_assignments: Vec::new(),
        bound: Vec::new(),
        pre: Vec::new(),
        post: Vec::new(),
    };
    let mut body = Vec::new();
    while p.peek() != &Tok::Eof {
        if let Some(s) = p.item()? {
            body.push(s);
        }
    }
    p.finish(Stmt::seq(body), default_name)
}

const KEYWORDS: &[&str] = &[
    "int", "counter", "requires", "ensures", "forall", "assume", "if", "else", "for", "trips", "skip", "true",
    "false", "program", "AND", "OR", "NOT",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> FrontendError {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            t => format!("{t:?}"),
        };
        FrontendError::syntax(self.pos(), format!("expected {what}, found {found}"))
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn declare(&mut self, name: &str, pos: Pos, kind: UseKind) -> PResult<()> {
        if self.declared.contains_key(name) {
            return Err(FrontendError::Redeclared { pos, name: name.to_string() });
        }
        self.declared.insert(name.to_string(), (pos, kind));
        Ok(())
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 2;
        while self.idents.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.idents.insert(name.clone());
        name
    }

    fn item(&mut self) -> PResult<Option<Stmt>> {
        if self.is_kw("program") {
            self.bump();
            let (mut n, _) = self.ident()?;
            while self.eat(&Tok::Minus) {
                match self.bump() {
                    Tok::Ident(s) => n = format!("{n}-{s}"),
                    Tok::Int(v) => n = format!("{n}-{v}"),
                    _ => return Err(self.unexpected("program name")),
                }
            }
            self.expect(Tok::Semi, "`;`")?;
            self.name = Some(n);
            return Ok(None);
        }
        if self.is_kw("int") || self.is_kw("counter") {
            let counter = self.is_kw("counter");
            self.bump();
            loop {
                let (n, pos) = self.ident()?;
                if !counter && self.eat(&Tok::LBracket) {
                    let size = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    self.declare(&n, pos, UseKind::Array)?;
                    self.arrays.push(ArrayDecl { name: n, size });
                } else {
                    self.declare(&n, pos, UseKind::Scalar)?;
                    if counter {
                        self.counters.insert(n.clone());
                    }
                    self.scalars.push(n);
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Semi, "`;`")?;
            return Ok(None);
        }
        if self.is_kw("requires") || self.is_kw("ensures") {
            let pre = self.is_kw("requires");
            self.bump();
            let q = self.assertion()?;
            self.expect(Tok::Semi, "`;`")?;
            if pre {
                self.pre.push(q);
            } else {
                self.post.push(q);
            }
            return Ok(None);
        }
        self.stmt().map(Some)
    }

    fn assertion(&mut self) -> PResult<QuantAssertion> {
        let pos = self.pos();
        let mut vars = Vec::new();
        if self.is_kw("forall") {
            self.bump();
            loop {
                let (v, vpos) = self.ident()?;
                if self.declared.contains_key(&v) {
                    return Err(FrontendError::Assertion {
                        pos: vpos,
                        msg: format!("bound variable `{v}` shadows a program variable"),
                    });
                }
                vars.push(v);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::ColonColon, "`::`")?;
        }
        self.bound = vars.clone();
        let b = self.bexpr();
        self.bound.clear();
        let b = b?;
        let q = match b {
            BoolExpr::Implies(range, body) if !vars.is_empty() => QuantAssertion::new(vars, *range, *body),
            other => QuantAssertion::new(vars, BoolExpr::True, other),
        };
        let mut arrs = BTreeSet::new();
        q.range.arrays(&mut arrs);
        if !arrs.is_empty() {
            return Err(FrontendError::Assertion { pos, msg: "the index range must not read arrays".into() });
        }
        Ok(q)
    }

    fn block_or_stmt(&mut self) -> PResult<Stmt> {
        self.stmt()
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        if self.eat(&Tok::LBrace) {
            let mut items = Vec::new();
            while !self.eat(&Tok::RBrace) {
                if self.peek() == &Tok::Eof {
                    return Err(self.unexpected("`}`"));
                }
                items.push(self.stmt()?);
            }
            return Ok(Stmt::seq(items));
        }
        if self.is_kw("skip") {
            self.bump();
            self.expect(Tok::Semi, "`;`")?;
            return Ok(Stmt::Skip);
        }
        if self.is_kw("assume") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let b = self.bexpr()?;
            self.expect(Tok::RParen, "`)`")?;
            self.expect(Tok::Semi, "`;`")?;
            return Ok(Stmt::Assume(b));
        }
        if self.is_kw("if") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let c = self.bexpr()?;
            self.expect(Tok::RParen, "`)`")?;
            let t = self.block_or_stmt()?;
            let e = if self.is_kw("else") {
                self.bump();
                self.block_or_stmt()?
            } else {
                Stmt::Skip
            };
            return Ok(Stmt::If(c, Box::new(t), Box::new(e)));
        }
        if self.is_kw("for") {
            self.bump();
            return self.for_loop(pos);
        }
        let s = self.simple()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(s)
    }

    /// Assignment forms; records positions for the counter-discipline check.
    fn simple(&mut self) -> PResult<Stmt> {
        let (name, pos) = self.ident()?;
        if self.eat(&Tok::LBracket) {
            self.uses.push((name.clone(), pos, UseKind::Array));
            let idx = self.expr()?;
            self.expect(Tok::RBracket, "`]`")?;
            if !(self.eat(&Tok::Assign) || self.eat(&Tok::ColonEq)) {
                return Err(self.unexpected("`=`"));
            }
            let rhs = self.expr()?;
            return Ok(Stmt::Store(name, idx, rhs));
        }
        self.uses.push((name.clone(), pos, UseKind::Scalar));
        self.assigns.push((name.clone(), pos));
        let v = Expr::var(name.clone());
        let rhs = match self.bump() {
            Tok::Assign | Tok::ColonEq => self.expr()?,
            Tok::PlusPlus => Expr::add(v, Expr::Const(1)),
            Tok::MinusMinus => Expr::sub(v, Expr::Const(1)),
            Tok::PlusEq => Expr::add(v, self.expr()?),
            Tok::MinusEq => Expr::sub(v, self.expr()?),
            _ => {
                self.at -= 1;
                return Err(self.unexpected("assignment"));
            }
        };
        Ok(Stmt::Assign(name, rhs))
    }

    fn for_loop(&mut self, pos: Pos) -> PResult<Stmt> {
        self.expect(Tok::LParen, "`(`")?;
        let restricted = matches!(self.peek_at(1), Tok::ColonEq);
        let assigns_before = self.assigns.len();
        let init = self.simple()?;
        self.expect(Tok::Semi, "`;`")?;
        let cond = self.bexpr()?;
        self.expect(Tok::Semi, "`;`")?;
        let step = self.simple()?;
        self.expect(Tok::RParen, "`)`")?;
        // The header's own assignments are accounted for by the loop form.
        self.assigns.truncate(assigns_before);
        let trips = if self.is_kw("trips") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            Some(e)
        } else {
            None
        };
        let body_assigns = self.assigns.len();
        let body = self.block_or_stmt()?;
        let (var, start) = match init {
            Stmt::Assign(v, e) => (v, e),
            _ => return Err(FrontendError::Loop { pos, msg: "loop initializer must assign a scalar".into() }),
        };
        let step_delta = match &step {
            Stmt::Assign(v, e) if *v == var => match crate::affine::Affine::from_expr(e).split_var(&var) {
                Some((1, rest)) => rest.as_constant(),
                _ => None,
            },
            _ => None,
        };
        let (mut sw, mut aw) = (BTreeSet::new(), BTreeSet::new());
        body.write_set(&mut sw, &mut aw);

        if let Some(trip) = trips {
            let counter = self.fresh(&format!("l_{var}"));
            self.register_counter(&counter, pos);
            self.assigns.push((var.clone(), pos));
            return Ok(desugar_general_loop(&counter, &var, start, cond, step, trip, body));
        }

        if restricted {
            let ok = start == Expr::Const(0)
                && step_delta == Some(1)
                && matches!(&cond, BoolExpr::Rel(RelOp::Lt, Expr::Var(v), _) if *v == var);
            let BoolExpr::Rel(_, _, trip) = cond else {
                return Err(FrontendError::Loop { pos, msg: "restricted loops must read `for (l := 0; l < E; l := l + 1)`".into() });
            };
            if !ok {
                return Err(FrontendError::Loop { pos, msg: "restricted loops must read `for (l := 0; l < E; l := l + 1)`".into() });
            }
            if let Some((_, p)) = self.assigns[body_assigns..].iter().find(|(n, _)| *n == var) {
                return Err(FrontendError::CounterDiscipline {
                    pos: *p,
                    msg: format!("loop counter `{var}` is assigned inside its loop"),
                });
            }
            self.register_counter(&var, pos);
            return Ok(Stmt::For(Loop { counter: var, trip, body: Box::new(body), source: None }));
        }

        if sw.contains(&var) {
            let p = self.assigns[body_assigns..].iter().find(|(n, _)| *n == var).map(|(_, p)| *p).unwrap_or(pos);
            return Err(FrontendError::CounterDiscipline {
                pos: p,
                msg: format!("loop variable `{var}` is assigned in the loop body; annotate the loop with `trips(E)`"),
            });
        }
        let counting = match (step_delta, cond) {
            (Some(d @ (1 | -1)), BoolExpr::Rel(rel, Expr::Var(v), bound)) if v == var => {
                CountingLoop { var: var.clone(), start, step: d, rel, bound }
            }
            _ => {
                return Err(FrontendError::Loop {
                    pos,
                    msg: "cannot determine the trip count; annotate the loop with `trips(E)`".into(),
                })
            }
        };
        let counter = self.fresh(&format!("l_{var}"));
        let Some((lp, exit)) = counting.normalize(&counter, body) else {
            return Err(FrontendError::Loop { pos, msg: "loop condition does not match the step direction".into() });
        };
        self.register_counter(&counter, pos);
        self.assigns.push((var.clone(), pos));
        self.exit_assignments.push((var, exit.clone()));
        Ok(Stmt::seq(vec![Stmt::For(lp), exit]))
    }

    fn register_counter(&mut self, name: &str, pos: Pos) {
        self.loop_positions.push((name.to_string(), pos));
        if !self.declared.contains_key(name) {
            self.declared.insert(name.to_string(), (pos, UseKind::Scalar));
            self.scalars.push(name.to_string());
        }
        self.counters.insert(name.to_string());
    }

    // ---- expressions ----

    fn bexpr(&mut self) -> PResult<BoolExpr> {
        let lhs = self.bor()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.bexpr()?;
            return Ok(BoolExpr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn bor(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.band()?;
        while self.eat(&Tok::OrOr) || self.is_kw("OR") && { self.bump(); true } {
            let rhs = self.band()?;
            lhs = BoolExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn band(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bnot()?;
        while self.eat(&Tok::AndAnd) || self.is_kw("AND") && { self.bump(); true } {
            let rhs = self.bnot()?;
            lhs = BoolExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn bnot(&mut self) -> PResult<BoolExpr> {
        if self.eat(&Tok::Bang) || self.is_kw("NOT") && { self.bump(); true } {
            return Ok(BoolExpr::Not(Box::new(self.bnot()?)));
        }
        self.batom()
    }

    fn batom(&mut self) -> PResult<BoolExpr> {
        if self.is_kw("true") {
            self.bump();
            return Ok(BoolExpr::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(BoolExpr::False);
        }
        if self.peek() == &Tok::LParen {
            // Either a parenthesized formula or an arithmetic operand.
            let save = (self.at, self.uses.len());
            self.bump();
            if let Ok(b) = self.bexpr() {
                if self.eat(&Tok::RParen) && !self.at_relop_or_arith() {
                    return Ok(b);
                }
            }
            self.at = save.0;
            self.uses.truncate(save.1);
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::Gt => RelOp::Gt,
            Tok::Ge => RelOp::Ge,
            Tok::EqEq | Tok::Assign => RelOp::Eq,
            Tok::Ne => RelOp::Ne,
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(BoolExpr::Rel(op, lhs, rhs))
    }

    fn at_relop_or_arith(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Lt
                | Tok::Le
                | Tok::Gt
                | Tok::Ge
                | Tok::EqEq
                | Tok::Assign
                | Tok::Ne
                | Tok::Plus
                | Tok::Minus
                | Tok::Star
                | Tok::Slash
                | Tok::Percent
        )
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            if let Tok::Int(v) = *self.peek() {
                self.bump();
                return Ok(Expr::Const(-v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let (name, pos) = self.ident()?;
                if self.eat(&Tok::LBracket) {
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    self.uses.push((name.clone(), pos, UseKind::Array));
                    Ok(Expr::Read(name, Box::new(idx)))
                } else {
                    if !self.bound.contains(&name) {
                        self.uses.push((name.clone(), pos, UseKind::Scalar));
                    }
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn finish(mut self, body: Stmt, default_name: &str) -> PResult<Program> {
        for (name, pos, kind) in &self.uses {
            match self.declared.get(name) {
                None => return Err(FrontendError::Undeclared { pos: *pos, name: name.clone() }),
                Some((_, k)) if k != kind => {
                    let expected = if *k == UseKind::Array { "a scalar, but it is an array" } else { "an array, but it is a scalar" };
                    return Err(FrontendError::Kind { pos: *pos, name: name.clone(), expected });
                }
                _ => {}
            }
        }
        for (name, pos) in &self.assigns {
            if self.counters.contains(name) {
                return Err(FrontendError::CounterDiscipline {
                    pos: *pos,
                    msg: format!("loop counter `{name}` may only be assigned by its loop header"),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for (c, pos) in &self.loop_positions {
            if !seen.insert(c.clone()) {
                return Err(FrontendError::CounterDiscipline {
                    pos: *pos,
                    msg: format!("counter `{c}` is shared by two loops"),
                });
            }
        }
        let body = self.prune_exit_assignments(body);
        let program = Program {
            name: self.name.take().unwrap_or_else(|| default_name.to_string()),
            scalars: self.scalars,
            counters: self.counters,
            arrays: self.arrays,
            body,
            pre: self.pre,
            post: self.post,
        };
        validate(&program).map_err(|e| e.at(self.toks[0].pos))?;
        Ok(program)
    }

    /// Drop generated exit assignments for induction variables that are never
    /// read outside the loops that define them.
    fn prune_exit_assignments(&self, body: Stmt) -> Stmt {
        let mut needed = BTreeSet::new();
        for (var, _) in &self.exit_assignments {
            let mut in_post = BTreeSet::new();
            for q in &self.post {
                in_post.extend(q.free_scalars());
            }
            if in_post.contains(var) || reads_outside_own_loops(&body, var) {
                needed.insert(var.clone());
            }
        }
        let drop: Vec<&Stmt> =
            self.exit_assignments.iter().filter(|(v, _)| !needed.contains(v)).map(|(_, s)| s).collect();
        strip(body, &drop)
    }
}

fn strip(s: Stmt, drop: &[&Stmt]) -> Stmt {
    match s {
        Stmt::Seq(items) => Stmt::seq(items.into_iter().filter(|i| !drop.contains(&i)).map(|i| strip(i, drop)).collect()),
        Stmt::If(c, t, e) => Stmt::If(c, Box::new(strip(*t, drop)), Box::new(strip(*e, drop))),
        Stmt::For(mut l) => {
            l.body = Box::new(strip(*l.body, drop));
            Stmt::For(l)
        }
        other => other,
    }
}

fn reads_outside_own_loops(s: &Stmt, var: &str) -> bool {
    let reads = |b: &BoolExpr| {
        let mut v = BTreeSet::new();
        b.scalars(&mut v);
        v.contains(var)
    };
    let reads_e = |e: &Expr| {
        let mut v = BTreeSet::new();
        e.scalars(&mut v);
        v.contains(var)
    };
    match s {
        Stmt::Skip => false,
        Stmt::Assign(_, e) => reads_e(e),
        Stmt::Store(_, i, e) => reads_e(i) || reads_e(e),
        Stmt::Assume(b) => reads(b),
        Stmt::If(c, t, e) => {
            // Exit assignments are `if (E > 0) ...` and never read `var`.
            reads(c) || reads_outside_own_loops(t, var) || reads_outside_own_loops(e, var)
        }
        Stmt::For(l) => {
            if l.source.as_ref().is_some_and(|sc| sc.var == var) {
                false
            } else {
                reads_e(&l.trip) || reads_outside_own_loops(&l.body, var)
            }
        }
        Stmt::Seq(items) => items.iter().any(|i| reads_outside_own_loops(i, var)),
    }
}
