//! Abstract syntax, parser and pretty-printer.

mod ast;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::*;
pub use lexer::KEYWORDS;
pub use parser::{parse, parse_expr, parse_stmt};
pub use pretty::{expr as expr_to_string, pretty_print, stmt_to_string};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: syntax error: {}", self.pos.line, self.pos.col, self.message)
    }
}

impl std::error::Error for SyntaxError {}

/// Variables read by an expression: `vars(x[e]) = {x} ∪ vars(e)`.
pub fn vars_of(e: &Expr) -> std::collections::BTreeSet<String> {
    let mut out = std::collections::BTreeSet::new();
    collect_vars(e, &mut out);
    out
}

fn collect_vars(e: &Expr, out: &mut std::collections::BTreeSet<String>) {
    match &e.kind {
        ExprKind::Constant(_) | ExprKind::Nil => {}
        ExprKind::Variable(x) => {
            out.insert(x.clone());
        }
        ExprKind::ArrayElement(x, i) => {
            out.insert(x.clone());
            collect_vars(i, out);
        }
        ExprKind::Binary(_, l, r) => {
            collect_vars(l, out);
            collect_vars(r, out);
        }
    }
}

/// Largest integer literal in the program, for word-width validation.
pub fn max_constant(p: &Program) -> i64 {
    fn expr(e: &Expr, m: &mut i64) {
        match &e.kind {
            ExprKind::Constant(n) => *m = (*m).max(*n),
            ExprKind::ArrayElement(_, i) => expr(i, m),
            ExprKind::Binary(_, l, r) => {
                expr(l, m);
                expr(r, m);
            }
            _ => {}
        }
    }
    fn lv(y: &LValue, m: &mut i64) {
        if let Some(i) = &y.index {
            expr(i, m);
        }
    }
    fn desc(d: &AllocDesc, m: &mut i64) {
        if let Some(e) = d.length() {
            expr(e, m);
        }
    }
    fn stmt(s: &Stmt, m: &mut i64) {
        match &s.kind {
            StmtKind::Assign(y, _, e) => {
                lv(y, m);
                expr(e, m);
            }
            StmtKind::Swap(a, b) => {
                lv(a, m);
                lv(b, m);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
                assertion,
            } => {
                expr(cond, m);
                stmt(then_branch, m);
                stmt(else_branch, m);
                expr(assertion, m);
            }
            StmtKind::Loop {
                entry,
                body,
                step,
                exit,
            } => {
                expr(entry, m);
                stmt(body, m);
                stmt(step, m);
                expr(exit, m);
            }
            StmtKind::ObjectBlock { body, .. } => stmt(body, m),
            StmtKind::LocalBlock { init, body, fin, .. } => {
                expr(init, m);
                stmt(body, m);
                expr(fin, m);
            }
            StmtKind::New(d, y) | StmtKind::Delete(d, y) => {
                desc(d, m);
                lv(y, m);
            }
            StmtKind::Copy(d, a, b) | StmtKind::Uncopy(d, a, b) => {
                desc(d, m);
                lv(a, m);
                lv(b, m);
            }
            StmtKind::CallObject(o, _, _) | StmtKind::UncallObject(o, _, _) => lv(o, m),
            StmtKind::Sequence(v) => v.iter().for_each(|s| stmt(s, m)),
            StmtKind::Call(..) | StmtKind::Uncall(..) | StmtKind::Skip => {}
        }
    }
    let mut m = 0;
    for c in &p.classes {
        for meth in &c.methods {
            stmt(&meth.body, &mut m);
        }
    }
    m
}
