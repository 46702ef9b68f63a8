//! Source-level statement and program inversion.
//!
//! Conditionals, loops and local blocks exchange their entry and exit
//! expressions when inverted: the exit assertion becomes the test that
//! selects the path when running backwards.

use crate::syntax::{MethodDecl, Program, Stmt, StmtKind};

/// The statement inverter. An involution.
pub fn invert_stmt(s: &Stmt) -> Stmt {
    invert(s, false)
}

/// Inverts every method body while leaving calls and uncalls as written.
///
/// Running the result forward undoes the original program: each method's
/// body runs backwards, and a call inside it reaches the callee's inverted
/// body, which is the callee run backwards.
pub fn invert_program(p: &Program) -> Program {
    let mut out = p.clone();
    for c in &mut out.classes {
        for m in &mut c.methods {
            *m = MethodDecl {
                body: invert(&m.body, true),
                ..m.clone()
            };
        }
    }
    out
}

fn invert(s: &Stmt, keep_calls: bool) -> Stmt {
    let inv = |s: &Stmt| Box::new(invert(s, keep_calls));
    let kind = match &s.kind {
        StmtKind::Skip => StmtKind::Skip,
        StmtKind::Sequence(items) => StmtKind::Sequence(items.iter().rev().map(|s| invert(s, keep_calls)).collect()),
        StmtKind::Assign(y, op, e) => StmtKind::Assign(y.clone(), op.inverse(), e.clone()),
        StmtKind::Swap(a, b) => StmtKind::Swap(a.clone(), b.clone()),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
            assertion,
        } => StmtKind::If {
            cond: assertion.clone(),
            then_branch: inv(then_branch),
            else_branch: inv(else_branch),
            assertion: cond.clone(),
        },
        StmtKind::Loop {
            entry,
            body,
            step,
            exit,
        } => StmtKind::Loop {
            entry: exit.clone(),
            body: inv(body),
            step: inv(step),
            exit: entry.clone(),
        },
        StmtKind::ObjectBlock { class, var, body } => StmtKind::ObjectBlock {
            class: class.clone(),
            var: var.clone(),
            body: inv(body),
        },
        StmtKind::LocalBlock {
            ty,
            var,
            init,
            body,
            fin,
        } => StmtKind::LocalBlock {
            ty: ty.clone(),
            var: var.clone(),
            init: fin.clone(),
            body: inv(body),
            fin: init.clone(),
        },
        StmtKind::New(d, y) => StmtKind::Delete(d.clone(), y.clone()),
        StmtKind::Delete(d, y) => StmtKind::New(d.clone(), y.clone()),
        StmtKind::Copy(d, a, b) => StmtKind::Uncopy(d.clone(), a.clone(), b.clone()),
        StmtKind::Uncopy(d, a, b) => StmtKind::Copy(d.clone(), a.clone(), b.clone()),
        k @ (StmtKind::Call(..) | StmtKind::Uncall(..) | StmtKind::CallObject(..) | StmtKind::UncallObject(..))
            if keep_calls =>
        {
            k.clone()
        }
        StmtKind::Call(q, a) => StmtKind::Uncall(q.clone(), a.clone()),
        StmtKind::Uncall(q, a) => StmtKind::Call(q.clone(), a.clone()),
        StmtKind::CallObject(o, q, a) => StmtKind::UncallObject(o.clone(), q.clone(), a.clone()),
        StmtKind::UncallObject(o, q, a) => StmtKind::CallObject(o.clone(), q.clone(), a.clone()),
    };
    Stmt { kind, span: s.span }
}
