use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for (i, c) in p.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_class(&mut out, c);
    }
    out
}

fn print_class(out: &mut String, c: &ClassDecl) {
    let _ = write!(out, "class {}", c.name.name);
    if let Some(p) = &c.parent {
        let _ = write!(out, " inherits {}", p.name);
    }
    out.push('\n');
    for f in &c.fields {
        let _ = writeln!(out, "{INDENT}{} {}", f.ty, f.name.name);
    }
    for m in &c.methods {
        out.push('\n');
        let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name.name)).collect();
        let _ = writeln!(out, "{INDENT}method {}({})", m.name.name, params.join(", "));
        print_stmt(out, &m.body, 2);
    }
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    print_stmt(&mut out, s, 0);
    out
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    out.push_str(text);
    out.push('\n');
}

fn print_stmt(out: &mut String, s: &Stmt, d: usize) {
    match &s.kind {
        StmtKind::Sequence(items) => {
            for item in items {
                print_stmt(out, item, d);
            }
        }
        StmtKind::Assign(y, op, e) => line(out, d, &format!("{} {} {}", lvalue(y), op.symbol(), expr(e))),
        StmtKind::Swap(a, b) => line(out, d, &format!("{} <=> {}", lvalue(a), lvalue(b))),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
            assertion,
        } => {
            line(out, d, &format!("if {} then", expr(cond)));
            print_stmt(out, then_branch, d + 1);
            line(out, d, "else");
            print_stmt(out, else_branch, d + 1);
            line(out, d, &format!("fi {}", expr(assertion)));
        }
        StmtKind::Loop {
            entry,
            body,
            step,
            exit,
        } => {
            line(out, d, &format!("from {} do", expr(entry)));
            print_stmt(out, body, d + 1);
            line(out, d, "loop");
            print_stmt(out, step, d + 1);
            line(out, d, &format!("until {}", expr(exit)));
        }
        StmtKind::ObjectBlock { class, var, body } => {
            line(out, d, &format!("construct {} {}", class.name, var.name));
            print_stmt(out, body, d + 1);
            line(out, d, &format!("destruct {}", var.name));
        }
        StmtKind::LocalBlock {
            ty,
            var,
            init,
            body,
            fin,
        } => {
            line(out, d, &format!("local {ty} {} = {}", var.name, expr(init)));
            print_stmt(out, body, d + 1);
            line(out, d, &format!("delocal {ty} {} = {}", var.name, expr(fin)));
        }
        StmtKind::New(desc, y) => line(out, d, &format!("new {} {}", alloc(desc), lvalue(y))),
        StmtKind::Delete(desc, y) => line(out, d, &format!("delete {} {}", alloc(desc), lvalue(y))),
        StmtKind::Copy(desc, a, b) => line(out, d, &format!("copy {} {} {}", alloc(desc), lvalue(a), lvalue(b))),
        StmtKind::Uncopy(desc, a, b) => line(out, d, &format!("uncopy {} {} {}", alloc(desc), lvalue(a), lvalue(b))),
        StmtKind::Call(q, args) => line(out, d, &format!("call {}({})", q.name, idents(args))),
        StmtKind::Uncall(q, args) => line(out, d, &format!("uncall {}({})", q.name, idents(args))),
        StmtKind::CallObject(o, q, args) => line(out, d, &format!("call {}::{}({})", lvalue(o), q.name, idents(args))),
        StmtKind::UncallObject(o, q, args) => {
            line(out, d, &format!("uncall {}::{}({})", lvalue(o), q.name, idents(args)))
        }
        StmtKind::Skip => line(out, d, "skip"),
    }
}

fn idents(args: &[Ident]) -> String {
    args.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn alloc(d: &AllocDesc) -> String {
    match d {
        AllocDesc::Class(c) => c.name.clone(),
        AllocDesc::ClassArray(c, e) => format!("{}[{}]", c.name, expr(e)),
        AllocDesc::IntArray(e) => format!("int[{}]", expr(e)),
    }
}

fn lvalue(y: &LValue) -> String {
    match &y.index {
        None => y.var.name.clone(),
        Some(e) => format!("{}[{}]", y.var.name, expr(e)),
    }
}

/// Renders an expression with the minimum parentheses needed to re-parse
/// to the same tree.
pub fn expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    match &e.kind {
        ExprKind::Constant(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Variable(x) => out.push_str(x),
        ExprKind::Nil => out.push_str("nil"),
        ExprKind::ArrayElement(x, i) => {
            out.push_str(x);
            out.push('[');
            write_expr(out, i, 0);
            out.push(']');
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let paren = p < ctx;
            if paren {
                out.push('(');
            }
            write_expr(out, l, p);
            let _ = write!(out, " {} ", op.symbol());
            // Right operands at the same level need parentheses to stay
            // right-nested under left associativity.
            write_expr(out, r, p + 1);
            if paren {
                out.push(')');
            }
        }
    }
}
