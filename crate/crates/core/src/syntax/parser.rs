use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        i: 0,
    };
    p.program()
}

/// Parses a standalone statement sequence, for tests and tools.
pub fn parse_stmt(src: &str) -> Result<Stmt, SyntaxError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        i: 0,
    };
    let s = p.stmts()?;
    p.expect_eof()?;
    Ok(s)
}

/// Parses a standalone expression.
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        i: 0,
    };
    let e = p.expr(0)?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

const STMT_START: &[&str] = &[
    "identifier",
    "if",
    "from",
    "construct",
    "local",
    "new",
    "delete",
    "copy",
    "uncopy",
    "call",
    "uncall",
    "skip",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.i + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.i].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.i.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        SyntaxError {
            pos: self.span().start,
            message: format!("expected {}, found {}", expected.join(" or "), self.peek().describe()),
            expected,
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Kw(k) if *k == kw)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        let hit = self.is_sym(sym);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, SyntaxError> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<Span, SyntaxError> {
        if self.is_sym(sym) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[sym]))
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn ident(&mut self) -> Result<Ident, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut classes = Vec::new();
        while *self.peek() != Tok::Eof {
            classes.push(self.class()?);
        }
        if classes.is_empty() {
            return Err(self.error(&["class"]));
        }
        Ok(Program { classes })
    }

    fn class(&mut self) -> Result<ClassDecl, SyntaxError> {
        let start = self.expect_kw("class")?;
        let name = self.ident()?;
        let parent = if self.eat_kw("inherits") {
            Some(self.ident()?)
        } else {
            None
        };
        let mut fields = Vec::new();
        while self.is_kw("int") || matches!(self.peek(), Tok::Ident(_)) {
            let ty = self.type_name()?;
            let name = self.ident()?;
            fields.push(VarDecl { ty, name });
        }
        let mut methods = Vec::new();
        while self.is_kw("method") {
            methods.push(self.method()?);
        }
        if methods.is_empty() {
            return Err(self.error(&["method", "field declaration"]));
        }
        Ok(ClassDecl {
            name,
            parent,
            fields,
            methods,
            span: start.to(self.prev_span()),
        })
    }

    fn type_name(&mut self) -> Result<TypeName, SyntaxError> {
        let base = if self.eat_kw("int") {
            None
        } else if let Tok::Ident(_) = self.peek() {
            Some(self.ident()?.name)
        } else {
            return Err(self.error(&["type"]));
        };
        let array = if self.is_sym("[") && matches!(self.peek_at(1), Tok::Sym("]")) {
            self.bump();
            self.bump();
            true
        } else {
            false
        };
        Ok(match (base, array) {
            (None, false) => TypeName::Integer,
            (None, true) => TypeName::IntegerArray,
            (Some(c), false) => TypeName::ClassRef(c),
            (Some(c), true) => TypeName::ClassArray(c),
        })
    }

    fn method(&mut self) -> Result<MethodDecl, SyntaxError> {
        let start = self.expect_kw("method")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let ty = self.type_name()?;
                let name = self.ident()?;
                params.push(VarDecl { ty, name });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let body = self.stmts()?;
        Ok(MethodDecl {
            name,
            params,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn starts_stmt(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) => true,
            Tok::Kw(k) => STMT_START.contains(k),
            _ => false,
        }
    }

    /// One or more statements, flattened.
    fn stmts(&mut self) -> Result<Stmt, SyntaxError> {
        let mut out = vec![self.stmt()?];
        while self.starts_stmt() {
            out.push(self.stmt()?);
        }
        Ok(Stmt::seq(out))
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(_) => {
                let target = self.lvalue()?;
                if self.eat_sym("<=>") {
                    StmtKind::Swap(target, self.lvalue()?)
                } else {
                    let op = if self.eat_sym("+=") {
                        ModOp::Add
                    } else if self.eat_sym("-=") {
                        ModOp::Sub
                    } else if self.eat_sym("^=") {
                        ModOp::Xor
                    } else {
                        return Err(self.error(&["+=", "-=", "^=", "<=>"]));
                    };
                    StmtKind::Assign(target, op, self.expr(0)?)
                }
            }
            Tok::Kw("skip") => {
                self.bump();
                StmtKind::Skip
            }
            Tok::Kw("if") => {
                self.bump();
                let cond = self.expr(0)?;
                self.expect_kw("then")?;
                let then_branch = Box::new(self.stmts()?);
                self.expect_kw("else")?;
                let else_branch = Box::new(self.stmts()?);
                self.expect_kw("fi")?;
                let assertion = self.expr(0)?;
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                    assertion,
                }
            }
            Tok::Kw("from") => {
                self.bump();
                let entry = self.expr(0)?;
                self.expect_kw("do")?;
                let body = Box::new(self.stmts()?);
                self.expect_kw("loop")?;
                let step = Box::new(self.stmts()?);
                self.expect_kw("until")?;
                let exit = self.expr(0)?;
                StmtKind::Loop {
                    entry,
                    body,
                    step,
                    exit,
                }
            }
            Tok::Kw("construct") => {
                self.bump();
                let class = self.ident()?;
                let var = self.ident()?;
                let body = Box::new(self.stmts()?);
                self.expect_kw("destruct")?;
                let close = self.ident()?;
                if close.name != var.name {
                    return Err(SyntaxError {
                        pos: close.span.start,
                        message: format!("destruct names `{}`, expected `{}`", close.name, var.name),
                        expected: vec![var.name.clone()],
                    });
                }
                StmtKind::ObjectBlock { class, var, body }
            }
            Tok::Kw("local") => {
                self.bump();
                let ty = self.type_name()?;
                let var = self.ident()?;
                self.expect_sym("=")?;
                let init = self.expr(0)?;
                let body = Box::new(self.stmts()?);
                self.expect_kw("delocal")?;
                let close_pos = self.span().start;
                let close_ty = self.type_name()?;
                let close = self.ident()?;
                if close.name != var.name || close_ty != ty {
                    return Err(SyntaxError {
                        pos: close_pos,
                        message: format!(
                            "delocal `{close_ty} {}` does not match local `{ty} {}`",
                            close.name, var.name
                        ),
                        expected: vec![format!("{ty} {}", var.name)],
                    });
                }
                self.expect_sym("=")?;
                let fin = self.expr(0)?;
                StmtKind::LocalBlock {
                    ty,
                    var,
                    init,
                    body,
                    fin,
                }
            }
            Tok::Kw(kw @ ("new" | "delete")) => {
                self.bump();
                let d = self.alloc_desc()?;
                let y = self.lvalue()?;
                if kw == "new" {
                    StmtKind::New(d, y)
                } else {
                    StmtKind::Delete(d, y)
                }
            }
            Tok::Kw(kw @ ("copy" | "uncopy")) => {
                self.bump();
                let d = self.alloc_desc()?;
                let from = self.lvalue()?;
                let to = self.lvalue()?;
                if kw == "copy" {
                    StmtKind::Copy(d, from, to)
                } else {
                    StmtKind::Uncopy(d, from, to)
                }
            }
            Tok::Kw(kw @ ("call" | "uncall")) => {
                self.bump();
                let uncall = kw == "uncall";
                if matches!(self.peek_at(1), Tok::Sym("(")) {
                    let q = self.ident()?;
                    let args = self.args()?;
                    if uncall {
                        StmtKind::Uncall(q, args)
                    } else {
                        StmtKind::Call(q, args)
                    }
                } else {
                    let obj = self.lvalue()?;
                    self.expect_sym("::")?;
                    let q = self.ident()?;
                    let args = self.args()?;
                    if uncall {
                        StmtKind::UncallObject(obj, q, args)
                    } else {
                        StmtKind::CallObject(obj, q, args)
                    }
                }
            }
            _ => return Err(self.error(STMT_START)),
        };
        Ok(Stmt {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn args(&mut self) -> Result<Vec<Ident>, SyntaxError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.ident()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn alloc_desc(&mut self) -> Result<AllocDesc, SyntaxError> {
        if self.eat_kw("int") {
            self.expect_sym("[")?;
            let e = self.expr(0)?;
            self.expect_sym("]")?;
            return Ok(AllocDesc::IntArray(Box::new(e)));
        }
        let c = self.ident()?;
        if self.eat_sym("[") {
            let e = self.expr(0)?;
            self.expect_sym("]")?;
            Ok(AllocDesc::ClassArray(c, Box::new(e)))
        } else {
            Ok(AllocDesc::Class(c))
        }
    }

    fn lvalue(&mut self) -> Result<LValue, SyntaxError> {
        let var = self.ident()?;
        let index = if self.eat_sym("[") {
            let e = self.expr(0)?;
            self.expect_sym("]")?;
            Some(Box::new(e))
        } else {
            None
        };
        Ok(LValue {
            span: var.span.to(self.prev_span()),
            var,
            index,
        })
    }

    fn binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym(s) => BinOp::ALL.iter().copied().find(|op| op.symbol() == *s),
            _ => None,
        }
    }

    /// Precedence climbing over left-associative levels.
    fn expr(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec <= min_prec {
                break;
            }
            self.bump();
            let rhs = self.expr(prec)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                ExprKind::Constant(n)
            }
            Tok::Kw("nil") => {
                self.bump();
                ExprKind::Nil
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat_sym("[") {
                    let e = self.expr(0)?;
                    self.expect_sym("]")?;
                    ExprKind::ArrayElement(name, Box::new(e))
                } else {
                    ExprKind::Variable(name)
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr(0)?;
                self.expect_sym(")")?;
                return Ok(Expr {
                    kind: e.kind,
                    span: start.to(self.prev_span()),
                });
            }
            _ => return Err(self.error(&["expression"])),
        };
        Ok(Expr {
            kind,
            span: start.to(self.prev_span()),
        })
    }
}
