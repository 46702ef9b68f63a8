//! Static type checking.

use std::collections::HashSet;
use std::fmt;

use crate::classes::{array_type_of, ClassInfo, ClassMap};
use crate::syntax::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeErrorKind {
    Var,
    ArrElemVar,
    Nil,
    BinOpInt,
    BinOpObj,
    AssVar,
    ArrElemAss,
    SwpVar,
    If,
    Loop,
    ObjBlock,
    LocalBlock,
    Call,
    CallO,
    ObjNew,
    ObjDlt,
    ArrNew,
    ArrDlt,
    Cp,
    Ucp,
    Method,
    MissingMain,
    MultipleMain,
}

impl TypeErrorKind {
    pub fn rule(self) -> &'static str {
        use TypeErrorKind::*;
        match self {
            Var => "T-Var",
            ArrElemVar => "T-ArrElemVar",
            Nil => "T-Nil",
            BinOpInt => "T-BinOpInt",
            BinOpObj => "T-BinOpObj",
            AssVar => "T-AssVar",
            ArrElemAss => "T-ArrElemAss",
            SwpVar => "T-SwpVar",
            If => "T-If",
            Loop => "T-Loop",
            ObjBlock => "T-ObjBlock",
            LocalBlock => "T-LocalBlock",
            Call => "T-Call",
            CallO => "T-CallO",
            ObjNew => "T-ObjNew",
            ObjDlt => "T-ObjDlt",
            ArrNew => "T-ArrNew",
            ArrDlt => "T-ArrDlt",
            Cp => "T-Cp",
            Ucp => "T-Ucp",
            Method => "T-Method",
            MissingMain => "MissingMain",
            MultipleMain => "MultipleMain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind.rule(), self.message)
    }
}

impl std::error::Error for TypeError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub errors: Vec<TypeError>,
    pub warnings: Vec<Warning>,
}

/// Variable typing environment for one method body.
#[derive(Debug, Clone)]
pub struct TypeEnv<'a> {
    bindings: Vec<(String, TypeName, bool)>,
    class: &'a ClassInfo,
}

impl<'a> TypeEnv<'a> {
    /// Environment holding the fields of `class`.
    pub fn for_class(class: &'a ClassInfo) -> Self {
        TypeEnv {
            bindings: class.fields.iter().map(|(t, n)| (n.clone(), t.clone(), true)).collect(),
            class,
        }
    }

    pub fn bind(&mut self, name: &str, ty: TypeName) {
        self.bindings.push((name.to_string(), ty, false));
    }

    fn unbind(&mut self) {
        self.bindings.pop();
    }

    pub fn lookup(&self, name: &str) -> Option<&TypeName> {
        self.entry(name).map(|(_, t, _)| t)
    }

    fn entry(&self, name: &str) -> Option<&(String, TypeName, bool)> {
        self.bindings.iter().rev().find(|(n, _, _)| n == name)
    }

    fn is_field(&self, name: &str) -> bool {
        self.entry(name).is_some_and(|e| e.2)
    }
}

pub struct Checker<'m> {
    classes: &'m ClassMap,
    pub report: Report,
}

impl<'m> Checker<'m> {
    pub fn new(classes: &'m ClassMap) -> Self {
        Checker {
            classes,
            report: Report::default(),
        }
    }

    fn error(&mut self, kind: TypeErrorKind, span: Span, message: String) {
        self.report.errors.push(TypeError { kind, span, message });
    }

    /// `actual` may stand where `formal` is expected.
    fn compatible(&self, actual: &TypeName, formal: &TypeName) -> bool {
        match (actual, formal) {
            (TypeName::ClassRef(a), TypeName::ClassRef(b)) => self.classes.subtype_of(a, b).unwrap_or(false),
            _ => actual == formal,
        }
    }

    /// Types an expression. `expected` supplies the type of a `nil`.
    pub fn check_expr(&mut self, env: &TypeEnv, e: &Expr, expected: Option<&TypeName>) -> Option<TypeName> {
        match &e.kind {
            ExprKind::Constant(_) => Some(TypeName::Integer),
            ExprKind::Nil => match expected {
                Some(t) if *t != TypeName::Integer => Some(t.clone()),
                Some(_) => {
                    self.error(TypeErrorKind::Nil, e.span, "nil used as an integer".into());
                    None
                }
                None => {
                    self.error(
                        TypeErrorKind::Nil,
                        e.span,
                        "cannot determine the type of nil here".into(),
                    );
                    None
                }
            },
            ExprKind::Variable(x) => match env.lookup(x) {
                Some(t) => Some(t.clone()),
                None => {
                    self.error(TypeErrorKind::Var, e.span, format!("unbound variable `{x}`"));
                    None
                }
            },
            ExprKind::ArrayElement(x, i) => {
                self.expect_int(env, i, TypeErrorKind::ArrElemVar, "array index");
                match env.lookup(x) {
                    Some(t) => match array_type_of(t) {
                        Ok(el) => Some(el),
                        Err(_) => {
                            self.error(
                                TypeErrorKind::ArrElemVar,
                                e.span,
                                format!("`{x}` has type `{t}`, which is not an array"),
                            );
                            None
                        }
                    },
                    None => {
                        self.error(TypeErrorKind::Var, e.span, format!("unbound variable `{x}`"));
                        None
                    }
                }
            }
            ExprKind::Binary(op, l, r) if op.is_equality() => {
                let (tl, tr) = match (&l.kind, &r.kind) {
                    (ExprKind::Nil, ExprKind::Nil) => {
                        self.error(TypeErrorKind::Nil, e.span, "comparing nil with nil".into());
                        return None;
                    }
                    (ExprKind::Nil, _) => {
                        let tr = self.check_expr(env, r, None)?;
                        (self.check_expr(env, l, Some(&tr))?, tr)
                    }
                    (_, ExprKind::Nil) => {
                        let tl = self.check_expr(env, l, None)?;
                        let tr = self.check_expr(env, r, Some(&tl))?;
                        (tl, tr)
                    }
                    _ => {
                        let tl = self.check_expr(env, l, None);
                        let tr = self.check_expr(env, r, None);
                        (tl?, tr?)
                    }
                };
                let ok = match (&tl, &tr) {
                    (TypeName::Integer, TypeName::Integer) => true,
                    (TypeName::Integer, _) | (_, TypeName::Integer) => false,
                    _ => self.compatible(&tl, &tr) || self.compatible(&tr, &tl),
                };
                if ok {
                    Some(TypeName::Integer)
                } else {
                    let kind = if tl == TypeName::Integer && tr == TypeName::Integer {
                        TypeErrorKind::BinOpInt
                    } else {
                        TypeErrorKind::BinOpObj
                    };
                    self.error(
                        kind,
                        e.span,
                        format!("cannot compare `{tl}` with `{tr}` using `{}`", op.symbol()),
                    );
                    None
                }
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.expect_int(env, l, TypeErrorKind::BinOpInt, op.symbol());
                let b = self.expect_int(env, r, TypeErrorKind::BinOpInt, op.symbol());
                (a && b).then_some(TypeName::Integer)
            }
        }
    }

    fn expect_int(&mut self, env: &TypeEnv, e: &Expr, kind: TypeErrorKind, what: &str) -> bool {
        match self.check_expr(env, e, Some(&TypeName::Integer)) {
            Some(TypeName::Integer) => true,
            Some(t) => {
                self.error(
                    kind,
                    e.span,
                    format!("operand of `{what}` has type `{t}`, expected `int`"),
                );
                false
            }
            None => false,
        }
    }

    fn lvalue_type(&mut self, env: &TypeEnv, y: &LValue, kind: TypeErrorKind) -> Option<TypeName> {
        let Some(t) = env.lookup(&y.var.name).cloned() else {
            self.error(
                TypeErrorKind::Var,
                y.var.span,
                format!("unbound variable `{}`", y.var.name),
            );
            return None;
        };
        match &y.index {
            None => Some(t),
            Some(i) => {
                self.expect_int(env, i, TypeErrorKind::ArrElemVar, "array index");
                match array_type_of(&t) {
                    Ok(el) => Some(el),
                    Err(_) => {
                        self.error(
                            kind,
                            y.span,
                            format!("`{}` has type `{t}`, which is not an array", y.var.name),
                        );
                        None
                    }
                }
            }
        }
    }

    fn class_exists(&mut self, name: &Ident, kind: TypeErrorKind) -> bool {
        if self.classes.get(&name.name).is_some() {
            true
        } else {
            self.error(kind, name.span, format!("unknown class `{}`", name.name));
            false
        }
    }

    pub fn check_stmt(&mut self, env: &mut TypeEnv, s: &Stmt) {
        use TypeErrorKind as K;
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Sequence(items) => {
                for item in items {
                    self.check_stmt(env, item);
                }
            }
            StmtKind::Assign(y, _, e) => {
                let x = &y.var.name;
                let used = vars_of(e);
                match &y.index {
                    None => {
                        if let Some(t) = self.lvalue_type(env, y, K::AssVar) {
                            if t != TypeName::Integer {
                                self.error(K::AssVar, y.span, format!("`{x}` has type `{t}`, expected `int`"));
                            }
                        }
                        if used.contains(x) {
                            self.error(K::AssVar, s.span, format!("`{x}` occurs on both sides of the update"));
                        }
                        self.expect_int(env, e, K::AssVar, "update");
                    }
                    Some(i) => {
                        if let Some(t) = env.lookup(x).cloned() {
                            if t != TypeName::IntegerArray {
                                self.error(K::ArrElemAss, y.span, format!("`{x}` has type `{t}`, expected `int[]`"));
                            }
                        } else {
                            self.error(K::Var, y.var.span, format!("unbound variable `{x}`"));
                        }
                        self.expect_int(env, i, K::ArrElemVar, "array index");
                        let index_vars = vars_of(i);
                        if index_vars.contains(x) {
                            self.error(K::ArrElemAss, y.span, format!("index of `{x}` reads `{x}` itself"));
                        }
                        if used.contains(x) || index_vars.iter().any(|v| used.contains(v)) {
                            self.error(
                                K::ArrElemAss,
                                s.span,
                                format!("the updated cell of `{x}` or its index is read by the right-hand side"),
                            );
                        }
                        self.expect_int(env, e, K::ArrElemAss, "update");
                    }
                }
            }
            StmtKind::Swap(a, b) => {
                let ta = self.lvalue_type(env, a, K::SwpVar);
                let tb = self.lvalue_type(env, b, K::SwpVar);
                let bases = [&a.var.name, &b.var.name];
                for y in [a, b] {
                    if let Some(i) = &y.index {
                        let iv = vars_of(i);
                        if bases.iter().any(|v| iv.contains(*v)) {
                            self.error(K::SwpVar, y.span, "swap index reads a swapped variable".into());
                        }
                    }
                }
                if let (Some(ta), Some(tb)) = (ta, tb) {
                    let covariant = |me: &Self, cell: &LValue, tc: &TypeName, other: &TypeName| {
                        cell.index.is_some() && matches!(tc, TypeName::ClassRef(_)) && me.compatible(other, tc)
                    };
                    if ta != tb && !covariant(self, a, &ta, &tb) && !covariant(self, b, &tb, &ta) {
                        self.error(K::SwpVar, s.span, format!("cannot swap `{ta}` with `{tb}`"));
                    }
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
                assertion,
            } => {
                self.expect_int(env, cond, K::If, "if");
                self.check_stmt(env, then_branch);
                self.check_stmt(env, else_branch);
                self.expect_int(env, assertion, K::If, "fi");
            }
            StmtKind::Loop {
                entry,
                body,
                step,
                exit,
            } => {
                self.expect_int(env, entry, K::Loop, "from");
                self.check_stmt(env, body);
                self.check_stmt(env, step);
                self.expect_int(env, exit, K::Loop, "until");
            }
            StmtKind::ObjectBlock { class, var, body } => {
                self.class_exists(class, K::ObjBlock);
                let ty = TypeName::ClassRef(class.name.clone());
                if let Some(prev) = env.lookup(&var.name) {
                    if *prev != ty {
                        self.report.warnings.push(Warning {
                            span: var.span,
                            message: format!("`{}` shadows a variable of type `{prev}`", var.name),
                        });
                    }
                }
                env.bind(&var.name, ty);
                self.check_stmt(env, body);
                env.unbind();
            }
            StmtKind::LocalBlock {
                ty,
                var,
                init,
                body,
                fin,
            } => {
                if let Some(c) = ty.class_name() {
                    if self.classes.get(c).is_none() {
                        self.error(K::LocalBlock, var.span, format!("unknown class `{c}`"));
                    }
                }
                for e in [init, fin] {
                    if let Some(t) = self.check_expr(env, e, Some(ty)) {
                        if !self.compatible(&t, ty) {
                            self.error(
                                K::LocalBlock,
                                e.span,
                                format!("expression has type `{t}`, expected `{ty}`"),
                            );
                        }
                    }
                }
                env.bind(&var.name, ty.clone());
                self.check_stmt(env, body);
                env.unbind();
            }
            StmtKind::New(d, y) | StmtKind::Delete(d, y) => {
                let is_new = matches!(s.kind, StmtKind::New(..));
                let kind = match (d, is_new) {
                    (AllocDesc::Class(_), true) => K::ObjNew,
                    (AllocDesc::Class(_), false) => K::ObjDlt,
                    (_, true) => K::ArrNew,
                    (_, false) => K::ArrDlt,
                };
                self.check_desc(env, d, kind);
                if let Some(t) = self.lvalue_type(env, y, kind) {
                    let want = d.type_name();
                    let ok = t == want || (y.index.is_some() && self.compatible(&want, &t));
                    if !ok {
                        self.error(
                            kind,
                            y.span,
                            format!("`{}` has type `{t}`, descriptor allocates `{want}`", y.var.name),
                        );
                    }
                }
            }
            StmtKind::Copy(d, a, b) | StmtKind::Uncopy(d, a, b) => {
                let kind = if matches!(s.kind, StmtKind::Copy(..)) {
                    K::Cp
                } else {
                    K::Ucp
                };
                self.check_desc(env, d, kind);
                let want = d.type_name();
                for y in [a, b] {
                    if let Some(t) = self.lvalue_type(env, y, kind) {
                        if t != want {
                            self.error(
                                kind,
                                y.span,
                                format!("`{}` has type `{t}`, expected `{want}`", y.var.name),
                            );
                        }
                    }
                }
            }
            StmtKind::Call(q, args) | StmtKind::Uncall(q, args) => {
                let class = env.class;
                let Some(m) = class.methods.get(&q.name) else {
                    self.error(
                        K::Call,
                        q.span,
                        format!("class `{}` has no method `{}`", class.name, q.name),
                    );
                    return;
                };
                let params = m.decl.params.clone();
                for a in args {
                    if env.is_field(&a.name) {
                        self.error(K::Call, a.span, format!("field `{}` passed to a local call", a.name));
                    }
                }
                self.check_args(env, &q.name, args, &params, K::Call, s.span);
            }
            StmtKind::CallObject(o, q, args) | StmtKind::UncallObject(o, q, args) => {
                for a in args {
                    if a.name == o.var.name {
                        self.error(K::CallO, a.span, format!("callee `{}` passed as an argument", a.name));
                    }
                }
                if let Some(i) = &o.index {
                    let iv = vars_of(i);
                    for a in args {
                        if iv.contains(&a.name) {
                            self.error(
                                K::CallO,
                                a.span,
                                format!("argument `{}` is read by the callee index", a.name),
                            );
                        }
                    }
                }
                let Some(t) = self.lvalue_type(env, o, K::CallO) else {
                    return;
                };
                let TypeName::ClassRef(c) = &t else {
                    self.error(K::CallO, o.span, format!("callee has type `{t}`, expected an object"));
                    return;
                };
                let Some(m) = self.classes.get(c).and_then(|ci| ci.methods.get(&q.name)) else {
                    self.error(K::CallO, q.span, format!("class `{c}` has no method `{}`", q.name));
                    return;
                };
                let params = m.decl.params.clone();
                self.check_args(env, &q.name, args, &params, K::CallO, s.span);
            }
        }
    }

    fn check_desc(&mut self, env: &TypeEnv, d: &AllocDesc, kind: TypeErrorKind) {
        match d {
            AllocDesc::Class(c) => {
                self.class_exists(c, kind);
            }
            AllocDesc::ClassArray(c, e) => {
                self.class_exists(c, kind);
                self.expect_int(env, e, kind, "array length");
            }
            AllocDesc::IntArray(e) => {
                self.expect_int(env, e, kind, "array length");
            }
        }
    }

    fn check_args(
        &mut self,
        env: &TypeEnv,
        method: &str,
        args: &[Ident],
        params: &[VarDecl],
        kind: TypeErrorKind,
        span: Span,
    ) {
        if args.len() != params.len() {
            self.error(
                kind,
                span,
                format!("`{method}` takes {} arguments, {} given", params.len(), args.len()),
            );
        }
        let mut seen = HashSet::new();
        for a in args {
            if !seen.insert(&a.name) {
                self.error(kind, a.span, format!("argument `{}` is passed more than once", a.name));
            }
        }
        for (a, p) in args.iter().zip(params) {
            match env.lookup(&a.name) {
                None => self.error(TypeErrorKind::Var, a.span, format!("unbound variable `{}`", a.name)),
                Some(t) => {
                    if !self.compatible(t, &p.ty) {
                        self.error(
                            kind,
                            a.span,
                            format!(
                                "argument `{}` has type `{t}`, parameter `{}` expects `{}`",
                                a.name, p.name.name, p.ty
                            ),
                        );
                    }
                }
            }
        }
    }

    pub fn check_method(&mut self, class: &ClassInfo, m: &MethodDecl) {
        let mut env = TypeEnv::for_class(class);
        let mut seen = HashSet::new();
        for p in &m.params {
            if !seen.insert(&p.name.name) {
                self.error(
                    TypeErrorKind::Method,
                    p.name.span,
                    format!("parameter `{}` declared twice", p.name.name),
                );
            }
            env.bind(&p.name.name, p.ty.clone());
        }
        self.check_stmt(&mut env, &m.body);
    }
}

/// The class declaring the nullary `main` method.
pub fn find_main(program: &Program) -> Result<String, TypeError> {
    let mains: Vec<(&ClassDecl, &MethodDecl)> = program
        .classes
        .iter()
        .flat_map(|c| c.methods.iter().map(move |m| (c, m)))
        .filter(|(_, m)| m.name.name == "main" && m.params.is_empty())
        .collect();
    match mains.as_slice() {
        [(c, _)] => Ok(c.name.name.clone()),
        [] => Err(TypeError {
            kind: TypeErrorKind::MissingMain,
            span: program.classes.first().map(|c| c.span).unwrap_or_default(),
            message: "no nullary method `main`".into(),
        }),
        [_, (_, m), ..] => Err(TypeError {
            kind: TypeErrorKind::MultipleMain,
            span: m.span,
            message: format!("{} nullary `main` methods", mains.len()),
        }),
    }
}

/// Checks every method of every class, including inherited methods under
/// the inheriting class, and the `main` requirement.
pub fn check_program_report(program: &Program, classes: &ClassMap) -> Report {
    let mut checker = Checker::new(classes);
    for class in classes.iter() {
        for rm in class.methods.values() {
            checker.check_method(class, &rm.decl);
        }
    }
    if let Err(e) = find_main(program) {
        checker.report.errors.push(e);
    }
    let mut report = checker.report;
    let mut seen = HashSet::new();
    report
        .errors
        .retain(|e| seen.insert((e.kind, e.span.start, e.span.end, e.message.clone())));
    report.errors.sort_by_key(|e| e.span.start);
    let mut seen = HashSet::new();
    report
        .warnings
        .retain(|w| seen.insert((w.span.start, w.message.clone())));
    report.warnings.sort_by_key(|w| w.span.start);
    report
}

pub fn check_program(program: &Program, classes: &ClassMap) -> Result<(), Vec<TypeError>> {
    let report = check_program_report(program, classes);
    if report.errors.is_empty() {
        Ok(())
    } else {
        Err(report.errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::build_class_map;

    fn errors(src: &str) -> Vec<TypeErrorKind> {
        let p = parse(src).unwrap();
        let m = build_class_map(&p).unwrap();
        match check_program(&p, &m) {
            Ok(()) => vec![],
            Err(es) => es.into_iter().map(|e| e.kind).collect(),
        }
    }

    fn body(fields: &str, stmt: &str) -> Vec<TypeErrorKind> {
        errors(&format!(
            "class Cell int v method set(int k) v += k
             class M {fields} method q(int a, int b) skip method main() {stmt}"
        ))
    }

    #[test]
    fn expression_rules() {
        let p = parse("class C int x Cell head method main() skip class Cell method m() skip").unwrap();
        let m = build_class_map(&p).unwrap();
        let class = m.get("C").unwrap();
        let env = TypeEnv::for_class(class);
        let mut ck = Checker::new(&m);
        assert_eq!(
            ck.check_expr(&env, &parse_expr("1 + 2").unwrap(), None),
            Some(TypeName::Integer)
        );
        assert_eq!(
            ck.check_expr(&env, &parse_expr("head = nil").unwrap(), None),
            Some(TypeName::Integer)
        );
        assert!(ck.report.errors.is_empty());
        assert_eq!(ck.check_expr(&env, &parse_expr("head + 1").unwrap(), None), None);
        assert_eq!(ck.report.errors[0].kind, TypeErrorKind::BinOpInt);
        assert_eq!(ck.check_expr(&env, &parse_expr("1 + nil").unwrap(), None), None);
        assert_eq!(ck.report.errors[1].kind, TypeErrorKind::Nil);
        assert_eq!(ck.check_expr(&env, &parse_expr("head = x").unwrap(), None), None);
        assert_eq!(ck.report.errors[2].kind, TypeErrorKind::BinOpObj);
    }

    #[test]
    fn assignment_rules() {
        assert_eq!(body("int x", "x += x + 1"), vec![TypeErrorKind::AssVar]);
        assert_eq!(body("int[] x", "x[5] += x[5] + 1"), vec![TypeErrorKind::ArrElemAss]);
        assert_eq!(body("int[] x int i", "x[i] += i"), vec![TypeErrorKind::ArrElemAss]);
        assert_eq!(body("int[] x int i int j", "x[i] += j"), vec![]);
        assert_eq!(body("int y", "x += 1"), vec![TypeErrorKind::Var]);
    }

    #[test]
    fn call_rules() {
        assert_eq!(
            body("int a", "local int t = 0 call q(t, t) delocal int t = 0"),
            vec![TypeErrorKind::Call]
        );
        assert_eq!(
            body("int a int b", "call q(a, b)"),
            vec![TypeErrorKind::Call, TypeErrorKind::Call]
        );
        assert_eq!(body("Cell c int k", "call c::set(k)"), vec![]);
        assert_eq!(
            body("Cell c int k", "call c::set(k, k)"),
            vec![TypeErrorKind::CallO, TypeErrorKind::CallO]
        );
        assert_eq!(
            body("Cell c", "call c::set(c)"),
            vec![TypeErrorKind::CallO, TypeErrorKind::CallO]
        );
        assert_eq!(body("Cell c int k", "uncall c::nope(k)"), vec![TypeErrorKind::CallO]);
    }

    #[test]
    fn allocation_rules() {
        assert_eq!(body("Cell c", "new Cell c delete Cell c"), vec![]);
        assert_eq!(body("int c", "new Cell c"), vec![TypeErrorKind::ObjNew]);
        assert_eq!(body("Cell[] cs", "new Cell[3] cs new Cell cs[0]"), vec![]);
        assert_eq!(body("int[] xs", "new int[2] xs[0]"), vec![TypeErrorKind::ArrNew]);
        assert_eq!(body("Cell a Cell b", "copy Cell a b uncopy Cell a b"), vec![]);
        assert_eq!(body("Cell a int b", "copy Cell a b"), vec![TypeErrorKind::Cp]);
    }

    #[test]
    fn block_rules() {
        assert_eq!(body("int x", "local Cell c = nil x += 1 delocal Cell c = nil"), vec![]);
        assert_eq!(
            body("int x", "local int c = nil skip delocal int c = 0"),
            vec![TypeErrorKind::Nil]
        );
        assert_eq!(
            body("int x", "construct Cell c call c::set(x) uncall c::set(x) destruct c"),
            vec![]
        );
        assert_eq!(body("Cell a Cell b", "a <=> b"), vec![]);
        assert_eq!(body("Cell a int b", "a <=> b"), vec![TypeErrorKind::SwpVar]);
        assert_eq!(body("int[] a int i", "a[i] <=> i"), vec![TypeErrorKind::SwpVar]);
        assert_eq!(
            body(
                "int x",
                "if x then skip else skip fi x from x = 0 do skip loop skip until x"
            ),
            vec![]
        );
    }

    #[test]
    fn array_covariance_in_swaps() {
        let src = "class B method m() skip
                   class A inherits B method main() skip
                   class M A a B[] bs method go() a <=> bs[0]";
        assert_eq!(errors(src), vec![]);
    }

    #[test]
    fn object_block_shadowing_warns() {
        let p = parse("class C int c method main() construct C c skip destruct c").unwrap();
        let m = build_class_map(&p).unwrap();
        let r = check_program_report(&p, &m);
        assert!(r.errors.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn main_rules() {
        assert_eq!(errors("class C method m() skip"), vec![TypeErrorKind::MissingMain]);
        assert_eq!(
            errors("class C int x method main(int x) skip"),
            vec![TypeErrorKind::MissingMain]
        );
        assert_eq!(
            errors("class C method main() skip class D method main() skip"),
            vec![TypeErrorKind::MultipleMain]
        );
    }

    #[test]
    fn diagnostics_name_the_rule() {
        let p = parse("class C int x\n method main()\n  x += x").unwrap();
        let m = build_class_map(&p).unwrap();
        let e = &check_program(&p, &m).unwrap_err()[0];
        assert_eq!(e.to_string(), "3:3: T-AssVar: `x` occurs on both sides of the update");
    }
}
