//! Direction-aware interpreter over a [`MemoryImage`].
//!
//! Objects live at heap addresses with layout `[class id, refcount, fields..]`,
//! arrays as `[length, refcount, cells..]`. Variables are bound to word
//! addresses; parameters alias their arguments' addresses.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::classes::{ClassInfo, ClassMap};
use crate::heap::{HeapConfig, HeapError, MemoryImage, WordWidth};
use crate::syntax::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuntimeErrorKind {
    AssertionFailedIf,
    AssertionFailedLoopEntry,
    AssertionFailedLoop,
    NonZeroFieldsOnDelete,
    NonZeroCellsOnDelete,
    DelocalMismatch,
    NewTargetNotNil,
    CopyTargetNotNil,
    UninitializedObject,
    UninitializedArray,
    IndexOutOfBounds,
    DanglingReferenceOnDelete,
    DivisionByZero,
    StackOverflow,
    StepLimitExceeded,
    NilDereference,
    ArrayLengthMismatch,
    InvalidArrayLength,
    DeleteClassMismatch,
    UncopyMismatch,
    SwapTypeMismatch,
    OutOfMemory,
    CorruptFree,
    AddressFault,
    BadObject,
}

impl RuntimeErrorKind {
    pub fn name(self) -> &'static str {
        use RuntimeErrorKind::*;
        match self {
            AssertionFailedIf => "AssertionFailed-if",
            AssertionFailedLoopEntry => "AssertionFailed-loop-entry",
            AssertionFailedLoop => "AssertionFailed-loop",
            NonZeroFieldsOnDelete => "NonZeroFieldsOnDelete",
            NonZeroCellsOnDelete => "NonZeroCellsOnDelete",
            DelocalMismatch => "DelocalMismatch",
            NewTargetNotNil => "NewTargetNotNil",
            CopyTargetNotNil => "CopyTargetNotNil",
            UninitializedObject => "UninitializedObject",
            UninitializedArray => "UninitializedArray",
            IndexOutOfBounds => "IndexOutOfBounds",
            DanglingReferenceOnDelete => "DanglingReferenceOnDelete",
            DivisionByZero => "DivisionByZero",
            StackOverflow => "StackOverflow",
            StepLimitExceeded => "StepLimitExceeded",
            NilDereference => "NilDereference",
            ArrayLengthMismatch => "ArrayLengthMismatch",
            InvalidArrayLength => "InvalidArrayLength",
            DeleteClassMismatch => "DeleteClassMismatch",
            UncopyMismatch => "UncopyMismatch",
            SwapTypeMismatch => "SwapTypeMismatch",
            OutOfMemory => "OutOfMemory",
            CorruptFree => "CorruptFree",
            AddressFault => "AddressFault",
            BadObject => "BadObject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub span: Span,
    pub message: String,
    /// Enclosing calls, innermost first.
    pub trace: Vec<String>,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind.name(), self.message)?;
        for t in &self.trace {
            write!(f, "\n    in {t}")?;
        }
        Ok(())
    }
}

impl std::error::Error for RuntimeError {}

type Result<T> = std::result::Result<T, RuntimeError>;

fn rt(kind: RuntimeErrorKind, span: Span, message: impl Into<String>) -> RuntimeError {
    RuntimeError {
        kind,
        span,
        message: message.into(),
        trace: Vec::new(),
    }
}

fn heap_err(e: HeapError, span: Span) -> RuntimeError {
    let kind = match e {
        HeapError::OutOfMemory(_) | HeapError::Config(_) => RuntimeErrorKind::OutOfMemory,
        HeapError::CorruptFree { .. } => RuntimeErrorKind::CorruptFree,
        HeapError::StackOverflow => RuntimeErrorKind::StackOverflow,
        HeapError::NilFault => RuntimeErrorKind::NilDereference,
        HeapError::AddressFault(_) => RuntimeErrorKind::AddressFault,
    };
    rt(kind, span, e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineConfig {
    pub heap: HeapConfig,
    pub step_limit: u64,
    pub max_call_depth: usize,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            heap: HeapConfig::default(),
            step_limit: 10_000_000,
            max_call_depth: 4096,
        }
    }
}

/// One executed statement, for the optional trace stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub line: u32,
    pub col: u32,
    pub rule: &'static str,
    pub direction: Direction,
    pub touched: Vec<i64>,
}

/// Binary operator over words of the given width.
pub fn apply_binop(width: WordWidth, op: BinOp, a: i64, b: i64) -> std::result::Result<i64, RuntimeErrorKind> {
    let bool_word = |c: bool| c as i64;
    let v = match op {
        BinOp::Add => a.wrapping_add(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Xor => a ^ b,
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::Div | BinOp::Mod if b == 0 => return Err(RuntimeErrorKind::DivisionByZero),
        BinOp::Div => a.wrapping_div(b),
        BinOp::Mod => a.wrapping_rem(b),
        BinOp::BitAnd => a & b,
        BinOp::BitOr => a | b,
        BinOp::And => bool_word(a != 0 && b != 0),
        BinOp::Or => bool_word(a != 0 || b != 0),
        BinOp::Lt => bool_word(a < b),
        BinOp::Gt => bool_word(a > b),
        BinOp::Eq => bool_word(a == b),
        BinOp::Ne => bool_word(a != b),
        BinOp::Le => bool_word(a <= b),
        BinOp::Ge => bool_word(a >= b),
    };
    Ok(width.wrap(v))
}

/// Variable bindings of one method activation: name, address and the
/// declared type of the storage at that address.
#[derive(Debug, Clone)]
pub struct Env {
    vars: Vec<(String, i64, TypeName)>,
    this: i64,
}

impl Env {
    fn binding(&self, name: &str) -> Option<&(String, i64, TypeName)> {
        self.vars.iter().rev().find(|(n, _, _)| n == name)
    }

    fn lookup(&self, name: &str) -> Option<i64> {
        self.binding(name).map(|b| b.1)
    }

    /// Declared type of the word an lvalue denotes.
    fn storage_type(&self, y: &LValue) -> Option<TypeName> {
        let t = self.binding(&y.var.name)?.2.clone();
        match (&y.index, t) {
            (None, t) => Some(t),
            (Some(_), TypeName::IntegerArray) => Some(TypeName::Integer),
            (Some(_), TypeName::ClassArray(c)) => Some(TypeName::ClassRef(c)),
            (Some(_), _) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    /// Main-object fields in declaration order.
    pub fields: Vec<(String, i64)>,
    pub steps: u64,
    pub main_addr: i64,
}

type TraceSink<'c> = Box<dyn FnMut(&TraceRecord) + 'c>;

pub struct Machine<'c> {
    classes: &'c ClassMap,
    pub mem: MemoryImage,
    pub steps: u64,
    config: MachineConfig,
    depth: usize,
    trace: Option<TraceSink<'c>>,
}

impl<'c> Machine<'c> {
    pub fn new(classes: &'c ClassMap, config: MachineConfig) -> std::result::Result<Self, HeapError> {
        let mem = MemoryImage::new(&config.heap)?;
        Ok(Self::with_memory(classes, mem, config))
    }

    /// Resumes from an existing image.
    pub fn with_memory(classes: &'c ClassMap, mem: MemoryImage, config: MachineConfig) -> Self {
        Machine {
            classes,
            mem,
            steps: 0,
            config,
            depth: 0,
            trace: None,
        }
    }

    pub fn set_trace(&mut self, sink: impl FnMut(&TraceRecord) + 'c) {
        self.trace = Some(Box::new(sink));
    }

    fn width(&self) -> WordWidth {
        self.mem.width()
    }

    fn read(&self, addr: i64, span: Span) -> Result<i64> {
        self.mem.read_word(addr).map_err(|e| heap_err(e, span))
    }

    fn write(&mut self, addr: i64, v: i64, span: Span) -> Result<()> {
        self.mem.write_word(addr, v).map_err(|e| heap_err(e, span))
    }

    fn emit(&mut self, s: &Stmt, rule: &'static str, dir: Direction, touched: Vec<i64>) {
        if let Some(t) = &mut self.trace {
            t(&TraceRecord {
                line: s.span.start.line,
                col: s.span.start.col,
                rule,
                direction: dir,
                touched,
            });
        }
    }

    fn class_of(&self, obj: i64, span: Span) -> Result<&'c ClassInfo> {
        let id = self.read(obj, span)?;
        self.classes.by_id(id).ok_or_else(|| {
            rt(
                RuntimeErrorKind::BadObject,
                span,
                format!("word {obj} holds no class id"),
            )
        })
    }

    // ---- main object -------------------------------------------------

    /// Address the main object occupies at the top of the frame region.
    pub fn main_object_addr(&self, main: &ClassInfo) -> i64 {
        (self.mem.len() - (main.fields.len() + 2)) as i64
    }

    /// Places a zeroed main object at the top of the frame region. Keeping
    /// it out of the heap leaves the free lists untouched by a trivial run.
    pub fn alloc_main(&mut self, main: &ClassInfo) -> std::result::Result<i64, HeapError> {
        let addr = self.mem.push_frame(main.fields.len() + 2)? as i64;
        self.mem.write_word(addr, main.id)?;
        self.mem.write_word(addr + 1, 1)?;
        Ok(addr)
    }

    pub fn main_fields(&self, main: &ClassInfo, obj: i64) -> Vec<(String, i64)> {
        main.fields
            .iter()
            .map(|(_, n)| {
                let off = main.layout.field_offsets[n] as i64;
                (n.clone(), self.mem.read_word(obj + off).unwrap_or(0))
            })
            .collect()
    }

    /// Runs `main` of `main_class` on a fresh main object.
    pub fn run_main(&mut self, main_class: &str, dir: Direction) -> Result<RunOutput> {
        let main = self.main_class(main_class)?;
        let obj = self.alloc_main(main).map_err(|e| heap_err(e, main.span))?;
        self.call_main(main, obj, dir)
    }

    /// Runs `main` on the main object already present in a resumed image.
    pub fn resume_main(&mut self, main_class: &str, dir: Direction) -> Result<RunOutput> {
        let main = self.main_class(main_class)?;
        let obj = self.main_object_addr(main);
        if self.mem.read_word(obj) != Ok(main.id) {
            return Err(rt(
                RuntimeErrorKind::BadObject,
                main.span,
                format!("resumed image has no `{}` object at {obj}", main.name),
            ));
        }
        self.call_main(main, obj, dir)
    }

    fn main_class(&self, name: &str) -> Result<&'c ClassInfo> {
        self.classes.get(name).ok_or_else(|| {
            rt(
                RuntimeErrorKind::BadObject,
                Span::default(),
                format!("no class `{name}`"),
            )
        })
    }

    fn call_main(&mut self, main: &'c ClassInfo, obj: i64, dir: Direction) -> Result<RunOutput> {
        let m = main.methods.get("main").ok_or_else(|| {
            rt(
                RuntimeErrorKind::BadObject,
                main.span,
                format!("`{}` has no main", main.name),
            )
        })?;
        let env = self.object_env(main, obj);
        self.exec(&env, &m.decl.body, dir)?;
        Ok(RunOutput {
            fields: self.main_fields(main, obj),
            steps: self.steps,
            main_addr: obj,
        })
    }

    fn object_env(&self, class: &ClassInfo, obj: i64) -> Env {
        Env {
            vars: class
                .fields
                .iter()
                .map(|(t, n)| (n.clone(), obj + class.layout.field_offsets[n] as i64, t.clone()))
                .collect(),
            this: obj,
        }
    }

    /// Executes a statement with the fields of the object at `obj` in scope.
    pub fn exec_in_object(&mut self, obj: i64, s: &Stmt, dir: Direction) -> Result<()> {
        let class = self.class_of(obj, s.span)?;
        let env = self.object_env(class, obj);
        self.exec(&env, s, dir)
    }

    /// Evaluates an expression with the fields of the object at `obj` in scope.
    pub fn eval_in_object(&self, obj: i64, e: &Expr) -> Result<i64> {
        let class = self.class_of(obj, e.span)?;
        self.eval(&self.object_env(class, obj), e)
    }

    /// Calls method `q` on the object at `obj`.
    pub fn call_method(&mut self, obj: i64, q: &str, dir: Direction) -> Result<()> {
        let stmt = Stmt::new(StmtKind::Call(Ident::new(q), vec![]));
        let class = self.class_of(obj, Span::default())?;
        let env = self.object_env(class, obj);
        self.exec(&env, &stmt, dir)
    }

    // ---- expressions -------------------------------------------------

    fn eval(&self, env: &Env, e: &Expr) -> Result<i64> {
        match &e.kind {
            ExprKind::Constant(n) => Ok(self.width().wrap(*n)),
            ExprKind::Nil => Ok(0),
            ExprKind::Variable(x) => {
                let a = self.var_addr(env, x, e.span)?;
                self.read(a, e.span)
            }
            ExprKind::ArrayElement(x, i) => {
                let base = self.var_addr(env, x, e.span)?;
                let a = self.cell_addr(env, base, x, i, e.span)?;
                self.read(a, e.span)
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(env, l)?;
                let b = self.eval(env, r)?;
                apply_binop(self.width(), *op, a, b).map_err(|k| rt(k, e.span, format!("`{}` by zero", op.symbol())))
            }
        }
    }

    fn var_addr(&self, env: &Env, x: &str, span: Span) -> Result<i64> {
        env.lookup(x)
            .ok_or_else(|| rt(RuntimeErrorKind::BadObject, span, format!("unbound variable `{x}`")))
    }

    fn cell_addr(&self, env: &Env, base: i64, x: &str, index: &Expr, span: Span) -> Result<i64> {
        let arr = self.read(base, span)?;
        if arr == 0 {
            return Err(rt(
                RuntimeErrorKind::UninitializedArray,
                span,
                format!("array `{x}` is nil"),
            ));
        }
        let i = self.eval(env, index)?;
        let len = self.read(arr, span)?;
        if i < 0 || i >= len {
            return Err(rt(
                RuntimeErrorKind::IndexOutOfBounds,
                span,
                format!("index {i} outside `{x}` of length {len}"),
            ));
        }
        Ok(arr + 2 + i)
    }

    fn lvalue_addr(&self, env: &Env, y: &LValue) -> Result<i64> {
        let base = self.var_addr(env, &y.var.name, y.span)?;
        match &y.index {
            None => Ok(base),
            Some(i) => self.cell_addr(env, base, &y.var.name, i, y.span),
        }
    }

    // ---- statements --------------------------------------------------

    fn tick(&mut self, span: Span) -> Result<()> {
        self.steps += 1;
        if self.steps > self.config.step_limit {
            return Err(rt(
                RuntimeErrorKind::StepLimitExceeded,
                span,
                format!("exceeded {} steps", self.config.step_limit),
            ));
        }
        Ok(())
    }

    /// Executes `s` in direction `dir`. Backward execution of `s` behaves
    /// as forward execution of its inverse.
    pub fn exec(&mut self, env: &Env, s: &Stmt, dir: Direction) -> Result<()> {
        use Direction::*;
        if !matches!(s.kind, StmtKind::Sequence(_)) {
            self.tick(s.span)?;
        }
        let forward = dir == Forward;
        match &s.kind {
            StmtKind::Skip => self.emit(s, "Skip", dir, vec![]),
            StmtKind::Sequence(items) => {
                if forward {
                    for item in items {
                        self.exec(env, item, dir)?;
                    }
                } else {
                    for item in items.iter().rev() {
                        self.exec(env, item, dir)?;
                    }
                }
            }
            StmtKind::Assign(y, op, e) => {
                let op = if forward { *op } else { op.inverse() };
                let a = self.lvalue_addr(env, y)?;
                let v = self.eval(env, e)?;
                let old = self.read(a, s.span)?;
                let new = match op {
                    ModOp::Add => old.wrapping_add(v),
                    ModOp::Sub => old.wrapping_sub(v),
                    ModOp::Xor => old ^ v,
                };
                self.write(a, new, s.span)?;
                let rule = if y.index.is_some() { "AssArrElemVar" } else { "AssVar" };
                self.emit(s, rule, dir, vec![a]);
            }
            StmtKind::Swap(l, r) => {
                let a = self.lvalue_addr(env, l)?;
                let b = self.lvalue_addr(env, r)?;
                let va = self.read(a, s.span)?;
                let vb = self.read(b, s.span)?;
                self.check_store(env, l, vb, s.span)?;
                self.check_store(env, r, va, s.span)?;
                self.write(a, vb, s.span)?;
                self.write(b, va, s.span)?;
                self.emit(s, "SwpVar", dir, vec![a, b]);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
                assertion,
            } => {
                let (test, check) = if forward { (cond, assertion) } else { (assertion, cond) };
                let taken = self.eval(env, test)? != 0;
                self.exec(env, if taken { then_branch } else { else_branch }, dir)?;
                if (self.eval(env, check)? != 0) != taken {
                    return Err(rt(
                        RuntimeErrorKind::AssertionFailedIf,
                        s.span,
                        format!(
                            "`{}` is {} after the {} branch",
                            expr_to_string(check),
                            if taken { "false" } else { "true" },
                            if taken { "then" } else { "else" }
                        ),
                    ));
                }
                self.emit(s, if taken { "IfTrue" } else { "IfFalse" }, dir, vec![]);
            }
            StmtKind::Loop {
                entry,
                body,
                step,
                exit,
            } => {
                let (entry, exit) = if forward { (entry, exit) } else { (exit, entry) };
                if self.eval(env, entry)? == 0 {
                    return Err(rt(
                        RuntimeErrorKind::AssertionFailedLoopEntry,
                        s.span,
                        format!("entry condition `{}` is false", expr_to_string(entry)),
                    ));
                }
                loop {
                    self.exec(env, body, dir)?;
                    if self.eval(env, exit)? != 0 {
                        break;
                    }
                    self.exec(env, step, dir)?;
                    if self.eval(env, entry)? != 0 {
                        return Err(rt(
                            RuntimeErrorKind::AssertionFailedLoop,
                            s.span,
                            format!("entry condition `{}` holds on re-entry", expr_to_string(entry)),
                        ));
                    }
                }
                self.emit(s, "LoopMain", dir, vec![]);
            }
            StmtKind::LocalBlock {
                ty,
                var,
                init,
                body,
                fin,
            } => {
                let (first, last) = if forward { (init, fin) } else { (fin, init) };
                let reference = *ty != TypeName::Integer;
                let v = self.eval(env, first)?;
                let slot = self.mem.push_frame(1).map_err(|e| heap_err(e, s.span))? as i64;
                self.write(slot, v, s.span)?;
                if reference && v != 0 {
                    self.adjust_refcount(v, 1, s.span)?;
                }
                let mut inner = env.clone();
                inner.vars.push((var.name.clone(), slot, ty.clone()));
                self.exec(&inner, body, dir)?;
                let w = self.eval(env, last)?;
                let now = self.read(slot, s.span)?;
                if now != w {
                    return Err(rt(
                        RuntimeErrorKind::DelocalMismatch,
                        s.span,
                        format!("`{}` is {now}, delocal expects {w}", var.name),
                    ));
                }
                if reference && w != 0 {
                    self.adjust_refcount(w, -1, s.span)?;
                }
                self.write(slot, 0, s.span)?;
                self.mem.pop_frame(1);
                self.emit(s, "LocalBlock", dir, vec![slot]);
            }
            StmtKind::ObjectBlock { class, var, body } => {
                // local c x = nil; new c x; body; delete c x; delocal c x = nil
                let slot = self.mem.push_frame(1).map_err(|e| heap_err(e, s.span))? as i64;
                let mut inner = env.clone();
                inner
                    .vars
                    .push((var.name.clone(), slot, TypeName::ClassRef(class.name.clone())));
                let desc = AllocDesc::Class(class.clone());
                let target = LValue {
                    var: var.clone(),
                    index: None,
                    span: var.span,
                };
                self.alloc(&inner, &desc, &target, s.span)?;
                self.exec(&inner, body, dir)?;
                self.dealloc(&inner, &desc, &target, s.span)?;
                self.mem.pop_frame(1);
                self.emit(s, "ObjBlock", dir, vec![slot]);
            }
            StmtKind::New(d, y) | StmtKind::Delete(d, y) => {
                let is_new = matches!(s.kind, StmtKind::New(..)) == forward;
                let touched = if is_new {
                    self.alloc(env, d, y, s.span)?
                } else {
                    self.dealloc(env, d, y, s.span)?
                };
                let rule = match (d, is_new) {
                    (AllocDesc::Class(_), true) => "ObjNew",
                    (AllocDesc::Class(_), false) => "ObjDelete",
                    (_, true) => "ArrNew",
                    (_, false) => "ArrDelete",
                };
                self.emit(s, rule, dir, touched);
            }
            StmtKind::Copy(_, a, b) | StmtKind::Uncopy(_, a, b) => {
                let is_copy = matches!(s.kind, StmtKind::Copy(..)) == forward;
                let from = self.lvalue_addr(env, a)?;
                let to = self.lvalue_addr(env, b)?;
                let v = self.read(from, s.span)?;
                if v == 0 {
                    return Err(rt(
                        RuntimeErrorKind::NilDereference,
                        s.span,
                        format!("`{}` is nil", a.var.name),
                    ));
                }
                let w = self.read(to, s.span)?;
                if is_copy {
                    if w != 0 {
                        return Err(rt(
                            RuntimeErrorKind::CopyTargetNotNil,
                            s.span,
                            format!("copy target `{}` is not nil", b.var.name),
                        ));
                    }
                    self.write(to, v, s.span)?;
                    self.adjust_refcount(v, 1, s.span)?;
                } else {
                    if w != v {
                        return Err(rt(
                            RuntimeErrorKind::UncopyMismatch,
                            s.span,
                            format!("`{}` is not a copy of `{}`", b.var.name, a.var.name),
                        ));
                    }
                    if self.read(v + 1, s.span)? < 2 {
                        return Err(rt(
                            RuntimeErrorKind::UncopyMismatch,
                            s.span,
                            format!("`{}` holds the last reference", b.var.name),
                        ));
                    }
                    self.adjust_refcount(v, -1, s.span)?;
                    self.write(to, 0, s.span)?;
                }
                self.emit(s, if is_copy { "Copy" } else { "Uncopy" }, dir, vec![from, to, v + 1]);
            }
            StmtKind::Call(q, args) | StmtKind::Uncall(q, args) => {
                let body_dir = if matches!(s.kind, StmtKind::Call(..)) {
                    dir
                } else {
                    dir.flip()
                };
                self.invoke(env, env.this, q, args, body_dir, s.span)?;
                let rule = if body_dir == Forward { "Call" } else { "Uncall" };
                self.emit(s, rule, dir, vec![]);
            }
            StmtKind::CallObject(o, q, args) | StmtKind::UncallObject(o, q, args) => {
                let body_dir = if matches!(s.kind, StmtKind::CallObject(..)) {
                    dir
                } else {
                    dir.flip()
                };
                let slot = self.lvalue_addr(env, o)?;
                let obj = self.read(slot, s.span)?;
                if obj == 0 {
                    return Err(rt(
                        RuntimeErrorKind::UninitializedObject,
                        s.span,
                        format!("`{}` is nil", o.var.name),
                    ));
                }
                self.invoke(env, obj, q, args, body_dir, s.span)?;
                let rule = if body_dir == Forward { "CallObj" } else { "ObjUncall" };
                self.emit(s, rule, dir, vec![obj]);
            }
        }
        Ok(())
    }

    fn invoke(&mut self, env: &Env, obj: i64, q: &Ident, args: &[Ident], dir: Direction, span: Span) -> Result<()> {
        let class = self.class_of(obj, span)?;
        let m = class.methods.get(&q.name).ok_or_else(|| {
            rt(
                RuntimeErrorKind::BadObject,
                span,
                format!("`{}` has no method `{}`", class.name, q.name),
            )
        })?;
        let mut callee = self.object_env(class, obj);
        for (p, a) in m.decl.params.iter().zip(args) {
            // The argument's own type: a covariant parameter still aliases
            // storage declared with the narrower type.
            let (_, addr, ty) = env.binding(&a.name).cloned().ok_or_else(|| {
                rt(
                    RuntimeErrorKind::BadObject,
                    a.span,
                    format!("unbound variable `{}`", a.name),
                )
            })?;
            callee.vars.push((p.name.name.clone(), addr, ty));
        }
        if self.depth >= self.config.max_call_depth {
            return Err(rt(
                RuntimeErrorKind::StackOverflow,
                span,
                format!("call depth exceeds {}", self.config.max_call_depth),
            ));
        }
        self.depth += 1;
        let r = self.exec(&callee, &m.decl.body, dir);
        self.depth -= 1;
        r.map_err(|mut e| {
            e.trace.push(format!(
                "{}::{} ({}) at {}",
                class.name,
                q.name,
                if dir == Direction::Forward { "call" } else { "uncall" },
                span
            ));
            e
        })
    }

    /// Rejects storing an object into a location declared with a class it
    /// does not belong to. Covariant array cells make this reachable.
    fn check_store(&self, env: &Env, y: &LValue, v: i64, span: Span) -> Result<()> {
        let Some(TypeName::ClassRef(want)) = env.storage_type(y) else {
            return Ok(());
        };
        if v == 0 {
            return Ok(());
        }
        let actual = self.class_of(v, span)?;
        if self.classes.subtype_of(&actual.name, &want).unwrap_or(false) {
            return Ok(());
        }
        Err(rt(
            RuntimeErrorKind::SwapTypeMismatch,
            span,
            format!(
                "`{}` is declared `{want}` but would hold a `{}`",
                y.var.name, actual.name
            ),
        ))
    }

    fn adjust_refcount(&mut self, obj: i64, delta: i64, span: Span) -> Result<()> {
        let rc = self.read(obj + 1, span)?;
        self.write(obj + 1, rc + delta, span)
    }

    /// `new`: returns the touched addresses.
    fn alloc(&mut self, env: &Env, d: &AllocDesc, y: &LValue, span: Span) -> Result<Vec<i64>> {
        let target = self.lvalue_addr(env, y)?;
        if self.read(target, span)? != 0 {
            return Err(rt(
                RuntimeErrorKind::NewTargetNotNil,
                span,
                format!("`{}` is not nil", y.var.name),
            ));
        }
        let (header, words) = match d {
            AllocDesc::Class(c) => {
                let info = self
                    .classes
                    .get(&c.name)
                    .ok_or_else(|| rt(RuntimeErrorKind::BadObject, span, format!("no class `{}`", c.name)))?;
                (info.id, info.layout.alloc_words)
            }
            AllocDesc::ClassArray(_, e) | AllocDesc::IntArray(e) => {
                let n = self.eval(env, e)?;
                if n < 1 {
                    return Err(rt(
                        RuntimeErrorKind::InvalidArrayLength,
                        span,
                        format!("array length {n} is not positive"),
                    ));
                }
                (n, n as usize + 2)
            }
        };
        let p = self.mem.malloc(words).map_err(|e| heap_err(e, span))? as i64;
        self.write(p, header, span)?;
        self.write(p + 1, 1, span)?;
        self.write(target, p, span)?;
        Ok(vec![target, p])
    }

    /// `delete`: returns the touched addresses.
    fn dealloc(&mut self, env: &Env, d: &AllocDesc, y: &LValue, span: Span) -> Result<Vec<i64>> {
        let target = self.lvalue_addr(env, y)?;
        let p = self.read(target, span)?;
        if p == 0 {
            return Err(rt(
                RuntimeErrorKind::NilDereference,
                span,
                format!("deleting nil `{}`", y.var.name),
            ));
        }
        let (payload, words, kind) = match d {
            AllocDesc::Class(c) => {
                let info = self
                    .classes
                    .get(&c.name)
                    .ok_or_else(|| rt(RuntimeErrorKind::BadObject, span, format!("no class `{}`", c.name)))?;
                let id = self.read(p, span)?;
                if id != info.id {
                    let actual = self.classes.by_id(id).map_or("?", |c| c.name.as_str());
                    return Err(rt(
                        RuntimeErrorKind::DeleteClassMismatch,
                        span,
                        format!("`{}` holds a `{actual}`, not a `{}`", y.var.name, c.name),
                    ));
                }
                (
                    info.layout.payload_words,
                    info.layout.alloc_words,
                    RuntimeErrorKind::NonZeroFieldsOnDelete,
                )
            }
            AllocDesc::ClassArray(_, e) | AllocDesc::IntArray(e) => {
                let n = self.eval(env, e)?;
                let stored = self.read(p, span)?;
                if n != stored {
                    return Err(rt(
                        RuntimeErrorKind::ArrayLengthMismatch,
                        span,
                        format!("`{}` has length {stored}, delete names {n}", y.var.name),
                    ));
                }
                (n as usize, n as usize + 2, RuntimeErrorKind::NonZeroCellsOnDelete)
            }
        };
        let rc = self.read(p + 1, span)?;
        if rc != 1 {
            return Err(rt(
                RuntimeErrorKind::DanglingReferenceOnDelete,
                span,
                format!("`{}` has {rc} references", y.var.name),
            ));
        }
        for k in 0..payload as i64 {
            if self.read(p + 2 + k, span)? != 0 {
                let what = if kind == RuntimeErrorKind::NonZeroFieldsOnDelete {
                    "field"
                } else {
                    "cell"
                };
                return Err(rt(kind, span, format!("{what} {k} of `{}` is not zero", y.var.name)));
            }
        }
        self.write(p, 0, span)?;
        self.write(p + 1, 0, span)?;
        self.mem.free(p as usize, words).map_err(|e| heap_err(e, span))?;
        self.write(target, 0, span)?;
        Ok(vec![target, p])
    }

    /// Counts references reachable from the object at `root` by following
    /// typed fields and array cells. Returns `(address, stored refcount,
    /// counted references)` for every reached object and array except `root`.
    pub fn reference_census(&self, root: i64) -> std::result::Result<Vec<(i64, i64, usize)>, String> {
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        let mut seen = HashSet::new();
        let mut work = vec![(root, None::<TypeName>)];
        seen.insert(root);
        let read = |a: i64| self.mem.read_word(a).map_err(|e| e.to_string());
        while let Some((addr, array_ty)) = work.pop() {
            let mut refs: Vec<(i64, TypeName)> = Vec::new();
            match array_ty {
                None => {
                    let class = self
                        .classes
                        .by_id(read(addr)?)
                        .ok_or_else(|| format!("no class id at {addr}"))?;
                    for (t, n) in &class.fields {
                        if *t != TypeName::Integer {
                            let v = read(addr + class.layout.field_offsets[n] as i64)?;
                            refs.push((v, t.clone()));
                        }
                    }
                }
                Some(TypeName::ClassArray(c)) => {
                    let n = read(addr)?;
                    for k in 0..n {
                        refs.push((read(addr + 2 + k)?, TypeName::ClassRef(c.clone())));
                    }
                }
                Some(_) => {}
            }
            for (v, t) in refs {
                if v == 0 {
                    continue;
                }
                *counts.entry(v).or_default() += 1;
                if seen.insert(v) {
                    let next = if t.is_array() { Some(t) } else { None };
                    work.push((v, next));
                }
            }
        }
        counts.into_iter().map(|(a, n)| Ok((a, read(a + 1)?, n))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::build_class_map;
    use crate::inverter::invert_stmt;

    fn program(src: &str) -> (Program, ClassMap) {
        let p = parse(src).unwrap();
        let m = build_class_map(&p).unwrap();
        (p, m)
    }

    fn run(src: &str) -> std::result::Result<Vec<(String, i64)>, RuntimeErrorKind> {
        let (_, m) = program(src);
        let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
        machine
            .run_main("M", Direction::Forward)
            .map(|o| o.fields)
            .map_err(|e| e.kind)
    }

    fn fields(pairs: &[(&str, i64)]) -> Vec<(String, i64)> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn binop_table() {
        let w = WordWidth::W32;
        assert_eq!(apply_binop(w, BinOp::Add, 2, 3), Ok(5));
        assert_eq!(apply_binop(w, BinOp::Lt, 1, 2), Ok(1));
        assert_eq!(apply_binop(w, BinOp::And, 0, 5), Ok(0));
        assert_eq!(apply_binop(w, BinOp::Or, 0, 5), Ok(1));
        for (op, a, b, want) in [
            (BinOp::Le, 2, 2, 1),
            (BinOp::Ge, 1, 2, 0),
            (BinOp::Eq, 3, 3, 1),
            (BinOp::Ne, 3, 3, 0),
            (BinOp::Gt, 3, 2, 1),
        ] {
            assert_eq!(apply_binop(w, op, a, b), Ok(want), "{op:?}");
        }
        assert_eq!(apply_binop(w, BinOp::Div, -7, 2), Ok(-3));
        assert_eq!(apply_binop(w, BinOp::Mod, -7, 2), Ok(-1));
        assert_eq!(apply_binop(w, BinOp::Mod, 7, -2), Ok(1));
        assert_eq!(apply_binop(w, BinOp::Div, 1, 0), Err(RuntimeErrorKind::DivisionByZero));
        assert_eq!(apply_binop(w, BinOp::Add, i32::MAX as i64, 1), Ok(i32::MIN as i64));
        assert_eq!(apply_binop(WordWidth::W16, BinOp::Mul, 300, 300), Ok(90000 - 65536));
    }

    #[test]
    fn assignment_and_inverse() {
        let (_, m) = program("class M int x method main() skip");
        let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
        let obj = machine.alloc_main(m.get("M").unwrap()).unwrap();
        let s = parse_stmt("x += 5").unwrap();
        machine.exec_in_object(obj, &s, Direction::Forward).unwrap();
        assert_eq!(machine.mem.read_word(obj + 2), Ok(5));
        machine.exec_in_object(obj, &s, Direction::Backward).unwrap();
        assert_eq!(machine.mem.read_word(obj + 2), Ok(0));
    }

    #[test]
    fn array_element_read() {
        let (_, m) = program("class M int[] xs int r method main() skip");
        let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
        let obj = machine.alloc_main(m.get("M").unwrap()).unwrap();
        let setup = parse_stmt("new int[3] xs xs[0] += 5 xs[1] += 6 xs[2] += 9").unwrap();
        machine.exec_in_object(obj, &setup, Direction::Forward).unwrap();
        let class = m.get("M").unwrap();
        let env = machine.object_env(class, obj);
        // Independent walk: xs slot -> array header -> cell 2.
        let arr = machine.mem.read_word(obj + 2).unwrap();
        assert_eq!(machine.mem.read_word(arr), Ok(3));
        assert_eq!(machine.mem.read_word(arr + 4), Ok(9));
        let before = machine.mem.clone();
        assert_eq!(machine.eval(&env, &parse_expr("xs[2]").unwrap()), Ok(9));
        assert_eq!(machine.eval(&env, &parse_expr("nil").unwrap()), Ok(0));
        assert_eq!(machine.mem, before);
        assert_eq!(
            machine.eval(&env, &parse_expr("xs[3]").unwrap()).unwrap_err().kind,
            RuntimeErrorKind::IndexOutOfBounds
        );
    }

    #[test]
    fn trivial_program_leaves_heap_alone() {
        let (_, m) = program("class M int a int b method main() skip");
        let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
        let init = machine.mem.snapshot_free_lists().unwrap();
        let out = machine.run_main("M", Direction::Forward).unwrap();
        assert_eq!(out.fields, fields(&[("a", 0), ("b", 0)]));
        assert_eq!(machine.mem.snapshot_free_lists().unwrap(), init);
    }

    #[test]
    fn call_by_reference_and_uncall() {
        let src = "class M int r method add(int a) a += 3 method main() local int t = 0 call add(t) call add(t) r += t uncall add(t) uncall add(t) delocal int t = 0";
        assert_eq!(run(src), Ok(fields(&[("r", 6)])));
    }

    #[test]
    fn dynamic_dispatch_uses_runtime_class() {
        let src = "class B int v method m() v += 1 method get(int out) out += v
                   class D inherits B method m() v += 10
                   class M int r method main()
                       local B b = nil
                       new D b
                       call b::m()
                       call b::get(r)
                       uncall b::m()
                       delete B b
                       delocal B b = nil";
        // Deleting through the base type is rejected: the delete site names B.
        assert_eq!(run(src), Err(RuntimeErrorKind::DeleteClassMismatch));
        let ok = src.replace("delete B b", "local D d = nil d <=> b delete D d delocal D d = nil");
        let ok = ok.replace(
            "local B b = nil\n                       new D b",
            "local B b = nil local D d = nil new D d d <=> b delocal D d = nil",
        );
        assert_eq!(run(&ok), Ok(fields(&[("r", 10)])));
    }

    #[test]
    fn object_block_matches_its_expansion() {
        let sugar = "class C int v method m(int k) v += k
                     class M int k int out method main() k += 4
                       construct C c call c::m(k) uncall c::m(k) destruct c";
        let expanded = "class C int v method m(int k) v += k
                     class M int k int out method main() k += 4
                       local C c = nil new C c call c::m(k) uncall c::m(k) delete C c delocal C c = nil";
        let run_both = |src: &str| {
            let (_, m) = program(src);
            let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
            let out = machine.run_main("M", Direction::Forward).unwrap();
            (out.fields, machine.mem)
        };
        assert_eq!(run_both(sugar), run_both(expanded));
    }

    #[test]
    fn if_assertion_failure() {
        let src = "class M int x method main() if x = 0 then x += 1 else skip fi x = 0";
        assert_eq!(run(src), Err(RuntimeErrorKind::AssertionFailedIf));
    }

    #[test]
    fn loop_counts() {
        let src = "class M int i int s method main() from i = 0 do i += 1 s += i loop skip until i = 4";
        assert_eq!(run(src), Ok(fields(&[("i", 4), ("s", 10)])));
    }

    #[test]
    fn dangling_reference_on_delete() {
        let src = "class C method m() skip
                   class M C a C b method main() new C a copy C a b delete C a";
        assert_eq!(run(src), Err(RuntimeErrorKind::DanglingReferenceOnDelete));
    }

    #[test]
    fn swap_keeps_declared_classes() {
        let classes = "class A int v method m() skip
                       class B inherits A method m() skip
                       class M A[] arr B b int r
                           method put(A x) x <=> arr[0]";
        let via_cell = format!("{classes} method main() new A[1] arr new A arr[0] b <=> arr[0]");
        assert_eq!(run(&via_cell), Err(RuntimeErrorKind::SwapTypeMismatch));
        let via_param =
            format!("{classes} method main() new A[1] arr new A arr[0] local B t = nil call put(t) delocal B t = nil");
        assert_eq!(run(&via_param), Err(RuntimeErrorKind::SwapTypeMismatch));
        let fine = format!("{classes} method main() new A[1] arr new B arr[0] b <=> arr[0] r += 1");
        assert_eq!(run(&fine).map(|f| f[2].1), Ok(1));
    }

    #[test]
    fn step_limit() {
        let (_, m) = program("class M int i method main() from i = 0 do i += 1 loop skip until i = 100");
        let cfg = MachineConfig {
            step_limit: 50,
            ..MachineConfig::default()
        };
        let mut machine = Machine::new(&m, cfg).unwrap();
        let e = machine.run_main("M", Direction::Forward).unwrap_err();
        assert_eq!(e.kind, RuntimeErrorKind::StepLimitExceeded);
    }

    #[test]
    fn backward_equals_inverse_forward() {
        let (_, m) =
            program("class C int v method m(int k) v += k class M int a int b C c int[] xs method main() skip");
        let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
        let obj = machine.alloc_main(m.get("M").unwrap()).unwrap();
        let setup = parse_stmt("a += 3 new C c new int[2] xs").unwrap();
        machine.exec_in_object(obj, &setup, Direction::Forward).unwrap();
        let s = parse_stmt(
            "b += a * 2 call c::m(a) if b > 4 then xs[1] ^= b else skip fi xs[1] != 0 a <=> b
             local int t = a t += 1 b += t t -= 1 delocal int t = a",
        )
        .unwrap();
        let mut back = Machine::with_memory(&m, machine.mem.clone(), MachineConfig::default());
        let mut inv = Machine::with_memory(&m, machine.mem.clone(), MachineConfig::default());
        back.exec_in_object(obj, &s, Direction::Backward).unwrap();
        inv.exec_in_object(obj, &invert_stmt(&s), Direction::Forward).unwrap();
        assert_eq!(back.mem, inv.mem);
        let start = machine.mem.clone();
        machine.exec_in_object(obj, &s, Direction::Forward).unwrap();
        machine
            .exec_in_object(obj, &invert_stmt(&s), Direction::Forward)
            .unwrap();
        assert_eq!(machine.mem, start);
    }

    #[test]
    fn trace_records() {
        let (_, m) = program("class M int x method main() x += 1 skip");
        let mut records = Vec::new();
        {
            let mut machine = Machine::new(&m, MachineConfig::default()).unwrap();
            machine.set_trace(|r| records.push(r.clone()));
            machine.run_main("M", Direction::Forward).unwrap();
        }
        let rules: Vec<&str> = records.iter().map(|r| r.rule).collect();
        assert_eq!(rules, vec!["AssVar", "Skip"]);
        assert_eq!(records[0].touched.len(), 1);
    }
}
