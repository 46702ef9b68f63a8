//! Random program generators for property tests.
//!
//! [`arbitrary_stmt`] builds syntactically valid but untyped statements.
//! [`WellTyped`] builds statements that type-check against [`FIXTURE`] and
//! run without runtime errors from the state left by its setup code.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rooplpp::syntax::*;
use rooplpp::{invert_stmt, Direction, Machine, MachineConfig};

pub mod oracles;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- untyped ASTs ----------------------------------------------------

const NAMES: &[&str] = &["a", "b", "x", "y", "node", "self", "t1", "count"];
const CLASSES: &[&str] = &["C", "Node", "Cell"];

fn name(r: &mut impl Rng) -> String {
    NAMES.choose(r).unwrap().to_string()
}

fn ident(r: &mut impl Rng) -> Ident {
    Ident::new(name(r))
}

fn class_ident(r: &mut impl Rng) -> Ident {
    Ident::new(*CLASSES.choose(r).unwrap())
}

pub fn arbitrary_expr(r: &mut impl Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || r.gen_bool(0.3);
    if leaf {
        return match r.gen_range(0..4) {
            0 => Expr::constant(r.gen_range(0..1000)),
            1 => Expr::new(ExprKind::Nil),
            2 => Expr::new(ExprKind::ArrayElement(name(r), Box::new(arbitrary_expr(r, 0)))),
            _ => Expr::var(name(r)),
        };
    }
    let op = *BinOp::ALL.choose(r).unwrap();
    Expr::binary(op, arbitrary_expr(r, depth - 1), arbitrary_expr(r, depth - 1))
}

fn arbitrary_lvalue(r: &mut impl Rng) -> LValue {
    if r.gen_bool(0.3) {
        LValue::cell(name(r), arbitrary_expr(r, 1))
    } else {
        LValue::var(name(r))
    }
}

fn arbitrary_desc(r: &mut impl Rng) -> AllocDesc {
    match r.gen_range(0..3) {
        0 => AllocDesc::Class(class_ident(r)),
        1 => AllocDesc::ClassArray(class_ident(r), Box::new(arbitrary_expr(r, 1))),
        _ => AllocDesc::IntArray(Box::new(arbitrary_expr(r, 1))),
    }
}

fn arbitrary_type(r: &mut impl Rng) -> TypeName {
    match r.gen_range(0..4) {
        0 => TypeName::Integer,
        1 => TypeName::ClassRef(class_ident(r).name),
        2 => TypeName::IntegerArray,
        _ => TypeName::ClassArray(class_ident(r).name),
    }
}

fn args(r: &mut impl Rng) -> Vec<Ident> {
    (0..r.gen_range(0..3)).map(|_| ident(r)).collect()
}

/// A random statement that is not a sequence.
fn arbitrary_single(r: &mut impl Rng, depth: u32) -> Stmt {
    let compound = depth > 0 && r.gen_bool(0.4);
    let kind = if compound {
        match r.gen_range(0..5) {
            0 => StmtKind::If {
                cond: arbitrary_expr(r, 2),
                then_branch: Box::new(arbitrary_stmt(r, depth - 1)),
                else_branch: Box::new(arbitrary_stmt(r, depth - 1)),
                assertion: arbitrary_expr(r, 2),
            },
            1 => StmtKind::Loop {
                entry: arbitrary_expr(r, 2),
                body: Box::new(arbitrary_stmt(r, depth - 1)),
                step: Box::new(arbitrary_stmt(r, depth - 1)),
                exit: arbitrary_expr(r, 2),
            },
            2 => StmtKind::ObjectBlock {
                class: class_ident(r),
                var: ident(r),
                body: Box::new(arbitrary_stmt(r, depth - 1)),
            },
            3 => {
                let ty = arbitrary_type(r);
                StmtKind::LocalBlock {
                    ty,
                    var: ident(r),
                    init: arbitrary_expr(r, 2),
                    body: Box::new(arbitrary_stmt(r, depth - 1)),
                    fin: arbitrary_expr(r, 2),
                }
            }
            _ => return Stmt::seq(vec![arbitrary_single(r, depth - 1), arbitrary_single(r, depth - 1)]),
        }
    } else {
        match r.gen_range(0..13) {
            0 => StmtKind::Skip,
            1 | 2 => {
                let op = *[ModOp::Add, ModOp::Sub, ModOp::Xor].choose(r).unwrap();
                StmtKind::Assign(arbitrary_lvalue(r), op, arbitrary_expr(r, 3))
            }
            3 => StmtKind::Swap(arbitrary_lvalue(r), arbitrary_lvalue(r)),
            4 => StmtKind::New(arbitrary_desc(r), arbitrary_lvalue(r)),
            5 => StmtKind::Delete(arbitrary_desc(r), arbitrary_lvalue(r)),
            6 => StmtKind::Copy(arbitrary_desc(r), arbitrary_lvalue(r), arbitrary_lvalue(r)),
            7 => StmtKind::Uncopy(arbitrary_desc(r), arbitrary_lvalue(r), arbitrary_lvalue(r)),
            8 => StmtKind::Call(ident(r), args(r)),
            9 => StmtKind::Uncall(ident(r), args(r)),
            10 => StmtKind::CallObject(arbitrary_lvalue(r), ident(r), args(r)),
            11 => StmtKind::UncallObject(arbitrary_lvalue(r), ident(r), args(r)),
            _ => StmtKind::Skip,
        }
    };
    Stmt::new(kind)
}

/// A random statement, possibly a flat sequence of several.
pub fn arbitrary_stmt(r: &mut impl Rng, depth: u32) -> Stmt {
    let n = if r.gen_bool(0.4) { r.gen_range(2..5) } else { 1 };
    Stmt::seq((0..n).map(|_| arbitrary_single(r, depth)).collect())
}

pub fn arbitrary_program(r: &mut impl Rng) -> Program {
    let classes = (0..r.gen_range(1..4))
        .map(|i| ClassDecl {
            name: Ident::new(format!("K{i}")),
            parent: (i > 0 && r.gen_bool(0.5)).then(|| Ident::new(format!("K{}", i - 1))),
            fields: (0..r.gen_range(0..3))
                .map(|_| VarDecl {
                    ty: arbitrary_type(r),
                    name: ident(r),
                })
                .collect(),
            methods: (0..r.gen_range(1..3))
                .map(|_| MethodDecl {
                    name: ident(r),
                    params: (0..r.gen_range(0..3))
                        .map(|_| VarDecl {
                            ty: arbitrary_type(r),
                            name: ident(r),
                        })
                        .collect(),
                    body: arbitrary_stmt(r, 2),
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        })
        .collect();
    Program { classes }
}

// ---- well-typed statements -------------------------------------------

/// Classes every well-typed statement is generated against. `M` holds the
/// state; its `main` is replaced by the generated code.
pub const FIXTURE: &str = "
class A
    int v
    int w

    method inc(int k)
        v += k

    method mix(int k, int m)
        w += k * m + v

    method pump(int k)
        k += v + 1

class B inherits A
    int u

    method inc(int k)
        v += k + 1
        u ^= k

    method pump(int k)
        k -= w
        u <=> v

class M
    int a
    int b
    int c
    int[] xs
    A o1
    A o2
    A[] objs

    method bump(int k)
        k += 2
";

/// Program text with `main` running `body`.
pub fn fixture_with_main(body: &str) -> String {
    let mut out = String::from(FIXTURE);
    out.push_str("\n    method main()\n");
    for line in body.lines() {
        out.push_str("        ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[derive(Clone)]
struct Scope {
    /// Readable int variables.
    ints: Vec<String>,
    /// Int variables that may be modified.
    writable: Vec<String>,
    /// Int arrays of length 4 and whether their cells may be modified.
    arrays: Vec<(String, bool)>,
    /// Object variables that may receive calls.
    objects: Vec<String>,
    /// Object variables that may be swapped with each other.
    swappable: Vec<String>,
}

impl Scope {
    fn root() -> Scope {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Scope {
            ints: s(&["a", "b", "c"]),
            writable: s(&["a", "b", "c"]),
            arrays: vec![("xs".into(), true)],
            objects: s(&["o1", "o2"]),
            swappable: s(&["o1", "o2"]),
        }
    }

    /// Freezes everything read by a guard so the guarded code cannot change it.
    fn freeze(&self, reads: &[String]) -> Scope {
        let mut s = self.clone();
        s.writable.retain(|x| !reads.contains(x));
        for (a, w) in &mut s.arrays {
            if reads.contains(a) {
                *w = false;
            }
        }
        s
    }
}

pub struct WellTyped<R: Rng> {
    rng: R,
    fresh: usize,
}

impl<R: Rng> WellTyped<R> {
    pub fn new(rng: R) -> Self {
        WellTyped { rng, fresh: 0 }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// Setup code run before a generated statement: allocates `xs`, the
    /// objects and the object array, and fills in some values.
    pub fn setup(&mut self) -> String {
        let r = &mut self.rng;
        let mut lines = vec!["new int[4] xs".to_string()];
        for i in 0..4 {
            lines.push(format!("xs[{i}] += {}", r.gen_range(0..20)));
        }
        for v in ["a", "b", "c"] {
            lines.push(format!("{v} += {}", r.gen_range(0..50)));
        }
        let class = |r: &mut R| if r.gen_bool(0.5) { "A" } else { "B" };
        // `new` into a plain variable needs the exact class, so subclass
        // instances reach `o1` and `o2` through a covariant array cell.
        lines.push("new A[2] objs".into());
        for o in ["o1", "o2"] {
            lines.push(format!("new {} objs[0]", class(r)));
            lines.push(format!("objs[0] <=> {o}"));
        }
        lines.push(format!("new {} objs[0]", class(r)));
        lines.push(format!("new {} objs[1]", class(r)));
        lines.join("\n")
    }

    /// Picks up to `n` readable ints, possibly including array cells.
    fn int_expr(&mut self, scope: &Scope, depth: u32, reads: &mut Vec<String>, exclude: &[String]) -> String {
        let r = &mut self.rng;
        let vars: Vec<&String> = scope.ints.iter().filter(|v| !exclude.contains(v)).collect();
        let arrays: Vec<&String> = scope
            .arrays
            .iter()
            .map(|(a, _)| a)
            .filter(|a| !exclude.contains(a))
            .collect();
        if depth == 0 || r.gen_bool(0.35) {
            let pick = r.gen_range(0..3);
            if pick == 0 || (vars.is_empty() && arrays.is_empty()) {
                return r.gen_range(0..10).to_string();
            }
            if pick == 1 && !arrays.is_empty() {
                let a = arrays.choose(r).unwrap().to_string();
                let i = r.gen_range(0..4);
                reads.push(a.clone());
                return format!("{a}[{i}]");
            }
            if let Some(v) = vars.choose(r) {
                let v = v.to_string();
                reads.push(v.clone());
                return v;
            }
            return r.gen_range(0..10).to_string();
        }
        let ops = [
            "+", "-", "^", "*", "&", "|", "<", ">", "=", "!=", "<=", ">=", "&&", "||", "/", "%",
        ];
        let op = *ops.choose(&mut self.rng).unwrap();
        let l = self.int_expr(scope, depth - 1, reads, exclude);
        if op == "/" || op == "%" {
            let d = self.rng.gen_range(1..7);
            return format!("({l}) {op} {d}");
        }
        let rhs = self.int_expr(scope, depth - 1, reads, exclude);
        format!("({l}) {op} ({rhs})")
    }

    /// An index into a length-4 array: always in bounds.
    fn index(&mut self, scope: &Scope, reads: &mut Vec<String>, exclude: &[String]) -> String {
        if self.rng.gen_bool(0.5) {
            return self.rng.gen_range(0..4).to_string();
        }
        let e = self.int_expr(scope, 1, reads, exclude);
        format!("({e}) & 3")
    }

    fn obj_target(&mut self, scope: &Scope, reads: &mut Vec<String>) -> Option<String> {
        if self.rng.gen_bool(0.2) {
            let e = self.int_expr(scope, 1, reads, &[]);
            return Some(format!("objs[({e}) & 1]"));
        }
        scope.objects.choose(&mut self.rng).cloned()
    }

    fn distinct_writable(&mut self, scope: &Scope, n: usize) -> Option<Vec<String>> {
        let mut pool = scope.writable.clone();
        pool.shuffle(&mut self.rng);
        (pool.len() >= n).then(|| pool[..n].to_vec())
    }

    fn distinct_ints(&mut self, scope: &Scope, n: usize) -> Option<Vec<String>> {
        let mut pool = scope.ints.clone();
        pool.shuffle(&mut self.rng);
        (pool.len() >= n).then(|| pool[..n].to_vec())
    }

    fn simple(&mut self, scope: &Scope) -> String {
        let choice = self.rng.gen_range(0..10);
        match choice {
            0 => "skip".into(),
            1..=3 => {
                let op = *["+=", "-=", "^="].choose(&mut self.rng).unwrap();
                let cells: Vec<String> = scope
                    .arrays
                    .iter()
                    .filter(|(_, w)| *w)
                    .map(|(a, _)| a.clone())
                    .collect();
                if !cells.is_empty() && self.rng.gen_bool(0.3) {
                    let a = cells.choose(&mut self.rng).unwrap().clone();
                    let mut ex = vec![a.clone()];
                    let i = self.index(scope, &mut ex, std::slice::from_ref(&a));
                    let e = self.int_expr(scope, 2, &mut vec![], &ex);
                    return format!("{a}[{i}] {op} {e}");
                }
                match scope.writable.choose(&mut self.rng).cloned() {
                    Some(y) => {
                        let e = self.int_expr(scope, 2, &mut vec![], std::slice::from_ref(&y));
                        format!("{y} {op} {e}")
                    }
                    None => "skip".into(),
                }
            }
            4 => {
                let cells: Vec<String> = scope
                    .arrays
                    .iter()
                    .filter(|(_, w)| *w)
                    .map(|(a, _)| a.clone())
                    .collect();
                if !cells.is_empty() && self.rng.gen_bool(0.5) {
                    let a = cells.choose(&mut self.rng).unwrap().clone();
                    match scope.writable.choose(&mut self.rng).cloned() {
                        Some(y) => {
                            let i = self.index(scope, &mut vec![], &[a.clone(), y.clone()]);
                            format!("{a}[{i}] <=> {y}")
                        }
                        None => {
                            let i = self.rng.gen_range(0..4);
                            let j = self.rng.gen_range(0..4);
                            format!("{a}[{i}] <=> {a}[{j}]")
                        }
                    }
                } else {
                    match self.distinct_writable(scope, 2) {
                        Some(v) => format!("{} <=> {}", v[0], v[1]),
                        None => "skip".into(),
                    }
                }
            }
            5 => {
                let mut pool = scope.swappable.clone();
                pool.shuffle(&mut self.rng);
                if pool.len() >= 2 && self.rng.gen_bool(0.7) {
                    format!("{} <=> {}", pool[0], pool[1])
                } else if let Some(o) = pool.first() {
                    let i = self.rng.gen_range(0..2);
                    format!("objs[{i}] <=> {o}")
                } else {
                    "skip".into()
                }
            }
            6 | 7 => {
                let kw = if self.rng.gen_bool(0.5) { "call" } else { "uncall" };
                let Some(target) = self.obj_target(scope, &mut vec![]) else {
                    return "skip".into();
                };
                // Arguments may not occur in the target's index.
                let plain = scope.objects.contains(&target);
                let idx_free = |s: &Scope| -> Scope {
                    let mut s = s.clone();
                    if !plain {
                        s.ints.clear();
                        s.writable.clear();
                    }
                    s
                };
                let s = idx_free(scope);
                match self.rng.gen_range(0..3) {
                    0 => match self.distinct_ints(&s, 1) {
                        Some(v) => format!("{kw} {target}::inc({})", v[0]),
                        None => "skip".into(),
                    },
                    1 => match self.distinct_ints(&s, 2) {
                        Some(v) => format!("{kw} {target}::mix({}, {})", v[0], v[1]),
                        None => "skip".into(),
                    },
                    _ => match self.distinct_writable(&s, 1) {
                        Some(v) => format!("{kw} {target}::pump({})", v[0]),
                        None => "skip".into(),
                    },
                }
            }
            _ => "skip".into(),
        }
    }

    fn block(&mut self, scope: &Scope, depth: u32) -> String {
        let n = self.rng.gen_range(1..4);
        (0..n).map(|_| self.stmt(scope, depth)).collect::<Vec<_>>().join("\n")
    }

    fn inverse_text(body: &str) -> String {
        let s = parse_stmt(body).expect("generated statement parses");
        stmt_to_string(&invert_stmt(&s))
    }

    /// One generated statement in the given scope.
    fn stmt(&mut self, scope: &Scope, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.45) {
            return self.simple(scope);
        }
        match self.rng.gen_range(0..8) {
            0 | 1 => {
                let mut reads = vec![];
                let e = self.int_expr(scope, 2, &mut reads, &[]);
                let inner = scope.freeze(&reads);
                let t = self.block(&inner, depth - 1);
                let f = self.block(&inner, depth - 1);
                format!("if {e} then\n{t}\nelse\n{f}\nfi {e}")
            }
            2 => {
                let i = self.fresh("i");
                let n = self.rng.gen_range(1..4);
                let mut inner = scope.clone();
                inner.ints.push(i.clone());
                let body = self.block(&inner, depth - 1);
                let step = self.block(&inner, depth - 1);
                format!("local int {i} = 0\nfrom {i} = 0 do\n{body}\n{i} += 1\nloop\n{step}\nuntil {i} = {n}\ndelocal int {i} = {n}")
            }
            3 => {
                let t = self.fresh("t");
                let mut reads = vec![];
                let e = self.int_expr(scope, 2, &mut reads, &[]);
                let mut inner = scope.freeze(&reads);
                inner.ints.push(t.clone());
                let body = self.block(&inner, depth - 1);
                format!("local int {t} = {e}\n{body}\ndelocal int {t} = {e}")
            }
            4 => {
                // Scoped object: s; I(s) leaves its fields zero again.
                let t = self.fresh("p");
                let class = if self.rng.gen_bool(0.5) { "A" } else { "B" };
                let mut inner = scope.clone();
                inner.objects.push(t.clone());
                let body = self.block(&inner, depth - 1);
                let inv = Self::inverse_text(&body);
                format!("local {class} {t} = nil\nnew {class} {t}\n{body}\n{inv}delete {class} {t}\ndelocal {class} {t} = nil")
            }
            5 => {
                let t = self.fresh("arr");
                let mut inner = scope.clone();
                inner.arrays.push((t.clone(), true));
                let body = self.block(&inner, depth - 1);
                let inv = Self::inverse_text(&body);
                format!(
                    "local int[] {t} = nil\nnew int[4] {t}\n{body}\n{inv}delete int[4] {t}\ndelocal int[] {t} = nil"
                )
            }
            6 => {
                let Some(src) = scope.swappable.choose(&mut self.rng).cloned() else {
                    return self.simple(scope);
                };
                let t = self.fresh("alias");
                let mut inner = scope.clone();
                inner.swappable.retain(|o| *o != src);
                inner.objects.push(t.clone());
                let body = self.block(&inner, depth - 1);
                format!("local A {t} = nil\ncopy A {src} {t}\n{body}\nuncopy A {src} {t}\ndelocal A {t} = nil")
            }
            _ => {
                let t = self.fresh("k");
                let mut inner = scope.clone();
                inner.ints.push(t.clone());
                let body = self.block(&inner, depth - 1);
                format!("local int {t} = 0\ncall bump({t})\n{body}\nuncall bump({t})\ndelocal int {t} = 0")
            }
        }
    }

    /// A statement sequence over the fixture's main-class fields.
    pub fn statement(&mut self, depth: u32) -> String {
        self.block(&Scope::root(), depth)
    }
}

/// Machine with the fixture's main object allocated and `setup` executed.
/// Returns the machine and the main object's address.
pub fn prepared_machine<'c>(classes: &'c rooplpp::ClassMap, setup: &str) -> (Machine<'c>, i64) {
    let mut m = Machine::new(classes, MachineConfig::default()).expect("heap config");
    let main = classes.get("M").expect("fixture main class");
    let obj = m.alloc_main(main).expect("main object");
    let s = parse_stmt(setup).expect("setup parses");
    m.exec_in_object(obj, &s, Direction::Forward).expect("setup runs");
    (m, obj)
}
