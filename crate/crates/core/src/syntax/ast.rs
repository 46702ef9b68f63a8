use std::fmt;

/// A source position, 1-based line and column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

/// Source range attached to every node.
///
/// Spans never participate in AST equality, so a re-parsed or transformed
/// tree compares equal to the original regardless of where its text sits.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start, other.end)
    }

    /// True if the span is ordered and lies within the first `lines` lines.
    pub fn is_within(&self, lines: u32) -> bool {
        self.start.line >= 1
            && self.start.line <= lines
            && self.end.line <= lines
            && (self.start.line, self.start.col) <= (self.end.line, self.end.col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.line, self.start.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeName {
    Integer,
    ClassRef(String),
    IntegerArray,
    ClassArray(String),
}

impl TypeName {
    pub fn is_array(&self) -> bool {
        matches!(self, TypeName::IntegerArray | TypeName::ClassArray(_))
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            TypeName::ClassRef(c) | TypeName::ClassArray(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Integer => f.write_str("int"),
            TypeName::ClassRef(c) => f.write_str(c),
            TypeName::IntegerArray => f.write_str("int[]"),
            TypeName::ClassArray(c) => write!(f, "{c}[]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: Ident,
    pub parent: Option<Ident>,
    pub fields: Vec<VarDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub ty: TypeName,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: Ident,
    pub params: Vec<VarDecl>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Xor,
    Mul,
    Div,
    Mod,
    BitAnd,
    BitOr,
    And,
    Or,
    Lt,
    Gt,
    Eq,
    Ne,
    Le,
    Ge,
}

impl BinOp {
    pub const ALL: [BinOp; 16] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Xor,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::And,
        BinOp::Or,
        BinOp::Lt,
        BinOp::Gt,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Le,
        BinOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Xor => "^",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::BitOr => 3,
            BinOp::BitAnd => 4,
            BinOp::Lt | BinOp::Gt | BinOp::Eq | BinOp::Ne | BinOp::Le | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub | BinOp::Xor => 6,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 7,
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Constant(i64),
    Variable(String),
    ArrayElement(String, Box<Expr>),
    Nil,
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn constant(n: i64) -> Self {
        Expr::new(ExprKind::Constant(n))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::Variable(name.into()))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)))
    }
}

/// Assignment target: `x` or `x[e]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    pub var: Ident,
    pub index: Option<Box<Expr>>,
    pub span: Span,
}

impl LValue {
    pub fn var(name: impl Into<String>) -> Self {
        LValue {
            var: Ident::new(name),
            index: None,
            span: Span::default(),
        }
    }

    pub fn cell(name: impl Into<String>, index: Expr) -> Self {
        LValue {
            var: Ident::new(name),
            index: Some(Box::new(index)),
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModOp {
    Add,
    Sub,
    Xor,
}

impl ModOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ModOp::Add => "+=",
            ModOp::Sub => "-=",
            ModOp::Xor => "^=",
        }
    }

    pub fn inverse(self) -> ModOp {
        match self {
            ModOp::Add => ModOp::Sub,
            ModOp::Sub => ModOp::Add,
            ModOp::Xor => ModOp::Xor,
        }
    }
}

/// Allocation descriptor `c`, `c[e]` or `int[e]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AllocDesc {
    Class(Ident),
    ClassArray(Ident, Box<Expr>),
    IntArray(Box<Expr>),
}

impl AllocDesc {
    /// The variable type this descriptor allocates.
    pub fn type_name(&self) -> TypeName {
        match self {
            AllocDesc::Class(c) => TypeName::ClassRef(c.name.clone()),
            AllocDesc::ClassArray(c, _) => TypeName::ClassArray(c.name.clone()),
            AllocDesc::IntArray(_) => TypeName::IntegerArray,
        }
    }

    pub fn length(&self) -> Option<&Expr> {
        match self {
            AllocDesc::Class(_) => None,
            AllocDesc::ClassArray(_, e) | AllocDesc::IntArray(e) => Some(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign(LValue, ModOp, Expr),
    Swap(LValue, LValue),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
        assertion: Expr,
    },
    Loop {
        entry: Expr,
        body: Box<Stmt>,
        step: Box<Stmt>,
        exit: Expr,
    },
    ObjectBlock {
        class: Ident,
        var: Ident,
        body: Box<Stmt>,
    },
    LocalBlock {
        ty: TypeName,
        var: Ident,
        init: Expr,
        body: Box<Stmt>,
        fin: Expr,
    },
    New(AllocDesc, LValue),
    Delete(AllocDesc, LValue),
    Copy(AllocDesc, LValue, LValue),
    Uncopy(AllocDesc, LValue, LValue),
    Call(Ident, Vec<Ident>),
    Uncall(Ident, Vec<Ident>),
    CallObject(LValue, Ident, Vec<Ident>),
    UncallObject(LValue, Ident, Vec<Ident>),
    Skip,
    Sequence(Vec<Stmt>),
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            span: Span::default(),
        }
    }

    pub fn skip() -> Self {
        Stmt::new(StmtKind::Skip)
    }

    /// Builds a flattened sequence; a single statement stays unwrapped.
    pub fn seq(stmts: Vec<Stmt>) -> Self {
        let mut flat = Vec::with_capacity(stmts.len());
        for s in stmts {
            match s.kind {
                StmtKind::Sequence(inner) => flat.extend(inner),
                _ => flat.push(s),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            let span = match (flat.first(), flat.last()) {
                (Some(a), Some(b)) => a.span.to(b.span),
                _ => Span::default(),
            };
            Stmt {
                kind: StmtKind::Sequence(flat),
                span,
            }
        }
    }

    /// The statements of a sequence, or the statement itself.
    pub fn as_slice(&self) -> &[Stmt] {
        match &self.kind {
            StmtKind::Sequence(v) => v,
            _ => std::slice::from_ref(self),
        }
    }
}
