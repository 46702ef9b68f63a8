//! Class map construction: inheritance, overriding, subtyping and layout.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::syntax::{MethodDecl, Program, Span, TypeName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassErrorKind {
    Cycle,
    UnknownParent,
    DuplicateClass,
    DuplicateMethod,
    DuplicateField,
    UnknownClass,
    IncompatibleOverride,
    NotAnArray,
}

impl ClassErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassErrorKind::Cycle => "CycleError",
            ClassErrorKind::UnknownParent => "UnknownParent",
            ClassErrorKind::DuplicateClass => "DuplicateClass",
            ClassErrorKind::DuplicateMethod => "DuplicateMethod",
            ClassErrorKind::DuplicateField => "DuplicateField",
            ClassErrorKind::UnknownClass => "UnknownClass",
            ClassErrorKind::IncompatibleOverride => "IncompatibleOverride",
            ClassErrorKind::NotAnArray => "NotAnArray",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassError {
    pub kind: ClassErrorKind,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for ClassError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind.name(), self.message)
    }
}

impl std::error::Error for ClassError {}

fn err(kind: ClassErrorKind, span: Span, message: String) -> ClassError {
    ClassError { kind, span, message }
}

/// A method as seen from some class: its body and the class that declared it.
#[derive(Debug, Clone)]
pub struct ResolvedMethod {
    pub owner: String,
    pub decl: Arc<MethodDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLayout {
    pub class_id: i64,
    pub field_offsets: HashMap<String, usize>,
    pub payload_words: usize,
    pub alloc_words: usize,
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub id: i64,
    pub name: String,
    pub parent: Option<String>,
    /// Own fields followed by inherited ones.
    pub fields: Vec<(TypeName, String)>,
    pub methods: BTreeMap<String, ResolvedMethod>,
    pub layout: ClassLayout,
    pub span: Span,
}

impl ClassInfo {
    pub fn field_type(&self, name: &str) -> Option<&TypeName> {
        self.fields.iter().find(|(_, f)| f == name).map(|(t, _)| t)
    }
}

#[derive(Debug, Clone)]
pub struct ClassMap {
    classes: Vec<ClassInfo>,
    by_name: HashMap<String, usize>,
}

impl ClassMap {
    pub fn get(&self, name: &str) -> Option<&ClassInfo> {
        self.by_name.get(name).map(|&i| &self.classes[i])
    }

    pub fn by_id(&self, id: i64) -> Option<&ClassInfo> {
        if id < 1 {
            return None;
        }
        self.classes.get(id as usize - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassInfo> {
        self.classes.iter()
    }

    fn lookup(&self, name: &str) -> Result<&ClassInfo, ClassError> {
        self.get(name).ok_or_else(|| {
            err(
                ClassErrorKind::UnknownClass,
                Span::default(),
                format!("unknown class `{name}`"),
            )
        })
    }

    /// Reflexive, transitive reachability along `inherits`.
    pub fn subtype_of(&self, c1: &str, c2: &str) -> Result<bool, ClassError> {
        self.lookup(c2)?;
        let mut cur = Some(self.lookup(c1)?);
        while let Some(c) = cur {
            if c.name == c2 {
                return Ok(true);
            }
            cur = c.parent.as_deref().and_then(|p| self.get(p));
        }
        Ok(false)
    }

    pub fn allocation_words(&self, class: &str) -> Result<usize, ClassError> {
        Ok(self.lookup(class)?.layout.alloc_words)
    }

    pub fn type_exists(&self, t: &TypeName) -> bool {
        t.class_name().is_none_or(|c| self.get(c).is_some())
    }
}

/// Element type of an array type.
pub fn array_type_of(t: &TypeName) -> Result<TypeName, ClassError> {
    match t {
        TypeName::IntegerArray => Ok(TypeName::Integer),
        TypeName::ClassArray(c) => Ok(TypeName::ClassRef(c.clone())),
        _ => Err(err(
            ClassErrorKind::NotAnArray,
            Span::default(),
            format!("`{t}` is not an array type"),
        )),
    }
}

pub fn build_class_map(program: &Program) -> Result<ClassMap, Vec<ClassError>> {
    let mut errors = Vec::new();
    let mut by_name = HashMap::new();
    for (i, c) in program.classes.iter().enumerate() {
        if by_name.insert(c.name.name.clone(), i).is_some() {
            errors.push(err(
                ClassErrorKind::DuplicateClass,
                c.name.span,
                format!("class `{}` is declared more than once", c.name.name),
            ));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    for c in &program.classes {
        let mut seen = HashSet::new();
        for m in &c.methods {
            if !seen.insert(&m.name.name) {
                errors.push(err(
                    ClassErrorKind::DuplicateMethod,
                    m.name.span,
                    format!("method `{}` declared twice in `{}`", m.name.name, c.name.name),
                ));
            }
        }
        let mut seen = HashSet::new();
        for f in &c.fields {
            if !seen.insert(&f.name.name) {
                errors.push(err(
                    ClassErrorKind::DuplicateField,
                    f.name.span,
                    format!("field `{}` declared twice in `{}`", f.name.name, c.name.name),
                ));
            }
        }
        if let Some(p) = &c.parent {
            if !by_name.contains_key(&p.name) {
                errors.push(err(
                    ClassErrorKind::UnknownParent,
                    p.span,
                    format!("`{}` inherits unknown class `{}`", c.name.name, p.name),
                ));
            }
        }
        let types = c.fields.iter().map(|f| (&f.ty, f.name.span)).chain(
            c.methods
                .iter()
                .flat_map(|m| m.params.iter().map(|p| (&p.ty, p.name.span))),
        );
        for (ty, span) in types {
            if let Some(name) = ty.class_name() {
                if !by_name.contains_key(name) {
                    errors.push(err(
                        ClassErrorKind::UnknownClass,
                        span,
                        format!("unknown class `{name}` in type `{ty}`"),
                    ));
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    // Ancestor chains, rejecting cycles.
    let mut chains: Vec<Vec<usize>> = Vec::with_capacity(program.classes.len());
    for (i, c) in program.classes.iter().enumerate() {
        let mut chain = vec![i];
        let mut cur = c.parent.as_ref().map(|p| by_name[&p.name]);
        while let Some(j) = cur {
            if chain.contains(&j) {
                errors.push(err(
                    ClassErrorKind::Cycle,
                    c.name.span,
                    format!("inheritance cycle through `{}`", c.name.name),
                ));
                break;
            }
            chain.push(j);
            cur = program.classes[j].parent.as_ref().map(|p| by_name[&p.name]);
        }
        chains.push(chain);
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let mut classes = Vec::with_capacity(program.classes.len());
    for (i, c) in program.classes.iter().enumerate() {
        let chain = &chains[i];
        let mut fields: Vec<(TypeName, String)> = Vec::new();
        for &j in chain {
            for f in &program.classes[j].fields {
                if fields.iter().any(|(_, n)| *n == f.name.name) {
                    errors.push(err(
                        ClassErrorKind::DuplicateField,
                        c.name.span,
                        format!(
                            "field `{}` of `{}` shadows an inherited field",
                            f.name.name, program.classes[chain[0]].name.name
                        ),
                    ));
                } else {
                    fields.push((f.ty.clone(), f.name.name.clone()));
                }
            }
        }
        // Base classes first so that derived methods replace them.
        let mut methods = BTreeMap::new();
        for &j in chain.iter().rev() {
            let owner = &program.classes[j];
            for m in &owner.methods {
                if let Some(prev) = methods.get(&m.name.name) {
                    let prev: &ResolvedMethod = prev;
                    let same = prev.decl.params.len() == m.params.len()
                        && prev.decl.params.iter().zip(&m.params).all(|(a, b)| a.ty == b.ty);
                    if !same && j == i {
                        errors.push(err(
                            ClassErrorKind::IncompatibleOverride,
                            m.name.span,
                            format!(
                                "`{}::{}` overrides `{}::{}` with different parameter types",
                                owner.name.name, m.name.name, prev.owner, m.name.name
                            ),
                        ));
                    }
                }
                methods.insert(
                    m.name.name.clone(),
                    ResolvedMethod {
                        owner: owner.name.name.clone(),
                        decl: Arc::new(m.clone()),
                    },
                );
            }
        }
        let field_offsets = fields
            .iter()
            .enumerate()
            .map(|(k, (_, n))| (n.clone(), k + 2))
            .collect();
        let payload_words = fields.len();
        classes.push(ClassInfo {
            id: i as i64 + 1,
            name: c.name.name.clone(),
            parent: c.parent.as_ref().map(|p| p.name.clone()),
            fields,
            methods,
            layout: ClassLayout {
                class_id: i as i64 + 1,
                field_offsets,
                payload_words,
                alloc_words: (payload_words + 2).next_power_of_two().max(2),
            },
            span: c.span,
        });
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ClassMap { classes, by_name })
}
