//! Text format for operator domains (`.domain`) and planning problems
//! (`.problem`).
//!
//! ```text
//! (domain stack-insert
//!   (:types gripper table thing - object block slot - thing)
//!   (:variables
//!     (openGripper ?g - gripper)
//!     (graspable ?g - gripper ?b - block))
//!   (:operator close
//!     :args (?g - gripper ?b - block)
//!     :pre (and (openGripper ?g) (graspable ?g ?b))
//!     :eff (and (not (openGripper ?g)))))
//! ```
//!
//! `(or ...)` is accepted only directly inside a precondition `and`.
//! [`serialize_domain`] emits the canonical form: two-space indentation,
//! lowercase keywords, one declaration per line.

mod sexpr;

use std::collections::HashSet;
use std::fmt;

use crate::symbolic::{Domain, Literal, Object, OperatorSchema, Param, StateVariable, TypeDecl};
pub use sexpr::MAX_DEPTH;
use sexpr::Sexpr;

/// Byte range plus the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(src: &str, start: usize, end: usize) -> Self {
        let start = start.min(src.len());
        let end = end.clamp(start, src.len());
        let before = &src.as_bytes()[..start];
        let line = 1 + before.iter().filter(|&&b| b == b'\n').count();
        let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        let column = 1 + String::from_utf8_lossy(&before[line_start..]).chars().count();
        Self {
            start,
            end,
            line,
            column,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    Syntax,
    UnknownVariable,
    ArityMismatch,
    DuplicateOperator,
    MalformedOrGroup,
    UnknownParameter,
    UnknownType,
    Duplicate,
    TypeMismatch,
    DuplicateEffect,
    UnknownObject,
    EmptyEffects,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::Syntax => "E001",
            DiagnosticCode::UnknownVariable => "E002",
            DiagnosticCode::ArityMismatch => "E003",
            DiagnosticCode::DuplicateOperator => "E004",
            DiagnosticCode::MalformedOrGroup => "E005",
            DiagnosticCode::UnknownParameter => "E006",
            DiagnosticCode::UnknownType => "E007",
            DiagnosticCode::Duplicate => "E008",
            DiagnosticCode::TypeMismatch => "E009",
            DiagnosticCode::DuplicateEffect => "E010",
            DiagnosticCode::UnknownObject => "E011",
            DiagnosticCode::EmptyEffects => "W001",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    fn error(code: DiagnosticCode, message: impl Into<String>, span: Span) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    fn warning(code: DiagnosticCode, message: impl Into<String>, span: Span) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}[{}]: {}",
            self.span.line,
            self.span.column,
            self.code.as_str(),
            self.message
        )
    }
}

/// Parse failure: at least one error diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

/// Source text plus where it came from.
#[derive(Debug, Clone)]
pub struct DomainSource {
    pub text: String,
    pub provenance: String,
}

impl DomainSource {
    pub fn inline(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            provenance: "<inline>".into(),
        }
    }

    pub fn from_path(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(Self {
            text: std::fs::read_to_string(path)?,
            provenance: path.display().to_string(),
        })
    }
}

/// The shipped two-block stacking / slot insertion domain.
pub const STACK_INSERT_DOMAIN: &str = include_str!("../../domains/stack_insert.domain");
pub const STACK_PROBLEM: &str = include_str!("../../domains/stack.problem");
pub const INSERT_PROBLEM: &str = include_str!("../../domains/insert.problem");

pub fn parse_domain(src: &DomainSource) -> Result<Domain, Diagnostics> {
    let (model, diags) = check_domain(src);
    match model {
        Some(m) => Ok(m),
        None => Err(Diagnostics(diags)),
    }
}

/// Parses and returns every diagnostic, warnings included. The model is
/// `None` whenever an error was reported.
pub fn check_domain(src: &DomainSource) -> (Option<Domain>, Vec<Diagnostic>) {
    let text = &src.text;
    let mut cx = Cx {
        src: text,
        diags: Vec::new(),
    };
    let trees = match sexpr::read_all(text) {
        Ok(t) => t,
        Err(d) => return (None, vec![d]),
    };
    let domain = cx.domain(&trees);
    let has_error = cx.diags.iter().any(|d| d.severity == Severity::Error);
    match domain {
        Some(d) if !has_error => {
            if let Err(e) = d.validate() {
                cx.diags.push(Diagnostic::error(
                    DiagnosticCode::Syntax,
                    e.to_string(),
                    Span::new(text, 0, text.len()),
                ));
                return (None, cx.diags);
            }
            (Some(d), cx.diags)
        }
        _ => (None, cx.diags),
    }
}

/// A planning problem against a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Object>,
    pub init: Vec<Literal>,
    pub goal: Vec<Literal>,
}

pub fn parse_problem(src: &DomainSource, domain: &Domain) -> Result<Problem, Diagnostics> {
    let text = &src.text;
    let mut cx = Cx {
        src: text,
        diags: Vec::new(),
    };
    let trees = sexpr::read_all(text).map_err(|d| Diagnostics(vec![d]))?;
    let problem = cx.problem(&trees, domain);
    if cx.diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(Diagnostics(cx.diags));
    }
    problem.ok_or_else(|| Diagnostics(cx.diags))
}

struct Cx<'a> {
    src: &'a str,
    diags: Vec<Diagnostic>,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && !s.starts_with([':', '?', '-'])
}

impl Cx<'_> {
    fn err(&mut self, code: DiagnosticCode, msg: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::error(code, msg, span));
    }

    fn whole(&self) -> Span {
        Span::new(self.src, 0, self.src.len())
    }

    /// `(head name section...)`
    fn top<'t>(&mut self, trees: &'t [Sexpr], head: &str) -> Option<(String, &'t [Sexpr])> {
        let [root] = trees else {
            let span = trees.get(1).map_or(self.whole(), Sexpr::span);
            self.err(
                DiagnosticCode::Syntax,
                format!("expected exactly one `({head} ...)` form"),
                span,
            );
            return None;
        };
        let Some(items) = root.list() else {
            self.err(DiagnosticCode::Syntax, format!("expected `({head} ...)`"), root.span());
            return None;
        };
        if root.head().as_deref() != Some(head) {
            self.err(DiagnosticCode::Syntax, format!("expected `({head} ...)`"), root.span());
            return None;
        }
        match items.get(1).and_then(Sexpr::atom) {
            Some(n) if is_ident(n) => Some((n.to_string(), &items[2..])),
            _ => {
                let span = items.get(1).map_or(root.span(), Sexpr::span);
                self.err(DiagnosticCode::Syntax, format!("`{head}` needs a name"), span);
                None
            }
        }
    }

    fn domain(&mut self, trees: &[Sexpr]) -> Option<Domain> {
        let (name, sections) = self.top(trees, "domain")?;
        let mut d = Domain {
            name,
            ..Domain::default()
        };
        let mut op_names: HashSet<String> = HashSet::new();
        for sec in sections {
            let Some(items) = sec.list() else {
                self.err(DiagnosticCode::Syntax, "expected a section", sec.span());
                continue;
            };
            match sec.head().as_deref() {
                Some(":types") => self.types(&items[1..], &mut d),
                Some(":variables") => self.variables(&items[1..], &mut d),
                Some(":operator") => {
                    if let Some(op) = self.operator(sec, &d) {
                        if !op_names.insert(op.name.clone()) {
                            self.err(
                                DiagnosticCode::DuplicateOperator,
                                format!("operator `{}` defined twice", op.name),
                                items[1].span(),
                            );
                        } else {
                            d.operators.push(op);
                        }
                    }
                }
                _ => self.err(
                    DiagnosticCode::Syntax,
                    "unknown section; expected :types, :variables or :operator",
                    sec.span(),
                ),
            }
        }
        Some(d)
    }

    /// `a b - t c` style list. Returns `(name, type, span)`; untyped trailing
    /// names get `None`.
    fn typed_list(&mut self, items: &[Sexpr]) -> Vec<(String, Option<String>, Span)> {
        let mut out = Vec::new();
        let mut pending: Vec<(String, Span)> = Vec::new();
        let mut i = 0;
        while i < items.len() {
            let Some(a) = items[i].atom() else {
                self.err(DiagnosticCode::Syntax, "expected a name", items[i].span());
                i += 1;
                continue;
            };
            if a == "-" {
                match items.get(i + 1).and_then(Sexpr::atom) {
                    Some(t) if is_ident(t) && !pending.is_empty() => {
                        for (n, s) in pending.drain(..) {
                            out.push((n, Some(t.to_string()), s));
                        }
                    }
                    _ => self.err(
                        DiagnosticCode::Syntax,
                        "`-` must follow names and precede a type",
                        items[i].span(),
                    ),
                }
                i += 2;
                continue;
            }
            pending.push((a.to_string(), items[i].span()));
            i += 1;
        }
        out.extend(pending.into_iter().map(|(n, s)| (n, None, s)));
        out
    }

    fn types(&mut self, items: &[Sexpr], d: &mut Domain) {
        let list = self.typed_list(items);
        for (name, parent, span) in &list {
            if !is_ident(name) || name == "object" {
                self.err(DiagnosticCode::Syntax, format!("invalid type name `{name}`"), *span);
                continue;
            }
            if d.types.iter().any(|t| &t.name == name) {
                self.err(DiagnosticCode::Duplicate, format!("type `{name}` declared twice"), *span);
                continue;
            }
            let parent = parent.clone().filter(|p| p != "object");
            d.types.push(TypeDecl {
                name: name.clone(),
                parent,
            });
        }
        for (name, parent, span) in list {
            if let Some(p) = parent {
                if !d.has_type(&p) {
                    self.err(DiagnosticCode::UnknownType, format!("unknown type `{p}`"), span);
                } else if p != "object" && d.is_subtype(&p, &name) {
                    self.err(DiagnosticCode::Syntax, format!("type `{name}` is its own ancestor"), span);
                }
            }
        }
    }

    fn params(&mut self, items: &[Sexpr], d: &Domain) -> Option<Vec<Param>> {
        let mut out: Vec<Param> = Vec::new();
        let mut ok = true;
        for (name, ty, span) in self.typed_list(items) {
            if !name.starts_with('?') || name.len() < 2 {
                self.err(DiagnosticCode::Syntax, format!("parameter `{name}` must start with `?`"), span);
                ok = false;
                continue;
            }
            let Some(ty) = ty else {
                self.err(DiagnosticCode::Syntax, format!("parameter `{name}` has no type"), span);
                ok = false;
                continue;
            };
            if !d.has_type(&ty) {
                self.err(DiagnosticCode::UnknownType, format!("unknown type `{ty}`"), span);
                ok = false;
                continue;
            }
            if out.iter().any(|p| p.name == name) {
                self.err(DiagnosticCode::Duplicate, format!("parameter `{name}` repeated"), span);
                ok = false;
                continue;
            }
            out.push(Param::new(name, ty));
        }
        ok.then_some(out)
    }

    fn variables(&mut self, items: &[Sexpr], d: &mut Domain) {
        for item in items {
            let Some(parts) = item.list() else {
                self.err(DiagnosticCode::Syntax, "expected `(name ?arg - type ...)`", item.span());
                continue;
            };
            let name = match parts.first().and_then(Sexpr::atom) {
                Some(n) if is_ident(n) => n.to_string(),
                _ => {
                    self.err(DiagnosticCode::Syntax, "state variable needs a name", item.span());
                    continue;
                }
            };
            if d.variable(&name).is_some() {
                self.err(
                    DiagnosticCode::Duplicate,
                    format!("state variable `{name}` declared twice"),
                    parts[0].span(),
                );
                continue;
            }
            if let Some(slots) = self.params(&parts[1..], d) {
                d.variables.push(StateVariable { name, slots });
            }
        }
    }

    fn operator(&mut self, sec: &Sexpr, d: &Domain) -> Option<OperatorSchema> {
        let items = sec.list()?;
        let name = match items.get(1).and_then(Sexpr::atom) {
            Some(n) if is_ident(n) => n.to_string(),
            _ => {
                self.err(DiagnosticCode::Syntax, "operator needs a name", sec.span());
                return None;
            }
        };
        let mut args = None;
        let mut pre = None;
        let mut eff = None;
        let mut i = 2;
        while i < items.len() {
            let key = items[i].atom().map(str::to_ascii_lowercase);
            let Some(value) = items.get(i + 1) else {
                self.err(DiagnosticCode::Syntax, "keyword without a value", items[i].span());
                return None;
            };
            match key.as_deref() {
                Some(":args") if args.is_none() => args = Some(value),
                Some(":pre") if pre.is_none() => pre = Some(value),
                Some(":eff") if eff.is_none() => eff = Some(value),
                _ => {
                    self.err(
                        DiagnosticCode::Syntax,
                        "expected one each of :args, :pre, :eff",
                        items[i].span(),
                    );
                    return None;
                }
            }
            i += 2;
        }
        let (Some(args), Some(pre), Some(eff)) = (args, pre, eff) else {
            self.err(
                DiagnosticCode::Syntax,
                format!("operator `{name}` needs :args, :pre and :eff"),
                sec.span(),
            );
            return None;
        };
        let Some(arg_items) = args.list() else {
            self.err(DiagnosticCode::Syntax, ":args takes a list", args.span());
            return None;
        };
        let params = self.params(arg_items, d)?;
        let mut op = OperatorSchema {
            name,
            params,
            preconditions: Vec::new(),
            effects: Vec::new(),
        };
        let preconditions = self.formula(pre, &op, d, true)?;
        let effects = self.formula(eff, &op, d, false)?;
        for (i, (a, span)) in effects.iter().enumerate() {
            if effects[..i]
                .iter()
                .any(|(b, _)| b.variable == a.variable && b.args == a.args)
            {
                self.err(
                    DiagnosticCode::DuplicateEffect,
                    format!("effect on `{a}` listed twice"),
                    *span,
                );
                return None;
            }
        }
        if effects.is_empty() {
            self.diags.push(Diagnostic::warning(
                DiagnosticCode::EmptyEffects,
                format!("operator `{}` has no effects", op.name),
                eff.span(),
            ));
        }
        op.preconditions = preconditions.into_iter().map(|(l, _)| l).collect();
        op.effects = effects.into_iter().map(|(l, _)| l).collect();
        Some(op)
    }

    /// `(and L...)` or a single literal; `or` groups allowed only when
    /// `allow_or`.
    fn formula(
        &mut self,
        f: &Sexpr,
        op: &OperatorSchema,
        d: &Domain,
        allow_or: bool,
    ) -> Option<Vec<(Literal, Span)>> {
        let conjuncts: &[Sexpr] = match f.head().as_deref() {
            Some("and") => &f.list()?[1..],
            _ => std::slice::from_ref(f),
        };
        let mut out = Vec::new();
        let mut next_group = 0u32;
        let mut ok = true;
        for c in conjuncts {
            if c.head().as_deref() == Some("or") {
                if !allow_or {
                    self.err(
                        DiagnosticCode::MalformedOrGroup,
                        "`or` is only allowed in preconditions",
                        c.span(),
                    );
                    ok = false;
                    continue;
                }
                let members = &c.list()?[1..];
                if members.is_empty() {
                    self.err(DiagnosticCode::MalformedOrGroup, "empty `or`", c.span());
                    ok = false;
                    continue;
                }
                for m in members {
                    if matches!(m.head().as_deref(), Some("or") | Some("and")) {
                        self.err(
                            DiagnosticCode::MalformedOrGroup,
                            "`or` members must be literals",
                            m.span(),
                        );
                        ok = false;
                        continue;
                    }
                    match self.literal(m, Some(op), d) {
                        Some(l) => out.push((l.in_group(next_group), m.span())),
                        None => ok = false,
                    }
                }
                next_group += 1;
            } else {
                match self.literal(c, Some(op), d) {
                    Some(l) => out.push((l, c.span())),
                    None => ok = false,
                }
            }
        }
        ok.then_some(out)
    }

    /// `(v a...)` or `(not (v a...))`. With `op`, arguments are its
    /// parameters; otherwise they are checked by the caller.
    fn literal(&mut self, s: &Sexpr, op: Option<&OperatorSchema>, d: &Domain) -> Option<Literal> {
        let (atom, positive) = match s.head().as_deref() {
            Some("not") => {
                let items = s.list()?;
                if items.len() != 2 {
                    self.err(DiagnosticCode::Syntax, "`not` takes one literal", s.span());
                    return None;
                }
                (&items[1], false)
            }
            Some("and") | Some("or") => {
                self.err(DiagnosticCode::Syntax, "expected a literal", s.span());
                return None;
            }
            _ => (s, true),
        };
        let Some(items) = atom.list() else {
            self.err(DiagnosticCode::Syntax, "expected `(variable args...)`", atom.span());
            return None;
        };
        let Some(vname) = items.first().and_then(Sexpr::atom) else {
            self.err(DiagnosticCode::Syntax, "expected a state variable name", atom.span());
            return None;
        };
        let Some((_, var)) = d.variable(vname) else {
            self.err(
                DiagnosticCode::UnknownVariable,
                format!("undeclared state variable `{vname}`"),
                items[0].span(),
            );
            return None;
        };
        let mut args = Vec::new();
        for a in &items[1..] {
            match a.atom() {
                Some(x) => args.push(x.to_string()),
                None => {
                    self.err(DiagnosticCode::Syntax, "arguments must be names", a.span());
                    return None;
                }
            }
        }
        if args.len() != var.arity() {
            self.err(
                DiagnosticCode::ArityMismatch,
                format!(
                    "`{vname}` takes {} argument(s), got {}",
                    var.arity(),
                    args.len()
                ),
                atom.span(),
            );
            return None;
        }
        if let Some(op) = op {
            for ((a, slot), item) in args.iter().zip(&var.slots).zip(&items[1..]) {
                let Some(p) = op.param(a) else {
                    self.err(
                        DiagnosticCode::UnknownParameter,
                        format!("`{a}` is not a parameter of `{}`", op.name),
                        item.span(),
                    );
                    return None;
                };
                if !d.is_subtype(&p.ty, &slot.ty) {
                    self.err(
                        DiagnosticCode::TypeMismatch,
                        format!("`{a}` has type `{}` but `{vname}` expects `{}`", p.ty, slot.ty),
                        item.span(),
                    );
                    return None;
                }
            }
        }
        Some(Literal {
            variable: vname.to_string(),
            args,
            positive,
            or_group: None,
        })
    }

    fn problem(&mut self, trees: &[Sexpr], d: &Domain) -> Option<Problem> {
        let (name, sections) = self.top(trees, "problem")?;
        let mut p = Problem {
            name,
            domain: String::new(),
            objects: Vec::new(),
            init: Vec::new(),
            goal: Vec::new(),
        };
        for sec in sections {
            let Some(items) = sec.list() else {
                self.err(DiagnosticCode::Syntax, "expected a section", sec.span());
                continue;
            };
            match sec.head().as_deref() {
                Some(":domain") => match items.get(1).and_then(Sexpr::atom) {
                    Some(n) => p.domain = n.to_string(),
                    None => self.err(DiagnosticCode::Syntax, ":domain needs a name", sec.span()),
                },
                Some(":objects") => {
                    for (n, ty, span) in self.typed_list(&items[1..]) {
                        let Some(ty) = ty else {
                            self.err(DiagnosticCode::Syntax, format!("object `{n}` has no type"), span);
                            continue;
                        };
                        if !d.has_type(&ty) {
                            self.err(DiagnosticCode::UnknownType, format!("unknown type `{ty}`"), span);
                        } else if p.objects.iter().any(|o| o.name == n) {
                            self.err(DiagnosticCode::Duplicate, format!("object `{n}` repeated"), span);
                        } else {
                            p.objects.push(Object::new(n, ty));
                        }
                    }
                }
                Some(":init") => {
                    for item in &items[1..] {
                        if let Some(l) = self.ground(item, d, &p.objects) {
                            if !l.positive {
                                self.err(
                                    DiagnosticCode::Syntax,
                                    "init lists only true atoms",
                                    item.span(),
                                );
                            }
                            p.init.push(l);
                        }
                    }
                }
                Some(":goal") => {
                    let Some(f) = items.get(1) else {
                        self.err(DiagnosticCode::Syntax, ":goal needs a formula", sec.span());
                        continue;
                    };
                    let conj: &[Sexpr] = match f.head().as_deref() {
                        Some("and") => &f.list()?[1..],
                        _ => std::slice::from_ref(f),
                    };
                    for c in conj {
                        if let Some(l) = self.ground(c, d, &p.objects) {
                            p.goal.push(l);
                        }
                    }
                }
                _ => self.err(DiagnosticCode::Syntax, "unknown problem section", sec.span()),
            }
        }
        if !p.domain.is_empty() && p.domain != d.name {
            self.err(
                DiagnosticCode::Syntax,
                format!("problem targets domain `{}`, not `{}`", p.domain, d.name),
                self.whole(),
            );
        }
        Some(p)
    }

    fn ground(&mut self, s: &Sexpr, d: &Domain, objects: &[Object]) -> Option<Literal> {
        let lit = self.literal(s, None, d)?;
        let (_, var) = d.variable(&lit.variable)?;
        for (a, slot) in lit.args.iter().zip(&var.slots) {
            match objects.iter().find(|o| &o.name == a) {
                None => {
                    self.err(DiagnosticCode::UnknownObject, format!("unknown object `{a}`"), s.span());
                    return None;
                }
                Some(o) if !d.is_subtype(&o.ty, &slot.ty) => {
                    self.err(
                        DiagnosticCode::TypeMismatch,
                        format!("`{a}` has type `{}` but `{}` expects `{}`", o.ty, var.name, slot.ty),
                        s.span(),
                    );
                    return None;
                }
                Some(_) => {}
            }
        }
        Some(lit)
    }
}

fn typed_groups<'a>(items: impl Iterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    let items: Vec<_> = items.collect();
    let mut i = 0;
    while i < items.len() {
        let ty = items[i].1;
        let mut j = i;
        while j < items.len() && items[j].1 == ty {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(items[j].0);
            j += 1;
        }
        out.push_str(" - ");
        out.push_str(ty);
        i = j;
    }
    out
}

fn formula(lits: &[Literal]) -> String {
    let mut out = String::from("(and");
    let mut i = 0;
    while i < lits.len() {
        out.push(' ');
        match lits[i].or_group {
            None => {
                out.push_str(&lits[i].to_string());
                i += 1;
            }
            Some(g) => {
                out.push_str("(or");
                while i < lits.len() && lits[i].or_group == Some(g) {
                    out.push(' ');
                    out.push_str(&lits[i].to_string());
                    i += 1;
                }
                out.push(')');
            }
        }
    }
    out.push(')');
    out
}

/// Canonical text for a valid domain. Deterministic; `parse_domain` of the
/// output reproduces `model`.
pub fn serialize_domain(model: &Domain) -> String {
    let mut out = format!("(domain {}\n", model.name);
    // a parentless run needs an explicit `- object` unless it is the last one
    let types = typed_groups(
        model
            .types
            .iter()
            .map(|t| (t.name.as_str(), t.parent.as_deref().unwrap_or("object"))),
    );
    let types = types.strip_suffix(" - object").unwrap_or(&types);
    if types.is_empty() {
        out.push_str("  (:types)\n");
    } else {
        out.push_str(&format!("  (:types {types})\n"));
    }
    if model.variables.is_empty() {
        out.push_str("  (:variables)");
    } else {
        out.push_str("  (:variables");
        for v in &model.variables {
            let slots = typed_groups(v.slots.iter().map(|p| (p.name.as_str(), p.ty.as_str())));
            if slots.is_empty() {
                out.push_str(&format!("\n    ({})", v.name));
            } else {
                out.push_str(&format!("\n    ({} {slots})", v.name));
            }
        }
        out.push(')');
    }
    for op in &model.operators {
        let args = typed_groups(op.params.iter().map(|p| (p.name.as_str(), p.ty.as_str())));
        out.push_str(&format!(
            "\n  (:operator {}\n    :args ({args})\n    :pre {}\n    :eff {})",
            op.name,
            formula(&op.preconditions),
            formula(&op.effects)
        ));
    }
    out.push_str(")\n");
    out
}

pub fn serialize_problem(p: &Problem) -> String {
    let objects = typed_groups(p.objects.iter().map(|o| (o.name.as_str(), o.ty.as_str())));
    let init: Vec<String> = p.init.iter().map(Literal::to_string).collect();
    format!(
        "(problem {}\n  (:domain {})\n  (:objects {objects})\n  (:init {})\n  (:goal {}))\n",
        p.name,
        p.domain,
        init.join(" "),
        formula(&p.goal)
    )
}
