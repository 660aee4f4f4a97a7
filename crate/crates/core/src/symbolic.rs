//! Symbolic layer: state variables, operator schemas, truth assignments and a
//! breadth-first planner over grounded operators.
//!
//! Operators are STRIPS-like: a conjunction of precondition literals plus any
//! number of disjunctive `or` groups, and a list of effect literals that are
//! absolute assignments. A parameter that only appears inside `or` groups may
//! be left unbound; it then ranges over every object compatible with its type.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Default depth bound for [`Instance::plan`].
pub const DEFAULT_PLAN_DEPTH: usize = 12;

/// Parameter name to object name.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("unknown state variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("`{variable}` takes {expected} argument(s), got {found}")]
    Arity {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("`{arg}` is not a parameter of operator `{operator}`")]
    UnknownParam { operator: String, arg: String },
    #[error("parameter `{param}` of operator `{operator}` is not bound")]
    Unbound { operator: String, param: String },
    #[error("`{name}` of type `{found}` cannot fill a `{expected}` slot")]
    TypeMismatch {
        name: String,
        expected: String,
        found: String,
    },
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("operator `{operator}` lists effect `{literal}` twice")]
    DuplicateEffect { operator: String, literal: String },
    #[error("operator `{operator}`: {reason}")]
    MalformedOrGroup { operator: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: Option<String>,
}

/// A typed name: an operator parameter (`?b - block`) or a variable slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVariable {
    pub name: String,
    pub slots: Vec<Param>,
}

impl StateVariable {
    pub fn arity(&self) -> usize {
        self.slots.len()
    }
}

/// A possibly negated atom. Inside an operator the arguments are parameter
/// names; in problems and goals they are object names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub variable: String,
    pub args: Vec<String>,
    pub positive: bool,
    /// Literals sharing a group form one disjunction.
    pub or_group: Option<u32>,
}

impl Literal {
    pub fn new(variable: impl Into<String>, args: &[&str], positive: bool) -> Self {
        Self {
            variable: variable.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
            positive,
            or_group: None,
        }
    }

    pub fn in_group(mut self, group: u32) -> Self {
        self.or_group = Some(group);
        self
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("(not ")?;
        }
        write!(f, "({}", self.variable)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")?;
        if !self.positive {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub preconditions: Vec<Literal>,
    pub effects: Vec<Literal>,
}

impl OperatorSchema {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Parameters that appear only inside `or` groups.
    pub fn or_only_params(&self) -> Vec<&Param> {
        self.params
            .iter()
            .filter(|p| {
                let in_or = self
                    .preconditions
                    .iter()
                    .any(|l| l.or_group.is_some() && l.args.contains(&p.name));
                let elsewhere = self
                    .preconditions
                    .iter()
                    .filter(|l| l.or_group.is_none())
                    .chain(&self.effects)
                    .any(|l| l.args.contains(&p.name));
                in_or && !elsewhere
            })
            .collect()
    }
}

/// A planning domain: types, state variables and operators. Operator cost is
/// uniform.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Domain {
    pub name: String,
    pub types: Vec<TypeDecl>,
    pub variables: Vec<StateVariable>,
    pub operators: Vec<OperatorSchema>,
}

impl Domain {
    pub fn variable(&self, name: &str) -> Option<(usize, &StateVariable)> {
        self.variables.iter().enumerate().find(|(_, v)| v.name == name)
    }

    pub fn operator(&self, name: &str) -> Option<(usize, &OperatorSchema)> {
        self.operators.iter().enumerate().find(|(_, o)| o.name == name)
    }

    pub fn cost(&self, _operator: &str) -> f64 {
        1.0
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == "object" || self.types.iter().any(|t| t.name == name)
    }

    /// `child` equals `ancestor` or inherits from it. Every type is an `object`.
    pub fn is_subtype(&self, child: &str, ancestor: &str) -> bool {
        if ancestor == "object" {
            return true;
        }
        let mut cur = Some(child);
        let mut hops = 0;
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            hops += 1;
            if hops > self.types.len() {
                return false;
            }
            cur = self
                .types
                .iter()
                .find(|t| t.name == c)
                .and_then(|t| t.parent.as_deref());
        }
        false
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), SymbolicError> {
        let mut seen = HashSet::new();
        for t in &self.types {
            if t.name == "object" || !seen.insert(t.name.as_str()) {
                return Err(SymbolicError::Duplicate {
                    kind: "type",
                    name: t.name.clone(),
                });
            }
        }
        for t in &self.types {
            if let Some(p) = &t.parent {
                if !self.has_type(p) {
                    return Err(SymbolicError::UnknownType(p.clone()));
                }
            }
        }
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(SymbolicError::Duplicate {
                    kind: "state variable",
                    name: v.name.clone(),
                });
            }
            for s in &v.slots {
                if !self.has_type(&s.ty) {
                    return Err(SymbolicError::UnknownType(s.ty.clone()));
                }
            }
        }
        let mut seen = HashSet::new();
        for op in &self.operators {
            if !seen.insert(op.name.as_str()) {
                return Err(SymbolicError::Duplicate {
                    kind: "operator",
                    name: op.name.clone(),
                });
            }
            self.validate_operator(op)?;
        }
        Ok(())
    }

    fn validate_operator(&self, op: &OperatorSchema) -> Result<(), SymbolicError> {
        let mut seen = HashSet::new();
        for p in &op.params {
            if !seen.insert(p.name.as_str()) {
                return Err(SymbolicError::Duplicate {
                    kind: "parameter",
                    name: p.name.clone(),
                });
            }
            if !self.has_type(&p.ty) {
                return Err(SymbolicError::UnknownType(p.ty.clone()));
            }
        }
        for lit in op.preconditions.iter().chain(&op.effects) {
            self.check_literal(op, lit)?;
        }
        // or groups: contiguous, numbered 0.. in order of appearance
        let mut next = 0u32;
        let mut current: Option<u32> = None;
        for lit in &op.preconditions {
            match lit.or_group {
                Some(g) if Some(g) == current => {}
                Some(g) if g == next => {
                    current = Some(g);
                    next += 1;
                }
                Some(g) => {
                    return Err(SymbolicError::MalformedOrGroup {
                        operator: op.name.clone(),
                        reason: format!("group {g} is not contiguous or out of order"),
                    })
                }
                None => current = None,
            }
        }
        if op.effects.iter().any(|l| l.or_group.is_some()) {
            return Err(SymbolicError::MalformedOrGroup {
                operator: op.name.clone(),
                reason: "disjunction inside effects".into(),
            });
        }
        for (i, a) in op.effects.iter().enumerate() {
            if op.effects[..i]
                .iter()
                .any(|b| b.variable == a.variable && b.args == a.args)
            {
                return Err(SymbolicError::DuplicateEffect {
                    operator: op.name.clone(),
                    literal: a.to_string(),
                });
            }
        }
        Ok(())
    }

    fn check_literal(&self, op: &OperatorSchema, lit: &Literal) -> Result<(), SymbolicError> {
        let (_, var) = self
            .variable(&lit.variable)
            .ok_or_else(|| SymbolicError::UnknownVariable(lit.variable.clone()))?;
        if var.arity() != lit.args.len() {
            return Err(SymbolicError::Arity {
                variable: var.name.clone(),
                expected: var.arity(),
                found: lit.args.len(),
            });
        }
        for (arg, slot) in lit.args.iter().zip(&var.slots) {
            let p = op.param(arg).ok_or_else(|| SymbolicError::UnknownParam {
                operator: op.name.clone(),
                arg: arg.clone(),
            })?;
            if !self.is_subtype(&p.ty, &slot.ty) {
                return Err(SymbolicError::TypeMismatch {
                    name: p.name.clone(),
                    expected: slot.ty.clone(),
                    found: p.ty.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub name: String,
    pub ty: String,
}

impl Object {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

/// Dense index of every grounded atom `var(o1..ok)` over an object set.
#[derive(Debug, PartialEq, Eq)]
pub struct AtomSpace {
    n_objects: usize,
    offsets: Vec<usize>,
    arities: Vec<usize>,
    len: usize,
}

impl AtomSpace {
    fn new(domain: &Domain, n_objects: usize) -> Self {
        let mut offsets = Vec::with_capacity(domain.variables.len());
        let mut len = 0;
        for v in &domain.variables {
            offsets.push(len);
            len += n_objects.pow(v.arity() as u32);
        }
        Self {
            n_objects,
            arities: domain.variables.iter().map(StateVariable::arity).collect(),
            offsets,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self, var: usize, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arities[var]);
        let mut idx = 0;
        for &a in args {
            idx = idx * self.n_objects + a;
        }
        self.offsets[var] + idx
    }
}

/// Valuation of every grounded atom of an [`Instance`]; atoms never set are
/// false.
#[derive(Debug, Clone)]
pub struct TruthAssignment {
    space: Arc<AtomSpace>,
    bits: Vec<u64>,
}

impl PartialEq for TruthAssignment {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits && *self.space == *other.space
    }
}

impl Eq for TruthAssignment {}

impl TruthAssignment {
    fn empty(space: Arc<AtomSpace>) -> Self {
        let words = space.len.div_ceil(64);
        Self {
            space,
            bits: vec![0; words],
        }
    }

    #[inline]
    pub fn get(&self, atom: usize) -> bool {
        self.bits[atom / 64] >> (atom % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, atom: usize, value: bool) {
        let mask = 1u64 << (atom % 64);
        if value {
            self.bits[atom / 64] |= mask;
        } else {
            self.bits[atom / 64] &= !mask;
        }
    }

    /// Number of atoms in the valuation.
    pub fn len(&self) -> usize {
        self.space.len
    }

    pub fn is_empty(&self) -> bool {
        self.space.len == 0
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn satisfies(&self, lits: &[(usize, bool)]) -> bool {
        lits.iter().all(|&(a, v)| self.get(a) == v)
    }
}

/// A ground literal: atom index plus polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroundLiteral {
    pub atom: usize,
    pub positive: bool,
}

/// An operator instantiated for one binding, compiled to atom indices.
#[derive(Debug, Clone)]
pub struct GroundAction {
    pub operator: usize,
    pub name: String,
    pub binding: Binding,
    pre: Vec<(usize, bool)>,
    or_groups: Vec<Vec<(usize, bool)>>,
    effects: Vec<(usize, bool)>,
}

impl GroundAction {
    pub fn applicable(&self, state: &TruthAssignment) -> bool {
        state.satisfies(&self.pre)
            && self
                .or_groups
                .iter()
                .all(|g| g.iter().any(|&(a, v)| state.get(a) == v))
    }

    pub fn apply(&self, state: &TruthAssignment) -> TruthAssignment {
        let mut next = state.clone();
        for &(a, v) in &self.effects {
            next.set(a, v);
        }
        next
    }

    /// Effect literals as `(atom, polarity)`.
    pub fn effects(&self) -> impl Iterator<Item = GroundLiteral> + '_ {
        self.effects
            .iter()
            .map(|&(atom, positive)| GroundLiteral { atom, positive })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub operator: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("goal unreachable")]
    Unreachable,
    #[error("no plan within depth {0}")]
    DepthExceeded(usize),
}

/// A domain together with a concrete object set. All state-level operations
/// go through here.
#[derive(Debug, Clone)]
pub struct Instance {
    domain: Arc<Domain>,
    objects: Vec<Object>,
    by_name: HashMap<String, usize>,
    space: Arc<AtomSpace>,
}

impl Instance {
    pub fn new(domain: Arc<Domain>, objects: Vec<Object>) -> Result<Self, SymbolicError> {
        domain.validate()?;
        let mut by_name = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if !domain.has_type(&o.ty) {
                return Err(SymbolicError::UnknownType(o.ty.clone()));
            }
            if by_name.insert(o.name.clone(), i).is_some() {
                return Err(SymbolicError::Duplicate {
                    kind: "object",
                    name: o.name.clone(),
                });
            }
        }
        let space = Arc::new(AtomSpace::new(&domain, objects.len()));
        Ok(Self {
            domain,
            objects,
            by_name,
            space,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn object_index(&self, name: &str) -> Result<usize, SymbolicError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| SymbolicError::UnknownObject(name.to_string()))
    }

    /// Objects whose type is compatible with `ty`, in declaration order.
    pub fn objects_of(&self, ty: &str) -> impl Iterator<Item = &Object> + '_ {
        let ty = ty.to_string();
        self.objects
            .iter()
            .filter(move |o| self.domain.is_subtype(&o.ty, &ty))
    }

    /// All-false assignment.
    pub fn empty_state(&self) -> TruthAssignment {
        TruthAssignment::empty(self.space.clone())
    }

    /// Atom index for `variable(args...)` with object names.
    pub fn atom(&self, variable: &str, args: &[&str]) -> Result<usize, SymbolicError> {
        let (vi, var) = self
            .domain
            .variable(variable)
            .ok_or_else(|| SymbolicError::UnknownVariable(variable.to_string()))?;
        if var.arity() != args.len() {
            return Err(SymbolicError::Arity {
                variable: variable.to_string(),
                expected: var.arity(),
                found: args.len(),
            });
        }
        let mut idx = Vec::with_capacity(args.len());
        for (a, slot) in args.iter().zip(&var.slots) {
            let oi = self.object_index(a)?;
            let o = &self.objects[oi];
            if !self.domain.is_subtype(&o.ty, &slot.ty) {
                return Err(SymbolicError::TypeMismatch {
                    name: o.name.clone(),
                    expected: slot.ty.clone(),
                    found: o.ty.clone(),
                });
            }
            idx.push(oi);
        }
        Ok(self.space.index(vi, &idx))
    }

    /// Grounds an object-level literal (goal, init entry).
    pub fn ground_literal(&self, lit: &Literal) -> Result<GroundLiteral, SymbolicError> {
        let args: Vec<&str> = lit.args.iter().map(String::as_str).collect();
        Ok(GroundLiteral {
            atom: self.atom(&lit.variable, &args)?,
            positive: lit.positive,
        })
    }

    /// Sets each literal to its polarity on top of the empty state.
    pub fn state_from(&self, lits: &[Literal]) -> Result<TruthAssignment, SymbolicError> {
        let mut s = self.empty_state();
        for l in lits {
            let g = self.ground_literal(l)?;
            s.set(g.atom, g.positive);
        }
        Ok(s)
    }

    pub fn holds(&self, state: &TruthAssignment, goal: &[GroundLiteral]) -> bool {
        goal.iter().all(|g| state.get(g.atom) == g.positive)
    }

    /// Human readable list of true atoms.
    pub fn describe(&self, state: &TruthAssignment) -> Vec<String> {
        let mut out = Vec::new();
        for (vi, var) in self.domain.variables.iter().enumerate() {
            let n = self.objects.len();
            let total = n.pow(var.arity() as u32);
            for flat in 0..total {
                let mut args = vec![0; var.arity()];
                let mut rem = flat;
                for slot in (0..var.arity()).rev() {
                    args[slot] = rem % n;
                    rem /= n;
                }
                if state.get(self.space.index(vi, &args)) {
                    let names: Vec<&str> =
                        args.iter().map(|&i| self.objects[i].name.as_str()).collect();
                    out.push(format!("({} {})", var.name, names.join(" ")).replace(" )", ")"));
                }
            }
        }
        out
    }

    /// Compiles `op` under `binding`. Parameters used outside `or` groups must
    /// be bound; unbound `or`-only parameters are expanded over all objects of
    /// their type.
    pub fn compile(&self, op_name: &str, binding: &Binding) -> Result<GroundAction, SymbolicError> {
        let (oi, op) = self
            .domain
            .operator(op_name)
            .ok_or_else(|| SymbolicError::UnknownOperator(op_name.to_string()))?;
        let resolve = |lit: &Literal, extra: &Binding| -> Result<(usize, bool), SymbolicError> {
            let mut names = Vec::with_capacity(lit.args.len());
            for a in &lit.args {
                let obj = extra
                    .get(a)
                    .or_else(|| binding.get(a))
                    .ok_or_else(|| SymbolicError::Unbound {
                        operator: op.name.clone(),
                        param: a.clone(),
                    })?;
                let p = op.param(a).ok_or_else(|| SymbolicError::UnknownParam {
                    operator: op.name.clone(),
                    arg: a.clone(),
                })?;
                let o = &self.objects[self.object_index(obj)?];
                if !self.domain.is_subtype(&o.ty, &p.ty) {
                    return Err(SymbolicError::TypeMismatch {
                        name: o.name.clone(),
                        expected: p.ty.clone(),
                        found: o.ty.clone(),
                    });
                }
                names.push(obj.as_str());
            }
            Ok((self.atom(&lit.variable, &names)?, lit.positive))
        };

        let empty = Binding::new();
        let mut pre = Vec::new();
        let mut groups: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut group_ids: Vec<u32> = Vec::new();
        for lit in &op.preconditions {
            match lit.or_group {
                None => pre.push(resolve(lit, &empty)?),
                Some(g) => {
                    let slot = match group_ids.iter().position(|&x| x == g) {
                        Some(i) => i,
                        None => {
                            group_ids.push(g);
                            groups.push(Vec::new());
                            groups.len() - 1
                        }
                    };
                    let free: Vec<&Param> = lit
                        .args
                        .iter()
                        .filter(|a| !binding.contains_key(*a))
                        .filter_map(|a| op.param(a))
                        .collect();
                    for extra in self.enumerate_bindings(&free) {
                        let g = resolve(lit, &extra)?;
                        if !groups[slot].contains(&g) {
                            groups[slot].push(g);
                        }
                    }
                }
            }
        }
        let effects = op
            .effects
            .iter()
            .map(|l| resolve(l, &empty))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroundAction {
            operator: oi,
            name: op.name.clone(),
            binding: binding.clone(),
            pre,
            or_groups: groups,
            effects,
        })
    }

    fn enumerate_bindings(&self, params: &[&Param]) -> Vec<Binding> {
        let mut out = vec![Binding::new()];
        for p in params {
            if out.first().is_some_and(|b| b.contains_key(&p.name)) {
                continue;
            }
            let mut next = Vec::new();
            for b in &out {
                for o in self.objects_of(&p.ty) {
                    let mut nb = b.clone();
                    nb.insert(p.name.clone(), o.name.clone());
                    next.push(nb);
                }
            }
            out = next;
        }
        out
    }

    pub fn is_applicable(
        &self,
        op: &str,
        state: &TruthAssignment,
        binding: &Binding,
    ) -> Result<bool, SymbolicError> {
        Ok(self.compile(op, binding)?.applicable(state))
    }

    /// Overwrites each effect literal; everything else is unchanged.
    pub fn apply_effects(
        &self,
        op: &str,
        state: &TruthAssignment,
        binding: &Binding,
    ) -> Result<TruthAssignment, SymbolicError> {
        Ok(self.compile(op, binding)?.apply(state))
    }

    /// Every grounding of every operator that extends `partial`, in operator
    /// declaration order. Groundings where `partial` assigns an object of an
    /// incompatible type are skipped. Unbound `or`-only parameters stay
    /// unbound.
    pub fn ground_actions(&self, partial: &Binding) -> Result<Vec<GroundAction>, SymbolicError> {
        let mut out = Vec::new();
        for op in &self.domain.operators {
            let or_only: Vec<&str> = op.or_only_params().iter().map(|p| p.name.as_str()).collect();
            let mut fixed = Binding::new();
            let mut compatible = true;
            let mut free = Vec::new();
            for p in &op.params {
                match partial.get(&p.name) {
                    Some(obj) => {
                        let o = &self.objects[self.object_index(obj)?];
                        if !self.domain.is_subtype(&o.ty, &p.ty) {
                            compatible = false;
                        }
                        fixed.insert(p.name.clone(), obj.clone());
                    }
                    None if or_only.contains(&p.name.as_str()) => {}
                    None => free.push(p),
                }
            }
            if !compatible {
                continue;
            }
            for extra in self.enumerate_bindings(&free) {
                let mut b = fixed.clone();
                b.extend(extra);
                out.push(self.compile(&op.name, &b)?);
            }
        }
        Ok(out)
    }

    /// Breadth-first search over symbolic states with uniform operator cost;
    /// successors are expanded in the order of `actions`.
    pub fn plan_with(
        &self,
        init: &TruthAssignment,
        goal: &[GroundLiteral],
        actions: &[GroundAction],
        max_depth: usize,
    ) -> Result<Vec<PlanStep>, PlanError> {
        if self.holds(init, goal) {
            return Ok(Vec::new());
        }
        // node: (state, parent node, action)
        let mut nodes: Vec<(TruthAssignment, usize, usize)> = vec![(init.clone(), usize::MAX, 0)];
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        seen.insert(init.bits.clone());
        let mut frontier = VecDeque::from([0usize]);
        let mut depth = 0;
        while !frontier.is_empty() {
            if depth == max_depth {
                return Err(PlanError::DepthExceeded(max_depth));
            }
            let mut next_frontier = VecDeque::new();
            while let Some(ni) = frontier.pop_front() {
                for (ai, act) in actions.iter().enumerate() {
                    if !act.applicable(&nodes[ni].0) {
                        continue;
                    }
                    let succ = act.apply(&nodes[ni].0);
                    if !seen.insert(succ.bits.clone()) {
                        continue;
                    }
                    let done = self.holds(&succ, goal);
                    nodes.push((succ, ni, ai));
                    let id = nodes.len() - 1;
                    if done {
                        let mut steps = Vec::new();
                        let mut cur = id;
                        while nodes[cur].1 != usize::MAX {
                            let a = &actions[nodes[cur].2];
                            steps.push(PlanStep {
                                operator: a.name.clone(),
                                binding: a.binding.clone(),
                            });
                            cur = nodes[cur].1;
                        }
                        steps.reverse();
                        return Ok(steps);
                    }
                    next_frontier.push_back(id);
                }
            }
            frontier = next_frontier;
            depth += 1;
        }
        Err(PlanError::Unreachable)
    }

    /// Plans over every grounding of the domain's operators.
    pub fn plan(
        &self,
        init: &TruthAssignment,
        goal: &[GroundLiteral],
        max_depth: usize,
    ) -> Result<Vec<PlanStep>, PlanError> {
        let actions = self
            .ground_actions(&Binding::new())
            .expect("validated domain grounds cleanly");
        self.plan_with(init, goal, &actions, max_depth)
    }
}

/// Builds a binding from `(param, object)` pairs.
pub fn binding<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Binding {
    pairs
        .into_iter()
        .map(|(p, o)| (p.to_string(), o.to_string()))
        .collect()
}
