//! Core data model: predicates, literals, states, action schemas, ground
//! actions, plans, problems, and stream specifications.
//!
//! Everything here is an immutable value after construction and is safe to
//! clone, share, and send across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Semantic tag attached to a parameter type. Geometry-bearing tags mark the
/// parameters whose values are produced by conditional samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemType {
    Arm,
    Object,
    Pose,
    Grasp,
    Config,
    Trajectory,
    Region,
    Plain,
}

impl SemType {
    /// Maps a declared type name onto its semantic tag. Unrecognized names
    /// carry no geometric payload and map to `Plain`.
    pub fn from_type_name(name: &str) -> SemType {
        match name {
            "arm" => SemType::Arm,
            "obj" | "object" => SemType::Object,
            "pose" => SemType::Pose,
            "grasp" => SemType::Grasp,
            "conf" | "config" => SemType::Config,
            "traj" | "trajectory" => SemType::Trajectory,
            "region" => SemType::Region,
            _ => SemType::Plain,
        }
    }

    pub fn carries_geometry(self) -> bool {
        matches!(
            self,
            SemType::Pose | SemType::Grasp | SemType::Config | SemType::Trajectory
        )
    }
}

/// Classification of a predicate within a domain. The classification is
/// fixed per predicate: a predicate cannot be fluent in one action and
/// static in another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredKind {
    /// Truth value changes via action effects.
    Fluent,
    /// Constant fact, certified by streams or given in the initial state;
    /// never appears in effects.
    Static,
    /// Arity-1 type predicate backing a declared type.
    UnaryType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub param_types: Vec<SemType>,
    /// Declared type names, parallel to `param_types` (empty string for
    /// untyped parameters).
    pub param_type_names: Vec<String>,
    pub kind: PredKind,
}

impl Predicate {
    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

/// A term is either a variable (`?x`) or a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(s) => write!(f, "?{s}"),
            Term::Const(s) => write!(f, "{s}"),
        }
    }
}

/// A possibly-negated predicate instance over terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub positive: bool,
    pub kind: PredKind,
}

impl Literal {
    pub fn positive(predicate: impl Into<String>, args: Vec<Term>, kind: PredKind) -> Self {
        Literal {
            predicate: predicate.into(),
            args,
            positive: true,
            kind,
        }
    }

    pub fn negated(&self) -> Literal {
        let mut l = self.clone();
        l.positive = !l.positive;
        l
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    /// Converts a ground literal into a fact, dropping polarity.
    pub fn to_fact(&self) -> Option<Fact> {
        if !self.is_ground() {
            return None;
        }
        Some(Fact {
            pred: self.predicate.clone(),
            args: self.args.iter().map(|t| t.name().to_string()).collect(),
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "(not ")?;
        }
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")?;
        if !self.positive {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A ground positive predicate instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub pred: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(pred: impl Into<String>, args: &[&str]) -> Fact {
        Fact {
            pred: pred.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A set of ground positive fluent facts under closed-world semantics:
/// absence means false.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolicState {
    pub facts: BTreeSet<Fact>,
}

impl SymbolicState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Self {
        SymbolicState {
            facts: facts.into_iter().collect(),
        }
    }

    pub fn holds(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn insert(&mut self, fact: Fact) {
        self.facts.insert(fact);
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// Checks a ground literal against this state (closed world).
    pub fn satisfies(&self, lit: &Literal) -> bool {
        match lit.to_fact() {
            Some(f) => self.holds(&f) == lit.positive,
            None => false,
        }
    }
}

/// A lifted operator. Preconditions are split by polarity and by literal
/// kind: fluent preconditions check the state, static preconditions check
/// the certified/assumed set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    /// `(variable name, declared type name)` pairs.
    pub params: Vec<(String, String)>,
    pub pre_plus: Vec<Literal>,
    pub pre_minus: Vec<Literal>,
    pub eff_plus: Vec<Literal>,
    pub eff_minus: Vec<Literal>,
    /// Static-literal preconditions, positive and negative.
    pub static_pre: Vec<Literal>,
}

impl ActionSchema {
    pub fn param_type(&self, var: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, t)| t.as_str())
    }

    /// Instantiates the schema under a total binding. The binding must map
    /// every parameter; argument types are not re-checked here (grounding
    /// routines enforce them against the object table).
    pub fn ground(&self, binding: &BTreeMap<String, String>) -> Option<GroundAction> {
        let subst = |lits: &[Literal]| -> Option<Vec<Fact>> {
            lits.iter()
                .map(|l| {
                    let args = l
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Const(c) => Some(c.clone()),
                            Term::Var(v) => binding.get(v).cloned(),
                        })
                        .collect::<Option<Vec<_>>>()?;
                    Some(Fact {
                        pred: l.predicate.clone(),
                        args,
                    })
                })
                .collect()
        };
        let pos_of = |lits: &[Literal], want_positive: bool| -> Vec<Literal> {
            lits.iter()
                .filter(|l| l.positive == want_positive)
                .cloned()
                .collect()
        };
        let args = self
            .params
            .iter()
            .map(|(v, _)| binding.get(v).cloned())
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAction {
            schema: self.name.clone(),
            args,
            binding: binding.clone(),
            pre_plus: subst(&self.pre_plus)?,
            pre_minus: subst(&self.pre_minus)?,
            eff_plus: subst(&self.eff_plus)?,
            eff_minus: subst(&self.eff_minus)?,
            static_plus: subst(&pos_of(&self.static_pre, true))?,
            static_minus: subst(&pos_of(&self.static_pre, false))?,
        })
    }
}

/// A fully instantiated action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema: String,
    /// Arguments in schema parameter order.
    pub args: Vec<String>,
    pub binding: BTreeMap<String, String>,
    pub pre_plus: Vec<Fact>,
    pub pre_minus: Vec<Fact>,
    pub eff_plus: Vec<Fact>,
    pub eff_minus: Vec<Fact>,
    pub static_plus: Vec<Fact>,
    pub static_minus: Vec<Fact>,
}

impl GroundAction {
    /// `name(arg1 arg2 ...)` used in reports and tie-breaking.
    pub fn signature(&self) -> String {
        let mut s = self.schema.clone();
        s.push('(');
        s.push_str(&self.args.join(" "));
        s.push(')');
        s
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signature())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanProvenance {
    Initial,
    Repair,
}

/// An ordered sequence of ground actions. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
    pub provenance: PlanProvenance,
}

impl Plan {
    pub fn empty(provenance: PlanProvenance) -> Plan {
        Plan {
            steps: Vec::new(),
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A planning problem: typed objects, an initial state, and goal literals.
/// Static facts listed in `:init` are kept apart from the fluent state
/// because applicability never reads statics from the state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain_name: String,
    /// Object name -> declared type name.
    pub objects: BTreeMap<String, String>,
    pub init: SymbolicState,
    /// Static facts given directly in `:init`.
    pub init_static: BTreeSet<Fact>,
    /// Ground goal literals, positive or negative.
    pub goal: Vec<Literal>,
}

impl Problem {
    pub fn objects_of_type(&self, type_name: &str) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, t)| t.as_str() == type_name)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// A parsed domain: declared types, the predicate table with kind
/// classification, action schemas, and the derived logical-state predicate
/// list (fluents free of geometric parameters, usable as task goals).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub types: Vec<String>,
    pub predicates: BTreeMap<String, Predicate>,
    pub actions: Vec<ActionSchema>,
    pub logical_state_predicates: Vec<String>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.get(name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn is_logical_state(&self, predicate: &str) -> bool {
        self.logical_state_predicates.iter().any(|p| p == predicate)
    }

    /// Builds a ground literal, resolving kind and checking arity against
    /// the predicate table.
    pub fn ground_literal(
        &self,
        predicate: &str,
        args: &[&str],
        positive: bool,
    ) -> crate::error::Result<Literal> {
        let pred = self
            .predicate(predicate)
            .ok_or_else(|| crate::error::PddlError::UnknownPredicate(predicate.to_string()))?;
        if pred.arity() != args.len() {
            return Err(crate::error::PddlError::ArityMismatch {
                predicate: predicate.to_string(),
                expected: pred.arity(),
                got: args.len(),
            });
        }
        Ok(Literal {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| Term::Const(a.to_string())).collect(),
            positive,
            kind: pred.kind,
        })
    }
}

/// A stream declaration: a conditional-sampler signature at the PDDL level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    /// `(variable, declared type name)` for inputs; types inferred from
    /// unary-type literals in `:domain`.
    pub inputs: Vec<(String, String)>,
    /// Non-type static literals over the inputs.
    pub domain_literals: Vec<Literal>,
    pub outputs: Vec<(String, String)>,
    /// Static literals over inputs and outputs, including unary-type
    /// literals typing the outputs.
    pub certified: Vec<Literal>,
}

impl StreamSpec {
    /// Certified literals that are not unary-type literals.
    pub fn certified_relations(&self) -> impl Iterator<Item = &Literal> {
        self.certified.iter().filter(|l| l.kind != PredKind::UnaryType)
    }

    pub fn output_type(&self, var: &str) -> Option<&str> {
        self.outputs
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, t)| t.as_str())
    }
}

/// Outcome of validating a plan against a problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    /// Index of the first inapplicable step, if any.
    pub failing_step: Option<usize>,
    /// Goal literals unsatisfied in the final state.
    pub missing_goal_literals: Vec<Literal>,
}

impl ValidationReport {
    pub fn ok() -> Self {
        ValidationReport {
            ok: true,
            failing_step: None,
            missing_goal_literals: Vec::new(),
        }
    }
}
