//! Readers for the three dialect files: `domain.pddl`, `problem.pddl` and
//! `stream.pddl`.
//!
//! The dialect is typed STRIPS with negative preconditions. Identifiers are
//! case-insensitive and normalized to lower case. Predicate kinds are
//! classified after the whole domain is read: a predicate is fluent iff it
//! appears in some action effect, static otherwise; each declared type also
//! introduces an arity-1 unary-type predicate usable in stream sections.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{PddlError, Result};
use crate::sexp::{parse_one, syntax, Pos, Sexp};
use crate::types::{
    ActionSchema, Domain, Fact, Literal, PredKind, Predicate, Problem, SemType, StreamSpec,
    SymbolicState, Term,
};

fn norm(s: &str) -> String {
    s.to_ascii_lowercase()
}

fn is_keyword(atom: &str, kw: &str) -> bool {
    atom.eq_ignore_ascii_case(kw)
}

/// A `(a b - t c d - u)` style typed list. `require_type` controls whether a
/// bare untyped tail is accepted (predicates allow it, action parameters
/// and objects require types).
fn parse_typed_list(items: &[Sexp], pos: Pos, what: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let atom = items[i].expect_atom(what)?;
        if atom == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(pos, "a type name after `-`"))?
                .expect_atom("a type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "a name before `-`"));
            }
            for name in pending.drain(..) {
                out.push((name, norm(ty)));
            }
            i += 2;
        } else {
            pending.push(norm(atom));
            i += 1;
        }
    }
    for name in pending {
        out.push((name, String::new()));
    }
    Ok(out)
}

fn parse_var(atom: &str, pos: Pos) -> Result<String> {
    let Some(stripped) = atom.strip_prefix('?') else {
        return Err(syntax(pos, "a variable starting with `?`"));
    };
    if stripped.is_empty() {
        return Err(syntax(pos, "a variable name after `?`"));
    }
    Ok(norm(stripped))
}

/// Raw literal before kind resolution.
#[derive(Debug, Clone)]
struct RawLiteral {
    predicate: String,
    args: Vec<Term>,
    positive: bool,
    pos: Pos,
}

fn parse_raw_literal(sexp: &Sexp, positive: bool) -> Result<RawLiteral> {
    let items = sexp.expect_list("a literal `(pred args...)`")?;
    if items.is_empty() {
        return Err(syntax(sexp.pos(), "a predicate name"));
    }
    let head = items[0].expect_atom("a predicate name")?;
    if is_keyword(head, "not") {
        if items.len() != 2 {
            return Err(syntax(sexp.pos(), "exactly one literal inside `(not ...)`"));
        }
        if !positive {
            return Err(syntax(sexp.pos(), "no doubly-negated literal"));
        }
        return parse_raw_literal(&items[1], false);
    }
    let mut args = Vec::new();
    for item in &items[1..] {
        let atom = item.expect_atom("a term")?;
        if let Some(v) = atom.strip_prefix('?') {
            if v.is_empty() {
                return Err(syntax(item.pos(), "a variable name after `?`"));
            }
            args.push(Term::Var(norm(v)));
        } else {
            args.push(Term::Const(norm(atom)));
        }
    }
    Ok(RawLiteral {
        predicate: norm(head),
        args,
        positive,
        pos: sexp.pos(),
    })
}

fn parse_condition(sexp: &Sexp) -> Result<Vec<RawLiteral>> {
    let items = sexp.expect_list("a condition")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if items[0].as_atom().is_some_and(|a| is_keyword(a, "and")) {
        let mut out = Vec::new();
        for item in &items[1..] {
            out.push(parse_raw_literal(item, true)?);
        }
        return Ok(out);
    }
    Ok(vec![parse_raw_literal(sexp, true)?])
}

struct RawAction {
    name: String,
    params: Vec<(String, String)>,
    precondition: Vec<RawLiteral>,
    effect: Vec<RawLiteral>,
}

fn expect_section_head<'a>(items: &'a [Sexp], expected: &str) -> Result<&'a str> {
    let head = items
        .first()
        .ok_or_else(|| {
            syntax(
                Pos { line: 0, col: 0 },
                format!("a `{expected}` section head"),
            )
        })?
        .expect_atom(expected)?;
    Ok(head)
}

/// Parses domain text and classifies every predicate.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let root = parse_one(text)?;
    let items = root.expect_list("(define (domain ...) ...)")?;
    if items.is_empty() || !items[0].as_atom().is_some_and(|a| is_keyword(a, "define")) {
        return Err(syntax(root.pos(), "`define`"));
    }
    let head = items
        .get(1)
        .ok_or_else(|| syntax(root.pos(), "(domain <name>)"))?
        .expect_list("(domain <name>)")?;
    if head.len() != 2 || !head[0].as_atom().is_some_and(|a| is_keyword(a, "domain")) {
        return Err(syntax(items[1].pos(), "(domain <name>)"));
    }
    let name = norm(head[1].expect_atom("a domain name")?);

    let mut types: Vec<String> = Vec::new();
    let mut pred_decls: Vec<(String, Vec<(String, String)>, Pos)> = Vec::new();
    let mut raw_actions: Vec<RawAction> = Vec::new();

    for section in &items[2..] {
        let sec_items = section.expect_list("a domain section")?;
        let head = expect_section_head(sec_items, "a section keyword")?;
        match norm(head).as_str() {
            ":requirements" => {} // informative only in this dialect
            ":types" => {
                for item in &sec_items[1..] {
                    let atom = item.expect_atom("a type name")?;
                    if atom == "-" {
                        return Err(syntax(item.pos(), "a flat type list (no hierarchy)"));
                    }
                    let t = norm(atom);
                    if types.contains(&t) {
                        return Err(PddlError::DuplicateName(t));
                    }
                    types.push(t);
                }
            }
            ":predicates" => {
                for item in &sec_items[1..] {
                    let decl = item.expect_list("a predicate declaration")?;
                    if decl.is_empty() {
                        return Err(syntax(item.pos(), "a predicate name"));
                    }
                    let pname = norm(decl[0].expect_atom("a predicate name")?);
                    let params = parse_typed_list(&decl[1..], item.pos(), "a parameter")?;
                    pred_decls.push((pname, params, item.pos()));
                }
            }
            ":action" => {
                raw_actions.push(parse_action(sec_items, section.pos())?);
            }
            other => {
                return Err(syntax(
                    section.pos(),
                    format!("one of :requirements/:types/:predicates/:action, got `{other}`"),
                ));
            }
        }
    }

    build_domain(name, types, pred_decls, raw_actions)
}

fn parse_action(items: &[Sexp], pos: Pos) -> Result<RawAction> {
    let name = norm(
        items
            .get(1)
            .ok_or_else(|| syntax(pos, "an action name"))?
            .expect_atom("an action name")?,
    );
    let mut params = Vec::new();
    let mut precondition = Vec::new();
    let mut effect = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = norm(items[i].expect_atom("an action keyword")?);
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("a value after {key}")))?;
        match key.as_str() {
            ":parameters" => {
                let list = value.expect_list("a parameter list")?;
                let raw = parse_typed_list(list, value.pos(), "a parameter")?;
                for (v, t) in raw {
                    let var = v
                        .strip_prefix('?')
                        .map(str::to_string)
                        .ok_or_else(|| syntax(value.pos(), "parameters starting with `?`"))?;
                    if t.is_empty() {
                        return Err(syntax(value.pos(), "a type for every parameter"));
                    }
                    params.push((var, t));
                }
            }
            ":precondition" => precondition = parse_condition(value)?,
            ":effect" => effect = parse_condition(value)?,
            other => {
                return Err(syntax(
                    items[i].pos(),
                    format!("one of :parameters/:precondition/:effect, got `{other}`"),
                ));
            }
        }
        i += 2;
    }
    Ok(RawAction {
        name,
        params,
        precondition,
        effect,
    })
}

fn build_domain(
    name: String,
    types: Vec<String>,
    pred_decls: Vec<(String, Vec<(String, String)>, Pos)>,
    raw_actions: Vec<RawAction>,
) -> Result<Domain> {
    // Effects determine fluency.
    let mut effect_preds: BTreeSet<String> = BTreeSet::new();
    for action in &raw_actions {
        for lit in &action.effect {
            effect_preds.insert(lit.predicate.clone());
        }
    }

    let mut predicates: BTreeMap<String, Predicate> = BTreeMap::new();
    // Unary-type predicates for declared types, e.g. (conf ?q).
    for t in &types {
        predicates.insert(
            t.clone(),
            Predicate {
                name: t.clone(),
                param_types: vec![SemType::from_type_name(t)],
                param_type_names: vec![t.clone()],
                kind: PredKind::UnaryType,
            },
        );
    }
    for (pname, params, _pos) in &pred_decls {
        if predicates.contains_key(pname) {
            return Err(PddlError::DuplicateName(pname.clone()));
        }
        let mut param_types = Vec::new();
        let mut param_type_names = Vec::new();
        for (_, t) in params {
            if !t.is_empty() && !types.contains(t) {
                return Err(PddlError::UnknownType(t.clone()));
            }
            param_types.push(if t.is_empty() {
                SemType::Plain
            } else {
                SemType::from_type_name(t)
            });
            param_type_names.push(t.clone());
        }
        let kind = if effect_preds.contains(pname) {
            PredKind::Fluent
        } else {
            PredKind::Static
        };
        predicates.insert(
            pname.clone(),
            Predicate {
                name: pname.clone(),
                param_types,
                param_type_names,
                kind,
            },
        );
    }

    // Resolve raw actions against the predicate table.
    let mut actions = Vec::new();
    let mut action_names = BTreeSet::new();
    for raw in &raw_actions {
        if !action_names.insert(raw.name.clone()) {
            return Err(PddlError::DuplicateName(raw.name.clone()));
        }
        for (_, t) in &raw.params {
            if !types.contains(t) {
                return Err(PddlError::UnknownType(t.clone()));
            }
        }
        let resolve = |raw_lits: &[RawLiteral]| -> Result<Vec<Literal>> {
            raw_lits
                .iter()
                .map(|rl| {
                    let pred = predicates
                        .get(&rl.predicate)
                        .ok_or_else(|| PddlError::UnknownPredicate(rl.predicate.clone()))?;
                    if pred.arity() != rl.args.len() {
                        return Err(PddlError::ArityMismatch {
                            predicate: rl.predicate.clone(),
                            expected: pred.arity(),
                            got: rl.args.len(),
                        });
                    }
                    for arg in &rl.args {
                        if let Term::Var(v) = arg {
                            if !raw.params.iter().any(|(p, _)| p == v) {
                                return Err(syntax(
                                    rl.pos,
                                    format!("parameter `?{v}` declared in :parameters"),
                                ));
                            }
                        }
                    }
                    Ok(Literal {
                        predicate: rl.predicate.clone(),
                        args: rl.args.clone(),
                        positive: rl.positive,
                        kind: pred.kind,
                    })
                })
                .collect()
        };
        let pre = resolve(&raw.precondition)?;
        let eff = resolve(&raw.effect)?;
        for lit in &eff {
            if lit.kind != PredKind::Fluent {
                // cannot happen by construction (effects make a predicate
                // fluent); keep as a guard for programmatic domains
                return Err(PddlError::UnknownPredicate(lit.predicate.clone()));
            }
        }
        let mut schema = ActionSchema {
            name: raw.name.clone(),
            params: raw.params.clone(),
            pre_plus: Vec::new(),
            pre_minus: Vec::new(),
            eff_plus: Vec::new(),
            eff_minus: Vec::new(),
            static_pre: Vec::new(),
        };
        for lit in pre {
            match (lit.kind, lit.positive) {
                (PredKind::Fluent, true) => schema.pre_plus.push(lit),
                (PredKind::Fluent, false) => schema.pre_minus.push(lit),
                _ => schema.static_pre.push(lit),
            }
        }
        for lit in eff {
            if lit.positive {
                schema.eff_plus.push(lit);
            } else {
                schema.eff_minus.push(lit);
            }
        }
        actions.push(schema);
    }

    // Logical-state predicates: fluents whose parameters all lack geometric
    // payloads. These are the predicates valid in task goals.
    let logical_state_predicates = predicates
        .values()
        .filter(|p| {
            p.kind == PredKind::Fluent && p.param_types.iter().all(|t| !t.carries_geometry())
        })
        .map(|p| p.name.clone())
        .collect();

    Ok(Domain {
        name,
        types,
        predicates,
        actions,
        logical_state_predicates,
    })
}

/// Parses problem text against an already-parsed domain.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem> {
    let root = parse_one(text)?;
    let items = root.expect_list("(define (problem ...) ...)")?;
    if items.is_empty() || !items[0].as_atom().is_some_and(|a| is_keyword(a, "define")) {
        return Err(syntax(root.pos(), "`define`"));
    }
    let head = items
        .get(1)
        .ok_or_else(|| syntax(root.pos(), "(problem <name>)"))?
        .expect_list("(problem <name>)")?;
    if head.len() != 2 || !head[0].as_atom().is_some_and(|a| is_keyword(a, "problem")) {
        return Err(syntax(items[1].pos(), "(problem <name>)"));
    }
    let name = norm(head[1].expect_atom("a problem name")?);

    let mut domain_name = String::new();
    let mut objects: BTreeMap<String, String> = BTreeMap::new();
    let mut init = SymbolicState::new();
    let mut init_static: BTreeSet<Fact> = BTreeSet::new();
    let mut goal: Vec<Literal> = Vec::new();

    for section in &items[2..] {
        let sec_items = section.expect_list("a problem section")?;
        let head = expect_section_head(sec_items, "a section keyword")?;
        match norm(head).as_str() {
            ":domain" => {
                domain_name = norm(
                    sec_items
                        .get(1)
                        .ok_or_else(|| syntax(section.pos(), "a domain name"))?
                        .expect_atom("a domain name")?,
                );
            }
            ":objects" => {
                let decls = parse_typed_list(&sec_items[1..], section.pos(), "an object")?;
                for (obj, ty) in decls {
                    if ty.is_empty() {
                        return Err(syntax(section.pos(), "a type for every object"));
                    }
                    if !domain.types.contains(&ty) {
                        return Err(PddlError::UnknownType(ty));
                    }
                    if objects.insert(obj.clone(), ty).is_some() {
                        return Err(PddlError::DuplicateName(obj));
                    }
                }
            }
            ":init" => {
                for item in &sec_items[1..] {
                    let raw = parse_raw_literal(item, true)?;
                    if !raw.positive {
                        return Err(syntax(item.pos(), "only positive facts in :init"));
                    }
                    let lit = resolve_ground(domain, &objects, &raw)?;
                    let fact = lit.to_fact().expect("init literals are ground");
                    match lit.kind {
                        PredKind::Fluent => init.insert(fact),
                        _ => {
                            init_static.insert(fact);
                        }
                    }
                }
            }
            ":goal" => {
                let cond = sec_items
                    .get(1)
                    .ok_or_else(|| syntax(section.pos(), "a goal condition"))?;
                for raw in parse_condition(cond)? {
                    goal.push(resolve_ground(domain, &objects, &raw)?);
                }
            }
            other => {
                return Err(syntax(
                    section.pos(),
                    format!("one of :domain/:objects/:init/:goal, got `{other}`"),
                ));
            }
        }
    }

    Ok(Problem {
        name,
        domain_name,
        objects,
        init,
        init_static,
        goal,
    })
}

fn resolve_ground(
    domain: &Domain,
    objects: &BTreeMap<String, String>,
    raw: &RawLiteral,
) -> Result<Literal> {
    let pred = domain
        .predicate(&raw.predicate)
        .ok_or_else(|| PddlError::UnknownPredicate(raw.predicate.clone()))?;
    if pred.arity() != raw.args.len() {
        return Err(PddlError::ArityMismatch {
            predicate: raw.predicate.clone(),
            expected: pred.arity(),
            got: raw.args.len(),
        });
    }
    for arg in &raw.args {
        match arg {
            Term::Var(v) => {
                return Err(syntax(raw.pos, format!("a constant, got variable `?{v}`")));
            }
            Term::Const(c) => {
                if !objects.contains_key(c) {
                    return Err(PddlError::UnknownObject(c.clone()));
                }
            }
        }
    }
    Ok(Literal {
        predicate: raw.predicate.clone(),
        args: raw.args.clone(),
        positive: raw.positive,
        kind: pred.kind,
    })
}

/// Parses stream declarations against an already-parsed domain.
pub fn parse_streams(text: &str, domain: &Domain) -> Result<Vec<StreamSpec>> {
    let root = parse_one(text)?;
    let items = root.expect_list("(define (stream ...) ...)")?;
    if items.is_empty() || !items[0].as_atom().is_some_and(|a| is_keyword(a, "define")) {
        return Err(syntax(root.pos(), "`define`"));
    }
    let head = items
        .get(1)
        .ok_or_else(|| syntax(root.pos(), "(stream <name>)"))?
        .expect_list("(stream <name>)")?;
    if head.len() != 2 || !head[0].as_atom().is_some_and(|a| is_keyword(a, "stream")) {
        return Err(syntax(items[1].pos(), "(stream <name>)"));
    }

    let mut specs = Vec::new();
    let mut names = BTreeSet::new();
    for section in &items[2..] {
        let sec_items = section.expect_list("a :stream declaration")?;
        let head = expect_section_head(sec_items, ":stream")?;
        if !is_keyword(head, ":stream") {
            return Err(syntax(section.pos(), "`:stream`"));
        }
        let spec = parse_stream_decl(sec_items, section.pos(), domain)?;
        if !names.insert(spec.name.clone()) {
            return Err(PddlError::DuplicateName(spec.name));
        }
        specs.push(spec);
    }
    Ok(specs)
}

fn parse_stream_decl(items: &[Sexp], pos: Pos, domain: &Domain) -> Result<StreamSpec> {
    let name = norm(
        items
            .get(1)
            .ok_or_else(|| syntax(pos, "a stream name"))?
            .expect_atom("a stream name")?,
    );
    let mut input_vars: Vec<String> = Vec::new();
    let mut output_vars: Vec<String> = Vec::new();
    let mut domain_raw: Vec<RawLiteral> = Vec::new();
    let mut certified_raw: Vec<RawLiteral> = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = norm(items[i].expect_atom("a stream keyword")?);
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("a value after {key}")))?;
        match key.as_str() {
            ":inputs" => {
                for v in value.expect_list("a variable list")? {
                    input_vars.push(parse_var(v.expect_atom("a variable")?, v.pos())?);
                }
            }
            ":outputs" => {
                for v in value.expect_list("a variable list")? {
                    output_vars.push(parse_var(v.expect_atom("a variable")?, v.pos())?);
                }
            }
            ":domain" => domain_raw = parse_condition(value)?,
            ":certified" => certified_raw = parse_condition(value)?,
            other => {
                return Err(syntax(
                    items[i].pos(),
                    format!("one of :inputs/:domain/:outputs/:certified, got `{other}`"),
                ));
            }
        }
        i += 2;
    }

    for v in &output_vars {
        if input_vars.contains(v) {
            return Err(PddlError::OutputMentionedInDomain {
                stream: name.clone(),
                var: v.clone(),
            });
        }
    }

    let resolve = |raw: &RawLiteral| -> Result<Literal> {
        let pred = domain
            .predicate(&raw.predicate)
            .ok_or_else(|| PddlError::UnknownPredicate(raw.predicate.clone()))?;
        if pred.kind == PredKind::Fluent {
            return Err(PddlError::UnknownPredicate(format!(
                "{} (fluent predicates cannot appear in streams)",
                raw.predicate
            )));
        }
        if pred.arity() != raw.args.len() {
            return Err(PddlError::ArityMismatch {
                predicate: raw.predicate.clone(),
                expected: pred.arity(),
                got: raw.args.len(),
            });
        }
        if !raw.positive {
            return Err(syntax(raw.pos, "a positive literal in stream sections"));
        }
        Ok(Literal {
            predicate: raw.predicate.clone(),
            args: raw.args.clone(),
            positive: true,
            kind: pred.kind,
        })
    };

    // Split :domain into type declarations for inputs vs relational literals;
    // outputs must not be mentioned in :domain.
    let mut input_types: BTreeMap<String, String> = BTreeMap::new();
    let mut domain_literals = Vec::new();
    for raw in &domain_raw {
        let lit = resolve(raw)?;
        for arg in &lit.args {
            match arg {
                Term::Var(v) => {
                    if output_vars.contains(v) {
                        return Err(PddlError::OutputMentionedInDomain {
                            stream: name.clone(),
                            var: v.clone(),
                        });
                    }
                    if !input_vars.contains(v) {
                        return Err(syntax(raw.pos, format!("input variable, got `?{v}`")));
                    }
                }
                Term::Const(_) => {}
            }
        }
        if lit.kind == PredKind::UnaryType {
            if let Term::Var(v) = &lit.args[0] {
                input_types.insert(v.clone(), lit.predicate.clone());
            }
        } else {
            domain_literals.push(lit);
        }
    }

    let mut output_types: BTreeMap<String, String> = BTreeMap::new();
    let mut certified = Vec::new();
    let mut outputs_used: BTreeSet<String> = BTreeSet::new();
    for raw in &certified_raw {
        let lit = resolve(raw)?;
        let mut mentions_output = false;
        for arg in &lit.args {
            if let Term::Var(v) = arg {
                if output_vars.contains(v) {
                    mentions_output = true;
                    outputs_used.insert(v.clone());
                } else if !input_vars.contains(v) {
                    return Err(syntax(
                        raw.pos,
                        format!("an input or output variable, got `?{v}`"),
                    ));
                }
            }
        }
        if !mentions_output {
            return Err(PddlError::OutputUnused {
                stream: name.clone(),
                detail: format!("certified literal {lit} mentions no output"),
            });
        }
        if lit.kind == PredKind::UnaryType {
            if let Term::Var(v) = &lit.args[0] {
                if output_vars.contains(v) {
                    output_types.insert(v.clone(), lit.predicate.clone());
                }
            }
        }
        certified.push(lit);
    }
    for v in &output_vars {
        if !outputs_used.contains(v) {
            return Err(PddlError::OutputUnused {
                stream: name.clone(),
                detail: format!("output `?{v}` never appears in :certified"),
            });
        }
    }

    let inputs = input_vars
        .iter()
        .map(|v| (v.clone(), input_types.get(v).cloned().unwrap_or_default()))
        .collect();
    let outputs = output_vars
        .iter()
        .map(|v| (v.clone(), output_types.get(v).cloned().unwrap_or_default()))
        .collect();
    Ok(StreamSpec {
        name,
        inputs,
        domain_literals,
        outputs,
        certified,
    })
}
