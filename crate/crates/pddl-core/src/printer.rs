//! Canonical printers for domains, problems and stream files.
//!
//! `parse(print(x))` yields an AST identical to `x`; the round-trip is
//! property-tested. Output is lower-case with one section per line group.

use std::fmt::Write;

use crate::types::{ActionSchema, Domain, Literal, Problem, StreamSpec, Term};

fn write_literal(out: &mut String, lit: &Literal) {
    if !lit.positive {
        out.push_str("(not ");
    }
    out.push('(');
    out.push_str(&lit.predicate);
    for arg in &lit.args {
        match arg {
            Term::Var(v) => {
                let _ = write!(out, " ?{v}");
            }
            Term::Const(c) => {
                let _ = write!(out, " {c}");
            }
        }
    }
    out.push(')');
    if !lit.positive {
        out.push(')');
    }
}

fn write_condition(out: &mut String, lits: &[Literal]) {
    if lits.len() == 1 {
        write_literal(out, &lits[0]);
        return;
    }
    out.push_str("(and");
    for lit in lits {
        out.push(' ');
        write_literal(out, lit);
    }
    out.push(')');
}

fn action_preconditions(schema: &ActionSchema) -> Vec<Literal> {
    let mut pre: Vec<Literal> = Vec::new();
    pre.extend(schema.pre_plus.iter().cloned());
    pre.extend(schema.pre_minus.iter().cloned());
    pre.extend(schema.static_pre.iter().cloned());
    pre
}

pub fn print_domain(domain: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", domain.name);
    if !domain.types.is_empty() {
        let _ = writeln!(out, "  (:types {})", domain.types.join(" "));
    }
    let declared: Vec<_> = domain
        .predicates
        .values()
        .filter(|p| p.kind != crate::types::PredKind::UnaryType)
        .collect();
    if !declared.is_empty() {
        out.push_str("  (:predicates\n");
        for pred in declared {
            out.push_str("    (");
            out.push_str(&pred.name);
            for (i, tname) in pred.param_type_names.iter().enumerate() {
                if tname.is_empty() {
                    let _ = write!(out, " ?x{i}");
                } else {
                    let _ = write!(out, " ?x{i} - {tname}");
                }
            }
            out.push_str(")\n");
        }
        out.push_str("  )\n");
    }
    for action in &domain.actions {
        let _ = writeln!(out, "  (:action {}", action.name);
        out.push_str("    :parameters (");
        for (i, (v, t)) in action.params.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "?{v} - {t}");
        }
        out.push_str(")\n");
        let pre = action_preconditions(action);
        out.push_str("    :precondition ");
        if pre.is_empty() {
            out.push_str("(and)");
        } else {
            write_condition(&mut out, &pre);
        }
        out.push('\n');
        let mut eff: Vec<Literal> = action.eff_plus.clone();
        eff.extend(action.eff_minus.iter().cloned());
        out.push_str("    :effect ");
        if eff.is_empty() {
            out.push_str("(and)");
        } else {
            write_condition(&mut out, &eff);
        }
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(problem: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", problem.name);
    let _ = writeln!(out, "  (:domain {})", problem.domain_name);
    if !problem.objects.is_empty() {
        out.push_str("  (:objects\n");
        for (obj, ty) in &problem.objects {
            let _ = writeln!(out, "    {obj} - {ty}");
        }
        out.push_str("  )\n");
    }
    out.push_str("  (:init\n");
    for fact in problem.init.iter() {
        let _ = writeln!(out, "    {fact}");
    }
    for fact in &problem.init_static {
        let _ = writeln!(out, "    {fact}");
    }
    out.push_str("  )\n");
    out.push_str("  (:goal (and");
    for lit in &problem.goal {
        out.push(' ');
        write_literal(&mut out, lit);
    }
    out.push_str("))\n)\n");
    out
}

pub fn print_streams(name: &str, specs: &[StreamSpec]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (stream {name})");
    for spec in specs {
        let _ = writeln!(out, "  (:stream {}", spec.name);
        out.push_str("    :inputs (");
        for (i, (v, _)) in spec.inputs.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "?{v}");
        }
        out.push_str(")\n");
        let mut domain_lits: Vec<Literal> = Vec::new();
        for (v, t) in &spec.inputs {
            if !t.is_empty() {
                domain_lits.push(Literal {
                    predicate: t.clone(),
                    args: vec![Term::Var(v.clone())],
                    positive: true,
                    kind: crate::types::PredKind::UnaryType,
                });
            }
        }
        domain_lits.extend(spec.domain_literals.iter().cloned());
        out.push_str("    :domain ");
        if domain_lits.is_empty() {
            out.push_str("(and)");
        } else {
            out.push_str("(and");
            for lit in &domain_lits {
                out.push(' ');
                write_literal(&mut out, lit);
            }
            out.push(')');
        }
        out.push('\n');
        out.push_str("    :outputs (");
        for (i, (v, _)) in spec.outputs.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "?{v}");
        }
        out.push_str(")\n");
        out.push_str("    :certified (and");
        for lit in &spec.certified {
            out.push(' ');
            write_literal(&mut out, lit);
        }
        out.push_str("))\n");
    }
    out.push_str(")\n");
    out
}
