//! Canonical XML form of conditional subtrees.
//!
//! The format is bit-stable: attributes are emitted in alphabetical order,
//! elements in fixed structural order, with two-space indentation. The
//! behavior-tree structure round-trips losslessly; the source combined
//! action round-trips at signature level (schema, arguments, binding).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use pddl_core::{Fact, GroundAction};
use planner::CombinedAction;

use crate::exec::CSubBT;
use crate::node::{AtomicKind, BTNode, ConditionSpec, SamplerSpec, SlotSource};

#[derive(Debug, Error, PartialEq)]
pub enum XmlError {
    #[error("malformed xml: {0}")]
    MalformedXml(String),
    #[error("unknown node tag `{0}`")]
    UnknownNodeTag(String),
    #[error("element `{element}` missing attribute `{attr}`")]
    MissingAttr { element: String, attr: String },
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn unescape(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&gt;", ">")
        .replace("&lt;", "<")
        .replace("&amp;", "&")
}

fn slot_source(s: &SlotSource) -> String {
    match s {
        SlotSource::Const(c) => format!("const:{c}"),
        SlotSource::Slot(c) => format!("slot:{c}"),
        SlotSource::LiveBase => "live:base".to_string(),
    }
}

fn parse_slot_source(s: &str) -> Result<SlotSource, XmlError> {
    if s == "live:base" {
        return Ok(SlotSource::LiveBase);
    }
    if let Some(rest) = s.strip_prefix("const:") {
        return Ok(SlotSource::Const(rest.to_string()));
    }
    if let Some(rest) = s.strip_prefix("slot:") {
        return Ok(SlotSource::Slot(rest.to_string()));
    }
    Err(XmlError::MalformedXml(format!("bad slot source `{s}`")))
}

fn fact_text(f: &Fact) -> String {
    if f.args.is_empty() {
        format!("({})", f.pred)
    } else {
        format!("({} {})", f.pred, f.args.join(" "))
    }
}

fn parse_fact(s: &str) -> Result<Fact, XmlError> {
    let inner = s
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| XmlError::MalformedXml(format!("bad fact `{s}`")))?;
    let mut parts = inner.split_whitespace();
    let pred = parts
        .next()
        .ok_or_else(|| XmlError::MalformedXml("empty fact".into()))?;
    Ok(Fact {
        pred: pred.to_string(),
        args: parts.map(String::from).collect(),
    })
}

fn write_element(
    out: &mut String,
    depth: usize,
    name: &str,
    attrs: &BTreeMap<String, String>,
    children: impl FnOnce(&mut String) -> bool,
) {
    let pad = "  ".repeat(depth);
    let _ = write!(out, "{pad}<{name}");
    for (k, v) in attrs {
        let _ = write!(out, " {k}=\"{}\"", escape(v));
    }
    let mut inner = String::new();
    let has_children = children(&mut inner);
    if has_children {
        let _ = writeln!(out, ">");
        out.push_str(&inner);
        let _ = writeln!(out, "{pad}</{name}>");
    } else {
        let _ = writeln!(out, "/>");
    }
}

fn node_to_xml(node: &BTNode, depth: usize, out: &mut String) {
    match node {
        BTNode::Sequence(children) => {
            write_element(out, depth, "Sequence", &BTreeMap::new(), |inner| {
                for c in children {
                    node_to_xml(c, depth + 1, inner);
                }
                !children.is_empty()
            });
        }
        BTNode::Fallback(children) => {
            write_element(out, depth, "Fallback", &BTreeMap::new(), |inner| {
                for c in children {
                    node_to_xml(c, depth + 1, inner);
                }
                !children.is_empty()
            });
        }
        BTNode::Condition(spec) => {
            let mut attrs = BTreeMap::new();
            match spec {
                ConditionSpec::StreamCheck {
                    stream,
                    region,
                    inputs,
                    outputs,
                    constraint,
                } => {
                    attrs.insert("kind".into(), "stream-check".into());
                    attrs.insert("stream".into(), stream.clone());
                    attrs.insert("region".into(), region.clone());
                    attrs.insert(
                        "inputs".into(),
                        inputs.iter().map(slot_source).collect::<Vec<_>>().join(","),
                    );
                    attrs.insert(
                        "outputs".into(),
                        outputs
                            .iter()
                            .map(|(src, slot)| format!("{}>{slot}", slot_source(src)))
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
                ConditionSpec::Detect {
                    object,
                    region,
                    bind_pose,
                    vantage,
                    constraint,
                } => {
                    attrs.insert("kind".into(), "detect".into());
                    attrs.insert("object".into(), object.clone());
                    attrs.insert("region".into(), region.clone());
                    attrs.insert("bind".into(), bind_pose.clone());
                    if let Some(v) = vantage {
                        attrs.insert("vantage".into(), slot_source(v));
                    }
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
                ConditionSpec::Holding {
                    object,
                    positive,
                    constraint,
                } => {
                    attrs.insert("kind".into(), "holding".into());
                    attrs.insert("object".into(), object.clone());
                    attrs.insert("positive".into(), positive.to_string());
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
                ConditionSpec::OnObserved {
                    object,
                    region,
                    constraint,
                } => {
                    attrs.insert("kind".into(), "on-observed".into());
                    attrs.insert("object".into(), object.clone());
                    attrs.insert("region".into(), region.clone());
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
                ConditionSpec::ScannedFlag { region, constraint } => {
                    attrs.insert("kind".into(), "scanned".into());
                    attrs.insert("region".into(), region.clone());
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
                ConditionSpec::Flag {
                    object,
                    flag,
                    positive,
                    constraint,
                } => {
                    attrs.insert("kind".into(), "flag".into());
                    attrs.insert("object".into(), object.clone());
                    attrs.insert("flag".into(), flag.clone());
                    attrs.insert("positive".into(), positive.to_string());
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
                ConditionSpec::NearRegion {
                    region,
                    slack,
                    constraint,
                } => {
                    attrs.insert("kind".into(), "near-region".into());
                    attrs.insert("region".into(), region.clone());
                    attrs.insert("slack".into(), slack.to_string());
                    attrs.insert("constraint".into(), fact_text(constraint));
                }
            }
            write_element(out, depth, "Condition", &attrs, |_| false);
        }
        BTNode::Sampler(spec) => {
            let mut attrs = BTreeMap::new();
            attrs.insert("stream".into(), spec.stream.clone());
            attrs.insert(
                "inputs".into(),
                spec.inputs
                    .iter()
                    .map(slot_source)
                    .collect::<Vec<_>>()
                    .join(","),
            );
            attrs.insert("outputs".into(), spec.outputs.join(","));
            attrs.insert("constraint".into(), fact_text(&spec.constraint));
            if let Some(planned) = &spec.planned {
                attrs.insert("planned".into(), slot_source(planned));
            }
            if let Some(region) = &spec.perceive_region {
                attrs.insert("perceive".into(), region.clone());
            }
            write_element(out, depth, "Sampler", &attrs, |_| false);
        }
        BTNode::Action { kind, constraint } => {
            let mut attrs = BTreeMap::new();
            attrs.insert("kind".into(), kind.name().to_string());
            attrs.insert("constraint".into(), fact_text(constraint));
            match kind {
                AtomicKind::MoveBase { target, traj } => {
                    attrs.insert("target".into(), slot_source(target));
                    attrs.insert("traj".into(), slot_source(traj));
                }
                AtomicKind::PreApproach { grasp } => {
                    attrs.insert("grasp".into(), slot_source(grasp));
                }
                AtomicKind::Approach { pose } => {
                    attrs.insert("pose".into(), slot_source(pose));
                }
                AtomicKind::Grasp { object } => {
                    attrs.insert("object".into(), object.clone());
                }
                AtomicKind::Release { object, pose } => {
                    attrs.insert("object".into(), object.clone());
                    attrs.insert("pose".into(), slot_source(pose));
                }
                AtomicKind::Scan { region } => {
                    attrs.insert("region".into(), region.clone());
                }
                AtomicKind::Toggle { region } => {
                    attrs.insert("region".into(), region.clone());
                }
            }
            write_element(out, depth, "Action", &attrs, |_| false);
        }
    }
}

/// Serializes a tree into canonical XML.
pub fn serialize_tree(tree: &CSubBT) -> String {
    let mut out = String::new();
    let mut attrs = BTreeMap::new();
    attrs.insert("action".into(), tree.source.name.clone());
    attrs.insert("template".into(), tree.source.template.clone());
    write_element(&mut out, 0, "CSubBT", &attrs, |inner| {
        for step in &tree.source.constituents {
            let mut sa = BTreeMap::new();
            sa.insert("schema".into(), step.schema.clone());
            sa.insert("args".into(), step.args.join(" "));
            sa.insert(
                "binding".into(),
                step.binding
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            write_element(inner, 1, "Step", &sa, |_| false);
        }
        node_to_xml(&tree.root, 1, inner);
        true
    });
    out
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Element {
    name: String,
    attrs: BTreeMap<String, String>,
    children: Vec<Element>,
}

struct Parser<'a> {
    src: &'a [u8],
    i: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> XmlError {
        XmlError::MalformedXml(format!("{msg} at byte {}", self.i))
    }

    fn skip_ws(&mut self) {
        while self.i < self.src.len() && self.src[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), XmlError> {
        if self.src.get(self.i) == Some(&b) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", b as char)))
        }
    }

    fn ident(&mut self) -> Result<String, XmlError> {
        let start = self.i;
        while self
            .src
            .get(self.i)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'-' || *b == b'_')
        {
            self.i += 1;
        }
        if self.i == start {
            return Err(self.err("expected an identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.i]).into_owned())
    }

    fn element(&mut self) -> Result<Element, XmlError> {
        self.skip_ws();
        self.expect(b'<')?;
        let name = self.ident()?;
        let mut attrs = BTreeMap::new();
        loop {
            self.skip_ws();
            match self.src.get(self.i) {
                Some(b'/') => {
                    self.i += 1;
                    self.expect(b'>')?;
                    return Ok(Element {
                        name,
                        attrs,
                        children: Vec::new(),
                    });
                }
                Some(b'>') => {
                    self.i += 1;
                    break;
                }
                Some(_) => {
                    let key = self.ident()?;
                    self.expect(b'=')?;
                    self.expect(b'"')?;
                    let start = self.i;
                    while self.src.get(self.i).is_some_and(|b| *b != b'"') {
                        self.i += 1;
                    }
                    let raw = String::from_utf8_lossy(&self.src[start..self.i]).into_owned();
                    self.expect(b'"')?;
                    attrs.insert(key, unescape(&raw));
                }
                None => return Err(self.err("unexpected end of input")),
            }
        }
        // children until the closing tag
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            if self.src.get(self.i) == Some(&b'<') && self.src.get(self.i + 1) == Some(&b'/') {
                self.i += 2;
                let close = self.ident()?;
                if close != name {
                    return Err(self.err(&format!("mismatched </{close}> for <{name}>")));
                }
                self.expect(b'>')?;
                return Ok(Element {
                    name,
                    attrs,
                    children,
                });
            }
            children.push(self.element()?);
        }
    }
}

fn attr(e: &Element, key: &str) -> Result<String, XmlError> {
    e.attrs.get(key).cloned().ok_or_else(|| XmlError::MissingAttr {
        element: e.name.clone(),
        attr: key.to_string(),
    })
}

fn parse_sources(s: &str) -> Result<Vec<SlotSource>, XmlError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_slot_source).collect()
}

fn node_from_element(e: &Element) -> Result<BTNode, XmlError> {
    match e.name.as_str() {
        "Sequence" => Ok(BTNode::Sequence(
            e.children
                .iter()
                .map(node_from_element)
                .collect::<Result<_, _>>()?,
        )),
        "Fallback" => Ok(BTNode::Fallback(
            e.children
                .iter()
                .map(node_from_element)
                .collect::<Result<_, _>>()?,
        )),
        "Sampler" => Ok(BTNode::Sampler(SamplerSpec {
            stream: attr(e, "stream")?,
            inputs: parse_sources(&attr(e, "inputs")?)?,
            outputs: {
                let raw = attr(e, "outputs")?;
                if raw.is_empty() {
                    Vec::new()
                } else {
                    raw.split(',').map(String::from).collect()
                }
            },
            constraint: parse_fact(&attr(e, "constraint")?)?,
            planned: match e.attrs.get("planned") {
                Some(p) => Some(parse_slot_source(p)?),
                None => None,
            },
            perceive_region: e.attrs.get("perceive").cloned(),
        })),
        "Condition" => {
            let kind = attr(e, "kind")?;
            let constraint = parse_fact(&attr(e, "constraint")?)?;
            let spec = match kind.as_str() {
                "stream-check" => ConditionSpec::StreamCheck {
                    stream: attr(e, "stream")?,
                    region: attr(e, "region")?,
                    inputs: parse_sources(&attr(e, "inputs")?)?,
                    outputs: {
                        let raw = attr(e, "outputs")?;
                        let mut out = Vec::new();
                        for part in raw.split(',').filter(|p| !p.is_empty()) {
                            let (src, slot) = part.split_once('>').ok_or_else(|| {
                                XmlError::MalformedXml(format!("bad output `{part}`"))
                            })?;
                            out.push((parse_slot_source(src)?, slot.to_string()));
                        }
                        out
                    },
                    constraint,
                },
                "detect" => ConditionSpec::Detect {
                    object: attr(e, "object")?,
                    region: attr(e, "region")?,
                    bind_pose: attr(e, "bind")?,
                    vantage: match e.attrs.get("vantage") {
                        Some(v) => Some(parse_slot_source(v)?),
                        None => None,
                    },
                    constraint,
                },
                "holding" => ConditionSpec::Holding {
                    object: attr(e, "object")?,
                    positive: attr(e, "positive")? == "true",
                    constraint,
                },
                "on-observed" => ConditionSpec::OnObserved {
                    object: attr(e, "object")?,
                    region: attr(e, "region")?,
                    constraint,
                },
                "scanned" => ConditionSpec::ScannedFlag {
                    region: attr(e, "region")?,
                    constraint,
                },
                "flag" => ConditionSpec::Flag {
                    object: attr(e, "object")?,
                    flag: attr(e, "flag")?,
                    positive: attr(e, "positive")? == "true",
                    constraint,
                },
                "near-region" => ConditionSpec::NearRegion {
                    region: attr(e, "region")?,
                    slack: attr(e, "slack")?
                        .parse()
                        .map_err(|_| XmlError::MalformedXml("bad slack".into()))?,
                    constraint,
                },
                other => return Err(XmlError::UnknownNodeTag(format!("Condition/{other}"))),
            };
            Ok(BTNode::Condition(spec))
        }
        "Action" => {
            let kind_name = attr(e, "kind")?;
            let constraint = parse_fact(&attr(e, "constraint")?)?;
            let kind = match kind_name.as_str() {
                "MoveBase" => AtomicKind::MoveBase {
                    target: parse_slot_source(&attr(e, "target")?)?,
                    traj: parse_slot_source(&attr(e, "traj")?)?,
                },
                "PreApproach" => AtomicKind::PreApproach {
                    grasp: parse_slot_source(&attr(e, "grasp")?)?,
                },
                "Approach" => AtomicKind::Approach {
                    pose: parse_slot_source(&attr(e, "pose")?)?,
                },
                "Grasp" => AtomicKind::Grasp {
                    object: attr(e, "object")?,
                },
                "Release" => AtomicKind::Release {
                    object: attr(e, "object")?,
                    pose: parse_slot_source(&attr(e, "pose")?)?,
                },
                "Scan" => AtomicKind::Scan {
                    region: attr(e, "region")?,
                },
                "Toggle" => AtomicKind::Toggle {
                    region: attr(e, "region")?,
                },
                other => return Err(XmlError::UnknownNodeTag(format!("Action/{other}"))),
            };
            Ok(BTNode::Action { kind, constraint })
        }
        other => Err(XmlError::UnknownNodeTag(other.to_string())),
    }
}

/// Parses canonical XML back into a tree. The behavior-tree structure is
/// reconstructed exactly; the source combined action at signature level.
pub fn deserialize_tree(xml: &str) -> Result<CSubBT, XmlError> {
    let mut parser = Parser {
        src: xml.as_bytes(),
        i: 0,
    };
    let root_el = parser.element()?;
    parser.skip_ws();
    if parser.i != xml.len() {
        return Err(parser.err("trailing input"));
    }
    if root_el.name != "CSubBT" {
        return Err(XmlError::UnknownNodeTag(root_el.name));
    }
    let name = attr(&root_el, "action")?;
    let template = attr(&root_el, "template")?;
    let mut constituents = Vec::new();
    let mut tree_root = None;
    for child in &root_el.children {
        if child.name == "Step" {
            let schema = attr(child, "schema")?;
            let args_raw = attr(child, "args")?;
            let args: Vec<String> = if args_raw.is_empty() {
                Vec::new()
            } else {
                args_raw.split(' ').map(String::from).collect()
            };
            let mut binding = BTreeMap::new();
            for pair in attr(child, "binding")?.split(' ').filter(|p| !p.is_empty()) {
                let (k, v) = pair.split_once('=').ok_or_else(|| {
                    XmlError::MalformedXml(format!("bad binding pair `{pair}`"))
                })?;
                binding.insert(k.to_string(), v.to_string());
            }
            constituents.push(GroundAction {
                schema,
                args,
                binding,
                pre_plus: vec![],
                pre_minus: vec![],
                eff_plus: vec![],
                eff_minus: vec![],
                static_plus: vec![],
                static_minus: vec![],
            });
        } else {
            if tree_root.is_some() {
                return Err(XmlError::MalformedXml("multiple root nodes".into()));
            }
            tree_root = Some(node_from_element(child)?);
        }
    }
    let root = tree_root.ok_or_else(|| XmlError::MalformedXml("missing tree root".into()))?;
    if constituents.is_empty() {
        return Err(XmlError::MalformedXml("missing <Step> entries".into()));
    }
    Ok(CSubBT::new(
        CombinedAction {
            name,
            template,
            constituents,
        },
        root,
    ))
}
