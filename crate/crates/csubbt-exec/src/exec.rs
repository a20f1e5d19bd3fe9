//! Tick execution of conditional subtrees.
//!
//! One world-mutating atomic action runs per tick; conditions and samplers
//! evaluate freely in between. When a node fails, its sequence backtracks
//! to the nearest upstream sampler whose outputs (transitively) feed the
//! failed node, advances that cursor, and retries. A subtree fails only
//! when no feeding cursor has candidates left — at which point the tree
//! emits a structured anomaly report.

use std::collections::{BTreeMap, BTreeSet};

use geom_samplers::{derive_seed, GeomValue, SamplerCursor, Vec2};
use pddl_core::Fact;
use planner::{CombinedAction, ObjectStore, Phase, SamplerRegistry, ResolvedInputs, VIEWPOINT_SAMPLER};
use world_sim::{Command, ObsQuery, Observation, World};

use crate::node::{AtomicKind, BTNode, BTStatus, ConditionSpec, SamplerSpec, SlotSource, BASE_SLOT};
use crate::report::{emit_anomaly, AnomalyReport, ReportConstraint};

/// Everything a tick needs: the world handle, the metered sampler registry,
/// the plan's object store, and the observation seed sequence.
pub struct ExecCtx<'a> {
    pub world: &'a mut World,
    pub registry: &'a mut SamplerRegistry,
    pub store: &'a ObjectStore,
    pub run_seed: u64,
    pub obs_seq: &'a mut u64,
    pub obs_log: &'a mut Vec<(String, Observation)>,
}

impl ExecCtx<'_> {
    fn next_obs_seed(&mut self) -> u64 {
        let seed = derive_seed(self.run_seed, "obs", *self.obs_seq);
        *self.obs_seq += 1;
        seed
    }

    fn perceive_region(&mut self, region: &str) -> Observation {
        let seed = self.next_obs_seed();
        let obs = self.world.perceive(&ObsQuery::Region(region.to_string()), seed);
        self.obs_log.push((format!("region:{region}"), obs.clone()));
        obs
    }

    fn perceive_nearby(&mut self) -> Observation {
        let seed = self.next_obs_seed();
        let at = self.world.observed_base().point();
        let range = self.world.scene.params.scan_range;
        let obs = self
            .world
            .perceive(&ObsQuery::Viewpoint { at, range }, seed);
        self.obs_log.push(("nearby".to_string(), obs.clone()));
        obs
    }
}

#[derive(Debug, Clone)]
enum FlatNode {
    Sequence(Vec<usize>),
    Fallback(Vec<usize>),
    Condition(ConditionSpec),
    Sampler(SamplerSpec),
    Action { kind: AtomicKind, constraint: Fact },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mem {
    Fresh,
    AtChild(usize),
    Done(bool),
}

#[derive(Debug, Clone)]
struct Blame {
    constraint: Fact,
    positive: bool,
}

enum Tick {
    Success,
    Running,
    Fail(Blame),
}

const RETRY_CAP: u32 = 64;
const TICK_WATCHDOG: u64 = 10_000;

/// A compiled conditional subtree with its execution state.
#[derive(Debug, Clone)]
pub struct CSubBT {
    pub source: CombinedAction,
    pub root: BTNode,
    pub status: BTStatus,
    flat: Vec<FlatNode>,
    /// reads/writes of each node's whole subtree
    sub_reads: Vec<BTreeSet<String>>,
    sub_writes: Vec<BTreeSet<String>>,
    mem: Vec<Mem>,
    fallback_blame: BTreeMap<usize, Blame>,
    cursors: BTreeMap<usize, (u64, SamplerCursor)>,
    retries: BTreeMap<(usize, usize), u32>,
    slots: BTreeMap<String, GeomValue>,
    ticks: u64,
    exec_counts_at_start: BTreeMap<String, u64>,
    pub report: Option<AnomalyReport>,
}

impl CSubBT {
    pub fn new(source: CombinedAction, root: BTNode) -> CSubBT {
        let mut flat = Vec::new();
        flatten(&root, &mut flat);
        let n = flat.len();
        let mut sub_reads = vec![BTreeSet::new(); n];
        let mut sub_writes = vec![BTreeSet::new(); n];
        compute_rw(&flat, 0, &mut sub_reads, &mut sub_writes);
        CSubBT {
            source,
            root,
            status: BTStatus::Idle,
            flat,
            sub_reads,
            sub_writes,
            mem: vec![Mem::Fresh; n],
            fallback_blame: BTreeMap::new(),
            cursors: BTreeMap::new(),
            retries: BTreeMap::new(),
            slots: BTreeMap::new(),
            ticks: 0,
            exec_counts_at_start: BTreeMap::new(),
            report: None,
        }
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Total cursor advances per sampler since this tree started.
    pub fn explored(&self, registry: &SamplerRegistry) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for ((phase, name), n) in registry.counts() {
            if *phase != Phase::Exec {
                continue;
            }
            let before = self.exec_counts_at_start.get(name).copied().unwrap_or(0);
            if *n > before {
                out.insert(name.clone(), n - before);
            }
        }
        out
    }

    /// Advances the tree by one tick.
    pub fn tick(&mut self, ctx: &mut ExecCtx) -> BTStatus {
        match self.status {
            BTStatus::Succeeded | BTStatus::Failed => return self.status,
            BTStatus::Idle => {
                self.status = BTStatus::Running;
                self.exec_counts_at_start = ctx
                    .registry
                    .counts()
                    .iter()
                    .filter(|((p, _), _)| *p == Phase::Exec)
                    .map(|((_, name), n)| (name.clone(), *n))
                    .collect();
            }
            BTStatus::Running => {}
        }
        self.ticks += 1;
        if self.ticks > TICK_WATCHDOG {
            let blame = Blame {
                constraint: first_constraint(&self.flat),
                positive: true,
            };
            self.fail_with(ctx, blame);
            return self.status;
        }
        let mut acted = false;
        match self.tick_node(0, ctx, &mut acted) {
            Tick::Success => self.status = BTStatus::Succeeded,
            Tick::Running => {}
            Tick::Fail(blame) => self.fail_with(ctx, blame),
        }
        self.status
    }

    /// Runs the tree to a terminal status.
    pub fn run_to_completion(&mut self, ctx: &mut ExecCtx) -> BTStatus {
        loop {
            match self.tick(ctx) {
                BTStatus::Running | BTStatus::Idle => continue,
                terminal => return terminal,
            }
        }
    }

    fn fail_with(&mut self, ctx: &mut ExecCtx, blame: Blame) {
        let explored = self.explored(ctx.registry);
        let constraint = ReportConstraint::new(&blame.constraint, blame.positive);
        let observed = self.observe_failure(ctx);
        let snapshot_id = ctx.world.take_snapshot();
        let step = ctx.world.step_count();
        // cursors of samplers responsible for the blamed constraint
        let feeding: Vec<&SamplerCursor> = self
            .flat
            .iter()
            .enumerate()
            .filter_map(|(id, node)| match node {
                FlatNode::Sampler(s) if s.constraint == blame.constraint => {
                    self.cursors.get(&id).map(|(_, c)| c)
                }
                _ => None,
            })
            .collect();
        self.report = Some(emit_anomaly(
            &self.source.name,
            self.source.primary().args.clone(),
            constraint,
            &feeding,
            explored,
            observed,
            snapshot_id,
            step,
        ));
        self.status = BTStatus::Failed;
    }

    /// Relevant symbolic observations at failure time: detections in the
    /// source action's region, scanned regions, and the gripper state.
    fn observe_failure(&mut self, ctx: &mut ExecCtx) -> Vec<String> {
        let mut facts = BTreeSet::new();
        let arm = ctx.world.scene.robot.arm.clone();
        match ctx.world.held_object() {
            Some((o, _)) => {
                facts.insert(format!("(holding {arm} {o})"));
            }
            None => {
                facts.insert(format!("(handempty {arm})"));
            }
        }
        for r in ctx.world.scene.scanned.clone() {
            facts.insert(format!("(scanned {r})"));
        }
        if let Some(region) = self.source.primary().binding.get("r").cloned() {
            let obs = ctx.perceive_region(&region);
            for d in &obs.detections {
                facts.insert(format!("(on {} {region})", d.object));
                for flag in &d.flags {
                    facts.insert(format!("({} {})", flag.pddl_name(), d.object));
                }
            }
        }
        facts.into_iter().collect()
    }

    fn tick_node(&mut self, id: usize, ctx: &mut ExecCtx, acted: &mut bool) -> Tick {
        match self.flat[id].clone() {
            FlatNode::Condition(spec) => {
                if self.eval_condition(&spec, ctx) {
                    Tick::Success
                } else {
                    Tick::Fail(Blame {
                        constraint: spec.constraint().clone(),
                        positive: spec.positive(),
                    })
                }
            }
            FlatNode::Sampler(spec) => self.tick_sampler(id, &spec, ctx),
            FlatNode::Action { kind, constraint } => {
                if *acted {
                    return Tick::Running;
                }
                *acted = true;
                match self.execute_action(&kind, ctx) {
                    Ok(()) => Tick::Success,
                    Err(_fault) => Tick::Fail(Blame {
                        constraint,
                        positive: true,
                    }),
                }
            }
            FlatNode::Sequence(children) => self.tick_sequence(id, &children, ctx, acted),
            FlatNode::Fallback(children) => self.tick_fallback(id, &children, ctx, acted),
        }
    }

    fn tick_sequence(
        &mut self,
        id: usize,
        children: &[usize],
        ctx: &mut ExecCtx,
        acted: &mut bool,
    ) -> Tick {
        let mut idx = match self.mem[id] {
            Mem::AtChild(i) => i,
            Mem::Done(true) => return Tick::Success,
            _ => 0,
        };
        loop {
            if idx >= children.len() {
                self.mem[id] = Mem::Done(true);
                return Tick::Success;
            }
            self.mem[id] = Mem::AtChild(idx);
            match self.tick_node(children[idx], ctx, acted) {
                Tick::Success => idx += 1,
                Tick::Running => return Tick::Running,
                Tick::Fail(blame) => match self.backtrack_target(id, children, idx) {
                    Some(j) => {
                        for k in j..=idx {
                            self.reset_subtree(children[k]);
                        }
                        idx = j;
                    }
                    None => {
                        self.mem[id] = Mem::Done(false);
                        return Tick::Fail(blame);
                    }
                },
            }
        }
    }

    fn tick_fallback(
        &mut self,
        id: usize,
        children: &[usize],
        ctx: &mut ExecCtx,
        acted: &mut bool,
    ) -> Tick {
        let mut idx = match self.mem[id] {
            Mem::AtChild(i) => i,
            Mem::Done(true) => return Tick::Success,
            _ => 0,
        };
        loop {
            if idx >= children.len() {
                self.mem[id] = Mem::Done(false);
                let blame = self
                    .fallback_blame
                    .get(&id)
                    .cloned()
                    .expect("failed fallback recorded a blame");
                return Tick::Fail(blame);
            }
            self.mem[id] = Mem::AtChild(idx);
            match self.tick_node(children[idx], ctx, acted) {
                Tick::Success => {
                    self.mem[id] = Mem::Done(true);
                    return Tick::Success;
                }
                Tick::Running => return Tick::Running,
                Tick::Fail(blame) => {
                    // report the primary (first-child) condition's constraint
                    if idx == 0 || !self.fallback_blame.contains_key(&id) {
                        self.fallback_blame.insert(id, blame);
                    }
                    idx += 1;
                }
            }
        }
    }

    /// Finds the nearest earlier sibling whose subtree writes something the
    /// failed subtree needs and still has candidates to offer.
    fn backtrack_target(&mut self, seq_id: usize, children: &[usize], failed: usize) -> Option<usize> {
        let failed_id = children[failed];
        let mut needed: BTreeSet<String> = self.sub_reads[failed_id]
            .difference(&self.sub_writes[failed_id])
            .cloned()
            .collect();
        for j in (0..failed).rev() {
            let cid = children[j];
            let writes = &self.sub_writes[cid];
            if writes.is_disjoint(&needed) {
                continue;
            }
            let retries = self.retries.get(&(seq_id, j)).copied().unwrap_or(0);
            if self.subtree_can_advance(cid) && retries < RETRY_CAP {
                self.retries.insert((seq_id, j), retries + 1);
                return Some(j);
            }
            // exhausted feeder: whatever it reads might itself be re-fed
            let ext: Vec<String> = self.sub_reads[cid]
                .difference(&self.sub_writes[cid])
                .cloned()
                .collect();
            needed.extend(ext);
        }
        None
    }

    /// True when the subtree holds a sampler that could produce a new value:
    /// a cursor with remaining candidates, or one not yet built.
    fn subtree_can_advance(&self, id: usize) -> bool {
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.flat[n] {
                FlatNode::Sampler(_) => match self.cursors.get(&n) {
                    Some((_, cursor)) => {
                        if !cursor.is_exhausted() {
                            return true;
                        }
                    }
                    None => return true,
                },
                FlatNode::Sequence(c) | FlatNode::Fallback(c) => stack.extend(c.iter().copied()),
                _ => {}
            }
        }
        false
    }

    fn reset_subtree(&mut self, id: usize) {
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            self.mem[n] = Mem::Fresh;
            self.fallback_blame.remove(&n);
            if let FlatNode::Sequence(c) | FlatNode::Fallback(c) = &self.flat[n] {
                stack.extend(c.iter().copied());
            }
        }
    }

    // ---- leaves ----

    fn resolve(&self, src: &SlotSource, ctx: &ExecCtx) -> Option<GeomValue> {
        match src {
            SlotSource::Const(c) => ctx.store.geom(c).cloned(),
            SlotSource::Slot(s) => self.slots.get(s).cloned(),
            SlotSource::LiveBase => Some(GeomValue::Config(ctx.world.observed_base())),
        }
    }

    /// Sampler inputs as (name, value) pairs; plain constants resolve to a
    /// name without a payload.
    fn resolve_inputs(&self, inputs: &[SlotSource], ctx: &ExecCtx) -> Option<ResolvedInputs> {
        inputs
            .iter()
            .map(|src| match src {
                SlotSource::Const(c) => match ctx.store.get(c) {
                    Some(planner::Binding::Geom(v)) => Some((c.clone(), Some(v.clone()))),
                    Some(planner::Binding::Plain) => Some((c.clone(), None)),
                    _ => None,
                },
                SlotSource::Slot(s) => {
                    self.slots.get(s).map(|v| (s.clone(), Some(v.clone())))
                }
                SlotSource::LiveBase => Some((
                    BASE_SLOT.to_string(),
                    Some(GeomValue::Config(ctx.world.observed_base())),
                )),
            })
            .collect()
    }

    fn live_view(&mut self, region: Option<&str>, ctx: &mut ExecCtx) -> geom_samplers::SceneView {
        match region {
            Some(r) if !r.is_empty() => {
                let obs = ctx.perceive_region(r);
                ctx.world.scene.observed_view(&obs.detections)
            }
            _ => ctx.world.scene.observed_view(&[]),
        }
    }

    fn tick_sampler(&mut self, id: usize, spec: &SamplerSpec, ctx: &mut ExecCtx) -> Tick {
        let fail = |blame: &Fact| {
            Tick::Fail(Blame {
                constraint: blame.clone(),
                positive: true,
            })
        };
        let Some(inputs) = self.resolve_inputs(&spec.inputs, ctx) else {
            return fail(&spec.constraint);
        };
        let fp = fingerprint(&inputs);
        let rebuild = match self.cursors.get(&id) {
            Some((old_fp, _)) => *old_fp != fp,
            None => true,
        };
        if rebuild {
            let view = self.live_view(spec.perceive_region.as_deref(), ctx);
            let mut cursor = if spec.stream == VIEWPOINT_SAMPLER {
                // sweep order is pinned to the approach side: the base pose
                // when the cursor is first built
                let region = inputs[0].0.clone();
                let from = ctx.world.observed_base();
                ctx.registry.viewpoint_cursor(&view, &region, &from)
            } else {
                match ctx.registry.cursor(&view, &spec.stream, &inputs) {
                    Some(c) => c,
                    None => return fail(&spec.constraint),
                }
            };
            // planned value first, when it still satisfies the constraint
            if let Some(planned_src) = &spec.planned {
                if let Some(value) = self.resolve(planned_src, ctx) {
                    let outs = vec![value];
                    if ctx.registry.check(&view, &spec.stream, &inputs, &outs) {
                        cursor.prepend(outs);
                    }
                }
            }
            self.cursors.insert(id, (fp, cursor));
        }
        let (_, cursor) = self.cursors.get_mut(&id).expect("cursor ensured");
        match ctx.registry.yield_next(cursor) {
            Some(outputs) => {
                for (slot, value) in spec.outputs.iter().zip(outputs) {
                    self.slots.insert(slot.clone(), value);
                }
                Tick::Success
            }
            None => fail(&spec.constraint),
        }
    }

    fn eval_condition(&mut self, spec: &ConditionSpec, ctx: &mut ExecCtx) -> bool {
        match spec {
            ConditionSpec::StreamCheck {
                stream,
                region,
                inputs,
                outputs,
                ..
            } => {
                let Some(resolved) = self.resolve_inputs(inputs, ctx) else {
                    return false;
                };
                let mut values = Vec::new();
                for (src, _) in outputs {
                    match self.resolve(src, ctx) {
                        Some(v) => values.push(v),
                        None => return false,
                    }
                }
                let view = self.live_view(Some(region.as_str()).filter(|r| !r.is_empty()), ctx);
                if !ctx.registry.check(&view, stream, &resolved, &values) {
                    return false;
                }
                for ((_, slot), value) in outputs.iter().zip(values) {
                    self.slots.insert(slot.clone(), value);
                }
                true
            }
            ConditionSpec::Detect {
                object,
                region,
                bind_pose,
                vantage: _,
                ..
            } => {
                let obs = ctx.perceive_region(region);
                match obs.detection_of(object) {
                    Some(d) => {
                        self.slots.insert(bind_pose.clone(), GeomValue::Pose(d.pose));
                        true
                    }
                    None => false,
                }
            }
            ConditionSpec::Holding {
                object, positive, ..
            } => {
                let held = ctx
                    .world
                    .held_object()
                    .is_some_and(|(o, _)| o == object);
                held == *positive
            }
            ConditionSpec::OnObserved { object, region, .. } => {
                let obs = ctx.perceive_region(region);
                obs.detection_of(object).is_some()
            }
            ConditionSpec::ScannedFlag { region, .. } => {
                ctx.world.scene.scanned.contains(region)
            }
            ConditionSpec::Flag {
                object,
                flag,
                positive,
                ..
            } => {
                let obs = ctx.perceive_nearby();
                match obs.detection_of(object) {
                    Some(d) => {
                        let has = d.flags.iter().any(|f| f.pddl_name() == flag);
                        has == *positive
                    }
                    None => false,
                }
            }
            ConditionSpec::NearRegion { region, slack, .. } => {
                let view = ctx.world.scene.observed_view(&[]);
                geom_samplers::check_near_conf(&view, &ctx.world.observed_base(), region, *slack)
            }
        }
    }

    fn execute_action(&mut self, kind: &AtomicKind, ctx: &mut ExecCtx) -> Result<(), String> {
        let cmd = match kind {
            AtomicKind::MoveBase { target, traj } => {
                let target = self
                    .resolve(target, ctx)
                    .and_then(|v| v.as_config().copied())
                    .ok_or("move target unresolved")?;
                let traj = self
                    .resolve(traj, ctx)
                    .and_then(|v| v.as_traj().cloned())
                    .ok_or("move trajectory unresolved")?;
                Command::MoveBase { target, traj }
            }
            AtomicKind::PreApproach { grasp } => {
                let grasp = self
                    .resolve(grasp, ctx)
                    .and_then(|v| v.as_grasp().copied())
                    .ok_or("grasp unresolved")?;
                Command::PreApproach { grasp }
            }
            AtomicKind::Approach { pose } => {
                let pose = self
                    .resolve(pose, ctx)
                    .and_then(|v| v.as_pose().copied())
                    .ok_or("approach pose unresolved")?;
                Command::Approach {
                    target: Vec2::new(pose.x, pose.y),
                }
            }
            AtomicKind::Grasp { object } => Command::Grasp {
                object: object.clone(),
            },
            AtomicKind::Release { object, pose } => {
                let pose = self
                    .resolve(pose, ctx)
                    .and_then(|v| v.as_pose().copied())
                    .ok_or("release pose unresolved")?;
                Command::Release {
                    object: object.clone(),
                    pose,
                }
            }
            AtomicKind::Scan { region } => Command::Scan {
                region: region.clone(),
            },
            AtomicKind::Toggle { region } => Command::Toggle {
                region: region.clone(),
            },
        };
        let result = ctx.world.step(&cmd);
        if result.ok {
            Ok(())
        } else {
            Err(result.fault.unwrap_or_else(|| "actuation fault".into()))
        }
    }
}

fn flatten(node: &BTNode, out: &mut Vec<FlatNode>) -> usize {
    let id = out.len();
    match node {
        BTNode::Sequence(children) => {
            out.push(FlatNode::Sequence(Vec::new()));
            let ids: Vec<usize> = children.iter().map(|c| flatten(c, out)).collect();
            out[id] = FlatNode::Sequence(ids);
        }
        BTNode::Fallback(children) => {
            out.push(FlatNode::Fallback(Vec::new()));
            let ids: Vec<usize> = children.iter().map(|c| flatten(c, out)).collect();
            out[id] = FlatNode::Fallback(ids);
        }
        BTNode::Condition(c) => out.push(FlatNode::Condition(c.clone())),
        BTNode::Sampler(s) => out.push(FlatNode::Sampler(s.clone())),
        BTNode::Action { kind, constraint } => out.push(FlatNode::Action {
            kind: kind.clone(),
            constraint: constraint.clone(),
        }),
    }
    id
}

fn compute_rw(
    flat: &[FlatNode],
    id: usize,
    reads: &mut [BTreeSet<String>],
    writes: &mut [BTreeSet<String>],
) {
    match &flat[id] {
        FlatNode::Sequence(children) | FlatNode::Fallback(children) => {
            for &c in children {
                compute_rw(flat, c, reads, writes);
                let (r, w) = (reads[c].clone(), writes[c].clone());
                reads[id].extend(r);
                writes[id].extend(w);
            }
        }
        FlatNode::Condition(c) => {
            reads[id].extend(c.reads().into_iter().map(String::from));
            writes[id].extend(c.writes().into_iter().map(String::from));
        }
        FlatNode::Sampler(s) => {
            reads[id].extend(s.reads().into_iter().map(String::from));
            writes[id].extend(s.outputs.iter().cloned());
        }
        FlatNode::Action { kind, .. } => {
            reads[id].extend(kind.reads().into_iter().map(String::from));
            writes[id].extend(kind.writes().into_iter().map(String::from));
        }
    }
}

fn first_constraint(flat: &[FlatNode]) -> Fact {
    for node in flat {
        match node {
            FlatNode::Sampler(s) => return s.constraint.clone(),
            FlatNode::Condition(c) => return c.constraint().clone(),
            FlatNode::Action { constraint, .. } => return constraint.clone(),
            _ => {}
        }
    }
    Fact::new("unknown", &[])
}

fn fingerprint(inputs: &ResolvedInputs) -> u64 {
    let encoded = serde_json::to_string(inputs).expect("inputs serialize");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in encoded.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
