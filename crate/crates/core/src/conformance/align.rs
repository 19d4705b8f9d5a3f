//! Optimal prefix alignment over block-structured models.
//!
//! Moves are priced per activity instance: a start/complete pair (or a lone
//! complete) that is only in the log costs 1, a task executed only by the
//! model costs 1, a synchronous instance is free. A task's start can be
//! synchronous only while the model enables that task.
//!
//! The search state is a configuration: for every task its model state
//! (unstarted, started, completed) and whether the log currently has an open
//! instance of it that was taken as a log move. The frontier maps every
//! configuration reachable for the observed prefix to its cheapest cost and
//! is closed under model moves, so each event only extends it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::ingest::{Event, Lifecycle};
use crate::model::ModelNode;

const UNSTARTED: u8 = 0;
const STARTED: u8 = 1;
const COMPLETED: u8 = 2;
const STATE_MASK: u8 = 3;
/// The log's open instance of this task is a log move.
const LOG_OPEN: u8 = 4;

type Config = Box<[u8]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Task(usize),
    Seq,
    Xor,
    Par,
}

#[derive(Debug, Clone)]
struct Node {
    kind: Kind,
    children: Vec<usize>,
    /// Tasks of this subtree occupy `lo..hi` in depth-first numbering.
    lo: usize,
    hi: usize,
}

/// Compiled form of a [`ModelNode`] tree used by the aligner.
#[derive(Debug, Clone)]
pub struct AlignModel {
    nodes: Vec<Node>,
    task_names: Vec<String>,
    task_ids: HashMap<String, usize>,
}

impl AlignModel {
    pub fn compile(root: &ModelNode) -> AlignModel {
        let mut model = AlignModel {
            nodes: Vec::new(),
            task_names: Vec::new(),
            task_ids: HashMap::new(),
        };
        model.add(root);
        model
    }

    fn add(&mut self, node: &ModelNode) -> usize {
        let lo = self.task_names.len();
        let idx = self.nodes.len();
        self.nodes.push(Node {
            kind: Kind::Seq,
            children: Vec::new(),
            lo,
            hi: lo,
        });
        let kind = match node {
            ModelNode::Task(name) => {
                let id = self.task_names.len();
                self.task_names.push(name.clone());
                self.task_ids.insert(name.clone(), id);
                Kind::Task(id)
            }
            ModelNode::Sequence(c) | ModelNode::Xor(c) | ModelNode::Parallel(c) => {
                let children = c.iter().map(|child| self.add(child)).collect();
                self.nodes[idx].children = children;
                match node {
                    ModelNode::Sequence(_) => Kind::Seq,
                    ModelNode::Xor(_) => Kind::Xor,
                    _ => Kind::Par,
                }
            }
        };
        self.nodes[idx].kind = kind;
        self.nodes[idx].hi = self.task_names.len();
        idx
    }

    pub fn task_count(&self) -> usize {
        self.task_names.len()
    }

    pub fn task_id(&self, name: &str) -> Option<usize> {
        self.task_ids.get(name).copied()
    }

    fn touched(&self, node: usize, cfg: &[u8]) -> bool {
        let n = &self.nodes[node];
        cfg[n.lo..n.hi].iter().any(|&s| s & STATE_MASK != UNSTARTED)
    }

    fn done(&self, node: usize, cfg: &[u8]) -> bool {
        let n = &self.nodes[node];
        match n.kind {
            Kind::Task(t) => cfg[t] & STATE_MASK == COMPLETED,
            Kind::Seq | Kind::Par => n.children.iter().all(|&c| self.done(c, cfg)),
            Kind::Xor => n.children.iter().any(|&c| self.done(c, cfg)),
        }
    }

    /// Appends every unstarted task the model enables in `cfg`.
    fn enabled(&self, node: usize, cfg: &[u8], out: &mut Vec<usize>) {
        let n = &self.nodes[node];
        match n.kind {
            Kind::Task(t) => {
                if cfg[t] & STATE_MASK == UNSTARTED {
                    out.push(t);
                }
            }
            Kind::Seq => {
                if let Some(&c) = n.children.iter().find(|&&c| !self.done(c, cfg)) {
                    self.enabled(c, cfg, out);
                }
            }
            Kind::Xor => match n.children.iter().find(|&&c| self.touched(c, cfg)) {
                Some(&c) => self.enabled(c, cfg, out),
                None => n.children.iter().for_each(|&c| self.enabled(c, cfg, out)),
            },
            Kind::Par => n.children.iter().for_each(|&c| self.enabled(c, cfg, out)),
        }
    }

    fn is_enabled(&self, task: usize, cfg: &[u8]) -> bool {
        let mut out = Vec::new();
        self.enabled(0, cfg, &mut out);
        out.contains(&task)
    }

    /// Cheapest model-only completion. A started task still costs two: its
    /// log instance never completed, so it cannot be synchronous.
    fn finish_cost(&self, node: usize, cfg: &[u8]) -> u32 {
        let n = &self.nodes[node];
        match n.kind {
            Kind::Task(t) => match cfg[t] & STATE_MASK {
                COMPLETED => 0,
                STARTED => 2,
                _ => 1,
            },
            Kind::Seq | Kind::Par => n.children.iter().map(|&c| self.finish_cost(c, cfg)).sum(),
            Kind::Xor => match n.children.iter().find(|&&c| self.touched(c, cfg)) {
                Some(&c) => self.finish_cost(c, cfg),
                None => n
                    .children
                    .iter()
                    .map(|&c| self.finish_cost(c, cfg))
                    .min()
                    .unwrap_or(0),
            },
        }
    }
}

/// Result of feeding one event to an [`AlignState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    /// Optimal prefix-alignment cost after the event.
    pub cost: u32,
    /// The activity is not a model task.
    pub foreign: bool,
}

/// Incremental alignment state of one trace.
#[derive(Debug, Clone)]
pub struct AlignState {
    frontier: HashMap<Config, u32>,
    /// Cost paid by every configuration (foreign activities).
    offset: u32,
    open: HashSet<usize>,
    open_foreign: HashSet<String>,
}

impl AlignState {
    pub fn new(model: &AlignModel) -> AlignState {
        let initial: Config = vec![UNSTARTED; model.task_count()].into_boxed_slice();
        let mut state = AlignState {
            frontier: HashMap::from([(initial, 0)]),
            offset: 0,
            open: HashSet::new(),
            open_foreign: HashSet::new(),
        };
        state.close(model);
        state
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Optimal cost of aligning the prefix seen so far.
    pub fn prefix_cost(&self) -> u32 {
        self.offset + self.frontier.values().copied().min().unwrap_or(0)
    }

    /// Optimal cost if the trace ended now: the model has to reach its end
    /// and instances without a complete cannot be synchronous.
    pub fn final_cost(&self, model: &AlignModel) -> u32 {
        self.offset
            + self
                .frontier
                .iter()
                .map(|(cfg, &c)| c + model.finish_cost(0, cfg))
                .min()
                .unwrap_or(0)
    }

    pub fn step(&mut self, model: &AlignModel, event: &Event) -> StepOutcome {
        let Some(task) = model.task_id(&event.activity) else {
            self.step_foreign(event);
            return StepOutcome {
                cost: self.prefix_cost(),
                foreign: true,
            };
        };
        match event.lifecycle {
            Lifecycle::Start => self.start(model, task),
            Lifecycle::Complete => self.complete(model, task),
            Lifecycle::Other(_) => {}
        }
        StepOutcome {
            cost: self.prefix_cost(),
            foreign: false,
        }
    }

    fn step_foreign(&mut self, event: &Event) {
        match event.lifecycle {
            Lifecycle::Start => {
                self.open_foreign.insert(event.activity.clone());
                self.offset += 1;
            }
            Lifecycle::Complete => {
                if !self.open_foreign.remove(&event.activity) {
                    self.offset += 1;
                }
            }
            Lifecycle::Other(_) => {}
        }
    }

    fn start(&mut self, model: &AlignModel, task: usize) {
        let abandon = !self.open.insert(task);
        let mut next: HashMap<Config, u32> = HashMap::with_capacity(self.frontier.len() * 2);
        let mut enabled = Vec::new();
        for (cfg, &cost) in &self.frontier {
            let mut base = cfg.clone();
            if abandon {
                base[task] &= !LOG_OPEN;
            }
            if base[task] & STATE_MASK == UNSTARTED {
                enabled.clear();
                model.enabled(0, &base, &mut enabled);
                if enabled.contains(&task) {
                    let mut sync = base.clone();
                    sync[task] = STARTED;
                    relax(&mut next, sync, cost);
                }
            }
            let mut log_move = base;
            log_move[task] |= LOG_OPEN;
            relax(&mut next, log_move, cost + 1);
        }
        self.frontier = next;
    }

    fn complete(&mut self, model: &AlignModel, task: usize) {
        let mut next: HashMap<Config, u32> = HashMap::with_capacity(self.frontier.len() * 2);
        if self.open.remove(&task) {
            for (cfg, &cost) in &self.frontier {
                let mut cfg = cfg.clone();
                if cfg[task] & LOG_OPEN != 0 {
                    cfg[task] &= !LOG_OPEN;
                } else {
                    debug_assert_eq!(cfg[task] & STATE_MASK, STARTED);
                    cfg[task] = COMPLETED;
                }
                relax(&mut next, cfg, cost);
            }
        } else {
            for (cfg, &cost) in &self.frontier {
                if cfg[task] & STATE_MASK == UNSTARTED && model.is_enabled(task, cfg) {
                    let mut sync = cfg.clone();
                    sync[task] = COMPLETED;
                    relax(&mut next, sync, cost);
                }
                relax(&mut next, cfg.clone(), cost + 1);
            }
        }
        self.frontier = next;
        self.close(model);
    }

    /// Adds every configuration reachable by model moves, keeping the
    /// cheapest cost per configuration.
    fn close(&mut self, model: &AlignModel) {
        let mut heap: BinaryHeap<Reverse<(u32, Config)>> = self
            .frontier
            .iter()
            .map(|(cfg, &c)| Reverse((c, cfg.clone())))
            .collect();
        let mut enabled = Vec::new();
        while let Some(Reverse((cost, cfg))) = heap.pop() {
            if self.frontier.get(&cfg).is_some_and(|&best| best < cost) {
                continue;
            }
            enabled.clear();
            model.enabled(0, &cfg, &mut enabled);
            for &t in &enabled {
                let mut moved = cfg.clone();
                moved[t] = (moved[t] & LOG_OPEN) | COMPLETED;
                let c = cost + 1;
                let better = self.frontier.get(&moved).is_none_or(|&best| c < best);
                if better {
                    self.frontier.insert(moved.clone(), c);
                    heap.push(Reverse((c, moved)));
                }
            }
        }
    }
}

fn relax(frontier: &mut HashMap<Config, u32>, cfg: Config, cost: u32) {
    frontier
        .entry(cfg)
        .and_modify(|c| *c = (*c).min(cost))
        .or_insert(cost);
}

/// Optimal prefix-alignment cost of `events` against `root`.
pub fn align_prefix(root: &ModelNode, events: &[Event]) -> u32 {
    let model = AlignModel::compile(root);
    let mut state = AlignState::new(&model);
    events.iter().for_each(|e| {
        state.step(&model, e);
    });
    state.prefix_cost()
}

/// Optimal alignment cost of `events` as a finished trace.
pub fn align_trace(root: &ModelNode, events: &[Event]) -> u32 {
    let model = AlignModel::compile(root);
    let mut state = AlignState::new(&model);
    events.iter().for_each(|e| {
        state.step(&model, e);
    });
    state.final_cost(&model)
}
