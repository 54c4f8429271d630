//! Level-synchronous breadth-first search shared by the explorer and the
//! refinement checker.
//!
//! Each level is expanded in parallel, chunk by chunk, and merged sequentially
//! in frontier order, so node numbering, counts and the chosen evidence never
//! depend on the number of workers.
//!
//! States are stored packed: every variable value is interned per slot and a
//! state becomes a row of `u32` ids in one flat arena.

use std::hash::BuildHasher;

use hashbrown::{DefaultHashBuilder, HashMap, HashTable};
use rayon::prelude::*;

use super::{Bounds, ExploreError, Trace};
use crate::kernel::{Binding, EvalError, Machine, State, Value};

/// An edge finding: source node, action, binding, target state.
type EdgeHit<F> = (u32, usize, Binding, State, F);

const ROOT: u32 = u32::MAX;

/// Frontier nodes expanded between two merges.
const CHUNK: usize = 4096;

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    action: u32,
    binding: u32,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<Value, u32, DefaultHashBuilder>,
    values: Vec<Value>,
}

impl Interner {
    fn intern(&mut self, v: &Value) -> u32 {
        if let Some(&id) = self.ids.get(v) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(v.clone());
        self.ids.insert(v.clone(), id);
        id
    }
}

/// Packed node storage with duplicate detection.
struct Store {
    width: usize,
    slots: Vec<Interner>,
    arena: Vec<u32>,
    nodes: Vec<Node>,
    index: HashTable<u32>,
    hasher: DefaultHashBuilder,
    scratch: Vec<u32>,
}

impl Store {
    fn new(width: usize) -> Store {
        Store {
            width,
            slots: (0..width).map(|_| Interner::default()).collect(),
            arena: Vec::new(),
            nodes: Vec::new(),
            index: HashTable::new(),
            hasher: DefaultHashBuilder::default(),
            scratch: Vec::with_capacity(width),
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn row(&self, id: u32) -> &[u32] {
        let at = id as usize * self.width;
        &self.arena[at..at + self.width]
    }

    fn state(&self, id: u32) -> State {
        State::new(self.row(id).iter().zip(&self.slots).map(|(&v, slot)| slot.values[v as usize].clone()).collect())
    }

    /// Adds `s` unless an equal state is stored; returns the new node id.
    /// Values shared with the parent state reuse the parent's ids.
    fn insert(&mut self, s: &State, parent: Option<&State>, node: Node) -> Option<u32> {
        let mut row = std::mem::take(&mut self.scratch);
        row.clear();
        for (k, v) in s.values().iter().enumerate() {
            let id = match parent {
                Some(p) if p.values()[k].same_allocation(v) => self.arena[node.parent as usize * self.width + k],
                _ => self.slots[k].intern(v),
            };
            row.push(id);
        }
        let hash = self.hasher.hash_one(&row[..]);
        let (arena, width) = (&self.arena, self.width);
        let same = |&id: &u32| arena[id as usize * width..(id as usize + 1) * width] == row[..];
        let fresh = if self.index.find(hash, same).is_some() {
            None
        } else {
            let id = self.nodes.len() as u32;
            self.arena.extend_from_slice(&row);
            self.nodes.push(node);
            let (arena, hasher) = (&self.arena, &self.hasher);
            self.index
                .insert_unique(hash, id, |&k| hasher.hash_one(&arena[k as usize * width..(k as usize + 1) * width]));
            Some(id)
        };
        self.scratch = row;
        fresh
    }
}

/// Why a search stopped early.
pub(crate) enum Stop<F> {
    /// A state hook fired on `node`.
    State {
        node: u32,
        finding: F,
    },
    /// An edge hook fired on a transition out of `node`.
    Edge {
        node: u32,
        action: usize,
        binding: Binding,
        post: State,
        finding: F,
    },
    Deadlock {
        node: u32,
    },
    MaxStates,
    MaxDepth,
}

pub(crate) struct Outcome<F> {
    pub stop: Option<Stop<F>>,
    pub distinct: u64,
    pub transitions: u64,
    pub depth: usize,
    /// First terminal state in search order, if any.
    pub deadlock: Option<u32>,
    store: Store,
}

impl<F> Outcome<F> {
    /// Shortest trace from the initial state to `node`.
    pub fn trace_to(&self, machine: &Machine, node: u32) -> Trace {
        let nodes = &self.store.nodes;
        let mut chain = Vec::new();
        let mut cur = node;
        while nodes[cur as usize].parent != ROOT {
            chain.push(cur);
            cur = nodes[cur as usize].parent;
        }
        let initial = self.store.state(cur);
        let steps = chain
            .into_iter()
            .rev()
            .map(|i| {
                let n = nodes[i as usize];
                let action = n.action as usize;
                let binding = machine.binding_from_code(action, n.binding);
                (machine.instance(action, &binding), self.store.state(i))
            })
            .collect();
        Trace { initial, steps }
    }
}

pub(crate) struct Hooks<S, E> {
    pub on_state: S,
    pub on_edge: E,
}

fn pool(workers: usize) -> Result<Option<rayon::ThreadPool>, ExploreError> {
    if workers == 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| ExploreError::Pool(e.to_string()))
}

fn par_map<I: Sync, T: Send>(
    pool: &Option<rayon::ThreadPool>,
    items: &[I],
    f: impl Fn(&I) -> Result<T, ExploreError> + Sync + Send,
) -> Result<Vec<T>, ExploreError> {
    match pool {
        Some(p) => p.install(|| items.par_iter().map(f).collect()),
        None => items.iter().map(f).collect(),
    }
}

fn eval_failure(machine: &Machine, state: &State, action: Option<usize>, err: EvalError) -> ExploreError {
    let names = machine.spec().var_names();
    let rendered = names.iter().zip(state.values()).map(|(n, v)| format!("{n} = {v}")).collect::<Vec<_>>().join(", ");
    ExploreError::Eval {
        state: rendered,
        action: action.map(|a| machine.action(a).name.to_string()),
        source: Box::new(err),
    }
}

/// Keeps the candidate whose source state is least.
fn least<T>(slot: &mut Option<(State, T)>, s: &State, make: impl FnOnce() -> T) {
    if slot.as_ref().is_none_or(|(best, _)| s < best) {
        *slot = Some((s.clone(), make()));
    }
}

/// Runs the search. `on_state` sees every distinct state once, including the
/// initial one; `on_edge` sees every generated transition.
pub(crate) fn run<F, S, E>(machine: &Machine, bounds: &Bounds, hooks: Hooks<S, E>) -> Result<Outcome<F>, ExploreError>
where
    F: Send,
    S: Fn(&State) -> Result<Option<F>, EvalError> + Sync,
    E: Fn(&State, usize, &Binding, &State) -> Result<Option<F>, EvalError> + Sync,
{
    let pool = pool(bounds.workers)?;

    let init = machine.initial_state().map_err(|e| ExploreError::Setup(e.to_string()))?;
    let mut store = Store::new(init.values().len());
    store.insert(&init, None, Node { parent: ROOT, action: 0, binding: 0 });
    let mut out = Outcome { stop: None, distinct: 1, transitions: 0, depth: 0, deadlock: None, store };
    if let Some(f) = (hooks.on_state)(&init).map_err(|e| eval_failure(machine, &init, None, e))? {
        out.stop = Some(Stop::State { node: 0, finding: f });
        return Ok(out);
    }

    let mut frontier: Vec<u32> = vec![0];
    while !frontier.is_empty() {
        // At the depth bound the level is expanded only to learn whether it
        // was hit, so neither edges nor new states are checked.
        let in_bounds = bounds.max_depth.is_none_or(|d| out.depth < d);
        let mut deadlocked: Option<(State, u32)> = None;
        let mut edge_hit: Option<(State, EdgeHit<F>)> = None;
        let mut violator: Option<(State, (u32, F))> = None;
        let mut next = Vec::new();

        for chunk in frontier.chunks(CHUNK) {
            let states: Vec<(u32, State)> = chunk.iter().map(|&id| (id, out.store.state(id))).collect();
            let expanded = par_map(&pool, &states, |(_, s)| {
                let succs = machine.successors(s).map_err(|e| eval_failure(machine, s, None, e))?;
                let mut finding = None;
                if in_bounds {
                    for (k, succ) in succs.iter().enumerate() {
                        if let Some(f) = (hooks.on_edge)(s, succ.action, &succ.binding, &succ.state)
                            .map_err(|e| eval_failure(machine, s, Some(succ.action), e))?
                        {
                            finding = Some((k, f));
                            break;
                        }
                    }
                }
                Ok((succs, finding))
            })?;

            let mut fresh = Vec::new();
            for ((id, s), (succs, finding)) in states.iter().zip(expanded) {
                out.transitions += succs.len() as u64;
                if succs.is_empty() {
                    if out.deadlock.is_none() {
                        out.deadlock = Some(*id);
                    }
                    least(&mut deadlocked, s, || *id);
                }
                if let Some((k, f)) = finding {
                    let succ = &succs[k];
                    least(&mut edge_hit, s, || (*id, succ.action, succ.binding.clone(), succ.state.clone(), f));
                }
                if edge_hit.is_some() || (bounds.deadlock_is_error && deadlocked.is_some()) {
                    // The level ends in a stop; only the evidence matters now.
                    continue;
                }
                for succ in succs {
                    let node = Node {
                        parent: *id,
                        action: succ.action as u32,
                        binding: machine.binding_code(succ.action, &succ.binding),
                    };
                    if let Some(n) = out.store.insert(&succ.state, Some(s), node) {
                        next.push(n);
                        if in_bounds {
                            fresh.push((n, succ.state));
                        }
                    }
                }
            }

            let checked = par_map(&pool, &fresh, |(n, s)| {
                Ok((hooks.on_state)(s).map_err(|e| eval_failure(machine, s, None, e))?.map(|f| (*n, f)))
            })?;
            for ((_, s), hit) in fresh.iter().zip(checked) {
                if let Some(hit) = hit {
                    least(&mut violator, s, || hit);
                }
            }
        }

        if bounds.deadlock_is_error {
            if let Some((_, node)) = deadlocked {
                out.stop = Some(Stop::Deadlock { node });
                return Ok(out);
            }
        }
        if let Some((_, (node, action, binding, post, finding))) = edge_hit {
            out.stop = Some(Stop::Edge { node, action, binding, post, finding });
            return Ok(out);
        }
        if next.is_empty() {
            break;
        }
        out.distinct = out.store.len() as u64;
        if !in_bounds {
            out.stop = Some(Stop::MaxDepth);
            return Ok(out);
        }
        out.depth += 1;
        if let Some((_, (node, finding))) = violator {
            out.stop = Some(Stop::State { node, finding });
            return Ok(out);
        }
        if out.distinct > bounds.max_states as u64 {
            out.stop = Some(Stop::MaxStates);
            return Ok(out);
        }
        frontier = next;
    }
    out.distinct = out.store.len() as u64;
    Ok(out)
}
