use serde_json::{json, Map, Value as Json};

use crate::kernel::{ActionInstance, Machine, Spec, State, Value};

/// A finite behavior: an initial state followed by labelled steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: State,
    pub steps: Vec<(ActionInstance, State)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayVerdict {
    Valid,
    /// Step 0 is the initial state; step k is the k-th transition.
    Invalid {
        step: usize,
        reason: String,
    },
}

impl ReplayVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ReplayVerdict::Valid)
    }
}

fn state_json(spec: &Spec, s: &State) -> Json {
    let mut m = Map::new();
    for (v, x) in spec.vars.iter().zip(s.values()) {
        m.insert(v.name.to_string(), x.to_json());
    }
    Json::Object(m)
}

fn state_from_json(spec: &Spec, j: &Json) -> Result<State, String> {
    let obj = j.as_object().ok_or("state must be an object")?;
    let mut values = Vec::with_capacity(spec.vars.len());
    for v in &spec.vars {
        let x = obj.get(v.name.as_ref()).ok_or_else(|| format!("state lacks variable `{}`", v.name))?;
        values.push(Value::from_json(x).map_err(|e| format!("`{}`: {e}", v.name))?);
    }
    if let Some(extra) = obj.keys().find(|k| spec.var_index(k).is_none()) {
        return Err(format!("unknown variable `{extra}` in state"));
    }
    Ok(State::new(values))
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> &State {
        self.steps.last().map_or(&self.initial, |(_, s)| s)
    }

    /// `{initial, steps: [{action, binding, state}]}` with states keyed by
    /// variable name.
    pub fn to_json(&self, spec: &Spec) -> Json {
        let steps: Vec<Json> = self
            .steps
            .iter()
            .map(|(inst, s)| {
                let binding: Map<String, Json> =
                    inst.binding.iter().map(|(n, v)| (n.to_string(), v.to_json())).collect();
                json!({ "action": inst.action.as_ref(), "binding": binding, "state": state_json(spec, s) })
            })
            .collect();
        json!({ "initial": state_json(spec, &self.initial), "steps": steps })
    }

    pub fn from_json(spec: &Spec, j: &Json) -> Result<Trace, String> {
        let initial = state_from_json(spec, j.get("initial").ok_or("trace lacks `initial`")?)?;
        let mut steps = Vec::new();
        let raw = j.get("steps").and_then(Json::as_array).ok_or("trace lacks a `steps` array")?;
        for (k, step) in raw.iter().enumerate() {
            let name = step
                .get("action")
                .and_then(Json::as_str)
                .ok_or_else(|| format!("step {} lacks an action name", k + 1))?;
            let action = spec.action(name).ok_or_else(|| format!("step {}: unknown action `{name}`", k + 1))?;
            let empty = Map::new();
            let given = match step.get("binding") {
                None | Some(Json::Null) => &empty,
                Some(b) => b.as_object().ok_or_else(|| format!("step {}: binding must be an object", k + 1))?,
            };
            let mut binding = Vec::new();
            for p in &action.params {
                let v = given
                    .get(p.name.as_ref())
                    .ok_or_else(|| format!("step {}: missing parameter `{}`", k + 1, p.name))?;
                binding.push((p.name.clone(), Value::from_json(v).map_err(|e| format!("step {}: {e}", k + 1))?));
            }
            let state =
                state_from_json(spec, step.get("state").ok_or_else(|| format!("step {} lacks a state", k + 1))?)?;
            steps.push((ActionInstance { action: action.name.clone(), binding }, state));
        }
        Ok(Trace { initial, steps })
    }
}

/// Checks that `trace` is a behavior of `spec`.
pub fn trace_replay(spec: &Spec, trace: &Trace) -> ReplayVerdict {
    let machine = match Machine::new(spec.clone()) {
        Ok(m) => m,
        Err(e) => return ReplayVerdict::Invalid { step: 0, reason: e.to_string() },
    };
    replay_on(&machine, trace)
}

pub(crate) fn replay_on(machine: &Machine, trace: &Trace) -> ReplayVerdict {
    let invalid = |step, reason: String| ReplayVerdict::Invalid { step, reason };
    match machine.initial_state() {
        Ok(s) if s == trace.initial => {}
        Ok(_) => return invalid(0, "not the initial state".into()),
        Err(e) => return invalid(0, e.to_string()),
    }
    let mut cur = &trace.initial;
    for (k, (inst, next)) in trace.steps.iter().enumerate() {
        let step = k + 1;
        let Some(idx) = machine.action_index(&inst.action) else {
            return invalid(step, format!("unknown action `{}`", inst.action));
        };
        match machine.is_enabled(idx, &inst.binding, cur) {
            Ok(true) => {}
            Ok(false) => return invalid(step, format!("{inst} is not enabled")),
            Err(e) => return invalid(step, e.to_string()),
        }
        match machine.apply(idx, &inst.binding, cur) {
            Ok(s) if &s == next => {}
            Ok(_) => return invalid(step, format!("{inst} leads to a different state")),
            Err(e) => return invalid(step, e.to_string()),
        }
        cur = next;
    }
    ReplayVerdict::Valid
}
