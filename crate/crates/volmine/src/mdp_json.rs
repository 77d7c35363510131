//! JSON export and import of two-stage MDPs.
//!
//! Schema `volmine.mdp` version 1:
//!
//! ```text
//! {
//!   "schema": "volmine.mdp",
//!   "version": 1,
//!   "actions": ["adopt", "override", ...],
//!   "initial": 0,
//!   "states": [
//!     {
//!       "label": <any JSON value, e.g. the decision state>,
//!       "choices": [
//!         {"action": "wait", "reward": 0.0, "canon": 0.0,
//!          "outcomes": [{"next": 3, "prob": 0.25, "reward": 1.0, "canon": 1.0}, ...]}
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! `reward`/`canon` on a choice are credited when the action is taken;
//! those on an outcome when the chance event resolves. Chance nodes shared
//! by several choices are written once per choice.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use volmine_core::mdp::{Choice, Mdp, MdpBuilder, Outcome};

pub const SCHEMA: &str = "volmine.mdp";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpFile {
    pub schema: String,
    pub version: u32,
    pub actions: Vec<String>,
    pub initial: usize,
    pub states: Vec<StateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    #[serde(default)]
    pub label: Value,
    pub choices: Vec<ChoiceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceEntry {
    pub action: String,
    #[serde(default)]
    pub reward: f64,
    #[serde(default)]
    pub canon: f64,
    pub outcomes: Vec<OutcomeEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEntry {
    pub next: usize,
    pub prob: f64,
    #[serde(default)]
    pub reward: f64,
    #[serde(default)]
    pub canon: f64,
}

/// Flattens `mdp` into the export schema; `labels[i]` labels state `i`.
pub fn export<L: Serialize>(mdp: &Mdp, labels: &[L]) -> anyhow::Result<MdpFile> {
    anyhow::ensure!(
        labels.is_empty() || labels.len() == mdp.num_states(),
        "{} labels for {} states",
        labels.len(),
        mdp.num_states()
    );
    let names = mdp.action_names();
    let mut states = Vec::with_capacity(mdp.num_states());
    for s in 0..mdp.num_states() {
        let label = match labels.get(s) {
            Some(l) => serde_json::to_value(l)?,
            None => Value::Null,
        };
        let choices = mdp
            .choices(s)
            .iter()
            .map(|c| ChoiceEntry {
                action: names[c.action as usize].clone(),
                reward: c.reward,
                canon: c.canon,
                outcomes: mdp
                    .outcomes(c.post as usize)
                    .iter()
                    .map(|o| OutcomeEntry {
                        next: o.next as usize,
                        prob: o.prob,
                        reward: o.reward,
                        canon: o.canon,
                    })
                    .collect(),
            })
            .collect();
        states.push(StateEntry { label, choices });
    }
    Ok(MdpFile {
        schema: SCHEMA.into(),
        version: VERSION,
        actions: names.to_vec(),
        initial: mdp.initial(),
        states,
    })
}

/// Rebuilds a solvable model, validating indices and probabilities.
pub fn import(file: &MdpFile) -> anyhow::Result<Mdp> {
    anyhow::ensure!(file.schema == SCHEMA, "schema {:?} is not {SCHEMA:?}", file.schema);
    anyhow::ensure!(
        file.version == VERSION,
        "unsupported MDP schema version {}",
        file.version
    );
    anyhow::ensure!(file.actions.len() <= u8::MAX as usize, "too many actions");
    let n = file.states.len();
    let mut b = MdpBuilder::new(file.actions.iter().cloned());
    let mut post = 0u32;
    let mut choices = Vec::new();
    for (i, st) in file.states.iter().enumerate() {
        choices.clear();
        for c in &st.choices {
            let action = file
                .actions
                .iter()
                .position(|a| *a == c.action)
                .ok_or_else(|| anyhow::anyhow!("state {i}: unknown action {:?}", c.action))?;
            choices.push(Choice {
                action: action as u8,
                post,
                reward: c.reward,
                canon: c.canon,
            });
            post += 1;
        }
        b.push_state(&choices);
    }
    let mut outs = Vec::new();
    for (i, st) in file.states.iter().enumerate() {
        for c in &st.choices {
            outs.clear();
            for o in &c.outcomes {
                anyhow::ensure!(o.next < n, "state {i}: successor {} out of range", o.next);
                outs.push(Outcome {
                    next: o.next as u32,
                    prob: o.prob,
                    reward: o.reward,
                    canon: o.canon,
                });
            }
            b.push_post(&outs);
        }
    }
    Ok(b.build(file.initial as u32)?)
}
