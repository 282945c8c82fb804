//! JSON documents for [`Mdp`].
//!
//! ```json
//! {
//!   "name": "hallway-4",
//!   "num_states": 4,
//!   "num_actions": 2,
//!   "discount": 0.9,
//!   "transition": [[[1.0, 0.0, 0.0, 0.0], ...], ...],
//!   "reward": [[[-10.0, 0.0, 0.0, 0.0], ...], ...]
//! }
//! ```
//!
//! Tensors are nested `[s][a][s']`. `reward` may be omitted, in which case
//! every reward is zero. Floats are written in shortest round-trip form, so a
//! save/load cycle reproduces every value bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Mdp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub transition: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub reward: Option<Vec<Vec<Vec<f64>>>>,
}

impl From<&Mdp> for MdpDocument {
    fn from(mdp: &Mdp) -> Self {
        let nest = |flat: &[f64]| -> Vec<Vec<Vec<f64>>> {
            flat.chunks(mdp.num_states() * mdp.num_actions())
                .map(|per_state| per_state.chunks(mdp.num_states()).map(<[f64]>::to_vec).collect())
                .collect()
        };
        MdpDocument {
            name: mdp.name().map(str::to_owned),
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            discount: mdp.discount(),
            transition: nest(mdp.transition()),
            reward: Some(nest(mdp.reward())),
        }
    }
}

fn flatten(field: &'static str, tensor: &[Vec<Vec<f64>>], ns: usize, na: usize) -> Result<Vec<f64>> {
    if tensor.len() != ns {
        return Err(Error::invalid(field, format!("expected {ns} states, got {}", tensor.len())));
    }
    let mut flat = Vec::with_capacity(ns * na * ns);
    for (s, per_state) in tensor.iter().enumerate() {
        if per_state.len() != na {
            return Err(Error::invalid(
                field,
                format!("state {s}: expected {na} actions, got {}", per_state.len()),
            ));
        }
        for (a, row) in per_state.iter().enumerate() {
            if row.len() != ns {
                return Err(Error::invalid(
                    field,
                    format!("[{s}][{a}]: expected {ns} successor entries, got {}", row.len()),
                ));
            }
            flat.extend_from_slice(row);
        }
    }
    Ok(flat)
}

impl TryFrom<MdpDocument> for Mdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Mdp> {
        let (ns, na) = (doc.num_states, doc.num_actions);
        let transition = flatten("transition", &doc.transition, ns, na)?;
        let reward = match &doc.reward {
            Some(r) => flatten("reward", r, ns, na)?,
            None => vec![0.0; ns * na * ns],
        };
        let mdp = Mdp::new(ns, na, transition, reward, doc.discount)?;
        Ok(match doc.name {
            Some(name) => mdp.with_name(name),
            None => mdp,
        })
    }
}

/// Parses and validates an MDP document.
pub fn load_mdp(text: &str) -> Result<Mdp> {
    let doc: MdpDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Mdp::try_from(doc)
}

pub fn save_mdp(mdp: &Mdp) -> String {
    serde_json::to_string_pretty(&MdpDocument::from(mdp)).expect("MDP documents always serialize")
}
