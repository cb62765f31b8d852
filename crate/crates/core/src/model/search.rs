//! Depth-first search over parameter assignments with constraint pruning.
//!
//! Branching parameters are taken in id order and their values in domain
//! order, so leaves are visited in canonical order. A functional Depend is
//! computed at the shallowest depth where all parameters it transitively
//! reads are assigned; a constraint is checked exactly at that depth and
//! bound-checked (interval reasoning over domains) at every shallower one.

use thiserror::Error;

use super::network::{Env, EvalError, Network};
use super::{Exogenous, Model, Specification, Value};

/// Default cap on the number of combinations a search may visit.
pub const DEFAULT_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("search space has {size} combinations, above the cap of {cap}")]
    TooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub(crate) struct Plan<'n> {
    net: &'n Network,
    order: Vec<usize>,
    values: Vec<Vec<Value>>,
    fn_level: Vec<usize>,
    con_level: Vec<usize>,
}

impl<'n> Plan<'n> {
    /// `branch` are the slots to enumerate; every other free parameter must
    /// already be set in the base env.
    pub(crate) fn new(net: &'n Network, branch: Vec<usize>, cap: u128) -> Result<Self, SearchError> {
        let mut size: u128 = 1;
        for &s in &branch {
            size = size.saturating_mul(net.slots[s].domain.size());
        }
        if size > cap {
            return Err(SearchError::TooLarge { size, cap });
        }
        let mut slot_level = vec![0usize; net.slots.len()];
        for (k, &s) in branch.iter().enumerate() {
            slot_level[s] = k + 1;
        }
        let mut fn_level = Vec::with_capacity(net.functions.len());
        for node in &net.functions {
            let lvl = node.inputs.iter().map(|s| slot_level[*s]).max().unwrap_or(0);
            slot_level[node.output.expect("functional node")] = lvl;
            fn_level.push(lvl);
        }
        let con_level = net
            .constraints
            .iter()
            .map(|c| c.inputs.iter().map(|s| slot_level[*s]).max().unwrap_or(0))
            .collect();
        let values = branch.iter().map(|s| net.slots[*s].domain.values()).collect();
        Ok(Plan {
            net,
            order: branch,
            values,
            fn_level,
            con_level,
        })
    }

    /// Visit every feasible complete assignment in canonical order.
    pub(crate) fn run<F>(&self, env: &mut Env, visit: &mut F) -> Result<(), SearchError>
    where
        F: FnMut(&Env) -> Result<(), SearchError>,
    {
        self.descend(0, env, visit)
    }

    fn descend<F>(&self, level: usize, env: &mut Env, visit: &mut F) -> Result<(), SearchError>
    where
        F: FnMut(&Env) -> Result<(), SearchError>,
    {
        let net = self.net;
        let mut ok = true;
        for (node, &lvl) in net.functions.iter().zip(&self.fn_level) {
            if lvl == level {
                match net.compute(node, env) {
                    Ok(v) => env[node.output.expect("functional node")] = Some(v),
                    Err(EvalError::OutOfRange { .. }) => {
                        ok = false;
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        for (c, &lvl) in net.constraints.iter().zip(&self.con_level) {
            if !ok {
                break;
            }
            let holds = if lvl == level {
                net.check(c, env)?
            } else if lvl > level {
                net.may_hold(c, env)
            } else {
                true
            };
            if !holds {
                ok = false;
                break;
            }
        }
        if ok {
            if level == self.order.len() {
                visit(env)?;
            } else {
                let slot = self.order[level];
                for v in &self.values[level] {
                    env[slot] = Some(v.clone());
                    self.descend(level + 1, env, visit)?;
                }
                env[slot] = None;
            }
        }
        for (node, &lvl) in net.functions.iter().zip(&self.fn_level) {
            if lvl == level && level > 0 {
                env[node.output.expect("functional node")] = None;
            }
        }
        Ok(())
    }
}

/// Unwrap a complete env.
pub(crate) fn full(env: &Env) -> Vec<Value> {
    env.iter()
        .map(|v| v.clone().expect("complete assignment at leaf"))
        .collect()
}

/// All feasible Specifications, in canonical order, with the default cap.
pub fn enumerate_specifications(
    model: &Model,
    exogenous: &Exogenous,
) -> Result<Vec<Specification>, SearchError> {
    enumerate_specifications_with_cap(model, exogenous, DEFAULT_CAP)
}

pub fn enumerate_specifications_with_cap(
    model: &Model,
    exogenous: &Exogenous,
    cap: u128,
) -> Result<Vec<Specification>, SearchError> {
    let net = Network::compile(model)?;
    let plan = Plan::new(&net, net.free_params.clone(), cap)?;
    let mut env = net.base_env(exogenous)?;
    let mut out = Vec::new();
    plan.run(&mut env, &mut |env| {
        out.push(net.specification(&full(env)));
        Ok(())
    })?;
    Ok(out)
}
