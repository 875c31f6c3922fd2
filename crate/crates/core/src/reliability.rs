//! Slotted-attempt collision model and the obstruction/collision loss budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacParams {
    pub n_nodes: u32,
    /// Per-node attempt probability per slot.
    pub tau: f64,
    pub k_microslots: u32,
    pub slot_s: f64,
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.n_nodes < 1 {
            v.push("mac.n_nodes must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            v.push(format!("mac.tau must be in [0,1] (got {})", self.tau));
        }
        if self.k_microslots < 1 {
            v.push("mac.k_microslots must be >= 1".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBudget {
    pub p_obs: f64,
    pub p_col: f64,
    pub p_succ: f64,
}

/// 1 - (1 - tau)^(N-1)
pub fn collision_prob(params: &MacParams) -> f64 {
    contention(params.tau, params.n_nodes)
}

/// 1 - (1 - tau/K)^(N-1)
pub fn collision_prob_jitter(params: &MacParams) -> f64 {
    contention(
        params.tau / f64::from(params.k_microslots.max(1)),
        params.n_nodes,
    )
}

fn contention(per_slot: f64, n: u32) -> f64 {
    let others = f64::from(n.saturating_sub(1));
    // 1 - exp((N-1) ln(1-p)) keeps precision for tiny p
    -((others * (-per_slot).ln_1p()).exp_m1())
}

/// Split total loss into obstruction and collision components.
pub fn loss_decomposition(
    p_obs: f64,
    params: &MacParams,
    jitter: bool,
) -> Result<ReliabilityBudget> {
    params.validate()?;
    if !(0.0..=1.0).contains(&p_obs) {
        return Err(Error::domain(format!(
            "p_obs must be in [0,1] (got {p_obs})"
        )));
    }
    let p_col = if jitter {
        collision_prob_jitter(params)
    } else {
        collision_prob(params)
    };
    if p_obs + p_col > 1.0 {
        return Err(Error::domain(format!(
            "loss components sum to {} > 1",
            p_obs + p_col
        )));
    }
    Ok(ReliabilityBudget {
        p_obs,
        p_col,
        p_succ: 1.0 - p_obs - p_col,
    })
}

/// Budget from an explicit collision probability (used for the baseline split).
pub fn budget_from_components(p_obs: f64, p_col: f64) -> Result<ReliabilityBudget> {
    if !(0.0..=1.0).contains(&p_obs) || !(0.0..=1.0).contains(&p_col) || p_obs + p_col > 1.0 {
        return Err(Error::domain(format!(
            "invalid loss components p_obs={p_obs}, p_col={p_col}"
        )));
    }
    Ok(ReliabilityBudget {
        p_obs,
        p_col,
        p_succ: 1.0 - p_obs - p_col,
    })
}

/// Attempt probability that yields `target_p_col` with jitter over `k` micro-slots.
pub fn calibrate_tau(target_p_col: f64, n_nodes: u32, k: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&target_p_col) {
        return Err(Error::domain(format!(
            "target must be in [0,1) (got {target_p_col})"
        )));
    }
    if n_nodes < 2 {
        return Err(Error::domain("need at least two nodes to collide"));
    }
    if k < 1 {
        return Err(Error::domain("k must be >= 1"));
    }
    let per_micro = -((1.0 - target_p_col).ln() / f64::from(n_nodes - 1)).exp_m1();
    let tau = f64::from(k) * per_micro;
    if tau > 1.0 {
        return Err(Error::Infeasible(format!(
            "required tau {tau:.4} exceeds 1"
        )));
    }
    Ok(tau)
}
