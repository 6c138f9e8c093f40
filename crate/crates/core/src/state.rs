use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Append-only reward history of one arm.
///
/// Keeps a running prefix sum so that the mean of any suffix is O(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBuffer {
    arm: usize,
    rewards: Vec<f64>,
    timesteps: Vec<u64>,
    prefix: Vec<f64>,
}

impl SampleBuffer {
    pub fn new(arm: usize) -> Self {
        SampleBuffer {
            arm,
            rewards: Vec::new(),
            timesteps: Vec::new(),
            prefix: vec![0.0],
        }
    }

    pub fn arm(&self) -> usize {
        self.arm
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn timesteps(&self) -> &[u64] {
        &self.timesteps
    }

    pub fn push(&mut self, reward: f64, t: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::InvalidReward(reward));
        }
        if let Some(&last) = self.timesteps.last() {
            if t <= last {
                return Err(Error::Constraint(format!(
                    "observation timesteps must increase (arm {}: {t} after {last})",
                    self.arm
                )));
            }
        }
        let total = self.prefix[self.rewards.len()] + reward;
        self.rewards.push(reward);
        self.timesteps.push(t);
        self.prefix.push(total);
        Ok(())
    }

    /// Mean of the latest `tau` rewards, `None` when `tau == 0`.
    pub fn window_mean(&self, tau: usize) -> Option<f64> {
        let n = self.rewards.len();
        if tau == 0 || tau > n {
            return None;
        }
        Some((self.prefix[n] - self.prefix[n - tau]) / tau as f64)
    }

    /// The latest `tau` rewards (or fewer when the buffer is shorter).
    pub fn latest(&self, tau: usize) -> &[f64] {
        let n = self.rewards.len();
        &self.rewards[n - tau.min(n)..]
    }
}

/// Everything a policy has observed: one [`SampleBuffer`] per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    buffers: Vec<SampleBuffer>,
}

impl PolicyState {
    pub fn new(num_arms: usize) -> Self {
        PolicyState {
            buffers: (0..num_arms).map(SampleBuffer::new).collect(),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.buffers.len()
    }

    pub fn buffer(&self, arm: usize) -> &SampleBuffer {
        &self.buffers[arm]
    }

    pub fn buffers(&self) -> &[SampleBuffer] {
        &self.buffers
    }

    pub fn total_samples(&self) -> usize {
        self.buffers.iter().map(SampleBuffer::len).sum()
    }

    /// Records the reward observed for `arm` at timestep `t`.
    pub fn observe(&mut self, arm: usize, reward: f64, t: u64) -> Result<()> {
        let k = self.buffers.len();
        self.buffers
            .get_mut(arm)
            .ok_or(Error::InvalidArm { arm, k })?
            .push(reward, t)
    }
}
