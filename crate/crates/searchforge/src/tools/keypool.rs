//! Round-robin API key pool with per-key daily budgets.
//!
//! A key at budget is never selected; selection rotates among the under-budget
//! keys so usage spreads evenly. State updates happen under one mutex, so the
//! pool is safe to share across rollout threads.

use std::sync::Mutex;

use super::ToolError;

#[derive(Debug)]
struct KeyState {
    key: String,
    used: u64,
}

#[derive(Debug)]
struct PoolState {
    keys: Vec<KeyState>,
    cursor: usize,
}

#[derive(Debug)]
pub struct KeyPool {
    budget: u64,
    state: Mutex<PoolState>,
}

impl KeyPool {
    pub fn new(keys: Vec<String>, daily_budget: u64) -> Self {
        Self {
            budget: daily_budget,
            state: Mutex::new(PoolState {
                keys: keys.into_iter().map(|key| KeyState { key, used: 0 }).collect(),
                cursor: 0,
            }),
        }
    }

    /// Build from a comma-separated environment variable (e.g. `SEARCH_API_KEYS`).
    pub fn from_env(var: &str, daily_budget: u64) -> Option<Self> {
        let raw = std::env::var(var).ok()?;
        let keys: Vec<String> = raw
            .split(',')
            .map(|k| k.trim().to_string())
            .filter(|k| !k.is_empty())
            .collect();
        if keys.is_empty() {
            None
        } else {
            Some(Self::new(keys, daily_budget))
        }
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pick the next under-budget key round-robin and charge one request to it.
    pub fn acquire(&self) -> Result<String, ToolError> {
        let mut state = self.state.lock().unwrap();
        let n = state.keys.len();
        if n == 0 {
            return Err(ToolError::RateLimited);
        }
        for offset in 0..n {
            let idx = (state.cursor + offset) % n;
            if state.keys[idx].used < self.budget {
                state.keys[idx].used += 1;
                state.cursor = (idx + 1) % n;
                return Ok(state.keys[idx].key.clone());
            }
        }
        Err(ToolError::RateLimited)
    }

    /// Mark a key as spent for the day (e.g. after a provider quota error).
    pub fn exhaust(&self, key: &str) {
        let mut state = self.state.lock().unwrap();
        if let Some(k) = state.keys.iter_mut().find(|k| k.key == key) {
            k.used = self.budget;
        }
    }

    /// Reset all budget counters (new day).
    pub fn reset(&self) {
        let mut state = self.state.lock().unwrap();
        for k in state.keys.iter_mut() {
            k.used = 0;
        }
        state.cursor = 0;
    }

    pub fn remaining(&self) -> u64 {
        let state = self.state.lock().unwrap();
        state
            .keys
            .iter()
            .map(|k| self.budget.saturating_sub(k.used))
            .sum()
    }
}
