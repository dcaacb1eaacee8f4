//! Truncation of infinite sums over the remote past.
//!
//! A sum is cut once the last `window` consecutive term magnitudes all fall
//! below `tail_tol·(1 - ρ̂)`, where `ρ̂` is the observed geometric decay rate
//! between the last two windows. Sums that do not decay within `max_terms`
//! are reported, never silently truncated.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationPolicy {
    pub tail_tol: f64,
    pub max_terms: usize,
    pub window: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { tail_tol: 1e-10, max_terms: 100_000, window: 50 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) || self.window == 0 || self.max_terms == 0 {
            return Err(Error::invalid("truncation policy needs tail_tol > 0, window >= 1, max_terms >= 1"));
        }
        Ok(())
    }
}

/// Outcome of feeding one term to a [`TailMonitor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailStep {
    Continue,
    Converged,
    /// `max_terms` reached while terms were still decaying.
    Exhausted,
    /// Terms stopped decaying or overflowed.
    Divergent,
}

/// Tracks the magnitudes of a stream of terms and decides when to stop.
#[derive(Debug, Clone)]
pub struct TailMonitor {
    policy: TruncationPolicy,
    recent: VecDeque<f64>,
    count: usize,
    rho: f64,
    small_run: usize,
}

impl TailMonitor {
    pub fn new(policy: TruncationPolicy) -> Self {
        TailMonitor { policy, recent: VecDeque::with_capacity(2 * policy.window + 1), count: 0, rho: f64::NAN, small_run: 0 }
    }

    pub fn observe(&mut self, magnitude: f64) -> TailStep {
        let w = self.policy.window;
        self.count += 1;
        if !magnitude.is_finite() || magnitude > 1e300 {
            return TailStep::Divergent;
        }
        if self.recent.len() == 2 * w {
            self.recent.pop_front();
        }
        self.recent.push_back(magnitude);
        if self.recent.len() == 2 * w {
            let prev = self.recent.iter().take(w).fold(0.0_f64, |a, &b| a.max(b));
            let last = self.recent.iter().skip(w).fold(0.0_f64, |a, &b| a.max(b));
            self.rho = if last == 0.0 {
                0.0
            } else if prev == 0.0 {
                f64::INFINITY
            } else {
                (last / prev).powf(1.0 / w as f64)
            };
            let threshold = self.policy.tail_tol * (1.0 - self.rho);
            if self.rho < 1.0 && last < threshold {
                self.small_run = self.recent.iter().rev().take_while(|&&m| m < threshold).count();
                return TailStep::Converged;
            }
        }
        if self.count >= self.policy.max_terms {
            return if self.rho < 1.0 { TailStep::Exhausted } else { TailStep::Divergent };
        }
        TailStep::Continue
    }

    /// Terms seen so far.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of leading terms that carry the sum: everything before the
    /// confirming run of small terms.
    pub fn terms_used(&self) -> usize {
        self.count - self.small_run
    }

    pub fn decay_rate(&self) -> f64 {
        self.rho
    }

    pub fn tail_tol(&self) -> f64 {
        self.policy.tail_tol
    }
}

/// Summary of a truncated infinite sum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationInfo {
    pub terms_used: usize,
    pub terms_evaluated: usize,
    pub converged: bool,
    pub decay_rate: f64,
    /// Bound on the neglected tail of the monitored magnitudes.
    pub tail_bound: f64,
}

/// Drives `next` (which returns the monitored magnitude of each successive
/// term) until the policy stops it. Divergence is an error; exhaustion is
/// reported with `converged = false`.
pub fn run_tail<F: FnMut(usize) -> f64>(policy: TruncationPolicy, mut next: F) -> Result<TruncationInfo> {
    policy.validate()?;
    let mut mon = TailMonitor::new(policy);
    let mut j = 0;
    loop {
        let step = mon.observe(next(j));
        j += 1;
        match step {
            TailStep::Continue => continue,
            TailStep::Divergent => return Err(Error::NonSummable { terms: mon.count() }),
            TailStep::Converged | TailStep::Exhausted => {
                let rho = mon.decay_rate();
                let converged = step == TailStep::Converged;
                let tail_bound = if converged { policy.tail_tol } else { f64::INFINITY };
                return Ok(TruncationInfo {
                    terms_used: if converged { mon.terms_used() } else { mon.count() },
                    terms_evaluated: mon.count(),
                    converged,
                    decay_rate: rho,
                    tail_bound,
                });
            }
        }
    }
}
