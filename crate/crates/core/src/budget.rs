//! Wall-clock budgets for interruptible computations.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimeBudget {
    #[default]
    Unbounded,
    Bounded(Duration),
}

impl TimeBudget {
    pub fn bounded(max: Duration) -> Result<Self> {
        if max.is_zero() {
            return Err(Error::InvalidParameter("time budget must be positive".into()));
        }
        Ok(TimeBudget::Bounded(max))
    }

    pub fn from_secs_f64(secs: f64) -> Result<Self> {
        if !(secs.is_finite() && secs > 0.0) {
            return Err(Error::InvalidParameter(format!("time budget {secs}s must be positive")));
        }
        Self::bounded(Duration::from_secs_f64(secs))
    }

    pub fn max_duration(&self) -> Option<Duration> {
        match self {
            TimeBudget::Unbounded => None,
            TimeBudget::Bounded(d) => Some(*d),
        }
    }

    pub fn start(self) -> Deadline {
        Deadline::after(Instant::now(), self.max_duration())
    }
}

/// A running budget.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    started: Instant,
    end: Option<Instant>,
}

impl Deadline {
    fn after(started: Instant, max: Option<Duration>) -> Self {
        Self {
            started,
            end: max.map(|m| started + m),
        }
    }

    pub fn unbounded() -> Self {
        Self::after(Instant::now(), None)
    }

    pub fn expired(&self) -> bool {
        self.end.is_some_and(|end| Instant::now() >= end)
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.end.map(|end| end.saturating_duration_since(Instant::now()))
    }

    /// A budget covering `fraction` of the time left, never extending past
    /// this deadline.
    pub fn share(&self, fraction: f64) -> TimeBudget {
        match self.remaining() {
            None => TimeBudget::Unbounded,
            Some(left) => TimeBudget::Bounded(left.mul_f64(fraction.clamp(0.0, 1.0)).max(Duration::from_nanos(1))),
        }
    }
}
