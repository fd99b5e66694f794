// SPDX-License-Identifier: Apache-2.0

//! Millisecond clock with a real and a virtual mode.
//!
//! Virtual time only moves when [`Clock::advance`] is called. Threads blocked
//! in [`Clock::sleep_until`] are released in deadline order as time passes
//! their deadline.

use std::collections::BTreeSet;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    Real,
    Virtual,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClockError {
    #[error("cannot advance a real-time clock")]
    NotVirtual,
}

/// A sleeper released by an advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Wakeup {
    pub deadline: u64,
    pub id: u64,
}

#[derive(Debug, Default)]
struct VirtualState {
    now: u64,
    next_id: u64,
    sleepers: BTreeSet<Wakeup>,
}

#[derive(Debug)]
enum Inner {
    Real { epoch: Instant },
    Virtual { state: Mutex<VirtualState>, released: Condvar },
}

/// Shared handle; clones observe the same time.
#[derive(Debug, Clone)]
pub struct Clock(Arc<Inner>);

impl Clock {
    pub fn real() -> Self {
        Clock(Arc::new(Inner::Real { epoch: Instant::now() }))
    }

    /// Virtual clock starting at t = 0.
    pub fn new_virtual() -> Self {
        Clock(Arc::new(Inner::Virtual { state: Mutex::new(VirtualState::default()), released: Condvar::new() }))
    }

    pub fn for_mode(mode: ClockMode) -> Self {
        match mode {
            ClockMode::Real => Self::real(),
            ClockMode::Virtual => Self::new_virtual(),
        }
    }

    pub fn mode(&self) -> ClockMode {
        match &*self.0 {
            Inner::Real { .. } => ClockMode::Real,
            Inner::Virtual { .. } => ClockMode::Virtual,
        }
    }

    pub fn is_virtual(&self) -> bool {
        self.mode() == ClockMode::Virtual
    }

    pub fn now_ms(&self) -> u64 {
        match &*self.0 {
            Inner::Real { epoch } => epoch.elapsed().as_millis() as u64,
            Inner::Virtual { state, .. } => state.lock().unwrap().now,
        }
    }

    /// Moves virtual time forward by `delta_ms`, releasing every sleeper whose
    /// deadline is reached. Returns the released sleepers in deadline order.
    pub fn advance(&self, delta_ms: u64) -> Result<Vec<Wakeup>, ClockError> {
        match &*self.0 {
            Inner::Real { .. } => Err(ClockError::NotVirtual),
            Inner::Virtual { state, .. } => {
                let target = state.lock().unwrap().now + delta_ms;
                self.advance_to(target)
            }
        }
    }

    /// Advances virtual time to `t` (no-op if already past it).
    pub fn advance_to(&self, t: u64) -> Result<Vec<Wakeup>, ClockError> {
        let Inner::Virtual { state, released } = &*self.0 else {
            return Err(ClockError::NotVirtual);
        };
        let mut st = state.lock().unwrap();
        let mut woken = Vec::new();
        while let Some(&first) = st.sleepers.first() {
            if first.deadline > t {
                break;
            }
            st.sleepers.pop_first();
            st.now = st.now.max(first.deadline);
            woken.push(first);
        }
        st.now = st.now.max(t);
        drop(st);
        released.notify_all();
        Ok(woken)
    }

    /// Blocks the calling thread until the clock reads at least `deadline`.
    pub fn sleep_until(&self, deadline: u64) {
        match &*self.0 {
            Inner::Real { .. } => {
                let now = self.now_ms();
                if deadline > now {
                    std::thread::sleep(Duration::from_millis(deadline - now));
                }
            }
            Inner::Virtual { state, released } => {
                let mut st = state.lock().unwrap();
                if st.now >= deadline {
                    return;
                }
                let id = st.next_id;
                st.next_id += 1;
                st.sleepers.insert(Wakeup { deadline, id });
                let _st = released.wait_while(st, |s| s.now < deadline).unwrap();
            }
        }
    }

    /// Number of threads currently parked on the virtual clock.
    pub fn sleepers(&self) -> usize {
        match &*self.0 {
            Inner::Real { .. } => 0,
            Inner::Virtual { state, .. } => state.lock().unwrap().sleepers.len(),
        }
    }

    /// Drives time to `t`: advances a virtual clock, sleeps on a real one.
    pub fn run_to(&self, t: u64) {
        if self.is_virtual() {
            self.advance_to(t).expect("virtual");
        } else {
            self.sleep_until(t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    fn wait_for_sleepers(clock: &Clock, n: usize) {
        while clock.sleepers() < n {
            thread::yield_now();
        }
    }

    #[test]
    fn sleeper_released_at_deadline() {
        let clock = Clock::new_virtual();
        let c = clock.clone();
        let h = thread::spawn(move || {
            c.sleep_until(500);
            c.now_ms()
        });
        wait_for_sleepers(&clock, 1);
        let woken = clock.advance(500).unwrap();
        assert_eq!(woken.len(), 1);
        assert_eq!(woken[0].deadline, 500);
        assert_eq!(h.join().unwrap(), 500);
    }

    #[test]
    fn release_order_follows_deadlines() {
        let clock = Clock::new_virtual();
        let mut handles = Vec::new();
        for d in [500, 100] {
            let c = clock.clone();
            handles.push(thread::spawn(move || c.sleep_until(d)));
            wait_for_sleepers(&clock, handles.len());
        }
        let woken = clock.advance(500).unwrap();
        assert_eq!(woken.iter().map(|w| w.deadline).collect::<Vec<_>>(), vec![100, 500]);
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn zero_advance_releases_nothing_in_future() {
        let clock = Clock::new_virtual();
        let c = clock.clone();
        let h = thread::spawn(move || c.sleep_until(10));
        wait_for_sleepers(&clock, 1);
        assert!(clock.advance(0).unwrap().is_empty());
        assert_eq!(clock.sleepers(), 1);
        clock.advance(10).unwrap();
        h.join().unwrap();
    }

    #[test]
    fn real_clock_refuses_advance() {
        assert_eq!(Clock::real().advance(1), Err(ClockError::NotVirtual));
    }

    #[test]
    fn monotonic() {
        let clock = Clock::new_virtual();
        clock.advance_to(50).unwrap();
        clock.advance_to(20).unwrap();
        assert_eq!(clock.now_ms(), 50);
        let real = Clock::real();
        let a = real.now_ms();
        assert!(real.now_ms() >= a);
    }
}
