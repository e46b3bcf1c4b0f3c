use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::SimTime;

/// An event scheduled on the engine. Events fire in `(t, seq)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct Timed<E> {
    pub seq: u64,
    pub t: SimTime,
    pub payload: E,
}

impl<E> Timed<E> {
    fn key(&self) -> (SimTime, u64) {
        (self.t, self.seq)
    }
}

impl<E: PartialEq> Eq for Timed<E> {}

impl<E: PartialEq> PartialOrd for Timed<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E: PartialEq> Ord for Timed<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Single-threaded discrete-event engine with a monotone clock.
#[derive(Debug)]
pub struct Simulation<E: PartialEq> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Timed<E>>>,
}

impl<E: PartialEq> Simulation<E> {
    pub fn new(start: SimTime) -> Self {
        Self {
            now: start,
            next_seq: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Schedules `payload` at absolute time `at`, which must not lie in the
    /// past.
    pub fn schedule(&mut self, at: SimTime, payload: E) -> u64 {
        assert!(
            at >= self.now,
            "cannot schedule at {at} before now {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Timed {
            seq,
            t: at,
            payload,
        }));
        seq
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> u64 {
        self.schedule(self.now + delay, payload)
    }

    pub fn next_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|Reverse(e)| e.t)
    }

    fn dispatch(&mut self) -> Option<Timed<E>> {
        let Reverse(event) = self.queue.pop()?;
        assert!(event.t >= self.now, "clock moved backwards");
        self.now = event.t;
        Some(event)
    }

    /// Fires every event with time at most `t`, then moves the clock to `t`.
    pub fn run_until(&mut self, t: SimTime) -> Vec<Timed<E>> {
        assert!(
            t >= self.now,
            "run_until({t}) is behind the clock ({})",
            self.now
        );
        let mut fired = Vec::new();
        while self.next_time().is_some_and(|next| next <= t) {
            fired.extend(self.dispatch());
        }
        self.now = t;
        fired
    }

    /// Fires all events sharing the earliest pending time.
    pub fn step(&mut self) -> Vec<Timed<E>> {
        match self.next_time() {
            Some(t) => self.run_until(t),
            None => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_until_now_is_empty() {
        let mut sim: Simulation<u32> = Simulation::new(SimTime::ZERO);
        assert!(sim.run_until(SimTime::ZERO).is_empty());
    }

    #[test]
    fn equal_times_fire_in_seq_order() {
        let mut sim = Simulation::new(SimTime::ZERO);
        let t = SimTime::from_micros(5);
        sim.schedule(t, "b");
        sim.schedule(t, "a");
        sim.schedule(SimTime::from_micros(1), "first");
        let fired: Vec<_> = sim.run_until(t).into_iter().map(|e| e.payload).collect();
        assert_eq!(fired, ["first", "b", "a"]);
        assert_eq!(sim.now(), t);
    }

    #[test]
    fn run_until_is_idempotent() {
        let mut sim = Simulation::new(SimTime::ZERO);
        sim.schedule(SimTime::from_micros(3), 1);
        let t = SimTime::from_micros(10);
        assert_eq!(sim.run_until(t).len(), 1);
        assert!(sim.run_until(t).is_empty());
    }

    #[test]
    fn step_stops_at_the_earliest_instant() {
        let mut sim = Simulation::new(SimTime::ZERO);
        sim.schedule(SimTime::from_micros(2), 'x');
        sim.schedule(SimTime::from_micros(2), 'y');
        sim.schedule(SimTime::from_micros(7), 'z');
        assert_eq!(sim.step().len(), 2);
        assert_eq!(sim.now(), SimTime::from_micros(2));
        assert_eq!(sim.pending(), 1);
    }

    #[test]
    #[should_panic]
    fn scheduling_in_the_past_panics() {
        let mut sim = Simulation::new(SimTime::from_micros(10));
        sim.schedule(SimTime::from_micros(9), ());
    }
}
