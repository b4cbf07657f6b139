//! Time-ordered sample sequences produced by propagators and steppers.

/// A state with a time stamp and a flat numeric encoding.
///
/// The flat layout is what the oracle compares against: `[x, y, z, vx, vy, vz]`
/// for particle states, `[x, y, z, Λx, Λy, Λz]` for relativistic ones.
pub trait TimedState {
    fn time(&self) -> f64;
    fn to_flat(&self) -> Vec<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub samples: Vec<S>,
    /// Nominal step; the last step may be shorter.
    pub step: f64,
    pub scheme: &'static str,
}

impl<S: TimedState> Trajectory<S> {
    pub fn new(step: f64, scheme: &'static str) -> Self {
        Self { samples: Vec::new(), step, scheme }
    }

    pub fn with_capacity(step: f64, scheme: &'static str, n: usize) -> Self {
        Self { samples: Vec::with_capacity(n), step, scheme }
    }

    pub fn push(&mut self, s: S) {
        debug_assert!(
            self.samples.last().map_or(true, |p| p.time() < s.time()),
            "trajectory times must increase"
        );
        self.samples.push(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(TimedState::time).collect()
    }

    pub fn last(&self) -> Option<&S> {
        self.samples.last()
    }
}
