//! Concrete trajectory replay for double-integrator plants: turns
//! counterexample regions into demonstrable crash traces.
//!
//! Between control instants the state follows the exact closed form
//! `r(t) = r₀ + rv₀·t − a·t²/2`, `rv(t) = rv₀ − a·t` (relative position
//! closes when the relative velocity is negative). Crash detection analyzes
//! the continuous minimum of the position quadratic over the control
//! period, not just its endpoints, so dips below zero between samples are
//! caught; the crash time is reported as an isolating rational interval
//! around the (generally irrational) root.

use num_traits::Zero;

use crate::network::Network;
use crate::rat::{self, Rat};
use crate::reach::CexRegion;

/// Plant dynamics with closed-form advancement under constant control.
pub trait Plant {
    /// State after `dt` seconds of constant control `a`.
    fn advance(&self, state: &[Rat; 2], a: &Rat, dt: &Rat) -> [Rat; 2];
    /// Earliest time in `[0, dt]` at which the crash predicate
    /// (position ≤ 0) holds, as an isolating interval; `None` if the
    /// position stays positive throughout.
    fn crash_within(&self, state: &[Rat; 2], a: &Rat, dt: &Rat) -> Option<(Rat, Rat)>;
}

/// The relative-distance double integrator: `r' = rv`, `rv' = −a`.
pub struct DoubleIntegrator;

impl DoubleIntegrator {
    fn position_at(state: &[Rat; 2], a: &Rat, t: &Rat) -> Rat {
        &state[0] + &state[1] * t - a * t * t / rat::int(2)
    }
}

impl Plant for DoubleIntegrator {
    fn advance(&self, state: &[Rat; 2], a: &Rat, dt: &Rat) -> [Rat; 2] {
        [
            Self::position_at(state, a, dt),
            &state[1] - a * dt,
        ]
    }

    fn crash_within(&self, state: &[Rat; 2], a: &Rat, dt: &Rat) -> Option<(Rat, Rat)> {
        let r0 = state[0].clone();
        if r0 <= rat::zero() {
            return Some((rat::zero(), rat::zero()));
        }
        let r_end = Self::position_at(state, a, dt);
        // Interior minimum exists only for a convex position parabola
        // (a < 0) with the vertex rv/a inside the step.
        let vertex = if a < &rat::zero() {
            let t_star = &state[1] / a;
            if t_star > rat::zero() && &t_star < dt {
                Some(t_star)
            } else {
                None
            }
        } else {
            None
        };
        let (mut hi, hi_val) = if r_end <= rat::zero() {
            (dt.clone(), r_end)
        } else if let Some(t_star) = vertex {
            let v = Self::position_at(state, a, &t_star);
            if v <= rat::zero() {
                (t_star, v)
            } else {
                return None;
            }
        } else {
            return None;
        };
        if hi_val.is_zero() {
            // Exact rational root.
            return Some((hi.clone(), hi));
        }
        // Isolate the earliest root by sign bisection: position(lo) > 0,
        // position(hi) < 0 throughout.
        let mut lo = rat::zero();
        for _ in 0..40 {
            let mid = rat::midpoint(&lo, &hi);
            let v = Self::position_at(state, a, &mid);
            if v.is_zero() {
                return Some((mid.clone(), mid));
            }
            if v > rat::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some((lo, hi))
    }
}

/// Control period and saturation bounds for the simulated loop.
#[derive(Clone, Debug)]
pub struct PlantConfig {
    /// Control period `T` in seconds.
    pub period: Rat,
    /// Maximal braking, i.e. the lower control bound `−B`.
    pub accel_min: Rat,
    /// Maximal acceleration `A`.
    pub accel_max: Rat,
}

impl PlantConfig {
    pub fn new(period: Rat, accel_min: Rat, accel_max: Rat) -> PlantConfig {
        assert!(period > rat::zero(), "control period must be positive");
        assert!(accel_min < accel_max, "control bounds must be ordered");
        PlantConfig { period, accel_min, accel_max }
    }

    fn clamp(&self, a: Rat) -> Rat {
        if a < self.accel_min {
            self.accel_min.clone()
        } else if a > self.accel_max {
            self.accel_max.clone()
        } else {
            a
        }
    }
}

/// One control instant: the state observed and the action taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryStep {
    pub time: Rat,
    pub position: Rat,
    pub velocity: Rat,
    pub accel: Rat,
}

/// A simulated closed-loop run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub crashed: bool,
    /// Absolute crash time as an isolating rational interval.
    pub crash_time: Option<(Rat, Rat)>,
    /// Cleared when the trajectory starts from a region that was not
    /// verified concrete ("not a verified violation").
    pub verified_violation: bool,
}

/// Simulate the closed loop: at each control instant the network reads
/// `(r, rv)`, its (clamped) output is held constant for one period, and the
/// plant advances along the exact closed form.
pub fn simulate(
    net: &Network,
    plant: &dyn Plant,
    cfg: &PlantConfig,
    initial: (Rat, Rat),
    steps: usize,
) -> Trajectory {
    assert!(steps >= 1, "at least one control step");
    assert_eq!(net.input_dim(), 2, "plant replay expects a 2-input network");
    let mut state = [initial.0, initial.1];
    let mut time = rat::zero();
    let mut out = Trajectory {
        steps: Vec::with_capacity(steps),
        crashed: false,
        crash_time: None,
        verified_violation: true,
    };
    for _ in 0..steps {
        let a = cfg.clamp(net.evaluate(&state.clone())[0].clone());
        out.steps.push(TrajectoryStep {
            time: time.clone(),
            position: state[0].clone(),
            velocity: state[1].clone(),
            accel: a.clone(),
        });
        if let Some((lo, hi)) = plant.crash_within(&state, &a, &cfg.period) {
            out.crashed = true;
            out.crash_time = Some((&time + lo, &time + hi));
            return out;
        }
        state = plant.advance(&state, &a, &cfg.period);
        time += &cfg.period;
    }
    out
}

/// Replay a counterexample region from its witness state. Trajectories of
/// regions that were not verified concrete carry a marker instead of a
/// violation claim.
pub fn replay_region(
    net: &Network,
    plant: &dyn Plant,
    cfg: &PlantConfig,
    region: &CexRegion,
    steps: usize,
    verified_concrete: bool,
) -> Trajectory {
    assert_eq!(region.witness.len(), 2, "plant replay expects a 2-d witness");
    let mut t = simulate(
        net,
        plant,
        cfg,
        (region.witness[0].clone(), region.witness[1].clone()),
        steps,
    );
    t.verified_violation = verified_concrete;
    t
}

/// CSV rows `t,r,rv,a`, one per control instant.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = String::from("t,r,rv,a\n");
    for s in &t.steps {
        out.push_str(&format!(
            "{},{},{},{}\n",
            rat::display(&s.time),
            rat::display(&s.position),
            rat::display(&s.velocity),
            rat::display(&s.accel)
        ));
    }
    out
}
