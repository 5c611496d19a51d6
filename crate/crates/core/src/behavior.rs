//! Obstacle-avoidance finite state machine: fly forward until the average
//! disparity crosses a threshold, pick a random new direction, rotate until
//! aligned and clear, then fly forward again.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::world::wrap_angle;

/// FSM mode. `PickDirection` never persists across a step; it exists so the
/// transition table can be exercised explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FsmMode {
    Forward,
    PickDirection,
    Turning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnDirection {
    Clockwise,
    CounterClockwise,
}

impl TurnDirection {
    /// Sign of the heading rate: counterclockwise is positive.
    pub fn sign(self) -> f64 {
        match self {
            TurnDirection::Clockwise => -1.0,
            TurnDirection::CounterClockwise => 1.0,
        }
    }
}

/// Motion command emitted each control step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward,
    Turn(TurnDirection),
}

/// Full FSM state. `target_heading` and `turn_direction` are meaningful
/// whenever `mode == Turning`. `scanning` marks the sub-phase after the drone
/// reached its picked direction but found the view still blocked: it keeps
/// rotating in the same direction and exits as soon as the view clears,
/// regardless of the stale target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmState {
    pub mode: FsmMode,
    pub target_heading: f64,
    pub turn_direction: TurnDirection,
    pub scanning: bool,
}

impl FsmState {
    pub fn forward() -> Self {
        Self {
            mode: FsmMode::Forward,
            target_heading: 0.0,
            turn_direction: TurnDirection::CounterClockwise,
            scanning: false,
        }
    }

    pub fn turning(target_heading: f64, turn_direction: TurnDirection) -> Self {
        Self {
            mode: FsmMode::Turning,
            target_heading,
            turn_direction,
            scanning: false,
        }
    }

    pub fn pick_direction() -> Self {
        Self {
            mode: FsmMode::PickDirection,
            target_heading: 0.0,
            turn_direction: TurnDirection::CounterClockwise,
            scanning: false,
        }
    }
}

/// Thresholds and rates for the avoidance heuristic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BehaviorConfig {
    /// Disparity threshold in pixels: strictly above means "obstacle".
    pub disparity_threshold: f64,
    /// Attitude-error threshold in radians: within it counts as aligned.
    pub attitude_threshold: f64,
    /// Turn rate in radians per second.
    pub turn_rate: f64,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            disparity_threshold: 6.67,
            attitude_threshold: 5.0_f64.to_radians(),
            turn_rate: 90.0_f64.to_radians(),
        }
    }
}

/// Result of one FSM step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub command: Command,
    pub state: FsmState,
    /// True when a fresh avoidance direction was drawn this step.
    pub picked: bool,
}

/// Draws a new target heading uniformly over the circle and sets the turn
/// direction to the shortest rotation from the current heading.
pub fn pick_new_direction<R: Rng>(heading: f64, rng: &mut R) -> FsmState {
    let target = wrap_angle(rng.random::<f64>() * std::f64::consts::TAU);
    let err = wrap_angle(target - heading);
    let dir = if err >= 0.0 {
        TurnDirection::CounterClockwise
    } else {
        TurnDirection::Clockwise
    };
    FsmState::turning(target, dir)
}

/// One transition of the avoidance FSM.
///
/// Forward: disparity strictly above the threshold triggers a pick; at or
/// below it the drone keeps flying. A pick immediately enters Turning. While
/// turning, the drone rotates until the attitude error is inside the
/// threshold, then resumes forward flight if the view is clear. If the view
/// at the picked direction is still blocked, it keeps turning in the same
/// direction and flies forward at the first clear heading.
pub fn fsm_step<R: Rng>(
    fsm: &FsmState,
    disparity: f64,
    heading: f64,
    cfg: &BehaviorConfig,
    rng: &mut R,
) -> StepOutcome {
    let (mut state, picked) = match fsm.mode {
        FsmMode::Forward => {
            if disparity > cfg.disparity_threshold {
                (pick_new_direction(heading, rng), true)
            } else {
                return StepOutcome {
                    command: Command::Forward,
                    state: *fsm,
                    picked: false,
                };
            }
        }
        FsmMode::PickDirection => (pick_new_direction(heading, rng), true),
        FsmMode::Turning => (*fsm, false),
    };

    let clear = disparity <= cfg.disparity_threshold;
    if state.scanning {
        // Past the picked direction with a blocked view: rotate until clear.
        return if clear {
            StepOutcome {
                command: Command::Forward,
                state: FsmState::forward(),
                picked,
            }
        } else {
            StepOutcome {
                command: Command::Turn(state.turn_direction),
                state,
                picked,
            }
        };
    }

    let err = wrap_angle(state.target_heading - heading);
    if err.abs() > cfg.attitude_threshold {
        StepOutcome {
            command: Command::Turn(state.turn_direction),
            state,
            picked,
        }
    } else if clear {
        StepOutcome {
            command: Command::Forward,
            state: FsmState::forward(),
            picked,
        }
    } else {
        state.scanning = true;
        StepOutcome {
            command: Command::Turn(state.turn_direction),
            state,
            picked,
        }
    }
}
