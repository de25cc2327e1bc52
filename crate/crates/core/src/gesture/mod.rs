//! Wrist-motion commands: push, pull and directional slide.

pub mod corpus;
mod target;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::{Millis, Pose2D, UserId, Vec2};

pub use target::{resolve_target, GestureError, CONE_HALF_ANGLE, RAY_TOLERANCE};

/// Minimum sustained wrist speed along the gesture axis (m/s).
pub const SPEED_THRESHOLD: f64 = 0.2;
/// Trailing window over which the speed must be sustained.
pub const WINDOW_MS: Millis = 150;
/// The window is checked as this many equal sub-windows.
const SUB_WINDOWS: i64 = 3;
/// Minimum spacing between two events of one user.
pub const REFRACTORY_MS: Millis = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristSample {
    pub pose: Pose2D,
    pub timestamp: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GestureKind {
    Push,
    Pull,
    Slide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub user_id: UserId,
    pub kind: GestureKind,
    /// Unit vector of the commanded motion.
    pub direction: Vec2,
    /// Peak wrist speed inside the window (m/s).
    pub magnitude: f64,
    pub at: Millis,
    /// Wrist position when the gesture fired.
    pub origin: Pose2D,
}

/// Latest sample at or before `t`.
fn sample_at(window: &[WristSample], t: Millis) -> Option<&WristSample> {
    window.iter().rev().find(|s| s.timestamp <= t)
}

fn mean_velocity(a: &WristSample, b: &WristSample) -> Vec2 {
    let dt = (b.timestamp - a.timestamp) as f64 / 1000.0;
    (b.pose.vec() - a.pose.vec()).scale(1.0 / dt)
}

/// Kind and direction implied by a mean velocity relative to `facing`.
fn categorize(v: Vec2, facing: Vec2) -> Option<(GestureKind, Vec2)> {
    let forward = v.dot(facing);
    let lateral = v.dot(facing.perp());
    if lateral.abs() > forward.abs() && lateral.abs() > SPEED_THRESHOLD {
        Some((GestureKind::Slide, facing.perp().scale(lateral.signum())))
    } else if forward > SPEED_THRESHOLD {
        Some((GestureKind::Push, facing))
    } else if forward < -SPEED_THRESHOLD {
        Some((GestureKind::Pull, facing.scale(-1.0)))
    } else {
        None
    }
}

/// Classifies the trailing [`WINDOW_MS`] of `window` (time-ordered samples of
/// one user). The gesture axis is the facing of the newest sample. A gesture
/// needs both the whole-window mean velocity and every sub-window mean to
/// agree on kind and direction.
pub fn classify(user: &UserId, window: &[WristSample]) -> Option<GestureEvent> {
    let last = window.last()?;
    let end = last.timestamp;
    let start = sample_at(window, end - WINDOW_MS)?;
    let facing = Vec2::from_angle(last.pose.heading);
    let (kind, direction) = categorize(mean_velocity(start, last), facing)?;

    let step = WINDOW_MS / SUB_WINDOWS;
    for k in 0..SUB_WINDOWS {
        let a = sample_at(window, end - WINDOW_MS + k * step)?;
        let b = sample_at(window, end - WINDOW_MS + (k + 1) * step)?;
        if b.timestamp <= a.timestamp {
            return None;
        }
        match categorize(mean_velocity(a, b), facing) {
            Some((k2, d2)) if k2 == kind && d2.dot(direction) > 0.0 => {}
            _ => return None,
        }
    }

    let magnitude = window
        .windows(2)
        .filter(|w| w[0].timestamp >= start.timestamp && w[1].timestamp > w[0].timestamp)
        .map(|w| mean_velocity(&w[0], &w[1]).norm())
        .fold(0.0, f64::max);
    Some(GestureEvent {
        user_id: user.clone(),
        kind,
        direction,
        magnitude,
        at: end,
        origin: last.pose,
    })
}

/// Streaming classifier for one user with the refractory period applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureClassifier {
    pub user: UserId,
    samples: VecDeque<WristSample>,
    last_event: Option<Millis>,
}

impl GestureClassifier {
    pub fn new(user: UserId) -> Self {
        Self {
            user,
            samples: VecDeque::new(),
            last_event: None,
        }
    }

    pub fn push(&mut self, sample: WristSample) -> Option<GestureEvent> {
        if self
            .samples
            .back()
            .is_some_and(|s| s.timestamp >= sample.timestamp)
        {
            return None;
        }
        self.samples.push_back(sample);
        // Keep one sample at or before the window start.
        while self.samples.len() > 2 && self.samples[1].timestamp <= sample.timestamp - WINDOW_MS {
            self.samples.pop_front();
        }
        if self
            .last_event
            .is_some_and(|t| sample.timestamp - t < REFRACTORY_MS)
        {
            return None;
        }
        let window: Vec<WristSample> = self.samples.iter().copied().collect();
        let event = classify(&self.user, &window)?;
        self.last_event = Some(event.at);
        Some(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn track(heading: f64, velocity: Vec2, ms: i64) -> Vec<WristSample> {
        (0..=ms / 10)
            .map(|i| {
                let t = i * 10;
                let p = velocity.scale(t as f64 / 1000.0);
                WristSample {
                    pose: Pose2D::new(0.4 + p.x, 0.4 + p.y, heading),
                    timestamp: t,
                }
            })
            .collect()
    }

    fn run(samples: &[WristSample]) -> Vec<GestureEvent> {
        let mut c = GestureClassifier::new(UserId::new("u"));
        samples.iter().filter_map(|s| c.push(*s)).collect()
    }

    #[test]
    fn advancing_along_facing_is_push() {
        let ev = run(&track(0.0, Vec2::new(0.3, 0.0), 200));
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, GestureKind::Push);
        assert_eq!(ev[0].at, 150);
        assert!((ev[0].magnitude - 0.3).abs() < 1e-9);
    }

    #[test]
    fn stationary_wrist_is_silent() {
        assert!(run(&track(0.0, Vec2::new(0.0, 0.0), 500)).is_empty());
    }

    #[test]
    fn perpendicular_motion_is_slide_with_lateral_direction() {
        let ev = run(&track(0.0, Vec2::new(0.0, -0.3), 200));
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, GestureKind::Slide);
        assert!((ev[0].direction.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn retreating_is_pull() {
        let ev = run(&track(FRAC_PI_2, Vec2::new(0.0, -0.3), 200));
        assert_eq!(ev[0].kind, GestureKind::Pull);
        assert!((ev[0].direction.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn refractory_suppresses_repeats() {
        let ev = run(&track(0.0, Vec2::new(0.3, 0.0), 900));
        let times: Vec<i64> = ev.iter().map(|e| e.at).collect();
        assert_eq!(times, vec![150, 550]);
    }

    #[test]
    fn classify_is_deterministic_and_needs_full_window() {
        let s = track(0.0, Vec2::new(0.3, 0.0), 200);
        let u = UserId::new("u");
        assert_eq!(classify(&u, &s), classify(&u, &s));
        assert!(classify(&u, &s[..10]).is_none());
    }
}
