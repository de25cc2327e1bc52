use serde::{Deserialize, Serialize};

use super::{PredictionSource, RetargetTask};
use crate::model::{distance, Millis, Pose2D, ProxyId, TrackedFrame, VirtualObject};

/// Snap prediction: the anchor nearest the held object's current position
/// (lowest index on ties), or the position itself without anchors.
pub fn predict_setdown(held: &VirtualObject, _hand: &TrackedFrame, anchors: &[Pose2D]) -> Pose2D {
    let mut best: Option<(Pose2D, f64)> = None;
    for a in anchors {
        let d = distance(a, &held.pose);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((*a, d));
        }
    }
    best.map(|(a, _)| a).unwrap_or(held.pose)
}

/// Pre-release deadline: now + latency + time for the hand to reach the goal.
pub fn rolling_deadline(now: Millis, latency: Millis, hand: &Pose2D, goal: &Pose2D, hand_speed: f64) -> f64 {
    now as f64 + latency as f64 + distance(hand, goal) / hand_speed * 1000.0
}

/// Current retarget task of one remote proxy, revised as predictions change.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub task: Option<RetargetTask>,
    revisions: u32,
}

impl Predictor {
    /// Records a prediction. Returns the task when the goal changed (a new
    /// revision that warrants a replan); deadline-only updates are absorbed.
    pub fn update(
        &mut self,
        proxy: &ProxyId,
        goal: Pose2D,
        deadline: f64,
        source: PredictionSource,
    ) -> Option<&RetargetTask> {
        match &mut self.task {
            Some(t) if t.predicted_goal == goal && t.proxy_id == *proxy => {
                t.deadline = deadline;
                t.prediction_source = source;
                None
            }
            _ => {
                self.revisions += 1;
                self.task = Some(RetargetTask {
                    proxy_id: proxy.clone(),
                    predicted_goal: goal,
                    deadline,
                    prediction_source: source,
                    revision: self.revisions,
                });
                self.task.as_ref()
            }
        }
    }

    pub fn clear(&mut self) {
        self.task = None;
    }
}
