use serde::{Deserialize, Serialize};

use crate::model::{distance, ObjectId, Pose2D, VirtualObject};

/// A challenger must be this much closer (m) than the current focus to take it over.
pub const FOCUS_HYSTERESIS: f64 = 0.05;

/// Object nearest to `hand`, keeping `previous` unless another object is at
/// least [`FOCUS_HYSTERESIS`] closer. Returns `None` only for an empty set.
pub fn hand_focus<'a>(
    objects: impl IntoIterator<Item = &'a VirtualObject>,
    hand: &Pose2D,
    previous: Option<&ObjectId>,
) -> Option<ObjectId> {
    let mut nearest: Option<(&VirtualObject, f64)> = None;
    let mut previous_dist = None;
    for o in objects {
        let d = distance(&o.pose, hand);
        if previous == Some(&o.id) {
            previous_dist = Some(d);
        }
        let better = match nearest {
            None => true,
            Some((best, bd)) => d < bd || (d == bd && o.id < best.id),
        };
        if better {
            nearest = Some((o, d));
        }
    }
    let (candidate, cd) = nearest?;
    match (previous, previous_dist) {
        (Some(prev), Some(pd)) if candidate.id != *prev && cd + FOCUS_HYSTERESIS > pd => {
            Some(prev.clone())
        }
        _ => Some(candidate.id.clone()),
    }
}

/// Per-user focus state for [`hand_focus`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FocusTracker {
    pub current: Option<ObjectId>,
}

impl FocusTracker {
    /// Updates the focus; returns the new focus when it changed.
    pub fn update<'a>(
        &mut self,
        objects: impl IntoIterator<Item = &'a VirtualObject>,
        hand: &Pose2D,
    ) -> Option<ObjectId> {
        let next = hand_focus(objects, hand, self.current.as_ref());
        if next != self.current {
            self.current = next.clone();
            next
        } else {
            None
        }
    }
}
