use crate::model::Grasp;

#[derive(Debug, Clone, PartialEq)]
pub enum GraspDecision {
    /// Nobody held the object.
    Granted,
    /// The incoming grasp is earlier than the current holder's and takes over.
    Preempted { previous: Grasp },
    /// The current holder grasped first.
    Rejected { holder: Grasp },
}

/// Earliest grasp timestamp wins; equal timestamps go to the smaller site id,
/// then the smaller user id.
pub fn arbitrate(current: Option<&Grasp>, incoming: &Grasp) -> GraspDecision {
    match current {
        None => GraspDecision::Granted,
        Some(holder) => {
            let key = |g: &Grasp| (g.at, g.site.clone(), g.user.clone());
            if key(incoming) < key(holder) {
                GraspDecision::Preempted {
                    previous: holder.clone(),
                }
            } else {
                GraspDecision::Rejected {
                    holder: holder.clone(),
                }
            }
        }
    }
}
