use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    collocated, distance, Millis, ObjectId, Pose2D, ProxyId, ProxyState, RobotProxy, SiteId,
    TrackedFrame, User, UserId, VirtualObject, Workspace,
};
use crate::mapping::{Authority, BindingTable};
use crate::motion::{execute_tick, MotionPlan, PlanCursor};

/// Suffix that routes a tracked frame to a user's body instead of their hand.
pub const BODY_SUFFIX: &str = ":body";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivePlan {
    pub plan: MotionPlan,
    pub cursor: PlanCursor,
    /// Consecutive ticks the proxy held position to keep clearance.
    pub stalled_ticks: u32,
}

impl ActivePlan {
    pub fn new(plan: MotionPlan) -> Self {
        Self {
            plan,
            cursor: PlanCursor::default(),
            stalled_ticks: 0,
        }
    }
}

/// Who currently holds a shared object, and when they grasped it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grasp {
    pub user: UserId,
    pub site: SiteId,
    pub at: Millis,
}

/// One proxy's displacement during a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyMotion {
    pub proxy_id: ProxyId,
    pub from: Pose2D,
    pub to: Pose2D,
    /// Moved by a user's hand rather than its own motors.
    pub carried: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickReport {
    pub motions: Vec<ProxyMotion>,
    /// Proxies whose plan completed this tick.
    pub finished: Vec<ProxyId>,
    /// Proxies that held position to keep clearance.
    pub yielded: Vec<ProxyId>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("tick length must be positive, got {0} ms")]
    NonPositiveDt(Millis),
    #[error("frame for {subject} at {timestamp} ms is outside ({from}, {to}]")]
    FrameOutOfWindow {
        subject: String,
        timestamp: Millis,
        from: Millis,
        to: Millis,
    },
    #[error("frame for {subject} at {timestamp} ms does not follow {previous} ms")]
    NonMonotonic {
        subject: String,
        timestamp: Millis,
        previous: Millis,
    },
    #[error("frame for {subject} has a non-finite pose")]
    NonFinite { subject: String },
}

/// Deterministic state of one site's table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub sim_time: Millis,
    pub workspace: Workspace,
    pub objects: BTreeMap<ObjectId, VirtualObject>,
    pub proxies: BTreeMap<ProxyId, RobotProxy>,
    pub users: BTreeMap<UserId, User>,
    pub bindings: BindingTable,
    pub plans: BTreeMap<ProxyId, ActivePlan>,
    pub grasps: BTreeMap<ObjectId, Grasp>,
    /// Last accepted frame timestamp per subject.
    pub last_frame: BTreeMap<String, Millis>,
}

impl WorldState {
    pub fn new(workspace: Workspace) -> Self {
        Self {
            tick: 0,
            sim_time: 0,
            workspace,
            objects: BTreeMap::new(),
            proxies: BTreeMap::new(),
            users: BTreeMap::new(),
            bindings: BindingTable::new(),
            plans: BTreeMap::new(),
            grasps: BTreeMap::new(),
            last_frame: BTreeMap::new(),
        }
    }

    pub fn add_object(&mut self, object: VirtualObject) {
        self.objects.insert(object.id.clone(), object);
    }

    pub fn add_proxy(&mut self, proxy: RobotProxy) {
        self.proxies.insert(proxy.id.clone(), proxy);
    }

    pub fn add_user(&mut self, user: User) {
        self.users.insert(user.id.clone(), user);
    }

    /// Replaces (or installs) the active plan of a proxy, continuing from its current pose.
    pub fn set_plan(&mut self, plan: MotionPlan) {
        self.plans.insert(plan.proxy_id.clone(), ActivePlan::new(plan));
    }

    pub fn cancel_plan(&mut self, proxy: &ProxyId) -> Option<ActivePlan> {
        self.plans.remove(proxy)
    }

    /// The object a proxy is currently bound to, if any.
    pub fn bound_object(&self, proxy: &ProxyId) -> Option<&ObjectId> {
        self.bindings.of_proxy(proxy)?.object_for(proxy)
    }

    /// The local proxy representing `object` at `site`.
    pub fn proxy_for(&self, object: &ObjectId, site: &SiteId) -> Option<&ProxyId> {
        self.bindings.of_object(object)?.proxy_for(object, site)
    }

    fn validate_frames(&self, frames: &[TrackedFrame], dt: Millis) -> Result<(), WorldError> {
        if dt <= 0 {
            return Err(WorldError::NonPositiveDt(dt));
        }
        let (from, to) = (self.sim_time, self.sim_time + dt);
        let mut last: BTreeMap<&str, Millis> = BTreeMap::new();
        for f in frames {
            if !f.pose.is_finite() {
                return Err(WorldError::NonFinite {
                    subject: f.subject_id.clone(),
                });
            }
            if f.timestamp <= from || f.timestamp > to {
                return Err(WorldError::FrameOutOfWindow {
                    subject: f.subject_id.clone(),
                    timestamp: f.timestamp,
                    from,
                    to,
                });
            }
            let previous = last
                .get(f.subject_id.as_str())
                .copied()
                .or_else(|| self.last_frame.get(&f.subject_id).copied());
            if let Some(previous) = previous {
                if f.timestamp <= previous {
                    return Err(WorldError::NonMonotonic {
                        subject: f.subject_id.clone(),
                        timestamp: f.timestamp,
                        previous,
                    });
                }
            }
            last.insert(&f.subject_id, f.timestamp);
        }
        Ok(())
    }

    /// Advances one tick: integrates plans, applies tracked frames, then
    /// re-evaluates bindings and proxy states. Rejects the whole batch on any
    /// invalid frame without mutating the state.
    pub fn advance(&mut self, frames: &[TrackedFrame], dt: Millis) -> Result<TickReport, WorldError> {
        self.validate_frames(frames, dt)?;
        let now = self.sim_time + dt;
        let mut report = TickReport::default();

        self.integrate_plans(dt, now, &mut report);
        self.apply_frames(frames, &mut report);
        self.reevaluate(now);

        self.tick += 1;
        self.sim_time = now;
        Ok(report)
    }

    fn integrate_plans(&mut self, dt: Millis, now: Millis, report: &mut TickReport) {
        let ids: Vec<ProxyId> = self.plans.keys().cloned().collect();
        for id in ids {
            let Some(proxy) = self.proxies.get(&id) else {
                self.plans.remove(&id);
                continue;
            };
            if proxy.carrying.is_some() {
                self.plans.remove(&id);
                continue;
            }
            let active = &self.plans[&id];
            let step = execute_tick(proxy.pose, &proxy.profile, &active.plan, active.cursor, dt);
            let blocked = self.proxies.values().any(|o| {
                if o.id == id || o.site != proxy.site {
                    return false;
                }
                let need = proxy.profile.footprint_radius + o.profile.footprint_radius;
                let after = distance(&step.pose, &o.pose);
                after < need - 1e-9 && after < distance(&proxy.pose, &o.pose)
            });
            let from = proxy.pose;
            let active = self.plans.get_mut(&id).expect("plan present");
            if blocked {
                active.stalled_ticks += 1;
                report.yielded.push(id.clone());
                report.motions.push(ProxyMotion {
                    proxy_id: id.clone(),
                    from,
                    to: from,
                    carried: false,
                });
                continue;
            }
            active.stalled_ticks = 0;
            active.cursor = step.cursor;
            let proxy = self.proxies.get_mut(&id).expect("proxy present");
            proxy.pose = step.pose;
            report.motions.push(ProxyMotion {
                proxy_id: id.clone(),
                from,
                to: step.pose,
                carried: false,
            });
            if step.finished {
                proxy.settled_since = Some(now);
                self.plans.remove(&id);
                report.finished.push(id);
            }
        }
    }

    fn apply_frames(&mut self, frames: &[TrackedFrame], report: &mut TickReport) {
        let mut ordered: Vec<&TrackedFrame> = frames.iter().collect();
        ordered.sort_by(|a, b| {
            (a.timestamp, a.subject_id.as_str()).cmp(&(b.timestamp, b.subject_id.as_str()))
        });
        for f in ordered {
            self.last_frame.insert(f.subject_id.clone(), f.timestamp);
            if let Some(user) = f.subject_id.strip_suffix(BODY_SUFFIX) {
                if let Some(u) = self.users.get_mut(&UserId::new(user)) {
                    u.body = f.pose;
                }
            } else if let Some(u) = self.users.get_mut(&UserId::new(f.subject_id.as_str())) {
                u.hand = f.pose;
            } else if let Some(o) = self.objects.get_mut(&ObjectId::new(f.subject_id.as_str())) {
                o.pose = f.pose;
            } else if let Some(p) = self.proxies.get_mut(&ProxyId::new(f.subject_id.as_str())) {
                p.pose = f.pose;
            }
        }
        // Objects held by local users follow their hands.
        for o in self.objects.values_mut() {
            if let Some(user) = o.held_by.as_ref().and_then(|u| self.users.get(u)) {
                o.pose = user.hand;
            }
        }
        // Carried proxies follow their objects.
        for p in self.proxies.values_mut() {
            if let Some(o) = p.carrying.as_ref().and_then(|o| self.objects.get(o)) {
                if p.pose != o.pose {
                    report.motions.push(ProxyMotion {
                        proxy_id: p.id.clone(),
                        from: p.pose,
                        to: o.pose,
                        carried: true,
                    });
                    p.pose = o.pose;
                }
            }
        }
    }

    fn reevaluate(&mut self, now: Millis) {
        // Proxy-authoritative bindings: the virtual object mirrors its proxy.
        for b in self.bindings.iter() {
            if b.authority != Authority::Proxy {
                continue;
            }
            for (proxy_id, object_id) in b
                .proxy_ids
                .keys()
                .filter_map(|p| b.object_for(p).map(|o| (p, o)))
            {
                let (Some(p), Some(o)) = (self.proxies.get(proxy_id), self.objects.get_mut(object_id))
                else {
                    continue;
                };
                if o.held_by.is_none() && p.carrying.is_none() {
                    o.pose = p.pose;
                }
            }
        }
        let ids: Vec<ProxyId> = self.proxies.keys().cloned().collect();
        for id in ids {
            let state = if self.proxies[&id].carrying.is_some() {
                ProxyState::Engaged
            } else if self.plans.contains_key(&id) {
                ProxyState::Repositioning
            } else {
                match self.bound_object(&id).and_then(|o| self.objects.get(o)) {
                    Some(o) if collocated(&self.proxies[&id].pose, &o.pose) => ProxyState::Engaged,
                    _ => ProxyState::Idle,
                }
            };
            let p = self.proxies.get_mut(&id).expect("proxy present");
            p.state = state;
            if state == ProxyState::Engaged {
                p.engaged_since.get_or_insert(now);
            } else {
                p.engaged_since = None;
            }
        }
    }

    /// Canonical SHA-256 digest of the full state.
    pub fn digest(&self) -> String {
        crate::canonical::digest(self).expect("world state serializes")
    }
}

/// Pure form of [`WorldState::advance`].
pub fn advance_tick(
    state: &WorldState,
    inputs: &[TrackedFrame],
    dt: Millis,
) -> Result<WorldState, WorldError> {
    let mut next = state.clone();
    next.advance(inputs, dt)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VisualKind;
    use crate::motion::{plan_path, KinematicProfile};

    fn world_with_proxy(pose: Pose2D) -> WorldState {
        let mut w = WorldState::new(Workspace::tabletop_default());
        w.add_proxy(RobotProxy::new("p1", "a", KinematicProfile::tabletop(), pose));
        w
    }

    #[test]
    fn idle_tick_is_fixpoint_except_clock() {
        let w = world_with_proxy(Pose2D::at(0.15, 0.15));
        let next = advance_tick(&w, &[], 10).unwrap();
        assert_eq!(next.tick, 1);
        assert_eq!(next.sim_time, 10);
        assert_eq!(next.proxies, w.proxies);
    }

    #[test]
    fn repositioning_proxy_covers_quarter_meter_per_second() {
        let mut w = world_with_proxy(Pose2D::at(0.15, 0.45));
        let p = w.proxies[&ProxyId::new("p1")].clone();
        let plan = plan_path(&p, Pose2D::at(0.65, 0.45), &[], None, 0, &w.workspace).unwrap();
        w.set_plan(plan);
        w.advance(&[], 1000).unwrap();
        let p = &w.proxies[&ProxyId::new("p1")];
        assert!((p.pose.x - 0.40).abs() < 1e-9, "x = {}", p.pose.x);
        assert_eq!(p.state, ProxyState::Repositioning);
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let run = || {
            let mut w = world_with_proxy(Pose2D::at(0.15, 0.15));
            let p = w.proxies[&ProxyId::new("p1")].clone();
            w.set_plan(plan_path(&p, Pose2D::at(0.75, 0.75), &[], None, 0, &w.workspace).unwrap());
            for _ in 0..200 {
                w.advance(&[], 10).unwrap();
            }
            crate::canonical::to_canonical_string(&w).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn frames_must_be_monotonic_and_in_window() {
        let mut w = world_with_proxy(Pose2D::at(0.15, 0.15));
        w.add_user(User {
            id: UserId::new("u"),
            site: SiteId::new("a"),
            hand: Pose2D::at(0.5, 0.5),
            body: Pose2D::at(0.45, 1.1),
        });
        let f = |t| TrackedFrame::new("u", Pose2D::at(0.5, 0.5), t);
        assert!(matches!(
            w.advance(&[f(10), f(10)], 10),
            Err(WorldError::NonMonotonic { .. })
        ));
        assert!(matches!(
            w.advance(&[f(20)], 10),
            Err(WorldError::FrameOutOfWindow { .. })
        ));
        assert_eq!(w.tick, 0, "rejected batches leave the state untouched");
        w.advance(&[f(5), f(10)], 10).unwrap();
        assert!(matches!(
            w.advance(&[f(10)], 10),
            Err(WorldError::FrameOutOfWindow { .. })
        ));
    }

    #[test]
    fn one_to_one_object_mirrors_proxy() {
        let mut w = world_with_proxy(Pose2D::at(0.15, 0.45));
        w.add_object(VirtualObject::new("mug", Pose2D::at(0.15, 0.45), VisualKind::Mug));
        let p = w.proxies[&ProxyId::new("p1")].clone();
        w.bindings.bind_one_to_one(&ObjectId::new("mug"), &p).unwrap();
        w.set_plan(plan_path(&p, Pose2D::at(0.25, 0.45), &[], None, 0, &w.workspace).unwrap());
        for _ in 0..60 {
            w.advance(&[], 10).unwrap();
        }
        let mug = &w.objects[&ObjectId::new("mug")];
        assert!((mug.pose.x - 0.25).abs() < 1e-9);
        let p = &w.proxies[&ProxyId::new("p1")];
        assert_eq!(p.state, ProxyState::Engaged);
        assert!(p.settled_since.is_some());
    }

    #[test]
    fn proxies_yield_to_keep_clearance() {
        let mut w = world_with_proxy(Pose2D::at(0.15, 0.45));
        w.add_proxy(RobotProxy::new("p2", "a", KinematicProfile::tabletop(), Pose2D::at(0.30, 0.45)));
        let p = w.proxies[&ProxyId::new("p1")].clone();
        // Plan straight through p2, ignoring it on purpose.
        w.set_plan(plan_path(&p, Pose2D::at(0.6, 0.45), &[], None, 0, &w.workspace).unwrap());
        for _ in 0..200 {
            w.advance(&[], 10).unwrap();
            let d = distance(
                &w.proxies[&ProxyId::new("p1")].pose,
                &w.proxies[&ProxyId::new("p2")].pose,
            );
            assert!(d >= 0.1 - 1e-9, "clearance {d}");
        }
        assert!(w.plans[&ProxyId::new("p1")].stalled_ticks > 0);
    }
}
