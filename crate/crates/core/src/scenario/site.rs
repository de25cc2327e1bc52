//! One site: its world, its relay client and the remote-display pipeline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::metrics::{MoveRecord, RunMetrics};
use crate::gesture::{resolve_target, GestureClassifier, GestureEvent, GestureKind, WristSample};
use crate::mapping::{arbitrate, BindingKind, FocusTracker, GraspDecision, RemotePolicy};
use crate::model::{
    collocated, BindingId, Grasp, Millis, ObjectId, Pose2D, ProxyId, SiteId, TrackedFrame, UserId,
    Vec2, VirtualObject, WorldState, BODY_SUFFIX,
};
use crate::motion::{plan_path, MotionPlan, PlanError};
use crate::relay::{BindingEvent, Payload, RelayMessage, RetargetEvent, RetargetStatus, ScenarioEvent};
use crate::retarget::{
    obstacles, predict_setdown, rolling_deadline, schedule_remote_catch_up, DelayBuffer,
    PredictionSource, Predictor, ReplanLimiter, RetargetTask,
};

/// Replan a proxy that has yielded for this many consecutive ticks.
const STALL_REPLAN_TICKS: u32 = 20;

/// Remote state waiting out the artificial latency before it is shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DisplayItem {
    Pose { object: ObjectId, pose: Pose2D },
    Held { object: ObjectId, user: UserId },
    SetDown { object: ObjectId, user: UserId, pose: Pose2D, at: Millis },
}

/// Where a proxy should be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub goal: Pose2D,
    pub deadline: Option<f64>,
    pub task: Option<RetargetTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PendingMove {
    grasp_at: Millis,
    from: Pose2D,
    proxy_start: Option<Pose2D>,
}

/// Run-wide records the agents append to.
#[derive(Debug, Clone, Default)]
pub(crate) struct Log {
    pub metrics: RunMetrics,
    pub moves: Vec<MoveRecord>,
    /// Moves that broke the illusion and still wait for their proxy.
    pub open_breaks: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SiteAgent {
    pub site: SiteId,
    pub client_id: String,
    pub world: WorldState,
    pub(crate) seq: u64,
    pub(crate) outbox: Vec<Payload>,
    display: DelayBuffer<DisplayItem>,
    predictors: BTreeMap<ObjectId, Predictor>,
    aimed: BTreeSet<ObjectId>,
    last_remote_pose: BTreeMap<ObjectId, Pose2D>,
    targets: BTreeMap<ProxyId, Target>,
    limiter: ReplanLimiter,
    focus: BTreeMap<(BindingId, UserId), FocusTracker>,
    classifiers: BTreeMap<UserId, GestureClassifier>,
    pending_moves: BTreeMap<ObjectId, PendingMove>,
    hand_speed: f64,
}

impl SiteAgent {
    pub fn new(site: SiteId, world: WorldState, latency: Millis, hand_speed: f64, gesture_users: &[UserId]) -> Self {
        Self {
            client_id: format!("site-{site}"),
            site,
            world,
            seq: 0,
            outbox: Vec::new(),
            display: DelayBuffer::new(latency),
            predictors: BTreeMap::new(),
            aimed: BTreeSet::new(),
            last_remote_pose: BTreeMap::new(),
            targets: BTreeMap::new(),
            limiter: ReplanLimiter::default(),
            focus: BTreeMap::new(),
            classifiers: gesture_users
                .iter()
                .map(|u| (u.clone(), GestureClassifier::new(u.clone())))
                .collect(),
            pending_moves: BTreeMap::new(),
            hand_speed,
        }
    }

    pub fn artificial_latency(&self) -> Millis {
        self.display.artificial_latency
    }

    pub fn set_artificial_latency(&mut self, latency: Millis) {
        self.display.artificial_latency = latency;
    }

    pub fn targets(&self) -> &BTreeMap<ProxyId, Target> {
        &self.targets
    }

    /// Remote items still hidden by the artificial latency.
    pub fn pending_display(&self) -> usize {
        self.display.len()
    }

    fn is_local_hold(&self, object: &ObjectId) -> bool {
        self.world
            .grasps
            .get(object)
            .is_some_and(|g| g.site == self.site)
    }

    fn policy(&self, object: &ObjectId) -> Option<RemotePolicy> {
        self.world
            .bindings
            .of_object(object)
            .filter(|b| b.kind == BindingKind::ManyToOne)
            .map(|b| b.policy)
    }

    fn proxy_for(&self, object: &ObjectId) -> Option<ProxyId> {
        self.world
            .proxy_for(object, &self.site)
            .filter(|p| self.world.proxies.contains_key(*p))
            .cloned()
    }

    fn snap(&self, pose: Pose2D) -> Pose2D {
        self.world
            .workspace
            .nearest_anchor(&pose)
            .map(|(_, a)| a)
            .unwrap_or(pose)
    }

    // ---- proxy targets -------------------------------------------------

    pub(crate) fn set_target(&mut self, proxy: ProxyId, target: Target, now: Millis, log: &mut Log) {
        self.targets.insert(proxy.clone(), target);
        self.reconcile(&proxy, now, log);
    }

    pub(crate) fn clear_target(&mut self, proxy: &ProxyId) {
        self.targets.remove(proxy);
        self.world.cancel_plan(proxy);
    }

    /// Plans toward the proxy's target unless its plan already heads there.
    pub(crate) fn reconcile(&mut self, proxy: &ProxyId, now: Millis, log: &mut Log) {
        let Some(t) = self.targets.get(proxy).cloned() else {
            return;
        };
        let Some(p) = self.world.proxies.get(proxy) else {
            self.targets.remove(proxy);
            return;
        };
        if p.carrying.is_some() {
            return;
        }
        match self.world.plans.get(proxy) {
            Some(a) if a.plan.goal == t.goal && a.stalled_ticks < STALL_REPLAN_TICKS => return,
            None if collocated(&p.pose, &t.goal) => return,
            _ => {}
        }
        if !self.limiter.allow(proxy, now) {
            return;
        }
        let result = match &t.task {
            Some(task) => schedule_remote_catch_up(task, &self.world, now),
            None => {
                let others = obstacles(&self.world, proxy);
                plan_path(p, t.goal, &others, t.deadline, now, &self.world.workspace)
            }
        };
        match result {
            Ok(plan) => {
                log.metrics.replans += 1;
                self.install(plan, &t, RetargetStatus::Planned);
            }
            Err(PlanError::DeadlineInfeasible { plan, .. }) => {
                log.metrics.replans += 1;
                log.metrics.infeasible_plans += 1;
                self.install(*plan, &t, RetargetStatus::Infeasible);
            }
            Err(PlanError::Blocked) => log.metrics.blocked_plans += 1,
            Err(PlanError::GoalOutOfBounds { .. }) => {
                self.targets.remove(proxy);
            }
        }
    }

    fn install(&mut self, plan: MotionPlan, target: &Target, status: RetargetStatus) {
        if let Some(task) = &target.task {
            self.outbox.push(Payload::Retarget(RetargetEvent {
                task: task.clone(),
                status,
                estimated_arrival: plan.estimated_arrival,
                slack_ms: plan.slack_ms(),
            }));
        }
        self.world.set_plan(plan);
    }

    pub(crate) fn reconcile_all(&mut self, now: Millis, log: &mut Log) {
        let ids: Vec<ProxyId> = self.targets.keys().cloned().collect();
        for id in ids {
            self.reconcile(&id, now, log);
        }
    }

    // ---- local user actions ---------------------------------------------

    /// True when the object was granted to the user.
    pub(crate) fn local_grasp(&mut self, user: &UserId, object: &ObjectId, at: Millis, log: &mut Log) -> bool {
        let g = Grasp {
            user: user.clone(),
            site: self.site.clone(),
            at,
        };
        match arbitrate(self.world.grasps.get(object), &g) {
            GraspDecision::Rejected { .. } => return false,
            GraspDecision::Granted | GraspDecision::Preempted { .. } => {}
        }
        let Some(obj) = self.world.objects.get_mut(object) else {
            return false;
        };
        obj.held_by = Some(user.clone());
        let obj_pose = obj.pose;
        self.world.grasps.insert(object.clone(), g);
        if let Some(proxy) = self.proxy_for(object) {
            self.clear_target(&proxy);
            let p = self.world.proxies.get_mut(&proxy).expect("local proxy");
            if collocated(&p.pose, &obj_pose) {
                p.carrying = Some(object.clone());
            } else {
                log.metrics.grasp_misses += 1;
                log.metrics.illusion_breaks += 1;
            }
        }
        self.pending_moves.remove(object);
        self.aimed.remove(object);
        if let Some(pr) = self.predictors.get_mut(object) {
            pr.clear();
        }
        self.outbox.push(Payload::ScenarioEvent(ScenarioEvent::Grasp {
            object: object.clone(),
            user: user.clone(),
            site: self.site.clone(),
            at,
        }));
        true
    }

    /// Returns the set-down pose when the user was holding the object.
    pub(crate) fn local_release(&mut self, user: &UserId, object: &ObjectId, at: Millis, now: Millis) -> Option<Pose2D> {
        let g = self.world.grasps.get(object)?;
        if g.user != *user || g.site != self.site {
            return None;
        }
        self.world.grasps.remove(object);
        let obj = self.world.objects.get_mut(object)?;
        obj.held_by = None;
        let pose = obj.pose;
        for p in self.world.proxies.values_mut() {
            if p.carrying.as_ref() == Some(object) {
                p.carrying = None;
                p.settled_since = Some(now);
            }
        }
        self.outbox.push(Payload::ScenarioEvent(ScenarioEvent::Release {
            object: object.clone(),
            user: user.clone(),
            pose,
            at,
        }));
        Some(pose)
    }

    pub(crate) fn local_aim(&mut self, user: &UserId, object: &ObjectId, pose: Pose2D, at: Millis) {
        self.outbox.push(Payload::ScenarioEvent(ScenarioEvent::Aim {
            object: object.clone(),
            user: user.clone(),
            pose,
            at,
        }));
    }

    /// Experimenter reset of an object and its proxies at this site.
    /// The object jumps to `pose`; its proxy drives there under the usual speed law.
    pub(crate) fn place(&mut self, object: &ObjectId, pose: Pose2D, now: Millis, log: &mut Log) {
        self.world.grasps.remove(object);
        if let Some(o) = self.world.objects.get_mut(object) {
            o.pose = pose;
            o.held_by = None;
        }
        if let Some(proxy) = self.proxy_for(object) {
            self.clear_target(&proxy);
            self.world.proxies.get_mut(&proxy).expect("local proxy").carrying = None;
            let target = Target {
                goal: pose,
                deadline: None,
                task: None,
            };
            self.set_target(proxy, target, now, log);
        }
        self.pending_moves.remove(object);
        self.aimed.remove(object);
        self.last_remote_pose.remove(object);
        if let Some(pr) = self.predictors.get_mut(object) {
            pr.clear();
        }
    }

    /// True when the proxy serving `object` is in place under the user's hand.
    pub(crate) fn touch(&self, object: &ObjectId) -> bool {
        let (Some(proxy), Some(o)) = (self.proxy_for(object), self.world.objects.get(object)) else {
            return false;
        };
        let p = &self.world.proxies[&proxy];
        collocated(&p.pose, &o.pose) && !self.world.plans.contains_key(&proxy)
    }

    /// Builds the event an explicit gesture command stands for.
    pub(crate) fn injected_gesture(&self, user: &UserId, kind: GestureKind, now: Millis) -> Option<GestureEvent> {
        let u = self.world.users.get(user)?;
        let facing = Vec2::from_angle(u.body.heading);
        let direction = match kind {
            GestureKind::Push => facing,
            GestureKind::Pull => facing.scale(-1.0),
            GestureKind::Slide => facing.perp(),
        };
        Some(GestureEvent {
            user_id: user.clone(),
            kind,
            direction,
            magnitude: crate::gesture::SPEED_THRESHOLD,
            at: now,
            origin: u.hand,
        })
    }

    pub(crate) fn handle_gesture(&mut self, event: GestureEvent, now: Millis, log: &mut Log) {
        log.metrics.gestures += 1;
        let Some(u) = self.world.users.get(&event.user_id) else {
            return;
        };
        let body = TrackedFrame::new(format!("{}{BODY_SUFFIX}", u.id), u.body, now);
        match resolve_target(&event, &body, self.world.objects.values(), &self.world.workspace) {
            Ok((object, goal)) => {
                if let Some(proxy) = self.proxy_for(&object) {
                    let target = Target {
                        goal,
                        deadline: None,
                        task: None,
                    };
                    self.set_target(proxy, target, now, log);
                }
            }
            Err(_) => log.metrics.gestures_without_target += 1,
        }
        self.outbox
            .push(Payload::ScenarioEvent(ScenarioEvent::Gesture { event }));
    }

    /// Feeds this tick's hand poses to the gesture classifiers.
    pub(crate) fn classify_gestures(&mut self, now: Millis, log: &mut Log) {
        let mut events = Vec::new();
        for (user, c) in self.classifiers.iter_mut() {
            if let Some(u) = self.world.users.get(user) {
                if let Some(e) = c.push(WristSample {
                    pose: u.hand,
                    timestamp: now,
                }) {
                    events.push(e);
                }
            }
        }
        for e in events {
            self.handle_gesture(e, now, log);
        }
    }

    /// Hand focus over one-to-many pools; a focus change dispatches a proxy.
    pub(crate) fn update_focus(&mut self, now: Millis, log: &mut Log) {
        let pools: Vec<(BindingId, BTreeSet<ObjectId>)> = self
            .world
            .bindings
            .iter()
            .filter(|b| b.kind == BindingKind::OneToMany)
            .filter(|b| b.proxies_at(&self.site).next().is_some())
            .map(|b| (b.id.clone(), b.virtual_ids.clone()))
            .collect();
        let users: Vec<(UserId, Pose2D)> = self
            .world
            .users
            .values()
            .map(|u| (u.id.clone(), u.hand))
            .collect();
        for (binding, ids) in pools {
            for (user, hand) in &users {
                let objects: Vec<&VirtualObject> =
                    ids.iter().filter_map(|o| self.world.objects.get(o)).collect();
                let tracker = self
                    .focus
                    .entry((binding.clone(), user.clone()))
                    .or_default();
                let Some(focus) = tracker.update(objects, hand) else {
                    continue;
                };
                let goal = self.world.objects[&focus].pose;
                let dispatched = self.world.bindings.dispatch_nearest(
                    &binding,
                    &goal,
                    &focus,
                    &self.site,
                    &self.world.proxies,
                );
                let Ok(d) = dispatched else {
                    continue;
                };
                log.metrics.reassignments += 1;
                if let Some(r) = &d.released {
                    self.clear_target(r);
                }
                let kind = BindingKind::OneToMany;
                self.outbox.push(Payload::Binding(BindingEvent {
                    binding_id: binding.clone(),
                    kind,
                    site: self.site.clone(),
                    active_proxy: Some(d.selected.clone()),
                    target: Some(focus.clone()),
                    released: d.released.clone(),
                }));
                let target = Target {
                    goal,
                    deadline: None,
                    task: None,
                };
                self.set_target(d.selected, target, now, log);
            }
        }
    }

    /// Tracked frames of every object held at this site.
    pub(crate) fn publish_held(&mut self, now: Millis) {
        for (object, g) in &self.world.grasps {
            if g.site != self.site {
                continue;
            }
            if let Some(o) = self.world.objects.get(object) {
                self.outbox.push(Payload::Frame(TrackedFrame::new(
                    object.as_str(),
                    o.pose,
                    now,
                )));
            }
        }
    }

    // ---- remote input --------------------------------------------------

    pub(crate) fn receive(&mut self, message: &RelayMessage, now: Millis, log: &mut Log) {
        let Ok(payload) = Payload::decode(message) else {
            return;
        };
        match payload {
            Payload::Frame(f) => self.remote_frame(f, now, log),
            Payload::ScenarioEvent(ScenarioEvent::Grasp {
                object,
                user,
                site,
                at,
            }) => self.remote_grasp(object, Grasp { user, site, at }, now),
            Payload::ScenarioEvent(ScenarioEvent::Aim {
                object,
                user,
                pose,
                at,
            }) => self.remote_aim(object, user, pose, at, now, log),
            Payload::ScenarioEvent(ScenarioEvent::Release {
                object,
                user,
                pose,
                at,
            }) => self.remote_release(object, user, pose, at, now, log),
            _ => {}
        }
    }

    fn remote_frame(&mut self, f: TrackedFrame, now: Millis, log: &mut Log) {
        let object = ObjectId::new(f.subject_id.as_str());
        if !self.world.objects.contains_key(&object) || self.is_local_hold(&object) {
            return;
        }
        self.display.push(
            now,
            DisplayItem::Pose {
                object: object.clone(),
                pose: f.pose,
            },
        );
        self.last_remote_pose.insert(object.clone(), f.pose);
        let Some(proxy) = self.proxy_for(&object) else {
            return;
        };
        match self.policy(&object) {
            Some(RemotePolicy::Live) => {
                let target = Target {
                    goal: f.pose,
                    deadline: None,
                    task: None,
                };
                self.set_target(proxy, target, now, log);
            }
            Some(RemotePolicy::SetDown) if !self.aimed.contains(&object) => {
                let mut held = self.world.objects[&object].clone();
                held.pose = f.pose;
                let goal = predict_setdown(&held, &f, &self.world.workspace.anchor_points);
                let deadline = rolling_deadline(now, self.artificial_latency(), &f.pose, &goal, self.hand_speed);
                self.predict(object, proxy, goal, deadline, PredictionSource::SnapAnchor, now, log);
            }
            _ => {}
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn predict(
        &mut self,
        object: ObjectId,
        proxy: ProxyId,
        goal: Pose2D,
        deadline: f64,
        source: PredictionSource,
        now: Millis,
        log: &mut Log,
    ) {
        let pr = self.predictors.entry(object).or_default();
        let task = match pr.update(&proxy, goal, deadline, source) {
            Some(t) => t.clone(),
            None => {
                if let Some(t) = self.targets.get_mut(&proxy) {
                    t.deadline = Some(deadline);
                    if let Some(task) = &mut t.task {
                        task.deadline = deadline;
                    }
                }
                return;
            }
        };
        let target = Target {
            goal,
            deadline: Some(deadline),
            task: Some(task),
        };
        self.set_target(proxy, target, now, log);
    }

    fn remote_grasp(&mut self, object: ObjectId, g: Grasp, now: Millis) {
        if !self.world.objects.contains_key(&object) {
            return;
        }
        match arbitrate(self.world.grasps.get(&object), &g) {
            GraspDecision::Rejected { holder } => {
                if holder.site == self.site {
                    self.outbox
                        .push(Payload::ScenarioEvent(ScenarioEvent::GraspResolved {
                            object,
                            winner: holder,
                            loser: g,
                        }));
                }
                return;
            }
            GraspDecision::Preempted { previous } => {
                if previous.site == self.site {
                    if let Some(o) = self.world.objects.get_mut(&object) {
                        o.held_by = None;
                    }
                    for p in self.world.proxies.values_mut() {
                        if p.carrying.as_ref() == Some(&object) {
                            p.carrying = None;
                            p.settled_since = Some(now);
                        }
                    }
                    self.outbox
                        .push(Payload::ScenarioEvent(ScenarioEvent::GraspResolved {
                            object: object.clone(),
                            winner: g.clone(),
                            loser: previous,
                        }));
                }
            }
            GraspDecision::Granted => {}
        }
        self.world.grasps.insert(object.clone(), g.clone());
        self.display.push(
            now,
            DisplayItem::Held {
                object: object.clone(),
                user: g.user.clone(),
            },
        );
        let from = self.world.objects[&object].pose;
        let proxy_start = self
            .proxy_for(&object)
            .map(|p| self.world.proxies[&p].pose);
        self.pending_moves.insert(
            object.clone(),
            PendingMove {
                grasp_at: g.at,
                from,
                proxy_start,
            },
        );
        self.last_remote_pose.insert(object.clone(), from);
        self.aimed.remove(&object);
        if let Some(pr) = self.predictors.get_mut(&object) {
            pr.clear();
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn remote_aim(&mut self, object: ObjectId, user: UserId, pose: Pose2D, at: Millis, now: Millis, log: &mut Log) {
        if self.world.grasps.get(&object).map(|g| &g.user) != Some(&user) {
            return;
        }
        if self.policy(&object) != Some(RemotePolicy::SetDown) {
            return;
        }
        let Some(proxy) = self.proxy_for(&object) else {
            return;
        };
        let goal = self.snap(pose);
        let from = self
            .last_remote_pose
            .get(&object)
            .copied()
            .unwrap_or(self.world.objects[&object].pose);
        let deadline = rolling_deadline(at, self.artificial_latency(), &from, &goal, self.hand_speed);
        self.aimed.insert(object.clone());
        self.predict(object, proxy, goal, deadline, PredictionSource::SnapAnchor, now, log);
    }

    #[allow(clippy::too_many_arguments)]
    fn remote_release(&mut self, object: ObjectId, user: UserId, pose: Pose2D, at: Millis, now: Millis, log: &mut Log) {
        if self.world.grasps.get(&object).map(|g| &g.user) != Some(&user) {
            return;
        }
        self.world.grasps.remove(&object);
        self.display.push(
            now,
            DisplayItem::SetDown {
                object: object.clone(),
                user,
                pose,
                at,
            },
        );
        let Some(proxy) = self.proxy_for(&object) else {
            return;
        };
        let deadline = (at + self.artificial_latency()) as f64;
        match self.policy(&object) {
            Some(RemotePolicy::SetDown) => {
                let goal = self.snap(pose);
                self.predict(object, proxy, goal, deadline, PredictionSource::ReleaseEvent, now, log);
            }
            Some(RemotePolicy::Live) => {
                let target = Target {
                    goal: pose,
                    deadline: None,
                    task: None,
                };
                self.set_target(proxy, target, now, log);
            }
            None => {}
        }
    }

    /// Shows remote state whose artificial latency has elapsed and checks
    /// every displayed set-down against the local proxy.
    pub(crate) fn display(&mut self, now: Millis, log: &mut Log) {
        for (_, item) in self.display.delayed_view(now) {
            match item {
                DisplayItem::Pose { object, pose } => {
                    if !self.is_local_hold(&object) {
                        if let Some(o) = self.world.objects.get_mut(&object) {
                            o.pose = pose;
                        }
                    }
                }
                DisplayItem::Held { object, user } => {
                    if !self.is_local_hold(&object) {
                        if let Some(o) = self.world.objects.get_mut(&object) {
                            o.held_by = Some(user);
                        }
                    }
                }
                DisplayItem::SetDown {
                    object,
                    user,
                    pose,
                    at,
                } => self.display_setdown(object, user, pose, at, now, log),
            }
        }
    }

    fn display_setdown(&mut self, object: ObjectId, user: UserId, pose: Pose2D, at: Millis, now: Millis, log: &mut Log) {
        if self.is_local_hold(&object) {
            return;
        }
        if let Some(o) = self.world.objects.get_mut(&object) {
            if o.held_by.as_ref() == Some(&user) {
                o.held_by = None;
            }
            o.pose = pose;
        }
        let pending = self.pending_moves.remove(&object);
        let proxy = self.proxy_for(&object);
        let grasp_at = pending.as_ref().map(|p| p.grasp_at).unwrap_or(at);
        let (in_place, settled) = match &proxy {
            Some(id) => {
                let p = &self.world.proxies[id];
                (
                    collocated(&p.pose, &pose) && !self.world.plans.contains_key(id),
                    p.settled_since,
                )
            }
            None => (false, None),
        };
        let settled_at = in_place.then(|| settled.unwrap_or(grasp_at).max(grasp_at));
        let record = MoveRecord {
            object: object.clone(),
            site: self.site.clone(),
            proxy: proxy.clone(),
            from: pending.as_ref().map(|p| p.from).unwrap_or(pose),
            to: pose,
            proxy_start: pending.and_then(|p| p.proxy_start),
            grasp_at,
            release_at: at,
            display_at: now,
            settled_at,
            slack_ms: settled_at.map(|s| (now - s) as f64),
            illusion_break: !in_place,
        };
        if !in_place {
            log.metrics.setdown_breaks += 1;
            log.metrics.illusion_breaks += 1;
            log.open_breaks.push(log.moves.len());
            if let Some(task) = self.predictors.get(&object).and_then(|p| p.task.clone()) {
                self.outbox.push(Payload::Retarget(RetargetEvent {
                    task,
                    status: RetargetStatus::IllusionBreak,
                    estimated_arrival: now as f64,
                    slack_ms: None,
                }));
            }
        }
        log.moves.push(record);
    }
}
