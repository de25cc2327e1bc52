//! Tick loop: every site advances in lockstep on one simulated clock and talks
//! to the others through an in-process relay hub.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::compile::{compile, Action, Resolver, TimedAction};
use super::metrics::{Checkpoint, QuiescentRecord, RaceRecord, RelayMetrics, RunMetrics, RunReport};
use super::script::{ScenarioScript, ScriptError, TouchSurface};
use super::site::{Log, SiteAgent};
use crate::mapping::BindingKind;
use crate::model::{
    angle_diff, collocated, distance, Grasp, Millis, ObjectId, Pose2D, RobotProxy, SiteId,
    TrackedFrame, User, UserId, VirtualObject, WorldError, WorldState, BODY_SUFFIX,
    ENGAGE_POSITION_TOL,
};
use crate::motion::KinematicProfile;
use crate::relay::{ClientRegistration, Hub, HubConfig, HubError, RelayMessage, Role};

/// Relative slack on the kinematic limits when auditing motion.
const LIMIT_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("site {site}: {source}")]
    World { site: SiteId, source: WorldError },
    #[error("relay: {0}")]
    Relay(#[from] HubError),
}

/// A scenario in progress.
#[derive(Debug, Clone)]
pub struct Runner {
    name: String,
    dt: Millis,
    now: Millis,
    end: Option<Millis>,
    timeline: Vec<TimedAction>,
    cursor: usize,
    hub: Hub,
    sites: BTreeMap<SiteId, SiteAgent>,
    user_site: BTreeMap<UserId, SiteId>,
    /// Authoritative pose of each object (last set-down or placement).
    shared: BTreeMap<ObjectId, Pose2D>,
    touch_surface: Option<TouchSurface>,
    grasp_attempts: BTreeMap<ObjectId, Vec<Grasp>>,
    log: Log,
    checkpoints: Vec<Checkpoint>,
    races: Vec<RaceRecord>,
    quiescent: Vec<QuiescentRecord>,
    trace: Sha256,
}

impl Runner {
    pub fn new(script: &ScenarioScript) -> Result<Self, ScriptError> {
        let timeline = compile(script)?;
        let p = &script.parameters;
        let r = Resolver::new(script);
        let workspace = p.workspace();

        let mut violations = Vec::new();
        let mut sites = BTreeMap::new();
        for site in &script.sites {
            let mut world = WorldState::new(workspace.clone());
            for o in &script.objects {
                world.add_object(VirtualObject::new(o.id.clone(), r.resolve(&o.pose), o.kind));
            }
            for x in script.proxies.iter().filter(|x| x.site == *site) {
                let mut profile = KinematicProfile::for_kind(x.profile);
                if let Some(v) = p.robot_speed {
                    profile.max_linear_speed = v;
                }
                let mut proxy = RobotProxy::new(x.id.clone(), site.clone(), profile, r.resolve(&x.pose));
                proxy.settled_since = Some(0);
                world.add_proxy(proxy);
            }
            for u in script.users.iter().filter(|u| u.site == *site) {
                world.add_user(User {
                    id: u.id.clone(),
                    site: site.clone(),
                    hand: r.resolve(&u.hand),
                    body: r.resolve(&u.body),
                });
            }
            let gesture_users: Vec<UserId> = script
                .users
                .iter()
                .filter(|u| u.site == *site && u.gestures)
                .map(|u| u.id.clone())
                .collect();
            sites.insert(
                site.clone(),
                SiteAgent::new(site.clone(), world, p.artificial_latency, p.hand_speed, &gesture_users),
            );
        }

        // Every site holds the same binding table, so binding ids agree.
        let all_proxies: BTreeMap<_, _> = script
            .proxies
            .iter()
            .map(|x| {
                let profile = KinematicProfile::for_kind(x.profile);
                (x.id.clone(), RobotProxy::new(x.id.clone(), x.site.clone(), profile, r.resolve(&x.pose)))
            })
            .collect();
        for agent in sites.values_mut() {
            let table = &mut agent.world.bindings;
            for (i, b) in script.bindings.iter().enumerate() {
                let pool: Vec<&RobotProxy> = b.proxies.iter().filter_map(|x| all_proxies.get(x)).collect();
                let result = match b.kind {
                    BindingKind::OneToOne => match (b.objects.as_slice(), pool.as_slice()) {
                        ([o], [x]) => table.bind_one_to_one(o, x),
                        _ => Err(crate::mapping::MappingError::Cardinality(
                            "exactly one object and one proxy",
                        )),
                    },
                    BindingKind::OneToMany => table.bind_one_to_many(&b.objects, &pool),
                    BindingKind::ManyToOne => match b.objects.as_slice() {
                        [o] => table.bind_many_to_one(o, &pool, b.policy),
                        _ => Err(crate::mapping::MappingError::Cardinality("exactly one object")),
                    },
                };
                if let Err(e) = result {
                    let msg = format!("binding {i}: {e}");
                    if !violations.contains(&msg) {
                        violations.push(msg);
                    }
                }
            }
        }
        if !violations.is_empty() {
            return Err(ScriptError { violations });
        }

        let namespace = script.name.as_str().to_owned();
        let mut hub = Hub::new(HubConfig {
            seed: p.seed,
            ..HubConfig::default()
        });
        hub.inject_latency(&namespace, p.relay_delay, p.relay_jitter)
            .map_err(|e| ScriptError {
                violations: vec![e.to_string()],
            })?;
        for agent in sites.values() {
            hub.register(ClientRegistration {
                client_id: agent.client_id.clone(),
                namespaces: BTreeSet::from([namespace.clone()]),
                role: Role::Both,
                site: agent.site.clone(),
            })
            .expect("fresh client ids");
        }

        let last = timeline.last().map(|a| a.time).unwrap_or(0);
        let end = last + p.tail.max(p.artificial_latency + 500);
        Ok(Self {
            name: namespace,
            dt: p.dt,
            now: 0,
            end: Some(end),
            timeline,
            cursor: 0,
            hub,
            user_site: script.users.iter().map(|u| (u.id.clone(), u.site.clone())).collect(),
            shared: script
                .objects
                .iter()
                .map(|o| (o.id.clone(), r.resolve(&o.pose)))
                .collect(),
            touch_surface: p.touch_surface,
            sites,
            grasp_attempts: BTreeMap::new(),
            log: Log::default(),
            checkpoints: Vec::new(),
            races: Vec::new(),
            quiescent: Vec::new(),
            trace: Sha256::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn dt(&self) -> Millis {
        self.dt
    }

    pub fn sites(&self) -> &BTreeMap<SiteId, SiteAgent> {
        &self.sites
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.log.metrics
    }

    /// Keeps the session running past the end of the script.
    pub fn run_forever(&mut self) {
        self.end = None;
    }

    pub fn finished(&self) -> bool {
        self.end.is_some_and(|e| self.now >= e)
    }

    pub fn set_artificial_latency(&mut self, latency: Millis) {
        for a in self.sites.values_mut() {
            a.set_artificial_latency(latency);
        }
    }

    /// Hand pose of a user as the world last saw it.
    pub fn hand(&self, user: &UserId) -> Option<Pose2D> {
        let site = self.user_site.get(user)?;
        self.sites[site].world.users.get(user).map(|u| u.hand)
    }

    pub fn user_site(&self, user: &UserId) -> Option<&SiteId> {
        self.user_site.get(user)
    }

    /// Adds actions to the pending timeline. Times at or before the current
    /// tick are moved to the next one.
    pub fn inject(&mut self, actions: impl IntoIterator<Item = TimedAction>) {
        for mut a in actions {
            a.time = a.time.max(self.now + 1);
            let pending = &self.timeline[self.cursor..];
            let at = self.cursor + pending.partition_point(|b| b.time <= a.time);
            self.timeline.insert(at, a);
        }
    }

    /// Advances every site by one tick.
    pub fn step(&mut self) -> Result<(), RunError> {
        let from = self.now;
        let now = from + self.dt;

        // Actions due in (from, now].
        let start = self.cursor;
        while self.cursor < self.timeline.len() && self.timeline[self.cursor].time <= now {
            self.cursor += 1;
        }
        let due: Vec<TimedAction> = self.timeline[start..self.cursor].to_vec();

        // 1. Tracked frames, then the world tick.
        let mut frames: BTreeMap<SiteId, BTreeMap<(String, Millis), TrackedFrame>> = BTreeMap::new();
        for a in &due {
            let (user, subject, pose) = match &a.action {
                Action::HandFrame { user, pose } => (user, user.as_str().to_owned(), *pose),
                Action::BodyFrame { user, pose } => (user, format!("{user}{BODY_SUFFIX}"), *pose),
                _ => continue,
            };
            let site = self.user_site[user].clone();
            let t = a.time.max(from + 1);
            frames
                .entry(site)
                .or_default()
                .insert((subject.clone(), t), TrackedFrame::new(subject, pose, t));
        }
        for (site, agent) in self.sites.iter_mut() {
            let batch: Vec<TrackedFrame> = frames
                .remove(site)
                .map(|m| m.into_values().collect())
                .unwrap_or_default();
            let report = agent
                .world
                .advance(&batch, self.dt)
                .map_err(|source| RunError::World {
                    site: site.clone(),
                    source,
                })?;
            audit_motion(&agent.world, &report.motions, self.dt, &mut self.log.metrics);
        }

        // 2. Discrete actions.
        for a in &due {
            if !a.action.is_frame() {
                self.apply(&a.action, a.time, now);
            }
        }

        // 3. Gestures, focus and continuous checks.
        for agent in self.sites.values_mut() {
            agent.classify_gestures(now, &mut self.log);
            agent.update_focus(now, &mut self.log);
        }
        if let Some(surface) = self.touch_surface {
            self.check_coverage(surface);
        }

        // 4. Relay round trip.
        for agent in self.sites.values_mut() {
            agent.publish_held(now);
            for payload in std::mem::take(&mut agent.outbox) {
                agent.seq += 1;
                let msg = RelayMessage {
                    namespace: self.name.clone(),
                    emitter_id: agent.client_id.clone(),
                    msg_type: payload.msg_type(),
                    seq: agent.seq,
                    sent_at: now,
                    payload: payload.to_value(),
                };
                self.hub.publish(&agent.client_id, msg, now)?;
            }
        }
        let by_client: BTreeMap<String, SiteId> = self
            .sites
            .values()
            .map(|a| (a.client_id.clone(), a.site.clone()))
            .collect();
        for d in self.hub.poll(now) {
            if let Some(site) = by_client.get(&d.to) {
                let agent = self.sites.get_mut(site).expect("registered site");
                agent.receive(&d.message, now, &mut self.log);
            }
        }

        // 5. Latency-delayed display, then plan maintenance.
        for agent in self.sites.values_mut() {
            agent.display(now, &mut self.log);
            agent.reconcile_all(now, &mut self.log);
            // Replies to remote input go out next tick.
        }
        self.resolve_open_breaks();

        self.now = now;
        self.log.metrics.ticks += 1;
        self.hash_tick();
        Ok(())
    }

    fn site_of(&self, user: &UserId) -> SiteId {
        self.user_site[user].clone()
    }

    fn apply(&mut self, action: &Action, at: Millis, now: Millis) {
        match action {
            Action::HandFrame { .. } | Action::BodyFrame { .. } => {}
            Action::Grasp { user, object } => {
                let site = self.site_of(user);
                self.grasp_attempts
                    .entry(object.clone())
                    .or_default()
                    .push(Grasp {
                        user: user.clone(),
                        site: site.clone(),
                        at,
                    });
                let agent = self.sites.get_mut(&site).expect("user site");
                agent.local_grasp(user, object, at, &mut self.log);
            }
            Action::Release { user, object } => {
                let site = self.site_of(user);
                let agent = self.sites.get_mut(&site).expect("user site");
                if let Some(pose) = agent.local_release(user, object, at, now) {
                    self.shared.insert(object.clone(), pose);
                }
            }
            Action::Aim { user, object, pose } => {
                let site = self.site_of(user);
                let agent = self.sites.get_mut(&site).expect("user site");
                agent.local_aim(user, object, *pose, at);
            }
            Action::Place { object, pose } => {
                for agent in self.sites.values_mut() {
                    agent.place(object, *pose, now, &mut self.log);
                }
                self.shared.insert(object.clone(), *pose);
            }
            Action::Gesture { user, kind } => {
                let site = self.site_of(user);
                let agent = self.sites.get_mut(&site).expect("user site");
                if let Some(e) = agent.injected_gesture(user, *kind, now) {
                    agent.handle_gesture(e, now, &mut self.log);
                }
            }
            Action::Touch { user, object } => {
                let site = self.site_of(user);
                self.log.metrics.touches += 1;
                if !self.sites[&site].touch(object) {
                    self.log.metrics.touch_misses += 1;
                    self.log.metrics.illusion_breaks += 1;
                }
            }
            Action::CheckQuiescent { object } => {
                let Some(shared) = self.shared.get(object).copied() else {
                    return;
                };
                let mut max_offset: f64 = 0.0;
                for agent in self.sites.values() {
                    let w = &agent.world;
                    if let Some(p) = w.proxy_for(object, &agent.site).and_then(|p| w.proxies.get(p)) {
                        max_offset = max_offset.max(distance(&p.pose, &shared));
                    }
                }
                let ok = max_offset <= ENGAGE_POSITION_TOL + 1e-9;
                self.log.metrics.quiescent_checks += 1;
                if !ok {
                    self.log.metrics.quiescent_failures += 1;
                }
                self.quiescent.push(QuiescentRecord {
                    object: object.clone(),
                    at: now,
                    max_offset,
                    ok,
                });
            }
            Action::CheckRace { object } => {
                let attempts = self.grasp_attempts.remove(object).unwrap_or_default();
                let expected = attempts
                    .iter()
                    .min_by_key(|g| (g.at, g.site.clone(), g.user.clone()))
                    .map(|g| g.user.clone());
                let holders: Vec<(SiteId, Option<UserId>)> = self
                    .sites
                    .values()
                    .map(|a| (a.site.clone(), a.world.grasps.get(object).map(|g| g.user.clone())))
                    .collect();
                let correct = expected.is_some() && holders.iter().all(|(_, h)| *h == expected);
                self.log.metrics.races += 1;
                if correct {
                    self.log.metrics.races_correct += 1;
                }
                self.races.push(RaceRecord {
                    object: object.clone(),
                    at: now,
                    expected,
                    holders,
                    correct,
                });
            }
            Action::Checkpoint {
                label,
                object,
                expect_anchor,
            } => {
                for agent in self.sites.values() {
                    let Some(o) = agent.world.objects.get(object) else {
                        continue;
                    };
                    let nearest = agent
                        .world
                        .workspace
                        .nearest_anchor(&o.pose)
                        .filter(|(_, a)| collocated(a, &o.pose))
                        .map(|(n, _)| n);
                    if let Some(e) = expect_anchor {
                        self.log.metrics.checkpoints_expected += 1;
                        if nearest == Some(*e) {
                            self.log.metrics.checkpoints_matched += 1;
                        }
                    }
                    self.checkpoints.push(Checkpoint {
                        label: label.clone(),
                        at: now,
                        site: agent.site.clone(),
                        object: object.clone(),
                        pose: o.pose,
                        nearest_anchor: nearest,
                        expect_anchor: *expect_anchor,
                    });
                }
            }
        }
    }

    /// A hand on the touch surface must have the active proxy's section under it.
    fn check_coverage(&mut self, surface: TouchSurface) {
        for agent in self.sites.values() {
            let w = &agent.world;
            for u in w.users.values() {
                if u.hand.y < surface.y - surface.reach {
                    continue;
                }
                self.log.metrics.coverage_checks += 1;
                let covered = w
                    .bindings
                    .iter()
                    .filter(|b| b.kind == BindingKind::OneToMany)
                    .filter_map(|b| b.active_proxy.get(&agent.site))
                    .filter_map(|p| w.proxies.get(p))
                    .any(|p| (p.pose.x - u.hand.x).abs() <= surface.half_width + 1e-9);
                if !covered {
                    self.log.metrics.coverage_failures += 1;
                }
            }
        }
    }

    fn resolve_open_breaks(&mut self) {
        let log = &mut self.log;
        log.open_breaks.retain(|&i| {
            let m = &mut log.moves[i];
            let Some(agent) = self.sites.get(&m.site) else {
                return false;
            };
            let Some(p) = m.proxy.as_ref().and_then(|p| agent.world.proxies.get(p)) else {
                return false;
            };
            if collocated(&p.pose, &m.to) && !agent.world.plans.contains_key(&p.id) {
                let settled = p.settled_since.unwrap_or(self.now + self.dt);
                m.settled_at = Some(settled);
                m.slack_ms = Some((m.display_at - settled) as f64);
                false
            } else {
                true
            }
        });
    }

    fn hash_tick(&mut self) {
        let q = |v: f64| ((v * 1e6).round() as i64).to_le_bytes();
        let h = &mut self.trace;
        h.update(self.now.to_le_bytes());
        for (site, a) in &self.sites {
            h.update(site.as_str().as_bytes());
            for p in a.world.proxies.values() {
                h.update(p.id.as_str().as_bytes());
                h.update(q(p.pose.x));
                h.update(q(p.pose.y));
                h.update(q(p.pose.heading));
                h.update([p.state as u8, p.carrying.is_some() as u8]);
            }
            for o in a.world.objects.values() {
                h.update(o.id.as_str().as_bytes());
                h.update(q(o.pose.x));
                h.update(q(o.pose.y));
                h.update(q(o.pose.heading));
                h.update([o.held_by.is_some() as u8]);
            }
        }
    }

    /// Runs until the end of the script plus its tail.
    pub fn run_to_end(mut self) -> Result<RunReport, RunError> {
        while !self.finished() {
            self.step()?;
        }
        Ok(self.report())
    }

    pub fn report(&self) -> RunReport {
        let mut metrics = self.log.metrics.clone();
        metrics.summarize_slack(&self.log.moves);
        metrics.sim_time = self.now;
        let stats = self.hub.stats();
        metrics.relay = RelayMetrics::from_latencies(stats.accepted, stats.delivered, &stats.latencies);
        let worlds: BTreeMap<&SiteId, &WorldState> =
            self.sites.iter().map(|(s, a)| (s, &a.world)).collect();
        RunReport {
            name: self.name.clone(),
            metrics,
            moves: self.log.moves.clone(),
            checkpoints: self.checkpoints.clone(),
            races: self.races.clone(),
            quiescent: self.quiescent.clone(),
            final_digest: crate::canonical::digest(&worlds).expect("worlds serialize"),
            trace_digest: hex::encode(self.trace.clone().finalize()),
        }
    }

    /// Session view for observers; `physical` includes proxies and plans.
    pub fn view(&self, physical: bool) -> Value {
        let sites: serde_json::Map<String, Value> = self
            .sites
            .iter()
            .map(|(s, a)| {
                let w = &a.world;
                let mut v = json!({
                    "objects": w.objects.values().collect::<Vec<_>>(),
                    "users": w.users.values().collect::<Vec<_>>(),
                    "artificial_latency": a.artificial_latency(),
                });
                if physical {
                    v["proxies"] = json!(w.proxies.values().collect::<Vec<_>>());
                    v["plans"] = w
                        .plans
                        .iter()
                        .map(|(id, p)| {
                            (
                                id.to_string(),
                                json!({
                                    "polyline": p.plan.polyline(),
                                    "goal": p.plan.goal,
                                    "estimated_arrival": p.plan.estimated_arrival,
                                    "slack_ms": p.plan.slack_ms(),
                                }),
                            )
                        })
                        .collect::<serde_json::Map<_, _>>()
                        .into();
                }
                (s.to_string(), v)
            })
            .collect();
        let m = &self.log.metrics;
        json!({
            "scenario": self.name,
            "time": self.now,
            "sites": sites,
            "metrics": {
                "illusion_breaks": m.illusion_breaks,
                "moves": self.log.moves.len(),
                "reassignments": m.reassignments,
                "gestures": m.gestures,
            },
        })
    }
}

/// Counts speed-law and clearance violations for one site's tick.
fn audit_motion(world: &WorldState, motions: &[crate::model::ProxyMotion], dt: Millis, metrics: &mut RunMetrics) {
    let secs = dt as f64 / 1000.0;
    for m in motions.iter().filter(|m| !m.carried) {
        let Some(p) = world.proxies.get(&m.proxy_id) else {
            continue;
        };
        let lin = distance(&m.from, &m.to);
        let ang = angle_diff(m.to.heading, m.from.heading).abs();
        if lin > p.max_linear_speed() * secs * (1.0 + LIMIT_TOL) + 1e-9
            || ang > p.max_angular_speed() * secs * (1.0 + LIMIT_TOL) + 1e-9
        {
            metrics.speed_violations += 1;
        }
    }
    let proxies: Vec<&RobotProxy> = world.proxies.values().collect();
    for (i, a) in proxies.iter().enumerate() {
        for b in &proxies[i + 1..] {
            if a.site != b.site {
                continue;
            }
            let need = a.profile.footprint_radius + b.profile.footprint_radius;
            if distance(&a.pose, &b.pose) < need - 1e-6 {
                metrics.clearance_violations += 1;
            }
        }
    }
}

/// Validates, compiles and runs a script to completion.
pub fn run_script(script: &ScenarioScript) -> Result<RunReport, RunError> {
    Runner::new(script)?.run_to_end()
}
