//! Reference computations for the integration and acceptance tests. These
//! re-derive expected outcomes from geometry, script events and brute force,
//! and only read simulator state; they never call the planners, predictors or
//! dispatch code they are checking.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::PathBuf;

use proxysync_core::gesture::corpus::{Label, Trajectory};
use proxysync_core::gesture::GestureClassifier;
use proxysync_core::model::{Millis, ObjectId, Pose2D, SiteId, UserId};
use proxysync_core::relay::{ClientRegistration, Hub, HubConfig, MsgType, RelayMessage, Role};
use proxysync_core::scenario::{EventKind, PoseRef, Runner, ScenarioScript};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HAND_SPEED: f64 = 0.3;
pub const ROBOT_SPEED: f64 = 0.25;
pub const ROBOT_TURN_RATE: f64 = PI;
pub const TICK_MS: f64 = 10.0;
pub const EPSILON_M: f64 = 0.01;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Every script under `scenarios/`, sorted by file name.
pub fn checked_in_scripts() -> Vec<(String, ScenarioScript)> {
    let dir = repo_root().join("scenarios");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .expect("scenarios directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, ScenarioScript::from_json(&text).unwrap())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tabletop geometry and the latency budget
// ---------------------------------------------------------------------------

/// Center of tile `n` (1..=9) on the 0.9 m table; row 0 is the far row.
pub fn tile_center(n: usize) -> (f64, f64) {
    let (col, row) = ((n - 1) % 3, (n - 1) / 3);
    (0.15 + 0.3 * col as f64, 0.15 + 0.3 * row as f64)
}

pub fn nearest_tile(x: f64, y: f64) -> usize {
    (1..=9)
        .min_by(|&a, &b| {
            let (ax, ay) = tile_center(a);
            let (bx, by) = tile_center(b);
            let da = (ax - x).powi(2) + (ay - y).powi(2);
            let db = (bx - x).powi(2) + (by - y).powi(2);
            da.partial_cmp(&db).unwrap()
        })
        .unwrap()
}

/// Turn-in-place time for a tile move starting and ending at heading 0,
/// driving forward or backward, whichever needs less rotation.
pub fn turn_time_s(from: usize, to: usize) -> f64 {
    let (fx, fy) = tile_center(from);
    let (tx, ty) = tile_center(to);
    if from == to {
        return 0.0;
    }
    let e = (ty - fy).atan2(tx - fx).abs();
    let turn = e.min(PI - e);
    2.0 * turn / ROBOT_TURN_RATE
}

pub fn tile_distance(from: usize, to: usize) -> f64 {
    let (fx, fy) = tile_center(from);
    let (tx, ty) = tile_center(to);
    (tx - fx).hypot(ty - fy)
}

/// slack = d/v_hand + L - (turn + d/v_robot), in milliseconds.
pub fn analytic_slack_ms(from: usize, to: usize, latency_ms: f64) -> f64 {
    let d = tile_distance(from, to);
    (d / HAND_SPEED + latency_ms / 1000.0 - (turn_time_s(from, to) + d / ROBOT_SPEED)) * 1000.0
}

/// Smallest latency with non-negative slack for every ordered tile pair.
pub fn analytic_latency_bound_ms() -> f64 {
    let mut worst: f64 = 0.0;
    for a in 1..=9 {
        for b in 1..=9 {
            worst = worst.max(-analytic_slack_ms(a, b, 0.0));
        }
    }
    worst
}

/// The sweep value expected to be the first with zero breaks.
pub fn expected_threshold(values: &[f64]) -> Option<f64> {
    let bound = analytic_latency_bound_ms();
    values.iter().copied().filter(|v| *v > bound).reduce(f64::min)
}

fn anchor_of(r: &PoseRef) -> Option<usize> {
    match r {
        PoseRef::Anchor { anchor, .. } => Some(*anchor),
        PoseRef::Pose(p) => Some(nearest_tile(p.x, p.y)).filter(|&n| {
            let (x, y) = tile_center(n);
            (x - p.x).hypot(y - p.y) < 1e-9
        }),
    }
}

/// (from, to) tiles of each scripted controller move: the hand-frame tile
/// the grasp happens on, and the aimed tile.
pub fn scripted_tile_moves(script: &ScenarioScript) -> Vec<(usize, usize)> {
    let mut hand: BTreeMap<UserId, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for e in &script.events {
        match &e.kind {
            EventKind::HandFrame { user, pose } => {
                if let Some(n) = anchor_of(pose) {
                    hand.insert(user.clone(), n);
                }
            }
            EventKind::Aim { user, pose, .. } => {
                out.push((hand[user], anchor_of(pose).expect("aim on a tile")));
            }
            _ => {}
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Nearest-proxy dispatch by brute force
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PoolMember {
    pub id: String,
    /// Position in eighths of a meter, so distances compare exactly.
    pub cell: (i64, i64),
    pub idle: bool,
    pub carried: bool,
}

/// Argmin of squared distance over the eligible members, ties to the
/// smallest id. Eligible: not carried, and idle or currently active.
pub fn brute_force_nearest(pool: &[PoolMember], focus: (i64, i64), active: Option<&str>) -> Option<String> {
    pool.iter()
        .filter(|m| !m.carried && (m.idle || Some(m.id.as_str()) == active))
        .map(|m| {
            let (dx, dy) = (m.cell.0 - focus.0, m.cell.1 - focus.1);
            (dx * dx + dy * dy, m.id.clone())
        })
        .min()
        .map(|(_, id)| id)
}

// ---------------------------------------------------------------------------
// Relay soak over the sans-IO hub
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
pub struct SoakOutcome {
    pub published: u64,
    pub sessions: u64,
    /// Deliveries that repeated, skipped or reordered a sequence number
    /// within one continuous sink session.
    pub fifo_faults: u64,
    /// First live message after a snapshot that does not continue it.
    pub snapshot_faults: u64,
    /// The always-connected sink must see every message exactly once.
    pub steady_missing: u64,
    pub steady_duplicates: u64,
    pub late_joiners_with_snapshot: u64,
}

impl SoakOutcome {
    pub fn ok(&self) -> bool {
        self.fifo_faults == 0
            && self.snapshot_faults == 0
            && self.steady_missing == 0
            && self.steady_duplicates == 0
            && self.late_joiners_with_snapshot > 0
    }
}

fn soak_reg(id: &str, role: Role) -> ClientRegistration {
    ClientRegistration {
        client_id: id.to_owned(),
        namespaces: BTreeSet::from(["soak".to_owned()]),
        role,
        site: SiteId::new("a"),
    }
}

/// Two emitters publish `per_emitter` messages each while four sinks and
/// both emitters connect and disconnect at random. Latency with jitter is
/// injected so deliveries interleave with connection changes.
pub fn relay_soak(seed: u64, per_emitter: u64) -> SoakOutcome {
    const EMITTERS: [&str; 2] = ["e1", "e2"];
    const FLAKY: [&str; 4] = ["s1", "s2", "s3", "s4"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hub = Hub::new(HubConfig {
        seed,
        ..HubConfig::default()
    });
    hub.inject_latency("soak", 15, 10).unwrap();
    hub.register(soak_reg("steady", Role::Sink)).unwrap();

    let mut out = SoakOutcome::default();
    let mut next_seq: BTreeMap<&str, u64> = EMITTERS.iter().map(|e| (*e, 1)).collect();
    let mut emitter_online: BTreeMap<&str, bool> = EMITTERS.iter().map(|e| (*e, true)).collect();
    for e in EMITTERS {
        hub.register(soak_reg(e, Role::Emitter)).unwrap();
    }
    // Per sink session: last seq seen per emitter, and whether the
    // emitter's first live message must continue a snapshot.
    let mut sessions: BTreeMap<String, BTreeMap<String, (u64, bool)>> = BTreeMap::new();
    let mut steady_seen: BTreeMap<String, u64> = BTreeMap::new();
    let mut now: Millis = 0;

    let done = |n: &BTreeMap<&str, u64>| n.values().all(|&s| s > per_emitter);
    while !done(&next_seq) || hub.next_due().is_some() {
        match rng.random_range(0..100) {
            0..=69 => {
                let e = EMITTERS[rng.random_range(0..2)];
                let seq = next_seq[e];
                if emitter_online[e] && seq <= per_emitter {
                    let msg_type = if rng.random_bool(0.1) { MsgType::Binding } else { MsgType::Frame };
                    let m = RelayMessage {
                        namespace: "soak".into(),
                        emitter_id: e.into(),
                        msg_type,
                        seq,
                        sent_at: now,
                        payload: serde_json::json!({"seq": seq}),
                    };
                    hub.publish(e, m, now).unwrap();
                    next_seq.insert(e, seq + 1);
                    out.published += 1;
                }
            }
            70..=71 => {
                let e = EMITTERS[rng.random_range(0..2)];
                if emitter_online[e] {
                    hub.unregister(e);
                    emitter_online.insert(e, false);
                } else {
                    let r = hub.register(soak_reg(e, Role::Emitter)).unwrap();
                    assert_eq!(r.next_seq["soak"], next_seq[e], "emitter resume point");
                    emitter_online.insert(e, true);
                }
            }
            72..=79 => {
                let s = FLAKY[rng.random_range(0..FLAKY.len())];
                if sessions.remove(s).is_some() {
                    hub.unregister(s);
                } else {
                    let r = hub.register(soak_reg(s, Role::Sink)).unwrap();
                    out.sessions += 1;
                    let mut state = BTreeMap::new();
                    for m in &r.snapshot {
                        let entry = state.entry(m.emitter_id.clone()).or_insert((0, true));
                        entry.0 = entry.0.max(m.seq);
                    }
                    if !r.snapshot.is_empty() {
                        out.late_joiners_with_snapshot += 1;
                    }
                    sessions.insert(s.to_owned(), state);
                }
            }
            _ => {
                now += rng.random_range(1..=5);
                for d in hub.poll(now) {
                    let m = &d.message;
                    if d.to == "steady" {
                        let last = steady_seen.entry(m.emitter_id.clone()).or_default();
                        if m.seq <= *last {
                            out.steady_duplicates += 1;
                        } else {
                            out.steady_missing += m.seq - *last - 1;
                            *last = m.seq;
                        }
                        continue;
                    }
                    let Some(state) = sessions.get_mut(&d.to) else {
                        out.fifo_faults += 1;
                        continue;
                    };
                    match state.get_mut(&m.emitter_id) {
                        Some((last, from_snapshot)) => {
                            if m.seq != *last + 1 {
                                if *from_snapshot {
                                    out.snapshot_faults += 1;
                                } else {
                                    out.fifo_faults += 1;
                                }
                            }
                            *last = m.seq;
                            *from_snapshot = false;
                        }
                        None => {
                            state.insert(m.emitter_id.clone(), (m.seq, false));
                        }
                    }
                }
            }
        }
    }
    for e in EMITTERS {
        out.steady_missing += per_emitter - steady_seen.get(e).copied().unwrap_or(0);
    }
    out
}

// ---------------------------------------------------------------------------
// Tick-by-tick audits over a running scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone)]
pub struct MotionAudit {
    pub ticks: u64,
    pub speed_violations: u64,
    pub clearance_violations: u64,
}

/// Steps a script to the end and checks every site's own proxies at every
/// tick: displacement within the profile limits (unless a hand carries the
/// proxy) and footprints never overlapping.
pub fn audit_motion(script: &ScenarioScript) -> MotionAudit {
    let mut runner = Runner::new(script).unwrap();
    let mut audit = MotionAudit::default();
    let mut prev: BTreeMap<(SiteId, String), (Pose2D, bool)> = BTreeMap::new();
    let dt = runner.dt() as f64 / 1000.0;
    while !runner.finished() {
        runner.step().unwrap();
        audit.ticks += 1;
        for agent in runner.sites().values() {
            let own: Vec<_> = agent.world.proxies.values().filter(|p| p.site == agent.site).collect();
            for p in &own {
                let key = (agent.site.clone(), p.id.to_string());
                let carried = p.carrying.is_some();
                if let Some((before, was_carried)) = prev.insert(key, (p.pose, carried)) {
                    if carried || was_carried {
                        continue;
                    }
                    let lin = (p.pose.x - before.x).hypot(p.pose.y - before.y);
                    let mut turn = (p.pose.heading - before.heading).rem_euclid(2.0 * PI);
                    if turn > PI {
                        turn = 2.0 * PI - turn;
                    }
                    let slack = 1.0 + 1e-6;
                    if lin > p.profile.max_linear_speed * dt * slack + 1e-9
                        || turn > p.profile.max_angular_speed * dt * slack + 1e-9
                    {
                        audit.speed_violations += 1;
                    }
                }
            }
            for (i, a) in own.iter().enumerate() {
                for b in &own[i + 1..] {
                    let gap = (a.pose.x - b.pose.x).hypot(a.pose.y - b.pose.y);
                    if gap < a.profile.footprint_radius + b.profile.footprint_radius - 1e-6 {
                        audit.clearance_violations += 1;
                    }
                }
            }
        }
    }
    audit
}

#[derive(Debug, Default)]
pub struct ClinkAudit {
    pub quiescent_checks: u64,
    pub quiescent_ok: u64,
    pub worst_offset: f64,
    pub races: u64,
    pub races_ok: u64,
}

/// Checks the two-site mug script against its own event list: at every
/// check-quiescent time both sites show the mug at the same pose and every
/// proxy bound to it sits within ε of it; at every check-race time every
/// site's holder is the user with the earliest grasp since the last check.
pub fn audit_clink(script: &ScenarioScript) -> ClinkAudit {
    let user_site: BTreeMap<UserId, SiteId> =
        script.users.iter().map(|u| (u.id.clone(), u.site.clone())).collect();
    let bound: BTreeMap<ObjectId, Vec<String>> = script
        .bindings
        .iter()
        .flat_map(|b| b.objects.iter().map(move |o| (o.clone(), b.proxies.iter().map(|p| p.to_string()).collect())))
        .collect();
    let mut quiescent: BTreeMap<Millis, Vec<ObjectId>> = BTreeMap::new();
    let mut races: BTreeMap<Millis, (ObjectId, UserId)> = BTreeMap::new();
    let mut attempts: BTreeMap<ObjectId, Vec<(Millis, SiteId, UserId)>> = BTreeMap::new();
    let mut events: Vec<_> = script.events.iter().map(|e| (e.at.expect("absolute times"), &e.kind)).collect();
    events.sort_by_key(|(t, _)| *t);
    for (t, kind) in events {
        match kind {
            EventKind::Grasp { user, object } => {
                attempts.entry(object.clone()).or_default().push((t, user_site[user].clone(), user.clone()))
            }
            EventKind::CheckQuiescent { object } => quiescent.entry(t).or_default().push(object.clone()),
            EventKind::CheckRace { object } => {
                let winner = attempts.remove(object).unwrap_or_default().into_iter().min().unwrap().2;
                races.insert(t, (object.clone(), winner));
            }
            _ => {}
        }
    }

    let mut runner = Runner::new(script).unwrap();
    let mut audit = ClinkAudit::default();
    while !runner.finished() {
        runner.step().unwrap();
        let now = runner.now();
        for object in quiescent.get(&now).into_iter().flatten() {
            audit.quiescent_checks += 1;
            let shared = runner.sites().values().next().unwrap().world.objects[object].pose;
            let mut worst: f64 = 0.0;
            for agent in runner.sites().values() {
                let w = &agent.world;
                let o = w.objects[object].pose;
                worst = worst.max((o.x - shared.x).hypot(o.y - shared.y));
                let own = w.proxies.values().filter(|p| p.site == agent.site);
                for p in own.filter(|p| bound[object].iter().any(|id| id == p.id.as_str())) {
                    worst = worst.max((p.pose.x - shared.x).hypot(p.pose.y - shared.y));
                }
            }
            audit.worst_offset = audit.worst_offset.max(worst);
            if worst <= EPSILON_M + 1e-9 {
                audit.quiescent_ok += 1;
            }
        }
        if let Some((object, winner)) = races.get(&now) {
            audit.races += 1;
            let all = runner
                .sites()
                .values()
                .all(|a| a.world.grasps.get(object).map(|g| &g.user) == Some(winner));
            if all {
                audit.races_ok += 1;
            }
        }
    }
    audit
}

// ---------------------------------------------------------------------------
// Gestures
// ---------------------------------------------------------------------------

/// Runs a fresh classifier over the trajectory and compares with its label.
pub fn trajectory_matches_label(t: &Trajectory) -> bool {
    let mut c = GestureClassifier::new(UserId::new("oracle"));
    let events: Vec<_> = t.samples.iter().filter_map(|s| c.push(*s)).collect();
    match t.label {
        Label::None => events.is_empty(),
        label => {
            let [e] = events.as_slice() else { return false };
            let kind_ok = match label {
                Label::Push => e.kind == proxysync_core::gesture::GestureKind::Push,
                Label::Pull => e.kind == proxysync_core::gesture::GestureKind::Pull,
                Label::Slide => e.kind == proxysync_core::gesture::GestureKind::Slide,
                Label::None => unreachable!(),
            };
            let dir_ok = t
                .direction
                .is_none_or(|d| (e.direction.x - d.x).hypot(e.direction.y - d.y) < 1e-6);
            kind_ok && dir_ok
        }
    }
}

/// Expected resting tile per telekinesis checkpoint, from the script alone.
/// The user stands beyond the near edge facing the table: a stroke away from
/// the body pushes the mug to the far row, a stroke toward the body pulls it
/// to the near row, and a sideways stroke slides it one tile over.
pub fn telekinesis_expectations(script: &ScenarioScript) -> Vec<(String, usize)> {
    let mut mug_tile = 0usize;
    let mut last_stroke: Option<(f64, f64)> = None;
    let mut hand: Option<(f64, f64)> = None;
    let mut out = Vec::new();
    for e in &script.events {
        match &e.kind {
            EventKind::Place { pose, .. } => {
                mug_tile = anchor_of(pose).expect("placed on a tile");
                last_stroke = None;
            }
            EventKind::Move { to, speed, .. } => {
                let PoseRef::Pose(p) = to else { continue };
                if let Some((hx, hy)) = hand {
                    // The fast stroke is the gesture; slow moves reposition.
                    if speed.is_some_and(|s| s > 0.2) {
                        last_stroke = Some((p.x - hx, p.y - hy));
                    }
                }
                hand = Some((p.x, p.y));
            }
            EventKind::Checkpoint { label, .. } => {
                let (dx, dy) = last_stroke.expect("a stroke before each checkpoint");
                let (col, row) = ((mug_tile - 1) % 3, (mug_tile - 1) / 3);
                let (col, row) = if dy.abs() > dx.abs() {
                    if dy < 0.0 { (col, 0) } else { (col, 2) }
                } else if dx > 0.0 {
                    (col + 1, row)
                } else {
                    (col - 1, row)
                };
                out.push((label.clone(), row * 3 + col + 1));
            }
            _ => {}
        }
    }
    out
}
