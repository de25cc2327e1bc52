use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gesture::GestureKind;
use crate::mapping::{BindingKind, RemotePolicy};
use crate::model::{Millis, ObjectId, Pose2D, ProxyId, SiteId, UserId, VisualKind, Workspace, WorkspaceKind};
use crate::motion::ProfileKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Tictactoe,
    Telekinesis,
    CityBuilder,
    ClinkMugs,
    WallPush,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::Tictactoe,
        ScenarioName::Telekinesis,
        ScenarioName::CityBuilder,
        ScenarioName::ClinkMugs,
        ScenarioName::WallPush,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Tictactoe => "tictactoe",
            ScenarioName::Telekinesis => "telekinesis",
            ScenarioName::CityBuilder => "city-builder",
            ScenarioName::ClinkMugs => "clink-mugs",
            ScenarioName::WallPush => "wall-push",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

/// A pose given directly or as a 1-based workspace anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoseRef {
    Anchor {
        anchor: usize,
        #[serde(default)]
        heading: f64,
    },
    Pose(Pose2D),
}

impl PoseRef {
    pub fn resolve(&self, workspace: &Workspace) -> Option<Pose2D> {
        match *self {
            PoseRef::Anchor { anchor, heading } => {
                workspace.anchor(anchor).map(|a| a.with_heading(heading))
            }
            PoseRef::Pose(p) => Some(p),
        }
    }
}

impl From<Pose2D> for PoseRef {
    fn from(p: Pose2D) -> Self {
        PoseRef::Pose(p)
    }
}

/// A horizontal surface the user touches (the wall face), checked every tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchSurface {
    /// Surface line, meters.
    pub y: f64,
    /// A hand within this distance of the line is touching.
    pub reach: f64,
    /// Half the width of the physical section carried by the proxy.
    pub half_width: f64,
}

fn default_latency() -> Millis {
    crate::retarget::DEFAULT_ARTIFICIAL_LATENCY
}
fn default_hand_speed() -> f64 {
    crate::retarget::DEFAULT_HAND_SPEED
}
fn default_tail() -> Millis {
    3000
}
fn default_dt() -> Millis {
    crate::model::TICK_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default = "default_workspace")]
    pub workspace: WorkspaceKind,
    #[serde(default = "default_latency")]
    pub artificial_latency: Millis,
    #[serde(default = "default_hand_speed")]
    pub hand_speed: f64,
    /// Overrides every proxy's linear speed limit.
    #[serde(default)]
    pub robot_speed: Option<f64>,
    /// Table width in meters; scales the workspace and every pose.
    #[serde(default)]
    pub table_size: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Relay transport delay and jitter, separate from the artificial latency.
    #[serde(default)]
    pub relay_delay: Millis,
    #[serde(default)]
    pub relay_jitter: Millis,
    /// Simulated time after the last event.
    #[serde(default = "default_tail")]
    pub tail: Millis,
    #[serde(default = "default_dt")]
    pub dt: Millis,
    #[serde(default)]
    pub touch_surface: Option<TouchSurface>,
}

fn default_workspace() -> WorkspaceKind {
    WorkspaceKind::Tabletop
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            workspace: default_workspace(),
            artificial_latency: default_latency(),
            hand_speed: default_hand_speed(),
            robot_speed: None,
            table_size: None,
            seed: 0,
            relay_delay: 0,
            relay_jitter: 0,
            tail: default_tail(),
            dt: default_dt(),
            touch_surface: None,
        }
    }
}

impl Parameters {
    /// The base workspace before any table-size scaling.
    pub fn base_workspace(&self) -> Workspace {
        match self.workspace {
            WorkspaceKind::Tabletop => Workspace::tabletop_default(),
            WorkspaceKind::Floor => Workspace::floor_default(),
        }
    }

    pub fn scale(&self) -> f64 {
        self.table_size
            .map(|w| w / self.base_workspace().width)
            .unwrap_or(1.0)
    }

    pub fn workspace(&self) -> Workspace {
        self.base_workspace().scaled(self.scale())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub kind: VisualKind,
    pub pose: PoseRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySpec {
    pub id: ProxyId,
    pub site: SiteId,
    pub profile: ProfileKind,
    pub pose: PoseRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub id: UserId,
    pub site: SiteId,
    pub hand: PoseRef,
    pub body: PoseRef,
    /// Run the wrist-gesture classifier on this user's hand stream.
    #[serde(default)]
    pub gestures: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingSpec {
    pub kind: BindingKind,
    pub objects: Vec<ObjectId>,
    pub proxies: Vec<ProxyId>,
    #[serde(default)]
    pub policy: RemotePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventKind {
    Grasp {
        user: UserId,
        object: ObjectId,
    },
    Release {
        user: UserId,
        object: ObjectId,
    },
    /// Announces the intended set-down pose of the held object.
    Aim {
        user: UserId,
        object: ObjectId,
        pose: PoseRef,
    },
    /// Straight hand motion from the current hand pose; lasts `distance / speed`.
    Move {
        user: UserId,
        to: PoseRef,
        #[serde(default)]
        speed: Option<f64>,
    },
    /// Polyline hand motion through `points`.
    HandPath {
        user: UserId,
        points: Vec<PoseRef>,
        #[serde(default)]
        speed: Option<f64>,
    },
    /// A single tracked hand sample.
    HandFrame {
        user: UserId,
        pose: PoseRef,
    },
    Body {
        user: UserId,
        pose: PoseRef,
    },
    /// Experimenter reset: the object is placed at `pose` at every site and its
    /// proxies drive there.
    Place {
        object: ObjectId,
        pose: PoseRef,
    },
    GestureInjection {
        user: UserId,
        kind: GestureKind,
    },
    /// The user's hand meets the object; its proxy must be in place.
    Touch {
        user: UserId,
        object: ObjectId,
    },
    /// Every site's proxy for the object must sit on the shared pose.
    CheckQuiescent {
        object: ObjectId,
    },
    /// Every site must agree that the earliest grasp since the last check won.
    CheckRace {
        object: ObjectId,
    },
    /// Records where the object is, optionally against an expected anchor.
    Checkpoint {
        label: String,
        object: ObjectId,
        #[serde(default)]
        expect_anchor: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    /// Absolute session time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Millis>,
    /// Delay after the end of the previous event (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<Millis>,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl EventSpec {
    pub fn at(at: Millis, kind: EventKind) -> Self {
        Self {
            at: Some(at),
            after: None,
            kind,
        }
    }

    pub fn after(after: Millis, kind: EventKind) -> Self {
        Self {
            at: None,
            after: Some(after),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub name: ScenarioName,
    pub sites: Vec<SiteId>,
    #[serde(default)]
    pub parameters: Parameters,
    pub objects: Vec<ObjectSpec>,
    pub proxies: Vec<ProxySpec>,
    pub users: Vec<UserSpec>,
    pub bindings: Vec<BindingSpec>,
    pub events: Vec<EventSpec>,
}

/// Every violation found in a script.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid script: {}", .violations.join("; "))]
pub struct ScriptError {
    pub violations: Vec<String>,
}

impl ScenarioScript {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        serde_json::from_str(text).map_err(|e| ScriptError {
            violations: vec![e.to_string()],
        })
    }

    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_canonical_string(self).expect("scripts serialize")
    }

    /// Checks references, bounds, parameters and event ordering.
    pub fn validate(&self) -> Result<(), ScriptError> {
        let mut v = Vec::new();
        let p = &self.parameters;
        if self.sites.is_empty() || self.sites.len() > 2 {
            v.push(format!("expected 1 or 2 sites, found {}", self.sites.len()));
        }
        let sites: BTreeSet<&SiteId> = self.sites.iter().collect();
        if sites.len() != self.sites.len() {
            v.push("duplicate site ids".into());
        }
        if p.dt <= 0 {
            v.push(format!("dt must be positive, got {}", p.dt));
        }
        if p.artificial_latency < 0 || p.relay_delay < 0 || p.relay_jitter < 0 || p.tail < 0 {
            v.push("latencies and tail must be non-negative".into());
        }
        if !(p.hand_speed.is_finite() && p.hand_speed > 0.0) {
            v.push(format!("hand_speed must be positive, got {}", p.hand_speed));
        }
        if let Some(s) = p.robot_speed {
            if !(s.is_finite() && s > 0.0) {
                v.push(format!("robot_speed must be positive, got {s}"));
            }
        }
        if let Some(s) = p.table_size {
            if !(s.is_finite() && s > 0.0) {
                v.push(format!("table_size must be positive, got {s}"));
            }
        }
        let ws = p.base_workspace();
        let check_pose = |v: &mut Vec<String>, what: &str, pose: &PoseRef, bounded: bool| match pose
            .resolve(&ws)
        {
            None => v.push(format!("{what}: unknown anchor in {pose:?}")),
            Some(p) if !p.is_finite() => v.push(format!("{what}: non-finite pose")),
            Some(p) if bounded && !ws.contains(&p) => {
                v.push(format!("{what}: pose ({:.3}, {:.3}) outside workspace", p.x, p.y))
            }
            _ => {}
        };

        let mut objects = BTreeSet::new();
        for o in &self.objects {
            if !objects.insert(&o.id) {
                v.push(format!("duplicate object {}", o.id));
            }
            check_pose(&mut v, &format!("object {}", o.id), &o.pose, true);
        }
        let mut proxies = BTreeSet::new();
        for x in &self.proxies {
            if !proxies.insert(&x.id) {
                v.push(format!("duplicate proxy {}", x.id));
            }
            if !sites.contains(&x.site) {
                v.push(format!("proxy {} at undeclared site {}", x.id, x.site));
            }
            check_pose(&mut v, &format!("proxy {}", x.id), &x.pose, true);
        }
        let mut users = BTreeSet::new();
        for u in &self.users {
            if !users.insert(&u.id) {
                v.push(format!("duplicate user {}", u.id));
            }
            if !sites.contains(&u.site) {
                v.push(format!("user {} at undeclared site {}", u.id, u.site));
            }
            check_pose(&mut v, &format!("user {} hand", u.id), &u.hand, false);
            check_pose(&mut v, &format!("user {} body", u.id), &u.body, false);
        }
        for (i, b) in self.bindings.iter().enumerate() {
            for o in &b.objects {
                if !objects.contains(o) {
                    v.push(format!("binding {i}: unknown object {o}"));
                }
            }
            for x in &b.proxies {
                if !proxies.contains(x) {
                    v.push(format!("binding {i}: unknown proxy {x}"));
                }
            }
        }

        let mut last_start: Millis = 0;
        for (i, e) in self.events.iter().enumerate() {
            let what = format!("event {i}");
            match (e.at, e.after) {
                (Some(_), Some(_)) => v.push(format!("{what}: both `at` and `after` given")),
                (Some(at), None) => {
                    if at < last_start {
                        v.push(format!("{what}: at {at} ms precedes the previous event"));
                    }
                    last_start = at;
                }
                (None, Some(after)) if after < 0 => {
                    v.push(format!("{what}: negative `after`"))
                }
                _ => {}
            }
            let user = |v: &mut Vec<String>, u: &UserId| {
                if !users.contains(u) {
                    v.push(format!("{what}: unknown user {u}"));
                }
            };
            let object = |v: &mut Vec<String>, o: &ObjectId| {
                if !objects.contains(o) {
                    v.push(format!("{what}: unknown object {o}"));
                }
            };
            match &e.kind {
                EventKind::Grasp { user: u, object: o }
                | EventKind::Release { user: u, object: o }
                | EventKind::Touch { user: u, object: o } => {
                    user(&mut v, u);
                    object(&mut v, o);
                }
                EventKind::Aim { user: u, object: o, pose } => {
                    user(&mut v, u);
                    object(&mut v, o);
                    check_pose(&mut v, &what, pose, true);
                }
                EventKind::Move { user: u, to, speed } => {
                    user(&mut v, u);
                    check_pose(&mut v, &what, to, false);
                    if speed.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
                        v.push(format!("{what}: speed must be positive"));
                    }
                }
                EventKind::HandPath { user: u, points, speed } => {
                    user(&mut v, u);
                    if points.is_empty() {
                        v.push(format!("{what}: empty hand path"));
                    }
                    for pt in points {
                        check_pose(&mut v, &what, pt, false);
                    }
                    if speed.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
                        v.push(format!("{what}: speed must be positive"));
                    }
                }
                EventKind::HandFrame { user: u, pose } | EventKind::Body { user: u, pose } => {
                    user(&mut v, u);
                    check_pose(&mut v, &what, pose, false);
                }
                EventKind::Place { object: o, pose } => {
                    object(&mut v, o);
                    check_pose(&mut v, &what, pose, true);
                }
                EventKind::GestureInjection { user: u, .. } => user(&mut v, u),
                EventKind::CheckQuiescent { object: o }
                | EventKind::CheckRace { object: o }
                | EventKind::Checkpoint { object: o, .. } => object(&mut v, o),
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScriptError { violations: v })
        }
    }
}
