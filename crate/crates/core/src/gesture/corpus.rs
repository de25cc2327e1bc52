//! Scripted wrist trajectories with known labels, stored one per JSON file.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GestureClassifier, GestureEvent, GestureKind, WristSample};
use crate::model::{Pose2D, UserId, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Push,
    Pull,
    Slide,
    None,
}

impl Label {
    pub fn kind(self) -> Option<GestureKind> {
        match self {
            Label::Push => Some(GestureKind::Push),
            Label::Pull => Some(GestureKind::Pull),
            Label::Slide => Some(GestureKind::Slide),
            Label::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub name: String,
    pub label: Label,
    /// Expected command direction for labelled trajectories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec2>,
    pub samples: Vec<WristSample>,
}

impl Trajectory {
    /// Runs the streaming classifier over every sample.
    pub fn classify(&self) -> Vec<GestureEvent> {
        let mut c = GestureClassifier::new(UserId::new("corpus"));
        self.samples.iter().filter_map(|s| c.push(*s)).collect()
    }

    /// Exactly the labelled event (or none for negatives).
    pub fn passes(&self) -> bool {
        let events = self.classify();
        match (self.label.kind(), events.as_slice()) {
            (None, []) => true,
            (Some(kind), [e]) => {
                e.kind == kind
                    && self
                        .direction
                        .is_none_or(|d| (e.direction - d).norm() < 1e-6)
            }
            _ => false,
        }
    }
}

/// Motion segment: velocity (m/s, world frame) held for `ms`.
struct Seg(Vec2, i64);

fn build(name: &str, label: Label, heading: f64, start: Vec2, segs: &[Seg], wobble: f64) -> Trajectory {
    let mut samples = Vec::new();
    let mut p = start;
    let mut t = 0;
    let mut push = |p: Vec2, t: i64| {
        // Deterministic small tremor perpendicular to the facing.
        let n = (t as f64 * 0.02).sin() * wobble;
        let off = Vec2::from_angle(heading).perp().scale(n);
        samples.push(WristSample {
            pose: Pose2D::new(p.x + off.x, p.y + off.y, heading),
            timestamp: t,
        });
    };
    push(p, t);
    for Seg(v, ms) in segs {
        for _ in 0..ms / 10 {
            t += 10;
            p = p + v.scale(0.01);
            push(p, t);
        }
    }
    let facing = Vec2::from_angle(heading);
    let direction = match label {
        Label::Push => Some(facing),
        Label::Pull => Some(facing.scale(-1.0)),
        Label::Slide => segs
            .iter()
            .map(|Seg(v, _)| v.dot(facing.perp()))
            .find(|l| l.abs() > 1e-9)
            .map(|l| facing.perp().scale(l.signum())),
        Label::None => None,
    };
    Trajectory {
        name: name.to_owned(),
        label,
        direction,
        samples,
    }
}

fn rest(ms: i64) -> Seg {
    Seg(Vec2::new(0.0, 0.0), ms)
}

fn along(heading: f64, forward: f64, lateral: f64, ms: i64) -> Seg {
    let f = Vec2::from_angle(heading);
    Seg(f.scale(forward) + f.perp().scale(lateral), ms)
}

/// The 36-trajectory golden corpus: nine each of push, pull, slide and negatives.
pub fn synthesize() -> Vec<Trajectory> {
    let headings = [0.0, FRAC_PI_2, -FRAC_PI_2, PI, FRAC_PI_4, -3.0 * FRAC_PI_4, 2.0, -1.0, 0.5];
    let speeds = [0.25, 0.3, 0.35, 0.4, 0.3, 0.5, 0.28, 0.3, 0.45];
    let durations = [200, 250, 300, 400, 200, 180, 350, 220, 260];
    let start = Vec2::new(0.45, 0.6);
    let mut out = Vec::new();

    for i in 0..9 {
        let (h, v, d) = (headings[i], speeds[i], durations[i]);
        let wobble = if i % 3 == 2 { 0.001 } else { 0.0 };
        // Slight lateral drift keeps the forward component dominant.
        let drift = if i % 2 == 0 { 0.05 } else { -0.04 };
        out.push(build(
            &format!("push-{i:02}"),
            Label::Push,
            h,
            start,
            &[rest(100), along(h, v, drift, d), rest(200)],
            wobble,
        ));
        out.push(build(
            &format!("pull-{i:02}"),
            Label::Pull,
            h,
            start,
            &[rest(100), along(h, -v, -drift, d), rest(200)],
            wobble,
        ));
        let side = if i % 2 == 0 { 1.0 } else { -1.0 };
        out.push(build(
            &format!("slide-{i:02}"),
            Label::Slide,
            h,
            start,
            &[rest(100), along(h, drift, side * v, d), rest(200)],
            wobble,
        ));
    }

    let h = 0.3;
    let negatives: Vec<(&str, Vec<Seg>, f64)> = vec![
        ("stationary", vec![rest(500)], 0.0),
        ("tremor", vec![rest(500)], 0.004),
        ("slow-push", vec![rest(100), along(h, 0.15, 0.0, 400), rest(100)], 0.0),
        ("slow-slide", vec![rest(100), along(h, 0.0, 0.12, 400), rest(100)], 0.0),
        // 80 ms at 0.5 m/s: the 150 ms mean clears the threshold, the sub-windows do not.
        ("short-burst", vec![rest(200), along(h, 0.5, 0.0, 80), rest(300)], 0.0),
        ("diagonal", vec![rest(100), along(h, 0.18, 0.18, 400), rest(100)], 0.0),
        (
            "oscillation",
            vec![
                rest(100),
                along(h, 0.3, 0.0, 40),
                along(h, -0.3, 0.0, 40),
                along(h, 0.3, 0.0, 40),
                along(h, -0.3, 0.0, 40),
                along(h, 0.3, 0.0, 40),
                along(h, -0.3, 0.0, 40),
                rest(100),
            ],
            0.0,
        ),
        ("drift", vec![rest(100), along(h, 0.19, 0.0, 600), rest(100)], 0.0),
        ("spike", vec![rest(200), along(h, 3.0, 0.0, 10), rest(300)], 0.0),
    ];
    for (name, segs, wobble) in negatives {
        out.push(build(&format!("none-{name}"), Label::None, h, start, &segs, wobble));
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

/// Loads every `*.json` trajectory in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Trajectory>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let path = p.display().to_string();
            let text = std::fs::read_to_string(p).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|source| CorpusError::Parse { path, source })
        })
        .collect()
}

/// Writes each trajectory as canonical JSON to `<dir>/<name>.json`.
pub fn write_dir(dir: &Path, corpus: &[Trajectory]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in corpus {
        let text = crate::canonical::to_canonical_string(t).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(format!("{}.json", t.name)), text + "\n")?;
    }
    Ok(())
}
