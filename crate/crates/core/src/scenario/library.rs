//! Built-in scripts for the five reference scenarios.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::script::{
    BindingSpec, EventKind, EventSpec, ObjectSpec, Parameters, PoseRef, ProxySpec, ScenarioName,
    ScenarioScript, TouchSurface, UserSpec,
};
use crate::gesture::GestureKind;
use crate::mapping::{BindingKind, RemotePolicy};
use crate::model::{Millis, ObjectId, Pose2D, ProxyId, SiteId, UserId, VisualKind, WorkspaceKind};
use crate::motion::ProfileKind;

pub fn builtin(name: ScenarioName) -> ScenarioScript {
    match name {
        ScenarioName::Tictactoe => tictactoe(),
        ScenarioName::Telekinesis => telekinesis(),
        ScenarioName::CityBuilder => city_builder(),
        ScenarioName::ClinkMugs => clink_mugs(),
        ScenarioName::WallPush => wall_push(),
    }
}

fn anchor(n: usize) -> PoseRef {
    PoseRef::Anchor {
        anchor: n,
        heading: 0.0,
    }
}

fn pose(x: f64, y: f64, heading: f64) -> PoseRef {
    PoseRef::Pose(Pose2D::new(x, y, heading))
}

fn user(id: &str, site: &str, hand: PoseRef, body: PoseRef, gestures: bool) -> UserSpec {
    UserSpec {
        id: UserId::new(id),
        site: SiteId::new(site),
        hand,
        body,
        gestures,
    }
}

fn proxy(id: &str, site: &str, profile: ProfileKind, pose: PoseRef) -> ProxySpec {
    ProxySpec {
        id: ProxyId::new(id),
        site: SiteId::new(site),
        profile,
        pose,
    }
}

fn object(id: &str, kind: VisualKind, pose: PoseRef) -> ObjectSpec {
    ObjectSpec {
        id: ObjectId::new(id),
        kind,
        pose,
    }
}

fn ids<T: From<&'static str>>(names: &[&'static str]) -> Vec<T> {
    names.iter().map(|&n| T::from(n)).collect()
}

/// Eulerian circuit over every ordered tile pair (self-pairs included),
/// starting and ending on tile 1.
pub fn tile_pair_tour(tiles: usize) -> Vec<(usize, usize)> {
    let mut next = vec![1usize; tiles + 1];
    let mut stack = vec![1usize];
    let mut circuit = Vec::new();
    while let Some(&v) = stack.last() {
        if next[v] <= tiles {
            let w = next[v];
            next[v] += 1;
            stack.push(w);
        } else {
            circuit.push(stack.pop().expect("non-empty"));
        }
    }
    circuit.reverse();
    circuit.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Two players move one shared controller across all 81 tile pairs, alternating sites.
pub fn tictactoe() -> ScenarioScript {
    let players = [UserId::new("alice"), UserId::new("bob")];
    let ctrl = ObjectId::new("ctrl");
    let mut events = Vec::new();
    for (k, (from, to)) in tile_pair_tour(9).into_iter().enumerate() {
        let u = players[k % 2].clone();
        let hand = EventKind::HandFrame {
            user: u.clone(),
            pose: anchor(from),
        };
        events.push(if k == 0 {
            EventSpec::at(1000, hand)
        } else {
            EventSpec::after(3000, hand)
        });
        events.push(EventSpec::after(
            0,
            EventKind::Grasp {
                user: u.clone(),
                object: ctrl.clone(),
            },
        ));
        events.push(EventSpec::after(
            0,
            EventKind::Aim {
                user: u.clone(),
                object: ctrl.clone(),
                pose: anchor(to),
            },
        ));
        events.push(EventSpec::after(
            0,
            EventKind::Move {
                user: u.clone(),
                to: anchor(to),
                speed: None,
            },
        ));
        events.push(EventSpec::after(
            0,
            EventKind::Release {
                user: u,
                object: ctrl.clone(),
            },
        ));
    }
    let rest = pose(0.45, 1.0, 0.0);
    let body = pose(0.45, 1.1, -FRAC_PI_2);
    ScenarioScript {
        name: ScenarioName::Tictactoe,
        sites: ids(&["a", "b"]),
        parameters: Parameters::default(),
        objects: vec![object("ctrl", VisualKind::Controller, anchor(1))],
        proxies: vec![
            proxy("pa", "a", ProfileKind::Tabletop, anchor(1)),
            proxy("pb", "b", ProfileKind::Tabletop, anchor(1)),
        ],
        users: vec![
            user("alice", "a", rest, body, false),
            user("bob", "b", rest, body, false),
        ],
        bindings: vec![BindingSpec {
            kind: BindingKind::ManyToOne,
            objects: ids(&["ctrl"]),
            proxies: ids(&["pa", "pb"]),
            policy: RemotePolicy::SetDown,
        }],
        events,
    }
}

/// Anchor a gesture in area `n` should move the mug to, standing in front of
/// its column: far row pulls to the near row, near row pushes to the far row,
/// middle row slides one tile (rightwards, or leftwards from the right column).
fn telekinesis_gesture(n: usize) -> (GestureKind, f64, f64) {
    let (col, row) = ((n - 1) % 3, (n - 1) / 3);
    match row {
        0 => (GestureKind::Pull, 0.0, 0.12),
        2 => (GestureKind::Push, 0.0, -0.12),
        _ if col < 2 => (GestureKind::Slide, 0.12, 0.0),
        _ => (GestureKind::Slide, -0.12, 0.0),
    }
}

fn telekinesis_expectation(n: usize) -> usize {
    match telekinesis_gesture(n).0 {
        GestureKind::Pull => n + 6,
        GestureKind::Push => n - 6,
        GestureKind::Slide if (n - 1) % 3 < 2 => n + 1,
        GestureKind::Slide => n - 1,
    }
}

/// A single user moves a mug with wrist gestures from each of the nine areas.
pub fn telekinesis() -> ScenarioScript {
    let u = UserId::new("u");
    let mug = ObjectId::new("mug");
    let facing = -FRAC_PI_2;
    let mut events = Vec::new();
    for n in 1..=9 {
        let x = 0.15 + 0.3 * ((n - 1) % 3) as f64;
        let rest = pose(x, 1.0, facing);
        let place = EventKind::Place {
            object: mug.clone(),
            pose: anchor(n),
        };
        events.push(if n == 1 {
            EventSpec::at(500, place)
        } else {
            EventSpec::after(500, place)
        });
        events.push(EventSpec::after(
            0,
            EventKind::Body {
                user: u.clone(),
                pose: pose(x, 1.1, facing),
            },
        ));
        events.push(EventSpec::after(
            0,
            EventKind::Move {
                user: u.clone(),
                to: rest,
                speed: Some(0.1),
            },
        ));
        let (_, dx, dy) = telekinesis_gesture(n);
        // Long enough for the proxy to reach the placed mug from any area.
        events.push(EventSpec::after(
            5000,
            EventKind::Move {
                user: u.clone(),
                to: pose(x + dx, 1.0 + dy, facing),
                speed: Some(0.35),
            },
        ));
        events.push(EventSpec::after(
            0,
            EventKind::Move {
                user: u.clone(),
                to: rest,
                speed: Some(0.1),
            },
        ));
        events.push(EventSpec::after(
            4000,
            EventKind::Checkpoint {
                label: format!("area-{n}"),
                object: mug.clone(),
                expect_anchor: Some(telekinesis_expectation(n)),
            },
        ));
    }
    ScenarioScript {
        name: ScenarioName::Telekinesis,
        sites: ids(&["a"]),
        parameters: Parameters::default(),
        objects: vec![object("mug", VisualKind::Mug, anchor(5))],
        proxies: vec![proxy("p1", "a", ProfileKind::Tabletop, anchor(5))],
        users: vec![user(
            "u",
            "a",
            pose(0.15, 1.0, facing),
            pose(0.15, 1.1, facing),
            true,
        )],
        bindings: vec![BindingSpec {
            kind: BindingKind::OneToOne,
            objects: ids(&["mug"]),
            proxies: ids(&["p1"]),
            policy: RemotePolicy::Live,
        }],
        events,
    }
}

const CITY_BUILDINGS: [(&str, usize); 6] = [
    ("b1", 1),
    ("b2", 3),
    ("b3", 4),
    ("b4", 6),
    ("b5", 7),
    ("b6", 9),
];

/// One user tours six virtual buildings served by two proxies.
pub fn city_builder() -> ScenarioScript {
    let u = UserId::new("u");
    let tour = ["b1", "b6", "b2", "b5", "b3", "b4", "b1", "b6"];
    let mut events = Vec::new();
    for (i, b) in tour.iter().enumerate() {
        let tile = CITY_BUILDINGS.iter().find(|(n, _)| n == b).expect("known").1;
        events.push(EventSpec {
            at: (i == 0).then_some(500),
            after: (i > 0).then_some(500),
            kind: EventKind::Move {
                user: u.clone(),
                to: anchor(tile),
                speed: None,
            },
        });
        events.push(EventSpec::after(
            4500,
            EventKind::Touch {
                user: u.clone(),
                object: ObjectId::new(*b),
            },
        ));
    }
    ScenarioScript {
        name: ScenarioName::CityBuilder,
        sites: ids(&["a"]),
        parameters: Parameters::default(),
        objects: CITY_BUILDINGS
            .iter()
            .map(|(n, t)| object(n, VisualKind::Building, anchor(*t)))
            .collect(),
        proxies: vec![
            proxy("r1", "a", ProfileKind::Tabletop, anchor(2)),
            proxy("r2", "a", ProfileKind::Tabletop, anchor(8)),
        ],
        users: vec![user("u", "a", anchor(1), pose(0.45, 1.1, -FRAC_PI_2), false)],
        bindings: vec![BindingSpec {
            kind: BindingKind::OneToMany,
            objects: CITY_BUILDINGS.iter().map(|(n, _)| ObjectId::new(*n)).collect(),
            proxies: ids(&["r1", "r2"]),
            policy: RemotePolicy::Live,
        }],
        events,
    }
}

/// Mug rest positions and the clink contact positions (centers 11 cm apart).
const M1_REST: (f64, f64) = (0.25, 0.45);
const M2_REST: (f64, f64) = (0.65, 0.45);
const M1_CLINK: (f64, f64) = (0.39, 0.45);
const M2_CLINK: (f64, f64) = (0.50, 0.45);
pub const CLINK_RACES: usize = 100;
const CLINK_CYCLES: usize = 5;

/// Two remote users clink mugs, then race for the same mug repeatedly.
pub fn clink_mugs() -> ScenarioScript {
    clink_mugs_with(0x5eed)
}

pub fn clink_mugs_with(seed: u64) -> ScenarioScript {
    let alice = UserId::new("alice");
    let bob = UserId::new("bob");
    let m1 = ObjectId::new("m1");
    let m2 = ObjectId::new("m2");
    let mut events = Vec::new();
    let mut t: Millis = 1000;
    let p = |(x, y): (f64, f64)| pose(x, y, 0.0);
    let both = |events: &mut Vec<EventSpec>, at: Millis, f: &dyn Fn(&UserId, &ObjectId) -> EventKind| {
        events.push(EventSpec::at(at, f(&alice, &m1)));
        events.push(EventSpec::at(at, f(&bob, &m2)));
    };

    for _ in 0..CLINK_CYCLES {
        for (a_to, b_to) in [(M1_CLINK, M2_CLINK), (M1_REST, M2_REST)] {
            both(&mut events, t, &|u, o| EventKind::Grasp {
                user: u.clone(),
                object: o.clone(),
            });
            events.push(EventSpec::at(
                t,
                EventKind::Move {
                    user: alice.clone(),
                    to: p(a_to),
                    speed: Some(0.2),
                },
            ));
            events.push(EventSpec::at(
                t,
                EventKind::Move {
                    user: bob.clone(),
                    to: p(b_to),
                    speed: Some(0.2),
                },
            ));
            t += 1300;
            both(&mut events, t, &|u, o| EventKind::Release {
                user: u.clone(),
                object: o.clone(),
            });
            t += 2500;
            events.push(EventSpec::at(t, EventKind::CheckQuiescent { object: m1.clone() }));
            events.push(EventSpec::at(t, EventKind::CheckQuiescent { object: m2.clone() }));
            t += 500;
        }
    }

    // Grasp races on m1: both users reach for it, one of them slightly later.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    events.push(EventSpec::at(
        t,
        EventKind::HandFrame {
            user: bob.clone(),
            pose: p(M1_REST),
        },
    ));
    t += 500;
    for _ in 0..CLINK_RACES {
        let mut delta: Millis = rng.random_range(1..=40);
        if rng.random_bool(0.5) {
            delta = -delta;
        }
        let (first, second) = if delta > 0 { (&alice, &bob) } else { (&bob, &alice) };
        events.push(EventSpec::at(
            t,
            EventKind::Grasp {
                user: first.clone(),
                object: m1.clone(),
            },
        ));
        events.push(EventSpec::at(
            t + delta.abs(),
            EventKind::Grasp {
                user: second.clone(),
                object: m1.clone(),
            },
        ));
        events.push(EventSpec::at(t + 500, EventKind::CheckRace { object: m1.clone() }));
        for u in [&alice, &bob] {
            events.push(EventSpec::at(
                t + 600,
                EventKind::Release {
                    user: u.clone(),
                    object: m1.clone(),
                },
            ));
        }
        t += 2500;
    }
    events.push(EventSpec::at(t, EventKind::CheckQuiescent { object: m1.clone() }));
    events.push(EventSpec::at(t, EventKind::CheckQuiescent { object: m2 }));

    ScenarioScript {
        name: ScenarioName::ClinkMugs,
        sites: ids(&["a", "b"]),
        parameters: Parameters {
            seed,
            relay_delay: 20,
            relay_jitter: 10,
            ..Parameters::default()
        },
        objects: vec![
            object("m1", VisualKind::Mug, p(M1_REST)),
            object("m2", VisualKind::Mug, p(M2_REST)),
        ],
        proxies: vec![
            proxy("pa1", "a", ProfileKind::Tabletop, p(M1_REST)),
            proxy("pa2", "a", ProfileKind::Tabletop, p(M2_REST)),
            proxy("pb1", "b", ProfileKind::Tabletop, p(M1_REST)),
            proxy("pb2", "b", ProfileKind::Tabletop, p(M2_REST)),
        ],
        users: vec![
            user("alice", "a", p(M1_REST), pose(0.25, 1.1, -FRAC_PI_2), false),
            user("bob", "b", p(M2_REST), pose(0.65, 1.1, -FRAC_PI_2), false),
        ],
        bindings: vec![
            BindingSpec {
                kind: BindingKind::ManyToOne,
                objects: ids(&["m1"]),
                proxies: ids(&["pa1", "pb1"]),
                policy: RemotePolicy::Live,
            },
            BindingSpec {
                kind: BindingKind::ManyToOne,
                objects: ids(&["m2"]),
                proxies: ids(&["pa2", "pb2"]),
                policy: RemotePolicy::Live,
            },
        ],
        events,
    }
}

pub const WALL_SECTIONS: usize = 10;
pub const WALL_Y: f64 = 2.2;

pub fn wall_section_x(k: usize) -> f64 {
    0.65 + 0.3 * k as f64
}

/// A user walks along a virtual wall touching it; one floor proxy carries a
/// 60 cm physical section to wherever the hand meets the wall.
pub fn wall_push() -> ScenarioScript {
    let u = UserId::new("u");
    let touch_y = 2.0;
    let lift_y = 1.7;
    let mv = |x: f64, y: f64, speed: f64| EventKind::Move {
        user: u.clone(),
        to: pose(x, y, FRAC_PI_2),
        speed: Some(speed),
    };
    let events = vec![
        EventSpec::at(500, mv(wall_section_x(0), touch_y, 0.3)),
        EventSpec::after(500, mv(wall_section_x(4), touch_y, 0.25)),
        EventSpec::after(0, mv(wall_section_x(4), lift_y, 0.3)),
        EventSpec::after(0, mv(wall_section_x(7), lift_y, 0.5)),
        EventSpec::after(2500, mv(wall_section_x(7), touch_y, 0.3)),
        EventSpec::after(0, mv(wall_section_x(9), touch_y, 0.2)),
        EventSpec::after(500, mv(wall_section_x(5), touch_y, 0.2)),
        EventSpec::after(0, mv(wall_section_x(5), lift_y, 0.3)),
    ];
    let names: Vec<String> = (0..WALL_SECTIONS).map(|k| format!("w{k}")).collect();
    ScenarioScript {
        name: ScenarioName::WallPush,
        sites: ids(&["a"]),
        parameters: Parameters {
            workspace: WorkspaceKind::Floor,
            touch_surface: Some(TouchSurface {
                y: WALL_Y,
                reach: 0.22,
                half_width: 0.3,
            }),
            ..Parameters::default()
        },
        objects: names
            .iter()
            .enumerate()
            .map(|(k, n)| ObjectSpec {
                id: ObjectId::new(n.as_str()),
                kind: VisualKind::Wall,
                pose: pose(wall_section_x(k), WALL_Y, 0.0),
            })
            .collect(),
        proxies: vec![proxy("fp", "a", ProfileKind::Floor, pose(wall_section_x(0), WALL_Y, 0.0))],
        users: vec![user(
            "u",
            "a",
            pose(wall_section_x(0), lift_y, FRAC_PI_2),
            pose(wall_section_x(0), 1.4, FRAC_PI_2),
            false,
        )],
        bindings: vec![BindingSpec {
            kind: BindingKind::OneToMany,
            objects: names.iter().map(|n| ObjectId::new(n.as_str())).collect(),
            proxies: ids(&["fp"]),
            policy: RemotePolicy::Live,
        }],
        events,
    }
}
