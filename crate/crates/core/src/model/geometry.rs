use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Signed shortest rotation taking `from` onto `to`, in `(-π, π]`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// Planar pose: position in meters, heading in radians normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPose")]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Deserialize)]
struct RawPose {
    x: f64,
    y: f64,
    #[serde(default)]
    heading: f64,
}

impl From<RawPose> for Pose2D {
    fn from(raw: RawPose) -> Self {
        Pose2D::new(raw.x, raw.y, raw.heading)
    }
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Self::new(x, y, 0.0)
    }

    pub fn with_heading(self, heading: f64) -> Self {
        Self::new(self.x, self.y, heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }

    pub fn distance(&self, other: &Pose2D) -> f64 {
        distance(self, other)
    }

    /// Absolute heading error to `other`, in `[0, π]`.
    pub fn heading_error(&self, other: &Pose2D) -> f64 {
        angle_diff(other.heading, self.heading).abs()
    }

    pub fn vec(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn from_vec(v: Vec2, heading: f64) -> Self {
        Self::new(v.x, v.y, heading)
    }
}

/// Euclidean distance over the `(x, y)` components.
pub fn distance(a: &Pose2D, b: &Pose2D) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 1e-12).then(|| Vec2::new(self.x / n, self.y / n))
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Shortest distance from `p` to the segment `a..b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= 1e-18 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab.scale(t))).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&Pose2D::at(0.0, 0.0), &Pose2D::at(0.0, 0.0)), 0.0);
        assert_eq!(distance(&Pose2D::at(0.0, 0.0), &Pose2D::at(3.0, 4.0)), 5.0);
        let d = distance(&Pose2D::at(0.15, 0.15), &Pose2D::at(0.75, 0.75));
        assert!((d - 0.848528).abs() < 1e-6);
    }

    #[test]
    fn pi_maps_to_pi_and_minus_pi_wraps() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn deserialized_heading_is_normalized() {
        let p: Pose2D = serde_json::from_str(r#"{"x":1.0,"y":2.0,"heading":7.0}"#).unwrap();
        assert!((p.heading - (7.0 - 2.0 * PI)).abs() < 1e-12);
        let q: Pose2D = serde_json::from_str(r#"{"x":1.0,"y":2.0}"#).unwrap();
        assert_eq!(q.heading, 0.0);
    }

    proptest! {
        #[test]
        fn normalized_heading_in_half_open_range(a in -1.0e4f64..1.0e4) {
            let n = normalize_angle(a);
            prop_assert!(n > -PI && n <= PI);
            // Same direction as the input.
            prop_assert!((n.cos() - a.cos()).abs() < 1e-6);
            prop_assert!((n.sin() - a.sin()).abs() < 1e-6);
        }

        #[test]
        fn angle_diff_rotates_from_onto_to(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let d = angle_diff(a, b);
            prop_assert!(d.abs() <= PI + 1e-12);
            prop_assert!(angle_diff(a, b + d).abs() < 1e-9);
        }
    }
}
