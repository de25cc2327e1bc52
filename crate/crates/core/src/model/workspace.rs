use serde::{Deserialize, Serialize};

use super::{distance, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkspaceKind {
    Tabletop,
    Floor,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkspaceError {
    #[error("workspace dimensions must be positive (got {width} x {depth})")]
    NonPositive { width: f64, depth: f64 },
    #[error("anchor {index} at ({x:.3}, {y:.3}) lies outside the workspace")]
    AnchorOutside { index: usize, x: f64, y: f64 },
}

/// A rectangular surface `[0, width] x [0, depth]` with named snap anchors.
///
/// Anchors are numbered from 1 in row-major order; row 0 is the far edge
/// (small `y`), so on the default table tile 2 is the far-row center and tile 8
/// the near-row center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub kind: WorkspaceKind,
    pub width: f64,
    pub depth: f64,
    pub anchor_points: Vec<Pose2D>,
}

impl Workspace {
    pub fn new(
        kind: WorkspaceKind,
        width: f64,
        depth: f64,
        anchor_points: Vec<Pose2D>,
    ) -> Result<Self, WorkspaceError> {
        let ws = Self {
            kind,
            width,
            depth,
            anchor_points,
        };
        ws.validate()?;
        Ok(ws)
    }

    /// Grid of `cols x rows` cell centers.
    pub fn grid(
        kind: WorkspaceKind,
        width: f64,
        depth: f64,
        cols: usize,
        rows: usize,
    ) -> Result<Self, WorkspaceError> {
        let mut anchors = Vec::with_capacity(cols * rows);
        for row in 0..rows {
            for col in 0..cols {
                let x = width * (2 * col + 1) as f64 / (2 * cols) as f64;
                let y = depth * (2 * row + 1) as f64 / (2 * rows) as f64;
                anchors.push(Pose2D::at(x, y));
            }
        }
        Self::new(kind, width, depth, anchors)
    }

    /// 0.9 m x 0.9 m desk with a 3x3 tile grid.
    pub fn tabletop_default() -> Self {
        Self::grid(WorkspaceKind::Tabletop, 0.9, 0.9, 3, 3).expect("default tabletop is valid")
    }

    /// 4 m x 4 m floor area without anchors.
    pub fn floor_default() -> Self {
        Self::new(WorkspaceKind::Floor, 4.0, 4.0, Vec::new()).expect("default floor is valid")
    }

    pub fn validate(&self) -> Result<(), WorkspaceError> {
        if !(self.width > 0.0 && self.depth > 0.0) {
            return Err(WorkspaceError::NonPositive {
                width: self.width,
                depth: self.depth,
            });
        }
        for (i, a) in self.anchor_points.iter().enumerate() {
            if !self.contains(a) {
                return Err(WorkspaceError::AnchorOutside {
                    index: i + 1,
                    x: a.x,
                    y: a.y,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Pose2D) -> bool {
        p.x.is_finite()
            && p.y.is_finite()
            && (0.0..=self.width).contains(&p.x)
            && (0.0..=self.depth).contains(&p.y)
    }

    pub fn clamp(&self, p: Pose2D) -> Pose2D {
        Pose2D::new(
            p.x.clamp(0.0, self.width),
            p.y.clamp(0.0, self.depth),
            p.heading,
        )
    }

    /// Anchor by 1-based number.
    pub fn anchor(&self, number: usize) -> Option<Pose2D> {
        number
            .checked_sub(1)
            .and_then(|i| self.anchor_points.get(i))
            .copied()
    }

    /// Nearest anchor (1-based number and pose); ties go to the lower number.
    pub fn nearest_anchor(&self, p: &Pose2D) -> Option<(usize, Pose2D)> {
        let mut best: Option<(usize, Pose2D, f64)> = None;
        for (i, a) in self.anchor_points.iter().enumerate() {
            let d = distance(a, p);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((i + 1, *a, d));
            }
        }
        best.map(|(n, a, _)| (n, a))
    }

    /// Uniformly rescaled copy (used by table-size sweeps).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            kind: self.kind,
            width: self.width * factor,
            depth: self.depth * factor,
            anchor_points: self
                .anchor_points
                .iter()
                .map(|a| Pose2D::new(a.x * factor, a.y * factor, a.heading))
                .collect(),
        }
    }
}
