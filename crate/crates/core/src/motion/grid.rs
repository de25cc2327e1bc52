//! Coarse 8-connected grid search, the last resort when no single detour works.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::planner::{point_clear, segment_clear};
use super::Obstacle;
use crate::model::{Vec2, Workspace};

const CELLS_PER_SIDE: usize = 80;

pub(crate) fn search(
    start: Vec2,
    goal: Vec2,
    radius: f64,
    others: &[Obstacle],
    workspace: &Workspace,
) -> Option<Vec<Vec2>> {
    if !point_clear(goal, radius, others) {
        return None;
    }
    let cell = workspace.width.max(workspace.depth) / CELLS_PER_SIDE as f64;
    let cols = (workspace.width / cell).ceil().max(1.0) as usize;
    let rows = (workspace.depth / cell).ceil().max(1.0) as usize;
    let center = |c: usize, r: usize| {
        Vec2::new(
            ((c as f64 + 0.5) * cell).min(workspace.width),
            ((r as f64 + 0.5) * cell).min(workspace.depth),
        )
    };
    let to_cell = |p: Vec2| {
        (
            ((p.x / cell) as usize).min(cols - 1),
            ((p.y / cell) as usize).min(rows - 1),
        )
    };
    let idx = |c: usize, r: usize| r * cols + c;

    let free: Vec<bool> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (c, r)))
        .map(|(c, r)| point_clear(center(c, r), radius, others))
        .collect();

    let (sc, sr) = to_cell(start);
    let (gc, gr) = to_cell(goal);
    let start_i = idx(sc, sr);
    let goal_i = idx(gc, gr);

    // A* with integer costs (10 straight, 14 diagonal) for a deterministic order.
    let h = |c: usize, r: usize| {
        let dx = c.abs_diff(gc) as u64;
        let dy = r.abs_diff(gr) as u64;
        10 * dx.max(dy) + 4 * dx.min(dy)
    };
    let mut dist = vec![u64::MAX; cols * rows];
    let mut came = vec![usize::MAX; cols * rows];
    let mut open = BinaryHeap::new();
    dist[start_i] = 0;
    open.push(Reverse((h(sc, sr), start_i)));
    while let Some(Reverse((_, i))) = open.pop() {
        if i == goal_i {
            break;
        }
        let (c, r) = (i % cols, i / cols);
        for (dc, dr, cost) in [
            (-1i64, 0i64, 10u64),
            (1, 0, 10),
            (0, -1, 10),
            (0, 1, 10),
            (-1, -1, 14),
            (1, -1, 14),
            (-1, 1, 14),
            (1, 1, 14),
        ] {
            let nc = c as i64 + dc;
            let nr = r as i64 + dr;
            if nc < 0 || nr < 0 || nc >= cols as i64 || nr >= rows as i64 {
                continue;
            }
            let (nc, nr) = (nc as usize, nr as usize);
            let j = idx(nc, nr);
            if !free[j] && j != goal_i {
                continue;
            }
            let nd = dist[i] + cost;
            if nd < dist[j] {
                dist[j] = nd;
                came[j] = i;
                open.push(Reverse((nd + h(nc, nr), j)));
            }
        }
    }
    if dist[goal_i] == u64::MAX {
        return None;
    }

    let mut cells = vec![goal_i];
    let mut cur = goal_i;
    while cur != start_i {
        cur = came[cur];
        cells.push(cur);
    }
    cells.reverse();
    let mut raw: Vec<Vec2> = vec![start];
    raw.extend(
        cells[1..cells.len().saturating_sub(1)]
            .iter()
            .map(|&i| center(i % cols, i / cols)),
    );
    raw.push(goal);

    // Greedy line-of-sight shortcutting.
    let mut route = Vec::new();
    let mut anchor = 0;
    while anchor < raw.len() - 1 {
        let mut next = anchor + 1;
        for k in (anchor + 1..raw.len()).rev() {
            if segment_clear(raw[anchor], raw[k], radius, others) {
                next = k;
                break;
            }
        }
        if !segment_clear(raw[anchor], raw[next], radius, others) {
            return None;
        }
        route.push(raw[next]);
        anchor = next;
    }
    Some(route)
}
