use std::collections::BTreeMap;

use super::{BindingKind, BindingTable, MappingError};
use crate::model::{distance, BindingId, ObjectId, Pose2D, ProxyId, ProxyState, RobotProxy, SiteId};

/// Outcome of a one-to-many dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub selected: ProxyId,
    /// Previously active proxy released back to idle, when it changed.
    pub released: Option<ProxyId>,
}

/// Nearest proxy to `focus`; equidistant candidates resolve to the smallest id.
pub fn select_nearest<'a>(
    candidates: impl IntoIterator<Item = &'a RobotProxy>,
    focus: &Pose2D,
) -> Option<ProxyId> {
    let mut best: Option<(&ProxyId, f64)> = None;
    for p in candidates {
        let d = distance(&p.pose, focus);
        let better = match best {
            None => true,
            Some((id, bd)) => d < bd || (d == bd && p.id < *id),
        };
        if better {
            best = Some((&p.id, d));
        }
    }
    best.map(|(id, _)| id.clone())
}

impl BindingTable {
    /// Picks the proxy of a one-to-many pool at `site` nearest to `focus`.
    ///
    /// Candidates are the site's idle pool members plus the currently active
    /// proxy (a carried proxy is never a candidate). The winner becomes the
    /// active proxy for `target`; a different previously active proxy is
    /// released. The caller issues the retarget task.
    pub fn dispatch_nearest(
        &mut self,
        binding: &BindingId,
        focus: &Pose2D,
        target: &ObjectId,
        site: &SiteId,
        proxies: &BTreeMap<ProxyId, RobotProxy>,
    ) -> Result<Dispatch, MappingError> {
        let b = self
            .bindings
            .get_mut(binding)
            .ok_or_else(|| MappingError::UnknownBinding(binding.clone()))?;
        if b.kind != BindingKind::OneToMany {
            return Err(MappingError::NotOneToMany(binding.clone()));
        }
        let current = b.active_proxy.get(site).cloned();
        let candidates = b
            .proxy_ids
            .iter()
            .filter(|(_, s)| *s == site)
            .filter_map(|(id, _)| proxies.get(id))
            .filter(|p| p.carrying.is_none())
            .filter(|p| p.state == ProxyState::Idle || current.as_ref() == Some(&p.id));
        let selected =
            select_nearest(candidates, focus).ok_or_else(|| MappingError::Unserviceable {
                binding: binding.clone(),
                site: site.clone(),
            })?;
        let released = current.filter(|c| *c != selected);
        b.active_proxy.insert(site.clone(), selected.clone());
        b.active_target.insert(site.clone(), target.clone());
        Ok(Dispatch { selected, released })
    }
}
