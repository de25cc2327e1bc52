//! Binding table between virtual objects and robot proxies.
//!
//! Three cardinalities are supported: one-to-one (a proxy stands in for one
//! object), one-to-many (a small pool of proxies serves many objects at a site,
//! dispatched to whichever object the user is about to touch) and many-to-one
//! (one shared object with a proxy at each participating site).

mod authority;
mod dispatch;
mod focus;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{BindingId, ObjectId, ProxyId, RobotProxy, SiteId};

pub use authority::{arbitrate, GraspDecision};
pub use dispatch::{select_nearest, Dispatch};
pub use focus::{hand_focus, FocusTracker, FOCUS_HYSTERESIS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingKind {
    OneToOne,
    OneToMany,
    ManyToOne,
}

/// Which side drives the other's pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Authority {
    /// The virtual object mirrors the proxy (telekinesis).
    Proxy,
    /// The proxy is retargeted to the virtual object (held or reassigned).
    Virtual,
}

/// How proxies at non-authoritative sites of a many-to-one binding behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemotePolicy {
    /// Continuously retarget to the live shared pose.
    #[default]
    Live,
    /// Move to the predicted set-down pose of the held object.
    SetDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingBinding {
    pub id: BindingId,
    pub kind: BindingKind,
    pub virtual_ids: BTreeSet<ObjectId>,
    /// Pool members with their site tags.
    pub proxy_ids: BTreeMap<ProxyId, SiteId>,
    /// Proxy currently fulfilling the binding, per site.
    pub active_proxy: BTreeMap<SiteId, ProxyId>,
    /// Object the active proxy serves, per site (one-to-many only).
    pub active_target: BTreeMap<SiteId, ObjectId>,
    pub authority: Authority,
    pub policy: RemotePolicy,
}

impl MappingBinding {
    pub fn proxies_at<'a>(&'a self, site: &'a SiteId) -> impl Iterator<Item = &'a ProxyId> + 'a {
        self.proxy_ids
            .iter()
            .filter(move |(_, s)| *s == site)
            .map(|(p, _)| p)
    }

    /// The object a given pool member should currently be collocated with.
    pub fn object_for(&self, proxy: &ProxyId) -> Option<&ObjectId> {
        let site = self.proxy_ids.get(proxy)?;
        match self.kind {
            BindingKind::OneToOne | BindingKind::ManyToOne => self.virtual_ids.iter().next(),
            BindingKind::OneToMany => {
                if self.active_proxy.get(site) == Some(proxy) {
                    self.active_target.get(site)
                } else {
                    None
                }
            }
        }
    }

    /// The proxy at `site` that represents `object`, if any.
    pub fn proxy_for(&self, object: &ObjectId, site: &SiteId) -> Option<&ProxyId> {
        if !self.virtual_ids.contains(object) {
            return None;
        }
        match self.kind {
            BindingKind::OneToOne | BindingKind::ManyToOne => self
                .proxy_ids
                .iter()
                .find(|(_, s)| *s == site)
                .map(|(p, _)| p),
            BindingKind::OneToMany => {
                if self.active_target.get(site) == Some(object) {
                    self.active_proxy.get(site)
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("object {0} is already bound")]
    ObjectBound(ObjectId),
    #[error("proxy {0} is already bound")]
    ProxyBound(ProxyId),
    #[error("binding needs {0}")]
    Cardinality(&'static str),
    #[error("many-to-one proxies must sit at distinct sites ({0} repeats)")]
    DuplicateSite(SiteId),
    #[error("unknown binding {0}")]
    UnknownBinding(BindingId),
    #[error("binding {0} is not one-to-many")]
    NotOneToMany(BindingId),
    #[error("no idle proxy at site {site} for binding {binding}")]
    Unserviceable { binding: BindingId, site: SiteId },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BindingTable {
    bindings: BTreeMap<BindingId, MappingBinding>,
    next_id: u64,
}

impl BindingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &BindingId) -> Option<&MappingBinding> {
        self.bindings.get(id)
    }

    pub fn get_mut(&mut self, id: &BindingId) -> Option<&mut MappingBinding> {
        self.bindings.get_mut(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MappingBinding> {
        self.bindings.values()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn of_object(&self, object: &ObjectId) -> Option<&MappingBinding> {
        self.bindings
            .values()
            .find(|b| b.virtual_ids.contains(object))
    }

    pub fn of_proxy(&self, proxy: &ProxyId) -> Option<&MappingBinding> {
        self.bindings
            .values()
            .find(|b| b.proxy_ids.contains_key(proxy))
    }

    fn check_unbound<'a>(
        &self,
        objects: impl IntoIterator<Item = &'a ObjectId>,
        proxies: impl IntoIterator<Item = &'a ProxyId>,
    ) -> Result<(), MappingError> {
        for o in objects {
            if self.of_object(o).is_some() {
                return Err(MappingError::ObjectBound(o.clone()));
            }
        }
        for p in proxies {
            if self.of_proxy(p).is_some() {
                return Err(MappingError::ProxyBound(p.clone()));
            }
        }
        Ok(())
    }

    fn insert(&mut self, mut binding: MappingBinding) -> BindingId {
        self.next_id += 1;
        let id = BindingId::new(format!("b{}", self.next_id));
        binding.id = id.clone();
        self.bindings.insert(id.clone(), binding);
        id
    }

    /// Binds one object to one proxy; the proxy is the pose authority.
    pub fn bind_one_to_one(
        &mut self,
        object: &ObjectId,
        proxy: &RobotProxy,
    ) -> Result<BindingId, MappingError> {
        self.check_unbound([object], [&proxy.id])?;
        let binding = MappingBinding {
            id: BindingId::new(""),
            kind: BindingKind::OneToOne,
            virtual_ids: BTreeSet::from([object.clone()]),
            proxy_ids: BTreeMap::from([(proxy.id.clone(), proxy.site.clone())]),
            active_proxy: BTreeMap::from([(proxy.site.clone(), proxy.id.clone())]),
            active_target: BTreeMap::new(),
            authority: Authority::Proxy,
            policy: RemotePolicy::Live,
        };
        Ok(self.insert(binding))
    }

    /// Binds a set of objects to a pool of proxies; proxies are dispatched on demand.
    pub fn bind_one_to_many(
        &mut self,
        objects: &[ObjectId],
        pool: &[&RobotProxy],
    ) -> Result<BindingId, MappingError> {
        if objects.is_empty() || pool.is_empty() {
            return Err(MappingError::Cardinality("at least one object and one proxy"));
        }
        self.check_unbound(objects, pool.iter().map(|p| &p.id))?;
        let binding = MappingBinding {
            id: BindingId::new(""),
            kind: BindingKind::OneToMany,
            virtual_ids: objects.iter().cloned().collect(),
            proxy_ids: pool
                .iter()
                .map(|p| (p.id.clone(), p.site.clone()))
                .collect(),
            active_proxy: BTreeMap::new(),
            active_target: BTreeMap::new(),
            authority: Authority::Virtual,
            policy: RemotePolicy::Live,
        };
        Ok(self.insert(binding))
    }

    /// Binds one shared object to one proxy at each of at least two sites.
    pub fn bind_many_to_one(
        &mut self,
        object: &ObjectId,
        proxies: &[&RobotProxy],
        policy: RemotePolicy,
    ) -> Result<BindingId, MappingError> {
        if proxies.len() < 2 {
            return Err(MappingError::Cardinality("at least two proxies"));
        }
        let mut sites = BTreeSet::new();
        for p in proxies {
            if !sites.insert(p.site.clone()) {
                return Err(MappingError::DuplicateSite(p.site.clone()));
            }
        }
        self.check_unbound([object], proxies.iter().map(|p| &p.id))?;
        let binding = MappingBinding {
            id: BindingId::new(""),
            kind: BindingKind::ManyToOne,
            virtual_ids: BTreeSet::from([object.clone()]),
            proxy_ids: proxies
                .iter()
                .map(|p| (p.id.clone(), p.site.clone()))
                .collect(),
            active_proxy: proxies
                .iter()
                .map(|p| (p.site.clone(), p.id.clone()))
                .collect(),
            active_target: BTreeMap::new(),
            authority: Authority::Virtual,
            policy,
        };
        Ok(self.insert(binding))
    }

    /// Every proxy appears as active in at most one binding.
    pub fn pool_exclusive(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.bindings
            .values()
            .flat_map(|b| b.active_proxy.values())
            .all(|p| seen.insert(p.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pose2D;
    use crate::motion::KinematicProfile;

    fn proxy(id: &str, site: &str) -> RobotProxy {
        RobotProxy::new(id, site, KinematicProfile::tabletop(), Pose2D::at(0.1, 0.1))
    }

    #[test]
    fn one_to_one_exclusive() {
        let mut t = BindingTable::new();
        let p1 = proxy("p1", "a");
        let mug = ObjectId::new("mug");
        t.bind_one_to_one(&mug, &p1).unwrap();
        assert_eq!(
            t.bind_one_to_one(&ObjectId::new("other"), &p1),
            Err(MappingError::ProxyBound(p1.id.clone()))
        );
        assert_eq!(
            t.bind_one_to_one(&mug, &proxy("p2", "a")),
            Err(MappingError::ObjectBound(mug.clone()))
        );
        let b = t.of_object(&mug).unwrap();
        assert_eq!(b.kind, BindingKind::OneToOne);
        assert_eq!(b.virtual_ids.len(), 1);
        assert_eq!(b.proxy_ids.len(), 1);
        assert!(t.pool_exclusive());
    }

    #[test]
    fn many_to_one_requires_distinct_sites() {
        let mut t = BindingTable::new();
        let mug = ObjectId::new("mug");
        let (a, b, a2) = (proxy("pa", "a"), proxy("pb", "b"), proxy("pa2", "a"));
        assert!(matches!(
            t.bind_many_to_one(&mug, &[&a], RemotePolicy::Live),
            Err(MappingError::Cardinality(_))
        ));
        assert_eq!(
            t.bind_many_to_one(&mug, &[&a, &a2], RemotePolicy::Live),
            Err(MappingError::DuplicateSite(SiteId::new("a")))
        );
        let id = t.bind_many_to_one(&mug, &[&a, &b], RemotePolicy::Live).unwrap();
        let binding = t.get(&id).unwrap();
        assert_eq!(binding.proxy_for(&mug, &SiteId::new("b")), Some(&b.id));
        assert_eq!(binding.object_for(&a.id), Some(&mug));
    }

    #[test]
    fn one_to_many_pool_members_unique_across_bindings() {
        let mut t = BindingTable::new();
        let (p1, p2) = (proxy("p1", "a"), proxy("p2", "a"));
        let objs: Vec<ObjectId> = ["b1", "b2", "b3"].into_iter().map(ObjectId::new).collect();
        t.bind_one_to_many(&objs, &[&p1, &p2]).unwrap();
        assert_eq!(
            t.bind_one_to_many(&[ObjectId::new("b4")], &[&p2]),
            Err(MappingError::ProxyBound(p2.id.clone()))
        );
    }
}
