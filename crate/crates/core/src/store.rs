//! Signed permission relation objects and relevance queries.
//!
//! An item permission relates a subject (one agent, the members of a group,
//! or every agent) to an object (one item, the members of a collection, or
//! every item) for one ability, with an allow or deny sign. Its precedence
//! level is fixed by the pair of scopes:
//!
//! ```text
//!               One item   Some items   All items
//! One agent        1           2            3
//! Some agents      4           5            6
//! All agents       7           8            9
//! ```
//!
//! Global permissions have a subject only and use levels 1..=3.
//!
//! The store keeps at most one permission per (subject, object, ability);
//! writing an existing key replaces its sign.

use std::cmp::Ordering;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::graph::MembershipGraph;
use crate::registry::DO_ANYTHING;
use crate::world::EntityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Allow,
    Deny,
}

impl Sign {
    pub fn is_allowed(self) -> bool {
        self == Sign::Allow
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Allow => "allow",
            Sign::Deny => "deny",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Breadth of one axis of a permission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    One,
    Some,
    All,
}

impl Scope {
    fn rank(self) -> u8 {
        match self {
            Scope::One => 1,
            Scope::Some => 2,
            Scope::All => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::One => "One",
            Scope::Some => "Some",
            Scope::All => "All",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubjectSpec {
    One(EntityId),
    Some(EntityId),
    All,
}

impl SubjectSpec {
    pub fn scope(&self) -> Scope {
        match self {
            SubjectSpec::One(_) => Scope::One,
            SubjectSpec::Some(_) => Scope::Some,
            SubjectSpec::All => Scope::All,
        }
    }

    pub fn entity(&self) -> Option<EntityId> {
        match *self {
            SubjectSpec::One(e) | SubjectSpec::Some(e) => Some(e),
            SubjectSpec::All => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectSpec {
    One(EntityId),
    Some(EntityId),
    All,
}

impl ObjectSpec {
    pub fn scope(&self) -> Scope {
        match self {
            ObjectSpec::One(_) => Scope::One,
            ObjectSpec::Some(_) => Scope::Some,
            ObjectSpec::All => Scope::All,
        }
    }

    pub fn entity(&self) -> Option<EntityId> {
        match *self {
            ObjectSpec::One(e) | ObjectSpec::Some(e) => Some(e),
            ObjectSpec::All => None,
        }
    }
}

/// Precedence level; lower numbers win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Level(u8);

impl Level {
    pub fn item(subject: Scope, object: Scope) -> Level {
        Level(3 * (subject.rank() - 1) + object.rank())
    }

    pub fn global(subject: Scope) -> Level {
        Level(subject.rank())
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `OneToSome`, `AllToAll`, ...
pub fn item_kind(subject: Scope, object: Scope) -> String {
    format!("{}To{}", subject.as_str(), object.as_str())
}

/// `OneGlobal`, `SomeGlobal`, `AllGlobal`.
pub fn global_kind(subject: Scope) -> String {
    format!("{}Global", subject.as_str())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permission {
    pub subject: SubjectSpec,
    pub object: ObjectSpec,
    pub ability: String,
    pub sign: Sign,
}

impl Permission {
    pub fn new(subject: SubjectSpec, object: ObjectSpec, ability: impl Into<String>, sign: Sign) -> Self {
        Permission {
            subject,
            object,
            ability: ability.into(),
            sign,
        }
    }

    pub fn level(&self) -> Level {
        Level::item(self.subject.scope(), self.object.scope())
    }

    pub fn kind(&self) -> String {
        item_kind(self.subject.scope(), self.object.scope())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalPermission {
    pub subject: SubjectSpec,
    pub ability: String,
    pub sign: Sign,
}

impl GlobalPermission {
    pub fn new(subject: SubjectSpec, ability: impl Into<String>, sign: Sign) -> Self {
        GlobalPermission {
            subject,
            ability: ability.into(),
            sign,
        }
    }

    pub fn level(&self) -> Level {
        Level::global(self.subject.scope())
    }

    pub fn kind(&self) -> String {
        global_kind(self.subject.scope())
    }
}

/// A relevant permission as seen by the resolver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Grant {
    Item(Permission),
    Global(GlobalPermission),
}

impl Grant {
    pub fn sign(&self) -> Sign {
        match self {
            Grant::Item(p) => p.sign,
            Grant::Global(p) => p.sign,
        }
    }

    pub fn level(&self) -> Level {
        match self {
            Grant::Item(p) => p.level(),
            Grant::Global(p) => p.level(),
        }
    }

    pub fn kind(&self) -> String {
        match self {
            Grant::Item(p) => p.kind(),
            Grant::Global(p) => p.kind(),
        }
    }

    pub fn ability(&self) -> &str {
        match self {
            Grant::Item(p) => &p.ability,
            Grant::Global(p) => &p.ability,
        }
    }

    fn sort_key(&self) -> (Level, bool, SubjectSpec, Option<ObjectSpec>, &str) {
        let object = match self {
            Grant::Item(p) => Some(p.object),
            Grant::Global(_) => None,
        };
        let subject = match self {
            Grant::Item(p) => p.subject,
            Grant::Global(p) => p.subject,
        };
        // Deny sorts ahead of allow at the same level.
        (self.level(), self.sign().is_allowed(), subject, object, self.ability())
    }
}

/// Orders candidates by (level, deny before allow), then by content so the
/// order never depends on insertion history.
pub fn precedence_order(a: &Grant, b: &Grant) -> Ordering {
    a.sort_key().cmp(&b.sort_key())
}

type SubjectBucket = FxHashMap<SubjectSpec, Sign>;

#[derive(Debug, Clone, Default)]
pub struct PermissionStore {
    // ability -> object -> subject -> sign
    item: FxHashMap<String, FxHashMap<ObjectSpec, SubjectBucket>>,
    // ability -> subject -> sign
    global: FxHashMap<String, SubjectBucket>,
    item_len: usize,
    global_len: usize,
}

/// The memberships that make an agent a subject: itself plus every group
/// that recursively contains it.
pub(crate) struct SubjectView<'g> {
    pub agent: EntityId,
    pub groups: &'g rustc_hash::FxHashSet<EntityId>,
}

impl<'g> SubjectView<'g> {
    pub fn new(graph: &'g MembershipGraph, agent: EntityId) -> Self {
        SubjectView {
            agent,
            groups: graph.containers_of(agent),
        }
    }

    fn matches(&self, subject: &SubjectSpec) -> bool {
        match subject {
            SubjectSpec::One(a) => *a == self.agent,
            SubjectSpec::Some(g) => self.groups.contains(g),
            SubjectSpec::All => true,
        }
    }

    /// Calls `f` for each matching entry of `bucket`.
    fn visit(&self, bucket: &SubjectBucket, mut f: impl FnMut(&SubjectSpec, Sign)) {
        if bucket.len() <= self.groups.len() + 2 {
            for (s, &sign) in bucket {
                if self.matches(s) {
                    f(s, sign);
                }
            }
        } else {
            let one = SubjectSpec::One(self.agent);
            if let Some(&sign) = bucket.get(&one) {
                f(&one, sign);
            }
            for &g in self.groups {
                let some = SubjectSpec::Some(g);
                if let Some(&sign) = bucket.get(&some) {
                    f(&some, sign);
                }
            }
            if let Some(&sign) = bucket.get(&SubjectSpec::All) {
                f(&SubjectSpec::All, sign);
            }
        }
    }
}

impl PermissionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; returns the previous sign for the same key.
    pub fn put(&mut self, permission: Permission) -> Option<Sign> {
        let prev = self
            .item
            .entry(permission.ability)
            .or_default()
            .entry(permission.object)
            .or_default()
            .insert(permission.subject, permission.sign);
        if prev.is_none() {
            self.item_len += 1;
        }
        prev
    }

    pub fn remove(&mut self, subject: SubjectSpec, object: ObjectSpec, ability: &str) -> Option<Sign> {
        let by_object = self.item.get_mut(ability)?;
        let bucket = by_object.get_mut(&object)?;
        let prev = bucket.remove(&subject)?;
        if bucket.is_empty() {
            by_object.remove(&object);
        }
        if by_object.is_empty() {
            self.item.remove(ability);
        }
        self.item_len -= 1;
        Some(prev)
    }

    pub fn get(&self, subject: SubjectSpec, object: ObjectSpec, ability: &str) -> Option<Sign> {
        self.item.get(ability)?.get(&object)?.get(&subject).copied()
    }

    pub fn put_global(&mut self, permission: GlobalPermission) -> Option<Sign> {
        let prev = self
            .global
            .entry(permission.ability)
            .or_default()
            .insert(permission.subject, permission.sign);
        if prev.is_none() {
            self.global_len += 1;
        }
        prev
    }

    pub fn remove_global(&mut self, subject: SubjectSpec, ability: &str) -> Option<Sign> {
        let bucket = self.global.get_mut(ability)?;
        let prev = bucket.remove(&subject)?;
        if bucket.is_empty() {
            self.global.remove(ability);
        }
        self.global_len -= 1;
        Some(prev)
    }

    pub fn get_global(&self, subject: SubjectSpec, ability: &str) -> Option<Sign> {
        self.global.get(ability)?.get(&subject).copied()
    }

    pub fn len(&self) -> usize {
        self.item_len
    }

    pub fn is_empty(&self) -> bool {
        self.item_len == 0 && self.global_len == 0
    }

    pub fn global_len(&self) -> usize {
        self.global_len
    }

    /// Every item permission, in a stable order.
    pub fn permissions(&self) -> Vec<Permission> {
        let mut out: Vec<Permission> = self
            .item
            .iter()
            .flat_map(|(ability, by_object)| {
                by_object.iter().flat_map(move |(object, bucket)| {
                    bucket
                        .iter()
                        .map(move |(subject, &sign)| Permission::new(*subject, *object, ability.clone(), sign))
                })
            })
            .collect();
        out.sort_by(|a, b| (a.subject, a.object, &a.ability).cmp(&(b.subject, b.object, &b.ability)));
        out
    }

    pub fn global_permissions(&self) -> Vec<GlobalPermission> {
        let mut out: Vec<GlobalPermission> = self
            .global
            .iter()
            .flat_map(|(ability, bucket)| {
                bucket
                    .iter()
                    .map(move |(subject, &sign)| GlobalPermission::new(*subject, ability.clone(), sign))
            })
            .collect();
        out.sort_by(|a, b| (a.subject, &a.ability).cmp(&(b.subject, &b.ability)));
        out
    }

    /// Drops every permission whose subject or object names `entity`.
    pub fn remove_referencing(&mut self, entity: EntityId) -> usize {
        let refers = |s: &SubjectSpec| s.entity() == Some(entity);
        let mut removed = 0;
        self.item.retain(|_, by_object| {
            by_object.retain(|object, bucket| {
                if object.entity() == Some(entity) {
                    removed += bucket.len();
                    return false;
                }
                let before = bucket.len();
                bucket.retain(|s, _| !refers(s));
                removed += before - bucket.len();
                !bucket.is_empty()
            });
            !by_object.is_empty()
        });
        self.item_len -= removed;
        let mut removed_global = 0;
        self.global.retain(|_, bucket| {
            let before = bucket.len();
            bucket.retain(|s, _| !refers(s));
            removed_global += before - bucket.len();
            !bucket.is_empty()
        });
        self.global_len -= removed_global;
        removed + removed_global
    }

    /// Visits every stored permission relevant to (agent, item, ability):
    /// ability is `ability` or `do_anything`; the subject covers the agent
    /// through plain recursive membership; the object covers the item
    /// through enabled recursive membership.
    pub(crate) fn visit_relevant_item(
        &self,
        graph: &MembershipGraph,
        subject: &SubjectView<'_>,
        item: EntityId,
        ability: &str,
        mut f: impl FnMut(&str, &SubjectSpec, &ObjectSpec, Sign),
    ) {
        let mut visit_ability = |name: &str| {
            let Some(by_object) = self.item.get(name) else { return };
            let mut visit_object = |object: ObjectSpec| {
                if let Some(bucket) = by_object.get(&object) {
                    subject.visit(bucket, |s, sign| f(name, s, &object, sign));
                }
            };
            visit_object(ObjectSpec::One(item));
            for &c in graph.enabled_containers_of(item) {
                visit_object(ObjectSpec::Some(c));
            }
            visit_object(ObjectSpec::All);
        };
        visit_ability(ability);
        if ability != DO_ANYTHING {
            visit_ability(DO_ANYTHING);
        }
    }

    pub(crate) fn visit_relevant_global(
        &self,
        subject: &SubjectView<'_>,
        ability: &str,
        mut f: impl FnMut(&str, &SubjectSpec, Sign),
    ) {
        let mut visit_ability = |name: &str| {
            if let Some(bucket) = self.global.get(name) {
                subject.visit(bucket, |s, sign| f(name, s, sign));
            }
        };
        visit_ability(ability);
        if ability != DO_ANYTHING {
            visit_ability(DO_ANYTHING);
        }
    }

    /// Relevant item permissions, sorted by precedence.
    pub fn relevant_item_permissions(
        &self,
        graph: &MembershipGraph,
        agent: EntityId,
        item: EntityId,
        ability: &str,
    ) -> Vec<(Permission, Level)> {
        let view = SubjectView::new(graph, agent);
        let mut out = Vec::new();
        self.visit_relevant_item(graph, &view, item, ability, |name, s, o, sign| {
            out.push(Grant::Item(Permission::new(*s, *o, name, sign)));
        });
        out.sort_by(precedence_order);
        out.into_iter()
            .map(|g| match g {
                Grant::Item(p) => {
                    let level = p.level();
                    (p, level)
                }
                Grant::Global(_) => unreachable!(),
            })
            .collect()
    }

    /// Relevant global permissions, sorted by precedence.
    pub fn relevant_global_permissions(
        &self,
        graph: &MembershipGraph,
        agent: EntityId,
        ability: &str,
    ) -> Vec<(GlobalPermission, Level)> {
        let view = SubjectView::new(graph, agent);
        let mut out = Vec::new();
        self.visit_relevant_global(&view, ability, |name, s, sign| {
            out.push(Grant::Global(GlobalPermission::new(*s, name, sign)));
        });
        out.sort_by(precedence_order);
        out.into_iter()
            .map(|g| match g {
                Grant::Global(p) => {
                    let level = p.level();
                    (p, level)
                }
                Grant::Item(_) => unreachable!(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: u32) -> EntityId {
        EntityId(n)
    }

    #[test]
    fn level_grid_is_row_major_bijection() {
        let scopes = [Scope::One, Scope::Some, Scope::All];
        let mut seen = Vec::new();
        for s in scopes {
            for o in scopes {
                seen.push(Level::item(s, o).get());
            }
        }
        assert_eq!(seen, (1..=9).collect::<Vec<u8>>());
        assert_eq!(Level::item(Scope::Some, Scope::All).get(), 6);
        assert_eq!(item_kind(Scope::One, Scope::Some), "OneToSome");
        assert_eq!(Level::global(Scope::All).get(), 3);
    }

    #[test]
    fn replace_semantics() {
        let mut store = PermissionStore::new();
        let key = (SubjectSpec::One(e(1)), ObjectSpec::One(e(2)));
        assert_eq!(
            store.put(Permission::new(key.0, key.1, "edit TextDocument.body", Sign::Allow)),
            None
        );
        assert_eq!(
            store.put(Permission::new(key.0, key.1, "edit TextDocument.body", Sign::Deny)),
            Some(Sign::Allow)
        );
        assert_eq!(store.len(), 1);
        assert_eq!(store.get(key.0, key.1, "edit TextDocument.body"), Some(Sign::Deny));
        // Same key, same sign: idempotent.
        store.put(Permission::new(key.0, key.1, "edit TextDocument.body", Sign::Deny));
        assert_eq!(store.len(), 1);
        assert_eq!(store.remove(key.0, key.1, "edit TextDocument.body"), Some(Sign::Deny));
        assert!(store.is_empty());
    }

    #[test]
    fn relevance_respects_enabled_edges() {
        let mut graph = MembershipGraph::new();
        let (agent, item, coll) = (e(1), e(2), e(3));
        graph.insert(coll, item, false);
        let mut store = PermissionStore::new();
        store.put(Permission::new(
            SubjectSpec::One(agent),
            ObjectSpec::Some(coll),
            "view Item.name",
            Sign::Allow,
        ));
        assert!(store
            .relevant_item_permissions(&graph, agent, item, "view Item.name")
            .is_empty());
        graph.set_enabled(coll, item, true);
        let hits = store.relevant_item_permissions(&graph, agent, item, "view Item.name");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].1.get(), 2);
    }

    #[test]
    fn subject_groups_ignore_enabled_flag() {
        let mut graph = MembershipGraph::new();
        let (agent, item, group) = (e(1), e(2), e(3));
        graph.insert(group, agent, false);
        let mut store = PermissionStore::new();
        store.put(Permission::new(
            SubjectSpec::Some(group),
            ObjectSpec::One(item),
            DO_ANYTHING,
            Sign::Deny,
        ));
        let hits = store.relevant_item_permissions(&graph, agent, item, "view Item.name");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].1.get(), 4);
        assert_eq!(hits[0].0.ability, DO_ANYTHING);
    }

    #[test]
    fn empty_store_has_no_hits() {
        let graph = MembershipGraph::new();
        let store = PermissionStore::new();
        assert!(store
            .relevant_item_permissions(&graph, e(0), e(1), "view Item.name")
            .is_empty());
        assert!(store
            .relevant_global_permissions(&graph, e(0), "create Person")
            .is_empty());
    }

    #[test]
    fn global_relevance_levels() {
        let graph = MembershipGraph::new();
        let mut store = PermissionStore::new();
        store.put_global(GlobalPermission::new(SubjectSpec::All, "create Person", Sign::Allow));
        let hits = store.relevant_global_permissions(&graph, e(0), "create Person");
        assert_eq!(hits.iter().map(|h| h.1.get()).collect::<Vec<_>>(), vec![3]);
        store.put_global(GlobalPermission::new(
            SubjectSpec::One(e(0)),
            "create Person",
            Sign::Deny,
        ));
        let hits = store.relevant_global_permissions(&graph, e(0), "create Person");
        assert_eq!(hits.iter().map(|h| h.1.get()).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn cascade_removes_references() {
        let mut store = PermissionStore::new();
        store.put(Permission::new(
            SubjectSpec::One(e(1)),
            ObjectSpec::All,
            "view Item.name",
            Sign::Allow,
        ));
        store.put(Permission::new(
            SubjectSpec::All,
            ObjectSpec::Some(e(1)),
            "view Item.name",
            Sign::Allow,
        ));
        store.put(Permission::new(
            SubjectSpec::All,
            ObjectSpec::One(e(2)),
            "view Item.name",
            Sign::Allow,
        ));
        store.put_global(GlobalPermission::new(SubjectSpec::One(e(1)), DO_ANYTHING, Sign::Allow));
        assert_eq!(store.remove_referencing(e(1)), 3);
        assert_eq!(store.len(), 1);
        assert_eq!(store.global_len(), 0);
    }
}
