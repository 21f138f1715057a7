//! Membership edges and their recursive closure.
//!
//! Two closures are kept per collection: plain reachability ("direct and
//! indirect members") and enabled reachability, where a member counts only if
//! some path to it uses nothing but `permission_enabled` edges. Cycles are
//! allowed; closure is reachability, so a collection on a cycle is a member of
//! itself.
//!
//! Mutations recompute the closure of every collection that could have been
//! affected: the edited collection and everything that already reaches it.

use std::collections::{BTreeSet, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::world::EntityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Membership {
    pub collection: EntityId,
    pub member: EntityId,
    pub enabled: bool,
}

#[derive(Debug, Clone, Default)]
pub struct MembershipGraph {
    edges: FxHashMap<EntityId, FxHashMap<EntityId, bool>>,
    reach: FxHashMap<EntityId, FxHashSet<EntityId>>,
    enabled_reach: FxHashMap<EntityId, FxHashSet<EntityId>>,
    containers: FxHashMap<EntityId, FxHashSet<EntityId>>,
    enabled_containers: FxHashMap<EntityId, FxHashSet<EntityId>>,
}

static EMPTY: std::sync::OnceLock<FxHashSet<EntityId>> = std::sync::OnceLock::new();

fn empty() -> &'static FxHashSet<EntityId> {
    EMPTY.get_or_init(FxHashSet::default)
}

impl MembershipGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn edge(&self, collection: EntityId, member: EntityId) -> Option<bool> {
        self.edges.get(&collection)?.get(&member).copied()
    }

    /// Inserts a direct edge. Returns false if it already existed.
    pub fn insert(&mut self, collection: EntityId, member: EntityId, enabled: bool) -> bool {
        let direct = self.edges.entry(collection).or_default();
        if direct.contains_key(&member) {
            return false;
        }
        direct.insert(member, enabled);
        self.refresh_from(collection);
        true
    }

    /// Removes a direct edge, returning its flag if it existed.
    pub fn remove(&mut self, collection: EntityId, member: EntityId) -> Option<bool> {
        let enabled = self.edges.get_mut(&collection)?.remove(&member)?;
        self.refresh_from(collection);
        Some(enabled)
    }

    /// Updates the flag of an existing edge, returning the previous value.
    pub fn set_enabled(&mut self, collection: EntityId, member: EntityId, enabled: bool) -> Option<bool> {
        let slot = self.edges.get_mut(&collection)?.get_mut(&member)?;
        let old = std::mem::replace(slot, enabled);
        if old != enabled {
            self.refresh_from(collection);
        }
        Some(old)
    }

    /// Drops every edge touching `node`.
    pub fn remove_node(&mut self, node: EntityId) {
        let mut affected: BTreeSet<EntityId> = self.containers_of(node).iter().copied().collect();
        affected.insert(node);
        self.edges.remove(&node);
        for direct in self.edges.values_mut() {
            direct.remove(&node);
        }
        for c in affected {
            self.recompute(c);
        }
        self.reach.remove(&node);
        self.enabled_reach.remove(&node);
        self.containers.remove(&node);
        self.enabled_containers.remove(&node);
    }

    fn refresh_from(&mut self, collection: EntityId) {
        let mut affected: BTreeSet<EntityId> = self.containers_of(collection).iter().copied().collect();
        affected.insert(collection);
        for c in affected {
            self.recompute(c);
        }
    }

    fn recompute(&mut self, collection: EntityId) {
        let plain = self.bfs(collection, false);
        let enabled = self.bfs(collection, true);
        update_reverse(&mut self.containers, collection, self.reach.get(&collection), &plain);
        update_reverse(
            &mut self.enabled_containers,
            collection,
            self.enabled_reach.get(&collection),
            &enabled,
        );
        self.reach.insert(collection, plain);
        self.enabled_reach.insert(collection, enabled);
    }

    fn bfs(&self, start: EntityId, enabled_only: bool) -> FxHashSet<EntityId> {
        let mut seen = FxHashSet::default();
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let Some(direct) = self.edges.get(&c) else { continue };
            for (&m, &on) in direct {
                if enabled_only && !on {
                    continue;
                }
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Every entity reachable from `collection` through one or more edges.
    pub fn recursive_members(&self, collection: EntityId) -> &FxHashSet<EntityId> {
        self.reach.get(&collection).unwrap_or_else(|| empty())
    }

    /// Members reachable through a path of enabled edges only.
    pub fn enabled_recursive_members(&self, collection: EntityId) -> &FxHashSet<EntityId> {
        self.enabled_reach.get(&collection).unwrap_or_else(|| empty())
    }

    /// Collections that have `member` among their recursive members.
    pub fn containers_of(&self, member: EntityId) -> &FxHashSet<EntityId> {
        self.containers.get(&member).unwrap_or_else(|| empty())
    }

    /// Collections whose enabled closure contains `member`.
    pub fn enabled_containers_of(&self, member: EntityId) -> &FxHashSet<EntityId> {
        self.enabled_containers.get(&member).unwrap_or_else(|| empty())
    }

    pub fn direct_members(&self, collection: EntityId) -> impl Iterator<Item = (EntityId, bool)> + '_ {
        self.edges
            .get(&collection)
            .into_iter()
            .flat_map(|d| d.iter().map(|(&m, &e)| (m, e)))
    }

    /// All direct edges in (collection, member) order.
    pub fn memberships(&self) -> Vec<Membership> {
        let mut out: Vec<Membership> = self
            .edges
            .iter()
            .flat_map(|(&collection, d)| {
                d.iter().map(move |(&member, &enabled)| Membership {
                    collection,
                    member,
                    enabled,
                })
            })
            .collect();
        out.sort();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(|d| d.len()).sum()
    }
}

fn update_reverse(
    reverse: &mut FxHashMap<EntityId, FxHashSet<EntityId>>,
    collection: EntityId,
    old: Option<&FxHashSet<EntityId>>,
    new: &FxHashSet<EntityId>,
) {
    if let Some(old) = old {
        for m in old.difference(new) {
            if let Some(set) = reverse.get_mut(m) {
                set.remove(&collection);
                if set.is_empty() {
                    reverse.remove(m);
                }
            }
        }
    }
    for &m in new {
        if old.is_none_or(|o| !o.contains(&m)) {
            reverse.entry(m).or_default().insert(collection);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(n: u32) -> EntityId {
        EntityId(n)
    }

    fn set(ids: &[u32]) -> FxHashSet<EntityId> {
        ids.iter().map(|&n| id(n)).collect()
    }

    #[test]
    fn two_hop_chain() {
        let mut g = MembershipGraph::new();
        g.insert(id(0), id(1), true);
        g.insert(id(1), id(2), true);
        assert_eq!(g.recursive_members(id(0)), &set(&[1, 2]));
        assert!(g.recursive_members(id(5)).is_empty());
        assert_eq!(g.containers_of(id(2)), &set(&[0, 1]));
    }

    #[test]
    fn cycles_terminate() {
        let mut g = MembershipGraph::new();
        g.insert(id(0), id(1), true);
        g.insert(id(1), id(0), true);
        g.insert(id(1), id(2), true);
        assert_eq!(g.recursive_members(id(0)), &set(&[0, 1, 2]));
    }

    #[test]
    fn disabled_link_cuts_enabled_closure() {
        let mut g = MembershipGraph::new();
        g.insert(id(0), id(1), true);
        g.insert(id(1), id(2), false);
        assert_eq!(g.enabled_recursive_members(id(0)), &set(&[1]));
        assert_eq!(g.recursive_members(id(0)), &set(&[1, 2]));

        // A second, all-enabled path brings 2 back.
        g.insert(id(0), id(2), true);
        assert_eq!(g.enabled_recursive_members(id(0)), &set(&[1, 2]));

        g.remove(id(0), id(2));
        g.set_enabled(id(1), id(2), true);
        assert_eq!(g.enabled_recursive_members(id(0)), &set(&[1, 2]));
        assert_eq!(g.enabled_containers_of(id(2)), &set(&[0, 1]));
    }

    #[test]
    fn remove_node_cascades() {
        let mut g = MembershipGraph::new();
        g.insert(id(0), id(1), true);
        g.insert(id(1), id(2), true);
        g.remove_node(id(1));
        assert!(g.recursive_members(id(0)).is_empty());
        assert!(g.containers_of(id(2)).is_empty());
        assert_eq!(g.edge_count(), 0);
    }

    fn brute(edges: &[(u32, u32, bool)], from: u32, enabled_only: bool) -> FxHashSet<EntityId> {
        // Depth-first path enumeration with a visited set.
        fn walk(edges: &[(u32, u32, bool)], at: u32, enabled_only: bool, seen: &mut FxHashSet<EntityId>) {
            for &(c, m, e) in edges {
                if c == at && (e || !enabled_only) && seen.insert(EntityId(m)) {
                    walk(edges, m, enabled_only, seen);
                }
            }
        }
        let mut seen = FxHashSet::default();
        walk(edges, from, enabled_only, &mut seen);
        seen
    }

    proptest! {
        #[test]
        fn closure_matches_brute_force_under_edits(
            ops in proptest::collection::vec((0u32..10, 0u32..10, any::<bool>(), 0u8..4), 0..60)
        ) {
            let mut g = MembershipGraph::new();
            let mut edges: Vec<(u32, u32, bool)> = Vec::new();
            for (c, m, e, op) in ops {
                if c == m { continue; }
                let before_plain = g.recursive_members(id(c)).clone();
                let before_enabled = g.enabled_recursive_members(id(c)).clone();
                match op {
                    0 | 1 => {
                        if g.insert(id(c), id(m), e) {
                            edges.push((c, m, e));
                            prop_assert!(before_plain.is_subset(g.recursive_members(id(c))));
                            prop_assert!(before_enabled.is_subset(g.enabled_recursive_members(id(c))));
                        }
                    }
                    2 => {
                        if g.remove(id(c), id(m)).is_some() {
                            edges.retain(|&(a, b, _)| (a, b) != (c, m));
                            prop_assert!(g.recursive_members(id(c)).is_subset(&before_plain));
                            prop_assert!(g.enabled_recursive_members(id(c)).is_subset(&before_enabled));
                        }
                    }
                    _ => {
                        if g.set_enabled(id(c), id(m), e).is_some() {
                            for edge in edges.iter_mut() {
                                if (edge.0, edge.1) == (c, m) { edge.2 = e; }
                            }
                        }
                    }
                }
                for n in 0..10 {
                    prop_assert_eq!(g.recursive_members(id(n)), &brute(&edges, n, false));
                    prop_assert_eq!(g.enabled_recursive_members(id(n)), &brute(&edges, n, true));
                    prop_assert!(g.enabled_recursive_members(id(n)).is_subset(g.recursive_members(id(n))));
                    for &m in g.recursive_members(id(n)) {
                        prop_assert!(g.containers_of(m).contains(&id(n)));
                    }
                    for &m in g.enabled_recursive_members(id(n)) {
                        prop_assert!(g.enabled_containers_of(m).contains(&id(n)));
                    }
                }
                let reverse_total: usize = (0..10).map(|n| g.containers_of(id(n)).len()).sum();
                let forward_total: usize = (0..10).map(|n| g.recursive_members(id(n)).len()).sum();
                prop_assert_eq!(reverse_total, forward_total);
            }
        }
    }
}
