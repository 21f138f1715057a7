//! A deliberately naive second implementation of the decision rule.
//!
//! The oracle works from a flat [`Snapshot`] of a world: raw membership edges
//! and raw permission rows. It keeps no closure tables; membership questions
//! are answered by walking edges with a visited set each time. Verdicts use
//! the rule in its existential form: an agent has an ability if some relevant
//! allow sits at a level where no relevant deny is at the same or a lower
//! number. Nothing here calls into the resolver, the store indexes or the
//! membership graph.

use std::collections::BTreeSet;

use crate::world::World;

const DO_ANYTHING: &str = "do_anything";

/// Table of precedence numbers, rows = subject breadth, columns = object
/// breadth (single, collection members, everyone).
const PRECEDENCE: [[u8; 3]; 3] = [[1, 2, 3], [4, 5, 6], [7, 8, 9]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Single(u32),
    Members(u32),
    Everyone,
}

impl Target {
    fn column(self) -> usize {
        match self {
            Target::Single(_) => 0,
            Target::Members(_) => 1,
            Target::Everyone => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Row {
    pub subject: Target,
    /// `None` for global permissions.
    pub object: Option<Target>,
    pub ability: String,
    pub is_allowed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub entities: Vec<u32>,
    pub edges: Vec<(u32, u32, bool)>,
    pub item_rows: Vec<Row>,
    pub global_rows: Vec<Row>,
}

impl Snapshot {
    pub fn of(world: &World) -> Snapshot {
        use crate::store::{ObjectSpec, SubjectSpec};
        let subject = |s: SubjectSpec| match s {
            SubjectSpec::One(a) => Target::Single(a.0),
            SubjectSpec::Some(c) => Target::Members(c.0),
            SubjectSpec::All => Target::Everyone,
        };
        let object = |o: ObjectSpec| match o {
            ObjectSpec::One(i) => Target::Single(i.0),
            ObjectSpec::Some(c) => Target::Members(c.0),
            ObjectSpec::All => Target::Everyone,
        };
        let mut item_rows: Vec<Row> = world
            .store()
            .permissions()
            .into_iter()
            .map(|p| Row {
                subject: subject(p.subject),
                object: Some(object(p.object)),
                ability: p.ability,
                is_allowed: p.sign.is_allowed(),
            })
            .collect();
        item_rows.sort();
        let mut global_rows: Vec<Row> = world
            .store()
            .global_permissions()
            .into_iter()
            .map(|p| Row {
                subject: subject(p.subject),
                object: None,
                ability: p.ability,
                is_allowed: p.sign.is_allowed(),
            })
            .collect();
        global_rows.sort();
        let mut edges: Vec<(u32, u32, bool)> = world
            .graph()
            .memberships()
            .into_iter()
            .map(|m| (m.collection.0, m.member.0, m.enabled))
            .collect();
        edges.sort();
        Snapshot {
            entities: world.entities().map(|e| e.id.0).collect(),
            edges,
            item_rows,
            global_rows,
        }
    }

    /// Is there a path of one or more edges from `from` to `to`, optionally
    /// using enabled edges only?
    pub fn path_exists(&self, from: u32, to: u32, enabled_only: bool) -> bool {
        let mut visited = BTreeSet::new();
        self.walk(from, to, enabled_only, &mut visited)
    }

    fn walk(&self, at: u32, to: u32, enabled_only: bool, visited: &mut BTreeSet<u32>) -> bool {
        for &(c, m, enabled) in &self.edges {
            if c != at || (enabled_only && !enabled) {
                continue;
            }
            if m == to {
                return true;
            }
            if visited.insert(m) && self.walk(m, to, enabled_only, visited) {
                return true;
            }
        }
        false
    }

    /// Every entity reachable from `collection`, by path enumeration.
    pub fn members(&self, collection: u32, enabled_only: bool) -> BTreeSet<u32> {
        self.entities
            .iter()
            .copied()
            .filter(|&x| self.path_exists(collection, x, enabled_only))
            .collect()
    }

    fn subject_covers(&self, subject: Target, agent: u32) -> bool {
        match subject {
            Target::Single(a) => a == agent,
            Target::Members(g) => self.path_exists(g, agent, false),
            Target::Everyone => true,
        }
    }

    fn object_covers(&self, object: Target, item: u32) -> bool {
        match object {
            Target::Single(i) => i == item,
            Target::Members(c) => self.path_exists(c, item, true),
            Target::Everyone => true,
        }
    }
}

fn row_level(row: &Row) -> u8 {
    let r = row.subject.column();
    match row.object {
        Some(o) => PRECEDENCE[r][o.column()],
        None => PRECEDENCE[0][r],
    }
}

/// (a) some relevant allow at level L, and (b) no relevant deny at any level
/// numbered L or lower.
fn literal_rule(relevant: &[(&Row, u8)]) -> bool {
    relevant.iter().any(|&(row, level)| {
        row.is_allowed
            && !relevant
                .iter()
                .any(|&(other, other_level)| !other.is_allowed && other_level <= level)
    })
}

pub fn oracle_global(snap: &Snapshot, agent: u32, ability: &str) -> bool {
    let relevant: Vec<(&Row, u8)> = snap
        .global_rows
        .iter()
        .filter(|r| r.ability == ability || r.ability == DO_ANYTHING)
        .filter(|r| snap.subject_covers(r.subject, agent))
        .map(|r| (r, row_level(r)))
        .collect();
    literal_rule(&relevant)
}

/// The literal decision for an item ability. Assumes the ability applies to
/// the item's type.
pub fn oracle_resolve(snap: &Snapshot, agent: u32, item: u32, ability: &str) -> bool {
    // Holding global do_anything overrides every item-level answer.
    if oracle_global(snap, agent, DO_ANYTHING) {
        return true;
    }
    let relevant: Vec<(&Row, u8)> = snap
        .item_rows
        .iter()
        .filter(|r| r.ability == ability || r.ability == DO_ANYTHING)
        .filter(|r| snap.subject_covers(r.subject, agent))
        .filter(|r| r.object.is_some_and(|o| snap.object_covers(o, item)))
        .map(|r| (r, row_level(r)))
        .collect();
    literal_rule(&relevant)
}

/// One disagreement between the resolver and the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub agent: String,
    pub item: Option<String>,
    pub ability: String,
    pub resolver: bool,
    pub oracle: bool,
}

/// Compares resolver and oracle on every (agent, item, ability) triple
/// where the ability applies, for the given item abilities, and on every
/// agent for the given global abilities. Returns the number of triples
/// checked and any divergences.
pub fn compare_all(world: &World, item_abilities: &[&str], global_abilities: &[&str]) -> (usize, Vec<Divergence>) {
    let snap = Snapshot::of(world);
    let mut checked = 0;
    let mut divergences = Vec::new();
    for agent in world.agents() {
        for item in world.entities() {
            let ty = world.registry().by_id(item.type_id);
            for &ability in item_abilities.iter().filter(|a| ty.has_item_ability(a)) {
                let resolver = world
                    .resolve_item_ability(agent.id, item.id, ability)
                    .expect("valid triple")
                    .allowed;
                let oracle = oracle_resolve(&snap, agent.id.0, item.id.0, ability);
                checked += 1;
                if resolver != oracle {
                    divergences.push(Divergence {
                        agent: agent.name.clone(),
                        item: Some(item.name.clone()),
                        ability: ability.to_string(),
                        resolver,
                        oracle,
                    });
                }
            }
        }
        for &ability in global_abilities {
            let resolver = world
                .resolve_global_ability(agent.id, ability)
                .expect("valid global ability")
                .allowed;
            let oracle = oracle_global(&snap, agent.id.0, ability);
            checked += 1;
            if resolver != oracle {
                divergences.push(Divergence {
                    agent: agent.name.clone(),
                    item: None,
                    ability: ability.to_string(),
                    resolver,
                    oracle,
                });
            }
        }
    }
    (checked, divergences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(subject: Target, object: Option<Target>, ability: &str, is_allowed: bool) -> Row {
        Row {
            subject,
            object,
            ability: ability.into(),
            is_allowed,
        }
    }

    #[test]
    fn empty_world_is_closed() {
        let snap = Snapshot {
            entities: vec![0, 1],
            edges: vec![],
            item_rows: vec![],
            global_rows: vec![],
        };
        assert!(!oracle_resolve(&snap, 0, 1, "view Item.name"));
        assert!(!oracle_global(&snap, 0, "create Person"));
    }

    #[test]
    fn literal_rule_examples() {
        // Group 10 contains agent 0, collection 11 contains item 1.
        let mut snap = Snapshot {
            entities: vec![0, 1, 10, 11],
            edges: vec![(10, 0, false), (11, 1, true)],
            item_rows: vec![
                row(Target::Single(0), Some(Target::Members(11)), "read", false),
                row(Target::Members(10), Some(Target::Members(11)), "read", true),
            ],
            global_rows: vec![],
        };
        // 2(-) defeats 5(+).
        assert!(!oracle_resolve(&snap, 0, 1, "read"));
        snap.item_rows[0].is_allowed = true;
        snap.item_rows[1].is_allowed = false;
        // 2(+) defeats 5(-).
        assert!(oracle_resolve(&snap, 0, 1, "read"));
        // A disabled object-side edge cuts propagation.
        snap.edges[1].2 = false;
        assert!(!oracle_resolve(&snap, 0, 1, "read"));
        // Global do_anything overrides.
        snap.global_rows.push(row(Target::Everyone, None, DO_ANYTHING, true));
        assert!(oracle_resolve(&snap, 0, 1, "read"));
        assert!(oracle_global(&snap, 0, "create Person"));
    }

    #[test]
    fn cyclic_paths_terminate() {
        let snap = Snapshot {
            entities: vec![0, 1, 2],
            edges: vec![(0, 1, true), (1, 0, true), (1, 2, false)],
            item_rows: vec![],
            global_rows: vec![],
        };
        assert_eq!(snap.members(0, false), BTreeSet::from([0, 1, 2]));
        assert_eq!(snap.members(0, true), BTreeSet::from([0, 1]));
        assert!(snap.members(2, false).is_empty());
    }
}
