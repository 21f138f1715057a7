//! Allow/deny decisions.
//!
//! An agent has an ability when the best (lowest-numbered) relevant allow
//! beats the best relevant deny, with denies winning ties. With no relevant
//! permission at all the answer is no. A net grant of the global
//! `do_anything` ability short-circuits item checks entirely.

use std::fmt;

use crate::error::{Error, Result};
use crate::registry::DO_ANYTHING;
use crate::store::{Grant, Level, Sign, SubjectView};
use crate::world::{EntityId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    ClosedWorld,
    GlobalOverride,
    LevelComparison,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::ClosedWorld => "closed_world",
            Reason::GlobalOverride => "global_override",
            Reason::LevelComparison => "level_comparison",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub allowed: bool,
    pub reason: Reason,
    pub winning_level: Option<Level>,
    /// Relevant permissions in precedence order.
    pub candidates: Vec<Grant>,
}

impl Decision {
    fn closed_world() -> Self {
        Decision {
            allowed: false,
            reason: Reason::ClosedWorld,
            winning_level: None,
            candidates: Vec::new(),
        }
    }

    fn global_override(candidates: Vec<Grant>) -> Self {
        Decision {
            allowed: true,
            reason: Reason::GlobalOverride,
            winning_level: None,
            candidates,
        }
    }

    /// Applies the precedence rule to an already sorted candidate list.
    fn from_candidates(candidates: Vec<Grant>) -> Self {
        let (allow, deny) = min_levels(candidates.iter().map(|g| (g.level(), g.sign())));
        match verdict(allow, deny) {
            None => Decision::closed_world(),
            Some((allowed, level)) => Decision {
                allowed,
                reason: Reason::LevelComparison,
                winning_level: Some(level),
                candidates,
            },
        }
    }

    /// The candidates that carried the verdict: those at the winning level
    /// with the winning sign.
    pub fn deciding(&self) -> impl Iterator<Item = &Grant> {
        let sign = if self.allowed { Sign::Allow } else { Sign::Deny };
        let level = self.winning_level;
        self.candidates
            .iter()
            .filter(move |g| Some(g.level()) == level && g.sign() == sign)
    }
}

fn min_levels(grants: impl Iterator<Item = (Level, Sign)>) -> (Option<Level>, Option<Level>) {
    let mut allow: Option<Level> = None;
    let mut deny: Option<Level> = None;
    for (level, sign) in grants {
        let slot = match sign {
            Sign::Allow => &mut allow,
            Sign::Deny => &mut deny,
        };
        if slot.is_none_or(|l| level < l) {
            *slot = Some(level);
        }
    }
    (allow, deny)
}

/// `None` when nothing is relevant; otherwise (allowed, deciding level).
/// Allowed iff the best allow is strictly better than the best deny.
fn verdict(allow: Option<Level>, deny: Option<Level>) -> Option<(bool, Level)> {
    match (allow, deny) {
        (None, None) => None,
        (Some(a), None) => Some((true, a)),
        (None, Some(d)) => Some((false, d)),
        (Some(a), Some(d)) if a < d => Some((true, a)),
        (Some(_), Some(d)) => Some((false, d)),
    }
}

/// An agent denied something the anonymous agent may do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopholeReport {
    pub agent: EntityId,
    pub item: EntityId,
    pub ability: String,
    pub agent_decision: Decision,
    pub anonymous_decision: Decision,
    pub flagged: bool,
}

impl World {
    pub fn resolve_global_ability(&self, agent: EntityId, ability: &str) -> Result<Decision> {
        self.agent(agent)?;
        if !self.registry().is_global_ability(ability) {
            return Err(Error::UnknownAbility(ability.to_string()));
        }
        Ok(self.global_decision(agent, ability))
    }

    fn global_decision(&self, agent: EntityId, ability: &str) -> Decision {
        let candidates: Vec<Grant> = self
            .relevant_global_permissions(agent, ability)
            .unwrap_or_default()
            .into_iter()
            .map(|(p, _)| Grant::Global(p))
            .collect();
        Decision::from_candidates(candidates)
    }

    fn item_candidates(&self, agent: EntityId, item: EntityId, ability: &str) -> Vec<Grant> {
        self.store()
            .relevant_item_permissions(self.graph(), agent, item, ability)
            .into_iter()
            .map(|(p, _)| Grant::Item(p))
            .collect()
    }

    pub fn resolve_item_ability(&self, agent: EntityId, item: EntityId, ability: &str) -> Result<Decision> {
        self.agent(agent)?;
        self.check_item_ability(item, ability)?;
        let global = self.global_decision(agent, DO_ANYTHING);
        if global.allowed {
            return Ok(Decision::global_override(global.candidates));
        }
        Ok(Decision::from_candidates(self.item_candidates(agent, item, ability)))
    }

    /// Same verdict as [`World::resolve_item_ability`], but when the global
    /// override applies the trace lists the item-level permissions it
    /// overrode.
    pub fn explain(&self, agent: EntityId, item: EntityId, ability: &str) -> Result<Decision> {
        let decision = self.resolve_item_ability(agent, item, ability)?;
        if decision.reason == Reason::GlobalOverride {
            return Ok(Decision::global_override(self.item_candidates(agent, item, ability)));
        }
        Ok(decision)
    }

    /// Every entity the agent holds `ability` on, in creation order.
    /// Entities whose type lacks the ability are skipped.
    pub fn filter_items(&self, agent: EntityId, ability: &str) -> Result<Vec<EntityId>> {
        self.agent(agent)?;
        let registry = self.registry();
        if !registry.is_known_item_ability(ability) {
            return Err(Error::UnknownAbility(ability.to_string()));
        }
        let applies: Vec<bool> = registry.types().map(|t| t.has_item_ability(ability)).collect();
        let candidates = self.entities().filter(|e| applies[e.type_id.0 as usize]);

        if self.global_decision(agent, DO_ANYTHING).allowed {
            return Ok(candidates.map(|e| e.id).collect());
        }
        let view = SubjectView::new(self.graph(), agent);
        Ok(candidates
            .filter(|e| {
                let mut allow: Option<Level> = None;
                let mut deny: Option<Level> = None;
                self.store()
                    .visit_relevant_item(self.graph(), &view, e.id, ability, |_, s, o, sign| {
                        let level = Level::item(s.scope(), o.scope());
                        let slot = match sign {
                            Sign::Allow => &mut allow,
                            Sign::Deny => &mut deny,
                        };
                        if slot.is_none_or(|l| level < l) {
                            *slot = Some(level);
                        }
                    });
                matches!(verdict(allow, deny), Some((true, _)))
            })
            .map(|e| e.id)
            .collect())
    }

    pub fn lint_anonymous(&self, agent: EntityId, item: EntityId, ability: &str) -> Result<LoopholeReport> {
        let anonymous = self.anonymous().ok_or(Error::AnonymousDisabled)?;
        let agent_decision = self.resolve_item_ability(agent, item, ability)?;
        let anonymous_decision = self.resolve_item_ability(anonymous, item, ability)?;
        Ok(LoopholeReport {
            agent,
            item,
            ability: ability.to_string(),
            flagged: !agent_decision.allowed && anonymous_decision.allowed,
            agent_decision,
            anonymous_decision,
        })
    }

    /// Lints every (agent, item, ability) triple where the ability occurs in
    /// some stored permission, returning the flagged ones.
    pub fn lint_all(&self) -> Result<Vec<LoopholeReport>> {
        let anonymous = self.anonymous().ok_or(Error::AnonymousDisabled)?;
        let mut abilities: Vec<String> = self.store().permissions().into_iter().map(|p| p.ability).collect();
        abilities.sort();
        abilities.dedup();
        let mut out = Vec::new();
        for agent in self.agents().filter(|a| a.id != anonymous) {
            for item in self.entities() {
                let ty = self.registry().by_id(item.type_id);
                for ability in abilities.iter().filter(|a| ty.has_item_ability(a)) {
                    let report = self.lint_anonymous(agent.id, item.id, ability)?;
                    if report.flagged {
                        out.push(report);
                    }
                }
            }
        }
        Ok(out)
    }
}
