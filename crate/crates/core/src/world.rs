//! The world: typed entities, memberships and the permission store, plus the
//! guarded mutations that keep permission changes in the hands of agents who
//! control the affected items.
//!
//! Mutations take an [`Actor`]. [`Actor::System`] bypasses every guard; an
//! agent actor is checked through the resolver before anything changes.

use std::collections::BTreeSet;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{Membership, MembershipGraph};
use crate::registry::{
    create_ability, TypeDef, TypeId, TypeRegistry, ADD_SELF, AGENT_TYPE, COLLECTION_TYPE, DELETE, DO_ANYTHING,
    MODIFY_MEMBERSHIP, REMOVE_SELF,
};
use crate::store::{GlobalPermission, Level, ObjectSpec, Permission, PermissionStore, Sign, SubjectSpec};

/// Reserved name of the logged-out agent.
pub const ANONYMOUS: &str = "anonymous";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub(crate) u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub name: String,
    pub type_id: TypeId,
    pub creator: Option<EntityId>,
    pub is_agent: bool,
    pub is_collection: bool,
}

/// Who is performing a mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    System,
    Agent(EntityId),
}

/// Request to create an entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewEntity {
    pub name: String,
    pub type_name: String,
    /// Recorded creator for system-created entities. Ignored when an agent
    /// actor creates the entity: the actor is the creator.
    pub creator: Option<EntityId>,
    pub default_permission: bool,
}

impl NewEntity {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        NewEntity {
            name: name.into(),
            type_name: type_name.into(),
            creator: None,
            default_permission: true,
        }
    }

    pub fn creator(mut self, creator: EntityId) -> Self {
        self.creator = Some(creator);
        self
    }

    pub fn no_default_permission(mut self) -> Self {
        self.default_permission = false;
        self
    }
}

#[derive(Debug, Clone)]
pub struct World {
    registry: TypeRegistry,
    entities: Vec<Option<Entity>>,
    names: FxHashMap<String, EntityId>,
    graph: MembershipGraph,
    store: PermissionStore,
    anonymous: Option<EntityId>,
    agent_type: TypeId,
    collection_type: TypeId,
}

impl Default for World {
    fn default() -> Self {
        Self::new()
    }
}

impl World {
    /// An empty world over the built-in type spine.
    pub fn new() -> Self {
        Self::with_registry(TypeRegistry::bootstrap()).expect("bootstrap registry defines Agent and Collection")
    }

    /// The registry must define `Agent` and `Collection`.
    pub fn with_registry(registry: TypeRegistry) -> Result<Self> {
        let agent_type = registry.id_of(AGENT_TYPE)?;
        let collection_type = registry.id_of(COLLECTION_TYPE)?;
        Ok(World {
            registry,
            entities: Vec::new(),
            names: FxHashMap::default(),
            graph: MembershipGraph::new(),
            store: PermissionStore::new(),
            anonymous: None,
            agent_type,
            collection_type,
        })
    }

    pub fn registry(&self) -> &TypeRegistry {
        &self.registry
    }

    pub fn graph(&self) -> &MembershipGraph {
        &self.graph
    }

    pub fn store(&self) -> &PermissionStore {
        &self.store
    }

    /// Adding a type never changes the effective abilities of existing
    /// types, so this is allowed at any point.
    pub fn define_type(&mut self, def: TypeDef) -> Result<TypeId> {
        self.registry.define_type(def)
    }

    /// Creates the reserved anonymous agent if it does not exist yet.
    pub fn enable_anonymous(&mut self) -> Result<EntityId> {
        if let Some(id) = self.anonymous {
            return Ok(id);
        }
        let id = self.create_entity(
            NewEntity::new(ANONYMOUS, AGENT_TYPE).no_default_permission(),
            Actor::System,
        )?;
        self.anonymous = Some(id);
        Ok(id)
    }

    pub fn anonymous(&self) -> Option<EntityId> {
        self.anonymous
    }

    pub fn entity(&self, id: EntityId) -> Result<&Entity> {
        self.entities
            .get(id.index())
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    pub fn lookup(&self, name: &str) -> Result<EntityId> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEntity(name.to_string()))
    }

    pub fn name_of(&self, id: EntityId) -> &str {
        self.entities
            .get(id.index())
            .and_then(Option::as_ref)
            .map_or("<deleted>", |e| e.name.as_str())
    }

    pub fn type_name_of(&self, id: EntityId) -> Result<&str> {
        Ok(self.registry.by_id(self.entity(id)?.type_id).name())
    }

    /// Live entities in creation order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().flatten()
    }

    pub fn entity_count(&self) -> usize {
        self.names.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = &Entity> {
        self.entities().filter(|e| e.is_agent)
    }

    pub fn collections(&self) -> impl Iterator<Item = &Entity> {
        self.entities().filter(|e| e.is_collection)
    }

    pub(crate) fn agent(&self, id: EntityId) -> Result<&Entity> {
        let e = self.entity(id)?;
        if !e.is_agent {
            return Err(Error::NotAnAgent(e.name.clone()));
        }
        Ok(e)
    }

    pub(crate) fn collection(&self, id: EntityId) -> Result<&Entity> {
        let e = self.entity(id)?;
        if !e.is_collection {
            return Err(Error::NotACollection(e.name.clone()));
        }
        Ok(e)
    }

    fn actor_name(&self, actor: Actor) -> String {
        match actor {
            Actor::System => "system".to_string(),
            Actor::Agent(a) => self.name_of(a).to_string(),
        }
    }

    fn deny(&self, actor: Actor, action: String) -> Error {
        Error::Unauthorized {
            actor: self.actor_name(actor),
            action,
        }
    }

    fn has_item_ability(&self, agent: EntityId, item: EntityId, ability: &str) -> Result<bool> {
        Ok(self.resolve_item_ability(agent, item, ability)?.allowed)
    }

    fn has_global_ability(&self, agent: EntityId, ability: &str) -> Result<bool> {
        Ok(self.resolve_global_ability(agent, ability)?.allowed)
    }

    /// Creates an entity. An agent actor needs the global `create <Type>`
    /// ability and becomes the creator; unless suppressed, the creator gets a
    /// OneToOne `do_anything` allow on the new entity.
    pub fn create_entity(&mut self, new: NewEntity, actor: Actor) -> Result<EntityId> {
        let type_id = self.registry.id_of(&new.type_name)?;
        if self.names.contains_key(&new.name) {
            return Err(Error::DuplicateEntity(new.name));
        }
        let creator = match actor {
            Actor::System => {
                if let Some(c) = new.creator {
                    self.agent(c)?;
                }
                new.creator
            }
            Actor::Agent(a) => {
                self.agent(a)?;
                let ability = create_ability(&new.type_name);
                if !self.has_global_ability(a, &ability)? {
                    return Err(self.deny(actor, ability));
                }
                Some(a)
            }
        };

        let id = EntityId(self.entities.len() as u32);
        let entity = Entity {
            id,
            name: new.name.clone(),
            type_id,
            creator,
            is_agent: self.registry.is_subtype(type_id, self.agent_type),
            is_collection: self.registry.is_subtype(type_id, self.collection_type),
        };
        self.entities.push(Some(entity));
        self.names.insert(new.name, id);

        if let (Some(c), true) = (creator, new.default_permission) {
            self.store.put(Permission::new(
                SubjectSpec::One(c),
                ObjectSpec::One(id),
                DO_ANYTHING,
                Sign::Allow,
            ));
        }
        Ok(id)
    }

    /// Deletes an entity together with every membership and permission that
    /// references it. Agent actors need `delete` on the entity.
    pub fn delete_entity(&mut self, id: EntityId, actor: Actor) -> Result<()> {
        let name = self.entity(id)?.name.clone();
        if Some(id) == self.anonymous {
            return Err(Error::AnonymousReserved);
        }
        if let Actor::Agent(a) = actor {
            if !self.has_item_ability(a, id, DELETE)? {
                return Err(self.deny(actor, format!("delete `{name}`")));
            }
        }
        self.graph.remove_node(id);
        self.store.remove_referencing(id);
        for e in self.entities.iter_mut().flatten() {
            if e.creator == Some(id) {
                e.creator = None;
            }
        }
        self.entities[id.index()] = None;
        self.names.remove(&name);
        Ok(())
    }

    /// Adds `member` to `collection`.
    ///
    /// Agent actors need `modify_membership` on the collection, or `add_self`
    /// when adding themselves. The edge is permission-enabled only when the
    /// actor can `do_anything` to the member; `enabled` overrides that, but
    /// asking for an enabled edge without that power is refused.
    pub fn add_membership(
        &mut self,
        collection: EntityId,
        member: EntityId,
        actor: Actor,
        enabled: Option<bool>,
    ) -> Result<Membership> {
        let coll_name = self.collection(collection)?.name.clone();
        let member_name = self.entity(member)?.name.clone();
        if collection == member {
            return Err(Error::SelfMembership(coll_name));
        }
        if self.graph.edge(collection, member).is_some() {
            return Err(Error::DuplicateMembership {
                collection: coll_name,
                member: member_name,
            });
        }
        let enabled = match actor {
            Actor::System => enabled.unwrap_or(true),
            Actor::Agent(a) => {
                self.agent(a)?;
                let may_modify = self.has_item_ability(a, collection, MODIFY_MEMBERSHIP)?
                    || (member == a && self.has_item_ability(a, collection, ADD_SELF)?);
                if !may_modify {
                    return Err(self.deny(actor, format!("add `{member_name}` to `{coll_name}`")));
                }
                let controls_member = self.has_item_ability(a, member, DO_ANYTHING)?;
                match enabled {
                    Some(true) if !controls_member => {
                        return Err(self.deny(
                            actor,
                            format!("enable permissions through `{coll_name}` for `{member_name}`"),
                        ))
                    }
                    Some(flag) => flag,
                    None => controls_member,
                }
            }
        };
        self.graph.insert(collection, member, enabled);
        Ok(Membership {
            collection,
            member,
            enabled,
        })
    }

    /// Removes a direct membership edge. Agent actors need
    /// `modify_membership` on the collection, or `remove_self` when removing
    /// themselves.
    pub fn remove_membership(&mut self, collection: EntityId, member: EntityId, actor: Actor) -> Result<()> {
        let coll_name = self.collection(collection)?.name.clone();
        let member_name = self.entity(member)?.name.clone();
        if self.graph.edge(collection, member).is_none() {
            return Err(Error::MissingMembership {
                collection: coll_name,
                member: member_name,
            });
        }
        if let Actor::Agent(a) = actor {
            let may_modify = self.has_item_ability(a, collection, MODIFY_MEMBERSHIP)?
                || (member == a && self.has_item_ability(a, collection, REMOVE_SELF)?);
            if !may_modify {
                return Err(self.deny(actor, format!("remove `{member_name}` from `{coll_name}`")));
            }
        }
        self.graph.remove(collection, member);
        Ok(())
    }

    /// Flips `permission_enabled` on an existing edge. Agent actors need
    /// `do_anything` on the member.
    pub fn set_permission_enabled(
        &mut self,
        collection: EntityId,
        member: EntityId,
        value: bool,
        actor: Actor,
    ) -> Result<Membership> {
        let coll_name = self.collection(collection)?.name.clone();
        let member_name = self.entity(member)?.name.clone();
        if self.graph.edge(collection, member).is_none() {
            return Err(Error::MissingMembership {
                collection: coll_name,
                member: member_name,
            });
        }
        if let Actor::Agent(a) = actor {
            if !self.has_item_ability(a, member, DO_ANYTHING)? {
                return Err(self.deny(
                    actor,
                    format!("change permission_enabled of `{member_name}` in `{coll_name}`"),
                ));
            }
        }
        self.graph.set_enabled(collection, member, value);
        Ok(Membership {
            collection,
            member,
            enabled: value,
        })
    }

    pub fn membership(&self, collection: EntityId, member: EntityId) -> Option<Membership> {
        self.graph.edge(collection, member).map(|enabled| Membership {
            collection,
            member,
            enabled,
        })
    }

    pub fn recursive_members(&self, collection: EntityId) -> Result<BTreeSet<EntityId>> {
        self.collection(collection)?;
        Ok(self.graph.recursive_members(collection).iter().copied().collect())
    }

    pub fn enabled_recursive_members(&self, collection: EntityId) -> Result<BTreeSet<EntityId>> {
        self.collection(collection)?;
        Ok(self
            .graph
            .enabled_recursive_members(collection)
            .iter()
            .copied()
            .collect())
    }

    fn check_subject(&self, subject: &SubjectSpec) -> Result<()> {
        match *subject {
            SubjectSpec::One(a) => self.agent(a).map(drop),
            SubjectSpec::Some(c) => self.collection(c).map(drop),
            SubjectSpec::All => Ok(()),
        }
    }

    fn check_object(&self, object: &ObjectSpec) -> Result<()> {
        match *object {
            ObjectSpec::One(i) => self.entity(i).map(drop),
            ObjectSpec::Some(c) => self.collection(c).map(drop),
            ObjectSpec::All => Ok(()),
        }
    }

    /// Metalevel guard: changing an [X]ToOne or [X]ToSome permission needs
    /// `do_anything` on the target; [X]ToAll needs global `do_anything`.
    fn guard_object(&self, object: &ObjectSpec, actor: Actor) -> Result<()> {
        let Actor::Agent(a) = actor else { return Ok(()) };
        self.agent(a)?;
        let ok = match *object {
            ObjectSpec::One(target) | ObjectSpec::Some(target) => self.has_item_ability(a, target, DO_ANYTHING)?,
            ObjectSpec::All => self.has_global_ability(a, DO_ANYTHING)?,
        };
        if ok {
            Ok(())
        } else {
            let target = match object.entity() {
                Some(t) => format!("`{}`", self.name_of(t)),
                None => "all items".to_string(),
            };
            Err(self.deny(actor, format!("modify permissions on {target}")))
        }
    }

    fn guard_global(&self, actor: Actor) -> Result<()> {
        let Actor::Agent(a) = actor else { return Ok(()) };
        self.agent(a)?;
        if self.has_global_ability(a, DO_ANYTHING)? {
            Ok(())
        } else {
            Err(self.deny(actor, "modify global permissions".to_string()))
        }
    }

    /// Stores an item permission, replacing any permission with the same
    /// subject, object and ability. Returns the replaced sign.
    pub fn set_permission(&mut self, permission: Permission, actor: Actor) -> Result<Option<Sign>> {
        if !self.registry.is_known_item_ability(&permission.ability) {
            return Err(Error::UnknownAbility(permission.ability));
        }
        self.check_subject(&permission.subject)?;
        self.check_object(&permission.object)?;
        self.guard_object(&permission.object, actor)?;
        Ok(self.store.put(permission))
    }

    pub fn remove_permission(
        &mut self,
        subject: SubjectSpec,
        object: ObjectSpec,
        ability: &str,
        actor: Actor,
    ) -> Result<Option<Sign>> {
        self.check_subject(&subject)?;
        self.check_object(&object)?;
        self.guard_object(&object, actor)?;
        Ok(self.store.remove(subject, object, ability))
    }

    pub fn set_global_permission(&mut self, permission: GlobalPermission, actor: Actor) -> Result<Option<Sign>> {
        if !self.registry.is_global_ability(&permission.ability) {
            return Err(Error::UnknownAbility(permission.ability));
        }
        self.check_subject(&permission.subject)?;
        self.guard_global(actor)?;
        Ok(self.store.put_global(permission))
    }

    pub fn remove_global_permission(
        &mut self,
        subject: SubjectSpec,
        ability: &str,
        actor: Actor,
    ) -> Result<Option<Sign>> {
        self.check_subject(&subject)?;
        self.guard_global(actor)?;
        Ok(self.store.remove_global(subject, ability))
    }

    /// Validates that `ability` applies to the type of `item`.
    pub(crate) fn check_item_ability(&self, item: EntityId, ability: &str) -> Result<&Entity> {
        let e = self.entity(item)?;
        let ty = self.registry.by_id(e.type_id);
        if !ty.has_item_ability(ability) {
            if !self.registry.is_known_item_ability(ability) {
                return Err(Error::UnknownAbility(ability.to_string()));
            }
            return Err(Error::AbilityNotApplicable {
                ability: ability.to_string(),
                item_type: ty.name().to_string(),
            });
        }
        Ok(e)
    }

    pub fn relevant_item_permissions(
        &self,
        agent: EntityId,
        item: EntityId,
        ability: &str,
    ) -> Result<Vec<(Permission, Level)>> {
        self.agent(agent)?;
        self.check_item_ability(item, ability)?;
        Ok(self.store.relevant_item_permissions(&self.graph, agent, item, ability))
    }

    pub fn relevant_global_permissions(
        &self,
        agent: EntityId,
        ability: &str,
    ) -> Result<Vec<(GlobalPermission, Level)>> {
        self.agent(agent)?;
        if !self.registry.is_global_ability(ability) {
            return Err(Error::UnknownAbility(ability.to_string()));
        }
        Ok(self.store.relevant_global_permissions(&self.graph, agent, ability))
    }

    /// Renders a subject in scenario syntax.
    pub fn subject_label(&self, subject: &SubjectSpec) -> String {
        match *subject {
            SubjectSpec::One(a) => format!("agent:{}", self.name_of(a)),
            SubjectSpec::Some(c) => format!("group:{}", self.name_of(c)),
            SubjectSpec::All => "all".to_string(),
        }
    }

    pub fn object_label(&self, object: &ObjectSpec) -> String {
        match *object {
            ObjectSpec::One(i) => format!("item:{}", self.name_of(i)),
            ObjectSpec::Some(c) => format!("collection:{}", self.name_of(c)),
            ObjectSpec::All => "all".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::VIEW_NAME;

    const BODY: &str = "view TextDocument.body";

    fn world() -> World {
        let mut w = World::new();
        w.enable_anonymous().unwrap();
        w
    }

    #[test]
    fn creator_gets_do_anything() {
        let mut w = world();
        let alice = w
            .create_entity(NewEntity::new("alice", "Person"), Actor::System)
            .unwrap();
        w.set_global_permission(
            GlobalPermission::new(SubjectSpec::One(alice), "create TextDocument", Sign::Allow),
            Actor::System,
        )
        .unwrap();
        let doc = w
            .create_entity(NewEntity::new("doc", "TextDocument"), Actor::Agent(alice))
            .unwrap();
        assert_eq!(w.entity(doc).unwrap().creator, Some(alice));
        assert_eq!(
            w.store()
                .get(SubjectSpec::One(alice), ObjectSpec::One(doc), DO_ANYTHING),
            Some(Sign::Allow)
        );
        assert!(w.resolve_item_ability(alice, doc, BODY).unwrap().allowed);
    }

    #[test]
    fn creation_is_closed_world() {
        let mut w = world();
        let bob = w.create_entity(NewEntity::new("bob", "Agent"), Actor::System).unwrap();
        let err = w
            .create_entity(NewEntity::new("doc", "TextDocument"), Actor::Agent(bob))
            .unwrap_err();
        assert!(err.is_authorization());
        assert!(w.lookup("doc").is_err());
        assert_eq!(
            w.create_entity(NewEntity::new("x", "Nope"), Actor::System),
            Err(Error::UnknownType("Nope".into()))
        );
        assert!(matches!(
            w.create_entity(NewEntity::new("bob", "Agent"), Actor::System),
            Err(Error::DuplicateEntity(_))
        ));
    }

    #[test]
    fn anonymous_bootstrap_has_no_permissions() {
        let w = world();
        assert!(w.anonymous().is_some());
        assert!(w.store().is_empty());
    }

    #[test]
    fn foreign_items_join_disabled() {
        let mut w = world();
        let owner = w
            .create_entity(NewEntity::new("owner", "Agent"), Actor::System)
            .unwrap();
        let attacker = w
            .create_entity(NewEntity::new("attacker", "Agent"), Actor::System)
            .unwrap();
        let secret = w
            .create_entity(NewEntity::new("secret", "TextDocument").creator(owner), Actor::System)
            .unwrap();
        let loot = w
            .create_entity(NewEntity::new("loot", "Collection").creator(attacker), Actor::System)
            .unwrap();
        let own = w
            .create_entity(NewEntity::new("mine", "TextDocument").creator(attacker), Actor::System)
            .unwrap();

        let m = w.add_membership(loot, secret, Actor::Agent(attacker), None).unwrap();
        assert!(!m.enabled);
        let m = w.add_membership(loot, own, Actor::Agent(attacker), None).unwrap();
        assert!(m.enabled);
        assert!(w.add_membership(loot, secret, Actor::Agent(attacker), None).is_err());

        // Explicitly asking for an enabled edge without power over the member.
        w.remove_membership(loot, secret, Actor::Agent(attacker)).unwrap();
        let err = w
            .add_membership(loot, secret, Actor::Agent(attacker), Some(true))
            .unwrap_err();
        assert!(err.is_authorization());
        w.add_membership(loot, secret, Actor::Agent(attacker), None).unwrap();

        // The collection owner cannot flip the flag; the member owner can.
        let err = w
            .set_permission_enabled(loot, secret, true, Actor::Agent(attacker))
            .unwrap_err();
        assert!(err.is_authorization());
        w.set_permission_enabled(loot, secret, true, Actor::Agent(owner))
            .unwrap();
        assert!(w.membership(loot, secret).unwrap().enabled);
        // Idempotent.
        w.set_permission_enabled(loot, secret, true, Actor::Agent(owner))
            .unwrap();
        assert!(w.enabled_recursive_members(loot).unwrap().contains(&secret));
    }

    #[test]
    fn add_self_to_open_collection() {
        let mut w = world();
        let club = w.create_entity(NewEntity::new("club", "Group"), Actor::System).unwrap();
        let carol = w
            .create_entity(NewEntity::new("carol", "Person"), Actor::System)
            .unwrap();
        let dave = w
            .create_entity(NewEntity::new("dave", "Person"), Actor::System)
            .unwrap();
        w.set_permission(
            Permission::new(SubjectSpec::All, ObjectSpec::One(club), ADD_SELF, Sign::Allow),
            Actor::System,
        )
        .unwrap();
        w.add_membership(club, carol, Actor::Agent(carol), None).unwrap();
        assert!(w.recursive_members(club).unwrap().contains(&carol));
        // add_self does not cover adding someone else.
        assert!(w
            .add_membership(club, dave, Actor::Agent(carol), None)
            .unwrap_err()
            .is_authorization());
        // remove_self was never granted.
        assert!(w
            .remove_membership(club, carol, Actor::Agent(carol))
            .unwrap_err()
            .is_authorization());
    }

    #[test]
    fn membership_validation() {
        let mut w = world();
        let c = w
            .create_entity(NewEntity::new("c", "Collection"), Actor::System)
            .unwrap();
        let d = w
            .create_entity(NewEntity::new("d", "TextDocument"), Actor::System)
            .unwrap();
        assert_eq!(
            w.add_membership(c, c, Actor::System, None),
            Err(Error::SelfMembership("c".into()))
        );
        assert_eq!(
            w.add_membership(d, c, Actor::System, None),
            Err(Error::NotACollection("d".into()))
        );
        w.add_membership(c, d, Actor::System, None).unwrap();
        assert!(matches!(
            w.add_membership(c, d, Actor::System, None),
            Err(Error::DuplicateMembership { .. })
        ));
        assert!(matches!(
            w.set_permission_enabled(c, w.anonymous().unwrap(), true, Actor::System),
            Err(Error::MissingMembership { .. })
        ));
    }

    #[test]
    fn permission_guards() {
        let mut w = world();
        let admin = w
            .create_entity(NewEntity::new("admin", "Person"), Actor::System)
            .unwrap();
        let mallory = w
            .create_entity(NewEntity::new("mallory", "Person"), Actor::System)
            .unwrap();
        let doc = w
            .create_entity(NewEntity::new("doc", "TextDocument").creator(admin), Actor::System)
            .unwrap();

        let perm = Permission::new(SubjectSpec::One(mallory), ObjectSpec::One(doc), BODY, Sign::Allow);
        assert!(w
            .set_permission(perm.clone(), Actor::Agent(mallory))
            .unwrap_err()
            .is_authorization());
        assert_eq!(w.set_permission(perm.clone(), Actor::Agent(admin)).unwrap(), None);

        let all = Permission::new(SubjectSpec::All, ObjectSpec::All, VIEW_NAME, Sign::Allow);
        assert!(w
            .set_permission(all.clone(), Actor::Agent(admin))
            .unwrap_err()
            .is_authorization());

        let grant = GlobalPermission::new(SubjectSpec::One(mallory), DO_ANYTHING, Sign::Allow);
        assert!(w
            .set_global_permission(grant.clone(), Actor::Agent(mallory))
            .unwrap_err()
            .is_authorization());

        w.set_global_permission(
            GlobalPermission::new(SubjectSpec::One(admin), DO_ANYTHING, Sign::Allow),
            Actor::System,
        )
        .unwrap();
        w.set_permission(all, Actor::Agent(admin)).unwrap();
        w.set_global_permission(grant, Actor::Agent(admin)).unwrap();

        assert_eq!(
            w.set_permission(
                Permission::new(SubjectSpec::All, ObjectSpec::All, "fly", Sign::Allow),
                Actor::System
            ),
            Err(Error::UnknownAbility("fly".into()))
        );
        assert_eq!(
            w.set_permission(
                Permission::new(SubjectSpec::Some(doc), ObjectSpec::All, VIEW_NAME, Sign::Allow),
                Actor::System
            ),
            Err(Error::NotACollection("doc".into()))
        );
        assert_eq!(
            w.set_permission(
                Permission::new(SubjectSpec::One(doc), ObjectSpec::All, VIEW_NAME, Sign::Allow),
                Actor::System
            ),
            Err(Error::NotAnAgent("doc".into()))
        );
    }

    #[test]
    fn delete_cascades() {
        let mut w = world();
        let a = w.create_entity(NewEntity::new("a", "Person"), Actor::System).unwrap();
        let c = w
            .create_entity(NewEntity::new("c", "Collection").creator(a), Actor::System)
            .unwrap();
        let d = w
            .create_entity(NewEntity::new("d", "TextDocument").creator(a), Actor::System)
            .unwrap();
        w.add_membership(c, d, Actor::System, None).unwrap();
        w.set_permission(
            Permission::new(SubjectSpec::All, ObjectSpec::Some(c), VIEW_NAME, Sign::Allow),
            Actor::System,
        )
        .unwrap();
        assert_eq!(w.store().len(), 3);
        let other = w.create_entity(NewEntity::new("o", "Person"), Actor::System).unwrap();
        assert!(w.delete_entity(c, Actor::Agent(other)).unwrap_err().is_authorization());
        w.delete_entity(c, Actor::Agent(a)).unwrap();
        assert_eq!(w.store().len(), 1);
        assert_eq!(w.graph().edge_count(), 0);
        assert!(w.lookup("c").is_err());
        assert!(w.entity(c).is_err());
        assert_eq!(
            w.delete_entity(w.anonymous().unwrap(), Actor::System),
            Err(Error::AnonymousReserved)
        );
    }
}
