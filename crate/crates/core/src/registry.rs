//! Item-type hierarchy and ability vocabulary.
//!
//! Every type ultimately inherits from the root type [`ROOT_TYPE`]. A type's
//! effective item abilities are its own declarations plus everything its
//! ancestors declare; multiple inheritance merges by union. Registering a type
//! `T` adds the global ability `create T`.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub const ROOT_TYPE: &str = "Item";
pub const AGENT_TYPE: &str = "Agent";
pub const COLLECTION_TYPE: &str = "Collection";

/// The universal ability. It is both a global and an item ability.
pub const DO_ANYTHING: &str = "do_anything";
pub const MODIFY_MEMBERSHIP: &str = "modify_membership";
pub const ADD_SELF: &str = "add_self";
pub const REMOVE_SELF: &str = "remove_self";
pub const DELETE: &str = "delete";
pub const VIEW_NAME: &str = "view Item.name";

const ITEM_ABILITIES: &[&str] = &[
    DO_ANYTHING,
    "comment_on",
    DELETE,
    VIEW_NAME,
    "view Item.description",
    "view Item.creator",
    "view Item.created_at",
    "edit Item.name",
    "edit Item.description",
];

const AGENT_ABILITIES: &[&str] = &[
    "add_contact_method",
    "add_authentication_method",
    "login_as",
    "view Agent.last_online_at",
];

const PERSON_ABILITIES: &[&str] = &[
    "view Person.first_name",
    "view Person.middle_names",
    "view Person.last_name",
    "view Person.suffix",
    "edit Person.first_name",
    "edit Person.middle_names",
    "edit Person.last_name",
    "edit Person.suffix",
];

const COLLECTION_ABILITIES: &[&str] = &[MODIFY_MEMBERSHIP, ADD_SELF, REMOVE_SELF];

const TEXT_DOCUMENT_ABILITIES: &[&str] = &["view TextDocument.body", "edit TextDocument.body", "add_transclusion"];

/// Dense handle into a [`TypeRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub(crate) u32);

/// Definition of a new item type, as handed to [`TypeRegistry::define_type`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeDef {
    pub name: String,
    pub parents: Vec<String>,
    pub item_abilities: BTreeSet<String>,
    pub global_abilities: BTreeSet<String>,
}

impl TypeDef {
    pub fn new(name: impl Into<String>) -> Self {
        TypeDef {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn extends(mut self, parent: impl Into<String>) -> Self {
        self.parents.push(parent.into());
        self
    }

    pub fn item_abilities<I, S>(mut self, abilities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.item_abilities.extend(abilities.into_iter().map(Into::into));
        self
    }

    pub fn global_abilities<I, S>(mut self, abilities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.global_abilities.extend(abilities.into_iter().map(Into::into));
        self
    }
}

#[derive(Debug, Clone)]
pub struct ItemType {
    id: TypeId,
    name: String,
    parents: Vec<TypeId>,
    own_item_abilities: BTreeSet<String>,
    own_global_abilities: BTreeSet<String>,
    // Cached at definition time; parents are immutable once defined.
    ancestors: BTreeSet<TypeId>,
    effective_item_abilities: BTreeSet<String>,
}

impl ItemType {
    pub fn id(&self) -> TypeId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parents(&self) -> &[TypeId] {
        &self.parents
    }

    pub fn own_item_abilities(&self) -> &BTreeSet<String> {
        &self.own_item_abilities
    }

    pub fn own_global_abilities(&self) -> &BTreeSet<String> {
        &self.own_global_abilities
    }

    /// Strict ancestors, not including the type itself.
    pub fn ancestors(&self) -> &BTreeSet<TypeId> {
        &self.ancestors
    }

    pub fn effective_item_abilities(&self) -> &BTreeSet<String> {
        &self.effective_item_abilities
    }

    pub fn has_item_ability(&self, ability: &str) -> bool {
        self.effective_item_abilities.contains(ability)
    }
}

#[derive(Debug, Clone)]
pub struct TypeRegistry {
    types: Vec<ItemType>,
    by_name: HashMap<String, TypeId>,
    // Union of every effective item-ability set.
    all_item_abilities: BTreeSet<String>,
}

impl Default for TypeRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeRegistry {
    /// A registry holding only the root `Item` type.
    pub fn new() -> Self {
        let root = ItemType {
            id: TypeId(0),
            name: ROOT_TYPE.to_string(),
            parents: Vec::new(),
            own_item_abilities: ITEM_ABILITIES.iter().map(|s| s.to_string()).collect(),
            own_global_abilities: BTreeSet::new(),
            ancestors: BTreeSet::new(),
            effective_item_abilities: ITEM_ABILITIES.iter().map(|s| s.to_string()).collect(),
        };
        let mut by_name = HashMap::new();
        by_name.insert(ROOT_TYPE.to_string(), TypeId(0));
        TypeRegistry {
            all_item_abilities: root.effective_item_abilities.clone(),
            types: vec![root],
            by_name,
        }
    }

    /// The core spine of the built-in hierarchy: Item, Agent, Person,
    /// Collection, Group, Document and TextDocument, with their stock
    /// item abilities. Leaf types beyond the spine come from scenario files.
    pub fn bootstrap() -> Self {
        let mut registry = Self::new();
        let spine = [
            TypeDef::new(AGENT_TYPE)
                .extends(ROOT_TYPE)
                .item_abilities(AGENT_ABILITIES.iter().copied()),
            TypeDef::new("Person")
                .extends(AGENT_TYPE)
                .item_abilities(PERSON_ABILITIES.iter().copied()),
            TypeDef::new(COLLECTION_TYPE)
                .extends(ROOT_TYPE)
                .item_abilities(COLLECTION_ABILITIES.iter().copied()),
            TypeDef::new("Group").extends(COLLECTION_TYPE),
            TypeDef::new("Document").extends(ROOT_TYPE),
            TypeDef::new("TextDocument")
                .extends("Document")
                .item_abilities(TEXT_DOCUMENT_ABILITIES.iter().copied()),
        ];
        for def in spine {
            registry.define_type(def).expect("built-in spine is well formed");
        }
        registry
    }

    pub fn define_type(&mut self, def: TypeDef) -> Result<TypeId> {
        if self.by_name.contains_key(&def.name) {
            return Err(Error::DuplicateType(def.name));
        }
        if def.parents.contains(&def.name) {
            return Err(Error::InheritanceCycle(def.name));
        }
        if def.parents.is_empty() {
            return Err(Error::NoParents(def.name));
        }

        let mut parents = Vec::with_capacity(def.parents.len());
        for parent in &def.parents {
            let id = self.by_name.get(parent).copied().ok_or_else(|| Error::UnknownParent {
                child: def.name.clone(),
                parent: parent.clone(),
            })?;
            if !parents.contains(&id) {
                parents.push(id);
            }
        }

        // Parents must already exist, so the new node can only be a sink:
        // no cycle is reachable through it.
        let mut ancestors = BTreeSet::new();
        let mut effective = def.item_abilities.clone();
        for &parent in &parents {
            let p = &self.types[parent.0 as usize];
            ancestors.insert(parent);
            ancestors.extend(p.ancestors.iter().copied());
            effective.extend(p.effective_item_abilities.iter().cloned());
        }

        let id = TypeId(self.types.len() as u32);
        self.all_item_abilities.extend(effective.iter().cloned());
        self.by_name.insert(def.name.clone(), id);
        self.types.push(ItemType {
            id,
            name: def.name,
            parents,
            own_item_abilities: def.item_abilities,
            own_global_abilities: def.global_abilities,
            ancestors,
            effective_item_abilities: effective,
        });
        Ok(id)
    }

    pub fn id_of(&self, name: &str) -> Result<TypeId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<&ItemType> {
        self.by_name.get(name).map(|id| &self.types[id.0 as usize])
    }

    pub fn by_id(&self, id: TypeId) -> &ItemType {
        &self.types[id.0 as usize]
    }

    pub fn types(&self) -> impl Iterator<Item = &ItemType> {
        self.types.iter()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn is_item_ability(&self, type_name: &str, ability: &str) -> Result<bool> {
        let id = self.id_of(type_name)?;
        Ok(self.by_id(id).has_item_ability(ability))
    }

    /// True when `ty` is `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: TypeId, ancestor: TypeId) -> bool {
        ty == ancestor || self.by_id(ty).ancestors.contains(&ancestor)
    }

    pub fn is_subtype_of(&self, type_name: &str, ancestor: &str) -> Result<bool> {
        let ty = self.id_of(type_name)?;
        let anc = self.id_of(ancestor)?;
        Ok(self.is_subtype(ty, anc))
    }

    /// Whether some registered type declares `ability` as an item ability.
    pub fn is_known_item_ability(&self, ability: &str) -> bool {
        self.all_item_abilities.contains(ability)
    }

    pub fn all_item_abilities(&self) -> &BTreeSet<String> {
        &self.all_item_abilities
    }

    pub fn is_global_ability(&self, ability: &str) -> bool {
        if ability == DO_ANYTHING {
            return true;
        }
        if let Some(ty) = ability.strip_prefix("create ") {
            if self.by_name.contains_key(ty) {
                return true;
            }
        }
        self.types.iter().any(|t| t.own_global_abilities.contains(ability))
    }

    pub fn global_ability_vocabulary(&self) -> BTreeSet<String> {
        let mut vocab = BTreeSet::new();
        vocab.insert(DO_ANYTHING.to_string());
        for ty in &self.types {
            vocab.insert(create_ability(&ty.name));
            vocab.extend(ty.own_global_abilities.iter().cloned());
        }
        vocab
    }
}

/// The global ability guarding creation of items of `type_name`.
pub fn create_ability(type_name: &str) -> String {
    format!("create {type_name}")
}
