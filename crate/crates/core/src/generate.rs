//! Seeded random worlds: small adversarial ones for oracle comparison and
//! site-shaped ones for the scaling benchmark.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::registry::{DO_ANYTHING, VIEW_NAME};
use crate::store::{GlobalPermission, ObjectSpec, Permission, Sign, SubjectSpec};
use crate::world::{Actor, EntityId, NewEntity, World};

/// Item abilities drawn by the small-world generator.
pub const ITEM_ABILITY_POOL: &[&str] = &[
    VIEW_NAME,
    "edit Item.name",
    "delete",
    DO_ANYTHING,
    "view TextDocument.body",
    "modify_membership",
    "login_as",
];

/// Global abilities drawn by the small-world generator.
pub const GLOBAL_ABILITY_POOL: &[&str] = &[DO_ANYTHING, "create TextDocument", "create Person", "create Collection"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallWorldLimits {
    /// Including the anonymous agent.
    pub max_agents: usize,
    pub max_items: usize,
    pub max_collections: usize,
    /// Item permissions, default creator grants included.
    pub max_permissions: usize,
}

impl Default for SmallWorldLimits {
    fn default() -> Self {
        SmallWorldLimits {
            max_agents: 8,
            max_items: 12,
            max_collections: 5,
            max_permissions: 30,
        }
    }
}

fn sign(rng: &mut impl Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Allow
    } else {
        Sign::Deny
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, xs: &[T]) -> T {
    *xs.choose(rng).expect("non-empty pool")
}

fn random_subject(rng: &mut impl Rng, agents: &[EntityId], collections: &[EntityId]) -> SubjectSpec {
    match rng.gen_range(0..3) {
        0 => SubjectSpec::One(pick(rng, agents)),
        1 if !collections.is_empty() => SubjectSpec::Some(pick(rng, collections)),
        _ => SubjectSpec::All,
    }
}

fn random_object(rng: &mut impl Rng, entities: &[EntityId], collections: &[EntityId]) -> ObjectSpec {
    match rng.gen_range(0..3) {
        0 => ObjectSpec::One(pick(rng, entities)),
        1 if !collections.is_empty() => ObjectSpec::Some(pick(rng, collections)),
        _ => ObjectSpec::All,
    }
}

/// A small world with anonymous access, mixed entity types, random (possibly
/// cyclic) memberships with mixed `permission_enabled` flags, and item and
/// global permissions across every level and both signs.
pub fn random_small_world(seed: u64, limits: SmallWorldLimits) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut world = World::new();
    let anonymous = world.enable_anonymous().expect("fresh world");

    let mut agents = vec![anonymous];
    let n_agents = rng.gen_range(1..limits.max_agents.max(2));
    for i in 0..n_agents {
        let ty = if rng.gen_bool(0.5) { "Person" } else { "Agent" };
        let id = world
            .create_entity(
                NewEntity::new(format!("a{i}"), ty).no_default_permission(),
                Actor::System,
            )
            .expect("fresh name");
        agents.push(id);
    }

    let mut owned = 0usize;
    let mut create_owned = |world: &mut World, rng: &mut ChaCha8Rng, name: String, ty: &str| {
        let mut new = NewEntity::new(name, ty);
        if owned < limits.max_permissions && rng.gen_bool(0.4) {
            new = new.creator(pick(rng, &agents[1..]));
            owned += 1;
        } else {
            new = new.no_default_permission();
        }
        world.create_entity(new, Actor::System).expect("fresh name")
    };

    let mut collections = Vec::new();
    for i in 0..rng.gen_range(1..=limits.max_collections.max(1)) {
        let ty = if rng.gen_bool(0.5) { "Group" } else { "Collection" };
        collections.push(create_owned(&mut world, &mut rng, format!("c{i}"), ty));
    }
    for i in 0..rng.gen_range(1..=limits.max_items.max(1)) {
        let ty = ["Item", "Document", "TextDocument"][rng.gen_range(0..3)];
        create_owned(&mut world, &mut rng, format!("i{i}"), ty);
    }
    let entities: Vec<EntityId> = world.entities().map(|e| e.id).collect();

    for _ in 0..rng.gen_range(0..=16) {
        let c = pick(&mut rng, &collections);
        let m = pick(&mut rng, &entities);
        if c == m || world.membership(c, m).is_some() {
            continue;
        }
        let enabled = rng.gen_bool(0.6);
        world
            .add_membership(c, m, Actor::System, Some(enabled))
            .expect("validated edge");
    }

    let budget = limits.max_permissions.saturating_sub(world.store().len());
    for _ in 0..rng.gen_range(0..=budget) {
        let p = Permission::new(
            random_subject(&mut rng, &agents, &collections),
            random_object(&mut rng, &entities, &collections),
            pick(&mut rng, ITEM_ABILITY_POOL),
            sign(&mut rng),
        );
        world.set_permission(p, Actor::System).expect("valid permission");
    }

    for _ in 0..rng.gen_range(0..=4) {
        // do_anything is drawn less often so overrides do not drown out the
        // item-level ladder.
        let ability = if rng.gen_bool(0.2) {
            DO_ANYTHING
        } else {
            pick(&mut rng, &GLOBAL_ABILITY_POOL[1..])
        };
        let p = GlobalPermission::new(random_subject(&mut rng, &agents, &collections), ability, sign(&mut rng));
        world.set_global_permission(p, Actor::System).expect("valid permission");
    }
    world
}

/// A permission whose key is not yet stored in `world`, for monotonicity
/// checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FreshPermission {
    Item(Permission),
    Global(GlobalPermission),
}

impl FreshPermission {
    pub fn apply(self, world: &mut World) {
        match self {
            FreshPermission::Item(p) => world.set_permission(p, Actor::System),
            FreshPermission::Global(p) => world.set_global_permission(p, Actor::System),
        }
        .expect("generated permission is valid");
    }
}

pub fn random_fresh_permission(world: &World, rng: &mut impl Rng, sign: Sign) -> Option<FreshPermission> {
    let agents: Vec<EntityId> = world.agents().map(|e| e.id).collect();
    let collections: Vec<EntityId> = world.collections().map(|e| e.id).collect();
    let entities: Vec<EntityId> = world.entities().map(|e| e.id).collect();
    if agents.is_empty() || entities.is_empty() {
        return None;
    }
    for _ in 0..64 {
        let subject = random_subject(rng, &agents, &collections);
        if rng.gen_bool(0.15) {
            let ability = pick(rng, GLOBAL_ABILITY_POOL);
            if world.store().get_global(subject, ability).is_none() {
                return Some(FreshPermission::Global(GlobalPermission::new(subject, ability, sign)));
            }
        } else {
            let object = random_object(rng, &entities, &collections);
            let ability = pick(rng, ITEM_ABILITY_POOL);
            if world.store().get(subject, object, ability).is_none() {
                return Some(FreshPermission::Item(Permission::new(subject, object, ability, sign)));
            }
        }
    }
    None
}

/// Shape of a benchmark site. Defaults follow a site with about a dozen
/// items and two dozen permissions per user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldGenParams {
    pub users: usize,
    pub items_per_user: usize,
    pub permissions_per_user: usize,
    pub seed: u64,
    /// Share of each user's items granted `view Item.name` to everyone.
    pub anonymous_visible_fraction: f64,
}

impl Default for WorldGenParams {
    fn default() -> Self {
        WorldGenParams {
            users: 10,
            items_per_user: 12,
            permissions_per_user: 24,
            seed: 1,
            anonymous_visible_fraction: 0.5,
        }
    }
}

const SITE_ABILITIES: &[&str] = &[VIEW_NAME, "edit Item.name", "view TextDocument.body", DO_ANYTHING];

/// A deterministic site-shaped world.
///
/// Each user owns one collection and `items_per_user - 1` text documents,
/// each carrying the default creator grant. The rest of the user's
/// permission budget goes first to public `view Item.name` grants (about
/// `anonymous_visible_fraction` of the user's items) and then to random
/// permissions over all nine levels and both signs. Users file some of their
/// documents in their collection, join earlier users' collections, and
/// occasionally nest their collection inside a neighbour's.
pub fn random_world(params: &WorldGenParams) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut world = World::new();
    world.enable_anonymous().expect("fresh world");

    let mut users: Vec<EntityId> = Vec::with_capacity(params.users);
    let mut collections: Vec<EntityId> = Vec::with_capacity(params.users);

    for u in 0..params.users {
        let user = world
            .create_entity(NewEntity::new(format!("user{u}"), "Person"), Actor::System)
            .expect("fresh name");
        users.push(user);

        let mut owned = Vec::with_capacity(params.items_per_user);
        if params.items_per_user > 0 {
            let coll = world
                .create_entity(
                    NewEntity::new(format!("user{u}-coll"), "Collection").creator(user),
                    Actor::System,
                )
                .expect("fresh name");
            collections.push(coll);
            owned.push(coll);
        }
        for k in 1..params.items_per_user {
            let doc = world
                .create_entity(
                    NewEntity::new(format!("user{u}-doc{k}"), "TextDocument").creator(user),
                    Actor::System,
                )
                .expect("fresh name");
            owned.push(doc);
        }

        if let Some(&coll) = collections.last().filter(|_| params.items_per_user > 0) {
            for &doc in &owned[1..] {
                if rng.gen_bool(0.5) {
                    let enabled = rng.gen_bool(0.8);
                    world
                        .add_membership(coll, doc, Actor::System, Some(enabled))
                        .expect("fresh edge");
                }
            }
            if collections.len() > 1 {
                let earlier = &collections[..collections.len() - 1];
                if rng.gen_bool(0.5) {
                    let group = pick(&mut rng, earlier);
                    world
                        .add_membership(group, user, Actor::System, Some(true))
                        .expect("fresh edge");
                }
                if rng.gen_bool(0.2) {
                    let parent = earlier[earlier.len() - 1];
                    let enabled = rng.gen_bool(0.5);
                    world
                        .add_membership(parent, coll, Actor::System, Some(enabled))
                        .expect("fresh edge");
                }
            }
        }

        let mut budget = params.permissions_per_user.saturating_sub(owned.len());
        for &item in &owned {
            if budget == 0 {
                break;
            }
            if rng.gen_bool(params.anonymous_visible_fraction.clamp(0.0, 1.0)) {
                world
                    .set_permission(
                        Permission::new(SubjectSpec::All, ObjectSpec::One(item), VIEW_NAME, Sign::Allow),
                        Actor::System,
                    )
                    .expect("valid permission");
                budget -= 1;
            }
        }
        let mut attempts = 0;
        while budget > 0 && attempts < 8 * params.permissions_per_user.max(1) {
            attempts += 1;
            let subject = match rng.gen_range(0..3) {
                0 => SubjectSpec::One(pick(&mut rng, &users)),
                1 if !collections.is_empty() => SubjectSpec::Some(pick(&mut rng, &collections)),
                _ => SubjectSpec::All,
            };
            let object = match rng.gen_range(0..3) {
                0 if !owned.is_empty() => ObjectSpec::One(pick(&mut rng, &owned)),
                1 if !owned.is_empty() => ObjectSpec::Some(owned[0]),
                _ => ObjectSpec::All,
            };
            let ability = pick(&mut rng, SITE_ABILITIES);
            if world.store().get(subject, object, ability).is_some() {
                continue;
            }
            world
                .set_permission(Permission::new(subject, object, ability, sign(&mut rng)), Actor::System)
                .expect("valid permission");
            budget -= 1;
        }
    }
    world
}
