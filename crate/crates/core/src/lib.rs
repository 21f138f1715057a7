//! Bivalent relation-object access control.
//!
//! Permissions are signed relation objects stored alongside the entities they
//! govern. Conflicts between allows and denies are settled by a fixed
//! nine-level precedence grid over (subject scope, object scope), with denies
//! winning ties and a closed-world default.

pub mod bench;
pub mod error;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod registry;
pub mod resolver;
pub mod scenario;
pub mod store;
pub mod world;

pub use error::{Error, Result};
pub use graph::Membership;
pub use registry::{TypeDef, TypeRegistry, DO_ANYTHING};
pub use resolver::{Decision, LoopholeReport, Reason};
pub use store::{GlobalPermission, Grant, Level, ObjectSpec, Permission, Scope, Sign, SubjectSpec};
pub use world::{Actor, Entity, EntityId, NewEntity, World, ANONYMOUS};
