use thiserror::Error;

/// Errors raised by the engine.
///
/// Validation failures (bad references, schema misuse) are kept distinct from
/// authorization failures so callers can tell "you asked for something
/// malformed" apart from "you are not allowed to do that".
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("item type `{0}` is already defined")]
    DuplicateType(String),
    #[error("unknown item type `{0}`")]
    UnknownType(String),
    #[error("item type `{child}` names unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },
    #[error("item type `{0}` would introduce an inheritance cycle")]
    InheritanceCycle(String),
    #[error("item type `{0}` must declare at least one parent")]
    NoParents(String),

    #[error("entity `{0}` already exists")]
    DuplicateEntity(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("entity `{0}` is not an agent")]
    NotAnAgent(String),
    #[error("entity `{0}` is not a collection")]
    NotACollection(String),
    #[error("the anonymous agent cannot be deleted")]
    AnonymousReserved,
    #[error("anonymous access is not enabled")]
    AnonymousDisabled,

    #[error("`{collection}` already contains `{member}`")]
    DuplicateMembership { collection: String, member: String },
    #[error("`{0}` cannot be a member of itself")]
    SelfMembership(String),
    #[error("`{collection}` has no direct member `{member}`")]
    MissingMembership { collection: String, member: String },

    #[error("unknown ability `{0}`")]
    UnknownAbility(String),
    #[error("ability `{ability}` does not apply to items of type `{item_type}`")]
    AbilityNotApplicable { ability: String, item_type: String },

    #[error("`{actor}` is not authorized to {action}")]
    Unauthorized { actor: String, action: String },
}

impl Error {
    pub fn is_authorization(&self) -> bool {
        matches!(self, Error::Unauthorized { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
