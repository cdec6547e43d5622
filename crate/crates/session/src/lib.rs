//! Experiment sessions for correlation-belief studies.
//!
//! Each session is an append-only event log folded into a [`SessionState`].
//! [`SessionService`] validates commands against the current state, persists
//! the resulting event, then applies it, so replaying a stored log always
//! reproduces the live state. [`http::router`] exposes the service over HTTP.

pub mod clock;
pub mod config;
pub mod error;
pub mod event;
pub mod exclusion;
pub mod export;
pub mod http;
pub mod overlay;
pub mod plan;
mod seed;
pub mod service;
pub mod state;
pub mod store;
pub mod view;

pub use clock::{Clock, SystemClock, VirtualClock};
pub use config::{StudyConfig, StudyKind, Treatment};
pub use error::{Result, SessionError};
pub use event::{EventRecord, SessionEvent};
pub use exclusion::ExclusionFlag;
pub use export::{ExportBundle, TrialRow};
pub use overlay::Overlay;
pub use service::SessionService;
pub use state::{SessionState, SessionStatus, Stage};
pub use store::{EventStore, FileStore, MemoryStore};
