//! Backend for the highlight annotation studies.
//!
//! Each participant gets a session in one condition (with or without
//! highlights, alternating per study), a seeded permutation of the study
//! instances and two attention checks that repeat the previous item.
//! Answers, sessions and surveys go to append-only line logs that the
//! evaluation tools read directly.

pub mod error;
pub mod http;
pub mod service;
pub mod session;
pub mod store;
pub mod study;

pub use error::{ErrorBody, Result, ServiceError};
pub use http::{router, serve, CreateSession};
pub use service::{Health, ServiceConfig, StudyService};
pub use session::{Ack, InstancePayload, SessionInfo, StudySession, SurveyResponse};
pub use study::Study;
