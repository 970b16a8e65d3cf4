//! Human annotation: sessions, fold assignment, durable answers, and the
//! statistics computed from them.

pub mod build;
pub mod http;
pub mod store;

pub use store::{ItemSpec, Service, ServiceConfig, ServiceError};
