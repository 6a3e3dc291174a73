pub mod adaptation;
pub mod cli;
pub mod detection;
pub mod holder;
pub mod model;
pub mod prov;
pub mod service;
pub mod timestamp;
pub mod violation;
pub mod xes;

pub use timestamp::Timestamp;
pub use violation::{Rule, Violation};
