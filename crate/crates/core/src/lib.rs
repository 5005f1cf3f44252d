pub mod bnb;
pub mod conic;
pub mod error;
pub mod linalg;
pub mod local;
pub mod matpower;
pub mod network;
pub mod qcqp;
pub mod report;
pub mod reform;
pub mod sdp;

pub use error::{Error, Result};
