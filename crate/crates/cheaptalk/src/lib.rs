//! Gateway client, mock server, file formats and the experiment runner
//! built on [`cheaptalk_core`].

pub mod analysis;
pub mod config;
pub mod error;
pub mod graphfile;
pub mod http;
pub mod mock;
pub mod report;
pub mod simulate;
pub mod store;

pub use cheaptalk_core;
pub use error::{Error, Result};
