pub mod classify;
pub mod error;
pub mod experiments;
pub mod io;
pub mod signals;
pub mod tf;
pub mod tf_filter;
pub mod zero_hist;

pub use error::{Error, Result};
