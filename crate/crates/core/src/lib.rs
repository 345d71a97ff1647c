pub mod ctmc;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod limits;
pub mod ode;
pub mod oracle;
pub mod offspring;
pub mod params;
pub mod prelimit;
pub mod special;
pub mod tree;

pub use error::{Error, Result};
pub use params::{ModelParams, Regime};
