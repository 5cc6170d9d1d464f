//! Experiment drivers.

pub mod align;
pub mod config;
pub mod cv;
pub mod noisedemo;
pub mod output;
pub mod protocol;
pub mod toy;
pub mod weights;

pub use config::{RunConfig, Task};
pub use protocol::{Fit, Method, Split};
pub use toy::{run_toy, ToyReport};
