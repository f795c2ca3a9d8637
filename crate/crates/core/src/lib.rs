pub mod autoencoder;
pub mod checkpoint;
pub mod error;
pub mod experiment;
pub mod gate;
pub mod lqr;
pub mod numerics;
pub mod rnn;
pub mod sim;

pub use error::{Error, Result};
