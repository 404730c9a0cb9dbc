pub mod config;
pub mod error;
pub mod linalg;
pub mod network;
pub mod pilots;
pub mod rng;
pub mod streams;
pub mod precoding;
pub mod downlink;
pub mod receiver;
pub mod cost;
pub mod sim;
pub mod synthetic;
pub mod harness;
