//! Synthetic testbed and the closed-loop simulation driver.

pub mod engine;
pub mod objective;
