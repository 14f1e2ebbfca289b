pub mod error;
pub mod fractional;
pub mod linalg;
pub mod quadrature;
pub mod rational;
pub mod report;
pub mod model;
pub mod phase;
pub mod engine;
pub mod oracle;
pub mod config;
pub mod cli;
