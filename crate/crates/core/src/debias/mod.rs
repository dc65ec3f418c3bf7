pub mod cda;
pub mod decoupled;
pub mod eo;
pub mod inlp;
pub mod pipeline;
