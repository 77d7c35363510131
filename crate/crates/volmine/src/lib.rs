//! File formats, MDP export, run manifests, figure tables and the
//! environment wire server built on `volmine-core`.

pub mod formats;
pub mod manifest;
pub mod mdp_json;
pub mod report;
pub mod sim;
pub mod wire;
