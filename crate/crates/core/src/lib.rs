//! Co-design search over multilayer perceptrons and systolic-array
//! accelerator configurations.
//!
//! The crate is organized around the pieces of the search flow:
//!
//! * [`dataset`] — CSV ingestion, normalization, deterministic k-fold plans.
//! * [`mlp`] — evolvable MLP genomes, backprop training, accuracy scoring.
//! * [`hw`] — the analytical systolic-GEMM performance model plus a
//!   cycle-level reference simulator used to validate it.
//! * [`evolve`] — steady-state evolutionary engine with multi-objective
//!   fitness, an evaluation cache, and Pareto-front extraction.
//! * [`worker`] — the master/worker evaluation fabric (in-process and TCP).
//! * [`config`] — run configuration files and the hardware target catalog.
//! * [`runlog`] — append-only results log with replay.
//! * [`report`] — plot-ready CSV emission for fronts and scatter data.

pub mod config;
pub mod dataset;
pub mod evolve;
pub mod hw;
pub mod mlp;
pub mod report;
pub mod runlog;
pub mod worker;
