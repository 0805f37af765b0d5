//! Toolkit for day/night on-road object detection experiments.

pub mod cli;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod modelplan;
pub mod synth;
