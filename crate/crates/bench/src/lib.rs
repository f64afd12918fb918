//! Benchmark harness for `planar-loc`: synthetic sweeps, correspondence
//! files and the `bench` command line.

pub mod corrfile;
pub mod experiment;
pub mod localize;
pub mod spec;
