//! Closed-form planar pose solvers.

mod graph;
mod linear;
mod one_p1dp;
mod two_dp;

pub use graph::{build_relative_pose, FramePoseGraph, ANCHOR};
pub use one_p1dp::{solve_1p1dp, EpipolarConic};
pub use two_dp::solve_2dp;

use std::fmt;

use arrayvec::ArrayVec;
use thiserror::Error;

use crate::geometry::PlanarPose;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    OneP1DP,
    TwoDP,
    MC1P1DP,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::OneP1DP => "1P1DP",
            SolverKind::TwoDP => "2DP",
            SolverKind::MC1P1DP => "MC1P1DP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("no real solution")]
    NoRealRoot,
    #[error("unknown {} frame {index}", if *reference { "reference" } else { "query" })]
    UnknownFrame { reference: bool, index: usize },
    #[error("anchor frame transform must be the identity")]
    AnchorNotIdentity,
}

/// Up to four pose hypotheses from one minimal sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseCandidateSet<T> {
    candidates: ArrayVec<PlanarPose<T>, 4>,
    source: SolverKind,
}

impl<T: Real> PoseCandidateSet<T> {
    pub(crate) fn new(source: SolverKind) -> Self {
        Self {
            candidates: ArrayVec::new(),
            source,
        }
    }

    pub(crate) fn push(&mut self, pose: PlanarPose<T>) {
        self.candidates.push(pose);
    }

    pub fn source(&self) -> SolverKind {
        self.source
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PlanarPose<T>> {
        self.candidates.iter()
    }

    pub fn as_slice(&self) -> &[PlanarPose<T>] {
        &self.candidates
    }
}

impl<T: Real> IntoIterator for PoseCandidateSet<T> {
    type Item = PlanarPose<T>;
    type IntoIter = arrayvec::IntoIter<PlanarPose<T>, 4>;

    fn into_iter(self) -> Self::IntoIter {
        self.candidates.into_iter()
    }
}
