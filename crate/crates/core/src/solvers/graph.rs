use std::collections::BTreeMap;

use super::SolverError;
use crate::geometry::{PlanarPose, RelativeTransform};
use crate::scalar::Real;

/// Index of the anchor reference view and the primary query view.
pub const ANCHOR: usize = 0;

/// Known transforms tying auxiliary views to the anchor pair.
///
/// `ref_poses[j]` maps points of reference view `j` into the anchor reference
/// frame; `query_offsets[i]` maps points of the primary query frame into query
/// view `i` (rig extrinsics or odometry).
#[derive(Debug, Clone, PartialEq)]
pub struct FramePoseGraph<T: Real> {
    ref_poses: BTreeMap<usize, RelativeTransform<T>>,
    query_offsets: BTreeMap<usize, RelativeTransform<T>>,
}

impl<T: Real> Default for FramePoseGraph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> FramePoseGraph<T> {
    /// Graph with only the anchor reference and primary query.
    pub fn new() -> Self {
        let mut ref_poses = BTreeMap::new();
        ref_poses.insert(ANCHOR, RelativeTransform::identity());
        let mut query_offsets = BTreeMap::new();
        query_offsets.insert(ANCHOR, RelativeTransform::identity());
        Self {
            ref_poses,
            query_offsets,
        }
    }

    pub fn with_reference(
        mut self,
        index: usize,
        ref_to_anchor: RelativeTransform<T>,
    ) -> Result<Self, SolverError> {
        self.insert_reference(index, ref_to_anchor)?;
        Ok(self)
    }

    pub fn with_query(
        mut self,
        index: usize,
        primary_to_query: RelativeTransform<T>,
    ) -> Result<Self, SolverError> {
        self.insert_query(index, primary_to_query)?;
        Ok(self)
    }

    pub fn insert_reference(
        &mut self,
        index: usize,
        ref_to_anchor: RelativeTransform<T>,
    ) -> Result<(), SolverError> {
        if index == ANCHOR && !ref_to_anchor.is_identity() {
            return Err(SolverError::AnchorNotIdentity);
        }
        self.ref_poses.insert(index, ref_to_anchor);
        Ok(())
    }

    pub fn insert_query(
        &mut self,
        index: usize,
        primary_to_query: RelativeTransform<T>,
    ) -> Result<(), SolverError> {
        if index == ANCHOR && !primary_to_query.is_identity() {
            return Err(SolverError::AnchorNotIdentity);
        }
        self.query_offsets.insert(index, primary_to_query);
        Ok(())
    }

    pub fn reference(&self, index: usize) -> Result<&RelativeTransform<T>, SolverError> {
        self.ref_poses.get(&index).ok_or(SolverError::UnknownFrame {
            reference: true,
            index,
        })
    }

    pub fn query(&self, index: usize) -> Result<&RelativeTransform<T>, SolverError> {
        self.query_offsets
            .get(&index)
            .ok_or(SolverError::UnknownFrame {
                reference: false,
                index,
            })
    }

    pub fn references(&self) -> impl Iterator<Item = (usize, &RelativeTransform<T>)> {
        self.ref_poses.iter().map(|(k, v)| (*k, v))
    }

    pub fn queries(&self) -> impl Iterator<Item = (usize, &RelativeTransform<T>)> {
        self.query_offsets.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_anchor_only(&self) -> bool {
        self.ref_poses.len() == 1 && self.query_offsets.len() == 1
    }
}

/// Transform from reference view `ref_frame` into query view `query_frame`
/// given the anchor-pair pose: `T_{q_i q} * T_{q r} * T_{r r_j}`.
pub fn build_relative_pose<T: Real>(
    pose: &PlanarPose<T>,
    query_frame: usize,
    ref_frame: usize,
    graph: &FramePoseGraph<T>,
) -> Result<RelativeTransform<T>, SolverError> {
    let to_anchor = graph.reference(ref_frame)?;
    let offset = graph.query(query_frame)?;
    let core = pose.to_transform();
    Ok(match (query_frame == ANCHOR, ref_frame == ANCHOR) {
        (true, true) => core,
        (true, false) => core.compose(to_anchor),
        (false, true) => offset.compose(&core),
        (false, false) => offset.compose(&core).compose(to_anchor),
    })
}
