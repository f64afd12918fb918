//! Line-oriented JSON correspondence files.
//!
//! The first record is a header with the camera, the frame graph and
//! optional metadata; every following line is one `dp` or `p` match:
//!
//! ```text
//! {"type":"header","camera":{"fx":800,"fy":800,"cx":640,"cy":480,"width":1280,"height":960},"references":[],"queries":[]}
//! {"type":"dp","query_px":[612.5,401.0],"point3d":[0.4,-0.2,3.1],"ref_frame":0,"query_frame":0}
//! {"type":"p","query_px":[100.0,220.0],"ref_px":[130.5,218.0],"ref_frame":0,"query_frame":0}
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector2, Vector3};
use planar_loc::geometry::DEFAULT_DEPTH_THRESHOLD;
use planar_loc::sim::SimInstance;
use planar_loc::{
    CameraModel, CorrespondenceDP, CorrespondenceP, FramePoseGraph, PlanarPose, RelativeTransform,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Written for simulated data, whose depths are all trusted.
pub const TRUST_ALL_DEPTH: f64 = 1e9;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no header record")]
    MissingHeader,
    #[error("no camera in the header and none given")]
    MissingCamera,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
    /// Image-to-yaw-frame rotation, identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<[[f64; 3]; 3]>,
}

impl CameraSpec {
    pub fn from_model(cam: &CameraModel) -> Self {
        let a = cam.alignment();
        Self {
            fx: cam.fx(),
            fy: cam.fy(),
            cx: cam.cx(),
            cy: cam.cy(),
            width: cam.width(),
            height: cam.height(),
            alignment: (!a.is_identity(0.0)).then(|| rows(a)),
        }
    }

    pub fn to_model(&self) -> Result<CameraModel, String> {
        let a = self
            .alignment
            .map_or_else(Matrix3::identity, |m| from_rows(&m));
        CameraModel::with_alignment(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            a,
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub index: usize,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub theta_rad: f64,
    pub tx: f64,
    pub tz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraSpec>,
    /// Reference views as `T_{r r_j}`, mapping view `j` into the anchor.
    #[serde(default)]
    pub references: Vec<FrameSpec>,
    /// Query views as `T_{q_i q}`, mapping the primary query into view `i`.
    #[serde(default)]
    pub queries: Vec<FrameSpec>,
    /// Map points with `z` at or beyond this are treated as depthless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PoseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Header(Header),
    Dp {
        query_px: [f64; 2],
        point3d: [f64; 3],
        ref_frame: usize,
        query_frame: usize,
    },
    P {
        query_px: [f64; 2],
        ref_px: [f64; 2],
        ref_frame: usize,
        query_frame: usize,
    },
}

/// A parsed correspondence file.
#[derive(Debug, Clone)]
pub struct CorrFile {
    pub camera: CameraModel,
    pub graph: FramePoseGraph,
    pub dps: Vec<CorrespondenceDP>,
    pub ps: Vec<CorrespondenceP>,
    pub ground_truth: Option<PlanarPose>,
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)]))
}

fn from_rows(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| m[r][c])
}

fn frame_spec(index: usize, t: &RelativeTransform) -> FrameSpec {
    let v = t.translation();
    FrameSpec {
        index,
        rotation: rows(t.rotation()),
        translation: [v.x, v.y, v.z],
    }
}

fn frame_transform(f: &FrameSpec) -> Result<RelativeTransform, String> {
    RelativeTransform::new(from_rows(&f.rotation), Vector3::from(f.translation))
        .map_err(|e| e.to_string())
}

/// Reads a correspondence file. `camera` replaces the header camera.
pub fn read_corr_file(path: &Path, camera: Option<CameraModel>) -> Result<CorrFile, CorrError> {
    let io = |source| CorrError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    parse_corr(std::io::BufReader::new(file), camera)
}

pub fn parse_corr(
    reader: impl BufRead,
    camera: Option<CameraModel>,
) -> Result<CorrFile, CorrError> {
    let mut out: Option<(CorrFile, f64)> = None;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let err = |msg: String| CorrError::Parse { line: line_no, msg };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        match (record, out.as_mut()) {
            (Record::Header(h), None) => {
                let cam = match (camera, h.camera) {
                    (Some(c), _) => c,
                    (None, Some(spec)) => spec.to_model().map_err(err)?,
                    (None, None) => return Err(CorrError::MissingCamera),
                };
                let mut graph = FramePoseGraph::new();
                for f in &h.references {
                    let t = frame_transform(f).map_err(err)?;
                    graph
                        .insert_reference(f.index, t)
                        .map_err(|e| err(e.to_string()))?;
                }
                for f in &h.queries {
                    let t = frame_transform(f).map_err(err)?;
                    graph
                        .insert_query(f.index, t)
                        .map_err(|e| err(e.to_string()))?;
                }
                let threshold = h.depth_threshold.unwrap_or(DEFAULT_DEPTH_THRESHOLD);
                if !(threshold > 0.0) {
                    return Err(err("depth_threshold must be positive".into()));
                }
                let file = CorrFile {
                    camera: cam,
                    graph,
                    dps: Vec::new(),
                    ps: Vec::new(),
                    ground_truth: h
                        .ground_truth
                        .map(|g| PlanarPose::new(g.theta_rad, g.tx, g.tz)),
                };
                out = Some((file, threshold));
            }
            (Record::Header(_), Some(_)) => return Err(err("second header record".into())),
            (_, None) => return Err(CorrError::MissingHeader),
            (
                Record::Dp {
                    query_px,
                    point3d,
                    ref_frame,
                    query_frame,
                },
                Some((file, threshold)),
            ) => {
                check_frames(&file.graph, ref_frame, query_frame).map_err(err)?;
                let q = file
                    .camera
                    .normalize(&Vector2::from(query_px))
                    .map_err(|e| err(e.to_string()))?;
                let dp = CorrespondenceDP::new(
                    q,
                    Vector3::from(point3d),
                    ref_frame,
                    query_frame,
                    *threshold,
                )
                .map_err(|e| err(e.to_string()))?;
                file.dps.push(dp);
            }
            (
                Record::P {
                    query_px,
                    ref_px,
                    ref_frame,
                    query_frame,
                },
                Some((file, _)),
            ) => {
                check_frames(&file.graph, ref_frame, query_frame).map_err(err)?;
                let q = file
                    .camera
                    .normalize(&Vector2::from(query_px))
                    .map_err(|e| err(e.to_string()))?;
                let r = file
                    .camera
                    .normalize(&Vector2::from(ref_px))
                    .map_err(|e| err(e.to_string()))?;
                let p = CorrespondenceP::new(q, r, ref_frame, query_frame)
                    .map_err(|e| err(e.to_string()))?;
                file.ps.push(p);
            }
        }
    }
    out.map(|(f, _)| f).ok_or(CorrError::MissingHeader)
}

fn check_frames(
    graph: &FramePoseGraph,
    ref_frame: usize,
    query_frame: usize,
) -> Result<(), String> {
    graph.reference(ref_frame).map_err(|e| e.to_string())?;
    graph.query(query_frame).map_err(|e| e.to_string())?;
    Ok(())
}

/// Writes a simulated instance with its ground truth.
pub fn write_instance(
    mut w: impl Write,
    inst: &SimInstance,
    camera: &CameraModel,
) -> anyhow::Result<()> {
    let header = Header {
        camera: Some(CameraSpec::from_model(camera)),
        references: inst
            .graph
            .references()
            .filter(|(i, _)| *i != 0)
            .map(|(i, t)| frame_spec(i, t))
            .collect(),
        queries: inst
            .graph
            .queries()
            .filter(|(i, _)| *i != 0)
            .map(|(i, t)| frame_spec(i, t))
            .collect(),
        depth_threshold: Some(TRUST_ALL_DEPTH),
        ground_truth: Some(PoseSpec {
            theta_rad: inst.gt_pose.theta(),
            tx: inst.gt_pose.tx(),
            tz: inst.gt_pose.tz(),
        }),
    };
    let px = |p| -> anyhow::Result<[f64; 2]> {
        let v = camera.denormalize(p)?;
        Ok([v.x, v.y])
    };
    writeln!(w, "{}", serde_json::to_string(&Record::Header(header))?)?;
    for dp in &inst.dps {
        let rec = Record::Dp {
            query_px: px(&dp.query)?,
            point3d: [dp.point3d.x, dp.point3d.y, dp.point3d.z],
            ref_frame: dp.ref_frame,
            query_frame: dp.query_frame,
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?)?;
    }
    for p in &inst.ps {
        let rec = Record::P {
            query_px: px(&p.query)?,
            ref_px: px(&p.reference)?,
            ref_frame: p.ref_frame,
            query_frame: p.query_frame,
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}
