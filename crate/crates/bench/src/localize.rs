//! Single-shot estimation on a correspondence file.

use std::fmt;

use planar_loc::geometry::{rotation_error, translation_error};
use planar_loc::ransac::{expected_iterations, ransac_estimate, RansacConfig, RansacError};
use planar_loc::selector::{trial_success_probability, EnvironmentProfile};
use serde::Serialize;

use crate::corrfile::CorrFile;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub solver: String,
    pub theta_deg: f64,
    pub tx_m: f64,
    pub tz_m: f64,
    pub inliers_dp: usize,
    pub total_dp: usize,
    pub inliers_p: usize,
    pub total_p: usize,
    pub iterations: usize,
    pub refined: bool,
    /// Single-sample success under the rates observed in this file.
    pub modeled_trial_success: f64,
    pub modeled_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt_t_err_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt_r_err_deg: Option<f64>,
}

pub fn localize(file: &CorrFile, cfg: &RansacConfig) -> Result<Report, RansacError> {
    let res = ransac_estimate(&file.dps, &file.ps, &file.graph, cfg, &file.camera)?;
    let total = file.dps.len() + file.ps.len();
    let reliable = file.dps.iter().filter(|d| d.is_reliable()).count();
    let lambda = res.inlier_count() as f64 / total as f64;
    let gamma = reliable as f64 / total as f64;
    let modeled = EnvironmentProfile::scsd(lambda, gamma)
        .and_then(|p| trial_success_probability(&p, res.solver))
        .unwrap_or(0.0);
    let count = |m: &[bool]| m.iter().filter(|&&b| b).count();
    let gt = file.ground_truth.map(|g| {
        (
            translation_error(&res.pose.translation(), &g.translation()),
            rotation_error(&res.pose.rotation(), &g.rotation()),
        )
    });
    Ok(Report {
        solver: res.solver.to_string(),
        theta_deg: res.pose.theta().to_degrees(),
        tx_m: res.pose.tx(),
        tz_m: res.pose.tz(),
        inliers_dp: count(&res.inlier_mask_dp),
        total_dp: file.dps.len(),
        inliers_p: count(&res.inlier_mask_p),
        total_p: file.ps.len(),
        iterations: res.iterations_used,
        refined: res.refined,
        modeled_trial_success: modeled,
        modeled_iterations: expected_iterations(modeled, cfg.confidence),
        gt_t_err_m: gt.map(|g| g.0),
        gt_r_err_deg: gt.map(|g| g.1),
    })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "solver: {}", self.solver)?;
        writeln!(
            f,
            "pose: theta_deg={:.6} tx_m={:.6} tz_m={:.6}",
            self.theta_deg, self.tx_m, self.tz_m
        )?;
        writeln!(
            f,
            "inliers: dp {}/{} p {}/{}",
            self.inliers_dp, self.total_dp, self.inliers_p, self.total_p
        )?;
        writeln!(
            f,
            "iterations: {} (refined: {})",
            self.iterations, self.refined
        )?;
        write!(
            f,
            "modeled trial success: {:.6} ({} iterations at the configured confidence)",
            self.modeled_trial_success, self.modeled_iterations
        )?;
        if let (Some(t), Some(r)) = (self.gt_t_err_m, self.gt_r_err_deg) {
            write!(f, "\nground truth error: t_m={t:.3e} r_deg={r:.3e}")?;
        }
        Ok(())
    }
}
