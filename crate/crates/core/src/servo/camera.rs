//! Pinhole camera, image features and the point-feature interaction matrix.

use crate::error::{AcmError, Result};
use crate::kinematics::Pose;
use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

/// Smallest admissible camera-frame depth [m].
pub const Z_MIN: f64 = 0.05;

/// Distortion-free pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            width: 640.0,
            height: 480.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fx", self.fx), ("fy", self.fy), ("width", self.width), ("height", self.height)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AcmError::config(format!("intrinsics.{name}"), "must be finite and > 0"));
            }
        }
        if !(0.0..=self.width).contains(&self.cx) || !(0.0..=self.height).contains(&self.cy) {
            return Err(AcmError::config("intrinsics", "principal point must lie inside the image"));
        }
        Ok(())
    }

    /// Pixel to normalized image coordinates.
    pub fn normalize(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    /// Normalized image coordinates to pixel.
    pub fn pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (self.fx * x + self.cx, self.fy * y + self.cy)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        (0.0..=self.width).contains(&u) && (0.0..=self.height).contains(&v)
    }
}

/// Project a world point seen by a camera at `camera` (camera-to-world pose).
///
/// Returns `(u, v, Z)`. A point at or behind `Z_MIN` is a feature loss; the
/// caller fills in index and time.
pub fn project(point: &Vector3<f64>, camera: &Pose, intr: &CameraIntrinsics) -> Result<(f64, f64, f64)> {
    let pc = camera.inverse_transform_point(point);
    if !(pc.z > Z_MIN) {
        return Err(AcmError::FeatureLoss {
            index: 0,
            time: f64::NAN,
            reason: format!("depth {:.4} m behind the camera limit {Z_MIN} m", pc.z),
        });
    }
    let (u, v) = intr.pixel(pc.x / pc.z, pc.y / pc.z);
    Ok((u, v, pc.z))
}

/// Image features of `N` points: pixel and normalized coordinates plus true depths.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatures {
    pub pixels: Vec<[f64; 2]>,
    pub normalized: Vec<[f64; 2]>,
    pub depths: Vec<f64>,
}

impl ImageFeatures {
    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    /// Stacked normalized coordinates `(x1, y1, ..., xN, yN)`.
    pub fn normalized_vector(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.len(), self.normalized.iter().flatten().copied())
    }

    /// Stacked pixel coordinates `(u1, v1, ..., uN, vN)`.
    pub fn pixel_vector(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.len(), self.pixels.iter().flatten().copied())
    }
}

/// Project all points; fails on the first point that is behind the camera or outside the image.
pub fn observe(points: &[Vector3<f64>], camera: &Pose, intr: &CameraIntrinsics, time: f64) -> Result<ImageFeatures> {
    let mut f = ImageFeatures {
        pixels: Vec::with_capacity(points.len()),
        normalized: Vec::with_capacity(points.len()),
        depths: Vec::with_capacity(points.len()),
    };
    for (index, p) in points.iter().enumerate() {
        let (u, v, z) = project(p, camera, intr).map_err(|e| match e {
            AcmError::FeatureLoss { reason, .. } => AcmError::FeatureLoss { index, time, reason },
            other => other,
        })?;
        if !intr.contains(u, v) {
            return Err(AcmError::FeatureLoss {
                index,
                time,
                reason: format!("pixel ({u:.1}, {v:.1}) left the image"),
            });
        }
        f.pixels.push([u, v]);
        f.normalized.push([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy]);
        f.depths.push(z);
    }
    Ok(f)
}

/// Stacked `2N x 6` interaction matrix: `s_dot = L v_c` for a static scene and a
/// camera twist `v_c = (v, w)` in the camera frame.
pub fn interaction_matrix(f: &ImageFeatures) -> Result<DMatrix<f64>> {
    let n = f.len();
    let mut l = DMatrix::zeros(2 * n, 6);
    for i in 0..n {
        let [x, y] = f.normalized[i];
        let z = f.depths[i];
        if !(z > Z_MIN) {
            return Err(AcmError::Domain(format!("feature {i} depth {z} below {Z_MIN}")));
        }
        let row_x = [-1.0 / z, 0.0, x / z, x * y, -(1.0 + x * x), y];
        let row_y = [0.0, -1.0 / z, y / z, 1.0 + y * y, -x * y, -x];
        for c in 0..6 {
            l[(2 * i, c)] = row_x[c];
            l[(2 * i + 1, c)] = row_y[c];
        }
    }
    Ok(l)
}

/// `e = s_d - s` in normalized coordinates.
pub fn servo_error(current: &ImageFeatures, desired: &ImageFeatures) -> Result<DVector<f64>> {
    if current.len() != desired.len() {
        return Err(AcmError::Dimension {
            expected: 2 * desired.len(),
            got: 2 * current.len(),
        });
    }
    Ok(desired.normalized_vector() - current.normalized_vector())
}

/// Pixel norm of a normalized-coordinate error vector.
pub fn error_norm_px(e: &DVector<f64>, intr: &CameraIntrinsics) -> f64 {
    e.iter()
        .enumerate()
        .map(|(k, v)| {
            let f = if k % 2 == 0 { intr.fx } else { intr.fy };
            (f * v).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}
