use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic landmark groups. `left_eye` is the eye with the smaller image
/// x coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkGroup {
    LeftEye,
    RightEye,
    Nose,
    Mouth,
    Jaw,
    Forehead,
}

impl LandmarkGroup {
    pub const ALL: [LandmarkGroup; 6] = [
        LandmarkGroup::LeftEye,
        LandmarkGroup::RightEye,
        LandmarkGroup::Nose,
        LandmarkGroup::Mouth,
        LandmarkGroup::Jaw,
        LandmarkGroup::Forehead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LandmarkGroup::LeftEye => "left_eye",
            LandmarkGroup::RightEye => "right_eye",
            LandmarkGroup::Nose => "nose",
            LandmarkGroup::Mouth => "mouth",
            LandmarkGroup::Jaw => "jaw",
            LandmarkGroup::Forehead => "forehead",
        }
    }
}

impl fmt::Display for LandmarkGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Facial landmarks registered on an image of known size.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkMesh {
    height: usize,
    width: usize,
    points: Vec<(f64, f64)>,
    groups: BTreeMap<LandmarkGroup, Vec<usize>>,
}

impl LandmarkMesh {
    /// Points are `(x, y)` in pixels and must lie inside the image; group
    /// indices must refer to existing points.
    pub fn new(
        height: usize,
        width: usize,
        points: Vec<(f64, f64)>,
        groups: BTreeMap<LandmarkGroup, Vec<usize>>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidMesh(format!("image dims {height}x{width}")));
        }
        let (max_x, max_y) = ((width - 1) as f64, (height - 1) as f64);
        for (i, &(x, y)) in points.iter().enumerate() {
            if !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y) {
                return Err(Error::InvalidMesh(format!(
                    "point {i} at ({x}, {y}) outside {width}x{height} image"
                )));
            }
        }
        for (g, idx) in &groups {
            if let Some(&bad) = idx.iter().find(|&&i| i >= points.len()) {
                return Err(Error::InvalidMesh(format!(
                    "group {g} references point {bad} of {}",
                    points.len()
                )));
            }
        }
        Ok(Self {
            height,
            width,
            points,
            groups,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn groups(&self) -> &BTreeMap<LandmarkGroup, Vec<usize>> {
        &self.groups
    }

    /// Points of a non-empty group.
    pub fn group_points(&self, group: LandmarkGroup) -> Result<Vec<(f64, f64)>> {
        match self.groups.get(&group) {
            Some(idx) if !idx.is_empty() => Ok(idx.iter().map(|&i| self.points[i]).collect()),
            _ => Err(Error::MissingLandmarkGroup(group)),
        }
    }

    pub fn centroid(&self, group: LandmarkGroup) -> Result<(f64, f64)> {
        let pts = self.group_points(group)?;
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        Ok((sx / n, sy / n))
    }

    /// `(min_x, min_y, max_x, max_y)` of a group.
    pub fn bounding_box(&self, group: LandmarkGroup) -> Result<(f64, f64, f64, f64)> {
        let pts = self.group_points(group)?;
        Ok(pts.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
        ))
    }

    /// Distance between the eye centroids.
    pub fn inter_ocular_distance(&self) -> Result<f64> {
        let (lx, ly) = self.centroid(LandmarkGroup::LeftEye)?;
        let (rx, ry) = self.centroid(LandmarkGroup::RightEye)?;
        Ok((rx - lx).hypot(ry - ly))
    }
}
