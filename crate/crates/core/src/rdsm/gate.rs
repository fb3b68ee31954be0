use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param_space::{normalize_one, ParamVector, ParameterCatalog, SamplingDistribution};

/// Binary switch deciding whether the interface disbond term contributes.
///
/// The boundary is the ruled surface swept by a line in the plane of the
/// first two axes as the third axis goes from 0 to 1: at height `z` the line
/// joins `lerp(lower[0], upper[0], z)` and `lerp(lower[1], upper[1], z)`.
/// Points on the side of the line containing (1, 1), and on the line
/// itself, are engaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngagementGate {
    /// Catalog names of the three axes.
    pub axes: [String; 3],
    /// Segment endpoints at z = 0.
    pub lower: [[f64; 2]; 2],
    /// Segment endpoints at z = 1.
    pub upper: [[f64; 2]; 2],
    /// Distribution whose support maps parameter values onto [0, 1].
    #[serde(default)]
    pub normalization: SamplingDistribution,
}

impl Default for EngagementGate {
    fn default() -> Self {
        EngagementGate {
            axes: ["P".into(), "XS".into(), "GiII".into()],
            lower: [[0.4, 0.0], [0.0, 0.5]],
            upper: [[0.85, 0.3], [0.0, 1.0]],
            normalization: SamplingDistribution::UniformPm20,
        }
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // exact at both ends
    a * (1.0 - t) + b * t
}

impl EngagementGate {
    pub fn validate(&self) -> Result<()> {
        let catalog = ParameterCatalog::canonical();
        for a in &self.axes {
            catalog.index_of(a)?;
        }
        if !self.normalization.is_bounded() {
            return Err(Error::InvalidArgument(format!(
                "gate normalization needs a bounded distribution, got {}",
                self.normalization.tag()
            )));
        }
        if self.lower.iter().chain(&self.upper).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("gate vertices must be finite".into()));
        }
        for z in [0.0, 1.0] {
            let (a, b) = self.segment(z);
            if a == b {
                return Err(Error::InvalidArgument(format!("gate segment at z = {z} is degenerate")));
            }
        }
        Ok(())
    }

    /// The four vertices as (axis 1, axis 2, axis 3) triples.
    pub fn vertices(&self) -> [[f64; 3]; 4] {
        let [l0, l1] = self.lower;
        let [u0, u1] = self.upper;
        [[l0[0], l0[1], 0.0], [l1[0], l1[1], 0.0], [u0[0], u0[1], 1.0], [u1[0], u1[1], 1.0]]
    }

    fn segment(&self, z: f64) -> ([f64; 2], [f64; 2]) {
        let p = |i: usize| [lerp(self.lower[i][0], self.upper[i][0], z), lerp(self.lower[i][1], self.upper[i][1], z)];
        (p(0), p(1))
    }

    /// Signed distance from the boundary line at height `z`, positive on
    /// the engaged side.
    pub fn signed_distance(&self, u: f64, v: f64, z: f64) -> f64 {
        let (a, b) = self.segment(z);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let side = |q: [f64; 2]| (d[0] * (q[1] - a[1]) - d[1] * (q[0] - a[0])) / len;
        let reference = side([1.0, 1.0]);
        let s = side([u, v]);
        if reference < 0.0 {
            -s
        } else {
            s
        }
    }

    /// Gate decision on normalized coordinates, each in [0, 1].
    pub fn engaged(&self, u: f64, v: f64, z: f64) -> Result<bool> {
        for (name, c) in self.axes.iter().zip([u, v, z]) {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidArgument(format!("gate coordinate `{name}` = {c} is outside [0, 1]")));
            }
        }
        Ok(self.signed_distance(u, v, z) >= 0.0)
    }

    /// Normalized gate coordinates of a parameter vector.
    pub fn coordinates(&self, x: &ParamVector) -> Result<[f64; 3]> {
        let catalog = ParameterCatalog::canonical();
        let mut out = [0.0; 3];
        for (o, name) in out.iter_mut().zip(&self.axes) {
            let i = catalog.index_of(name)?;
            *o = normalize_one(catalog, &self.normalization, i, x[i])?;
        }
        Ok(out)
    }

    /// Gate decision for a parameter vector. Coordinates outside the
    /// support are clamped onto it, which keeps the decision monotone.
    pub fn engaged_at(&self, x: &ParamVector) -> Result<bool> {
        let c = self.coordinates(x)?.map(|v| v.clamp(0.0, 1.0));
        self.engaged(c[0], c[1], c[2])
    }
}
