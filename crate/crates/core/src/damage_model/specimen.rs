//! Four-point-bend specimen: stacking, geometry, proxy constants and the
//! curvature schedule.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::laws::FiberDamageLaw;
use crate::error::{Error, Result};
use crate::param_space::{ParamVector, ParameterCatalog, ParameterGroup, SamplingDistribution};

/// Woven or stitched glass fabric of one lamina.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fabric {
    /// ±45 biaxial
    #[serde(rename = "EBX1200")]
    Ebx1200,
    /// 0/90 stitched
    #[serde(rename = "ELT1800")]
    Elt1800,
    #[serde(rename = "H7500")]
    H7500,
    #[serde(rename = "H7781")]
    H7781,
}

impl Fabric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fabric::Ebx1200 => "EBX1200",
            Fabric::Elt1800 => "ELT1800",
            Fabric::H7500 => "H7500",
            Fabric::H7781 => "H7781",
        }
    }

    pub fn group(&self) -> ParameterGroup {
        match self {
            Fabric::Ebx1200 => ParameterGroup::LaminaEbx1200,
            Fabric::Elt1800 => ParameterGroup::LaminaElt1800,
            Fabric::H7500 => ParameterGroup::LaminaH7500,
            Fabric::H7781 => ParameterGroup::LaminaH7781,
        }
    }

    /// Fibers at ±45 to the beam axis.
    pub fn is_bias(&self) -> bool {
        matches!(self, Fabric::Ebx1200)
    }

    fn suffix(&self) -> &'static str {
        &self.as_str()[self.as_str().len() - 4..]
    }

    /// Catalog names of modulus, strength, Poisson's ratio and toughness.
    pub fn param_names(&self) -> [String; 4] {
        let s = self.suffix();
        [format!("E{s}"), format!("X{s}"), format!("V{s}"), format!("G{s}")]
    }
}

/// Structured specimen description, read from TOML.
///
/// Lengths in inches. Strength-like proxy constants in ksi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecimenConfig {
    pub width: f64,
    /// Length of the constant-moment region between the loading pins.
    pub gauge_length: f64,
    pub metal_thickness: f64,
    pub ply_thickness: f64,
    /// Plies from the outer (free) surface to the one bonded to the metal.
    pub stack: Vec<Fabric>,
    /// Integration points through the metal thickness.
    pub metal_points: usize,
    pub steps: usize,
    /// Final curvature in 1/in. Derived from `outer_ply_overdrive` when absent.
    #[serde(default)]
    pub kappa_max: Option<f64>,
    /// Multiple of the outer ply's initiation strain reached at catalog means.
    pub outer_ply_overdrive: f64,
    /// Characteristic element length. Derived from `lc_safety_factor` when absent.
    #[serde(default)]
    pub characteristic_length: Option<f64>,
    pub lc_safety_factor: f64,
    /// Length of the region where fiber damage localizes.
    pub fiber_band_length: f64,
    /// Separation of a cohesive layer = gain × |axial stress jump| / K.
    pub cohesive_gain: f64,
    /// Normal share of the cohesive separation direction; the rest is Mode II.
    pub cohesive_normal_fraction: f64,
    /// Interface slip = gain × laminate thickness × mean plastic shear strain
    /// of the bias plies × (mean cohesive traction / reference traction)^a
    /// × (reference toughness / GiII)^b.
    pub interface_gain: f64,
    pub interface_reference_traction: f64,
    pub interface_traction_exponent: f64,
    /// lbf-in/in²
    pub interface_reference_toughness: f64,
    pub interface_toughness_exponent: f64,
    /// Share of the interface shear separation in Mode III.
    pub interface_mode_iii_fraction: f64,
}

impl Default for SpecimenConfig {
    fn default() -> Self {
        use Fabric::*;
        SpecimenConfig {
            width: 1.0,
            gauge_length: 6.0,
            metal_thickness: 0.25,
            ply_thickness: 0.16 / 12.0,
            stack: vec![
                H7781, Elt1800, Elt1800, Ebx1200, Ebx1200, Elt1800, Elt1800, Ebx1200, Ebx1200, Elt1800, Elt1800, H7500,
            ],
            metal_points: 10,
            steps: 200,
            kappa_max: None,
            outer_ply_overdrive: 1.5,
            characteristic_length: None,
            lc_safety_factor: 2.0,
            fiber_band_length: 2.0,
            cohesive_gain: 4.5,
            cohesive_normal_fraction: 0.2,
            interface_gain: 2.5,
            interface_reference_traction: 4.9,
            interface_traction_exponent: 3.5,
            interface_reference_toughness: 16.6,
            interface_toughness_exponent: 1.8,
            interface_mode_iii_fraction: 0.5,
        }
    }
}

impl SpecimenConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("gauge_length", self.gauge_length),
            ("metal_thickness", self.metal_thickness),
            ("ply_thickness", self.ply_thickness),
            ("outer_ply_overdrive", self.outer_ply_overdrive),
            ("lc_safety_factor", self.lc_safety_factor),
            ("fiber_band_length", self.fiber_band_length),
            ("cohesive_gain", self.cohesive_gain),
            ("interface_gain", self.interface_gain),
            ("interface_reference_traction", self.interface_reference_traction),
            ("interface_reference_toughness", self.interface_reference_toughness),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{name}` must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("interface_traction_exponent", self.interface_traction_exponent),
            ("interface_toughness_exponent", self.interface_toughness_exponent),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{name}` must be non-negative, got {v}")));
            }
        }
        for (name, v) in [
            ("cohesive_normal_fraction", self.cohesive_normal_fraction),
            ("interface_mode_iii_fraction", self.interface_mode_iii_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("`{name}` must lie in [0, 1], got {v}")));
            }
        }
        if self.stack.len() < 2 {
            return Err(Error::Config("stack needs at least two plies".into()));
        }
        if self.metal_points == 0 || self.steps == 0 {
            return Err(Error::Config("metal_points and steps must be positive".into()));
        }
        if let Some(k) = self.kappa_max {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("`kappa_max` must be positive, got {k}")));
            }
        }
        if let Some(l) = self.characteristic_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("`characteristic_length` must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

/// Index of each catalog parameter the simulation reads.
#[derive(Debug, Clone)]
pub(crate) struct ParamIndex {
    pub e: usize,
    pub a: usize,
    pub b: usize,
    pub n: usize,
    pub ec: usize,
    pub xt: usize,
    pub xs: usize,
    pub gi: usize,
    pub gii: usize,
    pub bk: usize,
    pub eic: usize,
    pub xit: usize,
    pub xis: usize,
    pub gii_i: usize,
    pub gi_i: usize,
    pub bk_i: usize,
    pub gs: usize,
    pub ss: usize,
    pub alpha12: usize,
    pub d12: usize,
    pub epsilon: usize,
    pub sigma_y: usize,
    pub c: usize,
    pub p: usize,
    /// modulus, strength, Poisson, toughness per ply in stack order
    pub plies: Vec<[usize; 4]>,
}

impl ParamIndex {
    fn new(catalog: &ParameterCatalog, stack: &[Fabric]) -> Result<Self> {
        let i = |n: &str| catalog.index_of(n);
        let plies = stack
            .iter()
            .map(|f| {
                let [e, x, v, g] = f.param_names();
                Ok([i(&e)?, i(&x)?, i(&v)?, i(&g)?])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamIndex {
            e: i("E")?,
            a: i("A")?,
            b: i("B")?,
            n: i("Aln")?,
            ec: i("EC")?,
            xt: i("XT")?,
            xs: i("XS")?,
            gi: i("GI")?,
            gii: i("GII")?,
            bk: i("BK")?,
            eic: i("EiC")?,
            xit: i("XiT")?,
            xis: i("XiS")?,
            gi_i: i("GiI")?,
            gii_i: i("GiII")?,
            bk_i: i("BKi")?,
            gs: i("GS")?,
            ss: i("SS")?,
            alpha12: i("alpha12")?,
            d12: i("d12")?,
            epsilon: i("epsilon")?,
            sigma_y: i("sigmaY")?,
            c: i("C")?,
            p: i("P")?,
            plies,
        })
    }
}

pub(crate) const MSI: f64 = 1.0e6;
pub(crate) const KSI: f64 = 1.0e3;

/// Immutable, admissible bend specimen.
#[derive(Debug, Clone)]
pub struct BendSpecimen {
    config: SpecimenConfig,
    l_c: f64,
    kappa_max: f64,
    pub(crate) index: ParamIndex,
}

impl BendSpecimen {
    /// Builds a specimen for the canonical catalog, deriving the
    /// characteristic length and final curvature when the config leaves
    /// them open. Rejects configurations that violate fiber-damage
    /// admissibility at catalog means.
    pub fn new(config: SpecimenConfig) -> Result<Self> {
        Self::with_catalog(config, ParameterCatalog::canonical())
    }

    pub fn with_catalog(config: SpecimenConfig, catalog: &ParameterCatalog) -> Result<Self> {
        config.validate()?;
        let index = ParamIndex::new(catalog, &config.stack)?;
        let means = catalog.means();

        let l_c = match config.characteristic_length {
            Some(l) => l,
            None => default_characteristic_length(&config, &index, &means, config.lc_safety_factor),
        };
        for (pos, (fabric, idx)) in config.stack.iter().zip(&index.plies).enumerate() {
            let [e, x, _, g] = *idx;
            FiberDamageLaw::new(&ply_label(pos, *fabric), means[x] * KSI, means[e] * MSI, means[g], l_c)?;
        }

        let mut spec = BendSpecimen {
            config,
            l_c,
            kappa_max: 0.0,
            index,
        };
        spec.kappa_max = match spec.config.kappa_max {
            Some(k) => k,
            None => {
                let geom = spec.geometry(&means);
                let outer = spec.config.stack[0];
                let [e, x, v, _] = spec.index.plies[0];
                let init_strain = if outer.is_bias() {
                    // shear yield of the bias ply governs first
                    2.0 * means[spec.index.sigma_y] * KSI / (2.0 * means[spec.index.gs] * MSI * (1.0 + means[v]))
                } else {
                    means[x] / means[e] * KSI / MSI
                };
                spec.config.outer_ply_overdrive * init_strain / (geom.ply_y[0] - geom.neutral_axis)
            }
        };
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(SpecimenConfig::load(path)?)
    }

    pub fn config(&self) -> &SpecimenConfig {
        &self.config
    }

    pub fn characteristic_length(&self) -> f64 {
        self.l_c
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn n_plies(&self) -> usize {
        self.config.stack.len()
    }

    pub fn n_cohesive(&self) -> usize {
        self.config.stack.len() - 1
    }

    pub fn laminate_thickness(&self) -> f64 {
        self.config.ply_thickness * self.config.stack.len() as f64
    }

    /// Uniform curvature schedule `0 = κ_0 < … < κ_max`.
    pub fn curvature_schedule(&self) -> Vec<f64> {
        let n = self.config.steps;
        (0..=n).map(|i| self.kappa_max * i as f64 / n as f64).collect()
    }

    /// Same specimen with another final curvature.
    pub fn with_kappa_max(&self, kappa_max: f64) -> Result<Self> {
        if !(kappa_max > 0.0 && kappa_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa_max must be positive, got {kappa_max}")));
        }
        let mut s = self.clone();
        s.kappa_max = kappa_max;
        s.config.kappa_max = Some(kappa_max);
        Ok(s)
    }

    /// Same specimen with another number of curvature steps.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        let mut s = self.clone();
        s.config.steps = steps;
        Ok(s)
    }

    /// Point coordinates and the elastic neutral axis for properties `x`.
    /// `y` runs downward from the top metal surface.
    pub fn geometry(&self, x: &ParamVector) -> Geometry {
        let c = &self.config;
        let nm = c.metal_points;
        let dy = c.metal_thickness / nm as f64;
        let metal_y: Vec<f64> = (0..nm).map(|i| (i as f64 + 0.5) * dy).collect();
        let n = c.stack.len();
        let ply_y: Vec<f64> = (0..n)
            .map(|i| c.metal_thickness + (n - i) as f64 * c.ply_thickness - 0.5 * c.ply_thickness)
            .collect();
        let cohesive_y: Vec<f64> = (0..n - 1)
            .map(|i| c.metal_thickness + (n - 1 - i) as f64 * c.ply_thickness)
            .collect();

        let mut ea = x[self.index.e] * c.metal_thickness;
        let mut eay = ea * 0.5 * c.metal_thickness;
        for (i, fabric) in c.stack.iter().enumerate() {
            let m = self.axial_modulus(x, i, *fabric) / MSI;
            ea += m * c.ply_thickness;
            eay += m * c.ply_thickness * ply_y[i];
        }
        Geometry {
            metal_y,
            metal_volume: dy * c.width * c.gauge_length,
            ply_y,
            ply_volume: c.ply_thickness * c.width * c.gauge_length,
            band_volume: c.ply_thickness * c.width * c.fiber_band_length,
            cohesive_y,
            interface_y: c.metal_thickness,
            area: c.width * c.gauge_length,
            neutral_axis: eay / ea,
        }
    }

    /// Initial axial modulus of ply `i` along the beam, in psi.
    pub(crate) fn axial_modulus(&self, x: &ParamVector, i: usize, fabric: Fabric) -> f64 {
        let [e, _, v, _] = self.index.plies[i];
        if fabric.is_bias() {
            0.5 * x[e] * MSI + x[self.index.gs] * MSI * (1.0 + x[v])
        } else {
            x[e] * MSI
        }
    }
}

/// Through-thickness coordinates and tributary measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub metal_y: Vec<f64>,
    pub metal_volume: f64,
    pub ply_y: Vec<f64>,
    pub ply_volume: f64,
    pub band_volume: f64,
    pub cohesive_y: Vec<f64>,
    pub interface_y: f64,
    pub area: f64,
    pub neutral_axis: f64,
}

pub(crate) fn ply_label(pos: usize, fabric: Fabric) -> String {
    format!("ply {} ({})", pos + 1, fabric.as_str())
}

/// Largest `L_c` keeping `G_f − U0·L_c > 0` for every ply at the corner of
/// the ±20% support with high strength, low modulus and low toughness,
/// divided by `safety`.
fn default_characteristic_length(config: &SpecimenConfig, index: &ParamIndex, means: &ParamVector, safety: f64) -> f64 {
    let (lo, hi) = SamplingDistribution::UniformPm20.support(1.0).expect("bounded");
    config
        .stack
        .iter()
        .zip(&index.plies)
        .map(|(_, [e, x, _, g])| {
            let strength = hi * means[*x] * KSI;
            let modulus = lo * means[*e] * MSI;
            let u0 = strength * strength / (2.0 * modulus);
            lo * means[*g] / u0
        })
        .fold(f64::INFINITY, f64::min)
        / safety
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_stack_and_derived_lengths() {
        let s = BendSpecimen::new(SpecimenConfig::default()).unwrap();
        assert_eq!(s.n_plies(), 12);
        assert_eq!(s.n_cohesive(), 11);
        assert_relative_eq!(s.laminate_thickness(), 0.16, max_relative = 1e-12);
        // H7781 governs: 0.8·100 / ((1.2·70e3)² / (2·0.8·4.4e6)) / 2
        let oracle = 80.0 / (84_000.0f64.powi(2) / 7.04e6) / 2.0;
        assert_relative_eq!(s.characteristic_length(), oracle, max_relative = 1e-12);
        let sched = s.curvature_schedule();
        assert_eq!(sched.len(), 201);
        assert_eq!(sched[0], 0.0);
        assert!(sched.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn kappa_max_hits_overdrive_at_means() {
        let s = BendSpecimen::new(SpecimenConfig::default()).unwrap();
        let means = ParameterCatalog::canonical().means();
        let g = s.geometry(&means);
        let strain = s.kappa_max() * (g.ply_y[0] - g.neutral_axis);
        assert_relative_eq!(strain, 1.5 * 70.0 / 4400.0, max_relative = 1e-12);
    }

    #[test]
    fn oversized_characteristic_length_is_rejected() {
        let cfg = SpecimenConfig {
            characteristic_length: Some(1.0),
            ..Default::default()
        };
        match BendSpecimen::new(cfg) {
            Err(Error::Admissibility { layer, margin }) => {
                assert!(layer.starts_with("ply "));
                assert!(margin < 0.0);
            }
            other => panic!("expected admissibility error, got {other:?}"),
        }
    }

    #[test]
    fn shipped_config_matches_default() {
        let text = include_str!("../../../../configs/specimen.toml");
        assert_eq!(SpecimenConfig::from_toml_str(text).unwrap(), SpecimenConfig::default());
        let round = SpecimenConfig::default().to_toml_string().unwrap();
        assert_eq!(SpecimenConfig::from_toml_str(&round).unwrap(), SpecimenConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            SpecimenConfig::from_toml_str("widht = 1.0"),
            Err(Error::Config(_))
        ));
    }
}
