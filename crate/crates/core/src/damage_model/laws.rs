//! Constitutive laws: Johnson–Cook hardening, lamina continuum damage,
//! cohesive traction–separation with quadratic initiation and
//! Benzeggagh–Kenane mixed-mode toughness.
//!
//! Functions are unit-agnostic; callers keep units consistent.

use crate::error::{Error, Result};

/// Johnson–Cook flow stress `A + B·ε_p^n`.
pub fn jc_stress(eps_p: f64, a: f64, b: f64, n: f64) -> Result<f64> {
    if !(eps_p >= 0.0) {
        return Err(Error::InvalidArgument(format!("plastic strain must be >= 0, got {eps_p}")));
    }
    Ok(a + b * eps_p.powf(n))
}

/// Plastic work density `∫₀^ε_p σ̄ dε = A·ε_p + B·ε_p^(n+1)/(n+1)`.
pub fn jc_plastic_work(eps_p: f64, a: f64, b: f64, n: f64) -> Result<f64> {
    if !(eps_p >= 0.0) {
        return Err(Error::InvalidArgument(format!("plastic strain must be >= 0, got {eps_p}")));
    }
    Ok(a * eps_p + b * eps_p.powf(n + 1.0) / (n + 1.0))
}

/// Plastic strain reached when a monotone uniaxial total strain of
/// magnitude `eps` is applied to a point with prior plastic strain
/// `eps_p_old`. Solves `E·(ε − p) = A + B·p^n` on `[eps_p_old, ε]`.
pub fn jc_return_map(eps: f64, eps_p_old: f64, e: f64, a: f64, b: f64, n: f64) -> f64 {
    let eps = eps.abs();
    let residual = |p: f64| e * (eps - p) - a - b * p.powf(n);
    if residual(eps_p_old) <= 0.0 {
        return eps_p_old;
    }
    bracketed_root(residual, eps_p_old, eps)
}

/// Root of a decreasing function with `f(lo) > 0 >= f(hi)`, by bisection
/// polished with secant steps that stay inside the bracket.
pub(crate) fn bracketed_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_hi > 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let width = hi - lo;
        if width <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        let secant = lo + f_lo * width / (f_lo - f_hi);
        let mid = 0.5 * (lo + hi);
        // fall back to bisection when the secant point hugs an end
        let x = if secant > lo + 0.05 * width && secant < hi - 0.05 * width {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if fx == 0.0 {
            return x;
        }
    }
    0.5 * (lo + hi)
}

/// In-plane stress components `(σ11, σ22, σ12)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneStress {
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
}

/// Lamina damage variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaminaDamage {
    pub d11: f64,
    pub d22: f64,
    pub d12: f64,
}

/// Effective stress `σ̄_ij = σ_ij / (1 − d_ij)`, componentwise.
pub fn cdm_effective_stress(sigma: PlaneStress, d: LaminaDamage) -> Result<PlaneStress> {
    let scale = |s: f64, d: f64, component: &'static str| -> Result<f64> {
        if d >= 1.0 {
            return Err(Error::Singularity { component });
        }
        if !(d >= 0.0) {
            return Err(Error::InvalidArgument(format!("damage d{component} = {d} is negative")));
        }
        Ok(s / (1.0 - d))
    };
    Ok(PlaneStress {
        s11: scale(sigma.s11, d.d11, "11")?,
        s22: scale(sigma.s22, d.d22, "22")?,
        s12: scale(sigma.s12, d.d12, "12")?,
    })
}

/// Effective (undamaged) stress from strain by inverting the plane-stress
/// compliance, for a balanced fabric (`E11 = E22 = e`, `ν21 = ν12 = nu`).
/// `e12` is the tensor elastic shear strain.
pub fn lamina_effective_stress_from_strain(e11: f64, e22: f64, e12: f64, e: f64, nu: f64, g12: f64) -> PlaneStress {
    let q = e / (1.0 - nu * nu);
    PlaneStress {
        s11: q * (e11 + nu * e22),
        s22: q * (e22 + nu * e11),
        s12: 2.0 * g12 * e12,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    D11,
    D22,
    D12,
}

/// First direction, in the order 11, 22, 12, whose ratio `|σ̄|/X` reaches 1.
/// Tension and compression share the same strength.
pub fn cdm_initiation(sigma_eff: PlaneStress, x11: f64, x22: f64, x12: f64) -> Option<Direction> {
    [
        (sigma_eff.s11, x11, Direction::D11),
        (sigma_eff.s22, x22, Direction::D22),
        (sigma_eff.s12, x12, Direction::D12),
    ]
    .into_iter()
    .find(|(s, x, _)| s.abs() / x >= 1.0)
    .map(|(_, _, d)| d)
}

/// Exponential fiber damage law for one lamina direction, with the
/// characteristic-length admissibility `G_f − U0·L_c > 0` checked once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberDamageLaw {
    strength: f64,
    modulus: f64,
    g_f: f64,
    l_c: f64,
    /// `2·U0·L_c / (G_f − U0·L_c)`
    rate: f64,
}

impl FiberDamageLaw {
    pub fn new(layer: &str, strength: f64, modulus: f64, g_f: f64, l_c: f64) -> Result<Self> {
        let u0 = strength * strength / (2.0 * modulus);
        let margin = g_f - u0 * l_c;
        if !(margin > 0.0) {
            return Err(Error::Admissibility {
                layer: layer.to_string(),
                margin,
            });
        }
        Ok(FiberDamageLaw {
            strength,
            modulus,
            g_f,
            l_c,
            rate: 2.0 * u0 * l_c / margin,
        })
    }

    /// Elastic energy density at initiation, `X² / (2E)`.
    pub fn u0(&self) -> f64 {
        self.strength * self.strength / (2.0 * self.modulus)
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Energy density dissipated at complete failure, `G_f / L_c`.
    pub fn full_dissipation(&self) -> f64 {
        self.g_f / self.l_c
    }

    /// Damage for stress ratio `k = σ̄/X`; zero below initiation.
    pub fn damage(&self, k: f64) -> f64 {
        if k <= 1.0 {
            return 0.0;
        }
        1.0 - (-self.rate * (k - 1.0)).exp() / k
    }
}

/// `d = 1 − (1/k)·exp(−2·U0·L_c·(k−1)/(G_f − U0·L_c))` with `U0 = X²/(2E)`.
pub fn cdm_damage_evolution(k: f64, x: f64, e: f64, g_f: f64, l_c: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::InvalidArgument(format!("stress ratio k = {k} is below initiation")));
    }
    Ok(FiberDamageLaw::new("lamina", x, e, g_f, l_c)?.damage(k))
}

/// Matrix shear damage `clamp(α12·ln k12, 0, d12_max)`.
pub fn cdm_shear_damage(k12: f64, alpha12: f64, d12_max: f64) -> f64 {
    if k12 <= 1.0 {
        return 0.0;
    }
    (alpha12 * k12.ln()).clamp(0.0, d12_max)
}

/// Ludwik–Hollomon shear hardening `σ̃_y + C·(ε12_p)^P`.
pub fn cdm_shear_hardening(eps12_p: f64, sigma_y: f64, c: f64, p: f64) -> Result<f64> {
    if !(eps12_p >= 0.0) {
        return Err(Error::InvalidArgument(format!("plastic shear strain must be >= 0, got {eps12_p}")));
    }
    Ok(sigma_y + c * eps12_p.powf(p))
}

/// Plastic shear strain (tensor) for total tensor shear strain `eps12`,
/// solving `2G·(ε12 − p) = σ̃_y + C·p^P` on `[p_old, ε12]`.
pub fn shear_return_map(eps12: f64, p_old: f64, g12: f64, sigma_y: f64, c: f64, p_exp: f64) -> f64 {
    let eps12 = eps12.abs();
    let residual = |p: f64| 2.0 * g12 * (eps12 - p) - sigma_y - c * p.powf(p_exp);
    if residual(p_old) <= 0.0 {
        return p_old;
    }
    bracketed_root(residual, p_old, eps12)
}

/// Bilinear (triangular) traction–separation law for a single effective mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesiveLaw {
    pub stiffness: f64,
    pub t0: f64,
    pub gc: f64,
    pub delta0: f64,
    pub delta_f: f64,
}

impl CohesiveLaw {
    pub fn new(stiffness: f64, t0: f64, gc: f64) -> Result<Self> {
        if !(stiffness > 0.0 && t0 > 0.0 && gc > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cohesive law needs positive K, t0, Gc (got {stiffness}, {t0}, {gc})"
            )));
        }
        let delta0 = t0 / stiffness;
        let delta_f = 2.0 * gc / t0;
        if !(delta_f > delta0) {
            return Err(Error::CohesiveParameterization { delta_0: delta0, delta_f });
        }
        Ok(CohesiveLaw {
            stiffness,
            t0,
            gc,
            delta0,
            delta_f,
        })
    }

    /// Traction on the monotone loading envelope.
    pub fn envelope(&self, delta: f64) -> f64 {
        if delta <= self.delta0 {
            self.stiffness * delta
        } else if delta < self.delta_f {
            self.t0 * (delta - self.delta_f) / (self.delta0 - self.delta_f)
        } else {
            0.0
        }
    }

    /// Scalar damage after reaching `delta_max` (secant-stiffness loss).
    pub fn damage(&self, delta_max: f64) -> f64 {
        if delta_max <= self.delta0 {
            0.0
        } else if delta_max >= self.delta_f {
            1.0
        } else {
            self.delta_f * (delta_max - self.delta0) / (delta_max * (self.delta_f - self.delta0))
        }
    }

    /// Traction at `delta` given the history maximum `delta_max`: the
    /// envelope when loading, a secant through the origin when unloading.
    pub fn traction(&self, delta: f64, delta_max: f64) -> f64 {
        if delta >= delta_max {
            return self.envelope(delta);
        }
        (1.0 - self.damage(delta_max)) * self.stiffness * delta
    }

    /// Energy per unit area dissipated after reaching `delta_max`: work
    /// along the envelope minus what a secant unload recovers.
    pub fn dissipated(&self, delta_max: f64) -> f64 {
        if delta_max <= self.delta0 {
            return 0.0;
        }
        if delta_max >= self.delta_f {
            return self.gc;
        }
        let t = self.envelope(delta_max);
        let work = 0.5 * self.t0 * self.delta0 + 0.5 * (self.t0 + t) * (delta_max - self.delta0);
        work - 0.5 * t * delta_max
    }
}

/// Traction on the loading envelope of the triangular law.
pub fn czm_traction(delta: f64, stiffness: f64, t0: f64, gc: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("separation must be >= 0, got {delta}")));
    }
    Ok(CohesiveLaw::new(stiffness, t0, gc)?.envelope(delta))
}

/// Left side of the quadratic initiation criterion; Mode I is Macaulay
/// bracketed so compression does not contribute.
pub fn czm_quadratic_index(t: [f64; 3], t0: [f64; 3]) -> f64 {
    let ti = t[0].max(0.0) / t0[0];
    let tii = t[1] / t0[1];
    let tiii = t[2] / t0[2];
    ti * ti + tii * tii + tiii * tiii
}

/// Whether the quadratic criterion has reached 1. Tractions are
/// `[t_I, t_II, t_III]`, initiation stresses likewise.
pub fn czm_initiation(t: [f64; 3], t0: [f64; 3]) -> bool {
    // allow the last ulp so exact boundary cases initiate
    czm_quadratic_index(t, t0) >= 1.0 - 4.0 * f64::EPSILON
}

/// Benzeggagh–Kenane mixed-mode critical energy release rate.
pub fn bk_mixed_mode_gc(gi: f64, gii: f64, giii: f64, gic: f64, giic: f64, eta: f64) -> Result<f64> {
    if gi < 0.0 || gii < 0.0 || giii < 0.0 {
        return Err(Error::InvalidArgument("energy release rates must be >= 0".into()));
    }
    let total = gi + gii + giii;
    if total <= 0.0 {
        return Err(Error::UndefinedModeMix);
    }
    Ok(gic + (giic - gic) * ((gii + giii) / total).powf(eta))
}

/// Resin properties of one cohesive layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResinProps {
    pub stiffness: f64,
    pub normal_strength: f64,
    pub shear_strength: f64,
    pub gic: f64,
    pub giic: f64,
    pub bk_exponent: f64,
}

/// Collapses a fixed mixed-mode separation direction onto a single
/// effective triangular law: the quadratic criterion fixes the effective
/// initiation separation and Benzeggagh–Kenane fixes the toughness.
/// `direction` is `[normal, shear II, shear III]`; it need not be unit length.
pub fn mixed_mode_law(resin: &ResinProps, direction: [f64; 3]) -> Result<CohesiveLaw> {
    let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::UndefinedModeMix);
    }
    let [cn, c2, c3] = direction.map(|c| c / norm);
    let cn = cn.max(0.0);
    let k = resin.stiffness;
    let index = czm_quadratic_index(
        [k * cn, k * c2, k * c3],
        [resin.normal_strength, resin.shear_strength, resin.shear_strength],
    );
    if !(index > 0.0) {
        return Err(Error::UndefinedModeMix);
    }
    // separation per unit effective opening at which the criterion hits 1
    let delta0 = 1.0 / index.sqrt();
    let t0 = k * delta0;
    let gc = bk_mixed_mode_gc(cn * cn, c2 * c2, c3 * c3, resin.gic, resin.giic, resin.bk_exponent)?;
    CohesiveLaw::new(k, t0, gc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // aluminum constants in ksi
    const A: f64 = 29.8;
    const B: f64 = 103.6;
    const N: f64 = 0.607;

    #[test]
    fn jc_stress_values() {
        assert_eq!(jc_stress(0.0, A, B, N).unwrap(), 29.8);
        assert_relative_eq!(jc_stress(1.0, A, B, N).unwrap(), 133.4, max_relative = 1e-14);
        // frozen value computed outside the crate
        let oracle = A + B * (0.607f64 * 0.2f64.ln()).exp();
        assert_relative_eq!(jc_stress(0.2, A, B, N).unwrap(), oracle, max_relative = 1e-14);
        assert_relative_eq!(oracle, 68.801_828_005_921, max_relative = 1e-12);
        assert!(jc_stress(-1e-3, A, B, N).is_err());
    }

    #[test]
    fn jc_work_matches_quadrature_and_derivative() {
        assert_eq!(jc_plastic_work(0.0, A, B, N).unwrap(), 0.0);
        let eps = 0.35;
        let steps = 100_000;
        let h = eps / steps as f64;
        let mut trap = 0.0;
        for i in 0..steps {
            let a = jc_stress(i as f64 * h, A, B, N).unwrap();
            let b = jc_stress((i + 1) as f64 * h, A, B, N).unwrap();
            trap += 0.5 * (a + b) * h;
        }
        assert_relative_eq!(jc_plastic_work(eps, A, B, N).unwrap(), trap, max_relative = 1e-8);

        let d = 1e-6;
        let fd = (jc_plastic_work(eps + d, A, B, N).unwrap() - jc_plastic_work(eps - d, A, B, N).unwrap()) / (2.0 * d);
        assert_relative_eq!(fd, jc_stress(eps, A, B, N).unwrap(), max_relative = 1e-6);
    }

    #[test]
    fn jc_return_map_satisfies_yield() {
        let e = 10_100.0;
        let p = jc_return_map(0.015, 0.0, e, A, B, N);
        assert!(p > 0.0 && p < 0.015);
        assert_relative_eq!(e * (0.015 - p), jc_stress(p, A, B, N).unwrap(), max_relative = 1e-10);
        // below yield nothing changes
        assert_eq!(jc_return_map(0.002, 0.0, e, A, B, N), 0.0);
        // no reversal of plastic flow
        assert_eq!(jc_return_map(0.01, p, e, A, B, N), p);
    }

    #[test]
    fn effective_stress() {
        let s = PlaneStress {
            s11: 10.0,
            s22: -3.0,
            s12: 2.0,
        };
        assert_eq!(cdm_effective_stress(s, LaminaDamage::default()).unwrap(), s);
        let e = cdm_effective_stress(
            s,
            LaminaDamage {
                d11: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(e.s11, 20.0);
        assert!(matches!(
            cdm_effective_stress(s, LaminaDamage { d22: 1.0, ..Default::default() }),
            Err(Error::Singularity { component: "22" })
        ));
    }

    #[test]
    fn initiation_order_and_boundary() {
        let x = (53.0, 53.0, 5.16);
        let s = PlaneStress {
            s11: 53.0,
            s22: 0.0,
            s12: 0.0,
        };
        assert_eq!(cdm_initiation(s, x.0, x.1, x.2), Some(Direction::D11));
        let s = PlaneStress {
            s11: 0.99 * 53.0,
            s22: -0.99 * 53.0,
            s12: 0.99 * 5.16,
        };
        assert_eq!(cdm_initiation(s, x.0, x.1, x.2), None);
        let s = PlaneStress {
            s11: 1.0,
            s22: 1.0,
            s12: 6.0,
        };
        assert_eq!(cdm_initiation(s, x.0, x.1, x.2), Some(Direction::D12));
    }

    #[test]
    fn initiation_on_a_ramp_matches_bisection() {
        // σ̄11 = E·ε on a strain ramp; analytic initiation strain X/E
        let (e, x) = (2800.0, 53.0);
        let mut lo = 0.0;
        let mut hi = 0.1;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let s = PlaneStress {
                s11: e * mid,
                ..Default::default()
            };
            if cdm_initiation(s, x, x, 5.16).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((hi - x / e).abs() < 1e-6);
    }

    #[test]
    fn damage_evolution_values() {
        // E-LT 1800 in psi and lbs/in
        let (x, e, gf) = (53_000.0, 2.8e6, 150.0);
        assert_eq!(cdm_damage_evolution(1.0, x, e, gf, 0.04).unwrap(), 0.0);
        // independent evaluation: U0 = 53000²/(2·2.8e6) = 501.607142857...
        let u0 = 53_000.0f64.powi(2) / 5.6e6;
        let lc = 0.04;
        let oracle = 1.0 - (1.0 / 1.5) * (-(2.0 * u0 * lc / (gf - u0 * lc)) * 0.5).exp();
        let d = cdm_damage_evolution(1.5, x, e, gf, lc).unwrap();
        assert_relative_eq!(d, oracle, max_relative = 1e-14);
        assert_relative_eq!(d, 0.428_723_602_350_117, max_relative = 1e-12);

        let mut prev = 0.0;
        for i in 0..2000 {
            let k = 1.0 + i as f64 * 0.05;
            let d = cdm_damage_evolution(k, x, e, gf, lc).unwrap();
            assert!(d >= prev && d < 1.0);
            prev = d;
        }
        assert!(prev > 0.99);
        assert!(matches!(
            cdm_damage_evolution(1.2, x, e, gf, 1.0),
            Err(Error::Admissibility { .. })
        ));
        assert!(cdm_damage_evolution(0.5, x, e, gf, lc).is_err());
    }

    #[test]
    fn shear_laws() {
        assert_eq!(cdm_shear_damage(1.0, 0.2767, 0.714), 0.0);
        assert_relative_eq!(cdm_shear_damage(std::f64::consts::E, 0.2767, 0.714), 0.2767, max_relative = 1e-15);
        assert_eq!(cdm_shear_damage(1e9, 0.2767, 0.714), 0.714);
        assert_eq!(cdm_shear_hardening(0.0, 5.16, 650.0, 0.729).unwrap(), 5.16);
        let p = shear_return_map(0.0115, 0.0, 800.0, 5.16, 650.0, 0.729);
        assert_relative_eq!(
            2.0 * 800.0 * (0.0115 - p),
            cdm_shear_hardening(p, 5.16, 650.0, 0.729).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn czm_envelope_points() {
        let (k, t0, gc) = (1.0e5, 4.9, 16.6e-3);
        let law = CohesiveLaw::new(k, t0, gc).unwrap();
        assert_relative_eq!(czm_traction(law.delta0, k, t0, gc).unwrap(), t0, max_relative = 1e-14);
        assert_eq!(czm_traction(law.delta_f, k, t0, gc).unwrap(), 0.0);
        assert!(matches!(
            CohesiveLaw::new(1.0, 10.0, 1.0),
            Err(Error::CohesiveParameterization { .. })
        ));
    }

    #[test]
    fn czm_area_is_gc() {
        let (k, t0, gc) = (2.5e8, 4900.0, 16.6);
        let law = CohesiveLaw::new(k, t0, gc).unwrap();
        // integrate each linear branch finely
        let n = 200_000;
        let mut area = 0.0;
        for (a, b) in [(0.0, law.delta0), (law.delta0, law.delta_f)] {
            let h = (b - a) / n as f64;
            for i in 0..n {
                let x0 = a + i as f64 * h;
                area += 0.5 * (law.envelope(x0) + law.envelope(x0 + h)) * h;
            }
        }
        assert_relative_eq!(area, gc, max_relative = 1e-6);
        assert_relative_eq!(law.dissipated(law.delta_f), gc, max_relative = 1e-12);
        assert_eq!(law.dissipated(0.5 * law.delta0), 0.0);
    }

    #[test]
    fn czm_unloading_is_secant() {
        let law = CohesiveLaw::new(100.0, 1.0, 1.0).unwrap();
        let dmax = 0.5 * (law.delta0 + law.delta_f);
        let t_peak = law.envelope(dmax);
        assert_relative_eq!(law.traction(0.5 * dmax, dmax), 0.5 * t_peak, max_relative = 1e-12);
        assert_eq!(law.traction(0.0, dmax), 0.0);
    }

    #[test]
    fn quadratic_initiation() {
        let t0 = [7.6, 4.9, 4.9];
        assert!(czm_initiation([7.6, 0.0, 0.0], t0));
        assert!(!czm_initiation([-100.0, 0.0, 0.0], t0));
        let seventy = [0.7 * 7.6, 0.7 * 4.9, 0.7 * 4.9];
        assert_relative_eq!(czm_quadratic_index(seventy, t0), 1.47, max_relative = 1e-12);
        assert!(czm_initiation(seventy, t0));
        assert!(czm_initiation([0.6 * 7.6, 0.8 * 4.9, 0.0], t0));
        assert!(!czm_initiation([0.5 * 7.6, 0.5 * 4.9, 0.0], t0));
    }

    #[test]
    fn bk_values() {
        assert_eq!(bk_mixed_mode_gc(1.0, 0.0, 0.0, 7.6, 16.6, 2.6).unwrap(), 7.6);
        assert_relative_eq!(bk_mixed_mode_gc(0.0, 2.0, 1.0, 7.6, 16.6, 2.6).unwrap(), 16.6, max_relative = 1e-15);
        let oracle = 9.084_446_399_619_505;
        assert_relative_eq!(bk_mixed_mode_gc(3.0, 3.0, 0.0, 7.6, 16.6, 2.6).unwrap(), oracle, max_relative = 1e-14);
        assert!(matches!(
            bk_mixed_mode_gc(0.0, 0.0, 0.0, 7.6, 16.6, 2.6),
            Err(Error::UndefinedModeMix)
        ));
    }

    #[test]
    fn mixed_mode_reduces_to_pure_modes() {
        let resin = ResinProps {
            stiffness: 1e4,
            normal_strength: 7.6,
            shear_strength: 4.9,
            gic: 7.6e-3,
            giic: 16.6e-3,
            bk_exponent: 2.6,
        };
        let law = mixed_mode_law(&resin, [1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(law.t0, 7.6, max_relative = 1e-12);
        assert_relative_eq!(law.gc, 7.6e-3, max_relative = 1e-12);
        let law = mixed_mode_law(&resin, [0.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(law.t0, 4.9, max_relative = 1e-12);
        assert_relative_eq!(law.gc, 16.6e-3, max_relative = 1e-12);
        // on the initiation point the quadratic criterion is exactly 1
        let law = mixed_mode_law(&resin, [0.3, 0.9, 0.1]).unwrap();
        let n = (0.09f64 + 0.81 + 0.01).sqrt();
        let t = [0.3, 0.9, 0.1].map(|c| resin.stiffness * law.delta0 * c / n);
        assert_relative_eq!(czm_quadratic_index(t, [7.6, 4.9, 4.9]), 1.0, max_relative = 1e-12);
    }
}
