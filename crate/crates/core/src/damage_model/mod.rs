//! Desk-scale four-point-bend source model.
//!
//! A constant-moment region is loaded by a prescribed curvature ramp with
//! linear strain through the thickness. Metal points follow Johnson–Cook
//! plasticity, lamina points follow continuum damage with shear plasticity,
//! and the inter-ply and metal/laminate bonds are cohesive points whose
//! separations are proxies driven by the surrounding plies. Dissipated
//! energy is accumulated per mechanism.

pub mod laws;
mod specimen;

pub use laws::*;
pub use specimen::{BendSpecimen, Fabric, Geometry, SpecimenConfig};

use specimen::{ply_label, KSI, MSI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::param_space::{Dataset, EnergyVector, ParamVector, ParameterCatalog, Provenance, SamplingDistribution, N_PARAMS};
use crate::sampling::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetalPointState {
    pub eps_p: f64,
    /// Plastic work density.
    pub dissipated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaminaPointState {
    pub d11: f64,
    pub d22: f64,
    pub d12: f64,
    /// Tensor plastic shear strain.
    pub eps12_p: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CohesivePointState {
    pub delta_max: f64,
    pub damage: f64,
    /// Energy over the tributary area.
    pub dissipated: f64,
}

/// All point states after one curvature step.
#[derive(Debug, Clone, PartialEq)]
pub struct BendSnapshot {
    pub kappa: f64,
    pub metal: Vec<MetalPointState>,
    pub plies: Vec<LaminaPointState>,
    pub cohesive: Vec<CohesivePointState>,
    pub interface: CohesivePointState,
    pub energy: EnergyVector,
}

/// Work bookkeeping of one lamina point, per unit volume.
#[derive(Debug, Clone, Copy, Default)]
struct LaminaWork {
    s11: f64,
    s22: f64,
    s12: f64,
    e11: f64,
    e22: f64,
    gamma: f64,
    gamma_elastic: f64,
    fiber_work: f64,
    shear_work: f64,
}

/// Material constants of one ply in psi and lbs/in.
#[derive(Debug, Clone, Copy)]
struct PlyProps {
    bias: bool,
    e: f64,
    nu: f64,
    fiber: FiberDamageLaw,
}

#[derive(Debug, Clone, Copy)]
struct ShearProps {
    g: f64,
    strength: f64,
    alpha12: f64,
    d12_max: f64,
    eps_max: f64,
    sigma_y: f64,
    c: f64,
    p: f64,
}

/// Energy dissipated by bending `specimen` with material parameters `x`
/// (catalog units), per mechanism, in lbf-in.
pub fn simulate_bend(x: &ParamVector, specimen: &BendSpecimen) -> Result<EnergyVector> {
    run(x, specimen, None)
}

/// Like [`simulate_bend`], also returning the state after every step.
pub fn simulate_bend_history(x: &ParamVector, specimen: &BendSpecimen) -> Result<(EnergyVector, Vec<BendSnapshot>)> {
    let mut history = Vec::with_capacity(specimen.config().steps + 1);
    let energy = run(x, specimen, Some(&mut history))?;
    Ok((energy, history))
}

/// Runs the source model on each point; rows keep input order and get ids
/// `(origin, 0..n)`.
pub fn simulate_points(points: &[ParamVector], specimen: &BendSpecimen, origin: &str) -> Result<Dataset> {
    let energies: Vec<EnergyVector> = points.par_iter().map(|x| simulate_bend(x, specimen)).collect::<Result<_>>()?;
    Ok(Dataset::from_rows(origin, Provenance::ToyModel, points.iter().copied().zip(energies).collect()))
}

/// Maps a 41-column unit design through `dist` and runs the source model.
pub fn simulate_design(
    design: &DesignMatrix,
    dist: &SamplingDistribution,
    specimen: &BendSpecimen,
    origin: &str,
) -> Result<Dataset> {
    if design.dim() != N_PARAMS {
        return Err(Error::DimensionMismatch {
            expected: N_PARAMS,
            got: design.dim(),
        });
    }
    dist.validate()?;
    let means = ParameterCatalog::canonical().means();
    let points: Vec<ParamVector> = design
        .rows()
        .map(|u| std::array::from_fn(|j| dist.quantile(means[j], u[j])))
        .collect();
    simulate_points(&points, specimen, origin)
}

fn check_inputs(x: &ParamVector, specimen: &BendSpecimen) -> Result<()> {
    let catalog = ParameterCatalog::canonical();
    for (i, v) in x.iter().enumerate() {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "parameter `{}` must be finite and positive, got {v}",
                catalog.name(i)
            )));
        }
    }
    let idx = &specimen.index;
    if x[idx.d12] >= 1.0 {
        return Err(Error::InvalidArgument(format!("maximum shear damage `d12` = {} must be below 1", x[idx.d12])));
    }
    for ply in &idx.plies {
        if x[ply[2]] >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "Poisson's ratio `{}` = {} must be below 1",
                catalog.name(ply[2]),
                x[ply[2]]
            )));
        }
    }
    Ok(())
}

fn non_finite(point: String, what: &str) -> Error {
    Error::NumericalFailure {
        point,
        message: format!("{what} is not finite"),
    }
}

fn run(x: &ParamVector, specimen: &BendSpecimen, mut history: Option<&mut Vec<BendSnapshot>>) -> Result<EnergyVector> {
    check_inputs(x, specimen)?;
    let cfg = specimen.config();
    let idx = &specimen.index;
    let geom = specimen.geometry(x);
    let l_c = specimen.characteristic_length();

    let plies: Vec<PlyProps> = cfg
        .stack
        .iter()
        .zip(&idx.plies)
        .enumerate()
        .map(|(pos, (fabric, [e, xs, v, g]))| {
            Ok(PlyProps {
                bias: fabric.is_bias(),
                e: x[*e] * MSI,
                nu: x[*v],
                fiber: FiberDamageLaw::new(&ply_label(pos, *fabric), x[*xs] * KSI, x[*e] * MSI, x[*g], l_c)?,
            })
        })
        .collect::<Result<_>>()?;
    let shear = ShearProps {
        g: x[idx.gs] * MSI,
        strength: x[idx.ss] * KSI,
        alpha12: x[idx.alpha12],
        d12_max: x[idx.d12],
        eps_max: x[idx.epsilon],
        sigma_y: x[idx.sigma_y] * KSI,
        c: x[idx.c] * MSI,
        p: x[idx.p],
    };
    let (e_metal, a, b, n) = (x[idx.e] * MSI, x[idx.a] * KSI, x[idx.b] * KSI, x[idx.n]);

    let resin = ResinProps {
        stiffness: x[idx.ec] * MSI / l_c,
        normal_strength: x[idx.xt] * KSI,
        shear_strength: x[idx.xs] * KSI,
        gic: x[idx.gi],
        giic: x[idx.gii],
        bk_exponent: x[idx.bk],
    };
    let fn_ = cfg.cohesive_normal_fraction;
    let cohesive_law = mixed_mode_law(&resin, [fn_, (1.0 - fn_ * fn_).max(0.0).sqrt(), 0.0])?;
    let iface_resin = ResinProps {
        stiffness: x[idx.eic] * MSI / l_c,
        normal_strength: x[idx.xit] * KSI,
        shear_strength: x[idx.xis] * KSI,
        gic: x[idx.gi_i],
        giic: x[idx.gii_i],
        bk_exponent: x[idx.bk_i],
    };
    let m3 = cfg.interface_mode_iii_fraction;
    let interface_law = mixed_mode_law(&iface_resin, [0.0, (1.0 - m3).sqrt(), m3.sqrt()])?;

    let bias_count = plies.iter().filter(|p| p.bias).count();
    let slip_scale = cfg.interface_gain
        * specimen.laminate_thickness()
        * (cfg.interface_reference_toughness / x[idx.gii_i]).powf(cfg.interface_toughness_exponent);
    let reference_traction = cfg.interface_reference_traction * KSI;

    let mut metal = vec![MetalPointState::default(); geom.metal_y.len()];
    let mut lamina = vec![LaminaPointState::default(); plies.len()];
    let mut work = vec![LaminaWork::default(); plies.len()];
    let mut cohesive = vec![CohesivePointState::default(); plies.len() - 1];
    let mut interface = CohesivePointState::default();
    let mut axial = vec![0.0; plies.len()];
    let mut energy = EnergyVector::default();

    for kappa in specimen.curvature_schedule() {
        let strain_at = |y: f64| kappa * (y - geom.neutral_axis);

        for (i, (state, y)) in metal.iter_mut().zip(&geom.metal_y).enumerate() {
            let eps_p = jc_return_map(strain_at(*y), state.eps_p, e_metal, a, b, n);
            if !eps_p.is_finite() {
                return Err(non_finite(format!("metal point {}", i + 1), "plastic strain"));
            }
            state.eps_p = eps_p;
            state.dissipated = jc_plastic_work(eps_p, a, b, n)?;
        }

        for (i, ply) in plies.iter().enumerate() {
            let eps = strain_at(geom.ply_y[i]).abs();
            axial[i] = update_lamina(ply, &shear, eps, &mut lamina[i], &mut work[i]);
            if !axial[i].is_finite() || !work[i].fiber_work.is_finite() || !work[i].shear_work.is_finite() {
                return Err(non_finite(ply_label(i, cfg.stack[i]), "lamina state"));
            }
        }

        let mut traction_sum = 0.0;
        for (j, state) in cohesive.iter_mut().enumerate() {
            let jump = (axial[j] - axial[j + 1]).abs();
            let delta = cfg.cohesive_gain * jump / cohesive_law.stiffness;
            update_cohesive(&cohesive_law, delta, geom.area, state);
            traction_sum += cohesive_law.traction(delta, state.delta_max);
            if !state.dissipated.is_finite() {
                return Err(non_finite(format!("cohesive layer {}", j + 1), "dissipated energy"));
            }
        }

        let mean_slip = if bias_count > 0 {
            lamina.iter().zip(&plies).filter(|(_, p)| p.bias).map(|(s, _)| 2.0 * s.eps12_p).sum::<f64>()
                / bias_count as f64
        } else {
            0.0
        };
        let mean_traction = traction_sum / cohesive.len() as f64;
        let slip = slip_scale * mean_slip * (mean_traction / reference_traction).powf(cfg.interface_traction_exponent);
        update_cohesive(&interface_law, slip, geom.area, &mut interface);
        if !interface.dissipated.is_finite() {
            return Err(non_finite("interface".into(), "dissipated energy"));
        }

        energy = tally(&geom, &metal, &lamina, &work, &cohesive, &interface);
        if let Some(h) = history.as_deref_mut() {
            h.push(BendSnapshot {
                kappa,
                metal: metal.clone(),
                plies: lamina.clone(),
                cohesive: cohesive.clone(),
                interface,
                energy,
            });
        }
    }
    Ok(energy)
}

fn update_cohesive(law: &CohesiveLaw, delta: f64, area: f64, state: &mut CohesivePointState) {
    state.delta_max = state.delta_max.max(delta);
    state.damage = law.damage(state.delta_max);
    state.dissipated = law.dissipated(state.delta_max) * area;
}

/// Advances one lamina point to axial strain `eps` (tension and compression
/// treated alike) and returns its nominal axial stress along the beam.
fn update_lamina(ply: &PlyProps, sh: &ShearProps, eps: f64, st: &mut LaminaPointState, w: &mut LaminaWork) -> f64 {
    // material-axis strains under a uniaxial beam strain
    let (e11, e22, e12) = if ply.bias {
        let e = 0.5 * (1.0 - ply.nu) * eps;
        (e, e, 0.5 * (1.0 + ply.nu) * eps)
    } else {
        (eps, -ply.nu * eps, 0.0)
    };

    let s_eff = lamina_effective_stress_from_strain(e11, e22, 0.0, ply.e, ply.nu, sh.g);
    st.d11 = st.d11.max(ply.fiber.damage(s_eff.s11.abs() / ply.fiber.strength()));
    st.d22 = st.d22.max(ply.fiber.damage(s_eff.s22.abs() / ply.fiber.strength()));
    let s11 = (1.0 - st.d11) * s_eff.s11;
    let s22 = (1.0 - st.d22) * s_eff.s22;

    let mut s12 = 0.0;
    if !st.failed && e12 > 0.0 {
        st.eps12_p = shear_return_map(e12, st.eps12_p, sh.g, sh.sigma_y, sh.c, sh.p);
        let tau_eff = 2.0 * sh.g * (e12 - st.eps12_p);
        st.d12 = st.d12.max(cdm_shear_damage(tau_eff / sh.strength, sh.alpha12, sh.d12_max));
        if st.eps12_p >= sh.eps_max || st.d12 >= sh.d12_max {
            st.failed = true;
        } else {
            s12 = (1.0 - st.d12) * tau_eff;
        }
    }
    let gamma = 2.0 * e12;
    let gamma_elastic = if st.failed { 0.0 } else { gamma - 2.0 * st.eps12_p };

    w.fiber_work += 0.5 * (w.s11 + s11) * (e11 - w.e11) + 0.5 * (w.s22 + s22) * (e22 - w.e22);
    w.shear_work += 0.5 * (w.s12 + s12) * (gamma - w.gamma);
    *w = LaminaWork {
        s11,
        s22,
        s12,
        e11,
        e22,
        gamma,
        gamma_elastic,
        ..*w
    };

    if ply.bias {
        0.5 * (s11 + s22) + s12
    } else {
        s11
    }
}

fn tally(
    geom: &Geometry,
    metal: &[MetalPointState],
    lamina: &[LaminaPointState],
    work: &[LaminaWork],
    cohesive: &[CohesivePointState],
    interface: &CohesivePointState,
) -> EnergyVector {
    let pm = metal.iter().map(|m| m.dissipated).sum::<f64>() * geom.metal_volume;
    let mut dl = 0.0;
    let mut pl = 0.0;
    for (st, w) in lamina.iter().zip(work) {
        // an undamaged point is elastic; skip the quadrature round-off
        if st.d11 > 0.0 || st.d22 > 0.0 {
            let fiber_stored = 0.5 * (w.s11 * w.e11 + w.s22 * w.e22);
            dl += (w.fiber_work - fiber_stored).max(0.0);
        }
        if st.eps12_p > 0.0 || st.d12 > 0.0 || st.failed {
            // unloading leaves the plastic shear strain; only the elastic part is recovered
            pl += (w.shear_work - 0.5 * w.s12 * w.gamma_elastic).max(0.0);
        }
    }
    let dc = cohesive.iter().map(|c| c.dissipated).sum::<f64>();
    EnergyVector::from_mechanisms(pl * geom.ply_volume, dl * geom.band_volume, dc, interface.dissipated, pm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn specimen() -> BendSpecimen {
        BendSpecimen::new(SpecimenConfig::default()).unwrap()
    }

    fn means() -> ParamVector {
        ParameterCatalog::canonical().means()
    }

    fn set(x: &mut ParamVector, name: &str, v: f64) {
        x[ParameterCatalog::canonical().index_of(name).unwrap()] = v;
    }

    fn get(x: &ParamVector, name: &str) -> f64 {
        x[ParameterCatalog::canonical().index_of(name).unwrap()]
    }

    #[test]
    fn metal_plasticity_dominates_at_means() {
        let e = simulate_bend(&means(), &specimen()).unwrap();
        for m in [e.pl, e.dl, e.dc, e.di] {
            assert!(m > 0.0 && m < e.pm, "{e:?}");
        }
        assert_eq!(e.ts, e.mechanism_sum());
    }

    #[test]
    fn elastic_run_dissipates_nothing() {
        let mut x = means();
        for name in ["A", "XT", "XS", "XiT", "XiS", "SS", "sigmaY", "X1200", "X1800", "X7500", "X7781"] {
            let v = get(&x, name) * 1e3;
            set(&mut x, name, v);
        }
        // keep fiber damage admissible at the raised strengths
        for name in ["G1200", "G1800", "G7500", "G7781", "GI", "GII", "GiI", "GiII"] {
            let v = get(&x, name) * 1e7;
            set(&mut x, name, v);
        }
        let e = simulate_bend(&x, &specimen()).unwrap();
        assert_eq!(e.as_array(), [0.0; 6]);
    }

    /// Smallest curvature at which `active` holds, by bisection.
    fn threshold(active: impl Fn(f64) -> bool) -> f64 {
        let (mut lo, mut hi) = (0.0, 10.0);
        assert!(active(hi));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if active(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn below_every_threshold_the_run_is_elastic() {
        let s = specimen();
        let x = means();
        let g = s.geometry(&x);
        let cat = ParameterCatalog::canonical();
        let strain = |k: f64, y: f64| (k * (y - g.neutral_axis)).abs();

        let (e_m, a) = (get(&x, "E") * MSI, get(&x, "A") * KSI);
        let metal = g
            .metal_y
            .iter()
            .map(|y| threshold(|k| e_m * strain(k, *y) >= a))
            .fold(f64::INFINITY, f64::min);

        let (gs, sy) = (get(&x, "GS") * MSI, get(&x, "sigmaY") * KSI);
        let mut lamina = f64::INFINITY;
        for (i, fabric) in s.config().stack.iter().enumerate() {
            let [e, xs, v] = fabric.param_names()[..3].iter().map(|n| x[cat.index_of(n).unwrap()]).collect::<Vec<_>>()[..]
            else {
                unreachable!()
            };
            let y = g.ply_y[i];
            let t = if fabric.is_bias() {
                threshold(|k| gs * (1.0 + v) * strain(k, y) >= sy)
            } else {
                threshold(|k| e * MSI * strain(k, y) >= xs * KSI)
            };
            lamina = lamina.min(t);
        }

        let resin = ResinProps {
            stiffness: get(&x, "EC") * MSI / s.characteristic_length(),
            normal_strength: get(&x, "XT") * KSI,
            shear_strength: get(&x, "XS") * KSI,
            gic: get(&x, "GI"),
            giic: get(&x, "GII"),
            bk_exponent: get(&x, "BK"),
        };
        let f = s.config().cohesive_normal_fraction;
        let law = mixed_mode_law(&resin, [f, (1.0 - f * f).sqrt(), 0.0]).unwrap();
        let mut cohesive = f64::INFINITY;
        for j in 0..s.n_cohesive() {
            let stack = &s.config().stack;
            let (m0, m1) = (s.axial_modulus(&x, j, stack[j]), s.axial_modulus(&x, j + 1, stack[j + 1]));
            let t = threshold(|k| {
                let jump = (m0 * strain(k, g.ply_y[j]) - m1 * strain(k, g.ply_y[j + 1])).abs();
                s.config().cohesive_gain * jump / law.stiffness >= law.delta0
            });
            cohesive = cohesive.min(t);
        }

        let damage_threshold = lamina.min(cohesive);
        assert!(damage_threshold < s.kappa_max());

        let e = simulate_bend(&x, &s.with_kappa_max(0.5 * metal.min(damage_threshold)).unwrap()).unwrap();
        assert_eq!(e.as_array(), [0.0; 6]);

        let just_below = s.with_kappa_max(damage_threshold * (1.0 - 1e-9)).unwrap();
        let e = simulate_bend(&x, &just_below).unwrap();
        assert_eq!([e.pl, e.dl, e.dc, e.di], [0.0; 4]);
        if metal < damage_threshold {
            assert!(e.pm > 0.0);
        }
        let just_above = s.with_kappa_max(damage_threshold * 1.01).unwrap();
        let e = simulate_bend(&x, &just_above).unwrap();
        assert!(e.pl + e.dl + e.dc > 0.0);
    }

    #[test]
    fn states_are_monotone_over_the_history() {
        let (energy, history) = simulate_bend_history(&means(), &specimen()).unwrap();
        assert_eq!(history.len(), 201);
        assert_eq!(history.last().unwrap().energy, energy);
        for w in history.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            for (p, q) in a.metal.iter().zip(&b.metal) {
                assert!(q.eps_p >= p.eps_p && q.dissipated >= p.dissipated);
            }
            for (p, q) in a.plies.iter().zip(&b.plies) {
                assert!(q.d11 >= p.d11 && q.d22 >= p.d22 && q.d12 >= p.d12 && q.eps12_p >= p.eps12_p);
                assert!(!p.failed || q.failed);
            }
            for (p, q) in a.cohesive.iter().chain([&a.interface]).zip(b.cohesive.iter().chain([&b.interface])) {
                assert!(q.damage >= p.damage && q.delta_max >= p.delta_max);
            }
            for v in b.energy.as_array() {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn refining_the_schedule_changes_little() {
        let s = specimen();
        let coarse = simulate_bend(&means(), &s).unwrap();
        let fine = simulate_bend(&means(), &s.with_steps(2 * s.config().steps).unwrap()).unwrap();
        for (c, f) in coarse.as_array().iter().zip(fine.as_array()) {
            assert!((c - f).abs() <= 0.01 * f.abs(), "{coarse:?} vs {fine:?}");
        }
    }

    #[test]
    fn cohesive_point_caps_at_full_toughness() {
        let law = CohesiveLaw::new(2.5e8, 4900.0, 16.6).unwrap();
        let mut st = CohesivePointState::default();
        update_cohesive(&law, 0.5 * law.delta_f, 6.0, &mut st);
        assert!(st.dissipated < 16.6 * 6.0);
        update_cohesive(&law, 2.0 * law.delta_f, 6.0, &mut st);
        assert_relative_eq!(st.dissipated, 16.6 * 6.0, max_relative = 1e-6);
        assert_eq!(st.damage, 1.0);
        update_cohesive(&law, 0.0, 6.0, &mut st);
        assert_eq!(st.delta_max, 2.0 * law.delta_f);
    }

    #[test]
    fn inadmissible_point_is_reported_by_layer() {
        let mut x = means();
        set(&mut x, "G7781", 1.0);
        match simulate_bend(&x, &specimen()) {
            Err(Error::Admissibility { layer, .. }) => assert_eq!(layer, "ply 1 (H7781)"),
            other => panic!("expected admissibility error, got {other:?}"),
        }
        let mut x = means();
        set(&mut x, "A", f64::NAN);
        assert!(matches!(simulate_bend(&x, &specimen()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn disbond_grows_with_hardening_exponent() {
        let s = specimen();
        let mut lo = means();
        let mut hi = means();
        set(&mut lo, "P", 0.729 * 0.8);
        set(&mut hi, "P", 0.729 * 1.2);
        let (a, b) = (simulate_bend(&lo, &s).unwrap(), simulate_bend(&hi, &s).unwrap());
        assert!(b.di / b.ts > a.di / a.ts);
    }
}
