//! Mean dislocation density material model.
//!
//! The model tracks one internal state variable, the mean dislocation
//! density `rho`. Under constant temperature and strain rate the density
//! evolves through three competing mechanisms: athermal storage
//! (`~ sqrt(rho)`), strain-driven annihilation (`~ rho`) and
//! diffusion-controlled static recovery towards an equilibrium density
//! (`~ rho^2 - rho_eq^2`). Flow stress is a Taylor-type function of
//! `sqrt(rho)` plus a sub-grain term.
//!
//! The three calibration parameters scale the mechanisms: `A` divides the
//! storage term, `B` scales annihilation and `C` scales recovery. Search
//! runs in the exponential parameterization `(u, v, w)` where
//! `1/A = exp(u)`, `B = exp(v)/A` and `C = exp(w)/A`, which makes the
//! useful range of each parameter a plain box.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CELSIUS_TO_KELVIN: f64 = 273.15;

/// Box for `u` in the exponential parameterization.
pub const U_BOUNDS: (f64, f64) = (-15.0, 0.0);
/// Box for `v`.
pub const V_BOUNDS: (f64, f64) = (-15.0, 15.0);
/// Box for `w`.
pub const W_BOUNDS: (f64, f64) = (-15.0, 0.0);

/// Material and physical constants. Stresses in MPa, lengths in metres,
/// densities in 1/m^2, energies in J. The shear modulus is held in MPa so
/// stress comes out in MPa directly; the recovery term rescales it to Pa
/// internally where it meets Boltzmann's constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialConstants {
    /// Taylor factor.
    #[serde(rename = "M")]
    pub m: f64,
    /// Shear modulus [MPa].
    #[serde(rename = "G")]
    pub g: f64,
    /// Burgers vector magnitude [m].
    pub b: f64,
    /// Sub-grain size [m].
    pub delta: f64,
    /// Critical annihilation distance [m].
    pub d_ann: f64,
    /// Diffusivity pre-exponential [m^2/s].
    #[serde(rename = "D0")]
    pub d0: f64,
    /// Diffusion activation energy [J/mol].
    #[serde(rename = "Q_D")]
    pub q_d: f64,
    /// Gas constant [J/(mol K)].
    #[serde(rename = "R_gas")]
    pub r_gas: f64,
    /// Equilibrium dislocation density [1/m^2].
    pub rho_eq: f64,
    /// Yield stress offset [MPa].
    pub sigma_y: f64,
    /// Boltzmann constant [J/K].
    #[serde(rename = "k_B")]
    pub k_b: f64,
    /// Initial dislocation density [1/m^2].
    pub rho_0: f64,
}

impl Default for MaterialConstants {
    /// Aluminium-like defaults for synthetic work: fcc Taylor factor, shear
    /// modulus and Burgers vector of Al, micrometre sub-grains, nanometre
    /// annihilation distance and a pipe-diffusion-like activation energy so
    /// recovery matters between 350 and 500 degC.
    fn default() -> Self {
        MaterialConstants {
            m: 3.06,
            g: 26_000.0,
            b: 2.86e-10,
            delta: 2e-6,
            d_ann: 5e-9,
            d0: 1e-5,
            q_d: 8.2e4,
            r_gas: 8.314_462_618,
            rho_eq: 1e11,
            sigma_y: 10.0,
            k_b: 1.380_649e-23,
            rho_0: 1e11,
        }
    }
}

impl MaterialConstants {
    pub fn from_json_path(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::config(format!("cannot open constants file {path:?}: {e}")))?;
        serde_json::from_reader(file)
            .map_err(|e| Error::config(format!("invalid constants file {path:?}: {e}")))
    }

    pub fn to_json_path(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    /// Arrhenius diffusivity `D0 * exp(-Q_D / (R * T_K))` at `temp_c`.
    pub fn diffusivity(&self, temp_c: f64) -> f64 {
        self.d0 * (-self.q_d / (self.r_gas * (temp_c + CELSIUS_TO_KELVIN))).exp()
    }
}

/// Calibration parameters in model space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationAbc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CalibrationAbc {
    /// Strictly positive parameters; this is the range the model is meant to
    /// run in. `simulate` additionally tolerates `b == 0` and `c == 0`
    /// (mechanisms switched off), which some limit checks use.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::data(format!(
                "calibration parameters must be positive and finite, got ({a}, {b}, {c})"
            )));
        }
        Ok(CalibrationAbc { a, b, c })
    }
}

/// Calibration parameters in search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationUvw {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl CalibrationUvw {
    pub fn clamped(&self) -> CalibrationUvw {
        CalibrationUvw {
            u: self.u.clamp(U_BOUNDS.0, U_BOUNDS.1),
            v: self.v.clamp(V_BOUNDS.0, V_BOUNDS.1),
            w: self.w.clamp(W_BOUNDS.0, W_BOUNDS.1),
        }
    }
}

/// `1/A = exp(u)`, `B = exp(v)/A`, `C = exp(w)/A`.
pub fn to_abc(p: &CalibrationUvw) -> CalibrationAbc {
    let a_inv = p.u.exp();
    CalibrationAbc {
        a: (-p.u).exp(),
        b: p.v.exp() * a_inv,
        c: p.w.exp() * a_inv,
    }
}

/// Inverse of [`to_abc`]. Requires positive parameters.
pub fn to_uvw(p: &CalibrationAbc) -> CalibrationUvw {
    let u = -p.a.ln();
    CalibrationUvw {
        u,
        v: p.b.ln() - u,
        w: p.c.ln() - u,
    }
}

/// One compression at constant temperature and strain rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    /// Temperature [degC].
    pub temp_c: f64,
    /// True strain rate [1/s], > 0.
    pub phi_dot: f64,
    /// Final true strain, >= 0.
    pub phi_max: f64,
}

/// Integration control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimControl {
    /// Strain step of the output grid.
    pub delta_phi: f64,
    /// Densities above this mark the run divergent.
    pub rho_cap: f64,
    /// Drop the second Taylor factor from the annihilation term.
    pub single_m_in_term2: bool,
}

impl Default for SimControl {
    fn default() -> Self {
        SimControl {
            delta_phi: 1e-4,
            rho_cap: 1e18,
            single_m_in_term2: false,
        }
    }
}

/// Simulated flow curve on a uniform strain grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCurve {
    pub phi: Vec<f64>,
    pub kf: Vec<f64>,
    pub rho: Vec<f64>,
    /// Density left `(0, rho_cap]` (or the parameters were unusable); the
    /// fitness layer maps this to a penalty. Points computed before the
    /// failure are retained.
    pub divergent: bool,
}

/// Flow stress at a given density: `sigma_y + M G b (sqrt(rho)/2 + 1/delta)`.
pub fn stress_from_rho(rho: f64, c: &MaterialConstants) -> f64 {
    c.sigma_y + c.m * c.g * c.b * (rho.sqrt() / 2.0 + 1.0 / c.delta)
}

/// Density increment over one time step `dt`:
/// storage `M sqrt(rho)/(b A) * phi_dot * dt`, minus annihilation
/// `2 B M (d_ann/b) rho M phi_dot dt`, minus recovery
/// `2 C D(T) (G b^3 / (k_B T_K)) (rho^2 - rho_eq^2) dt`.
pub fn rho_increment(
    rho: f64,
    load: &LoadCase,
    c: &MaterialConstants,
    abc: &CalibrationAbc,
    dt: f64,
    ctrl: &SimControl,
) -> f64 {
    let t_k = load.temp_c + CELSIUS_TO_KELVIN;
    let storage = c.m * rho.sqrt() / (c.b * abc.a) * load.phi_dot * dt;
    let m2 = if ctrl.single_m_in_term2 { 1.0 } else { c.m };
    let annihilation = 2.0 * abc.b * c.m * (c.d_ann / c.b) * rho * m2 * load.phi_dot * dt;
    let kappa = c.g * 1e6 * c.b.powi(3) / (c.k_b * t_k);
    let recovery =
        2.0 * abc.c * c.diffusivity(load.temp_c) * kappa * (rho * rho - c.rho_eq * c.rho_eq) * dt;
    storage - annihilation - recovery
}

struct StrainOde {
    /// Storage coefficient (times sqrt(rho)), strain domain.
    s1: f64,
    /// Annihilation coefficient (times rho), strain domain.
    s2: f64,
    /// Recovery coefficient (times rho^2 - rho_eq^2), strain domain.
    /// Infinite when the strain rate underflows the division; every step is
    /// then a quasi-static solve.
    s3: f64,
    /// Same three coefficients in the time domain (finite for any positive
    /// strain rate); used for the quasi-steady balance.
    k1: f64,
    k2: f64,
    k3: f64,
    req2: f64,
    cap: f64,
}

impl StrainOde {
    fn new(load: &LoadCase, c: &MaterialConstants, abc: &CalibrationAbc, ctrl: &SimControl) -> Self {
        let t_k = load.temp_c + CELSIUS_TO_KELVIN;
        let s1 = c.m / (c.b * abc.a);
        let m2 = if ctrl.single_m_in_term2 { 1.0 } else { c.m };
        let s2 = 2.0 * abc.b * c.m * (c.d_ann / c.b) * m2;
        let kappa = c.g * 1e6 * c.b.powi(3) / (c.k_b * t_k);
        let k3 = 2.0 * abc.c * c.diffusivity(load.temp_c) * kappa;
        StrainOde {
            s1,
            s2,
            s3: k3 / load.phi_dot,
            k1: s1 * load.phi_dot,
            k2: s2 * load.phi_dot,
            k3,
            req2: c.rho_eq * c.rho_eq,
            cap: ctrl.rho_cap,
        }
    }

    /// d(rho)/d(phi).
    fn rate(&self, rho: f64) -> f64 {
        self.s1 * rho.sqrt() - self.s2 * rho - self.s3 * (rho * rho - self.req2)
    }

    /// Magnitude of the decaying part of the Jacobian times the step, the
    /// quantity that decides whether an explicit step is stable. The growing
    /// storage mode is excluded: it limits accuracy, not stability.
    fn decay_stiffness(&self, rho: f64, h: f64) -> f64 {
        (self.s2 + 2.0 * self.s3 * rho) * h
    }

    /// Classical fourth-order step of size `h`, split into `m` equal
    /// sub-steps. `None` if any stage or result leaves `(0, cap]` or stops
    /// being finite.
    fn rk4(&self, mut rho: f64, h: f64, m: u32) -> Option<f64> {
        let hs = h / f64::from(m);
        for _ in 0..m {
            let k1 = self.rate(rho);
            let r2 = rho + hs / 2.0 * k1;
            if !(r2 > 0.0 && r2.is_finite()) {
                return None;
            }
            let k2 = self.rate(r2);
            let r3 = rho + hs / 2.0 * k2;
            if !(r3 > 0.0 && r3.is_finite()) {
                return None;
            }
            let k3 = self.rate(r3);
            let r4 = rho + hs * k3;
            if !(r4 > 0.0 && r4.is_finite()) {
                return None;
            }
            let k4 = self.rate(r4);
            rho += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !(rho > 0.0 && rho.is_finite() && rho <= self.cap) {
                return None;
            }
        }
        Some(rho)
    }

    /// Root of the rate balance `k1 sqrt(r) = k2 r + k3 (r^2 - req^2)`,
    /// the density the stiff dynamics collapse onto within a single strain
    /// step. Safeguarded Newton with a bisection bracket; `None` when no
    /// balance point exists below the cap.
    fn quasi_steady(&self, rho: f64) -> Option<f64> {
        let g = |r: f64| self.k1 * r.sqrt() - self.k2 * r - self.k3 * (r * r - self.req2);
        let mut lo = 1e-12;
        let mut hi = self.cap;
        if !(g(lo) > 0.0) || !(g(hi) <= 0.0) {
            return None;
        }
        let mut r = rho.clamp(lo, hi);
        for _ in 0..200 {
            let gr = g(r);
            if gr > 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let slope = self.k1 / (2.0 * r.sqrt()) - self.k2 - 2.0 * self.k3 * r;
            let newton = r - gr / slope;
            r = if slope < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                lo / 2.0 + hi / 2.0
            };
            if (hi - lo) <= 1e-14 * r {
                break;
            }
        }
        (r > 0.0 && r.is_finite()).then_some(r)
    }

    /// One output-grid step with stability escalation: plain step while the
    /// decaying modes are inside the explicit stability region, equal
    /// sub-steps for moderately stiff steps, quasi-steady collapse beyond
    /// that. Each branch is a pure function of the inputs, so results do not
    /// depend on execution order or thread count.
    fn step(&self, rho: f64, h: f64) -> Option<f64> {
        let stiffness = self.decay_stiffness(rho, h);
        if !stiffness.is_finite() || stiffness > 64.0 {
            return self.quasi_steady(rho);
        }
        if stiffness <= 2.0 {
            if let Some(next) = self.rk4(rho, h, 1) {
                return Some(next);
            }
        }
        let m = (stiffness.max(4.0).ceil() as u32).min(64) * 2;
        self.rk4(rho, h, m).or_else(|| self.quasi_steady(rho))
    }
}

/// Integrate the density from `rho_0` to `load.phi_max` on a uniform strain
/// grid and map it through [`stress_from_rho`]. The grid step is
/// `ctrl.delta_phi`; the last grid point is the first multiple of the step
/// covering `phi_max`.
pub fn simulate(
    load: &LoadCase,
    c: &MaterialConstants,
    abc: &CalibrationAbc,
    ctrl: &SimControl,
) -> SimulatedCurve {
    let usable = abc.a.is_finite()
        && abc.a > 0.0
        && abc.b.is_finite()
        && abc.b >= 0.0
        && abc.c.is_finite()
        && abc.c >= 0.0
        && load.phi_dot > 0.0
        && load.phi_max >= 0.0
        && c.rho_0 > 0.0
        && c.rho_0 <= ctrl.rho_cap;
    if !usable {
        return SimulatedCurve {
            phi: Vec::new(),
            kf: Vec::new(),
            rho: Vec::new(),
            divergent: true,
        };
    }

    let h = ctrl.delta_phi;
    let steps = ((load.phi_max / h) - 1e-9).ceil().max(0.0) as usize;
    let ode = StrainOde::new(load, c, abc, ctrl);

    let mut rho = c.rho_0;
    let mut curve = SimulatedCurve {
        phi: Vec::with_capacity(steps + 1),
        kf: Vec::with_capacity(steps + 1),
        rho: Vec::with_capacity(steps + 1),
        divergent: false,
    };
    curve.phi.push(0.0);
    curve.kf.push(stress_from_rho(rho, c));
    curve.rho.push(rho);

    for i in 0..steps {
        match ode.step(rho, h) {
            Some(next) if next <= ctrl.rho_cap => rho = next,
            _ => {
                curve.divergent = true;
                break;
            }
        }
        curve.phi.push((i as f64 + 1.0) * h);
        curve.kf.push(stress_from_rho(rho, c));
        curve.rho.push(rho);
    }
    curve
}

/// Linearly interpolate the simulated stress at the given strains.
/// Every strain must lie inside the simulated range.
pub fn sample_at(curve: &SimulatedCurve, phis: &[f64]) -> Result<Vec<f64>> {
    let last = *curve
        .phi
        .last()
        .ok_or_else(|| Error::data("cannot sample an empty curve"))?;
    let mut out = Vec::with_capacity(phis.len());
    for &phi in phis {
        if !phi.is_finite() || phi < 0.0 || phi > last {
            return Err(Error::data(format!(
                "strain {phi} outside the simulated range [0, {last}]"
            )));
        }
        let idx = curve.phi.partition_point(|&p| p <= phi);
        if idx == curve.phi.len() {
            out.push(*curve.kf.last().unwrap());
        } else {
            let (p0, p1) = (curve.phi[idx - 1], curve.phi[idx]);
            let (f0, f1) = (curve.kf[idx - 1], curve.kf[idx]);
            out.push(f0 + (f1 - f0) * (phi - p0) / (p1 - p0));
        }
    }
    Ok(out)
}

/// Write a curve as `phi,kf_MPa,rho`.
pub fn write_curve_csv(curve: &SimulatedCurve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["phi", "kf_MPa", "rho"])?;
    for i in 0..curve.phi.len() {
        w.write_record(&[
            curve.phi[i].to_string(),
            curve.kf[i].to_string(),
            curve.rho[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
