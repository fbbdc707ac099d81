//! Material and container parameters, and the pointwise constitutive laws.
//!
//! All stored constants are volumetric: `c`, `gamma` and `latent` are the
//! per-mass values multiplied by the mass density `rho0`. The per-mass
//! densities returned by [`free_energy_density`], [`internal_energy_density`]
//! and [`entropy_density`] divide back by `rho0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stiffness ratio `K_Gamma |Omega| / lambda` used to stand in for a rigid container.
pub const RIGID_STIFFNESS_RATIO: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Volumetric specific heat, J/(m³·K).
    pub c: f64,
    /// Heat conductivity, W/(m·K).
    pub kappa: f64,
    /// Volume viscosity, Pa·s.
    pub nu: f64,
    /// Bulk elasticity modulus, J/m³.
    pub lambda: f64,
    /// Relative specific-volume excess of the solid over the liquid.
    pub alpha: f64,
    /// Thermal expansion stress coefficient, J/(m³·K).
    pub beta: f64,
    /// Phase relaxation coefficient, J·s/m³.
    pub gamma: f64,
    /// Volumetric latent heat, J/m³.
    #[serde(rename = "L")]
    pub latent: f64,
    /// Freezing point at standard pressure, K.
    pub theta_c: f64,
    /// Mass density, kg/m³.
    pub rho0: f64,
}

impl MaterialParams {
    /// Dimensionless constants used throughout the well-posedness analysis:
    /// `L = 2` and every other constant equal to one.
    pub fn normalized() -> Self {
        Self {
            c: 1.0,
            kappa: 1.0,
            nu: 1.0,
            lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            latent: 2.0,
            theta_c: 1.0,
            rho0: 1.0,
        }
    }

    /// Water and ice with linearized, phase-independent coefficients.
    ///
    /// Density, specific volumes, sound speed, freezing point, specific heat,
    /// latent heat and the ratio `beta / lambda` follow the standard table for
    /// water. Conductivity, volume viscosity and the phase relaxation
    /// coefficient are not part of that table; see [`Preset::notes`].
    pub fn water() -> Self {
        let rho0 = 1.0 / 1.0e-3;
        let v_ice = 1.09e-3;
        let v_water = 1.0e-3;
        let sound_speed: f64 = 1.5e3;
        let lambda = rho0 * sound_speed * sound_speed;
        let latent = rho0 * 3.3e5;
        Self {
            c: rho0 * 4.2e3,
            kappa: 0.6,
            nu: 2.4e-3,
            lambda,
            alpha: (v_ice - v_water) / v_water,
            beta: 2.0e-4 * lambda,
            // one-second relaxation time scale relative to the latent heat
            gamma: latent * 1.0,
            latent,
            theta_c: 273.0,
            rho0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 10] = [
            ("c", self.c),
            ("kappa", self.kappa),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("L", self.latent),
            ("theta_c", self.theta_c),
            ("rho0", self.rho0),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and strictly positive, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Speed of sound `sqrt(lambda / rho0)`, m/s.
    pub fn sound_speed(&self) -> f64 {
        (self.lambda / self.rho0).sqrt()
    }

    /// Per-mass specific heat, J/(kg·K).
    pub fn specific_heat(&self) -> f64 {
        self.c / self.rho0
    }

    /// Per-mass latent heat, J/kg.
    pub fn specific_latent(&self) -> f64 {
        self.latent / self.rho0
    }

    /// Latent heat corrected for the thermal expansion work, J/kg.
    pub fn corrected_latent(&self) -> f64 {
        self.specific_latent() - self.beta * self.alpha * self.theta_c / self.rho0
    }

    /// Elastic strain measured from the stress-free state of phase `chi`.
    pub fn elastic_strain(&self, strain: f64, chi: f64) -> f64 {
        strain - self.alpha * (1.0 - chi)
    }
}

/// Heat-transfer coefficient on the container wall, W/(m²·K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeatTransfer {
    Uniform(f64),
    /// One value per side (`2 * dim` entries, ordered x-low, x-high, y-low, ...)
    /// or one value per boundary face.
    Values(Vec<f64>),
}

impl HeatTransfer {
    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            HeatTransfer::Uniform(h) => Box::new(std::iter::once(*h)),
            HeatTransfer::Values(v) => Box::new(v.iter().copied()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryParams {
    /// Aggregate wall stiffness relating the volume increment to gauge pressure, J/m⁶.
    #[serde(rename = "K_Gamma")]
    pub k_gamma: f64,
    pub h: HeatTransfer,
    /// External temperature, K.
    #[serde(rename = "theta_Gamma")]
    pub theta_gamma: f64,
    /// External pressure deviation from standard pressure, J/m³.
    pub p0: f64,
    /// Standard pressure, J/m³. Only used to report absolute pressures.
    #[serde(rename = "P_stand", default)]
    pub p_stand: f64,
}

impl BoundaryParams {
    pub fn new(k_gamma: f64, h: f64, theta_gamma: f64, p0: f64) -> Self {
        Self {
            k_gamma,
            h: HeatTransfer::Uniform(h),
            theta_gamma,
            p0,
            p_stand: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_gamma.is_finite() && self.k_gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "K_Gamma",
                reason: format!("must be finite and nonnegative, got {}", self.k_gamma),
            });
        }
        if !(self.theta_gamma.is_finite() && self.theta_gamma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "theta_Gamma",
                reason: format!("must be strictly positive, got {}", self.theta_gamma),
            });
        }
        if !self.p0.is_finite() || !self.p_stand.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p0",
                reason: "pressures must be finite".into(),
            });
        }
        let mut any_positive = false;
        for h in self.h.values() {
            if !(h.is_finite() && h >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "h",
                    reason: format!("heat-transfer coefficients must be nonnegative, got {h}"),
                });
            }
            any_positive |= h > 0.0;
        }
        if !any_positive {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: "at least one heat-transfer coefficient must be positive".into(),
            });
        }
        Ok(())
    }

    /// Gauge pressure `p0 + K_Gamma * U_Omega`.
    pub fn gauge_pressure(&self, volume_increment: f64) -> f64 {
        self.p0 + self.k_gamma * volume_increment
    }
}

/// A named material parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub material: MaterialParams,
    pub notes: &'static str,
}

pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "normalized",
            material: MaterialParams::normalized(),
            notes: "L = 2, every other constant 1",
        },
        Preset {
            name: "water",
            material: MaterialParams::water(),
            notes: "table values for water/ice; kappa = 0.6 W/(m K), nu = 2.4e-3 Pa s and \
                    gamma = L * 1 s are assumed values",
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

fn check_state(theta: f64, chi: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!("temperature must be positive, got {theta}")));
    }
    if !(0.0..=1.0).contains(&chi) {
        return Err(Error::Domain(format!("phase must lie in [0,1], got {chi}")));
    }
    Ok(())
}

/// Specific free energy, J/kg.
pub fn free_energy_density(theta: f64, strain: f64, chi: f64, m: &MaterialParams) -> Result<f64> {
    check_state(theta, chi)?;
    let w = m.elastic_strain(strain, chi);
    Ok(m.specific_heat() * theta * (1.0 - (theta / m.theta_c).ln())
        + m.lambda / (2.0 * m.rho0) * w * w
        - m.beta / m.rho0 * (theta - m.theta_c) * strain
        + m.specific_latent() * chi * (1.0 - theta / m.theta_c))
}

/// Specific internal energy, J/kg.
pub fn internal_energy_density(
    theta: f64,
    strain: f64,
    chi: f64,
    m: &MaterialParams,
) -> Result<f64> {
    check_state(theta, chi)?;
    let w = m.elastic_strain(strain, chi);
    Ok(m.specific_heat() * theta
        + m.lambda / (2.0 * m.rho0) * w * w
        + m.beta / m.rho0 * m.theta_c * strain
        + m.specific_latent() * chi)
}

/// Specific entropy, J/(kg·K).
pub fn entropy_density(theta: f64, strain: f64, chi: f64, m: &MaterialParams) -> Result<f64> {
    check_state(theta, chi)?;
    Ok(m.specific_heat() * (theta / m.theta_c).ln()
        + m.specific_latent() / m.theta_c * chi
        + m.beta / m.rho0 * strain)
}

/// Scalar elastic stress `rho0 * df/dU`, J/m³ (one diagonal entry of the stress tensor).
pub fn elastic_stress(theta: f64, strain: f64, chi: f64, m: &MaterialParams) -> f64 {
    m.lambda * m.elastic_strain(strain, chi) - m.beta * (theta - m.theta_c)
}

/// Pressure deviation from standard pressure, J/m³.
///
/// On solutions of the mechanical equilibrium this equals the gauge pressure
/// `p0 + K_Gamma * U_Omega`.
pub fn pressure_deviation(
    theta: f64,
    strain: f64,
    strain_rate: f64,
    chi: f64,
    m: &MaterialParams,
) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {theta}")));
    }
    Ok(-m.nu * strain_rate - m.lambda * m.elastic_strain(strain, chi)
        + m.beta * (theta - m.theta_c))
}

/// Elastic energy stored in the container wall, J.
///
/// For a wall without stiffness the quadratic form degenerates; the affine
/// limit `p0 * U_Omega` is returned instead (the divergent constant
/// `p0² / 2K` is dropped).
pub fn boundary_energy(volume_increment: f64, b: &BoundaryParams) -> f64 {
    if b.k_gamma > 0.0 {
        let shifted = volume_increment + b.p0 / b.k_gamma;
        0.5 * b.k_gamma * shifted * shifted
    } else {
        b.p0 * volume_increment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessGroups {
    /// Undercooling coefficient.
    pub d: f64,
    pub beta_tilde: f64,
    /// External pressure group.
    pub omega: f64,
    /// Mean ice content of the mushy equilibria at the configured external
    /// temperature; `None` when `d == 0`.
    pub chi_star: Option<f64>,
    /// Corrected latent heat, J/kg.
    pub latent_beta: f64,
}

impl DimensionlessGroups {
    /// Mean ice content `((1 - beta_tilde)(1 - theta_gamma/theta_c) - omega) / d`
    /// at an arbitrary external temperature.
    pub fn ice_fraction_at(&self, theta_gamma: f64, theta_c: f64) -> Option<f64> {
        (self.d > 0.0).then(|| {
            ((1.0 - self.beta_tilde) * (1.0 - theta_gamma / theta_c) - self.omega) / self.d
        })
    }
}

pub fn dimensionless_groups(
    m: &MaterialParams,
    b: &BoundaryParams,
    volume: f64,
) -> Result<DimensionlessGroups> {
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter {
            name: "volume",
            reason: format!("must be positive, got {volume}"),
        });
    }
    let wall = b.k_gamma * volume;
    let denom = m.latent * (m.lambda + wall);
    let mut groups = DimensionlessGroups {
        d: m.alpha * m.alpha * m.lambda * wall / denom,
        beta_tilde: m.alpha * m.lambda * m.beta * m.theta_c / denom,
        omega: m.alpha * m.lambda * b.p0 / denom,
        chi_star: None,
        latent_beta: m.corrected_latent(),
    };
    groups.chi_star = groups.ice_fraction_at(b.theta_gamma, m.theta_c);
    Ok(groups)
}

/// Slope of the transition temperature/pressure line, J/(m³·K).
pub fn clausius_clapeyron_slope(m: &MaterialParams) -> f64 {
    -m.rho0 * m.corrected_latent() / (m.alpha * m.theta_c)
}
