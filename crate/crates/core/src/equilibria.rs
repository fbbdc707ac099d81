//! Closed-form equilibria: which phase survives for a given external
//! temperature, and the resulting volume increment and pressure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    dimensionless_groups, BoundaryParams, DimensionlessGroups, MaterialParams,
    RIGID_STIFFNESS_RATIO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Liquid,
    Solid,
    Mushy,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Liquid => "liquid",
            Regime::Solid => "solid",
            Regime::Mushy => "mushy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Pure liquid at or above this external temperature.
    pub theta_liquid: f64,
    /// Pure solid at or below this external temperature.
    pub theta_solid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub regime: Regime,
    /// Equilibrium phase where unique; `None` in the mushy regime, where any
    /// profile with the right mean ice content is an equilibrium.
    pub chi_inf: Option<f64>,
    #[serde(rename = "X_Omega_inf")]
    pub ice_volume: f64,
    /// Mean equilibrium strain `U_Omega / |Omega|`.
    #[serde(rename = "U_inf")]
    pub strain: f64,
    #[serde(rename = "U_Omega_inf")]
    pub volume_increment: f64,
    /// Gauge pressure `p0 + K_Gamma U_Omega`.
    #[serde(rename = "P_inf")]
    pub pressure: f64,
    pub thresholds: Thresholds,
    pub groups: DimensionlessGroups,
}

pub fn thresholds(g: &DimensionlessGroups, theta_c: f64) -> Result<Thresholds> {
    if !(g.beta_tilde < 1.0) {
        return Err(Error::ClassificationInvalid(g.beta_tilde));
    }
    let reduced = 1.0 - g.beta_tilde;
    Ok(Thresholds {
        theta_liquid: theta_c * (1.0 - g.omega / reduced),
        theta_solid: theta_c * (1.0 - (g.omega + g.d) / reduced),
    })
}

/// Total volume increment of an equilibrium with ice volume `ice_volume`
/// at external temperature `theta_gamma`.
pub fn equilibrium_volume_increment(
    theta_gamma: f64,
    ice_volume: f64,
    m: &MaterialParams,
    b: &BoundaryParams,
    volume: f64,
) -> f64 {
    (volume * (m.beta * (theta_gamma - m.theta_c) - b.p0) + m.alpha * m.lambda * ice_volume)
        / (m.lambda + b.k_gamma * volume)
}

/// Classify the equilibrium reached with external temperature `theta_gamma`.
///
/// `b.theta_gamma` is ignored in favor of the argument so sweeps can reuse
/// one boundary description.
pub fn classify(
    theta_gamma: f64,
    m: &MaterialParams,
    b: &BoundaryParams,
    volume: f64,
) -> Result<EquilibriumReport> {
    let mut b_at = b.clone();
    b_at.theta_gamma = theta_gamma;
    let groups = dimensionless_groups(m, &b_at, volume)?;
    let th = thresholds(&groups, m.theta_c)?;
    let (regime, chi_inf, ice_volume) = if theta_gamma >= th.theta_liquid {
        (Regime::Liquid, Some(1.0), 0.0)
    } else if theta_gamma <= th.theta_solid {
        (Regime::Solid, Some(0.0), volume)
    } else {
        let fraction = groups
            .chi_star
            .expect("mushy window is empty when d = 0");
        (Regime::Mushy, None, volume * fraction)
    };
    let total = equilibrium_volume_increment(theta_gamma, ice_volume, m, b, volume);
    Ok(EquilibriumReport {
        regime,
        chi_inf,
        ice_volume,
        strain: total / volume,
        volume_increment: total,
        pressure: b.gauge_pressure(total),
        thresholds: th,
        groups,
    })
}

/// Residual of the pointwise equilibrium inclusion for one cell.
///
/// With `theta = theta_Gamma`, the equilibrium strain from the force
/// balance and total volume increment `total`, returns the distance of
/// `-(alpha lambda (U - alpha (1 - chi)) + L (1 - theta_Gamma/theta_c))`
/// from the normal cone of `[0,1]` at `chi`.
pub fn inclusion_residual(
    chi: f64,
    total: f64,
    theta_gamma: f64,
    m: &MaterialParams,
    b: &BoundaryParams,
) -> f64 {
    let strain = equilibrium_strain(chi, total, theta_gamma, m, b);
    let xi = -(m.alpha * m.lambda * m.elastic_strain(strain, chi)
        + m.latent * (1.0 - theta_gamma / m.theta_c));
    if chi > 0.0 && chi < 1.0 {
        xi.abs()
    } else if chi == 1.0 {
        (-xi).max(0.0)
    } else {
        xi.max(0.0)
    }
}

/// Cell strain at equilibrium, from the force balance with zero strain rate.
pub fn equilibrium_strain(
    chi: f64,
    total: f64,
    theta_gamma: f64,
    m: &MaterialParams,
    b: &BoundaryParams,
) -> f64 {
    m.alpha * (1.0 - chi)
        + (m.beta * (theta_gamma - m.theta_c) - b.p0 - b.k_gamma * total) / m.lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    #[serde(rename = "K_Gamma")]
    pub k_gamma: f64,
    #[serde(rename = "U_inf")]
    pub strain: f64,
    /// `P_inf - p0`.
    pub overpressure: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitReport {
    pub soft: LimitRow,
    pub rigid: LimitRow,
}

/// Fully frozen equilibria in an infinitely soft and a (surrogate) rigid
/// container, evaluated at the freezing point where thermal stresses vanish.
pub fn limit_behaviors(m: &MaterialParams, b: &BoundaryParams, volume: f64) -> Result<LimitReport> {
    let row = |k_gamma: f64| -> Result<LimitRow> {
        let mut bk = b.clone();
        bk.k_gamma = k_gamma;
        let g = dimensionless_groups(m, &bk, volume)?;
        let total = equilibrium_volume_increment(m.theta_c, volume, m, &bk, volume);
        Ok(LimitRow {
            k_gamma,
            strain: total / volume,
            overpressure: k_gamma * total,
            d: g.d,
        })
    };
    Ok(LimitReport {
        soft: row(0.0)?,
        rigid: row(RIGID_STIFFNESS_RATIO * m.lambda / volume)?,
    })
}
