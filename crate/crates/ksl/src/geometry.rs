//! Geodesic distance, ball volume, and the decay statistics of a profile
//! metric.
//!
//! Along the radial direction the arc length element is `(1/2) sqrt(phi') dt`
//! and the volume of the geodesic ball of radius `d(t)` has the closed form
//! `(omega / 2n) phi^n`, with `omega` the volume of the unit sphere in `C^n`.
//! The decay report tabulates, per grid node, the scalar curvature, the
//! volume ratio `vol / d^{2n}`, the scale-invariant product `R d^2`, the
//! scaled average `(1 + d) avg_{B(O,d)} R`, and the ratio of the Riesz-type
//! integral `I(d) = int_{B(O,d)} R / rho^{2n-2} dV` to `log(2 + d)`, together
//! with the empirical constants those statistics certify.

use std::f64::consts::PI;

use crate::curvature::metric_at;
use crate::error::{Error, Result};
use crate::kernels::factorial;
use crate::quad::integrate;
use crate::soliton::{RadialProfile, SolitonParams};

/// Volume of the unit sphere `S^{2n-1}`, `2 pi^n / (n-1)!`.
pub fn unit_sphere_volume(n: usize) -> f64 {
    2.0 * PI.powi(n as i32) / factorial(n - 1)
}

/// Volume of the geodesic ball reaching coordinate `t`,
/// `(omega / 2n) phi(t)^n` exactly.
pub fn volume_of_ball(profile: &RadialProfile, t: f64) -> Result<f64> {
    let s = profile.sample(t)?;
    let n = profile.n();
    Ok(unit_sphere_volume(n) / (2.0 * n as f64) * s.phi.powi(n as i32))
}

pub(crate) fn distances(profile: &RadialProfile) -> Vec<f64> {
    let m = profile.len();
    let mut d = vec![0.0; m];
    d[0] = profile.phi1[0].sqrt();
    for i in 1..m {
        let dt = profile.t[i] - profile.t[i - 1];
        d[i] = d[i - 1] + 0.25 * (profile.phi1[i].sqrt() + profile.phi1[i - 1].sqrt()) * dt;
    }
    d
}

/// Geodesic distance from the origin to each grid node, as `(t, d)` pairs.
///
/// The in-window part is the trapezoid sum of `(1/2) sqrt(phi')`; below the
/// window `phi' ~ phi ~ exp(t)` gives the closed tail `sqrt(phi'(t_min))`.
pub fn distance_profile(profile: &RadialProfile) -> Vec<(f64, f64)> {
    profile.t.iter().copied().zip(distances(profile)).collect()
}

/// Geodesic length between two profile radii of a soliton metric, computed
/// by adaptive quadrature of `(1/2) d(phi) / sqrt(Phi(phi))` independently of
/// any grid.
pub fn soliton_distance(params: SolitonParams, phi_a: f64, phi_b: f64) -> Result<f64> {
    params.validate()?;
    if !(phi_a > 0.0) || !(phi_b >= phi_a) || !phi_b.is_finite() {
        return Err(Error::invalid(format!(
            "radii must satisfy 0 < phi_a <= phi_b, got [{phi_a}, {phi_b}]"
        )));
    }
    let speed = |p: f64| {
        0.5 / params
            .ode_rhs(p)
            .expect("profile speed is evaluable on a positive window")
            .sqrt()
    };
    integrate(&speed, phi_a, phi_b, 1e-12)
}

/// One row of the decay table.
#[derive(Debug, Clone, Copy)]
pub struct DecayRow {
    pub t: f64,
    pub d: f64,
    pub vol: f64,
    pub r: f64,
    /// `vol / d^{2n}`.
    pub vol_ratio: f64,
    /// `R d^2`.
    pub r_d2: f64,
    /// `(1 + d)` times the volume average of `R` over `B(O, d)`.
    pub avg_r_scaled: f64,
    /// `I(d) / log(2 + d)` with `I` the Riesz-type curvature integral.
    pub riesz_ratio: f64,
}

/// Decay statistics over a whole profile.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Infimum of `vol_ratio`, an empirical maximal-volume-growth constant.
    pub c1_hat: f64,
    /// Supremum of `riesz_ratio`, an empirical log-bound constant.
    pub c2_hat: f64,
    /// Supremum of `avg_r_scaled`, an empirical average-decay constant.
    pub c_hat: f64,
    /// Below-window contribution added to the Riesz integral.
    pub riesz_origin_tail: f64,
    pub warnings: Vec<String>,
}

/// Tabulates the decay statistics of a profile.
///
/// Volume is closed-form; the curvature integrals are trapezoid sums of the
/// exact volume element `(omega/2) R phi^{n-1} phi' dt` with analytic
/// below-window tails (where `R` is extended by its value at the first
/// node). The profile must span at least four decades of `phi` so the
/// asymptotic statistics have room to settle.
pub fn decay_report(profile: &RadialProfile) -> Result<DecayReport> {
    profile.validate()?;
    let m = profile.len();
    let n = profile.n();
    let nf = n as f64;
    if profile.phi[m - 1] / profile.phi[0] < 1e4 {
        return Err(Error::invalid(
            "decay statistics need a profile spanning at least 4 decades of phi",
        ));
    }
    let omega = unit_sphere_volume(n);
    let d = distances(profile);
    let r: Vec<f64> = (0..m)
        .map(|i| metric_at(profile, profile.t[i]).map(|met| met.scalar_curvature()))
        .collect::<Result<_>>()?;

    // Cumulative integrals of R dV and R / rho^{2n-2} dV in t, each with its
    // analytic below-window tail.
    let integrand_vol = |i: usize| r[i] * profile.phi[i].powi(n as i32 - 1) * profile.phi1[i];
    let tail_vol = 0.5 * omega * r[0] * profile.phi[0].powi(n as i32) / nf;
    let riesz_tail = 0.5 * omega * r[0] * profile.phi1[0];

    let mut rows = Vec::with_capacity(m);
    let mut acc_vol = tail_vol;
    let mut acc_riesz = riesz_tail;
    let mut warnings = Vec::new();
    for i in 0..m {
        if i > 0 {
            let dt = profile.t[i] - profile.t[i - 1];
            acc_vol += 0.25 * omega * (integrand_vol(i) + integrand_vol(i - 1)) * dt;
            let w = |j: usize| integrand_vol(j) / d[j].powi(2 * n as i32 - 2);
            acc_riesz += 0.25 * omega * (w(i) + w(i - 1)) * dt;
        }
        let vol = omega / (2.0 * nf) * profile.phi[i].powi(n as i32);
        let row = DecayRow {
            t: profile.t[i],
            d: d[i],
            vol,
            r: r[i],
            vol_ratio: vol / d[i].powi(2 * n as i32),
            r_d2: r[i] * d[i] * d[i],
            avg_r_scaled: (1.0 + d[i]) * acc_vol / vol,
            riesz_ratio: acc_riesz / (2.0 + d[i]).ln(),
        };
        if !row.d.is_finite()
            || !row.vol.is_finite()
            || !row.r.is_finite()
            || !row.vol_ratio.is_finite()
            || !row.avg_r_scaled.is_finite()
            || !row.riesz_ratio.is_finite()
        {
            return Err(Error::numerical(format!(
                "non-finite decay statistic at node {i} (t = {})",
                profile.t[i]
            )));
        }
        rows.push(row);
    }

    for i in 1..m {
        if rows[i].d <= rows[i - 1].d || rows[i].vol <= rows[i - 1].vol {
            return Err(Error::numerical(format!(
                "distance and volume must increase strictly, violated at node {i}"
            )));
        }
        if rows[i].vol_ratio > rows[i - 1].vol_ratio * (1.0 + 1e-12) {
            warnings.push(format!(
                "volume ratio increased at node {i}: {} -> {}",
                rows[i - 1].vol_ratio,
                rows[i].vol_ratio
            ));
        }
    }

    let c1_hat = rows
        .iter()
        .map(|r| r.vol_ratio)
        .fold(f64::INFINITY, f64::min);
    let c2_hat = rows
        .iter()
        .map(|r| r.riesz_ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let c_hat = rows
        .iter()
        .map(|r| r.avg_r_scaled)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(DecayReport {
        rows,
        c1_hat,
        c2_hat,
        c_hat,
        riesz_origin_tail: riesz_tail,
        warnings,
    })
}
