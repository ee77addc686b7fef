//! Expanding rotationally symmetric soliton profiles and the radial profile
//! container shared by the curvature, geometry and flow modules.
//!
//! A profile stores the Kahler potential derivative `phi` and its first
//! three radial derivatives on a grid of the cylindrical coordinate `t`.
//! For the soliton family the derivatives are generated from the first-order
//! autonomous equation
//!
//! ```text
//! d(phi)/dt = Phi(phi) = phi - A f_{n+1}(lambda phi) / phi^{n-1},
//! A = (lambda - 1) n! / lambda^{n+1}
//! ```
//!
//! whose solution interpolates between the cone-like end `phi ~ exp(t)` at
//! `t -> -inf` and the paraboloid-like end `phi ~ K exp(t/lambda)`. The
//! coordinate map `t(phi)` is recovered by integrating `1/Phi` from the
//! anchor `phi = 1`, so the default gauge places `phi(0) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{eval_f, factorial};
use crate::quad::integrate;

/// Widest allowed span of the cylindrical coordinate on a built profile.
const T_SPAN_LIMIT: f64 = 500.0;

const BUILD_TOL: f64 = 1e-13;

/// Dimension and expansion-rate parameters of an expanding soliton profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub n: usize,
    pub lambda: f64,
}

impl SolitonParams {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        let p = SolitonParams { n, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n + 1 > crate::kernels::MAX_ORDER {
            return Err(Error::invalid(format!(
                "dimension n must satisfy 1 <= n <= {}, got {}",
                crate::kernels::MAX_ORDER - 1,
                self.n
            )));
        }
        if !self.lambda.is_finite() || self.lambda <= 1.0 {
            return Err(Error::invalid(format!(
                "expansion parameter lambda must exceed 1, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Coefficient `A = (lambda - 1) n! / lambda^{n+1}`.
    pub fn coefficient(&self) -> f64 {
        (self.lambda - 1.0) * factorial(self.n) / self.lambda.powi(self.n as i32 + 1)
    }

    /// Integration constant `(-1)^{n-1} n! (1 - lambda)` selecting the
    /// branch of the first integral that closes up smoothly at the origin.
    pub fn ode_constant(&self) -> f64 {
        let sign = if self.n % 2 == 1 { 1.0 } else { -1.0 };
        sign * factorial(self.n) * (1.0 - self.lambda)
    }

    /// Solves `t(phi) = tau` for `phi` in the zero gauge by Newton iteration
    /// on the quadrature-backed coordinate map, seeded by `guess` (a nearby
    /// profile sample converges in a few steps). This is the grid-free
    /// evaluation path, useful as an independent cross-check of sampled
    /// profiles.
    pub fn phi_at(&self, tau: f64, guess: f64) -> Result<f64> {
        self.validate()?;
        if !tau.is_finite() {
            return Err(Error::invalid("coordinate must be finite"));
        }
        self.check_phi(guess)?;
        let inv = |s: f64| {
            1.0 / self
                .ode_rhs(s)
                .expect("profile speed is evaluable on a positive window")
        };
        let coord = |phi: f64| -> Result<f64> {
            if phi >= 1.0 {
                integrate(&inv, 1.0, phi, BUILD_TOL)
            } else {
                Ok(-integrate(&inv, phi, 1.0, BUILD_TOL)?)
            }
        };
        let mut phi = guess;
        for _ in 0..12 {
            let err = coord(phi)? - tau;
            let step = -err * self.ode_rhs(phi)?;
            let rel = (step / phi).clamp(-0.5, 0.5);
            phi *= 1.0 + rel;
            if rel.abs() < 1e-15 {
                return Ok(phi);
            }
        }
        Err(Error::numerical(format!(
            "coordinate inversion did not settle at tau = {tau} from guess {guess}"
        )))
    }

    fn check_phi(&self, phi: f64) -> Result<()> {
        if !phi.is_finite() || phi <= 0.0 {
            return Err(Error::invalid(format!(
                "profile value phi must be positive, got {phi}"
            )));
        }
        Ok(())
    }

    /// Right-hand side `Phi(phi)` of the profile equation.
    pub fn ode_rhs(&self, phi: f64) -> Result<f64> {
        self.check_phi(phi)?;
        let n = self.n;
        let f = eval_f(n + 1, self.lambda * phi)?;
        Ok(phi - self.coefficient() * f / phi.powi(n as i32 - 1))
    }

    /// First derivative of `Phi` with respect to `phi`.
    pub fn ode_rhs_d1(&self, phi: f64) -> Result<f64> {
        self.check_phi(phi)?;
        let n = self.n as f64;
        let ni = self.n as i32;
        let x = self.lambda * phi;
        let fn0 = eval_f(self.n, x)?;
        let fn1 = eval_f(self.n + 1, x)?;
        let a = self.coefficient();
        Ok(1.0 - a * (self.lambda * fn0 * phi.powi(1 - ni) + (1.0 - n) * fn1 * phi.powi(-ni)))
    }

    /// Second derivative of `Phi` with respect to `phi`.
    pub fn ode_rhs_d2(&self, phi: f64) -> Result<f64> {
        self.check_phi(phi)?;
        let n = self.n as f64;
        let ni = self.n as i32;
        let x = self.lambda * phi;
        let fm1 = eval_f(self.n - 1, x)?;
        let fn0 = eval_f(self.n, x)?;
        let fn1 = eval_f(self.n + 1, x)?;
        let a = self.coefficient();
        Ok(-a
            * (self.lambda * self.lambda * fm1 * phi.powi(1 - ni)
                + 2.0 * self.lambda * (1.0 - n) * fn0 * phi.powi(-ni)
                + n * (n - 1.0) * fn1 * phi.powi(-ni - 1)))
    }

    /// The first three `t`-derivatives of the profile at a given `phi`,
    /// obtained by differentiating through the autonomous equation.
    pub fn derivatives(&self, phi: f64) -> Result<(f64, f64, f64)> {
        let big = self.ode_rhs(phi)?;
        let d1 = self.ode_rhs_d1(phi)?;
        let d2 = self.ode_rhs_d2(phi)?;
        let phi1 = big;
        let phi2 = d1 * big;
        let phi3 = (d2 * big + d1 * d1) * big;
        Ok((phi1, phi2, phi3))
    }

    /// Closed-form scalar curvature `n! (lambda - 1) f_{n-1}(x) / x^{n-1}`
    /// at `x = lambda phi`, with the origin limit `n (lambda - 1)`.
    pub fn scalar_curvature(&self, phi: f64) -> Result<f64> {
        if phi == 0.0 {
            return Ok(self.n as f64 * (self.lambda - 1.0));
        }
        self.check_phi(phi)?;
        let x = self.lambda * phi;
        let f = eval_f(self.n - 1, x)?;
        Ok(factorial(self.n) * (self.lambda - 1.0) * f / x.powi(self.n as i32 - 1))
    }
}

/// Origin of a radial profile: generated from soliton parameters, or
/// supplied as raw arrays for dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Soliton(SolitonParams),
    Custom { n: usize },
}

/// One interpolated point of a profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub t: f64,
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

/// A radial warped-product metric on `C^n` described by `phi(t)` and its
/// first three derivatives on an increasing `t` grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi3: Vec<f64>,
    pub kind: ProfileKind,
    pub gauge: f64,
}

impl RadialProfile {
    pub fn n(&self) -> usize {
        match self.kind {
            ProfileKind::Soliton(p) => p.n,
            ProfileKind::Custom { n } => n,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Soliton(p) => Some(p.lambda),
            ProfileKind::Custom { .. } => None,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.t.len();
        if m < 2 {
            return Err(Error::invalid("profile needs at least two nodes"));
        }
        if [&self.phi, &self.phi1, &self.phi2, &self.phi3]
            .iter()
            .any(|v| v.len() != m)
        {
            return Err(Error::invalid("profile arrays must share one length"));
        }
        for w in self.t.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("profile grid must increase strictly"));
            }
        }
        for i in 0..m {
            if !self.phi[i].is_finite() || self.phi[i] <= 0.0 {
                return Err(Error::numerical(format!(
                    "phi must stay positive, got {} at node {i}",
                    self.phi[i]
                )));
            }
            if !self.phi1[i].is_finite() || self.phi1[i] <= 0.0 {
                return Err(Error::numerical(format!(
                    "phi' must stay positive, got {} at node {i}",
                    self.phi1[i]
                )));
            }
        }
        Ok(())
    }

    fn row(&self, i: usize) -> ProfileSample {
        ProfileSample {
            t: self.t[i],
            phi: self.phi[i],
            phi1: self.phi1[i],
            phi2: self.phi2[i],
            phi3: self.phi3[i],
        }
    }

    /// Interpolates the profile at an arbitrary `t` inside the grid span.
    ///
    /// Exact grid hits return the stored row. Between nodes `phi` is cubic
    /// Hermite interpolated with its stored slope; soliton profiles then
    /// regenerate the derivatives from the autonomous equation so the
    /// interpolated row satisfies it to interpolation accuracy, while custom
    /// profiles Hermite-interpolate each derivative array.
    pub fn sample(&self, t: f64) -> Result<ProfileSample> {
        let m = self.t.len();
        if !t.is_finite() || t < self.t[0] || t > self.t[m - 1] {
            return Err(Error::invalid(format!(
                "sample point {t} outside profile span [{}, {}]",
                self.t[0],
                self.t[m - 1]
            )));
        }
        let idx = match self
            .t
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Ok(self.row(i)),
            Err(i) => i,
        };
        let i1 = idx.min(m - 1).max(1);
        let i0 = i1 - 1;
        let h = self.t[i1] - self.t[i0];
        let s = (t - self.t[i0]) / h;
        let hermite = |y0: f64, m0: f64, y1: f64, m1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * h * m0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * h * m1
        };
        let phi = hermite(self.phi[i0], self.phi1[i0], self.phi[i1], self.phi1[i1]);
        match self.kind {
            ProfileKind::Soliton(p) => {
                let (phi1, phi2, phi3) = p.derivatives(phi)?;
                Ok(ProfileSample {
                    t,
                    phi,
                    phi1,
                    phi2,
                    phi3,
                })
            }
            ProfileKind::Custom { .. } => {
                let phi1 = hermite(self.phi1[i0], self.phi2[i0], self.phi1[i1], self.phi2[i1]);
                let phi2 = hermite(self.phi2[i0], self.phi3[i0], self.phi2[i1], self.phi3[i1]);
                let phi3 = self.phi3[i0] + s * (self.phi3[i1] - self.phi3[i0]);
                Ok(ProfileSample {
                    t,
                    phi,
                    phi1,
                    phi2,
                    phi3,
                })
            }
        }
    }
}

/// Largest pointwise residual of the first integral
/// `phi''/phi' + ((n-1)/phi + lambda) phi' - n - phi = 0`
/// over the profile nodes, written with `phi2/phi1` to avoid the quotient
/// rule noise. Takes `lambda` separately so that profiles of any kind can
/// be tested against a candidate value.
pub fn soliton_residual(profile: &RadialProfile, lambda: f64) -> Result<f64> {
    profile.validate()?;
    if !lambda.is_finite() || lambda <= 1.0 {
        return Err(Error::invalid(format!(
            "lambda must be finite and greater than 1, got {lambda}"
        )));
    }
    let n = profile.n() as f64;
    let mut worst = 0.0_f64;
    for i in 0..profile.len() {
        let phi = profile.phi[i];
        let phi1 = profile.phi1[i];
        let phi2 = profile.phi2[i];
        let r = phi2 / phi1 + ((n - 1.0) / phi + lambda) * phi1 - n - phi;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

pub(crate) fn log_linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let a = lo.ln();
    let b = hi.ln();
    (0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            (a + s * (b - a)).exp()
        })
        .collect()
}

/// Builds a soliton profile on a log-uniform `phi` grid.
///
/// The coordinate of each node is `t = gauge + integral_1^phi ds / Phi(s)`,
/// computed segment by segment with adaptive quadrature and anchored at the
/// node closest to `phi = 1`, so cancellation never accumulates across the
/// window. With `gauge = 0` the profile passes through `phi(0) = 1`.
pub fn build_profile(
    params: SolitonParams,
    phi_min: f64,
    phi_max: f64,
    node_count: usize,
    gauge: f64,
) -> Result<RadialProfile> {
    params.validate()?;
    if !(phi_min > 0.0) || !phi_min.is_finite() || !(phi_max > phi_min) || !phi_max.is_finite() {
        return Err(Error::invalid(format!(
            "profile window must satisfy 0 < phi_min < phi_max, got [{phi_min}, {phi_max}]"
        )));
    }
    if node_count < 16 {
        return Err(Error::invalid(format!(
            "profile needs at least 16 nodes, got {node_count}"
        )));
    }
    if !gauge.is_finite() {
        return Err(Error::invalid("gauge must be finite"));
    }

    let phis = log_linspace(phi_min, phi_max, node_count);
    let inv_rhs = |s: f64| {
        1.0 / params
            .ode_rhs(s)
            .expect("profile speed is evaluable on a positive window")
    };

    let anchor = phis
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = a.1.ln().abs();
            let db = b.1.ln().abs();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();

    let mut t = vec![0.0; node_count];
    t[anchor] = if phis[anchor] >= 1.0 {
        gauge + integrate(&inv_rhs, 1.0, phis[anchor], BUILD_TOL)?
    } else {
        gauge - integrate(&inv_rhs, phis[anchor], 1.0, BUILD_TOL)?
    };
    for j in anchor + 1..node_count {
        t[j] = t[j - 1] + integrate(&inv_rhs, phis[j - 1], phis[j], BUILD_TOL)?;
    }
    for j in (0..anchor).rev() {
        t[j] = t[j + 1] - integrate(&inv_rhs, phis[j], phis[j + 1], BUILD_TOL)?;
    }

    let span = t[node_count - 1] - t[0];
    if !span.is_finite() || span > T_SPAN_LIMIT {
        return Err(Error::invalid(format!(
            "profile window spans {span:.1} units of t, limit is {T_SPAN_LIMIT}"
        )));
    }

    let mut phi1 = vec![0.0; node_count];
    let mut phi2 = vec![0.0; node_count];
    let mut phi3 = vec![0.0; node_count];
    for i in 0..node_count {
        let (d1, d2, d3) = params.derivatives(phis[i])?;
        if !(d1 > 0.0) {
            return Err(Error::numerical(format!(
                "profile speed lost positivity at phi = {}",
                phis[i]
            )));
        }
        phi1[i] = d1;
        phi2[i] = d2;
        phi3[i] = d3;
    }

    let profile = RadialProfile {
        t,
        phi: phis,
        phi1,
        phi2,
        phi3,
        kind: ProfileKind::Soliton(params),
        gauge,
    };
    profile.validate()?;
    Ok(profile)
}

/// Builds a soliton profile resampled onto a uniform `t` grid, as the flow
/// integrator requires.
///
/// A dense log-uniform master profile wide enough to bracket the requested
/// span is built first and then sampled at the uniform nodes, regenerating
/// the derivative arrays through the autonomous equation.
pub fn build_profile_t(
    params: SolitonParams,
    t_min: f64,
    t_max: f64,
    node_count: usize,
) -> Result<RadialProfile> {
    params.validate()?;
    if !t_min.is_finite() || !t_max.is_finite() || !(t_max > t_min) {
        return Err(Error::invalid(format!(
            "t window must be finite with t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if t_max - t_min > T_SPAN_LIMIT {
        return Err(Error::invalid(format!(
            "t window spans {:.1}, limit is {T_SPAN_LIMIT}",
            t_max - t_min
        )));
    }
    if node_count < 16 {
        return Err(Error::invalid(format!(
            "profile needs at least 16 nodes, got {node_count}"
        )));
    }

    let phi_lo = 0.25 * t_min.exp();
    let phi_hi = 4.0 * t_max.exp();
    let master_nodes = (4 * node_count).max(8192);
    let master = build_profile(params, phi_lo, phi_hi, master_nodes, 0.0)?;
    let (m_lo, m_hi) = (master.t[0], master.t[master.len() - 1]);
    if m_lo > t_min || m_hi < t_max {
        return Err(Error::numerical(format!(
            "master profile [{m_lo:.2}, {m_hi:.2}] failed to bracket [{t_min}, {t_max}]"
        )));
    }

    let mut t = vec![0.0; node_count];
    let mut phi = vec![0.0; node_count];
    let mut phi1 = vec![0.0; node_count];
    let mut phi2 = vec![0.0; node_count];
    let mut phi3 = vec![0.0; node_count];
    let h = (t_max - t_min) / (node_count - 1) as f64;
    for i in 0..node_count {
        let ti = t_min + i as f64 * h;
        let row = master.sample(ti)?;
        t[i] = ti;
        phi[i] = row.phi;
        phi1[i] = row.phi1;
        phi2[i] = row.phi2;
        phi3[i] = row.phi3;
    }

    let profile = RadialProfile {
        t,
        phi,
        phi1,
        phi2,
        phi3,
        kind: ProfileKind::Soliton(params),
        gauge: 0.0,
    };
    profile.validate()?;
    Ok(profile)
}

/// The flat model `phi = exp(t)` on a uniform grid; every derivative array
/// reuses the same floating-point values so flatness identities cancel
/// exactly.
pub fn flat_profile(n: usize, t_min: f64, t_max: f64, node_count: usize) -> Result<RadialProfile> {
    if n == 0 || n + 1 > crate::kernels::MAX_ORDER {
        return Err(Error::invalid(format!("dimension n = {n} out of range")));
    }
    if !t_min.is_finite() || !t_max.is_finite() || !(t_max > t_min) {
        return Err(Error::invalid(format!(
            "t window must be finite with t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if node_count < 2 {
        return Err(Error::invalid("profile needs at least two nodes"));
    }
    let h = (t_max - t_min) / (node_count - 1) as f64;
    let t: Vec<f64> = (0..node_count).map(|i| t_min + i as f64 * h).collect();
    let phi: Vec<f64> = t.iter().map(|&ti| ti.exp()).collect();
    let profile = RadialProfile {
        t,
        phi1: phi.clone(),
        phi2: phi.clone(),
        phi3: phi.clone(),
        phi,
        kind: ProfileKind::Custom { n },
        gauge: 0.0,
    };
    profile.validate()?;
    Ok(profile)
}
