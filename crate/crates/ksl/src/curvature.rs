//! Pointwise metric and curvature data at a radial point `z = (r, 0, ..., 0)`
//! of a profile metric, together with the curvature operator restricted to
//! (1,1)-forms and its positivity conditions.
//!
//! In the unitary frame aligned with the radial point the metric is diagonal
//! with entries `exp(-t) phi'` (radial) and `exp(-t) phi` (tangent), and the
//! whole curvature tensor is generated by three scalar functions of the
//! profile:
//!
//! ```text
//! a = phi - phi'
//! b = (phi' - phi)^2 / phi - (phi'' - 3 phi' + 2 phi)
//! c = (phi'' - 3 phi' + 2 phi)(phi'' + phi' - 2 phi) / phi
//!     + (1/phi' - 1/phi)(phi'' - phi')^2
//!     - (phi''' - 6 phi'' + 11 phi' - 6 phi)
//! ```
//!
//! The quadratic form of the curvature operator on a (1,1)-array `xi` is
//!
//! ```text
//! exp(-2t) [ a (|tr xi|^2 + sum_{ab} |xi_ab|^2)
//!          + b (sum_a |xi_0a|^2 + 2 Re(conj(xi_00) tr xi) + sum_a |xi_a0|^2)
//!          + c |xi_00|^2 ]
//! ```
//!
//! and strict positivity of the operator is equivalent to the four scalar
//! conditions checked by [`positivity_check`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{eval_f, eval_g, eval_h};
use crate::soliton::{ProfileKind, ProfileSample, RadialProfile, SolitonParams};

/// Metric components and log-density derivatives at one radius.
#[derive(Debug, Clone, Copy)]
pub struct MetricAtRadius {
    pub n: usize,
    pub t: f64,
    /// `g` in the radial direction, `exp(-t) phi'`.
    pub g_radial: f64,
    /// `g` in each tangent direction, `exp(-t) phi`.
    pub g_tangent: f64,
    /// `exp(-nt) phi' phi^{n-1}`.
    pub det_g: f64,
    /// First three `t`-derivatives of
    /// `f_R(t) = n t - (n-1) log(phi) - log(phi')`.
    pub ricci_potential_derivs: [f64; 3],
    /// The interpolated profile row the components came from.
    pub sample: ProfileSample,
}

impl MetricAtRadius {
    /// Scalar curvature `(n-1) f_R' / phi + f_R'' / phi'`.
    pub fn scalar_curvature(&self) -> f64 {
        let [d1, d2, _] = self.ricci_potential_derivs;
        (self.n as f64 - 1.0) * d1 / self.sample.phi + d2 / self.sample.phi1
    }
}

/// Slope of the piecewise-linear interpolant of the stored third
/// derivative, the best fourth-derivative estimate a raw profile offers.
fn phi4_estimate(profile: &RadialProfile, t: f64) -> f64 {
    let grid = &profile.t;
    let m = grid.len();
    let seg_slope = |i: usize| (profile.phi3[i + 1] - profile.phi3[i]) / (grid[i + 1] - grid[i]);
    match grid.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
        Ok(0) => seg_slope(0),
        Ok(i) if i == m - 1 => seg_slope(m - 2),
        Ok(i) => 0.5 * (seg_slope(i - 1) + seg_slope(i)),
        Err(i) => seg_slope(i.clamp(1, m - 1) - 1),
    }
}

/// Metric data at coordinate `t`, interpolated from the profile.
pub fn metric_at(profile: &RadialProfile, t: f64) -> Result<MetricAtRadius> {
    let s = profile.sample(t)?;
    let n = profile.n();
    let nf = n as f64;
    let derivs = match profile.kind {
        ProfileKind::Soliton(p) => [
            p.lambda * s.phi1 - s.phi,
            p.lambda * s.phi2 - s.phi1,
            p.lambda * s.phi3 - s.phi2,
        ],
        ProfileKind::Custom { .. } => {
            let q1 = s.phi1 / s.phi;
            let q2 = s.phi2 / s.phi1;
            let d1 = nf - (nf - 1.0) * q1 - q2;
            let d2 = -(nf - 1.0) * (s.phi2 / s.phi - q1 * q1) - (s.phi3 / s.phi1 - q2 * q2);
            let phi4 = phi4_estimate(profile, t);
            let d3 = -(nf - 1.0)
                * (s.phi3 / s.phi - 3.0 * s.phi2 * s.phi1 / (s.phi * s.phi) + 2.0 * q1 * q1 * q1)
                - (phi4 / s.phi1 - 3.0 * s.phi3 * s.phi2 / (s.phi1 * s.phi1) + 2.0 * q2 * q2 * q2);
            [d1, d2, d3]
        }
    };
    let damp = (-t).exp();
    Ok(MetricAtRadius {
        n,
        t,
        g_radial: damp * s.phi1,
        g_tangent: damp * s.phi,
        det_g: (-nf * t).exp() * s.phi1 * s.phi.powi(n as i32 - 1),
        ricci_potential_derivs: derivs,
        sample: s,
    })
}

pub(crate) fn abc_from_sample(s: &ProfileSample) -> (f64, f64, f64) {
    // Each integer combination is grouped into differences of neighbors so
    // that flat data (all four derivatives equal) gives exact zeros.
    let a = s.phi - s.phi1;
    let d10 = s.phi1 - s.phi;
    let d21 = s.phi2 - s.phi1;
    let d32 = s.phi3 - s.phi2;
    let d2 = d21 - 2.0 * d10;
    let d2_plus = (s.phi2 - s.phi) + d10;
    let d3 = d32 - 5.0 * d21 + 6.0 * d10;
    let b = d10 * d10 / s.phi - d2;
    let c = d2 * d2_plus / s.phi + (1.0 / s.phi1 - 1.0 / s.phi) * d21 * d21 - d3;
    (a, b, c)
}

/// The three curvature generators `(a, b, c)` at coordinate `t`.
pub fn abc_at(profile: &RadialProfile, t: f64) -> Result<(f64, f64, f64)> {
    Ok(abc_from_sample(&profile.sample(t)?))
}

/// `a + b` through the algebraically collapsed route
/// `((phi')^2 - phi phi'') / phi`, used to cross-check the definitions.
pub fn sum_ab_collapsed(s: &ProfileSample) -> f64 {
    (s.phi1 * s.phi1 - s.phi * s.phi2) / s.phi
}

/// `c + 2a + 4b` through the collapsed route
/// `((phi'')^2 - phi' phi''') / phi'`.
pub fn sum_c2a4b_collapsed(s: &ProfileSample) -> f64 {
    (s.phi2 * s.phi2 - s.phi1 * s.phi3) / s.phi1
}

/// The combinations `(a, a+b, c+2a+4b)` that drive both the positivity
/// conditions and the operator matrix, evaluated for a soliton through its
/// kernel closed forms:
///
/// ```text
/// a         = A f_{n+1}(lambda phi) / phi^{n-1}
/// a + b     = (lambda-1) phi' (-g_{n+1}(lambda phi)) / (lambda^{n+1} phi^n)
/// c + 2a+4b = (lambda-1) (phi')^2 (-h_n(lambda phi)) / (lambda phi)^{n+1}
/// ```
///
/// Each right-hand side is a product of positive factors, so the values keep
/// full relative accuracy into the asymptotic regime where the difference
/// formulas of `abc_from_sample` cancel to roundoff noise (the true values
/// decay like powers, or for `n = 1` like `exp(-lambda phi)`).
pub fn soliton_combos(params: &SolitonParams, s: &ProfileSample) -> Result<(f64, f64, f64)> {
    let n = params.n;
    let lam = params.lambda;
    let x = lam * s.phi;
    let a = params.coefficient() * eval_f(n + 1, x)? / s.phi.powi(n as i32 - 1);
    let ab =
        (lam - 1.0) * s.phi1 * -eval_g(n + 1, x)? / (lam.powi(n as i32 + 1) * s.phi.powi(n as i32));
    let cab = (lam - 1.0) * s.phi1 * s.phi1 * -eval_h(n, x)? / x.powi(n as i32 + 1);
    Ok((a, ab, cab))
}

/// Every entry of the operator matrix is one of `a`, `2a`, `a + b`, or
/// `c + 2a + 4b`, so the assembly takes the two sums ready-made rather than
/// rebuilding them from `b` and `c` and losing their digits again.
fn matrix_from_combos(n: usize, t: f64, a: f64, ab: f64, cab: f64) -> DMatrix<f64> {
    let scale = (-2.0 * t).exp();
    let mut m = DMatrix::<f64>::zeros(n * n, n * n);
    for alpha in 0..n {
        for beta in 0..n {
            let p = alpha * n + alpha;
            let q = beta * n + beta;
            let v = if alpha == beta {
                if alpha == 0 {
                    cab
                } else {
                    2.0 * a
                }
            } else if alpha == 0 || beta == 0 {
                ab
            } else {
                a
            };
            m[(p, q)] = scale * v;
        }
    }
    for alpha in 0..n {
        for beta in 0..n {
            if alpha == beta {
                continue;
            }
            let p = alpha * n + beta;
            let v = if alpha == 0 || beta == 0 { ab } else { a };
            m[(p, p)] = scale * v;
        }
    }
    m
}

/// `(a, a+b, c+2a+4b)` by the route suited to the profile kind: kernel
/// closed forms for solitons, neighbor-difference forms (exact zeros on flat
/// data) for everything else.
fn combos_for(profile: &RadialProfile, s: &ProfileSample) -> Result<(f64, f64, f64)> {
    match profile.kind {
        ProfileKind::Soliton(p) => soliton_combos(&p, s),
        ProfileKind::Custom { .. } => {
            let (a, b, c) = abc_from_sample(s);
            Ok((a, a + b, c + 2.0 * a + 4.0 * b))
        }
    }
}

/// The curvature operator on (1,1)-arrays flattened row-major by
/// `(alpha, beta)`, a real symmetric `n^2 x n^2` matrix including the
/// `exp(-2t)` prefactor.
pub fn curvature_form_matrix(profile: &RadialProfile, t: f64) -> Result<DMatrix<f64>> {
    let s = profile.sample(t)?;
    let (a, ab, cab) = combos_for(profile, &s)?;
    Ok(matrix_from_combos(profile.n(), t, a, ab, cab))
}

/// Evaluates the sesquilinear pairing `xi^dagger M xi` of a complex array
/// given by its real and imaginary parts; for the real symmetric matrices
/// built here the two parts decouple.
pub fn sesquilinear_value(m: &DMatrix<f64>, xi_re: &[f64], xi_im: &[f64]) -> f64 {
    let dim = m.nrows();
    assert_eq!(xi_re.len(), dim);
    assert_eq!(xi_im.len(), dim);
    let mut acc = 0.0;
    for p in 0..dim {
        let mut row_re = 0.0;
        let mut row_im = 0.0;
        for q in 0..dim {
            row_re += m[(p, q)] * xi_re[q];
            row_im += m[(p, q)] * xi_im[q];
        }
        acc += xi_re[p] * row_re + xi_im[p] * row_im;
    }
    acc
}

/// The quadratic form written out termwise from its defining sums, used as
/// an independent oracle for the matrix assembly.
pub fn quadratic_form_direct(
    n: usize,
    t: f64,
    a: f64,
    b: f64,
    c: f64,
    xi_re: &[f64],
    xi_im: &[f64],
) -> f64 {
    assert_eq!(xi_re.len(), n * n);
    assert_eq!(xi_im.len(), n * n);
    let at = |alpha: usize, beta: usize| (xi_re[alpha * n + beta], xi_im[alpha * n + beta]);
    let mut trace = (0.0, 0.0);
    let mut frobenius = 0.0;
    for alpha in 0..n {
        let d = at(alpha, alpha);
        trace.0 += d.0;
        trace.1 += d.1;
        for beta in 0..n {
            let v = at(alpha, beta);
            frobenius += v.0 * v.0 + v.1 * v.1;
        }
    }
    let mut row0 = 0.0;
    let mut col0 = 0.0;
    for alpha in 0..n {
        let r = at(0, alpha);
        row0 += r.0 * r.0 + r.1 * r.1;
        let l = at(alpha, 0);
        col0 += l.0 * l.0 + l.1 * l.1;
    }
    let x00 = at(0, 0);
    let cross = 2.0 * (x00.0 * trace.0 + x00.1 * trace.1);
    let q = a * (trace.0 * trace.0 + trace.1 * trace.1 + frobenius)
        + b * (row0 + cross + col0)
        + c * (x00.0 * x00.0 + x00.1 * x00.1);
    (-2.0 * t).exp() * q
}

/// Sum of the absolute magnitudes of the terms of the quadratic form, the
/// scale at which any evaluation of it accumulates rounding. Comparisons
/// between two evaluation orders are meaningful relative to this, not to the
/// net value, which cancels toward zero in the asymptotic regime.
pub fn quadratic_form_gross(
    n: usize,
    t: f64,
    a: f64,
    b: f64,
    c: f64,
    xi_re: &[f64],
    xi_im: &[f64],
) -> f64 {
    assert_eq!(xi_re.len(), n * n);
    assert_eq!(xi_im.len(), n * n);
    let at = |alpha: usize, beta: usize| (xi_re[alpha * n + beta], xi_im[alpha * n + beta]);
    let mut trace = (0.0, 0.0);
    let mut frobenius = 0.0;
    for alpha in 0..n {
        let d = at(alpha, alpha);
        trace.0 += d.0;
        trace.1 += d.1;
        for beta in 0..n {
            let v = at(alpha, beta);
            frobenius += v.0 * v.0 + v.1 * v.1;
        }
    }
    let mut row0 = 0.0;
    let mut col0 = 0.0;
    for alpha in 0..n {
        let r = at(0, alpha);
        row0 += r.0 * r.0 + r.1 * r.1;
        let l = at(alpha, 0);
        col0 += l.0 * l.0 + l.1 * l.1;
    }
    let x00 = at(0, 0);
    let cross = 2.0 * (x00.0 * trace.0 + x00.1 * trace.1).abs();
    let q = a.abs() * (trace.0 * trace.0 + trace.1 * trace.1 + frobenius)
        + b.abs() * (row0 + cross + col0)
        + c.abs() * (x00.0 * x00.0 + x00.1 * x00.1);
    (-2.0 * t).exp() * q
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn smallest_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigenvalue iteration failed to converge"))?;
    Ok(eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Outcome of the four scalar positivity conditions plus the smallest
/// eigenvalue of the assembled operator.
#[derive(Debug, Clone, Copy)]
pub struct PositivityCheck {
    /// `a > 0`.
    pub holds_a: bool,
    /// `a + b > 0`.
    pub holds_b: bool,
    /// `c + 2a + 4b > 0`.
    pub holds_c: bool,
    /// `(a+b)^2 < (n/(n-1)) a (c+2a+4b)`; vacuously true when `n = 1`.
    pub holds_d: bool,
    pub min_eigenvalue: f64,
}

impl PositivityCheck {
    pub fn all_strict(&self) -> bool {
        self.holds_a && self.holds_b && self.holds_c && self.holds_d && self.min_eigenvalue > 0.0
    }
}

fn conditions_from_combos(n: usize, a: f64, ab: f64, cab: f64) -> (bool, bool, bool, bool) {
    let holds_d = if n == 1 {
        true
    } else {
        ab * ab < n as f64 / (n as f64 - 1.0) * a * cab
    };
    (a > 0.0, ab > 0.0, cab > 0.0, holds_d)
}

/// Runs the positivity conditions at coordinate `t`.
pub fn positivity_check(profile: &RadialProfile, t: f64) -> Result<PositivityCheck> {
    let s = profile.sample(t)?;
    let (a, ab, cab) = combos_for(profile, &s)?;
    let (holds_a, holds_b, holds_c, holds_d) = conditions_from_combos(profile.n(), a, ab, cab);
    let min_eigenvalue = smallest_eigenvalue(&matrix_from_combos(profile.n(), t, a, ab, cab))?;
    Ok(PositivityCheck {
        holds_a,
        holds_b,
        holds_c,
        holds_d,
        min_eigenvalue,
    })
}

/// Scalar curvature at coordinate `t`.
pub fn scalar_curvature(profile: &RadialProfile, t: f64) -> Result<f64> {
    Ok(metric_at(profile, t)?.scalar_curvature())
}

/// Everything the curvature scan reports at one radius.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c_curv: f64,
    pub scalar_r: f64,
    pub op_matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub holds_a: bool,
    pub holds_b: bool,
    pub holds_c: bool,
    pub holds_d: bool,
}

/// Assembles the full scan record at one radius. The reported `b` and `c`
/// are recovered from the stable combinations, so in the far tail they carry
/// the absolute accuracy of those sums rather than independent digits.
pub fn curvature_sample(profile: &RadialProfile, t: f64) -> Result<CurvatureSample> {
    let metric = metric_at(profile, t)?;
    let (a, ab, cab) = combos_for(profile, &metric.sample)?;
    let (b, c_curv) = (ab - a, cab + 2.0 * a - 4.0 * ab);
    let op_matrix = matrix_from_combos(profile.n(), t, a, ab, cab);
    let min_eigenvalue = smallest_eigenvalue(&op_matrix)?;
    let (holds_a, holds_b, holds_c, holds_d) = conditions_from_combos(profile.n(), a, ab, cab);
    Ok(CurvatureSample {
        t,
        a,
        b,
        c_curv,
        scalar_r: metric.scalar_curvature(),
        op_matrix,
        min_eigenvalue,
        holds_a,
        holds_b,
        holds_c,
        holds_d,
    })
}
