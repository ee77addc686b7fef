//! Exponential tail kernels and the derived combinations used by the
//! soliton and curvature modules.
//!
//! The base family is
//!
//! ```text
//! f_k(x) = (-1)^k * sum_{j >= k} (-x)^j / j!
//! ```
//!
//! so `f_0(x) = exp(-x)` and each `f_k` integrates the previous one:
//! `f_k' = f_{k-1}` with `f_k(0) = 0` for `k >= 1`. On top of it sit the
//! combinations
//!
//! ```text
//! g_k(x) = (k-1+x) (k-1)! f_k(x) - x^k
//! h_k(x) = (k-1 + (k-1+x)^2) k! f_k(x) - k (k-1+x) x^k
//! l_n(x) = (n-1)! f_n(x) P(x) + Q(x)
//! ```
//!
//! with `P(x) = -x^2 + (2-2n)x - n(n-1)` and `Q(x) = x^n (x + n - 1)`,
//! plus the discriminant-like quantity `L` exposed through [`eval_big_l`].
//! `f_k` is strictly positive for `x > 0`, `g_k` and `h_k` are nonpositive,
//! and `l_n` and `L` are nonnegative; those sign facts carry the positivity
//! proofs downstream, so the evaluators below are built to preserve them in
//! floating point rather than merely approximate the values.
//!
//! Every combination is evaluated through one of two routes chosen by the
//! size of `x`. Below `x = k + 10` the alternating tail series for `f_k`
//! converges without destructive cancellation and the combinations are formed
//! directly from it. Above the switch the series forms of `g_k` and `h_k`
//! would subtract nearly equal large numbers (for `g_1(50)` the naive route
//! returns exactly `0.0` against a true value near `-9.6e-21`), so the
//! polynomial part of each combination is cancelled against `x^k`
//! symbolically and only the exact remainder polynomial plus an
//! `exp(-x)`-sized correction is evaluated. The two routes agree to better
//! than `1e-10` in a band around the switch point.

use crate::error::{Error, Result};

/// Largest kernel order any evaluator accepts.
pub const MAX_ORDER: usize = 12;

const FACTORIALS: [f64; 14] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
];

pub(crate) fn factorial(m: usize) -> f64 {
    FACTORIALS[m]
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::invalid(format!(
            "kernel order {k} exceeds supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!(
            "kernel argument must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

fn series_switch(k: usize) -> f64 {
    k as f64 + 10.0
}

/// Tail series with Kahan compensation, valid for moderate `x`.
fn f_series(k: usize, x: f64) -> f64 {
    let mut term = 1.0;
    for j in 1..=k {
        term *= -x / j as f64;
    }
    let mut sum = term;
    let mut comp = 0.0;
    let mut j = k;
    while term != 0.0 {
        j += 1;
        term *= -x / j as f64;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    if k % 2 == 1 {
        -sum
    } else {
        sum
    }
}

/// Complement form `(-1)^k (exp(-x) - sum_{j<k} (-x)^j/j!)`, valid once the
/// discarded head dominates the tail.
fn f_closed(k: usize, x: f64) -> f64 {
    let mut head = 0.0;
    let mut p = 1.0;
    for j in 0..k {
        head += p;
        p *= -x / (j + 1) as f64;
    }
    let v = (-x).exp() - head;
    if k % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Evaluates `f_k(x)`.
pub fn eval_f(k: usize, x: f64) -> Result<f64> {
    check_order(k)?;
    check_x(x)?;
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if k == 0 {
        return Ok((-x).exp());
    }
    if x < series_switch(k) {
        Ok(f_series(k, x))
    } else {
        Ok(f_closed(k, x))
    }
}

/// Remainder polynomial of `g_k` after the `x^k` and `x^{k-1}` terms cancel
/// against `(k-1+x)(k-1)! f_k`. Coefficients are exact integers divided by
/// small factorials, so Horner evaluation is benign.
fn g_polynomial(k: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for m in (0..=k - 2).rev() {
        let sign = if (k + m).is_multiple_of(2) { 1.0 } else { -1.0 };
        let c = sign * factorial(k - 1) * (m as f64 - k as f64 + 1.0) / factorial(m);
        acc = acc * x + c;
    }
    acc
}

/// Evaluates `g_k(x) = (k-1+x)(k-1)! f_k(x) - x^k` for `k >= 1`.
pub fn eval_g(k: usize, x: f64) -> Result<f64> {
    check_order(k)?;
    check_x(x)?;
    if k == 0 {
        return Err(Error::invalid("g_k requires k >= 1"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if k == 1 {
        return Ok(-x * (-x).exp());
    }
    if x < series_switch(k) {
        let f = f_series(k, x);
        Ok((k as f64 - 1.0 + x) * factorial(k - 1) * f - x.powi(k as i32))
    } else {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let expo = (k as f64 - 1.0 + x) * factorial(k - 1) * sign * (-x).exp();
        Ok(g_polynomial(k, x) + expo)
    }
}

/// Remainder polynomial of `h_k`; the top three powers cancel exactly.
fn h_polynomial(k: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for m in (0..=k - 2).rev() {
        let sign = if (k + m + 1).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let md = m as f64 - k as f64;
        let c = sign * factorial(k) * (md + 1.0) * md / factorial(m);
        acc = acc * x + c;
    }
    acc
}

/// Evaluates `h_k(x) = (k-1+(k-1+x)^2) k! f_k(x) - k(k-1+x) x^k` for `k >= 1`.
pub fn eval_h(k: usize, x: f64) -> Result<f64> {
    check_order(k)?;
    check_x(x)?;
    if k == 0 {
        return Err(Error::invalid("h_k requires k >= 1"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if k == 1 {
        return Ok(-x * x * (-x).exp());
    }
    let km1 = k as f64 - 1.0;
    let quad = km1 + (km1 + x) * (km1 + x);
    if x < series_switch(k) {
        let f = f_series(k, x);
        Ok(quad * factorial(k) * f - k as f64 * (km1 + x) * x.powi(k as i32))
    } else {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let expo = quad * factorial(k) * sign * (-x).exp();
        Ok(h_polynomial(k, x) + expo)
    }
}

/// Coefficients (ascending) of the polynomial part of the `m`-fold
/// antiderivative of `x^2 exp(-x)` with all integration constants fixed by
/// vanishing values at zero. Built by repeated term-wise integration; the
/// constant term is the integer `(-1)^{m+1} m (m+1)`, assigned exactly.
fn l_poly_coeffs(m: usize) -> Vec<f64> {
    let mut coeffs: Vec<f64> = Vec::with_capacity(m);
    for i in 0..m {
        coeffs.insert(0, 0.0);
        for (j, c) in coeffs.iter_mut().enumerate().skip(1) {
            *c /= j as f64;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[0] = sign * ((i + 1) * (i + 2)) as f64;
    }
    coeffs
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Value of `l_n^{(j)}(x)` through the antiderivative representation
/// `(n-1)! (p_m(x) + (-1)^m exp(-x) q_m(x))` with `m = n - 1 - j` and
/// `q_m(x) = x^2 + 2 m x + m (m+1)`.
///
/// Every coefficient is a small rational, so the evaluation stays
/// cancellation-free at large `x`, unlike the defining combination
/// `(n-1)! f_n P + Q` whose two halves grow like `x^{n+1}` while their sum
/// stays polynomial of degree `n - 2`. At `x = 0` the constant terms of
/// `p_m` and `q_m` are equal integers with opposite effective signs, so the
/// value is exactly zero in floating point.
fn l_antiderivative(n: usize, m: usize, x: f64) -> f64 {
    let mf = m as f64;
    let q = x * x + 2.0 * mf * x + mf * (mf + 1.0);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let p = horner(&l_poly_coeffs(m), x);
    factorial(n - 1) * (p + sign * (-x).exp() * q)
}

/// Evaluates `l_n(x)`, the `(n-1)`-fold antiderivative of
/// `(n-1)! x^2 exp(-x)` vanishing to order `n` at zero.
pub fn eval_l(n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("l_n requires n >= 1"));
    }
    check_order(n + 1)?;
    check_x(x)?;
    Ok(l_antiderivative(n, n - 1, x))
}

/// Evaluates the `j`-th derivative of `l_n` analytically, for `j <= n`.
///
/// For `j < n` this is the `(n-1-j)`-fold antiderivative form; `j = n - 1`
/// reduces to `(n-1)! x^2 exp(-x)` and `j = n` to its derivative. At `x = 0`
/// every derivative below order `n` is exactly zero in floating point.
pub fn eval_l_derivative(n: usize, j: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("l_n requires n >= 1"));
    }
    if j > n {
        return Err(Error::invalid(format!(
            "analytic l derivative supports j <= n, got j={j}, n={n}"
        )));
    }
    check_order(n + 1)?;
    check_x(x)?;
    if j == n {
        return Ok(factorial(n - 1) * (2.0 * x - x * x) * (-x).exp());
    }
    Ok(l_antiderivative(n, n - 1 - j, x))
}

/// Value of the discriminant quantity `L`, possibly still carrying its
/// `exp(-2x)` damping when the undamped value would overflow.
#[derive(Debug, Clone, Copy)]
pub struct BigL {
    pub value: f64,
    /// True when `value` is `exp(-2x) L(x)` rather than `L(x)` itself.
    pub scaled: bool,
}

/// Integer coefficient vectors for the exponential split of `exp(-2x) L`.
///
/// Writing `u = (n-1)! f_n = pi(x) + alpha exp(-x)` with the degree-(n-1)
/// polynomial `pi` and `alpha = (-1)^n (n-1)!`, the damped combination
/// `u^2 - u beta + x^{2n-1}` (with `beta = x^n + n x^{n-1}`) becomes
/// `alpha^2 exp(-2x) + alpha exp(-x) mid(x) + poly(x)` where
/// `mid = 2 pi - beta` and `poly = pi^2 - pi beta + x^{2n-1}`.
///
/// Every input coefficient is an integer, so the convolution is carried out
/// exactly in `i128`; the two leading coefficients of `poly` cancel exactly,
/// which is what makes this form usable at large `x` where the three raw
/// terms agree to all their floating-point digits.
fn big_l_split(n: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let sign: i128 = if n.is_multiple_of(2) { 1 } else { -1 };
    let mut pi: Vec<i128> = Vec::with_capacity(n);
    for j in 0..n {
        let ratio: i128 = ((j + 1)..n).map(|i| i as i128).product();
        let term_sign = if (n + j + 1).is_multiple_of(2) { 1 } else { -1 };
        pi.push(term_sign * ratio);
    }
    let mut beta = vec![0i128; n + 1];
    beta[n] = 1;
    beta[n - 1] += n as i128;
    let mut mid = vec![0i128; n + 1];
    for (j, c) in pi.iter().enumerate() {
        mid[j] += 2 * c;
    }
    for (j, c) in beta.iter().enumerate() {
        mid[j] -= c;
    }
    let mut poly = vec![0i128; 2 * n];
    for (i, a) in pi.iter().enumerate() {
        for (j, b) in pi.iter().enumerate() {
            poly[i + j] += a * b;
        }
        for (j, b) in beta.iter().enumerate() {
            poly[i + j] -= a * b;
        }
    }
    poly[2 * n - 1] += 1;
    debug_assert_eq!(poly[2 * n - 1], 0);
    debug_assert!(n == 1 || poly[2 * n - 2] == 0);
    let alpha = sign as f64 * factorial(n - 1);
    let to_f64 = |v: Vec<i128>| v.into_iter().map(|c| c as f64).collect();
    (alpha, to_f64(mid), to_f64(poly))
}

/// Evaluates `L(x)` where
/// `exp(-2x) L(x) = u^2 - u (x^n + n x^{n-1}) + x^{2n-1}` with
/// `u = (n-1)! f_n(x)`, through the exponential split of `big_l_split` so
/// the value keeps its sign and leading digits at large `x`.
///
/// The damped combination is always computed first; the result is undamped
/// only when that cannot overflow, and the `scaled` flag reports which form
/// was returned. For `x` below roughly `1e-6` the combination loses its
/// leading digits to cancellation (the true value grows like `x^{2n}`), so
/// sign tests should stay away from a tiny neighbourhood of the origin.
pub fn eval_big_l(n: usize, x: f64) -> Result<BigL> {
    if n == 0 {
        return Err(Error::invalid("L requires n >= 1"));
    }
    check_order(n)?;
    check_x(x)?;
    let (alpha, mid, poly) = big_l_split(n);
    let s = if x == 0.0 {
        0.0
    } else {
        alpha * alpha * (-2.0 * x).exp() + alpha * (-x).exp() * horner(&mid, x) + horner(&poly, x)
    };
    if s == 0.0 {
        return Ok(BigL {
            value: 0.0,
            scaled: false,
        });
    }
    let ln_total = 2.0 * x + s.abs().ln();
    if ln_total < 700.0 && 2.0 * x < 709.0 {
        Ok(BigL {
            value: s * (2.0 * x).exp(),
            scaled: false,
        })
    } else {
        Ok(BigL {
            value: s,
            scaled: true,
        })
    }
}

/// Worst scaled residuals of the derivative chains over a grid.
///
/// Residuals compare a finite-difference derivative against the claimed
/// analytic relative, scaled by `max(1, |claimed|)` so the chains remain
/// comparable where the raw values grow polynomially.
#[derive(Debug, Clone, Copy)]
pub struct KernelIdentityReport {
    pub n: usize,
    pub step: f64,
    /// Worst residual of `d/dx f_k = f_{k-1}` for `k = 1 ..= n+1`.
    pub f_chain: f64,
    /// Worst residual of `d/dx g_{k+1} = k g_k` for `k = 1 ..= n`.
    pub g_chain: f64,
    /// Worst residual of `d/dx h_{k+1} = (k+1) h_k` for `k = 1 ..= n`.
    pub h_chain: f64,
    /// Worst residual of the `l` chain against `(n-1)! x^2 exp(-x)`.
    pub l_chain: f64,
}

impl KernelIdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.f_chain
            .max(self.g_chain)
            .max(self.h_chain)
            .max(self.l_chain)
    }
}

fn scaled_residual(fd: f64, claimed: f64) -> f64 {
    (fd - claimed).abs() / claimed.abs().max(1.0)
}

fn fd_derivative<F>(f: &F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if x >= 2.0 * h {
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    } else {
        let forward =
            -11.0 * f(x)? + 18.0 * f(x + h)? - 9.0 * f(x + 2.0 * h)? + 2.0 * f(x + 3.0 * h)?;
        Ok(forward / (6.0 * h))
    }
}

/// Checks every derivative chain at the given grid points with a central
/// difference of width `step` (one-sided near the origin) and reports the
/// worst scaled residual per chain.
pub fn kernel_identity_report(n: usize, grid: &[f64], step: f64) -> Result<KernelIdentityReport> {
    if n == 0 {
        return Err(Error::invalid("identity report requires n >= 1"));
    }
    check_order(n + 1)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    if grid.is_empty() {
        return Err(Error::invalid("identity report requires a nonempty grid"));
    }
    for &x in grid {
        check_x(x)?;
    }

    let mut report = KernelIdentityReport {
        n,
        step,
        f_chain: 0.0,
        g_chain: 0.0,
        h_chain: 0.0,
        l_chain: 0.0,
    };

    for &x in grid {
        for k in 1..=n + 1 {
            let fd = fd_derivative(&|t| eval_f(k, t), x, step)?;
            let claimed = eval_f(k - 1, x)?;
            report.f_chain = report.f_chain.max(scaled_residual(fd, claimed));
        }
        for k in 1..=n {
            let fd = fd_derivative(&|t| eval_g(k + 1, t), x, step)?;
            let claimed = k as f64 * eval_g(k, x)?;
            report.g_chain = report.g_chain.max(scaled_residual(fd, claimed));

            let fd = fd_derivative(&|t| eval_h(k + 1, t), x, step)?;
            let claimed = (k as f64 + 1.0) * eval_h(k, x)?;
            report.h_chain = report.h_chain.max(scaled_residual(fd, claimed));
        }
        let claimed = factorial(n - 1) * x * x * (-x).exp();
        if n == 1 {
            let direct = eval_l(1, x)?;
            report.l_chain = report.l_chain.max(scaled_residual(direct, claimed));
        } else {
            let fd = fd_derivative(&|t| eval_l_derivative(n, n - 2, t), x, step)?;
            report.l_chain = report.l_chain.max(scaled_residual(fd, claimed));
        }
    }
    Ok(report)
}
