//! Rational transfer functions and reconstruction from a black-box evaluator.
//!
//! `rational_fit` recovers `num(s)/den(s)` from point evaluations of a proper
//! rational function, by solving the linear interpolation system
//! `num(s_k) - f(s_k) den(s_k) = 0` with a monic denominator. Sample points
//! sit off the real axis on log-spaced radii around a caller-provided scale so
//! poles of physical loop functions (real axis, origin) are avoided. Common
//! factors make the system rank deficient; when the pivot ratio collapses the
//! fit retries at reduced degrees, which is how pole/zero cancellations are
//! detected and reported.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::matrix::solve_complex;
use crate::numkit::poly::{poly_roots, Poly};
use crate::numkit::rng::SplitMix64;

/// Proper rational function `num/den`, stored with a monic denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf {
    num: Poly,
    den: Poly,
}

impl RationalTf {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parameter("zero denominator".into()));
        }
        if num.degree() > den.degree() && !num.is_zero() {
            return Err(Error::Parameter(format!(
                "improper transfer function: numerator degree {} exceeds denominator degree {}",
                num.degree(),
                den.degree()
            )));
        }
        let lead = den.leading();
        Ok(RationalTf {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() || self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        poly_roots(&self.num)
    }

    /// Denominator degree minus numerator degree.
    pub fn relative_degree(&self) -> usize {
        self.den.degree() - self.num.degree()
    }

    pub fn dc_gain(&self) -> f64 {
        self.num.at_zero() / self.den.at_zero()
    }
}

/// Result of a rational reconstruction.
#[derive(Debug, Clone)]
pub struct RationalFit {
    pub tf: RationalTf,
    /// Degrees the caller asked for (num, den).
    pub requested: (usize, usize),
    /// Pole/zero pairs removed during reduction, in the `s` variable.
    pub cancelled: Vec<Complex64>,
    /// Worst relative error over the held-out validation points.
    pub residual: f64,
}

/// Pivot-ratio threshold below which the interpolation system is treated as
/// rank deficient (a common factor between numerator and denominator).
const DEFICIENCY_RATIO: f64 = 1e-10;

/// Held-out validation tolerance.
const VALIDATION_TOL: f64 = 1e-8;

/// Relative threshold for dropping numerically-zero leading fit coefficients.
const TRIM_TOL: f64 = 1e-9;

/// Reconstructs a proper rational function of the given degrees from point
/// evaluations. `scale` sets the sampling radius (use the dominant bandwidth
/// or pole magnitude). The fit is validated on 25 held-out points with
/// `|s|` spanning `[1, 1e4]`; relative error must stay below 1e-8.
pub fn rational_fit<F>(
    evaluate: F,
    num_deg: usize,
    den_deg: usize,
    scale: f64,
) -> Result<RationalFit>
where
    F: Fn(Complex64) -> Complex64,
{
    if den_deg == 0 {
        return Err(Error::Parameter("denominator degree must be >= 1".into()));
    }
    if num_deg > den_deg {
        return Err(Error::Parameter(
            "numerator degree must not exceed denominator degree".into(),
        ));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Parameter("scale must be positive".into()));
    }

    let mut nd = num_deg;
    let mut dd = den_deg;
    loop {
        match fit_at_degrees(&evaluate, nd, dd, scale) {
            Ok((tf, residual)) => {
                let (tf, cancelled) = cancel_common_factors(&evaluate, tf, scale, residual)?;
                return Ok(RationalFit {
                    tf,
                    requested: (num_deg, den_deg),
                    cancelled,
                    residual,
                });
            }
            Err(FitFailure::Deficient) => {
                if nd == 0 || dd == 1 {
                    return Err(Error::DegenerateSampling {
                        num_deg: nd,
                        den_deg: dd,
                    });
                }
                nd -= 1;
                dd -= 1;
            }
            Err(FitFailure::Residual(r)) => {
                return Err(Error::FitResidual {
                    residual: r,
                    tolerance: VALIDATION_TOL,
                });
            }
        }
    }
}

enum FitFailure {
    /// Interpolation system is rank deficient: degrees are too high.
    Deficient,
    /// System solved but the held-out check failed.
    Residual(f64),
}

/// One fit attempt at fixed degrees, trying two sampling radius ranges.
fn fit_at_degrees<F>(
    evaluate: &F,
    num_deg: usize,
    den_deg: usize,
    scale: f64,
) -> std::result::Result<(RationalTf, f64), FitFailure>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut saw_deficient = false;
    let mut best_residual = f64::INFINITY;
    // Radius spreads in the normalized variable z = s/scale, tried in order;
    // later entries are the re-scaled retries for degenerate sampling or
    // poor conditioning.
    for &(r_lo, r_hi) in &[(0.1, 10.0), (0.3, 3.0), (0.01, 100.0)] {
        let m = num_deg + den_deg + 1;
        let points = sample_points(m, r_lo, r_hi);
        match solve_interpolation(evaluate, num_deg, den_deg, scale, &points) {
            Some(tf) => {
                let residual = validation_residual(evaluate, &tf);
                if residual < VALIDATION_TOL {
                    return Ok((tf, residual));
                }
                best_residual = best_residual.min(residual);
            }
            None => saw_deficient = true,
        }
    }
    if saw_deficient {
        Err(FitFailure::Deficient)
    } else {
        Err(FitFailure::Residual(best_residual))
    }
}

/// Log-spaced radii over `[r_lo, r_hi]` with angles sweeping the open upper
/// half plane; a stride permutation decorrelates radius from angle.
fn sample_points(m: usize, r_lo: f64, r_hi: f64) -> Vec<Complex64> {
    let stride = if m > 2 { m.div_ceil(2) | 1 } else { 1 };
    (0..m)
        .map(|k| {
            let t = if m == 1 { 0.5 } else { k as f64 / (m - 1) as f64 };
            let radius = r_lo * (r_hi / r_lo).powf(t);
            let idx = (k * stride) % m;
            let angle = std::f64::consts::PI * (idx as f64 + 0.5) / m as f64;
            Complex64::from_polar(radius, angle)
        })
        .collect()
}

/// Builds and solves the square interpolation system in the normalized
/// variable `z = s/scale`. Returns `None` when the system is singular or the
/// pivot ratio collapses (rank deficiency).
fn solve_interpolation<F>(
    evaluate: &F,
    num_deg: usize,
    den_deg: usize,
    scale: f64,
    points: &[Complex64],
) -> Option<RationalTf>
where
    F: Fn(Complex64) -> Complex64,
{
    let m = points.len();
    let n_unknowns = num_deg + 1 + den_deg;
    debug_assert_eq!(m, n_unknowns);

    let mut a = vec![Complex64::new(0.0, 0.0); m * n_unknowns];
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    for (row, &z) in points.iter().enumerate() {
        let f = evaluate(z * scale);
        if !f.re.is_finite() || !f.im.is_finite() {
            return None;
        }
        // Numerator columns: z^num_deg .. z^0.
        let mut zp = Complex64::new(1.0, 0.0);
        for j in 0..=num_deg {
            a[row * n_unknowns + (num_deg - j)] = zp;
            zp *= z;
        }
        // Denominator columns (monic): -f * z^(den_deg-1) .. -f * z^0.
        let mut zp = Complex64::new(1.0, 0.0);
        for j in 0..den_deg {
            a[row * n_unknowns + (num_deg + 1 + den_deg - 1 - j)] = -f * zp;
            zp *= z;
        }
        b[row] = f * z.powu(den_deg as u32);
    }

    // Column equilibration: the unknown coefficients can span several
    // decades, which otherwise leaks into the small ones.
    let mut col_scale = vec![1.0f64; n_unknowns];
    for (j, cs) in col_scale.iter_mut().enumerate() {
        let mx = (0..m)
            .map(|i| a[i * n_unknowns + j].norm())
            .fold(0.0f64, f64::max);
        if mx > 0.0 {
            *cs = mx;
            for i in 0..m {
                a[i * n_unknowns + j] /= mx;
            }
        }
    }

    let (min_piv, max_piv) = match solve_complex(&mut a, m, &mut b) {
        Ok(p) => p,
        Err(_) => return None,
    };
    if min_piv < DEFICIENCY_RATIO * max_piv {
        return None;
    }
    for (j, cs) in col_scale.iter().enumerate() {
        b[j] /= cs;
    }

    let num_z = Poly::new(b[..=num_deg].iter().map(|c| c.re).collect()).trim_leading(TRIM_TOL);
    let mut den_coeffs = vec![1.0];
    den_coeffs.extend(b[num_deg + 1..].iter().map(|c| c.re));
    let den_z = Poly::new(den_coeffs);

    let num = num_z.unscale_variable(scale);
    let den = den_z.unscale_variable(scale);
    RationalTf::new(num, den).ok()
}

/// Worst relative error over 25 deterministic held-out points.
fn validation_residual<F>(evaluate: &F, tf: &RationalTf) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    let mut rng = SplitMix64::new(0x7e1d0);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let mag = 10f64.powf(4.0 * rng.next_f64());
        let angle = std::f64::consts::PI * (0.03 + 0.94 * rng.next_f64());
        let s = Complex64::from_polar(mag, angle);
        let truth = evaluate(s);
        let fitted = tf.eval(s);
        let rel = (fitted - truth).norm() / truth.norm().max(1e-300);
        worst = worst.max(rel);
    }
    worst
}

/// Detects residual pole/zero pairs closer than `1e-6 * root scale`, removes
/// them, and re-validates. Reverts if the reduced form validates worse.
fn cancel_common_factors<F>(
    evaluate: &F,
    tf: RationalTf,
    _scale: f64,
    original_residual: f64,
) -> Result<(RationalTf, Vec<Complex64>)>
where
    F: Fn(Complex64) -> Complex64,
{
    if tf.num().is_zero() || tf.num().degree() == 0 || tf.den().degree() == 0 {
        return Ok((tf, Vec::new()));
    }
    let zeros = tf.zeros()?;
    let poles = tf.poles()?;
    let root_scale = zeros
        .iter()
        .chain(&poles)
        .map(|r| r.norm())
        .fold(1.0f64, f64::max);
    let tol = 1e-6 * root_scale;

    let mut keep_zeros = zeros.clone();
    let mut keep_poles = poles.clone();
    let mut cancelled = Vec::new();
    let mut zi = 0;
    while zi < keep_zeros.len() {
        let hit = keep_poles
            .iter()
            .position(|p| (p - keep_zeros[zi]).norm() < tol);
        match hit {
            Some(pi) => {
                cancelled.push(keep_poles[pi]);
                keep_poles.remove(pi);
                keep_zeros.remove(zi);
            }
            None => zi += 1,
        }
    }
    if cancelled.is_empty() {
        return Ok((tf, Vec::new()));
    }

    let num = Poly::from_roots(&keep_zeros, tf.num().leading())?;
    let den = Poly::from_roots(&keep_poles, 1.0)?;
    let reduced = RationalTf::new(num, den)?;
    let residual = validation_residual(evaluate, &reduced);
    if residual <= original_residual.max(1e-6) {
        Ok((reduced, cancelled))
    } else {
        Ok((tf, Vec::new()))
    }
}
