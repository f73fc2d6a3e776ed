//! Loop transfer functions and structural analyses.
//!
//! All transfer functions are reconstructed numerically from the inner-closed
//! augmented system's resolvent, `C_a (sI - A)^{-1} column`, rather than from
//! any printed rational expression: the state-space route is unambiguous and
//! the structural claims (integrator, relative degree, lead/lag character,
//! right-half-plane zero condition) are validated on the result. Pole/zero
//! reductions are reported, never silent: modes of `A` that a channel cannot
//! see come back in `hidden_modes`, and closed-loop pole sets are always the
//! locus roots plus those fixed modes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::loopsys::{AugmentedSystem, Stage};
use crate::numkit::{poly_roots, rational_fit, resolvent_apply, RationalTf};

/// Default force-gain grid: 60 log-spaced points over [1e-2, 1e2].
pub fn default_gain_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 60)
}

/// Log-spaced grid, endpoints included.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// One extracted transfer function plus everything the fit reduced away.
#[derive(Debug, Clone)]
pub struct TfChannel {
    pub tf: RationalTf,
    /// Eigenvalues of the inner-closed A matrix that do not appear among the
    /// channel's poles (cancelled / unreachable modes).
    pub hidden_modes: Vec<Complex64>,
    /// Worst held-out relative error of the fit.
    pub residual: f64,
}

/// The four exogenous transfer functions of the inner-closed loop.
#[derive(Debug, Clone)]
pub struct TfSet {
    /// Open-loop transfer function `tau_per -> tau_int_hat`.
    pub l: TfChannel,
    /// Unknown-disturbance channel `tau_d^u -> tau_int_hat`.
    pub t_tau_d: TfChannel,
    /// Identified-input channel `tau_i -> tau_int_hat`.
    pub t_tau_i: TfChannel,
    /// Velocity-noise channel `eta_qdot -> tau_int_hat` (biproper).
    pub t_noise: TfChannel,
}

/// Extraction residual gate.
const EXTRACTION_TOL: f64 = 1e-6;

/// Reconstructs the exogenous transfer functions of the inner loop from the
/// resolvent of the inner-closed, environment-folded augmented system.
pub fn extract_tfs(sys: &AugmentedSystem) -> Result<TfSet> {
    if sys.stage() != Stage::InnerClosed {
        return Err(Error::WrongStage {
            required: Stage::InnerClosed.name(),
            actual: sys.stage().name(),
        });
    }
    if !sys.env_folded() {
        return Err(Error::Parameter(
            "transfer-function extraction requires the environment folded into the plant".into(),
        ));
    }

    let a = sys.a();
    let n = sys.order();
    let eig_a = sys.eigenvalues()?;
    let scale = eig_a.iter().map(|l| l.norm()).fold(1.0f64, f64::max);
    let c_row = sys.c_a().row(0).to_vec();

    let strictly_proper = |col: Vec<f64>| {
        let a = a.clone();
        let c = c_row.clone();
        move |s: Complex64| -> Complex64 {
            match resolvent_apply(&a, s, &col) {
                Ok(w) => c.iter().zip(&w).map(|(ci, wi)| wi * *ci).sum(),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        }
    };

    let l = channel("L", strictly_proper(sys.b_a().col(0)), n - 1, n, scale, &eig_a)?;
    let t_tau_d = channel(
        "T_tau_d",
        strictly_proper(sys.d_a().col(0)),
        n - 1,
        n,
        scale,
        &eig_a,
    )?;
    let t_tau_i = channel(
        "T_tau_i",
        strictly_proper(sys.b_rho_a().col(0)),
        n - 1,
        n,
        scale,
        &eig_a,
    )?;

    // Velocity noise drives the state through the direct eta column and the
    // eta' column times s (Laplace of the derivative). The derivative term
    // carries the `-C_R L_R` output feedthrough implicitly, so the channel is
    // biproper. This equals the measured-output formulation
    // `C_a (sI - A)^{-1} N_meas + feed` exactly.
    let n_direct = sys.n_a().col(1);
    let n_deriv = sys.n_a().col(3);
    let a_cl = a.clone();
    let c_cl = c_row.clone();
    let noise_eval = move |s: Complex64| -> Complex64 {
        let wr = resolvent_apply(&a_cl, s, &n_direct);
        let wi = resolvent_apply(&a_cl, s, &n_deriv);
        match (wr, wi) {
            (Ok(wr), Ok(wi)) => {
                let direct: Complex64 = c_cl.iter().zip(&wr).map(|(c, w)| w * *c).sum();
                let deriv: Complex64 = c_cl.iter().zip(&wi).map(|(c, w)| w * *c).sum();
                direct + s * deriv
            }
            _ => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    let t_noise = channel("T_noise", noise_eval, n, n, scale, &eig_a)?;

    Ok(TfSet {
        l,
        t_tau_d,
        t_tau_i,
        t_noise,
    })
}

fn channel<F>(
    name: &'static str,
    eval: F,
    num_deg: usize,
    den_deg: usize,
    scale: f64,
    eig_a: &[Complex64],
) -> Result<TfChannel>
where
    F: Fn(Complex64) -> Complex64,
{
    let fit = rational_fit(&eval, num_deg, den_deg, scale).map_err(|e| Error::Extraction {
        channel: name,
        source: Box::new(e),
    })?;
    if fit.residual > EXTRACTION_TOL {
        return Err(Error::Extraction {
            channel: name,
            source: Box::new(Error::FitResidual {
                residual: fit.residual,
                tolerance: EXTRACTION_TOL,
            }),
        });
    }
    let poles = fit.tf.poles().map_err(|e| Error::Extraction {
        channel: name,
        source: Box::new(e),
    })?;
    Ok(TfChannel {
        hidden_modes: multiset_difference(eig_a, &poles),
        tf: fit.tf,
        residual: fit.residual,
    })
}

/// Members of `all` left over after greedily matching each of `seen` to its
/// nearest remaining member.
fn multiset_difference(all: &[Complex64], seen: &[Complex64]) -> Vec<Complex64> {
    let mut rest: Vec<Complex64> = all.to_vec();
    for s in seen {
        if rest.is_empty() {
            break;
        }
        let (idx, _) = rest
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - s).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        rest.remove(idx);
    }
    rest
}

/// Lead/lag character of the `(s + g_DOb)/(s + g_RTOb)` compensator factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compensator {
    Lead,
    Lag,
    Neutral,
}

/// Structural classification of the open-loop transfer function.
#[derive(Debug, Clone)]
pub struct MinimumPhaseReport {
    pub relative_degree: usize,
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub has_integrator: bool,
    pub rhp_zero: bool,
    pub compensator: Compensator,
}

/// Absolute tolerance for "a pole at the origin" and for calling a zero
/// right-half-plane.
const ORIGIN_TOL: f64 = 1e-6;

/// Classifies `L(s)`: relative degree, integrator, right-half-plane zeros and
/// the lead/lag character implied by the observer bandwidths.
pub fn classify(l: &RationalTf, g_dob: f64, g_rtob: f64) -> Result<MinimumPhaseReport> {
    let zeros = l.zeros()?;
    let poles = l.poles()?;
    let has_integrator = poles.iter().any(|p| p.norm() < ORIGIN_TOL);
    let rhp_zero = zeros.iter().any(|z| z.re > ORIGIN_TOL);
    let compensator = if g_rtob > g_dob {
        Compensator::Lead
    } else if g_rtob < g_dob {
        Compensator::Lag
    } else {
        Compensator::Neutral
    };
    Ok(MinimumPhaseReport {
        relative_degree: l.relative_degree(),
        zeros,
        poles,
        has_integrator,
        rhp_zero,
        compensator,
    })
}

/// Root locus of `1 + C_f L(s) = 0` over a gain grid, with branches paired by
/// nearest-neighbor continuation from gain to gain.
#[derive(Debug, Clone)]
pub struct RootLocus {
    pub gains: Vec<f64>,
    /// `branches[b][i]` is branch `b` at `gains[i]`.
    pub branches: Vec<Vec<Complex64>>,
}

impl RootLocus {
    /// Pole set at grid index `i`.
    pub fn poles_at(&self, i: usize) -> Vec<Complex64> {
        self.branches.iter().map(|b| b[i]).collect()
    }
}

/// Closed-loop pole set `roots(den + C_f num)` plus the fixed hidden modes.
pub fn closed_loop_poles(
    l: &RationalTf,
    hidden_modes: &[Complex64],
    force_gain: f64,
) -> Result<Vec<Complex64>> {
    let char_poly = l.den().add(&l.num().scale(force_gain));
    let mut roots = poly_roots(&char_poly)?;
    roots.extend_from_slice(hidden_modes);
    Ok(roots)
}

/// Sweeps the closed-loop characteristic roots over the gain grid.
pub fn root_locus(l: &RationalTf, gain_grid: &[f64]) -> Result<RootLocus> {
    if gain_grid.is_empty() {
        return Err(Error::Parameter("gain grid is empty".into()));
    }
    if gain_grid.windows(2).any(|w| w[0] >= w[1]) || gain_grid[0] <= 0.0 {
        return Err(Error::Parameter(
            "gain grid must be strictly increasing and positive".into(),
        ));
    }
    let n_branches = l.den().degree();
    let mut branches: Vec<Vec<Complex64>> = vec![Vec::with_capacity(gain_grid.len()); n_branches];

    let mut previous: Option<Vec<Complex64>> = None;
    for &gain in gain_grid {
        let mut roots = {
            let char_poly = l.den().add(&l.num().scale(gain));
            poly_roots(&char_poly).map_err(|e| Error::Locus {
                gain,
                source: Box::new(e),
            })?
        };
        if roots.len() != n_branches {
            return Err(Error::Locus {
                gain,
                source: Box::new(Error::Parameter(format!(
                    "characteristic degree dropped to {} (expected {n_branches})",
                    roots.len()
                ))),
            });
        }
        let ordered = match &previous {
            None => {
                roots.sort_by(|a, b| {
                    a.re.partial_cmp(&b.re)
                        .unwrap()
                        .then(a.im.partial_cmp(&b.im).unwrap())
                });
                roots
            }
            Some(prev) => {
                // Greedy nearest-neighbor continuation against the previous
                // gain point.
                let mut ordered = vec![Complex64::new(0.0, 0.0); n_branches];
                let mut available: Vec<Complex64> = roots;
                for (b, anchor) in prev.iter().enumerate() {
                    let (idx, _) = available
                        .iter()
                        .enumerate()
                        .map(|(i, r)| (i, (r - anchor).norm()))
                        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                        .unwrap();
                    ordered[b] = available.remove(idx);
                }
                ordered
            }
        };
        for (b, root) in ordered.iter().enumerate() {
            branches[b].push(*root);
        }
        previous = Some(ordered);
    }
    Ok(RootLocus {
        gains: gain_grid.to_vec(),
        branches,
    })
}

/// Largest pairing distance between two equally-sized pole sets under the
/// best (bottleneck-optimal) assignment. Exhaustive with pruning; the sets
/// here never exceed a handful of entries.
pub fn bottleneck_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut used = vec![false; n];
    let mut best = f64::INFINITY;
    fn recurse(
        a: &[Complex64],
        b: &[Complex64],
        used: &mut [bool],
        i: usize,
        current_max: f64,
        best: &mut f64,
    ) {
        if current_max >= *best {
            return;
        }
        if i == a.len() {
            *best = current_max;
            return;
        }
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            let d = (a[i] - b[j]).norm().max(current_max);
            if d < *best {
                used[j] = true;
                recurse(a, b, used, i + 1, d, best);
                used[j] = false;
            }
        }
    }
    recurse(a, b, &mut used, 0, 0.0, &mut best);
    best
}

/// Two-path consistency check: the eigenvalues of the outer-closed A matrix
/// must coincide with the roots of `den_L + C_f num_L` (plus hidden modes).
/// Returns the worst mismatch; errors when it exceeds `1e-6` of the spectral
/// scale.
pub fn cross_check_poles(
    sys_outer: &AugmentedSystem,
    l: &RationalTf,
    hidden_modes: &[Complex64],
    force_gain: f64,
) -> Result<f64> {
    if sys_outer.stage() != Stage::OuterClosed {
        return Err(Error::WrongStage {
            required: Stage::OuterClosed.name(),
            actual: sys_outer.stage().name(),
        });
    }
    let eig = sys_outer.eigenvalues()?;
    let roots = closed_loop_poles(l, hidden_modes, force_gain)?;
    if eig.len() != roots.len() {
        return Err(Error::Parameter(format!(
            "pole-set sizes differ: {} eigenvalues vs {} characteristic roots",
            eig.len(),
            roots.len()
        )));
    }
    let scale = eig.iter().map(|l| l.norm()).fold(1.0f64, f64::max);
    let mismatch = bottleneck_distance(&eig, &roots);
    let bound = 1e-6 * scale;
    if mismatch > bound {
        return Err(Error::PoleMismatch { mismatch, bound });
    }
    Ok(mismatch)
}

/// True when every pole has a strictly negative real part.
pub fn is_hurwitz(poles: &[Complex64]) -> bool {
    poles.iter().all(|p| p.re < 0.0)
}

/// Damping ratio of the rightmost complex pole pair, if any.
pub fn dominant_damping_ratio(poles: &[Complex64]) -> Option<f64> {
    poles
        .iter()
        .filter(|p| p.im > 0.0)
        .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
        .map(|p| -p.re / p.norm())
}

/// Finds the critical force gain where the closed loop loses stability, by
/// bisection on the largest pole real part. Returns `None` when the loop is
/// stable over the whole bracket. Converges to 1e-4 relative width.
pub fn critical_gain(
    l: &RationalTf,
    hidden_modes: &[Complex64],
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Parameter("need 0 < lo < hi".into()));
    }
    let max_re = |gain: f64| -> Result<f64> {
        let poles = closed_loop_poles(l, hidden_modes, gain)?;
        Ok(poles.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.re)))
    };
    if max_re(lo)? >= 0.0 {
        return Err(Error::Parameter(format!(
            "closed loop is already unstable at the lower bracket gain {lo}"
        )));
    }
    if max_re(hi)? < 0.0 {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    while (b - a) > 1e-4 * b {
        let mid = (a * b).sqrt();
        if max_re(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some((a * b).sqrt()))
}
