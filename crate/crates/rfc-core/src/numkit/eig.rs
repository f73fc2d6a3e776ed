//! Real nonsymmetric eigenvalues via shifted QR iteration.
//!
//! The pipeline is the classic EISPACK one: Parlett-Reinsch balancing
//! (diagonal similarity with powers of two, so it is exact), Householder
//! reduction to upper Hessenberg form, then the Francis implicit double-shift
//! QR iteration with deflation. Only eigenvalues are computed; eigenvectors
//! are never needed here.
//!
//! Triangular inputs short-circuit to their diagonal so those spectra are
//! exact, and the iteration carries a hard cap that surfaces as a
//! `NoConvergence` error instead of spinning.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::matrix::Matrix;

/// Total QR iteration budget per matrix, scaled by dimension.
const MAX_ITER_PER_EIGENVALUE: usize = 40;

/// Eigenvalues (with multiplicity) of a square real matrix.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::Dimension {
            context: "eigenvalues",
            expected: "square matrix".into(),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let n = m.rows();
    if m.is_triangular() {
        return Ok((0..n).map(|i| Complex64::new(m[(i, i)], 0.0)).collect());
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr_eigenvalues(&mut h)
}

/// Parlett-Reinsch balancing: a diagonal similarity transform with powers of
/// two that evens out row/column norms. Exact in floating point.
fn balance(a: &mut Matrix) {
    let n = a.rows();
    let radix: f64 = 2.0;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form (no transform accumulation).
fn hessenberg(h: &mut Matrix) {
    let n = h.rows();
    if n <= 2 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..n - 1 {
        let mut scale = 0.0;
        for i in m..n {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hsum = 0.0;
        for i in (m..n).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        let hh = hsum - ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..n).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..n {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let mut f = 0.0;
            for j in (m..n).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..n {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in m + 1..n {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
/// Ported from the EISPACK `hqr` lineage.
fn hqr_eigenvalues(hm: &mut Matrix) -> Result<Vec<Complex64>> {
    let nn = hm.rows();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let eps = f64::EPSILON;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += hm[(i, j)].abs();
        }
    }
    if norm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); nn]);
    }

    let mut n = nn as isize - 1;
    let low = 0isize;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = MAX_ITER_PER_EIGENVALUE * nn;

    #[allow(unused_assignments)]
    let (mut p, mut q, mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut x, mut y, mut w);

    while n >= low {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            s = hm[((l - 1) as usize, (l - 1) as usize)].abs()
                + hm[(l as usize, l as usize)].abs();
            if s == 0.0 {
                s = norm;
            }
            if hm[(l as usize, (l - 1) as usize)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One real root found.
            let un = n as usize;
            hm[(un, un)] += exshift;
            d[un] = hm[(un, un)];
            e[un] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found (real pair or complex conjugate pair).
            let un = n as usize;
            w = hm[(un, un - 1)] * hm[(un - 1, un)];
            p = (hm[(un - 1, un - 1)] - hm[(un, un)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            hm[(un, un)] += exshift;
            hm[(un - 1, un - 1)] += exshift;
            x = hm[(un, un)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[un - 1] = x + z;
                d[un] = if z != 0.0 { x - w / z } else { d[un - 1] };
                e[un - 1] = 0.0;
                e[un] = 0.0;
            } else {
                d[un - 1] = x + p;
                d[un] = x + p;
                e[un - 1] = z;
                e[un] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet; perform a QR step.
            let un = n as usize;
            x = hm[(un, un)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = hm[(un - 1, un - 1)];
                w = hm[(un, un - 1)] * hm[(un - 1, un)];
            }

            // Wilkinson's exceptional shift.
            if iter == 10 || iter == 20 {
                exshift += x;
                for i in low..=n {
                    let ui = i as usize;
                    hm[(ui, ui)] -= x;
                }
                s = hm[(un, un - 1)].abs() + hm[(un - 1, un - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }

            iter += 1;
            total_iter += 1;
            if total_iter > max_total {
                return Err(Error::NoConvergence {
                    iterations: total_iter,
                });
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            while m >= l {
                let um = m as usize;
                z = hm[(um, um)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / hm[(um + 1, um)] + hm[(um, um + 1)];
                q = hm[(um + 1, um + 1)] - z - r - s;
                r = hm[(um + 2, um + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if hm[(um, um - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (hm[(um - 1, um - 1)].abs()
                                + z.abs()
                                + hm[(um + 1, um + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=n {
                let ui = i as usize;
                hm[(ui, ui - 2)] = 0.0;
                if i > m + 2 {
                    hm[(ui, ui - 3)] = 0.0;
                }
            }

            // Double QR sweep over rows l..n.
            for k in m..n {
                let uk = k as usize;
                let notlast = k != n - 1;
                if k != m {
                    p = hm[(uk, uk - 1)];
                    q = hm[(uk + 1, uk - 1)];
                    r = if notlast { hm[(uk + 2, uk - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    hm[(uk, uk - 1)] = -s * x;
                } else if l != m {
                    hm[(uk, uk - 1)] = -hm[(uk, uk - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                // Row modification.
                for j in uk..nn {
                    let mut f = hm[(uk, j)] + q * hm[(uk + 1, j)];
                    if notlast {
                        f += r * hm[(uk + 2, j)];
                    }
                    hm[(uk, j)] -= f * x;
                    hm[(uk + 1, j)] -= f * y;
                    if notlast {
                        hm[(uk + 2, j)] -= f * z;
                    }
                }

                // Column modification.
                let imax = n.min(k + 3) as usize;
                for i in 0..=imax {
                    let mut f = x * hm[(i, uk)] + y * hm[(i, uk + 1)];
                    if notlast {
                        f += z * hm[(i, uk + 2)];
                    }
                    hm[(i, uk)] -= f;
                    hm[(i, uk + 1)] -= f * q;
                    if notlast {
                        hm[(i, uk + 2)] -= f * r;
                    }
                }
            }
        }
    }

    Ok(d.into_iter()
        .zip(e)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}
