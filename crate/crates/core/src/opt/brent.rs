//! One-dimensional minimization: coarse scan, bracket, then Brent's
//! parabolic-interpolation/golden-section method.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Minimizes `f` on `[lo, hi]`. Scans `scan_points` equally spaced points
/// first, brackets the best one with its neighbors and polishes with Brent
/// to absolute tolerance `tol`. The scan doubles as the safeguard against
/// non-unimodal objectives. Returns `(x, f(x), evaluations)`.
pub fn minimize_scan_brent<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    scan_points: usize,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, u64) {
    debug_assert!(lo < hi && scan_points >= 3);
    let mut evals = 0u64;
    let step = (hi - lo) / (scan_points - 1) as f64;
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    let mut scan = Vec::with_capacity(scan_points);
    for i in 0..scan_points {
        let x = lo + step * i as f64;
        let v = f(x);
        evals += 1;
        scan.push(v);
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);

    let (x, fx, brent_evals) = brent(&mut f, a, b, tol, max_iter);
    evals += brent_evals;
    if fx <= best_f {
        (x, fx, evals)
    } else {
        // Brent landed worse than the scan (pathological objective):
        // golden-section restart from the scan bracket.
        let (x, fx, golden_evals) = golden_section(&mut f, a, b, tol, max_iter);
        evals += golden_evals;
        if fx <= best_f {
            (x, fx, evals)
        } else {
            (lo + step * best_i as f64, best_f, evals)
        }
    }
}

fn brent<F: FnMut(f64) -> f64>(
    f: &mut F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, u64) {
    let (mut a, mut b) = (lo, hi);
    let mut evals = 0u64;
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    evals += 1;
    let (mut fw, mut fv) = (fx, fx);
    let mut d = 0.0f64;
    let mut e = 0.0f64;

    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol.max(f64::EPSILON * x.abs());
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // Parabolic fit through (x, w, v).
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u >= x {
                b = u;
            } else {
                a = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx, evals)
}

fn golden_section<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, u64) {
    let mut evals = 0u64;
    let mut x1 = a + GOLDEN * (b - a);
    let mut x2 = b - GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    evals += 2;
    for _ in 0..max_iter {
        if (b - a).abs() <= 2.0 * tol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - GOLDEN * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 < f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}
