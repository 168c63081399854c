//! Unconstrained minimisers: BFGS with Armijo backtracking, and Nelder–Mead
//! as the derivative-free fallback.

/// Outcome of a minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the simplex fallback was used at any point.
    pub used_simplex: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Gradient,
    Stalled,
    LineSearch,
    MaxIter,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest allowed step in any coordinate per iteration.
const MAX_STEP: f64 = 4.0;

fn bfgs_run<F>(fg: &F, x0: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64, usize, Stop)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let identity = |h: &mut Vec<Vec<f64>>| {
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 1.0 } else { 0.0 };
            }
        }
    };
    let mut h = vec![vec![0.0; n]; n];
    identity(&mut h);
    if !f.is_finite() {
        return (x, f, 0, Stop::LineSearch);
    }
    for it in 0..max_iter {
        if inf_norm(&g) < tol {
            return (x, f, it, Stop::Gradient);
        }
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        if dot(&g, &d) >= 0.0 {
            identity(&mut h);
            d = g.iter().map(|v| -v).collect();
        }
        let dn = inf_norm(&d);
        if dn > MAX_STEP {
            d.iter_mut().for_each(|v| *v *= MAX_STEP / dn);
        }
        let slope = dot(&g, &d);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let (fnew, gnew) = fg(&xn);
            if fnew.is_finite() && fnew <= f + 1e-4 * t * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return (x, f, it, Stop::LineSearch);
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let stalled = (f - fnew).abs() <= 1e-15 * (1.0 + f.abs()) && inf_norm(&s) < 1e-12;
        x = xn;
        f = fnew;
        g = gnew;
        if stalled {
            let stop = if inf_norm(&g) < tol { Stop::Gradient } else { Stop::Stalled };
            return (x, f, it + 1, stop);
        }
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            // H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    (x, f, max_iter, Stop::MaxIter)
}

/// Nelder–Mead simplex search.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    ftol: f64,
) -> Minimum {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let size = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0_f64, f64::max);
        let scale = 1.0 + inf_norm(&pts[0]);
        if (vals[n] - vals[0]).abs() <= ftol * (1.0 + vals[0].abs()) && size <= 1e-9 * scale {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |c: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(m, w)| m + c * (w - m))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = pts[0]
                        .iter()
                        .zip(&pts[i])
                        .map(|(b, p)| b + 0.5 * (p - b))
                        .collect();
                    vals[i] = eval(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("simplex is non-empty");
    Minimum {
        x: pts[best].clone(),
        f: vals[best],
        iterations,
        converged,
        used_simplex: true,
    }
}

/// BFGS on `fg`; when the line search fails, a Nelder–Mead pass on the
/// function values restarts it once.
pub fn minimize<F>(fg: &F, x0: &[f64], tol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (x, f, it, stop) = bfgs_run(fg, x0, tol, max_iter);
    if stop == Stop::Gradient {
        return Minimum { x, f, iterations: it, converged: true, used_simplex: false };
    }
    if stop == Stop::MaxIter {
        return Minimum { x, f, iterations: it, converged: false, used_simplex: false };
    }
    let value = |z: &[f64]| fg(z).0;
    let start = if f.is_finite() { x.clone() } else { x0.to_vec() };
    let nm = nelder_mead(&value, &start, 0.1, 4000, 1e-15);
    let (x2, f2, it2, stop2) = bfgs_run(fg, &nm.x, tol, max_iter);
    let (x, f) = if f2 <= nm.f { (x2, f2) } else { (nm.x, nm.f) };
    Minimum {
        x,
        f,
        iterations: it + nm.iterations + it2,
        converged: stop2 == Stop::Gradient,
        used_simplex: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let m = minimize(&rosenbrock, &[-1.2, 1.0], 1e-9, 500);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 1.0;
        let m = nelder_mead(&f, &[0.0, 0.0], 0.5, 5000, 1e-14);
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-5 && (m.x[1] + 1.0).abs() < 1e-5);
        assert!((m.f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn falls_back_when_gradient_is_wrong() {
        // A gradient with the wrong sign makes every line search fail.
        let fg = |x: &[f64]| ((x[0] - 2.0).powi(2), vec![-(2.0 * (x[0] - 2.0))]);
        let m = minimize(&fg, &[0.0], 1e-9, 100);
        assert!(m.used_simplex);
        assert!((m.x[0] - 2.0).abs() < 1e-5, "{m:?}");
    }
}
