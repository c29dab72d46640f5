//! Small numerical building blocks shared across modules.

use statrs::function::gamma::ln_gamma;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `n` logarithmically spaced nodes from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    nodes[0] = lo;
    nodes[n - 1] = hi;
    nodes
}

/// `n` evenly spaced nodes from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi > lo && n >= 2);
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    nodes[n - 1] = hi;
    nodes
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns the best point seen, including the bracket ends.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = [(lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd)]
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .fold((lo, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut iter = 0;
    while (b - a).abs() > x_tol * (1.0 + a.abs().max(b.abs())) && iter < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
        iter += 1;
    }
    best
}

pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> (f64, f64) {
    let (x, v) = golden_max(|x| -f(x), lo, hi, x_tol, max_iter);
    (x, -v)
}

/// Bisection for the root of a monotone `f` with a sign change on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Hurwitz zeta `sum_{k>=0} (a + k)^{-s}` for `s > 1`, `a > 0`, by Euler–Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0);
    const B2J: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let n = 16usize;
    let mut sum = 0.0;
    for k in 0..n {
        sum += (a + k as f64).powf(-s);
    }
    let x = a + n as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) over (2j)!
    let mut coeff = s / 2.0;
    let mut power = x.powf(-s - 1.0);
    for (j, b) in B2J.iter().enumerate() {
        sum += b * coeff * power;
        let j = j as f64 + 1.0;
        coeff *= (s + 2.0 * j - 1.0) * (s + 2.0 * j) / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
        power /= x * x;
    }
    sum
}

/// Riemann zeta for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// `(E|Z|^p)^{1/p}` for a standard normal `Z`.
pub fn gaussian_abs_moment_root(p: f64) -> f64 {
    let ln_moment = 0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    (ln_moment / p).exp()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zeta_matches_known_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert_relative_eq!(zeta(2.0), pi2 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(zeta(4.0), pi2 * pi2 / 90.0, max_relative = 1e-14);
        // tail of the Basel series: sum_{k>=1} 1/(k+10)^2
        let direct: f64 = (11..2_000_000).map(|k| 1.0 / (k as f64).powi(2)).sum::<f64>() + 1.0 / 2_000_000.0;
        assert_relative_eq!(hurwitz_zeta(2.0, 11.0), direct, max_relative = 1e-9);
        // zeta(s, 1/2) = (2^s - 1) zeta(s)
        assert_relative_eq!(hurwitz_zeta(1.5, 0.5), (2.0_f64.powf(1.5) - 1.0) * zeta(1.5), max_relative = 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_relative_eq!(integral, 2.0 / 19.0, max_relative = 1e-13);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_moments() {
        assert_relative_eq!(gaussian_abs_moment_root(2.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(gaussian_abs_moment_root(4.0), 3.0_f64.powf(0.25), max_relative = 1e-13);
        assert_relative_eq!(gaussian_abs_moment_root(1.0), (2.0 / std::f64::consts::PI).sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn golden_section_finds_interior_extrema() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-6 && v <= 0.0);
        let (x, _) = golden_min(|x| x + 1.0 / x, 0.1, 10.0, 1e-10, 200);
        assert!((x - 1.0).abs() < 1e-5);
    }

    #[test]
    fn bisection_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert_relative_eq!(r, 2.0_f64.sqrt(), max_relative = 1e-13);
    }
}
