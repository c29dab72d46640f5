use glsfield::certify::{minimize_sigma, sigma_series, sigma_series_numeric, CertifyOptions, EntropyModel};
use glsfield::convex::{tail_bound, young_fenchel, Extrapolation, ScalarFunctionGrid};
use glsfield::entropy::{build_net_hierarchy, MetricMeasureSpace, Metric};
use glsfield::exec::Execution;
use glsfield::mc::{confidence_region, CovarianceSource, ParametricIntegralProblem, RegionOptions};
use glsfield::numeric::linear_grid;
use glsfield::psi::{gls_norm, ExponentGrid, MomentCurve, PsiFunction};
use glsfield::ri::{RiKind, RiSpace, YoungFunction};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn spaces(n: usize) -> Vec<RiSpace> {
    vec![
        RiSpace::new(RiKind::Lp(1.0), weights(n)).unwrap(),
        RiSpace::new(RiKind::Lp(2.5), weights(n)).unwrap(),
        RiSpace::new(RiKind::Lp(f64::INFINITY), weights(n)).unwrap(),
        RiSpace::new(RiKind::Gls(PsiFunction::power(2.0).unwrap(), ExponentGrid::default()), weights(n)).unwrap(),
        RiSpace::new(RiKind::Orlicz(YoungFunction::ExpPower(2.0)), weights(n)).unwrap(),
    ]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 1..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gls_norm_is_homogeneous(values in prop::collection::vec(-3.0..3.0f64, 4..20), c in 0.01..50.0f64) {
        let psi = PsiFunction::power(2.0).unwrap();
        let w = weights(values.len());
        let grid = ExponentGrid::default();
        let base = gls_norm(&MomentCurve::from_weighted(&values, &w), &psi, &grid).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let s = gls_norm(&MomentCurve::from_weighted(&scaled, &w), &psi, &grid).unwrap();
        prop_assert!(rel_close(s, c * base, 1e-10));
    }

    #[test]
    fn gls_norm_is_monotone(values in prop::collection::vec(-3.0..3.0f64, 4..20), bumps in prop::collection::vec(0.0..1.0f64, 20)) {
        let psi = PsiFunction::power(1.5).unwrap();
        let w = weights(values.len());
        let grid = ExponentGrid::default();
        let bigger: Vec<f64> = values.iter().zip(&bumps).map(|(v, b)| v.abs() + b).collect();
        let a = gls_norm(&MomentCurve::from_weighted(&values, &w), &psi, &grid).unwrap();
        let b = gls_norm(&MomentCurve::from_weighted(&bigger, &w), &psi, &grid).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12));
    }

    #[test]
    fn biconjugate_recovers_convex_grid(
        steps in prop::collection::vec(0.05..0.5f64, 6..30),
        jumps in prop::collection::vec(0.02..1.0f64, 30),
        start in -3.0..0.0f64,
    ) {
        let mut x = vec![start];
        for s in &steps {
            x.push(x.last().unwrap() + s);
        }
        let mut slope = -2.0;
        let mut v = vec![0.0];
        for i in 1..x.len() {
            v.push(v[i - 1] + slope * (x[i] - x[i - 1]));
            slope += jumps[i];
        }
        let f = ScalarFunctionGrid::new(x.clone(), v.clone(), Extrapolation::Forbid).unwrap();
        let n = x.len();
        let (a, b) = ((v[1] - v[0]) / (x[1] - x[0]), (v[n - 1] - v[n - 2]) / (x[n - 1] - x[n - 2]));
        let m = 257;
        let u = linear_grid(a, b, m);
        let fs: Vec<f64> = u.iter().map(|&u| young_fenchel(&f, u).unwrap()).collect();
        let g = ScalarFunctionGrid::new(u, fs, Extrapolation::Forbid).unwrap();
        let tol = (b - a) / (m - 1) as f64 * (x[n - 1] - x[0]) / 4.0;
        for (xi, vi) in x.iter().zip(&v) {
            let back = young_fenchel(&g, *xi).unwrap();
            prop_assert!(back <= vi + 1e-12);
            prop_assert!(vi - back <= 2.0 * tol + 1e-12);
        }
    }

    #[test]
    fn tail_bound_is_decreasing(m in 0.5..4.0f64, norm in 0.1..10.0f64, a in 2.0..6.0f64, d in 0.01..4.0f64) {
        let psi = PsiFunction::power(m).unwrap();
        let lo = tail_bound(&psi, norm, a * norm).unwrap();
        let hi = tail_bound(&psi, norm, (a + d) * norm).unwrap();
        prop_assert!(lo <= 1.0);
        prop_assert!(hi <= lo * (1.0 + 1e-9));
    }

    #[test]
    fn ri_norm_axioms(f in vector(7), g in vector(7), c in -4.0..4.0f64, perm in Just(()).prop_perturb(|_, mut rng| {
        let mut idx: Vec<usize> = (0..7).collect();
        for i in (1..7).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        idx
    })) {
        for space in spaces(7) {
            let nf = space.norm(&f).unwrap();
            let ng = space.norm(&g).unwrap();
            let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
            prop_assert!(rel_close(space.norm(&scaled).unwrap(), c.abs() * nf, 1e-8) || nf < 1e-12);
            let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
            prop_assert!(space.norm(&sum).unwrap() <= (nf + ng) * (1.0 + 1e-8) + 1e-12);
            let permuted: Vec<f64> = perm.iter().map(|&i| f[i]).collect();
            prop_assert!(rel_close(space.norm(&permuted).unwrap(), nf, 1e-12));
            let smaller: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a.abs().min(b.abs())).collect();
            prop_assert!(space.norm(&smaller).unwrap() <= nf.min(ng) * (1.0 + 1e-8) + 1e-12);
        }
    }

    #[test]
    fn dual_sup_below_norm(f in vector(6), family in prop::collection::vec(vector(6), 1..6), p in 1.2..6.0f64) {
        let space = RiSpace::new(RiKind::Lp(p), weights(6)).unwrap();
        let unit: Vec<Vec<f64>> = family
            .into_iter()
            .filter_map(|g| {
                let a = space.associate_norm(&g).unwrap();
                (a > 1e-9).then(|| g.iter().map(|v| v / a).collect())
            })
            .collect();
        prop_assume!(!unit.is_empty());
        let space = space.with_dual_family(unit).unwrap();
        prop_assert!(space.dual_sup(&f).unwrap() <= space.norm(&f).unwrap() * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn covering_bracket_contains_optimum(coords in points(9), eps in 0.02..0.9f64) {
        let n = coords.len();
        let space = MetricMeasureSpace::from_points(coords, weights(n), Metric::Euclidean).unwrap();
        let b = space.covering_number(eps);
        let exact = (1..=n)
            .find(|&k| {
                (0u32..1 << n)
                    .filter(|m| m.count_ones() as usize == k)
                    .any(|m| space.is_cover(&(0..n).filter(|&i| m >> i & 1 == 1).collect::<Vec<_>>(), eps))
            })
            .unwrap();
        prop_assert!(b.lower <= exact && exact <= b.upper);
    }

    #[test]
    fn ball_and_covering_are_monotone(coords in points(24), a in 0.0..1.0f64, d in 0.0..0.5f64) {
        let n = coords.len();
        let space = MetricMeasureSpace::from_points(coords, weights(n), Metric::Manhattan).unwrap();
        prop_assert!(space.ball_function(a) <= space.ball_function(a + d) + 1e-15);
        let coarse = space.covering_number(a + d + 0.01);
        let fine = space.covering_number(a + 0.01);
        prop_assert!(coarse.lower <= fine.upper);
    }

    #[test]
    fn net_projections_stay_within_radius(coords in points(30), q in 0.2..0.8f64) {
        let n = coords.len();
        let space = MetricMeasureSpace::from_points(coords, weights(n), Metric::Chebyshev).unwrap();
        let nets = build_net_hierarchy(&space, q, 40).unwrap();
        prop_assert!(nets.worst_projection_ratio(&space) <= 1.0 + 1e-12);
    }

    #[test]
    fn sigma_grows_with_covering(kappa in 0.2..1.5f64, s in 0.6..2.0f64, c in 1.0..3.0f64, q in 0.05..0.95f64) {
        prop_assume!(1.0 + s - kappa > 0.1);
        let small = EntropyModel::custom(move |e| c * e.powf(-kappa), move |d| d.powf(s));
        let large = EntropyModel::custom(move |e| 2.0 * c * e.powf(-kappa), move |d| d.powf(s));
        let a = sigma_series_numeric(&small, q, 1e-12).unwrap();
        let b = sigma_series_numeric(&large, q, 1e-12).unwrap();
        prop_assert!(a <= b);
    }

    #[test]
    fn power_law_series_matches_closed_form(kappa in 0.2..2.5f64, s in 0.0..2.5f64, q in 0.05..0.9f64) {
        let delta = 1.0 + s - kappa;
        prop_assume!(delta > 0.15);
        let model = EntropyModel::power_law(kappa, s).unwrap();
        let closed = sigma_series(&model, q, 1e-12).unwrap().value;
        prop_assert!(rel_close(closed, q.powf(-kappa) / (1.0 - q.powf(delta)), 1e-12));
        let numeric = sigma_series_numeric(&model, q, 1e-13).unwrap();
        prop_assert!(rel_close(numeric, closed, 1e-9));
    }

    #[test]
    fn power_law_optimum_matches_calculus(kappa in 0.2..2.5f64, s in 0.0..2.5f64) {
        let delta = 1.0 + s - kappa;
        prop_assume!(delta > 0.15);
        let min = minimize_sigma(&EntropyModel::power_law(kappa, s).unwrap(), &CertifyOptions::default()).unwrap();
        let q0 = (kappa / (kappa + delta)).powf(1.0 / delta);
        let lambda = kappa / delta;
        prop_assert!((min.q0 - q0).abs() < 1e-6);
        prop_assert!(rel_close(min.value, lambda.powf(-lambda) * (1.0 + lambda).powf(1.0 + lambda), 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn confidence_radius_identity(sigma in 0.1..3.0f64, n in 100usize..5000, d1 in 0.01..0.25f64, d2 in 0.26..0.5f64) {
        let problem = ParametricIntegralProblem::new(vec![0.0, 1.0], 0, |_, _| 0.0, |_, _| {})
            .unwrap()
            .with_covariance(DMatrix::from_row_slice(2, 2, &[sigma * sigma, 0.0, 0.0, 1.0]))
            .unwrap();
        let space = RiSpace::new(RiKind::Lp(2.0), weights(2)).unwrap();
        let opts = RegionOptions { limit_replicas: 2000, covariance: CovarianceSource::Known, exec: Execution::Sequential };
        let region = confidence_region(&problem, n, &space, d1, 3, None, &opts).unwrap();
        prop_assert!(rel_close(region.radius, region.u0 / (n as f64).sqrt(), 1e-15));
        prop_assert!(region.u0_at(d1) >= region.u0_at(d2));
    }
}
