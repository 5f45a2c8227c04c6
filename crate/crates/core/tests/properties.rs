use convex_band::calibration::simulate_null_sample;
use convex_band::*;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs()))
}

fn dataset() -> impl Strategy<Value = SortedDataset<f64>> {
    (5usize..20).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..1.0, n), prop::collection::vec(-1.0f64..1.0, n), 0.0f64..4.0).prop_map(
            |(mut x, e, c)| {
                x.sort_by(f64::total_cmp);
                let y = x.iter().zip(&e).map(|(&t, &v)| c * (t - 0.5) * (t - 0.5) + v).collect();
                SortedDataset::new(x, y).unwrap()
            },
        )
    })
}

fn sign_pair() -> impl Strategy<Value = (Vec<Sign>, Vec<Sign>)> {
    (1usize..60).prop_flat_map(|n| {
        (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)).prop_map(|(a, b)| {
            let hi: Vec<Sign> = a.iter().map(|&v| if v { 1 } else { -1 }).collect();
            let lo = hi.iter().zip(&b).map(|(&h, &drop)| if drop { -1 } else { h }).collect();
            (lo, hi)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_naught_is_monotone((lo, hi) in sign_pair()) {
        let a = t_naught(&SignVector::new(lo).unwrap());
        let b = t_naught(&SignVector::new(hi).unwrap());
        prop_assert!(a <= b);
    }

    #[test]
    fn two_sided_is_symmetric(v in prop::collection::vec(-5.0f64..5.0, 1..50)) {
        prop_assume!(v.iter().all(|&a| a != 0.0));
        let neg: Vec<f64> = v.iter().map(|&a| -a).collect();
        prop_assert_eq!(t_two_sided(&v).unwrap(), t_two_sided(&neg).unwrap());
    }

    #[test]
    fn bands_are_affine_equivariant(
        d in dataset(),
        kappa in 0.0f64..1.5,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in 0.5f64..3.0,
        p in 0.5f64..3.0,
        q in -1.0f64..1.0,
    ) {
        let n = d.len();
        let x2: Vec<f64> = d.x().iter().map(|&t| p * t + q).collect();
        let y2: Vec<f64> = d.x().iter().zip(d.y()).map(|(&t, &y)| a + b * t + c * y).collect();
        let d2 = SortedDataset::new(x2, y2).unwrap();
        let b1 = band_exact(&d, 0.05, &mut KappaSource::Fixed(kappa)).unwrap();
        let b2 = band_exact(&d2, 0.05, &mut KappaSource::Fixed(kappa)).unwrap();
        prop_assert_eq!(b1.feasible, b2.feasible);
        let map = |v: f64, t: f64| if v.is_finite() { a + b * t + c * v } else { v };
        for i in 0..n {
            prop_assert!(close(b2.upper[i], map(b1.upper[i], d.x()[i])));
        }
        if b1.feasible {
            for i in 0..n {
                prop_assert!(close(b2.lower[i], map(b1.lower[i], d.x()[i])));
            }
        }
    }

    #[test]
    fn upper_band_is_convex(d in dataset(), kappa in -0.2f64..1.5) {
        let u = upper_exact(&d, kappa).unwrap();
        let (x, n) = (d.x(), d.len());
        let fin: Vec<usize> = (0..n).filter(|&i| u[i].is_finite()).collect();
        // Finite values occupy one contiguous range.
        if let (Some(&lo), Some(&hi)) = (fin.first(), fin.last()) {
            prop_assert!((lo..=hi).all(|i| u[i] < f64::INFINITY));
        }
        let pts: Vec<usize> = {
            let mut v: Vec<usize> = Vec::new();
            for &i in &fin {
                if v.last().is_some_and(|&j| x[j] == x[i]) {
                    continue;
                }
                v.push(i);
            }
            v
        };
        for w in pts.windows(3) {
            let (i, j, k) = (w[0], w[1], w[2]);
            let s1 = (u[j] - u[i]) / (x[j] - x[i]);
            let s2 = (u[k] - u[j]) / (x[k] - x[j]);
            prop_assert!(s1 <= s2 + 1e-7 * (1.0 + s1.abs().max(s2.abs())));
        }
    }

    #[test]
    fn hull_is_maximal_and_idempotent(d in dataset(), s in -5.0f64..5.0, mask in prop::collection::vec(any::<bool>(), 20)) {
        let n = d.len();
        let pts: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let g = greatest_convex_minorant(&d, &pts).unwrap();
        for &i in &pts {
            prop_assert!(g[i] <= d.y()[i] + 1e-12);
        }
        if !pts.is_empty() {
            // Any line below the selected points stays below the hull on its range.
            let a = pts.iter().map(|&i| d.y()[i] - s * d.x()[i]).fold(f64::INFINITY, f64::min);
            for &i in &pts {
                prop_assert!(a + s * d.x()[i] <= g[i] + 1e-9);
            }
            let d2 = SortedDataset::new(d.x().to_vec(), g.iter().map(|&v| if v.is_finite() { v } else { 0.0 }).collect()).unwrap();
            let g2 = greatest_convex_minorant(&d2, &pts).unwrap();
            for &i in &pts {
                prop_assert!(close(g[i], g2[i]));
            }
        }
        let h = least_concave_majorant(&d, &pts).unwrap();
        for &i in &pts {
            prop_assert!(h[i] >= d.y()[i] - 1e-12);
        }
    }

    #[test]
    fn kappa_is_monotone_in_alpha(n in 1usize..40, seed in any::<u64>(), a1 in 0.01f64..0.5, gap in 0.01f64..0.4) {
        let sample = simulate_null_sample(n, 200, seed).unwrap();
        let k1 = kappa_from_sample(&sample, a1).unwrap();
        let k2 = kappa_from_sample(&sample, a1 + gap).unwrap();
        prop_assert!(k1 >= k2);
    }

    #[test]
    fn concave_reduction_is_an_involution(d in dataset(), kappa in 0.0f64..1.5) {
        let b = band_exact(&d, 0.05, &mut KappaSource::Fixed(kappa)).unwrap();
        let twice = b.reflected().reflected();
        if b.feasible {
            prop_assert_eq!(twice, b);
        } else {
            prop_assert!(!twice.feasible && twice.lower.is_empty());
        }
    }

    #[test]
    fn accepted_grid_lines_stay_below_upper_band(d in dataset(), kappa in 0.3f64..1.5) {
        let u = upper_exact(&d, kappa).unwrap();
        for s in (0..9).map(|i| -4.0 + i as f64) {
            let a = step2_max_intercept(&d, kappa, s).unwrap();
            if a == f64::INFINITY {
                prop_assert!(u.iter().all(|v| *v == f64::INFINITY));
                continue;
            }
            for i in 0..d.len() {
                let line = a + s * d.x()[i];
                prop_assert!(line <= u[i] || u[i].is_finite() && line <= u[i] + 1e-9 * (1.0 + u[i].abs()));
            }
        }
    }

    #[test]
    fn approximate_brackets_are_ordered(d in dataset(), kappa in 0.0f64..1.5) {
        let (_, ab) = band_approx(&d, 0.05, &mut KappaSource::Fixed(kappa), &ApproxOptions::default()).unwrap();
        for i in 0..d.len() {
            prop_assert!(ab.u_lower[i] <= ab.u_upper[i]);
        }
        for i in 0..ab.l_lower.len() {
            let (lo, hi) = (ab.l_lower[i], ab.l_upper[i]);
            prop_assert!(lo <= hi || hi.is_finite() && lo <= hi + 1e-9 * (1.0 + hi.abs()));
        }
    }
}
