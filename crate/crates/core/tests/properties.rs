use std::path::Path;

use densecraft::dpmm::stick_break;
use densecraft::io::{format_density_csv, format_samples, parse_density_csv, parse_samples, DensityTable};
use densecraft::laplace::observed_information;
use densecraft::lindsey::{bin_transform, build_spline_design};
use densecraft::pgm::{grad_neg_log_posterior, neg_log_posterior, weights_from_beta, PenaltyMatrix};
use densecraft::{Interval, SampleSet};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(beta in prop::collection::vec(-30.0..30.0f64, 1..40)) {
        let c = weights_from_beta(&beta).unwrap();
        prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(c.iter().all(|&v| v >= 0.0));
        for (j, b) in beta.iter().enumerate() {
            if c[0] > 1e-200 && c[j + 1] > 1e-200 {
                prop_assert!(((c[j + 1] / c[0]).ln() - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn softmax_shift_moves_baseline(beta in prop::collection::vec(-5.0..5.0f64, 2..20), s in -5.0..5.0f64) {
        // adding s to every free logit equals subtracting s from the baseline
        let shifted: Vec<f64> = beta.iter().map(|b| b + s).collect();
        let c = weights_from_beta(&shifted).unwrap();
        let mut e: Vec<f64> = std::iter::once(-s).chain(beta.iter().copied()).map(f64::exp).collect();
        let total: f64 = e.iter().sum();
        e.iter_mut().for_each(|v| *v /= total);
        for (a, b) in c.iter().zip(&e) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sticks_sum_to_one(mut v in prop::collection::vec(0.0..=1.0f64, 1..80)) {
        *v.last_mut().unwrap() = 1.0;
        let pi = stick_break(&v).unwrap();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pi.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn binning_conserves_counts(
        values in prop::collection::vec(-10.0..10.0f64, 2..300),
        k in 2usize..60,
    ) {
        let set = SampleSet::new(values.clone(), Interval::new(-10.0, 10.0).unwrap()).unwrap();
        let b = bin_transform(&set, k).unwrap();
        prop_assert_eq!(b.counts.iter().sum::<u64>(), values.len() as u64);
        prop_assert_eq!(b.counts.len(), k);
    }

    #[test]
    fn basis_row_reproduces_design(values in prop::collection::vec(0.0..1.0f64, 20..200), k in 6usize..30) {
        let set = SampleSet::new(values, Interval::new(0.0, 1.0).unwrap()).unwrap();
        let b = bin_transform(&set, k).unwrap();
        let d = build_spline_design(&b, Some(k.min(5))).unwrap();
        let full = d.full_design();
        for (i, &c) in b.centers.iter().enumerate() {
            let row = d.basis_row(c);
            for (a, e) in row.iter().zip(full.row(i)) {
                prop_assert!((a - e).abs() < 1e-8 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_matches_differences(
        beta in prop::collection::vec(-3.0..3.0f64, 3..15),
        seed_counts in prop::collection::vec(0u32..200, 16),
        log_tau2 in -4.0..4.0f64,
    ) {
        let k = beta.len() + 1;
        let counts: Vec<f64> = seed_counts[..k].iter().map(|&c| c as f64).collect();
        let pen = PenaltyMatrix::new(k.max(4), 100.0).unwrap();
        prop_assume!(pen.dim() == beta.len());
        let tau2 = log_tau2.exp();
        let g = grad_neg_log_posterior(&beta, &counts, tau2, &pen);
        let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let h = 1e-5;
        for j in 0..beta.len() {
            let (mut up, mut dn) = (beta.clone(), beta.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (neg_log_posterior(&up, &counts, tau2, &pen) - neg_log_posterior(&dn, &counts, tau2, &pen)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * scale, "j={} fd={} g={}", j, fd, g[j]);
        }
    }

    #[test]
    fn penalty_is_positive_definite(k in 4usize..80, log_c in -3.0..6.0f64) {
        let pen = PenaltyMatrix::new(k, 10f64.powf(log_c)).unwrap();
        prop_assert!(pen.pstar.cholesky().is_ok());
    }

    #[test]
    fn information_is_psd(beta in prop::collection::vec(-4.0..4.0f64, 1..10), x in prop::collection::vec(-1.0..1.0f64, 10)) {
        let j = observed_information(&beta, 100.0);
        prop_assert!(j.quad_form(&x[..beta.len()]) >= -1e-9);
    }

    #[test]
    fn density_csv_round_trips(rows in prop::collection::vec((finite(), finite(), finite(), finite()), 0..50)) {
        let table = DensityTable {
            grid: rows.iter().map(|r| r.0).collect(),
            mean: rows.iter().map(|r| r.1).collect(),
            lower: rows.iter().map(|r| r.2).collect(),
            upper: rows.iter().map(|r| r.3).collect(),
        };
        let back = parse_density_csv(&format_density_csv(&table), Path::new("t.csv")).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.grid), bits(&table.grid));
        prop_assert_eq!(bits(&back.mean), bits(&table.mean));
        prop_assert_eq!(bits(&back.lower), bits(&table.lower));
        prop_assert_eq!(bits(&back.upper), bits(&table.upper));
    }

    #[test]
    fn samples_round_trip(values in prop::collection::vec(-1e6..1e6f64, 2..100)) {
        let back = parse_samples(&format_samples(&values), Path::new("s.csv")).unwrap();
        prop_assert_eq!(back, values);
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_samples(&text, Path::new("x"));
        let _ = parse_density_csv(&text, Path::new("x"));
        let _ = densecraft::config::RunConfig::from_json(&text);
    }
}
