use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use rtvar::factors::extract_pcs;
use rtvar::nowcast::partition_moments;
use rtvar::panel::{destandardize, standardize, Panel};
use rtvar::score::{cumulate, kendall_tau, log_mean_exp, rank_models, relative_series, Direction, RelativeKind};
use rtvar::vintage::{apply_transform, Series, TransformCode};
use rtvar::Month;

fn month() -> Month {
    Month::new(1995, 6).unwrap()
}

fn spd(entries: &[f64], m: usize) -> DMatrix<f64> {
    let b = DMatrix::from_row_slice(m, m, &entries[..m * m]);
    &b * b.transpose() + DMatrix::identity(m, m) * 0.05
}

proptest! {
    #[test]
    fn standardize_round_trips(rows in prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 3), 5..40)) {
        let t = rows.len();
        let values = DMatrix::from_fn(t, 3, |r, c| rows[r][c] + (r * (c + 1)) as f64 * 0.1);
        let panel = Panel::from_matrix(values.clone(), month(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let std = standardize(&panel).unwrap();
        for r in 0..t {
            let back = destandardize(&std.values.row(r).transpose(), &std.std_info);
            for c in 0..3 {
                prop_assert!((back[c] - values[(r, c)]).abs() < 1e-9 * (1.0 + values[(r, c)].abs()));
            }
        }
        for c in 0..3 {
            let col = std.values.column(c);
            prop_assert!((col.sum() / t as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn pcs_ignore_column_sign_flips(seed in 0u64..1000, flip in prop::collection::vec(any::<bool>(), 6)) {
        let values = DMatrix::from_fn(40, 6, |r, c| (((r * 7 + c * 13) as u64 ^ seed) % 17) as f64 + (r as f64 * 0.3 + c as f64).sin());
        let codes: Vec<String> = (0..6).map(|j| format!("W{j}")).collect();
        let panel = standardize(&Panel::from_matrix(values.clone(), month(), codes.clone()).unwrap()).unwrap();
        let flipped = DMatrix::from_fn(40, 6, |r, c| if flip[c] { -values[(r, c)] } else { values[(r, c)] });
        let panel_f = standardize(&Panel::from_matrix(flipped, month(), codes).unwrap()).unwrap();
        let a = extract_pcs(&panel, 2).unwrap();
        let b = extract_pcs(&panel_f, 2).unwrap();
        for c in 0..2 {
            prop_assert!((a.explained_variance[c] - b.explained_variance[c]).abs() < 1e-8);
        }
        // the leading component is identified up to sign even with a close second
        let gap = (a.explained_variance[0] - a.explained_variance[1]) / a.explained_variance[0];
        if gap > 1e-3 {
            let dot: f64 = (0..40).map(|r| a.scores[(r, 0)] * b.scores[(r, 0)]).sum::<f64>() / 39.0;
            prop_assert!((dot.abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn conditioning_never_adds_variance(entries in prop::collection::vec(-2.0..2.0f64, 16), obs in prop::collection::vec(-3.0..3.0f64, 4), mask in 1u8..15) {
        let m = 4;
        let sigma = spd(&entries, m);
        let mu = DVector::zeros(m);
        let missing: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let observed: Vec<usize> = (0..m).filter(|i| !missing.contains(i)).collect();
        let realized = DVector::from_fn(observed.len(), |r, _| obs[r]);
        let cm = partition_moments(&mu, &sigma, &missing, &realized).unwrap();
        let s11 = DMatrix::from_fn(missing.len(), missing.len(), |r, c| sigma[(missing[r], missing[c])]);
        let gap = SymmetricEigen::new(&s11 - &cm.cov).eigenvalues;
        prop_assert!(gap.iter().all(|&e| e > -1e-9 * s11.norm()));
        let own = SymmetricEigen::new(cm.cov.clone()).eigenvalues;
        prop_assert!(own.iter().all(|&e| e > -1e-9 * s11.norm()));
    }

    #[test]
    fn tau_is_bounded_and_rank_invariant(a in prop::collection::vec(-10.0..10.0f64, 2..10), seed in any::<u64>()) {
        let n = a.len();
        let b: Vec<f64> = (0..n).map(|i| ((seed >> (i % 60)) & 7) as f64 + i as f64 * 0.001).collect();
        if let Some(t) = kendall_tau(&a, &b).unwrap() {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&t));
            // strictly increasing transforms leave it unchanged
            let a2: Vec<f64> = a.iter().map(|x| (x / 3.0).exp() + 5.0).collect();
            prop_assert_eq!(kendall_tau(&a2, &b).unwrap(), Some(t));
            let neg: Vec<f64> = a.iter().map(|x| -x).collect();
            prop_assert!((kendall_tau(&neg, &b).unwrap().unwrap() + t).abs() < 1e-12);
        }
        let distinct: std::collections::BTreeSet<u64> = a.iter().map(|x| x.to_bits()).collect();
        if distinct.len() == n {
            prop_assert_eq!(kendall_tau(&a, &a).unwrap(), Some(1.0));
        }
    }

    #[test]
    fn ranks_sum_and_order(scores in prop::collection::vec(-5.0..5.0f64, 1..12)) {
        let n = scores.len();
        for dir in [Direction::Descending, Direction::Ascending] {
            let r = rank_models(&scores, dir);
            prop_assert!((r.iter().sum::<f64>() - (n * (n + 1)) as f64 / 2.0).abs() < 1e-9);
            for i in 0..n {
                for j in 0..n {
                    let better = match dir {
                        Direction::Descending => scores[i] > scores[j],
                        Direction::Ascending => scores[i] < scores[j],
                    };
                    if better {
                        prop_assert!(r[i] < r[j]);
                    }
                    if scores[i] == scores[j] {
                        prop_assert_eq!(r[i], r[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn log_mean_exp_is_bounded(logs in prop::collection::vec(-800.0..50.0f64, 1..50)) {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = log_mean_exp(&logs);
        prop_assert!(v <= max + 1e-12);
        prop_assert!(v >= max - (logs.len() as f64).ln() - 1e-12);
    }

    #[test]
    fn relative_measures_are_consistent(rt in prop::collection::vec(0.1..10.0f64, 1..20), ps_scale in 0.5..2.0f64) {
        let ps: Vec<f64> = rt.iter().map(|x| x * ps_scale).collect();
        let cum_rt = cumulate(&rt);
        let cum_ps = cumulate(&ps);
        let diff = relative_series(&cum_rt, &cum_ps, RelativeKind::Difference).unwrap();
        let back = relative_series(&cum_ps, &cum_rt, RelativeKind::Difference).unwrap();
        for (d, b) in diff.iter().zip(&back) {
            prop_assert!((d.unwrap() + b.unwrap()).abs() < 1e-9);
        }
        let ratio = relative_series(&cum_rt, &cum_ps, RelativeKind::Ratio).unwrap();
        for r in ratio {
            prop_assert!((r.unwrap() - 1.0 / ps_scale).abs() < 1e-9);
        }
    }

    #[test]
    fn month_arithmetic_round_trips(y in 1900i32..2100, m in 1u32..=12, k in -600i32..600) {
        let a = Month::new(y, m).unwrap();
        let b = a.plus(k);
        prop_assert_eq!(b.since(a), k);
        prop_assert_eq!(b.minus(k), a);
        prop_assert_eq!(b.to_string().parse::<Month>().unwrap(), b);
    }

    #[test]
    fn difference_transforms_invert(start in 1.0..100.0f64, steps in prop::collection::vec(-0.1..0.1f64, 3..30)) {
        let mut levels = vec![start];
        for s in &steps {
            levels.push(levels.last().unwrap() * s.exp());
        }
        let series = Series::observed(month(), &levels);
        let dl = apply_transform(&series, TransformCode::DiffLog).unwrap();
        prop_assert_eq!(dl.start, month().plus(1));
        for (i, s) in steps.iter().enumerate() {
            prop_assert!((dl.values[i].unwrap() - s).abs() < 1e-10);
        }
        let d2 = apply_transform(&series, TransformCode::Diff2Log).unwrap();
        prop_assert_eq!(d2.len(), levels.len() - 2);
        for i in 0..d2.len() {
            prop_assert!((d2.values[i].unwrap() - (steps[i + 1] - steps[i])).abs() < 1e-10);
        }
    }
}
