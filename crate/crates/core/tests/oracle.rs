mod common;

use common::{iv, transf2, ExactOracle};
use paa_core::{
    companion, interval_kleene, running_bounds, stability_order, unfold_exact, Divergence, FilterError, FilterSpec,
    InputMode,
};

/// Range of x[k] by enumerating every corner of the input box. The filter is
/// linear in its inputs, so extrema sit on corners.
fn corner_range(spec: &FilterSpec, k: usize) -> (f64, f64) {
    let n = spec.order();
    let inputs = k + 1;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1 << inputs) {
        let e: Vec<f64> = (0..inputs)
            .map(|j| if mask >> j & 1 == 1 { spec.input().hi } else { spec.input().lo })
            .collect();
        let mut x: Vec<f64> = spec.init().iter().map(|r| r.lo).collect();
        for t in n..=k {
            let mut v = 0.0;
            for i in 0..n {
                v += spec.a()[i] * x[t - n + i];
            }
            for j in 0..=n {
                v += spec.b()[j] * e[t - n + j];
            }
            x.push(v);
        }
        lo = lo.min(x[k]);
        hi = hi.max(x[k]);
    }
    (lo, hi)
}

#[test]
fn unfolding_matches_corner_enumeration() {
    let spec = transf2(InputMode::Independent);
    for k in 2..=14 {
        let (lo, hi) = corner_range(&spec, k);
        let g = unfold_exact(&spec, k).gamma().unwrap();
        assert!((g.lo - lo).abs() < 1e-12 && (g.hi - hi).abs() < 1e-12, "k={k}: {g} vs [{lo}, {hi}]");
    }
}

#[test]
fn running_bounds_match_rational_oracle() {
    let spec = transf2(InputMode::Independent);
    let t = running_bounds(&spec, 120, 0);
    let exact = ExactOracle::transf2(120, false);
    assert_eq!(t.rows.len(), exact.rows.len());
    for (r, e) in t.rows.iter().zip(&exact.rows) {
        assert_eq!(r.k, e.0);
        assert!((r.lo - e.1).abs() < 1e-12 && (r.hi - e.2).abs() < 1e-12, "k={}", r.k);
    }
}

#[test]
fn late_output_range() {
    let g = unfold_exact(&transf2(InputMode::Independent), 99).gamma().unwrap();
    assert!((g.lo - -1.0907188500).abs() < 1e-6);
    assert!((g.hi - 2.7573854753).abs() < 1e-6);
}

#[test]
fn extrema_under_calibrated_indexing() {
    let t = running_bounds(&transf2(InputMode::Independent), 50, 1);
    let (max, kmax) = t.max().unwrap();
    let (min, kmin) = t.min().unwrap();
    assert_eq!((kmax, kmin), (8, 13));
    assert!((max - 2.82431841).abs() < 1e-6);
    assert!((min - -1.12124069).abs() < 1e-6);
    // Counting from the first output instead, x2 is the minimum.
    let full = running_bounds(&transf2(InputMode::Independent), 50, 0);
    assert_eq!(full.min().unwrap().1, 2);
}

#[test]
fn first_initial_value_is_zero_form() {
    let f = unfold_exact(&transf2(InputMode::Independent), 1);
    assert_eq!(f.center(), 0.0);
    assert!(f.coeffs().is_empty());
}

#[test]
fn first_order_example_three_steps() {
    let spec = FilterSpec::new(vec![0.5], vec![0.0, 1.0], iv(0.0, 1.0), vec![iv(0.0, 0.0)], InputMode::Independent)
        .unwrap();
    let g = unfold_exact(&spec, 3).gamma().unwrap();
    let (lo, hi) = corner_range(&spec, 3);
    assert_eq!((g.lo, g.hi), (lo, hi));
    assert_eq!((g.lo, g.hi), (0.0, 1.75));
}

#[test]
fn constant_inputs_match_rational_oracle() {
    let spec = transf2(InputMode::Constant);
    let t = running_bounds(&spec, 200, 0);
    let exact = ExactOracle::transf2(200, true);
    for (r, e) in t.rows.iter().zip(&exact.rows) {
        assert!((r.lo - e.1).abs() < 1e-12 && (r.hi - e.2).abs() < 1e-12, "k={}", r.k);
    }
    let env = t.envelope().unwrap();
    assert!(env.subset_within(&iv(-0.1008, 2.3298), 1e-4), "{env}");
}

#[test]
fn empty_trace_for_zero_horizon() {
    assert!(running_bounds(&transf2(InputMode::Independent), 0, 0).rows.is_empty());
}

#[test]
fn companion_power_matches_known_entries() {
    let (q, m) = stability_order(&[-0.7, 1.4], 64).unwrap();
    assert_eq!(q, 5);
    let want = [[-0.5488, 0.2156], [-0.15092, -0.24696]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m.get(i, j) - want[i][j]).abs() < 1e-9);
        }
    }
    let a = companion(&transf2(InputMode::Independent));
    let mut p = a.clone();
    for _ in 1..5 {
        p = p.mul(&a);
    }
    assert_eq!(p, m);
}

#[test]
fn unstable_filter_has_no_order() {
    assert!(matches!(stability_order(&[1.1], 64), Err(FilterError::Unstable | FilterError::Undetermined(_))));
}

#[test]
fn interval_iteration_diverges_on_second_order_example() {
    let r = interval_kleene(&transf2(InputMode::Independent), iv(-1e6, 1e6), 10_000);
    assert!(matches!(r, Err(Divergence::Escaped { .. })), "{r:?}");
}
