use cetsp::analysis::claims::{estimate_claim, ClaimId, ClaimParams, Verdict};
use cetsp::analysis::thresholds;

#[test]
fn longer_runs_keep_a_pass() {
    let mut last = None;
    for trials in [10_000, 100_000, 1_000_000] {
        let b = estimate_claim(&ClaimParams::new(ClaimId::C2, 10, trials, 21)).unwrap();
        assert_eq!(b.verdict, Verdict::Pass, "{trials} trials: {b:?}");
        if let Some((lo, hi)) = last {
            assert!(b.ci_high - b.ci_low < hi - lo);
        }
        last = Some((b.ci_low, b.ci_high));
    }
}

#[test]
fn frozen_thresholds_hold_across_the_calibrated_range() {
    for n in [*thresholds::CALIBRATED_N.start(), 24, 48] {
        for (claim, k) in [(ClaimId::C4, 2), (ClaimId::C4, 3), (ClaimId::C5, 2), (ClaimId::C6, 2)] {
            let mut p = ClaimParams::new(claim, n, 50_000, 22);
            p.k = k;
            let b = estimate_claim(&p).unwrap();
            assert!(b.passed(), "{claim} k={k} n={n}: {b:?}");
        }
    }
}

#[test]
fn c4_histogram_agrees_with_event_count() {
    let mut p = ClaimParams::new(ClaimId::C4, 16, 20_000, 23);
    p.k = 3;
    let b = estimate_claim(&p).unwrap();
    let hist = b.order_histogram.expect("order histogram");
    assert_eq!(hist.iter().sum::<u64>(), 20_000);
    assert_eq!(hist[3], b.successes);
    // A single edge can never differ.
    assert_eq!(hist[1], 0);
}
