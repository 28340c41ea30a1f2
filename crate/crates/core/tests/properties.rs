use proptest::prelude::*;

use cfelab::arith::{dual_residue, Modulus};
use cfelab::cfe::{cfe_len, ReducedFraction};
use cfelab::crosssec::crossing_sequence;
use cfelab::lattice::{height, orbit_point, LatticeBasis, OrbitTracker, MIN_HEIGHT};
use cfelab::stats::{mass_escape_count_unchecked, sweep};
use cfelab::zaremba::{enumerate_bounded, members, Rule};

fn fraction(q: u64, seed: u64) -> Option<ReducedFraction> {
    ReducedFraction::new(1 + seed % (q - 1), q).ok()
}

fn apply(g: [[i64; 2]; 2], rows: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let e = |i: usize, j: usize| g[i][0] as f64 * rows[0][j] + g[i][1] as f64 * rows[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn height_ignores_choice_of_basis(q in 3u64..10_000, seed in any::<u64>(), t in 0.0f64..15.0, n in -3i64..=3) {
        let Some(x) = fraction(q, seed) else { return Ok(()) };
        let b = orbit_point(x, t.min(2.0 * (q as f64).ln()));
        let h = height(&b).unwrap();
        // S T^n
        let g = [[0, -1], [1, n]];
        let h2 = height(&LatticeBasis::new(apply(g, b.rows()))).unwrap();
        prop_assert!((h - h2).abs() <= 1e-9 * h);
        prop_assert!(h >= MIN_HEIGHT - 1e-12);
    }

    #[test]
    fn tracker_agrees_with_reduction(q in 3u64..10_000, seed in any::<u64>(), t in 0.0f64..1.0) {
        let Some(x) = fraction(q, seed) else { return Ok(()) };
        let t = t * 2.0 * (q as f64).ln();
        let tracked = OrbitTracker::new(x).sample(t).unwrap().height;
        let reduced = height(&orbit_point(x, t)).unwrap();
        prop_assert!((tracked - reduced).abs() <= 1e-8 * reduced, "{tracked} vs {reduced}");
    }

    #[test]
    fn dual_orbit_runs_backwards(q in 3u64..1_000_000, seed in any::<u64>(), s in 0.0f64..1.0) {
        let Some(x) = fraction(q, seed) else { return Ok(()) };
        let m = Modulus::new(q).unwrap();
        let d = ReducedFraction::new(dual_residue(x.numer(), &m).unwrap(), q).unwrap();
        let span = 2.0 * (q as f64).ln();
        let t = s * span;
        let a = OrbitTracker::new(x).sample(t).unwrap().height;
        let b = OrbitTracker::new(d).sample(span - t).unwrap().height;
        prop_assert!((a - b).abs() <= 1e-7 * a, "{a} vs {b}");
    }

    #[test]
    fn crossing_count_follows_side(q in 5u64..1_000_000, seed in any::<u64>()) {
        let Some(x) = fraction(q, seed) else { return Ok(()) };
        let p = x.numer();
        prop_assume!(p != 1 && p != q - 1 && 2 * p != q);
        let len = cfe_len(x);
        let expected = if 2 * p < q { len - 1 } else { len - 2 };
        prop_assert_eq!(crossing_sequence(x).unwrap().len(), expected);
    }

    #[test]
    fn escape_count_shrinks_with_threshold(q in 3u64..3000, t in 0.0f64..1.0) {
        let m = Modulus::new(q).unwrap();
        let t = t * 2.0 * (q as f64).ln();
        let a = mass_escape_count_unchecked(&m, 2.0, t).unwrap().count;
        let b = mass_escape_count_unchecked(&m, 3.0, t).unwrap().count;
        prop_assert!(b <= a);
    }

    #[test]
    fn census_counts_members(q in 2u64..20_000, k in 1u64..=4) {
        let c = enumerate_bounded(q, k).unwrap();
        for rule in [Rule::Relaxed, Rule::Strict] {
            let ms = members(q, k, rule).unwrap();
            prop_assert_eq!(c.count(q, rule) as usize, ms.len());
            let wider = members(q, k + 1, rule).unwrap();
            prop_assert!(ms.iter().all(|p| wider.binary_search(p).is_ok()));
        }
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let m = Modulus::new(30_011).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| sweep(&m, 64).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.nu_bar().unwrap(), b.nu_bar().unwrap());
    assert_eq!(a.len_counts(), b.len_counts());
    assert_eq!(a.digits(), b.digits());
}
