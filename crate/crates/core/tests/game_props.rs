use proptest::collection::btree_set;
use proptest::prelude::*;
use valence_core::game::{label_event, DEFAULT_DELTA};
use valence_core::{replay_episode, simulate_episode, ExactMean, GameState, Money, PrizeSet, Sign, SimConfig};

/// `x + delta < num / den` decided by Euclidean division instead of
/// cross-multiplication: with `num = q den + r`, the strict inequality holds
/// iff `x + delta < q`, or `x + delta == q` and `r > 0`.
fn oracle_good(x: u64, delta: u64, num: u128, den: u64) -> bool {
    let lhs = u128::from(x) + u128::from(delta);
    let q = num / u128::from(den);
    let r = num % u128::from(den);
    lhs < q || (lhs == q && r > 0)
}

fn prize_sets() -> impl Strategy<Value = Vec<u64>> {
    btree_set(1u64..50_000_000, 2..30).prop_map(|s| s.into_iter().collect())
}

fn sign() -> impl Strategy<Value = Sign> {
    prop_oneof![Just(Sign::Plus), Just(Sign::Minus)]
}

proptest! {
    #[test]
    fn label_agrees_with_division_oracle(
        x in 0u64..30_000_000,
        num in 0u128..2_000_000_000_000,
        den in 2u64..40,
        delta in 0u64..200_000,
        d in sign(),
    ) {
        let mean = ExactMean::new(num, den).unwrap();
        let base = if oracle_good(x, delta, num, den) { Sign::Plus } else { Sign::Minus };
        prop_assert_eq!(label_event(Money(x), mean, d, Money(delta)).unwrap(), d * base);
    }

    #[test]
    fn label_agrees_with_oracle_near_boundary(x in 0u64..30_000_000, den in 2u64..40, delta in 0u64..200_000, off in -3i64..=3) {
        let exact = (u128::from(x + delta) * u128::from(den)) as i128;
        let num = (exact + i128::from(off)).max(0) as u128;
        let mean = ExactMean::new(num, den).unwrap();
        let base = if oracle_good(x, delta, num, den) { Sign::Plus } else { Sign::Minus };
        prop_assert_eq!(label_event(Money(x), mean, Sign::Plus, Money(delta)).unwrap(), base);
    }

    #[test]
    fn label_on_exact_boundary_is_bad(q in 0u64..10_000_000, den in 2u64..30, delta in 0u64..100_000) {
        // Mean exactly equal to x + delta.
        let x = q;
        let mean = ExactMean::new(u128::from(x + delta) * u128::from(den), den).unwrap();
        prop_assert_eq!(label_event(Money(x), mean, Sign::Plus, Money(delta)).unwrap(), Sign::Minus);
    }

    #[test]
    fn antisymmetric_in_deal(x in 0u64..30_000_000, num in 0u128..1_000_000_000_000, den in 2u64..30, delta in 0u64..200_000) {
        let mean = ExactMean::new(num, den).unwrap();
        let plus = label_event(Money(x), mean, Sign::Plus, Money(delta)).unwrap();
        let minus = label_event(Money(x), mean, Sign::Minus, Money(delta)).unwrap();
        prop_assert_eq!(minus, -plus);
    }

    #[test]
    fn non_increasing_in_removed(a in 0u64..30_000_000, b in 0u64..30_000_000, num in 0u128..1_000_000_000_000, den in 2u64..30) {
        let (lo, hi) = (a.min(b), a.max(b));
        let mean = ExactMean::new(num, den).unwrap();
        let l_lo = label_event(Money(lo), mean, Sign::Plus, DEFAULT_DELTA).unwrap();
        let l_hi = label_event(Money(hi), mean, Sign::Plus, DEFAULT_DELTA).unwrap();
        prop_assert!(l_lo.as_i8() >= l_hi.as_i8());
    }

    #[test]
    fn larger_margin_never_turns_bad_good(x in 0u64..30_000_000, num in 0u128..1_000_000_000_000, den in 2u64..30, d1 in 0u64..200_000, extra in 0u64..200_000) {
        let mean = ExactMean::new(num, den).unwrap();
        let small = label_event(Money(x), mean, Sign::Plus, Money(d1)).unwrap();
        let large = label_event(Money(x), mean, Sign::Plus, Money(d1 + extra)).unwrap();
        if small == Sign::Minus {
            prop_assert_eq!(large, Sign::Minus);
        }
    }

    #[test]
    fn means_are_exact_across_removal(prizes in prize_sets(), pick in any::<prop::sample::Index>()) {
        let set = PrizeSet::from_pence(prizes.clone()).unwrap();
        let removed = Money(prizes[pick.index(prizes.len())]);
        let (_, ev) = GameState::new(set).apply_open(removed).unwrap();
        let m = u128::from(ev.mean_before.denominator());
        prop_assert_eq!(u128::from(ev.mean_after.denominator()), m - 1);
        // mean_after * (m - 1) + removed = mean_before * m, as integers.
        prop_assert_eq!(ev.mean_after.numerator() + u128::from(removed.0), ev.mean_before.numerator());
    }

    #[test]
    fn full_game_cardinality(prizes in prize_sets(), seed in any::<u64>()) {
        let n = prizes.len();
        let mut state = GameState::new(PrizeSet::from_pence(prizes.clone()).unwrap());
        // Open every prize but the one chosen as the player's box, in a seeded order.
        let keep = (seed % n as u64) as usize;
        let mut order: Vec<u64> = prizes.iter().enumerate().filter(|&(i, _)| i != keep).map(|(_, &p)| p).collect();
        let shift = (seed >> 8) as usize % order.len();
        order.rotate_left(shift);
        for (k, p) in order.iter().enumerate() {
            let (next, ev) = state.apply_open(Money(*p)).unwrap();
            prop_assert_eq!(ev.round as usize, k + 1);
            prop_assert_eq!(next.remaining().len(), n - (k + 1));
            state = next;
        }
        prop_assert_eq!(state.remaining().as_slice(), &[Money(prizes[keep])][..]);
    }

    #[test]
    fn replay_is_pure(seed in any::<u64>()) {
        let ep = simulate_episode(&SimConfig::default().with_seed(seed)).unwrap();
        let a = replay_episode(&ep, DEFAULT_DELTA).unwrap();
        let b = replay_episode(&ep.clone(), DEFAULT_DELTA).unwrap();
        prop_assert_eq!(&a, &b);
        let opens = ep.actions.iter().filter(|x| matches!(x, valence_core::Action::Open { .. })).count();
        prop_assert_eq!(a.len(), opens);
        prop_assert_eq!(ep.board.len() - opens, 1);
    }
}

#[test]
fn small_prize_against_large_mean_flips_with_deal() {
    // £5 opened against an expected value of £17,331 over 22 boxes.
    let mean = ExactMean::new(1_733_100 * 22, 22).unwrap();
    assert_eq!(label_event(Money(500), mean, Sign::Plus, DEFAULT_DELTA).unwrap(), Sign::Plus);
    assert_eq!(label_event(Money(500), mean, Sign::Minus, DEFAULT_DELTA).unwrap(), Sign::Minus);
}
