use ncrip::equilibrium::{enumerate_sse, is_sse, is_sse_bruteforce};
use ncrip::game::{expected_utilities, PlayerId};
use ncrip::io::{game_to_json, parse_game, to_text};
use ncrip::pruning::{interval_representative, prune_nature};
use ncrip::random::{random_game, random_profile, RandomGameConfig};
use ncrip::rational::{int, rat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> RandomGameConfig {
    RandomGameConfig { max_nodes: 40, max_depth: 3, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn representatives_are_monotone(a in -400i64..=400, b in -400i64..=400, alpha in 1u64..=4) {
        let (x, y) = (rat(a.min(b), 400), rat(a.max(b), 400));
        prop_assert!(interval_representative(&x, alpha).unwrap() <= interval_representative(&y, alpha).unwrap());
    }

    #[test]
    fn games_round_trip_through_json(seed in any::<u64>()) {
        let g = random_game(&mut ChaCha8Rng::seed_from_u64(seed), &small());
        let text = to_text(&game_to_json(&g, None));
        let (back, beliefs) = parse_game(&text, "game.json").unwrap();
        prop_assert!(beliefs.is_none());
        prop_assert_eq!(to_text(&game_to_json(&back, None)), text);
    }

    #[test]
    fn one_shot_check_agrees_with_bruteforce(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(&mut rng, &small());
        let s = random_profile(&mut rng, &g);
        prop_assert_eq!(is_sse(&g, &s).unwrap().verdict, is_sse_bruteforce(&g, &s).unwrap().verdict);
    }

    #[test]
    fn enumerated_profiles_are_sses(seed in any::<u64>()) {
        let g = random_game(&mut ChaCha8Rng::seed_from_u64(seed), &small());
        for s in enumerate_sse(&g).unwrap() {
            prop_assert!(is_sse(&g, &s).unwrap().verdict);
        }
    }

    #[test]
    fn pruning_bounds_support_and_drift(seed in any::<u64>(), alpha in 1u64..=3) {
        let cfg = RandomGameConfig { nature_max_actions: 12, nested_nature: false, ..small() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(&mut rng, &cfg);
        let s = random_profile(&mut rng, &g);
        for j in 1..=g.provers() {
            let (pruned, maps) = prune_nature(&g, &s, alpha, PlayerId::Prover(j)).unwrap();
            prop_assert!(maps.iter().all(|m| m.keepers.len() as u64 <= 8 * alpha));
            let before = &expected_utilities(&g, &s).unwrap()[j - 1];
            let after = &expected_utilities(&pruned, &s).unwrap()[j - 1];
            let drift = if before > after { before - after } else { after - before };
            prop_assert!(drift * int(4 * alpha as i64) < int(1));
        }
    }
}
