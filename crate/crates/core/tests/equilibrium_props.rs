use ncrip::beliefs::{bayes_beliefs, limit_beliefs, reachable_sets, verify_sequential_rationality};
use ncrip::equilibrium::{all_profiles, enumerate_sse, enumerate_sse_with, is_sse, is_sse_bruteforce, SearchLimits};
use ncrip::game::{reach_probabilities, StrategyProfile};
use ncrip::random::{random_game, random_profile, RandomGameConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small() -> RandomGameConfig {
    RandomGameConfig { max_depth: 4, max_actions: 2, ..Default::default() }
}

#[test]
fn one_shot_matches_bruteforce_on_random_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let g = random_game(&mut rng, &small());
        for _ in 0..10 {
            let s = random_profile(&mut rng, &g);
            assert_eq!(is_sse(&g, &s).unwrap().verdict, is_sse_bruteforce(&g, &s).unwrap().verdict);
        }
    }
}

#[test]
fn enumeration_matches_exhaustive_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for _ in 0..200 {
        let g = random_game(&mut rng, &small());
        let Ok(every) = all_profiles(&g, 20_000) else { continue };
        let expected: Vec<StrategyProfile> = every.into_iter().filter(|s| is_sse(&g, s).unwrap().verdict).collect();
        assert_eq!(enumerate_sse(&g).unwrap(), expected);
        let parallel = enumerate_sse_with(&g, SearchLimits { jobs: 3, ..Default::default() }).unwrap();
        assert_eq!(parallel, expected);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn limit_beliefs_agree_with_bayes_and_support_sses() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let g = random_game(&mut rng, &small());
        let s = random_profile(&mut rng, &g);
        let (mu, _) = limit_beliefs(&g, &s).unwrap();
        for (k, _) in reachable_sets(&g, &s).unwrap() {
            assert_eq!(mu.at(k), bayes_beliefs(&g, &s, k).unwrap().as_slice());
        }
        for sse in enumerate_sse(&g).unwrap() {
            let (mu, _) = limit_beliefs(&g, &sse).unwrap();
            assert!(verify_sequential_rationality(&g, &sse, &mu).unwrap().holds);
        }
    }
}

#[test]
fn terminal_reach_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let g = random_game(&mut rng, &RandomGameConfig::default());
        let s = random_profile(&mut rng, &g);
        let reach = reach_probabilities(&g, &s);
        let total: ncrip::Rational = g.terminals().map(|t| reach[t].clone()).sum();
        assert_eq!(total, ncrip::rational::one());
    }
}
