use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wroca::dwa::{bounded_equiv, dwa_equiv, explore, find_k_equiv_wa_config, underlying_wa, ExploreOptions};
use wroca::equiv::{replay_witness, synchronized_run, Evidence};
use wroca::testkit::{self, GeneratorConfig, DEFAULT_ORACLE_BUDGET};
use wroca::*;

fn config(seed: u64, field: FieldSpec) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        states: 1..=4,
        alphabet_size: 1..=3,
        field,
        ..GeneratorConfig::default()
    }
}

fn field_of(seed: u64) -> FieldSpec {
    if seed % 3 == 0 {
        FieldSpec::prime(7).unwrap()
    } else {
        FieldSpec::Rational
    }
}

fn all_words(symbols: usize, max_len: usize) -> impl Iterator<Item = Word> {
    (0..=max_len).flat_map(move |len| (0..symbols.pow(len as u32)).map(move |i| testkit::nth_word(i, len, symbols)))
}

/// Shortest distinguishing word of two weighted automata by plain enumeration.
fn dwa_oracle(b1: &Dwa, b2: &Dwa, max_len: usize) -> Option<Word> {
    all_words(b1.alphabet().len(), max_len).find(|w| b1.weight(w).unwrap() != b2.weight(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), word in proptest::collection::vec(0usize..3, 0..12)) {
        let a = testkit::generate(&config(seed, field_of(seed)));
        let word: Word = word.into_iter().map(|s| s % a.alphabet().len()).collect();
        let c = a.initial_configuration();
        prop_assert_eq!(a.run_word(&c, &word).unwrap(), a.run_word(&c, &word).unwrap());
    }

    #[test]
    fn dwa_witness_is_the_shortest_and_least(seed in any::<u64>()) {
        let cfg = GeneratorConfig { states: 1..=5, ..config(seed, field_of(seed)) };
        let (b1, b2) = testkit::generate_dwa_pair(&cfg);
        let verdict = dwa_equiv(&b1, &b2).unwrap();
        prop_assert!(verdict.stats.basis_size <= b1.size() + b2.size());
        let oracle = dwa_oracle(&b1, &b2, b1.size() + b2.size());
        prop_assert_eq!(verdict.witness.as_ref().map(|w| w.word.clone()), oracle);
        if let Some(w) = verdict.witness {
            prop_assert_eq!(&w.left, &b1.weight(&w.word).unwrap());
            prop_assert_eq!(&w.right, &b2.weight(&w.word).unwrap());
            prop_assert_ne!(w.left, w.right);
        }
    }

    #[test]
    fn pruning_does_not_change_the_verdict(seed in any::<u64>(), depth in 0u64..7) {
        let (b1, b2) = testkit::generate_dwa_pair(&config(seed, field_of(seed)));
        let pruned = ExploreOptions { max_depth: Some(depth), ..ExploreOptions::default() };
        let full = ExploreOptions { prune: false, ..pruned.clone() };
        let x = explore(&b1, &b2, &pruned).unwrap();
        let y = explore(&b1, &b2, &full).unwrap();
        prop_assert_eq!(x.witness, y.witness);
    }

    #[test]
    fn unfolding_is_faithful_and_clipped(seed in any::<u64>(), m in 0u64..6) {
        let cfg = GeneratorConfig { alphabet_size: 1..=2, ..config(seed, field_of(seed)) };
        let a = testkit::generate(&cfg);
        let b = unfold(&a, &m.into(), 1000).unwrap();
        prop_assert_eq!(b.size(), a.size() * (m as usize + 1));
        for w in all_words(a.alphabet().len(), m as usize) {
            prop_assert_eq!(a.weight_or_zero(&w).unwrap(), b.weight(&w).unwrap());
        }
        let width = a.size();
        for (from, symbol, (to, weight)) in b.transitions() {
            let (q, n) = (from % width, (from / width) as u64);
            let (q2, n2) = (to % width, (to / width) as u64);
            prop_assert!(n2 <= m);
            let t = a.transition(Guard::of(n), q, symbol).expect("unfolded edges come from the right map");
            prop_assert_eq!((t.target, n as i64 + i64::from(t.effect), &t.weight), (q2, n2 as i64, weight));
        }
        for q in 0..width {
            for n in 0..=m {
                for symbol in 0..a.alphabet().len() {
                    let kept = b.transition(n as usize * width + q, symbol).is_some();
                    let fits = a
                        .transition(Guard::of(n), q, symbol)
                        .is_some_and(|t| n as i64 + i64::from(t.effect) <= m as i64);
                    prop_assert_eq!(kept, fits);
                }
            }
        }
    }

    #[test]
    fn bounded_verdicts_match_the_oracle(seed in any::<u64>(), m in 0u64..8) {
        let (a1, a2, _) = testkit::generate_pair(&config(seed, field_of(seed)));
        let v = check_equivalence(&a1, &a2, &EquivOptions::bounded(m)).unwrap();
        let oracle = testkit::brute_force_witness(&a1, &a2, m as usize, DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert_eq!(v.witness.as_ref().map(|w| w.word.clone()), oracle.shortest_witness);
        prop_assert_eq!(v.mode, Mode::BoundedBy(m.into()));
        if let Some(w) = &v.witness {
            prop_assert!(v.stats.max_row <= (w.word.len() as u64).min(m));
            let r = replay_witness(&a1, &a2, &w.word).unwrap();
            prop_assert_eq!((&r.f1, &r.f2), (&w.left, &w.right));
        }
    }

    #[test]
    fn verdicts_are_reproducible(seed in any::<u64>()) {
        let (a1, a2, _) = testkit::generate_pair(&config(seed, field_of(seed)));
        let options = EquivOptions { budget: 5_000, ..EquivOptions::default() };
        prop_assert_eq!(check_equivalence(&a1, &a2, &options), check_equivalence(&a1, &a2, &options));
    }

    #[test]
    fn k_equivalence_ignores_the_configuration_weight(seed in any::<u64>(), k in 0u64..4, counter in 0u64..4) {
        let field = field_of(seed);
        let a = testkit::generate(&config(seed, field));
        let b = underlying_wa(&a);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = testkit::default_pool(field);
        let state = rng.gen_range(0..a.size());
        let s = pool[rng.gen_range(0..pool.len())].clone();
        let s_bar = pool[rng.gen_range(0..pool.len())].clone();
        let c = Configuration::new(state, counter, s.clone());
        let c_bar = Configuration::new(state, counter, s_bar.clone());
        let found = find_k_equiv_wa_config(&a, &c, &b, k).unwrap();
        let found_bar = find_k_equiv_wa_config(&a, &c_bar, &b, k).unwrap();
        prop_assert_eq!(found.is_some(), found_bar.is_some());
        if let Some(beta) = found {
            let scaled = WaConfig::new(beta.state, &(&s_bar * &s.inverse().unwrap()) * &beta.weight);
            let view = Unfolding::from_configuration(&a, c_bar, (counter + k).into());
            prop_assert!(bounded_equiv(&view, &b.from_config(scaled), k).unwrap());
        }
    }
}

#[test]
fn equivalent_transforms_are_recognised() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut lockstep = 0;
    for seed in 0..80 {
        let cfg = config(seed, field_of(seed));
        let a = testkit::generate(&cfg);
        let split = testkit::split_state(&a, rng.gen_range(0..a.size()), &mut rng);
        let b = testkit::reweight(&split, &cfg.pool(), &mut rng);
        let v = check_equivalence(&a, &b, &EquivOptions::default()).unwrap();
        assert!(v.is_equivalent(), "seed {seed}");
        assert_eq!(v.mode, Mode::Theoretical);
        lockstep += usize::from(v.evidence == Evidence::Lockstep);
        let v = check_equivalence(&a, &b, &EquivOptions::bounded(10)).unwrap();
        assert!(v.is_equivalent(), "seed {seed}");
    }
    assert_eq!(lockstep, 80);
}

#[test]
fn synchronized_runs_follow_both_machines() {
    for seed in 0..100 {
        let (a1, a2, _) = testkit::generate_pair(&config(seed, field_of(seed)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let word = testkit::random_word(&mut rng, a1.alphabet().len(), 10);
        let trace = synchronized_run(&a1, &a2, &word).unwrap();
        let run1 = a1.run_word(&a1.initial_configuration(), &word).unwrap();
        let run2 = a2.run_word(&a2.initial_configuration(), &word).unwrap();
        let stuck_at = |r: &RunOutcome| match r {
            RunOutcome::Complete(_) => word.len(),
            RunOutcome::Stuck { position, .. } => *position,
        };
        let first = stuck_at(&run1).min(stuck_at(&run2));
        assert_eq!(trace.pairs.len(), first + 1, "seed {seed}");
        assert_eq!(trace.stuck.is_some(), first < word.len());
        for (i, pair) in trace.pairs.iter().enumerate() {
            let prefix = &word[..i];
            let c1 = a1.run_word(&a1.initial_configuration(), prefix).unwrap().complete().unwrap().end;
            let c2 = a2.run_word(&a2.initial_configuration(), prefix).unwrap().complete().unwrap().end;
            assert_eq!((&pair.left, &pair.right), (&c1, &c2));
        }
    }
}
