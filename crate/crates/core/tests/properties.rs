use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tiltlab::exactnum::{pval, PValuation};
use tiltlab::padic::{block_of, negate_digits, Direction, PadicContext};
use tiltlab::projectors::lambda_scalar;
use tiltlab::quiveralg::{generators_at, hom_basis, rewrite};
use tiltlab::repchar::{decompose_weyl, simple_character, tilting_character, tilting_dim, weyl_character};
use tiltlab::verify::random_word;

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7, 11])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn digits_reassemble(v in 1u64..1_000_000, p in prime()) {
        let c = PadicContext::new(v, p).unwrap();
        prop_assert_eq!(c.digits().iter().rev().fold(0, |a, &d| a * p + d), v);
        prop_assert!(c.digits().iter().all(|&d| d < p));
        prop_assert_ne!(c.digit(c.lead()), 0);
    }

    #[test]
    fn support_has_two_to_the_generation(v in 1u64..1_000_000, p in prime()) {
        let c = PadicContext::new(v, p).unwrap();
        let supp = c.support();
        prop_assert_eq!(supp.len(), 1 << c.generation());
        prop_assert_eq!(supp.last().copied(), Some(v));
        prop_assert!(c.fsupport().is_subset(&supp));
        prop_assert_eq!(c.fsupport().is_empty(), c.is_eve());
    }

    #[test]
    fn reflections_round_trip(v in 1u64..200_000, p in prime()) {
        let c = PadicContext::new(v, p).unwrap();
        for s in c.down_admissible_sets() {
            let w = c.reflect_down(s).unwrap();
            prop_assert!(w <= v);
            let back = PadicContext::new(w, p).unwrap().reflect(s, Direction::Up).unwrap();
            prop_assert_eq!(back, v);
        }
    }

    #[test]
    fn support_lies_in_one_block(v in 1u64..100_000, p in prime()) {
        let c = PadicContext::new(v, p).unwrap();
        let b = block_of(v, p).unwrap();
        for w in c.support() {
            prop_assert_eq!(block_of(w, p).unwrap(), b);
        }
    }

    #[test]
    fn generators_land_on_neighbours(v in 1u64..5_000, p in prime()) {
        let c = PadicContext::new(v, p).unwrap();
        for g in generators_at(v, p).unwrap() {
            let t = g.target(p).unwrap();
            let (lo, hi) = if t < v { (t, v) } else { (v, t) };
            prop_assert!(PadicContext::new(hi, p).unwrap().fsupport().contains(&lo), "{:?} at {}", g.letter(), c.v());
        }
    }

    #[test]
    fn negation_is_additive_over_disjoint_sets(v in 1u64..1_000_000, p in prime(), a in 0u64..1024, b in 0u64..1024) {
        let (s, t) = (tiltlab::DigitSet::from_bits(a & !b), tiltlab::DigitSet::from_bits(b));
        let n = v as i64;
        let both = negate_digits(n, p, s.union(t));
        prop_assert_eq!(both, negate_digits(n, p, s) + negate_digits(n, p, t) - n);
        let c = PadicContext::new(v, p).unwrap();
        let all = tiltlab::DigitSet::range(0, c.lead());
        prop_assert_eq!(negate_digits(n, p, all), -n);
    }

    #[test]
    fn lambda_valuation_counts_the_set(v in 1u64..200_000, p in prime()) {
        let c = PadicContext::new(v, p).unwrap();
        for s in c.down_admissible_sets() {
            let l = lambda_scalar(v, s, p).unwrap();
            prop_assert_eq!(pval(&l, p).unwrap(), PValuation::Finite(-(s.len() as i64)));
        }
    }

    #[test]
    fn hom_dimension_is_support_overlap(v in 1u64..120, w in 1u64..120, p in prime()) {
        let sv = PadicContext::new(v, p).unwrap().support();
        let sw = PadicContext::new(w, p).unwrap().support();
        prop_assert_eq!(hom_basis(v, w, p).unwrap().len(), sv.intersection(&sw).count());
    }

    #[test]
    fn rewriting_commutes_with_reflection(seed in any::<u64>(), p in prime()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_word(&mut rng, p, 150, 5).unwrap();
        let nf = rewrite(&w).unwrap();
        prop_assert_eq!(rewrite(&w.reflect()).unwrap(), nf.reflect());
        prop_assert_eq!(nf.source, w.source());
        prop_assert_eq!(nf.target, w.target());
    }

    #[test]
    fn weyl_decomposition_is_dimension_exact(w in 1u64..2_000, p in prime()) {
        let d = decompose_weyl(w, p).unwrap();
        let total: u64 = d.iter().map(|(&n, &m)| m * simple_character(n, p).unwrap().dim()).sum();
        prop_assert_eq!(total, w);
        prop_assert_eq!(d.get(&(w - 1)).copied(), Some(1));
    }

    #[test]
    fn tilting_characters_are_sums_of_weyl(v in 1u64..5_000, p in prime()) {
        let t = tilting_character(v, p).unwrap();
        let weyl_dims: u64 = t.labels.iter().map(|&l| weyl_character(l + 1).unwrap().dim()).sum();
        prop_assert_eq!(t.character.dim(), weyl_dims);
        prop_assert_eq!(t.character.dim(), tilting_dim(v, p).unwrap());
        prop_assert!(t.character.is_symmetric());
    }
}
