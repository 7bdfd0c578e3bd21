//! Randomized checks of the structural laws on arbitrary small instances,
//! complementing the handpicked fixtures in the unit tests.

use std::collections::HashSet;

use proptest::prelude::*;

use finkit::{
    approximations, depth, enumerate_canonical_maps, enumerate_stair_functions, eval, eval_atom,
    is_sos, is_sos_sequence, leq, make_sos, span_contains, span_enumerate, span_size,
    subsequences_up_to, BlockSequence, CanonicalMap, ColorRule, ColorSource, Depth, KVector,
    SpanTerm, StairFunction,
};

/// Assembles one block from entry shapes `(gap, value)`, advancing a position
/// cursor and forcing the final entry to attain the level.
fn build_block(level: u8, start: u64, shape: &[(u64, u8)]) -> (KVector, u64) {
    let mut pos = start;
    let mut entries = Vec::with_capacity(shape.len());
    for &(gap, value) in shape {
        pos += gap;
        entries.push((pos, value.clamp(1, level)));
        pos += 1;
    }
    let last = entries.len() - 1;
    entries[last].1 = level;
    (KVector::new(level, entries).expect("assembled entries are ordered"), pos)
}

fn arb_sequence(max_level: u8, max_blocks: usize) -> impl Strategy<Value = BlockSequence> {
    (1..=max_level, 1..=max_blocks).prop_flat_map(|(level, count)| {
        prop::collection::vec(prop::collection::vec((0u64..3, 1u8..=level), 1..=3), count)
            .prop_map(move |shapes| {
                let mut blocks = Vec::with_capacity(shapes.len());
                let mut cursor = 0;
                for shape in &shapes {
                    let (block, end) = build_block(level, cursor, shape);
                    blocks.push(block);
                    cursor = end;
                }
                BlockSequence::new(level, blocks).expect("assembled blocks are separated")
            })
    })
}

fn arb_vector(max_level: u8) -> impl Strategy<Value = KVector> {
    arb_sequence(max_level, 1).prop_map(|x| x.blocks()[0].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tetris_composes_additively(x in arb_vector(3), i in 0u8..=3, j in 0u8..=3) {
        prop_assert_eq!(x.tetris(i).tetris(j), x.tetris(i + j));
    }

    #[test]
    fn span_matches_the_counting_law(x in arb_sequence(3, 4)) {
        let span = span_enumerate(&x);
        prop_assert_eq!(span.len() as u128, span_size(x.level(), x.len()));
        let distinct: HashSet<&KVector> = span.iter().map(|(w, _)| w).collect();
        prop_assert_eq!(distinct.len(), span.len());
        for (w, term) in &span {
            prop_assert_eq!(&term.realize(&x).unwrap(), w);
            let witness = span_contains(&x, w).unwrap();
            prop_assert_eq!(witness.as_ref(), Some(term));
        }
    }

    #[test]
    fn membership_agrees_with_enumeration_on_mutants(
        x in arb_sequence(3, 4),
        pick in any::<prop::sample::Index>(),
        entry in any::<prop::sample::Index>(),
        bump_value in any::<bool>(),
    ) {
        let span = span_enumerate(&x);
        let (w, _) = &span[pick.index(span.len())];
        let level = x.level();
        let mut entries = w.entries().to_vec();
        let e = entry.index(entries.len());
        if bump_value && entries[e].1 < level {
            entries[e].1 += 1;
        } else {
            entries[e].0 += 1;
        }
        let mutant = KVector::new(level, entries).unwrap_or_else(|_| {
            // The position bump collided with the next entry; append a fresh
            // top entry instead, which always leaves the span element.
            let mut entries = w.entries().to_vec();
            entries.push((entries.last().unwrap().0 + 2, level));
            KVector::new(level, entries).expect("appended entry stays ordered")
        });
        let truth = span.iter().find(|(v, _)| v == &mutant).map(|(_, t)| t.clone());
        let got = span_contains(&x, &mutant).unwrap();
        prop_assert_eq!(got, truth);
    }

    #[test]
    fn approximations_are_distinct_initial_segments(
        x in arb_sequence(3, 4),
        n_pick in any::<prop::sample::Index>(),
    ) {
        let n = n_pick.index(x.len()) + 1;
        let approx = approximations(&x, n).unwrap();
        let distinct: HashSet<&BlockSequence> = approx.iter().collect();
        prop_assert_eq!(distinct.len(), approx.len());
        for a in &approx {
            prop_assert_eq!(a.len(), n);
            prop_assert!(leq(a, &x, false).unwrap().is_some());
        }
    }

    #[test]
    fn staircase_generator_is_shape_correct_and_translation_equivariant(
        k in 1u8..=4,
        m in 1usize..=5,
        origin in 0u64..=30,
        strong in any::<bool>(),
    ) {
        let x = make_sos(k, m, strong, origin).unwrap();
        prop_assert_eq!(x.len(), m);
        prop_assert_eq!(x.level(), k);
        prop_assert!(is_sos_sequence(&x, strong));
        for b in x.blocks() {
            prop_assert!(is_sos(b));
            if k > 1 {
                // Tetris images of staircase blocks keep the shape a level down.
                prop_assert!(is_sos(&b.tetris(1)));
            }
        }
        let base = make_sos(k, m, strong, 0).unwrap();
        for (b, b0) in x.blocks().iter().zip(base.blocks()) {
            let shifted: Vec<(u64, u8)> =
                b0.entries().iter().map(|&(p, v)| (p + origin, v)).collect();
            prop_assert_eq!(b.entries(), shifted.as_slice());
        }
    }

    #[test]
    fn strict_evaluation_joins_disjoint_atoms_on_staircases(
        k in 1u8..=2,
        m in 2usize..=4,
        pf in any::<prop::sample::Index>(),
        pw in any::<prop::sample::Index>(),
    ) {
        let x = make_sos(k, m, false, 0).unwrap();
        let span = span_enumerate(&x);
        let (w, _) = &span[pw.index(span.len())];
        let funcs = enumerate_stair_functions(k, false);
        let f = &funcs[pf.index(funcs.len())];
        let mut merged: Vec<(u64, u8)> = Vec::new();
        for atom in f.atoms() {
            merged.extend(eval_atom(&atom, w).unwrap().entries().iter().copied());
        }
        merged.sort_unstable();
        for pair in merged.windows(2) {
            prop_assert_ne!(pair[0].0, pair[1].0, "atom supports overlap on a staircase span");
        }
        let out = eval(f, w);
        prop_assert!(out.is_ok(), "evaluation must be total on staircase spans");
        let out = out.unwrap();
        prop_assert_eq!(out.entries(), merged.as_slice());
        prop_assert_eq!(out.level(), merged.iter().map(|e| e.1).max().unwrap_or(0));
    }

    #[test]
    fn vector_codecs_round_trip(x in arb_vector(3)) {
        let text = x.to_string();
        prop_assert_eq!(&text.parse::<KVector>().unwrap(), &x);
        let json = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(&serde_json::from_str::<KVector>(&json).unwrap(), &x);
    }

    #[test]
    fn sequence_and_term_codecs_round_trip(
        x in arb_sequence(3, 4),
        pick in any::<prop::sample::Index>(),
    ) {
        let json = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(&serde_json::from_str::<BlockSequence>(&json).unwrap(), &x);
        let span = span_enumerate(&x);
        let (_, term) = &span[pick.index(span.len())];
        let term_json = serde_json::to_string(term).unwrap();
        prop_assert_eq!(&serde_json::from_str::<SpanTerm>(&term_json).unwrap(), term);
    }

    #[test]
    fn function_and_map_codecs_round_trip(
        k in 1u8..=2,
        d in 1usize..=2,
        pf in any::<prop::sample::Index>(),
        pm in any::<prop::sample::Index>(),
    ) {
        let funcs = enumerate_stair_functions(k, false);
        let f = &funcs[pf.index(funcs.len())];
        let f_json = serde_json::to_string(f).unwrap();
        prop_assert_eq!(&serde_json::from_str::<StairFunction>(&f_json).unwrap(), f);
        let maps = enumerate_canonical_maps(k, d);
        let map = &maps[pm.index(maps.len())];
        let m_json = serde_json::to_string(map).unwrap();
        prop_assert_eq!(&serde_json::from_str::<CanonicalMap>(&m_json).unwrap(), map);
    }

    #[test]
    fn color_source_codecs_round_trip(
        entries in prop::collection::btree_map("[a-z]{0,6}", "[0-9]{1,3}", 0..6),
        rule_pick in 0usize..4,
    ) {
        let rule = [ColorRule::Union, ColorRule::Constant, ColorRule::MinParity,
            ColorRule::FirstValue][rule_pick];
        let source = ColorSource::Rule(rule);
        let json = serde_json::to_string(&source).unwrap();
        prop_assert_eq!(&serde_json::from_str::<ColorSource>(&json).unwrap(), &source);
        let table = ColorSource::Table(entries);
        let json = serde_json::to_string(&table).unwrap();
        prop_assert_eq!(&serde_json::from_str::<ColorSource>(&json).unwrap(), &table);
    }
}

proptest! {
    // Subsequence enumerations fan out quickly, so these run fewer cases.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_order_is_reflexive_and_transitive(
        x in arb_sequence(2, 4),
        py in any::<prop::sample::Index>(),
        pz in any::<prop::sample::Index>(),
    ) {
        let subs = subsequences_up_to(&x, 3);
        let y = &subs[py.index(subs.len())];
        prop_assert!(leq(y, y, false).unwrap().is_some());
        let inner = subsequences_up_to(y, 2);
        let z = &inner[pz.index(inner.len())];
        prop_assert!(leq(z, y, false).unwrap().is_some());
        prop_assert!(leq(z, &x, false).unwrap().is_some());
    }

    #[test]
    fn depth_is_the_first_accommodating_prefix(
        x in arb_sequence(2, 4),
        ps in any::<prop::sample::Index>(),
    ) {
        let subs = subsequences_up_to(&x, 3);
        let s = &subs[ps.index(subs.len())];
        match depth(&x, s).unwrap() {
            Depth::Finite(d) => {
                prop_assert!(leq(s, &x.restrict(d).unwrap(), false).unwrap().is_some());
                if d > 0 {
                    prop_assert!(leq(s, &x.restrict(d - 1).unwrap(), false).unwrap().is_none());
                }
            }
            Depth::Infinite => prop_assert!(false, "subsequences of x always fit below x"),
        }
        let level = x.level();
        let top = x.blocks().last().unwrap().max_supp().unwrap();
        let far = BlockSequence::new(
            level,
            vec![KVector::new(level, vec![(top + 3, level)]).unwrap()],
        )
        .unwrap();
        prop_assert_eq!(depth(&x, &far).unwrap(), Depth::Infinite);
    }
}
