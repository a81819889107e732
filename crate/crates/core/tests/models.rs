use proptest::prelude::*;
use pseudolab::corr::corr_exact;
use pseudolab::extract::parity_blocks_word;
use pseudolab::hardfn::{Gip, Rw};
use pseudolab::models::*;
use pseudolab::restriction::{apply, compose, Restriction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rw_equals_gip_over_block_parities() {
    for m in 1..=16usize {
        for k in 1..=16 / m {
            for r in 1..=16 / (m * k) {
                let rw = Rw::new(m, k, r).unwrap();
                let gip = Gip::new(m, k).unwrap();
                let composed = rw.as_composition().unwrap();
                for x in 0..1u64 << (m * k * r) {
                    // parity_blocks_word maps each mr-bit outer block to its m block parities
                    let y = (0..k).fold(0u64, |acc, j| {
                        let block = (x >> (j * m * r)) & ((1u64 << (m * r)) - 1);
                        acc | parity_blocks_word(m, r, block) << (j * m)
                    });
                    let direct = rw.eval(x);
                    assert_eq!(direct, gip.eval(y), "m={m} k={k} r={r} x={x:#b}");
                    assert_eq!(direct, composed.eval(x));
                }
            }
        }
    }
}

#[test]
fn parity_uncorrelated_with_small_juntas() {
    let n = 8;
    let parity = Parity::full(n);
    for w in 0..=3usize {
        for support in (0..1u64 << n).filter(|s| s.count_ones() as usize == w) {
            let vars: Vec<usize> = (0..n).filter(|&i| support >> i & 1 == 1).collect();
            for table in 0..1u64 << (1 << w) {
                let g = Junta::from_fn(n, vars.clone(), |v| table >> v & 1 == 1).unwrap();
                assert_eq!(corr_exact(&parity, &g).unwrap().value, 0.0);
            }
        }
    }
}

#[test]
fn l1_of_one_bit_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c31);
    for _ in 0..200 {
        let t = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=10);
        let b = BranchingProgram2::random(1, t, n, &mut rng).unwrap();
        let spec = fourier_expand(&b).unwrap();
        // L1 <= (t + 1) / 2, compared on integer numerators over 2^n
        assert!(
            2 * spec.l1_numerator() <= (t as u64 + 1) << n,
            "t={t} n={n} l1={}",
            spec.l1()
        );
    }
}

#[test]
fn decomposition_agrees_on_all_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbd);
    for _ in 0..100 {
        let b = BranchingProgram2::random(3, 5, 12, &mut rng).unwrap();
        let dec = decompose_2bp(&b).unwrap();
        assert_eq!(dec.juntas.len(), 10);
        assert!(dec.juntas.iter().all(|j| j.support().len() == 3));
        for x in 0..1u64 << 12 {
            assert_eq!(dec.core.eval(dec.phi(x)), b.eval(x));
        }
    }
}

#[test]
fn truth_table_hex_round_trip() {
    let t = TruthTable::from_fn(6, |x| x % 3 == 1).unwrap();
    let back = TruthTable::from_hex(6, &t.to_hex()).unwrap();
    assert_eq!(back, t);
}

fn restriction_strategy(n: usize) -> impl Strategy<Value = Restriction> {
    proptest::collection::vec(0u8..3, n).prop_map(|v| {
        v.iter()
            .map(|&c| ['0', '1', '*'][c as usize])
            .collect::<String>()
            .parse()
            .unwrap()
    })
}

proptest! {
    #[test]
    fn compose_is_associative(a in restriction_strategy(7), b in restriction_strategy(7), c in restriction_strategy(7)) {
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn restriction_agrees_with_fill(rho in restriction_strategy(6), x in 0u64..64) {
        let f = FnFunction::new(6, |y| (y * 5 + 1) % 7 < 3);
        let g = apply(&f, &rho).unwrap();
        let filled = rho.fill(&pseudolab::Bits::from_u64(x, 6)).unwrap();
        prop_assert_eq!(g.eval(x), f.eval(filled.to_u64().unwrap()));
    }

    #[test]
    fn fourier_reconstructs(table in any::<u32>()) {
        let f = FnFunction::new(5, move |x| table >> x & 1 == 1);
        let s = fourier_expand(&f).unwrap();
        for x in 0..32u64 {
            prop_assert_eq!(s.reconstruct_numerator(x), 32 * f.eval(x) as i64);
        }
        // Parseval for a 0/1 function: sum fhat^2 = E f
        prop_assert_eq!(s.l2_squared_numerator(), 32 * table.count_ones() as u128);
    }

    #[test]
    fn junta_anf_agrees(table in any::<u16>(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let support = rand::seq::index::sample(&mut rng, 9, 4).into_vec();
        let j = Junta::from_fn(9, support, move |v| table >> v & 1 == 1).unwrap();
        let p = junta_to_sparse(&j).unwrap();
        for x in 0..512u64 {
            prop_assert_eq!(p.eval(x), j.eval(x));
        }
    }

    #[test]
    fn corr_symmetric_and_negation_invariant(a in any::<u64>(), b in any::<u64>()) {
        let f = FnFunction::new(6, move |x| a >> x & 1 == 1);
        let g = FnFunction::new(6, move |x| b >> x & 1 == 1);
        let fg = corr_exact(&f, &g).unwrap().value;
        prop_assert_eq!(fg, corr_exact(&g, &f).unwrap().value);
        prop_assert_eq!(fg, corr_exact(&f, &Negated(&g)).unwrap().value);
    }
}
