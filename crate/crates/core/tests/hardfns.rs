use std::sync::Arc;

use pseudolab::extract::{lhl_extract, Extractor};
use pseudolab::gf2::{gf_mul, inner_product, FieldSpec};
use pseudolab::hardfn::*;
use pseudolab::models::*;
use pseudolab::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gip_3_2_is_inner_product() {
    let g = Gip::new(3, 2).unwrap();
    for x in 0..64u64 {
        // x_i1 at bit i, x_i2 at bit 3 + i
        let a = Bits::from_u64(x & 7, 3);
        let b = Bits::from_u64(x >> 3, 3);
        assert_eq!(g.eval(x), inner_product(&a, &b).unwrap());
    }
    assert_eq!(gip(2, 2, &"1110".parse().unwrap()), Ok(true));
    for x in 0..32u64 {
        assert_eq!(Gip::new(5, 1).unwrap().eval(x), x.count_ones() % 2 == 1);
    }
}

#[test]
fn rw_2_2_2_matches_gip_over_parities() {
    let rw = Rw::new(2, 2, 2).unwrap();
    let composed = compose_ext(
        Arc::new(Gip::new(2, 2).unwrap()),
        Extractor::parity(2, 2).unwrap(),
        2,
    )
    .unwrap();
    for x in 0..256u64 {
        assert_eq!(rw.eval(x), composed.eval(x));
    }
    assert_eq!(Rw::new(1, 2, 1).unwrap().eval(0b11), true);
    assert_eq!(Rw::new(1, 2, 1).unwrap().eval(0b01), false);
}

#[test]
fn ffm_is_symmetric_in_blocks() {
    let field = FieldSpec::new(2, 0b111).unwrap();
    for d in [2usize, 3] {
        let f = Ffm::new(d, field).unwrap();
        let blocks = BlockedInput::new(2 * d, d).unwrap();
        for x in 0..1u64 << (2 * d) {
            let parts: Vec<u64> = (0..d).map(|i| blocks.block(x, i)).collect();
            // every transposition of two blocks
            for i in 0..d {
                for j in i + 1..d {
                    let mut p = parts.clone();
                    p.swap(i, j);
                    let y = p
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (k, &v)| acc | blocks.embed(v, k));
                    assert_eq!(f.eval(x), f.eval(y));
                }
            }
            if parts.contains(&0) {
                assert!(!f.eval(x));
            }
        }
    }
    assert_eq!(ffm(2, &"0101".parse().unwrap(), &field), Ok(true));
    assert_eq!(ffm(2, &"010".parse().unwrap(), &field).is_err(), true);
}

#[test]
fn extffm_identity_seed_is_ffm() {
    let field = FieldSpec::new(3, 0b1011).unwrap();
    let ext = Extractor::toeplitz(3, 3).unwrap();
    let w = ext.identity_seed().unwrap();
    let f = Ffm::new(2, field).unwrap();
    for x in 0..64u64 {
        let xb = Bits::from_u64(x, 6);
        assert_eq!(extffm(2, &xb, &w, &ext, &field).unwrap(), f.eval(x));
    }
}

#[test]
fn extffm_matches_hand_composition() {
    let field = FieldSpec::new(2, 0b111).unwrap();
    let ext = Extractor::toeplitz(2, 2).unwrap();
    let w: Bits = "1011".parse().unwrap();
    for x in 0..16u64 {
        let x1 = Bits::from_u64(x & 3, 2);
        let x2 = Bits::from_u64(x >> 2, 2);
        let e1 = lhl_extract(&x1, &w, 2).unwrap().to_u64().unwrap();
        let e2 = lhl_extract(&x2, &w, 2).unwrap().to_u64().unwrap();
        let p = gf_mul(&field.element(e1).unwrap(), &field.element(e2).unwrap()).unwrap();
        assert_eq!(
            extffm(2, &Bits::from_u64(x, 4), &w, &ext, &field).unwrap(),
            p.bits() & 1 == 1
        );
    }
}

#[test]
fn extffm_linear_in_last_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let field = FieldSpec::default_for(4).unwrap();
    let ext = Extractor::toeplitz(5, 4).unwrap();
    let f = ExtFfm::new(3, ext, field).unwrap();
    let blocks = f.blocks();
    for _ in 0..500 {
        let x: u64 = rng.gen::<u64>() & ((1u64 << f.arity()) - 1);
        let (a, b) = (rng.gen_range(0..32u64), rng.gen_range(0..32u64));
        let with = |v: u64| f.eval(x & !blocks.block_mask(2) | blocks.embed(v, 2)) as u8;
        assert_eq!(with(a ^ b), with(a) ^ with(b) ^ with(0));
        assert_eq!(with(0), 0);
    }
}

#[test]
fn compose_ignores_dead_blocks() {
    // outer parity reads only blocks 0 and 2 of four
    let outer: DynFunction = Arc::new(Parity::affine(8, 0b0011_0011, false));
    let c = compose_ext(outer, Extractor::parity(2, 3).unwrap(), 4).unwrap();
    let rel = relevant_variables(&c).unwrap();
    assert_eq!(rel, (0..6).chain(12..18).collect::<Vec<_>>());

    let id = compose_ext(
        Arc::new(Gip::new(2, 2).unwrap()),
        Extractor::identity(2).unwrap(),
        2,
    )
    .unwrap();
    let par = compose_ext(
        Arc::new(Parity::full(3)),
        Extractor::parity(1, 4).unwrap(),
        3,
    )
    .unwrap();
    for x in 0..1u64 << 12 {
        assert_eq!(par.eval(x), x.count_ones() % 2 == 1);
        if x < 16 {
            assert_eq!(id.eval(x), Gip::new(2, 2).unwrap().eval(x));
        }
    }
}

#[test]
fn descriptors_round_trip() {
    let field = FieldSpec::default_for(2).unwrap();
    let descs = vec![
        FunctionDescriptor::Gip { m: 2, k: 3 },
        FunctionDescriptor::Rw { m: 1, k: 2, r: 3 },
        FunctionDescriptor::Ffm { d: 3, field },
        FunctionDescriptor::Extffm {
            d: 2,
            ext: Extractor::toeplitz(2, 2).unwrap(),
            field,
        },
        FunctionDescriptor::Compose {
            outer: Box::new(FunctionDescriptor::Ip { n: 3 }),
            ext: Extractor::parity(1, 2).unwrap(),
            k: 3,
        },
    ];
    for d in descs {
        let json = serde_json::to_string(&d).unwrap();
        let back: FunctionDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d, "{json}");
        let (f, g) = (d.build().unwrap(), back.build().unwrap());
        assert_eq!(
            TruthTable::from_function(&*f).unwrap(),
            TruthTable::from_function(&*g).unwrap()
        );
    }
}
