use proptest::prelude::*;

use memchaos::chaos::{jacobian, rk4_step, vector_field, Integrator, State7, SystemParams, DIM};
use memchaos::cipher::{
    apply_passes, arnold_forward, arnold_inverse, decrypt_bytes, decrypt_image, encrypt_bytes, encrypt_image,
    keyed_permutation, permute, unpermute, ArnoldParams, CipherEnvelope, NATURAL_ORDER,
};
use memchaos::image::{ImageRGB, PlaneRef};
use memchaos::io::{format_modbus_hex, parse_modbus_hex, ModbusFrame};
use memchaos::keystream::{Key, KeystreamGenerator};
use memchaos::metrics::{adjacent_correlation, histogram, mse, shannon_entropy, ssim, Direction, SsimConfig};
use memchaos::nist::{approximate_entropy, block_frequency, monobit, runs, serial, BitSequence};

fn symmetric_key() -> impl Strategy<Value = Key> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.99..1.01f64).prop_map(|(u, v, w, phi, s)| {
        let p = SystemParams {
            alpha: 10.0 * s,
            ..SystemParams::CANONICAL
        };
        Key::new(State7([u, u, v, v, w, w, phi]), p).unwrap()
    })
}

fn small_image() -> impl Strategy<Value = ImageRGB> {
    (1u32..20, 1u32..20).prop_flat_map(|(w, h)| {
        let n = (w * h) as usize;
        [
            prop::collection::vec(any::<u8>(), n),
            prop::collection::vec(any::<u8>(), n),
            prop::collection::vec(any::<u8>(), n),
        ]
        .prop_map(move |planes| ImageRGB::new(w, h, planes).unwrap())
    })
}

fn bounded_state() -> impl Strategy<Value = State7> {
    prop::array::uniform7(-3.0..3.0f64).prop_map(State7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bytes_round_trip(key in symmetric_key(), data in prop::collection::vec(any::<u8>(), 1..600)) {
        let env = encrypt_bytes(&data, &key).unwrap();
        let env = CipherEnvelope::from_bytes(&env.to_bytes()).unwrap();
        prop_assert_eq!(decrypt_bytes(&env, &key).unwrap(), data);
    }

    #[test]
    fn image_round_trip(key in symmetric_key(), img in small_image()) {
        let env = encrypt_image(&img, &key).unwrap();
        prop_assert_eq!(decrypt_image(&env, &key).unwrap(), img);
    }

    #[test]
    fn key_text_round_trip(key in symmetric_key()) {
        prop_assert_eq!(Key::from_text(&key.to_text()).unwrap(), key);
    }
}

proptest! {
    #[test]
    fn permutation_is_bijection(n in 1usize..=144, skip in 0usize..50) {
        let mut g = KeystreamGenerator::new(&Key::canonical()).unwrap();
        for _ in 0..skip {
            g.next_byte().unwrap();
        }
        let p = keyed_permutation(n, &mut g).unwrap();
        let mut sorted = p.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let data: Vec<u16> = (0..n as u16).collect();
        prop_assert_eq!(unpermute(&permute(&data, &p), &p), data);
    }

    #[test]
    fn arnold_round_trip((l, a, b) in (1u64..=12).prop_flat_map(|l| (Just(l), 0..l, 0..l)), k in 1u8..=6, seed in any::<u8>()) {
        let ap = ArnoldParams::new(a, b, l, k).unwrap();
        let plane: Vec<u8> = (0..l * l).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        let fwd = arnold_forward(&plane, &ap).unwrap();
        let mut a_sorted = fwd.clone();
        let mut b_sorted = plane.clone();
        a_sorted.sort_unstable();
        b_sorted.sort_unstable();
        prop_assert_eq!(a_sorted, b_sorted);
        prop_assert_eq!(arnold_inverse(&fwd, &ap).unwrap(), plane);
    }

    #[test]
    fn xor_passes_commute(data in prop::collection::vec(any::<u8>(), 16), order in Just(NATURAL_ORDER).prop_shuffle()) {
        let mut g = KeystreamGenerator::new(&Key::canonical()).unwrap();
        let block: Vec<[u8; 7]> = (0..16).map(|_| g.next_step_bytes().unwrap()).collect();
        let mut a = data.clone();
        let mut b = data.clone();
        apply_passes(&mut a, &block, &NATURAL_ORDER);
        apply_passes(&mut b, &block, &order);
        prop_assert_eq!(&a, &b);
        apply_passes(&mut a, &block, &order);
        prop_assert_eq!(a, data);
    }

    #[test]
    fn jacobian_matches_finite_differences(s in bounded_state()) {
        let p = SystemParams::CANONICAL;
        let j = jacobian(&s, &p).unwrap();
        let jmax = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for col in 0..DIM {
            let h = 1e-6;
            let (mut sp, mut sm) = (s, s);
            sp.0[col] += h;
            sm.0[col] -= h;
            let fp = vector_field(&sp, &p).unwrap();
            let fm = vector_field(&sm, &p).unwrap();
            for row in 0..DIM {
                let fd = (fp.0[row] - fm.0[row]) / (2.0 * h);
                prop_assert!((fd - j[row][col]).abs() <= 1e-4 * jmax, "J[{}][{}]", row, col);
            }
        }
    }

    #[test]
    fn symmetric_subspace_is_invariant(u in -1.0..1.0f64, v in -1.0..1.0f64, w in -1.0..1.0f64, phi in -1.0..1.0f64) {
        let mut it = Integrator::new(SystemParams::CANONICAL, [u, u, v, v, w, w, phi], 0.001);
        for _ in 0..2000 {
            let s = *it.advance().unwrap();
            prop_assert!((s[0] - s[1]).abs() <= 1e-9 && (s[2] - s[3]).abs() <= 1e-9 && (s[4] - s[5]).abs() <= 1e-9);
        }
    }

    #[test]
    fn rk4_is_fourth_order(s in prop::array::uniform7(-0.5..0.5f64)) {
        let p = SystemParams::CANONICAL;
        let run = |dt: f64, steps: usize| {
            let mut x = s;
            for _ in 0..steps {
                x = rk4_step(&p, &x, dt);
            }
            x
        };
        let reference = run(0.1 / 256.0, 256);
        let err = |x: [f64; DIM]| x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let coarse = err(run(0.1 / 8.0, 8));
        let fine = err(run(0.1 / 16.0, 16));
        prop_assume!(fine > 1e-13);
        let ratio = coarse / fine;
        prop_assert!((10.0..24.0).contains(&ratio), "error ratio {}", ratio);
    }

    #[test]
    fn modbus_hex_round_trip(bytes in prop::collection::vec(any::<u8>(), 1..64)) {
        let f = ModbusFrame::new(bytes).unwrap();
        prop_assert_eq!(parse_modbus_hex(&format_modbus_hex(&f)).unwrap(), f);
    }

    #[test]
    fn metric_symmetries(a in prop::collection::vec(any::<u8>(), 64), b in prop::collection::vec(any::<u8>(), 64)) {
        let (pa, pb) = (PlaneRef::new(8, 8, &a).unwrap(), PlaneRef::new(8, 8, &b).unwrap());
        prop_assert_eq!(mse(&pa, &pb).unwrap(), mse(&pb, &pa).unwrap());
        let cfg = SsimConfig::standard();
        prop_assert!((ssim(&pa, &pb, &cfg).unwrap() - ssim(&pb, &pa, &cfg).unwrap()).abs() < 1e-12);
        let s = ssim(&pa, &pb, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(histogram(&a).total(), 64);
    }

    #[test]
    fn entropy_invariant_under_relabeling(data in prop::collection::vec(any::<u8>(), 1..500), shift in any::<u8>(), mul in (0u8..128).prop_map(|m| 2 * m + 1)) {
        // odd multiplier plus shift is a bijection on bytes
        let relabeled: Vec<u8> = data.iter().map(|&v| v.wrapping_mul(mul).wrapping_add(shift)).collect();
        prop_assert!((shannon_entropy(&data) - shannon_entropy(&relabeled)).abs() < 1e-12);
    }

    #[test]
    fn correlation_is_deterministic(data in prop::collection::vec(any::<u8>(), 256), seed in any::<u64>()) {
        let p = PlaneRef::new(16, 16, &data).unwrap();
        for d in Direction::ALL {
            let a = adjacent_correlation(&p, d, 100, seed);
            let b = adjacent_correlation(&p, d, 100, seed);
            prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
            if let Ok(r) = a {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn p_values_in_unit_interval(bytes in prop::collection::vec(any::<u8>(), 128..256)) {
        let s = BitSequence::from_bytes(&bytes, bytes.len() * 8).unwrap();
        for r in [
            monobit(&s).unwrap(),
            block_frequency(&s, 16).unwrap(),
            runs(&s).unwrap(),
            approximate_entropy(&s, 2).unwrap(),
            serial(&s, 3).unwrap(),
        ] {
            prop_assert!(r.sub_p_values.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert_eq!(r.pass, r.p_value >= 0.01);
        }
    }
}
