//! The test implementations themselves, checked against a uniform generator.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use memchaos::nist::{run_battery, BatteryConfig, BitSequence, BATTERY_LEN};

#[test]
fn uniform_source_passes_each_test_95_percent() {
    const TRIALS: usize = 100;
    let mut passes = [0usize; BATTERY_LEN];
    let mut names = [""; BATTERY_LEN];
    for trial in 0..TRIALS {
        let mut rng = ChaCha20Rng::seed_from_u64(trial as u64);
        let mut bytes = vec![0u8; 12_500];
        rng.fill_bytes(&mut bytes);
        let s = BitSequence::from_bytes(&bytes, 100_000).unwrap();
        for (i, r) in run_battery(&s, &BatteryConfig::default()).unwrap().iter().enumerate() {
            assert!((0.0..=1.0).contains(&r.p_value));
            names[i] = r.name;
            passes[i] += r.pass as usize;
        }
    }
    for (name, p) in names.iter().zip(passes) {
        assert!(p >= 95, "{name}: {p}/{TRIALS} trials passed");
    }
}
