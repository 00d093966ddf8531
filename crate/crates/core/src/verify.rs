//! Identity suites over the ARX primitives, the quarterround parity
//! predictions, and the checkers' false-positive behaviour.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ced::{
    carry_error_census, check_classic, check_gbpp, gbpp, lemma_predictions, predict_outputs_lemma,
    predict_qr_parity, CarryCensus, InputParities, Taps,
};
use crate::error::{Error, Result};
use crate::quarterround::{qr_output_parity, run_raw, MaskTable, Rotations};
use crate::word::{check_width, width_mask, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleMode {
    Exhaustive,
    Random { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub width: u32,
    pub mode: SampleMode,
    pub checks: Vec<IdentityCheck>,
    /// Only for widths where the census is enumerable.
    pub carry_census: Option<CarryCensus>,
    pub passed: bool,
}

impl IdentityReport {
    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Names of the per-trace quarterround identities, in report order.
pub const QR_IDENTITIES: [&str; 9] = [
    "lemma1_a_out",
    "lemma2_b_out",
    "lemma2_c_out",
    "lemma2_d_out",
    "theorem_output_parity",
    "code_disjoint_identity",
    "self_consistency",
    "classic_no_false_positive",
    "gbpp_no_false_positive",
];

const CHUNK: u64 = 4096;

/// Counts violations of `N` predicates over a sample space, in parallel.
fn count_violations<const N: usize>(
    total: u64,
    seed: Option<u64>,
    case: impl Fn(u64, Option<&mut ChaCha8Rng>) -> [bool; N] + Sync,
) -> [u64; N] {
    (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = seed.map(|s| {
                let mut r = ChaCha8Rng::seed_from_u64(s);
                r.set_stream(chunk);
                r
            });
            let mut counts = [0u64; N];
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                let failed = case(i, rng.as_mut());
                for (c, f) in counts.iter_mut().zip(failed) {
                    *c += u64::from(f);
                }
            }
            counts
        })
        .reduce(
            || [0; N],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Checks every quarterround identity on one fault-free execution.
pub fn qr_identity_violations(width: u32, inputs: [u64; 4], rot: Rotations) -> [bool; 9] {
    let t = run_raw(width, inputs, rot, &MaskTable::default());
    let observed = t.outputs().map(Word::parity);
    let lemma = predict_outputs_lemma(&t);
    let [pa, pb, pc, pd] = t.inputs().map(Word::parity);
    let block_parity = pa ^ pb ^ pc ^ pd;
    let ip = InputParities::local(&t);
    [
        lemma[0] != observed[0],
        lemma[1] != observed[1],
        lemma[2] != observed[2],
        lemma[3] != observed[3],
        predict_qr_parity(&t) != qr_output_parity(&t),
        (block_parity ^ predict_qr_parity(&t)) != (pa ^ pd ^ t.beta),
        t.recompute() != t,
        check_classic(&t, &ip).detected,
        check_gbpp(&t, &ip).detected,
    ]
}

fn adder_identity_violations(width: u32, a: u64, b: u64) -> [bool; 3] {
    let (x, y) = (Word::from_raw(a, width), Word::from_raw(b, width));
    let r = x.add_traced(y).expect("equal widths");
    let wide = ((a as u128 + b as u128) & width_mask(width) as u128) as u64;
    [
        Word::from_raw(wide, width).parity() != x.parity() ^ y.parity() ^ r.carry_parity,
        r.carry_vector.bit(0),
        r.sum.bits() != wide,
    ]
}

fn xor_rotl_violations(width: u32, a: u64, b: u64) -> [bool; 2] {
    let (x, y) = (Word::from_raw(a, width), Word::from_raw(b, width));
    let xor_bad = x.xor(y).expect("equal widths").parity() != x.parity() ^ y.parity();
    let rot_bad = (0..width).any(|r| x.rotl(r).parity() != x.parity());
    [xor_bad, rot_bad]
}

/// Runs every identity suite at the given width.
///
/// Exhaustive mode enumerates all operand pairs (`w <= 8`) and all
/// quarterround inputs (`w <= 6`).
pub fn verify_identities(width: u32, mode: SampleMode) -> Result<IdentityReport> {
    check_width(width)?;
    let m = width_mask(width);
    let random_pair = |rng: &mut ChaCha8Rng| (rng.gen::<u64>() & m, rng.gen::<u64>() & m);
    let mut checks = Vec::new();

    let (pair_total, pair_seed) = match mode {
        SampleMode::Exhaustive if width <= 8 => (1u64 << (2 * width), None),
        SampleMode::Exhaustive => {
            return Err(Error::InvalidPolicy(format!(
                "exhaustive identity check needs width <= 8, got {width}"
            )))
        }
        SampleMode::Random { samples, seed } => (samples, Some(seed)),
    };
    let split = |i: u64| ((i >> width) & m, i & m);
    let adder = count_violations(pair_total, pair_seed, |i, rng| {
        let (a, b) = rng.map_or_else(|| split(i), random_pair);
        adder_identity_violations(width, a, b)
    });
    let xr = count_violations(pair_total, pair_seed.map(|s| s ^ 1), |i, rng| {
        let (a, b) = rng.map_or_else(|| split(i), random_pair);
        xor_rotl_violations(width, a, b)
    });
    for (name, v) in [
        ("adder_parity", adder[0]),
        ("carry_bit0_zero", adder[1]),
        ("adder_sum_oracle", adder[2]),
        ("xor_parity", xr[0]),
        ("rotl_parity", xr[1]),
    ] {
        checks.push(IdentityCheck {
            name,
            cases: pair_total,
            violations: v,
        });
    }

    let (qr_total, qr_seed) = match mode {
        SampleMode::Exhaustive if width <= 6 => (1u64 << (4 * width), None),
        SampleMode::Exhaustive => {
            return Err(Error::InvalidPolicy(format!(
                "exhaustive quarterround enumeration needs width <= 6, got {width}"
            )))
        }
        SampleMode::Random { samples, seed } => (samples, Some(seed ^ 2)),
    };
    let rot = Rotations::default_for(width);
    let qr = count_violations(qr_total, qr_seed, |i, rng| {
        let inputs = match rng {
            Some(rng) => [0; 4].map(|_: u64| rng.gen::<u64>() & m),
            None => [
                (i >> (3 * width)) & m,
                (i >> (2 * width)) & m,
                (i >> width) & m,
                i & m,
            ],
        };
        qr_identity_violations(width, inputs, rot)
    });
    for (name, v) in QR_IDENTITIES.into_iter().zip(qr) {
        checks.push(IdentityCheck {
            name,
            cases: qr_total,
            violations: v,
        });
    }

    let gbpp_bad = (0..256u32)
        .filter(|n| {
            let bit = |i: u32| (n >> i) & 1 == 1;
            let p = [bit(0), bit(1), bit(2), bit(3)];
            let taps = Taps {
                alpha: bit(4),
                beta: bit(5),
                gamma: bit(6),
                delta: bit(7),
            };
            gbpp(p, taps) != lemma_predictions(p, taps)
        })
        .count() as u64;
    checks.push(IdentityCheck {
        name: "gbpp_equals_lemmas",
        cases: 256,
        violations: gbpp_bad,
    });

    let carry_census = if width <= 6 {
        Some(carry_error_census(width)?)
    } else {
        None
    };
    let passed = checks.iter().all(|c| c.violations == 0)
        && carry_census.is_none_or(|c| c.parity_violations == 0);
    Ok(IdentityReport {
        width,
        mode,
        checks,
        carry_census,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_w2_and_w3_pass() {
        for w in [2, 3] {
            let r = verify_identities(w, SampleMode::Exhaustive).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(
                r.check("theorem_output_parity").unwrap().cases,
                1 << (4 * w)
            );
        }
    }

    #[test]
    fn random_w32_small_sample() {
        let r = verify_identities(
            32,
            SampleMode::Random {
                samples: 5000,
                seed: 9,
            },
        )
        .unwrap();
        assert!(r.passed);
        assert!(r.carry_census.is_none());
        assert_eq!(r.check("gbpp_equals_lemmas").unwrap().cases, 256);
    }

    #[test]
    fn exhaustive_rejects_large_widths() {
        assert!(verify_identities(16, SampleMode::Exhaustive).is_err());
        assert!(verify_identities(7, SampleMode::Exhaustive).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let mode = SampleMode::Random {
            samples: 3000,
            seed: 4,
        };
        assert_eq!(
            verify_identities(16, mode).unwrap(),
            verify_identities(16, mode).unwrap()
        );
    }
}
