//! Fault model and injection campaigns.
//!
//! An error is an XOR mask on one named wire of the quarterround. A campaign
//! sweeps inputs, signals and masks, injects exactly one fault per trial,
//! runs a checker, and tallies detections per signal. Reports can then be
//! classified against the expected coverage of each scheme.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ced::{check, detects, InputParities, ParitySource, Scheme};
use crate::error::{Error, Result};
use crate::quarterround::{run_raw, Rotations};
use crate::signal::{SignalId, SignalKind};
use crate::word::{width_mask, Word};

/// One injection: XOR `mask` onto `signal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaultSpec {
    pub signal: SignalId,
    pub mask: u128,
}

fn signal_mask_bits(signal: SignalId, width: u32) -> Result<u32> {
    let bits = signal.mask_bits(width);
    if bits > 128 {
        return Err(Error::InvalidPolicy(format!(
            "{signal} spans {bits} bits; block faults need width <= 32"
        )));
    }
    Ok(bits)
}

fn mask_limit(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

impl FaultSpec {
    /// A nonzero mask that fits the signal.
    pub fn new(signal: SignalId, mask: u128, width: u32) -> Result<FaultSpec> {
        let fault = FaultSpec { signal, mask };
        fault.validate(width)?;
        if mask == 0 {
            return Err(Error::InvalidMask {
                signal,
                mask,
                bits: signal.mask_bits(width),
            });
        }
        Ok(fault)
    }

    /// Checks that the mask fits the signal. A zero mask is accepted as a no-op.
    pub fn validate(&self, width: u32) -> Result<()> {
        let bits = signal_mask_bits(self.signal, width)?;
        if self.mask & !mask_limit(bits) != 0 {
            return Err(Error::InvalidMask {
                signal: self.signal,
                mask: self.mask,
                bits,
            });
        }
        Ok(())
    }

    pub fn weight(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_odd(&self) -> bool {
        self.weight() & 1 == 1
    }

    /// Parses `SIGNAL:MASK`, the mask in hex.
    pub fn parse(text: &str, width: u32) -> Result<FaultSpec> {
        let (signal, mask) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("fault `{text}` is not SIGNAL:MASK")))?;
        let digits = mask
            .trim()
            .trim_start_matches("0x")
            .trim_start_matches("0X");
        let mask = u128::from_str_radix(digits, 16)
            .map_err(|_| Error::Parse(format!("invalid fault mask `{mask}`")))?;
        FaultSpec::new(signal.parse()?, mask, width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// Every odd-weight mask of the signal.
    AllOddExhaustive,
    /// One uniformly drawn odd-weight mask per input and signal.
    OddRandom,
    /// Every single-bit mask.
    SingleBit,
    /// One uniformly drawn nonzero even-weight mask per input and signal.
    EvenRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputPolicy {
    Exhaustive,
    Random { samples: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub width: u32,
    pub scheme: Scheme,
    pub signals: Vec<SignalId>,
    pub error_policy: ErrorPolicy,
    pub input_policy: InputPolicy,
    /// Seeds random inputs and random masks.
    pub seed: u64,
    pub rotations: Rotations,
    /// Where the word parities fed to the group predictor come from.
    /// The block parity of the classic check is always supplied upstream.
    pub word_parities: ParitySource,
}

impl CampaignConfig {
    pub fn new(
        width: u32,
        scheme: Scheme,
        signals: Vec<SignalId>,
        error_policy: ErrorPolicy,
        input_policy: InputPolicy,
    ) -> CampaignConfig {
        CampaignConfig {
            width,
            scheme,
            signals,
            error_policy,
            input_policy,
            seed: 0,
            rotations: Rotations::default_for(width),
            word_parities: ParitySource::ComputedLocal,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> CampaignConfig {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.width < 4 || self.width > 64 {
            return Err(Error::InvalidPolicy(format!(
                "campaign width {} outside 4..=64",
                self.width
            )));
        }
        if self.signals.is_empty() {
            return Err(Error::EmptySignalSet);
        }
        for (i, s) in self.signals.iter().enumerate() {
            if self.signals[..i].contains(s) {
                return Err(Error::InvalidPolicy(format!("signal {s} listed twice")));
            }
            signal_mask_bits(*s, self.width)?;
        }
        if self.input_policy == InputPolicy::Exhaustive && self.width > 8 {
            return Err(Error::InvalidPolicy(format!(
                "exhaustive inputs need width <= 8, got {}",
                self.width
            )));
        }
        if let InputPolicy::Random { samples: 0 } = self.input_policy {
            return Err(Error::InvalidPolicy(
                "random input policy needs samples > 0".into(),
            ));
        }
        if self.error_policy == ErrorPolicy::AllOddExhaustive && self.width > 8 {
            return Err(Error::InvalidPolicy(format!(
                "exhaustive odd masks need width <= 8, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

/// Coverage the checker is expected to achieve on a signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Every odd-weight error is detected.
    Covered,
    /// Some odd-weight errors escape.
    Uncovered,
    NoClaim,
}

/// Expected odd-weight coverage per scheme and signal.
pub fn expectation(scheme: Scheme, signal: SignalId) -> Expectation {
    use SignalId::*;
    match scheme {
        Scheme::Classic => match signal {
            InputBlock | B0 | C0 | B1 | B2 | D2 | BOut | DOut => Expectation::Covered,
            A0 | D0 | D1 | AOut | COut => Expectation::Uncovered,
            _ => Expectation::NoClaim,
        },
        Scheme::Gbpp => match signal {
            A0 | B0 | C0 | D0 | B1 | B2 | D1 | D2 => Expectation::Covered,
            Alpha | Beta | Gamma | Delta => Expectation::Covered,
            AOut | BOut | COut | DOut => Expectation::Covered,
            _ => Expectation::NoClaim,
        },
    }
}

/// An undetected injection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub inputs: [Word; 4],
    pub signal: SignalId,
    /// Hex mask, padded to the signal's width.
    pub mask: String,
}

impl Witness {
    fn new(width: u32, inputs: [u64; 4], fault: FaultSpec) -> Witness {
        let digits = fault.signal.mask_bits(width).div_ceil(4) as usize;
        Witness {
            inputs: inputs.map(|x| Word::from_raw(x, width)),
            signal: fault.signal,
            mask: format!("0x{:0digits$x}", fault.mask),
        }
    }

    pub fn mask_value(&self) -> u128 {
        u128::from_str_radix(self.mask.trim_start_matches("0x"), 16).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub signal: SignalId,
    pub expected: Expectation,
    pub trials: u64,
    pub injected_odd: u64,
    pub detected_odd: u64,
    pub injected_even: u64,
    pub detected_even: u64,
    /// `None` when no odd-weight error was injected.
    pub detection_rate_odd: Option<f64>,
    pub detection_rate_even: Option<f64>,
    /// First undetected odd-weight injection in scan order.
    pub first_odd_miss: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scheme: Scheme,
    pub config: CampaignConfig,
    pub total_trials: u64,
    pub rows: Vec<SignalRow>,
}

impl CoverageReport {
    pub fn row(&self, signal: SignalId) -> Option<&SignalRow> {
        self.rows.iter().find(|r| r.signal == signal)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-signal table as CSV.
    pub fn to_csv(&self) -> String {
        let rate = |r: Option<f64>| r.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from(
            "signal,expected,trials,injected_odd,detected_odd,detection_rate_odd,injected_even,detected_even,detection_rate_even\n",
        );
        for row in &self.rows {
            let expected = match row.expected {
                Expectation::Covered => "covered",
                Expectation::Uncovered => "uncovered",
                Expectation::NoClaim => "no_claim",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.signal,
                expected,
                row.trials,
                row.injected_odd,
                row.detected_odd,
                rate(row.detection_rate_odd),
                row.injected_even,
                row.detected_even,
                rate(row.detection_rate_even),
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    injected_odd: u64,
    detected_odd: u64,
    injected_even: u64,
    detected_even: u64,
    /// (trial key, inputs, mask) of the earliest odd miss.
    first_miss: Option<(u128, [u64; 4], u128)>,
}

impl Tally {
    fn merge(mut self, other: &Tally) -> Tally {
        self.injected_odd += other.injected_odd;
        self.detected_odd += other.detected_odd;
        self.injected_even += other.injected_even;
        self.detected_even += other.detected_even;
        self.first_miss = match (self.first_miss, other.first_miss) {
            (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
            (x, y) => x.or(y),
        };
        self
    }
}

type Tallies = Vec<Tally>;

fn merge_tallies(mut left: Tallies, right: Tallies) -> Tallies {
    for (l, r) in left.iter_mut().zip(&right) {
        *l = l.merge(r);
    }
    left
}

const CHUNK: u64 = 1024;

/// Draws a uniform odd-weight (or nonzero even-weight) mask of `bits` bits.
fn random_mask(rng: &mut ChaCha8Rng, bits: u32, odd: bool) -> u128 {
    let limit = mask_limit(bits);
    loop {
        let mut mask = rng.gen::<u128>() & limit;
        if (mask.count_ones() & 1 == 1) != odd {
            mask ^= 1;
        }
        if mask != 0 {
            return mask;
        }
    }
}

fn odd_masks(bits: u32) -> Vec<u128> {
    (1..=mask_limit(bits))
        .filter(|m| m.count_ones() & 1 == 1)
        .collect()
}

struct Engine<'a> {
    config: &'a CampaignConfig,
    /// Pre-enumerated masks per signal for deterministic error policies.
    fixed_masks: Vec<Vec<u128>>,
    rotations: Rotations,
}

impl Engine<'_> {
    #[inline]
    fn trial(
        &self,
        inputs: [u64; 4],
        honest: &InputParities,
        fault: FaultSpec,
        odd: bool,
        key: u128,
        tally: &mut Tally,
    ) {
        let cfg = self.config;
        let trace = run_raw(cfg.width, inputs, self.rotations, &fault);
        // only faults on the input wires change what the datapath sees, and
        // only the group check reads per-word parities
        let ip = if cfg.scheme == Scheme::Gbpp
            && cfg.word_parities == ParitySource::ComputedLocal
            && fault.signal.is_input()
        {
            InputParities {
                p_block: honest.p_block,
                ..InputParities::local(&trace)
            }
        } else {
            *honest
        };
        let detected = detects(cfg.scheme, &trace, &ip);
        if odd {
            tally.injected_odd += 1;
            if detected {
                tally.detected_odd += 1;
            } else if tally.first_miss.is_none_or(|(k, _, _)| key < k) {
                tally.first_miss = Some((key, inputs, fault.mask));
            }
        } else {
            tally.injected_even += 1;
            if detected {
                tally.detected_even += 1;
            }
        }
    }

    /// Runs every fault of the policy on one input tuple.
    fn input(
        &self,
        index: u64,
        inputs: [u64; 4],
        rng: Option<&mut ChaCha8Rng>,
        tallies: &mut Tallies,
    ) {
        let cfg = self.config;
        let honest = InputParities::from_raw_upstream(inputs);
        let mut rng = rng;
        for (slot, &signal) in cfg.signals.iter().enumerate() {
            let tally = &mut tallies[slot];
            match cfg.error_policy {
                ErrorPolicy::AllOddExhaustive | ErrorPolicy::SingleBit => {
                    for (j, &mask) in self.fixed_masks[slot].iter().enumerate() {
                        let key = ((index as u128) << 64) | j as u128;
                        self.trial(
                            inputs,
                            &honest,
                            FaultSpec { signal, mask },
                            true,
                            key,
                            tally,
                        );
                    }
                }
                ErrorPolicy::OddRandom | ErrorPolicy::EvenRandom => {
                    let odd = cfg.error_policy == ErrorPolicy::OddRandom;
                    if !odd && signal.kind() == SignalKind::Tap {
                        // no nonzero even-weight 1-bit mask exists
                        continue;
                    }
                    let rng = rng.as_deref_mut().expect("random policies carry an rng");
                    let mask = random_mask(rng, signal.mask_bits(cfg.width), odd);
                    self.trial(
                        inputs,
                        &honest,
                        FaultSpec { signal, mask },
                        odd,
                        (index as u128) << 64,
                        tally,
                    );
                }
            }
        }
    }

    fn chunk(&self, chunk: u64) -> Tallies {
        let cfg = self.config;
        let w = cfg.width;
        let m = width_mask(w);
        let mut tallies = vec![Tally::default(); cfg.signals.len()];
        match cfg.input_policy {
            InputPolicy::Exhaustive => {
                let total = 1u64 << (4 * w);
                let start = chunk * CHUNK;
                let end = (start + CHUNK).min(total);
                let mut rng = self.chunk_rng(chunk);
                for index in start..end {
                    let inputs = [
                        (index >> (3 * w)) & m,
                        (index >> (2 * w)) & m,
                        (index >> w) & m,
                        index & m,
                    ];
                    self.input(index, inputs, rng.as_mut(), &mut tallies);
                }
            }
            InputPolicy::Random { samples } => {
                let start = chunk * CHUNK;
                let end = (start + CHUNK).min(samples);
                let mut rng = self.chunk_rng(chunk).expect("random inputs need an rng");
                for index in start..end {
                    let inputs = [0; 4].map(|_: u64| rng.gen::<u64>() & m);
                    self.input(index, inputs, Some(&mut rng), &mut tallies);
                }
            }
        }
        tallies
    }

    /// Each chunk owns an independent stream so results do not depend on scheduling.
    fn chunk_rng(&self, chunk: u64) -> Option<ChaCha8Rng> {
        let random_errors = matches!(
            self.config.error_policy,
            ErrorPolicy::OddRandom | ErrorPolicy::EvenRandom
        );
        let random_inputs = matches!(self.config.input_policy, InputPolicy::Random { .. });
        (random_errors || random_inputs).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(chunk);
            rng
        })
    }

    fn chunk_count(&self) -> u64 {
        let n = match self.config.input_policy {
            InputPolicy::Exhaustive => 1u64 << (4 * self.config.width),
            InputPolicy::Random { samples } => samples,
        };
        n.div_ceil(CHUNK)
    }
}

/// Runs a single-fault injection campaign on the current rayon pool.
pub fn run_campaign(config: &CampaignConfig) -> Result<CoverageReport> {
    config.validate()?;
    let fixed_masks = config
        .signals
        .iter()
        .map(|&s| {
            let bits = s.mask_bits(config.width);
            match config.error_policy {
                ErrorPolicy::AllOddExhaustive => odd_masks(bits),
                ErrorPolicy::SingleBit => (0..bits).map(|i| 1u128 << i).collect(),
                ErrorPolicy::OddRandom | ErrorPolicy::EvenRandom => Vec::new(),
            }
        })
        .collect();
    let engine = Engine {
        config,
        fixed_masks,
        rotations: config.rotations.reduced(config.width),
    };
    let empty = || vec![Tally::default(); config.signals.len()];
    let tallies = (0..engine.chunk_count())
        .into_par_iter()
        .map(|chunk| engine.chunk(chunk))
        .reduce(empty, merge_tallies);

    let rate = |hit: u64, n: u64| (n > 0).then(|| hit as f64 / n as f64);
    let rows: Vec<SignalRow> = config
        .signals
        .iter()
        .zip(&tallies)
        .map(|(&signal, t)| SignalRow {
            signal,
            expected: expectation(config.scheme, signal),
            trials: t.injected_odd + t.injected_even,
            injected_odd: t.injected_odd,
            detected_odd: t.detected_odd,
            injected_even: t.injected_even,
            detected_even: t.detected_even,
            detection_rate_odd: rate(t.detected_odd, t.injected_odd),
            detection_rate_even: rate(t.detected_even, t.injected_even),
            first_odd_miss: t.first_miss.map(|(_, inputs, mask)| {
                Witness::new(config.width, inputs, FaultSpec { signal, mask })
            }),
        })
        .collect();
    Ok(CoverageReport {
        scheme: config.scheme,
        config: config.clone(),
        total_trials: rows.iter().map(|r| r.trials).sum(),
        rows,
    })
}

/// Runs a campaign on a dedicated pool of `jobs` threads.
pub fn run_campaign_with_jobs(config: &CampaignConfig, jobs: usize) -> Result<CoverageReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidPolicy(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_campaign(config))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowJudgement {
    pub signal: SignalId,
    pub expected: Expectation,
    pub detection_rate_odd: Option<f64>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub scheme: Scheme,
    pub pass: bool,
    pub rows: Vec<RowJudgement>,
}

/// Compares a report with the expected coverage table of its scheme.
///
/// Covered signals must reach an odd-weight detection rate of exactly 1.0;
/// uncovered signals must fall short of it.
pub fn classify_report(report: &CoverageReport) -> Result<Classification> {
    let claimed: Vec<SignalId> = SignalId::ALL
        .into_iter()
        .filter(|&s| expectation(report.scheme, s) != Expectation::NoClaim)
        .collect();
    let missing: Vec<SignalId> = claimed
        .iter()
        .copied()
        .filter(|&s| {
            report
                .row(s)
                .is_none_or(|row| row.detection_rate_odd.is_none())
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingRows(missing));
    }
    let rows: Vec<RowJudgement> = claimed
        .into_iter()
        .map(|signal| {
            let row = report.row(signal).expect("checked above");
            let expected = expectation(report.scheme, signal);
            let rate = row.detection_rate_odd;
            let ok = match expected {
                Expectation::Covered => row.detected_odd == row.injected_odd,
                Expectation::Uncovered => row.detected_odd < row.injected_odd,
                Expectation::NoClaim => true,
            };
            RowJudgement {
                signal,
                expected,
                detection_rate_odd: rate,
                ok,
            }
        })
        .collect();
    Ok(Classification {
        scheme: report.scheme,
        pass: rows.iter().all(|r| r.ok),
        rows,
    })
}

/// First undetected odd-weight error on `signal`, scanning inputs in
/// ascending order and masks in ascending order per input.
pub fn find_counterexample(
    width: u32,
    scheme: Scheme,
    signal: SignalId,
) -> Result<Option<Witness>> {
    if !(2..=8).contains(&width) {
        return Err(Error::InvalidPolicy(format!(
            "exhaustive witness search needs width <= 8, got {width}"
        )));
    }
    let rotations = Rotations::default_for(width);
    let m = width_mask(width);
    let masks = odd_masks(signal_mask_bits(signal, width)?);
    for index in 0..(1u64 << (4 * width)) {
        let inputs = [
            (index >> (3 * width)) & m,
            (index >> (2 * width)) & m,
            (index >> width) & m,
            index & m,
        ];
        let honest = InputParities::from_raw_upstream(inputs);
        for &mask in &masks {
            let trace = run_raw(width, inputs, rotations, &FaultSpec { signal, mask });
            let ip = InputParities {
                p_block: honest.p_block,
                ..InputParities::local(&trace)
            };
            if !check(scheme, &trace, &ip).detected {
                return Ok(Some(Witness::new(
                    width,
                    inputs,
                    FaultSpec { signal, mask },
                )));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(signal: SignalId, scheme: Scheme, injected: u64, detected: u64) -> SignalRow {
        SignalRow {
            signal,
            expected: expectation(scheme, signal),
            trials: injected,
            injected_odd: injected,
            detected_odd: detected,
            injected_even: 0,
            detected_even: 0,
            detection_rate_odd: Some(detected as f64 / injected as f64),
            detection_rate_even: None,
            first_odd_miss: None,
        }
    }

    fn synthetic(scheme: Scheme, rate_of: impl Fn(SignalId) -> u64) -> CoverageReport {
        let config = CampaignConfig::new(
            4,
            scheme,
            SignalId::ALL.to_vec(),
            ErrorPolicy::AllOddExhaustive,
            InputPolicy::Exhaustive,
        );
        CoverageReport {
            scheme,
            config,
            total_trials: 0,
            rows: SignalId::ALL
                .iter()
                .map(|&s| row(s, scheme, 100, rate_of(s)))
                .collect(),
        }
    }

    fn paper_classic(s: SignalId) -> u64 {
        match expectation(Scheme::Classic, s) {
            Expectation::Uncovered => 0,
            _ => 100,
        }
    }

    #[test]
    fn fault_spec_validation() {
        assert!(FaultSpec::new(SignalId::B0, 0, 4).is_err());
        assert!(FaultSpec::new(SignalId::B0, 0x10, 4).is_err());
        assert!(FaultSpec::new(SignalId::Beta, 2, 32).is_err());
        assert!(FaultSpec::new(SignalId::InputBlock, 0xFFFF, 4).is_ok());
        assert!(FaultSpec::new(SignalId::InputBlock, 1, 64).is_err());
        let f = FaultSpec::parse("c0:0x7", 8).unwrap();
        assert_eq!(
            (f.signal, f.mask, f.weight(), f.is_odd()),
            (SignalId::C0, 7, 3, true)
        );
        assert!(FaultSpec::parse("C0", 8).is_err());
    }

    #[test]
    fn random_masks_have_requested_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for bits in [1, 4, 32, 128] {
            for _ in 0..200 {
                let odd = random_mask(&mut rng, bits, true);
                assert_eq!(odd.count_ones() % 2, 1);
                assert!(odd <= mask_limit(bits));
                if bits > 1 {
                    let even = random_mask(&mut rng, bits, false);
                    assert!(even != 0 && even.count_ones().is_multiple_of(2));
                }
            }
        }
        assert_eq!(odd_masks(4), vec![1, 2, 4, 7, 8, 11, 13, 14]);
    }

    #[test]
    fn classify_paper_tables() {
        let gbpp = synthetic(Scheme::Gbpp, |_| 100);
        assert!(classify_report(&gbpp).unwrap().pass);

        let classic = synthetic(Scheme::Classic, paper_classic);
        assert!(classify_report(&classic).unwrap().pass);

        let a0_caught = synthetic(Scheme::Classic, |s| {
            if s == SignalId::A0 {
                100
            } else {
                paper_classic(s)
            }
        });
        assert!(!classify_report(&a0_caught).unwrap().pass);

        let b0_partial = synthetic(Scheme::Classic, |s| {
            if s == SignalId::B0 {
                97
            } else {
                paper_classic(s)
            }
        });
        let verdict = classify_report(&b0_partial).unwrap();
        assert!(!verdict.pass);
        assert!(
            !verdict
                .rows
                .iter()
                .find(|r| r.signal == SignalId::B0)
                .unwrap()
                .ok
        );
    }

    #[test]
    fn classify_reports_missing_rows() {
        let mut report = synthetic(Scheme::Gbpp, |_| 100);
        report.rows.retain(|r| r.signal != SignalId::Delta);
        match classify_report(&report) {
            Err(Error::MissingRows(m)) => assert_eq!(m, vec![SignalId::Delta]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mk = |signals: Vec<SignalId>, errors, inputs| {
            run_campaign(&CampaignConfig::new(
                4,
                Scheme::Gbpp,
                signals,
                errors,
                inputs,
            ))
        };
        assert!(matches!(
            mk(vec![], ErrorPolicy::SingleBit, InputPolicy::Exhaustive),
            Err(Error::EmptySignalSet)
        ));
        let wide = CampaignConfig::new(
            32,
            Scheme::Gbpp,
            vec![SignalId::A0],
            ErrorPolicy::AllOddExhaustive,
            InputPolicy::Random { samples: 10 },
        );
        assert!(matches!(run_campaign(&wide), Err(Error::InvalidPolicy(_))));
        assert!(mk(
            vec![SignalId::A0],
            ErrorPolicy::OddRandom,
            InputPolicy::Random { samples: 0 }
        )
        .is_err());
        assert!(mk(
            vec![SignalId::A0, SignalId::A0],
            ErrorPolicy::SingleBit,
            InputPolicy::Exhaustive
        )
        .is_err());
    }

    #[test]
    fn single_bit_campaign_counts() {
        let config = CampaignConfig::new(
            4,
            Scheme::Gbpp,
            vec![SignalId::B1, SignalId::Delta],
            ErrorPolicy::SingleBit,
            InputPolicy::Exhaustive,
        );
        let report = run_campaign(&config).unwrap();
        assert_eq!(report.row(SignalId::B1).unwrap().injected_odd, 65_536 * 4);
        assert_eq!(report.row(SignalId::Delta).unwrap().injected_odd, 65_536);
        assert!(report
            .rows
            .iter()
            .all(|r| r.detection_rate_odd == Some(1.0)));
        assert_eq!(report.total_trials, 65_536 * 5);
    }

    #[test]
    fn even_random_skips_taps_and_misses_some() {
        let config = CampaignConfig::new(
            8,
            Scheme::Classic,
            vec![SignalId::B0, SignalId::Beta],
            ErrorPolicy::EvenRandom,
            InputPolicy::Random { samples: 2000 },
        )
        .with_seed(3);
        let report = run_campaign(&config).unwrap();
        let b0 = report.row(SignalId::B0).unwrap();
        assert_eq!(b0.injected_even, 2000);
        assert!(b0.detection_rate_even.unwrap() < 1.0);
        assert_eq!(report.row(SignalId::Beta).unwrap().trials, 0);
    }

    #[test]
    fn counterexamples() {
        let w = find_counterexample(4, Scheme::Classic, SignalId::A0)
            .unwrap()
            .unwrap();
        assert_eq!(w.signal, SignalId::A0);
        assert_eq!(w.mask_value().count_ones() % 2, 1);
        assert!(find_counterexample(4, Scheme::Classic, SignalId::B0)
            .unwrap()
            .is_none());
        assert!(find_counterexample(16, Scheme::Classic, SignalId::B0).is_err());
    }

    #[test]
    fn csv_has_one_line_per_signal() {
        let report = synthetic(Scheme::Gbpp, |_| 100);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 22);
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("A,no_claim,100,100,100,1.000000"));
    }
}
