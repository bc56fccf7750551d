//! Labeled synthetic fuel traces: a clean consumption/refill signal plus a
//! configurable corruption model (white noise, spikes, stuck readings,
//! dropped samples), so the pipeline can be benchmarked without real fleet
//! data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::model::{Trace, TruthEvent};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),
}

/// The labeled truth behind a synthetic trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Noise-free fuel level per sample, non-increasing except at refills.
    pub clean_signal: Vec<f64>,
    /// Refill jump positions and volumes.
    pub refills: Vec<TruthEvent>,
    /// Engine-off index ranges `[start, stop)` with zero slope.
    pub plateaus: Vec<(usize, usize)>,
}

/// Corruption model applied on top of a clean signal.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    /// Gaussian noise per sample, liters.
    pub white_sigma: f64,
    /// Probability per sample of an impulse spike.
    pub spike_prob: f64,
    /// Spike magnitude bound; spikes are drawn two-sided in `[-max, max]`.
    pub spike_max: f64,
    /// Probability that a candidate segment becomes a stuck-at run.
    pub stuck_prob: f64,
    /// Inclusive range of stuck-run lengths in samples.
    pub stuck_len: (usize, usize),
    /// Probability per sample of a dropped (zero) reading.
    pub zero_prob: f64,
    pub seed: u64,
}

impl NoiseProfile {
    /// A profile that leaves the clean signal untouched.
    pub fn noiseless(seed: u64) -> Self {
        NoiseProfile {
            white_sigma: 0.0,
            spike_prob: 0.0,
            spike_max: 0.0,
            stuck_prob: 0.0,
            stuck_len: (20, 80),
            zero_prob: 0.0,
            seed,
        }
    }

    fn assert_valid(&self) {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        assert!(
            p_ok(self.spike_prob) && p_ok(self.stuck_prob) && p_ok(self.zero_prob),
            "probabilities must be in [0, 1]"
        );
        assert!(
            self.white_sigma >= 0.0 && self.spike_max >= 0.0,
            "magnitudes must be non-negative"
        );
        assert!(
            self.stuck_len.0 <= self.stuck_len.1,
            "stuck_len range inverted"
        );
    }
}

/// Where each corruption landed; lets tests score the generator itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorruptionLog {
    pub spikes: Vec<usize>,
    pub stuck: Vec<(usize, usize)>,
    pub zeros: Vec<usize>,
}

const REFILL_VOLUME_MIN: f64 = 8.0;
const REFILL_VOLUME_MAX: f64 = 40.0;
const EDGE_MARGIN: usize = 200;
const MIN_REFILL_GAP: usize = 500;
/// Samples of forced engine-off around each refill (the refuel stop).
const REFILL_PAUSE: usize = 6;
const MIN_LEVEL: f64 = 5.0;
const SLOPE_RANGE: (f64, f64) = (0.0005, 0.005);

/// Generates a clean piecewise-linear consumption signal with `n_refills`
/// upward steps, per-segment slopes, engine-off plateaus covering roughly
/// 20% of samples, and a short forced pause around every refill.
/// Deterministic per seed.
pub fn generate_clean(
    n: usize,
    tank: f64,
    n_refills: usize,
    seed: u64,
) -> Result<GroundTruth, SynthError> {
    if n < 1000 {
        return Err(SynthError::BadRequest(format!(
            "n = {n} is below the 1000-sample minimum"
        )));
    }
    if tank.is_nan() || tank <= 0.0 {
        return Err(SynthError::BadRequest(format!(
            "tank capacity {tank} must be positive"
        )));
    }
    let volume_cap = REFILL_VOLUME_MAX.min(0.8 * tank);
    let start_level = (0.05 * tank + 10.0).min(0.5 * tank);
    if n_refills > 0 {
        if volume_cap < REFILL_VOLUME_MIN {
            return Err(SynthError::InfeasibleSchedule(format!(
                "tank {tank} cannot hold refills of at least {REFILL_VOLUME_MIN} L"
            )));
        }
        if start_level + n_refills as f64 * REFILL_VOLUME_MIN > tank - 0.5 {
            return Err(SynthError::InfeasibleSchedule(format!(
                "{n_refills} refills cannot fit within the {tank} L tank"
            )));
        }
        let usable = n.saturating_sub(2 * EDGE_MARGIN);
        let slot = usable / n_refills.max(1);
        if slot < MIN_REFILL_GAP + 1 {
            return Err(SynthError::InfeasibleSchedule(format!(
                "{n_refills} refills do not fit in {n} samples with {MIN_REFILL_GAP}-sample gaps"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Refill positions: one per equal slot, jittered, gap >= MIN_REFILL_GAP.
    let mut positions = Vec::with_capacity(n_refills);
    if n_refills > 0 {
        let slot = (n - 2 * EDGE_MARGIN) / n_refills.max(1);
        for k in 0..n_refills {
            let jitter = rng.gen_range(0..=(slot - MIN_REFILL_GAP).max(1));
            positions.push(EDGE_MARGIN + k * slot + jitter);
        }
    }

    // One consumption slope per inter-refill segment.
    let n_segments = n_refills + 1;
    let slopes: Vec<f64> = (0..n_segments)
        .map(|_| rng.gen_range(SLOPE_RANGE.0..=SLOPE_RANGE.1))
        .collect();

    // Random engine-off plateaus: start probability tuned for ~20% coverage
    // with lengths in [50, 400].
    const PLATEAU_START_PROB: f64 = 0.00111;
    const PLATEAU_LEN: (usize, usize) = (50, 400);

    let mut clean = Vec::with_capacity(n);
    clean.push(start_level);
    let mut refills = Vec::with_capacity(n_refills);
    let mut plateaus: Vec<(usize, usize)> = Vec::new();
    let mut segment = 0usize;
    let mut next_refill = positions.first().copied();
    let mut plateau_left = 0usize;
    let mut plateau_start = 0usize;
    let mut level = start_level;

    for i in 1..n {
        let near_refill = next_refill
            .map(|r| i + REFILL_PAUSE >= r && i <= r + REFILL_PAUSE)
            .unwrap_or(false)
            || positions
                .get(segment.wrapping_sub(1))
                .map(|&r| i <= r + REFILL_PAUSE)
                .unwrap_or(false);

        if Some(i) == next_refill {
            let remaining = n_refills - refills.len();
            let cap =
                volume_cap.min(tank - 0.5 - level - REFILL_VOLUME_MIN * (remaining as f64 - 1.0));
            let volume = if cap <= REFILL_VOLUME_MIN {
                REFILL_VOLUME_MIN
            } else {
                rng.gen_range(REFILL_VOLUME_MIN..=cap)
            };
            level += volume;
            refills.push(TruthEvent {
                index: i as u64,
                volume,
            });
            segment += 1;
            next_refill = positions.get(segment).copied();
            clean.push(level);
            continue;
        }

        let mut flat = near_refill;
        if plateau_left > 0 {
            plateau_left -= 1;
            flat = true;
            if plateau_left == 0 {
                plateaus.push((plateau_start, i + 1));
            }
        } else if !near_refill && rng.gen::<f64>() < PLATEAU_START_PROB {
            plateau_left = rng.gen_range(PLATEAU_LEN.0..=PLATEAU_LEN.1);
            plateau_start = i;
            flat = true;
        }
        // Never drain the tank dry: park until the next refill instead.
        if level - slopes[segment] < MIN_LEVEL {
            flat = true;
        }
        if !flat {
            level -= slopes[segment];
        }
        clean.push(level);
    }
    if plateau_left > 0 {
        plateaus.push((plateau_start, n));
    }

    Ok(GroundTruth {
        clean_signal: clean,
        refills,
        plateaus,
    })
}

/// Applies the corruption model and returns the noisy trace plus a log of
/// where each corruption landed. Deterministic per `(truth, profile.seed)`.
pub fn corrupt_detailed(truth: &GroundTruth, profile: &NoiseProfile) -> (Trace, CorruptionLog) {
    profile.assert_valid();
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let n = truth.clean_signal.len();
    let mut levels = truth.clean_signal.clone();
    let mut log = CorruptionLog::default();

    if profile.white_sigma > 0.0 {
        let normal = Normal::new(0.0, profile.white_sigma).expect("validated sigma");
        for l in levels.iter_mut() {
            *l += normal.sample(&mut rng);
        }
    }
    if profile.spike_prob > 0.0 && profile.spike_max > 0.0 {
        for (i, l) in levels.iter_mut().enumerate() {
            if rng.gen::<f64>() < profile.spike_prob {
                *l += rng.gen_range(-profile.spike_max..=profile.spike_max);
                log.spikes.push(i);
            }
        }
    }
    if profile.stuck_prob > 0.0 && profile.stuck_len.1 > 0 {
        // The sensor repeats its last good (clean) value for the whole run.
        let block = profile.stuck_len.1;
        let mut block_start = 0;
        while block_start < n {
            if rng.gen::<f64>() < profile.stuck_prob {
                let offset = rng.gen_range(0..block);
                let len = rng.gen_range(profile.stuck_len.0.max(1)..=profile.stuck_len.1);
                let start = (block_start + offset).min(n - 1);
                let stop = (start + len).min(n);
                let frozen = truth.clean_signal[start];
                for l in &mut levels[start..stop] {
                    *l = frozen;
                }
                log.stuck.push((start, stop));
            }
            block_start += block;
        }
    }
    if profile.zero_prob > 0.0 {
        for (i, l) in levels.iter_mut().enumerate() {
            if rng.gen::<f64>() < profile.zero_prob {
                *l = 0.0;
                log.zeros.push(i);
            }
        }
    }

    (
        Trace::from_levels(format!("synthetic-{}", profile.seed), &levels),
        log,
    )
}

/// Applies the corruption model; see [`corrupt_detailed`] for the logged form.
pub fn corrupt(truth: &GroundTruth, profile: &NoiseProfile) -> Trace {
    corrupt_detailed(truth, profile).0
}
