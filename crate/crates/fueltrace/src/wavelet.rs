//! Discrete wavelet denoising: forward/inverse transform, shrinkage
//! thresholding, and cross-correlation shift alignment.
//!
//! The transform uses the 8-tap Daubechies-4 filter pair with periodized
//! convolution per level. Odd-length inputs at any level get a one-sample
//! symmetric extension (the last sample is mirrored) before filtering; the
//! pre-extension length of every level is stored so reconstruction truncates
//! back exactly. Coefficient counts therefore halve (ceiling) per level and
//! a round trip through an unmodified decomposition is exact to rounding.

use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

use crate::model::PipelineConfig;

/// Daubechies-4 low-pass decomposition filter (4 vanishing moments, 8 taps).
#[allow(clippy::excessive_precision)]
const DB4_LO: [f64; 8] = [
    -0.010597401784997278,
    0.032883011666982945,
    0.030841381835986965,
    -0.187034811718881060,
    -0.027983769416983849,
    0.630880767929590380,
    0.714846570552541600,
    0.230377813308855140,
];

/// High-pass filter from the quadrature-mirror relation g[n] = (-1)^n h[L-1-n].
fn db4_hi() -> [f64; 8] {
    let mut g = [0.0; 8];
    for (n, slot) in g.iter_mut().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *slot = sign * DB4_LO[DB4_LO.len() - 1 - n];
    }
    g
}

#[derive(Debug, Error, PartialEq)]
pub enum WaveletError {
    #[error("signal too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error("levels must be >= 1, got {0}")]
    BadLevels(usize),
    #[error("decomposition shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("decomposition has no detail coefficients")]
    EmptyDetails,
}

/// Multi-level wavelet decomposition. `details[0]` is the finest scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub levels: usize,
    pub original_length: usize,
    /// Input length at each analysis level, before odd-length extension.
    level_lengths: Vec<usize>,
}

/// One analysis level: symmetric-extend to even length, then periodized
/// correlation with both filters, downsampled by two.
fn analysis_step(input: &[f64], lo: &[f64; 8], hi: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let mut x: Vec<f64> = input.to_vec();
    if x.len() % 2 == 1 {
        x.push(*x.last().expect("analysis input is non-empty"));
    }
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for j in 0..8 {
            let v = x[(2 * k + j) % n];
            a += lo[j] * v;
            d += hi[j] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// One synthesis level: the exact adjoint of [`analysis_step`], truncated back
/// to the recorded pre-extension length.
fn synthesis_step(
    approx: &[f64],
    detail: &[f64],
    target_len: usize,
    lo: &[f64; 8],
    hi: &[f64; 8],
) -> Vec<f64> {
    let half = approx.len();
    let n = half * 2;
    let mut out = vec![0.0; n];
    for k in 0..half {
        let a = approx[k];
        let d = detail[k];
        for j in 0..8 {
            out[(2 * k + j) % n] += lo[j] * a + hi[j] * d;
        }
    }
    out.truncate(target_len);
    out
}

/// Multi-level forward transform.
pub fn dwt(values: &[f64], levels: usize) -> Result<WaveletDecomposition, WaveletError> {
    if levels < 1 {
        return Err(WaveletError::BadLevels(levels));
    }
    let need = 1usize << levels;
    if values.len() < need {
        return Err(WaveletError::TooShort {
            got: values.len(),
            need,
        });
    }
    let lo = &DB4_LO;
    let hi = db4_hi();
    let mut cur = values.to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut level_lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        level_lengths.push(cur.len());
        let (a, d) = analysis_step(&cur, lo, &hi);
        details.push(d);
        cur = a;
    }
    Ok(WaveletDecomposition {
        approx: cur,
        details,
        levels,
        original_length: values.len(),
        level_lengths,
    })
}

/// Inverse transform; reconstructs exactly `original_length` samples.
pub fn idwt(decomp: &WaveletDecomposition) -> Result<Vec<f64>, WaveletError> {
    if decomp.details.len() != decomp.levels || decomp.level_lengths.len() != decomp.levels {
        return Err(WaveletError::ShapeMismatch(format!(
            "expected {} detail levels, found {}",
            decomp.levels,
            decomp.details.len()
        )));
    }
    if decomp.levels == 0 {
        return Err(WaveletError::BadLevels(0));
    }
    let lo = &DB4_LO;
    let hi = db4_hi();
    let mut cur = decomp.approx.clone();
    for level in (0..decomp.levels).rev() {
        let detail = &decomp.details[level];
        if detail.len() != cur.len() {
            return Err(WaveletError::ShapeMismatch(format!(
                "level {} has {} detail coefficients for {} approximations",
                level,
                detail.len(),
                cur.len()
            )));
        }
        let target = decomp.level_lengths[level];
        cur = synthesis_step(&cur, detail, target, lo, &hi);
    }
    if cur.len() != decomp.original_length {
        return Err(WaveletError::ShapeMismatch(format!(
            "reconstructed {} samples, expected {}",
            cur.len(),
            decomp.original_length
        )));
    }
    Ok(cur)
}

/// Shrinkage threshold `value = alpha * sqrt(noise) * ln(datasize)` with the
/// noise estimate taken as the median absolute finest-scale detail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkThreshold {
    pub alpha: f64,
    pub noise_estimate: f64,
    pub datasize: usize,
    pub value: f64,
}

pub fn shrink_threshold(
    details: &[Vec<f64>],
    alpha: f64,
    datasize: usize,
) -> Result<ShrinkThreshold, WaveletError> {
    if datasize < 2 {
        return Err(WaveletError::TooShort {
            got: datasize,
            need: 2,
        });
    }
    let finest = details.first().ok_or(WaveletError::EmptyDetails)?;
    if finest.is_empty() {
        return Err(WaveletError::EmptyDetails);
    }
    let mut abs: Vec<f64> = finest.iter().map(|d| d.abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).expect("coefficients are finite"));
    let mid = abs.len() / 2;
    let noise_estimate = if abs.len().is_multiple_of(2) {
        (abs[mid - 1] + abs[mid]) / 2.0
    } else {
        abs[mid]
    };
    let value = alpha * noise_estimate.sqrt() * (datasize as f64).ln();
    Ok(ShrinkThreshold {
        alpha,
        noise_estimate,
        datasize,
        value,
    })
}

/// Soft thresholding, `sign(a) * max(|a| - t, 0)`.
fn soft(a: f64, t: f64) -> f64 {
    let m = a.abs() - t;
    if m > 0.0 {
        a.signum() * m
    } else {
        0.0
    }
}

/// Wavelet shrinkage denoising: decompose, soft-threshold every detail
/// coefficient at the shrinkage threshold, reconstruct.
pub fn denoise(values: &[f64], config: &PipelineConfig) -> Result<Vec<f64>, WaveletError> {
    let mut decomp = dwt(values, config.wavelet_levels)?;
    let threshold = shrink_threshold(&decomp.details, config.wavelet_alpha, values.len())?;
    for level in &mut decomp.details {
        for c in level.iter_mut() {
            *c = soft(*c, threshold.value);
        }
    }
    idwt(&decomp)
}

/// Finds the lag in `[-max_lag, max_lag]` maximizing the cross-correlation of
/// the mean-removed sequences. A positive result means `shifted` lags
/// `original` to the right; callers undo it by shifting `shifted` by `-lag`.
///
/// Ties prefer the smallest absolute lag, so identical inputs return 0.
pub fn align_shift(original: &[f64], shifted: &[f64], max_lag: usize) -> Result<i64, WaveletError> {
    let n = original.len();
    if shifted.len() != n {
        return Err(WaveletError::ShapeMismatch(format!(
            "length {} vs {}",
            n,
            shifted.len()
        )));
    }
    if n < 4 || max_lag >= n / 2 {
        return Err(WaveletError::TooShort {
            got: n,
            need: 2 * (max_lag + 1),
        });
    }

    let mean_a = original.iter().sum::<f64>() / n as f64;
    let mean_b = shifted.iter().sum::<f64>() / n as f64;
    let m = (n + max_lag + 1).next_power_of_two();

    let mut fa: Vec<Complex<f64>> = original
        .iter()
        .map(|&v| Complex::new(v - mean_a, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(m)
        .collect();
    let mut fb: Vec<Complex<f64>> = shifted
        .iter()
        .map(|&v| Complex::new(v - mean_b, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(m)
        .collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut fa);
    fft.process(&mut fb);
    // corr[t] = sum_i a[i] * b[i + t mod m]
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(a, b)| a.conj() * b).collect();
    let ifft = planner.plan_fft_inverse(m);
    ifft.process(&mut prod);

    let corr_at = |lag: i64| -> f64 {
        let t = lag.rem_euclid(m as i64) as usize;
        prod[t].re
    };
    let mut best_lag = 0i64;
    let mut best = corr_at(0);
    for mag in 1..=max_lag as i64 {
        for lag in [mag, -mag] {
            let c = corr_at(lag);
            if c > best {
                best = c;
                best_lag = lag;
            }
        }
    }
    Ok(best_lag)
}

/// Shifts a series by `shift` samples (positive = right), replicating edges.
pub fn shift_series(values: &[f64], shift: i64) -> Vec<f64> {
    let n = values.len() as i64;
    (0..n)
        .map(|i| {
            let src = (i - shift).clamp(0, n - 1);
            values[src as usize]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roundtrip_error(v: &[f64], levels: usize) -> f64 {
        let d = dwt(v, levels).unwrap();
        let r = idwt(&d).unwrap();
        v.iter()
            .zip(&r)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn filters_have_unit_energy_and_orthogonality() {
        let e: f64 = DB4_LO.iter().map(|h| h * h).sum();
        assert!((e - 1.0).abs() < 1e-12);
        let g = db4_hi();
        let dot: f64 = DB4_LO.iter().zip(&g).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
        let sum: f64 = g.iter().sum();
        assert!(
            sum.abs() < 1e-12,
            "high-pass must kill constants, sum = {sum}"
        );
    }

    #[test]
    fn constant_signal_has_zero_details() {
        let v = vec![3.25; 128];
        let d = dwt(&v, 4).unwrap();
        for level in &d.details {
            for &c in level {
                assert!(c.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn coefficient_counts_halve_with_ceiling() {
        let d = dwt(&vec![1.0; 1000], 4).unwrap();
        assert_eq!(d.details[0].len(), 500);
        assert_eq!(d.details[1].len(), 250);
        assert_eq!(d.details[2].len(), 125);
        assert_eq!(d.details[3].len(), 63);
        assert_eq!(d.approx.len(), 63);
    }

    #[test]
    fn roundtrip_is_exact_for_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v: Vec<f64> = (0..1024).map(|_| rng.gen_range(-10.0..10.0)).collect();
        assert!(roundtrip_error(&v, 4) < 1e-9);
    }

    #[test]
    fn roundtrip_is_exact_for_odd_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [17usize, 101, 333, 999, 1001] {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            assert!(roundtrip_error(&v, 3) < 1e-9, "length {n}");
        }
    }

    #[test]
    fn impulse_energy_is_conserved_and_localized() {
        let n = 256;
        let mut v = vec![0.0; n];
        v[100] = 5.0;
        let d = dwt(&v, 4).unwrap();
        let coeff_energy: f64 = d
            .details
            .iter()
            .flat_map(|lvl| lvl.iter())
            .chain(d.approx.iter())
            .map(|c| c * c)
            .sum();
        let signal_energy: f64 = v.iter().map(|x| x * x).sum();
        assert!((coeff_energy - signal_energy).abs() < 1e-9);

        // Finest-scale energy concentrates near the impulse position.
        let finest = &d.details[0];
        let near: f64 = finest[44..=56].iter().map(|c| c * c).sum();
        let total: f64 = finest.iter().map(|c| c * c).sum();
        assert!(near > 0.99 * total);
    }

    #[test]
    fn energy_is_conserved_on_dyadic_lengths() {
        // Dyadic lengths never extend, so the transform is orthonormal and
        // coefficient energy equals signal energy.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for k in [4usize, 6, 8, 10] {
            let n = 1usize << k;
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let d = dwt(&v, 4.min(k)).unwrap();
            let coeff: f64 = d
                .details
                .iter()
                .flat_map(|l| l.iter())
                .chain(d.approx.iter())
                .map(|c| c * c)
                .sum();
            let signal: f64 = v.iter().map(|x| x * x).sum();
            assert!(
                (coeff - signal).abs() / signal < 1e-9,
                "length {n}: {coeff} vs {signal}"
            );
        }
    }

    #[test]
    fn zero_coefficients_reconstruct_zero() {
        let d = dwt(&vec![1.0; 64], 3).unwrap();
        let zeroed = WaveletDecomposition {
            approx: vec![0.0; d.approx.len()],
            details: d.details.iter().map(|l| vec![0.0; l.len()]).collect(),
            ..d
        };
        let r = idwt(&zeroed).unwrap();
        assert!(r.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn approx_only_reconstruction_smooths_a_noisy_ramp() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 2048;
        let clean: Vec<f64> = (0..n).map(|i| 40.0 - 0.01 * i as f64).collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + rng.gen_range(-1.0..1.0)).collect();
        let d = dwt(&noisy, 4).unwrap();
        let smooth = WaveletDecomposition {
            details: d.details.iter().map(|l| vec![0.0; l.len()]).collect(),
            ..d
        };
        let r = idwt(&smooth).unwrap();
        let resid: Vec<f64> = r.iter().zip(&noisy).map(|(a, b)| a - b).collect();
        let mean = resid.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 10.0 / (n as f64).sqrt());
        let rough_before: f64 = noisy.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        let rough_after: f64 = r.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        assert!(rough_after < 0.2 * rough_before);
    }

    #[test]
    fn dwt_input_validation() {
        assert_eq!(dwt(&[1.0, 2.0], 0).unwrap_err(), WaveletError::BadLevels(0));
        assert_eq!(
            dwt(&[1.0; 15], 4).unwrap_err(),
            WaveletError::TooShort { got: 15, need: 16 }
        );
    }

    #[test]
    fn idwt_rejects_mismatched_shapes() {
        let mut d = dwt(&vec![1.0; 64], 3).unwrap();
        d.details[1].pop();
        assert!(matches!(idwt(&d), Err(WaveletError::ShapeMismatch(_))));
    }

    #[test]
    fn shrink_threshold_formula() {
        let details = vec![vec![4.0, -4.0, 4.0]];
        let t = shrink_threshold(&details, 1.0, 1024).unwrap();
        assert_eq!(t.noise_estimate, 4.0);
        let expect = 2.0 * (1024f64).ln();
        assert!((t.value - expect).abs() < 1e-9);
        assert!((t.value - 13.862943611198906).abs() < 1e-9);
    }

    #[test]
    fn shrink_threshold_zero_alpha_and_zero_details() {
        let details = vec![vec![4.0, -2.0, 1.0]];
        assert_eq!(shrink_threshold(&details, 0.0, 100).unwrap().value, 0.0);
        let zeros = vec![vec![0.0; 16]];
        assert_eq!(shrink_threshold(&zeros, 1.0, 100).unwrap().value, 0.0);
    }

    #[test]
    fn shrink_threshold_rejects_empty() {
        assert_eq!(
            shrink_threshold(&[], 1.0, 100).unwrap_err(),
            WaveletError::EmptyDetails
        );
    }

    #[test]
    fn denoise_with_zero_alpha_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..512).map(|_| rng.gen_range(0.0..50.0)).collect();
        let cfg = PipelineConfig {
            wavelet_alpha: 0.0,
            ..PipelineConfig::default()
        };
        let out = denoise(&v, &cfg).unwrap();
        for (a, b) in v.iter().zip(&out) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn soft_thresholding_contracts_detail_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v: Vec<f64> = (0..777).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let before = dwt(&v, 4).unwrap();
        let cfg = PipelineConfig {
            wavelet_alpha: 0.7,
            ..PipelineConfig::default()
        };
        let out = denoise(&v, &cfg).unwrap();
        let after = dwt(&out, 4).unwrap();
        let energy = |d: &WaveletDecomposition| -> f64 {
            d.details.iter().flat_map(|l| l.iter()).map(|c| c * c).sum()
        };
        assert!(energy(&after) <= energy(&before) + 1e-9);
    }

    #[test]
    fn denoise_improves_noisy_step_rmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 4096;
        let clean: Vec<f64> = (0..n)
            .map(|i| if i < n / 2 { 20.0 } else { 37.0 })
            .collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + 0.5 * gaussian(&mut rng)).collect();
        let out = denoise(&noisy, &PipelineConfig::default()).unwrap();
        let rmse = |a: &[f64]| -> f64 {
            (a.iter()
                .zip(&clean)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                / n as f64)
                .sqrt()
        };
        assert!(rmse(&out) < rmse(&noisy));
    }

    #[test]
    fn denoise_crushes_isolated_spike() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n = 4096;
        let spike_at = 2000;
        let mut noisy: Vec<f64> = (0..n).map(|_| 20.0 + 0.5 * gaussian(&mut rng)).collect();
        noisy[spike_at] += 20.0;
        let cfg = PipelineConfig {
            wavelet_alpha: 3.0,
            ..PipelineConfig::default()
        };
        let out = denoise(&noisy, &cfg).unwrap();
        let residual = out[spike_at.saturating_sub(4)..spike_at + 5]
            .iter()
            .map(|v| (v - 20.0).abs())
            .fold(0.0, f64::max);
        assert!(
            residual <= 2.0,
            "spike residual {residual} exceeds 10% of 20 L"
        );
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller is plenty for test noise.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn align_shift_zero_for_identical() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin()).collect();
        assert_eq!(align_shift(&v, &v, 200).unwrap(), 0);
    }

    #[test]
    fn align_shift_recovers_explicit_shift() {
        let n = 4000;
        let base: Vec<f64> = (0..n).map(|i| if i < 1700 { 10.0 } else { 30.0 }).collect();
        let shifted = shift_series(&base, 7);
        assert_eq!(align_shift(&base, &shifted, 50).unwrap(), 7);

        // Brute-force cross-correlation oracle agrees.
        let center = |v: &[f64]| -> Vec<f64> {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| x - m).collect()
        };
        let a = center(&base);
        let b = center(&shifted);
        let mut best = (f64::NEG_INFINITY, 0i64);
        for lag in -50i64..=50 {
            let mut c = 0.0;
            for i in 0..n as i64 {
                let j = i + lag;
                if j >= 0 && j < n as i64 {
                    c += a[i as usize] * b[j as usize];
                }
            }
            if c > best.0 {
                best = (c, lag);
            }
        }
        assert_eq!(best.1, 7);
    }

    #[test]
    fn align_shift_completes_on_uncorrelated_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lag = align_shift(&a, &b, 100).unwrap();
        assert!(lag.abs() <= 100);
    }

    #[test]
    fn align_shift_rejects_oversized_lag() {
        let v = vec![1.0; 100];
        assert!(align_shift(&v, &v, 50).is_err());
    }
}
