//! Derived values checked against independent slow implementations.

use qrf_core::classifier::{gradient_check, init_model, Activation, Sample};
use qrf_core::dsp::{
    coherent_average, correlate_slices, correlation_matrix, frequency_excision, max_energy_window,
    normalize, BandSpec, NormalizationMode,
};
use qrf_core::emission::{
    convolve, discharge_charge, radiated_power, AvalanchePulse, AvalanchePulseSpec,
    PointChargeKinematics, PulseShape, UnitSystem, WaveformRecord,
};
use qrf_core::rng::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
                let ph = -2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
                (re + v * ph.cos(), im + v * ph.sin())
            })
        })
        .collect()
}

fn naive_correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (n1, n2) = (a.len() as isize, b.len() as isize);
    (-(n1 - 1)..n2)
        .map(|lag| {
            (0..n1)
                .filter(|&n| (0..n2).contains(&(n + lag)))
                .map(|n| a[n as usize] * b[(n + lag) as usize])
                .sum()
        })
        .collect()
}

#[test]
fn rectangular_charge_is_current_times_overlap() {
    for (width, t_rise, t_fall, onset) in [
        (4e-9, 0.0, 50e-9, 5e-9),
        (20e-9, 10e-9, 18e-9, 5e-9),
        (3e-9, 6e-9, 30e-9, 5e-9),
    ] {
        let spec = AvalanchePulseSpec {
            shape: PulseShape::Rectangular { width },
            peak_current: 7e-3,
            t_rise,
            t_fall,
            onset,
            ..Default::default()
        };
        let overlap = (onset + width).min(t_fall) - onset.max(t_rise);
        let expected = 7e-3 * overlap.max(0.0);
        let q = discharge_charge(&spec).unwrap();
        assert!(rel(q, expected) < 1e-3, "{q} vs {expected}");
    }
}

#[test]
fn exponential_charge_matches_closed_form() {
    for (tau, t_rise, t_fall) in [(3e-9, 0.0, 50e-9), (1e-9, 6e-9, 9e-9), (10e-9, 0.0, 12e-9)] {
        let spec = AvalanchePulseSpec {
            shape: PulseShape::Exponential,
            peak_current: 10e-3,
            decay_tau: tau,
            t_rise,
            t_fall,
            onset: 5e-9,
            ..Default::default()
        };
        let a = t_rise.max(5e-9) - 5e-9;
        let b = t_fall - 5e-9;
        let expected = 10e-3 * tau * ((-a / tau).exp() - (-b / tau).exp());
        let q = discharge_charge(&spec).unwrap();
        assert!(rel(q, expected) < 1e-3, "{q} vs {expected}");
    }
}

#[test]
fn smoothed_charge_matches_fine_trapezoid() {
    let spec = AvalanchePulseSpec::default();
    let pulse = AvalanchePulse::new(spec).unwrap();
    let n = 200_000;
    let h = (spec.t_fall - spec.t_rise) / n as f64;
    let mut sum = 0.5 * (pulse.current(spec.t_rise) + pulse.current(spec.t_fall));
    for k in 1..n {
        sum += pulse.current(spec.t_rise + k as f64 * h);
    }
    let q = discharge_charge(&spec).unwrap();
    assert!(rel(q, sum * h) < 1e-6, "{q} vs {}", sum * h);
}

#[test]
fn larmor_power_in_both_unit_systems() {
    let k = PointChargeKinematics {
        charge: 3.0,
        acceleration: 0.5,
        speed_ratio: 0.01,
        units: UnitSystem::Normalized,
    };
    assert!(rel(radiated_power(&k).unwrap(), 2.0 / 3.0 * 9.0 * 0.25) < 1e-15);
    let g = PointChargeKinematics::from_si_charge(1e-12, 1e20, 0.01);
    let q = 1e-12 * 2.997_924_58e9;
    let expected = 2.0 / 3.0 * q * q * 1e40 / 2.997_924_58e10f64.powi(3);
    assert!(rel(radiated_power(&g).unwrap(), expected) < 1e-12);
}

#[test]
fn convolution_matches_direct_sum() {
    let mut rng = rng_from_seed(3);
    for _ in 0..20 {
        let x: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..rng.random_range(1..25)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = convolve(&x, &h);
        assert_eq!(y.len(), x.len() + h.len() - 1);
        for (n, yn) in y.iter().enumerate() {
            let direct: f64 = (0..x.len())
                .filter(|&i| n >= i && n - i < h.len())
                .map(|i| x[i] * h[n - i])
                .sum();
            assert!((yn - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn frequency_excision_spectrum_matches_dft_mask() {
    let (n, fs) = (500, 1e9);
    let band = BandSpec::default();
    let tone = |bin: usize, amp: f64, phase: f64| -> Vec<f64> {
        (0..n)
            .map(|t| amp * (2.0 * std::f64::consts::PI * (bin * t) as f64 / n as f64 + phase).cos())
            .collect()
    };
    let in_band = tone(50, 1.0, 0.3);
    let mut x = in_band.clone();
    for (bin, amp) in [(5usize, 0.8), (200, 1.3), (249, 0.4)] {
        for (xi, ti) in x.iter_mut().zip(tone(bin, amp, 1.1)) {
            *xi += ti;
        }
    }
    let out = frequency_excision(&WaveformRecord::new(fs, x).unwrap(), &band).unwrap();
    let spec = naive_dft(&out.samples);
    for (k, (re, im)) in spec.iter().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        if !(band.f_low..=band.f_high).contains(&f) {
            assert!(re.hypot(*im) < 1e-9, "bin {k} leaks {}", re.hypot(*im));
        }
    }
    let err: f64 = out.samples.iter().zip(&in_band).map(|(a, b)| (a - b).powi(2)).sum();
    let e: f64 = in_band.iter().map(|v| v * v).sum();
    assert!((err / e).sqrt() < 1e-9);
}

#[test]
fn correlation_matches_quadratic_sum() {
    let mut rng = rng_from_seed(11);
    for _ in 0..30 {
        let a: Vec<f64> = (0..rng.random_range(1..70)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..rng.random_range(1..70)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = correlate_slices(&a, &b);
        let slow = naive_correlation(&a, &b);
        assert_eq!(fast.values.len(), slow.len());
        for (f, s) in fast.values.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-9);
        }
    }
}

#[test]
fn matrix_entries_are_peak_correlations() {
    let mut rng = rng_from_seed(5);
    let rec = |rng: &mut qrf_core::rng::SimRng, label| {
        let x: Vec<f64> = (0..48).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&WaveformRecord::new(1e9, x).unwrap().with_label(label), NormalizationMode::UnitEnergy).unwrap()
    };
    let a: Vec<_> = (0..4).map(|_| rec(&mut rng, 0)).collect();
    let b: Vec<_> = (0..4).map(|_| rec(&mut rng, 1)).collect();
    let m = correlation_matrix(&a, &b).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let peak = naive_correlation(&a[i].samples, &b[j].samples)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((m.get(i, j) - peak).abs() < 1e-9);
        }
    }
}

#[test]
fn window_search_matches_exhaustive_scan() {
    let mut rng = rng_from_seed(2);
    for _ in 0..50 {
        // Small integers keep every window sum exact, so ties are real ties.
        let x: Vec<f64> = (0..rng.random_range(5..60)).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        let len = rng.random_range(1..=x.len());
        let mut best = (0, f64::NEG_INFINITY);
        for s in 0..=x.len() - len {
            let e: f64 = x[s..s + len].iter().map(|v| v * v).sum();
            if e > best.1 {
                best = (s, e);
            }
        }
        assert_eq!(max_energy_window(&x, len), best.0);
    }
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = rng_from_seed(8);
    let acts = [Activation::Tanh, Activation::Logistic, Activation::Relu, Activation::Identity];
    for m in 0..20 {
        let input = rng.random_range(3..10);
        let mut dims = vec![input];
        for _ in 0..rng.random_range(1..4) {
            dims.push(rng.random_range(2..7));
        }
        dims.push(1);
        let model = init_model(&dims, input, 100 + m).unwrap().with_hidden_activation(acts[m as usize % 4]);
        let sample = Sample {
            input: (0..input).map(|_| rng.random_range(-1.0..1.0)).collect(),
            label: (m % 2) as u8,
        };
        let r = gradient_check(&model, &sample).unwrap();
        assert!(r.max_relative_error < 1e-5, "model {m} ({dims:?}): {}", r.max_relative_error);
    }
}

#[test]
fn averaging_residual_variance_scales_as_one_over_k() {
    let sigma = 0.1;
    let n = 400;
    let clean: Vec<f64> = (0..n).map(|t| (t as f64 * 0.2).sin()).collect();
    let mut rng = rng_from_seed(21);
    for k in [4usize, 16, 64] {
        let mut acc = 0.0;
        for _ in 0..100 {
            let copies: Vec<WaveformRecord> = (0..k)
                .map(|_| {
                    let x = clean
                        .iter()
                        .map(|c| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            c + sigma * z
                        })
                        .collect::<Vec<f64>>();
                    WaveformRecord::new(1e9, x).unwrap()
                })
                .collect();
            let avg = coherent_average(&copies).unwrap();
            acc += avg.samples.iter().zip(&clean).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / n as f64;
        }
        let var = acc / 100.0;
        let expected = sigma * sigma / k as f64;
        assert!(rel(var, expected) < 0.1, "K={k}: {var} vs {expected}");
    }
}
