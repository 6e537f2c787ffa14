use crate::error::{Error, Result};
use num_complex::Complex64;

/// Lag maximizing `|sum_n rx[n + lag] conj(ref[n])|`; the earliest lag wins ties.
pub fn estimate_timing(rx: &[Complex64], reference: &[Complex64]) -> Result<usize> {
    estimate_timing_multi(&[rx], reference)
}

/// Same as [`estimate_timing`] with correlation magnitudes summed over
/// receive antennas.
pub fn estimate_timing_multi(rx: &[&[Complex64]], reference: &[Complex64]) -> Result<usize> {
    if reference.is_empty() || rx.is_empty() || rx.iter().any(|a| a.is_empty()) {
        return Err(Error::Empty("timing estimation input"));
    }
    let shortest = rx.iter().map(|a| a.len()).min().unwrap_or(0);
    if reference.len() > shortest {
        return Err(Error::InsufficientSamples {
            need: reference.len(),
            have: shortest,
        });
    }
    let lags = shortest - reference.len() + 1;
    let mut best = (0usize, f64::NEG_INFINITY);
    for lag in 0..lags {
        let metric: f64 = rx
            .iter()
            .map(|a| {
                a[lag..lag + reference.len()]
                    .iter()
                    .zip(reference)
                    .map(|(x, r)| x * r.conj())
                    .sum::<Complex64>()
                    .norm()
            })
            .sum();
        if metric > best.1 {
            best = (lag, metric);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_awgn, Snr};
    use crate::seed::{derive_seed, SeedLabel};
    use rand_distr::{Distribution, StandardNormal};

    fn noise_ref(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = SeedLabel(seed).rng();
        (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect()
    }

    fn delayed(r: &[Complex64], d: usize, total: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); total];
        v[d..d + r.len()].copy_from_slice(r);
        v
    }

    #[test]
    fn clean_delay() {
        let r = noise_ref(128, 1);
        assert_eq!(estimate_timing(&delayed(&r, 17, 300), &r).unwrap(), 17);
    }

    #[test]
    fn zero_db_awgn_delay_forty() {
        let r = noise_ref(256, 2);
        let hits = (0..100)
            .filter(|s| {
                let clean = vec![delayed(&r, 40, 512)];
                let (noisy, _) = add_awgn(&clean, Snr::Db(0.0), 1.0, derive_seed(*s, 0, "t")).unwrap();
                estimate_timing(&noisy[0], &r).unwrap() == 40
            })
            .count();
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn ties_go_to_earliest() {
        let r = vec![Complex64::new(1.0, 0.0)];
        let rx = vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(-2.0, 0.0),
        ];
        assert_eq!(estimate_timing(&rx, &r).unwrap(), 1);
    }

    #[test]
    fn pure_noise_still_returns() {
        let r = noise_ref(64, 3);
        let rx = noise_ref(500, 4);
        assert!(estimate_timing(&rx, &r).unwrap() <= 436);
    }

    #[test]
    fn empty_inputs() {
        assert!(estimate_timing(&[], &[Complex64::new(1.0, 0.0)]).is_err());
        assert!(estimate_timing(&[Complex64::new(1.0, 0.0)], &[]).is_err());
    }
}
