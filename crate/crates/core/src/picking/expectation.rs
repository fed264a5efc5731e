//! Expected overlap of a pharmacist sort with a crane operation.
//!
//! While the pharmacist sorts one drug (`X ~ N(mu, sigma^2)`) the crane runs
//! its next operation (`t` seconds); the slower of the two sets the pace, so
//! each overlapped step costs `E[max(X, t)]`. The expectation is taken over
//! the full normal support, not a distribution truncated at zero.

use crate::error::{Error, Result};
use crate::model::PickerModel;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `E[max(X, t)]` for `X ~ N(mu, sigma^2)`.
///
/// With `sigma = 0` this is exactly `max(mu, t)`. Otherwise, with
/// `z = (t - mu) / sigma`,
/// `E = t * Phi(z) + mu * (1 - Phi(z)) + sigma * phi(z)`.
pub fn expected_max_sort(t: f64, picker: &PickerModel) -> Result<f64> {
    if picker.std_dev < 0.0 || !picker.std_dev.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sort-time deviation {} must be >= 0",
            picker.std_dev
        )));
    }
    Ok(expected_max_unchecked(t, picker.mean, picker.std_dev))
}

#[inline]
pub(crate) fn expected_max_unchecked(t: f64, mean: f64, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        return mean.max(t);
    }
    let z = (t - mean) / std_dev;
    // Beyond nine deviations the other branch contributes under 1e-18 * sigma.
    if z >= 9.0 {
        return t;
    }
    if z <= -9.0 {
        return mean;
    }
    // Phi(z) and 1 - Phi(z) via erfc keep both tails accurate.
    let below = 0.5 * libm::erfc(-z * FRAC_1_SQRT_2);
    let above = 0.5 * libm::erfc(z * FRAC_1_SQRT_2);
    t * below + mean * above + std_dev * std_normal_pdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn picker(mean: f64, std_dev: f64) -> PickerModel {
        PickerModel::new(mean, std_dev).unwrap()
    }

    #[test]
    fn deterministic_sort_is_plain_max() {
        assert_eq!(expected_max_sort(10.0, &picker(5.0, 0.0)).unwrap(), 10.0);
        assert_eq!(expected_max_sort(10.0, &picker(15.0, 0.0)).unwrap(), 15.0);
    }

    #[test]
    fn centred_case_adds_half_normal_mean() {
        // t = mu: E = t + sigma / sqrt(2 pi)
        let e = expected_max_sort(10.0, &picker(10.0, 2.0)).unwrap();
        assert!((e - (10.0 + 2.0 * 0.398_942_280_401_432_7)).abs() < 1e-12);
        assert!((e - 10.7979).abs() < 1e-4);
    }

    #[test]
    fn negative_deviation_rejected() {
        let bad = PickerModel {
            mean: 1.0,
            std_dev: -0.5,
        };
        assert!(expected_max_sort(1.0, &bad).is_err());
    }

    #[test]
    fn vanishing_deviation_converges_to_max() {
        for &(t, mu) in &[(3.0, 5.0), (5.0, 3.0), (4.0, 4.0)] {
            let e = expected_max_sort(t, &picker(mu, 1e-9)).unwrap();
            assert!((e - f64::max(t, mu)).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn bounded_below_and_monotone(
            t in 0.0f64..60.0, dt in 0.0f64..5.0,
            mu in 0.0f64..20.0, dmu in 0.0f64..5.0,
            sigma in 0.0f64..6.0, dsigma in 0.0f64..3.0,
        ) {
            let e = expected_max_unchecked(t, mu, sigma);
            prop_assert!(e >= mu.max(t) - 1e-12);
            prop_assert!(expected_max_unchecked(t + dt, mu, sigma) >= e - 1e-12);
            prop_assert!(expected_max_unchecked(t, mu + dmu, sigma) >= e - 1e-12);
            prop_assert!(expected_max_unchecked(t, mu, sigma + dsigma) >= e - 1e-12);
        }
    }
}
