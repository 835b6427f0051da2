//! De Giorgi iteration on sampled level profiles.
//!
//! A profile is a list of levels `s_0 < s_1 < ...` with values `φ_i`.
//! Decreasing profiles are read as right-continuous step functions,
//! increasing profiles as left-continuous ones, both restricted to the
//! sampled window `[0, s_last]`. Growth checks take the exact supremum over
//! that interpretation, so the halving iteration behind
//! [`vanishing_bound`] and [`lower_bound`] applies to it verbatim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVariant {
    /// `r φ(s + r) <= C φ(s)^{1+δ}` for a nonincreasing `φ`.
    Decreasing,
    /// `t φ(s - t) <= C φ(s)^{1+δ}` for a nondecreasing `φ`, `0 <= t <= s`.
    Increasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub variant: GrowthVariant,
    pub constant: f64,
    pub delta: f64,
    /// Smallest constant for which every pair passes; infinite when none does.
    pub minimal_constant: f64,
    /// `(s, r)` or `(s, t)` attaining `minimal_constant`.
    pub worst_pair: Option<(f64, f64)>,
    pub pass: bool,
}

fn check_levels(s: &[f64], phi: &[f64]) -> Result<()> {
    if s.is_empty() || s.len() != phi.len() {
        return Err(Error::InvalidArgument(format!(
            "profile needs matching nonempty samples, got {} levels and {} values",
            s.len(),
            phi.len()
        )));
    }
    if s[0] < 0.0 || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be nonnegative and strictly increasing".into()));
    }
    if phi.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("profile values must be finite and nonnegative".into()));
    }
    Ok(())
}

fn ratio(lhs: f64, base: f64, delta: f64) -> f64 {
    if lhs <= 0.0 {
        0.0
    } else if base <= 0.0 {
        f64::INFINITY
    } else {
        lhs / base.powf(1.0 + delta)
    }
}

pub fn verify_growth(
    s: &[f64],
    phi: &[f64],
    variant: GrowthVariant,
    constant: f64,
    delta: f64,
) -> Result<GrowthCertificate> {
    check_levels(s, phi)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("growth exponent must be positive, got {delta}")));
    }
    let last = s.len() - 1;
    let mut worst = 0.0;
    let mut pair = None;
    let mut consider = |r: f64, level: f64, gap: f64| {
        if r > worst {
            worst = r;
            pair = Some((level, gap));
        }
    };
    match variant {
        GrowthVariant::Decreasing => {
            if phi.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::Invariant("decreasing variant needs a nonincreasing profile".into()));
            }
            for i in 0..=last {
                for j in i..=last {
                    let reach = if j < last { s[j + 1] } else { s[last] };
                    let gap = reach - s[i];
                    consider(ratio(gap * phi[j], phi[i], delta), s[i], gap);
                }
            }
        }
        GrowthVariant::Increasing => {
            if phi.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Invariant("increasing variant needs a nondecreasing profile".into()));
            }
            for i in 0..=last {
                for j in 0..=i {
                    let start = if j == 0 { 0.0 } else { s[j - 1] };
                    let gap = s[i] - start;
                    consider(ratio(gap * phi[j], phi[i], delta), s[i], gap);
                }
            }
        }
    }
    Ok(GrowthCertificate {
        variant,
        constant,
        delta,
        minimal_constant: worst,
        worst_pair: pair,
        pass: worst <= constant * (1.0 + 1e-12),
    })
}

/// Level beyond which a decreasing profile with growth constant `b0`
/// vanishes: `2 b0 φ0^δ / (1 - 2^{-δ})`.
pub fn vanishing_bound(b0: f64, delta: f64, phi0: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("growth exponent must be positive, got {delta}")));
    }
    if b0 < 0.0 || phi0 < 0.0 {
        return Err(Error::InvalidArgument("growth constant and initial value must be nonnegative".into()));
    }
    Ok(2.0 * b0 * phi0.powf(delta) / (1.0 - 2f64.powf(-delta)))
}

/// Lower bound `(s0 (1 - 2^{-δ}) / (2 c))^{1/δ}` on `φ(s0)` for an
/// increasing profile that is positive on `(0, ∞)`.
pub fn lower_bound(c: f64, delta: f64, s0: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("growth exponent must be positive, got {delta}")));
    }
    if !(c > 0.0) || s0 < 0.0 {
        return Err(Error::InvalidArgument("need a positive constant and a nonnegative level".into()));
    }
    Ok((s0 * (1.0 - 2f64.powf(-delta)) / (2.0 * c)).powf(1.0 / delta))
}

/// Value of a right-continuous decreasing step profile at `t`, extended by
/// the last sample.
pub fn step_value(s: &[f64], phi: &[f64], t: f64) -> f64 {
    match s.iter().rposition(|&x| x <= t) {
        Some(i) => phi[i],
        None => phi[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_arithmetic() {
        assert_eq!(vanishing_bound(1.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(vanishing_bound(3.0, 0.5, 0.0).unwrap(), 0.0);
        assert!(vanishing_bound(1.0, 0.0, 1.0).is_err());
        let c0 = lower_bound(2.0, 0.5, 0.1).unwrap();
        let expect = (0.1 * (1.0 - 0.5f64.sqrt()) / 4.0).powi(2);
        assert!((c0 - expect).abs() < 1e-16);
    }

    #[test]
    fn non_monotone_profile_is_rejected() {
        let r = verify_growth(&[0.0, 1.0, 2.0], &[1.0, 0.5, 0.7], GrowthVariant::Decreasing, 1.0, 1.0);
        assert!(matches!(r, Err(Error::Invariant(_))));
    }

    #[test]
    fn step_value_is_right_continuous() {
        let s = [0.0, 1.0, 2.0];
        let p = [3.0, 2.0, 1.0];
        assert_eq!(step_value(&s, &p, 0.999), 3.0);
        assert_eq!(step_value(&s, &p, 1.0), 2.0);
        assert_eq!(step_value(&s, &p, 7.0), 1.0);
    }
}
