//! Information-theoretic security analysis.
//!
//! Bob's information on Alice's kept bit is that of a binary symmetric
//! channel, `IAB = 1 - h(q)`. Eve's information comes from two kinds of
//! interception. A full-duration (long) interception on a fraction `ω_l` of
//! the pulses yields QBER `q = ω_l / 4` and half a bit per kept intercepted
//! round. Half-duration (short) interceptions yield a full bit at no QBER,
//! but each one raises the interferometer's middle-slot destructive rate
//! exactly like a decohered pulse. With channel decoherence `d` upstream of
//! Eve, the monitored rate stays at its expected `d/4` as long as
//! `ω_s ≤ ω_l · d / (1 - d)`, so Eve's best undetected information is
//!
//! ```text
//! IAE = ω_l/2 + ω_s = 2q (1 + d) / (1 - d)      (capped at 1)
//! ```
//!
//! The key is deemed secure while `IAB > IAE`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain { what: &'static str, value: f64, domain: &'static str },
    #[error("no QBER threshold for d = {0}: Eve's information dominates over the whole interval")]
    NoThreshold(f64),
    #[error("no interferometer detections: cannot estimate decoherence")]
    InsufficientData,
}

fn check(
    what: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    hi_open: bool,
    domain: &'static str,
) -> Result<(), AnalysisError> {
    let ok = value >= lo && if hi_open { value < hi } else { value <= hi };
    if ok {
        Ok(())
    } else {
        Err(AnalysisError::Domain { what, value, domain })
    }
}

/// Largest QBER the intercept-resend model can induce.
pub const MAX_MODEL_QBER: f64 = 0.25;

/// Lower end of the threshold bracket.
pub const THRESHOLD_BRACKET_LO: f64 = 1e-9;

/// Absolute tolerance of the threshold bisection.
pub const THRESHOLD_TOL: f64 = 1e-6;

/// Shannon entropy of a Bernoulli(q) variable, in bits.
pub fn binary_entropy(q: f64) -> Result<f64, AnalysisError> {
    check("q", q, 0.0, 1.0, false, "[0, 1]")?;
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

pub fn iab(q: f64) -> Result<f64, AnalysisError> {
    check("q", q, 0.0, 0.5, false, "[0, 0.5]")?;
    Ok(1.0 - binary_entropy(q)?)
}

pub fn iae(q: f64, d: f64) -> Result<f64, AnalysisError> {
    check("q", q, 0.0, MAX_MODEL_QBER, false, "[0, 0.25]")?;
    check("d", d, 0.0, 1.0, true, "[0, 1)")?;
    Ok((2.0 * q * (1.0 + d) / (1.0 - d)).min(1.0))
}

/// Largest short-interception fraction that keeps the middle-slot
/// destructive rate at the level decoherence alone would produce.
pub fn contrast_budget(omega_long: f64, d: f64) -> Result<f64, AnalysisError> {
    check("omega_long", omega_long, 0.0, 1.0, false, "[0, 1]")?;
    check("d", d, 0.0, 1.0, true, "[0, 1)")?;
    Ok(omega_long * d / (1.0 - d))
}

/// QBER among kept rounds when a fraction `omega_long` of pulses is
/// intercepted with full-duration resends.
pub fn qber_of_interception(omega_long: f64) -> Result<f64, AnalysisError> {
    check("omega_long", omega_long, 0.0, 1.0, false, "[0, 1]")?;
    Ok(omega_long / 4.0)
}

/// Root of `IAB(q) - IAE(q, d)` on `(0, 0.25]` by bisection.
pub fn threshold(d: f64) -> Result<f64, AnalysisError> {
    check("d", d, 0.0, 1.0, true, "[0, 1)")?;
    let gap = |q: f64| -> f64 { iab(q).expect("q in range") - iae(q, d).expect("q, d in range") };

    let (mut lo, mut hi) = (THRESHOLD_BRACKET_LO, MAX_MODEL_QBER);
    let (g_lo, g_hi) = (gap(lo), gap(hi));
    if g_lo <= 0.0 || g_hi > 0.0 {
        return Err(AnalysisError::NoThreshold(d));
    }
    // gap is strictly decreasing on the bracket
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityCurvePoint {
    pub d: f64,
    pub q: f64,
    pub iab: f64,
    pub iae: f64,
}

pub fn curve(d: f64, q_grid: &[f64]) -> Result<Vec<SecurityCurvePoint>, AnalysisError> {
    q_grid.iter().map(|&q| Ok(SecurityCurvePoint { d, q, iab: iab(q)?, iae: iae(q, d)? })).collect()
}

/// `0, step, 2·step, …` up to `MAX_MODEL_QBER`, computed by index.
pub fn default_q_grid(step: f64) -> Vec<f64> {
    let n = (MAX_MODEL_QBER / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Interferometer-arm statistics used by the contrast monitor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferometerStats {
    pub routed_detected: u64,
    /// Destructive-port detections in the middle slot of the revealed label.
    pub middle_destructive: u64,
}

/// A fully decohered ensemble fires the middle destructive cell on a quarter
/// of interferometer detections, a coherent one never.
pub fn estimate_decoherence(stats: InterferometerStats) -> Result<f64, AnalysisError> {
    if stats.routed_detected == 0 {
        return Err(AnalysisError::InsufficientData);
    }
    Ok(4.0 * stats.middle_destructive as f64 / stats.routed_detected as f64)
}

/// Plug-in mutual information (bits) of an empirical joint histogram.
pub fn mutual_information<X: Ord + Clone, Y: Ord + Clone>(joint: &BTreeMap<(X, Y), u64>) -> f64 {
    let n: u64 = joint.values().sum();
    if n == 0 {
        return 0.0;
    }
    let mut px: BTreeMap<X, u64> = BTreeMap::new();
    let mut py: BTreeMap<Y, u64> = BTreeMap::new();
    for ((x, y), &c) in joint {
        *px.entry(x.clone()).or_default() += c;
        *py.entry(y.clone()).or_default() += c;
    }
    let n = n as f64;
    joint
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|((x, y), &c)| {
            let pxy = c as f64 / n;
            let denom = (px[x] as f64 / n) * (py[y] as f64 / n);
            pxy * (pxy / denom).log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.17).unwrap() - 0.6577).abs() < 5e-4);
        assert!(binary_entropy(1.01).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn iab_values() {
        assert_eq!(iab(0.0).unwrap(), 1.0);
        assert_eq!(iab(0.5).unwrap(), 0.0);
        assert!((iab(0.25).unwrap() - 0.1887).abs() < 5e-4);
        assert!(iab(0.6).is_err());
    }

    #[test]
    fn iae_values() {
        assert_eq!(iae(0.25, 0.0).unwrap(), 0.5);
        assert!((iae(0.1, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(iae(0.0, 0.7).unwrap(), 0.0);
        assert_eq!(iae(0.25, 0.5).unwrap(), 1.0);
        assert!(iae(0.3, 0.0).is_err());
        assert!(iae(0.1, 1.0).is_err());
    }

    #[test]
    fn interception_qber() {
        assert_eq!(qber_of_interception(1.0).unwrap(), 0.25);
        assert_eq!(qber_of_interception(0.0).unwrap(), 0.0);
        assert!((qber_of_interception(0.68).unwrap() - 0.17).abs() < 1e-15);
        assert!(qber_of_interception(1.5).is_err());
    }

    #[test]
    fn budget_matches_formula() {
        assert!((contrast_budget(0.4, 0.2).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(contrast_budget(0.4, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn threshold_near_seventeen_percent() {
        let q = threshold(0.0).unwrap();
        assert!((q - 0.170).abs() < 0.002, "{q}");
        assert!(threshold(1.0).is_err());
        assert!(threshold(-0.1).is_err());
    }

    #[test]
    fn threshold_absent_when_decoherence_overwhelms() {
        // 2·1e-9·(1+d)/(1-d) exceeds 1 - h(1e-9) only with 1-d of order 1e-9
        assert_eq!(threshold(1.0 - 1e-12), Err(AnalysisError::NoThreshold(1.0 - 1e-12)));
    }

    #[test]
    fn decoherence_estimator() {
        let e = |n, m| estimate_decoherence(InterferometerStats { routed_detected: n, middle_destructive: m });
        assert_eq!(e(1_000_000, 0).unwrap(), 0.0);
        assert_eq!(e(1000, 250).unwrap(), 1.0);
        assert_eq!(e(0, 0), Err(AnalysisError::InsufficientData));
    }

    #[test]
    fn curve_points() {
        let c = curve(0.0, &[0.0]).unwrap();
        assert_eq!(c, vec![SecurityCurvePoint { d: 0.0, q: 0.0, iab: 1.0, iae: 0.0 }]);
        let c = curve(0.0, &[0.17]).unwrap();
        assert!((c[0].iab - c[0].iae).abs() < 0.01);
        assert!(curve(0.0, &[0.3]).is_err());
    }

    #[test]
    fn grid_has_51_points() {
        let g = default_q_grid(0.005);
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert!((g[50] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_limits() {
        let mut perfect = BTreeMap::new();
        perfect.insert((0u8, 0u8), 50u64);
        perfect.insert((1, 1), 50);
        assert!((mutual_information(&perfect) - 1.0).abs() < 1e-12);
        let mut indep = BTreeMap::new();
        for x in 0..2u8 {
            for y in 0..2u8 {
                indep.insert((x, y), 25u64);
            }
        }
        assert_eq!(mutual_information(&indep), 0.0);
        assert_eq!(mutual_information::<u8, u8>(&BTreeMap::new()), 0.0);
    }
}
