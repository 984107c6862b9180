//! Kaplan–Meier product-limit estimation, the two-group log-rank test, and
//! the chi-square survival function it needs.

use serde::Serialize;

use crate::data::SurvivalRecord;
use crate::error::{Error, Result};

/// Step function of the product-limit estimator.
///
/// Entry `k` describes the step at `times[k]`: `at_risk[k]` subjects were
/// under observation just before it, `events[k]` died at it, and
/// `survival[k]` is the estimate from `times[k]` (inclusive) onwards.
/// Only times with at least one event produce a step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl KmCurve {
    /// Right-continuous evaluation: S(t) for any t ≥ 0.
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.times.iter().rposition(|&s| s <= t) {
            Some(k) => self.survival[k],
            None => 1.0,
        }
    }
}

fn validate(records: &[SurvivalRecord]) -> Result<()> {
    if records.iter().any(|r| !r.time.is_finite() || r.time < 0.0) {
        return Err(Error::Config("survival times must be finite and >= 0".into()));
    }
    Ok(())
}

/// Distinct times in ascending order, each with (events, total leaving).
fn tally(records: &[SurvivalRecord]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<&SurvivalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    for r in sorted {
        match out.last_mut() {
            Some(last) if last.0 == r.time => {
                last.1 += r.event as usize;
                last.2 += 1;
            }
            _ => out.push((r.time, r.event as usize, 1)),
        }
    }
    out
}

pub fn km_estimate(records: &[SurvivalRecord]) -> Result<KmCurve> {
    validate(records)?;
    let mut curve = KmCurve {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut n = records.len();
    let mut s = 1.0;
    for (t, d, leaving) in tally(records) {
        if d > 0 {
            s *= 1.0 - d as f64 / n as f64;
            curve.times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(n);
            curve.events.push(d);
        }
        n -= leaving;
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRankResult {
    pub statistic: f64,
    pub p_value: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub variance: f64,
}

/// Two-group log-rank test with one degree of freedom.
///
/// Uses the hypergeometric variance with the tie correction
/// `d · (n_a/n) · (n_b/n) · (n − d)/(n − 1)`. A zero variance (no events, or
/// nothing informative) yields statistic 0 and p = 1.
pub fn logrank_test(group_a: &[SurvivalRecord], group_b: &[SurvivalRecord]) -> Result<LogRankResult> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Config("log-rank test needs two non-empty groups".into()));
    }
    validate(group_a)?;
    validate(group_b)?;
    let ta = tally(group_a);
    let tb = tally(group_b);
    let (mut na, mut nb) = (group_a.len(), group_b.len());
    let (mut ia, mut ib) = (0, 0);
    let (mut observed, mut expected, mut variance) = (0.0, 0.0, 0.0);
    while ia < ta.len() || ib < tb.len() {
        let t = match (ta.get(ia), tb.get(ib)) {
            (Some(a), Some(b)) => a.0.min(b.0),
            (Some(a), None) => a.0,
            (None, Some(b)) => b.0,
            (None, None) => unreachable!(),
        };
        let (da, la) = match ta.get(ia) {
            Some(a) if a.0 == t => {
                ia += 1;
                (a.1, a.2)
            }
            _ => (0, 0),
        };
        let (db, lb) = match tb.get(ib) {
            Some(b) if b.0 == t => {
                ib += 1;
                (b.1, b.2)
            }
            _ => (0, 0),
        };
        let d = (da + db) as f64;
        let n = (na + nb) as f64;
        if d > 0.0 {
            observed += da as f64;
            expected += d * na as f64 / n;
            if n > 1.0 {
                variance += d * (na as f64 / n) * (nb as f64 / n) * (n - d) / (n - 1.0);
            }
        }
        na -= la;
        nb -= lb;
    }
    let (statistic, p_value) = if variance > 0.0 {
        let stat = (observed - expected).powi(2) / variance;
        (stat, chi_square_sf(stat, 1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(LogRankResult {
        statistic,
        p_value,
        observed_a: observed,
        expected_a: expected,
        variance,
    })
}

/// Upper tail P(X > x) for X ~ χ²(k).
pub fn chi_square_sf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(0.5 * k, 0.5 * x)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, nine coefficients.
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x).
fn gamma_q(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 10_000;
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series for P(a, x).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        // Modified Lentz continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        (log_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}
