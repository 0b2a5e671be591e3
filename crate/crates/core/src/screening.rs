//! Shapiro-Wilk normality screening of factor columns.
//!
//! Coefficients and p-values follow Royston's approximations (AS 181 with
//! remark R94), valid for 3 <= n <= 5000. Ordinal rank columns are tested
//! as-is: ties are not jittered, so large samples of 1–5 ranks are almost
//! always rejected.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::encoding::EncodedDataset;
use crate::error::{Error, Result};

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;
pub const DEFAULT_ALPHA: f64 = 0.05;

const SMALL: f64 = 1e-19;

// Polynomial approximations; coefficients in ascending powers.
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn check_size(n: usize) -> Result<()> {
    if (MIN_N..=MAX_N).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedSampleSize(n))
    }
}

/// Upper-half coefficients a[0..n/2], largest first, all non-negative.
fn half_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let an = n as f64;
    let an25 = an + 0.25;
    // m[i] < 0: expected order statistics of the lower half
    let m: Vec<f64> = (1..=half)
        .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    // n > 5 also corrects the second coefficient; the rest are rescaled m
    let mut a: Vec<f64> = vec![a1];
    let mut rest = summ2 - 2.0 * m[0] * m[0];
    let mut norm = 1.0 - 2.0 * a1 * a1;
    if n > 5 {
        let a2 = poly(&C2, rsn) - m[1] / ssumm2;
        a.push(a2);
        rest -= 2.0 * m[1] * m[1];
        norm -= 2.0 * a2 * a2;
    }
    let fac = (rest / norm).sqrt();
    a.extend(m[a.len()..].iter().map(|mi| -mi / fac));
    a
}

/// Full antisymmetric coefficient vector for sample size `n`, ordered to
/// match an ascending sample: `a[i] = -a[n-1-i]`, `sum(a^2) = 1`.
pub fn sw_coefficients(n: usize) -> Result<Vec<f64>> {
    check_size(n)?;
    let half = half_coefficients(n);
    let mut full = vec![0.0; n];
    for (i, &h) in half.iter().enumerate() {
        full[i] = -h;
        full[n - 1 - i] = h;
    }
    Ok(full)
}

/// W and p for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwTest {
    pub n: usize,
    /// `None` when the sample is constant and W is undefined.
    pub w: Option<f64>,
    pub p_value: f64,
    pub degenerate: bool,
}

/// Shapiro-Wilk test of `sample` (any order).
///
/// A constant sample has a zero denominator; it is reported as degenerate
/// with `w = None` and `p_value = 0`.
pub fn shapiro_wilk(sample: &[f64]) -> Result<SwTest> {
    let n = sample.len();
    check_size(n)?;
    if let Some(i) = sample.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);

    let range = x[n - 1] - x[0];
    if range < SMALL * x[n - 1].abs().max(x[0].abs()).max(1.0) {
        return Ok(SwTest {
            n,
            w: None,
            p_value: 0.0,
            degenerate: true,
        });
    }

    let a = sw_coefficients(n)?;
    // W as the squared correlation of (a, x); scaled by the range to keep
    // magnitudes near one. Equal to (sum a_i x_(i))^2 / sum (x_i - mean)^2
    // because sum(a) = 0 and sum(a^2) = 1.
    let origin = x[n / 2];
    let xs: Vec<f64> = x.iter().map(|v| (v - origin) / range).collect();
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (ai, xi) in a.iter().zip(&xs) {
        let da = ai - mean_a;
        let dx = xi - mean_x;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(0.0, 1.0);

    Ok(SwTest {
        n,
        w: Some(w),
        p_value: p_value(w, w1, n),
        degenerate: false,
    })
}

fn p_value(w: f64, w1: f64, n: usize) -> f64 {
    if n == 3 {
        const PI6: f64 = 6.0 / std::f64::consts::PI;
        const STQR: f64 = std::f64::consts::PI / 3.0;
        return (PI6 * (w.sqrt().asin() - STQR)).clamp(0.0, 1.0);
    }
    let an = n as f64;
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    // upper tail of N(m, s) at y
    let z = (y - m) / s;
    (0.5 * erfc(z / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwResult {
    pub factor: String,
    pub n: usize,
    pub w: Option<f64>,
    pub p_value: f64,
    pub degenerate: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub alpha: f64,
    pub results: Vec<SwResult>,
    /// Factors kept, in dataset column order.
    pub retained: Vec<String>,
}

impl ScreeningReport {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "Shapiro-Wilk screening (keep when p > {}; constant columns are degenerate)\n",
            self.alpha
        );
        out.push_str(&format!(
            "{:<18} {:>6} {:>10} {:>12}  {}\n",
            "factor", "n", "W", "p", "verdict"
        ));
        for r in &self.results {
            let w = r.w.map_or_else(|| "undefined".to_string(), |w| format!("{w:.5}"));
            let verdict = match (r.verdict, r.degenerate) {
                (_, true) => "drop (constant)",
                (Verdict::Keep, _) => "keep",
                (Verdict::Drop, _) => "drop",
            };
            out.push_str(&format!(
                "{:<18} {:>6} {:>10} {:>12.3e}  {}\n",
                r.factor, r.n, w, r.p_value, verdict
            ));
        }
        out.push_str(&format!("retained ({}): {}\n", self.retained.len(), self.retained.join(", ")));
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["factor", "n", "w", "p_value", "degenerate", "verdict"])?;
        for r in &self.results {
            csv.write_record([
                r.factor.clone(),
                r.n.to_string(),
                r.w.map_or_else(String::new, |w| w.to_string()),
                r.p_value.to_string(),
                r.degenerate.to_string(),
                match r.verdict {
                    Verdict::Keep => "keep".into(),
                    Verdict::Drop => "drop".into(),
                },
            ])?;
        }
        csv.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Tests every factor column; keeps those with `p > alpha` that are not constant.
pub fn screen(dataset: &EncodedDataset, alpha: f64) -> Result<ScreeningReport> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if dataset.is_empty() {
        return Err(Error::TooFewVectors { got: 0, need: MIN_N });
    }
    let mut results = Vec::with_capacity(dataset.dimension());
    for (j, name) in dataset.factors.iter().enumerate() {
        let t = shapiro_wilk(&dataset.column(j))?;
        let keep = !t.degenerate && t.p_value > alpha;
        results.push(SwResult {
            factor: name.clone(),
            n: t.n,
            w: t.w,
            p_value: t.p_value,
            degenerate: t.degenerate,
            verdict: if keep { Verdict::Keep } else { Verdict::Drop },
        });
    }
    let retained = results
        .iter()
        .filter(|r| r.verdict == Verdict::Keep)
        .map(|r| r.factor.clone())
        .collect();
    Ok(ScreeningReport {
        alpha,
        results,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n3_closed_form() {
        let a = sw_coefficients(3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(a, vec![-h, 0.0, h]);
    }

    #[test]
    fn antisymmetric_unit_norm() {
        for n in [3, 4, 5, 6, 7, 11, 12, 50, 51, 999, 5000] {
            let a = sw_coefficients(n).unwrap();
            let sum: f64 = a.iter().sum();
            let norm: f64 = a.iter().map(|v| v * v).sum();
            assert!(sum.abs() < 1e-12, "n={n} sum={sum}");
            assert!((norm - 1.0).abs() < 1e-8, "n={n} norm={norm}");
            for i in 0..n {
                assert_eq!(a[i], -a[n - 1 - i]);
            }
        }
    }

    #[test]
    fn size_limits() {
        assert!(matches!(sw_coefficients(2), Err(Error::UnsupportedSampleSize(2))));
        assert!(matches!(sw_coefficients(5001), Err(Error::UnsupportedSampleSize(5001))));
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
        assert!(matches!(shapiro_wilk(&[1.0, f64::NAN, 2.0]), Err(Error::NonFinite(1))));
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let t = shapiro_wilk(&[5.0; 5]).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.w, None);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn alpha_zero_keeps_all_non_degenerate() {
        use crate::encoding::FeatureVector;
        use crate::rating::Rating;
        let vectors = (0..40)
            .map(|i| FeatureVector {
                pipe_id: i.to_string(),
                ranks: vec![(i % 5 + 1) as u8, 3, if i < 20 { 1 } else { 5 }],
                label: Rating::new(1).unwrap(),
            })
            .collect();
        let ds = EncodedDataset {
            factors: vec!["a".into(), "b".into(), "c".into()],
            vectors,
            notes: vec![],
        };
        let report = screen(&ds, 0.0).unwrap();
        assert_eq!(report.retained, vec!["a".to_string(), "c".to_string()]);
        let strict = screen(&ds, 0.05).unwrap();
        assert!(strict.retained.is_empty());
    }
}
