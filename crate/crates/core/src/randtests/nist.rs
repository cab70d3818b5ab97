use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{TestKind, TestParams, TestSpec, TEMPLATE_BLOCKS};
use crate::error::{Error, Result};
use crate::specfun::{erfc, igamc};
use crate::{BitSequence, Probability};

pub(super) struct RawOutcome {
    pub statistic: f64,
    pub p_value: Probability,
    pub note: Option<String>,
    pub params: TestParams,
}

/// NIST class layout for the longest-run-of-ones test.
#[derive(Clone, Debug, PartialEq)]
pub struct LongestRunTable {
    pub block: usize,
    /// Runs `<= low` fall in the first class.
    pub low: usize,
    /// Runs `>= high` fall in the last class.
    pub high: usize,
    pub probs: &'static [f64],
    pub min_length: usize,
}

impl LongestRunTable {
    pub fn classes(&self) -> usize {
        self.high - self.low + 1
    }

    pub fn class_of(&self, run: usize) -> usize {
        run.clamp(self.low, self.high) - self.low
    }

    /// Table for a sequence of length `n`.
    pub fn for_length(n: usize) -> Result<Self> {
        match n {
            0..=127 => Err(Error::InsufficientData { needed: 128, got: n }),
            128..=6271 => longest_run_table(8),
            6272..=749_999 => longest_run_table(128),
            _ => longest_run_table(10_000),
        }
    }
}

pub fn longest_run_table(block: usize) -> Result<LongestRunTable> {
    match block {
        8 => Ok(LongestRunTable {
            block,
            low: 1,
            high: 4,
            probs: &[0.2148, 0.3672, 0.2305, 0.1875],
            min_length: 128,
        }),
        128 => Ok(LongestRunTable {
            block,
            low: 4,
            high: 9,
            probs: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
            min_length: 6272,
        }),
        10_000 => Ok(LongestRunTable {
            block,
            low: 10,
            high: 16,
            probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
            min_length: 750_000,
        }),
        _ => Err(Error::Domain(format!(
            "longest-run block {block} is not one of 8, 128, 10000"
        ))),
    }
}

fn base_params(spec: &TestSpec, n: usize) -> TestParams {
    TestParams {
        alpha: spec.alpha,
        length: n,
        block_size: None,
        blocks: None,
        template: None,
        pattern_order: None,
    }
}

fn chi_p(df: f64, chi2: f64) -> Probability {
    Probability::clamped(igamc(df / 2.0, chi2.max(0.0) / 2.0))
}

pub(super) fn evaluate(spec: &TestSpec, x: &BitSequence) -> Result<RawOutcome> {
    let n = x.len();
    let bits = x.as_slice();
    let mut params = base_params(spec, n);
    let mut note = None;
    let (statistic, p) = match spec.kind {
        TestKind::Frequency => {
            let s = frequency_statistic(bits);
            (s, Probability::clamped(erfc(s.abs() / std::f64::consts::SQRT_2)))
        }
        TestKind::BlockFrequency => {
            let m = spec.block_size.expect("validated");
            let blocks = n / m;
            if blocks == 0 {
                return Err(Error::InsufficientData { needed: m, got: n });
            }
            let chi2: f64 = bits
                .chunks_exact(m)
                .map(|b| {
                    let pi = b.iter().map(|&v| v as f64).sum::<f64>() / m as f64;
                    (pi - 0.5) * (pi - 0.5)
                })
                .sum::<f64>()
                * 4.0
                * m as f64;
            params.block_size = Some(m);
            params.blocks = Some(blocks);
            (chi2, chi_p(blocks as f64, chi2))
        }
        TestKind::Runs => {
            let pi = x.count_ones() as f64 / n as f64;
            let v = (x.transitions() + 1) as f64;
            if (pi - 0.5).abs() >= 2.0 / (n as f64).sqrt() {
                note = Some("frequency pre-test failed; P-value set to 0".into());
                (v, Probability::zero())
            } else {
                let q = pi * (1.0 - pi);
                let num = (v - 2.0 * n as f64 * q).abs();
                let den = 2.0 * (2.0 * n as f64).sqrt() * q;
                (v, Probability::clamped(erfc(num / den)))
            }
        }
        TestKind::LongestRun => {
            let table = match spec.block_size {
                Some(m) => longest_run_table(m)?,
                None => LongestRunTable::for_length(n)?,
            };
            let blocks = n / table.block;
            if blocks == 0 {
                return Err(Error::InsufficientData {
                    needed: table.block,
                    got: n,
                });
            }
            let mut counts = vec![0usize; table.classes()];
            for b in bits.chunks_exact(table.block) {
                counts[table.class_of(longest_run_of_ones(b))] += 1;
            }
            let nb = blocks as f64;
            let chi2: f64 = counts
                .iter()
                .zip(table.probs)
                .map(|(&v, &pi)| (v as f64 - nb * pi).powi(2) / (nb * pi))
                .sum();
            params.block_size = Some(table.block);
            params.blocks = Some(blocks);
            (chi2, chi_p((table.classes() - 1) as f64, chi2))
        }
        TestKind::Dft => {
            let d = dft_statistic(bits);
            (d, Probability::clamped(erfc(d.abs() / std::f64::consts::SQRT_2)))
        }
        TestKind::NonOverlappingTemplate => {
            let t = spec.template_or_default();
            let m = t.len();
            let block = n / TEMPLATE_BLOCKS;
            if block < m {
                return Err(Error::InsufficientData {
                    needed: TEMPLATE_BLOCKS * m,
                    got: n,
                });
            }
            let mu = (block - m + 1) as f64 / 2f64.powi(m as i32);
            let var = block as f64 * (1.0 / 2f64.powi(m as i32) - (2 * m - 1) as f64 / 2f64.powi(2 * m as i32));
            let chi2: f64 = bits
                .chunks_exact(block)
                .take(TEMPLATE_BLOCKS)
                .map(|b| (non_overlapping_count(b, t.as_slice()) as f64 - mu).powi(2) / var)
                .sum();
            params.block_size = Some(block);
            params.blocks = Some(TEMPLATE_BLOCKS);
            params.template = Some(t);
            (chi2, chi_p(TEMPLATE_BLOCKS as f64, chi2))
        }
        TestKind::ApproximateEntropy => {
            let m = spec.pattern_order.expect("validated");
            let apen = phi(bits, m) - phi(bits, m + 1);
            let chi2 = 2.0 * n as f64 * (std::f64::consts::LN_2 - apen);
            params.pattern_order = Some(m);
            (chi2, chi_p(2f64.powi(m as i32), chi2))
        }
        TestKind::Serial1 | TestKind::Serial2 => {
            let m = spec.pattern_order.expect("validated");
            let p0 = psi_sq(bits, m);
            let p1 = psi_sq(bits, m - 1);
            let p2 = psi_sq(bits, m - 2);
            params.pattern_order = Some(m);
            if spec.kind == TestKind::Serial1 {
                let d = p0 - p1;
                (d, chi_p(2f64.powi(m as i32 - 1), d))
            } else {
                let d = p0 - 2.0 * p1 + p2;
                (d, chi_p(2f64.powi(m as i32 - 2), d))
            }
        }
    };
    Ok(RawOutcome {
        statistic,
        p_value: p,
        note,
        params,
    })
}

/// `S = sum(2x - 1) / sqrt(n)`.
pub(super) fn frequency_statistic(bits: &[u8]) -> f64 {
    let s: i64 = bits.iter().map(|&b| 2 * b as i64 - 1).sum();
    s as f64 / (bits.len() as f64).sqrt()
}

pub(super) fn longest_run_of_ones(bits: &[u8]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for &b in bits {
        if b == 1 {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Non-overlapping occurrences: after a hit the window jumps past it.
pub(super) fn non_overlapping_count(bits: &[u8], template: &[u8]) -> usize {
    let m = template.len();
    let mut i = 0;
    let mut count = 0;
    while i + m <= bits.len() {
        if &bits[i..i + m] == template {
            count += 1;
            i += m;
        } else {
            i += 1;
        }
    }
    count
}

/// Counts of every `k`-bit pattern over the cyclically extended sequence.
pub(super) fn cyclic_pattern_counts(bits: &[u8], k: usize) -> Vec<u64> {
    let n = bits.len();
    let mut counts = vec![0u64; 1 << k];
    if k == 0 {
        counts[0] = n as u64;
        return counts;
    }
    let mask = (1usize << k) - 1;
    let mut code = 0usize;
    for i in 0..k - 1 {
        code = (code << 1) | bits[i % n] as usize;
    }
    for i in 0..n {
        code = ((code << 1) | bits[(i + k - 1) % n] as usize) & mask;
        counts[code] += 1;
    }
    counts
}

fn phi(bits: &[u8], m: usize) -> f64 {
    let n = bits.len() as f64;
    cyclic_pattern_counts(bits, m)
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

/// `psi^2_k = 2^k / n * sum(nu^2) - n`, zero for `k <= 0`.
pub(super) fn psi_sq(bits: &[u8], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = cyclic_pattern_counts(bits, k)
        .into_iter()
        .map(|c| (c as f64).powi(2))
        .sum();
    2f64.powi(k as i32) / n * sum - n
}

/// Normalized peak-count deviation of the spectral test.
pub(super) fn dft_statistic(bits: &[u8]) -> f64 {
    let n = bits.len();
    let mut buf: Vec<Complex<f64>> = bits.iter().map(|&b| Complex::new(2.0 * b as f64 - 1.0, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let threshold = ((1.0f64 / 0.05).ln() * n as f64).sqrt();
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let n0 = 0.95 * n as f64 / 2.0;
    (n1 - n0) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randtests::{run_test, TestSpec, Verdict};
    use approx::assert_relative_eq;

    fn spec(kind: TestKind) -> TestSpec {
        TestSpec::new(kind, 0.01).unwrap().without_min_length()
    }

    fn seq(s: &str) -> BitSequence {
        s.parse().unwrap()
    }

    const EPSILON_100: &str =
        "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

    #[test]
    fn frequency_examples() {
        let o = run_test(&spec(TestKind::Frequency), &seq("1011010101")).unwrap();
        assert_relative_eq!(o.statistic, 0.632455532, epsilon = 1e-8);
        assert_relative_eq!(o.p_value.value(), 0.527089, epsilon = 1e-6);
        let o = run_test(&spec(TestKind::Frequency), &seq("0101010101")).unwrap();
        assert_eq!(o.statistic, 0.0);
        assert_eq!(o.p_value.value(), 1.0);
        let zeros = BitSequence::from_bits(vec![0; 100]).unwrap();
        let o = run_test(&TestSpec::new(TestKind::Frequency, 0.05).unwrap(), &zeros).unwrap();
        assert!(o.p_value.value() < 1e-20);
        assert_eq!(o.verdict, Verdict::Reject);
    }

    #[test]
    fn nist_reference_vectors() {
        // Worked examples from the NIST SP 800-22 test descriptions.
        let e = seq(EPSILON_100);
        assert_relative_eq!(
            run_test(&spec(TestKind::Frequency), &e).unwrap().p_value.value(),
            0.109599,
            epsilon = 1e-6
        );
        let mut bf = spec(TestKind::BlockFrequency);
        bf.block_size = Some(10);
        assert_relative_eq!(run_test(&bf, &e).unwrap().p_value.value(), 0.706438, epsilon = 1e-6);
        assert_relative_eq!(
            run_test(&spec(TestKind::Runs), &e).unwrap().p_value.value(),
            0.500798,
            epsilon = 1e-6
        );
        let mut ap = spec(TestKind::ApproximateEntropy);
        ap.pattern_order = Some(2);
        assert_relative_eq!(run_test(&ap, &e).unwrap().p_value.value(), 0.235301, epsilon = 1e-6);
        let mut bf3 = spec(TestKind::BlockFrequency);
        bf3.block_size = Some(3);
        assert_relative_eq!(
            run_test(&bf3, &seq("0110011010")).unwrap().p_value.value(),
            0.801252,
            epsilon = 1e-6
        );
        let mut ap1 = spec(TestKind::ApproximateEntropy);
        ap1.pattern_order = Some(3);
        assert_relative_eq!(
            run_test(&ap1, &seq("0100110101")).unwrap().p_value.value(),
            0.261961,
            epsilon = 1e-6
        );
        let mut s1 = spec(TestKind::Serial1);
        s1.pattern_order = Some(3);
        let mut s2 = spec(TestKind::Serial2);
        s2.pattern_order = Some(3);
        let x = seq("0011011101");
        assert_relative_eq!(run_test(&s1, &x).unwrap().p_value.value(), 0.808792, epsilon = 1e-6);
        assert_relative_eq!(run_test(&s2, &x).unwrap().p_value.value(), 0.670320, epsilon = 1e-6);
        assert_relative_eq!(
            run_test(&spec(TestKind::Runs), &seq("1001101011"))
                .unwrap()
                .p_value
                .value(),
            0.147232,
            epsilon = 1e-6
        );
    }

    #[test]
    fn longest_run_reference() {
        let s = "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100111001101101100010110010";
        let o = run_test(&spec(TestKind::LongestRun), &seq(s)).unwrap();
        assert_relative_eq!(o.statistic, 4.882605, epsilon = 1e-5);
        assert_relative_eq!(o.p_value.value(), 0.180598, epsilon = 1e-5);
    }

    #[test]
    fn dft_matches_naive_transform() {
        let naive = |bits: &[u8]| {
            let n = bits.len();
            let t = ((1.0f64 / 0.05).ln() * n as f64).sqrt();
            let n1 = (0..n / 2)
                .filter(|&j| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (k, &b) in bits.iter().enumerate() {
                        let w = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                        re += (2.0 * b as f64 - 1.0) * w.cos();
                        im += (2.0 * b as f64 - 1.0) * w.sin();
                    }
                    re.hypot(im) < t
                })
                .count() as f64;
            (n1 - 0.95 * n as f64 / 2.0) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt()
        };
        // All five half-spectrum magnitudes of this vector lie below the bound.
        assert_relative_eq!(dft_statistic(seq("1001010011").as_slice()), 0.725476, epsilon = 1e-6);
        let m = crate::MarkovBitModel::new(0.2).unwrap();
        for (len, s) in [(100, 1), (257, 2), (1000, 3)] {
            let x = m.generate(len, s);
            assert_relative_eq!(dft_statistic(x.as_slice()), naive(x.as_slice()), epsilon = 1e-9);
        }
    }

    #[test]
    fn template_counting() {
        let x = seq("10100100101110010110");
        assert_eq!(non_overlapping_count(&x.as_slice()[..10], &[0, 0, 1]), 2);
        assert_eq!(non_overlapping_count(&x.as_slice()[10..], &[0, 0, 1]), 1);
        assert_eq!(non_overlapping_count(&[1, 1, 1, 1, 1], &[1, 1]), 2);
    }

    #[test]
    fn runs_degenerate_input_is_flagged() {
        let ones = BitSequence::from_bits(vec![1; 200]).unwrap();
        let o = run_test(&spec(TestKind::Runs), &ones).unwrap();
        assert_eq!(o.p_value.value(), 0.0);
        assert!(o.note.is_some());
    }

    #[test]
    fn complement_invariance() {
        let x = crate::MarkovBitModel::new(0.1).unwrap().generate(2000, 5);
        let y = x.complement();
        for kind in [TestKind::Frequency, TestKind::Runs] {
            let a = run_test(&spec(kind), &x).unwrap();
            let b = run_test(&spec(kind), &y).unwrap();
            assert_relative_eq!(a.p_value.value(), b.p_value.value(), epsilon = 1e-14);
        }
        let a = run_test(&spec(TestKind::Runs), &x).unwrap();
        let b = run_test(&spec(TestKind::Runs), &y).unwrap();
        assert_eq!(a.statistic, b.statistic);
    }

    #[test]
    fn table_probabilities_sum_to_one() {
        for m in [8, 128, 10_000] {
            let t = longest_run_table(m).unwrap();
            assert_eq!(t.probs.len(), t.classes());
            assert!((t.probs.iter().sum::<f64>() - 1.0).abs() < 1e-3);
        }
        assert!(longest_run_table(64).is_err());
        assert_eq!(LongestRunTable::for_length(1_000_000).unwrap().block, 10_000);
    }
}
