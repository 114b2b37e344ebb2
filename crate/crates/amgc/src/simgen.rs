//! Synthetic read corpora with ground truth, and brute-force oracles.
//!
//! Start positions follow a locally linear trend: each read advances the
//! previous start by `0` (duplicate), by a uniform step in `1..=max_step`,
//! or is placed at a uniformly random position (jump noise, not followed by
//! the trend). Substitution errors follow a per-position curve that dips
//! slightly and then rises toward the read end, plus degraded trailing
//! segments in a minority of reads (see [`ErrorProfile`]).

use amgc_core::Strand;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-position substitution model.
///
/// Errors come from two sources. A baseline curve applies to every read. On
/// top of it, a minority of reads carry a degraded trailing segment: from a
/// uniformly drawn onset in `[ceil(knee * L), L)` to the read end, every
/// base is substituted with probability `degraded_rate`. The fraction of
/// degraded reads is chosen so that these segments hold `degraded_share` of
/// the error mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    /// Mean substitution probability per base over all reads and positions.
    pub mean_rate: f64,
    /// Baseline rate at the last position relative to the flat region.
    pub tail_gain: f64,
    /// Fraction of the read length where the rise begins.
    pub knee: f64,
    /// Share of the error mass carried by degraded trailing segments.
    pub degraded_share: f64,
    /// Substitution probability inside a degraded segment.
    pub degraded_rate: f64,
}

/// Error model resolved for one read length.
#[derive(Debug, Clone)]
struct LengthModel {
    baseline: Vec<f64>,
    degraded_fraction: f64,
    onset_min: usize,
}

impl ErrorProfile {
    pub fn none() -> Self {
        ErrorProfile {
            mean_rate: 0.0,
            ..Self::tail_biased(0.0)
        }
    }

    pub fn tail_biased(mean_rate: f64) -> Self {
        ErrorProfile {
            mean_rate,
            tail_gain: 2.0,
            knee: 0.6,
            degraded_share: 0.6,
            degraded_rate: 0.3,
        }
    }

    fn shape(&self, x: f64) -> f64 {
        if x <= self.knee {
            1.0 - 0.25 * x / self.knee
        } else {
            let t = (x - self.knee) / (1.0 - self.knee);
            0.75 + (self.tail_gain - 0.75) * t * t
        }
    }

    fn onset_min(&self, len: usize) -> usize {
        (self.knee * len as f64).ceil() as usize
    }

    /// Probability that a degraded segment covers position `p`.
    fn coverage(&self, len: usize, p: usize) -> f64 {
        let lo = self.onset_min(len);
        if lo >= len || p < lo {
            0.0
        } else {
            (p - lo + 1) as f64 / (len - lo) as f64
        }
    }

    fn resolve(&self, len: usize) -> Result<LengthModel> {
        let mean_cover = (0..len).map(|p| self.coverage(len, p)).sum::<f64>() / len as f64;
        let (share, degraded_fraction) = if mean_cover > 0.0 && self.degraded_rate > 0.0 {
            let f = self.degraded_share * self.mean_rate / (self.degraded_rate * mean_cover);
            (self.degraded_share, f)
        } else {
            (0.0, 0.0)
        };
        if degraded_fraction > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "degraded segments cannot carry {share} of a {} error rate at read length {len}",
                self.mean_rate
            )));
        }
        let raw: Vec<f64> = (0..len)
            .map(|i| {
                let x = if len > 1 {
                    i as f64 / (len - 1) as f64
                } else {
                    0.0
                };
                self.shape(x)
            })
            .collect();
        let raw_mean = raw.iter().sum::<f64>() / len as f64;
        let base_mean = (1.0 - share) * self.mean_rate;
        Ok(LengthModel {
            baseline: raw.into_iter().map(|r| base_mean * r / raw_mean).collect(),
            degraded_fraction,
            onset_min: self.onset_min(len),
        })
    }

    /// Expected substitution probability at each position of a read of
    /// `len` bases, averaged over reads.
    pub fn curve(&self, len: usize) -> Result<Vec<f64>> {
        let m = self.resolve(len)?;
        Ok((0..len)
            .map(|p| {
                m.baseline[p] + m.degraded_fraction * self.degraded_rate * self.coverage(len, p)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub read_len_min: usize,
    pub read_len_max: usize,
    pub count: usize,
    pub duplicate_rate: f64,
    pub jump_rate: f64,
    pub max_step: usize,
    pub errors: ErrorProfile,
    /// Fraction of reads whose final third is overwritten with substitutions
    /// at rate [`BURST_RATE`].
    pub burst_fraction: f64,
    pub revcomp_fraction: f64,
    /// Per-base probability of replacing a base with `N`.
    pub n_rate: f64,
    /// Fraction of reads made of uniformly random bases.
    pub random_fraction: f64,
}

pub const BURST_RATE: f64 = 0.5;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            read_len_min: 100,
            read_len_max: 100,
            count: 1000,
            duplicate_rate: 0.1,
            jump_rate: 0.01,
            max_step: 20,
            errors: ErrorProfile::tail_biased(0.01),
            burst_fraction: 0.0,
            revcomp_fraction: 0.0,
            n_rate: 0.0,
            random_fraction: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, ref_len: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let rates = [
            ("duplicate rate", self.duplicate_rate),
            ("jump rate", self.jump_rate),
            ("error rate", self.errors.mean_rate),
            ("degraded share", self.errors.degraded_share),
            ("degraded rate", self.errors.degraded_rate),
            ("burst fraction", self.burst_fraction),
            ("reverse-complement fraction", self.revcomp_fraction),
            ("N rate", self.n_rate),
            ("random fraction", self.random_fraction),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return bad(&format!("{name} must be within [0, 1]"));
            }
        }
        if self.duplicate_rate + self.jump_rate > 1.0 {
            return bad("duplicate rate + jump rate must not exceed 1");
        }
        if self.read_len_min == 0 || self.read_len_min > self.read_len_max {
            return bad("read length range must satisfy 1 <= min <= max");
        }
        if self.read_len_max > ref_len {
            return bad("reads cannot be longer than the reference");
        }
        if self.max_step == 0 {
            return bad("max step must be positive");
        }
        if !(0.0..1.0).contains(&self.errors.knee) || self.errors.tail_gain < 0.0 {
            return bad("error curve needs knee in [0, 1) and a nonnegative tail gain");
        }
        for len in self.read_len_min..=self.read_len_max {
            self.errors.resolve(len)?;
        }
        Ok(())
    }
}

/// One generated read and how it was made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRead {
    pub bases: Vec<u8>,
    /// Forward coordinate of the leftmost reference base sampled.
    pub start: u32,
    pub strand: Strand,
    /// Placed by jump noise (outside the trend).
    pub noise: bool,
    /// The trend wrapped around the reference end at this read.
    pub wrapped: bool,
    /// Made of random bases; `start`/`strand` are meaningless.
    pub random: bool,
    pub burst: bool,
    /// Start of the degraded trailing segment, if any.
    pub degraded_from: Option<u32>,
    /// Substituted offsets in read order.
    pub errors: Vec<u32>,
    /// Offsets replaced by `N`.
    pub n_positions: Vec<u32>,
}

/// Uniform random ACGT sequence.
pub fn random_reference(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect()
}

fn substitute(rng: &mut ChaCha8Rng, b: u8) -> u8 {
    let others: Vec<u8> = b"ACGT".iter().copied().filter(|&c| c != b).collect();
    others[rng.random_range(0..others.len())]
}

/// Generates a corpus from uppercase reference bases. Deterministic in
/// `seed`.
pub fn generate(reference: &[u8], config: &SimConfig, seed: u64) -> Result<Vec<SimRead>> {
    config.validate(reference.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models: Vec<Option<LengthModel>> = vec![None; config.read_len_max + 1];
    let mut trend = 0usize;
    let mut reads = Vec::with_capacity(config.count);

    for i in 0..config.count {
        let len = rng.random_range(config.read_len_min..=config.read_len_max);
        let span = reference.len() - len + 1;
        let u: f64 = rng.random();
        let mut noise = false;
        let mut wrapped = false;
        let start = if i > 0 && u < config.duplicate_rate {
            trend %= span;
            trend
        } else if i > 0 && u < config.duplicate_rate + config.jump_rate {
            noise = true;
            rng.random_range(0..span)
        } else {
            if i > 0 {
                trend += rng.random_range(1..=config.max_step);
            }
            if trend >= span {
                trend %= span;
                wrapped = true;
            }
            trend
        };

        let strand = if rng.random_bool(config.revcomp_fraction) {
            Strand::Reverse
        } else {
            Strand::Forward
        };
        let random = rng.random_bool(config.random_fraction);
        let mut bases: Vec<u8> = if random {
            (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect()
        } else {
            let w: Vec<u8> = reference[start..start + len]
                .iter()
                .map(|b| match b.to_ascii_uppercase() {
                    c @ (b'A' | b'C' | b'G' | b'T') => c,
                    _ => b'N',
                })
                .collect();
            match strand {
                Strand::Forward => w,
                Strand::Reverse => reverse_complement_ascii(&w),
            }
        };

        let model = match &mut models[len] {
            Some(m) => m,
            slot => slot.insert(config.errors.resolve(len)?),
        };
        let degraded_from = if rng.random_bool(model.degraded_fraction) {
            Some(rng.random_range(model.onset_min..len))
        } else {
            None
        };
        let burst = rng.random_bool(config.burst_fraction);
        let burst_from = len - len / 3;
        let mut errors = Vec::new();
        for (p, b) in bases.iter_mut().enumerate() {
            let mut rate = model.baseline[p].min(0.75);
            if degraded_from.is_some_and(|d| p >= d) {
                rate = config.errors.degraded_rate;
            }
            if burst && p >= burst_from {
                rate = BURST_RATE;
            }
            if *b != b'N' && rng.random_bool(rate) {
                *b = substitute(&mut rng, *b);
                errors.push(p as u32);
            }
        }
        let mut n_positions = Vec::new();
        if config.n_rate > 0.0 {
            for (p, b) in bases.iter_mut().enumerate() {
                if rng.random_bool(config.n_rate) {
                    *b = b'N';
                    n_positions.push(p as u32);
                }
            }
        }
        reads.push(SimRead {
            bases,
            start: start as u32,
            strand,
            noise,
            wrapped,
            random,
            burst,
            degraded_from: degraded_from.map(|d| d as u32),
            errors,
            n_positions,
        });
    }
    Ok(reads)
}

fn reverse_complement_ascii(w: &[u8]) -> Vec<u8> {
    w.iter()
        .rev()
        .map(|&b| match b {
            b'A' => b'T',
            b'C' => b'G',
            b'G' => b'C',
            b'T' => b'A',
            other => other,
        })
        .collect()
}

/// Writes reads as FASTQ with synthetic identifiers and constant qualities.
pub fn write_fastq<W: std::io::Write>(out: &mut W, reads: &[SimRead]) -> std::io::Result<()> {
    for (i, r) in reads.iter().enumerate() {
        writeln!(out, "@sim.{i} start={} strand={:?}", r.start, r.strand)?;
        out.write_all(&r.bases)?;
        out.write_all(b"\n+\n")?;
        out.write_all(&vec![b'I'; r.bases.len()])?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Result of an exhaustive alignment scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteHit {
    pub refpos: u32,
    pub strand: Strand,
    pub mismatches: Vec<u32>,
}

/// Scans every reference position on both strands for the placement with
/// fewest mismatches, breaking ties by lower position, then forward strand.
/// `N` in the read never matches; reference symbols outside `ACGT` compare
/// as `A`. `None` if every placement exceeds `threshold`.
pub fn brute_force_align(read: &[u8], reference: &[u8], threshold: usize) -> Option<BruteHit> {
    let l = read.len();
    if l == 0 || l > reference.len() {
        return None;
    }
    let code = |b: u8| match b.to_ascii_uppercase() {
        b'C' => 1u8,
        b'G' => 2,
        b'T' => 3,
        _ => 0,
    };
    let ref_codes: Vec<u8> = reference.iter().map(|&b| code(b)).collect();
    let read_codes: Vec<u8> = read
        .iter()
        .map(|&b| if b == b'N' { 4 } else { code(b) })
        .collect();
    let comp = |c: u8| if c < 4 { 3 - c } else { 4 };
    let rc_codes: Vec<u8> = read_codes.iter().rev().map(|&c| comp(c)).collect();
    let mut best: Option<(usize, u32, Strand)> = None;
    for pos in 0..=reference.len() - l {
        for (strand, oriented) in [(Strand::Forward, &read_codes), (Strand::Reverse, &rc_codes)] {
            let limit = best.map_or(threshold, |b| b.0.min(threshold));
            let mut m = 0;
            for (i, &c) in oriented.iter().enumerate() {
                if c != ref_codes[pos + i] {
                    m += 1;
                    if m > limit {
                        break;
                    }
                }
            }
            let cand = (m, pos as u32, strand);
            if m <= limit && best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
    }
    let (_, refpos, strand) = best?;
    let mismatches = (0..l)
        .filter(|&i| {
            let expected = match strand {
                Strand::Forward => ref_codes[refpos as usize + i],
                Strand::Reverse => comp(ref_codes[refpos as usize + l - 1 - i]),
            };
            read_codes[i] != expected
        })
        .map(|i| i as u32)
        .collect();
    Some(BruteHit {
        refpos,
        strand,
        mismatches,
    })
}

/// Shannon bound `sum(-c_i * log2(c_i / total))` in bits.
pub fn entropy_bound(hist: &[u64]) -> Result<f64> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("empty histogram".into()));
    }
    let t = total as f64;
    Ok(hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| -(c as f64) * (c as f64 / t).log2())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_bound(&[1000]).unwrap(), 0.0);
        assert!((entropy_bound(&[500, 500]).unwrap() - 1000.0).abs() < 1e-9);
        let h = 0.05f64;
        let closed = 1000.0 * (-h * h.log2() - (1.0 - h) * (1.0 - h).log2());
        let got = entropy_bound(&[950, 50]).unwrap();
        assert!((got - closed).abs() < 1e-9);
        assert!((got - 286.4).abs() < 0.05);
        assert!(entropy_bound(&[]).is_err());
        assert!(entropy_bound(&[0, 0]).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let r = random_reference(2000, 1);
        let hit = brute_force_align(&r[700..800], &r, 10).unwrap();
        assert_eq!((hit.refpos, hit.strand), (700, Strand::Forward));
        assert!(hit.mismatches.is_empty());

        let mut read = r[300..400].to_vec();
        read[10] = substitute(&mut ChaCha8Rng::seed_from_u64(0), read[10]);
        read[90] = b'N';
        let hit = brute_force_align(&read, &r, 10).unwrap();
        assert_eq!(hit.refpos, 300);
        assert_eq!(hit.mismatches, [10, 90]);

        let rc = reverse_complement_ascii(&r[50..150]);
        let hit = brute_force_align(&rc, &r, 0).unwrap();
        assert_eq!((hit.refpos, hit.strand), (50, Strand::Reverse));

        let absent = random_reference(100, 99);
        assert!(brute_force_align(&absent, &r, 5).is_none());
    }

    #[test]
    fn generator_examples() {
        let r = random_reference(5000, 3);
        let cfg = SimConfig {
            duplicate_rate: 1.0,
            jump_rate: 0.0,
            count: 50,
            ..SimConfig::default()
        };
        let reads = generate(&r, &cfg, 1).unwrap();
        assert!(reads.iter().all(|x| x.start == reads[0].start));

        let cfg = SimConfig {
            errors: ErrorProfile::none(),
            count: 200,
            ..SimConfig::default()
        };
        let reads = generate(&r, &cfg, 2).unwrap();
        for x in &reads {
            let s = x.start as usize;
            assert_eq!(x.bases, &r[s..s + x.bases.len()]);
        }

        let cfg = SimConfig {
            revcomp_fraction: 0.5,
            n_rate: 0.01,
            burst_fraction: 0.2,
            read_len_min: 30,
            read_len_max: 180,
            ..SimConfig::default()
        };
        let a = generate(&r, &cfg, 7).unwrap();
        let b = generate(&r, &cfg, 7).unwrap();
        assert_eq!(a, b);
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        write_fastq(&mut fa, &a).unwrap();
        write_fastq(&mut fb, &b).unwrap();
        assert_eq!(fa, fb);
    }

    #[test]
    fn curve_mean_and_shape() {
        let p = ErrorProfile::tail_biased(0.01);
        for len in [1, 2, 40, 100, 151] {
            let c = p.curve(len).unwrap();
            let mean = c.iter().sum::<f64>() / len as f64;
            assert!((mean - 0.01).abs() < 1e-12, "len {len}");
        }
        let c = p.curve(100).unwrap();
        assert!(c[30] < c[0]);
        assert!(c[99] > 4.0 * c[0]);
        assert!(c[75..].windows(2).all(|w| w[1] > w[0]));
        assert!(ErrorProfile::tail_biased(0.2).curve(100).is_err());
    }

    #[test]
    fn invalid_configs() {
        let r = random_reference(100, 0);
        let bad = [
            SimConfig {
                duplicate_rate: 1.5,
                ..SimConfig::default()
            },
            SimConfig {
                read_len_min: 0,
                ..SimConfig::default()
            },
            SimConfig {
                read_len_max: 500,
                ..SimConfig::default()
            },
            SimConfig {
                max_step: 0,
                ..SimConfig::default()
            },
        ];
        for c in bad {
            assert!(matches!(
                generate(&r, &c, 0),
                Err(Error::InvalidParameter(_))
            ));
        }
    }
}
