//! Monte Carlo simulation of the full pipeline
//! `W -> X^n -> message -> channel input -> channel -> estimate`.
//!
//! Trials are split into fixed blocks; block `k` draws from ChaCha stream `k`
//! of the root seed and block sums are reduced in index order, so a run is
//! reproducible bit for bit regardless of how many threads execute it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::FiniteChannel;
use crate::error::{check_probability, Error, Result};
use crate::models::{Loss, ObservationModel, PriorKind};
use crate::numeric::binomial;

/// Trials per RNG block.
pub const BLOCK_TRIALS: u64 = 4096;
/// Miscoverage of the Hoeffding interval.
pub const CI_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum Parameter {
    Bit(u8),
    Signs(Vec<i8>),
    Real(f64),
}

/// One processor's samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Bit(u8),
    /// `d x n` signs, row-major by coordinate.
    Signs { d: usize, n: usize, values: Vec<i8> },
    /// Number of ones among `n` Bernoulli samples (sufficient for the interval model).
    Count { ones: u64, n: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Bit(u8),
    Signs(Vec<i8>),
    Real(f64),
    Vector(Vec<f64>),
}

/// A quantizer, a channel encoder and a remote estimator with their
/// declared budgets.
pub trait Protocol: Send + Sync {
    fn name(&self) -> &str;
    /// Message size `b` in bits.
    fn bits(&self) -> u32;
    /// Channel uses `T` per processor.
    fn blocklength(&self) -> usize;
    fn processors(&self) -> usize {
        1
    }
    /// Message index in `0..2^b`.
    fn quantize(&self, obs: &Observation) -> Result<u64>;
    /// Channel input of length exactly `T`.
    fn encode(&self, message: u64) -> Vec<usize>;
    /// Estimate from every processor's channel output.
    fn estimate(&self, received: &[Vec<usize>]) -> Estimate;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean_risk: f64,
    pub trials: u64,
    pub seed: u64,
    pub ci_halfwidth: f64,
    pub loss_range: f64,
}

impl RiskEstimate {
    pub fn upper(&self) -> f64 {
        self.mean_risk + self.ci_halfwidth
    }

    pub fn lower(&self) -> f64 {
        self.mean_risk - self.ci_halfwidth
    }

    /// `risk + ci >= bound`.
    pub fn certifies(&self, lower_bound: f64) -> bool {
        self.upper() >= lower_bound
    }
}

/// Hoeffding half-width `range sqrt(ln(2/alpha) / (2 trials))`.
pub fn hoeffding_halfwidth(range: f64, trials: u64) -> f64 {
    range * ((2.0 / CI_ALPHA).ln() / (2.0 * trials as f64)).sqrt()
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Draw the parameter from the prior.
pub fn sample_parameter<R: Rng + ?Sized>(model: &ObservationModel, rng: &mut R) -> Parameter {
    match model.prior.kind {
        PriorKind::Bit => Parameter::Bit(rng.random_range(0..2)),
        PriorKind::Hypercube { d } => {
            Parameter::Signs((0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
        }
        PriorKind::Interval => Parameter::Real(rng.random()),
    }
}

/// Draw one processor's samples given the parameter.
pub fn sample_observation<R: Rng + ?Sized>(model: &ObservationModel, w: &Parameter, rng: &mut R) -> Result<Observation> {
    match (model.prior.kind, w) {
        (PriorKind::Bit, Parameter::Bit(bit)) => Ok(Observation::Bit(*bit)),
        (PriorKind::Hypercube { d }, Parameter::Signs(signs)) => {
            let n = model.n as usize;
            let flip = model.sample_crossover();
            let mut values = Vec::with_capacity(d as usize * n);
            for &s in signs {
                values.extend((0..n).map(|_| if rng.random::<f64>() < flip { -s } else { s }));
            }
            Ok(Observation::Signs {
                d: d as usize,
                n,
                values,
            })
        }
        (PriorKind::Interval, Parameter::Real(p)) => {
            let n = model.n as u64;
            let ones = Binomial::new(n, *p)
                .map_err(|_| Error::Domain {
                    name: "w",
                    value: *p,
                    expected: "[0, 1]",
                })?
                .sample(rng);
            Ok(Observation::Count { ones, n })
        }
        _ => Err(Error::Incompatible("parameter does not match the prior".into())),
    }
}

/// Loss of `estimate` against the true parameter.
pub fn evaluate_loss(model: &ObservationModel, w: &Parameter, estimate: &Estimate) -> Result<f64> {
    match (model.prior.loss, w, estimate) {
        (Loss::ZeroOne, Parameter::Bit(a), Estimate::Bit(b)) => Ok(if a == b { 0.0 } else { 1.0 }),
        (Loss::HammingCount | Loss::HammingNormalized, Parameter::Signs(a), Estimate::Signs(b)) if a.len() == b.len() => {
            let count = a.iter().zip(b).filter(|(x, y)| x != y).count() as f64;
            Ok(if model.prior.loss == Loss::HammingCount {
                count
            } else {
                count / a.len() as f64
            })
        }
        (Loss::Absolute, Parameter::Real(a), Estimate::Real(b)) => Ok((a - b).abs()),
        (Loss::SquaredMean, Parameter::Signs(a), Estimate::Vector(b)) if a.len() == b.len() => Ok(a
            .iter()
            .zip(b)
            .map(|(&s, e)| (model.delta * s as f64 - e).powi(2))
            .sum()),
        _ => Err(Error::Incompatible(format!(
            "estimate {estimate:?} cannot be scored with {:?} loss",
            model.prior.loss
        ))),
    }
}

fn one_trial<R: Rng + ?Sized>(
    model: &ObservationModel,
    protocol: &dyn Protocol,
    channel: &FiniteChannel,
    rng: &mut R,
) -> Result<f64> {
    let w = sample_parameter(model, rng);
    let limit = 1u128 << protocol.bits().min(127);
    let mut received = Vec::with_capacity(protocol.processors());
    for _ in 0..protocol.processors() {
        let obs = sample_observation(model, &w, rng)?;
        let message = protocol.quantize(&obs)?;
        if message as u128 >= limit {
            return Err(Error::Dimension(format!(
                "message {message} does not fit in {} bits",
                protocol.bits()
            )));
        }
        let input = protocol.encode(message);
        if input.len() != protocol.blocklength() {
            return Err(Error::Dimension(format!(
                "encoder produced {} symbols, declared T = {}",
                input.len(),
                protocol.blocklength()
            )));
        }
        let output = input
            .iter()
            .map(|&u| channel.sample_output(u, rng))
            .collect::<Result<Vec<usize>>>()?;
        received.push(output);
    }
    evaluate_loss(model, &w, &protocol.estimate(&received))
}

/// Monte Carlo Bayes risk of `protocol` over `channel`.
pub fn run_pipeline(
    model: &ObservationModel,
    protocol: &dyn Protocol,
    channel: &FiniteChannel,
    trials: u64,
    seed: u64,
) -> Result<RiskEstimate> {
    if trials == 0 {
        return Err(Error::Domain {
            name: "trials",
            value: 0.0,
            expected: "a positive integer",
        });
    }
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let sums = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = block_rng(seed, block);
            let count = BLOCK_TRIALS.min(trials - block * BLOCK_TRIALS);
            let mut sum = 0.0;
            for _ in 0..count {
                sum += one_trial(model, protocol, channel, &mut rng)?;
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = sums.iter().sum();
    let range = model.loss_range();
    Ok(RiskEstimate {
        mean_risk: total / trials as f64,
        trials,
        seed,
        ci_halfwidth: hoeffding_halfwidth(range, trials),
        loss_range: range,
    })
}

fn to_bits(message: u64, bits: u32) -> Vec<usize> {
    (0..bits).rev().map(|i| ((message >> i) & 1) as usize).collect()
}

fn from_bits(symbols: &[usize]) -> u64 {
    symbols.iter().fold(0, |acc, &s| (acc << 1) | (s as u64 & 1))
}

/// One bit repeated `T` times, decoded by majority with ties going to 0.
#[derive(Debug, Clone)]
pub struct RepetitionBitScheme {
    blocklength: usize,
}

pub fn repetition_bit_scheme(blocklength: usize) -> RepetitionBitScheme {
    RepetitionBitScheme { blocklength }
}

impl Protocol for RepetitionBitScheme {
    fn name(&self) -> &str {
        "repetition"
    }

    fn bits(&self) -> u32 {
        1
    }

    fn blocklength(&self) -> usize {
        self.blocklength
    }

    fn quantize(&self, obs: &Observation) -> Result<u64> {
        match obs {
            Observation::Bit(b) => Ok(*b as u64),
            other => Err(Error::Incompatible(format!("repetition scheme needs a bit, got {other:?}"))),
        }
    }

    fn encode(&self, message: u64) -> Vec<usize> {
        vec![message as usize; self.blocklength]
    }

    fn estimate(&self, received: &[Vec<usize>]) -> Estimate {
        let ones = received[0].iter().filter(|&&s| s == 1).count();
        Estimate::Bit(u8::from(2 * ones > self.blocklength))
    }
}

/// Uniform `b`-bit quantization of the sample mean, sent uncoded over `b`
/// binary channel uses; the estimate is the cell midpoint.
#[derive(Debug, Clone)]
pub struct QuantizedMeanScheme {
    n: u32,
    bits: u32,
}

pub fn quantized_mean_scheme(n: u32, bits: u32) -> Result<QuantizedMeanScheme> {
    if n == 0 || bits == 0 || bits > 48 {
        return Err(Error::Domain {
            name: "n, b",
            value: bits as f64,
            expected: "n >= 1 and 1 <= b <= 48",
        });
    }
    Ok(QuantizedMeanScheme { n, bits })
}

impl QuantizedMeanScheme {
    fn cells(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn midpoint(&self, cell: u64) -> f64 {
        (cell as f64 + 0.5) / self.cells() as f64
    }

    pub fn cell_of(&self, mean: f64) -> u64 {
        ((mean * self.cells() as f64).floor() as u64).min(self.cells() - 1)
    }
}

impl Protocol for QuantizedMeanScheme {
    fn name(&self) -> &str {
        "quantized_mean"
    }

    fn bits(&self) -> u32 {
        self.bits
    }

    fn blocklength(&self) -> usize {
        self.bits as usize
    }

    fn quantize(&self, obs: &Observation) -> Result<u64> {
        match obs {
            Observation::Count { ones, n } if *n == self.n as u64 => Ok(self.cell_of(*ones as f64 / *n as f64)),
            other => Err(Error::Incompatible(format!(
                "quantized mean with n = {} cannot use {other:?}",
                self.n
            ))),
        }
    }

    fn encode(&self, message: u64) -> Vec<usize> {
        to_bits(message, self.bits)
    }

    fn estimate(&self, received: &[Vec<usize>]) -> Estimate {
        Estimate::Real(self.midpoint(from_bits(&received[0])))
    }
}

/// Sample sum sent with a random binary codebook and decoded by minimum
/// Hamming distance (maximum likelihood over a BSC with `eps < 1/2`).
#[derive(Debug, Clone)]
pub struct SampleSumScheme {
    n: u32,
    blocklength: usize,
    code_seed: u64,
    codebook: Vec<Vec<usize>>,
}

/// Limits of the exhaustive decoder.
pub const MAX_SUM_SAMPLES: u32 = 4095;
pub const MAX_SUM_BLOCKLENGTH: usize = 128;

pub fn sample_sum_scheme(n: u32, blocklength: usize, code_seed: u64) -> Result<SampleSumScheme> {
    if n == 0 || n > MAX_SUM_SAMPLES || blocklength > MAX_SUM_BLOCKLENGTH {
        return Err(Error::Budget(format!(
            "exhaustive decoding needs 1 <= n <= {MAX_SUM_SAMPLES} and T <= {MAX_SUM_BLOCKLENGTH}, got n = {n}, T = {blocklength}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(code_seed);
    let codebook = (0..=n)
        .map(|_| (0..blocklength).map(|_| rng.random_range(0..2)).collect())
        .collect();
    Ok(SampleSumScheme {
        n,
        blocklength,
        code_seed,
        codebook,
    })
}

impl SampleSumScheme {
    pub fn codebook(&self) -> &[Vec<usize>] {
        &self.codebook
    }

    pub fn code_seed(&self) -> u64 {
        self.code_seed
    }

    /// Index of the nearest codeword; ties go to the smallest index.
    pub fn decode(&self, word: &[usize]) -> u64 {
        let mut best = (usize::MAX, 0u64);
        for (i, code) in self.codebook.iter().enumerate() {
            let dist = code.iter().zip(word).filter(|(a, b)| a != b).count();
            if dist < best.0 {
                best = (dist, i as u64);
            }
        }
        best.1
    }

    /// Exact average decoding error over uniformly distributed messages on
    /// `BSC(eps)`, by summing over every error pattern (`T <= 20`).
    pub fn exact_decoding_error(&self, eps: f64) -> Result<f64> {
        check_probability("eps", eps)?;
        if self.blocklength > 20 {
            return Err(Error::Budget("exact decoding error needs T <= 20".into()));
        }
        let t = self.blocklength;
        let mut error = 0.0;
        for pattern in 0u32..(1u32 << t) {
            let flips = pattern.count_ones() as i32;
            let weight = eps.powi(flips) * (1.0 - eps).powi(t as i32 - flips);
            if weight == 0.0 {
                continue;
            }
            let wrong = self
                .codebook
                .iter()
                .enumerate()
                .filter(|(i, code)| {
                    let word: Vec<usize> = code
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| c ^ ((pattern >> k) & 1) as usize)
                        .collect();
                    self.decode(&word) != *i as u64
                })
                .count();
            error += weight * wrong as f64;
        }
        Ok(error / self.codebook.len() as f64)
    }
}

impl Protocol for SampleSumScheme {
    fn name(&self) -> &str {
        "sample_sum"
    }

    fn bits(&self) -> u32 {
        64 - (self.n as u64).leading_zeros()
    }

    fn blocklength(&self) -> usize {
        self.blocklength
    }

    fn quantize(&self, obs: &Observation) -> Result<u64> {
        match obs {
            Observation::Count { ones, n } if *n == self.n as u64 => Ok(*ones),
            other => Err(Error::Incompatible(format!("sample sum with n = {} cannot use {other:?}", self.n))),
        }
    }

    fn encode(&self, message: u64) -> Vec<usize> {
        self.codebook[message as usize].clone()
    }

    fn estimate(&self, received: &[Vec<usize>]) -> Estimate {
        if self.blocklength == 0 {
            return Estimate::Real(0.5);
        }
        Estimate::Real(self.decode(&received[0]) as f64 / self.n as f64)
    }
}

/// Every processor sends its `d` sample signs uncoded; the estimate of the
/// mean is the coordinate-wise average over processors.
#[derive(Debug, Clone)]
pub struct MultiprocSignScheme {
    m: usize,
    d: u32,
}

pub fn multiproc_sign_scheme(m: usize, d: u32) -> Result<MultiprocSignScheme> {
    if m == 0 || d == 0 || d > 63 {
        return Err(Error::Domain {
            name: "m, d",
            value: d as f64,
            expected: "m >= 1 and 1 <= d <= 63",
        });
    }
    Ok(MultiprocSignScheme { m, d })
}

impl Protocol for MultiprocSignScheme {
    fn name(&self) -> &str {
        "multiproc_sign"
    }

    fn bits(&self) -> u32 {
        self.d
    }

    fn blocklength(&self) -> usize {
        self.d as usize
    }

    fn processors(&self) -> usize {
        self.m
    }

    fn quantize(&self, obs: &Observation) -> Result<u64> {
        match obs {
            Observation::Signs { d, n: 1, values } if *d == self.d as usize => {
                Ok(values.iter().fold(0, |acc, &s| (acc << 1) | u64::from(s > 0)))
            }
            other => Err(Error::Incompatible(format!(
                "sign scheme needs one sample of dimension {}, got {other:?}",
                self.d
            ))),
        }
    }

    fn encode(&self, message: u64) -> Vec<usize> {
        to_bits(message, self.d)
    }

    fn estimate(&self, received: &[Vec<usize>]) -> Estimate {
        let mut mean = vec![0.0; self.d as usize];
        for word in received {
            for (acc, &s) in mean.iter_mut().zip(word) {
                *acc += if s == 1 { 1.0 } else { -1.0 };
            }
        }
        let m = received.len() as f64;
        Estimate::Vector(mean.into_iter().map(|s| s / m).collect())
    }
}

/// Ignores the data and always reports the same estimate.
#[derive(Debug, Clone)]
pub struct NoDataScheme {
    estimate: Estimate,
}

pub fn no_data_scheme(estimate: Estimate) -> NoDataScheme {
    NoDataScheme { estimate }
}

impl Protocol for NoDataScheme {
    fn name(&self) -> &str {
        "no_data"
    }

    fn bits(&self) -> u32 {
        0
    }

    fn blocklength(&self) -> usize {
        0
    }

    fn quantize(&self, _obs: &Observation) -> Result<u64> {
        Ok(0)
    }

    fn encode(&self, _message: u64) -> Vec<usize> {
        Vec::new()
    }

    fn estimate(&self, _received: &[Vec<usize>]) -> Estimate {
        self.estimate.clone()
    }
}

/// Exact error of majority decoding of a fair bit repeated `T` times over
/// `BSC(eps)`, with ties decoded as 0.
pub fn repetition_error_exact(eps: f64, blocklength: u32) -> Result<f64> {
    check_probability("eps", eps)?;
    let t = blocklength as u64;
    let pmf = |k: u64| binomial(t, k) * eps.powi(k as i32) * (1.0 - eps).powi((t - k) as i32);
    // sent 0: wrong when more than half flip; sent 1: wrong when at least half flip
    let above: f64 = (0..=t).filter(|&k| 2 * k > t).map(pmf).sum();
    let tie = if t % 2 == 0 { pmf(t / 2) } else { 0.0 };
    Ok(above + 0.5 * tie)
}

/// Smallest repetition blocklength whose exact error is at most `p_target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinBlocklength {
    pub blocklength: Option<u32>,
    pub lower: f64,
    pub repetition_upper: f64,
}

pub fn find_min_blocklength(eps: f64, p_target: f64, max_blocklength: u32) -> Result<MinBlocklength> {
    check_probability("eps", eps)?;
    check_probability("p", p_target)?;
    let (lower, repetition_upper) = match crate::bounds::cor1_blocklength_bounds(p_target, eps) {
        Ok(br) => (br.lower, br.repetition_upper),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let blocklength = if p_target >= 0.5 {
        Some(0)
    } else {
        let mut found = None;
        for t in 1..=max_blocklength {
            if repetition_error_exact(eps, t)? <= p_target {
                found = Some(t);
                break;
            }
        }
        found
    };
    Ok(MinBlocklength {
        blocklength,
        lower,
        repetition_upper,
    })
}
