//! Discrete memoryless channels as row-stochastic matrices.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::info::{kl_term_nats, FiniteDistribution, JointDistribution, MASS_TOLERANCE, RENORMALIZE_LIMIT};

/// Default limit on the number of input or output states of a product channel.
pub const DEFAULT_STATE_CAP: usize = 4096;

const CAPACITY_MAX_ITERATIONS: usize = 1_000_000;

/// Row-stochastic matrix; row `x` is the output law given input `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteChannel {
    inputs: usize,
    outputs: usize,
    matrix: Vec<f64>,
}

impl FiniteChannel {
    pub fn new(inputs: usize, outputs: usize, mut matrix: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || matrix.len() != inputs * outputs {
            return Err(Error::Dimension(format!(
                "{} entries do not form a {inputs}x{outputs} channel",
                matrix.len()
            )));
        }
        for (x, row) in matrix.chunks_mut(outputs).enumerate() {
            if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::InvalidDistribution(format!("row {x}: entry {bad}")));
            }
            let total: f64 = row.iter().sum();
            let deviation = (total - 1.0).abs();
            if deviation > RENORMALIZE_LIMIT {
                return Err(Error::InvalidDistribution(format!("row {x} has mass {total}")));
            }
            if deviation > MASS_TOLERANCE {
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
        Ok(Self { inputs, outputs, matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let outputs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::Dimension("ragged channel rows".into()));
        }
        Self::new(rows.len(), outputs, rows.concat())
    }

    pub fn identity(size: usize) -> Result<Self> {
        let mut matrix = vec![0.0; size * size];
        (0..size).for_each(|i| matrix[i * size + i] = 1.0);
        Self::new(size, size, matrix)
    }

    /// Every input produces the same output law.
    pub fn constant(inputs: usize, row: &FiniteDistribution) -> Result<Self> {
        Self::new(inputs, row.alphabet_size(), row.probs().repeat(inputs))
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        check_probability("eps", eps)?;
        Self::new(2, 2, vec![1.0 - eps, eps, eps, 1.0 - eps])
    }

    pub fn input_size(&self) -> usize {
        self.inputs
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.matrix[input * self.outputs..(input + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.outputs)
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.matrix[input * self.outputs + output]
    }

    /// Crossover probability if this is a binary symmetric channel.
    pub fn as_bsc(&self) -> Option<f64> {
        if self.inputs != 2 || self.outputs != 2 {
            return None;
        }
        let eps = self.get(0, 1);
        ((self.get(1, 0) - eps).abs() <= 1e-15).then_some(eps)
    }

    /// Output marginal `mu K`.
    pub fn push_forward(&self, mu: &FiniteDistribution) -> Result<FiniteDistribution> {
        if mu.alphabet_size() != self.inputs {
            return Err(Error::AlphabetMismatch {
                left: mu.alphabet_size(),
                right: self.inputs,
            });
        }
        FiniteDistribution::new(self.push_slice(mu.probs()))
    }

    pub(crate) fn push_slice(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        for (&p, row) in input.iter().zip(self.rows()) {
            if p != 0.0 {
                out.iter_mut().zip(row).for_each(|(o, k)| *o += p * k);
            }
        }
        out
    }

    /// Joint law of `(input, output)` when the input is drawn from `mu`.
    pub fn joint(&self, mu: &FiniteDistribution) -> Result<JointDistribution> {
        if mu.alphabet_size() != self.inputs {
            return Err(Error::AlphabetMismatch {
                left: mu.alphabet_size(),
                right: self.inputs,
            });
        }
        let probs = mu
            .probs()
            .iter()
            .zip(self.rows())
            .flat_map(|(&p, row)| row.iter().map(move |k| p * k))
            .collect();
        JointDistribution::new(self.inputs, self.outputs, probs)
    }

    /// Cascade `self` then `next`.
    pub fn compose(&self, next: &FiniteChannel) -> Result<FiniteChannel> {
        if self.outputs != next.inputs {
            return Err(Error::AlphabetMismatch {
                left: self.outputs,
                right: next.inputs,
            });
        }
        let matrix = self.rows().flat_map(|row| next.push_slice(row)).collect();
        FiniteChannel::new(self.inputs, next.outputs, matrix)
    }

    /// Tensor product; symbols are indexed row-major in `(self, other)`.
    pub fn product(&self, other: &FiniteChannel, cap: usize) -> Result<FiniteChannel> {
        let inputs = checked_states(self.inputs, other.inputs, cap)?;
        let outputs = checked_states(self.outputs, other.outputs, cap)?;
        let mut matrix = Vec::with_capacity(inputs * outputs);
        for r1 in self.rows() {
            for r2 in other.rows() {
                for &a in r1 {
                    matrix.extend(r2.iter().map(|&b| a * b));
                }
            }
        }
        Ok(FiniteChannel {
            inputs,
            outputs,
            matrix,
        })
    }

    /// `T` memoryless uses of the channel.
    pub fn t_fold(&self, uses: usize, cap: usize) -> Result<FiniteChannel> {
        if uses == 0 {
            return Err(Error::Domain {
                name: "T",
                value: 0.0,
                expected: "a positive integer",
            });
        }
        let mut out = self.clone();
        for _ in 1..uses {
            out = out.product(self, cap)?;
        }
        Ok(out)
    }

    /// Draw one output symbol for `input`.
    pub fn sample_output<R: Rng + ?Sized>(&self, input: usize, rng: &mut R) -> Result<usize> {
        if input >= self.inputs {
            return Err(Error::InvalidSymbol {
                symbol: input,
                size: self.inputs,
            });
        }
        Ok(sample_index(self.row(input), rng))
    }

    /// Blahut–Arimoto capacity in bits, stopped once the Arimoto bracket is
    /// narrower than `tol`.
    pub fn capacity(&self, tol: f64) -> Result<CapacityEstimate> {
        if !(tol > 0.0) {
            return Err(Error::Domain {
                name: "tol",
                value: tol,
                expected: "a positive real",
            });
        }
        let ln2 = std::f64::consts::LN_2;
        let mut input = vec![1.0 / self.inputs as f64; self.inputs];
        let mut scores = vec![0.0; self.inputs];
        for iteration in 0..CAPACITY_MAX_ITERATIONS {
            let output = self.push_slice(&input);
            for (score, row) in scores.iter_mut().zip(self.rows()) {
                *score = row.iter().zip(&output).map(|(&k, &q)| kl_term_nats(k, q)).sum();
            }
            let lower: f64 = input.iter().zip(&scores).map(|(p, s)| p * s).sum::<f64>() / ln2;
            let upper = scores.iter().cloned().fold(0.0, f64::max) / ln2;
            if upper - lower <= tol {
                return Ok(CapacityEstimate {
                    lower: lower.max(0.0),
                    upper,
                    iterations: iteration + 1,
                });
            }
            let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            input.iter_mut().zip(&scores).for_each(|(p, s)| *p *= (s - top).exp());
            let total: f64 = input.iter().sum();
            input.iter_mut().for_each(|p| *p /= total);
        }
        Err(Error::NoConvergence {
            what: "Blahut-Arimoto",
            iterations: CAPACITY_MAX_ITERATIONS,
        })
    }
}

fn checked_states(a: usize, b: usize, cap: usize) -> Result<usize> {
    match a.checked_mul(b) {
        Some(states) if states <= cap => Ok(states),
        other => Err(Error::StateCap {
            states: other.unwrap_or(usize::MAX),
            cap,
        }),
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass; take the last supported symbol
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Capacity bracket from Blahut–Arimoto.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

impl CapacityEstimate {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

impl fmt::Display for FiniteChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            let cells: Vec<String> = row.iter().map(|p| format!("{p}")).collect();
            f.write_str(&cells.join(","))?;
        }
        Ok(())
    }
}

/// Row-major matrix literal: rows separated by `;` or newlines, entries by
/// `,` or whitespace, e.g. `0.9,0.1; 0.2,0.8`.
impl FromStr for FiniteChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (r, raw) in s.split([';', '\n']).enumerate() {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let row = raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidDistribution(format!("row {r}: cannot parse {t:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Dimension("empty channel literal".into()));
        }
        Self::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bsc_construction() {
        assert_eq!(FiniteChannel::bsc(0.0).unwrap(), FiniteChannel::identity(2).unwrap());
        let useless = FiniteChannel::bsc(0.5).unwrap();
        assert!(useless.rows().all(|r| r == [0.5, 0.5]));
        let k = FiniteChannel::bsc(0.25).unwrap();
        assert_eq!(k.row(0), [0.75, 0.25]);
        assert_eq!(k.row(1), [0.25, 0.75]);
        assert_eq!(k.as_bsc(), Some(0.25));
        assert!(FiniteChannel::bsc(1.2).is_err());
    }

    #[test]
    fn push_forward_examples() {
        let k = FiniteChannel::bsc(0.1).unwrap();
        let out = k.push_forward(&FiniteDistribution::uniform(2).unwrap()).unwrap();
        assert_eq!(out.probs(), [0.5, 0.5]);
        let out = k.push_forward(&FiniteDistribution::point_mass(2, 1).unwrap()).unwrap();
        assert_eq!(out.probs(), k.row(1));
        let out = k.push_forward(&FiniteDistribution::new(vec![0.9, 0.1]).unwrap()).unwrap();
        assert!((out.probs()[0] - 0.82).abs() < 1e-15);
        assert!((out.probs()[1] - 0.18).abs() < 1e-15);
        assert!(k.push_forward(&FiniteDistribution::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn products() {
        let id = FiniteChannel::identity(2).unwrap();
        assert_eq!(id.product(&id, DEFAULT_STATE_CAP).unwrap(), FiniteChannel::identity(4).unwrap());

        let k1 = FiniteChannel::bsc(0.1).unwrap();
        let k2 = FiniteChannel::bsc(0.2).unwrap();
        let prod = k1.product(&k2, DEFAULT_STATE_CAP).unwrap();
        assert!((prod.get(0, 3) - 0.02).abs() < 1e-15);

        // pairing with a one-symbol channel leaves the BSC unchanged
        let point = FiniteChannel::identity(1).unwrap();
        assert_eq!(k1.product(&point, DEFAULT_STATE_CAP).unwrap(), k1);

        let err = k1.product(&k2, 3).unwrap_err();
        assert!(matches!(err, Error::StateCap { states: 4, cap: 3 }));
    }

    #[test]
    fn t_fold_examples() {
        let k = FiniteChannel::bsc(0.25).unwrap();
        assert_eq!(k.t_fold(1, DEFAULT_STATE_CAP).unwrap(), k);
        assert!((k.t_fold(2, DEFAULT_STATE_CAP).unwrap().get(0, 0) - 0.5625).abs() < 1e-15);
        let id = FiniteChannel::identity(2).unwrap();
        assert_eq!(id.t_fold(3, DEFAULT_STATE_CAP).unwrap(), FiniteChannel::identity(8).unwrap());
        assert!(k.t_fold(13, DEFAULT_STATE_CAP).is_err());
        assert!(k.t_fold(0, DEFAULT_STATE_CAP).is_err());
        for t in 1..=5 {
            let folded = FiniteChannel::bsc(0.3).unwrap().t_fold(t, DEFAULT_STATE_CAP).unwrap();
            for row in folded.rows() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let id = FiniteChannel::identity(3).unwrap();
        for i in 0..3 {
            assert_eq!(id.sample_output(i, &mut rng).unwrap(), i);
        }
        assert_eq!(FiniteChannel::bsc(0.0).unwrap().sample_output(1, &mut rng).unwrap(), 1);
        assert!(id.sample_output(3, &mut rng).is_err());

        let k = FiniteChannel::bsc(0.3).unwrap();
        let draws = 1_000_000;
        let flips = (0..draws).filter(|_| k.sample_output(0, &mut rng).unwrap() == 1).count();
        // Hoeffding at 1 - 1e-3 gives 0.0019
        assert!((flips as f64 / draws as f64 - 0.3).abs() < 0.002);
    }

    #[test]
    fn capacity_examples() {
        let tol = 1e-9;
        let c = FiniteChannel::bsc(0.5).unwrap().capacity(tol).unwrap();
        assert!(c.value().abs() <= tol);
        let c = FiniteChannel::identity(2).unwrap().capacity(tol).unwrap();
        assert!((c.value() - 1.0).abs() <= tol);
        let c = FiniteChannel::bsc(0.1).unwrap().capacity(tol).unwrap();
        let closed = 1.0 - binary_entropy(0.1).unwrap();
        assert!((c.value() - closed).abs() <= 1e-6);
        assert!(c.lower <= closed + 1e-12 && closed <= c.upper + 1e-12);
        assert!(FiniteChannel::bsc(0.1).unwrap().capacity(0.0).is_err());
    }

    #[test]
    fn capacity_is_additive_over_products() {
        let tol = 1e-7;
        let channels = [
            FiniteChannel::from_rows(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap(),
            FiniteChannel::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.2, 0.5, 0.3]]).unwrap(),
            FiniteChannel::bsc(0.2).unwrap(),
        ];
        for k in &channels {
            let single = k.capacity(tol).unwrap().value();
            let double = k.product(k, DEFAULT_STATE_CAP).unwrap().capacity(tol).unwrap().value();
            assert!((double - 2.0 * single).abs() <= 2.0 * tol, "{double} vs 2*{single}");
        }
    }

    #[test]
    fn literal_parsing() {
        let k: FiniteChannel = "0.75,0.25; 0.25 0.75".parse().unwrap();
        assert_eq!(k, FiniteChannel::bsc(0.25).unwrap());
        let k: FiniteChannel = "1 0 0\n0 0.5 0.5\n".parse().unwrap();
        assert_eq!((k.input_size(), k.output_size()), (2, 3));
        assert!("0.5,0.4".parse::<FiniteChannel>().is_err());
        assert!("0.5,0.5;1".parse::<FiniteChannel>().is_err());
        assert!("".parse::<FiniteChannel>().is_err());
        assert!("a,b".parse::<FiniteChannel>().is_err());
        let round: FiniteChannel = k.to_string().parse().unwrap();
        assert_eq!(round, k);
    }
}
