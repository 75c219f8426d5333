//! The three parameter families: a fair bit, the uniform hypercube
//! `{-1, +1}^d` observed through `BSC((1 - delta)/2)`, and the uniform
//! interval `[0, 1]` observed through Bernoulli samples.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::info::{entropy_of, tv_slices};
use crate::numeric::{binomial, integrate_pieces, ln_binomial};

/// Largest `n` for which observation strings are enumerated.
pub const ENUMERATION_CAP: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "prior")]
pub enum PriorKind {
    /// `Bern(1/2)` on `{0, 1}`.
    Bit,
    /// Uniform on `{-1, +1}^d`.
    Hypercube { d: u32 },
    /// Uniform on `[0, 1]`.
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    ZeroOne,
    /// Fraction of disagreeing coordinates.
    HammingNormalized,
    /// Number of disagreeing coordinates.
    HammingCount,
    Absolute,
    /// `||delta w - theta_hat||^2` for the mean of the hypercube model.
    SquaredMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorModel {
    pub kind: PriorKind,
    pub loss: Loss,
}

impl PriorModel {
    pub fn new(kind: PriorKind, loss: Loss) -> Result<Self> {
        let ok = matches!(
            (kind, loss),
            (PriorKind::Bit, Loss::ZeroOne)
                | (
                    PriorKind::Hypercube { .. },
                    Loss::HammingNormalized | Loss::HammingCount | Loss::SquaredMean
                )
                | (PriorKind::Interval, Loss::Absolute)
        );
        if !ok {
            return Err(Error::Incompatible(format!("{loss:?} loss on a {kind:?} prior")));
        }
        if let PriorKind::Hypercube { d: 0 } = kind {
            return Err(Error::Incompatible("hypercube of dimension 0".into()));
        }
        Ok(Self { kind, loss })
    }

    pub fn bit() -> Self {
        Self {
            kind: PriorKind::Bit,
            loss: Loss::ZeroOne,
        }
    }

    pub fn interval() -> Self {
        Self {
            kind: PriorKind::Interval,
            loss: Loss::Absolute,
        }
    }

    pub fn hypercube(d: u32, loss: Loss) -> Result<Self> {
        Self::new(PriorKind::Hypercube { d }, loss)
    }

    /// `sup_w P(loss(W, w) <= rho)`.
    pub fn small_ball(&self, rho: f64) -> Result<f64> {
        if rho.is_nan() || rho < 0.0 {
            return Err(Error::Domain {
                name: "rho",
                value: rho,
                expected: "a nonnegative real",
            });
        }
        match (self.kind, self.loss) {
            (PriorKind::Bit, Loss::ZeroOne) => Ok(if rho >= 1.0 { 1.0 } else { 0.5 }),
            (PriorKind::Hypercube { d }, Loss::HammingCount) => Ok(hamming_ball(d, rho)),
            (PriorKind::Hypercube { d }, Loss::HammingNormalized) => Ok(hamming_ball(d, rho * d as f64)),
            (PriorKind::Interval, Loss::Absolute) => Ok((2.0 * rho).min(1.0)),
            (kind, loss) => Err(Error::Incompatible(format!(
                "no small-ball evaluator for {loss:?} loss on a {kind:?} prior"
            ))),
        }
    }

    /// Upper end of the default radius grid.
    pub fn default_rho_max(&self) -> f64 {
        match (self.kind, self.loss) {
            (PriorKind::Hypercube { d }, Loss::HammingCount) => d as f64,
            (PriorKind::Hypercube { .. }, Loss::HammingNormalized) => 1.0,
            _ => 0.5,
        }
    }
}

fn hamming_ball(d: u32, radius: f64) -> f64 {
    // tolerate radii that are integers up to rounding
    let top = ((radius + 1e-9).floor() as u64).min(d as u64);
    if top == d as u64 {
        return 1.0;
    }
    let ln_total = d as f64 * std::f64::consts::LN_2;
    let mass: f64 = (0..=top).map(|t| (ln_binomial(d as u64, t) - ln_total).exp()).sum();
    mass.min(1.0)
}

/// Prior, samples per coordinate and (hypercube only) the sample correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub prior: PriorModel,
    pub n: u32,
    pub delta: f64,
}

impl ObservationModel {
    pub fn new(prior: PriorModel, n: u32, delta: f64) -> Result<Self> {
        check_probability("delta", delta)?;
        if n == 0 {
            return Err(Error::Domain {
                name: "n",
                value: 0.0,
                expected: "a positive integer",
            });
        }
        Ok(Self { prior, n, delta })
    }

    /// `(1 - delta) / (1 + delta)`.
    pub fn beta(&self) -> f64 {
        beta(self.delta)
    }

    /// Crossover probability of each sample given its coordinate.
    pub fn sample_crossover(&self) -> f64 {
        (1.0 - self.delta) / 2.0
    }

    pub fn dimension(&self) -> u32 {
        match self.prior.kind {
            PriorKind::Hypercube { d } => d,
            _ => 1,
        }
    }

    /// Width of the loss range, used for Hoeffding intervals.
    pub fn loss_range(&self) -> f64 {
        match self.prior.loss {
            Loss::ZeroOne | Loss::HammingNormalized | Loss::Absolute => 1.0,
            Loss::HammingCount => self.dimension() as f64,
            Loss::SquaredMean => 4.0 * self.dimension() as f64,
        }
    }
}

pub fn beta(delta: f64) -> f64 {
    (1.0 - delta) / (1.0 + delta)
}

/// Dobrushin coefficient of the posterior `P_{W_j | X_j^n}` in the hypercube
/// model, `(1 - beta^n) / (1 + beta^n)`.
pub fn hypercube_posterior_dobrushin(delta: f64, n: u32) -> Result<f64> {
    check_probability("delta", delta)?;
    check_n(n)?;
    let bn = beta(delta).powi(n as i32);
    Ok((1.0 - bn) / (1.0 + bn))
}

/// The same coefficient by enumerating all `2^n` observation strings and
/// taking the largest distance between their posteriors.
pub fn hypercube_posterior_dobrushin_oracle(delta: f64, n: u32) -> Result<f64> {
    check_probability("delta", delta)?;
    check_n(n)?;
    check_enumeration(n)?;
    let agree = (1.0 + delta) / 2.0;
    let disagree = 1.0 - agree;
    let mut posteriors: Vec<[f64; 2]> = Vec::new();
    for string in 0u32..(1u32 << n) {
        let ones = string.count_ones() as i32;
        let zeros = n as i32 - ones;
        // ones are samples equal to +1
        let given_plus = agree.powi(ones) * disagree.powi(zeros);
        let given_minus = disagree.powi(ones) * agree.powi(zeros);
        let evidence = given_plus + given_minus;
        if evidence == 0.0 {
            continue;
        }
        let row = [given_plus / evidence, given_minus / evidence];
        if !posteriors.contains(&row) {
            posteriors.push(row);
        }
    }
    let mut best = 0.0_f64;
    for (i, a) in posteriors.iter().enumerate() {
        for b in &posteriors[i + 1..] {
            best = best.max(tv_slices(a, b));
        }
    }
    Ok(best)
}

/// Exact `H(X^n)` of the hypercube model (when `n` is enumerable) and the
/// bound `d (1 + n h((1 - delta)/2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleEntropy {
    pub exact: Option<f64>,
    pub bound: f64,
}

pub fn hypercube_sample_entropy(d: u32, n: u32, delta: f64) -> Result<SampleEntropy> {
    check_probability("delta", delta)?;
    check_n(n)?;
    let bound = d as f64 * (1.0 + n as f64 * crate::info::binary_entropy((1.0 - delta) / 2.0)?);
    let exact = if n <= ENUMERATION_CAP {
        let agree = (1.0 + delta) / 2.0;
        let disagree = 1.0 - agree;
        let probs: Vec<f64> = (0u32..(1u32 << n))
            .map(|string| {
                let ones = string.count_ones() as i32;
                let zeros = n as i32 - ones;
                0.5 * (agree.powi(ones) * disagree.powi(zeros) + disagree.powi(ones) * agree.powi(zeros))
            })
            .collect();
        Some(d as f64 * entropy_of(&probs))
    } else {
        None
    };
    Ok(SampleEntropy { exact, bound })
}

/// Dobrushin coefficient of `P_{W | X^n}` in the interval model, `1 - 2^-n`.
pub fn interval_posterior_dobrushin(n: u32) -> Result<f64> {
    check_n(n)?;
    Ok(1.0 - 0.5f64.powi(n as i32))
}

/// Largest posterior distance over every pair of sufficient statistics
/// `(s, t)`, each distance integrated numerically.
pub fn interval_posterior_dobrushin_oracle(n: u32, tol: f64) -> Result<f64> {
    check_n(n)?;
    if n > 60 {
        return Err(Error::Budget(format!("pairwise quadrature limited to n <= 60, got {n}")));
    }
    let density = |s: u32, w: f64| {
        (n as f64 + 1.0) * binomial(n as u64, s as u64) * w.powi(s as i32) * (1.0 - w).powi((n - s) as i32)
    };
    let mut best = 0.0_f64;
    for s in 0..=n {
        for t in s + 1..=n {
            // the two posterior densities cross once, where (w/(1-w))^(t-s) = C(n,s)/C(n,t)
            let ratio = (binomial(n as u64, s as u64) / binomial(n as u64, t as u64)).powf(1.0 / (t - s) as f64);
            let cross = ratio / (1.0 + ratio);
            let tv = 0.5
                * integrate_pieces(&|w: f64| (density(s, w) - density(t, w)).abs(), &[0.0, cross, 1.0], tol);
            best = best.max(tv);
        }
    }
    Ok(best)
}

/// `I(W; X^n)` for the interval model and `gamma_n = I - (1/2) log n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalInformation {
    pub n: u32,
    pub mutual_information: f64,
    pub gamma: f64,
}

/// Exact mutual information through the sufficient statistic: the sample sum
/// is uniform on `{0..n}`, so `I = log(n+1) - E_W[H(Binomial(n, W))]`.
pub fn interval_sample_mi(n: u32) -> Result<IntervalInformation> {
    check_n(n)?;
    let tol = 1e-9;
    let nf = n as f64;
    let mut breaks = vec![0.0];
    let mut edge = 1.0 / nf;
    while edge < 0.5 {
        breaks.push(edge);
        edge *= 4.0;
    }
    breaks.push(0.5);
    // the integrand is symmetric about 1/2
    let half = integrate_pieces(&|w: f64| binomial_entropy(n, w), &breaks, tol / 2.0);
    let mi = (nf + 1.0).log2() - 2.0 * half;
    Ok(IntervalInformation {
        n,
        mutual_information: mi,
        gamma: mi - 0.5 * nf.log2(),
    })
}

/// Entropy in bits of `Binomial(n, w)`.
pub(crate) fn binomial_entropy(n: u32, w: f64) -> f64 {
    if w <= 0.0 || w >= 1.0 {
        return 0.0;
    }
    let (lw, lv) = (w.ln(), (1.0 - w).ln());
    let nats: f64 = (0..=n as u64)
        .map(|k| {
            let lp = ln_binomial(n as u64, k) + k as f64 * lw + (n as u64 - k) as f64 * lv;
            if lp < -745.0 {
                0.0
            } else {
                -lp.exp() * lp
            }
        })
        .sum();
    nats / std::f64::consts::LN_2
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            expected: "a positive integer",
        });
    }
    Ok(())
}

fn check_enumeration(n: u32) -> Result<()> {
    if n > ENUMERATION_CAP {
        return Err(Error::Budget(format!(
            "enumeration limited to n <= {ENUMERATION_CAP}, got {n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FiniteChannel;
    use crate::contraction::{dobrushin_coefficient, sdpi_oracle_fixed_input, OracleOptions};
    use crate::info::FiniteDistribution;

    #[test]
    fn prior_loss_compatibility() {
        assert!(PriorModel::new(PriorKind::Bit, Loss::Absolute).is_err());
        assert!(PriorModel::new(PriorKind::Interval, Loss::HammingCount).is_err());
        assert!(PriorModel::new(PriorKind::Hypercube { d: 4 }, Loss::ZeroOne).is_err());
        assert!(PriorModel::new(PriorKind::Hypercube { d: 0 }, Loss::HammingCount).is_err());
        assert!(PriorModel::new(PriorKind::Hypercube { d: 4 }, Loss::HammingCount).is_ok());
    }

    #[test]
    fn small_ball_examples() {
        assert_eq!(PriorModel::interval().small_ball(0.25).unwrap(), 0.5);
        assert_eq!(PriorModel::interval().small_ball(0.75).unwrap(), 1.0);
        assert_eq!(PriorModel::bit().small_ball(0.0).unwrap(), 0.5);
        assert_eq!(PriorModel::bit().small_ball(1.0).unwrap(), 1.0);

        let cube = PriorModel::hypercube(12, Loss::HammingCount).unwrap();
        let l = cube.small_ball(2.0).unwrap();
        assert!((l - 79.0 / 4096.0).abs() < 1e-15);
        assert!((-l.log2() - 5.696).abs() < 1e-3);
        assert!(-l.log2() >= 2.0);
        assert!(cube.small_ball(-1.0).is_err());

        let normalized = PriorModel::hypercube(12, Loss::HammingNormalized).unwrap();
        assert_eq!(normalized.small_ball(2.0 / 12.0).unwrap(), l);

        let squared = PriorModel::hypercube(12, Loss::SquaredMean).unwrap();
        assert!(squared.small_ball(0.1).is_err());
    }

    #[test]
    fn small_ball_monotone_and_saturates() {
        for prior in [
            PriorModel::bit(),
            PriorModel::interval(),
            PriorModel::hypercube(12, Loss::HammingCount).unwrap(),
            PriorModel::hypercube(5, Loss::HammingNormalized).unwrap(),
        ] {
            let top = prior.default_rho_max().max(1.0) * 2.0;
            let mut last = 0.0;
            for i in 0..=400 {
                let v = prior.small_ball(top * i as f64 / 400.0).unwrap();
                assert!(v >= last);
                last = v;
            }
            assert_eq!(last, 1.0);
        }
    }

    #[test]
    fn hypercube_dobrushin_examples() {
        assert!((hypercube_posterior_dobrushin(0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(hypercube_posterior_dobrushin(1.0, 7).unwrap(), 1.0);
        assert!((hypercube_posterior_dobrushin(0.5, 2).unwrap() - 0.8).abs() < 1e-15);
        assert!(hypercube_posterior_dobrushin(0.5, 0).is_err());
        assert!(hypercube_posterior_dobrushin(1.5, 1).is_err());

        assert!((hypercube_posterior_dobrushin_oracle(0.5, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!((hypercube_posterior_dobrushin_oracle(0.5, 2).unwrap() - 0.8).abs() < 1e-12);
        let b: f64 = 7.0 / 13.0;
        let closed = (1.0 - b.powi(3)) / (1.0 + b.powi(3));
        assert!((hypercube_posterior_dobrushin_oracle(0.3, 3).unwrap() - closed).abs() < 1e-12);
        assert!(hypercube_posterior_dobrushin_oracle(0.3, 21).is_err());
    }

    #[test]
    fn hypercube_dobrushin_grid_and_monotonicity() {
        let deltas = [0.0, 0.05, 0.2, 0.5, 0.8, 0.99, 1.0];
        for &delta in &deltas {
            let mut last = -1.0;
            for n in 1..=12 {
                let closed = hypercube_posterior_dobrushin(delta, n).unwrap();
                let oracle = hypercube_posterior_dobrushin_oracle(delta, n).unwrap();
                assert!((closed - oracle).abs() < 1e-12, "delta {delta} n {n}: {closed} vs {oracle}");
                assert!(closed >= last);
                last = closed;
            }
        }
        for n in 1..=6 {
            for w in deltas.windows(2) {
                assert!(hypercube_posterior_dobrushin(w[0], n).unwrap() <= hypercube_posterior_dobrushin(w[1], n).unwrap());
            }
        }
    }

    #[test]
    fn sample_entropy_examples() {
        let e = hypercube_sample_entropy(3, 4, 1.0).unwrap();
        assert!((e.exact.unwrap() - 3.0).abs() < 1e-12);
        assert!((e.bound - 3.0).abs() < 1e-12);

        let e = hypercube_sample_entropy(3, 4, 0.0).unwrap();
        assert!((e.exact.unwrap() - 12.0).abs() < 1e-12);
        assert!((e.bound - 15.0).abs() < 1e-12);

        // probabilities (5/16, 3/16, 3/16, 5/16) over the four strings
        let e = hypercube_sample_entropy(1, 2, 0.5).unwrap();
        let p = [5.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 5.0 / 16.0];
        let direct: f64 = -p.iter().map(|x: &f64| x * x.log2()).sum::<f64>();
        assert!((e.exact.unwrap() - direct).abs() < 1e-12);
        assert!((e.exact.unwrap() - 1.95443).abs() < 1e-4);
        assert!((e.bound - 2.6226).abs() < 1e-4);

        let big = hypercube_sample_entropy(2, 25, 0.5).unwrap();
        assert!(big.exact.is_none());
    }

    #[test]
    fn sample_entropy_below_bound() {
        for d in [1, 4] {
            for n in [1, 2, 5, 10] {
                for delta in [0.0, 0.1, 0.5, 0.9, 1.0] {
                    let e = hypercube_sample_entropy(d, n, delta).unwrap();
                    assert!(e.exact.unwrap() <= e.bound + 1e-9);
                }
            }
        }
    }

    #[test]
    fn interval_dobrushin_examples() {
        assert_eq!(interval_posterior_dobrushin(1).unwrap(), 0.5);
        assert_eq!(interval_posterior_dobrushin(30).unwrap(), 1.0 - 0.5f64.powi(30));
        let oracle = interval_posterior_dobrushin_oracle(1, 1e-12).unwrap();
        assert!((oracle - 0.5).abs() < 1e-9);
        let oracle = interval_posterior_dobrushin_oracle(5, 1e-12).unwrap();
        assert!((oracle - 0.96875).abs() < 1e-9);
        assert!(interval_posterior_dobrushin(0).is_err());
    }

    #[test]
    fn interval_mutual_information() {
        let one = interval_sample_mi(1).unwrap();
        let expected = 1.0 - 1.0 / (2.0 * std::f64::consts::LN_2);
        assert!((one.mutual_information - 0.27865).abs() < 1e-5);
        assert!((one.mutual_information - expected).abs() < 1e-8);
        assert_eq!(one.gamma, one.mutual_information);

        let i10 = interval_sample_mi(10).unwrap().mutual_information;
        let i100 = interval_sample_mi(100).unwrap().mutual_information;
        let i1000 = interval_sample_mi(1000).unwrap().mutual_information;
        assert!(i10 < i100 && i100 < i1000);
    }

    #[test]
    fn interval_gamma_stays_bounded() {
        let gammas: Vec<f64> = [1, 2, 5, 10, 100, 1000, 10_000]
            .iter()
            .map(|&n| interval_sample_mi(n).unwrap().gamma)
            .collect();
        for g in &gammas {
            assert!(g.abs() < 2.0, "{gammas:?}");
        }
        let tail = &gammas[gammas.len() - 2..];
        assert!((tail[0] - tail[1]).abs() < 1e-2, "{gammas:?}");
    }

    #[test]
    fn single_sample_sdpi_is_delta_squared() {
        let uniform = FiniteDistribution::uniform(2).unwrap();
        for delta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let k = FiniteChannel::bsc((1.0 - delta) / 2.0).unwrap();
            let est = sdpi_oracle_fixed_input(&uniform, &k, &OracleOptions::default()).unwrap();
            assert!((est.value - delta * delta).abs() < 1e-3, "delta {delta}: {}", est.value);
            let dob = dobrushin_coefficient(&k).value;
            assert!((dob - delta).abs() < 1e-12);
            assert!(est.value < dob);
        }
    }
}
