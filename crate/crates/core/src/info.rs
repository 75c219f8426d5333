//! Finite-alphabet information measures.
//!
//! All quantities are reported in bits. Internally the divergence terms are
//! accumulated as `p ln(p/q) - p + q`, which is nonnegative term by term and
//! stays accurate when `p` and `q` are close.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, check_range, Error, Result};

/// Mass tolerance accepted without modification.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Largest mass deviation that is silently renormalized.
pub const RENORMALIZE_LIMIT: f64 = 1e-9;

/// A probability vector over `0..alphabet_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_mass(probs).map(|probs| Self { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Self {
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::InvalidSymbol { symbol, size });
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Self { probs })
    }

    /// Bernoulli distribution on `{0, 1}` with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(Self {
            probs: vec![1.0 - p, p],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    /// Product distribution, row-major in `(self, other)`.
    pub fn product(&self, other: &Self) -> Self {
        let probs = self
            .probs
            .iter()
            .flat_map(|&a| other.probs.iter().map(move |&b| a * b))
            .collect();
        Self { probs }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for FiniteDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<FiniteDistribution> for Vec<f64> {
    fn from(d: FiniteDistribution) -> Self {
        d.probs
    }
}

fn validate_mass(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {bad} is not a nonnegative real")));
    }
    let total: f64 = probs.iter().sum();
    let deviation = (total - 1.0).abs();
    if deviation > RENORMALIZE_LIMIT {
        return Err(Error::InvalidDistribution(format!("total mass {total} differs from 1")));
    }
    if deviation > MASS_TOLERANCE {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(probs)
}

/// Joint distribution stored row-major; rows index the first variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries do not form a {rows}x{cols} joint",
                probs.len()
            )));
        }
        let probs = validate_mass(probs)?;
        Ok(Self { rows, cols, probs })
    }

    /// Joint law of `(X, Y)` with `X ~ first` and `Y ~ second` independent.
    pub fn independent(first: &FiniteDistribution, second: &FiniteDistribution) -> Self {
        Self {
            rows: first.alphabet_size(),
            cols: second.alphabet_size(),
            probs: first.product(second).into_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn first_marginal(&self) -> FiniteDistribution {
        let probs = self.probs.chunks(self.cols).map(|r| r.iter().sum()).collect();
        FiniteDistribution { probs }
    }

    pub fn second_marginal(&self) -> FiniteDistribution {
        let mut probs = vec![0.0; self.cols];
        for row in self.probs.chunks(self.cols) {
            for (acc, p) in probs.iter_mut().zip(row) {
                *acc += p;
            }
        }
        FiniteDistribution { probs }
    }
}

/// `p ln(p/q) - p + q`, the nonnegative per-symbol KL summand (nats).
pub(crate) fn kl_term_nats(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        q
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        kl_gap_nats(q, p - q)
    }
}

/// `p ln(p/q) - p + q` for `p = q + gap`, accurate when `gap` is tiny
/// relative to `q`, where the direct form cancels.
pub(crate) fn kl_gap_nats(q: f64, gap: f64) -> f64 {
    let p = q + gap;
    if p <= 0.0 {
        return q;
    }
    let r = gap / q;
    if r.abs() < 0.05 {
        // (1+r) ln(1+r) - r = sum_{k>=2} (-r)^k / (k (k-1))
        let mut term = r * r;
        let mut sum = 0.0;
        for k in 2..24 {
            sum += term / (k * (k - 1)) as f64;
            term *= -r;
        }
        q * sum
    } else {
        p * (p / q).ln() - p + q
    }
}

/// KL in bits from `mu + diff` to `mu`, entry by entry.
pub(crate) fn kl_gap_slices(mu: &[f64], diff: &[f64]) -> f64 {
    let nats: f64 = mu
        .iter()
        .zip(diff)
        .map(|(&q, &d)| if q == 0.0 { if d > 0.0 { f64::INFINITY } else { 0.0 } } else { kl_gap_nats(q, d) })
        .sum();
    nats / std::f64::consts::LN_2
}

fn xlog2x(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Shannon entropy in bits.
pub fn entropy(dist: &FiniteDistribution) -> f64 {
    entropy_of(dist.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

/// Inverse of `h` on `[0, 1/2]`, by bisection.
pub fn binary_entropy_inv(y: f64) -> Result<f64> {
    check_probability("y", y)?;
    // h is flat at 1/2, so bisection stalls short of the endpoint
    if y >= 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Binary divergence `d(p || q)` in bits.
pub fn binary_divergence(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    if (q == 0.0 || q == 1.0) && p != q {
        return Err(Error::Domain {
            name: "q",
            value: q,
            expected: "(0, 1) unless p = q",
        });
    }
    let nats = kl_term_nats(p, q) + kl_term_nats(1.0 - p, 1.0 - q);
    Ok(nats / std::f64::consts::LN_2)
}

/// `D(nu || mu)` in bits; `+inf` when `nu` is not absolutely continuous
/// with respect to `mu`.
pub fn kl_divergence(nu: &FiniteDistribution, mu: &FiniteDistribution) -> Result<f64> {
    same_alphabet(nu, mu)?;
    Ok(kl_slices(nu.probs(), mu.probs()))
}

pub(crate) fn kl_slices(nu: &[f64], mu: &[f64]) -> f64 {
    let nats: f64 = nu.iter().zip(mu).map(|(&p, &q)| kl_term_nats(p, q)).sum();
    nats / std::f64::consts::LN_2
}

pub fn tv_distance(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    same_alphabet(p, q)?;
    Ok(tv_slices(p.probs(), q.probs()))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `I(X;Y) = D(P_XY || P_X P_Y)` in bits.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let px = joint.first_marginal();
    let py = joint.second_marginal();
    let product = JointDistribution::independent(&px, &py);
    kl_slices(joint.probs(), product.probs()).max(0.0)
}

fn same_alphabet(a: &FiniteDistribution, b: &FiniteDistribution) -> Result<()> {
    if a.alphabet_size() != b.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            left: a.alphabet_size(),
            right: b.alphabet_size(),
        });
    }
    Ok(())
}

/// `1 - h(p)`, the rate-distortion function of a fair bit under Hamming loss.
pub fn bit_rate_distortion(p: f64) -> Result<f64> {
    check_range("p", p, 0.0, 0.5, "[0, 1/2]")?;
    Ok(1.0 - binary_entropy(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(p.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        close(binary_entropy(0.1).unwrap(), 0.46900, 1e-5);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn binary_entropy_inverse_values() {
        close(binary_entropy_inv(1.0).unwrap(), 0.5, 1e-10);
        close(binary_entropy_inv(0.0).unwrap(), 0.0, 1e-10);
        close(binary_entropy_inv(0.5).unwrap(), 0.11003, 1e-4);
        assert!(binary_entropy_inv(1.01).is_err());
    }

    #[test]
    fn binary_divergence_values() {
        close(binary_divergence(0.3, 0.3).unwrap(), 0.0, 1e-15);
        close(binary_divergence(0.3, 0.5).unwrap(), 0.11871, 1e-5);
        close(binary_divergence(1.0, 0.5).unwrap(), 1.0, 1e-15);
        assert!(binary_divergence(0.2, 0.0).is_err());
        assert!(binary_divergence(0.8, 1.0).is_err());
        assert_eq!(binary_divergence(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn kl_values() {
        let mu = dist(&[0.5, 0.5]);
        close(kl_divergence(&mu, &mu).unwrap(), 0.0, 1e-15);
        close(kl_divergence(&dist(&[1.0, 0.0]), &mu).unwrap(), 1.0, 1e-15);
        close(kl_divergence(&dist(&[0.9, 0.1]), &mu).unwrap(), 0.53100, 1e-5);
        assert_eq!(kl_divergence(&mu, &dist(&[1.0, 0.0])).unwrap(), f64::INFINITY);
        assert!(matches!(
            kl_divergence(&mu, &dist(&[0.2, 0.3, 0.5])),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn tv_values() {
        let p = dist(&[0.75, 0.25]);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 1.0);
        close(tv_distance(&p, &dist(&[0.25, 0.75])).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn mutual_information_values() {
        let indep = JointDistribution::independent(&dist(&[0.3, 0.7]), &dist(&[0.1, 0.6, 0.3]));
        close(mutual_information(&indep), 0.0, 1e-12);
        let copy = JointDistribution::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        close(mutual_information(&copy), 1.0, 1e-15);
        // W uniform on {-1, +1} through BSC(0.25)
        let bsc = JointDistribution::new(2, 2, vec![0.375, 0.125, 0.125, 0.375]).unwrap();
        close(mutual_information(&bsc), 0.18872, 1e-5);
    }

    #[test]
    fn construction_tolerances() {
        assert!(FiniteDistribution::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        let renorm = FiniteDistribution::new(vec![0.5, 0.5 + 1e-10]).unwrap();
        close(renorm.probs().iter().sum(), 1.0, 1e-15);
        assert!(FiniteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::new(vec![1.1, -0.1]).is_err());
        assert!(FiniteDistribution::new(vec![]).is_err());
        assert!(JointDistribution::new(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn divergence_half_identity() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let d = binary_divergence(p, 0.5).unwrap();
            close(d, 1.0 - binary_entropy(p).unwrap(), 1e-12);
        }
    }

    fn simplex(size: usize) -> impl Strategy<Value = FiniteDistribution> {
        prop::collection::vec(0.0f64..1.0, size).prop_filter_map("nonzero mass", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| FiniteDistribution::new(w.iter().map(|x| x / total).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn entropy_inverse_roundtrip(p in 0.0f64..=0.5) {
            let back = binary_entropy_inv(binary_entropy(p).unwrap()).unwrap();
            prop_assert!((back - p).abs() <= 1e-8, "{p} -> {back}");
        }

        #[test]
        fn kl_nonnegative_and_pinsker((nu, mu) in (2usize..6).prop_flat_map(|k| (simplex(k), simplex(k)))) {
            let kl = kl_divergence(&nu, &mu).unwrap();
            let tv = tv_distance(&nu, &mu).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert!(kl >= 2.0 / std::f64::consts::LN_2 * tv * tv - 1e-12);
            if tv > 1e-9 {
                prop_assert!(kl > 0.0);
            }
        }

        #[test]
        fn mutual_information_relabeling(
            raw in prop::collection::vec(0.01f64..1.0, 12),
            shift_rows in 0usize..3,
            shift_cols in 0usize..4,
        ) {
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let joint = JointDistribution::new(3, 4, probs.clone()).unwrap();
            let mut permuted = vec![0.0; 12];
            for r in 0..3 {
                for c in 0..4 {
                    permuted[((r + shift_rows) % 3) * 4 + (c * 3 + shift_cols) % 4] = probs[r * 4 + c];
                }
            }
            let relabeled = JointDistribution::new(3, 4, permuted).unwrap();
            let (a, b) = (mutual_information(&joint), mutual_information(&relabeled));
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
