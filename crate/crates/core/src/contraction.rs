//! Strong data processing constants for the relative entropy.
//!
//! Closed forms and upper bounds are cheap; the numerical oracle searches the
//! simplex for inputs `nu` with a large ratio `D(nu K || mu K) / D(nu || mu)`
//! and reports the best ratio it actually evaluated, so its value is always a
//! lower estimate of the true constant and comes with the input that achieves it.
//!
//! The supremum is often only approached as `nu -> mu`, where the ratio tends
//! to the squared second singular value of `diag(sqrt mu) K diag(1/sqrt(mu K))`.
//! The oracle therefore probes small perturbations of `mu` along that singular
//! direction (and along random directions) in addition to the global ascent.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{FiniteChannel, DEFAULT_STATE_CAP};
use crate::error::{check_probability, Error, Result};
use crate::info::{kl_gap_slices, kl_slices, tv_slices, FiniteDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpiKind {
    ExactClosedForm,
    DobrushinUpperBound,
    OracleLowerEstimate,
    TUseUpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpiEstimate {
    pub value: f64,
    pub kind: SdpiKind,
    /// Input achieving `value` (oracle estimates only).
    pub witness: Option<FiniteDistribution>,
    /// Reference input the ratio was evaluated at (oracle estimates only).
    pub reference: Option<FiniteDistribution>,
    /// Set when the reference input had zero coordinates and the search was
    /// restricted to its support.
    pub restricted_to_support: bool,
}

impl SdpiEstimate {
    fn closed(value: f64, kind: SdpiKind) -> Self {
        Self {
            value,
            kind,
            witness: None,
            reference: None,
            restricted_to_support: false,
        }
    }
}

/// Search settings for the numerical oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Ascent starts per reference input.
    pub starts: usize,
    /// Outer starts over reference inputs (channel oracle only).
    pub outer_starts: usize,
    /// Relative improvement below which an ascent run stops.
    pub ratio_tol: f64,
    /// Candidates within this sup-norm distance of the reference are skipped.
    pub exclusion_radius: f64,
    /// Relative perturbation sizes for the local probes.
    pub local_radii: Vec<f64>,
    /// Random directions probed near the reference.
    pub random_directions: usize,
    pub max_iterations: usize,
    pub state_cap: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            outer_starts: 16,
            ratio_tol: 1e-8,
            exclusion_radius: 1e-7,
            local_radii: vec![1e-2, 1e-3, 1e-4],
            random_directions: 16,
            max_iterations: 400,
            state_cap: DEFAULT_STATE_CAP,
            seed: 0,
        }
    }
}

/// `(1 - 2 eps)^2`, exact for a binary symmetric channel.
pub fn eta_bsc(eps: f64) -> Result<SdpiEstimate> {
    check_probability("eps", eps)?;
    Ok(SdpiEstimate::closed((1.0 - 2.0 * eps).powi(2), SdpiKind::ExactClosedForm))
}

/// Largest total-variation distance between two rows.
pub fn dobrushin_coefficient(k: &FiniteChannel) -> SdpiEstimate {
    SdpiEstimate::closed(dobrushin_value(k), SdpiKind::DobrushinUpperBound)
}

pub(crate) fn dobrushin_value(k: &FiniteChannel) -> f64 {
    let rows: Vec<&[f64]> = k.rows().collect();
    let mut best = 0.0_f64;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            best = best.max(tv_slices(a, b));
        }
    }
    best.min(1.0)
}

/// `1 - (1 - eta)^T`, the bound for `T` memoryless channel uses.
pub fn eta_t_use(eta: f64, uses: u32) -> Result<f64> {
    check_probability("eta", eta)?;
    if uses == 0 {
        return Err(Error::Domain {
            name: "T",
            value: 0.0,
            expected: "a positive integer",
        });
    }
    Ok(1.0 - (1.0 - eta).powi(uses as i32))
}

pub fn eta_t_use_estimate(eta: f64, uses: u32) -> Result<SdpiEstimate> {
    Ok(SdpiEstimate::closed(eta_t_use(eta, uses)?, SdpiKind::TUseUpperBound))
}

/// Channel restricted to the support of a reference input.
struct Restricted {
    support: Vec<usize>,
    mu: Vec<f64>,
    /// Rows of the channel for the supported inputs, on the outputs with
    /// positive mass under `mu K`.
    rows: Vec<Vec<f64>>,
    out_mu: Vec<f64>,
}

impl Restricted {
    fn new(mu: &FiniteDistribution, k: &FiniteChannel) -> Self {
        let support = mu.support();
        let mu_s: Vec<f64> = support.iter().map(|&i| mu.probs()[i]).collect();
        let full_out = k.push_slice(mu.probs());
        let live: Vec<usize> = (0..full_out.len()).filter(|&y| full_out[y] > 0.0).collect();
        let rows = support
            .iter()
            .map(|&x| live.iter().map(|&y| k.get(x, y)).collect())
            .collect();
        let out_mu = live.iter().map(|&y| full_out[y]).collect();
        Self {
            support,
            mu: mu_s,
            rows,
            out_mu,
        }
    }

    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn push(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_mu.len()];
        for (&p, row) in nu.iter().zip(&self.rows) {
            out.iter_mut().zip(row).for_each(|(o, k)| *o += p * k);
        }
        out
    }

    /// Divergence ratio, or `None` inside the exclusion ball.
    fn ratio(&self, nu: &[f64], exclusion: f64) -> Option<f64> {
        let sup = nu
            .iter()
            .zip(&self.mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if sup < exclusion {
            return None;
        }
        let diff: Vec<f64> = nu.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        let den = kl_gap_slices(&self.mu, &diff);
        if !(den > 0.0) || !den.is_finite() {
            return None;
        }
        let num = kl_gap_slices(&self.out_mu, &self.push(&diff));
        Some((num / den).clamp(0.0, 1.0))
    }

    fn lift(&self, nu: &[f64], size: usize) -> FiniteDistribution {
        let mut full = vec![0.0; size];
        for (&i, &p) in self.support.iter().zip(nu) {
            full[i] = p;
        }
        let total: f64 = full.iter().sum();
        full.iter_mut().for_each(|p| *p /= total);
        FiniteDistribution::new(full).expect("lifted witness is a distribution")
    }

    /// Second singular value and direction of the normalized kernel.
    fn second_mode(&self) -> (f64, Vec<f64>) {
        let k = self.dim();
        let o = self.out_mu.len();
        if k < 2 || o < 2 {
            return (0.0, vec![0.0; k]);
        }
        let m = DMatrix::from_fn(k, o, |x, y| {
            self.mu[x].sqrt() * self.rows[x][y] / self.out_mu[y].sqrt()
        });
        let svd = m.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let second = order[1];
        let s2 = svd.singular_values[second].min(1.0);
        let direction = (0..k).map(|x| self.mu[x].sqrt() * u[(x, second)]).collect();
        (s2, direction)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    ratio: f64,
    nu: Vec<f64>,
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.ratio > a.ratio { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Move from `mu` along `direction` so the largest relative change is `radius`.
fn perturb(mu: &[f64], direction: &[f64], radius: f64) -> Option<Vec<f64>> {
    let centered_mean = direction.iter().sum::<f64>() / direction.len() as f64;
    let dir: Vec<f64> = direction.iter().map(|d| d - centered_mean).collect();
    let scale = dir
        .iter()
        .zip(mu)
        .map(|(d, m)| d.abs() / m)
        .fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let t = radius / scale;
    let nu: Vec<f64> = mu.iter().zip(&dir).map(|(m, d)| (m + t * d).max(0.0)).collect();
    let total: f64 = nu.iter().sum();
    Some(nu.into_iter().map(|p| p / total).collect())
}

fn local_probe(r: &Restricted, opts: &OracleOptions, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    let (_, mode) = r.second_mode();
    let mut directions = vec![mode.clone(), mode.iter().map(|d| -d).collect()];
    for _ in 0..opts.random_directions {
        directions.push((0..r.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
    }
    let mut best = None;
    for dir in &directions {
        for &radius in &opts.local_radii {
            if let Some(nu) = perturb(&r.mu, dir, radius) {
                if let Some(ratio) = r.ratio(&nu, opts.exclusion_radius) {
                    best = better(best, Some(Candidate { ratio, nu }));
                }
            }
        }
    }
    best
}

/// Exponentiated-gradient ascent of the divergence ratio from `start`.
fn ascend(r: &Restricted, start: Vec<f64>, opts: &OracleOptions) -> Option<Candidate> {
    let mut nu = start;
    let mut value = r.ratio(&nu, opts.exclusion_radius)?;
    let mut step = 1.0;
    for _ in 0..opts.max_iterations {
        let out = r.push(&nu);
        let den_nats = kl_slices(&nu, &r.mu) * std::f64::consts::LN_2;
        let log_out: Vec<f64> = out.iter().zip(&r.out_mu).map(|(a, b)| (a / b).ln()).collect();
        let grad: Vec<f64> = (0..r.dim())
            .map(|x| {
                let num_grad: f64 = r.rows[x].iter().zip(&log_out).map(|(k, l)| k * l).sum();
                let den_grad = (nu[x] / r.mu[x]).ln();
                (num_grad - value * den_grad) / den_nats
            })
            .collect();
        let mut improved = false;
        while step > 1e-14 {
            let top = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut trial: Vec<f64> = nu
                .iter()
                .zip(&grad)
                .map(|(p, g)| p * (step * (g - top)).exp())
                .collect();
            let total: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|p| *p /= total);
            match r.ratio(&trial, opts.exclusion_radius) {
                Some(v) if v > value => {
                    let gain = v - value;
                    nu = trial;
                    value = v;
                    step *= 2.0;
                    improved = gain > opts.ratio_tol * value.max(1e-12);
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !improved {
            break;
        }
    }
    Some(Candidate { ratio: value, nu })
}

fn dirichlet_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1) + 1e-12).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn start_points(r: &Restricted, opts: &OracleOptions) -> Vec<Vec<f64>> {
    let dim = r.dim();
    let mut starts = Vec::new();
    for x in 0..dim {
        let mut v = vec![1e-6 / dim as f64; dim];
        v[x] += 1.0 - 1e-6;
        starts.push(v);
    }
    let (_, mode) = r.second_mode();
    for radius in [0.5, 0.1] {
        for sign in [1.0, -1.0] {
            let dir: Vec<f64> = mode.iter().map(|d| sign * d).collect();
            if let Some(p) = perturb(&r.mu, &dir, radius) {
                starts.push(p);
            }
        }
    }
    let mut rng = stream(opts.seed, 1);
    while starts.len() < opts.starts.max(dim) + 4 {
        starts.push(dirichlet_point(dim, &mut rng));
    }
    starts
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn search_fixed_input(r: &Restricted, opts: &OracleOptions) -> Option<Candidate> {
    if r.dim() < 2 {
        return None;
    }
    let mut rng = stream(opts.seed, 0);
    let local = local_probe(r, opts, &mut rng);
    let mut candidates: Vec<Vec<f64>> = start_points(r, opts);
    // point masses and the local probe winner are also ascent seeds
    if let Some(c) = &local {
        candidates.push(c.nu.clone());
    }
    let vertices = (0..r.dim()).filter_map(|x| {
        let mut v = vec![0.0; r.dim()];
        v[x] = 1.0;
        r.ratio(&v, opts.exclusion_radius).map(|ratio| Candidate { ratio, nu: v })
    });
    let vertex_best = vertices.fold(None, |acc, c| better(acc, Some(c)));
    let ascent_best = candidates
        .into_par_iter()
        .map(|start| ascend(r, start, opts))
        .reduce(|| None, better);
    better(better(local, vertex_best), ascent_best)
}

fn check_options(opts: &OracleOptions) -> Result<()> {
    if opts.local_radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::Domain {
            name: "local_radii",
            value: f64::NAN,
            expected: "radii in (0, 1)",
        });
    }
    Ok(())
}

/// Lower estimate of `eta(mu, K)` with a witness input.
pub fn sdpi_oracle_fixed_input(
    mu: &FiniteDistribution,
    k: &FiniteChannel,
    opts: &OracleOptions,
) -> Result<SdpiEstimate> {
    check_options(opts)?;
    if mu.alphabet_size() != k.input_size() {
        return Err(Error::AlphabetMismatch {
            left: mu.alphabet_size(),
            right: k.input_size(),
        });
    }
    if k.input_size() > opts.state_cap || k.output_size() > opts.state_cap {
        return Err(Error::StateCap {
            states: k.input_size().max(k.output_size()),
            cap: opts.state_cap,
        });
    }
    let r = Restricted::new(mu, k);
    let restricted = r.dim() < mu.alphabet_size();
    // identical rows forget the input entirely; skip the search and its roundoff
    let constant = dobrushin_value(k) == 0.0;
    let found = if constant { None } else { search_fixed_input(&r, opts) };
    let (value, witness) = match found {
        Some(c) => (c.ratio, r.lift(&c.nu, mu.alphabet_size())),
        // a point-mass reference admits no other input; report zero at the reference
        None => (0.0, mu.clone()),
    };
    let estimate = SdpiEstimate {
        value,
        kind: SdpiKind::OracleLowerEstimate,
        witness: Some(witness),
        reference: Some(mu.clone()),
        restricted_to_support: restricted,
    };
    assert!(
        estimate.value <= dobrushin_value(k) + 1e-6,
        "oracle ratio {} exceeds the Dobrushin coefficient {}",
        estimate.value,
        dobrushin_value(k)
    );
    Ok(estimate)
}

/// Divergence ratio achieved by `witness` at reference `mu`.
pub fn divergence_ratio(nu: &FiniteDistribution, mu: &FiniteDistribution, k: &FiniteChannel) -> Result<f64> {
    let den = crate::info::kl_divergence(nu, mu)?;
    let num = crate::info::kl_divergence(&k.push_forward(nu)?, &k.push_forward(mu)?)?;
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

fn local_constant(mu: &[f64], k: &FiniteChannel) -> f64 {
    let dist = FiniteDistribution::new(mu.to_vec()).expect("softmax output is a distribution");
    let (s2, _) = Restricted::new(&dist, k).second_mode();
    s2 * s2
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Hill climbing on logits of the reference input for the local constant.
fn climb_reference(k: &FiniteChannel, mut logits: Vec<f64>, rng: &mut ChaCha8Rng, iterations: usize) -> (f64, Vec<f64>) {
    let mut mu = softmax(&logits);
    let mut value = local_constant(&mu, k);
    let mut sigma = 1.0;
    for _ in 0..iterations {
        let trial: Vec<f64> = logits
            .iter()
            .map(|l| l + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let trial_mu = softmax(&trial);
        let v = local_constant(&trial_mu, k);
        if v > value {
            logits = trial;
            mu = trial_mu;
            value = v;
            sigma *= 1.5;
        } else {
            sigma *= 0.9;
        }
        if sigma < 1e-6 {
            break;
        }
    }
    (value, mu)
}

/// Lower estimate of `eta(K) = sup_mu eta(mu, K)`.
///
/// The outer search climbs the local (chi-square) constant over reference
/// inputs, then runs the full fixed-input oracle at the best references found.
pub fn sdpi_oracle_channel(k: &FiniteChannel, opts: &OracleOptions) -> Result<SdpiEstimate> {
    check_options(opts)?;
    if k.input_size() > opts.state_cap || k.output_size() > opts.state_cap {
        return Err(Error::StateCap {
            states: k.input_size().max(k.output_size()),
            cap: opts.state_cap,
        });
    }
    let dim = k.input_size();
    if dim < 2 {
        return sdpi_oracle_fixed_input(&FiniteDistribution::uniform(dim)?, k, opts);
    }
    let mut references: Vec<(f64, Vec<f64>)> = (0..opts.outer_starts.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(opts.seed, 1000 + i as u64);
            let logits = if i == 0 {
                vec![0.0; dim]
            } else {
                (0..dim).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect()
            };
            climb_reference(k, logits, &mut rng, 300)
        })
        .collect();
    references.sort_by(|a, b| b.0.total_cmp(&a.0));
    references.truncate(3);
    references.push((0.0, vec![1.0 / dim as f64; dim]));

    let mut best: Option<SdpiEstimate> = None;
    for (_, mu) in references {
        let mu = FiniteDistribution::new(mu)?;
        let est = sdpi_oracle_fixed_input(&mu, k, opts)?;
        if best.as_ref().is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one reference input"))
}
