//! Converse bounds and the comparison curves built from them.
//!
//! Mutual-information upper bounds feed the Bayes-risk lower bound
//! `R >= sup_rho rho (1 - (I + 1) / log(1 / L(rho)))`, with `L` the small-ball
//! probability of the prior. Everything is in bits.

use serde::Serialize;

use crate::channel::FiniteChannel;
use crate::contraction::{dobrushin_value, eta_bsc};
use crate::error::{check_probability, check_range, Error, Result};
use crate::info::{binary_entropy, binary_entropy_inv};
use crate::models::{hypercube_posterior_dobrushin, interval_sample_mi, PriorModel};
use crate::numeric::{golden_max, log_grid};

/// Number of points in the default radius grid.
pub const RHO_GRID_POINTS: usize = 64;
const RHO_GRID_MIN: f64 = 1e-6;
const CAPACITY_TOL: f64 = 1e-9;

/// How the single-use contraction constant of the link was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSource {
    /// Closed form of a binary symmetric channel.
    ExactBsc,
    /// Dobrushin coefficient, an upper bound on the constant.
    Dobrushin,
}

/// System dimensions plus the link constants derived from the channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    pub d: u32,
    pub n: u32,
    pub b: u32,
    pub t: u32,
    pub m: u32,
    pub delta: f64,
    #[serde(skip)]
    pub channel: FiniteChannel,
    pub eta: f64,
    pub eta_source: EtaSource,
    pub eta_t: f64,
    pub capacity: f64,
}

impl SystemParams {
    /// `t = 0` is accepted and means nothing is transmitted.
    pub fn new(d: u32, n: u32, b: u32, t: u32, m: u32, channel: FiniteChannel, delta: f64) -> Result<Self> {
        for (name, value) in [("d", d), ("n", n), ("b", b), ("m", m)] {
            if value == 0 {
                return Err(Error::Domain {
                    name,
                    value: 0.0,
                    expected: "a positive integer",
                });
            }
        }
        check_probability("delta", delta)?;
        let (eta, eta_source, capacity) = match channel.as_bsc() {
            Some(eps) => (eta_bsc(eps)?.value, EtaSource::ExactBsc, 1.0 - binary_entropy(eps)?),
            None => (
                dobrushin_value(&channel),
                EtaSource::Dobrushin,
                channel.capacity(CAPACITY_TOL)?.upper,
            ),
        };
        Ok(Self {
            d,
            n,
            b,
            t,
            m,
            delta,
            eta_t: 1.0 - (1.0 - eta).powi(t as i32),
            eta,
            eta_source,
            capacity,
            channel,
        })
    }

    /// Binary symmetric link with crossover `eps`.
    pub fn with_bsc(d: u32, n: u32, b: u32, t: u32, m: u32, eps: f64, delta: f64) -> Result<Self> {
        Self::new(d, n, b, t, m, FiniteChannel::bsc(eps)?, delta)
    }

    pub fn capacity_budget(&self) -> f64 {
        self.capacity * self.t as f64
    }

    fn snapshot(&self) -> Vec<(String, f64)> {
        vec![
            ("d".into(), self.d as f64),
            ("n".into(), self.n as f64),
            ("b".into(), self.b as f64),
            ("T".into(), self.t as f64),
            ("m".into(), self.m as f64),
            ("delta".into(), self.delta),
            ("eta".into(), self.eta),
            ("eta_T".into(), self.eta_t),
            ("C".into(), self.capacity),
        ]
    }
}

/// A named bound value with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    /// Active argument of the min/sup.
    pub binding_term: String,
    pub valid: bool,
    /// Set when the value depends on a constant the source leaves unspecified.
    pub constant_unspecified: bool,
    pub inputs: Vec<(String, f64)>,
    pub extras: Vec<(String, f64)>,
}

impl BoundReport {
    fn new(name: &str, value: f64, binding_term: &str, inputs: Vec<(String, f64)>) -> Self {
        Self {
            name: name.into(),
            value,
            binding_term: binding_term.into(),
            valid: true,
            constant_unspecified: false,
            inputs,
            extras: Vec::new(),
        }
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn input(&self, key: &str) -> Option<f64> {
        self.inputs.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Flat key-value view; inputs and extras keep their insertion order.
    pub fn fields(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("name".to_string(), self.name.clone()),
            ("value".to_string(), fmt_num(self.value)),
            ("binding_term".to_string(), self.binding_term.clone()),
            ("valid".to_string(), self.valid.to_string()),
            ("constant_unspecified".to_string(), self.constant_unspecified.to_string()),
        ];
        out.extend(self.inputs.iter().map(|(k, v)| (k.clone(), fmt_num(*v))));
        out.extend(self.extras.iter().map(|(k, v)| (k.clone(), fmt_num(*v))));
        out
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// First minimum in listed order; ties keep the earlier term.
fn first_min(terms: &[(&str, f64)]) -> (String, f64) {
    let mut best = terms[0];
    for &term in &terms[1..] {
        if term.1 < best.1 {
            best = term;
        }
    }
    (best.0.to_string(), best.1)
}

/// Default radius grid for a prior: 64 logarithmic points up to the
/// loss-specific maximum.
pub fn default_rho_grid(prior: &PriorModel) -> Vec<f64> {
    log_grid(RHO_GRID_MIN, prior.default_rho_max(), RHO_GRID_POINTS)
}

fn risk_bracket(information: f64, small_ball: f64, rho: f64) -> f64 {
    if !(small_ball < 1.0) || small_ball <= 0.0 {
        return 0.0;
    }
    let spread = -small_ball.log2();
    (rho * (1.0 - (information + 1.0) / spread)).max(0.0)
}

/// Bayes-risk lower bound from mutual information and a small-ball function.
///
/// Evaluates the bracket on `rho_grid`, then refines between the neighbours
/// of the best grid point by golden-section search.
pub fn bayes_risk_lower_bound<F>(information: f64, small_ball: F, rho_grid: &[f64]) -> Result<BoundReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if information.is_nan() || information < 0.0 {
        return Err(Error::Domain {
            name: "I",
            value: information,
            expected: "a nonnegative number of bits",
        });
    }
    let mut grid: Vec<f64> = rho_grid.iter().copied().filter(|r| *r > 0.0 && r.is_finite()).collect();
    grid.sort_by(f64::total_cmp);
    if grid.is_empty() {
        return Err(Error::Domain {
            name: "rho_grid",
            value: f64::NAN,
            expected: "at least one positive radius",
        });
    }
    let mut saturated = true;
    let mut values = Vec::with_capacity(grid.len());
    for &rho in &grid {
        let l = small_ball(rho)?;
        saturated &= l >= 1.0;
        values.push(risk_bracket(information, l, rho));
    }
    let inputs = vec![("I".to_string(), information)];
    if saturated {
        let mut report = BoundReport::new("bayes_risk", 0.0, "small_ball_saturated", inputs);
        report.extras.push(("rho".into(), f64::NAN));
        return Ok(report);
    }
    let best = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let (mut rho, mut value) = (grid[best], values[best]);
    if value > 0.0 {
        let lo = if best > 0 { grid[best - 1] } else { grid[best] * 0.5 };
        let hi = grid.get(best + 1).copied().unwrap_or(grid[best]);
        let eval = |r: f64| small_ball(r).map_or(0.0, |l| risk_bracket(information, l, r));
        let (r_opt, v_opt) = golden_max(eval, lo, hi, 1e-6);
        if v_opt > value {
            rho = r_opt;
            value = v_opt;
        }
    }
    let term = if value > 0.0 { "rho_sup" } else { "bracket_nonpositive" };
    let mut report = BoundReport::new("bayes_risk", value, term, inputs);
    report.extras.push(("rho".into(), rho));
    Ok(report)
}

/// Theorem-1 bound on the default grid of a prior.
pub fn bayes_risk_lower_bound_for(prior: &PriorModel, information: f64) -> Result<BoundReport> {
    bayes_risk_lower_bound(information, |r| prior.small_ball(r), &default_rho_grid(prior))
}

/// Model-side inputs of the mutual-information bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelQuantities {
    /// `H(X^n)` or an upper bound on it.
    pub sample_entropy: f64,
    /// `max_j eta(P_{X_j^n}, P_{W_j|X_j^n})` or an upper bound.
    pub max_posterior_eta: f64,
    /// `I(W; X^n)` or an upper bound.
    pub sample_information: f64,
}

/// `I(W; V^T) <= min{(H(X^n) ^ b) eta_T eta_post, I(W;X^n) eta_T, C T}`.
pub fn mi_upper_single(p: &SystemParams, q: &ModelQuantities) -> Result<BoundReport> {
    for (name, v) in [
        ("H(X^n)", q.sample_entropy),
        ("eta_post", q.max_posterior_eta),
        ("I(W;X^n)", q.sample_information),
    ] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Domain {
                name,
                value: v,
                expected: "nonnegative",
            });
        }
    }
    let terms = [
        ("compression", q.sample_entropy.min(p.b as f64) * p.eta_t * q.max_posterior_eta),
        ("sample_information", q.sample_information * p.eta_t),
        ("channel_capacity", p.capacity_budget()),
    ];
    let (binding, value) = first_min(&terms);
    let mut inputs = p.snapshot();
    inputs.extend([
        ("H_Xn".into(), q.sample_entropy),
        ("eta_post".into(), q.max_posterior_eta),
        ("I_WXn".into(), q.sample_information),
    ]);
    let mut report = BoundReport::new("mi_upper_single", value, &binding, inputs);
    report.extras = terms.iter().map(|(k, v)| (format!("term_{k}"), *v)).collect();
    Ok(report)
}

/// `m` conditionally independent processors: `m` times the single bound.
pub fn mi_upper_multi(p: &SystemParams, q: &ModelQuantities) -> Result<BoundReport> {
    let mut report = mi_upper_single(p, q)?;
    report.name = "mi_upper_multi".into();
    report.value *= p.m as f64;
    report.extras.iter_mut().for_each(|(_, v)| *v *= p.m as f64);
    Ok(report)
}

/// Lower and repetition-code upper bounds on the minimum blocklength for
/// sending one bit with error at most `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlocklengthBracket {
    pub lower: f64,
    pub repetition_upper: f64,
}

pub fn cor1_blocklength_bounds(p_target: f64, eps: f64) -> Result<BlocklengthBracket> {
    open_range("p", p_target, 0.0, 0.5)?;
    open_range("eps", eps, 0.0, 0.5)?;
    let rate = -(4.0 * eps * (1.0 - eps)).log2();
    Ok(BlocklengthBracket {
        lower: -binary_entropy(p_target)?.log2() / rate,
        repetition_upper: 2.0 * -p_target.log2() / rate,
    })
}

/// Error probability lower bound for one bit after `t` uses of `BSC(eps)`:
/// `h(P_e) >= (4 eps (1 - eps))^t`.
pub fn bit_error_lb(eps: f64, t: u32) -> Result<f64> {
    check_probability("eps", eps)?;
    binary_entropy_inv((4.0 * eps * (1.0 - eps)).powi(t as i32).min(1.0))
}

/// Chernoff bound `(4 eps (1 - eps))^(t/2)` on the repetition-code error.
pub fn repetition_chernoff(eps: f64, t: u32) -> Result<f64> {
    check_probability("eps", eps)?;
    Ok((4.0 * eps * (1.0 - eps)).powf(t as f64 / 2.0))
}

/// Mutual-information bound for the hypercube model.
pub fn cor2_mi_discrete(p: &SystemParams) -> Result<BoundReport> {
    let d = p.d as f64;
    let b = p.b as f64;
    let ct = p.capacity_budget();
    let (name, terms): (&str, Vec<(&str, f64)>) = if p.n == 1 {
        (
            "cor2_n1",
            vec![("compression", d.min(b) * p.delta * p.delta * p.eta_t), ("channel_capacity", ct)],
        )
    } else {
        let xi = hypercube_posterior_dobrushin(p.delta, p.n)?;
        let entropy = d * (1.0 + p.n as f64 * binary_entropy((1.0 - p.delta) / 2.0)?);
        (
            "cor2_n",
            vec![
                ("compression", entropy.min(b) * xi * p.eta_t),
                ("sample_information", d * p.eta_t),
                ("channel_capacity", ct),
            ],
        )
    };
    let (binding, value) = first_min(&terms);
    let mut report = BoundReport::new(name, value, &binding, p.snapshot());
    if p.n > 1 {
        report.extras.push(("xi_n".into(), hypercube_posterior_dobrushin(p.delta, p.n)?));
    }
    Ok(report)
}

/// The earlier noiseless bound `min{d, b} 32 delta^2 / (1 - delta)^4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuchiComparison {
    pub value: f64,
    /// `32 delta^2 / (1 - delta)^4`.
    pub factor: f64,
    /// `delta` at which the factor equals one.
    pub crossing: f64,
}

pub fn duchi_factor(delta: f64) -> f64 {
    32.0 * delta * delta / (1.0 - delta).powi(4)
}

pub fn duchi_mi_bound(d: u32, b: u32, delta: f64) -> Result<DuchiComparison> {
    check_range("delta", delta, 0.0, 1.0, "[0, 1)")?;
    if delta == 1.0 {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            expected: "[0, 1)",
        });
    }
    let factor = duchi_factor(delta);
    Ok(DuchiComparison {
        value: d.min(b) as f64 * factor,
        factor,
        crossing: duchi_crossing(),
    })
}

/// Root of `32 delta^2 = (1 - delta)^4` on `(0, 1)`.
pub fn duchi_crossing() -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if duchi_factor(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bit-error lower bound `h^{-1}(1 - min{b delta^2 eta_T, C T}/d)` for `n = 1`.
pub fn cor3_bit_error_lb(p: &SystemParams) -> Result<BoundReport> {
    if p.n != 1 {
        return Err(Error::Incompatible(format!("bit-error bound needs n = 1, got {}", p.n)));
    }
    let terms = [
        ("compression", p.b as f64 * p.delta * p.delta * p.eta_t),
        ("channel_capacity", p.capacity_budget()),
    ];
    let (binding, info) = first_min(&terms);
    let argument = 1.0 - info / p.d as f64;
    let mut report = if (0.0..=1.0).contains(&argument) {
        BoundReport::new("cor3", binary_entropy_inv(argument)?, &binding, p.snapshot())
    } else {
        let mut r = BoundReport::new("cor3", 0.0, &binding, p.snapshot());
        r.valid = false;
        r
    };
    report.extras.push(("h_inv_argument".into(), argument));
    Ok(report)
}

/// Necessary rate `b/d >= (1 - h(p)) / (delta^2 eta_T)`.
pub fn cor4_rate_lb(p_target: f64, delta: f64, eta_t: f64) -> Result<f64> {
    open_range("p", p_target, 0.0, 0.5)?;
    half_open("delta", delta)?;
    half_open("eta_T", eta_t)?;
    Ok((1.0 - binary_entropy(p_target)?) / (delta * delta * eta_t))
}

/// `1 - h((2p + delta - 1) / (2 delta))`, defined for `(1 - delta)/2 <= p <= 1/2`.
pub fn noisy_lossy_rate(p_target: f64, delta: f64) -> Option<f64> {
    if !(delta > 0.0 && delta <= 1.0) || !(p_target <= 0.5) || p_target < (1.0 - delta) / 2.0 - 1e-12 {
        return None;
    }
    let arg = ((2.0 * p_target + delta - 1.0) / (2.0 * delta)).clamp(0.0, 0.5);
    binary_entropy(arg).ok().map(|h| 1.0 - h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig2Row {
    pub delta: f64,
    pub cor4: f64,
    pub noisy_lossy: Option<f64>,
    pub rate_distortion: f64,
}

/// Rate curves against `delta` at fixed target error `p`.
pub fn fig2_curves(p_target: f64, deltas: &[f64], eta_t: f64) -> Result<Vec<Fig2Row>> {
    let rate_distortion = 1.0 - binary_entropy(p_target)?;
    deltas
        .iter()
        .map(|&delta| {
            Ok(Fig2Row {
                delta,
                cor4: cor4_rate_lb(p_target, delta, eta_t)?,
                noisy_lossy: noisy_lossy_rate(p_target, delta),
                rate_distortion,
            })
        })
        .collect()
}

/// Risk lower bounds for the interval model as functions of `I*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuousRiskBounds {
    /// `(1/16) 2^{-2 I*}`.
    pub all_n: f64,
    /// `2^{-I*} / (8 I*)`.
    pub asymptotic: f64,
    /// Set when the asymptotic form is dominated by `grid_opt`, i.e. it is
    /// safe to quote as a bound at this `I*`.
    pub asymptotic_valid: bool,
    /// `(1/2) sup_s s 2^{-(I*+1)/(1-s)}`.
    pub grid_opt: f64,
    pub best_s: f64,
}

pub fn cor5_cont_risk_lb(i_star: f64) -> Result<ContinuousRiskBounds> {
    if i_star.is_nan() || i_star < 0.0 {
        return Err(Error::Domain {
            name: "I*",
            value: i_star,
            expected: "a nonnegative number of bits",
        });
    }
    let all_n = 2f64.powf(-2.0 * i_star) / 16.0;
    let asymptotic = if i_star > 0.0 {
        2f64.powf(-i_star) / (8.0 * i_star)
    } else {
        f64::INFINITY
    };
    let log_objective = |s: f64| s.ln() - (i_star + 1.0) / (1.0 - s) * std::f64::consts::LN_2;
    let (s_opt, log_opt) = golden_max(log_objective, 1e-12, 1.0 - 1e-12, 1e-12);
    let (best_s, grid_opt) = if 0.5 * log_opt.exp() >= all_n {
        (s_opt, 0.5 * log_opt.exp())
    } else {
        (0.5, all_n)
    };
    Ok(ContinuousRiskBounds {
        all_n,
        asymptotic,
        asymptotic_valid: asymptotic <= grid_opt,
        grid_opt,
        best_s,
    })
}

/// `(4 eps (1 - eps))^T` complement, the `T`-use contraction bound for a BSC.
fn bsc_eta_t(eps: f64, t: u32) -> f64 {
    1.0 - (4.0 * eps * (1.0 - eps)).powi(t as i32)
}

/// Mutual-information bound for the interval model over `BSC(eps)`, using the
/// exact `I(W; X^n)` from quadrature.
pub fn cor6_cont_mi_ub(n: u32, b: u32, eps: f64, t: u32) -> Result<BoundReport> {
    check_probability("eps", eps)?;
    let info = interval_sample_mi(n)?;
    let eta_t = bsc_eta_t(eps, t);
    let terms = [
        ("compression", b as f64 * (1.0 - 0.5f64.powi(n as i32)) * eta_t),
        ("sample_information", info.mutual_information * eta_t),
        ("channel_capacity", (1.0 - binary_entropy(eps)?) * t as f64),
    ];
    let (binding, value) = first_min(&terms);
    let inputs = vec![
        ("n".into(), n as f64),
        ("b".into(), b as f64),
        ("eps".into(), eps),
        ("T".into(), t as f64),
        ("eta_T".into(), eta_t),
        ("gamma_n".into(), info.gamma),
    ];
    let mut report = BoundReport::new("cor6", value, &binding, inputs);
    report.extras = terms.iter().map(|(k, v)| (format!("term_{k}"), *v)).collect();
    Ok(report)
}

/// Random-coding exponent of `BSC(eps)` in the low-rate straight-line region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorExponent {
    pub exponent: f64,
    /// `R <= 1 - h(sqrt(eps) / (sqrt(eps) + sqrt(1 - eps)))`.
    pub valid: bool,
    pub critical_rate: f64,
    /// `(1 - h(eps)) / (1 - log(1 + sqrt(4 eps (1 - eps))))`, in `[1, 2]`.
    pub capacity_ratio: f64,
}

pub fn error_exponent_bsc(eps: f64, rate: f64) -> Result<ErrorExponent> {
    open_range("eps", eps, 0.0, 0.5)?;
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::Domain {
            name: "R",
            value: rate,
            expected: "a nonnegative rate",
        });
    }
    let r0 = 1.0 - (1.0 + (4.0 * eps * (1.0 - eps)).sqrt()).log2();
    let (a, b) = (eps.sqrt(), (1.0 - eps).sqrt());
    let critical_rate = 1.0 - binary_entropy(a / (a + b))?;
    Ok(ErrorExponent {
        exponent: r0 - rate,
        valid: rate <= critical_rate,
        critical_rate,
        capacity_ratio: (1.0 - binary_entropy(eps)?) / r0,
    })
}

/// The two-regime risk bound for noisy transmission of the interval model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Case2Bound {
    pub sample_term: f64,
    pub channel_term: f64,
    /// `alpha * sample_term + (1 - alpha) * channel_term`.
    pub combination: f64,
    pub max_form: f64,
    pub c1: f64,
    pub constant_unspecified: bool,
}

pub fn case2_risk_lb(n: u32, eps: f64, t: u32, alpha: f64, c1: f64) -> Result<Case2Bound> {
    check_probability("alpha", alpha)?;
    open_range("eps", eps, 0.0, 0.5)?;
    if n < 2 {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            expected: "n >= 2 (log n appears in a denominator)",
        });
    }
    if t == 0 {
        return Err(Error::Domain {
            name: "T",
            value: 0.0,
            expected: "a positive integer",
        });
    }
    let eta_t = bsc_eta_t(eps, t);
    let nf = n as f64;
    let sample_term = c1 / (eta_t * nf.powf(eta_t).sqrt() * nf.log2());
    let budget = (1.0 - binary_entropy(eps)?) * t as f64;
    let channel_term = 2f64.powf(-budget) / (8.0 * budget);
    Ok(Case2Bound {
        sample_term,
        channel_term,
        combination: alpha * sample_term + (1.0 - alpha) * channel_term,
        max_form: sample_term.max(channel_term),
        c1,
        constant_unspecified: true,
    })
}

/// Minimax squared-error bound for the mean of a distribution on the cube.
pub fn minimax_mean_lb(d: u32, m: u32, b: u32, eta_t: f64) -> Result<BoundReport> {
    check_probability("eta_T", eta_t)?;
    if d == 0 || m == 0 || b == 0 {
        return Err(Error::Domain {
            name: "d, m, b",
            value: 0.0,
            expected: "positive integers",
        });
    }
    let df = d as f64;
    let ratio = df / (24.0 * eta_t * m as f64 * d.min(b) as f64);
    let (binding, delta_sq) = if ratio >= 1.0 { ("saturated", 1.0) } else { ("communication", ratio) };
    let inputs = vec![
        ("d".into(), df),
        ("m".into(), m as f64),
        ("b".into(), b as f64),
        ("eta_T".into(), eta_t),
    ];
    let mut report = BoundReport::new("cor8", df / 6.0 * delta_sq, binding, inputs);
    report.valid = d >= 12;
    report.extras.push(("delta_sq".into(), delta_sq));
    Ok(report)
}

fn open_range(name: &'static str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if v.is_nan() || v <= lo || v >= hi {
        return Err(Error::Domain {
            name,
            value: v,
            expected: "an open interval",
        });
    }
    Ok(v)
}

fn half_open(name: &'static str, v: f64) -> Result<f64> {
    if v.is_nan() || v <= 0.0 || v > 1.0 {
        return Err(Error::Domain {
            name,
            value: v,
            expected: "(0, 1]",
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Loss, PriorModel};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn noiseless(d: u32, n: u32, b: u32, t: u32, m: u32, delta: f64) -> SystemParams {
        SystemParams::with_bsc(d, n, b, t, m, 0.0, delta).unwrap()
    }

    #[test]
    fn system_params_derivation() {
        let p = SystemParams::with_bsc(4, 1, 4, 3, 1, 0.25, 0.5).unwrap();
        assert_eq!(p.eta_source, EtaSource::ExactBsc);
        close(p.eta, 0.25, 1e-15);
        close(p.eta_t, 1.0 - 0.75f64.powi(3), 1e-15);
        close(p.capacity, 1.0 - binary_entropy(0.25).unwrap(), 1e-15);

        let z = FiniteChannel::from_rows(&[vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        let p = SystemParams::new(4, 1, 4, 2, 1, z, 0.5).unwrap();
        assert_eq!(p.eta_source, EtaSource::Dobrushin);
        close(p.eta, 0.7, 1e-15);
        assert!(SystemParams::with_bsc(0, 1, 1, 1, 1, 0.1, 0.5).is_err());
    }

    #[test]
    fn bayes_bound_interval_no_data() {
        let prior = PriorModel::interval();
        let report = bayes_risk_lower_bound(0.0, |r| prior.small_ball(r), &[0.125]).unwrap();
        close(report.value, 0.0625, 1e-12);
        let report = bayes_risk_lower_bound_for(&prior, 0.0).unwrap();
        assert!(report.value >= 0.0625);
        assert!(report.value <= 0.25);
    }

    #[test]
    fn bayes_bound_vanishes_with_information() {
        let prior = PriorModel::interval();
        let report = bayes_risk_lower_bound_for(&prior, 1e6).unwrap();
        assert_eq!(report.value, 0.0);
        // bit prior with the bit fully observed: I = 1 makes every bracket nonpositive
        let report = bayes_risk_lower_bound_for(&PriorModel::bit(), 1.0).unwrap();
        assert_eq!(report.value, 0.0);
        let report = bayes_risk_lower_bound(0.0, |_| Ok(1.0), &[0.1, 0.2]).unwrap();
        assert_eq!(report.binding_term, "small_ball_saturated");
        assert!(bayes_risk_lower_bound(-1.0, |_| Ok(0.5), &[0.1]).is_err());
    }

    #[test]
    fn bayes_bound_dominates_closed_form_specialization() {
        let prior = PriorModel::interval();
        for i in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let grid = bayes_risk_lower_bound_for(&prior, i).unwrap().value;
            let closed = cor5_cont_risk_lb(i).unwrap().all_n;
            assert!(grid >= closed * (1.0 - 1e-6), "I={i}: {grid} < {closed}");
        }
    }

    #[test]
    fn bayes_bound_monotone_in_information() {
        let priors = [
            PriorModel::interval(),
            PriorModel::hypercube(20, Loss::HammingCount).unwrap(),
            PriorModel::hypercube(20, Loss::HammingNormalized).unwrap(),
        ];
        for prior in &priors {
            let mut last = f64::INFINITY;
            for k in 0..40 {
                let v = bayes_risk_lower_bound_for(prior, k as f64 * 0.25).unwrap().value;
                assert!(v <= last + 1e-12);
                last = v;
            }
        }
    }

    #[test]
    fn mi_upper_examples() {
        let p = noiseless(10, 1, 5, 10, 1, 0.5);
        let q = ModelQuantities {
            sample_entropy: 10.0,
            max_posterior_eta: 0.25,
            sample_information: 10.0 * (1.0 - binary_entropy(0.25).unwrap()),
        };
        let r = mi_upper_single(&p, &q).unwrap();
        close(r.value, 1.25, 1e-12);
        assert_eq!(r.binding_term, "compression");

        let p0 = noiseless(10, 1, 5, 0, 1, 0.5);
        assert_eq!(mi_upper_single(&p0, &q).unwrap().value, 0.0);
        assert_eq!(mi_upper_multi(&SystemParams { m: 7, ..p0 }, &q).unwrap().value, 0.0);

        let multi = mi_upper_multi(&p, &q).unwrap();
        close(multi.value, r.value, 1e-15);

        // m processors, n = 1, b = d: m delta^2 eta_T d
        let p = SystemParams::with_bsc(12, 1, 12, 3, 10, 0.1, 0.5).unwrap();
        let q = ModelQuantities {
            sample_entropy: 12.0,
            max_posterior_eta: 0.25,
            sample_information: 12.0,
        };
        let multi = mi_upper_multi(&p, &q).unwrap();
        close(multi.value, (10.0 * 0.25 * p.eta_t * 12.0).min(10.0 * p.capacity_budget()), 1e-12);
    }

    #[test]
    fn mi_upper_specializes_to_hypercube_single_sample() {
        for &(d, b, delta, eps, t) in &[
            (10, 5, 0.5, 0.0, 10),
            (8, 8, 0.9, 0.1, 4),
            (20, 3, 0.3, 0.2, 2),
            (6, 2, 0.7, 0.05, 1),
        ] {
            let p = SystemParams::with_bsc(d, 1, b, t, 1, eps, delta).unwrap();
            let q = ModelQuantities {
                sample_entropy: d as f64,
                max_posterior_eta: delta * delta,
                sample_information: d as f64 * (1.0 - binary_entropy((1.0 - delta) / 2.0).unwrap()),
            };
            let general = mi_upper_single(&p, &q).unwrap();
            let special = cor2_mi_discrete(&p).unwrap();
            assert!(general.value <= special.value + 1e-15);
            if general.binding_term != "sample_information" {
                assert_eq!(general.value, special.value);
            }
        }
    }

    #[test]
    fn cor1_examples() {
        let br = cor1_blocklength_bounds(0.01, 0.1).unwrap();
        close(br.lower, 2.4626, 1e-3);
        close(br.repetition_upper, 9.0152, 1e-3);
        close(repetition_chernoff(0.1, 9).unwrap(), 0.01007, 1e-5);
        let near_half = cor1_blocklength_bounds(0.4999999, 0.1).unwrap();
        assert!(near_half.lower < 1e-6);
        assert!(cor1_blocklength_bounds(0.6, 0.1).is_err());
        assert!(cor1_blocklength_bounds(0.1, 0.0).is_err());
        for eps in [0.01, 0.05, 0.1, 0.2, 0.3, 0.45] {
            for p in [0.3, 0.1, 0.05, 0.01, 0.001, 1e-6] {
                let br = cor1_blocklength_bounds(p, eps).unwrap();
                assert!(br.lower <= br.repetition_upper);
            }
        }
    }

    #[test]
    fn cor2_examples() {
        let p = noiseless(10, 1, 10, 100, 1, 1.0);
        close(cor2_mi_discrete(&p).unwrap().value, 10.0, 1e-12);
        let p = noiseless(10, 1, 5, 100, 1, 0.5);
        let r = cor2_mi_discrete(&p).unwrap();
        close(r.value, 1.25, 1e-12);
        let p = noiseless(10, 2, 5, 100, 1, 0.5);
        let r = cor2_mi_discrete(&p).unwrap();
        close(r.extra("xi_n").unwrap(), 0.8, 1e-12);
        close(r.value, 5.0 * 0.8, 1e-12);
    }

    #[test]
    fn duchi_examples() {
        let cmp = duchi_mi_bound(1, 1, 0.1).unwrap();
        close(cmp.value, 0.48773, 1e-4);
        close(cmp.crossing, 0.133, 1e-3);
        assert_eq!(duchi_mi_bound(3, 3, 0.0).unwrap().value, 0.0);
        assert!(duchi_mi_bound(3, 3, 1.0).is_err());
        close(duchi_factor(cmp.crossing), 1.0, 1e-9);
    }

    #[test]
    fn cor3_examples() {
        let p = noiseless(100, 1, 50, 0, 1, 0.5);
        let r = cor3_bit_error_lb(&p).unwrap();
        close(r.value, 0.5, 1e-9);
        let p = noiseless(100, 1, 50, 1000, 1, 0.5);
        let r = cor3_bit_error_lb(&p).unwrap();
        close(r.value, 0.2945, 1e-3);
        assert!(r.valid);
        let p = noiseless(4, 1, 50, 1000, 1, 1.0);
        assert!(!cor3_bit_error_lb(&p).unwrap().valid);
        assert!(cor3_bit_error_lb(&noiseless(4, 2, 4, 4, 1, 0.5)).is_err());
    }

    #[test]
    fn cor4_examples() {
        close(cor4_rate_lb(0.3, 0.5, 1.0).unwrap(), 0.47484, 1e-4);
        close(cor4_rate_lb(0.2, 1.0, 1.0).unwrap(), 1.0 - binary_entropy(0.2).unwrap(), 1e-15);
        assert!(cor4_rate_lb(0.4999999, 0.5, 1.0).unwrap() < 1e-9);
        assert!(cor4_rate_lb(0.3, 0.0, 1.0).is_err());
        assert!(cor4_rate_lb(0.3, 0.5, 0.0).is_err());
    }

    #[test]
    fn fig2_examples() {
        let rows = fig2_curves(0.3, &[0.2, 0.4, 0.7, 1.0], 1.0).unwrap();
        let last = rows[3];
        close(last.cor4, 0.11871, 1e-5);
        close(last.noisy_lossy.unwrap(), 0.11871, 1e-5);
        close(last.rate_distortion, 0.11871, 1e-5);
        assert!(rows[0].noisy_lossy.is_none());
        close(rows[1].noisy_lossy.unwrap(), 1.0, 1e-12);
        assert!(rows.iter().all(|r| r.rate_distortion == last.rate_distortion));
    }

    #[test]
    fn cor5_examples() {
        let b = cor5_cont_risk_lb(0.0).unwrap();
        close(b.all_n, 1.0 / 16.0, 1e-15);
        close(cor5_cont_risk_lb(4.0).unwrap().all_n, 1.0 / 4096.0, 1e-15);
        for i in [0.0, 0.3, 1.0, 4.0, 10.0, 40.0] {
            let b = cor5_cont_risk_lb(i).unwrap();
            assert!(b.grid_opt >= b.all_n);
            let at_half = 0.5 * 0.5 * 2f64.powf(-(i + 1.0) / 0.5);
            close(at_half, b.all_n, 1e-15 * b.all_n.max(1e-300));
        }
        assert!(!cor5_cont_risk_lb(0.5).unwrap().asymptotic_valid);
        assert!(cor5_cont_risk_lb(-1.0).is_err());
    }

    #[test]
    fn cor6_examples() {
        let r = cor6_cont_mi_ub(100, 4, 0.0, 4).unwrap();
        let info = interval_sample_mi(100).unwrap();
        let compression = 4.0 * (1.0 - 0.5f64.powi(100));
        let expected = compression.min(info.mutual_information).min(4.0);
        close(r.value, expected, 1e-12);
        assert_eq!(cor6_cont_mi_ub(10, 4, 0.1, 0).unwrap().value, 0.0);
    }

    #[test]
    fn error_exponent_examples() {
        let e = error_exponent_bsc(0.1, 0.0).unwrap();
        close(e.exponent, 0.32193, 1e-5);
        close(e.critical_rate, 0.18872, 1e-5);
        close(e.capacity_ratio, 1.6494, 1e-4);
        let edge = error_exponent_bsc(0.1, e.critical_rate).unwrap();
        assert!(edge.valid);
        close(edge.exponent, 0.13321, 1e-5);
        assert!(!error_exponent_bsc(0.1, 0.2).unwrap().valid);
        for eps in [0.001, 0.01, 0.1, 0.25, 0.4, 0.499] {
            let r = error_exponent_bsc(eps, 0.0).unwrap().capacity_ratio;
            assert!((1.0..=2.0).contains(&r), "eps {eps}: {r}");
        }
    }

    #[test]
    fn case2_examples() {
        let b = case2_risk_lb(100, 0.1, 20, 0.0, 1.0).unwrap();
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        let budget = 20.0 * (1.0 - h);
        close(budget, 10.62, 1e-2);
        close(b.combination, 1.0 / (2f64.powf(budget) * 8.0 * budget), 1e-15);
        close(b.combination, 7.48e-6, 1e-8);
        assert!(b.constant_unspecified);
        let b = case2_risk_lb(100, 0.1, 20, 1.0, 1.0).unwrap();
        assert_eq!(b.combination, b.sample_term);
        for alpha in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let b = case2_risk_lb(50, 0.2, 7, alpha, 1.0).unwrap();
            assert!(b.max_form >= b.combination);
        }
        assert!(case2_risk_lb(1, 0.1, 20, 0.5, 1.0).is_err());
    }

    #[test]
    fn minimax_examples() {
        let r = minimax_mean_lb(12, 10, 12, 1.0).unwrap();
        close(r.value, 1.0 / 120.0, 1e-15);
        assert!(r.valid);
        let r = minimax_mean_lb(12, 1000, 12, 1.0).unwrap();
        close(r.value, 1.0 / 12000.0, 1e-15);
        let r = minimax_mean_lb(12, 10, 12, 0.0).unwrap();
        close(r.value, 2.0, 1e-15);
        assert!(!minimax_mean_lb(11, 10, 11, 1.0).unwrap().valid);
    }

    #[test]
    fn risk_bounds_monotone() {
        let mut last = f64::INFINITY;
        for m in 1..50 {
            let v = minimax_mean_lb(24, m, 24, 0.7).unwrap().value;
            assert!(v <= last);
            last = v;
        }
        let mut last = f64::INFINITY;
        for b in 1..60 {
            let v = minimax_mean_lb(24, 5, b, 0.7).unwrap().value;
            assert!(v <= last);
            last = v;
        }
        for eps in [0.0, 0.1, 0.3] {
            let mut last = f64::INFINITY;
            for t in 0..30 {
                let p = SystemParams::with_bsc(100, 1, 50, t, 1, eps, 0.6).unwrap();
                let v = cor3_bit_error_lb(&p).unwrap().value;
                assert!(v <= last + 1e-15);
                last = v;
            }
        }
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let v = cor5_cont_risk_lb(k as f64 * 0.5).unwrap().grid_opt;
            assert!(v <= last);
            last = v;
        }
    }
}
