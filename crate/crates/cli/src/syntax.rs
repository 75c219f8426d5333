//! Value syntaxes: numeric grids, channel expressions and input distributions.

use sdpi_est::channel::DEFAULT_STATE_CAP;
use sdpi_est::{FiniteChannel, FiniteDistribution};

use crate::error::{bad, CliResult};

/// Most points a single grid may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;
/// Largest alphabet accepted by `identity:N` and `constant:N:...`.
pub const MAX_ALPHABET: usize = 256;

/// Parse `x`, `x,y,z`, `a:b:count` (inclusive, linear) or `a:b:count:log`.
pub fn parse_grid(key: &str, text: &str) -> CliResult<Vec<f64>> {
    let number = |t: &str| -> CliResult<f64> {
        let v: f64 = t.trim().parse().map_err(|_| bad(key, text, format!("{t:?} is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(key, text, "values must be finite"))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => {
            let values = text.split(',').map(number).collect::<CliResult<Vec<f64>>>()?;
            if values.len() > MAX_GRID_POINTS {
                return Err(bad(key, text, "too many points"));
            }
            Ok(values)
        }
        3 | 4 => {
            let (lo, hi) = (number(parts[0])?, number(parts[1])?);
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| bad(key, text, "point count must be a positive integer"))?;
            if count == 0 || count > MAX_GRID_POINTS {
                return Err(bad(key, text, format!("point count must be in 1..={MAX_GRID_POINTS}")));
            }
            let log = match parts.get(3).map(|s| s.trim()) {
                None => false,
                Some("log") => true,
                Some(other) => return Err(bad(key, text, format!("unknown grid scale {other:?}"))),
            };
            if count == 1 {
                return Ok(vec![lo]);
            }
            if log && !(lo > 0.0 && hi > 0.0) {
                return Err(bad(key, text, "log grids need positive endpoints"));
            }
            let step = |i: usize| i as f64 / (count - 1) as f64;
            Ok((0..count)
                .map(|i| match (i, log) {
                    (0, _) => lo,
                    (i, _) if i == count - 1 => hi,
                    (i, false) => lo + (hi - lo) * step(i),
                    (i, true) => (lo.ln() + (hi.ln() - lo.ln()) * step(i)).exp(),
                })
                .collect())
        }
        _ => Err(bad(key, text, "expected x, a list x,y or a range a:b:count")),
    }
}

/// A base channel used `uses` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelExpr {
    pub base: FiniteChannel,
    pub uses: usize,
}

impl ChannelExpr {
    /// The memoryless `uses`-fold channel.
    pub fn folded(&self) -> CliResult<FiniteChannel> {
        Ok(self.base.t_fold(self.uses, DEFAULT_STATE_CAP)?)
    }
}

/// Parse `bsc:EPS`, `identity:N`, `constant:N:p0,p1,..` or a matrix literal
/// (`matrix:` prefix optional, rows split by `;`), with an optional `^T`
/// suffix for `T` memoryless uses.
pub fn parse_channel(key: &str, text: &str) -> CliResult<ChannelExpr> {
    let text = text.trim();
    let (body, uses) = match text.rsplit_once('^') {
        Some((body, t)) => {
            let uses: usize = t.trim().parse().map_err(|_| bad(key, text, "uses after ^ must be an integer"))?;
            (body.trim(), uses)
        }
        None => (text, 1),
    };
    if uses == 0 {
        return Err(bad(key, text, "a channel must be used at least once"));
    }
    let size = |t: &str| -> CliResult<usize> {
        let n: usize = t.trim().parse().map_err(|_| bad(key, text, "alphabet size must be an integer"))?;
        if n == 0 || n > MAX_ALPHABET {
            return Err(bad(key, text, format!("alphabet size must be in 1..={MAX_ALPHABET}")));
        }
        Ok(n)
    };
    let base = if let Some(eps) = body.strip_prefix("bsc:") {
        let eps: f64 = eps.trim().parse().map_err(|_| bad(key, text, "crossover must be a number"))?;
        FiniteChannel::bsc(eps)?
    } else if let Some(n) = body.strip_prefix("identity:") {
        FiniteChannel::identity(size(n)?)?
    } else if let Some(rest) = body.strip_prefix("constant:") {
        let (n, row) = rest.split_once(':').ok_or_else(|| bad(key, text, "expected constant:N:p0,p1,..."))?;
        let row = parse_distribution(key, row)?;
        FiniteChannel::constant(size(n)?, &row)?
    } else {
        let literal = body.strip_prefix("matrix:").unwrap_or(body);
        if literal.split([';', ',', ' ']).filter(|t| !t.is_empty()).count() > MAX_ALPHABET * MAX_ALPHABET {
            return Err(bad(key, text, "matrix literal too large"));
        }
        literal.parse::<FiniteChannel>()?
    };
    let expr = ChannelExpr { base, uses };
    let states = (expr.base.input_size().max(expr.base.output_size()) as f64).powi(uses.min(64) as i32);
    if states > DEFAULT_STATE_CAP as f64 {
        return Err(bad(key, text, format!("{uses} uses exceed the {DEFAULT_STATE_CAP}-state cap")));
    }
    Ok(expr)
}

/// Comma-separated probabilities `p0,p1,...`.
pub fn parse_distribution(key: &str, text: &str) -> CliResult<FiniteDistribution> {
    let probs = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(key, text, format!("{t:?} is not a probability"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if probs.len() > MAX_ALPHABET * MAX_ALPHABET {
        return Err(bad(key, text, "too many entries"));
    }
    Ok(FiniteDistribution::new(probs)?)
}
