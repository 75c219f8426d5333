use std::cell::RefCell;
use std::collections::BTreeSet;

use sdpi_est::FiniteChannel;

use crate::config::Config;
use crate::error::{bad, CliError, CliResult};
use crate::syntax::{parse_channel, parse_grid};

/// Typed access to a config that remembers which keys were read, so that
/// misspelled keys can be reported instead of silently ignored.
pub struct Params<'a> {
    config: &'a Config,
    used: RefCell<BTreeSet<String>>,
}

/// A single-use link, either a BSC from an `eps` grid or a parsed channel expr.
#[derive(Debug, Clone)]
pub struct Link {
    pub label: String,
    pub channel: FiniteChannel,
    pub eps: Option<f64>,
}

impl<'a> Params<'a> {
    pub fn new(config: &'a Config) -> Self {
        let used = ["command", "target"].iter().map(|s| s.to_string()).collect();
        Self {
            config,
            used: RefCell::new(used),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.config.get(key).is_some()
    }

    fn take(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.config.get(key)
    }

    fn raw(&self, key: &str, default: Option<&'a str>) -> CliResult<&'a str> {
        self.take(key)
            .or(default)
            .ok_or_else(|| CliError::MissingKey(key.to_string()))
    }

    pub fn text(&self, key: &str, default: Option<&'a str>) -> CliResult<String> {
        Ok(self.raw(key, default)?.to_string())
    }

    pub fn optional_text(&self, key: &str) -> Option<&'a str> {
        self.take(key)
    }

    pub fn grid(&self, key: &str, default: Option<&'a str>) -> CliResult<Vec<f64>> {
        parse_grid(key, self.raw(key, default)?)
    }

    pub fn int_grid(&self, key: &str, default: Option<&'a str>, min: u32, max: u32) -> CliResult<Vec<u32>> {
        let text = self.raw(key, default)?;
        parse_grid(key, text)?
            .into_iter()
            .map(|v| {
                if v.fract() != 0.0 || v < min as f64 || v > max as f64 {
                    Err(bad(key, text, format!("entries must be integers in {min}..={max}")))
                } else {
                    Ok(v as u32)
                }
            })
            .collect()
    }

    pub fn num(&self, key: &str, default: Option<&'a str>) -> CliResult<f64> {
        let text = self.raw(key, default)?;
        match parse_grid(key, text)?.as_slice() {
            [v] => Ok(*v),
            _ => Err(bad(key, text, "expected a single number")),
        }
    }

    pub fn optional_num(&self, key: &str) -> CliResult<Option<f64>> {
        match self.take(key) {
            Some(_) => self.num(key, None).map(Some),
            None => Ok(None),
        }
    }

    pub fn int(&self, key: &str, default: Option<&'a str>, min: u64, max: u64) -> CliResult<u64> {
        let text = self.raw(key, default)?;
        let v: u64 = text
            .parse()
            .map_err(|_| bad(key, text, "expected a nonnegative integer"))?;
        if v < min || v > max {
            return Err(bad(key, text, format!("must be in {min}..={max}")));
        }
        Ok(v)
    }

    /// Randomized commands refuse to run without an explicit seed.
    pub fn seed(&self) -> CliResult<u64> {
        let text = self
            .take("seed")
            .ok_or_else(|| CliError::Usage("this command draws random numbers and needs an explicit --seed".into()))?;
        text.parse().map_err(|_| bad("seed", text, "expected an unsigned 64-bit integer"))
    }

    /// Links from `channel` or an `eps` grid of BSCs; `default_eps` applies
    /// when neither is given.
    pub fn links(&self, default_eps: Option<&'a str>) -> CliResult<Vec<Link>> {
        let channel = self.take("channel");
        let eps = self.take("eps");
        match (channel, eps) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either `channel` or `eps`, not both".into())),
            (Some(text), None) => {
                let expr = parse_channel("channel", text)?;
                if expr.uses != 1 {
                    return Err(bad("channel", text, "give the number of uses with `t`, not `^`"));
                }
                Ok(vec![Link {
                    label: text.to_string(),
                    eps: expr.base.as_bsc(),
                    channel: expr.base,
                }])
            }
            (None, eps) => {
                let text = eps.or(default_eps).ok_or_else(|| CliError::MissingKey("channel or eps".into()))?;
                parse_grid("eps", text)?
                    .into_iter()
                    .map(|e| {
                        Ok(Link {
                            label: format!("bsc:{e}"),
                            channel: FiniteChannel::bsc(e).map_err(|err| bad("eps", text, err.to_string()))?,
                            eps: Some(e),
                        })
                    })
                    .collect()
            }
        }
    }

    /// Fail on keys that were never read.
    pub fn finish(&self, command: &str) -> CliResult<()> {
        let used = self.used.borrow();
        match self.config.keys().find(|k| !used.contains(*k)) {
            Some(key) => Err(CliError::UnusedKey {
                key: key.to_string(),
                command: command.to_string(),
            }),
            None => Ok(()),
        }
    }
}
