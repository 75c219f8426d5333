//! The four subcommands, each turning a config into a table.

use sdpi_est::bounds::{
    bayes_risk_lower_bound_for, bit_error_lb, case2_risk_lb, cor1_blocklength_bounds, cor2_mi_discrete,
    cor3_bit_error_lb, cor4_rate_lb, cor5_cont_risk_lb, cor6_cont_mi_ub, duchi_mi_bound, error_exponent_bsc,
    fig2_curves, mi_upper_multi, mi_upper_single, minimax_mean_lb, repetition_chernoff, BoundReport, ModelQuantities,
    SystemParams,
};
use sdpi_est::contraction::{
    dobrushin_coefficient, eta_t_use, sdpi_oracle_channel, sdpi_oracle_fixed_input, OracleOptions,
};
use sdpi_est::info::binary_entropy_inv;
use sdpi_est::models::{
    hypercube_posterior_dobrushin, hypercube_sample_entropy, Loss, ObservationModel, PriorModel,
};
use sdpi_est::simulator::{
    find_min_blocklength, multiproc_sign_scheme, no_data_scheme, quantized_mean_scheme, repetition_bit_scheme,
    repetition_error_exact, run_pipeline, sample_sum_scheme, Estimate, Protocol, RiskEstimate,
};
use sdpi_est::{FiniteChannel, FiniteDistribution};

use crate::config::{normalize_key, Config};
use crate::error::{bad, CliError, CliResult};
use crate::params::{Link, Params};
use crate::syntax::{parse_channel, parse_distribution};
use crate::table::{Cell, Table};

pub const COMMANDS: [&str; 4] = ["bound", "sdpi", "simulate", "figure"];
pub const BOUNDS: [&str; 13] = [
    "bayes", "mi-single", "mi-multi", "cor1", "cor2", "cor3", "cor4", "cor5", "cor6", "cor8", "duchi",
    "error-exponent", "case2",
];
pub const SCHEMES: [&str; 5] = ["repetition", "quantized-mean", "sample-sum", "multiproc", "no-data"];
pub const FIGURES: [&str; 2] = ["fig2", "example1-table"];

/// Largest Monte Carlo budget accepted from a config.
pub const MAX_TRIALS: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    /// Rows whose validity flag is false.
    pub invalid_rows: usize,
    /// Simulation rows whose risk plus CI falls below the paired bound.
    pub uncertified_rows: usize,
}

type Row = Vec<(String, Cell)>;

fn col(name: &str, cell: impl Into<Cell>) -> (String, Cell) {
    (name.to_string(), cell.into())
}

/// Table over the union of the row keys, in order of first appearance.
fn assemble(rows: Vec<Row>) -> Table {
    let mut columns: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let mut table = Table::with_columns(columns.clone());
    for row in rows {
        let cells = columns
            .iter()
            .map(|c| row.iter().find(|(k, _)| k == c).map_or(Cell::Empty, |(_, v)| v.clone()))
            .collect();
        table.push(cells);
    }
    table
}

fn count_flag(table: &Table, column: &str, bad_cell: &Cell) -> usize {
    match table.columns.iter().position(|c| c == column) {
        Some(i) => table.rows.iter().filter(|r| &r[i] == bad_cell).count(),
        None => 0,
    }
}

/// Run a config whose `command` (and `target` where needed) is set.
pub fn run(config: &Config) -> CliResult<Report> {
    let command = config
        .get("command")
        .ok_or_else(|| CliError::MissingKey("command".into()))?
        .to_string();
    let target = config.get("target").map(normalize_key);
    let p = Params::new(config);
    let need_target = |known: &[&str]| -> CliResult<String> {
        let t = target
            .clone()
            .ok_or_else(|| CliError::Usage(format!("{command} needs a target, one of {}", known.join(", "))))?;
        if known.contains(&t.as_str()) || (t == "minimax" && known.contains(&"cor8")) {
            Ok(t)
        } else {
            Err(CliError::Usage(format!("unknown {command} target {t:?}; expected one of {}", known.join(", "))))
        }
    };
    let rows = match command.as_str() {
        "bound" => bound(&p, &need_target(&BOUNDS)?)?,
        "sdpi" => {
            if target.is_some() {
                return Err(CliError::Usage("sdpi takes no target".into()));
            }
            sdpi(&p)?
        }
        "simulate" => simulate(&p)?,
        "figure" => figure(&p, &need_target(&FIGURES)?)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown command {other:?}; expected one of {}",
                COMMANDS.join(", ")
            )))
        }
    };
    p.finish(&command)?;
    let table = assemble(rows);
    Ok(Report {
        invalid_rows: count_flag(&table, "valid", &Cell::Flag(false)),
        uncertified_rows: count_flag(&table, "certified", &Cell::Verdict(false)),
        table,
    })
}

fn report_row(prefix: Row, r: &BoundReport) -> Row {
    let mut row = prefix;
    row.push(col("bound", r.name.as_str()));
    row.push(col("value", r.value));
    row.push(col("binding_term", r.binding_term.as_str()));
    row.push(col("valid", Cell::Flag(r.valid)));
    row.push(col("constant_unspecified", Cell::Flag(r.constant_unspecified)));
    row.extend(r.inputs.iter().map(|(k, v)| col(k, *v)));
    row.extend(r.extras.iter().map(|(k, v)| col(k, *v)));
    row
}

fn bound(p: &Params, target: &str) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    match target {
        "bayes" => {
            let prior_name = p.text("prior", Some("interval"))?;
            let infos = p.grid("info", None)?;
            let priors: Vec<(PriorModel, Option<u32>)> = match prior_name.as_str() {
                "bit" => vec![(PriorModel::bit(), None)],
                "interval" => vec![(PriorModel::interval(), None)],
                "hypercube" => {
                    let loss = match p.text("loss", Some("hamming-count"))?.as_str() {
                        "hamming-count" => Loss::HammingCount,
                        "hamming" => Loss::HammingNormalized,
                        other => return Err(bad("loss", other, "expected hamming or hamming-count")),
                    };
                    p.int_grid("d", None, 1, 10_000)?
                        .into_iter()
                        .map(|d| Ok((PriorModel::hypercube(d, loss)?, Some(d))))
                        .collect::<CliResult<_>>()?
                }
                other => return Err(bad("prior", other, "expected bit, interval or hypercube")),
            };
            for (prior, d) in &priors {
                for &info in &infos {
                    let r = bayes_risk_lower_bound_for(prior, info)?;
                    let mut prefix = vec![col("prior", prior_name.as_str())];
                    if let Some(d) = d {
                        prefix.push(col("d", *d));
                    }
                    rows.push(report_row(prefix, &r));
                }
            }
        }
        "mi-single" | "mi-multi" | "cor2" | "cor3" => {
            let ds = p.int_grid("d", None, 1, 1_000_000)?;
            let bs = p.int_grid("b", None, 1, 1_000_000)?;
            let ts = p.int_grid("t", Some("1"), 0, 1_000_000)?;
            let deltas = p.grid("delta", None)?;
            let ns = if target == "cor3" { vec![1] } else { p.int_grid("n", Some("1"), 1, 10_000)? };
            let ms = if target == "mi-multi" { p.int_grid("m", Some("1"), 1, 1_000_000)? } else { vec![1] };
            let links = p.links(Some("0"))?;
            let overrides = if target.starts_with("mi-") {
                (p.optional_num("h-xn")?, p.optional_num("eta-post")?, p.optional_num("i-wxn")?)
            } else {
                (None, None, None)
            };
            for link in &links {
                for &d in &ds {
                    for &n in &ns {
                        for &b in &bs {
                            for &t in &ts {
                                for &m in &ms {
                                    for &delta in &deltas {
                                        let sp = SystemParams::new(d, n, b, t, m, link.channel.clone(), delta)?;
                                        let r = match target {
                                            "cor2" => cor2_mi_discrete(&sp)?,
                                            "cor3" => cor3_bit_error_lb(&sp)?,
                                            _ => {
                                                let q = model_quantities(d, n, delta, overrides)?;
                                                if target == "mi-single" {
                                                    mi_upper_single(&sp, &q)?
                                                } else {
                                                    mi_upper_multi(&sp, &q)?
                                                }
                                            }
                                        };
                                        rows.push(report_row(vec![col("channel", link.label.as_str())], &r));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        "cor1" => {
            for eps in p.grid("eps", None)? {
                for pt in p.grid("p", None)? {
                    let br = cor1_blocklength_bounds(pt, eps)?;
                    rows.push(vec![
                        col("bound", "cor1"),
                        col("eps", eps),
                        col("p", pt),
                        col("lower", br.lower),
                        col("repetition_upper", br.repetition_upper),
                        col("valid", Cell::Flag(br.lower <= br.repetition_upper)),
                    ]);
                }
            }
        }
        "cor4" => {
            let ps = p.grid("p", None)?;
            let deltas = p.grid("delta", None)?;
            let etas = p.grid("eta-t", Some("1"))?;
            for &pt in &ps {
                for &eta in &etas {
                    for &delta in &deltas {
                        rows.push(vec![
                            col("bound", "cor4"),
                            col("p", pt),
                            col("delta", delta),
                            col("eta_T", eta),
                            col("value", cor4_rate_lb(pt, delta, eta)?),
                            col("valid", Cell::Flag(true)),
                        ]);
                    }
                }
            }
        }
        "cor5" => {
            for i_star in p.grid("i-star", None)? {
                let r = cor5_cont_risk_lb(i_star)?;
                rows.push(vec![
                    col("bound", "cor5"),
                    col("i_star", i_star),
                    col("all_n", r.all_n),
                    col("asymptotic", r.asymptotic),
                    col("asymptotic_valid", Cell::Flag(r.asymptotic_valid)),
                    col("grid_opt", r.grid_opt),
                    col("best_s", r.best_s),
                    col("valid", Cell::Flag(true)),
                ]);
            }
        }
        "cor6" => {
            let ns = p.int_grid("n", None, 1, 1_000_000)?;
            let bs = p.int_grid("b", None, 1, 1_000_000)?;
            let epss = p.grid("eps", Some("0"))?;
            let ts = p.int_grid("t", None, 0, 1_000_000)?;
            for &n in &ns {
                for &b in &bs {
                    for &eps in &epss {
                        for &t in &ts {
                            rows.push(report_row(Vec::new(), &cor6_cont_mi_ub(n, b, eps, t)?));
                        }
                    }
                }
            }
        }
        "cor8" | "minimax" => {
            let ds = p.int_grid("d", None, 1, 1_000_000)?;
            let ms = p.int_grid("m", None, 1, 1_000_000_000)?;
            let bs = p.int_grid("b", None, 1, 1_000_000)?;
            let etas = p.grid("eta-t", Some("1"))?;
            for &d in &ds {
                for &m in &ms {
                    for &b in &bs {
                        for &eta in &etas {
                            rows.push(report_row(Vec::new(), &minimax_mean_lb(d, m, b, eta)?));
                        }
                    }
                }
            }
        }
        "duchi" => {
            let ds = p.int_grid("d", Some("1"), 1, 1_000_000)?;
            let bs = p.int_grid("b", Some("1"), 1, 1_000_000)?;
            for &d in &ds {
                for &b in &bs {
                    for delta in p.grid("delta", None)? {
                        let r = duchi_mi_bound(d, b, delta)?;
                        rows.push(vec![
                            col("bound", "duchi"),
                            col("d", d),
                            col("b", b),
                            col("delta", delta),
                            col("value", r.value),
                            col("factor", r.factor),
                            col("ours_n1", d.min(b) as f64 * delta * delta),
                            col("crossing", r.crossing),
                            col("valid", Cell::Flag(true)),
                        ]);
                    }
                }
            }
        }
        "error-exponent" => {
            for eps in p.grid("eps", None)? {
                for rate in p.grid("rate", None)? {
                    let r = error_exponent_bsc(eps, rate)?;
                    rows.push(vec![
                        col("bound", "error_exponent"),
                        col("eps", eps),
                        col("rate", rate),
                        col("exponent", r.exponent),
                        col("critical_rate", r.critical_rate),
                        col("capacity_ratio", r.capacity_ratio),
                        col("valid", Cell::Flag(r.valid)),
                    ]);
                }
            }
        }
        "case2" => {
            let ns = p.int_grid("n", None, 2, 1_000_000_000)?;
            let epss = p.grid("eps", None)?;
            let ts = p.int_grid("t", None, 1, 1_000_000)?;
            let alphas = p.grid("alpha", Some("0,1"))?;
            let c1 = p.num("c1", Some("1"))?;
            for &n in &ns {
                for &eps in &epss {
                    for &t in &ts {
                        for &alpha in &alphas {
                            let r = case2_risk_lb(n, eps, t, alpha, c1)?;
                            rows.push(vec![
                                col("bound", "case2"),
                                col("n", n),
                                col("eps", eps),
                                col("T", t),
                                col("alpha", alpha),
                                col("c1", r.c1),
                                col("sample_term", r.sample_term),
                                col("channel_term", r.channel_term),
                                col("value", r.combination),
                                col("max_form", r.max_form),
                                col("constant_unspecified", Cell::Flag(r.constant_unspecified)),
                                col("valid", Cell::Flag(true)),
                            ]);
                        }
                    }
                }
            }
        }
        other => unreachable!("target {other} passed validation"),
    }
    Ok(rows)
}

/// Hypercube model quantities unless overridden: `H(X^n)`, the posterior
/// contraction (`delta^2` for one sample, its Dobrushin bound otherwise) and
/// `I(W; X^n) <= H(W) = d`.
fn model_quantities(
    d: u32,
    n: u32,
    delta: f64,
    (h, eta, info): (Option<f64>, Option<f64>, Option<f64>),
) -> CliResult<ModelQuantities> {
    let sample_entropy = match h {
        Some(v) => v,
        None => {
            let e = hypercube_sample_entropy(d, n, delta)?;
            e.exact.unwrap_or(e.bound)
        }
    };
    let max_posterior_eta = match eta {
        Some(v) => v,
        None if n == 1 => delta * delta,
        None => hypercube_posterior_dobrushin(delta, n)?,
    };
    Ok(ModelQuantities {
        sample_entropy,
        max_posterior_eta,
        sample_information: info.unwrap_or(d as f64),
    })
}

fn oracle_options(p: &Params) -> CliResult<OracleOptions> {
    let defaults = OracleOptions::default();
    Ok(OracleOptions {
        starts: p.int("starts", Some("16"), 1, 4096)? as usize,
        outer_starts: p.int("outer-starts", Some("16"), 1, 4096)? as usize,
        seed: p.seed()?,
        ..defaults
    })
}

fn sdpi(p: &Params) -> CliResult<Vec<Row>> {
    let text = p.text("channel", None)?;
    let expr = parse_channel("channel", &text)?;
    let opts = oracle_options(p)?;
    let folded = expr.folded()?;
    let uses = expr.uses as u32;
    let input = match p.optional_text("input") {
        None => None,
        Some("uniform") => Some(FiniteDistribution::uniform(folded.input_size())?),
        Some(raw) => Some(parse_distribution("input", raw)?),
    };
    let oracle = match &input {
        Some(mu) => sdpi_oracle_fixed_input(mu, &folded, &opts)?,
        None => sdpi_oracle_channel(&folded, &opts)?,
    };
    let dobrushin = dobrushin_coefficient(&folded).value;
    let bsc = expr.base.as_bsc();
    // single-use constant: exact for a BSC, else bracketed by oracle and Dobrushin
    let (single_lower, single_upper) = match bsc {
        Some(eps) => {
            let eta = (1.0 - 2.0 * eps).powi(2);
            (eta, eta)
        }
        None if uses == 1 && input.is_none() => (oracle.value, dobrushin_coefficient(&expr.base).value),
        None => (
            sdpi_oracle_channel(&expr.base, &opts)?.value,
            dobrushin_coefficient(&expr.base).value,
        ),
    };
    let uniform_input = input
        .as_ref()
        .is_none_or(|mu| mu.probs().iter().all(|&q| (q - 1.0 / mu.alphabet_size() as f64).abs() < 1e-12));
    let closed_form = match bsc {
        Some(_) if uses == 1 && uniform_input => Some(single_lower),
        _ => None,
    };
    let t_use_upper = eta_t_use(single_upper, uses)?;
    let upper = t_use_upper.min(dobrushin);
    let lower = if input.is_some() { oracle.value } else { single_lower };
    let witness = oracle.witness.as_ref().map_or(String::new(), |w| {
        w.probs().iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ")
    });
    Ok(vec![vec![
        col("channel", text.as_str()),
        col("uses", uses),
        col("input", input.as_ref().map_or("sup".to_string(), |mu| {
            mu.probs().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        })),
        col("oracle", oracle.value),
        col("oracle_kind", format!("{:?}", oracle.kind)),
        col("witness", witness),
        col("dobrushin", dobrushin),
        col("closed_form", Cell::opt(closed_form)),
        col("eta_single_lower", single_lower),
        col("t_use_upper", t_use_upper),
        col("bracket_lower", lower),
        col("bracket_upper", upper),
        col("restricted_to_support", Cell::Flag(oracle.restricted_to_support)),
        col("starts", opts.starts),
        col("seed", opts.seed),
        col("valid", Cell::Flag(oracle.value <= upper + 1e-6)),
    ]])
}

struct SimRow<'a> {
    scheme: &'a str,
    link: &'a Link,
    dims: [(&'static str, Option<f64>); 6],
    risk: RiskEstimate,
    bound: (f64, &'a str),
    upper: Option<f64>,
    exact: Option<f64>,
    valid: bool,
    tie_rule: &'a str,
}

impl SimRow<'_> {
    fn into_row(self) -> Row {
        let mut row = vec![col("scheme", self.scheme), col("channel", self.link.label.as_str())];
        row.extend(self.dims.iter().map(|(k, v)| col(k, Cell::opt(*v))));
        row.extend([
            col("trials", self.risk.trials),
            col("seed", self.risk.seed),
            col("mean_risk", self.risk.mean_risk),
            col("ci_halfwidth", self.risk.ci_halfwidth),
            col("risk_plus_ci", self.risk.upper()),
            col("lower_bound", self.bound.0),
            col("lower_bound_name", self.bound.1),
            col("upper_bound", Cell::opt(self.upper)),
            col("exact_risk", Cell::opt(self.exact)),
            col("certified", Cell::Verdict(self.risk.certifies(self.bound.0))),
            col("valid", Cell::Flag(self.valid)),
            col("tie_rule", self.tie_rule),
        ]);
        row
    }
}

fn dims(n: Option<u32>, b: Option<u32>, t: Option<u32>, d: Option<u32>, m: Option<u32>, delta: Option<f64>) -> [(&'static str, Option<f64>); 6] {
    let f = |v: Option<u32>| v.map(f64::from);
    [("n", f(n)), ("b", f(b)), ("T", f(t)), ("d", f(d)), ("m", f(m)), ("delta", delta)]
}

fn require_binary(link: &Link) -> CliResult<()> {
    if link.channel.input_size() != 2 {
        return Err(bad("channel", &link.label, "simulated schemes send binary symbols"));
    }
    Ok(())
}

/// Single-use contraction of a link: exact for a BSC, Dobrushin otherwise.
fn link_eta(link: &Link) -> f64 {
    match link.eps {
        Some(eps) => (1.0 - 2.0 * eps).powi(2),
        None => dobrushin_coefficient(&link.channel).value,
    }
}

/// Upper bound on `I(W; V^T)` for the interval model over a link.
fn interval_information(link: &Link, n: u32, b: u32, t: u32) -> CliResult<f64> {
    Ok(match link.eps {
        Some(eps) => cor6_cont_mi_ub(n, b, eps, t)?.value,
        None => {
            let capacity = link.channel.capacity(1e-9)?.upper;
            (b as f64).min(capacity * t as f64)
        }
    })
}

fn simulate(p: &Params) -> CliResult<Vec<Row>> {
    let scheme = normalize_key(&p.text("scheme", None)?);
    let seed = p.seed()?;
    let trials = p.int("trials", Some("100000"), 1, MAX_TRIALS)?;
    let default_eps = match scheme.as_str() {
        "repetition" | "sample-sum" => None,
        _ => Some("0"),
    };
    let links = p.links(default_eps)?;
    let mut rows = Vec::new();
    let run = |model: &ObservationModel, protocol: &dyn Protocol, link: &Link| -> CliResult<RiskEstimate> {
        Ok(run_pipeline(model, protocol, &link.channel, trials, seed)?)
    };
    match scheme.as_str() {
        "repetition" => {
            let ts = p.int_grid("t", None, 1, 100_000)?;
            let model = ObservationModel::new(PriorModel::bit(), 1, 1.0)?;
            for link in &links {
                require_binary(link)?;
                for &t in &ts {
                    let risk = run(&model, &repetition_bit_scheme(t as usize), link)?;
                    let (bound, exact, upper) = match link.eps {
                        Some(eps) => (
                            bit_error_lb(eps, t)?,
                            Some(repetition_error_exact(eps, t)?),
                            Some(repetition_chernoff(eps, t)?),
                        ),
                        None => (binary_entropy_inv((1.0 - link_eta(link)).powi(t as i32))?, None, None),
                    };
                    rows.push(
                        SimRow {
                            scheme: "repetition",
                            link,
                            dims: dims(Some(1), Some(1), Some(t), None, None, None),
                            risk,
                            bound: (bound, "bit_error_lb"),
                            upper,
                            exact,
                            valid: true,
                            tie_rule: if t % 2 == 0 { "ties_to_0" } else { "" },
                        }
                        .into_row(),
                    );
                }
            }
        }
        "quantized-mean" => {
            let ns = p.int_grid("n", None, 1, 1_000_000)?;
            let bs = p.int_grid("b", None, 1, 48)?;
            for link in &links {
                require_binary(link)?;
                for &n in &ns {
                    let model = ObservationModel::new(PriorModel::interval(), n, 0.0)?;
                    for &b in &bs {
                        let risk = run(&model, &quantized_mean_scheme(n, b)?, link)?;
                        let i_star = interval_information(link, n, b, b)?;
                        let bound = cor5_cont_risk_lb(i_star)?.all_n;
                        let noiseless = link.channel == FiniteChannel::identity(2)?;
                        let upper = noiseless.then(|| 1.0 / (6.0 * n as f64).sqrt() + 0.5f64.powi(b as i32));
                        rows.push(
                            SimRow {
                                scheme: "quantized-mean",
                                link,
                                dims: dims(Some(n), Some(b), Some(b), None, None, None),
                                risk,
                                bound: (bound, "cor5_all_n"),
                                upper,
                                exact: None,
                                valid: true,
                                tie_rule: "",
                            }
                            .into_row(),
                        );
                    }
                }
            }
        }
        "sample-sum" => {
            let ns = p.int_grid("n", None, 1, sdpi_est::simulator::MAX_SUM_SAMPLES)?;
            let ts = p.int_grid("t", None, 0, sdpi_est::simulator::MAX_SUM_BLOCKLENGTH as u32)?;
            let code_seed = match p.optional_text("code-seed") {
                Some(text) => text.parse().map_err(|_| bad("code-seed", text, "expected an unsigned integer"))?,
                None => seed,
            };
            for link in &links {
                require_binary(link)?;
                for &n in &ns {
                    let model = ObservationModel::new(PriorModel::interval(), n, 0.0)?;
                    for &t in &ts {
                        let scheme = sample_sum_scheme(n, t as usize, code_seed)?;
                        let b = scheme.bits();
                        let risk = run(&model, &scheme, link)?;
                        let bound = cor5_cont_risk_lb(interval_information(link, n, b, t)?)?.all_n;
                        rows.push(
                            SimRow {
                                scheme: "sample-sum",
                                link,
                                dims: dims(Some(n), Some(b), Some(t), None, None, None),
                                risk,
                                bound: (bound, "cor5_all_n"),
                                upper: None,
                                exact: None,
                                valid: true,
                                tie_rule: "",
                            }
                            .into_row(),
                        );
                    }
                }
            }
        }
        "multiproc" => {
            let ds = p.int_grid("d", None, 1, 63)?;
            let ms = p.int_grid("m", None, 1, 100_000)?;
            let delta_override = p.optional_num("delta")?;
            for link in &links {
                require_binary(link)?;
                for &d in &ds {
                    let eta_t = eta_t_use(link_eta(link), d)?;
                    for &m in &ms {
                        let bound = minimax_mean_lb(d, m, d, eta_t)?;
                        let delta = match delta_override {
                            Some(v) => v,
                            None => bound.extra("delta_sq").unwrap_or(1.0).sqrt(),
                        };
                        let prior = PriorModel::hypercube(d, Loss::SquaredMean)?;
                        let model = ObservationModel::new(prior, 1, delta)?;
                        let risk = run(&model, &multiproc_sign_scheme(m as usize, d)?, link)?;
                        rows.push(
                            SimRow {
                                scheme: "multiproc",
                                link,
                                dims: dims(Some(1), Some(d), Some(d), Some(d), Some(m), Some(delta)),
                                risk,
                                bound: (bound.value, "cor8"),
                                upper: None,
                                exact: Some(d as f64 * (1.0 - delta * delta) / m as f64),
                                valid: bound.valid,
                                tie_rule: "",
                            }
                            .into_row(),
                        );
                    }
                }
            }
        }
        "no-data" => {
            let ns = p.int_grid("n", Some("1"), 1, 1_000_000)?;
            let bound = bayes_risk_lower_bound_for(&PriorModel::interval(), 0.0)?.value;
            for link in &links {
                for &n in &ns {
                    let model = ObservationModel::new(PriorModel::interval(), n, 0.0)?;
                    let risk = run(&model, &no_data_scheme(Estimate::Real(0.5)), link)?;
                    rows.push(
                        SimRow {
                            scheme: "no-data",
                            link,
                            dims: dims(Some(n), Some(0), Some(0), None, None, None),
                            risk,
                            bound: (bound, "bayes"),
                            upper: None,
                            exact: Some(0.25),
                            valid: true,
                            tie_rule: "",
                        }
                        .into_row(),
                    );
                }
            }
        }
        other => {
            return Err(bad("scheme", other, format!("expected one of {}", SCHEMES.join(", "))));
        }
    }
    Ok(rows)
}

fn figure(p: &Params, target: &str) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    match target {
        "fig2" => {
            let pt = p.num("p", Some("0.3"))?;
            let deltas = p.grid("delta", Some("0.01:1:100"))?;
            let eta = p.num("eta-t", Some("1"))?;
            for r in fig2_curves(pt, &deltas, eta)? {
                rows.push(vec![
                    col("delta", r.delta),
                    col("cor4", r.cor4),
                    col("tilde_r", Cell::opt(r.noisy_lossy)),
                    col("r", r.rate_distortion),
                ]);
            }
        }
        "example1-table" => {
            let epss = p.grid("eps", Some("0.05,0.1,0.2"))?;
            let ps = p.grid("p", Some("0.05,0.01,0.001"))?;
            let t_max = p.int("t-max", Some("10000"), 1, 1_000_000)? as u32;
            for &eps in &epss {
                for &pt in &ps {
                    let br = cor1_blocklength_bounds(pt, eps)?;
                    let found = find_min_blocklength(eps, pt, t_max)?.blocklength;
                    let inside = found.is_some_and(|t| {
                        br.lower.ceil() <= t as f64 && t as f64 <= br.repetition_upper.ceil()
                    });
                    rows.push(vec![
                        col("eps", eps),
                        col("p", pt),
                        col("t_lower", br.lower),
                        col("t_exact", found.map_or(Cell::Empty, |t| Cell::Int(t as i64))),
                        col("t_upper", br.repetition_upper),
                        col("valid", Cell::Flag(inside)),
                    ]);
                }
            }
        }
        other => unreachable!("figure {other} passed validation"),
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run_text(text: &str) -> Report {
        run(&parse_config(text).unwrap()).unwrap()
    }

    fn column(report: &Report, name: &str) -> Vec<Cell> {
        let i = report.table.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        report.table.rows.iter().map(|r| r[i].clone()).collect()
    }

    fn num(cell: &Cell) -> f64 {
        match cell {
            Cell::Num(v) => *v,
            Cell::Int(v) => *v as f64,
            other => panic!("not a number: {other:?}"),
        }
    }

    #[test]
    fn cor4_grid() {
        let r = run_text("command = bound\ntarget = cor4\np = 0.3\ndelta = 0.4:1.0:61\neta-t = 1");
        assert_eq!(r.table.rows.len(), 61);
        let values = column(&r, "value");
        assert!((num(values.last().unwrap()) - 0.118709).abs() < 1e-5);
        assert_eq!(r.invalid_rows, 0);
    }

    #[test]
    fn cor8_and_cor1() {
        let r = run_text("command = bound\ntarget = cor8\nd = 12\nm = 10\nb = 12\neta-T = 1");
        assert!((num(&column(&r, "value")[0]) - 1.0 / 120.0).abs() < 1e-15);
        let r = run_text("command = bound\ntarget = cor1\neps = 0.1\np = 0.01");
        assert!((num(&column(&r, "lower")[0]) - 2.4626).abs() < 1e-3);
        assert!((num(&column(&r, "repetition_upper")[0]) - 9.0152).abs() < 1e-3);
    }

    #[test]
    fn invalid_rows_are_counted() {
        let r = run_text("command = bound\ntarget = cor8\nd = 11,12\nm = 10\nb = 12");
        assert_eq!(r.invalid_rows, 1);
    }

    #[test]
    fn mixed_extras_share_a_table() {
        let r = run_text("command = bound\ntarget = cor2\nd = 4\nb = 8\nn = 1,2\ndelta = 0.5\neps = 0.1");
        let xi = column(&r, "xi_n");
        assert_eq!(xi[0], Cell::Empty);
        assert!((num(&xi[1]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mi_single_example() {
        let r = run_text("command = bound\ntarget = mi-single\nd = 10\nb = 5\ndelta = 0.5\nt = 10\nh-xn = 10");
        assert!((num(&column(&r, "value")[0]) - 1.25).abs() < 1e-12);
        assert_eq!(column(&r, "binding_term")[0], Cell::Text("compression".into()));
    }

    #[test]
    fn sdpi_rows() {
        let r = run_text("command = sdpi\nchannel = bsc:0.25\nseed = 1");
        assert!((num(&column(&r, "oracle")[0]) - 0.25).abs() < 1e-3);
        assert_eq!(num(&column(&r, "dobrushin")[0]), 0.5);
        assert_eq!(num(&column(&r, "closed_form")[0]), 0.25);

        let r = run_text("command = sdpi\nchannel = bsc:0.25^2\nseed = 1");
        assert_eq!(num(&column(&r, "bracket_lower")[0]), 0.25);
        assert!((num(&column(&r, "bracket_upper")[0]) - 0.4375).abs() < 1e-12);
        let oracle = num(&column(&r, "oracle")[0]);
        assert!((0.25 - 1e-3..=0.4375 + 1e-3).contains(&oracle));

        let r = run_text("command = sdpi\nchannel = constant:3:0.6,0.4\nseed = 1");
        assert_eq!(num(&column(&r, "oracle")[0]), 0.0);
        assert_eq!(num(&column(&r, "dobrushin")[0]), 0.0);
    }

    #[test]
    fn randomized_commands_need_seed() {
        for text in ["command = sdpi\nchannel = bsc:0.1", "command = simulate\nscheme = no-data"] {
            assert!(matches!(run(&parse_config(text).unwrap()), Err(CliError::Usage(_))));
        }
    }

    #[test]
    fn typos_are_rejected() {
        let err = run(&parse_config("command = bound\ntarget = cor4\np = 0.3\ndelta = 0.5\netaa = 1").unwrap());
        assert!(matches!(err, Err(CliError::UnusedKey { .. })));
        assert!(run(&parse_config("command = bound\ntarget = cor9").unwrap()).is_err());
        assert!(run(&parse_config("command = fly").unwrap()).is_err());
        assert!(run(&parse_config("command = bound\ntarget = cor2\nd = 1\nb = 1\ndelta = 0.5\neps = 0.1\nchannel = bsc:0.1").unwrap()).is_err());
    }

    #[test]
    fn simulate_repetition() {
        let r = run_text("command = simulate\nscheme = repetition\neps = 0.1\nt = 1:4:4\ntrials = 20000\nseed = 3");
        assert_eq!(r.table.rows.len(), 4);
        assert_eq!(r.uncertified_rows, 0);
        assert_eq!(column(&r, "tie_rule")[1], Cell::Text("ties_to_0".into()));
        for (risk, exact) in column(&r, "mean_risk").iter().zip(column(&r, "exact_risk")) {
            assert!((num(risk) - num(&exact)).abs() < 0.02);
        }
    }

    #[test]
    fn simulate_other_schemes() {
        let r = run_text("command = simulate\nscheme = quantized-mean\nn = 100\nb = 4\ntrials = 20000\nseed = 1");
        let risk = num(&column(&r, "mean_risk")[0]);
        assert!(risk >= num(&column(&r, "lower_bound")[0]));
        assert!(risk <= num(&column(&r, "upper_bound")[0]));
        let r = run_text("command = simulate\nscheme = sample-sum\nn = 20\nt = 12\neps = 0.05\ntrials = 20000\nseed = 1");
        assert_eq!(r.uncertified_rows, 0);
        let r = run_text("command = simulate\nscheme = multiproc\nd = 12\nm = 10\ntrials = 5000\nseed = 1");
        assert_eq!(r.uncertified_rows, 0);
        assert!((num(&column(&r, "delta")[0]).powi(2) - 1.0 / 240.0).abs() < 1e-12);
        let r = run_text("command = simulate\nscheme = no-data\ntrials = 20000\nseed = 1");
        assert!((num(&column(&r, "mean_risk")[0]) - 0.25).abs() < 0.01);
    }

    #[test]
    fn figures() {
        let r = run_text("command = figure\ntarget = fig2");
        assert_eq!(r.table.columns, ["delta", "cor4", "tilde_r", "r"]);
        let last = r.table.rows.last().unwrap();
        for cell in &last[1..] {
            assert!((num(cell) - 0.11871).abs() < 1e-5);
        }
        let tilde = column(&r, "tilde_r");
        let deltas = column(&r, "delta");
        for (d, t) in deltas.iter().zip(&tilde) {
            assert_eq!(num(d) >= 0.4 - 1e-12, *t != Cell::Empty);
        }

        let r = run_text("command = figure\ntarget = example1_table");
        assert_eq!(r.table.rows.len(), 9);
        assert_eq!(r.invalid_rows, 0);
        let row = r.table.rows.iter().find(|row| row[0] == Cell::Num(0.1) && row[1] == Cell::Num(0.01)).unwrap();
        assert_eq!(row[3], Cell::Int(5));
    }
}
