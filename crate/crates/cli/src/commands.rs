use anyhow::Result;
use refund_core::learning::{learning_region, quitting_belief_inverse, trial_belief_inverse};
use refund_core::mechanism::{implementing_mechanism, RefundMechanism};
use refund_core::optimizer::{self, price_response, region_map, OptimalBeta, Solution};
use refund_core::oracle::{
    dp_convergence, learning_rate_for, run_oracle, ConvergencePoint, DpReport, Estimate,
};
use refund_core::{badnews, postpurchase, Execution, ModelParams};
use serde::Serialize;

use crate::config::{config_err, Format, Grid, RunConfig};
use crate::output::{csv_bytes, envelope, fmt_num, fmt_opt, json_bytes};

/// Finished output and whether every requested check passed.
pub struct Rendered {
    pub bytes: Vec<u8>,
    pub checks_passed: bool,
}

impl Rendered {
    fn ok(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            checks_passed: true,
        }
    }
}

fn json_only(cfg: &RunConfig) -> Result<()> {
    if cfg.format_or(Format::Json) != Format::Json {
        return Err(config_err(format!("'{}' emits JSON only", cfg.command)).into());
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Model {
    GoodNews,
    BadNews,
    PostPurchaseLimit,
}

impl Model {
    fn of(cfg: &RunConfig) -> Self {
        if cfg.badnews {
            Model::BadNews
        } else if cfg.postpurchase_limit {
            Model::PostPurchaseLimit
        } else {
            Model::GoodNews
        }
    }

    fn name(self) -> &'static str {
        match self {
            Model::GoodNews => "good-news",
            Model::BadNews => "bad-news",
            Model::PostPurchaseLimit => "postpurchase-limit",
        }
    }

    fn solve(self, mu0: f64, p: &ModelParams) -> refund_core::Result<Solution> {
        match self {
            Model::GoodNews => optimizer::optimal_mechanism(mu0, p),
            Model::BadNews => badnews::optimal_mechanism(mu0, p),
            Model::PostPurchaseLimit => postpurchase::optimal_mechanism_limit(mu0, p),
        }
    }
}

#[derive(Serialize)]
struct SolveBody {
    model: &'static str,
    #[serde(flatten)]
    solution: Solution,
}

pub fn solve(cfg: &RunConfig) -> Result<Rendered> {
    json_only(cfg)?;
    cfg.reject(&[
        ("--grid", cfg.grid.is_some()),
        ("--price", cfg.price.is_some()),
        ("--beta", cfg.beta.is_some()),
        ("--check", cfg.check),
    ])?;
    let p = cfg.params()?;
    let model = Model::of(cfg);
    let solution = model.solve(cfg.mu0, &p)?;
    let body = SolveBody {
        model: model.name(),
        solution,
    };
    Ok(Rendered::ok(json_bytes(&envelope(cfg, body))?))
}

#[derive(Serialize)]
struct SweepRow {
    t_b: f64,
    beta_star: Option<f64>,
    revenue: Option<f64>,
    x_r: Option<f64>,
    t_r: Option<f64>,
    gamma: Option<f64>,
    branch: Option<&'static str>,
    status: &'static str,
    detail: Option<String>,
}

fn branch_name(b: &OptimalBeta) -> &'static str {
    match b {
        OptimalBeta::NoLearning => "no_learning",
        OptimalBeta::LimitToPrior => "limit_to_prior",
        OptimalBeta::Interior(_) => "interior",
        OptimalBeta::FullLearning(_) => "full_learning",
    }
}

fn sweep_row(t_b: f64, mu0: f64, p: &ModelParams) -> SweepRow {
    match price_response(t_b, mu0, p) {
        Ok(r) => SweepRow {
            t_b,
            beta_star: Some(r.beta_star),
            revenue: Some(r.revenue),
            x_r: Some(r.x_r),
            t_r: Some(r.t_r),
            gamma: Some(r.gamma),
            branch: Some(branch_name(&r.beta)),
            status: "ok",
            detail: None,
        },
        Err(e) => SweepRow {
            t_b,
            beta_star: None,
            revenue: None,
            x_r: None,
            t_r: None,
            gamma: None,
            branch: None,
            status: "infeasible",
            detail: Some(e.to_string()),
        },
    }
}

#[derive(Serialize)]
struct RowsBody<S: Serialize, R: Serialize> {
    summary: S,
    rows: Vec<R>,
}

pub fn sweep(cfg: &RunConfig) -> Result<Rendered> {
    cfg.reject(&[
        ("--badnews", cfg.badnews),
        ("--postpurchase-limit", cfg.postpurchase_limit),
        ("--price", cfg.price.is_some()),
        ("--beta", cfg.beta.is_some()),
        ("--check", cfg.check),
    ])?;
    let p = cfg.params()?;
    let grid = match cfg.grid {
        Some(g) => g,
        None => {
            let bracket = trial_belief_inverse(cfg.mu0, &p)
                .and_then(|lo| quitting_belief_inverse(cfg.mu0, &p).map(|hi| (lo, hi)))
                .map_err(|e| {
                    config_err(format!(
                        "no default price grid for mu0 = {}: {e}; pass --grid",
                        cfg.mu0
                    ))
                })?;
            Grid {
                lo: bracket.0,
                hi: bracket.1,
                n: 101,
            }
        }
    };
    let rows = Execution::default().map_slice(&grid.points(), |&t| sweep_row(t, cfg.mu0, &p));
    let summary = serde_json::json!({ "grid": grid, "infeasible": rows.iter().filter(|r| r.status != "ok").count() });
    let bytes = match cfg.format_or(Format::Csv) {
        Format::Json => json_bytes(&envelope(cfg, RowsBody { summary, rows }))?,
        Format::Csv => {
            let header = [
                "t_b",
                "beta_star",
                "revenue",
                "x_r",
                "t_r",
                "gamma",
                "branch",
                "status",
                "detail",
            ];
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_num(r.t_b),
                        fmt_opt(r.beta_star),
                        fmt_opt(r.revenue),
                        fmt_opt(r.x_r),
                        fmt_opt(r.t_r),
                        fmt_opt(r.gamma),
                        r.branch.unwrap_or_default().to_string(),
                        r.status.to_string(),
                        r.detail.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_bytes(cfg, &[("summary", summary)], &header, &table)?
        }
    };
    Ok(Rendered::ok(bytes))
}

#[derive(Serialize)]
struct RegionRow {
    mu0: f64,
    form: Option<&'static str>,
    revenue: Option<f64>,
    buyer_surplus: Option<f64>,
    price: Option<f64>,
    status: &'static str,
    detail: Option<String>,
}

#[derive(Serialize)]
struct RegionSummary {
    model: &'static str,
    mu_low: f64,
    mu_high: f64,
    /// Priors where free return is optimal.
    free_return: Option<(f64, f64)>,
    /// Largest `k / lambda` with a nonempty free-return interval.
    c_star: Option<f64>,
    width_at_c_star: Option<f64>,
}

fn region_summary(model: Model, p: &ModelParams) -> Result<RegionSummary> {
    Ok(match model {
        Model::GoodNews => {
            let m = region_map(p, 1000)?;
            RegionSummary {
                model: model.name(),
                mu_low: m.mu_low,
                mu_high: m.mu_high,
                free_return: m.free_return,
                c_star: Some(m.c_star),
                width_at_c_star: Some(m.width_at_c_star),
            }
        }
        Model::BadNews => {
            let r = badnews::bad_news_region(p)?;
            RegionSummary {
                model: model.name(),
                mu_low: r.mu_low,
                mu_high: r.mu_high,
                free_return: Some(r.free_return),
                c_star: None,
                width_at_c_star: None,
            }
        }
        Model::PostPurchaseLimit => {
            let r = learning_region(p)?;
            RegionSummary {
                model: model.name(),
                mu_low: r.mu_low,
                mu_high: r.mu_high,
                free_return: None,
                c_star: None,
                width_at_c_star: None,
            }
        }
    })
}

pub fn region(cfg: &RunConfig) -> Result<Rendered> {
    cfg.reject(&[
        ("--price", cfg.price.is_some()),
        ("--beta", cfg.beta.is_some()),
        ("--check", cfg.check),
    ])?;
    let p = cfg.params()?;
    let model = Model::of(cfg);
    let grid = cfg.grid.unwrap_or(Grid {
        lo: 0.001,
        hi: 0.999,
        n: 500,
    });
    if !(grid.lo > 0.0 && grid.hi < 1.0) {
        return Err(config_err("prior grid must lie inside (0, 1)").into());
    }
    let rows = Execution::default().map_slice(&grid.points(), |&mu0| match model.solve(mu0, &p) {
        Ok(s) => RegionRow {
            mu0,
            form: Some(s.form.as_str()),
            revenue: Some(s.revenue),
            buyer_surplus: Some(s.buyer_surplus),
            price: Some(s.mechanism.t_b),
            status: "ok",
            detail: None,
        },
        Err(e) => RegionRow {
            mu0,
            form: None,
            revenue: None,
            buyer_surplus: None,
            price: None,
            status: "infeasible",
            detail: Some(e.to_string()),
        },
    });
    let summary = region_summary(model, &p)?;
    let bytes = match cfg.format_or(Format::Csv) {
        Format::Json => json_bytes(&envelope(cfg, RowsBody { summary, rows }))?,
        Format::Csv => {
            let header = [
                "mu0",
                "form",
                "revenue",
                "buyer_surplus",
                "price",
                "status",
                "detail",
            ];
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_num(r.mu0),
                        r.form.unwrap_or_default().to_string(),
                        fmt_opt(r.revenue),
                        fmt_opt(r.buyer_surplus),
                        fmt_opt(r.price),
                        r.status.to_string(),
                        r.detail.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_bytes(
                cfg,
                &[("summary", serde_json::to_value(&summary)?)],
                &header,
                &table,
            )?
        }
    };
    Ok(Rendered::ok(bytes))
}

#[derive(Serialize)]
struct Comparison {
    quantity: &'static str,
    analytic: f64,
    empirical: f64,
    se: f64,
    /// `(empirical - analytic) / se`; zero for a degenerate estimate.
    z: f64,
    pass: bool,
}

fn compare(quantity: &'static str, analytic: f64, est: Estimate) -> Comparison {
    let diff = est.mean - analytic;
    Comparison {
        quantity,
        analytic,
        empirical: est.mean,
        se: est.se,
        z: if est.se > 1e-12 * analytic.abs().max(1.0) {
            diff / est.se
        } else {
            0.0
        },
        pass: est.covers(analytic, 3.0),
    }
}

#[derive(Serialize)]
struct DpBlock {
    #[serde(flatten)]
    report: DpReport,
    target_stop: f64,
    stop_offset_cells: f64,
    /// DP value at the prior minus the best immediate payoff there. Of the
    /// order of the DP error when the buyer is indifferent at the prior.
    continuation_premium: f64,
}

#[derive(Serialize)]
struct Convergence {
    reference: f64,
    points: Vec<ConvergencePoint>,
    /// Successive error ratios; near 2 for a first-order scheme.
    ratios: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateBody {
    mechanism_source: String,
    mechanism: RefundMechanism,
    policy_stop: f64,
    learning_rate: f64,
    dp: DpBlock,
    comparison: Vec<Comparison>,
    convergence: Convergence,
    all_pass: bool,
}

fn immediate_payoff(m: &RefundMechanism, mu0: f64, v: f64) -> f64 {
    let keep = m.keep_payoff(mu0, v);
    if m.is_no_return() {
        keep.max(0.0)
    } else {
        keep.max(m.return_payoff(mu0, v))
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Rendered> {
    json_only(cfg)?;
    cfg.reject(&[
        ("--badnews", cfg.badnews),
        ("--postpurchase-limit", cfg.postpurchase_limit),
        ("--grid", cfg.grid.is_some()),
    ])?;
    let p = cfg.params()?;
    let (source, m, policy) = match (cfg.price, cfg.beta) {
        (Some(t_b), Some(beta)) => {
            let m = implementing_mechanism(beta, t_b, &p).map_err(|e| {
                config_err(format!(
                    "cannot implement beta = {beta} at price {t_b}: {e}"
                ))
            })?;
            ("stochastic_return".to_string(), m, beta)
        }
        (None, None) => {
            let s = optimizer::optimal_mechanism(cfg.mu0, &p)?;
            (s.form.as_str().to_string(), s.mechanism, s.beta_star)
        }
        _ => return Err(config_err("--price and --beta must be given together").into()),
    };
    let sim = cfg.sim();
    sim.validate(learning_rate_for(&m, &p))
        .map_err(|e| config_err(e.to_string()))?;
    let exec = Execution::default();
    let report =
        run_oracle(&m, policy, cfg.mu0, &p, &sim, exec).map_err(|e| config_err(e.to_string()))?;
    let e = report.expected;
    let comparison = vec![
        compare("revenue", e.revenue, report.paths.revenue),
        compare("return_rate", e.return_rate, report.paths.return_rate),
        compare("learning_cost", e.learning_cost, report.paths.learning_cost),
        compare("buyer_value", e.buyer_value, report.paths.buyer_value),
    ];
    let points = dp_convergence(&m, cfg.mu0, &p, &sim, e.buyer_value, 3, exec)?;
    let ratios = points.windows(2).map(|w| w[0].error / w[1].error).collect();
    let all_pass = comparison.iter().all(|c| c.pass);
    let body = SimulateBody {
        mechanism_source: source,
        mechanism: m,
        policy_stop: policy,
        learning_rate: report.dp.rate,
        dp: DpBlock {
            report: report.dp,
            target_stop: policy,
            stop_offset_cells: (report.dp.stop_belief - policy).abs() / report.dp.cell,
            continuation_premium: report.dp.value_at_prior - immediate_payoff(&m, cfg.mu0, p.v),
        },
        comparison,
        convergence: Convergence {
            reference: e.buyer_value,
            points,
            ratios,
        },
        all_pass,
    };
    Ok(Rendered {
        bytes: json_bytes(&envelope(cfg, body))?,
        checks_passed: !cfg.check || all_pass,
    })
}
