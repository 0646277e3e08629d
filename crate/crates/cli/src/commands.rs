use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hellfit::criterion::{evaluate_fitness_detailed, ks_two_sample};
use hellfit::report::{to_json_pretty, write_csv};
use hellfit::threshold::{delta_for_epsilon, hellinger_capital_delta_star, SolverOptions};
use hellfit::validate::{
    bias_bound_check, moving_risk_rate, one_sample_risk_fixed, one_sample_risk_moving, pairwise_marginal_scan,
    reproduce_table, ExperimentConfig, Family, TableScale,
};
use hellfit::{
    alpha_of_delta, build_moving_partition, delta_star_hellinger, hellinger_alpha_approx, load_dataset, CsvOptions,
    Dataset64, DivergenceGenerator, MultinomialPmf, PartitionSpec,
};
use serde::Serialize;

use crate::args::{
    Cli, Command, FamilyArg, FitArgs, Format, InputArgs, PairwiseArgs, PartitionArgs, PartitionShape, SimulateArgs,
    ThresholdArgs, ValidateArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = Output {
        format: cli.format,
        path: cli.out.as_deref(),
    };
    match &cli.command {
        Command::Fit(a) => fit(a, &out),
        Command::Threshold(a) => threshold(a, &out),
        Command::Simulate(a) => simulate(a, cli.seed, &out),
        Command::Validate(a) => validate(a, cli.seed, &out),
        Command::Partition(a) => partition(a, &out),
        Command::Pairwise(a) => pairwise(a, &out),
    }
}

struct Output<'a> {
    format: Format,
    path: Option<&'a Path>,
}

impl Output<'_> {
    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match self.path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    /// Writes `json` as JSON, `rows` as CSV, or `pretty` as text.
    fn emit<J: Serialize, R: Serialize>(&self, json: &J, rows: &[R], pretty: impl FnOnce() -> String) -> Result<()> {
        let mut w = self.sink()?;
        match self.format {
            Format::Json => writeln!(w, "{}", to_json_pretty(json)?)?,
            Format::Csv => write_csv(&mut w, rows)?,
            Format::Pretty => write!(w, "{}", pretty())?,
        }
        w.flush()?;
        Ok(())
    }
}

fn load(path: &Path, input: &InputArgs) -> Result<Dataset64> {
    let data: Dataset64 = load_dataset(
        path,
        CsvOptions {
            delimiter: input.delimiter as u8,
        },
    )
    .with_context(|| format!("reading {}", path.display()))?;
    match &input.bounds {
        Some(b) => data
            .with_bounds(b.clone())
            .with_context(|| format!("applying bounds to {}", path.display())),
        None => Ok(data),
    }
}

fn spec_of(shape: &PartitionShape) -> Result<PartitionSpec> {
    let mut spec = PartitionSpec {
        depth: shape.depth,
        branching: shape.branching.clone(),
        axis_order: None,
    };
    if let Some(axes) = &shape.axes {
        if axes.contains(&0) {
            bail!("--axes are 1-based");
        }
        spec = spec.with_axes(axes.iter().map(|a| a - 1).collect());
    }
    Ok(spec)
}

#[derive(Serialize)]
struct KsAxis {
    axis: usize,
    statistic: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct KsBaseline {
    baseline: &'static str,
    axes: Vec<KsAxis>,
}

fn fit(a: &FitArgs, out: &Output) -> Result<()> {
    let mother = load(&a.mother, &a.input)?;
    let model = load(&a.model, &a.input)?;
    let ev = evaluate_fitness_detailed(&mother, &model, &spec_of(&a.shape)?, a.epsilon)?;
    if let Some(path) = &a.ks_out {
        let axes = (0..mother.k())
            .map(|i| {
                let r = ks_two_sample(&mother.column(i), &model.column(i))?;
                Ok(KsAxis {
                    axis: i + 1,
                    statistic: r.statistic,
                    p_value: r.p_value,
                })
            })
            .collect::<hellfit::Result<Vec<_>>>()?;
        let doc = KsBaseline {
            baseline: "two-sample Kolmogorov-Smirnov per coordinate",
            axes,
        };
        std::fs::write(path, to_json_pretty(&doc)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    let r = &ev.report;
    out.emit(r, std::slice::from_ref(r), || {
        format!(
            "verdict          {}\nD_hat            {:.6e}\np'               {}\nn1, n2           {}, {}\nbias p'/(2n1)    {:.6e}\nbias sqrt(8p'/n2) {:.6e}\nlhs              {:.6e}\nthreshold 8eps^2 {:.6e} (eps = {})\nimplied eps      {:.6}\nimplied Bayes err {:.6}\nempty bins       {}\n",
            r.verdict,
            r.hellinger_hat,
            r.p_prime,
            r.n1,
            r.n2,
            r.bias_n1,
            r.bias_n2,
            r.lhs,
            r.threshold,
            r.epsilon,
            r.implied_epsilon,
            r.implied_bayes_error,
            r.zero_bins
        )
    })
}

#[derive(Serialize)]
struct BranchValues {
    capital_delta_star: Option<f64>,
    capital_delta_feasible: bool,
    delta_branch: f64,
    a_set_branch: f64,
}

#[derive(Serialize)]
struct ThresholdReport {
    generator: String,
    epsilon: Option<f64>,
    delta_star: f64,
    alpha_of_delta: f64,
    bayes_error_slack: f64,
    branch_values: BranchValues,
    approximation: Option<f64>,
    hellinger_capital_delta_closed_form: Option<f64>,
}

fn threshold(a: &ThresholdArgs, out: &Output) -> Result<()> {
    let g: DivergenceGenerator<f64> = DivergenceGenerator::by_name(&a.generator)?;
    let is_hellinger = a.generator == "hellinger" || g.label() == "hellinger";
    let delta = match (a.target.epsilon, a.target.delta) {
        (Some(e), _) if is_hellinger => delta_star_hellinger(e)?,
        (Some(e), _) => delta_for_epsilon(&g, e, &SolverOptions::default())?,
        (None, Some(d)) => d,
        (None, None) => unreachable!("clap enforces one target"),
    };
    let al = alpha_of_delta(&g, delta)?;
    let cds = al.capital_delta_star;
    let report = ThresholdReport {
        generator: a.generator.clone(),
        epsilon: a.target.epsilon,
        delta_star: delta,
        alpha_of_delta: al.alpha,
        bayes_error_slack: 0.5 - al.alpha,
        branch_values: BranchValues {
            capital_delta_star: cds.value.is_finite().then_some(cds.value),
            capital_delta_feasible: cds.feasible,
            delta_branch: al.delta_branch,
            a_set_branch: al.a_set_branch,
        },
        approximation: if is_hellinger {
            hellinger_alpha_approx(delta).ok()
        } else {
            None
        },
        hellinger_capital_delta_closed_form: if is_hellinger {
            hellinger_capital_delta_star(delta).ok().filter(|v| v.is_finite())
        } else {
            None
        },
    };
    out.emit(&report, std::slice::from_ref(&report.branch_values), || {
        format!(
            "generator   {}\ndelta*      {:.10}\nalpha       {:.6}  (1/(2 Delta*) = {:.6}, inf A = {:.6})\nBayes error >= 1/2 - {:.6}\n",
            report.generator,
            report.delta_star,
            report.alpha_of_delta,
            report.branch_values.delta_branch,
            report.branch_values.a_set_branch,
            report.bayes_error_slack
        )
    })
}

fn simulate(a: &SimulateArgs, seed: u64, out: &Output) -> Result<()> {
    let mut scale = TableScale::full(a.table);
    if let Some(n2) = a.n2 {
        scale.n2 = n2;
    }
    if let Some(n1) = &a.n1 {
        scale.n1s = n1.clone();
    }
    scale.replicates = a.replicates;
    scale.seed = seed;
    scale.epsilon = a.epsilon;
    scale.k = a.k;
    let rows = reproduce_table(a.table, &scale)?;
    out.emit(&rows, &rows, || {
        let mut s = format!("table {} (n2 = {}, R = {}, seed = {})\n", a.table, scale.n2, scale.replicates, seed);
        for r in &rows {
            let pair = match (r.axis_i, r.axis_j) {
                (Some(i), Some(j)) => format!("({i},{j}) "),
                _ => String::new(),
            };
            s += &format!(
                "{pair}n1 = {:>9}  D = {:.3e} +/- {:.1e}  LHS = {:.3e}  {}\n",
                r.n1, r.d_mean, r.d_se, r.lhs_mean, r.verdict
            );
        }
        s
    })
}

#[derive(Serialize)]
struct ValidateReport<T: Serialize> {
    theorem: u8,
    seed: u64,
    result: T,
}

fn family_of(a: &ValidateArgs) -> Family {
    match a.family {
        FamilyArg::Uniform => Family::Uniform { k: a.k },
        FamilyArg::Normal => Family::standard_normal(a.k),
    }
}

fn validate(a: &ValidateArgs, seed: u64, out: &Output) -> Result<()> {
    let generator = DivergenceGenerator::by_name(&a.generator)?;
    let spec = PartitionSpec {
        depth: a.depth,
        branching: a.branching.clone(),
        axis_order: None,
    };
    match a.theorem {
        2 => {
            let m = match &a.masses {
                Some(m) => MultinomialPmf::new(m.clone())?,
                None => MultinomialPmf::uniform(4)?,
            };
            let cfg = ExperimentConfig::one_sample(Family::Uniform { k: 1 }, spec, a.n, a.replicates, seed)
                .with_generator(generator);
            let r = one_sample_risk_fixed(&cfg, &m)?;
            let doc = ValidateReport { theorem: 2, seed, result: r };
            out.emit(&doc, &[r], || risk_text("fixed-region risk", &r))
        }
        3 => {
            let cfg = ExperimentConfig::one_sample(family_of(a), spec, a.n, a.replicates, seed).with_generator(generator);
            match &a.rate {
                Some(ns) => {
                    let rc = moving_risk_rate(&cfg, ns)?;
                    let doc = ValidateReport { theorem: 3, seed, result: &rc };
                    out.emit(&doc, &rc.estimates, || {
                        let mut s = String::new();
                        for (n, e) in rc.ns.iter().zip(&rc.estimates) {
                            s += &risk_text(&format!("n = {n}"), e);
                        }
                        s + &format!("log-log slope {:.4}\n", rc.slope)
                    })
                }
                None => {
                    let r = one_sample_risk_moving(&cfg)?;
                    let doc = ValidateReport { theorem: 3, seed, result: r };
                    out.emit(&doc, &[r], || risk_text("moving-region risk", &r))
                }
            }
        }
        _ => {
            let mother = match a.family {
                FamilyArg::Normal => Family::shifted_normal(a.k, a.alpha, a.beta)?,
                FamilyArg::Uniform => Family::Uniform { k: a.k },
            };
            let cfg = ExperimentConfig::two_sample(mother, family_of(a), spec, a.n1, a.n2, a.replicates, seed);
            let r = bias_bound_check(&cfg)?;
            let doc = ValidateReport { theorem: 4, seed, result: &r };
            out.emit(&doc, std::slice::from_ref(&r), || {
                format!(
                    "E D[m1:m2]          {:.4e} +/- {:.1e}\nE D[m1_hat:m2_hat]  {:.4e} +/- {:.1e}\nsqrt(8p'/n2)        {:.4e}\nmargin              {:.4e}\nholds               {}{}\n",
                    r.true_mean,
                    r.true_se,
                    r.estimate_mean,
                    r.estimate_se,
                    r.bias_n2,
                    r.margin,
                    r.holds,
                    if r.sufficient_replicates { "" } else { " (insufficient replicates)" }
                )
            })
        }
    }
}

fn risk_text(label: &str, r: &hellfit::validate::RiskEstimate) -> String {
    format!(
        "{label}: mean {:.5e} +/- {:.1e} (R = {}), prediction {:.5e}, ratio {:.4}\n",
        r.mean, r.se, r.replicates, r.prediction, r.ratio
    )
}

#[derive(Serialize)]
struct LeafRow {
    leaf: usize,
    index: String,
    path_bins: u64,
    count: Option<u64>,
    #[serde(rename = "box")]
    box_: String,
}

fn partition(a: &PartitionArgs, out: &Output) -> Result<()> {
    let model = load(&a.model, &a.input)?;
    let tree = build_moving_partition(&model, &spec_of(&a.shape)?)?;
    let doc = tree.to_document();
    let rows: Vec<LeafRow> = tree
        .leaves()
        .iter()
        .enumerate()
        .map(|(i, l)| LeafRow {
            leaf: i,
            index: l.index.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join("."),
            path_bins: l.path_bins,
            count: l.building_count,
            box_: l
                .intervals
                .iter()
                .map(|iv| format!("x{} in ({}, {}]", iv.axis + 1, iv.lo, iv.hi))
                .collect::<Vec<_>>()
                .join(" & "),
        })
        .collect();
    out.emit(&doc, &rows, || {
        let mut s = format!("{} leaves, p' = {}\n", tree.leaf_count(), tree.free_param_count());
        for r in &rows {
            s += &format!("{:>6}  {:<10} {}  n = {}\n", r.leaf, r.index, r.box_, r.count.unwrap_or(0));
        }
        s
    })
}

#[derive(Serialize)]
struct PairRow {
    i: usize,
    j: usize,
    hellinger_hat: f64,
    lhs: f64,
    verdict: hellfit::Verdict,
}

#[derive(Serialize)]
struct PairwiseDoc {
    k: usize,
    epsilon: f64,
    threshold: f64,
    /// 1-based upper triangle; null on and below the diagonal.
    lhs: Vec<Vec<Option<f64>>>,
    pairs: Vec<PairRow>,
}

fn pairwise(a: &PairwiseArgs, out: &Output) -> Result<()> {
    let mother = load(&a.mother, &a.input)?;
    let model = load(&a.model, &a.input)?;
    let scan = pairwise_marginal_scan(&mother, &model, &a.branching, a.epsilon)?;
    let pairs: Vec<PairRow> = scan
        .pairs
        .iter()
        .map(|p| PairRow {
            i: p.i + 1,
            j: p.j + 1,
            hellinger_hat: p.report.hellinger_hat,
            lhs: p.report.lhs,
            verdict: p.report.verdict,
        })
        .collect();
    let doc = PairwiseDoc {
        k: scan.k,
        epsilon: a.epsilon,
        threshold: scan.threshold,
        lhs: scan.lhs_matrix(),
        pairs,
    };
    out.emit(&doc, &doc.pairs, || {
        let mut s = String::from("     ");
        for j in 2..=doc.k {
            s += &format!("{j:>7}");
        }
        s.push('\n');
        for i in 0..doc.k - 1 {
            s += &format!("{:>5}", i + 1);
            for j in 1..doc.k {
                s += &match doc.lhs[i][j] {
                    Some(v) => format!("{v:>7.3}"),
                    None => format!("{:>7}", "*"),
                };
            }
            s.push('\n');
        }
        s
    })
}
