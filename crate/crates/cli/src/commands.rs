use std::collections::BTreeSet;
use std::path::Path;

use bnrisk::analysis::{
    bf_threshold_posterior, conditional_profile, multifactor_search, risk_profiles, spearman,
    strength_ranking, SearchConfig, StrengthMetric, STRONG_BF, SUBSTANTIAL_BF,
};
use bnrisk::data::{
    apply_filters, build_default_generator, default_dag, default_schema, load_dataset, summarize,
    Dataset, FilterAction, FilterConfig, Schema, CONTROL,
};
use bnrisk::inference::{ancestral_sample, SAMPLER_ID};
use bnrisk::learning::{em_fit, fit_cpts, log_likelihood, DirichletPrior, EmConfig};
use bnrisk::model::{parse_model, parse_structure, serialize_model, DagStructure, Network, VariableKind};
use log::{info, warn};
use serde::Serialize;

use crate::args::*;
use crate::error::CliError;
use crate::manifest::{Run, RunManifest};
use crate::svg::{bar_chart, line_chart, Bar, Series};

pub fn run(command: Command) -> Result<(), CliError> {
    let config = serde_json::to_value(&command).ok();
    let name = command.name();
    let mut run = match &command {
        Command::Replay(a) => return replay(a),
        other => Run::new(&other.clone().output_mut().expect("has output").out)?,
    };
    let mut resolved = command.clone();
    match &mut resolved {
        Command::Validate(a) => validate(a, &mut run)?,
        Command::Fit(a) => fit(a, &mut run)?,
        Command::Strength(a) => strength(a, &mut run)?,
        Command::Profile(a) => profile(a, &mut run)?,
        Command::Multifactor(a) => multifactor(a, &mut run)?,
        Command::Profiles(a) => profiles(a, &mut run)?,
        Command::Compare(a) => compare(a, &mut run)?,
        Command::Simulate(a) => simulate(a, &mut run)?,
        Command::Summarize(a) => summarize_cmd(a, &mut run)?,
        Command::Replay(_) => unreachable!(),
    }
    // commands may fill in generated seeds; record what actually ran
    let config = serde_json::to_value(&resolved).ok().or(config).unwrap_or_default();
    run.finish(name, config)
}

fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.manifest).map_err(|e| CliError::io(&args.manifest, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: not a run manifest: {e}", args.manifest.display())))?;
    let mut command: Command = serde_json::from_value(manifest.config)
        .map_err(|e| CliError::Validation(format!("{}: unreadable config: {e}", args.manifest.display())))?;
    if let (Some(out), Some(o)) = (&args.out, command.output_mut()) {
        o.out = out.clone();
    }
    info!("replaying `{}` from {}", manifest.command, args.manifest.display());
    run(command)
}

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    (nanos as u64) ^ ((nanos >> 64) as u64) ^ u64::from(std::process::id()).rotate_left(32)
}

fn load_model(path: &Path, run: &mut Run) -> Result<Network, CliError> {
    let text = run.read(path)?;
    parse_model(&text).map_err(|e| CliError::from(e).in_file(path))
}

fn load_schema(path: Option<&Path>, run: &mut Run) -> Result<(Schema, Option<DagStructure>), CliError> {
    match path {
        None => Ok((default_schema(), None)),
        Some(p) => {
            let text = run.read(p)?;
            let (vars, dag) = parse_structure(&text).map_err(|e| CliError::from(e).in_file(p))?;
            let schema = Schema::new(vars).map_err(|e| CliError::from(e).in_file(p))?;
            Ok((schema, Some(dag)))
        }
    }
}

#[derive(serde::Deserialize)]
struct EdgeFile {
    edges: Vec<(String, String)>,
}

fn load_structure(args: &StructureArgs, run: &mut Run) -> Result<(Schema, DagStructure), CliError> {
    let (schema, schema_dag) = load_schema(args.schema.as_deref(), run)?;
    let nodes: Vec<String> = schema.variables().iter().map(|v| v.name.clone()).collect();
    let dag = match (&args.dag, schema_dag) {
        (Some(p), _) => {
            let text = run.read(p)?;
            let file: EdgeFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            DagStructure::new(nodes, file.edges).map_err(|e| CliError::from(e).in_file(p))?
        }
        (None, Some(dag)) => {
            if dag.edges().is_empty() {
                warn!("schema file declares no edges; every variable is fitted independently");
            }
            dag
        }
        (None, None) => default_dag(),
    };
    Ok((schema, dag))
}

fn validate(args: &ValidateArgs, run: &mut Run) -> Result<(), CliError> {
    let net = load_model(&args.model, run)?;
    println!(
        "{}: valid model with {} variables and {} edges",
        args.model.display(),
        net.len(),
        net.dag().edges().len()
    );
    Ok(())
}

fn fit(args: &mut FitArgs, run: &mut Run) -> Result<(), CliError> {
    let (schema, dag) = load_structure(&args.structure, run)?;
    let text = run.read(&args.data)?;
    let mut data = load_dataset(&text, &schema, &args.data.display().to_string())
        .map_err(|e| CliError::from(e).in_file(&args.data))?;
    let filtering = args.filters.min_response_ms.is_some() || args.filters.require_honesty;
    if filtering {
        let config = FilterConfig {
            min_response_ms: args.filters.min_response_ms.unwrap_or(0),
            require_honesty: args.filters.require_honesty,
            action: match args.filters.filter_action {
                FilterActionArg::Drop => FilterAction::Drop,
                FilterActionArg::Blank => FilterAction::Blank,
            },
        };
        let (filtered, report) = apply_filters(&data, &config)?;
        info!("filters kept {} of {} records", report.output_records, report.input_records);
        run.note("filters", &report);
        data = filtered;
    }
    let vars = schema.variables();
    let prior = DirichletPrior::standard(vars, args.prior.prior_p, args.prior.ess)?;
    let network = if args.latent.is_empty() {
        fit_cpts(vars, &dag, &data, &prior)?
    } else {
        let seed = *args.seed.get_or_insert_with(fresh_seed);
        run.seed("em", seed);
        let latent: Vec<&str> = args.latent.iter().map(String::as_str).collect();
        let present: Vec<&str> = latent.iter().copied().filter(|l| data.column_index(l).is_some()).collect();
        if !present.is_empty() {
            info!("ignoring data columns of latent variables: {}", present.join(", "));
            data = data.without_columns(&present);
        }
        let config = EmConfig {
            max_iterations: args.max_iterations,
            tolerance: args.tolerance,
            restarts: args.restarts,
            seed,
            ..EmConfig::default()
        };
        let fit = em_fit(vars, &dag, &data, &latent, &prior, &config)?;
        if !fit.converged {
            warn!("EM hit the iteration cap before converging");
        }
        run.write("em_trace.csv", &fit.trace.to_csv())?;
        run.note("em_converged", fit.converged);
        run.note("em_selected_restart", fit.trace.selected);
        run.note("em_max_log_likelihood_decrease", fit.trace.max_decrease());
        fit.network
    };
    let ll = log_likelihood(&network, &data)?;
    run.note("records", data.len());
    run.note("log_likelihood", ll.value);
    run.write("model.json", &serialize_model(&network))?;
    println!("fitted {} variables on {} records; log-likelihood {:.4}", network.len(), data.len(), ll.value);
    Ok(())
}

fn strength(args: &StrengthArgs, run: &mut Run) -> Result<(), CliError> {
    let net = load_model(&args.model, run)?;
    let control = match &args.control {
        Some(c) => Some(c.as_str()),
        None if net.index_of(CONTROL).is_some() => Some(CONTROL),
        None => None,
    };
    let candidates: Vec<&str> = if args.candidates.is_empty() {
        net.variables().iter().map(|v| v.name.as_str()).filter(|v| *v != args.target).collect()
    } else {
        args.candidates.iter().map(String::as_str).collect()
    };
    let metric = match args.metric {
        MetricArg::WeightedJs => StrengthMetric::WeightedJs,
        MetricArg::PairwiseMax => StrengthMetric::PairwiseMax,
    };
    let report = strength_ranking(&net, &args.target, &candidates, control, metric)?;
    run.write("strength.csv", &report.to_csv())?;
    let bars: Vec<Bar> = report
        .entries
        .iter()
        .map(|e| Bar {
            label: e.variable.clone(),
            value: e.score,
            highlight: Some(e.variable.as_str()) == control,
        })
        .collect();
    let title = format!("Strength of influence on {}", args.target);
    run.write("strength.svg", &bar_chart(&title, "strength of influence", &bars, Some(1.0), "no candidates"))?;
    if let Some(c) = &report.control {
        let above = report.entries.iter().filter(|e| e.score > c.score).count();
        println!("{above} of {} variables score above the control {} ({:.6})", report.entries.len(), c.variable, c.score);
    }
    Ok(())
}

fn profile(args: &ProfileArgs, run: &mut Run) -> Result<(), CliError> {
    let net = load_model(&args.model, run)?;
    let rows = conditional_profile(&net, &args.target, &args.state, &args.source)?;
    let mut csv = String::from("state,probability\n");
    for (s, p) in &rows {
        match p {
            Some(p) => csv.push_str(&format!("{s},{p:.12}\n")),
            None => csv.push_str(&format!("{s},\n")),
        }
    }
    run.write("profile.csv", &csv)?;
    let bars: Vec<Bar> = rows
        .iter()
        .filter_map(|(s, p)| p.map(|p| Bar { label: format!("{}={s}", args.source), value: p, highlight: false }))
        .collect();
    let title = format!("P({}={} | {})", args.target, args.state, args.source);
    run.write("profile.svg", &bar_chart(&title, "conditional probability", &bars, Some(1.0), "no reachable states"))?;
    Ok(())
}

/// Demographic, psychological and non-target outcome variables.
fn profiling_pool<'a>(net: &'a Network, target: &str) -> Vec<&'a str> {
    net.variables()
        .iter()
        .filter(|v| matches!(v.kind, VariableKind::Demographic | VariableKind::Psychological | VariableKind::Outcome))
        .map(|v| v.name.as_str())
        .filter(|v| *v != target)
        .collect()
}

fn game_pool<'a>(net: &'a Network, target: &str) -> Vec<&'a str> {
    net.variables()
        .iter()
        .filter(|v| v.kind == VariableKind::Game)
        .map(|v| v.name.as_str())
        .filter(|v| *v != target)
        .collect()
}

fn pool_or<'a>(given: &'a [String], default: Vec<&'a str>) -> Vec<&'a str> {
    if given.is_empty() {
        default
    } else {
        given.iter().map(String::as_str).collect()
    }
}

fn evidence_label(set: &[(String, String)]) -> String {
    set.iter().map(|(v, s)| format!("{v}={s}")).collect::<Vec<_>>().join(";")
}

fn multifactor(args: &MultifactorArgs, run: &mut Run) -> Result<(), CliError> {
    let net = load_model(&args.model, run)?;
    let substantial = bf_threshold_posterior(args.prior_p, SUBSTANTIAL_BF)?;
    let strong = bf_threshold_posterior(args.prior_p, STRONG_BF)?;
    let pools = [
        ("game", pool_or(&args.game_pool, game_pool(&net, &args.target))),
        ("profiling", pool_or(&args.profiling_pool, profiling_pool(&net, &args.target))),
    ];
    let config = SearchConfig { max_evaluations: args.max_evals };
    let mut csv = String::from("pool,k,max_posterior,evaluated,skipped,argmax\n");
    let mut series = Vec::new();
    for (name, pool) in &pools {
        let k_max = args.k_max.min(pool.len());
        if pool.is_empty() || args.k_min > k_max {
            warn!("{name} pool has {} variables; nothing to search for k >= {}", pool.len(), args.k_min);
            continue;
        }
        let result = multifactor_search(&net, &args.target, &args.state, pool, args.k_min..=k_max, &config)?;
        let mut points = Vec::new();
        for km in &result.per_k {
            let argmax: Vec<String> = km.argmax.iter().map(|s| evidence_label(s)).collect();
            let max = km.max_posterior.map(|p| format!("{p:.12}")).unwrap_or_default();
            csv.push_str(&format!("{name},{},{max},{},{},\"{}\"\n", km.k, km.evaluated, km.skipped, argmax.join(" | ")));
            if let Some(p) = km.max_posterior {
                points.push((km.k as f64, p));
            }
        }
        series.push(Series { name: format!("{name} variables"), points });
    }
    run.write("multifactor.csv", &csv)?;
    let guides = [
        (format!("BF 10^0.5: {substantial:.4}"), substantial),
        (format!("BF 10: {strong:.4}"), strong),
    ];
    let title = format!("Max P({}={}) by evidence size", args.target, args.state);
    run.write("multifactor.svg", &line_chart(&title, "number of evidence items k", "max posterior", &series, &guides))?;
    run.note("threshold_substantial", substantial);
    run.note("threshold_strong", strong);
    println!("thresholds for prior {}: substantial {substantial:.6}, strong {strong:.6}", args.prior_p);
    Ok(())
}

fn profiles(args: &mut ProfilesArgs, run: &mut Run) -> Result<(), CliError> {
    let net = load_model(&args.model, run)?;
    let threshold = match args.threshold {
        Some(t) => t,
        None => *args.threshold.insert(bf_threshold_posterior(args.prior_p, SUBSTANTIAL_BF)?),
    };
    let pool = pool_or(&args.pool, profiling_pool(&net, &args.target));
    let config = SearchConfig { max_evaluations: args.max_evals };
    let set = risk_profiles(&net, &args.target, &args.state, &pool, args.k, threshold, &config)?;
    run.write("profiles.csv", &set.profiles_csv())?;
    run.write("profile_frequencies.csv", &set.frequencies_csv())?;
    let bars: Vec<Bar> = set
        .frequencies
        .iter()
        .map(|f| Bar { label: format!("{}={}", f.variable, f.state), value: f.count as f64, highlight: false })
        .collect();
    let title = format!("Risk profiles (k = {}, P >= {threshold:.4})", args.k);
    run.write("profiles.svg", &bar_chart(&title, "occurrences in risk profiles", &bars, None, "no profiles"))?;
    run.note("profiles", set.profiles.len());
    run.note("evaluated", set.evaluated);
    run.note("skipped", set.skipped);
    println!("{} of {} evidence sets reach {threshold:.6}", set.profiles.len(), set.evaluated);
    Ok(())
}

fn read_ranking(path: &Path, run: &mut Run) -> Result<Vec<(String, f64)>, CliError> {
    let text = run.read(path)?;
    let bad = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("no `{name}` column")));
    let (v, s) = (col("variable")?, col("score")?);
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let score = record[s]
            .parse::<f64>()
            .map_err(|_| bad(format!("line {}: score `{}` is not a number", i + 2, &record[s])))?;
        out.push((record[v].to_string(), score));
    }
    Ok(out)
}

#[derive(Serialize)]
struct Comparison {
    rho: f64,
    p_value: f64,
    n: usize,
    exact: bool,
}

fn compare(args: &CompareArgs, run: &mut Run) -> Result<(), CliError> {
    let a = read_ranking(&args.a, run)?;
    let b = read_ranking(&args.b, run)?;
    let names_a: BTreeSet<&str> = a.iter().map(|x| x.0.as_str()).collect();
    let names_b: BTreeSet<&str> = b.iter().map(|x| x.0.as_str()).collect();
    if names_a != names_b || names_a.len() != a.len() || names_b.len() != b.len() {
        let only_a: Vec<&str> = names_a.difference(&names_b).copied().collect();
        let only_b: Vec<&str> = names_b.difference(&names_a).copied().collect();
        return Err(CliError::Validation(format!(
            "VariableSetMismatch: rankings must list the same variables once each (only in first: [{}]; only in second: [{}])",
            only_a.join(", "),
            only_b.join(", ")
        )));
    }
    let xs: Vec<f64> = a.iter().map(|x| x.1).collect();
    let ys: Vec<f64> = a
        .iter()
        .map(|(name, _)| b.iter().find(|(n, _)| n == name).expect("same variable set").1)
        .collect();
    let r = spearman(&xs, &ys)?;
    let out = Comparison { rho: r.rho, p_value: r.p_value, n: r.n, exact: r.exact };
    run.write("compare.json", &(serde_json::to_string_pretty(&out).expect("plain data") + "\n"))?;
    println!("rho = {:.6}, p = {:.6} (n = {})", r.rho, r.p_value, r.n);
    Ok(())
}

fn simulate(args: &mut SimulateArgs, run: &mut Run) -> Result<(), CliError> {
    let seed = *args.seed.get_or_insert_with(fresh_seed);
    run.seed("sample", seed);
    run.note("sampler", SAMPLER_ID);
    let data = match &args.model {
        Some(path) => {
            let net = load_model(path, run)?;
            Dataset::from_sample_batch(&net, &ancestral_sample(&net, args.n, seed))
        }
        None => {
            let spec = build_default_generator(seed);
            run.write("generator.json", &serialize_model(&spec.network))?;
            run.note("planted_drivers", &spec.planted_drivers);
            run.note("calibration", &spec.calibration);
            spec.simulate(args.n)
        }
    };
    run.write("dataset.csv", &data.to_csv())?;
    println!("sampled {} records with seed {seed}", data.len());
    Ok(())
}

fn summarize_cmd(args: &SummarizeArgs, run: &mut Run) -> Result<(), CliError> {
    let (schema, _) = load_schema(args.schema.as_deref(), run)?;
    let text = run.read(&args.data)?;
    let data = load_dataset(&text, &schema, &args.data.display().to_string())
        .map_err(|e| CliError::from(e).in_file(&args.data))?;
    let summary = summarize(&data);
    run.write("summary.csv", &summary.to_csv())?;
    println!("summarized {} records over {} variables", data.len(), data.variables().len());
    Ok(())
}
