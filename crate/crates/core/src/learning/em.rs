use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use super::{column_map, patterns, posterior_mean_rows, skeleton, DirichletPrior, LearningError};
use crate::inference::{evidence_probability_indexed, joint_marginal, marginal};
use crate::model::{Cpt, DagStructure, Network, VariableSpec};

/// Records whose hidden variables have more joint states than this are
/// handled family by family through variable elimination instead of by
/// enumerating the hidden assignments.
const ENUMERATION_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop when the relative change of the penalized log-likelihood falls
    /// below this.
    pub tolerance: f64,
    pub restarts: usize,
    /// Initial CPT rows are prior means scaled by `1 + jitter·U(-1, 1)`.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 500,
            tolerance: 1e-6,
            restarts: 10,
            jitter: 0.05,
            seed: 0,
        }
    }
}

impl EmConfig {
    fn validate(&self) -> Result<(), LearningError> {
        let bad = |m: &str| Err(LearningError::InvalidConfig(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return bad("jitter must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Per-restart convergence history.
///
/// `log_likelihood[r][t]` is the data log-likelihood of restart `r` before
/// its `t`-th update; `objective` adds the log prior density, which is the
/// quantity each update provably does not decrease.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmTrace {
    pub log_likelihood: Vec<Vec<f64>>,
    pub objective: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub selected: usize,
}

impl EmTrace {
    /// Largest drop of log-likelihood between consecutive iterations over
    /// all restarts; zero or negative if every run was non-decreasing.
    pub fn max_decrease(&self) -> f64 {
        self.log_likelihood
            .iter()
            .flat_map(|run| run.windows(2).map(|w| w[0] - w[1]))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("restart,iteration,log_likelihood,objective,selected\n");
        for (r, (ll, obj)) in self.log_likelihood.iter().zip(&self.objective).enumerate() {
            for (t, (l, o)) in ll.iter().zip(obj).enumerate() {
                out.push_str(&format!("{r},{t},{l:.10},{o:.10},{}\n", r == self.selected));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub network: Network,
    pub trace: EmTrace,
    /// False if the selected restart hit the iteration cap.
    pub converged: bool,
}

struct Family {
    members: Vec<usize>, // parents in declaration order, then the child
    cards: Vec<usize>,
}

impl Family {
    fn index(&self, assignment: &[usize]) -> usize {
        self.members
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&m, &c)| acc * c + assignment[m])
    }
}

struct Pattern {
    weight: f64,
    values: Vec<Option<usize>>,
    hidden: Vec<usize>,
    touching: Vec<usize>,
    observed: Vec<(usize, usize)>, // (family, table index) of fully observed families
    enumerate: bool,
}

struct Problem {
    net: Network,
    families: Vec<Family>,
    patterns: Vec<Pattern>,
    constant_counts: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
    means: Vec<Vec<Vec<f64>>>,
    ess: f64,
}

type Theta = Vec<Vec<f64>>; // per variable, flattened rows

impl Problem {
    fn network(&self, theta: &Theta) -> Network {
        let cpts = theta
            .iter()
            .enumerate()
            .map(|(i, t)| Cpt {
                variable: self.net.cpt(i).variable.clone(),
                parents: self.net.cpt(i).parents.clone(),
                rows: t.chunks(self.net.cardinality(i)).map(<[f64]>::to_vec).collect(),
            })
            .collect();
        Network::new(self.net.variables().to_vec(), self.net.dag().clone(), cpts)
            .expect("EM keeps rows normalized")
    }

    fn penalty(&self, theta: &Theta) -> f64 {
        theta
            .iter()
            .zip(&self.alpha)
            .flat_map(|(t, a)| t.iter().zip(a))
            .filter(|(_, a)| **a > 0.0)
            .map(|(t, a)| a * t.ln())
            .sum()
    }

    /// Expected counts and log-likelihood under `theta`.
    fn e_step(&self, theta: &Theta) -> (f64, Vec<Vec<f64>>) {
        let mut counts = self.constant_counts.clone();
        let mut ll = 0.0;
        let mut viewed: Option<Network> = None;
        for p in &self.patterns {
            if p.enumerate {
                ll += p.weight * self.enumerate(p, theta, &mut counts);
            } else {
                let net = viewed.get_or_insert_with(|| self.network(theta));
                ll += p.weight * self.eliminate(p, net, &mut counts);
            }
        }
        (ll, counts)
    }

    fn enumerate(&self, p: &Pattern, theta: &Theta, counts: &mut [Vec<f64>]) -> f64 {
        let mut assignment: Vec<usize> = p.values.iter().map(|v| v.unwrap_or(0)).collect();
        let cards: Vec<usize> = p.hidden.iter().map(|&h| self.net.cardinality(h)).collect();
        let combos: usize = cards.iter().product();
        let mut mass = Vec::with_capacity(combos);
        let mut indices = Vec::with_capacity(combos * p.touching.len());
        let mut counter = vec![0usize; p.hidden.len()];
        for _ in 0..combos {
            for (&h, &s) in p.hidden.iter().zip(&counter) {
                assignment[h] = s;
            }
            let mut prod = 1.0;
            for &f in &p.touching {
                let idx = self.families[f].index(&assignment);
                indices.push(idx);
                prod *= theta[f][idx];
            }
            mass.push(prod);
            for d in (0..counter.len()).rev() {
                counter[d] += 1;
                if counter[d] < cards[d] {
                    break;
                }
                counter[d] = 0;
            }
        }
        let z: f64 = mass.iter().sum();
        let constant: f64 = p.observed.iter().map(|&(f, idx)| theta[f][idx].ln()).sum();
        if z.is_nan() || z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let k = p.touching.len();
        for (c, m) in mass.iter().enumerate() {
            let q = p.weight * m / z;
            for (j, &f) in p.touching.iter().enumerate() {
                counts[f][indices[c * k + j]] += q;
            }
        }
        z.ln() + constant
    }

    fn eliminate(&self, p: &Pattern, net: &Network, counts: &mut [Vec<f64>]) -> f64 {
        let evidence: Vec<(usize, usize)> = p
            .values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|s| (i, s)))
            .collect();
        let z = evidence_probability_indexed(net, &evidence);
        if z.is_nan() || z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut assignment: Vec<usize> = p.values.iter().map(|v| v.unwrap_or(0)).collect();
        for &f in &p.touching {
            let fam = &self.families[f];
            let hidden: Vec<usize> = fam
                .members
                .iter()
                .copied()
                .filter(|m| p.values[*m].is_none())
                .collect();
            let joint = joint_marginal(net, &hidden, &evidence);
            let cards = joint.cards().to_vec();
            let mut counter = vec![0usize; hidden.len()];
            for &v in joint.values() {
                for (&h, &s) in hidden.iter().zip(&counter) {
                    assignment[h] = s;
                }
                counts[f][fam.index(&assignment)] += p.weight * v / z;
                for d in (0..counter.len()).rev() {
                    counter[d] += 1;
                    if counter[d] < cards[d] {
                        break;
                    }
                    counter[d] = 0;
                }
            }
        }
        z.ln()
    }

    fn m_step(&self, counts: &[Vec<f64>]) -> Theta {
        counts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let card = self.net.cardinality(i);
                let rows: Vec<Vec<f64>> = c.chunks(card).map(<[f64]>::to_vec).collect();
                posterior_mean_rows(&self.means[i], &rows, self.ess)
                    .into_iter()
                    .flatten()
                    .collect()
            })
            .collect()
    }

    fn initial(&self, jitter: f64, rng: &mut ChaCha8Rng) -> Theta {
        self.means
            .iter()
            .map(|rows| {
                rows.iter()
                    .flat_map(|m| {
                        let scaled: Vec<f64> = m
                            .iter()
                            .map(|&x| x * (1.0 + jitter * rng.random_range(-1.0..1.0)))
                            .collect();
                        let z: f64 = scaled.iter().sum();
                        scaled.into_iter().map(move |x| x / z)
                    })
                    .collect()
            })
            .collect()
    }
}

struct Run {
    theta: Theta,
    log_likelihood: Vec<f64>,
    objective: Vec<f64>,
    converged: bool,
}

fn run(problem: &Problem, config: &EmConfig, restart: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let mut theta = problem.initial(config.jitter, &mut rng);
    let mut lls = Vec::new();
    let mut objs = Vec::new();
    let mut converged = false;
    for it in 0..config.max_iterations {
        let (ll, counts) = problem.e_step(&theta);
        let obj = ll + problem.penalty(&theta);
        if let Some(&prev) = objs.last() {
            let prev: f64 = prev;
            if (obj - prev).abs() <= config.tolerance * prev.abs() {
                converged = true;
            }
        }
        lls.push(ll);
        objs.push(obj);
        if converged || it + 1 == config.max_iterations || !ll.is_finite() {
            break;
        }
        theta = problem.m_step(&counts);
    }
    Run {
        theta,
        log_likelihood: lls,
        objective: objs,
        converged,
    }
}

/// Fits all CPTs by EM with `latent` variables unobserved; missing cells of
/// observed variables are treated as hidden too.
///
/// Each restart starts from jittered prior means and alternates exact
/// expected counts with the Dirichlet posterior-mean update. The restart
/// with the highest final log-likelihood wins (ties: lowest index). A
/// two-state latent variable is then relabeled so that its first state is
/// the one whose fitted mass is closer to the prior mass of that state.
pub fn em_fit(
    variables: &[VariableSpec],
    dag: &DagStructure,
    dataset: &Dataset,
    latent: &[&str],
    prior: &DirichletPrior,
    config: &EmConfig,
) -> Result<EmFit, LearningError> {
    em_fit_with_limit(variables, dag, dataset, latent, prior, config, ENUMERATION_LIMIT)
}

fn em_fit_with_limit(
    variables: &[VariableSpec],
    dag: &DagStructure,
    dataset: &Dataset,
    latent: &[&str],
    prior: &DirichletPrior,
    config: &EmConfig,
    enumeration_limit: usize,
) -> Result<EmFit, LearningError> {
    config.validate()?;
    let net = skeleton(variables, dag)?;
    let latent_idx: Vec<usize> = latent
        .iter()
        .map(|l| net.index_of(l).ok_or_else(|| LearningError::UnknownVariable(l.to_string())))
        .collect::<Result<_, _>>()?;
    let map = column_map(&net, dataset, &latent_idx, true)?;

    let families: Vec<Family> = (0..net.len())
        .map(|i| {
            let mut members = net.parents(i).to_vec();
            members.push(i);
            let cards = members.iter().map(|&m| net.cardinality(m)).collect();
            Family { members, cards }
        })
        .collect();
    let means: Vec<Vec<Vec<f64>>> = (0..net.len())
        .map(|i| prior.row_means(net.variable(i), net.cpt(i).rows.len()))
        .collect::<Result<_, _>>()?;
    let alpha: Vec<Vec<f64>> = means
        .iter()
        .map(|rows| rows.iter().flatten().map(|m| prior.ess() * m).collect())
        .collect();
    let mut constant_counts: Vec<Vec<f64>> = alpha.iter().map(|a| vec![0.0; a.len()]).collect();

    let mut prepared = Vec::new();
    for (values, weight) in patterns(dataset, &map) {
        let hidden: Vec<usize> = (0..net.len()).filter(|&i| values[i].is_none()).collect();
        let mut touching = Vec::new();
        let mut observed = Vec::new();
        for (f, fam) in families.iter().enumerate() {
            if fam.members.iter().any(|m| values[*m].is_none()) {
                touching.push(f);
            } else {
                let full: Vec<usize> = values.iter().map(|v| v.unwrap_or(0)).collect();
                let idx = fam.index(&full);
                constant_counts[f][idx] += weight;
                observed.push((f, idx));
            }
        }
        let joint_states = hidden
            .iter()
            .try_fold(1usize, |acc, &h| acc.checked_mul(net.cardinality(h)))
            .unwrap_or(usize::MAX);
        prepared.push(Pattern {
            weight,
            values,
            hidden,
            touching,
            observed,
            enumerate: joint_states <= enumeration_limit,
        });
    }
    let problem = Problem {
        net,
        families,
        patterns: prepared,
        constant_counts,
        alpha,
        means,
        ess: prior.ess(),
    };

    let runs: Vec<Run> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run(&problem, config, r))
        .collect();
    let mut selected = 0;
    for (r, run) in runs.iter().enumerate() {
        if final_ll(run) > final_ll(&runs[selected]) {
            selected = r;
        }
    }
    let mut network = problem.network(&runs[selected].theta);
    for &l in &latent_idx {
        if network.cardinality(l) != 2 {
            continue;
        }
        let anchor = prior.average_mass(network.variable(l), network.cpt(l).rows.len(), 0);
        let fitted = marginal(&network, &network.variable(l).name)
            .expect("latent variable is in the network")
            .probabilities;
        if (fitted[1] - anchor).abs() < (fitted[0] - anchor).abs() {
            network = network.relabel_states(l, &[1, 0])?;
        }
    }
    let converged = runs[selected].converged;
    Ok(EmFit {
        network,
        trace: EmTrace {
            converged: runs.iter().map(|r| r.converged).collect(),
            log_likelihood: runs.iter().map(|r| r.log_likelihood.clone()).collect(),
            objective: runs.into_iter().map(|r| r.objective).collect(),
            selected,
        },
        converged,
    })
}

fn final_ll(run: &Run) -> f64 {
    *run.log_likelihood.last().expect("at least one iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;
    use crate::inference::ancestral_sample;
    use crate::learning::{fit_cpts, log_likelihood};
    use crate::model::VariableKind;
    use approx::assert_abs_diff_eq;

    fn spec(name: &str, kind: VariableKind) -> VariableSpec {
        VariableSpec::new(name, &["Yes", "No"], kind)
    }

    /// Latent L with three noisy binary indicators.
    fn mixture() -> Network {
        let vars = vec![
            spec("L", VariableKind::Outcome),
            spec("X1", VariableKind::Game),
            spec("X2", VariableKind::Game),
            spec("X3", VariableKind::Game),
        ];
        let names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
        let edges = ["X1", "X2", "X3"].iter().map(|x| ("L".to_string(), x.to_string())).collect();
        let dag = DagStructure::new(names, edges).unwrap();
        Network::new(
            vars,
            dag,
            vec![
                Cpt::new("L", &[], vec![vec![0.2, 0.8]]),
                Cpt::new("X1", &["L"], vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
                Cpt::new("X2", &["L"], vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
                Cpt::new("X3", &["L"], vec![vec![0.7, 0.3], vec![0.3, 0.7]]),
            ],
        )
        .unwrap()
    }

    fn hidden_data(net: &Network, n: usize, seed: u64) -> Dataset {
        let full = Dataset::from_sample_batch(net, &ancestral_sample(net, n, seed));
        full.without_columns(&["L"])
    }

    fn prior(net: &Network) -> DirichletPrior {
        DirichletPrior::uniform(2.0)
            .unwrap()
            .with_state_probability(net.variable(0), "Yes", 0.1)
            .unwrap()
    }

    #[test]
    fn recovers_a_mixture() {
        let truth = mixture();
        let data = hidden_data(&truth, 4000, 11);
        let fit = em_fit(
            truth.variables(),
            truth.dag(),
            &data,
            &["L"],
            &prior(&truth),
            &EmConfig::default(),
        )
        .unwrap();
        assert!(fit.converged);
        let l = fit.network.cpt(0).rows[0][0];
        assert!((l - 0.2).abs() < 0.05, "latent prior {l}");
        assert!((fit.network.cpt(1).rows[0][0] - 0.9).abs() < 0.08);
        for run in &fit.trace.objective {
            assert!(run.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
        // the data log-likelihood alone may approach its limit from above
        assert!(fit.trace.max_decrease() < 1e-2, "{}", fit.trace.max_decrease());
        // the fitted model explains the observed data at least as well as the truth
        let ll_fit = log_likelihood(&fit.network, &data).unwrap().value;
        let ll_true = log_likelihood(&truth, &data).unwrap().value;
        assert!(ll_fit > ll_true - 5.0);
        let selected = &fit.trace.log_likelihood[fit.trace.selected];
        assert_abs_diff_eq!(*selected.last().unwrap(), ll_fit, epsilon = 1e-6);
    }

    #[test]
    fn isolated_latent_returns_its_prior() {
        let vars = vec![spec("L", VariableKind::Outcome), spec("X", VariableKind::Game)];
        let dag = DagStructure::new(vec!["L".into(), "X".into()], vec![]).unwrap();
        let records = (0..4)
            .map(|i| Record {
                values: vec![Some(i % 2)],
                response_ms: vec![],
                honesty: None,
            })
            .collect();
        let data = Dataset::new(vec![vars[1].clone()], vec![], false, records, "t").unwrap();
        let prior = DirichletPrior::uniform(2.0)
            .unwrap()
            .with_state_probability(&vars[0], "Yes", 0.1)
            .unwrap();
        let config = EmConfig {
            tolerance: 1e-14,
            max_iterations: 2000,
            ..EmConfig::default()
        };
        let fit = em_fit(&vars, &dag, &data, &["L"], &prior, &config).unwrap();
        assert_abs_diff_eq!(fit.network.cpt(0).rows[0][0], 0.1, epsilon = 1e-6);
    }

    #[test]
    fn single_restart_is_deterministic() {
        let truth = mixture();
        let data = hidden_data(&truth, 300, 2);
        let config = EmConfig {
            restarts: 1,
            seed: 99,
            ..EmConfig::default()
        };
        let a = em_fit(truth.variables(), truth.dag(), &data, &["L"], &prior(&truth), &config).unwrap();
        let b = em_fit(truth.variables(), truth.dag(), &data, &["L"], &prior(&truth), &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fully_observed_em_matches_closed_form() {
        let truth = mixture();
        let data = Dataset::from_sample_batch(&truth, &ancestral_sample(&truth, 500, 4));
        let p = prior(&truth);
        let em = em_fit(truth.variables(), truth.dag(), &data, &[], &p, &EmConfig::default()).unwrap();
        let direct = fit_cpts(truth.variables(), truth.dag(), &data, &p).unwrap();
        for (a, b) in em.network.cpts().iter().zip(direct.cpts()) {
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                for (x, y) in ra.iter().zip(rb) {
                    assert_abs_diff_eq!(x, y, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn elimination_path_matches_enumeration() {
        let truth = mixture();
        let data = hidden_data(&truth, 200, 8);
        let mut records = data.records().to_vec();
        for r in records.iter_mut().step_by(3) {
            r.values[1] = None;
        }
        let data = data.with_records(records);
        let config = EmConfig { restarts: 2, ..EmConfig::default() };
        let fit = |limit| {
            em_fit_with_limit(truth.variables(), truth.dag(), &data, &["L"], &prior(&truth), &config, limit)
                .unwrap()
        };
        let (a, b) = (fit(ENUMERATION_LIMIT), fit(0));
        for (x, y) in a.trace.log_likelihood.iter().flatten().zip(b.trace.log_likelihood.iter().flatten()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
        for (ca, cb) in a.network.cpts().iter().zip(b.network.cpts()) {
            for (x, y) in ca.rows.iter().flatten().zip(cb.rows.iter().flatten()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
        for run in &a.trace.objective {
            assert!(run.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
    }

    #[test]
    fn configuration_and_schema_errors() {
        let truth = mixture();
        let full = Dataset::from_sample_batch(&truth, &ancestral_sample(&truth, 10, 1));
        let p = prior(&truth);
        let c = EmConfig::default();
        assert!(matches!(
            em_fit(truth.variables(), truth.dag(), &full, &["L"], &p, &c),
            Err(LearningError::SchemaMismatch(_))
        ));
        assert!(matches!(
            em_fit(truth.variables(), truth.dag(), &full, &["Q"], &p, &c),
            Err(LearningError::UnknownVariable(_))
        ));
        let zero = EmConfig { restarts: 0, ..EmConfig::default() };
        assert!(matches!(
            em_fit(truth.variables(), truth.dag(), &full, &[], &p, &zero),
            Err(LearningError::InvalidConfig(_))
        ));
    }
}
