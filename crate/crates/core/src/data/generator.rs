//! Synthetic stand-in for the private survey cohort.
//!
//! Root marginals are the survey's sample percentages. Where a survey
//! variable does not sum to 100% the residual is spread evenly over its
//! states; sexual orientation instead gets an explicit `Undisclosed` state
//! carrying the non-response mass. The dependency structure is illustrative:
//! victimization is driven by self-esteem and empathy, offending by gender
//! and victimization, and the game answers respond to offending. The control
//! question is independent of everything.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dataset::Dataset;
use super::schema::{default_schema, CONTROL, OUTCOME, VICTIMIZATION, YES};
use crate::inference::ancestral_sample;
use crate::model::{Cpt, DagStructure, Network, VariableKind};

/// Survey sample marginals of the nine profiling variables, in schema
/// state order. Sexual orientation lists only the two answered categories.
pub const SURVEY_MARGINALS: &[(&str, &[f64])] = &[
    ("Gender", &[0.629, 0.351, 0.010]),
    ("Age", &[0.188, 0.044, 0.268, 0.330, 0.170]),
    ("Sexual_Orientation", &[0.553, 0.054]),
    ("Migratory_Background", &[0.714, 0.086, 0.200]),
    ("Self_Esteem", &[0.375, 0.415, 0.210]),
    ("Social_Support", &[0.036, 0.335, 0.629]),
    ("Family_Support", &[0.076, 0.245, 0.679]),
    ("Daily_Hours_Internet", &[0.089, 0.187, 0.214, 0.330, 0.156]),
    ("Empathy", &[0.458, 0.542]),
];

/// Game answers that respond directly to offending, in the generator and in
/// the default analysis structure.
pub const PLANTED_GAME_DRIVERS: &[&str] = &[
    "A1Q2_Sociable",
    "A1Q3_MatthewMeme",
    "A3Q1_PiratedContent",
    "A3Q2_PolOrPaula",
    "A3Q3_TimeOverrun",
    "A3Q4_PolBullied",
    "A3Q6_TalkToPol",
    "A3Q7_HowToHelpPol",
];

// P(answer | offending = Yes), P(answer | offending = No)
const GAME_ROWS: &[(&str, &[f64], &[f64])] = &[
    ("A1Q2_Sociable", &[0.40, 0.60], &[0.60, 0.40]),
    ("A1Q3_MatthewMeme", &[0.35, 0.45, 0.20], &[0.10, 0.50, 0.40]),
    ("A3Q1_PiratedContent", &[0.65, 0.35], &[0.40, 0.60]),
    ("A3Q2_PolOrPaula", &[0.30, 0.35, 0.35], &[0.55, 0.15, 0.30]),
    ("A3Q3_TimeOverrun", &[0.60, 0.40], &[0.40, 0.60]),
    ("A3Q4_PolBullied", &[0.30, 0.40, 0.30], &[0.10, 0.35, 0.55]),
    ("A3Q6_TalkToPol", &[0.45, 0.55], &[0.25, 0.75]),
    ("A3Q7_HowToHelpPol", &[0.15, 0.20, 0.30, 0.35], &[0.40, 0.35, 0.15, 0.10]),
];

/// Target of one root state, with the survey figure it derives from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub variable: String,
    pub state: String,
    /// Survey proportion; absent for the added non-response state.
    pub published: Option<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub network: Network,
    pub calibration: Vec<CalibrationEntry>,
    /// Variables with a direct planted effect on the outcome.
    pub planted_drivers: Vec<String>,
    /// The evidence item that dominates high-risk profiles.
    pub dominant_risk_factor: (String, String),
    pub control: String,
    pub seed: u64,
}

/// Calibrated root distribution for each published variable.
pub fn calibration_table() -> Vec<CalibrationEntry> {
    let schema = default_schema();
    let mut out = Vec::new();
    for &(name, published) in SURVEY_MARGINALS {
        let spec = schema.variable(name).expect("published variable in schema");
        let total: f64 = published.iter().sum();
        let residual = 1.0 - total;
        for (s, state) in spec.states.iter().enumerate() {
            let (published, target) = if published.len() == spec.cardinality() {
                let p = published[s];
                (Some(p), p + residual / spec.cardinality() as f64)
            } else if s < published.len() {
                (Some(published[s]), published[s])
            } else {
                (None, residual)
            };
            out.push(CalibrationEntry {
                variable: name.to_string(),
                state: state.clone(),
                published,
                target,
            });
        }
    }
    out
}

fn generator_edges() -> Vec<(String, String)> {
    let mut edges: Vec<(&str, &str)> = vec![
        ("Self_Esteem", VICTIMIZATION),
        ("Empathy", VICTIMIZATION),
        ("Gender", OUTCOME),
        (VICTIMIZATION, OUTCOME),
        (VICTIMIZATION, "A3Q5_RemindMatthew"),
    ];
    edges.extend(PLANTED_GAME_DRIVERS.iter().map(|&g| (OUTCOME, g)));
    edges
        .into_iter()
        .map(|(p, c)| (p.to_string(), c.to_string()))
        .collect()
}

/// Default analysis structure: the generator's edges plus offending → control,
/// so the control question is fitted like any other answer and its score
/// reflects sampling noise rather than being structurally zero.
pub fn default_dag() -> DagStructure {
    let mut edges = generator_edges();
    edges.push((OUTCOME.to_string(), CONTROL.to_string()));
    DagStructure::new(node_names(), edges).expect("default structure is acyclic")
}

/// Structure of the generator network.
pub fn generator_dag() -> DagStructure {
    DagStructure::new(node_names(), generator_edges()).expect("generator structure is acyclic")
}

fn node_names() -> Vec<String> {
    default_schema()
        .variables()
        .iter()
        .map(|v| v.name.clone())
        .collect()
}

/// The default generator. CPTs are fixed; `seed` is the default seed used
/// by [`GeneratorSpec::simulate`].
pub fn build_default_generator(seed: u64) -> GeneratorSpec {
    let schema = default_schema();
    let calibration = calibration_table();
    let mut cpts = Vec::new();
    for v in schema.variables() {
        let name = v.name.as_str();
        let cpt = if SURVEY_MARGINALS.iter().any(|(n, _)| *n == name) {
            let row = calibration
                .iter()
                .filter(|c| c.variable == name)
                .map(|c| c.target)
                .collect();
            Cpt::new(name, &[], vec![row])
        } else if name == VICTIMIZATION {
            // rows over (Self_Esteem, Empathy): (L,L) (L,H) (M,L) (M,H) (H,L) (H,H)
            let yes = [0.50, 0.40, 0.32, 0.24, 0.22, 0.15];
            Cpt::new(name, &["Self_Esteem", "Empathy"], binary_rows(&yes))
        } else if name == OUTCOME {
            // rows over (Gender, victimization)
            let yes = [0.38, 0.08, 0.24, 0.05, 0.30, 0.06];
            Cpt::new(name, &["Gender", VICTIMIZATION], binary_rows(&yes))
        } else if name == "A3Q5_RemindMatthew" {
            Cpt::new(
                name,
                &[VICTIMIZATION],
                vec![vec![0.55, 0.35, 0.10], vec![0.15, 0.75, 0.10]],
            )
        } else if name == CONTROL {
            Cpt::new(name, &[], vec![vec![0.5, 0.5]])
        } else {
            let (_, yes, no) = GAME_ROWS
                .iter()
                .find(|(n, _, _)| *n == name)
                .expect("every game answer has rows");
            Cpt::new(name, &[OUTCOME], vec![yes.to_vec(), no.to_vec()])
        };
        cpts.push(cpt);
    }
    let network = Network::new(schema.variables().to_vec(), generator_dag(), cpts)
        .expect("generator network is valid");
    let mut planted_drivers = vec![VICTIMIZATION.to_string(), "Gender".to_string()];
    planted_drivers.extend(PLANTED_GAME_DRIVERS.iter().map(|s| s.to_string()));
    GeneratorSpec {
        network,
        calibration,
        planted_drivers,
        dominant_risk_factor: (VICTIMIZATION.to_string(), YES.to_string()),
        control: CONTROL.to_string(),
        seed,
    }
}

fn binary_rows(yes: &[f64]) -> Vec<Vec<f64>> {
    yes.iter().map(|&p| vec![p, 1.0 - p]).collect()
}

impl GeneratorSpec {
    /// `n` complete records with simulated response times and honesty
    /// answers, using the generator's own seed.
    pub fn simulate(&self, n: usize) -> Dataset {
        self.simulate_with_seed(n, self.seed)
    }

    /// Response times are a shifted exponential (900 ms + mean 2.5 s) with a
    /// 0.5% chance per answer of a hurried 150–800 ms click; 90% of players
    /// report having played honestly. Meta values use a separate stream of
    /// the same seed, so the categorical values equal a plain ancestral
    /// sample.
    pub fn simulate_with_seed(&self, n: usize, seed: u64) -> Dataset {
        let batch = ancestral_sample(&self.network, n, seed);
        let base = Dataset::from_sample_batch(&self.network, &batch);
        let game: Vec<String> = self
            .network
            .variables()
            .iter()
            .filter(|v| v.kind == VariableKind::Game)
            .map(|v| v.name.clone())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut times = Vec::with_capacity(n);
        let mut honesty = Vec::with_capacity(n);
        for _ in 0..n {
            let rt = game
                .iter()
                .map(|_| {
                    let hurried = rng.random::<f64>() < 0.005;
                    let u = rng.random::<f64>();
                    Some(if hurried {
                        150 + (u * 650.0) as u64
                    } else {
                        900 + (-2500.0 * (1.0 - u).ln()) as u64
                    })
                })
                .collect();
            times.push(rt);
            honesty.push(Some(rng.random::<f64>() < 0.9));
        }
        base.with_meta(game, times, honesty)
    }
}
