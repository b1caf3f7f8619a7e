use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::{validate_schema, ModelError, VariableKind, VariableSpec};

/// Outcome of interest: past cyberbullying offending.
pub const OUTCOME: &str = "Previous_CB_Offending";
pub const VICTIMIZATION: &str = "Previous_CB_Victimization";
/// Game question answered at random; marks the irrelevance floor in rankings.
pub const CONTROL: &str = "A1Q1_PhotoSharing";
/// Affirmative state of the two outcome variables.
pub const YES: &str = "Yes";

pub const HONESTY_COLUMN: &str = "honesty";
pub const RESPONSE_TIME_PREFIX: &str = "rt_";

/// Adventure and question number of an in-game decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuestionId {
    pub adventure: u8,
    pub question: u8,
}

/// Variables a dataset may carry, plus the meta columns that accompany them.
///
/// Every game variable may have a response-time column `rt_<name>`; an
/// optional `honesty` column records the post-game self-report.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    variables: Vec<VariableSpec>,
    questions: BTreeMap<String, QuestionId>,
}

impl Schema {
    /// Builds a schema from variable declarations. Meta-kind declarations are
    /// dropped; meta columns are implied by the game variables.
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self, ModelError> {
        let variables: Vec<VariableSpec> = variables
            .into_iter()
            .filter(|v| v.kind != VariableKind::Meta)
            .collect();
        validate_schema(&variables)?;
        Ok(Schema {
            variables,
            questions: BTreeMap::new(),
        })
    }

    fn with_question(mut self, name: &str, adventure: u8, question: u8) -> Self {
        self.questions
            .insert(name.to_string(), QuestionId { adventure, question });
        self
    }

    /// Categorical (network) variables in declaration order.
    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn question(&self, name: &str) -> Option<QuestionId> {
        self.questions.get(name).copied()
    }

    /// Names of the variables with the given kind, in declaration order.
    pub fn names_of_kind(&self, kind: VariableKind) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect()
    }

    /// Variable that a meta column `rt_<name>` refers to, if it is one.
    pub fn response_time_target(&self, column: &str) -> Option<&VariableSpec> {
        column
            .strip_prefix(RESPONSE_TIME_PREFIX)
            .and_then(|v| self.variable(v))
            .filter(|v| v.kind == VariableKind::Game)
    }
}

/// Default study schema: nine profiling variables, two outcomes and the ten
/// decisions of the two cyberbullying adventures.
///
/// Sexual orientation carries an explicit `Undisclosed` state for the
/// respondents who did not answer.
pub fn default_schema() -> Schema {
    use VariableKind::*;
    let v = VariableSpec::new;
    let answers = |n: usize| -> Vec<String> { (1..=n).map(|i| i.to_string()).collect() };
    let game = |name: &str, n: usize| VariableSpec {
        name: name.to_string(),
        states: answers(n),
        kind: Game,
    };
    let vars = vec![
        v("Gender", &["Male", "Female", "NonBinary"], Demographic),
        v("Age", &["12", "13", "14", "15", "16"], Demographic),
        v(
            "Sexual_Orientation",
            &["Heterosexual", "Non_heterosexual", "Undisclosed"],
            Demographic,
        ),
        v(
            "Migratory_Background",
            &["No", "Parents_born_abroad", "Born_abroad"],
            Demographic,
        ),
        v("Self_Esteem", &["Low", "Medium", "High"], Psychological),
        v("Social_Support", &["Low", "Medium", "High"], Psychological),
        v("Family_Support", &["Low", "Medium", "High"], Psychological),
        v(
            "Daily_Hours_Internet",
            &["Less_than_1h", "1-2h", "2-3h", "3-4h", "More_than_4h"],
            Demographic,
        ),
        v("Empathy", &["Low", "High"], Psychological),
        v(OUTCOME, &[YES, "No"], Outcome),
        v(VICTIMIZATION, &[YES, "No"], Outcome),
        game(CONTROL, 2),
        game("A1Q2_Sociable", 2),
        game("A1Q3_MatthewMeme", 3),
        game("A3Q1_PiratedContent", 2),
        game("A3Q2_PolOrPaula", 3),
        game("A3Q3_TimeOverrun", 2),
        game("A3Q4_PolBullied", 3),
        game("A3Q5_RemindMatthew", 3),
        game("A3Q6_TalkToPol", 2),
        game("A3Q7_HowToHelpPol", 4),
    ];
    let schema = Schema::new(vars).expect("default schema is valid");
    [
        (CONTROL, 1, 1),
        ("A1Q2_Sociable", 1, 2),
        ("A1Q3_MatthewMeme", 1, 3),
        ("A3Q1_PiratedContent", 3, 1),
        ("A3Q2_PolOrPaula", 3, 2),
        ("A3Q3_TimeOverrun", 3, 3),
        ("A3Q4_PolBullied", 3, 4),
        ("A3Q5_RemindMatthew", 3, 5),
        ("A3Q6_TalkToPol", 3, 6),
        ("A3Q7_HowToHelpPol", 3, 7),
    ]
    .into_iter()
    .fold(schema, |s, (n, a, q)| s.with_question(n, a, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_questions_have_the_listed_option_counts() {
        let schema = default_schema();
        let expected = [
            (CONTROL, 2),
            ("A1Q2_Sociable", 2),
            ("A1Q3_MatthewMeme", 3),
            ("A3Q1_PiratedContent", 2),
            ("A3Q2_PolOrPaula", 3),
            ("A3Q3_TimeOverrun", 2),
            ("A3Q4_PolBullied", 3),
            ("A3Q5_RemindMatthew", 3),
            ("A3Q6_TalkToPol", 2),
            ("A3Q7_HowToHelpPol", 4),
        ];
        let game = schema.names_of_kind(VariableKind::Game);
        assert_eq!(game, expected.iter().map(|e| e.0).collect::<Vec<_>>());
        for (name, n) in expected {
            assert_eq!(schema.variable(name).unwrap().cardinality(), n, "{name}");
            assert!(schema.question(name).is_some());
        }
        assert_eq!(
            schema.question("A3Q7_HowToHelpPol"),
            Some(QuestionId { adventure: 3, question: 7 })
        );
    }

    #[test]
    fn profiling_state_counts() {
        let schema = default_schema();
        let counts = [
            ("Gender", 3),
            ("Age", 5),
            ("Migratory_Background", 3),
            ("Self_Esteem", 3),
            ("Social_Support", 3),
            ("Family_Support", 3),
            ("Daily_Hours_Internet", 5),
            ("Empathy", 2),
        ];
        for (name, n) in counts {
            assert_eq!(schema.variable(name).unwrap().cardinality(), n, "{name}");
        }
        assert_eq!(
            schema.variable("Gender").unwrap().states,
            vec!["Male", "Female", "NonBinary"]
        );
        // two published categories plus the non-response state
        assert_eq!(schema.variable("Sexual_Orientation").unwrap().cardinality(), 3);
    }

    #[test]
    fn outcome_invariants() {
        let schema = default_schema();
        assert_eq!(schema.variables().len(), 21);
        assert!(validate_schema(schema.variables()).is_ok());
        let outcomes = schema.names_of_kind(VariableKind::Outcome);
        assert_eq!(outcomes.iter().filter(|n| **n == OUTCOME).count(), 1);
        assert_eq!(schema.variable(OUTCOME).unwrap().states, vec![YES, "No"]);
        assert_eq!(schema.variable(VICTIMIZATION).unwrap().states, vec![YES, "No"]);
    }

    #[test]
    fn response_time_columns_map_to_game_variables() {
        let schema = default_schema();
        assert_eq!(
            schema.response_time_target("rt_A3Q7_HowToHelpPol").map(|v| v.name.as_str()),
            Some("A3Q7_HowToHelpPol")
        );
        assert!(schema.response_time_target("rt_Gender").is_none());
        assert!(schema.response_time_target("Gender").is_none());
    }
}
