//! A generic Mamdani inference engine.
//!
//! Rule strengths come from folding clause membership degrees with the
//! configured T-norm; implication clips each consequent term's membership
//! at the rule strength (pointwise min); clipped terms aggregate into one
//! sampled distribution per output variable; and a defuzzifier collapses
//! that distribution to a crisp value, either the center of mass of the
//! samples or the mean of the sample positions attaining the maximum.
//!
//! Output universes are sampled at `q` points `z_j = (lo*(q-1-j) + hi*j)/(q-1)`.
//! `q` must be odd so the universe midpoint is itself a sample, and the
//! affine form makes the grid exactly symmetric for symmetric universes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FuzzyError {
    #[error("missing crisp input for variable {0:?}")]
    MissingInput(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown term {term:?} on variable {variable:?}")]
    UnknownTerm { variable: String, term: String },
    #[error("no rule activated output {0:?} (all-zero distribution)")]
    NoActivation(String),
    #[error("invalid rule base: {0}")]
    Invalid(String),
    #[error("rule base json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Trapezoid membership function with corners `a <= b <= c <= d`; evaluates
/// to 1 on `[b, c]`, 0 outside `[a, d]`, linear between. A triangle is the
/// degenerate case `b == c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MembershipFunction {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        if !(a <= b && b <= c && c <= d) {
            return Err(FuzzyError::Invalid(format!(
                "trapezoid corners must be ordered: {a}, {b}, {c}, {d}"
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }
}

/// A named variable with a universe of discourse and named trapezoid terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    pub name: String,
    pub universe_lo: f64,
    pub universe_hi: f64,
    terms: Vec<(String, MembershipFunction)>,
}

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        universe: (f64, f64),
        terms: Vec<(String, MembershipFunction)>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        if !(universe.0 < universe.1) {
            return Err(FuzzyError::Invalid(format!(
                "variable {name:?}: universe [{}, {}] is empty",
                universe.0, universe.1
            )));
        }
        let mut seen = BTreeSet::new();
        for (term, _) in &terms {
            if !seen.insert(term.clone()) {
                return Err(FuzzyError::Invalid(format!(
                    "variable {name:?}: duplicate term {term:?}"
                )));
            }
        }
        // Canonical order, so construction and JSON loading agree.
        let mut terms = terms;
        terms.sort_by(|(a, _), (b, _)| a.cmp(b));
        Ok(Self {
            name,
            universe_lo: universe.0,
            universe_hi: universe.1,
            terms,
        })
    }

    pub fn term(&self, name: &str) -> Option<&MembershipFunction> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, mf)| mf)
    }

    pub fn terms(&self) -> &[(String, MembershipFunction)] {
        &self.terms
    }
}

/// AND of antecedent clauses: `(variable, term)` pairs. Consequents assign
/// output terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRule {
    pub antecedent: Vec<(String, String)>,
    pub consequents: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TNorm {
    Min,
    Product,
}

impl TNorm {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Min => a.min(b),
            TNorm::Product => a * b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SNorm {
    Max,
    ProbabilisticSum,
}

impl SNorm {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            SNorm::Max => a.max(b),
            SNorm::ProbabilisticSum => a + b - a * b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Max,
    BoundedSum,
}

impl Aggregation {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Aggregation::Max => a.max(b),
            Aggregation::BoundedSum => (a + b).min(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defuzz {
    Centroid,
    MeanOfMax,
}

/// Fuzzy AND of two degrees.
pub fn tnorm(a: f64, b: f64, kind: TNorm) -> f64 {
    kind.apply(a, b)
}

/// Fuzzy OR of two degrees.
pub fn snorm(a: f64, b: f64, kind: SNorm) -> f64 {
    kind.apply(a, b)
}

/// A complete rule base. Variables referenced in any consequent are the
/// outputs; variables referenced in any antecedent are the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    variables: Vec<LinguisticVariable>,
    rules: Vec<FuzzyRule>,
    pub and_kind: TNorm,
    pub or_kind: SNorm,
    pub aggregation: Aggregation,
    pub defuzz: Defuzz,
    pub sample_count: usize,
}

impl RuleBase {
    pub fn new(
        variables: Vec<LinguisticVariable>,
        rules: Vec<FuzzyRule>,
        and_kind: TNorm,
        or_kind: SNorm,
        aggregation: Aggregation,
        defuzz: Defuzz,
        sample_count: usize,
    ) -> Result<Self, FuzzyError> {
        let rb = Self {
            variables,
            rules,
            and_kind,
            or_kind,
            aggregation,
            defuzz,
            sample_count,
        };
        rb.validate()?;
        Ok(rb)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        if self.sample_count < 3 || self.sample_count % 2 == 0 {
            return Err(FuzzyError::Invalid(format!(
                "sample count must be odd and >= 3, got {}",
                self.sample_count
            )));
        }
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return Err(FuzzyError::Invalid(format!("duplicate variable {:?}", v.name)));
            }
        }
        for rule in &self.rules {
            for (var, term) in rule.antecedent.iter().chain(&rule.consequents) {
                let v = self
                    .variable(var)
                    .ok_or_else(|| FuzzyError::UnknownVariable(var.clone()))?;
                if v.term(term).is_none() {
                    return Err(FuzzyError::UnknownTerm {
                        variable: var.clone(),
                        term: term.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn variable(&self, name: &str) -> Option<&LinguisticVariable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn variables(&self) -> &[LinguisticVariable] {
        &self.variables
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    /// Variables referenced by at least one antecedent clause.
    pub fn input_names(&self) -> BTreeSet<&str> {
        self.rules
            .iter()
            .flat_map(|r| r.antecedent.iter())
            .map(|(v, _)| v.as_str())
            .collect()
    }

    /// Variables referenced by at least one consequent.
    pub fn output_names(&self) -> BTreeSet<&str> {
        self.rules
            .iter()
            .flat_map(|r| r.consequents.iter())
            .map(|(v, _)| v.as_str())
            .collect()
    }

    /// Crisp outputs using the configured defuzzifier. Propagates
    /// no-activation errors; callers that want a fallback handle them.
    pub fn evaluate(&self, inputs: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, FuzzyError> {
        let dists = infer(self, inputs)?;
        let mut out = BTreeMap::new();
        for (name, dist) in dists {
            let crisp = match self.defuzz {
                Defuzz::Centroid => defuzz_centroid(&dist)?,
                Defuzz::MeanOfMax => defuzz_mean_of_max(&dist)?,
            };
            out.insert(name, crisp);
        }
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<Self, FuzzyError> {
        let file: RuleBaseFile = serde_json::from_str(s)?;
        file.into_rule_base()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&RuleBaseFile::from_rule_base(self)).unwrap()
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, FuzzyError> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}

/// Sampled membership over one output variable's universe.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    pub variable: String,
    pub universe_lo: f64,
    pub universe_hi: f64,
    pub samples: Vec<f64>,
}

impl OutputDistribution {
    /// Position of sample `j` on the universe. The affine form keeps the
    /// grid exactly symmetric when `lo == -hi`.
    #[inline]
    pub fn position(&self, j: usize) -> f64 {
        sample_position(self.universe_lo, self.universe_hi, self.samples.len(), j)
    }
}

#[inline]
fn sample_position(lo: f64, hi: f64, q: usize, j: usize) -> f64 {
    let n = (q - 1) as f64;
    (lo * (q - 1 - j) as f64 + hi * j as f64) / n
}

/// Rule strengths for the given crisp inputs, in rule order.
pub fn rule_strengths(rb: &RuleBase, inputs: &BTreeMap<String, f64>) -> Result<Vec<f64>, FuzzyError> {
    rb.rules.iter().map(|rule| rule_strength(rb, rule, inputs)).collect()
}

fn rule_strength(rb: &RuleBase, rule: &FuzzyRule, inputs: &BTreeMap<String, f64>) -> Result<f64, FuzzyError> {
    let mut strength = 1.0;
    for (var, term) in &rule.antecedent {
        let v = rb
            .variable(var)
            .ok_or_else(|| FuzzyError::UnknownVariable(var.clone()))?;
        let mf = v.term(term).ok_or_else(|| FuzzyError::UnknownTerm {
            variable: var.clone(),
            term: term.clone(),
        })?;
        let x = *inputs
            .get(var)
            .ok_or_else(|| FuzzyError::MissingInput(var.clone()))?;
        strength = rb.and_kind.apply(strength, mf.eval(x));
    }
    Ok(strength)
}

/// Runs fuzzification, rule evaluation, clipping implication, and
/// aggregation; returns one sampled distribution per output variable.
pub fn infer(
    rb: &RuleBase,
    inputs: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, OutputDistribution>, FuzzyError> {
    let q = rb.sample_count;
    let mut outputs: BTreeMap<String, OutputDistribution> = BTreeMap::new();
    for name in rb.output_names() {
        let v = rb
            .variable(name)
            .ok_or_else(|| FuzzyError::UnknownVariable(name.to_string()))?;
        outputs.insert(
            name.to_string(),
            OutputDistribution {
                variable: name.to_string(),
                universe_lo: v.universe_lo,
                universe_hi: v.universe_hi,
                samples: vec![0.0; q],
            },
        );
    }

    for rule in &rb.rules {
        let strength = rule_strength(rb, rule, inputs)?;
        for (var, term) in &rule.consequents {
            let v = rb
                .variable(var)
                .ok_or_else(|| FuzzyError::UnknownVariable(var.clone()))?;
            let mf = *v.term(term).ok_or_else(|| FuzzyError::UnknownTerm {
                variable: var.clone(),
                term: term.clone(),
            })?;
            let dist = outputs.get_mut(var).expect("consequent variable present");
            for j in 0..q {
                let z = dist.position(j);
                let clipped = strength.min(mf.eval(z));
                dist.samples[j] = rb.aggregation.apply(dist.samples[j], clipped);
            }
        }
    }
    Ok(outputs)
}

/// Center of mass of the sampled distribution.
pub fn defuzz_centroid(dist: &OutputDistribution) -> Result<f64, FuzzyError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &u) in dist.samples.iter().enumerate() {
        num += dist.position(j) * u;
        den += u;
    }
    if den == 0.0 {
        return Err(FuzzyError::NoActivation(dist.variable.clone()));
    }
    Ok(num / den)
}

/// Mean of the sample positions attaining the distribution's maximum.
pub fn defuzz_mean_of_max(dist: &OutputDistribution) -> Result<f64, FuzzyError> {
    let max = dist.samples.iter().copied().fold(0.0f64, f64::max);
    if max == 0.0 {
        return Err(FuzzyError::NoActivation(dist.variable.clone()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (j, &u) in dist.samples.iter().enumerate() {
        if u == max {
            sum += dist.position(j);
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

// ---------------------------------------------------------------------------
// JSON interchange format

#[derive(Serialize, Deserialize)]
struct RuleBaseFile {
    variables: Vec<VariableFile>,
    rules: Vec<RuleFile>,
    #[serde(default = "default_and")]
    and: TNorm,
    #[serde(default = "default_or")]
    or: SNorm,
    #[serde(default = "default_aggregation")]
    aggregation: Aggregation,
    #[serde(default = "default_defuzz")]
    defuzz: Defuzz,
    #[serde(default = "default_q")]
    q: usize,
}

#[derive(Serialize, Deserialize)]
struct VariableFile {
    name: String,
    universe: [f64; 2],
    terms: BTreeMap<String, [f64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct RuleFile {
    #[serde(rename = "if")]
    if_: Vec<(String, String)>,
    then: Vec<(String, String)>,
}

fn default_and() -> TNorm {
    TNorm::Min
}
fn default_or() -> SNorm {
    SNorm::Max
}
fn default_aggregation() -> Aggregation {
    Aggregation::Max
}
fn default_defuzz() -> Defuzz {
    Defuzz::Centroid
}
fn default_q() -> usize {
    1001
}

impl RuleBaseFile {
    fn into_rule_base(self) -> Result<RuleBase, FuzzyError> {
        let mut variables = Vec::with_capacity(self.variables.len());
        for v in self.variables {
            let terms = v
                .terms
                .into_iter()
                .map(|(name, [a, b, c, d])| Ok((name, MembershipFunction::new(a, b, c, d)?)))
                .collect::<Result<Vec<_>, FuzzyError>>()?;
            variables.push(LinguisticVariable::new(
                v.name,
                (v.universe[0], v.universe[1]),
                terms,
            )?);
        }
        let rules = self
            .rules
            .into_iter()
            .map(|r| FuzzyRule { antecedent: r.if_, consequents: r.then })
            .collect();
        RuleBase::new(variables, rules, self.and, self.or, self.aggregation, self.defuzz, self.q)
    }

    fn from_rule_base(rb: &RuleBase) -> Self {
        Self {
            variables: rb
                .variables
                .iter()
                .map(|v| VariableFile {
                    name: v.name.clone(),
                    universe: [v.universe_lo, v.universe_hi],
                    terms: v
                        .terms()
                        .iter()
                        .map(|(n, mf)| (n.clone(), [mf.a, mf.b, mf.c, mf.d]))
                        .collect(),
                })
                .collect(),
            rules: rb
                .rules
                .iter()
                .map(|r| RuleFile {
                    if_: r.antecedent.clone(),
                    then: r.consequents.clone(),
                })
                .collect(),
            and: rb.and_kind,
            or: rb.or_kind,
            aggregation: rb.aggregation,
            defuzz: rb.defuzz,
            q: rb.sample_count,
        }
    }
}

impl fmt::Display for Defuzz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defuzz::Centroid => write!(f, "centroid"),
            Defuzz::MeanOfMax => write!(f, "mean_of_max"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn near() -> MembershipFunction {
        MembershipFunction::new(0.0, 0.0, 0.25, 0.5).unwrap()
    }

    fn far() -> MembershipFunction {
        MembershipFunction::new(0.5, 0.75, 1.0, 1.0).unwrap()
    }

    /// One input on [0, 1] with near/far, two outputs on [-1, 1].
    fn tiny_rule_base(q: usize) -> RuleBase {
        let input = LinguisticVariable::new(
            "x",
            (0.0, 1.0),
            vec![("near".into(), near()), ("far".into(), far())],
        )
        .unwrap();
        let output = LinguisticVariable::new(
            "out",
            (-1.0, 1.0),
            vec![
                ("negative".into(), MembershipFunction::new(-1.0, -1.0, -0.5, 0.0).unwrap()),
                ("zero".into(), MembershipFunction::new(-0.5, 0.0, 0.0, 0.5).unwrap()),
                ("positive".into(), MembershipFunction::new(0.0, 0.5, 1.0, 1.0).unwrap()),
            ],
        )
        .unwrap();
        RuleBase::new(
            vec![input, output],
            vec![
                FuzzyRule {
                    antecedent: vec![("x".into(), "near".into())],
                    consequents: vec![("out".into(), "positive".into())],
                },
                FuzzyRule {
                    antecedent: vec![("x".into(), "far".into())],
                    consequents: vec![("out".into(), "zero".into())],
                },
            ],
            TNorm::Min,
            SNorm::Max,
            Aggregation::Max,
            Defuzz::Centroid,
            q,
        )
        .unwrap()
    }

    fn inputs(x: f64) -> BTreeMap<String, f64> {
        BTreeMap::from([("x".to_string(), x)])
    }

    #[test]
    fn membership_examples() {
        assert_eq!(near().eval(0.2), 1.0);
        assert_eq!(near().eval(0.375), 0.5);
        assert_eq!(far().eval(0.8), 1.0);
        assert_eq!(far().eval(1.0), 1.0);
        assert_eq!(near().eval(0.6), 0.0);
        assert_eq!(far().eval(0.5), 0.0);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(tnorm(0.3, 0.7, TNorm::Min), 0.3);
        assert_relative_eq!(tnorm(0.3, 0.7, TNorm::Product), 0.21);
        assert_eq!(snorm(0.3, 0.7, SNorm::Max), 0.7);
        assert_relative_eq!(snorm(0.3, 0.7, SNorm::ProbabilisticSum), 0.79);
    }

    #[test]
    fn infer_no_rule_fires_gives_zero_distribution() {
        let rb = tiny_rule_base(101);
        // x = 0.5 is outside both terms' support.
        let dists = infer(&rb, &inputs(0.5)).unwrap();
        assert!(dists["out"].samples.iter().all(|&u| u == 0.0));
        assert!(matches!(
            defuzz_centroid(&dists["out"]),
            Err(FuzzyError::NoActivation(_))
        ));
    }

    #[test]
    fn infer_full_strength_rule_reproduces_term() {
        let rb = tiny_rule_base(101);
        let dists = infer(&rb, &inputs(0.1)).unwrap();
        let dist = &dists["out"];
        let positive = MembershipFunction::new(0.0, 0.5, 1.0, 1.0).unwrap();
        for (j, &u) in dist.samples.iter().enumerate() {
            assert_eq!(u, positive.eval(dist.position(j)));
        }
    }

    #[test]
    fn infer_matches_scalar_recomputation_for_two_rules() {
        // x = 0.4: near degree 0.4, far degree 0 -- use a crafted pair of
        // strengths instead, via two x evaluations folded by hand.
        let rb = tiny_rule_base(201);
        let x = 0.4125; // near = 0.35, far = 0
        let dists = infer(&rb, &inputs(x)).unwrap();
        let dist = &dists["out"];
        let positive = MembershipFunction::new(0.0, 0.5, 1.0, 1.0).unwrap();
        let zero = MembershipFunction::new(-0.5, 0.0, 0.0, 0.5).unwrap();
        let s_pos = near().eval(x);
        let s_zero = far().eval(x);
        for (j, &u) in dist.samples.iter().enumerate() {
            let z = dist.position(j);
            let expected = s_pos.min(positive.eval(z)).max(s_zero.min(zero.eval(z)));
            assert_eq!(u, expected, "sample {j}");
        }
    }

    #[test]
    fn centroid_examples() {
        // Symmetric distribution about the universe midpoint.
        let rb = tiny_rule_base(1001);
        let dists = infer(&rb, &inputs(0.8)).unwrap(); // far -> zero term
        assert_relative_eq!(defuzz_centroid(&dists["out"]).unwrap(), 0.0, epsilon = 1e-12);

        // Point mass.
        let dist = OutputDistribution {
            variable: "out".into(),
            universe_lo: 0.0,
            universe_hi: 1.0,
            samples: {
                let mut s = vec![0.0; 11];
                s[5] = 0.7;
                s
            },
        };
        assert_relative_eq!(defuzz_centroid(&dist).unwrap(), 0.5);
    }

    #[test]
    fn mean_of_max_examples() {
        let dist = OutputDistribution {
            variable: "out".into(),
            universe_lo: 0.0,
            universe_hi: 1.0,
            samples: vec![0.0, 0.1, 0.9, 0.9, 0.9, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0],
        };
        // Max attained at z = 0.2, 0.3, 0.4.
        assert_relative_eq!(defuzz_mean_of_max(&dist).unwrap(), 0.3);

        let dist = OutputDistribution {
            variable: "out".into(),
            universe_lo: -1.0,
            universe_hi: 0.0,
            samples: vec![0.0, 0.2, 0.8, 0.2, 0.0],
        };
        assert_relative_eq!(defuzz_mean_of_max(&dist).unwrap(), -0.5);

        // Plateau spanning [0.5, 1.0] on a uniform grid.
        let dist = OutputDistribution {
            variable: "out".into(),
            universe_lo: 0.0,
            universe_hi: 1.0,
            samples: vec![0.0, 0.0, 1.0, 1.0, 1.0],
        };
        assert_relative_eq!(defuzz_mean_of_max(&dist).unwrap(), 0.75);
    }

    #[test]
    fn infer_missing_input_is_an_error() {
        let rb = tiny_rule_base(11);
        assert!(matches!(
            infer(&rb, &BTreeMap::new()),
            Err(FuzzyError::MissingInput(_))
        ));
    }

    #[test]
    fn validation_catches_unknown_references() {
        let rb = tiny_rule_base(11);
        let mut bad = rb.clone();
        bad.rules_mut_for_test().push(FuzzyRule {
            antecedent: vec![("x".into(), "gone".into())],
            consequents: vec![("out".into(), "zero".into())],
        });
        assert!(matches!(bad.validate(), Err(FuzzyError::UnknownTerm { .. })));
        assert!(RuleBase::new(
            rb.variables.clone(),
            rb.rules.clone(),
            TNorm::Min,
            SNorm::Max,
            Aggregation::Max,
            Defuzz::Centroid,
            10,
        )
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let rb = tiny_rule_base(101);
        let back = RuleBase::from_json_str(&rb.to_json_string()).unwrap();
        assert_eq!(rb, back);
    }

    #[test]
    fn json_defaults_apply() {
        let rb = RuleBase::from_json_str(
            r#"{
                "variables": [
                    {"name": "x", "universe": [0, 1], "terms": {"near": [0, 0, 0.25, 0.5]}},
                    {"name": "out", "universe": [-1, 1], "terms": {"zero": [-0.5, 0, 0, 0.5]}}
                ],
                "rules": [{"if": [["x", "near"]], "then": [["out", "zero"]]}]
            }"#,
        )
        .unwrap();
        assert_eq!(rb.and_kind, TNorm::Min);
        assert_eq!(rb.sample_count, 1001);
        assert_eq!(rb.defuzz, Defuzz::Centroid);
    }

    #[test]
    fn scaled_strengths_keep_mean_of_max_for_symmetric_terms() {
        // Clipping a symmetric term at any level keeps the attaining set
        // symmetric about its center, so the mean of maximum stays put.
        let zero = MembershipFunction::new(-0.5, 0.0, 0.0, 0.5).unwrap();
        for &scale in &[1.0, 0.7, 0.3, 0.05] {
            let strength: f64 = 0.9 * scale;
            let mut dist = OutputDistribution {
                variable: "out".into(),
                universe_lo: -1.0,
                universe_hi: 1.0,
                samples: vec![0.0; 1001],
            };
            for j in 0..1001 {
                let z = dist.position(j);
                dist.samples[j] = strength.min(zero.eval(z));
            }
            assert_relative_eq!(defuzz_mean_of_max(&dist).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    impl RuleBase {
        fn rules_mut_for_test(&mut self) -> &mut Vec<FuzzyRule> {
            &mut self.rules
        }
    }

    proptest! {
        #[test]
        fn trapezoid_eval_stays_in_unit_interval(
            corners in proptest::collection::vec(-2.0..2.0f64, 4),
            x in -3.0..3.0f64,
        ) {
            let mut c = corners.clone();
            c.sort_by(f64::total_cmp);
            let mf = MembershipFunction::new(c[0], c[1], c[2], c[3]).unwrap();
            let u = mf.eval(x);
            prop_assert!((0.0..=1.0).contains(&u));
        }

        #[test]
        fn tnorm_laws(a in 0.0..=1.0f64, b in 0.0..=1.0f64, c in 0.0..=1.0f64) {
            for kind in [TNorm::Min, TNorm::Product] {
                prop_assert_eq!(tnorm(a, b, kind), tnorm(b, a, kind));
                prop_assert_eq!(tnorm(a, 1.0, kind), a);
                prop_assert_eq!(tnorm(a, 0.0, kind), 0.0);
                if b <= c {
                    prop_assert!(tnorm(a, b, kind) <= tnorm(a, c, kind));
                }
            }
            for kind in [SNorm::Max, SNorm::ProbabilisticSum] {
                prop_assert_eq!(snorm(a, 0.0, kind), a);
                prop_assert_eq!(snorm(a, b, kind), snorm(b, a, kind));
            }
        }

        #[test]
        fn clipping_never_raises_and_centroid_contained(x in 0.0..=1.0f64) {
            let rb = tiny_rule_base(201);
            let dists = infer(&rb, &inputs(x)).unwrap();
            let dist = &dists["out"];
            let positive = MembershipFunction::new(0.0, 0.5, 1.0, 1.0).unwrap();
            let zero = MembershipFunction::new(-0.5, 0.0, 0.0, 0.5).unwrap();
            for (j, &u) in dist.samples.iter().enumerate() {
                let z = dist.position(j);
                prop_assert!(u <= positive.eval(z).max(zero.eval(z)) + 1e-15);
            }
            if let Ok(c) = defuzz_centroid(dist) {
                prop_assert!((-1.0..=1.0).contains(&c));
            }
        }

        #[test]
        fn doubling_q_barely_moves_the_centroid(x in 0.0..=1.0f64) {
            let q = 401;
            let coarse = infer(&tiny_rule_base(q), &inputs(x)).unwrap();
            let fine = infer(&tiny_rule_base(2 * q - 1), &inputs(x)).unwrap();
            if let (Ok(a), Ok(b)) = (defuzz_centroid(&coarse["out"]), defuzz_centroid(&fine["out"])) {
                // Universe span 2.0.
                prop_assert!((a - b).abs() < 2.0 * 2.0 / q as f64);
            }
        }
    }
}
