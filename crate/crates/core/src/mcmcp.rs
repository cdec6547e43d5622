//! Markov chain Monte Carlo with people.
//!
//! A chain alternates between offering two correlations and recording which
//! one the responder picked. The picked value becomes the next state, and the
//! next proposal is drawn around it. When the responder chooses by the Luce
//! (Barker) rule on a belief density, the chain's stationary distribution is
//! that belief.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bayes::empirical_quantile;
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_TRIALS: usize = 100;
pub const INITIAL_WIDTH: f64 = 0.3;
pub const WIDTH_MIN: f64 = 0.01;
pub const WIDTH_MAX: f64 = 1.0;
/// Acceptance rate the width adaptation steers toward.
pub const TARGET_ACCEPTANCE: f64 = 0.44;
pub const ADAPT_EVERY: usize = 10;
/// Width is multiplied by `exp(±ADAPT_STEP)` at each adaptation.
pub const ADAPT_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresentationOrder {
    CurrentLeft,
    CurrentRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    Current,
    Proposal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Two options offered on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceTrial {
    pub option_current: f64,
    pub option_proposal: f64,
    pub trial_index: usize,
    pub presentation_order: PresentationOrder,
}

/// What the client sees: options by screen side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialView {
    pub trial_index: usize,
    pub left_rho: f64,
    pub right_rho: f64,
}

/// A client's answer to a [`TrialView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceResponse {
    pub trial_index: usize,
    pub side: Side,
    pub duration_ms: u64,
}

impl ChoiceTrial {
    pub fn left_rho(&self) -> f64 {
        match self.presentation_order {
            PresentationOrder::CurrentLeft => self.option_current,
            PresentationOrder::CurrentRight => self.option_proposal,
        }
    }

    pub fn right_rho(&self) -> f64 {
        match self.presentation_order {
            PresentationOrder::CurrentLeft => self.option_proposal,
            PresentationOrder::CurrentRight => self.option_current,
        }
    }

    pub fn view(&self) -> TrialView {
        TrialView { trial_index: self.trial_index, left_rho: self.left_rho(), right_rho: self.right_rho() }
    }

    pub fn choice_for_side(&self, side: Side) -> Choice {
        match (self.presentation_order, side) {
            (PresentationOrder::CurrentLeft, Side::Left) | (PresentationOrder::CurrentRight, Side::Right) => Choice::Current,
            _ => Choice::Proposal,
        }
    }

    pub fn side_for_choice(&self, choice: Choice) -> Side {
        match (self.presentation_order, choice) {
            (PresentationOrder::CurrentLeft, Choice::Current) | (PresentationOrder::CurrentRight, Choice::Proposal) => Side::Left,
            _ => Side::Right,
        }
    }

    pub fn value_of(&self, choice: Choice) -> f64 {
        match choice {
            Choice::Current => self.option_current,
            Choice::Proposal => self.option_proposal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Next(ChoiceTrial),
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcpChain {
    seed: u64,
    states: Vec<f64>,
    choices: Vec<Choice>,
    proposal_width: f64,
    width_history: Vec<f64>,
    accept_count: usize,
    proposal_count: usize,
    window_accepts: usize,
    window_proposals: usize,
    target_trials: usize,
    pending: Option<ChoiceTrial>,
}

impl McmcpChain {
    /// Opens a chain; the first trial pits a positive against a negative
    /// correlation.
    pub fn start(seed: u64, target_trials: usize) -> Result<(Self, ChoiceTrial)> {
        if target_trials < 2 {
            return Err(Error::Chain(format!("target_trials must be >= 2, got {target_trials}")));
        }
        let mut rng = trial_rng(seed, 0);
        // (0, 1] and [-1, 0)
        let positive = 1.0 - rng.random::<f64>();
        let negative = rng.random::<f64>() - 1.0;
        let trial = ChoiceTrial {
            option_current: positive,
            option_proposal: negative,
            trial_index: 0,
            presentation_order: random_order(&mut rng),
        };
        let chain = Self {
            seed,
            states: Vec::with_capacity(target_trials),
            choices: Vec::with_capacity(target_trials),
            proposal_width: INITIAL_WIDTH,
            width_history: vec![INITIAL_WIDTH],
            accept_count: 0,
            proposal_count: 0,
            window_accepts: 0,
            window_proposals: 0,
            target_trials,
            pending: Some(trial),
        };
        Ok((chain, trial))
    }

    /// Rebuilds a chain from its seed and the sequence of choices made.
    pub fn replay(seed: u64, target_trials: usize, choices: &[Choice]) -> Result<Self> {
        let (mut chain, mut trial) = Self::start(seed, target_trials)?;
        for (i, &c) in choices.iter().enumerate() {
            match chain.record_choice(&trial, c)? {
                Step::Next(t) => trial = t,
                Step::Done if i + 1 == choices.len() => {}
                Step::Done => return Err(Error::Chain("choice log longer than the chain".into())),
            }
        }
        Ok(chain)
    }

    /// Appends the chosen value and offers the next pair, or finishes.
    pub fn record_choice(&mut self, trial: &ChoiceTrial, chosen: Choice) -> Result<Step> {
        let pending = self.pending.ok_or_else(|| Error::Chain("chain is complete".into()))?;
        if pending != *trial {
            return Err(Error::Chain(format!(
                "stale or mismatched trial {} (expecting {})",
                trial.trial_index, pending.trial_index
            )));
        }
        let value = trial.value_of(chosen);
        if trial.trial_index > 0 {
            self.proposal_count += 1;
            self.window_proposals += 1;
            if chosen == Choice::Proposal {
                self.accept_count += 1;
                self.window_accepts += 1;
            }
        }
        self.states.push(value);
        self.choices.push(chosen);
        if self.states.len().is_multiple_of(ADAPT_EVERY) {
            self.adapt();
        }
        if self.states.len() >= self.target_trials {
            self.pending = None;
            return Ok(Step::Done);
        }
        let next = self.propose(value);
        self.pending = Some(next);
        Ok(Step::Next(next))
    }

    fn adapt(&mut self) {
        if self.window_proposals == 0 {
            return;
        }
        let rate = self.window_accepts as f64 / self.window_proposals as f64;
        let factor = if rate > TARGET_ACCEPTANCE {
            ADAPT_STEP.exp()
        } else if rate < TARGET_ACCEPTANCE {
            (-ADAPT_STEP).exp()
        } else {
            1.0
        };
        self.proposal_width = (self.proposal_width * factor).clamp(WIDTH_MIN, WIDTH_MAX);
        self.width_history.push(self.proposal_width);
        self.window_accepts = 0;
        self.window_proposals = 0;
    }

    fn propose(&self, current: f64) -> ChoiceTrial {
        let index = self.states.len();
        let mut rng = trial_rng(self.seed, index as u64);
        // Reflecting at ±1 keeps the proposal kernel symmetric, so Luce
        // choices leave the belief density stationary. Redrawing out-of-range
        // values instead would weight the chain by the in-range mass of the
        // proposal and thin out the edges.
        let proposal = loop {
            let z: f64 = rng.sample(StandardNormal);
            let candidate = reflect(current + self.proposal_width * z);
            if candidate != current {
                break candidate;
            }
        };
        ChoiceTrial {
            option_current: current,
            option_proposal: proposal,
            trial_index: index,
            presentation_order: random_order(&mut rng),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub fn proposal_width(&self) -> f64 {
        self.proposal_width
    }

    pub fn width_history(&self) -> &[f64] {
        &self.width_history
    }

    pub fn accept_count(&self) -> usize {
        self.accept_count
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposal_count > 0).then(|| self.accept_count as f64 / self.proposal_count as f64)
    }

    /// Number of completed trials.
    pub fn trial_index(&self) -> usize {
        self.states.len()
    }

    pub fn target_trials(&self) -> usize {
        self.target_trials
    }

    pub fn pending(&self) -> Option<&ChoiceTrial> {
        self.pending.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.pending.is_none()
    }

    /// One JSON object per state: `{"trial_index":i,"rho":x}`.
    pub fn states_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{{\"trial_index\":{i},\"rho\":{s}}}\n"));
        }
        out
    }

    pub fn summarize(&self, burn_in: usize) -> Result<ChainSummary> {
        summarize_states(&self.states, burn_in)
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_order<R: Rng>(rng: &mut R) -> PresentationOrder {
    if rng.random::<bool>() {
        PresentationOrder::CurrentLeft
    } else {
        PresentationOrder::CurrentRight
    }
}

fn reflect(mut x: f64) -> f64 {
    while !(-1.0..=1.0).contains(&x) {
        x = if x > 1.0 { 2.0 - x } else { -2.0 - x };
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub n_states: usize,
}

/// Mean and 2.5% / 97.5% empirical quantiles of `states[burn_in..]`.
pub fn summarize_states(states: &[f64], burn_in: usize) -> Result<ChainSummary> {
    if states.len() < burn_in + 2 {
        return Err(Error::Chain(format!(
            "burn-in {burn_in} leaves fewer than 2 of {} states",
            states.len()
        )));
    }
    let kept = &states[burn_in..];
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;
    let mut sorted = kept.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite states"));
    Ok(ChainSummary {
        mean,
        ci_lower: empirical_quantile(&sorted, 0.025),
        ci_upper: empirical_quantile(&sorted, 0.975),
        n_states: kept.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InvalidFlag {
    Streak,
    Alternation,
    FastResponse,
}

/// Thresholds for flagging careless forced-choice responding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InvalidResponseRules {
    /// Consecutive picks of the same side.
    pub streak: usize,
    /// Consecutive picks that strictly alternate sides.
    pub alternation: usize,
    pub min_median_ms: u64,
}

impl Default for InvalidResponseRules {
    fn default() -> Self {
        Self { streak: 20, alternation: 20, min_median_ms: 300 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedResponse {
    pub side: Side,
    pub duration_ms: u64,
}

/// Flags raised by one chain's response log, in a fixed order.
pub fn detect_invalid(responses: &[TimedResponse], rules: &InvalidResponseRules) -> Vec<InvalidFlag> {
    let mut flags = Vec::new();
    if responses.is_empty() {
        return flags;
    }
    let (mut streak, mut best_streak) = (1usize, 1usize);
    let (mut alt, mut best_alt) = (1usize, 1usize);
    for w in responses.windows(2) {
        if w[0].side == w[1].side {
            streak += 1;
            alt = 1;
        } else {
            alt += 1;
            streak = 1;
        }
        best_streak = best_streak.max(streak);
        best_alt = best_alt.max(alt);
    }
    if best_streak >= rules.streak {
        flags.push(InvalidFlag::Streak);
    }
    if best_alt >= rules.alternation {
        flags.push(InvalidFlag::Alternation);
    }
    let mut durations: Vec<u64> = responses.iter().map(|r| r.duration_ms).collect();
    durations.sort_unstable();
    let mid = durations.len() / 2;
    let median = if durations.len().is_multiple_of(2) {
        (durations[mid - 1] + durations[mid]) as f64 / 2.0
    } else {
        durations[mid] as f64
    };
    if median < rules.min_median_ms as f64 {
        flags.push(InvalidFlag::FastResponse);
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_trial_offers_both_signs() {
        for seed in 0..200 {
            let (_, t) = McmcpChain::start(seed, 100).unwrap();
            assert!(t.option_current > 0.0 && t.option_current <= 1.0);
            assert!(t.option_proposal < 0.0 && t.option_proposal >= -1.0);
            assert_eq!(t.trial_index, 0);
        }
        assert_eq!(McmcpChain::start(5, 100).unwrap(), McmcpChain::start(5, 100).unwrap());
        assert!(McmcpChain::start(5, 1).is_err());
    }

    #[test]
    fn completes_after_exactly_target_trials() {
        let (mut chain, mut trial) = McmcpChain::start(1, 100).unwrap();
        let mut recorded = 0;
        loop {
            recorded += 1;
            match chain.record_choice(&trial, Choice::Proposal).unwrap() {
                Step::Next(t) => trial = t,
                Step::Done => break,
            }
        }
        assert_eq!(recorded, 100);
        assert_eq!(chain.states().len(), 100);
        assert!(chain.is_done());
        assert!(chain.record_choice(&trial, Choice::Current).is_err());
    }

    #[test]
    fn always_current_gives_constant_chain_and_shrinking_width() {
        let (mut chain, mut trial) = McmcpChain::start(3, 400).unwrap();
        while let Step::Next(t) = chain.record_choice(&trial, Choice::Current).unwrap() {
            trial = t;
        }
        let first = chain.states()[0];
        assert!(chain.states().iter().all(|s| *s == first));
        assert_eq!(chain.proposal_width(), WIDTH_MIN);
        assert!(chain.width_history().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn always_proposal_grows_width() {
        let (mut chain, mut trial) = McmcpChain::start(4, 400).unwrap();
        while let Step::Next(t) = chain.record_choice(&trial, Choice::Proposal).unwrap() {
            assert!((-1.0..=1.0).contains(&t.option_proposal));
            trial = t;
        }
        assert_eq!(chain.proposal_width(), WIDTH_MAX);
        assert!(chain.states().iter().all(|s| (-1.0..=1.0).contains(s)));
    }

    #[test]
    fn stale_trial_rejected() {
        let (mut chain, first) = McmcpChain::start(9, 10).unwrap();
        let Step::Next(second) = chain.record_choice(&first, Choice::Current).unwrap() else { panic!() };
        assert!(chain.record_choice(&first, Choice::Current).is_err());
        let mut forged = second;
        forged.option_proposal = 0.123;
        assert!(chain.record_choice(&forged, Choice::Current).is_err());
        assert!(chain.record_choice(&second, Choice::Current).is_ok());
    }

    #[test]
    fn replay_reproduces_chain() {
        let (mut chain, mut trial) = McmcpChain::start(77, 50).unwrap();
        let mut i = 0;
        loop {
            let c = if i % 3 == 0 { Choice::Current } else { Choice::Proposal };
            i += 1;
            match chain.record_choice(&trial, c).unwrap() {
                Step::Next(t) => trial = t,
                Step::Done => break,
            }
        }
        let replayed = McmcpChain::replay(77, 50, chain.choices()).unwrap();
        assert_eq!(replayed, chain);
        assert_eq!(serde_json::to_string(&replayed).unwrap(), serde_json::to_string(&chain).unwrap());
    }

    #[test]
    fn sides_map_to_choices() {
        let (_, t) = McmcpChain::start(2, 10).unwrap();
        for side in [Side::Left, Side::Right] {
            assert_eq!(t.side_for_choice(t.choice_for_side(side)), side);
        }
        let v = t.view();
        assert_eq!(t.value_of(t.choice_for_side(Side::Left)), v.left_rho);
        assert_eq!(t.value_of(t.choice_for_side(Side::Right)), v.right_rho);
    }

    #[test]
    fn reflection_stays_in_range() {
        assert_eq!(reflect(1.25), 0.75);
        assert_eq!(reflect(-1.5), -0.5);
        assert!((-1.0..=1.0).contains(&reflect(7.3)));
    }

    #[test]
    fn summary_examples() {
        let s = summarize_states(&[0.4; 30], 0).unwrap();
        assert!((s.mean - 0.4).abs() < 1e-12);
        assert_eq!((s.ci_lower, s.ci_upper), (0.4, 0.4));
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let s = summarize_states(&alt, 0).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!((s.ci_lower, s.ci_upper), (-1.0, 1.0));
        assert!(summarize_states(&[0.1, 0.2, 0.3], 2).is_err());
        assert_eq!(summarize_states(&[0.1, 0.2, 0.3], 1).unwrap().n_states, 2);
    }

    fn responses(sides: &[Side], ms: u64) -> Vec<TimedResponse> {
        sides.iter().map(|&side| TimedResponse { side, duration_ms: ms }).collect()
    }

    #[test]
    fn detectors() {
        let rules = InvalidResponseRules::default();
        let streak = responses(&[Side::Left; 25], 1500);
        assert_eq!(detect_invalid(&streak, &rules), vec![InvalidFlag::Streak]);

        let alternating: Vec<Side> = (0..30).map(|i| if i % 2 == 0 { Side::Left } else { Side::Right }).collect();
        assert_eq!(detect_invalid(&responses(&alternating, 1500), &rules), vec![InvalidFlag::Alternation]);

        // runs of length 1..3 in both patterns
        let varied: Vec<Side> = (0..100)
            .map(|i| if (i * 7 + i / 3) % 5 < 2 { Side::Left } else { Side::Right })
            .collect();
        assert!(detect_invalid(&responses(&varied, 2000), &rules).is_empty());
        assert_eq!(detect_invalid(&responses(&varied, 150), &rules), vec![InvalidFlag::FastResponse]);
        assert!(detect_invalid(&[], &rules).is_empty());
    }
}
