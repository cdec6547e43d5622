#![allow(dead_code)]

use std::sync::Arc;

use corrbelief::mcmcp::ChoiceResponse;
use corrbelief::ElicitationPayload;
use corrbelief_session::plan::TrialKind;
use corrbelief_session::service::side_towards;
use corrbelief_session::{Clock, EventStore, MemoryStore, SessionService, Stage, StudyConfig, VirtualClock};

pub const GRID: [f64; 5] = [-0.9, -0.4, 0.0, 0.4, 0.9];

fn pairs(n: usize, rho: impl Fn(usize) -> Option<f64>) -> String {
    (0..n)
        .map(|i| {
            let r = rho(i).map_or(String::new(), |r| format!(r#","rho_pop":{r}"#));
            format!(r#"{{"id":"p{i}","label_x":"x{i}","label_y":"y{i}"{r}}}"#)
        })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn fixed_study() -> StudyConfig {
    StudyConfig::from_json(&format!(
        r#"{{"study_id":"fixed","study_kind":"FixedDatasets","seed":11,
            "treatments":["Line","Cone","HOP"],
            "variable_pairs":[{}],
            "rounds":[{{"pairs":["p0","p1","p2","p3","p4"],"treatment":"Scatter"}},
                      {{"pairs":["p5","p6","p7","p8","p9"]}}],
            "attention_checks":[{{"id":"a1","question":"Pick blue","answer":"blue"}}]}}"#,
        pairs(10, |i| Some(GRID[i % 5]))
    ))
    .unwrap()
}

pub fn congruence_study() -> StudyConfig {
    StudyConfig::from_json(&format!(
        r#"{{"study_id":"cong","study_kind":"CongruenceManipulated","seed":5,
            "treatments":["Line","Cone","HOP"],"variable_pairs":[{}]}}"#,
        pairs(4, |_| None)
    ))
    .unwrap()
}

pub fn comparison_study() -> StudyConfig {
    StudyConfig::from_json(&format!(
        r#"{{"study_id":"cmp","study_kind":"ElicitationComparison","seed":3,"mcmcp_trials":40,
            "treatments":["Scatter"],"variable_pairs":[{}]}}"#,
        pairs(3, |_| None)
    ))
    .unwrap()
}

pub fn service(configs: Vec<StudyConfig>) -> (SessionService, Arc<VirtualClock>, Arc<MemoryStore>) {
    let clock = Arc::new(VirtualClock::new(1_000_000));
    let store = Arc::new(MemoryStore::new());
    let s = SessionService::open(store.clone() as Arc<dyn EventStore>, clock.clone() as Arc<dyn Clock>, configs)
        .unwrap();
    (s, clock, store)
}

pub fn payload(mu: f64, half: f64) -> ElicitationPayload {
    ElicitationPayload { mu, b_lower: (mu - half).max(-1.0), b_upper: (mu + half).min(1.0) }
}

/// Completes every remaining trial, 20 s of virtual time per request.
pub fn finish(s: &SessionService, clock: &VirtualClock, id: &str, prior_mu: f64) {
    finish_timed(s, clock, id, prior_mu, 20_000)
}

/// Completes every remaining trial, spending `step_ms` of virtual time per request.
pub fn finish_timed(s: &SessionService, clock: &VirtualClock, id: &str, prior_mu: f64, step_ms: u64) {
    loop {
        let cur = s.current_trial(id).unwrap();
        let Some(t) = cur.trial else { break };
        clock.advance(id, step_ms);
        match (t.kind, t.stage) {
            (_, Stage::AwaitingPrior) => {
                s.submit_prior(id, &t.trial_id, payload(prior_mu, 0.2)).unwrap();
            }
            (_, Stage::AwaitingViewAck) => {
                s.acknowledge_view(id, &t.trial_id).unwrap();
            }
            (_, Stage::AwaitingPosterior) => {
                let target = t.dataset.as_ref().and_then(|d| d.overlay.mean()).unwrap_or(prior_mu);
                s.submit_posterior(id, &t.trial_id, payload(target, 0.1)).unwrap();
            }
            (TrialKind::Choice, Stage::Choosing) => {
                let view = t.choice.unwrap();
                let side = side_towards(&view, prior_mu);
                let r = ChoiceResponse { trial_index: view.trial_index, side, duration_ms: 900 };
                s.submit_choice(id, &t.trial_id, r).unwrap();
            }
            other => panic!("unexpected prompt {other:?}"),
        }
    }
}
