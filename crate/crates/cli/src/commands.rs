//! Subcommand implementations. Each writes its manifest before any output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use corrbelief::dataset::generate;
use corrbelief::metrics::{score_trial_with, KlDirection};
use corrbelief::{FitScore, Model};
use corrbelief_session::export::TrialRow;
use corrbelief_session::plan::TrialKind;
use corrbelief_session::service::trial_predictions;
use corrbelief_session::{
    Clock, EventStore, ExportBundle, MemoryStore, SessionService, SessionStatus, StudyConfig, VirtualClock,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fleet::{drive_session, SimulationConfig};
use crate::kde::{kde, linspace};
use crate::manifest::{RunManifest, RunSummary};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write(out: &Path, manifest: &mut RunManifest, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(out.join(name), contents).map_err(|e| CliError::Runtime(format!("{}: {e}", out.join(name).display())))?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRequest {
    pub id: String,
    pub rho_pop: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub datasets: Vec<DatasetRequest>,
}

impl Default for GenerateConfig {
    /// The fixed-dataset study grid: ρ ∈ {−0.9, −0.4, 0, 0.4, 0.9}, n = 100.
    fn default() -> Self {
        let datasets = [-0.9, -0.4, 0.0, 0.4, 0.9]
            .into_iter()
            .map(|rho| DatasetRequest { id: format!("rho{rho:+.1}_n100"), rho_pop: rho, n: 100 })
            .collect();
        GenerateConfig { datasets }
    }
}

/// Writes `<id>.csv` (x,y) and `<id>.json` (n, rho_pop, r_sample, points) per dataset.
pub fn cmd_generate(config: Option<&Path>, seed: u64, out: &Path) -> Result<RunManifest> {
    let spec: GenerateConfig = match config {
        Some(p) => read_json(p)?,
        None => GenerateConfig::default(),
    };
    let mut ids = BTreeSet::new();
    for d in &spec.datasets {
        if !ids.insert(&d.id) || d.id.contains(['/', '\\']) || d.id.is_empty() {
            return Err(CliError::Config(format!("bad or duplicate dataset id `{}`", d.id)));
        }
    }
    let datasets = spec
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| generate(d.rho_pop, d.n, seed.wrapping_add(i as u64)).map_err(|e| CliError::Config(format!("{}: {e}", d.id))))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = RunManifest::new("generate", config, seed, out);
    manifest.write(out)?;
    for (d, data) in spec.datasets.iter().zip(&datasets) {
        write(out, &mut manifest, &format!("{}.csv", d.id), data.to_csv())?;
        write(out, &mut manifest, &format!("{}.json", d.id), serde_json::to_string(data)? + "\n")?;
    }
    manifest.complete = true;
    manifest.write(out)?;
    Ok(manifest)
}

// ---------------------------------------------------------------- simulate

pub const BUNDLE_FILE: &str = "bundle.json";

/// Runs the fleet through an in-process session service and writes the export
/// bundle, the trial table and the fit-score table.
pub fn cmd_simulate(config_path: &Path, seed: u64, out: &Path, jobs: usize) -> Result<RunManifest> {
    let sim: SimulationConfig = read_json(config_path)?;
    sim.study.validate()?;
    sim.fleet.validate(&sim.study)?;
    let mut manifest = RunManifest::new("simulate", Some(config_path), seed, out);
    manifest.agents = Some(sim.fleet.clone());
    let bundle = simulate(&sim, seed, jobs)?;
    manifest.write(out)?;
    write_bundle(out, &mut manifest, &bundle)?;
    let states = bundle.states()?;
    manifest.summary = Some(summarize(&states));
    manifest.complete = true;
    manifest.write(out)?;
    Ok(manifest)
}

/// The simulation itself, without touching the filesystem.
pub fn simulate(sim: &SimulationConfig, seed: u64, jobs: usize) -> Result<ExportBundle> {
    sim.fleet.validate(&sim.study)?;
    let clock = Arc::new(VirtualClock::new(0));
    let store = Arc::new(MemoryStore::new());
    let service = SessionService::new(store as Arc<dyn EventStore>, clock.clone() as Arc<dyn Clock>);
    service.register_study(sim.study.clone())?;
    // Sessions are created in order so assignment does not depend on scheduling.
    let ids = (0..sim.fleet.sessions)
        .map(|i| Ok(service.create_session(&sim.study.study_id, &format!("agent-{i:05}"))?.progress.session_id))
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| {
        ids.par_iter()
            .enumerate()
            .try_for_each(|(i, id)| drive_session(&service, &clock, &sim.fleet, seed, i, id))
    })?;
    Ok(service.export(&sim.study.study_id)?)
}

fn write_bundle(out: &Path, manifest: &mut RunManifest, bundle: &ExportBundle) -> Result<()> {
    write(out, manifest, BUNDLE_FILE, serde_json::to_string(bundle)? + "\n")?;
    write(out, manifest, "trials.csv", &bundle.trials_csv)?;
    write(out, manifest, "sessions.jsonl", &bundle.sessions_jsonl)?;
    let states = bundle.states()?;
    let scores: Vec<(String, FitScore)> =
        states.iter().flat_map(|s| s.scores.iter().map(|f| (s.session_id.clone(), f.clone()))).collect();
    write(out, manifest, "scores.csv", scores_csv(&scores)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    session_id: &'a str,
    trial_id: &'a str,
    model: &'a str,
    mae: f64,
    kld: f64,
}

fn scores_csv(scores: &[(String, FitScore)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (session_id, f) in scores {
        w.serialize(ScoreRow { session_id, trial_id: &f.trial_id, model: f.model.as_str(), mae: f.mae, kld: f.kld })?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn summarize(states: &[corrbelief_session::SessionState]) -> RunSummary {
    let mut s = RunSummary { sessions: states.len(), ..Default::default() };
    for st in states {
        s.trials += st.trials.len();
        if !st.exclusion_flags.is_empty() {
            s.excluded_sessions += 1;
        }
        for f in &st.exclusion_flags {
            *s.exclusions.entry(format!("{f:?}")).or_default() += 1;
        }
    }
    s
}

/// Reads a bundle from a directory holding `bundle.json` or from the file itself
/// (for example a saved `GET /studies/{id}/export` response).
pub fn read_bundle(path: &Path) -> Result<ExportBundle> {
    let file: PathBuf = if path.is_dir() { path.join(BUNDLE_FILE) } else { path.to_path_buf() };
    read_json(&file)
}

// ---------------------------------------------------------------- score

/// Recomputes model predictions and fit scores for every completed update trial.
pub fn cmd_score(bundle_path: &Path, seed: u64, out: &Path, direction: KlDirection, jobs: usize) -> Result<RunManifest> {
    let bundle = read_bundle(bundle_path)?;
    let states = bundle.states()?;
    let config: &StudyConfig = &bundle.config;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let per_session: Vec<Vec<(String, FitScore)>> = pool.install(|| {
        states
            .par_iter()
            .map(|s| {
                let mut rows = Vec::new();
                for t in s.trials.iter().filter(|t| t.descriptor.kind == TrialKind::Update) {
                    let Some(post) = &t.posterior else { continue };
                    let preds = trial_predictions(config, t)?;
                    for f in score_trial_with(&t.descriptor.trial_id, post, &preds, direction)? {
                        rows.push((s.session_id.clone(), f));
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_>>()
    })?;
    let scores: Vec<_> = per_session.into_iter().flatten().collect();
    let mut manifest = RunManifest::new("score", Some(bundle_path), seed, out);
    manifest.write(out)?;
    write(out, &mut manifest, "scores.csv", scores_csv(&scores)?)?;
    manifest.summary = Some(summarize(&states));
    manifest.complete = true;
    manifest.write(out)?;
    Ok(manifest)
}

// ---------------------------------------------------------------- densities

pub const DENSITY_POINTS: usize = 201;

/// Per pair, KDE densities of elicited means (`<pair>_means.csv`, over [−1, 1])
/// and CI widths (`<pair>_cis.csv`, over [0, 2]), before and after the data.
/// Sessions with exclusion flags are left out unless `include_excluded`.
pub fn cmd_densities(bundle_path: &Path, seed: u64, out: &Path, include_excluded: bool) -> Result<RunManifest> {
    let bundle = read_bundle(bundle_path)?;
    if !bundle.sealed {
        return Err(CliError::Config("bundle contains unsealed sessions; densities need a sealed export".into()));
    }
    let rows: Vec<TrialRow> = bundle
        .rows()?
        .into_iter()
        .filter(|r| r.status == format!("{:?}", SessionStatus::Sealed))
        .filter(|r| include_excluded || r.exclusions.is_empty())
        .filter(|r| r.kind != "choice")
        .collect();
    let mut by_pair: BTreeMap<&str, Vec<&TrialRow>> = BTreeMap::new();
    for r in &rows {
        by_pair.entry(r.pair_id.as_str()).or_default().push(r);
    }
    let mut manifest = RunManifest::new("densities", Some(bundle_path), seed, out);
    manifest.write(out)?;
    let means_grid = linspace(-1.0, 1.0, DENSITY_POINTS);
    let widths_grid = linspace(0.0, 2.0, DENSITY_POINTS);
    for (pair, rs) in by_pair {
        let pick = |f: fn(&TrialRow) -> Option<f64>| rs.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
        let table = |grid: &[f64], pre: &[f64], post: &[f64], column: &str| -> Result<String> {
            let (dpre, dpost) = (kde(pre, grid), kde(post, grid));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([column, "pre_density", "post_density"])?;
            for i in 0..grid.len() {
                w.write_record([grid[i].to_string(), dpre[i].to_string(), dpost[i].to_string()])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)
                .map_err(|e| CliError::Runtime(e.to_string()))
        };
        let means = table(&means_grid, &pick(|r| r.pre_mu), &pick(|r| r.post_mu), "rho")?;
        let cis = table(&widths_grid, &pick(|r| r.pre_ci_width), &pick(|r| r.post_ci_width), "ci_width")?;
        write(out, &mut manifest, &format!("{pair}_means.csv"), means)?;
        write(out, &mut manifest, &format!("{pair}_cis.csv"), cis)?;
    }
    manifest.complete = true;
    manifest.write(out)?;
    Ok(manifest)
}

/// MAE-best model for each scored trial, in row order.
pub fn best_models(rows: &[TrialRow]) -> Vec<Model> {
    rows.iter()
        .filter_map(|r| {
            Model::ALL
                .into_iter()
                .filter_map(|m| r.mae(m).map(|v| (m, v)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(m, _)| m)
        })
        .collect()
}

// ---------------------------------------------------------------- serve

/// Serves the HTTP API for `configs`, persisting events under `data_dir`.
pub async fn serve(configs: Vec<StudyConfig>, data_dir: &Path, listen: &str) -> Result<()> {
    let store = Arc::new(corrbelief_session::FileStore::open(data_dir)?);
    let service = SessionService::open(store, Arc::new(corrbelief_session::SystemClock), configs)?;
    let app = corrbelief_session::http::router(Arc::new(service));
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|e| CliError::Runtime(format!("bind {listen}: {e}")))?;
    tracing::info!(address = %listener.local_addr()?, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn load_study(path: &Path, seed: Option<u64>) -> Result<StudyConfig> {
    let mut config: StudyConfig = read_json(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}
