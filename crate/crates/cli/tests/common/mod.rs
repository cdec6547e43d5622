#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub fn pairs(n: usize, rho: impl Fn(usize) -> Option<f64>) -> Vec<Value> {
    (0..n)
        .map(|i| {
            let mut p = json!({"id": format!("p{i}"), "label_x": format!("x{i}"), "label_y": format!("y{i}")});
            if let Some(r) = rho(i) {
                p["rho_pop"] = json!(r);
            }
            p
        })
        .collect()
}

pub fn congruence_sim(sessions: usize, agent: Value) -> Value {
    json!({
        "study_id": "cong", "study_kind": "CongruenceManipulated", "seed": 5,
        "treatments": ["Line", "Cone", "HOP"],
        "variable_pairs": pairs(4, |_| None),
        "fleet": {"sessions": sessions, "agents": [agent]}
    })
}

pub fn fixed_sim(sessions: usize, agent: Value) -> Value {
    let grid = [-0.9, -0.4, 0.0, 0.4, 0.9];
    json!({
        "study_id": "fixed", "study_kind": "FixedDatasets", "seed": 11,
        "treatments": ["Line", "Cone", "HOP"],
        "variable_pairs": pairs(10, |i| Some(grid[i % 5])),
        "rounds": [{"pairs": ["p0","p1","p2","p3","p4"], "treatment": "Scatter"},
                   {"pairs": ["p5","p6","p7","p8","p9"]}],
        "attention_checks": [{"id": "a1", "question": "Type blue", "answer": "blue"}],
        "fleet": {"sessions": sessions, "agents": [agent]}
    })
}

pub fn comparison_sim(sessions: usize) -> Value {
    json!({
        "study_id": "cmp", "study_kind": "ElicitationComparison", "seed": 3, "mcmcp_trials": 100,
        "treatments": ["Scatter"], "variable_pairs": pairs(3, |_| None),
        "fleet": {"sessions": sessions, "agents": [{"kind": "LuceResponder"}], "choice_ms": 1200}
    })
}

pub fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

pub fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}
