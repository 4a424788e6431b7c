use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tourplanner::sandbox::{save_sandbox, xian_sample};

const QUERY: &str = "I am looking for a 4-day trip from Wuhan to Xi'an, departing on Friday early morning and returning on Monday afternoon, with a budget of ¥5000. I'm interested in historical sites and museums.";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tourplanner"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        save_sandbox(&xian_sample(), dir.path().join("sandbox.json")).unwrap();
        std::fs::write(dir.path().join("query.txt"), QUERY).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn plan(&self, out: &str, extra: &[&str]) -> Output {
        let (q, sb, o) = (self.path("query.txt"), self.path("sandbox.json"), self.path(out));
        let mut args = vec!["plan", "--query-file", s(&q), "--sandbox", s(&sb), "--out", s(&o)];
        args.extend_from_slice(extra);
        run(&args)
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["validate"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_with_json() {
    let out = run(&["sandbox", "validate", "/nonexistent/sandbox.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("sandbox"));
}

#[test]
fn planned_itinerary_validates() {
    let f = Fixture::new();
    let rec = f.path("arbitration.json");
    let out = f.plan("itinerary.json", &["--record", s(&rec)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(f.path("itinerary.json.manifest.json").exists());
    assert!(rec.exists());

    let (it, sb) = (f.path("itinerary.json"), f.path("sandbox.json"));
    let out = run(&["validate", "--itinerary", s(&it), "--sandbox", s(&sb)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["hard"]["eta"], 1.0);

    let out = run(&["score", "--itinerary", s(&it), "--sandbox", s(&sb)]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["total"].as_f64().unwrap() >= 2.0);
}

#[test]
fn replay_reproduces_output_and_rejects_other_configs() {
    let f = Fixture::new();
    assert!(f.plan("a.json", &[]).status.success());
    let manifest = f.path("a.json.manifest.json");
    let out = f.plan("b.json", &["--replay", s(&manifest)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(f.path("a.json")).unwrap();
    let b = std::fs::read(f.path("b.json")).unwrap();
    assert_eq!(a, b);

    let cfg = f.path("config.json");
    std::fs::write(&cfg, r#"{"seed": 99}"#).unwrap();
    let out = f.plan("c.json", &["--replay", s(&manifest), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
    assert!(!f.path("c.json").exists());
}

#[test]
fn validate_rejects_a_broken_plan() {
    let f = Fixture::new();
    assert!(f.plan("it.json", &[]).status.success());
    let text = std::fs::read_to_string(f.path("it.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["days"][1]["plan"][0]["name"] = "Nowhere Tower".into();
    std::fs::write(f.path("broken.json"), doc.to_string()).unwrap();
    let (it, sb) = (f.path("broken.json"), f.path("sandbox.json"));
    let out = run(&["validate", "--itinerary", s(&it), "--sandbox", s(&sb)]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["hard"]["i_sandbox"], 0);
    assert!(doc["hard"]["eta"].as_f64().unwrap() < 1.0);
}

#[test]
fn sandbox_gen_round_trips_and_geo_clusters() {
    let f = Fixture::new();
    let out_path = f.path("synth.json");
    assert!(run(&["sandbox", "gen", "--seed", "3", "--out", s(&out_path)]).status.success());
    let out = run(&["sandbox", "validate", s(&out_path)]);
    assert!(out.status.success());
    let out = run(&["geo", "cluster", "--sandbox", s(&out_path), "--duration", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["labels"].as_array().unwrap().len(), doc["ids"].as_array().unwrap().len());
}

#[test]
fn gspo_eval_normalizes_rewards() {
    let f = Fixture::new();
    let batch = f.path("batch.json");
    let rollout = r#"{"logp_new": [-1.0, -2.0], "logp_old": [-1.0, -2.0]}"#;
    std::fs::write(&batch, format!(r#"{{"rewards": [1.0, 2.0, 3.0], "rollouts": [{rollout}, {rollout}, {rollout}]}}"#))
        .unwrap();
    let out = run(&["gspo", "eval", "--batch", s(&batch)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let adv: Vec<f64> = serde_json::from_value(doc["advantages"].clone()).unwrap();
    assert!(adv.iter().sum::<f64>().abs() < 1e-12);
    assert!(adv[0] < adv[2]);
}

#[test]
fn evaluate_writes_a_report() {
    let f = Fixture::new();
    let cases = f.path("cases");
    std::fs::create_dir(&cases).unwrap();
    let reference: serde_json::Value = serde_json::from_str(tourplanner::sandbox::XIAN_REFERENCE_JSON).unwrap();
    let case = serde_json::json!({"query": QUERY, "generated": reference, "reference": reference});
    std::fs::write(cases.join("001.json"), case.to_string()).unwrap();
    let (sb, out) = (f.path("sandbox.json"), f.path("report.json"));
    let res = run(&["evaluate", "--cases", s(&cases), "--sandbox", s(&sb), "--out", s(&out), "--judge"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["cases"], 1);
    assert_eq!(doc["feasibility_micro"], 1.0);
    assert!(doc["config_hash"].is_string());
}

#[test]
fn recall_report_counts_channels() {
    let f = Fixture::new();
    let truth = f.path("truth.json");
    let sandbox = xian_sample();
    let ids: Vec<&str> = sandbox.attractions().iter().take(2).map(|a| a.id.as_str()).collect();
    std::fs::write(&truth, serde_json::to_string(&ids).unwrap()).unwrap();
    let sb = f.path("sandbox.json");
    let out = run(&["recall", "report", "--query", QUERY, "--sandbox", s(&sb), "--truth", s(&truth)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pool = sandbox.attractions_in("Xi'an").count();
    assert_eq!(doc["semantic"].as_u64().unwrap() as usize, pool.min(12));
    let merged = doc["recall_rate"]["merged"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&merged));
}
