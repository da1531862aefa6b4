//! The external oracle client against scripted in-process servers.

use std::io::{BufRead, BufReader, Write};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use drxp::fixtures;
use drxp::format::ModelDocument;
use drxp::oracle::{CancelToken, ExternalOracle, ExternalOracleConfig, GridOracle, Oracle, OracleQuery, Verdict};
use drxp::parallel::{run_batch, Decision, DecisionRule, Polarity, ProbeBatch};
use drxp::{Error, ExplanationProblem, FeatureSet, Norm, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Reply = Box<dyn FnMut(&Value, &mut dyn Write) + Send>;

fn config() -> ExternalOracleConfig {
    ExternalOracleConfig {
        check_timeout: Duration::from_secs(10),
        handshake_timeout: Duration::from_secs(5),
        ..ExternalOracleConfig::default()
    }
}

fn send(out: &mut dyn Write, msg: Value) {
    let _ = writeln!(out, "{msg}");
    let _ = out.flush();
}

/// Runs `reply` on every message after a successful handshake; every
/// received message is also forwarded to the returned channel.
fn connect_with(problem: ExplanationProblem, norm: Norm, mut reply: Reply) -> (ExternalOracle, mpsc::Receiver<Value>) {
    let (client_read, mut server_write) = std::io::pipe().unwrap();
    let (server_read, client_write) = std::io::pipe().unwrap();
    let (seen_tx, seen_rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(server_read).lines() {
            let Ok(line) = line else { break };
            let msg: Value = serde_json::from_str(&line).expect("client sends JSON lines");
            let _ = seen_tx.send(msg.clone());
            match msg["type"].as_str() {
                Some("init") => send(&mut server_write, json!({"type": "ready"})),
                Some("shutdown") => break,
                _ => reply(&msg, &mut server_write),
            }
        }
    });
    let oracle =
        ExternalOracle::connect(client_read, client_write, problem, norm, config(), "fake".into()).unwrap();
    (oracle, seen_rx)
}

/// A well-behaved server answering from a grid oracle on its own copy of
/// the problem.
fn honest(problem: ExplanationProblem, norm: Norm) -> Reply {
    let grid = GridOracle::new(problem);
    Box::new(move |msg, out| {
        if msg["type"] != "check" {
            return;
        }
        let fixed: FeatureSet = msg["fixed"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
        let query = OracleQuery::new(fixed, msg["epsilon"].as_f64().unwrap(), norm).unwrap();
        let reply = match grid.find_adv_ex(&query, &CancelToken::new()).unwrap() {
            Verdict::Robust => json!({"type": "result", "id": msg["id"], "status": "robust"}),
            Verdict::AdvFound(x) => json!({"type": "result", "id": msg["id"], "status": "adv", "witness": x.coords()}),
        };
        send(out, reply);
    })
}

#[test]
fn init_carries_the_problem() {
    let problem = fixtures::example7();
    let (_oracle, seen) = connect_with(problem.clone(), Norm::LInf, Box::new(|_, _| {}));
    let init = seen.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(init["type"], "init");
    assert_eq!(init["protocol"], 1);
    assert_eq!(init["norm"], "inf");
    assert_eq!(init["instance"]["point"], json!([1.0, 1.0, 1.0]));
    let doc: ModelDocument = serde_json::from_value(init["model"].clone()).unwrap();
    let decoded = doc.to_problem().unwrap();
    assert_eq!(decoded.num_features(), 3);
    let probe = Point(vec![0.5, 0.5, 0.5]);
    assert_eq!(decoded.classify(&probe).unwrap(), problem.problem().classify(&probe).unwrap());
}

#[test]
fn verdicts_match_the_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (problem, norm) in [(fixtures::example7(), Norm::L1), (fixtures::example6(), Norm::LInf)] {
        let reference = GridOracle::new(problem.clone());
        let (oracle, _) = connect_with(problem.clone(), norm, honest(problem.clone(), norm));
        let m = problem.num_features();
        for _ in 0..100 {
            let mask = rng.gen_range(0..1u64 << m);
            let eps = [0.5, 1.0, 1.5, 2.0][rng.gen_range(0..4)];
            let query = OracleQuery::new(FeatureSet::from_mask(mask), eps, norm).unwrap();
            let ours = oracle.find_adv_ex(&query, &CancelToken::new()).unwrap();
            let theirs = reference.find_adv_ex(&query, &CancelToken::new()).unwrap();
            assert_eq!(ours, theirs, "{query:?}");
        }
    }
}

#[test]
fn replies_are_routed_by_id() {
    // Hold every check until four are pending, then answer in reverse.
    let problem = fixtures::example7();
    let mut inner = honest(problem.clone(), Norm::L1);
    let mut held: Vec<Value> = Vec::new();
    let reply: Reply = Box::new(move |msg, out| {
        if msg["type"] != "check" {
            return;
        }
        held.push(msg.clone());
        if held.len() == 4 {
            for m in held.drain(..).rev() {
                inner(&m, out);
            }
        }
    });
    let (oracle, _) = connect_with(problem, Norm::L1, reply);
    let probes: Vec<OracleQuery> = [vec![], vec![1], vec![1, 2], vec![1, 2, 3]]
        .into_iter()
        .map(|f| OracleQuery::new(f.into_iter().collect(), 1.0, Norm::L1).unwrap())
        .collect();
    let batch = ProbeBatch { probes, rule: DecisionRule::BoundarySearch, polarity: Polarity::Robust, slots: 4 };
    let outcome = run_batch(&oracle, &batch).unwrap();
    // At epsilon 1 the prefixes {1,2} and {1,2,3} are the first robust ones.
    assert_eq!(outcome.decision, Decision::Boundary(2));
}

#[test]
fn cancellation_round_trip() {
    let (oracle, seen) = connect_with(fixtures::example7(), Norm::L1, Box::new(|msg, out| {
        if msg["type"] == "cancel" {
            send(out, json!({"type": "result", "id": msg["id"], "status": "cancelled"}));
        }
    }));
    let token = CancelToken::new();
    let trigger = token.clone();
    let started = Instant::now();
    thread::spawn(move || {
        thread::sleep(Duration::from_millis(100));
        trigger.cancel();
    });
    let query = OracleQuery::new(FeatureSet::from([1]), 1.0, Norm::L1).unwrap();
    assert_eq!(oracle.find_adv_ex(&query, &token), Err(Error::Cancelled));
    assert!(started.elapsed() < Duration::from_secs(1));
    let kinds: Vec<String> = std::iter::from_fn(|| seen.recv_timeout(Duration::from_secs(1)).ok())
        .map(|m| m["type"].as_str().unwrap().to_string())
        .take(3)
        .collect();
    assert_eq!(kinds, ["init", "check", "cancel"]);
}

#[test]
fn forged_witness_is_rejected() {
    let (oracle, _) = connect_with(fixtures::example7(), Norm::L1, Box::new(|msg, out| {
        // (1,1,1) is the instance itself, so it cannot change the class.
        send(out, json!({"type": "result", "id": msg["id"], "status": "adv", "witness": [1, 1, 1]}));
    }));
    let query = OracleQuery::new(FeatureSet::new(), 1.0, Norm::L1).unwrap();
    assert!(matches!(oracle.find_adv_ex(&query, &CancelToken::new()), Err(Error::OracleFailure(_))));
}

#[test]
fn malformed_result_is_an_oracle_failure() {
    let (oracle, _) = connect_with(fixtures::example7(), Norm::L1, Box::new(|msg, out| {
        send(out, json!({"type": "result", "id": msg["id"], "status": "maybe"}));
    }));
    let query = OracleQuery::new(FeatureSet::new(), 1.0, Norm::L1).unwrap();
    assert!(matches!(oracle.find_adv_ex(&query, &CancelToken::new()), Err(Error::OracleFailure(_))));
}

#[test]
fn norm_must_match_the_session() {
    let (oracle, _) = connect_with(fixtures::example7(), Norm::L1, Box::new(|_, _| {}));
    let query = OracleQuery::new(FeatureSet::new(), 1.0, Norm::L2).unwrap();
    assert!(matches!(oracle.find_adv_ex(&query, &CancelToken::new()), Err(Error::Unsupported(_))));
}

#[test]
fn check_timeout() {
    let (client_read, mut server_write) = std::io::pipe().unwrap();
    let (server_read, client_write) = std::io::pipe().unwrap();
    thread::spawn(move || {
        let mut lines = BufReader::new(server_read).lines();
        let _init = lines.next();
        send(&mut server_write, json!({"type": "ready"}));
        for _ in lines {}
    });
    let config = ExternalOracleConfig { check_timeout: Duration::from_millis(200), ..config() };
    let oracle =
        ExternalOracle::connect(client_read, client_write, fixtures::example7(), Norm::L1, config, "slow".into())
            .unwrap();
    let query = OracleQuery::new(FeatureSet::new(), 1.0, Norm::L1).unwrap();
    let err = oracle.find_adv_ex(&query, &CancelToken::new()).unwrap_err();
    assert!(matches!(err, Error::OracleFailure(ref m) if m.contains("timed out")), "{err}");
}

#[test]
fn rejected_init() {
    let script = r#"read line; echo '{"type":"error","msg":"unsupported model"}'"#;
    let err = ExternalOracle::spawn(script, fixtures::example7(), Norm::L1, config()).err().unwrap();
    assert!(matches!(err, Error::OracleFailure(ref m) if m.contains("unsupported model")), "{err}");
}

#[test]
fn process_exiting_mid_call() {
    let script = r#"read line; echo '{"type":"ready"}'; read line; exit 0"#;
    let oracle = ExternalOracle::spawn(script, fixtures::example7(), Norm::L1, config()).unwrap();
    let query = OracleQuery::new(FeatureSet::new(), 1.0, Norm::L1).unwrap();
    assert!(matches!(oracle.find_adv_ex(&query, &CancelToken::new()), Err(Error::OracleFailure(_))));
}

#[test]
fn missing_program() {
    let err = ExternalOracle::spawn("exit 3", fixtures::example7(), Norm::L1, config()).err().unwrap();
    assert!(matches!(err, Error::OracleFailure(_)), "{err}");
}
