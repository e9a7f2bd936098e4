use std::collections::BTreeSet;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use forensica_core::config::GenConfig;
use forensica_core::generate::generate;
use forensica_core::geom::{Dir, Facing};
use forensica_core::rng::WorldSeed;
use forensica_core::session::sealed_keys_in;
use forensica_core::tiles::Terrain;
use forensica_core::wire::{Evidence, Game, GroundTruth};
use forensica_service::{router, AppState, Hub, DEFAULT_TTL};
use futures::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

fn app() -> (AppState, Router) {
    let hub = Hub::new(GenConfig::default(), DEFAULT_TTL);
    (hub.clone(), router(hub))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() })
}

async fn create(app: &Router, body: Value) -> Value {
    let (s, v) = call(app, "POST", "/session", Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v
}

async fn cmd(app: &Router, id: &str, c: Value) -> (StatusCode, Value) {
    call(app, "POST", &format!("/session/{id}/cmd"), Some(c)).await
}

fn assert_sealed(v: &Value) {
    assert!(sealed_keys_in(v).is_empty(), "{:?}", sealed_keys_in(v));
    let text = v.to_string();
    assert!(!text.contains("fate"));
    assert!(!text.contains("crew-"));
}

#[tokio::test]
async fn same_seed_gives_identical_initial_views() {
    let (_, app) = app();
    for game in ["station", "village"] {
        let a = create(&app, json!({ "game": game, "seed": 7 })).await;
        let b = create(&app, json!({ "game": game, "seed": "7" })).await;
        assert_ne!(a["id"], b["id"]);
        assert_eq!(a["view"], b["view"]);
        assert_eq!(a["seed"], "7");
    }
}

#[tokio::test]
async fn create_advertises_expiry_and_hides_answers() {
    let (_, app) = app();
    let v = create(&app, json!({ "game": "station", "seed": 3 })).await;
    assert_eq!(v["ttl_seconds"], DEFAULT_TTL.as_secs());
    assert!(v["expires_at"].as_u64().unwrap() > 1_600_000_000);
    assert_sealed(&v);
}

#[tokio::test]
async fn missing_seed_is_drawn_and_reported() {
    let (_, app) = app();
    let v = create(&app, json!({ "game": "village" })).await;
    let seed: u64 = v["seed"].as_str().unwrap().parse().unwrap();
    let again = create(&app, json!({ "game": "village", "seed": seed.to_string() })).await;
    assert_eq!(v["view"], again["view"]);
}

#[tokio::test]
async fn hundred_concurrent_creates_are_independent() {
    let (hub, app) = app();
    let tasks: Vec<_> = (0..100u64)
        .map(|i| {
            let app = app.clone();
            tokio::spawn(async move {
                let game = if i % 2 == 0 { "station" } else { "village" };
                create(&app, json!({ "game": game, "seed": i })).await
            })
        })
        .collect();
    let mut ids = BTreeSet::new();
    for t in tasks {
        let v = t.await.unwrap();
        ids.insert(v["id"].as_str().unwrap().to_string());
    }
    assert_eq!(ids.len(), 100);
    assert_eq!(hub.len(), 100);
    let first = ids.iter().next().unwrap().clone();
    let (_, moved) = cmd(&app, &first, json!({ "cmd": "face", "dx": 0, "dy": 1 })).await;
    let (_, other) = cmd(&app, ids.iter().nth(1).unwrap(), json!({ "cmd": "sync" })).await;
    assert!(moved.is_object());
    assert_eq!(other["view"]["facing"].as_object().map(|_| ()), Some(()));
}

#[tokio::test]
async fn wall_bump_has_empty_diff_and_text() {
    let (_, app) = app();
    let bundle = generate(Game::Station, WorldSeed(7), &GenConfig::default()).unwrap();
    let spawn = bundle.world.spawn;
    let dir = Dir::ALL
        .into_iter()
        .find(|d| {
            let (dx, dy) = d.delta();
            bundle.world.terrain(spawn.offset(dx, dy)) == Terrain::Wall
        })
        .expect("the entrance door sits in a wall");
    let v = create(&app, json!({ "game": "station", "seed": 7 })).await;
    let id = v["id"].as_str().unwrap();
    let (s, r) = cmd(&app, id, json!({ "cmd": "move", "dir": dir })).await;
    assert_eq!(s, StatusCode::OK);
    assert!(r.get("diff").is_none(), "{r}");
    assert_eq!(r["narration"][0]["kind"], "bump");
    assert!(!r["narration"][0]["text"].as_str().unwrap().is_empty());
}

#[tokio::test]
async fn read_terminal_and_submit_report() {
    let (_, app) = app();
    let bundle = generate(Game::Station, WorldSeed(9), &GenConfig::default()).unwrap();
    let Evidence::Station(ev) = &bundle.evidence else { unreachable!() };
    let t = ev.terminals.last().unwrap();
    let Some(GroundTruth::Station(truth)) = &bundle.ground_truth else { unreachable!() };

    let fresh = create(&app, json!({ "game": "station", "seed": 9 })).await;
    let far = cmd(&app, fresh["id"].as_str().unwrap(), json!({ "cmd": "read", "x": t.position.x, "y": t.position.y })).await;
    assert_eq!(far.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(far.1["error"], "out_of_reach");

    let resume = json!({ "player": t.position, "facing": Facing { dx: 1, dy: 0 }, "discovered": [], "read_terminals": [], "moves": 0 });
    let v = create(&app, json!({ "game": "station", "seed": 9, "resume": resume })).await;
    let id = v["id"].as_str().unwrap();
    let (s, r) = cmd(&app, id, json!({ "cmd": "read", "x": t.position.x, "y": t.position.y })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["message"]["timestamp"], t.message.timestamp.as_str());
    assert_eq!(r["message"]["sender_name"], t.message.sender_name.as_str());
    assert_sealed(&r);

    let (s, r) = cmd(&app, id, json!({ "cmd": "report", "entries": {} })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["result"]["score"], 0);
    assert_eq!(r["result"]["total"], truth.crew.len());
    let names: BTreeSet<&str> = r["result"]["reveal"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, truth.crew.iter().map(|c| c.name.as_str()).collect());

    let (s, r) = cmd(&app, id, json!({ "cmd": "report", "entries": {} })).await;
    assert_eq!(s, StatusCode::CONFLICT, "{r}");
    assert_eq!(r["error"], "illegal_state");
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let (_, app) = app();
    let (s, _) = cmd(&app, "00000000-0000-0000-0000-000000000000", json!({ "cmd": "sync" })).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = cmd(&app, "not-a-uuid", json!({ "cmd": "sync" })).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let v = create(&app, json!({ "game": "station", "seed": 1 })).await;
    let id = v["id"].as_str().unwrap();
    let (s, _) = cmd(&app, id, json!({ "cmd": "teleport" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, r) = cmd(&app, id, json!({ "cmd": "inspect", "x": 0, "y": 0 })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r["error"], "not_visible");
    let (s, _) = cmd(&app, id, json!({ "cmd": "report", "entries": { "body-99": { "name": "x", "cause": "fire" } } })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/session", Some(json!({ "game": "moon" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/session", Some(json!({ "game": "village", "seed": "zz" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn export_is_sealed_and_resumable() {
    let (_, app) = app();
    let v = create(&app, json!({ "game": "station", "seed": 5 })).await;
    let id = v["id"].as_str().unwrap();
    for d in ["east", "east", "south"] {
        cmd(&app, id, json!({ "cmd": "move", "dir": d })).await;
    }
    let (s, exp) = call(&app, "GET", &format!("/session/{id}/export"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(exp["world"].get("ground_truth").is_none());
    let world_bytes = serde_json::to_vec(&exp["world"]).unwrap();
    assert!(forensica_core::wire::parse_world(&world_bytes).is_ok());

    let (_, before) = cmd(&app, id, json!({ "cmd": "sync" })).await;
    let resumed = create(&app, json!({ "game": "station", "seed": exp["seed"], "resume": exp["progress"] })).await;
    assert_eq!(resumed["view"], before["view"]);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let hub = Hub::new(GenConfig::default(), Duration::from_millis(150));
    let app = router(hub.clone());
    let v = create(&app, json!({ "game": "village", "seed": 2 })).await;
    let id = v["id"].as_str().unwrap();
    assert_eq!(v["ttl_seconds"], 0);
    assert_eq!(cmd(&app, id, json!({ "cmd": "sync" })).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(300)).await;
    assert_eq!(cmd(&app, id, json!({ "cmd": "sync" })).await.0, StatusCode::NOT_FOUND);

    let v = create(&app, json!({ "game": "village", "seed": 2 })).await;
    assert_eq!(hub.len(), 1);
    tokio::time::sleep(Duration::from_millis(300)).await;
    assert_eq!(hub.sweep(), 1);
    assert!(hub.is_empty());
    let _ = v;
}

#[tokio::test]
async fn concurrent_commands_on_one_session_are_serialized() {
    let (_, app) = app();
    let v = create(&app, json!({ "game": "village", "seed": 8 })).await;
    let id = v["id"].as_str().unwrap().to_string();
    let dirs = ["south", "east", "south", "west", "north", "east"];
    let tasks: Vec<_> = (0..60)
        .map(|i| {
            let (app, id) = (app.clone(), id.clone());
            tokio::spawn(async move { cmd(&app, &id, json!({ "cmd": "move", "dir": dirs[i % dirs.len()] })).await })
        })
        .collect();
    let mut moved = 0;
    for t in tasks {
        let (s, r) = t.await.unwrap();
        assert_eq!(s, StatusCode::OK);
        if r["diff"].get("player").is_some() {
            moved += 1;
        }
    }
    let (_, exp) = call(&app, "GET", &format!("/session/{id}/export"), None).await;
    assert_eq!(exp["progress"]["moves"], moved);
}

#[tokio::test]
async fn health_reports_ok() {
    let (_, app) = app();
    let (s, v) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn live_channel_carries_diffs_in_order() {
    let hub = Hub::new(GenConfig::default(), DEFAULT_TTL);
    let app = router(hub);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let served = app.clone();
    tokio::spawn(async move { axum::serve(listener, served).await.unwrap() });

    let v = create(&app, json!({ "game": "station", "seed": 4 })).await;
    let id = v["id"].as_str().unwrap();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session/{id}/live")).await.unwrap();

    let next = |m: Option<Result<Message, _>>| -> Value {
        match m.unwrap().unwrap() {
            Message::Text(t) => serde_json::from_str(&t).unwrap(),
            other => panic!("unexpected frame {other:?}"),
        }
    };
    let hello = next(ws.next().await);
    assert_eq!(hello["ok"]["view"], v["view"]);

    let script = [json!({ "cmd": "face", "dx": 0, "dy": 1 }), json!({ "cmd": "face", "dx": -1, "dy": 0 }), json!({ "cmd": "face", "dx": 0, "dy": -1 })];
    for c in &script {
        ws.send(Message::Text(c.to_string().into())).await.unwrap();
    }
    for c in &script {
        let r = next(ws.next().await);
        assert_eq!(r["ok"]["diff"]["facing"]["dx"], c["dx"]);
        assert_sealed(&r);
    }
    ws.send(Message::Text("{\"cmd\":\"dance\"}".into())).await.unwrap();
    let r = next(ws.next().await);
    assert_eq!(r["status"], 400);
    ws.send(Message::Text(json!({ "cmd": "sync" }).to_string().into())).await.unwrap();
    let r = next(ws.next().await);
    assert_eq!(r["ok"]["view"]["facing"], json!({ "dx": 0, "dy": -1 }));

    let missing = tokio_tungstenite::connect_async(format!("ws://{addr}/session/00000000-0000-0000-0000-000000000000/live")).await;
    assert!(missing.is_err());
}
