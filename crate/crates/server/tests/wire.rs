use std::sync::Arc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storehouse_core::config::default_config;
use storehouse_core::Coord;
use storehouse_server::{digest_in_process, replay_check, Client, ClientError, ErrorCode, ReplayError, Server};

fn server() -> (Server, Arc<storehouse_core::WarehouseConfig>) {
    let cfg = Arc::new(default_config());
    (Server::spawn("127.0.0.1:0", cfg.clone()).unwrap(), cfg)
}

fn actions(seed: u64, n: usize) -> Vec<Coord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Coord::new(rng.gen_range(0..6), rng.gen_range(0..6))).collect()
}

#[test]
fn spec_and_state_machine() {
    let (srv, _) = server();
    let mut c = Client::connect(srv.addr()).unwrap();
    let spec = c.spec().unwrap();
    assert_eq!((spec.r, spec.c, spec.d, spec.actions), (6, 6, 8, 36));
    match c.step(2, 3) {
        Err(ClientError::Server(e)) => assert_eq!(e.code, ErrorCode::NoEpisode),
        other => panic!("expected no-episode, got {other:?}"),
    }
    assert!(c.raw("not json").unwrap().contains("malformed"));
    let first = c.reset(Some(1)).unwrap();
    assert_eq!(first.observation.len(), 6);
    let s = c.step(2, 3).unwrap();
    assert!((-1.0..=0.0).contains(&s.reward));
    assert_eq!(s.info.valid_action_mask.len(), 36);
    c.close().unwrap();
}

#[test]
fn wire_matches_in_process() {
    let (srv, cfg) = server();
    for seed in 0..3 {
        let acts = actions(seed, 300);
        let digest = replay_check(cfg.clone(), srv.addr(), seed, &acts).unwrap();
        assert_eq!(digest.len(), 64);
    }
}

#[test]
fn digest_edge_cases() {
    let (srv, cfg) = server();
    let empty = replay_check(cfg.clone(), srv.addr(), 4, &[]).unwrap();
    assert_eq!(empty, digest_in_process(cfg.clone(), 4, &[]).unwrap().digest());
    let acts = actions(9, 200);
    let a = replay_check(cfg.clone(), srv.addr(), 4, &acts).unwrap();
    let b = replay_check(cfg.clone(), srv.addr(), 5, &acts).unwrap();
    assert_ne!(a, b);
    assert_ne!(a, empty);
}

#[test]
fn stepping_past_the_end_is_reported() {
    let mut cfg = default_config();
    cfg.max_steps_per_episode = 3;
    let cfg = Arc::new(cfg);
    let srv = Server::spawn("127.0.0.1:0", cfg.clone()).unwrap();
    match replay_check(cfg, srv.addr(), 0, &actions(1, 4)) {
        Err(ReplayError::Local { index: 3, .. }) => {}
        other => panic!("expected local failure at action 3, got {other:?}"),
    }
}

#[test]
fn concurrent_sessions_are_isolated() {
    let (srv, _) = server();
    let addr = srv.addr();
    let acts = Arc::new(actions(2, 500));
    let runs: Vec<_> = (0..4)
        .map(|_| {
            let acts = Arc::clone(&acts);
            thread::spawn(move || storehouse_server::digest_over_wire(addr, 77, &acts).unwrap().digest())
        })
        .collect();
    let digests: Vec<String> = runs.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
    assert!(srv.is_running());
}

#[test]
fn dropped_connection_leaves_the_server_up() {
    let (srv, _) = server();
    {
        let mut c = Client::connect(srv.addr()).unwrap();
        c.reset(None).unwrap();
    }
    let mut c = Client::connect(srv.addr()).unwrap();
    assert_eq!(c.spec().unwrap().actions, 36);
}
