use std::thread;
use std::time::Duration;

use ifcsp::oracle::Oracle;
use ifcsp::{
    generate, solve, verify_nos, GenParams, Mailbox, OracleAnswer, OracleError, RemoteOracle, ScriptedOracle,
    SimulatedOracle, SolveError, SolveOptions, Strategy,
};

/// Answers every pending query of `mailbox` from `truth` until it closes.
fn answer_from(mailbox: std::sync::Arc<Mailbox>, mut user: SimulatedOracle, stop: std::sync::mpsc::Receiver<()>) {
    loop {
        if stop.try_recv().is_ok() {
            return;
        }
        match mailbox.pending() {
            Some(p) => {
                let answer = user.answer(p.id, &p.query).unwrap();
                mailbox.submit(p.id, answer).unwrap();
            }
            None => thread::sleep(Duration::from_millis(1)),
        }
    }
}

#[test]
fn remote_session_matches_simulation_and_replay() {
    let g = generate(&GenParams { n: 5, m: 3, i: 40, seed: 21, ..Default::default() }).unwrap();
    let strategy: Strategy = "LU.WORST.BRANCH".parse().unwrap();
    let options = SolveOptions::default();
    let mailbox = Mailbox::new();
    let (tx, rx) = std::sync::mpsc::channel();
    let helper = {
        let mailbox = mailbox.clone();
        let user = SimulatedOracle::new(g.truth.clone());
        thread::spawn(move || answer_from(mailbox, user, rx))
    };
    let mut remote = solve(&g.visible, strategy, RemoteOracle::new(mailbox.clone(), Duration::from_secs(10)), &options).unwrap();
    tx.send(()).unwrap();
    helper.join().unwrap();

    let mut simulated = solve(&g.visible, strategy, SimulatedOracle::new(g.truth.clone()), &options).unwrap();
    let mut replayed = solve(&g.visible, strategy, ScriptedOracle::from_transcript(&mailbox.transcript()), &options).unwrap();
    for r in [&mut remote, &mut simulated, &mut replayed] {
        r.stats.wall_time_ms = 0.0;
    }
    assert_eq!(remote, simulated);
    assert_eq!(remote, replayed);
    assert_eq!(mailbox.transcript(), remote.transcript);
    assert!(verify_nos(&remote.q, &remote.sol, remote.pref).unwrap());
}

#[test]
fn resumed_mailbox_replays_then_asks() {
    let g = generate(&GenParams { n: 4, m: 3, i: 60, seed: 4, ..Default::default() }).unwrap();
    let strategy: Strategy = "DPI.ALL.BRANCH".parse().unwrap();
    let full = solve(&g.visible, strategy, SimulatedOracle::new(g.truth.clone()), &SolveOptions::default()).unwrap();
    assert!(full.transcript.len() >= 2);
    let half = full.transcript[..full.transcript.len() / 2].to_vec();

    let mailbox = Mailbox::resumed(half.clone());
    let (tx, rx) = std::sync::mpsc::channel();
    let helper = {
        let mailbox = mailbox.clone();
        let user = SimulatedOracle::new(g.truth.clone());
        thread::spawn(move || answer_from(mailbox, user, rx))
    };
    let resumed = solve(&g.visible, strategy, RemoteOracle::new(mailbox.clone(), Duration::from_secs(10)), &SolveOptions::default()).unwrap();
    tx.send(()).unwrap();
    helper.join().unwrap();
    assert_eq!(resumed.transcript, full.transcript);
    assert_eq!(mailbox.transcript(), full.transcript);
}

#[test]
fn stale_and_malformed_answers_are_rejected() {
    let g = generate(&GenParams { n: 3, m: 2, i: 100, seed: 1, ..Default::default() }).unwrap();
    let mailbox = Mailbox::new();
    let solver = {
        let mailbox = mailbox.clone();
        let visible = g.visible.clone();
        thread::spawn(move || {
            solve(&visible, "DPI.ALL.BRANCH".parse().unwrap(), RemoteOracle::new(mailbox, Duration::from_secs(10)), &SolveOptions::default())
        })
    };
    let pending = loop {
        if let Some(p) = mailbox.pending() {
            break p;
        }
        thread::sleep(Duration::from_millis(1));
    };
    assert!(matches!(mailbox.submit(pending.id + 1, OracleAnswer::NoneWorse), Err(OracleError::Mismatch(_))));
    assert!(matches!(mailbox.submit(pending.id, OracleAnswer::NoneWorse), Err(OracleError::Mismatch(_))));
    let mut user = SimulatedOracle::new(g.truth.clone());
    let mut answer = user.answer(pending.id, &pending.query).unwrap();
    if let OracleAnswer::Revealed { values } = &mut answer {
        let good = values[0].value;
        values[0].value = 1.2;
        assert_eq!(mailbox.submit(pending.id, answer.clone()), Err(OracleError::OutOfRange(1.2)));
        if let OracleAnswer::Revealed { values } = &mut answer {
            values[0].value = good;
        }
    }
    mailbox.submit(pending.id, answer.clone()).unwrap();
    assert!(mailbox.submit(pending.id, answer).is_err());
    mailbox.close();
    assert!(matches!(solver.join().unwrap(), Err(SolveError::Oracle(OracleError::Closed)) | Ok(_)));
}

#[test]
fn unanswered_query_times_out() {
    let g = generate(&GenParams { n: 3, m: 2, i: 100, seed: 1, ..Default::default() }).unwrap();
    let r = solve(
        &g.visible,
        "DPI.ALL.BRANCH".parse().unwrap(),
        RemoteOracle::new(Mailbox::new(), Duration::from_millis(20)),
        &SolveOptions::default(),
    );
    assert!(matches!(r, Err(SolveError::Oracle(OracleError::Timeout(_)))));
}
