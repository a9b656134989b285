//! Dining philosophers, translated from the automaton of the philosopher process.
//!
//! Each philosopher `i` runs the cycle
//! `state-1 -(trans-3)-> state-6 -(trans-4)-> state-3 -(trans-5)-> state-4
//! -(trans-3)-> state-5 -(trans-6)-> state-6`, writing `fork` to `forks-i`,
//! reading it back, reading from `forks-(i+1 mod n)`, then returning both forks.
//! Channels are single-cell queues.
//!
//! The listing the encoding follows names the seven operators but not the
//! preconditions of the queue-update operators; those are reconstructed from the
//! queue semantics: a write is initialised only into a non-full queue, a read only
//! when the head message matches, and the advance operators move the head or tail
//! pointer, adjust the size counter and the head message, and settle the queue.

use std::fmt::Write;

use super::FixtureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhilosophersVariant {
    /// Deadlock detected by derivation rules.
    DerivedPredicates,
    /// Deadlock established by actions that replace the rules.
    Plain,
}

impl PhilosophersVariant {
    pub fn tag(self) -> &'static str {
        match self {
            PhilosophersVariant::DerivedPredicates => "dp",
            PhilosophersVariant::Plain => "plain",
        }
    }
}

/// Transitions of the philosopher automaton: id, source, target.
pub const TRANSITIONS: [(&str, &str, &str); 5] = [
    ("trans-3", "state-1", "state-6"),
    ("trans-4", "state-6", "state-3"),
    ("trans-5", "state-3", "state-4"),
    ("trans-3", "state-4", "state-5"),
    ("trans-6", "state-5", "state-6"),
];

const HEAD: &str = "(define (domain philosophers)
  (:requirements :typing :adl{REQ})
  (:types process proctype state queue transition number message queuetype queue-state)
  (:constants empty fork - message)
  (:predicates
    (is-a-queue ?q - queue ?qt - queuetype)
    (is-a-process ?p - process ?pt - proctype)
    (at-process ?p - process ?s - state)
    (trans ?pt - proctype ?t - transition ?s1 ?s2 - state)
    (inc ?n1 ?n2 - number)
    (dec ?n1 ?n2 - number)
    (queue-next ?qt - queuetype ?qs1 ?qs2 - queue-state)
    (queue-head ?q - queue ?qs - queue-state)
    (queue-tail ?q - queue ?qs - queue-state)
    (queue-head-msg ?q - queue ?m - message)
    (queue-msg ?q - queue ?qs - queue-state ?m - message)
    (queue-size ?q - queue ?n - number)
    (queue-max ?qt - queuetype ?n - number)
    (is-zero ?n - number)
    (writes ?p - process ?q - queue ?t - transition)
    (reads ?p - process ?q - queue ?t - transition)
    (trans-msg ?t - transition ?m - message)
    (pending ?p - process)
    (activate ?p - process ?t - transition)
    (enabled ?p - process ?t - transition)
    (settled ?q - queue)
    (advance-head ?q - queue)
    (advance-tail ?q - queue ?m - message)
    (blocked-trans ?p - process ?t - transition)
    (blocked ?p - process))
";

const BLOCKED_TRANS_BODY: &str = "(and (activate ?p ?t) (reads ?p ?q ?t) (settled ?q)
         (trans-msg ?t ?m) (queue-size ?q ?n) (is-zero ?n))";

const BLOCKED_BODY: &str = "(and (at-process ?p ?s) (is-a-process ?p ?pt)
         (forall (?t - transition)
           (or (blocked-trans ?p ?t) (forall (?s2 - state) (not (trans ?pt ?t ?s ?s2))))))";

/// The seven operators. `{RESET}` receives the deletes of the plain variant.
const OPERATORS: &str = "
  (:action activate-trans
    :parameters (?p - process ?pt - proctype ?t - transition ?s1 ?s2 - state)
    :precondition (and (forall (?q - queue) (settled ?q)) (trans ?pt ?t ?s1 ?s2)
                       (is-a-process ?p ?pt) (at-process ?p ?s1) (pending ?p))
    :effect (and (activate ?p ?t) (not (pending ?p)){RESET}))

  (:action queue-read
    :parameters (?p - process ?t - transition ?q - queue ?m - message)
    :precondition (and (activate ?p ?t) (settled ?q) (reads ?p ?q ?t) (trans-msg ?t ?m)
                       (queue-head-msg ?q ?m))
    :effect (and (not (activate ?p ?t)) (enabled ?p ?t) (not (settled ?q)) (advance-head ?q){RESET}))

  (:action queue-write
    :parameters (?p - process ?t - transition ?q - queue ?qt - queuetype ?m - message ?n - number)
    :precondition (and (activate ?p ?t) (settled ?q) (writes ?p ?q ?t) (trans-msg ?t ?m)
                       (is-a-queue ?q ?qt) (queue-size ?q ?n) (not (queue-max ?qt ?n)))
    :effect (and (not (activate ?p ?t)) (enabled ?p ?t) (not (settled ?q)) (advance-tail ?q ?m){RESET}))

  (:action advance-queue-head
    :parameters (?q - queue ?qt - queuetype ?qs1 ?qs2 - queue-state ?m - message ?n1 ?n2 - number)
    :precondition (and (advance-head ?q) (is-a-queue ?q ?qt) (queue-head ?q ?qs1)
                       (queue-next ?qt ?qs1 ?qs2) (queue-head-msg ?q ?m)
                       (queue-size ?q ?n1) (dec ?n1 ?n2))
    :effect (and (not (advance-head ?q)) (settled ?q)
                 (not (queue-head ?q ?qs1)) (queue-head ?q ?qs2)
                 (not (queue-msg ?q ?qs1 ?m))
                 (not (queue-size ?q ?n1)) (queue-size ?q ?n2)
                 (not (queue-head-msg ?q ?m))
                 (when (is-zero ?n2) (queue-head-msg ?q empty))
                 (forall (?m2 - message)
                   (when (and (not (is-zero ?n2)) (queue-msg ?q ?qs2 ?m2)) (queue-head-msg ?q ?m2))){RESET}))

  (:action advance-empty-queue-tail
    :parameters (?q - queue ?qt - queuetype ?qs1 ?qs2 - queue-state ?m ?m1 - message ?n1 ?n2 - number)
    :precondition (and (advance-tail ?q ?m) (is-a-queue ?q ?qt) (queue-tail ?q ?qs1)
                       (queue-next ?qt ?qs1 ?qs2) (queue-head-msg ?q ?m1)
                       (queue-size ?q ?n1) (is-zero ?n1) (inc ?n1 ?n2))
    :effect (and (not (advance-tail ?q ?m)) (settled ?q)
                 (not (queue-tail ?q ?qs1)) (queue-tail ?q ?qs2)
                 (queue-msg ?q ?qs1 ?m)
                 (not (queue-size ?q ?n1)) (queue-size ?q ?n2)
                 (not (queue-head-msg ?q ?m1)) (queue-head-msg ?q ?m){RESET}))

  (:action advance-non-empty-queue-tail
    :parameters (?q - queue ?qt - queuetype ?qs1 ?qs2 - queue-state ?m - message ?n1 ?n2 - number)
    :precondition (and (advance-tail ?q ?m) (is-a-queue ?q ?qt) (queue-tail ?q ?qs1)
                       (queue-next ?qt ?qs1 ?qs2) (queue-size ?q ?n1) (not (is-zero ?n1))
                       (inc ?n1 ?n2))
    :effect (and (not (advance-tail ?q ?m)) (settled ?q)
                 (not (queue-tail ?q ?qs1)) (queue-tail ?q ?qs2)
                 (queue-msg ?q ?qs1 ?m)
                 (not (queue-size ?q ?n1)) (queue-size ?q ?n2){RESET}))

  (:action process-trans
    :parameters (?p - process ?pt - proctype ?t - transition ?s1 ?s2 - state)
    :precondition (and (forall (?q - queue) (settled ?q)) (enabled ?p ?t) (trans ?pt ?t ?s1 ?s2)
                       (is-a-process ?p ?pt) (at-process ?p ?s1))
    :effect (and (not (enabled ?p ?t)) (not (at-process ?p ?s1)) (at-process ?p ?s2) (pending ?p){RESET}))
";

const RESET: &str = "
                 (forall (?x - process) (not (blocked ?x)))
                 (forall (?x - process ?y - transition) (not (blocked-trans ?x ?y)))";

/// Domain text of a variant. Both variants share the seven operators; the plain
/// variant turns the two rules into actions and lets every operator retract the
/// facts they establish, since each operator changes a predicate they read.
pub fn philosophers_domain(variant: PhilosophersVariant) -> String {
    let mut s = String::new();
    match variant {
        PhilosophersVariant::DerivedPredicates => {
            s.push_str(&HEAD.replace("{REQ}", " :derived-predicates"));
            s.push_str(&OPERATORS.replace("{RESET}", ""));
            let _ = write!(
                s,
                "
  (:derived (blocked-trans ?p - process ?t - transition)
    (exists (?q - queue)
      (exists (?m - message)
        (exists (?n - number)
          {BLOCKED_TRANS_BODY}))))

  (:derived (blocked ?p - process)
    (exists (?s - state)
      (exists (?pt - proctype)
        {BLOCKED_BODY}))))
"
            );
        }
        PhilosophersVariant::Plain => {
            s.push_str(&HEAD.replace("{REQ}", ""));
            s.push_str(&OPERATORS.replace("{RESET}", RESET));
            let _ = write!(
                s,
                "
  (:action block-trans
    :parameters (?p - process ?t - transition ?q - queue ?m - message ?n - number)
    :precondition {BLOCKED_TRANS_BODY}
    :effect (blocked-trans ?p ?t))

  (:action block
    :parameters (?p - process ?s - state ?pt - proctype)
    :precondition {BLOCKED_BODY}
    :effect (blocked ?p)))
"
            );
        }
    }
    s
}

/// Problem text for `n` philosophers.
pub fn philosophers_problem(n: usize) -> Result<String, FixtureError> {
    if n < 2 {
        return Err(FixtureError::TooFewPhilosophers(n));
    }
    let procs: Vec<String> = (0..n).map(|i| format!("philosopher-{i}")).collect();
    let queues: Vec<String> = (0..n).map(|i| format!("forks-{i}")).collect();
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem philosophers-{n})");
    let _ = writeln!(s, "  (:domain philosophers)");
    let _ = writeln!(s, "  (:objects");
    let _ = writeln!(s, "    {} - process", procs.join(" "));
    let _ = writeln!(s, "    {} - queue", queues.join(" "));
    let _ = writeln!(s, "    philosopher - proctype");
    let _ = writeln!(s, "    state-1 state-3 state-4 state-5 state-6 - state");
    let _ = writeln!(s, "    trans-3 trans-4 trans-5 trans-6 - transition");
    let _ = writeln!(s, "    zero one - number");
    let _ = writeln!(s, "    queue-1 - queuetype");
    let _ = writeln!(s, "    qs-0 - queue-state)");
    let _ = writeln!(s, "  (:init");
    for (t, a, b) in TRANSITIONS {
        let _ = writeln!(s, "    (trans philosopher {t} {a} {b})");
    }
    for t in ["trans-3", "trans-4", "trans-5", "trans-6"] {
        let _ = writeln!(s, "    (trans-msg {t} fork)");
    }
    s.push_str("    (inc zero one) (dec one zero) (is-zero zero)\n");
    s.push_str("    (queue-max queue-1 one) (queue-next queue-1 qs-0 qs-0)\n");
    for i in 0..n {
        let (p, left, right) = (&procs[i], &queues[i], &queues[(i + 1) % n]);
        let _ = writeln!(s, "    (is-a-process {p} philosopher) (at-process {p} state-1) (pending {p})");
        let _ = writeln!(s, "    (is-a-queue {left} queue-1) (queue-head {left} qs-0) (queue-tail {left} qs-0)");
        let _ = writeln!(s, "    (queue-head-msg {left} empty) (queue-size {left} zero) (settled {left})");
        let _ = writeln!(s, "    (writes {p} {left} trans-3) (reads {p} {left} trans-4)");
        let _ = writeln!(s, "    (reads {p} {right} trans-5) (writes {p} {right} trans-6)");
    }
    s.push_str("  )\n");
    let goals: Vec<String> = procs.iter().map(|p| format!("(blocked {p})")).collect();
    let _ = writeln!(s, "  (:goal (and {})))", goals.join(" "));
    Ok(s)
}
