//! Miniature power supply restoration networks.
//!
//! A line is an electrical node joining one or more device sides; a line with a
//! single endpoint is a load. Circuit breakers are sources: power enters at
//! `side1` and leaves at `side2`. A line is fed when power reaches one of its
//! endpoints or passes through a closed device onto it. A breaker is affected when
//! it feeds a faulty line; `wait` opens every affected breaker.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::FixtureError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsrNetwork {
    pub name: &'static str,
    pub breakers: Vec<&'static str>,
    pub switches: Vec<&'static str>,
    /// Line name and the device sides it joins, e.g. `("l1", vec![("cb1", 2), ("sd1", 1)])`.
    pub lines: Vec<(&'static str, Vec<(&'static str, u8)>)>,
    pub closed: Vec<&'static str>,
    pub faulty: Vec<&'static str>,
    pub goal: Vec<&'static str>,
}

const DOMAIN: &str = "(define (domain psr)
  (:requirements :typing :adl :derived-predicates)
  (:types device side line)
  (:constants side1 side2 - side earth - device)
  (:predicates
    (breaker ?x - device)
    (closed ?x - device)
    (faulty ?l - line)
    (ext ?l - line ?x - device ?sx - side)
    (con ?x - device ?sx - side ?y - device ?sy - side)
    (upstream ?x - device ?sx - side ?y - device ?sy - side)
    (fed ?l - line)
    (affected ?x - device))

  (:derived (upstream ?x - device ?sx - side ?y - device ?sy - side)
    (and (closed ?x)
         (or (and (= ?sx side1) (con ?x side2 ?y ?sy))
             (and (= ?sx side2) (con ?x side1 ?y ?sy))
             (exists (?z - device)
               (and (closed ?z)
                    (or (and (con ?z side1 ?y ?sy) (upstream ?x ?sx ?z side2))
                        (and (con ?z side2 ?y ?sy) (upstream ?x ?sx ?z side1))))))))

  (:derived (fed ?l - line)
    (exists (?b - device)
      (exists (?x - device)
        (exists (?sx - side)
          (and (breaker ?b) (ext ?l ?x ?sx)
               (or (and (= ?x ?b) (= ?sx side2) (closed ?b))
                   (upstream ?b side1 ?x ?sx)
                   (and (closed ?x) (= ?sx side1) (upstream ?b side1 ?x side2))
                   (and (closed ?x) (= ?sx side2) (upstream ?b side1 ?x side1))))))))

  (:derived (affected ?b - device)
    (and (breaker ?b)
         (exists (?l - line)
           (exists (?x - device)
             (exists (?sx - side)
               (and (faulty ?l) (ext ?l ?x ?sx)
                    (or (and (= ?x ?b) (= ?sx side2) (closed ?b))
                        (upstream ?b side1 ?x ?sx)
                        (and (closed ?x) (= ?sx side1) (upstream ?b side1 ?x side2))
                        (and (closed ?x) (= ?sx side2) (upstream ?b side1 ?x side1)))))))))

  (:action open
    :parameters (?x - device)
    :precondition (and (not (= ?x earth)) (closed ?x)
                       (forall (?b - device) (not (affected ?b))))
    :effect (not (closed ?x)))

  (:action close
    :parameters (?x - device)
    :precondition (and (not (= ?x earth)) (not (closed ?x))
                       (forall (?b - device) (not (affected ?b))))
    :effect (closed ?x))

  (:action wait
    :parameters ()
    :precondition (exists (?b - device) (affected ?b))
    :effect (forall (?b - device) (when (affected ?b) (not (closed ?b))))))
";

pub fn psr_domain() -> String {
    DOMAIN.to_string()
}

fn side(i: u8) -> &'static str {
    if i == 1 {
        "side1"
    } else {
        "side2"
    }
}

/// Problem text for a network.
pub fn psr_problem(net: &PsrNetwork) -> Result<String, FixtureError> {
    let line_names: BTreeSet<&str> = net.lines.iter().map(|(l, _)| *l).collect();
    for g in net.goal.iter().chain(&net.faulty) {
        if !line_names.contains(g) {
            return Err(FixtureError::UnknownLine { network: net.name.to_string(), line: g.to_string() });
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem psr-{})", net.name);
    let _ = writeln!(s, "  (:domain psr)");
    let _ = writeln!(s, "  (:objects");
    let devices: Vec<&str> = net.breakers.iter().chain(&net.switches).copied().collect();
    let _ = writeln!(s, "    {} - device", devices.join(" "));
    let lines: Vec<&str> = net.lines.iter().map(|(l, _)| *l).collect();
    let _ = writeln!(s, "    {} - line)", lines.join(" "));
    let _ = writeln!(s, "  (:init");
    for b in &net.breakers {
        let _ = writeln!(s, "    (breaker {b})");
    }
    for d in &net.closed {
        let _ = writeln!(s, "    (closed {d})");
    }
    for l in &net.faulty {
        let _ = writeln!(s, "    (faulty {l})");
    }
    for (l, ends) in &net.lines {
        for &(d, i) in ends {
            let _ = writeln!(s, "    (ext {l} {d} {})", side(i));
        }
        for &(x, i) in ends {
            for &(y, j) in ends {
                if (x, i) != (y, j) {
                    let _ = writeln!(s, "    (con {x} {} {y} {})", side(i), side(j));
                }
            }
        }
    }
    s.push_str("  )\n");
    let fed: Vec<String> = net.goal.iter().map(|l| format!("(fed {l})")).collect();
    let _ = writeln!(
        s,
        "  (:goal (and {} (forall (?b - device) (not (affected ?b))))))",
        fed.join(" ")
    );
    Ok(s)
}

/// The curated networks, with one to three sources.
pub fn psr_networks() -> Vec<PsrNetwork> {
    // cb1 feeding l1, then switches sd1..sd4 in series; l5 is the end load.
    let chain = || {
        vec![
            ("l1", vec![("cb1", 2), ("sd1", 1)]),
            ("l2", vec![("sd1", 2), ("sd2", 1)]),
            ("l3", vec![("sd2", 2), ("sd3", 1)]),
            ("l4", vec![("sd3", 2), ("sd4", 1)]),
            ("l5", vec![("sd4", 2)]),
        ]
    };
    let switches = vec!["sd1", "sd2", "sd3", "sd4"];
    vec![
        PsrNetwork {
            name: "feeder",
            breakers: vec!["cb1"],
            switches: switches.clone(),
            lines: chain(),
            closed: vec!["cb1"],
            faulty: vec![],
            goal: vec!["l1", "l2", "l3", "l4", "l5"],
        },
        PsrNetwork {
            name: "healthy",
            breakers: vec!["cb1"],
            switches: switches.clone(),
            lines: chain(),
            closed: vec!["cb1", "sd1", "sd2", "sd3", "sd4"],
            faulty: vec![],
            goal: vec!["l1", "l2", "l3", "l4", "l5"],
        },
        PsrNetwork {
            name: "tripped",
            breakers: vec!["cb1"],
            switches: switches.clone(),
            lines: chain(),
            closed: vec!["sd1", "sd2", "sd3", "sd4"],
            faulty: vec!["l5"],
            goal: vec!["l1", "l2", "l3", "l4"],
        },
        PsrNetwork {
            name: "affected",
            breakers: vec!["cb1"],
            switches,
            lines: chain(),
            closed: vec!["cb1", "sd1", "sd2", "sd3", "sd4"],
            faulty: vec!["l5"],
            goal: vec!["l1"],
        },
        PsrNetwork {
            name: "two-sources",
            breakers: vec!["cb1", "cb2"],
            switches: vec!["sd1", "sd2", "sd3"],
            lines: vec![
                ("l1", vec![("cb1", 2), ("sd1", 1)]),
                ("l2", vec![("sd1", 2), ("sd2", 1)]),
                ("l3", vec![("sd2", 2), ("sd3", 1)]),
                ("l4", vec![("sd3", 2), ("cb2", 2)]),
            ],
            closed: vec!["sd1", "sd2", "cb2"],
            faulty: vec!["l2"],
            goal: vec!["l1", "l3", "l4"],
        },
        PsrNetwork {
            name: "three-sources",
            breakers: vec!["cb1", "cb2", "cb3"],
            switches: vec!["sd1", "sd2", "sd3"],
            lines: vec![
                ("l1", vec![("cb1", 2), ("sd1", 1)]),
                ("l2", vec![("sd1", 2), ("sd2", 1), ("sd3", 2)]),
                ("l3", vec![("sd2", 2), ("cb2", 2)]),
                ("l4", vec![("cb3", 2), ("sd3", 1)]),
            ],
            closed: vec!["sd1", "cb2", "cb3"],
            faulty: vec!["l1"],
            goal: vec!["l2", "l3", "l4"],
        },
    ]
}

pub fn psr_network(name: &str) -> Result<PsrNetwork, FixtureError> {
    psr_networks()
        .into_iter()
        .find(|n| n.name == name)
        .ok_or_else(|| FixtureError::UnknownNetwork(name.to_string()))
}
