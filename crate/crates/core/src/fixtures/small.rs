//! Small hand-written domains used as test fixtures.

use std::fmt::Write;

pub const BRIEFCASE_DOMAIN: &str = "(define (domain briefcase)
  (:requirements :typing :adl)
  (:types location portable)
  (:predicates (at ?y - portable ?x - location) (in ?x - portable) (is-at ?x - location))
  (:action move
    :parameters (?m ?l - location)
    :precondition (and (is-at ?m) (not (= ?m ?l)))
    :effect (and (is-at ?l) (not (is-at ?m))
                 (forall (?x - portable) (when (in ?x) (and (at ?x ?l) (not (at ?x ?m)))))))
  (:action take-out
    :parameters (?x - portable)
    :precondition (in ?x)
    :effect (not (in ?x)))
  (:action put-in
    :parameters (?x - portable ?l - location)
    :precondition (and (not (in ?x)) (at ?x ?l) (is-at ?l))
    :effect (in ?x)))
";

/// `n` objects at `home`, to be delivered alternately to `office` and `shop`,
/// with the briefcase back home.
pub fn briefcase_problem(n: usize) -> String {
    let objs: Vec<String> = (1..=n).map(|i| format!("o{i}")).collect();
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem briefcase-{n})");
    let _ = writeln!(s, "  (:domain briefcase)");
    let _ = writeln!(s, "  (:objects home office shop - location {} - portable)", objs.join(" "));
    let init: Vec<String> = objs.iter().map(|o| format!("(at {o} home)")).collect();
    let _ = writeln!(s, "  (:init (is-at home) {})", init.join(" "));
    let goal: Vec<String> = objs
        .iter()
        .enumerate()
        .map(|(i, o)| format!("(at {o} {})", if i % 2 == 0 { "office" } else { "shop" }))
        .collect();
    let _ = writeln!(s, "  (:goal (and (is-at home) {})))", goal.join(" "));
    s
}

pub const AIRPORT_DOMAIN: &str = "(define (domain airport-mini)
  (:requirements :strips :typing)
  (:types airplane segment)
  (:predicates (at ?a - airplane ?s - segment) (link ?s1 ?s2 - segment) (free ?s - segment)
               (gate ?s - segment) (parked ?a - airplane))
  (:action move
    :parameters (?a - airplane ?s1 ?s2 - segment)
    :precondition (and (at ?a ?s1) (link ?s1 ?s2) (free ?s2))
    :effect (and (at ?a ?s2) (free ?s1) (not (at ?a ?s1)) (not (free ?s2))))
  (:action park
    :parameters (?a - airplane ?s - segment)
    :precondition (and (at ?a ?s) (gate ?s))
    :effect (and (parked ?a) (not (at ?a ?s)))))
";

/// Two airplanes taxiing to their gates over a shared segment.
pub const AIRPORT_PROBLEM: &str = "(define (problem airport-mini)
  (:domain airport-mini)
  (:objects a1 a2 - airplane s1 s2 s3 s4 s5 - segment)
  (:init (at a1 s1) (at a2 s4) (free s2) (free s3) (free s5)
         (link s1 s2) (link s2 s3) (link s4 s2) (link s2 s5)
         (gate s3) (gate s5))
  (:goal (and (parked a1) (parked a2))))
";

pub const UMTS_DOMAIN: &str = "(define (domain umts-mini)
  (:requirements :strips :typing)
  (:types application)
  (:predicates (tf-set ?a - application) (mm-set ?a - application) (rrc-set ?a - application)
               (rab-set ?a - application) (as-set ?a - application))
  (:action set-tf :parameters (?a - application) :precondition (and) :effect (tf-set ?a))
  (:action set-mm :parameters (?a - application) :precondition (tf-set ?a) :effect (mm-set ?a))
  (:action set-rrc :parameters (?a - application) :precondition (mm-set ?a) :effect (rrc-set ?a))
  (:action set-rab
    :parameters (?a - application)
    :precondition (and (rrc-set ?a) (tf-set ?a))
    :effect (rab-set ?a))
  (:action set-as :parameters (?a - application) :precondition (rab-set ?a) :effect (as-set ?a)))
";

/// Setup stages of three applications; every fact has a single achiever.
pub const UMTS_PROBLEM: &str = "(define (problem umts-mini)
  (:domain umts-mini)
  (:objects email video voice - application)
  (:init)
  (:goal (and (as-set email) (as-set video) (as-set voice))))
";

pub const BAR_DOMAIN: &str = "(define (domain bar)
  (:requirements :durative-actions :timed-initial-literals)
  (:predicates (have-to-work) (bar-open) (drunk))
  (:durative-action drink
    :parameters ()
    :duration (= ?duration 1)
    :condition (at start (bar-open))
    :effect (at end (drunk))))
";

pub const BAR_PROBLEM: &str = "(define (problem evening)
  (:domain bar)
  (:init (at 9 (have-to-work)) (at 19 (not (have-to-work))) (at 19 (bar-open)) (at 23 (not (bar-open))))
  (:goal (drunk)))
";
