use std::collections::BTreeMap;
use std::fmt;

use crate::efg::StateId;

/// The properties a compiled description must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    /// The description is accepted by the subset grammar.
    SubsetValidity,
    /// Every game state has an equivalent interpreter state at the same depth.
    EquivalentStates,
    /// Equivalent decision states have the same mover.
    Mover,
    /// Equivalent decision states offer as many moves as there are children.
    MoveCount,
    /// Equivalent chance states induce the same distribution over children.
    ChanceDistribution,
    /// Terminal states coincide and carry equal payoffs.
    Payoffs,
    /// Players can tell two states apart exactly when their information sets differ.
    Indistinguishability,
    /// Leaves and their chance probabilities coincide as multisets.
    TrajectoryBijection,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::SubsetValidity,
        Criterion::EquivalentStates,
        Criterion::Mover,
        Criterion::MoveCount,
        Criterion::ChanceDistribution,
        Criterion::Payoffs,
        Criterion::Indistinguishability,
        Criterion::TrajectoryBijection,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Criterion::SubsetValidity => "1",
            Criterion::EquivalentStates => "2a",
            Criterion::Mover => "2b",
            Criterion::MoveCount => "2c",
            Criterion::ChanceDistribution => "2d",
            Criterion::Payoffs => "2e",
            Criterion::Indistinguishability => "3",
            Criterion::TrajectoryBijection => "bijection",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::SubsetValidity => "subset validity",
            Criterion::EquivalentStates => "equivalent states",
            Criterion::Mover => "mover",
            Criterion::MoveCount => "move count",
            Criterion::ChanceDistribution => "chance distribution",
            Criterion::Payoffs => "payoffs",
            Criterion::Indistinguishability => "indistinguishability",
            Criterion::TrajectoryBijection => "trajectory bijection",
        }
    }

    pub fn from_id(id: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.id() == id)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One interpreter step: an index into the deterministic move list, or into
/// the chance branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Move(usize),
    Branch(usize),
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Move(i) => write!(f, "move:{i}"),
            Choice::Branch(i) => write!(f, "branch:{i}"),
        }
    }
}

/// A replayable path from the root.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub states: Vec<StateId>,
    pub choices: Vec<Choice>,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let states: Vec<String> = self.states.iter().map(|s| s.0.to_string()).collect();
        let choices: Vec<String> = self.choices.iter().map(Choice::to_string).collect();
        write!(f, "path={} replay={}", states.join(","), if choices.is_empty() { "-".into() } else { choices.join(",") })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub trace: Trace,
    /// The second state of an indistinguishability pair.
    pub other: Option<Trace>,
    /// Set when the two states of a pair lie at different depths.
    pub depth_mismatch: bool,
    pub detail: String,
}

/// At most this many counterexamples are kept per criterion.
pub const MAX_COUNTEREXAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CriterionResult {
    pub failures: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EquivalenceReport {
    pub results: BTreeMap<Criterion, CriterionResult>,
    /// Distinct state pairs visited by the synchronized traversal.
    pub states_checked: usize,
    /// View comparisons made for indistinguishability.
    pub pairs_compared: usize,
}

impl EquivalenceReport {
    /// Marks a criterion as checked, with no failures so far.
    pub fn checked(&mut self, c: Criterion) {
        self.results.entry(c).or_default();
    }

    pub fn fail(&mut self, c: Criterion, cx: Counterexample) {
        let r = self.results.entry(c).or_default();
        r.failures += 1;
        if r.counterexamples.len() < MAX_COUNTEREXAMPLES {
            r.counterexamples.push(cx);
        }
    }

    pub fn status(&self, c: Criterion) -> Status {
        match self.results.get(&c) {
            None => Status::Skipped,
            Some(r) if r.passed() => Status::Pass,
            Some(_) => Status::Fail,
        }
    }

    pub fn failing(&self) -> Vec<Criterion> {
        self.results
            .iter()
            .filter(|(_, r)| !r.passed())
            .map(|(c, _)| *c)
            .collect()
    }

    /// True if at least one criterion was checked and none failed.
    pub fn all_passed(&self) -> bool {
        !self.results.is_empty() && self.failing().is_empty()
    }

    pub fn merge(&mut self, other: EquivalenceReport) {
        for (c, r) in other.results {
            let mine = self.results.entry(c).or_default();
            mine.failures += r.failures;
            for cx in r.counterexamples {
                if mine.counterexamples.len() < MAX_COUNTEREXAMPLES {
                    mine.counterexamples.push(cx);
                }
            }
        }
        self.states_checked = self.states_checked.max(other.states_checked);
        self.pairs_compared += other.pairs_compared;
    }

    /// Machine-readable `key=value` records, one per line.
    pub fn render_records(&self) -> String {
        let mut out = String::new();
        for c in Criterion::ALL {
            let status = self.status(c);
            out += &format!("criterion={} label={:?} status={status}", c.id(), c.label());
            if let Some(r) = self.results.get(&c) {
                out += &format!(" failures={}", r.failures);
            }
            out.push('\n');
            for cx in self.results.get(&c).map(|r| r.counterexamples.as_slice()).unwrap_or_default() {
                let kind = if cx.depth_mismatch { "depth-mismatch" } else { "counterexample" };
                out += &format!("{kind} criterion={} {}", c.id(), cx.trace);
                if let Some(o) = &cx.other {
                    out += &format!(" other_{}", o.to_string().replace(" replay=", " other_replay="));
                }
                out += &format!(" detail={:?}\n", cx.detail);
            }
        }
        out += &format!("states_checked={}\n", self.states_checked);
        out += &format!("pairs_compared={}\n", self.pairs_compared);
        out += &format!("overall={}\n", if self.all_passed() { "pass" } else { "fail" });
        out
    }

    /// One line per criterion plus the first counterexample of each failure.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in Criterion::ALL {
            let status = self.status(c);
            out += &format!("{:<10} {:<22} {}\n", c.id(), c.label(), status.to_string().to_uppercase());
            if let Some(cx) = self.results.get(&c).and_then(|r| r.counterexamples.first()) {
                out += &format!("           first failure: {} ({})\n", cx.detail, cx.trace);
            }
        }
        out
    }
}
