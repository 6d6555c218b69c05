use std::fmt;
use std::time::Duration;

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn new(id: u32, name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            name,
            passed,
            detail: detail.into(),
            elapsed: Duration::ZERO,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:>2} ({}) [{:.1}s]: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Keeps outcomes in order and prints each as it arrives.
#[derive(Debug, Default)]
pub struct Reporter {
    outcomes: Vec<Outcome>,
}

impl Reporter {
    pub fn record(&mut self, outcome: Outcome) {
        println!("{outcome}");
        self.outcomes.push(outcome);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }
}
