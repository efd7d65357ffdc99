//! Pass/fail bookkeeping for the acceptance run.

use std::time::Instant;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

/// Collects outcomes and prints one line per criterion as it is recorded.
#[derive(Debug)]
pub struct Report {
    outcomes: Vec<Outcome>,
    start: Instant,
}

impl Default for Report {
    fn default() -> Self {
        Self {
            outcomes: Vec::new(),
            start: Instant::now(),
        }
    }
}

impl Report {
    pub fn record(&mut self, id: &str, pass: bool, detail: impl Into<String>) {
        let o = Outcome {
            id: id.to_string(),
            pass,
            detail: detail.into(),
        };
        println!(
            "{} {:<4} {}  [{:.0} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.detail,
            self.start.elapsed().as_secs_f64()
        );
        self.outcomes.push(o);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.pass).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_failures() {
        let mut r = Report::default();
        r.record("1", true, "fine");
        r.record("2", false, "off");
        assert_eq!(r.outcomes().len(), 2);
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.failures()[0].id, "2");
    }
}
