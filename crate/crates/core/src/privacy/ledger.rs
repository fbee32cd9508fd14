/// Pure-ε budget of one training run.
///
/// Each example's projection vector passes through the mechanism once per
/// draw, and draws touch disjoint randomness, so the reported budget is the
/// configured ε however many times the mechanism ran. Anything computed from
/// the trained model (sampling, downstream classifiers) is post-processing and
/// leaves the budget untouched. δ is always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyLedger {
    epsilon: f64,
    mechanism_invocations: u64,
    post_processing: Vec<String>,
}

impl PrivacyLedger {
    pub fn new(epsilon: f64) -> Self {
        PrivacyLedger {
            epsilon,
            mechanism_invocations: 0,
            post_processing: Vec::new(),
        }
    }

    pub fn record_invocations(&mut self, n: u64) {
        self.mechanism_invocations += n;
    }

    /// Notes a computation on released outputs; the budget does not change.
    pub fn register_post_processing(&mut self, what: impl Into<String>) {
        self.post_processing.push(what.into());
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        0.0
    }

    pub fn mechanism_invocations(&self) -> u64 {
        self.mechanism_invocations
    }

    pub fn post_processing(&self) -> &[String] {
        &self.post_processing
    }

    /// `(ε, δ)`.
    pub fn report(&self) -> (f64, f64) {
        (self.epsilon, self.delta())
    }
}

pub fn ledger_report(ledger: &PrivacyLedger) -> (f64, f64) {
    ledger.report()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_configured_budget_with_zero_delta() {
        let mut l = PrivacyLedger::new(10.0);
        l.record_invocations(64 * 2000);
        assert_eq!(ledger_report(&l), (10.0, 0.0));
        let l = PrivacyLedger::new(1.0);
        assert_eq!(l.report(), (1.0, 0.0));
    }

    #[test]
    fn post_processing_leaves_budget_unchanged() {
        let mut l = PrivacyLedger::new(10.0);
        let before = l.report();
        for _ in 0..1000 {
            l.register_post_processing("sample 1000 images");
        }
        assert_eq!(l.report(), before);
        assert_eq!(l.post_processing().len(), 1000);
    }
}
