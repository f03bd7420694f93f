use crate::error::AdpgError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub target: f64,
    pub rtt_inflation: f64,
    /// Rate as a fraction of the link rate.
    pub rate_norm: f64,
}

impl RewardTerms {
    fn check(&self) -> Result<(), AdpgError> {
        if self.rate_norm.is_nan() || self.rate_norm <= 0.0 {
            return Err(AdpgError::NonPositiveRate(self.rate_norm));
        }
        Ok(())
    }

    /// `target - inflation * sqrt(rate)`: positive when the flow may speed up.
    pub fn coefficient(&self) -> Result<f64, AdpgError> {
        self.check()?;
        Ok(self.target - self.rtt_inflation * libm::sqrt(self.rate_norm))
    }

    /// Negated squared distance of `inflation * sqrt(rate)` from the target.
    pub fn reward(&self) -> Result<f64, AdpgError> {
        let c = self.coefficient()?;
        Ok(-(c * c))
    }
}

pub fn reward(terms: RewardTerms) -> Result<f64, AdpgError> {
    terms.reward()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(target: f64, rtt_inflation: f64, rate_norm: f64) -> f64 {
        reward(RewardTerms {
            target,
            rtt_inflation,
            rate_norm,
        })
        .unwrap()
    }

    #[test]
    fn worked_values() {
        assert_eq!(r(2.0, 2.0, 1.0), 0.0);
        assert_eq!(r(2.0, 2.0, 0.25), -1.0);
        assert_eq!(r(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn non_positive_rate_is_rejected() {
        let t = RewardTerms {
            target: 2.0,
            rtt_inflation: 1.0,
            rate_norm: 0.0,
        };
        assert_eq!(t.reward(), Err(AdpgError::NonPositiveRate(0.0)));
    }
}
