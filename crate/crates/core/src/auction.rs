//! Two-driver auction baseline and its utility comparison against matching.
//!
//! Allocation, payment and travel time follow the three-case table keyed on
//! where `θ1` falls relative to `θ2`. Both boundaries `θ1 = θ2/2` and
//! `θ1 = 2θ2` belong to the shared middle case.
//!
//! The comparison formulas are evaluated literally. They give
//! `U_mat = φ · U_auc`, so with `φ < 1` matching is worse whenever the
//! auction utility is positive; [`UtilityComparison::matching_minus_auction_sign`]
//! reports that sign instead of hiding it.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which branch of the two-driver table applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuctionCase {
    /// `θ1 ∈ [θ2/2, 2θ2]`: both travel.
    Shared,
    /// `θ1 > 2θ2`: only driver 1 travels.
    FirstOnly,
    /// `θ1 < θ2/2`: only driver 2 travels.
    SecondOnly,
}

impl AuctionCase {
    pub fn classify(theta1: f64, theta2: f64) -> Self {
        if theta1 > 2.0 * theta2 {
            AuctionCase::FirstOnly
        } else if theta1 < 0.5 * theta2 {
            AuctionCase::SecondOnly
        } else {
            AuctionCase::Shared
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AuctionCase::Shared => "shared",
            AuctionCase::FirstOnly => "first_only",
            AuctionCase::SecondOnly => "second_only",
        }
    }

    /// Number of drivers travelling.
    pub fn travellers(self) -> u32 {
        match self {
            AuctionCase::Shared => 2,
            _ => 1,
        }
    }
}

/// `(x1, x2)`, 1 if the driver travels.
pub fn auc_allocate(theta1: f64, theta2: f64) -> (u8, u8) {
    match AuctionCase::classify(theta1, theta2) {
        AuctionCase::Shared => (1, 1),
        AuctionCase::FirstOnly => (1, 0),
        AuctionCase::SecondOnly => (0, 1),
    }
}

/// Driver 1's payment.
pub fn auc_payment(theta1: f64, theta2: f64) -> f64 {
    match AuctionCase::classify(theta1, theta2) {
        AuctionCase::SecondOnly => 0.0,
        AuctionCase::Shared => theta2,
        AuctionCase::FirstOnly => 3.0 * theta2,
    }
}

/// Driver 1's travel time, `None` when driver 1 does not travel.
pub fn auc_travel_time(theta1: f64, theta2: f64) -> Option<f64> {
    match AuctionCase::classify(theta1, theta2) {
        AuctionCase::SecondOnly => None,
        AuctionCase::Shared => Some(2.0),
        AuctionCase::FirstOnly => Some(1.0),
    }
}

/// Free-flow time `S`, congested-time table `c(k)` and matching payment
/// fraction `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionScenario {
    pub free_time: f64,
    /// `congestion_time[k - 1] = c(k)`.
    pub congestion_time: Vec<f64>,
    pub phi: f64,
}

impl Default for AuctionScenario {
    /// `S = 4`, `c(k) = k` for the two-driver example, `φ = 1/2`.
    fn default() -> Self {
        AuctionScenario {
            free_time: 4.0,
            congestion_time: vec![1.0, 2.0],
            phi: 0.5,
        }
    }
}

impl AuctionScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::InvalidAuction(format!(
                "phi must lie in (0, 1), got {}",
                self.phi
            )));
        }
        if self.congestion_time.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidAuction("c(k) must be nondecreasing".into()));
        }
        Ok(())
    }

    pub fn congestion(&self, travellers: u32) -> Result<f64> {
        let k = travellers as usize;
        if k == 0 || k > self.congestion_time.len() {
            return Err(Error::InvalidAuction(format!("c({k}) is not tabulated")));
        }
        Ok(self.congestion_time[k - 1])
    }

    /// Trip value `v(θ, k) = θ (S - c(k))`.
    pub fn trip_value(&self, theta: f64, travellers: u32) -> Result<f64> {
        Ok(theta * (self.free_time - self.congestion(travellers)?))
    }
}

/// How a driver exits the auction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Participation {
    OptOut,
    Travel { travellers: u32, payment: f64 },
}

/// `v(θ, k) - p` when travelling, 0 when opting out.
pub fn auc_utility(theta: f64, participation: Participation, scenario: &AuctionScenario) -> Result<f64> {
    match participation {
        Participation::OptOut => Ok(0.0),
        Participation::Travel { travellers, payment } => Ok(scenario.trip_value(theta, travellers)? - payment),
    }
}

/// Free-flow time in the comparison formulas.
pub const COMPARISON_FREE_TIME: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityComparison {
    pub auction: f64,
    pub matching: f64,
}

impl UtilityComparison {
    /// `U_mat / U_auc`; undefined when the auction utility is zero.
    pub fn ratio(&self) -> Result<f64> {
        if self.auction == 0.0 {
            return Err(Error::DegenerateComparison);
        }
        Ok(self.matching / self.auction)
    }

    /// Sign of `U_mat - U_auc`: -1, 0 or 1.
    pub fn matching_minus_auction_sign(&self) -> i8 {
        match self.matching.partial_cmp(&self.auction) {
            Some(Ordering::Greater) => 1,
            Some(Ordering::Less) => -1,
            _ => 0,
        }
    }
}

/// `U_auc = θ (4 - t_c)` and `U_mat = (4 - t_c) φ θ`.
pub fn matching_comparison_utilities(theta: f64, congested_time: f64, phi: f64) -> Result<UtilityComparison> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::InvalidAuction(format!("phi must lie in (0, 1), got {phi}")));
    }
    let saved = COMPARISON_FREE_TIME - congested_time;
    Ok(UtilityComparison {
        auction: theta * saved,
        matching: saved * phi * theta,
    })
}

/// One row of the two-driver comparison table, from driver 1's side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub theta1: f64,
    pub theta2: f64,
    pub case: AuctionCase,
    pub x1: u8,
    pub x2: u8,
    pub payment1: f64,
    pub travel_time1: Option<f64>,
    /// Driver 1's auction utility including the payment, `v(θ1, k) - p1`.
    pub auction_utility_paid: f64,
    /// Comparison-formula utilities with `t_c` set to the number of auction
    /// travellers.
    pub auction_utility: f64,
    pub matching_utility: f64,
    pub ratio: Option<f64>,
    pub matching_minus_auction_sign: i8,
}

pub fn comparison_row(theta1: f64, theta2: f64, scenario: &AuctionScenario) -> Result<ComparisonRow> {
    scenario.validate()?;
    let case = AuctionCase::classify(theta1, theta2);
    let (x1, x2) = auc_allocate(theta1, theta2);
    let payment1 = auc_payment(theta1, theta2);
    let participation = if x1 == 1 {
        Participation::Travel {
            travellers: case.travellers(),
            payment: payment1,
        }
    } else {
        Participation::OptOut
    };
    let auction_utility_paid = auc_utility(theta1, participation, scenario)?;
    let cmp = matching_comparison_utilities(theta1, f64::from(case.travellers()), scenario.phi)?;
    Ok(ComparisonRow {
        theta1,
        theta2,
        case,
        x1,
        x2,
        payment1,
        travel_time1: auc_travel_time(theta1, theta2),
        auction_utility_paid,
        auction_utility: cmp.auction,
        matching_utility: cmp.matching,
        ratio: cmp.ratio().ok(),
        matching_minus_auction_sign: cmp.matching_minus_auction_sign(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_examples() {
        assert_eq!(auc_allocate(1.0, 1.0), (1, 1));
        assert_eq!(auc_allocate(3.0, 1.0), (1, 0));
        assert_eq!(auc_allocate(0.4, 1.0), (0, 1));
        assert_eq!(auc_payment(1.0, 1.0), 1.0);
        assert_eq!(auc_payment(3.0, 1.0), 3.0);
        assert_eq!(auc_payment(0.4, 1.0), 0.0);
        assert_eq!(auc_travel_time(1.0, 1.0), Some(2.0));
        assert_eq!(auc_travel_time(3.0, 1.0), Some(1.0));
        assert_eq!(auc_travel_time(0.4, 1.0), None);
    }

    #[test]
    fn boundaries_are_shared() {
        assert_eq!(AuctionCase::classify(0.5, 1.0), AuctionCase::Shared);
        assert_eq!(AuctionCase::classify(2.0, 1.0), AuctionCase::Shared);
    }

    #[test]
    fn utility_examples() {
        let s = AuctionScenario::default();
        assert_eq!(auc_utility(5.0, Participation::OptOut, &s).unwrap(), 0.0);
        let u = auc_utility(
            1.0,
            Participation::Travel {
                travellers: 2,
                payment: 1.0,
            },
            &s,
        )
        .unwrap();
        assert_eq!(u, 1.0);
        let u = auc_utility(
            1.0,
            Participation::Travel {
                travellers: 1,
                payment: 3.0,
            },
            &s,
        )
        .unwrap();
        assert_eq!(u, 0.0);
        assert!(auc_utility(
            1.0,
            Participation::Travel {
                travellers: 3,
                payment: 0.0
            },
            &s
        )
        .is_err());
    }

    #[test]
    fn comparison_examples() {
        let c = matching_comparison_utilities(2.0, 4.0, 0.5).unwrap();
        assert_eq!((c.auction, c.matching), (0.0, 0.0));
        assert_eq!(c.ratio(), Err(Error::DegenerateComparison));

        let c = matching_comparison_utilities(2.0, 2.0, 0.5).unwrap();
        assert_eq!((c.auction, c.matching), (4.0, 2.0));
        assert_eq!(c.ratio().unwrap(), 0.5);
        assert_eq!(c.matching_minus_auction_sign(), -1);

        let c = matching_comparison_utilities(1.0, 3.0, 0.25).unwrap();
        assert_eq!((c.auction, c.matching), (1.0, 0.25));

        assert!(matching_comparison_utilities(1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(AuctionScenario::default().validate().is_ok());
        let bad = AuctionScenario {
            congestion_time: vec![2.0, 1.0],
            ..AuctionScenario::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn row_for_first_only_case() {
        let row = comparison_row(3.0, 1.0, &AuctionScenario::default()).unwrap();
        assert_eq!((row.x1, row.x2), (1, 0));
        assert_eq!(row.payment1, 3.0);
        assert_eq!(row.travel_time1, Some(1.0));
        // v(3, 1) - 3 = 3 * (4 - 1) - 3
        assert_eq!(row.auction_utility_paid, 6.0);
        assert_eq!(row.auction_utility, 9.0);
        assert_eq!(row.matching_utility, 4.5);
    }

    proptest! {
        #[test]
        fn cases_partition(t1 in 1e-3f64..1e3, t2 in 1e-3f64..1e3) {
            let hits = [t1 > 2.0 * t2, t1 < 0.5 * t2, (0.5 * t2..=2.0 * t2).contains(&t1)];
            prop_assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
        }

        #[test]
        fn matching_is_phi_times_auction(theta in 1e-3f64..100.0, tc in 0.0f64..8.0, phi in 1e-3f64..0.999) {
            let c = matching_comparison_utilities(theta, tc, phi).unwrap();
            prop_assert!((c.matching - phi * c.auction).abs() <= 1e-12 * c.auction.abs().max(1.0));
        }
    }
}
