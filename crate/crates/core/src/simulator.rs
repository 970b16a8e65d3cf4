//! Seeded generator of synthetic episodes with the show's round structure.
//!
//! The opens-per-round schedule, banker fractions and contestant policy are
//! not known for the real show; the defaults here are placeholders that
//! reproduce the overall shape (21 opens, a handful of offers).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::episode::{Action, Episode};
use crate::game::{expected_value, Money, PrizeSet, DEFAULT_DELTA};
use crate::seed::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundBlock {
    pub opens: u32,
    pub offer_after: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case")
)]
pub enum ContestantPolicy {
    NeverDeal,
    /// Accept any offer of at least `rho` times the current expected value.
    Threshold {
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct SimConfig {
    pub board: PrizeSet,
    pub rounds_schedule: Vec<RoundBlock>,
    /// One fraction of the expected value per offer point, in schedule order.
    pub banker_fractions: Vec<f64>,
    pub policy: ContestantPolicy,
    pub seed: u64,
    /// Margin used when labeling the simulated events.
    pub delta: Money,
}

impl Default for SimConfig {
    /// 22-prize board, opens 5-3-3-3-3-3 with an offer after each block and a
    /// final single open, fractions ramping 0.3 to 0.9, never dealing.
    fn default() -> Self {
        let mut rounds_schedule = vec![RoundBlock { opens: 5, offer_after: true }];
        rounds_schedule.extend((0..5).map(|_| RoundBlock { opens: 3, offer_after: true }));
        rounds_schedule.push(RoundBlock { opens: 1, offer_after: false });
        SimConfig {
            board: PrizeSet::default_board(),
            rounds_schedule,
            banker_fractions: vec![0.3, 0.42, 0.54, 0.66, 0.78, 0.9],
            policy: ContestantPolicy::NeverDeal,
            seed: 0,
            delta: DEFAULT_DELTA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid simulator config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: &'static str,
}

fn config_error(field: &'static str, reason: &'static str) -> ConfigError {
    ConfigError { field, reason }
}

impl SimConfig {
    pub fn with_seed(&self, seed: u64) -> SimConfig {
        SimConfig { seed, ..self.clone() }
    }

    pub fn offer_points(&self) -> usize {
        self.rounds_schedule.iter().filter(|b| b.offer_after).count()
    }

    pub fn total_opens(&self) -> u64 {
        self.rounds_schedule.iter().map(|b| u64::from(b.opens)).sum()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.board.len() < 2 {
            return Err(config_error("board", "needs at least two prizes"));
        }
        if self.total_opens() > self.board.len() as u64 - 1 {
            return Err(config_error("rounds_schedule", "more opens than prizes outside the player's box"));
        }
        if self.banker_fractions.len() != self.offer_points() {
            return Err(config_error("banker_fractions", "length must equal the number of offer points"));
        }
        if !self.banker_fractions.iter().all(|f| f.is_finite() && *f > 0.0 && *f <= 1.0) {
            return Err(config_error("banker_fractions", "each fraction must lie in (0, 1]"));
        }
        if let ContestantPolicy::Threshold { rho } = self.policy {
            if !rho.is_finite() || rho < 0.0 {
                return Err(config_error("policy", "threshold must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Simulates one episode from `config.seed`.
///
/// The player's box is uniform over the board; every open is uniform over
/// the unopened non-player prizes. Offers are the banker fraction times the
/// current expected value, rounded to the nearest penny. No offers are made
/// after a deal.
pub fn simulate_episode(config: &SimConfig) -> Result<Episode, ConfigError> {
    config.validate()?;
    let mut rng = StreamRng::seed_from_u64(config.seed);

    let board: Vec<Money> = config.board.iter().collect();
    let player = rng.random_range(0..board.len());
    let mut closed: Vec<Money> = board.iter().enumerate().filter(|&(i, _)| i != player).map(|(_, &p)| p).collect();
    let mut remaining = config.board.clone();

    let mut actions = Vec::new();
    let mut round = 0u32;
    let mut fractions = config.banker_fractions.iter();
    let mut dealt = false;

    for block in &config.rounds_schedule {
        for _ in 0..block.opens {
            let prize = closed.remove(rng.random_range(0..closed.len()));
            remaining = remaining.without(prize).expect("closed prizes are on the board");
            round += 1;
            actions.push(Action::Open { round, prize });
        }
        if !block.offer_after {
            continue;
        }
        let fraction = *fractions.next().expect("validated fraction count");
        if dealt {
            continue;
        }
        let mean = expected_value(&remaining).expect("player box always remains");
        let ev = mean.to_f64();
        let amount = Money(libm::round(fraction * ev) as u64);
        actions.push(Action::Offer { round, amount });
        let accept = match config.policy {
            ContestantPolicy::NeverDeal => false,
            ContestantPolicy::Threshold { rho } => amount.pence() as f64 >= rho * ev,
        };
        if accept {
            dealt = true;
            actions.push(Action::Deal { round });
        } else {
            actions.push(Action::NoDeal { round });
        }
    }

    Ok(Episode { id: format!("sim-{:016x}", config.seed), board: config.board.clone(), actions })
}
