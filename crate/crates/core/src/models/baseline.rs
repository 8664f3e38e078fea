//! Frequency, recency and random baselines.

use crate::domain::{Event, ParticipantId, Timestamp};

/// Events per hour since first contact; the elapsed time is floored at one
/// hour.
pub fn frequency_score_times(times: &[Timestamp], t: Timestamp) -> f64 {
    match times.first() {
        None => 0.0,
        Some(&first) => times.len() as f64 / t.hours_since(first).max(1.0),
    }
}

pub fn frequency_score(events: &[Event], t: Timestamp) -> f64 {
    match events.first() {
        None => 0.0,
        Some(first) => events.len() as f64 / t.hours_since(first.timestamp).max(1.0),
    }
}

/// Negated hours since the last event, `-inf` without history.
pub fn recency_score_times(times: &[Timestamp], t: Timestamp) -> f64 {
    match times.last() {
        None => f64::NEG_INFINITY,
        Some(&last) => -t.hours_since(last),
    }
}

pub fn recency_score(events: &[Event], t: Timestamp) -> f64 {
    match events.last() {
        None => f64::NEG_INFINITY,
        Some(last) => -t.hours_since(last.timestamp),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform value in [0, 1) from a hash of (seed, ego, alter, t). Independent
/// of the order in which candidates are scored.
pub fn random_score(ego: ParticipantId, alter: ParticipantId, t: Timestamp, seed: u64) -> f64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ u64::from(ego.0));
    h = splitmix64(h ^ u64::from(alter.0));
    h = splitmix64(h ^ t.0 as u64);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
