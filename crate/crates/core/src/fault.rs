//! Synthetic fault injection: four parametric fault kinds plus emulators of
//! two field failures (a closed densitometer shutter and a stuck
//! communication link replaying stale data).
//!
//! `inject` modifies a copy of one channel over the fault range and returns
//! a ground-truth mask alongside; everything outside the range and the other
//! channel are untouched bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::series::{Channel, SeriesPair};

#[derive(Debug, Clone, PartialEq)]
pub enum FaultKind {
    /// Sensor output clamps to a constant floor.
    CompleteFailure { floor: f64 },
    /// Added Gaussian noise with sd = (noise_sd_mult - 1) * nominal_sd,
    /// where nominal_sd is estimated from pre-fault data.
    PrecisionDegradation { noise_sd_mult: f64 },
    /// Linearly growing offset, slope per sample.
    Drift { slope: f64 },
    /// Constant additive offset.
    Bias { offset: f64 },
    /// Sudden negative step of the given magnitude.
    ShutterDrop { drop: f64 },
    /// The last `replay_len` pre-fault samples repeat over and over.
    StuckReplay { replay_len: usize },
}

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::CompleteFailure { .. } => "complete_failure",
            FaultKind::PrecisionDegradation { .. } => "precision_degradation",
            FaultKind::Drift { .. } => "drift",
            FaultKind::Bias { .. } => "bias",
            FaultKind::ShutterDrop { .. } => "shutter_drop",
            FaultKind::StuckReplay { .. } => "stuck_replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub kind: FaultKind,
    /// Fault onset, as a sample index of the series.
    pub start: i64,
    /// Fault length in samples; `None` runs to the end of the series.
    pub duration: Option<usize>,
    pub channel: Channel,
    /// Used by PrecisionDegradation only.
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("invalid fault spec: {0}")]
    InvalidSpec(String),
    #[error("stuck replay needs {replay_len} samples before the fault, have {available}")]
    ReplayWindowUnavailable { replay_len: usize, available: usize },
}

/// Applies `spec` to a copy of `pair`. Returns the faulted series and a
/// boolean mask, one entry per record, true exactly on the fault range.
pub fn inject(pair: &SeriesPair, spec: &FaultSpec) -> Result<(SeriesPair, Vec<bool>), FaultError> {
    let first = pair.start_index();
    let last = pair.end_index();
    if spec.start < first || spec.start > last {
        return Err(FaultError::InvalidSpec(format!(
            "fault start {} outside series range {first}..={last}",
            spec.start
        )));
    }
    let fault_end = match spec.duration {
        Some(d) => {
            if d == 0 {
                return Err(FaultError::InvalidSpec("duration must be > 0".into()));
            }
            let end = spec.start + d as i64;
            if end > last + 1 {
                return Err(FaultError::InvalidSpec(format!(
                    "fault range {}..{end} exceeds series end {last}",
                    spec.start
                )));
            }
            end
        }
        None => last + 1,
    };
    let start_pos = (spec.start - first) as usize;
    let end_pos = (fault_end - first) as usize;

    let mut records = pair.records().to_vec();
    let read = |r: &crate::series::Record| match spec.channel {
        Channel::C => r.c,
        Channel::G => r.g,
    };

    match &spec.kind {
        FaultKind::CompleteFailure { floor } => {
            for r in &mut records[start_pos..end_pos] {
                set(r, spec.channel, *floor);
            }
        }
        FaultKind::PrecisionDegradation { noise_sd_mult } => {
            if *noise_sd_mult <= 1.0 {
                return Err(FaultError::InvalidSpec("noise_sd_mult must be > 1".into()));
            }
            if start_pos < 2 {
                return Err(FaultError::InvalidSpec(
                    "precision degradation needs pre-fault data to estimate nominal sd".into(),
                ));
            }
            // nominal sd from first differences of the pre-fault range
            let pre: Vec<f64> = records[..start_pos].iter().map(&read).collect();
            let diffs: Vec<f64> = pre.windows(2).map(|w| w[1] - w[0]).collect();
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64;
            let nominal_sd = (var / 2.0).sqrt();
            let added_sd = (noise_sd_mult - 1.0) * nominal_sd;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for r in &mut records[start_pos..end_pos] {
                let noise: f64 = rng.sample::<f64, _>(StandardNormal) * added_sd;
                add(r, spec.channel, noise);
            }
        }
        FaultKind::Drift { slope } => {
            for (i, r) in records[start_pos..end_pos].iter_mut().enumerate() {
                add(r, spec.channel, slope * i as f64);
            }
        }
        FaultKind::Bias { offset } => {
            for r in &mut records[start_pos..end_pos] {
                add(r, spec.channel, *offset);
            }
        }
        FaultKind::ShutterDrop { drop } => {
            if *drop <= 0.0 {
                return Err(FaultError::InvalidSpec("drop must be > 0".into()));
            }
            for r in &mut records[start_pos..end_pos] {
                add(r, spec.channel, -drop);
            }
        }
        FaultKind::StuckReplay { replay_len } => {
            if *replay_len == 0 {
                return Err(FaultError::InvalidSpec("replay_len must be >= 1".into()));
            }
            if start_pos < *replay_len {
                return Err(FaultError::ReplayWindowUnavailable {
                    replay_len: *replay_len,
                    available: start_pos,
                });
            }
            let replay: Vec<f64> = records[start_pos - replay_len..start_pos]
                .iter()
                .map(&read)
                .collect();
            for (i, r) in records[start_pos..end_pos].iter_mut().enumerate() {
                set(r, spec.channel, replay[i % replay_len]);
            }
        }
    }

    let mut mask = vec![false; records.len()];
    for (i, (flag, r)) in mask.iter_mut().zip(&mut records).enumerate() {
        *flag = i >= start_pos && i < end_pos;
        r.fault = Some(*flag);
    }

    let faulted = SeriesPair::new(pair.name.clone(), records)
        .expect("injection preserves index invariants");
    Ok((faulted, mask))
}

fn set(r: &mut crate::series::Record, channel: Channel, v: f64) {
    match channel {
        Channel::C => r.c = v,
        Channel::G => r.g = v,
    }
}

fn add(r: &mut crate::series::Record, channel: Channel, v: f64) {
    match channel {
        Channel::C => r.c += v,
        Channel::G => r.g += v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Record;

    fn pair(len: usize) -> SeriesPair {
        let records = (0..len)
            .map(|i| Record::new(i as i64, (i as f64) * 0.5, 1.0 + (i as f64) * 0.25))
            .collect();
        SeriesPair::new("test", records).unwrap()
    }

    fn spec(kind: FaultKind, start: i64, duration: Option<usize>) -> FaultSpec {
        FaultSpec { kind, start, duration, channel: Channel::G, seed: 99 }
    }

    #[test]
    fn zero_bias_changes_nothing_but_marks_mask() {
        let p = pair(20);
        let (faulted, mask) = inject(&p, &spec(FaultKind::Bias { offset: 0.0 }, 5, Some(10))).unwrap();
        for (a, b) in p.records().iter().zip(faulted.records()) {
            assert_eq!(a.g.to_bits(), b.g.to_bits());
            assert_eq!(a.c.to_bits(), b.c.to_bits());
        }
        assert_eq!(mask.iter().filter(|&&m| m).count(), 10);
        assert!(mask[5] && mask[14] && !mask[4] && !mask[15]);
    }

    #[test]
    fn complete_failure_open_ended() {
        let records = (0..20).map(|i| Record::new(i, 0.0, 1.0)).collect();
        let p = SeriesPair::new("ones", records).unwrap();
        let (faulted, _) =
            inject(&p, &spec(FaultKind::CompleteFailure { floor: 0.0 }, 10, None)).unwrap();
        for r in faulted.records() {
            assert_eq!(r.g, if r.t >= 10 { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn stuck_replay_repeats_pre_fault_segment() {
        let p = pair(120);
        let (faulted, _) =
            inject(&p, &spec(FaultKind::StuckReplay { replay_len: 4 }, 100, None)).unwrap();
        let g_orig = p.channel(Channel::G);
        let g = faulted.channel(Channel::G);
        for t in 100..120 {
            assert_eq!(g[t], g_orig[96 + (t - 100) % 4]);
        }
        // exact periodicity inside the fault range
        for t in 104..120 {
            assert_eq!(g[t].to_bits(), g[t - 4].to_bits());
        }
    }

    #[test]
    fn stuck_replay_needs_history() {
        let p = pair(20);
        assert!(matches!(
            inject(&p, &spec(FaultKind::StuckReplay { replay_len: 10 }, 5, None)),
            Err(FaultError::ReplayWindowUnavailable { .. })
        ));
    }

    #[test]
    fn other_channel_and_outside_range_untouched() {
        let p = pair(50);
        let (faulted, _) =
            inject(&p, &spec(FaultKind::Drift { slope: 0.1 }, 20, Some(10))).unwrap();
        for (a, b) in p.records().iter().zip(faulted.records()) {
            assert_eq!(a.c.to_bits(), b.c.to_bits());
            if b.t < 20 || b.t >= 30 {
                assert_eq!(a.g.to_bits(), b.g.to_bits());
            }
        }
        // drift grows linearly from onset
        assert_eq!(faulted.records()[20].g, p.records()[20].g);
        assert!((faulted.records()[29].g - p.records()[29].g - 0.9).abs() < 1e-12);
    }

    #[test]
    fn bias_round_trips_with_inverse_on_dyadic_values() {
        let records = (0..30).map(|i| Record::new(i, 0.25, 0.5 + i as f64)).collect();
        let p = SeriesPair::new("dyadic", records).unwrap();
        let (f1, _) = inject(&p, &spec(FaultKind::Bias { offset: 2.5 }, 10, Some(5))).unwrap();
        let (f2, _) = inject(&f1, &spec(FaultKind::Bias { offset: -2.5 }, 10, Some(5))).unwrap();
        for (a, b) in p.records().iter().zip(f2.records()) {
            assert_eq!(a.g.to_bits(), b.g.to_bits());
        }
    }

    #[test]
    fn precision_degradation_is_seeded_and_inflates_spread() {
        let records = (0..200)
            .map(|i| Record::new(i, 0.0, (i as f64 * 0.7).sin()))
            .collect();
        let p = SeriesPair::new("wavy", records).unwrap();
        let s = spec(FaultKind::PrecisionDegradation { noise_sd_mult: 3.0 }, 100, Some(50));
        let (a, _) = inject(&p, &s).unwrap();
        let (b, _) = inject(&p, &s).unwrap();
        assert_eq!(a, b);
        let changed = a
            .records()
            .iter()
            .zip(p.records())
            .filter(|(x, y)| x.g != y.g)
            .count();
        assert!(changed > 40, "noise should touch most of the fault range");
    }

    #[test]
    fn rejects_out_of_bounds_spec() {
        let p = pair(20);
        assert!(inject(&p, &spec(FaultKind::Bias { offset: 1.0 }, 25, None)).is_err());
        assert!(inject(&p, &spec(FaultKind::Bias { offset: 1.0 }, 15, Some(10))).is_err());
    }
}
